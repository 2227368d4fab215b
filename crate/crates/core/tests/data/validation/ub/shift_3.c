int printf(const char *, ...);
int a;

int main() {
  int i;
  for (i = 0; i < 2; i++)
    a = (-4) << 2;
  printf("%d\n", a);
  return 0;
}
