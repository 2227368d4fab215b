int printf(const char *, ...);
int a, c = 3;

int main() {
  int i;
  for (i = 0; i < 4; i++)
    a = a + c % (2 - 2);
  printf("%d\n", a);
  return 0;
}
