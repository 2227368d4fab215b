int printf(const char *, ...);
int a;

int main() {
  int k;
  if (a)
    a = 1;
  a = a + k;
  k = 2;
  printf("%d\n", a);
  return 0;
}
