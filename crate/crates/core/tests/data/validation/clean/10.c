int printf(const char *, ...);
int a;

int main() {
  int k;
  k = 2;
  a = a + k;
  printf("%d\n", a);
  return 0;
}
