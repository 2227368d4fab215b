int printf(const char *, ...);
int a[4];
int b;

int main() {
  b = *(a + 6);
  printf("%d\n", b);
  return 0;
}
