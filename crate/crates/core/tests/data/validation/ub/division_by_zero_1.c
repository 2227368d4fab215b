int printf(const char *, ...);
int a = 5, b;

int main() {
  b = a / 0;
  printf("%d\n", b);
  return 0;
}
