int printf(const char *, ...);
int a, b = 1;

int main() {
  a = b << 30;
  printf("%d\n", a);
  return 0;
}
