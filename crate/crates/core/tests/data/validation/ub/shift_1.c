int printf(const char *, ...);
int a;

int main() {
  a = 1 << 31;
  printf("%d\n", a);
  return 0;
}
