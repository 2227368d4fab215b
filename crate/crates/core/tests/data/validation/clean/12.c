int printf(const char *, ...);
int a, b;

int main() {
  while (a < 10) {
    if (a % 2)
      b = b + a;
    a++;
  }
  printf("%d\n", b);
  return 0;
}
