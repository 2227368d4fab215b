int printf(const char *, ...);
int a;

int main() {
  int *p = &a;
  *p = 3;
  printf("%d\n", a);
  return 0;
}
