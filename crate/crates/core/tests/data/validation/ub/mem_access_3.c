int printf(const char *, ...);
int a;
short int b = 1;

int main() {
  int *c = &b;
  if (*c)
    a = 1;
  printf("%d\n", a);
  return 0;
}
