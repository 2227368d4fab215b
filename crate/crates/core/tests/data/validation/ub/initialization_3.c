int printf(const char *, ...);
int g;

void foo() {
  short s;
  g = s;
}

int main() {
  foo();
  printf("%d\n", g);
  return 0;
}
