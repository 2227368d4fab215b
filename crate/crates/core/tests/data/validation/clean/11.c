int printf(const char *, ...);
int g;

void foo(int n) {
  g = g + n;
}

int main() {
  int i;
  for (i = 0; i < 3; i++)
    foo(i);
  printf("%d\n", g);
  return 0;
}
