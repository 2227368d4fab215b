int printf(const char *, ...);
int u[4] = {1, 2, 3, 4};
int a;

int main() {
  a = u[4];
  printf("%d\n", a);
  return 0;
}
