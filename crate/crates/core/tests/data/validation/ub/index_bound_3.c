int printf(const char *, ...);
int t[3] = {0, 1, 2};
int s;

int main() {
  int i;
  for (i = 0; i < 3; i++)
    s = s + t[i];
  s = s + t[-1];
  printf("%d\n", s);
  return 0;
}
