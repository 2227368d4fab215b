//! Transcribed example programs shared by unit tests, the acceptance suite and
//! the Python smoke test.

/// LLVM bug #16041 reproducer (wrong code at -O3).
pub const SAMPLE_FAILING: &str = "short s;int a, b, c;
volatile int v;
static int u[] = {0,0,0,0,0,1};

void foo() {
  int i,j;
  for (; b <= 0; ++b) {
    int k; int d = 0;
    for (; d <= 5; d++) {
      int *l = &c;
      int e = 0;
      for (; e <= 0; e++) {
        int *m = &k;
        unsigned int n = u[d];
        i = !a ? n : n / a;
        j = s ? 0 : (1 >> v);
        *m = j;
      }
      *l = k < i;
    }
  }
}
int main() {
  foo();
  return 0;
}
";

/// Witness variant of [`SAMPLE_FAILING`] with an inserted if/else chain.
pub const SAMPLE_PASSING: &str = "short s;int a, b, c;
volatile int v;
static int u[] = {0,0,0,0,0,1};

void foo() {
  int i,j;
  for (; b <= 0; ++b) {
    int k; int d = 0;
    for (; d <= 5; d++) {
      int *l = &c;
      int e = 0;
      for (; e <= 0; e++) {
        int *m = &k;
        unsigned int n = u[d];
        i = !a ? n : n / a;
        j = s ? 0 : (1 >> v);
        *m = j;
        if (a==0) v = s;
        else if(a>10) s=a+1;
        else {s = 1;}
      }
      *l = k < i;
    }
  }
}
int main() {
  foo();
  return 0;
}
";

/// Variant with an invalid shift in line 11 (LLVM bug #18000 study case).
pub const SHIFT_UB: &str = "int a, b, c, d; char e;
void foo () { a = 0; }

int main (){
  unsigned char f;
  for (; b < 1; b++){
    for (e = 1; e >= 0; e--){
      d = 0;
      if (a){ break; }
      f = 179 * e;
      c = f << (-1);
      foo ();
    }
  }
  printf (\"%d\\n\", c);
  return 0;
}
";

/// Variant reading an `int` through a pointer to a `short` (GCC bug #64682 study case).
pub const MEM_ACCESS_UB: &str = "int a;
short int b = 1;

int main () {
  int i;
  for (i = 0; i < 56; i++) {
    for (; a; a--) {
      ;
    }
  }
  int *c = &b;
  if (*c){
    *c=1;
  }
  printf (\"%d\\n\", a);
  return 0;
}
";

pub const ALL: &[&str] = &[SAMPLE_FAILING, SAMPLE_PASSING, SHIFT_UB, MEM_ACCESS_UB];
