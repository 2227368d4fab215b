//! Backend driving a real compiler binary and a coverage-instrumented build.

use std::fs::{self, File, OpenOptions};
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitStatus, Stdio};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::coverage::{parse_report, CoverageSpectrum};
use super::{
    classify, Backend, CompileStatus, Evaluation, ExecutionOutcome, HarnessError, OptionRun,
    OracleKind, ProgramRun,
};
use crate::llm::sha256_hex;
use crate::program::SourceProgram;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompilerSpec {
    pub compiler: String,
    /// Bug-triggering options first, then the reference options.
    pub option_sets: Vec<Vec<String>>,
    /// Instrumented compiler; defaults to `compiler`.
    #[serde(default)]
    pub coverage_compiler: Option<String>,
    /// Build tree of the instrumented compiler holding its `.gcda` files.
    #[serde(default)]
    pub coverage_dir: Option<PathBuf>,
    #[serde(default = "default_gcov")]
    pub gcov: Vec<String>,
    pub work_dir: PathBuf,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
}

fn default_gcov() -> Vec<String> {
    vec!["gcov".into()]
}

fn default_timeout() -> f64 {
    10.0
}

impl CompilerSpec {
    pub fn check(&self) -> Result<(), HarnessError> {
        if self.option_sets.is_empty() {
            return Err(HarnessError::Setup(
                "at least one option set is required".into(),
            ));
        }
        if self.compiler.contains('/') && !Path::new(&self.compiler).exists() {
            return Err(HarnessError::Setup(format!(
                "compiler {} does not exist",
                self.compiler
            )));
        }
        if let Some(d) = &self.coverage_dir {
            if !d.is_dir() {
                return Err(HarnessError::Setup(format!(
                    "coverage dir {} does not exist",
                    d.display()
                )));
            }
        }
        Ok(())
    }

    fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs.max(0.001))
    }
}

pub(crate) struct Finished {
    pub status: Option<ExitStatus>,
    pub stdout: String,
    pub stderr: String,
}

/// Runs a command, killing it after `timeout`. `status` is `None` on timeout.
pub(crate) fn run_with_timeout(cmd: &mut Command, timeout: Duration) -> std::io::Result<Finished> {
    #[cfg(unix)]
    std::os::unix::process::CommandExt::process_group(cmd, 0);
    let mut child = cmd
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()?;
    let mut out = child.stdout.take().expect("piped");
    let mut err = child.stderr.take().expect("piped");
    let out_t = std::thread::spawn(move || {
        let mut s = Vec::new();
        let _ = out.read_to_end(&mut s);
        s
    });
    let err_t = std::thread::spawn(move || {
        let mut s = Vec::new();
        let _ = err.read_to_end(&mut s);
        s
    });
    let deadline = Instant::now() + timeout;
    let status = loop {
        if let Some(st) = child.try_wait()? {
            break Some(st);
        }
        if Instant::now() >= deadline {
            // grandchildren may hold the pipes open, so take down the group
            #[cfg(unix)]
            let _ = Command::new("kill")
                .args(["-KILL", "--", &format!("-{}", child.id())])
                .status();
            let _ = child.kill();
            let _ = child.wait();
            break None;
        }
        std::thread::sleep(Duration::from_millis(5));
    };
    if status.is_none() {
        return Ok(Finished {
            status,
            stdout: String::new(),
            stderr: String::new(),
        });
    }
    let stdout = String::from_utf8_lossy(&out_t.join().unwrap_or_default()).into_owned();
    let stderr = String::from_utf8_lossy(&err_t.join().unwrap_or_default()).into_owned();
    Ok(Finished {
        status,
        stdout,
        stderr,
    })
}

fn crashed(status: &ExitStatus, diagnostics: &str) -> bool {
    status.code().is_none()
        || diagnostics.contains("internal compiler error")
        || diagnostics.contains("PLEASE submit a bug report")
        || status.code().is_some_and(|c| c >= 128)
}

/// Exclusive lock on a directory, held while the guard lives.
pub struct DirLock {
    path: PathBuf,
    _file: File,
}

impl DirLock {
    pub fn acquire(dir: &Path, timeout: Duration) -> Result<DirLock, HarnessError> {
        let path = dir.join(".witness.lock");
        let deadline = Instant::now() + timeout;
        loop {
            match OpenOptions::new().write(true).create_new(true).open(&path) {
                Ok(f) => return Ok(DirLock { path, _file: f }),
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                    if Instant::now() >= deadline {
                        return Err(HarnessError::LockTimeout(path.display().to_string()));
                    }
                    std::thread::sleep(Duration::from_millis(20));
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

fn files_with_ext(dir: &Path, ext: &str, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    for entry in fs::read_dir(dir)? {
        let p = entry?.path();
        if p.is_dir() {
            files_with_ext(&p, ext, out)?;
        } else if p.extension().is_some_and(|e| e == ext) {
            out.push(p);
        }
    }
    Ok(())
}

/// Splits concatenated reports at their `Source:` headers.
pub fn parse_reports(text: &str) -> CoverageSpectrum {
    let mut spectrum = CoverageSpectrum::new();
    let mut chunk = String::new();
    let flush = |chunk: &mut String, spectrum: &mut CoverageSpectrum| {
        let (src, lines) = parse_report(chunk);
        if let Some(src) = src {
            spectrum.extend(&src, lines);
        }
        chunk.clear();
    };
    for line in text.lines() {
        let is_header = line
            .splitn(3, ':')
            .nth(2)
            .is_some_and(|r| r.starts_with("Source:"))
            && line.split(':').nth(1).is_some_and(|n| n.trim() == "0");
        if is_header && !chunk.is_empty() {
            flush(&mut chunk, &mut spectrum);
        }
        chunk.push_str(line);
        chunk.push('\n');
    }
    flush(&mut chunk, &mut spectrum);
    spectrum
}

/// Reads every `*.gcov` report under `dir`.
pub fn ingest_report_dir(dir: &Path) -> Result<CoverageSpectrum, HarnessError> {
    let mut files = Vec::new();
    files_with_ext(dir, "gcov", &mut files)?;
    files.sort();
    if files.is_empty() {
        return Err(HarnessError::CoverageUnavailable);
    }
    let mut spectrum = CoverageSpectrum::new();
    for f in files {
        spectrum.union(&parse_reports(&fs::read_to_string(f)?));
    }
    Ok(spectrum)
}

pub struct RealBackend {
    pub spec: CompilerSpec,
    pub oracle: OracleKind,
}

impl RealBackend {
    pub fn new(spec: CompilerSpec, oracle: OracleKind) -> Result<Self, HarnessError> {
        spec.check()?;
        fs::create_dir_all(&spec.work_dir)?;
        Ok(RealBackend { spec, oracle })
    }

    fn source_file(&self, program: &SourceProgram) -> Result<PathBuf, HarnessError> {
        let hash = sha256_hex(&program.text);
        let path = self.spec.work_dir.join(format!("cand-{}.c", &hash[..16]));
        fs::write(&path, &program.text)?;
        Ok(path)
    }

    pub fn execute(&self, program: &SourceProgram) -> Result<ExecutionOutcome, HarnessError> {
        let started = Instant::now();
        let src = self.source_file(program)?;
        let mut runs = Vec::new();
        for (i, opts) in self.spec.option_sets.iter().enumerate() {
            let exe = src.with_extension(format!("{i}.out"));
            let done = run_with_timeout(
                Command::new(&self.spec.compiler)
                    .args(opts)
                    .arg(&src)
                    .arg("-o")
                    .arg(&exe),
                self.spec.timeout(),
            )?;
            let diagnostics = done.stderr;
            let compile = match &done.status {
                None => CompileStatus::TimedOut,
                Some(st) if crashed(st, &diagnostics) => CompileStatus::Crashed,
                Some(st) if !st.success() => CompileStatus::Rejected,
                Some(_) => CompileStatus::Ok,
            };
            let run = if compile == CompileStatus::Ok && self.oracle == OracleKind::WrongCode {
                let r = run_with_timeout(&mut Command::new(&exe), self.spec.timeout())?;
                Some(ProgramRun {
                    exit_code: r.status.and_then(|s| s.code()),
                    stdout: r.stdout,
                    timed_out: r.status.is_none(),
                })
            } else {
                None
            };
            let _ = fs::remove_file(&exe);
            runs.push(OptionRun {
                options: opts.clone(),
                compile,
                diagnostics,
                run,
            });
        }
        Ok(ExecutionOutcome {
            runs,
            wall_ms: started.elapsed().as_millis() as u64,
        })
    }

    /// Compiles with the instrumented build under the bug-triggering options
    /// and reads back its line coverage. Counters are reset first; the build
    /// directory is locked for the duration.
    pub fn collect_coverage(
        &self,
        program: &SourceProgram,
    ) -> Result<CoverageSpectrum, HarnessError> {
        let dir = self
            .spec
            .coverage_dir
            .as_ref()
            .ok_or(HarnessError::CoverageUnavailable)?;
        let _lock = DirLock::acquire(dir, Duration::from_secs(600))?;
        let mut stale = Vec::new();
        files_with_ext(dir, "gcda", &mut stale)?;
        for f in stale {
            fs::remove_file(f)?;
        }
        let src = self.source_file(program)?;
        let compiler = self
            .spec
            .coverage_compiler
            .as_deref()
            .unwrap_or(&self.spec.compiler);
        let obj = src.with_extension("cov.o");
        run_with_timeout(
            Command::new(compiler)
                .args(&self.spec.option_sets[0])
                .arg("-c")
                .arg(&src)
                .arg("-o")
                .arg(&obj),
            self.spec.timeout(),
        )?;
        let _ = fs::remove_file(&obj);
        let mut gcda = Vec::new();
        files_with_ext(dir, "gcda", &mut gcda)?;
        gcda.sort();
        let mut spectrum = CoverageSpectrum::new();
        let (gcov, gcov_args) = self
            .spec
            .gcov
            .split_first()
            .ok_or(HarnessError::CoverageUnavailable)?;
        for f in gcda {
            let parent = f.parent().unwrap_or(dir);
            let done = run_with_timeout(
                Command::new(gcov)
                    .args(gcov_args)
                    .arg("-t")
                    .arg("-o")
                    .arg(parent)
                    .arg(&f)
                    .current_dir(dir),
                Duration::from_secs(120),
            )?;
            spectrum.union(&parse_reports(&done.stdout));
        }
        if spectrum.is_empty() {
            return Err(HarnessError::CoverageUnavailable);
        }
        Ok(spectrum)
    }
}

impl Backend for RealBackend {
    fn evaluate(&mut self, program: &SourceProgram) -> Result<Evaluation, HarnessError> {
        let outcome = self.execute(program)?;
        let classification = classify(&outcome, self.oracle);
        let spectrum = match classification {
            super::Classification::Discard => None,
            _ => Some(self.collect_coverage(program)?),
        };
        Ok(Evaluation {
            classification,
            spectrum,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::Classification;

    fn have(tool: &str) -> bool {
        Command::new(tool).arg("--version").output().is_ok()
    }

    fn spec(dir: &Path, compiler: &str, sets: Vec<Vec<&str>>) -> CompilerSpec {
        CompilerSpec {
            compiler: compiler.into(),
            option_sets: sets
                .into_iter()
                .map(|s| s.into_iter().map(String::from).collect())
                .collect(),
            coverage_compiler: None,
            coverage_dir: None,
            gcov: default_gcov(),
            work_dir: dir.to_path_buf(),
            timeout_secs: 10.0,
        }
    }

    #[test]
    fn wrong_code_with_host_compiler() {
        if !have("gcc") {
            return;
        }
        let dir = tempfile::tempdir().unwrap();
        let b = RealBackend::new(
            spec(
                dir.path(),
                "gcc",
                vec![vec!["-O2", "-w"], vec!["-O0", "-w"]],
            ),
            OracleKind::WrongCode,
        )
        .unwrap();
        let p = SourceProgram::new(
            "p",
            "int printf(const char *, ...);\nint main(){ printf(\"%d\\n\", 42); return 0; }\n",
        )
        .unwrap();
        let o = b.execute(&p).unwrap();
        assert_eq!(classify(&o, OracleKind::WrongCode), Classification::Passing);
        assert_eq!(o.runs[0].run.as_ref().unwrap().stdout, "42\n");
        let bad = SourceProgram::new("q", "int main( {").unwrap();
        assert_eq!(
            classify(&b.execute(&bad).unwrap(), OracleKind::WrongCode),
            Classification::Discard
        );
    }

    #[test]
    fn crashing_compiler_and_timeouts() {
        let dir = tempfile::tempdir().unwrap();
        let script = dir.path().join("cc.sh");
        fs::write(&script, "#!/bin/sh\ncase \"$1\" in\n  -O3) kill -SEGV $$ ;;\n  -slow) sleep 5 ;;\nesac\nexit 0\n").unwrap();
        Command::new("chmod")
            .arg("+x")
            .arg(&script)
            .status()
            .unwrap();
        let s = script.to_str().unwrap();
        let b = RealBackend::new(
            spec(dir.path(), s, vec![vec!["-O3"], vec!["-O0"]]),
            OracleKind::Crash,
        )
        .unwrap();
        let p = SourceProgram::new("p", "int main(){return 0;}").unwrap();
        assert_eq!(
            classify(&b.execute(&p).unwrap(), OracleKind::Crash),
            Classification::Failing
        );
        let mut slow = spec(dir.path(), s, vec![vec!["-slow"], vec!["-O0"]]);
        slow.timeout_secs = 0.2;
        let b = RealBackend::new(slow, OracleKind::Crash).unwrap();
        let started = Instant::now();
        let o = b.execute(&p).unwrap();
        assert_eq!(o.runs[0].compile, CompileStatus::TimedOut);
        assert_eq!(classify(&o, OracleKind::Crash), Classification::Discard);
        assert!(started.elapsed() < Duration::from_secs(4));
    }

    #[test]
    fn coverage_of_an_instrumented_stand_in() {
        if !have("gcc") || !have("gcov") {
            return;
        }
        let dir = tempfile::tempdir().unwrap();
        let build = dir.path().join("build");
        fs::create_dir_all(&build).unwrap();
        // a "compiler" whose own coverage depends on its input
        fs::write(
            build.join("stand_in.c"),
            "#include <stdio.h>\n#include <string.h>\nint main(int argc, char **argv) {\n  char buf[4096] = {0};\n  FILE *f = fopen(argv[argc - 3], \"r\");\n  if (f) { fread(buf, 1, sizeof buf - 1, f); fclose(f); }\n  if (strstr(buf, \"volatile\"))\n    puts(\"v\");\n  else\n    puts(\"n\");\n  return 0;\n}\n",
        )
        .unwrap();
        let ok = Command::new("gcc")
            .args(["--coverage", "-o", "stand_in", "stand_in.c"])
            .current_dir(&build)
            .status()
            .unwrap();
        assert!(ok.success());
        let mut s = spec(
            dir.path(),
            build.join("stand_in").to_str().unwrap(),
            vec![vec!["-O2"]],
        );
        s.coverage_dir = Some(build.clone());
        let b = RealBackend::new(s, OracleKind::Crash).unwrap();
        let plain = b
            .collect_coverage(&SourceProgram::new("a", "int x;").unwrap())
            .unwrap();
        let vol = b
            .collect_coverage(&SourceProgram::new("b", "volatile int x;").unwrap())
            .unwrap();
        let file = plain.0.keys().next().unwrap().clone();
        assert!(file.ends_with("stand_in.c"));
        assert!(plain.contains(&file, 10) && !plain.contains(&file, 8));
        assert!(vol.contains(&file, 8) && !vol.contains(&file, 10));
        // counters were reset between the two programs
        assert!(!build.join(".witness.lock").exists());
    }

    #[test]
    fn lock_excludes_second_holder() {
        let dir = tempfile::tempdir().unwrap();
        let a = DirLock::acquire(dir.path(), Duration::from_millis(50)).unwrap();
        assert!(matches!(
            DirLock::acquire(dir.path(), Duration::from_millis(50)),
            Err(HarnessError::LockTimeout(_))
        ));
        drop(a);
        assert!(DirLock::acquire(dir.path(), Duration::from_millis(50)).is_ok());
    }

    #[test]
    fn report_directory() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            ingest_report_dir(dir.path()),
            Err(HarnessError::CoverageUnavailable)
        ));
        fs::write(
            dir.path().join("a.c.gcov"),
            "-:0:Source:gcc/a.c\n3:10:x\n#####:11:y\n",
        )
        .unwrap();
        let s = ingest_report_dir(dir.path()).unwrap();
        assert!(s.contains("gcc/a.c", 10) && !s.contains("gcc/a.c", 11));
    }
}
