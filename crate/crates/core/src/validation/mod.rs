//! Candidate validation: undefined-behaviour screening and test-oracle
//! preservation.

mod checks;

use std::fmt;
use std::path::Path;
use std::process::Command;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::program::{ProgramError, SourceProgram};

pub use checks::{builtin_findings, const_eval};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UbCategory {
    MemAccess,
    Shift,
    IndexBound,
    Initialization,
    DivisionByZero,
}

impl UbCategory {
    pub const ALL: [UbCategory; 5] = [
        UbCategory::MemAccess,
        UbCategory::Shift,
        UbCategory::IndexBound,
        UbCategory::Initialization,
        UbCategory::DivisionByZero,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            UbCategory::MemAccess => "mem_access",
            UbCategory::Shift => "shift",
            UbCategory::IndexBound => "index_bound",
            UbCategory::Initialization => "initialization",
            UbCategory::DivisionByZero => "division_by_zero",
        }
    }

    pub fn parse(s: &str) -> Option<UbCategory> {
        Self::ALL.into_iter().find(|c| c.as_str() == s)
    }
}

impl fmt::Display for UbCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Valid,
    SemanticInvalid,
    OracleInvalid,
    Unparseable,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Valid => "valid",
            Verdict::SemanticInvalid => "semantic_invalid",
            Verdict::OracleInvalid => "oracle_invalid",
            Verdict::Unparseable => "unparseable",
        }
    }
}

/// `printf`/`abort` call counts of the original program and of a candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleCounts {
    pub expected_printf: usize,
    pub found_printf: usize,
    pub expected_abort: usize,
    pub found_abort: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cause {
    Ub(UbCategory),
    Oracle(OracleCounts),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evidence {
    pub line: u32,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub verdict: Verdict,
    pub cause: Option<Cause>,
    pub evidence: Option<Evidence>,
}

impl ValidationReport {
    pub fn valid() -> Self {
        ValidationReport {
            verdict: Verdict::Valid,
            cause: None,
            evidence: None,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.verdict == Verdict::Valid
    }

    pub fn ub_category(&self) -> Option<UbCategory> {
        match self.cause {
            Some(Cause::Ub(c)) => Some(c),
            _ => None,
        }
    }

    fn unparseable(err: &ProgramError) -> Self {
        let line = match err {
            ProgramError::Syntax { line, .. } => *line,
            _ => 0,
        };
        ValidationReport {
            verdict: Verdict::Unparseable,
            cause: None,
            evidence: Some(Evidence {
                line,
                note: err.to_string(),
            }),
        }
    }
}

/// One UB finding, from the built-in checks or an external analyzer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub category: UbCategory,
    pub line: u32,
    pub note: String,
}

#[derive(Debug, Error)]
pub enum ValidationError {
    #[error("analyzer `{command}` failed ({status}): {stderr}")]
    AnalyzerFailure {
        command: String,
        status: String,
        stderr: String,
    },
    #[error("analyzer output line {0:?} is not `category:line:note`")]
    MalformedFinding(String),
    #[error("failing program does not parse: {0}")]
    FailingProgram(ProgramError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// External UB analyzer invoked as `<program> <args...> <file>`.
///
/// It must exit 0 and print one `category:line:note` finding per line.
/// Findings in categories outside the five known ones are ignored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Analyzer {
    pub command: Vec<String>,
}

static TEMP_COUNTER: AtomicU64 = AtomicU64::new(0);

impl Analyzer {
    pub fn new(command: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Analyzer {
            command: command.into_iter().map(Into::into).collect(),
        }
    }

    pub fn run(&self, program: &SourceProgram) -> Result<Vec<Finding>, ValidationError> {
        let n = TEMP_COUNTER.fetch_add(1, Ordering::Relaxed);
        let path = std::env::temp_dir().join(format!("witness-{}-{n}.c", std::process::id()));
        std::fs::write(&path, &program.text)?;
        let result = self.run_on(&path);
        let _ = std::fs::remove_file(&path);
        result
    }

    pub fn run_on(&self, file: &Path) -> Result<Vec<Finding>, ValidationError> {
        let Some((prog, args)) = self.command.split_first() else {
            return Err(ValidationError::AnalyzerFailure {
                command: String::new(),
                status: "empty command".into(),
                stderr: String::new(),
            });
        };
        let out = Command::new(prog)
            .args(args)
            .arg(file)
            .output()
            .map_err(|e| ValidationError::AnalyzerFailure {
                command: self.command.join(" "),
                status: "not started".into(),
                stderr: e.to_string(),
            })?;
        if !out.status.success() {
            return Err(ValidationError::AnalyzerFailure {
                command: self.command.join(" "),
                status: out.status.to_string(),
                stderr: String::from_utf8_lossy(&out.stderr).trim().to_string(),
            });
        }
        parse_findings(&String::from_utf8_lossy(&out.stdout))
    }
}

pub fn parse_findings(output: &str) -> Result<Vec<Finding>, ValidationError> {
    let mut out = Vec::new();
    for raw in output.lines() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.splitn(3, ':');
        let (Some(cat), Some(no)) = (parts.next(), parts.next()) else {
            return Err(ValidationError::MalformedFinding(raw.to_string()));
        };
        let no: u32 = no
            .trim()
            .parse()
            .map_err(|_| ValidationError::MalformedFinding(raw.to_string()))?;
        if let Some(category) = UbCategory::parse(cat.trim()) {
            out.push(Finding {
                category,
                line: no,
                note: parts.next().unwrap_or("").trim().to_string(),
            });
        }
    }
    Ok(out)
}

/// Built-in checks, then the analyzer if one is configured. The finding with
/// the smallest line wins (built-in findings first on equal lines).
pub fn semantic_validate(
    candidate: &SourceProgram,
    analyzer: Option<&Analyzer>,
) -> Result<ValidationReport, ValidationError> {
    let ast = match candidate.parse() {
        Ok(a) => a,
        Err(e) => return Ok(ValidationReport::unparseable(&e)),
    };
    let mut findings = builtin_findings(&ast);
    if let Some(a) = analyzer {
        findings.extend(a.run(candidate)?);
    }
    findings.sort_by_key(|f| f.line);
    Ok(match findings.into_iter().next() {
        None => ValidationReport::valid(),
        Some(f) => ValidationReport {
            verdict: Verdict::SemanticInvalid,
            cause: Some(Cause::Ub(f.category)),
            evidence: Some(Evidence {
                line: f.line,
                note: f.note,
            }),
        },
    })
}

/// Valid iff the candidate has as many `printf` and `abort` calls as the
/// failing program.
pub fn oracle_validate(
    candidate: &SourceProgram,
    failing: &SourceProgram,
) -> Result<ValidationReport, ValidationError> {
    let original = failing.parse().map_err(ValidationError::FailingProgram)?;
    let ast = match candidate.parse() {
        Ok(a) => a,
        Err(e) => return Ok(ValidationReport::unparseable(&e)),
    };
    let counts = OracleCounts {
        expected_printf: original.count_calls("printf"),
        found_printf: ast.count_calls("printf"),
        expected_abort: original.count_calls("abort"),
        found_abort: ast.count_calls("abort"),
    };
    if counts.expected_printf == counts.found_printf && counts.expected_abort == counts.found_abort
    {
        return Ok(ValidationReport::valid());
    }
    let note = format!(
        "expected {} printf / {} abort, found {} printf / {} abort",
        counts.expected_printf, counts.expected_abort, counts.found_printf, counts.found_abort
    );
    Ok(ValidationReport {
        verdict: Verdict::OracleInvalid,
        cause: Some(Cause::Oracle(counts)),
        evidence: Some(Evidence { line: 0, note }),
    })
}

/// Parse, semantic and oracle checks in that order, stopping at the first
/// failure.
pub fn validate(
    candidate: &SourceProgram,
    failing: &SourceProgram,
    analyzer: Option<&Analyzer>,
) -> Result<ValidationReport, ValidationError> {
    let semantic = semantic_validate(candidate, analyzer)?;
    if !semantic.is_valid() {
        return Ok(semantic);
    }
    oracle_validate(candidate, failing)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::fixtures;

    fn prog(src: &str) -> SourceProgram {
        SourceProgram::new("c", src).unwrap()
    }

    #[test]
    fn five_categories() {
        assert_eq!(UbCategory::ALL.len(), 5);
        for c in UbCategory::ALL {
            assert_eq!(UbCategory::parse(c.as_str()), Some(c));
        }
    }

    #[test]
    fn unparseable_candidate() {
        let r = semantic_validate(&prog("int main(){ x = ; }"), None).unwrap();
        assert_eq!(r.verdict, Verdict::Unparseable);
        assert_eq!(r.evidence.unwrap().line, 1);
    }

    #[test]
    fn oracle_identity_and_mismatch() {
        let f = prog(fixtures::SHIFT_UB);
        assert!(oracle_validate(&f, &f).unwrap().is_valid());
        let dropped = prog(&fixtures::SHIFT_UB.replace("printf (\"%d\\n\", c);", ";"));
        let r = oracle_validate(&dropped, &f).unwrap();
        assert_eq!(r.verdict, Verdict::OracleInvalid);
        let Some(Cause::Oracle(c)) = r.cause else {
            panic!()
        };
        assert_eq!((c.expected_printf, c.found_printf), (1, 0));
        // swapping the arguments swaps expected and found
        let Some(Cause::Oracle(s)) = oracle_validate(&f, &dropped).unwrap().cause else {
            panic!()
        };
        assert_eq!((s.expected_printf, s.found_printf), (0, 1));
    }

    #[test]
    fn finding_lines() {
        let f = parse_findings("mem_access:12:out-of-bound read\nsigned_overflow:3:x\n\n").unwrap();
        assert_eq!(
            f,
            vec![Finding {
                category: UbCategory::MemAccess,
                line: 12,
                note: "out-of-bound read".into()
            }]
        );
        assert!(matches!(
            parse_findings("garbage"),
            Err(ValidationError::MalformedFinding(_))
        ));
    }

    #[test]
    fn external_analyzer_findings_merge() {
        let a = Analyzer::new(["sh", "-c", "echo 'division_by_zero:1:from tool'", "sh"]);
        let r = semantic_validate(&prog("int main(){ return 0; }"), Some(&a)).unwrap();
        assert_eq!(r.ub_category(), Some(UbCategory::DivisionByZero));
        let failing = Analyzer::new(["sh", "-c", "exit 3", "sh"]);
        assert!(matches!(
            semantic_validate(&prog("int main(){ return 0; }"), Some(&failing)),
            Err(ValidationError::AnalyzerFailure { .. })
        ));
    }
}
