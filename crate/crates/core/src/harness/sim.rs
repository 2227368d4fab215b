//! Simulated compiler: classification and coverage derived from program
//! features by the rules of a scenario file.
//!
//! Evaluation starts from the base coverage with a failing verdict and
//! applies every matching rule in order: `drop`/`add` edit the spectrum,
//! `flip` makes the program passing and `discard` rejects it outright.
//! Passing programs also cover `picks` lines of the noise pool, chosen by a
//! hash of the program text and the seed, which spreads passing spectra the
//! way real mutants do.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::coverage::CoverageSpectrum;
use super::{Backend, Classification, Evaluation, HarnessError};
use crate::program::ast::StmtClass;
use crate::program::lexer::{tokenize, TokenKind};
use crate::program::SourceProgram;

/// A line number or an inclusive `"a-b"` range.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LineSpec {
    One(u32),
    Range(String),
}

impl LineSpec {
    fn expand(&self) -> Result<Vec<u32>, HarnessError> {
        let bad = || HarnessError::Scenario(format!("bad line spec {self:?}"));
        let lines = match self {
            LineSpec::One(l) => vec![*l],
            LineSpec::Range(r) => {
                let (a, b) = r.split_once('-').ok_or_else(bad)?;
                let (a, b): (u32, u32) = (
                    a.trim().parse().map_err(|_| bad())?,
                    b.trim().parse().map_err(|_| bad())?,
                );
                if a > b {
                    return Err(bad());
                }
                (a..=b).collect()
            }
        };
        if lines.contains(&0) {
            return Err(bad());
        }
        Ok(lines)
    }
}

pub type FileLines = BTreeMap<String, Vec<LineSpec>>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predicate {
    Always,
    /// A token with exactly this spelling occurs.
    ContainsToken(String),
    /// The token occurs at least `count` times.
    TokenCountAtLeast {
        token: String,
        count: usize,
    },
    /// At least `count` statements of the given kind (`if`, `for`, `call`, ...).
    StmtCountAtLeast {
        kind: String,
        count: usize,
    },
    /// At least `count` calls to `name`.
    CallsAtLeast {
        name: String,
        count: usize,
    },
    All(Vec<Predicate>),
    Any(Vec<Predicate>),
    Not(Box<Predicate>),
}

struct Features {
    tokens: BTreeMap<String, usize>,
    stmt_counts: BTreeMap<&'static str, usize>,
    ast: crate::program::Ast,
}

impl Predicate {
    fn check(&self) -> Result<(), HarnessError> {
        match self {
            Predicate::StmtCountAtLeast { kind, .. } if StmtClass::parse(kind).is_none() => Err(
                HarnessError::Scenario(format!("unknown statement kind `{kind}`")),
            ),
            Predicate::All(ps) | Predicate::Any(ps) => ps.iter().try_for_each(Predicate::check),
            Predicate::Not(p) => p.check(),
            _ => Ok(()),
        }
    }

    fn eval(&self, f: &Features) -> bool {
        match self {
            Predicate::Always => true,
            Predicate::ContainsToken(t) => f.tokens.contains_key(t),
            Predicate::TokenCountAtLeast { token, count } => {
                f.tokens.get(token).copied().unwrap_or(0) >= *count
            }
            Predicate::StmtCountAtLeast { kind, count } => {
                f.stmt_counts.get(kind.as_str()).copied().unwrap_or(0) >= *count
            }
            Predicate::CallsAtLeast { name, count } => f.ast.count_calls(name) >= *count,
            Predicate::All(ps) => ps.iter().all(|p| p.eval(f)),
            Predicate::Any(ps) => ps.iter().any(|p| p.eval(f)),
            Predicate::Not(p) => !p.eval(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioRule {
    pub name: String,
    pub when: Predicate,
    #[serde(default)]
    pub flip: bool,
    #[serde(default)]
    pub discard: bool,
    #[serde(default)]
    pub drop: FileLines,
    #[serde(default)]
    pub add: FileLines,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Noise {
    pub pool: FileLines,
    pub picks: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub files: Vec<String>,
    pub faulty_file: String,
    pub base_coverage: FileLines,
    #[serde(default)]
    pub noise: Option<Noise>,
    #[serde(default)]
    pub rules: Vec<ScenarioRule>,
}

fn expand(lines: &FileLines) -> Result<BTreeMap<String, BTreeSet<u32>>, HarnessError> {
    lines
        .iter()
        .map(|(f, specs)| {
            let mut set = BTreeSet::new();
            for s in specs {
                set.extend(s.expand()?);
            }
            Ok((f.clone(), set))
        })
        .collect()
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Scenario, HarnessError> {
        let s: Scenario =
            serde_json::from_str(text).map_err(|e| HarnessError::Scenario(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Scenario, HarnessError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let err = |m: String| Err(HarnessError::Scenario(m));
        let files: BTreeSet<&str> = self.files.iter().map(String::as_str).collect();
        if files.len() != self.files.len() {
            return err("duplicate file in `files`".into());
        }
        if !files.contains(self.faulty_file.as_str()) {
            return err(format!(
                "faulty file {} is not listed in `files`",
                self.faulty_file
            ));
        }
        let mut maps: Vec<(&str, &FileLines)> = vec![("base_coverage", &self.base_coverage)];
        for r in &self.rules {
            if r.flip && r.discard {
                return err(format!("rule `{}` both flips and discards", r.name));
            }
            r.when.check()?;
            maps.push(("drop", &r.drop));
            maps.push(("add", &r.add));
        }
        if let Some(n) = &self.noise {
            if n.pool.contains_key(&self.faulty_file) {
                return err("noise pool must not include the faulty file".into());
            }
            let size: usize = expand(&n.pool)?.values().map(BTreeSet::len).sum();
            if n.picks > size {
                return err(format!("noise picks {} exceed pool size {size}", n.picks));
            }
            maps.push(("noise", &n.pool));
        }
        for (what, m) in maps {
            for f in m.keys() {
                if !files.contains(f.as_str()) {
                    return err(format!("{what} names unknown file {f}"));
                }
            }
            expand(m)?;
        }
        if !expand(&self.base_coverage)?
            .get(&self.faulty_file)
            .is_some_and(|s| !s.is_empty())
        {
            return err("base coverage must cover the faulty file".into());
        }
        Ok(())
    }

    fn features(program: &SourceProgram) -> Option<Features> {
        let ast = program.parse().ok()?;
        let mut tokens = BTreeMap::new();
        let spellings = tokenize(&program.text)
            .ok()?
            .into_iter()
            .filter_map(|t| match t.kind {
                TokenKind::Ident(s) => Some(s),
                TokenKind::Keyword(k) => Some(k.to_string()),
                TokenKind::Int { text, .. } => Some(text),
                TokenKind::Float(t) => Some(t),
                TokenKind::Punct(p) => Some(p.to_string()),
                _ => None,
            });
        for s in spellings {
            *tokens.entry(s).or_insert(0) += 1;
        }
        let mut stmt_counts = BTreeMap::new();
        for s in ast.statements() {
            *stmt_counts.entry(s.class().as_str()).or_insert(0) += 1;
        }
        Some(Features {
            tokens,
            stmt_counts,
            ast,
        })
    }

    /// Names of the rules that match `program`, in order.
    pub fn matching_rules(&self, program: &SourceProgram) -> Vec<&str> {
        match Self::features(program) {
            Some(f) => self
                .rules
                .iter()
                .filter(|r| r.when.eval(&f))
                .map(|r| r.name.as_str())
                .collect(),
            None => Vec::new(),
        }
    }

    /// Outcome when exactly the rules selected by `matched` fire.
    pub fn apply(&self, matched: &[bool], noise_key: &[u8]) -> Result<Evaluation, HarnessError> {
        let mut cov = CoverageSpectrum::new();
        for (f, lines) in expand(&self.base_coverage)? {
            cov.extend(&f, lines);
        }
        let mut class = Classification::Failing;
        for (r, _) in self.rules.iter().zip(matched).filter(|(_, m)| **m) {
            if r.discard {
                return Ok(Evaluation {
                    classification: Classification::Discard,
                    spectrum: None,
                });
            }
            for (f, lines) in expand(&r.drop)? {
                cov.remove(&f, &lines);
            }
            for (f, lines) in expand(&r.add)? {
                cov.extend(&f, lines);
            }
            if r.flip {
                class = Classification::Passing;
            }
        }
        if class == Classification::Passing {
            if let Some(n) = &self.noise {
                let pool: Vec<(String, u32)> = expand(&n.pool)?
                    .into_iter()
                    .flat_map(|(f, ls)| ls.into_iter().map(move |l| (f.clone(), l)))
                    .collect();
                for (f, l) in pick(&pool, n.picks, noise_key) {
                    cov.insert(f, *l);
                }
            }
        }
        Ok(Evaluation {
            classification: class,
            spectrum: Some(cov),
        })
    }

    pub fn simulate(&self, program: &SourceProgram, seed: u64) -> Result<Evaluation, HarnessError> {
        let Some(f) = Self::features(program) else {
            // the compiler rejects what the front end cannot parse
            return Ok(Evaluation {
                classification: Classification::Discard,
                spectrum: None,
            });
        };
        let matched: Vec<bool> = self.rules.iter().map(|r| r.when.eval(&f)).collect();
        let mut key = seed.to_le_bytes().to_vec();
        key.extend_from_slice(program.text.as_bytes());
        self.apply(&matched, &key)
    }
}

/// `k` distinct pool entries ranked by a keyed hash.
fn pick<'a>(pool: &'a [(String, u32)], k: usize, key: &[u8]) -> Vec<(&'a str, &'a u32)> {
    let mut ranked: Vec<([u8; 32], &(String, u32))> = pool
        .iter()
        .map(|e| {
            let mut h = Sha256::new();
            h.update(key);
            h.update(e.0.as_bytes());
            h.update(e.1.to_le_bytes());
            (h.finalize().into(), e)
        })
        .collect();
    ranked.sort();
    ranked
        .into_iter()
        .take(k)
        .map(|(_, e)| (e.0.as_str(), &e.1))
        .collect()
}

pub struct SimulatedBackend {
    pub scenario: Scenario,
    pub seed: u64,
}

impl SimulatedBackend {
    pub fn new(scenario: Scenario, seed: u64) -> Self {
        SimulatedBackend { scenario, seed }
    }
}

impl Backend for SimulatedBackend {
    fn evaluate(&mut self, program: &SourceProgram) -> Result<Evaluation, HarnessError> {
        self.scenario.simulate(program, self.seed)
    }
}
