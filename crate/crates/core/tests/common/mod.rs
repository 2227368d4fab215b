//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;
use witness_core::harness::CoverageSpectrum;
use witness_core::orchestrator::RunConfig;
use witness_core::program::lexer::{tokenize, TokenKind};

pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

pub fn s1_config(out: &Path) -> RunConfig {
    let mut c = RunConfig::load(&data_dir().join("s1/config.json")).unwrap();
    c.out_dir = out.to_path_buf();
    c
}

pub type Stmt = (String, u32);

pub fn spectrum(stmts: &[Stmt]) -> CoverageSpectrum {
    let mut s = CoverageSpectrum::new();
    for (f, l) in stmts {
        s.insert(f, *l);
    }
    s
}

/// A random set of statements over `files` files with lines `1..=lines`.
pub fn random_stmts(rng: &mut impl Rng, files: usize, lines: u32, density: f64) -> Vec<Stmt> {
    let mut out = Vec::new();
    for f in 0..files {
        for l in 1..=lines {
            if rng.random_bool(density) {
                out.push((format!("f{f}.c"), l));
            }
        }
    }
    out
}

// ---- SBFL, straight from the definitions ----

/// (file, score, rank) in report order.
pub fn oracle_ranking(failing: &[Stmt], passing: &[Vec<Stmt>]) -> Vec<(String, f64, usize)> {
    let mut files: Vec<&String> = failing.iter().map(|(f, _)| f).collect();
    files.sort();
    files.dedup();
    let mut scored = Vec::new();
    for file in files {
        let mut lines: Vec<u32> = failing
            .iter()
            .filter(|(f, _)| f == file)
            .map(|(_, l)| *l)
            .collect();
        lines.sort();
        lines.dedup();
        let mut total = 0.0;
        for line in &lines {
            let ep = passing
                .iter()
                .filter(|p| p.iter().any(|(f, l)| f == file && l == line))
                .count();
            total += 1.0 / ((1 + ep) as f64).sqrt();
        }
        scored.push((file.clone(), total / lines.len() as f64));
    }
    let rounded = |x: f64| (x * 1e12).round() as i64;
    let mut out: Vec<(String, f64, usize)> = scored
        .iter()
        .map(|(f, s)| {
            let rank = scored
                .iter()
                .filter(|(_, o)| rounded(*o) >= rounded(*s))
                .count();
            (f.clone(), *s, rank)
        })
        .collect();
    out.sort_by(|a, b| a.2.cmp(&b.2).then_with(|| a.0.cmp(&b.0)));
    out
}

// ---- spectra in exact arithmetic ----

fn set_of(s: &CoverageSpectrum) -> BTreeSet<(String, u32)> {
    s.pairs().map(|(f, l)| (f.to_string(), l)).collect()
}

pub fn rat_dist(a: &CoverageSpectrum, b: &CoverageSpectrum) -> BigRational {
    let (a, b) = (set_of(a), set_of(b));
    let union = a.union(&b).count();
    if union == 0 {
        return BigRational::zero();
    }
    let inter = a.intersection(&b).count();
    BigRational::from_integer(1.into()) - BigRational::new(BigInt::from(inter), BigInt::from(union))
}

/// (Q, sim, div) as exact rationals.
pub fn rat_quality(
    failing: &CoverageSpectrum,
    passing: &[CoverageSpectrum],
    alpha: f64,
) -> (BigRational, BigRational, BigRational) {
    let one = BigRational::from_integer(1.into());
    let n = passing.len();
    let mut sim = BigRational::zero();
    for p in passing {
        sim += &one - rat_dist(p, failing);
    }
    sim /= BigRational::from_integer(n.into());
    let mut div = BigRational::zero();
    if n > 1 {
        for i in 0..n {
            for j in i + 1..n {
                div += rat_dist(&passing[i], &passing[j]);
            }
        }
        div /= BigRational::from_integer((n * (n - 1) / 2).into());
    }
    let a = BigRational::from_float(alpha).unwrap();
    let q = BigRational::from_integer(n.into()) * (&a * &div + (&one - &a) * &sim);
    (q, sim, div)
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap()
}

// ---- def-use counting over raw tokens ----

const TYPE_WORDS: &[&str] = &[
    "int", "short", "long", "char", "unsigned", "signed", "void", "static", "volatile", "const",
    "extern",
];

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct Counts {
    pub def: usize,
    pub uses: usize,
}

/// Def/use counts per variable name from a linear scan of the token stream.
/// Covers the constructs of the small test programs: declarations with
/// initializers, plain and compound assignment, `++`/`--`, subscripts,
/// `&x` (neither def nor use) and stores through a pointer initialized to
/// `&x` (a def of `x`).
pub fn token_def_use(src: &str) -> BTreeMap<String, Counts> {
    let toks: Vec<String> = tokenize(src)
        .unwrap()
        .into_iter()
        .filter_map(|t| match t.kind {
            TokenKind::Ident(s) => Some(s),
            TokenKind::Keyword(k) => Some(k.to_string()),
            TokenKind::Int { text, .. } => Some(text),
            TokenKind::Punct(p) => Some(p.to_string()),
            TokenKind::Str(_) => Some("\"str\"".to_string()),
            TokenKind::Eof => None,
            _ => Some("?".to_string()),
        })
        .collect();
    let is_type = |t: &str| TYPE_WORDS.contains(&t);
    let mut counts: BTreeMap<String, Counts> = BTreeMap::new();
    let mut pointee: BTreeMap<String, String> = BTreeMap::new();
    let mut declarator_names = BTreeSet::new();

    // pass 1: declarations
    let mut i = 0;
    while i < toks.len() {
        if !is_type(&toks[i])
            || (i > 0 && (is_type(&toks[i - 1]) || toks[i - 1] == "(" && toks[i] == "void"))
        {
            i += 1;
            continue;
        }
        let mut j = i;
        while j < toks.len() && is_type(&toks[j]) {
            j += 1;
        }
        // declarator list up to `;` (or a function definition / parameter)
        loop {
            let mut ptr = false;
            while toks[j] == "*" {
                ptr = true;
                j += 1;
            }
            let name = toks[j].clone();
            if toks[j + 1] == "("
                || toks[j + 1] == ")"
                || toks[j + 1] == ","
                    && toks
                        .get(i.wrapping_sub(1))
                        .is_some_and(|t| t == "(" || t == ",")
            {
                break;
            }
            declarator_names.insert(j);
            counts.entry(name.clone()).or_default();
            j += 1;
            while toks[j] == "[" {
                while toks[j] != "]" {
                    j += 1;
                }
                j += 1;
            }
            if toks[j] == "=" {
                counts.get_mut(&name).unwrap().def += 1;
                j += 1;
                if ptr && toks[j] == "&" {
                    pointee.insert(name.clone(), toks[j + 1].clone());
                }
                let mut depth = 0i32;
                while !(depth == 0 && (toks[j] == "," || toks[j] == ";")) {
                    match toks[j].as_str() {
                        "(" | "{" | "[" => depth += 1,
                        ")" | "}" | "]" => depth -= 1,
                        _ => {}
                    }
                    j += 1;
                }
            }
            if toks[j] == "," {
                j += 1;
                continue;
            }
            break;
        }
        i = j;
    }

    // pass 2: occurrences
    let vars: BTreeSet<String> = counts.keys().cloned().collect();
    let compound = ["+=", "-=", "*=", "/=", "%=", "<<=", ">>=", "&=", "|=", "^="];
    for k in 0..toks.len() {
        let name = &toks[k];
        if !vars.contains(name) || declarator_names.contains(&k) {
            continue;
        }
        let prev = if k > 0 { toks[k - 1].as_str() } else { "" };
        let prev2 = if k > 1 { toks[k - 2].as_str() } else { "" };
        if prev == "&" && matches!(prev2, "=" | "(" | "," | "return") {
            continue;
        }
        // skip past subscripts to find what follows the lvalue
        let mut end = k + 1;
        let mut subscripted = false;
        while toks[end] == "[" {
            subscripted = true;
            let mut depth = 0;
            loop {
                match toks[end].as_str() {
                    "[" => depth += 1,
                    "]" => depth -= 1,
                    _ => {}
                }
                end += 1;
                if depth == 0 {
                    break;
                }
            }
        }
        let next = toks[end].as_str();
        let _ = subscripted;
        if prev == "*" && next == "=" && matches!(prev2, ";" | "{" | "}" | ")") {
            if let Some(target) = pointee.get(name) {
                counts.get_mut(target).unwrap().def += 1;
            }
            continue;
        }
        let c = counts.get_mut(name).unwrap();
        if next == "++" || next == "--" || prev == "++" || prev == "--" || compound.contains(&next)
        {
            c.def += 1;
            c.uses += 1;
        } else if next == "=" {
            c.def += 1;
        } else {
            c.uses += 1;
        }
    }
    counts
}
