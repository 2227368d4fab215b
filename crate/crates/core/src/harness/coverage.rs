//! Line-coverage spectra and the gcov-style text report format.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

/// Covered statement lines per compiler source file.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoverageSpectrum(pub BTreeMap<String, BTreeSet<u32>>);

impl CoverageSpectrum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, file: &str, line: u32) {
        if line > 0 {
            self.0.entry(file.to_string()).or_default().insert(line);
        }
    }

    pub fn extend(&mut self, file: &str, lines: impl IntoIterator<Item = u32>) {
        for l in lines {
            self.insert(file, l);
        }
    }

    pub fn remove(&mut self, file: &str, lines: &BTreeSet<u32>) {
        if let Some(set) = self.0.get_mut(file) {
            set.retain(|l| !lines.contains(l));
            if set.is_empty() {
                self.0.remove(file);
            }
        }
    }

    pub fn union(&mut self, other: &CoverageSpectrum) {
        for (f, lines) in &other.0 {
            self.0.entry(f.clone()).or_default().extend(lines);
        }
    }

    pub fn contains(&self, file: &str, line: u32) -> bool {
        self.0.get(file).is_some_and(|s| s.contains(&line))
    }

    pub fn covers_file(&self, file: &str) -> bool {
        self.0.get(file).is_some_and(|s| !s.is_empty())
    }

    /// Number of covered (file, line) pairs.
    pub fn len(&self) -> usize {
        self.0.values().map(BTreeSet::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&str, u32)> {
        self.0
            .iter()
            .flat_map(|(f, ls)| ls.iter().map(move |l| (f.as_str(), *l)))
    }
}

/// Covered lines of one report in the `hits:line:text` format. `#####`,
/// `=====` and `-` mark uncovered or non-executable lines; line 0 carries
/// header records.
pub fn parse_line_report(text: &str) -> BTreeSet<u32> {
    parse_report(text).1
}

/// Like [`parse_line_report`], also returning the `Source:` header if present.
pub fn parse_report(text: &str) -> (Option<String>, BTreeSet<u32>) {
    let mut source = None;
    let mut covered = BTreeSet::new();
    for raw in text.lines() {
        let mut parts = raw.splitn(3, ':');
        let (Some(hits), Some(line), rest) = (parts.next(), parts.next(), parts.next()) else {
            continue;
        };
        let Ok(line) = line.trim().parse::<u32>() else {
            continue;
        };
        let hits = hits.trim().trim_end_matches('*');
        if line == 0 {
            if let Some(src) = rest.and_then(|r| r.strip_prefix("Source:")) {
                source = Some(src.trim().to_string());
            }
            continue;
        }
        if hits == "-" || hits.starts_with('#') || hits.starts_with('=') {
            continue;
        }
        if hits.parse::<u64>().map(|h| h > 0).unwrap_or(false) {
            covered.insert(line);
        }
    }
    (source, covered)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_format() {
        let r = "        -:    0:Source:gcc/fold-const.c\n        5:   12:  x = y;\n    #####:   13:  z = 1;\n        -:   14:}\n       1*:   15:  w();\n";
        let (src, lines) = parse_report(r);
        assert_eq!(src.as_deref(), Some("gcc/fold-const.c"));
        assert_eq!(lines, BTreeSet::from([12, 15]));
        assert_eq!(parse_line_report("5: 12: x = y;"), BTreeSet::from([12]));
        assert!(parse_line_report("#####: 13: …").is_empty());
    }

    #[test]
    fn union_is_monotone() {
        let mut a = CoverageSpectrum::new();
        a.extend("f.c", [1, 2]);
        let mut b = CoverageSpectrum::new();
        b.extend("f.c", [2, 3]);
        b.insert("g.c", 7);
        let before = a.clone();
        a.union(&b);
        assert!(before.pairs().all(|(f, l)| a.contains(f, l)));
        assert_eq!(a.len(), 4);
    }
}
