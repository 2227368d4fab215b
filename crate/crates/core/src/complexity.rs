//! Mutation-target selection: variables ranked by def-use complexity and
//! statement regions ranked by cyclomatic complexity.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::program::ast::{Ast, Expr, Stmt, StmtId, StmtKind};
use crate::program::cfg::{build_function_cfg, Cfg};
use crate::program::{def_use, DefUseTable, ProgramError, Span, VarKind, VarScope};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ComplexityError {
    #[error("program declares no variables")]
    EmptyProgram,
    #[error("every statement region overlaps an oracle line")]
    NoEligibleLocation,
    #[error(transparent)]
    Program(#[from] ProgramError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedVariable {
    pub name: String,
    pub score: u32,
    pub line: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableRanking {
    pub entries: Vec<RankedVariable>,
    /// Number of distinct variables declared in the ranking scope.
    pub total_variables: usize,
}

impl VariableRanking {
    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.name.as_str()).collect()
    }
}

fn eligible(e: &crate::program::DefUseEntry) -> bool {
    e.kind == VarKind::Scalar && !e.address_taken && !e.loop_counter
}

/// Ranks the mutation candidates by `n_def + n_use`, descending, ties by
/// declaring line.
///
/// Candidates are file-scope scalars that are neither loop counters nor
/// address-taken; when no file-scope variable qualifies, locals are
/// considered as well.
pub fn rank_variables(table: &DefUseTable) -> Result<VariableRanking, ComplexityError> {
    if table.is_empty() {
        return Err(ComplexityError::EmptyProgram);
    }
    let globals: Vec<_> = table
        .entries
        .iter()
        .filter(|e| e.scope == VarScope::Global)
        .collect();
    let (pool, mut picked): (Vec<_>, Vec<_>) = if globals.iter().any(|e| eligible(e)) {
        (
            globals.clone(),
            globals.into_iter().filter(|e| eligible(e)).collect(),
        )
    } else {
        let all: Vec<_> = table.entries.iter().collect();
        let elig: Vec<_> = all.iter().copied().filter(|e| eligible(e)).collect();
        if elig.is_empty() {
            (all.clone(), all)
        } else {
            (all, elig)
        }
    };
    // stable: declaration order breaks ties on the same line
    picked.sort_by(|a, b| {
        b.complexity()
            .cmp(&a.complexity())
            .then(a.line.cmp(&b.line))
    });
    Ok(VariableRanking {
        entries: picked
            .into_iter()
            .map(|e| RankedVariable {
                name: e.name.clone(),
                score: e.complexity(),
                line: e.line,
            })
            .collect(),
        total_variables: pool.len(),
    })
}

/// How many variables go into the prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariablePolicy {
    /// Top-1 when at most 3 variables exist, top-3 otherwise.
    #[default]
    Auto,
    Top(usize),
}

pub fn select_variables(ranking: &VariableRanking) -> Vec<String> {
    select_variables_with(ranking, VariablePolicy::Auto)
}

pub fn select_variables_with(ranking: &VariableRanking, policy: VariablePolicy) -> Vec<String> {
    let k = match policy {
        VariablePolicy::Auto if ranking.total_variables <= 3 => 1,
        VariablePolicy::Auto => 3,
        VariablePolicy::Top(k) => k.max(1),
    };
    ranking
        .entries
        .iter()
        .take(k)
        .map(|e| e.name.clone())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionScore {
    pub stmt: StmtId,
    pub function: String,
    pub kind: String,
    pub span: Span,
    pub score: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StatementComplexityMap {
    pub scores: BTreeMap<StmtId, RegionScore>,
    pub oracle_lines: BTreeSet<u32>,
}

impl StatementComplexityMap {
    pub fn merge(&mut self, other: StatementComplexityMap) {
        self.scores.extend(other.scores);
        self.oracle_lines.extend(other.oracle_lines);
    }
}

const ORACLE_CALLS: [&str; 2] = ["printf", "abort"];

fn calls_oracle(e: &Expr) -> bool {
    e.called_functions()
        .iter()
        .any(|c| ORACLE_CALLS.contains(c))
}

/// Region scores for every reachable statement of the function `cfg` was
/// built from.
///
/// A simple statement scores 1 plus its `?:`/`&&`/`||` count. A compound
/// statement scores `E - N + 2` over its region graph (header, the statements
/// directly inside it with nested compounds collapsed to one node, and a
/// synthetic exit), plus the decision points of its header and of its
/// non-nested statements.
pub fn statement_complexity(cfg: &Cfg, ast: &Ast) -> StatementComplexityMap {
    let mut map = StatementComplexityMap::default();
    let Some(f) = ast.function(&cfg.function) else {
        return map;
    };

    // non-block ancestors of every statement, outermost first
    let mut ancestors: BTreeMap<StmtId, Vec<StmtId>> = BTreeMap::new();
    let mut stmts: BTreeMap<StmtId, &Stmt> = BTreeMap::new();
    fn index<'a>(
        s: &'a Stmt,
        path: &mut Vec<StmtId>,
        ancestors: &mut BTreeMap<StmtId, Vec<StmtId>>,
        stmts: &mut BTreeMap<StmtId, &'a Stmt>,
    ) {
        stmts.insert(s.id, s);
        ancestors.insert(s.id, path.clone());
        let is_node = !matches!(s.kind, StmtKind::Block(_));
        if is_node {
            path.push(s.id);
        }
        for c in s.children() {
            index(c, path, ancestors, stmts);
        }
        if is_node {
            path.pop();
        }
    }
    index(&f.body, &mut Vec::new(), &mut ancestors, &mut stmts);

    let live: BTreeSet<StmtId> = cfg.nodes.iter().copied().collect();
    for &id in &cfg.nodes {
        let s = stmts[&id];
        for e in s.own_exprs() {
            if calls_oracle(e) {
                if s.is_compound() {
                    map.oracle_lines.insert(s.span.start);
                } else {
                    map.oracle_lines.extend(s.span.start..=s.span.end);
                }
            }
        }
        let score = if s.is_compound() {
            region_score(id, cfg, &live, &ancestors, &stmts)
        } else {
            1 + decisions(s)
        };
        map.scores.insert(
            id,
            RegionScore {
                stmt: id,
                function: f.name.clone(),
                kind: s.class().as_str().to_string(),
                span: s.span,
                score,
            },
        );
    }
    map
}

fn decisions(s: &Stmt) -> u32 {
    s.own_exprs().iter().map(|e| e.decision_count()).sum()
}

fn region_score(
    root: StmtId,
    cfg: &Cfg,
    live: &BTreeSet<StmtId>,
    ancestors: &BTreeMap<StmtId, Vec<StmtId>>,
    stmts: &BTreeMap<StmtId, &Stmt>,
) -> u32 {
    // representative of `n` inside the region, or None outside it
    let rep = |n: StmtId| -> Option<StmtId> {
        if n == root {
            return Some(root);
        }
        let path = &ancestors[&n];
        let k = path.iter().position(|a| *a == root)?;
        Some(path.get(k + 1).copied().unwrap_or(n))
    };
    const EXIT: StmtId = StmtId::MAX;
    let mut own_edges: Vec<(StmtId, StmtId)> = Vec::new();
    let mut other_edges: BTreeSet<(StmtId, StmtId)> = BTreeSet::new();
    let mut nodes: BTreeSet<StmtId> = BTreeSet::from([root]);
    let add = |from: StmtId, to: StmtId, own: &mut Vec<_>, other: &mut BTreeSet<_>| {
        if from == root {
            own.push((from, to));
        } else {
            other.insert((from, to));
        }
    };
    for &n in live {
        let Some(r) = rep(n) else { continue };
        nodes.insert(r);
        if cfg.exits.contains(&n) {
            add(r, EXIT, &mut own_edges, &mut other_edges);
        }
    }
    for &(a, b) in &cfg.edges {
        let Some(ra) = rep(a) else { continue };
        let target = rep(b).unwrap_or(EXIT);
        if ra == target && ra != root {
            continue;
        }
        add(ra, target, &mut own_edges, &mut other_edges);
    }
    // a collapsed node has one edge per distinct target
    let edges = own_edges.len() + other_edges.len();
    let has_exit = own_edges
        .iter()
        .chain(other_edges.iter())
        .any(|(_, b)| *b == EXIT);
    let n_nodes = nodes.len() + usize::from(has_exit);
    let base = (edges as i64 - n_nodes as i64 + 2).max(1) as u32;
    let mut extra = decisions(stmts[&root]);
    for &n in &nodes {
        if n != root && !stmts[&n].is_compound() {
            extra += decisions(stmts[&n]);
        }
    }
    base + extra
}

/// Region scores over every function of the program.
pub fn program_complexity(ast: &Ast) -> Result<StatementComplexityMap, ComplexityError> {
    let mut map = StatementComplexityMap::default();
    for f in &ast.functions {
        map.merge(statement_complexity(&build_function_cfg(f)?, ast));
    }
    Ok(map)
}

/// Span of the highest-scoring region that touches no oracle line; ties go to
/// the earliest start line, then to the longer span.
pub fn select_location(map: &StatementComplexityMap) -> Result<(u32, u32), ComplexityError> {
    map.scores
        .values()
        .filter(|r| !map.oracle_lines.iter().any(|l| r.span.contains_line(*l)))
        .min_by(|a, b| {
            b.score
                .cmp(&a.score)
                .then(a.span.start.cmp(&b.span.start))
                .then(b.span.end.cmp(&a.span.end))
        })
        .map(|r| (r.span.start, r.span.end))
        .ok_or(ComplexityError::NoEligibleLocation)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutationTarget {
    pub variables: Vec<String>,
    pub location: (u32, u32),
}

/// Full analysis of a program down to the prompt slots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Analysis {
    pub def_use: DefUseTable,
    pub ranking: VariableRanking,
    pub regions: StatementComplexityMap,
    pub target: MutationTarget,
}

pub fn analyze(ast: &Ast, policy: VariablePolicy) -> Result<Analysis, ComplexityError> {
    let table = def_use(ast);
    let ranking = rank_variables(&table)?;
    let regions = program_complexity(ast)?;
    let location = select_location(&regions)?;
    let variables = select_variables_with(&ranking, policy);
    Ok(Analysis {
        def_use: table,
        ranking,
        regions,
        target: MutationTarget {
            variables,
            location,
        },
    })
}

/// Plain-text tables of the variable ranking and the region scores.
pub fn format_analysis(a: &Analysis) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<16} {:>5} {:>5} {:>5} {:>6}  scope/kind",
        "variable", "def", "use", "comp", "line"
    );
    for e in &a.def_use.entries {
        let _ = writeln!(
            out,
            "{:<16} {:>5} {:>5} {:>5} {:>6}  {:?}/{:?}{}{}",
            e.name,
            e.n_def,
            e.n_use,
            e.complexity(),
            e.line,
            e.scope,
            e.kind,
            if e.loop_counter { " loop-counter" } else { "" },
            if e.address_taken {
                " address-taken"
            } else {
                ""
            },
        );
    }
    let _ = writeln!(
        out,
        "\nranking ({} in pool): {}",
        a.ranking.total_variables,
        a.ranking.names().join(", ")
    );
    let _ = writeln!(
        out,
        "\n{:<10} {:<8} {:>9} {:>6}",
        "function", "kind", "lines", "score"
    );
    let mut regions: Vec<_> = a.regions.scores.values().collect();
    regions.sort_by_key(|r| (r.span.start, std::cmp::Reverse(r.span.end)));
    for r in regions {
        let _ = writeln!(
            out,
            "{:<10} {:<8} {:>9} {:>6}",
            r.function,
            r.kind,
            format!("{}-{}", r.span.start, r.span.end),
            r.score
        );
    }
    let oracle: Vec<String> = a.regions.oracle_lines.iter().map(u32::to_string).collect();
    let _ = writeln!(
        out,
        "\noracle lines: {}",
        if oracle.is_empty() {
            "-".into()
        } else {
            oracle.join(", ")
        }
    );
    let _ = writeln!(
        out,
        "target: {{{}}} between lines {}-{}",
        a.target.variables.join(", "),
        a.target.location.0,
        a.target.location.1
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::{fixtures, parse, SourceProgram};

    fn ast(src: &str) -> Ast {
        parse(&SourceProgram::new("t", src).unwrap()).unwrap()
    }

    fn scores_by_line(src: &str) -> BTreeMap<(u32, u32), u32> {
        program_complexity(&ast(src))
            .unwrap()
            .scores
            .values()
            .map(|r| ((r.span.start, r.span.end), r.score))
            .collect()
    }

    #[test]
    fn direct_sum_ranking() {
        let r = rank_variables(&def_use(&ast("int x = 1; int y = x + x;"))).unwrap();
        let got: Vec<_> = r
            .entries
            .iter()
            .map(|e| (e.name.as_str(), e.score))
            .collect();
        assert_eq!(got, [("x", 3), ("y", 1)]);
        assert_eq!(r.total_variables, 2);
    }

    #[test]
    fn ties_follow_declaration_order() {
        let r = rank_variables(&def_use(&ast(
            "int p = 1; int q = 1; int z = 1; int main(){ return p + q + z; }",
        )))
        .unwrap();
        assert_eq!(r.names(), ["p", "q", "z"]);
    }

    #[test]
    fn empty_program_has_no_ranking() {
        assert_eq!(
            rank_variables(&DefUseTable::default()),
            Err(ComplexityError::EmptyProgram)
        );
    }

    #[test]
    fn comp1_comp3_rule() {
        let mk = |n: usize| VariableRanking {
            entries: (0..n)
                .map(|i| RankedVariable {
                    name: format!("v{i}"),
                    score: 1,
                    line: 1,
                })
                .collect(),
            total_variables: n,
        };
        assert_eq!(select_variables(&mk(2)).len(), 1);
        assert_eq!(select_variables(&mk(3)).len(), 1);
        assert_eq!(select_variables(&mk(6)).len(), 3);
        assert_eq!(
            select_variables_with(&mk(6), VariablePolicy::Top(5)).len(),
            5
        );
    }

    #[test]
    fn sample_target() {
        let a = analyze(&ast(fixtures::SAMPLE_FAILING), VariablePolicy::Auto).unwrap();
        assert_eq!(a.ranking.names(), ["a", "s", "v"]);
        assert_eq!(a.ranking.total_variables, 6);
        assert_eq!(a.target.variables, ["a", "s", "v"]);
        assert_eq!(a.target.location, (12, 18));
        let s = scores_by_line(fixtures::SAMPLE_FAILING);
        assert_eq!(s[&(7, 21)], 2);
        assert_eq!(s[&(9, 20)], 2);
        assert_eq!(s[&(12, 18)], 4);
    }

    #[test]
    fn straight_line_and_if_else() {
        let s = scores_by_line(
            "int main() {\n int x = 0;\n if (x)\n  x = 1;\n else\n  x = 2;\n return x;\n}\n",
        );
        assert_eq!(s[&(2, 2)], 1);
        assert_eq!(s[&(3, 6)], 2);
    }

    #[test]
    fn oracle_regions_are_skipped() {
        let src = "int a;\nint main() {\n  while (a < 3) {\n    a = a ? 1 : 2;\n    printf(\"%d\", a);\n  }\n  if (a) a = 0;\n  return 0;\n}\n";
        let map = program_complexity(&ast(src)).unwrap();
        assert!(map.oracle_lines.contains(&5));
        let (s, e) = select_location(&map).unwrap();
        assert_eq!((s, e), (4, 4));
    }

    #[test]
    fn no_eligible_location() {
        let map = program_complexity(&ast("int main() { printf(\"x\"); }")).unwrap();
        assert_eq!(
            select_location(&map),
            Err(ComplexityError::NoEligibleLocation)
        );
    }

    #[test]
    fn inserting_an_if_never_lowers_a_region() {
        let before = "int a;\nint main() {\n  while (a) {\n    a--;\n  }\n  return 0;\n}\n";
        let after = "int a;\nint main() {\n  while (a) {\n    a--;\n    if (a == 3) a = 1;\n  }\n  return 0;\n}\n";
        let b = scores_by_line(before)[&(3, 5)];
        let c = scores_by_line(after)[&(3, 6)];
        assert!(c >= b, "{c} < {b}");
    }
}
