//! Statement-level control-flow graphs, one per function.
//!
//! Blocks are transparent; every other statement is one node. Statements
//! unreachable from the entry are pruned.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::ast::{Ast, Function, Stmt, StmtId, StmtKind};
use super::ProgramError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cfg {
    pub function: String,
    pub nodes: Vec<StmtId>,
    /// Directed edges; an `if` whose branches meet at the same node keeps both.
    pub edges: Vec<(StmtId, StmtId)>,
    /// `None` only for an empty function body.
    pub entry: Option<StmtId>,
    pub exits: BTreeSet<StmtId>,
}

impl Cfg {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// E - N + 2 over the whole function.
    pub fn cyclomatic(&self) -> i64 {
        self.edges.len() as i64 - self.nodes.len() as i64 + 2
    }

    pub fn successors(&self, node: StmtId) -> Vec<StmtId> {
        self.edges
            .iter()
            .filter(|(a, _)| *a == node)
            .map(|(_, b)| *b)
            .collect()
    }

    /// Edges closing a cycle in a depth-first traversal from the entry.
    pub fn back_edges(&self) -> Vec<(StmtId, StmtId)> {
        let mut adj: BTreeMap<StmtId, Vec<StmtId>> = BTreeMap::new();
        for (a, b) in &self.edges {
            adj.entry(*a).or_default().push(*b);
        }
        let mut out = Vec::new();
        let Some(entry) = self.entry else { return out };
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state: BTreeMap<StmtId, u8> = BTreeMap::new();
        let mut stack: Vec<(StmtId, usize)> = vec![(entry, 0)];
        state.insert(entry, 1);
        while let Some((node, idx)) = stack.pop() {
            let succs = adj.get(&node).cloned().unwrap_or_default();
            if idx < succs.len() {
                stack.push((node, idx + 1));
                let next = succs[idx];
                match state.get(&next).copied().unwrap_or(0) {
                    0 => {
                        state.insert(next, 1);
                        stack.push((next, 0));
                    }
                    1 => out.push((node, next)),
                    _ => {}
                }
            } else {
                state.insert(node, 2);
            }
        }
        out
    }

    pub fn is_reachable_from_entry(&self) -> bool {
        let Some(entry) = self.entry else {
            return self.nodes.is_empty();
        };
        reachable(entry, &self.edges).len() == self.nodes.len()
    }
}

fn reachable(entry: StmtId, edges: &[(StmtId, StmtId)]) -> BTreeSet<StmtId> {
    let mut seen = BTreeSet::from([entry]);
    let mut queue = VecDeque::from([entry]);
    while let Some(n) = queue.pop_front() {
        for (a, b) in edges {
            if *a == n && seen.insert(*b) {
                queue.push_back(*b);
            }
        }
    }
    seen
}

pub fn build_cfg(ast: &Ast, function: &str) -> Result<Cfg, ProgramError> {
    let f = ast
        .function(function)
        .ok_or_else(|| ProgramError::UnknownFunction(function.to_string()))?;
    build_function_cfg(f)
}

#[derive(Clone, Copy)]
struct LoopCtx {
    break_to: Option<StmtId>,
    continue_to: StmtId,
}

struct Builder<'a> {
    labels: BTreeMap<&'a str, StmtId>,
    nodes: BTreeSet<StmtId>,
    edges: Vec<(StmtId, StmtId)>,
    exits: BTreeSet<StmtId>,
}

impl<'a> Builder<'a> {
    fn link(&mut self, from: StmtId, to: Option<StmtId>) {
        match to {
            Some(t) => self.edges.push((from, t)),
            None => {
                self.exits.insert(from);
            }
        }
    }

    /// Lowers `s` given its fall-through successor; returns the node control
    /// reaches on entering `s`.
    fn lower(
        &mut self,
        s: &'a Stmt,
        next: Option<StmtId>,
        lp: Option<LoopCtx>,
    ) -> Result<Option<StmtId>, ProgramError> {
        match &s.kind {
            StmtKind::Block(items) => {
                let mut cur = next;
                for item in items.iter().rev() {
                    cur = self.lower(item, cur, lp)?;
                }
                Ok(cur)
            }
            StmtKind::Decl(_) | StmtKind::Expr(_) | StmtKind::Empty | StmtKind::Label(_) => {
                self.nodes.insert(s.id);
                self.link(s.id, next);
                Ok(Some(s.id))
            }
            StmtKind::Return(_) => {
                self.nodes.insert(s.id);
                self.exits.insert(s.id);
                Ok(Some(s.id))
            }
            StmtKind::Goto(label) => {
                self.nodes.insert(s.id);
                let target = *self
                    .labels
                    .get(label.as_str())
                    .ok_or_else(|| ProgramError::UnknownLabel(label.clone()))?;
                self.edges.push((s.id, target));
                Ok(Some(s.id))
            }
            StmtKind::Break => {
                self.nodes.insert(s.id);
                // outside a loop a break leaves the function
                self.link(s.id, lp.and_then(|l| l.break_to));
                Ok(Some(s.id))
            }
            StmtKind::Continue => {
                self.nodes.insert(s.id);
                self.link(s.id, lp.map(|l| l.continue_to));
                Ok(Some(s.id))
            }
            StmtKind::If {
                then_branch,
                else_branch,
                ..
            } => {
                self.nodes.insert(s.id);
                let then_entry = self.lower(then_branch, next, lp)?;
                let else_entry = match else_branch {
                    Some(e) => self.lower(e, next, lp)?,
                    None => next,
                };
                self.link(s.id, then_entry);
                self.link(s.id, else_entry);
                Ok(Some(s.id))
            }
            StmtKind::For { body, .. } | StmtKind::While { body, .. } => {
                self.nodes.insert(s.id);
                let ctx = LoopCtx {
                    break_to: next,
                    continue_to: s.id,
                };
                let body_entry = self.lower(body, Some(s.id), Some(ctx))?;
                self.link(s.id, body_entry);
                self.link(s.id, next);
                Ok(Some(s.id))
            }
        }
    }
}

pub fn build_function_cfg(f: &Function) -> Result<Cfg, ProgramError> {
    let mut labels = BTreeMap::new();
    f.body.walk(&mut |s| {
        if let StmtKind::Label(name) = &s.kind {
            labels.entry(name.as_str()).or_insert(s.id);
        }
    });
    let mut b = Builder {
        labels,
        nodes: BTreeSet::new(),
        edges: Vec::new(),
        exits: BTreeSet::new(),
    };
    let entry = b.lower(&f.body, None, None)?;
    let Some(entry) = entry else {
        return Ok(Cfg {
            function: f.name.clone(),
            nodes: Vec::new(),
            edges: Vec::new(),
            entry: None,
            exits: BTreeSet::new(),
        });
    };
    let live = reachable(entry, &b.edges);
    let mut edges: Vec<_> = b
        .edges
        .into_iter()
        .filter(|(a, c)| live.contains(a) && live.contains(c))
        .collect();
    edges.sort();
    Ok(Cfg {
        function: f.name.clone(),
        nodes: live.iter().copied().collect(),
        edges,
        entry: Some(entry),
        exits: b.exits.into_iter().filter(|n| live.contains(n)).collect(),
    })
}
