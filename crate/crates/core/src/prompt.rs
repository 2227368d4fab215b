//! Prompt rendering: the mutation-rule catalog, the mutation prompt pattern
//! and feedback prompts for rejected variants.
//!
//! Templates live in `resources/prompts/v1` so the wording can be audited
//! without reading code. Placeholders use `${name}` and are substituted in a
//! single pass.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complexity::MutationTarget;
use crate::program::SourceProgram;
use crate::validation::{Cause, UbCategory, ValidationReport};

pub const TEMPLATE_VERSION: &str = "v1";

const RULES: &str = include_str!("../resources/prompts/v1/rules.txt");
const MUTATION: &str = include_str!("../resources/prompts/v1/mutation.txt");
const UB_FEEDBACK: &str = include_str!("../resources/prompts/v1/ub_feedback.txt");
const ORACLE_FEEDBACK: &str = include_str!("../resources/prompts/v1/oracle_feedback.txt");
const UB_PHRASES: &str = include_str!("../resources/prompts/v1/ub_phrases.tsv");

pub const RULE_COUNT: usize = 13;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("validation report carries no failure")]
    NoFailure,
    #[error("no mutation rule with id {0}")]
    UnknownRule(u8),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MutationRule {
    pub id: u8,
    pub description: String,
}

pub fn rule_catalog() -> Vec<MutationRule> {
    RULES
        .lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| MutationRule {
            id: i as u8 + 1,
            description: l.trim().to_string(),
        })
        .collect()
}

pub fn rule(id: u8) -> Result<MutationRule, PromptError> {
    rule_catalog()
        .into_iter()
        .find(|r| r.id == id)
        .ok_or(PromptError::UnknownRule(id))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptInstance {
    pub rule: MutationRule,
    pub variables: Vec<String>,
    pub location: (u32, u32),
    pub program_text: String,
    pub rendered: String,
}

fn fill(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(i) = rest.find("${") {
        out.push_str(&rest[..i]);
        let after = &rest[i + 2..];
        match after.find('}') {
            Some(j) => {
                let key = &after[..j];
                match vars.iter().find(|(k, _)| *k == key) {
                    Some((_, v)) => out.push_str(v),
                    None => out.push_str(&rest[i..i + 3 + j]),
                }
                rest = &after[j + 1..];
            }
            None => {
                out.push_str(&rest[i..]);
                rest = "";
            }
        }
    }
    out.push_str(rest);
    out
}

pub fn render_prompt(
    rule: &MutationRule,
    target: &MutationTarget,
    program: &SourceProgram,
) -> PromptInstance {
    let variables = target.variables.join(", ");
    let (start, end) = (target.location.0.to_string(), target.location.1.to_string());
    let rendered = fill(
        MUTATION,
        &[
            ("rule", &rule.description),
            ("variables", &variables),
            ("start", &start),
            ("end", &end),
            ("program", program.text.trim_end()),
        ],
    );
    PromptInstance {
        rule: rule.clone(),
        variables: target.variables.clone(),
        location: target.location,
        program_text: program.text.clone(),
        rendered,
    }
}

/// Recovers (rule id, variables, line range) from a rendered mutation prompt.
pub fn parse_prompt(rendered: &str) -> Option<(u8, Vec<String>, (u32, u32))> {
    let head = rendered.lines().next()?;
    let prefix = MUTATION.split("${rule}").next()?;
    let rest = head.strip_prefix(prefix)?;
    let (desc, rest) = rest.split_once(" and reusing the variables in the list {")?;
    let id = rule_catalog()
        .into_iter()
        .find(|r| r.description == desc)?
        .id;
    let (vars, rest) = rest.split_once("} between lines ")?;
    let (start, end) = rest.strip_suffix('.')?.split_once('-')?;
    let variables = vars
        .split(", ")
        .filter(|v| !v.is_empty())
        .map(str::to_string)
        .collect();
    Some((id, variables, (start.parse().ok()?, end.parse().ok()?)))
}

/// The phrase naming a UB category inside feedback prompts.
pub fn ub_phrase(category: UbCategory) -> &'static str {
    UB_PHRASES
        .lines()
        .filter_map(|l| l.split_once('\t'))
        .find(|(k, _)| *k == category.as_str())
        .map(|(_, v)| v.trim())
        .unwrap_or(category.as_str())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackCause {
    Ub(UbCategory),
    MissingOracle,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackPrompt {
    pub cause: FeedbackCause,
    pub rendered: String,
}

pub fn render_feedback(report: &ValidationReport) -> Result<FeedbackPrompt, PromptError> {
    match &report.cause {
        _ if report.is_valid() => Err(PromptError::NoFailure),
        Some(Cause::Ub(c)) => Ok(FeedbackPrompt {
            cause: FeedbackCause::Ub(*c),
            rendered: fill(UB_FEEDBACK, &[("category", ub_phrase(*c))]),
        }),
        Some(Cause::Oracle(counts)) => {
            let n = |v: usize| v.to_string();
            Ok(FeedbackPrompt {
                cause: FeedbackCause::MissingOracle,
                rendered: fill(
                    ORACLE_FEEDBACK,
                    &[
                        ("expected_printf", &n(counts.expected_printf)),
                        ("found_printf", &n(counts.found_printf)),
                        ("expected_abort", &n(counts.expected_abort)),
                        ("found_abort", &n(counts.found_abort)),
                    ],
                ),
            })
        }
        None => Err(PromptError::NoFailure),
    }
}

/// Content of the next user message: the pending feedback paragraph, if any,
/// followed by the mutation prompt.
pub fn compose_turn(feedback: Option<&FeedbackPrompt>, prompt: &PromptInstance) -> String {
    match feedback {
        Some(f) => format!("{}\n\n{}", f.rendered, prompt.rendered),
        None => prompt.rendered.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::fixtures;
    use crate::validation::{Evidence, OracleCounts, Verdict};

    fn target(vars: &[&str]) -> MutationTarget {
        MutationTarget {
            variables: vars.iter().map(|v| v.to_string()).collect(),
            location: (12, 18),
        }
    }

    #[test]
    fn catalog_rows() {
        let c = rule_catalog();
        assert_eq!(c.len(), RULE_COUNT);
        assert_eq!(
            c[0],
            MutationRule {
                id: 1,
                description: "inserting an if statement".into()
            }
        );
        assert_eq!(
            c[8].description,
            "replacing a constant with another valid one"
        );
        assert_eq!(
            c[12].description,
            "replacing a variable with another valid one"
        );
    }

    #[test]
    fn sample_prompt() {
        let p = SourceProgram::new("f", fixtures::SAMPLE_FAILING).unwrap();
        let r = render_prompt(&rule(1).unwrap(), &target(&["a", "s", "v"]), &p);
        assert!(r.rendered.starts_with(
            "Please generate a variant program P of the input program F by inserting an if statement and reusing the variables in the list {a, s, v} between lines 12-18.\n\n```c\nshort s;int a, b, c;\n"
        ));
        assert!(r.rendered.ends_with("}\n```"));
        let r2 = render_prompt(&rule(2).unwrap(), &target(&["a", "s", "v"]), &p);
        assert!(r2
            .rendered
            .contains("by inserting a loop (i.e., while or for) statement and reusing"));
    }

    #[test]
    fn single_variable_list() {
        let p = SourceProgram::new("f", "int x;").unwrap();
        assert!(render_prompt(&rule(3).unwrap(), &target(&["x"]), &p)
            .rendered
            .contains("list {x} between"));
    }

    #[test]
    fn round_trip_all_rules() {
        let p = SourceProgram::new("f", fixtures::SAMPLE_FAILING).unwrap();
        for r in rule_catalog() {
            let inst = render_prompt(&r, &target(&["a", "s", "v"]), &p);
            assert_eq!(render_prompt(&r, &target(&["a", "s", "v"]), &p), inst);
            let (id, vars, loc) = parse_prompt(&inst.rendered).unwrap();
            assert_eq!(
                (id, vars, loc),
                (
                    r.id,
                    vec!["a".to_string(), "s".into(), "v".into()],
                    (12, 18)
                )
            );
        }
    }

    #[test]
    fn feedback_sentences() {
        let ub = |c| ValidationReport {
            verdict: Verdict::SemanticInvalid,
            cause: Some(Cause::Ub(c)),
            evidence: Some(Evidence {
                line: 1,
                note: String::new(),
            }),
        };
        assert_eq!(
            render_feedback(&ub(UbCategory::DivisionByZero)).unwrap().rendered,
            "The above program contains a kind of undefined behavior divided by zero, please do not generate such test programs again."
        );
        assert!(render_feedback(&ub(UbCategory::Shift))
            .unwrap()
            .rendered
            .contains("invalid shift"));
        let oracle = ValidationReport {
            verdict: Verdict::OracleInvalid,
            cause: Some(Cause::Oracle(OracleCounts {
                expected_printf: 1,
                found_printf: 0,
                expected_abort: 0,
                found_abort: 0,
            })),
            evidence: None,
        };
        let f = render_feedback(&oracle).unwrap();
        assert_eq!(f.cause, FeedbackCause::MissingOracle);
        assert!(
            f.rendered.contains("0 printf")
                && f.rendered.contains("1 printf")
                && f.rendered.contains("abort")
        );
        assert_eq!(
            render_feedback(&ValidationReport::valid()),
            Err(PromptError::NoFailure)
        );
    }

    #[test]
    fn placeholders_are_single_pass() {
        assert_eq!(fill("${a}-${b}", &[("a", "${b}"), ("b", "x")]), "${b}-x");
        assert_eq!(fill("${zz}", &[]), "${zz}");
    }
}
