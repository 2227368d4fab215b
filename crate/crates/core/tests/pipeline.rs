mod common;

use std::collections::BTreeSet;

use common::*;
use witness_core::llm::{Conversation, Gateway, LlmError, LlmReply, MockGateway};
use witness_core::orchestrator::{
    build_backend, read_log, run, run_with, LogRecord, RunError, RunLog, StopReason,
};
use witness_core::rl::ACTIONS;
use witness_core::validation::Verdict;

/// Passes through to the fixtures for a few calls, then fails for good.
struct FailAfter {
    inner: MockGateway,
    left: usize,
}

impl Gateway for FailAfter {
    fn complete(&mut self, c: &Conversation) -> Result<LlmReply, LlmError> {
        if self.left == 0 {
            return Err(LlmError::Api {
                status: 401,
                body: "bad key".into(),
            });
        }
        self.left -= 1;
        self.inner.complete(c)
    }
}

#[test]
fn rewards_match_a_recount_of_the_log() {
    let tmp = tempfile::tempdir().unwrap();
    let report = run(&s1_config(tmp.path())).unwrap();
    let records = read_log(&tmp.path().join("runlog.ndjson")).unwrap();
    let mut sums = [0.0; ACTIONS];
    let mut counts = [0u32; ACTIONS];
    let mut q = 0.0;
    let mut steps = 0;
    for r in &records {
        let LogRecord::Step(s) = r else { continue };
        assert!((1..=ACTIONS as u8).contains(&s.rule));
        let a = usize::from(s.rule - 1);
        sums[a] += s.delta_q;
        counts[a] += 1;
        assert_eq!(
            s.reward.to_bits(),
            (sums[a] / f64::from(counts[a])).to_bits(),
            "step {}",
            s.t
        );
        if s.accepted {
            assert!(s.delta_q > 0.0);
            q += s.delta_q;
        } else {
            assert_eq!(s.delta_q, 0.0, "rejected steps leave Q alone");
        }
        assert!(
            (s.q - q).abs() < 1e-12,
            "step {}: Q {} vs running sum {q}",
            s.t,
            s.q
        );
        steps += 1;
    }
    assert_eq!(report.summary.queries, steps);
    assert!(matches!(
        records.first(),
        Some(LogRecord::Header { seed: 7, .. })
    ));
    assert!(matches!(
        records.last(),
        Some(LogRecord::End {
            reason: StopReason::Target,
            ..
        })
    ));
}

#[test]
fn every_verdict_kind_shows_up_in_s1() {
    let tmp = tempfile::tempdir().unwrap();
    run(&s1_config(tmp.path())).unwrap();
    let kinds: BTreeSet<String> = read_log(&tmp.path().join("runlog.ndjson"))
        .unwrap()
        .into_iter()
        .filter_map(|r| match r {
            LogRecord::Step(s) => Some(format!("{:?}", s.verdict)),
            _ => None,
        })
        .collect();
    for v in [Verdict::Valid, Verdict::OracleInvalid, Verdict::Unparseable] {
        assert!(kinds.contains(&format!("{v:?}")), "{kinds:?}");
    }
    assert!(
        kinds.iter().any(|k| k.starts_with("SemanticInvalid")),
        "{kinds:?}"
    );
}

#[test]
fn fatal_gateway_error_keeps_the_partial_log() {
    let tmp = tempfile::tempdir().unwrap();
    let config = s1_config(tmp.path());
    let mut gateway = FailAfter {
        inner: MockGateway::new(config.resolve(config.llm.mock_fixtures.as_ref().unwrap())),
        left: 3,
    };
    let mut backend = build_backend(&config).unwrap();
    let path = tmp.path().join("runlog.ndjson");
    let mut log = RunLog::create(&path).unwrap();
    let err = run_with(&config, &mut gateway, &mut backend, &mut log, None).unwrap_err();
    assert!(matches!(err, RunError::Gateway(_)), "{err}");
    assert!(!err.is_setup());
    drop(log);
    let records = read_log(&path).unwrap();
    let steps = records
        .iter()
        .filter(|r| matches!(r, LogRecord::Step(_)))
        .count();
    assert_eq!(steps, 3);
    assert!(
        matches!(records.last(), Some(LogRecord::Error { t: 4, .. })),
        "{:?}",
        records.last()
    );
}

#[test]
fn passing_failing_program_is_a_setup_error() {
    let tmp = tempfile::tempdir().unwrap();
    let clean = tmp.path().join("clean.c");
    std::fs::write(
        &clean,
        "int printf(const char *, ...);\nint main(void) { printf(\"%d\\n\", 1); return 0; }\n",
    )
    .unwrap();
    let mut config = s1_config(tmp.path());
    config.failing_program = clean;
    let err = run(&config).unwrap_err();
    assert!(err.is_setup(), "{err}");
}

#[test]
fn max_steps_stops_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let mut config = s1_config(tmp.path());
    config.termination.target = None;
    config.termination.max_steps = 4;
    let report = run(&config).unwrap();
    assert_eq!(report.stop_reason, StopReason::MaxSteps);
    assert_eq!(report.summary.queries, 4);
}

#[test]
fn config_hash_ignores_the_model_settings() {
    let tmp = tempfile::tempdir().unwrap();
    let a = s1_config(tmp.path());
    let mut b = a.clone();
    b.llm.model.temperature = 0.3;
    assert_eq!(a.hash(), b.hash());
    b.alpha = 0.25;
    assert_ne!(a.hash(), b.hash());
}
