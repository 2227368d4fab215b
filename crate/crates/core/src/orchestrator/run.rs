//! The isolation loop and its replay from a recorded log.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use super::config::{BackendKind, RunConfig};
use super::report::{IsolationReport, RunSummary};
use super::runlog::{read_log, LogRecord, RunLog, StepRecord, StopReason, LOG_VERSION};
use super::RunError;
use crate::complexity::analyze;
use crate::harness::{Backend, Classification, RealBackend, Scenario, SimulatedBackend};
use crate::llm::{
    extract_program, sha256_hex, Conversation, Gateway, HttpGateway, MockGateway, ScriptedGateway,
};
use crate::program::SourceProgram;
use crate::prompt::{compose_turn, render_feedback, render_prompt, rule, FeedbackPrompt};
use crate::rl::{Agent, AgentState};
use crate::sbfl::{localize, parse_ground_truth};
use crate::spectra::{quality, QualityState, SpectrumSet};
use crate::validation::{validate, Verdict};

/// Fills in the seed (fresh from the clock when absent) so the effective
/// configuration is fully determined.
pub fn prepare(config: &RunConfig) -> RunConfig {
    let mut c = config.clone();
    if c.seed.is_none() {
        let nanos = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_nanos());
        c.seed = Some(nanos as u64);
    }
    c
}

pub fn build_backend(config: &RunConfig) -> Result<Box<dyn Backend>, RunError> {
    let seed = config.seed.unwrap_or(0);
    Ok(match config.backend {
        BackendKind::Sim => {
            let sim = config
                .sim
                .as_ref()
                .ok_or_else(|| RunError::Config("missing `sim` section".into()))?;
            let scenario = Scenario::load(&config.resolve(&sim.scenario))
                .map_err(|e| RunError::Setup(e.to_string()))?;
            Box::new(SimulatedBackend::new(scenario, seed))
        }
        BackendKind::Real => {
            let mut spec = config
                .real
                .clone()
                .ok_or_else(|| RunError::Config("missing `real` section".into()))?;
            spec.work_dir = config.resolve(&spec.work_dir);
            spec.coverage_dir = spec.coverage_dir.map(|d| config.resolve(&d));
            Box::new(
                RealBackend::new(spec, config.oracle)
                    .map_err(|e| RunError::Setup(e.to_string()))?,
            )
        }
    })
}

pub fn build_gateway(config: &RunConfig) -> Result<Box<dyn Gateway>, RunError> {
    Ok(match &config.llm.mock_fixtures {
        Some(dir) => Box::new(MockGateway::new(config.resolve(dir))),
        None => Box::new(
            HttpGateway::new(config.llm.model.clone())
                .map_err(|e| RunError::Setup(e.to_string()))?,
        ),
    })
}

fn setup_err(what: &str) -> impl Fn(String) -> RunError + '_ {
    move |e| RunError::Setup(format!("{what}: {e}"))
}

/// The loop proper. With `expected`, every produced step is checked against
/// the recorded one and the run ends where the recording ended.
pub fn run_with(
    config: &RunConfig,
    gateway: &mut dyn Gateway,
    backend: &mut dyn Backend,
    log: &mut RunLog,
    expected: Option<(&[StepRecord], StopReason)>,
) -> Result<IsolationReport, RunError> {
    config.validate()?;
    let seed = config
        .seed
        .ok_or_else(|| RunError::Config("seed not set".into()))?;
    let path = config.resolve(&config.failing_program);
    let text = std::fs::read_to_string(&path)
        .map_err(|e| setup_err("failing program")(format!("{}: {e}", path.display())))?;
    let failing = SourceProgram::new(config.bug_id.clone(), text)
        .map_err(|e| setup_err("failing program")(e.to_string()))?;
    let ast = failing
        .parse()
        .map_err(|e| setup_err("failing program")(e.to_string()))?;
    let analysis =
        analyze(&ast, config.variables).map_err(|e| setup_err("analysis")(e.to_string()))?;
    let initial = backend
        .evaluate(&failing)
        .map_err(|e| setup_err("backend")(e.to_string()))?;
    let spectrum = match (initial.classification, initial.spectrum) {
        (Classification::Failing, Some(s)) if !s.is_empty() => s,
        (c, _) => {
            return Err(RunError::Setup(format!(
                "the failing program is classified as {} under the backend",
                c.as_str()
            )))
        }
    };
    let mut set = SpectrumSet::new(spectrum).map_err(|e| setup_err("spectra")(e.to_string()))?;
    let mut agent = Agent::new(config.rl, seed)?;
    let mut conversation = match &config.llm.system_prompt {
        Some(s) => Conversation::with_system(s.clone()),
        None => Conversation::new(),
    };
    let config_hash = config.hash();
    log.push(LogRecord::Header {
        version: LOG_VERSION,
        bug_id: config.bug_id.clone(),
        config_hash: config_hash.clone(),
        seed,
    })?;

    let term = &config.termination;
    let n_max = term.target.unwrap_or(term.max_steps as usize);
    let started = Instant::now();
    let mut q = QualityState::initial(config.alpha);
    let mut feedback: Option<FeedbackPrompt> = None;
    let (mut t, mut accepted) = (0u64, 0usize);
    let stop = loop {
        if term.target.is_some_and(|k| accepted >= k) {
            break StopReason::Target;
        }
        if t >= term.max_steps {
            break StopReason::MaxSteps;
        }
        match expected {
            Some((steps, reason)) if t as usize >= steps.len() => break reason,
            Some(_) => {}
            None if term
                .budget_secs
                .is_some_and(|b| started.elapsed().as_secs_f64() >= b) =>
            {
                break StopReason::Budget
            }
            None => {}
        }
        let state = AgentState::build(
            t,
            term.max_steps,
            q.sim,
            q.div,
            q.n,
            n_max,
            agent.last_action(),
            &agent.ledger,
        );
        let action = agent.select(&state);
        t += 1;
        let prompt = render_prompt(&rule(action as u8 + 1)?, &analysis.target, &failing);
        let message = compose_turn(feedback.take().as_ref(), &prompt);
        let prompt_hash = sha256_hex(&message);
        conversation.push_user(message);
        let reply = match gateway.complete(&conversation) {
            Ok(r) => r,
            Err(e) => {
                log.push(LogRecord::Error {
                    t,
                    message: e.to_string(),
                })?;
                return Err(RunError::Gateway(e));
            }
        };
        conversation.push_assistant(reply.text.clone());

        let mut verdict = Verdict::Unparseable;
        let mut classification = None;
        let mut delta_q = 0.0;
        let mut took = false;
        if let Some(candidate) = extract_program(&reply.text) {
            let report = validate(&candidate, &failing, config.analyzer.as_ref())?;
            verdict = report.verdict;
            if report.is_valid() {
                let eval = backend.evaluate(&candidate)?;
                classification = Some(eval.classification);
                if let (Classification::Passing, Some(spec)) = (eval.classification, eval.spectrum)
                {
                    let grown = set.with(spec);
                    let next = quality(&grown, config.alpha)?;
                    let gain = next.q - q.q;
                    if gain > 0.0 {
                        set = grown;
                        q = next;
                        delta_q = gain;
                        took = true;
                        accepted += 1;
                    }
                }
            } else {
                feedback = render_feedback(&report).ok();
            }
        }
        let outcome = agent.observe(delta_q)?;
        let record = StepRecord {
            t,
            rule: action as u8 + 1,
            prompt_hash,
            reply_hash: sha256_hex(&reply.text),
            reply: reply.text,
            verdict,
            classification,
            delta_q,
            reward: outcome.reward,
            q: q.q,
            accepted: took,
            elapsed_ms: started.elapsed().as_millis() as u64,
        };
        if let Some((steps, _)) = expected {
            if let Some(field) = steps
                .get(t as usize - 1)
                .and_then(|want| record.mismatch(want))
            {
                return Err(RunError::LogMismatch {
                    t,
                    field: field.to_string(),
                });
            }
        }
        log.push(LogRecord::Step(record))?;
    };
    if let Some((steps, reason)) = expected {
        if t as usize != steps.len() || stop != reason {
            return Err(RunError::LogMismatch {
                t,
                field: "end".into(),
            });
        }
    }
    agent.finish();
    log.push(LogRecord::End {
        reason: stop,
        steps: t,
    })?;

    let ranking = localize(&set)?;
    let faulty_ranks = match &config.ground_truth {
        Some(p) => {
            let text = std::fs::read_to_string(config.resolve(p))
                .map_err(|e| setup_err("ground truth")(e.to_string()))?;
            Some(
                parse_ground_truth(&text)
                    .into_iter()
                    .map(|f| (f.clone(), ranking.rank_of(&f)))
                    .collect::<BTreeMap<_, _>>(),
            )
        }
        None => None,
    };
    Ok(IsolationReport {
        bug_id: config.bug_id.clone(),
        seed,
        config_hash,
        stop_reason: stop,
        summary: RunSummary::from_steps(log.steps()),
        quality: q,
        ranking,
        faulty_ranks,
        config: config.clone(),
    })
}

pub fn write_report(report: &IsolationReport, out: &Path) -> Result<(), RunError> {
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("report.json"), report.to_json())?;
    std::fs::write(out.join("report.txt"), report.to_text())?;
    Ok(())
}

/// Runs with the backend and gateway named in the configuration, writing
/// `runlog.ndjson`, `report.json` and `report.txt` to the output directory.
pub fn run(config: &RunConfig) -> Result<IsolationReport, RunError> {
    let config = prepare(config);
    config.validate()?;
    let out = config.resolve(&config.out_dir);
    std::fs::create_dir_all(&out)?;
    let mut backend = build_backend(&config)?;
    let mut gateway = build_gateway(&config)?;
    let mut log = RunLog::create(&out.join("runlog.ndjson"))?;
    let report = run_with(&config, &mut gateway, &mut backend, &mut log, None)?;
    write_report(&report, &out)?;
    Ok(report)
}

/// Recomputes a run from the replies stored in its log.
pub fn replay(config: &RunConfig, log_path: &Path) -> Result<IsolationReport, RunError> {
    let records = read_log(log_path)?;
    let Some(LogRecord::Header {
        config_hash, seed, ..
    }) = records.first()
    else {
        return Err(RunError::LogFormat(
            "log does not start with a header".into(),
        ));
    };
    let mut config = config.clone();
    config.seed.get_or_insert(*seed);
    if config.hash() != *config_hash {
        return Err(RunError::ConfigMismatch {
            logged: config_hash.clone(),
            given: config.hash(),
        });
    }
    let steps: Vec<StepRecord> = records
        .iter()
        .filter_map(|r| match r {
            LogRecord::Step(s) => Some(s.clone()),
            _ => None,
        })
        .collect();
    let reason = records
        .iter()
        .find_map(|r| match r {
            LogRecord::End { reason, .. } => Some(*reason),
            _ => None,
        })
        .ok_or_else(|| RunError::LogFormat("log has no end record".into()))?;
    let mut gateway = ScriptedGateway::new(steps.iter().map(|s| s.reply.clone()));
    let mut backend = build_backend(&config)?;
    run_with(
        &config,
        &mut gateway,
        &mut backend,
        &mut RunLog::in_memory(),
        Some((&steps, reason)),
    )
}
