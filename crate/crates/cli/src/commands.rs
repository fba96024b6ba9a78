//! The subcommands. Each one writes its files and returns whether it passed.

use std::path::Path;

use anyhow::Result;
use bellcheck_core::checks::{
    ch_value, check_axioms, ch_within_bounds, find_common_cause, find_common_cause_classical,
    verify_local_causality_stochastic, verify_prop3, ChEntry, CheckReport, CommonCause, LocalCausalityOptions,
};
use bellcheck_core::dynamics::{extend_backward_surface, extend_forward, ExtensionResult};
use bellcheck_core::qnet::check_no_signaling;
use bellcheck_core::{ClassicalState, Error};
use serde::Serialize;
use serde_json::{json, Value};

use crate::output::{defects_csv, marginals_csv, write_atomic, write_json, StateFile};
use crate::scenario::{Scenario, ValidationError};

/// Why a command could not produce a verdict.
#[derive(Debug)]
pub enum CommandError {
    Validation(ValidationError),
    Internal(anyhow::Error),
}

impl From<ValidationError> for CommandError {
    fn from(e: ValidationError) -> Self {
        CommandError::Validation(e)
    }
}

impl From<anyhow::Error> for CommandError {
    fn from(e: anyhow::Error) -> Self {
        CommandError::Internal(e)
    }
}

pub type Outcome = std::result::Result<bool, CommandError>;

/// Core errors caused by the scenario rather than by the program.
fn classify(e: Error, context: &str) -> CommandError {
    match e {
        Error::CapExceeded { .. }
        | Error::WindowTooSmall(_)
        | Error::WindowOverflow(_)
        | Error::Precondition(_)
        | Error::MissingRegion(_)
        | Error::SupportNotContained(_)
        | Error::InvalidState(_)
        | Error::InvalidTable(_)
        | Error::InvariantViolation(_) => CommandError::Validation(ValidationError(format!("{context}: {e}"))),
        other => CommandError::Internal(anyhow::Error::new(other).context(context.to_string())),
    }
}

fn grow(sc: &Scenario) -> std::result::Result<ExtensionResult, CommandError> {
    let (seg, layers) = sc.segment()?;
    let rule = sc.rule()?;
    let init = sc.initial(&seg.cones())?;
    extend_forward(&init, &seg, rule.as_cell_rule(), layers).map_err(|e| classify(e, "lattice"))
}

fn header(sc: &Scenario, check: &str, passed: bool) -> Value {
    json!({
        "schema_version": sc.file.schema_version,
        "scenario": sc.file.name,
        "check": check,
        "passed": passed,
        "seed": sc.seed,
        "tolerance": sc.tolerance,
    })
}

fn write_report(out: &Path, mut head: Value, body: Value) -> Result<()> {
    if let (Some(h), Value::Object(b)) = (head.as_object_mut(), body) {
        for (k, v) in b {
            h.entry(k).or_insert(v);
        }
    }
    write_json(out, "report.json", &head)
}

fn finish(sc: &Scenario, report: &CheckReport, details: Value) -> Outcome {
    let passed = report.passed();
    eprintln!("{}: {} in {:.2?}", report.check, if passed { "pass" } else { "FAIL" }, report.wall_clock);
    let mut body = serde_json::to_value(report).map_err(anyhow::Error::from)?;
    if let Some(o) = body.as_object_mut() {
        o.insert("details".into(), details);
    }
    write_report(&sc.out, header(sc, &report.check, passed), body)?;
    Ok(passed)
}

fn empty_report(sc: &Scenario, check: &str) -> CheckReport {
    CheckReport { scenario: sc.file.name.clone(), check: check.into(), tolerance: sc.tolerance, ..CheckReport::default() }
}

pub fn simulate(sc: &Scenario) -> Outcome {
    let ext = grow(sc)?;
    write_atomic(&sc.out, "marginals.csv", &marginals_csv(&ext.state)?)?;
    write_json(&sc.out, "state.json", &StateFile { domain: ext.state.domain(), weights: ext.state.weights() })?;
    let body = json!({ "cones": ext.state.domain().len(), "grown": ext.grown });
    write_report(&sc.out, header(sc, "simulate", true), body)?;
    Ok(true)
}

pub fn local_causality(sc: &Scenario) -> Outcome {
    let ext = grow(sc)?;
    let defaults = LocalCausalityOptions::default();
    let opts = LocalCausalityOptions {
        max_event_region: sc.file.max_event_region.unwrap_or(defaults.max_event_region),
        tolerance: sc.tolerance,
        max_cases: sc.max_cases,
        seed: sc.seed.unwrap_or(0),
        collect_rows: true,
        arbitrary_event_regions: sc.file.arbitrary_event_regions,
        ..defaults
    };
    let mut report = verify_local_causality_stochastic(&ext.state, &opts).map_err(|e| classify(e, "local-causality"))?;
    report.scenario = sc.file.name.clone();
    write_atomic(&sc.out, "defects.csv", &defects_csv(&report.rows)?)?;
    finish(sc, &report, json!({ "options": opts }))
}

pub fn ch(sc: &Scenario) -> Outcome {
    let q = sc.quantum()?;
    let Some(spec) = &q.ch else {
        return Err(ValidationError("quantum.ch: missing".into()).into());
    };
    let start = std::time::Instant::now();
    let phi = q.state(&mut sc.rng(2))?;
    let a1 = q.spin(spec.a1, "quantum.ch.a1")?;
    let a2 = q.spin(spec.a2, "quantum.ch.a2")?;
    let b1 = q.spin(spec.b1, "quantum.ch.b1")?;
    let b2 = q.spin(spec.b2, "quantum.ch.b2")?;
    let mut report = empty_report(sc, "ch");
    report.cases = 1;
    let original = ch_value(&phi, &a1, &a2, &b1, &b2);
    let original_ok = ch_within_bounds(original, sc.tolerance);
    let mut details = json!({});
    match spec.partition {
        Some(p) => {
            let part = q.partition(p, "quantum.ch.partition")?;
            let rep = verify_prop3(&phi, &a1, &a2, &b1, &b2, &part).map_err(|e| classify(e, "ch"))?;
            let modified_ok = ch_within_bounds(rep.modified, sc.tolerance);
            report.ch.push(ChEntry { label: "original".into(), original, modified: Some(rep.modified), within_bounds: original_ok });
            if !modified_ok {
                report.violations.push(format!("CH value {} after the partition is outside [-1, 0]", rep.modified));
            }
            details = serde_json::to_value(&rep).map_err(anyhow::Error::from)?;
        }
        None => report.ch.push(ChEntry { label: "original".into(), original, modified: None, within_bounds: original_ok }),
    }
    if !original_ok {
        report.violations.push(format!("CH value {original} of the state is outside [-1, 0]"));
    }
    report.max_defect = original.max(-1.0 - original).max(0.0);
    report.wall_clock = start.elapsed();
    finish(sc, &report, details)
}

#[derive(Serialize)]
struct Solution {
    region: bellcheck_core::Region,
    members: usize,
    ranks: Vec<usize>,
    trivial: bool,
    commuting: bool,
    max_defect: f64,
}

impl From<&CommonCause> for Solution {
    fn from(cc: &CommonCause) -> Self {
        Self {
            region: cc.region.clone(),
            members: cc.partition.len(),
            ranks: cc.partition.projections().iter().map(|p| p.trace().re.round() as usize).collect(),
            trivial: cc.trivial,
            commuting: cc.commuting,
            max_defect: cc.max_defect,
        }
    }
}

pub fn common_cause(sc: &Scenario) -> Outcome {
    let start = std::time::Instant::now();
    let mut rng = sc.rng(3);
    let found = if let Some(q) = &sc.file.quantum {
        let net = q.net()?;
        let phi = q.state(&mut sc.rng(2))?;
        let a = q.projection(&q.a, "quantum.a")?;
        let b = q.projection(&q.b, "quantum.b")?;
        find_common_cause(&net, &phi, &a, &b, q.past, q.mode.mode(), &mut rng)
    } else {
        let ext = grow(sc)?;
        let (a, b) = sc.classical_events(ext.state.domain())?;
        let cl = sc.file.classical.as_ref().expect("checked by classical_events");
        find_common_cause_classical(&ext.state, &a, &b, cl.past, cl.mode.mode(), &mut rng)
    };
    let mut report = empty_report(sc, "common-cause");
    let solutions: Vec<Solution> = match found {
        Ok(s) => s.iter().map(Solution::from).collect(),
        Err(e @ (Error::NotCorrelated(_) | Error::NoCandidateRegion)) => {
            report.violations.push(e.to_string());
            Vec::new()
        }
        Err(e) => return Err(classify(e, "common-cause")),
    };
    if solutions.is_empty() && report.violations.is_empty() {
        report.violations.push("no partition of the unit in the chosen past screens off the correlation".into());
    }
    report.cases = solutions.len() as u64;
    report.max_defect = solutions.iter().map(|s| s.max_defect).fold(0.0, f64::max);
    report.wall_clock = start.elapsed();
    finish(sc, &report, json!({ "solutions": solutions }))
}

pub fn no_signaling(sc: &Scenario) -> Outcome {
    let start = std::time::Instant::now();
    let q = sc.quantum()?;
    let Some(p) = q.partition else {
        return Err(ValidationError("quantum.partition: missing".into()).into());
    };
    let phi = q.state(&mut sc.rng(2))?;
    let part = q.partition(p, "quantum.partition")?;
    let b = q.projection(&q.b, "quantum.b")?;
    let ns = check_no_signaling(&phi, &part, b.matrix()).map_err(|e| classify(e, "no-signaling"))?;
    let mut report = empty_report(sc, "no-signaling");
    report.cases = 1;
    report.max_defect = (ns.before - ns.after).abs();
    if report.max_defect > sc.tolerance {
        report.violations.push(format!("φ(B) changes from {} to {} under the operation", ns.before, ns.after));
    }
    report.wall_clock = start.elapsed();
    finish(sc, &report, json!({ "before": ns.before, "after": ns.after }))
}

pub fn axioms(sc: &Scenario) -> Outcome {
    let start = std::time::Instant::now();
    let net = sc.quantum()?.net()?;
    let ax = check_axioms(&net);
    let mut report = empty_report(sc, "axioms");
    let required = [
        ("isotony", Some(ax.isotony)),
        ("microcausality", Some(ax.microcausality)),
        ("intersection property", Some(ax.intersection)),
        ("half-shift covariance", ax.half_shift_covariance),
    ];
    for (name, value) in required {
        report.cases += u64::from(value.is_some());
        if value == Some(false) {
            report.violations.push(format!("{name} fails"));
        }
    }
    report.wall_clock = start.elapsed();
    finish(sc, &report, serde_json::to_value(&ax).map_err(anyhow::Error::from)?)
}

pub fn extend_backward(sc: &Scenario) -> Outcome {
    let (seg, _) = sc.segment()?;
    let table = *sc.rule()?.table();
    let later: ClassicalState = sc.initial(&seg.cones())?;
    match extend_backward_surface(&later, &seg, &table) {
        Ok((earlier_seg, earlier)) => {
            write_atomic(&sc.out, "marginals.csv", &marginals_csv(&earlier)?)?;
            write_json(&sc.out, "state.json", &StateFile { domain: earlier.domain(), weights: earlier.weights() })?;
            let (lo2, hi2) = earlier_seg.window();
            let body = json!({ "segment": { "t2": earlier_seg.t2(), "lo2": lo2, "hi2": hi2 } });
            write_report(&sc.out, header(sc, "extend-backward", true), body)?;
            Ok(true)
        }
        Err(Error::BackwardCell { cell, left, right, source }) => {
            let (kind, ratio) = match *source {
                Error::NotInvertible(p) => (format!("not invertible, p(+) = p(-) = {p}"), None),
                Error::NegativeProbability { ratio, .. } => (source.to_string(), Some(ratio)),
                ref other => (other.to_string(), None),
            };
            eprintln!("extend-backward: FAIL at {cell}: {kind}");
            let body = json!({
                "failure": { "cell": cell, "context": format!("{left}{right}"), "ratio": ratio, "reason": kind }
            });
            write_report(&sc.out, header(sc, "extend-backward", false), body)?;
            Ok(false)
        }
        Err(e) => Err(classify(e, "extend-backward")),
    }
}
