//! Scenario files: the JSON input of every command.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use bellcheck_core::checks::{PastKind, SearchMode};
use bellcheck_core::dynamics::{CellRule, SpacelikeCoupled, TransitionTable};
use bellcheck_core::qnet::{
    c, embed_qubit, pauli_x, pauli_z, spin_projection, CMatrix, DensityState, FiniteNet, PartitionOfUnit, Projection,
};
use bellcheck_core::{CauchySegment, ClassicalState, CylinderEvent, MinimalCone, Region, Spin};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

pub const SCHEMA_VERSION: u32 = 1;

/// Scenario problems, reported with the path of the offending field.
#[derive(Debug)]
pub struct ValidationError(pub String);

impl std::fmt::Display for ValidationError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ValidationError {}

type Checked<T> = Result<T, ValidationError>;

fn invalid<T>(path: &str, msg: impl std::fmt::Display) -> Checked<T> {
    Err(ValidationError(format!("{path}: {msg}")))
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    pub name: String,
    pub lattice: Option<Lattice>,
    pub table: Option<TableSpec>,
    #[serde(default)]
    pub rule: RuleSpec,
    pub initial: Option<InitialSpec>,
    #[serde(default)]
    pub checks: Vec<String>,
    pub tolerance: Option<f64>,
    pub seed: Option<u64>,
    pub max_cases: Option<usize>,
    pub max_event_region: Option<usize>,
    #[serde(default)]
    pub arbitrary_event_regions: bool,
    pub output: Option<PathBuf>,
    pub classical: Option<ClassicalSpec>,
    pub quantum: Option<QuantumSpec>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Lattice {
    #[serde(default)]
    pub t2: i32,
    pub lo2: i32,
    pub width: usize,
    pub layers: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum TableSpec {
    /// `"majority"` or `"random"`.
    Preset(String),
    Entries(BTreeMap<String, f64>),
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RuleSpec {
    #[default]
    Table,
    SpacelikeCoupled { coupling: f64 },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialSpec {
    Uniform,
    /// Independent cones with the given `p(+)`, in cone order.
    Bias {
        #[serde(rename = "pPlus")]
        p_plus: Vec<f64>,
    },
    Weights { weights: Vec<f64> },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct EventSpec {
    pub cones: Vec<MinimalCone>,
    /// Accepted configurations as spin strings in the order of `cones`.
    pub accepted: Vec<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ClassicalSpec {
    pub event_a: EventSpec,
    pub event_b: EventSpec,
    #[serde(default = "weak")]
    pub past: PastKind,
    #[serde(default)]
    pub mode: ModeSpec,
}

fn weak() -> PastKind {
    PastKind::Weak
}

#[derive(Clone, Copy, Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeSpec {
    AbelianExhaustive,
    #[default]
    MaximalAtomic,
    Noncommuting,
}

impl ModeSpec {
    pub fn mode(self) -> SearchMode {
        match self {
            ModeSpec::AbelianExhaustive => SearchMode::AbelianExhaustive,
            ModeSpec::MaximalAtomic => SearchMode::MaximalAtomic,
            ModeSpec::Noncommuting => SearchMode::Noncommuting { restarts: 4, iterations: 200 },
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct QuantumSpec {
    pub net: NetSpec,
    pub state: StateSpec,
    pub ch: Option<ChSpec>,
    pub a: Option<LocalProjection>,
    pub b: Option<LocalProjection>,
    #[serde(default = "weak")]
    pub past: PastKind,
    #[serde(default)]
    pub mode: ModeSpec,
    pub partition: Option<SpinPartition>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NetSpec {
    /// Abelian net of every double cone inside `sites`, one qubit per site.
    Ising { sites: Vec<MinimalCone> },
    /// Qubits with explicit regions, each carrying the full matrix algebra of
    /// the listed qubits.
    Qubits { qubits: usize, regions: Vec<RegionSpec> },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RegionSpec {
    pub cones: Vec<MinimalCone>,
    pub qubits: Vec<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StateSpec {
    Singlet,
    MaximallyMixed,
    Random,
    /// Amplitudes as `[re, im]` pairs.
    Pure { amplitudes: Vec<[f64; 2]> },
}

/// Spin projection at angle `angle` on one qubit.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SpinPartition {
    pub qubit: usize,
    pub angle: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct LocalProjection {
    pub region: Vec<MinimalCone>,
    pub qubit: usize,
    pub angle: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ChSpec {
    pub a1: SpinPartition,
    pub a2: SpinPartition,
    pub b1: SpinPartition,
    pub b2: SpinPartition,
    pub partition: Option<SpinPartition>,
}

/// Command line values that override the file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub tolerance: Option<f64>,
    pub max_cases: Option<usize>,
    pub out: Option<PathBuf>,
}

#[derive(Clone)]
pub struct Scenario {
    pub file: ScenarioFile,
    pub seed: Option<u64>,
    pub tolerance: f64,
    pub max_cases: Option<usize>,
    pub out: PathBuf,
}

pub fn load(path: &Path, overrides: &Overrides) -> Checked<Scenario> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ValidationError(format!("{}: cannot read scenario: {e}", path.display())))?;
    parse(&text, overrides)
}

pub fn parse(text: &str, overrides: &Overrides) -> Checked<Scenario> {
    let raw: serde_json::Value = serde_json::from_str(text).map_err(|e| ValidationError(format!("scenario: {e}")))?;
    match raw.get("schemaVersion").and_then(serde_json::Value::as_u64) {
        Some(v) if v == u64::from(SCHEMA_VERSION) => {}
        Some(v) => return invalid("schemaVersion", format!("unsupported version {v}, expected {SCHEMA_VERSION}")),
        None => return invalid("schemaVersion", "missing"),
    }
    let file: ScenarioFile = serde_json::from_value(raw).map_err(|e| ValidationError(format!("scenario: {e}")))?;
    let seed = overrides.seed.or(file.seed);
    let tolerance = overrides.tolerance.or(file.tolerance).unwrap_or(bellcheck_core::PROB_TOL);
    if !(tolerance.is_finite() && tolerance >= 0.0) {
        return invalid("tolerance", format!("{tolerance} is not a nonnegative number"));
    }
    let max_cases = overrides.max_cases.or(file.max_cases);
    if max_cases.is_some() && seed.is_none() {
        return invalid("seed", "sampling with maxCases needs a seed");
    }
    if matches!(file.table, Some(TableSpec::Preset(ref p)) if p == "random") && seed.is_none() {
        return invalid("seed", "a random table needs a seed");
    }
    let out = overrides
        .out
        .clone()
        .or_else(|| file.output.clone())
        .unwrap_or_else(|| PathBuf::from("bellcheck-out"));
    Ok(Scenario { file, seed, tolerance, max_cases, out })
}

pub enum Rule {
    Table(TransitionTable),
    Coupled(SpacelikeCoupled),
}

impl Rule {
    pub fn as_cell_rule(&self) -> &dyn CellRule {
        match self {
            Rule::Table(t) => t,
            Rule::Coupled(r) => r,
        }
    }

    pub fn table(&self) -> &TransitionTable {
        match self {
            Rule::Table(t) => t,
            Rule::Coupled(r) => &r.table,
        }
    }
}

impl Scenario {
    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed.unwrap_or(0));
        rng.set_stream(stream);
        rng
    }

    pub fn segment(&self) -> Checked<(CauchySegment, usize)> {
        let Some(l) = &self.file.lattice else {
            return invalid("lattice", "missing");
        };
        match CauchySegment::with_width(l.t2, l.lo2, l.width) {
            Ok(seg) => Ok((seg, l.layers)),
            Err(e) => invalid("lattice", e),
        }
    }

    pub fn rule(&self) -> Checked<Rule> {
        let table = match &self.file.table {
            None => return invalid("table", "missing"),
            Some(TableSpec::Preset(p)) if p == "majority" => TransitionTable::majority(),
            Some(TableSpec::Preset(p)) if p == "random" => TransitionTable::random(&mut self.rng(1)),
            Some(TableSpec::Preset(p)) => return invalid("table", format!("unknown preset {p:?}")),
            Some(TableSpec::Entries(map)) => TransitionTable::from_map(map).or_else(|e| invalid("table", e))?,
        };
        match self.file.rule {
            RuleSpec::Table => Ok(Rule::Table(table)),
            RuleSpec::SpacelikeCoupled { coupling } if (0.0..=1.0).contains(&coupling) => {
                Ok(Rule::Coupled(SpacelikeCoupled { table, coupling }))
            }
            RuleSpec::SpacelikeCoupled { coupling } => invalid("rule.coupling", format!("{coupling} is not a probability")),
        }
    }

    pub fn initial(&self, domain: &Region) -> Checked<ClassicalState> {
        let state = match &self.file.initial {
            None | Some(InitialSpec::Uniform) => ClassicalState::uniform(domain.clone()),
            Some(InitialSpec::Bias { p_plus }) => {
                if p_plus.len() != domain.len() {
                    return invalid("initial.pPlus", format!("{} values for {} cones", p_plus.len(), domain.len()));
                }
                ClassicalState::product(domain.clone(), p_plus)
            }
            Some(InitialSpec::Weights { weights }) => {
                if weights.len() != 1 << domain.len() {
                    return invalid("initial.weights", format!("{} values for {} configurations", weights.len(), 1u64 << domain.len()));
                }
                ClassicalState::new(domain.clone(), weights.clone())
            }
        };
        state.or_else(|e| invalid("initial", e))
    }

    pub fn classical_events(&self, domain: &Region) -> Checked<(CylinderEvent, CylinderEvent)> {
        let Some(cl) = &self.file.classical else {
            return invalid("classical", "missing");
        };
        Ok((event(&cl.event_a, domain, "classical.eventA")?, event(&cl.event_b, domain, "classical.eventB")?))
    }

    pub fn quantum(&self) -> Checked<&QuantumSpec> {
        self.file.quantum.as_ref().ok_or_else(|| ValidationError("quantum: missing".into()))
    }
}

fn event(spec: &EventSpec, domain: &Region, path: &str) -> Checked<CylinderEvent> {
    let support: Region = spec.cones.iter().copied().collect();
    if support.len() != spec.cones.len() {
        return invalid(&format!("{path}.cones"), "repeated cone");
    }
    if let Some(c) = support.iter().find(|c| !domain.contains(*c)) {
        return invalid(&format!("{path}.cones"), format!("{c} is outside the lattice"));
    }
    let mut accepted = Vec::new();
    for (k, s) in spec.accepted.iter().enumerate() {
        let spins: Vec<Spin> = s
            .chars()
            .map(|ch| match ch {
                '+' => Ok(Spin::Plus),
                '-' | '−' => Ok(Spin::Minus),
                other => invalid(&format!("{path}.accepted[{k}]"), format!("unexpected {other:?}")),
            })
            .collect::<Checked<_>>()?;
        if spins.len() != spec.cones.len() {
            return invalid(&format!("{path}.accepted[{k}]"), "length differs from cones");
        }
        let bits = spec.cones.iter().zip(&spins).fold(0u64, |acc, (c, s)| {
            acc | u64::from(s.is_minus()) << support.index_of(*c).expect("listed cone")
        });
        accepted.push(bits);
    }
    CylinderEvent::new(support, accepted).or_else(|e| invalid(path, e))
}

impl QuantumSpec {
    pub fn qubits(&self) -> usize {
        match &self.net {
            NetSpec::Ising { sites } => sites.len(),
            NetSpec::Qubits { qubits, .. } => *qubits,
        }
    }

    pub fn net(&self) -> Checked<FiniteNet> {
        match &self.net {
            NetSpec::Ising { sites } => {
                FiniteNet::ising_double_cones(&sites.iter().copied().collect()).or_else(|e| invalid("quantum.net", e))
            }
            NetSpec::Qubits { qubits, regions } => {
                let n = *qubits;
                if n == 0 || n > 6 {
                    return invalid("quantum.net.qubits", format!("{n} is outside 1..=6"));
                }
                let mut spec = Vec::new();
                for (k, r) in regions.iter().enumerate() {
                    if let Some(q) = r.qubits.iter().find(|q| **q >= n) {
                        return invalid(&format!("quantum.net.regions[{k}].qubits"), format!("qubit {q} does not exist"));
                    }
                    let gens: Vec<CMatrix> = r
                        .qubits
                        .iter()
                        .flat_map(|&q| [embed_qubit(&pauli_x(), q, n), embed_qubit(&pauli_z(), q, n)])
                        .collect();
                    spec.push((r.cones.iter().copied().collect::<Region>(), gens));
                }
                FiniteNet::new(1 << n, spec).or_else(|e| invalid("quantum.net", e))
            }
        }
    }

    pub fn state(&self, rng: &mut ChaCha8Rng) -> Checked<DensityState> {
        let d = 1usize << self.qubits();
        match &self.state {
            StateSpec::Singlet if d == 4 => Ok(DensityState::singlet()),
            StateSpec::Singlet => invalid("quantum.state", "the singlet needs two qubits"),
            StateSpec::MaximallyMixed => Ok(DensityState::maximally_mixed(d)),
            StateSpec::Random => Ok(DensityState::random(d, rng)),
            StateSpec::Pure { amplitudes } => {
                if amplitudes.len() != d {
                    return invalid("quantum.state.amplitudes", format!("{} amplitudes for dimension {d}", amplitudes.len()));
                }
                let psi: Vec<_> = amplitudes.iter().map(|[re, im]| c(*re, *im)).collect();
                DensityState::pure(&psi).or_else(|e| invalid("quantum.state", e))
            }
        }
    }

    pub fn spin(&self, p: SpinPartition, path: &str) -> Checked<CMatrix> {
        if p.qubit >= self.qubits() {
            return invalid(path, format!("qubit {} does not exist", p.qubit));
        }
        Ok(embed_qubit(&spin_projection(p.angle), p.qubit, self.qubits()))
    }

    pub fn projection(&self, p: &Option<LocalProjection>, path: &str) -> Checked<Projection> {
        let Some(p) = p else {
            return invalid(path, "missing");
        };
        let m = self.spin(SpinPartition { qubit: p.qubit, angle: p.angle }, path)?;
        Projection::new(m, p.region.iter().copied().collect()).or_else(|e| invalid(path, e))
    }

    pub fn partition(&self, p: SpinPartition, path: &str) -> Checked<PartitionOfUnit> {
        let m = self.spin(p, path)?;
        let d = m.nrows();
        PartitionOfUnit::new(vec![m.clone(), CMatrix::identity(d, d) - m], Region::empty()).or_else(|e| invalid(path, e))
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    fn minimal(extra: &str) -> String {
        format!(r#"{{"schemaVersion": 1, "name": "t", "lattice": {{"lo2": -3, "width": 7, "layers": 2}}{extra}}}"#)
    }

    #[test]
    fn missing_context_is_named() {
        let text = minimal(
            r#", "table": {"+++": 1, "++-": 1, "+-+": 1, "+--": 0, "-++": 1, "-+-": 0, "--+": 0}"#,
        );
        let sc = parse(&text, &Overrides::default()).unwrap();
        let err = sc.rule().err().unwrap().0;
        assert!(err.contains("table") && err.contains("\"---\""), "{err}");
    }

    #[test]
    fn version_is_required() {
        let err = parse(r#"{"name": "t"}"#, &Overrides::default()).err().unwrap().0;
        assert!(err.starts_with("schemaVersion"));
        let err = parse(r#"{"schemaVersion": 2, "name": "t"}"#, &Overrides::default()).err().unwrap().0;
        assert!(err.contains("unsupported"));
    }

    #[test]
    fn sampling_needs_a_seed() {
        let text = minimal(r#", "table": "majority", "maxCases": 10"#);
        assert!(parse(&text, &Overrides::default()).is_err());
        let ov = Overrides { seed: Some(1), ..Default::default() };
        assert_eq!(parse(&text, &ov).unwrap().seed, Some(1));
    }

    #[test]
    fn events_parse_in_listed_order() {
        let domain: Region = ["V(0,0)", "V(1,1)"].iter().map(|s| s.parse().unwrap()).collect();
        let spec = EventSpec { cones: vec!["V(1,1)".parse().unwrap(), "V(0,0)".parse().unwrap()], accepted: vec!["+-".into()] };
        let e = event(&spec, &domain, "e").unwrap();
        // V(0,0) is bit 0 and carries the minus sign
        assert_eq!(e.accepted(), &[1]);
    }
}
