//! Verifiers built on top of the lattice, the dynamics and the matrix nets:
//! screening-off for the stochastic model, common cause search and the
//! Clauser-Horne bound.

use std::time::Duration;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{gather, positions_in, ClassicalState, CylinderEvent, Spin, DEFAULT_ENUMERATION_CAP};
use crate::geometry::{
    causally_precedes, double_complement, join, shielding_unchecked, spacelike, CauchySegment, MinimalCone, Region,
    Shielding, ShieldingVariant,
};
use crate::qnet::{
    c, hs_norm, identity, is_projection, nonselective, spectral_projections, CMatrix, DensityState,
    FiniteNet, PartitionOfUnit, Projection, Subalgebra,
};
use crate::PROB_TOL;

/// Settings for [`verify_local_causality_stochastic`].
#[derive(Clone, Debug, Serialize)]
pub struct LocalCausalityOptions {
    /// Largest double cone used for the events `A` and `B`.
    pub max_event_region: usize,
    /// Largest screening region.
    pub max_screening_region: usize,
    pub tolerance: f64,
    /// Sample this many `(V_A, V_B, V_C)` triples instead of all of them.
    pub max_cases: Option<usize>,
    pub seed: u64,
    /// Keep the worst event pair of every conditioning atom.
    pub collect_rows: bool,
    /// Draw `A` and `B` from every region of at most `max_event_region`
    /// cones instead of double cones only.
    pub arbitrary_event_regions: bool,
}

impl Default for LocalCausalityOptions {
    fn default() -> Self {
        Self {
            max_event_region: 4,
            max_screening_region: 10,
            tolerance: PROB_TOL,
            max_cases: None,
            seed: 0,
            collect_rows: true,
            arbitrary_event_regions: false,
        }
    }
}

/// One conditioning instance `(A, B, C, V_C)` with its probabilities.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Quintuple {
    pub va: Region,
    pub vb: Region,
    pub vc: Region,
    pub event_a: CylinderEvent,
    pub event_b: CylinderEvent,
    /// Configuration of `V_C` conditioned on, as a bit word in region order.
    pub atom: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScreeningValues {
    pub p_c: f64,
    pub p_ab_c: f64,
    pub p_a_c: f64,
    pub p_b_c: f64,
    /// `|p(AB|C) - p(A|C) p(B|C)|`.
    pub product_defect: f64,
    /// `|p(A|BC) - p(A|C)|`, when `p(BC) > 0`.
    pub asymmetric_defect: Option<f64>,
}

impl ScreeningValues {
    pub fn defect(&self) -> f64 {
        self.product_defect.max(self.asymmetric_defect.unwrap_or(0.0))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Failure {
    pub case_index: u64,
    pub quintuple: Quintuple,
    pub values: ScreeningValues,
}

/// Worst event pair for one `(V_A, V_B, V_C, atom)`.
#[derive(Clone, Debug, Serialize)]
pub struct DefectRow {
    pub case_index: u64,
    pub va: Region,
    pub vb: Region,
    pub vc: Region,
    pub atom: String,
    pub p_ab_c: f64,
    pub p_a_c: f64,
    pub p_b_c: f64,
    pub defect: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChEntry {
    pub label: String,
    pub original: f64,
    pub modified: Option<f64>,
    pub within_bounds: bool,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct CheckReport {
    pub scenario: String,
    pub check: String,
    pub tolerance: f64,
    /// Event pairs evaluated under a conditioning atom.
    pub cases: u64,
    pub triples: u64,
    pub atoms: u64,
    pub skipped_zero_probability: u64,
    pub max_defect: f64,
    pub failures: Vec<Failure>,
    /// Failures that are not screening defects, in words.
    pub violations: Vec<String>,
    pub ch: Vec<ChEntry>,
    #[serde(skip)]
    pub rows: Vec<DefectRow>,
    #[serde(skip)]
    pub wall_clock: Duration,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.violations.is_empty()
    }
}

/// Spin string of a configuration word, in region order.
pub fn atom_label(bits: u64, len: usize) -> String {
    (0..len).map(|k| Spin::from_bit(bits >> k & 1 == 1).symbol()).collect()
}

/// Every double cone inside `domain` with at most `max` cones, sorted.
pub fn double_cones_within(domain: &Region, max: usize) -> Vec<Region> {
    let cones: Vec<MinimalCone> = domain.iter().collect();
    let mut out: Vec<Region> = Vec::new();
    for (k, &a) in cones.iter().enumerate() {
        for &b in &cones[k..] {
            let r = join(a, b).into_region();
            if r.len() <= max && r.is_subset(domain) {
                out.push(r);
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Every nonempty subset of `domain` with at most `max` cones, sorted.
pub fn subsets_within(domain: &Region, max: usize) -> Vec<Region> {
    let cones: Vec<MinimalCone> = domain.iter().collect();
    let mut out: Vec<Region> = vec![Region::empty()];
    for &c in &cones {
        let grown: Vec<Region> = out
            .iter()
            .filter(|r| r.len() < max)
            .map(|r| {
                let mut r = r.clone();
                r.insert(c);
                r
            })
            .collect();
        out.extend(grown);
    }
    out.retain(|r| !r.is_empty());
    out.sort();
    out
}

/// Contiguous pieces of thickened Cauchy surfaces lying inside `domain`.
pub fn cauchy_pieces_within(domain: &Region, max: usize) -> Vec<Region> {
    let (Some(t_lo), Some(t_hi)) = (domain.min_time2(), domain.max_time2()) else {
        return Vec::new();
    };
    let i_lo = domain.iter().map(|c| c.i2()).min().unwrap_or(0);
    let i_hi = domain.iter().map(|c| c.i2()).max().unwrap_or(0);
    let mut out: Vec<Region> = Vec::new();
    for t2 in t_lo..t_hi {
        for lo in i_lo..=i_hi {
            for hi in lo..=i_hi {
                let seg = CauchySegment::new(t2, lo, hi).expect("ordered window");
                let piece = seg.cones();
                if piece.is_empty() || piece.len() > max || !piece.is_subset(domain) {
                    continue;
                }
                // only windows that end on cones, so each piece appears once
                let first = piece.iter().map(|c| c.i2()).min();
                let last = piece.iter().map(|c| c.i2()).max();
                if first == Some(lo) && last == Some(hi) {
                    out.push(piece);
                }
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Event sets on a region as lists of accepted configurations: every
/// nontrivial event for regions of at most two cones, atoms otherwise.
fn region_events(v: &Region) -> Vec<Vec<usize>> {
    let m = 1usize << v.len();
    if v.len() <= 2 {
        (1..(1usize << m) - 1)
            .map(|mask| (0..m).filter(|x| mask >> x & 1 == 1).collect())
            .collect()
    } else {
        (0..m).map(|x| vec![x]).collect()
    }
}

fn event_from_configs(v: &Region, configs: &[usize]) -> CylinderEvent {
    CylinderEvent::new(v.clone(), configs.iter().map(|&x| x as u64)).expect("region within cap")
}

/// Joint weights `T[c | a << |C| | b << (|C| + |A|)]` of the configurations
/// on `V_C`, `V_A`, `V_B`.
struct JointTable {
    nc: usize,
    na: usize,
    nb: usize,
    weights: Vec<f64>,
}

impl JointTable {
    fn build(state: &ClassicalState, va: &Region, vb: &Region, vc: &Region) -> Result<Self> {
        let dom = state.domain();
        let (pa, pb, pc) = (positions_in(va, dom)?, positions_in(vb, dom)?, positions_in(vc, dom)?);
        let (na, nb, nc) = (va.len(), vb.len(), vc.len());
        let bits = na + nb + nc;
        if bits > 2 * DEFAULT_ENUMERATION_CAP {
            return Err(Error::CapExceeded { what: "joint table", size: bits, cap: 2 * DEFAULT_ENUMERATION_CAP });
        }
        let mut weights = vec![0.0; 1 << bits];
        for (x, &w) in state.weights().iter().enumerate() {
            let x = x as u64;
            let idx = gather(x, &pc) | gather(x, &pa) << nc | gather(x, &pb) << (nc + na);
            weights[idx as usize] += w;
        }
        Ok(Self { nc, na, nb, weights })
    }

    fn at(&self, c: usize, a: usize, b: usize) -> f64 {
        self.weights[c | a << self.nc | b << (self.nc + self.na)]
    }

    fn p_atom(&self, c: usize) -> f64 {
        let mut s = 0.0;
        for b in 0..1 << self.nb {
            for a in 0..1 << self.na {
                s += self.at(c, a, b);
            }
        }
        s
    }

    /// Column sums `Σ_a T[c, a, b]` and the restriction of the atom to event rows.
    fn columns(&self, c: usize, rows: &[usize]) -> Vec<f64> {
        let mut out = vec![0.0; 1 << self.nb];
        for (b, o) in out.iter_mut().enumerate() {
            for &a in rows {
                *o += self.at(c, a, b);
            }
        }
        out
    }
}

fn screening_values(p_c: f64, row_e: &[f64], all_cols: &[f64], f: &[usize]) -> ScreeningValues {
    let p_ec: f64 = row_e.iter().sum();
    let p_efc: f64 = f.iter().map(|&b| row_e[b]).sum();
    let p_fc: f64 = f.iter().map(|&b| all_cols[b]).sum();
    let (p_ab_c, p_a_c, p_b_c) = (p_efc / p_c, p_ec / p_c, p_fc / p_c);
    let product_defect = (p_ab_c - p_a_c * p_b_c).abs();
    let asymmetric_defect = (p_fc > 0.0).then(|| (p_efc / p_fc - p_a_c).abs());
    ScreeningValues { p_c, p_ab_c, p_a_c, p_b_c, product_defect, asymmetric_defect }
}

#[derive(Default)]
struct TripleOutcome {
    cases: u64,
    atoms: u64,
    skipped: u64,
    max_defect: f64,
    failures: Vec<(u64, Quintuple, ScreeningValues)>,
    rows: Vec<(u64, String, ScreeningValues)>,
}

fn run_triple(
    state: &ClassicalState,
    va: &Region,
    vb: &Region,
    vc: &Region,
    opts: &LocalCausalityOptions,
) -> Result<TripleOutcome> {
    let table = JointTable::build(state, va, vb, vc)?;
    let ev_a = region_events(va);
    let ev_b = region_events(vb);
    let all_rows: Vec<usize> = (0..1 << va.len()).collect();
    let mut out = TripleOutcome::default();
    for atom in 0..1usize << vc.len() {
        let p_c = table.p_atom(atom);
        if p_c <= 0.0 {
            out.skipped += 1;
            continue;
        }
        out.atoms += 1;
        let all_cols = table.columns(atom, &all_rows);
        let mut worst: Option<ScreeningValues> = None;
        for e in &ev_a {
            let row_e = table.columns(atom, e);
            for f in &ev_b {
                let local = out.cases;
                out.cases += 1;
                let vals = screening_values(p_c, &row_e, &all_cols, f);
                let d = vals.defect();
                out.max_defect = out.max_defect.max(d);
                if d > opts.tolerance {
                    let q = Quintuple {
                        va: va.clone(),
                        vb: vb.clone(),
                        vc: vc.clone(),
                        event_a: event_from_configs(va, e),
                        event_b: event_from_configs(vb, f),
                        atom: atom as u64,
                    };
                    out.failures.push((local, q, vals));
                }
                if worst.is_none_or(|w| d > w.defect()) {
                    worst = Some(vals);
                }
            }
        }
        if let (true, Some(w)) = (opts.collect_rows, worst) {
            out.rows.push((out.cases, atom_label(atom as u64, vc.len()), w));
        }
    }
    Ok(out)
}

/// The part of `V''` not lying in the past of `V` apart from `V` itself.
/// Cones of `V''` below `V` are fixed by `V` only for deterministic dynamics.
pub fn future_completion(v: &Region) -> Region {
    double_complement(v)
        .iter()
        .filter(|x| v.contains(*x) || !v.iter().any(|c| causally_precedes(*x, c)))
        .collect()
}

/// Screening triples `(V_A, V_B, V_C)` of a domain in enumeration order.
/// `V_A` must lie in the future completion of `V_C`.
pub fn screening_triples(domain: &Region, opts: &LocalCausalityOptions) -> Vec<(Region, Region, Region)> {
    let events = if opts.arbitrary_event_regions {
        subsets_within(domain, opts.max_event_region)
    } else {
        double_cones_within(domain, opts.max_event_region)
    };
    let mut candidates = cauchy_pieces_within(domain, opts.max_screening_region);
    candidates.extend(double_cones_within(domain, opts.max_screening_region));
    candidates.sort();
    candidates.dedup();
    let completions: Vec<Region> = candidates.iter().map(future_completion).collect();
    let mut out = Vec::new();
    for va in &events {
        for vb in events.iter().filter(|vb| spacelike(va, vb)) {
            for (vc, dc) in candidates.iter().zip(&completions) {
                let l1 = vc.iter().all(|x| va.iter().any(|a| causally_precedes(x, a)));
                if l1 && va.is_subset(dc) && crate::geometry::covers_common_past(vc, va, vb) {
                    out.push((va.clone(), vb.clone(), vc.clone()));
                }
            }
        }
    }
    out
}

/// Checks `p(AB|C) = p(A|C) p(B|C)` and `p(A|BC) = p(A|C)` for events `A`, `B`
/// on spacelike double cones and every atom `C` of every classical shielding
/// region inside the domain of `state`. Both orientations of each pair are
/// covered since pairs are ordered.
pub fn verify_local_causality_stochastic(
    state: &ClassicalState,
    opts: &LocalCausalityOptions,
) -> Result<CheckReport> {
    let start = std::time::Instant::now();
    let mut triples = screening_triples(state.domain(), opts);
    if let Some(max) = opts.max_cases {
        if triples.len() > max {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            let mut keep = sample(&mut rng, triples.len(), max).into_vec();
            keep.sort_unstable();
            triples = keep.into_iter().map(|k| triples[k].clone()).collect();
        }
    }
    let outcomes: Vec<TripleOutcome> = triples
        .par_iter()
        .map(|(va, vb, vc)| run_triple(state, va, vb, vc, opts))
        .collect::<Result<_>>()?;

    let mut report = CheckReport {
        check: "local-causality".into(),
        tolerance: opts.tolerance,
        triples: triples.len() as u64,
        ..CheckReport::default()
    };
    for ((va, vb, vc), o) in triples.iter().zip(outcomes) {
        let base = report.cases;
        report.cases += o.cases;
        report.atoms += o.atoms;
        report.skipped_zero_probability += o.skipped;
        report.max_defect = report.max_defect.max(o.max_defect);
        for (k, q, values) in o.failures {
            report.failures.push(Failure { case_index: base + k, quintuple: q, values });
        }
        for (end, atom, v) in o.rows {
            report.rows.push(DefectRow {
                case_index: base + end - 1,
                va: va.clone(),
                vb: vb.clone(),
                vc: vc.clone(),
                atom,
                p_ab_c: v.p_ab_c,
                p_a_c: v.p_a_c,
                p_b_c: v.p_b_c,
                defect: v.defect(),
            });
        }
    }
    report.wall_clock = start.elapsed();
    Ok(report)
}

/// Recomputes a single quintuple through the same arithmetic as the full
/// enumeration, so reported failures reproduce bit for bit.
pub fn evaluate_quintuple(state: &ClassicalState, q: &Quintuple) -> Result<ScreeningValues> {
    if !spacelike(&q.va, &q.vb) {
        return Err(Error::Precondition(format!("{} and {} are not spacelike", q.va, q.vb)));
    }
    let table = JointTable::build(state, &q.va, &q.vb, &q.vc)?;
    let atom = q.atom as usize;
    if atom >> q.vc.len() != 0 {
        return Err(Error::Precondition(format!("atom {atom:#b} does not fit {}", q.vc)));
    }
    let p_c = table.p_atom(atom);
    if p_c <= 0.0 {
        return Err(Error::ZeroProbability);
    }
    let configs = |e: &CylinderEvent, v: &Region| -> Result<Vec<usize>> {
        let ind = e.extend_to(v)?;
        Ok((0..ind.len()).filter(|&x| ind[x]).collect())
    };
    let e = configs(&q.event_a, &q.va)?;
    let f = configs(&q.event_b, &q.vb)?;
    let all_rows: Vec<usize> = (0..1 << q.va.len()).collect();
    let all_cols = table.columns(atom, &all_rows);
    let row_e = table.columns(atom, &e);
    Ok(screening_values(p_c, &row_e, &all_cols, &f))
}

/// Region of spacetime in which a common cause may be localised.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PastKind {
    /// `J_-(V_A) ∪ J_-(V_B)`
    Weak,
    /// `J_-(V_A) ∩ J_-(V_B)`
    Common,
    /// the intersection of the pasts of all points of `V_A ∪ V_B`
    Strong,
}

impl PastKind {
    pub fn contains(self, x: MinimalCone, va: &Region, vb: &Region) -> bool {
        let below = |v: &Region| v.iter().any(|y| causally_precedes(x, y));
        match self {
            PastKind::Weak => below(va) || below(vb),
            PastKind::Common => below(va) && below(vb),
            PastKind::Strong => va.iter().chain(vb.iter()).all(|y| causally_precedes(x, y)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMode {
    /// All coarse grainings of the atoms of abelian candidate algebras.
    AbelianExhaustive,
    /// The maximal partition into minimal projections of each candidate.
    MaximalAtomic,
    /// Rotations of maximal partitions by unitaries of the candidate algebra,
    /// tuned by coordinate descent. Best effort.
    Noncommuting { restarts: usize, iterations: usize },
}

/// A partition of the unit in a candidate region that screens off `A`, `B`.
#[derive(Clone, Debug)]
pub struct CommonCause {
    pub region: Region,
    pub partition: PartitionOfUnit,
    /// Every member lies under one of `A`, `A⊥`, `B`, `B⊥`.
    pub trivial: bool,
    /// Every member commutes with `A` and `B`.
    pub commuting: bool,
    pub max_defect: f64,
}

/// `max_k |φ_k(AB) - φ_k(A) φ_k(B)|` over members with `φ(C_k) > 0`.
pub fn screening_defect(phi: &DensityState, part: &PartitionOfUnit, a: &CMatrix, b: &CMatrix) -> f64 {
    let ab = a * b;
    part.projections()
        .iter()
        .filter_map(|ck| {
            let pc = phi.value(ck);
            (pc > 1e-12).then(|| {
                let v = |x: &CMatrix| phi.value(&(ck * x * ck)) / pc;
                (v(&ab) - v(a) * v(b)).abs()
            })
        })
        .fold(0.0, f64::max)
}

fn below(p: &CMatrix, x: &CMatrix) -> bool {
    hs_norm(&(x * p - p)) <= 1e-9 * (1.0 + hs_norm(p))
}

fn classify(region: &Region, partition: PartitionOfUnit, phi: &DensityState, a: &CMatrix, b: &CMatrix) -> CommonCause {
    let d = a.nrows();
    let bounds = [a.clone(), identity(d) - a, b.clone(), identity(d) - b];
    let trivial = partition.projections().iter().all(|p| bounds.iter().any(|x| below(p, x)));
    let commuting = partition.commutes_with(a) && partition.commutes_with(b);
    let max_defect = screening_defect(phi, &partition, a, b);
    CommonCause { region: region.clone(), partition, trivial, commuting, max_defect }
}

/// Set partitions of `0..n` as block labels, in restricted growth order.
fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    fn grow(prefix: &mut Vec<usize>, max: usize, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for label in 0..=max + 1 {
            prefix.push(label);
            grow(prefix, max.max(label), n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    grow(&mut vec![0], 0, n, &mut out);
    out
}

const EXHAUSTIVE_ATOMS: usize = 8;

fn unitary_from(h: &CMatrix) -> CMatrix {
    let d = h.nrows();
    spectral_projections(h)
        .into_iter()
        .fold(CMatrix::zeros(d, d), |acc, (lambda, p)| acc + p * c(lambda.cos(), lambda.sin()))
}

fn rotated(members: &[CMatrix], u: &CMatrix) -> Vec<CMatrix> {
    members.iter().map(|p| u * p * u.adjoint()).collect()
}

fn noncommuting_search<R: Rng + ?Sized>(
    alg: &Subalgebra,
    region: &Region,
    phi: &DensityState,
    a: &CMatrix,
    b: &CMatrix,
    restarts: usize,
    iterations: usize,
    rng: &mut R,
) -> Option<PartitionOfUnit> {
    let objective = |ps: &[CMatrix]| {
        PartitionOfUnit::new(ps.to_vec(), region.clone())
            .map(|p| screening_defect(phi, &p, a, b))
            .unwrap_or(f64::INFINITY)
    };
    let mut best: Option<(f64, Vec<CMatrix>)> = None;
    for _ in 0..restarts.max(1) {
        let mut current = alg.random_minimal_projections(rng);
        let mut value = objective(&current);
        let mut step = 0.5;
        for _ in 0..iterations {
            if value <= PROB_TOL * 0.1 {
                break;
            }
            let direction = alg.random_element(rng);
            let norm = hs_norm(&direction).max(1e-300);
            let mut improved = false;
            for sign in [1.0, -1.0] {
                let u = unitary_from(&(&direction * c(sign * step / norm, 0.)));
                let candidate = rotated(&current, &u);
                let v = objective(&candidate);
                if v < value {
                    current = candidate;
                    value = v;
                    improved = true;
                    break;
                }
            }
            if !improved {
                step *= 0.7;
                if step < 1e-6 {
                    step = 0.5;
                }
            }
        }
        if best.as_ref().is_none_or(|(v, _)| value < *v) {
            best = Some((value, current));
        }
    }
    best.filter(|(v, _)| *v <= PROB_TOL)
        .and_then(|(_, ps)| PartitionOfUnit::new(ps, region.clone()).ok())
}

/// Searches the net regions inside the requested past of `V_A`, `V_B` for
/// partitions of the unit screening off the correlation between `a` and `b`.
pub fn find_common_cause<R: Rng + ?Sized>(
    net: &FiniteNet,
    phi: &DensityState,
    a: &Projection,
    b: &Projection,
    past: PastKind,
    mode: SearchMode,
    rng: &mut R,
) -> Result<Vec<CommonCause>> {
    let (am, bm) = (a.matrix(), b.matrix());
    let correlation = phi.value(&(am * bm)) - phi.value(am) * phi.value(bm);
    if correlation.abs() <= PROB_TOL {
        return Err(Error::NotCorrelated(correlation.abs()));
    }
    let candidates: Vec<&Region> = net
        .regions()
        .filter(|r| !r.is_empty() && r.iter().all(|x| past.contains(x, a.region(), b.region())))
        .collect();
    if candidates.is_empty() {
        return Err(Error::NoCandidateRegion);
    }
    let mut out = Vec::new();
    for region in candidates {
        let alg = net.algebra(region)?;
        match mode {
            SearchMode::MaximalAtomic => {
                let part = PartitionOfUnit::new(alg.random_minimal_projections(rng), region.clone())?;
                let cc = classify(region, part, phi, am, bm);
                if cc.max_defect <= PROB_TOL {
                    out.push(cc);
                }
            }
            SearchMode::AbelianExhaustive => {
                if !alg.is_abelian() {
                    continue;
                }
                let atoms = alg.minimal_projections();
                if atoms.len() > EXHAUSTIVE_ATOMS {
                    return Err(Error::CapExceeded { what: "atoms for exhaustive search", size: atoms.len(), cap: EXHAUSTIVE_ATOMS });
                }
                let d = net.dim();
                for labels in set_partitions(atoms.len()) {
                    let blocks = labels.iter().max().map_or(0, |m| m + 1);
                    let mut members = vec![CMatrix::zeros(d, d); blocks];
                    for (p, &l) in atoms.iter().zip(&labels) {
                        members[l] += p;
                    }
                    let part = PartitionOfUnit::new(members, region.clone())?;
                    let cc = classify(region, part, phi, am, bm);
                    if cc.max_defect <= PROB_TOL {
                        out.push(cc);
                    }
                }
            }
            SearchMode::Noncommuting { restarts, iterations } => {
                if alg.is_abelian() {
                    continue;
                }
                if let Some(part) = noncommuting_search(alg, region, phi, am, bm, restarts, iterations, rng) {
                    out.push(classify(region, part, phi, am, bm));
                }
            }
        }
    }
    Ok(out)
}

/// Diagonal projection of a classical event over the configurations of `domain`.
pub fn event_projection(e: &CylinderEvent, domain: &Region) -> Result<CMatrix> {
    let ind = e.extend_to(domain)?;
    let d = ind.len();
    Ok(CMatrix::from_fn(d, d, |i, j| c(f64::from(u8::from(i == j && ind[i])), 0.)))
}

/// [`find_common_cause`] for a classical state, through the abelian net of
/// double cones over its domain.
pub fn find_common_cause_classical<R: Rng + ?Sized>(
    state: &ClassicalState,
    a: &CylinderEvent,
    b: &CylinderEvent,
    past: PastKind,
    mode: SearchMode,
    rng: &mut R,
) -> Result<Vec<CommonCause>> {
    let domain = state.domain();
    let net = FiniteNet::ising_double_cones(domain)?;
    let phi = DensityState::diagonal(state.weights())?;
    let pa = Projection::new(event_projection(a, domain)?, a.support().clone())?;
    let pb = Projection::new(event_projection(b, domain)?, b.support().clone())?;
    find_common_cause(&net, &phi, &pa, &pb, past, mode, rng)
}

/// `φ(A1B1 + A1B2 + A2B1 - A2B2 - A1 - B1)`.
pub fn ch_value(phi: &DensityState, a1: &CMatrix, a2: &CMatrix, b1: &CMatrix, b2: &CMatrix) -> f64 {
    let x = a1 * b1 + a1 * b2 + a2 * b1 - a2 * b2 - a1 - b1;
    phi.value(&x)
}

pub fn ch_within_bounds(value: f64, tol: f64) -> bool {
    (-1.0 - tol..=tol).contains(&value)
}

#[derive(Clone, Debug, Serialize)]
pub struct Prop3Report {
    pub original: f64,
    /// CH value in the state after the non-selective operation of the partition.
    pub modified: f64,
    /// Whether the partition commutes with `A1`, `A2`, `B1`, `B2`.
    pub commutes: [bool; 4],
    pub correlated: [bool; 4],
    pub modified_within: bool,
    pub original_within: bool,
}

impl Prop3Report {
    pub fn fully_commuting(&self) -> bool {
        self.commutes.iter().all(|&x| x)
    }

    /// The modified state obeys the bound, and so does the original one
    /// whenever the partition commutes with all four projections.
    pub fn holds(&self) -> bool {
        self.modified_within && (!self.fully_commuting() || self.original_within)
    }
}

pub fn verify_prop3(
    phi: &DensityState,
    a1: &CMatrix,
    a2: &CMatrix,
    b1: &CMatrix,
    b2: &CMatrix,
    part: &PartitionOfUnit,
) -> Result<Prop3Report> {
    for m in [a1, a2, b1, b2] {
        if !is_projection(m) {
            return Err(Error::InvariantViolation("CH arguments must be projections".into()));
        }
    }
    let original = ch_value(phi, a1, a2, b1, b2);
    let modified = ch_value(&nonselective(phi, part)?, a1, a2, b1, b2);
    let commutes = [a1, a2, b1, b2].map(|m| part.commutes_with(m));
    let pairs = [(a1, b1), (a1, b2), (a2, b1), (a2, b2)];
    let correlated = pairs.map(|(x, y)| (phi.value(&(x * y)) - phi.value(x) * phi.value(y)).abs() > PROB_TOL);
    Ok(Prop3Report {
        original,
        modified,
        commutes,
        correlated,
        modified_within: ch_within_bounds(modified, PROB_TOL),
        original_within: ch_within_bounds(original, PROB_TOL),
    })
}

/// Spin projections and state of the singlet CH fixture: angles `0` and
/// `-2θ` on the first qubit, `-θ` and `θ` on the second, `θ = 3π/4`.
pub fn singlet_ch_fixture() -> (DensityState, [CMatrix; 4]) {
    let theta = 3.0 * std::f64::consts::FRAC_PI_4;
    let one = identity(2);
    let a = |x: f64| crate::qnet::kron(&crate::qnet::spin_projection(x), &one);
    let b = |x: f64| crate::qnet::kron(&one, &crate::qnet::spin_projection(x));
    (DensityState::singlet(), [a(0.0), a(-2.0 * theta), b(-theta), b(theta)])
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct AxiomReport {
    pub isotony: bool,
    pub microcausality: bool,
    pub intersection: bool,
    pub half_shift_covariance: Option<bool>,
    pub haag_duality: Option<bool>,
    pub local_primitive_causality: bool,
}

/// Axiom predicates of a finite net. Covariance is evaluated only for nets
/// built on sites and Haag duality only when the commutant is affordable.
pub fn check_axioms(net: &FiniteNet) -> AxiomReport {
    AxiomReport {
        isotony: net.check_isotony(),
        microcausality: net.check_microcausality(),
        intersection: net.check_intersection_property(),
        half_shift_covariance: net.check_covariance(crate::geometry::Translation::half()).ok(),
        haag_duality: (net.dim() <= crate::qnet::COMMUTANT_CAP)
            .then(|| net.check_haag_duality().ok())
            .flatten(),
        local_primitive_causality: net.check_local_primitive_causality(),
    }
}

/// Shielding predicate for a region triple without the spacelike precondition.
pub fn shielding_of(vc: &Region, va: &Region, vb: &Region, variant: ShieldingVariant) -> Shielding {
    shielding_unchecked(vc, va, vb, variant)
}
