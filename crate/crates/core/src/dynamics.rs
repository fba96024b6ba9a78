//! Stationary causal stochastic Ising dynamics on the cone lattice.
//!
//! A new cell `(t, i)` takes the value `+1` with a probability that depends only
//! on its three neighbours from below: `(t - 1/2, i - 1/2)`, `(t - 1/2, i + 1/2)`
//! and `(t - 1, i)`, in that order. Starting from a state on a thickened
//! Cauchy segment the joint distribution is grown layer by layer over the
//! segment's domain of dependence.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::events::{gather, positions_in, ClassicalState, CylinderEvent, Spin, STATE_CAP};
use crate::geometry::{causally_precedes, CauchySegment, MinimalCone, Region, Translate, Translation};
use crate::NORM_TOL;

/// Context label such as `"+-+"` for (left, right, below).
pub fn context_key(index: usize) -> String {
    (0..3)
        .map(|k| Spin::from_bit(index >> (2 - k) & 1 == 1).symbol())
        .collect()
}

pub fn context_index(left: Spin, right: Spin, below: Spin) -> usize {
    usize::from(left.is_minus()) << 2 | usize::from(right.is_minus()) << 1 | usize::from(below.is_minus())
}

fn parse_key(key: &str) -> Option<usize> {
    let spins: Vec<Spin> = key
        .chars()
        .map(|c| match c {
            '+' => Some(Spin::Plus),
            '-' => Some(Spin::Minus),
            _ => None,
        })
        .collect::<Option<_>>()?;
    match spins[..] {
        [l, r, b] => Some(context_index(l, r, b)),
        _ => None,
    }
}

/// Local update rule of a cell.
pub trait CellRule: Sync {
    /// Cones the value of `cell` is drawn from. `domain` holds every cone
    /// already determined, including earlier cells of the current layer.
    fn inputs(&self, cell: MinimalCone, domain: &Region) -> Vec<MinimalCone>;

    /// Probability of `+1` given the values of [`CellRule::inputs`].
    fn prob_plus(&self, cell: MinimalCone, inputs: &[Spin]) -> f64;
}

/// The eight transition probabilities `p(c)`, indexed by context.
#[derive(Clone, Copy, PartialEq)]
pub struct TransitionTable {
    p: [f64; 8],
}

impl TransitionTable {
    pub fn new(p: [f64; 8]) -> Result<Self> {
        for (k, &x) in p.iter().enumerate() {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::InvalidTable(format!("p({}) = {x} is not a probability", context_key(k))));
            }
        }
        Ok(Self { p })
    }

    pub fn constant(p: f64) -> Result<Self> {
        Self::new([p; 8])
    }

    /// `+1` exactly when at least two of the three context values are `+1`.
    pub fn majority() -> Self {
        let p = std::array::from_fn(|k: usize| if k.count_ones() <= 1 { 1.0 } else { 0.0 });
        Self { p }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self { p: std::array::from_fn(|_| rng.random::<f64>()) }
    }

    pub fn from_map(map: &BTreeMap<String, f64>) -> Result<Self> {
        let mut p = [f64::NAN; 8];
        for (key, &value) in map {
            let k = parse_key(key).ok_or_else(|| Error::InvalidTable(format!("unknown context {key:?}")))?;
            p[k] = value;
        }
        if let Some(k) = p.iter().position(|x| x.is_nan()) {
            return Err(Error::InvalidTable(format!("missing context \"{}\"", context_key(k))));
        }
        Self::new(p)
    }

    pub fn to_map(&self) -> BTreeMap<String, f64> {
        (0..8).map(|k| (context_key(k), self.p[k])).collect()
    }

    pub fn entries(&self) -> &[f64; 8] {
        &self.p
    }

    pub fn get(&self, left: Spin, right: Spin, below: Spin) -> f64 {
        self.p[context_index(left, right, below)]
    }
}

impl fmt::Debug for TransitionTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries((0..8).map(|k| (context_key(k), self.p[k]))).finish()
    }
}

impl Serialize for TransitionTable {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_map().serialize(s)
    }
}

impl<'de> Deserialize<'de> for TransitionTable {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let map = BTreeMap::<String, f64>::deserialize(d)?;
        Self::from_map(&map).map_err(serde::de::Error::custom)
    }
}

impl CellRule for TransitionTable {
    fn inputs(&self, cell: MinimalCone, _domain: &Region) -> Vec<MinimalCone> {
        cell.shadow_cells().to_vec()
    }

    fn prob_plus(&self, _cell: MinimalCone, inputs: &[Spin]) -> f64 {
        self.get(inputs[0], inputs[1], inputs[2])
    }
}

/// A table rule whose cells also copy their same-time left neighbour with
/// probability `coupling`. The neighbour is spacelike to the cell, so the
/// resulting model is not locally causal.
#[derive(Clone, Copy, Debug)]
pub struct SpacelikeCoupled {
    pub table: TransitionTable,
    pub coupling: f64,
}

impl SpacelikeCoupled {
    fn neighbour(cell: MinimalCone) -> Option<MinimalCone> {
        cell.offset(0, -2).ok()
    }
}

impl CellRule for SpacelikeCoupled {
    fn inputs(&self, cell: MinimalCone, domain: &Region) -> Vec<MinimalCone> {
        let mut v = cell.shadow_cells().to_vec();
        v.extend(Self::neighbour(cell).filter(|n| domain.contains(*n)));
        v
    }

    fn prob_plus(&self, _cell: MinimalCone, inputs: &[Spin]) -> f64 {
        let p = self.table.get(inputs[0], inputs[1], inputs[2]);
        match inputs.get(3) {
            Some(n) => (1.0 - self.coupling) * p + self.coupling * f64::from(u8::from(*n == Spin::Plus)),
            None => p,
        }
    }
}

/// Joint distribution on a segment together with its grown trapezoid.
#[derive(Clone, Debug)]
pub struct ExtensionResult {
    pub state: ClassicalState,
    /// Cells added by the dynamics, in the order they were generated.
    pub grown: Vec<MinimalCone>,
    /// The new cells grouped by layer.
    pub layers: Vec<Vec<MinimalCone>>,
}

impl ExtensionResult {
    pub fn grown_region(&self) -> Region {
        self.grown.iter().copied().collect()
    }

    pub fn is_dynamic(&self, c: MinimalCone) -> bool {
        self.grown.contains(&c)
    }
}

/// Cells of the next `layers` half-step layers above `seg` whose three
/// shadow cells are already present.
pub fn trapezoid_layers(seg: &CauchySegment, layers: usize) -> Vec<Vec<MinimalCone>> {
    let mut domain = seg.cones();
    let mut out = Vec::with_capacity(layers);
    for k in 0..layers {
        let t2 = seg.t2() + 2 + k as i32;
        let layer: Vec<MinimalCone> = seg
            .layer(t2)
            .into_iter()
            .filter(|c| c.shadow_cells().iter().all(|s| domain.contains(*s)))
            .collect();
        domain.extend(layer.iter().copied());
        out.push(layer);
    }
    out
}

/// Grow `initial`, a state on the cones of `seg`, by `layers` half-steps.
///
/// Each new cell appends one high bit to the configuration word, so the bit
/// order of the result agrees with the region order of the grown domain.
pub fn extend_forward<R: CellRule + ?Sized>(
    initial: &ClassicalState,
    seg: &CauchySegment,
    rule: &R,
    layers: usize,
) -> Result<ExtensionResult> {
    if *initial.domain() != seg.cones() {
        return Err(Error::Precondition(format!(
            "initial state lives on {}, not on the segment {}",
            initial.domain(),
            seg.cones()
        )));
    }
    let plan = trapezoid_layers(seg, layers);
    if let Some(k) = plan.iter().position(Vec::is_empty) {
        return Err(Error::WindowTooSmall(format!(
            "layer {} above the segment has no cell with its full shadow inside the window",
            k + 1
        )));
    }
    let total = initial.domain().len() + plan.iter().map(Vec::len).sum::<usize>();
    if total > STATE_CAP {
        return Err(Error::CapExceeded { what: "extended domain", size: total, cap: STATE_CAP });
    }

    let mut order: Vec<MinimalCone> = initial.domain().iter().collect();
    let mut domain = initial.domain().clone();
    let mut weights = initial.weights().to_vec();
    let mut grown = Vec::new();
    for cell in plan.iter().flatten().copied() {
        let inputs = rule.inputs(cell, &domain);
        let pos: Vec<usize> = inputs
            .iter()
            .map(|c| {
                order.iter().position(|x| x == c).ok_or_else(|| {
                    Error::WindowTooSmall(format!("input {c} of cell {cell} is outside the window"))
                })
            })
            .collect::<Result<_>>()?;
        let table: Vec<f64> = (0..1u64 << pos.len())
            .map(|x| {
                let spins: Vec<Spin> = (0..pos.len()).map(|k| Spin::from_bit(x >> k & 1 == 1)).collect();
                rule.prob_plus(cell, &spins)
            })
            .collect();
        if let Some(p) = table.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidTable(format!("rule gives p = {p} at {cell}")));
        }
        let n = weights.len();
        let mut next = vec![0.0; 2 * n];
        let (plus, minus) = next.split_at_mut(n);
        for (x, &w) in weights.iter().enumerate() {
            let p = table[gather(x as u64, &pos) as usize];
            plus[x] = w * p;
            minus[x] = w * (1.0 - p);
        }
        weights = next;
        order.push(cell);
        domain.insert(cell);
        grown.push(cell);
    }
    debug_assert!(order.windows(2).all(|w| w[0] < w[1]));
    let state = ClassicalState::from_parts_unchecked(domain, weights);
    Ok(ExtensionResult { state, grown, layers: plan })
}

/// Conditional probability of a target event given an atom on its past,
/// next to the value predicted by the transition table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TransitionCheck {
    pub conditional: f64,
    pub from_table: f64,
}

impl TransitionCheck {
    pub fn defect(&self) -> f64 {
        (self.conditional - self.from_table).abs()
    }
}

/// `p(target | given)` for `target` supported on generated cells of a single
/// layer and `given` an atom that fixes every shadow cell of the target while
/// avoiding the target's causal future.
pub fn transition_probability(
    ext: &ExtensionResult,
    table: &TransitionTable,
    target: &CylinderEvent,
    given: &CylinderEvent,
) -> Result<TransitionCheck> {
    let cells: Vec<MinimalCone> = target.support().iter().collect();
    if let Some(c) = cells.iter().find(|c| !ext.is_dynamic(**c)) {
        return Err(Error::Precondition(format!("{c} is not a generated cell")));
    }
    if cells.windows(2).any(|w| w[0].t2() != w[1].t2()) {
        return Err(Error::Precondition("target cells span more than one layer".into()));
    }
    if given.accepted().len() != 1 {
        return Err(Error::Precondition("conditioning event is not an atom".into()));
    }
    let shadow: Region = cells.iter().flat_map(|c| c.shadow_cells()).collect();
    if let Some(c) = shadow.iter().find(|c| !given.support().contains(*c)) {
        return Err(Error::Precondition(format!("shadow cell {c} is not fixed by the condition")));
    }
    if let Some(c) = given.support().iter().find(|&g| cells.iter().any(|&c| causally_precedes(c, g))) {
        return Err(Error::Precondition(format!("{c} lies in the future of the target")));
    }

    let p_given = ext.state.probability(given)?;
    if p_given <= 0.0 {
        return Err(Error::ZeroProbability);
    }
    let conditional = ext.state.probability(&target.meet(given))? / p_given;

    let fixed = given.accepted()[0];
    let spin_of = |c: MinimalCone| {
        let k = given.support().index_of(c).expect("shadow is fixed");
        Spin::from_bit(fixed >> k & 1 == 1)
    };
    let from_table = target
        .accepted()
        .iter()
        .map(|&x| {
            cells
                .iter()
                .enumerate()
                .map(|(k, &cell)| {
                    let [l, r, b] = cell.shadow_cells().map(spin_of);
                    let p = table.get(l, r, b);
                    if x >> k & 1 == 1 {
                        1.0 - p
                    } else {
                        p
                    }
                })
                .product::<f64>()
        })
        .sum();
    Ok(TransitionCheck { conditional, from_table })
}

/// Inverts the forward map of a single cell.
///
/// The later pair `(phi_plus, phi_minus)` holds the weights with the upper
/// cell at `+1` and `-1`; `p_plus`, `p_minus` are the table entries with the
/// lower cell at `+1` and `-1`, other context values fixed. Returns the weights
/// with the lower cell at `+1` and `-1`.
pub fn extend_backward(phi_plus: f64, phi_minus: f64, p_plus: f64, p_minus: f64) -> Result<(f64, f64)> {
    for p in [p_plus, p_minus] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidTable(format!("{p} is not a probability")));
        }
    }
    for phi in [phi_plus, phi_minus] {
        if !phi.is_finite() || phi < -NORM_TOL {
            return Err(Error::InvalidState(format!("weight {phi} is negative")));
        }
    }
    if p_plus == p_minus {
        return Err(Error::NotInvertible(p_plus));
    }
    let det = p_plus - p_minus;
    let earlier_plus = ((1.0 - p_minus) * phi_plus - p_minus * phi_minus) / det;
    let earlier_minus = (p_plus * phi_minus - (1.0 - p_plus) * phi_plus) / det;
    if earlier_plus < -NORM_TOL || earlier_minus < -NORM_TOL {
        return Err(Error::NegativeProbability {
            phi_plus_earlier: earlier_plus,
            phi_minus_earlier: earlier_minus,
            ratio: phi_plus / phi_minus,
        });
    }
    Ok((earlier_plus, earlier_minus))
}

/// Apply the forward 2x2 map of a single cell.
pub fn forward_cell(phi_plus: f64, phi_minus: f64, p_plus: f64, p_minus: f64) -> (f64, f64) {
    (
        p_plus * phi_plus + p_minus * phi_minus,
        (1.0 - p_plus) * phi_plus + (1.0 - p_minus) * phi_minus,
    )
}

/// Backward extension of a whole surface: from a state on `seg` to the state
/// on the segment half a step earlier with the same window.
///
/// Both window ends must be columns of the lower layer so that every upper
/// cell has its left and right neighbour inside. The cell maps are inverted
/// one upper cell at a time; the first failing cell aborts the computation.
pub fn extend_backward_surface(
    later: &ClassicalState,
    seg: &CauchySegment,
    table: &TransitionTable,
) -> Result<(CauchySegment, ClassicalState)> {
    let (lo2, hi2) = seg.window();
    if (lo2 - seg.t2()).rem_euclid(2) != 0 || (hi2 - seg.t2()).rem_euclid(2) != 0 {
        return Err(Error::Precondition(format!(
            "window {lo2}..={hi2} must end on columns of the layer 2t = {}",
            seg.t2()
        )));
    }
    if *later.domain() != seg.cones() {
        return Err(Error::Precondition("state does not live on the segment".into()));
    }
    let earlier_seg = CauchySegment::new(seg.t2() - 1, lo2, hi2)?;
    let target = earlier_seg.cones();
    let mid: Vec<MinimalCone> = seg.lower_layer();
    let top: Vec<MinimalCone> = seg.upper_layer();
    let bottom: Vec<MinimalCone> = earlier_seg.lower_layer();
    debug_assert_eq!(top.len(), bottom.len());

    let src = later.domain();
    let mid_src = positions_in(&mid.iter().copied().collect(), src)?;
    let top_src = positions_in(&top.iter().copied().collect(), src)?;
    let mid_dst = positions_in(&mid.iter().copied().collect(), &target)?;
    let bottom_dst = positions_in(&bottom.iter().copied().collect(), &target)?;

    let m = top.len();
    let mut out = vec![0.0; later.weights().len()];
    for s in 0..1u64 << mid.len() {
        let mut v: Vec<f64> = (0..1u64 << m)
            .map(|y| later.weights()[(scatter(s, &mid_src) | scatter(y, &top_src)) as usize])
            .collect();
        for (j, &cell) in top.iter().enumerate() {
            // neighbours of the upper cell inside the middle layer
            let [l, r, _] = cell.shadow_cells();
            let spin = |c: MinimalCone| {
                let k = mid.iter().position(|x| *x == c).expect("window ends on middle columns");
                Spin::from_bit(s >> k & 1 == 1)
            };
            let (sl, sr) = (spin(l), spin(r));
            let (pp, pm) = (table.get(sl, sr, Spin::Plus), table.get(sl, sr, Spin::Minus));
            let bit = 1u64 << j;
            for y in (0..1u64 << m).filter(|y| y & bit == 0) {
                let (a, b) = extend_backward(v[y as usize], v[(y | bit) as usize], pp, pm).map_err(|e| {
                    Error::BackwardCell { cell, left: sl.symbol(), right: sr.symbol(), source: Box::new(e) }
                })?;
                v[y as usize] = a;
                v[(y | bit) as usize] = b;
            }
        }
        for (y, w) in v.into_iter().enumerate() {
            out[(scatter(s, &mid_dst) | scatter(y as u64, &bottom_dst)) as usize] = w;
        }
    }
    let total: f64 = out.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvariantViolation(format!("backward state sums to {total}")));
    }
    Ok((earlier_seg, ClassicalState::from_parts_unchecked(target, out)))
}

/// Inverse of [`gather`]: place the low bits of `x` at `positions`.
pub fn scatter(x: u64, positions: &[usize]) -> u64 {
    positions
        .iter()
        .enumerate()
        .fold(0, |acc, (k, &p)| acc | ((x >> k & 1) << p))
}

/// Compares growing a translated initial state with translating the grown
/// state. Returns the largest weight difference and whether it is within
/// `1e-12`.
pub fn check_covariance<R: CellRule + ?Sized>(
    rule: &R,
    initial: &ClassicalState,
    seg: &CauchySegment,
    layers: usize,
    g: Translation,
) -> Result<(bool, f64)> {
    let moved = extend_forward(&initial.translate(g), &seg.translate(g), rule, layers)?;
    let base = extend_forward(initial, seg, rule, layers)?;
    let diff = base
        .state
        .translate(g)
        .max_abs_diff(&moved.state)
        .ok_or_else(|| Error::InvariantViolation("translated domains differ".into()))?;
    Ok((diff <= NORM_TOL, diff))
}
