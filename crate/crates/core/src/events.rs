//! Finite abelian local algebras: `Z_2` field configurations on regions,
//! cylinder events and probability states on finite windows.
//!
//! A configuration on a region with `n` cones is an `n`-bit word. Bit `k`
//! belongs to the `k`-th cone in the region's iteration order and a set bit
//! means the field value `-1`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{MinimalCone, Region, Translate, Translation};
use crate::NORM_TOL;

/// Largest region whose configurations are enumerated explicitly.
pub const DEFAULT_ENUMERATION_CAP: usize = 20;

/// Largest state domain, in cones, held as a dense weight vector.
pub const STATE_CAP: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Spin {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Spin {
    pub fn from_bit(bit: bool) -> Self {
        if bit {
            Spin::Minus
        } else {
            Spin::Plus
        }
    }

    pub fn is_minus(self) -> bool {
        self == Spin::Minus
    }

    pub fn value(self) -> i8 {
        match self {
            Spin::Plus => 1,
            Spin::Minus => -1,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Spin::Plus => '+',
            Spin::Minus => '-',
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Spin::Plus => Spin::Minus,
            Spin::Minus => Spin::Plus,
        }
    }
}

/// Collect the bits of `x` at `positions` into a packed word.
#[inline]
pub fn gather(x: u64, positions: &[usize]) -> u64 {
    positions
        .iter()
        .enumerate()
        .fold(0, |acc, (k, &p)| acc | (((x >> p) & 1) << k))
}

/// Positions of the cones of `sub` inside `sup`.
pub fn positions_in(sub: &Region, sup: &Region) -> Result<Vec<usize>> {
    let all: Vec<MinimalCone> = sup.iter().collect();
    sub.iter()
        .map(|c| all.binary_search(&c).map_err(|_| Error::SupportNotContained(c)))
        .collect()
}

fn check_cap(what: &'static str, size: usize, cap: usize) -> Result<()> {
    if size > cap {
        return Err(Error::CapExceeded { what, size, cap });
    }
    Ok(())
}

/// A total `±1` assignment on a finite region.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    region: Region,
    bits: u64,
}

impl Configuration {
    pub fn new(region: Region, bits: u64) -> Result<Self> {
        check_cap("configuration region", region.len(), 64)?;
        if region.len() < 64 && bits >> region.len() != 0 {
            return Err(Error::InvalidState(format!("bits {bits:#b} exceed region of {} cones", region.len())));
        }
        Ok(Self { region, bits })
    }

    pub fn from_spins(pairs: impl IntoIterator<Item = (MinimalCone, Spin)>) -> Result<Self> {
        let pairs: Vec<(MinimalCone, Spin)> = pairs.into_iter().collect();
        let region: Region = pairs.iter().map(|p| p.0).collect();
        if region.len() != pairs.len() {
            return Err(Error::InvalidState("duplicate cone in configuration".into()));
        }
        let mut bits = 0;
        for (c, s) in pairs {
            if s.is_minus() {
                bits |= 1 << region.index_of(c).expect("cone was inserted");
            }
        }
        Self::new(region, bits)
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn get(&self, c: MinimalCone) -> Option<Spin> {
        self.region.index_of(c).map(|k| Spin::from_bit((self.bits >> k) & 1 == 1))
    }

    pub fn restrict(&self, sub: &Region) -> Result<Configuration> {
        let pos = positions_in(sub, &self.region)?;
        Ok(Configuration { region: sub.clone(), bits: gather(self.bits, &pos) })
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, c) in self.region.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{c}{}", Spin::from_bit((self.bits >> k) & 1 == 1).symbol())?;
        }
        Ok(())
    }
}

impl fmt::Debug for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Configuration({self})")
    }
}

/// A set of configurations fixed on a finite support: a projection in the
/// abelian local algebra of the support. Always held in canonical form, on
/// the smallest support it depends on.
#[derive(Clone, PartialEq, Eq, Hash, Serialize)]
pub struct CylinderEvent {
    support: Region,
    accepted: Vec<u64>,
}

impl CylinderEvent {
    pub fn zero() -> Self {
        Self { support: Region::empty(), accepted: Vec::new() }
    }

    pub fn unit() -> Self {
        Self { support: Region::empty(), accepted: vec![0] }
    }

    /// Event on `support` accepting the listed configurations.
    pub fn new(support: Region, accepted: impl IntoIterator<Item = u64>) -> Result<Self> {
        check_cap("event support", support.len(), DEFAULT_ENUMERATION_CAP)?;
        let n = support.len();
        let mut table = vec![false; 1 << n];
        for x in accepted {
            if x >> n != 0 {
                return Err(Error::InvalidState(format!("configuration {x:#b} exceeds support of {n} cones")));
            }
            table[x as usize] = true;
        }
        Ok(Self::from_table(support, table))
    }

    pub fn from_predicate(support: Region, pred: impl Fn(u64) -> bool) -> Result<Self> {
        check_cap("event support", support.len(), DEFAULT_ENUMERATION_CAP)?;
        let table = (0..1u64 << support.len()).map(pred).collect();
        Ok(Self::from_table(support, table))
    }

    /// The atom fixing `cfg`.
    pub fn atom(cfg: &Configuration) -> Self {
        Self { support: cfg.region.clone(), accepted: vec![cfg.bits] }
    }

    pub fn cone_value(c: MinimalCone, s: Spin) -> Self {
        Self { support: Region::single(c), accepted: vec![u64::from(s.is_minus())] }
    }

    fn from_table(support: Region, mut table: Vec<bool>) -> Self {
        let cones: Vec<MinimalCone> = support.iter().collect();
        let mut keep = Vec::with_capacity(cones.len());
        let mut n = cones.len();
        // drop each cone the indicator does not depend on, highest first so
        // lower positions stay valid while compacting
        for k in (0..cones.len()).rev() {
            let bit = 1usize << k;
            let irrelevant = (0..table.len()).all(|x| x & bit != 0 || table[x] == table[x | bit]);
            if irrelevant {
                let low = bit - 1;
                table = (0..table.len() / 2).map(|y| table[(y & low) | ((y & !low) << 1)]).collect();
                n -= 1;
            } else {
                keep.push(cones[k]);
            }
        }
        debug_assert_eq!(table.len(), 1 << n);
        let support: Region = keep.into_iter().collect();
        let accepted = (0..table.len() as u64).filter(|&x| table[x as usize]).collect();
        Self { support, accepted }
    }

    pub fn support(&self) -> &Region {
        &self.support
    }

    /// Accepted configurations on the canonical support, ascending.
    pub fn accepted(&self) -> &[u64] {
        &self.accepted
    }

    pub fn is_zero(&self) -> bool {
        self.accepted.is_empty()
    }

    pub fn is_unit(&self) -> bool {
        self.support.is_empty() && !self.accepted.is_empty()
    }

    /// True iff the event fixes a single configuration on its support.
    pub fn is_atom_on(&self, region: &Region) -> bool {
        self.support == *region && self.accepted.len() == 1
    }

    /// Indicator of the event over all configurations of `region`.
    pub fn extend_to(&self, region: &Region) -> Result<Vec<bool>> {
        check_cap("event region", region.len(), STATE_CAP)?;
        let pos = positions_in(&self.support, region)?;
        let local = self.local_table();
        Ok((0..1u64 << region.len()).map(|x| local[gather(x, &pos) as usize]).collect())
    }

    /// Whether the configuration `x` on `region` lies in the event.
    pub fn contains_on(&self, region: &Region, x: u64) -> Result<bool> {
        let pos = positions_in(&self.support, region)?;
        Ok(self.accepted.binary_search(&gather(x, &pos)).is_ok())
    }

    pub(crate) fn local_table(&self) -> Vec<bool> {
        let mut t = vec![false; 1 << self.support.len()];
        for &x in &self.accepted {
            t[x as usize] = true;
        }
        t
    }

    fn combine(&self, other: &Self, op: impl Fn(bool, bool) -> bool) -> Self {
        let support = self.support.union(&other.support);
        let a = self.extend_to(&support).expect("merged support within cap");
        let b = other.extend_to(&support).expect("merged support within cap");
        let table = a.iter().zip(&b).map(|(&x, &y)| op(x, y)).collect();
        Self::from_table(support, table)
    }

    pub fn meet(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a && b)
    }

    pub fn join(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a || b)
    }

    pub fn complement(&self) -> Self {
        let n = self.support.len();
        let t = self.local_table();
        Self {
            support: self.support.clone(),
            accepted: (0..1u64 << n).filter(|&x| !t[x as usize]).collect(),
        }
    }

    /// `self <= other` in the event lattice.
    pub fn implies(&self, other: &Self) -> bool {
        self.meet(other) == *self
    }
}

impl fmt::Debug for CylinderEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Event{{{} : {:?}}}", self.support, self.accepted)
    }
}

impl Translate for CylinderEvent {
    fn translate(&self, g: Translation) -> Self {
        Self { support: self.support.translate(g), accepted: self.accepted.clone() }
    }
}

/// The `2^|v|` atoms of the local algebra of `v`, in configuration order.
pub fn atoms(v: &Region) -> Result<Vec<CylinderEvent>> {
    atoms_capped(v, DEFAULT_ENUMERATION_CAP)
}

pub fn atoms_capped(v: &Region, cap: usize) -> Result<Vec<CylinderEvent>> {
    check_cap("atoms", v.len(), cap.min(63))?;
    Ok((0..1u64 << v.len())
        .map(|x| CylinderEvent { support: v.clone(), accepted: vec![x] })
        .collect())
}

/// Every event of the local algebra of `v` except zero and unit.
pub fn nontrivial_events(v: &Region) -> Result<Vec<CylinderEvent>> {
    check_cap("event enumeration", v.len(), 4)?;
    let m = 1u64 << v.len();
    (1..(1u64 << m) - 1)
        .map(|mask| CylinderEvent::new(v.clone(), (0..m).filter(|x| mask >> x & 1 == 1)))
        .collect()
}

/// Checks that events measurable with respect to both `v1` and `v2` are
/// exactly the events measurable with respect to `v1 ∩ v2`.
pub fn check_intersection_property(v1: &Region, v2: &Region) -> Result<bool> {
    let u = v1.union(v2);
    check_cap("intersection property", u.len(), DEFAULT_ENUMERATION_CAP)?;
    let p1 = positions_in(v1, &u)?;
    let p2 = positions_in(v2, &u)?;
    let common = v1.intersection(v2);
    let pc = positions_in(&common, &u)?;
    let n = 1usize << u.len();

    // sets in both algebras are unions of classes of the finest partition
    // coarser than both restriction partitions
    let mut uf = UnionFind::new(n);
    for (pos, size) in [(&p1, v1.len()), (&p2, v2.len())] {
        let mut first = vec![usize::MAX; 1 << size];
        for x in 0..n {
            let key = gather(x as u64, pos) as usize;
            if first[key] == usize::MAX {
                first[key] = x;
            } else {
                uf.union(first[key], x);
            }
        }
    }
    // the classes must coincide with the restriction classes of v1 ∩ v2
    let mut rep = vec![usize::MAX; 1 << common.len()];
    let mut owner = vec![usize::MAX; n];
    for x in 0..n {
        let key = gather(x as u64, &pc) as usize;
        let root = uf.find(x);
        if rep[key] == usize::MAX {
            rep[key] = root;
        } else if rep[key] != root {
            return Ok(false);
        }
        if owner[root] == usize::MAX {
            owner[root] = key;
        } else if owner[root] != key {
            return Ok(false);
        }
    }
    Ok(true)
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Probability measure on the configurations of a finite window.
#[derive(Clone, PartialEq, Serialize)]
pub struct ClassicalState {
    domain: Region,
    weights: Vec<f64>,
}

impl ClassicalState {
    pub fn new(domain: Region, weights: Vec<f64>) -> Result<Self> {
        check_cap("state domain", domain.len(), STATE_CAP)?;
        if weights.len() != 1 << domain.len() {
            return Err(Error::InvalidState(format!(
                "{} weights for a domain of {} cones",
                weights.len(),
                domain.len()
            )));
        }
        if let Some((k, w)) = weights.iter().enumerate().find(|(_, w)| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidState(format!("weight {k} is {w}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("weights sum to {total}")));
        }
        Ok(Self { domain, weights })
    }

    pub(crate) fn from_parts_unchecked(domain: Region, weights: Vec<f64>) -> Self {
        Self { domain, weights }
    }

    pub fn uniform(domain: Region) -> Result<Self> {
        check_cap("state domain", domain.len(), STATE_CAP)?;
        let n = 1usize << domain.len();
        Ok(Self { domain, weights: vec![1.0 / n as f64; n] })
    }

    /// Independent cones with the given probabilities of `+1`, in domain order.
    pub fn product(domain: Region, p_plus: &[f64]) -> Result<Self> {
        check_cap("state domain", domain.len(), STATE_CAP)?;
        if p_plus.len() != domain.len() {
            return Err(Error::InvalidState(format!(
                "{} biases for a domain of {} cones",
                p_plus.len(),
                domain.len()
            )));
        }
        if let Some(p) = p_plus.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidState(format!("bias {p} outside [0, 1]")));
        }
        let weights = (0..1u64 << domain.len())
            .map(|x| {
                p_plus
                    .iter()
                    .enumerate()
                    .map(|(k, &p)| if (x >> k) & 1 == 1 { 1.0 - p } else { p })
                    .product()
            })
            .collect();
        Ok(Self { domain, weights })
    }

    pub fn point(cfg: &Configuration) -> Result<Self> {
        check_cap("state domain", cfg.region.len(), STATE_CAP)?;
        let mut weights = vec![0.0; 1 << cfg.region.len()];
        weights[cfg.bits as usize] = 1.0;
        Ok(Self { domain: cfg.region.clone(), weights })
    }

    pub fn domain(&self) -> &Region {
        &self.domain
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }

    pub fn is_faithful(&self) -> bool {
        self.weights.iter().all(|&w| w > 0.0)
    }

    pub fn probability(&self, e: &CylinderEvent) -> Result<f64> {
        let pos = positions_in(e.support(), &self.domain)?;
        let local = e.local_table();
        Ok(self
            .weights
            .iter()
            .enumerate()
            .filter(|(x, _)| local[gather(*x as u64, &pos) as usize])
            .map(|(_, w)| w)
            .sum())
    }

    /// Marginal weights on `sub`, indexed by configurations of `sub`.
    pub fn marginal_weights(&self, sub: &Region) -> Result<Vec<f64>> {
        let pos = positions_in(sub, &self.domain)?;
        let mut out = vec![0.0; 1 << sub.len()];
        for (x, &w) in self.weights.iter().enumerate() {
            out[gather(x as u64, &pos) as usize] += w;
        }
        Ok(out)
    }

    pub fn marginal(&self, sub: &Region) -> Result<ClassicalState> {
        Ok(Self { domain: sub.clone(), weights: self.marginal_weights(sub)? })
    }

    pub fn condition(&self, e: &CylinderEvent) -> Result<ClassicalState> {
        let ind = e.extend_to(&self.domain)?;
        let p: f64 = self.weights.iter().zip(&ind).filter(|(_, &i)| i).map(|(w, _)| w).sum();
        if p <= 0.0 {
            return Err(Error::ZeroProbability);
        }
        let weights = self
            .weights
            .iter()
            .zip(&ind)
            .map(|(&w, &i)| if i { w / p } else { 0.0 })
            .collect();
        Ok(Self { domain: self.domain.clone(), weights })
    }

    /// `p(a | c)`.
    pub fn conditional(&self, a: &CylinderEvent, c: &CylinderEvent) -> Result<f64> {
        let pc = self.probability(c)?;
        if pc <= 0.0 {
            return Err(Error::ZeroProbability);
        }
        Ok(self.probability(&a.meet(c))? / pc)
    }

    /// Largest absolute weight difference to `other` on the same domain.
    pub fn max_abs_diff(&self, other: &ClassicalState) -> Option<f64> {
        (self.domain == other.domain).then(|| {
            self.weights
                .iter()
                .zip(&other.weights)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
    }
}

impl fmt::Debug for ClassicalState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ClassicalState{{{} : {:?}}}", self.domain, self.weights)
    }
}

impl Translate for ClassicalState {
    fn translate(&self, g: Translation) -> Self {
        // translations preserve the (2t, 2i) order, so bit positions carry over
        Self { domain: self.domain.translate(g), weights: self.weights.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(t2: i32, i2: i32) -> MinimalCone {
        MinimalCone::new(t2, i2).unwrap()
    }

    fn row(n: i32) -> Region {
        (0..n).map(|k| v(0, 2 * k)).collect()
    }

    #[test]
    fn atom_counts() {
        assert_eq!(atoms(&row(3)).unwrap().len(), 8);
        let one = atoms(&row(1)).unwrap();
        assert_eq!(one, vec![CylinderEvent::cone_value(v(0, 0), Spin::Plus), CylinderEvent::cone_value(v(0, 0), Spin::Minus)]);
        assert_eq!(atoms(&Region::empty()).unwrap(), vec![CylinderEvent::unit()]);
        assert!(matches!(atoms(&row(21)), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn canonical_support_is_minimal() {
        let r = row(3);
        // depends only on the middle cone
        let e = CylinderEvent::from_predicate(r.clone(), |x| x & 0b010 == 0).unwrap();
        assert_eq!(e.support(), &Region::single(v(0, 2)));
        assert_eq!(e, CylinderEvent::cone_value(v(0, 2), Spin::Plus));
        let full = CylinderEvent::from_predicate(r.clone(), |_| true).unwrap();
        assert!(full.is_unit());
        let none = CylinderEvent::from_predicate(r, |_| false).unwrap();
        assert_eq!(none, CylinderEvent::zero());
    }

    #[test]
    fn lattice_examples() {
        let a = CylinderEvent::cone_value(v(0, 0), Spin::Plus);
        let b = CylinderEvent::cone_value(v(0, 2), Spin::Minus);
        assert_eq!(a.meet(&a.complement()), CylinderEvent::zero());
        assert!(a.join(&a.complement()).is_unit());
        let ab = a.meet(&b);
        assert_eq!(ab.support(), &row(2));
        assert_eq!(ab.accepted(), &[0b10]);
        let at = atoms(&row(2)).unwrap();
        let j = at[0].join(&at[3]);
        assert_eq!(j.accepted(), &[0b00, 0b11]);
        assert_eq!(CylinderEvent::unit().complement(), CylinderEvent::zero());
    }

    #[test]
    fn probability_examples() {
        let u = ClassicalState::uniform(row(3)).unwrap();
        assert_eq!(u.probability(&CylinderEvent::unit()).unwrap(), 1.0);
        assert_eq!(u.probability(&CylinderEvent::cone_value(v(0, 2), Spin::Minus)).unwrap(), 0.5);
        let two = CylinderEvent::new(row(2), [0b00, 0b11]).unwrap();
        assert!((u.probability(&two).unwrap() - 0.5).abs() < 1e-15);
        let outside = CylinderEvent::cone_value(v(1, 1), Spin::Plus);
        assert_eq!(u.probability(&outside), Err(Error::SupportNotContained(v(1, 1))));
    }

    #[test]
    fn condition_examples() {
        let u = ClassicalState::uniform(row(2)).unwrap();
        assert_eq!(u.condition(&CylinderEvent::unit()).unwrap(), u);
        let c = CylinderEvent::cone_value(v(0, 0), Spin::Plus);
        let s = u.condition(&c).unwrap();
        assert_eq!(s.probability(&c).unwrap(), 1.0);
        assert_eq!(s.probability(&CylinderEvent::cone_value(v(0, 2), Spin::Plus)).unwrap(), 0.5);
        let point = ClassicalState::point(&Configuration::new(row(2), 0).unwrap()).unwrap();
        assert_eq!(point.condition(&c.complement()), Err(Error::ZeroProbability));
        assert!(!point.is_faithful());
        assert!(u.is_faithful());
    }

    #[test]
    fn state_validation() {
        assert!(ClassicalState::new(row(1), vec![0.5, 0.4]).is_err());
        assert!(ClassicalState::new(row(1), vec![1.5, -0.5]).is_err());
        assert!(ClassicalState::new(row(1), vec![1.0]).is_err());
        assert!(ClassicalState::new(row(1), vec![0.25, 0.75]).is_ok());
    }

    #[test]
    fn configuration_roundtrip() {
        let cfg = Configuration::from_spins([(v(0, 2), Spin::Minus), (v(0, 0), Spin::Plus)]).unwrap();
        assert_eq!(cfg.bits(), 0b10);
        assert_eq!(cfg.get(v(0, 2)), Some(Spin::Minus));
        assert_eq!(cfg.restrict(&Region::single(v(0, 2))).unwrap().bits(), 1);
        assert_eq!(cfg.to_string(), "V(0,0)+ V(0,2)-");
    }

    fn measurable(set: u64, pos: &[usize], n: usize) -> bool {
        // every restriction class is either inside or outside the set
        (0..1u64 << n).all(|x| {
            (0..1u64 << n)
                .filter(|&y| gather(x, pos) == gather(y, pos))
                .all(|y| (set >> x & 1) == (set >> y & 1))
        })
    }

    fn intersection_oracle(v1: &Region, v2: &Region) -> bool {
        let u = v1.union(v2);
        let n = u.len();
        let p1 = positions_in(v1, &u).unwrap();
        let p2 = positions_in(v2, &u).unwrap();
        let pc = positions_in(&v1.intersection(v2), &u).unwrap();
        (0..1u64 << (1 << n)).all(|set| {
            let both = measurable(set, &p1, n) && measurable(set, &p2, n);
            both == measurable(set, &pc, n)
        })
    }

    #[test]
    fn intersection_property_examples() {
        let a = row(2);
        let b: Region = [v(0, 4), v(0, 6)].into_iter().collect();
        assert!(check_intersection_property(&a, &b).unwrap());
        assert!(check_intersection_property(&Region::single(v(0, 0)), &a).unwrap());
        let c: Region = [v(0, 2), v(0, 4)].into_iter().collect();
        assert!(check_intersection_property(&a, &c).unwrap());
        for (x, y) in [(&a, &b), (&a, &c)] {
            assert!(intersection_oracle(x, y));
        }
    }

    fn state_strategy(n: usize) -> impl Strategy<Value = ClassicalState> {
        proptest::collection::vec(0.01f64..1.0, 1 << n).prop_map(move |w| {
            let s: f64 = w.iter().sum();
            ClassicalState::new(row(n as i32), w.into_iter().map(|x| x / s).collect()).unwrap()
        })
    }

    fn event_strategy(n: usize) -> impl Strategy<Value = CylinderEvent> {
        (0u64..1 << (1 << n)).prop_map(move |mask| {
            CylinderEvent::new(row(n as i32), (0..1u64 << n).filter(|x| mask >> x & 1 == 1)).unwrap()
        })
    }

    proptest! {
        #[test]
        fn lattice_laws(a in event_strategy(3), b in event_strategy(3), c in event_strategy(3)) {
            prop_assert_eq!(a.meet(&b.join(&c)), a.meet(&b).join(&a.meet(&c)));
            prop_assert_eq!(a.join(&b.meet(&c)), a.join(&b).meet(&a.join(&c)));
            prop_assert_eq!(a.meet(&b).complement(), a.complement().join(&b.complement()));
            prop_assert_eq!(a.complement().complement(), a.clone());
            prop_assert_eq!(a.meet(&b), b.meet(&a));
        }

        #[test]
        fn probability_is_additive(s in state_strategy(3), a in event_strategy(3), b in event_strategy(3)) {
            let pa = s.probability(&a).unwrap();
            prop_assert!((s.probability(&a.complement()).unwrap() - (1.0 - pa)).abs() < 1e-12);
            let disjoint = b.meet(&a.complement());
            let pj = s.probability(&a.join(&disjoint)).unwrap();
            prop_assert!((pj - pa - s.probability(&disjoint).unwrap()).abs() < 1e-12);
            if a.implies(&b) {
                prop_assert!(pa <= s.probability(&b).unwrap() + 1e-15);
            }
            // faithful states see every nonzero event
            if !a.is_zero() {
                prop_assert!(pa > 0.0);
            }
        }

        #[test]
        fn double_conditioning_is_meet(s in state_strategy(3), a in event_strategy(3), b in event_strategy(3), e in event_strategy(3)) {
            prop_assume!(!a.meet(&b).is_zero());
            let twice = s.condition(&a).unwrap().condition(&b).unwrap();
            let once = s.condition(&a.meet(&b)).unwrap();
            prop_assert!(twice.max_abs_diff(&once).unwrap() < 1e-12);
            prop_assert!((twice.probability(&e).unwrap() - once.probability(&e).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn isotony_of_probabilities(s in state_strategy(4), e in event_strategy(2)) {
            // the same event read on a larger region has the same probability
            let bigger = CylinderEvent::from_predicate(row(4), |x| e.contains_on(&row(4), x).unwrap()).unwrap();
            prop_assert_eq!(&bigger, &e);
            let direct: f64 = s.marginal(&row(2)).unwrap().probability(&e).unwrap();
            prop_assert!((direct - s.probability(&e).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn intersection_property_matches_oracle(m1 in 1u8..16, m2 in 1u8..16) {
            let cones = row(4);
            let pick = |m: u8| -> Region { cones.iter().enumerate().filter(|(k, _)| m >> k & 1 == 1).map(|(_, c)| c).collect() };
            let (v1, v2) = (pick(m1), pick(m2));
            prop_assume!(v1.union(&v2).len() <= 3);
            prop_assert_eq!(check_intersection_property(&v1, &v2).unwrap(), intersection_oracle(&v1, &v2));
        }
    }

    #[test]
    fn boolean_algebra_is_powerset_of_atoms() {
        for n in 0..=3 {
            let r = row(n);
            let at = atoms(&r).unwrap();
            let mut seen = std::collections::HashSet::new();
            for mask in 0u64..1 << at.len() {
                let e = at
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| mask >> k & 1 == 1)
                    .fold(CylinderEvent::zero(), |acc, (_, a)| acc.join(a));
                assert!(seen.insert(e));
            }
            assert_eq!(seen.len(), 1 << (1 << n));
        }
    }
}
