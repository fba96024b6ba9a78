//! Discrete double-cone covering of two dimensional Minkowski spacetime.
//!
//! Minimal cones are unit diamonds centred at `(t, i)` with `t, i` both integer
//! or both half-integer. Coordinates are stored doubled so everything stays in
//! integer arithmetic. In light-cone coordinates `u = t - i`, `w = t + i` the
//! lattice is exactly `Z x Z` and the causal order is the product order, which
//! is how most predicates below are evaluated.
//!
//! Lightlike contact counts as causal (closed cones). Two cones on the same time
//! slice that touch at a corner are spacelike.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A lattice site `V^m(t, i)`, stored as `(2t, 2i)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct MinimalCone {
    t2: i32,
    i2: i32,
}

impl MinimalCone {
    pub fn new(t2: i32, i2: i32) -> Result<Self> {
        if (t2 - i2).rem_euclid(2) != 0 {
            return Err(Error::InvalidCone { t2, i2 });
        }
        Ok(Self { t2, i2 })
    }

    /// Cone with light-cone coordinates `(u, w)`; every integer pair is valid.
    pub fn from_light_cone(u: i32, w: i32) -> Self {
        Self { t2: u + w, i2: w - u }
    }

    pub fn t2(self) -> i32 {
        self.t2
    }

    pub fn i2(self) -> i32 {
        self.i2
    }

    pub fn u(self) -> i32 {
        (self.t2 - self.i2) / 2
    }

    pub fn w(self) -> i32 {
        (self.t2 + self.i2) / 2
    }

    pub fn time(self) -> f64 {
        f64::from(self.t2) / 2.0
    }

    pub fn space(self) -> f64 {
        f64::from(self.i2) / 2.0
    }

    pub fn offset(self, dt2: i32, di2: i32) -> Result<Self> {
        Self::new(self.t2 + dt2, self.i2 + di2)
    }

    /// The three cones one and two half-steps below on which a new cell's value
    /// depends, in (upper-left, upper-right, lower) order.
    pub fn shadow_cells(self) -> [MinimalCone; 3] {
        [
            Self { t2: self.t2 - 1, i2: self.i2 - 1 },
            Self { t2: self.t2 - 1, i2: self.i2 + 1 },
            Self { t2: self.t2 - 2, i2: self.i2 },
        ]
    }
}

impl fmt::Display for MinimalCone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "V({},{})", self.t2, self.i2)
    }
}

impl fmt::Debug for MinimalCone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for MinimalCone {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::ParseCone(s.to_string());
        let inner = s
            .trim()
            .strip_prefix("V(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(bad)?;
        let (a, b) = inner.split_once(',').ok_or_else(bad)?;
        let t2 = a.trim().parse().map_err(|_| bad())?;
        let i2 = b.trim().parse().map_err(|_| bad())?;
        Self::new(t2, i2)
    }
}

impl TryFrom<String> for MinimalCone {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<MinimalCone> for String {
    fn from(c: MinimalCone) -> String {
        c.to_string()
    }
}

/// `a ∈ J_-(b)`: `a.t <= b.t` and `|a.i - b.i| <= b.t - a.t`.
pub fn causally_precedes(a: MinimalCone, b: MinimalCone) -> bool {
    let dt = b.t2 - a.t2;
    dt >= 0 && (b.i2 - a.i2).abs() <= dt
}

pub fn comparable(a: MinimalCone, b: MinimalCone) -> bool {
    causally_precedes(a, b) || causally_precedes(b, a)
}

pub fn cones_spacelike(a: MinimalCone, b: MinimalCone) -> bool {
    !comparable(a, b)
}

/// A finite set of minimal cones. Iteration order is `(2t, 2i)` lexicographic,
/// which is also the bit order used for configurations on the region.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Region {
    cones: BTreeSet<MinimalCone>,
}

impl Region {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn single(c: MinimalCone) -> Self {
        std::iter::once(c).collect()
    }

    pub fn len(&self) -> usize {
        self.cones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cones.is_empty()
    }

    pub fn contains(&self, c: MinimalCone) -> bool {
        self.cones.contains(&c)
    }

    pub fn iter(&self) -> impl Iterator<Item = MinimalCone> + '_ {
        self.cones.iter().copied()
    }

    pub fn cones(&self) -> &BTreeSet<MinimalCone> {
        &self.cones
    }

    pub fn insert(&mut self, c: MinimalCone) -> bool {
        self.cones.insert(c)
    }

    /// Position of `c` in iteration order.
    pub fn index_of(&self, c: MinimalCone) -> Option<usize> {
        if !self.contains(c) {
            return None;
        }
        Some(self.cones.range(..c).count())
    }

    pub fn union(&self, other: &Region) -> Region {
        self.cones.union(&other.cones).copied().collect()
    }

    pub fn intersection(&self, other: &Region) -> Region {
        self.cones.intersection(&other.cones).copied().collect()
    }

    pub fn difference(&self, other: &Region) -> Region {
        self.cones.difference(&other.cones).copied().collect()
    }

    pub fn is_subset(&self, other: &Region) -> bool {
        self.cones.is_subset(&other.cones)
    }

    /// Cones of `self` lying in the closed causal past of some cone of `v`.
    pub fn within_past_of(&self, v: &Region) -> Region {
        self.iter()
            .filter(|&m| v.iter().any(|x| causally_precedes(m, x)))
            .collect()
    }

    pub fn min_time2(&self) -> Option<i32> {
        self.iter().map(|c| c.t2).min()
    }

    pub fn max_time2(&self) -> Option<i32> {
        self.iter().map(|c| c.t2).max()
    }

    /// Bounding box in light-cone coordinates `((umin, umax), (wmin, wmax))`.
    fn light_cone_box(&self) -> Option<((i32, i32), (i32, i32))> {
        let mut it = self.iter();
        let first = it.next()?;
        let init = ((first.u(), first.u()), (first.w(), first.w()));
        Some(it.fold(init, |((ul, uh), (wl, wh)), c| {
            ((ul.min(c.u()), uh.max(c.u())), (wl.min(c.w()), wh.max(c.w())))
        }))
    }
}

impl FromIterator<MinimalCone> for Region {
    fn from_iter<I: IntoIterator<Item = MinimalCone>>(iter: I) -> Self {
        Self { cones: iter.into_iter().collect() }
    }
}

impl Extend<MinimalCone> for Region {
    fn extend<I: IntoIterator<Item = MinimalCone>>(&mut self, iter: I) {
        for c in iter {
            self.insert(c);
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, c) in self.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// True iff no cone of `a` is causally comparable with a cone of `b`.
pub fn spacelike(a: &Region, b: &Region) -> bool {
    a.iter().all(|x| b.iter().all(|y| cones_spacelike(x, y)))
}

/// A region generated as the join of two minimal cones.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DoubleCone {
    generators: (MinimalCone, MinimalCone),
    region: Region,
}

impl DoubleCone {
    pub fn generators(&self) -> (MinimalCone, MinimalCone) {
        self.generators
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn into_region(self) -> Region {
        self.region
    }

    /// Past-most and future-most cones of the diamond.
    pub fn tips(&self) -> (MinimalCone, MinimalCone) {
        let (a, b) = self.generators;
        (
            MinimalCone::from_light_cone(a.u().min(b.u()), a.w().min(b.w())),
            MinimalCone::from_light_cone(a.u().max(b.u()), a.w().max(b.w())),
        )
    }

    /// Recognise a region as a lattice double cone.
    pub fn from_region(region: &Region) -> Option<DoubleCone> {
        let ((ul, uh), (wl, wh)) = region.light_cone_box()?;
        let jc = join(MinimalCone::from_light_cone(ul, wl), MinimalCone::from_light_cone(uh, wh));
        (jc.region == *region).then_some(jc)
    }
}

/// Smallest double cone containing both minimal cones. In light-cone
/// coordinates the diamonds are unit squares, so this is the lattice rectangle
/// spanned by the two.
pub fn join(a: MinimalCone, b: MinimalCone) -> DoubleCone {
    let (ul, uh) = (a.u().min(b.u()), a.u().max(b.u()));
    let (wl, wh) = (a.w().min(b.w()), a.w().max(b.w()));
    let region = (ul..=uh)
        .flat_map(|u| (wl..=wh).map(move |w| MinimalCone::from_light_cone(u, w)))
        .collect();
    DoubleCone { generators: (a, b), region }
}

/// Piece of the thickened Cauchy surface `S_t = S_t ∪ S_{t+1/2}`: every cone of
/// the two layers whose doubled space coordinate lies in `lo2..=hi2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CauchySegment {
    t2: i32,
    lo2: i32,
    hi2: i32,
}

impl CauchySegment {
    pub fn new(t2: i32, lo2: i32, hi2: i32) -> Result<Self> {
        if hi2 < lo2 {
            return Err(Error::WindowTooSmall(format!("empty window {lo2}..={hi2}")));
        }
        Ok(Self { t2, lo2, hi2 })
    }

    /// Segment of `width` half-columns starting at `lo2`; it holds exactly
    /// `width` cones.
    pub fn with_width(t2: i32, lo2: i32, width: usize) -> Result<Self> {
        if width == 0 {
            return Err(Error::WindowTooSmall("zero width".into()));
        }
        Self::new(t2, lo2, lo2 + width as i32 - 1)
    }

    pub fn t2(&self) -> i32 {
        self.t2
    }

    pub fn window(&self) -> (i32, i32) {
        (self.lo2, self.hi2)
    }

    pub fn width(&self) -> usize {
        (self.hi2 - self.lo2 + 1) as usize
    }

    pub fn layer(&self, t2: i32) -> Vec<MinimalCone> {
        (self.lo2..=self.hi2)
            .filter_map(|i2| MinimalCone::new(t2, i2).ok())
            .collect()
    }

    pub fn lower_layer(&self) -> Vec<MinimalCone> {
        self.layer(self.t2)
    }

    pub fn upper_layer(&self) -> Vec<MinimalCone> {
        self.layer(self.t2 + 1)
    }

    pub fn cones(&self) -> Region {
        self.lower_layer().into_iter().chain(self.upper_layer()).collect()
    }

    pub fn contains(&self, c: MinimalCone) -> bool {
        (c.t2 == self.t2 || c.t2 == self.t2 + 1) && (self.lo2..=self.hi2).contains(&c.i2)
    }

    pub fn widened(&self, margin: i32) -> Self {
        Self { t2: self.t2, lo2: self.lo2 - margin, hi2: self.hi2 + margin }
    }
}

/// `P_s(v) = s ∩ (s \ J_-(v))'`: the cones of the surface on which transitions
/// into `v` may depend.
///
/// Computed on the surface extended beyond the window; if the true shadow does
/// not fit into the window of `s` a [`Error::WindowOverflow`] is returned.
pub fn causal_shadow(v: &Region, s: &CauchySegment) -> Result<Region> {
    if let Some(c) = v.iter().find(|c| c.t2 < s.t2) {
        return Err(Error::Precondition(format!("{c} lies below the surface at 2t = {}", s.t2)));
    }
    if v.is_empty() {
        return Ok(Region::empty());
    }
    // only neighbours within one doubled column of J_-(v) can be causal to it
    let reach = v
        .iter()
        .flat_map(|c| {
            let d = c.t2 - s.t2;
            [c.i2 - d, c.i2 + d]
        })
        .fold((s.lo2, s.hi2), |(lo, hi), x| (lo.min(x), hi.max(x)));
    let ext = CauchySegment { t2: s.t2, lo2: reach.0 - 2, hi2: reach.1 + 2 };
    let surface = ext.cones();
    let past = surface.within_past_of(v);
    let outside = surface.difference(&past);
    let shadow: Region = past
        .iter()
        .filter(|&m| outside.iter().all(|n| cones_spacelike(m, n)))
        .collect();
    if let Some(c) = shadow.iter().find(|&c| !s.contains(c)) {
        return Err(Error::WindowOverflow(c));
    }
    Ok(shadow)
}

/// `V''` evaluated with witnesses drawn from `window`. The result is
/// restricted to `window` as well.
pub fn double_complement_within(v: &Region, window: &Region) -> Region {
    let complement: Vec<MinimalCone> = window
        .iter()
        .filter(|&n| v.iter().all(|x| cones_spacelike(n, x)))
        .collect();
    window
        .iter()
        .filter(|&m| complement.iter().all(|&n| cones_spacelike(m, n)))
        .collect()
}

/// Window sufficient for [`double_complement_within`]: the light-cone bounding
/// box of `v` widened by one cone on every side.
pub fn sufficient_window(v: &Region, margin: i32) -> Region {
    let Some(((ul, uh), (wl, wh))) = v.light_cone_box() else {
        return Region::empty();
    };
    (ul - margin..=uh + margin)
        .flat_map(|u| (wl - margin..=wh + margin).map(move |w| MinimalCone::from_light_cone(u, w)))
        .collect()
}

/// `V''`, the causal completion of `v`.
pub fn double_complement(v: &Region) -> Region {
    double_complement_within(v, &sufficient_window(v, 1))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShieldingVariant {
    Classical,
    Quantum,
}

/// Outcome of the three localisation requirements for a screening region.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Shielding {
    /// `V_C ⊂ J_-(V_A)`
    pub past_of_a: bool,
    /// `V_A ⊂ V_C''`
    pub determines_a: bool,
    /// `V_C ⊂ V_B'` (quantum) or `J_-(V_C) ⊇ J_-(V_A) ∩ J_-(V_B)` (classical)
    pub blocks_common_past: bool,
}

impl Shielding {
    pub fn holds(&self) -> bool {
        self.past_of_a && self.determines_a && self.blocks_common_past
    }
}

/// `J_-(vc) ⊇ J_-(va) ∩ J_-(vb)`. In light-cone coordinates the past of a
/// cone is a down-closed quadrant and the intersection of two quadrants is the
/// quadrant of their meet, so it is enough to test the meets.
pub fn covers_common_past(vc: &Region, va: &Region, vb: &Region) -> bool {
    va.iter().all(|a| {
        vb.iter().all(|b| {
            let apex = MinimalCone::from_light_cone(a.u().min(b.u()), a.w().min(b.w()));
            vc.iter().any(|c| causally_precedes(apex, c))
        })
    })
}

pub fn is_shielding(vc: &Region, va: &Region, vb: &Region, variant: ShieldingVariant) -> Result<Shielding> {
    if !spacelike(va, vb) {
        return Err(Error::Precondition(format!("{va} and {vb} are not spacelike separated")));
    }
    Ok(shielding_unchecked(vc, va, vb, variant))
}

pub(crate) fn shielding_unchecked(vc: &Region, va: &Region, vb: &Region, variant: ShieldingVariant) -> Shielding {
    let past_of_a = vc.iter().all(|c| va.iter().any(|a| causally_precedes(c, a)));
    let determines_a = va.is_subset(&double_complement(vc));
    let blocks_common_past = match variant {
        ShieldingVariant::Quantum => spacelike(vc, vb),
        ShieldingVariant::Classical => covers_common_past(vc, va, vb),
    };
    Shielding { past_of_a, determines_a, blocks_common_past }
}

/// Lattice symmetry: integer time and space shifts, optionally combined with
/// the half shift `(t, i) -> (t + 1/2, i + 1/2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Translation {
    pub dt: i32,
    pub di: i32,
    pub half_shift: bool,
}

impl Translation {
    pub const IDENTITY: Translation = Translation { dt: 0, di: 0, half_shift: false };

    pub fn new(dt: i32, di: i32, half_shift: bool) -> Self {
        Self { dt, di, half_shift }
    }

    pub fn half() -> Self {
        Self::new(0, 0, true)
    }

    fn doubled(self) -> (i32, i32) {
        let h = i32::from(self.half_shift);
        (2 * self.dt + h, 2 * self.di + h)
    }

    fn from_doubled(t: i32, i: i32) -> Self {
        let half = t.rem_euclid(2) == 1;
        let h = i32::from(half);
        Self { dt: (t - h) / 2, di: (i - h) / 2, half_shift: half }
    }

    /// Apply `self` first, then `other`.
    pub fn then(self, other: Translation) -> Translation {
        let (a, b) = self.doubled();
        let (c, d) = other.doubled();
        Self::from_doubled(a + c, b + d)
    }

    pub fn inverse(self) -> Translation {
        let (a, b) = self.doubled();
        Self::from_doubled(-a, -b)
    }
}

pub trait Translate {
    fn translate(&self, g: Translation) -> Self;
}

impl Translate for MinimalCone {
    fn translate(&self, g: Translation) -> Self {
        let (dt, di) = g.doubled();
        Self { t2: self.t2 + dt, i2: self.i2 + di }
    }
}

impl Translate for Region {
    fn translate(&self, g: Translation) -> Self {
        self.iter().map(|c| c.translate(g)).collect()
    }
}

impl Translate for CauchySegment {
    fn translate(&self, g: Translation) -> Self {
        let (dt, di) = g.doubled();
        Self { t2: self.t2 + dt, lo2: self.lo2 + di, hi2: self.hi2 + di }
    }
}

/// Every lattice cone with `|2t| <= r` and `|2i| <= r`.
pub fn cones_in_box(r: i32) -> Vec<MinimalCone> {
    (-r..=r)
        .flat_map(|t2| (-r..=r).filter_map(move |i2| MinimalCone::new(t2, i2).ok()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(t2: i32, i2: i32) -> MinimalCone {
        MinimalCone::new(t2, i2).unwrap()
    }

    fn reg(cs: &[(i32, i32)]) -> Region {
        cs.iter().map(|&(t, i)| v(t, i)).collect()
    }

    #[test]
    fn parity_is_enforced() {
        assert!(MinimalCone::new(0, 1).is_err());
        assert!(MinimalCone::new(1, 1).is_ok());
        assert_eq!("V(1,-1)".parse::<MinimalCone>().unwrap(), v(1, -1));
        assert!("V(1,0)".parse::<MinimalCone>().is_err());
        assert!("W(1,1)".parse::<MinimalCone>().is_err());
    }

    #[test]
    fn precedence_examples() {
        assert!(causally_precedes(v(0, 0), v(2, 2)));
        assert!(!causally_precedes(v(0, 0), v(2, 4)));
        assert!(causally_precedes(v(1, 1), v(2, 0)));
        assert!(!causally_precedes(v(2, 2), v(0, 0)));
    }

    #[test]
    fn spacelike_examples() {
        assert!(spacelike(&reg(&[(0, 0)]), &reg(&[(0, 4)])));
        assert!(!spacelike(&reg(&[(0, 0)]), &reg(&[(2, 2)])));
        assert!(spacelike(&reg(&[(0, 0)]), &reg(&[(2, 4)])));
        // same-slice neighbours touching at a corner
        assert!(spacelike(&reg(&[(0, 0)]), &reg(&[(0, 2)])));
    }

    #[test]
    fn order_is_partial_and_trichotomous() {
        let cs = cones_in_box(8);
        for &a in &cs {
            assert!(causally_precedes(a, a));
            for &b in &cs {
                if a != b && causally_precedes(a, b) {
                    assert!(!causally_precedes(b, a));
                }
                let n = [causally_precedes(a, b) && a != b, causally_precedes(b, a) && a != b, cones_spacelike(a, b)]
                    .iter()
                    .filter(|&&x| x)
                    .count();
                assert_eq!(n, usize::from(a != b));
            }
        }
        let small = cones_in_box(4);
        for &a in &small {
            for &b in &small {
                for &c in &small {
                    if causally_precedes(a, b) && causally_precedes(b, c) {
                        assert!(causally_precedes(a, c));
                    }
                }
            }
        }
    }

    #[test]
    fn join_examples() {
        assert_eq!(join(v(0, 0), v(0, 0)).region(), &Region::single(v(0, 0)));
        assert_eq!(join(v(0, 0), v(0, 4)).region().len(), 9);
        let d = join(v(0, 0), v(2, 2));
        assert_eq!(d.tips(), (v(0, 0), v(2, 2)));
        assert_eq!(d.region(), &reg(&[(0, 0), (1, 1), (2, 2)]));
        assert_eq!(DoubleCone::from_region(d.region()).unwrap().region(), d.region());
        assert!(DoubleCone::from_region(&reg(&[(0, 0), (0, 4)])).is_none());
    }

    #[test]
    fn join_is_commutative_idempotent_monotone() {
        let cs = cones_in_box(4);
        for &a in &cs {
            for &b in &cs {
                let ab = join(a, b);
                assert_eq!(ab.region(), join(b, a).region());
                assert!(ab.region().contains(a) && ab.region().contains(b));
                for c in ab.region().iter() {
                    // any join of members stays inside
                    assert!(join(a, c).region().is_subset(ab.region()));
                }
            }
        }
    }

    #[test]
    fn shadow_of_cone_above_surface() {
        let s = CauchySegment::new(0, -6, 6).unwrap();
        assert_eq!(causal_shadow(&reg(&[(2, 0)]), &s).unwrap(), reg(&[(1, -1), (1, 1), (0, 0)]));
        assert_eq!(causal_shadow(&reg(&[(1, 1)]), &s).unwrap(), reg(&[(1, 1)]));
        assert_eq!(causal_shadow(&reg(&[(3, 1)]), &s).unwrap().len(), 5);
        assert!(matches!(causal_shadow(&reg(&[(-1, 1)]), &s), Err(Error::Precondition(_))));
    }

    #[test]
    fn shadow_overflowing_window_is_reported() {
        let s = CauchySegment::new(0, -1, 1).unwrap();
        assert!(causal_shadow(&reg(&[(2, 0)]), &s).is_ok());
        assert!(matches!(causal_shadow(&reg(&[(2, 2)]), &s), Err(Error::WindowOverflow(_))));
    }

    #[test]
    fn double_complement_examples() {
        assert_eq!(double_complement(&reg(&[(0, 0)])), reg(&[(0, 0)]));
        let shadow = reg(&[(1, -1), (1, 1), (0, 0)]);
        assert!(double_complement(&shadow).contains(v(2, 0)));
        let pair = reg(&[(0, 0), (0, 4)]);
        assert_eq!(double_complement(&pair), pair);
    }

    #[test]
    fn double_complement_window_is_sufficient() {
        let cs = cones_in_box(3);
        for (k, &a) in cs.iter().enumerate() {
            for &b in &cs[k..] {
                for &c in &cs[k..] {
                    let r: Region = [a, b, c].into_iter().collect();
                    let dc = double_complement(&r);
                    assert_eq!(dc, double_complement_within(&r, &sufficient_window(&r, 3)), "{r}");
                    assert!(r.is_subset(&dc));
                    assert_eq!(double_complement(&dc), dc);
                }
            }
        }
    }

    #[test]
    fn shielding_examples() {
        let va = reg(&[(2, 0)]);
        let vb = reg(&[(2, 4)]);
        let s = CauchySegment::new(0, -6, 6).unwrap();
        let shadow = causal_shadow(&va, &s).unwrap();
        let r = is_shielding(&shadow, &va, &vb, ShieldingVariant::Classical).unwrap();
        assert!(r.holds());
        let not_below = reg(&[(2, 4)]);
        assert!(!is_shielding(&not_below, &va, &reg(&[(2, 8)]), ShieldingVariant::Classical).unwrap().past_of_a);
        let missing_middle = reg(&[(1, -1), (0, 0)]);
        assert!(!is_shielding(&missing_middle, &va, &vb, ShieldingVariant::Classical).unwrap().determines_a);
        assert!(is_shielding(&va, &va, &reg(&[(3, 1)]), ShieldingVariant::Classical).is_err());
    }

    #[test]
    fn translations_form_a_group() {
        let gs = [
            Translation::IDENTITY,
            Translation::half(),
            Translation::new(1, 0, false),
            Translation::new(-2, 3, true),
        ];
        let c = v(1, -3);
        assert_eq!(v(0, 0).translate(Translation::new(1, 0, false)), v(2, 0));
        assert_eq!(v(0, 0).translate(Translation::half()), v(1, 1));
        assert_eq!(c.translate(Translation::IDENTITY), c);
        assert_eq!(Translation::half().then(Translation::half()), Translation::new(1, 1, false));
        for &g in &gs {
            assert_eq!(c.translate(g).translate(g.inverse()), c);
            for &h in &gs {
                assert_eq!(c.translate(g).translate(h), c.translate(g.then(h)));
            }
        }
    }

    #[test]
    fn segment_layers() {
        let s = CauchySegment::with_width(0, -3, 7).unwrap();
        assert_eq!(s.lower_layer().len(), 3);
        assert_eq!(s.upper_layer().len(), 4);
        assert_eq!(s.cones().len(), 7);
    }
}
