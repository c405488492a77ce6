//! Causal structure of Minkowski spacetime restricted to axis-aligned boxes.
//!
//! Signature is (−,+,+,+): `g(v,v) = −t² + x² + y² + z²`. Regions are finite
//! unions of closed boxes written in the adapted coordinates of one inertial
//! frame; every predicate here reduces to per-coordinate interval arithmetic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Width of the null band: points whose Minkowski square lies within it are
/// not considered strictly spacelike.
pub const DEFAULT_LIGHTCONE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct FourVector {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl From<[f64; 4]> for FourVector {
    fn from(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }
}

impl From<FourVector> for [f64; 4] {
    fn from(v: FourVector) -> Self {
        [v.t, v.x, v.y, v.z]
    }
}

impl FourVector {
    pub const fn new(t: f64, x: f64, y: f64, z: f64) -> Self {
        Self { t, x, y, z }
    }

    /// Rest frame of the adapted coordinates.
    pub const fn unit_time() -> Self {
        Self::new(1.0, 0.0, 0.0, 0.0)
    }

    pub fn spatial(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    /// Minkowski square `g(v,v)`.
    pub fn minkowski_square(&self) -> f64 {
        -self.t * self.t + self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn sup_norm(&self) -> f64 {
        self.t.abs().max(self.x.abs()).max(self.y.abs()).max(self.z.abs())
    }

    pub fn is_finite(&self) -> bool {
        [self.t, self.x, self.y, self.z].iter().all(|c| c.is_finite())
    }

    /// Unit future-directed timelike vector (`g(v,v) = −1`, `t > 0`).
    pub fn is_unit_future_timelike(&self, tol: f64) -> bool {
        self.t > 0.0 && (self.minkowski_square() + 1.0).abs() <= tol
    }
}

impl std::ops::Add for FourVector {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.t + o.t, self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl std::ops::Sub for FourVector {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.t - o.t, self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl std::ops::Neg for FourVector {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.t, -self.x, -self.y, -self.z)
    }
}

impl std::ops::Mul<f64> for FourVector {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.t * s, self.x * s, self.y * s, self.z * s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CausalClass {
    Zero,
    Spacelike,
    LightlikeFuture,
    LightlikePast,
    TimelikeFuture,
    TimelikePast,
}

impl CausalClass {
    pub fn is_causal(self) -> bool {
        !matches!(self, CausalClass::Zero | CausalClass::Spacelike)
    }
}

/// Classifies `v`; the zero vector counts as spacelike.
pub fn classify_vector(v: FourVector, tol: f64) -> CausalClass {
    let g = v.minkowski_square();
    if v.sup_norm() <= tol || g > tol {
        return CausalClass::Spacelike;
    }
    let future = v.t > 0.0;
    match (g < -tol, future) {
        (true, true) => CausalClass::TimelikeFuture,
        (true, false) => CausalClass::TimelikePast,
        (false, true) => CausalClass::LightlikeFuture,
        (false, false) => CausalClass::LightlikePast,
    }
}

/// Closed axis-aligned box `[lo.t, hi.t] × … × [lo.z, hi.z]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BoxRepr", into = "BoxRepr")]
pub struct SpacetimeBox {
    lo: FourVector,
    hi: FourVector,
}

#[derive(Serialize, Deserialize)]
struct BoxRepr {
    lo: FourVector,
    hi: FourVector,
}

impl TryFrom<BoxRepr> for SpacetimeBox {
    type Error = Error;
    fn try_from(r: BoxRepr) -> Result<Self> {
        SpacetimeBox::new(r.lo, r.hi)
    }
}

impl From<SpacetimeBox> for BoxRepr {
    fn from(b: SpacetimeBox) -> Self {
        BoxRepr { lo: b.lo, hi: b.hi }
    }
}

fn coords(v: &FourVector) -> [f64; 4] {
    (*v).into()
}

impl SpacetimeBox {
    pub fn new(lo: FourVector, hi: FourVector) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Invalid {
                what: "box",
                reason: "non-finite bound".into(),
            });
        }
        let (l, h) = (coords(&lo), coords(&hi));
        if l.iter().zip(&h).any(|(a, b)| a > b) {
            return Err(Error::Invalid {
                what: "box",
                reason: format!("lo {l:?} exceeds hi {h:?}"),
            });
        }
        Ok(Self { lo, hi })
    }

    /// Box on the rest plane `t`.
    pub fn spatial(t: f64, lo: [f64; 3], hi: [f64; 3]) -> Result<Self> {
        Self::new(
            FourVector::new(t, lo[0], lo[1], lo[2]),
            FourVector::new(t, hi[0], hi[1], hi[2]),
        )
    }

    pub fn lo(&self) -> FourVector {
        self.lo
    }

    pub fn hi(&self) -> FourVector {
        self.hi
    }

    pub fn is_spatial(&self) -> bool {
        self.lo.t == self.hi.t
    }

    pub fn contains_point(&self, p: FourVector) -> bool {
        let (l, h, q) = (coords(&self.lo), coords(&self.hi), coords(&p));
        (0..4).all(|i| l[i] <= q[i] && q[i] <= h[i])
    }

    pub fn contains_box(&self, other: &SpacetimeBox) -> bool {
        self.contains_point(other.lo) && self.contains_point(other.hi)
    }

    pub fn translate(&self, v: FourVector) -> Self {
        Self {
            lo: self.lo + v,
            hi: self.hi + v,
        }
    }

    /// The Minkowski difference `{b − a : a ∈ self, b ∈ other}`, itself a box.
    pub fn difference_box(&self, other: &SpacetimeBox) -> Self {
        Self {
            lo: other.lo - self.hi,
            hi: other.hi - self.lo,
        }
    }

    /// Largest `|t|` over the box.
    fn max_abs_time(&self) -> f64 {
        self.lo.t.abs().max(self.hi.t.abs())
    }

    /// Smallest Euclidean norm of the spatial projection.
    fn min_spatial_norm(&self) -> f64 {
        let (l, h) = (self.lo.spatial(), self.hi.spatial());
        (0..3)
            .map(|i| clamp_to_zero(l[i], h[i]).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// Distance from 0 to the interval `[lo, hi]`.
fn clamp_to_zero(lo: f64, hi: f64) -> f64 {
    if lo > 0.0 {
        lo
    } else if hi < 0.0 {
        -hi
    } else {
        0.0
    }
}

/// True iff every difference vector between the two boxes is strictly
/// spacelike beyond the null band `tol`.
pub fn boxes_causally_separated(a: &SpacetimeBox, b: &SpacetimeBox, tol: f64) -> bool {
    let d = a.difference_box(b);
    let tmax = d.max_abs_time();
    let smin = d.min_spatial_norm();
    smin * smin - tmax * tmax > tol && smin > 0.0
}

/// Finite union of boxes sharing the adapted coordinates of `frame`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RegionRepr", into = "RegionRepr")]
pub struct RegionUnion {
    frame: FourVector,
    boxes: Vec<SpacetimeBox>,
}

#[derive(Serialize, Deserialize)]
struct RegionRepr {
    frame: FourVector,
    boxes: Vec<SpacetimeBox>,
}

impl TryFrom<RegionRepr> for RegionUnion {
    type Error = Error;
    fn try_from(r: RegionRepr) -> Result<Self> {
        RegionUnion::new(r.boxes, r.frame)
    }
}

impl From<RegionUnion> for RegionRepr {
    fn from(r: RegionUnion) -> Self {
        RegionRepr {
            frame: r.frame,
            boxes: r.boxes,
        }
    }
}

impl RegionUnion {
    pub fn new(boxes: Vec<SpacetimeBox>, frame: FourVector) -> Result<Self> {
        if boxes.is_empty() {
            return Err(Error::Invalid {
                what: "region",
                reason: "empty box list".into(),
            });
        }
        if !frame.is_unit_future_timelike(1e-9) {
            return Err(Error::Invalid {
                what: "region",
                reason: format!("frame {frame:?} is not a unit future timelike vector"),
            });
        }
        Ok(Self { frame, boxes })
    }

    /// Single box in the rest frame of the coordinates.
    pub fn single(b: SpacetimeBox) -> Self {
        Self {
            frame: FourVector::unit_time(),
            boxes: vec![b],
        }
    }

    pub fn frame(&self) -> FourVector {
        self.frame
    }

    pub fn boxes(&self) -> &[SpacetimeBox] {
        &self.boxes
    }

    /// Every box of `self` lies inside some box of `other`.
    pub fn is_covered_by(&self, other: &RegionUnion) -> bool {
        self.boxes
            .iter()
            .all(|b| other.boxes.iter().any(|o| o.contains_box(b)))
    }
}

fn same_frame(a: &RegionUnion, b: &RegionUnion) -> Result<()> {
    let (fa, fb) = (coords(&a.frame), coords(&b.frame));
    if fa.iter().zip(&fb).all(|(x, y)| (x - y).abs() <= 1e-12) {
        Ok(())
    } else {
        Err(Error::FrameMismatch)
    }
}

/// `(J⁺(A) ∪ J⁻(A)) ∩ B = ∅`, decided box pair by box pair.
pub fn causally_separated(a: &RegionUnion, b: &RegionUnion) -> Result<bool> {
    causally_separated_with_tol(a, b, DEFAULT_LIGHTCONE_TOL)
}

pub fn causally_separated_with_tol(a: &RegionUnion, b: &RegionUnion, tol: f64) -> Result<bool> {
    same_frame(a, b)?;
    Ok(a.boxes
        .iter()
        .all(|ba| b.boxes.iter().all(|bb| boxes_causally_separated(ba, bb, tol))))
}

/// Membership of `p` in the causal completion (domain of dependence) of a
/// convex spatial box: the closed ball of radius `|p.t − t₀|` around the
/// spatial part of `p` must fit inside the box.
pub fn lab_contains(p: FourVector, lab: &SpacetimeBox) -> Result<bool> {
    if !lab.is_spatial() {
        return Err(Error::NotSpatial);
    }
    let r = (p.t - lab.lo.t).abs();
    let (l, h, q) = (lab.lo.spatial(), lab.hi.spatial(), p.spatial());
    Ok((0..3).all(|i| q[i] - r >= l[i] && q[i] + r <= h[i]))
}

/// Inner approximation of the laboratory of a union: union of the per-box
/// completions.
pub fn lab_contains_union(p: FourVector, lab: &RegionUnion) -> Result<bool> {
    for b in &lab.boxes {
        if lab_contains(p, b)? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Euclidean distance between two spatial boxes on the same rest plane.
pub fn spatial_distance(a: &SpacetimeBox, b: &SpacetimeBox) -> Result<f64> {
    if !a.is_spatial() || !b.is_spatial() {
        return Err(Error::NotSpatial);
    }
    if (a.lo.t - b.lo.t).abs() > 1e-12 {
        return Err(Error::DifferentRestPlanes(a.lo.t, b.lo.t));
    }
    Ok(a.difference_box(b).min_spatial_norm())
}

/// Smallest pairwise spatial distance between the boxes of two regions.
pub fn region_spatial_distance(a: &RegionUnion, b: &RegionUnion) -> Result<f64> {
    same_frame(a, b)?;
    let mut best = f64::INFINITY;
    for ba in &a.boxes {
        for bb in &b.boxes {
            best = best.min(spatial_distance(ba, bb)?);
        }
    }
    Ok(best)
}

pub fn translate_region(r: &RegionUnion, v: FourVector) -> RegionUnion {
    RegionUnion {
        frame: r.frame,
        boxes: r.boxes.iter().map(|b| b.translate(v)).collect(),
    }
}
