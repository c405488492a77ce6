//! Laboratory-conditioned localization POVMs.
//!
//! Given effects `A(Δ)` with `A(Δ₀)` invertible, the conditional family
//! `B(Δ) = V A(Δ₀)^{−1/2} A(Δ) A(Δ₀)^{−1/2} V†` is a normalized POVM on the
//! cells of the laboratory `Δ₀`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, SpacetimeBox};
use crate::lattice::{cells_region, CellSet, LatticeLocalizationSystem};
use crate::linalg::{self, c, CMat, HermitianEigen};
use crate::quantum::{self, DensityState, Effect, PROB_FLOOR};
use crate::report::CheckReport;

/// Relative floor on `min eig A(Δ₀)` below which construction is refused.
pub const KERNEL_FLOOR_REL: f64 = 1e-8;
/// Tolerance for the exact identities of the construction.
pub const CONDITIONAL_TOL: f64 = 1e-10;
/// Slack on the gentle-measurement inequality.
pub const GENTLE_SLACK: f64 = 1e-9;
/// Largest laboratory whose subsets are enumerated exhaustively.
pub const MAX_ENUMERATED_LAB: usize = 12;

/// Smallest eigenvalue of the Hermitian part.
pub fn kernel_min_eig(a0: &CMat) -> f64 {
    HermitianEigen::new(&linalg::hermitian_part(a0)).min()
}

#[derive(Clone, Debug)]
pub struct ConditionalPovm {
    lab: CellSet,
    cell_ops: BTreeMap<usize, CMat>,
    lab_effect: CMat,
    lab_sqrt: CMat,
    inv_sqrt: CMat,
    conjugator: CMat,
    kernel_min_eig: f64,
    lab_norm: f64,
}

impl ConditionalPovm {
    /// Core constructor from per-cell positive operators on the laboratory.
    pub fn from_cell_operators(
        lab: &CellSet,
        cell_ops: BTreeMap<usize, CMat>,
        conjugator: Option<&CMat>,
        floor_rel: f64,
    ) -> Result<Self> {
        let dim = match cell_ops.values().next() {
            Some(m) => m.nrows(),
            None => {
                return Err(Error::KernelTooSmall {
                    min_eig: 0.0,
                    floor: 0.0,
                })
            }
        };
        if let Some(k) = lab.iter().find(|k| !cell_ops.contains_key(k)) {
            return Err(Error::Invalid {
                what: "conditional family",
                reason: format!("no operator for lab cell {k}"),
            });
        }
        let lab_effect = lab.iter().fold(linalg::zeros(dim), |acc, k| acc + &cell_ops[&k]);
        let eig = HermitianEigen::new(&linalg::hermitian_part(&lab_effect));
        let lab_norm = eig.max().max(0.0);
        let floor = floor_rel * lab_norm;
        let min_eig = eig.min();
        if lab.is_empty() || min_eig <= floor {
            return Err(Error::KernelTooSmall { min_eig, floor });
        }
        let conjugator = match conjugator {
            Some(v) => {
                if v.nrows() != dim || v.ncols() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: v.nrows(),
                    });
                }
                let defect = linalg::unitarity_defect(v);
                if defect > CONDITIONAL_TOL {
                    return Err(Error::NotUnitary(defect));
                }
                v.clone()
            }
            None => linalg::identity(dim),
        };
        Ok(Self {
            lab: lab.clone(),
            cell_ops: lab.iter().map(|k| (k, cell_ops[&k].clone())).collect(),
            lab_sqrt: eig.apply(|x| x.max(0.0).sqrt()),
            inv_sqrt: eig.apply(|x| 1.0 / x.sqrt()),
            lab_effect,
            conjugator,
            kernel_min_eig: min_eig,
            lab_norm,
        })
    }

    pub fn lab_cells(&self) -> &CellSet {
        &self.lab
    }

    pub fn dim(&self) -> usize {
        self.lab_effect.nrows()
    }

    /// `A(Δ₀)^{−1/2}`.
    pub fn inv_sqrt(&self) -> &CMat {
        &self.inv_sqrt
    }

    /// `A(Δ₀)^{1/2}`.
    pub fn lab_sqrt(&self) -> &CMat {
        &self.lab_sqrt
    }

    pub fn lab_effect(&self) -> &CMat {
        &self.lab_effect
    }

    pub fn conjugator(&self) -> &CMat {
        &self.conjugator
    }

    pub fn kernel_min_eig(&self) -> f64 {
        self.kernel_min_eig
    }

    /// `‖A(Δ₀)‖`, the rescaling needed for the gentle condition.
    pub fn lab_norm(&self) -> f64 {
        self.lab_norm
    }

    /// Unconditioned operator `A(Δ)` for `Δ ⊆ Δ₀`.
    pub fn raw_effect(&self, delta: &CellSet) -> Result<CMat> {
        self.check_subset(delta)?;
        Ok(delta
            .iter()
            .fold(linalg::zeros(self.dim()), |acc, k| acc + &self.cell_ops[&k]))
    }

    fn check_subset(&self, delta: &CellSet) -> Result<()> {
        if delta.is_subset(&self.lab) {
            Ok(())
        } else {
            Err(Error::Invalid {
                what: "cell set",
                reason: format!("{:?} is not inside the laboratory {:?}", delta.iter().collect::<Vec<_>>(), self.lab.iter().collect::<Vec<_>>()),
            })
        }
    }

    /// `B(Δ)` for `Δ ⊆ Δ₀`.
    pub fn effect(&self, delta: &CellSet) -> Result<CMat> {
        let a = self.raw_effect(delta)?;
        let inner = &self.inv_sqrt * a * &self.inv_sqrt;
        Ok(linalg::hermitian_part(&linalg::sandwich(&self.conjugator, &inner)))
    }

    /// Conditioned state `V √A(Δ₀) ρ √A(Δ₀) V† / tr(ρ A(Δ₀))`.
    pub fn conditioned_state(&self, rho: &DensityState) -> Result<DensityState> {
        let p = rho.expectation(&self.lab_effect);
        if p <= PROB_FLOOR {
            return Err(Error::NonPositiveWeight(p));
        }
        let post = linalg::sandwich(&self.conjugator, &linalg::sandwich(&self.lab_sqrt, rho.matrix()));
        Ok(DensityState::new_unchecked(linalg::hermitian_part(&(post / c(p, 0.0)))))
    }

    /// Subsets used by [`Self::validate`]: all of them for small labs.
    pub fn sample_subsets(&self) -> Vec<CellSet> {
        let cells: Vec<usize> = self.lab.iter().collect();
        if cells.len() <= MAX_ENUMERATED_LAB {
            return (0u32..(1 << cells.len()))
                .map(|mask| {
                    cells
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| mask & (1 << i) != 0)
                        .map(|(_, &k)| k)
                        .collect()
                })
                .collect();
        }
        let mut out = vec![CellSet::empty(), self.lab.clone()];
        for i in 0..cells.len() {
            out.push(CellSet::new([cells[i]]));
            out.push(CellSet::new(cells[..=i].iter().copied()));
            out.push(CellSet::new(cells.iter().copied().skip(i % 2).step_by(2)));
        }
        out
    }

    /// Normalization, in-lab additivity over 2-partitions and effect bounds.
    pub fn validate(&self, tol: f64) -> Result<CheckReport> {
        let mut r = CheckReport::new("conditional_povm");
        r.tol = tol;
        let total = self.effect(&self.lab)?;
        let vv = &self.conjugator * self.conjugator.adjoint();
        r.at_most("normalization", linalg::op_norm(&(&total - vv)), tol);
        let mut additivity = 0.0_f64;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for s in self.sample_subsets() {
            let b = self.effect(&s)?;
            let rest = self.effect(&self.lab.difference(&s))?;
            additivity = additivity.max(linalg::op_norm(&(&b + rest - &total)));
            let eig = HermitianEigen::new(&b);
            lo = lo.min(eig.min());
            hi = hi.max(eig.max());
        }
        r.at_most("additivity", additivity, tol);
        r.at_least("min_eigenvalue", lo, -tol);
        r.at_most("max_eigenvalue", hi, 1.0 + tol);
        r.info("kernel_min_eig", self.kernel_min_eig);
        r.info("lab_norm", self.lab_norm);
        Ok(r)
    }
}

/// Conditional POVM of a lattice system on the laboratory `lab`.
pub fn build_conditional(
    sys: &LatticeLocalizationSystem,
    lab: &CellSet,
    conjugator: Option<&CMat>,
) -> Result<ConditionalPovm> {
    lab.check(sys.n())?;
    let ops = lab.iter().map(|k| (k, sys.cell_effects()[k].clone())).collect();
    ConditionalPovm::from_cell_operators(lab, ops, conjugator, KERNEL_FLOOR_REL)
}

/// Conditional POVM from a positive-operator family `T` given on cell sets
/// around the laboratory. Every lab cell needs a singleton entry; larger
/// entries inside the lab must equal the sum of their cells. No global
/// normalization is required.
pub fn build_conditional_from_unnormalized(
    family: &BTreeMap<CellSet, CMat>,
    lab: &CellSet,
    tol: f64,
) -> Result<ConditionalPovm> {
    let mut cell_ops = BTreeMap::new();
    for (set, m) in family {
        let defect = linalg::hermiticity_defect(m);
        let scale = linalg::max_abs(m).max(1.0);
        if defect > tol * scale {
            return Err(Error::NotHermitian { defect });
        }
        let min = HermitianEigen::new(&linalg::hermitian_part(m)).min();
        if min < -tol * scale {
            return Err(Error::Invalid {
                what: "operator family",
                reason: format!("negative eigenvalue {min:e}"),
            });
        }
        if set.len() == 1 {
            cell_ops.insert(set.iter().next().unwrap(), linalg::hermitian_part(m));
        }
    }
    for (set, m) in family {
        if set.len() < 2 || !set.is_subset(lab) {
            continue;
        }
        let Some(dim) = cell_ops.values().next().map(|x| x.nrows()) else {
            break;
        };
        let mut sum = linalg::zeros(dim);
        for k in set.iter() {
            match cell_ops.get(&k) {
                Some(op) => sum += op,
                None => {
                    return Err(Error::Invalid {
                        what: "operator family",
                        reason: format!("no singleton entry for cell {k}"),
                    })
                }
            }
        }
        let scale = linalg::op_norm(m).max(1.0);
        if linalg::op_norm(&(m - sum)) > tol * scale {
            return Err(Error::NotAdditive(format!("{:?}", set.iter().collect::<Vec<_>>())));
        }
    }
    ConditionalPovm::from_cell_operators(lab, cell_ops, None, KERNEL_FLOOR_REL)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GentleBoundReport {
    pub delta: f64,
    #[serde(rename = "lhs")]
    pub lhs_trace_dist: f64,
    #[serde(rename = "rhs")]
    pub rhs_bound: f64,
    pub margin: f64,
}

impl GentleBoundReport {
    pub fn holds(&self) -> bool {
        self.margin >= -GENTLE_SLACK
    }
}

/// `2√δ + δ`.
pub fn gentle_rhs(delta: f64) -> f64 {
    2.0 * delta.sqrt() + delta
}

/// Gentle measurement lemma with the tight `δ = 1 − tr(ρT)/‖T‖`.
pub fn gentle_bound(t: &Effect, rho: &DensityState) -> Result<GentleBoundReport> {
    if t.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: t.dim(),
        });
    }
    let p = rho.expectation(t.matrix());
    if p <= PROB_FLOOR {
        return Err(Error::NonPositiveWeight(p));
    }
    let norm = t.op_norm();
    let delta = (1.0 - p / norm).clamp(0.0, 1.0);
    let root = quantum::psd_sqrt(t);
    let post = linalg::sandwich(&root, rho.matrix()) / c(p, 0.0);
    let lhs = quantum::trace_norm(&(rho.matrix() - post));
    let rhs = gentle_rhs(delta);
    Ok(GentleBoundReport {
        delta,
        lhs_trace_dist: lhs,
        rhs_bound: rhs,
        margin: rhs - lhs,
    })
}

/// Compares the conditional probability `tr(ρB(Δ))` with the detection
/// fraction `tr(ρA(Δ))/tr(ρA(Δ₀))` under the gentle bound.
pub fn conditional_prob_bound(
    sys: &LatticeLocalizationSystem,
    delta: &CellSet,
    lab: &CellSet,
    rho: &DensityState,
) -> Result<CheckReport> {
    let cond = build_conditional(sys, lab, None)?;
    let p_lab = rho.expectation(cond.lab_effect());
    let d = 1.0 - p_lab;
    if d >= 1.0 || p_lab <= PROB_FLOOR {
        return Err(Error::VacuousBound(d));
    }
    let a = cond.raw_effect(delta)?;
    let b = cond.effect(delta)?;
    let fraction = rho.expectation(&a) / p_lab;
    let p_b = rho.expectation(&b);
    let diff = (p_b - fraction).abs();
    let bound = gentle_rhs(d.max(0.0));

    let mut r = CheckReport::new("conditional_bound");
    r.tol = CONDITIONAL_TOL;
    r.info("delta", d);
    r.info("fraction", fraction);
    r.info("conditional_probability", p_b);
    r.info("bound", bound);
    r.at_most("difference", diff, bound + GENTLE_SLACK);
    let conditioned = cond.conditioned_state(rho)?;
    r.at_most("exact_identity", (conditioned.expectation(&b) - fraction).abs(), CONDITIONAL_TOL);
    let opnorm_bound = bound * linalg::op_norm(&b);
    r.at_most(
        "operator_form",
        (conditioned.expectation(&b) - p_b).abs(),
        opnorm_bound + GENTLE_SLACK,
    );
    if bound >= 1.0 {
        r.note(format!("vacuous bound: 2√δ + δ = {bound:.4} >= 1"));
        r.witness("vacuous", true);
    }
    Ok(r)
}

/// A conjugated conditional POVM equals the plain one built from the
/// transformed system `V E_k V†`, `V U V†`, `V H V†`.
pub fn v_conjugation_reduction(
    sys: &LatticeLocalizationSystem,
    lab: &CellSet,
    v: &CMat,
) -> Result<CheckReport> {
    let direct = build_conditional(sys, lab, Some(v))?;
    let moved = sys.conjugated(v);
    let reduced = build_conditional(&moved, lab, None)?;
    let mut r = CheckReport::new("v_conjugation");
    r.tol = CONDITIONAL_TOL;
    let mut worst = 0.0_f64;
    for s in direct.sample_subsets() {
        worst = worst.max(linalg::op_norm(&(direct.effect(&s)? - reduced.effect(&s)?)));
    }
    r.at_most("reduction", worst, CONDITIONAL_TOL);
    let e0 = &sys.energy_eigen().values;
    let e1 = &moved.energy_eigen().values;
    let spec = e0
        .iter()
        .zip(e1.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    let scale = linalg::op_norm(sys.hamiltonian()).max(1.0);
    r.at_most("energy_spectrum", spec, CONDITIONAL_TOL * scale);

    // Lattice covariance: U B_{Δ₀}(Δ) U† = B_{Δ₀+1}(Δ+1).
    let n = sys.n();
    let shifted = build_conditional(sys, &lab.shift(1, n), None)?;
    let plain = build_conditional(sys, lab, None)?;
    let mut cov = 0.0_f64;
    for s in plain.sample_subsets() {
        let moved_b = linalg::sandwich(sys.shift(), &plain.effect(&s)?);
        cov = cov.max(linalg::op_norm(&(moved_b - shifted.effect(&s.shift(1, n))?)));
    }
    r.at_most("shift_covariance", cov, CONDITIONAL_TOL);
    Ok(r)
}

/// Cross-laboratory decomposition of the conditional POVM of a union of
/// disjoint labs, with the plain additivity failure it implies.
pub fn composition_identity_check(
    sys: &LatticeLocalizationSystem,
    lab: &CellSet,
    lab_prime: &CellSet,
) -> Result<CheckReport> {
    if !lab.is_disjoint(lab_prime) {
        return Err(Error::Overlap);
    }
    let b1 = build_conditional(sys, lab, None)?;
    let b2 = build_conditional(sys, lab_prime, None)?;
    let joint_lab = lab.union(lab_prime);
    let b12 = build_conditional(sys, &joint_lab, None)?;
    let mut identity = 0.0_f64;
    let mut failure = 0.0_f64;
    let mut worst: Option<CellSet> = None;
    for s in b12.sample_subsets() {
        let s1 = s.intersection(lab);
        let s2 = s.intersection(lab_prime);
        let lhs = b12.effect(&s)?;
        let inner = linalg::sandwich(b1.lab_sqrt(), &b1.effect(&s1)?)
            + linalg::sandwich(b2.lab_sqrt(), &b2.effect(&s2)?);
        let rhs = linalg::sandwich(b12.inv_sqrt(), &inner);
        identity = identity.max(linalg::op_norm(&(&lhs - rhs)));
        let plain = linalg::op_norm(&(&lhs - b1.effect(&s1)? - b2.effect(&s2)?));
        if plain > failure {
            failure = plain;
            worst = Some(s);
        }
    }
    let mut r = CheckReport::new("composition");
    r.tol = CONDITIONAL_TOL;
    r.at_most("identity", identity, CONDITIONAL_TOL);
    r.info("cross_lab_additivity_failure", failure);
    if let Some(w) = worst {
        r.witness("failure_delta", w);
    }
    Ok(r)
}

/// Rest-space box holding the lattice: cell `k` is `[k a, (k+1) a] × [0, a]²`
/// at `t = 0`.
pub fn lattice_rest_box(sys: &LatticeLocalizationSystem) -> SpacetimeBox {
    let a = sys.spacing();
    SpacetimeBox::spatial(0.0, [0.0, 0.0, 0.0], [a * sys.n() as f64, a, a])
        .expect("positive spacing gives a valid box")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossLabReport {
    pub commutator: f64,
    pub spatial_distance: f64,
    pub causally_separated: bool,
}

impl CrossLabReport {
    pub fn to_check_report(&self) -> CheckReport {
        let mut r = CheckReport::new("cross_lab_commutator");
        r.info("commutator", self.commutator);
        r.info("spatial_distance", self.spatial_distance);
        r.witness("causally_separated", self.causally_separated);
        r
    }
}

/// `‖[B_{Δ₀}(Δ), B_{Δ₀′}(Δ′)]‖` with the geometry of the two labs. Measured,
/// not judged.
pub fn cross_lab_commutator(
    sys_a: &LatticeLocalizationSystem,
    lab: &CellSet,
    delta: &CellSet,
    sys_b: &LatticeLocalizationSystem,
    lab_prime: &CellSet,
    delta_prime: &CellSet,
) -> Result<CrossLabReport> {
    if sys_a.n() != sys_b.n() {
        return Err(Error::DimensionMismatch {
            expected: sys_a.n(),
            got: sys_b.n(),
        });
    }
    let ba = build_conditional(sys_a, lab, None)?.effect(delta)?;
    let bb = build_conditional(sys_b, lab_prime, None)?.effect(delta_prime)?;
    let commutator = linalg::op_norm(&linalg::commutator(&ba, &bb));
    let ra = cells_region(&lattice_rest_box(sys_a), sys_a.n(), lab)?.expect("lab is nonempty");
    let rb = cells_region(&lattice_rest_box(sys_b), sys_b.n(), lab_prime)?.expect("lab is nonempty");
    Ok(CrossLabReport {
        commutator,
        spatial_distance: geometry::region_spatial_distance(&ra, &rb)?,
        causally_separated: geometry::causally_separated(&ra, &rb)?,
    })
}

/// Pure state concentrated in the laboratory: a Gaussian wavepacket centred
/// on the lab, projected onto the spectral subspace `A(Δ₀) ≥ 1 − target`
/// and renormalized, so `1 − tr(ρA(Δ₀)) ≤ target`.
pub fn localized_state(
    sys: &LatticeLocalizationSystem,
    lab: &CellSet,
    target_delta: f64,
) -> Result<DensityState> {
    let n = sys.n();
    lab.check(n)?;
    if lab.is_empty() {
        return Err(Error::Invalid {
            what: "laboratory",
            reason: "empty".into(),
        });
    }
    let start = lab
        .iter()
        .find(|&k| !lab.contains((k + n - 1) % n))
        .unwrap_or(0);
    let centre = (start + lab.len() / 2) % n;
    let width = (lab.len() as f64 / 4.0).max(1.0);
    let psi = nalgebra::DVector::from_fn(n, |x, _| {
        let d = x.abs_diff(centre).min(n - x.abs_diff(centre)) as f64;
        c((-d * d / (4.0 * width * width)).exp(), 0.0)
    });
    let eig = HermitianEigen::new(&sys.effect_of(lab)?);
    let projector = eig.apply(|x| if x >= 1.0 - target_delta { 1.0 } else { 0.0 });
    let projected = &projector * psi;
    if projected.norm() < 1e-8 {
        return Err(Error::Invalid {
            what: "laboratory",
            reason: format!(
                "no spectral weight of A(lab) above 1 - {target_delta} (max eigenvalue {:.6})",
                eig.max()
            ),
        });
    }
    DensityState::pure(&projected)
}
