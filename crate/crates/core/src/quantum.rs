//! Effects, finite discrete POVMs, density states and Kraus instruments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, HermitianEigen};
use crate::report::CheckReport;

/// Default validation tolerance, relative to `max(1, ‖M‖)`.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Outcome probabilities at or below this leave the conditional state undefined.
pub const PROB_FLOOR: f64 = 1e-12;

fn scale(m: &CMat) -> f64 {
    linalg::op_norm(m).max(1.0)
}

fn check_square(m: &CMat) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::Invalid {
            what: "matrix",
            reason: format!("expected a non-empty square matrix, got {}x{}", m.nrows(), m.ncols()),
        });
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Invalid {
            what: "matrix",
            reason: "non-finite entry".into(),
        });
    }
    Ok(())
}

fn check_dim(expected: usize, m: &CMat) -> Result<()> {
    if m.nrows() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: m.nrows(),
        });
    }
    Ok(())
}

/// Pushes Hermiticity and spectral-bound residuals for `m` into `r`.
fn spectral_checks(r: &mut CheckReport, m: &CMat, tol: f64, upper: Option<f64>) -> HermitianEigen {
    let s = scale(m);
    r.at_most("hermiticity_defect", linalg::hermiticity_defect(m), tol * s);
    let eig = HermitianEigen::new(m);
    r.at_least("min_eigenvalue", eig.min(), -tol * s);
    if let Some(u) = upper {
        if !r.at_most("max_eigenvalue", eig.max(), u + tol * s) {
            r.note("max eigenvalue > 1");
        }
    }
    eig
}

/// Hermitian operator `0 ≤ E ≤ I`.
#[derive(Clone, Debug, PartialEq)]
pub struct Effect(CMat);

impl Effect {
    pub fn new(m: CMat) -> Result<Self> {
        Self::with_tol(m, DEFAULT_TOL)
    }

    pub fn with_tol(m: CMat, tol: f64) -> Result<Self> {
        check_square(&m)?;
        let r = Self::validate_matrix(&m, tol);
        if !r.passed() {
            return Err(Error::Invalid {
                what: "effect",
                reason: r.failures().join(", "),
            });
        }
        Ok(Self(m))
    }

    /// Wraps a matrix known to be an effect by construction.
    pub fn new_unchecked(m: CMat) -> Self {
        Self(m)
    }

    pub fn identity(dim: usize) -> Self {
        Self(linalg::identity(dim))
    }

    pub fn zero(dim: usize) -> Self {
        Self(linalg::zeros(dim))
    }

    pub fn validate_matrix(m: &CMat, tol: f64) -> CheckReport {
        let mut r = CheckReport::new("effect");
        r.tol = tol;
        spectral_checks(&mut r, m, tol, Some(1.0));
        r
    }

    pub fn validate(&self, tol: f64) -> CheckReport {
        Self::validate_matrix(&self.0, tol)
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn into_matrix(self) -> CMat {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// `I − E`.
    pub fn complement(&self) -> Self {
        Self(linalg::identity(self.dim()) - &self.0)
    }

    pub fn op_norm(&self) -> f64 {
        HermitianEigen::new(&self.0).max().max(0.0)
    }
}

/// Hermitian PSD square root by eigendecomposition with negative
/// eigenvalues clamped to zero.
pub fn psd_sqrt(e: &Effect) -> CMat {
    linalg::sqrt_psd(e.matrix())
}

/// [`psd_sqrt`] for an arbitrary matrix; rejects non-Hermitian input.
pub fn psd_sqrt_matrix(m: &CMat, tol: f64) -> Result<CMat> {
    check_square(m)?;
    let defect = linalg::hermiticity_defect(m);
    if defect > tol * scale(m) {
        return Err(Error::NotHermitian { defect });
    }
    Ok(linalg::sqrt_psd(m))
}

/// Sum of singular values.
pub fn trace_norm(m: &CMat) -> f64 {
    linalg::trace_norm(m)
}

/// Positive semidefinite, unit-trace Hermitian matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityState(CMat);

impl DensityState {
    pub fn new(m: CMat) -> Result<Self> {
        Self::with_tol(m, DEFAULT_TOL)
    }

    pub fn with_tol(m: CMat, tol: f64) -> Result<Self> {
        check_square(&m)?;
        let r = Self::validate_matrix(&m, tol);
        if !r.passed() {
            return Err(Error::Invalid {
                what: "state",
                reason: r.failures().join(", "),
            });
        }
        Ok(Self(m))
    }

    pub fn new_unchecked(m: CMat) -> Self {
        Self(m)
    }

    /// `|ψ⟩⟨ψ| / ⟨ψ|ψ⟩`.
    pub fn pure(psi: &nalgebra::DVector<linalg::C64>) -> Result<Self> {
        let n = psi.norm();
        if !(n > 0.0) {
            return Err(Error::Invalid {
                what: "state",
                reason: "zero vector".into(),
            });
        }
        Ok(Self(linalg::ket_bra(&(psi / linalg::c(n, 0.0)))))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(linalg::identity(dim) / linalg::c(dim as f64, 0.0))
    }

    pub fn validate_matrix(m: &CMat, tol: f64) -> CheckReport {
        let mut r = CheckReport::new("state");
        r.tol = tol;
        spectral_checks(&mut r, m, tol, None);
        let tr = linalg::trace(m);
        r.at_most("trace_defect", (tr - linalg::c(1.0, 0.0)).norm(), tol * scale(m));
        r
    }

    pub fn validate(&self, tol: f64) -> CheckReport {
        Self::validate_matrix(&self.0, tol)
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn into_matrix(self) -> CMat {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// `tr(ρ E)`.
    pub fn expectation(&self, e: &CMat) -> f64 {
        linalg::trace_product_re(&self.0, e)
    }
}

/// Admissibility switches for POVM elements.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PovmOptions {
    /// Accept `T_j = 0` (useful for relabeled or degenerate scenarios).
    #[serde(default)]
    pub allow_zero: bool,
    /// Require `T_j > 0` (strictly positive definite).
    #[serde(default)]
    pub strict_positive: bool,
}

/// Finite family of effects summing to the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscretePovm {
    effects: Vec<Effect>,
    labels: Vec<String>,
}

impl DiscretePovm {
    pub fn new(effects: Vec<CMat>) -> Result<Self> {
        Self::with_options(effects, None, DEFAULT_TOL, PovmOptions::default())
    }

    pub fn with_options(
        effects: Vec<CMat>,
        labels: Option<Vec<String>>,
        tol: f64,
        opts: PovmOptions,
    ) -> Result<Self> {
        if effects.is_empty() {
            return Err(Error::Invalid {
                what: "povm",
                reason: "no effects".into(),
            });
        }
        for e in &effects {
            check_square(e)?;
            check_dim(effects[0].nrows(), e)?;
        }
        let labels = labels.unwrap_or_else(|| (0..effects.len()).map(|j| j.to_string()).collect());
        if labels.len() != effects.len() {
            return Err(Error::Invalid {
                what: "povm",
                reason: format!("{} labels for {} effects", labels.len(), effects.len()),
            });
        }
        let r = Self::validate_matrices(&effects, tol, opts);
        if !r.passed() {
            return Err(Error::Invalid {
                what: "povm",
                reason: r.failures().join(", "),
            });
        }
        Ok(Self {
            effects: effects.into_iter().map(Effect).collect(),
            labels,
        })
    }

    pub fn new_unchecked(effects: Vec<CMat>) -> Self {
        let labels = (0..effects.len()).map(|j| j.to_string()).collect();
        Self {
            effects: effects.into_iter().map(Effect).collect(),
            labels,
        }
    }

    /// Elementary two-outcome POVM `{E, I − E}`.
    pub fn elementary(e: &Effect) -> Self {
        Self {
            effects: vec![e.clone(), e.complement()],
            labels: vec!["1".into(), "0".into()],
        }
    }

    pub fn trivial(dim: usize) -> Self {
        Self::new_unchecked(vec![linalg::identity(dim)])
    }

    pub fn validate_matrices(effects: &[CMat], tol: f64, opts: PovmOptions) -> CheckReport {
        let mut r = CheckReport::new("povm");
        r.tol = tol;
        let dim = effects.first().map_or(0, |e| e.nrows());
        let mut sum = linalg::zeros(dim);
        for (j, e) in effects.iter().enumerate() {
            let er = Effect::validate_matrix(e, tol);
            r.absorb(&format!("effect[{j}]"), er);
            let eig = HermitianEigen::new(e);
            if !opts.allow_zero {
                r.at_least(format!("effect[{j}].norm"), eig.max(), tol);
            }
            if opts.strict_positive {
                r.at_least(format!("effect[{j}].strict_positivity"), eig.min(), tol);
            }
            sum += e;
        }
        r.at_most(
            "normalization",
            linalg::op_norm(&(sum - linalg::identity(dim))),
            tol * (effects.len().max(1) as f64),
        );
        r
    }

    pub fn validate(&self, tol: f64) -> CheckReport {
        let ms: Vec<CMat> = self.effects.iter().map(|e| e.0.clone()).collect();
        Self::validate_matrices(&ms, tol, PovmOptions { allow_zero: true, strict_positive: false })
    }

    pub fn effects(&self) -> &[Effect] {
        &self.effects
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.effects[0].dim()
    }

    pub fn probabilities(&self, rho: &DensityState) -> Vec<f64> {
        self.effects.iter().map(|e| rho.expectation(e.matrix())).collect()
    }
}

/// Kraus realization of a finite discrete POVM: `T_j = Σ_k K†_{jk} K_{jk}`.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausInstrument {
    families: Vec<Vec<CMat>>,
    povm: DiscretePovm,
}

impl KrausInstrument {
    /// Builds the instrument and its induced POVM; fails when the induced
    /// effects do not sum to the identity.
    pub fn new(families: Vec<Vec<CMat>>) -> Result<Self> {
        Self::with_tol(families, DEFAULT_TOL)
    }

    pub fn with_tol(families: Vec<Vec<CMat>>, tol: f64) -> Result<Self> {
        if families.is_empty() || families.iter().any(|f| f.is_empty()) {
            return Err(Error::Invalid {
                what: "instrument",
                reason: "every outcome needs at least one Kraus operator".into(),
            });
        }
        let dim = families[0][0].nrows();
        for k in families.iter().flatten() {
            check_square(k)?;
            check_dim(dim, k)?;
        }
        let effects = families.iter().map(|f| induced_effect(f)).collect();
        let povm = DiscretePovm::with_options(
            effects,
            None,
            tol,
            PovmOptions {
                allow_zero: true,
                strict_positive: false,
            },
        )?;
        Ok(Self { families, povm })
    }

    /// Instrument whose effects are already known; skips validation.
    pub fn new_unchecked(families: Vec<Vec<CMat>>) -> Self {
        let effects = families.iter().map(|f| induced_effect(f)).collect();
        Self {
            families,
            povm: DiscretePovm::new_unchecked(effects),
        }
    }

    /// The identity instrument `{I}`.
    pub fn trivial(dim: usize) -> Self {
        Self::new_unchecked(vec![vec![linalg::identity(dim)]])
    }

    /// Checks `Σ_k K†K = T_j` against a given POVM and the normalization.
    pub fn validate_against(&self, povm: &DiscretePovm, tol: f64) -> CheckReport {
        let mut r = CheckReport::new("instrument");
        r.tol = tol;
        r.require("outcome_count_matches", povm.len() == self.families.len());
        for (j, (fam, e)) in self.families.iter().zip(povm.effects()).enumerate() {
            let induced = induced_effect(fam);
            r.at_most(
                format!("kraus_effect_residual[{j}]"),
                linalg::op_norm(&(induced - e.matrix())),
                tol,
            );
        }
        r.absorb("povm", povm.validate(tol));
        r.info("efficient", if self.is_efficient() { 1.0 } else { 0.0 });
        r
    }

    pub fn validate(&self, tol: f64) -> CheckReport {
        self.validate_against(&self.povm, tol)
    }

    pub fn families(&self) -> &[Vec<CMat>] {
        &self.families
    }

    pub fn povm(&self) -> &DiscretePovm {
        &self.povm
    }

    pub fn dim(&self) -> usize {
        self.povm.dim()
    }

    pub fn len(&self) -> usize {
        self.families.len()
    }

    pub fn is_empty(&self) -> bool {
        self.families.is_empty()
    }

    pub fn is_efficient(&self) -> bool {
        self.families.iter().all(|f| f.len() == 1)
    }

    /// Single Kraus operator per outcome, or [`Error::NotEfficient`].
    pub fn efficient_operators(&self) -> Result<Vec<&CMat>> {
        self.families
            .iter()
            .enumerate()
            .map(|(j, f)| if f.len() == 1 { Ok(&f[0]) } else { Err(Error::NotEfficient(j)) })
            .collect()
    }

    /// Largest anti-Hermitian part among all Kraus operators.
    pub fn hermiticity_defect(&self) -> f64 {
        self.families
            .iter()
            .flatten()
            .map(linalg::hermiticity_defect)
            .fold(0.0, f64::max)
    }

    /// Dual (Heisenberg) map `X ↦ Σ_{jk} K†_{jk} X K_{jk}`.
    pub fn dual_apply(&self, x: &CMat) -> CMat {
        let mut out = linalg::zeros(x.nrows());
        for k in self.families.iter().flatten() {
            out += k.adjoint() * x * k;
        }
        out
    }

    /// Unnormalized post-measurement operator `Σ_k K_{jk} ρ K†_{jk}`.
    pub fn outcome_operation(&self, j: usize, rho: &CMat) -> Result<CMat> {
        let fam = self.families.get(j).ok_or(Error::NoSuchOutcome(j))?;
        let mut out = linalg::zeros(rho.nrows());
        for k in fam {
            out += linalg::sandwich(k, rho);
        }
        Ok(out)
    }
}

fn induced_effect(family: &[CMat]) -> CMat {
    let dim = family[0].nrows();
    family
        .iter()
        .fold(linalg::zeros(dim), |acc, k| acc + k.adjoint() * k)
}

/// Efficient instrument with `K_j = √T_j`.
pub fn luders_instrument(povm: &DiscretePovm) -> KrausInstrument {
    let families = povm.effects().iter().map(|e| vec![psd_sqrt(e)]).collect();
    KrausInstrument {
        families,
        povm: povm.clone(),
    }
}

/// `K = V √T`, valid when `V` acts isometrically on the range of `√T`.
pub fn polar_kraus(t: &Effect, v: &CMat, tol: f64) -> Result<CMat> {
    check_dim(t.dim(), v)?;
    let eig = HermitianEigen::new(t.matrix());
    let range = eig.spectral_projector(|x| x > tol);
    let defect = linalg::op_norm(&(&range * (v.adjoint() * v - linalg::identity(t.dim())) * &range));
    if defect > tol.max(1e-12) * 10.0 {
        return Err(Error::Invalid {
            what: "partial isometry",
            reason: format!("V†V differs from I on range(√T) by {defect:e}"),
        });
    }
    let root = eig.apply(|x| x.max(0.0).sqrt());
    Ok(v * root)
}

/// `(tr(ρ T_j), Σ_k K_{jk} ρ K†_{jk} / tr(ρ T_j))`.
pub fn selective_post_state(
    rho: &DensityState,
    instr: &KrausInstrument,
    j: usize,
    prob_floor: f64,
) -> Result<(f64, DensityState)> {
    check_dim(instr.dim(), rho.matrix())?;
    let effect = instr.povm().effects().get(j).ok_or(Error::NoSuchOutcome(j))?;
    let prob = rho.expectation(effect.matrix());
    if prob <= prob_floor {
        return Err(Error::ProbabilityBelowFloor {
            outcome: j,
            prob,
            floor: prob_floor,
        });
    }
    let post = instr.outcome_operation(j, rho.matrix())? / linalg::c(prob, 0.0);
    Ok((prob, DensityState(post)))
}

/// `ρ^T = Σ_{jk} K_{jk} ρ K†_{jk}`.
pub fn nonselective_post_state(rho: &DensityState, instr: &KrausInstrument) -> Result<DensityState> {
    check_dim(instr.dim(), rho.matrix())?;
    let mut out = linalg::zeros(rho.dim());
    for j in 0..instr.len() {
        out += instr.outcome_operation(j, rho.matrix())?;
    }
    Ok(DensityState(out))
}

/// Probability of outcome `j` of `first` followed by a click of
/// `second_effect`: `Σ_k tr(S K_{jk} ρ K†_{jk})`. Zero-probability outcomes
/// contribute zero (unnormalized sub-state convention).
pub fn sequential_joint_prob(
    rho: &DensityState,
    first: &KrausInstrument,
    j: usize,
    second_effect: &Effect,
) -> Result<f64> {
    check_dim(first.dim(), rho.matrix())?;
    check_dim(first.dim(), second_effect.matrix())?;
    let sub = first.outcome_operation(j, rho.matrix())?;
    Ok(linalg::trace_product_re(second_effect.matrix(), &sub))
}
