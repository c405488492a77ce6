//! Dense complex matrix kernels.
//!
//! Every functional-calculus operation on Hermitian matrices (square roots,
//! inverse square roots, unitary evolution, spectral projections) goes
//! through [`HermitianEigen`], so there is a single eigensolver path to trust.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

/// Complex scalar used throughout the crate.
pub type C64 = Complex64;

/// Dense square complex matrix.
pub type CMat = DMatrix<C64>;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(dim: usize) -> CMat {
    CMat::identity(dim, dim)
}

pub fn zeros(dim: usize) -> CMat {
    CMat::zeros(dim, dim)
}

/// Real diagonal matrix.
pub fn diag(values: &[f64]) -> CMat {
    CMat::from_diagonal(&DVector::from_iterator(
        values.len(),
        values.iter().map(|&v| c(v, 0.0)),
    ))
}

/// Builds a matrix from row-major real parts.
pub fn from_real_rows(dim: usize, rows: &[f64]) -> CMat {
    CMat::from_row_iterator(dim, dim, rows.iter().map(|&v| c(v, 0.0)))
}

/// Rank-one projector |ψ⟩⟨ψ| (ψ is not normalized here).
pub fn ket_bra(psi: &DVector<C64>) -> CMat {
    psi * psi.adjoint()
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// `a X a†`.
pub fn sandwich(a: &CMat, x: &CMat) -> CMat {
    a * x * a.adjoint()
}

pub fn trace(m: &CMat) -> C64 {
    m.diagonal().iter().sum()
}

/// Real part of `tr(a b)` without forming the product.
pub fn trace_product_re(a: &CMat, b: &CMat) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for k in 0..n {
            acc += (a[(i, k)] * b[(k, i)]).re;
        }
    }
    acc
}

/// `‖M − M†‖_op`, the Hermiticity defect.
pub fn hermiticity_defect(m: &CMat) -> f64 {
    op_norm(&(m - m.adjoint()))
}

/// `(M + M†)/2`.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * c(0.5, 0.0)
}

/// Largest singular value.
pub fn op_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .singular_values()
        .iter()
        .fold(0.0_f64, |acc, &s| acc.max(s))
}

/// Sum of singular values.
pub fn trace_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().iter().sum()
}

/// Largest absolute entry.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// Eigendecomposition of a Hermitian matrix with ascending eigenvalues.
///
/// The input is symmetrized before decomposition; callers that care about
/// the size of the anti-Hermitian part must check it separately.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector for `values[k]`.
    pub vectors: CMat,
}

impl HermitianEigen {
    pub fn new(m: &CMat) -> Self {
        let sym = hermitian_part(m);
        let eig = SymmetricEigen::new(sym);
        let n = eig.eigenvalues.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut vectors = CMat::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            vectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        Self { values, vectors }
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// `V f(Λ) V†` for a real spectral function.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> CMat {
        self.apply_complex(|x| c(f(x), 0.0))
    }

    /// `V f(Λ) V†` for a complex spectral function.
    pub fn apply_complex(&self, f: impl Fn(f64) -> C64) -> CMat {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (k, &lam) in self.values.iter().enumerate() {
            let fk = f(lam);
            for i in 0..n {
                scaled[(i, k)] *= fk;
            }
        }
        scaled * self.vectors.adjoint()
    }

    /// Projector onto the span of eigenvectors whose eigenvalue satisfies `keep`.
    pub fn spectral_projector(&self, keep: impl Fn(f64) -> bool) -> CMat {
        self.apply(|x| if keep(x) { 1.0 } else { 0.0 })
    }
}

/// Hermitian PSD square root; negative eigenvalues are clamped to zero.
pub fn sqrt_psd(m: &CMat) -> CMat {
    HermitianEigen::new(m).apply(|x| x.max(0.0).sqrt())
}

/// `M^{-1/2}` for a positive definite Hermitian matrix, or `None` when the
/// smallest eigenvalue is not above `floor`.
pub fn inv_sqrt_pd(m: &CMat, floor: f64) -> Option<CMat> {
    let eig = HermitianEigen::new(m);
    if eig.min() <= floor {
        return None;
    }
    Some(eig.apply(|x| 1.0 / x.sqrt()))
}

/// `e^{-i t H}` for Hermitian `H`.
pub fn evolution(h: &HermitianEigen, t: f64) -> CMat {
    h.apply_complex(|e| C64::from_polar(1.0, -t * e))
}

/// Heisenberg-type conjugation `e^{-itH} A e^{itH}`.
pub fn evolve_conj(h: &HermitianEigen, a: &CMat, t: f64) -> CMat {
    if t == 0.0 {
        return a.clone();
    }
    let u = evolution(h, t);
    sandwich(&u, a)
}

/// `‖U†U − I‖_op`.
pub fn unitarity_defect(u: &CMat) -> f64 {
    op_norm(&(u.adjoint() * u - identity(u.nrows())))
}

/// Vectorization (column-major) of the linear map `X ↦ A X B`.
pub fn superop_left_right(a: &CMat, b: &CMat) -> CMat {
    b.transpose().kronecker(a)
}

/// Unstacks a column-major vectorized `dim×dim` matrix.
pub fn unvec(v: &DVector<C64>, dim: usize) -> CMat {
    CMat::from_column_slice(dim, dim, v.as_slice())
}
