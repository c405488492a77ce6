//! Python bindings. Matrices cross the boundary as lists of rows of Python
//! complex numbers; reports come back as JSON strings.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use locpovm::conditional::{self, ConditionalPovm};
use locpovm::geometry::{self, FourVector, RegionUnion, SpacetimeBox};
use locpovm::lattice::{self, CellSet, LatticeLocalizationSystem};
use locpovm::linalg::{CMat, C64};
use locpovm::quantum::{luders_instrument, DensityState, DiscretePovm, Effect, KrausInstrument};
use locpovm::{causality, scenario, serial};

type Rows = Vec<Vec<C64>>;

fn err(e: locpovm::error::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_mat(rows: &Rows) -> PyResult<CMat> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("expected a non-empty square matrix"));
    }
    Ok(CMat::from_fn(n, n, |i, j| rows[i][j]))
}

fn to_rows(m: &CMat) -> Rows {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn mats(list: &[Rows]) -> PyResult<Vec<CMat>> {
    list.iter().map(to_mat).collect()
}

fn four(v: [f64; 4]) -> FourVector {
    FourVector::from(v)
}

fn region(boxes: Vec<([f64; 4], [f64; 4])>) -> PyResult<RegionUnion> {
    let boxes = boxes
        .into_iter()
        .map(|(lo, hi)| SpacetimeBox::new(four(lo), four(hi)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    RegionUnion::new(boxes, FourVector::new(1.0, 0.0, 0.0, 0.0)).map_err(err)
}

fn json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("serializable")
}

/// `‖Φ*(S) − S‖` for the instrument with Kraus families `kraus`.
#[pyfunction]
fn nsc_deviation(kraus: Vec<Vec<Rows>>, s: Rows) -> PyResult<f64> {
    let fams = kraus.iter().map(|f| mats(f)).collect::<PyResult<Vec<_>>>()?;
    let instr = KrausInstrument::new(fams).map_err(err)?;
    causality::nsc_deviation(&instr, &to_mat(&s)?).map_err(err)
}

/// Consistency deviation of the Lüders instruments of two POVMs.
#[pyfunction]
fn rcc_deviation(t: Vec<Rows>, s: Vec<Rows>) -> PyResult<f64> {
    let t = DiscretePovm::new(mats(&t)?).map_err(err)?;
    let s = DiscretePovm::new(mats(&s)?).map_err(err)?;
    causality::rcc_deviation(&luders_instrument(&t), &luders_instrument(&s)).map_err(err)
}

#[pyfunction]
fn commutator_residual(t: Vec<Rows>, s: Vec<Rows>) -> PyResult<f64> {
    let t = DiscretePovm::new(mats(&t)?).map_err(err)?;
    let s = DiscretePovm::new(mats(&s)?).map_err(err)?;
    causality::commutator_residual(&t, &s).map_err(err)
}

/// `(delta, lhs, rhs, margin)` of the gentle measurement bound.
#[pyfunction]
fn gentle_bound(t: Rows, rho: Rows) -> PyResult<(f64, f64, f64, f64)> {
    let t = Effect::new(to_mat(&t)?).map_err(err)?;
    let rho = DensityState::new(to_mat(&rho)?).map_err(err)?;
    let g = conditional::gentle_bound(&t, &rho).map_err(err)?;
    Ok((g.delta, g.lhs_trace_dist, g.rhs_bound, g.margin))
}

/// Regions are lists of `(lo, hi)` corners `[t, x, y, z]` in the rest frame.
#[pyfunction]
fn causally_separated(a: Vec<([f64; 4], [f64; 4])>, b: Vec<([f64; 4], [f64; 4])>) -> PyResult<bool> {
    geometry::causally_separated(&region(a)?, &region(b)?).map_err(err)
}

#[pyfunction]
fn lab_contains(p: [f64; 4], lo: [f64; 4], hi: [f64; 4]) -> PyResult<bool> {
    let b = SpacetimeBox::new(four(lo), four(hi)).map_err(err)?;
    geometry::lab_contains(four(p), &b).map_err(err)
}

/// `(kraus, S, d1, d2)` or `None` when the budget runs out.
#[pyfunction]
#[allow(clippy::type_complexity)]
fn heinosaari_wolf_search(dim: usize, seed: u64, budget: usize) -> Option<(Vec<Vec<Rows>>, Rows, f64, f64)> {
    causality::heinosaari_wolf_search(dim, seed, budget).witness.map(|w| {
        let kraus = w
            .instrument
            .families()
            .iter()
            .map(|f| f.iter().map(to_rows).collect())
            .collect();
        (kraus, to_rows(w.effect.matrix()), w.d1, w.d2)
    })
}

/// Seeded random object as JSON.
#[pyfunction]
fn generate(kind: &str, dim: usize, seed: u64) -> PyResult<String> {
    scenario::generate_instance(kind, dim, seed).map(|o| json(&o)).map_err(err)
}

/// Runs a scenario file given as text and returns the JSON report.
#[pyfunction]
#[pyo3(signature = (text, workers=None, seed=None, tol=None))]
fn run_scenarios(text: &str, workers: Option<usize>, seed: Option<u64>, tol: Option<f64>) -> PyResult<String> {
    let set = scenario::parse_scenarios(text, scenario::LoadOptions { seed, tol }).map_err(err)?;
    scenario::run_scenarios(&set, workers).map(|r| json(&r)).map_err(err)
}

#[pyfunction]
fn matrix_to_json(m: Rows) -> PyResult<String> {
    Ok(serial::to_json_string(&to_mat(&m)?))
}

#[pyfunction]
fn matrix_from_json(text: &str) -> PyResult<Rows> {
    serial::from_json_str(text).map(|m| to_rows(&m)).map_err(err)
}

#[pyclass(name = "LatticeSystem", frozen)]
struct PyLatticeSystem(LatticeLocalizationSystem);

#[pymethods]
impl PyLatticeSystem {
    #[staticmethod]
    #[pyo3(signature = (n, mass=1.0, spacing=1.0))]
    fn sharp(n: usize, mass: f64, spacing: f64) -> PyResult<Self> {
        LatticeLocalizationSystem::sharp(n, mass, spacing).map(Self).map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (n, mass=1.0, spacing=1.0, width=1.5))]
    fn frame_smeared(n: usize, mass: f64, spacing: f64, width: f64) -> PyResult<Self> {
        LatticeLocalizationSystem::frame_smeared(n, mass, spacing, width)
            .map(Self)
            .map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (n, mass=1.0, spacing=1.0, width=1.5))]
    fn diagonal_smeared(n: usize, mass: f64, spacing: f64, width: f64) -> PyResult<Self> {
        LatticeLocalizationSystem::diagonal_smeared(n, mass, spacing, width)
            .map(Self)
            .map_err(err)
    }

    fn sign_alternating(&self) -> Self {
        Self(self.0.with_sign_alternating_spectrum())
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn min_energy(&self) -> f64 {
        self.0.min_energy()
    }

    fn effect(&self, cells: Vec<usize>) -> PyResult<Rows> {
        self.0.effect_of(&CellSet::new(cells)).map(|m| to_rows(&m)).map_err(err)
    }

    /// `(max residual, time)` over the given times.
    fn microcausality_residual(&self, delta: Vec<usize>, delta_prime: Vec<usize>, times: Vec<f64>) -> PyResult<(f64, f64)> {
        lattice::microcausality_residual(&self.0, &CellSet::new(delta), &CellSet::new(delta_prime), &times)
            .map_err(err)
    }

    /// `(value, saturated)`.
    fn cc_residual(&self, delta: Vec<usize>, t: f64) -> PyResult<(f64, bool)> {
        lattice::cc_residual(&self.0, &CellSet::new(delta), t)
            .map(|c| (c.value, c.saturated))
            .map_err(err)
    }

    #[pyo3(signature = (samples, times, tol=1e-10))]
    fn hc_audit(&self, samples: Vec<Vec<usize>>, times: Vec<f64>, tol: f64) -> PyResult<String> {
        let samples: Vec<CellSet> = samples.into_iter().map(CellSet::new).collect();
        lattice::hc_audit(&self.0, &samples, &times, tol)
            .map(|r| json(&r))
            .map_err(err)
    }

    fn conditional(&self, lab: Vec<usize>) -> PyResult<PyConditional> {
        conditional::build_conditional(&self.0, &CellSet::new(lab), None)
            .map(PyConditional)
            .map_err(err)
    }
}

#[pyclass(name = "ConditionalPovm", frozen)]
struct PyConditional(ConditionalPovm);

#[pymethods]
impl PyConditional {
    fn effect(&self, cells: Vec<usize>) -> PyResult<Rows> {
        self.0.effect(&CellSet::new(cells)).map(|m| to_rows(&m)).map_err(err)
    }

    #[getter]
    fn kernel_min_eig(&self) -> f64 {
        self.0.kernel_min_eig()
    }

    /// JSON report of normalization, additivity and effect bounds.
    #[pyo3(signature = (tol=1e-10))]
    fn validate(&self, tol: f64) -> PyResult<String> {
        self.0.validate(tol).map(|r| json(&r)).map_err(err)
    }
}

#[pymodule]
fn locpovm_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", scenario::VERSION)?;
    m.add_function(wrap_pyfunction!(nsc_deviation, m)?)?;
    m.add_function(wrap_pyfunction!(rcc_deviation, m)?)?;
    m.add_function(wrap_pyfunction!(commutator_residual, m)?)?;
    m.add_function(wrap_pyfunction!(gentle_bound, m)?)?;
    m.add_function(wrap_pyfunction!(causally_separated, m)?)?;
    m.add_function(wrap_pyfunction!(lab_contains, m)?)?;
    m.add_function(wrap_pyfunction!(heinosaari_wolf_search, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenarios, m)?)?;
    m.add_function(wrap_pyfunction!(matrix_to_json, m)?)?;
    m.add_function(wrap_pyfunction!(matrix_from_json, m)?)?;
    m.add_class::<PyLatticeSystem>()?;
    m.add_class::<PyConditional>()?;
    Ok(())
}
