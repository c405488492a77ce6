//! JSON forms of matrices and measurement objects.
//!
//! A matrix is `{"dim": n, "re": [...], "im": [...]}` with row-major parts.
//! Floats are written in shortest round-trip form and parsed exactly, so a
//! write/read cycle reproduces every entry bit for bit.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::lattice::{LatticeLocalizationSystem, SystemKind};
use crate::linalg::{c, CMat};
use crate::quantum::{DensityState, DiscretePovm, Effect, KrausInstrument};
use crate::report::CheckReport;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<f64>,
    #[serde(default)]
    pub im: Option<Vec<f64>>,
}

pub fn encode(m: &CMat) -> MatrixJson {
    let (rows, cols) = m.shape();
    assert_eq!(rows, cols, "only square matrices are serialized");
    let mut re = Vec::with_capacity(rows * cols);
    let mut im = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            re.push(m[(i, j)].re);
            im.push(m[(i, j)].im);
        }
    }
    MatrixJson {
        dim: rows,
        re,
        im: Some(im),
    }
}

pub fn decode(j: &MatrixJson) -> Result<CMat> {
    let n = j.dim;
    let bad = |reason: String| Error::Invalid {
        what: "matrix",
        reason,
    };
    if n == 0 {
        return Err(bad("dim must be positive".into()));
    }
    if j.re.len() != n * n {
        return Err(bad(format!("re has {} entries, expected {}", j.re.len(), n * n)));
    }
    if let Some(im) = &j.im {
        if im.len() != j.re.len() {
            return Err(bad(format!(
                "re/im length mismatch: {} vs {}",
                j.re.len(),
                im.len()
            )));
        }
    }
    let im = |k: usize| j.im.as_ref().map_or(0.0, |v| v[k]);
    if j.re.iter().chain(j.im.iter().flatten()).any(|x| !x.is_finite()) {
        return Err(bad("non-finite entry".into()));
    }
    Ok(CMat::from_fn(n, n, |r, col| c(j.re[r * n + col], im(r * n + col))))
}

/// Square complex matrix in its JSON form.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix(pub CMat);

impl Serialize for Matrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        encode(&self.0).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = MatrixJson::deserialize(d)?;
        decode(&j).map(Matrix).map_err(D::Error::custom)
    }
}

impl From<CMat> for Matrix {
    fn from(m: CMat) -> Self {
        Matrix(m)
    }
}

impl From<&CMat> for Matrix {
    fn from(m: &CMat) -> Self {
        Matrix(m.clone())
    }
}

pub fn matrices(ms: &[CMat]) -> Vec<Matrix> {
    ms.iter().map(Matrix::from).collect()
}

pub fn unwrap_all(ms: &[Matrix]) -> Vec<CMat> {
    ms.iter().map(|m| m.0.clone()).collect()
}

pub fn to_json_string(m: &CMat) -> String {
    serde_json::to_string(&encode(m)).expect("finite matrix serializes")
}

pub fn from_json_str(s: &str) -> Result<CMat> {
    let j: MatrixJson = serde_json::from_str(s)?;
    decode(&j)
}

/// Tagged measurement object, as produced by `gen` and accepted by scenarios.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Object {
    State {
        matrix: Matrix,
    },
    Effect {
        matrix: Matrix,
    },
    Povm {
        effects: Vec<Matrix>,
    },
    #[serde(alias = "luders_instrument")]
    Instrument {
        kraus: Vec<Vec<Matrix>>,
    },
    CommutingPair {
        t: Vec<Matrix>,
        s: Vec<Matrix>,
    },
    LatticeSystem {
        n: usize,
        spacing: f64,
        mass: f64,
        system_kind: SystemKind,
        cell_effects: Vec<Matrix>,
        shift: Matrix,
        hamiltonian: Matrix,
    },
}

impl Object {
    pub fn kind(&self) -> &'static str {
        match self {
            Object::State { .. } => "state",
            Object::Effect { .. } => "effect",
            Object::Povm { .. } => "povm",
            Object::Instrument { .. } => "instrument",
            Object::CommutingPair { .. } => "commuting_pair",
            Object::LatticeSystem { .. } => "lattice_system",
        }
    }

    pub fn from_state(s: &DensityState) -> Self {
        Object::State {
            matrix: s.matrix().into(),
        }
    }

    pub fn from_effect(e: &Effect) -> Self {
        Object::Effect {
            matrix: e.matrix().into(),
        }
    }

    pub fn from_povm(p: &DiscretePovm) -> Self {
        Object::Povm {
            effects: p.effects().iter().map(|e| e.matrix().into()).collect(),
        }
    }

    pub fn from_instrument(i: &KrausInstrument) -> Self {
        Object::Instrument {
            kraus: i.families().iter().map(|f| matrices(f)).collect(),
        }
    }

    pub fn from_system(s: &LatticeLocalizationSystem) -> Self {
        Object::LatticeSystem {
            n: s.n(),
            spacing: s.spacing(),
            mass: s.mass(),
            system_kind: s.kind(),
            cell_effects: matrices(s.cell_effects()),
            shift: s.shift().into(),
            hamiltonian: s.hamiltonian().into(),
        }
    }

    /// Structural validation at `tol`.
    pub fn validate(&self, tol: f64) -> Result<CheckReport> {
        let mut r = match self {
            Object::State { matrix } => DensityState::validate_matrix(&matrix.0, tol),
            Object::Effect { matrix } => Effect::validate_matrix(&matrix.0, tol),
            Object::Povm { effects } => {
                DiscretePovm::validate_matrices(&unwrap_all(effects), tol, Default::default())
            }
            Object::Instrument { kraus } => {
                let fams: Vec<Vec<CMat>> = kraus.iter().map(|f| unwrap_all(f)).collect();
                KrausInstrument::new_unchecked(fams).validate(tol)
            }
            Object::CommutingPair { t, s } => {
                let mut r = CheckReport::new("commuting_pair");
                let pt = DiscretePovm::new_unchecked(unwrap_all(t));
                let ps = DiscretePovm::new_unchecked(unwrap_all(s));
                r.absorb("t", pt.validate(tol));
                r.absorb("s", ps.validate(tol));
                r.at_most("commutator_residual", crate::causality::commutator_residual(&pt, &ps)?, tol);
                r
            }
            Object::LatticeSystem { .. } => self.to_system(tol)?.validate(tol),
        };
        r.tol = tol;
        Ok(r)
    }

    pub fn to_system(&self, tol: f64) -> Result<LatticeLocalizationSystem> {
        match self {
            Object::LatticeSystem {
                n,
                spacing,
                mass,
                cell_effects,
                shift,
                hamiltonian,
                ..
            } => {
                if cell_effects.len() != *n {
                    return Err(Error::DimensionMismatch {
                        expected: *n,
                        got: cell_effects.len(),
                    });
                }
                LatticeLocalizationSystem::from_parts(
                    *spacing,
                    *mass,
                    unwrap_all(cell_effects),
                    shift.0.clone(),
                    hamiltonian.0.clone(),
                    tol,
                )
            }
            other => Err(Error::Input(format!("expected a lattice_system, got {}", other.kind()))),
        }
    }
}
