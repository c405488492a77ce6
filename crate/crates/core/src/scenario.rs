//! Scenario files: parsing, dispatch across every check and report emission.
//!
//! A scenario file is either a JSON array of scenarios or an object
//! `{"seed": s, "tol": x, "scenarios": [...]}`. Each scenario carries
//! `type`, optional `name`, `seed`, `tol`, `repeat`, and the check's own
//! parameters at the same level.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::causality::{self, HW_D1_MAX, HW_D2_MIN};
use crate::conditional::{self, GENTLE_SLACK};
use crate::error::{Error, Result};
use crate::geometry::{self, FourVector, RegionUnion, SpacetimeBox, DEFAULT_LIGHTCONE_TOL};
use crate::lattice::{self, CellSet, LatticeLocalizationSystem, SystemKind};
use crate::linalg::{self, CMat};
use crate::quantum::{luders_instrument, DensityState, DiscretePovm, Effect, KrausInstrument};
use crate::random::{self, derive_seed, rng_from, SeededRng};
use crate::report::{CheckReport, Verdict};
use crate::serial::{unwrap_all, Matrix, Object};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckType {
    Validate,
    Geometry,
    Nsc,
    Rcc,
    LudersEquivalence,
    Beck,
    HwSearch,
    HcAudit,
    Microcausality,
    Cc,
    AppendixA,
    ConditionalBuild,
    GentleSweep,
    ConditionalBound,
    Composition,
    CrossLabCommutator,
    VConjugation,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    /// Objects built in a common Haar-random eigenbasis.
    Commuting,
    #[default]
    Random,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spectrum {
    #[default]
    Positive,
    SignAlternating,
    Zero,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    #[serde(default = "default_kind")]
    pub kind: SystemKind,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "one")]
    pub mass: f64,
    #[serde(default = "one")]
    pub spacing: f64,
    #[serde(default = "default_width")]
    pub width: f64,
    #[serde(default)]
    pub spectrum: Spectrum,
}

fn default_kind() -> SystemKind {
    SystemKind::FrameSmeared
}
fn default_n() -> usize {
    16
}
fn one() -> f64 {
    1.0
}
fn default_width() -> f64 {
    1.5
}

impl Default for SystemSpec {
    fn default() -> Self {
        Self {
            kind: default_kind(),
            n: default_n(),
            mass: 1.0,
            spacing: 1.0,
            width: default_width(),
            spectrum: Spectrum::Positive,
        }
    }
}

impl SystemSpec {
    pub fn build(&self) -> Result<LatticeLocalizationSystem> {
        let sys = match self.kind {
            SystemKind::Sharp => LatticeLocalizationSystem::sharp(self.n, self.mass, self.spacing)?,
            SystemKind::FrameSmeared => {
                LatticeLocalizationSystem::frame_smeared(self.n, self.mass, self.spacing, self.width)?
            }
            SystemKind::DiagonalSmeared => {
                LatticeLocalizationSystem::diagonal_smeared(self.n, self.mass, self.spacing, self.width)?
            }
            SystemKind::Custom => {
                return Err(Error::Input("custom systems are given as lattice_system objects".into()))
            }
        };
        Ok(match self.spectrum {
            Spectrum::Positive => sys,
            Spectrum::SignAlternating => sys.with_sign_alternating_spectrum(),
            Spectrum::Zero => sys.with_hamiltonian(linalg::zeros(self.n)),
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conjugator {
    #[default]
    Identity,
    Shift,
    Haar,
    Matrix(Matrix),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    Holds,
    Violated,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureExpectation {
    Positive,
    Zero,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateSpec {
    #[default]
    Localized,
    MaximallyMixed,
    Matrix(Matrix),
}

type Families = Vec<Vec<Matrix>>;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateParams {
    pub object: Object,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryParams {
    pub a: RegionUnion,
    pub b: RegionUnion,
    #[serde(default)]
    pub light_cone_tol: Option<f64>,
    #[serde(default)]
    pub expect_separated: Option<bool>,
    #[serde(default)]
    pub points: Vec<FourVector>,
    #[serde(default)]
    pub lab: Option<SpacetimeBox>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NscParams {
    #[serde(default)]
    pub instrument: Option<Families>,
    #[serde(default)]
    pub effect: Option<Matrix>,
    #[serde(default = "three")]
    pub dim: usize,
    #[serde(default = "two")]
    pub outcomes: usize,
    #[serde(default = "one_usize")]
    pub kraus_per_outcome: usize,
    #[serde(default)]
    pub generator: Generator,
    #[serde(default)]
    pub max_deviation: Option<f64>,
    #[serde(default)]
    pub min_deviation: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RccParams {
    #[serde(default)]
    pub first: Option<Vec<Matrix>>,
    #[serde(default)]
    pub second: Option<Vec<Matrix>>,
    #[serde(default = "two")]
    pub dim: usize,
    #[serde(default = "two")]
    pub outcomes: usize,
    #[serde(default)]
    pub generator: Generator,
    #[serde(default)]
    pub max_deviation: Option<f64>,
    #[serde(default)]
    pub min_deviation: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LudersParams {
    #[serde(default)]
    pub t: Option<Vec<Matrix>>,
    #[serde(default)]
    pub s: Option<Vec<Matrix>>,
    #[serde(default = "three")]
    pub dim: usize,
    #[serde(default = "two")]
    pub outcomes_t: usize,
    #[serde(default = "two")]
    pub outcomes_s: usize,
    #[serde(default)]
    pub generator: Generator,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeckParams {
    #[serde(default)]
    pub instrument: Option<Families>,
    #[serde(default)]
    pub effect: Option<Matrix>,
    #[serde(default = "three")]
    pub dim: usize,
    #[serde(default = "two")]
    pub outcomes: usize,
    #[serde(default = "two")]
    pub kraus_per_outcome: usize,
    #[serde(default)]
    pub generator: Generator,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HwParams {
    #[serde(default = "three")]
    pub dim: usize,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default = "yes")]
    pub require_witness: bool,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HcAuditParams {
    #[serde(default = "sharp_system")]
    pub system: SystemSpec,
    #[serde(default)]
    pub samples: Option<Vec<CellSet>>,
    #[serde(default = "default_times")]
    pub times: Vec<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MicrocausalityParams {
    #[serde(default = "sharp_system")]
    pub system: SystemSpec,
    pub delta: CellSet,
    pub delta_prime: CellSet,
    #[serde(default = "default_times")]
    pub times: Vec<f64>,
    #[serde(default)]
    pub min_residual: Option<f64>,
    #[serde(default)]
    pub max_residual: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CcParams {
    #[serde(default = "sharp_system")]
    pub system: SystemSpec,
    pub delta: CellSet,
    pub t: f64,
    #[serde(default)]
    pub expect: Option<Expectation>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppendixParams {
    #[serde(default)]
    pub p: Option<Matrix>,
    #[serde(default)]
    pub q: Option<Matrix>,
    #[serde(default)]
    pub r: Option<Matrix>,
    #[serde(default = "four")]
    pub dim: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionalBuildParams {
    #[serde(default)]
    pub system: SystemSpec,
    pub lab: CellSet,
    #[serde(default)]
    pub conjugator: Conjugator,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GentleParams {
    #[serde(default = "default_instances")]
    pub instances: usize,
    #[serde(default = "default_dims")]
    pub dims: [usize; 2],
    #[serde(default = "default_near_singular")]
    pub near_singular_fraction: f64,
    #[serde(default)]
    pub t: Option<Matrix>,
    #[serde(default)]
    pub rho: Option<Matrix>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionalBoundParams {
    #[serde(default)]
    pub system: SystemSpec,
    pub lab: CellSet,
    pub delta: CellSet,
    #[serde(default)]
    pub state: StateSpec,
    #[serde(default = "default_target")]
    pub target_delta: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompositionParams {
    #[serde(default)]
    pub system: SystemSpec,
    pub lab: CellSet,
    pub lab_prime: CellSet,
    #[serde(default)]
    pub expect_failure: Option<FailureExpectation>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossLabParams {
    #[serde(default)]
    pub system: SystemSpec,
    #[serde(default)]
    pub system_b: Option<SystemSpec>,
    pub lab: CellSet,
    pub delta: CellSet,
    pub lab_prime: CellSet,
    pub delta_prime: CellSet,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VConjugationParams {
    #[serde(default)]
    pub system: SystemSpec,
    pub lab: CellSet,
    #[serde(default = "haar")]
    pub conjugator: Conjugator,
}

fn one_usize() -> usize {
    1
}
fn two() -> usize {
    2
}
fn three() -> usize {
    3
}
fn four() -> usize {
    4
}
fn yes() -> bool {
    true
}
fn default_budget() -> usize {
    100_000
}
fn default_times() -> Vec<f64> {
    vec![0.05, 0.1, 0.5, 1.0, 2.0]
}
fn default_instances() -> usize {
    10_000
}
fn default_dims() -> [usize; 2] {
    [2, 8]
}
fn default_near_singular() -> f64 {
    0.25
}
fn default_target() -> f64 {
    0.01
}
fn haar() -> Conjugator {
    Conjugator::Haar
}
fn sharp_system() -> SystemSpec {
    SystemSpec {
        kind: SystemKind::Sharp,
        ..SystemSpec::default()
    }
}

#[derive(Clone, Debug)]
pub enum Params {
    Validate(ValidateParams),
    Geometry(GeometryParams),
    Nsc(NscParams),
    Rcc(RccParams),
    LudersEquivalence(LudersParams),
    Beck(BeckParams),
    HwSearch(HwParams),
    HcAudit(HcAuditParams),
    Microcausality(MicrocausalityParams),
    Cc(CcParams),
    AppendixA(AppendixParams),
    ConditionalBuild(ConditionalBuildParams),
    GentleSweep(GentleParams),
    ConditionalBound(ConditionalBoundParams),
    Composition(CompositionParams),
    CrossLabCommutator(CrossLabParams),
    VConjugation(VConjugationParams),
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub index: usize,
    pub name: String,
    pub kind: CheckType,
    pub seed: u64,
    pub tol: f64,
    pub repeat: u32,
    pub params: Params,
    pub echo: Value,
}

#[derive(Clone, Debug)]
pub struct ScenarioSet {
    pub seed: u64,
    pub scenarios: Vec<Scenario>,
}

#[derive(Deserialize)]
struct Header {
    #[serde(rename = "type")]
    kind: CheckType,
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    tol: Option<f64>,
    #[serde(default)]
    repeat: Option<u32>,
    #[serde(flatten)]
    params: Map<String, Value>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FileHeader {
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    tol: Option<f64>,
    scenarios: Vec<Value>,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct LoadOptions {
    /// Overrides the file-level master seed.
    pub seed: Option<u64>,
    /// Overrides the file-level default tolerance.
    pub tol: Option<f64>,
}

fn pointer(prefix: &str, path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = prefix.to_string();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{}", key.replace('~', "~0").replace('/', "~1"))),
            Segment::Enum { variant } => out.push_str(&format!("/{variant}")),
            Segment::Unknown => {}
        }
    }
    if out.is_empty() {
        "/".into()
    } else {
        out
    }
}

fn parse_at<T: DeserializeOwned>(v: Value, prefix: &str) -> Result<T> {
    serde_path_to_error::deserialize(v).map_err(|e| {
        let at = pointer(prefix, e.path());
        Error::Input(format!("{at}: {}", e.into_inner()))
    })
}

fn parse_params(kind: CheckType, v: Value, at: &str) -> Result<Params> {
    Ok(match kind {
        CheckType::Validate => Params::Validate(parse_at(v, at)?),
        CheckType::Geometry => Params::Geometry(parse_at(v, at)?),
        CheckType::Nsc => Params::Nsc(parse_at(v, at)?),
        CheckType::Rcc => Params::Rcc(parse_at(v, at)?),
        CheckType::LudersEquivalence => Params::LudersEquivalence(parse_at(v, at)?),
        CheckType::Beck => Params::Beck(parse_at(v, at)?),
        CheckType::HwSearch => Params::HwSearch(parse_at(v, at)?),
        CheckType::HcAudit => Params::HcAudit(parse_at(v, at)?),
        CheckType::Microcausality => Params::Microcausality(parse_at(v, at)?),
        CheckType::Cc => Params::Cc(parse_at(v, at)?),
        CheckType::AppendixA => Params::AppendixA(parse_at(v, at)?),
        CheckType::ConditionalBuild => Params::ConditionalBuild(parse_at(v, at)?),
        CheckType::GentleSweep => Params::GentleSweep(parse_at(v, at)?),
        CheckType::ConditionalBound => Params::ConditionalBound(parse_at(v, at)?),
        CheckType::Composition => Params::Composition(parse_at(v, at)?),
        CheckType::CrossLabCommutator => Params::CrossLabCommutator(parse_at(v, at)?),
        CheckType::VConjugation => Params::VConjugation(parse_at(v, at)?),
    })
}

/// Parses and validates a scenario file. Every failure is an input error
/// naming the JSON pointer of the offending value.
pub fn parse_scenarios(text: &str, opts: LoadOptions) -> Result<ScenarioSet> {
    let root: Value = serde_json::from_str(text).map_err(|e| Error::Input(format!("/: {e}")))?;
    let (file_seed, file_tol, items, prefix) = match root {
        Value::Array(items) => (None, None, items, String::new()),
        obj @ Value::Object(_) => {
            let h: FileHeader = parse_at(obj, "")?;
            (h.seed, h.tol, h.scenarios, "/scenarios".to_string())
        }
        _ => return Err(Error::Input("/: expected an array or an object with \"scenarios\"".into())),
    };
    let master = opts.seed.or(file_seed).unwrap_or(0);
    let default_tol = opts.tol.or(file_tol).unwrap_or(DEFAULT_TOL);
    if !(default_tol > 0.0 && default_tol.is_finite()) {
        return Err(Error::Input(format!("/tol: must be positive, got {default_tol}")));
    }
    let mut scenarios = Vec::with_capacity(items.len());
    for (index, item) in items.into_iter().enumerate() {
        let at = format!("{prefix}/{index}");
        let h: Header = parse_at(item.clone(), &at)?;
        let tol = h.tol.unwrap_or(default_tol);
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Error::Input(format!("{at}/tol: must be positive, got {tol}")));
        }
        let repeat = h.repeat.unwrap_or(1);
        if repeat == 0 {
            return Err(Error::Input(format!("{at}/repeat: must be at least 1")));
        }
        let params = parse_params(h.kind, Value::Object(h.params), &at)?;
        let type_name = serde_json::to_value(h.kind)?.as_str().unwrap_or("").to_string();
        scenarios.push(Scenario {
            index,
            name: h.name.unwrap_or_else(|| format!("{index}:{type_name}")),
            kind: h.kind,
            seed: h.seed.unwrap_or_else(|| derive_seed(master, &[index as u64])),
            tol,
            repeat,
            params,
            echo: item,
        });
    }
    Ok(ScenarioSet { seed: master, scenarios })
}

fn families(f: &Families) -> Vec<Vec<CMat>> {
    f.iter().map(|x| unwrap_all(x)).collect()
}

fn conjugator(c: &Conjugator, sys: &LatticeLocalizationSystem, rng: &mut SeededRng) -> CMat {
    match c {
        Conjugator::Identity => linalg::identity(sys.n()),
        Conjugator::Shift => sys.shift().clone(),
        Conjugator::Haar => random::haar_unitary(sys.n(), rng),
        Conjugator::Matrix(m) => m.0.clone(),
    }
}

fn bounded(r: &mut CheckReport, name: &str, value: f64, max: Option<f64>, min: Option<f64>) {
    match (max, min) {
        (None, None) => r.info(name, value),
        (max, min) => {
            if let Some(m) = max {
                r.at_most(name, value, m);
            }
            if let Some(m) = min {
                r.at_least(format!("{name}.lower"), value, m);
            }
        }
    }
}

fn default_samples(n: usize) -> Vec<CellSet> {
    let mut out: Vec<CellSet> = (0..n).map(|k| CellSet::new([k])).collect();
    for len in [2, n / 4] {
        if len >= 2 {
            out.push(CellSet::interval(0, len, n));
            out.push(CellSet::interval(n / 2, len, n));
        }
    }
    out
}

fn gentle_instance(rng: &mut SeededRng, dims: [usize; 2], near_singular: f64) -> (Effect, DensityState) {
    use rand::Rng;
    let dim = rng.random_range(dims[0]..=dims[1]);
    let u = random::haar_unitary(dim, rng);
    let singular = rng.random::<f64>() < near_singular;
    let lam: Vec<f64> = (0..dim)
        .map(|_| {
            if singular && rng.random::<f64>() < 0.5 {
                1e-9 * rng.random::<f64>()
            } else {
                rng.random::<f64>()
            }
        })
        .collect();
    let t = Effect::new_unchecked(linalg::hermitian_part(&linalg::sandwich(&u, &linalg::diag(&lam))));
    let rho = if rng.random::<bool>() {
        random::random_state(dim, rng)
    } else {
        random::random_pure_state(dim, rng)
    };
    (t, rho)
}

fn gentle_sweep(p: &GentleParams, seed: u64, rep: u32, tol: f64) -> Result<CheckReport> {
    let mut r = CheckReport::new("gentle_sweep");
    r.tol = tol;
    if let (Some(t), Some(rho)) = (&p.t, &p.rho) {
        let g = conditional::gentle_bound(&Effect::new_unchecked(t.0.clone()), &DensityState::new_unchecked(rho.0.clone()))?;
        r.info("delta", g.delta);
        r.info("lhs", g.lhs_trace_dist);
        r.info("rhs", g.rhs_bound);
        r.at_least("margin", g.margin, -GENTLE_SLACK);
        return Ok(r);
    }
    if p.dims[0] < 1 || p.dims[0] > p.dims[1] {
        return Err(Error::Input(format!("dims must be an increasing range, got {:?}", p.dims)));
    }
    let results: Vec<Option<(f64, f64, f64, f64)>> = (0..p.instances)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from(seed, &[rep as u64, i as u64]);
            let (t, rho) = gentle_instance(&mut rng, p.dims, p.near_singular_fraction);
            conditional::gentle_bound(&t, &rho)
                .ok()
                .map(|g| (g.margin, g.delta, g.lhs_trace_dist, g.rhs_bound))
        })
        .collect();
    let mut worst: Option<(usize, (f64, f64, f64, f64))> = None;
    let mut violations = 0usize;
    let mut skipped = 0usize;
    let mut max_delta = 0.0_f64;
    for (i, res) in results.iter().enumerate() {
        match res {
            None => skipped += 1,
            Some(v) => {
                if v.0 < -GENTLE_SLACK {
                    violations += 1;
                }
                max_delta = max_delta.max(v.1);
                if worst.is_none_or(|(_, w)| v.0 < w.0) {
                    worst = Some((i, *v));
                }
            }
        }
    }
    r.info("instances", p.instances as f64);
    r.info("skipped_zero_weight", skipped as f64);
    r.info("max_delta", max_delta);
    r.at_most("violations", violations as f64, 0.0);
    if let Some((i, (m, d, l, h))) = worst {
        r.at_least("min_margin", m, -GENTLE_SLACK);
        r.witness(
            "tightest",
            serde_json::json!({"instance": i, "delta": d, "lhs": l, "rhs": h, "margin": m}),
        );
    }
    Ok(r)
}

fn run_once(sc: &Scenario, rep: u32) -> Result<CheckReport> {
    let tol = sc.tol;
    let mut rng = rng_from(sc.seed, &[rep as u64]);
    let mut r = match &sc.params {
        Params::Validate(p) => p.object.validate(tol)?,
        Params::Geometry(p) => {
            let lc = p.light_cone_tol.unwrap_or(DEFAULT_LIGHTCONE_TOL);
            let sep = geometry::causally_separated_with_tol(&p.a, &p.b, lc)?;
            let mut r = CheckReport::new("geometry");
            r.witness("causally_separated", sep);
            if let Ok(d) = geometry::region_spatial_distance(&p.a, &p.b) {
                r.info("spatial_distance", d);
            }
            if let Some(e) = p.expect_separated {
                r.require("separation_matches", sep == e);
            }
            if let Some(lab) = &p.lab {
                let inside = p
                    .points
                    .iter()
                    .map(|q| geometry::lab_contains(*q, lab))
                    .collect::<Result<Vec<bool>>>()?;
                r.witness("lab_contains", inside);
            }
            r
        }
        Params::Nsc(p) => {
            let (instr, s) = match (&p.instrument, &p.effect) {
                (Some(i), Some(e)) => (
                    KrausInstrument::with_tol(families(i), tol.max(1e-9))?,
                    e.0.clone(),
                ),
                _ => match p.generator {
                    Generator::Commuting => {
                        let (i, e) = random::commuting_instrument(p.dim, p.outcomes, p.kraus_per_outcome, &mut rng);
                        (i, e.into_matrix())
                    }
                    Generator::Random => {
                        let i = random::random_instrument(p.dim, p.outcomes, p.kraus_per_outcome, &mut rng);
                        (i, random::random_effect(p.dim, &mut rng).into_matrix())
                    }
                },
            };
            let mut r = CheckReport::new("nsc");
            bounded(&mut r, "nsc_dev", causality::nsc_deviation(&instr, &s)?, p.max_deviation, p.min_deviation);
            r.info("kraus_commutator_residual", causality::kraus_commutator_residual(&instr, &s)?);
            r
        }
        Params::Rcc(p) => {
            let (first, second) = match (&p.first, &p.second) {
                (Some(a), Some(b)) => (
                    KrausInstrument::with_tol(a.iter().map(|m| vec![m.0.clone()]).collect(), tol.max(1e-9))?,
                    KrausInstrument::with_tol(b.iter().map(|m| vec![m.0.clone()]).collect(), tol.max(1e-9))?,
                ),
                _ => {
                    let (t, s) = match p.generator {
                        Generator::Commuting => random::commuting_pair(p.dim, p.outcomes, p.outcomes, &mut rng),
                        Generator::Random => (
                            random::random_povm(p.dim, p.outcomes, &mut rng),
                            random::random_povm(p.dim, p.outcomes, &mut rng),
                        ),
                    };
                    (luders_instrument(&t), luders_instrument(&s))
                }
            };
            let mut r = causality::rcc_check(&first, &second, tol)?.to_check_report("rcc");
            if p.max_deviation.is_some() || p.min_deviation.is_some() {
                let v = causality::rcc_deviation(&first, &second)?;
                bounded(&mut r, "rcc_dev_bound", v, p.max_deviation, p.min_deviation);
            }
            r
        }
        Params::LudersEquivalence(p) => {
            let (t, s) = match (&p.t, &p.s) {
                (Some(t), Some(s)) => (
                    DiscretePovm::with_options(unwrap_all(t), None, tol.max(1e-9), Default::default())?,
                    DiscretePovm::with_options(unwrap_all(s), None, tol.max(1e-9), Default::default())?,
                ),
                _ => match p.generator {
                    Generator::Commuting => random::commuting_pair(p.dim, p.outcomes_t, p.outcomes_s, &mut rng),
                    Generator::Random => (
                        random::random_povm(p.dim, p.outcomes_t, &mut rng),
                        random::random_povm(p.dim, p.outcomes_s, &mut rng),
                    ),
                },
            };
            causality::luders_equivalence_check(&t, &s, tol)?.to_check_report("luders_equivalence")
        }
        Params::Beck(p) => {
            let (instr, s) = match (&p.instrument, &p.effect) {
                (Some(i), Some(e)) => (
                    KrausInstrument::with_tol(families(i), tol.max(1e-9))?,
                    Effect::with_tol(e.0.clone(), tol.max(1e-9))?,
                ),
                _ => match p.generator {
                    Generator::Commuting => random::commuting_instrument(p.dim, p.outcomes, p.kraus_per_outcome, &mut rng),
                    Generator::Random => (
                        random::random_instrument(p.dim, p.outcomes, p.kraus_per_outcome, &mut rng),
                        random::random_effect(p.dim, &mut rng),
                    ),
                },
            };
            causality::beck_check(&instr, &s, tol)?.to_check_report("beck")
        }
        Params::HwSearch(p) => {
            let seed = derive_seed(sc.seed, &[rep as u64]);
            let out = causality::heinosaari_wolf_search(p.dim, seed, p.budget);
            let mut r = CheckReport::new("hw_search");
            r.info("evaluations", out.evaluations as f64);
            r.info("restarts", out.restarts as f64);
            match &out.witness {
                Some(w) => {
                    r.at_most("d1", w.d1, HW_D1_MAX);
                    r.at_least("d2", w.d2, HW_D2_MIN);
                    r.require("reverified", causality::hw_verify(&w.instrument, &w.effect)?.is_some());
                    r.witness("instrument", Object::from_instrument(&w.instrument));
                    r.witness("effect", Object::from_effect(&w.effect));
                    r.witness("restart", w.restart);
                }
                None => {
                    r.note("NOT_FOUND: increase the budget");
                    if p.require_witness {
                        r.require("witness_found", false);
                    }
                }
            }
            r
        }
        Params::HcAudit(p) => {
            let sys = p.system.build()?;
            let samples = p.samples.clone().unwrap_or_else(|| default_samples(sys.n()));
            lattice::hc_audit(&sys, &samples, &p.times, tol)?.to_check_report()
        }
        Params::Microcausality(p) => {
            let sys = p.system.build()?;
            let (v, t) = lattice::microcausality_residual(&sys, &p.delta, &p.delta_prime, &p.times)?;
            let mut r = CheckReport::new("microcausality");
            bounded(&mut r, "microcausality_residual", v, p.max_residual, p.min_residual);
            r.witness("t", t);
            r
        }
        Params::Cc(p) => {
            let sys = p.system.build()?;
            let cc = lattice::cc_residual(&sys, &p.delta, p.t)?;
            let mut r = CheckReport::new("cc");
            match p.expect {
                None => r.info("cc_residual", cc.value),
                Some(Expectation::Holds) => {
                    r.at_least("cc_residual", cc.value, -tol);
                }
                Some(Expectation::Violated) => {
                    r.at_most("cc_residual", cc.value, -tol);
                }
            }
            r.witness("shadow", &cc.shadow);
            if cc.saturated {
                r.note("SATURATED: causal shadow covers the lattice; compared against I");
            }
            r
        }
        Params::AppendixA(p) => {
            let (a, b, c) = match (&p.p, &p.q, &p.r) {
                (Some(a), Some(b), Some(c)) => (a.0.clone(), b.0.clone(), c.0.clone()),
                _ => random::nested_projector_triple(p.dim, &mut rng),
            };
            lattice::appendix_a_identity(&a, &b, &c, tol)
        }
        Params::ConditionalBuild(p) => {
            let sys = p.system.build()?;
            let v = conjugator(&p.conjugator, &sys, &mut rng);
            let b = conditional::build_conditional(&sys, &p.lab, Some(&v))?;
            let mut r = b.validate(tol)?;
            r.name = "conditional_build".into();
            r
        }
        Params::GentleSweep(p) => gentle_sweep(p, sc.seed, rep, tol)?,
        Params::ConditionalBound(p) => {
            let sys = p.system.build()?;
            let rho = match &p.state {
                StateSpec::Localized => conditional::localized_state(&sys, &p.lab, p.target_delta)?,
                StateSpec::MaximallyMixed => DensityState::maximally_mixed(sys.n()),
                StateSpec::Matrix(m) => DensityState::with_tol(m.0.clone(), tol.max(1e-9))?,
            };
            conditional::conditional_prob_bound(&sys, &p.delta, &p.lab, &rho)?
        }
        Params::Composition(p) => {
            let sys = p.system.build()?;
            let mut r = conditional::composition_identity_check(&sys, &p.lab, &p.lab_prime)?;
            let failure = r.get("cross_lab_additivity_failure").unwrap_or(0.0);
            match p.expect_failure {
                Some(FailureExpectation::Positive) => {
                    r.at_least("failure_positive", failure, tol);
                }
                Some(FailureExpectation::Zero) => {
                    r.at_most("failure_zero", failure, 1e-12);
                }
                None => {}
            }
            r
        }
        Params::CrossLabCommutator(p) => {
            let a = p.system.build()?;
            let b = match &p.system_b {
                Some(s) => s.build()?,
                None => a.clone(),
            };
            conditional::cross_lab_commutator(&a, &p.lab, &p.delta, &b, &p.lab_prime, &p.delta_prime)?
                .to_check_report()
        }
        Params::VConjugation(p) => {
            let sys = p.system.build()?;
            let v = conjugator(&p.conjugator, &sys, &mut rng);
            conditional::v_conjugation_reduction(&sys, &p.lab, &v)?
        }
    };
    r.tol = tol;
    Ok(r)
}

/// Runs one scenario, folding repeats into the worst case. Domain errors
/// become FAIL reports.
pub fn run_scenario(sc: &Scenario) -> CheckReport {
    let start = Instant::now();
    let mut merged: Option<CheckReport> = None;
    for rep in 0..sc.repeat {
        let r = match run_once(sc, rep) {
            Ok(r) => r,
            Err(e) => {
                let mut r = CheckReport::new(sc.name.clone());
                r.require("completed", false);
                r.note(format!("error in repeat {rep}: {e}"));
                r
            }
        };
        match merged.as_mut() {
            None => merged = Some(r),
            Some(m) => m.merge_worst(r),
        }
    }
    let mut r = merged.expect("repeat >= 1");
    r.name = sc.name.clone();
    r.tol = sc.tol;
    r.scenario = Some(sc.echo.clone());
    r.wall_time = start.elapsed().as_secs_f64();
    r
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub info: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub seed: u64,
    pub summary: Summary,
    pub reports: Vec<CheckReport>,
}

impl RunReport {
    pub fn new(seed: u64, reports: Vec<CheckReport>) -> Self {
        let mut summary = Summary::default();
        for r in &reports {
            match r.verdict {
                Verdict::Pass => summary.pass += 1,
                Verdict::Fail => summary.fail += 1,
                Verdict::Info => summary.info += 1,
            }
        }
        Self {
            version: VERSION.to_string(),
            seed,
            summary,
            reports,
        }
    }

    /// 0 when nothing failed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.summary.fail == 0 {
            0
        } else {
            1
        }
    }

    /// The report with every wall time zeroed, for comparisons.
    pub fn without_timing(&self) -> Self {
        let mut out = self.clone();
        for r in &mut out.reports {
            r.wall_time = 0.0;
        }
        out
    }
}

/// Runs all scenarios on `workers` threads (all cores when `None`);
/// reports come back in input order.
pub fn run_scenarios(set: &ScenarioSet, workers: Option<usize>) -> Result<RunReport> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        if w == 0 {
            return Err(Error::Input("workers must be at least 1".into()));
        }
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Input(format!("thread pool: {e}")))?;
    let reports = pool.install(|| set.scenarios.par_iter().map(run_scenario).collect());
    Ok(RunReport::new(set.seed, reports))
}

pub fn run_file(path: &Path, opts: LoadOptions, workers: Option<usize>) -> Result<RunReport> {
    let text = std::fs::read_to_string(path)?;
    run_scenarios(&parse_scenarios(&text, opts)?, workers)
}

pub fn emit_json(report: &RunReport, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(report)?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// One row per scenario: name, verdict, max_residual, tol, wall_time.
pub fn write_csv<W: std::io::Write>(report: &RunReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(["name", "verdict", "max_residual", "tol", "wall_time"]).map_err(io)?;
    for r in &report.reports {
        w.write_record([
            r.name.clone(),
            r.verdict.to_string(),
            format!("{:e}", r.max_residual()),
            format!("{:e}", r.tol),
            format!("{:.6}", r.wall_time),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(report: &RunReport, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_csv(report, f)
}

pub const GENERATOR_KINDS: [&str; 6] = [
    "state",
    "effect",
    "povm",
    "luders_instrument",
    "commuting_pair",
    "lattice_system",
];

/// Seeded random object of the given kind; `lattice_system` uses `dim`
/// cells of the frame-smeared construction.
pub fn generate_instance(kind: &str, dim: usize, seed: u64) -> Result<Object> {
    if dim == 0 {
        return Err(Error::Input("dim must be positive".into()));
    }
    let mut rng = rng_from(seed, &[]);
    Ok(match kind {
        "state" => Object::from_state(&random::random_state(dim, &mut rng)),
        "effect" => Object::from_effect(&random::random_effect(dim, &mut rng)),
        "povm" => Object::from_povm(&random::random_povm(dim, 3, &mut rng)),
        "luders_instrument" => Object::from_instrument(&luders_instrument(&random::random_povm(dim, 2, &mut rng))),
        "commuting_pair" => {
            let (t, s) = random::commuting_pair(dim, 2, 2, &mut rng);
            let m = |p: &DiscretePovm| p.effects().iter().map(|e| Matrix::from(e.matrix())).collect();
            Object::CommutingPair { t: m(&t), s: m(&s) }
        }
        "lattice_system" => Object::from_system(&LatticeLocalizationSystem::frame_smeared(dim, 1.0, 1.0, 1.5)?),
        other => {
            return Err(Error::Input(format!(
                "unknown kind {other:?}; expected one of {}",
                GENERATOR_KINDS.join(", ")
            )))
        }
    })
}
