//! Acceptance suite.
//!
//! Runs every criterion at its stated tolerance, prints one PASS/FAIL line
//! per criterion and exits nonzero when any criterion fails. Reference values
//! come from oracles written here (closed forms, SVD norms, a Taylor matrix
//! exponential, Monte-Carlo geometry) rather than from the library paths
//! under test.
//!
//! Set `ACCEPTANCE_SEED` to change the master seed.

use std::collections::BTreeMap;
use std::time::Instant;

use nalgebra::DVector;
use rand::Rng;
use serde_json::{json, Value};

use locpovm::causality::{beck_check, heinosaari_wolf_search, luders_equivalence_check, HW_D1_MAX, HW_D2_MIN};
use locpovm::conditional::{
    build_conditional, composition_identity_check, conditional_prob_bound, gentle_bound,
    localized_state,
};
use locpovm::geometry::{
    causally_separated, lab_contains, spatial_distance, translate_region, FourVector, RegionUnion,
    SpacetimeBox,
};
use locpovm::lattice::{
    appendix_a_identity, cc_residual, hc_audit, microcausality_residual, CellSet,
    LatticeLocalizationSystem,
};
use locpovm::linalg::{self, c, CMat, C64};
use locpovm::quantum::{DensityState, DiscretePovm, Effect, PROB_FLOOR};
use locpovm::random::{
    commuting_instrument, commuting_pair, derive_seed, haar_unitary, nested_projector_triple,
    random_effect, random_povm, random_pure_state, random_state, rng_from, SeededRng,
};
use locpovm::scenario::{parse_scenarios, run_scenarios, LoadOptions};

const DEFAULT_SEED: u64 = 0x1f0c_a11e_d5ee_d001;

/// Calibrated floor for the largest audited microcausality residual of the
/// sharp lattice (pairs at least two cells apart, `t ≤ 2`).
const MICRO_FLOOR: f64 = 1e-3;

mod oracle {
    use super::*;

    pub fn singular_values(m: &CMat) -> Vec<f64> {
        m.clone().svd(false, false).singular_values.iter().copied().collect()
    }

    pub fn op_norm(m: &CMat) -> f64 {
        singular_values(m).into_iter().fold(0.0, f64::max)
    }

    pub fn trace_norm(m: &CMat) -> f64 {
        singular_values(m).into_iter().sum()
    }

    pub fn eigen(m: &CMat) -> (Vec<f64>, CMat) {
        let h = (m + m.adjoint()) * c(0.5, 0.0);
        let e = h.symmetric_eigen();
        (e.eigenvalues.iter().copied().collect(), e.eigenvectors)
    }

    /// Eigenvalues of the Hermitian part, without eigenvectors.
    pub fn eigenvalues(m: &CMat) -> Vec<f64> {
        let h = (m + m.adjoint()) * c(0.5, 0.0);
        h.symmetric_eigenvalues().iter().copied().collect()
    }

    /// Operator norm of a Hermitian matrix from its spectrum.
    pub fn hermitian_norm(m: &CMat) -> f64 {
        eigenvalues(m).into_iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn min_eig(m: &CMat) -> f64 {
        eigen(m).0.into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn sqrt_psd(m: &CMat) -> CMat {
        let (vals, vecs) = eigen(m);
        let d = CMat::from_diagonal(&DVector::from_iterator(
            vals.len(),
            vals.iter().map(|&v| c(v.max(0.0).sqrt(), 0.0)),
        ));
        &vecs * d * vecs.adjoint()
    }

    /// `exp(A)` by scaling and squaring with a 24-term Taylor series.
    pub fn expm(a: &CMat) -> CMat {
        let norm = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
        let scaled = a / c(2f64.powi(squarings as i32), 0.0);
        let n = a.nrows();
        let mut term = CMat::identity(n, n);
        let mut sum = term.clone();
        for k in 1..=24 {
            term = &term * &scaled / c(k as f64, 0.0);
            sum += &term;
        }
        for _ in 0..squarings {
            sum = &sum * &sum;
        }
        sum
    }

    /// `e^{−itH}`.
    pub fn propagator(h: &CMat, t: f64) -> CMat {
        expm(&(h * C64::new(0.0, -t)))
    }

    /// `‖Φ*(S) − S‖` from the Kraus families.
    pub fn nsc(families: &[Vec<CMat>], s: &CMat) -> f64 {
        let mut acc = -s.clone();
        for k in families.iter().flatten() {
            acc += k.adjoint() * s * k;
        }
        op_norm(&acc)
    }
}

/// Sub-checks and recorded numbers of one criterion.
struct Criterion {
    id: u32,
    title: &'static str,
    checks: Vec<(String, bool, String)>,
    data: BTreeMap<String, Value>,
    elapsed: f64,
}

impl Criterion {
    fn new(id: u32, title: &'static str) -> Self {
        Self {
            id,
            title,
            checks: Vec::new(),
            data: BTreeMap::new(),
            elapsed: 0.0,
        }
    }

    fn check(&mut self, name: &str, ok: bool, detail: impl Into<String>) {
        self.checks.push((name.to_string(), ok, detail.into()));
    }

    fn record(&mut self, key: &str, v: impl serde::Serialize) {
        self.data.insert(key.to_string(), serde_json::to_value(v).unwrap());
    }

    fn passed(&self) -> bool {
        self.checks.iter().all(|(_, ok, _)| *ok)
    }

    /// Everything except wall time, for the determinism comparison.
    fn fingerprint(&self) -> Value {
        json!({
            "id": self.id,
            "checks": self.checks,
            "data": self.data,
        })
    }

    fn line(&self) -> String {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        let failed: Vec<String> = self
            .checks
            .iter()
            .filter(|(_, ok, _)| !ok)
            .map(|(n, _, d)| format!("{n} [{d}]"))
            .collect();
        let shown: Vec<String> = self.checks.iter().map(|(n, _, d)| format!("{n}: {d}")).collect();
        if failed.is_empty() {
            format!(
                "criterion {} {}: PASS ({}; {:.1} s)",
                self.id,
                self.title,
                shown.join("; "),
                self.elapsed
            )
        } else {
            format!(
                "criterion {} {}: {verdict} (failed: {}; {:.1} s)",
                self.id,
                self.title,
                failed.join("; "),
                self.elapsed
            )
        }
    }
}

fn timed(id: u32, f: impl FnOnce() -> Criterion, limit: Option<f64>) -> Criterion {
    let start = Instant::now();
    let mut c = f();
    c.elapsed = start.elapsed().as_secs_f64();
    debug_assert_eq!(c.id, id);
    if let Some(limit) = limit {
        // Wall time is kept out of the fingerprint; only the verdict is.
        let ok = c.elapsed < limit;
        c.checks.push(("runtime".into(), ok, format!("< {limit} s")));
    }
    c
}

fn effect_in_basis(u: &CMat, lam: &[f64]) -> Effect {
    let d = CMat::from_diagonal(&DVector::from_iterator(lam.len(), lam.iter().map(|&x| c(x, 0.0))));
    Effect::new_unchecked(linalg::hermitian_part(&(u * d * u.adjoint())))
}

// ---------------------------------------------------------------------------
// 1. Gentle measurement lemma
// ---------------------------------------------------------------------------

fn gentle_instance(seed: u64, i: u64) -> (Effect, DensityState) {
    let mut rng = rng_from(seed, &[1, i]);
    let dim = 2 + (i % 7) as usize;
    let t = if i % 5 == 0 {
        // Near-singular: most of the spectrum pushed towards zero.
        let u = haar_unitary(dim, &mut rng);
        let lam: Vec<f64> = (0..dim)
            .map(|k| {
                if k == 0 {
                    rng.random_range(0.2..1.0)
                } else {
                    10f64.powf(rng.random_range(-12.0..-4.0))
                }
            })
            .collect();
        effect_in_basis(&u, &lam)
    } else {
        random_effect(dim, &mut rng)
    };
    let rho = if i % 3 == 0 { random_pure_state(dim, &mut rng) } else { random_state(dim, &mut rng) };
    (t, rho)
}

fn criterion_gentle(seed: u64) -> Criterion {
    let mut cr = Criterion::new(1, "gentle measurement lemma");
    let (mut evaluated, mut skipped, mut violations, mut oracle_mismatch) = (0usize, 0usize, 0usize, 0usize);
    let mut min_margin = f64::INFINITY;
    for i in 0..10_000u64 {
        let (t, rho) = gentle_instance(seed, i);
        if rho.expectation(t.matrix()) <= PROB_FLOOR {
            skipped += 1;
            continue;
        }
        let r = gentle_bound(&t, &rho).unwrap();
        evaluated += 1;
        min_margin = min_margin.min(r.margin);
        if r.margin < -1e-9 {
            violations += 1;
        }
        let p = rho.expectation(t.matrix());
        let root = oracle::sqrt_psd(t.matrix());
        let post = &root * rho.matrix() * &root / c(p, 0.0);
        let lhs = oracle::trace_norm(&(rho.matrix() - post));
        if (lhs - r.lhs_trace_dist).abs() > 1e-9 {
            oracle_mismatch += 1;
        }
    }
    cr.check("instances", evaluated + skipped >= 10_000, format!("{evaluated} evaluated, {skipped} below floor"));
    cr.check("violations", violations == 0, format!("{violations}, min margin {min_margin:.3e}"));
    cr.check("lhs_oracle", oracle_mismatch == 0, format!("{oracle_mismatch} mismatches"));

    // Diagonal qubit: post-state diag(2/3, 1/3), δ = 1/4.
    let rho = DensityState::maximally_mixed(2);
    let t = Effect::new(linalg::diag(&[1.0, 0.5])).unwrap();
    let r = gentle_bound(&t, &rho).unwrap();
    let (lhs, rhs) = ((0.5f64 - 2.0 / 3.0).abs() + (0.5f64 - 1.0 / 3.0).abs(), 2.0 * 0.25f64.sqrt() + 0.25);
    let ok = (r.lhs_trace_dist - lhs).abs() <= 1e-12 && (r.rhs_bound - rhs).abs() <= 1e-12;
    cr.check("qubit", ok, format!("lhs {:.15} rhs {:.15}", r.lhs_trace_dist, r.rhs_bound));
    cr.record("evaluated", evaluated);
    cr.record("min_margin", min_margin);
    cr.record("qubit", [r.lhs_trace_dist, r.rhs_bound]);
    cr
}

// ---------------------------------------------------------------------------
// 2. Lüders-measurement equivalence
// ---------------------------------------------------------------------------

fn criterion_luders(seed: u64) -> Criterion {
    let mut cr = Criterion::new(2, "luders equivalence");
    let mut worst_commuting = 0.0_f64;
    for i in 0..1000u64 {
        let mut rng = rng_from(seed, &[2, 0, i]);
        let dim = 2 + (i % 5) as usize;
        let (t, s) = commuting_pair(dim, 2 + (i % 3) as usize, 2 + ((i / 3) % 3) as usize, &mut rng);
        let r = luders_equivalence_check(&t, &s, 1e-10).unwrap();
        worst_commuting = worst_commuting.max(r.nsc_dev).max(r.rcc_dev.unwrap_or(f64::INFINITY));
    }
    cr.check("commuting", worst_commuting <= 1e-10, format!("max deviation {worst_commuting:.2e}"));

    let (mut below, mut resampled, mut recheck_below) = (0usize, 0usize, 0usize);
    let mut min_nsc = f64::INFINITY;
    for i in 0..1000u64 {
        let mut rng = rng_from(seed, &[2, 1, i]);
        let dim = 2 + (i % 5) as usize;
        let (t, s) = loop {
            let t = random_povm(dim, 2 + (i % 3) as usize, &mut rng);
            let s = random_povm(dim, 2 + ((i / 3) % 3) as usize, &mut rng);
            if locpovm::causality::commutator_residual(&t, &s).unwrap() >= 0.1 {
                break (t, s);
            }
            resampled += 1;
        };
        let r = luders_equivalence_check(&t, &s, 1e-10).unwrap();
        min_nsc = min_nsc.min(r.nsc_dev);
        if r.nsc_dev < 1e-8 {
            below += 1;
            let luders = locpovm::quantum::luders_instrument(&t);
            let again = s
                .effects()
                .iter()
                .map(|e| oracle::nsc(luders.families(), e.matrix()))
                .fold(0.0, f64::max);
            eprintln!("  recheck: sample {i} dim {dim} nsc {:.3e} oracle {again:.3e}", r.nsc_dev);
            if again < 1e-8 {
                recheck_below += 1;
            }
        }
    }
    cr.check(
        "noncommuting",
        recheck_below == 0,
        format!("min nsc {min_nsc:.3e}, {below} below floor, {recheck_below} after recheck, {resampled} resamples"),
    );

    let proj = |rows: [f64; 4]| linalg::from_real_rows(2, &rows);
    let comp = DiscretePovm::new(vec![proj([1.0, 0.0, 0.0, 0.0]), proj([0.0, 0.0, 0.0, 1.0])]).unwrap();
    let pm = DiscretePovm::new(vec![proj([0.5, 0.5, 0.5, 0.5]), proj([0.5, -0.5, -0.5, 0.5])]).unwrap();
    let r = luders_equivalence_check(&comp, &pm, 1e-10).unwrap();
    let rcc = r.rcc_dev.unwrap();
    // |0⟩⟨0|+⟩⟨+|0⟩⟨0| − |+⟩⟨+|0⟩⟨0|+⟩⟨+| = (|0⟩⟨0| − |+⟩⟨+|)/2, of norm 1/(2√2).
    let rcc_oracle = {
        let z = proj([1.0, 0.0, 0.0, 0.0]);
        let p = proj([0.5, 0.5, 0.5, 0.5]);
        oracle::op_norm(&(&z * &p * &z - &p * &z * &p))
    };
    cr.check("qubit_nsc", (r.nsc_dev - 0.5).abs() <= 1e-12, format!("{:.15}", r.nsc_dev));
    cr.check("qubit_commutator", (r.commutator_residual - 0.5).abs() <= 1e-12, format!("{:.15}", r.commutator_residual));
    cr.check("qubit_rcc_oracle", (rcc - rcc_oracle).abs() <= 1e-12, format!("{rcc:.15} vs op-norm oracle {rcc_oracle:.15}"));
    cr.check("qubit_rcc_stated", (rcc - 0.25).abs() <= 1e-12, format!("{rcc:.15} vs stated 0.25"));
    cr.record("worst_commuting", worst_commuting);
    cr.record("min_nsc", min_nsc);
    cr.record("qubit", [r.nsc_dev, rcc, r.commutator_residual]);
    cr
}

// ---------------------------------------------------------------------------
// 3. Beck direction and the Heinosaari–Wolf search
// ---------------------------------------------------------------------------

fn criterion_beck(seed: u64) -> Criterion {
    let mut cr = Criterion::new(3, "beck direction and hw search");
    let (mut qualifying, mut broken) = (0usize, 0usize);
    let mut worst = 0.0_f64;
    for i in 0..1000u64 {
        let mut rng = rng_from(seed, &[3, 0, i]);
        let dim = 2 + (i % 5) as usize;
        let (instr, s) = commuting_instrument(dim, 2 + (i % 3) as usize, 1 + (i % 2) as usize, &mut rng);
        let r = beck_check(&instr, &s, 1e-10).unwrap();
        if r.kraus_commutator_residual <= 1e-12 {
            qualifying += 1;
            let d = r.nsc_dev.max(r.nsc_dev_square.unwrap());
            worst = worst.max(d);
            if d > 1e-10 {
                broken += 1;
            }
        }
    }
    cr.check("constructed", qualifying == 1000 && broken == 0, format!("{qualifying} with kappa <= 1e-12, max d {worst:.2e}"));

    let mut found = Vec::new();
    let mut unverified = 0usize;
    for k in 0..8u64 {
        let dim = 3 + (k % 2) as usize;
        let out = heinosaari_wolf_search(dim, derive_seed(seed, &[3, 1, k]), 100_000);
        match out.witness {
            Some(w) => {
                let d1 = oracle::nsc(w.instrument.families(), w.effect.matrix());
                let d2 = oracle::nsc(w.instrument.families(), &(w.effect.matrix() * w.effect.matrix()));
                if !(d1 <= HW_D1_MAX && d2 >= HW_D2_MIN) {
                    unverified += 1;
                }
                found.push(json!({"seed": k, "dim": dim, "d1": d1, "d2": d2}));
            }
            None => eprintln!("  hw search seed {k} dim {dim}: NOT_FOUND after {} evaluations", out.evaluations),
        }
    }
    cr.check("hw_search", !found.is_empty() && unverified == 0, format!("{}/8 seeds found, {unverified} unverified", found.len()));
    cr.record("beck_worst", worst);
    cr.record("hw", &found);
    cr
}

// ---------------------------------------------------------------------------
// 4. Conditional POVM
// ---------------------------------------------------------------------------

fn cells_of(mask: u32) -> CellSet {
    CellSet::new((0..16).filter(|k| mask & (1 << k) != 0))
}

fn criterion_conditional(seed: u64) -> Criterion {
    let mut cr = Criterion::new(4, "conditional povm");
    let sys = LatticeLocalizationSystem::frame_smeared(16, 1.0, 1.0, 1.5).unwrap();
    let id = linalg::identity(16);

    // Every lab of size 4, 6 or 8: normalization, effect bounds on the
    // singletons and their complements, additivity on random 2-partitions.
    let (mut labs, mut refused) = (0usize, 0usize);
    let (mut norm_worst, mut add_worst, mut lo, mut hi) = (0.0_f64, 0.0_f64, f64::INFINITY, f64::NEG_INFINITY);
    for mask in 0u32..(1 << 16) {
        if ![4, 6, 8].contains(&mask.count_ones()) {
            continue;
        }
        let lab = cells_of(mask);
        let cond = match build_conditional(&sys, &lab, None) {
            Ok(c) => c,
            Err(_) => {
                refused += 1;
                continue;
            }
        };
        labs += 1;
        norm_worst = norm_worst.max(oracle::hermitian_norm(&(cond.effect(&lab).unwrap() - &id)));
        for k in lab.iter() {
            let single = CellSet::new([k]);
            for b in [cond.effect(&single).unwrap(), cond.effect(&lab.difference(&single)).unwrap()] {
                for v in oracle::eigenvalues(&b) {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
        }
        let mut rng = rng_from(seed, &[4, mask as u64]);
        for _ in 0..2 {
            let s = CellSet::new(lab.iter().filter(|_| rng.random::<bool>()));
            let sum = cond.effect(&s).unwrap() + cond.effect(&lab.difference(&s)).unwrap();
            add_worst = add_worst.max(oracle::hermitian_norm(&(sum - &id)));
        }
    }
    // Full enumeration of 2-partitions on the intervals and sampled subsets.
    let mut full = 0usize;
    let mut full_failed = Vec::new();
    let mut rng = rng_from(seed, &[4, 1 << 20]);
    let mut full_labs: Vec<CellSet> = Vec::new();
    for len in [4usize, 6, 8] {
        for start in 0..16 {
            full_labs.push(CellSet::interval(start, len, 16));
        }
        for _ in 0..8 {
            let mut cells: Vec<usize> = (0..16).collect();
            for i in (1..16).rev() {
                cells.swap(i, rng.random_range(0..=i));
            }
            full_labs.push(CellSet::new(cells[..len].iter().copied()));
        }
    }
    for lab in &full_labs {
        if let Ok(cond) = build_conditional(&sys, lab, None) {
            full += 1;
            let rep = cond.validate(1e-10).unwrap();
            if !rep.passed() {
                full_failed.push(format!("{:?}: {:?}", lab.iter().collect::<Vec<_>>(), rep.failures()));
            }
        }
    }
    cr.check("labs", refused == 0, format!("{labs} constructible, {refused} refused"));
    cr.check("normalization", norm_worst <= 1e-10, format!("{norm_worst:.2e}"));
    cr.check("additivity", add_worst <= 1e-10 && full_failed.is_empty(), format!("{add_worst:.2e}, {full} labs fully enumerated, {} failing", full_failed.len()));
    cr.check("bounds", lo >= -1e-10 && hi <= 1.0 + 1e-10, format!("min eig {lo:.3e}, max eig {hi:.12}"));

    // Exact conditional identity against a directly computed ρ^I.
    let mut id_worst = 0.0_f64;
    for i in 0..100u64 {
        let mut rng = rng_from(seed, &[4, 2, i]);
        let lab = CellSet::interval(rng.random_range(0..16), [4, 6, 8][(i % 3) as usize], 16);
        let cond = build_conditional(&sys, &lab, None).unwrap();
        let rho = random_state(16, &mut rng);
        let a0 = sys.effect_of(&lab).unwrap();
        let root = oracle::sqrt_psd(&a0);
        let p0 = rho.expectation(&a0);
        let rho_i = &root * rho.matrix() * &root / c(p0, 0.0);
        for _ in 0..5 {
            let s = CellSet::new(lab.iter().filter(|_| rng.random::<bool>()));
            let lhs = linalg::trace_product_re(&rho_i, &cond.effect(&s).unwrap());
            let rhs = rho.expectation(&sys.effect_of(&s).unwrap()) / p0;
            id_worst = id_worst.max((lhs - rhs).abs());
        }
    }
    cr.check("exact_identity", id_worst <= 1e-10, format!("{id_worst:.2e} over 100 states"));

    // Probability bound on states with δ ≤ 0.01. A(Δ₀) has no spectrum above
    // 0.99 for |Δ₀| ≤ 8, so these states live on labs of 10 and 12 cells.
    let max_eig: Vec<(usize, f64)> = [4usize, 6, 8, 10, 12]
        .iter()
        .map(|&len| (len, oracle::eigen(&sys.effect_of(&CellSet::interval(0, len, 16)).unwrap()).0.into_iter().fold(0.0, f64::max)))
        .collect();
    let (mut states, mut bound_fail, mut margin) = (0usize, 0usize, f64::INFINITY);
    let mut delta_max = 0.0_f64;
    for (li, (start, len)) in [(0usize, 10usize), (5, 10), (0, 12), (9, 12)].into_iter().enumerate() {
        let lab = CellSet::interval(start, len, 16);
        let cond = build_conditional(&sys, &lab, None).unwrap();
        let a0 = sys.effect_of(&lab).unwrap();
        let (vals, vecs) = oracle::eigen(&a0);
        let keep: Vec<usize> = (0..16).filter(|&k| vals[k] >= 0.99).collect();
        let mut candidates = vec![localized_state(&sys, &lab, 0.01).unwrap()];
        let mut rng = rng_from(seed, &[4, 3, li as u64]);
        for _ in 0..4 {
            let mut psi = DVector::<C64>::zeros(16);
            for &k in &keep {
                let w = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                psi += vecs.column(k) * w;
            }
            candidates.push(DensityState::pure(&psi).unwrap());
        }
        let subsets = cond.sample_subsets();
        for rho in &candidates {
            let p0 = rho.expectation(&a0);
            let delta = 1.0 - p0;
            delta_max = delta_max.max(delta);
            states += 1;
            let bound = 2.0 * delta.max(0.0).sqrt() + delta;
            for s in &subsets {
                let fraction = rho.expectation(&sys.effect_of(s).unwrap()) / p0;
                let diff = (rho.expectation(&cond.effect(s).unwrap()) - fraction).abs();
                margin = margin.min(bound - diff);
                if diff > bound + 1e-9 {
                    bound_fail += 1;
                }
            }
            let first = CellSet::new([start]);
            if !conditional_prob_bound(&sys, &first, &lab, rho).unwrap().passed() {
                bound_fail += 1;
            }
        }
    }
    cr.check(
        "probability_bound",
        bound_fail == 0 && delta_max <= 0.01,
        format!("{states} states, max delta {delta_max:.2e}, min margin {margin:.3e}, {bound_fail} violations"),
    );
    cr.record("labs", labs);
    cr.record("norm_worst", norm_worst);
    cr.record("add_worst", add_worst);
    cr.record("bounds", [lo, hi]);
    cr.record("identity_worst", id_worst);
    cr.record("max_eig_by_size", &max_eig);
    cr.record("bound_margin", margin);
    cr
}

// ---------------------------------------------------------------------------
// 5. Composition across laboratories
// ---------------------------------------------------------------------------

fn criterion_composition(_seed: u64) -> Criterion {
    let mut cr = Criterion::new(5, "composition across labs");
    let frame = LatticeLocalizationSystem::frame_smeared(16, 1.0, 1.0, 1.5).unwrap();
    let diag = LatticeLocalizationSystem::diagonal_smeared(16, 1.0, 1.0, 1.5).unwrap();
    let pairs = [((0usize, 4usize), (4usize, 4usize)), ((3, 3), (6, 5)), ((12, 4), (0, 3))];
    let mut identity = 0.0_f64;
    let (mut frame_fail, mut diag_fail) = (f64::INFINITY, 0.0_f64);
    let mut diag_witness = Value::Null;
    for ((s1, l1), (s2, l2)) in pairs {
        let (lab, lab2) = (CellSet::interval(s1, l1, 16), CellSet::interval(s2, l2, 16));
        for (name, sys) in [("frame", &frame), ("diagonal", &diag)] {
            let r = composition_identity_check(sys, &lab, &lab2).unwrap();
            identity = identity.max(r.get("identity").unwrap());
            let f = r.get("cross_lab_additivity_failure").unwrap();
            if name == "frame" {
                frame_fail = frame_fail.min(f);
            } else if f >= diag_fail {
                diag_fail = f;
                diag_witness = r.witnesses.get("failure_delta").cloned().unwrap_or(Value::Null);
            }
        }
    }
    // With Δ the whole joint lab, B₁₂ = I while B₁(Δ₀) + B₂(Δ₀′) = 2I.
    let closed_form = 1.0;
    cr.check("identity", identity <= 1e-10, format!("{identity:.2e}"));
    cr.check("frame_failure_positive", frame_fail > 0.0, format!("min {frame_fail:.6}"));
    cr.check(
        "diagonal_failure_zero",
        diag_fail <= 1e-12,
        format!("{diag_fail:.6} at {diag_witness}, closed form at the joint lab {closed_form}"),
    );
    cr.record("identity", identity);
    cr.record("frame_failure", frame_fail);
    cr.record("diagonal_failure", diag_fail);
    cr
}

// ---------------------------------------------------------------------------
// 6. Causal geometry
// ---------------------------------------------------------------------------

fn random_box(rng: &mut SeededRng, spread: f64, max_ext: f64) -> SpacetimeBox {
    let lo: [f64; 4] = std::array::from_fn(|_| rng.random_range(-spread..spread));
    let hi: [f64; 4] = std::array::from_fn(|i| lo[i] + rng.random_range(0.0..max_ext));
    SpacetimeBox::new(lo.into(), hi.into()).unwrap()
}

fn coords(v: FourVector) -> [f64; 4] {
    v.into()
}

/// Pair sampler biased towards faces, corners and mutually closest points.
fn mc_pair(a: &SpacetimeBox, b: &SpacetimeBox, rng: &mut SeededRng) -> f64 {
    let (al, ah, bl, bh) = (coords(a.lo()), coords(a.hi()), coords(b.lo()), coords(b.hi()));
    let mut p = [0.0; 4];
    let mut q = [0.0; 4];
    for i in 0..4 {
        let u = |rng: &mut SeededRng, l: f64, h: f64| l + rng.random::<f64>() * (h - l);
        match rng.random_range(0..3) {
            0 => {
                p[i] = u(rng, al[i], ah[i]);
                q[i] = u(rng, bl[i], bh[i]);
            }
            1 => {
                p[i] = if rng.random() { al[i] } else { ah[i] };
                q[i] = if rng.random() { bl[i] } else { bh[i] };
            }
            _ => {
                p[i] = u(rng, al[i], ah[i]);
                q[i] = p[i].clamp(bl[i], bh[i]);
            }
        }
    }
    let d: [f64; 4] = std::array::from_fn(|i| q[i] - p[i]);
    d[1] * d[1] + d[2] * d[2] + d[3] * d[3] - d[0] * d[0]
}

/// Causal-line oracle for the domain of dependence of a spatial box: every
/// line through `p` with speed at most one must meet the box.
fn causal_line_oracle(p: [f64; 4], lab: &SpacetimeBox, rng: &mut SeededRng) -> bool {
    let (l, h) = (coords(lab.lo()), coords(lab.hi()));
    let dt = l[0] - p[0];
    let mut dirs: Vec<[f64; 3]> = Vec::new();
    for i in 0..3 {
        for s in [-1.0, 1.0] {
            let mut v = [0.0; 3];
            v[i] = s;
            dirs.push(v);
        }
    }
    for mask in 0..8 {
        let r = 1.0 / 3f64.sqrt();
        dirs.push(std::array::from_fn(|i| if mask & (1 << i) != 0 { r } else { -r }));
    }
    for _ in 0..64 {
        let g: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let n = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt().max(1e-12);
        let speed = if rng.random::<bool>() { 1.0 } else { rng.random::<f64>() };
        dirs.push(std::array::from_fn(|i| g[i] / n * speed));
    }
    dirs.iter().all(|v| (0..3).all(|i| {
        let x = p[i + 1] + v[i] * dt;
        x >= l[i + 1] && x <= h[i + 1]
    }))
}

fn criterion_geometry(seed: u64) -> Criterion {
    let mut cr = Criterion::new(6, "causal geometry");
    let mut rng = rng_from(seed, &[6, 0]);
    let (mut pairs, mut separated, mut disagree) = (0usize, 0usize, 0usize);
    while pairs < 100 {
        let a = random_box(&mut rng, 3.0, 1.5);
        let b = random_box(&mut rng, 3.0, 1.5);
        let verdict = causally_separated(&RegionUnion::single(a), &RegionUnion::single(b)).unwrap();
        let mut causal = false;
        let mut min_v = f64::INFINITY;
        for _ in 0..10_000 {
            let v = mc_pair(&a, &b, &mut rng);
            if v.abs() <= 1e-9 {
                continue;
            }
            min_v = min_v.min(v);
            causal |= v < 0.0;
        }
        if min_v.abs() <= 1e-9 {
            continue;
        }
        pairs += 1;
        separated += verdict as usize;
        if verdict == causal {
            disagree += 1;
        }
    }
    cr.check("separation_oracle", disagree == 0, format!("{pairs} pairs ({separated} separated), {disagree} disagreements"));

    let (mut points, mut inside, mut mismatch) = (0usize, 0usize, 0usize);
    for bi in 0..20u64 {
        let mut rng = rng_from(seed, &[6, 1, bi]);
        let t0 = rng.random_range(-1.0..1.0);
        let lo: [f64; 3] = std::array::from_fn(|_| rng.random_range(-2.0..2.0));
        let hi: [f64; 3] = std::array::from_fn(|i| lo[i] + rng.random_range(0.5..2.5));
        let lab = SpacetimeBox::spatial(t0, lo, hi).unwrap();
        let mut k = 0;
        while k < 1000 {
            let p = [
                t0 + rng.random_range(-1.3..1.3),
                rng.random_range(lo[0] - 0.3..hi[0] + 0.3),
                rng.random_range(lo[1] - 0.3..hi[1] + 0.3),
                rng.random_range(lo[2] - 0.3..hi[2] + 0.3),
            ];
            let r = (p[0] - t0).abs();
            let slack = (0..3)
                .map(|i| (p[i + 1] - r - lo[i]).min(hi[i] - p[i + 1] - r))
                .fold(f64::INFINITY, f64::min);
            if slack.abs() <= 1e-9 {
                continue;
            }
            k += 1;
            points += 1;
            let got = lab_contains(FourVector::from(p), &lab).unwrap();
            inside += got as usize;
            if got != causal_line_oracle(p, &lab, &mut rng) {
                mismatch += 1;
            }
        }
    }
    cr.check("lab_contains_oracle", mismatch == 0, format!("{points} points ({inside} inside), {mismatch} mismatches"));

    let (mut swept, mut lost, mut tight) = (0usize, 0usize, 0usize);
    let mut rng = rng_from(seed, &[6, 2]);
    while swept < 100 {
        let lo1: [f64; 3] = std::array::from_fn(|_| rng.random_range(-3.0..3.0));
        let lo2: [f64; 3] = std::array::from_fn(|_| rng.random_range(-3.0..3.0));
        let a = SpacetimeBox::spatial(0.0, lo1, std::array::from_fn(|i| lo1[i] + rng.random_range(0.1..1.5))).unwrap();
        let b = SpacetimeBox::spatial(0.0, lo2, std::array::from_fn(|i| lo2[i] + rng.random_range(0.1..1.5))).unwrap();
        let d = spatial_distance(&a, &b).unwrap();
        if d < 0.05 {
            continue;
        }
        swept += 1;
        let (ra, rb) = (RegionUnion::single(a), RegionUnion::single(b));
        for j in -20..=20 {
            let t = 0.999 * d * j as f64 / 20.0;
            if !causally_separated(&ra, &translate_region(&rb, FourVector::new(t, 0.0, 0.0, 0.0))).unwrap() {
                lost += 1;
            }
        }
        if !causally_separated(&ra, &translate_region(&rb, FourVector::new(1.001 * d, 0.0, 0.0, 0.0))).unwrap() {
            tight += 1;
        }
    }
    cr.check("hypothesis4_sweep", lost == 0, format!("{swept} pairs, {lost} losses for |t| < d, {tight} lost just past d"));
    cr.record("separation", [pairs, separated, disagree]);
    cr.record("lab_contains", [points, inside, mismatch]);
    cr.record("sweep", [swept, lost, tight]);
    cr
}

// ---------------------------------------------------------------------------
// 7. Audit of the no-go hypotheses on the sharp lattice
// ---------------------------------------------------------------------------

fn criterion_audit(_seed: u64) -> Criterion {
    let mut cr = Criterion::new(7, "hc audit and hegerfeldt reflection");
    let sys = LatticeLocalizationSystem::sharp(16, 1.0, 1.0).unwrap();
    let samples: Vec<CellSet> = vec![
        CellSet::new([0]),
        CellSet::new([2]),
        CellSet::new([4]),
        CellSet::new([8]),
        CellSet::interval(10, 3, 16),
    ];
    let times = [0.25, 0.5, 1.0, 2.0];
    let audit = hc_audit(&sys, &samples, &times, 1e-12).unwrap();
    cr.check("hypotheses_1_2", audit.additivity_residual <= 1e-12 && audit.covariance_residual <= 1e-12,
        format!("additivity {:.1e}, covariance {:.1e}", audit.additivity_residual, audit.covariance_residual));
    let h_min = oracle::min_eig(sys.hamiltonian());
    cr.check("min_energy", h_min >= 1.0 - 1e-12 && audit.energy_min_eig >= 1.0 - 1e-12,
        format!("{:.15} (oracle {h_min:.15})", audit.energy_min_eig));

    // Microcausality: the audited maximum against the floor, and a dense
    // exponential recomputation of the witness.
    let w = audit.microcausality_witness.clone().unwrap();
    let u = oracle::propagator(sys.hamiltonian(), w.t);
    let a = sys.effect_of(&w.delta).unwrap();
    let b = &u * sys.effect_of(&w.delta_prime).unwrap() * u.adjoint();
    let micro_oracle = oracle::op_norm(&(&a * &b - &b * &a));
    cr.check("microcausality", audit.microcausality_residual >= MICRO_FLOOR && (micro_oracle - w.residual).abs() <= 1e-10,
        format!("{:.4e} at {:?}/{:?} t={} (oracle {micro_oracle:.4e}, floor {MICRO_FLOOR:.0e})",
            w.residual, w.delta.iter().collect::<Vec<_>>(), w.delta_prime.iter().collect::<Vec<_>>(), w.t));
    let (far, _) = microcausality_residual(&sys, &CellSet::new([0]), &CellSet::new([8]), &[0.5]).unwrap();

    let delta = CellSet::new([0]);
    let cc = cc_residual(&sys, &delta, 1.0).unwrap();
    let u = oracle::propagator(sys.hamiltonian(), 1.0);
    let shadow_t = &u * sys.effect_of(&cc.shadow).unwrap() * u.adjoint();
    let cc_oracle = oracle::min_eig(&(shadow_t - sys.effect_of(&delta).unwrap()));
    cr.check("cc_violation", cc.value < -0.01 && (cc.value - cc_oracle).abs() <= 1e-10,
        format!("{:.6} at delta {{0}}, t=1 (oracle {cc_oracle:.6})", cc.value));

    let alt = sys.with_sign_alternating_spectrum();
    let alt_audit = hc_audit(&alt, &samples, &times, 1e-12).unwrap();
    let commute = (0..16)
        .flat_map(|k| (0..16).map(move |l| (k, l)))
        .map(|(k, l)| oracle::op_norm(&linalg::commutator(&alt.cell_effects()[k], &alt.cell_effects()[l])))
        .fold(0.0, f64::max);
    let says = alt_audit.consistency_verdict.contains("hypothesis 3 fails") && alt_audit.failing_hypotheses.contains(&3);
    cr.check("sign_alternating", says && commute <= 1e-12,
        format!("\"{}\", effects commute to {commute:.1e}", alt_audit.consistency_verdict));
    cr.record("audit", &audit);
    cr.record("far_pair_residual", far);
    cr.record("cc", cc.value);
    cr.record("alt_failing", &alt_audit.failing_hypotheses);
    cr
}

// ---------------------------------------------------------------------------
// 8. Projector identity
// ---------------------------------------------------------------------------

fn criterion_projectors(seed: u64) -> Criterion {
    let mut cr = Criterion::new(8, "projector identity");
    let (mut worst, mut skipped, mut nontrivial) = (0.0_f64, 0usize, 0usize);
    for i in 0..1000u64 {
        let mut rng = rng_from(seed, &[8, i]);
        let dim = 2 + (i % 7) as usize;
        let (p, q, r) = nested_projector_triple(dim, &mut rng);
        let rep = appendix_a_identity(&p, &q, &r, 1e-12);
        if rep.notes.iter().any(|n| n.starts_with("precondition violated")) {
            skipped += 1;
        }
        if oracle::op_norm(&p) > 0.5 && oracle::op_norm(&r) > 0.5 {
            nontrivial += 1;
        }
        worst = worst.max(oracle::op_norm(&(&p * &r)));
    }
    cr.check("pr_norm", worst <= 1e-12 && skipped == 0, format!("max {worst:.2e} over 1000 triples ({nontrivial} with P, R nonzero), {skipped} precondition failures"));
    cr.record("worst", worst);
    cr
}

// ---------------------------------------------------------------------------
// 9. Determinism
// ---------------------------------------------------------------------------

fn run_all(seed: u64) -> Vec<Criterion> {
    vec![
        timed(1, || criterion_gentle(seed), Some(60.0)),
        timed(2, || criterion_luders(seed), Some(120.0)),
        timed(3, || criterion_beck(seed), None),
        timed(4, || criterion_conditional(seed), Some(60.0)),
        timed(5, || criterion_composition(seed), None),
        timed(6, || criterion_geometry(seed), None),
        timed(7, || criterion_audit(seed), None),
        timed(8, || criterion_projectors(seed), None),
    ]
}

const SCENARIOS: &str = r#"[
    {"type": "gentle_sweep", "instances": 300},
    {"type": "beck", "generator": "random", "repeat": 10},
    {"type": "appendix_a", "dim": 5, "repeat": 10},
    {"type": "nsc", "generator": "commuting", "repeat": 5},
    {"type": "hc_audit"},
    {"type": "conditional_build", "lab": [0, 1, 2, 3, 4, 5]},
    {"type": "hw_search", "dim": 3, "budget": 4000, "require_witness": false}
]"#;

fn criterion_determinism(seed: u64, first: &[Criterion]) -> Criterion {
    let mut cr = Criterion::new(9, "determinism");
    let second = run_all(seed);
    let differing: Vec<u32> = first
        .iter()
        .zip(&second)
        .filter(|(a, b)| a.fingerprint() != b.fingerprint())
        .map(|(a, _)| a.id)
        .collect();
    cr.check("suite_rerun", differing.is_empty(), format!("criteria differing: {differing:?}"));

    let opts = LoadOptions { seed: Some(seed), tol: None };
    let set = parse_scenarios(SCENARIOS, opts).unwrap();
    let one = run_scenarios(&set, Some(1)).unwrap().without_timing();
    let two = run_scenarios(&set, Some(3)).unwrap().without_timing();
    let same = serde_json::to_string(&one).unwrap() == serde_json::to_string(&two).unwrap();
    cr.check("runner_workers", same, format!("{} scenarios, 1 vs 3 workers", set.scenarios.len()));
    cr
}

fn main() {
    let seed = std::env::var("ACCEPTANCE_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(DEFAULT_SEED);
    println!("acceptance suite, master seed {seed}");
    let first = run_all(seed);
    for c in &first {
        println!("{}", c.line());
    }
    let start = Instant::now();
    let mut det = criterion_determinism(seed, &first);
    det.elapsed = start.elapsed().as_secs_f64();
    println!("{}", det.line());

    let failed: Vec<u32> = first.iter().chain(std::iter::once(&det)).filter(|c| !c.passed()).map(|c| c.id).collect();
    if failed.is_empty() {
        println!("acceptance: all 9 criteria PASS");
    } else {
        println!("acceptance: {} of 9 criteria FAIL: {failed:?}", failed.len());
        std::process::exit(1);
    }
}
