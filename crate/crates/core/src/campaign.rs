//! Seeded instance generation and verification campaigns.
//!
//! Randomness comes from ChaCha8. Instance `i` of a campaign with master
//! seed `s` uses `ChaCha8Rng::seed_from_u64(s)` switched to stream `i`: its
//! first `u64` is the instance seed and the next draw picks `n`. Everything
//! downstream of an instance (weights, f, g, audit probes) is derived from
//! the instance seed, so rows do not depend on scheduling.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extension::{check_minkowski, lift_operator, Alpha, LiftMethod, LiftOptions};
use crate::instance::Instance;
use crate::kfunc::{check_claim1, check_k_d_sandwich, check_maligranda, k_order_dominates, TGrid, D_EXACT_CAP};
use crate::lattice::{
    eq_tol, lub, lub_by_localization, lub_by_nonnegative_shift, lub_by_split, lub_of_powers, Couple,
    Exponent, LatticeVector, MeasureSpace,
};
use crate::majorization::{MatrixOperator, OPERATOR_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Sandwich,
    Claim1,
    Maligranda,
    Minkowski,
    LiftHolder,
    LiftGreedy,
    LatticeProps,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Sandwich => "sandwich",
            Suite::Claim1 => "claim1",
            Suite::Maligranda => "maligranda",
            Suite::Minkowski => "minkowski",
            Suite::LiftHolder => "lift-holder",
            Suite::LiftGreedy => "lift-greedy",
            Suite::LatticeProps => "lattice-props",
        }
    }

    fn uses_d(self) -> bool {
        matches!(self, Suite::Sandwich | Suite::Claim1)
    }

    fn uses_p(self) -> bool {
        !matches!(self, Suite::Sandwich)
    }
}

fn default_t_grid() -> String {
    "geometric:1e-3,1e3,61".into()
}

fn default_audit_samples() -> usize {
    1000
}

fn default_minkowski_samples() -> usize {
    100
}

/// Campaign configuration, read from TOML:
///
/// ```toml
/// seed = 7
/// instance_count = 100
/// n_min = 2
/// n_max = 12
/// p_set = [1.5, 2.0, 3.0]
/// t_grid = "geometric:1e-3,1e3,61"
/// suites = ["sandwich", "lift-holder"]
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub seed: u64,
    pub instance_count: usize,
    pub n_min: usize,
    pub n_max: usize,
    pub p_set: Vec<f64>,
    #[serde(default = "default_t_grid")]
    pub t_grid: String,
    pub suites: Vec<Suite>,
    /// Domination/norm audit probes per lift.
    #[serde(default = "default_audit_samples")]
    pub audit_samples: usize,
    /// Random `(G, h₁, h₂)` triples per Minkowski row.
    #[serde(default = "default_minkowski_samples")]
    pub minkowski_samples: usize,
    /// Lift `g = f` instead of a random K-ordered `g`.
    #[serde(default)]
    pub identity_pairs: bool,
    /// Record wall-clock time per row. Off by default so that reports are
    /// byte-identical across runs.
    #[serde(default)]
    pub record_runtime: bool,
}

impl CampaignConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: CampaignConfig = toml::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_min == 0 || self.n_min > self.n_max {
            return Err(Error::domain(format!("need 1 <= n_min <= n_max, got {}..{}", self.n_min, self.n_max)));
        }
        if self.suites.iter().any(|s| s.uses_d()) && self.n_max > D_EXACT_CAP {
            return Err(Error::Capacity { what: "D-based suites", n: self.n_max, cap: D_EXACT_CAP });
        }
        if self.suites.iter().any(|s| matches!(s, Suite::LiftHolder | Suite::LiftGreedy)) && self.n_max > OPERATOR_CAP {
            return Err(Error::Capacity { what: "lift suites", n: self.n_max, cap: OPERATOR_CAP });
        }
        if let Some(p) = self.p_set.iter().find(|p| !(p.is_finite() && **p > 1.0)) {
            return Err(Error::domain(format!("p_set values must lie in (1, inf), got {p}")));
        }
        if self.p_set.is_empty() && self.suites.iter().any(|s| s.uses_p()) {
            return Err(Error::domain("p_set is empty but a p-dependent suite is enabled"));
        }
        TGrid::parse(&self.t_grid)?;
        Ok(())
    }
}

/// Seed and size of instance `index`.
pub fn instance_seed(master: u64, index: usize, n_min: usize, n_max: usize) -> (u64, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index as u64);
    let seed = rng.random::<u64>();
    (seed, rng.random_range(n_min..=n_max))
}

fn log_uniform(rng: &mut ChaCha8Rng, lo_exp: f64, hi_exp: f64) -> f64 {
    10f64.powf(rng.random_range(lo_exp..hi_exp))
}

fn random_entries(rng: &mut ChaCha8Rng, n: usize, positive: bool) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let m = log_uniform(rng, -2.0, 2.0);
            if positive || rng.random::<bool>() { m } else { -m }
        })
        .collect()
}

/// Atom weights log-uniform in `[0.1, 10]`.
pub fn random_weights(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    (0..n).map(|_| log_uniform(&mut rng, -1.0, 1.0)).collect()
}

/// A random substochastic matrix: `s·Σ cₖPₖ` over random permutations.
fn random_substochastic(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    let scale = rng.random_range(0.5..=1.0);
    let terms = rng.random_range(1..=3usize);
    let raw: Vec<f64> = (0..terms).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut m = vec![vec![0.0; n]; n];
    for c in raw {
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        for (i, &j) in perm.iter().enumerate() {
            m[i][j] += scale * c / total;
        }
    }
    m
}

/// A random instance on `n` unit atoms with the `(ℓ¹, ℓ∞)` couple.
///
/// Entries of `f` are log-uniform in `[1e-2, 1e2]` with random signs unless
/// `positivity`. With `k_ordered`, `g = S f` for a random substochastic `S`
/// (signs flipped at random unless `positivity`), accepted only once
/// `K(·, g) ≤ K(·, f)` is verified on the `p`-convexified couple.
pub fn generate_instance(seed: u64, n: usize, p: f64, positivity: bool, k_ordered: bool) -> Result<Instance> {
    if n == 0 {
        return Err(Error::domain("instances need at least one atom"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = random_entries(&mut rng, n, positivity);
    let mut instance = Instance {
        weights: vec![1.0; n],
        f: LatticeVector::new(f.clone())?,
        g: None,
        p: Some(Exponent::Finite(p)),
        couple: Default::default(),
    };
    if !k_ordered {
        instance.g = Some(LatticeVector::new(random_entries(&mut rng, n, positivity))?);
        return Ok(instance);
    }
    let convex = instance.couple()?.convexify(p)?;
    let grid = TGrid::default_grid();
    for _ in 0..64 {
        let s = random_substochastic(&mut rng, n);
        let g: Vec<f64> = s
            .iter()
            .map(|row| {
                let v: f64 = row.iter().zip(&f).map(|(a, b)| a * b).sum();
                if !positivity && rng.random_bool(0.3) { -v } else { v }
            })
            .collect();
        if k_order_dominates(&convex, &f, &g, &grid)? {
            instance.g = Some(LatticeVector::new(g)?);
            return Ok(instance);
        }
    }
    // g = f/2 is always dominated.
    let g: Vec<f64> = f.iter().map(|v| 0.5 * v).collect();
    if !k_order_dominates(&convex, &f, &g, &grid)? {
        return Err(Error::Inconsistent("f/2 is not K-dominated by f".into()));
    }
    instance.g = Some(LatticeVector::new(g)?);
    Ok(instance)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub suite: String,
    pub index: usize,
    pub seed: u64,
    pub n: usize,
    pub p: Option<f64>,
    pub max_ratio: Option<f64>,
    pub violations: usize,
    pub residual: Option<f64>,
    pub runtime_ms: Option<f64>,
    /// `ok`, `violation`, or `error: ...` for module errors.
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub rows: usize,
    pub violations: usize,
    pub errors: usize,
    pub max_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CampaignReport {
    pub config: CampaignConfig,
    pub rows: Vec<ReportRow>,
    pub summary: Summary,
}

impl CampaignReport {
    /// Nonzero iff any row recorded a violation.
    pub fn exit_code(&self) -> i32 {
        i32::from(self.summary.violations > 0)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::Format(e.to_string());
        w.write_record(["suite", "index", "seed", "n", "p", "max_ratio", "violations", "residual", "runtime_ms", "status"])
            .map_err(csv_err)?;
        let num = |v: Option<f64>| v.map(format_float).unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                r.suite.clone(),
                r.index.to_string(),
                r.seed.to_string(),
                r.n.to_string(),
                num(r.p),
                num(r.max_ratio),
                r.violations.to_string(),
                num(r.residual),
                num(r.runtime_ms),
                r.status.clone(),
            ])
            .map_err(csv_err)?;
        }
        let s = &self.summary;
        let status = if s.errors > 0 { format!("errors={}", s.errors) } else { "ok".into() };
        w.write_record([
            "summary".into(),
            s.rows.to_string(),
            self.config.seed.to_string(),
            String::new(),
            String::new(),
            String::new(),
            s.violations.to_string(),
            num(s.max_residual),
            String::new(),
            status,
        ])
        .map_err(csv_err)?;
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// 17 significant digits, period decimal separator.
pub fn format_float(v: f64) -> String {
    if v.is_finite() { format!("{v:.16e}") } else { v.to_string() }
}

/// Run `job` on a pool capped by `CALDERA_THREADS` when it is set.
pub fn with_thread_cap<R: Send>(job: impl FnOnce() -> R + Send) -> R {
    let cap = std::env::var("CALDERA_THREADS").ok().and_then(|v| v.parse::<usize>().ok()).filter(|&k| k > 0);
    match cap.and_then(|k| rayon::ThreadPoolBuilder::new().num_threads(k).build().ok()) {
        Some(pool) => pool.install(job),
        None => job(),
    }
}

struct Outcome {
    max_ratio: Option<f64>,
    violations: usize,
    residual: Option<f64>,
}

pub fn run_campaign(config: &CampaignConfig) -> Result<CampaignReport> {
    config.validate()?;
    let grid = TGrid::parse(&config.t_grid)?;
    let rows: Vec<ReportRow> = with_thread_cap(|| {
        (0..config.instance_count)
            .into_par_iter()
            .map(|index| instance_rows(config, &grid, index))
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .collect()
    });
    let summary = Summary {
        rows: rows.len(),
        violations: rows.iter().map(|r| r.violations).sum(),
        errors: rows.iter().filter(|r| r.status.starts_with("error")).count(),
        max_residual: rows.iter().filter_map(|r| r.residual).reduce(f64::max),
    };
    Ok(CampaignReport { config: config.clone(), rows, summary })
}

fn instance_rows(config: &CampaignConfig, grid: &TGrid, index: usize) -> Vec<ReportRow> {
    let (seed, n) = instance_seed(config.seed, index, config.n_min, config.n_max);
    let mut rows = Vec::new();
    for &suite in &config.suites {
        let ps: Vec<Option<f64>> =
            if suite.uses_p() { config.p_set.iter().map(|&p| Some(p)).collect() } else { vec![None] };
        for p in ps {
            let start = Instant::now();
            let outcome = run_suite(suite, config, grid, seed, n, p);
            let runtime_ms = config.record_runtime.then(|| start.elapsed().as_secs_f64() * 1e3);
            let row = match outcome {
                Ok(o) => ReportRow {
                    suite: suite.name().into(),
                    index,
                    seed,
                    n,
                    p,
                    max_ratio: o.max_ratio,
                    violations: o.violations,
                    residual: o.residual,
                    runtime_ms,
                    status: if o.violations == 0 { "ok".into() } else { "violation".into() },
                },
                Err(e) => ReportRow {
                    suite: suite.name().into(),
                    index,
                    seed,
                    n,
                    p,
                    max_ratio: None,
                    violations: 0,
                    residual: None,
                    runtime_ms,
                    status: format!("error: {e}"),
                },
            };
            rows.push(row);
        }
    }
    rows
}

fn weighted_l1_linf(seed: u64, n: usize) -> Result<Couple> {
    Ok(Couple::l1_linf(MeasureSpace::new(random_weights(seed, n))?))
}

fn run_suite(suite: Suite, config: &CampaignConfig, grid: &TGrid, seed: u64, n: usize, p: Option<f64>) -> Result<Outcome> {
    let p_or_two = p.unwrap_or(2.0);
    match suite {
        Suite::Sandwich | Suite::Claim1 | Suite::Maligranda => {
            let couple = weighted_l1_linf(seed, n)?;
            let inst = generate_instance(seed, n, p_or_two, false, false)?;
            let report = match suite {
                Suite::Sandwich => check_k_d_sandwich(&couple, &inst.f, grid)?,
                Suite::Claim1 => check_claim1(&couple, &inst.f, p_or_two, grid)?,
                _ => check_maligranda(&couple, &inst.f, p_or_two, grid)?,
            };
            let bound_excess = usize::from(report.max_ratio > report.bound * (1.0 + report.tolerance) + report.tolerance);
            Ok(Outcome {
                max_ratio: Some(report.max_ratio),
                violations: report.math_violations() + bound_excess,
                residual: None,
            })
        }
        Suite::Minkowski => {
            let mut violations = 0;
            let mut max_ratio = 0.0_f64;
            for k in 0..config.minkowski_samples {
                let (g, h1, h2) = random_minkowski_triple(seed, k as u64, n)?;
                let r = check_minkowski(&g, &h1, &h2, p_or_two)?;
                violations += r.violations.len();
                max_ratio = max_ratio.max(r.max_excess);
            }
            Ok(Outcome { max_ratio: None, violations, residual: Some(max_ratio.max(0.0)) })
        }
        Suite::LiftHolder | Suite::LiftGreedy => {
            let mut inst = generate_instance(seed, n, p_or_two, false, !config.identity_pairs)?;
            if config.identity_pairs {
                inst.g = Some(inst.f.clone());
            }
            let options = LiftOptions {
                method: if suite == Suite::LiftHolder { LiftMethod::Holder } else { LiftMethod::Greedy },
                alpha: Alpha::Auto,
                audit_samples: config.audit_samples,
                seed,
                t_grid: grid.clone(),
            };
            let result = lift_operator(&inst.couple()?, &inst.f, inst.g()?, p_or_two, &options)?;
            let c = &result.certificates;
            let max_ratio = c.norm_samples.iter().map(|s| s.max_ratio).fold(0.0, f64::max);
            Ok(Outcome {
                max_ratio: Some(max_ratio),
                violations: c.domination_violations + c.norm_violations() + usize::from(!(c.residual_lf_g <= crate::extension::RESIDUAL_TOL)),
                residual: Some(c.residual_lf_g),
            })
        }
        Suite::LatticeProps => {
            let (violations, discrepancy) = lattice_identity_check(seed, n, p_or_two)?;
            Ok(Outcome { max_ratio: None, violations, residual: Some(discrepancy) })
        }
    }
}

/// A random positive `G` and two signed vectors, stream `k` of `seed`.
///
/// Entries have magnitude at most 1 (log-uniform down to `1e-4`), so the
/// absolute slack of [`check_minkowski`] sits well above rounding. Every
/// fourth triple has `h₂ = λh₁`, which makes the inequality tight for `λ > 0`.
pub fn random_minkowski_triple(seed: u64, k: u64, n: usize) -> Result<(MatrixOperator, Vec<f64>, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k + 2);
    let entries = nalgebra::DMatrix::from_fn(n, n, |_, _| {
        if rng.random_bool(0.3) { 0.0 } else { log_uniform(&mut rng, -4.0, 0.0) }
    });
    let g = MatrixOperator::new(entries, MeasureSpace::counting(n)?)?;
    let vector = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..n)
            .map(|_| {
                let m = if rng.random_bool(0.2) { 0.0 } else { log_uniform(rng, -4.0, 0.0) };
                if rng.random::<bool>() { m } else { -m }
            })
            .collect()
    };
    let h1 = vector(&mut rng);
    let h2 = if k % 4 == 3 {
        let lambda = rng.random_range(-1.0..=1.0);
        h1.iter().map(|v| lambda * v).collect()
    } else {
        vector(&mut rng)
    };
    Ok((g, h1, h2))
}

fn max_discrepancy(a: &LatticeVector, b: &LatticeVector) -> (usize, f64) {
    a.iter().zip(b.iter()).fold((0, 0.0_f64), |(bad, worst), (x, y)| {
        let scale = x.abs().max(y.abs()).max(1e-300);
        (bad + usize::from(!eq_tol(*x, *y)), worst.max((x - y).abs() / scale))
    })
}

/// Splitting, shift, localization and power identities for least upper
/// bounds on one random family. Returns (mismatched entries, worst
/// relative discrepancy).
pub fn lattice_identity_check(seed: u64, n: usize, p: f64) -> Result<(usize, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    let m = rng.random_range(1..=6usize);
    let family: Vec<LatticeVector> =
        (0..m).map(|_| LatticeVector::new(random_entries(&mut rng, n, false))).collect::<Result<_>>()?;
    let reference = lub(&family)?;
    let mask: Vec<bool> = (0..n).map(|_| rng.random::<bool>()).collect();
    let mut checks = vec![
        max_discrepancy(&lub_by_split(&family, &mask)?, &reference),
        max_discrepancy(&lub_by_nonnegative_shift(&family, rng.random_range(0..m))?, &reference),
    ];

    let f0: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.25) { 0.0 } else { log_uniform(&mut rng, -2.0, 2.0) }).collect();
    let f0 = LatticeVector::new(f0)?;
    let local: Vec<LatticeVector> = (0..m)
        .map(|_| LatticeVector::new(f0.iter().map(|b| b * rng.random_range(0.0..=3.0)).collect()))
        .collect::<Result<_>>()?;
    checks.push(max_discrepancy(&lub_by_localization(&local, &f0)?, &lub(&local)?));

    let magnitudes: Vec<LatticeVector> = family.iter().map(|a| a.abs()).collect();
    checks.push(max_discrepancy(&lub_of_powers(&magnitudes, p)?, &lub(&magnitudes)?.abs_pow(p)));

    let support_mismatch = family.iter().filter(|a| a.abs_pow(p).support() != a.support()).count();
    Ok(checks.into_iter().fold((support_mismatch, 0.0), |(b, w), (b2, w2)| (b + b2, w.max(w2))))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(suites: Vec<Suite>, count: usize) -> CampaignConfig {
        CampaignConfig {
            seed: 11,
            instance_count: count,
            n_min: 1,
            n_max: 8,
            p_set: vec![1.5, 2.0, 3.0],
            t_grid: default_t_grid(),
            suites,
            audit_samples: 200,
            minkowski_samples: 10,
            identity_pairs: false,
            record_runtime: false,
        }
    }

    #[test]
    fn generator_is_deterministic_and_positive() {
        let a = generate_instance(3, 6, 2.0, true, false).unwrap();
        assert_eq!(a, generate_instance(3, 6, 2.0, true, false).unwrap());
        assert!(a.f.iter().all(|&v| v > 0.0));
        assert!(a.g.as_ref().unwrap().iter().all(|&v| v > 0.0));
        assert!(generate_instance(3, 0, 2.0, true, false).is_err());
    }

    #[test]
    fn generated_pairs_are_k_ordered() {
        for seed in 0..30 {
            let inst = generate_instance(seed, 1 + (seed as usize % 9), 1.5, false, true).unwrap();
            let convex = inst.couple().unwrap().convexify(1.5).unwrap();
            assert!(k_order_dominates(&convex, &inst.f, inst.g().unwrap(), &TGrid::default_grid()).unwrap());
        }
    }

    #[test]
    fn config_validation() {
        let mut c = config(vec![Suite::Sandwich], 1);
        c.n_max = 23;
        assert!(matches!(c.validate(), Err(Error::Capacity { .. })));
        c.suites = vec![Suite::Minkowski];
        assert!(c.validate().is_ok());
        c.p_set = vec![1.0];
        assert!(c.validate().is_err());
        let parsed = CampaignConfig::from_toml(
            "seed = 1\ninstance_count = 2\nn_min = 1\nn_max = 4\np_set = [2.0]\nsuites = [\"claim1\", \"lift-greedy\"]\n",
        )
        .unwrap();
        assert_eq!(parsed.suites, vec![Suite::Claim1, Suite::LiftGreedy]);
        assert!(CampaignConfig::from_toml("seed = 1\nbogus = 2").is_err());
    }

    #[test]
    fn empty_suites_give_empty_report() {
        let report = run_campaign(&config(vec![], 5)).unwrap();
        assert!(report.rows.is_empty());
        assert_eq!(report.exit_code(), 0);
    }

    #[test]
    fn sandwich_campaign_is_clean_and_deterministic() {
        let c = config(vec![Suite::Sandwich], 100);
        let report = run_campaign(&c).unwrap();
        assert_eq!(report.rows.len(), 100);
        assert_eq!(report.summary.violations, 0);
        assert_eq!(report.summary.errors, 0);
        let mut a = Vec::new();
        let mut b = Vec::new();
        report.write_csv(&mut a).unwrap();
        run_campaign(&c).unwrap().write_csv(&mut b).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn identity_lifts_have_zero_residual() {
        let mut c = config(vec![Suite::LiftHolder], 10);
        c.identity_pairs = true;
        let report = run_campaign(&c).unwrap();
        assert_eq!(report.summary.errors, 0, "{:?}", report.rows);
        for r in &report.rows {
            assert!(r.residual.unwrap() < 1e-14, "{r:?}");
        }
        assert_eq!(report.exit_code(), 0);
    }

    #[test]
    fn every_suite_runs_cleanly() {
        let c = config(
            vec![Suite::Claim1, Suite::Maligranda, Suite::Minkowski, Suite::LiftHolder, Suite::LiftGreedy, Suite::LatticeProps],
            6,
        );
        let report = run_campaign(&c).unwrap();
        assert_eq!(report.rows.len(), 6 * 6 * 3);
        assert_eq!(report.summary.errors, 0, "{:?}", report.rows.iter().find(|r| r.status.starts_with("error")));
        assert_eq!(report.summary.violations, 0, "{:?}", report.rows.iter().find(|r| r.violations > 0));
    }

    #[test]
    fn csv_uses_seventeen_digits() {
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(2.0), "2.0000000000000000e0");
    }
}
