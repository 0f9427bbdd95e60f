//! Lifting a base operator to the `p`-convexified couple.
//!
//! Given `f, g` K-ordered in `(X₀^(p), X₁^(p))`, a positive `T` on the base
//! couple with `T(α|f|^p) = |g|^p` yields the sublinear majorant
//! `H(h) = (T(α|h|^p))^{1/p}` with `H(f) = |g|`. The functional
//! `λf ↦ λg` is dominated by `H` on `span{f}`; extending it row by row to
//! a linear `L` with `|Lh| ≤ H(h)` gives `Lf = g` and
//! `‖L‖_{X_j^(p)} ≤ (α‖T‖_{X_j})^{1/p}`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kfunc::{k_order_violation, TGrid};
use crate::lattice::{weighted_lr_norm, Couple, Exponent, LatticeVector, NormSpec};
use crate::majorization::{
    construct_positive_operator, first_prefix_violation, operator_norm_1, operator_norm_inf, MatrixOperator,
    PREFIX_TOL,
};

/// Slack on `|Lh| ≤ H(h)` in audits.
pub const DOMINATION_TOL: f64 = 1e-9;
/// Slack on sampled norm ratios against the lift bound.
pub const NORM_RATIO_TOL: f64 = 1e-9;
/// Largest accepted relative residual `‖Lf − g‖∞ / ‖g‖∞`.
pub const RESIDUAL_TOL: f64 = 1e-8;
/// Newton iteration cap per interval endpoint in the greedy extension.
pub const ENDPOINT_ITERATIONS: usize = 10_000;
/// Largest tolerated inversion of a feasible interval.
pub const INTERVAL_TOL: f64 = 1e-7;
/// Rows with `|gᵢ| ≥ (1 − TIGHT_REL)·q(f)` are extended in closed form.
pub const TIGHT_REL: f64 = 1e-6;
/// Endpoint searches stay within this distance of the origin of the span.
const SEARCH_RADIUS: f64 = 1e6;

/// `H(h) = (T(α|h|^p))^{1/p}` for a positive `T`.
#[derive(Debug, Clone, Serialize)]
pub struct SublinearMajorant {
    t: MatrixOperator,
    alpha: f64,
    p: f64,
}

impl SublinearMajorant {
    pub fn new(t: MatrixOperator, alpha: f64, p: f64) -> Result<Self> {
        if !t.is_positive() {
            return Err(Error::domain("the majorant needs a positive operator"));
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::domain(format!("alpha must be positive, got {alpha}")));
        }
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::domain(format!("p must lie in (1, inf), got {p}")));
        }
        Ok(Self { t, alpha, p })
    }

    /// `α = 2^{p−1}`.
    pub fn default_alpha(p: f64) -> f64 {
        2f64.powf(p - 1.0)
    }

    pub fn operator(&self) -> &MatrixOperator {
        &self.t
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn n(&self) -> usize {
        self.t.n()
    }

    /// The `i`-th coordinate of `H` as a scalar sublinear functional.
    pub fn row(&self, i: usize) -> RowMajorant {
        RowMajorant { weights: self.t.row(i).iter().map(|v| self.alpha * v).collect(), p: self.p }
    }

    pub fn apply(&self, h: &[f64]) -> Result<LatticeVector> {
        self.t.space().check(h)?;
        Ok(LatticeVector::from_vec_unchecked(self.apply_unchecked(h)))
    }

    fn apply_unchecked(&self, h: &[f64]) -> Vec<f64> {
        (0..self.n()).map(|i| self.row_value(i, h)).collect()
    }

    fn row_value(&self, i: usize, h: &[f64]) -> f64 {
        let n = self.n();
        let row = self.t.entries().row(i);
        let m = h.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
        if m == 0.0 {
            return 0.0;
        }
        let s: f64 = (0..n).map(|j| self.alpha * row[j] * (h[j].abs() / m).powf(self.p)).sum();
        m * s.powf(1.0 / self.p)
    }
}

/// `q(x) = (Σ aⱼ|xⱼ|^p)^{1/p}` with `aⱼ ≥ 0`: a weighted `ℓ^p` seminorm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowMajorant {
    pub weights: Vec<f64>,
    pub p: f64,
}

impl RowMajorant {
    pub fn value(&self, x: &[f64]) -> f64 {
        weighted_lr_norm(&self.weights, x, Exponent::Finite(self.p))
    }

    fn gradient(&self, x: &[f64], q: f64) -> Vec<f64> {
        if q == 0.0 {
            return vec![0.0; x.len()];
        }
        x.iter()
            .zip(&self.weights)
            .map(|(xj, a)| a * (xj.abs() / q).powf(self.p - 1.0) * xj.signum())
            .collect()
    }

    /// `∇²q = ((p−1)/q)·(diag(aⱼ(|xⱼ|/q)^{p−2}) − ∇q∇qᵀ)`.
    fn hessian_parts(&self, x: &[f64], q: f64) -> (Vec<f64>, f64) {
        let diag = x
            .iter()
            .zip(&self.weights)
            .map(|(xj, a)| if *a == 0.0 { 0.0 } else { a * (xj.abs() / q).max(1e-8).powf(self.p - 2.0) })
            .collect();
        (diag, (self.p - 1.0) / q)
    }
}

/// Per-atom failures of a pointwise inequality.
#[derive(Debug, Clone, Serialize)]
pub struct PointwiseReport {
    pub check: &'static str,
    pub samples: usize,
    /// `(sample index, atom, lhs, rhs)`.
    pub violations: Vec<(usize, usize, f64, f64)>,
    pub max_excess: f64,
}

impl PointwiseReport {
    fn new(check: &'static str) -> Self {
        Self { check, samples: 0, violations: Vec::new(), max_excess: f64::NEG_INFINITY }
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    fn record(&mut self, sample: usize, atom: usize, lhs: f64, rhs: f64, slack: f64) {
        self.max_excess = self.max_excess.max(lhs - rhs);
        if lhs > rhs + slack {
            self.violations.push((sample, atom, lhs, rhs));
        }
    }

    fn merge(mut self, other: Self) -> Self {
        self.samples += other.samples;
        self.violations.extend(other.violations);
        self.max_excess = self.max_excess.max(other.max_excess);
        self
    }

    pub fn into_result(self) -> Result<Self> {
        match self.violations.first() {
            None => Ok(self),
            Some(&(s, i, l, r)) => Err(Error::PropertyViolation {
                check: self.check,
                detail: format!("{} violation(s); first: sample {s}, atom {i}: {l} > {r}", self.violations.len()),
            }),
        }
    }
}

fn g_power_root(g: &MatrixOperator, h: &[f64], p: f64) -> Vec<f64> {
    let powered: Vec<f64> = h.iter().map(|v| v.abs().powf(p)).collect();
    g.apply_unchecked(&powered).iter().map(|v| v.max(0.0).powf(1.0 / p)).collect()
}

/// `(G|h₁+h₂|^p)^{1/p} ≤ (G|h₁|^p)^{1/p} + (G|h₂|^p)^{1/p}` atom by atom,
/// with absolute slack `1e-12`.
pub fn check_minkowski(g: &MatrixOperator, h1: &[f64], h2: &[f64], p: f64) -> Result<PointwiseReport> {
    if !g.is_positive() {
        return Err(Error::domain("Minkowski check needs a positive operator"));
    }
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::domain(format!("p must lie in (1, inf), got {p}")));
    }
    g.space().check(h1)?;
    g.space().check(h2)?;
    let sum: Vec<f64> = h1.iter().zip(h2).map(|(a, b)| a + b).collect();
    let lhs = g_power_root(g, &sum, p);
    let r1 = g_power_root(g, h1, p);
    let r2 = g_power_root(g, h2, p);
    let mut report = PointwiseReport::new("Minkowski inequality for positive operators");
    report.samples = 1;
    for i in 0..lhs.len() {
        report.record(0, i, lhs[i], r1[i] + r2[i], 1e-12);
    }
    Ok(report)
}

/// Sample `H(λh) = |λ|H(h)` and `H(h₁+h₂) ≤ H(h₁)+H(h₂)`.
pub fn check_sublinear(h: &SublinearMajorant, sample_count: usize, seed: u64) -> PointwiseReport {
    let n = h.n();
    (0..sample_count)
        .into_par_iter()
        .map(|k| {
            let mut rng = sample_rng(seed, k as u64);
            let draw = |rng: &mut ChaCha8Rng| (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect::<Vec<f64>>();
            let (x, y) = (draw(&mut rng), draw(&mut rng));
            let lambda = match k % 4 {
                0 => -1.0,
                1 => 0.0,
                _ => rng.random_range(-10.0..=10.0),
            };
            let mut report = PointwiseReport::new("sublinearity of H");
            report.samples = 1;
            let hx = h.apply_unchecked(&x);
            let scaled: Vec<f64> = x.iter().map(|v| lambda * v).collect();
            let hs = h.apply_unchecked(&scaled);
            let hy = h.apply_unchecked(&y);
            let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
            let hsum = h.apply_unchecked(&sum);
            for i in 0..n {
                let target = lambda.abs() * hx[i];
                let rel = 1e-12 * target.abs().max(hs[i].abs());
                report.record(k, i, (hs[i] - target).abs(), 0.0, rel);
                report.record(k, i, hsum[i], hx[i] + hy[i], 1e-12);
            }
            report
        })
        .reduce(|| PointwiseReport::new("sublinearity of H"), PointwiseReport::merge)
}

/// Closed-form dominated extension of `λf ↦ λgᵢ` for row `i`, by Hölder
/// attainment: `ℓⱼ = c·aⱼ|fⱼ|^{p−1}sign(fⱼ) / Σⱼ aⱼ|fⱼ|^p`.
///
/// `c` is `gᵢ` clamped to `[−Hᵢ(f), Hᵢ(f)]`, so the result is dominated
/// exactly even when `T(α|f|^p)` matches `|g|^p` only to rounding.
pub fn holder_extension_row(h: &SublinearMajorant, f: &[f64], g_i: f64, i: usize) -> Result<Vec<f64>> {
    h.t.space().check(f)?;
    if i >= h.n() {
        return Err(Error::domain(format!("row {i} out of range")));
    }
    let n = h.n();
    if g_i == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let q = h.row(i);
    let scale = f.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
    // Work with f / max|f| to keep the power sums in range.
    let s: f64 = if scale > 0.0 {
        q.weights.iter().zip(f).map(|(a, v)| a * (v.abs() / scale).powf(q.p)).sum()
    } else {
        0.0
    };
    if s == 0.0 {
        return Err(Error::Infeasible(format!("row {i}: g_i = {g_i} but H_i(f) = 0")));
    }
    let hf = scale * s.powf(1.0 / q.p);
    let c = g_i.clamp(-hf, hf);
    Ok(q.weights
        .iter()
        .zip(f)
        .map(|(a, v)| c * a * (v.abs() / scale).powf(q.p - 1.0) * v.signum() / (scale * s))
        .collect())
}

/// Orthonormal basis whose first vector is `f/‖f‖₂`, completed by
/// Gram–Schmidt over the standard directions (skipping the one most aligned
/// with `f`).
pub fn completing_basis(f: &[f64]) -> DMatrix<f64> {
    let n = f.len();
    let skip = (0..n).fold(0, |best, j| if f[j].abs() > f[best].abs() { j } else { best });
    let mut basis = DMatrix::<f64>::zeros(n, n);
    let first = DVector::from_column_slice(f);
    basis.set_column(0, &(&first / first.norm()));
    let mut k = 1;
    for j in (0..n).filter(|&j| j != skip) {
        let mut v = DVector::<f64>::zeros(n);
        v[j] = 1.0;
        for _ in 0..2 {
            for m in 0..k {
                let b = basis.column(m).clone_owned();
                let proj = b.dot(&v);
                v -= &(b * proj);
            }
        }
        let nrm = v.norm();
        basis.set_column(k, &(v / nrm));
        k += 1;
    }
    basis
}

/// `inf_{β} q(z + Bβ) + s·⟨c, β⟩` by damped Newton with backtracking.
fn minimize_over_subspace(q: &RowMajorant, z: &[f64], basis: &DMatrix<f64>, dims: usize, coeffs: &[f64], sign: f64) -> f64 {
    let n = z.len();
    let point = |beta: &DVector<f64>| -> Vec<f64> {
        (0..n).map(|r| z[r] + (0..dims).map(|m| basis[(r, m)] * beta[m]).sum::<f64>()).collect()
    };
    let objective = |beta: &DVector<f64>| -> f64 {
        q.value(&point(beta)) + sign * (0..dims).map(|m| coeffs[m] * beta[m]).sum::<f64>()
    };
    let sub = basis.columns(0, dims);
    let mut beta = DVector::<f64>::zeros(dims);
    let mut value = objective(&beta);

    for _ in 0..ENDPOINT_ITERATIONS {
        let x = point(&beta);
        let qx = q.value(&x);
        let gq = q.gradient(&x, qx);
        let grad = DVector::from_iterator(dims, (0..dims).map(|m| {
            (0..n).map(|r| sub[(r, m)] * gq[r]).sum::<f64>() + sign * coeffs[m]
        }));
        let mut direction = -grad.clone();
        if qx > 0.0 {
            let (diag, factor) = q.hessian_parts(&x, qx);
            let bg = sub.transpose() * DVector::from_column_slice(&gq);
            let mut hess = DMatrix::<f64>::zeros(dims, dims);
            for a in 0..dims {
                for b in 0..=a {
                    let s: f64 = (0..n).map(|r| sub[(r, a)] * diag[r] * sub[(r, b)]).sum();
                    let v = factor * (s - bg[a] * bg[b]);
                    hess[(a, b)] = v;
                    hess[(b, a)] = v;
                }
            }
            let ridge = 1e-12 * (hess.trace() / dims as f64).abs().max(1e-300);
            for a in 0..dims {
                hess[(a, a)] += ridge;
            }
            if let Some(chol) = hess.cholesky() {
                let newton = -chol.solve(&grad);
                if newton.iter().all(|v| v.is_finite()) && newton.dot(&grad) < 0.0 {
                    direction = newton;
                }
            }
        }
        let slope = direction.dot(&grad);
        if !(slope < 0.0) {
            break;
        }
        // The infimum can sit at infinity (tight domination, null directions
        // of q); stay inside a ball so the value stays well conditioned.
        let mut step = max_step(&beta, &direction, SEARCH_RADIUS).min(1.0);
        if step <= 0.0 {
            break;
        }
        let mut improved = false;
        for _ in 0..60 {
            let trial = &beta + &direction * step;
            let tv = objective(&trial);
            if tv <= value + 1e-4 * step * slope {
                if tv < value {
                    beta = trial;
                    value = tv;
                    improved = true;
                }
                break;
            }
            step *= 0.5;
        }
        if !improved || -slope <= 1e-30 * (1.0 + value.abs()) {
            break;
        }
    }
    value
}

fn max_step(beta: &DVector<f64>, d: &DVector<f64>, radius: f64) -> f64 {
    let dn = d.norm();
    if !(dn.is_finite() && dn > 0.0) {
        return 0.0;
    }
    let (b, c) = (beta.dot(d) / dn, beta.dot(beta) - radius * radius);
    if c >= 0.0 {
        return 0.0;
    }
    (-b + (b * b - c).sqrt()) / dn
}

/// Dominated extension of `λf ↦ λgᵢ` built one direction at a time: on
/// each new direction `z` the value is the midpoint of the feasible interval
/// `[sup_y ℓ(y) − q(y−z), inf_y q(y+z) − ℓ(y)]` over the current span.
pub fn greedy_hb_extension_row(q: &RowMajorant, f: &[f64], g_i: f64) -> Result<Vec<f64>> {
    let n = f.len();
    if q.weights.len() != n {
        return Err(Error::Dimension { expected: q.weights.len(), found: n });
    }
    let qf = q.value(f);
    if f.iter().all(|&v| v == 0.0) {
        return if g_i == 0.0 { Ok(vec![0.0; n]) } else { Err(Error::Infeasible("f = 0 but g_i != 0".into())) };
    }
    if g_i.abs() > qf * (1.0 + 1e-9) {
        return Err(Error::Infeasible(format!("|g_i| = {} exceeds q(f) = {qf}", g_i.abs())));
    }
    if g_i != 0.0 && g_i.abs() >= qf * (1.0 - TIGHT_REL) {
        // Tight row: for every y the ray s ↦ q(z + y + s·σf) − ℓ(y + s·σf)
        // is convex with limit ∇q(σf)·(z + y) − ℓ(y), so every interval
        // collapses to {∇q(σf)·z}. Extend at the tight value σq(f), then
        // scale by |gᵢ|/q(f) ≤ 1.
        return Ok(q.gradient(f, qf).into_iter().map(|v| v * g_i / qf).collect());
    }
    let basis = completing_basis(f);
    let fnorm: f64 = f.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut coeffs = vec![g_i.clamp(-qf, qf) / fnorm];
    for k in 1..n {
        let z: Vec<f64> = basis.column(k).iter().copied().collect();
        let upper = minimize_over_subspace(q, &z, &basis, k, &coeffs, -1.0);
        // sup_y ℓ(y) − q(y−z) = −inf_y q(y+z) + ℓ(y), using evenness of q.
        let lower = -minimize_over_subspace(q, &z, &basis, k, &coeffs, 1.0);
        let bracket = q.value(&z);
        if lower > upper + INTERVAL_TOL * bracket.max(1e-300) {
            return Err(Error::NumericalFailure {
                context: format!("empty extension interval on direction {k}"),
                best: lower - upper,
                gap: INTERVAL_TOL * bracket,
            });
        }
        coeffs.push(0.5 * (lower.max(-bracket) + upper.min(bracket)));
    }
    Ok((0..n).map(|r| (0..n).map(|k| basis[(r, k)] * coeffs[k]).sum()).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LiftMethod {
    Holder,
    Greedy,
}

impl std::str::FromStr for LiftMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "holder" => Ok(LiftMethod::Holder),
            "greedy" => Ok(LiftMethod::Greedy),
            other => Err(Error::Format(format!("unknown lift method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Alpha {
    /// `2^{p−1}`.
    Auto,
    Value(f64),
}

impl std::str::FromStr for Alpha {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Alpha::Auto),
            other => other
                .parse()
                .map(Alpha::Value)
                .map_err(|_| Error::Format(format!("alpha must be 'auto' or a number, got {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LiftOptions {
    pub method: LiftMethod,
    pub alpha: Alpha,
    pub audit_samples: usize,
    pub seed: u64,
    pub t_grid: TGrid,
}

impl Default for LiftOptions {
    fn default() -> Self {
        Self { method: LiftMethod::Holder, alpha: Alpha::Auto, audit_samples: 10_000, seed: 0, t_grid: TGrid::default_grid() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NormRatioSample {
    /// Display form of the convexified norm.
    pub norm: String,
    pub max_ratio: f64,
    /// `(α‖T‖_{X_j})^{1/p}` for the computed `T`.
    pub operator_bound: f64,
    /// `(αC)^{1/p}` from the couple's Calderón constant.
    pub theorem_bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LiftCertificates {
    /// `‖Lf − g‖∞ / ‖g‖∞` (absolute when `g = 0`).
    pub residual_lf_g: f64,
    pub audit_samples: usize,
    pub domination_violations: usize,
    /// Largest `|Lh|ᵢ − Hᵢ(h)` seen.
    pub max_domination_excess: f64,
    pub norm_samples: Vec<NormRatioSample>,
}

impl LiftCertificates {
    pub fn norm_violations(&self) -> usize {
        self.norm_samples
            .iter()
            .filter(|s| s.max_ratio > s.operator_bound.min(s.theorem_bound) + NORM_RATIO_TOL)
            .count()
    }

    pub fn passed(&self) -> bool {
        self.residual_lf_g <= RESIDUAL_TOL && self.domination_violations == 0 && self.norm_violations() == 0
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LiftResult {
    pub l: MatrixOperator,
    pub method: LiftMethod,
    pub alpha: f64,
    pub p: f64,
    pub majorant: SublinearMajorant,
    pub certificates: LiftCertificates,
}

/// Build `L` with `Lf = g` on `(X₀^(p), X₁^(p))` for the base couple
/// `(ℓ¹, ℓ∞)` on uniform atoms, then audit it.
pub fn lift_operator(couple: &Couple, f: &[f64], g: &[f64], p: f64, options: &LiftOptions) -> Result<LiftResult> {
    let space = &couple.space;
    space.check(f)?;
    space.check(g)?;
    if !couple.is_l1_linf() || !space.is_uniform() {
        return Err(Error::domain("lift needs the (l1, linf) base couple on uniform atoms"));
    }
    let convex = couple.convexify(p)?;
    let alpha = match options.alpha {
        Alpha::Auto => SublinearMajorant::default_alpha(p),
        Alpha::Value(a) if a.is_finite() && a > 0.0 => a,
        Alpha::Value(a) => return Err(Error::domain(format!("alpha must be positive, got {a}"))),
    };
    if let Some(t) = k_order_violation(&convex, f, g, &options.t_grid)? {
        return Err(Error::OrderViolation { t, detail: "K(t,g) > K(t,f) on the convexified couple".into() });
    }

    let n = space.len();
    let powered_f: Vec<f64> = f.iter().map(|v| alpha * v.abs().powf(p)).collect();
    let powered_g: Vec<f64> = g.iter().map(|v| v.abs().powf(p)).collect();
    let t = if g.iter().all(|&v| v == 0.0) {
        MatrixOperator::new(DMatrix::zeros(n, n), space.clone())?
    } else {
        if let Some(k) = first_prefix_violation(&powered_f, &powered_g, PREFIX_TOL) {
            return Err(Error::OrderViolation {
                t: k as f64 * space.weights()[0],
                detail: format!("|g|^p is not K-dominated by alpha|f|^p (alpha = {alpha})"),
            });
        }
        construct_positive_operator(space, &powered_f, &powered_g)?.operator
    };
    let majorant = SublinearMajorant::new(t, alpha, p)?;

    let rows = (0..n)
        .into_par_iter()
        .map(|i| {
            match options.method {
                LiftMethod::Holder => holder_extension_row(&majorant, f, g[i], i),
                LiftMethod::Greedy => greedy_hb_extension_row(&majorant.row(i), f, g[i]),
            }
            .map_err(|e| e.at_row(i))
        })
        .collect::<Result<Vec<_>>>()?;
    let l = MatrixOperator::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]), space.clone())?;
    let mut result = LiftResult {
        l,
        method: options.method,
        alpha,
        p,
        majorant,
        certificates: LiftCertificates {
            residual_lf_g: f64::NAN,
            audit_samples: 0,
            domination_violations: 0,
            max_domination_excess: 0.0,
            norm_samples: Vec::new(),
        },
    };
    result.certificates = verify_lift(&result, &result.majorant, f, g, &convex, options.audit_samples, options.seed)?;
    Ok(result)
}

fn sample_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Audit probe `k`: uniform noise, perturbations of `±f`, or sparse vectors.
fn audit_probe(f: &[f64], seed: u64, k: usize) -> Vec<f64> {
    let n = f.len();
    let mut rng = sample_rng(seed, k as u64);
    let fmax = f.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
    match k % 4 {
        0 => (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect(),
        1 => {
            let eps = 10f64.powf(rng.random_range(-9.0..=-1.0)) * fmax.max(1.0);
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            f.iter().map(|v| sign * v + eps * rng.random_range(-1.0..=1.0)).collect()
        }
        2 => {
            let lambda = rng.random_range(-3.0..=3.0);
            let mu = rng.random_range(-1.0..=1.0) * fmax.max(1.0);
            f.iter().map(|v| lambda * v + mu * rng.random_range(-1.0..=1.0)).collect()
        }
        _ => {
            let j = rng.random_range(0..n);
            let mut h = vec![0.0; n];
            h[j] = rng.random_range(-1.0..=1.0) * fmax.max(1.0);
            if n > 1 && rng.random::<bool>() {
                let j2 = rng.random_range(0..n);
                h[j2] += rng.random_range(-1.0..=1.0) * fmax.max(1.0);
            }
            h
        }
    }
}

/// Recompute the residual, domination and norm-ratio certificates of a lift.
pub fn verify_lift(
    result: &LiftResult,
    majorant: &SublinearMajorant,
    f: &[f64],
    g: &[f64],
    couple_p: &Couple,
    samples: usize,
    seed: u64,
) -> Result<LiftCertificates> {
    let l = &result.l;
    let lf = l.apply(f)?;
    let gmax = g.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
    let err = lf.iter().zip(g).fold(0.0_f64, |a, (x, y)| a.max((x - y).abs()));
    let residual_lf_g = if gmax > 0.0 { err / gmax } else { err };

    let norms = [couple_p.norm0.clone(), couple_p.norm1.clone()];
    let t_norms = [operator_norm_1(majorant.operator()), operator_norm_inf(majorant.operator())];
    let c = couple_p.c_constant.unwrap_or(1.0);
    let p = majorant.p();
    let space = &couple_p.space;
    let n = space.len();

    struct Acc {
        violations: usize,
        excess: f64,
        ratios: [f64; 2],
    }
    let acc = (0..samples)
        .into_par_iter()
        .map(|k| {
            let h = audit_probe(f, seed, k);
            let lh = l.apply_unchecked(&h);
            let hmax = h.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
            let hh = majorant.apply_unchecked(&h);
            let mut a = Acc { violations: 0, excess: f64::NEG_INFINITY, ratios: [0.0; 2] };
            for i in 0..n {
                let row_l1: f64 = (0..n).map(|j| l.entries()[(i, j)].abs()).sum();
                let rounding = 1e-12 * row_l1 * hmax;
                let excess = lh[i].abs() - hh[i];
                a.excess = a.excess.max(excess);
                if excess > DOMINATION_TOL * hh[i] + rounding {
                    a.violations += 1;
                }
            }
            for (j, spec) in norms.iter().enumerate() {
                let denom = spec.norm_unchecked(space.weights(), &h);
                if denom > 0.0 {
                    a.ratios[j] = spec.norm_unchecked(space.weights(), &lh) / denom;
                }
            }
            a
        })
        .reduce(
            || Acc { violations: 0, excess: f64::NEG_INFINITY, ratios: [0.0; 2] },
            |x, y| Acc {
                violations: x.violations + y.violations,
                excess: x.excess.max(y.excess),
                ratios: [x.ratios[0].max(y.ratios[0]), x.ratios[1].max(y.ratios[1])],
            },
        );

    let norm_samples = norms
        .iter()
        .zip(t_norms)
        .zip(acc.ratios)
        .map(|((spec, tn), ratio): ((&NormSpec, f64), f64)| NormRatioSample {
            norm: spec.to_string(),
            max_ratio: ratio,
            operator_bound: (result.alpha * tn).powf(1.0 / p),
            theorem_bound: (result.alpha * c).powf(1.0 / p),
        })
        .collect();
    Ok(LiftCertificates {
        residual_lf_g,
        audit_samples: samples,
        domination_violations: acc.violations,
        max_domination_excess: acc.excess,
        norm_samples,
    })
}
