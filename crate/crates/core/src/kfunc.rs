//! K- and D-functionals of a couple and the inequalities relating them.
//!
//! `K(t,f) = inf{‖a₀‖₀ + t‖a₁‖₁ : f = a₀ + a₁}` and `D` is the same
//! infimum over disjointly supported decompositions. On lattice couples the
//! K-infimum is attained by a sign-compatible split with `|a₀| ≤ |f|`,
//! which turns it into a box-constrained convex problem (see [`crate::solver`]).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{Couple, Exponent, LatticeVector, MeasureSpace};
use crate::majorization::weak_submajorizes_tol;
use crate::solver;

/// Largest `n` for exhaustive D evaluation.
pub const D_EXACT_CAP: usize = 22;
/// Relative tolerance of the K/D sandwich and Claim-type checks.
pub const SANDWICH_TOL: f64 = 1e-9;
/// Combined tolerance when both sides of a check come from the K solver.
pub const SOLVER_CHECK_TOL: f64 = 2e-6;
/// Relative slack allowed in K-order comparisons.
pub const ORDER_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FunctionalKind {
    K,
    D,
}

impl std::str::FromStr for FunctionalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "K" | "k" => Ok(FunctionalKind::K),
            "D" | "d" => Ok(FunctionalKind::D),
            other => Err(Error::Format(format!("unknown functional kind {other:?}"))),
        }
    }
}

/// `f = a0 + a1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decomposition {
    pub a0: LatticeVector,
    pub a1: LatticeVector,
}

impl Decomposition {
    pub fn reproduces(&self, f: &[f64]) -> bool {
        self.a0
            .iter()
            .zip(self.a1.iter())
            .zip(f)
            .all(|((a, b), v)| (a + b - v).abs() <= 1e-12 * v.abs().max(1e-300) + 1e-300)
    }

    pub fn is_disjoint(&self) -> bool {
        self.a0.iter().zip(self.a1.iter()).all(|(a, b)| a * b == 0.0)
    }

    /// Split along a set `E`: `a0 = fχ_E`, `a1 = fχ_{Ω∖E}`.
    pub fn from_mask(f: &[f64], mask: &[bool]) -> Self {
        let a0 = f.iter().zip(mask).map(|(&v, &m)| if m { v } else { 0.0 }).collect();
        let a1 = f.iter().zip(mask).map(|(&v, &m)| if m { 0.0 } else { v }).collect();
        Self { a0: LatticeVector::from_vec_unchecked(a0), a1: LatticeVector::from_vec_unchecked(a1) }
    }

    /// Sign-compatible split with `|a0| = x0`.
    fn from_magnitudes(f: &[f64], x0: &[f64]) -> Self {
        let a0: Vec<f64> = f.iter().zip(x0).map(|(v, x)| x.min(v.abs()).copysign(*v)).collect();
        let a1 = f.iter().zip(&a0).map(|(v, a)| v - a).collect();
        Self { a0: LatticeVector::from_vec_unchecked(a0), a1: LatticeVector::from_vec_unchecked(a1) }
    }
}

/// Output of [`k_numeric`]: an upper bound on `K` with a certified gap.
#[derive(Debug, Clone, Serialize)]
pub struct KValue {
    pub value: f64,
    pub gap: f64,
    pub decomposition: Decomposition,
}

impl KValue {
    /// Certified lower bound on the true value.
    pub fn lower(&self) -> f64 {
        (self.value - self.gap).max(0.0)
    }
}

fn check_t(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("t must be positive and finite, got {t}")))
    }
}

/// `K(t, f; ℓ¹(w), ℓ∞)` as the integral of the weighted decreasing
/// rearrangement, `∫₀ᵗ f*`, with the matching truncation split.
pub fn k_exact_l1_linf(space: &MeasureSpace, f: &[f64], t: f64) -> Result<(f64, Decomposition)> {
    check_t(t)?;
    space.check(f)?;
    let w = space.weights();
    let mut order: Vec<usize> = (0..f.len()).collect();
    order.sort_by(|&i, &j| f[j].abs().partial_cmp(&f[i].abs()).unwrap().then(i.cmp(&j)));

    let mut covered = 0.0;
    let mut value = 0.0;
    let mut level = 0.0;
    for &i in &order {
        let height = f[i].abs();
        if covered + w[i] >= t {
            value += (t - covered) * height;
            level = height;
            break;
        }
        covered += w[i];
        value += w[i] * height;
    }
    let x0: Vec<f64> = f.iter().map(|v| (v.abs() - level).max(0.0)).collect();
    Ok((value, Decomposition::from_magnitudes(f, &x0)))
}

/// Numerical `K(t, f; X₀, X₁)` for any pair of weighted / convexified norms.
///
/// The returned value is within `1e-6` relative of the infimum; `gap`
/// certifies how far above it the value can be.
pub fn k_numeric(couple: &Couple, f: &[f64], t: f64) -> Result<KValue> {
    check_t(t)?;
    couple.space.check(f)?;
    let w = couple.space.weights();
    let m: Vec<f64> = f.iter().map(|v| v.abs()).collect();
    if m.iter().all(|&v| v == 0.0) {
        let zero = LatticeVector::zeros(f.len());
        return Ok(KValue { value: 0.0, gap: 0.0, decomposition: Decomposition { a0: zero.clone(), a1: zero } });
    }
    let r0 = couple.norm0.effective_exponent();
    let r1 = couple.norm1.effective_exponent();

    let (x0, gap) = match (r0, r1) {
        (_, Exponent::Infinity) => {
            let (c, _, gap) = solver::minimize_truncation(w, r0, 1.0, t, &m);
            (m.iter().map(|v| (v - c).max(0.0)).collect::<Vec<_>>(), gap)
        }
        (Exponent::Infinity, _) => {
            let (c, _, gap) = solver::minimize_truncation(w, r1, t, 1.0, &m);
            (m.iter().map(|v| v.min(c)).collect(), gap)
        }
        _ => {
            let sol = solver::minimize_box(w, r0, r1, t, &m);
            if sol.gap > 1e-6 * sol.value {
                return Err(Error::NumericalFailure {
                    context: format!("K solver at t = {t:e}"),
                    best: sol.value,
                    gap: sol.gap,
                });
            }
            (sol.x0, sol.gap)
        }
    };
    let decomposition = Decomposition::from_magnitudes(f, &x0);
    // Evaluate through the norm specs themselves rather than the reduced form.
    let value = couple.norm0(&decomposition.a0)? + t * couple.norm1(&decomposition.a1)?;
    Ok(KValue { value, gap, decomposition })
}

/// Norms of every restriction `fχ_E`, indexed by the bitmask of `E`.
fn restriction_norms(weights: &[f64], m: &[f64], r: Exponent) -> Vec<f64> {
    let n = m.len();
    let mut acc = vec![0.0_f64; 1 << n];
    let terms: Vec<f64> = match r {
        Exponent::Infinity => m.to_vec(),
        Exponent::Finite(r) => m.iter().zip(weights).map(|(v, w)| w * v.powf(r)).collect(),
    };
    for e in 1usize..(1 << n) {
        let low = e.trailing_zeros() as usize;
        let prev = acc[e & (e - 1)];
        acc[e] = match r {
            Exponent::Infinity => prev.max(terms[low]),
            Exponent::Finite(_) => prev + terms[low],
        };
    }
    if let Exponent::Finite(r) = r {
        if r != 1.0 {
            acc.iter_mut().for_each(|s| *s = s.powf(1.0 / r));
        }
    }
    acc
}

/// All `(‖fχ_E‖₀, ‖fχ_{Ω∖E}‖₁)` pairs for one `f`, reusable across `t`.
pub struct DTable {
    n: usize,
    part0: Vec<f64>,
    part1: Vec<f64>,
}

impl DTable {
    pub fn new(couple: &Couple, f: &[f64]) -> Result<Self> {
        couple.space.check(f)?;
        let n = f.len();
        if n > D_EXACT_CAP {
            return Err(Error::Capacity { what: "exhaustive D", n, cap: D_EXACT_CAP });
        }
        let w = couple.space.weights();
        let m: Vec<f64> = f.iter().map(|v| v.abs()).collect();
        Ok(Self {
            n,
            part0: restriction_norms(w, &m, couple.norm0.effective_exponent()),
            part1: restriction_norms(w, &m, couple.norm1.effective_exponent()),
        })
    }

    /// `(D(t), E)` with the smallest minimizing bitmask.
    pub fn evaluate(&self, t: f64) -> (f64, usize) {
        let full = (1usize << self.n) - 1;
        let mut best = (f64::INFINITY, 0);
        for e in 0..=full {
            let v = self.part0[e] + t * self.part1[full ^ e];
            if v < best.0 {
                best = (v, e);
            }
        }
        best
    }

    pub fn mask(&self, e: usize) -> Vec<bool> {
        (0..self.n).map(|i| e >> i & 1 == 1).collect()
    }
}

/// Exact `D(t, f; X₀, X₁)` by enumerating every support split.
pub fn d_exact(couple: &Couple, f: &[f64], t: f64) -> Result<(f64, Decomposition)> {
    check_t(t)?;
    let table = DTable::new(couple, f)?;
    let (_, e) = table.evaluate(t);
    let decomposition = Decomposition::from_mask(f, &table.mask(e));
    let value = couple.norm0(&decomposition.a0)? + t * couple.norm1(&decomposition.a1)?;
    Ok((value, decomposition))
}

/// An increasing grid of positive `t` values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TGrid(Vec<f64>);

impl TGrid {
    pub fn new(mut points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::domain("empty t-grid"));
        }
        for &t in &points {
            check_t(t)?;
        }
        points.sort_by(|a, b| a.partial_cmp(b).unwrap());
        points.dedup();
        Ok(Self(points))
    }

    /// `count` points spaced evenly in `log t` on `[lo, hi]`.
    pub fn geometric(lo: f64, hi: f64, count: usize) -> Result<Self> {
        check_t(lo)?;
        check_t(hi)?;
        if count == 0 || hi < lo || (count == 1 && hi != lo) {
            return Err(Error::domain(format!("invalid geometric grid {lo}..{hi} x {count}")));
        }
        if count == 1 {
            return Self::new(vec![lo]);
        }
        let (a, b) = (lo.ln(), hi.ln());
        let mut points: Vec<f64> = (0..count).map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp()).collect();
        points[0] = lo;
        points[count - 1] = hi;
        Self::new(points)
    }

    /// 61 geometric points on `[10⁻³, 10³]`.
    pub fn default_grid() -> Self {
        Self::geometric(1e-3, 1e3, 61).unwrap()
    }

    pub fn points(&self) -> &[f64] {
        &self.0
    }

    /// Parse `geometric:<lo>,<hi>,<count>`.
    pub fn parse(spec: &str) -> Result<Self> {
        let body = spec
            .strip_prefix("geometric:")
            .ok_or_else(|| Error::Format(format!("t-grid must look like geometric:lo,hi,count, got {spec:?}")))?;
        let parts: Vec<&str> = body.split(',').map(str::trim).collect();
        let [lo, hi, count] = parts.as_slice() else {
            return Err(Error::Format(format!("t-grid needs three fields, got {body:?}")));
        };
        let bad = |s: &str| Error::Format(format!("bad t-grid field {s:?}"));
        Self::geometric(
            lo.parse().map_err(|_| bad(lo))?,
            hi.parse().map_err(|_| bad(hi))?,
            count.parse().map_err(|_| bad(count))?,
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct KProfile {
    pub kind: FunctionalKind,
    pub t_grid: TGrid,
    pub values: Vec<f64>,
    /// Certified solver gaps (zero for exact evaluations).
    pub gaps: Vec<f64>,
    pub a0_norms: Vec<f64>,
    pub a1_norms: Vec<f64>,
    pub couple: Couple,
    pub subject: LatticeVector,
}

impl KProfile {
    /// Shape invariants; concavity and `K(t)/t` monotonicity apply to kind K.
    pub fn check_shape(&self) -> Result<()> {
        let ts = self.t_grid.points();
        let v = &self.values;
        let slack = |i: usize| SANDWICH_TOL * v[i].abs() + self.gaps[i] + 1e-15;
        for i in 1..v.len() {
            if v[i] + slack(i) + slack(i - 1) < v[i - 1] {
                return Err(Error::PropertyViolation {
                    check: "profile monotonicity",
                    detail: format!("value drops from {} to {} at t = {:e}", v[i - 1], v[i], ts[i]),
                });
            }
        }
        if self.kind == FunctionalKind::K {
            for i in 1..v.len() {
                if v[i] / ts[i] > (v[i - 1] + slack(i - 1) + slack(i)) / ts[i - 1] {
                    return Err(Error::PropertyViolation {
                        check: "profile K(t)/t monotonicity",
                        detail: format!("K(t)/t increases at t = {:e}", ts[i]),
                    });
                }
            }
            for i in 1..v.len().saturating_sub(1) {
                let lambda = (ts[i] - ts[i - 1]) / (ts[i + 1] - ts[i - 1]);
                let chord = v[i - 1] + lambda * (v[i + 1] - v[i - 1]);
                if v[i] + slack(i - 1) + slack(i) + slack(i + 1) < chord {
                    return Err(Error::PropertyViolation {
                        check: "profile concavity",
                        detail: format!("K below chord at t = {:e}: {} < {}", ts[i], v[i], chord),
                    });
                }
            }
        }
        Ok(())
    }
}

/// K or D evaluated along a grid.
pub fn profile(kind: FunctionalKind, couple: &Couple, f: &[f64], t_grid: &TGrid) -> Result<KProfile> {
    let n = t_grid.points().len();
    let mut values = Vec::with_capacity(n);
    let mut gaps = Vec::with_capacity(n);
    let mut a0_norms = Vec::with_capacity(n);
    let mut a1_norms = Vec::with_capacity(n);
    let table = match kind {
        FunctionalKind::D => Some(DTable::new(couple, f)?),
        FunctionalKind::K => None,
    };
    for &t in t_grid.points() {
        let (value, gap, dec) = match &table {
            Some(table) => {
                let (_, e) = table.evaluate(t);
                let dec = Decomposition::from_mask(f, &table.mask(e));
                let value = couple.norm0(&dec.a0)? + t * couple.norm1(&dec.a1)?;
                (value, 0.0, dec)
            }
            None => {
                let k = k_numeric(couple, f, t).map_err(|e| e.at_t(t))?;
                (k.value, k.gap, k.decomposition)
            }
        };
        values.push(value);
        gaps.push(gap);
        a0_norms.push(couple.norm0(&dec.a0)?);
        a1_norms.push(couple.norm1(&dec.a1)?);
    }
    let profile = KProfile {
        kind,
        t_grid: t_grid.clone(),
        values,
        gaps,
        a0_norms,
        a1_norms,
        couple: couple.clone(),
        subject: LatticeVector::new(f.to_vec())?,
    };
    profile.check_shape()?;
    Ok(profile)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ViolationKind {
    /// The inequality fails even after granting every certified solver gap.
    Math,
    /// The inequality fails on computed values but not on certified bounds.
    SolverGap,
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub t: f64,
    pub inequality: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, Serialize)]
pub struct SandwichRow {
    pub t: f64,
    pub left: f64,
    pub middle: f64,
    pub right: f64,
}

/// Outcome of one inequality check along a grid.
#[derive(Debug, Clone, Serialize)]
pub struct InequalityReport {
    pub check: &'static str,
    pub t_grid: TGrid,
    pub tolerance: f64,
    pub rows: Vec<SandwichRow>,
    /// Largest observed `middle / left`.
    pub max_ratio: f64,
    /// The constant the ratio is compared against.
    pub bound: f64,
    pub violations: Vec<Violation>,
}

impl InequalityReport {
    fn new(check: &'static str, t_grid: &TGrid, tolerance: f64, bound: f64) -> Self {
        Self {
            check,
            t_grid: t_grid.clone(),
            tolerance,
            rows: Vec::new(),
            max_ratio: 1.0,
            bound,
            violations: Vec::new(),
        }
    }

    pub fn math_violations(&self) -> usize {
        self.violations.iter().filter(|v| v.kind == ViolationKind::Math).count()
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    /// Turn a failing report into a [`Error::PropertyViolation`].
    pub fn into_result(self) -> Result<Self> {
        match self.violations.first() {
            None => Ok(self),
            Some(v) => Err(Error::PropertyViolation {
                check: self.check,
                detail: format!(
                    "{} violation(s); first at t = {:e}: {} ({} > {}, {:?})",
                    self.violations.len(),
                    v.t,
                    v.inequality,
                    v.lhs,
                    v.rhs,
                    v.kind
                ),
            }),
        }
    }

    /// Record `lhs ≤ rhs`, each given as a certified interval
    /// `[lower, upper]` around the computed value.
    fn require(&mut self, t: f64, inequality: &'static str, lhs: (f64, f64), rhs: (f64, f64)) {
        let tol = |x: f64| self.tolerance * x.abs() + 1e-14;
        if lhs.1 <= rhs.1 + tol(rhs.1) && lhs.0 <= rhs.0 + tol(rhs.0) {
            return;
        }
        let kind = if lhs.0 > rhs.1 + tol(rhs.1) { ViolationKind::Math } else { ViolationKind::SolverGap };
        self.violations.push(Violation { t, inequality, lhs: lhs.1, rhs: rhs.0, kind });
    }

    fn push_row(&mut self, t: f64, left: f64, middle: f64, right: f64) {
        if left > 0.0 {
            self.max_ratio = self.max_ratio.max(middle / left);
        }
        self.rows.push(SandwichRow { t, left, middle, right });
    }
}

/// `K(t,f) ≤ D(t,f) ≤ 2K(t,f)` along the grid.
pub fn check_k_d_sandwich(couple: &Couple, f: &[f64], t_grid: &TGrid) -> Result<InequalityReport> {
    let table = DTable::new(couple, f)?;
    let mut report = InequalityReport::new("K <= D <= 2K", t_grid, SANDWICH_TOL, 2.0);
    for &t in t_grid.points() {
        let k = k_numeric(couple, f, t).map_err(|e| e.at_t(t))?;
        let (d, _) = table.evaluate(t);
        let kb = (k.lower(), k.value);
        report.require(t, "K <= D", kb, (d, d));
        report.require(t, "D <= 2K", (d, d), (2.0 * kb.0, 2.0 * kb.1));
        report.push_row(t, k.value, d, 2.0 * k.value);
    }
    Ok(report)
}

fn convexification_constant(p: f64) -> f64 {
    2f64.powf(1.0 - 1.0 / p)
}

/// `D(t,|f|^p)^{1/p} ≤ D(t^{1/p}, f; X^(p)) ≤ 2^{1−1/p} D(t,|f|^p)^{1/p}`.
pub fn check_claim1(couple: &Couple, f: &[f64], p: f64, t_grid: &TGrid) -> Result<InequalityReport> {
    let convex = couple.convexify(p)?;
    let fp = LatticeVector::new(f.to_vec())?.abs_pow(p);
    let base_table = DTable::new(couple, &fp)?;
    let convex_table = DTable::new(&convex, f)?;
    let c = convexification_constant(p);
    let mut report = InequalityReport::new("D(t,|f|^p)^(1/p) <= D(t^(1/p),f;X^(p)) <= 2^(1-1/p) D(t,|f|^p)^(1/p)", t_grid, SANDWICH_TOL, c);
    for &t in t_grid.points() {
        let left = base_table.evaluate(t).0.powf(1.0 / p);
        let middle = convex_table.evaluate(t.powf(1.0 / p)).0;
        // Membership: both functionals must be finite.
        if !(left.is_finite() && middle.is_finite()) {
            report.violations.push(Violation {
                t,
                inequality: "f in X0^(p)+X1^(p) iff |f|^p in X0+X1",
                lhs: left,
                rhs: middle,
                kind: ViolationKind::Math,
            });
            continue;
        }
        report.require(t, "left <= middle", (left, left), (middle, middle));
        report.require(t, "middle <= right", (middle, middle), (c * left, c * left));
        report.push_row(t, left, middle, c * left);
    }
    Ok(report)
}

/// The K analogue of [`check_claim1`], plus its weaker `2^p` / `2^{2p}` corollary.
pub fn check_maligranda(couple: &Couple, f: &[f64], p: f64, t_grid: &TGrid) -> Result<InequalityReport> {
    let convex = couple.convexify(p)?;
    let fp = LatticeVector::new(f.to_vec())?.abs_pow(p);
    let c = convexification_constant(p);
    let inv = 1.0 / p;
    let mut report = InequalityReport::new(
        "K(t,|f|^p)^(1/p) <= K(t^(1/p),f;X^(p)) <= 2^(1-1/p) K(t,|f|^p)^(1/p)",
        t_grid,
        SOLVER_CHECK_TOL,
        c,
    );
    for &t in t_grid.points() {
        let base = k_numeric(couple, &fp, t).map_err(|e| e.at_t(t))?;
        let mid = k_numeric(&convex, f, t.powf(inv)).map_err(|e| e.at_t(t))?;
        let left = (base.lower().powf(inv), base.value.powf(inv));
        let middle = (mid.lower(), mid.value);
        report.require(t, "left <= middle", left, middle);
        report.require(t, "middle <= right", middle, (c * left.0, c * left.1));

        let two_p = 2f64.powf(p);
        let kb = (base.lower(), base.value);
        let scaled_mid = (two_p * middle.0.powf(p), two_p * middle.1.powf(p));
        report.require(t, "K(t,|f|^p) <= 2^p K(t^(1/p),f)^p", kb, scaled_mid);
        report.require(t, "2^p K(t^(1/p),f)^p <= 2^(2p) K(t,|f|^p)", scaled_mid, (two_p * two_p * kb.0, two_p * two_p * kb.1));
        report.push_row(t, left.1, middle.1, c * left.1);
    }
    Ok(report)
}

/// Atoms' cumulative-weight breakpoints of `K(·, f; ℓ¹(w), ℓ∞)`.
fn l1_linf_breakpoints(space: &MeasureSpace, f: &[f64]) -> Vec<f64> {
    let w = space.weights();
    let mut order: Vec<usize> = (0..f.len()).filter(|&i| f[i] != 0.0).collect();
    order.sort_by(|&i, &j| f[j].abs().partial_cmp(&f[i].abs()).unwrap().then(i.cmp(&j)));
    order
        .iter()
        .scan(0.0, |acc, &i| {
            *acc += w[i];
            Some(*acc)
        })
        .collect()
}

/// Whether `K(t,g) ≤ K(t,f)` at every grid point.
///
/// For `(ℓ¹(w), ℓ∞)` the cumulative-weight breakpoints of both functions
/// are added to the grid, which makes the check exact; with uniform
/// weights the result is cross-checked against weak submajorization.
pub fn k_order_dominates(couple: &Couple, f: &[f64], g: &[f64], t_grid: &TGrid) -> Result<bool> {
    couple.space.check(f)?;
    couple.space.check(g)?;
    Ok(k_order_violation(couple, f, g, t_grid)?.is_none())
}

/// First `t` at which `K(t,g) > K(t,f)`, if any.
pub fn k_order_violation(couple: &Couple, f: &[f64], g: &[f64], t_grid: &TGrid) -> Result<Option<f64>> {
    let l1_linf = couple.is_l1_linf();
    let mut points = t_grid.points().to_vec();
    if l1_linf {
        points.extend(l1_linf_breakpoints(&couple.space, f));
        points.extend(l1_linf_breakpoints(&couple.space, g));
    }
    let grid = TGrid::new(points)?;
    let mut first_violation = None;
    for &t in grid.points() {
        let kf = k_numeric(couple, f, t).map_err(|e| e.at_t(t))?;
        let kg = k_numeric(couple, g, t).map_err(|e| e.at_t(t))?;
        if kg.value > kf.value * (1.0 + ORDER_TOL) + 1e-300 {
            first_violation = Some(t);
            break;
        }
    }
    if l1_linf && couple.space.is_uniform() {
        let exact = weak_submajorizes_tol(f, g, ORDER_TOL);
        if exact != first_violation.is_none() {
            return Err(Error::Inconsistent(format!(
                "grid K-order ({}) disagrees with weak submajorization ({exact})",
                first_violation.is_none()
            )));
        }
    }
    Ok(first_violation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::NormSpec;

    fn unit_l1_linf(n: usize) -> Couple {
        Couple::l1_linf(MeasureSpace::counting(n).unwrap())
    }

    /// Grid search over the truncation level, refined around the best point.
    fn truncation_oracle(f: &[f64], t: f64) -> f64 {
        let top = f.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
        let phi = |c: f64| f.iter().map(|v| (v.abs() - c).max(0.0)).sum::<f64>() + t * c;
        let mut best_c = 0.0;
        let mut best = f64::INFINITY;
        let steps = (top / 1e-4).ceil() as usize;
        for k in 0..=steps {
            let c = (k as f64 * 1e-4).min(top);
            if phi(c) < best {
                best = phi(c);
                best_c = c;
            }
        }
        for k in 0..=2000 {
            let c = (best_c - 1e-4 + k as f64 * 1e-7).clamp(0.0, top);
            best = best.min(phi(c));
        }
        best
    }

    #[test]
    fn k_exact_examples() {
        let space = MeasureSpace::counting(3).unwrap();
        let f = [3.0, 1.0, 2.0];
        for (t, expected) in [(1.0, 3.0), (3.0, 6.0)] {
            let oracle = truncation_oracle(&f, t);
            assert!((oracle - expected).abs() < 1e-9);
            let (k, dec) = k_exact_l1_linf(&space, &f, t).unwrap();
            assert!((k - expected).abs() < 1e-12, "t = {t}: {k}");
            assert!(dec.reproduces(&f));
        }
        assert_eq!(k_exact_l1_linf(&space, &[0.0; 3], 2.0).unwrap().0, 0.0);
        assert!(k_exact_l1_linf(&space, &f, 0.0).is_err());
        assert!(k_exact_l1_linf(&space, &f, -1.0).is_err());
    }

    #[test]
    fn k_exact_decomposition_is_dominated_and_sign_compatible() {
        let space = MeasureSpace::new(vec![0.5, 2.0, 1.0]).unwrap();
        let f = [-3.0, 1.0, 2.5];
        let (k, dec) = k_exact_l1_linf(&space, &f, 1.3).unwrap();
        let couple = Couple::l1_linf(space);
        let direct = couple.norm0(&dec.a0).unwrap() + 1.3 * couple.norm1(&dec.a1).unwrap();
        assert!((k - direct).abs() < 1e-12);
        for ((a0, a1), v) in dec.a0.iter().zip(dec.a1.iter()).zip(f) {
            assert!(a0 * v >= 0.0 && a1 * v >= 0.0);
            assert!(a0.abs() <= v.abs() && a1.abs() <= v.abs());
        }
    }

    #[test]
    fn k_numeric_zero_and_single_sided_bounds() {
        let couple = unit_l1_linf(3);
        let zero = k_numeric(&couple, &[0.0; 3], 1.0).unwrap();
        assert_eq!(zero.value, 0.0);
        assert!(zero.decomposition.a0.is_zero() && zero.decomposition.a1.is_zero());
        let f = [3.0, -1.0, 2.0];
        for t in [1e-3, 0.5, 2.0, 1e3] {
            let k = k_numeric(&couple, &f, t).unwrap();
            assert!(k.value <= couple.norm0(&f).unwrap() + 1e-12);
            assert!(k.value <= t * couple.norm1(&f).unwrap() + 1e-12);
        }
    }

    #[test]
    fn d_exact_examples() {
        let couple = unit_l1_linf(3);
        let (d, dec) = d_exact(&couple, &[3.0, 1.0, 2.0], 1.0).unwrap();
        assert_eq!(d, 3.0);
        assert!(dec.a0.is_zero(), "E should be empty");
        assert!(dec.is_disjoint());
        assert_eq!(d_exact(&couple, &[0.0; 3], 0.3).unwrap().0, 0.0);
        let single = unit_l1_linf(1);
        for t in [0.2, 1.0, 4.0] {
            assert!((d_exact(&single, &[5.0], t).unwrap().0 - 5.0 * t.min(1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn d_exact_capacity() {
        let couple = unit_l1_linf(23);
        assert!(matches!(d_exact(&couple, &[1.0; 23], 1.0), Err(Error::Capacity { .. })));
    }

    #[test]
    fn profile_l1_linf_is_piecewise_linear() {
        let couple = unit_l1_linf(3);
        let f = [3.0, 1.0, 2.0];
        let grid = TGrid::geometric(1e-3, 1e3, 61).unwrap();
        let prof = profile(FunctionalKind::K, &couple, &f, &grid).unwrap();
        // ∫₀ᵗ f* with f* = 3 on [0,1), 2 on [1,2), 1 on [2,3).
        let closed = |t: f64| {
            let segs = [(1.0, 3.0), (1.0, 2.0), (1.0, 1.0)];
            let (mut acc, mut left) = (0.0, t);
            for (len, h) in segs {
                let take = left.min(len);
                acc += take * h;
                left -= take;
            }
            acc
        };
        for (t, v) in grid.points().iter().zip(&prof.values) {
            assert!((v - closed(*t)).abs() < 1e-12 * closed(*t).max(1.0));
        }
        let zero = profile(FunctionalKind::K, &couple, &[0.0; 3], &grid).unwrap();
        assert!(zero.values.iter().all(|&v| v == 0.0));
        let one = TGrid::new(vec![0.7]).unwrap();
        let single = profile(FunctionalKind::D, &couple, &f, &one).unwrap();
        assert_eq!(single.values, vec![d_exact(&couple, &f, 0.7).unwrap().0]);
    }

    #[test]
    fn tgrid_parsing() {
        let g = TGrid::parse("geometric:0.001,1000,61").unwrap();
        assert_eq!(g.points().len(), 61);
        assert!((g.points()[30] - 1.0).abs() < 1e-12);
        assert!(TGrid::parse("linear:1,2,3").is_err());
        assert!(TGrid::parse("geometric:1,2").is_err());
        assert!(TGrid::parse("geometric:0,2,5").is_err());
    }

    #[test]
    fn sandwich_examples() {
        let couple = unit_l1_linf(3);
        let grid = TGrid::new(vec![1.0]).unwrap();
        let r = check_k_d_sandwich(&couple, &[3.0, 1.0, 2.0], &grid).unwrap();
        assert!(r.passed());
        assert_eq!(r.rows[0].left, 3.0);
        assert_eq!(r.rows[0].middle, 3.0);
        assert_eq!(r.max_ratio, 1.0);
        let z = check_k_d_sandwich(&couple, &[0.0; 3], &TGrid::default_grid()).unwrap();
        assert!(z.passed());
    }

    #[test]
    fn claim1_example() {
        let couple = unit_l1_linf(2);
        let r = check_claim1(&couple, &[2.0, 1.0], 2.0, &TGrid::new(vec![1.0]).unwrap()).unwrap();
        assert!(r.passed());
        assert!((r.rows[0].left - 2.0).abs() < 1e-12);
        assert!((r.rows[0].middle - 2.0).abs() < 1e-12);
        assert!((r.bound - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn maligranda_example_and_single_atom() {
        let couple = unit_l1_linf(2);
        let r = check_maligranda(&couple, &[2.0, 1.0], 2.0, &TGrid::new(vec![1.0]).unwrap()).unwrap();
        assert!(r.passed());
        assert!((r.rows[0].left - 2.0).abs() < 1e-12);
        assert!((r.rows[0].middle - 2.0).abs() < 1e-9);

        let one = unit_l1_linf(1);
        for t in [0.1, 1.0, 7.0] {
            let r = check_maligranda(&one, &[3.0], 3.0, &TGrid::new(vec![t]).unwrap()).unwrap();
            let expected = 3.0 * t.powf(1.0 / 3.0).min(1.0);
            assert!((r.rows[0].left - expected).abs() < 1e-9);
            assert!((r.rows[0].middle - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn order_examples() {
        let couple = unit_l1_linf(3);
        let grid = TGrid::default_grid();
        assert!(k_order_dominates(&couple, &[3.0, 2.0, 1.0], &[2.0, 1.0, 1.0], &grid).unwrap());
        assert!(k_order_dominates(&couple, &[3.0, 2.0, 1.0], &[3.0, 2.0, 1.0], &grid).unwrap());
        assert!(!k_order_dominates(&couple, &[1.0, 1.0, 1.0], &[3.0, 0.0, 0.0], &grid).unwrap());
    }

    #[test]
    fn finite_couple_matches_brute_force() {
        // (ℓ², ℓ^{1.5}) has no truncation shortcut; compare with a fine grid.
        let space = MeasureSpace::new(vec![1.0, 2.0]).unwrap();
        let couple = Couple::new(
            space,
            NormSpec::weighted_p(Exponent::Finite(2.0)).unwrap(),
            NormSpec::weighted_p(Exponent::Finite(1.5)).unwrap(),
            None,
        )
        .unwrap();
        let f = [2.0, -1.0];
        for t in [0.3, 1.0, 2.5] {
            let k = k_numeric(&couple, &f, t).unwrap();
            let mut brute = f64::INFINITY;
            for i in 0..=800 {
                for j in 0..=400 {
                    let a0 = [2.0 * i as f64 / 800.0, -(j as f64) / 400.0];
                    let a1 = [f[0] - a0[0], f[1] - a0[1]];
                    brute = brute.min(couple.norm0(&a0).unwrap() + t * couple.norm1(&a1).unwrap());
                }
            }
            assert!(k.value <= brute + 1e-12, "t = {t}");
            assert!(brute - k.value < 1e-4, "t = {t}: {} vs {brute}", k.value);
            assert!(k.lower() <= k.value);
        }
    }
}
