//! Positive contractions of `(ℓ¹, ℓ∞)` realizing K-domination.
//!
//! For nonnegative `f, g` on uniform atoms, `K(t,g) ≤ K(t,f)` for all `t`
//! is weak submajorization `g ≺_w f`. The construction goes
//! `g* ≤ h ≺ f*` (water-fill), `h = S f*` with `S` a product of
//! T-transforms, then rescales and permutes back:
//! `T = P_g⁻¹ · Diag(g*/h) · S · P_f`, a doubly substochastic matrix with `Tf = g`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{LatticeVector, MeasureSpace, NormSpec};

/// Largest `n` the dense operator construction accepts.
pub const OPERATOR_CAP: usize = 256;
/// Relative slack on prefix-sum comparisons.
pub const PREFIX_TOL: f64 = 1e-12;

/// A linear operator on the atoms of a space, as a dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixOperator {
    entries: DMatrix<f64>,
    space: MeasureSpace,
    positive: bool,
}

impl MatrixOperator {
    pub fn new(entries: DMatrix<f64>, space: MeasureSpace) -> Result<Self> {
        let n = space.len();
        if entries.nrows() != n || entries.ncols() != n {
            return Err(Error::Dimension { expected: n, found: entries.nrows().max(entries.ncols()) });
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("operator entries must be finite"));
        }
        let positive = entries.iter().all(|&v| v >= 0.0);
        Ok(Self { entries, space, positive })
    }

    pub fn identity(space: MeasureSpace) -> Self {
        let n = space.len();
        Self { entries: DMatrix::identity(n, n), space, positive: true }
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn space(&self) -> &MeasureSpace {
        &self.space
    }

    pub fn n(&self) -> usize {
        self.space.len()
    }

    /// All entries are nonnegative, so `h ≥ 0` implies `Th ≥ 0`.
    pub fn is_positive(&self) -> bool {
        self.positive
    }

    pub fn apply(&self, h: &[f64]) -> Result<Vec<f64>> {
        self.space.check(h)?;
        Ok(self.apply_unchecked(h))
    }

    pub(crate) fn apply_unchecked(&self, h: &[f64]) -> Vec<f64> {
        let n = self.n();
        (0..n).map(|i| (0..n).map(|j| self.entries[(i, j)] * h[j]).sum()).collect()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.entries.row(i).iter().copied().collect()
    }

    /// Rows as nested vectors, for serialization.
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n()).map(|i| self.row(i)).collect()
    }
}

/// Exact `‖T‖_{ℓ¹→ℓ¹}` on uniform atoms: the largest absolute column sum.
pub fn operator_norm_1(t: &MatrixOperator) -> f64 {
    t.entries.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Exact `‖T‖_{ℓ∞→ℓ∞}`: the largest absolute row sum.
pub fn operator_norm_inf(t: &MatrixOperator) -> f64 {
    t.entries.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Lower estimate of `‖T‖` on the lattice `spec` from random probes.
pub fn sample_operator_norm(t: &MatrixOperator, spec: &NormSpec, trials: usize, seed: u64) -> Result<f64> {
    if trials == 0 {
        return Err(Error::domain("need at least one trial"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = t.n();
    let mut best = 0.0_f64;
    let mut done = 0;
    while done < trials {
        let h: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let denom = spec.norm(&t.space, &h)?;
        if denom == 0.0 {
            continue;
        }
        done += 1;
        best = best.max(spec.norm(&t.space, &t.apply_unchecked(&h))? / denom);
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RearrangementResult {
    /// `|f|` in nonincreasing order.
    pub sorted: LatticeVector,
    /// `permutation[k]` is the atom holding the `k`-th largest value.
    pub permutation: Vec<usize>,
}

/// Nonincreasing rearrangement of `|f|`, ties broken by atom index.
pub fn decreasing_rearrangement(f: &[f64]) -> RearrangementResult {
    let mut permutation: Vec<usize> = (0..f.len()).collect();
    permutation.sort_by(|&i, &j| f[j].abs().partial_cmp(&f[i].abs()).unwrap().then(i.cmp(&j)));
    let sorted = permutation.iter().map(|&i| f[i].abs()).collect();
    RearrangementResult { sorted: LatticeVector::from_vec_unchecked(sorted), permutation }
}

fn prefix_sums(v: &[f64]) -> Vec<f64> {
    v.iter()
        .scan(0.0, |acc, x| {
            *acc += x;
            Some(*acc)
        })
        .collect()
}

/// First `k` (1-based prefix length) with `Σ_{≤k} g* > (1+rel)·Σ_{≤k} f*`.
pub fn first_prefix_violation(f: &[f64], g: &[f64], rel: f64) -> Option<usize> {
    let fs = prefix_sums(&decreasing_rearrangement(f).sorted);
    let gs = prefix_sums(&decreasing_rearrangement(g).sorted);
    let n = fs.len().max(gs.len());
    let at = |v: &[f64], k: usize| if v.is_empty() { 0.0 } else { v[k.min(v.len() - 1)] };
    (0..n).find(|&k| at(&gs, k) > at(&fs, k) * (1.0 + rel)).map(|k| k + 1)
}

/// `g ≺_w f`: every prefix sum of `g*` is at most that of `f*`.
pub fn weak_submajorizes(f: &[f64], g: &[f64]) -> bool {
    first_prefix_violation(f, g, 0.0).is_none()
}

/// [`weak_submajorizes`] with relative slack `rel`.
pub fn weak_submajorizes_tol(f: &[f64], g: &[f64], rel: f64) -> bool {
    first_prefix_violation(f, g, rel).is_none()
}

fn check_sorted_nonnegative(v: &[f64], name: &str) -> Result<()> {
    if v.iter().any(|&x| !(x >= 0.0)) {
        return Err(Error::domain(format!("{name} must be nonnegative")));
    }
    if v.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::domain(format!("{name} must be nonincreasing")));
    }
    Ok(())
}

/// Raise `gstar` to some `h` with `gstar ≤ h ≺ fstar` and `Σh = Σfstar`.
///
/// Trailing coordinates are lifted to a common level first
/// (`h = max(gstar, L)`), which keeps `h` nonincreasing; the prefix sums
/// of `h` are then linear past the untouched head while those of `fstar`
/// are concave, so `h ≺ fstar`.
pub fn fill_to_exact_majorization(fstar: &[f64], gstar: &[f64]) -> Result<LatticeVector> {
    if fstar.len() != gstar.len() {
        return Err(Error::Dimension { expected: fstar.len(), found: gstar.len() });
    }
    check_sorted_nonnegative(fstar, "fstar")?;
    check_sorted_nonnegative(gstar, "gstar")?;
    if let Some(k) = first_prefix_violation(fstar, gstar, PREFIX_TOL) {
        return Err(Error::domain(format!("gstar is not weakly submajorized by fstar (prefix {k})")));
    }
    let n = fstar.len();
    let total: f64 = fstar.iter().sum();
    let g_prefix: Vec<f64> = std::iter::once(0.0).chain(prefix_sums(gstar)).collect();
    if total - g_prefix[n] <= PREFIX_TOL * total {
        return Ok(LatticeVector::from_vec_unchecked(gstar.to_vec()));
    }
    // Largest head length `m` whose water level fits between g[m] and g[m-1].
    let mut level = total / n as f64;
    let mut head = 0;
    for m in (0..n).rev() {
        let l = (total - g_prefix[m]) / (n - m) as f64;
        if l >= gstar[m] && (m == 0 || gstar[m - 1] >= l) {
            level = l;
            head = m;
            break;
        }
    }
    let h = (0..n).map(|i| if i < head { gstar[i] } else { gstar[i].max(level) }).collect();
    Ok(LatticeVector::from_vec_unchecked(h))
}

/// `λ·Id + (1−λ)·(swap of i and j)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TTransform {
    pub i: usize,
    pub j: usize,
    pub lambda: f64,
}

impl TTransform {
    pub fn matrix(&self, n: usize) -> DMatrix<f64> {
        let mut m = DMatrix::identity(n, n);
        m[(self.i, self.i)] = self.lambda;
        m[(self.j, self.j)] = self.lambda;
        m[(self.i, self.j)] = 1.0 - self.lambda;
        m[(self.j, self.i)] = 1.0 - self.lambda;
        m
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TTransformChain {
    /// Applied in order: `S = T_last ⋯ T_first`.
    pub factors: Vec<TTransform>,
    /// The doubly stochastic product.
    pub matrix: DMatrix<f64>,
}

impl TTransformChain {
    /// Product of the factors, multiplied in the given order of association.
    pub fn product_right_to_left(&self, n: usize) -> DMatrix<f64> {
        self.factors.iter().fold(DMatrix::identity(n, n), |acc, t| t.matrix(n) * acc)
    }

    pub fn product_left_to_right(&self, n: usize) -> DMatrix<f64> {
        self.factors.iter().rev().fold(DMatrix::identity(n, n), |acc, t| acc * t.matrix(n))
    }
}

/// Doubly stochastic `S` with `S·fstar = h`, built from at most `n − 1`
/// T-transforms.
pub fn t_transform_chain(fstar: &[f64], h: &[f64]) -> Result<TTransformChain> {
    let n = fstar.len();
    if h.len() != n {
        return Err(Error::Dimension { expected: n, found: h.len() });
    }
    check_sorted_nonnegative(fstar, "fstar")?;
    check_sorted_nonnegative(h, "h")?;
    let scale = fstar.iter().fold(1.0_f64, |a, &b| a.max(b));
    let total_f: f64 = fstar.iter().sum();
    let total_h: f64 = h.iter().sum();
    if (total_f - total_h).abs() > 1e-12 * scale * n as f64 || first_prefix_violation(fstar, h, PREFIX_TOL).is_some() {
        return Err(Error::domain("h is not majorized by fstar with equal sums"));
    }
    let eps = 1e-15 * scale * n as f64;
    let mut x = fstar.to_vec();
    let mut factors = Vec::new();
    let mut matrix = DMatrix::<f64>::identity(n, n);
    for _ in 0..n {
        let Some(j) = (0..n).rev().find(|&j| x[j] > h[j] + eps) else { break };
        let Some(k) = (j + 1..n).find(|&k| x[k] < h[k] - eps) else {
            return Err(Error::NumericalFailure {
                context: "T-transform chain lost majorization".into(),
                best: x[j] - h[j],
                gap: eps,
            });
        };
        let delta = (x[j] - h[j]).min(h[k] - x[k]);
        let lambda = 1.0 - delta / (x[j] - x[k]);
        let step = TTransform { i: j, j: k, lambda };
        matrix = step.matrix(n) * matrix;
        factors.push(step);
        if x[j] - h[j] <= h[k] - x[k] {
            x[k] += x[j] - h[j];
            x[j] = h[j];
        } else {
            x[j] -= h[k] - x[k];
            x[k] = h[k];
        }
    }
    let sf: Vec<f64> = (0..n).map(|i| (0..n).map(|j| matrix[(i, j)] * fstar[j]).sum()).collect();
    let residual = sf.iter().zip(h).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    let hmax = h.iter().fold(1.0_f64, |a, &b| a.max(b));
    if residual > 1e-10 * hmax {
        return Err(Error::NumericalFailure { context: "T-transform chain residual".into(), best: residual, gap: 1e-10 });
    }
    Ok(TTransformChain { factors, matrix })
}

/// Numerical certificate of a base operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OperatorCertificate {
    pub norm1: f64,
    pub norminf: f64,
    /// `‖Tf − g‖∞`.
    pub residual: f64,
    pub min_entry: f64,
}

impl OperatorCertificate {
    pub fn compute(t: &MatrixOperator, f: &[f64], g: &[f64]) -> Result<Self> {
        let tf = t.apply(f)?;
        Ok(Self {
            norm1: operator_norm_1(t),
            norminf: operator_norm_inf(t),
            residual: tf.iter().zip(g).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())),
            min_entry: t.entries.iter().copied().fold(f64::INFINITY, f64::min),
        })
    }

    /// Positive, contractive on `ℓ¹` and `ℓ∞`, and `Tf = g`.
    pub fn holds(&self, g: &[f64]) -> bool {
        let gmax = g.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
        self.min_entry >= 0.0
            && self.norm1 <= 1.0 + 1e-12
            && self.norminf <= 1.0 + 1e-12
            && self.residual <= 1e-10 * (1.0 + gmax)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PositiveOperator {
    pub operator: MatrixOperator,
    /// The intermediate `h` with `g* ≤ h ≺ f*`.
    pub fill: LatticeVector,
    /// Name of the fill rule used.
    pub fill_strategy: &'static str,
    pub chain: TTransformChain,
}

/// Positive `T` with `Tf = g`, `‖T‖_{ℓ¹→ℓ¹} ≤ 1` and `‖T‖_{ℓ∞→ℓ∞} ≤ 1`.
///
/// Columns on the zero set of `f` are left at zero.
pub fn construct_positive_operator(space: &MeasureSpace, f: &[f64], g: &[f64]) -> Result<PositiveOperator> {
    space.check(f)?;
    space.check(g)?;
    let n = space.len();
    if n > OPERATOR_CAP {
        return Err(Error::Capacity { what: "positive operator construction", n, cap: OPERATOR_CAP });
    }
    if !space.is_uniform() {
        return Err(Error::domain("operator construction needs uniform weights"));
    }
    if f.iter().chain(g).any(|&v| v < 0.0) {
        return Err(Error::domain("f and g must be nonnegative"));
    }
    if f.iter().all(|&v| v == 0.0) {
        return Err(Error::domain("f must be nonzero"));
    }
    if let Some(k) = first_prefix_violation(f, g, PREFIX_TOL) {
        return Err(Error::domain(format!("g is not weakly submajorized by f: prefix sum {k} fails")));
    }
    let fr = decreasing_rearrangement(f);
    let gr = decreasing_rearrangement(g);
    let h = fill_to_exact_majorization(&fr.sorted, &gr.sorted)?;
    let chain = t_transform_chain(&fr.sorted, &h)?;

    let mut entries = DMatrix::zeros(n, n);
    for a in 0..n {
        let scale = if h[a] > 0.0 { (gr.sorted[a] / h[a]).min(1.0) } else { 0.0 };
        if scale == 0.0 {
            continue;
        }
        for b in 0..n {
            if fr.sorted[b] == 0.0 {
                continue;
            }
            entries[(gr.permutation[a], fr.permutation[b])] = scale * chain.matrix[(a, b)];
        }
    }
    let operator = MatrixOperator::new(entries, space.clone())?;
    Ok(PositiveOperator { operator, fill: h, fill_strategy: "trailing-water-fill", chain })
}
