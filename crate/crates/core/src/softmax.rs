//! Numerically stable softmax, log-sum-exp and friends.
//!
//! Everything is evaluated in binary64 with the max-shift
//! `lse(z) = m + λ⁻¹ log Σ exp(λ(zⱼ − m))`, `m = max z`, which is exact in real
//! arithmetic and keeps every exponent `≤ 0`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Accepted deviation of `Σ xᵢ` from one for user-supplied strategies.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// A point `z ∈ ℝⁿ`, `n ≥ 2`, with finite entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ScoreVector(Vec<f64>);

impl ScoreVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::invalid(format!(
                "score vector needs at least 2 entries, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "score entry {i} is not finite ({})",
                values[i]
            )));
        }
        Ok(ScoreVector(values))
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// `z + c·1`.
    pub fn shifted(&self, c: f64) -> Result<Self> {
        Self::new(self.0.iter().map(|v| v + c).collect())
    }
}

impl TryFrom<Vec<f64>> for ScoreVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        ScoreVector::new(v)
    }
}

impl From<ScoreVector> for Vec<f64> {
    fn from(z: ScoreVector) -> Self {
        z.0
    }
}

impl AsRef<[f64]> for ScoreVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// A probability vector on the simplex `Δⁿ⁻¹`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct MixedStrategy(Vec<f64>);

impl MixedStrategy {
    /// Validates simplex membership (entries `≥ 0`, `|Σ − 1| ≤ 1e−9`) and
    /// renormalizes.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::invalid(format!(
                "mixed strategy needs at least 2 entries, got {}",
                probs.len()
            )));
        }
        if let Some(i) = probs.iter().position(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::invalid(format!(
                "probability {i} is negative or not finite ({})",
                probs[i]
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::invalid(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(MixedStrategy(probs.into_iter().map(|p| p / total).collect()))
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(vec![1.0 / n as f64; n])
    }

    /// Vertex `eᵢ` of the simplex.
    pub fn vertex(n: usize, i: usize) -> Result<Self> {
        if i >= n {
            return Err(Error::invalid(format!("vertex {i} out of range for n = {n}")));
        }
        let mut p = vec![0.0; n];
        p[i] = 1.0;
        Self::new(p)
    }

    pub(crate) fn from_normalized(probs: Vec<f64>) -> Self {
        MixedStrategy(probs)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn is_interior(&self) -> bool {
        self.0.iter().all(|&p| p > 0.0)
    }
}

impl TryFrom<Vec<f64>> for MixedStrategy {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        MixedStrategy::new(v)
    }
}

impl From<MixedStrategy> for Vec<f64> {
    fn from(x: MixedStrategy) -> Self {
        x.0
    }
}

impl AsRef<[f64]> for MixedStrategy {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Inverse temperature `λ > 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Temperature(f64);

impl Temperature {
    pub fn new(lambda: f64) -> Result<Self> {
        if lambda.is_finite() && lambda > 0.0 {
            Ok(Temperature(lambda))
        } else {
            Err(Error::invalid(format!(
                "inverse temperature must be finite and > 0, got {lambda}"
            )))
        }
    }

    pub fn lambda(self) -> f64 {
        self.0
    }
}

impl Default for Temperature {
    fn default() -> Self {
        Temperature(1.0)
    }
}

impl TryFrom<f64> for Temperature {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        Temperature::new(v)
    }
}

impl From<Temperature> for f64 {
    fn from(t: Temperature) -> Self {
        t.0
    }
}

/// Per-strategy inverse temperatures `λᵢ > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedTemperature(Vec<f64>);

impl GeneralizedTemperature {
    pub fn new(lambdas: Vec<f64>) -> Result<Self> {
        if let Some(i) = lambdas.iter().position(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(Error::invalid(format!(
                "inverse temperature {i} must be finite and > 0, got {}",
                lambdas[i]
            )));
        }
        Ok(GeneralizedTemperature(lambdas))
    }

    pub fn uniform(t: Temperature, n: usize) -> Self {
        GeneralizedTemperature(vec![t.lambda(); n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// `λ(diag(σ) − σσᵀ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianMatrix(DMatrix<f64>);

impl JacobianMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), u.len())?;
        Ok((&self.0 * DVector::from_column_slice(u)).as_slice().to_vec())
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.0.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    /// Largest `|Jᵢⱼ − Jⱼᵢ|`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..i {
                worst = worst.max((self.0[(i, j)] - self.0[(j, i)]).abs());
            }
        }
        worst
    }

    /// Largest `|(J·1)ᵢ|`.
    pub fn max_row_sum(&self) -> f64 {
        self.0
            .row_iter()
            .map(|r| r.sum().abs())
            .fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_symmetric_eigenvalue(&self.0)
    }
}

/// Smallest eigenvalue of `(M + Mᵀ)/2`. Entries below `1e−30·max|Mᵢⱼ|` are
/// flushed to zero first, which moves eigenvalues by at most `n·1e−30·max|Mᵢⱼ|`.
/// Without it the eigensolver can return NaN or −inf when O(1) entries sit
/// next to tiny or subnormal ones.
pub(crate) fn min_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let mut sym = (m + m.transpose()) * 0.5;
    let cutoff = sym.amax() * 1e-30;
    sym.iter_mut().filter(|v| v.abs() < cutoff).for_each(|v| *v = 0.0);
    SymmetricEigen::new(sym).eigenvalues.min()
}

// Slice kernels. These skip validation and are shared with the property
// checks, which work on raw sampled vectors.

pub(crate) fn max_index(z: &[f64]) -> (f64, usize) {
    let mut best = (z[0], 0);
    for (i, &v) in z.iter().enumerate().skip(1) {
        if v > best.0 {
            best = (v, i);
        }
    }
    best
}

pub(crate) fn lse_slice(z: &[f64], lambda: f64) -> f64 {
    let (m, _) = max_index(z);
    let s: f64 = z.iter().map(|&v| (lambda * (v - m)).exp()).sum();
    m + s.ln() / lambda
}

pub(crate) fn softmax_slice(z: &[f64], lambda: f64) -> Vec<f64> {
    let (m, _) = max_index(z);
    let mut w: Vec<f64> = z.iter().map(|&v| (lambda * (v - m)).exp()).collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    w
}

pub(crate) fn neg_entropy_slice(x: &[f64], lambda: f64) -> f64 {
    x.iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>()
        / lambda
}

pub(crate) fn jacobian_matrix(sigma: &[f64], lambda: f64) -> DMatrix<f64> {
    let n = sigma.len();
    DMatrix::from_fn(n, n, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        lambda * sigma[i] * (delta - sigma[j])
    })
}

/// `λ⁻¹ log Σⱼ exp(λzⱼ)`.
pub fn lse(z: &ScoreVector, t: Temperature) -> f64 {
    lse_slice(z.as_slice(), t.lambda())
}

/// `σᵢ(z) = exp(λzᵢ) / Σⱼ exp(λzⱼ)`.
pub fn softmax(z: &ScoreVector, t: Temperature) -> MixedStrategy {
    MixedStrategy::from_normalized(softmax_slice(z.as_slice(), t.lambda()))
}

/// `σᵢ(z) = exp(λᵢzᵢ) / Σⱼ exp(λⱼzⱼ)`, shifted by `max λⱼzⱼ`.
pub fn generalized_softmax(z: &ScoreVector, gt: &GeneralizedTemperature) -> Result<MixedStrategy> {
    check_dim(z.len(), gt.as_slice().len())?;
    let scaled: Vec<f64> = z
        .as_slice()
        .iter()
        .zip(gt.as_slice())
        .map(|(v, l)| v * l)
        .collect();
    if scaled.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("λᵢzᵢ overflows"));
    }
    Ok(MixedStrategy::from_normalized(softmax_slice(&scaled, 1.0)))
}

pub fn softmax_jacobian(z: &ScoreVector, t: Temperature) -> JacobianMatrix {
    let sigma = softmax_slice(z.as_slice(), t.lambda());
    JacobianMatrix(jacobian_matrix(&sigma, t.lambda()))
}

/// `λ⁻¹ Σ xⱼ log xⱼ` with `0·log 0 = 0`.
pub fn negative_entropy(x: &MixedStrategy, t: Temperature) -> f64 {
    neg_entropy_slice(x.as_slice(), t.lambda())
}

/// Largest entry and its index; ties go to the lowest index.
pub fn vecmax(z: &ScoreVector) -> (f64, usize) {
    max_index(z.as_slice())
}

/// Seeded sampler for the Gumbel-perturbed choice rule
/// `argmaxᵢ zᵢ + εᵢ`, `P[εᵢ ≤ c] = exp(−exp(−λc − γ))`.
#[derive(Debug, Clone)]
pub struct GumbelSampler {
    rng: ChaCha8Rng,
}

impl GumbelSampler {
    pub fn new(seed: u64) -> Self {
        GumbelSampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// One draw of `ε` via the inverse CDF.
    pub fn perturbation(&mut self, t: Temperature) -> f64 {
        let u: f64 = self.rng.sample(Open01);
        -((-u.ln()).ln() + EULER_GAMMA) / t.lambda()
    }

    pub fn choose(&mut self, z: &ScoreVector, t: Temperature) -> usize {
        let mut best = (f64::NEG_INFINITY, 0);
        for (i, &v) in z.as_slice().iter().enumerate() {
            let p = v + self.perturbation(t);
            if p > best.0 {
                best = (p, i);
            }
        }
        best.1
    }

    /// Empirical choice frequencies over `draws` samples.
    pub fn frequencies(&mut self, z: &ScoreVector, t: Temperature, draws: usize) -> Vec<f64> {
        let mut counts = vec![0usize; z.len()];
        for _ in 0..draws {
            counts[self.choose(z, t)] += 1;
        }
        counts
            .into_iter()
            .map(|c| c as f64 / draws.max(1) as f64)
            .collect()
    }
}

pub fn gumbel_choice(z: &ScoreVector, t: Temperature, seed: u64) -> usize {
    GumbelSampler::new(seed).choose(z, t)
}
