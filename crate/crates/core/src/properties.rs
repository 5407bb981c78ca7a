//! Sampled verifiers for the operator properties of softmax / log-sum-exp.
//!
//! Every check draws a deterministic ensemble from [`SampleEnsemble`], evaluates
//! a per-sample margin and folds the results into a [`PropertyReport`]. A
//! margin is the slack left *after* the property's tolerance has been applied,
//! so a sample violates the property exactly when its margin is negative.
//!
//! The softmax under test is an [`OperatorUnderTest`]. The exact operator is
//! the default; [`OperatorUnderTest::with_lambda_scale`] evaluates softmax at a
//! wrong inverse temperature while the checks still claim the nominal one,
//! which is how fault injection is exercised.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::softmax::{
    jacobian_matrix, lse_slice, max_index, min_symmetric_eigenvalue, neg_entropy_slice,
    softmax_slice, Temperature,
};

/// Slack for closed-form inequalities.
pub const INEQ_TOL: f64 = 1e-12;
/// Relative slack for the Lipschitz ratio.
pub const LIPSCHITZ_REL_TOL: f64 = 1e-9;
/// Fenchel–Young inequality slack.
pub const FENCHEL_YOUNG_TOL: f64 = 1e-10;
/// Fenchel–Young equality at `x = σ(z)`.
pub const CONJUGATE_EQ_TOL: f64 = 1e-9;
/// Shift identity for `lse`.
pub const LSE_SHIFT_TOL: f64 = 1e-9;
/// Oracle-vs-analytic agreement.
pub const ORACLE_TOL: f64 = 1e-6;
/// Step for central finite differences.
pub const FD_STEP: f64 = 1e-5;
/// Lower bound on the Jacobian's eigenvalues.
pub const PSD_TOL: f64 = 1e-10;
/// Shifts `c` in the shift-invariance check are drawn from `[-C, C]`.
pub const SHIFT_RANGE: f64 = 1e3;

/// Deterministic sample source: coordinates i.i.d. uniform on `[lo, hi]`,
/// simplex points as normalized i.i.d. exponentials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleEnsemble {
    pub dim: usize,
    pub count: usize,
    pub lo: f64,
    pub hi: f64,
    pub seed: u64,
}

impl SampleEnsemble {
    pub fn new(dim: usize, count: usize, lo: f64, hi: f64, seed: u64) -> Result<Self> {
        if dim < 2 {
            return Err(Error::invalid(format!("ensemble dimension must be >= 2, got {dim}")));
        }
        if count < 1 {
            return Err(Error::invalid("ensemble count must be >= 1"));
        }
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::invalid(format!("invalid coordinate range [{lo}, {hi}]")));
        }
        Ok(SampleEnsemble { dim, count, lo, hi, seed })
    }

    /// Same seed, different coordinate range.
    pub fn with_range(self, lo: f64, hi: f64) -> Result<Self> {
        Self::new(self.dim, self.count, lo, hi, self.seed)
    }

    pub fn with_count(self, count: usize) -> Result<Self> {
        Self::new(self.dim, count, self.lo, self.hi, self.seed)
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    pub fn score(&self, rng: &mut impl Rng) -> Vec<f64> {
        (0..self.dim).map(|_| rng.random_range(self.lo..=self.hi)).collect()
    }

    pub fn simplex_point(&self, rng: &mut impl Rng) -> Vec<f64> {
        let e: Vec<f64> = (0..self.dim)
            .map(|_| {
                let u: f64 = rng.sample(rand::distr::Open01);
                -u.ln()
            })
            .collect();
        let s: f64 = e.iter().sum();
        e.into_iter().map(|v| v / s).collect()
    }
}

/// Inputs achieving the worst margin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub z: Vec<f64>,
    pub z_prime: Option<Vec<f64>>,
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub property: String,
    pub dim: usize,
    pub n_samples: usize,
    pub violations: usize,
    /// Samples where an oracle failed to converge. These are neither passes
    /// nor violations.
    pub inconclusive: usize,
    pub worst_margin: f64,
    pub tolerance: f64,
    /// Property-specific extreme (max ratio, min inner product, max deviation).
    pub extreme_value: Option<f64>,
    pub witness: Option<Witness>,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.inconclusive == 0
    }

    pub fn summary(&self) -> String {
        let status = if self.passed() {
            "PASS"
        } else if self.violations == 0 {
            "INCONCLUSIVE"
        } else {
            "FAIL"
        };
        let lambda = self
            .witness
            .as_ref()
            .and_then(|w| w.lambda)
            .map(|l| format!(" lambda={l}"))
            .unwrap_or_default();
        format!(
            "{status} {} n={}{lambda} samples={} violations={} inconclusive={} worst_margin={:e}",
            self.property,
            self.dim,
            self.n_samples,
            self.violations,
            self.inconclusive,
            self.worst_margin
        )
    }
}

#[derive(Clone, Copy)]
enum Extreme {
    Min,
    Max,
}

/// Running reduction over per-sample margins. Ties keep the earliest sample,
/// so the result does not depend on anything but the sample order.
pub(crate) struct Tally {
    property: String,
    dim: usize,
    tolerance: f64,
    lambda: Option<f64>,
    n: usize,
    violations: usize,
    inconclusive: usize,
    worst: Option<(f64, Witness)>,
    extreme_kind: Extreme,
    extreme: Option<f64>,
}

impl Tally {
    fn new(property: &str, dim: usize, tolerance: f64, lambda: Option<f64>, kind: Extreme) -> Self {
        Tally {
            property: property.to_string(),
            dim,
            tolerance,
            lambda,
            n: 0,
            violations: 0,
            inconclusive: 0,
            worst: None,
            extreme_kind: kind,
            extreme: None,
        }
    }

    pub(crate) fn for_min(property: &str, dim: usize, tolerance: f64, lambda: Option<f64>) -> Self {
        Self::new(property, dim, tolerance, lambda, Extreme::Min)
    }

    pub(crate) fn for_max(property: &str, dim: usize, tolerance: f64, lambda: Option<f64>) -> Self {
        Self::new(property, dim, tolerance, lambda, Extreme::Max)
    }

    pub(crate) fn observe(&mut self, value: f64) {
        self.extreme = Some(match (self.extreme, self.extreme_kind) {
            (None, _) => value,
            (Some(e), Extreme::Min) => e.min(value),
            (Some(e), Extreme::Max) => e.max(value),
        });
    }

    pub(crate) fn record(&mut self, margin: f64, z: &[f64], z_prime: Option<&[f64]>) {
        self.n += 1;
        // NaN margins count as violations
        if !(margin >= 0.0) {
            self.violations += 1;
        }
        let worse = match &self.worst {
            None => true,
            Some((w, _)) => margin < *w || (margin.is_nan() && !w.is_nan()),
        };
        if worse {
            self.worst = Some((
                margin,
                Witness {
                    z: z.to_vec(),
                    z_prime: z_prime.map(<[f64]>::to_vec),
                    lambda: self.lambda,
                },
            ));
        }
    }

    pub(crate) fn record_inconclusive(&mut self) {
        self.n += 1;
        self.inconclusive += 1;
    }

    pub(crate) fn finish(self) -> PropertyReport {
        let (worst_margin, witness) = match self.worst {
            Some((m, w)) => (m, Some(w)),
            None => (f64::INFINITY, None),
        };
        PropertyReport {
            property: self.property,
            dim: self.dim,
            n_samples: self.n,
            violations: self.violations,
            inconclusive: self.inconclusive,
            worst_margin,
            tolerance: self.tolerance,
            extreme_value: self.extreme,
            witness,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn norm2(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Norm {
    L2,
    LInf,
}

impl Norm {
    pub fn of(self, v: &[f64]) -> f64 {
        match self {
            Norm::L2 => norm2(v),
            Norm::LInf => norm_inf(v),
        }
    }
}

/// The softmax / lse pair whose properties are being checked.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorUnderTest {
    lambda_scale: f64,
}

impl Default for OperatorUnderTest {
    fn default() -> Self {
        OperatorUnderTest { lambda_scale: 1.0 }
    }
}

impl OperatorUnderTest {
    pub fn exact() -> Self {
        Self::default()
    }

    /// Evaluate at `λ·scale` while the checks claim `λ`.
    pub fn with_lambda_scale(scale: f64) -> Result<Self> {
        Temperature::new(scale)?;
        Ok(OperatorUnderTest { lambda_scale: scale })
    }

    pub fn softmax(&self, z: &[f64], lambda: f64) -> Vec<f64> {
        softmax_slice(z, lambda * self.lambda_scale)
    }

    pub fn lse(&self, z: &[f64], lambda: f64) -> f64 {
        lse_slice(z, lambda * self.lambda_scale)
    }

    pub fn jacobian(&self, z: &[f64], lambda: f64) -> DMatrix<f64> {
        let l = lambda * self.lambda_scale;
        jacobian_matrix(&softmax_slice(z, l), l)
    }

    /// `(σ(z) − σ(z′))ᵀ(z − z′) ≥ −1e−12`.
    pub fn check_monotone(&self, ens: &SampleEnsemble, t: Temperature) -> PropertyReport {
        let l = t.lambda();
        let mut tally = Tally::for_min("monotone", ens.dim, INEQ_TOL, Some(l));
        let mut rng = ens.rng();
        for _ in 0..ens.count {
            let (z, zp) = (ens.score(&mut rng), ens.score(&mut rng));
            let ip = dot(&sub(&self.softmax(&z, l), &self.softmax(&zp, l)), &sub(&z, &zp));
            tally.observe(ip);
            tally.record(ip + INEQ_TOL, &z, Some(&zp));
        }
        tally.finish()
    }

    /// `‖σ(z) − σ(z′)‖₂ ≤ λ‖z − z′‖₂(1 + 1e−9)`; extreme value is the max ratio.
    pub fn check_lipschitz(&self, ens: &SampleEnsemble, t: Temperature) -> PropertyReport {
        let l = t.lambda();
        let mut tally = Tally::for_max("lipschitz", ens.dim, l * LIPSCHITZ_REL_TOL, Some(l));
        let mut rng = ens.rng();
        for _ in 0..ens.count {
            let (z, zp) = (ens.score(&mut rng), ens.score(&mut rng));
            let dz = norm2(&sub(&z, &zp));
            if dz <= 1e-12 {
                continue;
            }
            let ratio = norm2(&sub(&self.softmax(&z, l), &self.softmax(&zp, l))) / dz;
            tally.observe(ratio);
            tally.record(l * (1.0 + LIPSCHITZ_REL_TOL) - ratio, &z, Some(&zp));
        }
        tally.finish()
    }

    /// `(σ(z) − σ(z′))ᵀ(z − z′) ≥ λ⁻¹‖σ(z) − σ(z′)‖₂² − 1e−12`.
    pub fn check_cocoercive(&self, ens: &SampleEnsemble, t: Temperature) -> PropertyReport {
        let l = t.lambda();
        let mut tally = Tally::for_min("cocoercive", ens.dim, INEQ_TOL, Some(l));
        let mut rng = ens.rng();
        for _ in 0..ens.count {
            let (z, zp) = (ens.score(&mut rng), ens.score(&mut rng));
            let ds = sub(&self.softmax(&z, l), &self.softmax(&zp, l));
            let gap = dot(&ds, &sub(&z, &zp)) - dot(&ds, &ds) / l;
            tally.observe(gap);
            tally.record(gap + INEQ_TOL, &z, Some(&zp));
        }
        tally.finish()
    }

    /// `lse(z) ≥ xᵀz − ψ(x)` over sampled `(x, z)`, with equality to 1e−9 at
    /// `x = σ(z)`. The witness carries `(z, x)`.
    pub fn check_fenchel_young(&self, ens: &SampleEnsemble, t: Temperature) -> PropertyReport {
        let l = t.lambda();
        let mut tally = Tally::for_min("fenchel_young", ens.dim, FENCHEL_YOUNG_TOL, Some(l));
        let mut rng = ens.rng();
        for _ in 0..ens.count {
            let z = ens.score(&mut rng);
            let x = ens.simplex_point(&mut rng);
            let v = self.lse(&z, l);
            let gap = v - (dot(&x, &z) - neg_entropy_slice(&x, l));
            let s = self.softmax(&z, l);
            let eq = (v - (dot(&s, &z) - neg_entropy_slice(&s, l))).abs();
            tally.observe(gap);
            let margin = (gap + FENCHEL_YOUNG_TOL).min(CONJUGATE_EQ_TOL - eq);
            tally.record(margin, &z, Some(&x));
        }
        tally.finish()
    }

    /// `σ(z)` against an independent projected-ascent maximizer of
    /// `xᵀz − ψ(x)` over the simplex, to 1e−6 in the ∞-norm. The witness
    /// carries `(z, oracle maximizer)`.
    ///
    /// The oracle's conditioning degrades with the spread of `λz`; choose the
    /// ensemble range accordingly (a spread of `λ(hi − lo) ≲ 6` is cheap).
    pub fn check_argmax_equivalence(&self, ens: &SampleEnsemble, t: Temperature) -> PropertyReport {
        let l = t.lambda();
        let mut tally = Tally::for_max("argmax_equivalence", ens.dim, ORACLE_TOL, Some(l));
        let mut rng = ens.rng();
        for _ in 0..ens.count {
            let z = ens.score(&mut rng);
            let sol = maximize_free_energy(&z, l, &AscentConfig::default());
            if !sol.converged {
                tally.record_inconclusive();
                continue;
            }
            let dev = norm_inf(&sub(&self.softmax(&z, l), &sol.x));
            tally.observe(dev);
            tally.record(ORACLE_TOL - dev, &z, Some(&sol.x));
        }
        tally.finish()
    }

    /// `‖σ(Pz) − Pσ(z)‖∞ ≤ 1e−12` for random permutations `P`. The witness
    /// carries `(z, Pz)`.
    pub fn check_permutation_equivariance(&self, ens: &SampleEnsemble, t: Temperature) -> PropertyReport {
        let l = t.lambda();
        let mut tally = Tally::for_max("permutation_equivariance", ens.dim, INEQ_TOL, Some(l));
        let mut rng = ens.rng();
        let mut perm: Vec<usize> = (0..ens.dim).collect();
        for _ in 0..ens.count {
            let z = ens.score(&mut rng);
            perm.shuffle(&mut rng);
            let pz: Vec<f64> = perm.iter().map(|&i| z[i]).collect();
            let s = self.softmax(&z, l);
            let ps: Vec<f64> = perm.iter().map(|&i| s[i]).collect();
            let dev = norm_inf(&sub(&self.softmax(&pz, l), &ps));
            tally.observe(dev);
            tally.record(INEQ_TOL - dev, &z, Some(&pz));
        }
        tally.finish()
    }

    /// For the standard softmax (`λ = 1`): `zⱼ ≥ zᵢ ⇒ 0 ≤ σⱼ − σᵢ ≤ ½(zⱼ − zᵢ)`.
    pub fn check_coordinate_nonexpansive(&self, ens: &SampleEnsemble) -> PropertyReport {
        let mut tally = Tally::for_min("coordinate_nonexpansive", ens.dim, INEQ_TOL, Some(1.0));
        let mut rng = ens.rng();
        for _ in 0..ens.count {
            let z = ens.score(&mut rng);
            let s = self.softmax(&z, 1.0);
            let mut margin = f64::INFINITY;
            for j in 0..ens.dim {
                for i in 0..ens.dim {
                    if i == j || z[j] < z[i] {
                        continue;
                    }
                    let d = s[j] - s[i];
                    margin = margin.min(d).min(0.5 * (z[j] - z[i]) - d);
                }
            }
            tally.observe(margin);
            tally.record(margin + INEQ_TOL, &z, None);
        }
        tally.finish()
    }

    /// `σᵢ(z) ≥ Πⱼ≠ᵢ 1/(1 + exp(−λ(zᵢ − zⱼ)))`, tight for `n = 2`.
    pub fn check_one_vs_each(&self, ens: &SampleEnsemble, t: Temperature) -> PropertyReport {
        let l = t.lambda();
        let mut tally = Tally::for_min("one_vs_each", ens.dim, INEQ_TOL, Some(l));
        let mut rng = ens.rng();
        for _ in 0..ens.count {
            let z = ens.score(&mut rng);
            let s = self.softmax(&z, l);
            let mut margin = f64::INFINITY;
            for i in 0..ens.dim {
                let bound: f64 = (0..ens.dim)
                    .filter(|&j| j != i)
                    .map(|j| 1.0 / (1.0 + (-l * (z[i] - z[j])).exp()))
                    .product();
                let gap = s[i] - bound;
                margin = margin.min(if ens.dim == 2 { -gap.abs() } else { gap });
            }
            tally.observe(margin);
            tally.record(margin + INEQ_TOL, &z, None);
        }
        tally.finish()
    }

    /// `max z ≤ lse(z) ≤ max z + λ⁻¹ log n`, slack 1e−12 relative to `max(1, |max z|)`.
    pub fn check_vecmax_sandwich(&self, ens: &SampleEnsemble, t: Temperature) -> PropertyReport {
        let l = t.lambda();
        let mut tally = Tally::for_min("vecmax_sandwich", ens.dim, INEQ_TOL, Some(l));
        let log_n = (ens.dim as f64).ln();
        let mut rng = ens.rng();
        for _ in 0..ens.count {
            let z = ens.score(&mut rng);
            let (m, _) = max_index(&z);
            let v = self.lse(&z, l);
            let gap = (v - m).min(m + log_n / l - v);
            tally.observe(gap);
            tally.record(gap + INEQ_TOL * m.abs().max(1.0), &z, None);
        }
        tally.finish()
    }

    /// `σ(z + c·1) = σ(z)` to 1e−12 and `lse(z + c·1) = lse(z) + c` to 1e−9 for
    /// `c ∈ [−10³, 10³]`. The witness carries `(z, z + c·1)`.
    pub fn check_shift_invariance(&self, ens: &SampleEnsemble, t: Temperature) -> PropertyReport {
        let l = t.lambda();
        let mut tally = Tally::for_max("shift_invariance", ens.dim, INEQ_TOL, Some(l));
        let mut rng = ens.rng();
        for _ in 0..ens.count {
            let z = ens.score(&mut rng);
            let c = rng.random_range(-SHIFT_RANGE..=SHIFT_RANGE);
            let zc: Vec<f64> = z.iter().map(|v| v + c).collect();
            let ds = norm_inf(&sub(&self.softmax(&zc, l), &self.softmax(&z, l)));
            let dl = (self.lse(&zc, l) - self.lse(&z, l) - c).abs();
            tally.observe(ds);
            tally.record((INEQ_TOL - ds).min(LSE_SHIFT_TOL - dl), &z, Some(&zc));
        }
        tally.finish()
    }

    /// `|Σσᵢ(z) − 1| ≤ 1e−12` and `σᵢ ≥ 0`.
    pub fn check_normalization(&self, ens: &SampleEnsemble, t: Temperature) -> PropertyReport {
        let l = t.lambda();
        let mut tally = Tally::for_max("normalization", ens.dim, INEQ_TOL, Some(l));
        let mut rng = ens.rng();
        for _ in 0..ens.count {
            let z = ens.score(&mut rng);
            let s = self.softmax(&z, l);
            let dev = (s.iter().sum::<f64>() - 1.0).abs();
            let neg = s.iter().fold(0.0f64, |m, &p| m.min(p));
            tally.observe(dev);
            tally.record((INEQ_TOL - dev).min(neg), &z, None);
        }
        tally.finish()
    }

    /// `σ(z)` against central differences of `lse` (step 1e−5) to 1e−6.
    pub fn check_gradient_relation(&self, ens: &SampleEnsemble, t: Temperature) -> PropertyReport {
        let l = t.lambda();
        let mut tally = Tally::for_max("gradient_relation", ens.dim, ORACLE_TOL, Some(l));
        let mut rng = ens.rng();
        for _ in 0..ens.count {
            let z = ens.score(&mut rng);
            let grad = central_gradient(|v| self.lse(v, l), &z, FD_STEP);
            let dev = norm_inf(&sub(&self.softmax(&z, l), &grad));
            tally.observe(dev);
            tally.record(ORACLE_TOL - dev, &z, None);
        }
        tally.finish()
    }

    /// Analytic Jacobian against central differences of `σ` (step 1e−5) to
    /// 1e−6 absolute, entrywise.
    pub fn check_jacobian_finite_difference(&self, ens: &SampleEnsemble, t: Temperature) -> PropertyReport {
        let l = t.lambda();
        let mut tally = Tally::for_max("jacobian_finite_difference", ens.dim, ORACLE_TOL, Some(l));
        let mut rng = ens.rng();
        for _ in 0..ens.count {
            let z = ens.score(&mut rng);
            let fd = central_jacobian(|v| self.softmax(v, l), &z, FD_STEP);
            let dev = (&self.jacobian(&z, l) - fd).amax();
            tally.observe(dev);
            tally.record(ORACLE_TOL - dev, &z, None);
        }
        tally.finish()
    }

    /// Symmetry and `J·1 = 0` to 1e−12, min eigenvalue `≥ −1e−10`.
    pub fn check_jacobian_structure(&self, ens: &SampleEnsemble, t: Temperature) -> PropertyReport {
        let l = t.lambda();
        let mut tally = Tally::for_min("jacobian_structure", ens.dim, INEQ_TOL, Some(l));
        let mut rng = ens.rng();
        for _ in 0..ens.count {
            let z = ens.score(&mut rng);
            let j = self.jacobian(&z, l);
            let asym = (&j - j.transpose()).amax();
            let rows = j.row_iter().map(|r| r.sum().abs()).fold(0.0, f64::max);
            let min_eig = min_symmetric_eigenvalue(&j);
            tally.observe(min_eig);
            let margin = (INEQ_TOL - asym).min(INEQ_TOL - rows).min(min_eig + PSD_TOL);
            tally.record(margin, &z, None);
        }
        tally.finish()
    }
}

pub fn check_monotone(ens: &SampleEnsemble, t: Temperature) -> PropertyReport {
    OperatorUnderTest::exact().check_monotone(ens, t)
}

pub fn check_lipschitz(ens: &SampleEnsemble, t: Temperature) -> PropertyReport {
    OperatorUnderTest::exact().check_lipschitz(ens, t)
}

pub fn check_cocoercive(ens: &SampleEnsemble, t: Temperature) -> PropertyReport {
    OperatorUnderTest::exact().check_cocoercive(ens, t)
}

pub fn check_fenchel_young(ens: &SampleEnsemble, t: Temperature) -> PropertyReport {
    OperatorUnderTest::exact().check_fenchel_young(ens, t)
}

pub fn check_argmax_equivalence(ens: &SampleEnsemble, t: Temperature) -> PropertyReport {
    OperatorUnderTest::exact().check_argmax_equivalence(ens, t)
}

pub fn check_permutation_equivariance(ens: &SampleEnsemble, t: Temperature) -> PropertyReport {
    OperatorUnderTest::exact().check_permutation_equivariance(ens, t)
}

pub fn check_coordinate_nonexpansive(ens: &SampleEnsemble) -> PropertyReport {
    OperatorUnderTest::exact().check_coordinate_nonexpansive(ens)
}

pub fn check_one_vs_each(ens: &SampleEnsemble, t: Temperature) -> PropertyReport {
    OperatorUnderTest::exact().check_one_vs_each(ens, t)
}

pub fn check_vecmax_sandwich(ens: &SampleEnsemble, t: Temperature) -> PropertyReport {
    OperatorUnderTest::exact().check_vecmax_sandwich(ens, t)
}

pub fn check_shift_invariance(ens: &SampleEnsemble, t: Temperature) -> PropertyReport {
    OperatorUnderTest::exact().check_shift_invariance(ens, t)
}

pub fn check_gradient_relation(ens: &SampleEnsemble, t: Temperature) -> PropertyReport {
    OperatorUnderTest::exact().check_gradient_relation(ens, t)
}

pub fn check_jacobian_finite_difference(ens: &SampleEnsemble, t: Temperature) -> PropertyReport {
    OperatorUnderTest::exact().check_jacobian_finite_difference(ens, t)
}

pub fn check_jacobian_structure(ens: &SampleEnsemble, t: Temperature) -> PropertyReport {
    OperatorUnderTest::exact().check_jacobian_structure(ens, t)
}

/// Largest sampled `‖F(z) − F(z′)‖ / ‖z − z′‖`. A lower bound on the true
/// modulus.
pub fn empirical_lipschitz_modulus<F>(map: F, ens: &SampleEnsemble, norm: Norm) -> f64
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut rng = ens.rng();
    let mut best = 0.0f64;
    for _ in 0..ens.count {
        let (z, zp) = (ens.score(&mut rng), ens.score(&mut rng));
        let dz = norm.of(&sub(&z, &zp));
        if dz <= 1e-12 {
            continue;
        }
        best = best.max(norm.of(&sub(&map(&z), &map(&zp))) / dz);
    }
    best
}

fn central_gradient<F: Fn(&[f64]) -> f64>(f: F, z: &[f64], h: f64) -> Vec<f64> {
    let mut v = z.to_vec();
    (0..z.len())
        .map(|k| {
            v[k] = z[k] + h;
            let fp = f(&v);
            v[k] = z[k] - h;
            let fm = f(&v);
            v[k] = z[k];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

fn central_jacobian<F: Fn(&[f64]) -> Vec<f64>>(f: F, z: &[f64], h: f64) -> DMatrix<f64> {
    let n = z.len();
    let mut out = DMatrix::zeros(n, n);
    let mut v = z.to_vec();
    for k in 0..n {
        v[k] = z[k] + h;
        let fp = f(&v);
        v[k] = z[k] - h;
        let fm = f(&v);
        v[k] = z[k];
        for i in 0..n {
            out[(i, k)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    out
}

/// Euclidean projection onto `{x : xᵢ ≥ floor, Σxᵢ = 1}`.
pub fn project_simplex(v: &[f64], floor: f64) -> Vec<f64> {
    let n = v.len();
    let mass = 1.0 - n as f64 * floor;
    let y: Vec<f64> = v.iter().map(|a| a - floor).collect();
    let mut sorted = y.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - mass) / (k + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    y.iter().map(|a| (a - theta).max(0.0) + floor).collect()
}

#[derive(Debug, Clone, Copy)]
pub struct AscentConfig {
    pub max_iter: usize,
    /// Stop when `λ·(maxᵢ gᵢ − minᵢ gᵢ)` falls below this, `g` being the
    /// objective gradient. At an interior maximizer every `gᵢ` equals the
    /// simplex multiplier, and this spread bounds the relative error of each
    /// `xᵢ` to first order.
    pub tol: f64,
    pub floor: f64,
}

impl Default for AscentConfig {
    fn default() -> Self {
        AscentConfig {
            max_iter: 100_000,
            tol: 1e-10,
            floor: 1e-200,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AscentResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Projected gradient ascent on the free energy `xᵀz − λ⁻¹Σ xⱼ log xⱼ` over
/// the simplex, using only the gradient and the first-order optimality
/// condition. The step is `λ·minᵢ xᵢ / 2`, halved until no coordinate shrinks
/// by more than half.
pub fn maximize_free_energy(z: &[f64], lambda: f64, cfg: &AscentConfig) -> AscentResult {
    let n = z.len();
    let gradient = |x: &[f64]| -> Vec<f64> {
        x.iter().zip(z).map(|(&p, &zi)| zi - (p.ln() + 1.0) / lambda).collect()
    };
    let mut x = vec![1.0 / n as f64; n];
    for it in 0..cfg.max_iter {
        let g = gradient(&x);
        let (gmin, gmax) = g
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        if lambda * (gmax - gmin) <= cfg.tol {
            return AscentResult { x, iterations: it, converged: true };
        }
        let xmin = x.iter().copied().fold(f64::INFINITY, f64::min);
        let mut step = 0.5 * lambda * xmin;
        loop {
            let cand: Vec<f64> = x.iter().zip(&g).map(|(p, gi)| p + step * gi).collect();
            let xn = project_simplex(&cand, cfg.floor);
            if xn.iter().zip(&x).all(|(a, b)| *a >= 0.5 * b) {
                x = xn;
                break;
            }
            step *= 0.5;
            if step < 1e-300 {
                return AscentResult { x, iterations: it + 1, converged: false };
            }
        }
    }
    AscentResult { x, iterations: cfg.max_iter, converged: false }
}

/// Configuration for [`run_suite`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub dims: Vec<usize>,
    pub lambdas: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    pub lo: f64,
    pub hi: f64,
    /// Regularized-argmax oracle runs for dimensions up to this size.
    pub argmax_max_dim: usize,
    /// Sample cap for the regularized-argmax oracle.
    pub argmax_samples: usize,
    /// Regularized-argmax samples are drawn in `[−s/λ, s/λ] ∩ [lo, hi]`.
    pub argmax_spread: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            dims: vec![2, 3, 5, 10],
            lambdas: vec![0.1, 0.5, 1.0, 2.0, 10.0],
            samples: 10_000,
            seed: 7,
            lo: -50.0,
            hi: 50.0,
            argmax_max_dim: 6,
            argmax_samples: 100,
            argmax_spread: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub passed: bool,
    pub reports: Vec<PropertyReport>,
}

/// Runs every sampled check for each `(n, λ)` in the configuration.
pub fn run_suite(cfg: &SuiteConfig, op: &OperatorUnderTest) -> Result<SuiteReport> {
    let mut reports = Vec::new();
    for (di, &n) in cfg.dims.iter().enumerate() {
        for (li, &lambda) in cfg.lambdas.iter().enumerate() {
            let t = Temperature::new(lambda)?;
            let seed = cfg
                .seed
                .wrapping_mul(1_000_003)
                .wrapping_add((di * cfg.lambdas.len() + li) as u64);
            let ens = SampleEnsemble::new(n, cfg.samples, cfg.lo, cfg.hi, seed)?;
            reports.push(op.check_normalization(&ens, t));
            reports.push(op.check_monotone(&ens, t));
            reports.push(op.check_lipschitz(&ens, t));
            reports.push(op.check_cocoercive(&ens, t));
            reports.push(op.check_fenchel_young(&ens, t));
            reports.push(op.check_vecmax_sandwich(&ens, t));
            reports.push(op.check_shift_invariance(&ens, t));
            reports.push(op.check_permutation_equivariance(&ens, t));
            reports.push(op.check_one_vs_each(&ens, t));
            reports.push(op.check_gradient_relation(&ens, t));
            reports.push(op.check_jacobian_finite_difference(&ens, t));
            reports.push(op.check_jacobian_structure(&ens, t));
            if n <= cfg.argmax_max_dim {
                let half = cfg.argmax_spread / lambda;
                let (lo, hi) = (cfg.lo.max(-half), cfg.hi.min(half));
                if lo < hi {
                    let small = ens.with_count(cfg.samples.min(cfg.argmax_samples))?.with_range(lo, hi)?;
                    reports.push(op.check_argmax_equivalence(&small, t));
                }
            }
        }
        let ens = SampleEnsemble::new(n, cfg.samples, cfg.lo, cfg.hi, cfg.seed.wrapping_add(di as u64))?;
        reports.push(op.check_coordinate_nonexpansive(&ens));
    }
    Ok(SuiteReport {
        passed: reports.iter().all(PropertyReport::passed),
        reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lam(l: f64) -> Temperature {
        Temperature::new(l).unwrap()
    }

    #[test]
    fn ensemble_validation() {
        assert!(SampleEnsemble::new(1, 10, 0.0, 1.0, 0).is_err());
        assert!(SampleEnsemble::new(2, 0, 0.0, 1.0, 0).is_err());
        assert!(SampleEnsemble::new(2, 1, 1.0, 1.0, 0).is_err());
        assert!(SampleEnsemble::new(2, 1, 0.0, f64::INFINITY, 0).is_err());
    }

    #[test]
    fn simplex_samples_are_on_the_simplex() {
        let ens = SampleEnsemble::new(6, 100, -1.0, 1.0, 3).unwrap();
        let mut rng = ens.rng();
        for _ in 0..100 {
            let x = ens.simplex_point(&mut rng);
            assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            assert!(x.iter().all(|&p| p > 0.0));
        }
    }

    // Hand-evaluated pair z = (1, 0), z' = (0, 1), lambda = 1.
    #[test]
    fn reference_pair_values() {
        let op = OperatorUnderTest::exact();
        let (z, zp) = ([1.0, 0.0], [0.0, 1.0]);
        let ds = sub(&op.softmax(&z, 1.0), &op.softmax(&zp, 1.0));
        let ip = dot(&ds, &sub(&z, &zp));
        assert!((ip - 0.924_234_314_520_019_5).abs() < 1e-15);
        let ratio = norm2(&ds) / norm2(&sub(&z, &zp));
        assert!((ratio - 0.462_117_157_260_009_76).abs() < 1e-15);
        assert!((dot(&ds, &ds) - 0.427_104_534_068_145_2).abs() < 1e-15);
        // coordinate non-expansiveness for indices (0, 1)
        let s = op.softmax(&z, 1.0);
        assert!((s[0] - s[1] - 0.462_117_157_260_009_76).abs() < 1e-15);
        assert!(s[0] - s[1] <= 0.5);
    }

    #[test]
    fn degenerate_pairs() {
        let op = OperatorUnderTest::exact();
        let z = [0.3, -0.7, 2.0];
        let s = op.softmax(&z, 2.0);
        assert_eq!(dot(&sub(&s, &s), &sub(&z, &z)), 0.0);
        let zc: Vec<f64> = z.iter().map(|v| v + 4.0).collect();
        let ratio = norm2(&sub(&op.softmax(&zc, 2.0), &s)) / norm2(&sub(&zc, &z));
        assert!(ratio < 1e-15);
    }

    #[test]
    fn fenchel_young_closed_cases() {
        // z = 0, x uniform: lse - (x.z - psi(x)) = log n / lambda + (-log n / lambda) ... both sides
        let n = 4;
        let l = 2.0;
        let z = vec![0.0; n];
        let x = vec![0.25; n];
        let lhs = lse_slice(&z, l);
        let rhs = dot(&x, &z) - neg_entropy_slice(&x, l);
        assert!((lhs - (n as f64).ln() / l).abs() < 1e-15);
        assert!((lhs - rhs).abs() < 1e-15);
        let linear = dot(&x, &z);
        assert!((lhs - linear - (n as f64).ln() / l).abs() < 1e-15);
    }

    #[test]
    fn permutation_reversal() {
        let op = OperatorUnderTest::exact();
        let s = op.softmax(&[1.0, 2.0, 3.0], 1.3);
        let r = op.softmax(&[3.0, 2.0, 1.0], 1.3);
        for i in 0..3 {
            assert!((s[i] - r[2 - i]).abs() < 1e-15);
        }
    }

    #[test]
    fn one_vs_each_symmetric_case() {
        let s = softmax_slice(&[0.0, 0.0, 0.0], 1.0);
        let bound = 0.5 * 0.5;
        assert!((s[0] - 1.0 / 3.0).abs() < 1e-16);
        assert!(s[0] >= bound);
    }

    #[test]
    fn small_suite_checks_pass() {
        let t = lam(2.0);
        let ens = SampleEnsemble::new(5, 2000, -50.0, 50.0, 11).unwrap();
        for r in [
            check_monotone(&ens, t),
            check_lipschitz(&ens, t),
            check_cocoercive(&ens, t),
            check_fenchel_young(&ens, t),
            check_permutation_equivariance(&ens, t),
            check_coordinate_nonexpansive(&ens),
            check_one_vs_each(&ens, t),
            check_vecmax_sandwich(&ens, t),
            check_shift_invariance(&ens, t),
            check_gradient_relation(&ens, t),
            check_jacobian_finite_difference(&ens, t),
            check_jacobian_structure(&ens, t),
        ] {
            assert!(r.passed(), "{}", r.summary());
            assert_eq!(r.violations == 0, r.worst_margin >= 0.0);
        }
    }

    #[test]
    fn one_vs_each_is_tight_for_two() {
        let ens = SampleEnsemble::new(2, 2000, -50.0, 50.0, 5).unwrap();
        let r = check_one_vs_each(&ens, lam(0.7));
        assert!(r.passed(), "{}", r.summary());
    }

    #[test]
    fn lipschitz_ratio_never_exceeds_lambda() {
        let ens = SampleEnsemble::new(4, 5000, -50.0, 50.0, 2).unwrap();
        let r = check_lipschitz(&ens, lam(10.0));
        assert!(r.extreme_value.unwrap() <= 10.0);
        assert!(r.passed());
    }

    #[test]
    fn argmax_oracle_reference_points() {
        let sol = maximize_free_energy(&[0.0, 0.0, 0.0], 1.0, &AscentConfig::default());
        assert!(sol.converged);
        assert!(sol.x.iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-12));

        let sol = maximize_free_energy(&[0.0, 3f64.ln()], 1.0, &AscentConfig::default());
        assert!(sol.converged);
        assert!((sol.x[0] - 0.25).abs() < 1e-9, "{:?}", sol.x);
        assert!((sol.x[1] - 0.75).abs() < 1e-9);
    }

    #[test]
    fn argmax_equivalence_small_run() {
        for l in [0.5, 1.0, 2.0] {
            let ens = SampleEnsemble::new(4, 20, -3.0 / l, 3.0 / l, 9).unwrap();
            let r = check_argmax_equivalence(&ens, lam(l));
            assert!(r.passed(), "{}", r.summary());
        }
    }

    #[test]
    fn argmax_oracle_budget_exhaustion_is_inconclusive() {
        let cfg = AscentConfig { max_iter: 2, ..AscentConfig::default() };
        let sol = maximize_free_energy(&[5.0, -5.0, 0.0], 1.0, &cfg);
        assert!(!sol.converged);
    }

    #[test]
    fn projection_onto_simplex() {
        let p = project_simplex(&[0.5, 0.5, 0.5], 0.0);
        assert!(p.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-15));
        let p = project_simplex(&[2.0, 0.0], 0.0);
        assert_eq!(p, vec![1.0, 0.0]);
        let p = project_simplex(&[2.0, 0.0], 1e-3);
        assert!((p[1] - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn empirical_modulus_examples() {
        let ens = SampleEnsemble::new(3, 2000, -5.0, 5.0, 1).unwrap();
        let id = empirical_lipschitz_modulus(|z| z.to_vec(), &ens, Norm::L2);
        assert!((id - 1.0).abs() < 1e-12);
        let sm = empirical_lipschitz_modulus(|z| softmax_slice(z, 1.0), &ens, Norm::L2);
        assert!(sm <= 1.0);
    }

    #[test]
    fn fault_injection_is_detected() {
        let bad = OperatorUnderTest::with_lambda_scale(3.0).unwrap();
        let ens = SampleEnsemble::new(3, 2000, -2.0, 2.0, 4).unwrap();
        let r = bad.check_lipschitz(&ens, lam(1.0));
        assert!(r.violations > 0);
        assert!(r.witness.is_some());
        assert!(r.worst_margin < 0.0);
    }

    #[test]
    fn reports_are_deterministic() {
        let ens = SampleEnsemble::new(5, 500, -50.0, 50.0, 42).unwrap();
        assert_eq!(check_cocoercive(&ens, lam(0.5)), check_cocoercive(&ens, lam(0.5)));
    }

    #[test]
    fn report_json_shape() {
        let ens = SampleEnsemble::new(2, 10, -1.0, 1.0, 0).unwrap();
        let r = check_monotone(&ens, lam(1.0));
        let v = serde_json::to_value(&r).unwrap();
        for key in ["property", "n_samples", "violations", "worst_margin", "witness"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        let w = &v["witness"];
        assert!(w["z"].is_array() && w["z_prime"].is_array());
        assert_eq!(w["lambda"], 1.0);
    }
}
