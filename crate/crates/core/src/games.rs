//! Single-player matrix games on the simplex.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::properties::{PropertyReport, SampleEnsemble, Tally, INEQ_TOL};
use crate::softmax::MixedStrategy;

/// Tolerance on the largest tangent-space eigenvalue of `(A + Aᵀ)/2`.
pub const STABILITY_EIG_TOL: f64 = 1e-10;

/// A continuous payoff map `x ↦ U(x)` on the simplex.
pub trait PayoffFunction {
    fn dim(&self) -> usize;

    /// `U(x)` for `x` of length [`dim`](Self::dim). Callers guarantee the length.
    fn evaluate(&self, x: &[f64]) -> Vec<f64>;
}

/// `U(x) = A·x` for an `n × n` payoff matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixGame {
    a: DMatrix<f64>,
    name: Option<String>,
}

impl MatrixGame {
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::invalid(format!(
                "payoff matrix must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if a.nrows() < 2 {
            return Err(Error::invalid("a game needs at least 2 actions"));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("payoff matrix has non-finite entries"));
        }
        Ok(MatrixGame { a, name: None })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(i) = rows.iter().position(|r| r.len() != n) {
            return Err(Error::invalid(format!(
                "row {i} has {} entries, expected {n}",
                rows[i].len()
            )));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    /// Standard Rock-Paper-Scissors.
    pub fn rock_paper_scissors() -> Self {
        Self::from_rows(&[
            vec![0.0, -1.0, 1.0],
            vec![1.0, 0.0, -1.0],
            vec![-1.0, 1.0, 0.0],
        ])
        .expect("valid matrix")
        .with_name("rock-paper-scissors")
    }

    pub fn zero(n: usize) -> Result<Self> {
        Self::new(DMatrix::zeros(n, n))
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.a.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    /// `‖A‖∞`, the max absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        self.a
            .row_iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub(crate) fn apply(&self, x: &[f64]) -> Vec<f64> {
        (&self.a * DVector::from_column_slice(x)).as_slice().to_vec()
    }
}

impl PayoffFunction for MatrixGame {
    fn dim(&self) -> usize {
        self.n()
    }

    fn evaluate(&self, x: &[f64]) -> Vec<f64> {
        self.apply(x)
    }
}

/// `U(x) = A·x`.
pub fn payoff(g: &MatrixGame, x: &MixedStrategy) -> Result<Vec<f64>> {
    check_dim(g.n(), x.len())?;
    Ok(g.apply(x.as_slice()))
}

/// `xᵀ·A·x`.
pub fn expected_payoff(g: &MatrixGame, x: &MixedStrategy) -> Result<f64> {
    let u = payoff(g, x)?;
    Ok(x.as_slice().iter().zip(&u).map(|(a, b)| a * b).sum())
}

/// `M = maxᵢⱼ |Aᵢⱼ|`, so `|Uᵢ(x)| ≤ M` on the simplex.
pub fn payoff_bound(g: &MatrixGame) -> f64 {
    g.a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Orthonormal basis of `{y : yᵀ1 = 0}` (Helmert contrasts), as columns.
pub fn tangent_basis(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n - 1, |i, k| {
        let k1 = (k + 1) as f64;
        let scale = 1.0 / (k1 * (k1 + 1.0)).sqrt();
        if i <= k {
            scale
        } else if i == k + 1 {
            -k1 * scale
        } else {
            0.0
        }
    })
}

/// Largest eigenvalue of `(A + Aᵀ)/2` restricted to the simplex tangent space.
pub fn tangent_max_eigenvalue(g: &MatrixGame) -> f64 {
    let sym = (&g.a + g.a.transpose()) * 0.5;
    let v = tangent_basis(g.n());
    let restricted = v.transpose() * sym * &v;
    SymmetricEigen::new(restricted).eigenvalues.max()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    /// Sampled `(x − x′)ᵀ(U(x) − U(x′)) ≤ 1e−12`; witness carries `(x, x′)`.
    pub sampled: PropertyReport,
    pub tangent_max_eigenvalue: f64,
    /// Exact criterion: `yᵀAy ≤ 0` on the tangent space.
    pub stable: bool,
}

impl StabilityReport {
    pub fn criteria_agree(&self) -> bool {
        self.stable == self.sampled.passed()
    }
}

pub fn check_stable_game(g: &MatrixGame, ens: &SampleEnsemble) -> Result<StabilityReport> {
    check_dim(g.n(), ens.dim)?;
    let mut tally = Tally::for_max("stable_game", ens.dim, INEQ_TOL, None);
    let mut rng = ens.rng();
    for _ in 0..ens.count {
        let x = ens.simplex_point(&mut rng);
        let xp = ens.simplex_point(&mut rng);
        let dx: Vec<f64> = x.iter().zip(&xp).map(|(a, b)| a - b).collect();
        let du = g.apply(&dx);
        let form: f64 = dx.iter().zip(&du).map(|(a, b)| a * b).sum();
        tally.observe(form);
        tally.record(INEQ_TOL - form, &x, Some(&xp));
    }
    let eig = tangent_max_eigenvalue(g);
    Ok(StabilityReport {
        sampled: tally.finish(),
        tangent_max_eigenvalue: eig,
        stable: eig <= STABILITY_EIG_TOL,
    })
}
