//! Logit equilibria as fixed points of `z ↦ U(σ(z))`.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::games::{MatrixGame, PayoffFunction};
use crate::softmax::{softmax_slice, MixedStrategy, ScoreVector, Temperature};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Stop once `‖U(σ(z)) − z‖∞ ≤ tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// `z ← (1 − α)z + α·U(σ(z))`, `α ∈ (0, 1]`.
    pub damping: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-10,
            max_iter: 100_000,
            damping: 0.5,
        }
    }
}

impl SolverConfig {
    pub fn new(tol: f64, max_iter: usize, damping: f64) -> Result<Self> {
        if !(tol.is_finite() && tol > 0.0) {
            return Err(Error::invalid(format!("tol must be > 0, got {tol}")));
        }
        if max_iter < 1 {
            return Err(Error::invalid("max_iter must be >= 1"));
        }
        if !(damping > 0.0 && damping <= 1.0) {
            return Err(Error::invalid(format!("damping must lie in (0, 1], got {damping}")));
        }
        Ok(SolverConfig { tol, max_iter, damping })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointResult {
    pub z_star: ScoreVector,
    pub x_star: MixedStrategy,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Residual at every iterate, starting with `z0`.
    pub residual_history: Vec<f64>,
}

fn inf_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Damped Picard iteration. Running out of iterations is reported through
/// `converged = false`, not as an error.
pub fn solve_fixed_point<P: PayoffFunction + ?Sized>(
    g: &P,
    t: Temperature,
    z0: &ScoreVector,
    cfg: &SolverConfig,
) -> Result<FixedPointResult> {
    check_dim(g.dim(), z0.len())?;
    let lambda = t.lambda();
    let alpha = cfg.damping;
    let mut z = z0.as_slice().to_vec();
    let mut history = Vec::new();
    let mut iterations = 0;
    loop {
        let image = g.evaluate(&softmax_slice(&z, lambda));
        let residual = inf_dist(&image, &z);
        if !residual.is_finite() {
            return Err(Error::SolverDiverged { iterations });
        }
        history.push(residual);
        let converged = residual <= cfg.tol;
        if converged || iterations == cfg.max_iter {
            let x = softmax_slice(&z, lambda);
            return Ok(FixedPointResult {
                z_star: ScoreVector::new(z)?,
                x_star: MixedStrategy::new(x)?,
                residual,
                iterations,
                converged,
                residual_history: history,
            });
        }
        for (zi, ui) in z.iter_mut().zip(&image) {
            *zi = (1.0 - alpha) * *zi + alpha * ui;
        }
        iterations += 1;
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::SolverDiverged { iterations });
        }
    }
}

/// `σ(z⋆)` from a converged solve.
pub fn logit_equilibrium<P: PayoffFunction + ?Sized>(
    g: &P,
    t: Temperature,
    z0: &ScoreVector,
    cfg: &SolverConfig,
) -> Result<MixedStrategy> {
    let r = solve_fixed_point(g, t, z0, cfg)?;
    if r.converged {
        Ok(r.x_star)
    } else {
        Err(Error::NotConverged {
            residual: r.residual,
            iterations: r.iterations,
        })
    }
}

/// `‖σ(U(x⋆)) − x⋆‖∞` for interior `x⋆`.
pub fn verify_equilibrium<P: PayoffFunction + ?Sized>(
    g: &P,
    t: Temperature,
    x_star: &MixedStrategy,
) -> Result<f64> {
    check_dim(g.dim(), x_star.len())?;
    if !x_star.is_interior() {
        return Err(Error::invalid("equilibrium candidate must lie in the simplex interior"));
    }
    let u = g.evaluate(x_star.as_slice());
    Ok(inf_dist(&softmax_slice(&u, t.lambda()), x_star.as_slice()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractionCertificate {
    /// `‖A‖∞·√n·λ`.
    pub bound: f64,
    pub certified: bool,
}

/// Sufficient condition for `U∘σ` to be an `‖·‖∞`-contraction.
pub fn contraction_certificate(g: &MatrixGame, t: Temperature) -> ContractionCertificate {
    let bound = g.inf_norm() * (g.n() as f64).sqrt() * t.lambda();
    ContractionCertificate {
        bound,
        certified: bound < 1.0,
    }
}

/// Serialized form of a solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumRecord {
    pub z_star: Vec<f64>,
    pub x_star: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub certified_contraction: bool,
    pub lambda: f64,
}

impl EquilibriumRecord {
    pub fn new(result: &FixedPointResult, cert: &ContractionCertificate, t: Temperature) -> Self {
        EquilibriumRecord {
            z_star: result.z_star.as_slice().to_vec(),
            x_star: result.x_star.as_slice().to_vec(),
            residual: result.residual,
            iterations: result.iterations,
            converged: result.converged,
            certified_contraction: cert.certified,
            lambda: t.lambda(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn sv(v: &[f64]) -> ScoreVector {
        ScoreVector::new(v.to_vec()).unwrap()
    }

    fn lam(l: f64) -> Temperature {
        Temperature::new(l).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::new(0.0, 10, 0.5).is_err());
        assert!(SolverConfig::new(1e-8, 0, 0.5).is_err());
        assert!(SolverConfig::new(1e-8, 10, 0.0).is_err());
        assert!(SolverConfig::new(1e-8, 10, 1.5).is_err());
        assert!(SolverConfig::new(1e-8, 10, 1.0).is_ok());
    }

    #[test]
    fn rps_starts_at_fixed_point() {
        let rps = MatrixGame::rock_paper_scissors();
        for l in [0.1, 1.0, 7.0] {
            let r = solve_fixed_point(&rps, lam(l), &sv(&[0.0; 3]), &SolverConfig::default()).unwrap();
            assert!(r.converged);
            assert_eq!(r.iterations, 0);
            assert_eq!(r.residual, 0.0);
        }
    }

    #[test]
    fn constant_payoff_converges_in_one_step() {
        let c = [2.0, -1.0, 0.5];
        let g = MatrixGame::new(DMatrix::from_fn(3, 3, |i, _| c[i])).unwrap();
        let cfg = SolverConfig::new(1e-12, 10, 1.0).unwrap();
        let r = solve_fixed_point(&g, lam(1.0), &sv(&[5.0, 5.0, -3.0]), &cfg).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 1);
        assert!(r.z_star.as_slice().iter().zip(c).all(|(a, b)| (a - b).abs() < 1e-15));
    }

    #[test]
    fn contraction_regime_is_geometric() {
        let rps = MatrixGame::rock_paper_scissors();
        let cfg = SolverConfig::new(1e-12, 1000, 1.0).unwrap();
        let r = solve_fixed_point(&rps, lam(0.1), &sv(&[1.0, 0.5, 0.0]), &cfg).unwrap();
        assert!(r.converged);
        assert!(r.z_star.as_slice().iter().all(|v| v.abs() < 1e-11));
        let h = &r.residual_history;
        assert!(h.windows(2).all(|w| w[1] <= w[0]));
        let ratio = (h[h.len() - 1] / h[0]).powf(1.0 / (h.len() - 1) as f64);
        assert!(ratio < 1.0);
    }

    #[test]
    fn logit_equilibrium_examples() {
        let rps = MatrixGame::rock_paper_scissors();
        let x = logit_equilibrium(&rps, lam(1.0), &sv(&[1.0, 0.5, 0.0]), &SolverConfig::default()).unwrap();
        assert!(x.as_slice().iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-9));

        let zero = MatrixGame::zero(4).unwrap();
        let x = logit_equilibrium(&zero, lam(3.0), &sv(&[1.0, 2.0, 3.0, 4.0]), &SolverConfig::default()).unwrap();
        assert!(x.as_slice().iter().all(|p| (p - 0.25).abs() < 1e-10));
    }

    #[test]
    fn coordination_game_matches_bisection() {
        // A = I, n = 2: x = logistic(λ(2x − 1)); solve the scalar equation by bisection
        let l = 1.0;
        let h = |p: f64| p - 1.0 / (1.0 + (-l * (2.0 * p - 1.0)).exp());
        let (mut a, mut b) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if h(a) * h(m) <= 0.0 {
                b = m;
            } else {
                a = m;
            }
        }
        let root = 0.5 * (a + b);
        let g = MatrixGame::new(DMatrix::identity(2, 2)).unwrap();
        let x = logit_equilibrium(&g, lam(l), &sv(&[0.3, -0.2]), &SolverConfig::default()).unwrap();
        assert!((x.as_slice()[0] - root).abs() < 1e-9, "{:?} vs {root}", x);
    }

    #[test]
    fn non_convergence_is_data() {
        let g = MatrixGame::new(DMatrix::identity(3, 3)).unwrap();
        let cfg = SolverConfig::new(1e-10, 10, 0.5).unwrap();
        let r = solve_fixed_point(&g, lam(5.0), &sv(&[0.0; 3]), &cfg).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 10);
        assert_eq!(r.residual_history.len(), 11);
        assert!(matches!(
            logit_equilibrium(&g, lam(5.0), &sv(&[0.0; 3]), &cfg),
            Err(Error::NotConverged { .. })
        ));
    }

    #[test]
    fn verify_examples() {
        let rps = MatrixGame::rock_paper_scissors();
        let u = MixedStrategy::uniform(3).unwrap();
        assert!(verify_equilibrium(&rps, lam(1.0), &u).unwrap() <= 1e-15);
        let x = MixedStrategy::new(vec![0.6, 0.2, 0.2]).unwrap();
        assert!(verify_equilibrium(&rps, lam(1.0), &x).unwrap() > 0.1);
        let v = MixedStrategy::vertex(3, 1).unwrap();
        assert!(verify_equilibrium(&rps, lam(1.0), &v).is_err());
    }

    #[test]
    fn certificate_examples() {
        let rps = MatrixGame::rock_paper_scissors();
        let c = contraction_certificate(&rps, lam(0.1));
        assert!((c.bound - 0.346_410_161_513_775_46).abs() < 1e-15);
        assert!(c.certified);
        let c = contraction_certificate(&rps, lam(1.0));
        assert!((c.bound - 3.464_101_615_137_754_6).abs() < 1e-14);
        assert!(!c.certified);
        let c = contraction_certificate(&MatrixGame::zero(3).unwrap(), lam(4.0));
        assert_eq!(c.bound, 0.0);
        assert!(c.certified);
    }

    #[test]
    fn record_json_keys() {
        let rps = MatrixGame::rock_paper_scissors();
        let t = lam(1.0);
        let r = solve_fixed_point(&rps, t, &sv(&[0.0; 3]), &SolverConfig::default()).unwrap();
        let rec = EquilibriumRecord::new(&r, &contraction_certificate(&rps, t), t);
        let v = serde_json::to_value(&rec).unwrap();
        for key in ["z_star", "x_star", "residual", "iterations", "converged", "certified_contraction", "lambda"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }

    proptest! {
        #[test]
        fn verified_residual_within_twice_tol(
            a in prop::collection::vec(-1.0f64..1.0, 9),
            z0 in prop::collection::vec(-3.0f64..3.0, 3),
            l in 0.05f64..0.3,
        ) {
            let g = MatrixGame::new(DMatrix::from_row_slice(3, 3, &a)).unwrap();
            let t = lam(l);
            let cfg = SolverConfig::default();
            let x = logit_equilibrium(&g, t, &sv(&z0), &cfg).unwrap();
            prop_assert!(verify_equilibrium(&g, t, &x).unwrap() <= 2.0 * cfg.tol);
        }

        #[test]
        fn shift_consistency(
            z0 in prop::collection::vec(-3.0f64..3.0, 3),
            c in -50.0f64..50.0,
            l in 0.1f64..2.0,
        ) {
            let rps = MatrixGame::rock_paper_scissors();
            let t = lam(l);
            let cfg = SolverConfig::default();
            let z0 = sv(&z0);
            let a = solve_fixed_point(&rps, t, &z0, &cfg).unwrap();
            let b = solve_fixed_point(&rps, t, &z0.shifted(c).unwrap(), &cfg).unwrap();
            for (p, q) in a.x_star.as_slice().iter().zip(b.x_star.as_slice()) {
                prop_assert!((p - q).abs() <= 1e-9);
            }
        }
    }
}
