//! Exponentially-discounted score dynamics `ż = U(σ(z)) − z`.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::games::{payoff_bound, MatrixGame, PayoffFunction};
use crate::properties::{PropertyReport, Tally};
use crate::softmax::{jacobian_matrix, lse_slice, softmax_slice, MixedStrategy, ScoreVector, Temperature};

/// Per-step slack on `V(t_{k+1}) ≤ V(t_k)`.
pub const LYAPUNOV_STEP_TOL: f64 = 1e-10;
/// Slack on the discrete dissipation rate.
pub const LYAPUNOV_RATE_TOL: f64 = 1e-3;
/// `‖U(σ(z⋆)) − z⋆‖₂` above this rejects a Lyapunov reference.
pub const REST_POINT_TOL: f64 = 1e-8;
/// Slack on the invariant-set radius.
pub const INVARIANT_SET_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            dt: 0.01,
            t_end: 50.0,
            record_every: 10,
        }
    }
}

impl IntegratorConfig {
    pub fn new(dt: f64, t_end: f64, record_every: usize) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid(format!("dt must be > 0, got {dt}")));
        }
        if !(t_end.is_finite() && t_end >= dt) {
            return Err(Error::invalid(format!("t_end must be >= dt, got {t_end}")));
        }
        if record_every < 1 {
            return Err(Error::invalid("record_every must be >= 1"));
        }
        Ok(IntegratorConfig { dt, t_end, record_every })
    }

    /// Step count; the last step is shortened when `t_end/dt` is not integral.
    fn steps(&self) -> usize {
        let ratio = self.t_end / self.dt;
        let rounded = ratio.round();
        if (ratio - rounded).abs() <= 1e-9 * rounded.max(1.0) {
            rounded as usize
        } else {
            ratio.ceil() as usize
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub z: Vec<f64>,
    pub x: Vec<f64>,
    /// Lyapunov value, once a reference point has been attached.
    pub v: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn first(&self) -> Option<&TrajectorySample> {
        self.samples.first()
    }

    pub fn last(&self) -> Option<&TrajectorySample> {
        self.samples.last()
    }

    pub fn dim(&self) -> usize {
        self.first().map_or(0, |s| s.z.len())
    }

    /// Fills every sample's `V` relative to `z_star`.
    pub fn attach_reference(&mut self, z_star: &ScoreVector, t: Temperature) -> Result<()> {
        check_dim(self.dim(), z_star.len())?;
        for s in &mut self.samples {
            s.v = Some(bregman(&s.z, z_star.as_slice(), t.lambda()));
        }
        Ok(())
    }
}

fn bregman(z: &[f64], z_star: &[f64], lambda: f64) -> f64 {
    let s = softmax_slice(z_star, lambda);
    let lin: f64 = s.iter().zip(z.iter().zip(z_star)).map(|(p, (a, b))| p * (a - b)).sum();
    lse_slice(z, lambda) - lse_slice(z_star, lambda) - lin
}

fn field<P: PayoffFunction + ?Sized>(g: &P, lambda: f64, z: &[f64]) -> Vec<f64> {
    let u = g.evaluate(&softmax_slice(z, lambda));
    u.iter().zip(z).map(|(a, b)| a - b).collect()
}

/// `U(σ(z)) − z`.
pub fn score_field<P: PayoffFunction + ?Sized>(g: &P, t: Temperature, z: &ScoreVector) -> Result<Vec<f64>> {
    check_dim(g.dim(), z.len())?;
    Ok(field(g, t.lambda(), z.as_slice()))
}

fn rk4_step<P: PayoffFunction + ?Sized>(g: &P, lambda: f64, z: &[f64], h: f64) -> Vec<f64> {
    let axpy = |a: &[f64], k: &[f64], s: f64| -> Vec<f64> { a.iter().zip(k).map(|(x, y)| x + s * y).collect() };
    let k1 = field(g, lambda, z);
    let k2 = field(g, lambda, &axpy(z, &k1, h / 2.0));
    let k3 = field(g, lambda, &axpy(z, &k2, h / 2.0));
    let k4 = field(g, lambda, &axpy(z, &k3, h));
    (0..z.len())
        .map(|i| z[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// Classical fixed-step RK4. Records `t = 0`, every `record_every`-th step
/// and the final state at `t_end`.
pub fn integrate<P: PayoffFunction + ?Sized>(
    g: &P,
    t: Temperature,
    z0: &ScoreVector,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    check_dim(g.dim(), z0.len())?;
    let lambda = t.lambda();
    let steps = cfg.steps();
    let sample = |time: f64, z: &[f64]| TrajectorySample {
        t: time,
        z: z.to_vec(),
        x: softmax_slice(z, lambda),
        v: None,
    };
    let mut traj = Trajectory {
        samples: vec![sample(0.0, z0.as_slice())],
    };
    let mut z = z0.as_slice().to_vec();
    for k in 1..=steps {
        let t_prev = (k - 1) as f64 * cfg.dt;
        let t_next = if k == steps { cfg.t_end } else { k as f64 * cfg.dt };
        z = rk4_step(g, lambda, &z, t_next - t_prev);
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::IntegrationDiverged {
                t: t_next,
                partial: Box::new(traj),
            });
        }
        if k % cfg.record_every == 0 || k == steps {
            traj.samples.push(sample(t_next, &z));
        }
    }
    Ok(traj)
}

/// Bregman divergence of `lse`: `lse(z) − lse(z⋆) − σ(z⋆)ᵀ(z − z⋆)`.
pub fn lyapunov_value(z: &ScoreVector, z_star: &ScoreVector, t: Temperature) -> Result<f64> {
    check_dim(z.len(), z_star.len())?;
    Ok(bregman(z.as_slice(), z_star.as_slice(), t.lambda()))
}

/// Scans consecutive recorded samples for `ΔV ≤ 1e−10` and
/// `ΔV/Δt ≤ −λ⁻¹‖σ(z) − σ(z⋆)‖₂² + 1e−3`, using the smaller endpoint value of
/// the squared distance over each interval. The witness carries the pair of
/// states bounding the worst interval.
pub fn monitor_lyapunov<P: PayoffFunction + ?Sized>(
    traj: &Trajectory,
    g: &P,
    z_star: &ScoreVector,
    t: Temperature,
) -> Result<PropertyReport> {
    check_dim(g.dim(), z_star.len())?;
    check_dim(z_star.len(), traj.dim())?;
    let lambda = t.lambda();
    let residual = field(g, lambda, z_star.as_slice());
    let field_norm = residual.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(field_norm <= REST_POINT_TOL) {
        return Err(Error::InvalidReference { field_norm });
    }
    let s_star = softmax_slice(z_star.as_slice(), lambda);
    let dist2 = |x: &[f64]| -> f64 { x.iter().zip(&s_star).map(|(a, b)| (a - b) * (a - b)).sum() };
    let mut tally = Tally::for_max("lyapunov_dissipation", traj.dim(), LYAPUNOV_STEP_TOL, Some(lambda));
    for pair in traj.samples.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let va = bregman(&a.z, z_star.as_slice(), lambda);
        let vb = bregman(&b.z, z_star.as_slice(), lambda);
        let dv = vb - va;
        let rate = dv / (b.t - a.t);
        let bound = -dist2(&a.x).min(dist2(&b.x)) / lambda;
        tally.observe(dv);
        let margin = (LYAPUNOV_STEP_TOL - dv).min(bound + LYAPUNOV_RATE_TOL - rate);
        tally.record(margin, &a.z, Some(&b.z));
    }
    Ok(tally.finish())
}

/// `λ(diag(x) − xxᵀ)u`.
pub fn replicator_field(x: &MixedStrategy, u: &[f64], t: Temperature) -> Result<Vec<f64>> {
    check_dim(x.len(), u.len())?;
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("payoff vector has non-finite entries"));
    }
    let p = x.as_slice();
    let mean: f64 = p.iter().zip(u).map(|(a, b)| a * b).sum();
    Ok(p.iter().zip(u).map(|(pi, ui)| t.lambda() * pi * (ui - mean)).collect())
}

/// Same as [`replicator_field`] but through the explicit matrix
/// `λ(diag(x) − xxᵀ)`, for consistency checks.
pub fn replicator_matrix_field(x: &MixedStrategy, u: &[f64], t: Temperature) -> Result<Vec<f64>> {
    check_dim(x.len(), u.len())?;
    let m = jacobian_matrix(x.as_slice(), t.lambda());
    Ok((m * nalgebra::DVector::from_column_slice(u)).as_slice().to_vec())
}

/// `‖z(t)‖₂ ≤ max(‖z(0)‖₂, √n·M) + 1e−8` along the trajectory. Extreme value
/// is the largest norm seen.
pub fn invariant_set_check(traj: &Trajectory, g: &MatrixGame) -> Result<PropertyReport> {
    check_dim(g.n(), traj.dim())?;
    let norm = |z: &[f64]| z.iter().map(|v| v * v).sum::<f64>().sqrt();
    let radius = (g.n() as f64).sqrt() * payoff_bound(g);
    let z0 = traj.first().map_or(0.0, |s| norm(&s.z));
    let bound = z0.max(radius) + INVARIANT_SET_TOL;
    let mut tally = Tally::for_max("invariant_set", g.n(), INVARIANT_SET_TOL, None);
    for s in &traj.samples {
        let r = norm(&s.z);
        tally.observe(r);
        tally.record(bound - r, &s.z, None);
    }
    Ok(tally.finish())
}
