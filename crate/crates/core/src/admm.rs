//! ADMM on the relaxation with closed-form coordinate updates for `y`.
//!
//! Augmented Lagrangian, with `R_b = Mbar_b(y) - X_b`:
//!
//! ```text
//! L(y, X, Z) = c^T y + sum_b <Z_b, R_b> + 1/(2 mu) ||R_b||_F^2
//! ```
//!
//! In `y_i` alone this is the quadratic `a1 y_i^2 + a2 y_i + const`, so each
//! coordinate update is exact. One outer iteration sweeps `y` until the inner
//! Cauchy test holds, then projects `Mbar_b(y) + mu Z_b` onto the PSD cone to
//! get `X_b` and updates `Z_b` from the projection residual.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{sym_eig, SymMatrix};
use crate::moment::AggregateOperator;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CoordMode {
    /// Sequential sweep in graded-lex order, each update seeing the previous.
    #[default]
    GaussSeidel,
    /// All coordinates updated from the same snapshot.
    Jacobi,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ZUpdate {
    /// `Z = (V - X) / mu`, the multiplier of the scaled form.
    #[default]
    Scaled,
    /// `Z = V - X`.
    Unscaled,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverConfig {
    pub mu: f64,
    pub tol_coord: f64,
    pub tol_admm: f64,
    pub max_inner: usize,
    pub max_outer: usize,
    pub coord_mode: CoordMode,
    pub z_update: ZUpdate,
    /// Per-block X/Z updates (and Jacobi gradients) on the rayon pool.
    pub parallel: bool,
    /// Residual or `||y||_inf` above this stops the solve as diverged.
    pub divergence_limit: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            mu: 1.0,
            tol_coord: 1e-3,
            tol_admm: 1e-3,
            max_inner: 100,
            max_outer: 10_000,
            coord_mode: CoordMode::GaussSeidel,
            z_update: ZUpdate::Scaled,
            parallel: false,
            divergence_limit: 1e8,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64, name: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
            }
        };
        pos(self.mu, "mu")?;
        pos(self.tol_coord, "tol_coord")?;
        pos(self.tol_admm, "tol_admm")?;
        pos(self.divergence_limit, "divergence_limit")?;
        if self.max_inner == 0 || self.max_outer == 0 {
            return Err(Error::InvalidArgument("iteration caps must be positive".into()));
        }
        Ok(())
    }
}

/// Iterate `(y, X, Z)` with one `X_b`, `Z_b` per active block.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockDiagState<T> {
    pub y: Vec<T>,
    pub x: Vec<SymMatrix<T>>,
    pub z: Vec<SymMatrix<T>>,
    /// Outer iterations performed so far.
    pub k: usize,
}

impl<T: Real> BlockDiagState<T> {
    /// `y = e_0`, `X_b = I`, `Z_b = 0`.
    pub fn cold(op: &AggregateOperator<T>) -> Self {
        let mut y = vec![T::zero(); op.len()];
        y[0] = T::one();
        BlockDiagState {
            y,
            x: op.blocks().iter().map(|b| SymMatrix::identity(b.dim())).collect(),
            z: op.blocks().iter().map(|b| SymMatrix::zeros(b.dim())).collect(),
            k: 0,
        }
    }

    pub fn check_shape(&self, op: &AggregateOperator<T>) -> Result<()> {
        if self.y.len() != op.len() {
            return Err(Error::ShapeMismatch(format!(
                "y has length {}, operator expects {}",
                self.y.len(),
                op.len()
            )));
        }
        if self.x.len() != op.blocks().len() || self.z.len() != op.blocks().len() {
            return Err(Error::ShapeMismatch(format!(
                "state has {}/{} blocks, operator has {}",
                self.x.len(),
                self.z.len(),
                op.blocks().len()
            )));
        }
        for (p, b) in op.blocks().iter().enumerate() {
            if self.x[p].dim() != b.dim() || self.z[p].dim() != b.dim() {
                return Err(Error::ShapeMismatch(format!(
                    "block {} has dimension {}, state has {}",
                    b.id(),
                    b.dim(),
                    self.x[p].dim()
                )));
            }
        }
        if (self.y[0] - T::one()).abs() > T::zero() {
            return Err(Error::InvalidArgument("y_0 must be 1".into()));
        }
        Ok(())
    }

    pub fn y_inf(&self) -> T {
        self.y.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.y.iter().all(|v| v.is_finite())
            && self.x.iter().chain(&self.z).all(SymMatrix::is_finite)
    }
}

/// `L_mu(y, X, Z)`.
pub fn augmented_lagrangian<T: Real>(
    op: &AggregateOperator<T>,
    state: &BlockDiagState<T>,
    mu: T,
) -> Result<T> {
    state.check_shape(op)?;
    let half_inv = T::lit(0.5) / mu;
    let mut l = op.objective(&state.y);
    for (p, b) in op.blocks().iter().enumerate() {
        let r = b.value(&state.y).sub(&state.x[p]);
        l += state.z[p].frob_inner_unchecked(&r) + half_inv * r.frob_inner_unchecked(&r);
    }
    Ok(l)
}

/// `(a1, a2)` of the quadratic `L_mu` restricted to `y_i`.
pub fn coord_coefficients<T: Real>(
    i: usize,
    op: &AggregateOperator<T>,
    state: &BlockDiagState<T>,
    mu: T,
) -> Result<(T, T)> {
    state.check_shape(op)?;
    if i == 0 {
        return Err(Error::InvalidArgument("y_0 is pinned".into()));
    }
    if i >= op.len() {
        return Err(Error::InvalidArgument(format!("coordinate {i} out of range")));
    }
    let a1 = op.coord_norm_sq(i) / (T::lit(2.0) * mu);
    if a1 == T::zero() {
        return Err(Error::AbsentCoordinate(i));
    }
    let mut a2 = op.cost()[i];
    for &p in op.blocks_with(i) {
        let b = &op.blocks()[p];
        let mi = b.coeff(i).expect("incidence lists only blocks containing i");
        let mut rest = b.value(&state.y);
        mi.add_scaled_into(-state.y[i], &mut rest);
        let rest = rest.sub(&state.x[p]);
        a2 += mi.inner_dense(&state.z[p]) + mi.inner_dense(&rest) / mu;
    }
    Ok((a1, a2))
}

/// Minimizer `-a2 / (2 a1)` of `a1 t^2 + a2 t`.
pub fn coord_update<T: Real>(a1: T, a2: T) -> Result<T> {
    if !(a1 > T::zero()) || !a2.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "coordinate quadratic needs a1 > 0, got a1 = {a1}, a2 = {a2}"
        )));
    }
    Ok(-a2 / (T::lit(2.0) * a1))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepOutcome {
    pub passes: usize,
    pub converged: bool,
    pub last_step: f64,
}

// W_b = Z_b + R_b / mu, so that dL/dy_i = c_i + sum_b <W_b, M_i^b>.
fn scaled_residuals<T: Real>(
    op: &AggregateOperator<T>,
    state: &BlockDiagState<T>,
    inv_mu: T,
) -> Vec<SymMatrix<T>> {
    op.blocks()
        .iter()
        .enumerate()
        .map(|(p, b)| {
            let mut w = state.z[p].clone();
            w.axpy(inv_mu, &b.value(&state.y).sub(&state.x[p]));
            w
        })
        .collect()
}

fn gradient<T: Real>(op: &AggregateOperator<T>, w: &[SymMatrix<T>], i: usize) -> T {
    let mut g = op.cost()[i];
    for &p in op.blocks_with(i) {
        g += op.blocks()[p].coeff(i).expect("incidence").inner_dense(&w[p]);
    }
    g
}

/// Coordinate minimization of `L_mu` over `y` with `X`, `Z` fixed.
/// Coordinates that appear in no active block are left unchanged.
pub fn sweep_y<T: Real>(
    op: &AggregateOperator<T>,
    state: &mut BlockDiagState<T>,
    cfg: &SolverConfig,
) -> Result<SweepOutcome> {
    state.check_shape(op)?;
    let mu = T::lit(cfg.mu);
    let inv_mu = T::one() / mu;
    let tol = T::lit(cfg.tol_coord);
    let coords: Vec<usize> = (1..op.len())
        .filter(|&i| op.coord_norm_sq(i) > T::zero())
        .collect();
    let mut w = scaled_residuals(op, state, inv_mu);
    let mut last = T::zero();
    for pass in 1..=cfg.max_inner {
        let mut step = T::zero();
        match cfg.coord_mode {
            CoordMode::GaussSeidel => {
                for &i in &coords {
                    let g = gradient(op, &w, i);
                    let delta = -g * mu / op.coord_norm_sq(i);
                    state.y[i] += delta;
                    for &p in op.blocks_with(i) {
                        op.blocks()[p]
                            .coeff(i)
                            .expect("incidence")
                            .add_scaled_into(delta * inv_mu, &mut w[p]);
                    }
                    step = step.max(delta.abs());
                }
            }
            CoordMode::Jacobi => {
                let grad = |&i: &usize| gradient(op, &w, i);
                let g: Vec<T> = if cfg.parallel {
                    coords.par_iter().map(grad).collect()
                } else {
                    coords.iter().map(grad).collect()
                };
                for (&i, g) in coords.iter().zip(g) {
                    let delta = -g * mu / op.coord_norm_sq(i);
                    state.y[i] += delta;
                    step = step.max(delta.abs());
                }
                w = scaled_residuals(op, state, inv_mu);
            }
        }
        if !step.is_finite() {
            return Err(Error::NonFinite);
        }
        last = step;
        if step < tol {
            return Ok(SweepOutcome {
                passes: pass,
                converged: true,
                last_step: last.as_f64(),
            });
        }
    }
    Ok(SweepOutcome {
        passes: cfg.max_inner,
        converged: false,
        last_step: last.as_f64(),
    })
}

/// Euclidean projection onto the PSD cone: eigenvalues clipped at zero.
pub fn psd_project<T: Real>(v: &SymMatrix<T>) -> Result<SymMatrix<T>> {
    let e = sym_eig(v)?;
    Ok(e.reconstruct_with(|l| l.max(T::zero())))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepInfo {
    pub inner: SweepOutcome,
    /// `||y^{k+1} - y^k||_inf`.
    pub dy: f64,
    /// `max_b ||X_b^{k+1} - X_b^k||_F`.
    pub dx: f64,
    /// `sqrt(sum_b ||Mbar_b(y^{k+1}) - X_b^{k+1}||_F^2)`.
    pub primal_residual: f64,
}

/// One outer iteration.
pub fn admm_step<T: Real>(
    op: &AggregateOperator<T>,
    state: &mut BlockDiagState<T>,
    cfg: &SolverConfig,
) -> Result<StepInfo> {
    let y_prev = state.y.clone();
    let inner = sweep_y(op, state, cfg)?;
    let mu = T::lit(cfg.mu);
    let y = &state.y;
    let update = |(p, b): (usize, &crate::moment::BlockSpec<T>)| -> Result<_> {
        let mbar = b.value(y);
        let mut v = mbar.clone();
        v.axpy(mu, &state.z[p]);
        let x = psd_project(&v)?;
        let diff = v.sub(&x);
        let z = match cfg.z_update {
            ZUpdate::Scaled => diff.scaled(T::one() / mu),
            ZUpdate::Unscaled => diff,
        };
        let dx = x.sub(&state.x[p]).frob_norm();
        let r = mbar.sub(&x).frob_norm();
        Ok((x, z, dx, r))
    };
    let updated: Vec<_> = if cfg.parallel {
        op.blocks().par_iter().enumerate().map(update).collect::<Result<_>>()?
    } else {
        op.blocks().iter().enumerate().map(update).collect::<Result<_>>()?
    };
    let mut dx = T::zero();
    let mut res_sq = T::zero();
    for (p, (x, z, d, r)) in updated.into_iter().enumerate() {
        state.x[p] = x;
        state.z[p] = z;
        dx = dx.max(d);
        res_sq += r * r;
    }
    state.k += 1;
    let dy = state
        .y
        .iter()
        .zip(&y_prev)
        .fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()));
    Ok(StepInfo {
        inner,
        dy: dy.as_f64(),
        dx: dx.as_f64(),
        primal_residual: res_sq.sqrt().as_f64(),
    })
}

/// `c_0 - sum_b <M0_b, Z_b>`, the dual objective at the multiplier `-Z`.
pub fn dual_objective<T: Real>(op: &AggregateOperator<T>, state: &BlockDiagState<T>) -> T {
    let mut d = op.cost()[0];
    for (p, b) in op.blocks().iter().enumerate() {
        d -= b.const_part().inner_dense(&state.z[p]);
    }
    d
}

/// `sqrt(sum_b ||Mbar_b(y) - X_b||_F^2)`.
pub fn primal_residual<T: Real>(op: &AggregateOperator<T>, state: &BlockDiagState<T>) -> T {
    op.blocks()
        .iter()
        .enumerate()
        .map(|(p, b)| {
            let r = b.value(&state.y).sub(&state.x[p]);
            r.frob_inner_unchecked(&r)
        })
        .sum::<T>()
        .sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub objective: f64,
    pub dual_objective: f64,
    pub primal_residual: f64,
    pub inner_passes: usize,
    pub dy: f64,
    pub dx: f64,
    pub elapsed_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveStats {
    pub iterations: usize,
    pub inner_passes: usize,
    /// Outer iterations whose inner sweep hit `max_inner`.
    pub inner_capped: usize,
    pub converged: bool,
    pub diverged: bool,
    pub objective: f64,
    pub dual_objective: f64,
    /// `|c^T y - dual|`.
    pub gap: f64,
    pub primal_residual: f64,
    /// Index 0 is the starting point, index `k` the state after step `k`.
    pub residual_history: Vec<f64>,
    pub objective_history: Vec<f64>,
    pub wall_time_s: f64,
}

/// Runs ADMM until `max(||dy||_inf, max_b ||dX_b||_F, primal residual) < tol_admm`,
/// `max_outer`, or divergence.
/// `warm` must match the operator's shape.
pub fn solve_relaxation<T: Real>(
    op: &AggregateOperator<T>,
    warm: Option<BlockDiagState<T>>,
    cfg: &SolverConfig,
) -> Result<(BlockDiagState<T>, SolveStats)> {
    solve_relaxation_observed(op, warm, cfg, &mut |_, _| {})
}

/// Like [`solve_relaxation`], calling `observer` after every outer iteration.
pub fn solve_relaxation_observed<T: Real>(
    op: &AggregateOperator<T>,
    warm: Option<BlockDiagState<T>>,
    cfg: &SolverConfig,
    observer: &mut dyn FnMut(&IterationRecord, &BlockDiagState<T>),
) -> Result<(BlockDiagState<T>, SolveStats)> {
    cfg.validate()?;
    let mut state = match warm {
        Some(s) => {
            s.check_shape(op)?;
            if !s.is_finite() {
                return Err(Error::NonFinite);
            }
            s
        }
        None => BlockDiagState::cold(op),
    };
    let start = Instant::now();
    let mut stats = SolveStats {
        iterations: 0,
        inner_passes: 0,
        inner_capped: 0,
        converged: false,
        diverged: false,
        objective: 0.0,
        dual_objective: 0.0,
        gap: 0.0,
        primal_residual: 0.0,
        residual_history: vec![primal_residual(op, &state).as_f64()],
        objective_history: vec![op.objective(&state.y).as_f64()],
        wall_time_s: 0.0,
    };
    for it in 1..=cfg.max_outer {
        let info = match admm_step(op, &mut state, cfg) {
            Ok(i) => i,
            Err(Error::NonFinite) => {
                stats.diverged = true;
                break;
            }
            Err(e) => return Err(e),
        };
        stats.iterations = it;
        stats.inner_passes += info.inner.passes;
        if !info.inner.converged {
            stats.inner_capped += 1;
        }
        let obj = op.objective(&state.y).as_f64();
        stats.residual_history.push(info.primal_residual);
        stats.objective_history.push(obj);
        let rec = IterationRecord {
            iteration: it,
            objective: obj,
            dual_objective: dual_objective(op, &state).as_f64(),
            primal_residual: info.primal_residual,
            inner_passes: info.inner.passes,
            dy: info.dy,
            dx: info.dx,
            elapsed_s: start.elapsed().as_secs_f64(),
        };
        observer(&rec, &state);
        let limit = cfg.divergence_limit;
        if !state.is_finite()
            || !(info.primal_residual <= limit)
            || !(state.y_inf().as_f64() <= limit)
        {
            stats.diverged = true;
            break;
        }
        if info.dy.max(info.dx).max(info.primal_residual) < cfg.tol_admm {
            stats.converged = true;
            break;
        }
    }
    stats.objective = op.objective(&state.y).as_f64();
    stats.dual_objective = dual_objective(op, &state).as_f64();
    stats.gap = (stats.objective - stats.dual_objective).abs();
    stats.primal_residual = stats.residual_history.last().copied().unwrap_or(0.0);
    stats.wall_time_s = start.elapsed().as_secs_f64();
    Ok((state, stats))
}
