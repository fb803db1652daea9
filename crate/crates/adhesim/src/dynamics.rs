//! Time integration of the coupled system: conservative finite-volume
//! fluxes (central diffusion + upwind adhesion advection), explicit Euler
//! or Heun stepping, CFL-style step control, and the run loop with
//! monitors.
//!
//! Boundary faces carry zero total flux in both regimes: under the
//! nonlocal Robin condition the diffusive face flux is set equal to the
//! advective one so they cancel, under the zero-zero condition each part
//! vanishes separately. Either way no mass crosses the boundary, which is
//! what makes the discrete mass identities exact.

use crate::analysis::field;
use crate::analysis::monitor::{MonitorRecord, MonitorSeries};
use crate::error::{Error, Result};
use crate::geometry::GridGeometry;
use crate::nonlocal::{eval_adhesion, sup_vec_norm, AdhesionMatrix, KernelSpec, StencilTable};

/// Negative values no deeper than this are clipped to zero and logged.
pub const CLIP_THRESHOLD: f64 = 1e-12;

/// Guard against division by zero velocity / zero reaction rate.
const RATE_EPS: f64 = 1e-12;

/// Boundary regime of the run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcCase {
    /// Total flux zero via diffusive/advective cancellation (clipped
    /// sensing ball).
    RobinNonlocal,
    /// Diffusive and adhesive fluxes vanish separately (shrinking sensing
    /// ball on discs).
    ZeroZero,
}

/// Time integrator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    #[default]
    Euler,
    Heun,
}

/// Advective face reconstruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Limiter {
    /// First-order upwind (positivity over accuracy).
    #[default]
    None,
    /// Second-order upwind with minmod-limited slopes.
    Minmod,
}

/// Model parameters of the two-phenotype system.
#[derive(Debug, Clone)]
pub struct ModelParams {
    /// Mutation rate u -> v.
    pub m: f64,
    /// Carrying capacity.
    pub k: f64,
    /// Growth rate of u.
    pub lambda: f64,
    /// Growth rate of v.
    pub mu: f64,
    pub adhesion: AdhesionMatrix,
    pub kernel: KernelSpec,
    pub d_u: f64,
    pub d_v: f64,
    pub bc: BcCase,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "carrying capacity k must be positive, got {}",
                self.k
            )));
        }
        for (name, v) in [("m", self.m), ("lambda", self.lambda), ("mu", self.mu)] {
            if v < 0.0 || !v.is_finite() {
                return Err(Error::InvalidSpec(format!(
                    "rate {name} must be nonnegative, got {v}"
                )));
            }
        }
        for (name, v) in [("d_u", self.d_u), ("d_v", self.d_v)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidSpec(format!(
                    "diffusivity {name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Cell-centered densities at a time.
#[derive(Debug, Clone)]
pub struct State {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub t: f64,
}

impl State {
    pub fn new(u: Vec<f64>, v: Vec<f64>, t: f64) -> Self {
        Self { u, v, t }
    }

    pub fn zeros(geom: &GridGeometry) -> Self {
        Self {
            u: vec![0.0; geom.n_cells()],
            v: vec![0.0; geom.n_cells()],
            t: 0.0,
        }
    }
}

/// Reaction terms: `r_u = -m u + (lambda/k) u (k - (u+v))`,
/// `r_v = m u + (mu/k) v (k - (u+v))`.
#[inline]
pub fn reaction_terms(u: f64, v: f64, p: &ModelParams) -> (f64, f64) {
    let free = p.k - (u + v);
    (
        -p.m * u + p.lambda / p.k * u * free,
        p.m * u + p.mu / p.k * v * free,
    )
}

/// Face fluxes on the Cartesian face lattice. `x[iy*(nx+1)+ix]` is the flux
/// (in +x direction) through the face between cells `(ix-1,iy)` and
/// `(ix,iy)`; `y` analogously, empty in 1D.
#[derive(Debug, Clone)]
pub struct FaceFluxes {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Assemble the total face fluxes for both densities given the adhesion
/// velocities of the current state.
pub fn assemble_fluxes(
    state: &State,
    k_vel: &[[f64; 2]],
    s_vel: &[[f64; 2]],
    geom: &GridGeometry,
    p: &ModelParams,
    limiter: Limiter,
) -> Result<(FaceFluxes, FaceFluxes)> {
    let fu = field_fluxes(&state.u, k_vel, p.d_u, geom, limiter)?;
    let fv = field_fluxes(&state.v, s_vel, p.d_v, geom, limiter)?;
    Ok((fu, fv))
}

fn field_fluxes(
    q: &[f64],
    w: &[[f64; 2]],
    d: f64,
    geom: &GridGeometry,
    limiter: Limiter,
) -> Result<FaceFluxes> {
    let (nx, ny) = (geom.shape[0], geom.shape[1]);
    let mut fx = vec![0.0; (nx + 1) * ny];
    let mut fy = if geom.dim == 2 {
        vec![0.0; nx * (ny + 1)]
    } else {
        Vec::new()
    };

    for iy in 0..ny {
        for ix in 0..=nx {
            let left = (ix > 0).then(|| geom.flat(ix - 1, iy)).filter(|&c| geom.is_active(c));
            let right = (ix < nx).then(|| geom.flat(ix, iy)).filter(|&c| geom.is_active(c));
            fx[iy * (nx + 1) + ix] = face_flux(q, w, d, geom, 0, left, right, limiter)?;
        }
    }
    if geom.dim == 2 {
        for iy in 0..=ny {
            for ix in 0..nx {
                let below = (iy > 0).then(|| geom.flat(ix, iy - 1)).filter(|&c| geom.is_active(c));
                let above = (iy < ny).then(|| geom.flat(ix, iy)).filter(|&c| geom.is_active(c));
                fy[iy * nx + ix] = face_flux(q, w, d, geom, 1, below, above, limiter)?;
            }
        }
    }
    Ok(FaceFluxes { x: fx, y: fy })
}

#[inline]
fn face_flux(
    q: &[f64],
    w: &[[f64; 2]],
    d: f64,
    geom: &GridGeometry,
    axis: usize,
    lo: Option<usize>,
    hi: Option<usize>,
    limiter: Limiter,
) -> Result<f64> {
    match (lo, hi) {
        (Some(i), Some(j)) => {
            let a = 0.5 * (w[i][axis] + w[j][axis]);
            if a.is_nan() {
                return Err(Error::Propagation(
                    "adhesion velocity is NaN at an interior face".into(),
                ));
            }
            let upwind = match limiter {
                Limiter::None => {
                    if a >= 0.0 {
                        q[i]
                    } else {
                        q[j]
                    }
                }
                Limiter::Minmod => {
                    if a >= 0.0 {
                        let behind = geom
                            .neighbor(i, axis, -1)
                            .filter(|&c| geom.is_active(c))
                            .map(|c| q[i] - q[c]);
                        q[i] + 0.5 * minmod(behind.unwrap_or(0.0), q[j] - q[i])
                    } else {
                        let ahead = geom
                            .neighbor(j, axis, 1)
                            .filter(|&c| geom.is_active(c))
                            .map(|c| q[c] - q[j]);
                        q[j] - 0.5 * minmod(q[j] - q[i], ahead.unwrap_or(0.0))
                    }
                }
            };
            Ok(a * upwind - d * (q[j] - q[i]) / geom.h)
        }
        // Boundary face: zero total flux in both regimes. Robin cancels the
        // diffusive part against u K . nu, zero-zero zeroes each part.
        _ => Ok(0.0),
    }
}

#[inline]
fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

/// Stability ceiling for the explicit step:
/// `safety * min(h^2/(2 n max D), h / max(|K|, |S|, eps), 1/max-rate)`.
pub fn stable_dt(
    state: &State,
    k_vel: &[[f64; 2]],
    s_vel: &[[f64; 2]],
    geom: &GridGeometry,
    p: &ModelParams,
    safety: f64,
) -> Result<f64> {
    if geom.active_cells().is_empty() || state.u.len() != geom.n_cells() {
        return Err(Error::InvalidSpec("state has no active cells".into()));
    }
    let n = geom.dim as f64;
    let cap_diff = geom.h * geom.h / (2.0 * n * p.d_u.max(p.d_v));
    let vmax = sup_vec_norm(k_vel, geom)
        .max(sup_vec_norm(s_vel, geom))
        .max(RATE_EPS);
    let cap_adv = geom.h / vmax;
    let su = field::sup_abs(&state.u, geom);
    let sv = field::sup_abs(&state.v, geom);
    // bounds on |d r_u / d u| and |d r_v / d v| over the current fields
    let rate_u = p.m + p.lambda * (1.0 + (2.0 * su + sv) / p.k);
    let rate_v = p.mu * (1.0 + (su + 2.0 * sv) / p.k);
    let cap_react = 1.0 / rate_u.max(rate_v).max(RATE_EPS);
    Ok(safety * cap_diff.min(cap_adv).min(cap_react))
}

/// Per-step accounting.
#[derive(Debug, Clone, Copy, Default)]
pub struct StepReport {
    /// Cells whose tiny negatives (>= -1e-12) were clipped to zero.
    pub clipped: u64,
    /// Cells left with negatives deeper than the clip threshold.
    pub deep_negative: u64,
    pub min_pre_clip_u: f64,
    pub min_pre_clip_v: f64,
}

/// One explicit step: evaluates the adhesion velocities and advances by
/// `dt`. `dt` is the caller's responsibility (see [`stable_dt`]).
pub fn step(
    state: &State,
    geom: &GridGeometry,
    table: &StencilTable,
    p: &ModelParams,
    dt: f64,
    scheme: Scheme,
    limiter: Limiter,
) -> Result<(State, StepReport)> {
    let (k_vel, s_vel) = eval_adhesion(&state.u, &state.v, table, geom, &p.adhesion)?;
    step_with_velocities(state, &k_vel, &s_vel, geom, table, p, dt, scheme, limiter)
}

/// Step with precomputed velocities for the current state (the run loop
/// reuses them for the CFL bound). Heun re-evaluates the velocities at the
/// predictor stage.
#[allow(clippy::too_many_arguments)]
pub fn step_with_velocities(
    state: &State,
    k_vel: &[[f64; 2]],
    s_vel: &[[f64; 2]],
    geom: &GridGeometry,
    table: &StencilTable,
    p: &ModelParams,
    dt: f64,
    scheme: Scheme,
    limiter: Limiter,
) -> Result<(State, StepReport)> {
    let (rhs_u, rhs_v) = rhs(state, k_vel, s_vel, geom, p, limiter)?;
    let n = geom.n_cells();
    let mut new = State {
        u: vec![0.0; n],
        v: vec![0.0; n],
        t: state.t + dt,
    };
    match scheme {
        Scheme::Euler => {
            for &c in geom.active_cells() {
                new.u[c] = state.u[c] + dt * rhs_u[c];
                new.v[c] = state.v[c] + dt * rhs_v[c];
            }
        }
        Scheme::Heun => {
            let mut pred = State {
                u: vec![0.0; n],
                v: vec![0.0; n],
                t: state.t + dt,
            };
            for &c in geom.active_cells() {
                pred.u[c] = state.u[c] + dt * rhs_u[c];
                pred.v[c] = state.v[c] + dt * rhs_v[c];
            }
            let (k2, s2) = eval_adhesion(&pred.u, &pred.v, table, geom, &p.adhesion)?;
            let (rhs_u2, rhs_v2) = rhs(&pred, &k2, &s2, geom, p, limiter)?;
            for &c in geom.active_cells() {
                new.u[c] = state.u[c] + 0.5 * dt * (rhs_u[c] + rhs_u2[c]);
                new.v[c] = state.v[c] + 0.5 * dt * (rhs_v[c] + rhs_v2[c]);
            }
        }
    }

    let sup_old = field::sup_abs(&state.u, geom).max(field::sup_abs(&state.v, geom));
    let sup_new = field::sup_abs(&new.u, geom).max(field::sup_abs(&new.v, geom));
    if !sup_new.is_finite() {
        return Err(Error::Propagation(
            "state contains NaN/Inf after step".into(),
        ));
    }
    if sup_new > 10.0 * sup_old.max(p.k) {
        return Err(Error::Instability {
            step: 0,
            t: new.t,
            detail: format!("sup grew from {sup_old} to {sup_new} in one step"),
        });
    }

    let mut report = StepReport {
        min_pre_clip_u: field::min_value(&new.u, geom),
        min_pre_clip_v: field::min_value(&new.v, geom),
        ..Default::default()
    };
    for &c in geom.active_cells() {
        for q in [&mut new.u[c], &mut new.v[c]] {
            if *q < 0.0 {
                if *q >= -CLIP_THRESHOLD {
                    *q = 0.0;
                    report.clipped += 1;
                } else {
                    report.deep_negative += 1;
                }
            }
        }
    }
    Ok((new, report))
}

fn rhs(
    state: &State,
    k_vel: &[[f64; 2]],
    s_vel: &[[f64; 2]],
    geom: &GridGeometry,
    p: &ModelParams,
    limiter: Limiter,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (fu, fv) = assemble_fluxes(state, k_vel, s_vel, geom, p, limiter)?;
    let n = geom.n_cells();
    let mut rhs_u = vec![0.0; n];
    let mut rhs_v = vec![0.0; n];
    let nx = geom.shape[0];
    for &c in geom.active_cells() {
        let ix = c % nx;
        let iy = c / nx;
        let mut div_u = (fu.x[iy * (nx + 1) + ix + 1] - fu.x[iy * (nx + 1) + ix]) / geom.h;
        let mut div_v = (fv.x[iy * (nx + 1) + ix + 1] - fv.x[iy * (nx + 1) + ix]) / geom.h;
        if geom.dim == 2 {
            div_u += (fu.y[(iy + 1) * nx + ix] - fu.y[iy * nx + ix]) / geom.h;
            div_v += (fv.y[(iy + 1) * nx + ix] - fv.y[iy * nx + ix]) / geom.h;
        }
        let (r_u, r_v) = reaction_terms(state.u[c], state.v[c], p);
        rhs_u[c] = -div_u + r_u;
        rhs_v[c] = -div_v + r_v;
    }
    Ok((rhs_u, rhs_v))
}

/// Controls for [`run`].
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub t_end: f64,
    pub safety: f64,
    pub scheme: Scheme,
    pub limiter: Limiter,
    /// Fixed step instead of the CFL bound (used by the error-path tests).
    pub dt_override: Option<f64>,
    /// Record a monitor row every this many steps (0: first/last only).
    pub monitor_every: usize,
    /// Keep a state snapshot every this many steps (0: none).
    pub snapshot_every: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            t_end: 1.0,
            safety: 0.9,
            scheme: Scheme::Euler,
            limiter: Limiter::None,
            dt_override: None,
            monitor_every: 100,
            snapshot_every: 0,
        }
    }
}

/// Result of a full run.
#[derive(Debug)]
pub struct RunOutcome {
    pub final_state: State,
    pub monitors: MonitorSeries,
    pub snapshots: Vec<State>,
    pub steps: usize,
    pub total_clipped: u64,
    pub total_deep_negative: u64,
}

/// Advance from `initial` to `t_end`: build velocities, bound the step,
/// advance, monitor. Deterministic for a fixed configuration.
pub fn run(
    geom: &GridGeometry,
    table: &StencilTable,
    p: &ModelParams,
    initial: State,
    opts: &RunOptions,
) -> Result<RunOutcome> {
    p.validate()?;
    if opts.t_end < 0.0 {
        return Err(Error::InvalidSpec("t_end must be nonnegative".into()));
    }
    let mut state = initial;
    let mut monitors = MonitorSeries::default();
    let mut snapshots = Vec::new();
    let mut steps = 0usize;
    let mut total_clipped = 0u64;
    let mut total_deep = 0u64;

    let (mut k_vel, mut s_vel) = eval_adhesion(&state.u, &state.v, table, geom, &p.adhesion)?;
    monitors.push(MonitorRecord::measure(
        &state, &k_vel, &s_vel, geom, p, total_clipped,
    ));

    let t_tol = 1e-12 * opts.t_end.max(1.0);
    while state.t < opts.t_end - t_tol {
        let dt_cap = match opts.dt_override {
            Some(dt) => dt,
            None => stable_dt(&state, &k_vel, &s_vel, geom, p, opts.safety)?,
        };
        let dt = dt_cap.min(opts.t_end - state.t);
        let (next, report) = step_with_velocities(
            &state,
            &k_vel,
            &s_vel,
            geom,
            table,
            p,
            dt,
            opts.scheme,
            opts.limiter,
        )
        .map_err(|e| match e {
            Error::Instability { t, detail, .. } => Error::Instability {
                step: steps,
                t,
                detail,
            },
            other => other,
        })?;
        state = next;
        steps += 1;
        total_clipped += report.clipped;
        total_deep += report.deep_negative;

        let last = state.t >= opts.t_end - t_tol;
        let (kv, sv) = eval_adhesion(&state.u, &state.v, table, geom, &p.adhesion)?;
        k_vel = kv;
        s_vel = sv;
        if last || (opts.monitor_every > 0 && steps % opts.monitor_every == 0) {
            monitors.push(MonitorRecord::measure(
                &state, &k_vel, &s_vel, geom, p, total_clipped,
            ));
        }
        if opts.snapshot_every > 0 && (steps % opts.snapshot_every == 0 || last) {
            snapshots.push(state.clone());
        }
    }

    Ok(RunOutcome {
        final_state: state,
        monitors,
        snapshots,
        steps,
        total_clipped,
        total_deep_negative: total_deep,
    })
}
