//! Verification instruments: discrete mass identities, the Lyapunov
//! functional, negative-part probes, the linearised systems around the
//! constant steady states with time-domain rate estimation, and the
//! mild-solution Picard oracle.

pub mod field;
pub mod linear;
pub mod monitor;
pub mod picard;
pub mod propagator;

use crate::dynamics::{reaction_terms, ModelParams, State};
use crate::error::{Error, Result};
use crate::geometry::GridGeometry;

/// Relative residuals of the discrete mass law for one Euler step:
/// `|d(sum q vol) - dt * sum r_q vol| / max(sum q vol, eps)` for `q = u, v`,
/// reactions evaluated on the pre state. Boundary fluxes contribute exactly
/// zero by construction, so a conservative step leaves only rounding.
pub fn mass_balance_residual(
    pre: &State,
    post: &State,
    dt: f64,
    p: &ModelParams,
    geom: &GridGeometry,
) -> Result<(f64, f64)> {
    let n = geom.n_cells();
    if pre.u.len() != n || post.u.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: pre.u.len().min(post.u.len()),
        });
    }
    let vol = geom.cell_volume();
    let dm_u = field::compensated_sum(
        geom.active_cells()
            .iter()
            .map(|&c| (post.u[c] - pre.u[c]) * vol),
    );
    let dm_v = field::compensated_sum(
        geom.active_cells()
            .iter()
            .map(|&c| (post.v[c] - pre.v[c]) * vol),
    );
    let src_u = field::compensated_sum(
        geom.active_cells()
            .iter()
            .map(|&c| reaction_terms(pre.u[c], pre.v[c], p).0 * vol),
    );
    let src_v = field::compensated_sum(
        geom.active_cells()
            .iter()
            .map(|&c| reaction_terms(pre.u[c], pre.v[c], p).1 * vol),
    );
    let eps = 1e-12;
    let mass_u = field::mass(&pre.u, geom);
    let mass_v = field::mass(&pre.v, geom);
    Ok((
        (dm_u - dt * src_u).abs() / mass_u.abs().max(eps),
        (dm_v - dt * src_v).abs() / mass_v.abs().max(eps),
    ))
}

/// The Lyapunov functional
/// `(1/lambda) int u + (1/mu) int v - (k/mu) int log v`,
/// non-increasing when `v` carries no adhesion and `lambda < mu`.
pub fn lyapunov_value(state: &State, p: &ModelParams, geom: &GridGeometry) -> Result<f64> {
    if !(p.mu > 0.0) || !(p.lambda > 0.0) {
        return Err(Error::Domain(
            "lyapunov functional needs lambda > 0 and mu > 0".into(),
        ));
    }
    let min_v = field::min_value(&state.v, geom);
    if !(min_v > 0.0) {
        return Err(Error::Domain(format!(
            "lyapunov functional undefined: min v = {min_v}"
        )));
    }
    let vol = geom.cell_volume();
    let mass_u = field::mass(&state.u, geom);
    let mass_v = field::mass(&state.v, geom);
    let log_v = field::compensated_sum(geom.active_cells().iter().map(|&c| state.v[c].ln() * vol));
    Ok(mass_u / p.lambda + mass_v / p.mu - p.k / p.mu * log_v)
}

/// Squared L2 norms of the negative parts `u_- = -min(u, 0)`, `v_-`.
pub fn negativity_probe(state: &State, geom: &GridGeometry) -> (f64, f64) {
    let vol = geom.cell_volume();
    let nu = field::compensated_sum(
        geom.active_cells()
            .iter()
            .map(|&c| state.u[c].min(0.0).powi(2) * vol),
    );
    let nv = field::compensated_sum(
        geom.active_cells()
            .iter()
            .map(|&c| state.v[c].min(0.0).powi(2) * vol),
    );
    (nu, nv)
}
