//! Construction and evaluation of the adhesion velocities `K[u,v]` and
//! `S[u,v]` for both sensing-domain constructions, plus the brute-force
//! oracle and numerical probes of the operator boundedness/Lipschitz
//! behaviour.
//!
//! Case I senses over the fixed ball of radius `R`, clipped against the
//! domain. Case II shrinks the sensing ball to `min(R, d(x))` where `d` is
//! the distance to the boundary, so the operators vanish at the boundary
//! (defined on balls; the 1D interval acts as the 1D ball, rectangles are
//! rejected).
//!
//! Both the stencil evaluator and the oracle accumulate terms in ascending
//! offset order with identical per-term arithmetic, so the two paths are
//! bit-identical and the equivalence check is robust even where the
//! operator nearly cancels.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{DomainKind, GridGeometry};

/// Sensing-domain construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelCase {
    /// Fixed ball clipped by the domain.
    I,
    /// Ball shrinking to the boundary distance (balls only).
    II,
}

/// Scalar profile `w(r)` on `[0, R)`, nonnegative, zero for `r >= R`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    /// `exp(-1/(1-(r/R)^2))`, the standard compactly supported smooth bump.
    Bump,
    /// `w = 1` on `[0, R)`. Discontinuous at `R`; first-order quadrature.
    TopHat,
}

/// The adhesion kernel `omega(y) = (y/|y|) w(|y|)`, odd by construction.
#[derive(Debug, Clone)]
pub struct KernelSpec {
    pub case: KernelCase,
    pub radius: f64,
    pub profile: ProfileKind,
}

impl KernelSpec {
    pub fn new(case: KernelCase, radius: f64, profile: ProfileKind) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "sensing radius must be positive, got {radius}"
            )));
        }
        Ok(Self {
            case,
            radius,
            profile,
        })
    }

    /// Profile value `w(r)`; zero at and beyond the sensing radius.
    #[inline]
    pub fn profile_value(&self, r: f64) -> f64 {
        if r >= self.radius {
            return 0.0;
        }
        match self.profile {
            ProfileKind::Bump => {
                let s = r / self.radius;
                (-1.0 / (1.0 - s * s)).exp()
            }
            ProfileKind::TopHat => 1.0,
        }
    }

    /// Kernel value at displacement `y`; `omega(0) = 0` (odd).
    #[inline]
    pub fn omega(&self, y: [f64; 2], dim: usize) -> [f64; 2] {
        let r = offset_len(y, dim);
        if r == 0.0 {
            return [0.0, 0.0];
        }
        let w = self.profile_value(r);
        if dim == 1 {
            [y[0] / r * w, 0.0]
        } else {
            [y[0] / r * w, y[1] / r * w]
        }
    }

    /// Supremum of `|omega|` (attained as `r -> 0+` for the bump).
    pub fn sup_omega(&self) -> f64 {
        match self.profile {
            ProfileKind::Bump => (-1.0f64).exp(),
            ProfileKind::TopHat => 1.0,
        }
    }
}

#[inline]
fn offset_len(y: [f64; 2], dim: usize) -> f64 {
    if dim == 1 {
        y[0].abs()
    } else {
        (y[0] * y[0] + y[1] * y[1]).sqrt()
    }
}

/// Adhesion strengths: `m11`/`m22` self-adhesion, `m12`/`m21` cross.
#[derive(Debug, Clone, Copy)]
pub struct AdhesionMatrix {
    pub m11: f64,
    pub m12: f64,
    pub m21: f64,
    pub m22: f64,
}

impl AdhesionMatrix {
    pub fn new(m11: f64, m12: f64, m21: f64, m22: f64) -> Result<Self> {
        for (name, v) in [("m11", m11), ("m12", m12), ("m21", m21), ("m22", m22)] {
            if v < 0.0 || !v.is_finite() {
                return Err(Error::InvalidSpec(format!(
                    "adhesion strength {name} must be nonnegative, got {v}"
                )));
            }
        }
        Ok(Self { m11, m12, m21, m22 })
    }

    /// All strengths 1; the raw integral operator the probes measure.
    pub fn unit() -> Self {
        Self {
            m11: 1.0,
            m12: 1.0,
            m21: 1.0,
            m22: 1.0,
        }
    }

    pub fn zero() -> Self {
        Self {
            m11: 0.0,
            m12: 0.0,
            m21: 0.0,
            m22: 0.0,
        }
    }
}

/// One quadrature node of a cell's sensing stencil: flat-index displacement
/// and the vector weight `omega(y) * h^dim`.
#[derive(Debug, Clone, Copy)]
pub struct StencilEntry {
    pub delta: isize,
    pub weight: [f64; 2],
}

#[derive(Debug, Clone, Copy)]
enum StencilRef {
    /// Shared full-ball stencil (cells at distance >= R from the boundary).
    Interior,
    /// Slice `start..start+len` of the pooled entries.
    Custom { start: u32, len: u32 },
    Exterior,
}

/// Precomputed per-cell quadrature realising the sensing integrals.
/// Immutable after build; evaluation is the hot loop.
#[derive(Debug, Clone)]
pub struct StencilTable {
    pub case: KernelCase,
    pub radius: f64,
    interior: Vec<StencilEntry>,
    pool: Vec<StencilEntry>,
    refs: Vec<StencilRef>,
}

impl StencilTable {
    /// Stencil entries of one cell (empty slice for exterior cells).
    #[inline]
    pub fn entries(&self, cell: usize) -> &[StencilEntry] {
        match self.refs[cell] {
            StencilRef::Interior => &self.interior,
            StencilRef::Custom { start, len } => {
                &self.pool[start as usize..(start + len) as usize]
            }
            StencilRef::Exterior => &[],
        }
    }

    /// Whether the cell uses the shared unclipped full-ball stencil.
    pub fn is_interior_stencil(&self, cell: usize) -> bool {
        matches!(self.refs[cell], StencilRef::Interior)
    }

    pub fn interior_len(&self) -> usize {
        self.interior.len()
    }
}

/// Build the per-cell sensing stencils for a geometry/kernel pair.
///
/// Midpoint quadrature with binary membership: a grid cell belongs to
/// `E(x)` iff its center passes the case test. Entries are generated in
/// ascending offset order and carry `omega` at the offset times the cell
/// volume.
pub fn build_stencils(geom: &GridGeometry, kernel: &KernelSpec) -> Result<StencilTable> {
    if kernel.case == KernelCase::II && geom.kind == DomainKind::Rectangle {
        return Err(Error::UnsupportedGeometry(
            "case II sensing (shrinking ball) is defined on balls only; \
             use the disc (or the 1D interval) or case I"
                .into(),
        ));
    }
    if kernel.case == KernelCase::II && kernel.radius >= geom.inradius() {
        return Err(Error::InvalidSpec(format!(
            "case II requires R < inradius: R = {}, inradius = {}",
            kernel.radius,
            geom.inradius()
        )));
    }
    if geom.kind == DomainKind::Disc && kernel.radius >= geom.extent[0] {
        return Err(Error::InvalidSpec(format!(
            "sensing radius R = {} must satisfy R < L = {} on the disc",
            kernel.radius, geom.extent[0]
        )));
    }

    let h = geom.h;
    let vol = geom.cell_volume();
    let roff = (kernel.radius / h).ceil() as isize;
    let nx = geom.shape[0] as isize;

    // Shared full-ball stencil, ascending offset order.
    let mut interior = Vec::new();
    for_each_offset(roff, geom.dim, |di, dj| {
        if di == 0 && dj == 0 {
            return;
        }
        let y = [di as f64 * h, dj as f64 * h];
        if offset_len(y, geom.dim) < kernel.radius {
            let w = kernel.omega(y, geom.dim);
            interior.push(StencilEntry {
                delta: dj * nx + di,
                weight: [w[0] * vol, w[1] * vol],
            });
        }
    });

    let mut refs = vec![StencilRef::Exterior; geom.n_cells()];
    let mut pool = Vec::new();
    for &cell in geom.active_cells() {
        let center = geom.center(cell);
        let d = geom.distance_to_boundary(center);
        if d >= kernel.radius {
            refs[cell] = StencilRef::Interior;
            continue;
        }
        let r_eff = match kernel.case {
            KernelCase::I => kernel.radius,
            KernelCase::II => kernel.radius.min(d),
        };
        let start = pool.len() as u32;
        let ix = (cell % geom.shape[0]) as isize;
        let iy = (cell / geom.shape[0]) as isize;
        for_each_offset(roff, geom.dim, |di, dj| {
            if di == 0 && dj == 0 {
                return;
            }
            let y = [di as f64 * h, dj as f64 * h];
            if offset_len(y, geom.dim) >= r_eff {
                return;
            }
            let (jx, jy) = (ix + di, iy + dj);
            if jx < 0 || jx >= nx || jy < 0 || jy >= geom.shape[1] as isize {
                return;
            }
            let target = (jy * nx + jx) as usize;
            if !geom.is_active(target) {
                return;
            }
            let w = kernel.omega(y, geom.dim);
            pool.push(StencilEntry {
                delta: dj * nx + di,
                weight: [w[0] * vol, w[1] * vol],
            });
        });
        refs[cell] = StencilRef::Custom {
            start,
            len: pool.len() as u32 - start,
        };
    }

    Ok(StencilTable {
        case: kernel.case,
        radius: kernel.radius,
        interior,
        pool,
        refs,
    })
}

#[inline]
fn for_each_offset(roff: isize, dim: usize, mut f: impl FnMut(isize, isize)) {
    if dim == 1 {
        for di in -roff..=roff {
            f(di, 0);
        }
    } else {
        for dj in -roff..=roff {
            for di in -roff..=roff {
                f(di, dj);
            }
        }
    }
}

/// Evaluate the adhesion velocities on the whole grid.
///
/// `K(x) = sum [m11 u(x+y) + m12 v(x+y)] omega(y) vol`, `S` with the second
/// row. Pure function of immutable inputs, parallel over output cells;
/// per-cell sums run in ascending offset order so results are independent
/// of the thread count.
pub fn eval_adhesion(
    u: &[f64],
    v: &[f64],
    table: &StencilTable,
    geom: &GridGeometry,
    m: &AdhesionMatrix,
) -> Result<(Vec<[f64; 2]>, Vec<[f64; 2]>)> {
    let n = geom.n_cells();
    if u.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: u.len(),
        });
    }
    if v.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: v.len(),
        });
    }

    let cell_sums = |cell: usize| {
        let mut k = [0.0f64; 2];
        let mut s = [0.0f64; 2];
        for e in table.entries(cell) {
            let t = (cell as isize + e.delta) as usize;
            let a = m.m11 * u[t] + m.m12 * v[t];
            let b = m.m21 * u[t] + m.m22 * v[t];
            k[0] += a * e.weight[0];
            k[1] += a * e.weight[1];
            s[0] += b * e.weight[0];
            s[1] += b * e.weight[1];
        }
        (k, s)
    };

    // Per-cell sums are sequential either way, so the parallel and serial
    // paths agree bitwise; small grids skip the fork-join overhead.
    let out: Vec<([f64; 2], [f64; 2])> = if n >= 4096 {
        (0..n).into_par_iter().map(cell_sums).collect()
    } else {
        (0..n).map(cell_sums).collect()
    };

    let mut kk = Vec::with_capacity(n);
    let mut ss = Vec::with_capacity(n);
    for (k, s) in out {
        kk.push(k);
        ss.push(s);
    }
    Ok((kk, ss))
}

/// Brute-force adhesion evaluation that recomputes the `E(x)` membership
/// test per pair instead of consulting the stencil table. Independent of
/// the precomputed path; summation order is ascending offset index, the
/// same documented order as [`eval_adhesion`]. Quadratic in the stencil
/// size — intended for small verification grids.
pub fn direct_adhesion_oracle(
    u: &[f64],
    v: &[f64],
    geom: &GridGeometry,
    kernel: &KernelSpec,
    m: &AdhesionMatrix,
) -> Result<(Vec<[f64; 2]>, Vec<[f64; 2]>)> {
    let n = geom.n_cells();
    if u.len() != n || v.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: u.len().max(v.len()),
        });
    }

    let h = geom.h;
    let vol = geom.cell_volume();
    let roff = (kernel.radius / h).ceil() as isize;
    let nx = geom.shape[0] as isize;
    let ny = geom.shape[1] as isize;

    let mut kk = vec![[0.0f64; 2]; n];
    let mut ss = vec![[0.0f64; 2]; n];
    for cell in 0..n {
        if !geom.is_active(cell) {
            continue;
        }
        let center = geom.center(cell);
        let r_eff = match kernel.case {
            KernelCase::I => kernel.radius,
            KernelCase::II => kernel.radius.min(geom.distance_to_boundary(center)),
        };
        let ix = (cell % geom.shape[0]) as isize;
        let iy = (cell / geom.shape[0]) as isize;
        let mut k = [0.0f64; 2];
        let mut s = [0.0f64; 2];
        for_each_offset(roff, geom.dim, |di, dj| {
            if di == 0 && dj == 0 {
                return;
            }
            let y = [di as f64 * h, dj as f64 * h];
            if offset_len(y, geom.dim) >= r_eff {
                return;
            }
            let (jx, jy) = (ix + di, iy + dj);
            if jx < 0 || jx >= nx || jy < 0 || jy >= ny {
                return;
            }
            let t = (jy * nx + jx) as usize;
            if !geom.is_active(t) {
                return;
            }
            let w = kernel.omega(y, geom.dim);
            let w = [w[0] * vol, w[1] * vol];
            let a = m.m11 * u[t] + m.m12 * v[t];
            let b = m.m21 * u[t] + m.m22 * v[t];
            k[0] += a * w[0];
            k[1] += a * w[1];
            s[0] += b * w[0];
            s[1] += b * w[1];
        });
        kk[cell] = k;
        ss[cell] = s;
    }
    Ok((kk, ss))
}

/// Supremum over cells of the Euclidean norm of a vector field.
pub fn sup_vec_norm(field: &[[f64; 2]], geom: &GridGeometry) -> f64 {
    geom.active_cells()
        .iter()
        .map(|&c| (field[c][0].powi(2) + field[c][1].powi(2)).sqrt())
        .fold(0.0, f64::max)
}

/// Largest relative componentwise deviation between two vector fields,
/// measured against the sup of the first.
pub fn max_rel_diff(a: &[[f64; 2]], b: &[[f64; 2]], geom: &GridGeometry) -> f64 {
    let scale = sup_vec_norm(a, geom).max(1e-300);
    let mut worst = 0.0f64;
    for &c in geom.active_cells() {
        for d in 0..2 {
            worst = worst.max((a[c][d] - b[c][d]).abs());
        }
    }
    worst / scale
}

/// Outcome of [`lipschitz_bound_probe`].
#[derive(Debug, Clone, Copy)]
pub struct LipschitzReport {
    /// max over trials of `||K||_inf / (||f||_1 + ||g||_1)`.
    pub sup_ratio: f64,
    /// max over trials of the adjacent-cell quotient `||K(x)-K(x')||/h`,
    /// scaled by the same L1 mass.
    pub lipschitz_ratio: f64,
    pub trials_used: usize,
}

/// Empirical probe of the operator bounds: draws random nonnegative fields
/// and reports the worst sup-norm and discrete Lipschitz quotients relative
/// to the L1 masses. Zero-mass draws are skipped rather than divided by.
pub fn lipschitz_bound_probe(
    geom: &GridGeometry,
    table: &StencilTable,
    m: &AdhesionMatrix,
    trials: usize,
    seed: u64,
) -> Result<LipschitzReport> {
    use rand::{Rng, SeedableRng};
    if trials == 0 {
        return Err(Error::InvalidSpec("probe needs at least one trial".into()));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n = geom.n_cells();
    let vol = geom.cell_volume();

    let mut sup_ratio = 0.0f64;
    let mut lip_ratio = 0.0f64;
    let mut used = 0;
    for _ in 0..trials {
        let mut f = vec![0.0; n];
        let mut g = vec![0.0; n];
        for &c in geom.active_cells() {
            f[c] = rng.gen::<f64>();
            g[c] = rng.gen::<f64>();
        }
        let mass: f64 = geom.active_cells().iter().map(|&c| (f[c] + g[c]) * vol).sum();
        if mass <= 0.0 {
            continue;
        }
        used += 1;
        let (k, _) = eval_adhesion(&f, &g, table, geom, m)?;
        sup_ratio = sup_ratio.max(sup_vec_norm(&k, geom) / mass);

        let mut quotient = 0.0f64;
        for &cell in geom.active_cells() {
            for axis in 0..geom.dim {
                if let Some(j) = geom.neighbor(cell, axis, 1) {
                    if geom.is_active(j) {
                        let d = ((k[cell][0] - k[j][0]).powi(2)
                            + (k[cell][1] - k[j][1]).powi(2))
                        .sqrt();
                        quotient = quotient.max(d / geom.h);
                    }
                }
            }
        }
        lip_ratio = lip_ratio.max(quotient / mass);
    }
    if !sup_ratio.is_finite() || !lip_ratio.is_finite() {
        return Err(Error::Propagation("probe produced non-finite ratio".into()));
    }
    Ok(LipschitzReport {
        sup_ratio,
        lipschitz_ratio: lip_ratio,
        trials_used: used,
    })
}

/// Weak x1-derivative of the case-II integral `I[f]` on the disc, split as
/// in the interior/outer regions: the gradient term everywhere, plus the
/// moving-boundary circle term where the sensing ball touches the boundary.
///
/// The circle term carries the polar Jacobian `(L - s)` from
/// `d/ds \int_0^{L-s} (.) r dr`, which makes the formula agree with finite
/// differences of `I[f]`.
pub fn case2_weak_derivative(
    f: &[f64],
    geom: &GridGeometry,
    table: &StencilTable,
    kernel: &KernelSpec,
) -> Result<Vec<[f64; 2]>> {
    if geom.kind != DomainKind::Disc {
        return Err(Error::UnsupportedGeometry(
            "the case-II derivative split is defined on the disc".into(),
        ));
    }
    if kernel.case != KernelCase::II {
        return Err(Error::UnsupportedGeometry(
            "derivative split applies to case II kernels".into(),
        ));
    }
    let n = geom.n_cells();
    if f.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: f.len(),
        });
    }

    // d/dx1 of f, centered where possible, one-sided at clipped cells.
    let mut df = vec![0.0; n];
    for &cell in geom.active_cells() {
        let left = geom.neighbor(cell, 0, -1).filter(|&j| geom.is_active(j));
        let right = geom.neighbor(cell, 0, 1).filter(|&j| geom.is_active(j));
        df[cell] = match (left, right) {
            (Some(l), Some(r)) => (f[r] - f[l]) / (2.0 * geom.h),
            (Some(l), None) => (f[cell] - f[l]) / geom.h,
            (None, Some(r)) => (f[r] - f[cell]) / geom.h,
            (None, None) => 0.0,
        };
    }

    // Gradient term: the same quadrature applied to df.
    let unit_row = AdhesionMatrix {
        m11: 1.0,
        m12: 0.0,
        m21: 0.0,
        m22: 0.0,
    };
    let zeros = vec![0.0; n];
    let (mut out, _) = eval_adhesion(&df, &zeros, table, geom, &unit_row)?;

    // Outer region: subtract the boundary-circle term.
    let l = geom.extent[0];
    for &cell in geom.active_cells() {
        let c = geom.center(cell);
        let s = (c[0] * c[0] + c[1] * c[1]).sqrt();
        if s <= l - kernel.radius || s == 0.0 {
            continue;
        }
        let rc = l - s;
        let cos_phi = c[0] / s;
        let samples = ((2.0 * std::f64::consts::PI * rc / geom.h).ceil() as usize).max(64);
        let dtheta = 2.0 * std::f64::consts::PI / samples as f64;
        let mut circ = [0.0f64; 2];
        for mth in 0..samples {
            let th = (mth as f64 + 0.5) * dtheta;
            let e = [th.cos(), th.sin()];
            let p = [c[0] + rc * e[0], c[1] + rc * e[1]];
            let fv = interp_bilinear(f, geom, p);
            let w = kernel.omega([rc * e[0], rc * e[1]], 2);
            circ[0] += fv * w[0] * dtheta;
            circ[1] += fv * w[1] * dtheta;
        }
        out[cell][0] -= cos_phi * rc * circ[0];
        out[cell][1] -= cos_phi * rc * circ[1];
    }
    Ok(out)
}

/// Bilinear interpolation over active cell centers; weights of exterior
/// corners are dropped and the rest renormalised.
fn interp_bilinear(f: &[f64], geom: &GridGeometry, p: [f64; 2]) -> f64 {
    let fx = (p[0] - geom.origin[0]) / geom.h - 0.5;
    let fy = (p[1] - geom.origin[1]) / geom.h - 0.5;
    let ix = fx.floor() as isize;
    let iy = fy.floor() as isize;
    let tx = fx - ix as f64;
    let ty = fy - iy as f64;
    let nx = geom.shape[0] as isize;
    let ny = geom.shape[1] as isize;

    let mut num = 0.0;
    let mut den = 0.0;
    for (dx, dy, w) in [
        (0, 0, (1.0 - tx) * (1.0 - ty)),
        (1, 0, tx * (1.0 - ty)),
        (0, 1, (1.0 - tx) * ty),
        (1, 1, tx * ty),
    ] {
        let (jx, jy) = (ix + dx, iy + dy);
        if jx < 0 || jx >= nx || jy < 0 || jy >= ny {
            continue;
        }
        let cell = (jy * nx + jx) as usize;
        if geom.is_active(cell) {
            num += w * f[cell];
            den += w;
        }
    }
    if den > 0.0 {
        num / den
    } else {
        // fully clipped corner; fall back to the nearest active cell in a
        // widening search
        for ring in 1..4isize {
            for dy in -ring..=ring {
                for dx in -ring..=ring {
                    let (jx, jy) = (ix + dx, iy + dy);
                    if jx < 0 || jx >= nx || jy < 0 || jy >= ny {
                        continue;
                    }
                    let cell = (jy * nx + jx) as usize;
                    if geom.is_active(cell) {
                        return f[cell];
                    }
                }
            }
        }
        0.0
    }
}
