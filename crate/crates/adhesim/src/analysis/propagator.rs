//! Exact discrete heat semigroup `e^{s D L_h}` for the homogeneous-Neumann
//! finite-volume Laplacian: cosine modes on the interval/rectangle (the
//! DCT-II basis diagonalises the reflecting three-point stencil exactly),
//! a dense symmetric eigendecomposition on the masked disc.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{DomainKind, GridGeometry};

struct AxisModes {
    n: usize,
    /// `lambda_k = -(4/h^2) sin^2(pi k / (2n))`.
    eigenvalues: Vec<f64>,
    /// Orthonormal basis, `basis[k*n + i] = c_k cos(pi k (i+1/2)/n)`.
    basis: Vec<f64>,
}

impl AxisModes {
    fn new(n: usize, h: f64) -> Self {
        let mut eigenvalues = Vec::with_capacity(n);
        let mut basis = vec![0.0; n * n];
        for k in 0..n {
            let lam = -(4.0 / (h * h))
                * (std::f64::consts::PI * k as f64 / (2.0 * n as f64)).sin().powi(2);
            eigenvalues.push(lam);
            let norm = if k == 0 {
                (1.0 / n as f64).sqrt()
            } else {
                (2.0 / n as f64).sqrt()
            };
            for i in 0..n {
                basis[k * n + i] = norm
                    * (std::f64::consts::PI * k as f64 * (i as f64 + 0.5) / n as f64).cos();
            }
        }
        Self {
            n,
            eigenvalues,
            basis,
        }
    }

    fn forward(&self, f: &[f64], out: &mut [f64]) {
        for k in 0..self.n {
            let row = &self.basis[k * self.n..(k + 1) * self.n];
            out[k] = row.iter().zip(f).map(|(b, x)| b * x).sum();
        }
    }

    fn backward(&self, coeff: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        for k in 0..self.n {
            let row = &self.basis[k * self.n..(k + 1) * self.n];
            let c = coeff[k];
            for i in 0..self.n {
                out[i] += c * row[i];
            }
        }
    }
}

enum Backend {
    Interval(AxisModes),
    Rectangle(AxisModes, AxisModes),
    Masked {
        active: Vec<usize>,
        eigenvalues: Vec<f64>,
        eigenvectors: DMatrix<f64>,
    },
}

/// Heat semigroup applier for one geometry.
pub struct HeatPropagator {
    backend: Backend,
    n_cells: usize,
}

impl HeatPropagator {
    /// Precompute the eigenstructure. The masked path is dense; it is meant
    /// for oracle-scale grids (a few thousand active cells).
    pub fn new(geom: &GridGeometry) -> Result<Self> {
        let backend = match geom.kind {
            DomainKind::Interval => Backend::Interval(AxisModes::new(geom.shape[0], geom.h)),
            DomainKind::Rectangle => Backend::Rectangle(
                AxisModes::new(geom.shape[0], geom.h),
                AxisModes::new(geom.shape[1], geom.h),
            ),
            DomainKind::Disc => {
                let active = geom.active_cells().to_vec();
                let na = active.len();
                if na > 64 * 64 {
                    return Err(Error::InvalidSpec(format!(
                        "dense propagator capped at 64^2 active cells, got {na}"
                    )));
                }
                let mut slot = vec![usize::MAX; geom.n_cells()];
                for (s, &c) in active.iter().enumerate() {
                    slot[c] = s;
                }
                let h2 = geom.h * geom.h;
                let mut l = DMatrix::<f64>::zeros(na, na);
                for (s, &c) in active.iter().enumerate() {
                    for axis in 0..geom.dim {
                        for side in [-1i8, 1] {
                            if let Some(j) = geom.neighbor(c, axis, side) {
                                if geom.is_active(j) {
                                    let sj = slot[j];
                                    l[(s, sj)] += 1.0 / h2;
                                    l[(s, s)] -= 1.0 / h2;
                                }
                            }
                        }
                    }
                }
                let eig = l.symmetric_eigen();
                Backend::Masked {
                    active,
                    eigenvalues: eig.eigenvalues.iter().copied().collect(),
                    eigenvectors: eig.eigenvectors,
                }
            }
        };
        Ok(Self {
            backend,
            n_cells: geom.n_cells(),
        })
    }

    /// Apply `e^{s d L_h}` to a full-grid field (exterior slots pass
    /// through as zero).
    pub fn apply_heat(&self, s: f64, d: f64, f: &[f64]) -> Vec<f64> {
        debug_assert_eq!(f.len(), self.n_cells);
        match &self.backend {
            Backend::Interval(modes) => {
                let mut coeff = vec![0.0; modes.n];
                modes.forward(f, &mut coeff);
                for k in 0..modes.n {
                    coeff[k] *= (s * d * modes.eigenvalues[k]).exp();
                }
                let mut out = vec![0.0; modes.n];
                modes.backward(&coeff, &mut out);
                out
            }
            Backend::Rectangle(mx, my) => {
                let (nx, ny) = (mx.n, my.n);
                // transform rows (x), then columns (y)
                let mut cx = vec![0.0; nx * ny];
                let mut buf_in = vec![0.0; nx];
                let mut buf_out = vec![0.0; nx];
                for iy in 0..ny {
                    buf_in.copy_from_slice(&f[iy * nx..(iy + 1) * nx]);
                    mx.forward(&buf_in, &mut buf_out);
                    cx[iy * nx..(iy + 1) * nx].copy_from_slice(&buf_out);
                }
                let mut cxy = vec![0.0; nx * ny];
                let mut col_in = vec![0.0; ny];
                let mut col_out = vec![0.0; ny];
                for kx in 0..nx {
                    for iy in 0..ny {
                        col_in[iy] = cx[iy * nx + kx];
                    }
                    my.forward(&col_in, &mut col_out);
                    for ky in 0..ny {
                        cxy[ky * nx + kx] = col_out[ky];
                    }
                }
                for ky in 0..ny {
                    for kx in 0..nx {
                        cxy[ky * nx + kx] *=
                            (s * d * (mx.eigenvalues[kx] + my.eigenvalues[ky])).exp();
                    }
                }
                // invert: columns then rows
                let mut back = vec![0.0; nx * ny];
                for kx in 0..nx {
                    for ky in 0..ny {
                        col_in[ky] = cxy[ky * nx + kx];
                    }
                    my.backward(&col_in, &mut col_out);
                    for iy in 0..ny {
                        back[iy * nx + kx] = col_out[iy];
                    }
                }
                let mut out = vec![0.0; nx * ny];
                for iy in 0..ny {
                    buf_in.copy_from_slice(&back[iy * nx..(iy + 1) * nx]);
                    mx.backward(&buf_in, &mut buf_out);
                    out[iy * nx..(iy + 1) * nx].copy_from_slice(&buf_out);
                }
                out
            }
            Backend::Masked {
                active,
                eigenvalues,
                eigenvectors,
            } => {
                let na = active.len();
                let mut fa = DVector::<f64>::zeros(na);
                for (idx, &c) in active.iter().enumerate() {
                    fa[idx] = f[c];
                }
                let mut coeff = eigenvectors.transpose() * fa;
                for (idx, lam) in eigenvalues.iter().enumerate() {
                    coeff[idx] *= (s * d * lam).exp();
                }
                let ga = eigenvectors * coeff;
                let mut out = vec![0.0; self.n_cells];
                for (idx, &c) in active.iter().enumerate() {
                    out[c] = ga[idx];
                }
                out
            }
        }
    }

    /// Apply the mild-solution operator `e^{-s A}` with `A = I - d L_h`.
    pub fn apply_semigroup(&self, s: f64, d: f64, f: &[f64]) -> Vec<f64> {
        let mut out = self.apply_heat(s, d, f);
        let damp = (-s).exp();
        for x in &mut out {
            *x *= damp;
        }
        out
    }
}
