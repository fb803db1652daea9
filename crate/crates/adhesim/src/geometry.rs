//! Masked Cartesian grids for the supported domains (1D interval, 2D
//! rectangle, 2D disc), boundary face normals, and the tapered interior
//! extension of the outward normal field.
//!
//! The disc uses a staircase mask: a cell belongs to the domain iff its
//! center does, and boundary faces are the Cartesian faces separating
//! inside from outside. The accepted O(h) boundary error is quantified by
//! the refinement tests and the `convergence` subcommand. Distances to the
//! boundary are computed analytically per domain kind.

use crate::error::{Error, Result};

/// Supported domain shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    /// `[0, L]` in 1D.
    Interval,
    /// `[0, Lx] x [0, Ly]`.
    Rectangle,
    /// Ball of radius `L` centered at the origin.
    Disc,
}

/// Per-cell classification. Every cell is exactly one of these.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    Interior,
    BoundaryAdjacent,
    /// Outside the domain; carries no field data.
    Exterior,
}

/// Construction request for [`build_geometry`].
#[derive(Debug, Clone)]
pub struct GeometrySpec {
    pub kind: DomainKind,
    /// Lengths per axis (interval: `[L]`, rectangle: `[Lx, Ly]`) or the
    /// radius (disc: `[L]`).
    pub extents: Vec<f64>,
    /// Grid spacing.
    pub h: f64,
}

/// A boundary face of the masked grid: the Cartesian face of `cell` on the
/// given `axis`/`side` whose neighbour is outside the domain.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryFace {
    pub cell: usize,
    pub axis: usize,
    /// `+1` for the high side, `-1` for the low side.
    pub side: i8,
    /// Unit outward normal. Axis-aligned for interval/rectangle; for the
    /// disc it points along `x/|x|` at the face center.
    pub normal: [f64; 2],
}

/// Immutable discretised domain. Safe to share across parallel workers.
#[derive(Debug, Clone)]
pub struct GridGeometry {
    pub kind: DomainKind,
    pub dim: usize,
    /// Domain lengths per axis; for the disc, `extent[0]` is the radius.
    pub extent: [f64; 2],
    pub h: f64,
    /// Cells per axis of the bounding box (`shape[1] == 1` in 1D).
    pub shape: [usize; 2],
    /// Coordinate of the low corner of the bounding box.
    pub origin: [f64; 2],
    mask: Vec<CellKind>,
    /// Flat indices of non-exterior cells, ascending.
    active: Vec<usize>,
    boundary_faces: Vec<BoundaryFace>,
    /// Tapered extension of the outward normal, zero outside the band.
    normal_extension: Vec<[f64; 2]>,
    /// Band width of the normal extension.
    pub band_width: f64,
}

impl GridGeometry {
    #[inline]
    pub fn n_cells(&self) -> usize {
        self.shape[0] * self.shape[1]
    }

    #[inline]
    pub fn flat(&self, ix: usize, iy: usize) -> usize {
        iy * self.shape[0] + ix
    }

    #[inline]
    pub fn mask(&self, cell: usize) -> CellKind {
        self.mask[cell]
    }

    #[inline]
    pub fn is_active(&self, cell: usize) -> bool {
        self.mask[cell] != CellKind::Exterior
    }

    /// Non-exterior cells in ascending flat order.
    pub fn active_cells(&self) -> &[usize] {
        &self.active
    }

    pub fn boundary_faces(&self) -> &[BoundaryFace] {
        &self.boundary_faces
    }

    pub fn normal_extension(&self) -> &[[f64; 2]] {
        &self.normal_extension
    }

    /// Cell center coordinates.
    #[inline]
    pub fn center(&self, cell: usize) -> [f64; 2] {
        let ix = cell % self.shape[0];
        let iy = cell / self.shape[0];
        [
            self.origin[0] + (ix as f64 + 0.5) * self.h,
            if self.dim == 2 {
                self.origin[1] + (iy as f64 + 0.5) * self.h
            } else {
                0.0
            },
        ]
    }

    /// Volume of a single cell (`h^dim`).
    #[inline]
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    /// Analytic distance from a point to the domain boundary (positive
    /// inside). For the disc this is `L - |x|`; for boxes the minimum wall
    /// distance.
    pub fn distance_to_boundary(&self, p: [f64; 2]) -> f64 {
        match self.kind {
            DomainKind::Interval => (p[0]).min(self.extent[0] - p[0]),
            DomainKind::Rectangle => {
                let dx = p[0].min(self.extent[0] - p[0]);
                let dy = p[1].min(self.extent[1] - p[1]);
                dx.min(dy)
            }
            DomainKind::Disc => self.extent[0] - (p[0] * p[0] + p[1] * p[1]).sqrt(),
        }
    }

    /// Largest radius of a ball contained in the domain.
    pub fn inradius(&self) -> f64 {
        match self.kind {
            DomainKind::Interval => self.extent[0] / 2.0,
            DomainKind::Rectangle => self.extent[0].min(self.extent[1]) / 2.0,
            DomainKind::Disc => self.extent[0],
        }
    }

    /// Analytic measure of the domain.
    pub fn analytic_volume(&self) -> f64 {
        match self.kind {
            DomainKind::Interval => self.extent[0],
            DomainKind::Rectangle => self.extent[0] * self.extent[1],
            DomainKind::Disc => std::f64::consts::PI * self.extent[0] * self.extent[0],
        }
    }

    /// Summed volume of non-exterior cells.
    pub fn active_volume(&self) -> f64 {
        self.active.len() as f64 * self.cell_volume()
    }

    /// Index of the neighbouring cell along `axis` in direction `side`,
    /// or `None` if it falls outside the bounding box.
    #[inline]
    pub fn neighbor(&self, cell: usize, axis: usize, side: i8) -> Option<usize> {
        let ix = (cell % self.shape[0]) as isize;
        let iy = (cell / self.shape[0]) as isize;
        let (jx, jy) = match axis {
            0 => (ix + side as isize, iy),
            _ => (ix, iy + side as isize),
        };
        if jx < 0 || jy < 0 || jx >= self.shape[0] as isize || jy >= self.shape[1] as isize {
            None
        } else {
            Some(jy as usize * self.shape[0] + jx as usize)
        }
    }

    /// Replace the normal-extension band, re-tapering with width `rho`.
    pub fn with_band(mut self, rho: f64) -> Result<Self> {
        self.normal_extension = extend_normal(&self, rho)?;
        self.band_width = rho;
        Ok(self)
    }
}

/// Build a masked grid for the requested domain.
///
/// Fails on non-positive `h` or extents, and on a disc resolved by fewer
/// than 8 cells per radius (the mask would not track the boundary).
pub fn build_geometry(spec: &GeometrySpec) -> Result<GridGeometry> {
    if !(spec.h > 0.0) || !spec.h.is_finite() {
        return Err(Error::InvalidSpec(format!(
            "grid spacing h must be positive and finite, got {}",
            spec.h
        )));
    }
    if spec.extents.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
        return Err(Error::InvalidSpec(format!(
            "extents must be positive and finite, got {:?}",
            spec.extents
        )));
    }

    let (dim, extent, shape, origin) = match spec.kind {
        DomainKind::Interval => {
            if spec.extents.len() != 1 {
                return Err(Error::InvalidSpec(
                    "interval takes exactly one extent".into(),
                ));
            }
            let l = spec.extents[0];
            let n = cells_along(l, spec.h)?;
            (1usize, [l, 0.0], [n, 1usize], [0.0, 0.0])
        }
        DomainKind::Rectangle => {
            if spec.extents.len() != 2 {
                return Err(Error::InvalidSpec(
                    "rectangle takes exactly two extents".into(),
                ));
            }
            let (lx, ly) = (spec.extents[0], spec.extents[1]);
            let nx = cells_along(lx, spec.h)?;
            let ny = cells_along(ly, spec.h)?;
            (2usize, [lx, ly], [nx, ny], [0.0, 0.0])
        }
        DomainKind::Disc => {
            if spec.extents.len() != 1 {
                return Err(Error::InvalidSpec(
                    "disc takes exactly one extent (the radius)".into(),
                ));
            }
            let l = spec.extents[0];
            if spec.h > l / 8.0 {
                return Err(Error::Resolution(format!(
                    "disc radius {} needs h <= L/8 = {}, got h = {}",
                    l,
                    l / 8.0,
                    spec.h
                )));
            }
            let n = cells_along(2.0 * l, spec.h)?;
            (2usize, [l, l], [n, n], [-l, -l])
        }
    };

    let mut geom = GridGeometry {
        kind: spec.kind,
        dim,
        extent,
        h: spec.h,
        shape,
        origin,
        mask: vec![CellKind::Interior; shape[0] * shape[1]],
        active: Vec::new(),
        boundary_faces: Vec::new(),
        normal_extension: Vec::new(),
        band_width: 0.0,
    };

    // Staircase mask: a cell is in the domain iff its center is.
    if spec.kind == DomainKind::Disc {
        let l = extent[0];
        for cell in 0..geom.n_cells() {
            let c = geom.center(cell);
            if (c[0] * c[0] + c[1] * c[1]).sqrt() >= l {
                geom.mask[cell] = CellKind::Exterior;
            }
        }
    }

    // Boundary-adjacent cells and boundary faces.
    let sides: &[(usize, i8)] = if dim == 1 {
        &[(0, -1), (0, 1)]
    } else {
        &[(0, -1), (0, 1), (1, -1), (1, 1)]
    };
    let mut faces = Vec::new();
    for cell in 0..geom.n_cells() {
        if geom.mask[cell] == CellKind::Exterior {
            continue;
        }
        let mut adjacent = false;
        for &(axis, side) in sides {
            let nb = geom.neighbor(cell, axis, side);
            let open = match nb {
                Some(j) => geom.mask[j] == CellKind::Exterior,
                None => true,
            };
            if open {
                adjacent = true;
                let normal = face_normal(&geom, cell, axis, side);
                faces.push(BoundaryFace {
                    cell,
                    axis,
                    side,
                    normal,
                });
            }
        }
        if adjacent {
            geom.mask[cell] = CellKind::BoundaryAdjacent;
        }
    }
    geom.boundary_faces = faces;
    geom.active = (0..geom.n_cells())
        .filter(|&c| geom.mask[c] != CellKind::Exterior)
        .collect();

    let rho = geom.inradius() / 2.0;
    geom.normal_extension = extend_normal(&geom, rho)?;
    geom.band_width = rho;
    Ok(geom)
}

fn cells_along(length: f64, h: f64) -> Result<usize> {
    let n = (length / h).round() as usize;
    if n == 0 {
        return Err(Error::Resolution(format!(
            "extent {length} shorter than one cell at h = {h}"
        )));
    }
    Ok(n)
}

fn face_normal(geom: &GridGeometry, cell: usize, axis: usize, side: i8) -> [f64; 2] {
    match geom.kind {
        DomainKind::Interval | DomainKind::Rectangle => {
            let mut n = [0.0, 0.0];
            n[axis] = side as f64;
            n
        }
        DomainKind::Disc => {
            let mut p = geom.center(cell);
            p[axis] += side as f64 * geom.h / 2.0;
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            [p[0] / r, p[1] / r]
        }
    }
}

/// C1 taper of the normal extension across the band: linear `(rho-t)/rho`
/// in the inner half, a cubic that flattens to zero in the outer half.
#[inline]
pub fn band_taper(t: f64, rho: f64) -> f64 {
    if t >= rho {
        return 0.0;
    }
    let tau = ((rho - t) / rho).clamp(0.0, 1.0);
    if tau >= 0.5 {
        tau
    } else {
        4.0 * tau * tau * (1.0 - tau)
    }
}

/// Tapered interior extension of the outward normal field.
///
/// `N(y) = ((rho - t)/rho) * nu(x)` for `y` at distance `t` inside the
/// boundary (nearest boundary point `x`), smoothed to zero across the outer
/// half of the band and identically zero past it. Near rectangle corners the
/// per-wall contributions are summed and the norm clamped to 1, which keeps
/// the field continuous where the tubular construction is undefined.
pub fn extend_normal(geom: &GridGeometry, rho: f64) -> Result<Vec<[f64; 2]>> {
    let inradius = geom.inradius();
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::InvalidSpec(format!(
            "band width must be positive, got {rho}"
        )));
    }
    if rho >= inradius {
        return Err(Error::BandOverlap {
            band: rho,
            inradius,
        });
    }

    let mut field = vec![[0.0, 0.0]; geom.n_cells()];
    for &cell in &geom.active {
        let c = geom.center(cell);
        let mut n = [0.0, 0.0];
        match geom.kind {
            DomainKind::Interval => {
                n[0] -= band_taper(c[0], rho);
                n[0] += band_taper(geom.extent[0] - c[0], rho);
            }
            DomainKind::Rectangle => {
                n[0] -= band_taper(c[0], rho);
                n[0] += band_taper(geom.extent[0] - c[0], rho);
                n[1] -= band_taper(c[1], rho);
                n[1] += band_taper(geom.extent[1] - c[1], rho);
            }
            DomainKind::Disc => {
                let r = (c[0] * c[0] + c[1] * c[1]).sqrt();
                let t = geom.extent[0] - r;
                if t < rho && r > 0.0 {
                    let w = band_taper(t, rho);
                    n[0] = w * c[0] / r;
                    n[1] = w * c[1] / r;
                }
            }
        }
        let norm = (n[0] * n[0] + n[1] * n[1]).sqrt();
        if norm > 1.0 {
            n[0] /= norm;
            n[1] /= norm;
        }
        field[cell] = n;
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn interval(l: f64, h: f64) -> GridGeometry {
        build_geometry(&GeometrySpec {
            kind: DomainKind::Interval,
            extents: vec![l],
            h,
        })
        .unwrap()
    }

    fn disc(l: f64, h: f64) -> GridGeometry {
        build_geometry(&GeometrySpec {
            kind: DomainKind::Disc,
            extents: vec![l],
            h,
        })
        .unwrap()
    }

    #[test]
    fn interval_endpoints() {
        let g = interval(1.0, 0.25);
        assert_eq!(g.n_cells(), 4);
        assert_eq!(g.active_cells().len(), 4);
        let faces = g.boundary_faces();
        assert_eq!(faces.len(), 2);
        let left = faces.iter().find(|f| f.cell == 0).unwrap();
        let right = faces.iter().find(|f| f.cell == 3).unwrap();
        assert_eq!(left.normal, [-1.0, 0.0]);
        assert_eq!(right.normal, [1.0, 0.0]);
        assert_eq!(g.mask(0), CellKind::BoundaryAdjacent);
        assert_eq!(g.mask(1), CellKind::Interior);
    }

    #[test]
    fn rectangle_four_cells_axis_normals() {
        let g = build_geometry(&GeometrySpec {
            kind: DomainKind::Rectangle,
            extents: vec![1.0, 1.0],
            h: 0.5,
        })
        .unwrap();
        assert_eq!(g.n_cells(), 4);
        for f in g.boundary_faces() {
            let n = f.normal;
            assert!(
                (n[0].abs() == 1.0 && n[1] == 0.0) || (n[1].abs() == 1.0 && n[0] == 0.0),
                "normal {n:?} not an axis unit vector"
            );
        }
        // every cell touches two walls
        assert_eq!(g.boundary_faces().len(), 8);
    }

    #[test]
    fn disc_volume_within_two_percent() {
        let g = disc(1.0, 0.05);
        let rel = (g.active_volume() - std::f64::consts::PI).abs() / std::f64::consts::PI;
        assert!(rel < 0.02, "disc volume rel error {rel}");
    }

    #[test]
    fn disc_volume_error_decreases_under_refinement() {
        let mut errs = Vec::new();
        for &h in &[1.0 / 12.0, 1.0 / 24.0, 1.0 / 48.0] {
            let g = disc(1.0, h);
            errs.push((g.active_volume() - std::f64::consts::PI).abs());
        }
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "errors {errs:?}");
    }

    #[test]
    fn disc_face_normals_radial_and_unit() {
        let g = disc(1.0, 0.1);
        for f in g.boundary_faces() {
            let n = f.normal;
            let norm = (n[0] * n[0] + n[1] * n[1]).sqrt();
            assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-12);
            let c = g.center(f.cell);
            let r = (c[0] * c[0] + c[1] * c[1]).sqrt();
            // radial within the staircase O(h) tolerance
            let dot = (n[0] * c[0] + n[1] * c[1]) / r;
            assert!(dot > 0.5, "face normal not outward-ish: dot {dot}");
        }
    }

    #[test]
    fn mask_partition_and_exterior_distance() {
        let g = disc(1.0, 0.05);
        let mut counts = [0usize; 3];
        for cell in 0..g.n_cells() {
            match g.mask(cell) {
                CellKind::Interior => counts[0] += 1,
                CellKind::BoundaryAdjacent => counts[1] += 1,
                CellKind::Exterior => counts[2] += 1,
            }
        }
        assert_eq!(counts.iter().sum::<usize>(), g.n_cells());
        assert!(counts[1] > 0 && counts[2] > 0);
        // signed distance consistency for non-exterior cells
        for &cell in g.active_cells() {
            let c = g.center(cell);
            let d = g.distance_to_boundary(c);
            let analytic = g.extent[0] - (c[0] * c[0] + c[1] * c[1]).sqrt();
            assert!((d - analytic).abs() <= g.h);
            assert!(d > 0.0);
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(matches!(
            build_geometry(&GeometrySpec {
                kind: DomainKind::Interval,
                extents: vec![1.0],
                h: 0.0,
            }),
            Err(Error::InvalidSpec(_))
        ));
        assert!(matches!(
            build_geometry(&GeometrySpec {
                kind: DomainKind::Disc,
                extents: vec![1.0],
                h: 0.25,
            }),
            Err(Error::Resolution(_))
        ));
        assert!(matches!(
            build_geometry(&GeometrySpec {
                kind: DomainKind::Rectangle,
                extents: vec![1.0, -1.0],
                h: 0.1,
            }),
            Err(Error::InvalidSpec(_))
        ));
    }

    #[test]
    fn normal_extension_inner_band_is_linear_taper() {
        // disc L=1, rho=0.2: at t = 0.1 = rho/2 the taper is exactly 1/2,
        // so a cell there carries N = 0.5 * y/|y|; the inner half-band is
        // the plain linear taper with no smoothing.
        assert_eq!(band_taper(0.1, 0.2), 0.5);
        let g = disc(1.0, 0.025).with_band(0.2).unwrap();
        let n = g.normal_extension();
        let mut checked = 0;
        for &cell in g.active_cells() {
            let c = g.center(cell);
            let r = (c[0] * c[0] + c[1] * c[1]).sqrt();
            let t = 1.0 - r;
            if t <= 0.1 {
                let taper = (0.2 - t) / 0.2;
                assert_abs_diff_eq!(n[cell][0], taper * c[0] / r, epsilon = 1e-12);
                assert_abs_diff_eq!(n[cell][1], taper * c[1] / r, epsilon = 1e-12);
                checked += 1;
            }
        }
        assert!(checked > 0, "no cells in the inner half-band");
    }

    #[test]
    fn normal_extension_zero_outside_band_and_bounded() {
        let g = disc(1.0, 0.05).with_band(0.2).unwrap();
        let n = g.normal_extension();
        for &cell in g.active_cells() {
            let c = g.center(cell);
            let t = g.distance_to_boundary(c);
            let norm = (n[cell][0].powi(2) + n[cell][1].powi(2)).sqrt();
            assert!(norm <= 1.0 + 1e-12);
            if t >= 0.2 {
                assert_eq!(n[cell], [0.0, 0.0], "cell at t = {t} should be 0");
            }
        }
        // exterior cells carry no field data
        for cell in 0..g.n_cells() {
            if g.mask(cell) == CellKind::Exterior {
                assert_eq!(n[cell], [0.0, 0.0]);
            }
        }
    }

    #[test]
    fn taper_continuous_at_band_edge() {
        let rho = 0.2;
        assert_abs_diff_eq!(band_taper(rho, rho), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(band_taper(rho - 1e-9, rho), 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(band_taper(0.0, rho), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(band_taper(rho / 2.0, rho), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn normal_extension_equals_face_normal_at_boundary_cells() {
        let g = disc(1.0, 0.025).with_band(0.2).unwrap();
        let n = g.normal_extension();
        for f in g.boundary_faces() {
            let ne = n[f.cell];
            let d = ((ne[0] - f.normal[0]).powi(2) + (ne[1] - f.normal[1]).powi(2)).sqrt();
            assert!(d <= 8.0 * g.h, "cell {} deviates by {d}", f.cell);
        }
    }

    #[test]
    fn normal_extension_varies_continuously() {
        for g in [
            interval(1.0, 0.02).with_band(0.2).unwrap(),
            disc(1.0, 0.025).with_band(0.2).unwrap(),
            build_geometry(&GeometrySpec {
                kind: DomainKind::Rectangle,
                extents: vec![1.0, 1.0],
                h: 0.02,
            })
            .unwrap()
            .with_band(0.2)
            .unwrap(),
        ] {
            let n = g.normal_extension();
            let c_bound = 3.0 * g.dim as f64 / g.band_width + 3.0 / g.inradius();
            let mut max_jump: f64 = 0.0;
            for &cell in g.active_cells() {
                for axis in 0..g.dim {
                    if let Some(j) = g.neighbor(cell, axis, 1) {
                        if g.is_active(j) {
                            let d = ((n[cell][0] - n[j][0]).powi(2)
                                + (n[cell][1] - n[j][1]).powi(2))
                            .sqrt();
                            max_jump = max_jump.max(d);
                        }
                    }
                }
            }
            assert!(
                max_jump <= c_bound * g.h,
                "{:?}: jump {} > {}",
                g.kind,
                max_jump,
                c_bound * g.h
            );
        }
    }

    #[test]
    fn band_overlap_rejected() {
        let g = interval(1.0, 0.1);
        assert!(matches!(g.with_band(0.6), Err(Error::BandOverlap { .. })));
    }
}
