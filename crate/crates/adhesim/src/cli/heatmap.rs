//! Opt-in PNG rendering of snapshots: `u` and `v` panels side by side,
//! fixed five-stop colormap, exterior cells in dark gray. Data files are
//! the primary artifact; these are for eyeballing runs.

use std::path::Path;

use image::{Rgb, RgbImage};

use crate::dynamics::State;
use crate::error::Result;
use crate::geometry::GridGeometry;

const STOPS: [[u8; 3]; 5] = [
    [68, 1, 84],
    [59, 82, 139],
    [33, 145, 140],
    [94, 201, 98],
    [253, 231, 37],
];

fn colormap(x: f64) -> Rgb<u8> {
    let x = x.clamp(0.0, 1.0) * (STOPS.len() - 1) as f64;
    let i = (x.floor() as usize).min(STOPS.len() - 2);
    let f = x - i as f64;
    let mix = |a: u8, b: u8| (a as f64 + f * (b as f64 - a as f64)).round() as u8;
    Rgb([
        mix(STOPS[i][0], STOPS[i + 1][0]),
        mix(STOPS[i][1], STOPS[i + 1][1]),
        mix(STOPS[i][2], STOPS[i + 1][2]),
    ])
}

/// Render one snapshot. The scale is `[0, max(scale_hint, sup u, sup v)]`.
pub fn render_snapshot(
    state: &State,
    geom: &GridGeometry,
    scale_hint: f64,
    path: &Path,
) -> Result<()> {
    let nx = geom.shape[0] as u32;
    let ny = if geom.dim == 2 {
        geom.shape[1] as u32
    } else {
        16 // draw a 1D state as a strip
    };
    let gap = 2u32;
    let mut img = RgbImage::new(nx * 2 + gap, ny);
    let vmax = state
        .u
        .iter()
        .chain(state.v.iter())
        .copied()
        .filter(|x| x.is_finite())
        .fold(scale_hint, f64::max)
        .max(1e-300);

    for py in 0..ny {
        for px in 0..nx {
            let cell = if geom.dim == 2 {
                // image rows run top-down; grid rows bottom-up
                ((ny - 1 - py) as usize) * geom.shape[0] + px as usize
            } else {
                px as usize
            };
            let (cu, cv) = if geom.is_active(cell) {
                (
                    colormap(state.u[cell] / vmax),
                    colormap(state.v[cell] / vmax),
                )
            } else {
                (Rgb([40, 40, 40]), Rgb([40, 40, 40]))
            };
            img.put_pixel(px, py, cu);
            img.put_pixel(nx + gap + px, py, cv);
        }
    }
    img.save(path)
        .map_err(|e| crate::error::Error::Format(format!("png encode: {e}")))?;
    Ok(())
}
