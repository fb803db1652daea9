//! Plain-text `key = value` run configuration with dotted sections.
//!
//! Unknown keys are rejected and every violation is reported with its key
//! path; nothing is silently absorbed. The fully-resolved configuration is
//! echoed into the output directory of each run.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{BcCase, Limiter, ModelParams, Scheme, State};
use crate::error::{Error, Result};
use crate::geometry::{DomainKind, GeometrySpec, GridGeometry};
use crate::nonlocal::{AdhesionMatrix, KernelCase, KernelSpec, ProfileKind};

/// Initial-condition presets. All presets are built with zero normal
/// derivative at the boundary (compact bumps, Neumann cosine modes), so
/// the compatibility conditions hold by construction.
#[derive(Debug, Clone)]
pub enum InitPreset {
    /// `u = u0`, `v = v0` constants.
    Constants,
    /// Compact smooth bump in `u` (and optionally `v`) over constant
    /// backgrounds.
    Bump,
    /// Two separated bumps, one per species; the cell-sorting setup.
    TwoBump,
    /// Constant background plus clamped random Neumann cosine modes.
    MixedRandom,
}

/// A bump description: amplitude, center (per axis), support radius.
#[derive(Debug, Clone, Copy)]
pub struct BumpSpec {
    pub amplitude: f64,
    pub center: [f64; 2],
    pub width: f64,
}

/// Fully validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub geometry: GeometrySpec,
    pub band_width: Option<f64>,
    pub params: ModelParams,
    pub preset: InitPreset,
    pub u0: f64,
    pub v0: f64,
    pub bump_u: BumpSpec,
    pub bump_v: BumpSpec,
    pub noise: f64,
    pub noise_modes: usize,
    pub t_end: f64,
    pub monitor_every: usize,
    pub snapshot_every: usize,
    pub safety: f64,
    pub scheme: Scheme,
    pub limiter: Limiter,
    pub dt_override: Option<f64>,
    pub seed: u64,
    pub out_dir: String,
    pub heatmaps: bool,
}

const KNOWN_KEYS: &[&str] = &[
    "geometry.kind",
    "geometry.extent",
    "geometry.extent_x",
    "geometry.extent_y",
    "geometry.h",
    "geometry.band_width",
    "kernel.case",
    "kernel.radius",
    "kernel.profile",
    "params.m",
    "params.k",
    "params.lambda",
    "params.mu",
    "params.d_u",
    "params.d_v",
    "params.bc",
    "adhesion.m11",
    "adhesion.m12",
    "adhesion.m21",
    "adhesion.m22",
    "init.preset",
    "init.u0",
    "init.v0",
    "init.amplitude_u",
    "init.center_x_u",
    "init.center_y_u",
    "init.width_u",
    "init.amplitude_v",
    "init.center_x_v",
    "init.center_y_v",
    "init.width_v",
    "init.noise",
    "init.modes",
    "run.t_end",
    "run.monitor_every",
    "run.snapshot_every",
    "run.safety",
    "run.scheme",
    "run.limiter",
    "run.dt_override",
    "run.seed",
    "output.dir",
    "output.heatmaps",
];

fn get_f64(
    raw: &BTreeMap<String, String>,
    errors: &mut Vec<String>,
    key: &str,
    default: Option<f64>,
) -> Option<f64> {
    match raw.get(key) {
        Some(s) => match s.parse::<f64>() {
            Ok(v) => Some(v),
            Err(_) => {
                errors.push(format!("{key}: not a number: `{s}`"));
                None
            }
        },
        None => default,
    }
}

/// Parse and validate a configuration file. All violations are collected
/// and returned together.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text)
}

/// Parse from an in-memory string (the file body).
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let mut raw: BTreeMap<String, String> = BTreeMap::new();
    let mut errors: Vec<String> = Vec::new();

    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            errors.push(format!("line {}: expected `key = value`", lineno + 1));
            continue;
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            errors.push(format!("line {}: unknown key `{}`", lineno + 1, key));
            continue;
        }
        if raw.insert(key.clone(), value).is_some() {
            errors.push(format!("line {}: duplicate key `{}`", lineno + 1, key));
        }
    }


    let kind = match raw.get("geometry.kind").map(String::as_str) {
        Some("interval") => Some(DomainKind::Interval),
        Some("rectangle") => Some(DomainKind::Rectangle),
        Some("disc") => Some(DomainKind::Disc),
        Some(other) => {
            errors.push(format!(
                "geometry.kind: `{other}` is not one of interval|rectangle|disc"
            ));
            None
        }
        None => {
            errors.push("geometry.kind: missing (interval|rectangle|disc)".into());
            None
        }
    };
    let extent = get_f64(&raw, &mut errors, "geometry.extent", Some(1.0));
    let extent_x = get_f64(&raw, &mut errors, "geometry.extent_x", None);
    let extent_y = get_f64(&raw, &mut errors, "geometry.extent_y", None);
    let h = get_f64(&raw, &mut errors, "geometry.h", None);
    if h.is_none() && !errors.iter().any(|e| e.starts_with("geometry.h")) {
        errors.push("geometry.h: missing".into());
    }
    let band_width = get_f64(&raw, &mut errors, "geometry.band_width", None);

    let kernel_case = match raw.get("kernel.case").map(String::as_str) {
        Some("I") | Some("i") => KernelCase::I,
        Some("II") | Some("ii") => KernelCase::II,
        Some(other) => {
            errors.push(format!("kernel.case: `{other}` is not I or II"));
            KernelCase::I
        }
        None => KernelCase::I,
    };
    let kernel_radius = get_f64(&raw, &mut errors, "kernel.radius", Some(0.25)).unwrap_or(0.25);
    let profile = match raw.get("kernel.profile").map(String::as_str) {
        Some("bump") | None => ProfileKind::Bump,
        Some("tophat") => ProfileKind::TopHat,
        Some(other) => {
            errors.push(format!("kernel.profile: `{other}` is not bump|tophat"));
            ProfileKind::Bump
        }
    };

    let m = get_f64(&raw, &mut errors, "params.m", Some(0.5)).unwrap_or(0.5);
    let k = get_f64(&raw, &mut errors, "params.k", Some(1.0)).unwrap_or(1.0);
    let lambda = get_f64(&raw, &mut errors, "params.lambda", Some(0.5)).unwrap_or(0.5);
    let mu = get_f64(&raw, &mut errors, "params.mu", Some(1.0)).unwrap_or(1.0);
    let d_u = get_f64(&raw, &mut errors, "params.d_u", Some(1.0)).unwrap_or(1.0);
    let d_v = get_f64(&raw, &mut errors, "params.d_v", Some(1.0)).unwrap_or(1.0);
    let bc = match raw.get("params.bc").map(String::as_str) {
        Some("robin_nonlocal") | None => BcCase::RobinNonlocal,
        Some("zero_zero") => BcCase::ZeroZero,
        Some(other) => {
            errors.push(format!(
                "params.bc: `{other}` is not robin_nonlocal|zero_zero"
            ));
            BcCase::RobinNonlocal
        }
    };

    let m11 = get_f64(&raw, &mut errors, "adhesion.m11", Some(1.0)).unwrap_or(1.0);
    let m12 = get_f64(&raw, &mut errors, "adhesion.m12", Some(0.5)).unwrap_or(0.5);
    let m21 = get_f64(&raw, &mut errors, "adhesion.m21", Some(0.5)).unwrap_or(0.5);
    let m22 = get_f64(&raw, &mut errors, "adhesion.m22", Some(1.0)).unwrap_or(1.0);

    let preset = match raw.get("init.preset").map(String::as_str) {
        Some("constants") | None => InitPreset::Constants,
        Some("bump") => InitPreset::Bump,
        Some("two_bump") => InitPreset::TwoBump,
        Some("mixed_random") => InitPreset::MixedRandom,
        Some(other) => {
            errors.push(format!(
                "init.preset: `{other}` is not constants|bump|two_bump|mixed_random"
            ));
            InitPreset::Constants
        }
    };
    let u0 = get_f64(&raw, &mut errors, "init.u0", Some(0.0)).unwrap_or(0.0);
    let v0 = get_f64(&raw, &mut errors, "init.v0", Some(1.0)).unwrap_or(1.0);
    let bump_u = BumpSpec {
        amplitude: get_f64(&raw, &mut errors, "init.amplitude_u", Some(0.5)).unwrap_or(0.5),
        center: [
            get_f64(&raw, &mut errors, "init.center_x_u", Some(0.35)).unwrap_or(0.35),
            get_f64(&raw, &mut errors, "init.center_y_u", Some(0.5)).unwrap_or(0.5),
        ],
        width: get_f64(&raw, &mut errors, "init.width_u", Some(0.2)).unwrap_or(0.2),
    };
    let bump_v = BumpSpec {
        amplitude: get_f64(&raw, &mut errors, "init.amplitude_v", Some(0.0)).unwrap_or(0.0),
        center: [
            get_f64(&raw, &mut errors, "init.center_x_v", Some(0.65)).unwrap_or(0.65),
            get_f64(&raw, &mut errors, "init.center_y_v", Some(0.5)).unwrap_or(0.5),
        ],
        width: get_f64(&raw, &mut errors, "init.width_v", Some(0.2)).unwrap_or(0.2),
    };
    let noise = get_f64(&raw, &mut errors, "init.noise", Some(0.1)).unwrap_or(0.1);
    let noise_modes = get_f64(&raw, &mut errors, "init.modes", Some(3.0)).unwrap_or(3.0) as usize;

    let t_end = get_f64(&raw, &mut errors, "run.t_end", None);
    if t_end.is_none() && !errors.iter().any(|e| e.starts_with("run.t_end")) {
        errors.push("run.t_end: missing".into());
    }
    let monitor_every = get_f64(&raw, &mut errors, "run.monitor_every", Some(100.0)).unwrap_or(100.0) as i64;
    let snapshot_every = get_f64(&raw, &mut errors, "run.snapshot_every", Some(0.0)).unwrap_or(0.0) as i64;
    let safety = get_f64(&raw, &mut errors, "run.safety", Some(0.9)).unwrap_or(0.9);
    let scheme = match raw.get("run.scheme").map(String::as_str) {
        Some("euler") | None => Scheme::Euler,
        Some("heun") => Scheme::Heun,
        Some(other) => {
            errors.push(format!("run.scheme: `{other}` is not euler|heun"));
            Scheme::Euler
        }
    };
    let limiter = match raw.get("run.limiter").map(String::as_str) {
        Some("none") | None => Limiter::None,
        Some("minmod") => Limiter::Minmod,
        Some(other) => {
            errors.push(format!("run.limiter: `{other}` is not none|minmod"));
            Limiter::None
        }
    };
    let dt_override = get_f64(&raw, &mut errors, "run.dt_override", None);
    let seed = get_f64(&raw, &mut errors, "run.seed", Some(0.0)).unwrap_or(0.0) as u64;
    let out_dir = raw
        .get("output.dir")
        .cloned()
        .unwrap_or_else(|| "out".to_string());
    let heatmaps = match raw.get("output.heatmaps").map(String::as_str) {
        Some("true") => true,
        Some("false") | None => false,
        Some(other) => {
            errors.push(format!("output.heatmaps: `{other}` is not true|false"));
            false
        }
    };

    // cross-field constraints
    let extents = match kind {
        Some(DomainKind::Rectangle) => {
            vec![
                extent_x.or(extent).unwrap_or(1.0),
                extent_y.or(extent).unwrap_or(1.0),
            ]
        }
        _ => vec![extent.unwrap_or(1.0)],
    };
    if let (Some(DomainKind::Disc), true) = (kind, kernel_radius >= extents[0]) {
        errors.push(format!(
            "kernel.radius = {} must be smaller than geometry.extent = {} on the disc",
            kernel_radius, extents[0]
        ));
    }
    if bc == BcCase::ZeroZero {
        if kind == Some(DomainKind::Rectangle) {
            errors.push(
                "params.bc = zero_zero needs the shrinking sensing ball, which is \
                 defined on balls only; geometry.kind = rectangle is unsupported"
                    .into(),
            );
        }
        if kernel_case != KernelCase::II {
            errors.push(
                "params.bc = zero_zero requires kernel.case = II so the adhesion \
                 velocities vanish on the boundary"
                    .into(),
            );
        }
    }
    if kernel_case == KernelCase::II && kind == Some(DomainKind::Rectangle) {
        errors.push("kernel.case = II is defined on balls only, not rectangles".into());
    }
    if let Some(t) = t_end {
        if t < 0.0 {
            errors.push(format!("run.t_end: must be >= 0, got {t}"));
        }
    }
    if monitor_every <= 0 {
        errors.push(format!(
            "run.monitor_every: cadence must be positive, got {monitor_every}"
        ));
    }
    if snapshot_every < 0 {
        errors.push(format!(
            "run.snapshot_every: cadence must be >= 0 (0 disables), got {snapshot_every}"
        ));
    }
    if !(safety > 0.0 && safety <= 1.0) {
        errors.push(format!("run.safety: must be in (0, 1], got {safety}"));
    }
    if noise < 0.0 {
        errors.push(format!("init.noise: must be >= 0, got {noise}"));
    }
    for (name, b) in [("u", &bump_u), ("v", &bump_v)] {
        if matches!(preset, InitPreset::Bump | InitPreset::TwoBump) && b.amplitude != 0.0 {
            if b.width <= 0.0 {
                errors.push(format!("init.width_{name}: must be positive"));
            }
        }
    }

    let kernel = KernelSpec {
        case: kernel_case,
        radius: kernel_radius,
        profile,
    };
    let adhesion = match AdhesionMatrix::new(m11, m12, m21, m22) {
        Ok(a) => a,
        Err(e) => {
            errors.push(format!("adhesion: {e}"));
            AdhesionMatrix::zero()
        }
    };
    if kernel_radius <= 0.0 {
        errors.push(format!(
            "kernel.radius: must be positive, got {kernel_radius}"
        ));
    }

    if !errors.is_empty() {
        return Err(Error::Config(errors));
    }

    let params = ModelParams {
        m,
        k,
        lambda,
        mu,
        adhesion,
        kernel,
        d_u,
        d_v,
        bc,
    };
    let cfg = RunConfig {
        geometry: GeometrySpec {
            kind: kind.unwrap(),
            extents,
            h: h.unwrap(),
        },
        band_width,
        params,
        preset,
        u0,
        v0,
        bump_u,
        bump_v,
        noise,
        noise_modes,
        t_end: t_end.unwrap(),
        monitor_every: monitor_every as usize,
        snapshot_every: snapshot_every as usize,
        safety,
        scheme,
        limiter,
        dt_override,
        seed,
        out_dir,
        heatmaps,
    };
    if let Err(e) = cfg.params.validate() {
        return Err(Error::Config(vec![format!("{e}")]));
    }
    Ok(cfg)
}

impl RunConfig {
    /// Serialise the effective configuration back to the key=value format,
    /// deterministic key order.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        let kind = match self.geometry.kind {
            DomainKind::Interval => "interval",
            DomainKind::Rectangle => "rectangle",
            DomainKind::Disc => "disc",
        };
        out.push_str(&format!("geometry.kind = {kind}\n"));
        match self.geometry.kind {
            DomainKind::Rectangle => {
                out.push_str(&format!("geometry.extent_x = {}\n", self.geometry.extents[0]));
                out.push_str(&format!("geometry.extent_y = {}\n", self.geometry.extents[1]));
            }
            _ => out.push_str(&format!("geometry.extent = {}\n", self.geometry.extents[0])),
        }
        out.push_str(&format!("geometry.h = {}\n", self.geometry.h));
        if let Some(b) = self.band_width {
            out.push_str(&format!("geometry.band_width = {b}\n"));
        }
        out.push_str(&format!(
            "kernel.case = {}\n",
            match self.params.kernel.case {
                KernelCase::I => "I",
                KernelCase::II => "II",
            }
        ));
        out.push_str(&format!("kernel.radius = {}\n", self.params.kernel.radius));
        out.push_str(&format!(
            "kernel.profile = {}\n",
            match self.params.kernel.profile {
                ProfileKind::Bump => "bump",
                ProfileKind::TopHat => "tophat",
            }
        ));
        out.push_str(&format!("params.m = {}\n", self.params.m));
        out.push_str(&format!("params.k = {}\n", self.params.k));
        out.push_str(&format!("params.lambda = {}\n", self.params.lambda));
        out.push_str(&format!("params.mu = {}\n", self.params.mu));
        out.push_str(&format!("params.d_u = {}\n", self.params.d_u));
        out.push_str(&format!("params.d_v = {}\n", self.params.d_v));
        out.push_str(&format!(
            "params.bc = {}\n",
            match self.params.bc {
                BcCase::RobinNonlocal => "robin_nonlocal",
                BcCase::ZeroZero => "zero_zero",
            }
        ));
        out.push_str(&format!("adhesion.m11 = {}\n", self.params.adhesion.m11));
        out.push_str(&format!("adhesion.m12 = {}\n", self.params.adhesion.m12));
        out.push_str(&format!("adhesion.m21 = {}\n", self.params.adhesion.m21));
        out.push_str(&format!("adhesion.m22 = {}\n", self.params.adhesion.m22));
        out.push_str(&format!(
            "init.preset = {}\n",
            match self.preset {
                InitPreset::Constants => "constants",
                InitPreset::Bump => "bump",
                InitPreset::TwoBump => "two_bump",
                InitPreset::MixedRandom => "mixed_random",
            }
        ));
        out.push_str(&format!("init.u0 = {}\n", self.u0));
        out.push_str(&format!("init.v0 = {}\n", self.v0));
        out.push_str(&format!("init.amplitude_u = {}\n", self.bump_u.amplitude));
        out.push_str(&format!("init.center_x_u = {}\n", self.bump_u.center[0]));
        out.push_str(&format!("init.center_y_u = {}\n", self.bump_u.center[1]));
        out.push_str(&format!("init.width_u = {}\n", self.bump_u.width));
        out.push_str(&format!("init.amplitude_v = {}\n", self.bump_v.amplitude));
        out.push_str(&format!("init.center_x_v = {}\n", self.bump_v.center[0]));
        out.push_str(&format!("init.center_y_v = {}\n", self.bump_v.center[1]));
        out.push_str(&format!("init.width_v = {}\n", self.bump_v.width));
        out.push_str(&format!("init.noise = {}\n", self.noise));
        out.push_str(&format!("init.modes = {}\n", self.noise_modes));
        out.push_str(&format!("run.t_end = {}\n", self.t_end));
        out.push_str(&format!("run.monitor_every = {}\n", self.monitor_every));
        out.push_str(&format!("run.snapshot_every = {}\n", self.snapshot_every));
        out.push_str(&format!("run.safety = {}\n", self.safety));
        out.push_str(&format!(
            "run.scheme = {}\n",
            match self.scheme {
                Scheme::Euler => "euler",
                Scheme::Heun => "heun",
            }
        ));
        out.push_str(&format!(
            "run.limiter = {}\n",
            match self.limiter {
                Limiter::None => "none",
                Limiter::Minmod => "minmod",
            }
        ));
        if let Some(dt) = self.dt_override {
            out.push_str(&format!("run.dt_override = {dt}\n"));
        }
        out.push_str(&format!("run.seed = {}\n", self.seed));
        out.push_str(&format!("output.dir = {}\n", self.out_dir));
        out.push_str(&format!("output.heatmaps = {}\n", self.heatmaps));
        out
    }

    /// Default band width: tie the normal-extension band to the sensing
    /// scale, capped at half the inradius.
    pub fn effective_band_width(&self, geom: &GridGeometry) -> f64 {
        self.band_width
            .unwrap_or_else(|| self.params.kernel.radius.min(geom.inradius() / 2.0))
    }

    /// Build the initial state from the preset, deterministic in the seed.
    pub fn build_initial(&self, geom: &GridGeometry, seed: u64) -> Result<State> {
        let n = geom.n_cells();
        let mut u = vec![0.0; n];
        let mut v = vec![0.0; n];
        match self.preset {
            InitPreset::Constants => {
                for &c in geom.active_cells() {
                    u[c] = self.u0;
                    v[c] = self.v0;
                }
            }
            InitPreset::Bump | InitPreset::TwoBump => {
                self.check_bump_inside(geom)?;
                for &c in geom.active_cells() {
                    let p = geom.center(c);
                    u[c] = self.u0 + bump_value(&self.bump_u, p, geom.dim);
                    v[c] = self.v0 + bump_value(&self.bump_v, p, geom.dim);
                }
            }
            InitPreset::MixedRandom => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let coeffs_u: Vec<(usize, usize, f64)> = draw_modes(self.noise_modes, &mut rng);
                let coeffs_v: Vec<(usize, usize, f64)> = draw_modes(self.noise_modes, &mut rng);
                for &c in geom.active_cells() {
                    let p = geom.center(c);
                    u[c] = (self.u0 + self.noise * eval_modes(&coeffs_u, p, geom)).max(0.0);
                    v[c] = (self.v0 + self.noise * eval_modes(&coeffs_v, p, geom)).max(0.0);
                }
            }
        }
        Ok(State::new(u, v, 0.0))
    }

    fn check_bump_inside(&self, geom: &GridGeometry) -> Result<()> {
        let mut errors = Vec::new();
        for (name, b) in [("u", &self.bump_u), ("v", &self.bump_v)] {
            if b.amplitude == 0.0 {
                continue;
            }
            let center = if geom.dim == 1 {
                [b.center[0], 0.0]
            } else {
                b.center
            };
            let d = geom.distance_to_boundary(center);
            if d <= b.width {
                errors.push(format!(
                    "init bump {name}: support (width {}) reaches the boundary \
                     (center distance {d}); compatibility needs it strictly inside",
                    b.width
                ));
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errors))
        }
    }
}

/// Compact C-infinity bump, peak `amplitude` at the center, identically
/// zero (with all derivatives) outside the support radius.
pub fn bump_value(spec: &BumpSpec, p: [f64; 2], dim: usize) -> f64 {
    if spec.amplitude == 0.0 {
        return 0.0;
    }
    let dx = p[0] - spec.center[0];
    let dy = if dim == 2 { p[1] - spec.center[1] } else { 0.0 };
    let r = (dx * dx + dy * dy).sqrt() / spec.width;
    if r >= 1.0 {
        0.0
    } else {
        spec.amplitude * (1.0 - 1.0 / (1.0 - r * r)).exp()
    }
}

fn draw_modes(count: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize, f64)> {
    (0..count)
        .map(|_| {
            (
                rng.gen_range(1..=4usize),
                rng.gen_range(0..=4usize),
                rng.gen_range(-1.0..1.0),
            )
        })
        .collect()
}

/// Neumann cosine modes: zero normal derivative at the boundary exactly
/// (radial modes on the disc).
fn eval_modes(coeffs: &[(usize, usize, f64)], p: [f64; 2], geom: &GridGeometry) -> f64 {
    use std::f64::consts::PI;
    let mut acc = 0.0;
    for &(kx, ky, a) in coeffs {
        let val = match geom.kind {
            DomainKind::Interval => (PI * kx as f64 * p[0] / geom.extent[0]).cos(),
            DomainKind::Rectangle => {
                (PI * kx as f64 * p[0] / geom.extent[0]).cos()
                    * (PI * ky as f64 * p[1] / geom.extent[1]).cos()
            }
            DomainKind::Disc => {
                let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
                (PI * kx as f64 * r / geom.extent[0]).cos()
            }
        };
        acc += a * val;
    }
    acc
}
