//! Subcommand drivers: `simulate`, `verify`, `stability`, `convergence`.
//! Each writes its artifacts under the output directory and reports
//! machine-readable results.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::analysis::{
    field,
    linear::{growth_rate_estimate, LinearBase},
    mass_balance_residual, negativity_probe,
    picard::{picard_solve, PicardOptions},
};
use crate::cli::config::{BumpSpec, RunConfig};
use crate::cli::{heatmap, snapshot};
use crate::dynamics::{
    self, run, BcCase, Limiter, ModelParams, RunOptions, Scheme, State, CLIP_THRESHOLD,
};
use crate::error::{Error, Result};
use crate::geometry::{build_geometry, DomainKind, GeometrySpec, GridGeometry};
use crate::nonlocal::{
    build_stencils, direct_adhesion_oracle, eval_adhesion, lipschitz_bound_probe, max_rel_diff,
    AdhesionMatrix, KernelCase, KernelSpec, ProfileKind, StencilTable,
};

/// Build the discrete setup a configuration describes.
pub fn build_setup(cfg: &RunConfig) -> Result<(GridGeometry, StencilTable)> {
    let geom = build_geometry(&cfg.geometry)?;
    let band = cfg.effective_band_width(&geom);
    let geom = geom.with_band(band)?;
    let table = build_stencils(&geom, &cfg.params.kernel)?;
    Ok((geom, table))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

/// Run the configured simulation, writing the config echo, monitor CSV,
/// snapshots and optional heatmaps. On instability a diagnostics file is
/// written before the error propagates.
pub fn simulate_command(
    cfg: &RunConfig,
    out_override: Option<&Path>,
    seed_override: Option<u64>,
) -> Result<PathBuf> {
    let out_dir = out_override
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(&cfg.out_dir));
    ensure_dir(&out_dir)?;
    let seed = seed_override.unwrap_or(cfg.seed);

    let mut effective = cfg.clone();
    effective.seed = seed;
    std::fs::write(out_dir.join("config.echo"), effective.echo())?;

    let (geom, table) = build_setup(cfg)?;
    let initial = cfg.build_initial(&geom, seed)?;
    let opts = RunOptions {
        t_end: cfg.t_end,
        safety: cfg.safety,
        scheme: cfg.scheme,
        limiter: cfg.limiter,
        dt_override: cfg.dt_override,
        monitor_every: cfg.monitor_every,
        snapshot_every: cfg.snapshot_every,
    };

    match run(&geom, &table, &cfg.params, initial, &opts) {
        Ok(outcome) => {
            std::fs::write(out_dir.join("monitors.csv"), outcome.monitors.to_csv())?;
            snapshot::write_snapshot(
                &outcome.final_state,
                &geom,
                &out_dir.join("final_state.adh1"),
            )?;
            for (i, snap) in outcome.snapshots.iter().enumerate() {
                let path = out_dir.join(format!("snapshot_{i:05}.adh1"));
                snapshot::write_snapshot(snap, &geom, &path)?;
                if cfg.heatmaps {
                    let png = out_dir.join(format!("snapshot_{i:05}.png"));
                    heatmap::render_snapshot(snap, &geom, cfg.params.k, &png)?;
                }
            }
            if cfg.heatmaps {
                heatmap::render_snapshot(
                    &outcome.final_state,
                    &geom,
                    cfg.params.k,
                    &out_dir.join("final_state.png"),
                )?;
            }
            Ok(out_dir)
        }
        Err(err) => {
            if let Error::Instability { step, t, detail } = &err {
                let diag = format!(
                    "instability detected\nstep = {step}\nt = {t}\ndetail = {detail}\n\
                     hint = reduce run.dt_override or increase resolution\n"
                );
                std::fs::write(out_dir.join("instability.txt"), diag)?;
            }
            Err(err)
        }
    }
}

/// One verification check with its tolerance and measured value.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
    pub details: String,
}

impl CheckResult {
    fn new(name: &str, measured: f64, tolerance: f64, below: bool, details: String) -> Self {
        let passed = if below {
            measured <= tolerance
        } else {
            measured >= tolerance
        };
        Self {
            name: name.to_string(),
            passed,
            measured,
            tolerance,
            details,
        }
    }

    fn failure(name: &str, err: &Error) -> Self {
        Self {
            name: name.to_string(),
            passed: false,
            measured: f64::NAN,
            tolerance: f64::NAN,
            details: format!("errored: {err}"),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
    pub all_passed: bool,
}

/// Run the verification suite at desk scale and write the report. A failed
/// check does not abort the rest; the report is always written.
pub fn verify_command(cfg: &RunConfig, out_override: Option<&Path>, seed: u64) -> Result<VerifyReport> {
    let out_dir = out_override
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(&cfg.out_dir));
    ensure_dir(&out_dir)?;

    let mut checks = Vec::new();
    checks.push(check_oracle_equivalence(cfg, seed).unwrap_or_else(|e| {
        CheckResult::failure("oracle_equivalence", &e)
    }));
    match check_mass_and_positivity(cfg, seed) {
        Ok((mass, positivity, clips)) => {
            checks.push(mass);
            checks.push(positivity);
            checks.push(clips);
        }
        Err(e) => {
            checks.push(CheckResult::failure("mass_balance", &e));
            checks.push(CheckResult::failure("positivity", &e));
            checks.push(CheckResult::failure("clip_budget", &e));
        }
    }
    checks.push(
        check_lipschitz(cfg, seed).unwrap_or_else(|e| CheckResult::failure("lipschitz_probe", &e)),
    );
    checks.push(
        check_constant_state(cfg).unwrap_or_else(|e| CheckResult::failure("constant_state", &e)),
    );
    checks.push(
        check_picard_agreement(cfg).unwrap_or_else(|e| CheckResult::failure("picard_agreement", &e)),
    );
    match check_linear_rates(cfg) {
        Ok((a, b)) => {
            checks.push(a);
            checks.push(b);
        }
        Err(e) => {
            checks.push(CheckResult::failure("linear_decay_rate", &e));
            checks.push(CheckResult::failure("linear_growth_rate", &e));
        }
    }
    checks.push(
        check_snapshot_integrity(cfg, &out_dir)
            .unwrap_or_else(|e| CheckResult::failure("snapshot_integrity", &e)),
    );

    let all_passed = checks.iter().all(|c| c.passed);
    let report = VerifyReport { checks, all_passed };
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::Format(format!("report encode: {e}")))?;
    std::fs::write(out_dir.join("verify_report.json"), json)?;
    for c in &report.checks {
        println!(
            "{} {}: measured {:.3e} vs tolerance {:.3e} ({})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.measured,
            c.tolerance,
            c.details
        );
    }
    Ok(report)
}

fn check_oracle_equivalence(cfg: &RunConfig, seed: u64) -> Result<CheckResult> {
    use rand::{Rng, SeedableRng};
    let (geom, table) = build_setup(cfg)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x6f7261636c65);
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let mut u = vec![0.0; geom.n_cells()];
        let mut v = vec![0.0; geom.n_cells()];
        for &c in geom.active_cells() {
            u[c] = rng.gen::<f64>();
            v[c] = rng.gen::<f64>();
        }
        let (kf, sf) = eval_adhesion(&u, &v, &table, &geom, &cfg.params.adhesion)?;
        let (ko, so) = direct_adhesion_oracle(&u, &v, &geom, &cfg.params.kernel, &cfg.params.adhesion)?;
        worst = worst
            .max(max_rel_diff(&kf, &ko, &geom))
            .max(max_rel_diff(&sf, &so, &geom));
    }
    Ok(CheckResult::new(
        "oracle_equivalence",
        worst,
        1e-13,
        true,
        "5 random field pairs, stencil path vs brute force".into(),
    ))
}

fn check_mass_and_positivity(
    cfg: &RunConfig,
    seed: u64,
) -> Result<(CheckResult, CheckResult, CheckResult)> {
    let (geom, table) = build_setup(cfg)?;
    let mut state = cfg.build_initial(&geom, seed)?;
    if field::sup_abs(&state.u, &geom) == 0.0 && field::sup_abs(&state.v, &geom) == 0.0 {
        // zero-field config: the checks hold trivially but run anyway
    }
    let steps = 50;
    let mut worst_residual = 0.0f64;
    let mut worst_min = 0.0f64;
    let mut worst_probe = 0.0f64;
    let mut clips = 0u64;
    for _ in 0..steps {
        let (k_vel, s_vel) = eval_adhesion(&state.u, &state.v, &table, &geom, &cfg.params.adhesion)?;
        let dt = dynamics::stable_dt(&state, &k_vel, &s_vel, &geom, &cfg.params, cfg.safety)?;
        let (next, rep) = dynamics::step_with_velocities(
            &state,
            &k_vel,
            &s_vel,
            &geom,
            &table,
            &cfg.params,
            dt,
            Scheme::Euler,
            cfg.limiter,
        )?;
        let (ru, rv) = mass_balance_residual(&state, &next, dt, &cfg.params, &geom)?;
        worst_residual = worst_residual.max(ru).max(rv);
        worst_min = worst_min.min(rep.min_pre_clip_u).min(rep.min_pre_clip_v);
        let (nu, nv) = negativity_probe(&next, &geom);
        worst_probe = worst_probe.max(nu).max(nv);
        clips += rep.clipped;
        state = next;
    }
    let budget = 0.001 * geom.active_cells().len() as f64 * steps as f64;
    Ok((
        CheckResult::new(
            "mass_balance",
            worst_residual,
            1e-12,
            true,
            format!("worst per-step relative residual over {steps} Euler steps"),
        ),
        CheckResult::new(
            "positivity",
            worst_probe.max(-worst_min - CLIP_THRESHOLD).max(0.0),
            1e-20,
            true,
            format!("negativity probe / pre-clip floor over {steps} steps"),
        ),
        CheckResult::new(
            "clip_budget",
            clips as f64,
            budget,
            true,
            "cumulative clipped cells vs 0.1% of cells x steps".into(),
        ),
    ))
}

fn check_lipschitz(cfg: &RunConfig, seed: u64) -> Result<CheckResult> {
    let (geom, table) = build_setup(cfg)?;
    let rep = lipschitz_bound_probe(&geom, &table, &cfg.params.adhesion, 5, seed)?;
    // refinement stability when the refined grid stays desk-sized
    let refined_cells = geom.n_cells() * (1 << geom.dim);
    let (ratio, details) = if refined_cells <= 40_000 {
        let mut spec = cfg.geometry.clone();
        spec.h /= 2.0;
        let geom2 = build_geometry(&spec)?;
        let table2 = build_stencils(&geom2, &cfg.params.kernel)?;
        let rep2 = lipschitz_bound_probe(&geom2, &table2, &cfg.params.adhesion, 5, seed)?;
        let r = match cfg.params.kernel.case {
            KernelCase::I => {
                let a = rep.lipschitz_ratio.max(1e-300);
                let b = rep2.lipschitz_ratio.max(1e-300);
                (a / b).max(b / a)
            }
            // the shrinking sensing ball only controls the sup norm
            KernelCase::II => {
                let a = rep.sup_ratio.max(1e-300);
                let b = rep2.sup_ratio.max(1e-300);
                (a / b).max(b / a)
            }
        };
        (r, "ratio stability across h -> h/2".to_string())
    } else {
        (1.0, "finiteness only (refined grid too large)".to_string())
    };
    if !rep.sup_ratio.is_finite() || !rep.lipschitz_ratio.is_finite() {
        return Err(Error::Propagation("non-finite probe ratio".into()));
    }
    Ok(CheckResult::new("lipschitz_probe", ratio, 1.5, true, details))
}

fn check_constant_state(cfg: &RunConfig) -> Result<CheckResult> {
    // the independent case admits (0, k); run it on the 1D ball
    let geom = build_geometry(&GeometrySpec {
        kind: DomainKind::Interval,
        extents: vec![1.0],
        h: 1.0 / 64.0,
    })?;
    let kernel = KernelSpec::new(
        KernelCase::II,
        cfg.params.kernel.radius.min(0.4),
        cfg.params.kernel.profile,
    )?;
    let table = build_stencils(&geom, &kernel)?;
    let mut p = cfg.params.clone();
    p.kernel = kernel;
    p.bc = BcCase::ZeroZero;
    let n = geom.n_cells();
    let initial = State::new(vec![0.0; n], vec![p.k; n], 0.0);
    let mut state = initial.clone();
    for _ in 0..200 {
        let (next, _) = dynamics::step(&state, &geom, &table, &p, 1e-4, Scheme::Euler, Limiter::None)?;
        state = next;
    }
    let dev = field::sup_diff(&state.u, &initial.u, &geom)
        .max(field::sup_diff(&state.v, &initial.v, &geom));
    Ok(CheckResult::new(
        "constant_state",
        dev,
        1e-12,
        true,
        "(0,k) under zero-zero flux, 200 steps".into(),
    ))
}

fn check_picard_agreement(cfg: &RunConfig) -> Result<CheckResult> {
    let geom = build_geometry(&GeometrySpec {
        kind: DomainKind::Interval,
        extents: vec![1.0],
        h: 1.0 / 64.0,
    })?;
    let kernel = KernelSpec::new(KernelCase::II, cfg.params.kernel.radius.min(0.4), ProfileKind::Bump)?;
    let table = build_stencils(&geom, &kernel)?;
    let mut p = cfg.params.clone();
    p.kernel = kernel;
    p.bc = BcCase::ZeroZero;
    let bump = BumpSpec {
        amplitude: 0.08,
        center: [0.5, 0.0],
        width: 0.25,
    };
    let u0: Vec<f64> = (0..geom.n_cells())
        .map(|c| crate::cli::config::bump_value(&bump, geom.center(c), 1))
        .collect();
    let initial = State::new(u0.clone(), u0, 0.0);
    let opts = PicardOptions::default();
    let out = picard_solve(&geom, &table, &p, &initial, 0.25, &opts)?;
    if out.contraction_factor > 0.5 {
        return Err(Error::NonConvergence(format!(
            "contraction factor {}",
            out.contraction_factor
        )));
    }

    let mut state = initial;
    let dt_fix = out.horizon / 1024.0;
    let mut dt_used: f64 = dt_fix;
    while state.t < out.horizon - 1e-14 {
        let (k_vel, s_vel) = eval_adhesion(&state.u, &state.v, &table, &geom, &p.adhesion)?;
        let dt = dynamics::stable_dt(&state, &k_vel, &s_vel, &geom, &p, 0.9)?
            .min(dt_fix)
            .min(out.horizon - state.t);
        dt_used = dt_used.min(dt);
        let (next, _) = dynamics::step_with_velocities(
            &state, &k_vel, &s_vel, &geom, &table, &p, dt, Scheme::Euler, Limiter::None,
        )?;
        state = next;
    }
    let diff = field::sup_diff(&out.state.u, &state.u, &geom)
        .max(field::sup_diff(&out.state.v, &state.v, &geom));
    Ok(CheckResult::new(
        "picard_agreement",
        diff,
        5.0 * (opts.tol + dt_used),
        true,
        format!(
            "mild-solution oracle vs stepper at T = {:.3e}, factor {:.3}",
            out.horizon, out.contraction_factor
        ),
    ))
}

fn check_linear_rates(cfg: &RunConfig) -> Result<(CheckResult, CheckResult)> {
    let geom = build_geometry(&GeometrySpec {
        kind: DomainKind::Interval,
        extents: vec![1.0],
        h: 1.0 / 128.0,
    })?;
    let kernel = KernelSpec::new(KernelCase::II, 0.2, ProfileKind::Bump)?;
    let table = build_stencils(&geom, &kernel)?;
    let mut p = cfg.params.clone();
    p.kernel = kernel;
    p.bc = BcCase::ZeroZero;
    if p.m <= 0.0 {
        p.m = 1.0;
    }
    if p.mu <= 0.0 {
        p.mu = 1.0;
    }
    let n = geom.n_cells();

    let decay = growth_rate_estimate(
        LinearBase::AtZeroK,
        &vec![1.0; n],
        &vec![0.0; n],
        2.0,
        &geom,
        &table,
        &p,
    )?;
    let a = CheckResult::new(
        "linear_decay_rate",
        (decay.rate_w_l2 + p.m).abs() / p.m,
        0.01,
        true,
        format!("constant mode decays at {:.6} vs -m = {}", decay.rate_w_l2, -p.m),
    );

    let z0: Vec<f64> = (0..n).map(|c| 1.0 + geom.center(c)[0] * 0.0).collect();
    let growth = growth_rate_estimate(
        LinearBase::AtZeroZero,
        &vec![0.0; n],
        &z0,
        2.0,
        &geom,
        &table,
        &p,
    )?;
    let b = CheckResult::new(
        "linear_growth_rate",
        (growth.rate_z_l1 - p.mu).abs() / p.mu,
        0.01,
        true,
        format!("z grows at {:.6} vs +mu = {}", growth.rate_z_l1, p.mu),
    );
    Ok((a, b))
}

fn check_snapshot_integrity(cfg: &RunConfig, out_dir: &Path) -> Result<CheckResult> {
    let (geom, _) = build_setup(cfg)?;
    let mut state = State::zeros(&geom);
    for (i, &c) in geom.active_cells().iter().enumerate() {
        state.u[c] = (i as f64).sin();
        state.v[c] = (i as f64).cos().abs();
    }
    state.t = 0.125;
    let path = out_dir.join("integrity_check.adh1");
    snapshot::write_snapshot(&state, &geom, &path)?;
    let (hdr, u, _) = snapshot::read_snapshot(&path)?;
    let mut ok = hdr.t.to_bits() == state.t.to_bits();
    for &c in geom.active_cells() {
        ok &= u[c].to_bits() == state.u[c].to_bits();
    }
    // a truncated copy must be rejected loudly
    let bytes = std::fs::read(&path)?;
    let trunc = out_dir.join("integrity_trunc.adh1");
    std::fs::write(&trunc, &bytes[..bytes.len() / 2])?;
    let trunc_rejected = snapshot::read_snapshot(&trunc).is_err();
    std::fs::remove_file(&path).ok();
    std::fs::remove_file(&trunc).ok();
    Ok(CheckResult::new(
        "snapshot_integrity",
        if ok && trunc_rejected { 0.0 } else { 1.0 },
        0.0,
        true,
        "bit-exact round trip; truncated file rejected".into(),
    ))
}

#[derive(Debug, Serialize)]
pub struct RateScenario {
    pub name: String,
    pub parameter: f64,
    pub expected_rate: f64,
    pub measured_rate: f64,
    pub within_one_percent: bool,
}

#[derive(Debug, Serialize)]
pub struct StabilityReport {
    pub scenarios: Vec<RateScenario>,
}

/// Time-domain linear stability study around the constant steady states.
pub fn stability_command(cfg: &RunConfig, out_override: Option<&Path>) -> Result<StabilityReport> {
    let out_dir = out_override
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(&cfg.out_dir));
    ensure_dir(&out_dir)?;

    let geom = build_geometry(&GeometrySpec {
        kind: DomainKind::Interval,
        extents: vec![1.0],
        h: 1.0 / 128.0,
    })?;
    let kernel = KernelSpec::new(KernelCase::II, 0.2, ProfileKind::Bump)?;
    let table = build_stencils(&geom, &kernel)?;
    let n = geom.n_cells();
    let base_params = |m: f64, mu: f64| ModelParams {
        m,
        k: cfg.params.k,
        lambda: cfg.params.lambda,
        mu,
        adhesion: cfg.params.adhesion,
        kernel: kernel.clone(),
        d_u: 1.0,
        d_v: 1.0,
        bc: BcCase::ZeroZero,
    };

    let mut scenarios = Vec::new();
    for m in [0.5, 1.0, 2.0] {
        let p = base_params(m, 1.0);
        let rep = growth_rate_estimate(
            LinearBase::AtZeroK,
            &vec![1.0; n],
            &vec![0.0; n],
            2.0,
            &geom,
            &table,
            &p,
        )?;
        scenarios.push(RateScenario {
            name: "w_decay_at_zero_k".into(),
            parameter: m,
            expected_rate: -m,
            measured_rate: rep.rate_w_l2,
            within_one_percent: (rep.rate_w_l2 + m).abs() <= 0.01 * m,
        });
    }
    for mu in [0.5, 1.0] {
        let p = base_params(1.0, mu);
        let rep = growth_rate_estimate(
            LinearBase::AtZeroZero,
            &vec![0.0; n],
            &vec![1.0; n],
            2.0,
            &geom,
            &table,
            &p,
        )?;
        scenarios.push(RateScenario {
            name: "z_growth_at_zero_zero".into(),
            parameter: mu,
            expected_rate: mu,
            measured_rate: rep.rate_z_l1,
            within_one_percent: (rep.rate_z_l1 - mu).abs() <= 0.01 * mu,
        });
    }
    {
        // m > mu: z decays at exactly -mu in L1
        let p = base_params(2.0, 1.0);
        let rep = growth_rate_estimate(
            LinearBase::AtZeroK,
            &vec![0.0; n],
            &vec![1.0; n],
            2.0,
            &geom,
            &table,
            &p,
        )?;
        scenarios.push(RateScenario {
            name: "z_decay_at_zero_k_m_gt_mu".into(),
            parameter: 1.0,
            expected_rate: -1.0,
            measured_rate: rep.rate_z_l1,
            within_one_percent: (rep.rate_z_l1 + 1.0).abs() <= 0.01,
        });
    }

    let report = StabilityReport { scenarios };
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::Format(format!("report encode: {e}")))?;
    std::fs::write(out_dir.join("stability_report.json"), json)?;
    for s in &report.scenarios {
        println!(
            "{} {} (param {}): measured {:.6}, expected {:.6}",
            if s.within_one_percent { "OK  " } else { "WARN" },
            s.name,
            s.parameter,
            s.measured_rate,
            s.expected_rate
        );
    }
    Ok(report)
}

#[derive(Debug, Serialize)]
pub struct ConvergenceReport {
    pub disc_area_rel_errors: Vec<(f64, f64)>,
    pub quadrature_bump_errors: Vec<(f64, f64)>,
    pub quadrature_bump_order: f64,
    pub quadrature_tophat_errors: Vec<(f64, f64)>,
    pub quadrature_tophat_order: f64,
    pub case2_boundary_band_sup: Vec<(f64, f64)>,
    /// Successive differences of run functionals (mass_u, sup_u at T) on
    /// the staircase disc under the Robin regime, and the observed order.
    /// Whether the staircase keeps first-order convergence here is left to
    /// this data, not asserted.
    pub robin_functional_deltas: Vec<(f64, f64)>,
    pub robin_observed_order: f64,
}

/// Refinement studies: staircase area error, interior quadrature order for
/// the smooth and tophat profiles, case-II boundary-band decay.
pub fn convergence_command(cfg: &RunConfig, out_override: Option<&Path>) -> Result<ConvergenceReport> {
    let out_dir = out_override
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(&cfg.out_dir));
    ensure_dir(&out_dir)?;

    let mut disc_errors = Vec::new();
    for &div in &[12.0, 24.0, 48.0] {
        let g = build_geometry(&GeometrySpec {
            kind: DomainKind::Disc,
            extents: vec![1.0],
            h: 1.0 / div,
        })?;
        let rel = (g.active_volume() - g.analytic_volume()).abs() / g.analytic_volume();
        disc_errors.push((g.h, rel));
    }

    let r = 0.2;
    let (bump_errors, bump_order) = quadrature_study(r, ProfileKind::Bump)?;
    let (tophat_errors, tophat_order) = quadrature_study(r, ProfileKind::TopHat)?;

    let mut band_sup = Vec::new();
    for &div in &[16.0, 32.0, 64.0] {
        let g = build_geometry(&GeometrySpec {
            kind: DomainKind::Disc,
            extents: vec![1.0],
            h: 1.0 / div,
        })?;
        let kernel = KernelSpec::new(KernelCase::II, 0.3, ProfileKind::Bump)?;
        let table = build_stencils(&g, &kernel)?;
        let f: Vec<f64> = (0..g.n_cells())
            .map(|c| {
                let p = g.center(c);
                1.0 + 0.5 * p[0] + 0.3 * p[1]
            })
            .collect();
        let zeros = vec![0.0; g.n_cells()];
        let (k, _) = eval_adhesion(&f, &zeros, &table, &g, &AdhesionMatrix::unit())?;
        let sup = boundary_band_sup(&k, &g);
        band_sup.push((g.h, sup));
    }

    let (robin_deltas, robin_order) = robin_disc_self_convergence()?;

    let report = ConvergenceReport {
        disc_area_rel_errors: disc_errors,
        quadrature_bump_errors: bump_errors,
        quadrature_bump_order: bump_order,
        quadrature_tophat_errors: tophat_errors,
        quadrature_tophat_order: tophat_order,
        case2_boundary_band_sup: band_sup,
        robin_functional_deltas: robin_deltas,
        robin_observed_order: robin_order,
    };
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::Format(format!("report encode: {e}")))?;
    std::fs::write(out_dir.join("convergence_report.json"), json)?;
    println!("disc area errors: {:?}", report.disc_area_rel_errors);
    println!(
        "interior quadrature order: bump {:.2}, tophat {:.2}",
        report.quadrature_bump_order, report.quadrature_tophat_order
    );
    println!("case II boundary band sup: {:?}", report.case2_boundary_band_sup);
    println!(
        "robin disc functional order: {:.2} (reported, not asserted)",
        report.robin_observed_order
    );
    let _ = cfg;
    Ok(report)
}

/// Short Robin-regime runs on the staircase disc at three resolutions;
/// the successive differences of a run functional estimate the boundary
/// convergence order.
fn robin_disc_self_convergence() -> Result<(Vec<(f64, f64)>, f64)> {
    let mut values = Vec::new();
    for &div in &[12.0, 24.0, 48.0] {
        let geom = build_geometry(&GeometrySpec {
            kind: DomainKind::Disc,
            extents: vec![1.0],
            h: 1.0 / div,
        })?;
        let kernel = KernelSpec::new(KernelCase::I, 0.3, ProfileKind::Bump)?;
        let table = build_stencils(&geom, &kernel)?;
        let p = ModelParams {
            m: 0.5,
            k: 1.0,
            lambda: 0.5,
            mu: 1.0,
            adhesion: AdhesionMatrix::new(1.0, 0.5, 0.5, 1.0).unwrap(),
            kernel,
            d_u: 1.0,
            d_v: 1.0,
            bc: BcCase::RobinNonlocal,
        };
        let n = geom.n_cells();
        let mut u = vec![0.0; n];
        let mut v = vec![0.0; n];
        for &c in geom.active_cells() {
            let pt = geom.center(c);
            u[c] = 0.2 + 0.4 * (1.0 - (pt[0] * pt[0] + pt[1] * pt[1])).max(0.0);
            v[c] = 0.6;
        }
        let opts = RunOptions {
            t_end: 0.02,
            monitor_every: 0,
            ..Default::default()
        };
        let out = run(&geom, &table, &p, State::new(u, v, 0.0), &opts)?;
        // area-normalised functional so the staircase volume drops out
        values.push((
            geom.h,
            field::mass(&out.final_state.u, &geom) / geom.active_volume(),
        ));
    }
    let deltas: Vec<(f64, f64)> = values
        .windows(2)
        .map(|w| (w[0].0, (w[0].1 - w[1].1).abs()))
        .collect();
    let order = observed_order(&deltas);
    Ok((deltas, order))
}

/// Sup of the adhesion speed over the cells within `2h` of the boundary:
/// the discrete realisation of the velocities vanishing on the boundary.
pub fn boundary_band_sup(k: &[[f64; 2]], geom: &GridGeometry) -> f64 {
    geom.active_cells()
        .iter()
        .filter(|&&c| geom.distance_to_boundary(geom.center(c)) < 2.0 * geom.h)
        .map(|&c| (k[c][0].powi(2) + k[c][1].powi(2)).sqrt())
        .fold(0.0, f64::max)
}

/// Interior quadrature error of `K[f,0]` for linear `f(x) = x` in 1D at
/// three refinements; returns `(h, err)` pairs and the observed order.
fn quadrature_study(r: f64, profile: ProfileKind) -> Result<(Vec<(f64, f64)>, f64)> {
    let exact = match profile {
        // int (x+y) sign(y) w(|y|) dy = 2 int_0^R y w(y) dy
        ProfileKind::Bump => 2.0 * simpson(|y| y * bump_w(y, r), 0.0, r, 1 << 16),
        ProfileKind::TopHat => r * r,
    };
    let mut rows = Vec::new();
    for &n in &[8.0, 16.0, 32.0] {
        let h = r / n;
        let g = build_geometry(&GeometrySpec {
            kind: DomainKind::Interval,
            extents: vec![1.0],
            h,
        })?;
        let kernel = KernelSpec::new(KernelCase::II, r, profile)?;
        let table = build_stencils(&g, &kernel)?;
        let u: Vec<f64> = (0..g.n_cells()).map(|c| g.center(c)[0]).collect();
        let zeros = vec![0.0; g.n_cells()];
        let m = AdhesionMatrix {
            m11: 1.0,
            m12: 0.0,
            m21: 0.0,
            m22: 0.0,
        };
        let (k, _) = eval_adhesion(&u, &zeros, &table, &g, &m)?;
        let cell = g.n_cells() / 2;
        rows.push((h, (k[cell][0] - exact).abs()));
    }
    let order = observed_order(&rows);
    Ok((rows, order))
}

/// Least of the pairwise observed orders across the refinement ladder.
pub fn observed_order(rows: &[(f64, f64)]) -> f64 {
    rows.windows(2)
        .map(|w| (w[0].1 / w[1].1).log2())
        .fold(f64::INFINITY, f64::min)
}

fn bump_w(y: f64, r: f64) -> f64 {
    if y >= r {
        0.0
    } else {
        let s = y / r;
        (-1.0 / (1.0 - s * s)).exp()
    }
}

/// Composite Simpson rule (the independent fine-quadrature oracle for the
/// smooth-kernel expected values).
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = if n % 2 == 0 { n } else { n + 1 };
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let x = a + i as f64 * h;
        acc += f(x) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}
