//! Acceptance suite: every criterion runs at its stated tolerance and
//! prints one pass/fail line. The whole suite is part of the normal test
//! run.

use std::time::Instant;

use adhesim::analysis::{
    field,
    linear::{growth_rate_estimate, LinearBase},
    mass_balance_residual, negativity_probe,
    picard::{picard_solve, PicardOptions},
};
use adhesim::cli::commands::{boundary_band_sup, observed_order, simpson, simulate_command};
use adhesim::cli::config::{bump_value, parse_config_str, BumpSpec};
use adhesim::dynamics::{
    self, BcCase, Limiter, ModelParams, Scheme, State, CLIP_THRESHOLD,
};
use adhesim::geometry::{build_geometry, DomainKind, GeometrySpec, GridGeometry};
use adhesim::nonlocal::{
    build_stencils, direct_adhesion_oracle, eval_adhesion, max_rel_diff, AdhesionMatrix,
    KernelCase, KernelSpec, ProfileKind, StencilTable,
};

fn report(criterion: &str, passed: bool, detail: &str) {
    println!(
        "ACCEPTANCE {criterion}: {} ({detail})",
        if passed { "PASS" } else { "FAIL" }
    );
    assert!(passed, "{criterion}: {detail}");
}

fn geometry(kind: DomainKind, extents: Vec<f64>, h: f64) -> GridGeometry {
    build_geometry(&GeometrySpec { kind, extents, h }).unwrap()
}

fn generic_params(case: KernelCase, bc: BcCase, radius: f64) -> ModelParams {
    ModelParams {
        m: 0.5,
        k: 1.0,
        lambda: 0.5,
        mu: 1.0,
        adhesion: AdhesionMatrix::new(1.0, 0.5, 0.5, 1.0).unwrap(),
        kernel: KernelSpec::new(case, radius, ProfileKind::Bump).unwrap(),
        d_u: 1.0,
        d_v: 1.0,
        bc,
    }
}

fn bump_field(geom: &GridGeometry, amplitude: f64, center: [f64; 2], width: f64) -> Vec<f64> {
    (0..geom.n_cells())
        .map(|c| {
            bump_value(
                &BumpSpec {
                    amplitude,
                    center,
                    width,
                },
                geom.center(c),
                geom.dim,
            )
        })
        .collect()
}

fn random_fields(geom: &GridGeometry, rng: &mut impl rand::Rng) -> (Vec<f64>, Vec<f64>) {
    let n = geom.n_cells();
    let mut u = vec![0.0; n];
    let mut v = vec![0.0; n];
    for &c in geom.active_cells() {
        u[c] = rng.gen::<f64>();
        v[c] = rng.gen::<f64>();
    }
    (u, v)
}

/// Criterion 1: stencil evaluation vs brute-force oracle, 20 random field
/// pairs on 1D (N = 256) and the 2D disc (h = L/48), both kernel cases,
/// max relative difference <= 1e-13, under 30 s.
#[test]
fn criterion_01_oracle_equivalence() {
    use rand::SeedableRng;
    let start = Instant::now();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(20260811);
    let mut worst = 0.0f64;
    let setups = [
        (geometry(DomainKind::Interval, vec![1.0], 1.0 / 256.0), 0.25),
        (geometry(DomainKind::Disc, vec![1.0], 1.0 / 48.0), 0.25),
    ];
    for (geom, radius) in &setups {
        for case in [KernelCase::I, KernelCase::II] {
            let kernel = KernelSpec::new(case, *radius, ProfileKind::Bump).unwrap();
            let table = build_stencils(geom, &kernel).unwrap();
            let m = AdhesionMatrix::new(1.0, 0.5, 0.25, 2.0).unwrap();
            for _ in 0..20 {
                let (u, v) = random_fields(geom, &mut rng);
                let (kf, sf) = eval_adhesion(&u, &v, &table, geom, &m).unwrap();
                let (ko, so) = direct_adhesion_oracle(&u, &v, geom, &kernel, &m).unwrap();
                worst = worst
                    .max(max_rel_diff(&kf, &ko, geom))
                    .max(max_rel_diff(&sf, &so, geom));
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    report(
        "1 oracle-equivalence",
        worst <= 1e-13 && elapsed < 30.0,
        &format!("max rel diff {worst:.3e} (tol 1e-13), runtime {elapsed:.1}s (< 30s)"),
    );
}

struct ConservationOutcome {
    max_residual: f64,
    max_probe: f64,
    min_pre_clip: f64,
    clips: u64,
    cells: usize,
    steps: usize,
}

fn run_conservation_case(bc: BcCase) -> ConservationOutcome {
    let (geom, p) = match bc {
        BcCase::RobinNonlocal => {
            let geom = geometry(DomainKind::Rectangle, vec![1.0, 1.0], 1.0 / 24.0);
            let p = generic_params(KernelCase::I, bc, 0.25);
            (geom, p)
        }
        BcCase::ZeroZero => {
            let geom = geometry(DomainKind::Disc, vec![1.0], 1.0 / 24.0);
            let p = generic_params(KernelCase::II, bc, 0.25);
            (geom, p)
        }
    };
    let table = build_stencils(&geom, &p.kernel).unwrap();
    let center = match geom.kind {
        DomainKind::Disc => [0.0, 0.0],
        _ => [0.5, 0.5],
    };
    let mut u = bump_field(&geom, 0.6, center, 0.3);
    let mut v = vec![0.0; geom.n_cells()];
    for &c in geom.active_cells() {
        u[c] += 0.1;
        v[c] = 0.8;
    }
    let mut state = State::new(u, v, 0.0);

    let steps = 500;
    let mut out = ConservationOutcome {
        max_residual: 0.0,
        max_probe: 0.0,
        min_pre_clip: 0.0,
        clips: 0,
        cells: geom.active_cells().len(),
        steps,
    };
    for _ in 0..steps {
        let (k_vel, s_vel) = eval_adhesion(&state.u, &state.v, &table, &geom, &p.adhesion).unwrap();
        let dt = dynamics::stable_dt(&state, &k_vel, &s_vel, &geom, &p, 0.9).unwrap();
        let (next, rep) = dynamics::step_with_velocities(
            &state,
            &k_vel,
            &s_vel,
            &geom,
            &table,
            &p,
            dt,
            Scheme::Euler,
            Limiter::None,
        )
        .unwrap();
        let (ru, rv) = mass_balance_residual(&state, &next, dt, &p, &geom).unwrap();
        out.max_residual = out.max_residual.max(ru).max(rv);
        let (nu, nv) = negativity_probe(&next, &geom);
        out.max_probe = out.max_probe.max(nu).max(nv);
        out.min_pre_clip = out
            .min_pre_clip
            .min(rep.min_pre_clip_u)
            .min(rep.min_pre_clip_v);
        out.clips += rep.clipped;
        state = next;
    }
    out
}

/// Criterion 2: per-step mass-balance residual <= 1e-12 over 500 steps of
/// a generic nonlinear run, both boundary regimes (boundary flux is
/// exactly zero by construction).
#[test]
fn criterion_02_conservation_mass_law() {
    let robin = run_conservation_case(BcCase::RobinNonlocal);
    let zero = run_conservation_case(BcCase::ZeroZero);
    let worst = robin.max_residual.max(zero.max_residual);
    report(
        "2 conservation-mass-law",
        worst <= 1e-12,
        &format!(
            "max residual robin {:.3e}, zero-zero {:.3e} (tol 1e-12, 500 steps each)",
            robin.max_residual, zero.max_residual
        ),
    );
}

/// Criterion 3: positivity on the same runs: negative-part probe <= 1e-20
/// every step, pre-clip floor within the clip threshold, cumulative clips
/// <= 0.1% of cells x steps.
#[test]
fn criterion_03_positivity() {
    let mut passed = true;
    let mut details = Vec::new();
    for (name, out) in [
        ("robin", run_conservation_case(BcCase::RobinNonlocal)),
        ("zero-zero", run_conservation_case(BcCase::ZeroZero)),
    ] {
        let budget = 0.001 * out.cells as f64 * out.steps as f64;
        let ok = out.max_probe <= 1e-20
            && out.min_pre_clip >= -CLIP_THRESHOLD
            && (out.clips as f64) <= budget;
        passed &= ok;
        details.push(format!(
            "{name}: probe {:.1e}, min {:.1e}, clips {}/{budget:.0}",
            out.max_probe, out.min_pre_clip, out.clips
        ));
    }
    report("3 positivity", passed, &details.join("; "));
}

/// Criterion 4: (0, k) is discretely stationary under zero-zero flux for
/// 1000 steps to 1e-12 (constant steady state + odd-kernel nullity).
#[test]
fn criterion_04_steady_state() {
    let geom = geometry(DomainKind::Disc, vec![1.0], 1.0 / 16.0);
    let p = generic_params(KernelCase::II, BcCase::ZeroZero, 0.3);
    let table = build_stencils(&geom, &p.kernel).unwrap();
    let n = geom.n_cells();
    let mut initial_u = vec![0.0; n];
    let mut initial_v = vec![0.0; n];
    for &c in geom.active_cells() {
        initial_u[c] = 0.0;
        initial_v[c] = p.k;
    }
    let mut state = State::new(initial_u.clone(), initial_v.clone(), 0.0);
    for _ in 0..1000 {
        let (next, _) = dynamics::step(&state, &geom, &table, &p, 1e-4, Scheme::Euler, Limiter::None)
            .unwrap();
        state = next;
    }
    let dev = field::sup_diff(&state.u, &initial_u, &geom)
        .max(field::sup_diff(&state.v, &initial_v, &geom));
    report(
        "4 steady-state",
        dev <= 1e-12,
        &format!("max deviation {dev:.3e} after 1000 steps (tol 1e-12)"),
    );
}

fn linear_setup(n: usize) -> (GridGeometry, StencilTable) {
    let geom = geometry(DomainKind::Interval, vec![1.0], 1.0 / n as f64);
    let kernel = KernelSpec::new(KernelCase::II, 0.2, ProfileKind::Bump).unwrap();
    let table = build_stencils(&geom, &kernel).unwrap();
    (geom, table)
}

/// Criterion 5: around (0, k) a constant-mode perturbation of u decays at
/// exactly -m: measured rate within 1% for m in {0.5, 1, 2}, under 60 s.
#[test]
fn criterion_05_linear_decay_rate() {
    let start = Instant::now();
    let (geom, table) = linear_setup(128);
    let n = geom.n_cells();
    let mut passed = true;
    let mut details = Vec::new();
    for m in [0.5, 1.0, 2.0] {
        let mut p = generic_params(KernelCase::II, BcCase::ZeroZero, 0.2);
        p.m = m;
        let rep = growth_rate_estimate(
            LinearBase::AtZeroK,
            &vec![1.0; n],
            &vec![0.0; n],
            2.0,
            &geom,
            &table,
            &p,
        )
        .unwrap();
        let ok = rep.rate_w_l2 >= -1.01 * m && rep.rate_w_l2 <= -0.99 * m;
        passed &= ok;
        details.push(format!("m={m}: rate {:.5}", rep.rate_w_l2));
    }
    let elapsed = start.elapsed().as_secs_f64();
    passed &= elapsed < 60.0;
    report(
        "5 linear-decay-rate",
        passed,
        &format!("{} (runtime {elapsed:.1}s < 60s)", details.join(", ")),
    );
}

/// Criterion 6: around (0, 0) a nonnegative z grows in L1 at exactly +mu:
/// within 1% for mu in {0.5, 1}.
#[test]
fn criterion_06_linear_instability_rate() {
    let (geom, table) = linear_setup(128);
    let n = geom.n_cells();
    let z0: Vec<f64> = {
        let bump = bump_field(&geom, 0.5, [0.5, 0.0], 0.3);
        (0..n).map(|c| 0.5 + bump[c]).collect()
    };
    let mut passed = true;
    let mut details = Vec::new();
    for mu in [0.5, 1.0] {
        let mut p = generic_params(KernelCase::II, BcCase::ZeroZero, 0.2);
        p.mu = mu;
        let rep = growth_rate_estimate(
            LinearBase::AtZeroZero,
            &vec![0.0; n],
            &z0,
            2.0,
            &geom,
            &table,
            &p,
        )
        .unwrap();
        let ok = rep.rate_z_l1 >= 0.99 * mu && rep.rate_z_l1 <= 1.01 * mu;
        passed &= ok;
        details.push(format!("mu={mu}: rate {:.5}", rep.rate_z_l1));
    }
    report("6 linear-instability-rate", passed, &details.join(", "));
}

/// Criterion 7: around (0, k) with m > mu and w0 = 0, nonnegative z decays
/// in L1 at exactly -mu (within 1%); the L2 rate is flagged, not failed,
/// if it misses -0.95 mu (the upwind L^p decay is an open question).
#[test]
fn criterion_07_linear_stability_m_gt_mu() {
    let (geom, table) = linear_setup(128);
    let n = geom.n_cells();
    let z0: Vec<f64> = {
        let bump = bump_field(&geom, 0.5, [0.5, 0.0], 0.3);
        (0..n).map(|c| 1.0 + bump[c]).collect()
    };
    let mut p = generic_params(KernelCase::II, BcCase::ZeroZero, 0.2);
    p.m = 2.0;
    p.mu = 1.0;
    let rep = growth_rate_estimate(
        LinearBase::AtZeroK,
        &vec![0.0; n],
        &z0,
        2.0,
        &geom,
        &table,
        &p,
    )
    .unwrap();
    let l1_ok = rep.rate_z_l1 >= -1.01 * p.mu && rep.rate_z_l1 <= -0.99 * p.mu;
    if rep.rate_z_l2 > -0.95 * p.mu {
        println!(
            "ACCEPTANCE 7 note: L2 decay rate {:.5} misses -0.95*mu (flagged, not failed)",
            rep.rate_z_l2
        );
    }
    report(
        "7 linear-stability-m-gt-mu",
        l1_ok,
        &format!(
            "rate_z_L1 {:.5} vs -mu = {} (1%), rate_z_L2 {:.5}",
            rep.rate_z_l1, -p.mu, rep.rate_z_l2
        ),
    );
}

/// Criterion 8: mild-solution Picard oracle vs the production stepper on
/// 1D N = 64 with small data: sup-difference <= 5 (tol + dt) at
/// tol = 1e-10, and contraction factor <= 1/2 from the auto-halved
/// horizon.
#[test]
fn criterion_08_picard_stepper_agreement() {
    let geom = geometry(DomainKind::Interval, vec![1.0], 1.0 / 64.0);
    let p = generic_params(KernelCase::II, BcCase::ZeroZero, 0.2);
    let table = build_stencils(&geom, &p.kernel).unwrap();
    let u0 = bump_field(&geom, 0.1, [0.5, 0.0], 0.25);
    let v0 = bump_field(&geom, 0.08, [0.4, 0.0], 0.25);
    let initial = State::new(u0, v0, 0.0);
    let opts = PicardOptions {
        tol: 1e-10,
        ..Default::default()
    };
    let out = picard_solve(&geom, &table, &p, &initial, 0.25, &opts).unwrap();

    let mut state = initial;
    let dt_cap = out.horizon / 1024.0;
    let mut dt_used: f64 = dt_cap;
    while state.t < out.horizon - 1e-14 {
        let (k_vel, s_vel) = eval_adhesion(&state.u, &state.v, &table, &geom, &p.adhesion).unwrap();
        let dt = dynamics::stable_dt(&state, &k_vel, &s_vel, &geom, &p, 0.9)
            .unwrap()
            .min(dt_cap)
            .min(out.horizon - state.t);
        dt_used = dt_used.min(dt);
        let (next, _) = dynamics::step_with_velocities(
            &state,
            &k_vel,
            &s_vel,
            &geom,
            &table,
            &p,
            dt,
            Scheme::Euler,
            Limiter::None,
        )
        .unwrap();
        state = next;
    }
    let diff = field::sup_diff(&out.state.u, &state.u, &geom)
        .max(field::sup_diff(&out.state.v, &state.v, &geom));
    let bound = 5.0 * (opts.tol + dt_used);
    report(
        "8 picard-stepper-agreement",
        diff <= bound && out.contraction_factor <= 0.5,
        &format!(
            "sup diff {diff:.3e} <= {bound:.3e}, contraction {:.3} <= 0.5, T = {:.3e}",
            out.contraction_factor, out.horizon
        ),
    );
}

/// Criterion 9: interior quadrature of K[f,0] for linear f converges at
/// order >= 1.8 with the smooth kernel across h in {R/8, R/16, R/32}
/// (exact value from an independent fine quadrature; the tophat variant of
/// the same setup converges to the closed-form R^2 at its first-order
/// rate), and the case-II boundary-band sup of |K| decreases strictly
/// under refinement.
#[test]
fn criterion_09_quadrature_convergence() {
    let r = 0.25f64;
    let m_row = AdhesionMatrix {
        m11: 1.0,
        m12: 0.0,
        m21: 0.0,
        m22: 0.0,
    };
    let interior_errors = |profile: ProfileKind, exact: f64| -> Vec<(f64, f64)> {
        [8.0, 16.0, 32.0]
            .iter()
            .map(|&div| {
                let h = r / div;
                let geom = geometry(DomainKind::Interval, vec![1.0], h);
                let kernel = KernelSpec::new(KernelCase::II, r, profile).unwrap();
                let table = build_stencils(&geom, &kernel).unwrap();
                let u: Vec<f64> = (0..geom.n_cells()).map(|c| geom.center(c)[0]).collect();
                let zeros = vec![0.0; geom.n_cells()];
                let (k, _) = eval_adhesion(&u, &zeros, &table, &geom, &m_row).unwrap();
                (h, (k[geom.n_cells() / 2][0] - exact).abs())
            })
            .collect()
    };

    // smooth kernel: exact value 2 int_0^R y w(y) dy by Simpson oracle
    let w = |y: f64| {
        if y >= r {
            0.0
        } else {
            (-1.0 / (1.0 - (y / r) * (y / r))).exp()
        }
    };
    let exact_bump = 2.0 * simpson(|y| y * w(y), 0.0, r, 1 << 16);
    let bump_rows = interior_errors(ProfileKind::Bump, exact_bump);
    let bump_order = observed_order(&bump_rows);

    // tophat: closed form R^2, binary membership is exactly first order
    let tophat_rows = interior_errors(ProfileKind::TopHat, r * r);
    let tophat_order = observed_order(&tophat_rows);

    // case-II boundary band: sup |K| over cells within 2h of the boundary
    // strictly decreases as h halves (the operators vanish on the boundary)
    let mut band = Vec::new();
    for &div in &[16.0, 32.0, 64.0] {
        let geom = geometry(DomainKind::Disc, vec![1.0], 1.0 / div);
        let kernel = KernelSpec::new(KernelCase::II, 0.3, ProfileKind::Bump).unwrap();
        let table = build_stencils(&geom, &kernel).unwrap();
        let f: Vec<f64> = (0..geom.n_cells())
            .map(|c| {
                let p = geom.center(c);
                1.0 + 0.5 * p[0] + 0.3 * p[1]
            })
            .collect();
        let zeros = vec![0.0; geom.n_cells()];
        let (k, _) = eval_adhesion(&f, &zeros, &table, &geom, &AdhesionMatrix::unit()).unwrap();
        band.push(boundary_band_sup(&k, &geom));
    }
    let band_decreasing = band[0] > band[1] && band[1] > band[2];

    report(
        "9 quadrature-convergence",
        bump_order >= 1.8 && tophat_order >= 0.95 && band_decreasing,
        &format!(
            "smooth order {bump_order:.2} (>= 1.8), tophat order {tophat_order:.2}, \
             boundary band sup [{:.3e}, {:.3e}, {:.3e}] strictly decreasing",
            band[0], band[1], band[2]
        ),
    );
}

/// Criterion 10: generic run to t_end = 50 stays uniformly bounded:
/// sup |u| + sup |v| never exceeds 10 max(k, initial sup), no blow-up.
#[test]
fn criterion_10_uniform_boundedness() {
    let geom = geometry(DomainKind::Interval, vec![1.0], 1.0 / 64.0);
    let p = generic_params(KernelCase::I, BcCase::RobinNonlocal, 0.2);
    let table = build_stencils(&geom, &p.kernel).unwrap();
    let mut u = bump_field(&geom, 0.8, [0.4, 0.0], 0.25);
    let mut v = bump_field(&geom, 0.5, [0.7, 0.0], 0.2);
    for &c in geom.active_cells() {
        u[c] += 0.2;
        v[c] += 0.3;
    }
    let initial = State::new(u, v, 0.0);
    let sup0 = field::sup_abs(&initial.u, &geom) + field::sup_abs(&initial.v, &geom);
    let ceiling = 10.0 * p.k.max(sup0);
    let opts = dynamics::RunOptions {
        t_end: 50.0,
        monitor_every: 200,
        ..Default::default()
    };
    let out = dynamics::run(&geom, &table, &p, initial, &opts).unwrap();
    let worst = out
        .monitors
        .records()
        .iter()
        .map(|r| r.sup_u + r.sup_v)
        .fold(0.0, f64::max);
    report(
        "10 uniform-boundedness",
        worst <= ceiling,
        &format!(
            "sup_u + sup_v peaked at {worst:.3} vs ceiling {ceiling:.3} over {} steps",
            out.steps
        ),
    );
}

/// Criterion 11: with S = 0 (v carries no adhesion), lambda = 0.5 < mu = 1
/// and min v0 = k/2, the Lyapunov value is non-increasing after t = 1
/// within 1e-8 per step, ||u||_1 tends to zero, and the distance to the
/// constant equilibrium u = k - v decreases.
#[test]
fn criterion_11_lyapunov_decay() {
    let geom = geometry(DomainKind::Interval, vec![1.0], 1.0 / 64.0);
    let mut p = generic_params(KernelCase::II, BcCase::ZeroZero, 0.2);
    p.lambda = 0.5;
    p.mu = 1.0;
    p.m = 0.5;
    p.adhesion = AdhesionMatrix::new(1.0, 0.5, 0.0, 0.0).unwrap(); // S = 0
    let table = build_stencils(&geom, &p.kernel).unwrap();
    let n = geom.n_cells();
    let u_bump = bump_field(&geom, 0.3, [0.4, 0.0], 0.25);
    let v_bump = bump_field(&geom, p.k / 4.0, [0.6, 0.0], 0.25);
    let mut u0 = vec![0.0; n];
    let mut v0 = vec![0.0; n];
    for &c in geom.active_cells() {
        u0[c] = u_bump[c];
        v0[c] = p.k / 2.0 + v_bump[c]; // min v0 = k/2
    }
    let mut state = State::new(u0, v0, 0.0);
    let t_end = 6.0;

    let deviation = |s: &State| -> f64 {
        field::compensated_sum(
            geom.active_cells()
                .iter()
                .map(|&c| (s.u[c] - (p.k - s.v[c])).powi(2) * geom.cell_volume()),
        )
    };

    let mut prev_lyap: Option<f64> = None;
    let mut worst_increase = 0.0f64;
    let mut mass_u_at_1 = None;
    let mut dev_at_1 = None;
    while state.t < t_end - 1e-12 {
        let (k_vel, s_vel) = eval_adhesion(&state.u, &state.v, &table, &geom, &p.adhesion).unwrap();
        let dt = dynamics::stable_dt(&state, &k_vel, &s_vel, &geom, &p, 0.5)
            .unwrap()
            .min(t_end - state.t);
        let (next, _) = dynamics::step_with_velocities(
            &state,
            &k_vel,
            &s_vel,
            &geom,
            &table,
            &p,
            dt,
            Scheme::Euler,
            Limiter::None,
        )
        .unwrap();
        state = next;
        if state.t >= 1.0 {
            if mass_u_at_1.is_none() {
                mass_u_at_1 = Some(field::mass(&state.u, &geom));
                dev_at_1 = Some(deviation(&state));
            }
            let lyap = adhesim::analysis::lyapunov_value(&state, &p, &geom).unwrap();
            if let Some(prev) = prev_lyap {
                worst_increase = worst_increase.max(lyap - prev);
            }
            prev_lyap = Some(lyap);
        }
    }
    let mass_u_end = field::mass(&state.u, &geom);
    let dev_end = deviation(&state);
    let mass_decayed = mass_u_end <= 0.25 * mass_u_at_1.unwrap();
    let dev_decreased = dev_end < dev_at_1.unwrap();
    report(
        "11 lyapunov-decay",
        worst_increase <= 1e-8 && mass_decayed && dev_decreased,
        &format!(
            "worst per-step increase {worst_increase:.3e} (tol 1e-8), \
             ||u||_1 {:.3e} -> {mass_u_end:.3e}, equilibrium deviation {:.3e} -> {dev_end:.3e}",
            mass_u_at_1.unwrap(),
            dev_at_1.unwrap()
        ),
    );
}

/// Criterion 12: identical configuration + seed produce byte-identical
/// monitor CSVs.
#[test]
fn criterion_12_determinism() {
    let text = "geometry.kind = interval\ngeometry.h = 0.02\nrun.t_end = 0.05\n\
                init.preset = mixed_random\ninit.u0 = 0.3\ninit.v0 = 0.7\n\
                init.noise = 0.2\nrun.monitor_every = 10\nrun.seed = 417\n";
    let cfg = parse_config_str(text).unwrap();
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    simulate_command(&cfg, Some(d1.path()), Some(417)).unwrap();
    simulate_command(&cfg, Some(d2.path()), Some(417)).unwrap();
    let a = std::fs::read(d1.path().join("monitors.csv")).unwrap();
    let b = std::fs::read(d2.path().join("monitors.csv")).unwrap();
    report(
        "12 determinism",
        !a.is_empty() && a == b,
        &format!("monitor CSVs byte-identical ({} bytes)", a.len()),
    );
}
