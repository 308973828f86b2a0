//! Acceptance criteria 1-11. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line, with its runtime checked
//! against the budget. An optional argument filters criteria by name.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use nalgebra::{Complex, DMatrix};
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, Poisson};

use hmet::experiments::{converge, sweep, Context, Options};
use hmet::output::{Provenance, RunDir};
use hmet::{Config, SchemeChoice};
use hmet_core::baselines::make_pa_only;
use hmet_core::channel::{stacked_channels, sum_rate, ChannelSample, PhysicalConfig, SelectionState, UserGeom};
use hmet_core::geometry::{
    check_separation, circular_distance, project_to_feasible, wrap_angle, FeasibleSet, GeometryParams, StationGeometry,
};
use hmet_core::optimizer::{
    greedy_antenna_select, objective, pattern_block, random_feasible_azimuths, solve, Block, OptimizerConfig, Problem,
    SolverState,
};
use hmet_core::radiation::{CodebookParams, PatternCodebook};
use hmet_core::scenarios::{
    generate_static_samples, region_means, StaticScenario, TimeVaryingParams, TimeVaryingScenario,
};
use hmet_core::seed::stream;

// Tolerances and sizes, fixed by the acceptance criteria.
const POWER_REL_TOL: f64 = 1e-3;
const DELTA_G_SYMMETRY_DB: f64 = 1e-6;
const DELTA_G_ORACLE_DB: f64 = 1e-3;
const ANCHOR_DB: f64 = 1e-12;
const LOGDET_REL_TOL: f64 = 1e-9;
const GRID_STEP_RAD: f64 = 1e-5;
const ALIGN_TOL_DEG: f64 = 1.0;
const ALIGN_GRID_DEG: f64 = 0.1;
const EPS_TH: f64 = 5e-4;
const REGION_MEAN_REL: f64 = 0.02;
const CHI2_ALPHA: f64 = 0.01;
const AR_SPREAD_REL: f64 = 0.10;
const INIT_SPREAD_REL: f64 = 0.05;

// Independent oracle values: adaptive 2-D quadrature (scipy dblquad, split at
// the pattern kinks) of the reference pattern with G_max = 8 dBi, 30 degree
// beamwidths and G_s = G_v = 30 dB.
const ORACLE_P_DEF: f64 = 1.9838032475131802;
const ORACLE_DG_CORNER_DB: f64 = 2.8357804905931134; // steer (pi/3, pi/2)
const ORACLE_DG_15_15_DB: f64 = 0.14444335020330284; // steer (pi/12, pi/12)

const DESK_SEED: u64 = 1;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn reference_codebook() -> &'static PatternCodebook {
    static CB: OnceLock<PatternCodebook> = OnceLock::new();
    CB.get_or_init(|| PatternCodebook::calibrate(CodebookParams::default()).unwrap())
}

fn nine_mode_codebook() -> PatternCodebook {
    PatternCodebook::calibrate(CodebookParams {
        dtheta_rad: PI / 3.0,
        dphi_rad: PI / 2.0,
        ..CodebookParams::default()
    })
    .unwrap()
}

fn phys() -> PhysicalConfig {
    Config::default().physical_config().unwrap()
}

fn template(n: usize) -> GeometryParams {
    GeometryParams {
        antennas_per_array: n,
        ..Config::default().geometry_template()
    }
}

fn desk_config() -> Config {
    let mut cfg = Config {
        seed: DESK_SEED,
        ..Config::default()
    };
    cfg.geometry.arrays = 8;
    cfg.geometry.antennas_per_array = 4;
    cfg.scenario.samples = 20;
    cfg.scenario.sparsity = 0.4;
    cfg.resolve().unwrap()
}

fn desk_context() -> &'static Context {
    static CTX: OnceLock<Context> = OnceLock::new();
    CTX.get_or_init(|| Context::new(desk_config()).unwrap())
}

fn scratch_run(dir: &Path, cfg: &Config) -> RunDir {
    RunDir::create(
        dir,
        Provenance {
            seed: cfg.seed,
            config_sha256: cfg.sha256(),
        },
    )
    .unwrap()
}

/// Midpoint-rule integral of `10^(G/10) cos(theta)` over the sphere, using
/// only the public gain function.
fn radiated_power(cb: &PatternCodebook, p: usize, step: f64) -> f64 {
    let nt = (PI / step).round() as usize;
    let np = (2.0 * PI / step).round() as usize;
    let (ht, hp) = (PI / nt as f64, 2.0 * PI / np as f64);
    let mut total = 0.0;
    for i in 0..nt {
        let theta = -FRAC_PI_2 + (i as f64 + 0.5) * ht;
        let row: f64 = (0..np)
            .map(|j| -PI + (j as f64 + 0.5) * hp)
            .map(|phi| 10f64.powf(cb.pattern_gain_db(p, theta, phi).unwrap() / 10.0))
            .sum();
        total += theta.cos() * row;
    }
    total * ht * hp
}

fn c1_power_conservation() -> Outcome {
    let cb = reference_codebook();
    ensure!(cb.mode_count() == 117, "expected 117 modes, got {}", cb.mode_count());
    // A different rule and grid from the calibration quadrature.
    let step = 0.2f64.to_radians();
    let p_def = radiated_power(cb, cb.default_mode(), step);
    ensure!(
        (p_def - ORACLE_P_DEF).abs() / ORACLE_P_DEF <= POWER_REL_TOL,
        "default-mode power {p_def} vs oracle {ORACLE_P_DEF}"
    );
    let mut worst: f64 = 0.0;
    for p in 0..cb.mode_count() {
        worst = worst.max((radiated_power(cb, p, step) - p_def).abs() / p_def);
    }
    ensure!(worst <= POWER_REL_TOL, "max relative power error {worst:e}");

    let find = |t: f64, f: f64| {
        cb.modes()
            .iter()
            .position(|m| (m.steer_elevation_rad - t).abs() < 1e-12 && (m.steer_azimuth_rad - f).abs() < 1e-12)
            .unwrap()
    };
    let mut asym: f64 = 0.0;
    for m in cb.modes() {
        let (t, f) = (m.steer_elevation_rad, m.steer_azimuth_rad);
        for (st, sf) in [(-1.0, 1.0), (1.0, -1.0), (-1.0, -1.0)] {
            asym = asym.max((cb.modes()[find(st * t, sf * f)].delta_g_db - m.delta_g_db).abs());
        }
    }
    ensure!(asym <= DELTA_G_SYMMETRY_DB, "sign-flip asymmetry {asym:e} dB");
    let corner = cb.modes()[find(PI / 3.0, FRAC_PI_2)].delta_g_db;
    let mid = cb.modes()[find(PI / 12.0, PI / 12.0)].delta_g_db;
    ensure!(
        (corner - ORACLE_DG_CORNER_DB).abs() <= DELTA_G_ORACLE_DB
            && (mid - ORACLE_DG_15_15_DB).abs() <= DELTA_G_ORACLE_DB,
        "delta G {corner} / {mid} dB vs oracle {ORACLE_DG_CORNER_DB} / {ORACLE_DG_15_15_DB}"
    );
    Ok(format!(
        "max |P_rad - P_def| / P_def = {worst:.2e}, asymmetry {asym:.1e} dB, dG(60,90) = {corner:.6} dB"
    ))
}

fn c2_gain_anchors() -> Outcome {
    let cb = reference_codebook();
    let d = cb.default_mode();
    let half = 15f64.to_radians();
    let checks = [
        ("boresight", cb.pattern_gain_db(d, 0.0, 0.0).unwrap(), 8.0),
        ("azimuth half-beamwidth", cb.pattern_gain_db(d, 0.0, half).unwrap(), 5.0),
        (
            "elevation half-beamwidth",
            cb.pattern_gain_db(d, half, 0.0).unwrap(),
            5.0,
        ),
        (
            "both half-beamwidths",
            cb.pattern_gain_db(d, -half, -half).unwrap(),
            2.0,
        ),
        ("back lobe", cb.pattern_gain_db(d, 0.0, PI).unwrap(), -22.0),
        ("zenith", cb.pattern_gain_db(d, FRAC_PI_2, 0.0).unwrap(), -22.0),
    ];
    for (name, got, want) in checks {
        ensure!((got - want).abs() <= ANCHOR_DB, "{name}: {got} dBi, expected {want}");
    }
    for (p, m) in cb.modes().iter().enumerate() {
        let floor = 8.0 + m.delta_g_db - 30.0;
        let back = wrap_angle(m.steer_azimuth_rad + PI);
        let g = cb.pattern_gain_db(p, m.steer_elevation_rad, back).unwrap();
        ensure!((g - floor).abs() <= ANCHOR_DB, "mode {p}: floor {g} vs {floor}");
        let peak = cb
            .pattern_gain_db(p, m.steer_elevation_rad, m.steer_azimuth_rad)
            .unwrap();
        ensure!((peak - 8.0 - m.delta_g_db).abs() <= ANCHOR_DB, "mode {p}: peak {peak}");
    }
    Ok("boresight 8 dBi, -3 dB at half beamwidth, floors at G_max + dG - 30 dB".into())
}

fn c3_logdet_oracle() -> Outcome {
    let ph = phys();
    let snr = ph.tx_power_w / ph.noise_power_w;
    let mut rng = stream(3, "acceptance", 0);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let nb = rng.random_range(1..=16);
        let k = rng.random_range(1..=8);
        let scale = 1.0 / (snr * nb as f64).sqrt();
        let h: Vec<Vec<Complex<f64>>> = (0..k)
            .map(|_| {
                (0..nb)
                    .map(|_| Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * (2.0 * scale))
                    .collect()
            })
            .collect();
        let fast = sum_rate(&ph, &h).unwrap();
        let hm = DMatrix::from_fn(nb, k, |i, j| h[j][i]);
        let m = DMatrix::<Complex<f64>>::identity(nb, nb) + (&hm * hm.adjoint()) * Complex::new(snr, 0.0);
        let direct = m.determinant().re.log2();
        worst = worst.max((fast - direct).abs() / direct.abs().max(1e-300));
    }
    ensure!(worst <= LOGDET_REL_TOL, "max relative error {worst:e}");
    Ok(format!("200 instances, max relative error {worst:.2e}"))
}

fn c4_projection_oracle() -> Outcome {
    let beta = PI / 24.0;
    let mut rng = stream(4, "acceptance", 0);
    let grid: Vec<f64> = (0..)
        .map(|i| -PI + i as f64 * GRID_STEP_RAD)
        .take_while(|&x| x < PI)
        .collect();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let others = rng.random_range(1..=7);
        let centers = random_feasible_azimuths(others, beta, &mut rng).unwrap();
        let phi = rng.random_range(-PI..PI);
        let set = FeasibleSet::excluding(&centers, beta).ok_or("empty feasible set")?;
        let proj = project_to_feasible(phi, &set).unwrap();
        let best = grid
            .iter()
            .copied()
            .filter(|&x| centers.iter().all(|&c| circular_distance(x, c) >= beta))
            .min_by(|&a, &b| circular_distance(a, phi).total_cmp(&circular_distance(b, phi)))
            .unwrap();
        ensure!(
            centers.iter().all(|&c| circular_distance(proj, c) >= beta - 1e-12),
            "projection infeasible"
        );
        let gap = circular_distance(proj, best);
        worst = worst.max(gap);
        ensure!(
            gap <= GRID_STEP_RAD + 1e-12,
            "projection {proj} vs grid {best} for phi {phi}"
        );
    }
    Ok(format!(
        "100 configurations, max distance to grid optimum {worst:.2e} rad"
    ))
}

fn random_user<R: Rng>(rng: &mut R) -> UserGeom {
    UserGeom::from_angles(
        rng.random_range(-1.2..1.2),
        rng.random_range(-PI..PI),
        rng.random_range(50.0..120.0),
        0,
    )
}

fn c5_greedy_oracle() -> Outcome {
    let cb = nine_mode_codebook();
    ensure!(cb.mode_count() == 9, "expected 9 modes");
    let ph = phys();
    let mut rng = stream(5, "acceptance", 0);
    let mut matches = 0;
    for _ in 0..50 {
        let users = (0..2).map(|_| random_user(&mut rng)).collect();
        let samples = vec![ChannelSample { users, sample_index: 0 }];
        let problem = Problem {
            codebook: &cb,
            phys: &ph,
            samples: &samples,
        };
        let geom = StationGeometry::new(&template(1), vec![rng.random_range(-PI..PI)]).unwrap();
        let mut state = SolverState::with_default_modes(geom.clone(), &cb, 1).unwrap();
        let chosen = greedy_antenna_select(&problem, &mut state, 0, 0, 0).unwrap();
        let rate = |p: usize| {
            let sel = SelectionState::uniform(1, 1, 1, 9, p).unwrap();
            sum_rate(&ph, &stacked_channels(&cb, &geom, &ph, &samples[0], &sel, 0)).unwrap()
        };
        let rates: Vec<f64> = (0..9).map(rate).collect();
        let best = rates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exhaustive = rates.iter().position(|&r| r == best).unwrap();
        if chosen == exhaustive || rates[chosen] == best {
            matches += 1;
        }
    }
    ensure!(matches == 50, "greedy matched exhaustive search in {matches}/50 cases");

    let cfg = OptimizerConfig {
        max_pattern_sweeps: 20,
        eps_threshold: 1e-12,
        ..OptimizerConfig::default()
    };
    for trial in 0..50 {
        let users = (0..3).map(|_| random_user(&mut rng)).collect();
        let samples = vec![ChannelSample { users, sample_index: 0 }];
        let problem = Problem {
            codebook: &cb,
            phys: &ph,
            samples: &samples,
        };
        let geom = StationGeometry::new(&template(2), vec![rng.random_range(-PI..PI)]).unwrap();
        let mut state = SolverState::with_default_modes(geom.clone(), &cb, 1).unwrap();
        pattern_block(&problem, &mut state, &cfg, 1).unwrap();
        let current = objective(&problem, &geom, &state.selection).unwrap();
        for n in 0..2 {
            for p in 0..9 {
                let mut alt = state.selection.clone();
                alt.set_mode(0, 0, n, p).unwrap();
                let r = objective(&problem, &geom, &alt).unwrap();
                ensure!(
                    r <= current * (1.0 + 1e-12),
                    "trial {trial}: antenna {n} mode {p} improves {current} to {r}"
                );
            }
        }
    }
    Ok("P = 9: greedy = exhaustive 50/50; N = 2 pattern block 1-swap optimal 50/50".into())
}

fn c6_single_array_alignment() -> Outcome {
    let cb = reference_codebook();
    let ph = phys();
    let cfg = make_pa_only().optimizer_config(&OptimizerConfig::default());
    let mut rng = stream(6, "acceptance", 0);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let psi = rng.random_range(-PI..PI);
        let samples = vec![ChannelSample {
            users: vec![UserGeom::from_angles(0.0, psi, 80.0, 0)],
            sample_index: 0,
        }];
        let problem = Problem {
            codebook: cb,
            phys: &ph,
            samples: &samples,
        };
        // Start inside the main lobe: beyond the front-back cap the objective
        // is flat and no ascent method can move.
        let start = wrap_angle(psi + rng.random_range(-0.6..0.6));
        let geom = StationGeometry::new(&template(4), vec![start]).unwrap();
        let state = SolverState::with_default_modes(geom.clone(), cb, 1).unwrap();
        let out = solve(&problem, state, &cfg).unwrap();
        let phi = out.geom.azimuths()[0];
        let steps = (360.0 / ALIGN_GRID_DEG).round() as usize;
        let grid_best = (0..steps)
            .map(|i| -PI + (i as f64 * ALIGN_GRID_DEG).to_radians())
            .map(|a| {
                (
                    a,
                    objective(&problem, &geom.with_azimuths(vec![a]).unwrap(), &out.selection).unwrap(),
                )
            })
            .fold((0.0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc })
            .0;
        let err = circular_distance(phi, grid_best).to_degrees();
        worst = worst.max(err);
        ensure!(
            err <= ALIGN_TOL_DEG,
            "psi {psi}: converged to {phi}, grid optimum {grid_best} ({err:.3} deg)"
        );
    }
    Ok(format!("20 directions, max deviation from grid optimum {worst:.3} deg"))
}

fn c7_monotone_convergence() -> Outcome {
    let ctx = desk_context();
    let tmp = tempfile::tempdir().unwrap();
    let mut run = scratch_run(tmp.path(), &ctx.cfg);
    let results = converge(ctx, &mut run, Options::default()).map_err(|e| e.to_string())?;
    let find = |name: &str| {
        let c: SchemeChoice = name.parse().unwrap();
        results.iter().find(|r| r.scheme == c).unwrap()
    };
    let hmet = &find("hmet").state;
    ensure!(
        hmet.trace[0].block == Block::Init,
        "trace must start at the initial point"
    );
    for w in hmet.trace.windows(2) {
        ensure!(
            w[1].objective >= w[0].objective - EPS_TH,
            "trace drops from {} to {} at update {}",
            w[0].objective,
            w[1].objective,
            w[1].iteration
        );
    }
    check_separation(hmet.geom.azimuths(), hmet.geom.min_separation()).map_err(|e| e.to_string())?;
    let c = hmet.final_objective().unwrap();
    let mut line = format!("hmet {c:.4}");
    let mut failed = Vec::new();
    for name in ["pa-only", "ps-only", "fpa"] {
        let v = find(name).state.final_objective().unwrap();
        line.push_str(&format!(", {name} {v:.4}"));
        if c <= v {
            failed.push(name);
        }
    }
    ensure!(failed.is_empty(), "{line}; hmet does not exceed {failed:?}");
    Ok(format!("{} updates non-decreasing; {line}", hmet.trace.len() - 1))
}

fn c8_sparsity_trends() -> Outcome {
    let ctx = desk_context();
    let mut cfg = ctx.cfg.clone();
    cfg.schemes = ["hmet", "pa-only", "ps-only", "fpa", "ps-only-b16", "ps-only-b3"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    cfg.sweep.sparsities = vec![0.1, 0.3, 0.5, 0.7];
    cfg.sweep.common_samples = true;
    let cfg = cfg.resolve().unwrap();
    let local = Context {
        cfg,
        codebook: ctx.codebook.clone(),
        phys: ctx.phys,
        template: ctx.template.clone(),
        optimizer: ctx.optimizer.clone(),
    };
    let tmp = tempfile::tempdir().unwrap();
    let mut run = scratch_run(tmp.path(), &local.cfg);
    let rows = sweep(&local, &mut run, Options::default()).map_err(|e| e.to_string())?;
    let series = |name: &str| -> Vec<f64> {
        let c: SchemeChoice = name.parse().unwrap();
        rows.iter()
            .filter(|r| r.scheme == c)
            .map(|r| r.final_objective)
            .collect()
    };
    let (hmet, pa, ps, fpa) = (series("hmet"), series("pa-only"), series("ps-only"), series("fpa"));
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ");
    let mut problems = Vec::new();
    if !fpa.windows(2).all(|w| w[1] >= w[0]) {
        problems.push(format!("fpa not non-decreasing [{}]", fmt(&fpa)));
    }
    if !hmet.windows(2).all(|w| w[1] <= w[0]) {
        problems.push(format!("hmet not non-increasing [{}]", fmt(&hmet)));
    }
    for (i, eta) in local.cfg.sweep.sparsities.iter().enumerate() {
        let mid = pa[i].max(ps[i]);
        if !(hmet[i] >= mid && mid >= fpa[i]) {
            problems.push(format!(
                "eta {eta}: hmet {:.3}, pa-only {:.3}, ps-only {:.3}, fpa {:.3}",
                hmet[i], pa[i], ps[i], fpa[i]
            ));
        }
    }
    let (b16, b3) = (series("ps-only-b16")[1], series("ps-only-b3")[1]);
    if b16 < b3 {
        problems.push(format!("eta 0.3: ps-only B=16 {b16:.3} < B=3 {b3:.3}"));
    }
    ensure!(problems.is_empty(), "{}", problems.join("; "));
    Ok(format!(
        "fpa [{}], hmet [{}], ps-only B=16 {b16:.3} >= B=3 {b3:.3}",
        fmt(&fpa),
        fmt(&hmet)
    ))
}

/// Chi-square goodness of fit of `counts` against Poisson(`mu`), with
/// neighbouring bins merged until each expects at least 5 observations.
fn poisson_chi_square(counts: &[u64], mu: f64) -> (f64, f64) {
    let n = counts.len() as f64;
    let dist = Poisson::new(mu).unwrap();
    let max = *counts.iter().max().unwrap() as usize;
    let mut observed = vec![0.0; max + 1];
    for &c in counts {
        observed[c as usize] += 1.0;
    }
    let mut expected: Vec<f64> = (0..=max).map(|k| n * dist.pmf(k as u64)).collect();
    // Fold the upper tail beyond `max` into the last bin.
    let tail = n - expected.iter().sum::<f64>();
    *expected.last_mut().unwrap() += tail;
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for k in 0..=max {
        o += observed[k];
        e += expected[k];
        if e >= 5.0 {
            bins.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    if e > 0.0 {
        let last = bins.last_mut().unwrap();
        last.0 += o;
        last.1 += e;
    }
    let stat: f64 = bins.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let df = (bins.len() - 1) as f64;
    let critical = ChiSquared::new(df).unwrap().inverse_cdf(1.0 - CHI2_ALPHA);
    (stat, critical)
}

fn c9_scenario_statistics() -> Outcome {
    let scn = StaticScenario::reference(0.3);
    let samples = generate_static_samples(&scn, 10_000, 9).unwrap();
    let means = scn.region_means();
    let mut totals = vec![0usize; means.len()];
    for u in samples.iter().flat_map(|s| &s.users) {
        totals[u.region as usize] += 1;
    }
    for (i, (t, mu)) in totals.iter().zip(&means).enumerate() {
        let emp = *t as f64 / 1e4;
        ensure!(
            (emp - mu).abs() <= REGION_MEAN_REL * mu,
            "static region {i}: mean {emp} vs {mu}"
        );
    }

    // Independent chains, so the snapshots are independent draws of the
    // stepped marginal.
    let params = TimeVaryingParams::reference(0.15);
    let mu = region_means(params.mean_total, params.sparsity, params.mean_centers.len());
    let chains = 100_000u64;
    let mut counts = vec![Vec::with_capacity(chains as usize); mu.len()];
    for c in 0..chains {
        let mut scn = TimeVaryingScenario::new(params.clone(), c).unwrap();
        for _ in 0..25 {
            scn.step().unwrap();
        }
        for (v, k) in counts.iter_mut().zip(scn.populations()) {
            v.push(k as u64);
        }
    }
    let mut worst = String::new();
    for (i, (v, &m)) in counts.iter().zip(&mu).enumerate() {
        let (stat, crit) = poisson_chi_square(v, m);
        ensure!(stat <= crit, "region {i}: chi-square {stat:.2} > {crit:.2}");
        worst.push_str(&format!(" {stat:.1}/{crit:.1}"));
    }

    let mut scn = TimeVaryingScenario::new(params.clone(), 99).unwrap();
    for _ in 0..2_000 {
        scn.step().unwrap();
    }
    let (mut sum, mut n) = (0.0, 0usize);
    for _ in 0..100_000 {
        scn.step().unwrap();
        for (c, m) in scn.centers().iter().zip(&params.mean_centers) {
            for d in 0..3 {
                sum += (c[d] - m[d]).powi(2);
                n += 1;
            }
        }
    }
    let spread = (sum / n as f64).sqrt();
    let rho = params.center_persistence;
    let want = params.center_noise_std / (1.0 - rho * rho).sqrt();
    ensure!(
        (spread - want).abs() <= AR_SPREAD_REL * want,
        "center spread {spread} vs {want}"
    );
    Ok(format!(
        "static means within 2%; chi-square stat/critical per region{worst}; center spread {spread:.4} vs {want:.4}"
    ))
}

fn c10_initialization_robustness() -> Outcome {
    let ctx = desk_context();
    let samples = ctx.static_samples(ctx.cfg.scenario.sparsity, "static", 0).unwrap();
    let problem = ctx.problem(&samples);
    let (b, n, p) = (
        ctx.cfg.geometry.arrays,
        ctx.cfg.geometry.antennas_per_array,
        ctx.codebook.mode_count(),
    );
    let beta = ctx.cfg.min_separation_rad();
    let mut finals = Vec::new();
    for j in 0..5 {
        let mut rng = stream(ctx.cfg.seed, "init", j);
        let az = random_feasible_azimuths(b, beta, &mut rng).unwrap();
        let geom = StationGeometry::new(&ctx.template, az).unwrap();
        let mut sel = SelectionState::uniform(samples.len(), b, n, p, ctx.codebook.default_mode()).unwrap();
        for s in 0..samples.len() {
            for bb in 0..b {
                for nn in 0..n {
                    sel.set_mode(s, bb, nn, rng.random_range(0..p)).unwrap();
                }
            }
        }
        let out = solve(&problem, SolverState::new(geom, sel), &ctx.optimizer).unwrap();
        finals.push(out.final_objective().unwrap());
    }
    let best = finals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let worst = finals.iter().copied().fold(f64::INFINITY, f64::min);
    let list = finals.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ");
    ensure!(
        worst >= (1.0 - INIT_SPREAD_REL) * best,
        "finals [{list}]: worst {worst:.3} < 95% of {best:.3}"
    );
    Ok(format!("finals [{list}], worst/best = {:.4}", worst / best))
}

const CLI_CONFIG: &str = r#"
seed = 11
[geometry]
arrays = 4
antennas_per_array = 2
[codebook]
quadrature_step_deg = 1.0
[scenario]
samples = 4
[time_varying]
snapshots = 12
snapshots_per_period = 6
[sweep]
sparsities = [0.2, 0.6]
"#;

fn c11_determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tmp.path().join("cfg.toml");
    fs::write(&cfg_path, CLI_CONFIG).unwrap();
    let bin = env!("CARGO_BIN_EXE_hmet");
    let mut files = 0;
    for cmd in ["converge", "sweep", "timevary", "dump-codebook"] {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let out = tmp.path().join(format!("{cmd}-{rep}"));
            let status = Command::new(bin)
                .args([
                    cmd,
                    "--config",
                    cfg_path.to_str().unwrap(),
                    "--samples",
                    "--out",
                    out.to_str().unwrap(),
                ])
                .output()
                .unwrap();
            ensure!(
                status.status.success(),
                "{cmd} failed: {}",
                String::from_utf8_lossy(&status.stderr)
            );
            let mut listing: Vec<(String, Vec<u8>)> = fs::read_dir(&out)
                .unwrap()
                .map(|e| {
                    let e = e.unwrap();
                    (
                        e.file_name().to_string_lossy().into_owned(),
                        fs::read(e.path()).unwrap(),
                    )
                })
                .collect();
            listing.sort();
            outputs.push(listing);
        }
        ensure!(outputs[0].len() == outputs[1].len(), "{cmd}: file sets differ");
        for ((na, a), (nb, b)) in outputs[0].iter().zip(&outputs[1]) {
            ensure!(na == nb && a == b, "{cmd}: {na} differs between runs");
            if na.ends_with(".csv") {
                ensure!(
                    a.starts_with(b"# seed=11 config_sha256="),
                    "{cmd}: {na} lacks the provenance line"
                );
            }
        }
        files += outputs[0].len();
    }
    Ok(format!("4 commands, {files} files byte-identical across reruns"))
}

struct Criterion {
    id: u8,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

const fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

const CRITERIA: [Criterion; 11] = [
    Criterion {
        id: 1,
        name: "pattern power conservation",
        budget: secs(30),
        run: c1_power_conservation,
    },
    Criterion {
        id: 2,
        name: "gain anchors",
        budget: secs(30),
        run: c2_gain_anchors,
    },
    Criterion {
        id: 3,
        name: "log-det oracle",
        budget: secs(5),
        run: c3_logdet_oracle,
    },
    Criterion {
        id: 4,
        name: "projection oracle",
        budget: secs(10),
        run: c4_projection_oracle,
    },
    Criterion {
        id: 5,
        name: "greedy oracle",
        budget: secs(30),
        run: c5_greedy_oracle,
    },
    Criterion {
        id: 6,
        name: "single-array alignment",
        budget: secs(60),
        run: c6_single_array_alignment,
    },
    Criterion {
        id: 7,
        name: "monotone convergence",
        budget: secs(600),
        run: c7_monotone_convergence,
    },
    Criterion {
        id: 8,
        name: "sparsity trends",
        budget: secs(1800),
        run: c8_sparsity_trends,
    },
    Criterion {
        id: 9,
        name: "scenario statistics",
        budget: secs(120),
        run: c9_scenario_statistics,
    },
    Criterion {
        id: 10,
        name: "initialization robustness",
        budget: secs(1800),
        run: c10_initialization_robustness,
    },
    Criterion {
        id: 11,
        name: "determinism",
        budget: secs(600),
        run: c11_determinism,
    },
];

fn main() {
    let filter = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let mut failures = 0;
    // The shared codebook and desk context are built outside the timed region.
    let _ = reference_codebook();
    for c in CRITERIA
        .iter()
        .filter(|c| filter.as_deref().map_or(true, |f| c.name.contains(f)))
    {
        if matches!(c.id, 7 | 8 | 10) {
            let _ = desk_context();
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(c.run));
        let elapsed = start.elapsed();
        let (ok, detail) = match result {
            Ok(Ok(d)) if elapsed <= c.budget => (true, d),
            Ok(Ok(d)) => (false, format!("{d}; over the {}s budget", c.budget.as_secs())),
            Ok(Err(d)) => (false, d),
            Err(_) => (false, "panicked".to_owned()),
        };
        failures += usize::from(!ok);
        println!(
            "criterion {:>2} {:<27} {} {:>7.1}s  {detail}",
            c.id,
            c.name,
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
