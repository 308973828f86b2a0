//! Library results checked against slow, independently written references.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hmet_core::channel::{
    stacked_channels, sum_rate, sum_rate_with_powers, ChannelSample, PhysicalConfig, SelectionState, UserGeom,
};
use hmet_core::geometry::{
    circular_distance, project_to_feasible, FeasibleSet, GeometryParams, Separation, StationGeometry,
};
use hmet_core::optimizer::{
    grad_position, greedy_antenna_select, objective, pattern_block, OptimizerConfig, Problem, SolverState,
};
use hmet_core::radiation::{CodebookParams, PatternCodebook};

type C64 = Complex<f64>;

fn codebook() -> &'static PatternCodebook {
    static CB: OnceLock<PatternCodebook> = OnceLock::new();
    CB.get_or_init(|| PatternCodebook::calibrate(CodebookParams::default()).unwrap())
}

/// 3 x 3 grid: elevations {-60, 0, 60} deg, azimuths {-90, 0, 90} deg.
fn codebook9() -> &'static PatternCodebook {
    static CB: OnceLock<PatternCodebook> = OnceLock::new();
    CB.get_or_init(|| {
        PatternCodebook::calibrate(CodebookParams {
            dtheta_rad: PI / 3.0,
            dphi_rad: PI / 2.0,
            quadrature_step_rad: 1f64.to_radians(),
            ..CodebookParams::default()
        })
        .unwrap()
    })
}

fn phys() -> PhysicalConfig {
    PhysicalConfig::free_space(2.4e9, 0.03, 1e-8).unwrap()
}

fn params(n: usize) -> GeometryParams {
    GeometryParams {
        rail_radius_m: 1.0,
        antennas_per_array: n,
        separation: Separation::Angle(PI / 24.0),
        element_spacing_m: phys().wavelength_m / 2.0,
        upa: None,
    }
}

fn random_user(rng: &mut ChaCha8Rng) -> UserGeom {
    UserGeom::from_angles(
        rng.random_range(-1.2..1.2),
        rng.random_range(-PI..PI),
        rng.random_range(50.0..120.0),
        0,
    )
}

fn log2_det_direct(m: DMatrix<C64>) -> f64 {
    m.determinant().re.log2()
}

/// `log2 det(I_NB + sum_k (p_k / sigma^2) h_k h_k^H)` on the full matrix.
fn rate_direct(noise: f64, channels: &[Vec<num_complex::Complex64>], powers: &[f64]) -> f64 {
    let nb = channels[0].len();
    let mut m = DMatrix::<C64>::identity(nb, nb);
    for (h, &p) in channels.iter().zip(powers) {
        let v = DMatrix::from_iterator(nb, 1, h.iter().map(|x| C64::new(x.re, x.im)));
        m += v.clone() * v.adjoint() * C64::new(p / noise, 0.0);
    }
    log2_det_direct(m)
}

#[test]
fn gram_log_det_matches_full_determinant() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let noise = 1e-8;
    for _ in 0..200 {
        let nb = rng.random_range(1..=16);
        let k = rng.random_range(1..=8);
        let channels: Vec<Vec<num_complex::Complex64>> = (0..k)
            .map(|_| {
                (0..nb)
                    .map(|_| num_complex::Complex64::new(rng.random_range(-1e-4..1e-4), rng.random_range(-1e-4..1e-4)))
                    .collect()
            })
            .collect();
        let powers: Vec<f64> = (0..k).map(|_| rng.random_range(0.001..0.1)).collect();
        let fast = sum_rate_with_powers(noise, &channels, &powers).unwrap();
        let direct = rate_direct(noise, &channels, &powers);
        assert!(
            (fast - direct).abs() <= 1e-9 * direct.abs().max(1.0),
            "{fast} vs {direct}"
        );
    }
}

/// Element gain in dB written straight from the pattern definition.
fn gain_db_direct(cb: &PatternCodebook, p: usize, theta: f64, phi: f64) -> f64 {
    let prm = cb.params();
    let mode = cb.mode(p).unwrap();
    let ah = -f64::min(
        12.0 * ((phi - mode.steer_azimuth_rad) / prm.phi_3db_rad).powi(2),
        prm.g_s_db,
    );
    let av = -f64::min(
        12.0 * ((theta - mode.steer_elevation_rad) / prm.theta_3db_rad).powi(2),
        prm.g_v_db,
    );
    prm.g_max_dbi + mode.delta_g_db - f64::min(-(ah + av), prm.g_s_db)
}

/// Channel of one user to array `b`, from the rotation matrix and the
/// steering/gain definitions.
fn channel_direct(
    cb: &PatternCodebook,
    ph: &PhysicalConfig,
    geom: &StationGeometry,
    b: usize,
    user: &UserGeom,
    modes: &[usize],
) -> Vec<num_complex::Complex64> {
    let phi = geom.azimuths()[b];
    let (s, c) = phi.sin_cos();
    let rot = [[0.0, -s, c], [0.0, c, s], [-1.0, 0.0, 0.0]];
    let f = user.pointing;
    // R^-1 = R^T for a rotation.
    let local: Vec<f64> = (0..3).map(|j| (0..3).map(|i| rot[i][j] * f[i]).sum()).collect();
    let theta = -local[0].asin();
    let az = local[1].atan2(local[2]);
    let v = ph.pathloss_ref * user.distance_m.powf(-ph.pathloss_exp);
    let r = geom.rail_radius();
    let normal = [c, s, 0.0];
    geom.local_element_positions()
        .iter()
        .zip(modes)
        .map(|(rl, &p)| {
            let rg: Vec<f64> = (0..3)
                .map(|i| r * normal[i] + (0..3).map(|j| rot[i][j] * rl[j]).sum::<f64>())
                .collect();
            let phase = -2.0 * PI / ph.wavelength_m * (0..3).map(|i| f[i] * rg[i]).sum::<f64>();
            let amp = (v * 10f64.powf(gain_db_direct(cb, p, theta, az) / 10.0)).sqrt();
            num_complex::Complex64::from_polar(amp, phase)
        })
        .collect()
}

#[test]
fn objective_matches_direct_formula_on_small_instance() {
    let cb = codebook();
    let ph = phys();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let geom =
            StationGeometry::new(&params(2), vec![rng.random_range(-PI..0.0), rng.random_range(0.3..PI)]).unwrap();
        let users: Vec<UserGeom> = (0..3).map(|_| random_user(&mut rng)).collect();
        let samples = vec![ChannelSample {
            users: users.clone(),
            sample_index: 0,
        }];
        let mut sel = SelectionState::uniform(1, 2, 2, cb.mode_count(), cb.default_mode()).unwrap();
        for b in 0..2 {
            for n in 0..2 {
                sel.set_mode(0, b, n, rng.random_range(0..cb.mode_count())).unwrap();
            }
        }
        let problem = Problem {
            codebook: cb,
            phys: &ph,
            samples: &samples,
        };
        let fast = objective(&problem, &geom, &sel).unwrap();
        let channels: Vec<_> = users
            .iter()
            .map(|u| {
                let mut h = channel_direct(cb, &ph, &geom, 0, u, sel.array_modes(0, 0));
                h.extend(channel_direct(cb, &ph, &geom, 1, u, sel.array_modes(0, 1)));
                h
            })
            .collect();
        let direct = rate_direct(ph.noise_power_w, &channels, &[ph.tx_power_w; 3]);
        assert!((fast - direct).abs() <= 1e-9 * direct.max(1.0), "{fast} vs {direct}");
    }
}

#[test]
fn projection_matches_grid_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let beta = PI / 24.0;
    let grid_step = 1e-5;
    let grid: Vec<f64> = (0..)
        .map(|i| -PI + i as f64 * grid_step)
        .take_while(|&x| x <= PI)
        .collect();
    for _ in 0..100 {
        let neighbors: Vec<f64> = {
            let mut v: Vec<f64> = Vec::new();
            while v.len() < 4 {
                let c = rng.random_range(-PI..PI);
                if v.iter().all(|&o| circular_distance(o, c) >= 2.0 * beta) {
                    v.push(c);
                }
            }
            v
        };
        // Aim near a neighbor so that most queries need projecting.
        let anchor = neighbors[rng.random_range(0..neighbors.len())];
        let query = anchor + rng.random_range(-1.5 * beta..1.5 * beta);
        let set = FeasibleSet::excluding(&neighbors, beta).unwrap();
        let projected = project_to_feasible(query, &set).unwrap();
        let best = grid
            .iter()
            .copied()
            .filter(|&x| neighbors.iter().all(|&c| circular_distance(x, c) >= beta))
            .min_by(|a, b| circular_distance(*a, query).total_cmp(&circular_distance(*b, query)))
            .unwrap();
        assert!(
            circular_distance(projected, query) <= circular_distance(best, query) + grid_step,
            "query {query}: {projected} vs grid {best}"
        );
        assert!(
            circular_distance(projected, best) <= grid_step + 1e-12,
            "{projected} vs {best}"
        );
    }
}

fn sample_rate(problem: &Problem<'_>, geom: &StationGeometry, sel: &SelectionState, s: usize) -> f64 {
    sum_rate(
        problem.phys,
        &stacked_channels(problem.codebook, geom, problem.phys, &problem.samples[s], sel, s),
    )
    .unwrap()
}

#[test]
fn greedy_matches_exhaustive_single_antenna() {
    let cb = codebook9();
    assert_eq!(cb.mode_count(), 9);
    let ph = phys();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut agree = 0;
    for _ in 0..50 {
        let samples = vec![ChannelSample {
            users: vec![random_user(&mut rng), random_user(&mut rng)],
            sample_index: 0,
        }];
        let problem = Problem {
            codebook: cb,
            phys: &ph,
            samples: &samples,
        };
        let geom = StationGeometry::new(&params(1), vec![rng.random_range(-PI..PI)]).unwrap();
        let mut state = SolverState::with_default_modes(geom.clone(), cb, 1).unwrap();
        let incumbent = cb.default_mode();
        let rates: Vec<f64> = (0..9)
            .map(|p| {
                let mut sel = state.selection.clone();
                sel.set_mode(0, 0, 0, p).unwrap();
                sample_rate(&problem, &geom, &sel, 0)
            })
            .collect();
        let best = rates.iter().copied().fold(f64::MIN, f64::max);
        let tol = 1e-12 * best.max(1.0);
        let expected = if rates[incumbent] >= best - tol {
            incumbent
        } else {
            (0..9).find(|&p| rates[p] >= best - tol).unwrap()
        };
        let chosen = greedy_antenna_select(&problem, &mut state, 0, 0, 0).unwrap();
        if chosen == expected {
            agree += 1;
        }
    }
    assert_eq!(agree, 50);
}

#[test]
fn pattern_block_reaches_single_swap_optimum() {
    let cb = codebook9();
    let ph = phys();
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    for _ in 0..20 {
        let users = (0..rng.random_range(1..=4)).map(|_| random_user(&mut rng)).collect();
        let samples = vec![ChannelSample { users, sample_index: 0 }];
        let problem = Problem {
            codebook: cb,
            phys: &ph,
            samples: &samples,
        };
        let geom = StationGeometry::new(&params(2), vec![rng.random_range(-PI..PI)]).unwrap();
        let mut state = SolverState::with_default_modes(geom.clone(), cb, 1).unwrap();
        let cfg = OptimizerConfig {
            max_pattern_sweeps: 20,
            ..OptimizerConfig::default()
        };
        // eps_threshold stops a sweep early only when it barely helps; keep
        // sweeping until nothing moves.
        loop {
            let before = state.selection.clone();
            pattern_block(&problem, &mut state, &cfg, 1).unwrap();
            if state.selection == before {
                break;
            }
        }
        let current = sample_rate(&problem, &geom, &state.selection, 0);
        for n in 0..2 {
            for p in 0..9 {
                let mut sel = state.selection.clone();
                sel.set_mode(0, 0, n, p).unwrap();
                let alt = sample_rate(&problem, &geom, &sel, 0);
                assert!(
                    alt <= current + 1e-12 * current.max(1.0),
                    "antenna {n} mode {p}: {alt} > {current}"
                );
            }
        }
    }
}

/// Single array, a few users near boresight: the pattern stays off its caps
/// so the objective is smooth in the azimuth.
fn smooth_instance(rng: &mut ChaCha8Rng) -> (Vec<ChannelSample>, StationGeometry) {
    let phi = rng.random_range(-PI..PI);
    let users = (0..rng.random_range(1..=3))
        .map(|_| {
            UserGeom::from_angles(
                rng.random_range(-0.4..0.4),
                phi + rng.random_range(-0.4..0.4),
                rng.random_range(50.0..120.0),
                0,
            )
        })
        .collect();
    let geom = StationGeometry::new(&params(4), vec![phi]).unwrap();
    (vec![ChannelSample { users, sample_index: 0 }], geom)
}

#[test]
fn gradient_sign_predicts_ascent() {
    let cb = codebook();
    let ph = phys();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut checked = 0;
    while checked < 50 {
        let (samples, geom) = smooth_instance(&mut rng);
        let problem = Problem {
            codebook: cb,
            phys: &ph,
            samples: &samples,
        };
        let state = SolverState::with_default_modes(geom.clone(), cb, 1).unwrap();
        let g = grad_position(&problem, &state, 0, 1e-4).unwrap();
        if g.abs() < 1e-3 {
            continue;
        }
        let here = objective(&problem, &geom, &state.selection).unwrap();
        let moved = geom
            .with_azimuths(vec![geom.azimuths()[0] + 1e-6 * g.signum()])
            .unwrap();
        let there = objective(&problem, &moved, &state.selection).unwrap();
        assert!(there >= here, "g = {g}: {there} < {here}");
        checked += 1;
    }
}

#[test]
fn gradient_is_stable_under_step_halving() {
    let cb = codebook();
    let ph = phys();
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    let mut checked = 0;
    while checked < 30 {
        let (samples, geom) = smooth_instance(&mut rng);
        let problem = Problem {
            codebook: cb,
            phys: &ph,
            samples: &samples,
        };
        let state = SolverState::with_default_modes(geom, cb, 1).unwrap();
        let g1 = grad_position(&problem, &state, 0, 1e-4).unwrap();
        if g1.abs() < 1e-3 {
            continue;
        }
        let g2 = grad_position(&problem, &state, 0, 5e-5).unwrap();
        assert!((g1 - g2).abs() <= 1e-3 * g1.abs(), "{g1} vs {g2}");
        checked += 1;
    }
}
