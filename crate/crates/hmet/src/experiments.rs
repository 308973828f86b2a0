//! The four experiment commands. Each takes a calibrated [`Context`], writes
//! its CSVs into a [`RunDir`] and returns the numbers it wrote.

use std::time::Instant;

use rayon::prelude::*;

use hmet_core::baselines::SchemeSpec;
use hmet_core::channel::{ChannelSample, PhysicalConfig, SelectionState};
use hmet_core::geometry::{GeometryParams, StationGeometry};
use hmet_core::optimizer::{objective, pattern_block, OptimizerConfig, Problem, SolverState, TraceEntry};
use hmet_core::radiation::PatternCodebook;
use hmet_core::scenarios::time_varying::to_sample;
use hmet_core::scenarios::{generate_static_samples, TimeVaryingScenario};
use hmet_core::seed::derive_seed;

use crate::config::{Config, SchemeChoice};
use crate::error::Result;
use crate::output::{fmt_f64, RunDir};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Options {
    /// Fill `wall_time_s`; off by default so reruns are byte-identical.
    pub timing: bool,
    /// Also write the generated channel samples.
    pub write_samples: bool,
}

/// Everything derived from the configuration that the commands share.
pub struct Context {
    pub cfg: Config,
    pub codebook: PatternCodebook,
    pub phys: PhysicalConfig,
    pub template: GeometryParams,
    pub optimizer: OptimizerConfig,
}

impl Context {
    /// Calibrates the codebook, the slow part of start-up.
    pub fn new(cfg: Config) -> Result<Self> {
        let codebook = PatternCodebook::calibrate(cfg.codebook_params())?;
        Ok(Self {
            phys: cfg.physical_config()?,
            template: cfg.geometry_template(),
            optimizer: cfg.optimizer_config(),
            codebook,
            cfg,
        })
    }

    pub fn problem<'a>(&'a self, samples: &'a [ChannelSample]) -> Problem<'a> {
        Problem {
            codebook: &self.codebook,
            phys: &self.phys,
            samples,
        }
    }

    pub fn spec(&self, scheme: SchemeChoice) -> SchemeSpec {
        scheme.spec(self.cfg.geometry.arrays, self.cfg.geometry.antennas_per_array)
    }

    /// Static samples at sparsity `eta` from the child stream `(label, index)`.
    pub fn static_samples(&self, eta: f64, label: &str, index: u64) -> Result<Vec<ChannelSample>> {
        let scn = self.cfg.static_scenario(eta);
        let seed = derive_seed(self.cfg.seed, label, index);
        Ok(generate_static_samples(&scn, self.cfg.scenario.samples, seed)?)
    }

    /// Run one scheme from its standard initialization.
    pub fn run_scheme(&self, scheme: SchemeChoice, samples: &[ChannelSample]) -> Result<SolverState> {
        let problem = self.problem(samples);
        Ok(self
            .spec(scheme)
            .run(&problem, &self.template, self.cfg.geometry.arrays, &self.optimizer)?)
    }

    /// Initial state of a scheme for `samples` channel samples.
    pub fn initial_state(&self, scheme: SchemeChoice, samples: usize) -> Result<SolverState> {
        Ok(self
            .spec(scheme)
            .initial_state(&self.template, self.cfg.geometry.arrays, &self.codebook, samples)?)
    }
}

fn trace_rows(trace: &[TraceEntry]) -> Vec<[String; 5]> {
    trace
        .iter()
        .map(|e| {
            let slot = if e.block == hmet_core::optimizer::Block::Init {
                String::new()
            } else {
                e.array.to_string()
            };
            [
                e.cycle.to_string(),
                e.block.as_str().to_owned(),
                slot,
                e.iteration.to_string(),
                fmt_f64(e.objective),
            ]
        })
        .collect()
}

fn write_samples(run: &mut RunDir, name: &str, samples: &[ChannelSample]) -> Result<()> {
    let rows = samples.iter().enumerate().flat_map(|(s, sample)| {
        sample.users.iter().enumerate().map(move |(k, u)| {
            let p = u.position();
            [
                s.to_string(),
                k.to_string(),
                u.region.to_string(),
                fmt_f64(p[0]),
                fmt_f64(p[1]),
                fmt_f64(p[2]),
                fmt_f64(u.distance_m),
            ]
        })
    });
    run.write_csv(
        name,
        &["sample", "user", "region", "x_m", "y_m", "z_m", "distance_m"],
        rows,
    )
}

fn position_rows<'a>(label: &'a str, geom: &'a StationGeometry) -> impl Iterator<Item = [String; 3]> + 'a {
    geom.azimuths()
        .iter()
        .enumerate()
        .map(move |(b, a)| [label.to_owned(), b.to_string(), fmt_f64(*a)])
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergeResult {
    pub scheme: SchemeChoice,
    pub state: SolverState,
}

/// Solve every configured scheme on one set of static samples and write the
/// per-update objective trace of each.
pub fn converge(ctx: &Context, run: &mut RunDir, opts: Options) -> Result<Vec<ConvergeResult>> {
    let samples = ctx.static_samples(ctx.cfg.scenario.sparsity, "static", 0)?;
    if opts.write_samples {
        write_samples(run, "samples.csv", &samples)?;
    }
    let mut results = Vec::new();
    for scheme in ctx.cfg.scheme_choices() {
        let state = ctx.run_scheme(scheme, &samples)?;
        run.write_csv(
            &format!("trace_{scheme}.csv"),
            &["cycle", "block", "array", "iteration", "objective_bps_hz"],
            trace_rows(&state.trace),
        )?;
        results.push(ConvergeResult { scheme, state });
    }
    let summary = results.iter().map(|r| {
        let first = r.state.trace.first().map_or(0.0, |e| e.objective);
        [
            r.scheme.to_string(),
            r.state.geom.array_count().to_string(),
            r.state.geom.antennas_per_array().to_string(),
            fmt_f64(first),
            fmt_f64(r.state.final_objective().unwrap_or(first)),
            (r.state.trace.len() - 1).to_string(),
        ]
    });
    run.write_csv(
        "summary.csv",
        &[
            "scheme",
            "arrays",
            "antennas_per_array",
            "initial_objective_bps_hz",
            "final_objective_bps_hz",
            "updates",
        ],
        summary,
    )?;
    let labels: Vec<String> = results.iter().map(|r| r.scheme.to_string()).collect();
    let rows: Vec<[String; 3]> = results
        .iter()
        .zip(&labels)
        .flat_map(|(r, l)| position_rows(l, &r.state.geom))
        .collect();
    run.write_csv("positions.csv", &["scheme", "array", "azimuth_rad"], rows)?;
    Ok(results)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub scheme: SchemeChoice,
    pub eta: f64,
    pub final_objective: f64,
    pub wall_time_s: Option<f64>,
}

/// For every sparsity value: fresh samples from the child stream
/// `("sweep", index)` (index 0 throughout with `common_samples`), then every
/// configured scheme on them.
pub fn sweep(ctx: &Context, run: &mut RunDir, opts: Options) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for (i, &eta) in ctx.cfg.sweep.sparsities.iter().enumerate() {
        let index = if ctx.cfg.sweep.common_samples { 0 } else { i as u64 };
        let samples = ctx.static_samples(eta, "sweep", index)?;
        if opts.write_samples {
            write_samples(run, &format!("samples_eta{i}.csv"), &samples)?;
        }
        for scheme in ctx.cfg.scheme_choices() {
            let start = Instant::now();
            let state = ctx.run_scheme(scheme, &samples)?;
            let elapsed = start.elapsed().as_secs_f64();
            rows.push(SweepRow {
                scheme,
                eta,
                final_objective: state.final_objective().unwrap_or(0.0),
                wall_time_s: opts.timing.then_some(elapsed),
            });
        }
    }
    let out = rows.iter().map(|r| {
        [
            r.scheme.to_string(),
            fmt_f64(r.eta),
            fmt_f64(r.final_objective),
            r.wall_time_s.map(fmt_f64).unwrap_or_default(),
        ]
    });
    run.write_csv(
        "sweep.csv",
        &["scheme", "eta", "final_objective_bps_hz", "wall_time_s"],
        out,
    )?;
    Ok(rows)
}

/// Sum rate of one snapshot with positions fixed: the pattern block runs on
/// that snapshot alone (from default modes) if the scheme tunes patterns.
pub fn snapshot_rate(
    ctx: &Context,
    spec: &SchemeSpec,
    geom: &StationGeometry,
    sample: &ChannelSample,
) -> Result<(f64, SelectionState)> {
    let samples = std::slice::from_ref(sample);
    let problem = ctx.problem(samples);
    let mut state = SolverState::with_default_modes(geom.clone(), &ctx.codebook, 1)?;
    let cfg = spec.optimizer_config(&ctx.optimizer);
    let rate = if cfg.optimize_patterns {
        pattern_block(&problem, &mut state, &cfg, 1)?
    } else {
        objective(&problem, &state.geom, &state.selection)?
    };
    Ok((rate, state.selection))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeVaryingResult {
    pub schemes: Vec<SchemeChoice>,
    /// `rates[scheme][snapshot]` over the measured snapshots.
    pub rates: Vec<Vec<f64>>,
    /// `azimuths[period][scheme]`, fixed within each period.
    pub azimuths: Vec<Vec<Vec<f64>>>,
    /// Scenario snapshot index of the first measured snapshot.
    pub first_snapshot: usize,
    pub clip_stats: (u64, u64),
}

impl TimeVaryingResult {
    pub fn mean_rate(&self, scheme: usize) -> f64 {
        let r = &self.rates[scheme];
        r.iter().sum::<f64>() / r.len().max(1) as f64
    }
}

/// Long timescale: at every period boundary, schemes that move their arrays
/// re-optimize positions on the previous period's snapshots (a warm-up period
/// precedes the first). Short timescale: each snapshot gets its own pattern
/// selection with positions held fixed.
pub fn timevary(ctx: &Context, run: &mut RunDir, _opts: Options) -> Result<TimeVaryingResult> {
    let t = &ctx.cfg.time_varying;
    let period = t.snapshots_per_period;
    let schemes = ctx.cfg.scheme_choices();
    let specs: Vec<SchemeSpec> = schemes.iter().map(|&s| ctx.spec(s)).collect();
    let mut scn = TimeVaryingScenario::new(ctx.cfg.time_varying_params(), derive_seed(ctx.cfg.seed, "timevary", 0))?;

    let mut trajectories: Vec<[String; 6]> = Vec::new();
    let mut advance = |scn: &mut TimeVaryingScenario, n: usize| -> Result<Vec<ChannelSample>> {
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let users = scn.step_users()?;
            let s = scn.snapshot_index();
            for u in &users {
                trajectories.push([
                    s.to_string(),
                    u.id.to_string(),
                    u.region.to_string(),
                    fmt_f64(u.position[0]),
                    fmt_f64(u.position[1]),
                    fmt_f64(u.position[2]),
                ]);
            }
            out.push(to_sample(&users, s)?);
        }
        Ok(out)
    };

    let mut window = advance(&mut scn, period)?;
    let first_snapshot = scn.snapshot_index() + 1;
    let fixed: Vec<StationGeometry> = schemes
        .iter()
        .map(|&s| ctx.initial_state(s, 1).map(|st| st.geom))
        .collect::<Result<_>>()?;
    let mut rates = vec![Vec::with_capacity(t.snapshots); schemes.len()];
    let mut azimuths = Vec::new();
    let mut position_rows: Vec<[String; 4]> = Vec::new();
    let mut measured = 0;
    while measured < t.snapshots {
        let k = azimuths.len();
        let geoms: Vec<StationGeometry> = schemes
            .iter()
            .zip(&specs)
            .zip(&fixed)
            .map(|((&scheme, spec), geom)| {
                if spec.positions_frozen {
                    Ok(geom.clone())
                } else {
                    ctx.run_scheme(scheme, &window).map(|st| st.geom)
                }
            })
            .collect::<Result<_>>()?;
        for (scheme, g) in schemes.iter().zip(&geoms) {
            for (b, a) in g.azimuths().iter().enumerate() {
                position_rows.push([k.to_string(), scheme.to_string(), b.to_string(), fmt_f64(*a)]);
            }
        }
        azimuths.push(geoms.iter().map(|g| g.azimuths().to_vec()).collect());

        let n = period.min(t.snapshots - measured);
        window = advance(&mut scn, n)?;
        for ((spec, geom), out) in specs.iter().zip(&geoms).zip(rates.iter_mut()) {
            let r: Vec<f64> = window
                .par_iter()
                .map(|s| snapshot_rate(ctx, spec, geom, s).map(|(r, _)| r))
                .collect::<Result<_>>()?;
            out.extend(r);
        }
        measured += n;
    }

    let rate_rows = (0..t.snapshots).flat_map(|i| {
        let (schemes, rates) = (&schemes, &rates);
        (0..schemes.len()).map(move |j| {
            [
                (first_snapshot + i).to_string(),
                (i / period).to_string(),
                schemes[j].to_string(),
                fmt_f64(rates[j][i]),
            ]
        })
    });
    run.write_csv(
        "timevary_rates.csv",
        &["snapshot", "period", "scheme", "sum_rate_bps_hz"],
        rate_rows.collect::<Vec<_>>(),
    )?;
    run.write_csv(
        "timevary_positions.csv",
        &["period", "scheme", "array", "azimuth_rad"],
        position_rows,
    )?;
    run.write_csv(
        "trajectories.csv",
        &["snapshot", "user_id", "region", "x_m", "y_m", "z_m"],
        trajectories,
    )?;
    let result = TimeVaryingResult {
        schemes,
        rates,
        azimuths,
        first_snapshot,
        clip_stats: scn.clip_stats(),
    };
    let summary: Vec<[String; 3]> = result
        .schemes
        .iter()
        .enumerate()
        .map(|(j, s)| {
            [
                s.to_string(),
                fmt_f64(result.mean_rate(j)),
                result.rates[j].len().to_string(),
            ]
        })
        .collect();
    run.write_csv(
        "timevary_summary.csv",
        &["scheme", "mean_sum_rate_bps_hz", "snapshots"],
        summary,
    )?;
    Ok(result)
}

/// The calibrated codebook, one row per mode (`p` is 1-based).
pub fn dump_codebook(ctx: &Context, run: &mut RunDir) -> Result<()> {
    let g_max = ctx.codebook.params().g_max_dbi;
    let rows = ctx.codebook.modes().iter().enumerate().map(|(p, m)| {
        [
            (p + 1).to_string(),
            fmt_f64(m.steer_elevation_rad),
            fmt_f64(m.steer_azimuth_rad),
            fmt_f64(m.delta_g_db),
            fmt_f64(g_max + m.delta_g_db),
        ]
    });
    run.write_csv(
        "codebook.csv",
        &["p", "theta_p_rad", "phi_p_rad", "delta_g_db", "peak_gain_dbi"],
        rows,
    )
}
