//! Alternating (block coordinate) ascent over array azimuths and per-sample
//! pattern selections.
//!
//! The slow block moves one array at a time by projected gradient ascent with
//! Armijo backtracking; the gradient is a central finite difference. The fast
//! block re-selects every antenna's mode greedily, sample by sample. Both
//! blocks only accept non-decreasing updates, so the recorded trace climbs.

mod eval;

use alloc::vec::Vec;

use rand::Rng;

use crate::channel::{average_sum_rate, check_selection_shape, ChannelSample, PhysicalConfig, SelectionState};
use crate::geometry::{check_separation, project_to_feasible, wrap_angle, StationGeometry};
use crate::radiation::PatternCodebook;
use crate::{Error, Result};

use eval::{map_indexed, mean, GramStore, SampleWork};

/// Read-only data shared by every evaluation.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub codebook: &'a PatternCodebook,
    pub phys: &'a PhysicalConfig,
    pub samples: &'a [ChannelSample],
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    /// Convergence threshold on the objective (bits/s/Hz).
    pub eps_threshold: f64,
    pub max_inner_position: usize,
    /// Sweeps over all arrays per position block.
    pub max_outer_position: usize,
    /// Sweeps over all arrays per pattern block.
    pub max_pattern_sweeps: usize,
    pub max_cycles: usize,
    /// Initial step, rad per unit gradient.
    pub eta_init: f64,
    pub backtrack_factor: f64,
    pub armijo_coeff: f64,
    /// Half-width of the central difference, rad.
    pub fd_step: f64,
    /// Backtracking gives up (keeps the incumbent) once the step drops below this.
    pub min_step: f64,
    pub optimize_positions: bool,
    pub optimize_patterns: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            eps_threshold: 5e-4,
            max_inner_position: 50,
            max_outer_position: 3,
            max_pattern_sweeps: 3,
            max_cycles: 2,
            eta_init: 0.1,
            backtrack_factor: 0.5,
            armijo_coeff: 1e-4,
            fd_step: 1e-4,
            min_step: 1e-12,
            optimize_positions: true,
            optimize_patterns: true,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("max_inner_position", self.max_inner_position),
            ("max_outer_position", self.max_outer_position),
            ("max_pattern_sweeps", self.max_pattern_sweeps),
            ("max_cycles", self.max_cycles),
        ] {
            if v == 0 {
                return Err(Error::invalid(name, "must be at least 1"));
            }
        }
        let positive = |v: f64| v.is_finite() && v > 0.0;
        let unit = |v: f64| v > 0.0 && v < 1.0;
        if !positive(self.eps_threshold) {
            return Err(Error::invalid("eps_threshold", "must be positive"));
        }
        if !positive(self.eta_init) {
            return Err(Error::invalid("eta_init", "must be positive"));
        }
        if !unit(self.backtrack_factor) {
            return Err(Error::invalid("backtrack_factor", "must lie in (0, 1)"));
        }
        if !unit(self.armijo_coeff) {
            return Err(Error::invalid("armijo_coeff", "must lie in (0, 1)"));
        }
        if !positive(self.fd_step) {
            return Err(Error::invalid("fd_step", "must be positive"));
        }
        if !positive(self.min_step) {
            return Err(Error::invalid("min_step", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    Init,
    Position,
    Pattern,
}

impl Block {
    pub fn as_str(self) -> &'static str {
        match self {
            Block::Init => "init",
            Block::Position => "position",
            Block::Pattern => "pattern",
        }
    }
}

/// One point of the convergence trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    /// 1-based solver cycle, 0 for the initial point.
    pub cycle: usize,
    pub block: Block,
    /// Array that was just updated.
    pub array: usize,
    /// 1-based sweep within the block.
    pub sweep: usize,
    /// Running update counter over the whole solve (0 = initial point).
    pub iteration: usize,
    pub objective: f64,
}

/// Work done by the solver, in objective evaluations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalCounts {
    /// Full objective evaluations at incumbents (start of loops and blocks).
    pub baseline: u64,
    /// Finite-difference probes, two per gradient.
    pub fd_probes: u64,
    /// Candidate points tried by the line search.
    pub line_search_trials: u64,
    /// Per-sample rates of candidate modes in the pattern block.
    pub pattern_candidates: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub geom: StationGeometry,
    pub selection: SelectionState,
    pub trace: Vec<TraceEntry>,
    /// Completed cycles.
    pub cycles: usize,
    /// Completed position sweeps, all cycles.
    pub position_sweeps: usize,
    /// Completed pattern sweeps, all cycles.
    pub pattern_sweeps: usize,
    pub evals: EvalCounts,
}

impl SolverState {
    pub fn new(geom: StationGeometry, selection: SelectionState) -> Self {
        Self {
            geom,
            selection,
            trace: Vec::new(),
            cycles: 0,
            position_sweeps: 0,
            pattern_sweeps: 0,
            evals: EvalCounts::default(),
        }
    }

    /// Every antenna of every sample on the codebook's default mode.
    pub fn with_default_modes(geom: StationGeometry, codebook: &PatternCodebook, samples: usize) -> Result<Self> {
        let selection = SelectionState::uniform(
            samples,
            geom.array_count(),
            geom.antennas_per_array(),
            codebook.mode_count(),
            codebook.default_mode(),
        )?;
        Ok(Self::new(geom, selection))
    }

    pub fn final_objective(&self) -> Option<f64> {
        self.trace.last().map(|e| e.objective)
    }

    fn record(&mut self, cycle: usize, block: Block, array: usize, sweep: usize, objective: f64) {
        let iteration = self.trace.len();
        self.trace.push(TraceEntry {
            cycle,
            block,
            array,
            sweep,
            iteration,
            objective,
        });
    }

    fn check(&self, problem: &Problem<'_>) -> Result<()> {
        check_selection_shape(&self.selection, problem.samples.len(), &self.geom, problem.codebook)?;
        check_separation(self.geom.azimuths(), self.geom.min_separation())
    }
}

/// Average sum-rate of the state, evaluated directly from the channel model.
pub fn objective(problem: &Problem<'_>, geom: &StationGeometry, selection: &SelectionState) -> Result<f64> {
    average_sum_rate(problem.phys, problem.samples, geom, problem.codebook, selection)
}

/// `n` azimuths drawn uniformly one after another, redrawing any that would
/// sit closer than `beta` to an earlier one.
pub fn random_feasible_azimuths<R: Rng + ?Sized>(n: usize, beta: f64, rng: &mut R) -> Result<Vec<f64>> {
    const ATTEMPTS: usize = 10_000;
    let mut out: Vec<f64> = Vec::with_capacity(n);
    for _ in 0..n {
        let mut placed = false;
        for _ in 0..ATTEMPTS {
            let phi = wrap_angle(rng.random_range(-core::f64::consts::PI..core::f64::consts::PI));
            if out.iter().all(|&o| crate::geometry::circular_distance(o, phi) >= beta) {
                out.push(phi);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::RejectionExhausted { attempts: ATTEMPTS });
        }
    }
    Ok(out)
}

fn check_array(geom: &StationGeometry, b: usize) -> Result<()> {
    if b >= geom.array_count() {
        return Err(Error::ArrayIndex {
            index: b,
            count: geom.array_count(),
        });
    }
    Ok(())
}

/// Central-difference derivative of the objective in the azimuth of array
/// `b`, other arrays and all selections fixed. Probe points are not projected.
pub fn grad_position(problem: &Problem<'_>, state: &SolverState, b: usize, fd_step: f64) -> Result<f64> {
    state.check(problem)?;
    check_array(&state.geom, b)?;
    let cache = GramStore::build(problem, &state.geom, &state.selection).position_cache(problem, &state.selection, b);
    let phi = state.geom.azimuths()[b];
    Ok(central_difference(problem, &state.geom, &cache, phi, fd_step))
}

fn central_difference(
    problem: &Problem<'_>,
    geom: &StationGeometry,
    cache: &eval::PositionCache,
    phi: f64,
    h: f64,
) -> f64 {
    (cache.eval(problem, geom, phi + h) - cache.eval(problem, geom, phi - h)) / (2.0 * h)
}

/// Outcome of one projected-gradient run on a single array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerOutcome {
    pub azimuth: f64,
    pub objective: f64,
    pub iterations: usize,
}

/// Projected gradient ascent on the azimuth of array `b`.
pub fn position_inner_loop(
    problem: &Problem<'_>,
    state: &mut SolverState,
    b: usize,
    cfg: &OptimizerConfig,
) -> Result<InnerOutcome> {
    cfg.validate()?;
    state.check(problem)?;
    check_array(&state.geom, b)?;
    let store = GramStore::build(problem, &state.geom, &state.selection);
    inner_loop(problem, state, &store, b, cfg)
}

fn inner_loop(
    problem: &Problem<'_>,
    state: &mut SolverState,
    store: &GramStore,
    b: usize,
    cfg: &OptimizerConfig,
) -> Result<InnerOutcome> {
    let feasible = state.geom.feasible_arcs(b)?;
    let cache = store.position_cache(problem, &state.selection, b);
    let mut phi = state.geom.azimuths()[b];
    let mut value = cache.eval(problem, &state.geom, phi);
    state.evals.baseline += 1;
    let mut iterations = 0;
    for _ in 0..cfg.max_inner_position {
        iterations += 1;
        let g = central_difference(problem, &state.geom, &cache, phi, cfg.fd_step);
        state.evals.fd_probes += 2;
        let mut eta = cfg.eta_init;
        let (mut next_phi, mut next_value) = (phi, value);
        loop {
            let cand = project_to_feasible(phi + eta * g, &feasible)?;
            let cand_value = cache.eval(problem, &state.geom, cand);
            state.evals.line_search_trials += 1;
            let step = wrap_angle(cand - phi);
            let armijo = cand_value - value >= cfg.armijo_coeff * eta * g * step;
            // The projection can send the point against the gradient, where
            // the test alone would admit a decrease.
            if armijo && cand_value >= value && cand_value.is_finite() {
                next_phi = cand;
                next_value = cand_value;
                break;
            }
            eta *= cfg.backtrack_factor;
            if eta < cfg.min_step {
                break;
            }
        }
        let delta = next_value - value;
        if next_phi != phi {
            let mut azimuths = state.geom.azimuths().to_vec();
            azimuths[b] = next_phi;
            match state.geom.with_azimuths(azimuths) {
                Ok(g) => {
                    state.geom = g;
                    phi = state.geom.azimuths()[b];
                    value = next_value;
                }
                // Rounding at an arc boundary; treat as a rejected step.
                Err(Error::SeparationViolated { .. }) => break,
                Err(e) => return Err(e),
            }
        }
        if libm::fabs(delta) <= cfg.eps_threshold {
            break;
        }
    }
    Ok(InnerOutcome {
        azimuth: phi,
        objective: value,
        iterations,
    })
}

/// Sweeps of [`position_inner_loop`] over all arrays. Returns the objective
/// after the last update.
pub fn position_block(
    problem: &Problem<'_>,
    state: &mut SolverState,
    cfg: &OptimizerConfig,
    cycle: usize,
) -> Result<f64> {
    cfg.validate()?;
    state.check(problem)?;
    let mut store = GramStore::build(problem, &state.geom, &state.selection);
    let mut value = mean(&store.sample_rates(problem));
    state.evals.baseline += 1;
    for sweep in 1..=cfg.max_outer_position {
        for b in 0..state.geom.array_count() {
            let before = state.geom.azimuths()[b];
            let out = inner_loop(problem, state, &store, b, cfg)?;
            if out.azimuth != before {
                store.refresh_array(problem, &state.geom, &state.selection, b);
            }
            value = out.objective;
            state.record(cycle, Block::Position, b, sweep, value);
        }
        state.position_sweeps += 1;
    }
    Ok(value)
}

/// Re-select antenna `n` of array `b` in sample `s` to the mode with the
/// highest sample sum-rate. Returns the chosen (zero-based) mode.
pub fn greedy_antenna_select(
    problem: &Problem<'_>,
    state: &mut SolverState,
    b: usize,
    n: usize,
    s: usize,
) -> Result<usize> {
    state.check(problem)?;
    check_array(&state.geom, b)?;
    if n >= state.geom.antennas_per_array() {
        return Err(Error::invalid("antenna", "index out of range"));
    }
    if s >= problem.samples.len() {
        return Err(Error::invalid("sample", "index out of range"));
    }
    let work = SampleWork::new(problem, &state.geom, s);
    let choice = work.select_antenna(state.selection.sample_modes(s), b, n);
    state.evals.pattern_candidates += choice.candidates as u64;
    state.selection.set_mode(s, b, n, choice.mode)?;
    Ok(choice.mode)
}

/// Per-sample state of the pattern block.
struct SampleSweep {
    work: SampleWork,
    rate: f64,
    sweep_start: f64,
    frozen: bool,
}

/// Greedy sweeps over all arrays and antennas, samples independent. A sample
/// stops once a whole sweep improves its rate by a relative `eps_threshold`
/// or less. One trace entry (the sample average) is recorded per array and
/// sweep, frozen samples included. Returns the objective after the block.
pub fn pattern_block(
    problem: &Problem<'_>,
    state: &mut SolverState,
    cfg: &OptimizerConfig,
    cycle: usize,
) -> Result<f64> {
    cfg.validate()?;
    state.check(problem)?;
    let geom = &state.geom;
    let selection = &state.selection;
    let mut work: Vec<SampleSweep> = map_indexed(problem.samples.len(), |s| {
        let work = SampleWork::new(problem, geom, s);
        let rate = work.rate(selection.sample_modes(s));
        SampleSweep {
            work,
            rate,
            sweep_start: rate,
            frozen: false,
        }
    });
    state.evals.baseline += 1;
    let antennas = state.geom.antennas_per_array();
    let mut value = mean(&work.iter().map(|w| w.rate).collect::<Vec<_>>());
    for sweep in 1..=cfg.max_pattern_sweeps {
        for b in 0..state.geom.array_count() {
            let updates = {
                let work = &work;
                let selection = &state.selection;
                map_indexed(work.len(), |s| {
                    let w = &work[s];
                    if w.frozen {
                        return None;
                    }
                    let mut modes = selection.sample_modes(s).to_vec();
                    let mut rate = w.rate;
                    let mut candidates = 0;
                    for n in 0..antennas {
                        let choice = w.work.select_antenna(&modes, b, n);
                        candidates += choice.candidates;
                        modes[b * antennas + n] = choice.mode;
                        if choice.candidates > 0 {
                            rate = choice.rate;
                        }
                    }
                    Some((modes, rate, candidates))
                })
            };
            for (s, update) in updates.into_iter().enumerate() {
                if let Some((modes, rate, candidates)) = update {
                    state.evals.pattern_candidates += candidates as u64;
                    state.selection.sample_modes_mut(s).copy_from_slice(&modes);
                    work[s].rate = rate;
                }
            }
            value = mean(&work.iter().map(|w| w.rate).collect::<Vec<_>>());
            state.record(cycle, Block::Pattern, b, sweep, value);
        }
        for w in work.iter_mut().filter(|w| !w.frozen) {
            if w.rate - w.sweep_start <= cfg.eps_threshold * libm::fabs(w.sweep_start) {
                w.frozen = true;
            }
            w.sweep_start = w.rate;
        }
        state.pattern_sweeps += 1;
    }
    Ok(value)
}

/// Alternate position and pattern blocks until `max_cycles` cycles have run
/// or a cycle improves the objective by a relative `eps_threshold` or less.
pub fn solve(problem: &Problem<'_>, mut state: SolverState, cfg: &OptimizerConfig) -> Result<SolverState> {
    cfg.validate()?;
    state.check(problem)?;
    let initial = mean(&GramStore::build(problem, &state.geom, &state.selection).sample_rates(problem));
    state.evals.baseline += 1;
    if !initial.is_finite() {
        return Err(Error::NonFinite("initial objective"));
    }
    state.record(0, Block::Init, 0, 0, initial);
    let mut previous = initial;
    for cycle in 1..=cfg.max_cycles {
        let mut value = previous;
        if cfg.optimize_positions {
            value = position_block(problem, &mut state, cfg, cycle)?;
        }
        if cfg.optimize_patterns {
            value = pattern_block(problem, &mut state, cfg, cycle)?;
        }
        state.cycles = cycle;
        if value - previous <= cfg.eps_threshold * libm::fabs(previous) {
            break;
        }
        previous = value;
    }
    Ok(state)
}
