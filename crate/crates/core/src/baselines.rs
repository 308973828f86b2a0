//! Comparison schemes: fixed arrays (FPA), position-only (PA), pattern-only
//! (PS), and the full joint design.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::channel::SelectionState;
use crate::geometry::{equally_spaced_azimuths, GeometryParams, StationGeometry};
use crate::optimizer::{solve, OptimizerConfig, Problem, SolverState};
use crate::radiation::PatternCodebook;
use crate::{Error, Result};

/// Sweeps per block for the single-block schemes, which have no second block
/// to spend their budget on.
pub const SINGLE_BLOCK_SWEEPS: usize = 6;

/// Array count of the fixed-position scheme.
pub const FPA_ARRAYS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    Fpa,
    PaOnly,
    PsOnly,
    Hmet,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 4] = [
        SchemeKind::Hmet,
        SchemeKind::PaOnly,
        SchemeKind::PsOnly,
        SchemeKind::Fpa,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SchemeKind::Fpa => "fpa",
            SchemeKind::PaOnly => "pa-only",
            SchemeKind::PsOnly => "ps-only",
            SchemeKind::Hmet => "hmet",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fpa" => Ok(SchemeKind::Fpa),
            "pa-only" => Ok(SchemeKind::PaOnly),
            "ps-only" => Ok(SchemeKind::PsOnly),
            "hmet" => Ok(SchemeKind::Hmet),
            _ => Err(Error::invalid("scheme", alloc::format!("unknown scheme `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SchemeSpec {
    pub kind: SchemeKind,
    /// Overrides the configured array count.
    pub array_count: Option<usize>,
    /// Overrides the configured antennas per array.
    pub antennas_per_array: Option<usize>,
    pub positions_frozen: bool,
    pub patterns_frozen: bool,
    /// Overrides the sweep count of whichever block is enabled.
    pub block_sweeps: Option<usize>,
}

impl SchemeSpec {
    pub fn hmet() -> Self {
        Self {
            kind: SchemeKind::Hmet,
            array_count: None,
            antennas_per_array: None,
            positions_frozen: false,
            patterns_frozen: false,
            block_sweeps: None,
        }
    }

    /// Default spec of each kind; FPA and PS-only keep the configured sizes
    /// until [`SchemeSpec::resolve`] fixes them.
    pub fn of_kind(kind: SchemeKind) -> Self {
        match kind {
            SchemeKind::Hmet => Self::hmet(),
            SchemeKind::PaOnly => make_pa_only(),
            SchemeKind::PsOnly => Self {
                array_count: None,
                antennas_per_array: None,
                ..make_ps_only(1, 1)
            },
            SchemeKind::Fpa => Self {
                kind: SchemeKind::Fpa,
                array_count: Some(FPA_ARRAYS),
                antennas_per_array: None,
                positions_frozen: true,
                patterns_frozen: true,
                block_sweeps: None,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (pos, pat) = match self.kind {
            SchemeKind::Fpa => (true, true),
            SchemeKind::PaOnly => (false, true),
            SchemeKind::PsOnly => (true, false),
            SchemeKind::Hmet => (false, false),
        };
        if (self.positions_frozen, self.patterns_frozen) != (pos, pat) {
            return Err(Error::invalid("scheme", "frozen flags do not match the scheme kind"));
        }
        if self.array_count == Some(0) || self.antennas_per_array == Some(0) || self.block_sweeps == Some(0) {
            return Err(Error::invalid("scheme", "overrides must be at least 1"));
        }
        Ok(())
    }

    /// `(arrays, antennas per array)` for a station configured with `arrays`
    /// arrays of `antennas` each. FPA keeps the total, spread over three arrays.
    pub fn resolve(&self, arrays: usize, antennas: usize) -> Result<(usize, usize)> {
        self.validate()?;
        if self.kind == SchemeKind::Fpa && self.antennas_per_array.is_none() {
            let total = arrays * antennas;
            if total < FPA_ARRAYS {
                return Err(Error::invalid("total_antennas", "need at least 3 antennas"));
            }
            return Ok((FPA_ARRAYS, total / FPA_ARRAYS));
        }
        Ok((
            self.array_count.unwrap_or(arrays),
            self.antennas_per_array.unwrap_or(antennas),
        ))
    }

    /// Solver settings with this scheme's blocks switched off or resized.
    pub fn optimizer_config(&self, base: &OptimizerConfig) -> OptimizerConfig {
        let mut cfg = base.clone();
        cfg.optimize_positions = !self.positions_frozen;
        cfg.optimize_patterns = !self.patterns_frozen;
        if let Some(sweeps) = self.block_sweeps {
            if cfg.optimize_positions {
                cfg.max_outer_position = sweeps;
            }
            if cfg.optimize_patterns {
                cfg.max_pattern_sweeps = sweeps;
            }
        }
        cfg
    }

    /// Equally spaced arrays with every antenna on the default mode.
    pub fn initial_state(
        &self,
        template: &GeometryParams,
        arrays: usize,
        codebook: &PatternCodebook,
        samples: usize,
    ) -> Result<SolverState> {
        let (b, n) = self.resolve(arrays, template.antennas_per_array)?;
        let geom = station(template, b, n, equally_spaced_azimuths(b))?;
        SolverState::with_default_modes(geom, codebook, samples)
    }

    /// Build the initial state and run the solver with this scheme's blocks.
    pub fn run(
        &self,
        problem: &Problem<'_>,
        template: &GeometryParams,
        arrays: usize,
        base: &OptimizerConfig,
    ) -> Result<SolverState> {
        let state = self.initial_state(template, arrays, problem.codebook, problem.samples.len())?;
        solve(problem, state, &self.optimizer_config(base))
    }
}

/// A station from `template` resized to `arrays x antennas`. An explicit UPA
/// layout is kept only if it still holds `antennas` elements.
pub fn station(
    template: &GeometryParams,
    arrays: usize,
    antennas: usize,
    azimuths: Vec<f64>,
) -> Result<StationGeometry> {
    if azimuths.len() != arrays {
        return Err(Error::invalid("azimuths", "one azimuth per array required"));
    }
    let mut params = template.clone();
    params.antennas_per_array = antennas;
    if params.upa.is_some_and(|(r, c)| r * c != antennas) {
        params.upa = None;
    }
    StationGeometry::new(&params, azimuths)
}

/// Three equally spaced arrays of `floor(total / 3)` antennas each, all on
/// the default mode. Nothing about this scheme is optimized.
pub fn make_fpa(
    total_antennas: usize,
    template: &GeometryParams,
    codebook: &PatternCodebook,
    samples: usize,
) -> Result<(StationGeometry, SelectionState)> {
    if total_antennas < FPA_ARRAYS {
        return Err(Error::invalid("total_antennas", "need at least 3 antennas"));
    }
    let n = total_antennas / FPA_ARRAYS;
    let geom = station(template, FPA_ARRAYS, n, equally_spaced_azimuths(FPA_ARRAYS))?;
    let selection = SelectionState::uniform(samples, FPA_ARRAYS, n, codebook.mode_count(), codebook.default_mode())?;
    Ok((geom, selection))
}

/// Positions optimized, every antenna fixed on the default mode.
pub fn make_pa_only() -> SchemeSpec {
    SchemeSpec {
        kind: SchemeKind::PaOnly,
        array_count: None,
        antennas_per_array: None,
        positions_frozen: false,
        patterns_frozen: true,
        block_sweeps: Some(SINGLE_BLOCK_SWEEPS),
    }
}

/// `arrays` equally spaced arrays of `antennas` each, positions fixed,
/// patterns optimized.
pub fn make_ps_only(arrays: usize, antennas: usize) -> SchemeSpec {
    SchemeSpec {
        kind: SchemeKind::PsOnly,
        array_count: Some(arrays),
        antennas_per_array: Some(antennas),
        positions_frozen: true,
        patterns_frozen: false,
        block_sweeps: Some(SINGLE_BLOCK_SWEEPS),
    }
}
