//! Experiment configuration (TOML). Every field has a default, so an empty
//! file is a complete configuration. Angles are given in degrees, everything
//! else in SI units. See `config/SCHEMA.md` for the key reference.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use hmet_core::baselines::{SchemeKind, SchemeSpec, FPA_ARRAYS};
use hmet_core::channel::PhysicalConfig;
use hmet_core::channel::SPEED_OF_LIGHT;
use hmet_core::geometry::{GeometryParams, Separation};
use hmet_core::optimizer::OptimizerConfig;
use hmet_core::radiation::{enumerate_modes, CodebookParams};
use hmet_core::scenarios::{Region, Shell, StaticScenario, TimeVaryingParams};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    /// Schemes to run, e.g. `["hmet", "ps-only-b3"]`.
    pub schemes: Vec<String>,
    pub physical: PhysicalSection,
    pub geometry: GeometrySection,
    pub codebook: CodebookSection,
    pub scenario: ScenarioSection,
    pub time_varying: TimeVaryingSection,
    pub optimizer: OptimizerSection,
    pub sweep: SweepSection,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 1,
            schemes: SchemeKind::ALL.iter().map(|k| k.as_str().to_owned()).collect(),
            physical: PhysicalSection::default(),
            geometry: GeometrySection::default(),
            codebook: CodebookSection::default(),
            scenario: ScenarioSection::default(),
            time_varying: TimeVaryingSection::default(),
            optimizer: OptimizerSection::default(),
            sweep: SweepSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicalSection {
    pub carrier_hz: f64,
    /// Per-user transmit power.
    pub tx_power_w: f64,
    pub noise_power_w: f64,
    /// Path loss at 1 m; omitted means free space, `(lambda / 4 pi)^2`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pathloss_ref: Option<f64>,
    pub pathloss_exponent: f64,
}

impl Default for PhysicalSection {
    fn default() -> Self {
        Self {
            carrier_hz: 2.4e9,
            tx_power_w: 0.03,
            // -50 dBm
            noise_power_w: 1e-8,
            pathloss_ref: None,
            pathloss_exponent: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometrySection {
    pub rail_radius_m: f64,
    pub arrays: usize,
    pub antennas_per_array: usize,
    /// Minimum angular separation. Mutually exclusive with `array_width_m`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_separation_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub array_width_m: Option<f64>,
    pub element_spacing_wavelengths: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upa_rows: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upa_cols: Option<usize>,
}

pub const DEFAULT_MIN_SEPARATION_DEG: f64 = 7.5;

impl Default for GeometrySection {
    fn default() -> Self {
        Self {
            rail_radius_m: 1.0,
            arrays: 16,
            antennas_per_array: 4,
            min_separation_deg: None,
            array_width_m: None,
            element_spacing_wavelengths: 0.5,
            upa_rows: None,
            upa_cols: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodebookSection {
    pub theta_max_deg: f64,
    pub dtheta_deg: f64,
    pub dphi_deg: f64,
    pub g_max_dbi: f64,
    pub theta_3db_deg: f64,
    pub phi_3db_deg: f64,
    pub g_s_db: f64,
    pub g_v_db: f64,
    pub quadrature_step_deg: f64,
}

impl Default for CodebookSection {
    fn default() -> Self {
        Self {
            theta_max_deg: 60.0,
            dtheta_deg: 15.0,
            dphi_deg: 15.0,
            g_max_dbi: 8.0,
            theta_3db_deg: 30.0,
            phi_3db_deg: 30.0,
            g_s_db: 30.0,
            g_v_db: 30.0,
            quadrature_step_deg: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case", deny_unknown_fields)]
pub enum HotspotSpec {
    Cuboid {
        center: [f64; 3],
        size: [f64; 3],
    },
    /// Horizontal disk in the plane `z = center[2]`.
    Disk {
        center: [f64; 3],
        radius: f64,
    },
    Segment {
        a: [f64; 3],
        b: [f64; 3],
    },
    Sphere {
        center: [f64; 3],
        radius: f64,
    },
}

impl HotspotSpec {
    pub fn region(&self) -> Region {
        match *self {
            HotspotSpec::Cuboid { center, size } => Region::Cuboid { center, size },
            HotspotSpec::Disk { center, radius } => Region::HorizontalDisk { center, radius },
            HotspotSpec::Segment { a, b } => Region::Segment { a, b },
            HotspotSpec::Sphere { center, radius } => Region::Sphere { center, radius },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    /// Monte Carlo channel samples per optimization.
    pub samples: usize,
    pub mean_users: f64,
    /// Share of the mean user count outside the hotspots.
    pub sparsity: f64,
    pub r_min_m: f64,
    pub r_max_m: f64,
    pub hotspots: Vec<HotspotSpec>,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        let reference = StaticScenario::reference(0.4);
        let hotspots = reference
            .hotspots
            .iter()
            .map(|r| match *r {
                Region::Cuboid { center, size } => HotspotSpec::Cuboid { center, size },
                Region::HorizontalDisk { center, radius } => HotspotSpec::Disk { center, radius },
                Region::Segment { a, b } => HotspotSpec::Segment { a, b },
                Region::Sphere { center, radius } => HotspotSpec::Sphere { center, radius },
                Region::Shell(_) => unreachable!("reference hotspots are bounded"),
            })
            .collect();
        Self {
            samples: 100,
            mean_users: reference.mean_total,
            sparsity: reference.sparsity,
            r_min_m: reference.coverage.r_min,
            r_max_m: reference.coverage.r_max,
            hotspots,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeVaryingSection {
    pub sparsity: f64,
    /// Measured snapshots; one extra warm-up period precedes them.
    pub snapshots: usize,
    pub snapshots_per_period: usize,
    pub hotspot_radius_m: f64,
    pub centers: Vec<[f64; 3]>,
    pub center_persistence: f64,
    pub center_noise_std_m: f64,
    /// Survival probability per region, regular users first.
    pub survival_probs: Vec<f64>,
    pub offset_persistence: f64,
    pub offset_noise_std_m: f64,
}

impl Default for TimeVaryingSection {
    fn default() -> Self {
        let p = TimeVaryingParams::reference(0.15);
        Self {
            sparsity: p.sparsity,
            snapshots: 200,
            snapshots_per_period: p.snapshots_per_period,
            hotspot_radius_m: p.hotspot_radius_m,
            centers: p.mean_centers,
            center_persistence: p.center_persistence,
            center_noise_std_m: p.center_noise_std,
            survival_probs: p.survival_probs,
            offset_persistence: p.offset_persistence,
            offset_noise_std_m: p.offset_noise_std,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSection {
    pub eps_threshold: f64,
    pub max_inner_position: usize,
    pub max_outer_position: usize,
    pub max_pattern_sweeps: usize,
    pub max_cycles: usize,
    pub eta_init: f64,
    pub backtrack_factor: f64,
    pub armijo_coeff: f64,
    pub fd_step_rad: f64,
    pub min_step: f64,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        let d = OptimizerConfig::default();
        Self {
            eps_threshold: d.eps_threshold,
            max_inner_position: d.max_inner_position,
            max_outer_position: d.max_outer_position,
            max_pattern_sweeps: d.max_pattern_sweeps,
            max_cycles: d.max_cycles,
            eta_init: d.eta_init,
            backtrack_factor: d.backtrack_factor,
            armijo_coeff: d.armijo_coeff,
            fd_step_rad: d.fd_step,
            min_step: d.min_step,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub sparsities: Vec<f64>,
    /// Draw every sweep point from the same child stream instead of one per
    /// point. Counts then nest across sparsity values, which removes most of
    /// the sampling noise from the trend.
    pub common_samples: bool,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            sparsities: vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7],
            common_samples: false,
        }
    }
}

/// A scheme name as used in configs and on the command line: the kind,
/// optionally followed by `-b<arrays>` to change the array count while
/// keeping the total antenna count (`ps-only-b3`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SchemeChoice {
    pub kind: SchemeKind,
    pub arrays: Option<usize>,
}

impl FromStr for SchemeChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (name, arrays) = match s.rsplit_once("-b") {
            Some((head, tail)) if !tail.is_empty() && tail.bytes().all(|b| b.is_ascii_digit()) => {
                let b: usize = tail.parse().map_err(|_| format!("bad array count in `{s}`"))?;
                (head, Some(b))
            }
            _ => (s, None),
        };
        let kind: SchemeKind = name.parse().map_err(|_| format!("unknown scheme `{s}`"))?;
        if arrays == Some(0) {
            return Err(format!("array count in `{s}` must be at least 1"));
        }
        if kind == SchemeKind::Fpa && arrays.is_some_and(|b| b != FPA_ARRAYS) {
            return Err(format!("`{s}`: fpa always uses {FPA_ARRAYS} arrays"));
        }
        Ok(Self { kind, arrays })
    }
}

impl fmt::Display for SchemeChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.arrays {
            Some(b) => write!(f, "{}-b{b}", self.kind),
            None => write!(f, "{}", self.kind),
        }
    }
}

impl SchemeChoice {
    /// Solver spec for a station configured with `arrays x antennas`.
    pub fn spec(&self, arrays: usize, antennas: usize) -> SchemeSpec {
        let mut spec = SchemeSpec::of_kind(self.kind);
        if let (Some(b), false) = (self.arrays, self.kind == SchemeKind::Fpa) {
            spec.array_count = Some(b);
            spec.antennas_per_array = Some((arrays * antennas / b).max(1));
        }
        spec
    }
}

fn check(ok: bool, key: &str, reason: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(HarnessError::invalid(key, reason))
    }
}

fn positive(key: &str, v: f64) -> Result<()> {
    check(v.is_finite() && v > 0.0, key, "must be positive and finite")
}

fn non_negative(key: &str, v: f64) -> Result<()> {
    check(v.is_finite() && v >= 0.0, key, "must be non-negative and finite")
}

fn unit_interval(key: &str, v: f64) -> Result<()> {
    check((0.0..=1.0).contains(&v), key, "must lie in [0, 1]")
}

fn open_unit(key: &str, v: f64) -> Result<()> {
    check(v > 0.0 && v < 1.0, key, "must lie in (0, 1)")
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml_str(&text, &path.display().to_string())
    }

    /// Parse, apply defaults and validate. `origin` names the source in
    /// parse errors.
    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| HarnessError::Parse {
            path: origin.to_owned(),
            message: e.message().to_owned(),
        })?;
        let cfg = Config::deserialize(table).map_err(|e| HarnessError::Schema(e.message().to_owned()))?;
        cfg.resolve()
    }

    /// Fill derived defaults and validate.
    pub fn resolve(mut self) -> Result<Self> {
        let g = &mut self.geometry;
        match (g.min_separation_deg, g.array_width_m) {
            (None, None) => g.min_separation_deg = Some(DEFAULT_MIN_SEPARATION_DEG),
            (Some(_), Some(_)) => {
                return Err(HarnessError::invalid(
                    "geometry.array_width_m",
                    "conflicts with geometry.min_separation_deg; give only one",
                ))
            }
            _ => {}
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        check(!self.schemes.is_empty(), "schemes", "at least one scheme required")?;
        for s in &self.schemes {
            s.parse::<SchemeChoice>()
                .map_err(|e| HarnessError::invalid("schemes", e))?;
        }

        let p = &self.physical;
        positive("physical.carrier_hz", p.carrier_hz)?;
        positive("physical.tx_power_w", p.tx_power_w)?;
        positive("physical.noise_power_w", p.noise_power_w)?;
        if let Some(r) = p.pathloss_ref {
            positive("physical.pathloss_ref", r)?;
        }
        positive("physical.pathloss_exponent", p.pathloss_exponent)?;

        let g = &self.geometry;
        positive("geometry.rail_radius_m", g.rail_radius_m)?;
        check(g.arrays >= 1, "geometry.arrays", "must be at least 1")?;
        check(
            g.antennas_per_array >= 1,
            "geometry.antennas_per_array",
            "must be at least 1",
        )?;
        positive("geometry.element_spacing_wavelengths", g.element_spacing_wavelengths)?;
        if let Some(beta) = g.min_separation_deg {
            check(
                beta > 0.0 && beta < 180.0,
                "geometry.min_separation_deg",
                "must lie in (0, 180)",
            )?;
        }
        if let Some(w) = g.array_width_m {
            positive("geometry.array_width_m", w)?;
        }
        let beta = self.min_separation_rad();
        check(
            g.arrays == 1 || g.arrays as f64 * beta <= std::f64::consts::TAU * (1.0 - 1e-12),
            "geometry.arrays",
            "that many arrays do not fit on the rail at the minimum separation",
        )?;
        match (g.upa_rows, g.upa_cols) {
            (None, None) => {}
            (Some(r), Some(c)) => check(
                r * c == g.antennas_per_array,
                "geometry.upa_rows",
                "upa_rows * upa_cols must equal antennas_per_array",
            )?,
            _ => {
                return Err(HarnessError::invalid(
                    "geometry.upa_rows",
                    "upa_rows and upa_cols must be given together",
                ))
            }
        }

        let c = &self.codebook;
        check(
            (30.0 - 1e-9..=60.0 + 1e-9).contains(&c.theta_max_deg),
            "codebook.theta_max_deg",
            "must lie in [30, 60]",
        )?;
        positive("codebook.dtheta_deg", c.dtheta_deg)?;
        positive("codebook.dphi_deg", c.dphi_deg)?;
        check(c.g_max_dbi.is_finite(), "codebook.g_max_dbi", "must be finite")?;
        positive("codebook.theta_3db_deg", c.theta_3db_deg)?;
        positive("codebook.phi_3db_deg", c.phi_3db_deg)?;
        positive("codebook.g_s_db", c.g_s_db)?;
        positive("codebook.g_v_db", c.g_v_db)?;
        check(
            c.quadrature_step_deg > 0.0 && c.quadrature_step_deg <= 10.0,
            "codebook.quadrature_step_deg",
            "must lie in (0, 10]",
        )?;
        check(
            enumerate_modes(
                c.theta_max_deg.to_radians(),
                c.dtheta_deg.to_radians(),
                c.dphi_deg.to_radians(),
            )
            .is_ok(),
            "codebook.dtheta_deg",
            "steering grid must contain boresight: theta_max / dtheta and 90 / dphi must be integers",
        )?;

        let s = &self.scenario;
        check(s.samples >= 1, "scenario.samples", "must be at least 1")?;
        non_negative("scenario.mean_users", s.mean_users)?;
        unit_interval("scenario.sparsity", s.sparsity)?;
        non_negative("scenario.r_min_m", s.r_min_m)?;
        check(
            s.r_max_m > s.r_min_m && s.r_max_m.is_finite(),
            "scenario.r_max_m",
            "must exceed r_min_m",
        )?;
        for h in &s.hotspots {
            check(
                h.region().validate().is_ok(),
                "scenario.hotspots",
                "hotspot dimensions must be positive",
            )?;
        }
        check(
            !s.hotspots.is_empty() || s.sparsity == 1.0,
            "scenario.sparsity",
            "must be 1 when no hotspots are defined",
        )?;

        let t = &self.time_varying;
        unit_interval("time_varying.sparsity", t.sparsity)?;
        check(t.snapshots >= 1, "time_varying.snapshots", "must be at least 1")?;
        check(
            t.snapshots_per_period >= 1,
            "time_varying.snapshots_per_period",
            "must be at least 1",
        )?;
        positive("time_varying.hotspot_radius_m", t.hotspot_radius_m)?;
        open_unit("time_varying.center_persistence", t.center_persistence)?;
        non_negative("time_varying.center_noise_std_m", t.center_noise_std_m)?;
        open_unit("time_varying.offset_persistence", t.offset_persistence)?;
        non_negative("time_varying.offset_noise_std_m", t.offset_noise_std_m)?;
        check(
            t.survival_probs.len() == t.centers.len() + 1,
            "time_varying.survival_probs",
            "need one entry per hotspot plus one for regular users",
        )?;
        for &r in &t.survival_probs {
            check(
                r > 0.0 && r <= 1.0,
                "time_varying.survival_probs",
                "entries must lie in (0, 1]",
            )?;
        }
        check(
            !t.centers.is_empty() || t.sparsity == 1.0,
            "time_varying.sparsity",
            "must be 1 when no hotspots are defined",
        )?;

        let o = &self.optimizer;
        positive("optimizer.eps_threshold", o.eps_threshold)?;
        check(
            o.max_inner_position >= 1,
            "optimizer.max_inner_position",
            "must be at least 1",
        )?;
        check(
            o.max_outer_position >= 1,
            "optimizer.max_outer_position",
            "must be at least 1",
        )?;
        check(
            o.max_pattern_sweeps >= 1,
            "optimizer.max_pattern_sweeps",
            "must be at least 1",
        )?;
        check(o.max_cycles >= 1, "optimizer.max_cycles", "must be at least 1")?;
        positive("optimizer.eta_init", o.eta_init)?;
        open_unit("optimizer.backtrack_factor", o.backtrack_factor)?;
        open_unit("optimizer.armijo_coeff", o.armijo_coeff)?;
        positive("optimizer.fd_step_rad", o.fd_step_rad)?;
        positive("optimizer.min_step", o.min_step)?;

        check(
            !self.sweep.sparsities.is_empty(),
            "sweep.sparsities",
            "at least one value required",
        )?;
        for &eta in &self.sweep.sparsities {
            unit_interval("sweep.sparsities", eta)?;
        }
        Ok(())
    }

    /// The resolved configuration as TOML. Reloading it gives `self` back.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of [`Config::to_toml`], hex encoded.
    pub fn sha256(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn scheme_choices(&self) -> Vec<SchemeChoice> {
        self.schemes.iter().map(|s| s.parse().expect("validated")).collect()
    }

    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.physical.carrier_hz
    }

    pub fn min_separation_rad(&self) -> f64 {
        match (self.geometry.min_separation_deg, self.geometry.array_width_m) {
            (_, Some(w)) => 2.0 * (w / (2.0 * self.geometry.rail_radius_m)).atan(),
            (Some(b), None) => b.to_radians(),
            (None, None) => DEFAULT_MIN_SEPARATION_DEG.to_radians(),
        }
    }

    pub fn physical_config(&self) -> Result<PhysicalConfig> {
        let p = &self.physical;
        let phys = match p.pathloss_ref {
            None if p.pathloss_exponent == 2.0 => {
                PhysicalConfig::free_space(p.carrier_hz, p.tx_power_w, p.noise_power_w)?
            }
            r => {
                let lambda = self.wavelength_m();
                let free = (lambda / (4.0 * std::f64::consts::PI)).powi(2);
                PhysicalConfig::new(
                    lambda,
                    p.tx_power_w,
                    p.noise_power_w,
                    r.unwrap_or(free),
                    p.pathloss_exponent,
                )?
            }
        };
        Ok(phys)
    }

    pub fn geometry_template(&self) -> GeometryParams {
        let g = &self.geometry;
        GeometryParams {
            rail_radius_m: g.rail_radius_m,
            antennas_per_array: g.antennas_per_array,
            separation: match g.array_width_m {
                Some(w) => Separation::ArrayWidth(w),
                None => Separation::Angle(self.min_separation_rad()),
            },
            element_spacing_m: g.element_spacing_wavelengths * self.wavelength_m(),
            upa: g.upa_rows.zip(g.upa_cols),
        }
    }

    pub fn codebook_params(&self) -> CodebookParams {
        let c = &self.codebook;
        CodebookParams {
            theta_max_rad: c.theta_max_deg.to_radians(),
            dtheta_rad: c.dtheta_deg.to_radians(),
            dphi_rad: c.dphi_deg.to_radians(),
            g_max_dbi: c.g_max_dbi,
            theta_3db_rad: c.theta_3db_deg.to_radians(),
            phi_3db_rad: c.phi_3db_deg.to_radians(),
            g_s_db: c.g_s_db,
            g_v_db: c.g_v_db,
            quadrature_step_rad: c.quadrature_step_deg.to_radians(),
        }
    }

    pub fn optimizer_config(&self) -> OptimizerConfig {
        let o = &self.optimizer;
        OptimizerConfig {
            eps_threshold: o.eps_threshold,
            max_inner_position: o.max_inner_position,
            max_outer_position: o.max_outer_position,
            max_pattern_sweeps: o.max_pattern_sweeps,
            max_cycles: o.max_cycles,
            eta_init: o.eta_init,
            backtrack_factor: o.backtrack_factor,
            armijo_coeff: o.armijo_coeff,
            fd_step: o.fd_step_rad,
            min_step: o.min_step,
            ..OptimizerConfig::default()
        }
    }

    pub fn coverage(&self) -> Shell {
        Shell {
            r_min: self.scenario.r_min_m,
            r_max: self.scenario.r_max_m,
        }
    }

    pub fn static_scenario(&self, sparsity: f64) -> StaticScenario {
        StaticScenario {
            coverage: self.coverage(),
            hotspots: self.scenario.hotspots.iter().map(HotspotSpec::region).collect(),
            mean_total: self.scenario.mean_users,
            sparsity,
        }
    }

    pub fn time_varying_params(&self) -> TimeVaryingParams {
        let t = &self.time_varying;
        TimeVaryingParams {
            coverage: self.coverage(),
            mean_centers: t.centers.clone(),
            hotspot_radius_m: t.hotspot_radius_m,
            mean_total: self.scenario.mean_users,
            sparsity: t.sparsity,
            center_persistence: t.center_persistence,
            center_noise_std: t.center_noise_std_m,
            survival_probs: t.survival_probs.clone(),
            offset_persistence: t.offset_persistence,
            offset_noise_std: t.offset_noise_std_m,
            snapshots_per_period: t.snapshots_per_period,
        }
    }
}
