//! Discrete radiation-pattern codebook.
//!
//! Every mode steers a parabolic main lobe toward `(theta_p, phi_p)` in the
//! array's local frame. Azimuth attenuation is capped at the front-back ratio
//! `G_s`, elevation attenuation at the side-lobe limit `G_v`, and their sum is
//! capped again at `G_s`. A per-mode offset `delta_g_db` makes every mode
//! radiate the same total power as the boresight (default) mode.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use crate::geometry::LocalPointing;
use crate::{db_to_linear, linear_to_db, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CodebookParams {
    pub theta_max_rad: f64,
    pub dtheta_rad: f64,
    pub dphi_rad: f64,
    pub g_max_dbi: f64,
    pub theta_3db_rad: f64,
    pub phi_3db_rad: f64,
    pub g_s_db: f64,
    pub g_v_db: f64,
    /// Grid step of the radiated-power quadrature used for calibration.
    pub quadrature_step_rad: f64,
}

impl Default for CodebookParams {
    fn default() -> Self {
        Self {
            theta_max_rad: PI / 3.0,
            dtheta_rad: PI / 12.0,
            dphi_rad: PI / 12.0,
            g_max_dbi: 8.0,
            theta_3db_rad: 30f64.to_radians(),
            phi_3db_rad: 30f64.to_radians(),
            g_s_db: 30.0,
            g_v_db: 30.0,
            quadrature_step_rad: 0.25f64.to_radians(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub steer_elevation_rad: f64,
    pub steer_azimuth_rad: f64,
    pub delta_g_db: f64,
}

/// Number of grid points if `step` tiles `span` exactly.
fn tile_count(span: f64, step: f64, name: &'static str) -> Result<usize> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::invalid(name, "step must be positive"));
    }
    let ratio = span / step;
    let rounded = libm::round(ratio);
    if libm::fabs(ratio - rounded) > 1e-9 * ratio.max(1.0) {
        return Err(Error::invalid(name, "step does not evenly tile the steering range"));
    }
    Ok(rounded as usize + 1)
}

/// Steering pairs `(theta_p, phi_p)` in mode order: mode `p` (zero-based) has
/// elevation index `p / P_h` and azimuth index `p % P_h`.
pub fn enumerate_modes(theta_max: f64, dtheta: f64, dphi: f64) -> Result<Vec<(f64, f64)>> {
    let tol = 1e-12;
    if !(theta_max >= PI / 6.0 - tol && theta_max <= PI / 3.0 + tol) {
        return Err(Error::invalid("theta_max", "must lie in [pi/6, pi/3]"));
    }
    let p_v = tile_count(2.0 * theta_max, dtheta, "dtheta")?;
    let p_h = tile_count(PI, dphi, "dphi")?;
    // Symmetric form of -theta_max + k*dtheta keeps 0 and mirror pairs exact.
    let v_mid = (p_v as f64 - 1.0) / 2.0;
    let h_mid = (p_h as f64 - 1.0) / 2.0;
    let mut out = Vec::with_capacity(p_v * p_h);
    for p in 0..p_v * p_h {
        let theta = (((p / p_h) as f64) - v_mid) * dtheta;
        let phi = (((p % p_h) as f64) - h_mid) * dphi;
        out.push((theta, phi));
    }
    Ok(out)
}

/// `-min(12 (offset / beamwidth)^2, cap)` in dB.
#[inline]
pub fn parabolic_attenuation(offset: f64, beamwidth: f64, cap: f64) -> f64 {
    let r = offset / beamwidth;
    -(12.0 * r * r).min(cap)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternCodebook {
    params: CodebookParams,
    p_v: usize,
    p_h: usize,
    modes: Vec<Mode>,
    default_mode: usize,
    p_def: f64,
}

impl PatternCodebook {
    /// Enumerate the steering grid and calibrate the per-mode power offsets at
    /// `params.quadrature_step_rad`.
    pub fn calibrate(params: CodebookParams) -> Result<Self> {
        for (name, v) in [
            ("g_max_dbi", params.g_max_dbi),
            ("theta_3db", params.theta_3db_rad),
            ("phi_3db", params.phi_3db_rad),
            ("g_s_db", params.g_s_db),
            ("g_v_db", params.g_v_db),
            ("quadrature_step", params.quadrature_step_rad),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(name, "must be finite"));
            }
        }
        for (name, v) in [
            ("theta_3db", params.theta_3db_rad),
            ("phi_3db", params.phi_3db_rad),
            ("g_s_db", params.g_s_db),
            ("g_v_db", params.g_v_db),
            ("quadrature_step", params.quadrature_step_rad),
        ] {
            if v <= 0.0 {
                return Err(Error::invalid(name, "must be positive"));
            }
        }
        let steer = enumerate_modes(params.theta_max_rad, params.dtheta_rad, params.dphi_rad)?;
        let p_h = tile_count(PI, params.dphi_rad, "dphi")?;
        let p_v = steer.len() / p_h;
        let default_mode = steer
            .iter()
            .position(|&(t, p)| t == 0.0 && p == 0.0)
            .ok_or(Error::MissingDefaultMode)?;

        let template = |&(t, p): &(f64, f64)| radiated_power_of(&params, t, p, 0.0, params.quadrature_step_rad);
        #[cfg(feature = "parallel")]
        let temp: Vec<f64> = {
            use rayon::prelude::*;
            steer.par_iter().map(template).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let temp: Vec<f64> = steer.iter().map(template).collect();

        let p_def = temp[default_mode];
        let modes = steer
            .iter()
            .zip(&temp)
            .enumerate()
            .map(|(i, (&(t, p), &pt))| Mode {
                steer_elevation_rad: t,
                steer_azimuth_rad: p,
                delta_g_db: if i == default_mode {
                    0.0
                } else {
                    linear_to_db(p_def / pt)
                },
            })
            .collect();
        Ok(Self {
            params,
            p_v,
            p_h,
            modes,
            default_mode,
            p_def,
        })
    }

    pub fn params(&self) -> &CodebookParams {
        &self.params
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    /// `(P_v, P_h)`.
    pub fn grid_shape(&self) -> (usize, usize) {
        (self.p_v, self.p_h)
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn mode(&self, p: usize) -> Result<&Mode> {
        self.modes.get(p).ok_or(Error::ModeIndex {
            index: p,
            count: self.modes.len(),
        })
    }

    /// Zero-based index of the boresight mode.
    pub fn default_mode(&self) -> usize {
        self.default_mode
    }

    /// Radiated power of the default mode, linear units.
    pub fn p_def(&self) -> f64 {
        self.p_def
    }

    pub fn attenuation_azimuth(&self, p: usize, phi: f64) -> Result<f64> {
        let m = self.mode(p)?;
        Ok(parabolic_attenuation(
            phi - m.steer_azimuth_rad,
            self.params.phi_3db_rad,
            self.params.g_s_db,
        ))
    }

    pub fn attenuation_elevation(&self, p: usize, theta: f64) -> Result<f64> {
        let m = self.mode(p)?;
        Ok(parabolic_attenuation(
            theta - m.steer_elevation_rad,
            self.params.theta_3db_rad,
            self.params.g_v_db,
        ))
    }

    /// Directional gain of mode `p` toward local `(theta, phi)`, in dBi.
    pub fn pattern_gain_db(&self, p: usize, theta: f64, phi: f64) -> Result<f64> {
        let m = self.mode(p)?;
        Ok(gain_db(&self.params, m, theta, phi))
    }

    #[inline]
    pub(crate) fn gain_db_unchecked(&self, p: usize, theta: f64, phi: f64) -> f64 {
        gain_db(&self.params, &self.modes[p], theta, phi)
    }

    /// Linear gain `10^(A_p/10)` toward a local direction.
    pub fn element_gain_linear(&self, p: usize, local: &LocalPointing) -> Result<f64> {
        Ok(db_to_linear(self.pattern_gain_db(
            p,
            local.elevation_rad,
            local.azimuth_rad,
        )?))
    }

    /// Field amplitude `sqrt(10^(A_p/10))` toward a local direction.
    #[inline]
    pub(crate) fn amplitude_unchecked(&self, p: usize, local: &LocalPointing) -> f64 {
        libm::exp10(self.gain_db_unchecked(p, local.elevation_rad, local.azimuth_rad) / 20.0)
    }

    /// Total radiated power of mode `p` (including its offset), by 2-D
    /// composite trapezoid with grid step close to `quadrature_step`.
    pub fn radiated_power(&self, p: usize, quadrature_step: f64) -> Result<f64> {
        let m = self.mode(p)?;
        if !(quadrature_step.is_finite() && quadrature_step > 0.0) {
            return Err(Error::invalid("quadrature_step", "must be positive"));
        }
        Ok(radiated_power_of(
            &self.params,
            m.steer_elevation_rad,
            m.steer_azimuth_rad,
            m.delta_g_db,
            quadrature_step,
        ))
    }
}

#[inline]
fn gain_db(params: &CodebookParams, m: &Mode, theta: f64, phi: f64) -> f64 {
    let ah = parabolic_attenuation(phi - m.steer_azimuth_rad, params.phi_3db_rad, params.g_s_db);
    let av = parabolic_attenuation(theta - m.steer_elevation_rad, params.theta_3db_rad, params.g_v_db);
    params.g_max_dbi + m.delta_g_db - (-(ah + av)).min(params.g_s_db)
}

/// Trapezoid nodes and weights on `[lo, hi]` with step at most `step`.
fn trapezoid_nodes(lo: f64, hi: f64, step: f64) -> (Vec<f64>, Vec<f64>) {
    let intervals = libm::ceil((hi - lo) / step - 1e-9).max(1.0) as usize;
    let h = (hi - lo) / intervals as f64;
    let nodes = (0..=intervals).map(|i| lo + i as f64 * h).collect();
    let weights = (0..=intervals)
        .map(|i| if i == 0 || i == intervals { h / 2.0 } else { h })
        .collect();
    (nodes, weights)
}

/// Integral of `10^(A/10) cos(theta)` over the sphere for a mode steered at
/// `(steer_theta, steer_phi)` with offset `delta_g_db`.
///
/// The capped sum of attenuations satisfies
/// `10^(max(ah + av, -G_s)/10) = max(10^(ah/10) 10^(av/10), 10^(-G_s/10))`,
/// so the grid only needs one exponential per row and per column.
fn radiated_power_of(params: &CodebookParams, steer_theta: f64, steer_phi: f64, delta_g_db: f64, step: f64) -> f64 {
    let (phis, w_phi) = trapezoid_nodes(-PI, PI, step);
    let (thetas, w_theta) = trapezoid_nodes(-FRAC_PI_2, FRAC_PI_2, step);
    let eh: Vec<f64> = phis
        .iter()
        .map(|&phi| {
            db_to_linear(parabolic_attenuation(
                phi - steer_phi,
                params.phi_3db_rad,
                params.g_s_db,
            ))
        })
        .collect();
    let ev: Vec<f64> = thetas
        .iter()
        .map(|&theta| {
            db_to_linear(parabolic_attenuation(
                theta - steer_theta,
                params.theta_3db_rad,
                params.g_v_db,
            ))
        })
        .collect();
    let floor = db_to_linear(-params.g_s_db);
    let mut total = 0.0;
    for ((&theta, &wt), &v) in thetas.iter().zip(&w_theta).zip(&ev) {
        let row: f64 = eh.iter().zip(&w_phi).map(|(&h, &wp)| wp * (h * v).max(floor)).sum();
        total += wt * libm::cos(theta) * row;
    }
    db_to_linear(params.g_max_dbi + delta_g_db) * total
}
