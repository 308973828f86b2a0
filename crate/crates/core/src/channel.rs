//! Line-of-sight uplink channels and the log-det sum-rate objective.
//!
//! The channel from user `k` to array `b` is
//! `h = sqrt(v_k) * diag(a_k) * M_{b,k} * z_b`, where `a_k` is the steering
//! vector, `M_{b,k}` holds the per-mode field amplitudes and `z_b` picks one
//! mode per antenna. Sum-rates are evaluated through the `K x K` Gram matrix.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::geometry::{LocalPointing, StationGeometry};
use crate::linalg::log2_det_hpd;
use crate::radiation::PatternCodebook;
use crate::{dot, norm, Error, Result, Vec3};

/// Speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConfig {
    pub wavelength_m: f64,
    /// Transmit power of every user, W.
    pub tx_power_w: f64,
    pub noise_power_w: f64,
    /// Linear channel power gain at 1 m.
    pub pathloss_ref: f64,
    pub pathloss_exp: f64,
}

impl PhysicalConfig {
    pub fn new(
        wavelength_m: f64,
        tx_power_w: f64,
        noise_power_w: f64,
        pathloss_ref: f64,
        pathloss_exp: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("wavelength_m", wavelength_m),
            ("tx_power_w", tx_power_w),
            ("noise_power_w", noise_power_w),
            ("pathloss_ref", pathloss_ref),
            ("pathloss_exp", pathloss_exp),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, "must be positive and finite"));
            }
        }
        Ok(Self {
            wavelength_m,
            tx_power_w,
            noise_power_w,
            pathloss_ref,
            pathloss_exp,
        })
    }

    /// Free-space line of sight: `eps_0 = (lambda / 4 pi)^2`, exponent 2.
    pub fn free_space(carrier_hz: f64, tx_power_w: f64, noise_power_w: f64) -> Result<Self> {
        let lambda = SPEED_OF_LIGHT / carrier_hz;
        let eps0 = (lambda / (4.0 * PI)) * (lambda / (4.0 * PI));
        Self::new(lambda, tx_power_w, noise_power_w, eps0, 2.0)
    }

    /// Large-scale power gain `eps_0 * d^-exp`.
    pub fn channel_power_gain(&self, distance_m: f64) -> f64 {
        self.pathloss_ref * libm::pow(distance_m, -self.pathloss_exp)
    }

    pub fn snr_scale(&self) -> f64 {
        self.tx_power_w / self.noise_power_w
    }
}

/// One user as seen from the station center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserGeom {
    pub pointing: Vec3,
    pub distance_m: f64,
    /// Index of the region that generated the user (0 = regular users).
    pub region: u8,
}

impl UserGeom {
    pub fn from_position(position: Vec3, region: u8) -> Result<Self> {
        let d = norm(&position);
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::invalid(
                "user position",
                "must be finite and away from the origin",
            ));
        }
        Ok(Self {
            pointing: [position[0] / d, position[1] / d, position[2] / d],
            distance_m: d,
            region,
        })
    }

    /// `(omega, psi)` elevation/azimuth construction of the pointing vector.
    pub fn from_angles(elevation: f64, azimuth: f64, distance_m: f64, region: u8) -> Self {
        let (se, ce) = (libm::sin(elevation), libm::cos(elevation));
        Self {
            pointing: [ce * libm::cos(azimuth), ce * libm::sin(azimuth), se],
            distance_m,
            region,
        }
    }

    pub fn position(&self) -> Vec3 {
        let d = self.distance_m;
        [self.pointing[0] * d, self.pointing[1] * d, self.pointing[2] * d]
    }
}

/// One Monte Carlo realization of user locations.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChannelSample {
    pub users: Vec<UserGeom>,
    pub sample_index: usize,
}

/// Mode choice of every antenna in every sample: entry `(s, b, n)` is the
/// zero-based mode index selected by antenna `n` of array `b` in sample `s`.
///
/// Storing indices makes the one-hot constraint hold by construction; the
/// binary vector form is available through [`SelectionState::binary_vector`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionState {
    samples: usize,
    arrays: usize,
    antennas: usize,
    mode_count: usize,
    modes: Vec<usize>,
}

impl SelectionState {
    pub fn uniform(samples: usize, arrays: usize, antennas: usize, mode_count: usize, mode: usize) -> Result<Self> {
        if mode >= mode_count {
            return Err(Error::ModeIndex {
                index: mode,
                count: mode_count,
            });
        }
        Ok(Self {
            samples,
            arrays,
            antennas,
            mode_count,
            modes: vec![mode; samples * arrays * antennas],
        })
    }

    pub fn sample_count(&self) -> usize {
        self.samples
    }

    pub fn array_count(&self) -> usize {
        self.arrays
    }

    pub fn antennas_per_array(&self) -> usize {
        self.antennas
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    #[inline]
    fn offset(&self, s: usize, b: usize) -> usize {
        (s * self.arrays + b) * self.antennas
    }

    pub fn mode(&self, s: usize, b: usize, n: usize) -> usize {
        self.modes[self.offset(s, b) + n]
    }

    pub fn set_mode(&mut self, s: usize, b: usize, n: usize, p: usize) -> Result<()> {
        if p >= self.mode_count {
            return Err(Error::ModeIndex {
                index: p,
                count: self.mode_count,
            });
        }
        let o = self.offset(s, b);
        self.modes[o + n] = p;
        Ok(())
    }

    /// Modes of all antennas of array `b` in sample `s`.
    pub fn array_modes(&self, s: usize, b: usize) -> &[usize] {
        let o = self.offset(s, b);
        &self.modes[o..o + self.antennas]
    }

    pub(crate) fn array_modes_mut(&mut self, s: usize, b: usize) -> &mut [usize] {
        let o = self.offset(s, b);
        &mut self.modes[o..o + self.antennas]
    }

    /// Modes of all arrays in sample `s`, array-major.
    pub fn sample_modes(&self, s: usize) -> &[usize] {
        let o = self.offset(s, 0);
        &self.modes[o..o + self.arrays * self.antennas]
    }

    pub(crate) fn sample_modes_mut(&mut self, s: usize) -> &mut [usize] {
        let o = self.offset(s, 0);
        let len = self.arrays * self.antennas;
        &mut self.modes[o..o + len]
    }

    /// Column-wise vectorization of the `P x N` selection matrix of array `b`
    /// in sample `s`: entry `n * P + p` is 1 iff antenna `n` uses mode `p`.
    pub fn binary_vector(&self, s: usize, b: usize) -> Vec<u8> {
        let mut z = vec![0u8; self.mode_count * self.antennas];
        for (n, &p) in self.array_modes(s, b).iter().enumerate() {
            z[n * self.mode_count + p] = 1;
        }
        z
    }

    /// Load array `b` of sample `s` from a binary vector.
    pub fn set_from_binary(&mut self, s: usize, b: usize, z: &[u8]) -> Result<()> {
        let modes = decode_one_hot(z, self.antennas, self.mode_count).map_err(|antenna| Error::NotOneHot {
            sample: s,
            array: b,
            antenna,
        })?;
        self.array_modes_mut(s, b).copy_from_slice(&modes);
        Ok(())
    }
}

/// Mode index per antenna, or the first antenna whose column is not one-hot.
fn decode_one_hot(z: &[u8], antennas: usize, mode_count: usize) -> core::result::Result<Vec<usize>, usize> {
    if z.len() != antennas * mode_count {
        return Err(0);
    }
    let mut out = Vec::with_capacity(antennas);
    for n in 0..antennas {
        let col = &z[n * mode_count..(n + 1) * mode_count];
        if col.iter().any(|&v| v > 1) || col.iter().filter(|&&v| v == 1).count() != 1 {
            return Err(n);
        }
        out.push(col.iter().position(|&v| v == 1).unwrap_or(0));
    }
    Ok(out)
}

/// `exp(-j 2 pi / lambda * f . r)` for every element position.
pub(crate) fn steering_at<'a>(
    positions: &'a [Vec3],
    f: &Vec3,
    wavelength: f64,
) -> impl Iterator<Item = Complex64> + 'a {
    let k = 2.0 * PI / wavelength;
    let f = *f;
    positions.iter().map(move |r| {
        let phase = -k * dot(&f, r);
        Complex64::new(libm::cos(phase), libm::sin(phase))
    })
}

/// Steering vector of array `b` toward unit direction `f`.
pub fn steering_vector(geom: &StationGeometry, b: usize, f: &Vec3, wavelength: f64) -> Result<Vec<Complex64>> {
    let positions = geom.global_element_positions(b)?;
    Ok(steering_at(&positions, f, wavelength).collect())
}

/// The sparse `N x PN` matrix of field amplitudes of one array toward one
/// user. In the far field every antenna sees the same local angles, so the
/// nonzero at `(n, n P + p)` depends only on `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMatrix {
    antennas: usize,
    amplitudes: Vec<f64>,
}

impl GainMatrix {
    pub fn rows(&self) -> usize {
        self.antennas
    }

    pub fn cols(&self) -> usize {
        self.antennas * self.amplitudes.len()
    }

    /// Amplitude of mode `p` (common to every antenna).
    pub fn amplitude(&self, p: usize) -> f64 {
        self.amplitudes[p]
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        let p_count = self.amplitudes.len();
        if col / p_count == row {
            self.amplitudes[col % p_count]
        } else {
            0.0
        }
    }

    /// `(row, col, value)` of every structural nonzero.
    pub fn nonzeros(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let p_count = self.amplitudes.len();
        (0..self.antennas).flat_map(move |n| (0..p_count).map(move |p| (n, n * p_count + p, self.amplitudes[p])))
    }

    /// `M z` for a binary selection vector.
    pub fn apply(&self, z: &[u8]) -> Result<Vec<f64>> {
        let modes = decode_one_hot(z, self.antennas, self.amplitudes.len()).map_err(|antenna| Error::NotOneHot {
            sample: 0,
            array: 0,
            antenna,
        })?;
        Ok(modes.into_iter().map(|p| self.amplitudes[p]).collect())
    }
}

/// Gain matrix of array `b` (at its stored azimuth) toward unit direction `f`.
pub fn gain_matrix(codebook: &PatternCodebook, geom: &StationGeometry, b: usize, f: &Vec3) -> Result<GainMatrix> {
    let phi = geom.azimuth(b)?;
    let local = crate::geometry::local_pointing(phi, f)?;
    Ok(GainMatrix {
        antennas: geom.antennas_per_array(),
        amplitudes: (0..codebook.mode_count())
            .map(|p| codebook.amplitude_unchecked(p, &local))
            .collect(),
    })
}

/// Uplink channel from one user to array `b` under selection `z_b` (binary
/// vector, one mode per antenna).
pub fn user_channel(
    codebook: &PatternCodebook,
    geom: &StationGeometry,
    phys: &PhysicalConfig,
    b: usize,
    user: &UserGeom,
    z_b: &[u8],
) -> Result<Vec<Complex64>> {
    let modes =
        decode_one_hot(z_b, geom.antennas_per_array(), codebook.mode_count()).map_err(|antenna| Error::NotOneHot {
            sample: 0,
            array: b,
            antenna,
        })?;
    let phi = geom.azimuth(b)?;
    Ok(array_channel(codebook, geom, phys, phi, user, &modes))
}

/// Channel toward one array placed at `phi` with per-antenna mode indices.
pub(crate) fn array_channel(
    codebook: &PatternCodebook,
    geom: &StationGeometry,
    phys: &PhysicalConfig,
    phi: f64,
    user: &UserGeom,
    modes: &[usize],
) -> Vec<Complex64> {
    let positions = geom.global_positions_at(phi);
    let local = LocalPointing::from_global(phi, &user.pointing);
    let sqrt_v = libm::sqrt(phys.channel_power_gain(user.distance_m));
    steering_at(&positions, &user.pointing, phys.wavelength_m)
        .zip(modes)
        .map(|(a, &p)| a * (sqrt_v * codebook.amplitude_unchecked(p, &local)))
        .collect()
}

/// Stacked `NB`-long channel of every user of `sample`, with array azimuths
/// taken from `geom` and modes from `selection` at sample slot `s`.
pub fn stacked_channels(
    codebook: &PatternCodebook,
    geom: &StationGeometry,
    phys: &PhysicalConfig,
    sample: &ChannelSample,
    selection: &SelectionState,
    s: usize,
) -> Vec<Vec<Complex64>> {
    sample
        .users
        .iter()
        .map(|user| {
            let mut h = Vec::with_capacity(geom.total_antennas());
            for (b, &phi) in geom.azimuths().iter().enumerate() {
                h.extend(array_channel(
                    codebook,
                    geom,
                    phys,
                    phi,
                    user,
                    selection.array_modes(s, b),
                ));
            }
            h
        })
        .collect()
}

/// `log2 det(I + sum_k (p_k / sigma^2) h_k h_k^H)` through the Gram matrix
/// `I_K + (1/sigma^2) D^1/2 H^H H D^1/2`. `channels[k]` is the column `h_k`.
pub fn sum_rate_with_powers(noise_power_w: f64, channels: &[Vec<Complex64>], powers: &[f64]) -> Result<f64> {
    let k = channels.len();
    if k == 0 {
        return Ok(0.0);
    }
    if powers.len() != k {
        return Err(Error::invalid("powers", "one power per user required"));
    }
    if channels
        .iter()
        .flatten()
        .any(|h| !(h.re.is_finite() && h.im.is_finite()))
    {
        return Err(Error::NonFinite("channel matrix"));
    }
    let mut gram = vec![Complex64::new(0.0, 0.0); k * k];
    for i in 0..k {
        for j in 0..=i {
            let inner: Complex64 = channels[i]
                .iter()
                .zip(&channels[j])
                .map(|(hi, hj)| hi.conj() * hj)
                .sum();
            let scale = libm::sqrt(powers[i] * powers[j]) / noise_power_w;
            gram[i * k + j] = inner * scale;
        }
        gram[i * k + i] += 1.0;
    }
    log2_det_hpd(&mut gram, k)
        .map(|r| r.max(0.0))
        .ok_or(Error::NonFinite("Gram matrix factorization"))
}

/// Sum-rate of one sample with every user at `phys.tx_power_w`.
pub fn sum_rate(phys: &PhysicalConfig, channels: &[Vec<Complex64>]) -> Result<f64> {
    let powers = vec![phys.tx_power_w; channels.len()];
    sum_rate_with_powers(phys.noise_power_w, channels, &powers)
}

/// Monte Carlo average of the per-sample sum-rate; `selection` slot `s`
/// belongs to `samples[s]`. Samples are accumulated in index order.
pub fn average_sum_rate(
    phys: &PhysicalConfig,
    samples: &[ChannelSample],
    geom: &StationGeometry,
    codebook: &PatternCodebook,
    selection: &SelectionState,
) -> Result<f64> {
    check_selection_shape(selection, samples.len(), geom, codebook)?;
    if samples.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for (s, sample) in samples.iter().enumerate() {
        let h = stacked_channels(codebook, geom, phys, sample, selection, s);
        total += sum_rate(phys, &h)?;
    }
    Ok(total / samples.len() as f64)
}

pub(crate) fn check_selection_shape(
    selection: &SelectionState,
    samples: usize,
    geom: &StationGeometry,
    codebook: &PatternCodebook,
) -> Result<()> {
    if selection.sample_count() != samples
        || selection.array_count() != geom.array_count()
        || selection.antennas_per_array() != geom.antennas_per_array()
        || selection.mode_count() != codebook.mode_count()
    {
        return Err(Error::SelectionShape(alloc::format!(
            "selection is {}x{}x{} over {} modes, problem is {}x{}x{} over {} modes",
            selection.sample_count(),
            selection.array_count(),
            selection.antennas_per_array(),
            selection.mode_count(),
            samples,
            geom.array_count(),
            geom.antennas_per_array(),
            codebook.mode_count()
        )));
    }
    Ok(())
}
