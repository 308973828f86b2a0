//! Cached sum-rate evaluation for the two blocks.
//!
//! Position updates move one array while the others stay put, so the Gram
//! contribution of every other array is summed once per array and only the
//! moving array's rows are recomputed per probe. Pattern updates change one
//! antenna at a time; with the rest of the Gram matrix fixed, the rate of each
//! candidate mode follows from a rank-one determinant update.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use super::Problem;
use crate::channel::{steering_at, ChannelSample, SelectionState};
use crate::geometry::{LocalPointing, StationGeometry};
use crate::linalg::log2_det_hpd;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `f(i)` for every `i < n`, in index order.
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Channel rows of one array toward every user of a sample: entry
/// `n * K + k` is the coefficient of antenna `n` for user `k`.
pub(crate) fn array_rows(
    problem: &Problem<'_>,
    geom: &StationGeometry,
    phi: f64,
    sample: &ChannelSample,
    modes: &[usize],
) -> Vec<Complex64> {
    let k = sample.users.len();
    let n = modes.len();
    let mut rows = vec![ZERO; n * k];
    if k == 0 {
        return rows;
    }
    let positions = geom.global_positions_at(phi);
    for (j, user) in sample.users.iter().enumerate() {
        let local = LocalPointing::from_global(phi, &user.pointing);
        let sqrt_v = libm::sqrt(problem.phys.channel_power_gain(user.distance_m));
        for (i, (a, &p)) in steering_at(&positions, &user.pointing, problem.phys.wavelength_m)
            .zip(modes)
            .enumerate()
        {
            rows[i * k + j] = a * (sqrt_v * problem.codebook.amplitude_unchecked(p, &local));
        }
    }
    rows
}

/// `acc += scale * R^H R` on the lower triangle, `R` being `n x k`.
pub(crate) fn add_gram(acc: &mut [Complex64], rows: &[Complex64], k: usize, scale: f64) {
    if k == 0 {
        return;
    }
    for row in rows.chunks_exact(k) {
        for i in 0..k {
            let ci = row[i].conj() * scale;
            for j in 0..=i {
                acc[i * k + j] += ci * row[j];
            }
        }
    }
}

fn identity(k: usize) -> Vec<Complex64> {
    let mut m = vec![ZERO; k * k];
    for i in 0..k {
        m[i * k + i] = Complex64::new(1.0, 0.0);
    }
    m
}

/// Clamped `log2 det` of a lower-triangle Gram matrix (consumed).
fn rate_of(mut m: Vec<Complex64>, k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    log2_det_hpd(&mut m, k).map_or(f64::NAN, |r| r.max(0.0))
}

/// Per-sample, per-array scaled Gram contributions at the current state.
pub(crate) struct GramStore {
    /// `blocks[s][b]` is the lower triangle of `(p/sigma^2) H_b^H H_b`.
    blocks: Vec<Vec<Vec<Complex64>>>,
}

impl GramStore {
    pub(crate) fn build(problem: &Problem<'_>, geom: &StationGeometry, selection: &SelectionState) -> Self {
        let scale = problem.phys.snr_scale();
        let blocks = map_indexed(problem.samples.len(), |s| {
            let sample = &problem.samples[s];
            let k = sample.users.len();
            geom.azimuths()
                .iter()
                .enumerate()
                .map(|(b, &phi)| {
                    let rows = array_rows(problem, geom, phi, sample, selection.array_modes(s, b));
                    let mut g = vec![ZERO; k * k];
                    add_gram(&mut g, &rows, k, scale);
                    g
                })
                .collect()
        });
        Self { blocks }
    }

    /// Recompute array `b` after its azimuth changed.
    pub(crate) fn refresh_array(
        &mut self,
        problem: &Problem<'_>,
        geom: &StationGeometry,
        selection: &SelectionState,
        b: usize,
    ) {
        let scale = problem.phys.snr_scale();
        let phi = geom.azimuths()[b];
        let fresh = map_indexed(problem.samples.len(), |s| {
            let sample = &problem.samples[s];
            let k = sample.users.len();
            let rows = array_rows(problem, geom, phi, sample, selection.array_modes(s, b));
            let mut g = vec![ZERO; k * k];
            add_gram(&mut g, &rows, k, scale);
            g
        });
        for (blocks, g) in self.blocks.iter_mut().zip(fresh) {
            blocks[b] = g;
        }
    }

    /// Per-sample rates at the stored state.
    pub(crate) fn sample_rates(&self, problem: &Problem<'_>) -> Vec<f64> {
        map_indexed(problem.samples.len(), |s| {
            let k = problem.samples[s].users.len();
            let mut m = identity(k);
            for g in &self.blocks[s] {
                for (a, x) in m.iter_mut().zip(g) {
                    *a += x;
                }
            }
            rate_of(m, k)
        })
    }

    /// Fix every array except `b`.
    pub(crate) fn position_cache(&self, problem: &Problem<'_>, selection: &SelectionState, b: usize) -> PositionCache {
        let bases = map_indexed(problem.samples.len(), |s| {
            let k = problem.samples[s].users.len();
            let mut m = identity(k);
            for (j, g) in self.blocks[s].iter().enumerate() {
                if j != b {
                    for (a, x) in m.iter_mut().zip(g) {
                        *a += x;
                    }
                }
            }
            m
        });
        let modes = (0..problem.samples.len())
            .map(|s| selection.array_modes(s, b).to_vec())
            .collect();
        PositionCache { bases, modes }
    }
}

/// Objective as a function of one array's azimuth.
pub(crate) struct PositionCache {
    bases: Vec<Vec<Complex64>>,
    modes: Vec<Vec<usize>>,
}

impl PositionCache {
    /// Average sum-rate with the free array placed at `phi` (not projected).
    pub(crate) fn eval(&self, problem: &Problem<'_>, geom: &StationGeometry, phi: f64) -> f64 {
        let scale = problem.phys.snr_scale();
        let rates = map_indexed(problem.samples.len(), |s| {
            let sample = &problem.samples[s];
            let k = sample.users.len();
            if k == 0 {
                return 0.0;
            }
            let rows = array_rows(problem, geom, phi, sample, &self.modes[s]);
            let mut m = self.bases[s].clone();
            add_gram(&mut m, &rows, k, scale);
            rate_of(m, k)
        });
        mean(&rates)
    }
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// Everything needed to re-select the modes of one sample with the array
/// azimuths held fixed.
pub(crate) struct SampleWork {
    k: usize,
    arrays: usize,
    antennas: usize,
    modes: usize,
    scale: f64,
    /// `steering * sqrt(v)` for `((b * N + n) * K + k)`.
    base: Vec<Complex64>,
    /// Field amplitude for `((b * P + p) * K + k)`.
    amp: Vec<f64>,
}

/// Result of re-selecting one antenna.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct AntennaChoice {
    pub mode: usize,
    pub rate: f64,
    pub candidates: usize,
}

impl SampleWork {
    pub(crate) fn new(problem: &Problem<'_>, geom: &StationGeometry, s: usize) -> Self {
        let sample = &problem.samples[s];
        let k = sample.users.len();
        let arrays = geom.array_count();
        let antennas = geom.antennas_per_array();
        let modes = problem.codebook.mode_count();
        let mut base = vec![ZERO; arrays * antennas * k];
        let mut amp = vec![0.0; arrays * modes * k];
        for (b, &phi) in geom.azimuths().iter().enumerate() {
            let positions = geom.global_positions_at(phi);
            for (j, user) in sample.users.iter().enumerate() {
                let local = LocalPointing::from_global(phi, &user.pointing);
                let sqrt_v = libm::sqrt(problem.phys.channel_power_gain(user.distance_m));
                for (n, a) in steering_at(&positions, &user.pointing, problem.phys.wavelength_m).enumerate() {
                    base[(b * antennas + n) * k + j] = a * sqrt_v;
                }
                for p in 0..modes {
                    amp[(b * modes + p) * k + j] = problem.codebook.amplitude_unchecked(p, &local);
                }
            }
        }
        Self {
            k,
            arrays,
            antennas,
            modes,
            scale: problem.phys.snr_scale(),
            base,
            amp,
        }
    }

    fn row(&self, b: usize, n: usize, p: usize) -> impl Iterator<Item = Complex64> + '_ {
        let base = &self.base[(b * self.antennas + n) * self.k..][..self.k];
        let amp = &self.amp[(b * self.modes + p) * self.k..][..self.k];
        base.iter().zip(amp).map(|(x, &a)| x * a)
    }

    /// Lower-triangle Gram matrix with antenna `skip` left out.
    fn gram(&self, selected: &[usize], skip: Option<(usize, usize)>) -> Vec<Complex64> {
        let k = self.k;
        let mut m = identity(k);
        let mut row = vec![ZERO; k];
        for b in 0..self.arrays {
            for n in 0..self.antennas {
                if skip == Some((b, n)) {
                    continue;
                }
                for (dst, v) in row.iter_mut().zip(self.row(b, n, selected[b * self.antennas + n])) {
                    *dst = v;
                }
                add_gram(&mut m, &row, k, self.scale);
            }
        }
        m
    }

    /// Sum-rate of this sample under `selected` (array-major mode indices).
    pub(crate) fn rate(&self, selected: &[usize]) -> f64 {
        rate_of(self.gram(selected, None), self.k)
    }

    /// Best mode for antenna `(b, n)` with all other antennas fixed. The
    /// incumbent is kept when it ties the best; other ties go to the smallest
    /// index.
    pub(crate) fn select_antenna(&self, selected: &[usize], b: usize, n: usize) -> AntennaChoice {
        let incumbent = selected[b * self.antennas + n];
        let k = self.k;
        if k == 0 {
            return AntennaChoice {
                mode: incumbent,
                rate: 0.0,
                candidates: 0,
            };
        }
        let mut l = self.gram(selected, Some((b, n)));
        let log_det = match log2_det_hpd(&mut l, k) {
            Some(v) => v,
            None => {
                return AntennaChoice {
                    mode: incumbent,
                    rate: f64::NAN,
                    candidates: 0,
                }
            }
        };
        let inv = inverse_from_cholesky(&l, k);
        // With w_i = conj(base_i) a_i the candidate Gram matrix is
        // M + scale * w w^H, so det scales by 1 + scale * a^T Re(W) a with
        // W_ij = base_i inv_ij conj(base_j).
        let base = &self.base[(b * self.antennas + n) * k..][..k];
        let mut w = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..=i {
                w[i * k + j] = (base[i] * inv[i * k + j] * base[j].conj()).re;
            }
        }
        let quad = |p: usize| {
            let a = &self.amp[(b * self.modes + p) * k..][..k];
            let mut q = 0.0;
            for i in 0..k {
                let mut off = 0.0;
                for j in 0..i {
                    off += w[i * k + j] * a[j];
                }
                q += a[i] * (w[i * k + i] * a[i] + 2.0 * off);
            }
            q
        };
        let mut best_mode = incumbent;
        let mut best = quad(incumbent);
        for p in 0..self.modes {
            if p == incumbent {
                continue;
            }
            let q = quad(p);
            if q > best {
                best = q;
                best_mode = p;
            }
        }
        AntennaChoice {
            mode: best_mode,
            rate: (log_det + libm::log2(1.0 + self.scale * best.max(0.0))).max(0.0),
            candidates: self.modes,
        }
    }
}

/// Full Hermitian inverse (both triangles, row-major) from a lower Cholesky
/// factor as left by [`log2_det_hpd`].
fn inverse_from_cholesky(l: &[Complex64], k: usize) -> Vec<Complex64> {
    // X = L^-1, lower triangular.
    let mut x = vec![ZERO; k * k];
    for j in 0..k {
        x[j * k + j] = Complex64::new(1.0 / l[j * k + j].re, 0.0);
        for i in (j + 1)..k {
            let mut s = ZERO;
            for m in j..i {
                s += l[i * k + m] * x[m * k + j];
            }
            x[i * k + j] = -s / l[i * k + i].re;
        }
    }
    // inv = X^H X.
    let mut inv = vec![ZERO; k * k];
    for i in 0..k {
        for j in 0..=i {
            let mut s = ZERO;
            for m in i..k {
                s += x[m * k + i].conj() * x[m * k + j];
            }
            inv[i * k + j] = s;
            inv[j * k + i] = s.conj();
        }
    }
    inv
}
