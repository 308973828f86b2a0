//! Seeded user-location models.
//!
//! Users live in a spherical shell around the station. A static scenario
//! draws every Monte Carlo sample independently: each region holds a Poisson
//! number of users placed uniformly inside it. The time-varying scenario in
//! [`time_varying`] evolves hotspot centers and user populations from one
//! snapshot to the next.

use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::channel::{ChannelSample, UserGeom};
use crate::seed::{derive_seed, stream, SimRng};
use crate::{norm, Error, Result, Vec3};

pub mod time_varying;

pub use time_varying::{EmittedUser, TimeVaryingParams, TimeVaryingScenario};

/// Attempts allowed before rejection sampling reports a misconfiguration.
pub const MAX_REJECTION_ATTEMPTS: usize = 100_000;

/// Spherical shell `r_min <= |p| <= r_max` centered at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shell {
    pub r_min: f64,
    pub r_max: f64,
}

impl Shell {
    pub fn new(r_min: f64, r_max: f64) -> Result<Self> {
        if !(r_min.is_finite() && r_max.is_finite() && r_min >= 0.0 && r_min < r_max) {
            return Err(Error::invalid("coverage shell", "requires 0 <= r_min < r_max"));
        }
        Ok(Self { r_min, r_max })
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        let r = norm(p);
        r >= self.r_min && r <= self.r_max
    }

    /// Radially clamp `p` onto the shell; returns whether it moved.
    pub fn clamp(&self, p: &mut Vec3) -> bool {
        let r = norm(p);
        let target = if r < self.r_min {
            self.r_min
        } else if r > self.r_max {
            self.r_max
        } else {
            return false;
        };
        if r == 0.0 {
            *p = [target, 0.0, 0.0];
        } else {
            let s = target / r;
            *p = [p[0] * s, p[1] * s, p[2] * s];
        }
        true
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec3 {
        let (a, b) = (cube(self.r_min), cube(self.r_max));
        let r = libm::cbrt(a + rng.random::<f64>() * (b - a));
        scale(&unit_direction(rng), r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    /// Axis-aligned box with full edge lengths `size`.
    Cuboid {
        center: Vec3,
        size: Vec3,
    },
    /// Horizontal disk in the plane `z = center[2]`.
    HorizontalDisk {
        center: Vec3,
        radius: f64,
    },
    Segment {
        a: Vec3,
        b: Vec3,
    },
    Sphere {
        center: Vec3,
        radius: f64,
    },
    Shell(Shell),
}

impl Region {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Region::Cuboid { size, .. } => size.iter().all(|&s| s > 0.0 && s.is_finite()),
            Region::HorizontalDisk { radius, .. } | Region::Sphere { radius, .. } => radius > 0.0 && radius.is_finite(),
            Region::Segment { a, b } => a != b,
            Region::Shell(s) => s.r_min >= 0.0 && s.r_min < s.r_max,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid("region", "dimensions must be positive"))
        }
    }

    /// Whether `p` lies inside the region's volume. Disks and segments have
    /// zero volume and never exclude anything.
    pub fn occupies(&self, p: &Vec3) -> bool {
        match *self {
            Region::Cuboid { center, size } => (0..3).all(|i| libm::fabs(p[i] - center[i]) <= size[i] / 2.0),
            Region::Sphere { center, radius } => norm(&sub(p, &center)) <= radius,
            Region::Shell(s) => s.contains(p),
            Region::HorizontalDisk { .. } | Region::Segment { .. } => false,
        }
    }

    /// Uniform draw over the region's volume, area or length.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec3 {
        match *self {
            Region::Cuboid { center, size } => {
                core::array::from_fn(|i| center[i] + (rng.random::<f64>() - 0.5) * size[i])
            }
            Region::HorizontalDisk { center, radius } => {
                let r = radius * libm::sqrt(rng.random::<f64>());
                let t = TAU * rng.random::<f64>();
                [center[0] + r * libm::cos(t), center[1] + r * libm::sin(t), center[2]]
            }
            Region::Segment { a, b } => {
                let u = rng.random::<f64>();
                core::array::from_fn(|i| a[i] + u * (b[i] - a[i]))
            }
            Region::Sphere { center, radius } => {
                let r = radius * libm::cbrt(rng.random::<f64>());
                let d = unit_direction(rng);
                core::array::from_fn(|i| center[i] + r * d[i])
            }
            Region::Shell(s) => s.sample(rng),
        }
    }
}

fn cube(x: f64) -> f64 {
    x * x * x
}

fn sub(a: &Vec3, b: &Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn scale(a: &Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub(crate) fn unit_direction<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    let z = 2.0 * rng.random::<f64>() - 1.0;
    let t = TAU * rng.random::<f64>();
    let rho = libm::sqrt((1.0 - z * z).max(0.0));
    [rho * libm::cos(t), rho * libm::sin(t), z]
}

/// Poisson variate with the given mean.
pub fn sample_poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> Result<u64> {
    if !(mean >= 0.0 && mean.is_finite()) {
        return Err(Error::invalid("poisson mean", "must be non-negative and finite"));
    }
    if mean == 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(mean).map_err(|_| Error::invalid("poisson mean", "rejected by sampler"))?;
    Ok(dist.sample(rng) as u64)
}

/// Poisson draw by inverting the CDF at `u` in `[0, 1)`. For a fixed `u` the
/// count is non-decreasing in `mean`, which couples draws across means.
pub fn poisson_quantile(mean: f64, u: f64) -> Result<u64> {
    if !(mean >= 0.0 && mean.is_finite()) {
        return Err(Error::invalid("poisson mean", "must be non-negative and finite"));
    }
    if !(0.0..1.0).contains(&u) {
        return Err(Error::invalid("poisson quantile", "u must lie in [0, 1)"));
    }
    let mut p = libm::exp(-mean);
    if p == 0.0 {
        return Err(Error::invalid("poisson mean", "too large for CDF inversion"));
    }
    let mut cdf = p;
    let mut k = 0u64;
    while u >= cdf {
        k += 1;
        p *= mean / k as f64;
        if p == 0.0 {
            break;
        }
        cdf += p;
    }
    Ok(k)
}

/// Uniform point of `region` that lies in `coverage` and outside every
/// region in `exclude`, by rejection.
pub fn sample_region_uniform<R: Rng + ?Sized>(
    region: &Region,
    coverage: &Shell,
    exclude: &[Region],
    rng: &mut R,
) -> Result<Vec3> {
    for _ in 0..MAX_REJECTION_ATTEMPTS {
        let p = region.sample(rng);
        if coverage.contains(&p) && !exclude.iter().any(|e| e.occupies(&p)) {
            return Ok(p);
        }
    }
    Err(Error::RejectionExhausted {
        attempts: MAX_REJECTION_ATTEMPTS,
    })
}

/// Expected user counts per region: `eta * mu_t` for the regular region
/// (index 0) and an equal share of the rest for each hotspot.
pub fn region_means(mean_total: f64, sparsity: f64, hotspots: usize) -> Vec<f64> {
    let mut means = Vec::with_capacity(hotspots + 1);
    means.push(sparsity * mean_total);
    let share = if hotspots == 0 {
        0.0
    } else {
        (1.0 - sparsity) * mean_total / hotspots as f64
    };
    means.extend(core::iter::repeat(share).take(hotspots));
    means
}

/// Time-invariant hotspot model.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticScenario {
    pub coverage: Shell,
    pub hotspots: Vec<Region>,
    pub mean_total: f64,
    pub sparsity: f64,
}

impl StaticScenario {
    /// Shell 50-120 m with a building (cuboid), ground (disk) and airway
    /// (segment) hotspot, 24 users on average.
    pub fn reference(sparsity: f64) -> Self {
        Self {
            coverage: Shell {
                r_min: 50.0,
                r_max: 120.0,
            },
            hotspots: alloc::vec![
                Region::Cuboid {
                    center: [-50.0, -20.0, -30.0],
                    size: [30.0, 30.0, 40.0],
                },
                Region::HorizontalDisk {
                    center: [80.0, 30.0, -50.0],
                    radius: 20.0,
                },
                Region::Segment {
                    a: [10.0, 30.0, 40.0],
                    b: [30.0, 30.0, 70.0],
                },
            ],
            mean_total: 24.0,
            sparsity,
        }
    }

    pub fn validate(&self) -> Result<()> {
        Shell::new(self.coverage.r_min, self.coverage.r_max)?;
        for h in &self.hotspots {
            h.validate()?;
        }
        if !(self.mean_total >= 0.0 && self.mean_total.is_finite()) {
            return Err(Error::invalid("mean_total", "must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.sparsity) {
            return Err(Error::invalid("sparsity", "must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn region_means(&self) -> Vec<f64> {
        region_means(self.mean_total, self.sparsity, self.hotspots.len())
    }

    fn sample_one(&self, master_seed: u64, s: usize) -> Result<ChannelSample> {
        let sample_seed = derive_seed(master_seed, "static-sample", s as u64);
        let mut users = Vec::new();
        for (i, &mu) in self.region_means().iter().enumerate() {
            // Counts and positions use separate streams, so samples drawn with
            // the same seed at different means share their first users.
            let u = stream(sample_seed, "region-count", i as u64).random::<f64>();
            let count = poisson_quantile(mu, u)?;
            let mut rng: SimRng = stream(sample_seed, "region", i as u64);
            for _ in 0..count {
                let p = if i == 0 {
                    sample_region_uniform(&Region::Shell(self.coverage), &self.coverage, &self.hotspots, &mut rng)?
                } else {
                    sample_region_uniform(&self.hotspots[i - 1], &self.coverage, &[], &mut rng)?
                };
                users.push(UserGeom::from_position(p, i as u8)?);
            }
        }
        Ok(ChannelSample { users, sample_index: s })
    }
}

/// `count` independent samples; sample `s` depends only on `(master_seed, s)`.
pub fn generate_static_samples(scn: &StaticScenario, count: usize, master_seed: u64) -> Result<Vec<ChannelSample>> {
    scn.validate()?;
    if count == 0 {
        return Err(Error::invalid("samples", "at least one sample is required"));
    }
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..count)
            .into_par_iter()
            .map(|s| scn.sample_one(master_seed, s))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..count).map(|s| scn.sample_one(master_seed, s)).collect()
    }
}

/// Azimuth of a position seen from the origin, handy for reports.
pub fn azimuth_of(p: &Vec3) -> f64 {
    let a = libm::atan2(p[1], p[0]);
    if a <= -PI {
        a + TAU
    } else {
        a
    }
}
