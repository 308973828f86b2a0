//! Snapshot-by-snapshot user model with drifting hotspots.
//!
//! Hotspot centers follow a first-order Gauss-Markov process around their
//! mean positions. Between snapshots each user survives with probability
//! `rho_i` (so the survivor count is binomial), and a Poisson number of
//! newcomers with mean `(1 - rho_i) mu_i` arrives, which keeps every region's
//! count Poisson(`mu_i`) at stationarity. Surviving hotspot users keep an
//! AR(1) offset from their hotspot center; regular users stay where they are.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{region_means, sample_poisson, sample_region_uniform, Region, Shell};
use crate::channel::{ChannelSample, UserGeom};
use crate::seed::{stream, SimRng};
use crate::{Error, Result, Vec3};

#[derive(Debug, Clone, PartialEq)]
pub struct TimeVaryingParams {
    pub coverage: Shell,
    pub mean_centers: Vec<Vec3>,
    pub hotspot_radius_m: f64,
    pub mean_total: f64,
    pub sparsity: f64,
    pub center_persistence: f64,
    pub center_noise_std: f64,
    /// Survival probability per region, index 0 = regular users.
    pub survival_probs: Vec<f64>,
    pub offset_persistence: f64,
    pub offset_noise_std: f64,
    /// Snapshots per long-timescale period (`dT_l / dT_s`).
    pub snapshots_per_period: usize,
}

impl TimeVaryingParams {
    /// Three spherical hotspots of radius 15 m in the 50-120 m shell.
    pub fn reference(sparsity: f64) -> Self {
        Self {
            coverage: Shell {
                r_min: 50.0,
                r_max: 120.0,
            },
            mean_centers: alloc::vec![[50.0, -30.0, -40.0], [-50.0, -10.0, 50.0], [-10.0, 60.0, 20.0]],
            hotspot_radius_m: 15.0,
            mean_total: 24.0,
            sparsity,
            center_persistence: 0.99,
            center_noise_std: 0.05,
            survival_probs: alloc::vec![0.98; 4],
            offset_persistence: 0.95,
            offset_noise_std: 0.6,
            snapshots_per_period: 50,
        }
    }

    pub fn validate(&self) -> Result<()> {
        Shell::new(self.coverage.r_min, self.coverage.r_max)?;
        let open_unit = |v: f64| v > 0.0 && v < 1.0;
        if !open_unit(self.center_persistence) {
            return Err(Error::invalid("center_persistence", "must lie in (0, 1)"));
        }
        if !open_unit(self.offset_persistence) {
            return Err(Error::invalid("offset_persistence", "must lie in (0, 1)"));
        }
        if self.survival_probs.len() != self.mean_centers.len() + 1 {
            return Err(Error::invalid(
                "survival_probs",
                "need one entry per region including the regular one",
            ));
        }
        // rho_i = 1 is the frozen-population limit; allowed for testing.
        if self.survival_probs.iter().any(|&r| !(r > 0.0 && r <= 1.0)) {
            return Err(Error::invalid("survival_probs", "must lie in (0, 1]"));
        }
        for (name, v) in [
            ("center_noise_std", self.center_noise_std),
            ("offset_noise_std", self.offset_noise_std),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, "must be non-negative"));
            }
        }
        if !(self.hotspot_radius_m > 0.0) {
            return Err(Error::invalid("hotspot_radius_m", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.sparsity) || !(self.mean_total >= 0.0) {
            return Err(Error::invalid(
                "sparsity",
                "must lie in [0, 1] with a non-negative mean",
            ));
        }
        if self.snapshots_per_period == 0 {
            return Err(Error::invalid("snapshots_per_period", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Tracked {
    id: u64,
    /// Offset from the hotspot center, or absolute position for regular users.
    vector: Vec3,
}

/// A user position emitted at one snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmittedUser {
    pub id: u64,
    pub region: u8,
    pub position: Vec3,
}

#[derive(Debug, Clone)]
pub struct TimeVaryingScenario {
    params: TimeVaryingParams,
    means: Vec<f64>,
    centers: Vec<Vec3>,
    /// `populations[0]` are regular users, `populations[i]` hotspot `i`.
    populations: Vec<Vec<Tracked>>,
    snapshot: usize,
    next_id: u64,
    rng: SimRng,
    emitted: u64,
    clipped: u64,
}

impl TimeVaryingScenario {
    /// Initial snapshot: centers at their means, Poisson(`mu_i`) users placed
    /// uniformly in each region.
    pub fn new(params: TimeVaryingParams, seed: u64) -> Result<Self> {
        params.validate()?;
        let means = region_means(params.mean_total, params.sparsity, params.mean_centers.len());
        let mut scn = Self {
            centers: params.mean_centers.clone(),
            populations: alloc::vec![Vec::new(); means.len()],
            means,
            params,
            snapshot: 0,
            next_id: 0,
            rng: stream(seed, "time-varying", 0),
            emitted: 0,
            clipped: 0,
        };
        for i in 0..scn.means.len() {
            let count = sample_poisson(scn.means[i], &mut scn.rng)?;
            for _ in 0..count {
                scn.arrive(i)?;
            }
        }
        Ok(scn)
    }

    pub fn params(&self) -> &TimeVaryingParams {
        &self.params
    }

    pub fn snapshot_index(&self) -> usize {
        self.snapshot
    }

    pub fn centers(&self) -> &[Vec3] {
        &self.centers
    }

    /// Current user count per region.
    pub fn populations(&self) -> Vec<usize> {
        self.populations.iter().map(Vec::len).collect()
    }

    /// `(emitted positions, positions clamped onto the shell)` so far.
    pub fn clip_stats(&self) -> (u64, u64) {
        (self.emitted, self.clipped)
    }

    fn hotspot_sphere(&self, i: usize) -> Region {
        Region::Sphere {
            center: self.centers[i - 1],
            radius: self.params.hotspot_radius_m,
        }
    }

    fn arrive(&mut self, region: usize) -> Result<()> {
        let vector = if region == 0 {
            let exclude: Vec<Region> = (1..self.means.len()).map(|i| self.hotspot_sphere(i)).collect();
            sample_region_uniform(
                &Region::Shell(self.params.coverage),
                &self.params.coverage,
                &exclude,
                &mut self.rng,
            )?
        } else {
            let ball = Region::Sphere {
                center: [0.0; 3],
                radius: self.params.hotspot_radius_m,
            };
            ball.sample(&mut self.rng)
        };
        let id = self.next_id;
        self.next_id += 1;
        self.populations[region].push(Tracked { id, vector });
        Ok(())
    }

    fn gaussian3(&mut self, std: f64) -> Vec3 {
        if std == 0.0 {
            return [0.0; 3];
        }
        let normal = Normal::new(0.0, std).expect("std checked non-negative");
        core::array::from_fn(|_| normal.sample(&mut self.rng))
    }

    /// Advance one snapshot and return the new user sample.
    pub fn step(&mut self) -> Result<ChannelSample> {
        let users = self.step_users()?;
        to_sample(&users, self.snapshot)
    }

    /// Advance one snapshot and return the emitted users with their ids.
    pub fn step_users(&mut self) -> Result<Vec<EmittedUser>> {
        let rho_c = self.params.center_persistence;
        for i in 0..self.centers.len() {
            let noise = self.gaussian3(self.params.center_noise_std);
            let mean = self.params.mean_centers[i];
            let c = self.centers[i];
            self.centers[i] = core::array::from_fn(|d| mean[d] + rho_c * (c[d] - mean[d]) + noise[d]);
        }
        for i in 0..self.means.len() {
            let rho = self.params.survival_probs[i];
            let previous = core::mem::take(&mut self.populations[i]);
            let mut survivors = Vec::with_capacity(previous.len());
            for user in previous {
                // rho = 1 must keep everyone; random() is in [0, 1).
                if self.rng.random::<f64>() < rho {
                    survivors.push(user);
                }
            }
            if i > 0 {
                let rho_p = self.params.offset_persistence;
                for user in &mut survivors {
                    let noise = self.gaussian3(self.params.offset_noise_std);
                    user.vector = core::array::from_fn(|d| rho_p * user.vector[d] + noise[d]);
                }
            }
            self.populations[i] = survivors;
            let arrivals = sample_poisson((1.0 - rho) * self.means[i], &mut self.rng)?;
            for _ in 0..arrivals {
                self.arrive(i)?;
            }
        }
        self.snapshot += 1;
        Ok(self.users())
    }

    /// Emitted positions of every current user, clamped onto the coverage shell.
    pub fn users(&mut self) -> Vec<EmittedUser> {
        let mut out = Vec::new();
        for (i, pop) in self.populations.iter().enumerate() {
            for user in pop {
                let mut position = if i == 0 {
                    user.vector
                } else {
                    let c = self.centers[i - 1];
                    core::array::from_fn(|d| c[d] + user.vector[d])
                };
                if self.params.coverage.clamp(&mut position) {
                    self.clipped += 1;
                }
                self.emitted += 1;
                out.push(EmittedUser {
                    id: user.id,
                    region: i as u8,
                    position,
                });
            }
        }
        out
    }

    /// The current snapshot as a channel sample.
    pub fn sample(&mut self) -> Result<ChannelSample> {
        let users = self.users();
        to_sample(&users, self.snapshot)
    }
}

/// Channel sample built from emitted users.
pub fn to_sample(users: &[EmittedUser], sample_index: usize) -> Result<ChannelSample> {
    let users = users
        .iter()
        .map(|u| UserGeom::from_position(u.position, u.region))
        .collect::<Result<Vec<_>>>()?;
    Ok(ChannelSample { users, sample_index })
}
