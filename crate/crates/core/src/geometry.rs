//! Rail geometry: frames, element layout, the minimum angular separation
//! between arrays, and projection onto the arcs an array may occupy.
//!
//! Global frame: origin at the rail center, `z` up. Array `b` sits at azimuth
//! `phi_b` on a horizontal circle of radius `R` with outward normal
//! `[cos phi_b, sin phi_b, 0]`. In an array's local frame the elements lie in
//! the `x`-`y` plane and boresight is local `z`; local `x` maps to global `-z`.

use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use crate::{dot, norm, Error, Result, Vec3};

pub type Mat3 = [[f64; 3]; 3];

/// Slack used when testing the separation constraint, so that points placed
/// exactly on an exclusion boundary (which are feasible) survive rounding.
pub const SEPARATION_TOL: f64 = 1e-12;

/// Wrap an angle to `(-pi, pi]`.
pub fn wrap_angle(angle: f64) -> f64 {
    let mut a = libm::remainder(angle, TAU);
    if a <= -PI {
        a += TAU;
    }
    a
}

/// Wrap an angle to `[0, 2pi)`.
fn wrap_positive(angle: f64) -> f64 {
    let a = angle - TAU * libm::floor(angle / TAU);
    if a >= TAU {
        0.0
    } else {
        a
    }
}

/// Local-to-global rotation of an array at rail azimuth `phi`.
pub fn rotation_matrix(phi: f64) -> Mat3 {
    let (s, c) = (libm::sin(phi), libm::cos(phi));
    [[0.0, -s, c], [0.0, c, s], [-1.0, 0.0, 0.0]]
}

/// Outward unit normal of an array at rail azimuth `phi`.
pub fn outward_normal(phi: f64) -> Vec3 {
    [libm::cos(phi), libm::sin(phi), 0.0]
}

pub(crate) fn mat_vec(m: &Mat3, v: &Vec3) -> Vec3 {
    [dot(&m[0], v), dot(&m[1], v), dot(&m[2], v)]
}

pub(crate) fn mat_t_vec(m: &Mat3, v: &Vec3) -> Vec3 {
    [
        m[0][0] * v[0] + m[1][0] * v[1] + m[2][0] * v[2],
        m[0][1] * v[0] + m[1][1] * v[1] + m[2][1] * v[2],
        m[0][2] * v[0] + m[1][2] * v[1] + m[2][2] * v[2],
    ]
}

/// Shorter way around the circle between two azimuths, in `[0, pi]`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = libm::fabs(wrap_angle(a) - wrap_angle(b));
    d.min(TAU - d)
}

/// Factor pair of `n` closest to square, `rows <= cols`.
pub fn upa_factorization(n: usize) -> (usize, usize) {
    let mut rows = libm::sqrt(n as f64) as usize;
    while rows > 1 && n % rows != 0 {
        rows -= 1;
    }
    let rows = rows.max(1);
    (rows, n / rows)
}

/// How the minimum separation is specified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Separation {
    /// Minimum angular separation in radians; width derived as `2R tan(beta/2)`.
    Angle(f64),
    /// Physical array width in meters; angle derived as `2 atan(L / 2R)`.
    ArrayWidth(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeometryParams {
    pub rail_radius_m: f64,
    pub antennas_per_array: usize,
    pub separation: Separation,
    pub element_spacing_m: f64,
    /// `(rows, cols)`; `None` picks the factor pair of N closest to square.
    pub upa: Option<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationGeometry {
    rail_radius_m: f64,
    antennas_per_array: usize,
    array_width_m: f64,
    min_separation_rad: f64,
    array_azimuths_rad: Vec<f64>,
    element_spacing_m: f64,
    upa_rows: usize,
    upa_cols: usize,
    local_positions: Vec<Vec3>,
}

impl StationGeometry {
    /// Build a station with one array per entry of `azimuths`. Azimuths are
    /// wrapped to `(-pi, pi]` and must be pairwise separated by at least beta.
    pub fn new(params: &GeometryParams, azimuths: Vec<f64>) -> Result<Self> {
        let r = params.rail_radius_m;
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::invalid("rail_radius_m", "must be positive"));
        }
        let n = params.antennas_per_array;
        if n == 0 {
            return Err(Error::invalid("antennas_per_array", "must be at least 1"));
        }
        if azimuths.is_empty() {
            return Err(Error::invalid("array_count", "must be at least 1"));
        }
        let d = params.element_spacing_m;
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::invalid("element_spacing_m", "must be positive"));
        }
        let (width, beta) = match params.separation {
            Separation::Angle(beta) => {
                if !(beta.is_finite() && beta > 0.0 && beta < PI) {
                    return Err(Error::invalid("min_separation", "must lie in (0, pi)"));
                }
                (2.0 * r * libm::tan(beta / 2.0), beta)
            }
            Separation::ArrayWidth(l) => {
                if !(l.is_finite() && l > 0.0) {
                    return Err(Error::invalid("array_width_m", "must be positive"));
                }
                (l, 2.0 * libm::atan(l / (2.0 * r)))
            }
        };
        let (rows, cols) = params.upa.unwrap_or_else(|| upa_factorization(n));
        if rows == 0 || cols == 0 || rows * cols != n {
            return Err(Error::invalid(
                "upa",
                alloc::format!("{rows}x{cols} layout does not hold {n} antennas"),
            ));
        }
        let azimuths: Vec<f64> = azimuths.into_iter().map(wrap_angle).collect();
        if azimuths.iter().any(|a| !a.is_finite()) {
            return Err(Error::NonFinite("array azimuths"));
        }
        check_separation(&azimuths, beta)?;
        let local_positions = upa_positions(rows, cols, d);
        Ok(Self {
            rail_radius_m: r,
            antennas_per_array: n,
            array_width_m: width,
            min_separation_rad: beta,
            array_azimuths_rad: azimuths,
            element_spacing_m: d,
            upa_rows: rows,
            upa_cols: cols,
            local_positions,
        })
    }

    pub fn rail_radius(&self) -> f64 {
        self.rail_radius_m
    }

    pub fn array_count(&self) -> usize {
        self.array_azimuths_rad.len()
    }

    pub fn antennas_per_array(&self) -> usize {
        self.antennas_per_array
    }

    pub fn total_antennas(&self) -> usize {
        self.antennas_per_array * self.array_count()
    }

    pub fn array_width(&self) -> f64 {
        self.array_width_m
    }

    pub fn min_separation(&self) -> f64 {
        self.min_separation_rad
    }

    pub fn element_spacing(&self) -> f64 {
        self.element_spacing_m
    }

    pub fn upa_shape(&self) -> (usize, usize) {
        (self.upa_rows, self.upa_cols)
    }

    pub fn azimuths(&self) -> &[f64] {
        &self.array_azimuths_rad
    }

    pub fn azimuth(&self, b: usize) -> Result<f64> {
        self.array_azimuths_rad.get(b).copied().ok_or(Error::ArrayIndex {
            index: b,
            count: self.array_count(),
        })
    }

    /// Replace all azimuths, re-validating the separation constraint.
    pub fn with_azimuths(&self, azimuths: Vec<f64>) -> Result<Self> {
        if azimuths.len() != self.array_count() {
            return Err(Error::invalid(
                "azimuths",
                alloc::format!("expected {} entries, got {}", self.array_count(), azimuths.len()),
            ));
        }
        let azimuths: Vec<f64> = azimuths.into_iter().map(wrap_angle).collect();
        check_separation(&azimuths, self.min_separation_rad)?;
        let mut out = self.clone();
        out.array_azimuths_rad = azimuths;
        Ok(out)
    }

    /// Element positions in the array's local frame (row-major, centered).
    pub fn local_element_positions(&self) -> &[Vec3] {
        &self.local_positions
    }

    /// Global element positions of array `b` at its stored azimuth.
    pub fn global_element_positions(&self, b: usize) -> Result<Vec<Vec3>> {
        let phi = self.azimuth(b)?;
        Ok(self.global_positions_at(phi))
    }

    /// Global element positions of an array placed at `phi`, whether or not
    /// that placement is feasible.
    pub fn global_positions_at(&self, phi: f64) -> Vec<Vec3> {
        let rot = rotation_matrix(phi);
        let normal = outward_normal(phi);
        self.local_positions
            .iter()
            .map(|rl| {
                let v = mat_vec(&rot, rl);
                [
                    self.rail_radius_m * normal[0] + v[0],
                    self.rail_radius_m * normal[1] + v[1],
                    self.rail_radius_m * normal[2] + v[2],
                ]
            })
            .collect()
    }

    /// Arcs where array `b` may move with every other array held fixed.
    pub fn feasible_arcs(&self, b: usize) -> Result<FeasibleSet> {
        if b >= self.array_count() {
            return Err(Error::ArrayIndex {
                index: b,
                count: self.array_count(),
            });
        }
        let neighbors: Vec<f64> = self
            .array_azimuths_rad
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != b)
            .map(|(_, &a)| a)
            .collect();
        FeasibleSet::excluding(&neighbors, self.min_separation_rad).ok_or(Error::Infeasible { array: b })
    }
}

fn upa_positions(rows: usize, cols: usize, spacing: f64) -> Vec<Vec3> {
    let row_mid = (rows as f64 - 1.0) / 2.0;
    let col_mid = (cols as f64 - 1.0) / 2.0;
    let mut out = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            out.push([(i as f64 - row_mid) * spacing, (j as f64 - col_mid) * spacing, 0.0]);
        }
    }
    out
}

/// Check that every pair of azimuths is at least `beta` apart on the circle.
pub fn check_separation(azimuths: &[f64], beta: f64) -> Result<()> {
    for i in 0..azimuths.len() {
        for j in (i + 1)..azimuths.len() {
            let d = circular_distance(azimuths[i], azimuths[j]);
            if d < beta - SEPARATION_TOL {
                return Err(Error::SeparationViolated {
                    first: i,
                    second: j,
                    distance: d,
                    min: beta,
                });
            }
        }
    }
    Ok(())
}

/// `n` azimuths equally spaced as `-pi + 2 pi b / n`, `b = 1..=n`.
pub fn equally_spaced_azimuths(n: usize) -> Vec<f64> {
    (1..=n).map(|b| wrap_angle(-PI + TAU * b as f64 / n as f64)).collect()
}

/// Closed arc running counter-clockwise from `start` for `length` radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub start: f64,
    pub length: f64,
}

impl Arc {
    pub fn end(&self) -> f64 {
        wrap_angle(self.start + self.length)
    }

    fn contains(&self, phi: f64) -> bool {
        if self.length >= TAU {
            return true;
        }
        let offset = wrap_positive(phi - self.start);
        offset <= self.length + SEPARATION_TOL || offset >= TAU - SEPARATION_TOL
    }
}

/// Sorted, disjoint union of closed arcs.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibleSet {
    arcs: Vec<Arc>,
}

impl FeasibleSet {
    pub fn full_circle() -> Self {
        Self {
            arcs: alloc::vec![Arc {
                start: -PI,
                length: TAU,
            }],
        }
    }

    /// Sort arcs by wrapped start angle. Arcs are assumed disjoint.
    pub fn from_arcs(arcs: Vec<Arc>) -> Self {
        let mut arcs: Vec<Arc> = arcs
            .into_iter()
            .map(|a| Arc {
                start: wrap_angle(a.start),
                length: a.length,
            })
            .collect();
        arcs.sort_by(|a, b| a.start.total_cmp(&b.start));
        Self { arcs }
    }

    /// The circle minus the open arcs `(c - beta, c + beta)` around every
    /// center. `None` when nothing remains.
    pub fn excluding(centers: &[f64], beta: f64) -> Option<Self> {
        if centers.is_empty() {
            return Some(Self::full_circle());
        }
        // Forbidden intervals in [0, 2pi) coordinates, merged.
        let mut raw: Vec<(f64, f64)> = centers
            .iter()
            .map(|&c| {
                let lo = wrap_positive(c - beta);
                (lo, lo + 2.0 * beta)
            })
            .collect();
        raw.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(raw.len());
        for (lo, hi) in raw {
            match merged.last_mut() {
                Some(last) if lo < last.1 => last.1 = last.1.max(hi),
                _ => merged.push((lo, hi)),
            }
        }
        while merged.len() > 1 {
            let last = merged[merged.len() - 1];
            if last.1 - TAU > merged[0].0 {
                merged.pop();
                let first = &mut merged[0];
                first.1 = first.1.max(last.1 - TAU);
                first.0 = last.0 - TAU;
                // The widened first interval may now swallow its successors.
                while merged.len() > 1 && merged[1].0 < merged[0].1 {
                    let next = merged.remove(1);
                    merged[0].1 = merged[0].1.max(next.1);
                }
            } else {
                break;
            }
        }
        if merged.iter().any(|&(lo, hi)| hi - lo > TAU) {
            return None;
        }
        let mut arcs = Vec::with_capacity(merged.len());
        for (i, &(_, hi)) in merged.iter().enumerate() {
            let next_lo = if i + 1 < merged.len() {
                merged[i + 1].0
            } else {
                merged[0].0 + TAU
            };
            let length = next_lo - hi;
            if length < 0.0 {
                return None;
            }
            arcs.push(Arc { start: hi, length });
        }
        Some(Self::from_arcs(arcs))
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    pub fn contains(&self, phi: f64) -> bool {
        self.arcs.iter().any(|a| a.contains(phi))
    }

    /// Nearest feasible azimuth to `phi` (wrapped to `(-pi, pi]`).
    pub fn project(&self, phi: f64) -> Result<f64> {
        project_to_feasible(phi, self)
    }
}

/// Nearest point of `set` to `phi` in circular distance. Feasible inputs are
/// returned unchanged; ties go to the boundary with the smaller wrapped angle.
pub fn project_to_feasible(phi: f64, set: &FeasibleSet) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::Infeasible { array: usize::MAX });
    }
    let phi = wrap_angle(phi);
    if set.contains(phi) {
        return Ok(phi);
    }
    let mut best: Option<(f64, f64)> = None;
    for arc in set.arcs() {
        for boundary in [wrap_angle(arc.start), arc.end()] {
            let d = circular_distance(phi, boundary);
            best = match best {
                None => Some((d, boundary)),
                Some((bd, bb)) => {
                    if d < bd - 1e-15 || (libm::fabs(d - bd) <= 1e-15 && boundary < bb) {
                        Some((d, boundary))
                    } else {
                        Some((bd, bb))
                    }
                }
            };
        }
    }
    Ok(best.map(|(_, b)| b).unwrap_or(phi))
}

/// A user direction expressed in an array's local frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalPointing {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub elevation_rad: f64,
    pub azimuth_rad: f64,
}

impl LocalPointing {
    pub(crate) fn from_global(phi: f64, f: &Vec3) -> Self {
        let (s, c) = (libm::sin(phi), libm::cos(phi));
        Self::from_local(-f[2], -s * f[0] + c * f[1], c * f[0] + s * f[1])
    }

    pub(crate) fn from_local(x: f64, y: f64, z: f64) -> Self {
        let elevation_rad = -libm::asin(x.clamp(-1.0, 1.0));
        // Zenith/nadir in the local frame: azimuth is undefined, pin it to 0.
        let azimuth_rad = if y == 0.0 && z == 0.0 { 0.0 } else { libm::atan2(y, z) };
        Self {
            x,
            y,
            z,
            elevation_rad,
            azimuth_rad,
        }
    }
}

/// Express the global unit direction `f` in the local frame of an array at
/// `phi_b`.
pub fn local_pointing(phi_b: f64, f: &Vec3) -> Result<LocalPointing> {
    let n = norm(f);
    if !n.is_finite() || libm::fabs(n - 1.0) > 1e-9 {
        return Err(Error::NotUnitVector { norm: n });
    }
    let local = mat_t_vec(&rotation_matrix(phi_b), f);
    Ok(LocalPointing::from_local(local[0], local[1], local[2]))
}
