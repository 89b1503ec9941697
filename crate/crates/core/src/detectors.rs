//! Detector arrays on hyperplanes, Monte Carlo events and boosted observers.
//!
//! Hyperpixels are axis-aligned boxes in on-plane coordinates: `(x1, x2, x3)`
//! at fixed `t` for a spacelike array, `(x1, x2, t)` at fixed `x3` for a
//! timelike one. Each hyperpixel must aggregate a whole block of grid cells.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::kspace::{
    basis_with_fallback, dot, Channel, Epsilon, GridSpec, HyperplaneGrid, Lambda, ModeClass,
};
use crate::localization::{spacelike_density, timelike_counting, DensityField};
use crate::reduce;
use crate::spacetime::{
    boost_hyperplane, boost_vector, world_line_angle, BoostParameters, FourVector, Hyperplane, PlaneKind,
};
use crate::states::{band_edge_ratio, inv_two_pi_three_halves, norm_sq, PhotonAmplitude, BAND_EDGE_LIMIT};
use crate::transform::lattice_to_positions;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const TILE_TOL: f64 = 1e-9;

/// Largest `std/mean frequency` accepted by the wrong-basis comparison.
pub const NARROWBAND_LIMIT: f64 = 0.02;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorArraySpec {
    pub plane: Hyperplane,
    /// Hyperpixel extent along each on-plane axis.
    pub pixel: [f64; 3],
    /// `[lo, hi]` per on-plane axis.
    pub bounds: [[f64; 2]; 3],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct AxisLayout {
    first_cell: usize,
    cells_per_pixel: usize,
    pixels: usize,
}

fn near_integer(x: f64) -> Option<usize> {
    let r = x.round();
    if r >= 0.0 && (x - r).abs() <= TILE_TOL * x.abs().max(1.0) {
        Some(r as usize)
    } else {
        None
    }
}

fn planes_match(a: &Hyperplane, b: &Hyperplane) -> bool {
    let (na, nb) = (a.normal(), b.normal());
    (0..4).all(|i| (na[i] - nb[i]).abs() <= 1e-12)
        && (a.offset() - b.offset()).abs() <= 1e-12 * a.offset().abs().max(1.0)
}

impl DetectorArraySpec {
    pub fn new(plane: Hyperplane, pixel: [f64; 3], bounds: [[f64; 2]; 3]) -> Result<Self> {
        for a in 0..3 {
            let [lo, hi] = bounds[a];
            if !(pixel[a].is_finite() && pixel[a] > 0.0) {
                return Err(Error::Array(format!(
                    "pixel extent {} on axis {a} must be positive",
                    pixel[a]
                )));
            }
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(Error::Array(format!("bounds [{lo}, {hi}] on axis {a} are empty")));
            }
            if near_integer((hi - lo) / pixel[a]).is_none() {
                return Err(Error::Array(format!(
                    "pixels of extent {} do not tile [{lo}, {hi}] on axis {a}",
                    pixel[a]
                )));
            }
        }
        Ok(DetectorArraySpec { plane, pixel, bounds })
    }

    /// Array over the whole grid with hyperpixels of `block` cells.
    pub fn covering(grid: &HyperplaneGrid, block: [usize; 3]) -> Result<Self> {
        let g = grid.geometry();
        let sizes = grid.sizes();
        let mut pixel = [0.0; 3];
        let mut bounds = [[0.0; 2]; 3];
        for a in 0..3 {
            if block[a] == 0 || !sizes[a].is_multiple_of(block[a]) {
                return Err(Error::Array(format!(
                    "block {} does not divide {} cells on axis {a}",
                    block[a], sizes[a]
                )));
            }
            let d = g.dy(a);
            pixel[a] = block[a] as f64 * d;
            bounds[a] = [g.y0[a] - 0.5 * d, g.y0[a] + (sizes[a] as f64 - 0.5) * d];
        }
        DetectorArraySpec::new(*grid.plane(), pixel, bounds)
    }

    pub fn pixel_counts(&self) -> [usize; 3] {
        std::array::from_fn(|a| {
            near_integer((self.bounds[a][1] - self.bounds[a][0]) / self.pixel[a]).unwrap_or(0)
        })
    }

    pub fn len(&self) -> usize {
        self.pixel_counts().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn pixel_index(&self, id: [usize; 3]) -> usize {
        let c = self.pixel_counts();
        (id[0] * c[1] + id[1]) * c[2] + id[2]
    }

    pub fn pixel_id(&self, index: usize) -> [usize; 3] {
        let c = self.pixel_counts();
        [index / (c[1] * c[2]), (index / c[2]) % c[1], index % c[2]]
    }

    /// On-plane coordinates of a hyperpixel center.
    pub fn pixel_center(&self, id: [usize; 3]) -> [f64; 3] {
        std::array::from_fn(|a| self.bounds[a][0] + (id[a] as f64 + 0.5) * self.pixel[a])
    }

    fn layout(&self, grid: &HyperplaneGrid) -> Result<[AxisLayout; 3]> {
        if !planes_match(&self.plane, grid.plane()) {
            return Err(Error::PlaneMismatch);
        }
        let g = grid.geometry();
        let sizes = grid.sizes();
        let mut out = [AxisLayout {
            first_cell: 0,
            cells_per_pixel: 0,
            pixels: 0,
        }; 3];
        for a in 0..3 {
            let d = g.dy(a);
            let edge0 = g.y0[a] - 0.5 * d;
            let cells = near_integer(self.pixel[a] / d)
                .filter(|c| *c > 0)
                .ok_or_else(|| {
                    Error::Array(format!(
                        "pixel extent {} on axis {a} is not a whole number of cells of size {d}",
                        self.pixel[a]
                    ))
                })?;
            let first = near_integer((self.bounds[a][0] - edge0) / d)
                .ok_or_else(|| Error::Array(format!("lower bound on axis {a} is not on a cell edge")))?;
            let pixels = self.pixel_counts()[a];
            if first + pixels * cells > sizes[a] {
                return Err(Error::Array(format!("bounds on axis {a} extend past the grid")));
            }
            out[a] = AxisLayout {
                first_cell: first,
                cells_per_pixel: cells,
                pixels,
            };
        }
        Ok(out)
    }

    /// Whether the array covers every cell of the grid.
    pub fn covers(&self, grid: &HyperplaneGrid) -> Result<bool> {
        let l = self.layout(grid)?;
        let sizes = grid.sizes();
        Ok((0..3).all(|a| l[a].first_cell == 0 && l[a].pixels * l[a].cells_per_pixel == sizes[a]))
    }
}

#[derive(Clone, Debug)]
pub struct DetectionDistribution {
    pub array: DetectorArraySpec,
    pub probabilities: Vec<f64>,
}

impl DetectionDistribution {
    pub fn total(&self) -> f64 {
        reduce::sum_f64(self.probabilities.len(), |i| self.probabilities[i])
    }

    pub fn coverage_deficit(&self) -> f64 {
        1.0 - self.total()
    }

    /// Sums blocks of `factor` hyperpixels into one.
    pub fn coarsen(&self, factor: [usize; 3]) -> Result<DetectionDistribution> {
        let counts = self.array.pixel_counts();
        if (0..3).any(|a| factor[a] == 0 || !counts[a].is_multiple_of(factor[a])) {
            return Err(Error::Array(format!(
                "factor {factor:?} does not divide {counts:?}"
            )));
        }
        let pixel = std::array::from_fn(|a| self.array.pixel[a] * factor[a] as f64);
        let array = DetectorArraySpec::new(self.array.plane, pixel, self.array.bounds)?;
        let mut probabilities = vec![0.0; array.len()];
        for (i, p) in self.probabilities.iter().enumerate() {
            let id = self.array.pixel_id(i);
            let coarse = array.pixel_index(std::array::from_fn(|a| id[a] / factor[a]));
            probabilities[coarse] += p;
        }
        Ok(DetectionDistribution { array, probabilities })
    }
}

/// Per-cell probability density of the state on its plane.
pub fn plane_density(psi: &PhotonAmplitude) -> Result<DensityField> {
    match psi.grid().kind() {
        PlaneKind::Spacelike => spacelike_density(psi),
        PlaneKind::Timelike => timelike_counting(psi),
    }
}

/// Integrates the plane density over each hyperpixel of an ideal array.
pub fn detection_probabilities(
    psi: &PhotonAmplitude,
    array: &DetectorArraySpec,
) -> Result<DetectionDistribution> {
    let grid = psi.grid();
    let layout = array.layout(grid)?;
    let density = plane_density(psi)?;
    let dv = grid.cell_volume();
    let geom = grid.geometry();
    let probabilities = (0..array.len())
        .into_par_iter()
        .map(|p| {
            let id = array.pixel_id(p);
            let start: [usize; 3] =
                std::array::from_fn(|a| layout[a].first_cell + id[a] * layout[a].cells_per_pixel);
            let [b0, b1, b2] = std::array::from_fn(|a| layout[a].cells_per_pixel);
            let mut s = 0.0;
            for i0 in 0..b0 {
                for i1 in 0..b1 {
                    for i2 in 0..b2 {
                        s += density.values[geom.join([start[0] + i0, start[1] + i1, start[2] + i2])];
                    }
                }
            }
            s * dv
        })
        .collect();
    Ok(DetectionDistribution {
        array: *array,
        probabilities,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub pixel: [usize; 3],
    pub center: [f64; 3],
    pub draw: u64,
}

/// `n` categorical draws from the distribution. Draw `i` uses stream `i` of
/// a ChaCha8 generator keyed by `seed`, so results do not depend on the
/// thread count.
pub fn sample_events(dist: &DetectionDistribution, n: u64, seed: u64) -> Result<Vec<EventRecord>> {
    let mut cdf = Vec::with_capacity(dist.probabilities.len());
    let mut acc = 0.0;
    for p in &dist.probabilities {
        acc += p.max(0.0);
        cdf.push(acc);
    }
    if !(acc > 0.0) {
        return Err(Error::EmptyDistribution);
    }
    let base = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .into_par_iter()
        .map(|draw| {
            let mut rng = base.clone();
            rng.set_stream(draw);
            let u: f64 = rng.random::<f64>() * acc;
            let mut i = cdf.partition_point(|c| *c <= u);
            // never land on a zero-probability pixel at the end of the table
            while i > 0 && (i >= cdf.len() || dist.probabilities[i] <= 0.0) {
                i -= 1;
            }
            let pixel = dist.array.pixel_id(i);
            EventRecord {
                pixel,
                center: dist.array.pixel_center(pixel),
                draw,
            }
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChiSquareReport {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson goodness of fit of event counts against the distribution. Bins
/// expecting fewer than five events are pooled.
pub fn chi_square_test(dist: &DetectionDistribution, events: &[EventRecord]) -> Result<ChiSquareReport> {
    let total = dist.total();
    if !(total > 0.0) {
        return Err(Error::EmptyDistribution);
    }
    let mut counts = vec![0u64; dist.probabilities.len()];
    for e in events {
        counts[dist.array.pixel_index(e.pixel)] += 1;
    }
    let n = events.len() as f64;
    let (mut stat, mut bins) = (0.0, 0usize);
    let (mut pool_obs, mut pool_exp) = (0.0, 0.0);
    for (c, p) in counts.iter().zip(&dist.probabilities) {
        let e = n * p / total;
        if e >= 5.0 {
            stat += (*c as f64 - e).powi(2) / e;
            bins += 1;
        } else {
            pool_obs += *c as f64;
            pool_exp += e;
        }
    }
    if pool_exp > 0.0 {
        stat += (pool_obs - pool_exp).powi(2) / pool_exp;
        bins += 1;
    }
    let dof = bins.saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        let chi = ChiSquared::new(dof as f64).map_err(|e| Error::Array(e.to_string()))?;
        1.0 - chi.cdf(stat)
    };
    Ok(ChiSquareReport {
        statistic: stat,
        dof,
        p_value,
    })
}

/// Power-weighted mean wave four-vector over propagating modes.
pub fn mean_wave_vector(psi: &PhotonAmplitude) -> Result<FourVector> {
    let grid = psi.grid();
    let (mut sum, mut wsum) = (FourVector::default(), 0.0);
    for c in Channel::ALL {
        for (idx, v) in psi.channel(c).iter().enumerate() {
            let w = v.norm_sqr() * grid.weights()[idx];
            if w > 0.0 {
                if let Some(k) = grid.four_vector(idx, c.epsilon) {
                    sum = sum + k * w;
                    wsum += w;
                }
            }
        }
    }
    if wsum > 0.0 {
        Ok(sum * (1.0 / wsum))
    } else {
        Err(Error::ZeroState)
    }
}

/// `max_a std(k_a) / mean |k0|` over the power distribution.
pub fn bandwidth_ratio(psi: &PhotonAmplitude) -> Result<f64> {
    let grid = psi.grid();
    let (mut w, mut m1, mut m2, mut om) = (0.0, [0.0; 3], [0.0; 3], 0.0);
    for c in Channel::ALL {
        for (idx, v) in psi.channel(c).iter().enumerate() {
            let p = v.norm_sqr() * grid.weights()[idx];
            if p == 0.0 {
                continue;
            }
            let Some(k) = grid.four_vector(idx, c.epsilon) else {
                continue;
            };
            let kp = grid.k_on_plane(idx);
            w += p;
            om += p * k.time().abs();
            for a in 0..3 {
                m1[a] += p * kp[a];
                m2[a] += p * kp[a] * kp[a];
            }
        }
    }
    if w == 0.0 {
        return Err(Error::ZeroState);
    }
    let mean_omega = om / w;
    Ok((0..3)
        .map(|a| {
            let mean = m1[a] / w;
            (m2[a] / w - mean * mean).max(0.0).sqrt()
        })
        .fold(0.0, f64::max)
        / mean_omega)
}

/// Naive and covariant counting densities on a timelike plane.
#[derive(Clone, Debug)]
pub struct WrongBasisReport {
    pub naive: DensityField,
    pub covariant: DensityField,
    /// Ratio of the integrated densities.
    pub ratio: f64,
    pub bandwidth: f64,
}

fn weighted_density(psi: &PhotonAmplitude, amp: impl Fn(usize) -> f64 + Sync) -> DensityField {
    let grid = psi.grid().clone();
    let scale = grid.k_cell_volume() * inv_two_pi_three_halves();
    let mut values = vec![0.0; grid.len()];
    for c in Channel::ALL {
        let a = psi.channel(c);
        let mut v: Vec<Complex64> = (0..grid.len())
            .into_par_iter()
            .map(|idx| {
                if grid.mode_class(idx) != ModeClass::Propagating || a[idx] == ZERO {
                    ZERO
                } else {
                    a[idx] * grid.normal_phase(idx, c.epsilon) * (scale * amp(idx))
                }
            })
            .collect();
        lattice_to_positions(&mut v, grid.geometry());
        for (d, x) in values.iter_mut().zip(&v) {
            *d += x.norm_sqr();
        }
    }
    DensityField { grid, values }
}

/// Compares counting with spacelike `1/sqrt(2 omega)` weights against the
/// covariant `1/sqrt(2|k3|)` weights on a timelike plane.
pub fn naive_vs_covariant_ratio(psi: &PhotonAmplitude) -> Result<WrongBasisReport> {
    let grid = psi.grid();
    if grid.kind() != PlaneKind::Timelike {
        return Err(Error::WrongPlaneKind {
            expected: PlaneKind::Timelike.name(),
            found: grid.kind().name(),
        });
    }
    let bandwidth = bandwidth_ratio(psi)?;
    if bandwidth > NARROWBAND_LIMIT {
        return Err(Error::Broadband {
            ratio: bandwidth,
            limit: NARROWBAND_LIMIT,
        });
    }
    let naive = weighted_density(psi, |idx| 1.0 / (2.0 * grid.k_on_plane(idx)[2].abs()).sqrt());
    let covariant = weighted_density(psi, |idx| 1.0 / (2.0 * grid.abs_k_sigma(idx)).sqrt());
    let ratio = naive.total() / covariant.total();
    Ok(WrongBasisReport {
        naive,
        covariant,
        ratio,
        bandwidth,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObserverFrame {
    pub boost: BoostParameters,
}

impl ObserverFrame {
    pub fn new(beta: f64) -> Result<Self> {
        Ok(ObserverFrame {
            boost: BoostParameters::new(beta)?,
        })
    }
}

/// World line of a fixed array point as seen by the moving observer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum WorldLine {
    /// `t' = intercept + slope * x3'`, from a spacelike array at `t = a`.
    TimeOfX3 { intercept: f64, slope: f64 },
    /// `x3' = intercept + slope * t'`, from a timelike array at `x3 = b`.
    X3OfTime { intercept: f64, slope: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoostedView {
    pub array: DetectorArraySpec,
    pub line: WorldLine,
    /// Angle of the line to its rest-frame orientation, `atan(beta)`.
    pub angle: f64,
}

/// The array's hyperplane as seen from `frame`, with the line traced by its
/// pixels. Pixel extents and bounds are kept in the array's own coordinates.
pub fn boosted_view(array: &DetectorArraySpec, frame: &ObserverFrame) -> BoostedView {
    let b = &frame.boost;
    let plane = boost_hyperplane(&array.plane, b);
    let line = match array.plane.kind() {
        PlaneKind::Spacelike => WorldLine::TimeOfX3 {
            intercept: array.plane.offset() / b.gamma(),
            slope: b.beta(),
        },
        PlaneKind::Timelike => WorldLine::X3OfTime {
            intercept: array.plane.offset() / b.gamma(),
            slope: b.beta(),
        },
    };
    BoostedView {
        array: DetectorArraySpec { plane, ..*array },
        line,
        angle: world_line_angle(b),
    }
}

/// Index of the on-plane axis a boost along x3 acts on: `k3` on spacelike
/// planes, `k0` on timelike ones.
const BOOST_AXIS: usize = 2;

fn on_plane_of(k: &FourVector, kind: PlaneKind) -> [f64; 3] {
    match kind {
        PlaneKind::Spacelike => k.spatial(),
        PlaneKind::Timelike => [k[1], k[2], k[0]],
    }
}

/// Grid for the boosted frame: same transverse lattice, boost-axis lattice
/// stretched by the local Jacobian at the packet's mean wave vector, and
/// windows re-centered on the packet.
pub fn boosted_grid_spec(src: &HyperplaneGrid, mean_k: &FourVector, frame: &ObserverFrame) -> GridSpec {
    let b = &frame.boost;
    let spec = src.spec();
    if b.beta() == 0.0 {
        return spec.clone();
    }
    let kind = src.kind();
    let kp = boost_vector(mean_k, b);
    let jacobian = match kind {
        PlaneKind::Spacelike => kp[0] / mean_k[0],
        PlaneKind::Timelike => kp[3] / mean_k[3],
    };
    // map the source lattice center along the line through the mean
    let mut center_k = *mean_k;
    match kind {
        PlaneKind::Spacelike => {
            center_k.0[3] = spec.k_center[2];
            let s = center_k.spatial();
            center_k.0[0] = mean_k[0].signum() * (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt();
        }
        PlaneKind::Timelike => {
            center_k.0[0] = spec.k_center[2];
            let k3sq = center_k[0] * center_k[0] - center_k[1] * center_k[1] - center_k[2] * center_k[2];
            center_k.0[3] = mean_k[3].signum() * k3sq.max(0.0).sqrt();
        }
    }
    let center_kp = boost_vector(&center_k, b);
    let mut k_center = spec.k_center;
    k_center[BOOST_AXIS] = on_plane_of(&center_kp, kind)[BOOST_AXIS];
    let mut spacings = spec.spacings;
    spacings[BOOST_AXIS] /= jacobian.abs();

    // packet world line: rest event at the grid center, velocity k/k0
    let xc = spec.x_center;
    let (event, plane) = match kind {
        PlaneKind::Spacelike => {
            let a = spec.plane.offset();
            (
                FourVector::new(a, xc[0], xc[1], xc[2]),
                Hyperplane::spacelike(b.gamma() * a),
            )
        }
        PlaneKind::Timelike => {
            let bb = spec.plane.offset();
            (
                FourVector::new(xc[2], xc[0], xc[1], bb),
                Hyperplane::timelike(b.gamma() * bb),
            )
        }
    };
    let ep = boost_vector(&event, b);
    let v = [kp[1] / kp[0], kp[2] / kp[0], kp[3] / kp[0]];
    let x_center = match kind {
        PlaneKind::Spacelike => {
            let dt = plane.offset() - ep[0];
            [ep[1] + v[0] * dt, ep[2] + v[1] * dt, ep[3] + v[2] * dt]
        }
        PlaneKind::Timelike => {
            let dt = (plane.offset() - ep[3]) / v[2];
            [ep[1] + v[0] * dt, ep[2] + v[1] * dt, ep[0] + dt]
        }
    };
    GridSpec {
        plane,
        sizes: spec.sizes,
        spacings,
        k_center,
        x_center,
        k_ref: spec.k_ref,
    }
}

/// Source line values along the boost axis, evaluated at arbitrary
/// wavenumbers by the trigonometric interpolant of the on-plane field.
struct LineInterpolant {
    f: Vec<Complex64>,
    y0: f64,
    dy: f64,
    sign: f64,
    k_lo: f64,
    k_hi: f64,
}

impl LineInterpolant {
    fn eval(&self, k: f64) -> Complex64 {
        if k < self.k_lo || k >= self.k_hi {
            return ZERO;
        }
        let n = self.f.len();
        let step = Complex64::from_polar(1.0, -self.sign * k * self.dy);
        let mut ph = Complex64::from_polar(1.0, -self.sign * k * self.y0);
        let mut acc = ZERO;
        for (j, fj) in self.f.iter().enumerate() {
            acc += fj * ph;
            ph *= step;
            if j % 64 == 63 {
                // refresh against drift of the recurrence
                ph = Complex64::from_polar(1.0, -self.sign * k * (self.y0 + (j + 1) as f64 * self.dy));
            }
        }
        acc / n as f64
    }
}

/// `exp(i k_normal offset)` for a real wave vector on the plane.
fn plane_phase(k: &FourVector, plane: &Hyperplane) -> Complex64 {
    match plane.kind() {
        PlaneKind::Spacelike => Complex64::from_polar(1.0, -k[0] * plane.offset()),
        PlaneKind::Timelike => Complex64::from_polar(1.0, k[3] * plane.offset()),
    }
}

/// The state as described in the boosted frame, on `target`: amplitudes
/// follow `k' = L k` and polarizations are boosted, returned to Coulomb
/// gauge and re-projected onto the target basis.
pub fn boost_state(
    psi: &PhotonAmplitude,
    frame: &ObserverFrame,
    target: &Arc<HyperplaneGrid>,
) -> Result<PhotonAmplitude> {
    let src = psi.grid();
    let kind = src.kind();
    if target.kind() != kind {
        return Err(Error::WrongPlaneKind {
            expected: kind.name(),
            found: target.kind().name(),
        });
    }
    let (gs, gt) = (src.geometry(), target.geometry());
    for a in 0..BOOST_AXIS {
        if gs.dims[a] != gt.dims[a]
            || (gs.dk[a] - gt.dk[a]).abs() > 1e-12 * gs.dk[a]
            || (gs.k_center[a] - gt.k_center[a]).abs() > 1e-12 * gs.dk[a]
        {
            return Err(Error::GridMismatch);
        }
    }
    let b = &frame.boost;
    let inv = b.inverse();
    let axis = psi.reference_axis();
    let n = gs.dims[BOOST_AXIS];
    let lines = gs.dims[0] * gs.dims[1];
    let nt = gt.dims[BOOST_AXIS];
    let half = (n / 2) as f64;
    let k_lo = gs.k_center[BOOST_AXIS] - (half + 0.5) * gs.dk[BOOST_AXIS];
    let k_hi = gs.k_center[BOOST_AXIS] + (half - 0.5) * gs.dk[BOOST_AXIS];
    let sign = gs.signs[BOOST_AXIS];
    let dy = gs.dy(BOOST_AXIS);
    let y0 = gs.y0[BOOST_AXIS];
    // e^{i s k_q y_j}
    let table: Vec<Complex64> = (0..n * n)
        .map(|qj| {
            let (q, j) = (qj / n, qj % n);
            Complex64::from_polar(
                1.0,
                sign * gs.k_component(BOOST_AXIS, q) * gs.y_component(BOOST_AXIS, j),
            )
        })
        .collect();

    // out[line][q2'][channel]
    let per_line: Vec<Vec<[Complex64; 4]>> = (0..lines)
        .into_par_iter()
        .map(|line| {
            let (q0, q1) = (line / gs.dims[1], line % gs.dims[1]);
            let mut out = vec![[ZERO; 4]; nt];
            let interps: [Option<LineInterpolant>; 4] = Channel::ALL.map(|c| {
                let a = psi.channel(c);
                let g: Vec<Complex64> = (0..n)
                    .map(|q| {
                        let idx = gs.join([q0, q1, q]);
                        if a[idx] == ZERO || src.mode_class(idx) != ModeClass::Propagating {
                            ZERO
                        } else {
                            a[idx] * src.normal_phase(idx, c.epsilon)
                        }
                    })
                    .collect();
                if g.iter().all(|v| *v == ZERO) {
                    return None;
                }
                let f = (0..n)
                    .map(|j| (0..n).map(|q| g[q] * table[q * n + j]).sum())
                    .collect();
                Some(LineInterpolant {
                    f,
                    y0,
                    dy,
                    sign,
                    k_lo,
                    k_hi,
                })
            });
            if interps.iter().all(Option::is_none) {
                return out;
            }
            for (q2, slot) in out.iter_mut().enumerate() {
                let tidx = gt.join([q0, q1, q2]);
                if target.mode_class(tidx) != ModeClass::Propagating {
                    continue;
                }
                for eps in Epsilon::BOTH {
                    let Some(kp) = target.four_vector(tidx, eps) else {
                        continue;
                    };
                    let k = boost_vector(&kp, &inv);
                    let dir = match kind {
                        PlaneKind::Spacelike => k[0],
                        PlaneKind::Timelike => k[3],
                    };
                    if Epsilon::of(dir) != eps || dir == 0.0 {
                        continue;
                    }
                    let s = on_plane_of(&k, kind)[BOOST_AXIS];
                    let back = plane_phase(&k, src.plane()).conj();
                    let vals = Lambda::BOTH.map(|l| {
                        interps[Channel::new(l, eps).index()]
                            .as_ref()
                            .map_or(ZERO, |it| it.eval(s) * back)
                    });
                    if vals.iter().all(|v| *v == ZERO) {
                        continue;
                    }
                    let (Ok(bs), Ok(bt)) = (
                        basis_with_fallback(k.spatial(), axis),
                        basis_with_fallback(kp.spatial(), axis),
                    ) else {
                        continue;
                    };
                    // boosted, gauge-fixed source polarizations
                    let gauge = Lambda::BOTH.map(|l| {
                        let e = boost_vector(&bs.four_vector(l), b);
                        let s = e[0] / kp[0];
                        [e[1] - s * kp[1], e[2] - s * kp[2], e[3] - s * kp[3]]
                    });
                    for lt in Lambda::BOTH {
                        let et = bt.get(lt);
                        slot[Channel::new(lt, eps).index()] = Lambda::BOTH
                            .iter()
                            .map(|ls| vals[ls.index()] * dot(et, gauge[ls.index()]))
                            .sum();
                    }
                }
            }
            out
        })
        .collect();

    let mut channels: [Vec<Complex64>; 4] = std::array::from_fn(|_| vec![ZERO; target.len()]);
    for (line, vals) in per_line.into_iter().enumerate() {
        let (q0, q1) = (line / gs.dims[1], line % gs.dims[1]);
        for (q2, v) in vals.into_iter().enumerate() {
            let tidx = gt.join([q0, q1, q2]);
            for c in 0..4 {
                channels[c][tidx] = v[c];
            }
        }
    }
    let out = PhotonAmplitude::from_channels(target.clone(), axis, channels)?;
    let edge = band_edge_ratio(&out);
    if edge >= BAND_EDGE_LIMIT {
        return Err(Error::Support(format!(
            "boosted state reaches the band edge: boundary/peak power {edge:.3e} >= {BAND_EDGE_LIMIT:e}"
        )));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FrameInvariance {
    pub rest_probability: f64,
    pub boosted_probability: f64,
    pub rest_norm: f64,
    pub boosted_norm: f64,
    /// Relative deviation of the total detection probability.
    pub deviation: f64,
    pub norm_deviation: f64,
}

/// Total detection probability and norm in the rest frame and in `frame`.
/// The array must cover the whole grid; a full plane catches the same total
/// on any hyperplane of the same kind, so the boosted total is taken on the
/// boosted frame's own plane.
pub fn frame_invariance_check(
    psi: &PhotonAmplitude,
    array: &DetectorArraySpec,
    frame: &ObserverFrame,
) -> Result<FrameInvariance> {
    if !array.covers(psi.grid())? {
        return Err(Error::Array(
            "frame comparison needs an array covering the whole grid".into(),
        ));
    }
    let rest_probability = detection_probabilities(psi, array)?.total();
    let rest_norm = norm_sq(psi);
    let mean = mean_wave_vector(psi)?;
    let target = Arc::new(boosted_grid_spec(psi.grid(), &mean, frame).build()?);
    let boosted = boost_state(psi, frame, &target)?;
    let full = DetectorArraySpec::covering(&target, [1, 1, 1])?;
    let boosted_probability = detection_probabilities(&boosted, &full)?.total();
    let boosted_norm = norm_sq(&boosted);
    Ok(FrameInvariance {
        rest_probability,
        boosted_probability,
        rest_norm,
        boosted_norm,
        deviation: (boosted_probability - rest_probability).abs() / rest_probability,
        norm_deviation: (boosted_norm - rest_norm).abs() / rest_norm,
    })
}

/// Angle of the packet's mean direction to x3, in degrees.
pub fn mean_angle_degrees(psi: &PhotonAmplitude) -> Result<f64> {
    let k = mean_wave_vector(psi)?;
    let s = k.spatial();
    let r = (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt();
    Ok((s[2] / r).acos() * 180.0 / PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{make_gaussian_packet, PacketSpec};

    fn spacelike_packet() -> PhotonAmplitude {
        let g = Arc::new(
            GridSpec::from_k_spacing(Hyperplane::spacelike(0.0), [16, 16, 32], [0.25; 3])
                .with_k_center([0.0, 0.0, 6.0])
                .build()
                .unwrap(),
        );
        make_gaussian_packet(
            &PacketSpec::new([0.0, 0.0, 6.0], [0.25; 3], Lambda::One, Epsilon::Plus),
            &g,
        )
        .unwrap()
    }

    #[test]
    fn full_array_catches_everything() {
        let psi = spacelike_packet();
        let arr = DetectorArraySpec::covering(psi.grid(), [4, 4, 8]).unwrap();
        let d = detection_probabilities(&psi, &arr).unwrap();
        assert!((d.total() - 1.0).abs() < 1e-12);
        assert!(d.probabilities.iter().all(|p| *p >= 0.0));
        let fine =
            detection_probabilities(&psi, &DetectorArraySpec::covering(psi.grid(), [1, 1, 1]).unwrap())
                .unwrap();
        assert!((fine.total() - d.total()).abs() < 1e-12);
        let c = fine.coarsen([4, 4, 8]).unwrap();
        for (a, b) in c.probabilities.iter().zip(&d.probabilities) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn misaligned_arrays_rejected() {
        let psi = spacelike_packet();
        let arr = DetectorArraySpec::covering(psi.grid(), [4, 4, 8]).unwrap();
        let shifted = DetectorArraySpec::new(
            arr.plane,
            arr.pixel,
            arr.bounds.map(|[lo, hi]| [lo + 0.1, hi + 0.1]),
        )
        .unwrap();
        assert!(detection_probabilities(&psi, &shifted).is_err());
        let other = DetectorArraySpec {
            plane: Hyperplane::spacelike(1.0),
            ..arr
        };
        assert!(matches!(
            detection_probabilities(&psi, &other),
            Err(Error::PlaneMismatch)
        ));
    }

    #[test]
    fn sampling_is_deterministic_and_single_pixel_safe() {
        let psi = spacelike_packet();
        let d = detection_probabilities(&psi, &DetectorArraySpec::covering(psi.grid(), [4, 4, 8]).unwrap())
            .unwrap();
        let a = sample_events(&d, 1000, 7).unwrap();
        let b = sample_events(&d, 1000, 7).unwrap();
        assert_eq!(a, b);
        let mut single = d.clone();
        single.probabilities.iter_mut().for_each(|p| *p = 0.0);
        single.probabilities[5] = 0.3;
        let ev = sample_events(&single, 200, 1).unwrap();
        assert!(ev.iter().all(|e| single.array.pixel_index(e.pixel) == 5));
        single.probabilities[5] = 0.0;
        assert!(matches!(
            sample_events(&single, 1, 1),
            Err(Error::EmptyDistribution)
        ));
    }

    #[test]
    fn boosted_view_examples() {
        let arr = DetectorArraySpec::new(Hyperplane::spacelike(2.0), [1.0; 3], [[0.0, 4.0]; 3]).unwrap();
        let v = boosted_view(&arr, &ObserverFrame::new(0.6).unwrap());
        assert_eq!(
            v.line,
            WorldLine::TimeOfX3 {
                intercept: 1.6,
                slope: 0.6
            }
        );
        let back = boosted_view(&v.array, &ObserverFrame::new(-0.6).unwrap());
        assert!(planes_match(&back.array.plane, &arr.plane));
        let t = DetectorArraySpec::new(Hyperplane::timelike(1.0), [1.0; 3], [[0.0, 4.0]; 3]).unwrap();
        let v = boosted_view(&t, &ObserverFrame::new(0.6).unwrap());
        assert_eq!(
            v.line,
            WorldLine::X3OfTime {
                intercept: 0.8,
                slope: 0.6
            }
        );
        let still = boosted_view(&t, &ObserverFrame::new(0.0).unwrap());
        assert_eq!(still.array.plane, t.plane);
    }

    #[test]
    fn zero_boost_is_exact() {
        let psi = spacelike_packet();
        let arr = DetectorArraySpec::covering(psi.grid(), [1, 1, 1]).unwrap();
        let r = frame_invariance_check(&psi, &arr, &ObserverFrame::new(0.0).unwrap()).unwrap();
        assert!(r.deviation < 1e-12 && r.norm_deviation < 1e-12);
    }
}
