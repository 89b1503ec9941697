//! Discretized k-space on a hyperplane: FFT-compatible lattices, the
//! massless dispersion relation, the normal component `k_sigma`, the
//! invariant measure `dkappa / 2|k_sigma|`, and transverse polarization bases.
//!
//! On-plane axes are `(x1, x2, x3)` / `(k1, k2, k3)` for a spacelike plane
//! `t = a` and `(x1, x2, t)` / `(k1, k2, k0)` for a timelike plane `x3 = b`.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spacetime::{FourVector, Hyperplane, PlaneKind};
use crate::transform::{signed_frequency, LatticeGeometry};

/// Modes with `|k_sigma|` below this fraction of the reference wavenumber are
/// dropped from quadrature.
pub const CUTOFF_FRACTION: f64 = 1e-6;

/// Largest relative weight a packet may place on dropped modes.
pub const EXCLUDED_WEIGHT_LIMIT: f64 = 1e-10;

/// Flux direction across the plane: the sign of `k_sigma`. On evanescent
/// modes it labels the side toward which the mode decays.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Epsilon {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Epsilon {
    pub const BOTH: [Epsilon; 2] = [Epsilon::Plus, Epsilon::Minus];

    pub fn sign(self) -> f64 {
        match self {
            Epsilon::Plus => 1.0,
            Epsilon::Minus => -1.0,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Epsilon::Plus => 0,
            Epsilon::Minus => 1,
        }
    }

    pub fn of(x: f64) -> Epsilon {
        if x < 0.0 {
            Epsilon::Minus
        } else {
            Epsilon::Plus
        }
    }

    pub fn flip(self) -> Epsilon {
        match self {
            Epsilon::Plus => Epsilon::Minus,
            Epsilon::Minus => Epsilon::Plus,
        }
    }
}

impl fmt::Display for Epsilon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Epsilon::Plus => "+",
            Epsilon::Minus => "-",
        })
    }
}

/// Polarization label of the linear basis `e_1`, `e_2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Lambda {
    One,
    Two,
}

impl Lambda {
    pub const BOTH: [Lambda; 2] = [Lambda::One, Lambda::Two];

    pub fn index(self) -> usize {
        match self {
            Lambda::One => 0,
            Lambda::Two => 1,
        }
    }

    pub fn number(self) -> u8 {
        self.index() as u8 + 1
    }
}

impl TryFrom<u8> for Lambda {
    type Error = String;
    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Lambda::One),
            2 => Ok(Lambda::Two),
            other => Err(format!("polarization index must be 1 or 2, got {other}")),
        }
    }
}

impl From<Lambda> for u8 {
    fn from(l: Lambda) -> u8 {
        l.number()
    }
}

/// One `(lambda, epsilon)` channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Channel {
    pub lambda: Lambda,
    pub epsilon: Epsilon,
}

impl Channel {
    pub const ALL: [Channel; 4] = [
        Channel::new(Lambda::One, Epsilon::Plus),
        Channel::new(Lambda::One, Epsilon::Minus),
        Channel::new(Lambda::Two, Epsilon::Plus),
        Channel::new(Lambda::Two, Epsilon::Minus),
    ];

    pub const fn new(lambda: Lambda, epsilon: Epsilon) -> Self {
        Channel { lambda, epsilon }
    }

    pub fn index(self) -> usize {
        2 * self.lambda.index() + self.epsilon.index()
    }
}

/// How a lattice point is treated by quadrature.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeClass {
    Propagating,
    /// Timelike plane with `k1^2 + k2^2 > k0^2`: imaginary `k3`.
    Evanescent,
    /// `|k_sigma|` below the cutoff.
    Excluded,
}

/// Parameters of a hyperplane grid. Grids are always built on a canonical
/// plane (`t = a` or `x3 = b`); boosted planes are handled by boosting states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub plane: Hyperplane,
    pub sizes: [usize; 3],
    /// Position-space spacings along the on-plane axes.
    pub spacings: [f64; 3],
    /// Carrier offset of the k lattice; `m` runs over `[-N/2, N/2)` around it.
    #[serde(default)]
    pub k_center: [f64; 3],
    /// Center of the position grid.
    #[serde(default)]
    pub x_center: [f64; 3],
    /// Reference wavenumber for the `|k_sigma|` cutoff. Defaults to the
    /// larger of `|k_center|` and the half band width.
    #[serde(default)]
    pub k_ref: Option<f64>,
}

impl GridSpec {
    pub fn new(plane: Hyperplane, sizes: [usize; 3], spacings: [f64; 3]) -> Self {
        GridSpec {
            plane,
            sizes,
            spacings,
            k_center: [0.0; 3],
            x_center: [0.0; 3],
            k_ref: None,
        }
    }

    pub fn with_k_center(mut self, k_center: [f64; 3]) -> Self {
        self.k_center = k_center;
        self
    }

    pub fn with_x_center(mut self, x_center: [f64; 3]) -> Self {
        self.x_center = x_center;
        self
    }

    pub fn with_k_ref(mut self, k_ref: f64) -> Self {
        self.k_ref = Some(k_ref);
        self
    }

    /// Shifts the k lattice by half a cell on every axis so that `k = 0` is
    /// never sampled.
    pub fn half_shifted(mut self) -> Self {
        for a in 0..3 {
            self.k_center[a] = PI / (self.sizes[a] as f64 * self.spacings[a]);
        }
        self
    }

    /// Spec with the k spacing `dk` per axis instead of position spacings.
    pub fn from_k_spacing(plane: Hyperplane, sizes: [usize; 3], dk: [f64; 3]) -> Self {
        let spacings = std::array::from_fn(|a| 2.0 * PI / (sizes[a] as f64 * dk[a]));
        GridSpec::new(plane, sizes, spacings)
    }

    pub fn build(self) -> Result<HyperplaneGrid> {
        HyperplaneGrid::new(self)
    }
}

#[derive(Clone, Copy, Debug)]
struct ModeInfo {
    abs_normal: f64,
    class: ModeClass,
}

/// A hyperplane together with its position grid and dual k lattice.
#[derive(Clone, Debug)]
pub struct HyperplaneGrid {
    spec: GridSpec,
    geometry: LatticeGeometry,
    modes: Vec<ModeInfo>,
    weights: Vec<f64>,
    cutoff: f64,
}

impl PartialEq for HyperplaneGrid {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

impl HyperplaneGrid {
    pub fn new(spec: GridSpec) -> Result<Self> {
        for (a, (&n, &d)) in spec.sizes.iter().zip(&spec.spacings).enumerate() {
            if n < 2 || n % 2 != 0 {
                return Err(Error::InvalidGrid(format!(
                    "axis {a}: size {n} must be even and >= 2"
                )));
            }
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::InvalidGrid(format!(
                    "axis {a}: spacing {d} must be positive"
                )));
            }
        }
        if spec.k_center.iter().chain(&spec.x_center).any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("non-finite center".into()));
        }
        if !spec.plane.is_canonical() {
            return Err(Error::InvalidGrid(
                "grids live on t = a or x3 = b planes; boost the state instead".into(),
            ));
        }
        let signs = match spec.plane.kind() {
            PlaneKind::Spacelike => [1.0, 1.0, 1.0],
            PlaneKind::Timelike => [1.0, 1.0, -1.0],
        };
        let dk: [f64; 3] = std::array::from_fn(|a| 2.0 * PI / (spec.sizes[a] as f64 * spec.spacings[a]));
        let y0 = std::array::from_fn(|a| spec.x_center[a] - (spec.sizes[a] / 2) as f64 * spec.spacings[a]);
        let geometry = LatticeGeometry {
            dims: spec.sizes,
            dk,
            k_center: spec.k_center,
            y0,
            signs,
        };
        let band = (0..3)
            .map(|a| spec.sizes[a] as f64 * dk[a] / 2.0)
            .fold(0.0, f64::max);
        let center = spec.k_center.iter().map(|c| c * c).sum::<f64>().sqrt();
        let k_ref = spec.k_ref.unwrap_or(center.max(band));
        if !(k_ref.is_finite() && k_ref > 0.0) {
            return Err(Error::InvalidGrid(format!("k_ref {k_ref} must be positive")));
        }
        let cutoff = CUTOFF_FRACTION * k_ref;
        let kind = spec.plane.kind();
        let modes: Vec<ModeInfo> = (0..geometry.len())
            .map(|idx| {
                let q = geometry.split(idx);
                let k: [f64; 3] = std::array::from_fn(|a| geometry.k_component(a, q[a]));
                classify_mode(kind, k, cutoff)
            })
            .collect();
        let cell = dk.iter().product::<f64>();
        let weights = modes
            .iter()
            .map(|m| match m.class {
                ModeClass::Propagating => cell / (2.0 * m.abs_normal),
                _ => 0.0,
            })
            .collect();
        Ok(HyperplaneGrid {
            spec,
            geometry,
            modes,
            weights,
            cutoff,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn plane(&self) -> &Hyperplane {
        &self.spec.plane
    }

    pub fn kind(&self) -> PlaneKind {
        self.spec.plane.kind()
    }

    pub fn sizes(&self) -> [usize; 3] {
        self.spec.sizes
    }

    pub fn spacings(&self) -> [f64; 3] {
        self.spec.spacings
    }

    pub fn len(&self) -> usize {
        self.geometry.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        &self.geometry
    }

    pub fn dk(&self) -> [f64; 3] {
        self.geometry.dk
    }

    /// Position-space cell measure `dsigma`.
    pub fn cell_volume(&self) -> f64 {
        self.spec.spacings.iter().product()
    }

    /// k-space cell measure `dkappa`.
    pub fn k_cell_volume(&self) -> f64 {
        self.geometry.dk.iter().product()
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    /// On-plane wave components of lattice point `idx`.
    pub fn k_on_plane(&self, idx: usize) -> [f64; 3] {
        let q = self.geometry.split(idx);
        std::array::from_fn(|a| self.geometry.k_component(a, q[a]))
    }

    /// Signed lattice frequencies `m` of lattice point `idx`.
    pub fn lattice_frequencies(&self, idx: usize) -> [i64; 3] {
        let q = self.geometry.split(idx);
        std::array::from_fn(|a| signed_frequency(q[a], self.spec.sizes[a]))
    }

    /// On-plane coordinates of position index `idx`.
    pub fn y_on_plane(&self, idx: usize) -> [f64; 3] {
        let j = self.geometry.split(idx);
        std::array::from_fn(|a| self.geometry.y_component(a, j[a]))
    }

    /// Event at position index `idx` on the plane.
    pub fn position(&self, idx: usize) -> FourVector {
        self.embed(self.y_on_plane(idx))
    }

    /// Maps on-plane coordinates to the spacetime event on the plane.
    pub fn embed(&self, y: [f64; 3]) -> FourVector {
        let off = self.spec.plane.offset();
        match self.kind() {
            PlaneKind::Spacelike => FourVector::new(off, y[0], y[1], y[2]),
            PlaneKind::Timelike => FourVector::new(y[2], y[0], y[1], off),
        }
    }

    /// On-plane coordinates of an event (the normal coordinate is dropped).
    pub fn project_coords(&self, x: &FourVector) -> [f64; 3] {
        match self.kind() {
            PlaneKind::Spacelike => [x[1], x[2], x[3]],
            PlaneKind::Timelike => [x[1], x[2], x[0]],
        }
    }

    pub fn mode_class(&self, idx: usize) -> ModeClass {
        self.modes[idx].class
    }

    /// `|k_sigma|` of lattice point `idx`; for evanescent modes this is the
    /// modulus of the imaginary normal component.
    pub fn abs_k_sigma(&self, idx: usize) -> f64 {
        self.modes[idx].abs_normal
    }

    /// Quadrature weights `dkappa / 2|k_sigma|`, zero for non-propagating modes.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn kpoint(&self, idx: usize, epsilon: Epsilon) -> KPoint {
        let on_plane = self.k_on_plane(idx);
        let m = self.modes[idx];
        let normal_component = match m.class {
            ModeClass::Evanescent => Complex64::new(0.0, epsilon.sign() * m.abs_normal),
            _ => Complex64::new(epsilon.sign() * m.abs_normal, 0.0),
        };
        KPoint {
            on_plane,
            normal_component,
            epsilon,
        }
    }

    /// Real wave four-vector of a non-evanescent lattice point.
    pub fn four_vector(&self, idx: usize, epsilon: Epsilon) -> Option<FourVector> {
        self.kpoint(idx, epsilon).four_vector(self.kind())
    }

    /// `exp(i k_normal * offset)`, the part of `exp(ikx)` fixed by the plane
    /// equation. Evanescent modes are referenced to the plane itself.
    pub fn normal_phase(&self, idx: usize, epsilon: Epsilon) -> Complex64 {
        let m = self.modes[idx];
        let off = self.spec.plane.offset();
        if off == 0.0 || m.class == ModeClass::Evanescent {
            return Complex64::new(1.0, 0.0);
        }
        let kn = epsilon.sign() * m.abs_normal;
        match self.kind() {
            // -k0 t with k0 = eps |k_sigma| at t = a
            PlaneKind::Spacelike => Complex64::from_polar(1.0, -kn * off),
            PlaneKind::Timelike => Complex64::from_polar(1.0, kn * off),
        }
    }

    pub fn same_lattice(&self, other: &HyperplaneGrid) -> bool {
        self.spec == other.spec
    }
}

fn classify_mode(kind: PlaneKind, k: [f64; 3], cutoff: f64) -> ModeInfo {
    match kind {
        PlaneKind::Spacelike => {
            let w = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
            ModeInfo {
                abs_normal: w,
                class: if w < cutoff {
                    ModeClass::Excluded
                } else {
                    ModeClass::Propagating
                },
            }
        }
        PlaneKind::Timelike => {
            let d = k[2] * k[2] - k[0] * k[0] - k[1] * k[1];
            let m = d.abs().sqrt();
            let class = if m < cutoff {
                ModeClass::Excluded
            } else if d > 0.0 {
                ModeClass::Propagating
            } else {
                ModeClass::Evanescent
            };
            ModeInfo { abs_normal: m, class }
        }
    }
}

/// A lattice wave vector: on-plane components, the normal component solved
/// from `k^mu k_mu = 0`, and its flux label.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KPoint {
    pub on_plane: [f64; 3],
    pub normal_component: Complex64,
    pub epsilon: Epsilon,
}

impl KPoint {
    pub fn is_evanescent(&self) -> bool {
        self.normal_component.im != 0.0
    }

    /// The contravariant four-vector, or `None` for evanescent modes.
    pub fn four_vector(&self, kind: PlaneKind) -> Option<FourVector> {
        if self.is_evanescent() {
            return None;
        }
        let n = self.normal_component.re;
        let p = self.on_plane;
        Some(match kind {
            PlaneKind::Spacelike => FourVector::new(n, p[0], p[1], p[2]),
            PlaneKind::Timelike => FourVector::new(p[2], p[0], p[1], n),
        })
    }
}

/// Normal component of a real wave four-vector with respect to a plane.
pub fn k_sigma(k: &FourVector, plane: &Hyperplane) -> f64 {
    plane.normal_component(k)
}

/// Solves the dispersion relation for the normal component on a canonical
/// plane. `on_plane` follows the plane's axis order: `(k1, k2, k3)` on
/// `t = a`, `(k1, k2, k0)` on `x3 = b`. Evanescent solutions return
/// `eps * i * sqrt(k1^2 + k2^2 - k0^2)`.
pub fn solve_normal_component(on_plane: [f64; 3], plane: &Hyperplane, eps: Epsilon) -> Result<Complex64> {
    let [a, b, c] = on_plane;
    let value = match plane.kind() {
        PlaneKind::Spacelike => Complex64::new((a * a + b * b + c * c).sqrt(), 0.0),
        PlaneKind::Timelike => Complex64::new(c * c - a * a - b * b, 0.0).sqrt(),
    };
    if value.norm() == 0.0 {
        return Err(Error::DegenerateNormal(0.0));
    }
    Ok(value * eps.sign())
}

/// Discrete invariant measure `dkappa / 2|k_sigma|` of a lattice point.
pub fn mode_weight(k: &KPoint, grid: &HyperplaneGrid) -> Result<f64> {
    let abs = k.normal_component.norm();
    if abs < grid.cutoff() {
        return Err(Error::DegenerateNormal(abs));
    }
    Ok(grid.k_cell_volume() / (2.0 * abs))
}

/// Transverse linear polarization pair with zero time component.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolarizationBasis {
    pub e1: [f64; 3],
    pub e2: [f64; 3],
}

impl PolarizationBasis {
    pub fn get(&self, lambda: Lambda) -> [f64; 3] {
        match lambda {
            Lambda::One => self.e1,
            Lambda::Two => self.e2,
        }
    }

    pub fn four_vector(&self, lambda: Lambda) -> FourVector {
        FourVector::from_time_space(0.0, self.get(lambda))
    }

    /// Helicity vector `(e1 + i s e2) / sqrt(2)` for `s = +-1`.
    pub fn helicity(&self, s: f64) -> [Complex64; 3] {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        std::array::from_fn(|i| Complex64::new(r * self.e1[i], r * s * self.e2[i]))
    }
}

pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm3(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// Minimum `|axis x k_hat|` before the axis is considered degenerate.
pub const AXIS_DEGENERACY: f64 = 1e-8;

/// `e1 = axis x k_hat / |axis x k_hat|`, `e2 = k_hat x e1`, so that
/// `(e1, e2, k_hat)` is right handed.
pub fn polarization_basis(k_spatial: [f64; 3], axis: [f64; 3]) -> Result<PolarizationBasis> {
    let kn = norm3(k_spatial);
    if kn == 0.0 {
        return Err(Error::DegenerateAxis(0.0));
    }
    let khat = k_spatial.map(|c| c / kn);
    let an = norm3(axis);
    let c = cross(axis.map(|v| v / an), khat);
    let cn = norm3(c);
    if cn < AXIS_DEGENERACY {
        return Err(Error::DegenerateAxis(cn));
    }
    let e1 = c.map(|v| v / cn);
    let e2 = cross(khat, e1);
    Ok(PolarizationBasis { e1, e2 })
}

/// [`polarization_basis`] for a lattice point, retrying with `x1` and then
/// `x2` when the preferred axis is parallel to `k`.
pub fn polarization_for(k: &KPoint, kind: PlaneKind, axis: [f64; 3]) -> Result<PolarizationBasis> {
    let four = k.four_vector(kind).ok_or(Error::Evanescent)?;
    basis_with_fallback(four.spatial(), axis)
}

pub(crate) fn basis_with_fallback(k: [f64; 3], axis: [f64; 3]) -> Result<PolarizationBasis> {
    polarization_basis(k, axis)
        .or_else(|_| polarization_basis(k, [1.0, 0.0, 0.0]))
        .or_else(|_| polarization_basis(k, [0.0, 1.0, 0.0]))
}

/// Default reference axis: the mean propagation direction rotated by pi/2
/// about x1.
pub fn default_reference_axis(mean_direction: [f64; 3]) -> [f64; 3] {
    let n = norm3(mean_direction);
    if n == 0.0 {
        return [1.0, 0.0, 0.0];
    }
    let d = mean_direction.map(|c| c / n);
    let r = [d[0], -d[2], d[1]];
    if norm3(cross(r, d)) >= AXIS_DEGENERACY {
        r
    } else if norm3(cross([1.0, 0.0, 0.0], d)) >= AXIS_DEGENERACY {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    }
}

/// Every lattice point paired with both flux labels.
pub fn dual_grid(grid: &HyperplaneGrid) -> Vec<KPoint> {
    (0..grid.len())
        .flat_map(|idx| Epsilon::BOTH.map(|e| grid.kpoint(idx, e)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spacetime::{boost_hyperplane, contract, BoostParameters};

    fn small_grid() -> HyperplaneGrid {
        GridSpec::new(Hyperplane::spacelike(0.0), [4, 4, 4], [1.0; 3])
            .build()
            .unwrap()
    }

    #[test]
    fn k_sigma_examples() {
        let rest = Hyperplane::spacelike(0.0);
        let k = FourVector::new(3.0, 1.0, 2.0, 2.0);
        assert_eq!(k_sigma(&k, &rest), 3.0);

        let det = Hyperplane::timelike(0.0);
        let k = FourVector::new(13.0, 3.0, 4.0, -12.0);
        assert_eq!(k_sigma(&k, &det), -12.0);
        assert_eq!(Epsilon::of(k_sigma(&k, &det)), Epsilon::Minus);

        let moving = boost_hyperplane(&rest, &BoostParameters::new(0.6).unwrap());
        let k = FourVector::new(1.0, 0.0, 0.0, 1.0);
        assert!((k_sigma(&k, &moving) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn normal_component_examples() {
        let s = solve_normal_component([1.0, 2.0, 2.0], &Hyperplane::spacelike(0.0), Epsilon::Plus).unwrap();
        assert_eq!(s, Complex64::new(3.0, 0.0));
        let t = Hyperplane::timelike(0.0);
        let p = solve_normal_component([3.0, 4.0, 13.0], &t, Epsilon::Plus).unwrap();
        assert_eq!(p, Complex64::new(12.0, 0.0));
        let e = solve_normal_component([3.0, 4.0, 1.0], &t, Epsilon::Plus).unwrap();
        assert!((e - Complex64::new(0.0, 24f64.sqrt())).norm() < 1e-15);
        let f = solve_normal_component([3.0, 4.0, 0.0], &t, Epsilon::Plus).unwrap();
        assert!((f - Complex64::new(0.0, 5.0)).norm() < 1e-15);
        let m = solve_normal_component([3.0, 4.0, 0.0], &t, Epsilon::Minus).unwrap();
        assert!((m - Complex64::new(0.0, -5.0)).norm() < 1e-15);
        assert!(solve_normal_component([3.0, 4.0, 5.0], &t, Epsilon::Plus).is_err());
    }

    #[test]
    fn mode_weight_examples() {
        let g = GridSpec::from_k_spacing(Hyperplane::spacelike(0.0), [4, 4, 4], [1.0; 3])
            .build()
            .unwrap();
        let k = KPoint {
            on_plane: [1.0, 2.0, 2.0],
            normal_component: Complex64::new(3.0, 0.0),
            epsilon: Epsilon::Plus,
        };
        assert!((mode_weight(&k, &g).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        let tiny = KPoint {
            normal_component: Complex64::new(1e-9, 0.0),
            ..k
        };
        assert!(matches!(mode_weight(&tiny, &g), Err(Error::DegenerateNormal(_))));
    }

    #[test]
    fn evanescent_modes_carry_no_quadrature_weight() {
        let g = GridSpec::from_k_spacing(Hyperplane::timelike(0.0), [8, 8, 8], [1.0; 3])
            .build()
            .unwrap();
        let mut evanescent = 0;
        for idx in 0..g.len() {
            if g.mode_class(idx) == ModeClass::Evanescent {
                evanescent += 1;
                assert_eq!(g.weights()[idx], 0.0);
                assert!(g.kpoint(idx, Epsilon::Plus).is_evanescent());
            }
        }
        assert!(evanescent > 0);
    }

    #[test]
    fn zero_mode_is_excluded_unless_shifted() {
        let g = small_grid();
        let zero = (0..g.len()).find(|&i| g.k_on_plane(i) == [0.0; 3]).unwrap();
        assert_eq!(g.mode_class(zero), ModeClass::Excluded);
        let shifted = GridSpec::new(Hyperplane::spacelike(0.0), [4, 4, 4], [1.0; 3])
            .half_shifted()
            .build()
            .unwrap();
        assert!((0..shifted.len()).all(|i| shifted.mode_class(i) == ModeClass::Propagating));
    }

    #[test]
    fn dual_grid_examples() {
        let g = small_grid();
        let pts = dual_grid(&g);
        assert_eq!(pts.len(), 2 * 64);
        assert_eq!(pts.len() * 2, 4 * 64);
        assert!((g.dk()[0] - PI / 2.0).abs() < 1e-15);
        let (lo, hi) = pts.iter().fold((f64::MAX, f64::MIN), |(lo, hi), k| {
            (lo.min(k.on_plane[0]), hi.max(k.on_plane[0]))
        });
        assert!((lo + PI).abs() < 1e-15);
        assert!((hi - PI / 2.0).abs() < 1e-15);
        let product = g.cell_volume() * g.k_cell_volume();
        assert!((product - (2.0 * PI).powi(3) / 64.0).abs() < 1e-12);
    }

    #[test]
    fn polarization_axis_aligned() {
        let b = polarization_basis([0.0, 0.0, 1.0], [1.0, 0.0, 0.0]).unwrap();
        assert_eq!(b.e1, [0.0, -1.0, 0.0]);
        assert_eq!(b.e2, [1.0, 0.0, 0.0]);
        let triad = cross(b.e1, b.e2);
        assert!((triad[2] - 1.0).abs() < 1e-15);
        assert_eq!(b.four_vector(Lambda::One)[0], 0.0);
        assert!(matches!(
            polarization_basis([0.0, 0.0, 2.0], [0.0, 0.0, 1.0]),
            Err(Error::DegenerateAxis(_))
        ));
        let fb = basis_with_fallback([1.0, 0.0, 0.0], [1.0, 0.0, 0.0]).unwrap();
        assert!(dot(fb.e1, [1.0, 0.0, 0.0]).abs() < 1e-15);
    }

    #[test]
    fn propagating_modes_are_lightlike() {
        let g = GridSpec::from_k_spacing(Hyperplane::timelike(2.0), [8, 8, 8], [0.3, 0.3, 0.5])
            .with_k_center([0.0, 0.0, 3.0])
            .build()
            .unwrap();
        for idx in 0..g.len() {
            for e in Epsilon::BOTH {
                if let Some(k) = g.four_vector(idx, e) {
                    let scale = k.euclidean_norm_sq();
                    assert!(contract(&k, &k).abs() <= 1e-10 * scale.max(1.0));
                    assert_eq!(Epsilon::of(k_sigma(&k, g.plane())), e);
                }
            }
        }
    }

    #[test]
    fn default_axis_rotates_about_x1() {
        assert_eq!(default_reference_axis([0.0, 0.0, 1.0]), [0.0, -1.0, 0.0]);
        assert_eq!(default_reference_axis([1.0, 0.0, 0.0]), [0.0, 1.0, 0.0]);
    }

    #[test]
    fn odd_sizes_rejected() {
        let err = GridSpec::new(Hyperplane::spacelike(0.0), [3, 4, 4], [1.0; 3]).build();
        assert!(matches!(err, Err(Error::InvalidGrid(_))));
    }
}
