//! Localized states on a hyperplane and the projections built from them.
//!
//! The localized state at `x'` on channel `(lambda', eps')` has amplitude
//! `sqrt(2|k_sigma|) exp(-i k x') / (2 pi)^{3/2}`. Under the invariant inner
//! product these states are mutually orthogonal, and projecting onto all of
//! them partitions the identity; on the lattice the continuum delta becomes
//! a Kronecker delta divided by the cell measure `dsigma`.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kspace::{
    default_reference_axis, Channel, Epsilon, HyperplaneGrid, Lambda, ModeClass, EXCLUDED_WEIGHT_LIMIT,
};
use crate::reduce;
use crate::spacetime::{contract, FourVector, PlaneKind};
use crate::states::{
    field_on_plane, inner_product, inv_two_pi_three_halves, same_grid, synthesize_potential, FieldKind,
    PhotonAmplitude,
};
use crate::transform::lattice_to_positions;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Position and channel of a localized state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizedStateSpec {
    pub position: FourVector,
    pub lambda: Lambda,
    pub epsilon: Epsilon,
}

impl LocalizedStateSpec {
    pub fn new(position: FourVector, lambda: Lambda, epsilon: Epsilon) -> Self {
        LocalizedStateSpec {
            position,
            lambda,
            epsilon,
        }
    }

    /// Localized state at grid position `idx`.
    pub fn at_grid_point(grid: &HyperplaneGrid, idx: usize, lambda: Lambda, epsilon: Epsilon) -> Self {
        LocalizedStateSpec::new(grid.position(idx), lambda, epsilon)
    }

    pub fn channel(&self) -> Channel {
        Channel::new(self.lambda, self.epsilon)
    }
}

fn check_on_plane(spec: &LocalizedStateSpec, grid: &HyperplaneGrid) -> Result<()> {
    if grid.plane().contains(&spec.position) {
        Ok(())
    } else {
        Err(Error::OffPlane(spec.position.0))
    }
}

/// Reference axis used for localized states: the default for propagation
/// along x3.
pub fn localized_reference_axis() -> [f64; 3] {
    default_reference_axis([0.0, 0.0, 1.0])
}

/// `exp(-i sum_a s_a k_a y_a)` factored per axis.
fn on_plane_phase_tables(grid: &HyperplaneGrid, y: [f64; 3], sign: f64) -> [Vec<Complex64>; 3] {
    let g = grid.geometry();
    std::array::from_fn(|a| {
        (0..g.dims[a])
            .map(|q| Complex64::from_polar(1.0, sign * g.signs[a] * g.k_component(a, q) * y[a]))
            .collect()
    })
}

/// Amplitude of the localized state; zero off its channel and on
/// non-propagating modes.
pub fn localized_amplitude(spec: &LocalizedStateSpec, grid: &Arc<HyperplaneGrid>) -> Result<PhotonAmplitude> {
    check_on_plane(spec, grid)?;
    let y = grid.project_coords(&spec.position);
    let tables = on_plane_phase_tables(grid, y, -1.0);
    let geom = grid.geometry();
    let norm = inv_two_pi_three_halves();
    let eps = spec.epsilon;
    let values: Vec<Complex64> = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            if grid.mode_class(idx) != ModeClass::Propagating {
                return ZERO;
            }
            let q = geom.split(idx);
            let phase =
                tables[0][q[0]] * tables[1][q[1]] * tables[2][q[2]] * grid.normal_phase(idx, eps).conj();
            phase * ((2.0 * grid.abs_k_sigma(idx)).sqrt() * norm)
        })
        .collect();
    let mut psi = PhotonAmplitude::zeros(grid.clone(), localized_reference_axis());
    *psi.channel_mut(spec.channel()) = values;
    Ok(psi)
}

/// Inner product of two localized states on the same plane:
/// `sum dkappa exp(i k (x_a - x_b)) / (2 pi)^3` over propagating modes of the
/// shared channel, zero across channels.
pub fn overlap(
    a: &LocalizedStateSpec,
    b: &LocalizedStateSpec,
    grid: &Arc<HyperplaneGrid>,
) -> Result<Complex64> {
    check_on_plane(a, grid)?;
    check_on_plane(b, grid)?;
    if a.channel() != b.channel() {
        return Ok(ZERO);
    }
    let (ya, yb) = (grid.project_coords(&a.position), grid.project_coords(&b.position));
    let d: [f64; 3] = std::array::from_fn(|i| ya[i] - yb[i]);
    let g = grid.geometry();
    let tables: [Vec<Complex64>; 3] = std::array::from_fn(|ax| {
        (0..g.dims[ax])
            .map(|q| Complex64::from_polar(1.0, g.signs[ax] * g.k_component(ax, q) * d[ax]))
            .collect()
    });
    let term = |idx: usize| {
        let q = g.split(idx);
        tables[0][q[0]] * tables[1][q[1]] * tables[2][q[2]]
    };
    let scale = grid.k_cell_volume() / (2.0 * std::f64::consts::PI).powi(3);
    let dropped: Vec<usize> = (0..grid.len())
        .filter(|&i| grid.mode_class(i) != ModeClass::Propagating)
        .collect();
    let sum = if dropped.len() * 8 < grid.len() {
        let full: Complex64 = tables.iter().map(|t| t.iter().sum::<Complex64>()).product();
        full - dropped.iter().map(|&i| term(i)).sum::<Complex64>()
    } else {
        reduce::sum_c64(grid.len(), |i| {
            if grid.mode_class(i) == ModeClass::Propagating {
                term(i)
            } else {
                ZERO
            }
        })
    };
    Ok(sum * scale)
}

/// `<chi_{x,lambda,eps}|psi>` at every grid position and channel.
#[derive(Clone, Debug)]
pub struct ProjectionField {
    pub grid: Arc<HyperplaneGrid>,
    pub values: [Vec<Complex64>; 4],
}

impl ProjectionField {
    pub fn channel(&self, c: Channel) -> &[Complex64] {
        &self.values[c.index()]
    }

    /// `sum |values|^2 dsigma` over positions and channels.
    pub fn total(&self) -> f64 {
        let dv = self.grid.cell_volume();
        self.values
            .iter()
            .map(|v| reduce::sum_f64(v.len(), |i| v[i].norm_sqr()))
            .sum::<f64>()
            * dv
    }

    /// Channel-summed `|values|^2`.
    pub fn density(&self) -> DensityField {
        let n = self.grid.len();
        let values = (0..n)
            .into_par_iter()
            .map(|i| self.values.iter().map(|v| v[i].norm_sqr()).sum())
            .collect();
        DensityField {
            grid: self.grid.clone(),
            values,
        }
    }
}

/// Per-mode projection weight `dkappa / sqrt(2|k_sigma|) (2 pi)^{-3/2}`.
fn projection_coefficients(psi: &PhotonAmplitude, c: Channel) -> Vec<Complex64> {
    let grid = psi.grid();
    let scale = grid.k_cell_volume() * inv_two_pi_three_halves();
    let a = psi.channel(c);
    (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            if grid.mode_class(idx) != ModeClass::Propagating || a[idx] == ZERO {
                return ZERO;
            }
            a[idx] * grid.normal_phase(idx, c.epsilon) * (scale / (2.0 * grid.abs_k_sigma(idx)).sqrt())
        })
        .collect()
}

/// Projection onto every localized state of the grid, by fast transform.
pub fn project_all(psi: &PhotonAmplitude) -> ProjectionField {
    let psi = &psi.in_basis(localized_reference_axis());
    let grid = psi.grid().clone();
    let values = Channel::ALL.map(|c| {
        let mut v = projection_coefficients(psi, c);
        lattice_to_positions(&mut v, grid.geometry());
        v
    });
    ProjectionField { grid, values }
}

/// Projection onto the localized states at `x`, by direct summation.
pub fn project_at(psi: &PhotonAmplitude, x: &FourVector) -> [Complex64; 4] {
    let psi = &psi.in_basis(localized_reference_axis());
    let grid = psi.grid();
    let scale = grid.k_cell_volume() * inv_two_pi_three_halves();
    Channel::ALL.map(|c| {
        let a = psi.channel(c);
        reduce::sum_c64(grid.len(), |idx| {
            if grid.mode_class(idx) != ModeClass::Propagating || a[idx] == ZERO {
                return ZERO;
            }
            let k = grid.four_vector(idx, c.epsilon).expect("propagating");
            a[idx] * Complex64::from_polar(scale / (2.0 * grid.abs_k_sigma(idx)).sqrt(), contract(&k, x))
        })
    })
}

/// Direct-summation reference for [`project_all`], `O(N^2)`.
pub fn project_all_direct(psi: &PhotonAmplitude) -> ProjectionField {
    let psi = &psi.in_basis(localized_reference_axis());
    let grid = psi.grid().clone();
    let per_point: Vec<[Complex64; 4]> = (0..grid.len())
        .map(|i| project_at(psi, &grid.position(i)))
        .collect();
    let values = std::array::from_fn(|c| per_point.iter().map(|v| v[c]).collect());
    ProjectionField { grid, values }
}

/// A real density over the grid positions of a plane.
#[derive(Clone, Debug)]
pub struct DensityField {
    pub grid: Arc<HyperplaneGrid>,
    pub values: Vec<f64>,
}

impl DensityField {
    /// `sum density * dsigma`.
    pub fn total(&self) -> f64 {
        reduce::sum_f64(self.values.len(), |i| self.values[i]) * self.grid.cell_volume()
    }

    /// Density-weighted mean of the on-plane coordinates.
    pub fn centroid(&self) -> [f64; 3] {
        let total = reduce::sum_f64(self.values.len(), |i| self.values[i]);
        std::array::from_fn(|a| {
            reduce::sum_f64(self.values.len(), |i| self.values[i] * self.grid.y_on_plane(i)[a]) / total
        })
    }
}

fn require_kind(grid: &HyperplaneGrid, kind: PlaneKind) -> Result<()> {
    if grid.kind() == kind {
        Ok(())
    } else {
        Err(Error::WrongPlaneKind {
            expected: kind.name(),
            found: grid.kind().name(),
        })
    }
}

/// Probability density over space at `t = a`, summed over channels.
pub fn spacelike_density(psi: &PhotonAmplitude) -> Result<DensityField> {
    require_kind(psi.grid(), PlaneKind::Spacelike)?;
    Ok(project_all(psi).density())
}

/// Relative unweighted power on evanescent modes, which on-plane
/// probabilities drop.
pub fn evanescent_fraction(psi: &PhotonAmplitude) -> f64 {
    let grid = psi.grid();
    let (mut ev, mut all) = (0.0, 0.0);
    for ch in psi.channels() {
        for (idx, v) in ch.iter().enumerate() {
            let p = v.norm_sqr();
            all += p;
            if grid.mode_class(idx) == ModeClass::Evanescent {
                ev += p;
            }
        }
    }
    if all == 0.0 {
        0.0
    } else {
        ev / all
    }
}

/// Photon-counting density over `(x1, x2, t)` on the detector plane `x3 = b`.
pub fn timelike_counting(psi: &PhotonAmplitude) -> Result<DensityField> {
    require_kind(psi.grid(), PlaneKind::Timelike)?;
    let ev = evanescent_fraction(psi);
    if ev >= EXCLUDED_WEIGHT_LIMIT {
        return Err(Error::Support(format!(
            "counting drops evanescent modes carrying {ev:.3e} of the power"
        )));
    }
    Ok(project_all(psi).density())
}

/// Relative (or, when `<phi|psi> = 0`, absolute) difference between the
/// position-space resolution of the identity and the k-space inner product.
pub fn completeness_defect(phi: &PhotonAmplitude, psi: &PhotonAmplitude) -> Result<f64> {
    if !same_grid(phi.grid(), psi.grid()) {
        return Err(Error::GridMismatch);
    }
    let (pf, pp) = (project_all(phi), project_all(psi));
    let dv = phi.grid().cell_volume();
    let resolved: Complex64 = Channel::ALL
        .iter()
        .map(|c| {
            let (a, b) = (pf.channel(*c), pp.channel(*c));
            reduce::sum_c64(a.len(), |i| a[i].conj() * b[i])
        })
        .sum::<Complex64>()
        * dv;
    let direct = inner_product(phi, psi)?;
    let diff = (resolved - direct).norm();
    Ok(if direct.norm() > 0.0 {
        diff / direct.norm()
    } else {
        diff
    })
}

/// Four-potential of a localized state sampled at events.
#[derive(Clone, Debug)]
pub struct PotentialField {
    pub events: Vec<FourVector>,
    pub values: Vec<[Complex64; 4]>,
}

impl PotentialField {
    /// Euclidean modulus of the four components at each event.
    pub fn magnitudes(&self) -> Vec<f64> {
        self.values
            .iter()
            .map(|v| v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt())
            .collect()
    }
}

/// `chi^mu(x) = sum dkappa / sqrt(2|k_sigma|) e_lambda'^mu exp(ik(x - x')) / (2 pi)^3`
/// on channel `eps'`, by direct summation.
pub fn potential_of_localized(
    spec: &LocalizedStateSpec,
    grid: &Arc<HyperplaneGrid>,
    events: &[FourVector],
) -> Result<PotentialField> {
    let chi = localized_amplitude(spec, grid)?;
    let values = synthesize_potential(&chi, events)
        .into_iter()
        .map(|v| v[spec.epsilon.index()])
        .collect();
    Ok(PotentialField {
        events: events.to_vec(),
        values,
    })
}

/// Spatial components of the localized potential at every grid position, by
/// fast transform.
pub fn potential_of_localized_on_plane(
    spec: &LocalizedStateSpec,
    grid: &Arc<HyperplaneGrid>,
) -> Result<[Vec<Complex64>; 3]> {
    let chi = localized_amplitude(spec, grid)?;
    Ok(field_on_plane(&chi, spec.epsilon, FieldKind::Potential))
}

/// `exp(i k3 dx3)` for the mode, with `k3 = i eps kappa` on evanescent modes.
/// Rejects continuations that grow.
fn transport_factor(grid: &HyperplaneGrid, idx: usize, eps: Epsilon, dx3: f64) -> Result<Complex64> {
    let k = grid.abs_k_sigma(idx);
    match grid.mode_class(idx) {
        ModeClass::Propagating => Ok(Complex64::from_polar(1.0, eps.sign() * k * dx3)),
        ModeClass::Evanescent => {
            let rate = eps.sign() * k * dx3;
            if rate < 0.0 {
                Err(Error::Growth)
            } else {
                Ok(Complex64::new((-rate).exp(), 0.0))
            }
        }
        ModeClass::Excluded => Ok(ZERO),
    }
}

/// State whose on-plane projection equals the field of `psi` on the parallel
/// plane `x3 = b + dx3` (timelike planes only).
pub fn transport(psi: &PhotonAmplitude, dx3: f64) -> Result<PhotonAmplitude> {
    let grid = psi.grid();
    require_kind(grid, PlaneKind::Timelike)?;
    let mut out = psi.clone();
    for c in Channel::ALL {
        let ch = out.channel_mut(c);
        for (idx, v) in ch.iter_mut().enumerate() {
            if *v != ZERO {
                *v *= transport_factor(grid, idx, c.epsilon, dx3)?;
            }
        }
    }
    Ok(out)
}

/// Transition amplitude from the detector plane `x3 = b` to an arbitrary
/// event, per channel. Propagating modes carry `exp(i k3 (x3 - b))` and
/// evanescent modes decay as `exp(-|k3| |x3 - b|)` on their decay side.
pub fn plane_to_plane_amplitude(psi: &PhotonAmplitude, to_point: &FourVector) -> Result<[Complex64; 4]> {
    let grid = psi.grid();
    require_kind(grid, PlaneKind::Timelike)?;
    let dx3 = to_point[3] - grid.plane().offset();
    let y = grid.project_coords(to_point);
    let signs = grid.geometry().signs;
    let scale = grid.k_cell_volume() * inv_two_pi_three_halves();
    let mut out = [ZERO; 4];
    for c in Channel::ALL {
        let a = psi.channel(c);
        let terms: Result<Vec<Complex64>> = (0..grid.len())
            .into_par_iter()
            .filter(|&idx| a[idx] != ZERO && grid.mode_class(idx) != ModeClass::Excluded)
            .map(|idx| {
                let kp = grid.k_on_plane(idx);
                let on_plane: f64 = (0..3).map(|i| signs[i] * kp[i] * y[i]).sum();
                let f = transport_factor(grid, idx, c.epsilon, dx3)?;
                Ok(a[idx]
                    * grid.normal_phase(idx, c.epsilon)
                    * f
                    * Complex64::from_polar(scale / (2.0 * grid.abs_k_sigma(idx)).sqrt(), on_plane))
            })
            .collect();
        out[c.index()] = terms?.iter().sum();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kspace::GridSpec;
    use crate::spacetime::Hyperplane;
    use crate::states::{make_gaussian_packet, norm_sq, PacketSpec};

    fn grid8(plane: Hyperplane) -> Arc<HyperplaneGrid> {
        Arc::new(
            GridSpec::new(plane, [8, 8, 8], [0.5, 0.5, 0.5])
                .half_shifted()
                .build()
                .unwrap(),
        )
    }

    #[test]
    fn localized_at_origin_is_real_positive() {
        let g = grid8(Hyperplane::spacelike(0.0));
        let spec = LocalizedStateSpec::new(FourVector::default(), Lambda::One, Epsilon::Plus);
        let chi = localized_amplitude(&spec, &g).unwrap();
        let norm = inv_two_pi_three_halves();
        for (idx, v) in chi.channel(spec.channel()).iter().enumerate() {
            let expected = (2.0 * g.abs_k_sigma(idx)).sqrt() * norm;
            assert!((v - Complex64::new(expected, 0.0)).norm() < 1e-14);
        }
        for c in Channel::ALL {
            if c != spec.channel() {
                assert!(chi.channel(c).iter().all(|v| *v == ZERO));
            }
        }
    }

    #[test]
    fn translation_multiplies_by_plane_wave() {
        let g = grid8(Hyperplane::spacelike(0.0));
        let d = [0.5, -1.0, 1.5];
        let a = LocalizedStateSpec::new(FourVector::default(), Lambda::Two, Epsilon::Minus);
        let b = LocalizedStateSpec::new(FourVector::from_time_space(0.0, d), Lambda::Two, Epsilon::Minus);
        let (ca, cb) = (
            localized_amplitude(&a, &g).unwrap(),
            localized_amplitude(&b, &g).unwrap(),
        );
        for idx in 0..g.len() {
            let k = g.k_on_plane(idx);
            let kd: f64 = (0..3).map(|i| k[i] * d[i]).sum();
            let expected = ca.channel(a.channel())[idx] * Complex64::from_polar(1.0, -kd);
            assert!((cb.channel(b.channel())[idx] - expected).norm() < 1e-13);
        }
    }

    #[test]
    fn off_plane_position_rejected() {
        let g = grid8(Hyperplane::spacelike(1.0));
        let spec = LocalizedStateSpec::new(FourVector::default(), Lambda::One, Epsilon::Plus);
        assert!(matches!(localized_amplitude(&spec, &g), Err(Error::OffPlane(_))));
    }

    #[test]
    fn overlap_is_discrete_delta() {
        let g = grid8(Hyperplane::spacelike(0.7));
        let dv = g.cell_volume();
        let a = LocalizedStateSpec::at_grid_point(&g, 5, Lambda::One, Epsilon::Plus);
        let b = LocalizedStateSpec::at_grid_point(&g, 77, Lambda::One, Epsilon::Plus);
        let c = LocalizedStateSpec::at_grid_point(&g, 5, Lambda::Two, Epsilon::Plus);
        assert!((overlap(&a, &a, &g).unwrap() * dv - 1.0).norm() < 1e-12);
        assert!((overlap(&a, &b, &g).unwrap() * dv).norm() < 1e-12);
        assert_eq!(overlap(&a, &c, &g).unwrap(), ZERO);
    }

    #[test]
    fn overlap_matches_inner_product_of_amplitudes() {
        // the timelike grid drops evanescent modes, exercising the direct path
        for plane in [Hyperplane::spacelike(0.7), Hyperplane::timelike(-0.4)] {
            let g = grid8(plane);
            let dv = g.cell_volume();
            let a = LocalizedStateSpec::at_grid_point(&g, 5, Lambda::Two, Epsilon::Minus);
            let b = LocalizedStateSpec::at_grid_point(&g, 300, Lambda::Two, Epsilon::Minus);
            for (x, y) in [(a, a), (a, b), (b, a)] {
                let direct = inner_product(
                    &localized_amplitude(&x, &g).unwrap(),
                    &localized_amplitude(&y, &g).unwrap(),
                )
                .unwrap();
                assert!((overlap(&x, &y, &g).unwrap() - direct).norm() * dv < 1e-12);
            }
        }
    }

    #[test]
    fn global_phase_does_not_change_density() {
        let g = Arc::new(
            GridSpec::from_k_spacing(Hyperplane::spacelike(0.0), [32, 32, 32], [0.25; 3])
                .with_k_center([0.0, 0.0, 5.0])
                .build()
                .unwrap(),
        );
        let spec = PacketSpec::new([0.0, 0.0, 5.0], [0.4; 3], Lambda::One, Epsilon::Plus);
        let psi = make_gaussian_packet(&spec, &g).unwrap();
        let rotated = psi.scaled(Complex64::from_polar(1.0, 0.9));
        let (p, r) = (project_all(&psi), project_all(&rotated));
        let c = Channel::new(Lambda::One, Epsilon::Plus);
        for (x, y) in p.channel(c).iter().zip(r.channel(c)) {
            assert!((x * Complex64::from_polar(1.0, 0.9) - y).norm() < 1e-12);
        }
        let (dp, dr) = (p.density(), r.density());
        for (x, y) in dp.values.iter().zip(&dr.values) {
            assert!((x - y).abs() < 1e-12 * dp.values.iter().cloned().fold(0.0, f64::max));
        }
        assert!((dp.total() - norm_sq(&psi)).abs() < 1e-12);
    }

    #[test]
    fn wrong_plane_kind_rejected() {
        let g = grid8(Hyperplane::spacelike(0.0));
        let psi = localized_amplitude(
            &LocalizedStateSpec::new(FourVector::default(), Lambda::One, Epsilon::Plus),
            &g,
        )
        .unwrap();
        assert!(matches!(
            timelike_counting(&psi),
            Err(Error::WrongPlaneKind { .. })
        ));
        assert!(matches!(transport(&psi, 1.0), Err(Error::WrongPlaneKind { .. })));
        assert!(spacelike_density(&psi).is_ok());
    }
}
