//! One-photon amplitudes `psi_{lambda,eps}(k)` on a hyperplane lattice, the
//! invariant k-space inner product, and synthesis of the four-potential.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kspace::{
    basis_with_fallback, default_reference_axis, Channel, Epsilon, HyperplaneGrid, Lambda, ModeClass,
    EXCLUDED_WEIGHT_LIMIT,
};
use crate::reduce;
use crate::spacetime::{contract, FourVector, PlaneKind};
use crate::transform::lattice_to_positions;

/// Largest allowed ratio of `|psi|^2` on the lattice boundary to its peak.
pub const BAND_EDGE_LIMIT: f64 = 1e-10;

pub(crate) fn inv_two_pi_three_halves() -> f64 {
    (2.0 * PI).powf(-1.5)
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A one-photon state sampled on the lattice of a hyperplane grid, one dense
/// array per `(lambda, eps)` channel.
#[derive(Clone, Debug)]
pub struct PhotonAmplitude {
    grid: Arc<HyperplaneGrid>,
    reference_axis: [f64; 3],
    channels: [Vec<Complex64>; 4],
}

impl PhotonAmplitude {
    pub fn zeros(grid: Arc<HyperplaneGrid>, reference_axis: [f64; 3]) -> Self {
        let n = grid.len();
        PhotonAmplitude {
            grid,
            reference_axis,
            channels: std::array::from_fn(|_| vec![ZERO; n]),
        }
    }

    /// Builds an amplitude from raw channel arrays (indexed by
    /// [`Channel::index`]). Values on excluded modes are zeroed.
    pub fn from_channels(
        grid: Arc<HyperplaneGrid>,
        reference_axis: [f64; 3],
        mut channels: [Vec<Complex64>; 4],
    ) -> Result<Self> {
        let n = grid.len();
        for ch in &mut channels {
            if ch.len() != n {
                return Err(Error::GridMismatch);
            }
            if ch.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidGrid("non-finite amplitude".into()));
            }
            for (idx, v) in ch.iter_mut().enumerate() {
                if grid.mode_class(idx) == ModeClass::Excluded {
                    *v = ZERO;
                }
            }
        }
        Ok(PhotonAmplitude {
            grid,
            reference_axis,
            channels,
        })
    }

    pub fn grid(&self) -> &Arc<HyperplaneGrid> {
        &self.grid
    }

    pub fn reference_axis(&self) -> [f64; 3] {
        self.reference_axis
    }

    pub fn channel(&self, ch: Channel) -> &[Complex64] {
        &self.channels[ch.index()]
    }

    pub fn channels(&self) -> &[Vec<Complex64>; 4] {
        &self.channels
    }

    pub(crate) fn channel_mut(&mut self, ch: Channel) -> &mut Vec<Complex64> {
        &mut self.channels[ch.index()]
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        for ch in &mut out.channels {
            ch.par_iter_mut().for_each(|v| *v *= s);
        }
        out
    }

    /// Applies `f(idx, channel, value)` to every sample.
    pub fn map(&self, f: impl Fn(usize, Channel, Complex64) -> Complex64 + Sync) -> Self {
        let mut out = self.clone();
        for c in Channel::ALL {
            out.channels[c.index()]
                .par_iter_mut()
                .enumerate()
                .for_each(|(idx, v)| *v = f(idx, c, *v));
        }
        out
    }

    /// The same state with polarization channels referred to `axis`. On each
    /// propagating mode the two linear channels rotate within the plane
    /// transverse to `k`; other modes are untouched.
    pub fn in_basis(&self, axis: [f64; 3]) -> PhotonAmplitude {
        if axis == self.reference_axis {
            return self.clone();
        }
        let grid = &self.grid;
        let mut out = self.clone();
        out.reference_axis = axis;
        for eps in Epsilon::BOTH {
            let (c1, c2) = (Channel::new(Lambda::One, eps), Channel::new(Lambda::Two, eps));
            let (a1, a2) = (self.channel(c1), self.channel(c2));
            let rotated: Vec<(Complex64, Complex64)> = (0..grid.len())
                .into_par_iter()
                .map(|idx| {
                    let (p1, p2) = (a1[idx], a2[idx]);
                    if (p1 == ZERO && p2 == ZERO) || grid.mode_class(idx) != ModeClass::Propagating {
                        return (p1, p2);
                    }
                    let Some(k) = grid.four_vector(idx, eps) else {
                        return (p1, p2);
                    };
                    let (Ok(old), Ok(new)) = (
                        basis_with_fallback(k.spatial(), self.reference_axis),
                        basis_with_fallback(k.spatial(), axis),
                    ) else {
                        return (p1, p2);
                    };
                    let v: [Complex64; 3] = std::array::from_fn(|i| p1 * old.e1[i] + p2 * old.e2[i]);
                    let proj = |e: [f64; 3]| v[0] * e[0] + v[1] * e[1] + v[2] * e[2];
                    (proj(new.e1), proj(new.e2))
                })
                .collect();
            let (n1, n2): (Vec<Complex64>, Vec<Complex64>) = rotated.into_iter().unzip();
            out.channels[c1.index()] = n1;
            out.channels[c2.index()] = n2;
        }
        out
    }

    fn zip_with(
        &self,
        other: &PhotonAmplitude,
        f: impl Fn(Complex64, Complex64) -> Complex64 + Sync,
    ) -> Result<Self> {
        if !same_grid(&self.grid, &other.grid) {
            return Err(Error::GridMismatch);
        }
        let other = other.in_basis(self.reference_axis);
        let mut out = self.clone();
        for (a, b) in out.channels.iter_mut().zip(&other.channels) {
            a.par_iter_mut().zip(b).for_each(|(x, y)| *x = f(*x, *y));
        }
        Ok(out)
    }

    pub fn try_add(&self, other: &PhotonAmplitude) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn try_sub(&self, other: &PhotonAmplitude) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn max_abs(&self) -> f64 {
        self.channels
            .iter()
            .flat_map(|c| c.iter())
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }
}

impl Add for &PhotonAmplitude {
    type Output = PhotonAmplitude;
    fn add(self, rhs: &PhotonAmplitude) -> PhotonAmplitude {
        self.try_add(rhs).expect("amplitudes on different grids")
    }
}

impl Sub for &PhotonAmplitude {
    type Output = PhotonAmplitude;
    fn sub(self, rhs: &PhotonAmplitude) -> PhotonAmplitude {
        self.try_sub(rhs).expect("amplitudes on different grids")
    }
}

impl Mul<Complex64> for &PhotonAmplitude {
    type Output = PhotonAmplitude;
    fn mul(self, s: Complex64) -> PhotonAmplitude {
        self.scaled(s)
    }
}

pub(crate) fn same_grid(a: &Arc<HyperplaneGrid>, b: &Arc<HyperplaneGrid>) -> bool {
    Arc::ptr_eq(a, b) || a.same_lattice(b)
}

/// Polarization content of a packet.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PacketPolarization {
    Linear(Lambda),
    /// `(e1 + i s e2) / sqrt(2)` with `s` the sign of the label.
    Helicity(Epsilon),
}

/// Which variables the Gaussian profile is written in.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PacketCoords {
    /// The grid's own on-plane components (`k1, k2, k3` or `k1, k2, k0`).
    /// The packet lives on the channel `eps`.
    #[default]
    OnPlane,
    /// Spatial wave vector `(k1, k2, k3)` of the on-shell mode, with `eps`
    /// the sign of the frequency. Samples the same covariant state on any
    /// plane kind.
    Spatial,
}

/// Gaussian wave packet `exp(-sum (k_i - center_i)^2 / 4 sigma_i^2)` times
/// `exp(-i k.launch)`, the state centered on the launch event.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketSpec {
    pub center: [f64; 3],
    pub widths: [f64; 3],
    pub polarization: PacketPolarization,
    pub epsilon: Epsilon,
    #[serde(default)]
    pub launch: FourVector,
    #[serde(default)]
    pub coords: PacketCoords,
    /// Keep evanescent lattice points of a timelike grid instead of
    /// rejecting packets that reach them.
    #[serde(default)]
    pub allow_evanescent: bool,
}

impl PacketSpec {
    pub fn new(center: [f64; 3], widths: [f64; 3], lambda: Lambda, epsilon: Epsilon) -> Self {
        PacketSpec {
            center,
            widths,
            polarization: PacketPolarization::Linear(lambda),
            epsilon,
            launch: FourVector::default(),
            coords: PacketCoords::OnPlane,
            allow_evanescent: false,
        }
    }

    pub fn with_launch(mut self, launch: FourVector) -> Self {
        self.launch = launch;
        self
    }

    pub fn with_coords(mut self, coords: PacketCoords) -> Self {
        self.coords = coords;
        self
    }

    pub fn with_polarization(mut self, polarization: PacketPolarization) -> Self {
        self.polarization = polarization;
        self
    }

    fn profile(&self, k: [f64; 3]) -> f64 {
        let e: f64 = (0..3)
            .map(|i| {
                let d = k[i] - self.center[i];
                d * d / (4.0 * self.widths[i] * self.widths[i])
            })
            .sum();
        (-e).exp()
    }

    fn split_polarization(&self, value: Complex64) -> [Complex64; 2] {
        match self.polarization {
            PacketPolarization::Linear(Lambda::One) => [value, ZERO],
            PacketPolarization::Linear(Lambda::Two) => [ZERO, value],
            PacketPolarization::Helicity(s) => {
                let r = std::f64::consts::FRAC_1_SQRT_2;
                [value * r, value * Complex64::new(0.0, r * s.sign())]
            }
        }
    }

    /// Mean propagation direction, used for the default polarization axis.
    pub fn mean_direction(&self, kind: PlaneKind) -> [f64; 3] {
        let c = self.center;
        match (self.coords, kind) {
            (PacketCoords::Spatial, _) | (PacketCoords::OnPlane, PlaneKind::Spacelike) => c,
            (PacketCoords::OnPlane, PlaneKind::Timelike) => {
                let k3 = (c[2] * c[2] - c[0] * c[0] - c[1] * c[1]).max(0.0).sqrt();
                [c[0], c[1], self.epsilon.sign() * k3]
            }
        }
    }
}

/// Samples a packet on the grid without normalizing, after checking that its
/// support fits the lattice band and avoids dropped and evanescent modes.
pub fn sample_packet(spec: &PacketSpec, grid: &Arc<HyperplaneGrid>) -> Result<PhotonAmplitude> {
    if spec.widths.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(Error::Support(format!(
            "widths {:?} must be positive",
            spec.widths
        )));
    }
    let kind = grid.kind();
    let n = grid.len();
    let axis = default_reference_axis(spec.mean_direction(kind));
    // raw[idx][eps][lambda]
    let raw: Vec<[[Complex64; 2]; 2]> = (0..n)
        .into_par_iter()
        .map(|idx| {
            let mut out = [[ZERO; 2]; 2];
            let on_plane = grid.k_on_plane(idx);
            match spec.coords {
                PacketCoords::OnPlane => {
                    let kp = grid.kpoint(idx, spec.epsilon);
                    let phase = match kp.four_vector(kind) {
                        Some(k) => -contract(&k, &spec.launch),
                        None => {
                            // evanescent: on-plane part of the contraction only
                            let y = grid.project_coords(&spec.launch);
                            let s = grid.geometry().signs;
                            -(0..3).map(|a| s[a] * on_plane[a] * y[a]).sum::<f64>()
                        }
                    };
                    let v = Complex64::from_polar(spec.profile(on_plane), phase);
                    out[spec.epsilon.index()] = spec.split_polarization(v);
                }
                PacketCoords::Spatial => {
                    for e in Epsilon::BOTH {
                        let Some(k) = grid.four_vector(idx, e) else {
                            continue;
                        };
                        if Epsilon::of(k.time()) != spec.epsilon || k.time() == 0.0 {
                            continue;
                        }
                        let v = Complex64::from_polar(spec.profile(k.spatial()), -contract(&k, &spec.launch));
                        out[e.index()] = spec.split_polarization(v);
                    }
                }
            }
            out
        })
        .collect();

    let power = |r: &[[Complex64; 2]; 2]| -> f64 { r.iter().flatten().map(|v| v.norm_sqr()).sum() };
    let peak = raw.iter().map(power).fold(0.0, f64::max);
    if peak == 0.0 {
        return Err(Error::Support("packet has no support on this lattice".into()));
    }
    let sizes = grid.sizes();
    let mut edge = 0.0f64;
    let (mut total, mut excluded, mut evanescent) = (0.0, 0.0, 0.0);
    for (idx, r) in raw.iter().enumerate() {
        let p = power(r);
        total += p;
        match grid.mode_class(idx) {
            ModeClass::Excluded => excluded += p,
            ModeClass::Evanescent => evanescent += p,
            ModeClass::Propagating => {}
        }
        let m = grid.lattice_frequencies(idx);
        let on_face = (0..3).any(|a| {
            let h = (sizes[a] / 2) as i64;
            m[a] == -h || m[a] == h - 1
        });
        if on_face {
            edge = edge.max(p);
        }
    }
    if edge / peak >= BAND_EDGE_LIMIT {
        return Err(Error::Support(format!(
            "band edge: boundary/peak power {:.3e} >= {BAND_EDGE_LIMIT:e}",
            edge / peak
        )));
    }
    if excluded / total >= EXCLUDED_WEIGHT_LIMIT {
        return Err(Error::Support(format!(
            "cutoff: excluded-mode weight {:.3e} >= {EXCLUDED_WEIGHT_LIMIT:e}",
            excluded / total
        )));
    }
    if !spec.allow_evanescent && evanescent / total >= EXCLUDED_WEIGHT_LIMIT {
        return Err(Error::Support(format!(
            "evanescent: weight {:.3e} >= {EXCLUDED_WEIGHT_LIMIT:e}",
            evanescent / total
        )));
    }

    let mut channels: [Vec<Complex64>; 4] = std::array::from_fn(|_| vec![ZERO; n]);
    for (idx, r) in raw.iter().enumerate() {
        let class = grid.mode_class(idx);
        if class == ModeClass::Excluded || (class == ModeClass::Evanescent && !spec.allow_evanescent) {
            continue;
        }
        for e in Epsilon::BOTH {
            for l in Lambda::BOTH {
                channels[Channel::new(l, e).index()][idx] = r[e.index()][l.index()];
            }
        }
    }
    PhotonAmplitude::from_channels(grid.clone(), axis, channels)
}

/// Largest per-mode power on the outermost lattice faces relative to the
/// peak mode power, summed over channels.
pub fn band_edge_ratio(psi: &PhotonAmplitude) -> f64 {
    let grid = psi.grid();
    let sizes = grid.sizes();
    let (mut edge, mut peak) = (0.0f64, 0.0f64);
    for idx in 0..grid.len() {
        let p: f64 = psi.channels.iter().map(|c| c[idx].norm_sqr()).sum();
        peak = peak.max(p);
        let m = grid.lattice_frequencies(idx);
        if (0..3).any(|a| {
            let h = (sizes[a] / 2) as i64;
            m[a] == -h || m[a] == h - 1
        }) {
            edge = edge.max(p);
        }
    }
    if peak == 0.0 {
        0.0
    } else {
        edge / peak
    }
}

/// Normalized Gaussian packet.
pub fn make_gaussian_packet(spec: &PacketSpec, grid: &Arc<HyperplaneGrid>) -> Result<PhotonAmplitude> {
    normalize(&sample_packet(spec, grid)?)
}

/// `<phi|psi> = sum_{lambda,eps} sum_k dkappa / 2|k_sigma| phi* psi` over
/// propagating modes.
pub fn inner_product(phi: &PhotonAmplitude, psi: &PhotonAmplitude) -> Result<Complex64> {
    if !same_grid(&phi.grid, &psi.grid) {
        return Err(Error::GridMismatch);
    }
    let psi = psi.in_basis(phi.reference_axis);
    let w = phi.grid.weights();
    let mut total = ZERO;
    for c in Channel::ALL {
        let (a, b) = (phi.channel(c), psi.channel(c));
        total += reduce::sum_c64(w.len(), |i| a[i].conj() * b[i] * w[i]);
    }
    Ok(total)
}

/// `<psi|psi>` as a real number.
pub fn norm_sq(psi: &PhotonAmplitude) -> f64 {
    let w = psi.grid.weights();
    psi.channels
        .iter()
        .map(|a| reduce::sum_f64(w.len(), |i| a[i].norm_sqr() * w[i]))
        .sum()
}

pub fn normalize(psi: &PhotonAmplitude) -> Result<PhotonAmplitude> {
    let n = norm_sq(psi);
    if !(n.is_finite() && n > 0.0) {
        return Err(Error::ZeroState);
    }
    Ok(psi.scaled(Complex64::new(1.0 / n.sqrt(), 0.0)))
}

/// Keeps one `(lambda, eps)` channel and zeroes the rest.
pub fn channel_view(psi: &PhotonAmplitude, lambda: Lambda, epsilon: Epsilon) -> PhotonAmplitude {
    let keep = Channel::new(lambda, epsilon);
    let mut out = psi.clone();
    for c in Channel::ALL {
        if c != keep {
            out.channel_mut(c).iter_mut().for_each(|v| *v = ZERO);
        }
    }
    out
}

/// One propagating mode with its polarization-summed coefficient
/// `dkappa / 2|k_sigma| (2 pi)^{-3/2} sum_lambda e_lambda psi_lambda`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct ModeTerm {
    pub k: FourVector,
    pub coeff: [Complex64; 3],
}

/// Propagating modes of one `eps` channel with weights `weight(idx)`.
pub(crate) fn mode_terms_weighted(
    psi: &PhotonAmplitude,
    eps: Epsilon,
    weight: impl Fn(usize) -> f64 + Sync,
) -> Vec<ModeTerm> {
    let grid = &psi.grid;
    let (a1, a2) = (
        psi.channel(Channel::new(Lambda::One, eps)),
        psi.channel(Channel::new(Lambda::Two, eps)),
    );
    let norm = inv_two_pi_three_halves();
    (0..grid.len())
        .into_par_iter()
        .filter_map(|idx| {
            if grid.mode_class(idx) != ModeClass::Propagating {
                return None;
            }
            let (p1, p2) = (a1[idx], a2[idx]);
            if p1 == ZERO && p2 == ZERO {
                return None;
            }
            let k = grid.four_vector(idx, eps)?;
            let basis = basis_with_fallback(k.spatial(), psi.reference_axis).ok()?;
            let s = weight(idx) * norm;
            let coeff = std::array::from_fn(|i| (p1 * basis.e1[i] + p2 * basis.e2[i]) * s);
            Some(ModeTerm { k, coeff })
        })
        .collect()
}

pub(crate) fn mode_terms(psi: &PhotonAmplitude, eps: Epsilon) -> Vec<ModeTerm> {
    let w = psi.grid.weights();
    mode_terms_weighted(psi, eps, |idx| w[idx])
}

pub(crate) fn evaluate_terms(terms: &[ModeTerm], x: &FourVector) -> [Complex64; 3] {
    let mut acc = [ZERO; 3];
    for t in terms {
        let ph = Complex64::from_polar(1.0, contract(&t.k, x));
        for i in 0..3 {
            acc[i] += t.coeff[i] * ph;
        }
    }
    acc
}

/// Four-potential `psi_eps^mu(x)` at each event by direct summation over
/// propagating modes, indexed `[event][eps.index()][mu]`.
pub fn synthesize_potential(psi: &PhotonAmplitude, events: &[FourVector]) -> Vec<[[Complex64; 4]; 2]> {
    let terms = Epsilon::BOTH.map(|e| mode_terms(psi, e));
    events
        .par_iter()
        .map(|x| {
            Epsilon::BOTH.map(|e| {
                let v = evaluate_terms(&terms[e.index()], x);
                [ZERO, v[0], v[1], v[2]]
            })
        })
        .collect()
}

/// Which derivative of the potential to synthesize on the grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    Potential,
    /// `d/dt`, spectrally: `-i k0`.
    TimeDerivative,
    /// `curl`, spectrally: `i k x`.
    Curl,
}

/// Spatial components of the potential (or a derivative) of one `eps`
/// channel at every position of the grid's plane, via the fast transform.
pub fn field_on_plane(psi: &PhotonAmplitude, eps: Epsilon, kind: FieldKind) -> [Vec<Complex64>; 3] {
    let grid = psi.grid();
    let terms_by_idx: Vec<Option<([Complex64; 3], FourVector)>> = {
        let w = grid.weights();
        let (a1, a2) = (
            psi.channel(Channel::new(Lambda::One, eps)),
            psi.channel(Channel::new(Lambda::Two, eps)),
        );
        let norm = inv_two_pi_three_halves();
        (0..grid.len())
            .into_par_iter()
            .map(|idx| {
                if grid.mode_class(idx) != ModeClass::Propagating {
                    return None;
                }
                let (p1, p2) = (a1[idx], a2[idx]);
                if p1 == ZERO && p2 == ZERO {
                    return None;
                }
                let k = grid.four_vector(idx, eps)?;
                let basis = basis_with_fallback(k.spatial(), psi.reference_axis).ok()?;
                let s = grid.normal_phase(idx, eps) * (w[idx] * norm);
                let c = std::array::from_fn(|i| (p1 * basis.e1[i] + p2 * basis.e2[i]) * s);
                Some((c, k))
            })
            .collect()
    };
    let mut out: [Vec<Complex64>; 3] = std::array::from_fn(|_| vec![ZERO; grid.len()]);
    for (idx, t) in terms_by_idx.iter().enumerate() {
        let Some((c, k)) = t else { continue };
        let v = apply_field_kind(kind, c, k);
        for i in 0..3 {
            out[i][idx] = v[i];
        }
    }
    for comp in &mut out {
        lattice_to_positions(comp, grid.geometry());
    }
    out
}

pub(crate) fn apply_field_kind(kind: FieldKind, c: &[Complex64; 3], k: &FourVector) -> [Complex64; 3] {
    match kind {
        FieldKind::Potential => *c,
        FieldKind::TimeDerivative => c.map(|v| v * Complex64::new(0.0, -k.time())),
        FieldKind::Curl => {
            let s = k.spatial();
            let i = Complex64::new(0.0, 1.0);
            [
                i * (c[2] * s[1] - c[1] * s[2]),
                i * (c[0] * s[2] - c[2] * s[0]),
                i * (c[1] * s[0] - c[0] * s[1]),
            ]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kspace::GridSpec;
    use crate::spacetime::Hyperplane;

    fn grid() -> Arc<HyperplaneGrid> {
        Arc::new(
            GridSpec::from_k_spacing(Hyperplane::spacelike(0.0), [32, 32, 32], [0.25; 3])
                .with_k_center([0.0, 0.0, 6.0])
                .build()
                .unwrap(),
        )
    }

    fn packet(lambda: Lambda, eps: Epsilon) -> PhotonAmplitude {
        let spec = PacketSpec::new([0.0, 0.0, 6.0], [0.4; 3], lambda, eps);
        make_gaussian_packet(&spec, &grid()).unwrap()
    }

    #[test]
    fn packet_is_single_channel_and_normalized() {
        let p = packet(Lambda::One, Epsilon::Plus);
        for c in Channel::ALL {
            let on = c == Channel::new(Lambda::One, Epsilon::Plus);
            assert_eq!(p.channel(c).iter().any(|v| v.norm() > 0.0), on);
        }
        assert!((norm_sq(&p) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn distinct_channels_are_orthogonal() {
        let a = packet(Lambda::One, Epsilon::Plus);
        let b = packet(Lambda::Two, Epsilon::Plus);
        let c = packet(Lambda::One, Epsilon::Minus);
        assert_eq!(inner_product(&a, &b).unwrap(), ZERO);
        assert_eq!(inner_product(&a, &c).unwrap(), ZERO);
    }

    #[test]
    fn normalize_examples() {
        let p = packet(Lambda::Two, Epsilon::Minus);
        let again = normalize(&p).unwrap();
        for c in Channel::ALL {
            for (x, y) in p.channel(c).iter().zip(again.channel(c)) {
                assert!((x - y).norm() < 1e-12);
            }
        }
        let seven = normalize(&p.scaled(Complex64::new(7.0, 0.0))).unwrap();
        for (x, y) in p.channels()[3].iter().zip(&seven.channels()[3]) {
            assert!((x - y).norm() < 1e-12);
        }
        let zero = PhotonAmplitude::zeros(grid(), [1.0, 0.0, 0.0]);
        assert!(matches!(normalize(&zero), Err(Error::ZeroState)));
    }

    #[test]
    fn channel_views_partition_the_state() {
        let a = packet(Lambda::One, Epsilon::Plus);
        let b = packet(Lambda::Two, Epsilon::Minus).scaled(Complex64::new(0.3, -0.4));
        let psi = &a + &b;
        let views: Vec<PhotonAmplitude> = Channel::ALL
            .iter()
            .map(|c| channel_view(&psi, c.lambda, c.epsilon))
            .collect();
        let mut sum = PhotonAmplitude::zeros(grid(), psi.reference_axis());
        for v in &views {
            sum = &sum + v;
        }
        for c in Channel::ALL {
            assert_eq!(sum.channel(c), psi.channel(c));
        }
        let twice = channel_view(&views[0], Lambda::One, Epsilon::Plus);
        assert_eq!(twice.channels(), views[0].channels());
        let parts: f64 = views.iter().map(norm_sq).sum();
        assert!((parts - norm_sq(&psi)).abs() < 1e-12);
    }

    #[test]
    fn band_violation_is_reported() {
        let spec = PacketSpec::new([0.0, 0.0, 6.0], [1.5; 3], Lambda::One, Epsilon::Plus);
        let err = make_gaussian_packet(&spec, &grid()).unwrap_err();
        assert!(err.to_string().contains("band edge"), "{err}");
    }

    #[test]
    fn potential_has_no_time_component() {
        let p = packet(Lambda::One, Epsilon::Plus);
        let ev = [FourVector::new(0.3, 0.1, -0.2, 1.0)];
        let a = synthesize_potential(&p, &ev);
        assert_eq!(a[0][0][0], ZERO);
        assert_eq!(a[0][1], [ZERO; 4]);
    }
}
