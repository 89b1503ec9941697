//! Four-flux matrix elements, hyperplane flux integrals and the scalar
//! Klein-Gordon reference.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kspace::{Epsilon, HyperplaneGrid, ModeClass};
use crate::reduce;
use crate::spacetime::{contract, FourVector, Hyperplane, PlaneKind};
use crate::states::{
    apply_field_kind, evaluate_terms, field_on_plane, inv_two_pi_three_halves, mode_terms, same_grid,
    FieldKind, ModeTerm, PhotonAmplitude,
};
use crate::transform::lattice_to_positions;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// `J_eps^mu` at each event, indexed `[event][eps.index()][mu]`. Complex in
/// general; real for `phi = psi`.
#[derive(Clone, Debug)]
pub struct FluxField {
    pub events: Vec<FourVector>,
    pub values: Vec<[[Complex64; 4]; 2]>,
}

fn dot3(a: &[Complex64; 3], b: &[Complex64; 3]) -> Complex64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross3(a: &[Complex64; 3], b: &[Complex64; 3]) -> [Complex64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn conj3(a: &[Complex64; 3]) -> [Complex64; 3] {
    a.map(|v| v.conj())
}

/// Potential, time derivative and curl at one point.
#[derive(Clone, Copy)]
struct LocalFields {
    a: [Complex64; 3],
    dt: [Complex64; 3],
    curl: [Complex64; 3],
}

/// `J^0 = i (A_phi* . dA_psi - dA_phi* . A_psi)`,
/// `J = -i (A_phi* x curl A_psi + curl A_phi* x A_psi)`.
fn flux_from_fields(phi: &LocalFields, psi: &LocalFields) -> [Complex64; 4] {
    let (a_phi, dt_phi, curl_phi) = (conj3(&phi.a), conj3(&phi.dt), conj3(&phi.curl));
    let j0 = I * (dot3(&a_phi, &psi.dt) - dot3(&dt_phi, &psi.a));
    let x = cross3(&a_phi, &psi.curl);
    let y = cross3(&curl_phi, &psi.a);
    [j0, -I * (x[0] + y[0]), -I * (x[1] + y[1]), -I * (x[2] + y[2])]
}

fn derived_terms(terms: &[ModeTerm], kind: FieldKind) -> Vec<ModeTerm> {
    terms
        .iter()
        .map(|t| ModeTerm {
            k: t.k,
            coeff: apply_field_kind(kind, &t.coeff, &t.k),
        })
        .collect()
}

struct TermSet([Vec<ModeTerm>; 3]);

impl TermSet {
    fn new(psi: &PhotonAmplitude, eps: Epsilon) -> Self {
        let a = mode_terms(psi, eps);
        let dt = derived_terms(&a, FieldKind::TimeDerivative);
        let curl = derived_terms(&a, FieldKind::Curl);
        TermSet([a, dt, curl])
    }

    fn at(&self, x: &FourVector) -> LocalFields {
        LocalFields {
            a: evaluate_terms(&self.0[0], x),
            dt: evaluate_terms(&self.0[1], x),
            curl: evaluate_terms(&self.0[2], x),
        }
    }
}

/// Flux matrix element `<phi|J_eps^mu(x)|psi>` at each event, by direct
/// summation over modes.
pub fn photon_flux_density(
    phi: &PhotonAmplitude,
    psi: &PhotonAmplitude,
    events: &[FourVector],
) -> Result<FluxField> {
    if !same_grid(phi.grid(), psi.grid()) {
        return Err(Error::GridMismatch);
    }
    let sets = Epsilon::BOTH.map(|e| (TermSet::new(phi, e), TermSet::new(psi, e)));
    let values = events
        .par_iter()
        .map(|x| {
            Epsilon::BOTH.map(|e| {
                let (p, q) = &sets[e.index()];
                flux_from_fields(&p.at(x), &q.at(x))
            })
        })
        .collect();
    Ok(FluxField {
        events: events.to_vec(),
        values,
    })
}

fn grid_fields(psi: &PhotonAmplitude, eps: Epsilon) -> [[Vec<Complex64>; 3]; 3] {
    [
        field_on_plane(psi, eps, FieldKind::Potential),
        field_on_plane(psi, eps, FieldKind::TimeDerivative),
        field_on_plane(psi, eps, FieldKind::Curl),
    ]
}

fn fields_at(f: &[[Vec<Complex64>; 3]; 3], i: usize) -> LocalFields {
    LocalFields {
        a: std::array::from_fn(|c| f[0][c][i]),
        dt: std::array::from_fn(|c| f[1][c][i]),
        curl: std::array::from_fn(|c| f[2][c][i]),
    }
}

/// Normal flux component crossing the plane in its forward direction:
/// `J^0` on `t = a`, `J^3` on `x3 = b`, for one `eps` channel at every grid
/// position.
pub fn normal_flux_on_plane(
    phi: &PhotonAmplitude,
    psi: &PhotonAmplitude,
    eps: Epsilon,
) -> Result<Vec<Complex64>> {
    if !same_grid(phi.grid(), psi.grid()) {
        return Err(Error::GridMismatch);
    }
    let component = match psi.grid().kind() {
        PlaneKind::Spacelike => 0,
        PlaneKind::Timelike => 3,
    };
    let (fp, fq) = (grid_fields(phi, eps), grid_fields(psi, eps));
    Ok((0..psi.grid().len())
        .into_par_iter()
        .map(|i| flux_from_fields(&fields_at(&fp, i), &fields_at(&fq, i))[component])
        .collect())
}

/// `sum_eps eps * integral over the plane of the normal flux`, by quadrature
/// over the grid positions.
pub fn flux_integral(phi: &PhotonAmplitude, psi: &PhotonAmplitude, plane: &Hyperplane) -> Result<Complex64> {
    if psi.grid().plane() != plane {
        return Err(Error::PlaneMismatch);
    }
    let dv = psi.grid().cell_volume();
    let mut total = ZERO;
    for eps in Epsilon::BOTH {
        let j = normal_flux_on_plane(phi, psi, eps)?;
        total += reduce::sum_c64(j.len(), |i| j[i]) * (eps.sign() * dv);
    }
    Ok(total)
}

/// Scalar amplitude `psi_eps(k)` of mass `m` on the k lattice of a
/// spacelike grid, with `omega = sqrt(k.k + m^2)`.
#[derive(Clone, Debug)]
pub struct KGAmplitude {
    grid: Arc<HyperplaneGrid>,
    mass: f64,
    channels: [Vec<Complex64>; 2],
}

impl KGAmplitude {
    pub fn new(grid: Arc<HyperplaneGrid>, mass: f64, channels: [Vec<Complex64>; 2]) -> Result<Self> {
        if grid.kind() != PlaneKind::Spacelike {
            return Err(Error::WrongPlaneKind {
                expected: PlaneKind::Spacelike.name(),
                found: grid.kind().name(),
            });
        }
        if !(mass >= 0.0 && mass.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "mass must be finite and >= 0, got {mass}"
            )));
        }
        if channels.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::InvalidGrid("amplitude length does not match grid".into()));
        }
        let mut amp = KGAmplitude { grid, mass, channels };
        for e in Epsilon::BOTH {
            for idx in 0..amp.grid.len() {
                if !amp.is_active(idx) {
                    amp.channels[e.index()][idx] = ZERO;
                }
            }
        }
        Ok(amp)
    }

    /// The scalar amplitude sharing one photon channel's values.
    pub fn from_photon_channel(psi: &PhotonAmplitude, channel: crate::kspace::Channel) -> Result<Self> {
        let mut channels = [vec![ZERO; psi.grid().len()], vec![ZERO; psi.grid().len()]];
        channels[channel.epsilon.index()] = psi.channel(channel).to_vec();
        KGAmplitude::new(psi.grid().clone(), 0.0, channels)
    }

    pub fn grid(&self) -> &Arc<HyperplaneGrid> {
        &self.grid
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn channel(&self, eps: Epsilon) -> &[Complex64] {
        &self.channels[eps.index()]
    }

    pub fn omega(&self, idx: usize) -> f64 {
        let k = self.grid.k_on_plane(idx);
        (k[0] * k[0] + k[1] * k[1] + k[2] * k[2] + self.mass * self.mass).sqrt()
    }

    fn is_active(&self, idx: usize) -> bool {
        self.mass > 0.0 || self.grid.mode_class(idx) == ModeClass::Propagating
    }

    /// `dk / 2 omega`, zero on the excluded massless zero mode.
    pub fn weight(&self, idx: usize) -> f64 {
        if self.is_active(idx) {
            self.grid.k_cell_volume() / (2.0 * self.omega(idx))
        } else {
            0.0
        }
    }
}

fn same_kg_grid(a: &KGAmplitude, b: &KGAmplitude) -> Result<()> {
    if same_grid(&a.grid, &b.grid) && a.mass == b.mass {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// `psi_eps(x) = sum dk / 2 omega exp(ikx) psi_eps(k) / (2 pi)^{3/2}`,
/// indexed `[event][eps.index()]`.
pub fn kg_field(psi: &KGAmplitude, events: &[FourVector]) -> Vec<[Complex64; 2]> {
    let norm = inv_two_pi_three_halves();
    let terms: [Vec<(FourVector, Complex64)>; 2] = Epsilon::BOTH.map(|e| {
        let ch = psi.channel(e);
        (0..psi.grid.len())
            .filter(|&i| ch[i] != ZERO)
            .map(|i| {
                let k = FourVector::from_time_space(e.sign() * psi.omega(i), psi.grid.k_on_plane(i));
                (k, ch[i] * (psi.weight(i) * norm))
            })
            .collect()
    });
    events
        .par_iter()
        .map(|x| {
            Epsilon::BOTH.map(|e| {
                terms[e.index()]
                    .iter()
                    .map(|(k, c)| c * Complex64::from_polar(1.0, contract(k, x)))
                    .sum()
            })
        })
        .collect()
}

/// Field and time derivative of one channel at every position of `t = a`.
fn kg_on_plane(psi: &KGAmplitude, eps: Epsilon) -> (Vec<Complex64>, Vec<Complex64>) {
    let grid = &psi.grid;
    let a = grid.plane().offset();
    let norm = inv_two_pi_three_halves();
    let ch = psi.channel(eps);
    let mut f: Vec<Complex64> = (0..grid.len())
        .map(|i| {
            let k0 = eps.sign() * psi.omega(i);
            ch[i] * Complex64::from_polar(psi.weight(i) * norm, -k0 * a)
        })
        .collect();
    let mut df: Vec<Complex64> = f
        .iter()
        .enumerate()
        .map(|(i, v)| v * Complex64::new(0.0, -eps.sign() * psi.omega(i)))
        .collect();
    lattice_to_positions(&mut f, grid.geometry());
    lattice_to_positions(&mut df, grid.geometry());
    (f, df)
}

/// `i sum_eps eps integral d^3x (phi* dt psi - psi dt phi*)` on the grid's
/// plane `t = a`, with spectral time derivatives.
pub fn kg_inner_product(phi: &KGAmplitude, psi: &KGAmplitude) -> Result<Complex64> {
    same_kg_grid(phi, psi)?;
    let dv = psi.grid.cell_volume();
    let mut total = ZERO;
    for eps in Epsilon::BOTH {
        if phi.channel(eps).iter().all(|v| *v == ZERO) || psi.channel(eps).iter().all(|v| *v == ZERO) {
            continue;
        }
        let (f, df) = kg_on_plane(phi, eps);
        let (g, dg) = kg_on_plane(psi, eps);
        let s = reduce::sum_c64(f.len(), |i| f[i].conj() * dg[i] - g[i] * df[i].conj());
        total += I * s * (eps.sign() * dv);
    }
    Ok(total)
}

/// `sum_eps sum_k dk / 2 omega phi_eps* psi_eps`.
pub fn kg_inner_product_kspace(phi: &KGAmplitude, psi: &KGAmplitude) -> Result<Complex64> {
    same_kg_grid(phi, psi)?;
    Ok(Epsilon::BOTH
        .iter()
        .map(|e| {
            let (a, b) = (phi.channel(*e), psi.channel(*e));
            reduce::sum_c64(a.len(), |i| a[i].conj() * b[i] * psi.weight(i))
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kspace::{Channel, GridSpec, Lambda};
    use crate::states::{inner_product, make_gaussian_packet, PacketSpec};

    fn spacelike(n: usize) -> Arc<HyperplaneGrid> {
        Arc::new(
            GridSpec::from_k_spacing(Hyperplane::spacelike(0.3), [n; 3], [0.25; 3])
                .with_k_center([0.0, 0.0, 6.0])
                .build()
                .unwrap(),
        )
    }

    #[test]
    fn single_mode_flux_ratio() {
        let g = spacelike(8);
        let idx = (0..g.len())
            .find(|&i| {
                let k = g.k_on_plane(i);
                k[0] == 0.0 && k[1] == 0.0
            })
            .unwrap();
        let mut ch = vec![ZERO; g.len()];
        ch[idx] = Complex64::new(1.0, 0.0);
        let z = vec![ZERO; g.len()];
        let psi = PhotonAmplitude::from_channels(g.clone(), [1.0, 0.0, 0.0], [ch, z.clone(), z.clone(), z])
            .unwrap();
        let k = g.four_vector(idx, Epsilon::Plus).unwrap();
        let events: Vec<FourVector> = (0..5)
            .map(|i| FourVector::new(0.1 * i as f64, 0.3, -0.2, 0.7 * i as f64))
            .collect();
        let f = photon_flux_density(&psi, &psi, &events).unwrap();
        let j0 = f.values[0][0][0];
        for v in &f.values {
            let j = v[Epsilon::Plus.index()];
            assert!((j[0] - j0).norm() < 1e-12 * j0.norm());
            assert!((j[3] / j[0] - Complex64::new(k[3] / k[0], 0.0)).norm() < 1e-12);
            assert!(j[1].norm() < 1e-12 * j0.norm() && j[2].norm() < 1e-12 * j0.norm());
        }
    }

    #[test]
    fn swapping_arguments_conjugates_j0() {
        let g = spacelike(32);
        let a = make_gaussian_packet(
            &PacketSpec::new([0.0, 0.0, 6.0], [0.4; 3], Lambda::One, Epsilon::Plus),
            &g,
        )
        .unwrap();
        let b = make_gaussian_packet(
            &PacketSpec::new([0.2, 0.0, 6.1], [0.35; 3], Lambda::One, Epsilon::Plus)
                .with_launch(FourVector::new(0.0, 0.5, 0.0, 0.0)),
            &g,
        )
        .unwrap();
        let ev = [
            FourVector::new(0.3, 0.2, 0.1, 0.0),
            FourVector::new(0.3, -1.0, 0.4, 0.9),
        ];
        let ab = photon_flux_density(&a, &b, &ev).unwrap();
        let ba = photon_flux_density(&b, &a, &ev).unwrap();
        for (x, y) in ab.values.iter().zip(&ba.values) {
            assert!((x[0][0] - y[0][0].conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn flux_integral_matches_inner_product() {
        let g = spacelike(32);
        for eps in Epsilon::BOTH {
            let psi = make_gaussian_packet(&PacketSpec::new([0.0, 0.0, 6.0], [0.4; 3], Lambda::Two, eps), &g)
                .unwrap();
            let f = flux_integral(&psi, &psi, g.plane()).unwrap();
            let ip = inner_product(&psi, &psi).unwrap();
            assert!(f.re > 0.0);
            assert!((f - ip).norm() < 1e-10);
        }
        let psi = make_gaussian_packet(
            &PacketSpec::new([0.0, 0.0, 6.0], [0.4; 3], Lambda::Two, Epsilon::Plus),
            &g,
        )
        .unwrap();
        assert!(matches!(
            flux_integral(&psi, &psi, &Hyperplane::spacelike(0.0)),
            Err(Error::PlaneMismatch)
        ));
    }

    #[test]
    fn kg_representations_agree() {
        let g = spacelike(16);
        let mk = |seed: f64, e: Epsilon| {
            let mut ch = [vec![ZERO; g.len()], vec![ZERO; g.len()]];
            for (i, v) in ch[e.index()].iter_mut().enumerate() {
                let x = (i as f64 * seed).sin();
                *v = Complex64::new(x, (i as f64 * seed * 1.3).cos());
            }
            KGAmplitude::new(g.clone(), 0.7, ch).unwrap()
        };
        let (a, b) = (mk(0.37, Epsilon::Minus), mk(0.91, Epsilon::Minus));
        let x = kg_inner_product(&a, &b).unwrap();
        let k = kg_inner_product_kspace(&a, &b).unwrap();
        assert!((x - k).norm() <= 1e-10 * k.norm());
        assert!(kg_inner_product(&a, &a).unwrap().re > 0.0);
        let c = mk(0.5, Epsilon::Plus);
        assert_eq!(kg_inner_product(&a, &c).unwrap(), ZERO);
    }

    #[test]
    fn massless_kg_norm_matches_photon_norm() {
        let g = spacelike(16);
        let psi = make_gaussian_packet(
            &PacketSpec::new([0.0, 0.0, 6.0], [0.25; 3], Lambda::One, Epsilon::Plus),
            &g,
        )
        .unwrap();
        let kg = KGAmplitude::from_photon_channel(&psi, Channel::new(Lambda::One, Epsilon::Plus)).unwrap();
        let n = kg_inner_product_kspace(&kg, &kg).unwrap();
        assert!((n.re - 1.0).abs() < 1e-12 && n.im == 0.0);
    }
}
