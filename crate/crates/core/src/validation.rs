//! The acceptance suite: eleven numerical criteria with measured values.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::detectors::{
    chi_square_test, detection_probabilities, frame_invariance_check, naive_vs_covariant_ratio,
    sample_events, DetectorArraySpec, ObserverFrame,
};
use crate::error::Result;
use crate::flux::{flux_integral, kg_inner_product, kg_inner_product_kspace, KGAmplitude};
use crate::io::write_events_jsonl;
use crate::kspace::{Channel, Epsilon, GridSpec, HyperplaneGrid, Lambda, ModeClass};
use crate::localization::{
    completeness_defect, overlap, plane_to_plane_amplitude, potential_of_localized_on_plane, transport,
    LocalizedStateSpec,
};
use crate::spacetime::{boost_hyperplane, boost_vector, BoostParameters, FourVector, Hyperplane, PlaneKind};
use crate::states::{inner_product, make_gaussian_packet, norm_sq, PacketSpec, PhotonAmplitude};

/// Below this size a discretization error is indistinguishable from
/// rounding and no convergence order can be measured.
pub const ROUNDOFF_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub metrics: BTreeMap<String, f64>,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub all_passed: bool,
    pub criteria: Vec<CriterionResult>,
}

pub const CRITERIA: [(u8, &str); 11] = [
    (1, "orthogonality"),
    (2, "completeness"),
    (3, "flux_equals_inner_product"),
    (4, "detection_certainty"),
    (5, "wrong_basis_factor"),
    (6, "boost_geometry"),
    (7, "frame_invariance"),
    (8, "non_localization"),
    (9, "evanescent_transport"),
    (10, "klein_gordon_oracle"),
    (11, "monte_carlo_fidelity"),
];

struct Outcome {
    passed: bool,
    metrics: BTreeMap<String, f64>,
    detail: String,
}

impl Outcome {
    fn new() -> Self {
        Outcome {
            passed: true,
            metrics: BTreeMap::new(),
            detail: String::new(),
        }
    }

    fn record(&mut self, key: impl Into<String>, value: f64) {
        self.metrics.insert(key.into(), value);
    }

    fn check(&mut self, ok: bool, what: impl AsRef<str>) {
        if !ok {
            self.passed = false;
            if !self.detail.is_empty() {
                self.detail.push_str("; ");
            }
            self.detail.push_str(what.as_ref());
        }
    }
}

/// Runs one criterion; errors count as failures.
pub fn run_criterion(id: u8, seed: u64) -> CriterionResult {
    let name = CRITERIA
        .iter()
        .find(|(i, _)| *i == id)
        .map_or("unknown", |(_, n)| *n);
    let start = Instant::now();
    let outcome = match id {
        1 => orthogonality(seed),
        2 => completeness(seed),
        3 => flux_equals_inner_product(),
        4 => detection_certainty(),
        5 => wrong_basis_factor(),
        6 => boost_geometry(),
        7 => frame_invariance(),
        8 => non_localization(),
        9 => evanescent_transport(),
        10 => klein_gordon_oracle(seed),
        11 => monte_carlo_fidelity(seed),
        _ => Ok(Outcome {
            passed: false,
            metrics: BTreeMap::new(),
            detail: format!("no criterion {id}"),
        }),
    };
    let seconds = start.elapsed().as_secs_f64();
    let (passed, metrics, detail) = match outcome {
        Ok(o) => (o.passed, o.metrics, o.detail),
        Err(e) => (false, BTreeMap::new(), format!("error: {e}")),
    };
    CriterionResult {
        id,
        name,
        passed,
        metrics,
        detail,
        seconds,
    }
}

pub fn run_all(seed: u64) -> ValidationReport {
    let criteria: Vec<CriterionResult> = CRITERIA.iter().map(|(id, _)| run_criterion(*id, seed)).collect();
    ValidationReport {
        all_passed: criteria.iter().all(|c| c.passed),
        criteria,
    }
}

/// Convergence passes when the fine error sits at the rounding floor or the
/// observed order reaches `min_order`.
fn converges(coarse: f64, fine: f64, min_order: f64) -> (bool, f64) {
    let order = (coarse / fine).log2();
    (fine <= ROUNDOFF_FLOOR || order >= min_order, order)
}

fn random_state(grid: &Arc<HyperplaneGrid>, rng: &mut ChaCha8Rng) -> Result<PhotonAmplitude> {
    let channels = std::array::from_fn(|_| {
        (0..grid.len())
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect()
    });
    PhotonAmplitude::from_channels(grid.clone(), [1.0, 0.0, 0.0], channels)
}

fn cube_grid(plane: Hyperplane, n: usize, spacing: f64) -> Result<Arc<HyperplaneGrid>> {
    Ok(Arc::new(
        GridSpec::new(plane, [n; 3], [spacing; 3])
            .half_shifted()
            .build()?,
    ))
}

fn packet_grid(plane: Hyperplane, n: usize, dk: f64, center: [f64; 3]) -> Result<Arc<HyperplaneGrid>> {
    Ok(Arc::new(
        GridSpec::from_k_spacing(plane, [n; 3], [dk; 3])
            .with_k_center(center)
            .build()?,
    ))
}

fn orthogonality(seed: u64) -> Result<Outcome> {
    let mut o = Outcome::new();
    let g = cube_grid(Hyperplane::spacelike(0.0), 64, 0.5)?;
    let dv = g.cell_volume();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_same = 0.0f64;
    let mut worst_distinct = 0.0f64;
    let mut cross_channel_nonzero = 0usize;
    for pair in 0..1000 {
        let i = rng.random_range(0..g.len());
        // one pair in ten sits on the diagonal
        let j = if pair % 10 == 0 {
            i
        } else {
            rng.random_range(0..g.len())
        };
        let ch = Channel::ALL[rng.random_range(0..4)];
        let other = Channel::ALL[(ch.index() + 1 + rng.random_range(0..3)) % 4];
        let a = LocalizedStateSpec::at_grid_point(&g, i, ch.lambda, ch.epsilon);
        let b = LocalizedStateSpec::at_grid_point(&g, j, ch.lambda, ch.epsilon);
        let c = LocalizedStateSpec::at_grid_point(&g, j, other.lambda, other.epsilon);
        let v = overlap(&a, &b, &g)? * dv;
        let expected = if i == j { 1.0 } else { 0.0 };
        let err = (v - Complex64::new(expected, 0.0)).norm();
        if i == j {
            worst_same = worst_same.max(err);
        } else {
            worst_distinct = worst_distinct.max(err);
        }
        if overlap(&a, &c, &g)? != Complex64::new(0.0, 0.0) {
            cross_channel_nonzero += 1;
        }
    }
    o.record("max_error_same_point", worst_same);
    o.record("max_error_distinct_points", worst_distinct);
    o.record("cross_channel_nonzero", cross_channel_nonzero as f64);
    o.check(
        worst_same <= 1e-10,
        format!("same-point error {worst_same:.3e} > 1e-10"),
    );
    o.check(
        worst_distinct <= 1e-10,
        format!("distinct-point error {worst_distinct:.3e} > 1e-10"),
    );
    o.check(cross_channel_nonzero == 0, "distinct channels overlap");
    Ok(o)
}

fn completeness(seed: u64) -> Result<Outcome> {
    let mut o = Outcome::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x2);
    for n in [32usize, 64] {
        let g = cube_grid(Hyperplane::spacelike(0.3), n, 0.5)?;
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let (phi, psi) = (random_state(&g, &mut rng)?, random_state(&g, &mut rng)?);
            worst = worst.max(completeness_defect(&phi, &psi)?);
        }
        o.record(format!("max_defect_{n}"), worst);
        o.check(worst <= 1e-12, format!("defect {worst:.3e} > 1e-12 at {n}^3"));
    }
    Ok(o)
}

fn flux_equals_inner_product() -> Result<Outcome> {
    let mut o = Outcome::new();
    let cases = [
        ("spacelike", Hyperplane::spacelike(0.4), [0.3, -0.2, 6.0]),
        ("timelike", Hyperplane::timelike(0.7), [0.3, -0.2, 6.0]),
    ];
    for (label, plane, center) in cases {
        let mut errs = Vec::new();
        for n in [32usize, 64] {
            let g = packet_grid(plane, n, 0.25, center)?;
            let phi =
                make_gaussian_packet(&PacketSpec::new(center, [0.3; 3], Lambda::One, Epsilon::Plus), &g)?;
            let psi = make_gaussian_packet(
                &PacketSpec::new([0.4, -0.1, 6.1], [0.35, 0.3, 0.3], Lambda::One, Epsilon::Plus)
                    .with_launch(FourVector::new(0.0, 0.6, -0.3, 0.2)),
                &g,
            )?;
            let mut worst = 0.0f64;
            for (a, b) in [(&phi, &phi), (&phi, &psi), (&psi, &psi)] {
                let f = flux_integral(a, b, g.plane())?;
                let ip = inner_product(a, b)?;
                worst = worst.max((f - ip).norm() / ip.norm());
            }
            o.record(format!("{label}_relative_error_{n}"), worst);
            errs.push(worst);
        }
        o.check(
            errs[0] <= 1e-6,
            format!("{label}: relative error {:.3e} > 1e-6 at 32^3", errs[0]),
        );
        let (ok, order) = converges(errs[0], errs[1], 2.0);
        o.record(format!("{label}_order"), order);
        o.check(ok, format!("{label}: convergence order {order:.2} < 2"));
    }
    Ok(o)
}

fn detection_certainty() -> Result<Outcome> {
    let mut o = Outcome::new();
    let g = packet_grid(Hyperplane::timelike(1.0), 32, 0.25, [0.0, 0.0, 6.0])?;
    let psi = make_gaussian_packet(
        &PacketSpec::new([0.5, 0.0, 6.0], [0.3; 3], Lambda::Two, Epsilon::Plus),
        &g,
    )?;
    let array = DetectorArraySpec::covering(&g, [4, 4, 4])?;
    let total = detection_probabilities(&psi, &array)?.total();
    o.record("total_probability", total);
    o.check(
        (total - 1.0).abs() <= 1e-3,
        format!("total {total} differs from 1 by more than 1e-3"),
    );
    Ok(o)
}

/// Timelike-plane packet of frequency `omega` travelling at `theta_deg` to
/// x3, with Gaussian widths `bandwidth * omega` on an `n`-cube lattice.
pub fn wrong_basis_packet(theta_deg: f64, omega: f64, bandwidth: f64, n: usize) -> Result<PhotonAmplitude> {
    let theta = theta_deg.to_radians();
    let center = [omega * theta.sin(), 0.0, omega];
    let width = bandwidth * omega;
    let g = packet_grid(Hyperplane::timelike(0.0), n, 0.5 * width, center)?;
    make_gaussian_packet(
        &PacketSpec::new(center, [width; 3], Lambda::One, Epsilon::Plus),
        &g,
    )
}

fn wrong_basis_factor() -> Result<Outcome> {
    let mut o = Outcome::new();
    for theta in [0.0f64, 45.0, 60.0] {
        let psi = wrong_basis_packet(theta, 10.0, 0.01, 32)?;
        let r = naive_vs_covariant_ratio(&psi)?;
        let expected = theta.to_radians().cos();
        let rel = (r.ratio - expected).abs() / expected;
        o.record(format!("ratio_{theta}"), r.ratio);
        o.record(format!("bandwidth_{theta}"), r.bandwidth);
        o.check(
            rel <= 0.01,
            format!("theta {theta}: ratio {} vs {expected}", r.ratio),
        );
    }
    Ok(o)
}

fn boost_geometry() -> Result<Outcome> {
    let mut o = Outcome::new();
    let exact = |a: f64, b: f64| (a - b).abs() <= 1e-15 * b.abs().max(1.0);
    let b = BoostParameters::new(0.6)?;
    let s = boost_hyperplane(&Hyperplane::spacelike(0.0), &b).normal();
    let t = boost_hyperplane(&Hyperplane::timelike(0.0), &b).normal();
    let s_ok = [1.25, 0.0, 0.0, 0.75]
        .iter()
        .enumerate()
        .all(|(i, v)| exact(s[i], *v));
    let t_ok = [0.75, 0.0, 0.0, 1.25]
        .iter()
        .enumerate()
        .all(|(i, v)| exact(t[i], *v));
    o.check(s_ok, format!("spacelike normal {:?}", s.0));
    o.check(t_ok, format!("timelike normal {:?}", t.0));
    let frame = ObserverFrame::new(0.6)?;
    let sa = DetectorArraySpec::new(Hyperplane::spacelike(2.0), [1.0; 3], [[0.0, 1.0]; 3])?;
    let ta = DetectorArraySpec::new(Hyperplane::timelike(1.0), [1.0; 3], [[0.0, 1.0]; 3])?;
    let sv = crate::detectors::boosted_view(&sa, &frame);
    let tv = crate::detectors::boosted_view(&ta, &frame);
    use crate::detectors::WorldLine;
    if let WorldLine::TimeOfX3 { intercept, slope } = sv.line {
        o.record("spacelike_intercept", intercept);
        o.check(exact(intercept, 1.6) && exact(slope, 0.6), "spacelike world line");
    } else {
        o.check(false, "spacelike array gave the wrong line form");
    }
    if let WorldLine::X3OfTime { intercept, slope } = tv.line {
        o.record("timelike_intercept", intercept);
        o.check(exact(intercept, 0.8) && exact(slope, 0.6), "timelike world line");
    } else {
        o.check(false, "timelike array gave the wrong line form");
    }
    // the line points satisfy the boosted plane equation
    for (plane, x) in [
        (
            &sv.array.plane,
            boost_vector(&FourVector::new(2.0, 0.0, 0.0, 3.0), &frame.boost),
        ),
        (
            &tv.array.plane,
            boost_vector(&FourVector::new(-4.0, 0.0, 0.0, 1.0), &frame.boost),
        ),
    ] {
        o.check(plane.contains(&x), "boosted event off the boosted plane");
    }
    let mut kinds = 0;
    for beta in [0.3, -0.3, 0.6, -0.6, 0.9, -0.9, 0.99, -0.99] {
        let b = BoostParameters::new(beta)?;
        let sk = boost_hyperplane(&Hyperplane::spacelike(1.0), &b).kind();
        let tk = boost_hyperplane(&Hyperplane::timelike(1.0), &b).kind();
        if sk == PlaneKind::Spacelike && tk == PlaneKind::Timelike {
            kinds += 1;
        }
    }
    o.record("kind_preserving_boosts", kinds as f64);
    o.check(kinds == 8, "a boost changed a plane kind");
    Ok(o)
}

fn frame_invariance() -> Result<Outcome> {
    let mut o = Outcome::new();
    let frame = ObserverFrame::new(0.6)?;
    let center = [0.5, -0.3, 6.0];
    for (label, plane) in [
        ("spacelike", Hyperplane::spacelike(0.0)),
        ("timelike", Hyperplane::timelike(0.0)),
    ] {
        let mut prob = Vec::new();
        let mut norm = Vec::new();
        for n in [32usize, 64] {
            let dk = 8.0 / n as f64;
            let g = packet_grid(plane, n, dk, center)?;
            let psi =
                make_gaussian_packet(&PacketSpec::new(center, [0.4; 3], Lambda::One, Epsilon::Plus), &g)?;
            let array = DetectorArraySpec::covering(&g, [1, 1, 1])?;
            let r = frame_invariance_check(&psi, &array, &frame)?;
            o.record(format!("{label}_probability_deviation_{n}"), r.deviation);
            o.record(format!("{label}_norm_deviation_{n}"), r.norm_deviation);
            prob.push(r.deviation);
            norm.push(r.norm_deviation);
        }
        o.check(
            prob[1] <= 1e-3,
            format!("{label}: probability deviation {:.3e} > 1e-3", prob[1]),
        );
        o.check(
            norm[1] <= 1e-3,
            format!("{label}: norm deviation {:.3e} > 1e-3", norm[1]),
        );
        let (ok, order) = converges(prob[0], prob[1], 1.0);
        o.record(format!("{label}_order"), order);
        o.check(
            ok,
            format!(
                "{label}: deviation does not halve ({:.3e} -> {:.3e})",
                prob[0], prob[1]
            ),
        );
    }
    Ok(o)
}

/// Log-log slope of the localized potential along the lattice diagonal over
/// one decade of distance `[1, 10]` cells, and the smallest relative
/// magnitude seen at four or more cells.
pub fn tail_exponent(n: usize, spacing: f64) -> Result<(f64, f64)> {
    let g = cube_grid(Hyperplane::spacelike(0.0), n, spacing)?;
    let c = n / 2;
    let geom = *g.geometry();
    let spec = LocalizedStateSpec::at_grid_point(&g, geom.join([c, c, c]), Lambda::One, Epsilon::Plus);
    let f = potential_of_localized_on_plane(&spec, &g)?;
    let mag = |i: usize| (0..3).map(|a| f[a][i].norm_sqr()).sum::<f64>().sqrt();
    let peak = (0..g.len()).map(mag).fold(0.0, f64::max);
    let (mut sx, mut sy, mut sxx, mut sxy, mut m) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut min_far = f64::INFINITY;
    for j in 1..=10usize {
        let r = j as f64 * 3f64.sqrt();
        let v = mag(geom.join([c + j, c + j, c + j])) / peak;
        if r >= 4.0 {
            min_far = min_far.min(v);
        }
        let (x, y) = (r.ln(), v.ln());
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        m += 1.0;
    }
    let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    Ok((slope, min_far))
}

fn non_localization() -> Result<Outcome> {
    let mut o = Outcome::new();
    let (p32, far32) = tail_exponent(32, 0.5)?;
    let (p64, far64) = tail_exponent(64, 0.5)?;
    o.record("exponent_32", p32);
    o.record("exponent_64", p64);
    o.record("min_relative_magnitude_beyond_4_cells", far32.min(far64));
    o.check(far32.min(far64) > 1e-6, "potential vanishes beyond 4 cells");
    o.check(
        (p32 - p64).abs() <= 0.2,
        format!("exponent moved by {:.3}", (p32 - p64).abs()),
    );
    Ok(o)
}

fn evanescent_transport() -> Result<Outcome> {
    let mut o = Outcome::new();
    // lattice point (k1, k2, k0) = (3, 4, 0): k3 = 5i
    let g = Arc::new(GridSpec::from_k_spacing(Hyperplane::timelike(0.0), [16; 3], [1.0; 3]).build()?);
    let geom = *g.geometry();
    let idx = geom.join([3, 4, 0]);
    let kp = g.k_on_plane(idx);
    o.check(
        g.mode_class(idx) == ModeClass::Evanescent && kp == [3.0, 4.0, 0.0],
        "test mode is not evanescent",
    );
    let mut ch: [Vec<Complex64>; 4] = std::array::from_fn(|_| vec![Complex64::new(0.0, 0.0); g.len()]);
    ch[Channel::new(Lambda::One, Epsilon::Plus).index()][idx] = Complex64::new(1.0, 0.0);
    let psi = PhotonAmplitude::from_channels(g.clone(), [1.0, 0.0, 0.0], ch)?;
    let c = Channel::new(Lambda::One, Epsilon::Plus);
    let mut worst = 0.0f64;
    for dx in [1.0, 2.0] {
        let moved = transport(&psi, dx)?;
        let ratio = moved.channel(c)[idx].re;
        worst = worst.max((ratio - (-5.0 * dx).exp()).abs());
        let x0 = FourVector::new(0.3, 0.2, -0.1, 0.0);
        let x1 = FourVector::new(0.3, 0.2, -0.1, dx);
        let a0 = plane_to_plane_amplitude(&psi, &x0)?[c.index()];
        let a1 = plane_to_plane_amplitude(&psi, &x1)?[c.index()];
        worst = worst.max(((a1 / a0).norm() - (-5.0 * dx).exp()).abs());
    }
    o.record("attenuation_error", worst);
    o.check(worst <= 1e-12, format!("attenuation error {worst:.3e} > 1e-12"));
    o.check(transport(&psi, -1.0).is_err(), "growing continuation accepted");

    let gp = packet_grid(Hyperplane::timelike(0.0), 32, 0.25, [0.0, 0.0, 6.0])?;
    let packet = make_gaussian_packet(
        &PacketSpec::new([0.5, 0.0, 6.0], [0.3; 3], Lambda::One, Epsilon::Plus),
        &gp,
    )?;
    let mut drift = 0.0f64;
    for dx in [0.5, 3.0, 25.0] {
        let moved = transport(&packet, dx)?;
        drift = drift.max((norm_sq(&moved) - 1.0).abs());
        let back = transport(&transport(&packet, dx * 0.3)?, dx * 0.7)?;
        drift = drift.max((inner_product(&moved, &back)? - 1.0).norm());
    }
    o.record("propagating_norm_drift", drift);
    o.check(drift <= 1e-10, format!("norm drift {drift:.3e} > 1e-10"));
    Ok(o)
}

fn klein_gordon_oracle(seed: u64) -> Result<Outcome> {
    let mut o = Outcome::new();
    let g = cube_grid(Hyperplane::spacelike(0.8), 16, 0.5)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xa);
    let mut random = |mass: f64, both: bool| -> Result<KGAmplitude> {
        let mut ch: [Vec<Complex64>; 2] = std::array::from_fn(|_| vec![Complex64::new(0.0, 0.0); g.len()]);
        for (e, c) in ch.iter_mut().enumerate() {
            if both || e == 0 {
                for v in c.iter_mut() {
                    *v = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
                }
            }
        }
        KGAmplitude::new(g.clone(), mass, ch)
    };
    let mut worst = 0.0f64;
    for mass in [0.0, 0.5, 2.0] {
        let (a, b) = (random(mass, true)?, random(mass, true)?);
        for (x, y) in [(&a, &b), (&a, &a)] {
            let xs = kg_inner_product(x, y)?;
            let ks = kg_inner_product_kspace(x, y)?;
            worst = worst.max((xs - ks).norm() / ks.norm());
        }
    }
    o.record("x_vs_k_relative_error", worst);
    o.check(worst <= 1e-10, format!("x-space vs k-space {worst:.3e} > 1e-10"));

    let plus = random(0.7, false)?;
    let minus_ch = [
        vec![Complex64::new(0.0, 0.0); g.len()],
        plus.channel(Epsilon::Plus).to_vec(),
    ];
    let minus = KGAmplitude::new(g.clone(), 0.7, minus_ch)?;
    let cross = kg_inner_product(&plus, &minus)?;
    o.record("cross_epsilon", cross.norm());
    o.check(
        cross == Complex64::new(0.0, 0.0),
        "cross-epsilon product is not exactly zero",
    );
    let nm = kg_inner_product(&minus, &minus)?;
    o.check(nm.re > 0.0, "negative-frequency norm is not positive");

    let pg = packet_grid(Hyperplane::spacelike(0.0), 16, 0.25, [0.0, 0.0, 6.0])?;
    let mut worst_norm = 0.0f64;
    for (l, e) in [(Lambda::One, Epsilon::Plus), (Lambda::Two, Epsilon::Minus)] {
        let psi = make_gaussian_packet(&PacketSpec::new([0.2, 0.0, 6.0], [0.2; 3], l, e), &pg)?;
        let kg = KGAmplitude::from_photon_channel(&psi, Channel::new(l, e))?;
        let a = kg_inner_product_kspace(&kg, &kg)?.re;
        let b = kg_inner_product(&kg, &kg)?.re;
        let p = norm_sq(&psi);
        worst_norm = worst_norm.max((a - p).abs().max((b - p).abs()) / p);
    }
    o.record("massless_norm_mismatch", worst_norm);
    o.check(
        worst_norm <= 1e-12,
        format!("massless norms differ by {worst_norm:.3e}"),
    );
    Ok(o)
}

fn monte_carlo_fidelity(seed: u64) -> Result<Outcome> {
    let mut o = Outcome::new();
    let g = packet_grid(Hyperplane::spacelike(0.0), 32, 0.25, [0.0, 0.0, 6.0])?;
    let psi = make_gaussian_packet(
        &PacketSpec::new([0.3, 0.0, 6.0], [0.3; 3], Lambda::One, Epsilon::Plus),
        &g,
    )?;
    let dist = detection_probabilities(&psi, &DetectorArraySpec::covering(&g, [4, 4, 4])?)?;
    let events = sample_events(&dist, 100_000, seed)?;
    let chi = chi_square_test(&dist, &events)?;
    o.record("chi_square", chi.statistic);
    o.record("dof", chi.dof as f64);
    o.record("p_value", chi.p_value);
    o.check(chi.p_value > 0.01, format!("p-value {} <= 0.01", chi.p_value));
    let again = sample_events(&dist, 100_000, seed)?;
    let (mut a, mut b) = (Vec::new(), Vec::new());
    write_events_jsonl(&mut a, &events)?;
    write_events_jsonl(&mut b, &again)?;
    o.check(a == b, "same seed produced different bytes");
    Ok(o)
}
