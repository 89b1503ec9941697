use std::sync::Arc;

use photonloc_core::detectors::{
    boosted_view, detection_probabilities, sample_events, DetectorArraySpec, ObserverFrame,
};
use photonloc_core::kspace::{Channel, Epsilon, GridSpec, HyperplaneGrid, Lambda};
use photonloc_core::localization::{completeness_defect, overlap, transport, LocalizedStateSpec};
use photonloc_core::spacetime::{
    boost_hyperplane, boost_vector, contract, BoostParameters, FourVector, Hyperplane, PlaneKind,
};
use photonloc_core::states::{inner_product, make_gaussian_packet, norm_sq, PacketSpec, PhotonAmplitude};
use photonloc_core::Complex64;
use proptest::prelude::*;

fn beta() -> impl Strategy<Value = f64> {
    -0.99f64..0.99
}

fn event() -> impl Strategy<Value = FourVector> {
    prop::array::uniform4(-10.0f64..10.0).prop_map(FourVector)
}

fn small_grid(kind: PlaneKind) -> Arc<HyperplaneGrid> {
    let plane = match kind {
        PlaneKind::Spacelike => Hyperplane::spacelike(0.2),
        PlaneKind::Timelike => Hyperplane::timelike(-0.4),
    };
    Arc::new(
        GridSpec::from_k_spacing(plane, [8, 8, 8], [0.5; 3])
            .with_k_center([0.0, 0.0, 6.0])
            .build()
            .unwrap(),
    )
}

fn state(grid: &Arc<HyperplaneGrid>, axis: [f64; 3], values: &[(f64, f64)]) -> PhotonAmplitude {
    let n = grid.len();
    let channels = std::array::from_fn(|c| {
        (0..n)
            .map(|i| {
                let (re, im) = values[(i * 4 + c) % values.len()];
                Complex64::new(re, im)
            })
            .collect()
    });
    PhotonAmplitude::from_channels(grid.clone(), axis, channels).unwrap()
}

fn values() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 61..67)
}

fn kind() -> impl Strategy<Value = PlaneKind> {
    prop_oneof![Just(PlaneKind::Spacelike), Just(PlaneKind::Timelike)]
}

fn close(a: Complex64, b: Complex64, scale: f64) -> bool {
    (a - b).norm() <= 1e-12 * scale.max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn boosts_preserve_the_interval(x in event(), y in event(), b in beta()) {
        let b = BoostParameters::new(b).unwrap();
        let (bx, by) = (boost_vector(&x, &b), boost_vector(&y, &b));
        let scale = 1.0 + contract(&x, &x).abs() + contract(&y, &y).abs() + x.euclidean_norm_sq() * b.gamma() * b.gamma();
        prop_assert!((contract(&bx, &by) - contract(&x, &y)).abs() <= 1e-12 * scale);
    }

    #[test]
    fn boosts_compose_by_velocity_addition(x in event(), b1 in beta(), b2 in beta()) {
        let (p, q) = (BoostParameters::new(b1).unwrap(), BoostParameters::new(b2).unwrap());
        let composed = boost_vector(&x, &p.compose(&q).unwrap());
        let stepwise = boost_vector(&boost_vector(&x, &p), &q);
        let scale = composed.euclidean_norm_sq().sqrt() + 1.0;
        for mu in 0..4 {
            prop_assert!((composed[mu] - stepwise[mu]).abs() <= 1e-9 * scale);
        }
        let back = boost_vector(&boost_vector(&x, &p), &p.inverse());
        for mu in 0..4 {
            prop_assert!((back[mu] - x[mu]).abs() <= 1e-12 * (1.0 + x.euclidean_norm_sq().sqrt()) * p.gamma() * p.gamma());
        }
    }

    #[test]
    fn boosted_planes_keep_kind_and_events(b in beta(), a in -5.0f64..5.0, y in prop::array::uniform3(-5.0f64..5.0)) {
        let frame = BoostParameters::new(b).unwrap();
        for plane in [Hyperplane::spacelike(a), Hyperplane::timelike(a)] {
            let moved = boost_hyperplane(&plane, &frame);
            prop_assert_eq!(moved.kind(), plane.kind());
            let n = moved.normal();
            prop_assert!((contract(&n, &n).abs() - 1.0).abs() <= 1e-12);
            let x = match plane.kind() {
                PlaneKind::Spacelike => FourVector::new(a, y[0], y[1], y[2]),
                PlaneKind::Timelike => FourVector::new(y[2], y[0], y[1], a),
            };
            let bx = boost_vector(&x, &frame);
            let residual = moved.normal_component(&bx) - moved.offset();
            prop_assert!(residual.abs() <= 1e-11 * frame.gamma() * frame.gamma() * 10.0);
        }
    }

    #[test]
    fn boosted_view_round_trips(b in beta(), a in -5.0f64..5.0) {
        let frame = ObserverFrame::new(b).unwrap();
        let back = ObserverFrame::new(-b).unwrap();
        for plane in [Hyperplane::spacelike(a), Hyperplane::timelike(a)] {
            let array = DetectorArraySpec::new(plane, [1.0; 3], [[-2.0, 2.0]; 3]).unwrap();
            let there = boosted_view(&array, &frame);
            let home = boosted_view(&there.array, &back).array.plane;
            for mu in 0..4 {
                prop_assert!((home.normal()[mu] - plane.normal()[mu]).abs() <= 1e-12 * frame.boost.gamma().powi(2));
            }
            prop_assert!((home.offset() - a).abs() <= 1e-11 * frame.boost.gamma().powi(2) * (1.0 + a.abs()));
        }
    }

    #[test]
    fn inner_product_is_sesquilinear_and_hermitian(
        k in kind(), u in values(), v in values(), w in values(),
        ar in -2.0f64..2.0, ai in -2.0f64..2.0,
    ) {
        let g = small_grid(k);
        let axis = [1.0, 0.0, 0.0];
        let (phi, psi, chi) = (state(&g, axis, &u), state(&g, axis, &v), state(&g, axis, &w));
        let a = Complex64::new(ar, ai);
        let combo = psi.scaled(a).try_add(&chi).unwrap();
        let lhs = inner_product(&phi, &combo).unwrap();
        let rhs = a * inner_product(&phi, &psi).unwrap() + inner_product(&phi, &chi).unwrap();
        let scale = norm_sq(&phi).sqrt() * (norm_sq(&psi).sqrt() * a.norm() + norm_sq(&chi).sqrt());
        prop_assert!(close(lhs, rhs, scale));
        let ab = inner_product(&phi, &psi).unwrap();
        let ba = inner_product(&psi, &phi).unwrap();
        prop_assert!(close(ab, ba.conj(), scale));
        let nn = inner_product(&phi, &phi).unwrap();
        prop_assert!(nn.re >= 0.0 && nn.im.abs() <= 1e-12 * nn.re.max(1.0));
    }

    #[test]
    fn basis_change_is_unitary(u in values(), v in values(), axis in prop::array::uniform3(-1.0f64..1.0)) {
        prop_assume!(axis.iter().map(|x| x * x).sum::<f64>() > 0.01);
        let g = small_grid(PlaneKind::Spacelike);
        let (phi, psi) = (state(&g, [1.0, 0.0, 0.0], &u), state(&g, [0.0, 1.0, 0.0], &v));
        let moved = psi.in_basis(axis);
        prop_assert!((norm_sq(&moved) - norm_sq(&psi)).abs() <= 1e-12 * norm_sq(&psi));
        let before = inner_product(&phi, &psi).unwrap();
        let after = inner_product(&phi, &moved).unwrap();
        prop_assert!(close(before, after, norm_sq(&phi).sqrt() * norm_sq(&psi).sqrt()));
    }

    #[test]
    fn resolution_of_identity_holds(u in values(), v in values()) {
        let g = Arc::new(GridSpec::new(Hyperplane::spacelike(0.0), [8, 8, 8], [0.7; 3]).half_shifted().build().unwrap());
        let (phi, psi) = (state(&g, [1.0, 0.0, 0.0], &u), state(&g, [0.3, 0.2, 1.0], &v));
        prop_assert!(completeness_defect(&phi, &psi).unwrap() <= 1e-12);
    }

    #[test]
    fn overlap_is_hermitian(i in 0usize..512, j in 0usize..512, c in 0usize..4) {
        let g = small_grid(PlaneKind::Timelike);
        let ch = Channel::ALL[c];
        let a = LocalizedStateSpec::at_grid_point(&g, i, ch.lambda, ch.epsilon);
        let b = LocalizedStateSpec::at_grid_point(&g, j, ch.lambda, ch.epsilon);
        let ab = overlap(&a, &b, &g).unwrap();
        let ba = overlap(&b, &a, &g).unwrap();
        prop_assert!(close(ab, ba.conj(), ab.norm()));
    }

    #[test]
    fn transport_composes(d1 in 0.0f64..4.0, d2 in 0.0f64..4.0, x1 in -0.3f64..0.3) {
        let g = Arc::new(
            GridSpec::from_k_spacing(Hyperplane::timelike(0.0), [16, 16, 16], [0.25; 3])
                .with_k_center([0.0, 0.0, 6.0])
                .build()
                .unwrap(),
        );
        let psi = make_gaussian_packet(&PacketSpec::new([x1, 0.0, 6.0], [0.2; 3], Lambda::One, Epsilon::Plus), &g).unwrap();
        let once = transport(&psi, d1 + d2).unwrap();
        let twice = transport(&transport(&psi, d1).unwrap(), d2).unwrap();
        let diff = inner_product(&once.try_sub(&twice).unwrap(), &once.try_sub(&twice).unwrap()).unwrap();
        prop_assert!(diff.re.sqrt() <= 1e-12);
        prop_assert!((norm_sq(&once) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn coarsening_conserves_probability(seed in 0u64..1000, f in prop_oneof![Just([2usize, 2, 2]), Just([4, 1, 2]), Just([8, 8, 8])]) {
        let g = small_grid(PlaneKind::Timelike);
        let psi = make_gaussian_packet(&PacketSpec::new([0.0, 0.0, 6.0], [0.15; 3], Lambda::Two, Epsilon::Plus), &g).unwrap();
        let fine = detection_probabilities(&psi, &DetectorArraySpec::covering(&g, [1, 1, 1]).unwrap()).unwrap();
        let coarse = fine.coarsen(f).unwrap();
        prop_assert!((coarse.total() - fine.total()).abs() <= 1e-13);
        let direct = detection_probabilities(&psi, &DetectorArraySpec::covering(&g, f).unwrap()).unwrap();
        for (a, b) in coarse.probabilities.iter().zip(&direct.probabilities) {
            prop_assert!((a - b).abs() <= 1e-14);
        }
        let events = sample_events(&coarse, 200, seed).unwrap();
        prop_assert_eq!(&events, &sample_events(&coarse, 200, seed).unwrap());
        for e in &events {
            prop_assert!(coarse.probabilities[coarse.array.pixel_index(e.pixel)] > 0.0);
        }
    }
}
