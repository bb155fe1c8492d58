use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qtsp::circuits::{schedule, Strategy};
use qtsp::encodings::{encode, random_instance, EncodingKind, Route};
use qtsp::resources::energy_upper_bound;
use qtsp::simulator::{build_diagonal, expectation, qaoa_state, QaoaParams};

fn kinds(n: usize) -> Vec<(EncodingKind, Option<usize>)> {
    let mut v = vec![(EncodingKind::Qubo, None), (EncodingKind::Hobo, None), (EncodingKind::Enum, None)];
    let kmax = (usize::BITS - (n - 1).leading_zeros()) as usize;
    v.extend((1..=kmax).map(|k| (EncodingKind::Mixed, Some(k))));
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn routes_round_trip_with_tour_energy(n in 3usize..6, seed in 0u64..1000) {
        let inst = random_instance(n, seed).unwrap();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let route = Route::new(perm).unwrap();
        for (kind, k) in kinds(n) {
            let p = encode(&inst, kind, k, false).unwrap();
            let bits = p.encode_route(&route).unwrap();
            let back = p.decode(&bits);
            prop_assert_eq!(back.route(), Some(&route));
            let e = p.energy(&bits);
            let want = inst.b * inst.cost(&route);
            prop_assert!((e - want).abs() <= 1e-9 * want.abs().max(1.0), "{} {} vs {}", kind, e, want);
            if let Some(h) = &p.hamiltonian {
                prop_assert!((h.evaluate(&bits).unwrap() - e).abs() <= 1e-9 * e.abs().max(1.0));
            }
        }
    }

    #[test]
    fn schedules_cover_the_ising_form(n in 3usize..6, seed in 0u64..1000) {
        let inst = random_instance(n, seed).unwrap();
        for (kind, k) in kinds(n).into_iter().filter(|(k, _)| *k != EncodingKind::Enum) {
            let p = encode(&inst, kind, k, false).unwrap();
            let ising = p.hamiltonian.as_ref().unwrap().to_ising();
            for strategy in [Strategy::PerTerm, Strategy::GrayAncilla] {
                let s = schedule(&p, strategy).unwrap();
                s.check_disjoint().unwrap();
                let back = s.to_ising().unwrap();
                let diff = back.add_poly(&ising.scale(-1.0));
                prop_assert!(diff.terms().all(|(_, c)| c.abs() < 1e-9), "{} {:?}", kind, strategy);
            }
        }
    }
}

#[test]
fn qaoa_energy_stays_within_spectrum() {
    let inst = random_instance(3, 21).unwrap();
    for (kind, k) in kinds(3) {
        let p = encode(&inst, kind, k, false).unwrap();
        let h = build_diagonal(&p).unwrap();
        let range = energy_upper_bound(&p).unwrap();
        let lo = h.energies.iter().copied().fold(f64::INFINITY, f64::min);
        let params = QaoaParams::new(vec![0.3, 1.2], vec![0.7, 0.1], p.objective_period()).unwrap();
        let e = expectation(&qaoa_state(&h, &params), &h);
        assert!(e >= lo - 1e-9 && e <= range.upper + 1e-9, "{kind}: {e}");
    }
}
