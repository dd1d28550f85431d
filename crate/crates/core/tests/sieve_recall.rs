//! True solutions pass every congruence, whichever prime ideal labels the roots.

use quintic_pib::embed::PrecisionPolicy;
use quintic_pib::field::{build_pair_system, PureQuinticField};
use quintic_pib::sieve::{select_primes, triple_identity, SievePrime};
use quintic_pib::unitdata::{load_unit_file, prepare_units, UnitSystem};
use quintic_pib::verify::{brute_force_oracle, Reconstructor};

fn units(m: i64) -> UnitSystem {
    let path = format!("{}/../../data/units/m{m}.units", env!("CARGO_MANIFEST_DIR"));
    let policy = PrecisionPolicy::default();
    let ps = build_pair_system(&PureQuinticField::new(m, &policy).unwrap()).unwrap();
    prepare_units(load_unit_file(path.as_ref(), m).unwrap(), &ps, &policy).unwrap().0
}

#[test]
fn oracle_solutions_survive_every_labeling() {
    for m in [2, 6, 11] {
        let us = units(m);
        let rec = Reconstructor::new(&us, &PrecisionPolicy::default()).unwrap();
        let oracle = brute_force_oracle(m, 2).unwrap();
        let exps: Vec<[i64; 5]> = oracle.iter().map(|x| rec.forward_exponents(x).unwrap().unwrap()).collect();
        for base in select_primes(&us, 3).unwrap() {
            for first in 0..5 {
                for second in (0..5).filter(|&s| s != first) {
                    let sp = SievePrime::with_labeling(base.p, &us, first, second).unwrap();
                    assert!(sp.is_consistent(m));
                    for e in &exps {
                        let four = [e[1] as i16, e[2] as i16, e[3] as i16, e[4] as i16];
                        assert_eq!(sp.four_term(&four), 1, "m={m} p={} labeling ({first},{second})", sp.p);
                        assert!(triple_identity(&sp, &e.map(|v| v as i16)));
                    }
                }
            }
        }
    }
}

#[test]
fn second_solution_round_trips_through_exponents() {
    let us = units(2);
    let rec = Reconstructor::new(&us, &PrecisionPolicy::default()).unwrap();
    let e = rec.forward_exponents(&[1, 1, 1, 1]).unwrap().unwrap();
    assert_ne!(e, [0; 5]);
    let c = rec.reconstruct(&e).unwrap();
    assert_eq!(quintic_pib::verify::normalize(&c.x.unwrap()).unwrap(), [1, 1, 1, 1]);
}
