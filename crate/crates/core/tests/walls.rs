mod common;

use common::{biclique_brute, Rewriter};
use proptest::prelude::*;
use racg::decompose::{bpp_of_poset, disjoint_decomposition, low_crossing_bound, minimal_wall_low_crossings};
use racg::walls::{count_linear_extensions, gamma_of, linear_extensions, separates, walls_cross, walls_of, Wall};
use racg::{builtin, CoxeterSystem, Gen, NormalForm};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fig_a1() -> CoxeterSystem {
    builtin("fig-a1").unwrap()
}

#[test]
fn poset_matches_oracles_on_ball() {
    let s = fig_a1();
    let r = Rewriter::new(&s);
    for g in s.enumerate_ball(6, 12).unwrap() {
        let p = walls_of(&s, &g);
        assert_eq!(p.len(), g.len());
        let geo = r.geodesics(g.letters());
        assert_eq!(count_linear_extensions(&p).unwrap(), geo.len() as u128, "{:?}", g);
        let mut ext = linear_extensions(&p, usize::MAX).unwrap();
        ext.sort();
        assert_eq!(ext, geo);
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                assert_eq!(p.incomparable(i, j), walls_cross(&s, &p.walls()[i], &p.walls()[j]).unwrap());
            }
        }
    }
}

#[test]
fn bpp_matches_brute_force() {
    for name in ["fig-a1", "pentagon"] {
        let s = builtin(name).unwrap();
        for g in s.enumerate_ball(7, 12).unwrap() {
            let p = walls_of(&s, &g);
            assert_eq!(bpp_of_poset(&p), biclique_brute(&p), "{} {:?}", name, g);
        }
    }
}

#[test]
fn examples() {
    let s = fig_a1();
    let w = |t: &str| s.parse_word(t).unwrap();
    let g = |t: &str| s.normalize(&w(t));
    let wb = Wall::standard(&s, s.gen("b"));
    let wc = Wall::new(&s, &w("bdea"), s.gen("c"));
    assert!(!walls_cross(&s, &wb, &wc).unwrap());
    let (wa, wc0) = (Wall::standard(&s, s.gen("a")), Wall::standard(&s, s.gen("c")));
    assert_eq!(gamma_of(&s, &wa, &wc0).unwrap(), g("ac"));
    let gamma = g("bdbdacac");
    let p = walls_of(&s, &gamma);
    assert_eq!(count_linear_extensions(&p).unwrap(), Rewriter::new(&s).geodesics(gamma.letters()).len() as u128);
    assert_eq!(bpp_of_poset(&p), 4);
    let (wall, lc) = minimal_wall_low_crossings(&s, &gamma, 2).unwrap();
    let pos = p.position(&wall).unwrap();
    let direct = (0..p.len()).filter(|&j| j != pos && p.incomparable(pos, j)).count();
    assert_eq!(direct, lc.crossings);
    assert!(direct <= 5 * 16);
}

/// Each letter uniform among the extending ones, drawn from a fixed stream.
fn random_geodesic(s: &CoxeterSystem, len: usize, seed: u64) -> Vec<Gen> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    s.random_geodesic(len, &mut rng)
}

#[test]
fn decompositions_on_random_geodesics() {
    let s = fig_a1();
    for seed in 0..60u64 {
        let len = 1 + (seed as usize * 7) % 20;
        let g = s.normalize(&random_geodesic(&s, len, seed));
        let d = bpp_of_poset(&walls_of(&s, &g));
        let dd = disjoint_decomposition(&s, &g, d).unwrap();
        assert_eq!(dd.itinerary.gamma(&s), g);
        assert_eq!(dd.itinerary.len(), g.len());
        for (i, a) in dd.chain.iter().enumerate() {
            for b in &dd.chain[i + 1..] {
                assert!(!walls_cross(&s, a, b).unwrap());
            }
        }
        for sp in &dd.spacers {
            assert!(sp.len() <= dd.r_prime);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn walls_separate_exactly_prefix_chambers(seed in 0u64..10_000, len in 1usize..12) {
        let s = fig_a1();
        let letters = random_geodesic(&s, len, seed);
        let g = s.normalize(&letters);
        let p = walls_of(&s, &g);
        for w in p.walls() {
            prop_assert!(separates(&s, w, &g));
            prop_assert!(!separates(&s, w, &NormalForm::identity()));
        }
        prop_assert_eq!(p.len(), g.len());
    }

    #[test]
    fn low_crossing_bound_holds(seed in 0u64..10_000, len in 1usize..14) {
        let s = fig_a1();
        let g = s.normalize(&random_geodesic(&s, len, seed));
        let p = walls_of(&s, &g);
        let d = bpp_of_poset(&p);
        let (w, lc) = minimal_wall_low_crossings(&s, &g, d).unwrap();
        let pos = p.position(&w).unwrap();
        prop_assert!(p.minimal(&vec![true; p.len()]).contains(&pos));
        prop_assert!(lc.crossings <= low_crossing_bound(d));
    }
}
