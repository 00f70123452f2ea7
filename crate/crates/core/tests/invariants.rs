//! Property tests for cross-module invariants that are not already pinned
//! by unit or acceptance tests.

use num_traits::Zero;
use proptest::prelude::*;

use coarsekit_core::arith::{rat_int, Rat};
use coarsekit_core::coarse::{control_profile, Entourage};
use coarsekit_core::complexes::{
    connecting_map, distortion, nerve, point_distance, stars_decomposition, BarycentricPoint,
    Distortion, SimplicialComplex, SphericalComplex, SubComplex,
};
use coarsekit_core::spaces::{
    degree, lebesgue_exact, lebesgue_lower_bound, r_degree, refines, verify_metric, Cover,
    FilteredMetricSpace, MetricReport,
};

/// Connected weighted graph space: a random spanning tree plus extra edges.
fn graph_space(n: usize, seed: u64) -> FilteredMetricSpace {
    let mut state = seed | 1;
    let mut next = move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        state >> 33
    };
    let ids: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
    let mut edges: Vec<(usize, usize, Rat)> = Vec::new();
    for v in 1..n {
        let u = (next() % v as u64) as usize;
        edges.push((u, v, rat_int(1 + (next() % 5) as i64)));
    }
    for _ in 0..n / 2 {
        let a = (next() % n as u64) as usize;
        let b = (next() % n as u64) as usize;
        if a != b {
            edges.push((a, b, rat_int(1 + (next() % 5) as i64)));
        }
    }
    FilteredMetricSpace::from_graph(ids, &edges).unwrap()
}

fn random_cover(space: &FilteredMetricSpace, seed: u64) -> Cover {
    let mut state = seed | 1;
    let mut next = move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        state >> 33
    };
    let n = space.len();
    let count = 1 + (next() % 4) as usize;
    let mut members: Vec<Vec<usize>> = (0..count)
        .map(|_| {
            let size = 1 + (next() % n as u64) as usize;
            (0..size).map(|_| (next() % n as u64) as usize).collect()
        })
        .collect();
    // force coverage
    members.push((0..n).collect());
    Cover::new(space, members).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_graph_metrics_satisfy_the_axioms(n in 2usize..9, seed in any::<u64>()) {
        let s = graph_space(n, seed);
        let pairs: Vec<(String, String, Rat)> = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| {
                (s.point_ids()[i].clone(), s.point_ids()[j].clone(), s.d(i, j).clone())
            })
            .collect();
        prop_assert!(matches!(
            verify_metric(s.point_ids(), &pairs).unwrap(),
            MetricReport::Pass
        ));
    }

    #[test]
    fn ball_growth_is_monotone_in_radius(n in 2usize..9, seed in any::<u64>(), a in 0u64..20, b in 0u64..20) {
        let s = graph_space(n, seed);
        let (lo, hi) = (a.min(b), a.max(b));
        let small = s.bounded_geometry_profile(&rat_int(lo as i64)).0;
        let big = s.bounded_geometry_profile(&rat_int(hi as i64)).0;
        prop_assert!(small <= big);
    }

    #[test]
    fn lebesgue_lower_bound_is_a_lower_bound(n in 2usize..8, seed in any::<u64>()) {
        let s = graph_space(n, seed);
        let c = random_cover(&s, seed ^ 0xabc);
        let lower = lebesgue_lower_bound(&s, &c).unwrap();
        let exact = lebesgue_exact(&s, &c, 20).unwrap();
        prop_assert!(lower <= exact, "lower {lower} > exact {exact}");
    }

    #[test]
    fn refinement_is_transitive(n in 2usize..8, seed in any::<u64>()) {
        let s = graph_space(n, seed);
        // singletons refine members refine the whole space
        let singles = Cover::new(&s, (0..n).map(|i| vec![i]).collect()).unwrap();
        let mid = random_cover(&s, seed ^ 0x123);
        let whole = Cover::new(&s, vec![(0..n).collect()]).unwrap();
        prop_assert!(refines(&singles, &singles).unwrap());
        if refines(&singles, &mid).unwrap() && refines(&mid, &whole).unwrap() {
            prop_assert!(refines(&singles, &whole).unwrap());
        }
    }

    #[test]
    fn multiplicity_bounds_r_degree(n in 2usize..9, seed in any::<u64>(), r in 1i64..8) {
        let s = graph_space(n, seed);
        let c = random_cover(&s, seed ^ 0x777);
        let deg = degree(&s, &c).unwrap();
        let (rdeg, _) = r_degree(&s, &c, &rat_int(r)).unwrap();
        prop_assert!(deg <= rdeg);
    }

    #[test]
    fn control_profiles_never_increase(n in 3usize..9, seed in any::<u64>(), pair_count in 1usize..10) {
        let s = graph_space(n, seed).with_filtration(vec![
            (0..n / 2 + 1).collect(),
            (0..n).collect(),
        ]).unwrap();
        let mut state = seed | 3;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(99);
            state >> 33
        };
        let pairs: Vec<(usize, usize)> = (0..pair_count)
            .map(|_| ((next() % n as u64) as usize, (next() % n as u64) as usize))
            .collect();
        let e = Entourage::new(&s, pairs).unwrap();
        let profile = control_profile(&s, &e).unwrap();
        for w in profile.sups.windows(2) {
            prop_assert!(w[0] >= w[1]);
        }
    }
}

#[test]
fn connecting_maps_are_simplicial_on_a_thousand_refinement_pairs() {
    let mut state = 0x5eedu64;
    let mut next = move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        state >> 33
    };
    for case in 0..1000 {
        let n = 4 + (next() % 8) as usize;
        let s = graph_space(n, next());
        let fine = random_cover(&s, next());
        // coarsen by merging adjacent members
        let mut merged: Vec<Vec<usize>> = Vec::new();
        for (i, m) in fine.members().iter().enumerate() {
            if i % 2 == 0 || merged.is_empty() {
                merged.push(m.clone());
            } else {
                let last = merged.last_mut().unwrap();
                last.extend(m.iter().copied());
                last.sort_unstable();
                last.dedup();
            }
        }
        let coarse = Cover::new(&s, merged).unwrap();
        assert!(refines(&fine, &coarse).unwrap(), "case {case}: merge must coarsen");
        let nf = nerve(&fine).unwrap();
        let nc = nerve(&coarse).unwrap();
        // construction verifies simpliciality and fails loudly otherwise
        let map = connecting_map(&fine, &coarse, &nf, &nc).unwrap();
        for simplex in nf.simplices() {
            assert!(nc.contains(&map.image_simplex(simplex)), "case {case}");
        }
    }
}

fn random_complex(seed: u64, max_dim: usize) -> SimplicialComplex {
    let mut state = seed | 1;
    let mut next = move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(7);
        state >> 33
    };
    loop {
        let verts = 3 + (next() % 6) as usize;
        let labels: Vec<String> = (0..verts).map(|v| format!("v{v}")).collect();
        let mut maximal = Vec::new();
        for _ in 0..2 + next() % 4 {
            let size = 2 + (next() % max_dim as u64) as usize;
            let mut s: Vec<u32> = (0..size).map(|_| (next() % verts as u64) as u32).collect();
            s.sort_unstable();
            s.dedup();
            if s.len() >= 2 {
                maximal.push(s);
            }
        }
        if maximal.is_empty() {
            continue;
        }
        return SimplicialComplex::from_maximal(labels, maximal).unwrap();
    }
}

#[test]
fn skeleton_distances_form_a_metric_per_component() {
    for seed in 0..80u64 {
        let k = random_complex(seed, 3);
        let sc = SphericalComplex::new(k.clone(), Rat::zero());
        let n = k.vertex_count() as u32;
        for a in 0..n {
            for b in 0..n {
                let ab = sc.skeleton_hops(a, b).unwrap();
                assert_eq!(ab, sc.skeleton_hops(b, a).unwrap());
                if a == b {
                    assert_eq!(ab, Some(0));
                }
                for c in 0..n {
                    if let (Some(ab), Some(ac), Some(cb)) = (
                        ab,
                        sc.skeleton_hops(a, c).unwrap(),
                        sc.skeleton_hops(c, b).unwrap(),
                    ) {
                        assert!(ab <= ac + cb, "seed {seed}: triangle violated");
                    }
                }
            }
        }
    }
}

#[test]
fn point_distance_upper_bounds_shrink_with_depth() {
    for seed in 0..20u64 {
        let k = random_complex(seed, 3);
        let Some(edge) = k.simplices().iter().find(|s| s.len() == 2).cloned() else { continue };
        let sc = SphericalComplex::new(k.clone(), Rat::zero());
        let p = BarycentricPoint::new(
            &k,
            edge.clone(),
            vec![coarsekit_core::arith::rat(1, 3), coarsekit_core::arith::rat(2, 3)],
        )
        .unwrap();
        // a vertex in the same component but not on the carrier, when one exists
        let hops = k.bfs_hops(edge[0]);
        let Some(target) = (0..k.vertex_count() as u32)
            .find(|&w| !edge.contains(&w) && hops[w as usize].is_some())
        else {
            continue;
        };
        let q = BarycentricPoint::vertex(&k, target).unwrap();
        let shallow = point_distance(&sc, &p, &q, 1).unwrap();
        let deep = point_distance(&sc, &p, &q, 2).unwrap();
        assert!(deep.hi <= shallow.hi, "seed {seed}");
        assert!(shallow.lo <= shallow.hi && deep.lo <= deep.hi);
    }
}

#[test]
fn star_layers_cover_and_separate() {
    for seed in 0..50u64 {
        let k = random_complex(seed, 2);
        let d = stars_decomposition(&k).unwrap();
        let mut union = SubComplex::empty();
        for layer in &d.layers {
            union = union.union(&layer.union);
            assert!(layer.stars_disjoint, "seed {seed}: layer {} stars overlap", layer.k);
            if layer.stars.len() > 1 {
                if let Some(hops) = layer.min_separation_hops {
                    assert!(hops > 0, "seed {seed}: zero separation");
                }
            }
        }
        assert_eq!(union, d.base.full_subcomplex(), "seed {seed}: layers must cover");
    }
}

#[test]
fn distortion_is_at_least_one_and_exact_on_the_whole() {
    for seed in 0..50u64 {
        let k = random_complex(seed, 3);
        let sc = SphericalComplex::new(k.clone(), Rat::zero());
        assert_eq!(
            distortion(&sc, &k.full_subcomplex()).unwrap(),
            Distortion::Finite(rat_int(1))
        );
        // random subcomplex: closure of half the maximal simplices
        let maximal = k.maximal_simplices();
        let y = SubComplex::from_simplices(maximal.into_iter().step_by(2));
        if y.is_empty() {
            continue;
        }
        match distortion(&sc, &y).unwrap() {
            Distortion::Finite(r) => assert!(r >= rat_int(1), "seed {seed}"),
            Distortion::Infinite => {}
        }
    }
}
