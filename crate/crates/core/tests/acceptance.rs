//! Acceptance suite: one test per release criterion, each printing a
//! PASS line on success. Every tolerance is pinned here; expected values come
//! from independent oracles computed inside this file.

use std::collections::BTreeSet;

use num_traits::Zero;
use rayon::prelude::*;

use coarsekit_core::arith::{pi_over_two, rat, rat_int, BitSet, Length, Rat};
use coarsekit_core::coarse::{excisive_profile, ExcisiveEntry, PointMap};
use coarsekit_core::coarsening::{check_swindle_hypotheses, swindle_sequence, CoarseningSpace};
use coarsekit_core::complexes::{
    nerve, point_distance, BarycentricPoint, SimplicialComplex, SphericalComplex,
};
use coarsekit_core::decomposition::{
    admissibility_report, build_canonical_tree, verify_tree_labels,
};
use coarsekit_core::json::SpaceRepr;
use coarsekit_core::kgroups::{exactness_check, quotient_tower_report, split_union_sequence};
use coarsekit_core::roe::{
    block_swindle, covering_isometry, opnorm1, opnorm2_le, rotation_identities_hold, split_along,
    support_within_thickening, swindle_rotation, FiniteOperator, IsometryPair,
};
use coarsekit_core::spaces::{
    brick_cover, build_anticech, Cover, FilteredMetricSpace,
};

/// Deterministic generator for test data.
struct Lcg(u64);

impl Lcg {
    fn new(seed: u64) -> Self {
        Lcg(seed)
    }
    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        self.0 >> 33
    }
    fn below(&mut self, n: u64) -> u64 {
        self.next() % n
    }
}

#[test]
fn c01_nerve_fidelity() {
    // unit interval sampled at twelfths, members [0, 2/3) and (1/2, 1]
    let ids: Vec<String> = (0..=12).map(|k| format!("{k}/12")).collect();
    let s = FilteredMetricSpace::from_matrix(ids, |i, j| rat((i as i64 - j as i64).abs(), 12))
        .unwrap();
    let u1: Vec<usize> = (0..8).collect();
    let u2: Vec<usize> = (7..=12).collect();
    let cover = Cover::new(&s, vec![u1, u2]).unwrap();
    let nv = nerve(&cover).unwrap();
    let expected: BTreeSet<Vec<u32>> =
        [vec![0], vec![1], vec![0, 1]].into_iter().collect();
    assert_eq!(nv.simplices(), &expected, "interval nerve must be exactly a 1-simplex");

    // circle of twelve points, three overlapping arcs
    let n = 12usize;
    let ids: Vec<String> = (0..n).map(|k| k.to_string()).collect();
    let s = FilteredMetricSpace::from_matrix(ids, |i, j| {
        let d = (i as i64 - j as i64).rem_euclid(n as i64);
        rat_int(d.min(n as i64 - d))
    })
    .unwrap();
    let arcs = Cover::new(
        &s,
        vec![(0..=4).collect(), (4..=8).collect(), (8..=12).map(|k| k % n).collect()],
    )
    .unwrap();
    let nv = nerve(&arcs).unwrap();
    let expected: BTreeSet<Vec<u32>> =
        [vec![0], vec![1], vec![2], vec![0, 1], vec![1, 2], vec![0, 2]]
            .into_iter()
            .collect();
    assert_eq!(nv.simplices(), &expected, "circle nerve must be the hollow triangle");
    println!("criterion 01 nerve fidelity: PASS");
}

/// Independent BFS oracle over an explicit adjacency table.
fn bfs_oracle(adj: &[Vec<usize>], src: usize) -> Vec<Option<u64>> {
    let mut dist = vec![None; adj.len()];
    let mut queue = std::collections::VecDeque::new();
    dist[src] = Some(0u64);
    queue.push_back(src);
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if dist[v].is_none() {
                dist[v] = Some(dist[u].unwrap() + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

fn random_complex(rng: &mut Lcg) -> SimplicialComplex {
    loop {
        let verts = 4 + rng.below(7) as usize;
        let labels: Vec<String> = (0..verts).map(|v| format!("v{v}")).collect();
        let count = 2 + rng.below(5) as usize;
        let mut maximal = Vec::new();
        for _ in 0..count {
            let size = 2 + rng.below(3).min(2) as usize + rng.below(2) as usize; // 2..=4
            let mut s: Vec<u32> = (0..size).map(|_| rng.below(verts as u64) as u32).collect();
            s.sort_unstable();
            s.dedup();
            if s.len() >= 2 {
                maximal.push(s);
            }
        }
        if maximal.is_empty() {
            continue;
        }
        let k = SimplicialComplex::from_maximal(labels, maximal).unwrap();
        if k.simplices().len() <= 60 && k.dim() <= 3 {
            return k;
        }
    }
}

#[test]
fn c02_skeleton_distances_match_bfs_oracle() {
    let mut rng = Lcg::new(0xc2);
    for case in 0..200 {
        let k = random_complex(&mut rng);
        let sc = SphericalComplex::new(k.clone(), Rat::zero());
        // oracle adjacency straight from the 1-simplices
        let mut adj = vec![Vec::new(); k.vertex_count()];
        for s in k.simplices().iter().filter(|s| s.len() == 2) {
            adj[s[0] as usize].push(s[1] as usize);
            adj[s[1] as usize].push(s[0] as usize);
        }
        for v in 0..k.vertex_count() as u32 {
            let oracle = bfs_oracle(&adj, v as usize);
            for w in 0..k.vertex_count() as u32 {
                let got = sc.vertex_distance(v, w).unwrap();
                let want = oracle[w as usize]
                    .map(|h| Length::quarters(rat_int(h as i64)));
                assert_eq!(got, want, "case {case}: vertices {v},{w}");
                // interval containment for vertex queries
                if let Some(d) = &want {
                    let p = BarycentricPoint::vertex(&k, v).unwrap();
                    let q = BarycentricPoint::vertex(&k, w).unwrap();
                    let iv = point_distance(&sc, &p, &q, 1).unwrap();
                    assert!(iv.lo <= *d && *d <= iv.hi, "case {case}: interval misses");
                }
            }
        }
        // a nontrivial interval query per case: midpoint of an edge against a
        // reachable vertex stays within a quarter turn of the endpoint value
        if let Some(edge) = k.simplices().iter().find(|s| s.len() == 2) {
            let mid = BarycentricPoint::new(&k, edge.clone(), vec![rat(1, 2), rat(1, 2)]).unwrap();
            let hops = bfs_oracle(&adj, edge[0] as usize);
            if let Some((w, h)) = hops.iter().enumerate().find_map(|(w, d)| d.map(|h| (w, h))) {
                let q = BarycentricPoint::vertex(&k, w as u32).unwrap();
                let iv = point_distance(&sc, &mid, &q, 1).unwrap();
                let vd = rat_int(h as i64) * pi_over_two();
                let quarter = pi_over_two() / rat_int(2);
                let slack = rat(1, 1000);
                assert!(iv.lo.to_rat() <= &vd + &quarter + &slack);
                assert!(iv.hi.to_rat() >= &vd - &quarter - &slack);
                assert!(iv.lo <= iv.hi);
            }
        }
    }
    println!("criterion 02 spherical skeleton distances: PASS");
}

/// Test-local r-degree recount.
fn r_degree_oracle(space: &FilteredMetricSpace, cover: &Cover, r: &Rat) -> usize {
    let mut best = 0;
    for w in 0..space.len() {
        let count = cover
            .members()
            .iter()
            .filter(|m| m.iter().any(|&u| space.d(w, u) < r))
            .count();
        best = best.max(count);
    }
    best
}

#[test]
fn c03_asymptotic_dimension_witnesses() {
    let line = FilteredMetricSpace::int_grid(1, -40, 40).unwrap();
    let b1 = brick_cover(&line, 1, &rat_int(5), 10).unwrap();
    assert_eq!(b1.r_degree, 2);
    assert!(b1.satisfied);
    assert_eq!(r_degree_oracle(&line, &b1.cover, &rat_int(5)), 2);

    let plane = FilteredMetricSpace::int_grid(2, -20, 20).unwrap();
    let b2 = brick_cover(&plane, 2, &rat_int(2), 8).unwrap();
    assert_eq!(b2.r_degree, 3);
    assert!(b2.satisfied);
    assert_eq!(r_degree_oracle(&plane, &b2.cover, &rat_int(2)), 3);
    println!("criterion 03 asymptotic dimension witnesses: PASS");
}

#[test]
fn c04_anticech_certification() {
    let s = FilteredMetricSpace::int_interval(-200, 200);
    let schedule = vec![rat_int(1), rat_int(4), rat_int(16), rat_int(64)];
    let ac = build_anticech(&s, &schedule).unwrap();
    assert_eq!(ac.covers.len(), 4);
    for i in 0..ac.covers.len() - 1 {
        // independent recomputation of both sides of the chain inequality
        let diam = {
            let mut best = Rat::zero();
            for m in ac.covers[i].members() {
                for (a, &x) in m.iter().enumerate() {
                    for &y in &m[a + 1..] {
                        best = best.max(s.d(x, y).clone());
                    }
                }
            }
            best
        };
        let lebesgue = {
            // largest realized r such that every closed r-ball fits in a member
            let next = &ac.covers[i + 1];
            let fits = |r: &Rat| -> bool {
                (0..s.len()).all(|x| {
                    let ball: Vec<usize> = (0..s.len()).filter(|&y| s.d(x, y) <= r).collect();
                    next.members()
                        .iter()
                        .any(|m| ball.iter().all(|p| m.binary_search(p).is_ok()))
                })
            };
            let mut best = Rat::zero();
            for r in s.realized_distances() {
                if r > &diam && best >= diam {
                    break; // once past the needed bound, stop scanning
                }
                if fits(r) {
                    best = r.clone();
                }
            }
            best
        };
        assert!(
            diam <= lebesgue,
            "step {i}: diameter {diam} exceeds recomputed lower bound {lebesgue}"
        );
        // and the certificate agrees
        assert_eq!(ac.certificate.steps[i].chain_inequality_holds, Some(true));
    }
    println!("criterion 04 anti-Cech certification: PASS");
}

#[test]
fn c05_excisiveness() {
    // half-line split of an interval: S(R) = R exactly
    let s = FilteredMetricSpace::int_interval(-50, 50);
    let val = |i: usize| s.point_ids()[i].parse::<i64>().unwrap();
    let e: Vec<usize> = (0..s.len()).filter(|&i| val(i) >= 0).collect();
    let f: Vec<usize> = (0..s.len()).filter(|&i| val(i) <= 0).collect();
    let scales: Vec<Rat> = (1..=10).map(rat_int).collect();
    let profile = excisive_profile(&s, &e, &f, &scales).unwrap();
    for (k, entry) in profile.iter().enumerate() {
        match entry {
            ExcisiveEntry::Ok { r, s } => {
                assert_eq!(r, &(k + 1).to_string());
                assert_eq!(s, r, "half-line split must report S(R) = R");
            }
            ExcisiveEntry::Fail { r } => panic!("unexpected failure at R = {r}"),
        }
    }

    // coarsening decomposition: lower levels against the upper cone
    let w = FilteredMetricSpace::int_interval(-30, 30);
    let ac = build_anticech(&w, &[rat_int(1), rat_int(2), rat_int(4), rat_int(8)]).unwrap();
    let x = CoarseningSpace::build(&w, &ac.covers, 0).unwrap();
    assert_eq!(x.level_count(), 4);
    let ms = x.as_metric_space().unwrap();
    let scales: Vec<Rat> = (1..=4).map(rat_int).collect();
    for i in 1..=4u32 {
        let lower: Vec<usize> = x.partial_space(i).unwrap();
        let upper: Vec<usize> =
            (0..x.node_count()).filter(|&id| x.projection(id).unwrap() >= i).collect();
        let profile = excisive_profile(&ms, &lower, &upper, &scales).unwrap();
        for entry in &profile {
            assert!(
                matches!(entry, ExcisiveEntry::Ok { .. }),
                "level {i}: {entry:?} must be excisive"
            );
        }
    }
    println!("criterion 05 excisiveness: PASS");
}

fn random_operator(rng: &mut Lcg, space: &FilteredMetricSpace, channels: usize) -> FiniteOperator {
    let mut t = FiniteOperator::square(space, channels);
    let nnz = 1 + rng.below(10) as usize;
    for _ in 0..nnz {
        let rp = rng.below(space.len() as u64) as u32;
        let cp = rng.below(space.len() as u64) as u32;
        let rc = rng.below(channels as u64) as u32;
        let cc = rng.below(channels as u64) as u32;
        let num = rng.below(9) as i64 - 4;
        let den = 1 + rng.below(3) as i64;
        t.set((rp, rc), (cp, cc), rat(num, den)).unwrap();
    }
    t
}

#[test]
fn c06_operator_matrix_identities() {
    let space = FilteredMetricSpace::int_interval(0, 5);
    let n = space.len();
    let results: Vec<bool> = (0..1000u64)
        .into_par_iter()
        .map(|seed| {
            let mut rng = Lcg::new(0xc6_0000 + seed);
            let t = random_operator(&mut rng, &space, 1);
            // random split with overlap allowed
            let cut = 1 + rng.below((n - 1) as u64) as usize;
            let overlap = rng.below(2) as usize;
            let y = BitSet::from_indices(n, 0..cut.min(n));
            let z = BitSet::from_indices(n, cut.saturating_sub(overlap)..n);
            let (ty, tz) = split_along(&t, &y, &z).unwrap();
            let reassembles = ty.add(&tz).unwrap() == t;
            let r = t.propagation(&space).unwrap();
            let thickening_ok = support_within_thickening(&space, &ty, &y, &r)
                && support_within_thickening(&space, &tz, &z, &r);
            // truncation norm inequalities, exact at p = 1 and p = 2
            let tr = t.truncate(&y);
            let p1 = opnorm1(&tr) <= opnorm1(&t);
            let p2 = opnorm2_le(&tr, &t);
            reassembles && thickening_ok && p1 && p2
        })
        .collect();
    assert!(results.iter().all(|&ok| ok), "a split or norm identity failed");

    // isometry pairs and rotation identities over random maps
    let target = FilteredMetricSpace::int_interval(0, 7);
    let rot_results: Vec<bool> = (0..200u64)
        .into_par_iter()
        .map(|seed| {
            let mut rng = Lcg::new(0xc6_ffff + seed);
            let m = 8usize;
            let f = PointMap::new(
                &target,
                &target,
                (0..8).map(|_| rng.below(8) as usize).collect(),
            )
            .unwrap();
            let g = PointMap::new(
                &target,
                &target,
                (0..8).map(|_| rng.below(8) as usize).collect(),
            )
            .unwrap();
            let pf = covering_isometry(&target, &target, &f, 1, m).unwrap();
            let pg = covering_isometry(&target, &target, &g, 1, m).unwrap();
            let pairs_ok = pf.verify(&target).unwrap() && pg.verify(&target).unwrap();
            let rot = swindle_rotation(&target, &pf, &pg).unwrap();
            let rot_ok = rotation_identities_hold(&target, &target, &rot, &pf, &pg).unwrap();
            // block swindle sub-block identity
            let mut t = FiniteOperator::square(&target, 1);
            t.set((0, 0), (3, 0), rat_int(2)).unwrap();
            t.set((5, 0), (5, 0), rat(1, 2)).unwrap();
            let b = block_swindle(&target, &target, &t, &[pf, pg], 2).unwrap();
            pairs_ok && rot_ok && b.verified_blocks == 2
        })
        .collect();
    assert!(rot_results.iter().all(|&ok| ok), "an isometry identity failed");
    // identity pairs degenerate correctly
    let id_pair = IsometryPair::identity(&space, 2);
    let rot = swindle_rotation(&space, &id_pair, &id_pair).unwrap();
    assert!(rotation_identities_hold(&space, &space, &rot, &id_pair, &id_pair).unwrap());
    println!("criterion 06 operator identities: PASS");
}

fn circle_space(n: usize) -> FilteredMetricSpace {
    let ids: Vec<String> = (0..n).map(|k| k.to_string()).collect();
    FilteredMetricSpace::from_matrix(ids, |i, j| {
        let d = (i as i64 - j as i64).rem_euclid(n as i64);
        rat_int(d.min(n as i64 - d))
    })
    .unwrap()
}

fn acceptance_instances() -> Vec<CoarseningSpace> {
    let mut out = Vec::new();
    // circle arcs then two coarser covers
    let s = circle_space(12);
    let covers = vec![
        Cover::new(
            &s,
            vec![(0..=4).collect(), (4..=8).collect(), (8..=12).map(|k| k % 12).collect()],
        )
        .unwrap(),
        Cover::new(&s, vec![(0..=8).collect(), (8..=12).map(|k| k % 12).collect()]).unwrap(),
        Cover::new(&s, vec![(0..=8).collect(), (8..=12).map(|k| k % 12).collect()]).unwrap(),
    ];
    out.push(CoarseningSpace::build(&s, &covers, 0).unwrap());
    // interval instances of increasing depth of filtration
    for (lo, hi, schedule) in [
        (-30i64, 30i64, vec![rat_int(1), rat_int(4), rat_int(16)]),
        (-60, 60, vec![rat_int(1), rat_int(2), rat_int(4), rat_int(8)]),
    ] {
        let w = FilteredMetricSpace::int_interval(lo, hi);
        let ac = build_anticech(&w, &schedule).unwrap();
        out.push(CoarseningSpace::build(&w, &ac.covers, 0).unwrap());
    }
    out
}

#[test]
fn c07_collapsing_map_laws() {
    for (idx, x) in acceptance_instances().into_iter().enumerate() {
        let n = x.node_count();
        assert!(n <= 500, "instance {idx} exceeds the node budget");
        let levels = x.level_count();
        let all: Vec<Vec<Option<Length>>> =
            (0..n).into_par_iter().map(|src| x.distances_from(src)).collect();
        for t in 1..=levels {
            let map_t = x.collapse_map(t).unwrap();
            // projection arithmetic
            for (id, &img) in map_t.iter().enumerate() {
                assert_eq!(
                    x.projection(img).unwrap(),
                    x.projection(id).unwrap().max(t),
                    "instance {idx}"
                );
            }
            // semigroup: low then high equals high, node-exhaustively
            for tp in (t + 1)..=levels {
                let map_tp = x.collapse_map(tp).unwrap();
                for id in 0..n {
                    assert_eq!(
                        map_tp[map_t[id]], map_tp[id],
                        "instance {idx}: semigroup at ({t}, {tp})"
                    );
                }
            }
            // graph-model contractivity on all node pairs
            let violations: usize = (0..n)
                .into_par_iter()
                .map(|a| {
                    let mut bad = 0;
                    for b in 0..n {
                        if let (Some(before), Some(after)) =
                            (&all[a][b], &all[map_t[a]][map_t[b]])
                        {
                            if after.to_rat() > before.to_rat() {
                                bad += 1;
                            }
                        }
                    }
                    bad
                })
                .sum();
            assert_eq!(violations, 0, "instance {idx}: collapse to {t} expanded a distance");
        }
    }
    println!("criterion 07 collapsing map laws: PASS");
}

#[test]
fn c08_swindle_hypotheses_tables() {
    // five-level instance over an integer interval
    let w = FilteredMetricSpace::int_interval(-80, 80);
    let schedule: Vec<Rat> = vec![rat_int(1), rat_int(2), rat_int(4), rat_int(8), rat_int(16)];
    let ac = build_anticech(&w, &schedule).unwrap();
    let x = CoarseningSpace::build(&w, &ac.covers, 0).unwrap();
    assert_eq!(x.level_count(), 5);
    // base at the middle of level 1
    let mid_vertex = (x.nerve_at(1).unwrap().vertex_count() / 2) as u32;
    let base = x.nerve_vertex_node(1, mid_vertex).unwrap();
    // escape indices scale exponentially in the ball radius (level spacing
    // is geometric), so the radius-2 ball needs a deep truncation
    let kmax = 2000;
    let maps = swindle_sequence(&x, base, kmax).unwrap();
    let radii: Vec<Rat> = vec![rat(1, 2), rat_int(1), rat_int(2)];
    let report = check_swindle_hypotheses(&x, &maps, base, &radii).unwrap();
    // (a) escape indices strictly increase with the ball radius
    let hits: Vec<usize> = report
        .escape
        .iter()
        .map(|e| e.last_hit.expect("every ball is eventually hit by the identity map"))
        .collect();
    for w in hits.windows(2) {
        assert!(w[0] < w[1], "escape indices must strictly increase: {hits:?}");
    }
    for e in &report.escape {
        assert!(
            e.escapes_within_truncation,
            "radius {}: range never left the ball before k = {kmax}",
            e.radius
        );
    }
    // (b) finite control table, (c) finite step bound
    assert!(!report.control.is_empty());
    for entry in &report.control {
        coarsekit_core::arith::rat_from_str(&entry.sup_image_distance).unwrap();
    }
    coarsekit_core::arith::rat_from_str(&report.step_bound).unwrap();
    println!("criterion 08 swindle hypotheses: PASS");
}

#[test]
fn c09_quotient_tower_exhaustive() {
    // all point sets up to size 8, all strict chains of at most 3 nonempty
    // subsets
    let cases: Vec<(usize, Vec<u32>)> = (1..=8usize)
        .flat_map(|n| {
            let full = (1u32 << n) - 1;
            let mut chains: Vec<(usize, Vec<u32>)> = Vec::new();
            for a in 1..=full {
                chains.push((n, vec![a]));
                for b in 1..=full {
                    if a & b == a && a != b {
                        chains.push((n, vec![a, b]));
                        for c in 1..=full {
                            if b & c == b && b != c {
                                chains.push((n, vec![a, b, c]));
                            }
                        }
                    }
                }
            }
            chains
        })
        .collect();
    let failures: usize = cases
        .par_iter()
        .map(|(n, chain_masks)| {
            let points: Vec<String> = (0..*n).map(|i| format!("p{i}")).collect();
            let chain: Vec<BTreeSet<String>> = chain_masks
                .iter()
                .map(|mask| {
                    (0..*n).filter(|i| mask & (1 << i) != 0).map(|i| format!("p{i}")).collect()
                })
                .collect();
            let rep = quotient_tower_report(&points, &chain).unwrap();
            let ok = rep.stages.iter().all(|s| s.surjective && s.kernel_matches_model)
                && rep.kernels_equal
                && rep.quotient_matches
                && rep.quotient.torsion.is_empty()
                && rep.odd_rank == 0;
            usize::from(!ok)
        })
        .sum();
    assert_eq!(failures, 0);
    println!("criterion 09 quotient tower (exhaustive through |X| = 8): PASS");
}

#[test]
fn c10_decomposition_trees() {
    let edge = SimplicialComplex::from_maximal(
        vec!["a".into(), "b".into()],
        vec![vec![0, 1]],
    )
    .unwrap();
    let triangle = SimplicialComplex::from_maximal(
        vec!["a".into(), "b".into(), "c".into()],
        vec![vec![0, 1, 2]],
    )
    .unwrap();
    // fan of six triangles around a hub
    let fan = {
        let labels: Vec<String> =
            std::iter::once("hub".to_string()).chain((0..6).map(|i| format!("rim{i}"))).collect();
        let maximal: Vec<Vec<u32>> =
            (0..6).map(|i| vec![0, i + 1, (i + 1) % 6 + 1]).collect();
        SimplicialComplex::from_maximal(labels, maximal).unwrap()
    };
    let scales: Vec<Rat> = (1..=4).map(rat_int).collect();
    for (name, k) in [("edge", edge), ("triangle", triangle), ("fan", fan)] {
        let dim = k.dim();
        let tree = build_canonical_tree(&k).unwrap();
        let labels = verify_tree_labels(&tree);
        assert!(labels.pass, "{name}: {:?}", labels.witness);
        let report = admissibility_report(&tree, &scales, None).unwrap();
        for fork in report.forks.iter().filter(|f| f.name.starts_with("stage")) {
            if dim >= 2 {
                assert_eq!(
                    fork.intersection_dim,
                    Some(dim - 1),
                    "{name}: {} intersection dimension",
                    fork.name
                );
            } else {
                // on a 1-complex the skeleton is the whole complex, so the
                // stage intersection is the full 1-skeleton
                assert_eq!(fork.intersection_dim, Some(1), "{name}: {}", fork.name);
            }
            // the stage children are the previous stage and the augmented
            // star layer: both contain the 1-skeleton, hence relatively
            // connected
            assert!(fork.left_relatively_connected, "{name}: {}", fork.name);
            assert!(fork.right_relatively_connected, "{name}: {}", fork.name);
        }
        for fork in report.forks.iter().filter(|f| f.name.starts_with("residual_graph")) {
            assert_eq!(fork.intersection_dim, Some(0), "{name}: {}", fork.name);
        }
        for leaf in &report.leaves {
            if leaf.piece_count > 1 {
                let sep = leaf.min_separation_quarters.as_ref().unwrap();
                assert_ne!(sep, "0", "{name}: {} separation must be positive", leaf.name);
            }
        }
    }
    println!("criterion 10 decomposition trees: PASS");
}

#[test]
fn c11_split_union_exactness() {
    let results: Vec<bool> = (0..200u64)
        .into_par_iter()
        .map(|seed| {
            let mut rng = Lcg::new(0xc11_000 + seed);
            let n = 2 + rng.below(7) as usize;
            let mut y = BTreeSet::new();
            let mut z = BTreeSet::new();
            for i in 0..n {
                match rng.below(3) {
                    0 => {
                        y.insert(format!("p{i}"));
                    }
                    1 => {
                        z.insert(format!("p{i}"));
                    }
                    _ => {
                        y.insert(format!("p{i}"));
                        z.insert(format!("p{i}"));
                    }
                }
            }
            if y.is_empty() {
                y.insert("p0".to_string());
            }
            if z.is_empty() {
                z.insert(format!("p{}", n - 1));
            }
            let homs = split_union_sequence(&y, &z).unwrap();
            exactness_check(&homs).unwrap().iter().all(|node| node.exact)
        })
        .collect();
    assert!(results.iter().all(|&ok| ok));
    println!("criterion 11 split-union exactness: PASS");
}

#[test]
fn acceptance_inputs_parse_through_the_json_schemas() {
    // the acceptance spaces are expressible in the external schema
    let json = r#"{
        "points": ["a", "b"],
        "metric": {"kind": "matrix", "d": [[0, "3/2"], ["3/2", 0]]}
    }"#;
    let space: SpaceRepr = serde_json::from_str(json).unwrap();
    assert_eq!(space.into_space().unwrap().d(0, 1), &rat(3, 2));
}
