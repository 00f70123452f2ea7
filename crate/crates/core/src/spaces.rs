//! Finite metric spaces with exhaustion filtrations, covers, and the cover
//! statistics feeding anti-Cech sequences and asymptotic-dimension witnesses.
//!
//! All distances are exact rationals. "Open" covers degenerate to arbitrary
//! point subsets on finite discrete data, so [`Cover`] stores plain subsets.

use std::collections::BTreeMap;

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{pi_over_two, rat_int, rat_to_string, BitSet, Rat};
use crate::FailureClass;

pub type PointId = String;

#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("unknown point id {0:?}")]
    UnknownPoint(String),
    #[error("metric axiom violated: {0}")]
    MetricViolation(String),
    #[error("space has fewer than two points, gap undefined")]
    UndefinedGap,
    #[error("covers refer to different spaces")]
    SpaceMismatch,
    #[error("cover invalid: {0}")]
    BadCover(String),
    #[error("space too large ({size} points) for the exact oracle, cap {cap}; use the lower bound")]
    TooLarge { size: usize, cap: usize },
    #[error("unsupported grid dimension {0}, expected 1..=3")]
    UnsupportedDimension(usize),
    #[error("anti-Cech construction failed at step {step}: diameter {diam} exceeds Lebesgue lower bound {lebesgue} after {retries} retries")]
    AntiCechFailure { step: usize, diam: String, lebesgue: String, retries: usize },
    #[error("schedule must be strictly increasing and positive")]
    BadSchedule,
}

impl SpaceError {
    pub fn class(&self) -> FailureClass {
        match self {
            SpaceError::TooLarge { .. } => FailureClass::Capacity,
            SpaceError::Malformed(_) | SpaceError::MetricViolation(_) => FailureClass::Schema,
            _ => FailureClass::Precondition,
        }
    }
}

/// Interned triangular distance table: distinct values stored once, pairs
/// indexed into the table. Keeps dense all-pairs data for grid-sized spaces
/// affordable while staying exact.
#[derive(Clone, Debug)]
struct DistTable {
    values: Vec<Rat>,
    index: Vec<u32>,
    n: usize,
}

impl DistTable {
    fn build(n: usize, mut entry: impl FnMut(usize, usize) -> Rat) -> Self {
        let mut raw = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                raw.push(entry(i, j));
            }
        }
        let mut values: Vec<Rat> = raw.clone();
        values.sort();
        values.dedup();
        let lookup: BTreeMap<&Rat, u32> =
            values.iter().enumerate().map(|(k, v)| (v, k as u32)).collect();
        let index = raw.iter().map(|v| lookup[v]).collect();
        DistTable { values, index, n }
    }

    fn tri(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        // offset of row i in the packed strict upper triangle
        i * self.n - i * (i + 1) / 2 + (j - i - 1)
    }

    fn get(&self, i: usize, j: usize) -> &Rat {
        static ZERO: std::sync::OnceLock<Rat> = std::sync::OnceLock::new();
        if i == j {
            return ZERO.get_or_init(Rat::zero);
        }
        &self.values[self.index[self.tri(i, j)] as usize]
    }
}

/// Identifies the space a derived object (cover, entourage, map) was built
/// against, so cross-space use is caught early.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct SpaceId(pub u64);

/// Finite metric space with an exhaustion chain `K_1 <= ... <= K_N` ending at
/// the full point set. The filtration carries the finite-truncation semantics
/// of every "off a compact set" condition elsewhere in the crate.
#[derive(Clone, Debug)]
pub struct FilteredMetricSpace {
    ids: Vec<PointId>,
    id_index: BTreeMap<PointId, usize>,
    dist: DistTable,
    filtration: Vec<BitSet>,
    space_id: SpaceId,
}

impl FilteredMetricSpace {
    /// Builds a space from explicit pair distances. The default filtration is
    /// the single full-set stage; `with_filtration` installs a finer chain.
    pub fn from_matrix(
        ids: Vec<PointId>,
        entry: impl FnMut(usize, usize) -> Rat,
    ) -> Result<Self, SpaceError> {
        let n = ids.len();
        if n == 0 {
            return Err(SpaceError::Malformed("empty point set".into()));
        }
        let mut id_index = BTreeMap::new();
        for (i, id) in ids.iter().enumerate() {
            if id_index.insert(id.clone(), i).is_some() {
                return Err(SpaceError::Malformed(format!("duplicate point id {id:?}")));
            }
        }
        let dist = DistTable::build(n, entry);
        if dist.values.first().is_some_and(|v| v < &Rat::zero()) {
            return Err(SpaceError::Malformed("negative distance".into()));
        }
        let space_id = {
            let mut h = 0xcbf29ce484222325u64;
            for id in &ids {
                for b in id.as_bytes() {
                    h = (h ^ *b as u64).wrapping_mul(0x100000001b3);
                }
                h = (h ^ 0xff).wrapping_mul(0x100000001b3);
            }
            SpaceId(h)
        };
        let full = BitSet::from_indices(n, 0..n);
        Ok(FilteredMetricSpace { ids, id_index, dist, filtration: vec![full], space_id })
    }

    /// Installs an exhaustion chain; stages must be nested and the last stage
    /// must be the full point set.
    pub fn with_filtration(mut self, stages: Vec<Vec<usize>>) -> Result<Self, SpaceError> {
        let n = self.len();
        let mut sets = Vec::with_capacity(stages.len());
        for stage in &stages {
            if stage.iter().any(|&i| i >= n) {
                return Err(SpaceError::Malformed("filtration stage out of range".into()));
            }
            sets.push(BitSet::from_indices(n, stage.iter().copied()));
        }
        if sets.is_empty() {
            return Err(SpaceError::Malformed("empty filtration".into()));
        }
        for w in sets.windows(2) {
            if !w[0].is_subset(&w[1]) {
                return Err(SpaceError::Malformed("filtration is not a chain".into()));
            }
        }
        if !sets.last().unwrap().is_full() {
            return Err(SpaceError::Malformed("filtration must end at the full point set".into()));
        }
        self.filtration = sets;
        Ok(self)
    }

    /// Integer interval `lo..=hi` with the absolute-difference metric.
    pub fn int_interval(lo: i64, hi: i64) -> Self {
        assert!(lo <= hi);
        let ids: Vec<PointId> = (lo..=hi).map(|k| k.to_string()).collect();
        let pts: Vec<i64> = (lo..=hi).collect();
        FilteredMetricSpace::from_matrix(ids, |i, j| rat_int((pts[i] - pts[j]).abs())).unwrap()
    }

    /// Grid `[lo,hi]^dim` in the l1 metric, `dim` in 1..=3.
    pub fn int_grid(dim: usize, lo: i64, hi: i64) -> Result<Self, SpaceError> {
        if !(1..=3).contains(&dim) {
            return Err(SpaceError::UnsupportedDimension(dim));
        }
        let side: Vec<i64> = (lo..=hi).collect();
        let mut pts: Vec<Vec<i64>> = vec![vec![]];
        for _ in 0..dim {
            pts = pts
                .into_iter()
                .flat_map(|p| {
                    side.iter().map(move |&c| {
                        let mut q = p.clone();
                        q.push(c);
                        q
                    })
                })
                .collect();
        }
        let ids: Vec<PointId> = pts
            .iter()
            .map(|p| p.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(","))
            .collect();
        FilteredMetricSpace::from_matrix(ids, |i, j| {
            rat_int(pts[i].iter().zip(&pts[j]).map(|(a, b)| (a - b).abs()).sum())
        })
    }

    /// Builds a space from a connected weighted graph via all-pairs shortest
    /// paths. Errors when the graph is disconnected (infinite distances are
    /// not a metric).
    pub fn from_graph(
        ids: Vec<PointId>,
        edges: &[(usize, usize, Rat)],
    ) -> Result<Self, SpaceError> {
        let n = ids.len();
        if n == 0 {
            return Err(SpaceError::Malformed("empty point set".into()));
        }
        let mut adj: Vec<Vec<(usize, Rat)>> = vec![vec![]; n];
        for (a, b, w) in edges {
            if *a >= n || *b >= n {
                return Err(SpaceError::Malformed("edge endpoint out of range".into()));
            }
            if w <= &Rat::zero() {
                return Err(SpaceError::Malformed("edge weights must be positive".into()));
            }
            adj[*a].push((*b, w.clone()));
            adj[*b].push((*a, w.clone()));
        }
        use rayon::prelude::*;
        let all: Vec<Vec<Option<Rat>>> = (0..n)
            .into_par_iter()
            .map(|src| {
                let mut row = vec![None; n];
                dijkstra_into(&adj, src, &mut row);
                row
            })
            .collect();
        if all.iter().any(|row| row.iter().any(|d| d.is_none())) {
            return Err(SpaceError::Malformed("graph metric requires a connected graph".into()));
        }
        FilteredMetricSpace::from_matrix(ids, |i, j| all[i][j].clone().unwrap())
    }

    /// Vertex set of a spherical complex skeleton, distances in radians with
    /// pi/2 replaced by its fixed rational stand-in.
    pub fn from_hop_counts(ids: Vec<PointId>, hops: impl FnMut(usize, usize) -> u64) -> Self {
        let mut hops = hops;
        FilteredMetricSpace::from_matrix(ids, |i, j| rat_int(hops(i, j) as i64) * pi_over_two())
            .unwrap()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn id(&self) -> SpaceId {
        self.space_id
    }

    pub fn point_ids(&self) -> &[PointId] {
        &self.ids
    }

    pub fn index_of(&self, id: &str) -> Result<usize, SpaceError> {
        self.id_index.get(id).copied().ok_or_else(|| SpaceError::UnknownPoint(id.to_string()))
    }

    pub fn d(&self, i: usize, j: usize) -> &Rat {
        self.dist.get(i, j)
    }

    /// Distinct realized pairwise distances, ascending, excluding zero.
    pub fn realized_distances(&self) -> &[Rat] {
        &self.dist.values
    }

    pub fn filtration(&self) -> &[BitSet] {
        &self.filtration
    }

    pub fn diameter(&self) -> Rat {
        self.dist.values.last().cloned().unwrap_or_else(Rat::zero)
    }

    /// Closed ball `{ y : d(x, y) <= r }` as indices.
    pub fn ball(&self, x: usize, r: &Rat) -> Vec<usize> {
        (0..self.len()).filter(|&y| self.d(x, y) <= r).collect()
    }

    /// Exact maximum of `|ball(x, r)|` plus an attaining point.
    pub fn bounded_geometry_profile(&self, r: &Rat) -> (usize, usize) {
        let mut best = (0usize, 0usize);
        for x in 0..self.len() {
            let c = self.ball(x, r).len();
            if c > best.0 {
                best = (c, x);
            }
        }
        best
    }

    /// Minimum pairwise distance; errors on singletons.
    pub fn uniform_discreteness_gap(&self) -> Result<Rat, SpaceError> {
        if self.len() < 2 {
            return Err(SpaceError::UndefinedGap);
        }
        Ok(self.dist.values.first().cloned().unwrap())
    }
}

fn dijkstra_into(adj: &[Vec<(usize, Rat)>], src: usize, out: &mut [Option<Rat>]) {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;
    for d in out.iter_mut() {
        *d = None;
    }
    let mut heap = BinaryHeap::new();
    out[src] = Some(Rat::zero());
    heap.push(Reverse((Rat::zero(), src)));
    while let Some(Reverse((d, u))) = heap.pop() {
        if out[u].as_ref().is_some_and(|best| *best < d) {
            continue;
        }
        for (v, w) in &adj[u] {
            let nd = &d + w;
            if out[*v].as_ref().is_none_or(|best| nd < *best) {
                out[*v] = Some(nd.clone());
                heap.push(Reverse((nd, *v)));
            }
        }
    }
}

/// Outcome of validating candidate metric data.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum MetricReport {
    Pass,
    SymmetryViolation { a: PointId, b: PointId },
    IndiscernibleViolation { a: PointId, b: PointId },
    TriangleViolation { a: PointId, b: PointId, c: PointId },
}

/// Checks the metric axioms on explicit pair data; returns pass or the first
/// violated axiom with a witness. Pairs may list both orders; a missing pair
/// is a malformed-input error.
pub fn verify_metric(
    ids: &[PointId],
    pairs: &[(PointId, PointId, Rat)],
) -> Result<MetricReport, SpaceError> {
    let n = ids.len();
    let mut index = BTreeMap::new();
    for (i, id) in ids.iter().enumerate() {
        index.insert(id.clone(), i);
    }
    let mut table: Vec<Option<Rat>> = vec![None; n * n];
    for (a, b, d) in pairs {
        if d < &Rat::zero() {
            return Err(SpaceError::Malformed(format!("negative distance for ({a:?}, {b:?})")));
        }
        let i = *index.get(a).ok_or_else(|| SpaceError::UnknownPoint(a.clone()))?;
        let j = *index.get(b).ok_or_else(|| SpaceError::UnknownPoint(b.clone()))?;
        if let Some(prev) = &table[i * n + j] {
            if prev != d {
                return Ok(MetricReport::SymmetryViolation { a: a.clone(), b: b.clone() });
            }
        }
        table[i * n + j] = Some(d.clone());
        match &table[j * n + i] {
            Some(prev) if prev != d => {
                return Ok(MetricReport::SymmetryViolation { a: a.clone(), b: b.clone() })
            }
            Some(_) => {}
            None => table[j * n + i] = Some(d.clone()),
        }
    }
    for i in 0..n {
        if table[i * n + i].is_none() {
            table[i * n + i] = Some(Rat::zero());
        }
    }
    for i in 0..n {
        for j in 0..n {
            if table[i * n + j].is_none() {
                return Err(SpaceError::Malformed(format!(
                    "missing pair distance ({:?}, {:?})",
                    ids[i], ids[j]
                )));
            }
        }
    }
    let at = |i: usize, j: usize| table[i * n + j].as_ref().unwrap();
    for i in 0..n {
        for j in 0..n {
            let d = at(i, j);
            if i == j && !d.is_zero() {
                return Ok(MetricReport::IndiscernibleViolation {
                    a: ids[i].clone(),
                    b: ids[j].clone(),
                });
            }
            if i != j && d.is_zero() {
                return Ok(MetricReport::IndiscernibleViolation {
                    a: ids[i].clone(),
                    b: ids[j].clone(),
                });
            }
        }
    }
    use rayon::prelude::*;
    let violation = (0..n)
        .into_par_iter()
        .find_map_first(|i| {
            for j in (i + 1)..n {
                for k in 0..n {
                    if k == i || k == j {
                        continue;
                    }
                    if at(i, j) > &(at(i, k) + at(k, j)) {
                        return Some((i, k, j));
                    }
                }
            }
            None
        });
    if let Some((i, k, j)) = violation {
        return Ok(MetricReport::TriangleViolation {
            a: ids[i].clone(),
            b: ids[k].clone(),
            c: ids[j].clone(),
        });
    }
    Ok(MetricReport::Pass)
}

/// Indexed family of point subsets covering the space.
#[derive(Clone, Debug)]
pub struct Cover {
    members: Vec<Vec<usize>>,
    masks: Vec<BitSet>,
    space_id: SpaceId,
    space_len: usize,
}

impl Cover {
    pub fn new(space: &FilteredMetricSpace, members: Vec<Vec<usize>>) -> Result<Self, SpaceError> {
        if members.is_empty() {
            return Err(SpaceError::BadCover("no members".into()));
        }
        let n = space.len();
        let mut masks = Vec::with_capacity(members.len());
        let mut union = BitSet::new(n);
        let mut sorted_members = Vec::with_capacity(members.len());
        for m in members {
            if m.is_empty() {
                return Err(SpaceError::BadCover("empty member".into()));
            }
            if m.iter().any(|&i| i >= n) {
                return Err(SpaceError::BadCover("member index out of range".into()));
            }
            let mask = BitSet::from_indices(n, m.iter().copied());
            union.union_with(&mask);
            let mut m = m;
            m.sort_unstable();
            m.dedup();
            sorted_members.push(m);
            masks.push(mask);
        }
        if !union.is_full() {
            return Err(SpaceError::BadCover("members do not cover the space".into()));
        }
        Ok(Cover { members: sorted_members, masks, space_id: space.id(), space_len: n })
    }

    pub fn members(&self) -> &[Vec<usize>] {
        &self.members
    }

    pub fn member_mask(&self, j: usize) -> &BitSet {
        &self.masks[j]
    }

    pub fn space_id(&self) -> SpaceId {
        self.space_id
    }

    fn check_space(&self, space: &FilteredMetricSpace) -> Result<(), SpaceError> {
        if space.id() != self.space_id || space.len() != self.space_len {
            return Err(SpaceError::SpaceMismatch);
        }
        Ok(())
    }
}

/// Max over members of the member's max pairwise distance.
pub fn cover_diameter(space: &FilteredMetricSpace, cover: &Cover) -> Result<Rat, SpaceError> {
    cover.check_space(space)?;
    let mut best = Rat::zero();
    for m in cover.members() {
        for (a, &i) in m.iter().enumerate() {
            for &j in &m[a + 1..] {
                let d = space.d(i, j);
                if *d > best {
                    best = d.clone();
                }
            }
        }
    }
    Ok(best)
}

fn every_ball_fits(space: &FilteredMetricSpace, cover: &Cover, r: &Rat) -> bool {
    let n = space.len();
    'points: for x in 0..n {
        let ball = BitSet::from_indices(n, space.ball(x, r));
        for mask in &cover.masks {
            if ball.is_subset(mask) {
                continue 'points;
            }
        }
        return false;
    }
    true
}

/// Largest realized distance `r` (or zero) such that every closed `r`-ball is
/// contained in some member. A lower bound for the subset-quantified Lebesgue
/// number; the exact value is available from [`lebesgue_exact`] on small
/// spaces.
pub fn lebesgue_lower_bound(space: &FilteredMetricSpace, cover: &Cover) -> Result<Rat, SpaceError> {
    cover.check_space(space)?;
    let candidates = space.realized_distances();
    // every_ball_fits is monotone decreasing in r: binary search the cutoff.
    if candidates.is_empty() || !every_ball_fits(space, cover, &candidates[0]) {
        return Ok(Rat::zero());
    }
    let (mut lo, mut hi) = (0usize, candidates.len() - 1);
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        if every_ball_fits(space, cover, &candidates[mid]) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    Ok(candidates[lo].clone())
}

pub const LEBESGUE_EXACT_DEFAULT_CAP: usize = 20;

/// Exact Lebesgue number by subset enumeration: the largest realized value
/// `r` such that every subset of diameter at most `r` lies in some member.
/// Subsets of diameter <= r are exactly the cliques of the distance-<=r
/// graph, and a failing subset stays failing under enlargement, so it
/// suffices to check maximal cliques.
pub fn lebesgue_exact(
    space: &FilteredMetricSpace,
    cover: &Cover,
    max_points: usize,
) -> Result<Rat, SpaceError> {
    cover.check_space(space)?;
    let n = space.len();
    if n > max_points {
        return Err(SpaceError::TooLarge { size: n, cap: max_points });
    }
    let ok_at = |r: &Rat| -> bool {
        let mut adj = vec![BitSet::new(n); n];
        for (i, row) in adj.iter_mut().enumerate() {
            for j in 0..n {
                if i != j && space.d(i, j) <= r {
                    row.insert(j);
                }
            }
        }
        let mut all_fit = true;
        let mut visit = |clique: &BitSet| {
            if !cover.masks.iter().any(|m| clique.is_subset(m)) {
                all_fit = false;
            }
        };
        bron_kerbosch(
            &adj,
            &mut BitSet::new(n),
            BitSet::from_indices(n, 0..n),
            BitSet::new(n),
            &mut visit,
        );
        all_fit
    };
    let candidates = space.realized_distances();
    if candidates.is_empty() || !ok_at(&candidates[0]) {
        return Ok(Rat::zero());
    }
    let (mut lo, mut hi) = (0usize, candidates.len() - 1);
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        if ok_at(&candidates[mid]) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    Ok(candidates[lo].clone())
}

fn bron_kerbosch(
    adj: &[BitSet],
    r: &mut BitSet,
    mut p: BitSet,
    mut x: BitSet,
    visit: &mut impl FnMut(&BitSet),
) {
    if p.count() == 0 && x.count() == 0 {
        visit(r);
        return;
    }
    let candidates: Vec<usize> = p.iter().collect();
    for v in candidates {
        let mut r2 = r.clone();
        r2.insert(v);
        let mut p2 = BitSet::new(adj.len());
        for u in p.iter() {
            if adj[v].contains(u) {
                p2.insert(u);
            }
        }
        let mut x2 = BitSet::new(adj.len());
        for u in x.iter() {
            if adj[v].contains(u) {
                x2.insert(u);
            }
        }
        bron_kerbosch(adj, &mut r2, p2, x2, visit);
        // move v from p to x
        let mut np = BitSet::new(adj.len());
        for u in p.iter() {
            if u != v {
                np.insert(u);
            }
        }
        p = np;
        x.insert(v);
    }
}

/// `d(w, U) < r` counted over members, maximized over points; returns the
/// supremum and an attaining point.
pub fn r_degree(
    space: &FilteredMetricSpace,
    cover: &Cover,
    r: &Rat,
) -> Result<(usize, usize), SpaceError> {
    cover.check_space(space)?;
    if r <= &Rat::zero() {
        return Err(SpaceError::BadCover("r_degree needs r > 0".into()));
    }
    let mut best = (0usize, 0usize);
    for w in 0..space.len() {
        let mut count = 0;
        for m in cover.members() {
            if m.iter().any(|&u| space.d(w, u) < r) {
                count += 1;
            }
        }
        if count > best.0 {
            best = (count, w);
        }
    }
    Ok(best)
}

/// Maximum number of members containing a single point.
pub fn degree(space: &FilteredMetricSpace, cover: &Cover) -> Result<usize, SpaceError> {
    cover.check_space(space)?;
    let mut best = 0;
    for x in 0..space.len() {
        let c = cover.masks.iter().filter(|m| m.contains(x)).count();
        best = best.max(c);
    }
    Ok(best)
}

/// True iff every member of `c1` is contained in some member of `c2`.
pub fn refines(c1: &Cover, c2: &Cover) -> Result<bool, SpaceError> {
    if c1.space_id != c2.space_id || c1.space_len != c2.space_len {
        return Err(SpaceError::SpaceMismatch);
    }
    Ok(c1.masks.iter().all(|m| c2.masks.iter().any(|u| m.is_subset(u))))
}

/// Maps each point to the smallest member index containing it.
pub fn vertex_assignment(space: &FilteredMetricSpace, cover: &Cover) -> Result<Vec<usize>, SpaceError> {
    cover.check_space(space)?;
    Ok((0..space.len())
        .map(|x| cover.masks.iter().position(|m| m.contains(x)).expect("cover covers"))
        .collect())
}

/// One certified step of an anti-Cech sequence.
#[derive(Clone, Debug, Serialize)]
pub struct AntiCechStep {
    pub requested_radius: String,
    pub final_radius: String,
    pub member_count: usize,
    pub diameter: String,
    /// Lebesgue lower bound of the *next* cover; `None` on the last step.
    pub next_lebesgue_lower_bound: Option<String>,
    pub chain_inequality_holds: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AntiCechCertificate {
    pub steps: Vec<AntiCechStep>,
}

pub struct AntiCech {
    pub covers: Vec<Cover>,
    pub certificate: AntiCechCertificate,
}

const ANTICECH_MAX_RETRIES: usize = 8;

/// Builds successively coarser ball covers about greedy nets at the given
/// radii and certifies `diam(U_i) <= lebesgue_lower_bound(U_{i+1})` for every
/// consecutive pair. When a step fails the next radius is doubled and retried
/// a bounded number of times; the certificate records the radii actually
/// used. Net tie-breaking is lowest point index first.
pub fn build_anticech(
    space: &FilteredMetricSpace,
    schedule: &[Rat],
) -> Result<AntiCech, SpaceError> {
    if schedule.is_empty()
        || schedule[0] <= Rat::zero()
        || schedule.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(SpaceError::BadSchedule);
    }
    let mut covers: Vec<Cover> = Vec::new();
    let mut radii: Vec<Rat> = Vec::new();
    let mut diams: Vec<Rat> = Vec::new();
    let mut requested: Vec<Rat> = Vec::new();
    let mut step = 0usize;
    let mut next_radius = schedule[0].clone();
    while step < schedule.len() {
        let mut radius = next_radius.clone();
        let mut retries = 0usize;
        loop {
            let cover = greedy_ball_cover(space, &radius);
            let diam = cover_diameter(space, &cover)?;
            let ok = match covers.last() {
                None => true,
                Some(_) => {
                    let leb = lebesgue_lower_bound(space, &cover)?;
                    diams.last().unwrap() <= &leb
                }
            };
            if ok {
                covers.push(cover);
                radii.push(radius.clone());
                diams.push(diam);
                requested.push(schedule[step].clone());
                break;
            }
            retries += 1;
            if retries > ANTICECH_MAX_RETRIES {
                return Err(SpaceError::AntiCechFailure {
                    step,
                    diam: rat_to_string(diams.last().unwrap()),
                    lebesgue: rat_to_string(&lebesgue_lower_bound(
                        space,
                        &greedy_ball_cover(space, &radius),
                    )?),
                    retries: retries - 1,
                });
            }
            radius *= rat_int(2);
        }
        step += 1;
        if step < schedule.len() {
            // keep the schedule monotone after retrying
            next_radius = if schedule[step] > radii[step - 1] {
                schedule[step].clone()
            } else {
                radii[step - 1].clone() * rat_int(2)
            };
        }
    }
    let mut steps = Vec::with_capacity(covers.len());
    for i in 0..covers.len() {
        let next_leb = if i + 1 < covers.len() {
            Some(lebesgue_lower_bound(space, &covers[i + 1])?)
        } else {
            None
        };
        steps.push(AntiCechStep {
            requested_radius: rat_to_string(&requested[i]),
            final_radius: rat_to_string(&radii[i]),
            member_count: covers[i].members().len(),
            diameter: rat_to_string(&diams[i]),
            next_lebesgue_lower_bound: next_leb.as_ref().map(rat_to_string),
            chain_inequality_holds: next_leb.map(|leb| diams[i] <= leb),
        });
    }
    Ok(AntiCech { covers, certificate: AntiCechCertificate { steps } })
}

/// Cover by closed `r`-balls about a greedy `r`-net, lowest index first.
pub fn greedy_ball_cover(space: &FilteredMetricSpace, r: &Rat) -> Cover {
    let n = space.len();
    let mut net: Vec<usize> = Vec::new();
    for x in 0..n {
        if net.iter().all(|&c| space.d(x, c) > r) {
            net.push(x);
        }
    }
    let members: Vec<Vec<usize>> = net.iter().map(|&c| space.ball(c, r)).collect();
    Cover::new(space, members).expect("net balls cover the space")
}

/// Offset-brick cover of an integer grid plus the achieved r-degree.
#[derive(Debug)]
pub struct BrickCover {
    pub cover: Cover,
    pub r_degree: usize,
    pub degree_bound: usize,
    pub satisfied: bool,
}

/// Covers a grid truncation by side-length `side` bricks with the staircase
/// offsets that witness r-degree at most `dim + 1`. Point ids must be the
/// comma-separated integer coordinates produced by
/// [`FilteredMetricSpace::int_grid`]. The postcondition is checked and
/// reported rather than assumed.
pub fn brick_cover(
    space: &FilteredMetricSpace,
    dim: usize,
    r: &Rat,
    side: i64,
) -> Result<BrickCover, SpaceError> {
    if !(1..=3).contains(&dim) {
        return Err(SpaceError::UnsupportedDimension(dim));
    }
    if side <= 0 || *r <= Rat::zero() {
        return Err(SpaceError::BadCover("need side > 0 and r > 0".into()));
    }
    let coords: Vec<Vec<i64>> = space
        .point_ids()
        .iter()
        .map(|id| {
            id.split(',')
                .map(|c| c.parse::<i64>().map_err(|_| SpaceError::Malformed(format!("point id {id:?} is not grid coordinates"))))
                .collect::<Result<Vec<i64>, _>>()
        })
        .collect::<Result<_, _>>()?;
    if coords.iter().any(|c| c.len() != dim) {
        return Err(SpaceError::Malformed(format!("expected {dim}-dimensional coordinates")));
    }
    let half = side / 2;
    // Brick of a point: cell indices after shifting each axis by half a side
    // per unit step of the next axis' cell index, resolved from the last axis
    // down. This is the usual brick-laying pattern.
    let brick_key = |p: &[i64]| -> Vec<i64> {
        let mut key = vec![0i64; dim];
        // last axis has no offset
        for ax in (0..dim).rev() {
            let offset = if ax + 1 < dim { key[ax + 1] * half } else { 0 };
            key[ax] = (p[ax] - offset).div_euclid(side);
        }
        key
    };
    let mut buckets: BTreeMap<Vec<i64>, Vec<usize>> = BTreeMap::new();
    for (i, p) in coords.iter().enumerate() {
        buckets.entry(brick_key(p)).or_default().push(i);
    }
    let cover = Cover::new(space, buckets.into_values().collect())?;
    let (deg, _) = r_degree(space, &cover, r)?;
    Ok(BrickCover { cover, r_degree: deg, degree_bound: dim + 1, satisfied: deg <= dim + 1 })
}
