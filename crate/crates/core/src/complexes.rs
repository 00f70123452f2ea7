//! Abstract simplicial complexes: nerves of covers and their connecting
//! maps, barycentric subdivision with carrier tracking, the uniform spherical
//! metric on skeletons (vertex distances are exact multiples of pi/2, no
//! shortcuts through simplex interiors), star decompositions, distortion and
//! relative connectedness.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{rat, rat_int, Length, Rat};
use crate::spaces::{Cover, FilteredMetricSpace, SpaceError};
use crate::FailureClass;

/// Sorted, deduplicated vertex index list.
pub type Simplex = Vec<u32>;

#[derive(Debug, Error)]
pub enum ComplexError {
    #[error("unknown vertex {0:?}")]
    UnknownVertex(String),
    #[error("not downward closed: face {0:?} missing")]
    NotClosed(String),
    #[error("map is not simplicial: simplex {0:?} has non-simplex image")]
    NotSimplicial(String),
    #[error("cover member {0} is contained in no member of the coarser cover")]
    RefinementFailure(usize),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("malformed complex: {0}")]
    Malformed(String),
    #[error("barycentric point invalid: {0}")]
    BadPoint(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

impl ComplexError {
    pub fn class(&self) -> FailureClass {
        match self {
            ComplexError::Capacity(_) => FailureClass::Capacity,
            ComplexError::Malformed(_) => FailureClass::Schema,
            ComplexError::Space(e) => e.class(),
            _ => FailureClass::Precondition,
        }
    }
}

pub const SUBDIVISION_DIM_CAP: usize = 4;
pub const STARS_DIM_CAP: usize = 3;
pub const NERVE_SIMPLEX_CAP: usize = 1 << 22;

fn sorted(mut v: Vec<u32>) -> Simplex {
    v.sort_unstable();
    v.dedup();
    v
}

/// Finite abstract simplicial complex stored as its full downward closure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimplicialComplex {
    labels: Vec<String>,
    simplices: BTreeSet<Simplex>,
}

impl SimplicialComplex {
    /// Builds from maximal simplices over labeled vertices; the downward
    /// closure is computed. Isolated vertices are listed in `labels` alone.
    pub fn from_maximal(labels: Vec<String>, maximal: Vec<Simplex>) -> Result<Self, ComplexError> {
        let n = labels.len() as u32;
        let mut set: BTreeSet<String> = BTreeSet::new();
        for l in &labels {
            if !set.insert(l.clone()) {
                return Err(ComplexError::Malformed(format!("duplicate vertex label {l:?}")));
            }
        }
        let mut simplices = BTreeSet::new();
        for v in 0..n {
            simplices.insert(vec![v]);
        }
        for m in maximal {
            let m = sorted(m);
            if m.iter().any(|&v| v >= n) {
                return Err(ComplexError::Malformed("simplex vertex out of range".into()));
            }
            if m.is_empty() {
                return Err(ComplexError::Malformed("empty simplex".into()));
            }
            insert_with_faces(&mut simplices, &m);
        }
        Ok(SimplicialComplex { labels, simplices })
    }

    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn vertex_index(&self, label: &str) -> Result<u32, ComplexError> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| i as u32)
            .ok_or_else(|| ComplexError::UnknownVertex(label.to_string()))
    }

    pub fn simplices(&self) -> &BTreeSet<Simplex> {
        &self.simplices
    }

    pub fn contains(&self, s: &Simplex) -> bool {
        self.simplices.contains(s)
    }

    pub fn dim(&self) -> usize {
        self.simplices.iter().map(|s| s.len() - 1).max().unwrap_or(0)
    }

    /// Maximal simplices (not a face of anything else).
    pub fn maximal_simplices(&self) -> Vec<Simplex> {
        self.simplices
            .iter()
            .filter(|s| {
                !self
                    .simplices
                    .iter()
                    .any(|t| t.len() > s.len() && is_subset(s, t))
            })
            .cloned()
            .collect()
    }

    pub fn edges(&self) -> Vec<(u32, u32)> {
        self.simplices.iter().filter(|s| s.len() == 2).map(|s| (s[0], s[1])).collect()
    }

    pub fn adjacency(&self) -> Vec<Vec<u32>> {
        let mut adj = vec![Vec::new(); self.vertex_count()];
        for (a, b) in self.edges() {
            adj[a as usize].push(b);
            adj[b as usize].push(a);
        }
        adj
    }

    /// Hop counts from `src` over the 1-skeleton; `None` for unreachable.
    pub fn bfs_hops(&self, src: u32) -> Vec<Option<u64>> {
        bfs(&self.adjacency(), src)
    }

    /// Connected component index per vertex.
    pub fn components(&self) -> Vec<usize> {
        component_labels(&self.adjacency())
    }

    /// The subcomplex of all simplices of dimension at most `d`.
    pub fn skeleton(&self, d: usize) -> SubComplex {
        SubComplex {
            simplices: self.simplices.iter().filter(|s| s.len() <= d + 1).cloned().collect(),
        }
    }

    pub fn full_subcomplex(&self) -> SubComplex {
        SubComplex { simplices: self.simplices.clone() }
    }

    /// Closed star about `v`: every simplex containing `v`, plus faces.
    pub fn star(&self, v: u32) -> Result<SubComplex, ComplexError> {
        if v as usize >= self.vertex_count() {
            return Err(ComplexError::UnknownVertex(v.to_string()));
        }
        let mut out = BTreeSet::new();
        for s in &self.simplices {
            if s.binary_search(&v).is_ok() {
                insert_with_faces(&mut out, s);
            }
        }
        Ok(SubComplex { simplices: out })
    }
}

fn insert_with_faces(set: &mut BTreeSet<Simplex>, s: &Simplex) {
    if !set.insert(s.clone()) {
        return;
    }
    if s.len() > 1 {
        for drop in 0..s.len() {
            let mut face = s.clone();
            face.remove(drop);
            insert_with_faces(set, &face);
        }
    }
}

fn is_subset(a: &[u32], b: &[u32]) -> bool {
    let mut it = b.iter();
    a.iter().all(|x| it.any(|y| y == x))
}

fn bfs(adj: &[Vec<u32>], src: u32) -> Vec<Option<u64>> {
    let mut dist = vec![None; adj.len()];
    let mut q = VecDeque::new();
    dist[src as usize] = Some(0);
    q.push_back(src);
    while let Some(u) = q.pop_front() {
        let du = dist[u as usize].unwrap();
        for &v in &adj[u as usize] {
            if dist[v as usize].is_none() {
                dist[v as usize] = Some(du + 1);
                q.push_back(v);
            }
        }
    }
    dist
}

fn component_labels(adj: &[Vec<u32>]) -> Vec<usize> {
    let mut comp = vec![usize::MAX; adj.len()];
    let mut next = 0;
    for start in 0..adj.len() {
        if comp[start] != usize::MAX {
            continue;
        }
        let mut q = VecDeque::new();
        comp[start] = next;
        q.push_back(start as u32);
        while let Some(u) = q.pop_front() {
            for &v in &adj[u as usize] {
                if comp[v as usize] == usize::MAX {
                    comp[v as usize] = next;
                    q.push_back(v);
                }
            }
        }
        next += 1;
    }
    comp
}

/// Downward-closed set of simplices of a parent complex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubComplex {
    simplices: BTreeSet<Simplex>,
}

impl SubComplex {
    pub fn empty() -> Self {
        SubComplex { simplices: BTreeSet::new() }
    }

    pub fn from_simplices<I: IntoIterator<Item = Simplex>>(it: I) -> Self {
        let mut simplices = BTreeSet::new();
        for s in it {
            insert_with_faces(&mut simplices, &sorted(s));
        }
        SubComplex { simplices }
    }

    pub fn simplices(&self) -> &BTreeSet<Simplex> {
        &self.simplices
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.simplices.iter().map(|s| s.len() - 1).max()
    }

    pub fn vertices(&self) -> Vec<u32> {
        self.simplices.iter().filter(|s| s.len() == 1).map(|s| s[0]).collect()
    }

    pub fn contains(&self, s: &Simplex) -> bool {
        self.simplices.contains(s)
    }

    pub fn maximal_simplices(&self) -> Vec<Simplex> {
        self.simplices
            .iter()
            .filter(|s| {
                !self.simplices.iter().any(|t| t.len() > s.len() && is_subset(s, t))
            })
            .cloned()
            .collect()
    }

    pub fn union(&self, other: &SubComplex) -> SubComplex {
        let mut s = self.simplices.clone();
        s.extend(other.simplices.iter().cloned());
        SubComplex { simplices: s }
    }

    pub fn intersection(&self, other: &SubComplex) -> SubComplex {
        SubComplex {
            simplices: self.simplices.intersection(&other.simplices).cloned().collect(),
        }
    }

    pub fn is_subset_of(&self, other: &SubComplex) -> bool {
        self.simplices.is_subset(&other.simplices)
    }

    fn adjacency_within(&self, vertex_count: usize) -> Vec<Vec<u32>> {
        let mut adj = vec![Vec::new(); vertex_count];
        for s in &self.simplices {
            if s.len() == 2 {
                adj[s[0] as usize].push(s[1]);
                adj[s[1] as usize].push(s[0]);
            }
        }
        adj
    }

    /// Component index per vertex of the subcomplex, `None` for vertices of
    /// the parent not present here.
    pub fn component_map(&self, vertex_count: usize) -> Vec<Option<usize>> {
        let adj = self.adjacency_within(vertex_count);
        let mine: BTreeSet<u32> = self.vertices().into_iter().collect();
        let mut comp = vec![None; vertex_count];
        let mut next = 0;
        for &start in &mine {
            if comp[start as usize].is_some() {
                continue;
            }
            let mut q = VecDeque::new();
            comp[start as usize] = Some(next);
            q.push_back(start);
            while let Some(u) = q.pop_front() {
                for &v in &adj[u as usize] {
                    if comp[v as usize].is_none() {
                        comp[v as usize] = Some(next);
                        q.push_back(v);
                    }
                }
            }
            next += 1;
        }
        comp
    }
}

/// Vertex map between complexes sending simplices to simplices.
#[derive(Clone, Debug)]
pub struct SimplicialMap {
    vertex_map: Vec<u32>,
}

impl SimplicialMap {
    pub fn new(
        source: &SimplicialComplex,
        target: &SimplicialComplex,
        vertex_map: Vec<u32>,
    ) -> Result<Self, ComplexError> {
        if vertex_map.len() != source.vertex_count() {
            return Err(ComplexError::Malformed("vertex map has wrong length".into()));
        }
        if vertex_map.iter().any(|&v| v as usize >= target.vertex_count()) {
            return Err(ComplexError::Malformed("vertex map target out of range".into()));
        }
        let map = SimplicialMap { vertex_map };
        for s in source.simplices() {
            let img = map.image_simplex(s);
            if !target.contains(&img) {
                return Err(ComplexError::NotSimplicial(format!("{s:?}")));
            }
        }
        Ok(map)
    }

    pub fn vertex_map(&self) -> &[u32] {
        &self.vertex_map
    }

    pub fn apply(&self, v: u32) -> u32 {
        self.vertex_map[v as usize]
    }

    pub fn image_simplex(&self, s: &Simplex) -> Simplex {
        sorted(s.iter().map(|&v| self.vertex_map[v as usize]).collect())
    }
}

/// Nerve of a cover: one vertex per member, a simplex for every subfamily
/// with a common point.
pub fn nerve(cover: &Cover) -> Result<SimplicialComplex, ComplexError> {
    let members = cover.members();
    let labels: Vec<String> = (0..members.len()).map(|j| j.to_string()).collect();
    // every simplex lies in the member set of one of its common points, so
    // the powersets of the per-point membership lists generate everything
    let mut point_members: BTreeMap<usize, Vec<u32>> = BTreeMap::new();
    for (j, m) in members.iter().enumerate() {
        for &x in m {
            point_members.entry(x).or_default().push(j as u32);
        }
    }
    let mut maximal: BTreeSet<Simplex> = BTreeSet::new();
    let mut budget = 0usize;
    for (_, list) in point_members {
        if list.len() > 24 {
            return Err(ComplexError::Capacity(format!(
                "a point lies in {} members; nerve would be huge",
                list.len()
            )));
        }
        budget += 1usize << list.len();
        if budget > NERVE_SIMPLEX_CAP {
            return Err(ComplexError::Capacity("nerve simplex budget exceeded".into()));
        }
        maximal.insert(list);
    }
    SimplicialComplex::from_maximal(labels, maximal.into_iter().collect())
}

/// Simplicial map from the nerve of a finer cover to the nerve of a coarser
/// one: each member goes to the smallest-index member containing it.
pub fn connecting_map(
    fine: &Cover,
    coarse: &Cover,
    fine_nerve: &SimplicialComplex,
    coarse_nerve: &SimplicialComplex,
) -> Result<SimplicialMap, ComplexError> {
    if fine.space_id() != coarse.space_id() {
        return Err(SpaceError::SpaceMismatch.into());
    }
    let mut vertex_map = Vec::with_capacity(fine.members().len());
    for j in 0..fine.members().len() {
        let mask = fine.member_mask(j);
        let target = (0..coarse.members().len())
            .find(|&k| mask.is_subset(coarse.member_mask(k)))
            .ok_or(ComplexError::RefinementFailure(j))?;
        vertex_map.push(target as u32);
    }
    SimplicialMap::new(fine_nerve, coarse_nerve, vertex_map)
}

/// One barycentric subdivision step together with bookkeeping back to the
/// complex being subdivided and to the original complex.
#[derive(Clone, Debug)]
pub struct Subdivision {
    pub complex: SimplicialComplex,
    /// For each new vertex, the simplex of the previous complex it is the
    /// barycenter of.
    pub vertex_origin: Vec<Simplex>,
    /// For each new vertex, the smallest simplex of the *original* complex
    /// containing it.
    pub carrier: Vec<Simplex>,
    /// Previous-complex simplex -> new vertex index.
    pub vertex_for: BTreeMap<Simplex, u32>,
}

/// `n`-fold barycentric subdivision with carrier maps to the input. New
/// vertices are the barycenters of the previous level's simplices; new
/// simplices are flags of nested simplices.
pub fn barycentric_subdivision(
    k: &SimplicialComplex,
    n: usize,
) -> Result<Subdivision, ComplexError> {
    subdivision_tower(k, n).map(|mut tower| tower.pop().expect("n >= 1"))
}

/// Every step of an iterated subdivision; step `i` subdivides the previous
/// step's complex and carries back to the original input.
pub fn subdivision_tower(
    k: &SimplicialComplex,
    n: usize,
) -> Result<Vec<Subdivision>, ComplexError> {
    if n == 0 {
        return Err(ComplexError::Malformed("need n >= 1 subdivisions".into()));
    }
    if k.dim() > SUBDIVISION_DIM_CAP {
        return Err(ComplexError::Capacity(format!(
            "dimension {} exceeds subdivision cap {SUBDIVISION_DIM_CAP}",
            k.dim()
        )));
    }
    let mut tower = vec![subdivide_once(k, None)?];
    for _ in 1..n {
        let prev = tower.last().unwrap();
        tower.push(subdivide_once(&prev.complex, Some(&prev.carrier))?);
    }
    Ok(tower)
}

fn subdivide_once(
    k: &SimplicialComplex,
    carrier_prev: Option<&[Simplex]>,
) -> Result<Subdivision, ComplexError> {
    let all: Vec<Simplex> = k.simplices().iter().cloned().collect();
    let mut vertex_for: BTreeMap<Simplex, u32> = BTreeMap::new();
    let mut labels = Vec::with_capacity(all.len());
    let mut vertex_origin = Vec::with_capacity(all.len());
    let mut carrier = Vec::with_capacity(all.len());
    for s in &all {
        let id = vertex_for.len() as u32;
        vertex_for.insert(s.clone(), id);
        let label = if s.len() == 1 {
            k.labels()[s[0] as usize].clone()
        } else {
            format!(
                "({})",
                s.iter().map(|&v| k.labels()[v as usize].clone()).collect::<Vec<_>>().join("|")
            )
        };
        labels.push(label);
        vertex_origin.push(s.clone());
        // carriers of a simplex's vertices are nested, so the union is the
        // largest one
        let c = match carrier_prev {
            None => s.clone(),
            Some(prev) => {
                let mut best: &Simplex = &prev[s[0] as usize];
                for &v in &s[1..] {
                    if prev[v as usize].len() > best.len() {
                        best = &prev[v as usize];
                    }
                }
                best.clone()
            }
        };
        carrier.push(c);
    }
    // flags: chains s_0 < s_1 < ... under strict face inclusion
    let mut supersets: BTreeMap<&Simplex, Vec<&Simplex>> = BTreeMap::new();
    for s in &all {
        let ups = all
            .iter()
            .filter(|t| t.len() > s.len() && is_subset(s, t))
            .collect::<Vec<_>>();
        supersets.insert(s, ups);
    }
    let mut maximal: Vec<Simplex> = Vec::new();
    let mut stack: Vec<(Vec<u32>, &Simplex)> = all
        .iter()
        .filter(|s| s.len() == 1)
        .map(|s| (vec![vertex_for[s]], s))
        .collect();
    while let Some((chain, top)) = stack.pop() {
        let ups = &supersets[top];
        if ups.is_empty() {
            maximal.push(chain);
            continue;
        }
        let mut extended = false;
        for up in ups {
            // maximal flags only: extend by covers (no intermediate simplex)
            if up.len() == top.len() + 1 {
                let mut c = chain.clone();
                c.push(vertex_for[*up]);
                stack.push((c, up));
                extended = true;
            }
        }
        if !extended {
            maximal.push(chain);
        }
    }
    let complex = SimplicialComplex::from_maximal(labels, maximal)?;
    Ok(Subdivision { complex, vertex_origin, carrier, vertex_for })
}

/// Simplicial complex whose simplices carry the spherical geometry: adjacent
/// vertices sit a quarter great-circle apart, and vertex distances have no
/// shortcuts through simplex interiors.
#[derive(Clone, Debug)]
pub struct SphericalComplex {
    pub complex: SimplicialComplex,
    /// Declared lower bound on the distance between components; metadata for
    /// embedding contexts (within one complex, cross-component distance is
    /// infinite).
    pub separation: Rat,
}

impl SphericalComplex {
    pub fn new(complex: SimplicialComplex, separation: Rat) -> Self {
        SphericalComplex { complex, separation }
    }

    /// Skeleton hop count, `None` across components.
    pub fn skeleton_hops(&self, v: u32, w: u32) -> Result<Option<u64>, ComplexError> {
        let n = self.complex.vertex_count() as u32;
        if v >= n || w >= n {
            return Err(ComplexError::UnknownVertex(v.max(w).to_string()));
        }
        if v == w {
            return Ok(Some(0));
        }
        Ok(self.complex.bfs_hops(v)[w as usize])
    }

    /// Exact vertex distance: pi/2 times the skeleton hop count, `None`
    /// (infinite) across components.
    pub fn vertex_distance(&self, v: u32, w: u32) -> Result<Option<Length>, ComplexError> {
        Ok(self.skeleton_hops(v, w)?.map(|h| Length::quarters(rat_int(h as i64))))
    }
}

/// Point in a simplex given by barycentric weights; the geometric position is
/// the radial projection onto the unit sphere.
#[derive(Clone, Debug)]
pub struct BarycentricPoint {
    carrier: Simplex,
    weights: Vec<Rat>,
}

impl BarycentricPoint {
    pub fn new(
        complex: &SimplicialComplex,
        carrier: Simplex,
        weights: Vec<Rat>,
    ) -> Result<Self, ComplexError> {
        let carrier = sorted(carrier);
        if !complex.contains(&carrier) {
            return Err(ComplexError::BadPoint("carrier is not a simplex".into()));
        }
        if weights.len() != carrier.len() {
            return Err(ComplexError::BadPoint("weight count != carrier size".into()));
        }
        if weights.iter().any(|w| w < &Rat::zero()) {
            return Err(ComplexError::BadPoint("negative weight".into()));
        }
        let total: Rat = weights.iter().cloned().sum();
        if total != rat_int(1) {
            return Err(ComplexError::BadPoint("weights must sum to 1".into()));
        }
        Ok(BarycentricPoint { carrier, weights })
    }

    pub fn vertex(complex: &SimplicialComplex, v: u32) -> Result<Self, ComplexError> {
        BarycentricPoint::new(complex, vec![v], vec![rat_int(1)])
    }

    /// Vertices with nonzero weight.
    pub fn support(&self) -> Simplex {
        self.carrier
            .iter()
            .zip(&self.weights)
            .filter(|(_, w)| !w.is_zero())
            .map(|(&v, _)| v)
            .collect()
    }

    pub fn as_vertex(&self) -> Option<u32> {
        let s = self.support();
        (s.len() == 1).then(|| s[0])
    }

    /// Unit position vector indexed by the complex's vertices.
    fn unit_position(&self, vertex_count: usize) -> Vec<f64> {
        let mut pos = vec![0.0; vertex_count];
        for (&v, w) in self.carrier.iter().zip(&self.weights) {
            pos[v as usize] = crate::arith::rat_to_f64(w);
        }
        normalize(&mut pos);
        pos
    }
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Slack added around floating-point angle evaluations.
const ANGLE_SLACK: f64 = 1e-9;
/// Extra slack on Dijkstra upper bounds over subdivision graphs.
const PATH_SLACK: f64 = 1e-6;

pub const POINT_DISTANCE_DEPTH_CAP: usize = 3;

/// Two-sided bound on a spherical path distance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistanceInterval {
    pub lo: Length,
    pub hi: Length,
}

/// Distance between two barycentric points. Exact (up to a documented 1e-9
/// angle slack) when the points share a carrier simplex; otherwise the upper
/// bound comes from a Dijkstra run on the depth-`depth` subdivision graph and
/// the lower bound from vertex-distance triangle bounds. The upper bound is
/// the best over all depths up to the requested one, so it is nonincreasing
/// in `depth` by construction.
pub fn point_distance(
    sc: &SphericalComplex,
    p: &BarycentricPoint,
    q: &BarycentricPoint,
    depth: usize,
) -> Result<DistanceInterval, ComplexError> {
    if depth > POINT_DISTANCE_DEPTH_CAP {
        return Err(ComplexError::Capacity(format!(
            "subdivision depth {depth} exceeds cap {POINT_DISTANCE_DEPTH_CAP}"
        )));
    }
    let k = &sc.complex;
    if let (Some(v), Some(w)) = (p.as_vertex(), q.as_vertex()) {
        // vertex queries degenerate to the exact skeleton distance
        return match sc.vertex_distance(v, w)? {
            Some(d) => Ok(DistanceInterval { lo: d.clone(), hi: d }),
            None => Err(ComplexError::BadPoint("points lie in different components".into())),
        };
    }
    let n = k.vertex_count();
    let p_pos = p.unit_position(n);
    let q_pos = q.unit_position(n);
    if common_carrier(k, &p.support(), &q.support()).is_some() {
        let angle = dot(&p_pos, &q_pos).clamp(-1.0, 1.0).acos();
        return Ok(interval_around(angle));
    }

    // Lower bound: hop distances between support vertices minus the angular
    // distance from each point to those vertices.
    let mut lo = Rat::zero();
    for &v in &p.support() {
        let hops = k.bfs_hops(v);
        for &w in &q.support() {
            let Some(h) = hops[w as usize] else { continue };
            let dv = angle_to_vertex(&p_pos, v);
            let dw = angle_to_vertex(&q_pos, w);
            let bound = Length::quarters(rat_int(h as i64)).to_rat()
                - f64_to_rat_upper(dv + dw + 2.0 * ANGLE_SLACK);
            if bound > lo {
                lo = bound;
            }
        }
    }

    // Upper bound: best admissible path through any subdivision graph of
    // depth <= `depth`.
    let mut hi: Option<Rat> = None;
    for d in 0..=depth {
        if let Some(bound) = subdivision_upper_bound(k, p, q, &p_pos, &q_pos, d)? {
            hi = Some(match hi {
                None => bound,
                Some(prev) => prev.min(bound),
            });
        }
    }
    let hi = hi.ok_or_else(|| ComplexError::BadPoint("points lie in different components".into()))?;
    let lo = lo.min(hi.clone());
    Ok(DistanceInterval { lo: Length::units(lo), hi: Length::units(hi) })
}

fn interval_around(angle: f64) -> DistanceInterval {
    let lo = (angle - ANGLE_SLACK).max(0.0);
    let hi = angle + ANGLE_SLACK;
    DistanceInterval {
        lo: Length::units(f64_to_rat_lower(lo)),
        hi: Length::units(f64_to_rat_upper(hi)),
    }
}

fn angle_to_vertex(pos: &[f64], v: u32) -> f64 {
    pos[v as usize].clamp(-1.0, 1.0).acos()
}

fn f64_to_rat_upper(x: f64) -> Rat {
    rat((x * 1e12).ceil() as i64, 1_000_000_000_000)
}

fn f64_to_rat_lower(x: f64) -> Rat {
    rat((x * 1e12).floor() as i64, 1_000_000_000_000)
}

fn common_carrier(k: &SimplicialComplex, a: &Simplex, b: &Simplex) -> Option<Simplex> {
    let joined = sorted(a.iter().chain(b.iter()).copied().collect());
    k.contains(&joined).then_some(joined)
}

fn subdivision_upper_bound(
    k: &SimplicialComplex,
    p: &BarycentricPoint,
    q: &BarycentricPoint,
    p_pos: &[f64],
    q_pos: &[f64],
    depth: usize,
) -> Result<Option<Rat>, ComplexError> {
    let n0 = k.vertex_count();
    // graph vertices: subdivision vertices with positions; at depth 0 the
    // complex's own vertices
    type GraphData = (Vec<Vec<f64>>, Vec<Simplex>, Vec<(u32, u32)>);
    let (positions, carriers, edges): GraphData = if depth == 0
    {
        let pos = (0..n0)
            .map(|v| {
                let mut e = vec![0.0; n0];
                e[v] = 1.0;
                e
            })
            .collect();
        let carriers = (0..n0 as u32).map(|v| vec![v]).collect();
        (pos, carriers, k.edges())
    } else {
        let sub = barycentric_subdivision(k, depth)?;
        let mut pos: Vec<Vec<f64>> = Vec::with_capacity(sub.complex.vertex_count());
        // positions computed level by level would need every intermediate
        // complex; the carrier-weighted barycenter of the origin simplex is
        // evaluated directly instead: subdivision vertices are normalized
        // means of their origin vertices' positions, so recompute through the
        // chain of origins
        pos.extend(positions_through(k, depth)?);
        (pos, sub.carrier.clone(), sub.complex.edges())
    };
    // attach p and q to compatible graph vertices
    let mut best: Option<f64> = None;
    let gn = positions.len();
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); gn + 2];
    for (a, b) in &edges {
        let w = dot(&positions[*a as usize], &positions[*b as usize]).clamp(-1.0, 1.0).acos();
        adj[*a as usize].push((*b as usize, w));
        adj[*b as usize].push((*a as usize, w));
    }
    let src = gn;
    let dst = gn + 1;
    let p_support = p.support();
    let q_support = q.support();
    for (u, carrier) in carriers.iter().enumerate() {
        if common_carrier(k, &p_support, carrier).is_some() {
            let w = dot(p_pos, &positions[u]).clamp(-1.0, 1.0).acos();
            adj[src].push((u, w));
        }
        if common_carrier(k, &q_support, carrier).is_some() {
            let w = dot(q_pos, &positions[u]).clamp(-1.0, 1.0).acos();
            adj[u].push((dst, w));
        }
    }
    // finite Dijkstra over f64 weights
    let mut dist = vec![f64::INFINITY; gn + 2];
    let mut heap = std::collections::BinaryHeap::new();
    dist[src] = 0.0;
    heap.push((std::cmp::Reverse(ordered(0.0)), src));
    while let Some((std::cmp::Reverse(d), u)) = heap.pop() {
        let d = d.0;
        if d > dist[u] {
            continue;
        }
        for &(v, w) in &adj[u] {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push((std::cmp::Reverse(ordered(nd)), v));
            }
        }
    }
    if dist[dst].is_finite() {
        best = Some(dist[dst]);
    }
    Ok(best.map(|b| f64_to_rat_upper(b + PATH_SLACK)))
}

#[derive(PartialEq, PartialOrd)]
struct Ordered(f64);
impl Eq for Ordered {}
#[allow(clippy::derive_ord_xor_partial_ord)]
impl Ord for Ordered {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.partial_cmp(&other.0).unwrap_or(std::cmp::Ordering::Equal)
    }
}
fn ordered(x: f64) -> Ordered {
    Ordered(x)
}

/// Unit positions of every depth-`n` subdivision vertex in the coordinates of
/// the original complex's vertices.
pub(crate) fn positions_through(
    k: &SimplicialComplex,
    depth: usize,
) -> Result<Vec<Vec<f64>>, ComplexError> {
    let n0 = k.vertex_count();
    let mut positions: Vec<Vec<f64>> = (0..n0)
        .map(|v| {
            let mut e = vec![0.0; n0];
            e[v] = 1.0;
            e
        })
        .collect();
    let mut current = k.clone();
    for _ in 0..depth {
        let sub = subdivide_once(&current, None)?;
        let mut next_pos = Vec::with_capacity(sub.complex.vertex_count());
        for origin in &sub.vertex_origin {
            let mut mean = vec![0.0; n0];
            for &v in origin {
                for (m, x) in mean.iter_mut().zip(&positions[v as usize]) {
                    *m += x;
                }
            }
            normalize(&mut mean);
            next_pos.push(mean);
        }
        positions = next_pos;
        current = sub.complex;
    }
    Ok(positions)
}

/// Star decomposition of the second barycentric subdivision: layer `k` is the
/// union of closed stars about the barycenters of the original k-simplices.
#[derive(Clone, Debug)]
pub struct StarsDecomposition {
    /// The second subdivision everything lives in.
    pub base: SimplicialComplex,
    pub layers: Vec<StarLayer>,
}

#[derive(Clone, Debug)]
pub struct StarLayer {
    pub k: usize,
    /// One closed star per original k-simplex, in the order the original
    /// simplices enumerate.
    pub stars: Vec<SubComplex>,
    pub union: SubComplex,
    /// Minimum skeleton hop distance between distinct stars; `None` when the
    /// layer has fewer than two stars or all pairs are in different
    /// components.
    pub min_separation_hops: Option<u64>,
    pub stars_disjoint: bool,
}

pub fn stars_decomposition(k: &SimplicialComplex) -> Result<StarsDecomposition, ComplexError> {
    if k.dim() > STARS_DIM_CAP {
        return Err(ComplexError::Capacity(format!(
            "dimension {} exceeds star decomposition cap {STARS_DIM_CAP}",
            k.dim()
        )));
    }
    let first = subdivide_once(k, None)?;
    let second = subdivide_once(&first.complex, Some(&first.carrier))?;
    let base = second.complex.clone();
    let m = k.dim();
    let mut layers = Vec::with_capacity(m + 1);
    for dim in 0..=m {
        let mut stars = Vec::new();
        for s in k.simplices().iter().filter(|s| s.len() == dim + 1) {
            // barycenter of s: the first-subdivision vertex for s, then the
            // second-subdivision vertex for the singleton flag on it
            let v1 = first.vertex_for[s];
            let v2 = second.vertex_for[&vec![v1]];
            stars.push(base.star(v2)?);
        }
        let mut union = SubComplex::empty();
        for st in &stars {
            union = union.union(st);
        }
        let (sep, disjoint) = star_separation(&base, &stars);
        layers.push(StarLayer {
            k: dim,
            stars,
            union,
            min_separation_hops: sep,
            stars_disjoint: disjoint,
        });
    }
    Ok(StarsDecomposition { base, layers })
}

fn star_separation(base: &SimplicialComplex, stars: &[SubComplex]) -> (Option<u64>, bool) {
    let mut disjoint = true;
    let mut min_hops: Option<u64> = None;
    let vertex_sets: Vec<Vec<u32>> = stars.iter().map(|s| s.vertices()).collect();
    for i in 0..stars.len() {
        let set_i: BTreeSet<u32> = vertex_sets[i].iter().copied().collect();
        for j in (i + 1)..stars.len() {
            if vertex_sets[j].iter().any(|v| set_i.contains(v)) {
                disjoint = false;
                min_hops = Some(0);
                continue;
            }
            for &v in &vertex_sets[i] {
                let hops = base.bfs_hops(v);
                for &w in &vertex_sets[j] {
                    if let Some(h) = hops[w as usize] {
                        if min_hops.is_none_or(|m| h < m) {
                            min_hops = Some(h);
                        }
                    }
                }
            }
        }
    }
    (min_hops, disjoint)
}

/// `Y` together with the whole 1-skeleton of the ambient complex.
pub fn one_skeleton_union(ambient: &SimplicialComplex, y: &SubComplex) -> SubComplex {
    y.union(&ambient.skeleton(1))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Distortion {
    Finite(Rat),
    Infinite,
}

/// Distortion of `Y` inside the complex, over vertex pairs: internal skeleton
/// distance within `Y` divided by ambient skeleton distance. Infinite when a
/// pair is connected in the ambient complex but not inside `Y`.
pub fn distortion(sc: &SphericalComplex, y: &SubComplex) -> Result<Distortion, ComplexError> {
    if y.is_empty() {
        return Err(ComplexError::Malformed("distortion of an empty subcomplex".into()));
    }
    let n = sc.complex.vertex_count();
    let verts = y.vertices();
    let y_adj = y.adjacency_within(n);
    let mut best = Rat::zero();
    for &v in &verts {
        let ambient = sc.complex.bfs_hops(v);
        let inner = bfs(&y_adj, v);
        for &w in &verts {
            if w <= v {
                continue;
            }
            match (ambient[w as usize], inner[w as usize]) {
                (Some(a), Some(i)) => {
                    if a == 0 {
                        continue;
                    }
                    let ratio = rat(i as i64, a as i64);
                    if ratio > best {
                        best = ratio;
                    }
                }
                (Some(_), None) => return Ok(Distortion::Infinite),
                (None, _) => {}
            }
        }
    }
    if best.is_zero() {
        best = rat_int(1); // no distinct connected pairs: distortion 1 by convention
    }
    Ok(Distortion::Finite(best))
}

/// Each component of the ambient complex contains at most one component of
/// `Y`.
pub fn relatively_connected(sc: &SphericalComplex, y: &SubComplex) -> bool {
    let n = sc.complex.vertex_count();
    let ambient = sc.complex.components();
    let inner = y.component_map(n);
    let mut seen: BTreeMap<usize, usize> = BTreeMap::new();
    for v in 0..n {
        if let Some(yc) = inner[v] {
            match seen.get(&ambient[v]) {
                Some(&prev) if prev != yc => return false,
                Some(_) => {}
                None => {
                    seen.insert(ambient[v], yc);
                }
            }
        }
    }
    true
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TieBreak {
    LeastId,
    GreatestId,
}

/// A map from nerve vertices back into the space: member `j` goes to one of
/// its own points, chosen by the tie-break rule on point ids.
pub fn nerve_projection(
    space: &FilteredMetricSpace,
    cover: &Cover,
    tie_break: TieBreak,
) -> Vec<usize> {
    cover
        .members()
        .iter()
        .map(|m| {
            let pick = match tie_break {
                TieBreak::LeastId => m
                    .iter()
                    .min_by_key(|&&i| &space.point_ids()[i]),
                TieBreak::GreatestId => m
                    .iter()
                    .max_by_key(|&&i| &space.point_ids()[i]),
            };
            *pick.expect("members are nonempty")
        })
        .collect()
}

/// JSON form of a complex: vertices plus maximal simplices by label.
#[derive(Serialize, Deserialize)]
pub struct ComplexRepr {
    pub vertices: Vec<String>,
    pub maximal_simplices: Vec<Vec<String>>,
}

impl ComplexRepr {
    pub fn from_complex(k: &SimplicialComplex) -> Self {
        ComplexRepr {
            vertices: k.labels().to_vec(),
            maximal_simplices: k
                .maximal_simplices()
                .into_iter()
                .map(|s| s.iter().map(|&v| k.labels()[v as usize].clone()).collect())
                .collect(),
        }
    }

    pub fn into_complex(self) -> Result<SimplicialComplex, ComplexError> {
        let index: BTreeMap<&str, u32> = self
            .vertices
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i as u32))
            .collect();
        if index.len() != self.vertices.len() {
            return Err(ComplexError::Malformed("duplicate vertex labels".into()));
        }
        let maximal = self
            .maximal_simplices
            .iter()
            .map(|s| {
                s.iter()
                    .map(|l| {
                        index
                            .get(l.as_str())
                            .copied()
                            .ok_or_else(|| ComplexError::UnknownVertex(l.clone()))
                    })
                    .collect::<Result<Vec<u32>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        SimplicialComplex::from_maximal(self.vertices, maximal)
    }
}

/// Closeness of two point maps out of the same nerve, as a distance sup.
pub fn projection_closeness(
    space: &FilteredMetricSpace,
    eta1: &[usize],
    eta2: &[usize],
) -> Rat {
    eta1.iter()
        .zip(eta2)
        .map(|(&a, &b)| space.d(a, b).clone())
        .max()
        .unwrap_or_else(Rat::zero)
}
