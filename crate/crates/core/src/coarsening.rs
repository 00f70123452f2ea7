//! Layered graph model of a coarsening space: nerves at integer levels glued
//! by connecting maps, the level projection, collapsing maps, and the
//! logarithmic swindle sequence with its three quantitative hypothesis
//! checks.
//!
//! The graph metric is an upper bound for the space's path metric: graph
//! paths are admissible paths. Horizontal edges carry spherical lengths
//! (exact quarter turns along original edges, upper-rounded interior lengths
//! on subdivisions), vertical edges weigh one unit.

use std::collections::BTreeMap;

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{rat, rat_int, Length, Rat};
use crate::complexes::{
    connecting_map, nerve, positions_through, subdivision_tower, ComplexError, ComplexRepr,
    SimplicialComplex, SimplicialMap, Subdivision,
};
use crate::spaces::{refines, Cover, FilteredMetricSpace, SpaceError};
use crate::FailureClass;

#[derive(Debug, Error)]
pub enum CoarseningError {
    #[error("need at least one cover")]
    Empty,
    #[error("covers {0} and {1} are not successively coarser")]
    NotRefining(usize, usize),
    #[error("level {0} out of range 1..={1}")]
    BadLevel(u32, u32),
    #[error("unknown node {0}")]
    BadNode(usize),
    #[error("level graphs are inconsistent: {0}")]
    Inconsistent(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

impl CoarseningError {
    pub fn class(&self) -> FailureClass {
        match self {
            CoarseningError::Capacity(_) => FailureClass::Capacity,
            CoarseningError::Complex(e) => e.class(),
            CoarseningError::Space(e) => e.class(),
            _ => FailureClass::Precondition,
        }
    }
}

pub type NodeId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct SpacePoint {
    /// 1-based level.
    pub level: u32,
    /// Vertex index within the level graph.
    pub vertex: u32,
}

struct LevelData {
    nerve: SimplicialComplex,
    /// Connecting map into the next level; absent on the last level.
    connect: Option<SimplicialMap>,
    /// Subdivision tower of the nerve when depth >= 1.
    tower: Vec<Subdivision>,
    /// Level-graph vertex labels.
    graph_labels: Vec<String>,
    /// Nerve vertex -> level-graph vertex.
    orig_vertex_node: Vec<u32>,
    /// Level-graph vertex -> smallest nerve simplex containing it.
    carrier: Vec<Vec<u32>>,
    /// Level-internal edges with weights.
    edges: Vec<(u32, u32, Length)>,
}

pub struct CoarseningSpace {
    levels: Vec<LevelData>,
    depth: usize,
    nodes: Vec<SpacePoint>,
    node_of: BTreeMap<(u32, u32), NodeId>,
    adj: Vec<Vec<(NodeId, Length)>>,
}

const CONSISTENCY_CHECK_NODE_CAP: usize = 1500;

impl CoarseningSpace {
    /// Assembles the layered graph from per-level nerves and connecting
    /// maps. Verifies that vertical edges respect the maps and that
    /// level-internal distances between nerve vertices reproduce the
    /// quarter-turn skeleton metric.
    pub fn from_parts(
        nerves: Vec<SimplicialComplex>,
        connects: Vec<SimplicialMap>,
        depth: usize,
    ) -> Result<Self, CoarseningError> {
        if nerves.is_empty() {
            return Err(CoarseningError::Empty);
        }
        if connects.len() + 1 != nerves.len() {
            return Err(CoarseningError::Inconsistent(format!(
                "{} nerves need {} connecting maps, got {}",
                nerves.len(),
                nerves.len() - 1,
                connects.len()
            )));
        }
        let count = nerves.len();
        let mut levels = Vec::with_capacity(count);
        let mut connects_iter = connects.into_iter();
        for (idx, nv) in nerves.into_iter().enumerate() {
            let connect = if idx + 1 < count { connects_iter.next() } else { None };
            levels.push(build_level(nv, connect, depth)?);
        }
        let mut nodes = Vec::new();
        let mut node_of = BTreeMap::new();
        for (li, level) in levels.iter().enumerate() {
            for v in 0..level.graph_labels.len() as u32 {
                let id = nodes.len();
                nodes.push(SpacePoint { level: li as u32 + 1, vertex: v });
                node_of.insert((li as u32 + 1, v), id);
            }
        }
        let mut adj: Vec<Vec<(NodeId, Length)>> = vec![Vec::new(); nodes.len()];
        for (li, level) in levels.iter().enumerate() {
            let l = li as u32 + 1;
            for (a, b, w) in &level.edges {
                let na = node_of[&(l, *a)];
                let nb = node_of[&(l, *b)];
                adj[na].push((nb, w.clone()));
                adj[nb].push((na, w.clone()));
            }
            if let Some(connect) = &level.connect {
                let next = &levels[li + 1];
                for v in 0..level.nerve.vertex_count() as u32 {
                    let img = connect.apply(v);
                    let na = node_of[&(l, level.orig_vertex_node[v as usize])];
                    let nb = node_of[&(l + 1, next.orig_vertex_node[img as usize])];
                    adj[na].push((nb, Length::units(rat_int(1))));
                    adj[nb].push((na, Length::units(rat_int(1))));
                }
            }
        }
        let space = CoarseningSpace { levels, depth, nodes, node_of, adj };
        if space.nodes.len() <= CONSISTENCY_CHECK_NODE_CAP {
            space.verify_level_consistency()?;
        }
        Ok(space)
    }

    /// Builds nerves and connecting maps from a certified anti-Cech cover
    /// list over a space, then assembles the graph.
    pub fn build(
        space: &FilteredMetricSpace,
        covers: &[Cover],
        depth: usize,
    ) -> Result<Self, CoarseningError> {
        if covers.is_empty() {
            return Err(CoarseningError::Empty);
        }
        for (i, w) in covers.windows(2).enumerate() {
            if !refines(&w[0], &w[1])? {
                return Err(CoarseningError::NotRefining(i, i + 1));
            }
        }
        let _ = space;
        let nerves: Vec<SimplicialComplex> =
            covers.iter().map(nerve).collect::<Result<_, _>>()?;
        let mut connects = Vec::with_capacity(covers.len().saturating_sub(1));
        for i in 0..covers.len() - 1 {
            connects.push(connecting_map(&covers[i], &covers[i + 1], &nerves[i], &nerves[i + 1])?);
        }
        CoarseningSpace::from_parts(nerves, connects, depth)
    }

    pub fn level_count(&self) -> u32 {
        self.levels.len() as u32
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[SpacePoint] {
        &self.nodes
    }

    pub fn node_id(&self, p: SpacePoint) -> Result<NodeId, CoarseningError> {
        self.node_of
            .get(&(p.level, p.vertex))
            .copied()
            .ok_or(CoarseningError::BadNode(p.vertex as usize))
    }

    pub fn point(&self, id: NodeId) -> Result<SpacePoint, CoarseningError> {
        self.nodes.get(id).copied().ok_or(CoarseningError::BadNode(id))
    }

    pub fn node_label(&self, id: NodeId) -> String {
        let p = self.nodes[id];
        format!(
            "L{}:{}",
            p.level,
            self.levels[p.level as usize - 1].graph_labels[p.vertex as usize]
        )
    }

    pub fn node_by_label(&self, label: &str) -> Option<NodeId> {
        (0..self.nodes.len()).find(|&id| self.node_label(id) == label)
    }

    pub fn nerve_at(&self, level: u32) -> Result<&SimplicialComplex, CoarseningError> {
        self.level_data(level).map(|l| &l.nerve)
    }

    pub fn connecting_at(&self, level: u32) -> Result<Option<&SimplicialMap>, CoarseningError> {
        self.level_data(level).map(|l| l.connect.as_ref())
    }

    /// Node of an original nerve vertex.
    pub fn nerve_vertex_node(&self, level: u32, v: u32) -> Result<NodeId, CoarseningError> {
        let l = self.level_data(level)?;
        let gv = *l
            .orig_vertex_node
            .get(v as usize)
            .ok_or(CoarseningError::BadNode(v as usize))?;
        Ok(self.node_of[&(level, gv)])
    }

    fn level_data(&self, level: u32) -> Result<&LevelData, CoarseningError> {
        if level == 0 || level > self.level_count() {
            return Err(CoarseningError::BadLevel(level, self.level_count()));
        }
        Ok(&self.levels[level as usize - 1])
    }

    /// The stored level of a point.
    pub fn projection(&self, id: NodeId) -> Result<u32, CoarseningError> {
        Ok(self.point(id)?.level)
    }

    /// Node ids of the partial space: all levels up to and including `i`.
    pub fn partial_space(&self, i: u32) -> Result<Vec<NodeId>, CoarseningError> {
        if i == 0 || i > self.level_count() {
            return Err(CoarseningError::BadLevel(i, self.level_count()));
        }
        Ok((0..self.nodes.len()).filter(|&id| self.nodes[id].level <= i).collect())
    }

    /// Dijkstra distance in the layered graph; `None` across components.
    pub fn graph_distance(&self, a: NodeId, b: NodeId) -> Result<Option<Length>, CoarseningError> {
        if a >= self.nodes.len() || b >= self.nodes.len() {
            return Err(CoarseningError::BadNode(a.max(b)));
        }
        Ok(self.distances_from(a)[b].clone())
    }

    pub fn distances_from(&self, src: NodeId) -> Vec<Option<Length>> {
        use std::cmp::Reverse;
        use std::collections::BinaryHeap;
        let mut dist: Vec<Option<Length>> = vec![None; self.nodes.len()];
        let mut heap = BinaryHeap::new();
        dist[src] = Some(Length::zero());
        heap.push(Reverse((Length::zero(), src)));
        while let Some(Reverse((d, u))) = heap.pop() {
            if dist[u].as_ref().is_some_and(|best| *best < d) {
                continue;
            }
            for (v, w) in &self.adj[u] {
                let nd = &d + w;
                if dist[*v].as_ref().is_none_or(|best| nd < *best) {
                    dist[*v] = Some(nd.clone());
                    heap.push(Reverse((nd, *v)));
                }
            }
        }
        dist
    }

    /// Distance between two nerve vertices of one level using only that
    /// level's edges.
    pub fn level_restricted_distance(
        &self,
        level: u32,
        a: u32,
        b: u32,
    ) -> Result<Option<Length>, CoarseningError> {
        use std::cmp::Reverse;
        use std::collections::BinaryHeap;
        let l = self.level_data(level)?;
        let n = l.graph_labels.len();
        let mut adj: Vec<Vec<(u32, Length)>> = vec![Vec::new(); n];
        for (x, y, w) in &l.edges {
            adj[*x as usize].push((*y, w.clone()));
            adj[*y as usize].push((*x, w.clone()));
        }
        let src = l.orig_vertex_node[a as usize];
        let dst = l.orig_vertex_node[b as usize];
        let mut dist: Vec<Option<Length>> = vec![None; n];
        let mut heap = BinaryHeap::new();
        dist[src as usize] = Some(Length::zero());
        heap.push(Reverse((Length::zero(), src)));
        while let Some(Reverse((d, u))) = heap.pop() {
            if dist[u as usize].as_ref().is_some_and(|best| *best < d) {
                continue;
            }
            for (v, w) in &adj[u as usize] {
                let nd = &d + w;
                if dist[*v as usize].as_ref().is_none_or(|best| nd < *best) {
                    dist[*v as usize] = Some(nd.clone());
                    heap.push(Reverse((nd, *v)));
                }
            }
        }
        Ok(dist[dst as usize].clone())
    }

    fn verify_level_consistency(&self) -> Result<(), CoarseningError> {
        for (li, level) in self.levels.iter().enumerate() {
            let l = li as u32 + 1;
            let n = level.nerve.vertex_count() as u32;
            for a in 0..n {
                let hops = level.nerve.bfs_hops(a);
                for b in (a + 1)..n {
                    let want = hops[b as usize].map(|h| Length::quarters(rat_int(h as i64)));
                    let got = self.level_restricted_distance(l, a, b)?;
                    if want != got {
                        return Err(CoarseningError::Inconsistent(format!(
                            "level {l}: vertices {a},{b}: skeleton {want:?} vs graph {got:?}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Collapsing map: points at level `t` or above stay put; everything
    /// below is pushed to level `t` through the composed connecting maps
    /// (subdivision nodes land on the barycenter of their carrier's image).
    pub fn collapse(&self, t: u32, id: NodeId) -> Result<NodeId, CoarseningError> {
        if t == 0 || t > self.level_count() {
            return Err(CoarseningError::BadLevel(t, self.level_count()));
        }
        let p = self.point(id)?;
        if p.level >= t {
            return Ok(id);
        }
        let level = self.level_data(p.level)?;
        // carrier simplex in the nerve, pushed through the connecting maps
        let mut simplex: Vec<u32> = level.carrier[p.vertex as usize].clone();
        for l in p.level..t {
            let connect = self
                .level_data(l)?
                .connect
                .as_ref()
                .expect("interior levels have connecting maps");
            simplex = connect.image_simplex(&simplex);
        }
        let target = self.level_data(t)?;
        let vertex = target.locate_barycenter(&simplex)?;
        Ok(self.node_of[&(t, vertex)])
    }

    /// A point-map view of one collapse: `collapse(t, .)` applied to every
    /// node.
    pub fn collapse_map(&self, t: u32) -> Result<Vec<NodeId>, CoarseningError> {
        (0..self.nodes.len()).map(|id| self.collapse(t, id)).collect()
    }

    /// Minimal level `t` whose collapse sends every node of `k` to a single
    /// node, or `None` within this truncation.
    pub fn collapse_to_point_level(&self, k: &[NodeId]) -> Result<Option<u32>, CoarseningError> {
        if k.is_empty() {
            return Err(CoarseningError::BadNode(0));
        }
        for t in 1..=self.level_count() {
            let first = self.collapse(t, k[0])?;
            let mut all = true;
            for &id in &k[1..] {
                if self.collapse(t, id)? != first {
                    all = false;
                    break;
                }
            }
            if all {
                return Ok(Some(t));
            }
        }
        Ok(None)
    }

    /// A finite metric space over the nodes: graph distances with pi/2
    /// collapsed to its rational stand-in, filtered by the partial spaces.
    pub fn as_metric_space(&self) -> Result<FilteredMetricSpace, CoarseningError> {
        use rayon::prelude::*;
        let n = self.nodes.len();
        let rows: Vec<Vec<Option<Length>>> =
            (0..n).into_par_iter().map(|src| self.distances_from(src)).collect();
        let mut table: Vec<Vec<Rat>> = Vec::with_capacity(n);
        for row in rows {
            let mut out = Vec::with_capacity(n);
            for d in row {
                match d {
                    Some(len) => out.push(len.to_rat()),
                    None => {
                        return Err(CoarseningError::Inconsistent(
                            "graph is disconnected; no finite metric".into(),
                        ))
                    }
                }
            }
            table.push(out);
        }
        let ids: Vec<String> = (0..n).map(|id| self.node_label(id)).collect();
        let space = FilteredMetricSpace::from_matrix(ids, |i, j| table[i][j].clone())?;
        let stages: Vec<Vec<usize>> = (1..=self.level_count())
            .map(|i| self.partial_space(i))
            .collect::<Result<_, _>>()?;
        Ok(space.with_filtration(stages)?)
    }
}

impl LevelData {
    /// Level-graph vertex for the barycenter of a nerve simplex: the vertex
    /// itself for 0-simplices, the chased subdivision vertex otherwise.
    fn locate_barycenter(&self, simplex: &[u32]) -> Result<u32, CoarseningError> {
        if simplex.len() == 1 {
            return Ok(self.orig_vertex_node[simplex[0] as usize]);
        }
        if self.tower.is_empty() {
            // depth 0: no barycenter vertex exists; use the least vertex of
            // the simplex
            return Ok(self.orig_vertex_node[simplex[0] as usize]);
        }
        let mut v = *self
            .tower[0]
            .vertex_for
            .get(simplex)
            .ok_or_else(|| CoarseningError::Inconsistent("missing barycenter vertex".into()))?;
        for step in &self.tower[1..] {
            v = step.vertex_for[&vec![v]];
        }
        Ok(v)
    }
}

fn build_level(
    nerve: SimplicialComplex,
    connect: Option<SimplicialMap>,
    depth: usize,
) -> Result<LevelData, CoarseningError> {
    if depth == 0 {
        let n = nerve.vertex_count();
        let edges = nerve
            .edges()
            .into_iter()
            .map(|(a, b)| (a, b, Length::quarters(rat_int(1))))
            .collect();
        return Ok(LevelData {
            graph_labels: nerve.labels().to_vec(),
            orig_vertex_node: (0..n as u32).collect(),
            carrier: (0..n as u32).map(|v| vec![v]).collect(),
            edges,
            tower: Vec::new(),
            nerve,
            connect,
        });
    }
    let tower = subdivision_tower(&nerve, depth)?;
    let last = tower.last().unwrap();
    let positions = positions_through(&nerve, depth)?;
    // original vertices persist as iterated singleton barycenters
    let mut orig_vertex_node = Vec::with_capacity(nerve.vertex_count());
    for v in 0..nerve.vertex_count() as u32 {
        let mut cur = tower[0].vertex_for[&vec![v]];
        for step in &tower[1..] {
            cur = step.vertex_for[&vec![cur]];
        }
        orig_vertex_node.push(cur);
    }
    let dyadic = rat(1, 1i64 << depth);
    let mut edges = Vec::new();
    for (a, b) in last.complex.edges() {
        let ca = &last.carrier[a as usize];
        let cb = &last.carrier[b as usize];
        let carrier_dim = ca.len().max(cb.len()) - 1;
        let w = if carrier_dim <= 1 {
            // along an original edge: exact dyadic fraction of a quarter turn
            Length::quarters(dyadic.clone())
        } else {
            let angle = dot(&positions[a as usize], &positions[b as usize])
                .clamp(-1.0, 1.0)
                .acos();
            Length::units(f64_upper(angle))
        };
        edges.push((a, b, w));
    }
    Ok(LevelData {
        graph_labels: last.complex.labels().to_vec(),
        orig_vertex_node,
        carrier: last.carrier.clone(),
        edges,
        tower,
        nerve,
        connect,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Upper rational bound for a nonnegative float at 1e-12 granularity.
fn f64_upper(x: f64) -> Rat {
    rat(((x + 1e-12) * 1e12).ceil() as i64, 1_000_000_000_000)
}

/// The logarithmic swindle maps: node `x` is pushed up
/// `max(ln k - d(x, base), 0)` levels, rounded up and clamped into the
/// truncation.
pub fn swindle_sequence(
    x: &CoarseningSpace,
    base: NodeId,
    kmax: usize,
) -> Result<Vec<Vec<NodeId>>, CoarseningError> {
    if base >= x.node_count() {
        return Err(CoarseningError::BadNode(base));
    }
    let dist = x.distances_from(base);
    let mut maps = Vec::with_capacity(kmax);
    for k in 1..=kmax {
        let logk = (k as f64).ln();
        let mut map = Vec::with_capacity(x.node_count());
        for (id, d) in dist.iter().enumerate() {
            let d = d.as_ref().map_or(f64::INFINITY, Length::to_f64);
            let r = (logk - d).max(0.0);
            let t = (r.ceil() as u32).clamp(1, x.level_count());
            map.push(x.collapse(t, id)?);
        }
        maps.push(map);
    }
    Ok(maps)
}

#[derive(Clone, Debug, Serialize)]
pub struct EscapeEntry {
    pub radius: String,
    pub ball_size: usize,
    /// Largest map index whose range meets the ball; `None` when no map
    /// does.
    pub last_hit: Option<usize>,
    /// Whether the range left the ball before the truncation ran out.
    pub escapes_within_truncation: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ControlEntry {
    pub radius: String,
    pub sup_image_distance: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SwindleReport {
    pub escape: Vec<EscapeEntry>,
    pub control: Vec<ControlEntry>,
    pub step_bound: String,
    pub step_witness: Option<String>,
}

/// Quantitative checks for a sequence of node maps: (a) escape indices for
/// balls about a base node, (b) the uniform control table over all maps, and
/// (c) the uniform step bound between consecutive maps.
pub fn check_swindle_hypotheses(
    x: &CoarseningSpace,
    maps: &[Vec<NodeId>],
    base: NodeId,
    ball_radii: &[Rat],
) -> Result<SwindleReport, CoarseningError> {
    use rayon::prelude::*;
    let n = x.node_count();
    if maps.iter().any(|m| m.len() != n) {
        return Err(CoarseningError::Inconsistent("map arity != node count".into()));
    }
    let all_pairs: Vec<Vec<Option<Length>>> =
        (0..n).into_par_iter().map(|src| x.distances_from(src)).collect();
    let from_base = &all_pairs[base];
    // consecutive maps are mostly identical (levels change at logarithmic
    // breakpoints); group them into runs and evaluate per distinct map
    let mut runs: Vec<(usize, usize, &Vec<NodeId>)> = Vec::new(); // (first k, last k, map)
    for (k, map) in maps.iter().enumerate() {
        match runs.last_mut() {
            Some((_, last, m)) if *m == map => *last = k + 1,
            _ => runs.push((k + 1, k + 1, map)),
        }
    }
    // (a) escape per ball
    let mut escape = Vec::with_capacity(ball_radii.len());
    for r in ball_radii {
        let ball: Vec<NodeId> = (0..n)
            .filter(|&id| from_base[id].as_ref().is_some_and(|d| d.to_rat() <= *r))
            .collect();
        let mut last_hit = None;
        for (_, last, map) in &runs {
            if map.iter().any(|img| ball.binary_search(img).is_ok()) {
                last_hit = Some(*last);
            }
        }
        escape.push(EscapeEntry {
            radius: crate::arith::rat_to_string(r),
            ball_size: ball.len(),
            last_hit,
            escapes_within_truncation: last_hit.is_none_or(|k| k < maps.len()),
        });
    }
    // (b) control table over sampled radii: realized distances thinned to a
    // manageable grid
    let mut radii: Vec<Rat> = {
        let mut all: Vec<Rat> = Vec::new();
        for row in &all_pairs {
            for d in row.iter().flatten() {
                all.push(d.to_rat());
            }
        }
        all.sort();
        all.dedup();
        let stride = (all.len() / 16).max(1);
        let mut sample: Vec<Rat> = all.iter().step_by(stride).cloned().collect();
        if let Some(last) = all.last() {
            if sample.last() != Some(last) {
                sample.push(last.clone());
            }
        }
        sample
    };
    radii.retain(|r| !r.is_zero());
    // per pair: the largest image distance over all (distinct) maps, then
    // fold into the radius-indexed table
    let pair_data: Vec<(Rat, Rat)> = (0..n)
        .into_par_iter()
        .flat_map_iter(|a| {
            let all_pairs = &all_pairs;
            let runs = &runs;
            ((a + 1)..n).filter_map(move |b| {
                let d = all_pairs[a][b].as_ref()?.to_rat();
                let mut sup = Rat::zero();
                for (_, _, map) in runs {
                    if let Some(img) = &all_pairs[map[a]][map[b]] {
                        let v = img.to_rat();
                        if v > sup {
                            sup = v;
                        }
                    }
                }
                Some((d, sup))
            })
        })
        .collect();
    let mut control = Vec::with_capacity(radii.len());
    for r in &radii {
        let mut sup = Rat::zero();
        for (d, s) in &pair_data {
            if d <= r && s > &sup {
                sup = s.clone();
            }
        }
        control.push(ControlEntry {
            radius: crate::arith::rat_to_string(r),
            sup_image_distance: crate::arith::rat_to_string(&sup),
        });
    }
    // (c) step bound: only map change points can contribute
    let mut step = Rat::zero();
    let mut witness = None;
    for w in runs.windows(2) {
        let (k, prev, next) = (w[0].1, w[0].2, w[1].2);
        for id in 0..n {
            let (a, b) = (prev[id], next[id]);
            if let Some(d) = &all_pairs[a][b] {
                let v = d.to_rat();
                if v > step {
                    step = v;
                    witness = Some(format!("k={} node={}", k, x.node_label(id)));
                }
            }
        }
    }
    Ok(SwindleReport {
        escape,
        control,
        step_bound: crate::arith::rat_to_string(&step),
        step_witness: witness,
    })
}

/// JSON form: per-level complexes and connecting maps plus the realized
/// graph; reloading rebuilds through the same deterministic construction.
#[derive(Serialize, Deserialize)]
pub struct CoarseningRepr {
    pub depth: usize,
    pub levels: Vec<LevelRepr>,
    pub nodes: Vec<String>,
    pub edges: Vec<(usize, usize, Length)>,
}

#[derive(Serialize, Deserialize)]
pub struct LevelRepr {
    pub nerve: ComplexRepr,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub connect: Option<BTreeMap<String, String>>,
}

impl CoarseningRepr {
    pub fn from_space(x: &CoarseningSpace) -> Self {
        let levels = x
            .levels
            .iter()
            .enumerate()
            .map(|(li, l)| LevelRepr {
                nerve: ComplexRepr::from_complex(&l.nerve),
                connect: l.connect.as_ref().map(|c| {
                    let next = &x.levels[li + 1];
                    (0..l.nerve.vertex_count())
                        .map(|v| {
                            (
                                l.nerve.labels()[v].clone(),
                                next.nerve.labels()[c.apply(v as u32) as usize].clone(),
                            )
                        })
                        .collect()
                }),
            })
            .collect();
        let nodes = (0..x.node_count()).map(|id| x.node_label(id)).collect();
        let mut edges = Vec::new();
        for (a, nbrs) in x.adj.iter().enumerate() {
            for (b, w) in nbrs {
                if a < *b {
                    edges.push((a, *b, w.clone()));
                }
            }
        }
        edges.sort_by_key(|x1| (x1.0, x1.1));
        edges.dedup_by(|x1, x2| (x1.0, x1.1) == (x2.0, x2.1));
        CoarseningRepr { depth: x.depth, levels, nodes, edges }
    }

    pub fn into_space(self) -> Result<CoarseningSpace, CoarseningError> {
        let mut nerves = Vec::with_capacity(self.levels.len());
        for l in &self.levels {
            nerves.push(
                ComplexRepr {
                    vertices: l.nerve.vertices.clone(),
                    maximal_simplices: l.nerve.maximal_simplices.clone(),
                }
                .into_complex()?,
            );
        }
        let mut connects = Vec::new();
        for (i, l) in self.levels.iter().enumerate() {
            let Some(map) = &l.connect else { continue };
            if i + 1 >= nerves.len() {
                return Err(CoarseningError::Inconsistent(
                    "connecting map on the last level".into(),
                ));
            }
            let mut vm = Vec::with_capacity(nerves[i].vertex_count());
            for label in nerves[i].labels() {
                let to = map.get(label).ok_or_else(|| {
                    CoarseningError::Inconsistent(format!("vertex {label:?} has no image"))
                })?;
                vm.push(nerves[i + 1].vertex_index(to)?);
            }
            connects.push(SimplicialMap::new(&nerves[i], &nerves[i + 1], vm)?);
        }
        CoarseningSpace::from_parts(nerves, connects, self.depth)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::pi_over_two;
    use crate::spaces::{build_anticech, Cover};

    fn circle_covers() -> (FilteredMetricSpace, Vec<Cover>) {
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
        let two = Cover::new(
            &s,
            vec![(0..=8).collect(), (8..=12).map(|k| k % n).collect()],
        )
        .unwrap();
        let two_again = two.clone();
        (s, vec![arcs, two, two_again])
    }

    #[test]
    fn single_cover_space() {
        let s = FilteredMetricSpace::int_interval(0, 10);
        let c = Cover::new(&s, vec![(0..=5).collect(), (4..=10).collect()]).unwrap();
        let x = CoarseningSpace::build(&s, &[c], 0).unwrap();
        assert_eq!(x.level_count(), 1);
        assert_eq!(x.node_count(), 2);
        assert_eq!(x.nerve_at(1).unwrap().dim(), 1);
    }

    #[test]
    fn circle_coarsening_structure() {
        let (s, covers) = circle_covers();
        let x = CoarseningSpace::build(&s, &covers, 0).unwrap();
        assert_eq!(x.level_count(), 3);
        // hollow triangle, edge, edge
        assert_eq!(x.nerve_at(1).unwrap().vertex_count(), 3);
        assert!(!x.nerve_at(1).unwrap().contains(&vec![0, 1, 2]));
        assert_eq!(x.nerve_at(2).unwrap().vertex_count(), 2);
        assert_eq!(x.nerve_at(3).unwrap().vertex_count(), 2);
        assert_eq!(x.node_count(), 7);
        // the first connecting map folds the three arcs onto two members
        let phi = x.connecting_at(1).unwrap().unwrap();
        assert_eq!(phi.vertex_map().len(), 3);
        assert!(x.connecting_at(3).unwrap().is_none());
        // node ids round-trip through points
        for id in 0..x.node_count() {
            let p = x.point(id).unwrap();
            assert_eq!(x.node_id(p).unwrap(), id);
        }
        // partial spaces grow
        let mut prev = 0;
        for i in 1..=3 {
            let p = x.partial_space(i).unwrap().len();
            assert!(p >= prev);
            prev = p;
        }
        assert_eq!(x.partial_space(3).unwrap().len(), x.node_count());
        // projections
        for id in 0..x.node_count() {
            let l = x.projection(id).unwrap();
            assert!((1..=3).contains(&l));
        }
    }

    #[test]
    fn interval_coarsening_from_anticech() {
        let s = FilteredMetricSpace::int_interval(-50, 50);
        let ac = build_anticech(&s, &[rat_int(1), rat_int(4), rat_int(16)]).unwrap();
        let x = CoarseningSpace::build(&s, &ac.covers, 0).unwrap();
        assert_eq!(x.level_count(), 3);
        assert!(x.node_count() > 3);
    }

    #[test]
    fn graph_distance_basics() {
        let (s, covers) = circle_covers();
        let x = CoarseningSpace::build(&s, &covers, 0).unwrap();
        let a = x.nerve_vertex_node(1, 0).unwrap();
        assert_eq!(x.graph_distance(a, a).unwrap().unwrap(), Length::zero());
        // adjacent same-level vertices: one spherical edge
        let b = x.nerve_vertex_node(1, 1).unwrap();
        assert_eq!(
            x.graph_distance(a, b).unwrap().unwrap(),
            Length::quarters(rat_int(1))
        );
        // vertical neighbor: weight one
        let up = x.collapse(2, a).unwrap();
        assert_eq!(x.graph_distance(a, up).unwrap().unwrap(), Length::units(rat_int(1)));
        // symmetry and triangle inequality on all node pairs
        let n = x.node_count();
        let all: Vec<Vec<Option<Length>>> = (0..n).map(|i| x.distances_from(i)).collect();
        for i in 0..n {
            for j in 0..n {
                assert_eq!(all[i][j], all[j][i]);
                for k in 0..n {
                    if let (Some(ij), Some(ik), Some(kj)) = (&all[i][j], &all[i][k], &all[k][j]) {
                        assert!(ij.to_rat() <= (ik + kj).to_rat());
                    }
                }
            }
        }
    }

    #[test]
    fn collapse_laws() {
        let (s, covers) = circle_covers();
        let x = CoarseningSpace::build(&s, &covers, 0).unwrap();
        let n = x.node_count();
        // fixed at or above the target level
        for id in 0..n {
            let l = x.projection(id).unwrap();
            for t in 1..=l {
                assert_eq!(x.collapse(t, id).unwrap(), id);
            }
        }
        // semigroup: collapsing low then high equals collapsing high
        for t in 1..=3u32 {
            for tp in (t + 1)..=3 {
                for id in 0..n {
                    let low_then_high = x.collapse(tp, x.collapse(t, id).unwrap()).unwrap();
                    assert_eq!(low_then_high, x.collapse(tp, id).unwrap());
                }
            }
        }
        // level arithmetic
        for t in 1..=3u32 {
            for id in 0..n {
                let img = x.collapse(t, id).unwrap();
                assert_eq!(
                    x.projection(img).unwrap(),
                    x.projection(id).unwrap().max(t)
                );
            }
        }
    }

    #[test]
    fn collapse_contracts_graph_distances_at_depth_zero() {
        let (s, covers) = circle_covers();
        let x = CoarseningSpace::build(&s, &covers, 0).unwrap();
        let n = x.node_count();
        let all: Vec<Vec<Option<Length>>> = (0..n).map(|i| x.distances_from(i)).collect();
        for t in 1..=3u32 {
            let map = x.collapse_map(t).unwrap();
            for a in 0..n {
                for b in 0..n {
                    if let (Some(before), Some(after)) = (&all[a][b], &all[map[a]][map[b]]) {
                        assert!(
                            after.to_rat() <= before.to_rat(),
                            "t={t} {a}->{b}: {after:?} > {before:?}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn collapse_to_point_levels() {
        let (s, covers) = circle_covers();
        let x = CoarseningSpace::build(&s, &covers, 0).unwrap();
        let a = x.nerve_vertex_node(1, 0).unwrap();
        assert_eq!(x.collapse_to_point_level(&[a]).unwrap(), Some(1));
        // two arc vertices merged by the first connecting map
        let b = x.nerve_vertex_node(1, 1).unwrap();
        assert_eq!(x.collapse_to_point_level(&[a, b]).unwrap(), Some(2));
        // vertices that never merge within the truncation
        let c = x.nerve_vertex_node(3, 0).unwrap();
        let d = x.nerve_vertex_node(3, 1).unwrap();
        assert_eq!(x.collapse_to_point_level(&[c, d]).unwrap(), None);
    }

    #[test]
    fn swindle_map_one_is_identity() {
        let (s, covers) = circle_covers();
        let x = CoarseningSpace::build(&s, &covers, 0).unwrap();
        let base = x.nerve_vertex_node(1, 0).unwrap();
        let maps = swindle_sequence(&x, base, 3).unwrap();
        let identity: Vec<NodeId> = (0..x.node_count()).collect();
        assert_eq!(maps[0], identity); // ln 1 = 0
    }

    #[test]
    fn swindle_far_points_fixed_near_points_pushed() {
        let s = FilteredMetricSpace::int_interval(-60, 60);
        let ac = build_anticech(&s, &[rat_int(1), rat_int(4), rat_int(16)]).unwrap();
        let x = CoarseningSpace::build(&s, &ac.covers, 0).unwrap();
        let base = x.nerve_vertex_node(1, 0).unwrap();
        let k = 5usize;
        let maps = swindle_sequence(&x, base, k).unwrap();
        let dist = x.distances_from(base);
        let logk = (k as f64).ln();
        for id in 0..x.node_count() {
            if let Some(d) = &dist[id] {
                if d.to_f64() >= logk {
                    assert_eq!(maps[k - 1][id], id, "far node moved");
                }
            }
        }
        // the base itself climbs ceil(ln k) levels, capped at the truncation
        let expected_level = (logk.ceil() as u32).clamp(1, x.level_count());
        assert_eq!(x.projection(maps[k - 1][base]).unwrap(), expected_level);
    }

    #[test]
    fn swindle_report_tables() {
        let (s, covers) = circle_covers();
        let x = CoarseningSpace::build(&s, &covers, 0).unwrap();
        let base = x.nerve_vertex_node(1, 0).unwrap();
        let maps = swindle_sequence(&x, base, 8).unwrap();
        let radii = vec![rat_int(1), rat_int(3)];
        let rep = check_swindle_hypotheses(&x, &maps, base, &radii).unwrap();
        assert_eq!(rep.escape.len(), 2);
        assert_eq!(rep.control.len(), rep.control.len());
        // identity-only sequence: step bound zero, never escapes
        let id_maps = vec![(0..x.node_count()).collect::<Vec<_>>(); 3];
        let rep = check_swindle_hypotheses(&x, &id_maps, base, &radii).unwrap();
        assert_eq!(rep.step_bound, "0");
        for e in &rep.escape {
            assert!(!e.escapes_within_truncation);
        }
        // a constructed jump shows up in the step bound
        let mut jump = id_maps.clone();
        let far = x.nerve_vertex_node(3, 1).unwrap();
        jump[1][base] = far;
        let rep = check_swindle_hypotheses(&x, &jump, base, &radii).unwrap();
        assert_ne!(rep.step_bound, "0");
        assert!(rep.step_witness.is_some());
    }

    #[test]
    fn depth_one_subdivision_nodes() {
        let (s, covers) = circle_covers();
        let x = CoarseningSpace::build(&s, &covers, 1).unwrap();
        // level 1: triangle boundary subdivides 3 edges -> 6 edges, 6 vertices
        assert_eq!(x.level_count(), 3);
        assert!(x.node_count() > 7);
        // consistency checks ran at construction; spot-check a vertex pair
        let d = x.level_restricted_distance(1, 0, 1).unwrap().unwrap();
        assert_eq!(d, Length::quarters(rat_int(1)));
        // collapse still satisfies the semigroup law on every node
        for t in 1..=3u32 {
            for tp in (t + 1)..=3 {
                for id in 0..x.node_count() {
                    assert_eq!(
                        x.collapse(tp, x.collapse(t, id).unwrap()).unwrap(),
                        x.collapse(tp, id).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn repr_round_trip_rebuilds() {
        let (s, covers) = circle_covers();
        let x = CoarseningSpace::build(&s, &covers, 0).unwrap();
        let repr = CoarseningRepr::from_space(&x);
        let json = serde_json::to_string(&repr).unwrap();
        let back: CoarseningRepr = serde_json::from_str(&json).unwrap();
        let y = back.into_space().unwrap();
        assert_eq!(x.node_count(), y.node_count());
        assert_eq!(x.level_count(), y.level_count());
        for id in 0..x.node_count() {
            assert_eq!(x.node_label(id), y.node_label(id));
        }
    }

    #[test]
    fn metric_space_view() {
        let (s, covers) = circle_covers();
        let x = CoarseningSpace::build(&s, &covers, 0).unwrap();
        let ms = x.as_metric_space().unwrap();
        assert_eq!(ms.len(), x.node_count());
        assert_eq!(ms.filtration().len(), 3);
        // distances agree with the graph metric under the substitution
        let a = x.nerve_vertex_node(1, 0).unwrap();
        let b = x.nerve_vertex_node(1, 1).unwrap();
        assert_eq!(
            ms.d(a, b),
            &x.graph_distance(a, b).unwrap().unwrap().to_rat()
        );
    }

    /// Drops a partial-space node back into the base space: collapse to the
    /// nerve level, then project the nerve vertex to one of its own points.
    fn drop_map(
        x: &CoarseningSpace,
        base: &FilteredMetricSpace,
        cover: &Cover,
        level: u32,
    ) -> Vec<usize> {
        let eta = crate::complexes::nerve_projection(base, cover, crate::complexes::TieBreak::LeastId);
        (0..x.node_count())
            .map(|id| {
                let up = x.collapse(level, id).unwrap();
                let p = x.point(up).unwrap();
                eta[p.vertex as usize]
            })
            .collect()
    }

    #[test]
    fn drop_map_control_stays_within_the_stated_bound() {
        // zeta = eta after collapsing to level i: pairs within 2j in the
        // partial space land within (4j/pi + 3) * diam(U_{i+j}) in the base
        let w = FilteredMetricSpace::int_interval(-30, 30);
        let ac = build_anticech(&w, &[rat_int(1), rat_int(4)]).unwrap();
        let x = CoarseningSpace::build(&w, &ac.covers, 0).unwrap();
        let i = 1u32;
        let j = 1u32;
        let zeta = drop_map(&x, &w, &ac.covers[(i - 1) as usize], i);
        let diam_next = crate::spaces::cover_diameter(&w, &ac.covers[(i + j - 1) as usize]).unwrap();
        let pi = pi_over_two() * rat_int(2);
        let bound = (rat_int(4 * j as i64) / pi + rat_int(3)) * &diam_next;
        let part = x.partial_space(i).unwrap();
        for &a in &part {
            for &b in &part {
                let d = x.graph_distance(a, b).unwrap().unwrap();
                if d.to_rat() < rat_int(2 * j as i64) {
                    let img = w.d(zeta[a], zeta[b]);
                    assert!(
                        img <= &bound,
                        "pair ({a},{b}): image distance {img} exceeds bound {bound}"
                    );
                }
            }
        }
    }

    #[test]
    fn drop_map_properness_profile_is_finite() {
        let w = FilteredMetricSpace::int_interval(-20, 20);
        let ac = build_anticech(&w, &[rat_int(1), rat_int(4)]).unwrap();
        let x = CoarseningSpace::build(&w, &ac.covers, 0).unwrap();
        let ms = x.as_metric_space().unwrap();
        let zeta = drop_map(&x, &w, &ac.covers[0], 1);
        let f = crate::coarse::PointMap::new(&ms, &w, zeta).unwrap();
        let profile = crate::coarse::properness_profile(&ms, &w, &f).unwrap();
        assert!(!profile.is_empty());
        // preimage diameters are finite and nondecreasing in the radius
        for pair in profile.windows(2) {
            assert!(pair[0].1 <= pair[1].1);
        }
    }

    #[test]
    fn assignment_and_drop_compose_close_to_identities() {
        let w = FilteredMetricSpace::int_interval(-30, 30);
        let ac = build_anticech(&w, &[rat_int(1), rat_int(4)]).unwrap();
        let x = CoarseningSpace::build(&w, &ac.covers, 0).unwrap();
        let i = 1u32;
        let cover = &ac.covers[(i - 1) as usize];
        let zeta = drop_map(&x, &w, cover, i);
        // psi: each base point to the node of a level-i member containing it
        let psi: Vec<NodeId> = crate::spaces::vertex_assignment(&w, cover)
            .unwrap()
            .into_iter()
            .map(|member| x.nerve_vertex_node(i, member as u32).unwrap())
            .collect();
        // zeta(psi(w)) stays within one member diameter of w
        let diam = crate::spaces::cover_diameter(&w, cover).unwrap();
        for p in 0..w.len() {
            assert!(w.d(zeta[psi[p]], p) <= &diam);
        }
        // psi(zeta(x)) stays within pi + i of x in the partial space
        let pi = pi_over_two() * rat_int(2);
        let bound = pi + rat_int(i as i64);
        for &node in &x.partial_space(i).unwrap() {
            let back = psi[zeta[node]];
            let d = x.graph_distance(node, back).unwrap().unwrap();
            assert!(d.to_rat() <= bound, "node {node}: {d:?} exceeds pi + {i}");
        }
    }
}
