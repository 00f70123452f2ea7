//! Binary decomposition trees over the second barycentric subdivision: the
//! canonical star/skeleton/residual-graph construction, label-law
//! verification, and per-node admissibility reports (excisiveness, relative
//! connectedness, distortion, dimensions, and star-family separations).
//!
//! Residual graphs split into vertex stars and edge segments on two further
//! subdivisions of the 1-skeleton (quarter points), so the two families meet
//! in a 0-dimensional set and each family is positively separated.

use std::collections::BTreeMap;

use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::arith::{rat, rat_int, rat_to_string, Rat};
use crate::coarse::{classify_c0, excisive_profile, ClassifyOutcome, CoarseError, ExcisiveEntry};
use crate::complexes::{
    distortion, relatively_connected, stars_decomposition, subdivision_tower, ComplexError,
    Distortion, SimplicialComplex, Simplex, SphericalComplex, SubComplex,
};
use crate::coarse::Entourage;
use crate::spaces::{FilteredMetricSpace, SpaceError};
use crate::FailureClass;

#[derive(Debug, Error)]
pub enum DecompositionError {
    #[error("complex must be connected for admissibility reports")]
    Disconnected,
    #[error("tree is malformed: {0}")]
    Malformed(String),
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    Coarse(#[from] CoarseError),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

impl DecompositionError {
    pub fn class(&self) -> FailureClass {
        match self {
            DecompositionError::Complex(e) => e.class(),
            DecompositionError::Coarse(e) => e.class(),
            DecompositionError::Space(e) => e.class(),
            DecompositionError::Malformed(_) => FailureClass::Schema,
            DecompositionError::Disconnected => FailureClass::Precondition,
        }
    }
}

/// Which complex a label's vertex indices refer to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelCoords {
    /// The second subdivision of the input.
    Base,
    /// The quarter-point refinement of the base 1-skeleton.
    Refined,
}

#[derive(Clone, Debug)]
pub struct TreeNode {
    pub name: String,
    pub coords: LabelCoords,
    pub label: SubComplex,
    pub children: Option<Box<(TreeNode, TreeNode)>>,
}

impl TreeNode {
    fn leaf(name: impl Into<String>, coords: LabelCoords, label: SubComplex) -> Self {
        TreeNode { name: name.into(), coords, label, children: None }
    }

    fn fork(
        name: impl Into<String>,
        coords: LabelCoords,
        label: SubComplex,
        left: TreeNode,
        right: TreeNode,
    ) -> Self {
        TreeNode { name: name.into(), coords, label, children: Some(Box::new((left, right))) }
    }

    pub fn walk<'a>(&'a self, visit: &mut impl FnMut(&'a TreeNode)) {
        visit(self);
        if let Some(children) = &self.children {
            children.0.walk(visit);
            children.1.walk(visit);
        }
    }
}

/// One leaf's family of pieces (stars or segments) for separation reporting.
#[derive(Clone, Debug)]
pub struct LeafFamily {
    pub coords: LabelCoords,
    pub pieces: Vec<SubComplex>,
}

pub struct DecompositionTree {
    /// Second subdivision everything lives in.
    pub base: SimplicialComplex,
    /// Two further subdivisions of the base 1-skeleton (quarter points).
    pub refined: SimplicialComplex,
    /// Base vertex -> its vertex in the refined skeleton.
    base_vertex_in_refined: Vec<u32>,
    /// Base edge -> the 5-vertex quarter path [u, a, m, b, v] in the refined
    /// skeleton.
    quarter_path: BTreeMap<(u32, u32), [u32; 5]>,
    pub root: TreeNode,
    pub families: BTreeMap<String, LeafFamily>,
}

impl DecompositionTree {
    /// Realizes a base-coordinate graph label in refined coordinates.
    pub fn refine_graph_label(&self, label: &SubComplex) -> SubComplex {
        let mut simplices: Vec<Simplex> = Vec::new();
        for s in label.simplices() {
            match s.len() {
                1 => simplices.push(vec![self.base_vertex_in_refined[s[0] as usize]]),
                2 => {
                    let path = self.quarter_path[&(s[0], s[1])];
                    for w in path.windows(2) {
                        simplices.push(vec![w[0], w[1]]);
                    }
                }
                _ => {}
            }
        }
        SubComplex::from_simplices(simplices)
    }
}

/// Builds the canonical tree: the root is the whole second subdivision, each
/// stage peels off the stars about the barycenters of one original dimension
/// together with the 1-skeleton, and residual graphs split into vertex stars
/// and middle segments at quarter points.
pub fn build_canonical_tree(k: &SimplicialComplex) -> Result<DecompositionTree, DecompositionError> {
    let stars = stars_decomposition(k)?;
    let base = stars.base.clone();
    // quarter-point refinement of the base 1-skeleton
    let skeleton_complex = {
        let edges: Vec<Simplex> = base.edges().into_iter().map(|(a, b)| vec![a, b]).collect();
        SimplicialComplex::from_maximal(base.labels().to_vec(), edges)?
    };
    let tower = subdivision_tower(&skeleton_complex, 2)?;
    let refined = tower[1].complex.clone();
    let mut base_vertex_in_refined = Vec::with_capacity(base.vertex_count());
    for v in 0..base.vertex_count() as u32 {
        let v1 = tower[0].vertex_for[&vec![v]];
        base_vertex_in_refined.push(tower[1].vertex_for[&vec![v1]]);
    }
    let mut quarter_path = BTreeMap::new();
    for (u, v) in base.edges() {
        let u1 = tower[0].vertex_for[&vec![u]];
        let v1 = tower[0].vertex_for[&vec![v]];
        let m1 = tower[0].vertex_for[&vec![u, v]];
        let u2 = tower[1].vertex_for[&vec![u1]];
        let v2 = tower[1].vertex_for[&vec![v1]];
        let m2 = tower[1].vertex_for[&vec![m1]];
        let a = tower[1].vertex_for[&sorted2(u1, m1)];
        let b = tower[1].vertex_for[&sorted2(m1, v1)];
        quarter_path.insert((u, v), [u2, a, m2, b, v2]);
    }

    let mut families = BTreeMap::new();
    let m = k.dim();
    let one_skeleton = base.skeleton(1);
    let mut stage: Option<TreeNode> = None;
    for dim in 0..=m {
        let layer = &stars.layers[dim];
        families.insert(
            format!("stars{dim}"),
            LeafFamily { coords: LabelCoords::Base, pieces: layer.stars.clone() },
        );
        let y_leaf = TreeNode::leaf(format!("stars{dim}"), LabelCoords::Base, layer.union.clone());
        // edges of the base not contained in this layer, closed
        let residual_edges: Vec<Simplex> = base
            .simplices()
            .iter()
            .filter(|s| s.len() == 2 && !layer.union.contains(s))
            .cloned()
            .collect();
        let with_skeleton_label = layer.union.union(&one_skeleton);
        let node = if residual_edges.is_empty() {
            // everything already inside the stars: no residual fork
            y_leaf
        } else {
            let g_label = SubComplex::from_simplices(residual_edges.clone());
            // vertex stars: outer quarter edges about each residual vertex
            let mut star_of: BTreeMap<u32, Vec<Simplex>> = BTreeMap::new();
            for e in &residual_edges {
                let path = quarter_path[&(e[0], e[1])];
                star_of.entry(e[0]).or_default().push(vec![path[0], path[1]]);
                star_of.entry(e[1]).or_default().push(vec![path[3], path[4]]);
            }
            let v_pieces: Vec<SubComplex> =
                star_of.values().map(|s| SubComplex::from_simplices(s.clone())).collect();
            let mut v_label = SubComplex::empty();
            for p in &v_pieces {
                v_label = v_label.union(p);
            }
            // middle segments per residual edge
            let e_pieces: Vec<SubComplex> = residual_edges
                .iter()
                .map(|e| {
                    let path = quarter_path[&(e[0], e[1])];
                    SubComplex::from_simplices(vec![
                        vec![path[1], path[2]],
                        vec![path[2], path[3]],
                    ])
                })
                .collect();
            let mut e_label = SubComplex::empty();
            for p in &e_pieces {
                e_label = e_label.union(p);
            }
            families.insert(
                format!("residual_vertex_stars{dim}"),
                LeafFamily { coords: LabelCoords::Refined, pieces: v_pieces },
            );
            families.insert(
                format!("residual_edge_segments{dim}"),
                LeafFamily { coords: LabelCoords::Refined, pieces: e_pieces },
            );
            let g_fork = TreeNode::fork(
                format!("residual_graph{dim}"),
                LabelCoords::Base,
                g_label,
                TreeNode::leaf(
                    format!("residual_vertex_stars{dim}"),
                    LabelCoords::Refined,
                    v_label,
                ),
                TreeNode::leaf(
                    format!("residual_edge_segments{dim}"),
                    LabelCoords::Refined,
                    e_label,
                ),
            );
            TreeNode::fork(
                format!("stars_with_skeleton{dim}"),
                LabelCoords::Base,
                with_skeleton_label,
                y_leaf,
                g_fork,
            )
        };
        stage = Some(match stage {
            None => node,
            Some(prev) => {
                let label = prev.label.union(&node.label);
                TreeNode::fork(format!("stage{dim}"), LabelCoords::Base, label, prev, node)
            }
        });
    }
    let root = stage.expect("at least one layer");
    Ok(DecompositionTree {
        base,
        refined,
        base_vertex_in_refined,
        quarter_path,
        root,
        families,
    })
}

fn sorted2(a: u32, b: u32) -> Simplex {
    if a < b {
        vec![a, b]
    } else {
        vec![b, a]
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LabelCheck {
    pub pass: bool,
    pub witness: Option<String>,
}

/// Checks the two label laws set-exactly: the root carries the whole base
/// complex, and every fork carries the union of its successors (residual
/// graph labels are refined to quarter coordinates before comparing against
/// their star/segment children).
pub fn verify_tree_labels(tree: &DecompositionTree) -> LabelCheck {
    if tree.root.label != tree.base.full_subcomplex() {
        return LabelCheck { pass: false, witness: Some(tree.root.name.clone()) };
    }
    let mut witness = None;
    let mut check = |node: &TreeNode| {
        if witness.is_some() {
            return;
        }
        let Some(children) = &node.children else { return };
        let (l, r) = (&children.0, &children.1);
        let ok = match (node.coords, l.coords, r.coords) {
            (LabelCoords::Base, LabelCoords::Base, LabelCoords::Base) => {
                l.label.union(&r.label) == node.label
            }
            (LabelCoords::Base, LabelCoords::Refined, LabelCoords::Refined) => {
                l.label.union(&r.label) == tree.refine_graph_label(&node.label)
            }
            (LabelCoords::Refined, LabelCoords::Refined, LabelCoords::Refined) => {
                l.label.union(&r.label) == node.label
            }
            _ => false,
        };
        if !ok {
            witness = Some(node.name.clone());
        }
    };
    tree.root.walk(&mut check);
    LabelCheck { pass: witness.is_none(), witness }
}

fn distortion_string(d: &Distortion) -> String {
    match d {
        Distortion::Finite(r) => rat_to_string(r),
        Distortion::Infinite => "inf".into(),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ForkReport {
    pub name: String,
    pub excisive: Vec<ExcisiveEntry>,
    pub intersection_dim: Option<usize>,
    pub left_relatively_connected: bool,
    pub right_relatively_connected: bool,
    pub intersection_relatively_connected: bool,
    pub left_distortion: String,
    pub right_distortion: String,
    pub intersection_distortion: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LeafClass {
    Finite,
    SeparatedFamily,
}

#[derive(Clone, Debug, Serialize)]
pub struct LeafReport {
    pub name: String,
    pub class: LeafClass,
    pub piece_count: usize,
    /// Minimal distance between distinct pieces in quarter turns; `None`
    /// for fewer than two pieces (infinite separation).
    pub min_separation_quarters: Option<String>,
    pub max_piece_diameter_quarters: String,
    /// Within-piece displacement pairs classified against the decay
    /// schedule, when one is supplied.
    pub displacement_control: Option<ClassifyOutcome>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AdmissibilityReport {
    pub labels: LabelCheck,
    pub forks: Vec<ForkReport>,
    pub leaves: Vec<LeafReport>,
}

/// Per-node admissibility data. Distances are skeleton hop counts in quarter
/// turns: base hops count pi/2 steps, refined hops count pi/8 steps (scaled
/// to quarter turns). Scales for the excisive profiles are in quarter turns.
/// The report states checkable premises only.
pub fn admissibility_report(
    tree: &DecompositionTree,
    scales: &[Rat],
    c0_schedule: Option<&[Rat]>,
) -> Result<AdmissibilityReport, DecompositionError> {
    let base_comps = tree.base.components();
    if base_comps.iter().any(|&c| c != 0) {
        return Err(DecompositionError::Disconnected);
    }
    let labels = verify_tree_labels(tree);
    let base_hops = all_pairs_hops(&tree.base);
    let refined_hops = all_pairs_hops(&tree.refined);
    let sc_base = SphericalComplex::new(tree.base.clone(), Rat::zero());
    let sc_refined = SphericalComplex::new(tree.refined.clone(), Rat::zero());
    let quarter = rat_int(1);
    let eighth = rat(1, 4);

    let mut forks = Vec::new();
    let mut leaves = Vec::new();
    let mut poison: Option<DecompositionError> = None;
    let mut visit = |node: &TreeNode| {
        if poison.is_some() {
            return;
        }
        let result = (|| -> Result<(), DecompositionError> {
            match &node.children {
                Some(children) => {
                    let (l, r) = (&children.0, &children.1);
                    // realize both children in common coordinates
                    let (left, right, hops, unit, sc) = match (l.coords, r.coords) {
                        (LabelCoords::Base, LabelCoords::Base) => {
                            (l.label.clone(), r.label.clone(), &base_hops, &quarter, &sc_base)
                        }
                        _ => {
                            let lift = |n: &TreeNode| match n.coords {
                                LabelCoords::Base => tree.refine_graph_label(&n.label),
                                LabelCoords::Refined => n.label.clone(),
                            };
                            (lift(l), lift(r), &refined_hops, &eighth, &sc_refined)
                        }
                    };
                    let verts: Vec<u32> = {
                        let mut v = left.vertices();
                        v.extend(right.vertices());
                        v.sort_unstable();
                        v.dedup();
                        v
                    };
                    let sub = subspace(&verts, hops, unit)?;
                    let pos = |set: &SubComplex| -> Vec<usize> {
                        set.vertices()
                            .iter()
                            .map(|v| verts.binary_search(v).expect("vertex in fork"))
                            .collect()
                    };
                    let excisive = excisive_profile(&sub, &pos(&left), &pos(&right), scales)?;
                    let inter = left.intersection(&right);
                    forks.push(ForkReport {
                        name: node.name.clone(),
                        excisive,
                        intersection_dim: inter.dim(),
                        left_relatively_connected: relatively_connected(sc, &left),
                        right_relatively_connected: relatively_connected(sc, &right),
                        intersection_relatively_connected: relatively_connected(sc, &inter),
                        left_distortion: distortion_string(&distortion(sc, &left)?),
                        right_distortion: distortion_string(&distortion(sc, &right)?),
                        intersection_distortion: if inter.is_empty() {
                            None
                        } else {
                            Some(distortion_string(&distortion(sc, &inter)?))
                        },
                    });
                }
                None => {
                    let family = tree.families.get(&node.name).ok_or_else(|| {
                        DecompositionError::Malformed(format!("leaf {} has no family", node.name))
                    })?;
                    let (hops, unit) = match family.coords {
                        LabelCoords::Base => (&base_hops, &quarter),
                        LabelCoords::Refined => (&refined_hops, &eighth),
                    };
                    let mut min_sep: Option<Rat> = None;
                    for i in 0..family.pieces.len() {
                        let vi = family.pieces[i].vertices();
                        for j in (i + 1)..family.pieces.len() {
                            for &a in &vi {
                                for &b in &family.pieces[j].vertices() {
                                    if let Some(h) = hop(hops, a, b) {
                                        let d = rat_int(h as i64) * unit;
                                        if min_sep.as_ref().is_none_or(|m| d < *m) {
                                            min_sep = Some(d);
                                        }
                                    }
                                }
                            }
                        }
                    }
                    let mut max_diam = Rat::zero();
                    for piece in &family.pieces {
                        let vs = piece.vertices();
                        for &a in &vs {
                            for &b in &vs {
                                if let Some(h) = hop(hops, a, b) {
                                    let d = rat_int(h as i64) * unit;
                                    if d > max_diam {
                                        max_diam = d;
                                    }
                                }
                            }
                        }
                    }
                    let displacement_control = match c0_schedule {
                        None => None,
                        Some(schedule) => {
                            Some(displacement_classification(tree, family, hops, unit, schedule)?)
                        }
                    };
                    leaves.push(LeafReport {
                        name: node.name.clone(),
                        class: if family.pieces.len() <= 1 {
                            LeafClass::Finite
                        } else {
                            LeafClass::SeparatedFamily
                        },
                        piece_count: family.pieces.len(),
                        min_separation_quarters: min_sep.as_ref().map(rat_to_string),
                        max_piece_diameter_quarters: rat_to_string(&max_diam),
                        displacement_control,
                    });
                }
            }
            Ok(())
        })();
        if let Err(e) = result {
            poison = Some(e);
        }
    };
    tree.root.walk(&mut visit);
    if let Some(e) = poison {
        return Err(e);
    }
    Ok(AdmissibilityReport { labels, forks, leaves })
}

/// Classifies the within-piece displacement pairs (the contraction of each
/// piece onto itself) against a decay schedule over a radial filtration.
fn displacement_classification(
    tree: &DecompositionTree,
    family: &LeafFamily,
    hops: &[Vec<u32>],
    unit: &Rat,
    schedule: &[Rat],
) -> Result<ClassifyOutcome, DecompositionError> {
    let n = match family.coords {
        LabelCoords::Base => tree.base.vertex_count(),
        LabelCoords::Refined => tree.refined.vertex_count(),
    };
    let all: Vec<u32> = (0..n as u32).collect();
    let space = subspace(&all, hops, unit)?;
    // radial filtration from vertex 0 with one stage per schedule entry
    let from0 = &hops[0];
    let mut radii: Vec<u32> = from0.iter().copied().filter(|&h| h != UNREACHABLE).collect();
    radii.sort_unstable();
    radii.dedup();
    let stages: Vec<Vec<usize>> = (1..=schedule.len())
        .map(|i| {
            if i == schedule.len() {
                (0..n).collect()
            } else {
                let cut = radii[(radii.len() - 1) * i / schedule.len()];
                (0..n).filter(|&v| from0[v] != UNREACHABLE && from0[v] <= cut).collect()
            }
        })
        .collect();
    let space = space.with_filtration(stages)?;
    let mut pairs = Vec::new();
    for piece in &family.pieces {
        let vs = piece.vertices();
        for &a in &vs {
            for &b in &vs {
                pairs.push((a as usize, b as usize));
            }
        }
    }
    let e = Entourage::new(&space, pairs)?;
    Ok(classify_c0(&space, &e, schedule)?)
}

const UNREACHABLE: u32 = u32::MAX;

/// Compact all-pairs hop table; `UNREACHABLE` marks disconnected pairs.
fn all_pairs_hops(k: &SimplicialComplex) -> Vec<Vec<u32>> {
    (0..k.vertex_count() as u32)
        .map(|v| {
            k.bfs_hops(v)
                .into_iter()
                .map(|h| h.map_or(UNREACHABLE, |x| x as u32))
                .collect()
        })
        .collect()
}

fn hop(hops: &[Vec<u32>], a: u32, b: u32) -> Option<u64> {
    let h = hops[a as usize][b as usize];
    (h != UNREACHABLE).then_some(h as u64)
}

/// Vertex subset with the inherited hop metric scaled by `unit` quarter
/// turns.
fn subspace(
    verts: &[u32],
    hops: &[Vec<u32>],
    unit: &Rat,
) -> Result<FilteredMetricSpace, DecompositionError> {
    let ids: Vec<String> = verts.iter().map(|v| format!("v{v}")).collect();
    let mut table = vec![vec![Rat::zero(); verts.len()]; verts.len()];
    for (i, &a) in verts.iter().enumerate() {
        for (j, &b) in verts.iter().enumerate() {
            if i == j {
                continue;
            }
            match hop(hops, a, b) {
                Some(h) => table[i][j] = rat_int(h as i64) * unit,
                None => return Err(DecompositionError::Disconnected),
            }
        }
    }
    Ok(FilteredMetricSpace::from_matrix(ids, |i, j| table[i][j].clone())?)
}
