//! Input schemas for spaces, covers, entourages, point maps, operators, and
//! homs. Output formats live with their producing modules.

use std::collections::BTreeMap;

use serde::Deserialize;

use crate::arith::{rat_to_string, RatRepr};
use crate::coarse::{CoarseError, Entourage, LevelAssignment, PointMap};
use crate::kgroups::{FreeAbGroup, GroupHom, IntMatrix, KGroupError};
use crate::roe::{FiniteOperator, RoeError};
use crate::spaces::{Cover, FilteredMetricSpace, SpaceError};

#[derive(Deserialize)]
pub struct SpaceRepr {
    pub points: Vec<String>,
    pub metric: MetricRepr,
    #[serde(default)]
    pub filtration: Option<Vec<Vec<String>>>,
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MetricRepr {
    Matrix { d: Vec<Vec<RatRepr>> },
    Graph { edges: Vec<(usize, usize, RatRepr)> },
}

impl SpaceRepr {
    pub fn into_space(self) -> Result<FilteredMetricSpace, SpaceError> {
        let n = self.points.len();
        let space = match self.metric {
            MetricRepr::Matrix { d } => {
                if d.len() != n || d.iter().any(|row| row.len() != n) {
                    return Err(SpaceError::Malformed(format!(
                        "matrix must be {n}x{n} to match the point list"
                    )));
                }
                let mut table = Vec::with_capacity(n);
                for row in d {
                    let mut out = Vec::with_capacity(n);
                    for v in row {
                        out.push(v.into_rat().map_err(SpaceError::Malformed)?);
                    }
                    table.push(out);
                }
                for (i, row) in table.iter().enumerate() {
                    for (j, value) in row.iter().enumerate() {
                        if value != &table[j][i] {
                            return Err(SpaceError::MetricViolation(format!(
                                "matrix not symmetric at ({i}, {j})"
                            )));
                        }
                    }
                }
                FilteredMetricSpace::from_matrix(self.points, |i, j| table[i][j].clone())?
            }
            MetricRepr::Graph { edges } => {
                let mut out = Vec::with_capacity(edges.len());
                for (a, b, w) in edges {
                    out.push((a, b, w.into_rat().map_err(SpaceError::Malformed)?));
                }
                FilteredMetricSpace::from_graph(self.points, &out)?
            }
        };
        match self.filtration {
            None => Ok(space),
            Some(stages) => {
                let mut resolved = Vec::with_capacity(stages.len());
                for stage in stages {
                    let mut indices = Vec::with_capacity(stage.len());
                    for id in stage {
                        indices.push(space.index_of(&id)?);
                    }
                    resolved.push(indices);
                }
                space.with_filtration(resolved)
            }
        }
    }
}

#[derive(Deserialize)]
pub struct CoverRepr {
    pub members: Vec<Vec<String>>,
}

impl CoverRepr {
    pub fn into_cover(self, space: &FilteredMetricSpace) -> Result<Cover, SpaceError> {
        let mut members = Vec::with_capacity(self.members.len());
        for m in self.members {
            let mut out = Vec::with_capacity(m.len());
            for id in m {
                out.push(space.index_of(&id)?);
            }
            members.push(out);
        }
        Cover::new(space, members)
    }
}

#[derive(Deserialize)]
pub struct EntourageRepr {
    pub pairs: Vec<(String, String)>,
}

impl EntourageRepr {
    pub fn into_entourage(self, space: &FilteredMetricSpace) -> Result<Entourage, CoarseError> {
        let mut pairs = Vec::with_capacity(self.pairs.len());
        for (a, b) in self.pairs {
            pairs.push((space.index_of(&a)?, space.index_of(&b)?));
        }
        Entourage::new(space, pairs)
    }
}

#[derive(Deserialize)]
pub struct PointMapRepr {
    pub values: BTreeMap<String, String>,
}

impl PointMapRepr {
    pub fn into_map(
        self,
        source: &FilteredMetricSpace,
        target: &FilteredMetricSpace,
    ) -> Result<PointMap, CoarseError> {
        let mut values = vec![usize::MAX; source.len()];
        for (from, to) in self.values {
            values[source.index_of(&from)?] = target.index_of(&to)?;
        }
        if values.contains(&usize::MAX) {
            return Err(CoarseError::Space(SpaceError::Malformed(
                "map must cover every point".into(),
            )));
        }
        PointMap::new(source, target, values)
    }
}

#[derive(Deserialize)]
pub struct LevelsRepr {
    pub levels: BTreeMap<String, u32>,
}

impl LevelsRepr {
    pub fn into_levels(self, space: &FilteredMetricSpace) -> Result<LevelAssignment, CoarseError> {
        let mut values = vec![0u32; space.len()];
        for (id, level) in self.levels {
            values[space.index_of(&id)?] = level;
        }
        LevelAssignment::new(space, values)
    }
}

/// Operator entries as `[row_point, row_channel, col_point, col_channel,
/// value]` rows.
#[derive(Deserialize)]
pub struct OperatorRepr {
    pub channels: usize,
    pub entries: Vec<(String, u32, String, u32, RatRepr)>,
}

impl OperatorRepr {
    pub fn into_operator(self, space: &FilteredMetricSpace) -> Result<FiniteOperator, RoeError> {
        let mut t = FiniteOperator::square(space, self.channels);
        for (y, j, x, i, v) in self.entries {
            let yp = space.index_of(&y).map_err(CoarseError::from)? as u32;
            let xp = space.index_of(&x).map_err(CoarseError::from)? as u32;
            let value = v
                .into_rat()
                .map_err(|e| CoarseError::Space(SpaceError::Malformed(e)))?;
            t.set((yp, j), (xp, i), value)?;
        }
        Ok(t)
    }

    pub fn from_operator(space: &FilteredMetricSpace, t: &FiniteOperator) -> OperatorOut {
        OperatorOut {
            channels: t.tgt_channels,
            entries: t
                .entries()
                .map(|(((rp, rc), (cp, cc)), v)| {
                    (
                        space.point_ids()[*rp as usize].clone(),
                        *rc,
                        space.point_ids()[*cp as usize].clone(),
                        *cc,
                        rat_to_string(v),
                    )
                })
                .collect(),
        }
    }
}

#[derive(serde::Serialize, Deserialize)]
pub struct OperatorOut {
    pub channels: usize,
    pub entries: Vec<(String, u32, String, u32, String)>,
}

#[derive(Deserialize)]
pub struct HomRepr {
    pub source: Vec<String>,
    pub target: Vec<String>,
    pub matrix: Vec<Vec<i64>>,
}

impl HomRepr {
    pub fn into_hom(self) -> Result<GroupHom, KGroupError> {
        let source = FreeAbGroup::new(self.source)?;
        let target = FreeAbGroup::new(self.target)?;
        if self.matrix.len() != target.rank()
            || self.matrix.iter().any(|r| r.len() != source.rank())
        {
            return Err(KGroupError::Shape("matrix does not match basis ranks".into()));
        }
        GroupHom::new(source, target, IntMatrix::from_rows(self.matrix))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rat_int;

    #[test]
    fn space_from_matrix_json() {
        let json = r#"{
            "points": ["a", "b", "c"],
            "metric": {"kind": "matrix", "d": [[0, 1, 2], [1, 0, 1], [2, 1, 0]]},
            "filtration": [["a"], ["a", "b", "c"]]
        }"#;
        let repr: SpaceRepr = serde_json::from_str(json).unwrap();
        let space = repr.into_space().unwrap();
        assert_eq!(space.len(), 3);
        assert_eq!(space.d(0, 2), &rat_int(2));
        assert_eq!(space.filtration().len(), 2);
    }

    #[test]
    fn space_from_graph_json_with_rational_weights() {
        let json = r#"{
            "points": ["x", "y", "z"],
            "metric": {"kind": "graph", "edges": [[0, 1, "1/2"], [1, 2, 1]]}
        }"#;
        let repr: SpaceRepr = serde_json::from_str(json).unwrap();
        let space = repr.into_space().unwrap();
        assert_eq!(space.d(0, 2), &crate::arith::rat(3, 2));
    }

    #[test]
    fn asymmetric_matrix_rejected() {
        let json = r#"{
            "points": ["a", "b"],
            "metric": {"kind": "matrix", "d": [[0, 1], [2, 0]]}
        }"#;
        let repr: SpaceRepr = serde_json::from_str(json).unwrap();
        assert!(matches!(repr.into_space(), Err(SpaceError::MetricViolation(_))));
    }

    #[test]
    fn cover_and_entourage_from_json() {
        let space = FilteredMetricSpace::int_interval(0, 3);
        let cover: CoverRepr =
            serde_json::from_str(r#"{"members": [["0", "1"], ["2", "3"]]}"#).unwrap();
        let cover = cover.into_cover(&space).unwrap();
        assert_eq!(cover.members().len(), 2);
        let ent: EntourageRepr =
            serde_json::from_str(r#"{"pairs": [["0", "3"], ["1", "1"]]}"#).unwrap();
        let ent = ent.into_entourage(&space).unwrap();
        assert_eq!(ent.len(), 2);
    }

    #[test]
    fn operator_round_trip() {
        let space = FilteredMetricSpace::int_interval(0, 2);
        let json = r#"{"channels": 2, "entries": [["0", 0, "2", 1, "3/4"], ["1", 1, "1", 1, 2]]}"#;
        let repr: OperatorRepr = serde_json::from_str(json).unwrap();
        let t = repr.into_operator(&space).unwrap();
        assert_eq!(t.nnz(), 2);
        let back = serde_json::to_string(&OperatorRepr::from_operator(&space, &t)).unwrap();
        let reparsed: OperatorRepr = serde_json::from_str(&back).unwrap();
        assert_eq!(reparsed.into_operator(&space).unwrap(), t);
    }

    #[test]
    fn hom_from_json() {
        let json = r#"{"source": ["x", "y"], "target": ["u"], "matrix": [[1, -1]]}"#;
        let repr: HomRepr = serde_json::from_str(json).unwrap();
        let hom = repr.into_hom().unwrap();
        assert_eq!(crate::kgroups::kernel(&hom).rank(), 1);
    }
}
