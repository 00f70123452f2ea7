//! Entourage data and control classifiers: bounded bounds, filtration decay
//! profiles, fusion/hybrid control with explicit tolerance schedules, coarse
//! map predicates, and coarse-excisiveness profiles.
//!
//! Asymptotic quantifiers ("for every epsilon there is a compact set") have
//! no literal finite rendering; every classifier here takes an explicit
//! tolerance schedule indexed by the filtration and reports witnesses.

use std::collections::BTreeSet;

use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::arith::{rat_to_string, BitSet, Rat};
use crate::spaces::{FilteredMetricSpace, SpaceError, SpaceId};
use crate::FailureClass;

#[derive(Debug, Error)]
pub enum CoarseError {
    #[error("objects refer to different spaces")]
    SpaceMismatch,
    #[error("point index {0} out of range")]
    BadPoint(usize),
    #[error("schedule length {got} does not match {want}")]
    ScheduleLength { got: usize, want: usize },
    #[error("schedule entries must be positive and nonincreasing")]
    BadSchedule,
    #[error("subsets do not cover the space")]
    NotACover,
    #[error(transparent)]
    Space(#[from] SpaceError),
}

impl CoarseError {
    pub fn class(&self) -> FailureClass {
        match self {
            CoarseError::Space(e) => e.class(),
            _ => FailureClass::Precondition,
        }
    }
}

/// A set of ordered point pairs over a fixed space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entourage {
    pairs: BTreeSet<(u32, u32)>,
    space_id: SpaceId,
    space_len: usize,
}

impl Entourage {
    pub fn new(
        space: &FilteredMetricSpace,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, CoarseError> {
        let n = space.len();
        let mut set = BTreeSet::new();
        for (a, b) in pairs {
            if a >= n || b >= n {
                return Err(CoarseError::BadPoint(a.max(b)));
            }
            set.insert((a as u32, b as u32));
        }
        Ok(Entourage { pairs: set, space_id: space.id(), space_len: n })
    }

    pub fn diagonal(space: &FilteredMetricSpace) -> Self {
        Entourage {
            pairs: (0..space.len() as u32).map(|i| (i, i)).collect(),
            space_id: space.id(),
            space_len: space.len(),
        }
    }

    /// All pairs at distance at most `r`.
    pub fn band(space: &FilteredMetricSpace, r: &Rat) -> Self {
        let n = space.len();
        let mut pairs = BTreeSet::new();
        for i in 0..n {
            for j in 0..n {
                if space.d(i, j) <= r {
                    pairs.insert((i as u32, j as u32));
                }
            }
        }
        Entourage { pairs, space_id: space.id(), space_len: n }
    }

    pub fn pairs(&self) -> &BTreeSet<(u32, u32)> {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    fn check_same(&self, other: &Entourage) -> Result<(), CoarseError> {
        if self.space_id != other.space_id || self.space_len != other.space_len {
            return Err(CoarseError::SpaceMismatch);
        }
        Ok(())
    }

    fn check_space(&self, space: &FilteredMetricSpace) -> Result<(), CoarseError> {
        if self.space_id != space.id() || self.space_len != space.len() {
            return Err(CoarseError::SpaceMismatch);
        }
        Ok(())
    }

    pub fn union(&self, other: &Entourage) -> Result<Entourage, CoarseError> {
        self.check_same(other)?;
        let mut pairs = self.pairs.clone();
        pairs.extend(other.pairs.iter().copied());
        Ok(Entourage { pairs, ..*self })
    }

    pub fn inverse(&self) -> Entourage {
        Entourage {
            pairs: self.pairs.iter().map(|&(a, b)| (b, a)).collect(),
            ..*self
        }
    }

    /// `{(x, y) : exists z with (x, z) here and (z, y) in other}`.
    pub fn compose(&self, other: &Entourage) -> Result<Entourage, CoarseError> {
        self.check_same(other)?;
        let mut by_first: Vec<Vec<u32>> = vec![Vec::new(); self.space_len];
        for &(z, y) in &other.pairs {
            by_first[z as usize].push(y);
        }
        let mut pairs = BTreeSet::new();
        for &(x, z) in &self.pairs {
            for &y in &by_first[z as usize] {
                pairs.insert((x, y));
            }
        }
        Ok(Entourage { pairs, ..*self })
    }

    /// Restriction to pairs outside `cut x cut`.
    pub fn outside(&self, cut: &BitSet) -> Entourage {
        Entourage {
            pairs: self
                .pairs
                .iter()
                .filter(|&&(a, b)| !(cut.contains(a as usize) && cut.contains(b as usize)))
                .copied()
                .collect(),
            ..*self
        }
    }
}

/// Supremum of distances over an entourage (zero when empty or diagonal).
pub fn bounded_bound(space: &FilteredMetricSpace, e: &Entourage) -> Result<Rat, CoarseError> {
    e.check_space(space)?;
    Ok(e.pairs
        .iter()
        .map(|&(a, b)| space.d(a as usize, b as usize).clone())
        .max()
        .unwrap_or_else(Rat::zero))
}

/// Per filtration stage `i`, the largest distance over pairs outside
/// `K_i x K_i`. Nonincreasing in `i`; the last stage is zero because the
/// filtration ends at the full space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ControlProfile {
    pub sups: Vec<Rat>,
}

impl ControlProfile {
    pub fn to_strings(&self) -> Vec<String> {
        self.sups.iter().map(rat_to_string).collect()
    }
}

pub fn control_profile(
    space: &FilteredMetricSpace,
    e: &Entourage,
) -> Result<ControlProfile, CoarseError> {
    e.check_space(space)?;
    let sups = space
        .filtration()
        .iter()
        .map(|stage| {
            e.outside(stage)
                .pairs
                .iter()
                .map(|&(a, b)| space.d(a as usize, b as usize).clone())
                .max()
                .unwrap_or_else(Rat::zero)
        })
        .collect();
    Ok(ControlProfile { sups })
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ClassifyOutcome {
    Pass,
    Fail { stage: usize, witness: Option<(String, String)>, sup: String, tolerance: String },
}

impl ClassifyOutcome {
    pub fn passed(&self) -> bool {
        matches!(self, ClassifyOutcome::Pass)
    }
}

fn validate_schedule(schedule: &[Rat], want: usize) -> Result<(), CoarseError> {
    if schedule.len() != want {
        return Err(CoarseError::ScheduleLength { got: schedule.len(), want });
    }
    if schedule.iter().any(|t| t <= &Rat::zero()) || schedule.windows(2).any(|w| w[0] < w[1]) {
        return Err(CoarseError::BadSchedule);
    }
    Ok(())
}

/// Decay classification against a tolerance schedule: stage `i` of the
/// control profile must not exceed `schedule[i]`. On failure reports the
/// first violating stage with a witness pair.
pub fn classify_c0(
    space: &FilteredMetricSpace,
    e: &Entourage,
    schedule: &[Rat],
) -> Result<ClassifyOutcome, CoarseError> {
    e.check_space(space)?;
    validate_schedule(schedule, space.filtration().len())?;
    let profile = control_profile(space, e)?;
    for (i, (sup, tol)) in profile.sups.iter().zip(schedule).enumerate() {
        if sup > tol {
            let witness = e
                .outside(&space.filtration()[i])
                .pairs
                .iter()
                .find(|&&(a, b)| space.d(a as usize, b as usize) == sup)
                .map(|&(a, b)| {
                    (
                        space.point_ids()[a as usize].clone(),
                        space.point_ids()[b as usize].clone(),
                    )
                });
            return Ok(ClassifyOutcome::Fail {
                stage: i,
                witness,
                sup: rat_to_string(sup),
                tolerance: rat_to_string(tol),
            });
        }
    }
    Ok(ClassifyOutcome::Pass)
}

/// Level assignment for fusion/hybrid control: point -> level in `1..=max`.
#[derive(Clone, Debug)]
pub struct LevelAssignment {
    levels: Vec<u32>,
    max_level: u32,
    space_id: SpaceId,
}

impl LevelAssignment {
    pub fn new(space: &FilteredMetricSpace, levels: Vec<u32>) -> Result<Self, CoarseError> {
        if levels.len() != space.len() {
            return Err(CoarseError::SpaceMismatch);
        }
        if levels.contains(&0) {
            return Err(CoarseError::BadSchedule);
        }
        let max_level = levels.iter().copied().max().unwrap_or(1);
        Ok(LevelAssignment { levels, max_level, space_id: space.id() })
    }

    /// Levels given by the filtration: the first stage containing the point.
    pub fn from_filtration(space: &FilteredMetricSpace) -> Self {
        let levels = (0..space.len())
            .map(|x| {
                space
                    .filtration()
                    .iter()
                    .position(|stage| stage.contains(x))
                    .expect("filtration ends at the full set") as u32
                    + 1
            })
            .collect::<Vec<_>>();
        let max_level = levels.iter().copied().max().unwrap_or(1);
        LevelAssignment { levels, max_level, space_id: space.id() }
    }

    pub fn max_level(&self) -> u32 {
        self.max_level
    }

    /// `X_i`: all points of level at most `i`.
    pub fn stage(&self, i: u32) -> BitSet {
        BitSet::from_indices(
            self.levels.len(),
            self.levels.iter().enumerate().filter(|&(_, &l)| l <= i).map(|(x, _)| x),
        )
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FusionReport {
    pub bounded_bound: String,
    /// Minimal level cut whose outside part passes the decay schedule.
    pub passing_cut: Option<u32>,
    pub per_cut: Vec<ClassifyOutcome>,
}

/// Bounded control plus a decay condition off some partial stage: scans level
/// cuts upward and returns the minimal cut whose outside pairs pass
/// [`classify_c0`] under the caller's schedule. Only proper cuts are scanned:
/// at the top level everything is inside the cut and the condition would be
/// vacuous on finite data.
pub fn classify_fusion(
    space: &FilteredMetricSpace,
    e: &Entourage,
    levels: &LevelAssignment,
    c0_schedule: &[Rat],
) -> Result<FusionReport, CoarseError> {
    e.check_space(space)?;
    if levels.space_id != space.id() {
        return Err(CoarseError::SpaceMismatch);
    }
    let bound = bounded_bound(space, e)?;
    let mut per_cut = Vec::new();
    let mut passing_cut = None;
    let top = if levels.max_level() > 1 { levels.max_level() - 1 } else { 1 };
    for i in 1..=top {
        let outside = e.outside(&levels.stage(i));
        let outcome = classify_c0(space, &outside, c0_schedule)?;
        if outcome.passed() && passing_cut.is_none() {
            passing_cut = Some(i);
        }
        per_cut.push(outcome);
    }
    Ok(FusionReport { bounded_bound: rat_to_string(&bound), passing_cut, per_cut })
}

#[derive(Clone, Debug, Serialize)]
pub struct HybridReport {
    pub level_sups: Vec<String>,
    pub outcome: ClassifyOutcome,
}

/// Level-indexed sup sequence against a nonincreasing tolerance schedule:
/// `sup { d(x,y) : (x,y) outside X_i x X_i } <= tolerance[i-1]` for every
/// level `i`.
pub fn classify_hybrid(
    space: &FilteredMetricSpace,
    e: &Entourage,
    levels: &LevelAssignment,
    tolerance: &[Rat],
) -> Result<HybridReport, CoarseError> {
    e.check_space(space)?;
    if levels.space_id != space.id() {
        return Err(CoarseError::SpaceMismatch);
    }
    validate_schedule(tolerance, levels.max_level() as usize)?;
    let mut sups = Vec::with_capacity(levels.max_level() as usize);
    let mut outcome = ClassifyOutcome::Pass;
    for i in 1..=levels.max_level() {
        let outside = e.outside(&levels.stage(i));
        let sup = outside
            .pairs
            .iter()
            .map(|&(a, b)| space.d(a as usize, b as usize).clone())
            .max()
            .unwrap_or_else(Rat::zero);
        let tol = &tolerance[(i - 1) as usize];
        if outcome.passed() && &sup > tol {
            let witness = outside
                .pairs
                .iter()
                .find(|&&(a, b)| space.d(a as usize, b as usize) == &sup)
                .map(|&(a, b)| {
                    (
                        space.point_ids()[a as usize].clone(),
                        space.point_ids()[b as usize].clone(),
                    )
                });
            outcome = ClassifyOutcome::Fail {
                stage: i as usize,
                witness,
                sup: rat_to_string(&sup),
                tolerance: rat_to_string(tol),
            };
        }
        sups.push(rat_to_string(&sup));
    }
    Ok(HybridReport { level_sups: sups, outcome })
}

/// Total map between spaces, stored on point indices.
#[derive(Clone, Debug)]
pub struct PointMap {
    values: Vec<u32>,
    source_id: SpaceId,
    target_id: SpaceId,
}

impl PointMap {
    pub fn new(
        source: &FilteredMetricSpace,
        target: &FilteredMetricSpace,
        values: Vec<usize>,
    ) -> Result<Self, CoarseError> {
        if values.len() != source.len() {
            return Err(CoarseError::SpaceMismatch);
        }
        if let Some(&bad) = values.iter().find(|&&v| v >= target.len()) {
            return Err(CoarseError::BadPoint(bad));
        }
        Ok(PointMap {
            values: values.into_iter().map(|v| v as u32).collect(),
            source_id: source.id(),
            target_id: target.id(),
        })
    }

    pub fn identity(space: &FilteredMetricSpace) -> Self {
        PointMap {
            values: (0..space.len() as u32).collect(),
            source_id: space.id(),
            target_id: space.id(),
        }
    }

    pub fn apply(&self, x: usize) -> usize {
        self.values[x] as usize
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn compose(&self, then: &PointMap) -> Result<PointMap, CoarseError> {
        if self.target_id != then.source_id {
            return Err(CoarseError::SpaceMismatch);
        }
        Ok(PointMap {
            values: self.values.iter().map(|&v| then.values[v as usize]).collect(),
            source_id: self.source_id,
            target_id: then.target_id,
        })
    }
}

/// For each realized ball radius in the target, the maximum diameter of a
/// ball preimage.
pub fn properness_profile(
    source: &FilteredMetricSpace,
    target: &FilteredMetricSpace,
    f: &PointMap,
) -> Result<Vec<(Rat, Rat)>, CoarseError> {
    check_map(source, target, f)?;
    let mut radii: Vec<Rat> = vec![Rat::zero()];
    radii.extend(target.realized_distances().iter().cloned());
    let mut out = Vec::with_capacity(radii.len());
    for r in radii {
        let mut worst = Rat::zero();
        for y in 0..target.len() {
            let ball: Vec<usize> = target.ball(y, &r);
            let pre: Vec<usize> = (0..source.len())
                .filter(|&x| ball.contains(&(f.values[x] as usize)))
                .collect();
            for (a, &i) in pre.iter().enumerate() {
                for &j in &pre[a + 1..] {
                    let d = source.d(i, j);
                    if *d > worst {
                        worst = d.clone();
                    }
                }
            }
        }
        out.push((r, worst));
    }
    Ok(out)
}

/// Control function table: for each realized source distance `r`, the largest
/// image distance over pairs within `r`. Nondecreasing by construction.
pub fn bornologous_profile(
    source: &FilteredMetricSpace,
    target: &FilteredMetricSpace,
    f: &PointMap,
) -> Result<Vec<(Rat, Rat)>, CoarseError> {
    check_map(source, target, f)?;
    let mut radii: Vec<Rat> = vec![Rat::zero()];
    radii.extend(source.realized_distances().iter().cloned());
    let mut pairs: Vec<(Rat, Rat)> = Vec::new();
    for i in 0..source.len() {
        for j in i..source.len() {
            pairs.push((
                source.d(i, j).clone(),
                target.d(f.values[i] as usize, f.values[j] as usize).clone(),
            ));
        }
    }
    pairs.sort();
    let mut out = Vec::with_capacity(radii.len());
    let mut running = Rat::zero();
    let mut k = 0usize;
    for r in radii {
        while k < pairs.len() && pairs[k].0 <= r {
            if pairs[k].1 > running {
                running = pairs[k].1.clone();
            }
            k += 1;
        }
        out.push((r, running.clone()));
    }
    Ok(out)
}

/// Control table evaluated at a single radius.
pub fn control_at(profile: &[(Rat, Rat)], r: &Rat) -> Rat {
    profile
        .iter()
        .filter(|(radius, _)| radius <= r)
        .map(|(_, v)| v.clone())
        .max()
        .unwrap_or_else(Rat::zero)
}

/// Sup of `d(f(x), g(x))` with an attaining point index.
pub fn closeness(
    target: &FilteredMetricSpace,
    f: &PointMap,
    g: &PointMap,
) -> Result<(Rat, usize), CoarseError> {
    if f.source_id != g.source_id || f.target_id != g.target_id || f.target_id != target.id() {
        return Err(CoarseError::SpaceMismatch);
    }
    let mut best = (Rat::zero(), 0usize);
    for x in 0..f.values.len() {
        let d = target.d(f.values[x] as usize, g.values[x] as usize);
        if *d > best.0 {
            best = (d.clone(), x);
        }
    }
    Ok(best)
}

fn check_map(
    source: &FilteredMetricSpace,
    target: &FilteredMetricSpace,
    f: &PointMap,
) -> Result<(), CoarseError> {
    if f.source_id != source.id() || f.target_id != target.id() {
        return Err(CoarseError::SpaceMismatch);
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ExcisiveEntry {
    Ok { r: String, s: String },
    Fail { r: String },
}

/// For each scale `R`, the minimal `S` with
/// `E_R intersect F_R` inside `(E intersect F)_S`, thickenings closed. A
/// scale fails when the two sides meet at scale `R` but `E intersect F` is
/// empty.
pub fn excisive_profile(
    space: &FilteredMetricSpace,
    e: &[usize],
    f: &[usize],
    scales: &[Rat],
) -> Result<Vec<ExcisiveEntry>, CoarseError> {
    let n = space.len();
    if e.iter().chain(f).any(|&x| x >= n) {
        return Err(CoarseError::BadPoint(n));
    }
    let mut covered = BitSet::new(n);
    for &x in e.iter().chain(f) {
        covered.insert(x);
    }
    if !covered.is_full() {
        return Err(CoarseError::NotACover);
    }
    let e_set: BTreeSet<usize> = e.iter().copied().collect();
    let inter: Vec<usize> = f.iter().copied().filter(|x| e_set.contains(x)).collect();
    let dist_to = |x: usize, set: &[usize]| -> Option<Rat> {
        set.iter().map(|&y| space.d(x, y).clone()).min()
    };
    let mut out = Vec::with_capacity(scales.len());
    for r in scales {
        let in_e_r: Vec<usize> = (0..n)
            .filter(|&x| dist_to(x, e).is_some_and(|d| &d <= r))
            .collect();
        let meet: Vec<usize> = in_e_r
            .into_iter()
            .filter(|&x| dist_to(x, f).is_some_and(|d| &d <= r))
            .collect();
        if meet.is_empty() {
            out.push(ExcisiveEntry::Ok { r: rat_to_string(r), s: "0".into() });
            continue;
        }
        if inter.is_empty() {
            out.push(ExcisiveEntry::Fail { r: rat_to_string(r) });
            continue;
        }
        let s = meet
            .iter()
            .map(|&x| dist_to(x, &inter).expect("intersection nonempty"))
            .max()
            .unwrap();
        out.push(ExcisiveEntry::Ok { r: rat_to_string(r), s: rat_to_string(&s) });
    }
    Ok(out)
}
