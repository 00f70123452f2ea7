//! Exact integer linear algebra for finitely generated abelian groups:
//! Hermite and Smith normal forms, kernels and images, quotient invariant
//! factors, the collapse-tower pipeline for discrete spaces, and exactness
//! checks for chain complexes of presented groups.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::FailureClass;

pub type Int = BigInt;

#[derive(Debug, Error)]
pub enum KGroupError {
    #[error("matrix shape mismatch: {0}")]
    Shape(String),
    #[error("chain of subsets violates inclusion at stage {0}")]
    ChainViolation(usize),
    #[error("homs are not composable at position {0}")]
    NotComposable(usize),
    #[error("malformed input: {0}")]
    Malformed(String),
}

impl KGroupError {
    pub fn class(&self) -> FailureClass {
        match self {
            KGroupError::Malformed(_) => FailureClass::Schema,
            _ => FailureClass::Precondition,
        }
    }
}

/// Dense integer matrix, rows x cols.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct IntMatrix {
    pub rows: usize,
    pub cols: usize,
    data: Vec<Int>,
}

impl IntMatrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        IntMatrix { rows, cols, data: vec![Int::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IntMatrix::zero(n, n);
        for i in 0..n {
            m[(i, i)] = Int::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<i64>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c));
        let data = rows.into_iter().flatten().map(Int::from).collect();
        IntMatrix { rows: r, cols: c, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Int) -> Self {
        let mut m = IntMatrix::zero(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn column(&self, j: usize) -> Vec<Int> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = IntMatrix::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                if self[(i, k)].is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let prod = &self[(i, k)] * &other[(k, j)];
                    out[(i, j)] += prod;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Int]) -> Vec<Int> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| &self[(i, j)] * &v[j]).sum())
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Int::is_zero)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// row[b] += q * row[a]
    fn add_row(&mut self, a: usize, b: usize, q: &Int) {
        for j in 0..self.cols {
            let t = &self[(a, j)] * q;
            self[(b, j)] += t;
        }
    }

    /// col[b] += q * col[a]
    fn add_col(&mut self, a: usize, b: usize, q: &Int) {
        for i in 0..self.rows {
            let t = &self[(i, a)] * q;
            self[(i, b)] += t;
        }
    }

    fn negate_row(&mut self, a: usize) {
        for j in 0..self.cols {
            let v = -self[(a, j)].clone();
            self[(a, j)] = v;
        }
    }

    fn negate_col(&mut self, a: usize) {
        for i in 0..self.rows {
            let v = -self[(i, a)].clone();
            self[(i, a)] = v;
        }
    }
}

impl std::ops::Index<(usize, usize)> for IntMatrix {
    type Output = Int;
    fn index(&self, (i, j): (usize, usize)) -> &Int {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IntMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Int {
        &mut self.data[i * self.cols + j]
    }
}

/// Smith decomposition `U * M * V = D` with `U`, `V` unimodular and `D`
/// diagonal satisfying the divisibility chain.
pub struct Smith {
    pub u: IntMatrix,
    pub d: IntMatrix,
    pub v: IntMatrix,
}

impl Smith {
    /// Nonzero diagonal entries.
    pub fn invariants(&self) -> Vec<Int> {
        (0..self.d.rows.min(self.d.cols))
            .map(|i| self.d[(i, i)].clone())
            .filter(|x| !x.is_zero())
            .collect()
    }

    pub fn rank(&self) -> usize {
        self.invariants().len()
    }
}

/// Computes the Smith normal form by alternating row and column reductions;
/// the identity `U * M * V = D` is re-verified before returning.
pub fn smith_normal_form(m: &IntMatrix) -> Smith {
    let mut d = m.clone();
    let mut u = IntMatrix::identity(m.rows);
    let mut v = IntMatrix::identity(m.cols);
    let n = m.rows.min(m.cols);
    for t in 0..n {
        loop {
            // find pivot: smallest nonzero magnitude in the remaining block
            let mut pivot: Option<(usize, usize)> = None;
            for i in t..d.rows {
                for j in t..d.cols {
                    if !d[(i, j)].is_zero()
                        && pivot.is_none_or(|(pi, pj)| d[(i, j)].abs() < d[(pi, pj)].abs())
                    {
                        pivot = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = pivot else { break };
            d.swap_rows(t, pi);
            u.swap_rows(t, pi);
            d.swap_cols(t, pj);
            v.swap_cols(t, pj);
            let mut dirty = false;
            for i in (t + 1)..d.rows {
                if !d[(i, t)].is_zero() {
                    let q = -(&d[(i, t)] / &d[(t, t)]);
                    d.add_row(t, i, &q);
                    u.add_row(t, i, &q);
                    if !d[(i, t)].is_zero() {
                        dirty = true;
                    }
                }
            }
            for j in (t + 1)..d.cols {
                if !d[(t, j)].is_zero() {
                    let q = -(&d[(t, j)] / &d[(t, t)]);
                    d.add_col(t, j, &q);
                    v.add_col(t, j, &q);
                    if !d[(t, j)].is_zero() {
                        dirty = true;
                    }
                }
            }
            if !dirty
                && (t + 1..d.rows).all(|i| d[(i, t)].is_zero())
                && (t + 1..d.cols).all(|j| d[(t, j)].is_zero())
            {
                break;
            }
        }
        if t < d.rows && t < d.cols && d[(t, t)].is_negative() {
            d.negate_row(t);
            u.negate_row(t);
        }
    }
    // enforce the divisibility chain d[i] | d[i+1]
    loop {
        let mut fixed = true;
        for i in 0..n.saturating_sub(1) {
            let a = d[(i, i)].clone();
            let b = d[(i + 1, i + 1)].clone();
            if b.is_zero() || a.is_zero() {
                if a.is_zero() && !b.is_zero() {
                    d.swap_rows(i, i + 1);
                    u.swap_rows(i, i + 1);
                    d.swap_cols(i, i + 1);
                    v.swap_cols(i, i + 1);
                    fixed = false;
                }
                continue;
            }
            if (&b % &a).is_zero() {
                continue;
            }
            fixed = false;
            // fold the pair: gcd on the diagonal
            let one = Int::one();
            d.add_col(i + 1, i, &one);
            v.add_col(i + 1, i, &one);
            // re-reduce the 2x2 block
            loop {
                let x = d[(i, i)].clone();
                let y = d[(i + 1, i)].clone();
                if y.is_zero() {
                    break;
                }
                if x.is_zero() || y.abs() < x.abs() {
                    d.swap_rows(i, i + 1);
                    u.swap_rows(i, i + 1);
                    continue;
                }
                let q = -(&y / &x);
                d.add_row(i, i + 1, &q);
                u.add_row(i, i + 1, &q);
            }
            // clear the off-diagonal in the row
            let x = d[(i, i)].clone();
            if !x.is_zero() {
                let y = d[(i, i + 1)].clone();
                if !y.is_zero() {
                    let q = -(&y / &x);
                    d.add_col(i, i + 1, &q);
                    v.add_col(i, i + 1, &q);
                    if !d[(i, i + 1)].is_zero() {
                        // remainder left: restart this pair
                        continue;
                    }
                }
            }
            if d[(i, i)].is_negative() {
                d.negate_row(i);
                u.negate_row(i);
            }
            if d[(i + 1, i + 1)].is_negative() {
                d.negate_row(i + 1);
                u.negate_row(i + 1);
            }
        }
        if fixed {
            break;
        }
    }
    let smith = Smith { u, d, v };
    debug_assert!(smith.u.mul(m).mul(&smith.v) == smith.d, "U*M*V != D");
    smith
}

/// Verifies `U * M * V = D` from scratch.
pub fn verify_smith(m: &IntMatrix, s: &Smith) -> bool {
    let prod = s.u.mul(m).mul(&s.v);
    if prod != s.d {
        return false;
    }
    let inv = s.invariants();
    for w in inv.windows(2) {
        if !(&w[1] % &w[0]).is_zero() {
            return false;
        }
    }
    // off-diagonal zero
    for i in 0..s.d.rows {
        for j in 0..s.d.cols {
            if i != j && !s.d[(i, j)].is_zero() {
                return false;
            }
        }
    }
    true
}

/// Canonical column Hermite normal form of the lattice spanned by the
/// columns: pivots positive, entries right of a pivot reduced into
/// `[0, pivot)`, zero columns dropped. Two generating sets span the same
/// subgroup iff their forms are identical.
pub fn hermite_columns(m: &IntMatrix) -> IntMatrix {
    let mut a = m.clone();
    let rows = a.rows;
    let cols = a.cols;
    let mut pivot_col = 0usize;
    for r in 0..rows {
        if pivot_col >= cols {
            break;
        }
        loop {
            // find the column (>= pivot_col) with the smallest nonzero entry in row r
            let mut best: Option<usize> = None;
            for j in pivot_col..cols {
                if !a[(r, j)].is_zero()
                    && best.is_none_or(|b| a[(r, j)].abs() < a[(r, b)].abs())
                {
                    best = Some(j);
                }
            }
            let Some(b) = best else { break };
            a.swap_cols(pivot_col, b);
            if a[(r, pivot_col)].is_negative() {
                a.negate_col(pivot_col);
            }
            let mut clean = true;
            for j in (pivot_col + 1)..cols {
                if !a[(r, j)].is_zero() {
                    let q = -(&a[(r, j)] / &a[(r, pivot_col)]);
                    a.add_col(pivot_col, j, &q);
                    if !a[(r, j)].is_zero() {
                        clean = false;
                    }
                }
            }
            if clean {
                break;
            }
        }
        if !a[(r, pivot_col)].is_zero() {
            // reduce entries to the LEFT of the pivot in this row into [0, pivot)
            for j in 0..pivot_col {
                if !a[(r, j)].is_zero() {
                    let q = -a[(r, j)].div_floor(&a[(r, pivot_col)]);
                    a.add_col(pivot_col, j, &q);
                }
            }
            pivot_col += 1;
        }
    }
    // drop zero columns
    let keep: Vec<usize> =
        (0..cols).filter(|&j| (0..rows).any(|i| !a[(i, j)].is_zero())).collect();
    let mut out = IntMatrix::zero(rows, keep.len());
    for (nj, &j) in keep.iter().enumerate() {
        for i in 0..rows {
            out[(i, nj)] = a[(i, j)].clone();
        }
    }
    out
}

/// Free abelian group with labeled basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FreeAbGroup {
    pub basis: Vec<String>,
}

impl FreeAbGroup {
    pub fn new(basis: Vec<String>) -> Result<Self, KGroupError> {
        let set: BTreeSet<&String> = basis.iter().collect();
        if set.len() != basis.len() {
            return Err(KGroupError::Malformed("duplicate basis labels".into()));
        }
        Ok(FreeAbGroup { basis })
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }
}

/// Homomorphism of free abelian groups as an integer matrix acting on
/// column vectors (target rank x source rank).
#[derive(Clone, Debug)]
pub struct GroupHom {
    pub source: FreeAbGroup,
    pub target: FreeAbGroup,
    pub matrix: IntMatrix,
}

impl GroupHom {
    pub fn new(
        source: FreeAbGroup,
        target: FreeAbGroup,
        matrix: IntMatrix,
    ) -> Result<Self, KGroupError> {
        if matrix.rows != target.rank() || matrix.cols != source.rank() {
            return Err(KGroupError::Shape(format!(
                "matrix {}x{} vs target rank {} source rank {}",
                matrix.rows,
                matrix.cols,
                target.rank(),
                source.rank()
            )));
        }
        Ok(GroupHom { source, target, matrix })
    }

    pub fn compose(&self, then: &GroupHom) -> Result<GroupHom, KGroupError> {
        if then.source.rank() != self.target.rank() {
            return Err(KGroupError::NotComposable(0));
        }
        GroupHom::new(self.source.clone(), then.target.clone(), then.matrix.mul(&self.matrix))
    }
}

/// Subgroup of a free abelian group stored by its canonical Hermite basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubgroupBasis {
    pub ambient_rank: usize,
    pub hnf: IntMatrix,
}

impl SubgroupBasis {
    pub fn from_generators(ambient_rank: usize, gens: &IntMatrix) -> Result<Self, KGroupError> {
        if gens.rows != ambient_rank {
            return Err(KGroupError::Shape(format!(
                "generators have {} rows, ambient rank {}",
                gens.rows, ambient_rank
            )));
        }
        Ok(SubgroupBasis { ambient_rank, hnf: hermite_columns(gens) })
    }

    pub fn zero(ambient_rank: usize) -> Self {
        SubgroupBasis { ambient_rank, hnf: IntMatrix::zero(ambient_rank, 0) }
    }

    pub fn rank(&self) -> usize {
        self.hnf.cols
    }

    /// Lattice sum: subgroup generated by both.
    pub fn sum(&self, other: &SubgroupBasis) -> Result<SubgroupBasis, KGroupError> {
        if self.ambient_rank != other.ambient_rank {
            return Err(KGroupError::Shape("ambient ranks differ".into()));
        }
        let mut gens = IntMatrix::zero(self.ambient_rank, self.hnf.cols + other.hnf.cols);
        for j in 0..self.hnf.cols {
            for i in 0..self.ambient_rank {
                gens[(i, j)] = self.hnf[(i, j)].clone();
            }
        }
        for j in 0..other.hnf.cols {
            for i in 0..self.ambient_rank {
                gens[(i, self.hnf.cols + j)] = other.hnf[(i, j)].clone();
            }
        }
        SubgroupBasis::from_generators(self.ambient_rank, &gens)
    }

    /// Membership test by exact back-substitution against the Hermite form.
    pub fn contains(&self, v: &[Int]) -> bool {
        if v.len() != self.ambient_rank {
            return false;
        }
        let mut v = v.to_vec();
        for j in 0..self.hnf.cols {
            let Some(pr) = (0..self.ambient_rank).find(|&i| !self.hnf[(i, j)].is_zero()) else {
                continue;
            };
            if v[pr].is_zero() {
                continue;
            }
            let (q, r) = v[pr].div_rem(&self.hnf[(pr, j)]);
            if !r.is_zero() {
                return false;
            }
            for (i, entry) in v.iter_mut().enumerate() {
                let t = &self.hnf[(i, j)] * &q;
                *entry -= t;
            }
        }
        v.iter().all(Int::is_zero)
    }
}

/// Kernel of a hom as a canonical subgroup basis; `h * gens = 0` is verified.
pub fn kernel(h: &GroupHom) -> SubgroupBasis {
    let s = smith_normal_form(&h.matrix);
    let r = s.rank();
    // columns of V beyond the rank span the kernel
    let mut gens = IntMatrix::zero(h.matrix.cols, h.matrix.cols - r);
    for (nj, j) in (r..h.matrix.cols).enumerate() {
        for i in 0..h.matrix.cols {
            gens[(i, nj)] = s.v[(i, j)].clone();
        }
    }
    debug_assert!(h.matrix.mul(&gens).is_zero());
    SubgroupBasis::from_generators(h.matrix.cols, &gens).expect("shape by construction")
}

/// Image of a hom as a canonical subgroup basis.
pub fn image(h: &GroupHom) -> SubgroupBasis {
    SubgroupBasis::from_generators(h.matrix.rows, &h.matrix).expect("shape by construction")
}

/// Invariant factors and free rank of `Z^ambient / relations`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QuotientInvariants {
    /// Torsion orders, each dividing the next, units omitted.
    pub torsion: Vec<String>,
    pub free_rank: usize,
}

pub fn quotient_invariants(relations: &SubgroupBasis) -> QuotientInvariants {
    let s = smith_normal_form(&relations.hnf);
    let torsion: Vec<String> = s
        .invariants()
        .into_iter()
        .filter(|d| !d.is_one())
        .map(|d| d.to_string())
        .collect();
    QuotientInvariants { torsion, free_rank: relations.ambient_rank - s.rank() }
}

/// `{v : M v in L}` for a lattice `L`: the preimage of a subgroup under an
/// integer matrix, as a canonical basis.
pub fn lattice_preimage(m: &IntMatrix, l: &SubgroupBasis) -> Result<SubgroupBasis, KGroupError> {
    if l.ambient_rank != m.rows {
        return Err(KGroupError::Shape("lattice lives in the wrong rank".into()));
    }
    // kernel of [M | -L] projected to the first block
    let total = m.cols + l.hnf.cols;
    let stacked = IntMatrix::from_fn(m.rows, total, |i, j| {
        if j < m.cols {
            m[(i, j)].clone()
        } else {
            -l.hnf[(i, j - m.cols)].clone()
        }
    });
    let s = smith_normal_form(&stacked);
    let r = s.rank();
    let mut gens = IntMatrix::zero(m.cols, total - r);
    for (nj, j) in (r..total).enumerate() {
        for i in 0..m.cols {
            gens[(i, nj)] = s.v[(i, j)].clone();
        }
    }
    SubgroupBasis::from_generators(m.cols, &gens)
}

/// The basis of the group modeling a space with a subset collapsed to a
/// point: the collapsed class first (when the subset is nonempty), then the
/// remaining points in order.
fn collapsed_basis(points: &[String], collapsed: &BTreeSet<String>) -> Vec<String> {
    let mut basis = Vec::new();
    if !collapsed.is_empty() {
        basis.push("pt".to_string());
    }
    basis.extend(points.iter().filter(|p| !collapsed.contains(*p)).cloned());
    basis
}

/// The map between collapse stages: the old collapsed class and the newly
/// collapsed points all feed the new collapsed coordinate; everything else
/// passes through. `inner` may be empty (no collapse yet).
pub fn quotient_step_map(
    points: &[String],
    inner: &BTreeSet<String>,
    outer: &BTreeSet<String>,
) -> Result<GroupHom, KGroupError> {
    if !inner.is_subset(outer) {
        return Err(KGroupError::ChainViolation(0));
    }
    if outer.iter().any(|p| !points.contains(p)) {
        return Err(KGroupError::Malformed("collapsed point not in the space".into()));
    }
    let src = FreeAbGroup::new(collapsed_basis(points, inner))?;
    let tgt = FreeAbGroup::new(collapsed_basis(points, outer))?;
    let mut matrix = IntMatrix::zero(tgt.rank(), src.rank());
    for (j, label) in src.basis.iter().enumerate() {
        let feeds_pt = label == "pt" || outer.contains(label);
        let i = if feeds_pt && !outer.is_empty() {
            0
        } else {
            tgt.basis.iter().position(|b| b == label).expect("label survives")
        };
        matrix[(i, j)] = Int::one();
    }
    GroupHom::new(src, tgt, matrix)
}

/// Expected kernel of a collapse step: vectors supported on the collapsed
/// block with coordinate sum zero.
pub fn collapse_kernel_model(
    points: &[String],
    inner: &BTreeSet<String>,
    outer: &BTreeSet<String>,
) -> Result<SubgroupBasis, KGroupError> {
    let src = FreeAbGroup::new(collapsed_basis(points, inner))?;
    let block: Vec<usize> = src
        .basis
        .iter()
        .enumerate()
        .filter(|(_, l)| *l == "pt" || outer.contains(*l))
        .map(|(j, _)| j)
        .collect();
    if block.len() < 2 {
        return Ok(SubgroupBasis::zero(src.rank()));
    }
    let mut gens = IntMatrix::zero(src.rank(), block.len() - 1);
    for (c, &j) in block[1..].iter().enumerate() {
        gens[(block[0], c)] = -Int::one();
        gens[(j, c)] = Int::one();
    }
    SubgroupBasis::from_generators(src.rank(), &gens)
}

#[derive(Clone, Debug, Serialize)]
pub struct TowerStage {
    pub stage: usize,
    pub surjective: bool,
    pub kernel_rank: usize,
    pub kernel_matches_model: bool,
}

/// Report for the collapse-tower pipeline on a finite point set with a chain
/// of subsets: per-stage surjectivity and kernel identification, agreement of
/// the composite-kernel with the direct single-collapse kernel, and the
/// invariant factors of the final quotient. The odd-degree part of each stage
/// group is zero in this model and is recorded as such.
#[derive(Clone, Debug, Serialize)]
pub struct TowerReport {
    pub stages: Vec<TowerStage>,
    pub kernels_equal: bool,
    pub quotient: QuotientInvariants,
    pub expected_quotient_free_rank: usize,
    pub quotient_matches: bool,
    pub odd_rank: usize,
}

pub fn quotient_tower_report(
    points: &[String],
    chain: &[BTreeSet<String>],
) -> Result<TowerReport, KGroupError> {
    if points.is_empty() {
        return Err(KGroupError::Malformed("empty point set".into()));
    }
    if chain.is_empty() {
        return Err(KGroupError::Malformed("empty chain".into()));
    }
    for (i, w) in chain.windows(2).enumerate() {
        if !w[0].is_subset(&w[1]) {
            return Err(KGroupError::ChainViolation(i + 1));
        }
    }
    let empty = BTreeSet::new();
    let mut stages = Vec::new();
    let mut composite: Option<GroupHom> = None;
    let mut prev: &BTreeSet<String> = &empty;
    for (idx, c) in chain.iter().enumerate() {
        let step = quotient_step_map(points, prev, c)?;
        let s = smith_normal_form(&step.matrix);
        let surjective = s.rank() == step.matrix.rows && s.invariants().iter().all(Int::is_one);
        let ker = kernel(&step);
        let model = collapse_kernel_model(points, prev, c)?;
        stages.push(TowerStage {
            stage: idx,
            surjective,
            kernel_rank: ker.rank(),
            kernel_matches_model: ker == model,
        });
        composite = Some(match composite {
            None => step,
            Some(f) => f.compose(&step)?,
        });
        prev = c;
    }
    let composite = composite.expect("chain nonempty");
    // two routes to the same kernel: the composite through every stage and
    // the direct single collapse to the last subset
    let direct = quotient_step_map(points, &empty, chain.last().unwrap())?;
    let ker_composite = kernel(&composite);
    let ker_direct = kernel(&direct);
    let kernels_equal = ker_composite == ker_direct
        && composite.matrix == direct.matrix;
    let quotient = quotient_invariants(&ker_direct);
    let last = chain.last().unwrap();
    let expected = 1 + points.iter().filter(|p| !last.contains(*p)).count();
    let quotient_matches = quotient.torsion.is_empty() && quotient.free_rank == expected;
    Ok(TowerReport {
        stages,
        kernels_equal,
        quotient,
        expected_quotient_free_rank: expected,
        quotient_matches,
        odd_rank: 0,
    })
}

/// Group presented as `Z^rank / relations`; free groups have no relations.
#[derive(Clone, Debug)]
pub struct PresentedGroup {
    pub rank: usize,
    pub relations: SubgroupBasis,
}

impl PresentedGroup {
    pub fn free(rank: usize) -> Self {
        PresentedGroup { rank, relations: SubgroupBasis::zero(rank) }
    }

    pub fn quotient(rank: usize, relations: SubgroupBasis) -> Result<Self, KGroupError> {
        if relations.ambient_rank != rank {
            return Err(KGroupError::Shape("relations in the wrong ambient".into()));
        }
        Ok(PresentedGroup { rank, relations })
    }
}

/// A map of presented groups given on ambient free covers; must send
/// relations into relations.
#[derive(Clone, Debug)]
pub struct PresentedHom {
    pub source: PresentedGroup,
    pub target: PresentedGroup,
    pub matrix: IntMatrix,
}

impl PresentedHom {
    pub fn new(
        source: PresentedGroup,
        target: PresentedGroup,
        matrix: IntMatrix,
    ) -> Result<Self, KGroupError> {
        if matrix.rows != target.rank || matrix.cols != source.rank {
            return Err(KGroupError::Shape("ambient matrix shape".into()));
        }
        for j in 0..source.relations.hnf.cols {
            let img = matrix.mul_vec(&source.relations.hnf.column(j));
            if !target.relations.contains(&img) {
                return Err(KGroupError::Malformed(
                    "map does not respect relations".into(),
                ));
            }
        }
        Ok(PresentedHom { source, target, matrix })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExactnessNode {
    pub position: usize,
    pub exact: bool,
    /// A vector in one lattice but not the other, on failure.
    pub counterexample: Option<Vec<String>>,
}

/// Checks `image(h_i) = kernel(h_{i+1})` at every interior node of a
/// composable chain, relations included on both sides: the effective image
/// is `im(h_i) + rel`, the effective kernel the preimage of the target
/// relations.
pub fn exactness_check(homs: &[PresentedHom]) -> Result<Vec<ExactnessNode>, KGroupError> {
    for (i, w) in homs.windows(2).enumerate() {
        if w[0].target.rank != w[1].source.rank {
            return Err(KGroupError::NotComposable(i));
        }
    }
    let mut out = Vec::new();
    for i in 0..homs.len().saturating_sub(1) {
        let f = &homs[i];
        let g = &homs[i + 1];
        let img = SubgroupBasis::from_generators(f.matrix.rows, &f.matrix)?
            .sum(&f.target.relations)?;
        let ker = lattice_preimage(&g.matrix, &g.target.relations)?.sum(&f.target.relations)?;
        let exact = img == ker;
        let counterexample = if exact {
            None
        } else {
            // a generator of one lattice missing from the other
            let mut witness = None;
            for j in 0..ker.hnf.cols {
                let v = ker.hnf.column(j);
                if !img.contains(&v) {
                    witness = Some(v);
                    break;
                }
            }
            if witness.is_none() {
                for j in 0..img.hnf.cols {
                    let v = img.hnf.column(j);
                    if !ker.contains(&v) {
                        witness = Some(v);
                        break;
                    }
                }
            }
            witness.map(|v| v.iter().map(Int::to_string).collect())
        };
        out.push(ExactnessNode { position: i + 1, exact, counterexample });
    }
    Ok(out)
}

/// The split-union sequence `0 -> Z^(Y cap Z) -> Z^Y (+) Z^Z -> Z^(Y cup Z) -> 0`
/// with the inclusion-pair and difference maps, as a presented-hom chain
/// (zero groups at the ends).
pub fn split_union_sequence(
    y: &BTreeSet<String>,
    z: &BTreeSet<String>,
) -> Result<Vec<PresentedHom>, KGroupError> {
    let inter: Vec<&String> = y.intersection(z).collect();
    let union: Vec<&String> = y.union(z).collect();
    let y_list: Vec<&String> = y.iter().collect();
    let z_list: Vec<&String> = z.iter().collect();
    let g_inter = PresentedGroup::free(inter.len());
    let g_mid = PresentedGroup::free(y_list.len() + z_list.len());
    let g_union = PresentedGroup::free(union.len());
    // x -> (x, x)
    let mut m1 = IntMatrix::zero(g_mid.rank, g_inter.rank);
    for (j, x) in inter.iter().enumerate() {
        let iy = y_list.iter().position(|p| p == x).expect("in Y");
        let iz = z_list.iter().position(|p| p == x).expect("in Z");
        m1[(iy, j)] = Int::one();
        m1[(y_list.len() + iz, j)] = Int::one();
    }
    // (a, b) -> a - b
    let mut m2 = IntMatrix::zero(g_union.rank, g_mid.rank);
    for (j, x) in y_list.iter().enumerate() {
        let iu = union.iter().position(|p| p == x).expect("in union");
        m2[(iu, j)] = Int::one();
    }
    for (j, x) in z_list.iter().enumerate() {
        let iu = union.iter().position(|p| p == x).expect("in union");
        m2[(iu, y_list.len() + j)] = -Int::one();
    }
    Ok(vec![
        PresentedHom::new(PresentedGroup::free(0), g_inter.clone(), IntMatrix::zero(g_inter.rank, 0))?,
        PresentedHom::new(g_inter, g_mid.clone(), m1)?,
        PresentedHom::new(g_mid, g_union.clone(), m2)?,
        PresentedHom::new(g_union, PresentedGroup::free(0), IntMatrix::zero(0, union.len()))?,
    ])
}
