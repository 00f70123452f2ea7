//! Finite-scale coarse geometry toolkit.
//!
//! Everything operates on finite data with exact arithmetic: metric spaces
//! are finite point sets with rational distances, covers are families of
//! subsets, nerves are abstract simplicial complexes carrying the uniform
//! spherical metric on their skeletons, coarsening spaces are layered graph
//! models glued along connecting maps, and operators are sparse rational
//! matrices of finite propagation. Integer K-group bookkeeping runs on
//! Hermite and Smith normal forms.

pub mod arith;
pub mod coarse;
pub mod coarsening;
pub mod complexes;
pub mod decomposition;
pub mod json;
pub mod kgroups;
pub mod roe;
pub mod spaces;
pub mod spectral;

/// Broad failure classes for mapping library errors to process exit codes.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum FailureClass {
    /// Input violates a schema or is self-contradictory.
    Schema,
    /// A documented precondition does not hold.
    Precondition,
    /// Input exceeds an enforced size cap.
    Capacity,
}

impl FailureClass {
    pub fn exit_code(self) -> i32 {
        match self {
            FailureClass::Schema => 2,
            FailureClass::Precondition => 3,
            FailureClass::Capacity => 4,
        }
    }
}

pub use arith::{Length, Rat};
pub use coarse::{Entourage, LevelAssignment, PointMap};
pub use coarsening::{CoarseningSpace, SpacePoint};
pub use complexes::{BarycentricPoint, SimplicialComplex, SimplicialMap, SphericalComplex};
pub use decomposition::DecompositionTree;
pub use kgroups::{FreeAbGroup, GroupHom, IntMatrix, SubgroupBasis};
pub use roe::{FiniteOperator, IsometryPair};
pub use spaces::{Cover, FilteredMetricSpace, SpaceError};
