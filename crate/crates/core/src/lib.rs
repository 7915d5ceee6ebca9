//! Finite topological spaces stored as incidence graphs, continuous maps
//! between them, and a query algebra over them.
//!
//! A [`Space`] is a set of cells plus an acyclic "bounded by" relation. The
//! open sets are the down-closed sets of that relation, so a space carries a
//! genuine finite topology without ever enumerating it. [`SpaceMap`]s are
//! checked for continuity pair by pair. The [`algebra`] module builds new
//! spaces from old ones (subspaces, quotients, unions, intersections,
//! products, Θ-joins, fibre products), and [`lod`] validates foreign keys
//! between levels of detail as continuous maps.
//!
//! The [`oracle`] module holds brute-force versions of the core checks for
//! testing.

pub mod algebra;
pub mod error;
pub mod io;
pub mod lod;
pub mod maps;
pub mod oracle;
pub mod random;
pub mod script;
pub mod space;

pub use algebra::{
    fibre_product, naive_theta_join, paste_union, product, pullback_intersection, quotient,
    select_subspace, select_where, theta_join, Cospan, CyclePolicy, PairOptions, Partition,
    Quotient, Span, Subspace, ThetaRelation,
};
pub use error::{Error, Result};
pub use lod::{validate, validate_chain, Dataset, KeyMode, MapTable, ValidationReport};
pub use maps::{find_homeomorphism, is_homeomorphism, SpaceMap, Witness, DEFAULT_HOMEOMORPHISM_BOUND};
pub use space::{Attributes, ElementId, Space};
