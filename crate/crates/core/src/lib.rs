//! Cluster synchronization analysis for directed, weighted, delayed
//! multilayer networks.
//!
//! The pipeline runs from a [`Network`] through its balanced partitions
//! ([`coloring`], [`isslattice`]), breaking vectors ([`breaking`]) and the
//! irreducible transform ([`irrtransform`]) to transverse Lyapunov exponents
//! computed by [`dynsim`]. Ready-made networks live in [`casestudies`].

pub mod breaking;
pub mod casestudies;
pub mod coloring;
pub mod dynsim;
pub mod error;
pub mod exec;
pub mod irrtransform;
pub mod isslattice;
pub mod netmodel;

pub use coloring::{is_balanced, minimal_balanced_coloring, quotient, Partition, QuotientNetwork};
pub use error::{Error, Result};
pub use exec::Execution;
pub use isslattice::{enumerate_balanced_partitions, PartitionLattice};
pub use netmodel::{load_network, parse_network, save_network, Layer, ModelSpec, Network};
