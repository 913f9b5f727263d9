//! Exact computations in model vector lattices: finite grids `C(K)`,
//! sequence models, eventually constant `ℓ∞` sequences, and their Fremlin
//! tensor grids.
//!
//! All arithmetic is over `BigRational`. Norms of `l2` models are carried
//! as exact squares.

pub mod convergence;
pub mod element;
pub mod error;
pub mod fremlin;
pub mod functional;
pub mod oracle;
pub mod rational;
pub mod space;
pub mod topology;
pub mod unit;
pub mod verdict;

pub use element::{Element, NormValue};
pub use error::{Error, Result};
pub use functional::Functional;
pub use rational::Rational;
pub use space::{Index, NormTag, Registry, Space, SpaceKind, SpaceRef};
pub use unit::UnitSpec;
pub use verdict::{Checkpoint, Status, TraceIndex, Verdict};
