mod bitset;
pub mod coords;
pub mod decomposition;
pub mod error;
pub mod json;
pub mod learn;
pub mod mi;
pub mod par;
pub mod poset;
pub mod projection;
pub mod scan;
pub mod significance;

pub use coords::Distribution;
pub use error::{Error, Result};
pub use par::Parallelism;
pub use poset::{ElementId, Poset};
pub use projection::{SolverConfig, Subset};
