//! Cohen–Lenstra statistics for cokernels of random `(n+u) × n` matrices
//! over the p-adic integers.
//!
//! - [`pgroup`]: exact counts (automorphisms, Hom, Sur, subgroups) for
//!   finite abelian p-groups given by partitions.
//! - [`oracle`]: brute-force versions of the same counts on explicit groups.
//! - [`zpe`]: Smith normal form over `Z/p^e` and cokernel extraction.
//! - [`sampler`]: reproducible Haar sampling of matrices mod `p^e`.
//! - [`measure`]: the limiting cokernel distribution and moment predictions.
//! - [`experiment`]: Monte Carlo runs comparing the two, with JSON/CSV reports.

pub mod error;
pub mod experiment;

pub mod measure;
pub mod numeric;
pub mod oracle;
pub mod partition;
pub mod pgroup;
pub mod prime;
pub mod sampler;
pub mod stats;
pub mod verify;

pub mod zpe;

pub use error::{Error, Result};
pub use measure::CLMeasure;
pub use partition::Partition;
pub use prime::Prime;
pub use sampler::SampleSpec;
pub use zpe::{CokernelObservation, MatrixModPE};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
