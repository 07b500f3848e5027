//! Exact arithmetic for unramified p-adic rings and the combinatorics that
//! lives on top of them, at sizes where every answer can be enumerated and
//! checked.
//!
//! The crate is organized bottom-up:
//!
//! * [`ring`] — finite fields `F_q` (`q = p^d`) and the rings `O/p^N` where
//!   `O = W(F_q)` is the ring of Witt vectors of `F_q` (equivalently, Galois
//!   rings `GR(p^N, d)`), with Teichmüller representatives and digit
//!   expansions.
//! * [`wittlaws`] — the universal addition/multiplication polynomials for
//!   truncated Witt vectors, derived from ghost components over arbitrary
//!   precision integers, and Witt vector arithmetic over `F_q`.
//! * [`partitions`] — integer partitions with the dominance (majorization)
//!   order, computed by four independent characterizations.
//! * [`lattice`] — canonical (Howell) forms for submodules of `(O/p^c)^n`,
//!   Smith normal form over `O/p^N`, cokernel types, and lattice sums,
//!   intersections and membership.
//! * [`grassmannian`] — exhaustive enumeration of lattices in a valuation
//!   window and exact stratum counts by cokernel type.
//! * [`demazure`] — chains of lattices with prescribed graded dimensions
//!   (Demazure-style resolutions), their fibers over single lattices, and
//!   Gaussian binomials.
//! * [`detline`] — graded determinant lines of finite torsion modules:
//!   maximal flagged chains, comparison scalars against a canonical
//!   Smith-adapted reference, and the Koszul sign rule.
//! * [`centralext`] — the tame symbol on a local field of residue field
//!   `F_q` and the determinant-line 2-cocycle on `SL_n` over that field,
//!   whose commutator pairing recovers the tame symbol.
//!
//! All arithmetic is exact; nothing is floating point. Enumerations are
//! guarded by an explicit work bound (see [`WorkBound`]) so that oversized
//! requests fail loudly instead of running forever.

pub mod ring;
pub mod wittlaws;
pub mod partitions;
pub mod lattice;
pub mod grassmannian;
pub mod demazure;
pub mod detline;
pub mod centralext;

use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum Error {
    /// Two elements from different ring contexts were combined.
    #[error("ring context mismatch: {0}")]
    CtxMismatch(String),
    /// Inversion (or unit-normalization) of a non-unit was requested.
    #[error("not a unit: {0}")]
    NotAUnit(String),
    /// A context parameter was out of range (p not prime, d or N zero, ...).
    #[error("invalid ring parameters: {0}")]
    BadParams(String),
    /// The requested answer is not determined at the precision carried by
    /// the inputs.
    #[error("precision insufficient: {0}")]
    Precision(String),
    /// Structural mismatch between arguments (dimensions, windows, shapes).
    #[error("shape mismatch: {0}")]
    Shape(String),
    /// A chain or filtration failed validation.
    #[error("invalid chain: {0}")]
    InvalidChain(String),
    /// An enumeration would exceed the configured work bound.
    #[error("work bound exceeded: {0}")]
    WorkBound(String),
    /// Exact division failed where the theory guarantees divisibility.
    /// This always signals an implementation bug, never bad input.
    #[error("exact divisibility violated: {0}")]
    Divisibility(String),
    /// Matrix input was singular where an invertible matrix was required.
    #[error("singular matrix: {0}")]
    Singular(String),
    /// The two group elements were required to commute but do not.
    #[error("elements do not commute")]
    NonCommuting,
    /// Arithmetic overflowed the fixed-width counter type.
    #[error("counter overflow: {0}")]
    Overflow(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Work bound for enumerations, measured in candidate rows / candidate
/// objects considered. The default is `10^8`; the environment variable
/// `WITTGRASS_WORKBOUND` overrides it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WorkBound(pub u128);

impl Default for WorkBound {
    fn default() -> Self {
        WorkBound(100_000_000)
    }
}

impl WorkBound {
    /// Default bound, overridden by the `WITTGRASS_WORKBOUND` environment
    /// variable when it parses as a positive integer.
    pub fn from_env() -> Self {
        match std::env::var("WITTGRASS_WORKBOUND") {
            Ok(s) => match s.trim().parse::<u128>() {
                Ok(v) if v > 0 => WorkBound(v),
                _ => WorkBound::default(),
            },
            Err(_) => WorkBound::default(),
        }
    }

    /// Fail with [`Error::WorkBound`] if `estimate` exceeds the bound.
    pub fn check(&self, estimate: u128, what: &str) -> Result<()> {
        if estimate > self.0 {
            Err(Error::WorkBound(format!(
                "{what}: estimated work {estimate} exceeds bound {}",
                self.0
            )))
        } else {
            Ok(())
        }
    }
}
