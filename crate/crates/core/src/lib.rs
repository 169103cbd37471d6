//! Location-obfuscation mechanisms with geo-indistinguishability
//! guarantees.
//!
//! A mechanism is a row-stochastic channel `P(y|x)`: the probability of
//! reporting location `y` when the true location is `x`. The privacy
//! guarantee bounds the ratio of reporting probabilities from any two true
//! locations by `exp(eps * d)` of their distance; the quality measure is the
//! expected distance between the true and the reported location under a
//! prior. This crate builds the optimal such channel by linear programming,
//! and a near-optimal one much faster by generating privacy constraints only
//! between locations within a radius `R` and tightening them by the exact
//! dilation of the resulting graph, which provably implies the full
//! definition.
//!
//! ```
//! use geoind::prelude::*;
//!
//! let locs = build_grid(3, 3, 1.0)?;
//! let prior = uniform_prior(locs.len())?;
//! let eps = 2f64.ln() / 2.0;
//!
//! // Reduced constraints: edges within R = 1.98, tightened by the exact
//! // graph dilation.
//! let edges = build_edges(&locs, 1.98)?;
//! let dil = dilation(&locs, &edges)?;
//! let cs = reduced_constraints(&locs, &edges, dil.delta(), eps)?;
//!
//! let lp = assemble(&locs, &prior, &cs)?;
//! let (point, report) = solve_builtin(&lp, &SolveOptions::default())?;
//! let mech = from_solution(&point, &locs, eps)?;
//!
//! // The reduced program's solution satisfies the original definition,
//! // checked exhaustively.
//! let audit = verify_privacy(&mech, &locs, eps, 1e-7)?;
//! assert!(audit.satisfied);
//! assert!(report.objective_value > 0.0);
//! # Ok::<(), geoind::Error>(())
//! ```

pub mod error;
pub mod geometry;
pub mod lp;
pub mod mechanism;
pub mod simplex;
pub mod spanner;

pub use error::{Error, Result};

// Every Rust snippet in the guide compiles and runs under `cargo test`,
// keeping the book in sync with the code it documents.
#[cfg(doctest)]
#[doc(hidden)]
pub mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/locations.md")]
    pub mod locations {}
    #[doc = include_str!("../../../book/src/constraints.md")]
    pub mod constraints {}
    #[doc = include_str!("../../../book/src/reduction.md")]
    pub mod reduction {}
    #[doc = include_str!("../../../book/src/solving.md")]
    pub mod solving {}
    #[doc = include_str!("../../../book/src/mechanisms.md")]
    pub mod mechanisms {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}

/// One-stop imports for the common pipeline.
pub mod prelude {
    pub use crate::error::{Error, Result};
    pub use crate::geometry::{build_grid, load_prior, uniform_prior, LocationSet, Prior};
    pub use crate::lp::{
        assemble, export_lp, import_solution, write_solution, LinearProgram, SolveReport,
        SolveStatus, SolverKind,
    };
    pub use crate::mechanism::{
        from_solution, identity_mechanism, load_mechanism, sample, save_mechanism,
        uniform_mechanism, utility_loss, verify_privacy, Mechanism, PrivacyReport,
    };
    pub use crate::simplex::{solve_builtin, SolveOptions};
    pub use crate::spanner::{
        build_edges, dilation, exact_constraints, exact_row_count, implication_certificate,
        reduced_constraints, reduced_row_count, ConstraintKind, ConstraintSet, DilationResult,
        EdgeSet,
    };
}
