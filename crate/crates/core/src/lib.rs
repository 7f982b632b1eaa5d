//! Rigid cooperative manipulation through distance-and-bearing rigidity.
//!
//! Grasp and rigidity matrices, interaction and internal forces from Gauss's
//! principle, an internal-force-free tracking controller with a Lie-group RK4
//! simulator, and a randomized verification battery. The guide in `book/` walks
//! through the concepts with runnable examples.

// negated comparisons reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod control;
pub mod dynamics;
pub mod error;
pub mod forces;
pub mod grasp;
pub mod linalg;
pub mod pose;
pub mod report;
pub mod rigidity;
pub mod sim;
pub mod system;
pub mod verify;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/rigidity.md")]
    mod rigidity {}
    #[doc = include_str!("../../../book/src/grasp.md")]
    mod grasp {}
    #[doc = include_str!("../../../book/src/internal_forces.md")]
    mod internal_forces {}
    #[doc = include_str!("../../../book/src/control.md")]
    mod control {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
