//! Kernels, solvers and checks for the Dirichlet problem of the memory
//! operator `u_t - eps u_xx + a u + b int_0^t exp(-beta (t - tau)) u d tau`
//! on a strip, and for the shaped Josephson junction that reduces to it.
//!
//! Start with [`solver::solve_linear`] or [`esjj::solve_esjj`]; the book in
//! `book/` walks through the pieces.

pub mod checks;
pub mod error;
pub mod esjj;
pub mod fd;
pub mod kernel;
mod modes;
mod quadrature;
pub mod solver;
pub mod special;
pub mod theta;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/kernel.md")]
    mod kernel {}
    #[doc = include_str!("../../../book/src/strip.md")]
    mod strip {}
    #[doc = include_str!("../../../book/src/solving.md")]
    mod solving {}
    #[doc = include_str!("../../../book/src/junction.md")]
    mod junction {}
    #[doc = include_str!("../../../book/src/long_time.md")]
    mod long_time {}
    #[doc = include_str!("../../../book/src/checks.md")]
    mod checks {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
