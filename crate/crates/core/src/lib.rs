// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adaptivity;
pub mod cases;
pub mod error;
pub mod estimators;
pub mod fem;
pub mod harness;
pub mod linalg;
pub mod mesh;
pub mod projection;
pub mod recovery;
pub mod splitting;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/meshes.md")]
    mod meshes {}
    #[doc = include_str!("../../../book/src/projection.md")]
    mod projection {}
    #[doc = include_str!("../../../book/src/solving.md")]
    mod solving {}
    #[doc = include_str!("../../../book/src/adaptivity.md")]
    mod adaptivity {}
    #[doc = include_str!("../../../book/src/studies.md")]
    mod studies {}
}
