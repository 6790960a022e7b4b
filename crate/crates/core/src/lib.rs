//! Exact p-adic computations with Wach modules and filtered φ-modules of
//! two-dimensional crystalline representations of `G_{K_f}`, `K_f` the
//! unramified extension of `Q_p` of degree `f`.

pub mod error;
pub mod padic;
pub mod series;
pub mod characters;
pub mod reduction;
pub mod filtered;
pub mod families;
pub mod gamma;

pub use error::{Error, Result};
