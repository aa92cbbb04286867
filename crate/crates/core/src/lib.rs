//! Discrete Gabor frames on a cyclic grid: Walnut-form frame operators,
//! weighted amalgam norms, bracket products, and dual/tight window computation.

pub mod amalgam;
pub mod bracket;
pub mod diagnostics;
pub mod error;
pub mod frame_op;
pub mod grid;
pub mod invert;
pub mod linalg;
pub mod weight;
pub mod window;

pub use error::{GaborError, Result};
pub use grid::{build_grid, inner_product, signed_index, signed_order, tf_shift, GaborLattice, Grid, Signal};
pub use weight::Weight;
pub use window::WindowSpec;
