//! Cartan data, radial coordinates, slice densities and level dynamics on
//! the classical noncompact symmetric spaces.
//!
//! A space is chosen with [`spaces::make_space`]; everything else takes the
//! resulting [`spaces::SpaceDescriptor`].
//!
//! ```
//! use cartanflow::{make_space, Kind};
//! use cartanflow::reduction::{closed_form_density, density_constant, jacobian_density};
//! use cartanflow::slice::radial_decompose;
//!
//! let s = make_space(Kind::Aiii, 3, 2)?;
//! let x = cartanflow::sampling::sample_p_gaussian(&s, 7);
//! let d = radial_decompose(&s, &x)?;
//! let ratio = jacobian_density(&s, &d.q) / closed_form_density(&s, &d.q);
//! assert!((ratio / density_constant(&s)? - 1.0).abs() < 1e-8);
//! # Ok::<(), cartanflow::Error>(())
//! ```

pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod quadrature;
pub mod random;
pub mod reduction;
pub mod sampling;
pub mod slice;
pub mod spaces;

pub use error::{Error, Result};
pub use linalg::{Cmat, Rmat, C64};
pub use spaces::{make_space, Kind, SpaceDescriptor, Subspace};
