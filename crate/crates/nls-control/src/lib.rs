#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod carleman;
pub mod error;
pub mod evolution;
pub mod experiment;
pub mod fit;
pub mod gcc;
pub mod hum;
pub mod io;
pub mod quadrature;
pub mod sphere;
pub mod steering;
pub mod torus;
pub mod trajectory;
pub mod xsb;

pub use error::{Error, Result};
