#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod components;
pub mod era;
pub mod error;
pub mod frames;
pub mod io;
pub mod network;
pub mod poly;
pub mod rational;
pub mod stability;
pub mod statespace;
pub mod tfmatrix;

pub use error::{Error, Result};
pub use poly::Polynomial;
pub use rational::RationalFunction;
pub use tfmatrix::TFMatrix;
