pub mod capacity;
pub mod domain;
pub mod error;
pub mod kernels;
pub mod lab;
pub mod local;
pub mod operator;
pub mod par;
pub mod potentials;
pub mod quad;
pub mod reduced;
pub mod solver;
pub mod trace;
pub mod verdict;

pub use error::{Error, Result};
