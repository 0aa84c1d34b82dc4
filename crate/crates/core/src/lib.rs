//! Finite POVMs, their Berezin transforms and quantum channels, and the
//! spectral-gap machinery around them.

pub mod corpus;
pub mod cp1;
pub mod donaldson;
pub mod error;
pub mod group;
pub mod io;
pub mod noise;
pub mod operator;
pub mod povm;
pub mod spectral;

pub use error::{Error, Result};
pub use povm::{FinitePovm, ObservableFunction};
