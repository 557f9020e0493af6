pub mod acceptance;
pub mod cli;
pub mod combinatorics;
pub mod error;
pub mod identities;
pub mod measure;
pub mod moments;
pub mod numeric;
pub mod profiler;
pub mod special;

pub use error::{LabError, Result};
