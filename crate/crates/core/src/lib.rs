pub mod analysis;
pub mod attribution;
pub mod corpus;
pub mod error;
pub mod experiments;
pub mod generator;
pub mod io;
pub mod lm;
pub mod nglm;
pub mod pipeline;
pub mod rnnlm;
pub mod seeding;

pub use error::{Error, Result};
