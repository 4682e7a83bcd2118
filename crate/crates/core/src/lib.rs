pub mod belief;
pub mod classify;
pub mod cli;
pub mod design;
pub mod drift;
pub mod engine;
pub mod error;
pub mod export;
pub mod lab;
pub mod linalg;
pub mod lp;
pub mod problem;
pub mod rng;

pub use belief::{Belief, LogOdds};
pub use engine::{cumulative_regret, run_episode, Chain, Trajectory};
pub use error::{Error, Result};
pub use problem::{BanditProblem, ModelClass, TrueEnvironment};
pub use rng::RngStream;
