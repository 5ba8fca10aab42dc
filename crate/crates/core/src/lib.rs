//! Near-balanced incomplete block designs for assigning judges to posters.
//!
//! The crate covers the full workflow:
//!
//! - [`feasibility`]: why a balanced design is out of reach at poster-session
//!   scale, and the thresholds (`b_min`, `r_f`) the generators work with;
//! - [`generator`]: sequential NB1 / NB2 generators and the random baseline;
//! - [`design`]: the design data model and structural validators;
//! - [`mixedmodel`]: population marginal means under fixed or random judge
//!   effects (REML);
//! - [`simulation`]: the Monte Carlo comparison of the three designs;
//! - [`io`]: the CSV file formats, and [`cli`] for the `nbibd` binary.

pub mod cli;
pub mod design;
pub mod feasibility;
pub mod generator;
pub mod io;
pub mod mixedmodel;
pub mod rng;
pub mod simulation;
mod union_find;

pub use design::{
    is_connected, recount, validate, Block, Concurrence, Design, DesignConfig, ValidationReport,
};
pub use feasibility::{lambda_of, max_faculty_reviews, min_connect_blocks, required_blocks, Ratio};
pub use generator::{extend, generate, generate_random_baseline, GenerationTrace, GeneratorKind};
pub use mixedmodel::{fit_fixed, fit_random, rank_posters, FitResult, ModelKind, ScoreTable};
pub use simulation::{run_iteration, run_study, summarize_differences, synthesize_scores, SimParams, SimStudyReport};

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DesignError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("judge {judge}: {reason}")]
    MalformedBlock { judge: usize, reason: String },
    #[error("prefix length {prefix_len} outside 1..={blocks}")]
    InvalidPrefix { prefix_len: usize, blocks: usize },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenerateError {
    #[error(transparent)]
    Design(DesignError),
    #[error(
        "NB1 generation gave up after {restarts} restarts (t={t}, k={k}, b={b}, stuck at block {reached}); \
         these parameters probably admit no design with every pair meeting at most once"
    )]
    Nb1InfeasibleBudget {
        t: usize,
        k: usize,
        b: usize,
        restarts: usize,
        reached: usize,
    },
}

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("design is disconnected: poster effects are not estimable under fixed judge effects")]
    DisconnectedDesign,
    #[error("singular fit: {0}")]
    SingularFit(String),
    #[error("scores inconsistent with design: {0}")]
    InconsistentScores(String),
}
