//! `tsvar`: batch front-end for the time-scale variational engines.

pub mod commands;
pub mod problem;
pub mod report;

pub use commands::{run, CliError, Command, Expect, Options, Outcome};
pub use problem::{load_problem, parse_problem, Format, LoadError, ProblemFile};
pub use report::Report;
