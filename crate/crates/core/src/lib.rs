//! The p-Laplacian on finite weighted graphs and the Kazdan-Warner equation
//! `Δ_p u = c - h e^u`.
//!
//! Everything numeric is generic over [`scalar::Real`] (`f32` or `f64`); the
//! aliases below fix `f64`, which is what the file formats use.

pub mod analysis;
pub mod elliptic;
pub mod energies;
pub mod graph;
pub mod io;
pub mod kw;
pub mod operators;
pub mod scalar;
pub mod variational;

pub use elliptic::{solve_l, solve_p_poisson, EllipticOptions, EllipticReport, OperatorL};
pub use graph::{Edge, EdgeFunction, GraphError, VertexFunction, WeightedGraph};
pub use kw::{precheck, solve, Case, KwOptions, KwProblem, SolvabilityVerdict, SolveReport, Status};
pub use operators::{dirichlet_energy, p_laplacian, pairing_form, Exponent};
pub use scalar::Real;
pub use variational::{minimize, Functional, MinimizeOptions, MinimizeResult};

pub type Graph = WeightedGraph<f64>;
pub type Function = VertexFunction<f64>;
pub type P = Exponent<f64>;
pub type Problem<'a> = KwProblem<'a, f64>;
pub type Options = KwOptions<f64>;
pub type Report = SolveReport<f64>;
