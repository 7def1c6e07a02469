//! Inversion of `L = Δ_p - k` and the p-Poisson problem `Δ_p u = f̄ - f`.

use thiserror::Error;

use crate::energies::{InversionEnergy, PoissonEnergy};
use crate::graph::{GraphError, VertexFunction, WeightedGraph};
use crate::operators::{p_laplacian, Exponent};
use crate::scalar::Real;
use crate::variational::{minimize, MinimizeError, MinimizeOptions, MinimizeResult};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EllipticError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("k must be positive everywhere; k[{index}] = {value}")]
    NonpositiveK { index: usize, value: f64 },
    #[error("invalid options: {0}")]
    InvalidOptions(String),
}

/// `L = Δ_p - k` with `k > 0` everywhere.
#[derive(Debug, Clone)]
pub struct OperatorL<'a, T> {
    graph: &'a WeightedGraph<T>,
    p: Exponent<T>,
    k: VertexFunction<T>,
}

impl<'a, T: Real> OperatorL<'a, T> {
    pub fn new(graph: &'a WeightedGraph<T>, p: Exponent<T>, k: VertexFunction<T>) -> Result<Self, EllipticError> {
        graph.check_function(&k)?;
        if let Some(index) = k.iter().position(|&v| !(v > T::zero())) {
            return Err(EllipticError::NonpositiveK {
                index,
                value: k[index].as_f64(),
            });
        }
        Ok(Self { graph, p, k })
    }

    pub fn graph(&self) -> &'a WeightedGraph<T> {
        self.graph
    }

    pub fn p(&self) -> Exponent<T> {
        self.p
    }

    pub fn k(&self) -> &VertexFunction<T> {
        &self.k
    }

    /// `Lf = Δ_p f - k f`.
    pub fn apply(&self, f: &VertexFunction<T>) -> VertexFunction<T> {
        let lap = p_laplacian(self.graph, f, self.p);
        VertexFunction::new(
            lap.iter()
                .zip(f.iter().zip(self.k.iter()))
                .map(|(&l, (&x, &k))| l - k * x)
                .collect(),
        )
    }
}

/// `Δ_p f - k f`.
pub fn apply_l<T: Real>(op: &OperatorL<'_, T>, f: &VertexFunction<T>) -> VertexFunction<T> {
    op.apply(f)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EllipticOptions<T> {
    /// Target sup-norm residual; `None` picks `1e-8` for `p = 2` and `1e-6` otherwise.
    pub residual_tol: Option<T>,
    pub minimize: MinimizeOptions<T>,
    /// Initial iterate; zero when absent.
    pub start: Option<VertexFunction<T>>,
}

impl<T: Real> Default for EllipticOptions<T> {
    fn default() -> Self {
        Self {
            residual_tol: None,
            minimize: MinimizeOptions::default(),
            start: None,
        }
    }
}

impl<T: Real> EllipticOptions<T> {
    pub fn with_tol(tol: T) -> Self {
        Self {
            residual_tol: Some(tol),
            ..Default::default()
        }
    }

    pub fn starting_at(mut self, start: VertexFunction<T>) -> Self {
        self.start = Some(start);
        self
    }

    pub fn tolerance(&self, p: Exponent<T>) -> T {
        self.residual_tol.unwrap_or_else(|| default_residual_tol(p))
    }
}

pub fn default_residual_tol<T: Real>(p: Exponent<T>) -> T {
    if p.is_quadratic() {
        T::lit(1e-8)
    } else {
        T::lit(1e-6)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EllipticReport<T> {
    pub solution: VertexFunction<T>,
    pub residual_inf: T,
    pub iterations: usize,
    /// `residual_inf ≤ residual_tol`.
    pub converged: bool,
    pub residual_tol: T,
}

fn run<T: Real>(result: Result<MinimizeResult<T>, MinimizeError<T>>) -> Result<MinimizeResult<T>, EllipticError> {
    match result {
        Ok(r) => Ok(r),
        Err(MinimizeError::LineSearchFailed { last }) => Ok(*last),
        Err(e) => Err(EllipticError::InvalidOptions(e.to_string())),
    }
}

/// Solves `Δ_p u - k u = f` by minimizing `E`.
pub fn solve_l<T: Real>(
    op: &OperatorL<'_, T>,
    f: &VertexFunction<T>,
    opts: &EllipticOptions<T>,
) -> Result<EllipticReport<T>, EllipticError> {
    let g = op.graph;
    g.check_function(f)?;
    let tol = opts.tolerance(op.p);
    let energy = InversionEnergy {
        graph: g,
        p: op.p,
        k: &op.k,
        rhs: f,
    };
    let start = match &opts.start {
        Some(s) => {
            g.check_function(s)?;
            s.clone()
        }
        None => VertexFunction::zeros(g.num_vertices()),
    };
    let mopts = MinimizeOptions {
        grad_tol: tol,
        project_mean_zero: false,
        ..opts.minimize
    };
    let result = run(minimize(&energy, &start, &mopts))?;
    let u = result.minimizer;
    let residual_inf = op.apply(&u).distance(f);
    Ok(EllipticReport {
        converged: residual_inf <= tol,
        solution: u,
        residual_inf,
        iterations: result.iterations,
        residual_tol: tol,
    })
}

/// One instance of order preservation: if `Lf ≥ Lg` then `f ≤ g`.
///
/// Vacuously true when the hypothesis fails.
pub fn order_preservation_check<T: Real>(op: &OperatorL<'_, T>, f: &VertexFunction<T>, g: &VertexFunction<T>) -> bool {
    let (lf, lg) = (op.apply(f), op.apply(g));
    let hyp_slack = T::lit(1e-12);
    let concl_slack = T::lit(1e-9);
    let hypothesis = lf.iter().zip(lg.iter()).all(|(&a, &b)| a >= b - hyp_slack);
    !hypothesis || f.iter().zip(g.iter()).all(|(&a, &b)| a <= b + concl_slack)
}

/// Solves `Δ_p u = f̄ - f`, normalized to `ū = 0`.
pub fn solve_p_poisson<T: Real>(
    graph: &WeightedGraph<T>,
    p: Exponent<T>,
    f: &VertexFunction<T>,
    opts: &EllipticOptions<T>,
) -> Result<EllipticReport<T>, EllipticError> {
    graph.check_function(f)?;
    let tol = opts.tolerance(p);
    let energy = PoissonEnergy::new(graph, p, f);
    let start = match &opts.start {
        Some(s) => {
            graph.check_function(s)?;
            s.clone()
        }
        None => VertexFunction::zeros(graph.num_vertices()),
    };
    let mopts = MinimizeOptions {
        grad_tol: tol,
        project_mean_zero: true,
        ..opts.minimize
    };
    let result = run(minimize(&energy, &start, &mopts))?;
    let u = result.minimizer;
    let lap = p_laplacian(graph, &u, p);
    let residual_inf = lap
        .iter()
        .zip(energy.source())
        .map(|(&l, &s)| (l - s).abs())
        .fold(T::zero(), T::max);
    Ok(EllipticReport {
        converged: residual_inf <= tol,
        solution: u,
        residual_inf,
        iterations: result.iterations,
        residual_tol: tol,
    })
}
