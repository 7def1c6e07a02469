//! First-order minimization on `C(V)` and on the mean-zero hyperplane.
//!
//! Gradients are taken with respect to the μ-weighted inner product
//! `⟨φ, ψ⟩ = ∫ φ ψ dμ`, so an Euler-Lagrange expression such as
//! `-Δ_p φ + kφ + f` is the gradient as written. The engine runs gradient
//! descent with Barzilai-Borwein trial steps and Armijo backtracking; every
//! accepted step strictly decreases the objective.

use thiserror::Error;

use crate::graph::{VertexFunction, WeightedGraph};
use crate::operators::{average, inner};
use crate::scalar::Real;

/// A smooth functional on `C(V)` with its μ-gradient.
pub trait Functional<T: Real> {
    fn graph(&self) -> &WeightedGraph<T>;

    fn value(&self, x: &VertexFunction<T>) -> T;

    /// Gradient with respect to `⟨φ, ψ⟩ = ∫ φ ψ dμ`.
    fn gradient(&self, x: &VertexFunction<T>) -> VertexFunction<T>;

    /// Domain guard. Line search shrinks any step that leaves the domain.
    fn admissible(&self, _x: &VertexFunction<T>) -> bool {
        true
    }

    /// `value(y) - value(x)`. Implementations may override this with a
    /// cancellation-free formula so that descent can be certified near the
    /// minimum, where the two values agree to machine precision.
    fn change(&self, x: &VertexFunction<T>, y: &VertexFunction<T>) -> T {
        self.value(y) - self.value(x)
    }

    /// Exact minimizing shift `t` of `x + t·1` along the constant direction,
    /// for functionals where it is available in closed form.
    fn translation_step(&self, _x: &VertexFunction<T>, _grad: &VertexFunction<T>) -> Option<T> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizeOptions<T> {
    /// Stop once `‖gradient‖_∞ ≤ grad_tol` (projected gradient on Λ).
    pub grad_tol: T,
    pub max_iters: usize,
    pub armijo_c: T,
    pub backtrack_factor: T,
    pub initial_step: T,
    pub project_mean_zero: bool,
    /// Backtracking halvings allowed per iteration before declaring failure.
    pub max_backtracks: usize,
}

impl<T: Real> Default for MinimizeOptions<T> {
    fn default() -> Self {
        Self {
            grad_tol: T::lit(1e-9),
            max_iters: 200_000,
            armijo_c: T::lit(1e-4),
            backtrack_factor: T::lit(0.5),
            initial_step: T::one(),
            project_mean_zero: false,
            max_backtracks: 120,
        }
    }
}

impl<T: Real> MinimizeOptions<T> {
    pub fn with_grad_tol(mut self, tol: T) -> Self {
        self.grad_tol = tol;
        self
    }

    pub fn mean_zero(mut self, on: bool) -> Self {
        self.project_mean_zero = on;
        self
    }

    fn validate(&self) -> Result<(), MinimizeError<T>> {
        let unit = |x: T| x > T::zero() && x < T::one();
        if !(self.grad_tol >= T::zero()) {
            return Err(MinimizeError::InvalidOptions("grad_tol must be nonnegative"));
        }
        if !unit(self.armijo_c) {
            return Err(MinimizeError::InvalidOptions("armijo_c must lie in (0, 1)"));
        }
        if !unit(self.backtrack_factor) {
            return Err(MinimizeError::InvalidOptions("backtrack_factor must lie in (0, 1)"));
        }
        if !(self.initial_step > T::zero() && self.initial_step.is_finite()) {
            return Err(MinimizeError::InvalidOptions("initial_step must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint<T> {
    pub iteration: usize,
    pub value: T,
    pub grad_norm: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimizeResult<T> {
    pub minimizer: VertexFunction<T>,
    /// Objective at the minimizer, accumulated from certified decreases.
    pub final_value: T,
    pub final_grad_norm: T,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<TracePoint<T>>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MinimizeError<T> {
    #[error("invalid minimizer options: {0}")]
    InvalidOptions(&'static str),
    #[error("starting point is outside the functional's domain")]
    InadmissibleStart,
    #[error("starting point has non-finite value or gradient")]
    NonFiniteStart,
    #[error("line search failed after {} iterations", .last.iterations)]
    LineSearchFailed { last: Box<MinimizeResult<T>> },
}

impl<T: Real> MinimizeError<T> {
    /// The last iterate, when the failure happened mid-run.
    pub fn last_iterate(&self) -> Option<&MinimizeResult<T>> {
        match self {
            Self::LineSearchFailed { last } => Some(last),
            _ => None,
        }
    }
}

/// Orthogonal projection onto `Λ = {φ : φ̄ = 0}`: returns `f - f̄`.
pub fn project_mean_zero<T: Real>(g: &WeightedGraph<T>, f: &VertexFunction<T>) -> VertexFunction<T> {
    let mean = average(g, f);
    f.map(|x| x - mean)
}

fn project_in_place<T: Real>(g: &WeightedGraph<T>, f: &mut VertexFunction<T>) {
    let mean = average(g, f);
    f.iter_mut().for_each(|x| *x = *x - mean);
}

fn projected_gradient<T: Real>(func: &impl Functional<T>, x: &VertexFunction<T>, project: bool) -> VertexFunction<T> {
    let mut grad = func.gradient(x);
    if project {
        project_in_place(func.graph(), &mut grad);
    }
    grad
}

/// Minimizes `func` from `x0`.
///
/// Returns `Ok` with `converged = false` if the iteration cap is hit, and
/// [`MinimizeError::LineSearchFailed`] carrying the last iterate if no step
/// satisfying the Armijo condition can be found.
pub fn minimize<T: Real, F: Functional<T>>(
    func: &F,
    x0: &VertexFunction<T>,
    opts: &MinimizeOptions<T>,
) -> Result<MinimizeResult<T>, MinimizeError<T>> {
    opts.validate()?;
    let g = func.graph();
    let mut x = x0.clone();
    if opts.project_mean_zero {
        project_in_place(g, &mut x);
    }
    if !func.admissible(&x) {
        return Err(MinimizeError::InadmissibleStart);
    }
    let mut value = func.value(&x);
    let mut grad = projected_gradient(func, &x, opts.project_mean_zero);
    if !value.is_finite() || grad.iter().any(|v| !v.is_finite()) {
        return Err(MinimizeError::NonFiniteStart);
    }
    let mut grad_norm = grad.sup_norm();
    let mut trace = vec![TracePoint {
        iteration: 0,
        value,
        grad_norm,
    }];
    let mut step = opts.initial_step;
    let (step_min, step_max) = (T::lit(1e-14), T::lit(1e14));

    let finish = |x, value, grad_norm, iterations, converged, trace| MinimizeResult {
        minimizer: x,
        final_value: value,
        final_grad_norm: grad_norm,
        iterations,
        converged,
        trace,
    };

    for iter in 1..=opts.max_iters {
        if grad_norm <= opts.grad_tol {
            return Ok(finish(x, value, grad_norm, iter - 1, true, trace));
        }
        let slope = inner(g, &grad, &grad);
        let mut t = step;
        let mut accepted = None;
        for _ in 0..opts.max_backtracks {
            let mut y = x.zip_map(&grad, |xi, gi| xi - t * gi);
            if opts.project_mean_zero {
                project_in_place(g, &mut y);
            }
            if func.admissible(&y) {
                let change = func.change(&x, &y);
                if change.is_finite() && change <= -opts.armijo_c * t * slope {
                    accepted = Some((y, change));
                    break;
                }
            }
            t = t * opts.backtrack_factor;
        }
        let Some((mut y, mut change)) = accepted else {
            let last = finish(x, value, grad_norm, iter - 1, false, trace);
            return Err(MinimizeError::LineSearchFailed { last: Box::new(last) });
        };
        let mut new_grad = projected_gradient(func, &y, opts.project_mean_zero);
        if !opts.project_mean_zero {
            if let Some(shift) = func.translation_step(&y, &new_grad) {
                let z = y.map(|v| v + shift);
                let extra = func.change(&y, &z);
                if shift != T::zero() && extra <= T::zero() && func.admissible(&z) {
                    change = change + extra;
                    y = z;
                    new_grad = projected_gradient(func, &y, false);
                }
            }
        }
        // Barzilai-Borwein trial step for the next iteration.
        let s = y.zip_map(&x, |a, b| a - b);
        let dy = new_grad.zip_map(&grad, |a, b| a - b);
        let sy = inner(g, &s, &dy);
        step = if sy > T::zero() {
            (inner(g, &s, &s) / sy).max(step_min).min(step_max)
        } else {
            (t + t).min(step_max)
        };
        x = y;
        value = value + change;
        grad = new_grad;
        grad_norm = grad.sup_norm();
        trace.push(TracePoint {
            iteration: iter,
            value,
            grad_norm,
        });
    }
    let converged = grad_norm <= opts.grad_tol;
    Ok(finish(x, value, grad_norm, opts.max_iters, converged, trace))
}

/// Largest coordinate discrepancy between central finite differences of
/// `func` at `x` and the analytic μ-gradient converted to coordinates.
pub fn check_gradient<T: Real, F: Functional<T>>(func: &F, x: &VertexFunction<T>, h: T) -> T {
    let grad = func.gradient(x);
    let mu = func.graph().mu();
    let two = T::lit(2.0);
    (0..x.len())
        .map(|i| {
            let mut plus = x.clone();
            plus[i] = plus[i] + h;
            let mut minus = x.clone();
            minus[i] = minus[i] - h;
            let fd = (func.value(&plus) - func.value(&minus)) / (two * h);
            (fd - mu[i] * grad[i]).abs()
        })
        .fold(T::zero(), T::max)
}
