//! The Kazdan-Warner equation `Δ_p u = c - h e^u`.
//!
//! [`solve`] runs the necessary-condition [`precheck`] and dispatches on the
//! sign of `c`: a constrained minimization for `c = 0`, a reduced
//! unconstrained functional for `c > 0`, and a monotone iteration between an
//! upper and a lower solution for `c < 0`.

use std::fmt;

use thiserror::Error;

use crate::elliptic::{default_residual_tol, EllipticError};
use crate::graph::{GraphError, VertexFunction, WeightedGraph};
use crate::operators::{average, p_laplacian, Exponent};
use crate::scalar::Real;
use crate::variational::{MinimizeError, MinimizeOptions, MinimizeResult};

mod negative;
mod positive;
mod zero;

pub use negative::{
    build_upper_solution_h_nonpositive, build_upper_solution_small_c, estimate_c_minus, lower_solution_level,
    small_c_parameters, solve_c_negative, upper_solution_defect, CMinusEstimate, SmallCParameters, UpperSolution,
    NONEXISTENCE_NOTE,
};
pub use positive::{solve_c_positive, ReducedFunctional};
pub use zero::{solve_c_zero, AugmentedLagrangian};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KwError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Elliptic(#[from] EllipticError),
    #[error("precondition violated: {0}")]
    Precondition(&'static str),
    #[error("internal check failed: {0}")]
    Internal(String),
    #[error("invalid options: {0}")]
    InvalidOptions(String),
}

/// One instance of `Δ_p u = c - h e^u`.
#[derive(Debug, Clone)]
pub struct KwProblem<'a, T> {
    pub graph: &'a WeightedGraph<T>,
    pub p: Exponent<T>,
    pub c: T,
    pub h: VertexFunction<T>,
}

impl<'a, T: Real> KwProblem<'a, T> {
    pub fn new(graph: &'a WeightedGraph<T>, p: Exponent<T>, c: T, h: VertexFunction<T>) -> Result<Self, KwError> {
        graph.check_function(&h)?;
        if !c.is_finite() {
            return Err(KwError::Precondition("c must be finite"));
        }
        Ok(Self { graph, p, c, h })
    }

    pub fn h_mean(&self) -> T {
        average(self.graph, &self.h)
    }

    /// The same problem with `h` replaced by `h e^{-s}`; solutions shift by `+s`.
    pub fn translated(&self, s: T) -> Self {
        let factor = (-s).exp();
        Self {
            h: self.h.map(|x| x * factor),
            ..self.clone()
        }
    }

    fn h_is_zero(&self) -> bool {
        self.h.iter().all(|&x| x == T::zero())
    }

    fn sign_case(&self) -> Case {
        if self.c > T::zero() {
            Case::CPositive
        } else if self.c < T::zero() {
            Case::CNegative
        } else {
            Case::CZero
        }
    }
}

/// `h e^u`, exactly zero where `h` vanishes even if `e^u` overflows.
pub(crate) fn h_exp<T: Real>(h: T, u: T) -> T {
    if h == T::zero() {
        T::zero()
    } else {
        h * u.exp()
    }
}

/// `Δ_p u - c + h e^u`.
pub fn residual<T: Real>(prob: &KwProblem<'_, T>, u: &VertexFunction<T>) -> VertexFunction<T> {
    let lap = p_laplacian(prob.graph, u, prob.p);
    VertexFunction::new(
        lap.iter()
            .zip(u.iter().zip(prob.h.iter()))
            .map(|(&l, (&ui, &hi))| l - prob.c + h_exp(hi, ui))
            .collect(),
    )
}

pub fn verify<T: Real>(prob: &KwProblem<'_, T>, u: &VertexFunction<T>, tol: T) -> bool {
    u.len() == prob.graph.num_vertices() && residual(prob, u).sup_norm() <= tol
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Solvable,
    Unsolvable,
    Unknown,
}

/// The condition a verdict rests on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Condition {
    ZeroDataConstants,
    ChangesSignNegativeMean,
    NoSignChange,
    NonnegativeMean,
    PositiveSomewhere,
    NowherePositive,
    NonpositiveNonzero,
    DependsOnCMinus,
}

impl Condition {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::ZeroDataConstants => "h ≡ 0 and c = 0: constants solve",
            Self::ChangesSignNegativeMean => "h changes sign and h̄ < 0",
            Self::NoSignChange => "h does not change sign",
            Self::NonnegativeMean => "h̄ ≥ 0",
            Self::PositiveSomewhere => "h is positive somewhere",
            Self::NowherePositive => "h ≤ 0 everywhere with c > 0",
            Self::NonpositiveNonzero => "h ≤ 0 and h ≢ 0",
            Self::DependsOnCMinus => "h̄ < 0 but h is positive somewhere: depends on c versus c₋(h)",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolvabilityVerdict {
    pub status: Status,
    pub reason: Condition,
}

impl SolvabilityVerdict {
    fn new(status: Status, reason: Condition) -> Self {
        Self { status, reason }
    }
}

/// Necessary-condition checks. `Unsolvable` is returned only when a
/// necessary condition fails.
pub fn precheck<T: Real>(prob: &KwProblem<'_, T>) -> SolvabilityVerdict {
    use Condition::*;
    use Status::*;
    let zero = T::zero();
    let hmax = prob.h.max();
    let hmin = prob.h.min();
    let mean = prob.h_mean();
    match prob.sign_case() {
        Case::CZero if prob.h_is_zero() => SolvabilityVerdict::new(Solvable, ZeroDataConstants),
        Case::CZero if !(hmax > zero && hmin < zero) => SolvabilityVerdict::new(Unsolvable, NoSignChange),
        Case::CZero if mean >= zero => SolvabilityVerdict::new(Unsolvable, NonnegativeMean),
        Case::CZero => SolvabilityVerdict::new(Solvable, ChangesSignNegativeMean),
        Case::CPositive if hmax > zero => SolvabilityVerdict::new(Solvable, PositiveSomewhere),
        Case::CPositive => SolvabilityVerdict::new(Unsolvable, NowherePositive),
        Case::CNegative if mean >= zero => SolvabilityVerdict::new(Unsolvable, NonnegativeMean),
        Case::CNegative if hmax <= zero => SolvabilityVerdict::new(Solvable, NonpositiveNonzero),
        Case::CNegative => SolvabilityVerdict::new(Unknown, DependsOnCMinus),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Case {
    CZero,
    CPositive,
    CNegative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport<T> {
    pub solution: Option<VertexFunction<T>>,
    /// Residual of the returned solution, or of the last candidate on failure
    /// (infinite when there was none).
    pub residual_inf: T,
    pub residual_tol: T,
    pub case: Case,
    /// `λ` of the constrained formulations (`c ≥ 0`).
    pub multiplier: Option<T>,
    pub iterations: usize,
    /// `‖u_n - u_final‖_∞` along the monotone iteration (`c < 0`).
    pub monotone_trace: Option<Vec<T>>,
    pub converged: bool,
    pub verdict: SolvabilityVerdict,
    /// Why the solve failed, when it did.
    pub failure: Option<String>,
}

impl<T: Real> SolveReport<T> {
    fn failed(case: Case, verdict: SolvabilityVerdict, tol: T, why: impl Into<String>) -> Self {
        Self {
            solution: None,
            residual_inf: T::infinity(),
            residual_tol: tol,
            case,
            multiplier: None,
            iterations: 0,
            monotone_trace: None,
            converged: false,
            verdict,
            failure: Some(why.into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KwOptions<T> {
    /// `None` picks `1e-8` for `p = 2` and `1e-6` otherwise.
    pub residual_tol: Option<T>,
    pub minimize: MinimizeOptions<T>,
    /// Augmented-Lagrangian rounds for `c = 0`.
    pub al_rounds: usize,
    pub al_initial_penalty: T,
    pub al_penalty_growth: T,
    /// Vertices with `|h_i| ≥ multiplier_threshold · max|h|` enter the multiplier cross-check.
    pub multiplier_threshold: T,
    pub multiplier_spread_tol: T,
    /// Slack in the strict inequalities of the upper-solution constructions.
    pub margin: T,
    pub step_tol: T,
    pub max_monotone_steps: usize,
    /// Residual target of each inner `L` solve, relative to `1 + ‖rhs‖_∞` and at most a tenth of the outer tolerance.
    pub inner_tol: T,
    /// Use `k = max(1, -h) e^{u₊}` in the monotone iteration instead of the
    /// smallest admissible `k = max(1, -h e^{u₊})`. Both keep the iteration
    /// monotone; the uniform choice contracts slowly where `h = 0` and `u₊` is large.
    pub uniform_coupling: bool,
    /// Allowed violation of monotonicity and of the upper-solution inequality.
    pub monotone_slack: T,
    /// Probe budget of [`estimate_c_minus`].
    pub c_minus_probes: usize,
}

impl<T: Real> Default for KwOptions<T> {
    fn default() -> Self {
        Self {
            residual_tol: None,
            minimize: MinimizeOptions::default(),
            al_rounds: 12,
            al_initial_penalty: T::one(),
            al_penalty_growth: T::lit(10.0),
            multiplier_threshold: T::lit(0.1),
            multiplier_spread_tol: T::lit(1e-4),
            margin: T::lit(0.1),
            step_tol: T::lit(1e-10),
            max_monotone_steps: 10_000,
            inner_tol: T::lit(1e-12),
            uniform_coupling: false,
            monotone_slack: T::lit(1e-9),
            c_minus_probes: 40,
        }
    }
}

impl<T: Real> KwOptions<T> {
    pub fn with_tol(tol: T) -> Self {
        Self {
            residual_tol: Some(tol),
            ..Default::default()
        }
    }

    pub fn tolerance(&self, p: Exponent<T>) -> T {
        self.residual_tol.unwrap_or_else(|| default_residual_tol(p))
    }
}

/// Uses the last iterate when the line search gives up.
fn last_or_err<T: Real>(r: Result<MinimizeResult<T>, MinimizeError<T>>) -> Result<MinimizeResult<T>, KwError> {
    match r {
        Ok(r) => Ok(r),
        Err(MinimizeError::LineSearchFailed { last }) => Ok(*last),
        Err(e) => Err(KwError::InvalidOptions(e.to_string())),
    }
}

/// `(mean, relative spread)` of per-vertex estimates.
fn spread<T: Real>(values: &[T], reference: T) -> (T, T) {
    let n = T::from_usize(values.len()).expect("count fits");
    let mean = values.iter().copied().sum::<T>() / n;
    let (lo, hi) = values.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    (mean, (hi - lo) / reference.abs())
}

/// Per-vertex `λ` in `Δ_p u = c - λ h e^u`, at vertices where `|h|` is large.
pub fn multiplier_estimates<T: Real>(prob: &KwProblem<'_, T>, u: &VertexFunction<T>, threshold: T) -> Vec<T> {
    let lap = p_laplacian(prob.graph, u, prob.p);
    let cut = threshold * prob.h.sup_norm();
    (0..u.len())
        .filter(|&i| prob.h[i].abs() >= cut && prob.h[i] != T::zero())
        .map(|i| (prob.c - lap[i]) / (prob.h[i] * u[i].exp()))
        .collect()
}

/// Solves `Δ_p u = c - h e^u` after the precheck.
pub fn solve<T: Real>(prob: &KwProblem<'_, T>, opts: &KwOptions<T>) -> Result<SolveReport<T>, KwError> {
    let verdict = precheck(prob);
    let tol = opts.tolerance(prob.p);
    let case = prob.sign_case();
    if verdict.status == Status::Unsolvable {
        return Ok(SolveReport::failed(
            case,
            verdict,
            tol,
            format!("necessary condition fails: {}", verdict.reason),
        ));
    }
    let mut report = match case {
        Case::CZero if prob.h_is_zero() => {
            let u = VertexFunction::zeros(prob.graph.num_vertices());
            SolveReport {
                residual_inf: residual(prob, &u).sup_norm(),
                solution: Some(u),
                residual_tol: tol,
                case,
                multiplier: None,
                iterations: 0,
                monotone_trace: None,
                converged: true,
                verdict,
                failure: None,
            }
        }
        Case::CZero => solve_c_zero(prob, opts)?,
        Case::CPositive => solve_c_positive(prob, opts)?,
        Case::CNegative => solve_c_negative(prob, opts)?,
    };
    report.verdict = verdict;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two(mu: [f64; 2]) -> WeightedGraph<f64> {
        WeightedGraph::with_indices(mu.to_vec(), [(0, 1, 1.0)]).unwrap()
    }

    fn prob<'a>(g: &'a WeightedGraph<f64>, p: f64, c: f64, h: &[f64]) -> KwProblem<'a, f64> {
        KwProblem::new(g, Exponent::new(p).unwrap(), c, VertexFunction::new(h.to_vec())).unwrap()
    }

    #[test]
    fn precheck_examples() {
        let g = two([1.0, 1.0]);
        let v = precheck(&prob(&g, 2.0, 0.0, &[1.0, -2.0]));
        assert_eq!(
            v,
            SolvabilityVerdict::new(Status::Solvable, Condition::ChangesSignNegativeMean)
        );
        let v = precheck(&prob(&g, 2.0, 1.0, &[-1.0, -1.0]));
        assert_eq!(
            v,
            SolvabilityVerdict::new(Status::Unsolvable, Condition::NowherePositive)
        );
        let v = precheck(&prob(&g, 2.0, -1.0, &[1.0, 1.0]));
        assert_eq!(
            v,
            SolvabilityVerdict::new(Status::Unsolvable, Condition::NonnegativeMean)
        );
        let v = precheck(&prob(&g, 2.0, 0.0, &[1.0, 1.0]));
        assert_eq!(v.reason.as_str(), "h does not change sign");
        assert_eq!(
            precheck(&prob(&g, 2.0, 0.0, &[1.0, -0.5])).reason,
            Condition::NonnegativeMean
        );
        assert_eq!(precheck(&prob(&g, 2.0, 0.0, &[0.0, 0.0])).status, Status::Solvable);
        assert_eq!(precheck(&prob(&g, 2.0, -1.0, &[0.0, -2.0])).status, Status::Solvable);
        assert_eq!(precheck(&prob(&g, 2.0, -1.0, &[1.0, -3.0])).status, Status::Unknown);
    }

    #[test]
    fn residual_examples() {
        let g = two([1.0, 1.0]);
        let z = VertexFunction::zeros(2);
        assert_eq!(*residual(&prob(&g, 2.0, 1.0, &[1.0, 1.0]), &z), [0.0, 0.0]);
        assert_eq!(*residual(&prob(&g, 2.0, 1.0, &[2.0, 2.0]), &z), [1.0, 1.0]);
        let ll2 = 2f64.ln().ln();
        let u = VertexFunction::new(vec![ll2, ll2 - 2f64.ln()]);
        assert!(verify(&prob(&g, 2.0, 0.0, &[1.0, -2.0]), &u, 1e-12));
    }

    #[test]
    fn trivial_constant_solutions() {
        let g = WeightedGraph::with_indices(vec![1.0, 2.0, 0.5], [(0, 1, 1.0), (1, 2, 2.0)]).unwrap();
        for p in [1.5, 2.0, 3.0] {
            let r = solve(&prob(&g, p, 1.0, &[1.0; 3]), &KwOptions::default()).unwrap();
            assert!(r.converged);
            assert!(r.solution.unwrap().sup_norm() <= 1e-6);
            let r = solve(&prob(&g, p, -1.0, &[-1.0; 3]), &KwOptions::default()).unwrap();
            assert!(r.converged, "{:?}", r.failure);
            assert!(r.solution.unwrap().sup_norm() <= 1e-6);
        }
    }

    #[test]
    fn unsolvable_report_carries_verdict() {
        let g = two([1.0, 1.0]);
        let r = solve(&prob(&g, 2.0, 0.0, &[1.0, 1.0]), &KwOptions::default()).unwrap();
        assert!(!r.converged);
        assert!(r.solution.is_none());
        assert_eq!(r.verdict.status, Status::Unsolvable);
    }

    #[test]
    fn zero_data_gives_zero() {
        let g = two([1.0, 1.0]);
        let r = solve(&prob(&g, 2.5, 0.0, &[0.0, 0.0]), &KwOptions::default()).unwrap();
        assert!(r.converged);
        assert_eq!(*r.solution.unwrap(), [0.0, 0.0]);
    }
}
