//! The case `c > 0`: minimize the reduced functional over mean-zero `g`.

use crate::graph::{VertexFunction, WeightedGraph};
use crate::operators::{average, dirichlet_energy, dirichlet_energy_change, integral, p_laplacian, Exponent};
use crate::scalar::Real;
use crate::variational::{minimize, project_mean_zero, Functional, MinimizeOptions};

use super::{last_or_err, multiplier_estimates, residual, spread, Case, KwError, KwOptions, KwProblem, SolveReport};

/// `J(g) = (1/p) D(g) - cV ln ∫ h e^g dμ + cV ln(cV)`, defined where `∫ h e^g dμ > 0`.
///
/// Evaluated as `J(g - ḡ)`, which agrees with `J` on the mean-zero hyperplane
/// and is exactly invariant under adding constants.
#[derive(Debug, Clone)]
pub struct ReducedFunctional<'a, T> {
    pub graph: &'a WeightedGraph<T>,
    pub p: Exponent<T>,
    pub c: T,
    pub h: &'a [T],
}

impl<T: Real> ReducedFunctional<'_, T> {
    /// `∫ h e^g dμ`.
    pub fn mass(&self, g: &[T]) -> T {
        let w: Vec<T> = g.iter().zip(self.h).map(|(&x, &h)| h * x.exp()).collect();
        integral(self.graph, &w)
    }

    fn cv(&self) -> T {
        self.c * self.graph.volume()
    }

    /// The constant `t(g)` with `∫ h e^{g + t} dμ = cV`.
    pub fn shift(&self, g: &[T]) -> T {
        self.cv().ln() - self.mass(g).ln()
    }
}

impl<T: Real> Functional<T> for ReducedFunctional<'_, T> {
    fn graph(&self) -> &WeightedGraph<T> {
        self.graph
    }

    fn value(&self, x: &VertexFunction<T>) -> T {
        let cv = self.cv();
        dirichlet_energy(self.graph, x, self.p) / self.p.get() - cv * self.mass(x).ln()
            + cv * cv.ln()
            + cv * average(self.graph, x)
    }

    fn gradient(&self, x: &VertexFunction<T>) -> VertexFunction<T> {
        let scale = self.cv() / self.mass(x);
        let lap = p_laplacian(self.graph, x, self.p);
        VertexFunction::new(
            lap.iter()
                .zip(x.iter().zip(self.h))
                .map(|(&l, (&g, &h))| self.c - l - scale * h * g.exp())
                .collect(),
        )
    }

    fn admissible(&self, x: &VertexFunction<T>) -> bool {
        let m = self.mass(x);
        m > T::zero() && m.is_finite()
    }

    fn change(&self, x: &VertexFunction<T>, y: &VertexFunction<T>) -> T {
        let mx = self.mass(x);
        let dw: Vec<T> = x
            .iter()
            .zip(y.iter())
            .zip(self.h)
            .map(|((&a, &b), &h)| h * a.exp() * (b - a).exp_m1())
            .collect();
        let dm = integral(self.graph, &dw);
        let dx: Vec<T> = x.iter().zip(y.iter()).map(|(&a, &b)| b - a).collect();
        let cv = self.cv();
        dirichlet_energy_change(self.graph, x, y, self.p) / self.p.get() - cv * (dm / mx).ln_1p()
            + cv * average(self.graph, &dx)
    }
}

/// An admissible mean-zero start: mass concentrated at `argmax h`.
fn admissible_start<T: Real>(j: &ReducedFunctional<'_, T>, h: &VertexFunction<T>) -> Option<VertexFunction<T>> {
    let n = h.len();
    let top = (0..n).max_by(|&a, &b| h[a].partial_cmp(&h[b]).expect("finite h"))?;
    let mut s = T::zero();
    for _ in 0..64 {
        let mut g = VertexFunction::zeros(n);
        g[top] = s;
        let g = project_mean_zero(j.graph, &g);
        if j.admissible(&g) {
            return Some(g);
        }
        s = if s == T::zero() { T::one() } else { s + s };
    }
    None
}

/// Solves with `c > 0`; the multiplier is `1` and is reported as recovered.
pub fn solve_c_positive<T: Real>(prob: &KwProblem<'_, T>, opts: &KwOptions<T>) -> Result<SolveReport<T>, KwError> {
    let tol = opts.tolerance(prob.p);
    let verdict = super::precheck(prob);
    if !(prob.c > T::zero()) || !(prob.h.max() > T::zero()) {
        return Err(KwError::Precondition("solve_c_positive needs c > 0 and max h > 0"));
    }
    let j = ReducedFunctional {
        graph: prob.graph,
        p: prob.p,
        c: prob.c,
        h: &prob.h,
    };
    let Some(start) = admissible_start(&j, &prob.h) else {
        return Ok(SolveReport::failed(
            Case::CPositive,
            verdict,
            tol,
            "no admissible start with ∫h·e^g > 0",
        ));
    };
    let mopts = MinimizeOptions {
        grad_tol: tol,
        project_mean_zero: true,
        ..opts.minimize
    };
    let r = last_or_err(minimize(&j, &start, &mopts))?;
    let shift = j.shift(&r.minimizer);
    let u = r.minimizer.map(|x| x + shift);
    let res = residual(prob, &u).sup_norm();
    let estimates = multiplier_estimates(prob, &u, opts.multiplier_threshold);
    let (lambda, _) = spread(&estimates, T::one());
    let converged = res <= tol;
    Ok(SolveReport {
        solution: converged.then(|| u),
        residual_inf: res,
        residual_tol: tol,
        case: Case::CPositive,
        multiplier: Some(lambda),
        iterations: r.iterations,
        monotone_trace: None,
        converged,
        verdict,
        failure: (!converged).then(|| format!("residual {:e} above tolerance {:e}", res.as_f64(), tol.as_f64())),
    })
}
