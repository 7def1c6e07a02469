//! The case `c = 0`: minimize `(1/p) D(f)` over `{f̄ = 0, ∫ h e^f dμ = 0}`.

use crate::graph::{VertexFunction, WeightedGraph};
use crate::operators::{dirichlet_energy, dirichlet_energy_change, integral, p_laplacian, Exponent};
use crate::scalar::Real;
use crate::variational::{minimize, Functional, MinimizeOptions};

use super::{last_or_err, residual, spread, Case, KwError, KwOptions, KwProblem, SolveReport};

/// `(1/p) D(f) - ν g(f) + (ρ/2) g(f)²` with `g(f) = ∫ h e^f dμ`.
#[derive(Debug, Clone)]
pub struct AugmentedLagrangian<'a, T> {
    pub graph: &'a WeightedGraph<T>,
    pub p: Exponent<T>,
    pub h: &'a [T],
    pub nu: T,
    pub rho: T,
}

impl<T: Real> AugmentedLagrangian<'_, T> {
    /// `g(f) = ∫ h e^f dμ`.
    pub fn constraint(&self, f: &[T]) -> T {
        let w: Vec<T> = f.iter().zip(self.h).map(|(&x, &h)| h * x.exp()).collect();
        integral(self.graph, &w)
    }
}

impl<T: Real> Functional<T> for AugmentedLagrangian<'_, T> {
    fn graph(&self) -> &WeightedGraph<T> {
        self.graph
    }

    fn value(&self, x: &VertexFunction<T>) -> T {
        let g = self.constraint(x);
        dirichlet_energy(self.graph, x, self.p) / self.p.get() - self.nu * g + T::lit(0.5) * self.rho * g * g
    }

    fn gradient(&self, x: &VertexFunction<T>) -> VertexFunction<T> {
        let weight = self.nu - self.rho * self.constraint(x);
        let lap = p_laplacian(self.graph, x, self.p);
        VertexFunction::new(
            lap.iter()
                .zip(x.iter().zip(self.h))
                .map(|(&l, (&f, &h))| -l - weight * h * f.exp())
                .collect(),
        )
    }

    fn change(&self, x: &VertexFunction<T>, y: &VertexFunction<T>) -> T {
        let gx = self.constraint(x);
        let dw: Vec<T> = x
            .iter()
            .zip(y.iter())
            .zip(self.h)
            .map(|((&a, &b), &h)| h * a.exp() * (b - a).exp_m1())
            .collect();
        let dg = integral(self.graph, &dw);
        let gy = gx + dg;
        dirichlet_energy_change(self.graph, x, y, self.p) / self.p.get() - self.nu * dg
            + T::lit(0.5) * self.rho * dg * (gx + gy)
    }
}

/// Solves with `c = 0` through an augmented-Lagrangian outer loop.
///
/// The constrained minimizer `f` satisfies `Δ_p f = -ν h e^f`, so
/// `u = f + ln ν` solves the equation and `λ = p ν`.
pub fn solve_c_zero<T: Real>(prob: &KwProblem<'_, T>, opts: &KwOptions<T>) -> Result<SolveReport<T>, KwError> {
    let g = prob.graph;
    let tol = opts.tolerance(prob.p);
    let verdict = super::precheck(prob);
    let n = g.num_vertices();
    let inner = MinimizeOptions {
        grad_tol: tol * T::lit(0.01),
        project_mean_zero: true,
        ..opts.minimize
    };
    let mut f = VertexFunction::zeros(n);
    let mut nu = T::zero();
    let mut rho = opts.al_initial_penalty;
    let mut iterations = 0;
    let mut last_failure = String::from("augmented-Lagrangian budget exhausted");
    let mut best: Option<(VertexFunction<T>, T)> = None;

    for _ in 0..opts.al_rounds {
        let al = AugmentedLagrangian {
            graph: g,
            p: prob.p,
            h: &prob.h,
            nu,
            rho,
        };
        let r = last_or_err(minimize(&al, &f, &inner))?;
        iterations += r.iterations;
        f = r.minimizer;
        let gval = al.constraint(&f);
        nu = nu - rho * gval;
        rho = rho * opts.al_penalty_growth;
        if !gval.is_finite() || !nu.is_finite() {
            last_failure = "augmented-Lagrangian iterate diverged".into();
            break;
        }
        match recover(prob, &f, opts) {
            Ok((nu_rec, u, res)) => {
                if best.as_ref().is_none_or(|(_, b)| res < *b) {
                    best = Some((u.clone(), res));
                }
                if res <= tol {
                    return Ok(SolveReport {
                        solution: Some(u),
                        residual_inf: res,
                        residual_tol: tol,
                        case: Case::CZero,
                        multiplier: Some(prob.p.get() * nu_rec),
                        iterations,
                        monotone_trace: None,
                        converged: true,
                        verdict,
                        failure: None,
                    });
                }
                last_failure = format!(
                    "constraint ∫h·e^f = 0 not met to tolerance (|g| = {:e}, residual {:e})",
                    gval.abs().as_f64(),
                    res.as_f64()
                );
            }
            Err(why) => last_failure = why,
        }
    }
    let mut report = SolveReport::failed(Case::CZero, verdict, tol, last_failure);
    report.iterations = iterations;
    if let Some((_, res)) = best {
        report.residual_inf = res;
    }
    Ok(report)
}

/// Recovers `ν` from stationarity and returns `(ν, u, residual)`.
fn recover<T: Real>(
    prob: &KwProblem<'_, T>,
    f: &VertexFunction<T>,
    opts: &KwOptions<T>,
) -> Result<(T, VertexFunction<T>, T), String> {
    let lap = p_laplacian(prob.graph, f, prob.p);
    let weights: Vec<T> = f.iter().zip(prob.h.iter()).map(|(&x, &h)| h * x.exp()).collect();
    let anchor = (0..weights.len())
        .max_by(|&a, &b| weights[a].abs().partial_cmp(&weights[b].abs()).expect("finite weights"))
        .expect("graph is nonempty");
    let nu = -lap[anchor] / weights[anchor];
    if !(nu > T::zero()) || !nu.is_finite() {
        return Err(format!("recovered multiplier λ/p = {:e} is not positive", nu.as_f64()));
    }
    let cut = opts.multiplier_threshold * prob.h.sup_norm();
    let estimates: Vec<T> = (0..f.len())
        .filter(|&i| prob.h[i].abs() >= cut)
        .map(|i| -lap[i] / weights[i])
        .collect();
    let (_, rel) = spread(&estimates, nu);
    let u = f.map(|x| x + nu.ln());
    let res = residual(prob, &u).sup_norm();
    if !(rel <= opts.multiplier_spread_tol) {
        return Err(format!(
            "multiplier spread {:e} exceeds {:e}",
            rel.as_f64(),
            opts.multiplier_spread_tol.as_f64()
        ));
    }
    Ok((nu, u, res))
}
