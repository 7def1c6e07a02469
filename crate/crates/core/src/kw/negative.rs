//! The case `c < 0`: monotone iteration from an upper solution.

use crate::elliptic::{solve_l, solve_p_poisson, EllipticOptions, OperatorL};
use crate::graph::{VertexFunction, WeightedGraph};
use crate::operators::{average, Exponent};
use crate::scalar::{signed_pow, Real};

use super::{h_exp, precheck, residual, Case, KwError, KwOptions, KwProblem, SolveReport, Status};

/// Printed alongside every `c₋(h)` bracket.
pub const NONEXISTENCE_NOTE: &str = "failure to solve below c_solvable is not a certificate of non-existence";

/// Residual target for the auxiliary p-Poisson solve `Δ_p v = h̄ - h`.
const POISSON_TOL: f64 = 1e-10;

/// Sweep cap and stopping drop for [`tighten_upper`].
const TIGHTEN_SWEEPS: usize = 1000;
const TIGHTEN_DROP: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct UpperSolution<T> {
    pub u_plus: VertexFunction<T>,
    /// The scale `a` used in the construction.
    pub a: T,
}

/// Data of the small-`|c|` construction `u₊ = a v + (p-1) ln a`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmallCParameters<T> {
    /// Mean-zero solution of `Δ_p v = h̄ - h`.
    pub v: VertexFunction<T>,
    /// Largest `a` in `[1e-8, 1e8]` with `max_i |e^{a v_i} - 1| ≤ -h̄ / (2 max|h|)`.
    pub a_max: T,
    /// `C_h = (-h̄/2) a_max^{p-1}`; the construction covers `c ≥ -C_h`.
    pub c_h: T,
}

/// `max_i (Δ_p u - c + h e^u)_i`; an upper solution has this `≤ 0`.
pub fn upper_solution_defect<T: Real>(prob: &KwProblem<'_, T>, u: &VertexFunction<T>) -> T {
    residual(prob, u)
        .iter()
        .fold(T::neg_infinity(), |m, &r| if r.is_nan() { T::nan() } else { m.max(r) })
}

fn poisson_v<T: Real>(
    graph: &WeightedGraph<T>,
    p: Exponent<T>,
    h: &VertexFunction<T>,
    opts: &KwOptions<T>,
) -> Result<VertexFunction<T>, KwError> {
    let eopts = EllipticOptions {
        residual_tol: Some(T::lit(POISSON_TOL)),
        minimize: opts.minimize,
        start: None,
    };
    Ok(solve_p_poisson(graph, p, h, &eopts)?.solution)
}

/// Finds `a_max` and `C_h` for the small-`|c|` construction.
///
/// Returns `None` when even `a = 1e-8` is inadmissible or the admissibility
/// predicate is not monotone on a sample grid.
pub fn small_c_parameters<T: Real>(
    graph: &WeightedGraph<T>,
    p: Exponent<T>,
    h: &VertexFunction<T>,
    opts: &KwOptions<T>,
) -> Result<Option<SmallCParameters<T>>, KwError> {
    graph.check_function(h)?;
    let mean = average(graph, h);
    if !(mean < T::zero()) {
        return Err(KwError::Precondition("the construction needs h̄ < 0"));
    }
    let v = poisson_v(graph, p, h, opts)?;
    let bound = -mean / (T::lit(2.0) * h.sup_norm());
    let admissible = |a: T| v.iter().all(|&x| (a * x).exp_m1().abs() <= bound);
    let (mut lo, mut hi) = (T::lit(1e-8), T::lit(1e8));
    if !admissible(lo) {
        return Ok(None);
    }
    let a_max = if admissible(hi) {
        hi
    } else {
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if admissible(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi / lo - T::one() <= T::epsilon() * T::lit(4.0) {
                break;
            }
        }
        lo
    };
    let samples = 64;
    let ratio = (a_max / T::lit(1e-8)).ln();
    let monotone = (0..=samples).all(|k| {
        let t = T::from_usize(k).expect("small") / T::from_usize(samples).expect("small");
        admissible(T::lit(1e-8) * (ratio * t).exp().min(a_max / T::lit(1e-8)))
    });
    if !monotone {
        return Ok(None);
    }
    let c_h = -mean / T::lit(2.0) * a_max.powf(p.get() - T::one());
    Ok(Some(SmallCParameters { v, a_max, c_h }))
}

/// `u₊ = a v + (p-1) ln a` for `c ≥ -C_h`, verified pointwise before returning.
///
/// Uses the smallest `a` (up to the margin) that covers `c`, capped at `a_max`.
pub fn build_upper_solution_small_c<T: Real>(
    prob: &KwProblem<'_, T>,
    opts: &KwOptions<T>,
) -> Result<Option<UpperSolution<T>>, KwError> {
    if !(prob.c < T::zero()) {
        return Err(KwError::Precondition("the construction needs c < 0"));
    }
    let Some(params) = small_c_parameters(prob.graph, prob.p, &prob.h, opts)? else {
        return Ok(None);
    };
    Ok(small_c_from_parameters(prob, &params, opts))
}

fn small_c_from_parameters<T: Real>(
    prob: &KwProblem<'_, T>,
    params: &SmallCParameters<T>,
    opts: &KwOptions<T>,
) -> Option<UpperSolution<T>> {
    if prob.c < -params.c_h {
        return None;
    }
    let pm1 = prob.p.get() - T::one();
    let needed = (T::lit(2.0) * prob.c.abs() / -prob.h_mean()).powf(T::one() / pm1);
    let a = (needed * (T::one() + opts.margin)).min(params.a_max);
    let log_a = a.ln();
    let u_plus = params.v.map(|x| a * x + pm1 * log_a);
    (upper_solution_defect(prob, &u_plus) <= opts.monotone_slack).then_some(UpperSolution { u_plus, a })
}

/// `u₊ = a v + b` for `h ≤ 0`, `h ≢ 0`, verified pointwise before returning.
pub fn build_upper_solution_h_nonpositive<T: Real>(
    prob: &KwProblem<'_, T>,
    opts: &KwOptions<T>,
) -> Result<UpperSolution<T>, KwError> {
    let zero = T::zero();
    if !(prob.c < zero) || prob.h.iter().any(|&x| x > zero) || prob.h.iter().all(|&x| x == zero) {
        return Err(KwError::Precondition("the construction needs c < 0, h ≤ 0 and h ≢ 0"));
    }
    let up = nonpositive_candidate(prob, opts)?;
    check_upper(prob, up, opts)
}

fn nonpositive_candidate<T: Real>(prob: &KwProblem<'_, T>, opts: &KwOptions<T>) -> Result<UpperSolution<T>, KwError> {
    let pm1 = prob.p.get() - T::one();
    let v = poisson_v(prob.graph, prob.p, &prob.h, opts)?;
    let a = (prob.c / prob.h_mean()).powf(T::one() / pm1) * (T::one() + opts.margin);
    let b = pm1 * a.ln() - a * v.min() + opts.margin;
    Ok(UpperSolution {
        u_plus: v.map(|x| a * x + b),
        a,
    })
}

fn check_upper<T: Real>(
    prob: &KwProblem<'_, T>,
    up: UpperSolution<T>,
    opts: &KwOptions<T>,
) -> Result<UpperSolution<T>, KwError> {
    let defect = upper_solution_defect(prob, &up.u_plus);
    if !(defect <= opts.monotone_slack) {
        return Err(KwError::Internal(format!(
            "upper solution defect {:e} is positive",
            defect.as_f64()
        )));
    }
    Ok(up)
}

/// `ψ + b` with `Δ_p ψ = c(1+m) - q`, where `q` spreads `c(1+m)·Vol` over `{h < 0}`.
///
/// Where `h = 0` the inequality holds with slack `c m`; `b` makes it hold
/// where `h < 0`. Tracks the scale of the solution when `h` vanishes somewhere.
fn balanced_candidate<T: Real>(prob: &KwProblem<'_, T>, opts: &KwOptions<T>) -> Result<VertexFunction<T>, KwError> {
    let g = prob.graph;
    let target = prob.c * (T::one() + opts.margin);
    let support: T = g
        .mu()
        .iter()
        .zip(prob.h.iter())
        .filter(|(_, &h)| h < T::zero())
        .map(|(&m, _)| m)
        .sum();
    let level = target * g.volume() / support;
    let q = prob.h.map(|h| if h < T::zero() { level } else { T::zero() });
    let psi = poisson_v(g, prob.p, &q, opts)?;
    let b = psi
        .iter()
        .zip(prob.h.iter())
        .filter(|(_, &h)| h < T::zero())
        .map(|(&x, &h)| (level / h).ln() - x)
        .fold(T::neg_infinity(), T::max)
        + opts.margin;
    Ok(psi.map(|x| x + b))
}

/// Nonlinear Gauss-Seidel from above for `h ≤ 0`: each vertex drops to the root of its own residual.
///
/// Lowering `u_i` only lowers the residual at its neighbours, so every sweep
/// keeps `u` an upper solution while shrinking the coupling `k`.
fn tighten_upper<T: Real>(prob: &KwProblem<'_, T>, mut u: VertexFunction<T>) -> VertexFunction<T> {
    let g = prob.graph;
    let n = g.num_vertices();
    let p = prob.p.get();
    let mut adj = vec![Vec::new(); n];
    for e in g.edges() {
        adj[e.u].push((e.v, e.w));
        adj[e.v].push((e.u, e.w));
    }
    for _ in 0..TIGHTEN_SWEEPS {
        let mut drop = T::zero();
        for i in 0..n {
            let local = |u: &VertexFunction<T>, x: T| {
                let flux = adj[i]
                    .iter()
                    .fold(T::zero(), |s, &(j, w)| s + w * signed_pow(u[j] - x, p));
                flux / g.mu()[i] - prob.c + h_exp(prob.h[i], x)
            };
            let mut hi = u[i];
            if !(local(&u, hi) < T::zero()) {
                continue;
            }
            let mut step = T::one();
            while local(&u, hi - step) <= T::zero() && step < T::lit(1e12) {
                step = step + step;
            }
            let mut lo = hi - step;
            for _ in 0..200 {
                if hi - lo <= T::lit(4.0) * T::epsilon() * (T::one() + hi.abs()) {
                    break;
                }
                let mid = (lo + hi) / T::lit(2.0);
                if local(&u, mid) <= T::zero() {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            drop = drop.max(u[i] - hi);
            u[i] = hi;
        }
        if drop <= T::lit(TIGHTEN_DROP) {
            break;
        }
    }
    u
}

/// The constant upper solution `ln max_i (c / h_i)`, available when `h < 0` everywhere.
fn constant_upper<T: Real>(prob: &KwProblem<'_, T>) -> Option<T> {
    if prob.h.iter().all(|&x| x < T::zero()) {
        Some(prob.h.iter().map(|&x| prob.c / x).fold(T::zero(), T::max).ln())
    } else {
        None
    }
}

/// `A` in the lower solution `u₋ ≡ -A`, chosen below `u₊`.
pub fn lower_solution_level<T: Real>(prob: &KwProblem<'_, T>, u_plus: &VertexFunction<T>) -> T {
    let one = T::one();
    let from_h = prob
        .h
        .iter()
        .filter(|&&x| x < T::zero())
        .map(|&x| (x / prob.c).ln() + one)
        .fold(one, T::max);
    from_h.max(-u_plus.min() + one)
}

/// Solves with `c < 0` by `u_{n+1} = L⁻¹(c - h e^{u_n} - k u_n)` from an upper solution.
pub fn solve_c_negative<T: Real>(prob: &KwProblem<'_, T>, opts: &KwOptions<T>) -> Result<SolveReport<T>, KwError> {
    let zero = T::zero();
    if !(prob.c < zero) || !(prob.h_mean() < zero) {
        return Err(KwError::Precondition("solve_c_negative needs c < 0 and h̄ < 0"));
    }
    let upper = if prob.h.iter().all(|&x| x <= zero) {
        // The pointwise minimum of two upper solutions is again one.
        let mut up = nonpositive_candidate(prob, opts)?;
        let mut others = vec![balanced_candidate(prob, opts)?];
        if let Some(level) = constant_upper(prob) {
            others.push(VertexFunction::constant(up.u_plus.len(), level));
        }
        for other in others {
            if upper_solution_defect(prob, &other) <= opts.monotone_slack {
                up.u_plus = up.u_plus.zip_map(&other, |a, b| if a.is_nan() { b } else { a.min(b) });
            }
        }
        up.u_plus = tighten_upper(prob, up.u_plus);
        Some(check_upper(prob, up, opts)?)
    } else {
        build_upper_solution_small_c(prob, opts)?
    };
    monotone_iteration(prob, upper, opts)
}

fn monotone_iteration<T: Real>(
    prob: &KwProblem<'_, T>,
    upper: Option<UpperSolution<T>>,
    opts: &KwOptions<T>,
) -> Result<SolveReport<T>, KwError> {
    let tol = opts.tolerance(prob.p);
    let mut verdict = precheck(prob);
    let Some(UpperSolution { u_plus, .. }) = upper else {
        verdict.status = Status::Unknown;
        return Ok(SolveReport::failed(
            Case::CNegative,
            verdict,
            tol,
            "no upper solution found",
        ));
    };
    let defect = upper_solution_defect(prob, &u_plus);
    if !(defect <= opts.monotone_slack) {
        verdict.status = Status::Unknown;
        return Ok(SolveReport::failed(
            Case::CNegative,
            verdict,
            tol,
            format!("upper solution defect {:e}", defect.as_f64()),
        ));
    }
    let lower = -lower_solution_level(prob, &u_plus);
    let k = VertexFunction::new(
        prob.h
            .iter()
            .zip(u_plus.iter())
            .map(|(&h, &up)| {
                if opts.uniform_coupling {
                    T::one().max(-h) * up.exp()
                } else {
                    T::one().max(-h_exp(h, up))
                }
            })
            .collect(),
    );
    let op = OperatorL::new(prob.graph, prob.p, k.clone())?;
    let slack = opts.monotone_slack;
    let mut iterates = vec![u_plus.clone()];
    let mut u = u_plus;
    let mut failure = None;
    let mut converged_steps = false;
    for _ in 0..opts.max_monotone_steps {
        let rhs = VertexFunction::new(
            u.iter()
                .zip(prob.h.iter().zip(k.iter()))
                .map(|(&x, (&h, &k))| prob.c - h_exp(h, x) - k * x)
                .collect(),
        );
        let inner = EllipticOptions {
            residual_tol: Some((opts.inner_tol * (T::one() + rhs.sup_norm())).min(T::lit(0.1) * tol)),
            minimize: opts.minimize,
            start: Some(u.clone()),
        };
        let next = solve_l(&op, &rhs, &inner)?.solution;
        let rise = next
            .iter()
            .zip(u.iter())
            .map(|(&a, &b)| a - b)
            .fold(T::neg_infinity(), T::max);
        if rise > slack {
            failure = Some(format!("monotonicity violated: iterate rose by {:e}", rise.as_f64()));
            break;
        }
        if next.iter().any(|&x| x < lower - slack) {
            failure = Some("iterate fell below the lower solution".to_string());
            break;
        }
        let gap = next.distance(&u);
        u = next;
        iterates.push(u.clone());
        // Small steps leave a residual of about `k` times the step.
        let stalled = gap <= T::epsilon() * (T::one() + u.sup_norm());
        if gap <= opts.step_tol && (stalled || residual(prob, &u).sup_norm() <= tol) {
            converged_steps = true;
            break;
        }
    }
    let trace: Vec<T> = iterates.iter().map(|x| x.distance(&u)).collect();
    let iterations = iterates.len() - 1;
    let res = residual(prob, &u).sup_norm();
    if failure.is_none() && !converged_steps {
        failure = Some(format!("iteration cap of {} steps reached", opts.max_monotone_steps));
    }
    if failure.is_none() && !(res <= tol) {
        failure = Some(format!(
            "residual {:e} above tolerance {:e}",
            res.as_f64(),
            tol.as_f64()
        ));
    }
    let converged = failure.is_none();
    Ok(SolveReport {
        solution: converged.then_some(u),
        residual_inf: res,
        residual_tol: tol,
        case: Case::CNegative,
        multiplier: None,
        iterations,
        monotone_trace: Some(trace),
        converged,
        verdict,
        failure,
    })
}

/// A bracket on `c₋(h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CMinusEstimate<T> {
    /// Most negative probe with a residual-verified solution; `0` if none.
    pub c_solvable: T,
    /// Most negative failed probe; `-∞` if none failed.
    pub c_unresolved: T,
    pub probes: usize,
    pub note: &'static str,
}

/// Bisection over `c < 0` for the range the small-`|c|` construction certifies.
///
/// Returns `(-∞, -∞)` when `h ≤ 0`, where every `c < 0` is solvable.
pub fn estimate_c_minus<T: Real>(
    graph: &WeightedGraph<T>,
    p: Exponent<T>,
    h: &VertexFunction<T>,
    opts: &KwOptions<T>,
) -> Result<CMinusEstimate<T>, KwError> {
    graph.check_function(h)?;
    let zero = T::zero();
    if !(average(graph, h) < zero) {
        return Err(KwError::Precondition("c₋(h) is defined only for h̄ < 0"));
    }
    if h.iter().all(|&x| x <= zero) {
        return Ok(CMinusEstimate {
            c_solvable: T::neg_infinity(),
            c_unresolved: T::neg_infinity(),
            probes: 0,
            note: NONEXISTENCE_NOTE,
        });
    }
    let params = small_c_parameters(graph, p, h, opts)?;
    let mut probes = 0;
    let mut probe = |c: T| -> Result<bool, KwError> {
        probes += 1;
        let prob = KwProblem::new(graph, p, c, h.clone())?;
        let upper = params.as_ref().and_then(|pr| small_c_from_parameters(&prob, pr, opts));
        if upper.is_none() {
            return Ok(false);
        }
        let r = monotone_iteration(&prob, upper, opts)?;
        Ok(r.converged
            && r.solution
                .as_ref()
                .is_some_and(|u| residual(&prob, u).sup_norm() <= r.residual_tol))
    };
    let budget = opts.c_minus_probes.max(1);
    let mut good = zero;
    let mut bad: Option<T> = None;
    let mut c = -params.as_ref().map_or(T::one(), |pr| pr.c_h);
    let mut used = 0;
    while used < budget {
        used += 1;
        if probe(c)? {
            good = c;
            c = c + c;
        } else {
            bad = Some(c);
            break;
        }
    }
    if let Some(mut b) = bad {
        while used < budget && (good - b).abs() > T::lit(1e-6) * b.abs() {
            used += 1;
            let mid = (good + b) / T::lit(2.0);
            if probe(mid)? {
                good = mid;
            } else {
                b = mid;
            }
        }
        bad = Some(b);
    }
    Ok(CMinusEstimate {
        c_solvable: good,
        c_unresolved: bad.unwrap_or(T::neg_infinity()),
        probes,
        note: NONEXISTENCE_NOTE,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two() -> WeightedGraph<f64> {
        WeightedGraph::with_indices(vec![1.0, 1.0], [(0, 1, 1.0)]).unwrap()
    }

    fn prob<'a>(g: &'a WeightedGraph<f64>, p: f64, c: f64, h: &[f64]) -> KwProblem<'a, f64> {
        KwProblem::new(g, Exponent::new(p).unwrap(), c, VertexFunction::new(h.to_vec())).unwrap()
    }

    #[test]
    fn constant_negative_h() {
        let g = WeightedGraph::path(4).unwrap();
        for c in [-1.0, -4.0] {
            let r = solve_c_negative(&prob(&g, 2.0, c, &[-1.0; 4]), &KwOptions::default()).unwrap();
            assert!(r.converged, "{:?}", r.failure);
            let u = r.solution.unwrap();
            assert!(u.iter().all(|&x| (x - (-c as f64).ln()).abs() < 1e-6), "{u:?}");
            let t = r.monotone_trace.unwrap();
            assert!(t.windows(2).all(|w| w[1] <= w[0] + 1e-9));
        }
    }

    #[test]
    fn two_vertex_with_zero_in_h() {
        let g = two();
        let r = solve_c_negative(&prob(&g, 2.0, -1.0, &[0.0, -2.0]), &KwOptions::default()).unwrap();
        assert!(r.converged, "{:?}", r.failure);
        assert!(r.solution.unwrap().distance(&VertexFunction::new(vec![1.0, 0.0])) < 1e-5);
    }

    #[test]
    fn small_c_parameters_two_vertex() {
        let g = two();
        let h = VertexFunction::new(vec![1.0, -3.0]);
        let pr = small_c_parameters(&g, Exponent::new(2.0).unwrap(), &h, &KwOptions::default())
            .unwrap()
            .unwrap();
        assert!(pr.v.distance(&VertexFunction::new(vec![1.0, -1.0])) < 1e-9);
        let a = (7.0f64 / 6.0).ln();
        assert!((pr.a_max - a).abs() < 1e-8);
        assert!((pr.c_h - a / 2.0).abs() < 1e-8);
    }

    #[test]
    fn small_c_upper_solution_is_valid() {
        let g = two();
        let p = prob(&g, 2.0, -0.05, &[1.0, -3.0]);
        let up = build_upper_solution_small_c(&p, &KwOptions::default())
            .unwrap()
            .unwrap();
        assert!(upper_solution_defect(&p, &up.u_plus) <= 1e-9);
        assert!(
            build_upper_solution_small_c(&prob(&g, 2.0, -0.1, &[1.0, -3.0]), &KwOptions::default())
                .unwrap()
                .is_none()
        );
    }

    #[test]
    fn nonpositive_construction_examples() {
        let g = two();
        for margin in [0.1, 0.01] {
            let opts = KwOptions {
                margin,
                ..Default::default()
            };
            let p = prob(&g, 2.0, -1.0, &[0.0, -2.0]);
            let up = build_upper_solution_h_nonpositive(&p, &opts).unwrap();
            assert!(upper_solution_defect(&p, &up.u_plus) <= 1e-9);
        }
        let p = prob(&g, 2.0, -8.0, &[-1.0, -1.0]);
        let up = build_upper_solution_h_nonpositive(&p, &KwOptions::default()).unwrap();
        assert!(up.a > 8.0);
        assert!(up.u_plus.iter().all(|&x| x.exp() > 8.0));
        assert!(build_upper_solution_h_nonpositive(&prob(&g, 2.0, -1.0, &[1.0, -3.0]), &KwOptions::default()).is_err());
    }

    #[test]
    fn c_minus_sentinel_and_precondition() {
        let g = two();
        let p = Exponent::new(2.0).unwrap();
        let opts = KwOptions::default();
        let e = estimate_c_minus(&g, p, &VertexFunction::new(vec![0.0, -2.0]), &opts).unwrap();
        assert_eq!((e.c_solvable, e.c_unresolved), (f64::NEG_INFINITY, f64::NEG_INFINITY));
        assert!(estimate_c_minus(&g, p, &VertexFunction::new(vec![1.0, 1.0]), &opts).is_err());
    }

    #[test]
    fn c_minus_bracket_two_vertex() {
        let g = two();
        let e = estimate_c_minus(
            &g,
            Exponent::new(2.0).unwrap(),
            &VertexFunction::new(vec![1.0, -3.0]),
            &KwOptions::default(),
        )
        .unwrap();
        assert!(e.c_solvable <= -0.05, "{e:?}");
        assert!(e.c_unresolved <= e.c_solvable);
    }
}
