//! Random instances and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashSet;

use graph_pkw::operators::p_laplacian;
use graph_pkw::{Function, Graph, Problem, P};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn exponent(p: f64) -> P {
    P::new(p).unwrap()
}

pub fn two_vertex(w: f64, mu: [f64; 2]) -> Graph {
    Graph::with_indices(mu.to_vec(), [(0, 1, w)]).unwrap()
}

/// Connected graph: a random spanning tree plus extra edges with probability `density`.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, w: (f64, f64), density: f64) -> Graph {
    let mu: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..3.0)).collect();
    let mut seen = HashSet::new();
    let mut edges = Vec::new();
    for i in 1..n {
        let j = rng.gen_range(0..i);
        seen.insert((j, i));
        edges.push((j, i, rng.gen_range(w.0..=w.1)));
    }
    for i in 0..n {
        for j in i + 1..n {
            if !seen.contains(&(i, j)) && rng.gen_bool(density) {
                seen.insert((i, j));
                edges.push((i, j, rng.gen_range(w.0..=w.1)));
            }
        }
    }
    Graph::with_indices(mu, edges).unwrap()
}

pub fn random_function(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Function {
    Function::new((0..n).map(|_| rng.gen_range(lo..hi)).collect())
}

/// `K` with `φᵀ K φ = Σ ω (φ_j - φ_i)²`.
pub fn stiffness(g: &Graph) -> DMatrix<f64> {
    let n = g.num_vertices();
    let mut k = DMatrix::zeros(n, n);
    for e in g.edges() {
        k[(e.u, e.u)] += e.w;
        k[(e.v, e.v)] += e.w;
        k[(e.u, e.v)] -= e.w;
        k[(e.v, e.u)] -= e.w;
    }
    k
}

/// `(1/μ_i) Σ ω_ij (f_j - f_i)` computed from the stiffness matrix.
pub fn standard_laplacian(g: &Graph, f: &[f64]) -> Vec<f64> {
    let kf = stiffness(g) * DVector::from_column_slice(f);
    kf.iter().zip(g.mu()).map(|(&x, &m)| -x / m).collect()
}

/// Dense solve of `(Δ₂ - diag k) u = f`.
pub fn dense_l_solve(g: &Graph, k: &[f64], f: &[f64]) -> Vec<f64> {
    let n = g.num_vertices();
    let stiff = stiffness(g);
    let a = DMatrix::from_fn(n, n, |i, j| {
        -stiff[(i, j)] / g.mu()[i] - if i == j { k[i] } else { 0.0 }
    });
    a.lu()
        .solve(&DVector::from_column_slice(f))
        .unwrap()
        .as_slice()
        .to_vec()
}

/// `1/λ₂` for `K φ = λ M φ`, the best constant in `∫ φ² dμ ≤ C D(φ)` on mean-zero `φ`.
pub fn dense_poincare(g: &Graph) -> f64 {
    let n = g.num_vertices();
    let s: Vec<f64> = g.mu().iter().map(|m| 1.0 / m.sqrt()).collect();
    let k = stiffness(g);
    let sym = DMatrix::from_fn(n, n, |i, j| s[i] * k[(i, j)] * s[j]);
    let mut eig: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
    1.0 / eig[1]
}

/// Damped Newton on `u ↦ Δ_p u - c + h e^u` with `|x|^{p-2}` regularized as `(x² + ε²)^{(p-2)/2}`.
pub fn newton_kw(prob: &Problem<'_>, start: &Function, tol: f64) -> Option<Function> {
    const EPS: f64 = 1e-10;
    let g = prob.graph;
    let p = prob.p.get();
    let n = g.num_vertices();
    let res = |u: &Function| -> DVector<f64> {
        let lap = p_laplacian(g, u, prob.p);
        DVector::from_fn(n, |i, _| lap[i] - prob.c + prob.h[i] * u[i].exp())
    };
    let mut u = start.clone();
    let mut r = res(&u);
    for _ in 0..200 {
        if r.amax() <= tol {
            return Some(u);
        }
        let mut jac = DMatrix::from_fn(n, n, |i, j| if i == j { prob.h[i] * u[i].exp() } else { 0.0 });
        for e in g.edges() {
            let x = u[e.v] - u[e.u];
            let d = e.w * (p - 1.0) * (x * x + EPS * EPS).powf((p - 2.0) / 2.0);
            let (mi, mj) = (g.mu()[e.u], g.mu()[e.v]);
            jac[(e.u, e.v)] += d / mi;
            jac[(e.u, e.u)] -= d / mi;
            jac[(e.v, e.u)] += d / mj;
            jac[(e.v, e.v)] -= d / mj;
        }
        let step = jac.lu().solve(&(-&r))?;
        let norm0 = r.norm();
        let mut t = 1.0;
        loop {
            let trial = Function::new((0..n).map(|i| u[i] + t * step[i]).collect());
            let rt = res(&trial);
            if rt.norm() < (1.0 - 1e-4 * t) * norm0 || t < 1e-12 {
                u = trial;
                r = rt;
                break;
            }
            t *= 0.5;
        }
    }
    (r.amax() <= tol).then_some(u)
}
