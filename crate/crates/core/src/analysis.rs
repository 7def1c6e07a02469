//! Poincaré constant estimates, the Liouville check and the sup-norm embedding check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{VertexFunction, WeightedGraph};
use crate::operators::{dirichlet_energy, integral, p_laplacian, Exponent};
use crate::scalar::Real;
use crate::variational::{minimize, project_mean_zero, Functional, MinimizeOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LiouvilleOutcome {
    /// `Δ_p f` has one sign up to `eps` and `f` is constant up to the induced bound.
    Constant,
    /// `Δ_p f` has one sign but `f` is far from constant: a counterexample.
    Nonconstant,
    /// `Δ_p f` takes both signs beyond `eps`.
    Inconclusive,
}

/// Largest oscillation compatible with `Δ_p f ≥ -eps` (or `≤ eps`).
///
/// Balancing `∫ Δ_p f dμ = 0` bounds `D(f) ≤ 2 eps Vol osc(f)`, and each
/// edge on a path between extrema carries at most `(D / ω_min)^{1/p}`.
pub fn liouville_threshold<T: Real>(g: &WeightedGraph<T>, p: Exponent<T>, eps: T) -> T {
    let pm1 = p.get() - T::one();
    let hops = T::from_usize(g.num_vertices().saturating_sub(1)).expect("vertex count fits");
    let two = T::lit(2.0);
    hops.powf(p.get() / pm1) * (two * eps * g.volume() / g.min_weight()).powf(T::one() / pm1)
}

pub fn liouville_check<T: Real>(
    g: &WeightedGraph<T>,
    f: &VertexFunction<T>,
    p: Exponent<T>,
    eps: T,
) -> LiouvilleOutcome {
    let lap = p_laplacian(g, f, p);
    if !(lap.min() >= -eps || lap.max() <= eps) {
        return LiouvilleOutcome::Inconclusive;
    }
    let roundoff = T::lit(1e-12) * (T::one() + f.sup_norm());
    if f.oscillation() <= liouville_threshold(g, p, eps) + roundoff {
        LiouvilleOutcome::Constant
    } else {
        LiouvilleOutcome::Nonconstant
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoincareEstimate<T> {
    /// Best ratio found; a lower bound on the optimal constant.
    pub constant: T,
    /// Mean-zero function attaining `constant`, normalized to `D = 1`.
    pub witness: VertexFunction<T>,
    /// Number of ascent starts.
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoincareOptions<T> {
    pub starts: usize,
    pub seed: u64,
    pub minimize: MinimizeOptions<T>,
}

impl<T: Real> Default for PoincareOptions<T> {
    fn default() -> Self {
        Self {
            starts: 8,
            seed: 0,
            minimize: MinimizeOptions::default().with_grad_tol(T::lit(1e-11)).mean_zero(true),
        }
    }
}

/// `∫ |φ|^p dμ / D(φ)`.
pub fn poincare_ratio<T: Real>(g: &WeightedGraph<T>, phi: &VertexFunction<T>, p: Exponent<T>) -> T {
    let pw: Vec<T> = phi.iter().map(|x| x.abs().powf(p.get())).collect();
    integral(g, &pw) / dirichlet_energy(g, phi, p)
}

/// `-R(φ)`, degree-zero homogeneous, defined where `D(φ) > 0`.
struct NegRatio<'a, T> {
    graph: &'a WeightedGraph<T>,
    p: Exponent<T>,
}

impl<T: Real> Functional<T> for NegRatio<'_, T> {
    fn graph(&self) -> &WeightedGraph<T> {
        self.graph
    }

    fn value(&self, x: &VertexFunction<T>) -> T {
        -poincare_ratio(self.graph, x, self.p)
    }

    fn gradient(&self, x: &VertexFunction<T>) -> VertexFunction<T> {
        let d = dirichlet_energy(self.graph, x, self.p);
        let r = poincare_ratio(self.graph, x, self.p);
        let lap = p_laplacian(self.graph, x, self.p);
        let p = self.p.get();
        VertexFunction::new(
            x.iter()
                .zip(lap.iter())
                .map(|(&phi, &l)| -p * (crate::scalar::signed_pow(phi, p) + r * l) / d)
                .collect(),
        )
    }

    fn admissible(&self, x: &VertexFunction<T>) -> bool {
        let d = dirichlet_energy(self.graph, x, self.p);
        d > T::zero() && d.is_finite()
    }
}

fn sample_unit<T: Real>(g: &WeightedGraph<T>, p: Exponent<T>, rng: &mut ChaCha8Rng) -> VertexFunction<T> {
    loop {
        let raw = VertexFunction::new(
            (0..g.num_vertices())
                .map(|_| T::lit(rng.gen_range(-1.0..1.0)))
                .collect(),
        );
        let phi = project_mean_zero(g, &raw);
        let d = dirichlet_energy(g, &phi, p);
        if d > T::zero() {
            let s = d.powf(-T::one() / p.get());
            return phi.map(|x| x * s);
        }
    }
}

/// Multi-start ascent on `∫|φ|^p dμ / D(φ)` over mean-zero `φ`.
pub fn estimate_poincare_constant<T: Real>(
    g: &WeightedGraph<T>,
    p: Exponent<T>,
    opts: &PoincareOptions<T>,
) -> PoincareEstimate<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let func = NegRatio { graph: g, p };
    let mopts = MinimizeOptions {
        project_mean_zero: true,
        ..opts.minimize
    };
    let starts = opts.starts.max(1);
    let mut best: Option<(T, VertexFunction<T>)> = None;
    for _ in 0..starts {
        let x0 = sample_unit(g, p, &mut rng);
        let x = match minimize(&func, &x0, &mopts) {
            Ok(r) => r.minimizer,
            Err(e) => e.last_iterate().map_or(x0, |r| r.minimizer.clone()),
        };
        let d = dirichlet_energy(g, &x, p);
        let witness = x.map(|v| v * d.powf(-T::one() / p.get()));
        let ratio = poincare_ratio(g, &witness, p);
        if best.as_ref().is_none_or(|(b, _)| ratio > *b) {
            best = Some((ratio, witness));
        }
    }
    let (constant, witness) = best.expect("at least one start");
    PoincareEstimate {
        constant,
        witness,
        samples: starts,
    }
}

/// Largest `‖φ‖_∞` over random mean-zero `φ` with `D(φ) = 1`.
pub fn sup_norm_embedding_check<T: Real>(g: &WeightedGraph<T>, p: Exponent<T>, trials: usize, seed: u64) -> T {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials.max(1))
        .map(|_| sample_unit(g, p, &mut rng).sup_norm())
        .fold(T::zero(), T::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two(w: f64) -> WeightedGraph<f64> {
        WeightedGraph::with_indices(vec![1.0, 1.0], [(0, 1, w)]).unwrap()
    }

    fn p(x: f64) -> Exponent<f64> {
        Exponent::new(x).unwrap()
    }

    #[test]
    fn liouville_examples() {
        let g = two(1.0);
        assert_eq!(
            liouville_check(&g, &VertexFunction::constant(2, 3.0), p(2.0), 0.0),
            LiouvilleOutcome::Constant
        );
        assert_eq!(
            liouville_check(&g, &VertexFunction::new(vec![0.0, 1.0]), p(2.0), 0.0),
            LiouvilleOutcome::Inconclusive
        );
    }

    #[test]
    fn poincare_two_vertex() {
        for (w, pp) in [(1.0, 2.0), (4.0, 2.0), (1.0, 3.0), (2.0, 1.5)] {
            let est = estimate_poincare_constant(&two(w), p(pp), &PoincareOptions::default());
            let exact = 2f64.powf(1.0 - pp) / w;
            assert!(
                (est.constant - exact).abs() <= 1e-6 * exact,
                "{} vs {exact}",
                est.constant
            );
            assert!(crate::operators::average(&two(w), &est.witness).abs() <= 1e-12);
        }
    }

    #[test]
    fn sup_norm_two_vertex() {
        for pp in [2.0, 3.0] {
            let s = sup_norm_embedding_check(&two(1.0), p(pp), 1, 7);
            assert!((s - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn ratio_gradient_matches_finite_differences() {
        let g = WeightedGraph::with_indices(vec![1.0, 0.5, 2.0], [(0, 1, 1.0), (1, 2, 0.7), (0, 2, 2.0)]).unwrap();
        let x = VertexFunction::new(vec![0.3, -0.6, 0.2]);
        for pp in [1.5, 2.0, 3.0] {
            let f = NegRatio { graph: &g, p: p(pp) };
            assert!(crate::variational::check_gradient(&f, &x, 1e-6) < 1e-6);
        }
    }
}
