//! The discrete p-Laplacian and the quantities built from it.
//!
//! For `f` on a weighted graph,
//!
//! ```text
//! (Δ_p f)_i = (1/μ_i) Σ_{j~i} ω_ij |f_j - f_i|^(p-2) (f_j - f_i)
//! D(f)      = Σ_{i~j} ω_ij |f_j - f_i|^p
//! A(f, g)   = Σ_{i~j} ω_ij |f_j - f_i|^(p-2) (f_j - f_i)(g_j - g_i)
//! ```
//!
//! and the integration-by-parts identity `∫ (Δ_p f) g dμ = -A(f, g)` holds.

use crate::graph::{GraphError, VertexFunction, WeightedGraph};
use crate::scalar::{abs_pow_diff, signed_pow, Real};

/// An exponent `p > 1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Exponent<T>(T);

impl<T: Real> Exponent<T> {
    pub fn new(p: T) -> Result<Self, GraphError> {
        if p > T::one() && p.is_finite() {
            Ok(Self(p))
        } else {
            Err(GraphError::InvalidExponent(p.as_f64()))
        }
    }

    #[inline]
    pub fn get(self) -> T {
        self.0
    }

    /// Whether this is the linear case `p = 2`.
    pub fn is_quadratic(self) -> bool {
        self.0 == T::lit(2.0)
    }
}

impl<T: Real> TryFrom<f64> for Exponent<T> {
    type Error = GraphError;
    fn try_from(p: f64) -> Result<Self, GraphError> {
        Self::new(T::lit(p))
    }
}

/// `Δ_p f`.
pub fn p_laplacian<T: Real>(g: &WeightedGraph<T>, f: &VertexFunction<T>, p: Exponent<T>) -> VertexFunction<T> {
    assert_eq!(f.len(), g.num_vertices());
    let mut out = vec![T::zero(); g.num_vertices()];
    for e in g.edges() {
        let flux = e.w * signed_pow(f[e.v] - f[e.u], p.get());
        out[e.u] = out[e.u] + flux;
        out[e.v] = out[e.v] - flux;
    }
    for (o, &m) in out.iter_mut().zip(g.mu()) {
        *o = *o / m;
    }
    VertexFunction::new(out)
}

/// `D(f) = ∫_E |∇f|^p dω`.
pub fn dirichlet_energy<T: Real>(g: &WeightedGraph<T>, f: &VertexFunction<T>, p: Exponent<T>) -> T {
    assert_eq!(f.len(), g.num_vertices());
    g.edges()
        .iter()
        .map(|e| e.w * (f[e.v] - f[e.u]).abs().powf(p.get()))
        .sum()
}

/// `D(y) - D(x)` evaluated edge by edge without catastrophic cancellation.
pub fn dirichlet_energy_change<T: Real>(g: &WeightedGraph<T>, x: &[T], y: &[T], p: Exponent<T>) -> T {
    g.edges()
        .iter()
        .map(|e| {
            let a = x[e.v] - x[e.u];
            let step = (y[e.v] - x[e.v]) - (y[e.u] - x[e.u]);
            e.w * abs_pow_diff(a, step, p.get())
        })
        .sum()
}

/// `A(f, g)`.
pub fn pairing_form<T: Real>(
    graph: &WeightedGraph<T>,
    f: &VertexFunction<T>,
    g: &VertexFunction<T>,
    p: Exponent<T>,
) -> T {
    assert_eq!(f.len(), graph.num_vertices());
    assert_eq!(g.len(), graph.num_vertices());
    graph
        .edges()
        .iter()
        .map(|e| e.w * signed_pow(f[e.v] - f[e.u], p.get()) * (g[e.v] - g[e.u]))
        .sum()
}

/// `∫_V f dμ`.
pub fn integral<T: Real>(g: &WeightedGraph<T>, f: &[T]) -> T {
    assert_eq!(f.len(), g.num_vertices());
    g.mu().iter().zip(f).map(|(&m, &x)| m * x).sum()
}

/// `∫_V |f| dμ`.
pub fn abs_integral<T: Real>(g: &WeightedGraph<T>, f: &[T]) -> T {
    g.mu().iter().zip(f).map(|(&m, &x)| m * x.abs()).sum()
}

/// μ-average `f̄ = ∫ f dμ / Vol(G)`.
pub fn average<T: Real>(g: &WeightedGraph<T>, f: &[T]) -> T {
    integral(g, f) / g.volume()
}

/// `Vol(G)`.
pub fn volume<T: Real>(g: &WeightedGraph<T>) -> T {
    g.volume()
}

/// μ-weighted inner product `⟨f, g⟩ = ∫ f g dμ`.
pub fn inner<T: Real>(graph: &WeightedGraph<T>, f: &[T], g: &[T]) -> T {
    graph
        .mu()
        .iter()
        .zip(f.iter().zip(g))
        .map(|(&m, (&a, &b))| m * a * b)
        .sum()
}

/// Checks `‖Δ_p(λf) - sgn(λ)|λ|^(p-1) Δ_p f‖_∞ ≤ tol (1 + ‖Δ_p f‖_∞)`.
pub fn scale_identity_check<T: Real>(
    g: &WeightedGraph<T>,
    f: &VertexFunction<T>,
    p: Exponent<T>,
    lambda: T,
    tol: T,
) -> bool {
    let base = p_laplacian(g, f, p);
    let scaled = p_laplacian(g, &f.map(|x| lambda * x), p);
    let factor = if lambda == T::zero() {
        T::zero()
    } else {
        lambda.signum() * lambda.abs().powf(p.get() - T::one())
    };
    let expected = base.map(|x| factor * x);
    scaled.distance(&expected) <= tol * (T::one() + base.sup_norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two(w: f64, mu: [f64; 2]) -> WeightedGraph<f64> {
        WeightedGraph::with_indices(mu.to_vec(), [(0, 1, w)]).unwrap()
    }

    fn p(x: f64) -> Exponent<f64> {
        Exponent::new(x).unwrap()
    }

    #[test]
    fn exponent_must_exceed_one() {
        assert!(Exponent::new(1.0_f64).is_err());
        assert!(Exponent::new(0.5_f64).is_err());
        assert!(Exponent::new(f64::NAN).is_err());
        assert!(Exponent::<f64>::try_from(1.0000001).is_ok());
    }

    #[test]
    fn p_laplacian_two_vertex_values() {
        let g = two(1.0, [1.0, 1.0]);
        let zero = VertexFunction::new(vec![0.0, 0.0]);
        assert_eq!(*p_laplacian(&g, &zero, p(1.5)), [0.0, 0.0]);
        let f = VertexFunction::new(vec![0.0, 1.0]);
        assert_eq!(*p_laplacian(&g, &f, p(3.0)), [1.0, -1.0]);
        assert_eq!(*p_laplacian(&g, &f, p(1.5)), [1.0, -1.0]);
    }

    #[test]
    fn measure_divides() {
        let g = two(2.0, [4.0, 1.0]);
        let f = VertexFunction::new(vec![0.0, 1.0]);
        assert_eq!(*p_laplacian(&g, &f, p(2.0)), [0.5, -2.0]);
    }

    #[test]
    fn dirichlet_energy_values() {
        let g = two(1.0, [1.0, 1.0]);
        assert_eq!(dirichlet_energy(&g, &VertexFunction::constant(2, 3.0), p(2.5)), 0.0);
        assert_eq!(dirichlet_energy(&g, &VertexFunction::new(vec![0.0, 1.0]), p(3.0)), 1.0);
        let g2 = two(2.0, [1.0, 1.0]);
        assert_eq!(dirichlet_energy(&g2, &VertexFunction::new(vec![0.0, 2.0]), p(2.0)), 8.0);
    }

    #[test]
    fn pairing_form_values() {
        let g = two(1.0, [1.0, 1.0]);
        let f = VertexFunction::new(vec![0.0, 1.0]);
        assert_eq!(pairing_form(&g, &f, &f, p(3.0)), 1.0);
        assert_eq!(pairing_form(&g, &f, &VertexFunction::constant(2, 7.0), p(3.0)), 0.0);
        let gm = VertexFunction::new(vec![0.0, -1.0]);
        assert_eq!(pairing_form(&g, &f, &gm, p(2.0)), -1.0);
    }

    #[test]
    fn integrals_and_averages() {
        let g = two(1.0, [1.0, 1.0]);
        assert_eq!(integral(&g, &[1.0, 1.0]), 2.0);
        assert_eq!(average(&g, &[1.0, 1.0]), 1.0);
        let g2 = two(1.0, [2.0, 2.0]);
        assert_eq!(integral(&g2, &[1.0, -2.0]), -2.0);
        assert_eq!(average(&g2, &[1.0, -2.0]), -0.5);
        assert_eq!(volume(&two(1.0, [2.0, 3.0])), 5.0);
    }

    #[test]
    fn scaling_identity_examples() {
        let g = two(1.0, [1.0, 1.0]);
        let f = VertexFunction::new(vec![0.0, 1.0]);
        assert!(scale_identity_check(&g, &f, p(3.0), 1.0, 1e-12));
        assert!(scale_identity_check(&g, &f, p(3.0), 0.0, 1e-12));
        assert_eq!(*p_laplacian(&g, &f.map(|x| -2.0 * x), p(3.0)), [-4.0, 4.0]);
        assert!(scale_identity_check(&g, &f, p(3.0), -2.0, 1e-12));
    }

    #[test]
    fn energy_change_matches_difference() {
        let g = WeightedGraph::with_indices(vec![1.0, 2.0, 0.5], [(0, 1, 1.0), (1, 2, 3.0)]).unwrap();
        let x = [0.3, -0.2, 1.1];
        let y = [0.1, 0.4, 1.0];
        for pp in [1.5, 2.0, 3.7] {
            let d = dirichlet_energy_change(&g, &x, &y, p(pp));
            let naive = dirichlet_energy(&g, &VertexFunction::new(y.to_vec()), p(pp))
                - dirichlet_energy(&g, &VertexFunction::new(x.to_vec()), p(pp));
            assert!((d - naive).abs() < 1e-12);
        }
    }

    #[test]
    fn works_in_single_precision() {
        let g = WeightedGraph::<f32>::with_indices(vec![1.0, 1.0], [(0, 1, 1.0)]).unwrap();
        let f = VertexFunction::new(vec![0.0_f32, 1.0]);
        let e = Exponent::new(3.0_f32).unwrap();
        assert_eq!(*p_laplacian(&g, &f, e), [1.0, -1.0]);
    }
}
