//! Energy functionals whose critical points solve the linear-type problems.

use crate::graph::{VertexFunction, WeightedGraph};
use crate::operators::{average, dirichlet_energy, dirichlet_energy_change, integral, p_laplacian, Exponent};
use crate::scalar::Real;
use crate::variational::Functional;

/// `(1/p) D(φ)`, with gradient `-Δ_p φ`.
#[derive(Debug, Clone)]
pub struct DirichletFunctional<'a, T> {
    pub graph: &'a WeightedGraph<T>,
    pub p: Exponent<T>,
}

impl<T: Real> Functional<T> for DirichletFunctional<'_, T> {
    fn graph(&self) -> &WeightedGraph<T> {
        self.graph
    }

    fn value(&self, x: &VertexFunction<T>) -> T {
        dirichlet_energy(self.graph, x, self.p) / self.p.get()
    }

    fn gradient(&self, x: &VertexFunction<T>) -> VertexFunction<T> {
        p_laplacian(self.graph, x, self.p).map(|v| -v)
    }

    fn change(&self, x: &VertexFunction<T>, y: &VertexFunction<T>) -> T {
        dirichlet_energy_change(self.graph, x, y, self.p) / self.p.get()
    }
}

/// `E(φ) = (1/p) D(φ) + ½ ∫ k φ² dμ + ∫ f φ dμ`.
///
/// Its gradient is `-(Δ_p φ - kφ - f)`, so critical points solve `Lφ = f`.
#[derive(Debug, Clone)]
pub struct InversionEnergy<'a, T> {
    pub graph: &'a WeightedGraph<T>,
    pub p: Exponent<T>,
    pub k: &'a [T],
    pub rhs: &'a [T],
}

impl<T: Real> Functional<T> for InversionEnergy<'_, T> {
    fn graph(&self) -> &WeightedGraph<T> {
        self.graph
    }

    fn value(&self, x: &VertexFunction<T>) -> T {
        let half = T::lit(0.5);
        let local: Vec<T> = x
            .iter()
            .zip(self.k.iter().zip(self.rhs))
            .map(|(&phi, (&k, &f))| half * k * phi * phi + f * phi)
            .collect();
        dirichlet_energy(self.graph, x, self.p) / self.p.get() + integral(self.graph, &local)
    }

    fn gradient(&self, x: &VertexFunction<T>) -> VertexFunction<T> {
        let lap = p_laplacian(self.graph, x, self.p);
        VertexFunction::new(
            lap.iter()
                .zip(x.iter())
                .zip(self.k.iter().zip(self.rhs))
                .map(|((&l, &phi), (&k, &f))| -l + k * phi + f)
                .collect(),
        )
    }

    fn change(&self, x: &VertexFunction<T>, y: &VertexFunction<T>) -> T {
        let half = T::lit(0.5);
        let local: Vec<T> = x
            .iter()
            .zip(y.iter())
            .zip(self.k.iter().zip(self.rhs))
            .map(|((&a, &b), (&k, &f))| {
                let s = b - a;
                half * k * s * (a + b) + f * s
            })
            .collect();
        dirichlet_energy_change(self.graph, x, y, self.p) / self.p.get() + integral(self.graph, &local)
    }

    /// `E(φ + t·1)` is quadratic in `t` because `Δ_p` ignores constants.
    fn translation_step(&self, _x: &VertexFunction<T>, grad: &VertexFunction<T>) -> Option<T> {
        let curvature = integral(self.graph, self.k);
        Some(-integral(self.graph, grad) / curvature)
    }
}

/// `F(φ) = (1/p) D(φ) + ∫ (f̄ - f) φ dμ`, minimized over the mean-zero hyperplane.
#[derive(Debug, Clone)]
pub struct PoissonEnergy<'a, T> {
    graph: &'a WeightedGraph<T>,
    p: Exponent<T>,
    /// `f̄ - f`.
    source: Vec<T>,
}

impl<'a, T: Real> PoissonEnergy<'a, T> {
    pub fn new(graph: &'a WeightedGraph<T>, p: Exponent<T>, f: &[T]) -> Self {
        let mean = average(graph, f);
        Self {
            graph,
            p,
            source: f.iter().map(|&x| mean - x).collect(),
        }
    }

    /// The centred source `f̄ - f`.
    pub fn source(&self) -> &[T] {
        &self.source
    }
}

impl<T: Real> Functional<T> for PoissonEnergy<'_, T> {
    fn graph(&self) -> &WeightedGraph<T> {
        self.graph
    }

    fn value(&self, x: &VertexFunction<T>) -> T {
        let local: Vec<T> = x.iter().zip(&self.source).map(|(&a, &s)| a * s).collect();
        dirichlet_energy(self.graph, x, self.p) / self.p.get() + integral(self.graph, &local)
    }

    fn gradient(&self, x: &VertexFunction<T>) -> VertexFunction<T> {
        let lap = p_laplacian(self.graph, x, self.p);
        VertexFunction::new(lap.iter().zip(&self.source).map(|(&l, &s)| s - l).collect())
    }

    fn change(&self, x: &VertexFunction<T>, y: &VertexFunction<T>) -> T {
        let local: Vec<T> = x
            .iter()
            .zip(y.iter())
            .zip(&self.source)
            .map(|((&a, &b), &s)| (b - a) * s)
            .collect();
        dirichlet_energy_change(self.graph, x, y, self.p) / self.p.get() + integral(self.graph, &local)
    }
}
