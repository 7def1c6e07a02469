use std::collections::{HashMap, HashSet, VecDeque};
use std::ops::{Deref, DerefMut};

use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("graph has no vertices")]
    Empty,
    #[error("vertex {id:?}: measure mu must be positive and finite, got {value}")]
    NonpositiveMeasure { id: String, value: f64 },
    #[error("edge {u:?}-{v:?}: weight must be positive and finite, got {value}")]
    NonpositiveWeight { u: String, v: String, value: f64 },
    #[error("edge {u:?}-{v:?} is a self-loop")]
    SelfLoop { u: String, v: String },
    #[error("edge {u:?}-{v:?} is listed more than once")]
    DuplicateEdge { u: String, v: String },
    #[error("duplicate vertex id {0:?}")]
    DuplicateVertex(String),
    #[error("unknown vertex {0:?}")]
    UnknownVertex(String),
    #[error("vertex index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("graph is not connected: vertex {0:?} is unreachable from the first vertex")]
    Disconnected(String),
    #[error("function has {got} values but the graph has {expected} vertices")]
    LengthMismatch { expected: usize, got: usize },
    #[error("function value at vertex {id:?} is not finite")]
    NonFinite { id: String },
    #[error("exponent p must satisfy p > 1, got {0}")]
    InvalidExponent(f64),
}

/// An unordered edge `{u, v}` with positive weight `w`, stored once.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge<T> {
    pub u: usize,
    pub v: usize,
    pub w: T,
}

/// Connected finite graph with vertex measure `mu` and symmetric edge weights.
///
/// Vertex order is fixed at construction and every [`VertexFunction`] is
/// index-aligned with it.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph<T> {
    ids: Vec<String>,
    mu: Vec<T>,
    edges: Vec<Edge<T>>,
    index: HashMap<String, usize>,
}

impl<T: Real> WeightedGraph<T> {
    /// Builds a graph from vertex ids, measures and index-based edges.
    pub fn new(
        ids: Vec<String>,
        mu: Vec<T>,
        edges: impl IntoIterator<Item = (usize, usize, T)>,
    ) -> Result<Self, GraphError> {
        let n = ids.len();
        if n == 0 {
            return Err(GraphError::Empty);
        }
        if mu.len() != n {
            return Err(GraphError::LengthMismatch {
                expected: n,
                got: mu.len(),
            });
        }
        let mut index = HashMap::with_capacity(n);
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(GraphError::DuplicateVertex(id.clone()));
            }
        }
        for (id, &m) in ids.iter().zip(&mu) {
            if !(m > T::zero() && m.is_finite()) {
                return Err(GraphError::NonpositiveMeasure {
                    id: id.clone(),
                    value: m.as_f64(),
                });
            }
        }
        let mut seen = HashSet::new();
        let mut list = Vec::new();
        for (u, v, w) in edges {
            if u >= n {
                return Err(GraphError::IndexOutOfRange(u));
            }
            if v >= n {
                return Err(GraphError::IndexOutOfRange(v));
            }
            let (su, sv) = (ids[u].clone(), ids[v].clone());
            if u == v {
                return Err(GraphError::SelfLoop { u: su, v: sv });
            }
            if !(w > T::zero() && w.is_finite()) {
                return Err(GraphError::NonpositiveWeight {
                    u: su,
                    v: sv,
                    value: w.as_f64(),
                });
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(GraphError::DuplicateEdge { u: su, v: sv });
            }
            list.push(Edge { u, v, w });
        }
        let g = Self {
            ids,
            mu,
            edges: list,
            index,
        };
        g.check_connected()?;
        Ok(g)
    }

    /// Builds a graph with vertex ids `"0"`, `"1"`, ...
    pub fn with_indices(mu: Vec<T>, edges: impl IntoIterator<Item = (usize, usize, T)>) -> Result<Self, GraphError> {
        let ids = (0..mu.len()).map(|i| i.to_string()).collect();
        Self::new(ids, mu, edges)
    }

    /// Builds a graph from named vertices and named edges.
    pub fn from_named<S: AsRef<str>>(vertices: &[(S, T)], edges: &[(S, S, T)]) -> Result<Self, GraphError> {
        let ids: Vec<String> = vertices.iter().map(|(id, _)| id.as_ref().to_owned()).collect();
        let mu = vertices.iter().map(|&(_, m)| m).collect();
        let mut lookup = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if lookup.insert(id.as_str(), i).is_some() {
                return Err(GraphError::DuplicateVertex(id.clone()));
            }
        }
        let mut indexed = Vec::with_capacity(edges.len());
        for (u, v, w) in edges {
            let iu = *lookup
                .get(u.as_ref())
                .ok_or_else(|| GraphError::UnknownVertex(u.as_ref().to_owned()))?;
            let iv = *lookup
                .get(v.as_ref())
                .ok_or_else(|| GraphError::UnknownVertex(v.as_ref().to_owned()))?;
            indexed.push((iu, iv, *w));
        }
        Self::new(ids, mu, indexed)
    }

    /// Path graph on `n` vertices with unit measure and unit weights.
    pub fn path(n: usize) -> Result<Self, GraphError> {
        Self::with_indices(vec![T::one(); n], (1..n).map(|i| (i - 1, i, T::one())))
    }

    fn check_connected(&self) -> Result<(), GraphError> {
        let n = self.ids.len();
        let mut adj = vec![Vec::new(); n];
        for e in &self.edges {
            adj[e.u].push(e.v);
            adj[e.v].push(e.u);
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(i) = queue.pop_front() {
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        match seen.iter().position(|&s| !s) {
            Some(i) => Err(GraphError::Disconnected(self.ids[i].clone())),
            None => Ok(()),
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.ids.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex_ids(&self) -> &[String] {
        &self.ids
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn mu(&self) -> &[T] {
        &self.mu
    }

    pub fn edges(&self) -> &[Edge<T>] {
        &self.edges
    }

    pub fn min_mu(&self) -> T {
        self.mu.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn min_weight(&self) -> T {
        self.edges.iter().map(|e| e.w).fold(T::infinity(), T::min)
    }

    /// `Vol(G) = sum_i mu_i`.
    pub fn volume(&self) -> T {
        self.mu.iter().copied().sum()
    }

    /// Checks that `f` is index-aligned with this graph and finite.
    pub fn check_function(&self, f: &VertexFunction<T>) -> Result<(), GraphError> {
        if f.len() != self.num_vertices() {
            return Err(GraphError::LengthMismatch {
                expected: self.num_vertices(),
                got: f.len(),
            });
        }
        match f.iter().position(|x| !x.is_finite()) {
            Some(i) => Err(GraphError::NonFinite {
                id: self.ids[i].clone(),
            }),
            None => Ok(()),
        }
    }
}

/// A real function on the vertex set, indexed like the owning graph.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VertexFunction<T>(Vec<T>);

impl<T: Real> VertexFunction<T> {
    pub fn new(values: Vec<T>) -> Self {
        Self(values)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![T::zero(); n])
    }

    pub fn constant(n: usize, c: T) -> Self {
        Self(vec![c; n])
    }

    pub fn into_vec(self) -> Vec<T> {
        self.0
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self(self.0.iter().map(|&x| f(x)).collect())
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        assert_eq!(self.len(), other.len(), "vertex functions of different length");
        Self(self.0.iter().zip(&other.0).map(|(&a, &b)| f(a, b)).collect())
    }

    pub fn max(&self) -> T {
        self.0.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn min(&self) -> T {
        self.0.iter().copied().fold(T::infinity(), T::min)
    }

    /// `max f - min f`.
    pub fn oscillation(&self) -> T {
        self.max() - self.min()
    }

    pub fn sup_norm(&self) -> T {
        crate::scalar::sup_norm(&self.0)
    }

    /// Sup-norm distance to `other`.
    pub fn distance(&self, other: &Self) -> T {
        self.zip_map(other, |a, b| a - b).sup_norm()
    }

    pub fn cast<U: Real>(&self) -> VertexFunction<U> {
        VertexFunction(self.0.iter().map(|&x| U::lit(x.as_f64())).collect())
    }
}

impl<T> Deref for VertexFunction<T> {
    type Target = [T];
    fn deref(&self) -> &[T] {
        &self.0
    }
}

impl<T> DerefMut for VertexFunction<T> {
    fn deref_mut(&mut self) -> &mut [T] {
        &mut self.0
    }
}

impl<T> From<Vec<T>> for VertexFunction<T> {
    fn from(v: Vec<T>) -> Self {
        Self(v)
    }
}

/// A real function on the edge set, indexed like [`WeightedGraph::edges`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EdgeFunction<T>(Vec<T>);

impl<T: Real> EdgeFunction<T> {
    pub fn new(values: Vec<T>) -> Self {
        Self(values)
    }

    /// `|grad f|_{ij} = |f_j - f_i|` per edge.
    pub fn gradient_magnitude(g: &WeightedGraph<T>, f: &VertexFunction<T>) -> Self {
        Self(g.edges().iter().map(|e| (f[e.v] - f[e.u]).abs()).collect())
    }

    /// `int_E a d omega = sum_e omega_e a_e`.
    pub fn integral(&self, g: &WeightedGraph<T>) -> T {
        g.edges().iter().zip(&self.0).map(|(e, &a)| e.w * a).sum()
    }
}

impl<T> Deref for EdgeFunction<T> {
    type Target = [T];
    fn deref(&self) -> &[T] {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_graphs() {
        let ids = |n: usize| (0..n).map(|i| format!("v{i}")).collect::<Vec<_>>();
        assert!(matches!(
            WeightedGraph::new(ids(2), vec![1.0, 0.0], [(0, 1, 1.0)]),
            Err(GraphError::NonpositiveMeasure { .. })
        ));
        assert!(matches!(
            WeightedGraph::new(ids(2), vec![1.0, 1.0], [(0, 1, -1.0)]),
            Err(GraphError::NonpositiveWeight { .. })
        ));
        assert!(matches!(
            WeightedGraph::new(ids(2), vec![1.0, 1.0], [(0, 0, 1.0), (0, 1, 1.0)]),
            Err(GraphError::SelfLoop { .. })
        ));
        assert!(matches!(
            WeightedGraph::new(ids(2), vec![1.0, 1.0], [(0, 1, 1.0), (1, 0, 2.0)]),
            Err(GraphError::DuplicateEdge { .. })
        ));
        assert!(matches!(
            WeightedGraph::new(ids(3), vec![1.0; 3], [(0, 1, 1.0)]),
            Err(GraphError::Disconnected(id)) if id == "v2"
        ));
        assert!(matches!(
            WeightedGraph::<f64>::new(vec![], vec![], []),
            Err(GraphError::Empty)
        ));
    }

    #[test]
    fn named_construction_and_lookup() {
        let g = WeightedGraph::from_named(&[("a", 2.0), ("b", 3.0)], &[("a", "b", 1.5)]).unwrap();
        assert_eq!(g.index_of("b"), Some(1));
        assert_eq!(g.volume(), 5.0);
        assert_eq!(g.edges()[0], Edge { u: 0, v: 1, w: 1.5 });
        assert!(matches!(
            WeightedGraph::from_named(&[("a", 1.0)], &[("a", "z", 1.0)]),
            Err(GraphError::UnknownVertex(z)) if z == "z"
        ));
    }

    #[test]
    fn single_vertex_is_connected() {
        let g = WeightedGraph::<f64>::with_indices(vec![1.0], []).unwrap();
        assert_eq!(g.num_vertices(), 1);
    }

    #[test]
    fn check_function_flags_length_and_nan() {
        let g = WeightedGraph::<f64>::path(3).unwrap();
        assert!(g.check_function(&VertexFunction::zeros(2)).is_err());
        let bad = VertexFunction::new(vec![0.0, f64::NAN, 1.0]);
        assert_eq!(g.check_function(&bad), Err(GraphError::NonFinite { id: "1".into() }));
    }
}
