//! Junction trees of decomposable hierarchical models.
//!
//! Vertices are facets (sets of factor indices), edges carry separators. A
//! tree is accepted only if it is a tree, each separator equals the
//! intersection of its endpoint facets, every factor is covered, and the
//! running intersection property holds.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::simplex::StateSpace;

/// An edge between two facets, labelled by its separator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JunctionEdge {
    pub a: usize,
    pub b: usize,
    pub separator: Vec<usize>,
}

/// The first property a candidate junction tree violates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum JunctionTreeViolation {
    NoVertices,
    VariableOutOfRange { vertex: usize, variable: usize },
    EdgeEndpointOutOfRange { edge: usize, endpoint: usize },
    SelfLoop { edge: usize },
    WrongEdgeCount { vertices: usize, edges: usize },
    Cycle { edge: usize },
    SeparatorMismatch {
        edge: usize,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    UncoveredVariable { variable: usize },
    RunningIntersection { variable: usize },
}

impl fmt::Display for JunctionTreeViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use JunctionTreeViolation::*;
        match self {
            NoVertices => write!(f, "no vertices"),
            VariableOutOfRange { vertex, variable } => {
                write!(f, "vertex {vertex} mentions unknown variable {variable}")
            }
            EdgeEndpointOutOfRange { edge, endpoint } => {
                write!(f, "edge {edge} points at missing vertex {endpoint}")
            }
            SelfLoop { edge } => write!(f, "edge {edge} is a self loop"),
            WrongEdgeCount { vertices, edges } => write!(
                f,
                "a tree on {vertices} vertices needs {} edges, found {edges}",
                vertices - 1
            ),
            Cycle { edge } => write!(f, "edge {edge} closes a cycle"),
            SeparatorMismatch {
                edge,
                expected,
                found,
            } => write!(
                f,
                "edge {edge} separator {found:?} differs from the facet intersection {expected:?}"
            ),
            UncoveredVariable { variable } => {
                write!(f, "variable {variable} is in no facet")
            }
            RunningIntersection { variable } => write!(
                f,
                "facets containing variable {variable} do not form a connected subtree"
            ),
        }
    }
}

impl std::error::Error for JunctionTreeViolation {}

/// A junction tree `(V, E)` over the factors of a composite space.
#[derive(Debug, Clone, PartialEq)]
pub struct JunctionTree {
    space: StateSpace,
    vertices: Vec<Vec<usize>>,
    edges: Vec<JunctionEdge>,
    vertex_maps: Vec<Vec<usize>>,
    edge_maps: Vec<Vec<usize>>,
}

impl JunctionTree {
    /// Builds and validates a junction tree. Facets and separators are
    /// sorted and deduplicated first.
    pub fn new(
        space: StateSpace,
        vertices: Vec<Vec<usize>>,
        edges: Vec<JunctionEdge>,
    ) -> Result<Self, JunctionTreeViolation> {
        let vertices = vertices.into_iter().map(sorted_set).collect();
        let edges = edges
            .into_iter()
            .map(|e| JunctionEdge {
                separator: sorted_set(e.separator),
                ..e
            })
            .collect();
        let mut jt = Self {
            space,
            vertices,
            edges,
            vertex_maps: Vec::new(),
            edge_maps: Vec::new(),
        };
        jt.validate()?;
        jt.vertex_maps = jt
            .vertices
            .iter()
            .map(|s| jt.space.projection_map(s))
            .collect();
        jt.edge_maps = jt
            .edges
            .iter()
            .map(|e| jt.space.projection_map(&e.separator))
            .collect();
        Ok(jt)
    }

    /// The independence complex: one vertex per factor, empty separators
    /// chaining them.
    pub fn independence(space: StateSpace) -> Self {
        let n = space.n_factors();
        let vertices = (0..n).map(|k| vec![k]).collect();
        let edges = (1..n)
            .map(|k| JunctionEdge {
                a: k - 1,
                b: k,
                separator: vec![],
            })
            .collect();
        Self::new(space, vertices, edges).expect("independence complex is decomposable")
    }

    /// Best-effort construction from a facet list: a maximum-weight spanning
    /// tree on pairwise intersection sizes, then validation. Fails for
    /// complexes that are not decomposable.
    pub fn from_facets(
        space: StateSpace,
        facets: Vec<Vec<usize>>,
    ) -> Result<Self, JunctionTreeViolation> {
        let facets: Vec<Vec<usize>> = facets.into_iter().map(sorted_set).collect();
        let m = facets.len();
        let mut candidates = Vec::new();
        for a in 0..m {
            for b in a + 1..m {
                let sep = intersect(&facets[a], &facets[b]);
                candidates.push((sep.len(), a, b, sep));
            }
        }
        // heaviest first, ties by position for determinism
        candidates.sort_by(|x, y| y.0.cmp(&x.0).then((x.1, x.2).cmp(&(y.1, y.2))));
        let mut uf = UnionFind::new(m);
        let mut edges = Vec::new();
        for (_, a, b, sep) in candidates {
            if uf.union(a, b) {
                edges.push(JunctionEdge { a, b, separator: sep });
            }
        }
        Self::new(space, facets, edges)
    }

    pub fn validate(&self) -> Result<(), JunctionTreeViolation> {
        use JunctionTreeViolation::*;
        let n = self.space.n_factors();
        let m = self.vertices.len();
        if m == 0 {
            return Err(NoVertices);
        }
        for (v, facet) in self.vertices.iter().enumerate() {
            if let Some(&x) = facet.iter().find(|&&x| x >= n) {
                return Err(VariableOutOfRange {
                    vertex: v,
                    variable: x,
                });
            }
        }
        for (e, edge) in self.edges.iter().enumerate() {
            for endpoint in [edge.a, edge.b] {
                if endpoint >= m {
                    return Err(EdgeEndpointOutOfRange { edge: e, endpoint });
                }
            }
            if edge.a == edge.b {
                return Err(SelfLoop { edge: e });
            }
        }
        if self.edges.len() != m - 1 {
            return Err(WrongEdgeCount {
                vertices: m,
                edges: self.edges.len(),
            });
        }
        let mut uf = UnionFind::new(m);
        for (e, edge) in self.edges.iter().enumerate() {
            if !uf.union(edge.a, edge.b) {
                return Err(Cycle { edge: e });
            }
        }
        for (e, edge) in self.edges.iter().enumerate() {
            let expected = intersect(&self.vertices[edge.a], &self.vertices[edge.b]);
            if expected != edge.separator {
                return Err(SeparatorMismatch {
                    edge: e,
                    expected,
                    found: edge.separator.clone(),
                });
            }
        }
        for x in 0..n {
            let holders: Vec<usize> = (0..m).filter(|&v| self.vertices[v].contains(&x)).collect();
            if holders.is_empty() {
                return Err(UncoveredVariable { variable: x });
            }
            // holders induce a subtree iff the edges among them number |holders| - 1
            let inner = self
                .edges
                .iter()
                .filter(|e| holders.contains(&e.a) && holders.contains(&e.b))
                .count();
            if inner + 1 != holders.len() {
                return Err(RunningIntersection { variable: x });
            }
        }
        Ok(())
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn vertices(&self) -> &[Vec<usize>] {
        &self.vertices
    }

    pub fn edges(&self) -> &[JunctionEdge] {
        &self.edges
    }

    /// State index of each vertex marginal, per joint state.
    pub(crate) fn vertex_maps(&self) -> &[Vec<usize>] {
        &self.vertex_maps
    }

    pub(crate) fn edge_maps(&self) -> &[Vec<usize>] {
        &self.edge_maps
    }

    /// `N_S` for every vertex.
    pub fn vertex_sizes(&self) -> Vec<usize> {
        self.vertices
            .iter()
            .map(|s| self.space.subset_size(s))
            .collect()
    }

    /// `N_S` for every separator.
    pub fn separator_sizes(&self) -> Vec<usize> {
        self.edges
            .iter()
            .map(|e| self.space.subset_size(&e.separator))
            .collect()
    }
}

fn sorted_set(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v.dedup();
    v
}

fn intersect(a: &[usize], b: &[usize]) -> Vec<usize> {
    a.iter().copied().filter(|x| b.contains(x)).collect()
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Merges the classes of `a` and `b`; false if already merged.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}
