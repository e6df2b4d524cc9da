use std::sync::Arc;

use crate::error::{Error, Result};

use super::mesh::Mesh;

/// Lagrange finite element space on a [`Mesh`] with homogeneous Dirichlet
/// conditions imposed by eliminating boundary nodes.
///
/// Nodes of the P2 space form the half-step lattice: node `(i, j)` has
/// index `j·(2n+1) + i` at `(i/2n, j/2n)`. Vector dofs are interleaved,
/// `2·node + component`.
#[derive(Debug, Clone)]
pub struct FeSpace {
    mesh: Arc<Mesh>,
    degree: usize,
    components: usize,
    nodes: Vec<[f64; 2]>,
    elements: Vec<Vec<usize>>,
    interior: Vec<Option<usize>>,
    interior_nodes: Vec<usize>,
}

impl FeSpace {
    pub fn new(mesh: Arc<Mesh>, degree: usize, components: usize) -> Result<Self> {
        if !(1..=2).contains(&degree) {
            return Err(Error::OutOfRange(format!("polynomial degree {degree}")));
        }
        if !(1..=2).contains(&components) {
            return Err(Error::OutOfRange(format!("{components} components")));
        }
        let n = mesh.subdivisions();
        let stride = degree * n + 1;
        let scale = (degree * n) as f64;
        let mut nodes = Vec::with_capacity(stride * stride);
        let mut boundary = Vec::with_capacity(stride * stride);
        for j in 0..stride {
            for i in 0..stride {
                nodes.push([i as f64 / scale, j as f64 / scale]);
                boundary.push(i == 0 || j == 0 || i + 1 == stride || j + 1 == stride);
            }
        }
        let side = n + 1;
        let lattice = |v: usize| {
            let (i, j) = (v % side, v / side);
            (degree * i, degree * j)
        };
        let elements = mesh
            .triangles()
            .iter()
            .map(|tri| {
                let p: Vec<(usize, usize)> = tri.iter().map(|&v| lattice(v)).collect();
                let id = |(i, j): (usize, usize)| j * stride + i;
                let mut el: Vec<usize> = p.iter().map(|&q| id(q)).collect();
                if degree == 2 {
                    for (a, b) in [(0, 1), (1, 2), (2, 0)] {
                        el.push(id(((p[a].0 + p[b].0) / 2, (p[a].1 + p[b].1) / 2)));
                    }
                }
                el
            })
            .collect();
        let mut interior = vec![None; nodes.len()];
        let mut interior_nodes = Vec::new();
        for (k, &b) in boundary.iter().enumerate() {
            if !b {
                interior[k] = Some(interior_nodes.len());
                interior_nodes.push(k);
            }
        }
        Ok(Self {
            mesh,
            degree,
            components,
            nodes,
            elements,
            interior,
            interior_nodes,
        })
    }

    pub fn scalar(mesh: Arc<Mesh>, degree: usize) -> Result<Self> {
        Self::new(mesh, degree, 1)
    }

    pub fn vector(mesh: Arc<Mesh>, degree: usize) -> Result<Self> {
        Self::new(mesh, degree, 2)
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    /// Local node indices of triangle `t`: vertices, then the midpoints of
    /// edges 01, 12, 20 for P2.
    pub fn element_nodes(&self, t: usize) -> &[usize] {
        &self.elements[t]
    }

    pub fn total_dofs(&self) -> usize {
        self.nodes.len() * self.components
    }

    pub fn boundary_dofs(&self) -> usize {
        self.total_dofs() - self.dofs()
    }

    /// Number of unknowns after Dirichlet elimination.
    pub fn dofs(&self) -> usize {
        self.interior_nodes.len() * self.components
    }

    pub fn is_boundary_node(&self, node: usize) -> bool {
        self.interior[node].is_none()
    }

    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior_nodes
    }

    /// Full dof index of `(node, component)`.
    pub fn full_dof(&self, node: usize, comp: usize) -> usize {
        self.components * node + comp
    }

    /// Interior dof index of `(node, component)`, if not on the boundary.
    pub fn dof(&self, node: usize, comp: usize) -> Option<usize> {
        self.interior[node].map(|k| self.components * k + comp)
    }

    /// Full dof indices of the interior dofs, in interior order.
    pub fn interior_full_dofs(&self) -> Vec<usize> {
        self.interior_nodes
            .iter()
            .flat_map(|&nd| (0..self.components).map(move |c| self.components * nd + c))
            .collect()
    }

    /// Interior coefficient vector of the nodal interpolant of `f`.
    pub fn interpolate(&self, f: impl Fn(f64, f64) -> Vec<f64>) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dofs());
        for &nd in &self.interior_nodes {
            let [x, y] = self.nodes[nd];
            let v = f(x, y);
            out.extend_from_slice(&v[..self.components]);
        }
        out
    }

    pub fn interpolate_scalar(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        self.interpolate(|x, y| vec![f(x, y); 2])
    }

    /// Extends an interior vector by zero boundary values.
    pub fn extend(&self, interior: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.total_dofs()];
        for (k, &fd) in self.interior_full_dofs().iter().enumerate() {
            full[fd] = interior[k];
        }
        full
    }

    /// Evaluates the finite element function with full coefficient vector
    /// `full` at `(x, y)`.
    pub fn evaluate(&self, full: &[f64], x: f64, y: f64) -> Vec<f64> {
        let (t, bary) = self.mesh.locate(x, y);
        let phi = basis_values(self.degree, bary);
        let el = &self.elements[t];
        (0..self.components)
            .map(|c| el.iter().zip(&phi).map(|(&nd, p)| p * full[self.full_dof(nd, c)]).sum())
            .collect()
    }
}

/// Local basis values at barycentric coordinates `l`.
pub fn basis_values(degree: usize, l: [f64; 3]) -> Vec<f64> {
    if degree == 1 {
        return l.to_vec();
    }
    vec![
        l[0] * (2.0 * l[0] - 1.0),
        l[1] * (2.0 * l[1] - 1.0),
        l[2] * (2.0 * l[2] - 1.0),
        4.0 * l[0] * l[1],
        4.0 * l[1] * l[2],
        4.0 * l[2] * l[0],
    ]
}

/// Local basis gradients with respect to the barycentric coordinates
/// `(λ0, λ1, λ2)`.
pub fn basis_bary_gradients(degree: usize, l: [f64; 3]) -> Vec<[f64; 3]> {
    if degree == 1 {
        return vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    }
    vec![
        [4.0 * l[0] - 1.0, 0.0, 0.0],
        [0.0, 4.0 * l[1] - 1.0, 0.0],
        [0.0, 0.0, 4.0 * l[2] - 1.0],
        [4.0 * l[1], 4.0 * l[0], 0.0],
        [0.0, 4.0 * l[2], 4.0 * l[1]],
        [4.0 * l[2], 0.0, 4.0 * l[0]],
    ]
}
