use crate::error::{Error, Result};

/// Structured triangulation of the unit square.
///
/// Vertex `(i, j)` has index `j·(n+1) + i` and sits at `(i/n, j/n)`. Every
/// cell is cut along the diagonal from its lower-left to its upper-right
/// corner.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    n: usize,
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<bool>,
}

impl Mesh {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSize(n));
        }
        let side = n + 1;
        let hn = n as f64;
        let mut vertices = Vec::with_capacity(side * side);
        let mut boundary = Vec::with_capacity(side * side);
        for j in 0..side {
            for i in 0..side {
                vertices.push([i as f64 / hn, j as f64 / hn]);
                boundary.push(i == 0 || j == 0 || i == n || j == n);
            }
        }
        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let a = j * side + i;
                let b = a + 1;
                let c = b + side;
                let d = a + side;
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            }
        }
        Ok(Self {
            n,
            vertices,
            triangles,
            boundary,
        })
    }

    pub fn subdivisions(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        0.5 * ((pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]))
    }

    /// Triangle containing `(x, y)` and the point's barycentric coordinates
    /// in it. Points outside the square are clamped onto it.
    pub fn locate(&self, x: f64, y: f64) -> (usize, [f64; 3]) {
        let n = self.n;
        let sx = (x.clamp(0.0, 1.0) * n as f64).min(n as f64);
        let sy = (y.clamp(0.0, 1.0) * n as f64).min(n as f64);
        let i = (sx.floor() as usize).min(n - 1);
        let j = (sy.floor() as usize).min(n - 1);
        let s = sx - i as f64;
        let t = sy - j as f64;
        let cell = 2 * (j * n + i);
        if s >= t {
            // (a, b, c): a + s·e1 + t·e2 with b - a = e1, c - a = e1 + e2
            (cell, [1.0 - s, s - t, t])
        } else {
            // (a, c, d): c - a = e1 + e2, d - a = e2
            (cell + 1, [1.0 - t, s, t - s])
        }
    }
}
