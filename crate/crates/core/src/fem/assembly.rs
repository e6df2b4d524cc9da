//! Global matrices and load vectors on [`FeSpace`]s.
//!
//! The `*_full` variants assemble over every node including the boundary;
//! the plain variants return the interior block left after Dirichlet
//! elimination.

use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;

use super::quadrature::{self, Rule};
use super::space::{basis_bary_gradients, basis_values, FeSpace};

/// Basis data of one local space at one quadrature point.
struct PointEval {
    values: Vec<f64>,
    grads: Vec<[f64; 2]>,
}

struct Element {
    /// quadrature weight times |det J|, per point
    weights: Vec<f64>,
    points: Vec<[f64; 2]>,
    bary_grads: [[f64; 2]; 3],
    bary: Vec<[f64; 3]>,
}

impl Element {
    fn new(space: &FeSpace, t: usize, rule: &Rule) -> Self {
        let mesh = space.mesh();
        let [a, b, c] = mesh.triangles()[t];
        let (p0, p1, p2) = (mesh.vertices()[a], mesh.vertices()[b], mesh.vertices()[c]);
        let j = [[p1[0] - p0[0], p2[0] - p0[0]], [p1[1] - p0[1], p2[1] - p0[1]]];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        // rows of J^{-1} are the gradients of λ1, λ2
        let g1 = [j[1][1] / det, -j[0][1] / det];
        let g2 = [-j[1][0] / det, j[0][0] / det];
        let g0 = [-g1[0] - g2[0], -g1[1] - g2[1]];
        let bary: Vec<[f64; 3]> = rule.points.iter().map(|&[x, y]| [1.0 - x - y, x, y]).collect();
        let points = bary
            .iter()
            .map(|l| {
                [
                    l[0] * p0[0] + l[1] * p1[0] + l[2] * p2[0],
                    l[0] * p0[1] + l[1] * p1[1] + l[2] * p2[1],
                ]
            })
            .collect();
        Self {
            weights: rule.weights.iter().map(|w| w * det.abs()).collect(),
            points,
            bary_grads: [g0, g1, g2],
            bary,
        }
    }

    fn eval(&self, degree: usize, q: usize) -> PointEval {
        let l = self.bary[q];
        let values = basis_values(degree, l);
        let grads = basis_bary_gradients(degree, l)
            .iter()
            .map(|d| {
                let mut g = [0.0; 2];
                for k in 0..3 {
                    g[0] += d[k] * self.bary_grads[k][0];
                    g[1] += d[k] * self.bary_grads[k][1];
                }
                g
            })
            .collect();
        PointEval { values, grads }
    }
}

fn rule_for(d1: usize, d2: usize) -> Rule {
    if d1 == 1 && d2 == 1 {
        quadrature::three_point()
    } else {
        quadrature::six_point()
    }
}

fn restrict(full: &SparseMatrix, rows: &FeSpace, cols: &FeSpace) -> SparseMatrix {
    full.submatrix(&rows.interior_full_dofs(), &cols.interior_full_dofs())
}

fn require_components(space: &FeSpace, comps: usize, what: &str) -> Result<()> {
    if space.components() != comps {
        return Err(Error::DimensionMismatch(format!(
            "{what} needs a space with {comps} component(s), got {}",
            space.components()
        )));
    }
    Ok(())
}

/// Full elasticity matrix for `∫ 2μ ε(u):ε(v) + λ (∇·u)(∇·v)`.
pub fn assemble_elasticity_full(space: &FeSpace, lambda: f64, mu: f64) -> Result<SparseMatrix> {
    require_components(space, 2, "elasticity")?;
    let rule = rule_for(space.degree(), space.degree());
    let mut trip = Vec::new();
    for t in 0..space.mesh().triangles().len() {
        let el = Element::new(space, t, &rule);
        let nodes = space.element_nodes(t);
        let k = nodes.len();
        let mut local = vec![0.0; 4 * k * k];
        for q in 0..el.weights.len() {
            let w = el.weights[q];
            let ev = el.eval(space.degree(), q);
            for a in 0..k {
                for b in 0..k {
                    let ga = ev.grads[a];
                    let gb = ev.grads[b];
                    let dot = ga[0] * gb[0] + ga[1] * gb[1];
                    for c in 0..2 {
                        for d in 0..2 {
                            let mut v = mu * ga[d] * gb[c] + lambda * ga[c] * gb[d];
                            if c == d {
                                v += mu * dot;
                            }
                            local[(2 * a + c) * 2 * k + 2 * b + d] += w * v;
                        }
                    }
                }
            }
        }
        for a in 0..k {
            for c in 0..2 {
                for b in 0..k {
                    for d in 0..2 {
                        trip.push((
                            space.full_dof(nodes[a], c),
                            space.full_dof(nodes[b], d),
                            local[(2 * a + c) * 2 * k + 2 * b + d],
                        ));
                    }
                }
            }
        }
    }
    SparseMatrix::from_triplets(space.total_dofs(), space.total_dofs(), &trip)
}

pub fn assemble_elasticity(space: &FeSpace, lambda: f64, mu: f64) -> Result<SparseMatrix> {
    Ok(restrict(&assemble_elasticity_full(space, lambda, mu)?, space, space))
}

fn assemble_scalar_form(
    space: &FeSpace,
    integrand: impl Fn(&PointEval, usize, usize) -> f64,
) -> Result<SparseMatrix> {
    require_components(space, 1, "scalar form")?;
    let rule = rule_for(space.degree(), space.degree());
    let mut trip = Vec::new();
    for t in 0..space.mesh().triangles().len() {
        let el = Element::new(space, t, &rule);
        let nodes = space.element_nodes(t);
        let k = nodes.len();
        let mut local = vec![0.0; k * k];
        for q in 0..el.weights.len() {
            let ev = el.eval(space.degree(), q);
            for a in 0..k {
                for b in 0..k {
                    local[a * k + b] += el.weights[q] * integrand(&ev, a, b);
                }
            }
        }
        for a in 0..k {
            for b in 0..k {
                trip.push((nodes[a], nodes[b], local[a * k + b]));
            }
        }
    }
    SparseMatrix::from_triplets(space.total_dofs(), space.total_dofs(), &trip)
}

/// Full matrix of `∫ coeff ∇p·∇q`.
pub fn assemble_scalar_stiffness_full(space: &FeSpace, coeff: f64) -> Result<SparseMatrix> {
    assemble_scalar_form(space, |ev, a, b| {
        coeff * (ev.grads[a][0] * ev.grads[b][0] + ev.grads[a][1] * ev.grads[b][1])
    })
}

pub fn assemble_scalar_stiffness(space: &FeSpace, coeff: f64) -> Result<SparseMatrix> {
    Ok(restrict(&assemble_scalar_stiffness_full(space, coeff)?, space, space))
}

/// Full matrix of `∫ coeff p q`.
pub fn assemble_scaled_mass_full(space: &FeSpace, coeff: f64) -> Result<SparseMatrix> {
    assemble_scalar_form(space, |ev, a, b| coeff * ev.values[a] * ev.values[b])
}

pub fn assemble_scaled_mass(space: &FeSpace, coeff: f64) -> Result<SparseMatrix> {
    Ok(restrict(&assemble_scaled_mass_full(space, coeff)?, space, space))
}

/// Full matrix of `∫ coeff (∇·u) q`, rows indexed by the scalar space.
pub fn assemble_coupling_full(vspace: &FeSpace, sspace: &FeSpace, coeff: f64) -> Result<SparseMatrix> {
    require_components(vspace, 2, "coupling trial space")?;
    require_components(sspace, 1, "coupling test space")?;
    if vspace.mesh().subdivisions() != sspace.mesh().subdivisions() {
        return Err(Error::MeshMismatch);
    }
    let rule = rule_for(vspace.degree(), sspace.degree());
    let mut trip = Vec::new();
    for t in 0..vspace.mesh().triangles().len() {
        // both spaces share the geometry of triangle t
        let el = Element::new(vspace, t, &rule);
        let vnodes = vspace.element_nodes(t);
        let snodes = sspace.element_nodes(t);
        let mut local = vec![0.0; snodes.len() * 2 * vnodes.len()];
        let cols = 2 * vnodes.len();
        for q in 0..el.weights.len() {
            let ev = el.eval(vspace.degree(), q);
            let es = el.eval(sspace.degree(), q);
            for i in 0..snodes.len() {
                for b in 0..vnodes.len() {
                    for d in 0..2 {
                        local[i * cols + 2 * b + d] += el.weights[q] * coeff * ev.grads[b][d] * es.values[i];
                    }
                }
            }
        }
        for i in 0..snodes.len() {
            for b in 0..vnodes.len() {
                for d in 0..2 {
                    trip.push((snodes[i], vspace.full_dof(vnodes[b], d), local[i * cols + 2 * b + d]));
                }
            }
        }
    }
    SparseMatrix::from_triplets(sspace.total_dofs(), vspace.total_dofs(), &trip)
}

pub fn assemble_coupling(vspace: &FeSpace, sspace: &FeSpace, coeff: f64) -> Result<SparseMatrix> {
    Ok(restrict(&assemble_coupling_full(vspace, sspace, coeff)?, sspace, vspace))
}

/// Interior load vector `∫ f·v` for a source with one entry per component.
pub fn assemble_load(space: &FeSpace, f: impl Fn(f64, f64) -> Vec<f64>) -> Vec<f64> {
    let rule = quadrature::six_point();
    let comps = space.components();
    let mut full = vec![0.0; space.total_dofs()];
    for t in 0..space.mesh().triangles().len() {
        let el = Element::new(space, t, &rule);
        let nodes = space.element_nodes(t);
        for q in 0..el.weights.len() {
            let [x, y] = el.points[q];
            let fv = f(x, y);
            let ev = el.eval(space.degree(), q);
            for (a, &nd) in nodes.iter().enumerate() {
                for c in 0..comps {
                    full[space.full_dof(nd, c)] += el.weights[q] * fv[c] * ev.values[a];
                }
            }
        }
    }
    space.interior_full_dofs().iter().map(|&d| full[d]).collect()
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::fem::Mesh;

    fn spaces(n: usize, deg: usize) -> (FeSpace, FeSpace) {
        let m = Arc::new(Mesh::new(n).unwrap());
        (FeSpace::vector(m.clone(), deg).unwrap(), FeSpace::scalar(m, 1).unwrap())
    }

    fn quad_form(m: &SparseMatrix, v: &[f64]) -> f64 {
        m.mul_vec(v).unwrap().iter().zip(v).map(|(a, b)| a * b).sum()
    }

    #[test]
    fn rigid_translation_in_kernel() {
        for deg in [1, 2] {
            let (v, _) = spaces(3, deg);
            let a = assemble_elasticity_full(&v, 1.2, 0.6).unwrap();
            let tr: Vec<f64> = (0..v.total_dofs()).map(|k| if k % 2 == 0 { 1.0 } else { -0.5 }).collect();
            let r = a.mul_vec(&tr).unwrap();
            assert!(r.iter().all(|x| x.abs() < 1e-12));
        }
    }

    #[test]
    fn patch_test_energy() {
        let (lambda, mu) = (1.7, 0.4);
        for deg in [1, 2] {
            let (v, _) = spaces(4, deg);
            let a = assemble_elasticity_full(&v, lambda, mu).unwrap();
            let u: Vec<f64> = (0..v.total_dofs())
                .map(|k| if k % 2 == 0 { v.nodes()[k / 2][0] } else { 0.0 })
                .collect();
            assert!((quad_form(&a, &u) - (2.0 * mu + lambda)).abs() < 1e-10);
        }
    }

    #[test]
    fn stiffness_kernel_and_linearity() {
        let (_, s) = spaces(4, 1);
        let k1 = assemble_scalar_stiffness_full(&s, 1.0).unwrap();
        for i in 0..k1.nrows() {
            let (_, vals) = k1.row(i);
            assert!(vals.iter().sum::<f64>().abs() < 1e-12);
        }
        let k2 = assemble_scalar_stiffness(&s, 2.0).unwrap();
        let k1i = assemble_scalar_stiffness(&s, 1.0).unwrap();
        for (i, j, v) in k2.triplets() {
            assert_eq!(v, 2.0 * k1i.get(i, j));
        }
        let (_, s2) = spaces(2, 1);
        let b = assemble_scalar_stiffness(&s2, 3.0).unwrap();
        assert_eq!(b.shape(), (1, 1));
        assert!((b.get(0, 0) - 12.0).abs() < 1e-12);
    }

    #[test]
    fn mass_total_and_element_matrix() {
        let (_, s) = spaces(5, 1);
        let m = assemble_scaled_mass_full(&s, 7.8e3).unwrap();
        let total: f64 = m.triplets().map(|t| t.2).sum();
        assert!((total - 7.8e3).abs() <= 1e-6 * 7.8e3);

        // single element check on n = 1: triangle (0,1,3) of area 1/2
        let (_, s1) = spaces(1, 1);
        let m1 = assemble_scaled_mass_full(&s1, 1.0).unwrap();
        // node 1 = (1,0) belongs only to the first triangle
        assert!((m1.get(1, 1) - 0.5 / 12.0 * 2.0).abs() < 1e-15);
        assert!((m1.get(1, 0) - 0.5 / 12.0).abs() < 1e-15);
        // the diagonal edge 0-3 is shared by both triangles
        assert!((m1.get(0, 3) - 2.0 * 0.5 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn coupling_identities() {
        for deg in [1, 2] {
            let (v, s) = spaces(4, deg);
            let d = assemble_coupling_full(&v, &s, 0.7).unwrap();
            let u: Vec<f64> = (0..v.total_dofs()).map(|k| v.nodes()[k / 2][k % 2]).collect();
            let du = d.mul_vec(&u).unwrap();
            assert!((du.iter().sum::<f64>() - 1.4).abs() < 1e-12);

            // rigid rotation (-y, x) is divergence free
            let rot: Vec<f64> = (0..v.total_dofs())
                .map(|k| {
                    let p = v.nodes()[k / 2];
                    if k % 2 == 0 {
                        -(p[1] - 0.5)
                    } else {
                        p[0] - 0.5
                    }
                })
                .collect();
            let dr = d.mul_vec(&rot).unwrap();
            assert!(dr.iter().map(|x| x * x).sum::<f64>().sqrt() < 1e-10);

            let d2 = assemble_coupling(&v, &s, 1.4).unwrap();
            let d1 = assemble_coupling(&v, &s, 0.7).unwrap();
            for (i, j, val) in d2.triplets() {
                assert!((val - 2.0 * d1.get(i, j)).abs() <= 1e-15 * val.abs());
            }
        }
    }

    #[test]
    fn mesh_mismatch() {
        let (v, _) = spaces(3, 1);
        let (_, s) = spaces(4, 1);
        assert_eq!(assemble_coupling(&v, &s, 1.0), Err(Error::MeshMismatch));
    }

    #[test]
    fn elasticity_spd_on_geothermal_values() {
        let (v, _) = spaces(4, 2);
        let a = assemble_elasticity(&v, 1.2e10, 6e9).unwrap();
        assert!(a.is_symmetric(1e-12));
        assert!(crate::linalg::Factorization::cholesky(&a).is_ok());
    }

    #[test]
    fn load_of_constant_is_mass_row_sum() {
        let (_, s) = spaces(4, 1);
        let l = assemble_load(&s, |_, _| vec![2.0]);
        let m = assemble_scaled_mass_full(&s, 2.0).unwrap();
        let ones = vec![1.0; s.total_dofs()];
        let full = m.mul_vec(&ones).unwrap();
        for (k, &d) in s.interior_full_dofs().iter().enumerate() {
            assert!((l[k] - full[d]).abs() < 1e-14);
        }
    }
}
