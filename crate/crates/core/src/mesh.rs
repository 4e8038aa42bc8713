//! Structured periodic P1 triangulation of the unit cell `Y = (-1/2, 1/2)^2`.
//!
//! Each grid square is split along one of its diagonals, alternating with the
//! parity of `i + j`, so the triangulation is invariant under the mirrors
//! `x -> -x` and `y -> -y`. Nodes on the right and top edges are identified with
//! their images on the left and bottom edges; the resulting `n * n` periodic
//! nodes carry every nodal field in the crate (level sets, velocities, the
//! components of the correctors).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Element {
    /// Mesh node indices, counter-clockwise.
    pub nodes: [usize; 3],
    /// Periodic DOF index of each node.
    pub dofs: [usize; 3],
    /// Constant gradients of the three barycentric basis functions.
    pub grads: [[f64; 2]; 3],
    pub area: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "MeshSpec", into = "MeshSpec")]
pub struct UnitCellMesh {
    n: usize,
    dx: f64,
    nodes: Vec<[f64; 2]>,
    elements: Vec<Element>,
    periodic_map: Vec<usize>,
    dof_of_node: Vec<usize>,
    dof_weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MeshSpec {
    n: usize,
}

impl TryFrom<MeshSpec> for UnitCellMesh {
    type Error = Error;
    fn try_from(spec: MeshSpec) -> Result<Self> {
        UnitCellMesh::new(spec.n)
    }
}

impl From<UnitCellMesh> for MeshSpec {
    fn from(mesh: UnitCellMesh) -> Self {
        MeshSpec { n: mesh.n }
    }
}

impl UnitCellMesh {
    /// Builds the crossed-diagonal mesh with `n` cells per side. `n` must be even
    /// and at least 2 so the cell center is a node.
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 || !n.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "mesh.n must be an even integer >= 2, got {n}"
            )));
        }
        let dx = 1.0 / n as f64;
        let side = n + 1;
        let node = |i: usize, j: usize| i + j * side;

        let mut nodes = Vec::with_capacity(side * side);
        let mut periodic_map = Vec::with_capacity(side * side);
        let mut dof_of_node = Vec::with_capacity(side * side);
        for j in 0..side {
            for i in 0..side {
                nodes.push([-0.5 + i as f64 * dx, -0.5 + j as f64 * dx]);
                periodic_map.push(node(i % n, j % n));
                dof_of_node.push(i % n + (j % n) * n);
            }
        }

        let mut elements = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let a = node(i, j);
                let b = node(i + 1, j);
                let c = node(i + 1, j + 1);
                let d = node(i, j + 1);
                let tris = if (i + j) % 2 == 0 {
                    [[a, b, c], [a, c, d]]
                } else {
                    [[a, b, d], [b, c, d]]
                };
                for tri in tris {
                    elements.push(make_element(&nodes, &dof_of_node, tri));
                }
            }
        }

        let mut dof_weights = vec![0.0; n * n];
        for e in &elements {
            for &dof in &e.dofs {
                dof_weights[dof] += e.area / 3.0;
            }
        }

        Ok(Self {
            n,
            dx,
            nodes,
            elements,
            periodic_map,
            dof_of_node,
            dof_weights,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    /// Master node of every node (identity away from the right and top edges).
    pub fn periodic_map(&self) -> &[usize] {
        &self.periodic_map
    }

    pub fn dof_of_node(&self, node: usize) -> usize {
        self.dof_of_node[node]
    }

    /// Number of distinct periodic scalar DOFs, `n^2`.
    pub fn periodic_dof_count(&self) -> usize {
        self.n * self.n
    }

    /// Lumped P1 weights `∫ w_k dy` of the periodic basis functions; they sum to `|Y| = 1`.
    pub fn dof_weights(&self) -> &[f64] {
        &self.dof_weights
    }

    /// Coordinates of the grid point carrying periodic DOF `dof`.
    pub fn dof_coords(&self, dof: usize) -> [f64; 2] {
        let (i, j) = (dof % self.n, dof / self.n);
        [-0.5 + i as f64 * self.dx, -0.5 + j as f64 * self.dx]
    }

    /// Expands a periodic nodal field to all `(n+1)^2` mesh nodes.
    pub fn expand_to_nodes(&self, field: &[f64]) -> Vec<f64> {
        self.dof_of_node.iter().map(|&d| field[d]).collect()
    }

    /// Integral of a P1 nodal field over the cell.
    pub fn integrate(&self, field: &[f64]) -> f64 {
        self.elements
            .iter()
            .map(|e| e.area * (field[e.dofs[0]] + field[e.dofs[1]] + field[e.dofs[2]]) / 3.0)
            .sum()
    }

    /// Mean over the cell of a P1 nodal field (`|Y| = 1`).
    pub fn mean(&self, field: &[f64]) -> f64 {
        self.integrate(field)
    }

    /// Value at the element barycenter of a P1 nodal field.
    pub fn barycentric(&self, element: usize, field: &[f64]) -> f64 {
        let d = self.elements[element].dofs;
        (field[d[0]] + field[d[1]] + field[d[2]]) / 3.0
    }

    /// Gradient of a P1 nodal field on one element.
    pub fn gradient(&self, element: usize, field: &[f64]) -> [f64; 2] {
        let e = &self.elements[element];
        let mut g = [0.0; 2];
        for (k, &dof) in e.dofs.iter().enumerate() {
            g[0] += field[dof] * e.grads[k][0];
            g[1] += field[dof] * e.grads[k][1];
        }
        g
    }

    /// Area-weighted average of an elementwise field onto the periodic nodes.
    pub fn element_to_nodal(&self, values: &[f64]) -> Vec<f64> {
        let mut acc = vec![0.0; self.periodic_dof_count()];
        for (e, &v) in self.elements.iter().zip(values) {
            for &dof in &e.dofs {
                acc[dof] += v * e.area / 3.0;
            }
        }
        acc.iter()
            .zip(&self.dof_weights)
            .map(|(a, w)| a / w)
            .collect()
    }
}

fn make_element(nodes: &[[f64; 2]], dof_of_node: &[usize], tri: [usize; 3]) -> Element {
    let [p0, p1, p2] = tri.map(|k| nodes[k]);
    let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
    let area = 0.5 * det;
    // grad λ_k = rot90(opposite edge) / (2 area)
    let edge_grad = |a: [f64; 2], b: [f64; 2]| [(a[1] - b[1]) / det, (b[0] - a[0]) / det];
    Element {
        nodes: tri,
        dofs: tri.map(|k| dof_of_node[k]),
        grads: [edge_grad(p1, p2), edge_grad(p2, p0), edge_grad(p0, p1)],
        area,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_for_small_mesh() {
        let mesh = UnitCellMesh::new(2).unwrap();
        assert_eq!(mesh.nodes().len(), 9);
        assert_eq!(mesh.elements().len(), 8);
        let area: f64 = mesh.elements().iter().map(|e| e.area).sum();
        assert!((area - 1.0).abs() < 1e-12);
        assert_eq!(mesh.periodic_dof_count(), 4);
    }

    #[test]
    fn paper_resolution() {
        let mesh = UnitCellMesh::new(100).unwrap();
        assert_eq!(mesh.dx(), 0.01);
        assert_eq!(mesh.nodes().len(), 10201);
        assert_eq!(mesh.periodic_dof_count(), 10000);
        let distinct: std::collections::BTreeSet<_> =
            (0..mesh.nodes().len()).map(|k| mesh.dof_of_node(k)).collect();
        assert_eq!(distinct.len(), 10000);
    }

    #[test]
    fn rejects_odd_or_tiny() {
        assert!(UnitCellMesh::new(3).is_err());
        assert!(UnitCellMesh::new(0).is_err());
        assert!(UnitCellMesh::new(1).is_err());
    }

    #[test]
    fn right_edge_maps_to_left_edge() {
        let mesh = UnitCellMesh::new(4).unwrap();
        let side = 5;
        for j in 0..side {
            let right = 4 + j * side;
            let master = mesh.periodic_map()[right];
            let [x, y] = mesh.nodes()[master];
            assert_eq!(x, -0.5);
            let expected_y = if j == 4 { -0.5 } else { mesh.nodes()[right][1] };
            assert_eq!(y, expected_y);
        }
    }

    #[test]
    fn periodic_map_idempotent_and_corners_merge() {
        let mesh = UnitCellMesh::new(6).unwrap();
        let map = mesh.periodic_map();
        for &m in map {
            assert_eq!(map[m], m);
        }
        let side = 7;
        let corners = [0, 6, 6 * side, 6 * side + 6];
        for c in corners {
            assert_eq!(map[c], 0);
        }
    }

    #[test]
    fn elements_positive_and_equal() {
        let mesh = UnitCellMesh::new(8).unwrap();
        let expected = mesh.dx() * mesh.dx() / 2.0;
        for e in mesh.elements() {
            assert!((e.area - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_field_integrates_to_constant() {
        for n in [2, 4, 10, 32] {
            let mesh = UnitCellMesh::new(n).unwrap();
            let field = vec![3.25; mesh.periodic_dof_count()];
            assert!((mesh.integrate(&field) - 3.25).abs() < 1e-12);
            let w: f64 = mesh.dof_weights().iter().sum();
            assert!((w - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gradients_reproduce_affine_fields() {
        let mesh = UnitCellMesh::new(6).unwrap();
        for (k, e) in mesh.elements().iter().enumerate() {
            let nodal: Vec<f64> = e.nodes.iter().map(|&p| 2.0 * mesh.nodes()[p][0] - mesh.nodes()[p][1]).collect();
            let mut g = [0.0; 2];
            for m in 0..3 {
                g[0] += nodal[m] * e.grads[m][0];
                g[1] += nodal[m] * e.grads[m][1];
            }
            assert!((g[0] - 2.0).abs() < 1e-12 && (g[1] + 1.0).abs() < 1e-12, "element {k}");
        }
    }

    fn canonical(mesh: &UnitCellMesh, map: impl Fn(usize) -> usize) -> std::collections::BTreeSet<[usize; 3]> {
        mesh.elements()
            .iter()
            .map(|e| {
                let mut t = e.dofs.map(&map);
                t.sort_unstable();
                t
            })
            .collect()
    }

    #[test]
    fn mirror_symmetric() {
        let n = 10;
        let mesh = UnitCellMesh::new(n).unwrap();
        let identity = canonical(&mesh, |d| d);
        let mirror_x = canonical(&mesh, |d| {
            let (i, j) = (d % n, d / n);
            (n - i) % n + j * n
        });
        let mirror_y = canonical(&mesh, |d| {
            let (i, j) = (d % n, d / n);
            i + ((n - j) % n) * n
        });
        assert_eq!(identity, mirror_x);
        assert_eq!(identity, mirror_y);
    }
}
