//! Finite element assembly for plane elasticity on triangular meshes.
//!
//! A [`SubdomainProblem`] couples one mesh with its material, loads and
//! Dirichlet data and owns the dof numbering: each node carries an x and a y
//! dof, Dirichlet dofs are eliminated, and the remaining free dofs are
//! numbered in node order. Assembly produces symmetric sparse operators on
//! the free dofs; prescribed displacements enter the right-hand side through
//! the usual elimination correction.

pub mod quadrature;
pub mod sparse;

pub use sparse::{solve_spd, EnvelopeCholesky, SparseSymMatrix, TripletBuilder};

use crate::material::{constitutive_matrix, Material};
use crate::mesh::{BoundaryTag, ContactTrace, ElementOrder, Mesh, PairId, Segment};
use crate::{Error, Result};
use nalgebra::{DMatrix, Matrix2, Matrix3};
use quadrature::{EdgePoint, TrianglePoint, EDGE_2, EDGE_3, TRI_3, TRI_7};
use std::sync::Arc;

/// A displacement/force field over the plane.
pub type VectorField = Arc<dyn Fn([f64; 2]) -> [f64; 2] + Send + Sync>;

pub fn constant_field(v: [f64; 2]) -> VectorField {
    Arc::new(move |_| v)
}

pub fn zero_field() -> VectorField {
    constant_field([0.0, 0.0])
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Dof {
    Free(usize),
    Fixed(f64),
}

/// Node/component to free-dof numbering with eliminated Dirichlet dofs.
#[derive(Clone, Debug)]
pub struct DofMap {
    dofs: Vec<Dof>,
    n_free: usize,
}

impl DofMap {
    fn new(mesh: &Mesh) -> Self {
        let mut fixed = vec![false; mesh.num_nodes()];
        for edge in mesh.boundary_edges() {
            if edge.tag == Some(BoundaryTag::Dirichlet) {
                let (a, b, m) = mesh.edge_nodes(edge);
                fixed[a] = true;
                fixed[b] = true;
                if let Some(m) = m {
                    fixed[m] = true;
                }
            }
        }
        let mut dofs = Vec::with_capacity(2 * mesh.num_nodes());
        let mut n_free = 0;
        for node in 0..mesh.num_nodes() {
            for _comp in 0..2 {
                if fixed[node] {
                    dofs.push(Dof::Fixed(0.0));
                } else {
                    dofs.push(Dof::Free(n_free));
                    n_free += 1;
                }
            }
        }
        Self { dofs, n_free }
    }

    pub fn n_free(&self) -> usize {
        self.n_free
    }

    /// Free-dof index of (node, component), if not eliminated.
    pub fn free_index(&self, node: usize, comp: usize) -> Option<usize> {
        match self.dofs[2 * node + comp] {
            Dof::Free(i) => Some(i),
            Dof::Fixed(_) => None,
        }
    }

    fn value(&self, node: usize, comp: usize, u: &[f64]) -> f64 {
        match self.dofs[2 * node + comp] {
            Dof::Free(i) => u[i],
            Dof::Fixed(v) => v,
        }
    }
}

/// One elastic body: mesh, material, loads, Dirichlet data and dof map.
pub struct SubdomainProblem {
    mesh: Mesh,
    material: Material,
    d_matrix: Matrix3<f64>,
    body_force: Option<VectorField>,
    tractions: Vec<(Segment, VectorField)>,
    dof_map: DofMap,
    traces: Vec<ContactTrace>,
}

impl SubdomainProblem {
    /// Builds a problem over a fully tagged mesh. Dirichlet values default to
    /// zero; override them with [`SubdomainProblem::set_dirichlet_value`].
    pub fn new(mesh: Mesh, material: Material) -> Result<Self> {
        mesh.validate()?;
        mesh.validate_tagged()?;
        let d_matrix = constitutive_matrix(&material)?;
        let dof_map = DofMap::new(&mesh);

        let mut pair_ids: Vec<PairId> = mesh
            .boundary_edges()
            .iter()
            .filter_map(|e| match e.tag {
                Some(BoundaryTag::Contact(p)) => Some(p),
                _ => None,
            })
            .collect();
        pair_ids.sort_unstable();
        pair_ids.dedup();
        let traces = pair_ids
            .into_iter()
            .map(|p| ContactTrace::extract(&mesh, p))
            .collect::<Result<Vec<_>>>()?;

        Ok(Self {
            mesh,
            material,
            d_matrix,
            body_force: None,
            tractions: Vec::new(),
            dof_map,
            traces,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn material(&self) -> &Material {
        &self.material
    }

    pub fn dof_map(&self) -> &DofMap {
        &self.dof_map
    }

    pub fn n_free(&self) -> usize {
        self.dof_map.n_free
    }

    pub fn set_body_force(&mut self, f: VectorField) {
        self.body_force = Some(f);
    }

    /// Applies `field` as a traction on the Neumann edges inside `segment`.
    pub fn add_traction(&mut self, segment: Segment, field: VectorField) {
        self.tractions.push((segment, field));
    }

    /// Prescribes Dirichlet values on the constrained nodes inside `segment`.
    pub fn set_dirichlet_value(&mut self, segment: Segment, field: VectorField) -> Result<()> {
        let tol = self.mesh.geometric_tolerance();
        let mut hit = 0;
        for node in 0..self.mesh.num_nodes() {
            if !segment.contains(self.mesh.node(node), tol) {
                continue;
            }
            if matches!(self.dof_map.dofs[2 * node], Dof::Fixed(_)) {
                let v = field(self.mesh.node(node));
                self.dof_map.dofs[2 * node] = Dof::Fixed(v[0]);
                self.dof_map.dofs[2 * node + 1] = Dof::Fixed(v[1]);
                hit += 1;
            }
        }
        if hit == 0 {
            return Err(Error::NoMatch(
                "no Dirichlet node inside prescribed-value segment".into(),
            ));
        }
        Ok(())
    }

    /// Contact trace of `pair` on this body.
    pub fn trace(&self, pair: PairId) -> Result<&ContactTrace> {
        self.traces
            .iter()
            .find(|t| t.pair == pair)
            .ok_or(Error::UnknownPair(pair))
    }

    pub fn traces(&self) -> &[ContactTrace] {
        &self.traces
    }

    /// Displacement vector at a node, combining free and prescribed dofs.
    pub fn node_displacement(&self, u: &[f64], node: usize) -> [f64; 2] {
        [
            self.dof_map.value(node, 0, u),
            self.dof_map.value(node, 1, u),
        ]
    }
}

fn triangle_rule(order: ElementOrder) -> &'static [TrianglePoint] {
    match order {
        ElementOrder::Linear => &TRI_3,
        ElementOrder::Quadratic => &TRI_7,
    }
}

pub(crate) fn edge_rule(order: ElementOrder) -> &'static [EdgePoint] {
    match order {
        ElementOrder::Linear => &EDGE_2,
        ElementOrder::Quadratic => &EDGE_3,
    }
}

/// Shape functions at a reference point; `out` sized 3 or 6.
fn shape_functions(order: ElementOrder, xi: f64, eta: f64, out: &mut [f64]) {
    let l1 = 1.0 - xi - eta;
    match order {
        ElementOrder::Linear => {
            out[0] = l1;
            out[1] = xi;
            out[2] = eta;
        }
        ElementOrder::Quadratic => {
            out[0] = l1 * (2.0 * l1 - 1.0);
            out[1] = xi * (2.0 * xi - 1.0);
            out[2] = eta * (2.0 * eta - 1.0);
            out[3] = 4.0 * l1 * xi;
            out[4] = 4.0 * xi * eta;
            out[5] = 4.0 * eta * l1;
        }
    }
}

/// Reference-coordinate gradients: `out[i] = (dN_i/dxi, dN_i/deta)`.
fn shape_gradients(order: ElementOrder, xi: f64, eta: f64, out: &mut [[f64; 2]]) {
    let l1 = 1.0 - xi - eta;
    match order {
        ElementOrder::Linear => {
            out[0] = [-1.0, -1.0];
            out[1] = [1.0, 0.0];
            out[2] = [0.0, 1.0];
        }
        ElementOrder::Quadratic => {
            out[0] = [1.0 - 4.0 * l1, 1.0 - 4.0 * l1];
            out[1] = [4.0 * xi - 1.0, 0.0];
            out[2] = [0.0, 4.0 * eta - 1.0];
            out[3] = [4.0 * (l1 - xi), -4.0 * xi];
            out[4] = [4.0 * eta, 4.0 * xi];
            out[5] = [-4.0 * eta, 4.0 * (l1 - eta)];
        }
    }
}

/// Element stiffness integral of B' D B over a straight-edged triangle.
pub fn element_stiffness(
    corners: [[f64; 2]; 3],
    d: &Matrix3<f64>,
    order: ElementOrder,
) -> Result<DMatrix<f64>> {
    let n = order.nodes_per_element();
    let jac = Matrix2::new(
        corners[1][0] - corners[0][0],
        corners[2][0] - corners[0][0],
        corners[1][1] - corners[0][1],
        corners[2][1] - corners[0][1],
    );
    let det = jac.determinant();
    if det <= 0.0 {
        return Err(Error::Mesh(format!(
            "degenerate element (jacobian determinant {det:.3e})"
        )));
    }
    let jinv_t = jac
        .try_inverse()
        .expect("nonsingular jacobian")
        .transpose();

    let mut ke = DMatrix::zeros(2 * n, 2 * n);
    let mut grads = [[0.0f64; 2]; 6];
    let mut b = DMatrix::zeros(3, 2 * n);
    for q in triangle_rule(order) {
        shape_gradients(order, q.xi, q.eta, &mut grads[..n]);
        for i in 0..n {
            let g = jinv_t * nalgebra::Vector2::new(grads[i][0], grads[i][1]);
            b[(0, 2 * i)] = g[0];
            b[(1, 2 * i + 1)] = g[1];
            b[(2, 2 * i)] = g[1];
            b[(2, 2 * i + 1)] = g[0];
        }
        let w = q.weight * det;
        // ke += w * B' D B
        let db = d * &b;
        ke.gemm_tr(w, &b, &db, 1.0);
    }
    Ok(ke)
}

struct AssembledStiffness {
    matrix: SparseSymMatrix,
    /// RHS correction from eliminated prescribed displacements.
    dirichlet_correction: Vec<f64>,
}

fn assemble_stiffness_parts(problem: &SubdomainProblem) -> Result<AssembledStiffness> {
    let mesh = &problem.mesh;
    let map = &problem.dof_map;
    let mut builder = TripletBuilder::new(map.n_free);
    let mut correction = vec![0.0; map.n_free];
    let n = mesh.order().nodes_per_element();

    for e in 0..mesh.num_elements() {
        let el = mesh.element(e);
        let corners = [mesh.node(el[0]), mesh.node(el[1]), mesh.node(el[2])];
        let ke = element_stiffness(corners, &problem.d_matrix, mesh.order())?;
        for i in 0..n {
            for ci in 0..2 {
                let Some(gi) = map.free_index(el[i], ci) else {
                    continue;
                };
                for j in 0..n {
                    for cj in 0..2 {
                        let kij = ke[(2 * i + ci, 2 * j + cj)];
                        match map.dofs[2 * el[j] + cj] {
                            Dof::Free(gj) => {
                                if gj <= gi {
                                    builder.add(gi, gj, kij);
                                }
                            }
                            Dof::Fixed(v) => {
                                correction[gi] -= kij * v;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(AssembledStiffness {
        matrix: builder.build(),
        dirichlet_correction: correction,
    })
}

/// Stiffness operator restricted to free dofs (SPD after elimination).
pub fn assemble_stiffness(problem: &SubdomainProblem) -> Result<SparseSymMatrix> {
    Ok(assemble_stiffness_parts(problem)?.matrix)
}

/// Stiffness over all dofs of a mesh, nothing eliminated. Singular; used for
/// nullspace checks and debugging.
pub fn assemble_stiffness_unconstrained(mesh: &Mesh, material: &Material) -> Result<SparseSymMatrix> {
    mesh.validate()?;
    let d = constitutive_matrix(material)?;
    let n = mesh.order().nodes_per_element();
    let mut builder = TripletBuilder::new(2 * mesh.num_nodes());
    for e in 0..mesh.num_elements() {
        let el = mesh.element(e);
        let corners = [mesh.node(el[0]), mesh.node(el[1]), mesh.node(el[2])];
        let ke = element_stiffness(corners, &d, mesh.order())?;
        for i in 0..n {
            for ci in 0..2 {
                let gi = 2 * el[i] + ci;
                for j in 0..n {
                    for cj in 0..2 {
                        let gj = 2 * el[j] + cj;
                        if gj <= gi {
                            builder.add(gi, gj, ke[(2 * i + ci, 2 * j + cj)]);
                        }
                    }
                }
            }
        }
    }
    Ok(builder.build())
}

/// External load vector: body force plus tractions on Neumann edges.
pub fn assemble_load(problem: &SubdomainProblem) -> Result<Vec<f64>> {
    let mesh = &problem.mesh;
    let map = &problem.dof_map;
    let mut load = vec![0.0; map.n_free];
    let n = mesh.order().nodes_per_element();

    if let Some(f) = &problem.body_force {
        let mut shp = [0.0f64; 6];
        for e in 0..mesh.num_elements() {
            let el = mesh.element(e);
            let corners = [mesh.node(el[0]), mesh.node(el[1]), mesh.node(el[2])];
            let jac_det = 2.0 * mesh.signed_area(e);
            for q in triangle_rule(mesh.order()) {
                shape_functions(mesh.order(), q.xi, q.eta, &mut shp[..n]);
                let x = [
                    corners[0][0]
                        + (corners[1][0] - corners[0][0]) * q.xi
                        + (corners[2][0] - corners[0][0]) * q.eta,
                    corners[0][1]
                        + (corners[1][1] - corners[0][1]) * q.xi
                        + (corners[2][1] - corners[0][1]) * q.eta,
                ];
                let fv = f(x);
                let w = q.weight * jac_det;
                for i in 0..n {
                    for c in 0..2 {
                        if let Some(gi) = map.free_index(el[i], c) {
                            load[gi] += w * shp[i] * fv[c];
                        }
                    }
                }
            }
        }
    }

    for (segment, field) in &problem.tractions {
        let tol = mesh.geometric_tolerance();
        let mut matched = false;
        for edge in mesh.boundary_edges() {
            if edge.tag != Some(BoundaryTag::Neumann) {
                continue;
            }
            let (a, b, m) = mesh.edge_nodes(edge);
            let (pa, pb) = (mesh.node(a), mesh.node(b));
            if !(segment.contains(pa, tol) && segment.contains(pb, tol)) {
                continue;
            }
            matched = true;
            let length = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
            let nodes: &[usize] = match m {
                None => &[a, b][..],
                Some(ref mm) => &[a, b, *mm][..],
            };
            for q in edge_rule(mesh.order()) {
                let shp = edge_shape(mesh.order(), q.s);
                let t = 0.5 * (q.s + 1.0);
                let x = [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])];
                let pv = field(x);
                let w = q.weight * 0.5 * length;
                for (i, &node) in nodes.iter().enumerate() {
                    for c in 0..2 {
                        if let Some(gi) = map.free_index(node, c) {
                            load[gi] += w * shp[i] * pv[c];
                        }
                    }
                }
            }
        }
        if !matched {
            return Err(Error::Config(format!(
                "traction segment ({:?}) -> ({:?}) matches no Neumann edge",
                segment.a, segment.b
            )));
        }
    }
    Ok(load)
}

/// Complete linear system: stiffness and load including the elimination
/// correction for prescribed displacements.
pub fn assemble_system(problem: &SubdomainProblem) -> Result<(SparseSymMatrix, Vec<f64>)> {
    let parts = assemble_stiffness_parts(problem)?;
    let mut load = assemble_load(problem)?;
    for (l, c) in load.iter_mut().zip(&parts.dirichlet_correction) {
        *l += c;
    }
    Ok((parts.matrix, load))
}

/// 1D shape functions on a trace edge, ordered [end0, end1, mid].
pub(crate) fn edge_shape(order: ElementOrder, s: f64) -> [f64; 3] {
    match order {
        ElementOrder::Linear => [0.5 * (1.0 - s), 0.5 * (1.0 + s), 0.0],
        ElementOrder::Quadratic => [0.5 * s * (s - 1.0), 0.5 * s * (s + 1.0), 1.0 - s * s],
    }
}

/// Weighted normal-trace mass matrix on the contact boundary of one body:
/// entries of the integral of `w(x) (n . u)(n . v)` over the tagged edges,
/// where `w` is the nodal `weight` field interpolated along the trace and
/// clamped to [0, 1]. Supported only on contact-trace dofs; positive
/// semidefinite.
pub fn assemble_contact_edge_mass(
    problem: &SubdomainProblem,
    pair_id: PairId,
    weight: &[f64],
) -> Result<SparseSymMatrix> {
    let trace = problem.trace(pair_id)?;
    if weight.len() != trace.len() {
        return Err(Error::SizeMismatch {
            expected: trace.len(),
            got: weight.len(),
            context: "contact weight field".into(),
        });
    }
    let map = &problem.dof_map;
    let order = problem.mesh.order();
    let normal = trace.normal;
    let mut builder = TripletBuilder::new(map.n_free);

    for edge in &trace.edges {
        let locals: &[usize] = match edge.mid {
            None => &edge.ends[..],
            Some(ref m) => &[edge.ends[0], edge.ends[1], *m][..],
        };
        let k = locals.len();
        let mut me = [[0.0f64; 3]; 3];
        for q in edge_rule(order) {
            let shp = edge_shape(order, q.s);
            let wq: f64 = locals
                .iter()
                .enumerate()
                .map(|(i, &l)| weight[l] * shp[i])
                .sum();
            let wq = wq.clamp(0.0, 1.0);
            let scale = q.weight * 0.5 * edge.length * wq;
            for i in 0..k {
                for j in 0..k {
                    me[i][j] += scale * shp[i] * shp[j];
                }
            }
        }
        for i in 0..k {
            for j in 0..k {
                for ci in 0..2 {
                    for cj in 0..2 {
                        let coeff = me[i][j] * normal[ci] * normal[cj];
                        if coeff == 0.0 {
                            continue;
                        }
                        let (Some(gi), Some(gj)) = (
                            map.free_index(trace.nodes[locals[i]], ci),
                            map.free_index(trace.nodes[locals[j]], cj),
                        ) else {
                            continue;
                        };
                        if gj <= gi {
                            builder.add(gi, gj, coeff);
                        }
                    }
                }
            }
        }
    }
    Ok(builder.build())
}

/// Outward-normal displacement at the contact trace nodes of `pair_id`.
pub fn trace_normal(problem: &SubdomainProblem, pair_id: PairId, u: &[f64]) -> Result<Vec<f64>> {
    let trace = problem.trace(pair_id)?;
    if u.len() != problem.n_free() {
        return Err(Error::SizeMismatch {
            expected: problem.n_free(),
            got: u.len(),
            context: "displacement vector".into(),
        });
    }
    Ok(trace
        .nodes
        .iter()
        .map(|&node| {
            let d = problem.node_displacement(u, node);
            d[0] * trace.normal[0] + d[1] * trace.normal[1]
        })
        .collect())
}

/// Scatters per-node loads on the normal contact dofs of `pair_id` into a
/// free-dof vector: `out[dof(node)] += n_c * loads[node]`.
pub fn scatter_normal_loads(
    problem: &SubdomainProblem,
    pair_id: PairId,
    loads: &[f64],
    out: &mut [f64],
) -> Result<()> {
    let trace = problem.trace(pair_id)?;
    if loads.len() != trace.len() {
        return Err(Error::SizeMismatch {
            expected: trace.len(),
            got: loads.len(),
            context: "normal load vector".into(),
        });
    }
    for (local, &node) in trace.nodes.iter().enumerate() {
        for c in 0..2 {
            if let Some(g) = problem.dof_map.free_index(node, c) {
                out[g] += trace.normal[c] * loads[local];
            }
        }
    }
    Ok(())
}
