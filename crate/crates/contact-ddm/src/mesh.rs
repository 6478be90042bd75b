//! Structured triangular meshes of rectangular bodies with tagged boundary
//! parts.
//!
//! Meshes are tensor-product grids of cells split into two triangles each,
//! with linear (3-node) or quadratic (6-node) elements. Element nodes are
//! ordered corners first, then midside nodes; local edge `k` runs from corner
//! `k` to corner `(k+1) % 3` and owns midside node `3 + k`. All triangles are
//! counterclockwise. Nodes are numbered column by column (y fastest), which
//! keeps the stiffness envelope narrow for wide, shallow bodies.

use crate::{Error, Result};
use std::collections::HashMap;
use std::io::Write;

pub type PairId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    Dirichlet,
    Neumann,
    Contact(PairId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ElementOrder {
    Linear,
    Quadratic,
}

impl ElementOrder {
    pub fn nodes_per_element(self) -> usize {
        match self {
            ElementOrder::Linear => 3,
            ElementOrder::Quadratic => 6,
        }
    }
}

/// One edge of an element lying on the mesh boundary.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryEdge {
    pub element: usize,
    pub local_edge: u8,
    pub tag: Option<BoundaryTag>,
}

/// An axis-aligned segment used to select boundary edges.
#[derive(Debug, Clone, Copy)]
pub struct Segment {
    pub a: [f64; 2],
    pub b: [f64; 2],
}

impl Segment {
    pub fn new(a: [f64; 2], b: [f64; 2]) -> Self {
        Self { a, b }
    }

    /// Whether `p` lies on the segment within distance `tol`.
    pub fn contains(&self, p: [f64; 2], tol: f64) -> bool {
        let d = [self.b[0] - self.a[0], self.b[1] - self.a[1]];
        let r = [p[0] - self.a[0], p[1] - self.a[1]];
        let len2 = d[0] * d[0] + d[1] * d[1];
        if len2 == 0.0 {
            return (r[0] * r[0] + r[1] * r[1]).sqrt() <= tol;
        }
        let cross = (d[0] * r[1] - d[1] * r[0]).abs() / len2.sqrt();
        if cross > tol {
            return false;
        }
        let t = (d[0] * r[0] + d[1] * r[1]) / len2;
        let t_tol = tol / len2.sqrt();
        (-t_tol..=1.0 + t_tol).contains(&t)
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    nodes: Vec<[f64; 2]>,
    connectivity: Vec<usize>,
    order: ElementOrder,
    boundary_edges: Vec<BoundaryEdge>,
}

impl Mesh {
    /// Assembles a mesh from raw parts without validation; callers are
    /// expected to run [`Mesh::validate`] afterwards.
    pub fn from_raw(
        nodes: Vec<[f64; 2]>,
        connectivity: Vec<usize>,
        order: ElementOrder,
        boundary_edges: Vec<BoundaryEdge>,
    ) -> Self {
        Self {
            nodes,
            connectivity,
            order,
            boundary_edges,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_elements(&self) -> usize {
        self.connectivity.len() / self.order.nodes_per_element()
    }

    pub fn order(&self) -> ElementOrder {
        self.order
    }

    pub fn node(&self, i: usize) -> [f64; 2] {
        self.nodes[i]
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn element(&self, e: usize) -> &[usize] {
        let n = self.order.nodes_per_element();
        &self.connectivity[e * n..(e + 1) * n]
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    /// Corner node ids, end corner, and optional midside node of a boundary edge.
    pub fn edge_nodes(&self, edge: &BoundaryEdge) -> (usize, usize, Option<usize>) {
        let el = self.element(edge.element);
        let k = edge.local_edge as usize;
        let mid = match self.order {
            ElementOrder::Linear => None,
            ElementOrder::Quadratic => Some(el[3 + k]),
        };
        (el[k], el[(k + 1) % 3], mid)
    }

    /// Bounding-box diagonal, used to scale geometric tolerances.
    pub fn diameter(&self) -> f64 {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.nodes {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        ((hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2)).sqrt()
    }

    pub fn geometric_tolerance(&self) -> f64 {
        1e-9 * self.diameter()
    }

    /// Signed area of the corner triangle of element `e`.
    pub fn signed_area(&self, e: usize) -> f64 {
        let el = self.element(e);
        let a = self.nodes[el[0]];
        let b = self.nodes[el[1]];
        let c = self.nodes[el[2]];
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_elements()).map(|e| self.signed_area(e)).sum()
    }

    /// Checks structural invariants: index bounds, orientation, distinct
    /// nodes, straight quadratic edges.
    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        if self.connectivity.iter().any(|&i| i >= n) {
            return Err(Error::Mesh("element references missing node".into()));
        }
        for e in 0..self.num_elements() {
            if self.signed_area(e) <= 0.0 {
                return Err(Error::Mesh(format!(
                    "element {e} has non-positive area {}",
                    self.signed_area(e)
                )));
            }
        }
        let tol = 1e-12 * self.diameter();
        let mut sorted: Vec<usize> = (0..n).collect();
        sorted.sort_by(|&i, &j| {
            self.nodes[i]
                .partial_cmp(&self.nodes[j])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        for w in sorted.windows(2) {
            let (p, q) = (self.nodes[w[0]], self.nodes[w[1]]);
            if (p[0] - q[0]).abs() <= tol && (p[1] - q[1]).abs() <= tol {
                return Err(Error::Mesh(format!(
                    "duplicate nodes {} and {}",
                    w[0], w[1]
                )));
            }
        }
        if self.order == ElementOrder::Quadratic {
            for e in 0..self.num_elements() {
                let el = self.element(e);
                for k in 0..3 {
                    let a = self.nodes[el[k]];
                    let b = self.nodes[el[(k + 1) % 3]];
                    let m = self.nodes[el[3 + k]];
                    let dx = m[0] - 0.5 * (a[0] + b[0]);
                    let dy = m[1] - 0.5 * (a[1] + b[1]);
                    if dx.abs() > tol.max(1e-14) || dy.abs() > tol.max(1e-14) {
                        return Err(Error::Mesh(format!(
                            "midside node of element {e} edge {k} is off-center"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Checks that every boundary edge carries a tag.
    pub fn validate_tagged(&self) -> Result<()> {
        for (i, e) in self.boundary_edges.iter().enumerate() {
            if e.tag.is_none() {
                let (a, b, _) = self.edge_nodes(e);
                return Err(Error::Mesh(format!(
                    "boundary edge {i} ({:?} -> {:?}) is untagged",
                    self.nodes[a], self.nodes[b]
                )));
            }
        }
        Ok(())
    }

    /// Tags every boundary edge inside `selector`; re-tagging replaces, but
    /// switching between Dirichlet and contact tags is rejected.
    pub fn tag_boundary(&mut self, selector: Segment, tag: BoundaryTag) -> Result<()> {
        let tol = self.geometric_tolerance();
        let mut hits = Vec::new();
        for (i, edge) in self.boundary_edges.iter().enumerate() {
            let (a, b, _) = self.edge_nodes(edge);
            if selector.contains(self.nodes[a], tol) && selector.contains(self.nodes[b], tol) {
                hits.push(i);
            }
        }
        if hits.is_empty() {
            return Err(Error::NoMatch(format!(
                "segment ({:?}) -> ({:?})",
                selector.a, selector.b
            )));
        }
        for i in hits {
            let old = self.boundary_edges[i].tag;
            let conflict = matches!(
                (old, tag),
                (Some(BoundaryTag::Dirichlet), BoundaryTag::Contact(_))
                    | (Some(BoundaryTag::Contact(_)), BoundaryTag::Dirichlet)
            );
            if conflict {
                return Err(Error::TagConflict(format!(
                    "edge {i} already tagged {old:?}, refusing {tag:?}"
                )));
            }
            self.boundary_edges[i].tag = Some(tag);
        }
        Ok(())
    }

    /// Node ids lying on a given segment, in arbitrary order.
    pub fn nodes_on_segment(&self, segment: Segment) -> Vec<usize> {
        let tol = self.geometric_tolerance();
        (0..self.nodes.len())
            .filter(|&i| segment.contains(self.nodes[i], tol))
            .collect()
    }

    /// Writes node, element and boundary-tag tables as plain text (debugging
    /// aid, not a stable format).
    pub fn write_text<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "# nodes {}", self.num_nodes())?;
        for (i, p) in self.nodes.iter().enumerate() {
            writeln!(w, "{i} {:.17e} {:.17e}", p[0], p[1])?;
        }
        writeln!(w, "# elements {} order {:?}", self.num_elements(), self.order)?;
        for e in 0..self.num_elements() {
            write!(w, "{e}")?;
            for n in self.element(e) {
                write!(w, " {n}")?;
            }
            writeln!(w)?;
        }
        writeln!(w, "# boundary {}", self.boundary_edges.len())?;
        for e in &self.boundary_edges {
            writeln!(w, "{} {} {:?}", e.element, e.local_edge, e.tag)?;
        }
        Ok(())
    }
}

/// Uniform structured mesh of a `width x height` rectangle anchored at
/// `origin`, with `nx x ny` cells split into two triangles each.
pub fn generate_rect_mesh(
    origin: [f64; 2],
    width: f64,
    height: f64,
    nx: usize,
    ny: usize,
    order: ElementOrder,
) -> Result<Mesh> {
    if !(width > 0.0) || !(height > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "extent must be positive, got {width} x {height}"
        )));
    }
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidArgument("nx and ny must be at least 1".into()));
    }
    let xs: Vec<f64> = (0..=nx)
        .map(|i| origin[0] + width * i as f64 / nx as f64)
        .collect();
    let ys: Vec<f64> = (0..=ny)
        .map(|j| origin[1] + height * j as f64 / ny as f64)
        .collect();
    generate_tensor_mesh(&xs, &ys, order)
}

/// Structured mesh over explicit grid lines, for graded discretizations.
pub fn generate_tensor_mesh(xs: &[f64], ys: &[f64], order: ElementOrder) -> Result<Mesh> {
    if xs.len() < 2 || ys.len() < 2 {
        return Err(Error::InvalidArgument(
            "need at least two grid lines per direction".into(),
        ));
    }
    for v in [xs, ys] {
        if v.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "grid lines must be strictly increasing".into(),
            ));
        }
    }
    let nx = xs.len() - 1;
    let ny = ys.len() - 1;

    // refined grid: one layer of nodes per element corner/midside line
    let step = match order {
        ElementOrder::Linear => 1,
        ElementOrder::Quadratic => 2,
    };
    let gx: Vec<f64> = refine_lines(xs, step);
    let gy: Vec<f64> = refine_lines(ys, step);
    let nyn = gy.len();
    let node_id = |i: usize, j: usize| i * nyn + j;

    let mut nodes = Vec::with_capacity(gx.len() * nyn);
    for &x in &gx {
        for &y in &gy {
            nodes.push([x, y]);
        }
    }

    let mut connectivity = Vec::new();
    for i in 0..nx {
        for j in 0..ny {
            let (bi, bj) = (step * i, step * j);
            let v00 = node_id(bi, bj);
            let v10 = node_id(bi + step, bj);
            let v11 = node_id(bi + step, bj + step);
            let v01 = node_id(bi, bj + step);
            match order {
                ElementOrder::Linear => {
                    connectivity.extend_from_slice(&[v00, v10, v11]);
                    connectivity.extend_from_slice(&[v00, v11, v01]);
                }
                ElementOrder::Quadratic => {
                    let m_b = node_id(bi + 1, bj);
                    let m_r = node_id(bi + 2, bj + 1);
                    let m_t = node_id(bi + 1, bj + 2);
                    let m_l = node_id(bi, bj + 1);
                    let m_d = node_id(bi + 1, bj + 1);
                    connectivity.extend_from_slice(&[v00, v10, v11, m_b, m_r, m_d]);
                    connectivity.extend_from_slice(&[v00, v11, v01, m_d, m_t, m_l]);
                }
            }
        }
    }

    // boundary edges of the cell grid; element of cell (i, j) pair is
    // 2 * (i * ny + j) for the lower triangle, + 1 for the upper.
    let mut boundary_edges = Vec::new();
    let cell = |i: usize, j: usize| 2 * (i * ny + j);
    for i in 0..nx {
        boundary_edges.push(BoundaryEdge {
            element: cell(i, 0),
            local_edge: 0,
            tag: None,
        });
        boundary_edges.push(BoundaryEdge {
            element: cell(i, ny - 1) + 1,
            local_edge: 1,
            tag: None,
        });
    }
    for j in 0..ny {
        boundary_edges.push(BoundaryEdge {
            element: cell(nx - 1, j),
            local_edge: 1,
            tag: None,
        });
        boundary_edges.push(BoundaryEdge {
            element: cell(0, j) + 1,
            local_edge: 2,
            tag: None,
        });
    }

    let mesh = Mesh {
        nodes,
        connectivity,
        order,
        boundary_edges,
    };
    debug_assert!(mesh.validate().is_ok());
    Ok(mesh)
}

fn refine_lines(v: &[f64], step: usize) -> Vec<f64> {
    if step == 1 {
        return v.to_vec();
    }
    let mut out = Vec::with_capacity(2 * v.len() - 1);
    for w in v.windows(2) {
        out.push(w[0]);
        out.push(0.5 * (w[0] + w[1]));
    }
    out.push(*v.last().unwrap());
    out
}

/// Grid lines over `[0, total_len]`: `fine_count` uniform intervals on
/// `[0, fine_len]`, then geometrically growing intervals to the far end.
pub fn graded_breakpoints(fine_len: f64, fine_count: usize, total_len: f64, growth: f64) -> Vec<f64> {
    assert!(fine_len > 0.0 && total_len >= fine_len && fine_count > 0 && growth >= 1.0);
    let h0 = fine_len / fine_count as f64;
    let mut xs: Vec<f64> = (0..=fine_count).map(|k| k as f64 * h0).collect();
    let mut h = h0;
    let mut x = fine_len;
    while x < total_len - 1e-12 * total_len {
        h *= growth;
        if x + 1.5 * h >= total_len {
            xs.push(total_len);
            break;
        }
        x += h;
        xs.push(x);
    }
    xs
}

/// Ordered contact boundary of one body: trace nodes sorted by arclength,
/// with the shared outward normal and integration edges.
#[derive(Debug, Clone)]
pub struct ContactTrace {
    pub pair: PairId,
    /// Mesh node ids sorted by arclength (midside nodes included).
    pub nodes: Vec<usize>,
    pub coords: Vec<[f64; 2]>,
    /// Arclength coordinate of each trace node, from the trace start.
    pub arclength: Vec<f64>,
    /// Outward unit normal, common to the whole (flat) trace.
    pub normal: [f64; 2],
    /// Integration edges as indices into `nodes`: [end, end] or [end, end, mid].
    pub edges: Vec<TraceEdge>,
}

#[derive(Debug, Clone)]
pub struct TraceEdge {
    pub ends: [usize; 2],
    pub mid: Option<usize>,
    pub length: f64,
}

impl ContactTrace {
    /// Extracts the ordered trace for `pair`. Fails if the pair is not
    /// tagged, or the tagged edges are not flat with a common normal.
    pub fn extract(mesh: &Mesh, pair: PairId) -> Result<Self> {
        let tol = mesh.geometric_tolerance();
        let mut raw_edges = Vec::new();
        for edge in mesh.boundary_edges() {
            if edge.tag == Some(BoundaryTag::Contact(pair)) {
                raw_edges.push(*edge);
            }
        }
        if raw_edges.is_empty() {
            return Err(Error::UnknownPair(pair));
        }

        // outward normal of a boundary edge of a counterclockwise triangle
        let edge_normal = |e: &BoundaryEdge| -> [f64; 2] {
            let (a, b, _) = mesh.edge_nodes(e);
            let (pa, pb) = (mesh.node(a), mesh.node(b));
            let d = [pb[0] - pa[0], pb[1] - pa[1]];
            let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
            [d[1] / len, -d[0] / len]
        };
        let normal = edge_normal(&raw_edges[0]);
        for e in &raw_edges[1..] {
            let n = edge_normal(e);
            if (n[0] - normal[0]).abs() > 1e-9 || (n[1] - normal[1]).abs() > 1e-9 {
                return Err(Error::Geometry(format!(
                    "contact boundary of pair {pair} is not flat"
                )));
            }
        }
        // canonical tangent: lexicographically positive, so traces of the two
        // sides of an interface sort their nodes in the same direction
        let mut tangent = [-normal[1], normal[0]];
        if tangent[0] < 0.0 || (tangent[0] == 0.0 && tangent[1] < 0.0) {
            tangent = [-tangent[0], -tangent[1]];
        }

        let mut node_set: Vec<usize> = Vec::new();
        for e in &raw_edges {
            let (a, b, m) = mesh.edge_nodes(e);
            node_set.push(a);
            node_set.push(b);
            if let Some(m) = m {
                node_set.push(m);
            }
        }
        node_set.sort_unstable();
        node_set.dedup();

        // check collinearity against the first node
        let origin = mesh.node(node_set[0]);
        for &n in &node_set {
            let p = mesh.node(n);
            let off = (p[0] - origin[0]) * normal[0] + (p[1] - origin[1]) * normal[1];
            if off.abs() > tol {
                return Err(Error::Geometry(format!(
                    "contact node {n} is off the trace line by {off:.3e}"
                )));
            }
        }

        let param = |n: usize| {
            let p = mesh.node(n);
            (p[0] - origin[0]) * tangent[0] + (p[1] - origin[1]) * tangent[1]
        };
        node_set.sort_by(|&a, &b| param(a).partial_cmp(&param(b)).unwrap());
        let s0 = param(node_set[0]);
        let arclength: Vec<f64> = node_set.iter().map(|&n| param(n) - s0).collect();
        for w in arclength.windows(2) {
            if w[1] <= w[0] + tol {
                return Err(Error::Geometry(
                    "contact trace nodes are not strictly ordered".into(),
                ));
            }
        }

        let index_of: HashMap<usize, usize> =
            node_set.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        let mut edges: Vec<TraceEdge> = raw_edges
            .iter()
            .map(|e| {
                let (a, b, m) = mesh.edge_nodes(e);
                let (pa, pb) = (mesh.node(a), mesh.node(b));
                let length = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
                TraceEdge {
                    ends: [index_of[&a], index_of[&b]],
                    mid: m.map(|m| index_of[&m]),
                    length,
                }
            })
            .collect();
        edges.sort_by(|a, b| {
            let sa = a.ends.iter().map(|&i| arclength[i]).fold(f64::INFINITY, f64::min);
            let sb = b.ends.iter().map(|&i| arclength[i]).fold(f64::INFINITY, f64::min);
            sa.partial_cmp(&sb).unwrap()
        });

        let coords = node_set.iter().map(|&n| mesh.node(n)).collect();
        Ok(Self {
            pair,
            nodes: node_set,
            coords,
            arclength,
            normal,
            edges,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Trace node ids of `pair_id`, sorted by arclength.
pub fn contact_trace_nodes(mesh: &Mesh, pair_id: PairId) -> Result<Vec<usize>> {
    Ok(ContactTrace::extract(mesh, pair_id)?.nodes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_square_linear() {
        let m = generate_rect_mesh([0.0, 0.0], 1.0, 1.0, 1, 1, ElementOrder::Linear).unwrap();
        assert_eq!(m.num_elements(), 2);
        assert_eq!(m.num_nodes(), 4);
        m.validate().unwrap();
    }

    #[test]
    fn minimal_square_quadratic() {
        let m = generate_rect_mesh([0.0, 0.0], 1.0, 1.0, 1, 1, ElementOrder::Quadratic).unwrap();
        assert_eq!(m.num_elements(), 2);
        assert_eq!(m.num_nodes(), 9);
        m.validate().unwrap();
    }

    #[test]
    fn node_counts_match_grid() {
        let m = generate_rect_mesh([0.0, 0.0], 2.0, 1.0, 4, 3, ElementOrder::Linear).unwrap();
        assert_eq!(m.num_nodes(), 5 * 4);
        assert_eq!(m.num_elements(), 2 * 4 * 3);
        let q = generate_rect_mesh([0.0, 0.0], 2.0, 1.0, 4, 3, ElementOrder::Quadratic).unwrap();
        assert_eq!(q.num_nodes(), 9 * 7);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(generate_rect_mesh([0.0, 0.0], 0.0, 1.0, 1, 1, ElementOrder::Linear).is_err());
        assert!(generate_rect_mesh([0.0, 0.0], 1.0, -1.0, 1, 1, ElementOrder::Linear).is_err());
        assert!(generate_rect_mesh([0.0, 0.0], 1.0, 1.0, 0, 1, ElementOrder::Linear).is_err());
    }

    #[test]
    fn area_is_conserved() {
        for (nx, ny, order) in [
            (1, 1, ElementOrder::Linear),
            (7, 3, ElementOrder::Linear),
            (5, 8, ElementOrder::Quadratic),
        ] {
            let m = generate_rect_mesh([1.0, -2.0], 3.0, 2.5, nx, ny, order).unwrap();
            assert!((m.total_area() - 7.5).abs() < 1e-12 * 7.5);
        }
        // graded grids conserve area too
        let xs = graded_breakpoints(1.0, 4, 3.0, 1.4);
        let ys = graded_breakpoints(0.5, 3, 2.0, 1.5);
        let m = generate_tensor_mesh(&xs, &ys, ElementOrder::Quadratic).unwrap();
        assert!((m.total_area() - 6.0).abs() < 1e-12 * 6.0);
        m.validate().unwrap();
    }

    #[test]
    fn refinement_nesting() {
        let coarse = generate_rect_mesh([0.0, 0.0], 1.0, 1.0, 3, 2, ElementOrder::Linear).unwrap();
        let fine = generate_rect_mesh([0.0, 0.0], 1.0, 1.0, 6, 4, ElementOrder::Linear).unwrap();
        for p in coarse.nodes() {
            let found = fine
                .nodes()
                .iter()
                .any(|q| (p[0] - q[0]).abs() < 1e-14 && (p[1] - q[1]).abs() < 1e-14);
            assert!(found, "coarse node {p:?} missing from refined mesh");
        }
    }

    #[test]
    fn boundary_edge_count_and_tagging() {
        let mut m = generate_rect_mesh([0.0, 0.0], 4.0, 4.0, 4, 4, ElementOrder::Quadratic).unwrap();
        assert_eq!(m.boundary_edges().len(), 16);
        m.tag_boundary(
            Segment::new([0.0, 0.0], [4.0, 0.0]),
            BoundaryTag::Dirichlet,
        )
        .unwrap();
        m.tag_boundary(Segment::new([0.0, 4.0], [2.0, 4.0]), BoundaryTag::Contact(12))
            .unwrap();
        // sides and the rest of the top
        m.tag_boundary(Segment::new([0.0, 0.0], [0.0, 4.0]), BoundaryTag::Neumann)
            .unwrap();
        m.tag_boundary(Segment::new([4.0, 0.0], [4.0, 4.0]), BoundaryTag::Neumann)
            .unwrap();
        m.tag_boundary(Segment::new([2.0, 4.0], [4.0, 4.0]), BoundaryTag::Neumann)
            .unwrap();
        m.validate_tagged().unwrap();

        let dirichlet = m
            .boundary_edges()
            .iter()
            .filter(|e| e.tag == Some(BoundaryTag::Dirichlet))
            .count();
        assert_eq!(dirichlet, 4);
        let contact = m
            .boundary_edges()
            .iter()
            .filter(|e| e.tag == Some(BoundaryTag::Contact(12)))
            .count();
        assert_eq!(contact, 2);
    }

    #[test]
    fn interior_selector_matches_nothing() {
        let mut m = generate_rect_mesh([0.0, 0.0], 1.0, 1.0, 2, 2, ElementOrder::Linear).unwrap();
        let err = m.tag_boundary(
            Segment::new([0.25, 0.5], [0.75, 0.5]),
            BoundaryTag::Neumann,
        );
        assert!(matches!(err, Err(Error::NoMatch(_))));
    }

    #[test]
    fn dirichlet_contact_overlap_conflicts() {
        let mut m = generate_rect_mesh([0.0, 0.0], 1.0, 1.0, 2, 2, ElementOrder::Linear).unwrap();
        let top = Segment::new([0.0, 1.0], [1.0, 1.0]);
        m.tag_boundary(top, BoundaryTag::Dirichlet).unwrap();
        assert!(matches!(
            m.tag_boundary(top, BoundaryTag::Contact(1)),
            Err(Error::TagConflict(_))
        ));
        // same-kind and Neumann retagging replaces
        m.tag_boundary(top, BoundaryTag::Neumann).unwrap();
        m.tag_boundary(top, BoundaryTag::Contact(1)).unwrap();
    }

    #[test]
    fn trace_node_counts() {
        for (order, expected) in [(ElementOrder::Linear, 16), (ElementOrder::Quadratic, 31)] {
            let mut m = generate_rect_mesh([0.0, 0.0], 4.0, 4.0, 30, 4, order).unwrap();
            // 15 element sides on the half-width top segment
            m.tag_boundary(Segment::new([0.0, 4.0], [2.0, 4.0]), BoundaryTag::Contact(7))
                .unwrap();
            let nodes = contact_trace_nodes(&m, 7).unwrap();
            assert_eq!(nodes.len(), expected);
            let trace = ContactTrace::extract(&m, 7).unwrap();
            assert_eq!(trace.edges.len(), 15);
            assert!(trace.arclength.windows(2).all(|w| w[1] > w[0]));
            assert_eq!(trace.normal, [0.0, 1.0]);
        }
    }

    #[test]
    fn unknown_pair_is_an_error() {
        let m = generate_rect_mesh([0.0, 0.0], 1.0, 1.0, 2, 2, ElementOrder::Linear).unwrap();
        assert!(matches!(
            contact_trace_nodes(&m, 3),
            Err(Error::UnknownPair(3))
        ));
    }

    #[test]
    fn graded_breakpoints_cover_span() {
        let xs = graded_breakpoints(2.0, 15, 4.0, 1.35);
        assert_eq!(xs[0], 0.0);
        assert_eq!(*xs.last().unwrap(), 4.0);
        assert!(xs.windows(2).all(|w| w[1] > w[0]));
        // fine region is uniform
        for k in 0..15 {
            assert!((xs[k + 1] - xs[k] - 2.0 / 15.0).abs() < 1e-12);
        }
    }

    #[test]
    fn text_dump_roundtrips_counts() {
        let m = generate_rect_mesh([0.0, 0.0], 1.0, 1.0, 2, 1, ElementOrder::Linear).unwrap();
        let mut buf = Vec::new();
        m.write_text(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("# nodes 6"));
        assert!(text.contains("# elements 4"));
    }
}
