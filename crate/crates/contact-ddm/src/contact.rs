//! Contact coupling between paired bodies: gap functions, node pairing,
//! penalty residuals and energies, contact stress recovery, and the
//! characteristic-function policies selecting Robin subareas.
//!
//! Both sides of an interface must carry node-matching discretizations: the
//! traces have equal node counts and paired nodes are aligned along the flat
//! interface, so the pairing is the identity on arclength-sorted nodes.
//!
//! Sign convention: a nonnegative gap means initial separation. Penetration
//! of a displacement state is `min(0, gap - u_an - u_bn)`; it is zero while
//! the bodies stay apart and negative once the penalty layer is compressed.
//! Penalty integrands interpolate the argument `gap - u_an - u_bn` along the
//! trace and apply the negative part at the quadrature points; there is no
//! subcell splitting at the free boundary.

use crate::fem::{edge_rule, edge_shape, SubdomainProblem};
use crate::mesh::{ElementOrder, PairId, TraceEdge};
use crate::{Error, Result};

/// A matched pair of contact boundaries with its initial gap.
#[derive(Debug, Clone)]
pub struct ContactPair {
    pub id: PairId,
    /// Index of the first body in the problem list.
    pub body_a: usize,
    /// Index of the second body in the problem list.
    pub body_b: usize,
    /// Initial gap sampled at the trace nodes.
    pub gap: Vec<f64>,
    arclength: Vec<f64>,
    coords: Vec<[f64; 2]>,
    edges: Vec<TraceEdge>,
    order: ElementOrder,
}

impl ContactPair {
    /// Pairs the `pair_id` traces of two bodies and samples `gap_fn` at the
    /// trace nodes. The discretizations must match node for node.
    pub fn build(
        body_a: usize,
        problem_a: &SubdomainProblem,
        body_b: usize,
        problem_b: &SubdomainProblem,
        pair_id: PairId,
        gap_fn: impl Fn([f64; 2]) -> f64,
    ) -> Result<Self> {
        let ta = problem_a.trace(pair_id)?;
        let tb = problem_b.trace(pair_id)?;
        if ta.len() != tb.len() {
            return Err(Error::NonMatchingMesh(format!(
                "pair {pair_id}: {} nodes on body {body_a} vs {} on body {body_b}",
                ta.len(),
                tb.len()
            )));
        }
        let tol = problem_a
            .mesh()
            .geometric_tolerance()
            .max(problem_b.mesh().geometric_tolerance());
        // paired traces must face each other
        let ndot = ta.normal[0] * tb.normal[0] + ta.normal[1] * tb.normal[1];
        if ndot > -1.0 + 1e-9 {
            return Err(Error::Geometry(format!(
                "pair {pair_id}: traces do not face each other (normals {:?} and {:?})",
                ta.normal, tb.normal
            )));
        }
        let tangent = [-ta.normal[1], ta.normal[0]];
        for j in 0..ta.len() {
            let (pa, pb) = (ta.coords[j], tb.coords[j]);
            let misalign = ((pa[0] - pb[0]) * tangent[0] + (pa[1] - pb[1]) * tangent[1]).abs();
            if misalign > tol {
                return Err(Error::Geometry(format!(
                    "pair {pair_id}: node {j} misaligned by {misalign:.3e}"
                )));
            }
        }
        let gap: Vec<f64> = ta.coords.iter().map(|&p| gap_fn(p)).collect();
        if gap.iter().any(|g| !g.is_finite()) {
            return Err(Error::InvalidArgument("gap function is not finite".into()));
        }
        Ok(Self {
            id: pair_id,
            body_a,
            body_b,
            gap,
            arclength: ta.arclength.clone(),
            coords: ta.coords.clone(),
            edges: ta.edges.clone(),
            order: problem_a.mesh().order(),
        })
    }

    /// Number of paired trace nodes.
    pub fn len(&self) -> usize {
        self.gap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gap.is_empty()
    }

    /// Arclength coordinates of the trace nodes, from the trace start.
    pub fn arclength(&self) -> &[f64] {
        &self.arclength
    }

    /// Positions of the trace nodes on the body-a side.
    pub fn node_coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    /// Total trace length.
    pub fn extent(&self) -> f64 {
        *self.arclength.last().unwrap()
    }

    fn check_len(&self, v: &[f64], context: &str) -> Result<()> {
        if v.len() != self.len() {
            return Err(Error::SizeMismatch {
                expected: self.len(),
                got: v.len(),
                context: context.to_string(),
            });
        }
        Ok(())
    }

    /// Calls `f(weight, argument (gap - u_an - u_bn), shapes, locals)` at
    /// every trace quadrature point.
    fn quadrature_fold(
        &self,
        un_a: &[f64],
        un_b: &[f64],
        mut f: impl FnMut(f64, f64, &[f64; 3], &[usize]),
    ) {
        for edge in &self.edges {
            let locals_buf;
            let locals: &[usize] = match edge.mid {
                None => &edge.ends[..],
                Some(m) => {
                    locals_buf = [edge.ends[0], edge.ends[1], m];
                    &locals_buf[..]
                }
            };
            for q in edge_rule(self.order) {
                let shp = edge_shape(self.order, q.s);
                let mut y = 0.0;
                for (i, &l) in locals.iter().enumerate() {
                    y += (self.gap[l] - un_a[l] - un_b[l]) * shp[i];
                }
                let w = q.weight * 0.5 * edge.length;
                f(w, y, &shp, locals);
            }
        }
    }
}

/// Nodal penetration `min(0, gap - u_an - u_bn)`.
pub fn penetration(pair: &ContactPair, un_a: &[f64], un_b: &[f64]) -> Result<Vec<f64>> {
    pair.check_len(un_a, "un_a")?;
    pair.check_len(un_b, "un_b")?;
    Ok((0..pair.len())
        .map(|j| (pair.gap[j] - un_a[j] - un_b[j]).min(0.0))
        .collect())
}

/// Penalty energy `1/(2 theta) * integral of penetration^2` over the trace.
pub fn penalty_energy(pair: &ContactPair, un_a: &[f64], un_b: &[f64], theta: f64) -> Result<f64> {
    check_theta(theta)?;
    pair.check_len(un_a, "un_a")?;
    pair.check_len(un_b, "un_b")?;
    let mut acc = 0.0;
    pair.quadrature_fold(un_a, un_b, |w, y, _, _| {
        let p = y.min(0.0);
        acc += w * p * p;
    });
    Ok(acc / (2.0 * theta))
}

/// Consistent penalty load on the normal contact dofs:
/// `g_j = 1/theta * integral of penetration * N_j`. The same nodal vector
/// applies to either body of the pair (the traces match); it vanishes while
/// the bodies stay apart and is nonpositive otherwise, pushing them apart.
pub fn penalty_rhs(pair: &ContactPair, un_a: &[f64], un_b: &[f64], theta: f64) -> Result<Vec<f64>> {
    check_theta(theta)?;
    pair.check_len(un_a, "un_a")?;
    pair.check_len(un_b, "un_b")?;
    let mut loads = vec![0.0; pair.len()];
    pair.quadrature_fold(un_a, un_b, |w, y, shp, locals| {
        let p = y.min(0.0);
        if p < 0.0 {
            for (i, &l) in locals.iter().enumerate() {
                loads[l] += w * p * shp[i];
            }
        }
    });
    for v in &mut loads {
        *v /= theta;
    }
    Ok(loads)
}

/// Nodal normal contact stress `penetration / theta` (nonpositive).
pub fn contact_stress(
    pair: &ContactPair,
    un_a: &[f64],
    un_b: &[f64],
    theta: f64,
) -> Result<Vec<f64>> {
    check_theta(theta)?;
    Ok(penetration(pair, un_a, un_b)?
        .into_iter()
        .map(|p| p / theta)
        .collect())
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "penalty parameter must be positive, got {theta}"
        )));
    }
    Ok(())
}

/// Selection of the Robin subarea on a contact pair.
#[derive(Debug, Clone, PartialEq)]
pub enum SubareaPolicy {
    /// No Robin term anywhere (Neumann-Neumann scheme).
    None,
    /// Robin term on the whole possible contact area (full Robin-Robin).
    All,
    /// Robin term on a fixed arclength interval of the trace.
    FixedSegment { start: f64, end: f64 },
    /// Robin term on the current penetration set, re-evaluated every
    /// iteration (nonstationary Dirichlet-Dirichlet scheme).
    ActiveSet,
}

impl SubareaPolicy {
    pub fn is_stationary(&self) -> bool {
        !matches!(self, SubareaPolicy::ActiveSet)
    }

    /// Checks that a fixed segment stays inside the trace extent.
    pub fn validate(&self, pair: &ContactPair) -> Result<()> {
        if let SubareaPolicy::FixedSegment { start, end } = *self {
            let tol = 1e-9 * pair.extent();
            if !(start <= end) || start < -tol || end > pair.extent() + tol {
                return Err(Error::InvalidArgument(format!(
                    "fixed segment [{start}, {end}] outside trace extent [0, {}]",
                    pair.extent()
                )));
            }
        }
        Ok(())
    }
}

/// Evaluates the 0/1 characteristic field of a policy at the trace nodes.
pub fn evaluate_policy(
    policy: &SubareaPolicy,
    pair: &ContactPair,
    un_a: &[f64],
    un_b: &[f64],
) -> Result<Vec<f64>> {
    pair.check_len(un_a, "un_a")?;
    pair.check_len(un_b, "un_b")?;
    let n = pair.len();
    Ok(match policy {
        SubareaPolicy::None => vec![0.0; n],
        SubareaPolicy::All => vec![1.0; n],
        SubareaPolicy::FixedSegment { start, end } => {
            let tol = 1e-9 * pair.extent();
            pair.arclength
                .iter()
                .map(|&s| {
                    if s >= start - tol && s <= end + tol {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect()
        }
        SubareaPolicy::ActiveSet => (0..n)
            .map(|j| {
                if pair.gap[j] - un_a[j] - un_b[j] < 0.0 {
                    1.0
                } else {
                    0.0
                }
            })
            .collect(),
    })
}

/// Named gap functions available in problem configurations.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GapFunction {
    /// `r * x1^2 / b^2`
    Parabolic { r: f64, b: f64 },
    /// `r * max(0, 1 - (x1 - l)^2 / b^2)^(3/2)`
    Groove { r: f64, b: f64, l: f64 },
    /// Constant initial separation.
    Constant { d0: f64 },
}

impl GapFunction {
    pub fn eval(&self, p: [f64; 2]) -> f64 {
        match *self {
            GapFunction::Parabolic { r, b } => r * p[0] * p[0] / (b * b),
            GapFunction::Groove { r, b, l } => {
                let t = 1.0 - (p[0] - l) * (p[0] - l) / (b * b);
                r * t.max(0.0).powf(1.5)
            }
            GapFunction::Constant { d0 } => d0,
        }
    }
}
