//! Preconfigured benchmark problems, parameter formulas, sweeps and CSV
//! emitters.
//!
//! Two plane two-body problems are built in:
//!
//! - `HertzTransversal`: two square transversely isotropic bodies pressed
//!   together over a parabolic gap by a prescribed compression. The possible
//!   contact area covers half the interface width; the real contact zone
//!   ends near one quarter of it.
//! - `Groove`: two long isotropic blocks, one with a shallow groove at the
//!   far end of the interface, pressed by a uniform nominal pressure `q`.
//!   The pressure is realized as a prescribed approach of the outer faces
//!   via the bar model, which keeps every subdomain operator definite for
//!   all schemes.
//!
//! Meshes are structured with the configured number of elements per contact
//! side and geometric coarsening away from the interface. All sweeps are
//! deterministic for a fixed spec and seed.

mod config;

pub use config::load_spec;

use crate::contact::{contact_stress, ContactPair, GapFunction, SubareaPolicy};
use crate::ddm::{linear_fit, run_scheme, IterationState, SchemeConfig};
use crate::fem::{constant_field, trace_normal, SubdomainProblem};
use crate::material::{Material, PlaneHypothesis};
use crate::mesh::{
    generate_tensor_mesh, graded_breakpoints, BoundaryTag, ElementOrder, PairId, Segment,
};
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Contact pair id used by the built-in problems.
pub const PAIR_ID: PairId = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    HertzTransversal,
    Groove,
}

/// Material parameters in the ratio form used by the benchmark problems;
/// `e_ratio = g_ratio = 1` with `nu_t = nu` degenerates to the isotropic
/// law exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialSpec {
    /// In-plane Young's modulus.
    pub e: f64,
    pub nu: f64,
    pub nu_t: f64,
    /// In-plane to transverse modulus ratio E/E'.
    pub e_ratio: f64,
    /// In-plane to transverse shear ratio G/G'.
    pub g_ratio: f64,
    pub hypothesis: PlaneHypothesis,
}

impl MaterialSpec {
    pub fn to_material(self) -> Material {
        let g = self.e / (2.0 * (1.0 + self.nu));
        Material::transversely_isotropic(
            self.e,
            self.e / self.e_ratio,
            self.nu,
            self.nu_t,
            g / self.g_ratio,
            self.hypothesis,
        )
    }

    /// Transverse modulus E'.
    pub fn e_transverse(&self) -> f64 {
        self.e / self.e_ratio
    }
}

/// One fully parametrized experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub problem: ProblemKind,
    /// Reference length; all geometry scales with it.
    pub b: f64,
    pub materials: [MaterialSpec; 2],
    /// Gap amplitude as a fraction of `b`.
    pub r_coef: f64,
    /// Prescribed compression as a multiple of the gap amplitude `r`
    /// (pressing problem only).
    pub delta_coef: f64,
    /// Body length as a multiple of `b` (groove problem).
    pub l_coef: f64,
    /// Body height as a multiple of `b` (groove problem).
    pub h_coef: f64,
    /// Nominal pressure as a fraction of the in-plane modulus (groove).
    pub q_coef: f64,
    /// Elements per contact side.
    pub density: usize,
    pub order: ElementOrder,
    /// Geometric coarsening ratio away from the contact zone.
    pub growth: f64,
    /// Rows of fine elements under the interface before coarsening.
    pub fine_rows: usize,
    /// Dimensionless penalty coefficient.
    pub c: f64,
    /// Default relaxation parameter for single runs.
    pub gamma: f64,
    /// Relaxation parameter for the reference oracle solve.
    pub oracle_gamma: f64,
    pub eps_u: f64,
    pub max_iter: usize,
    /// Replaces the problem's default gap function when set.
    pub gap_override: Option<GapFunction>,
}

impl ExperimentSpec {
    /// Contact problem of two transversely isotropic square bodies.
    pub fn hertz() -> Self {
        let m = MaterialSpec {
            e: 1.0,
            nu: 0.3,
            nu_t: 0.3,
            e_ratio: 2.0,
            g_ratio: 2.0,
            hypothesis: PlaneHypothesis::PlaneStress,
        };
        Self {
            problem: ProblemKind::HertzTransversal,
            b: 1.0,
            materials: [m, m],
            r_coef: 1e-3,
            delta_coef: 2.154434,
            l_coef: 8.0,
            h_coef: 8.0,
            q_coef: 0.0,
            density: 15,
            order: ElementOrder::Quadratic,
            growth: 1.35,
            fine_rows: 4,
            c: 0.05,
            gamma: 0.72,
            oracle_gamma: 0.7,
            eps_u: 1e-3,
            max_iter: 400,
            gap_override: None,
        }
    }

    /// Square isotropic bodies with a groove, pressed by q = 0.01 E.
    pub fn groove_fig7() -> Self {
        let m = MaterialSpec {
            e: 1.0,
            nu: 0.3,
            nu_t: 0.3,
            e_ratio: 1.0,
            g_ratio: 1.0,
            hypothesis: PlaneHypothesis::PlaneStress,
        };
        Self {
            problem: ProblemKind::Groove,
            b: 1.0,
            materials: [m, m],
            r_coef: 0.05,
            delta_coef: 0.0,
            l_coef: 8.0,
            h_coef: 8.0,
            q_coef: 0.01,
            density: 64,
            order: ElementOrder::Linear,
            growth: 1.35,
            fine_rows: 4,
            c: 0.1,
            gamma: 0.55,
            oracle_gamma: 0.55,
            eps_u: 1e-3,
            max_iter: 400,
            gap_override: None,
        }
    }

    /// Shallow isotropic bodies with a groove, pressed by q = 0.0075 E.
    pub fn groove_fig8() -> Self {
        Self {
            h_coef: 2.0,
            q_coef: 0.0075,
            c: 0.01,
            ..Self::groove_fig7()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.density < 4 {
            return Err(Error::Config(format!(
                "density must be at least 4, got {}",
                self.density
            )));
        }
        if !(self.c > 0.0) {
            return Err(Error::Config(format!("c must be positive, got {}", self.c)));
        }
        if !(self.b > 0.0) || !(self.growth >= 1.0) || self.fine_rows == 0 {
            return Err(Error::Config("invalid geometry parameters".into()));
        }
        Ok(())
    }

    /// Gap amplitude `r`.
    pub fn r(&self) -> f64 {
        self.r_coef * self.b
    }

    /// Prescribed compression of the pressing problem.
    pub fn delta(&self) -> f64 {
        self.delta_coef * self.r()
    }

    /// Nominal pressure of the groove problem.
    pub fn q(&self) -> f64 {
        self.q_coef * self.materials[0].e
    }

    pub fn gap_function(&self) -> GapFunction {
        if let Some(g) = self.gap_override {
            return g;
        }
        match self.problem {
            ProblemKind::HertzTransversal => GapFunction::Parabolic {
                r: self.r(),
                b: self.b,
            },
            ProblemKind::Groove => GapFunction::Groove {
                r: self.r(),
                b: self.b,
                l: self.l_coef * self.b,
            },
        }
    }
}

/// Penalty parameter of a spec: `4 b c (1/E'_1 + 1/E'_2)` for the pressing
/// problem, `c h sum_a (1 - nu_a)^2 / E_a` for the groove problem.
pub fn penalty_theta(spec: &ExperimentSpec) -> f64 {
    match spec.problem {
        ProblemKind::HertzTransversal => {
            let inv: f64 = spec.materials.iter().map(|m| 1.0 / m.e_transverse()).sum();
            4.0 * spec.b * spec.c * inv
        }
        ProblemKind::Groove => {
            let h = spec.h_coef * spec.b;
            let s: f64 = spec
                .materials
                .iter()
                .map(|m| (1.0 - m.nu) * (1.0 - m.nu) / m.e)
                .sum();
            spec.c * h * s
        }
    }
}

/// Prescribed approach of the groove problem's outer faces, from the bar
/// model of the nominal pressure `q`.
pub fn groove_delta(spec: &ExperimentSpec, theta: f64) -> f64 {
    spec.q() * theta * (1.0 + spec.c) / spec.c
}

/// Grid lines on `[offset, offset + total]`, with spacing `h0` over `rows`
/// intervals at the fine end (low end when `fine_low`) and geometric
/// coarsening beyond.
fn graded_axis(
    offset: f64,
    total: f64,
    h0: f64,
    rows: usize,
    growth: f64,
    fine_low: bool,
) -> Vec<f64> {
    let fine_len = (h0 * rows as f64).min(total);
    let base = graded_breakpoints(fine_len, rows, total, growth);
    if fine_low {
        base.iter().map(|v| offset + v).collect()
    } else {
        base.iter().rev().map(|v| offset + total - v).collect()
    }
}

fn build_body(
    xs: &[f64],
    ys: &[f64],
    order: ElementOrder,
    material: Material,
    contact_span: [f64; 2],
    contact_on_top: bool,
    dirichlet_value: [f64; 2],
) -> Result<SubdomainProblem> {
    let mut mesh = generate_tensor_mesh(xs, ys, order)?;
    let (x0, x1) = (xs[0], *xs.last().unwrap());
    let (y0, y1) = (ys[0], *ys.last().unwrap());
    let (contact_y, dirichlet_y) = if contact_on_top { (y1, y0) } else { (y0, y1) };

    mesh.tag_boundary(
        Segment::new([x0, dirichlet_y], [x1, dirichlet_y]),
        BoundaryTag::Dirichlet,
    )?;
    mesh.tag_boundary(
        Segment::new([contact_span[0], contact_y], [contact_span[1], contact_y]),
        BoundaryTag::Contact(PAIR_ID),
    )?;
    let w = x1 - x0;
    if contact_span[1] < x1 - 1e-12 * w {
        mesh.tag_boundary(
            Segment::new([contact_span[1], contact_y], [x1, contact_y]),
            BoundaryTag::Neumann,
        )?;
    }
    if contact_span[0] > x0 + 1e-12 * w {
        mesh.tag_boundary(
            Segment::new([x0, contact_y], [contact_span[0], contact_y]),
            BoundaryTag::Neumann,
        )?;
    }
    mesh.tag_boundary(Segment::new([x0, y0], [x0, y1]), BoundaryTag::Neumann)?;
    mesh.tag_boundary(Segment::new([x1, y0], [x1, y1]), BoundaryTag::Neumann)?;

    let mut problem = SubdomainProblem::new(mesh, material)?;
    if dirichlet_value != [0.0, 0.0] {
        problem.set_dirichlet_value(
            Segment::new([x0, dirichlet_y], [x1, dirichlet_y]),
            constant_field(dirichlet_value),
        )?;
    }
    Ok(problem)
}

/// Two 4b x 4b transversely isotropic bodies over a parabolic gap. The
/// lower body is fixed on its outer face; the compression is prescribed as
/// a whole on the upper body's outer face, the frame the bar-model guesses
/// are written in.
pub fn problem_hertz_transversal(
    spec: &ExperimentSpec,
) -> Result<(Vec<SubdomainProblem>, Vec<ContactPair>)> {
    spec.validate()?;
    if spec.problem != ProblemKind::HertzTransversal {
        return Err(Error::Config("spec is not a pressing-problem spec".into()));
    }
    let b = spec.b;
    let side = 4.0 * b;
    let h0 = 2.0 * b / spec.density as f64;
    let xs = graded_breakpoints(2.0 * b, spec.density, side, spec.growth);
    let delta = spec.delta();

    let ys_lower = graded_axis(0.0, side, h0, spec.fine_rows, spec.growth, false);
    let lower = build_body(
        &xs,
        &ys_lower,
        spec.order,
        spec.materials[0].to_material(),
        [0.0, 2.0 * b],
        true,
        [0.0, 0.0],
    )?;

    let ys_upper = graded_axis(side, side, h0, spec.fine_rows, spec.growth, true);
    let upper = build_body(
        &xs,
        &ys_upper,
        spec.order,
        spec.materials[1].to_material(),
        [0.0, 2.0 * b],
        false,
        [0.0, -delta],
    )?;

    let gap = spec.gap_function();
    let problems = vec![lower, upper];
    let pair = ContactPair::build(0, &problems[0], 1, &problems[1], PAIR_ID, |p| gap.eval(p))?;
    Ok((problems, vec![pair]))
}

/// Two l x h isotropic bodies, the upper one grooved near x1 = l, pressed
/// by the bar-model approach equivalent to the nominal pressure.
pub fn problem_groove(spec: &ExperimentSpec) -> Result<(Vec<SubdomainProblem>, Vec<ContactPair>)> {
    spec.validate()?;
    if spec.problem != ProblemKind::Groove {
        return Err(Error::Config("spec is not a groove-problem spec".into()));
    }
    let b = spec.b;
    let l = spec.l_coef * b;
    let h = spec.h_coef * b;
    let h0 = l / spec.density as f64;
    let xs = graded_breakpoints(l, spec.density, l, spec.growth);
    let theta = penalty_theta(spec);
    let delta = groove_delta(spec, theta);

    let ys_lower = graded_axis(0.0, h, h0, spec.fine_rows, spec.growth, false);
    let lower = build_body(
        &xs,
        &ys_lower,
        spec.order,
        spec.materials[0].to_material(),
        [0.0, l],
        true,
        [0.0, 0.0],
    )?;

    let ys_upper = graded_axis(h, h, h0, spec.fine_rows, spec.growth, true);
    let upper = build_body(
        &xs,
        &ys_upper,
        spec.order,
        spec.materials[1].to_material(),
        [0.0, l],
        false,
        [0.0, -delta],
    )?;

    let gap = spec.gap_function();
    let problems = vec![lower, upper];
    let pair = ContactPair::build(0, &problems[0], 1, &problems[1], PAIR_ID, |p| gap.eval(p))?;
    Ok((problems, vec![pair]))
}

/// Builds the configured problem together with its penalty parameter.
pub fn build_problem(
    spec: &ExperimentSpec,
) -> Result<(Vec<SubdomainProblem>, Vec<ContactPair>, f64)> {
    let (problems, pairs) = match spec.problem {
        ProblemKind::HertzTransversal => problem_hertz_transversal(spec)?,
        ProblemKind::Groove => problem_groove(spec)?,
    };
    Ok((problems, pairs, penalty_theta(spec)))
}

/// Initial displacement guess from the one-dimensional bar model: the
/// closed-gap overlap is split between the elastic columns and the penalty
/// layer, and the moving body carries the rigid approach offset.
pub fn bar_model_initial_guess(
    spec: &ExperimentSpec,
    problems: &[SubdomainProblem],
    pairs: &[ContactPair],
    theta: f64,
) -> Result<IterationState> {
    let mut state = IterationState::zeros(problems);
    let pair = pairs
        .first()
        .ok_or_else(|| Error::Config("built-in problems have one contact pair".into()))?;
    let (delta, factors) = match spec.problem {
        ProblemKind::HertzTransversal => {
            let f = |m: &MaterialSpec| {
                4.0 * spec.b * spec.c / (theta * m.e_transverse() * (1.0 + spec.c))
            };
            (spec.delta(), [f(&spec.materials[0]), f(&spec.materials[1])])
        }
        ProblemKind::Groove => {
            let h = spec.h_coef * spec.b;
            let f = |m: &MaterialSpec| {
                spec.c * h * (1.0 - m.nu * m.nu) / (theta * m.e * (1.0 + spec.c))
            };
            (
                groove_delta(spec, theta),
                [f(&spec.materials[0]), f(&spec.materials[1])],
            )
        }
    };

    for (body, factor, offset) in [
        (pair.body_a, factors[0], 0.0),
        (pair.body_b, factors[1], delta),
    ] {
        let problem = &problems[body];
        let trace = problem.trace(pair.id)?;
        for (local, &node) in trace.nodes.iter().enumerate() {
            let un = factor * (pair.gap[local] - delta).min(0.0) + offset;
            // realize u_n on the normal (vertical) dof
            for comp in 0..2 {
                if let Some(idx) = problem.dof_map().free_index(node, comp) {
                    state.u[body][idx] = un * trace.normal[comp];
                }
            }
        }
    }
    Ok(state)
}

/// A normalized contact stress profile along the interface.
#[derive(Debug, Clone)]
pub struct StressProfile {
    /// Arclength positions of the trace nodes (equals x1 for the built-in
    /// problems).
    pub x: Vec<f64>,
    /// Normalized stress: by |sigma(0)| for the pressing problem, by the
    /// in-plane modulus for the groove problem.
    pub sigma: Vec<f64>,
}

impl StressProfile {
    /// Piecewise-linear interpolation, clamped at the ends.
    pub fn interpolate(&self, x: f64) -> f64 {
        let n = self.x.len();
        if x <= self.x[0] {
            return self.sigma[0];
        }
        if x >= self.x[n - 1] {
            return self.sigma[n - 1];
        }
        let i = self.x.partition_point(|&v| v <= x).min(n - 1);
        let (x0, x1) = (self.x[i - 1], self.x[i]);
        let t = (x - x0) / (x1 - x0);
        self.sigma[i - 1] * (1.0 - t) + self.sigma[i] * t
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "x,sigma_n_normalized")?;
        for (x, s) in self.x.iter().zip(&self.sigma) {
            writeln!(w, "{x:.17e},{s:.17e}")?;
        }
        Ok(())
    }
}

/// Normalized contact stress of a converged state.
pub fn normalized_stress_profile(
    spec: &ExperimentSpec,
    problems: &[SubdomainProblem],
    pairs: &[ContactPair],
    theta: f64,
    state: &IterationState,
) -> Result<StressProfile> {
    let pair = &pairs[0];
    let un_a = trace_normal(&problems[pair.body_a], pair.id, &state.u[pair.body_a])?;
    let un_b = trace_normal(&problems[pair.body_b], pair.id, &state.u[pair.body_b])?;
    let sigma = contact_stress(pair, &un_a, &un_b, theta)?;
    let x = pair.arclength().to_vec();
    let sigma = match spec.problem {
        ProblemKind::HertzTransversal => {
            // normalized by the magnitude at the node nearest x = 0
            let s0 = sigma[0].abs();
            if s0 == 0.0 {
                return Err(Error::Oracle(
                    "no contact stress at the profile origin".into(),
                ));
            }
            sigma.iter().map(|s| s / s0).collect()
        }
        ProblemKind::Groove => {
            let e = spec.materials[0].e;
            sigma.iter().map(|s| s / e).collect()
        }
    };
    Ok(StressProfile { x, sigma })
}

/// Largest penetration magnitude of a state.
pub fn max_penetration(
    problems: &[SubdomainProblem],
    pairs: &[ContactPair],
    state: &IterationState,
) -> Result<f64> {
    let mut max = 0.0f64;
    for pair in pairs {
        let un_a = trace_normal(&problems[pair.body_a], pair.id, &state.u[pair.body_a])?;
        let un_b = trace_normal(&problems[pair.body_b], pair.id, &state.u[pair.body_b])?;
        for p in crate::contact::penetration(pair, &un_a, &un_b)? {
            max = max.max(-p);
        }
    }
    Ok(max)
}

/// Reference profile: the same continuous problem at four times the mesh
/// density and a quarter of the penalty parameter, solved by the active-set
/// scheme to 1e-8. Stands in for unavailable closed forms.
pub fn reference_oracle(spec: &ExperimentSpec) -> Result<StressProfile> {
    let mut fine = spec.clone();
    fine.density = spec.density * 4;
    fine.c = spec.c / 4.0;
    fine.eps_u = 1e-8;
    fine.max_iter = 40_000;
    let (problems, pairs, theta) = build_problem(&fine)?;
    let initial = bar_model_initial_guess(&fine, &problems, &pairs, theta)?;
    let config = SchemeConfig::new(
        theta,
        fine.oracle_gamma,
        SubareaPolicy::ActiveSet,
        fine.eps_u,
        fine.max_iter,
    );
    let (state, report) = run_scheme(&problems, &pairs, &config, &initial, None)
        .map_err(|e| Error::Oracle(format!("oracle run failed: {e}")))?;
    if !report.converged {
        return Err(Error::Oracle(format!(
            "oracle did not converge in {} iterations",
            report.iterations
        )));
    }
    normalized_stress_profile(&fine, &problems, &pairs, theta, &state)
}

/// Trapezoid-weighted L2 distance between a profile and a reference
/// interpolated onto its nodes.
pub fn profile_distance(profile: &StressProfile, reference: &StressProfile) -> f64 {
    let n = profile.x.len();
    let mut acc = 0.0;
    for j in 0..n {
        let lo = if j == 0 {
            profile.x[0]
        } else {
            0.5 * (profile.x[j - 1] + profile.x[j])
        };
        let hi = if j + 1 == n {
            profile.x[n - 1]
        } else {
            0.5 * (profile.x[j] + profile.x[j + 1])
        };
        let d = profile.sigma[j] - reference.interpolate(profile.x[j]);
        acc += (hi - lo) * d * d;
    }
    acc.sqrt()
}

/// The five stationary schemes of the relaxation study, with subarea
/// selections in units of `b`.
pub fn standard_schemes(b: f64) -> Vec<(String, SubareaPolicy)> {
    vec![
        ("none".to_string(), SubareaPolicy::None),
        (
            "segment[0,0.5]".to_string(),
            SubareaPolicy::FixedSegment {
                start: 0.0,
                end: 0.5 * b,
            },
        ),
        (
            "segment[0,1]".to_string(),
            SubareaPolicy::FixedSegment {
                start: 0.0,
                end: 1.0 * b,
            },
        ),
        (
            "segment[0,1.5]".to_string(),
            SubareaPolicy::FixedSegment {
                start: 0.0,
                end: 1.5 * b,
            },
        ),
        ("all".to_string(), SubareaPolicy::All),
    ]
}

/// `standard_schemes` plus the nonstationary active-set scheme.
pub fn all_schemes(b: f64) -> Vec<(String, SubareaPolicy)> {
    let mut v = standard_schemes(b);
    v.push(("active-set".to_string(), SubareaPolicy::ActiveSet));
    v
}

#[derive(Debug, Clone)]
pub struct GammaRow {
    pub scheme: String,
    pub gamma: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct SchemeOptimum {
    pub scheme: String,
    /// Center of the flat minimum of the iteration-count curve.
    pub gamma_opt: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct GammaSweep {
    pub rows: Vec<GammaRow>,
    pub optima: Vec<SchemeOptimum>,
}

impl GammaSweep {
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "scheme,gamma,iterations,converged")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{:.6},{},{}",
                r.scheme, r.gamma, r.iterations, r.converged
            )?;
        }
        Ok(())
    }

    pub fn optimum(&self, scheme: &str) -> Option<&SchemeOptimum> {
        self.optima.iter().find(|o| o.scheme == scheme)
    }
}

/// Runs one (scheme, gamma) cell; divergence maps to a non-converged row at
/// `max_iter`.
#[allow(clippy::too_many_arguments)]
fn sweep_cell(
    problems: &[SubdomainProblem],
    pairs: &[ContactPair],
    theta: f64,
    initial: &IterationState,
    policy: &SubareaPolicy,
    gamma: f64,
    eps_u: f64,
    max_iter: usize,
) -> Result<(usize, bool)> {
    let config = SchemeConfig::new(theta, gamma, policy.clone(), eps_u, max_iter);
    match run_scheme(problems, pairs, &config, initial, None) {
        Ok((_, report)) => Ok((report.iterations, report.converged)),
        Err(Error::Divergence { .. }) => Ok((max_iter, false)),
        Err(e) => Err(e),
    }
}

/// Iteration counts of every scheme over a relaxation-parameter grid, with
/// the per-scheme optimum.
pub fn sweep_gamma(
    spec: &ExperimentSpec,
    schemes: &[(String, SubareaPolicy)],
    gammas: &[f64],
) -> Result<GammaSweep> {
    if gammas.iter().any(|&g| !(g > 0.0 && g < 2.0)) {
        return Err(Error::Config("gamma grid must lie in (0, 2)".into()));
    }
    let (problems, pairs, theta) = build_problem(spec)?;
    let initial = bar_model_initial_guess(spec, &problems, &pairs, theta)?;

    let mut rows = Vec::new();
    let mut optima = Vec::new();
    for (name, policy) in schemes {
        let cells: Vec<Result<(usize, bool)>> = gammas
            .par_iter()
            .map(|&gamma| {
                sweep_cell(
                    &problems, &pairs, theta, &initial, policy, gamma, spec.eps_u, spec.max_iter,
                )
            })
            .collect();
        let mut best: Option<usize> = None;
        let mut scheme_rows = Vec::with_capacity(gammas.len());
        for (gamma, cell) in gammas.iter().zip(cells) {
            let (iterations, converged) = cell?;
            if converged {
                best = Some(best.map_or(iterations, |b: usize| b.min(iterations)));
            }
            scheme_rows.push(GammaRow {
                scheme: name.clone(),
                gamma: *gamma,
                iterations,
                converged,
            });
        }
        if let Some(best) = best {
            let winners: Vec<f64> = scheme_rows
                .iter()
                .filter(|r| r.converged && r.iterations == best)
                .map(|r| r.gamma)
                .collect();
            optima.push(SchemeOptimum {
                scheme: name.clone(),
                gamma_opt: winners.iter().sum::<f64>() / winners.len() as f64,
                iterations: best,
            });
        }
        rows.extend(scheme_rows);
    }
    Ok(GammaSweep { rows, optima })
}

#[derive(Debug, Clone)]
pub struct PenaltyRow {
    pub c: f64,
    pub density: usize,
    pub max_penetration: f64,
    pub l2_distance: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct PenaltySweep {
    pub rows: Vec<PenaltyRow>,
}

impl PenaltySweep {
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "c,density,max_penetration,l2_distance,iterations,converged")?;
        for r in &self.rows {
            writeln!(
                w,
                "{:.6},{},{:.17e},{:.17e},{},{}",
                r.c, r.density, r.max_penetration, r.l2_distance, r.iterations, r.converged
            )?;
        }
        Ok(())
    }

    pub fn row(&self, c: f64, density: usize) -> Option<&PenaltyRow> {
        self.rows
            .iter()
            .find(|r| r.density == density && (r.c - c).abs() < 1e-12)
    }
}

/// Penalty-coefficient and mesh-refinement study against the reference
/// oracle of the base spec, solved by the active-set scheme.
pub fn sweep_penalty(
    spec: &ExperimentSpec,
    c_list: &[f64],
    density_list: &[usize],
) -> Result<PenaltySweep> {
    if c_list.is_empty() || density_list.is_empty() {
        return Err(Error::Config("penalty sweep needs nonempty lists".into()));
    }
    let oracle = reference_oracle(spec)?;
    let cases: Vec<(f64, usize)> = c_list
        .iter()
        .flat_map(|&c| density_list.iter().map(move |&d| (c, d)))
        .collect();
    let rows: Vec<Result<PenaltyRow>> = cases
        .par_iter()
        .map(|&(c, density)| {
            let mut case = spec.clone();
            case.c = c;
            case.density = density;
            let (problems, pairs, theta) = build_problem(&case)?;
            let initial = bar_model_initial_guess(&case, &problems, &pairs, theta)?;
            let config = SchemeConfig::new(
                theta,
                case.gamma,
                SubareaPolicy::ActiveSet,
                case.eps_u,
                case.max_iter,
            );
            let (iterations, converged, state) =
                match run_scheme(&problems, &pairs, &config, &initial, None) {
                    Ok((state, report)) => (report.iterations, report.converged, Some(state)),
                    Err(Error::Divergence { .. }) => (case.max_iter, false, None),
                    Err(e) => return Err(e),
                };
            let (max_pen, dist) = match state {
                Some(state) => {
                    let profile =
                        normalized_stress_profile(&case, &problems, &pairs, theta, &state)?;
                    (
                        max_penetration(&problems, &pairs, &state)?,
                        profile_distance(&profile, &oracle),
                    )
                }
                None => (f64::NAN, f64::NAN),
            };
            Ok(PenaltyRow {
                c,
                density,
                max_penetration: max_pen,
                l2_distance: dist,
                iterations,
                converged,
            })
        })
        .collect();
    Ok(PenaltySweep {
        rows: rows.into_iter().collect::<Result<_>>()?,
    })
}

#[derive(Debug, Clone)]
pub struct AccuracyRow {
    pub scheme: String,
    pub eps_u: f64,
    pub gamma: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct AccuracyFit {
    pub scheme: String,
    /// Iterations per decade of accuracy.
    pub slope: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone)]
pub struct SchemeComparison {
    pub rows: Vec<AccuracyRow>,
    pub fits: Vec<AccuracyFit>,
}

impl SchemeComparison {
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "scheme,eps_u,gamma,iterations,converged")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{:.1e},{:.6},{},{}",
                r.scheme, r.eps_u, r.gamma, r.iterations, r.converged
            )?;
        }
        Ok(())
    }

    pub fn write_summary<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "scheme,iterations_per_decade,r_squared")?;
        for f in &self.fits {
            writeln!(w, "{},{:.4},{:.6}", f.scheme, f.slope, f.r_squared)?;
        }
        Ok(())
    }

    pub fn fit(&self, scheme: &str) -> Option<&AccuracyFit> {
        self.fits.iter().find(|f| f.scheme == scheme)
    }
}

/// Iteration counts versus stopping tolerance, at each scheme's optimal
/// relaxation parameter taken from `sweep`.
pub fn compare_schemes(
    spec: &ExperimentSpec,
    sweep: &GammaSweep,
    eps_list: &[f64],
) -> Result<SchemeComparison> {
    let (problems, pairs, theta) = build_problem(spec)?;
    let initial = bar_model_initial_guess(spec, &problems, &pairs, theta)?;
    let schemes = all_schemes(spec.b);
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    for (name, policy) in &schemes {
        let Some(opt) = sweep.optimum(name) else {
            continue;
        };
        let cells: Vec<Result<(usize, bool)>> = eps_list
            .par_iter()
            .map(|&eps| {
                sweep_cell(
                    &problems,
                    &pairs,
                    theta,
                    &initial,
                    policy,
                    opt.gamma_opt,
                    eps,
                    spec.max_iter,
                )
            })
            .collect();
        let mut points = Vec::new();
        for (&eps, cell) in eps_list.iter().zip(cells) {
            let (iterations, converged) = cell?;
            if converged {
                points.push((-eps.log10(), iterations as f64));
            }
            rows.push(AccuracyRow {
                scheme: name.clone(),
                eps_u: eps,
                gamma: opt.gamma_opt,
                iterations,
                converged,
            });
        }
        if points.len() >= 2 {
            if let Some((slope, _, r2)) = linear_fit(&points) {
                fits.push(AccuracyFit {
                    scheme: name.clone(),
                    slope,
                    r_squared: r2,
                });
            }
        }
    }
    Ok(SchemeComparison { rows, fits })
}
