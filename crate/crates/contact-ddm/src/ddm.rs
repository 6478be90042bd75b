//! The domain decomposition iteration engine.
//!
//! One iteration of the scheme, on the discrete level:
//!
//! 1. evaluate the characteristic field `psi` of the configured policy on
//!    every contact pair (stationary policies keep it fixed);
//! 2. for each body, independently solve
//!    `(K + 1/theta * M(psi)) u~ = F + 1/theta * M(psi) u_k + penalty(u_k)`,
//!    an elasticity problem with a Robin condition on the possible contact
//!    area, where the penalty load couples the bodies through the previous
//!    iterate only;
//! 3. relax `u_{k+1} = gamma * u~ + (1 - gamma) * u_k`;
//! 4. stop once the relative change of every body's normal contact trace
//!    drops to `eps_u`, in the discrete 2-norm over the trace nodes
//!    (midside nodes included).
//!
//! Stationary policies factor each body operator once and reuse the factor
//! across all iterations; the active-set policy refactors whenever its node
//! set changes. Divergence (ten consecutive growths of the trace change, or
//! non-finite iterates) aborts with a diagnostic instead of looping to
//! `max_iter`.

use crate::contact::{evaluate_policy, penalty_rhs, ContactPair, SubareaPolicy};
use crate::fem::{
    assemble_contact_edge_mass, assemble_system, scatter_normal_loads, trace_normal,
    EnvelopeCholesky, SparseSymMatrix, SubdomainProblem,
};
use crate::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::io::Write;

/// Which `psi` defines the energy norm of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EnergyNormPsi {
    /// The field evaluated on the initial state; keeps nonstationary
    /// histories comparable in one fixed norm.
    #[default]
    Initial,
    /// The field of the current iteration.
    Current,
}

/// Bounded random perturbation injected after every relaxation step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorInjection {
    /// Energy-norm magnitude of each injected error.
    pub epsilon: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct SchemeConfig {
    /// Penalty parameter.
    pub theta: f64,
    /// Relaxation parameter of the fixed-point update.
    pub gamma: f64,
    /// Robin subarea policy, applied to every contact pair.
    pub policy: SubareaPolicy,
    /// Relative stopping tolerance on the normal contact traces.
    pub eps_u: f64,
    pub max_iter: usize,
    pub error_injection: Option<ErrorInjection>,
    pub energy_norm_psi: EnergyNormPsi,
}

impl SchemeConfig {
    pub fn new(theta: f64, gamma: f64, policy: SubareaPolicy, eps_u: f64, max_iter: usize) -> Self {
        Self {
            theta,
            gamma,
            policy,
            eps_u,
            max_iter,
            error_injection: None,
            energy_norm_psi: EnergyNormPsi::Initial,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "theta must be positive, got {}",
                self.theta
            )));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        if !(self.eps_u > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "eps_u must be positive, got {}",
                self.eps_u
            )));
        }
        Ok(())
    }
}

/// Per-body displacement iterates (free dofs).
#[derive(Debug, Clone, PartialEq)]
pub struct IterationState {
    pub u: Vec<Vec<f64>>,
    pub k: usize,
}

impl IterationState {
    pub fn zeros(problems: &[SubdomainProblem]) -> Self {
        Self {
            u: problems.iter().map(|p| vec![0.0; p.n_free()]).collect(),
            k: 0,
        }
    }
}

/// Iteration history of one run.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    /// Number of iterations performed.
    pub iterations: usize,
    pub converged: bool,
    /// Relative trace change per iteration and body; `rel_change[i][b]`
    /// belongs to iteration `i + 1`.
    pub rel_change: Vec<Vec<f64>>,
    /// Energy-norm distance to the reference per iterate, starting at the
    /// initial state (index `k` holds iterate `k`). Present when a
    /// reference was supplied.
    pub energy_error: Option<Vec<f64>>,
    /// Number of active (psi = 1) nodes per iteration and pair.
    pub active_counts: Vec<Vec<usize>>,
    /// Pointwise increases of psi between consecutive iterations. The
    /// nonstationary convergence theory assumes none occur after some
    /// point; the active-set policy may violate that, which is recorded
    /// here but not forbidden.
    pub psi_monotone_violations: usize,
}

impl ConvergenceReport {
    /// Writes the history as CSV with columns
    /// `k,rel_change_b<i>...,energy_error,active_p<j>...`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        let bodies = self.rel_change.first().map_or(0, |r| r.len());
        let pairs = self.active_counts.first().map_or(0, |r| r.len());
        write!(w, "k")?;
        for b in 0..bodies {
            write!(w, ",rel_change_b{b}")?;
        }
        write!(w, ",energy_error")?;
        for p in 0..pairs {
            write!(w, ",active_p{p}")?;
        }
        writeln!(w)?;
        for i in 0..self.iterations {
            write!(w, "{}", i + 1)?;
            for b in 0..bodies {
                write!(w, ",{:.17e}", self.rel_change[i][b])?;
            }
            match &self.energy_error {
                Some(e) => write!(w, ",{:.17e}", e[i + 1])?,
                None => write!(w, ",")?,
            }
            for p in 0..pairs {
                write!(w, ",{}", self.active_counts[i][p])?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

struct Workspace<'a> {
    problems: &'a [SubdomainProblem],
    pairs: &'a [ContactPair],
    theta: f64,
    stiffness: Vec<SparseSymMatrix>,
    load: Vec<Vec<f64>>,
    /// Pairs adjacent to each body.
    adjacency: Vec<Vec<usize>>,
}

type PairMasses = Vec<(SparseSymMatrix, SparseSymMatrix)>;

impl<'a> Workspace<'a> {
    fn new(
        problems: &'a [SubdomainProblem],
        pairs: &'a [ContactPair],
        theta: f64,
    ) -> Result<Self> {
        for pair in pairs {
            if pair.body_a >= problems.len() || pair.body_b >= problems.len() {
                return Err(Error::InvalidArgument(format!(
                    "pair {} references missing bodies ({}, {})",
                    pair.id, pair.body_a, pair.body_b
                )));
            }
        }
        let mut stiffness = Vec::with_capacity(problems.len());
        let mut load = Vec::with_capacity(problems.len());
        for p in problems {
            let (k, f) = assemble_system(p)?;
            stiffness.push(k);
            load.push(f);
        }
        let adjacency = (0..problems.len())
            .map(|b| {
                pairs
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| p.body_a == b || p.body_b == b)
                    .map(|(i, _)| i)
                    .collect()
            })
            .collect();
        Ok(Self {
            problems,
            pairs,
            theta,
            stiffness,
            load,
            adjacency,
        })
    }

    fn traces(&self, u: &[Vec<f64>]) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
        self.pairs
            .iter()
            .map(|pair| {
                let un_a = trace_normal(&self.problems[pair.body_a], pair.id, &u[pair.body_a])?;
                let un_b = trace_normal(&self.problems[pair.body_b], pair.id, &u[pair.body_b])?;
                Ok((un_a, un_b))
            })
            .collect()
    }

    fn psi(
        &self,
        policy: &SubareaPolicy,
        traces: &[(Vec<f64>, Vec<f64>)],
    ) -> Result<Vec<Vec<f64>>> {
        self.pairs
            .iter()
            .zip(traces)
            .map(|(pair, (un_a, un_b))| evaluate_policy(policy, pair, un_a, un_b))
            .collect()
    }

    fn masses(&self, psi: &[Vec<f64>]) -> Result<PairMasses> {
        self.pairs
            .iter()
            .zip(psi)
            .map(|(pair, w)| {
                let ma = assemble_contact_edge_mass(&self.problems[pair.body_a], pair.id, w)?;
                let mb = assemble_contact_edge_mass(&self.problems[pair.body_b], pair.id, w)?;
                Ok((ma, mb))
            })
            .collect()
    }

    fn body_mass<'m>(&self, masses: &'m PairMasses, pair_index: usize, body: usize) -> &'m SparseSymMatrix {
        if self.pairs[pair_index].body_a == body {
            &masses[pair_index].0
        } else {
            &masses[pair_index].1
        }
    }

    fn factor_body(&self, body: usize, masses: &PairMasses) -> Result<EnvelopeCholesky> {
        let mut parts: Vec<(f64, &SparseSymMatrix)> = vec![(1.0, &self.stiffness[body])];
        for &pi in &self.adjacency[body] {
            parts.push((1.0 / self.theta, self.body_mass(masses, pi, body)));
        }
        EnvelopeCholesky::factor(&parts)
    }

    /// Squared energy norm `d' (K + 1/theta M(psi)) d` over all bodies.
    fn energy_sq(&self, masses: &PairMasses, d: &[Vec<f64>]) -> f64 {
        let mut acc = 0.0;
        for (b, db) in d.iter().enumerate() {
            acc += self.stiffness[b].quadratic_form(db);
            for &pi in &self.adjacency[b] {
                acc += self.body_mass(masses, pi, b).quadratic_form(db) / self.theta;
            }
        }
        acc
    }
}

fn difference(u: &[Vec<f64>], v: &[Vec<f64>]) -> Vec<Vec<f64>> {
    u.iter()
        .zip(v)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
        .collect()
}

/// Runs the scheme from `initial`. When `reference` is given, the report
/// carries the energy-norm error history against it.
pub fn run_scheme(
    problems: &[SubdomainProblem],
    pairs: &[ContactPair],
    config: &SchemeConfig,
    initial: &IterationState,
    reference: Option<&IterationState>,
) -> Result<(IterationState, ConvergenceReport)> {
    config.validate()?;
    for pair in pairs {
        config.policy.validate(pair)?;
    }
    let ws = Workspace::new(problems, pairs, config.theta)?;
    let n_bodies = problems.len();
    for (b, p) in problems.iter().enumerate() {
        if initial.u[b].len() != p.n_free() {
            return Err(Error::SizeMismatch {
                expected: p.n_free(),
                got: initial.u[b].len(),
                context: format!("initial state of body {b}"),
            });
        }
    }

    let mut rng = config.error_injection.and_then(|inj| {
        (inj.epsilon > 0.0).then(|| (ChaCha8Rng::seed_from_u64(inj.seed), inj.epsilon))
    });

    let mut u: Vec<Vec<f64>> = initial.u.clone();

    // psi fixed for the energy norm (and for the whole run when stationary)
    let traces0 = ws.traces(&u)?;
    let psi0 = ws.psi(&config.policy, &traces0)?;
    let norm_masses = ws.masses(&psi0)?;

    // initial-guess error, injected before the first solve
    if let Some((ref mut r, eps)) = rng {
        inject(&ws, &norm_masses, r, eps, &mut u);
    }

    let mut energy_error = match reference {
        Some(r) => Some(vec![ws
            .energy_sq(&norm_masses, &difference(&u, &r.u))
            .max(0.0)
            .sqrt()]),
        None => None,
    };

    let stationary = config.policy.is_stationary();
    let mut psi = psi0;
    let mut masses = ws.masses(&psi)?;
    let mut factors: Vec<EnvelopeCholesky> = (0..n_bodies)
        .map(|b| ws.factor_body(b, &masses))
        .collect::<Result<_>>()?;

    let mut rel_change: Vec<Vec<f64>> = Vec::new();
    let mut active_counts: Vec<Vec<usize>> = Vec::new();
    let mut psi_monotone_violations = 0usize;
    let mut converged = false;
    let mut growth_streak = 0usize;
    let mut prev_max_change = f64::INFINITY;

    let mut iterations = 0;
    while iterations < config.max_iter {
        let traces = ws.traces(&u)?;

        if !stationary {
            let new_psi = ws.psi(&config.policy, &traces)?;
            if new_psi != psi {
                for (old, new) in psi.iter().zip(&new_psi) {
                    psi_monotone_violations +=
                        old.iter().zip(new).filter(|(o, n)| **n > **o).count();
                }
                psi = new_psi;
                masses = ws.masses(&psi)?;
                factors = (0..n_bodies)
                    .map(|b| ws.factor_body(b, &masses))
                    .collect::<Result<_>>()?;
            }
        }
        active_counts.push(
            psi.iter()
                .map(|w| w.iter().filter(|&&v| v != 0.0).count())
                .collect(),
        );

        // penalty loads, one per pair, shared by both bodies
        let penalty: Vec<Vec<f64>> = ws
            .pairs
            .iter()
            .zip(&traces)
            .map(|(pair, (un_a, un_b))| penalty_rhs(pair, un_a, un_b, config.theta))
            .collect::<Result<_>>()?;

        let mut next: Vec<Vec<f64>> = Vec::with_capacity(n_bodies);
        for b in 0..n_bodies {
            let mut rhs = ws.load[b].clone();
            for &pi in &ws.adjacency[b] {
                let m = ws.body_mass(&masses, pi, b);
                let mut mu = vec![0.0; rhs.len()];
                m.matvec(&u[b], &mut mu);
                for (r, v) in rhs.iter_mut().zip(&mu) {
                    *r += v / config.theta;
                }
                scatter_normal_loads(&ws.problems[b], ws.pairs[pi].id, &penalty[pi], &mut rhs)?;
            }
            let mut unew = factors[b].solve(&rhs);
            for (n, &old) in unew.iter_mut().zip(&u[b]) {
                *n = config.gamma * *n + (1.0 - config.gamma) * old;
            }
            next.push(unew);
        }

        if let Some((ref mut r, eps)) = rng {
            inject(&ws, &norm_masses, r, eps, &mut next);
        }

        // relative trace change per body over all its contact nodes
        let next_traces = ws.traces(&next)?;
        let mut change = vec![0.0f64; n_bodies];
        let mut norm = vec![0.0f64; n_bodies];
        for (pi, pair) in ws.pairs.iter().enumerate() {
            for (body, side) in [(pair.body_a, 0), (pair.body_b, 1)] {
                let old = if side == 0 { &traces[pi].0 } else { &traces[pi].1 };
                let new = if side == 0 {
                    &next_traces[pi].0
                } else {
                    &next_traces[pi].1
                };
                for (o, n) in old.iter().zip(new) {
                    change[body] += (n - o) * (n - o);
                    norm[body] += n * n;
                }
            }
        }
        let rel: Vec<f64> = change
            .iter()
            .zip(&norm)
            .map(|(c, n)| {
                if *n > 0.0 {
                    (c / n).sqrt()
                } else if *c == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            })
            .collect();
        let max_change = rel.iter().cloned().fold(0.0f64, f64::max);
        rel_change.push(rel.clone());

        u = next;
        iterations += 1;

        if !max_change.is_finite() {
            return Err(Error::Divergence {
                iteration: iterations,
                detail: "non-finite iterate".into(),
            });
        }
        if max_change > prev_max_change {
            growth_streak += 1;
            if growth_streak >= 10 {
                return Err(Error::Divergence {
                    iteration: iterations,
                    detail: format!(
                        "trace change grew for {growth_streak} consecutive iterations \
                         (last {max_change:.3e})"
                    ),
                });
            }
        } else {
            growth_streak = 0;
        }
        prev_max_change = max_change;

        if let (Some(hist), Some(r)) = (&mut energy_error, reference) {
            let nm = match config.energy_norm_psi {
                EnergyNormPsi::Initial => &norm_masses,
                EnergyNormPsi::Current => &masses,
            };
            hist.push(ws.energy_sq(nm, &difference(&u, &r.u)).max(0.0).sqrt());
        }

        if rel.iter().all(|&c| c <= config.eps_u) {
            converged = true;
            break;
        }
    }

    let state = IterationState {
        u,
        k: initial.k + iterations,
    };
    let report = ConvergenceReport {
        iterations,
        converged,
        rel_change,
        energy_error,
        active_counts,
        psi_monotone_violations,
    };
    Ok((state, report))
}

/// Adds a random perturbation of energy norm `eps` to the state.
fn inject(
    ws: &Workspace,
    norm_masses: &PairMasses,
    rng: &mut ChaCha8Rng,
    eps: f64,
    u: &mut [Vec<f64>],
) {
    let mut w: Vec<Vec<f64>> = u
        .iter()
        .map(|ub| (0..ub.len()).map(|_| StandardNormal.sample(rng)).collect())
        .collect();
    let norm = ws.energy_sq(norm_masses, &w).sqrt();
    if norm == 0.0 {
        return;
    }
    let scale = eps / norm;
    for (ub, wb) in u.iter_mut().zip(&mut w) {
        for (uv, wv) in ub.iter_mut().zip(wb) {
            *uv += scale * *wv;
        }
    }
}

/// Neumann-Neumann scheme: no Robin term anywhere.
pub fn neumann_neumann(
    problems: &[SubdomainProblem],
    pairs: &[ContactPair],
    config: &SchemeConfig,
    initial: &IterationState,
    reference: Option<&IterationState>,
) -> Result<(IterationState, ConvergenceReport)> {
    let mut config = config.clone();
    config.policy = SubareaPolicy::None;
    run_scheme(problems, pairs, &config, initial, reference)
}

/// Robin term on the whole possible contact area.
pub fn full_robin(
    problems: &[SubdomainProblem],
    pairs: &[ContactPair],
    config: &SchemeConfig,
    initial: &IterationState,
    reference: Option<&IterationState>,
) -> Result<(IterationState, ConvergenceReport)> {
    let mut config = config.clone();
    config.policy = SubareaPolicy::All;
    run_scheme(problems, pairs, &config, initial, reference)
}

/// Nonstationary scheme driven by the current penetration set.
pub fn dirichlet_dirichlet_active_set(
    problems: &[SubdomainProblem],
    pairs: &[ContactPair],
    config: &SchemeConfig,
    initial: &IterationState,
    reference: Option<&IterationState>,
) -> Result<(IterationState, ConvergenceReport)> {
    let mut config = config.clone();
    config.policy = SubareaPolicy::ActiveSet;
    run_scheme(problems, pairs, &config, initial, reference)
}

/// Runs the scheme with seeded per-iteration errors of energy norm
/// `epsilon` (the initial guess is perturbed too). With `epsilon == 0` this
/// is `run_scheme` exactly; no random state is created.
pub fn run_with_injected_errors(
    problems: &[SubdomainProblem],
    pairs: &[ContactPair],
    config: &SchemeConfig,
    initial: &IterationState,
    reference: Option<&IterationState>,
    epsilon: f64,
    seed: u64,
) -> Result<(IterationState, ConvergenceReport)> {
    if epsilon < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "error magnitude must be nonnegative, got {epsilon}"
        )));
    }
    let mut config = config.clone();
    config.error_injection = (epsilon > 0.0).then_some(ErrorInjection { epsilon, seed });
    run_scheme(problems, pairs, &config, initial, reference)
}

/// Stopping criterion: per body, the relative change of the normal contact
/// trace in the discrete 2-norm stays within `eps_u`; a zero denominator
/// passes only with a zero numerator.
pub fn stopping_criterion(
    problems: &[SubdomainProblem],
    pairs: &[ContactPair],
    prev: &IterationState,
    next: &IterationState,
    eps_u: f64,
) -> Result<bool> {
    let mut change = vec![0.0f64; problems.len()];
    let mut norm = vec![0.0f64; problems.len()];
    for pair in pairs {
        for body in [pair.body_a, pair.body_b] {
            let old = trace_normal(&problems[body], pair.id, &prev.u[body])?;
            let new = trace_normal(&problems[body], pair.id, &next.u[body])?;
            for (o, n) in old.iter().zip(&new) {
                change[body] += (n - o) * (n - o);
                norm[body] += n * n;
            }
        }
    }
    Ok(change.iter().zip(&norm).all(|(c, n)| {
        if *n > 0.0 {
            (c / n).sqrt() <= eps_u
        } else {
            *c == 0.0
        }
    }))
}

/// Energy norm `sqrt((u - v)' (K + 1/theta M(psi)) (u - v))` over all
/// bodies. Stationary policies define `psi` directly; the active-set
/// policy evaluates it on `u`.
pub fn energy_norm(
    problems: &[SubdomainProblem],
    pairs: &[ContactPair],
    config: &SchemeConfig,
    u: &[Vec<f64>],
    v: &[Vec<f64>],
) -> Result<f64> {
    let ws = Workspace::new(problems, pairs, config.theta)?;
    let traces = ws.traces(u)?;
    let psi = ws.psi(&config.policy, &traces)?;
    let masses = ws.masses(&psi)?;
    Ok(ws.energy_sq(&masses, &difference(u, v)).max(0.0).sqrt())
}

/// Euclidean norm of the penalty-equation residual `K u - F - penalty(u)`
/// over all bodies; zero exactly at the solution of the discrete penalty
/// problem.
pub fn penalty_residual(
    problems: &[SubdomainProblem],
    pairs: &[ContactPair],
    theta: f64,
    state: &IterationState,
) -> Result<f64> {
    let ws = Workspace::new(problems, pairs, theta)?;
    let traces = ws.traces(&state.u)?;
    let mut acc = 0.0;
    for b in 0..problems.len() {
        let mut r = vec![0.0; state.u[b].len()];
        ws.stiffness[b].matvec(&state.u[b], &mut r);
        for (rv, fv) in r.iter_mut().zip(&ws.load[b]) {
            *rv -= fv;
        }
        for &pi in &ws.adjacency[b] {
            let pair = &ws.pairs[pi];
            let g = penalty_rhs(pair, &traces[pi].0, &traces[pi].1, theta)?;
            let mut p = vec![0.0; r.len()];
            scatter_normal_loads(&ws.problems[b], pair.id, &g, &mut p)?;
            for (rv, pv) in r.iter_mut().zip(&p) {
                *rv -= pv;
            }
        }
        acc += r.iter().map(|v| v * v).sum::<f64>();
    }
    Ok(acc.sqrt())
}

/// Linear-rate fit of an error history tail.
#[derive(Debug, Clone, Copy)]
pub struct RateFit {
    /// Estimated per-iteration contraction factor.
    pub q: f64,
    /// Coefficient of determination of the log-error fit.
    pub r_squared: f64,
}

/// Least-squares estimate of the linear convergence rate from the last
/// half of the recorded energy-error history.
pub fn estimate_rate(report: &ConvergenceReport) -> Result<f64> {
    Ok(estimate_rate_fit(report)?.q)
}

pub fn estimate_rate_fit(report: &ConvergenceReport) -> Result<RateFit> {
    let errors = report
        .energy_error
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("no reference error history recorded".into()))?;
    if report.iterations < 4 {
        return Err(Error::InvalidArgument(format!(
            "rate estimation needs at least 4 iterations, got {}",
            report.iterations
        )));
    }
    let start = errors.len() / 2;
    let points: Vec<(f64, f64)> = errors
        .iter()
        .enumerate()
        .skip(start)
        .filter(|(_, e)| **e > 0.0)
        .map(|(k, e)| (k as f64, e.ln()))
        .collect();
    if points.len() < 2 {
        return Err(Error::InvalidArgument(
            "error history tail has fewer than 2 positive entries".into(),
        ));
    }
    let (slope, _, r_squared) = linear_fit(&points)
        .ok_or_else(|| Error::InvalidArgument("degenerate fit abscissae".into()))?;
    Ok(RateFit {
        q: slope.exp(),
        r_squared,
    })
}

/// Least-squares line through `points`; returns (slope, intercept, r^2).
pub(crate) fn linear_fit(points: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom == 0.0 {
        return None;
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let mean_y = sy / n;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (x, y) in points {
        let f = intercept + slope * x;
        ss_res += (y - f) * (y - f);
        ss_tot += (y - mean_y) * (y - mean_y);
    }
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    Some((slope, intercept, r_squared))
}

/// Solves the discrete penalty equation `K u = F + penalty(u)` with the
/// active-set scheme driven to stagnation, then polished by unrelaxed
/// steps. The result serves as the reference for rate and stability
/// measurements.
pub fn reference_solution(
    problems: &[SubdomainProblem],
    pairs: &[ContactPair],
    theta: f64,
    gamma: f64,
    initial: &IterationState,
) -> Result<IterationState> {
    let config = SchemeConfig::new(theta, gamma, SubareaPolicy::ActiveSet, 1e-10, 20_000);
    let (state, report) = run_scheme(problems, pairs, &config, initial, None)?;
    if !report.converged {
        return Err(Error::SolverFailure(format!(
            "reference solve did not reach 1e-10 in {} iterations",
            report.iterations
        )));
    }
    // polish with gamma = 1 while it keeps reducing the residual
    let res_before = penalty_residual(problems, pairs, theta, &state)?;
    let polish_cfg = SchemeConfig::new(theta, 1.0, SubareaPolicy::ActiveSet, 1e-15, 25);
    match run_scheme(problems, pairs, &polish_cfg, &state, None) {
        Ok((polished, _)) => {
            let res_after = penalty_residual(problems, pairs, theta, &polished)?;
            Ok(if res_after < res_before { polished } else { state })
        }
        Err(_) => Ok(state),
    }
}

#[cfg(test)]
mod tests;
