use super::*;
use crate::contact::GapFunction;
use crate::fem::constant_field;
use crate::material::{Material, PlaneHypothesis};
use crate::mesh::{generate_rect_mesh, BoundaryTag, ElementOrder, Segment};

/// Miniature two-body compression problem: unit squares stacked at y = 1,
/// pressed together by prescribed displacements, parabolic gap so only part
/// of the interface closes.
fn mini_problem(nx: usize, order: ElementOrder) -> (Vec<SubdomainProblem>, Vec<ContactPair>, f64) {
    let material = Material::isotropic(1.0, 0.3, PlaneHypothesis::PlaneStress);
    let delta = 2.2e-3;

    let mut lower = generate_rect_mesh([0.0, 0.0], 1.0, 1.0, nx, nx, order).unwrap();
    lower
        .tag_boundary(Segment::new([0.0, 0.0], [1.0, 0.0]), BoundaryTag::Dirichlet)
        .unwrap();
    lower
        .tag_boundary(Segment::new([0.0, 1.0], [1.0, 1.0]), BoundaryTag::Contact(1))
        .unwrap();
    for seg in [
        Segment::new([0.0, 0.0], [0.0, 1.0]),
        Segment::new([1.0, 0.0], [1.0, 1.0]),
    ] {
        lower.tag_boundary(seg, BoundaryTag::Neumann).unwrap();
    }
    let mut a = SubdomainProblem::new(lower, material).unwrap();
    a.set_dirichlet_value(
        Segment::new([0.0, 0.0], [1.0, 0.0]),
        constant_field([0.0, delta / 2.0]),
    )
    .unwrap();

    let mut upper = generate_rect_mesh([0.0, 1.0], 1.0, 1.0, nx, nx, order).unwrap();
    upper
        .tag_boundary(Segment::new([0.0, 2.0], [1.0, 2.0]), BoundaryTag::Dirichlet)
        .unwrap();
    upper
        .tag_boundary(Segment::new([0.0, 1.0], [1.0, 1.0]), BoundaryTag::Contact(1))
        .unwrap();
    for seg in [
        Segment::new([0.0, 1.0], [0.0, 2.0]),
        Segment::new([1.0, 1.0], [1.0, 2.0]),
    ] {
        upper.tag_boundary(seg, BoundaryTag::Neumann).unwrap();
    }
    let mut b = SubdomainProblem::new(upper, material).unwrap();
    b.set_dirichlet_value(
        Segment::new([0.0, 2.0], [1.0, 2.0]),
        constant_field([0.0, -delta / 2.0]),
    )
    .unwrap();

    let gap = GapFunction::Parabolic { r: 1e-3, b: 0.5 };
    let pair = ContactPair::build(0, &a, 1, &b, 1, |p| gap.eval(p)).unwrap();
    let theta = 0.2;
    (vec![a, b], vec![pair], theta)
}

fn policies() -> Vec<SubareaPolicy> {
    vec![
        SubareaPolicy::None,
        SubareaPolicy::All,
        SubareaPolicy::FixedSegment { start: 0.0, end: 0.5 },
        SubareaPolicy::ActiveSet,
    ]
}

/// First gamma from a ladder for which the run converges.
fn converge_with_ladder(
    problems: &[SubdomainProblem],
    pairs: &[ContactPair],
    theta: f64,
    policy: &SubareaPolicy,
    eps_u: f64,
) -> (IterationState, ConvergenceReport, f64) {
    for gamma in [0.6, 0.3, 0.15, 0.08, 0.04] {
        let config = SchemeConfig::new(theta, gamma, policy.clone(), eps_u, 5_000);
        let initial = IterationState::zeros(problems);
        if let Ok((state, report)) = run_scheme(problems, pairs, &config, &initial, None) {
            if report.converged {
                return (state, report, gamma);
            }
        }
    }
    panic!("no gamma in the ladder converged for {policy:?}");
}

#[test]
fn trivial_fixed_point_converges_immediately() {
    // no loads, zero Dirichlet values, open gap: zero is a fixed point
    let (mut problems, _, theta) = mini_problem(2, ElementOrder::Linear);
    // rebuild without the compression
    for (p, seg) in problems.iter_mut().zip([
        Segment::new([0.0, 0.0], [1.0, 0.0]),
        Segment::new([0.0, 2.0], [1.0, 2.0]),
    ]) {
        p.set_dirichlet_value(seg, constant_field([0.0, 0.0])).unwrap();
    }
    let gap = GapFunction::Constant { d0: 0.1 };
    let pair = ContactPair::build(0, &problems[0], 1, &problems[1], 1, |p| gap.eval(p)).unwrap();
    let config = SchemeConfig::new(theta, 0.5, SubareaPolicy::All, 1e-6, 100);
    let initial = IterationState::zeros(&problems);
    let (state, report) = run_scheme(&problems, &[pair], &config, &initial, None).unwrap();
    assert!(report.converged);
    assert_eq!(report.iterations, 1);
    assert!(state.u.iter().all(|u| u.iter().all(|&v| v == 0.0)));
}

#[test]
fn all_policies_agree_on_the_solution() {
    let (problems, pairs, theta) = mini_problem(4, ElementOrder::Linear);
    let mut solutions = Vec::new();
    for policy in policies() {
        let (state, _, _) = converge_with_ladder(&problems, &pairs, theta, &policy, 1e-10);
        solutions.push(state);
    }
    let norm = |u: &[Vec<f64>]| -> f64 {
        u.iter()
            .flat_map(|b| b.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    };
    let base = &solutions[0];
    let scale = norm(&base.u);
    for s in &solutions[1..] {
        let d: f64 = base
            .u
            .iter()
            .zip(&s.u)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)))
            .sum::<f64>()
            .sqrt();
        assert!(d / scale < 1e-7, "policies disagree by {}", d / scale);
    }
}

#[test]
fn reference_solves_the_penalty_equation() {
    let (problems, pairs, theta) = mini_problem(4, ElementOrder::Quadratic);
    let initial = IterationState::zeros(&problems);
    let reference = reference_solution(&problems, &pairs, theta, 0.6, &initial).unwrap();
    let res = penalty_residual(&problems, &pairs, theta, &reference).unwrap();
    // compare against the load scale
    let (_, f) = assemble_system(&problems[0]).unwrap();
    let fnorm: f64 = f.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(res < 1e-9 * fnorm.max(1.0), "residual {res}");
}

#[test]
fn fixed_point_consistency_for_every_policy_and_gamma() {
    let (problems, pairs, theta) = mini_problem(4, ElementOrder::Linear);
    let initial = IterationState::zeros(&problems);
    let reference = reference_solution(&problems, &pairs, theta, 0.6, &initial).unwrap();
    let scale: f64 = reference
        .u
        .iter()
        .flat_map(|b| b.iter())
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt();
    for policy in policies() {
        for gamma in [0.3, 0.7, 1.0, 1.5] {
            let config = SchemeConfig::new(theta, gamma, policy.clone(), 1e-14, 1);
            let (next, _) = run_scheme(&problems, &pairs, &config, &reference, None).unwrap();
            let moved: f64 = next
                .u
                .iter()
                .zip(&reference.u)
                .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)))
                .sum::<f64>()
                .sqrt();
            assert!(
                moved / scale < 1e-7,
                "{policy:?} gamma {gamma}: moved {}",
                moved / scale
            );
        }
    }
}

#[test]
fn all_equals_active_set_on_fully_penetrating_iterate() {
    let (problems, pairs, theta) = mini_problem(3, ElementOrder::Linear);
    // craft a state in penetration everywhere: both traces move toward
    // each other by 0.1
    let mut state = IterationState::zeros(&problems);
    for (b, sign) in [(0usize, 1.0f64), (1usize, -1.0f64)] {
        let trace = problems[b].trace(1).unwrap();
        for &node in &trace.nodes {
            let idx = problems[b].dof_map().free_index(node, 1).unwrap();
            state.u[b][idx] = 0.1 * sign;
        }
    }
    let step = |policy: SubareaPolicy| {
        let config = SchemeConfig::new(theta, 0.8, policy, 1e-14, 1);
        run_scheme(&problems, &pairs, &config, &state, None).unwrap().0
    };
    let via_all = step(SubareaPolicy::All);
    let via_active = step(SubareaPolicy::ActiveSet);
    assert_eq!(via_all.u, via_active.u);
}

#[test]
fn wrappers_match_run_scheme_exactly() {
    let (problems, pairs, theta) = mini_problem(3, ElementOrder::Linear);
    let initial = IterationState::zeros(&problems);
    let base = SchemeConfig::new(theta, 0.4, SubareaPolicy::None, 1e-6, 200);

    let (s1, r1) = neumann_neumann(&problems, &pairs, &base, &initial, None).unwrap();
    let cfg_nn = SchemeConfig { policy: SubareaPolicy::None, ..base.clone() };
    let (s2, r2) = run_scheme(&problems, &pairs, &cfg_nn, &initial, None).unwrap();
    assert_eq!(s1.u, s2.u);
    assert_eq!(r1.rel_change, r2.rel_change);

    let (s1, r1) = dirichlet_dirichlet_active_set(&problems, &pairs, &base, &initial, None).unwrap();
    let cfg_as = SchemeConfig { policy: SubareaPolicy::ActiveSet, ..base.clone() };
    let (s2, r2) = run_scheme(&problems, &pairs, &cfg_as, &initial, None).unwrap();
    assert_eq!(s1.u, s2.u);
    assert_eq!(r1.rel_change, r2.rel_change);

    let (s1, _) = full_robin(&problems, &pairs, &base, &initial, None).unwrap();
    let cfg_fr = SchemeConfig { policy: SubareaPolicy::All, ..base };
    let (s2, _) = run_scheme(&problems, &pairs, &cfg_fr, &initial, None).unwrap();
    assert_eq!(s1.u, s2.u);
}

#[test]
fn stopping_criterion_cases() {
    let (problems, pairs, _) = mini_problem(2, ElementOrder::Linear);
    let mut next = IterationState::zeros(&problems);
    // nonzero trace on both bodies
    for b in 0..2 {
        let trace = problems[b].trace(1).unwrap();
        for &node in &trace.nodes {
            let idx = problems[b].dof_map().free_index(node, 1).unwrap();
            next.u[b][idx] = 1.0;
        }
    }
    // identical states pass for any tolerance
    assert!(stopping_criterion(&problems, &pairs, &next, &next, 1e-12).unwrap());

    // relative change exactly eps passes (inequality is not strict);
    // eps is a power of two so the ratio is computed exactly
    let eps = 2f64.powi(-10);
    let mut prev = next.clone();
    for b in 0..2 {
        for v in prev.u[b].iter_mut() {
            *v *= 1.0 - eps;
        }
    }
    assert!(stopping_criterion(&problems, &pairs, &prev, &next, eps).unwrap());
    assert!(!stopping_criterion(&problems, &pairs, &prev, &next, eps * 0.999).unwrap());

    // one body within tolerance, the other outside: criterion fails
    let mut half = next.clone();
    for v in half.u[1].iter_mut() {
        *v *= 0.5;
    }
    assert!(!stopping_criterion(&problems, &pairs, &half, &next, eps).unwrap());

    // zero denominator passes only with zero numerator
    let zero = IterationState::zeros(&problems);
    assert!(stopping_criterion(&problems, &pairs, &zero, &zero, eps).unwrap());
    assert!(!stopping_criterion(&problems, &pairs, &next, &zero, eps).unwrap());
}

#[test]
fn rate_estimate_on_geometric_history() {
    let m = 20;
    let report = ConvergenceReport {
        iterations: m,
        converged: true,
        rel_change: vec![vec![0.0]; m],
        energy_error: Some((0..=m).map(|k| 0.5f64.powi(k as i32)).collect()),
        active_counts: vec![vec![0]; m],
        psi_monotone_violations: 0,
    };
    let fit = estimate_rate_fit(&report).unwrap();
    assert!((fit.q - 0.5).abs() < 1e-6, "q = {}", fit.q);
    assert!(fit.r_squared > 1.0 - 1e-12);

    let short = ConvergenceReport {
        iterations: 3,
        converged: true,
        rel_change: vec![vec![0.0]; 3],
        energy_error: Some(vec![1.0, 0.5, 0.25, 0.125]),
        active_counts: vec![vec![0]; 3],
        psi_monotone_violations: 0,
    };
    assert!(estimate_rate(&short).is_err());
}

#[test]
fn rate_estimate_on_real_run() {
    let (problems, pairs, theta) = mini_problem(4, ElementOrder::Linear);
    let initial = IterationState::zeros(&problems);
    let reference = reference_solution(&problems, &pairs, theta, 0.6, &initial).unwrap();
    // pick a convergent gamma for the Neumann-Neumann scheme first
    let (_, _, gamma) =
        converge_with_ladder(&problems, &pairs, theta, &SubareaPolicy::None, 1e-8);
    let config = SchemeConfig::new(theta, gamma, SubareaPolicy::None, 1e-8, 5_000);
    let (_, report) = run_scheme(&problems, &pairs, &config, &initial, Some(&reference)).unwrap();
    assert!(report.converged);
    let fit = estimate_rate_fit(&report).unwrap();
    assert!(fit.q > 0.0 && fit.q < 1.0, "q = {}", fit.q);
}

#[test]
fn divergence_is_detected() {
    let (problems, pairs, theta) = mini_problem(3, ElementOrder::Linear);
    let config = SchemeConfig::new(theta, 1.9, SubareaPolicy::None, 1e-6, 500);
    let initial = IterationState::zeros(&problems);
    match run_scheme(&problems, &pairs, &config, &initial, None) {
        Err(Error::Divergence { iteration, .. }) => assert!(iteration > 0),
        Ok((_, report)) => assert!(!report.converged, "gamma = 1.9 should not converge"),
        Err(e) => panic!("unexpected error {e}"),
    }
}

#[test]
fn energy_norm_properties() {
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    let (problems, pairs, theta) = mini_problem(3, ElementOrder::Linear);
    let config = SchemeConfig::new(theta, 0.5, SubareaPolicy::None, 1e-6, 10);
    let zero = IterationState::zeros(&problems);
    assert_eq!(
        energy_norm(&problems, &pairs, &config, &zero.u, &zero.u).unwrap(),
        0.0
    );
    // with psi identically zero the norm reduces to the stiffness energy
    let mut rng = StdRng::seed_from_u64(42);
    let u: Vec<Vec<f64>> = problems
        .iter()
        .map(|p| (0..p.n_free()).map(|_| rng.random::<f64>() - 0.5).collect())
        .collect();
    let en = energy_norm(&problems, &pairs, &config, &u, &zero.u).unwrap();
    let mut direct = 0.0;
    for (p, ub) in problems.iter().zip(&u) {
        let k = crate::fem::assemble_stiffness(p).unwrap();
        direct += k.quadratic_form(ub);
    }
    assert!((en - direct.sqrt()).abs() < 1e-12 * en.max(1.0));

    // triangle inequality on random triples, with a Robin term present
    let config_all = SchemeConfig::new(theta, 0.5, SubareaPolicy::All, 1e-6, 10);
    for _ in 0..20 {
        let mk = |rng: &mut StdRng| -> Vec<Vec<f64>> {
            problems
                .iter()
                .map(|p| (0..p.n_free()).map(|_| rng.random::<f64>() - 0.5).collect())
                .collect()
        };
        let a = mk(&mut rng);
        let b = mk(&mut rng);
        let c = mk(&mut rng);
        let ab = energy_norm(&problems, &pairs, &config_all, &a, &b).unwrap();
        let bc = energy_norm(&problems, &pairs, &config_all, &b, &c).unwrap();
        let ac = energy_norm(&problems, &pairs, &config_all, &a, &c).unwrap();
        assert!(ac <= ab + bc + 1e-12);
    }
}

#[test]
fn zero_injection_is_bitwise_identical() {
    let (problems, pairs, theta) = mini_problem(3, ElementOrder::Linear);
    let config = SchemeConfig::new(theta, 0.5, SubareaPolicy::All, 1e-8, 300);
    let initial = IterationState::zeros(&problems);
    let (clean, rc) = run_scheme(&problems, &pairs, &config, &initial, None).unwrap();
    let (injected, ri) =
        run_with_injected_errors(&problems, &pairs, &config, &initial, None, 0.0, 7).unwrap();
    assert_eq!(clean.u, injected.u);
    assert_eq!(rc.rel_change, ri.rel_change);
}

#[test]
fn injected_errors_stagnate_near_their_magnitude() {
    let (problems, pairs, theta) = mini_problem(4, ElementOrder::Linear);
    let initial = IterationState::zeros(&problems);
    let reference = reference_solution(&problems, &pairs, theta, 0.6, &initial).unwrap();
    // clean run at a convergent gamma for the rate
    let mut config = SchemeConfig::new(theta, 0.5, SubareaPolicy::All, 1e-12, 120);
    let (_, clean) = run_scheme(&problems, &pairs, &config, &initial, Some(&reference)).unwrap();
    let q = estimate_rate(&clean).unwrap();
    assert!(q < 1.0);
    let e0 = clean.energy_error.as_ref().unwrap()[0];
    let eps = 1e-3 * e0;
    // run long past convergence of the clean iteration
    config.eps_u = 1e-30;
    config.max_iter = 120;
    let (_, noisy) = run_with_injected_errors(
        &problems, &pairs, &config, &initial, Some(&reference), eps, 11,
    )
    .unwrap_or_else(|e| panic!("noisy run failed: {e}"));
    let hist = noisy.energy_error.as_ref().unwrap();
    let tail = &hist[hist.len() - hist.len() / 4..];
    let level = tail.iter().sum::<f64>() / tail.len() as f64;
    assert!(
        level <= 1.5 * eps / (1.0 - q),
        "stagnation {level:.3e} vs bound {:.3e}",
        1.5 * eps / (1.0 - q)
    );
    assert!(level > 0.05 * eps, "stagnation implausibly low: {level:.3e}");
}

#[test]
fn active_set_growth_is_recorded() {
    let (problems, pairs, theta) = mini_problem(4, ElementOrder::Linear);
    // start from zero: no initial penetration, the active set grows as the
    // compression takes hold, violating pointwise monotonicity of psi
    let config = SchemeConfig::new(theta, 0.6, SubareaPolicy::ActiveSet, 1e-8, 1_000);
    let initial = IterationState::zeros(&problems);
    let (_, report) = run_scheme(&problems, &pairs, &config, &initial, None).unwrap();
    assert!(report.converged);
    assert!(report.psi_monotone_violations > 0);
    // active counts were recorded every iteration
    assert_eq!(report.active_counts.len(), report.iterations);
    assert!(report.active_counts.last().unwrap()[0] > 0);
}

#[test]
fn report_csv_layout() {
    let (problems, pairs, theta) = mini_problem(2, ElementOrder::Linear);
    let config = SchemeConfig::new(theta, 0.5, SubareaPolicy::All, 1e-6, 50);
    let initial = IterationState::zeros(&problems);
    let (_, report) = run_scheme(&problems, &pairs, &config, &initial, None).unwrap();
    let mut buf = Vec::new();
    report.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "k,rel_change_b0,rel_change_b1,energy_error,active_p0"
    );
    assert_eq!(lines.count(), report.iterations);
}
