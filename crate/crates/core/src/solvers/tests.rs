use approx::assert_relative_eq;
use nalgebra::{dvector, DMatrix, DVector};

use super::*;
use crate::game::quadratic::{build_aggregative_game, build_network_game, NoiseSpec};
use crate::game::{BatchSchedule, BoxBounds, GameModel};
use crate::graph::Graph;
use crate::ops::{AlgorithmVariant, GradEval, SignConvention, StepSizeProfile};
use crate::oracle::solve_vgne;
use crate::rng::{stream_rng, StreamKind};
use crate::scalar::Scalar;
use crate::scenarios;

fn network_instance(seed: u64, n_agents: usize, m: usize) -> (Graph<f64>, GameModel<f64>) {
    let mut rng = stream_rng(seed, StreamKind::Scenario, 0, 10);
    let graph = Graph::complete(n_agents).unwrap();
    let dim = 2;
    let n = n_agents * dim;
    let q = DMatrix::<f64>::from_fn(n, n, |_, _| f64::uniform(&mut rng, -0.5, 0.5));
    let m_full = &q * q.transpose() * 0.3 + DMatrix::identity(n, n) * 2.0;
    let intercepts = (0..n_agents)
        .map(|_| DVector::from_fn(dim, |_, _| f64::uniform(&mut rng, -1.0, 1.0)))
        .collect();
    let boxes = (0..n_agents).map(|_| BoxBounds::symmetric(dim, 2.0)).collect();
    let coupling = (0..n_agents)
        .map(|_| DMatrix::from_fn(m, dim, |_, _| f64::uniform(&mut rng, 0.0, 1.0)))
        .collect();
    let game = build_network_game(
        m_full,
        intercepts,
        boxes,
        coupling,
        DVector::from_element(m, 1.0),
        NoiseSpec::Additive { sigma: 0.3 },
    )
    .unwrap();
    (graph, game)
}

fn aggregative_instance(seed: u64, n_agents: usize) -> (Graph<f64>, GameModel<f64>) {
    let mut rng = stream_rng(seed, StreamKind::Scenario, 0, 11);
    let graph = Graph::complete(n_agents).unwrap();
    let nbar = 2;
    let chi = DVector::from_fn(nbar, |_, _| f64::uniform(&mut rng, 1.0, 1.5));
    let own = (0..n_agents)
        .map(|_| DMatrix::from_diagonal(&(&chi / n_agents as f64)) + DMatrix::identity(nbar, nbar))
        .collect();
    let agg = (0..n_agents).map(|_| DMatrix::from_diagonal(&chi)).collect();
    let intercepts = (0..n_agents)
        .map(|_| DVector::from_fn(nbar, |_, _| f64::uniform(&mut rng, -1.0, -0.2)))
        .collect();
    let boxes = (0..n_agents).map(|_| BoxBounds::symmetric(nbar, 2.0)).collect();
    let coupling = (0..n_agents).map(|_| DMatrix::identity(nbar, nbar)).collect();
    let game = build_aggregative_game(
        own,
        agg,
        intercepts,
        boxes,
        coupling,
        DVector::from_element(nbar, 1.0),
        NoiseSpec::Additive { sigma: 0.3 },
    )
    .unwrap();
    (graph, game)
}

fn context<'a>(
    game: &'a GameModel<f64>,
    graph: &'a Graph<f64>,
    profile: &'a StepSizeProfile<f64>,
    schedule: &'a BatchSchedule,
    eval: EvalMode,
) -> SolverContext<'a, f64> {
    SolverContext { game, graph, profile, schedule, eval, sign: SignConvention::Derived }
}

#[test]
fn single_agent_projected_gradient_converges_linearly() {
    // f(x) = (x - a)^2 with a = 1.5 outside the box [0, 1]
    let graph = Graph::from_edges(1, &[]).unwrap();
    let game = build_network_game(
        DMatrix::from_element(1, 1, 2.0),
        vec![dvector![-3.0]],
        vec![BoxBounds::new(dvector![0.0], dvector![1.0]).unwrap()],
        vec![DMatrix::zeros(1, 1)],
        dvector![1.0],
        NoiseSpec::None,
    )
    .unwrap();
    let profile = StepSizeProfile::from_bounds(
        AlgorithmVariant::NodeNetwork,
        &graph,
        &game,
        1.0,
        0.2,
        1.0,
    )
    .unwrap();
    let schedule = BatchSchedule::default();
    let ctx = context(&game, &graph, &profile, &schedule, EvalMode::Exact);
    let mut state = init_state_explicit(
        AlgorithmVariant::NodeNetwork,
        &game,
        &graph,
        vec![dvector![0.0]],
        vec![dvector![0.0]],
        EdgeDualForm::PerNode,
    )
    .unwrap();
    // error to the unconstrained minimizer 1.5 contracts by exactly
    // (1 - 2α) while the iterate is interior, then clamps at the bound
    let rate = 1.0 - 2.0 * profile.alpha[0];
    let mut prev_gap = 1.5;
    let mut interior_steps = 0;
    for _ in 0..40 {
        state = step(&ctx, &state).unwrap();
        let x = state.decision(&game, 0)[0];
        if x < 1.0 {
            let gap = 1.5 - x;
            assert_relative_eq!(gap, prev_gap * rate, epsilon = 1e-12);
            prev_gap = gap;
            interior_steps += 1;
        }
    }
    assert!(interior_steps >= 2);
    assert_relative_eq!(state.decision(&game, 0)[0], 1.0, epsilon = 1e-12);
}

#[test]
fn per_agent_step_matches_matrix_engine_exact_and_sampled() {
    let (graph, net_game) = network_instance(1, 3, 2);
    let (agg_graph, agg_game) = aggregative_instance(2, 3);
    let schedule = BatchSchedule::new(1.0, 1.0, 0.2).unwrap();
    for variant in AlgorithmVariant::ALL {
        let (graph, game) = if variant.is_aggregative() {
            (&agg_graph, &agg_game)
        } else {
            (&graph, &net_game)
        };
        let profile = StepSizeProfile::from_bounds(variant, graph, game, 0.5, 0.2, 1.0).unwrap();
        let engine = crate::ops::MatrixEngine::new(variant, graph, game, &profile).unwrap();
        for (label, eval) in [
            ("exact", EvalMode::Exact),
            ("sampled", EvalMode::Sampled { seed: 77 }),
        ] {
            let ctx = context(game, graph, &profile, &schedule, eval);
            let mut state = init_state(variant, game, graph, 5, EdgeDualForm::PerEdge);
            let mut omega = state.pack(engine.layout());
            for k in 0..100u64 {
                state = step(&ctx, &state).unwrap();
                let grad_eval = match eval {
                    EvalMode::Exact => GradEval::Exact,
                    EvalMode::Sampled { seed } => GradEval::Sampled { seed, k, schedule: &schedule },
                };
                omega = engine.step(game, &omega, grad_eval);
                let gap = (state.pack(engine.layout()) - &omega).amax();
                assert!(
                    gap < 1e-10,
                    "{variant:?} ({label}) diverged from the matrix engine at k={k}: {gap:.3e}"
                );
            }
        }
    }
}

#[test]
fn two_agent_budget_game_reaches_hand_solution() {
    let game = {
        let m = DMatrix::from_diagonal(&dvector![2.0, 2.0]);
        let r = vec![dvector![-2.0], dvector![-2.0]];
        let boxes = vec![
            BoxBounds::new(dvector![0.0], dvector![1.0]).unwrap(),
            BoxBounds::new(dvector![0.0], dvector![1.0]).unwrap(),
        ];
        let coupling = vec![
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
        ];
        build_network_game(m, r, boxes, coupling, dvector![1.0], NoiseSpec::None).unwrap()
    };
    let graph = Graph::complete(2).unwrap();
    let schedule = BatchSchedule::default();
    let profile = StepSizeProfile::from_bounds(
        AlgorithmVariant::NodeNetwork,
        &graph,
        &game,
        0.1,
        0.1,
        4.0,
    )
    .unwrap();
    let ctx = context(&game, &graph, &profile, &schedule, EvalMode::Exact);
    let state = init_state(AlgorithmVariant::NodeNetwork, &game, &graph, 0, EdgeDualForm::PerNode);
    let out = run(&ctx, state, &StopRule::max_iters(20_000).with_tol(1e-10), None, None).unwrap();
    let x = out.state.decisions(&game);
    assert_relative_eq!(x[0], 0.5, epsilon = 1e-4);
    assert_relative_eq!(x[1], 0.5, epsilon = 1e-4);
    assert_relative_eq!(out.state.duals()[0][0], 1.0, epsilon = 1e-3);
    assert_relative_eq!(out.state.duals()[1][0], 1.0, epsilon = 1e-3);
}

#[test]
fn zero_iteration_run_returns_initial_state() {
    let (graph, game) = network_instance(3, 3, 2);
    let schedule = BatchSchedule::default();
    let profile =
        StepSizeProfile::from_bounds(AlgorithmVariant::NodeNetwork, &graph, &game, 0.5, 0.2, 1.0)
            .unwrap();
    let ctx = context(&game, &graph, &profile, &schedule, EvalMode::Exact);
    let state = init_state(AlgorithmVariant::NodeNetwork, &game, &graph, 9, EdgeDualForm::PerNode);
    let out = run(&ctx, state.clone(), &StopRule::max_iters(0), None, None).unwrap();
    assert!(out.trace.is_empty());
    assert_eq!(out.state, state);
}

#[test]
fn aggregative_tracking_average_stays_zero() {
    let (graph, game) = aggregative_instance(4, 4);
    let schedule = BatchSchedule::default();
    for variant in [AlgorithmVariant::NodeAggregative, AlgorithmVariant::EdgeAggregative] {
        let profile = StepSizeProfile::from_bounds(variant, &graph, &game, 0.5, 0.2, 1.0).unwrap();
        let ctx = context(&game, &graph, &profile, &schedule, EvalMode::Sampled { seed: 11 });
        let mut state = init_state(variant, &game, &graph, 1, EdgeDualForm::PerNode);
        for _ in 0..2000 {
            state = step(&ctx, &state).unwrap();
            let mut avg = DVector::<f64>::zeros(2);
            for s in state.tracking() {
                avg += s;
            }
            avg /= game.num_agents() as f64;
            assert!(avg.amax() < 1e-12, "tracking average drifted: {:e}", avg.amax());
        }
    }
}

#[test]
fn edge_forms_produce_identical_trajectories() {
    let (graph, game) = network_instance(6, 3, 2);
    let schedule = BatchSchedule::default();
    let profile =
        StepSizeProfile::from_bounds(AlgorithmVariant::EdgeNetwork, &graph, &game, 0.5, 0.2, 1.0)
            .unwrap();
    let ctx = context(&game, &graph, &profile, &schedule, EvalMode::Sampled { seed: 3 });
    let mut z_state = init_state(AlgorithmVariant::EdgeNetwork, &game, &graph, 8, EdgeDualForm::PerNode);
    let mut v_state = init_state(AlgorithmVariant::EdgeNetwork, &game, &graph, 8, EdgeDualForm::PerEdge);

    for _ in 0..1000 {
        z_state = step(&ctx, &z_state).unwrap();
        v_state = step(&ctx, &v_state).unwrap();
        for i in 0..game.num_agents() {
            assert!((&z_state.primal[i] - &v_state.primal[i]).amax() < 1e-12);
            assert!((&z_state.duals[i] - &v_state.duals[i]).amax() < 1e-12);
        }
        // z = V_mᵀ v throughout
        for i in 0..game.num_agents() {
            let mut vtv = DVector::<f64>::zeros(game.constraint_dim());
            for (l, edge) in graph.edges().iter().enumerate() {
                if edge.tail == i {
                    vtv.axpy(edge.weight.sqrt(), &v_state.aux[l], 1.0);
                } else if edge.head == i {
                    vtv.axpy(-edge.weight.sqrt(), &v_state.aux[l], 1.0);
                }
            }
            assert!((&z_state.aux[i] - vtv).amax() < 1e-12);
        }
    }
}

#[test]
fn node_and_edge_variants_agree_on_the_equilibrium() {
    let fixture = scenarios::analytic_quadratic::<f64>(3, 2, scenarios::NoiseLevel::deterministic())
        .unwrap();
    let graph = Graph::complete(3).unwrap();
    let schedule = BatchSchedule::default();
    let mut finals = Vec::new();
    for variant in [AlgorithmVariant::NodeNetwork, AlgorithmVariant::EdgeNetwork] {
        let profile =
            StepSizeProfile::from_bounds(variant, &graph, &fixture.game, 0.1, 0.05, 2.0).unwrap();
        let ctx = context(&fixture.game, &graph, &profile, &schedule, EvalMode::Exact);
        let state = init_state(variant, &fixture.game, &graph, 0, EdgeDualForm::PerNode);
        let out = run(
            &ctx,
            state,
            &StopRule::max_iters(60_000).with_tol(1e-10),
            Some(&fixture.x_star),
            None,
        )
        .unwrap();
        finals.push(out.state.decisions(&fixture.game));
    }
    assert!((&finals[0] - &finals[1]).norm() < 1e-3);
    assert!((&finals[0] - &fixture.x_star).norm() < 1e-3);
}

#[test]
fn seeded_runs_are_bitwise_identical() {
    let (graph, game) = network_instance(9, 3, 2);
    let schedule = BatchSchedule::default();
    let profile =
        StepSizeProfile::from_bounds(AlgorithmVariant::EdgeNetwork, &graph, &game, 0.5, 0.2, 1.0)
            .unwrap();
    let ctx = context(&game, &graph, &profile, &schedule, EvalMode::Sampled { seed: 123 });
    let run_once = || {
        let state = init_state(AlgorithmVariant::EdgeNetwork, &game, &graph, 21, EdgeDualForm::PerNode);
        run(&ctx, state, &StopRule::max_iters(200), None, None).unwrap()
    };
    let a = run_once();
    let b = run_once();
    assert_eq!(a.state, b.state);
    for (ra, rb) in a.trace.records.iter().zip(b.trace.records.iter()) {
        assert_eq!(ra.dist_to_ref.to_bits(), rb.dist_to_ref.to_bits());
        assert_eq!(ra.primal_gap.to_bits(), rb.primal_gap.to_bits());
        assert_eq!(ra.dual_gap.to_bits(), rb.dual_gap.to_bits());
        assert_eq!(ra.violation.to_bits(), rb.violation.to_bits());
        assert_eq!(ra.batch_size, rb.batch_size);
    }
}

#[test]
fn printed_sign_convention_departs_from_the_resolvent() {
    let (graph, game) = network_instance(12, 3, 2);
    let schedule = BatchSchedule::default();
    let profile =
        StepSizeProfile::from_bounds(AlgorithmVariant::EdgeNetwork, &graph, &game, 0.5, 0.2, 1.0)
            .unwrap();
    let mut derived_ctx = context(&game, &graph, &profile, &schedule, EvalMode::Exact);
    derived_ctx.sign = SignConvention::Derived;
    let mut printed_ctx = context(&game, &graph, &profile, &schedule, EvalMode::Exact);
    printed_ctx.sign = SignConvention::Printed;
    let mut a = init_state(AlgorithmVariant::EdgeNetwork, &game, &graph, 2, EdgeDualForm::PerNode);
    let mut b = a.clone();
    for _ in 0..50 {
        a = step(&derived_ctx, &a).unwrap();
        b = step(&printed_ctx, &b).unwrap();
    }
    assert!(state_distance(&a, &b) > 1e-6);
}

#[test]
fn divergence_is_detected_and_named() {
    let (graph, game) = network_instance(15, 3, 2);
    let schedule = BatchSchedule::default();
    // deliberately unstable: inflate the consensus gain beyond stability
    let profile = StepSizeProfile::from_bounds(
        AlgorithmVariant::NodeNetwork,
        &graph,
        &game,
        0.5,
        1.0,
        500.0,
    )
    .unwrap();
    let ctx = context(&game, &graph, &profile, &schedule, EvalMode::Exact);
    let state = init_state(AlgorithmVariant::NodeNetwork, &game, &graph, 3, EdgeDualForm::PerNode);
    let result = run(&ctx, state, &StopRule::max_iters(100_000), None, None);
    match result {
        Err(crate::error::Error::Divergence { .. }) => {}
        other => panic!("expected divergence, got {other:?}"),
    }
}
