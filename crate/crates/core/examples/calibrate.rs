//! Dev-only calibration sweeps (deleted before release).

use nalgebra::DVector;
use sgnep_core::game::BatchSchedule;
use sgnep_core::graph::Graph;
use sgnep_core::ops::{theory_constants, AlgorithmVariant, MatrixEngine, SignConvention, StepSizeProfile};
use sgnep_core::oracle::solve_vgne;
use sgnep_core::scenarios;
use sgnep_core::solvers::{init_state, run, EdgeDualForm, EvalMode, SolverContext, StopRule};

fn main() {
    nash_cournot_sweep();
    ev_sweep();
    fejer_sweep();
    topology_check();
    cocoercivity_check();
}

fn nash_cournot_sweep() {
    println!("=== desk Nash-Cournot (N=5, m=3, seed 0) ===");
    let (game, _) = scenarios::nash_cournot::<f64>(5, 3, 0, scenarios::NoiseLevel::default()).unwrap();
    let graph = Graph::complete(5).unwrap();
    let (x_star, _) = solve_vgne(&game, 1e-10).unwrap();
    let xnorm = x_star.norm();
    println!("|x*| = {xnorm:.4}");
    for variant in [AlgorithmVariant::NodeNetwork, AlgorithmVariant::EdgeNetwork] {
        let th = theory_constants(variant, &graph, &game, 1.0).unwrap();
        let c = 2.0 * th.c_min;
        println!("{variant}: eta={:.3} ellF={:.3} ellp={:.3} c_min={:.3} c={c:.3}", th.eta, th.ell_f, th.ell_p, th.c_min);
        for safety in [0.5, 0.3, 0.2, 0.1, 0.05, 0.03, 0.02, 0.01, 0.005] {
            let profile = StepSizeProfile::from_bounds(variant, &graph, &game, 0.1, safety, c).unwrap();
            let schedule = BatchSchedule::new(1.0, 1.0, 0.2).unwrap();
            let ctx = SolverContext { game: &game, graph: &graph, profile: &profile, schedule: &schedule, eval: EvalMode::Exact, sign: SignConvention::Derived };
            let state = init_state(variant, &game, &graph, 0, EdgeDualForm::PerNode);
            match run(&ctx, state, &StopRule::max_iters(5000), Some(&x_star), None) {
                Ok(out) => {
                    let last = out.trace.last().unwrap();
                    let hit = out.trace.first_below_relative_distance(xnorm, 1e-2);
                    println!("  safety {safety:>6}: det rel={:.3e} gapD={:.2e} hit1e-2@{:?}", last.dist_to_ref / xnorm, last.dual_gap, hit);
                }
                Err(e) => println!("  safety {safety:>6}: DIVERGED ({e})"),
            }
        }
    }
    // stochastic spot check at chosen safety
    for variant in [AlgorithmVariant::NodeNetwork, AlgorithmVariant::EdgeNetwork] {
        let th = theory_constants(variant, &graph, &game, 1.0).unwrap();
        let c = 2.0 * th.c_min;
        for safety in [0.05, 0.02, 0.01] {
            let profile = StepSizeProfile::from_bounds(variant, &graph, &game, 0.1, safety, c).unwrap();
            let schedule = BatchSchedule::new(1.0, 1.0, 0.2).unwrap();
            let mut dists = vec![];
            let mut gaps = vec![];
            let mut hits = vec![];
            for seed in 0..5u64 {
                let ctx = SolverContext { game: &game, graph: &graph, profile: &profile, schedule: &schedule, eval: EvalMode::Sampled { seed }, sign: SignConvention::Derived };
                let state = init_state(variant, &game, &graph, seed, EdgeDualForm::PerNode);
                let t0 = std::time::Instant::now();
                match run(&ctx, state, &StopRule::max_iters(5000), Some(&x_star), None) {
                    Ok(out) => {
                        let last = out.trace.last().unwrap();
                        dists.push(last.dist_to_ref / xnorm);
                        gaps.push(last.dual_gap.max(last.primal_gap));
                        hits.push(out.trace.first_below_relative_distance(xnorm, 1e-2));
                        if seed == 0 { println!("  [{variant} s={safety}] seed0 took {:.1?}", t0.elapsed()); }
                    }
                    Err(e) => println!("  [{variant} s={safety}] seed {seed} DIVERGED ({e})"),
                }
            }
            println!("  [{variant} s={safety}] stoch rel dists {dists:?} gaps {gaps:?} hits {hits:?}");
        }
    }
}

fn ev_sweep() {
    println!("=== desk EV charging (N=4, nbar=6, seed 0) ===");
    let (game, _) = scenarios::ev_charging::<f64>(4, 6, 0, scenarios::NoiseLevel::default()).unwrap();
    let graph = Graph::complete(4).unwrap();
    let (x_star, _) = solve_vgne(&game, 1e-10).unwrap();
    let xnorm = x_star.norm();
    println!("|x*| = {xnorm:.4}");
    for variant in [AlgorithmVariant::NodeAggregative, AlgorithmVariant::EdgeAggregative] {
        let th = theory_constants(variant, &graph, &game, 1.0).unwrap();
        let c = 2.0 * th.c_min;
        println!("{variant}: c_min={:.3} c={c:.3} mu={:.4} theta={:.3} beta={:.2e}", th.c_min, th.mu, th.theta, th.beta);
        for safety in [0.5, 0.3, 0.2, 0.1, 0.05, 0.02] {
            let profile = StepSizeProfile::from_bounds(variant, &graph, &game, 0.1, safety, c).unwrap();
            let schedule = BatchSchedule::new(1.0, 1.0, 0.2).unwrap();
            let ctx = SolverContext { game: &game, graph: &graph, profile: &profile, schedule: &schedule, eval: EvalMode::Exact, sign: SignConvention::Derived };
            let state = init_state(variant, &game, &graph, 0, EdgeDualForm::PerNode);
            match run(&ctx, state, &StopRule::max_iters(5000), Some(&x_star), None) {
                Ok(out) => {
                    let last = out.trace.last().unwrap();
                    let hit = out.trace.first_below_relative_distance(xnorm, 1e-2);
                    println!("  safety {safety:>5}: det rel={:.3e} gapD={:.2e} hit@{:?}", last.dist_to_ref / xnorm, last.dual_gap, hit);
                }
                Err(e) => println!("  safety {safety:>5}: DIVERGED ({e})"),
            }
        }
        // stochastic spot
        for safety in [0.1, 0.05] {
            let profile = StepSizeProfile::from_bounds(variant, &graph, &game, 0.1, safety, c).unwrap();
            let schedule = BatchSchedule::new(1.0, 1.0, 0.2).unwrap();
            let mut info = vec![];
            for seed in 0..4u64 {
                let ctx = SolverContext { game: &game, graph: &graph, profile: &profile, schedule: &schedule, eval: EvalMode::Sampled { seed }, sign: SignConvention::Derived };
                let state = init_state(variant, &game, &graph, seed, EdgeDualForm::PerNode);
                match run(&ctx, state, &StopRule::max_iters(5000), Some(&x_star), None) {
                    Ok(out) => {
                        let last = out.trace.last().unwrap();
                        info.push((last.dist_to_ref / xnorm, last.dual_gap, out.trace.first_below_relative_distance(xnorm, 1e-2)));
                    }
                    Err(e) => println!("  [s={safety}] seed {seed} DIVERGED ({e})"),
                }
            }
            println!("  [{variant} s={safety}] stoch {info:?}");
        }
    }
}

fn fejer_sweep() {
    println!("=== Fejer on analytic quadratic (N=3, seed 0) ===");
    let fixture = scenarios::analytic_quadratic::<f64>(3, 0, scenarios::NoiseLevel::deterministic()).unwrap();
    let graph = Graph::complete(3).unwrap();
    for variant in [AlgorithmVariant::NodeNetwork, AlgorithmVariant::EdgeNetwork] {
        let th = theory_constants(variant, &graph, &fixture.game, 1.0).unwrap();
        let c = 2.0 * th.c_min;
        for safety in [0.5, 0.3, 0.2, 0.1, 0.05, 0.02, 0.01] {
            let profile = StepSizeProfile::from_bounds(variant, &graph, &fixture.game, 0.1, safety, c).unwrap();
            let engine = MatrixEngine::new(variant, &graph, &fixture.game, &profile).unwrap();
            let omega_star = engine.consensus_solution(&fixture.game, &fixture.x_star, &fixture.lambda_star);
            let schedule = BatchSchedule::default();
            let ctx = SolverContext { game: &fixture.game, graph: &graph, profile: &profile, schedule: &schedule, eval: EvalMode::Sampled { seed: 0 }, sign: SignConvention::Derived };
            let mut state = init_state(variant, &fixture.game, &graph, 0, EdgeDualForm::PerEdge);
            let mut dist = engine.phi_norm(&(state.pack(engine.layout()) - &omega_star));
            let mut violations = 0u32;
            let mut worst: f64 = 0.0;
            for _ in 0..2000 {
                state = sgnep_core::solvers::step(&ctx, &state).unwrap();
                let d = engine.phi_norm(&(state.pack(engine.layout()) - &omega_star));
                if d > dist * (1.0 + 1e-9) {
                    violations += 1;
                    worst = worst.max(d / dist - 1.0);
                }
                dist = d;
            }
            println!("  {variant} safety {safety:>5}: final dist {dist:.3e}, violations {violations}, worst +{worst:.2e}");
        }
    }
}

fn topology_check() {
    println!("=== topology effect (deterministic desk NC, node-based) ===");
    let (game, _) = scenarios::nash_cournot::<f64>(5, 3, 0, scenarios::NoiseLevel::deterministic()).unwrap();
    let (x_star, _) = solve_vgne(&game, 1e-10).unwrap();
    let xnorm = x_star.norm();
    for safety in [0.05, 0.02, 0.01] {
        let mut hits = vec![];
        for graph in [Graph::complete(5).unwrap(), Graph::cycle(5).unwrap()] {
            let th = theory_constants(AlgorithmVariant::NodeNetwork, &graph, &game, 1.0).unwrap();
            let c = 2.0 * th.c_min;
            let profile = StepSizeProfile::from_bounds(AlgorithmVariant::NodeNetwork, &graph, &game, 0.1, safety, c).unwrap();
            let schedule = BatchSchedule::default();
            let ctx = SolverContext { game: &game, graph: &graph, profile: &profile, schedule: &schedule, eval: EvalMode::Exact, sign: SignConvention::Derived };
            let state = init_state(AlgorithmVariant::NodeNetwork, &game, &graph, 0, EdgeDualForm::PerNode);
            match run(&ctx, state, &StopRule::max_iters(20000), Some(&x_star), None) {
                Ok(out) => hits.push(out.trace.first_below_relative_distance(xnorm, 1e-2)),
                Err(e) => println!("  safety {safety} DIVERGED: {e}"),
            }
        }
        println!("  safety {safety}: complete hit@{:?} cycle hit@{:?}", hits.first(), hits.get(1));
    }
}

fn cocoercivity_check() {
    println!("=== restricted cocoercivity spot checks ===");
    use sgnep_core::ops::GradEval;
    use sgnep_core::rng::{stream_rng, StreamKind};
    use sgnep_core::scalar::Scalar;
    // network
    let fixture = scenarios::analytic_quadratic::<f64>(3, 0, scenarios::NoiseLevel::deterministic()).unwrap();
    let graph = Graph::complete(3).unwrap();
    let th = theory_constants(AlgorithmVariant::NodeNetwork, &graph, &fixture.game, 1.0).unwrap();
    let c = 2.0 * th.c_min;
    let th = theory_constants(AlgorithmVariant::NodeNetwork, &graph, &fixture.game, c).unwrap();
    let beta = th.beta;
    let profile = StepSizeProfile::from_bounds(AlgorithmVariant::NodeNetwork, &graph, &fixture.game, 0.1, 0.1, c).unwrap();
    let engine = MatrixEngine::new(AlgorithmVariant::NodeNetwork, &graph, &fixture.game, &profile).unwrap();
    let omega_star = engine.consensus_solution(&fixture.game, &fixture.x_star, &fixture.lambda_star);
    let a_star = engine.forward(&fixture.game, &omega_star, GradEval::Exact);
    let mut rng = stream_rng(0, StreamKind::Scenario, 50, 0);
    let mut worst: f64 = f64::INFINITY;
    for _ in 0..1000 {
        let omega = DVector::from_fn(engine.layout().total(), |_, _| f64::uniform(&mut rng, -3.0, 3.0));
        let a = engine.forward(&fixture.game, &omega, GradEval::Exact);
        let da = &a - &a_star;
        let lhs = da.dot(&(&omega - &omega_star));
        let rhs = beta * da.norm_squared();
        worst = worst.min(lhs - rhs);
    }
    println!("  network: beta={beta:.3e} worst margin {worst:.3e}");

    // aggregative
    let fixture = scenarios::analytic_quadratic_aggregative::<f64>(3, 2, 0, scenarios::NoiseLevel::deterministic()).unwrap();
    let th0 = theory_constants(AlgorithmVariant::NodeAggregative, &graph, &fixture.game, 1.0).unwrap();
    let c = 2.0 * th0.c_min;
    let th = theory_constants(AlgorithmVariant::NodeAggregative, &graph, &fixture.game, c).unwrap();
    println!("  aggregative: c={c:.3} mu={:.3} theta={:.3} beta={:.3e}", th.mu, th.theta, th.beta);
    let profile = StepSizeProfile::from_bounds(AlgorithmVariant::NodeAggregative, &graph, &fixture.game, 0.1, 0.1, c).unwrap();
    let engine = MatrixEngine::new(AlgorithmVariant::NodeAggregative, &graph, &fixture.game, &profile).unwrap();
    let omega_star = engine.consensus_solution(&fixture.game, &fixture.x_star, &fixture.lambda_star);
    let a_star = engine.forward(&fixture.game, &omega_star, GradEval::Exact);
    let layout = engine.layout().clone();
    let mut worst: f64 = f64::INFINITY;
    for _ in 0..1000 {
        let mut omega = DVector::from_fn(layout.total(), |_, _| f64::uniform(&mut rng, -3.0, 3.0));
        // restrict to the invariant subspace avg(s) = 0
        let nbar = layout.dims[0];
        let tr = layout.tracking_range();
        let mut avg = DVector::<f64>::zeros(nbar);
        for i in 0..layout.n_agents {
            avg += omega.rows(tr.start + i * nbar, nbar);
        }
        avg /= layout.n_agents as f64;
        for i in 0..layout.n_agents {
            let mut s = omega.rows_mut(tr.start + i * nbar, nbar);
            s -= &avg;
        }
        let a = engine.forward(&fixture.game, &omega, GradEval::Exact);
        let da = &a - &a_star;
        let lhs = da.dot(&(&omega - &omega_star));
        let rhs = th.beta * da.norm_squared();
        worst = worst.min(lhs - rhs);
    }
    println!("  aggregative: worst margin {worst:.3e}");
}
