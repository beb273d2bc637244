//! Dev-only: Nash-Cournot gain/step grid (deleted before release).

use sgnep_core::game::BatchSchedule;
use sgnep_core::graph::Graph;
use sgnep_core::ops::{AlgorithmVariant, SignConvention, StepSizeProfile};
use sgnep_core::oracle::solve_vgne;
use sgnep_core::scenarios;
use sgnep_core::solvers::{init_state, run, EdgeDualForm, EvalMode, SolverContext, StopRule};

fn main() {
    let (game, _) = scenarios::nash_cournot::<f64>(5, 3, 0, scenarios::NoiseLevel::default()).unwrap();
    let graph = Graph::complete(5).unwrap();
    let (x_star, _) = solve_vgne(&game, 1e-10).unwrap();
    let xnorm = x_star.norm();
    println!("|x*| = {xnorm:.4}");
    let schedule = BatchSchedule::new(1.0, 1.0, 0.2).unwrap();

    for variant in [AlgorithmVariant::NodeNetwork, AlgorithmVariant::EdgeNetwork] {
        for c in [1.0, 2.0, 4.0] {
            for (sa, sv) in [(0.2, 0.5), (0.1, 0.5), (0.05, 0.5), (0.1, 0.25), (0.05, 0.25)] {
                let mut profile =
                    StepSizeProfile::from_bounds(variant, &graph, &game, 0.1, sv, c).unwrap();
                let rescale = sa / sv;
                for a in profile.alpha.iter_mut() {
                    *a *= rescale;
                }
                // deterministic
                let ctx = SolverContext {
                    game: &game,
                    graph: &graph,
                    profile: &profile,
                    schedule: &schedule,
                    eval: EvalMode::Exact,
                    sign: SignConvention::Derived,
                };
                let state = init_state(variant, &game, &graph, 0, EdgeDualForm::PerNode);
                let det = match run(&ctx, state, &StopRule::max_iters(5000), Some(&x_star), None) {
                    Ok(out) => {
                        let last = out.trace.last().unwrap();
                        format!(
                            "rel={:.2e} gap={:.2e} hit@{:?}",
                            last.dist_to_ref / xnorm,
                            last.dual_gap.max(last.primal_gap),
                            out.trace.first_below_relative_distance(xnorm, 1e-2)
                        )
                    }
                    Err(_) => "DIVERGED".to_string(),
                };
                // one stochastic seed, full horizon, to read the noise floor
                let sctx = SolverContext { eval: EvalMode::Sampled { seed: 1 }, ..ctx };
                let state = init_state(variant, &game, &graph, 1, EdgeDualForm::PerNode);
                let stoch = match run(&sctx, state, &StopRule::max_iters(5000), Some(&x_star), None)
                {
                    Ok(out) => {
                        let last = out.trace.last().unwrap();
                        format!(
                            "rel={:.2e} gapD={:.2e} gapP={:.2e} hit@{:?}",
                            last.dist_to_ref / xnorm,
                            last.dual_gap,
                            last.primal_gap,
                            out.trace.first_below_relative_distance(xnorm, 1e-2)
                        )
                    }
                    Err(_) => "DIVERGED".to_string(),
                };
                println!("{variant} c={c} sa={sa} sv={sv}: det[{det}] stoch[{stoch}]");
            }
        }
    }
}
