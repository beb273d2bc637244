//! Dev-only: EV dual-gap noise floors under decoupled primal step (deleted
//! before release).

use sgnep_core::game::BatchSchedule;
use sgnep_core::graph::Graph;
use sgnep_core::ops::{theory_constants, AlgorithmVariant, SignConvention, StepSizeProfile};
use sgnep_core::oracle::solve_vgne;
use sgnep_core::scenarios;
use sgnep_core::solvers::{init_state, run, EdgeDualForm, EvalMode, SolverContext, StopRule};

fn main() {
    let (game, _) = scenarios::ev_charging::<f64>(4, 6, 0, scenarios::NoiseLevel::default()).unwrap();
    let graph = Graph::complete(4).unwrap();
    let (x_star, _) = solve_vgne(&game, 1e-10).unwrap();
    let xnorm = x_star.norm();

    for variant in [AlgorithmVariant::NodeAggregative, AlgorithmVariant::EdgeAggregative] {
        let th = theory_constants(variant, &graph, &game, 1.0).unwrap();
        let c = 2.0 * th.c_min;
        for (sa, sv) in [(0.1, 0.1), (0.05, 0.1), (0.03, 0.1), (0.02, 0.1)] {
            for cb in [1.0, 4.0] {
                let mut profile =
                    StepSizeProfile::from_bounds(variant, &graph, &game, 0.1, sv, c).unwrap();
                let rescale = sa / sv;
                for a in profile.alpha.iter_mut() {
                    *a *= rescale;
                }
                let schedule = BatchSchedule::new(cb, 1.0, 0.2).unwrap();
                let mut report = Vec::new();
                for seed in 0..3u64 {
                    let ctx = SolverContext {
                        game: &game,
                        graph: &graph,
                        profile: &profile,
                        schedule: &schedule,
                        eval: EvalMode::Sampled { seed },
                        sign: SignConvention::Derived,
                    };
                    let state = init_state(variant, &game, &graph, seed, EdgeDualForm::PerNode);
                    let t0 = std::time::Instant::now();
                    match run(&ctx, state, &StopRule::max_iters(5000), Some(&x_star), None) {
                        Ok(out) => {
                            let last = out.trace.last().unwrap();
                            report.push(format!(
                                "(rel {:.1e}, gapD {:.1e}, hit {:?}, {:.0?})",
                                last.dist_to_ref / xnorm,
                                last.dual_gap,
                                out.trace.first_below_relative_distance(xnorm, 1e-2),
                                t0.elapsed()
                            ));
                        }
                        Err(_) => report.push("DIVERGED".into()),
                    }
                }
                println!("{variant} sa={sa} sv={sv} cb={cb}: {}", report.join(" "));
            }
        }
    }
}
