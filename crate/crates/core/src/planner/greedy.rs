use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::rrt::branch_to;
use super::{child_node, connect, fits_budget, sample_pose, Edge, PlanContext, PlanNode, PlanResult, PlannerConfig, Pose6D};
use crate::eskf::{Covariance, EstimatorState};
use crate::Result;

/// Chain planner: at every step samples `candidate_count` poses, connects the
/// current node to each and keeps the cheapest feasible edge (ties to the
/// lowest candidate index). When no candidate fits the budget the step is
/// resampled once; a second miss ends the plan.
pub fn greedy_plan(
    config: &PlannerConfig,
    initial_state: &EstimatorState,
    initial_cov: &Covariance,
    ctx: &PlanContext,
) -> Result<PlanResult> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut nodes = vec![PlanNode::root(*initial_state, *initial_cov)];

    'grow: while nodes.len() < config.max_nodes {
        let current = nodes.len() - 1;
        for _attempt in 0..2 {
            let mut best: Option<(Pose6D, Edge)> = None;
            for _ in 0..config.candidate_count {
                let pose = sample_pose(&config.bounds, &mut rng);
                if !fits_budget(&nodes[current], &pose, config) {
                    continue;
                }
                let Ok(edge) = connect(&nodes[current], &pose, ctx, config) else { continue };
                if nodes[current].arrival_time + edge.duration > config.budget {
                    continue;
                }
                if best.as_ref().is_none_or(|(_, b)| edge.cost < b.cost) {
                    best = Some((pose, edge));
                }
            }
            if let Some((pose, edge)) = best {
                let id = nodes.len();
                let node = child_node(id, &nodes[current], pose, edge);
                nodes[current].children.push(id);
                nodes.push(node);
                continue 'grow;
            }
        }
        break;
    }

    let leaf = nodes.len() - 1;
    Ok(PlanResult {
        branch: branch_to(&nodes, leaf),
        cost: nodes[leaf].cost_to_come,
        nodes,
    })
}
