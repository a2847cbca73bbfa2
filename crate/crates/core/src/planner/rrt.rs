use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[cfg(test)]
use super::score_segment;
use super::{
    child_node, connect, edge_mode, fits_budget, sample_pose, utility, Edge, PlanContext, PlanNode, PlanResult,
    PlannerConfig, MAX_CONSECUTIVE_FAILURES,
};
use crate::eskf::{forecast_covariance, Covariance, EstimatorState};
use crate::{Error, Result};

/// Subtree depth whose covariances are re-forecast after a rewire. Deeper
/// descendants keep their stored edge costs and are shifted by the change
/// of their ancestor at this depth.
const REWIRE_DEPTH: usize = 2;

/// Grows an RRT* tree without a goal and returns the minimum-cost branch.
///
/// Each sample is connected to the cheapest parent within `near_radius`
/// (falling back to the nearest node); edges that would exceed the budget are
/// infeasible. Afterwards the near nodes are rewired through the new node
/// when that lowers their cost and no node in their subtree gets more
/// expensive.
pub fn rrt_star_plan(
    config: &PlannerConfig,
    initial_state: &EstimatorState,
    initial_cov: &Covariance,
    ctx: &PlanContext,
) -> Result<PlanResult> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut nodes = vec![PlanNode::root(*initial_state, *initial_cov)];
    let mut failures = 0;

    while nodes.len() < config.max_nodes {
        let pose = sample_pose(&config.bounds, &mut rng);
        let near = near_ids(&nodes, &pose.position, config.near_radius);

        let mut best: Option<(usize, Edge, f64)> = None;
        for &id in &near {
            let parent = &nodes[id];
            if !fits_budget(parent, &pose, config) {
                continue;
            }
            let Ok(edge) = connect(parent, &pose, ctx, config) else { continue };
            if parent.arrival_time + edge.duration > config.budget {
                continue;
            }
            let total = parent.cost_to_come + edge.cost;
            if best.as_ref().is_none_or(|(_, _, c)| total < *c) {
                best = Some((id, edge, total));
            }
        }
        let Some((parent_id, edge, _)) = best else {
            failures += 1;
            if failures >= MAX_CONSECUTIVE_FAILURES {
                if nodes.len() == 1 {
                    return Err(Error::NoFeasibleEdge { attempts: failures });
                }
                log::debug!("tree growth stopped at {} nodes", nodes.len());
                break;
            }
            continue;
        };
        failures = 0;

        let new_id = nodes.len();
        let node = child_node(new_id, &nodes[parent_id], pose, edge);
        nodes[parent_id].children.push(new_id);
        nodes.push(node);

        for &id in &near {
            if id != parent_id {
                try_rewire(&mut nodes, new_id, id, ctx, config);
            }
        }
    }

    let (branch_end, cost) = best_leaf(&nodes);
    Ok(PlanResult {
        branch: branch_to(&nodes, branch_end),
        nodes,
        cost,
    })
}

/// Nodes within `radius` of `p` in id order, or the nearest node if none.
fn near_ids(nodes: &[PlanNode], p: &crate::inertial::Vec3, radius: f64) -> Vec<usize> {
    let dist = |n: &PlanNode| (n.pose.position - p).norm();
    let near: Vec<usize> = nodes.iter().filter(|n| dist(n) <= radius).map(|n| n.id).collect();
    if !near.is_empty() {
        return near;
    }
    let mut nearest = 0;
    for n in nodes {
        if dist(n) < dist(&nodes[nearest]) {
            nearest = n.id;
        }
    }
    vec![nearest]
}

fn is_ancestor(nodes: &[PlanNode], ancestor: usize, mut id: usize) -> bool {
    loop {
        if id == ancestor {
            return true;
        }
        match nodes[id].parent {
            Some(p) => id = p,
            None => return false,
        }
    }
}

struct Proposal {
    id: usize,
    parent: usize,
    cost_to_come: f64,
    edge_cost: f64,
    arrival_cov: Covariance,
    arrival_time: f64,
}

fn try_rewire(nodes: &mut [PlanNode], new_id: usize, target: usize, ctx: &PlanContext, config: &PlannerConfig) {
    if is_ancestor(nodes, target, new_id) {
        return;
    }
    let Ok(edge) = connect(&nodes[new_id], &nodes[target].pose, ctx, config) else { return };
    let cost = nodes[new_id].cost_to_come + edge.cost;
    let time_shift = nodes[new_id].arrival_time + edge.duration - nodes[target].arrival_time;
    if !(cost < nodes[target].cost_to_come) {
        return;
    }

    let mut proposals = vec![Proposal {
        id: target,
        parent: new_id,
        cost_to_come: cost,
        edge_cost: edge.cost,
        arrival_cov: edge.arrival_cov,
        arrival_time: nodes[target].arrival_time + time_shift,
    }];
    let mut frontier = vec![(0usize, 0usize)];
    while let Some((index, depth)) = frontier.pop() {
        let (id, parent_cost, parent_cov, parent_state) = {
            let p = &proposals[index];
            (p.id, p.cost_to_come, p.arrival_cov, nodes[p.id].arrival_state)
        };
        for &child in &nodes[id].children {
            let c = &nodes[child];
            let (edge_cost, arrival_cov) = if depth < REWIRE_DEPTH {
                let segment = c.segment.as_ref().expect("non-root node has a segment");
                let cov = forecast_covariance(&parent_state, &parent_cov, segment, ctx.map, ctx.sensors);
                let mode = edge_mode(&parent_cov, config.lambda, config.mode_policy);
                (utility(&parent_cov, &cov, mode), cov)
            } else {
                (c.edge_cost, c.arrival_cov)
            };
            proposals.push(Proposal {
                id: child,
                parent: id,
                cost_to_come: parent_cost + edge_cost,
                edge_cost,
                arrival_cov,
                arrival_time: c.arrival_time + time_shift,
            });
            frontier.push((proposals.len() - 1, depth + 1));
        }
    }

    let acceptable = proposals
        .iter()
        .all(|p| p.cost_to_come <= nodes[p.id].cost_to_come && p.arrival_time <= config.budget);
    if !acceptable {
        return;
    }

    let old_parent = nodes[target].parent.expect("rewire target is not the root");
    nodes[old_parent].children.retain(|&c| c != target);
    nodes[new_id].children.push(target);
    nodes[target].segment = Some(edge.segment);
    for p in proposals {
        let n = &mut nodes[p.id];
        debug_assert!(p.cost_to_come <= n.cost_to_come);
        n.parent = Some(p.parent);
        n.cost_to_come = p.cost_to_come;
        n.edge_cost = p.edge_cost;
        n.arrival_cov = p.arrival_cov;
        n.arrival_time = p.arrival_time;
    }
}

/// Lowest cost-to-come over the non-root nodes (the root when it is alone),
/// ties to the lowest id.
fn best_leaf(nodes: &[PlanNode]) -> (usize, f64) {
    let mut best = (0, nodes[0].cost_to_come);
    for n in nodes.iter().skip(1) {
        if best.0 == 0 || n.cost_to_come < best.1 {
            best = (n.id, n.cost_to_come);
        }
    }
    best
}

pub(super) fn branch_to(nodes: &[PlanNode], leaf: usize) -> Vec<usize> {
    let mut branch = vec![leaf];
    while let Some(p) = nodes[*branch.last().unwrap()].parent {
        branch.push(p);
    }
    branch.reverse();
    branch
}

/// Largest mismatch between a stored cost-to-come and the sum of edge costs
/// from the root. Broken parent/child links count as infinite.
pub fn tree_invariant_error(nodes: &[PlanNode]) -> f64 {
    let mut worst: f64 = nodes[0].cost_to_come.abs();
    for n in nodes.iter().skip(1) {
        let linked = n.parent.is_some_and(|p| nodes[p].children.contains(&n.id));
        if !linked {
            return f64::INFINITY;
        }
        let sum: f64 = branch_to(nodes, n.id).iter().map(|&id| nodes[id].edge_cost).sum();
        worst = worst.max((sum - n.cost_to_come).abs());
    }
    worst
}

/// Re-scores the incoming edge of `id` from its parent's stored state.
#[cfg(test)]
fn rescore(nodes: &[PlanNode], id: usize, ctx: &PlanContext, config: &PlannerConfig) -> Option<Edge> {
    let parent = &nodes[nodes[id].parent?];
    Some(score_segment(parent, nodes[id].segment.clone()?, ctx, config))
}
