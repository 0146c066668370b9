/*
  Copyright 2026 The binpick Authors

  Licensed under the Apache License, Version 2.0 (the "License");
  you may not use this file except in compliance with the License.
  You may obtain a copy of the License at

      http://www.apache.org/licenses/LICENSE-2.0

  Unless required by applicable law or agreed to in writing, software
  distributed under the License is distributed on an "AS IS" BASIS,
  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
  See the License for the specific language governing permissions and
  limitations under the License.
*/

use std::f64::consts::PI;

use rand::Rng;

use super::space::{dist, steer};
use super::Search;

/// Volume of the unit ball in `d` dimensions.
pub(crate) fn unit_ball_volume(d: usize) -> f64 {
    let d = d as f64;
    PI.powf(d / 2.0) / statrs::function::gamma::gamma(d / 2.0 + 1.0)
}

struct Node {
    x: Vec<f64>,
    parent: usize,
    cost: f64,
    children: Vec<usize>,
}

fn reparent(nodes: &mut [Node], child: usize, new_parent: usize, new_cost: f64) {
    let old = nodes[child].parent;
    nodes[old].children.retain(|&c| c != child);
    nodes[new_parent].children.push(child);
    nodes[child].parent = new_parent;
    let delta = new_cost - nodes[child].cost;
    let mut stack = vec![child];
    while let Some(i) = stack.pop() {
        nodes[i].cost += delta;
        stack.extend(nodes[i].children.iter().copied());
    }
}

fn branch(nodes: &[Node], mut i: usize) -> Vec<Vec<f64>> {
    let mut out = vec![nodes[i].x.clone()];
    while i != 0 {
        i = nodes[i].parent;
        out.push(nodes[i].x.clone());
    }
    out.reverse();
    out
}

pub(crate) fn rrt_star(s: &mut Search) -> Option<Vec<Vec<f64>>> {
    let d = s.space.dim();
    let gamma = s.cfg.rewire_radius_scale
        * 2.0
        * (1.0 + 1.0 / d as f64).powf(1.0 / d as f64)
        * (s.space.measure() / unit_ball_volume(d)).powf(1.0 / d as f64);
    let mut nodes = vec![Node {
        x: s.start.clone(),
        parent: 0,
        cost: 0.0,
        children: vec![],
    }];
    // nodes with a collision-free straight connection to the goal
    let mut goal_links: Vec<usize> = Vec::new();
    let mut best: Option<(f64, usize)> = None;

    while s.budget.draw() {
        let target = if s.rng.random::<f64>() < s.cfg.goal_bias {
            s.goal.clone()
        } else {
            s.space.uniform(&mut s.rng)
        };
        let nearest = (0..nodes.len())
            .min_by(|&a, &b| dist(&nodes[a].x, &target).total_cmp(&dist(&nodes[b].x, &target)))
            .expect("root exists");
        let new = steer(&nodes[nearest].x, &target, s.cfg.step_size);
        if !s.space.valid(&new) {
            continue;
        }
        let n = nodes.len() as f64;
        let radius = (gamma * (n.ln() / n).powf(1.0 / d as f64)).min(s.cfg.step_size);
        let radius = radius.max(dist(&nodes[nearest].x, &new));
        let mut near: Vec<(usize, f64)> = nodes
            .iter()
            .enumerate()
            .map(|(i, nd)| (i, dist(&nd.x, &new)))
            .filter(|(_, dd)| *dd <= radius)
            .collect();
        // cheapest valid parent first
        near.sort_by(|a, b| {
            (nodes[a.0].cost + a.1)
                .total_cmp(&(nodes[b.0].cost + b.1))
                .then(a.0.cmp(&b.0))
        });
        let Some(&(parent, pd)) = near
            .iter()
            .find(|(i, _)| s.space.motion_valid(&nodes[*i].x, &new))
        else {
            continue;
        };
        let idx = nodes.len();
        let cost = nodes[parent].cost + pd;
        nodes.push(Node {
            x: new,
            parent,
            cost,
            children: vec![],
        });
        nodes[parent].children.push(idx);

        for &(i, dd) in &near {
            if i == parent || i == 0 {
                continue;
            }
            let via = nodes[idx].cost + dd;
            if via < nodes[i].cost && s.space.motion_valid(&nodes[idx].x, &nodes[i].x) {
                reparent(&mut nodes, i, idx, via);
            }
        }

        let to_goal = dist(&nodes[idx].x, &s.goal);
        let improves = best.is_none_or(|(c, _)| nodes[idx].cost + to_goal < c);
        if to_goal <= radius.max(s.cfg.step_size) && improves && s.space.motion_valid(&nodes[idx].x, &s.goal) {
            goal_links.push(idx);
        }
        // rewiring may have lowered the cost of any linked node
        let current = goal_links
            .iter()
            .map(|&i| (nodes[i].cost + dist(&nodes[i].x, &s.goal), i))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        if let Some((c, i)) = current {
            if best.is_none_or(|(b, _)| c < b) {
                best = Some((c, i));
                s.improved(c);
                if s.optimal(c) {
                    break;
                }
            }
        }
    }
    best.map(|(_, i)| {
        let mut path = branch(&nodes, i);
        if path.last() != Some(&s.goal) {
            path.push(s.goal.clone());
        }
        path
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(2) - PI).abs() < 1e-12);
        assert!((unit_ball_volume(3) - 4.0 / 3.0 * PI).abs() < 1e-12);
    }
}
