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

use rand::Rng;

use super::space::{dist, steer};
use super::Search;

pub(crate) struct Tree {
    pub nodes: Vec<Vec<f64>>,
    pub parent: Vec<usize>,
}

impl Tree {
    pub fn new(root: Vec<f64>) -> Self {
        Tree {
            nodes: vec![root],
            parent: vec![0],
        }
    }

    /// Index of the nearest node; ties go to the older node.
    pub fn nearest(&self, x: &[f64]) -> usize {
        let mut best = (f64::INFINITY, 0);
        for (i, n) in self.nodes.iter().enumerate() {
            let d = dist(n, x);
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }

    pub fn push(&mut self, x: Vec<f64>, parent: usize) -> usize {
        self.nodes.push(x);
        self.parent.push(parent);
        self.nodes.len() - 1
    }

    /// Root-to-`i` node sequence.
    pub fn branch(&self, mut i: usize) -> Vec<Vec<f64>> {
        let mut out = vec![self.nodes[i].clone()];
        while i != 0 {
            i = self.parent[i];
            out.push(self.nodes[i].clone());
        }
        out.reverse();
        out
    }
}

pub(crate) fn rrt(s: &mut Search) -> Option<Vec<Vec<f64>>> {
    let mut tree = Tree::new(s.start.clone());
    while s.budget.draw() {
        let target = if s.rng.random::<f64>() < s.cfg.goal_bias {
            s.goal.clone()
        } else {
            s.space.uniform(&mut s.rng)
        };
        let near = tree.nearest(&target);
        let new = steer(&tree.nodes[near], &target, s.cfg.step_size);
        if !s.space.motion_valid(&tree.nodes[near], &new) {
            continue;
        }
        let i = tree.push(new, near);
        if dist(&tree.nodes[i], &s.goal) <= s.cfg.step_size && s.space.motion_valid(&tree.nodes[i], &s.goal) {
            let mut path = tree.branch(i);
            if path.last() != Some(&s.goal) {
                path.push(s.goal.clone());
            }
            let cost = path.windows(2).map(|w| dist(&w[0], &w[1])).sum();
            s.improved(cost);
            return Some(path);
        }
    }
    None
}

enum Extend {
    Trapped,
    Advanced(usize),
    Reached(usize),
}

fn extend(s: &Search, tree: &mut Tree, target: &[f64]) -> Extend {
    let near = tree.nearest(target);
    let new = steer(&tree.nodes[near], target, s.cfg.step_size);
    if !s.space.motion_valid(&tree.nodes[near], &new) {
        return Extend::Trapped;
    }
    let reached = new.as_slice() == target;
    let i = tree.push(new, near);
    if reached {
        Extend::Reached(i)
    } else {
        Extend::Advanced(i)
    }
}

pub(crate) fn rrt_connect(s: &mut Search) -> Option<Vec<Vec<f64>>> {
    let mut a = Tree::new(s.start.clone());
    let mut b = Tree::new(s.goal.clone());
    // `a` always grows from the start when `swapped` is false
    let mut swapped = false;
    while s.budget.draw() {
        let target = s.space.uniform(&mut s.rng);
        let new = match extend(s, &mut a, &target) {
            Extend::Trapped => None,
            Extend::Advanced(i) | Extend::Reached(i) => Some(i),
        };
        if let Some(i) = new {
            let pivot = a.nodes[i].clone();
            let joined = loop {
                match extend(s, &mut b, &pivot) {
                    Extend::Advanced(_) => continue,
                    Extend::Reached(j) => break Some(j),
                    Extend::Trapped => break None,
                }
            };
            if let Some(j) = joined {
                let mut from_a = a.branch(i);
                let mut from_b = b.branch(j);
                from_b.pop();
                from_b.reverse();
                from_a.extend(from_b);
                if swapped {
                    from_a.reverse();
                }
                let cost = from_a.windows(2).map(|w| dist(&w[0], &w[1])).sum();
                s.improved(cost);
                return Some(from_a);
            }
        }
        std::mem::swap(&mut a, &mut b);
        swapped = !swapped;
    }
    None
}
