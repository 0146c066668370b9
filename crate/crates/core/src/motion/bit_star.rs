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

//! Batch Informed Trees: batches of samples form an implicit random geometric
//! graph that is searched lazily in order of estimated solution cost.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};
use std::f64::consts::E;

use rand::Rng;
use rand_distr::StandardNormal;

use super::space::dist;
use super::Search;

#[derive(Clone, Copy)]
struct Key(f64);

impl PartialEq for Key {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other).is_eq()
    }
}

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

struct State {
    x: Vec<f64>,
    g: f64,
    parent: Option<usize>,
    children: Vec<usize>,
    in_tree: bool,
    pruned: bool,
    /// Not yet expanded toward other tree vertices.
    fresh: bool,
    expanded: bool,
}

const START: usize = 0;
const GOAL: usize = 1;
const INFORMED_ATTEMPTS: usize = 1000;

struct Bit<'s, 'a> {
    s: &'s mut Search<'a>,
    states: Vec<State>,
    edges: BinaryHeap<Reverse<(Key, usize, usize)>>,
    vertices: BinaryHeap<Reverse<(Key, usize)>>,
    invalid: HashSet<(usize, usize)>,
    k_rgg: f64,
    c_min: f64,
    /// Householder vector mapping the first axis onto the start-goal direction.
    house: Option<Vec<f64>>,
}

impl Bit<'_, '_> {
    fn best(&self) -> f64 {
        self.states[GOAL].g
    }

    fn g_hat(&self, i: usize) -> f64 {
        dist(&self.s.start, &self.states[i].x)
    }

    fn h_hat(&self, i: usize) -> f64 {
        dist(&self.states[i].x, &self.s.goal)
    }

    fn c_hat(&self, a: usize, b: usize) -> f64 {
        dist(&self.states[a].x, &self.states[b].x)
    }

    fn add_sample(&mut self, x: Vec<f64>) {
        self.states.push(State {
            x,
            g: f64::INFINITY,
            parent: None,
            children: vec![],
            in_tree: false,
            pruned: false,
            fresh: true,
            expanded: false,
        });
    }

    fn informed_sample(&mut self) -> Option<Vec<f64>> {
        let c_best = self.best();
        if !c_best.is_finite() {
            return Some(self.s.space.uniform(&mut self.s.rng));
        }
        let d = self.s.space.dim();
        let r = (c_best * c_best - self.c_min * self.c_min).max(0.0).sqrt() / 2.0;
        let center: Vec<f64> = self.s.start.iter().zip(&self.s.goal).map(|(a, b)| 0.5 * (a + b)).collect();
        for _ in 0..INFORMED_ATTEMPTS {
            let mut v: Vec<f64> = (0..d).map(|_| self.s.rng.sample(StandardNormal)).collect();
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm == 0.0 {
                continue;
            }
            let radius = self.s.rng.random::<f64>().powf(1.0 / d as f64);
            for (i, a) in v.iter_mut().enumerate() {
                *a *= radius / norm * if i == 0 { c_best / 2.0 } else { r };
            }
            if let Some(u) = &self.house {
                let uu: f64 = u.iter().map(|a| a * a).sum();
                let uv: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
                for (a, ui) in v.iter_mut().zip(u) {
                    *a -= 2.0 * uv / uu * ui;
                }
            }
            let x: Vec<f64> = v.iter().zip(&center).map(|(a, c)| a + c).collect();
            if self.s.space.in_bounds(&x) {
                return Some(x);
            }
        }
        None
    }

    fn prune(&mut self) {
        let c_best = self.best();
        for i in 2..self.states.len() {
            if !self.states[i].in_tree && !self.states[i].pruned && self.g_hat(i) + self.h_hat(i) >= c_best {
                self.states[i].pruned = true;
            }
        }
    }

    /// Adds one batch; false when the sample budget is spent.
    fn new_batch(&mut self) -> bool {
        if self.best().is_finite() {
            self.prune();
        }
        let mut added = 0;
        while added < self.s.cfg.batch_size {
            if !self.s.budget.draw() {
                break;
            }
            if let Some(x) = self.informed_sample() {
                self.add_sample(x);
            }
            added += 1;
        }
        if added == 0 {
            return false;
        }
        for i in 0..self.states.len() {
            let st = &mut self.states[i];
            st.expanded = false;
            if st.in_tree {
                let key = st.g + dist(&st.x, &self.s.goal);
                self.vertices.push(Reverse((Key(key), i)));
            }
        }
        true
    }

    fn k_nearest(&self, v: usize, tree: bool) -> Vec<usize> {
        let n = self.states.iter().filter(|st| !st.pruned).count().max(2) as f64;
        let k = (self.k_rgg * n.ln()).ceil() as usize;
        let mut cand: Vec<(f64, usize)> = self
            .states
            .iter()
            .enumerate()
            .filter(|(i, st)| *i != v && !st.pruned && st.in_tree == tree)
            .map(|(i, st)| (dist(&st.x, &self.states[v].x), i))
            .collect();
        let k = k.min(cand.len());
        if k < cand.len() {
            cand.select_nth_unstable_by(k, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            cand.truncate(k);
        }
        cand.into_iter().map(|(_, i)| i).collect()
    }

    fn expand(&mut self, v: usize) {
        if self.states[v].expanded || !self.states[v].in_tree {
            return;
        }
        self.states[v].expanded = true;
        let c_best = self.best();
        let gv = self.states[v].g;
        if self.g_hat(v) + self.h_hat(v) >= c_best {
            return;
        }
        let mut targets = self.k_nearest(v, false);
        // the goal is always a candidate, so the straight line is tried first
        if !self.states[GOAL].in_tree && !targets.contains(&GOAL) {
            targets.push(GOAL);
        }
        for x in targets {
            let c = self.c_hat(v, x);
            if self.g_hat(v) + c + self.h_hat(x) < c_best {
                self.edges.push(Reverse((Key(gv + c + self.h_hat(x)), v, x)));
            }
        }
        if self.states[v].fresh {
            self.states[v].fresh = false;
            for w in self.k_nearest(v, true) {
                if self.states[v].parent == Some(w) || self.states[w].parent == Some(v) {
                    continue;
                }
                let c = self.c_hat(v, w);
                if self.g_hat(v) + c + self.h_hat(w) < c_best && gv + c < self.states[w].g {
                    self.edges.push(Reverse((Key(gv + c + self.h_hat(w)), v, w)));
                }
            }
        }
    }

    fn connect(&mut self, v: usize, x: usize, cost: f64) {
        let new_g = self.states[v].g + cost;
        if let Some(old) = self.states[x].parent {
            self.states[old].children.retain(|&c| c != x);
        }
        self.states[v].children.push(x);
        self.states[x].parent = Some(v);
        if self.states[x].in_tree {
            let delta = new_g - self.states[x].g;
            let mut stack = vec![x];
            while let Some(i) = stack.pop() {
                self.states[i].g += delta;
                stack.extend(self.states[i].children.iter().copied());
            }
        } else {
            self.states[x].in_tree = true;
            self.states[x].g = new_g;
            self.vertices.push(Reverse((Key(new_g + self.h_hat(x)), x)));
        }
    }

    fn path(&self) -> Vec<Vec<f64>> {
        let mut out = vec![self.states[GOAL].x.clone()];
        let mut i = GOAL;
        while let Some(p) = self.states[i].parent {
            out.push(self.states[p].x.clone());
            i = p;
        }
        out.reverse();
        out
    }

    fn run(&mut self) -> Option<Vec<Vec<f64>>> {
        loop {
            if self.s.budget.out_of_time() {
                break;
            }
            if self.edges.is_empty() && self.vertices.is_empty() && !self.new_batch() {
                break;
            }
            loop {
                let qv = self.vertices.peek().map(|Reverse((k, _))| k.0);
                let qe = self.edges.peek().map(|Reverse((k, _, _))| k.0);
                match (qv, qe) {
                    (Some(a), Some(b)) if a <= b => {}
                    (Some(_), None) => {}
                    _ => break,
                }
                let Reverse((_, v)) = self.vertices.pop().expect("peeked");
                self.expand(v);
            }
            let Some(Reverse((_, v, x))) = self.edges.pop() else {
                self.vertices.clear();
                continue;
            };
            let c_best = self.best();
            let gv = self.states[v].g;
            let c_hat = self.c_hat(v, x);
            if gv + c_hat + self.h_hat(x) >= c_best {
                // nothing left in this batch can improve the solution
                self.edges.clear();
                self.vertices.clear();
                continue;
            }
            if gv + c_hat >= self.states[x].g || self.invalid.contains(&(v.min(x), v.max(x))) {
                continue;
            }
            if !self.s.space.motion_valid(&self.states[v].x, &self.states[x].x) {
                self.invalid.insert((v.min(x), v.max(x)));
                continue;
            }
            if gv + c_hat + self.h_hat(x) < c_best && gv + c_hat < self.states[x].g {
                self.connect(v, x, c_hat);
                let now = self.best();
                if now < c_best {
                    self.s.improved(now);
                    if self.s.optimal(now) {
                        break;
                    }
                }
            }
        }
        self.states[GOAL].in_tree.then(|| self.path())
    }
}

pub(crate) fn bit_star(s: &mut Search) -> Option<Vec<Vec<f64>>> {
    let d = s.space.dim();
    let c_min = dist(&s.start, &s.goal);
    let dir: Vec<f64> = s.start.iter().zip(&s.goal).map(|(a, b)| (b - a) / c_min).collect();
    let mut u = dir.clone();
    u[0] = 1.0 - dir[0];
    for a in u.iter_mut().skip(1) {
        *a = -*a;
    }
    let house = (u.iter().map(|a| a * a).sum::<f64>() > 1e-24).then_some(u);
    let (start, goal) = (s.start.clone(), s.goal.clone());
    let mut bit = Bit {
        s,
        states: Vec::new(),
        edges: BinaryHeap::new(),
        vertices: BinaryHeap::new(),
        invalid: HashSet::new(),
        k_rgg: E * (1.0 + 1.0 / d as f64),
        c_min,
        house,
    };
    bit.add_sample(start);
    bit.states[START].in_tree = true;
    bit.states[START].g = 0.0;
    bit.add_sample(goal);
    // first pass: the start vertex alone, so the direct edge is checked before any sampling
    bit.vertices.push(Reverse((Key(c_min), START)));
    bit.run()
}
