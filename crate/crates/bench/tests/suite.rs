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

use binpick::pipeline::{RoundOutcome, SuccessModel};
use binpick::scene::Placement;
use binpick::task::PolicyKind;
use binpick_bench::{mean_ci95, run_scenario_suite, ScenarioSpec, SuiteOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small(policy: PolicyKind, bins: usize, objects: usize, trials: usize) -> ScenarioSpec {
    ScenarioSpec::dual("small", Placement::Centred, policy, bins, objects, trials).with_seed(7)
}

fn opts() -> SuiteOptions {
    SuiteOptions::default()
}

#[test]
fn empty_bin_gives_zero_rounds() {
    let spec = small(PolicyKind::KinFeasibility, 1, 0, 1);
    let report = run_scenario_suite(&[spec], &opts()).unwrap();
    assert!(report.rows.is_empty());
    let s = &report.summaries[0];
    assert_eq!(s.total_rounds, 0);
    assert_eq!(s.total_picks, 0);
    assert_eq!(s.cleared, 1);
    assert!(s.curve.is_empty());
}

#[test]
fn invalid_specs_rejected() {
    let mut spec = small(PolicyKind::Sequential, 1, 2, 1);
    spec.trials = 0;
    assert!(run_scenario_suite(&[spec.clone()], &opts()).is_err());
    spec.trials = 1;
    spec.n_robots = 3;
    assert!(run_scenario_suite(&[spec.clone()], &opts()).is_err());
    spec.n_robots = 4;
    spec.policy = PolicyKind::QualityAware;
    assert!(run_scenario_suite(&[spec], &opts()).is_err());
}

#[test]
fn picks_are_conserved_and_cumulative() {
    let specs = [small(PolicyKind::Sequential, 2, 4, 2), small(PolicyKind::KinFeasibility, 2, 4, 2)];
    let report = run_scenario_suite(&specs, &opts()).unwrap();
    for (spec, summary) in specs.iter().zip(&report.summaries) {
        let rows: Vec<_> = report.rows.iter().filter(|r| r.policy == spec.policy.name()).collect();
        let picks: usize = rows.iter().map(|r| r.picks).sum();
        assert_eq!(picks, summary.total_picks);
        // objects removed = final cumulative count of each episode
        let mut removed = 0;
        for bin in 0..spec.n_bins {
            for trial in 0..spec.trials {
                let ep: Vec<_> = rows.iter().filter(|r| r.bin == bin && r.trial == trial).collect();
                assert!(ep.windows(2).all(|w| w[0].picks_cumulative <= w[1].picks_cumulative));
                assert!(ep.iter().enumerate().all(|(i, r)| r.round == i));
                removed += ep.last().map_or(0, |r| r.picks_cumulative);
            }
        }
        assert_eq!(removed, picks);
        assert!(picks <= spec.n_bins * spec.trials * spec.objects_per_bin);
    }
}

#[test]
fn sequential_uses_one_robot_per_round() {
    let report = run_scenario_suite(&[small(PolicyKind::Sequential, 1, 4, 1)], &opts()).unwrap();
    let s = &report.summaries[0];
    assert_eq!(s.two_robot_pct, 0.0);
    assert!(report
        .rows
        .iter()
        .filter(|r| r.outcome == RoundOutcome::Executed)
        .all(|r| r.robots_used == 1 && r.assigned == 1));
    assert_eq!(s.total_rounds, 4);
}

#[test]
fn every_action_is_disjoint_feasible_and_clear() {
    let report = run_scenario_suite(&[small(PolicyKind::KinFeasibility, 2, 6, 1)], &opts()).unwrap();
    let s = &report.summaries[0];
    assert_eq!(s.infeasible_actions, 0);
    assert_eq!(s.overlapping_actions, 0);
    assert_eq!(s.clearance_violations, 0);
    assert!(report
        .rows
        .iter()
        .filter(|r| r.outcome == RoundOutcome::Executed)
        .all(|r| r.min_arm_clearance.is_some()));
}

#[test]
fn rows_replay_and_ignore_worker_count() {
    let spec = small(PolicyKind::SplitSpace, 2, 4, 2);
    let a = run_scenario_suite(std::slice::from_ref(&spec), &SuiteOptions { jobs: Some(1) }).unwrap();
    let b = run_scenario_suite(&[spec], &SuiteOptions { jobs: Some(3) }).unwrap();
    let strip = |r: &binpick_bench::SuiteReport| r.rows.iter().map(|x| x.non_timing()).collect::<Vec<_>>();
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn trials_share_bins_but_not_seeds() {
    let spec = small(PolicyKind::KinFeasibility, 2, 3, 2);
    assert_eq!(spec.bin_scene(1).unwrap(), spec.bin_scene(1).unwrap());
    assert_ne!(spec.bin_scene(0).unwrap(), spec.bin_scene(1).unwrap());
    assert_ne!(spec.episode_seed(0, 0), spec.episode_seed(0, 1));
    let other = small(PolicyKind::Sequential, 2, 3, 2);
    assert_eq!(spec.bin_scene(0).unwrap(), other.bin_scene(0).unwrap());
}

#[test]
fn four_arm_bins_give_every_arm_three_objects() {
    let spec = ScenarioSpec::four_arm("quad", 2, 4, 1).with_seed(3);
    for bin in 0..2 {
        let scene = spec.bin_scene(bin).unwrap();
        assert_eq!(scene.objects.len(), 4);
    }
}

#[test]
fn ci_matches_textbook_value() {
    // t_{0.975, 4} = 2.776445
    let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
    let (m, ci) = mean_ci95(&xs);
    let (lo, hi) = ci.unwrap();
    assert_eq!(m, 3.0);
    let half = 2.776445 * (2.5f64 / 5.0).sqrt();
    assert!((hi - m - half).abs() < 1e-5);
    assert!((m - lo - half).abs() < 1e-5);
    assert!(mean_ci95(&[4.0]).1.is_none());
}

#[test]
fn ci_narrows_with_more_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut narrower = 0;
    for _ in 0..200 {
        let draw = |n: usize, rng: &mut ChaCha8Rng| (0..n).map(|_| rng.random::<f64>()).collect::<Vec<_>>();
        let w = |xs: &[f64]| {
            let (lo, hi) = mean_ci95(xs).1.unwrap();
            hi - lo
        };
        if w(&draw(20, &mut rng)) < w(&draw(5, &mut rng)) {
            narrower += 1;
        }
    }
    assert!(narrower >= 190, "{narrower}/200");
}

#[test]
fn suite_ci_narrows_from_five_to_twenty_trials() {
    let width = |trials| {
        let mut spec = small(PolicyKind::Sequential, 2, 4, trials);
        spec.success_model = SuccessModel::Stochastic;
        let report = run_scenario_suite(&[spec], &opts()).unwrap();
        // mean width over the first rounds, where every trial still has objects
        let c = &report.summaries[0].curve[..4];
        c.iter().map(|p| p.ci95.map_or(0.0, |(lo, hi)| hi - lo)).sum::<f64>() / 4.0
    };
    let (five, twenty) = (width(5), width(20));
    assert!(five > 0.0);
    assert!(twenty < five, "{twenty} vs {five}");
}
