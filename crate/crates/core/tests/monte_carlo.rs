//! Analytic chain, scenario and what-if values against simulation.

use pitchmdp::chain::{
    expected_goals, expected_shots, expected_shots_solve, fundamental_matrix, inverse_residual, scoring_value,
    InducedChain, ValueMethod,
};
use pitchmdp::grid::{GridSpec, RegionMask, ZoneId};
use pitchmdp::policy::{season_whatif, Baseline, PolicyAdjustment};
use pitchmdp::scenario::{eval_better_shot_ever, eval_k_moves_then_shoot};
use pitchmdp::synthetic::{
    random_model, sample_possessions, simulate_better_shot, simulate_expected_goals, simulate_k_moves, toy_chain_model,
    Estimate, GroundTruthModel, RandomModelOptions,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const TOY_GOALS: f64 = 0.11 / 0.76;

fn within_3_sigma(analytic: f64, e: &Estimate) -> bool {
    (analytic - e.mean).abs() <= 3.0 * e.std_error
}

fn small_models(n: usize, seed: u64) -> Vec<pitchmdp::TeamModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = GridSpec::with_cells(3, 3).unwrap();
    (0..n)
        .map(|_| random_model(grid, &mut rng, &RandomModelOptions::default()))
        .collect()
}

#[test]
fn toy_corpus_goal_rate() {
    let gt = GroundTruthModel::new(toy_chain_model(), 17);
    let (mut goals, mut total) = (0usize, 0usize);
    for batch in 0..10 {
        let p = sample_possessions(&gt, 100_000, 17 + batch).unwrap();
        total += p.len();
        goals += p.iter().filter(|p| p.is_goal()).count();
    }
    assert_eq!(total, 1_000_000);
    let rate = goals as f64 / total as f64;
    let se = (TOY_GOALS * (1.0 - TOY_GOALS) / total as f64).sqrt();
    assert!((rate - TOY_GOALS).abs() <= 3.0 * se, "rate {rate}");
}

#[test]
fn toy_rollouts_match_expected_goals() {
    let m = toy_chain_model();
    let c = InducedChain::from_model(&m);
    let shots = expected_shots(&c, &fundamental_matrix(&c).unwrap(), &[1.0, 0.0]);
    let analytic = expected_goals(&shots, c.goal_prob.as_slice());
    assert!((analytic - TOY_GOALS).abs() < 1e-12);
    let e = simulate_expected_goals(&m, &[1.0, 0.0], 1_000_000, 5).unwrap();
    assert!(within_3_sigma(analytic, &e), "{e:?}");
}

#[test]
fn random_season_goals_match_rollouts() {
    for (i, m) in small_models(5, 70).iter().enumerate() {
        let starts = m.start_counts();
        let analytic = Baseline::compute(m, &starts).unwrap().goals;
        let e = simulate_expected_goals(m, &starts, 20_000, 100 + i as u64).unwrap();
        assert!(within_3_sigma(analytic, &e), "model {i}: {analytic} vs {e:?}");
    }
}

#[test]
fn toy_better_shot_rollouts() {
    let m = toy_chain_model();
    let analytic = eval_better_shot_ever(&m, ZoneId(0), None).unwrap().probability;
    assert!((analytic - 0.3 / 0.76).abs() < 1e-12);
    let e = simulate_better_shot(&m, ZoneId(0), 0.1, 1_000_000, 9).unwrap();
    assert!(within_3_sigma(analytic, &e), "{e:?}");
}

#[test]
fn k_move_scenarios_match_rollouts() {
    let models = small_models(3, 71);
    let mask = RegionMask::new("odd", (1..10).step_by(2).map(ZoneId));
    for (i, m) in models.iter().enumerate() {
        for (k, first) in [(1, None), (2, None), (2, Some(&mask))] {
            let start = ZoneId(i * 3 + 1);
            let analytic = eval_k_moves_then_shoot(m, start, k, first).unwrap().probability;
            let e = simulate_k_moves(m, start, k, first, 100_000, (i * 10 + k) as u64).unwrap();
            assert!(within_3_sigma(analytic, &e), "model {i} k {k}: {analytic} vs {e:?}");
        }
    }
}

#[test]
fn toy_whatif_matches_rollouts() {
    let m = toy_chain_model();
    let adj = PolicyAdjustment::new([ZoneId(0)], 0.1).unwrap();
    let report = season_whatif(&m, &adj, &[1.0, 0.0], false).unwrap();
    let adjusted = pitchmdp::adjust_policy(&m, &adj).unwrap().model;
    let base = simulate_expected_goals(&m, &[1.0, 0.0], 1_000_000, 21).unwrap();
    let counter = simulate_expected_goals(&adjusted, &[1.0, 0.0], 1_000_000, 22).unwrap();
    let sigma = (base.std_error.powi(2) + counter.std_error.powi(2)).sqrt();
    let simulated = counter.mean - base.mean;
    assert!(
        (report.delta_goals - simulated).abs() <= 3.0 * sigma,
        "{} vs {simulated}",
        report.delta_goals
    );
}

#[test]
fn fundamental_identity_on_random_models() {
    for m in small_models(20, 72) {
        let c = InducedChain::from_model(&m);
        let n = fundamental_matrix(&c).unwrap();
        assert!(inverse_residual(&n, &c) <= 1e-8);
        let starts = m.start_counts();
        let via_n = expected_shots(&c, &n, &starts);
        let via_solve = expected_shots_solve(&c, &starts).unwrap();
        for (a, b) in via_n.iter().zip(&via_solve) {
            assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        }
    }
}

#[test]
fn value_iteration_agrees_with_solve() {
    for m in small_models(20, 73) {
        let c = InducedChain::from_model(&m);
        let a = scoring_value(&c, ValueMethod::LinearSolve).unwrap();
        let b = scoring_value(&c, ValueMethod::iteration()).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() <= 1e-8);
        }
    }
}

#[test]
fn more_shooting_more_shots_in_adjusted_zones() {
    for m in small_models(20, 74) {
        let zones: Vec<ZoneId> = (0..10).filter(|i| i % 3 != 0).map(ZoneId).collect();
        let starts = m.start_counts();
        let shots_at = |x: f64| -> f64 {
            let adj = PolicyAdjustment::new(zones.clone(), x).unwrap();
            let adjusted = pitchmdp::adjust_policy(&m, &adj).unwrap().model;
            let s = Baseline::compute(&adjusted, &starts).unwrap().shots;
            zones.iter().map(|z| s[z.0]).sum()
        };
        let xs = [-0.5, -0.2, -0.05, 0.0, 0.05, 0.2, 0.5];
        let totals: Vec<f64> = xs.iter().map(|&x| shots_at(x)).collect();
        for w in totals.windows(2) {
            assert!(w[1] >= w[0] - 1e-12, "{totals:?}");
        }
    }
}
