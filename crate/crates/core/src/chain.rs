//! Linear algebra on the absorbing chain a policy induces over field states.
//!
//! With `Q[i, j] = π(move_to(j) | i) · P(i, move_to(j), j)`, the fundamental
//! matrix `N = (I − Q)⁻¹` holds expected visit counts before absorption, and
//! the scoring value `v` solves `v = b + Q v` with
//! `b(s) = π(shoot | s) · P(s, shoot, goal)`.

use nalgebra::{DMatrix, DVector, LU};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::events::Possession;
use crate::grid::{zone_of, GridError, GridSpec, ZoneId};
use crate::model::TeamModel;

/// Largest accepted `‖I − Q‖∞ · ‖N‖∞`.
pub const MAX_CONDITION: f64 = 1e12;
/// Residual bound on `N (I − Q) − I` before refinement kicks in.
pub const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Error, PartialEq)]
pub enum SolverError {
    #[error(
        "I - Q is singular or ill-conditioned (condition {condition:e}); zones without absorption mass: {zones:?}"
    )]
    Singular { condition: f64, zones: Vec<ZoneId> },
    #[error("value iteration did not converge within {0} iterations")]
    NoConvergence(usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InducedChain {
    pub q: DMatrix<f64>,
    pub shoot_prob: DVector<f64>,
    pub goal_prob: DVector<f64>,
}

impl InducedChain {
    pub fn from_model(model: &TeamModel) -> Self {
        let n = model.field_count();
        let mut q = DMatrix::zeros(n, n);
        for (i, z) in model.zones.iter().enumerate() {
            for m in &z.moves {
                q[(i, m.to.0)] += m.prob * m.success;
            }
        }
        Self {
            q,
            shoot_prob: DVector::from_iterator(n, model.zones.iter().map(|z| z.shoot)),
            goal_prob: DVector::from_iterator(n, model.zones.iter().map(|z| z.shot_goal)),
        }
    }

    pub fn new(q: DMatrix<f64>, shoot_prob: Vec<f64>, goal_prob: Vec<f64>) -> Result<Self, SolverError> {
        let n = q.nrows();
        if q.ncols() != n || shoot_prob.len() != n || goal_prob.len() != n {
            return Err(SolverError::Dimension(format!(
                "Q is {}x{}, shoot {} and goal {}",
                q.nrows(),
                q.ncols(),
                shoot_prob.len(),
                goal_prob.len()
            )));
        }
        Ok(Self {
            q,
            shoot_prob: DVector::from_vec(shoot_prob),
            goal_prob: DVector::from_vec(goal_prob),
        })
    }

    pub fn len(&self) -> usize {
        self.q.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Probability of leaving the field states in one step from `i`.
    pub fn absorption_mass(&self, i: usize) -> f64 {
        1.0 - self.q.row(i).sum()
    }

    /// One-step scoring reward `π(shoot|s) · P(s, shoot, goal)`.
    pub fn shot_reward(&self) -> DVector<f64> {
        self.shoot_prob.component_mul(&self.goal_prob)
    }

    fn zero_absorption_zones(&self) -> Vec<ZoneId> {
        (0..self.len())
            .filter(|&i| self.absorption_mass(i) <= 1e-12)
            .map(ZoneId)
            .collect()
    }

    /// Zones from which no sequence of moves ever reaches positive
    /// absorption mass. `I − Q` is singular exactly when this is non-empty.
    pub fn trapped_zones(&self) -> Vec<ZoneId> {
        let n = self.len();
        let mut escapes: Vec<bool> = (0..n).map(|i| self.absorption_mass(i) > 1e-12).collect();
        let mut frontier: Vec<usize> = (0..n).filter(|&i| escapes[i]).collect();
        while let Some(j) = frontier.pop() {
            for (i, esc) in escapes.iter_mut().enumerate() {
                if !*esc && self.q[(i, j)] > 0.0 {
                    *esc = true;
                    frontier.push(i);
                }
            }
        }
        (0..n).filter(|&i| !escapes[i]).map(ZoneId).collect()
    }

    fn system(&self) -> DMatrix<f64> {
        DMatrix::identity(self.len(), self.len()) - &self.q
    }
}

fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `‖N (I − Q) − I‖∞`.
pub fn inverse_residual(n: &DMatrix<f64>, chain: &InducedChain) -> f64 {
    let r = n * chain.system() - DMatrix::<f64>::identity(chain.len(), chain.len());
    inf_norm(&r)
}

/// LU factorization of `I − Q` (or its transpose) with a conditioning check.
pub struct Factored {
    system: DMatrix<f64>,
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl Factored {
    pub fn new(chain: &InducedChain) -> Result<Self, SolverError> {
        Self::from_system(chain, chain.system())
    }

    pub fn transposed(chain: &InducedChain) -> Result<Self, SolverError> {
        Self::from_system(chain, chain.system().transpose())
    }

    fn from_system(chain: &InducedChain, system: DMatrix<f64>) -> Result<Self, SolverError> {
        let trapped = chain.trapped_zones();
        if !trapped.is_empty() {
            return Err(SolverError::Singular {
                condition: f64::INFINITY,
                zones: trapped,
            });
        }
        let lu = system.clone().lu();
        if lu.u().diagonal().iter().any(|p| !p.is_finite() || *p == 0.0) {
            return Err(SolverError::Singular {
                condition: f64::INFINITY,
                zones: chain.zero_absorption_zones(),
            });
        }
        Ok(Self { system, lu })
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut x = self.lu.solve(b).expect("pivots checked at factorization");
        let r = b - &self.system * &x;
        if r.amax() > RESIDUAL_TOL {
            x += self.lu.solve(&r).expect("pivots checked at factorization");
        }
        x
    }

    fn inverse(&self, chain: &InducedChain) -> Result<DMatrix<f64>, SolverError> {
        let n = self.system.nrows();
        let mut inv = self
            .lu
            .solve(&DMatrix::identity(n, n))
            .expect("pivots checked at factorization");
        let condition = inf_norm(&self.system) * inf_norm(&inv);
        if !condition.is_finite() || condition > MAX_CONDITION {
            return Err(SolverError::Singular {
                condition,
                zones: chain.zero_absorption_zones(),
            });
        }
        // iterative refinement: N ← N − (N A − I) N
        for _ in 0..3 {
            let r = &inv * &self.system - DMatrix::<f64>::identity(n, n);
            if inf_norm(&r) <= RESIDUAL_TOL {
                break;
            }
            inv -= &r * &inv;
        }
        Ok(inv)
    }
}

/// `N = (I − Q)⁻¹`.
pub fn fundamental_matrix(chain: &InducedChain) -> Result<DMatrix<f64>, SolverError> {
    Factored::new(chain)?.inverse(chain)
}

/// Expected visits per zone: `visits(s) = Σ_{s0} start(s0) · N[s0, s]`.
pub fn expected_visits(n: &DMatrix<f64>, start_counts: &[f64]) -> Vec<f64> {
    let start = DVector::from_column_slice(start_counts);
    (n.transpose() * start).iter().copied().collect()
}

/// `E[shots in s] = π(shoot | s) · E[visits to s]`.
pub fn expected_shots(chain: &InducedChain, n: &DMatrix<f64>, start_counts: &[f64]) -> Vec<f64> {
    expected_visits(n, start_counts)
        .iter()
        .zip(chain.shoot_prob.iter())
        .map(|(v, p)| v * p)
        .collect()
}

/// Same as [`expected_shots`] through one transposed solve instead of `N`.
pub fn expected_shots_solve(chain: &InducedChain, start_counts: &[f64]) -> Result<Vec<f64>, SolverError> {
    if start_counts.len() != chain.len() {
        return Err(SolverError::Dimension(format!(
            "{} start counts for {} zones",
            start_counts.len(),
            chain.len()
        )));
    }
    let visits = Factored::transposed(chain)?.solve(&DVector::from_column_slice(start_counts));
    Ok(visits.iter().zip(chain.shoot_prob.iter()).map(|(v, p)| v * p).collect())
}

/// `Σ_s shots(s) · xg(s)`.
pub fn expected_goals(shots: &[f64], xg: &[f64]) -> f64 {
    shots.iter().zip(xg).map(|(s, g)| s * g).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum ValueMethod {
    LinearSolve,
    ValueIteration { epsilon: f64, max_iterations: usize },
}

impl ValueMethod {
    pub fn iteration() -> Self {
        ValueMethod::ValueIteration {
            epsilon: 1e-10,
            max_iterations: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueVector {
    /// Probability of scoring before the possession ends, per zone.
    pub values: Vec<f64>,
    pub iterations: Option<usize>,
}

/// Successive value-iteration sweeps `v_{k+1} = b + Q v_k` from `v_0 = 0`.
pub struct ValueSweeps<'a> {
    chain: &'a InducedChain,
    reward: DVector<f64>,
    current: DVector<f64>,
}

impl<'a> ValueSweeps<'a> {
    pub fn new(chain: &'a InducedChain) -> Self {
        Self {
            chain,
            reward: chain.shot_reward(),
            current: DVector::zeros(chain.len()),
        }
    }
}

impl Iterator for ValueSweeps<'_> {
    type Item = DVector<f64>;

    fn next(&mut self) -> Option<Self::Item> {
        let next = &self.reward + &self.chain.q * &self.current;
        self.current = next.clone();
        Some(next)
    }
}

pub fn scoring_value(chain: &InducedChain, method: ValueMethod) -> Result<ValueVector, SolverError> {
    match method {
        ValueMethod::LinearSolve => {
            let v = Factored::new(chain)?.solve(&chain.shot_reward());
            Ok(ValueVector {
                values: v.iter().copied().collect(),
                iterations: None,
            })
        }
        ValueMethod::ValueIteration {
            epsilon,
            max_iterations,
        } => {
            let mut prev = DVector::zeros(chain.len());
            for (k, v) in ValueSweeps::new(chain).take(max_iterations).enumerate() {
                let delta = (&v - &prev).amax();
                if !delta.is_finite() {
                    break;
                }
                if delta < epsilon {
                    return Ok(ValueVector {
                        values: v.iter().copied().collect(),
                        iterations: Some(k + 1),
                    });
                }
                prev = v;
            }
            Err(SolverError::NoConvergence(max_iterations))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EmpiricalMode {
    /// Every visit counts; numerator = visits inside scoring possessions.
    #[default]
    PerVisit,
    /// Each possession counts once per zone it passes through.
    PerPossession,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalValues {
    /// `None` where the zone was never visited.
    pub values: Vec<Option<f64>>,
    pub support: Vec<f64>,
}

/// Observed frequency of scoring after being in each zone.
pub fn empirical_values(
    possessions: &[Possession],
    spec: &GridSpec,
    mode: EmpiricalMode,
) -> Result<EmpiricalValues, GridError> {
    let n = spec.field_count();
    let mut visits = vec![0.0; n];
    let mut scoring = vec![0.0; n];
    let mut seen = vec![usize::MAX; n];
    for (pi, p) in possessions.iter().enumerate() {
        for e in &p.events {
            let s = zone_of(e.start, spec)?.0;
            if mode == EmpiricalMode::PerPossession {
                if seen[s] == pi {
                    continue;
                }
                seen[s] = pi;
            }
            visits[s] += 1.0;
            if p.is_goal() {
                scoring[s] += 1.0;
            }
        }
    }
    Ok(EmpiricalValues {
        values: visits
            .iter()
            .zip(&scoring)
            .map(|(v, g)| (*v > 0.0).then(|| g / v))
            .collect(),
        support: visits,
    })
}

/// Mean absolute error between model and empirical values over zones with
/// at least `min_support` visits. `None` when no zone qualifies.
pub fn value_mae(empirical: &EmpiricalValues, model: &[f64], min_support: f64) -> Option<f64> {
    let errs: Vec<f64> = empirical
        .values
        .iter()
        .zip(&empirical.support)
        .zip(model)
        .filter_map(|((e, s), m)| match e {
            Some(e) if *s >= min_support.max(f64::MIN_POSITIVE) => Some((e - m).abs()),
            _ => None,
        })
        .collect();
    (!errs.is_empty()).then(|| errs.iter().sum::<f64>() / errs.len() as f64)
}
