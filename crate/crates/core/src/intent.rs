//! Intended destinations of failed moves.
//!
//! Event data records where a failed pass ended up, not where it was aimed.
//! A resolver spreads each failed move over candidate target zones; the
//! resulting (possibly fractional) weights feed the move counts.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::events::Event;
use crate::grid::{zone_of, GridError, GridSpec, ZoneId};

#[derive(Debug, Error)]
pub enum IntentError {
    #[error("intent is only resolved for failed move attempts (event seq {0})")]
    NotAFailedMove(u64),
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "lambda")]
pub enum IntentMode {
    /// All mass on the zone where the ball ended up.
    ObservedEnd,
    /// Mass proportional to where successful moves from the same zone went.
    DestinationPrior,
    /// `λ · observed_end + (1 − λ) · destination_prior`.
    Blended(f64),
}

impl Default for IntentMode {
    fn default() -> Self {
        IntentMode::Blended(0.5)
    }
}

/// Per start zone, how often successful moves reached each destination.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DestinationHistogram {
    counts: BTreeMap<ZoneId, BTreeMap<ZoneId, f64>>,
}

impl DestinationHistogram {
    pub fn from_events<'a>(events: impl IntoIterator<Item = &'a Event>, spec: &GridSpec) -> Result<Self, GridError> {
        let mut h = Self::default();
        for e in events {
            if e.is_move() && e.success {
                if let Some(end) = e.end {
                    h.add(zone_of(e.start, spec)?, zone_of(end, spec)?, 1.0);
                }
            }
        }
        Ok(h)
    }

    pub fn add(&mut self, from: ZoneId, to: ZoneId, weight: f64) {
        *self.counts.entry(from).or_default().entry(to).or_insert(0.0) += weight;
    }

    pub fn destinations(&self, from: ZoneId) -> Option<&BTreeMap<ZoneId, f64>> {
        self.counts.get(&from).filter(|m| m.values().sum::<f64>() > 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntentAttribution {
    pub weights: BTreeMap<ZoneId, f64>,
    /// The destination prior was unavailable and the observed end was used.
    pub fallback: bool,
}

pub fn resolve_intent(
    event: &Event,
    context: &DestinationHistogram,
    mode: IntentMode,
    spec: &GridSpec,
) -> Result<IntentAttribution, IntentError> {
    if !event.is_move() || event.success {
        return Err(IntentError::NotAFailedMove(event.seq));
    }
    let end = event.end.ok_or(IntentError::NotAFailedMove(event.seq))?;
    let observed = zone_of(end, spec)?;
    let start = zone_of(event.start, spec)?;

    let observed_only = |fallback| IntentAttribution {
        weights: BTreeMap::from([(observed, 1.0)]),
        fallback,
    };
    let lambda = match mode {
        IntentMode::ObservedEnd => return Ok(observed_only(false)),
        IntentMode::DestinationPrior => 0.0,
        IntentMode::Blended(l) => l.clamp(0.0, 1.0),
    };
    let Some(prior) = context.destinations(start) else {
        return Ok(observed_only(true));
    };
    let total: f64 = prior.values().sum();
    let mut weights = BTreeMap::new();
    if lambda > 0.0 {
        weights.insert(observed, lambda);
    }
    if lambda < 1.0 {
        for (&zone, &count) in prior {
            if count > 0.0 {
                *weights.entry(zone).or_insert(0.0) += (1.0 - lambda) * count / total;
            }
        }
    }
    Ok(IntentAttribution {
        weights,
        fallback: false,
    })
}
