//! Logistic and tent maps used as deterministic draw sources.
//!
//! Logistic: `x' = lw * x * (1 - x)`, chaotic for `lw` in (3.56, 4].
//! Tent: `x' = tw * x` below 0.5, `tw * (1 - x)` otherwise; chaotic for
//! `tw` in (1, 2).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::draw::DrawSource;

pub const DEFAULT_LOGISTIC_WEIGHT: f64 = 4.0;
pub const DEFAULT_TENT_WEIGHT: f64 = 1.5;

/// Offset applied to seeds that sit on a fixed point or one of its
/// preimages.
const SEED_NUDGE: f64 = 1e-6;
const DEGENERATE_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum ChaosError {
    #[error("logistic weight must lie in [0, 4], got {0}")]
    LogisticWeight(f64),
    #[error("tent weight must lie in [0, 2], got {0}")]
    TentWeight(f64),
    #[error("seed draw must lie in the open interval (0, 1), got {0}")]
    SeedOutOfRange(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "map", rename_all = "snake_case")]
pub enum ChaosMapKind {
    Logistic { lw: f64 },
    Tent { tw: f64 },
}

impl ChaosMapKind {
    pub fn logistic(lw: f64) -> Result<Self, ChaosError> {
        if (0.0..=4.0).contains(&lw) {
            Ok(Self::Logistic { lw })
        } else {
            Err(ChaosError::LogisticWeight(lw))
        }
    }

    pub fn tent(tw: f64) -> Result<Self, ChaosError> {
        if (0.0..=2.0).contains(&tw) {
            Ok(Self::Tent { tw })
        } else {
            Err(ChaosError::TentWeight(tw))
        }
    }

    /// Whether the parameter lies in the chaotic regime.
    pub fn is_chaotic(&self) -> bool {
        match *self {
            Self::Logistic { lw } => lw > 3.56 && lw <= 4.0,
            Self::Tent { tw } => tw > 1.0 && tw < 2.0,
        }
    }

    pub fn apply(&self, x: f64) -> f64 {
        let y = match *self {
            Self::Logistic { lw } => lw * x * (1.0 - x),
            Self::Tent { tw } => {
                if x < 0.5 {
                    tw * x
                } else {
                    tw * (1.0 - x)
                }
            }
        };
        y.clamp(0.0, 1.0)
    }

    /// Seeds that collapse onto a fixed point: the endpoints, the fixed
    /// points themselves, and (for the logistic map) 0.5 and the preimages
    /// of the interior fixed point.
    fn degenerate_points(&self) -> Vec<f64> {
        match *self {
            Self::Logistic { lw } => {
                let mut pts = vec![0.0, 0.5, 1.0];
                if lw > 1.0 {
                    let fixed = 1.0 - 1.0 / lw;
                    pts.push(fixed);
                    let disc = 1.0 - 4.0 * fixed / lw;
                    if disc >= 0.0 {
                        let r = disc.sqrt();
                        pts.push((1.0 - r) / 2.0);
                        pts.push((1.0 + r) / 2.0);
                    }
                }
                pts
            }
            Self::Tent { tw } => vec![0.0, tw / (1.0 + tw)],
        }
    }
}

impl Default for ChaosMapKind {
    fn default() -> Self {
        Self::Logistic {
            lw: DEFAULT_LOGISTIC_WEIGHT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChaosState {
    pub kind: ChaosMapKind,
    pub value: f64,
}

/// Turns a uniform draw into a starting state, nudging seeds that would
/// collapse the orbit.
pub fn seed_state(kind: ChaosMapKind, rng_draw: f64) -> Result<ChaosState, ChaosError> {
    if !(rng_draw > 0.0 && rng_draw < 1.0) {
        return Err(ChaosError::SeedOutOfRange(rng_draw));
    }
    let mut value = rng_draw;
    let degenerate = kind.degenerate_points();
    while degenerate.iter().any(|p| (value - p).abs() < DEGENERATE_TOL) {
        value += SEED_NUDGE;
        if value >= 1.0 {
            value -= 1.0;
        }
    }
    Ok(ChaosState { kind, value })
}

impl ChaosState {
    pub fn next(&self) -> ChaosState {
        ChaosState {
            kind: self.kind,
            value: self.kind.apply(self.value),
        }
    }

    /// The next `n` values and the state after the last one.
    pub fn sequence(&self, n: usize) -> (Vec<f64>, ChaosState) {
        let mut state = *self;
        let values = (0..n)
            .map(|_| {
                state = state.next();
                state.value
            })
            .collect();
        (values, state)
    }
}

/// A chaos state advanced in place; each draw is the next orbit value.
#[derive(Debug, Clone)]
pub struct ChaosStream {
    state: ChaosState,
}

impl ChaosStream {
    pub fn new(state: ChaosState) -> Self {
        Self { state }
    }

    pub fn state(&self) -> ChaosState {
        self.state
    }
}

impl DrawSource for ChaosStream {
    fn next_unit(&mut self) -> f64 {
        self.state = self.state.next();
        self.state.value
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn logistic() -> ChaosMapKind {
        ChaosMapKind::logistic(4.0).unwrap()
    }

    fn tent() -> ChaosMapKind {
        ChaosMapKind::tent(1.5).unwrap()
    }

    #[test]
    fn constructors_validate() {
        assert!(ChaosMapKind::logistic(4.1).is_err());
        assert!(ChaosMapKind::logistic(-0.1).is_err());
        assert!(ChaosMapKind::tent(2.01).is_err());
        assert!(ChaosMapKind::logistic(2.0).is_ok());
        assert!(!ChaosMapKind::logistic(2.0).unwrap().is_chaotic());
        assert!(logistic().is_chaotic() && tent().is_chaotic());
    }

    #[test]
    fn seeding() {
        assert_eq!(seed_state(logistic(), 0.3).unwrap().value, 0.3);
        assert_eq!(seed_state(logistic(), 0.5).unwrap().value, 0.5 + 1e-6);
        assert_eq!(seed_state(logistic(), 0.25).unwrap().value, 0.25 + 1e-6);
        assert_eq!(seed_state(logistic(), 0.75).unwrap().value, 0.75 + 1e-6);
        assert_eq!(seed_state(tent(), 0.6).unwrap().value, 0.6 + 1e-6);
        assert!(seed_state(logistic(), 0.0).is_err());
        assert!(seed_state(logistic(), 1.0).is_err());
        assert!(seed_state(logistic(), f64::NAN).is_err());
    }

    #[test]
    fn single_steps() {
        let s = ChaosState { kind: logistic(), value: 0.3 };
        assert!((s.next().value - 0.84).abs() < 1e-15);
        let t = ChaosState { kind: tent(), value: 0.2 };
        assert!((t.next().value - 0.3).abs() < 1e-15);
        let t = ChaosState { kind: tent(), value: 0.8 };
        assert!((t.next().value - 0.3).abs() < 1e-15);
    }

    #[test]
    fn sequences() {
        let s = ChaosState { kind: logistic(), value: 0.3 };
        let (empty, same) = s.sequence(0);
        assert!(empty.is_empty());
        assert_eq!(same, s);
        let (vals, _) = s.sequence(2);
        assert!((vals[0] - 0.84).abs() < 1e-15);
        assert!((vals[1] - 0.5376).abs() < 1e-15);

        let (whole, end) = s.sequence(30);
        let (head, mid) = s.sequence(12);
        let (tail, end2) = mid.sequence(18);
        assert_eq!([head, tail].concat(), whole);
        assert_eq!(end, end2);
    }

    #[test]
    fn stream_matches_sequence() {
        let s = seed_state(tent(), 0.123).unwrap();
        let mut stream = ChaosStream::new(s);
        let drawn: Vec<f64> = (0..20).map(|_| stream.next_unit()).collect();
        assert_eq!(drawn, s.sequence(20).0);
        assert_eq!(stream.state(), s.sequence(20).1);
    }

    #[test]
    fn no_collapse_from_seeded_states() {
        for kind in [logistic(), tent()] {
            for i in 1..200 {
                let s = seed_state(kind, i as f64 / 200.0).unwrap();
                let (vals, _) = s.sequence(10_000);
                let tail = &vals[9_000..];
                assert!(tail.iter().any(|&v| v != tail[0]), "{kind:?} seed {i}");
            }
        }
    }
}
