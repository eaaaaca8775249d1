//! Carousel positioning on a microstepped stepper.

use serde::{Deserialize, Serialize};

use crate::domain::Station;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepperConfig {
    pub steps_per_rev: u32,
    pub microsteps: u32,
    /// Seconds per microstep.
    pub step_period_s: f64,
}

impl Default for StepperConfig {
    fn default() -> Self {
        // 1.8° motor, 1/8 microstepping, one revolution per second
        StepperConfig { steps_per_rev: 200, microsteps: 8, step_period_s: 0.000625 }
    }
}

impl StepperConfig {
    pub fn positions_per_rev(&self) -> i64 {
        i64::from(self.steps_per_rev) * i64::from(self.microsteps)
    }

    /// Absolute microstep position of a station, rounded to the nearest step.
    pub fn position(&self, station: Station) -> i64 {
        let n = self.positions_per_rev();
        ((station.index() as i64 * n) as f64 / Station::COUNT as f64).round() as i64
    }
}

/// Signed microsteps on the shorter way round (forward on a tie) and the time
/// they take.
pub fn rotate_time(from: Station, to: Station, cfg: &StepperConfig) -> (i64, f64) {
    let n = cfg.positions_per_rev();
    let mut d = (cfg.position(to) - cfg.position(from)).rem_euclid(n);
    if d * 2 > n {
        d -= n;
    }
    (d, d.unsigned_abs() as f64 * cfg.step_period_s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(i: u8) -> Station {
        Station::new(i).unwrap()
    }

    #[test]
    fn carousel_examples() {
        let c = StepperConfig::default();
        assert_eq!(rotate_time(s(0), s(0), &c), (0, 0.0));
        assert_eq!(rotate_time(s(0), s(1), &c).0, 533);
        assert_eq!(rotate_time(s(0), s(2), &c).0, -533);
        let (steps, secs) = rotate_time(s(1), s(2), &c);
        assert_eq!(steps, 534);
        assert!((secs - 534.0 * 0.000625).abs() < 1e-12);
    }

    /// Walks one microstep at a time in each direction until the target is hit.
    fn walk(from: i64, to: i64, n: i64) -> i64 {
        let fwd = (0..n).find(|k| (from + k).rem_euclid(n) == to).unwrap();
        let back = (0..n).find(|k| (from - k).rem_euclid(n) == to).unwrap();
        if fwd <= back {
            fwd
        } else {
            -back
        }
    }

    proptest! {
        #[test]
        fn matches_step_walk(a in 0u8..3, b in 0u8..3, spr in 1u32..400, micro in 1u32..16) {
            let c = StepperConfig { steps_per_rev: spr, microsteps: micro, step_period_s: 0.001 };
            let n = c.positions_per_rev();
            let (steps, secs) = rotate_time(s(a), s(b), &c);
            prop_assert_eq!(steps, walk(c.position(s(a)), c.position(s(b)), n));
            prop_assert!(steps.abs() * 2 <= n);
            prop_assert!((secs - steps.abs() as f64 * 0.001).abs() < 1e-9);
        }
    }
}
