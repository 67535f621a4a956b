use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cosine annealing with warm restarts.
///
/// Cycle `i` lasts `T_i` iterations, `T_0 = cycle_len` and
/// `T_{i+1} = round(T_i * cycle_mult)`. Within a cycle the position runs from
/// `0` to `T_i - 1`, so the first iteration of each cycle sits at `eta_max`
/// and the last one at `eta_min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrSchedule {
    pub eta_max: f64,
    pub eta_min: f64,
    pub cycle_len: usize,
    pub cycle_mult: f64,
}

impl LrSchedule {
    pub fn new(eta_max: f64, eta_min: f64, cycle_len: usize, cycle_mult: f64) -> Result<Self> {
        let schedule = LrSchedule {
            eta_max,
            eta_min,
            cycle_len,
            cycle_mult,
        };
        schedule.validate()?;
        Ok(schedule)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta_max > 0.0 && self.eta_max.is_finite()) {
            return Err(Error::config("eta_max must be positive"));
        }
        if !(self.eta_min >= 0.0 && self.eta_min < self.eta_max) {
            return Err(Error::config("eta_min must lie in [0, eta_max)"));
        }
        if self.cycle_len < 2 {
            return Err(Error::config("cycle length must be at least 2 iterations"));
        }
        if !(self.cycle_mult >= 1.0 && self.cycle_mult.is_finite()) {
            return Err(Error::config("cycle multiplier must be >= 1"));
        }
        Ok(())
    }

    /// Position of iteration `t`: `(offset within cycle, cycle length)`.
    fn locate(&self, t: usize) -> (usize, usize) {
        let mut start = 0usize;
        let mut len = self.cycle_len;
        loop {
            if t < start + len {
                return (t - start, len);
            }
            start += len;
            len = ((len as f64) * self.cycle_mult).round().max(2.0) as usize;
        }
    }

    pub fn lr_at(&self, t: usize) -> f64 {
        let (pos, len) = self.locate(t);
        let phase = pos as f64 / (len - 1) as f64;
        let lr = self.eta_min
            + 0.5 * (self.eta_max - self.eta_min) * (1.0 + (std::f64::consts::PI * phase).cos());
        lr.clamp(self.eta_min, self.eta_max)
    }

    /// True exactly at the last iteration of each cycle, where the rate bottoms out.
    pub fn is_cycle_end(&self, t: usize) -> bool {
        let (pos, len) = self.locate(t);
        pos + 1 == len
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn endpoints_and_midpoint() {
        let s = LrSchedule::new(0.1, 0.001, 11, 1.0).unwrap();
        assert_eq!(s.lr_at(0), 0.1);
        assert!(!s.is_cycle_end(0));
        assert!((s.lr_at(10) - 0.001).abs() < 1e-15);
        assert!(s.is_cycle_end(10));
        assert!((s.lr_at(5) - (0.1 + 0.001) / 2.0).abs() < 1e-15);
        // restart
        assert_eq!(s.lr_at(11), 0.1);
    }

    #[test]
    fn multiplied_cycles() {
        let s = LrSchedule::new(1.0, 0.0, 4, 2.0).unwrap();
        let ends: Vec<usize> = (0..30).filter(|&t| s.is_cycle_end(t)).collect();
        assert_eq!(ends, vec![3, 11, 27]);
        assert_eq!(s.lr_at(4), 1.0);
        assert_eq!(s.lr_at(11), 0.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(LrSchedule::new(0.0, 0.0, 10, 1.0).is_err());
        assert!(LrSchedule::new(0.1, 0.2, 10, 1.0).is_err());
        assert!(LrSchedule::new(0.1, 0.0, 1, 1.0).is_err());
        assert!(LrSchedule::new(0.1, 0.0, 10, 0.5).is_err());
    }

    proptest! {
        #[test]
        fn bounded_periodic_one_boundary_per_cycle(
            eta_max in 0.01f64..1.0, frac in 0.0f64..0.99, len in 2usize..40, t in 0usize..500
        ) {
            let s = LrSchedule::new(eta_max, eta_max * frac, len, 1.0).unwrap();
            let lr = s.lr_at(t);
            prop_assert!(lr >= s.eta_min && lr <= s.eta_max);
            prop_assert_eq!(lr, s.lr_at(t + len));
            let cycle = t / len;
            let fired = (cycle * len..(cycle + 1) * len).filter(|&u| s.is_cycle_end(u)).count();
            prop_assert_eq!(fired, 1);
        }
    }
}
