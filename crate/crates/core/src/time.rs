use std::fmt;
use std::ops::{Add, Sub};

use crate::error::{Error, Result};

/// Ticks per simulated time unit. Integer ticks keep every sum exact.
pub const TICKS_PER_UNIT: u64 = 1_000_000;

/// A point (or span) of simulated time, stored as integer ticks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SimTime(u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);
    pub const MAX: SimTime = SimTime(u64::MAX);

    pub const fn from_ticks(ticks: u64) -> Self {
        SimTime(ticks)
    }

    pub const fn ticks(self) -> u64 {
        self.0
    }

    /// Converts from time units, rounding to the nearest tick.
    pub fn from_units(units: f64) -> Result<Self> {
        if !units.is_finite() || units < 0.0 || units * TICKS_PER_UNIT as f64 >= u64::MAX as f64 {
            return Err(Error::Time(units));
        }
        Ok(SimTime((units * TICKS_PER_UNIT as f64).round() as u64))
    }

    pub fn as_units(self) -> f64 {
        self.0 as f64 / TICKS_PER_UNIT as f64
    }

    pub fn saturating_sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(rhs.0))
    }
}

impl Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl Sub for SimTime {
    type Output = SimTime;
    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 - rhs.0)
    }
}

impl std::ops::Mul<u64> for SimTime {
    type Output = SimTime;
    fn mul(self, rhs: u64) -> SimTime {
        SimTime(self.0 * rhs)
    }
}

impl fmt::Display for SimTime {
    /// Exact decimal rendering with trailing zeros trimmed, e.g. `1.5`, `4.0`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let whole = self.0 / TICKS_PER_UNIT;
        let frac = self.0 % TICKS_PER_UNIT;
        if frac == 0 {
            return write!(f, "{whole}.0");
        }
        let digits = format!("{frac:06}");
        write!(f, "{whole}.{}", digits.trim_end_matches('0'))
    }
}
