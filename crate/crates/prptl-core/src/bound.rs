//! Time bounds attached to timed operators.
//!
//! A bound `[t1, t2]` restricts the jump width of a timed next or the seam
//! offset of a timed chop. The lower endpoint is always a natural number;
//! the upper endpoint may be the infinite `w` (omega), which stands for "no
//! upper limit". Arithmetic on omega saturates: `w - 1 = w`.

use core::fmt;

/// Upper endpoint of a time bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Upper {
    Finite(u32),
    Omega,
}

impl Upper {
    /// Decrement by one, saturating at omega. Callers must not decrement
    /// `Finite(0)`.
    pub fn pred(self) -> Upper {
        match self {
            Upper::Finite(t) => Upper::Finite(t - 1),
            Upper::Omega => Upper::Omega,
        }
    }

    /// Minimum of the endpoint and a concrete offset.
    pub fn min_with(self, limit: u64) -> u64 {
        match self {
            Upper::Finite(t) => (t as u64).min(limit),
            Upper::Omega => limit,
        }
    }

    pub fn is_omega(self) -> bool {
        matches!(self, Upper::Omega)
    }
}

/// An inclusive time interval `[lower, upper]` with `lower <= upper`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TimeBound {
    pub lower: u32,
    pub upper: Upper,
}

impl TimeBound {
    /// The zero bound `[0,0]`, the default for an unadorned chop.
    pub const ZERO: TimeBound = TimeBound {
        lower: 0,
        upper: Upper::Finite(0),
    };

    /// The unit bound `[1,1]`, the default for an unadorned next.
    pub const UNIT: TimeBound = TimeBound {
        lower: 1,
        upper: Upper::Finite(1),
    };

    /// Build a finite bound; rejects `lower > upper`.
    pub fn new(lower: u32, upper: u32) -> Option<TimeBound> {
        if lower > upper {
            return None;
        }
        Some(TimeBound {
            lower,
            upper: Upper::Finite(upper),
        })
    }

    /// Build a bound with an explicit upper endpoint; rejects empty intervals.
    pub fn with_upper(lower: u32, upper: Upper) -> Option<TimeBound> {
        match upper {
            Upper::Finite(u) if u < lower => None,
            _ => Some(TimeBound { lower, upper }),
        }
    }

    /// The point bound `[t,t]`.
    pub fn point(t: u32) -> TimeBound {
        TimeBound {
            lower: t,
            upper: Upper::Finite(t),
        }
    }

    /// `[lower, w]`.
    pub fn omega_from(lower: u32) -> TimeBound {
        TimeBound {
            lower,
            upper: Upper::Omega,
        }
    }

    /// Shift both endpoints down by one (`w - 1 = w`). Callers must ensure
    /// `lower >= 1`.
    pub fn pred(self) -> TimeBound {
        TimeBound {
            lower: self.lower - 1,
            upper: self.upper.pred(),
        }
    }

    pub fn is_zero(self) -> bool {
        self == TimeBound::ZERO
    }

    pub fn is_unit(self) -> bool {
        self == TimeBound::UNIT
    }

    /// Whether the offset `l` lies inside the bound.
    pub fn contains(self, l: u64) -> bool {
        l >= self.lower as u64
            && match self.upper {
                Upper::Finite(u) => l <= u as u64,
                Upper::Omega => true,
            }
    }

    /// Whether two bounds share at least one offset.
    pub fn overlaps(self, other: TimeBound) -> bool {
        let lo = self.lower.max(other.lower) as u64;
        self.contains(lo) && other.contains(lo)
    }
}

impl fmt::Display for Upper {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Upper::Finite(t) => write!(f, "{t}"),
            Upper::Omega => write!(f, "w"),
        }
    }
}

impl fmt::Display for TimeBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.lower, self.upper)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_puts_omega_last() {
        assert!(Upper::Finite(u32::MAX) < Upper::Omega);
        assert!(TimeBound::new(1, 2).unwrap() < TimeBound::omega_from(1));
    }

    #[test]
    fn pred_saturates_omega() {
        let b = TimeBound::omega_from(3).pred();
        assert_eq!(b, TimeBound::omega_from(2));
        assert_eq!(TimeBound::new(1, 4).unwrap().pred(), TimeBound::new(0, 3).unwrap());
    }

    #[test]
    fn rejects_empty_interval() {
        assert!(TimeBound::new(3, 2).is_none());
        assert!(TimeBound::with_upper(1, Upper::Finite(0)).is_none());
        assert!(TimeBound::with_upper(5, Upper::Omega).is_some());
    }

    #[test]
    fn overlap_is_symmetric_on_samples() {
        let a = TimeBound::new(1, 3).unwrap();
        let b = TimeBound::new(3, 5).unwrap();
        let c = TimeBound::new(4, 6).unwrap();
        assert!(a.overlaps(b) && b.overlaps(a));
        assert!(!a.overlaps(c) && !c.overlaps(a));
        assert!(TimeBound::omega_from(2).overlaps(c));
    }
}
