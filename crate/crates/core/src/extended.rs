use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;

/// A value of `]-inf, +inf]` with an explicit `+inf` sentinel.
///
/// Bregman distances are `+inf` off the domain; keeping the infinity explicit
/// means no arithmetic ever produces it by overflow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedReal {
    Finite(f64),
    Infinity,
}

impl ExtendedReal {
    pub const ZERO: ExtendedReal = ExtendedReal::Finite(0.0);

    pub fn is_finite(self) -> bool {
        matches!(self, ExtendedReal::Finite(_))
    }

    pub fn is_infinite(self) -> bool {
        !self.is_finite()
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtendedReal::Finite(v) => Some(v),
            ExtendedReal::Infinity => None,
        }
    }

    /// Lossy conversion, mapping the sentinel to `f64::INFINITY`.
    pub fn to_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    /// `|self - other|` with the convention that two infinities agree and a
    /// single infinity is infinitely far from any finite value.
    pub fn abs_diff(self, other: ExtendedReal) -> ExtendedReal {
        match (self, other) {
            (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => ExtendedReal::Finite((a - b).abs()),
            (ExtendedReal::Infinity, ExtendedReal::Infinity) => ExtendedReal::ZERO,
            _ => ExtendedReal::Infinity,
        }
    }
}

impl From<f64> for ExtendedReal {
    fn from(v: f64) -> Self {
        ExtendedReal::Finite(v)
    }
}

impl Add for ExtendedReal {
    type Output = ExtendedReal;

    fn add(self, rhs: ExtendedReal) -> ExtendedReal {
        match (self, rhs) {
            (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => ExtendedReal::Finite(a + b),
            _ => ExtendedReal::Infinity,
        }
    }
}

impl PartialOrd for ExtendedReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => a.partial_cmp(b),
            (ExtendedReal::Infinity, ExtendedReal::Infinity) => Some(Ordering::Equal),
            (ExtendedReal::Infinity, _) => Some(Ordering::Greater),
            (_, ExtendedReal::Infinity) => Some(Ordering::Less),
        }
    }
}

impl PartialEq<f64> for ExtendedReal {
    fn eq(&self, other: &f64) -> bool {
        self.finite() == Some(*other)
    }
}

impl PartialOrd<f64> for ExtendedReal {
    fn partial_cmp(&self, other: &f64) -> Option<Ordering> {
        self.partial_cmp(&ExtendedReal::Finite(*other))
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::Finite(v) => fmt::Display::fmt(v, f),
            ExtendedReal::Infinity => f.write_str("inf"),
        }
    }
}
