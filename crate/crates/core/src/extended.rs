use std::cmp::Ordering;
use std::fmt;

/// A real number that may also be one of the two infinities.
///
/// Limit laws of log-likelihood ratios put mass at `+inf` (and the fully
/// informative experiment at `-inf`), so draws are tagged instead of
/// smuggling IEEE infinities through arithmetic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extended {
    NegInf,
    Finite(f64),
    PosInf,
}

impl Extended {
    pub fn is_finite(self) -> bool {
        matches!(self, Extended::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Extended::Finite(x) => Some(x),
            _ => None,
        }
    }

    /// Lossy conversion for printing and plotting.
    pub fn to_f64(self) -> f64 {
        match self {
            Extended::NegInf => f64::NEG_INFINITY,
            Extended::Finite(x) => x,
            Extended::PosInf => f64::INFINITY,
        }
    }

    pub fn total_cmp(&self, other: &Self) -> Ordering {
        use Extended::*;
        match (self, other) {
            (NegInf, NegInf) | (PosInf, PosInf) => Ordering::Equal,
            (NegInf, _) | (_, PosInf) => Ordering::Less,
            (_, NegInf) | (PosInf, _) => Ordering::Greater,
            (Finite(a), Finite(b)) => a.total_cmp(b),
        }
    }

    pub fn gt(self, threshold: f64) -> bool {
        match self {
            Extended::NegInf => false,
            Extended::PosInf => true,
            Extended::Finite(x) => x > threshold,
        }
    }
}

impl From<f64> for Extended {
    fn from(x: f64) -> Self {
        if x == f64::INFINITY {
            Extended::PosInf
        } else if x == f64::NEG_INFINITY {
            Extended::NegInf
        } else {
            Extended::Finite(x)
        }
    }
}

impl fmt::Display for Extended {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extended::NegInf => write!(f, "-inf"),
            Extended::PosInf => write!(f, "+inf"),
            Extended::Finite(x) => write!(f, "{x}"),
        }
    }
}

/// Neumaier's compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl Extend<f64> for CompensatedSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_puts_infinities_at_the_ends() {
        let mut v = vec![
            Extended::PosInf,
            Extended::Finite(1.0),
            Extended::NegInf,
            Extended::Finite(-3.0),
        ];
        v.sort_by(Extended::total_cmp);
        assert_eq!(
            v,
            vec![
                Extended::NegInf,
                Extended::Finite(-3.0),
                Extended::Finite(1.0),
                Extended::PosInf
            ]
        );
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::new();
        s.add(1e16);
        for _ in 0..1000 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 1000.0);
    }
}
