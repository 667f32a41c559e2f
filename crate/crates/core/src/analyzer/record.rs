use crate::scalar::Real;

/// Denominators below this are reported as degenerate, never pass/fail.
pub const DEGENERATE_DENOMINATOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordStatus {
    Pass,
    Fail,
    Degenerate,
    /// Reported for information; never fails a run.
    Estimate,
}

impl RecordStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Pass => "pass",
            Self::Fail => "fail",
            Self::Degenerate => "degenerate",
            Self::Estimate => "estimate",
        }
    }
}

/// `lhs ≤ rhs(C)` with `rhs(C) = C^power · rhs_unit + C² · rhs_square`,
/// non-decreasing in `C`.
#[derive(Debug, Clone, PartialEq)]
pub struct InequalityRecord<S> {
    pub name: String,
    pub center: [S; 2],
    pub radius: S,
    pub lhs: S,
    pub rhs_unit: S,
    pub rhs_square: S,
    pub power: S,
    /// Named pieces of the right-hand side, for the report.
    pub rhs_terms: Vec<(String, S)>,
    pub estimated_c: S,
    /// Largest admissible constant.
    pub cap: S,
    pub status: RecordStatus,
}

impl<S: Real> InequalityRecord<S> {
    /// Builds a record and estimates its constant; `cap` decides pass/fail.
    pub fn new(name: impl Into<String>, center: [S; 2], radius: S, lhs: S, rhs_unit: S, power: S, cap: S) -> Self {
        Self::with_square(name, center, radius, lhs, rhs_unit, S::zero(), power, cap)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn with_square(
        name: impl Into<String>,
        center: [S; 2],
        radius: S,
        lhs: S,
        rhs_unit: S,
        rhs_square: S,
        power: S,
        cap: S,
    ) -> Self {
        let mut r = Self {
            name: name.into(),
            center,
            radius,
            lhs,
            rhs_unit,
            rhs_square,
            power,
            rhs_terms: Vec::new(),
            estimated_c: S::nan(),
            cap,
            status: RecordStatus::Degenerate,
        };
        r.estimate();
        r
    }

    pub fn with_terms(mut self, terms: Vec<(String, S)>) -> Self {
        self.rhs_terms = terms;
        self
    }

    /// Marks the record as informational.
    pub fn estimate_only(mut self) -> Self {
        if self.status != RecordStatus::Degenerate {
            self.status = RecordStatus::Estimate;
        }
        self
    }

    pub fn rhs_at(&self, c: S) -> S {
        c.powf(self.power) * self.rhs_unit + c * c * self.rhs_square
    }

    /// Right-hand side at the estimated constant.
    pub fn rhs(&self) -> S {
        if self.estimated_c.is_finite() {
            self.rhs_at(self.estimated_c)
        } else {
            S::infinity()
        }
    }

    /// Whether the inequality holds with constant `c` (relative slack 1e-12).
    pub fn holds_with(&self, c: S) -> bool {
        if self.status == RecordStatus::Degenerate {
            return false;
        }
        self.lhs <= self.rhs_at(c) * (S::one() + S::lit(1e-12)) + S::lit(1e-300)
    }

    pub fn is_failure(&self) -> bool {
        self.status == RecordStatus::Fail
    }

    fn estimate(&mut self) {
        let tiny = S::lit(DEGENERATE_DENOMINATOR);
        let (lhs, unit, sq, p) = (self.lhs, self.rhs_unit, self.rhs_square, self.power);
        if !lhs.is_finite() || !unit.is_finite() || !sq.is_finite() {
            self.status = RecordStatus::Degenerate;
            return;
        }
        let c = if lhs <= S::zero() {
            S::zero()
        } else if sq == S::zero() {
            if unit < tiny {
                self.status = RecordStatus::Degenerate;
                return;
            }
            (lhs / unit).powf(S::one() / p)
        } else if p == S::one() {
            (-unit + (unit * unit + S::lit(4.0) * sq * lhs).sqrt()) / (S::lit(2.0) * sq)
        } else {
            bisect(|c| c.powf(p) * unit + c * c * sq, lhs)
        };
        self.estimated_c = c;
        self.status = if c.is_finite() && c <= self.cap {
            RecordStatus::Pass
        } else {
            RecordStatus::Fail
        };
    }
}

/// Smallest `c ≥ 0` with `f(c) ≥ target` for non-decreasing `f`.
fn bisect<S: Real>(f: impl Fn(S) -> S, target: S) -> S {
    let mut hi = S::one();
    while f(hi) < target {
        hi = hi * S::lit(2.0);
        if !hi.is_finite() {
            return S::infinity();
        }
    }
    let mut lo = S::zero();
    for _ in 0..200 {
        let mid = (lo + hi) / S::lit(2.0);
        if f(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_constant() {
        let r = InequalityRecord::new("x", [0.0; 2], 1.0, 6.0, 2.0, 1.0, 10.0);
        assert_eq!(r.estimated_c, 3.0);
        assert_eq!(r.status, RecordStatus::Pass);
        assert!(r.holds_with(3.0) && r.holds_with(6.0) && !r.holds_with(2.9));
    }

    #[test]
    fn power_and_square_forms() {
        let r = InequalityRecord::<f64>::new("p", [0.0; 2], 1.0, 8.0, 1.0, 3.0, 10.0);
        assert!((r.estimated_c - 2.0).abs() < 1e-12);
        // X ≤ C m + C²: X = 6, m = 1 → C = 2
        let q = InequalityRecord::<f64>::with_square("q", [0.0; 2], 1.0, 6.0, 1.0, 1.0, 1.0, 10.0);
        assert!((q.estimated_c - 2.0).abs() < 1e-12);
        let b = InequalityRecord::<f64>::with_square("b", [0.0; 2], 1.0, 6.0, 1.0, 1.0, 2.0, 10.0);
        assert!((b.rhs_at(b.estimated_c) - 6.0).abs() < 1e-9);
        assert!(b.holds_with(2.0 * b.estimated_c));
    }

    #[test]
    fn guards_and_caps() {
        let d = InequalityRecord::new("d", [0.0; 2], 1.0, 1.0, 1e-15, 1.0, 10.0);
        assert_eq!(d.status, RecordStatus::Degenerate);
        let z = InequalityRecord::new("z", [0.0; 2], 1.0, 0.0, 0.0, 1.0, 10.0);
        assert_eq!((z.estimated_c, z.status), (0.0, RecordStatus::Pass));
        let f = InequalityRecord::new("f", [0.0; 2], 1.0, 100.0, 1.0, 1.0, 10.0);
        assert_eq!(f.status, RecordStatus::Fail);
        assert_eq!(f.clone().estimate_only().status, RecordStatus::Estimate);
    }
}
