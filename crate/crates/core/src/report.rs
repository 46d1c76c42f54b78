//! Verification reports: one named, quantitative pass/fail record per check,
//! serializable to JSON and to a flat CSV summary.

use std::fmt;

use serde::Serialize;

/// How `measured` relates to `bound_or_target`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// Pass ⇔ `measured ≤ bound_or_target + tolerance`.
    UpperBound,
    /// Pass ⇔ `measured ≥ bound_or_target - tolerance` (observed convergence
    /// orders and similar one-sided thresholds).
    LowerBound,
    /// Pass ⇔ `|measured - bound_or_target| ≤ tolerance`.
    Identity,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub check_name: String,
    pub kind: CheckKind,
    pub measured: f64,
    pub bound_or_target: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// Free-form parameters: seeds, grid sizes, the measured/bound ratio.
    pub context: String,
}

impl VerificationReport {
    pub fn upper_bound(
        check_name: impl Into<String>,
        measured: f64,
        bound: f64,
        tolerance: f64,
        context: impl Into<String>,
    ) -> Self {
        Self {
            check_name: check_name.into(),
            kind: CheckKind::UpperBound,
            measured,
            bound_or_target: bound,
            tolerance,
            passed: measured.is_finite() && measured <= bound + tolerance,
            context: context.into(),
        }
    }

    pub fn lower_bound(
        check_name: impl Into<String>,
        measured: f64,
        bound: f64,
        tolerance: f64,
        context: impl Into<String>,
    ) -> Self {
        Self {
            check_name: check_name.into(),
            kind: CheckKind::LowerBound,
            measured,
            bound_or_target: bound,
            tolerance,
            passed: measured.is_finite() && measured >= bound - tolerance,
            context: context.into(),
        }
    }

    pub fn identity(
        check_name: impl Into<String>,
        measured: f64,
        target: f64,
        tolerance: f64,
        context: impl Into<String>,
    ) -> Self {
        Self {
            check_name: check_name.into(),
            kind: CheckKind::Identity,
            measured,
            bound_or_target: target,
            tolerance,
            passed: measured.is_finite() && (measured - target).abs() <= tolerance,
            context: context.into(),
        }
    }

    /// `measured / bound` where meaningful; lets constant drift across
    /// resolutions show up in logs even when everything passes.
    pub fn ratio(&self) -> f64 {
        if self.bound_or_target == 0.0 {
            if self.measured == 0.0 {
                1.0
            } else {
                f64::INFINITY
            }
        } else {
            self.measured / self.bound_or_target
        }
    }

    pub const CSV_HEADER: &'static str = "check_name,measured,bound,tolerance,passed";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.16e},{:.16e},{:.16e},{}",
            self.check_name, self.measured, self.bound_or_target, self.tolerance, self.passed
        )
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rel = match self.kind {
            CheckKind::UpperBound => "<=",
            CheckKind::LowerBound => ">=",
            CheckKind::Identity => "~=",
        };
        write!(
            f,
            "[{}] {}: measured {:.6e} {} {:.6e} (tol {:.1e}){}",
            if self.passed { "PASS" } else { "FAIL" },
            self.check_name,
            self.measured,
            rel,
            self.bound_or_target,
            self.tolerance,
            if self.context.is_empty() {
                String::new()
            } else {
                format!(" [{}]", self.context)
            }
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_fail_semantics() {
        assert!(VerificationReport::upper_bound("u", 1.0, 1.0, 0.0, "").passed);
        assert!(!VerificationReport::upper_bound("u", 1.1, 1.0, 0.05, "").passed);
        assert!(VerificationReport::lower_bound("l", 3.8, 3.7, 0.0, "").passed);
        assert!(!VerificationReport::lower_bound("l", 3.5, 3.7, 0.1, "").passed);
        assert!(VerificationReport::identity("i", 2.05, 2.0, 0.1, "").passed);
        assert!(!VerificationReport::identity("i", f64::NAN, 2.0, 0.1, "").passed);
    }

    #[test]
    fn csv_row_shape() {
        let r = VerificationReport::upper_bound("x", 0.5, 1.0, 0.0, "ctx");
        let row = r.csv_row();
        assert!(row.starts_with("x,"));
        assert!(row.ends_with(",true"));
        assert_eq!(row.split(',').count(), 5);
    }
}
