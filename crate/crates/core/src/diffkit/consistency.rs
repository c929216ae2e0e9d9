use tracing::warn;

use super::lcs::{line_diff, split_lines};

/// Share of the fixed program made of preserved buggy lines:
/// `(k - a) / (k + (b - a))` with `k` the buggy line count and `a`, `b` the
/// deleted and added counts. The denominator is the fixed line count.
pub fn consistency(buggy: &str, fixed: &str) -> f64 {
    let fixed_len = split_lines(fixed).len();
    if fixed_len == 0 {
        warn!("consistency requested for an empty fixed program; scoring 0");
        return 0.0;
    }
    let diff = line_diff(buggy, fixed);
    let k = split_lines(buggy).len();
    let preserved = k - diff.deleted;
    let denominator = k + diff.added - diff.deleted;
    assert_eq!(denominator, fixed_len, "edit script does not cover the fixed program");
    preserved as f64 / denominator as f64
}

/// Consistency as reported in evaluation: a verbatim copy of the buggy code
/// is not a repair and scores 0.
pub fn consistency_reported(buggy: &str, fixed: &str) -> f64 {
    if line_diff(buggy, fixed).is_identity() {
        return 0.0;
    }
    consistency(buggy, fixed)
}
