//! Paired comparison of front-end arms from per-run summaries.
//!
//! A run that timed out has no completion time and has not finished flying,
//! so its end time and distance are only lower bounds on what completion
//! would have taken. Means over such runs are lower bounds too, and an
//! ordering between arms is reported as undetermined when the bounds do not
//! settle it.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use bubble_core::report::{RunSummary, SUMMARY_JSON};
use bubble_core::sim::Completion;
use bubble_core::Result;

/// Every `summary.json` below `dir`, sorted by scenario, front-end and seed.
pub fn load_summaries(dir: &Path) -> Result<Vec<RunSummary>> {
    let mut out = Vec::new();
    collect(dir, &mut out)?;
    out.sort_by(|a, b| (&a.scenario, &a.frontend, a.seed).cmp(&(&b.scenario, &b.frontend, b.seed)));
    Ok(out)
}

fn collect(dir: &Path, out: &mut Vec<RunSummary>) -> Result<()> {
    for e in fs::read_dir(dir)? {
        let p = e?.path();
        if p.is_dir() {
            collect(&p, out)?;
        } else if p.file_name().is_some_and(|n| n == SUMMARY_JSON) {
            out.push(serde_json::from_str(&fs::read_to_string(&p)?)?);
        }
    }
    Ok(())
}

/// Runs grouped by scenario, then front-end.
pub fn by_cell(runs: &[RunSummary]) -> BTreeMap<String, BTreeMap<String, Vec<RunSummary>>> {
    let mut m: BTreeMap<String, BTreeMap<String, Vec<RunSummary>>> = BTreeMap::new();
    for r in runs {
        m.entry(r.scenario.clone()).or_default().entry(r.frontend.clone()).or_default().push(r.clone());
    }
    m
}

/// Mean over runs, where `censored` runs contributed only a lower bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundedMean {
    pub value: f64,
    pub runs: usize,
    pub censored: usize,
}

impl BoundedMean {
    fn of(runs: &[RunSummary], f: impl Fn(&RunSummary) -> f64) -> Self {
        let n = runs.len();
        let value = if n == 0 { f64::NAN } else { runs.iter().map(&f).sum::<f64>() / n as f64 };
        let censored = runs.iter().filter(|r| r.completion != Completion::Completed).count();
        Self { value, runs: n, censored }
    }

    pub fn exact(&self) -> bool {
        self.censored == 0
    }
}

impl std::fmt::Display for BoundedMean {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.exact() {
            write!(f, "{:.2}", self.value)
        } else {
            write!(f, ">={:.2} ({} of {} censored)", self.value, self.censored, self.runs)
        }
    }
}

/// Mean completion time; unfinished runs count with their end time.
pub fn mean_completion_time(runs: &[RunSummary]) -> BoundedMean {
    BoundedMean::of(runs, |r| r.completion_time.unwrap_or(r.end_time))
}

/// Mean flight distance; unfinished runs count with the distance flown so far.
pub fn mean_flight_distance(runs: &[RunSummary]) -> BoundedMean {
    BoundedMean::of(runs, |r| r.flight_distance)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ordering {
    /// `a <= b` holds for the true means.
    Holds,
    /// `a > b` holds for the true means.
    Violated,
    /// The bounds are consistent with either.
    Undetermined,
}

/// Whether the true mean behind `a` is at most the one behind `b`.
pub fn at_most(a: &BoundedMean, b: &BoundedMean) -> Ordering {
    if a.exact() && a.value <= b.value {
        Ordering::Holds
    } else if b.exact() && a.value > b.value {
        Ordering::Violated
    } else {
        Ordering::Undetermined
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bm(value: f64, censored: usize) -> BoundedMean {
        BoundedMean { value, runs: 4, censored }
    }

    #[test]
    fn ordering_under_censoring() {
        assert_eq!(at_most(&bm(1.0, 0), &bm(2.0, 0)), Ordering::Holds);
        assert_eq!(at_most(&bm(2.0, 0), &bm(2.0, 0)), Ordering::Holds);
        assert_eq!(at_most(&bm(3.0, 0), &bm(2.0, 0)), Ordering::Violated);
        // b is only a lower bound: a below it is settled, above it is not
        assert_eq!(at_most(&bm(1.0, 0), &bm(2.0, 2)), Ordering::Holds);
        assert_eq!(at_most(&bm(3.0, 0), &bm(2.0, 2)), Ordering::Undetermined);
        // a is a lower bound: exceeding an exact b is settled
        assert_eq!(at_most(&bm(3.0, 1), &bm(2.0, 0)), Ordering::Violated);
        assert_eq!(at_most(&bm(1.0, 1), &bm(2.0, 0)), Ordering::Undetermined);
    }
}
