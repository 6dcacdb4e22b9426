//! Worst-case residual bookkeeping for suite assertions.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// Largest residual over the samples, compared with a tolerance.
    Residual,
    /// Number of samples on which a predicate failed; must be zero.
    Violations,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub suite: String,
    pub name: String,
    pub statement: String,
    pub kind: CheckKind,
    pub samples: usize,
    pub worst_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckRecord {
    pub fn line(&self) -> String {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        // names of the form `check:model` get the model appended
        let what = match self.name.split_once(':') {
            Some((_, on)) => format!("{} on {on}", self.statement),
            None => self.statement.clone(),
        };
        match self.kind {
            CheckKind::Residual => format!(
                "[{}] {what}: max |residual| {:.3e} < {:.0e} over {} samples: {verdict}",
                self.suite, self.worst_residual, self.tolerance, self.samples
            ),
            CheckKind::Violations => format!(
                "[{}] {what}: {} violations over {} samples: {verdict}",
                self.suite, self.worst_residual, self.samples
            ),
        }
    }
}

/// Checks in first-recorded order; repeated names accumulate.
#[derive(Debug, Clone, Default)]
pub struct CheckLog {
    records: Vec<CheckRecord>,
}

impl CheckLog {
    pub fn new() -> Self {
        Self::default()
    }

    fn entry(&mut self, suite: &str, name: &str, statement: &str, kind: CheckKind, tolerance: f64) -> &mut CheckRecord {
        let pos = self.records.iter().position(|r| r.suite == suite && r.name == name);
        let i = match pos {
            Some(i) => i,
            None => {
                self.records.push(CheckRecord {
                    suite: suite.into(),
                    name: name.into(),
                    statement: statement.into(),
                    kind,
                    samples: 0,
                    worst_residual: 0.0,
                    tolerance,
                    pass: true,
                });
                self.records.len() - 1
            }
        };
        &mut self.records[i]
    }

    /// Records one residual. NaN counts as a failure.
    pub fn residual(&mut self, suite: &str, name: &str, statement: &str, residual: f64, tolerance: f64) {
        let r = self.entry(suite, name, statement, CheckKind::Residual, tolerance);
        r.samples += 1;
        if residual.is_nan() || residual.abs() > r.worst_residual {
            r.worst_residual = if residual.is_nan() { f64::NAN } else { residual.abs() };
        }
        r.pass = r.pass && residual.abs() < tolerance;
    }

    /// Records many residuals at once, keeping only the worst.
    pub fn residuals(&mut self, suite: &str, name: &str, statement: &str, values: &[f64], tolerance: f64) {
        for &v in values {
            self.residual(suite, name, statement, v, tolerance);
        }
    }

    pub fn holds(&mut self, suite: &str, name: &str, statement: &str, ok: bool) {
        let r = self.entry(suite, name, statement, CheckKind::Violations, 0.0);
        r.samples += 1;
        if !ok {
            r.worst_residual += 1.0;
            r.pass = false;
        }
    }

    pub fn extend(&mut self, other: CheckLog) {
        for o in other.records {
            let r = self.entry(&o.suite, &o.name, &o.statement, o.kind, o.tolerance);
            if r.samples == 0 {
                *r = o;
                continue;
            }
            r.samples += o.samples;
            r.pass = r.pass && o.pass;
            r.worst_residual = match o.kind {
                CheckKind::Residual if o.worst_residual.is_nan() => f64::NAN,
                CheckKind::Residual => r.worst_residual.max(o.worst_residual),
                CheckKind::Violations => r.worst_residual + o.worst_residual,
            };
        }
    }

    pub fn records(&self) -> &[CheckRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<CheckRecord> {
        self.records
    }

    pub fn all_pass(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keeps_worst_and_fails_on_nan() {
        let mut log = CheckLog::new();
        log.residual("s", "a", "a", 1e-12, 1e-10);
        log.residual("s", "a", "a", -3e-11, 1e-10);
        assert_eq!(log.records()[0].worst_residual, 3e-11);
        assert!(log.all_pass());
        log.residual("s", "a", "a", f64::NAN, 1e-10);
        assert!(!log.all_pass());
        assert_eq!(log.records()[0].samples, 3);
    }

    #[test]
    fn merges_violation_counts() {
        let mut a = CheckLog::new();
        a.holds("s", "p", "p", false);
        let mut b = CheckLog::new();
        b.holds("s", "p", "p", true);
        b.holds("s", "p", "p", false);
        a.extend(b);
        let r = &a.records()[0];
        assert_eq!((r.samples, r.worst_residual, r.pass), (3, 2.0, false));
    }
}
