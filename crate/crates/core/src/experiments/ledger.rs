use serde::{Deserialize, Serialize};

/// Hard entries are exact invariants; log entries record how far a
/// quasi-inequality is from holding literally.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Check {
    Hard,
    Log,
}

/// Whether `lhs`/`rhs` are counts (slack `log_{1/δ}(lhs/rhs)`) or exponents
/// (slack `lhs − rhs`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Count,
    Exponent,
}

/// One step `lhs ≤ rhs` of an inequality chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub name: String,
    pub relation: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: Option<f64>,
    pub slack: Option<f64>,
    pub check: Check,
    pub measure: Measure,
    /// For hard entries the exact verdict; for log entries whether the
    /// inequality holds without any hidden factor.
    pub holds: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Ledger {
    pub m: u32,
    pub entries: Vec<LedgerEntry>,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl Ledger {
    pub fn new(m: u32) -> Self {
        Self { m, entries: Vec::new() }
    }

    /// An exact invariant whose verdict `holds` was decided by the caller.
    pub fn hard(&mut self, name: &str, relation: &str, lhs: f64, rhs: f64, holds: bool) {
        let ratio = finite(lhs / rhs);
        self.entries.push(LedgerEntry {
            name: name.into(),
            relation: relation.into(),
            lhs,
            rhs,
            ratio,
            slack: ratio.filter(|r| *r > 0.0).map(|r| r.log2() / self.m as f64),
            check: Check::Hard,
            measure: Measure::Count,
            holds,
        });
    }

    /// A hard invariant that is a plain predicate.
    pub fn hard_flag(&mut self, name: &str, relation: &str, holds: bool) {
        self.hard(name, relation, f64::from(u8::from(!holds)), 0.0, holds);
        let e = self.entries.last_mut().unwrap();
        e.ratio = None;
        e.slack = None;
    }

    /// A count quasi-inequality given by `log₂` of both sides.
    pub fn log_count(&mut self, name: &str, relation: &str, lhs_log2: f64, rhs_log2: f64) {
        let slack = finite((lhs_log2 - rhs_log2) / self.m as f64);
        self.entries.push(LedgerEntry {
            name: name.into(),
            relation: relation.into(),
            lhs: lhs_log2.exp2(),
            rhs: rhs_log2.exp2(),
            ratio: finite((lhs_log2 - rhs_log2).exp2()),
            slack,
            check: Check::Log,
            measure: Measure::Count,
            holds: lhs_log2 <= rhs_log2,
        });
    }

    /// An exponent inequality `lhs ≤ rhs`.
    pub fn log_exponent(&mut self, name: &str, relation: &str, lhs: f64, rhs: f64) {
        self.entries.push(LedgerEntry {
            name: name.into(),
            relation: relation.into(),
            lhs,
            rhs,
            ratio: finite(lhs / rhs),
            slack: finite(lhs - rhs),
            check: Check::Log,
            measure: Measure::Exponent,
            holds: lhs <= rhs,
        });
    }

    pub fn hard_failures(&self) -> impl Iterator<Item = &LedgerEntry> {
        self.entries.iter().filter(|e| e.check == Check::Hard && !e.holds)
    }

    pub fn all_hard_pass(&self) -> bool {
        self.hard_failures().next().is_none()
    }

    pub fn log_entries(&self) -> impl Iterator<Item = &LedgerEntry> {
        self.entries.iter().filter(|e| e.check == Check::Log)
    }

    /// Largest slack over log entries; an entry that fails without a finite
    /// slack (a side is zero) counts as infinite.
    pub fn max_log_slack(&self) -> Option<f64> {
        self.log_entries()
            .filter_map(|e| e.slack.or((!e.holds).then_some(f64::INFINITY)))
            .fold(None, |acc, s| Some(acc.map_or(s, |a: f64| a.max(s))))
    }

    pub fn get(&self, name: &str) -> Option<&LedgerEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,relation,lhs,rhs,ratio,slack,check,measure,holds\n");
        let opt = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:e}"));
        for e in &self.entries {
            out.push_str(&format!(
                "{},\"{}\",{:e},{:e},{},{},{},{},{}\n",
                e.name,
                e.relation.replace('"', "'"),
                e.lhs,
                e.rhs,
                opt(e.ratio),
                opt(e.slack),
                match e.check {
                    Check::Hard => "hard",
                    Check::Log => "log",
                },
                match e.measure {
                    Measure::Count => "count",
                    Measure::Exponent => "exponent",
                },
                e.holds
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slack_conventions() {
        let mut l = Ledger::new(10);
        l.log_count("c", "x <= y", 12.0, 10.0);
        l.log_exponent("e", "a <= b", 0.7, 0.5);
        l.hard("h", "p <= q", 3.0, 4.0, true);
        l.hard_flag("f", "uniform", false);
        assert!((l.entries[0].slack.unwrap() - 0.2).abs() < 1e-12);
        assert!((l.entries[1].slack.unwrap() - 0.2).abs() < 1e-12);
        assert!(!l.entries[0].holds);
        assert!(!l.all_hard_pass());
        assert_eq!(l.hard_failures().count(), 1);
        assert!((l.max_log_slack().unwrap() - 0.2).abs() < 1e-12);
        assert_eq!(l.to_csv().lines().count(), 5);
    }
}
