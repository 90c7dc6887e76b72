//! Three-valued verdicts shared by every check.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Outcome {
    Holds,
    Pending,
    Violated,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Holds => 0,
            Outcome::Violated => 1,
            Outcome::Pending => 2,
        }
    }

    /// Worst of two outcomes: violated beats pending beats holds.
    pub fn and(self, other: Outcome) -> Outcome {
        self.max(other)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Holds => "holds",
            Outcome::Pending => "pending",
            Outcome::Violated => "violated",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Tally of instances examined by a check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub check: String,
    pub checked: usize,
    pub met: usize,
    pub pending: usize,
    pub violated: usize,
    /// First unmet instance, rendered for reports.
    pub witness: Option<String>,
    pub notes: Vec<String>,
}

impl Verdict {
    pub fn new(check: impl Into<String>) -> Self {
        Verdict {
            check: check.into(),
            checked: 0,
            met: 0,
            pending: 0,
            violated: 0,
            witness: None,
            notes: Vec::new(),
        }
    }

    pub fn met(&mut self) {
        self.checked += 1;
        self.met += 1;
    }

    /// Record an unmet instance. `certified` means the failure has a finite
    /// certificate (e.g. the chain is declared stable), so it counts as violated.
    pub fn unmet(&mut self, certified: bool, describe: impl FnOnce() -> String) {
        self.checked += 1;
        if certified {
            self.violated += 1;
        } else {
            self.pending += 1;
        }
        if self.witness.is_none() {
            self.witness = Some(describe());
        }
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn outcome(&self) -> Outcome {
        if self.violated > 0 {
            Outcome::Violated
        } else if self.pending > 0 {
            Outcome::Pending
        } else {
            Outcome::Holds
        }
    }

    pub fn absorb(&mut self, other: &Verdict) {
        self.checked += other.checked;
        self.met += other.met;
        self.pending += other.pending;
        self.violated += other.violated;
        if self.witness.is_none() {
            self.witness = other.witness.clone();
        }
    }

    /// `key: value` lines.
    pub fn report(&self) -> String {
        let mut s = format!(
            "check: {}\noutcome: {}\nchecked: {}\nmet: {}\npending: {}\nviolated: {}\n",
            self.check,
            self.outcome(),
            self.checked,
            self.met,
            self.pending,
            self.violated
        );
        if let Some(w) = &self.witness {
            s.push_str(&format!("witness: {w}\n"));
        }
        for n in &self.notes {
            s.push_str(&format!("note: {n}\n"));
        }
        s
    }
}

/// Combined outcome of several verdicts.
pub fn overall<'a>(vs: impl IntoIterator<Item = &'a Verdict>) -> Outcome {
    vs.into_iter()
        .fold(Outcome::Holds, |o, v| o.and(v.outcome()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outcome_ordering_and_codes() {
        assert_eq!(Outcome::Holds.and(Outcome::Pending), Outcome::Pending);
        assert_eq!(Outcome::Violated.and(Outcome::Pending), Outcome::Violated);
        assert_eq!(Outcome::Holds.exit_code(), 0);
        assert_eq!(Outcome::Violated.exit_code(), 1);
        assert_eq!(Outcome::Pending.exit_code(), 2);
    }

    #[test]
    fn tally() {
        let mut v = Verdict::new("x");
        v.met();
        assert_eq!(v.outcome(), Outcome::Holds);
        v.unmet(false, || "a".into());
        assert_eq!(v.outcome(), Outcome::Pending);
        v.unmet(true, || "b".into());
        assert_eq!(v.outcome(), Outcome::Violated);
        assert_eq!(v.witness.as_deref(), Some("a"));
        assert!(v.report().contains("outcome: violated"));
    }
}
