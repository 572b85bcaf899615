//! Evaluation of identities at random rational points, with pole resampling.
//!
//! An identity between rational functions is checked by exact evaluation at
//! several independent random points. A sample that lands on a pole is
//! discarded and redrawn; it never counts as a failure.

use std::fmt;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::exactnum::{sample_point, ExactScalar, Field, ParamPoint};
use crate::linalg::Matrix;

/// How many points to evaluate and how large the sampled numerators and denominators are.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    pub points: usize,
    pub bound: u32,
    pub seed: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { points: 3, bound: 20, seed: 1 }
    }
}

impl Budget {
    pub fn with_seed(seed: u64) -> Self {
        Budget { seed, ..Budget::default() }
    }
}

/// Perturbation of a single entry of one operator (or one term) on the left-hand side.
#[derive(Clone, Debug, PartialEq)]
pub struct Tamper {
    pub row: usize,
    pub col: usize,
    pub delta: ExactScalar,
}

impl Tamper {
    pub fn apply<F: Field>(t: Option<&Tamper>, m: Matrix<F>) -> Matrix<F> {
        match t {
            Some(t) => m.tampered(t.row, t.col, &F::from_scalar(&t.delta)),
            None => m,
        }
    }

    pub fn apply_scalar<F: Field>(t: Option<&Tamper>, ordinal: usize, v: F) -> F {
        match t {
            Some(t) if t.row == ordinal => v + &F::from_scalar(&t.delta),
            _ => v,
        }
    }
}

/// Location and values of the first mismatch.
#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    pub indices: Vec<usize>,
    pub detail: String,
    pub lhs: String,
    pub rhs: String,
}

impl Witness {
    pub fn new(indices: Vec<usize>, detail: impl Into<String>, lhs: impl fmt::Display, rhs: impl fmt::Display) -> Self {
        Witness { indices, detail: detail.into(), lhs: lhs.to_string(), rhs: rhs.to_string() }
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {:?}: lhs {} != rhs {}", self.detail, self.indices, self.lhs, self.rhs)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// Too many samples hit poles to reach the point budget.
    Inconclusive,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Clone, Debug)]
pub struct CheckRecord {
    pub id: String,
    pub params: Vec<(String, String)>,
    pub status: Status,
    pub points_passed: usize,
    pub points_tried: usize,
    pub poles_resampled: usize,
    pub witness: Option<Witness>,
    /// The point at which the witness was found.
    pub failing_point: Option<ParamPoint>,
    pub seed: u64,
    pub elapsed: Duration,
    pub note: Option<String>,
}

impl CheckRecord {
    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

impl fmt::Display for CheckRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}] {} ({}/{} points, {} resampled)", self.status, self.id,
            self.params.iter().map(|(k, v)| format!("{}={}", k, v)).collect::<Vec<_>>().join(" "),
            self.points_passed, self.points_tried, self.poles_resampled)?;
        if let Some(w) = &self.witness {
            write!(f, "; {}", w)?;
            if let Some(p) = &self.failing_point {
                write!(f, " at {}", p)?;
            }
        }
        if let Some(n) = &self.note {
            write!(f, "; {}", n)?;
        }
        Ok(())
    }
}

/// Outcome of one evaluation: `None` when both sides agree.
pub type Eval = Result<Option<Witness>>;

/// Seed of the `attempt`-th draw of a check.
pub fn attempt_seed(seed: u64, attempt: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(attempt as u64)
}

/// Evaluates `f` at `budget.points` random points over `symbols`, resampling on poles.
///
/// Stops at the first failing point. Errors that are not sampling accidents
/// are reported as failures with the error text as witness.
pub fn run_check(
    id: &str,
    params: Vec<(String, String)>,
    symbols: &[&str],
    budget: &Budget,
    f: impl Fn(&ParamPoint) -> Eval,
) -> CheckRecord {
    let start = Instant::now();
    let mut rec = CheckRecord {
        id: id.to_string(),
        params,
        status: Status::Pass,
        points_passed: 0,
        points_tried: 0,
        poles_resampled: 0,
        witness: None,
        failing_point: None,
        seed: budget.seed,
        elapsed: Duration::ZERO,
        note: None,
    };
    let max_attempts = budget.points * 20 + 20;
    let mut attempt = 0;
    while rec.points_passed < budget.points {
        if attempt == max_attempts {
            rec.status = Status::Inconclusive;
            break;
        }
        let p = sample_point(symbols, attempt_seed(budget.seed, attempt), budget.bound);
        attempt += 1;
        rec.points_tried += 1;
        match f(&p) {
            Ok(None) => rec.points_passed += 1,
            Ok(Some(w)) => {
                rec.status = Status::Fail;
                rec.witness = Some(w);
                rec.failing_point = Some(p);
                break;
            }
            Err(e) if e.is_resamplable() => rec.poles_resampled += 1,
            Err(e) => {
                rec.status = Status::Fail;
                rec.witness = Some(Witness::new(vec![], format!("error: {}", e), "-", "-"));
                rec.failing_point = Some(p);
                break;
            }
        }
    }
    rec.elapsed = start.elapsed();
    rec
}

/// Runs a check that has no free parameters.
pub fn run_fixed(id: &str, params: Vec<(String, String)>, f: impl FnOnce() -> Eval) -> CheckRecord {
    let start = Instant::now();
    let (status, witness) = match f() {
        Ok(None) => (Status::Pass, None),
        Ok(Some(w)) => (Status::Fail, Some(w)),
        Err(e) if e.is_resamplable() => (Status::Inconclusive, None),
        Err(e) => (Status::Fail, Some(Witness::new(vec![], format!("error: {}", e), "-", "-"))),
    };
    CheckRecord {
        id: id.to_string(),
        params,
        status,
        points_passed: usize::from(status == Status::Pass),
        points_tried: 1,
        poles_resampled: 0,
        witness,
        failing_point: None,
        seed: 0,
        elapsed: start.elapsed(),
        note: None,
    }
}

/// `None` if equal, otherwise the first differing entry.
pub fn compare<F: Field + fmt::Debug>(what: &str, lhs: &Matrix<F>, rhs: &Matrix<F>) -> Option<Witness> {
    if (lhs.rows(), lhs.cols()) != (rhs.rows(), rhs.cols()) {
        return Some(Witness::new(vec![], format!("{}: shape mismatch", what),
            format!("{}x{}", lhs.rows(), lhs.cols()), format!("{}x{}", rhs.rows(), rhs.cols())));
    }
    lhs.first_difference(rhs).map(|(r, c)| {
        Witness::new(vec![r, c], what, format!("{:?}", lhs.get(r, c)), format!("{:?}", rhs.get(r, c)))
    })
}

/// `None` if equal, otherwise a witness naming `indices`.
pub fn compare_scalar<F: Field + fmt::Debug>(what: &str, indices: Vec<usize>, lhs: &F, rhs: &F) -> Option<Witness> {
    if lhs == rhs {
        None
    } else {
        Some(Witness::new(indices, what, format!("{:?}", lhs), format!("{:?}", rhs)))
    }
}

/// Key-value list for report parameters.
pub fn params(kv: &[(&str, String)]) -> Vec<(String, String)> {
    kv.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

/// Fetches a bound symbol as any field type.
pub fn sym<F: Field>(p: &ParamPoint, name: &str) -> Result<F> {
    Ok(F::from_scalar(p.get(name).map_err(Error::Num)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::NumError;

    #[test]
    fn pass_resample_and_fail() {
        let b = Budget::default();
        let ok = run_check("ok", vec![], &["x"], &b, |_| Ok(None));
        assert_eq!(ok.status, Status::Pass);
        assert_eq!(ok.points_passed, 3);

        let flaky = std::cell::Cell::new(0);
        let rec = run_check("flaky", vec![], &["x"], &b, |_| {
            flaky.set(flaky.get() + 1);
            if flaky.get() % 2 == 0 {
                Err(Error::Num(NumError::PoleEncountered))
            } else {
                Ok(None)
            }
        });
        assert_eq!(rec.status, Status::Pass);
        assert_eq!(rec.poles_resampled, 2);

        let always_pole = run_check("pole", vec![], &["x"], &b, |_| Err(Error::Num(NumError::PoleEncountered)));
        assert_eq!(always_pole.status, Status::Inconclusive);

        let bad = run_check("bad", vec![], &["x"], &b, |_| Ok(Some(Witness::new(vec![1, 2], "x", 1, 2))));
        assert_eq!(bad.status, Status::Fail);
        assert_eq!(bad.witness.unwrap().indices, vec![1, 2]);
        assert!(bad.failing_point.is_some());
    }
}
