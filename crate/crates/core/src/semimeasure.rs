//! Monotone rational approximant streams for sub-probability mass
//! functions on binary strings, and the two conversions between such
//! streams and increasing rational sequences.
//!
//! A stream is evaluated at `(stage n, string s)` and only ever grows in
//! `n`; finite partial sums stay below one. Limits are never computed:
//! every consumer works with the certified stage values.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::machine::{Enumerator, Word};
use crate::rational::{pow2, ratio_to_string};

type EvalFn = dyn Fn(u64, u64) -> BigRational + Send + Sync;

/// A stage-indexed family `(n, s) -> rational`, nondecreasing in `n`, with
/// memoized evaluation so repeated queries are consistent and cheap.
#[derive(Clone)]
pub struct SemiMeasureStream {
    descriptor: String,
    eval_fn: Arc<EvalFn>,
    memo: Arc<Mutex<BTreeMap<(u64, u64), BigRational>>>,
}

impl SemiMeasureStream {
    pub fn from_fn(
        descriptor: impl Into<String>,
        f: impl Fn(u64, u64) -> BigRational + Send + Sync + 'static,
    ) -> Self {
        SemiMeasureStream {
            descriptor: descriptor.into(),
            eval_fn: Arc::new(f),
            memo: Arc::new(Mutex::new(BTreeMap::new())),
        }
    }

    /// Program-mass stream of a machine: the total weight of discovered
    /// programs printing `s`.
    pub fn from_pv(enumerator: Arc<Enumerator>) -> Self {
        let name = format!("pv:{}", enumerator.machine_name());
        Self::from_fn(name, move |n, s| {
            enumerator.pv_lower(n, &Word::from_index(s))
        })
    }

    /// Shortest-program stream of a machine: `2^-len` for the shortest
    /// discovered program printing `s`, else zero.
    pub fn from_complexity(enumerator: Arc<Enumerator>) -> Self {
        let name = format!("complexity:{}", enumerator.machine_name());
        Self::from_fn(name, move |n, s| {
            match enumerator.complexity_upper(n, &Word::from_index(s)) {
                Some(len) => pow2(-(len as i64)),
                None => BigRational::zero(),
            }
        })
    }

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    pub fn eval(&self, n: u64, s: u64) -> BigRational {
        assert!(n >= 1 && s >= 1);
        if let Some(v) = self.memo.lock().unwrap().get(&(n, s)) {
            return v.clone();
        }
        let v = (self.eval_fn)(n, s);
        self.memo
            .lock()
            .unwrap()
            .insert((n, s), v.clone());
        v
    }

    pub fn eval_word(&self, n: u64, s: &Word) -> BigRational {
        self.eval(n, s.index())
    }

    /// Partial mass `sum_{s=1}^{m} eval(n, s)`.
    pub fn partial_mass(&self, n: u64, m: u64) -> BigRational {
        (1..=m).map(|s| self.eval(n, s)).sum()
    }

    /// CSV export: rows `(n, s-as-integer, s-as-bits, value-num, value-den)`.
    pub fn export_csv(&self, stages: u64) -> String {
        let mut out = String::from("n,s,s_bits,value_num,value_den\n");
        for n in 1..=stages {
            for s in 1..=stages {
                let v = self.eval(n, s);
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    n,
                    s,
                    Word::from_index(s),
                    v.numer(),
                    v.denom()
                ));
            }
        }
        out
    }
}

/// One invariant failure with its witness.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SemiMeasureViolation {
    Negative { n: u64, s: u64, value: String },
    NotMonotone { n: u64, s: u64, at_n: String, at_next: String },
    MassExceeded { n: u64, mass: String },
}

/// Validator outcome; an empty violation list certifies the checked grid.
#[derive(Clone, Debug)]
pub struct SemiMeasureReport {
    pub descriptor: String,
    pub depth: u64,
    pub violations: Vec<SemiMeasureViolation>,
}

impl SemiMeasureReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks nonnegativity and stage monotonicity for all `n <= depth`,
/// `s <= depth`, and the partial-mass bound `sum_{s<=n} eval(n,s) <= 1`
/// for all `n <= depth`.
pub fn validate_semimeasure(stream: &SemiMeasureStream, depth: u64) -> SemiMeasureReport {
    assert!(depth >= 1);
    let mut violations = Vec::new();
    for s in 1..=depth {
        for n in 1..=depth {
            let v = stream.eval(n, s);
            if v.is_negative() {
                violations.push(SemiMeasureViolation::Negative {
                    n,
                    s,
                    value: ratio_to_string(&v),
                });
            }
            if n < depth {
                let next = stream.eval(n + 1, s);
                if next < v {
                    violations.push(SemiMeasureViolation::NotMonotone {
                        n,
                        s,
                        at_n: ratio_to_string(&v),
                        at_next: ratio_to_string(&next),
                    });
                }
            }
        }
    }
    for n in 1..=depth {
        let mass = stream.partial_mass(n, n);
        if mass > BigRational::one() {
            violations.push(SemiMeasureViolation::MassExceeded {
                n,
                mass: ratio_to_string(&mass),
            });
        }
    }
    SemiMeasureReport {
        descriptor: stream.descriptor().to_string(),
        depth,
        violations,
    }
}

type SeqFn = dyn Fn(u64) -> BigRational + Send + Sync;

/// A memoized nondecreasing rational sequence.
#[derive(Clone)]
pub struct IncreasingSequence {
    eval_fn: Arc<SeqFn>,
    memo: Arc<Mutex<BTreeMap<u64, BigRational>>>,
}

impl IncreasingSequence {
    pub fn from_fn(f: impl Fn(u64) -> BigRational + Send + Sync + 'static) -> Self {
        IncreasingSequence {
            eval_fn: Arc::new(f),
            memo: Arc::new(Mutex::new(BTreeMap::new())),
        }
    }

    /// The halting-mass bounds of a machine enumeration.
    pub fn from_omega(enumerator: Arc<Enumerator>) -> Self {
        Self::from_fn(move |n| enumerator.omega_lower(n))
    }

    pub fn eval(&self, n: u64) -> BigRational {
        assert!(n >= 1);
        if let Some(v) = self.memo.lock().unwrap().get(&n) {
            return v.clone();
        }
        let v = (self.eval_fn)(n);
        self.memo.lock().unwrap().insert(n, v.clone());
        v
    }
}

/// Diagonal partial sums `a_n = sum_{s=1}^{n} eval(n, s)` of a valid
/// stream: nondecreasing and bounded by one.
pub fn to_increasing_sequence(stream: &SemiMeasureStream) -> IncreasingSequence {
    let stream = stream.clone();
    IncreasingSequence::from_fn(move |n| stream.partial_mass(n, n))
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConversionError {
    #[error("sequence decreases at n={n}")]
    NotIncreasing { n: u64 },
    #[error("partial mass {mass} exceeds 1 at s={s}; divisor too small")]
    MassExceeded { s: u64, mass: String },
}

/// Converts an increasing sequence into a stage-constant stream:
/// `r(1) = 0`, `r(s) = (b_s - b_{s-1}) / d`.
///
/// The divisor `d` is caller-warranted to cover the sequence's total rise;
/// partial sums up to `check_to` are verified and `MassExceeded` signals a
/// bad divisor.
pub fn from_increasing_sequence(
    seq: &IncreasingSequence,
    d: u64,
    check_to: u64,
) -> Result<SemiMeasureStream, ConversionError> {
    assert!(d >= 1);
    let div = BigRational::from_integer(d.into());
    let mut mass = BigRational::zero();
    for s in 2..=check_to {
        let step = seq.eval(s) - seq.eval(s - 1);
        if step.is_negative() {
            return Err(ConversionError::NotIncreasing { n: s });
        }
        mass += step / &div;
        if mass > BigRational::one() {
            return Err(ConversionError::MassExceeded {
                s,
                mass: ratio_to_string(&mass),
            });
        }
    }
    let seq = seq.clone();
    Ok(SemiMeasureStream::from_fn(
        format!("converted:d={d}"),
        move |_n, s| {
            if s == 1 {
                BigRational::zero()
            } else {
                (seq.eval(s) - seq.eval(s - 1)) / &div
            }
        },
    ))
}

/// One domination query: did some stage `n' <= budget` certify
/// `c * r(n, s) <= m(n', s)`?
#[derive(Clone, Debug)]
pub struct DominationEntry {
    pub n: u64,
    pub s: u64,
    pub found_at: Option<u64>,
}

#[derive(Clone, Debug)]
pub struct DominationReport {
    pub constant: String,
    pub entries: Vec<DominationEntry>,
}

impl DominationReport {
    pub fn all_found(&self) -> bool {
        self.entries.iter().all(|e| e.found_at.is_some())
    }

    pub fn unresolved(&self) -> usize {
        self.entries.iter().filter(|e| e.found_at.is_none()).count()
    }
}

/// Searches finite-stage certificates for `c * r <= m`. A found entry is a
/// proof (stage values only ever grow toward the target); an unresolved
/// entry is not a refutation, just a budget miss.
pub fn corroborate_domination(
    m: &SemiMeasureStream,
    r: &SemiMeasureStream,
    c: &BigRational,
    budget: u64,
) -> DominationReport {
    assert!(c.is_positive());
    let mut entries = Vec::new();
    for n in 1..=budget {
        for s in 1..=budget {
            let target = c * r.eval(n, s);
            let found_at = (1..=budget).find(|&np| m.eval(np, s) >= target);
            entries.push(DominationEntry { n, s, found_at });
        }
    }
    DominationReport {
        constant: ratio_to_string(c),
        entries,
    }
}
