//! Stage-indexed streams of positive rational operators approximating a
//! sub-normalized operator-valued measurement from below, their validator,
//! transformers, and finite-stage measurement statistics with exact
//! sampling.
//!
//! The stage contract is the slack schedule
//! `f(n,s) - 2^-n I <= f(n+1,s) - 2^-(n+1) I` (Loewner); streams marked
//! *guarded* are monotone with no slack at all and keep their partial sums
//! below the identity, which is what the dovetailed constructions deliver.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};
use thiserror::Error;

use crate::json::{ratio_to_json, state_to_json};
use crate::linalg::block::BlockScalarOperator;
use crate::linalg::complex::RationalComplex;
use crate::linalg::hermitian::RationalHermitian;
use crate::linalg::state::StateVector;
use crate::machine::Word;
use crate::rational::{pow2, rint};
use crate::rng::sample_index;
use crate::semimeasure::SemiMeasureStream;

type OpFn = dyn Fn(u64, u64) -> BlockScalarOperator + Send + Sync;
type BoundFn = dyn Fn(u64, u64) -> u64 + Send + Sync;
type EntryTableFn = dyn Fn(u64) -> Vec<(usize, usize, RationalComplex)> + Send + Sync;
type NormFn = dyn Fn(u64) -> BigRational + Send + Sync;

/// Provenance and contract flags for a stream.
#[derive(Clone, Debug)]
pub struct StreamDescriptor {
    pub name: String,
    /// Monotone without slack and mass-bounded (`sum_{s<=n} f(n,s) <= I`).
    pub guarded: bool,
}

/// A stage-indexed family `(n, s) -> positive operator` with zero tail,
/// under the slack schedule, memoized per `(n, s)`.
#[derive(Clone)]
pub struct SemiPovmStream {
    descriptor: StreamDescriptor,
    eval_fn: Arc<OpFn>,
    gbound_fn: Arc<BoundFn>,
    memo: Arc<Mutex<BTreeMap<(u64, u64), BlockScalarOperator>>>,
}

impl SemiPovmStream {
    pub fn from_fn(
        name: impl Into<String>,
        guarded: bool,
        eval: impl Fn(u64, u64) -> BlockScalarOperator + Send + Sync + 'static,
        gbound: impl Fn(u64, u64) -> u64 + Send + Sync + 'static,
    ) -> Self {
        SemiPovmStream {
            descriptor: StreamDescriptor {
                name: name.into(),
                guarded,
            },
            eval_fn: Arc::new(eval),
            gbound_fn: Arc::new(gbound),
            memo: Arc::new(Mutex::new(BTreeMap::new())),
        }
    }

    pub fn descriptor(&self) -> &StreamDescriptor {
        &self.descriptor
    }

    pub fn eval(&self, n: u64, s: u64) -> BlockScalarOperator {
        assert!(n >= 1 && s >= 1);
        if let Some(v) = self.memo.lock().unwrap().get(&(n, s)) {
            return v.clone();
        }
        let v = (self.eval_fn)(n, s);
        debug_assert!(v.tail().is_zero(), "stream values are finite blocks");
        self.memo.lock().unwrap().insert((n, s), v.clone());
        v
    }

    pub fn eval_word(&self, n: u64, s: &Word) -> BlockScalarOperator {
        self.eval(n, s.index())
    }

    /// Declared block-size bound for `(n, s)`.
    pub fn gbound(&self, n: u64, s: u64) -> u64 {
        (self.gbound_fn)(n, s)
    }

    /// `sum_{s=1}^{m} f(n, s)`.
    pub fn partial_sum(&self, n: u64, m: u64) -> BlockScalarOperator {
        let ops: Vec<BlockScalarOperator> = (1..=m).map(|s| self.eval(n, s)).collect();
        let terms: Vec<(BigRational, &BlockScalarOperator)> =
            ops.iter().map(|op| (rint(1), op)).collect();
        BlockScalarOperator::combine(&terms)
    }
}

/// One validator failure with its witness.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SemiPovmViolation {
    TailNonzero { n: u64, s: u64 },
    NotPositive { n: u64, s: u64 },
    ScheduleViolated { n: u64, s: u64 },
    BlockExceedsBound { n: u64, s: u64, dim: u64, bound: u64 },
    NotMonotone { n: u64, s: u64 },
    MassViolated { n: u64 },
}

#[derive(Clone, Debug)]
pub struct SemiPovmReport {
    pub descriptor: StreamDescriptor,
    pub depth: u64,
    pub violations: Vec<SemiPovmViolation>,
}

impl SemiPovmReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "stream": self.descriptor.name,
            "depth": self.depth,
            "guarded": self.descriptor.guarded,
            "violations": self.violations.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>(),
        })
    }
}

/// Checks positivity, the slack schedule, and the declared block bound for
/// all `n, s <= depth`; for guarded streams additionally slack-free
/// monotonicity and the partial-mass bound `sum_{s<=n} f(n,s) <= I`.
pub fn validate_semipovm(stream: &SemiPovmStream, depth: u64) -> SemiPovmReport {
    assert!(depth >= 1);
    let mut violations = Vec::new();
    let identity = BlockScalarOperator::identity();
    for s in 1..=depth {
        for n in 1..=depth {
            let value = stream.eval(n, s);
            if !value.tail().is_zero() {
                violations.push(SemiPovmViolation::TailNonzero { n, s });
            }
            if !value.is_psd() {
                violations.push(SemiPovmViolation::NotPositive { n, s });
            }
            let dim = value.block_dim() as u64;
            let bound = stream.gbound(n, s);
            if dim > bound {
                violations.push(SemiPovmViolation::BlockExceedsBound { n, s, dim, bound });
            }
            if n < depth {
                let next = stream.eval(n + 1, s);
                // f(n,s) - 2^-n I <= f(n+1,s) - 2^-(n+1) I
                let gap = BlockScalarOperator::combine(&[
                    (rint(1), &next),
                    (rint(-1), &value),
                    (pow2(-(n as i64)) - pow2(-(n as i64 + 1)), &identity),
                ]);
                if !gap.is_psd() {
                    violations.push(SemiPovmViolation::ScheduleViolated { n, s });
                }
                if stream.descriptor.guarded && !BlockScalarOperator::loewner_leq(&value, &next) {
                    violations.push(SemiPovmViolation::NotMonotone { n, s });
                }
            }
        }
    }
    if stream.descriptor.guarded {
        for n in 1..=depth {
            let sum = stream.partial_sum(n, n);
            if !BlockScalarOperator::loewner_leq(&sum, &identity) {
                violations.push(SemiPovmViolation::MassViolated { n });
            }
        }
    }
    SemiPovmReport {
        descriptor: stream.descriptor.clone(),
        depth,
        violations,
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SemiPovmError {
    #[error("input schedule violated at (n={n}, s={s})")]
    ScheduleViolation { n: u64, s: u64 },
    #[error("declared norm disagrees with the entry table at s={s}")]
    NormMismatch { s: u64 },
}

/// Rewrites a stream on an arbitrary nonincreasing vanishing slack schedule
/// `h` onto the standard `2^-n` schedule by convex interpolation between
/// suitable stages of the input.
///
/// The input contract `f(n,s) - h(n,s) I <= f(n+1,s) - h(n+1,s) I` is
/// verified for `n, s <= check_to`. An input already on the standard
/// schedule (`h(n,s) = 2^-n` over the checked grid) is passed through
/// unchanged.
pub fn renormalize_schedule(
    name: impl Into<String>,
    eval: impl Fn(u64, u64) -> BlockScalarOperator + Send + Sync + 'static,
    gbound: impl Fn(u64, u64) -> u64 + Send + Sync + 'static,
    h: impl Fn(u64, u64) -> BigRational + Send + Sync + 'static,
    check_to: u64,
) -> Result<SemiPovmStream, SemiPovmError> {
    let name = name.into();
    let identity = BlockScalarOperator::identity();
    let mut exactly_standard = true;
    for s in 1..=check_to {
        for n in 1..=check_to {
            if h(n, s) != pow2(-(n as i64)) {
                exactly_standard = false;
            }
            if n < check_to {
                let gap = BlockScalarOperator::combine(&[
                    (rint(1), &eval(n + 1, s)),
                    (rint(-1), &eval(n, s)),
                    (h(n, s) - h(n + 1, s), &identity),
                ]);
                if !gap.is_psd() {
                    return Err(SemiPovmError::ScheduleViolation { n, s });
                }
            }
        }
    }
    let eval = Arc::new(eval);
    let gbound = Arc::new(gbound);
    if exactly_standard {
        let e = eval.clone();
        let g = gbound.clone();
        return Ok(SemiPovmStream::from_fn(
            name,
            false,
            move |n, s| e(n, s),
            move |n, s| g(n, s),
        ));
    }

    // Interpolation onto the standard schedule, advanced lazily per s.
    struct PerString {
        anchor: u64,
        values: Vec<(BlockScalarOperator, u64)>,
    }
    let states: Arc<Mutex<BTreeMap<u64, PerString>>> = Arc::new(Mutex::new(BTreeMap::new()));
    let h = Arc::new(h);

    let hbar = {
        let h = h.clone();
        move |x: u64, s: u64| -> BigRational {
            let base = h(x, s) + pow2(-(x as i64));
            if x == 1 {
                // first slack normalized above 1/2 so stage 1 is covered
                base.max(rint(3) / rint(4))
            } else {
                base
            }
        }
    };

    let ensure = {
        let eval = eval.clone();
        let gbound = gbound.clone();
        let states = states.clone();
        move |stage: u64, s: u64| -> (BlockScalarOperator, u64) {
            let mut map = states.lock().unwrap();
            let st = map.entry(s).or_insert(PerString {
                anchor: 1,
                values: Vec::new(),
            });
            while (st.values.len() as u64) < stage {
                let n = st.values.len() as u64 + 1;
                let m = st.anchor;
                let hm = hbar(m, s);
                debug_assert!(hm > pow2(-(n as i64)));
                let mut l = m + 1;
                while hbar(l, s) > pow2(-(n as i64)) {
                    l += 1;
                }
                let hl = hbar(l, s);
                let left = eval(m, s);
                let right = eval(l, s);
                let g = gbound(m, s).max(gbound(l, s));
                let denom = &hm - &hl;
                let mut k = n;
                loop {
                    let slack = pow2(-(k as i64));
                    if slack < hl {
                        break;
                    }
                    let alpha = (&hm - &slack) / &denom;
                    let value = BlockScalarOperator::combine(&[
                        (rint(1) - &alpha, &left),
                        (alpha.clone(), &right),
                    ]);
                    st.values.push((value, g));
                    k += 1;
                }
                st.anchor = l;
            }
            st.values[stage as usize - 1].clone()
        }
    };
    let ensure = Arc::new(ensure);
    let e2 = ensure.clone();
    Ok(SemiPovmStream::from_fn(
        name,
        false,
        move |n, s| ensure(n, s).0,
        move |n, s| e2(n, s).1,
    ))
}

/// Embeds a scalar stream as growing scaled identity blocks:
/// `f(n,s) = r(n,s) * I_n`.
pub fn scalar_embed(r: &SemiMeasureStream) -> SemiPovmStream {
    let name = format!("scalar-embed:{}", r.descriptor());
    let r2 = r.clone();
    SemiPovmStream::from_fn(
        name,
        true,
        move |n, s| {
            BlockScalarOperator::scaled_block_identity(n as usize, &r2.eval(n, s))
        },
        |n, _s| n,
    )
}

/// A family of Hermitian operators given by finitely many exact entries per
/// string, together with the exact value of each operator's entrywise
/// 2-norm (`hs_norm(s)^2` must equal the squared-entry sum).
#[derive(Clone)]
pub struct HilbertSchmidtFamily {
    pub name: String,
    entries: Arc<EntryTableFn>,
    hs_norm: Arc<NormFn>,
}

impl HilbertSchmidtFamily {
    /// `entries(s)` lists the upper triangle (`i <= j`, 0-indexed) of the
    /// operator at `s`; `hs_norm(s)` is its exact entrywise 2-norm.
    pub fn new(
        name: impl Into<String>,
        entries: impl Fn(u64) -> Vec<(usize, usize, RationalComplex)> + Send + Sync + 'static,
        hs_norm: impl Fn(u64) -> BigRational + Send + Sync + 'static,
    ) -> Self {
        HilbertSchmidtFamily {
            name: name.into(),
            entries: Arc::new(entries),
            hs_norm: Arc::new(hs_norm),
        }
    }

    /// The projective family: the operator at `s` is the projector onto the
    /// `s`-th basis vector.
    pub fn projective() -> Self {
        Self::new(
            "projective",
            |s| vec![(s as usize - 1, s as usize - 1, RationalComplex::one())],
            |_s| BigRational::one(),
        )
    }

    fn squared_entry_sum(&self, s: u64) -> BigRational {
        let mut total = BigRational::zero();
        for (i, j, z) in (self.entries)(s) {
            let sq = z.norm_sqr();
            total += if i == j { sq } else { rint(2) * sq };
        }
        total
    }
}

/// Builds the slack-schedule stream of a Hilbert-Schmidt family: at stage
/// `n` the entries are truncated to the smallest leading block whose
/// squared tail is at most `2^-2n-5`, then padded with `2^-n-2` on that
/// block's diagonal to restore positivity.
///
/// Declared norms are checked against the entry tables for
/// `s <= verify_to`.
pub fn from_hilbert_schmidt(
    family: &HilbertSchmidtFamily,
    verify_to: u64,
) -> Result<SemiPovmStream, SemiPovmError> {
    for s in 1..=verify_to {
        let declared = (family.hs_norm)(s);
        if &declared * &declared != family.squared_entry_sum(s) {
            return Err(SemiPovmError::NormMismatch { s });
        }
    }
    let fam = family.clone();
    let block_size = move |n: u64, s: u64| -> u64 {
        let total = fam.squared_entry_sum(s);
        let threshold = pow2(-(2 * n as i64 + 5));
        let entries = (fam.entries)(s);
        let support = entries
            .iter()
            .map(|(i, j, _)| *i.max(j) + 1)
            .max()
            .unwrap_or(1) as u64;
        let mut g = 1u64;
        loop {
            let mut partial = BigRational::zero();
            for (i, j, z) in &entries {
                if (*i.max(j) as u64) < g {
                    let sq = z.norm_sqr();
                    partial += if i == j { sq } else { rint(2) * sq };
                }
            }
            if &total - &partial <= threshold || g >= support {
                return g;
            }
            g += 1;
        }
    };
    let size_for_eval = block_size.clone();
    let fam = family.clone();
    let name = format!("hilbert-schmidt:{}", family.name);
    Ok(SemiPovmStream::from_fn(
        name,
        false,
        move |n, s| {
            let g = size_for_eval(n, s) as usize;
            let mut block = RationalHermitian::scaled_identity(g, &pow2(-(n as i64 + 2)));
            for (i, j, z) in (fam.entries)(s) {
                if i.max(j) < g {
                    if i == j {
                        let bumped = RationalComplex::from_real(&z.re + pow2(-(n as i64 + 2)));
                        block.set_entry(i, i, bumped);
                    } else {
                        block.set_entry(i, j, z);
                    }
                }
            }
            BlockScalarOperator::from_block(block)
        },
        block_size,
    ))
}

/// The stream of the projective measurement family.
pub fn projective_stream() -> SemiPovmStream {
    from_hilbert_schmidt(&HilbertSchmidtFamily::projective(), 64)
        .expect("projective norms are exact")
}

/// Finite-stage lower bounds on the outcome distribution of a measurement,
/// with all unresolved mass assigned to the extra completion outcome.
#[derive(Clone, Debug)]
pub struct MeasurementDistribution {
    pub stage: u64,
    /// `(string index, certified lower bound)` for each window outcome.
    pub outcomes: Vec<(u64, BigRational)>,
    /// `1 - sum of bounds`: mass not yet attributed to any window string.
    pub residual: BigRational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MeasurementOutcome {
    /// A finite binary string was observed.
    String(Word),
    /// The completion outcome: mass not certified for any window string at
    /// this stage (an overestimate of the true extra-outcome mass).
    Residual,
}

/// Certified per-outcome lower bounds for strings `1..=window` when the
/// system is measured in state `x` at stage `n`. Guarded streams use the
/// quadratic form directly; general streams pay the `2^-n` slack.
pub fn measurement_distribution(
    stream: &SemiPovmStream,
    n: u64,
    x: &StateVector,
    window: u64,
) -> MeasurementDistribution {
    let slack = pow2(-(n as i64));
    let mut outcomes = Vec::with_capacity(window as usize);
    let mut mass = BigRational::zero();
    for s in 1..=window {
        let q = stream.eval(n, s).quad_form(x);
        let p = if stream.descriptor().guarded {
            q
        } else {
            (q - &slack).max(BigRational::zero())
        };
        mass += &p;
        outcomes.push((s, p));
    }
    MeasurementDistribution {
        stage: n,
        outcomes,
        residual: BigRational::one() - mass,
    }
}

impl MeasurementDistribution {
    pub fn is_proper(&self) -> bool {
        !self.residual.is_negative() && self.outcomes.iter().all(|(_, p)| !p.is_negative())
    }

    /// `{stage, state, outcomes: [{s, p_num, p_den}], residual}`
    pub fn to_json(&self, state: &StateVector) -> Value {
        json!({
            "stage": self.stage,
            "state": state_to_json(state),
            "outcomes": self.outcomes.iter().map(|(s, p)| json!({
                "s": s,
                "s_bits": Word::from_index(*s).to_string(),
                "p_num": p.numer().to_string(),
                "p_den": p.denom().to_string(),
            })).collect::<Vec<_>>(),
            "residual": ratio_to_json(&self.residual),
        })
    }
}

/// Draws one outcome; deterministic in `(seed, draw)`.
pub fn sample_outcome(
    dist: &MeasurementDistribution,
    seed: u64,
    draw: u64,
) -> MeasurementOutcome {
    debug_assert!(dist.is_proper());
    let weights: Vec<BigRational> = dist.outcomes.iter().map(|(_, p)| p.clone()).collect();
    let idx = sample_index(&weights, seed, draw);
    if idx == weights.len() {
        MeasurementOutcome::Residual
    } else {
        MeasurementOutcome::String(Word::from_index(dist.outcomes[idx].0))
    }
}

/// Draws a reproducible batch: element `i` depends only on `(seed, i)`.
pub fn sample_batch(
    dist: &MeasurementDistribution,
    seed: u64,
    draws: u64,
) -> Vec<MeasurementOutcome> {
    (0..draws).map(|i| sample_outcome(dist, seed, i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn geometric_measure() -> SemiMeasureStream {
        SemiMeasureStream::from_fn("geometric", |_n, s| pow2(-(s as i64)))
    }

    #[test]
    fn projective_values_have_unit_spike() {
        let p = projective_stream();
        for (n, s) in [(1u64, 1u64), (3, 2), (5, 5)] {
            let v = p.eval(n, s);
            assert_eq!(v.block_dim() as u64, s);
            let spike = v.entry(s as usize - 1, s as usize - 1);
            assert_eq!(spike.re, rint(1) + pow2(-(n as i64 + 2)));
            let e_s = StateVector::basis(s as usize);
            assert!(v.quad_form(&e_s) >= rint(1));
        }
    }

    #[test]
    fn projective_stream_validates() {
        assert!(validate_semipovm(&projective_stream(), 16).is_clean());
    }

    #[test]
    fn scalar_embed_validates_and_transfers_mass() {
        let st = scalar_embed(&geometric_measure());
        assert!(st.descriptor().guarded);
        assert!(validate_semipovm(&st, 8).is_clean());
        let v = st.eval(3, 2);
        assert_eq!(v.block_dim(), 3);
        assert_eq!(v.entry(0, 0).re, rat(1, 4));
    }

    #[test]
    fn zero_embed_is_zero() {
        let zero = SemiMeasureStream::from_fn("zero", |_, _| BigRational::zero());
        let st = scalar_embed(&zero);
        assert_eq!(st.eval(4, 2), BlockScalarOperator::zero());
    }

    #[test]
    fn validator_catches_planted_faults() {
        // schedule break exactly at (n,s) = (3,2)
        let bad = SemiPovmStream::from_fn(
            "schedule-break",
            false,
            |n, s| {
                if n <= 3 && s == 2 {
                    BlockScalarOperator::scaled_block_identity(1, &rat(1, 2))
                } else {
                    BlockScalarOperator::zero()
                }
            },
            |_, _| 1,
        );
        let report = validate_semipovm(&bad, 5);
        assert!(report
            .violations
            .contains(&SemiPovmViolation::ScheduleViolated { n: 3, s: 2 }));
        assert!(!report
            .violations
            .iter()
            .any(|v| matches!(v, SemiPovmViolation::NotPositive { .. })));

        // positivity break
        let negative = SemiPovmStream::from_fn(
            "negative",
            false,
            |_n, _s| BlockScalarOperator::scaled_block_identity(1, &rat(-1, 4)),
            |_, _| 1,
        );
        let report = validate_semipovm(&negative, 2);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, SemiPovmViolation::NotPositive { .. })));

        // mass break on a guarded stream
        let heavy = SemiPovmStream::from_fn(
            "heavy",
            true,
            |_n, _s| BlockScalarOperator::scaled_block_identity(1, &rat(2, 3)),
            |_, _| 1,
        );
        let report = validate_semipovm(&heavy, 3);
        assert!(report
            .violations
            .contains(&SemiPovmViolation::MassViolated { n: 2 }));
    }

    #[test]
    fn renormalize_passes_standard_schedule_through() {
        let st = renormalize_schedule(
            "standard",
            |n, _s| {
                BlockScalarOperator::scaled_block_identity(1, &(rint(1) - pow2(-(n as i64))))
            },
            |_, _| 1,
            |n, _s| pow2(-(n as i64)),
            8,
        )
        .unwrap();
        for n in 1..=8 {
            assert_eq!(
                st.eval(n, 3),
                BlockScalarOperator::scaled_block_identity(1, &(rint(1) - pow2(-(n as i64))))
            );
        }
    }

    #[test]
    fn renormalize_constant_stream_is_constant() {
        // slack 3^-n on a constant stream: interpolation of equal endpoints
        let a = BlockScalarOperator::scaled_block_identity(2, &rat(1, 3));
        let expected = a.clone();
        let st = renormalize_schedule(
            "constant",
            move |_n, _s| a.clone(),
            |_, _| 2,
            |n, _s| rat(1, 3i64.pow((n as u32).min(20))),
            6,
        )
        .unwrap();
        for n in 1..=10 {
            assert_eq!(st.eval(n, 1), expected);
        }
        assert!(validate_semipovm(&st, 6).is_clean());
    }

    #[test]
    fn renormalize_slow_schedule_validates() {
        // slack 1/n on a growing scalar stream
        let st = renormalize_schedule(
            "slow",
            |n, _s| {
                BlockScalarOperator::scaled_block_identity(1, &(rint(1) - rat(1, n as i64)))
            },
            |_, _| 1,
            |n, _s| rat(1, n as i64),
            8,
        )
        .unwrap();
        assert!(validate_semipovm(&st, 8).is_clean());
    }

    #[test]
    fn renormalize_rejects_broken_input() {
        // a decreasing stream cannot satisfy any vanishing slack schedule
        let r = renormalize_schedule(
            "broken",
            |n, _s| {
                BlockScalarOperator::scaled_block_identity(1, &rat(1, n as i64))
            },
            |_, _| 1,
            |n, _s| rat(1, (n * n) as i64),
            6,
        );
        assert!(matches!(r, Err(SemiPovmError::ScheduleViolation { .. })));
    }

    #[test]
    fn hs_norm_mismatch_is_caught() {
        let family = HilbertSchmidtFamily::new(
            "lying",
            |_s| vec![(0, 0, RationalComplex::one())],
            |_s| rat(2, 1),
        );
        match from_hilbert_schmidt(&family, 4) {
            Err(e) => assert_eq!(e, SemiPovmError::NormMismatch { s: 1 }),
            Ok(_) => panic!("norm mismatch not detected"),
        }
    }

    #[test]
    fn zero_family_gives_pure_padding() {
        let family = HilbertSchmidtFamily::new("zero", |_s| vec![], |_s| BigRational::zero());
        let st = from_hilbert_schmidt(&family, 4).unwrap();
        let v = st.eval(3, 2);
        assert_eq!(v.block_dim(), 1);
        assert_eq!(v.entry(0, 0).re, pow2(-5));
        assert!(validate_semipovm(&st, 6).is_clean());
    }

    #[test]
    fn distribution_books_balance() {
        let p = projective_stream();
        let x = StateVector::basis(2);
        let d = measurement_distribution(&p, 6, &x, 4);
        assert!(d.is_proper());
        let total: BigRational = d.outcomes.iter().map(|(_, p)| p.clone()).sum();
        assert_eq!(total + &d.residual, rint(1));
        // the spike outcome keeps nearly all the mass
        assert!(d.outcomes[1].1 >= rint(1) - pow2(-6) - pow2(-6));
        assert!(d.outcomes[0].1.is_zero());
    }

    #[test]
    fn state_outside_window_sees_nothing() {
        let p = projective_stream();
        let x = StateVector::basis(9);
        let d = measurement_distribution(&p, 4, &x, 3);
        assert!(d.outcomes.iter().all(|(_, p)| p.is_zero()));
        assert_eq!(d.residual, rint(1));
    }

    #[test]
    fn sampling_degenerate_cases() {
        let sure = MeasurementDistribution {
            stage: 1,
            outcomes: vec![(2, rint(1))],
            residual: BigRational::zero(),
        };
        for draw in 0..20 {
            assert_eq!(
                sample_outcome(&sure, 7, draw),
                MeasurementOutcome::String(Word::from_index(2))
            );
        }
        let nothing = MeasurementDistribution {
            stage: 1,
            outcomes: vec![(1, BigRational::zero())],
            residual: BigRational::one(),
        };
        for draw in 0..20 {
            assert_eq!(sample_outcome(&nothing, 7, draw), MeasurementOutcome::Residual);
        }
    }

    #[test]
    fn sampling_frequencies_match() {
        let x = StateVector::from_reals(&[rat(3, 5), rat(4, 5)]).unwrap();
        let p = projective_stream();
        let d = measurement_distribution(&p, 8, &x, 3);
        let n = 20_000u64;
        let batch = sample_batch(&d, 123, n);
        use num_traits::ToPrimitive;
        for (s, prob) in &d.outcomes {
            let count = batch
                .iter()
                .filter(|o| **o == MeasurementOutcome::String(Word::from_index(*s)))
                .count() as f64;
            let pf = prob.to_f64().unwrap();
            let sigma = (n as f64 * pf * (1.0 - pf)).sqrt();
            assert!((count - n as f64 * pf).abs() <= 4.5 * sigma + 1.0);
        }
    }
}
