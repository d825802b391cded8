//! Certified interval upper bounds on the operator information content of
//! a string under the universal mixture, joint/conditional/mutual
//! variants over a pairing bijection, transport of the mixture along
//! partial maps, and the scalar stream seen by a fixed state.
//!
//! The certificate shape: the mixture value at stage `n` minus its slack
//! is a Loewner lower bound for the limit element, and so is the planted
//! scalar floor; their average is a strictly positive lower bound whose
//! `-log2` enclosure therefore upper-bounds the limit's `-log2`. Only
//! plain bounds of that shape are one-sided certificates; differences of
//! them (conditional, mutual) are labeled indicative.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use num_rational::BigRational;
use num_traits::Zero;
use serde_json::{json, Value};
use thiserror::Error;

use crate::dovetail::{scalar_floor, DovetailState};
use crate::json::ratio_to_json;
use crate::linalg::block::{BlockScalarOperator, SpectralError};
use crate::linalg::interval::IntervalHermitian;
use crate::linalg::state::StateVector;
use crate::machine::{RunOutcome, Vm, Word};
use crate::rational::{pow2, ratio_to_string, rint};
use crate::semimeasure::SemiMeasureStream;
use crate::semipovm::SemiPovmStream;

/// Pairs two strings through their integer codes with the Cantor zigzag;
/// a bijection between pairs of strings and strings.
pub fn pair_words(s: &Word, t: &Word) -> Word {
    let x = s.index() - 1;
    let y = t.index() - 1;
    let z = (x + y) * (x + y + 1) / 2 + y;
    Word::from_index(z + 1)
}

/// Inverse of [`pair_words`].
pub fn unpair_word(u: &Word) -> (Word, Word) {
    let z = u.index() - 1;
    let w = isqrt(8 * z + 1).saturating_sub(1) / 2;
    let y = z - w * (w + 1) / 2;
    let x = w - y;
    (Word::from_index(x + 1), Word::from_index(y + 1))
}

fn isqrt(v: u64) -> u64 {
    let mut r = (v as f64).sqrt() as u64;
    while r * r > v {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= v {
        r += 1;
    }
    r
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HhatError {
    #[error("stage {stage} too early for string index {s}: the floor needs stage > index + 2")]
    StageTooEarly { stage: u64, s: u64 },
}

/// A certified upper bound on the information-content operator of one
/// string at one stage.
#[derive(Clone, Debug)]
pub struct HhatBound {
    pub s: u64,
    pub stage: u64,
    pub eps: BigRational,
    /// The scalar floor of the mixture element used in the certificate.
    pub floor: BigRational,
    /// Enclosure of `-log2` of a certified lower bound of the mixture
    /// element, hence an upper bound for the limit's `-log2`.
    pub enclosure: IntervalHermitian,
}

impl HhatBound {
    /// `{s, stage, floor, operator: {...}, eps}`
    pub fn to_json(&self) -> Value {
        let dim = self.enclosure.dim();
        let mut diag = Vec::with_capacity(dim);
        for d in self.enclosure.diag_entries() {
            diag.push(json!({
                "lo": ratio_to_json(&d.lo),
                "hi": ratio_to_json(&d.hi),
            }));
        }
        json!({
            "s": self.s,
            "s_bits": Word::from_index(self.s).to_string(),
            "stage": self.stage,
            "eps": ratio_to_json(&self.eps),
            "floor": ratio_to_json(&self.floor),
            "operator": {
                "dim": dim,
                "diag": diag,
                "tail": {
                    "lo": ratio_to_json(&self.enclosure.tail().lo),
                    "hi": ratio_to_json(&self.enclosure.tail().hi),
                },
            },
        })
    }
}

/// The certified lower bound `L_n = (f_M(n,s) - 2^-n I)/2 + floor/2 * I`
/// for the mixture element at `s`, strictly positive once `n > s + 2`.
pub fn certified_lower_bound(
    state: &mut DovetailState,
    s: u64,
    stage: u64,
) -> Result<BlockScalarOperator, HhatError> {
    let floor = scalar_floor(s);
    if pow2(-(stage as i64)) >= floor {
        return Err(HhatError::StageTooEarly { stage, s });
    }
    let mixture = state.mixture_eval(stage, s);
    let identity = BlockScalarOperator::identity();
    let shift = (floor - pow2(-(stage as i64))) / rint(2);
    Ok(BlockScalarOperator::combine(&[
        (pow2(-1), &mixture),
        (shift, &identity),
    ]))
}

/// Interval upper bound on the information-content operator of `s`:
/// `-log2` of [`certified_lower_bound`], entry widths at most `eps`.
pub fn hhat_upper(
    state: &mut DovetailState,
    s: u64,
    stage: u64,
    eps: &BigRational,
) -> Result<HhatBound, HhatError> {
    let lower = certified_lower_bound(state, s, stage)?;
    let enclosure = match lower.spectral_neg_log2(eps) {
        Ok(e) => e,
        // the construction guarantees strict positivity past the stage gate
        Err(SpectralError::NotPositiveDefinite) => {
            return Err(HhatError::StageTooEarly { stage, s })
        }
    };
    Ok(HhatBound {
        s,
        stage,
        eps: eps.clone(),
        floor: scalar_floor(s),
        enclosure,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DerivedKind {
    Joint,
    Conditional,
    Mutual,
}

/// A derived information quantity. Only the joint bound (a plain upper
/// bound on a paired string) keeps the one-sided certificate; conditional
/// and mutual values are differences of upper bounds and are published as
/// indicative enclosures only.
#[derive(Clone, Debug)]
pub struct DerivedBound {
    pub kind: DerivedKind,
    pub s: u64,
    pub t: u64,
    pub stage: u64,
    pub certified_upper: bool,
    pub enclosure: IntervalHermitian,
}

pub fn hhat_derived(
    state: &mut DovetailState,
    kind: DerivedKind,
    s: &Word,
    t: &Word,
    stage: u64,
    eps: &BigRational,
) -> Result<DerivedBound, HhatError> {
    let joint_word = pair_words(s, t);
    let make = |state: &mut DovetailState, w: &Word| -> Result<IntervalHermitian, HhatError> {
        Ok(hhat_upper(state, w.index(), stage, eps)?.enclosure)
    };
    let (enclosure, certified) = match kind {
        DerivedKind::Joint => (make(state, &joint_word)?, true),
        DerivedKind::Conditional => {
            // value(t,s) - value(t)
            let ts = make(state, &pair_words(t, s))?;
            let just_t = make(state, t)?;
            (ts.sub(&just_t), false)
        }
        DerivedKind::Mutual => {
            let a = make(state, s)?;
            let b = make(state, t)?;
            let ab = make(state, &joint_word)?;
            (a.add(&b).sub(&ab), false)
        }
    };
    Ok(DerivedBound {
        kind,
        s: s.index(),
        t: t.index(),
        stage,
        certified_upper: certified,
        enclosure,
    })
}

/// A partial map on strings, evaluated under a fuel bound.
#[derive(Clone)]
pub enum PsiMap {
    Identity,
    /// `pair(s, t) -> pair(t, s)`.
    SwapPairs,
    /// Defined nowhere.
    Empty,
    /// Program for the register machine: input index in r2, output decoded
    /// from the printed bits.
    Code(Word),
    Table(BTreeMap<u64, u64>),
}

enum PsiOutcome {
    Defined(u64),
    Pending,
    Undefined,
}

impl PsiMap {
    fn evaluate(&self, t: u64, fuel: u64) -> PsiOutcome {
        match self {
            PsiMap::Identity => PsiOutcome::Defined(t),
            PsiMap::SwapPairs => {
                let (a, b) = unpair_word(&Word::from_index(t));
                PsiOutcome::Defined(pair_words(&b, &a).index())
            }
            PsiMap::Empty => PsiOutcome::Undefined,
            PsiMap::Code(program) => {
                match Vm.run_with_registers(program, fuel, [0, 0, t, 0]) {
                    RunOutcome::Halted { output, .. } => PsiOutcome::Defined(output.index()),
                    RunOutcome::OutOfFuel => PsiOutcome::Pending,
                    RunOutcome::Rejected => PsiOutcome::Undefined,
                }
            }
            PsiMap::Table(map) => match map.get(&t) {
                Some(v) => PsiOutcome::Defined(*v),
                None => PsiOutcome::Undefined,
            },
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PsiMap::Identity => "identity",
            PsiMap::SwapPairs => "swap",
            PsiMap::Empty => "empty",
            PsiMap::Code(_) => "code",
            PsiMap::Table(_) => "table",
        }
    }
}

/// Domain enumeration bookkeeping: `t(k, s)` and `h(n, s)`.
struct PsiEnumeration {
    psi: PsiMap,
    steps: u64,
    /// preimages of each target in discovery order
    preimages: BTreeMap<u64, Vec<u64>>,
    /// count of discoveries per target, per step
    discovered_by: Vec<BTreeMap<u64, usize>>,
}

impl PsiEnumeration {
    fn new(psi: PsiMap) -> Self {
        PsiEnumeration {
            psi,
            steps: 0,
            preimages: BTreeMap::new(),
            discovered_by: Vec::new(),
        }
    }

    fn advance_to(&mut self, step: u64) {
        while self.steps < step {
            let n = self.steps + 1;
            for t in 1..=n {
                let already = self
                    .preimages
                    .values()
                    .any(|v| v.contains(&t));
                if already {
                    continue;
                }
                if let PsiOutcome::Defined(target) = self.psi.evaluate(t, n) {
                    self.preimages.entry(target).or_default().push(t);
                }
            }
            let snapshot: BTreeMap<u64, usize> = self
                .preimages
                .iter()
                .map(|(target, v)| (*target, v.len()))
                .collect();
            self.discovered_by.push(snapshot);
            self.steps = n;
        }
    }

    /// Number of preimages of `s` discovered by step `n`.
    fn count(&mut self, n: u64, s: u64) -> usize {
        self.advance_to(n);
        self.discovered_by[n as usize - 1]
            .get(&s)
            .copied()
            .unwrap_or(0)
    }

    fn preimage(&self, s: u64, k: usize) -> u64 {
        self.preimages[&s][k]
    }
}

/// A finite-stage domination witness: the transported value at `psi(s)`
/// dominates the base value of `s` at a shifted stage, exactly.
#[derive(Clone, Debug)]
pub struct TransportWitness {
    pub s: u64,
    pub target: u64,
    pub preimage_rank: usize,
    pub stage: u64,
    pub holds: bool,
}

#[derive(Clone, Debug)]
pub struct TransportReport {
    pub psi: String,
    pub stage: u64,
    pub witnesses: Vec<TransportWitness>,
}

impl TransportReport {
    pub fn all_hold(&self) -> bool {
        self.witnesses.iter().all(|w| w.holds)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "psi": self.psi,
            "stage": self.stage,
            "witnesses": self.witnesses.iter().map(|w| json!({
                "s": w.s,
                "target": w.target,
                "preimage_rank": w.preimage_rank,
                "holds": w.holds,
            })).collect::<Vec<_>>(),
        })
    }
}

/// Pushes a stream forward along a partial map: the transported value at
/// `s` sums the base values of the discovered preimages of `s`, each at a
/// stage shifted by its discovery rank.
///
/// The report checks, for every `s` in the window with `psi(s)` defined,
/// the exact Loewner witness
/// `base(n + k, s) <= transported(n, psi(s))` where `k` is the discovery
/// rank of `s` among the preimages of `psi(s)`.
pub fn psi_transport(
    psi: PsiMap,
    base: &SemiPovmStream,
    report_stage: u64,
    report_window: u64,
) -> (SemiPovmStream, TransportReport) {
    let enumeration = Arc::new(Mutex::new(PsiEnumeration::new(psi.clone())));
    let base_stream = base.clone();
    let enum_for_eval = enumeration.clone();
    let name = format!("psi-transport:{}:{}", psi.name(), base.descriptor().name);
    let guarded = base.descriptor().guarded;
    let base_for_bound = base.clone();
    let enum_for_bound = enumeration.clone();
    let stream = SemiPovmStream::from_fn(
        name,
        guarded,
        move |n, s| {
            let mut en = enum_for_eval.lock().unwrap();
            let count = en.count(n, s);
            if count == 0 {
                return BlockScalarOperator::zero();
            }
            let parts: Vec<BlockScalarOperator> = (0..count)
                .map(|k| base_stream.eval(n + k as u64 + 1, en.preimage(s, k)))
                .collect();
            let terms: Vec<(BigRational, &BlockScalarOperator)> =
                parts.iter().map(|op| (rint(1), op)).collect();
            BlockScalarOperator::combine(&terms)
        },
        move |n, s| {
            let mut en = enum_for_bound.lock().unwrap();
            let count = en.count(n, s);
            let mut g = 1u64;
            for k in 0..count {
                g = g.max(base_for_bound.gbound(n + k as u64 + 1, en.preimage(s, k)));
            }
            g
        },
    );

    // exact witnesses at the report stage
    let mut witnesses = Vec::new();
    {
        let mut en = enumeration.lock().unwrap();
        en.advance_to(report_stage + report_window);
        for s in 1..=report_window {
            if let PsiOutcome::Defined(target) = psi.evaluate(s, report_stage + report_window)
            {
                let rank = en
                    .preimages
                    .get(&target)
                    .and_then(|v| v.iter().position(|&t| t == s));
                let Some(rank) = rank else { continue };
                drop(en);
                let lhs = base.eval(report_stage + rank as u64 + 1, s);
                let rhs = stream.eval(report_stage, target);
                witnesses.push(TransportWitness {
                    s,
                    target,
                    preimage_rank: rank,
                    stage: report_stage,
                    holds: BlockScalarOperator::loewner_leq(&lhs, &rhs),
                });
                en = enumeration.lock().unwrap();
            }
        }
    }
    let report = TransportReport {
        psi: psi.name().to_string(),
        stage: report_stage,
        witnesses,
    };
    (stream, report)
}

/// The scalar stream seen by a fixed state: the quadratic form of the
/// stream values minus the schedule slack, clamped at zero. A valid
/// operator stream yields a valid scalar stream.
pub fn state_pairing(base: &SemiPovmStream, x: &StateVector) -> SemiMeasureStream {
    let name = format!("state-pairing:{}", base.descriptor().name);
    let base = base.clone();
    let x = x.clone();
    SemiMeasureStream::from_fn(name, move |n, s| {
        let q = base.eval(n, s).quad_form(&x);
        (q - pow2(-(n as i64))).max(BigRational::zero())
    })
}

/// A reported constant: the observed gap between the scalar view of the
/// operator bound and the machine's shortest-program lengths on a fixture
/// set, recorded (never asserted universally).
#[derive(Clone, Debug)]
pub struct ComplexityComparison {
    pub stage: u64,
    pub entries: Vec<(u64, Option<usize>, BigRational)>,
    pub reported_constant: BigRational,
}

impl ComplexityComparison {
    pub fn to_json(&self) -> Value {
        json!({
            "stage": self.stage,
            "reported_constant": ratio_to_string(&self.reported_constant),
            "entries": self.entries.iter().map(|(s, c, ub)| json!({
                "s": s,
                "complexity_upper": c,
                "hhat_upper_diag": ratio_to_json(ub),
            })).collect::<Vec<_>>(),
        })
    }
}
