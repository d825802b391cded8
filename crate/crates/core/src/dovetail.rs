//! Dovetailed enumeration of matrix-emitting machines, the guarded
//! acceptance procedure that turns every emitter into a monotone
//! mass-bounded operator stream, the `2^-l` mixture over all of them, its
//! certified scalar floors, and checkpointable state.
//!
//! The procedure per emitter works through the anti-diagonals
//! `S_m = {(m-s+1, s) | 1 <= s <= m}`. At global stage `n` every pending
//! evaluation may spend up to `n` steps of fuel in total, so a slow
//! emitter never blocks the stage and every halting evaluation eventually
//! completes. A completed anti-diagonal is accepted only if all its values
//! are defined, dominate the previously accepted table in the Loewner
//! order, and keep the row sum below the identity; acceptance rewrites the
//! table, failure freezes it until a later full pass.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};
use thiserror::Error;

use crate::json::{hermitian_from_json, hermitian_to_json};
use crate::linalg::block::BlockScalarOperator;
use crate::linalg::complex::RationalComplex;
use crate::linalg::hermitian::RationalHermitian;
use crate::machine::{Vm, Word};
use crate::rational::{pow2, rint};
use crate::semipovm::SemiPovmStream;

/// A machine that maps `(k, s)` to an optional Hermitian matrix.
#[derive(Clone)]
pub enum EmitterMachine {
    /// The reserved first emitter: a hard-coded ramp converging upward to
    /// `2^-(s+1) I`, so the mixture owns a closed-form scalar floor.
    PlantedFloor,
    /// A program for the self-delimiting machine, run with the input pair
    /// in registers r2/r3 and the output bits decoded as a matrix.
    Code(Word),
    /// Never halts on any input.
    Never,
    /// Native closure with an explicit fuel cost; test scaffolding.
    Fixture(FixtureEmitter),
}

#[derive(Clone)]
pub struct FixtureEmitter {
    pub name: String,
    f: Arc<dyn Fn(u64, u64) -> Option<RationalHermitian> + Send + Sync>,
    pub halt_cost: u64,
}

impl FixtureEmitter {
    pub fn new(
        name: impl Into<String>,
        halt_cost: u64,
        f: impl Fn(u64, u64) -> Option<RationalHermitian> + Send + Sync + 'static,
    ) -> Self {
        FixtureEmitter {
            name: name.into(),
            f: Arc::new(f),
            halt_cost,
        }
    }
}

/// Index `1` is reserved for the planted floor emitter; index `l >= 2`
/// decodes to the program with index `l - 1`. Machines that never halt or
/// emit garbage simply contribute the zero stream.
pub fn decode_emitter(l: u64) -> EmitterMachine {
    assert!(l >= 1);
    if l == 1 {
        EmitterMachine::PlantedFloor
    } else {
        EmitterMachine::Code(Word::from_index(l - 1))
    }
}

enum EmitterResult {
    Value(RationalHermitian),
    Pending,
    Undefined,
}

impl EmitterMachine {
    fn evaluate(&self, k: u64, s: u64, fuel: u64) -> EmitterResult {
        match self {
            EmitterMachine::PlantedFloor => {
                let attempt = k + s - 1;
                let coeff = pow2(-(s as i64) - 1) * (rint(1) - pow2(-(attempt as i64)));
                EmitterResult::Value(RationalHermitian::scaled_identity(
                    (k + s) as usize,
                    &coeff,
                ))
            }
            EmitterMachine::Code(program) => {
                match Vm.run_with_registers(program, fuel, [0, 0, k, s]) {
                    crate::machine::RunOutcome::Halted { output, .. } => {
                        match decode_matrix(&output) {
                            Some(m) => EmitterResult::Value(m),
                            None => EmitterResult::Undefined,
                        }
                    }
                    crate::machine::RunOutcome::OutOfFuel => EmitterResult::Pending,
                    crate::machine::RunOutcome::Rejected => EmitterResult::Undefined,
                }
            }
            EmitterMachine::Never => EmitterResult::Pending,
            EmitterMachine::Fixture(fx) => {
                if fuel < fx.halt_cost {
                    EmitterResult::Pending
                } else {
                    match (fx.f)(k, s) {
                        Some(m) => EmitterResult::Value(m),
                        None => EmitterResult::Undefined,
                    }
                }
            }
        }
    }

    fn tag(&self) -> Value {
        match self {
            EmitterMachine::PlantedFloor => json!("planted"),
            EmitterMachine::Code(w) => json!({ "code": w.to_string() }),
            EmitterMachine::Never => json!("never"),
            EmitterMachine::Fixture(fx) => json!({ "fixture": fx.name }),
        }
    }
}

/// One accepted anti-diagonal: `row[s-1]` is the table value for `s`.
#[derive(Clone, Debug)]
pub struct AcceptanceRecord {
    pub stage: u64,
    pub attempt: u64,
    pub row: Vec<RationalHermitian>,
}

/// Per-emitter state of the guarded procedure.
pub struct GuardedRunner {
    emitter: EmitterMachine,
    stage: u64,
    attempt: u64,
    cells: BTreeMap<u64, Option<RationalHermitian>>,
    history: Vec<AcceptanceRecord>,
}

impl GuardedRunner {
    pub fn new(emitter: EmitterMachine) -> Self {
        GuardedRunner {
            emitter,
            stage: 0,
            attempt: 1,
            cells: BTreeMap::new(),
            history: Vec::new(),
        }
    }

    pub fn history(&self) -> &[AcceptanceRecord] {
        &self.history
    }

    fn step(&mut self) {
        self.stage += 1;
        let fuel = self.stage;
        while self.attempt <= self.stage {
            let m = self.attempt;
            let mut complete = true;
            for s in 1..=m {
                if self.cells.contains_key(&s) {
                    continue;
                }
                match self.emitter.evaluate(m - s + 1, s, fuel) {
                    EmitterResult::Value(v) => {
                        self.cells.insert(s, Some(v));
                    }
                    EmitterResult::Undefined => {
                        self.cells.insert(s, None);
                    }
                    EmitterResult::Pending => {
                        complete = false;
                    }
                }
            }
            if !complete {
                break;
            }
            let all_defined = self.cells.values().all(Option::is_some);
            if all_defined {
                let row: Vec<RationalHermitian> = (1..=m)
                    .map(|s| self.cells[&s].clone().unwrap())
                    .collect();
                if self.row_acceptable(&row) {
                    self.history.push(AcceptanceRecord {
                        stage: self.stage,
                        attempt: m,
                        row,
                    });
                }
            }
            self.attempt += 1;
            self.cells.clear();
        }
    }

    /// Both acceptance conditions: every value dominates the current table
    /// entry, and the row sums below the identity.
    fn row_acceptable(&self, row: &[RationalHermitian]) -> bool {
        for (i, value) in row.iter().enumerate() {
            let s = i as u64 + 1;
            let current = self.table_value(self.history.len(), s);
            let candidate = BlockScalarOperator::from_block(value.clone());
            if !BlockScalarOperator::loewner_leq(&current, &candidate) {
                return false;
            }
        }
        let blocks: Vec<BlockScalarOperator> = row
            .iter()
            .map(|m| BlockScalarOperator::from_block(m.clone()))
            .collect();
        let terms: Vec<(BigRational, &BlockScalarOperator)> =
            blocks.iter().map(|b| (rint(1), b)).collect();
        let sum = BlockScalarOperator::combine(&terms);
        BlockScalarOperator::loewner_leq(&sum, &BlockScalarOperator::identity())
    }

    fn table_value(&self, records: usize, s: u64) -> BlockScalarOperator {
        for record in self.history[..records].iter().rev() {
            if s <= record.attempt {
                return BlockScalarOperator::from_block(record.row[s as usize - 1].clone());
            }
        }
        BlockScalarOperator::zero()
    }

    /// The table value for `s` as of the end of global stage `n`.
    fn value_at(&self, n: u64, s: u64) -> BlockScalarOperator {
        assert!(n <= self.stage, "runner not advanced far enough");
        for record in self.history.iter().rev() {
            if record.stage <= n && s <= record.attempt {
                return BlockScalarOperator::from_block(record.row[s as usize - 1].clone());
            }
        }
        BlockScalarOperator::zero()
    }

    /// Replays the acceptance log, rechecking both conditions of every
    /// record against its predecessors.
    pub fn replay_history(&self) -> bool {
        for (idx, record) in self.history.iter().enumerate() {
            for (i, value) in record.row.iter().enumerate() {
                let s = i as u64 + 1;
                let prev = self.table_value(idx, s);
                let cand = BlockScalarOperator::from_block(value.clone());
                if !BlockScalarOperator::loewner_leq(&prev, &cand) {
                    return false;
                }
            }
            let blocks: Vec<BlockScalarOperator> = record
                .row
                .iter()
                .map(|m| BlockScalarOperator::from_block(m.clone()))
                .collect();
            let terms: Vec<(BigRational, &BlockScalarOperator)> =
                blocks.iter().map(|b| (rint(1), b)).collect();
            let sum = BlockScalarOperator::combine(&terms);
            if !BlockScalarOperator::loewner_leq(&sum, &BlockScalarOperator::identity()) {
                return false;
            }
        }
        true
    }
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint format mismatch: {0}")]
    FormatVersionMismatch(String),
}

const CHECKPOINT_VERSION: u64 = 1;

/// The whole dovetailed enumeration: one guarded runner per emitter index,
/// advanced in lockstep.
pub struct DovetailState {
    runners: Vec<GuardedRunner>,
    stage: u64,
    /// Custom emitter sets (tests) never grow; the decoded enumeration adds
    /// runner `l` as soon as the stage reaches `l`.
    decoded: bool,
}

impl DovetailState {
    /// The canonical enumeration over decoded emitters.
    pub fn new() -> Self {
        DovetailState {
            runners: Vec::new(),
            stage: 0,
            decoded: true,
        }
    }

    /// A fixed emitter set; mixture weights still follow the index order.
    pub fn with_emitters(emitters: Vec<EmitterMachine>) -> Self {
        DovetailState {
            runners: emitters.into_iter().map(GuardedRunner::new).collect(),
            stage: 0,
            decoded: false,
        }
    }

    pub fn stage(&self) -> u64 {
        self.stage
    }

    pub fn emitter_count(&self) -> usize {
        self.runners.len()
    }

    pub fn runner(&self, l: u64) -> Option<&GuardedRunner> {
        self.runners.get(l as usize - 1)
    }

    /// Advances every runner to the given global stage.
    pub fn advance_to(&mut self, stage: u64) {
        while self.stage < stage {
            let next = self.stage + 1;
            if self.decoded {
                while (self.runners.len() as u64) < next {
                    let l = self.runners.len() as u64 + 1;
                    let mut runner = GuardedRunner::new(decode_emitter(l));
                    // late-created runners catch up to the current stage
                    for _ in 0..self.stage {
                        runner.step();
                    }
                    self.runners.push(runner);
                }
            }
            for runner in &mut self.runners {
                runner.step();
            }
            self.stage = next;
        }
    }

    /// Component stream value `f(l, n, s)`; zero when the emitter index is
    /// outside a custom set.
    pub fn guarded_eval(&mut self, l: u64, n: u64, s: u64) -> BlockScalarOperator {
        assert!(l >= 1 && n >= 1 && s >= 1);
        self.advance_to(n);
        match self.runners.get(l as usize - 1) {
            Some(runner) if runner.stage >= n => runner.value_at(n, s),
            // an index beyond the stage or the custom set has an all-zero table
            _ => BlockScalarOperator::zero(),
        }
    }

    /// Mixture value `sum_{l<=n} 2^-l f(l, n, s)`.
    pub fn mixture_eval(&mut self, n: u64, s: u64) -> BlockScalarOperator {
        assert!(n >= 1 && s >= 1);
        self.advance_to(n);
        let last = if self.decoded {
            n
        } else {
            n.min(self.runners.len() as u64)
        };
        let parts: Vec<(BigRational, BlockScalarOperator)> = (1..=last)
            .map(|l| {
                (
                    pow2(-(l as i64)),
                    self.runners[l as usize - 1].value_at(n, s),
                )
            })
            .collect();
        let terms: Vec<(BigRational, &BlockScalarOperator)> =
            parts.iter().map(|(c, op)| (c.clone(), op)).collect();
        BlockScalarOperator::combine(&terms)
    }

    /// Sum of the first `m` mixture values: a certified Loewner lower bound
    /// for the halting-mass operator, nondecreasing in both arguments.
    pub fn omega_hat_lower(&mut self, n: u64, m: u64) -> BlockScalarOperator {
        let parts: Vec<BlockScalarOperator> =
            (1..=m).map(|s| self.mixture_eval(n, s)).collect();
        let terms: Vec<(BigRational, &BlockScalarOperator)> =
            parts.iter().map(|op| (rint(1), op)).collect();
        BlockScalarOperator::combine(&terms)
    }

    /// Replays every runner's acceptance log.
    pub fn replay_all(&self) -> bool {
        self.runners.iter().all(GuardedRunner::replay_history)
    }

    /// Versioned canonical checkpoint.
    pub fn to_json(&self) -> Value {
        json!({
            "version": CHECKPOINT_VERSION,
            "stage": self.stage,
            "decoded": self.decoded,
            "runners": self.runners.iter().map(|r| json!({
                "emitter": r.emitter.tag(),
                "attempt": r.attempt,
                "history": r.history.iter().map(|rec| json!({
                    "stage": rec.stage,
                    "attempt": rec.attempt,
                    "row": rec.row.iter().map(hermitian_to_json).collect::<Vec<_>>(),
                })).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self, CheckpointError> {
        let bad = |msg: &str| CheckpointError::FormatVersionMismatch(msg.to_string());
        let version = v.get("version").and_then(Value::as_u64);
        if version != Some(CHECKPOINT_VERSION) {
            return Err(bad(&format!(
                "expected version {CHECKPOINT_VERSION}, found {version:?}"
            )));
        }
        let stage = v.get("stage").and_then(Value::as_u64).ok_or(bad("missing stage"))?;
        let decoded = v
            .get("decoded")
            .and_then(Value::as_bool)
            .ok_or(bad("missing decoded flag"))?;
        let raw_runners = v
            .get("runners")
            .and_then(Value::as_array)
            .ok_or(bad("missing runners"))?;
        let mut runners = Vec::with_capacity(raw_runners.len());
        for (i, rr) in raw_runners.iter().enumerate() {
            let tag = rr.get("emitter").ok_or(bad("missing emitter tag"))?;
            let emitter = match tag {
                Value::String(s) if s == "planted" => EmitterMachine::PlantedFloor,
                Value::String(s) if s == "never" => EmitterMachine::Never,
                Value::Object(o) if o.contains_key("code") => {
                    let bits = o["code"].as_str().ok_or(bad("bad code tag"))?;
                    EmitterMachine::Code(
                        Word::parse(bits).ok_or(bad("unparseable code bits"))?,
                    )
                }
                Value::Object(o) if o.contains_key("fixture") => {
                    return Err(bad("fixture emitters cannot be restored from checkpoints"));
                }
                _ => return Err(bad("unknown emitter tag")),
            };
            if decoded {
                let expect = decode_emitter(i as u64 + 1);
                if serde_json::to_string(&expect.tag()).unwrap()
                    != serde_json::to_string(&emitter.tag()).unwrap()
                {
                    return Err(bad("runner does not match the decoded enumeration"));
                }
            }
            let attempt = rr
                .get("attempt")
                .and_then(Value::as_u64)
                .ok_or(bad("missing attempt"))?;
            let raw_history = rr
                .get("history")
                .and_then(Value::as_array)
                .ok_or(bad("missing history"))?;
            let mut history = Vec::with_capacity(raw_history.len());
            for rec in raw_history {
                let rec_stage = rec
                    .get("stage")
                    .and_then(Value::as_u64)
                    .ok_or(bad("missing record stage"))?;
                let rec_attempt = rec
                    .get("attempt")
                    .and_then(Value::as_u64)
                    .ok_or(bad("missing record attempt"))?;
                let raw_row = rec
                    .get("row")
                    .and_then(Value::as_array)
                    .ok_or(bad("missing record row"))?;
                let mut row = Vec::with_capacity(raw_row.len());
                for h in raw_row {
                    row.push(
                        hermitian_from_json(h)
                            .map_err(|e| bad(&format!("bad matrix: {e}")))?,
                    );
                }
                if row.len() as u64 != rec_attempt {
                    return Err(bad("row length disagrees with attempt"));
                }
                history.push(AcceptanceRecord {
                    stage: rec_stage,
                    attempt: rec_attempt,
                    row,
                });
            }
            let mut runner = GuardedRunner::new(emitter);
            runner.stage = stage;
            runner.attempt = attempt;
            runner.history = history;
            runners.push(runner);
        }
        Ok(DovetailState {
            runners,
            stage,
            decoded,
        })
    }
}

impl Default for DovetailState {
    fn default() -> Self {
        Self::new()
    }
}

/// Serialize-then-restore; the result continues bit-identically.
pub fn checkpoint_roundtrip(state: &DovetailState) -> Result<DovetailState, CheckpointError> {
    DovetailState::from_json(&state.to_json())
}

/// The guarded stream of one emitter index over a shared enumeration.
pub fn guarded_stream(state: Arc<Mutex<DovetailState>>, l: u64) -> SemiPovmStream {
    let s2 = state.clone();
    SemiPovmStream::from_fn(
        format!("guarded:{l}"),
        true,
        move |n, s| state.lock().unwrap().guarded_eval(l, n, s),
        move |n, s| {
            let dim = s2.lock().unwrap().guarded_eval(l, n, s).block_dim() as u64;
            dim.max(1)
        },
    )
}

/// The `2^-l` mixture over every enumerated emitter.
pub fn universal_stream(state: Arc<Mutex<DovetailState>>) -> SemiPovmStream {
    let s2 = state.clone();
    SemiPovmStream::from_fn(
        "universal-mixture",
        true,
        move |n, s| state.lock().unwrap().mixture_eval(n, s),
        move |n, s| {
            let dim = s2.lock().unwrap().mixture_eval(n, s).block_dim() as u64;
            dim.max(1)
        },
    )
}

/// The scalar view of the mixture in a fixed state: the quadratic forms of
/// the mixture values. No slack is needed because the mixture is monotone
/// without it, so this is itself a valid scalar stream; there is one
/// enumeration engine and two views of it.
pub fn scalar_mixture(
    state: Arc<Mutex<DovetailState>>,
    x: &crate::linalg::state::StateVector,
) -> crate::semimeasure::SemiMeasureStream {
    let x = x.clone();
    crate::semimeasure::SemiMeasureStream::from_fn("mixture-view", move |n, s| {
        state.lock().unwrap().mixture_eval(n, s).quad_form(&x)
    })
}

/// Certified scalar floor of the mixture element at `s`: the planted
/// emitter's table converges upward to `2^-(s+1) I` and carries mixture
/// weight `2^-1`, so the mixture element dominates `2^-(s+2) I`.
pub fn scalar_floor(s: u64) -> BigRational {
    assert!(s >= 1);
    pow2(-(s as i64) - 2)
}

/// The floor together with the quantities that produce it, for reports.
#[derive(Clone, Debug)]
pub struct FloorCertificate {
    pub s: u64,
    pub floor: BigRational,
    pub mixture_weight: BigRational,
    pub component_limit: BigRational,
}

pub fn floor_certificate(s: u64) -> FloorCertificate {
    FloorCertificate {
        s,
        floor: scalar_floor(s),
        mixture_weight: pow2(-1),
        component_limit: pow2(-(s as i64) - 1),
    }
}

/// Half-mix with a scaled identity ramp: relocates any valid stream to one
/// that is monotone with no slack and bounded away from zero, targeting
/// `R(s)/2 + 2^-(s+1) I`.
pub fn shift_mix(input: &SemiPovmStream) -> SemiPovmStream {
    let name = format!("shift-mix:{}", input.descriptor().name);
    let input2 = input.clone();
    let block_bound = move |n: u64, s: u64| -> u64 {
        let mut g = n + s;
        for k in 1..=n + s {
            g = g.max(input2.gbound(k, s));
        }
        g
    };
    let bound_for_eval = block_bound.clone();
    let input = input.clone();
    SemiPovmStream::from_fn(
        name,
        true,
        move |n, s| {
            let g = bound_for_eval(n, s) as usize;
            let ramp = pow2(-(s as i64) - 1) * (rint(1) - pow2(-(n as i64)));
            let identity_block = BlockScalarOperator::scaled_block_identity(g, &rint(1));
            let shifted = input.eval(n + s, s);
            BlockScalarOperator::combine(&[(pow2(-1), &shifted), (ramp, &identity_block)])
        },
        block_bound,
    )
}

/// Encodes a Hermitian matrix as a self-describing bit string: the
/// dimension, then the upper triangle row-major, all integers in
/// Elias-gamma form and rationals as `sign, gamma(|num|+1), gamma(den)`.
pub fn encode_matrix(m: &RationalHermitian) -> Word {
    let mut bits = Vec::new();
    push_gamma(&mut bits, m.dim() as u64 + 1);
    for i in 0..m.dim() {
        for j in i..m.dim() {
            push_rational(&mut bits, &m.entry(i, j).re);
            push_rational(&mut bits, &m.entry(i, j).im);
        }
    }
    Word::from_bits(bits)
}

/// Decodes [`encode_matrix`]'s format; `None` on any malformation,
/// including non-Hermitian data or trailing bits.
pub fn decode_matrix(w: &Word) -> Option<RationalHermitian> {
    let mut reader = BitReader {
        bits: w.bits(),
        pos: 0,
    };
    let dim = reader.gamma()?.checked_sub(1)? as usize;
    if dim > 64 {
        return None;
    }
    let mut upper = Vec::with_capacity(dim * (dim + 1) / 2);
    for _ in 0..dim * (dim + 1) / 2 {
        let re = reader.rational()?;
        let im = reader.rational()?;
        upper.push(RationalComplex::new(re, im));
    }
    if reader.pos != w.len() {
        return None;
    }
    RationalHermitian::from_upper_triangle(dim, upper).ok()
}

fn push_gamma(bits: &mut Vec<bool>, x: u64) {
    debug_assert!(x >= 1);
    let len = 64 - x.leading_zeros();
    for _ in 0..len - 1 {
        bits.push(false);
    }
    for k in (0..len).rev() {
        bits.push(x & (1 << k) != 0);
    }
}

fn push_rational(bits: &mut Vec<bool>, q: &BigRational) {
    bits.push(q.is_negative());
    let num = q.numer().abs();
    let den = q.denom().clone();
    push_gamma_big(bits, &(num + BigInt::one()));
    push_gamma_big(bits, &den);
}

fn push_gamma_big(bits: &mut Vec<bool>, x: &BigInt) {
    let binary = x.to_str_radix(2);
    for _ in 0..binary.len() - 1 {
        bits.push(false);
    }
    for c in binary.chars() {
        bits.push(c == '1');
    }
}

struct BitReader<'a> {
    bits: &'a [bool],
    pos: usize,
}

impl BitReader<'_> {
    fn take(&mut self) -> Option<bool> {
        let b = *self.bits.get(self.pos)?;
        self.pos += 1;
        Some(b)
    }

    fn gamma(&mut self) -> Option<u64> {
        let mut zeros = 0usize;
        loop {
            if self.take()? {
                break;
            }
            zeros += 1;
            if zeros > 63 {
                return None;
            }
        }
        let mut value: u64 = 1;
        for _ in 0..zeros {
            value = (value << 1) | self.take()? as u64;
        }
        Some(value)
    }

    fn gamma_big(&mut self) -> Option<BigInt> {
        let mut zeros = 0usize;
        loop {
            if self.take()? {
                break;
            }
            zeros += 1;
            if zeros > 4096 {
                return None;
            }
        }
        let mut value = BigInt::one();
        for _ in 0..zeros {
            value = (value << 1) | BigInt::from(self.take()? as u8);
        }
        Some(value)
    }

    fn rational(&mut self) -> Option<BigRational> {
        let negative = self.take()?;
        let num = self.gamma_big()? - BigInt::one();
        let den = self.gamma_big()?;
        if den.is_zero() || (negative && num.is_zero()) {
            return None;
        }
        let num = if negative { -num } else { num };
        Some(BigRational::new(num, den))
    }
}
