//! Staged enumeration of a machine's halting programs: at stage `n` every
//! program of length at most `n` runs with fuel `n`.
//!
//! Discoveries only accumulate (fuel monotonicity), so the stage-`n` view
//! is the set of programs first seen at some stage `<= n`, and the running
//! mass `sum 2^-|p|` is a nondecreasing rational below 1.

use std::collections::BTreeMap;
use std::sync::Mutex;

use num_rational::BigRational;
use num_traits::Zero;

use crate::machine::table::PrefixMachine;
use crate::machine::vm::RunOutcome;
use crate::machine::word::{words_up_to, Word};
use crate::rational::pow2;

/// Snapshot of the enumeration after a given stage.
#[derive(Clone, Debug)]
pub struct EnumerationStage {
    pub stage: u64,
    /// Halting programs discovered so far, with their outputs.
    pub discovered: BTreeMap<Word, Word>,
    /// `sum 2^-|p|` over the discovered programs.
    pub kraft_sum: BigRational,
}

struct Discovery {
    output: Word,
    stage: u64,
}

struct EnumState {
    done: u64,
    discovered: BTreeMap<Word, Discovery>,
    by_output: BTreeMap<Word, Vec<(usize, u64)>>,
    kraft: Vec<BigRational>,
}

/// Memoizing driver for a machine's halting enumeration.
pub struct Enumerator {
    machine: Box<dyn PrefixMachine>,
    jobs: usize,
    state: Mutex<EnumState>,
}

impl Enumerator {
    pub fn new(machine: Box<dyn PrefixMachine>) -> Self {
        Enumerator {
            machine,
            jobs: 1,
            state: Mutex::new(EnumState {
                done: 0,
                discovered: BTreeMap::new(),
                by_output: BTreeMap::new(),
                kraft: Vec::new(),
            }),
        }
    }

    /// Caps worker threads used per stage; merges stay in canonical order
    /// so results are identical for any job count.
    pub fn with_jobs(mut self, jobs: usize) -> Self {
        self.jobs = jobs.max(1);
        self
    }

    pub fn machine_name(&self) -> &str {
        self.machine.name()
    }

    fn advance(&self, state: &mut EnumState, stage: u64) {
        while state.done < stage {
            let n = state.done + 1;
            let scan_len = match self.machine.max_program_len() {
                Some(cap) => (n as usize).min(cap),
                None => n as usize,
            };
            assert!(scan_len < 40, "enumeration stage too deep to scan exhaustively");
            let new: Vec<(Word, Word)> = if self.jobs > 1 {
                self.scan_parallel(state, n, scan_len)
            } else {
                self.scan_serial(state, n, scan_len)
            };
            let mut mass = state.kraft.last().cloned().unwrap_or_else(BigRational::zero);
            for (program, output) in new {
                mass += pow2(-(program.len() as i64));
                state
                    .by_output
                    .entry(output.clone())
                    .or_default()
                    .push((program.len(), n));
                state.discovered.insert(program, Discovery { output, stage: n });
            }
            state.kraft.push(mass);
            state.done = n;
        }
    }

    fn scan_serial(&self, state: &EnumState, n: u64, scan_len: usize) -> Vec<(Word, Word)> {
        let mut new = Vec::new();
        for program in words_up_to(scan_len) {
            if state.discovered.contains_key(&program) {
                continue;
            }
            if let RunOutcome::Halted { output, .. } = self.machine.run(&program, n) {
                new.push((program, output));
            }
        }
        new
    }

    fn scan_parallel(&self, state: &EnumState, n: u64, scan_len: usize) -> Vec<(Word, Word)> {
        let last = (1u64 << (scan_len + 1)) - 1;
        let jobs = self.jobs.min(last as usize).max(1);
        let chunk = last / jobs as u64 + 1;
        let mut results: Vec<Vec<(Word, Word)>> = Vec::new();
        std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for j in 0..jobs as u64 {
                let lo = 1 + j * chunk;
                let hi = (lo + chunk - 1).min(last);
                let machine = &self.machine;
                let discovered = &state.discovered;
                handles.push(scope.spawn(move || {
                    let mut found = Vec::new();
                    for idx in lo..=hi {
                        let program = Word::from_index(idx);
                        if discovered.contains_key(&program) {
                            continue;
                        }
                        if let RunOutcome::Halted { output, .. } = machine.run(&program, n) {
                            found.push((program, output));
                        }
                    }
                    found
                }));
            }
            for h in handles {
                results.push(h.join().expect("enumeration worker panicked"));
            }
        });
        results.concat()
    }

    /// The enumeration snapshot after `stage`.
    pub fn enumerate_halting(&self, stage: u64) -> EnumerationStage {
        assert!(stage >= 1);
        let mut state = self.state.lock().unwrap();
        self.advance(&mut state, stage);
        let discovered = state
            .discovered
            .iter()
            .filter(|(_, d)| d.stage <= stage)
            .map(|(p, d)| (p.clone(), d.output.clone()))
            .collect();
        EnumerationStage {
            stage,
            discovered,
            kraft_sum: state.kraft[stage as usize - 1].clone(),
        }
    }

    /// Nondecreasing halting-mass lower bound at `stage`.
    pub fn omega_lower(&self, stage: u64) -> BigRational {
        assert!(stage >= 1);
        let mut state = self.state.lock().unwrap();
        self.advance(&mut state, stage);
        state.kraft[stage as usize - 1].clone()
    }

    /// Length of the shortest discovered program printing `s`, if any.
    /// Nonincreasing in `stage` once present.
    pub fn complexity_upper(&self, stage: u64, s: &Word) -> Option<usize> {
        assert!(stage >= 1);
        let mut state = self.state.lock().unwrap();
        self.advance(&mut state, stage);
        state
            .by_output
            .get(s)?
            .iter()
            .filter(|(_, found)| *found <= stage)
            .map(|(len, _)| *len)
            .min()
    }

    /// Mass `sum 2^-|p|` of discovered programs printing `s`.
    /// Nondecreasing in `stage`; sums across `s` to [`Self::omega_lower`].
    pub fn pv_lower(&self, stage: u64, s: &Word) -> BigRational {
        assert!(stage >= 1);
        let mut state = self.state.lock().unwrap();
        self.advance(&mut state, stage);
        match state.by_output.get(s) {
            None => BigRational::zero(),
            Some(entries) => entries
                .iter()
                .filter(|(_, found)| *found <= stage)
                .map(|(len, _)| pow2(-(*len as i64)))
                .sum(),
        }
    }
}
