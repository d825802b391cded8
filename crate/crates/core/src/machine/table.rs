//! Table-driven test machines with a prefix-free domain, loadable from
//! fixture files.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::machine::vm::{RunOutcome, Vm};
use crate::machine::word::Word;

/// Anything that runs self-delimiting programs under a fuel bound.
///
/// Implementations must be deterministic, fuel-monotone (a halt stays a
/// halt with identical output under more fuel), and may halt only with the
/// whole program consumed.
pub trait PrefixMachine: Send + Sync {
    fn run(&self, program: &Word, fuel: u64) -> RunOutcome;

    /// Short name used in artifacts.
    fn name(&self) -> &str;

    /// A length beyond which no program halts, when one is known. Lets the
    /// enumeration skip hopeless scans for finite machines.
    fn max_program_len(&self) -> Option<usize> {
        None
    }
}

impl PrefixMachine for Vm {
    fn run(&self, program: &Word, fuel: u64) -> RunOutcome {
        Vm::run(self, program, fuel)
    }

    fn name(&self) -> &str {
        "vm"
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TableError {
    #[error("line {line}: expected `<program-bits> <output-bits>`")]
    BadLine { line: usize },
    #[error("programs {a} and {b} are prefix-related; table must be prefix-free")]
    NotPrefixFree { a: String, b: String },
}

/// A finite machine given by an explicit program table. Running a listed
/// program costs as many steps as it has bits (at least one); proper
/// prefixes and extensions of table entries are rejected like the real
/// machine would reject them.
#[derive(Clone, Debug)]
pub struct TableMachine {
    name: String,
    entries: BTreeMap<Word, Word>,
}

impl TableMachine {
    pub fn new(name: impl Into<String>, entries: Vec<(Word, Word)>) -> Result<Self, TableError> {
        let map: BTreeMap<Word, Word> = entries.into_iter().collect();
        let programs: Vec<&Word> = map.keys().collect();
        for (i, a) in programs.iter().enumerate() {
            for b in &programs[i + 1..] {
                if a.is_prefix_of(b) || b.is_prefix_of(a) {
                    return Err(TableError::NotPrefixFree {
                        a: a.to_string(),
                        b: b.to_string(),
                    });
                }
            }
        }
        Ok(TableMachine {
            name: name.into(),
            entries: map,
        })
    }

    /// Parses the fixture format: one `<program-bits> <output-bits>` pair
    /// per line, `-` (or `λ`) for the empty string, `#` comments.
    pub fn parse(name: impl Into<String>, text: &str) -> Result<Self, TableError> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(p), Some(o), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(TableError::BadLine { line: i + 1 });
            };
            let program = Word::parse(p).ok_or(TableError::BadLine { line: i + 1 })?;
            let output = Word::parse(o).ok_or(TableError::BadLine { line: i + 1 })?;
            entries.push((program, output));
        }
        TableMachine::new(name, entries)
    }

    pub fn entries(&self) -> &BTreeMap<Word, Word> {
        &self.entries
    }
}

impl PrefixMachine for TableMachine {
    fn run(&self, program: &Word, fuel: u64) -> RunOutcome {
        if let Some(output) = self.entries.get(program) {
            let cost = program.len().max(1) as u64;
            return if fuel >= cost {
                RunOutcome::Halted {
                    output: output.clone(),
                    bits_consumed: program.len(),
                }
            } else {
                RunOutcome::OutOfFuel
            };
        }
        RunOutcome::Rejected
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn max_program_len(&self) -> Option<usize> {
        Some(self.entries.keys().map(Word::len).max().unwrap_or(0))
    }
}
