//! A self-delimiting register machine.
//!
//! Program bits double as the instruction stream and are fetched on demand;
//! a run counts as halting only when the machine executes HALT having
//! consumed exactly the whole program. The domain of the machine is
//! therefore prefix-free by construction: a proper prefix of a halting
//! program either runs out of bits (`Rejected`) or out of fuel, never halts.
//!
//! Instruction encoding (three-bit opcodes, operands inline):
//!
//! ```text
//! 000        HALT        stop; the output is the bit buffer
//! 001 b      OUT b       append the literal bit b to the output
//! 010        READ        consume the next fresh program bit into r0
//!                        (r0 <- 2*r0 + bit)
//! 011 rr     INC r       increment register rr
//! 100 rr     DEC r       decrement register rr, saturating at zero
//! 101 rr     SKZ r       if register rr is zero, skip the next instruction
//! 110        MARK        push the current code position on the loop stack
//! 111 rr     LOOP r      if rr != 0 jump to the top mark, else pop it
//! ```
//!
//! Executed code is recorded on an internal tape so loops can replay it;
//! bits consumed by READ are tagged as data and skipped by the program
//! counter. Four registers hold unsigned integers (r2 and r3 carry the
//! input pair when the machine is used as a matrix emitter).

use crate::machine::word::Word;

/// Result of a fuel-bounded run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RunOutcome {
    /// The machine executed HALT with exactly the whole program consumed.
    Halted { output: Word, bits_consumed: usize },
    /// Fuel ran out first; a larger budget may still halt.
    OutOfFuel,
    /// The run can never halt on this exact program: it needed bits past
    /// the end, halted with bits left over, or jumped without a mark.
    Rejected,
}

impl RunOutcome {
    pub fn is_halted(&self) -> bool {
        matches!(self, RunOutcome::Halted { .. })
    }
}

/// The canonical self-delimiting machine of this crate.
#[derive(Clone, Copy, Debug, Default)]
pub struct Vm;

enum Fault {
    OutOfBits,
    NoMark,
}

struct Run<'p> {
    program: &'p [bool],
    consumed: usize,
    tape: Vec<bool>,
    is_data: Vec<bool>,
    pc: usize,
    regs: [u64; 4],
    marks: Vec<usize>,
    out: Vec<bool>,
}

impl<'p> Run<'p> {
    fn new(program: &'p [bool], regs: [u64; 4]) -> Self {
        Run {
            program,
            consumed: 0,
            tape: Vec::with_capacity(program.len()),
            is_data: Vec::with_capacity(program.len()),
            pc: 0,
            regs,
            marks: Vec::new(),
            out: Vec::new(),
        }
    }

    fn pull(&mut self, data: bool) -> Result<bool, Fault> {
        if self.consumed == self.program.len() {
            return Err(Fault::OutOfBits);
        }
        let bit = self.program[self.consumed];
        self.consumed += 1;
        self.tape.push(bit);
        self.is_data.push(data);
        Ok(bit)
    }

    /// Next code bit at the program counter, replaying recorded code and
    /// skipping recorded data reads.
    fn code_bit(&mut self) -> Result<bool, Fault> {
        loop {
            if self.pc < self.tape.len() {
                if self.is_data[self.pc] {
                    self.pc += 1;
                    continue;
                }
                let bit = self.tape[self.pc];
                self.pc += 1;
                return Ok(bit);
            }
            self.pull(false)?;
        }
    }

    fn opcode(&mut self) -> Result<u8, Fault> {
        let mut op = 0u8;
        for _ in 0..3 {
            op = (op << 1) | self.code_bit()? as u8;
        }
        Ok(op)
    }

    fn reg_operand(&mut self) -> Result<usize, Fault> {
        let hi = self.code_bit()? as usize;
        let lo = self.code_bit()? as usize;
        Ok((hi << 1) | lo)
    }

    /// Decodes one instruction without executing it (for SKZ).
    fn skip_instruction(&mut self) -> Result<(), Fault> {
        match self.opcode()? {
            0b000 | 0b010 | 0b110 => Ok(()),
            0b001 => self.code_bit().map(|_| ()),
            _ => self.reg_operand().map(|_| ()),
        }
    }
}

impl Vm {
    /// Runs with all registers cleared.
    pub fn run(&self, program: &Word, fuel: u64) -> RunOutcome {
        self.run_with_registers(program, fuel, [0; 4])
    }

    /// Runs with preset registers; deterministic and monotone in fuel.
    pub fn run_with_registers(&self, program: &Word, fuel: u64, regs: [u64; 4]) -> RunOutcome {
        assert!(fuel >= 1, "fuel must be positive");
        let mut run = Run::new(program.bits(), regs);
        for _ in 0..fuel {
            let op = match run.opcode() {
                Ok(op) => op,
                Err(Fault::OutOfBits) => return RunOutcome::Rejected,
                Err(Fault::NoMark) => unreachable!(),
            };
            let fault = match op {
                0b000 => {
                    return if run.consumed == program.len() {
                        RunOutcome::Halted {
                            output: Word::from_bits(run.out),
                            bits_consumed: run.consumed,
                        }
                    } else {
                        RunOutcome::Rejected
                    };
                }
                0b001 => run.code_bit().map(|b| run.out.push(b)),
                0b010 => run.pull(true).map(|b| {
                    run.regs[0] = run.regs[0].wrapping_shl(1) | b as u64;
                }),
                0b011 => run.reg_operand().map(|r| {
                    run.regs[r] = run.regs[r].saturating_add(1);
                }),
                0b100 => run.reg_operand().map(|r| {
                    run.regs[r] = run.regs[r].saturating_sub(1);
                }),
                0b101 => run.reg_operand().and_then(|r| {
                    if run.regs[r] == 0 {
                        run.skip_instruction()
                    } else {
                        Ok(())
                    }
                }),
                0b110 => {
                    run.marks.push(run.pc);
                    Ok(())
                }
                0b111 => run.reg_operand().and_then(|r| {
                    if run.regs[r] != 0 {
                        match run.marks.last() {
                            Some(&pos) => {
                                run.pc = pos;
                                Ok(())
                            }
                            None => Err(Fault::NoMark),
                        }
                    } else {
                        run.marks.pop();
                        Ok(())
                    }
                }),
                _ => unreachable!(),
            };
            match fault {
                Ok(()) => {}
                Err(_) => return RunOutcome::Rejected,
            }
        }
        RunOutcome::OutOfFuel
    }
}

/// The shortest halting program: a bare HALT, three bits, empty output.
pub fn halt_program() -> Word {
    Word::parse("000").unwrap()
}

/// A program that loops forever consuming no further input:
/// `INC r0; MARK; LOOP r0`.
pub fn looping_program() -> Word {
    Word::parse("0110011011100").unwrap()
}

/// A straightline program printing the given word:
/// `OUT b` for each bit, then HALT.
pub fn print_program(w: &Word) -> Word {
    let mut bits = Vec::with_capacity(4 * w.len() + 3);
    for &b in w.bits() {
        bits.extend_from_slice(&[false, false, true, b]);
    }
    bits.extend_from_slice(&[false, false, false]);
    Word::from_bits(bits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bare_halt_emits_empty_string() {
        let out = Vm.run(&halt_program(), 10);
        assert_eq!(
            out,
            RunOutcome::Halted {
                output: Word::empty(),
                bits_consumed: 3
            }
        );
    }

    #[test]
    fn prefixes_of_halting_programs_never_halt() {
        let p = print_program(&Word::parse("101").unwrap());
        assert!(Vm.run(&p, 100).is_halted());
        for cut in 0..p.len() {
            let prefix = Word::from_bits(p.bits()[..cut].to_vec());
            let out = Vm.run(&prefix, 100);
            assert!(
                matches!(out, RunOutcome::Rejected | RunOutcome::OutOfFuel),
                "prefix of length {cut} must not halt"
            );
        }
    }

    #[test]
    fn leftover_bits_reject() {
        let mut bits = halt_program().bits().to_vec();
        bits.push(true);
        assert_eq!(Vm.run(&Word::from_bits(bits), 10), RunOutcome::Rejected);
    }

    #[test]
    fn looping_program_runs_out_of_fuel() {
        assert_eq!(Vm.run(&looping_program(), 1_000_000), RunOutcome::OutOfFuel);
    }

    #[test]
    fn print_program_round_trips() {
        for idx in 1..20 {
            let w = Word::from_index(idx);
            let p = print_program(&w);
            match Vm.run(&p, 1000) {
                RunOutcome::Halted {
                    output,
                    bits_consumed,
                } => {
                    assert_eq!(output, w);
                    assert_eq!(bits_consumed, p.len());
                }
                other => panic!("expected halt, got {other:?}"),
            }
        }
    }

    #[test]
    fn fuel_monotonicity_on_samples() {
        for idx in 1..200u64 {
            let p = Word::from_index(idx);
            if let RunOutcome::Halted { output, .. } = Vm.run(&p, 20) {
                for fuel in [21, 40, 1000] {
                    match Vm.run(&p, fuel) {
                        RunOutcome::Halted { output: o2, .. } => assert_eq!(o2, output),
                        other => panic!("halt not stable under fuel increase: {other:?}"),
                    }
                }
            }
        }
    }

    #[test]
    fn loops_replay_recorded_code() {
        // r0 = 2 (INC INC), MARK, OUT 1, DEC r0, LOOP r0, HALT
        // prints one 1 per loop pass: two passes.
        let src = ["01100", "01100", "110", "0011", "10000", "11100", "000"];
        let p = Word::parse(&src.concat()).unwrap();
        match Vm.run(&p, 1000) {
            RunOutcome::Halted { output, .. } => {
                assert_eq!(output, Word::parse("11").unwrap());
            }
            other => panic!("expected halt, got {other:?}"),
        }
    }

    #[test]
    fn read_consumes_fresh_bits() {
        // layout: 010 | 1 (data) | 010 | 0 (data) | 000 ... data bits are
        // pulled at the frontier, i.e. right after each READ opcode.
        let p = Word::parse("01010100000").unwrap();
        match Vm.run(&p, 100) {
            RunOutcome::Halted { bits_consumed, .. } => assert_eq!(bits_consumed, 11),
            other => panic!("expected halt, got {other:?}"),
        }
    }
}
