//! A concrete self-delimiting machine, table-driven test machines, and the
//! staged enumeration of halting programs with monotone mass bounds.

pub mod enumerate;
pub mod table;
pub mod vm;
pub mod word;

pub use enumerate::{EnumerationStage, Enumerator};
pub use table::{PrefixMachine, TableError, TableMachine};
pub use vm::{halt_program, looping_program, print_program, RunOutcome, Vm};
pub use word::{words_up_to, Program, Word};
