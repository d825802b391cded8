//! Exact rational-complex Hermitian operator algebra on the fixed standard
//! basis: decidable positivity, Loewner comparisons, and certified interval
//! spectral calculus.

pub mod block;
pub mod complex;
pub mod hermitian;
pub mod interval;
pub mod poly;
pub mod state;

pub use block::{BlockScalarOperator, SpectralError};
pub use complex::RationalComplex;
pub use hermitian::{MatrixError, RationalHermitian};
pub use interval::{neg_log2_interval, ComplexInterval, IntervalHermitian, RatInterval};
pub use poly::{eig_enclose, RatPoly};
pub use state::{StateError, StateVector};
