//! Canonical JSON forms for the exact types.
//!
//! Rationals are rendered as reduced `"num/den"` strings and matrices carry
//! their upper triangle row-major, so serialized artifacts are byte-stable
//! across runs and platforms.

use num_rational::BigRational;
use serde_json::{json, Value};
use thiserror::Error;

use crate::linalg::block::BlockScalarOperator;
use crate::linalg::complex::RationalComplex;
use crate::linalg::hermitian::RationalHermitian;
use crate::linalg::state::StateVector;
use crate::rational::{ratio_from_str, ratio_to_string};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum JsonError {
    #[error("malformed {context}: {detail}")]
    Malformed {
        context: &'static str,
        detail: String,
    },
}

fn malformed(context: &'static str, detail: impl Into<String>) -> JsonError {
    JsonError::Malformed {
        context,
        detail: detail.into(),
    }
}

pub fn ratio_to_json(q: &BigRational) -> Value {
    Value::String(ratio_to_string(q))
}

pub fn ratio_from_json(v: &Value) -> Result<BigRational, JsonError> {
    let s = v
        .as_str()
        .ok_or_else(|| malformed("rational", "expected a string"))?;
    ratio_from_str(s).ok_or_else(|| malformed("rational", format!("cannot parse {s:?}")))
}

pub fn complex_to_json(z: &RationalComplex) -> Value {
    json!({ "re": ratio_to_json(&z.re), "im": ratio_to_json(&z.im) })
}

pub fn complex_from_json(v: &Value) -> Result<RationalComplex, JsonError> {
    let re = ratio_from_json(
        v.get("re")
            .ok_or_else(|| malformed("complex", "missing re"))?,
    )?;
    let im = ratio_from_json(
        v.get("im")
            .ok_or_else(|| malformed("complex", "missing im"))?,
    )?;
    Ok(RationalComplex::new(re, im))
}

/// `{"dim": m, "entries": [upper triangle, row-major]}`
pub fn hermitian_to_json(m: &RationalHermitian) -> Value {
    let dim = m.dim();
    let mut entries = Vec::with_capacity(dim * (dim + 1) / 2);
    for i in 0..dim {
        for j in i..dim {
            entries.push(complex_to_json(m.entry(i, j)));
        }
    }
    json!({ "dim": dim, "entries": entries })
}

pub fn hermitian_from_json(v: &Value) -> Result<RationalHermitian, JsonError> {
    let dim = v
        .get("dim")
        .and_then(Value::as_u64)
        .ok_or_else(|| malformed("hermitian", "missing dim"))? as usize;
    let raw = v
        .get("entries")
        .and_then(Value::as_array)
        .ok_or_else(|| malformed("hermitian", "missing entries"))?;
    let mut upper = Vec::with_capacity(raw.len());
    for e in raw {
        upper.push(complex_from_json(e)?);
    }
    RationalHermitian::from_upper_triangle(dim, upper)
        .map_err(|e| malformed("hermitian", e.to_string()))
}

/// `{"dim": m, "entries": [...], "tail": "num/den"}`
pub fn block_to_json(op: &BlockScalarOperator) -> Value {
    let mut v = hermitian_to_json(op.block());
    v.as_object_mut()
        .unwrap()
        .insert("tail".into(), ratio_to_json(op.tail()));
    v
}

pub fn block_from_json(v: &Value) -> Result<BlockScalarOperator, JsonError> {
    let block = hermitian_from_json(v)?;
    let tail = ratio_from_json(
        v.get("tail")
            .ok_or_else(|| malformed("operator", "missing tail"))?,
    )?;
    Ok(BlockScalarOperator::new(block, tail))
}

/// `{"coeffs": [{"re": ..., "im": ...}, ...]}`
pub fn state_to_json(x: &StateVector) -> Value {
    json!({ "coeffs": x.coeffs().iter().map(complex_to_json).collect::<Vec<_>>() })
}

pub fn state_from_json(v: &Value) -> Result<StateVector, JsonError> {
    let raw = v
        .get("coeffs")
        .and_then(Value::as_array)
        .ok_or_else(|| malformed("state", "missing coeffs"))?;
    let mut coeffs = Vec::with_capacity(raw.len());
    for c in raw {
        coeffs.push(complex_from_json(c)?);
    }
    StateVector::new(coeffs).map_err(|e| malformed("state", e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rint};

    #[test]
    fn operator_round_trip() {
        let block = RationalHermitian::from_upper_triangle(
            2,
            vec![
                RationalComplex::from_real(rat(2, 3)),
                RationalComplex::new(rat(1, 5), rat(-1, 7)),
                RationalComplex::from_real(rint(1)),
            ],
        )
        .unwrap();
        let op = BlockScalarOperator::new(block, rat(3, 11));
        let v = block_to_json(&op);
        let back = block_from_json(&v).unwrap();
        assert_eq!(op, back);
        // canonical text is stable
        assert_eq!(
            serde_json::to_string(&v).unwrap(),
            serde_json::to_string(&block_to_json(&back)).unwrap()
        );
    }

    #[test]
    fn rejects_non_hermitian_diagonal() {
        let v = json!({
            "dim": 1,
            "entries": [{"re": "0/1", "im": "1/1"}],
            "tail": "0/1",
        });
        assert!(block_from_json(&v).is_err());
    }

    #[test]
    fn state_round_trip() {
        let x = StateVector::from_reals(&[rat(3, 5), rat(4, 5)]).unwrap();
        let v = state_to_json(&x);
        assert_eq!(state_from_json(&v).unwrap(), x);
    }
}
