//! Case files, random radial circuits and JSON helpers.

pub mod bench;
pub mod case;
pub mod generator;

pub use bench::{bench_case, bench_objective, BenchRow, CSV_HEADER};
pub use case::{emit_case, parse_case, parse_case_str, CaseFile};
pub use generator::{gen_random_radial, RandomCircuitParams};

use serde::de::DeserializeOwned;
use serde_path_to_error::Segment;

use crate::error::{Error, Result};

/// Deserializes `text`, reporting failures with a JSON pointer to the offending value.
pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let mut pointer = String::new();
        for seg in e.path().iter() {
            pointer.push('/');
            match seg {
                Segment::Seq { index } => pointer.push_str(&index.to_string()),
                Segment::Map { key } => pointer.push_str(&key.replace('~', "~0").replace('/', "~1")),
                Segment::Enum { variant } => pointer.push_str(variant),
                Segment::Unknown => {
                    pointer.pop();
                }
            }
        }
        Error::Parse { pointer, message: e.into_inner().to_string() }
    })
}
