// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("bit width {width} outside supported range {min}..={max}")]
    BitWidth { width: u32, min: u32, max: u32 },

    #[error("invalid float range [{min}, {max}]")]
    InvalidRange { min: f64, max: f64 },

    #[error("value {value} outside declared range [{min}, {max}]")]
    OutOfRange { value: f64, min: f64, max: f64 },

    #[error("signal name `{0}` is already in use")]
    DuplicateName(String),

    #[error("`{0}` is not a valid VHDL identifier")]
    InvalidIdentifier(String),

    #[error("`{0}` is a reserved VHDL word")]
    ReservedWord(String),

    #[error("{op} result needs {width} bits, more than the {max}-bit limit")]
    WidthOverflow { op: &'static str, width: u32, max: u32 },

    #[error("type mismatch: {0}")]
    TypeMismatch(String),

    #[error("{0}")]
    Placement(String),

    #[error("unknown node id {0}")]
    UnknownNode(usize),

    #[error("unknown output `{0}`")]
    UnknownOutput(String),

    #[error("dependency cycle detected at node `{0}`")]
    Cycle(String),

    #[error("lookup table `{lut}`: function is not finite at x = {x}")]
    NonFinite { lut: String, x: f64 },

    #[error("lookup table `{lut}`: depth {depth} exceeds the budget of {budget} entries")]
    LutTooDeep { lut: String, depth: u64, budget: u64 },

    #[error("input vector {vector} does not supply input `{input}`")]
    MissingInput { vector: usize, input: String },

    #[error("cycle {cycle}: input `{input}` = {value} outside declared range [{min}, {max}]")]
    InputViolation {
        cycle: usize,
        input: String,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("malformed COE text: {0}")]
    Coe(String),
}
