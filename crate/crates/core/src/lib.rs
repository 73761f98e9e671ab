// SPDX-License-Identifier: Apache-2.0

//! Describe a pipelined fixed-point algorithm once, then evaluate it in
//! floating point, simulate it bit-exactly as integer hardware, and emit
//! VHDL with automatic pipeline buffering and block-RAM lookup tables.
//!
//! ```
//! use fxpipe::{DesignBuilder, FixedPointFormat, sim};
//!
//! let fmt = FixedPointFormat::signed(10, -3.14, 3.14).unwrap();
//! let mut b = DesignBuilder::new("adder").unwrap();
//! let x = b.input("x", fmt).unwrap();
//! let y = b.input("y", fmt).unwrap();
//! let e = b.add(x, y).unwrap();
//! let sum = b.clocked_assign("sum", e).unwrap();
//! b.output("sum", sum).unwrap();
//! let design = b.finish().unwrap();
//! assert_eq!(design.latency(), 1);
//!
//! let v = [("x".to_string(), 1.0), ("y".to_string(), 0.5)].into();
//! let trace = sim::run(&design, &[v], Default::default()).unwrap();
//! assert_eq!(trace.output("sum").unwrap()[0].float_value, 1.5);
//! ```

pub mod designs;
pub mod error;
pub mod fxp;
pub mod graph;
pub mod lut;
pub mod sim;
pub mod vhdl;

pub use error::{Error, Result};
pub use fxp::{FixedPointFormat, IntRange, SignalValue, Signedness};
pub use graph::{CompareOp, Design, DesignBuilder, NodeId, NodeKind, SignalNode};
pub use lut::{LutOptions, LutSpec};
