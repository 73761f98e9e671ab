// SPDX-License-Identifier: Apache-2.0

//! Arbitrary-precision reference evaluation of a design, one input vector
//! at a time. Registers and delay-line taps are identities here: the walk
//! follows data dependencies and ignores time. Quantization, table
//! contents and flooring shifts are recomputed from first principles.

#![allow(dead_code)]

use std::collections::HashMap;

use fxpipe::sim::InputVector;
use fxpipe::{Design, FixedPointFormat, NodeKind, Signedness};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub struct Oracle<'a> {
    design: &'a Design,
    tables: HashMap<usize, Vec<BigInt>>,
}

fn bounds(bits: u32, signedness: Signedness) -> (BigInt, BigInt) {
    let one = BigInt::one();
    match signedness {
        Signedness::Signed => (-(&one << (bits - 1)), (&one << (bits - 1)) - 1),
        Signedness::Unsigned => (BigInt::zero(), (&one << bits) - 1),
    }
}

/// Round half away from zero, then saturate.
fn quantize(x: f64, fmt: &FixedPointFormat) -> BigInt {
    let scaled = x * fmt.conversion_constant;
    let floor = scaled.floor();
    let frac = scaled - floor;
    let rounded = if frac > 0.5 || (frac == 0.5 && scaled > 0.0) {
        floor + 1.0
    } else {
        floor
    };
    let v = BigInt::from(rounded as i128);
    let (lo, hi) = bounds(fmt.bit_width, fmt.signedness);
    v.clamp(lo, hi)
}

impl<'a> Oracle<'a> {
    pub fn new(design: &'a Design) -> Self {
        let mut tables = HashMap::new();
        for (k, lut) in design.luts().iter().enumerate() {
            let raw: Vec<BigInt> = (0..lut.depth as i64)
                .map(|addr| {
                    let x = (addr + lut.in_offset) as f64 / lut.in_fmt.conversion_constant;
                    let y = (lut.function)(x).clamp(lut.out_fmt.float_min, lut.out_fmt.float_max);
                    quantize(y, &lut.out_fmt)
                })
                .collect();
            let min = raw.iter().min().unwrap().clone();
            assert_eq!(min, BigInt::from(lut.out_offset), "table `{}` offset", lut.name);
            tables.insert(k, raw.into_iter().map(|v| v - &min).collect());
        }
        Oracle { design, tables }
    }

    /// Integer value of every node for one input vector.
    pub fn eval(&self, v: &InputVector) -> Vec<BigInt> {
        let mut vals: Vec<BigInt> = Vec::with_capacity(self.design.nodes().len());
        for n in self.design.nodes() {
            let op = |i: usize| vals[n.operands[i].0].clone();
            let val = match n.kind {
                NodeKind::Input => {
                    let x = v[&n.name].clamp(n.fmt.float_min, n.fmt.float_max);
                    quantize(x, &n.fmt)
                }
                NodeKind::Constant { integer, .. } => BigInt::from(integer),
                NodeKind::Add => op(0) + op(1),
                NodeKind::Sub => op(0) - op(1),
                NodeKind::Mul => op(0) * op(1),
                NodeKind::LeftShift { amount } => op(0) * (BigInt::one() << amount),
                NodeKind::RightShift { amount } => op(0).div_floor(&(BigInt::one() << amount)),
                NodeKind::Compare { op: cmp } => {
                    let (a, b) = (op(0), op(1));
                    let t = |x: &BigInt| !x.is_zero();
                    let r = match cmp {
                        fxpipe::CompareOp::Eq => a == b,
                        fxpipe::CompareOp::Ne => a != b,
                        fxpipe::CompareOp::Ge => a >= b,
                        fxpipe::CompareOp::Gt => a > b,
                        fxpipe::CompareOp::Le => a <= b,
                        fxpipe::CompareOp::Lt => a < b,
                        fxpipe::CompareOp::And => t(&a) && t(&b),
                        fxpipe::CompareOp::Or => t(&a) || t(&b),
                    };
                    BigInt::from(u8::from(r))
                }
                NodeKind::Select => {
                    if op(0).is_zero() {
                        op(2)
                    } else {
                        op(1)
                    }
                }
                NodeKind::LutRead { lut } => {
                    let addr = op(0).to_usize().expect("address is a small non-negative integer");
                    self.tables[&lut][addr].clone()
                }
                NodeKind::Buffer { .. } | NodeKind::RegisterAssign => op(0),
            };
            vals.push(val);
        }
        vals
    }

    /// Does every node value fit the node's declared width?
    pub fn fits(&self, vals: &[BigInt]) -> Vec<String> {
        self.design
            .nodes()
            .iter()
            .filter(|n| {
                let (lo, hi) = bounds(n.width(), n.signedness());
                let v = &vals[n.id.0];
                v < &lo || v > &hi || (n.signedness() == Signedness::Unsigned && v.is_negative())
            })
            .map(|n| n.name.clone())
            .collect()
    }
}
