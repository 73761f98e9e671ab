// SPDX-License-Identifier: Apache-2.0

//! Block-RAM lookup tables for operators with no direct VHDL form
//! (division, trigonometric functions).
//!
//! The table is addressed by the input's integer value minus the input's
//! minimum, so the address always starts at zero, and the stored words
//! have the table minimum subtracted, so they are never negative. The read
//! path is three pipeline steps: address register, synchronous BRAM read,
//! offset re-addition register.

use std::fmt;
use std::fmt::Write;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fxp::{min_width_for_integer_range, FixedPointFormat, IntRange, Signedness};
use crate::graph::{DesignBuilder, NodeId, NodeKind};

pub type LutFunction = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Capacity of the two block-RAM primitives, in bits.
pub const RAMB36_BITS: u64 = 36 * 1024;
pub const RAMB18_BITS: u64 = 18 * 1024;

#[derive(Clone)]
pub struct LutSpec {
    pub name: String,
    pub function: LutFunction,
    pub in_fmt: FixedPointFormat,
    pub out_fmt: FixedPointFormat,
    /// Integer value of the input at address 0.
    pub in_offset: i64,
    /// Added back to every stored word after the read.
    pub out_offset: i64,
    pub depth: u64,
    pub word_width: u32,
    pub contents: Vec<i64>,
    pub read_latency: u32,
    /// Entries whose function value fell outside the output range and were
    /// saturated.
    pub saturated: usize,
}

impl fmt::Debug for LutSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LutSpec")
            .field("name", &self.name)
            .field("in_offset", &self.in_offset)
            .field("out_offset", &self.out_offset)
            .field("depth", &self.depth)
            .field("word_width", &self.word_width)
            .field("read_latency", &self.read_latency)
            .field("saturated", &self.saturated)
            .finish()
    }
}

impl LutSpec {
    /// Table before the output offset is removed.
    pub fn raw_contents(&self) -> Vec<i64> {
        self.contents.iter().map(|&c| c + self.out_offset).collect()
    }

    /// Real input value addressed by `address`.
    pub fn input_at(&self, address: usize) -> f64 {
        self.in_fmt.to_real(address as i64 + self.in_offset)
    }

    pub fn bits(&self) -> u64 {
        self.depth * self.word_width as u64
    }

    pub fn address_width(&self) -> u32 {
        min_width_for_integer_range(0, self.depth as i64 - 1, Signedness::Unsigned)
    }

    /// Pipeline cycles between the table input and its output signal.
    pub fn added_latency(&self) -> u32 {
        2 + self.read_latency
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LutOptions {
    /// 1 for a plain synchronous BRAM, 2 with the output register enabled.
    pub read_latency: u32,
}

impl Default for LutOptions {
    fn default() -> Self {
        LutOptions { read_latency: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct BramEstimate {
    pub ramb36: u64,
    pub ramb18: u64,
}

impl std::ops::Add for BramEstimate {
    type Output = BramEstimate;

    fn add(self, o: BramEstimate) -> BramEstimate {
        BramEstimate {
            ramb36: self.ramb36 + o.ramb36,
            ramb18: self.ramb18 + o.ramb18,
        }
    }
}

/// Greedy packing of `depth * word_width` bits: whole RAMB36 blocks first,
/// then one RAMB18 or RAMB36 for the remainder.
pub fn bram_estimate(spec: &LutSpec) -> BramEstimate {
    bram_for_bits(spec.bits())
}

pub fn bram_for_bits(bits: u64) -> BramEstimate {
    let mut est = BramEstimate {
        ramb36: bits / RAMB36_BITS,
        ramb18: 0,
    };
    let rest = bits % RAMB36_BITS;
    if rest > RAMB18_BITS {
        est.ramb36 += 1;
    } else if rest > 0 {
        est.ramb18 += 1;
    }
    est
}

/// Sample `function` over every integer the input can take and quantize
/// the result into the output format.
pub fn tabulate(
    name: &str,
    function: &LutFunction,
    in_fmt: &FixedPointFormat,
    in_range: IntRange,
    out_fmt: &FixedPointFormat,
    out_range: (f64, f64),
) -> Result<(Vec<i64>, usize)> {
    let mut saturated = 0;
    let mut raw = Vec::with_capacity(in_range.span() as usize);
    for i in in_range.min..=in_range.max {
        let x = in_fmt.to_real(i);
        let y = function(x);
        if !y.is_finite() {
            return Err(Error::NonFinite {
                lut: name.to_string(),
                x,
            });
        }
        if y < out_range.0 || y > out_range.1 {
            saturated += 1;
        }
        raw.push(out_fmt.quantize(y.clamp(out_range.0, out_range.1)));
    }
    Ok((raw, saturated))
}

impl DesignBuilder {
    /// Build a lookup table for `function` applied to `input` and wire its
    /// read pipeline into the design. Returns the table index and the node
    /// carrying the function value, `2 + read_latency` stages after `input`.
    pub fn lut<F>(
        &mut self,
        name: &str,
        function: F,
        input: NodeId,
        out_bit_width: u32,
        out_range: (f64, f64),
        options: LutOptions,
    ) -> Result<(usize, NodeId)>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let function: LutFunction = Arc::new(function);
        let src = self.node(input)?.clone();
        if src.boolean {
            return Err(Error::TypeMismatch(format!(
                "lookup table `{name}` needs a numeric input"
            )));
        }
        if !(1..=2).contains(&options.read_latency) {
            return Err(Error::Placement(format!(
                "lookup table `{name}`: read latency must be 1 or 2"
            )));
        }
        let depth = src.range.span();
        if depth > self.lut_budget() {
            return Err(Error::LutTooDeep {
                lut: name.to_string(),
                depth,
                budget: self.lut_budget(),
            });
        }
        let (out_min, out_max) = out_range;
        let out_fmt = if out_min < 0.0 {
            FixedPointFormat::signed(out_bit_width, out_min, out_max)?
        } else {
            if out_max <= out_min {
                return Err(Error::InvalidRange {
                    min: out_min,
                    max: out_max,
                });
            }
            FixedPointFormat::unsigned(out_bit_width, out_max)?
        };
        let (raw, saturated) = tabulate(name, &function, &src.fmt, src.range, &out_fmt, out_range)?;
        let out_offset = *raw.iter().min().expect("depth >= 1");
        let contents: Vec<i64> = raw.iter().map(|&v| v - out_offset).collect();
        let table_max = *contents.iter().max().expect("depth >= 1");
        let word_width = min_width_for_integer_range(0, table_max, Signedness::Unsigned);

        let addr_name = format!("{name}_addr");
        let data_name = format!("{name}_data");
        self.reserve_name(name)?;
        self.reserve_name(&addr_name)?;
        self.reserve_name(&data_name)?;

        let spec = LutSpec {
            name: name.to_string(),
            function,
            in_fmt: src.fmt,
            out_fmt,
            in_offset: src.range.min,
            out_offset,
            depth,
            word_width,
            contents,
            read_latency: options.read_latency,
            saturated,
        };
        let lut = self.push_lut(spec);

        // address = input - input minimum
        let in_off = self.constant_raw(src.range.min, src.cc())?;
        let addr_expr = self.sub(input, in_off)?;
        let addr = self.clocked_assign_reserved(&addr_name, addr_expr)?;
        let addr_stage = self.node(addr)?.stage;

        let data_fmt = FixedPointFormat::derived(word_width, Signedness::Unsigned, out_fmt.conversion_constant);
        let data = self.push(
            Some(&data_name),
            NodeKind::LutRead { lut },
            vec![addr],
            data_fmt,
            IntRange::new(0, table_max),
            addr_stage + options.read_latency,
            false,
        );

        let out_off = self.constant_raw(out_offset, out_fmt.conversion_constant)?;
        let sum = self.add(data, out_off)?;
        let out = self.clocked_assign_reserved(name, sum)?;
        Ok((lut, out))
    }
}

/// Coefficient file initializing a BRAM with `spec`'s stored words.
pub fn emit_coe(spec: &LutSpec) -> String {
    emit_coe_values(&spec.contents)
}

/// Coefficient file for the pre-offset table (may hold negative values).
pub fn emit_raw_coe(spec: &LutSpec) -> String {
    emit_coe_values(&spec.raw_contents())
}

pub fn emit_coe_values(values: &[i64]) -> String {
    let mut s = String::from("memory_initialization_radix=10;\nmemory_initialization_vector=");
    for v in values {
        write!(s, "{v},").unwrap();
    }
    s.push('\n');
    s
}

/// Parse the decimal coefficient files written by [`emit_coe_values`].
pub fn parse_coe(text: &str) -> Result<Vec<i64>> {
    let mut radix_seen = false;
    let mut values = None;
    for stmt in text.split(';') {
        let stmt: String = stmt.chars().filter(|c| !c.is_whitespace()).collect();
        if stmt.is_empty() {
            continue;
        }
        let (key, value) = stmt
            .split_once('=')
            .ok_or_else(|| Error::Coe(format!("expected `key=value`, found `{stmt}`")))?;
        match key {
            "memory_initialization_radix" => {
                if value != "10" {
                    return Err(Error::Coe(format!("unsupported radix {value}")));
                }
                radix_seen = true;
            }
            "memory_initialization_vector" => {
                let parsed = value
                    .split(',')
                    .filter(|v| !v.is_empty())
                    .map(|v| {
                        v.parse::<i64>()
                            .map_err(|e| Error::Coe(format!("bad value `{v}`: {e}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                values = Some(parsed);
            }
            other => return Err(Error::Coe(format!("unknown key `{other}`"))),
        }
    }
    if !radix_seen {
        return Err(Error::Coe("missing memory_initialization_radix".into()));
    }
    values.ok_or_else(|| Error::Coe("missing memory_initialization_vector".into()))
}
