// SPDX-License-Identifier: Apache-2.0

//! Cycle-accurate dual-track simulation.
//!
//! Every node carries an integer (the hardware value) and a float (the
//! reference value) per clock cycle. Registers, delay-line taps and table
//! reads take their operand's value from the previous cycle and start at
//! zero; everything else is combinational within the cycle. After the input
//! stream ends the pipeline is flushed with zero inputs for `latency`
//! cycles, so the output for vector `v` appears at cycle `v + latency`.

use std::collections::{BTreeMap, VecDeque};
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fxp::SignalValue;
use crate::graph::{Design, NodeId, NodeKind};
use crate::lut::{bram_estimate, BramEstimate, LutSpec};

/// One input vector: a float value per input name.
pub type InputVector = BTreeMap<String, f64>;

/// What to do with an input outside its declared float range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RangePolicy {
    #[default]
    Strict,
    Clamp,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SimOptions {
    pub range_policy: RangePolicy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// An input was outside its declared range and was clamped.
    InputClamped,
    /// A node's integer value did not fit its declared width.
    WidthOverflow,
    /// A table address fell outside the table.
    AddressOutOfRange,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub cycle: usize,
    pub node: String,
    pub kind: ViolationKind,
    pub value: f64,
}

/// Per-cycle values of every node, stored one column per node.
#[derive(Debug, Clone)]
pub struct Trace {
    columns: Vec<Vec<SignalValue>>,
    stages: Vec<u32>,
    outputs: Vec<(String, NodeId)>,
    vectors: usize,
    latency: u32,
    violations: Vec<Violation>,
}

impl Trace {
    pub fn cycle_count(&self) -> usize {
        self.vectors + self.latency as usize
    }

    pub fn vector_count(&self) -> usize {
        self.vectors
    }

    pub fn latency(&self) -> u32 {
        self.latency
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }

    /// Value of `node` during `cycle`.
    pub fn value(&self, node: NodeId, cycle: usize) -> SignalValue {
        self.columns[node.0][cycle]
    }

    pub fn column(&self, node: NodeId) -> &[SignalValue] {
        &self.columns[node.0]
    }

    /// Value `node` holds for input vector `vector`, i.e. at cycle
    /// `vector + stage`.
    pub fn aligned(&self, node: NodeId, vector: usize) -> SignalValue {
        self.columns[node.0][vector + self.stages[node.0] as usize]
    }

    /// Cycles before the first output is valid.
    pub fn is_warmup(&self, cycle: usize) -> bool {
        cycle < self.latency as usize
    }

    pub fn output_node(&self, name: &str) -> Result<NodeId> {
        self.outputs
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, id)| *id)
            .ok_or_else(|| Error::UnknownOutput(name.to_string()))
    }

    /// One value per input vector for a named output.
    pub fn output(&self, name: &str) -> Result<Vec<SignalValue>> {
        let id = self.output_node(name)?;
        Ok((0..self.vectors).map(|v| self.aligned(id, v)).collect())
    }
}

struct TablePipe {
    /// Output-side registers of a multi-cycle read, oldest first.
    regs: VecDeque<SignalValue>,
}

fn lookup(spec: &LutSpec, addr: SignalValue) -> Option<SignalValue> {
    let idx = usize::try_from(addr.integer_value).ok().filter(|&i| i < spec.contents.len())?;
    let x = addr.float_value + spec.in_fmt.to_real(spec.in_offset);
    let offset = spec.out_fmt.to_real(spec.out_offset);
    Some(SignalValue::new(
        (spec.function)(x) - offset,
        spec.contents[idx],
        spec.out_fmt.conversion_constant,
    ))
}

/// Simulate `design` over `inputs`, one vector per clock cycle.
pub fn run(design: &Design, inputs: &[InputVector], options: SimOptions) -> Result<Trace> {
    let nodes = design.nodes();
    let latency = design.latency();
    let cycles = inputs.len() + latency as usize;
    let mut violations = Vec::new();

    // resolve and quantize the input stream up front
    let mut stimulus: Vec<Vec<SignalValue>> = Vec::with_capacity(design.inputs().len());
    for &id in design.inputs() {
        let node = design.node(id);
        let fmt = node.fmt;
        let mut col = Vec::with_capacity(cycles);
        for (v, vector) in inputs.iter().enumerate() {
            let mut x = *vector.get(&node.name).ok_or_else(|| Error::MissingInput {
                vector: v,
                input: node.name.clone(),
            })?;
            if !(fmt.float_min <= x && x <= fmt.float_max) {
                match options.range_policy {
                    RangePolicy::Strict => {
                        return Err(Error::InputViolation {
                            cycle: v,
                            input: node.name.clone(),
                            value: x,
                            min: fmt.float_min,
                            max: fmt.float_max,
                        })
                    }
                    RangePolicy::Clamp => {
                        violations.push(Violation {
                            cycle: v,
                            node: node.name.clone(),
                            kind: ViolationKind::InputClamped,
                            value: x,
                        });
                        x = if x.is_nan() { 0.0 } else { fmt.clamp(x) };
                    }
                }
            }
            col.push(SignalValue::new(x, fmt.quantize(x), fmt.conversion_constant));
        }
        col.resize(cycles, SignalValue::default());
        stimulus.push(col);
    }
    let input_slot: BTreeMap<NodeId, usize> =
        design.inputs().iter().enumerate().map(|(i, &id)| (id, i)).collect();

    let mut tables: BTreeMap<NodeId, TablePipe> = BTreeMap::new();
    for n in nodes {
        if let NodeKind::LutRead { lut } = n.kind {
            let depth = design.luts()[lut].read_latency.saturating_sub(1) as usize;
            tables.insert(
                n.id,
                TablePipe {
                    regs: VecDeque::from(vec![SignalValue::default(); depth]),
                },
            );
        }
    }

    let zero = SignalValue::default();
    let mut columns: Vec<Vec<SignalValue>> = vec![Vec::with_capacity(cycles); nodes.len()];
    let mut prev: Vec<SignalValue> = vec![zero; nodes.len()];
    let mut cur: Vec<SignalValue> = vec![zero; nodes.len()];

    #[allow(clippy::needless_range_loop)]
    for t in 0..cycles {
        for n in nodes {
            let cc = n.cc();
            let op = |i: usize| cur[n.operands[i].0];
            let v = match n.kind {
                NodeKind::Input => stimulus[input_slot[&n.id]][t],
                NodeKind::Constant { value, integer } => SignalValue::new(value, integer, cc),
                NodeKind::RegisterAssign | NodeKind::Buffer { .. } => {
                    if t == 0 {
                        zero
                    } else {
                        let p = prev[n.operands[0].0];
                        SignalValue::new(p.float_value, p.integer_value, cc)
                    }
                }
                NodeKind::LutRead { lut } => {
                    let spec = &design.luts()[lut];
                    let fetched = if t == 0 {
                        zero
                    } else {
                        let addr = prev[n.operands[0].0];
                        lookup(spec, addr).unwrap_or_else(|| {
                            violations.push(Violation {
                                cycle: t,
                                node: n.name.clone(),
                                kind: ViolationKind::AddressOutOfRange,
                                value: addr.integer_value as f64,
                            });
                            zero
                        })
                    };
                    let pipe = tables.get_mut(&n.id).expect("table pipe");
                    if pipe.regs.is_empty() {
                        fetched
                    } else {
                        pipe.regs.push_back(fetched);
                        pipe.regs.pop_front().expect("non-empty")
                    }
                }
                NodeKind::Add => {
                    let (a, b) = (op(0), op(1));
                    SignalValue::new(
                        a.float_value + b.float_value,
                        a.integer_value + b.integer_value,
                        cc,
                    )
                }
                NodeKind::Sub => {
                    let (a, b) = (op(0), op(1));
                    SignalValue::new(
                        a.float_value - b.float_value,
                        a.integer_value - b.integer_value,
                        cc,
                    )
                }
                NodeKind::Mul => {
                    let (a, b) = (op(0), op(1));
                    SignalValue::new(
                        a.float_value * b.float_value,
                        a.integer_value * b.integer_value,
                        cc,
                    )
                }
                NodeKind::LeftShift { amount } => {
                    let a = op(0);
                    SignalValue::new(a.float_value, a.integer_value << amount, cc)
                }
                NodeKind::RightShift { amount } => {
                    let a = op(0);
                    SignalValue::new(a.float_value, a.integer_value >> amount.min(63), cc)
                }
                NodeKind::Compare { op: cmp } => {
                    let (a, b) = (op(0), op(1));
                    let int = cmp.eval(a.integer_value, b.integer_value);
                    let float = cmp.eval(a.float_value, b.float_value);
                    SignalValue::new(f64::from(u8::from(float)), i64::from(int), cc)
                }
                NodeKind::Select => {
                    let (c, a, b) = (op(0), op(1), op(2));
                    let int = if c.integer_value != 0 { a } else { b };
                    let float = if c.float_value != 0.0 { a } else { b };
                    SignalValue::new(float.float_value, int.integer_value, cc)
                }
            };
            if !n.fmt.int_range().contains(v.integer_value) {
                violations.push(Violation {
                    cycle: t,
                    node: n.name.clone(),
                    kind: ViolationKind::WidthOverflow,
                    value: v.integer_value as f64,
                });
            }
            cur[n.id.0] = v;
        }
        for (col, v) in columns.iter_mut().zip(&cur) {
            col.push(*v);
        }
        std::mem::swap(&mut prev, &mut cur);
    }

    Ok(Trace {
        columns,
        stages: nodes.iter().map(|n| n.stage).collect(),
        outputs: design.outputs().to_vec(),
        vectors: inputs.len(),
        latency,
        violations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub low: f64,
    pub high: f64,
    pub counts: Vec<u64>,
}

/// Statistics of `real_value - float_value` for one output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrecisionReport {
    pub output: String,
    pub samples: usize,
    pub rms: f64,
    pub mean: f64,
    pub std_dev: f64,
    pub max_abs: f64,
    /// Real value of one integer count of the output.
    pub lsb: f64,
    pub histogram: Histogram,
}

pub const HISTOGRAM_BINS: usize = 40;

/// Precision of `output`: the spread of the integer path's real value
/// around the float path over every valid (non warm-up) cycle.
pub fn precision_report(trace: &Trace, design: &Design, output: &str) -> Result<PrecisionReport> {
    let id = trace.output_node(output)?;
    let lsb = 1.0 / design.node(id).cc();
    let diffs: Vec<f64> = trace
        .output(output)?
        .iter()
        .map(|v| v.real_value - v.float_value)
        .collect();
    if diffs.is_empty() {
        return Err(Error::UnknownOutput(format!("{output} (empty trace)")));
    }
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let rms = (diffs.iter().map(|d| d * d).sum::<f64>() / n).sqrt();
    let std_dev = (diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n).sqrt();
    let max_abs = diffs.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let half = if max_abs > 0.0 { max_abs } else { lsb };
    let width = 2.0 * half / HISTOGRAM_BINS as f64;
    let mut counts = vec![0u64; HISTOGRAM_BINS];
    for d in &diffs {
        let bin = (((d + half) / width) as usize).min(HISTOGRAM_BINS - 1);
        counts[bin] += 1;
    }
    Ok(PrecisionReport {
        output: output.to_string(),
        samples: diffs.len(),
        rms,
        mean,
        std_dev,
        max_abs,
        lsb,
        histogram: Histogram {
            low: -half,
            high: half,
            counts,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ResourceEstimate {
    pub latency: u32,
    pub dsp: usize,
    pub bram_bits: u64,
    pub register_bits: u64,
    pub ramb36: u64,
    pub ramb18: u64,
}

/// Coarse resource count: one DSP per multiplier, table bits, and the
/// widths of every register and delay-line tap.
pub fn resource_estimate(design: &Design) -> ResourceEstimate {
    let dsp = design.mul_nodes().count();
    let bram_bits = design.luts().iter().map(LutSpec::bits).sum();
    let register_bits = design
        .nodes()
        .iter()
        .filter(|n| matches!(n.kind, NodeKind::RegisterAssign | NodeKind::Buffer { .. }))
        .map(|n| n.width() as u64)
        .sum();
    let blocks = design
        .luts()
        .iter()
        .map(bram_estimate)
        .fold(BramEstimate::default(), |a, b| a + b);
    ResourceEstimate {
        latency: design.latency(),
        dsp,
        bram_bits,
        register_bits,
        ramb36: blocks.ramb36,
        ramb18: blocks.ramb18,
    }
}

/// Nodes worth exporting: named signals, not delay-line taps.
fn exported(design: &Design) -> impl Iterator<Item = NodeId> + '_ {
    design
        .nodes()
        .iter()
        .filter(|n| {
            matches!(
                n.kind,
                NodeKind::Input | NodeKind::RegisterAssign | NodeKind::LutRead { .. }
            )
        })
        .map(|n| n.id)
}

/// Write `cycle,node,float,integer,real` rows: for each input vector, every
/// named signal at the cycle it holds that vector's value.
pub fn write_trace_csv<W: Write>(design: &Design, trace: &Trace, mut out: W) -> std::io::Result<()> {
    writeln!(out, "cycle,node,float,integer,real")?;
    let ids: Vec<NodeId> = exported(design).collect();
    for v in 0..trace.vector_count() {
        for &id in &ids {
            let node = design.node(id);
            let cycle = v + node.stage as usize;
            let s = trace.value(id, cycle);
            writeln!(
                out,
                "{cycle},{},{},{},{}",
                node.name, s.float_value, s.integer_value, s.real_value
            )?;
        }
    }
    Ok(())
}

/// JSON document with one precision report per output.
pub fn precision_json(design: &Design, trace: &Trace) -> Result<String> {
    let reports = design
        .outputs()
        .iter()
        .map(|(name, _)| precision_report(trace, design, name))
        .collect::<Result<Vec<_>>>()?;
    Ok(serde_json::to_string_pretty(&reports).expect("serializable") + "\n")
}

pub fn resources_json(design: &Design) -> String {
    serde_json::to_string_pretty(&resource_estimate(design)).expect("serializable") + "\n"
}
