// SPDX-License-Identifier: Apache-2.0

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::fxp::{FixedPointFormat, IntRange, Signedness, WideRange, MAX_BIT_WIDTH};
use crate::graph::{
    insert_buffers, schedule, CompareOp, Design, DspOperands, Graph, NodeId, NodeKind, SignalNode,
};
use crate::vhdl::check_identifier;

/// Operand budget of one DSP slice: a 25 x 18 bit signed multiplier.
pub const DSP_WIDE_WIDTH: u32 = 25;
pub const DSP_NARROW_WIDTH: u32 = 18;

/// Default lookup-table depth budget, in entries.
pub const DEFAULT_LUT_BUDGET: u64 = 1 << 16;

/// How two conversion constants are brought together by a power-of-two
/// shift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alignment {
    /// `k > 0`: the second operand is shifted left by `k`.
    /// `k < 0`: the first operand is shifted left by `-k`.
    pub shift: i32,
    /// Constant carried by the aligned pair (the unshifted operand's).
    pub reference_cc: f64,
    /// `|cc_shifted / cc_reference - 1|`.
    pub epsilon: f64,
}

/// `k = round(log2(cc_a / cc_b))`; the operand with the smaller constant is
/// widened by a left shift.
pub fn alignment(cc_a: f64, cc_b: f64) -> Alignment {
    let shift = (cc_a / cc_b).log2().round() as i32;
    if shift >= 0 {
        let shifted = cc_b * 2f64.powi(shift);
        Alignment {
            shift,
            reference_cc: cc_a,
            epsilon: (shifted / cc_a - 1.0).abs(),
        }
    } else {
        let shifted = cc_a * 2f64.powi(-shift);
        Alignment {
            shift,
            reference_cc: cc_b,
            epsilon: (shifted / cc_b - 1.0).abs(),
        }
    }
}

/// Where a node sits inside a clocked expression tree.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Position {
    Root,
    Operand,
    Condition,
}

/// Mutable design under construction.
pub struct DesignBuilder {
    graph: Graph,
    names: HashSet<String>,
    lut_budget: u64,
}

impl DesignBuilder {
    pub fn new(name: &str) -> Result<Self> {
        check_identifier(name)?;
        Ok(DesignBuilder {
            graph: Graph {
                name: name.to_string(),
                ..Graph::default()
            },
            names: HashSet::new(),
            lut_budget: DEFAULT_LUT_BUDGET,
        })
    }

    /// Maximum number of entries a lookup table may hold.
    pub fn with_lut_budget(mut self, entries: u64) -> Self {
        self.lut_budget = entries;
        self
    }

    pub fn lut_budget(&self) -> u64 {
        self.lut_budget
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn node(&self, id: NodeId) -> Result<&SignalNode> {
        self.graph.nodes.get(id.0).ok_or(Error::UnknownNode(id.0))
    }

    pub(crate) fn reserve_name(&mut self, name: &str) -> Result<()> {
        check_identifier(name)?;
        // VHDL identifiers are case-insensitive
        if !self.names.insert(name.to_ascii_lowercase()) {
            return Err(Error::DuplicateName(name.to_string()));
        }
        Ok(())
    }

    pub(crate) fn push_lut(&mut self, spec: crate::lut::LutSpec) -> usize {
        self.graph.luts.push(spec);
        self.graph.luts.len() - 1
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn push(
        &mut self,
        name: Option<&str>,
        kind: NodeKind,
        operands: Vec<NodeId>,
        fmt: FixedPointFormat,
        range: IntRange,
        stage: u32,
        boolean: bool,
    ) -> NodeId {
        let id = NodeId(self.graph.nodes.len());
        let name = match name {
            Some(n) => n.to_string(),
            None => format!("{}_{}", kind.label(), id.0),
        };
        self.graph.nodes.push(SignalNode {
            id,
            name,
            kind,
            operands,
            fmt,
            range,
            stage,
            alignment_error: 0.0,
            boolean,
            dsp: None,
        });
        id
    }

    fn push_derived(
        &mut self,
        kind: NodeKind,
        operands: Vec<NodeId>,
        range: IntRange,
        cc: f64,
    ) -> NodeId {
        let stage = self.stage_of(&operands);
        let fmt = FixedPointFormat::derived(range.min_width(), range.signedness(), cc);
        self.push(None, kind, operands, fmt, range, stage, false)
    }

    fn stage_of(&self, operands: &[NodeId]) -> u32 {
        operands
            .iter()
            .map(|&o| self.graph.node(o))
            .filter(|n| !n.is_constant())
            .map(|n| n.stage)
            .max()
            .unwrap_or(0)
    }

    fn numeric(&self, id: NodeId, op: &str) -> Result<&SignalNode> {
        let n = self.node(id)?;
        if n.boolean {
            return Err(Error::TypeMismatch(format!(
                "`{}` is boolean and cannot be an operand of {op}",
                n.name
            )));
        }
        Ok(n)
    }

    fn boolean(&self, id: NodeId, op: &str) -> Result<&SignalNode> {
        let n = self.node(id)?;
        if !n.boolean {
            return Err(Error::TypeMismatch(format!(
                "`{}` is numeric but {op} needs a boolean",
                n.name
            )));
        }
        Ok(n)
    }

    /// Declare a pipeline input at stage 0. Its tracked range is the full
    /// representable range of `fmt`.
    pub fn input(&mut self, name: &str, fmt: FixedPointFormat) -> Result<NodeId> {
        self.reserve_name(name)?;
        let range = fmt.int_range();
        let id = self.push(Some(name), NodeKind::Input, vec![], fmt, range, 0, false);
        self.graph.inputs.push(id);
        Ok(id)
    }

    /// Literal coefficient quantized at `bit_width` bits with the largest
    /// power-of-two conversion constant that keeps it representable.
    pub fn constant(&mut self, value: f64, bit_width: u32) -> Result<NodeId> {
        if !value.is_finite() {
            return Err(Error::InvalidRange {
                min: value,
                max: value,
            });
        }
        if !(1..=MAX_BIT_WIDTH).contains(&bit_width) {
            return Err(Error::BitWidth {
                width: bit_width,
                min: 1,
                max: MAX_BIT_WIDTH,
            });
        }
        if value == 0.0 {
            return self.constant_with(0, 1.0, 0.0);
        }
        let limit = if value < 0.0 {
            (1i64 << (bit_width - 1)) as f64
        } else {
            ((1i64 << bit_width) - 1) as f64
        };
        let exponent = (limit / value.abs()).log2().floor() as i32;
        let cc = 2f64.powi(exponent);
        let fmt = FixedPointFormat::derived(bit_width, Signedness::of_range(value.signum() as i64), cc);
        let integer = fmt.quantize(value);
        self.constant_with(integer, cc, value)
    }

    /// Constant given directly as an integer count and conversion constant.
    pub fn constant_raw(&mut self, integer: i64, cc: f64) -> Result<NodeId> {
        self.constant_with(integer, cc, integer as f64 / cc)
    }

    fn constant_with(&mut self, integer: i64, cc: f64, value: f64) -> Result<NodeId> {
        let range = IntRange::point(integer);
        if range.min_width() > MAX_BIT_WIDTH {
            return Err(Error::WidthOverflow {
                op: "constant",
                width: range.min_width(),
                max: MAX_BIT_WIDTH,
            });
        }
        let fmt = FixedPointFormat::derived(range.min_width(), range.signedness(), cc);
        Ok(self.push(
            None,
            NodeKind::Constant { value, integer },
            vec![],
            fmt,
            range,
            0,
            false,
        ))
    }

    /// Multiply by `2^amount` in integer counts while keeping the real value:
    /// the conversion constant scales by the same factor.
    pub fn shl(&mut self, x: NodeId, amount: u32) -> Result<NodeId> {
        let n = self.numeric(x, "a shift")?.clone();
        if amount == 0 {
            return Ok(x);
        }
        let cc = n.cc() * 2f64.powi(amount as i32);
        if let NodeKind::Constant { value, integer } = n.kind {
            let shifted = WideRange::new((integer as i128) << amount, (integer as i128) << amount);
            let r = shifted.narrow("left_shift")?;
            return self.constant_with(r.min, cc, value);
        }
        let range = n.range.shl(amount).narrow("left_shift")?;
        Ok(self.push_derived(NodeKind::LeftShift { amount }, vec![x], range, cc))
    }

    /// Drop `amount` least-significant bits (flooring).
    pub fn shr(&mut self, x: NodeId, amount: u32) -> Result<NodeId> {
        let n = self.numeric(x, "a shift")?.clone();
        if amount == 0 {
            return Ok(x);
        }
        let cc = n.cc() / 2f64.powi(amount as i32);
        if let NodeKind::Constant { value, integer } = n.kind {
            return self.constant_with(integer >> amount.min(63), cc, value);
        }
        let range = n.range.shr(amount);
        Ok(self.push_derived(NodeKind::RightShift { amount }, vec![x], range, cc))
    }

    /// Bring two operands to a common conversion constant. Returns the
    /// (possibly shifted) operands and the alignment applied.
    pub fn align_constants(&mut self, a: NodeId, b: NodeId) -> Result<(NodeId, NodeId, Alignment)> {
        let cc_a = self.numeric(a, "alignment")?.cc();
        let cc_b = self.numeric(b, "alignment")?.cc();
        let al = alignment(cc_a, cc_b);
        if al.shift > 0 {
            let b2 = self.shl(b, al.shift as u32)?;
            Ok((a, b2, al))
        } else if al.shift < 0 {
            let a2 = self.shl(a, (-al.shift) as u32)?;
            Ok((a2, b, al))
        } else {
            Ok((a, b, al))
        }
    }

    fn add_sub(&mut self, a: NodeId, b: NodeId, kind: NodeKind) -> Result<NodeId> {
        let op = kind.label();
        self.numeric(a, op)?;
        self.numeric(b, op)?;
        let (a, b, al) = self.align_constants(a, b)?;
        let ra = self.graph.node(a).range;
        let rb = self.graph.node(b).range;
        let range = match kind {
            NodeKind::Add => ra.add(&rb),
            _ => ra.sub(&rb),
        }
        .narrow(op)?;
        let id = self.push_derived(kind, vec![a, b], range, al.reference_cc);
        self.graph.nodes[id.0].alignment_error = al.epsilon;
        Ok(id)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.add_sub(a, b, NodeKind::Add)
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.add_sub(a, b, NodeKind::Sub)
    }

    /// `0 - x`.
    pub fn neg(&mut self, x: NodeId) -> Result<NodeId> {
        let cc = self.numeric(x, "neg")?.cc();
        let zero = self.constant_raw(0, cc)?;
        self.sub(zero, x)
    }

    /// Product on one DSP slice. The operand with the wider effective width
    /// is right-shifted until it fits 25 bits, the other until it fits 18;
    /// each dropped bit halves that operand's conversion constant.
    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let na = self.numeric(a, "mul")?.clone();
        let nb = self.numeric(b, "mul")?.clone();
        let signed_domain = na.range.min < 0 || nb.range.min < 0;
        let eff = |r: &IntRange| effective_width(r, signed_domain);
        let a_is_wide = eff(&na.range) >= eff(&nb.range);
        let (budget_a, budget_b) = if a_is_wide {
            (DSP_WIDE_WIDTH, DSP_NARROW_WIDTH)
        } else {
            (DSP_NARROW_WIDTH, DSP_WIDE_WIDTH)
        };
        let sa = reduction_shift(&na.range, budget_a, signed_domain);
        let sb = reduction_shift(&nb.range, budget_b, signed_domain);
        let square = a == b;
        let a2 = self.shr(a, sa)?;
        let b2 = self.shr(b, sb)?;
        let ra = self.graph.node(a2).range;
        let rb = self.graph.node(b2).range;
        let range = if square {
            same_source_product(&na.range, sa, sb)
        } else {
            ra.mul(&rb)
        }
        .narrow("mul")?;
        let cc = self.graph.node(a2).cc() * self.graph.node(b2).cc();
        let id = self.push_derived(NodeKind::Mul, vec![a2, b2], range, cc);
        let (wa, wb) = (eff(&ra), eff(&rb));
        self.graph.nodes[id.0].dsp = Some(if a_is_wide {
            DspOperands {
                widths: (wa, wb),
                shifts: (sa, sb),
            }
        } else {
            DspOperands {
                widths: (wb, wa),
                shifts: (sb, sa),
            }
        });
        Ok(id)
    }

    /// Boolean comparison. Relational operators align numeric operands
    /// first; `&&` and `||` take boolean operands.
    pub fn compare(&mut self, a: NodeId, op: CompareOp, b: NodeId) -> Result<NodeId> {
        let (a, b, eps) = if op.is_logical() {
            self.boolean(a, op.symbol())?;
            self.boolean(b, op.symbol())?;
            (a, b, 0.0)
        } else {
            self.numeric(a, op.symbol())?;
            self.numeric(b, op.symbol())?;
            let (a, b, al) = self.align_constants(a, b)?;
            (a, b, al.epsilon)
        };
        let stage = self.stage_of(&[a, b]);
        let id = self.push(
            None,
            NodeKind::Compare { op },
            vec![a, b],
            FixedPointFormat::boolean(),
            IntRange::new(0, 1),
            stage,
            true,
        );
        self.graph.nodes[id.0].alignment_error = eps;
        Ok(id)
    }

    /// `cond ? then_val : else_val`, with the branches aligned to a common
    /// conversion constant.
    pub fn select(&mut self, cond: NodeId, then_val: NodeId, else_val: NodeId) -> Result<NodeId> {
        self.boolean(cond, "select")?;
        let tb = self.node(then_val)?.boolean;
        let eb = self.node(else_val)?.boolean;
        if tb != eb {
            return Err(Error::TypeMismatch(
                "select branches must both be numeric or both boolean".into(),
            ));
        }
        if tb {
            let stage = self.stage_of(&[cond, then_val, else_val]);
            return Ok(self.push(
                None,
                NodeKind::Select,
                vec![cond, then_val, else_val],
                FixedPointFormat::boolean(),
                IntRange::new(0, 1),
                stage,
                true,
            ));
        }
        let (t, e, al) = self.align_constants(then_val, else_val)?;
        let range = self.graph.node(t).range.union(&self.graph.node(e).range);
        let id = self.push_derived(NodeKind::Select, vec![cond, t, e], range, al.reference_cc);
        self.graph.nodes[id.0].alignment_error = al.epsilon;
        Ok(id)
    }

    /// Register `expr` into a new named signal one clock cycle after its
    /// latest leaf.
    pub fn clocked_assign(&mut self, name: &str, expr: NodeId) -> Result<NodeId> {
        self.node(expr)?;
        self.check_placement(expr, Position::Root)?;
        self.reserve_name(name)?;
        self.clocked_assign_reserved(name, expr)
    }

    pub(crate) fn clocked_assign_reserved(&mut self, name: &str, expr: NodeId) -> Result<NodeId> {
        let e = self.graph.node(expr).clone();
        let leaf_stage = if e.is_constant() { 0 } else { e.stage };
        Ok(self.push(
            Some(name),
            NodeKind::RegisterAssign,
            vec![expr],
            e.fmt,
            e.range,
            leaf_stage + 1,
            e.boolean,
        ))
    }

    fn check_placement(&self, id: NodeId, pos: Position) -> Result<()> {
        let n = self.graph.node(id);
        match n.kind {
            NodeKind::Select => {
                if pos != Position::Root {
                    return Err(Error::Placement(format!(
                        "select `{}` must be the whole right-hand side of a clocked assignment",
                        n.name
                    )));
                }
                self.check_placement(n.operands[0], Position::Condition)?;
                self.check_placement(n.operands[1], Position::Operand)?;
                self.check_placement(n.operands[2], Position::Operand)
            }
            NodeKind::Compare { op } => {
                if pos == Position::Operand {
                    return Err(Error::Placement(format!(
                        "comparison `{}` can only be assigned, selected on, or combined with && / ||",
                        n.name
                    )));
                }
                let child = if op.is_logical() {
                    Position::Condition
                } else {
                    Position::Operand
                };
                for &o in &n.operands {
                    self.check_placement(o, child)?;
                }
                Ok(())
            }
            _ if n.is_combinational() => {
                for &o in &n.operands {
                    self.check_placement(o, Position::Operand)?;
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Expose a signal as a named design output.
    pub fn output(&mut self, name: &str, node: NodeId) -> Result<()> {
        let n = self.node(node)?;
        if !matches!(n.kind, NodeKind::Input | NodeKind::RegisterAssign) {
            return Err(Error::Placement(format!(
                "output `{name}` must be an input or a clocked signal, not a {}",
                n.kind.label()
            )));
        }
        let port = format!("{name}_out");
        check_identifier(&port)?;
        if self.graph.outputs.iter().any(|(o, _)| o.eq_ignore_ascii_case(name)) {
            return Err(Error::DuplicateName(name.to_string()));
        }
        self.graph.outputs.push((name.to_string(), node));
        Ok(())
    }

    /// Insert delay lines, schedule, and freeze.
    pub fn finish(self) -> Result<Design> {
        let DesignBuilder { graph, names, .. } = self;
        let graph = insert_buffers(graph)?;
        let mut seen = HashSet::new();
        for n in graph.nodes() {
            if let NodeKind::Buffer { tap: 0, .. } = n.kind {
                let lower = n.name.to_ascii_lowercase();
                if names.contains(&lower) || !seen.insert(lower) {
                    return Err(Error::DuplicateName(n.name.clone()));
                }
            }
        }
        for (out, _) in graph.outputs() {
            let port = format!("{out}_out");
            if names.contains(&port.to_ascii_lowercase()) {
                return Err(Error::DuplicateName(port));
            }
        }
        for &i in graph.inputs() {
            let port = format!("{}_in", graph.node(i).name).to_ascii_lowercase();
            if names.contains(&port) {
                return Err(Error::DuplicateName(port));
            }
        }
        let latency = schedule(&graph)?;
        Ok(Design::new(graph, latency))
    }
}

/// Width of an operand inside the multiplier: unsigned operands of a signed
/// product need one extra bit.
fn effective_width(r: &IntRange, signed_domain: bool) -> u32 {
    r.min_width() + u32::from(signed_domain && r.min >= 0)
}

fn reduction_shift(r: &IntRange, budget: u32, signed_domain: bool) -> u32 {
    (0..64)
        .find(|&s| effective_width(&r.shr(s), signed_domain) <= budget)
        .expect("a fully shifted operand fits any budget")
}

/// Range of `(x >> sa) * (x >> sb)` for `x` in `r`. Flooring shifts keep the
/// sign, so both factors share it and the product is never negative.
fn same_source_product(r: &IntRange, sa: u32, sb: u32) -> WideRange {
    let f = |v: i64| (v >> sa) as i128 * (v >> sb) as i128;
    let top = f(r.min).max(f(r.max));
    let bottom = if r.min <= 0 && r.max >= 0 {
        0
    } else if r.min > 0 {
        f(r.min)
    } else {
        f(r.max)
    };
    WideRange::new(bottom, top)
}
