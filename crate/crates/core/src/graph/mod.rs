// SPDX-License-Identifier: Apache-2.0

//! Dataflow IR for feed-forward pipelines.
//!
//! A design is built with [`DesignBuilder`]: arithmetic, shift, compare and
//! select operators create combinational nodes, and
//! [`DesignBuilder::clocked_assign`] registers an expression one clock cycle
//! after its latest leaf. [`DesignBuilder::finish`] inserts the delay lines
//! that bring every operand of an expression to the same stage and freezes
//! the result into an immutable [`Design`].

mod builder;
mod schedule;

pub use builder::{alignment, Alignment, DesignBuilder, DSP_NARROW_WIDTH, DSP_WIDE_WIDTH};
pub use schedule::{insert_buffers, schedule};

use std::fmt;

use serde::Serialize;

use crate::fxp::{FixedPointFormat, IntRange, Signedness};
use crate::lut::LutSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct NodeId(pub usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "%{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum CompareOp {
    Eq,
    Ne,
    Ge,
    Gt,
    Le,
    Lt,
    And,
    Or,
}

impl CompareOp {
    pub fn is_logical(self) -> bool {
        matches!(self, CompareOp::And | CompareOp::Or)
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CompareOp::Eq => "==",
            CompareOp::Ne => "!=",
            CompareOp::Ge => ">=",
            CompareOp::Gt => ">",
            CompareOp::Le => "<=",
            CompareOp::Lt => "<",
            CompareOp::And => "&&",
            CompareOp::Or => "||",
        }
    }

    /// Logical operators treat any non-zero operand as true.
    pub fn eval<T: PartialOrd + Default>(self, a: T, b: T) -> bool {
        let zero = T::default();
        match self {
            CompareOp::Eq => a == b,
            CompareOp::Ne => a != b,
            CompareOp::Ge => a >= b,
            CompareOp::Gt => a > b,
            CompareOp::Le => a <= b,
            CompareOp::Lt => a < b,
            CompareOp::And => a != zero && b != zero,
            CompareOp::Or => a != zero || b != zero,
        }
    }
}

impl std::str::FromStr for CompareOp {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "==" => CompareOp::Eq,
            "!=" => CompareOp::Ne,
            ">=" => CompareOp::Ge,
            ">" => CompareOp::Gt,
            "<=" => CompareOp::Le,
            "<" => CompareOp::Lt,
            "&&" => CompareOp::And,
            "||" => CompareOp::Or,
            other => return Err(format!("unknown comparison `{other}`")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NodeKind {
    Input,
    Constant { value: f64, integer: i64 },
    Add,
    Sub,
    Mul,
    LeftShift { amount: u32 },
    RightShift { amount: u32 },
    Compare { op: CompareOp },
    Select,
    LutRead { lut: usize },
    /// Tap `tap` of the delay line on `source`; delays `source` by `tap + 1` cycles.
    Buffer { source: NodeId, tap: u32 },
    RegisterAssign,
}

impl NodeKind {
    pub fn label(&self) -> &'static str {
        match self {
            NodeKind::Input => "input",
            NodeKind::Constant { .. } => "constant",
            NodeKind::Add => "add",
            NodeKind::Sub => "sub",
            NodeKind::Mul => "mul",
            NodeKind::LeftShift { .. } => "left_shift",
            NodeKind::RightShift { .. } => "right_shift",
            NodeKind::Compare { .. } => "compare",
            NodeKind::Select => "select",
            NodeKind::LutRead { .. } => "lut_read",
            NodeKind::Buffer { .. } => "buffer",
            NodeKind::RegisterAssign => "register_assign",
        }
    }
}

/// Operand widths actually presented to the DSP multiplier, after the
/// reduction shifts, as `(wide, narrow)` in the multiplier's signedness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DspOperands {
    pub widths: (u32, u32),
    pub shifts: (u32, u32),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignalNode {
    pub id: NodeId,
    pub name: String,
    pub kind: NodeKind,
    pub operands: Vec<NodeId>,
    pub fmt: FixedPointFormat,
    pub range: IntRange,
    pub stage: u32,
    /// Relative scale mismatch left after conversion-constant alignment.
    pub alignment_error: f64,
    pub boolean: bool,
    pub dsp: Option<DspOperands>,
}

impl SignalNode {
    /// Holds a value in a named VHDL signal: inputs, registers, delay-line
    /// taps and table outputs.
    pub fn is_signal(&self) -> bool {
        matches!(
            self.kind,
            NodeKind::Input
                | NodeKind::RegisterAssign
                | NodeKind::Buffer { .. }
                | NodeKind::LutRead { .. }
        )
    }

    pub fn is_sequential(&self) -> bool {
        matches!(
            self.kind,
            NodeKind::RegisterAssign | NodeKind::Buffer { .. } | NodeKind::LutRead { .. }
        )
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, NodeKind::Constant { .. })
    }

    pub fn is_combinational(&self) -> bool {
        !self.is_signal() && !self.is_constant()
    }

    pub fn width(&self) -> u32 {
        self.fmt.bit_width
    }

    pub fn signedness(&self) -> Signedness {
        self.fmt.signedness
    }

    pub fn cc(&self) -> f64 {
        self.fmt.conversion_constant
    }
}

/// Node storage shared by the builder and the frozen design.
#[derive(Clone, Default)]
pub struct Graph {
    pub(crate) name: String,
    pub(crate) nodes: Vec<SignalNode>,
    pub(crate) inputs: Vec<NodeId>,
    pub(crate) outputs: Vec<(String, NodeId)>,
    pub(crate) luts: Vec<LutSpec>,
}

impl Graph {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn nodes(&self) -> &[SignalNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &SignalNode {
        &self.nodes[id.0]
    }

    pub fn inputs(&self) -> &[NodeId] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[(String, NodeId)] {
        &self.outputs
    }

    pub fn luts(&self) -> &[LutSpec] {
        &self.luts
    }

    pub fn find(&self, name: &str) -> Option<NodeId> {
        self.nodes
            .iter()
            .find(|n| n.is_signal() && !matches!(n.kind, NodeKind::Buffer { .. }) && n.name == name)
            .map(|n| n.id)
    }
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Graph")
            .field("name", &self.name)
            .field("nodes", &self.nodes.len())
            .field("inputs", &self.inputs)
            .field("outputs", &self.outputs)
            .field("luts", &self.luts.len())
            .finish()
    }
}

/// A scheduled, buffered, immutable design.
#[derive(Debug, Clone)]
pub struct Design {
    graph: Graph,
    latency: u32,
}

impl Design {
    pub(crate) fn new(graph: Graph, latency: u32) -> Self {
        Design { graph, latency }
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn name(&self) -> &str {
        self.graph.name()
    }

    pub fn nodes(&self) -> &[SignalNode] {
        self.graph.nodes()
    }

    pub fn node(&self, id: NodeId) -> &SignalNode {
        self.graph.node(id)
    }

    pub fn inputs(&self) -> &[NodeId] {
        self.graph.inputs()
    }

    pub fn outputs(&self) -> &[(String, NodeId)] {
        self.graph.outputs()
    }

    pub fn output(&self, name: &str) -> Option<NodeId> {
        self.graph
            .outputs
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, id)| *id)
    }

    pub fn luts(&self) -> &[LutSpec] {
        self.graph.luts()
    }

    pub fn find(&self, name: &str) -> Option<NodeId> {
        self.graph.find(name)
    }

    /// Clock cycles from input presentation to output.
    pub fn latency(&self) -> u32 {
        self.latency
    }

    pub fn mul_nodes(&self) -> impl Iterator<Item = &SignalNode> {
        self.nodes().iter().filter(|n| n.kind == NodeKind::Mul)
    }

    /// Operands of a node, excluding constants (which carry no stage).
    pub fn timed_operands<'a>(&'a self, node: &'a SignalNode) -> impl Iterator<Item = &'a SignalNode> {
        node.operands
            .iter()
            .map(move |&o| self.node(o))
            .filter(|o| !o.is_constant())
    }
}
