// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId, NodeKind, SignalNode};

struct Rebuild<'a> {
    old: &'a Graph,
    new: Graph,
    /// old id -> new id for nodes copied one-to-one
    map: Vec<Option<NodeId>>,
    /// (old combinational id, stage) -> rebuilt node
    memo: HashMap<(NodeId, u32), NodeId>,
    /// new source id -> its delay-line taps, shallowest first
    taps: HashMap<NodeId, Vec<NodeId>>,
}

impl Rebuild<'_> {
    fn push(&mut self, mut node: SignalNode) -> NodeId {
        let id = NodeId(self.new.nodes.len());
        node.id = id;
        self.new.nodes.push(node);
        id
    }

    fn copy(&mut self, old_id: NodeId, operands: Vec<NodeId>) -> NodeId {
        let mut node = self.old.node(old_id).clone();
        node.operands = operands;
        let id = self.push(node);
        self.map[old_id.0] = Some(id);
        id
    }

    fn mapped(&self, old_id: NodeId) -> NodeId {
        self.map[old_id.0].expect("operand precedes its consumer")
    }

    /// Delay `source` by `depth` cycles through its shared delay line,
    /// extending the line when needed.
    fn tap(&mut self, source: NodeId, depth: u32) -> NodeId {
        debug_assert!(depth > 0);
        let src = self.new.node(source).clone();
        let have = self.taps.get(&source).map_or(0, Vec::len) as u32;
        for tap in have..depth {
            let prev = if tap == 0 {
                source
            } else {
                self.taps[&source][tap as usize - 1]
            };
            let node = SignalNode {
                id: NodeId(0),
                name: format!("{}_b", src.name),
                kind: NodeKind::Buffer { source, tap },
                operands: vec![prev],
                fmt: src.fmt,
                range: src.range,
                stage: src.stage + tap + 1,
                alignment_error: 0.0,
                boolean: src.boolean,
                dsp: None,
            };
            let id = self.push(node);
            self.taps.entry(source).or_default().push(id);
        }
        self.taps[&source][depth as usize - 1]
    }

    /// Rebuild the expression rooted at `old_id` so that every leaf signal
    /// is read at `stage`.
    fn retime(&mut self, old_id: NodeId, stage: u32) -> NodeId {
        let node = self.old.node(old_id);
        if node.is_constant() {
            return self.mapped(old_id);
        }
        if node.is_signal() {
            let src = self.mapped(old_id);
            let have = node.stage;
            assert!(have <= stage, "leaf `{}` is later than its consumer", node.name);
            return if have == stage {
                src
            } else {
                self.tap(src, stage - have)
            };
        }
        if let Some(&id) = self.memo.get(&(old_id, stage)) {
            return id;
        }
        let operands: Vec<NodeId> = node
            .operands
            .clone()
            .into_iter()
            .map(|o| self.retime(o, stage))
            .collect();
        let mut rebuilt = node.clone();
        rebuilt.operands = operands;
        rebuilt.stage = stage;
        let id = self.push(rebuilt);
        self.memo.insert((old_id, stage), id);
        id
    }
}

/// Give every operand of every expression the same stage by routing
/// lagging leaf signals through delay lines (one shared line per source),
/// and align all outputs to the design latency.
pub fn insert_buffers(graph: Graph) -> Result<Graph> {
    let mut rb = Rebuild {
        old: &graph,
        new: Graph {
            name: graph.name.clone(),
            luts: graph.luts.clone(),
            ..Graph::default()
        },
        map: vec![None; graph.nodes.len()],
        memo: HashMap::new(),
        taps: HashMap::new(),
    };

    for node in graph.nodes() {
        match node.kind {
            NodeKind::Input => {
                let id = rb.copy(node.id, vec![]);
                rb.new.inputs.push(id);
            }
            NodeKind::Constant { .. } => {
                rb.copy(node.id, vec![]);
            }
            NodeKind::RegisterAssign => {
                let root = node.operands[0];
                let root = rb.retime(root, node.stage - 1);
                rb.copy(node.id, vec![root]);
            }
            NodeKind::LutRead { .. } => {
                let addr = rb.mapped(node.operands[0]);
                rb.copy(node.id, vec![addr]);
            }
            NodeKind::Buffer { .. } => {
                let ops = node.operands.iter().map(|&o| rb.mapped(o)).collect();
                rb.copy(node.id, ops);
            }
            // materialized on demand by `retime`
            _ => {}
        }
    }

    let latency = graph
        .outputs
        .iter()
        .map(|&(_, id)| graph.node(id).stage)
        .max()
        .unwrap_or(0);
    for (name, old_id) in &graph.outputs {
        let src = rb.mapped(*old_id);
        let stage = rb.new.node(src).stage;
        let id = if stage < latency {
            rb.tap(src, latency - stage)
        } else {
            src
        };
        rb.new.outputs.push((name.clone(), id));
    }
    Ok(rb.new)
}

/// Validate the stage assignment of a buffered graph and return its
/// latency (the largest output stage).
pub fn schedule(graph: &Graph) -> Result<u32> {
    for node in graph.nodes() {
        if node.operands.iter().any(|o| o.0 >= node.id.0) {
            return Err(Error::Cycle(node.name.clone()));
        }
        let timed: Vec<u32> = node
            .operands
            .iter()
            .map(|&o| graph.node(o))
            .filter(|o| !o.is_constant())
            .map(|o| o.stage)
            .collect();
        let expected = match node.kind {
            NodeKind::Input | NodeKind::Constant { .. } => continue,
            NodeKind::RegisterAssign | NodeKind::Buffer { .. } => timed.first().map_or(1, |s| s + 1),
            NodeKind::LutRead { lut } => timed[0] + graph.luts[lut].read_latency,
            _ => match timed.first() {
                Some(&s) => s,
                None => continue,
            },
        };
        let aligned = timed.windows(2).all(|w| w[0] == w[1]);
        if !aligned || node.stage != expected {
            return Err(Error::Placement(format!(
                "node `{}` has unaligned operand stages {timed:?} (stage {})",
                node.name, node.stage
            )));
        }
    }
    Ok(graph
        .outputs
        .iter()
        .map(|&(_, id)| graph.node(id).stage)
        .max()
        .unwrap_or(0))
}
