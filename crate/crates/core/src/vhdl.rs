// SPDX-License-Identifier: Apache-2.0

//! VHDL rendering of a scheduled design.
//!
//! Registers, delay-line taps and table outputs become named signals;
//! combinational nodes are rendered inline inside the clocked assignment
//! that consumes them. All registers live in one `rising_edge` process with
//! no reset, relying on declaration defaults for initial values.
//!
//! Operand conversion follows numeric_std: an addition or subtraction is
//! evaluated at the width of its widest operand, so the first operand is
//! resized to the width the result needs and the rest are left bare when
//! they already share its signedness.
//!
//! Comparisons and selects use VHDL-2008 conditional assignments inside
//! the process. A lookup table is wired to a component placeholder named
//! `<entity>_<table>` with ports `clka`, `addra` and `douta`; generating
//! the memory itself from the coefficient file is left to vendor tools.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write;

use crate::error::{Error, Result};
use crate::graph::{CompareOp, Design, NodeId, NodeKind, SignalNode};
use crate::lut::emit_coe;

const RESERVED: &[&str] = &[
    "abs", "access", "after", "alias", "all", "and", "architecture", "array", "assert", "assume",
    "assume_guarantee", "attribute", "begin", "block", "body", "buffer", "bus", "case",
    "component", "configuration", "constant", "context", "cover", "default", "disconnect",
    "downto", "else", "elsif", "end", "entity", "exit", "fairness", "file", "for", "force",
    "function", "generate", "generic", "group", "guarded", "if", "impure", "in", "inertial",
    "inout", "is", "label", "library", "linkage", "literal", "loop", "map", "mod", "nand", "new",
    "next", "nor", "not", "null", "of", "on", "open", "or", "others", "out", "package", "parameter",
    "port", "postponed", "procedure", "process", "property", "protected", "pure", "range",
    "record", "register", "reject", "release", "rem", "report", "restrict", "restrict_guarantee",
    "return", "rol", "ror", "select", "sequence", "severity", "shared", "signal", "sla", "sll",
    "sra", "srl", "strong", "subtype", "then", "to", "transport", "type", "unaffected", "units",
    "until", "use", "variable", "vmode", "vprop", "vunit", "wait", "when", "while", "with", "xnor",
    "xor",
    // names the generated code relies on
    "ieee", "std", "work", "std_logic", "std_logic_1164", "std_logic_vector", "numeric_std",
    "signed", "unsigned", "resize", "shift_left", "shift_right", "to_signed", "to_unsigned",
    "rising_edge", "rtl",
];

/// Accept a basic VHDL identifier: a letter followed by letters, digits and
/// single underscores, not ending in an underscore, not a reserved word.
pub fn check_identifier(name: &str) -> Result<()> {
    let bytes = name.as_bytes();
    let valid = !bytes.is_empty()
        && bytes[0].is_ascii_alphabetic()
        && bytes.iter().all(|b| b.is_ascii_alphanumeric() || *b == b'_')
        && !name.contains("__")
        && !name.ends_with('_');
    if !valid {
        return Err(Error::InvalidIdentifier(name.to_string()));
    }
    if RESERVED.contains(&name.to_ascii_lowercase().as_str()) {
        return Err(Error::ReservedWord(name.to_string()));
    }
    Ok(())
}

/// Rendered pieces of one design.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DesignUnit {
    pub entity_name: String,
    pub declarations: Vec<String>,
    /// Array types and signals of the delay lines.
    pub buffer_type_decls: Vec<String>,
    pub sequential_statements: Vec<String>,
    pub full_text: String,
}

impl DesignUnit {
    pub fn new(design: &Design, clock_name: &str) -> Result<Self> {
        Ok(DesignUnit {
            entity_name: design.name().to_string(),
            declarations: declaration_lines(design),
            buffer_type_decls: buffer_lines(design),
            sequential_statements: sequential_lines(design),
            full_text: emit_entity(design, design.name(), clock_name)?,
        })
    }
}

fn type_name(signed: bool) -> &'static str {
    if signed {
        "signed"
    } else {
        "unsigned"
    }
}

fn vector_type(n: &SignalNode) -> String {
    format!("{}({} downto 0)", type_name(n.signedness().is_signed()), n.width() - 1)
}

/// Inputs read through a delay line only are not declared here; the entity
/// wrapper declares them separately.
fn read_directly(design: &Design) -> HashSet<NodeId> {
    let mut direct = HashSet::new();
    for n in design.nodes() {
        if matches!(n.kind, NodeKind::Buffer { .. }) {
            continue;
        }
        direct.extend(n.operands.iter().copied());
    }
    direct.extend(design.outputs().iter().map(|(_, id)| *id));
    direct
}

fn declared(design: &Design) -> impl Iterator<Item = &SignalNode> {
    let direct = read_directly(design);
    design.nodes().iter().filter(move |n| match n.kind {
        NodeKind::Input => direct.contains(&n.id),
        NodeKind::RegisterAssign | NodeKind::LutRead { .. } => true,
        _ => false,
    })
}

fn declaration_lines(design: &Design) -> Vec<String> {
    declared(design)
        .map(|n| format!("signal {} : {} := (others=>'0');", n.name, vector_type(n)))
        .collect()
}

/// Deepest tap of every delay line, by source.
fn delay_lines(design: &Design) -> BTreeMap<NodeId, &SignalNode> {
    let mut lines: BTreeMap<NodeId, &SignalNode> = BTreeMap::new();
    for n in design.nodes() {
        if let NodeKind::Buffer { source, tap } = n.kind {
            let deeper = lines
                .get(&source)
                .is_none_or(|d| matches!(d.kind, NodeKind::Buffer { tap: t, .. } if t < tap));
            if deeper {
                lines.insert(source, n);
            }
        }
    }
    lines
}

fn array_type_name(n: &SignalNode, depth: u32) -> String {
    let prefix = if n.signedness().is_signed() { "S" } else { "U" };
    format!("{prefix}{}D{depth}Array", n.width())
}

fn buffer_lines(design: &Design) -> Vec<String> {
    let mut types = Vec::new();
    let mut signals = Vec::new();
    let mut seen = HashSet::new();
    for deepest in delay_lines(design).values() {
        let NodeKind::Buffer { tap, .. } = deepest.kind else {
            unreachable!()
        };
        let depth = tap + 1;
        let ty = array_type_name(deepest, depth);
        if seen.insert(ty.clone()) {
            types.push(format!(
                "type {ty} is array({} downto 0) of {};",
                depth - 1,
                vector_type(deepest)
            ));
        }
        signals.push(format!(
            "signal {} : {ty} := (others=>(others=>'0'));",
            deepest.name
        ));
    }
    types.extend(signals);
    types
}

/// An rendered expression and the numeric_std type it evaluates to.
struct Expr {
    text: String,
    width: u32,
    signed: bool,
    atomic: bool,
}

impl Expr {
    fn wrapped(&self) -> String {
        if self.atomic {
            self.text.clone()
        } else {
            format!("({})", self.text)
        }
    }
}

/// `e` as a `width`-bit vector of the given signedness. The value is known
/// to fit, so narrowing and reinterpretation never lose information.
fn convert(e: &Expr, width: u32, signed: bool) -> String {
    match (e.signed, signed) {
        (a, b) if a == b => {
            if e.width == width {
                e.text.clone()
            } else {
                format!("resize({},{width})", e.text)
            }
        }
        (false, true) => {
            if e.width == width {
                format!("signed({})", e.text)
            } else {
                format!("signed(resize({},{width}))", e.text)
            }
        }
        _ => {
            if e.width == width {
                format!("unsigned({})", e.text)
            } else {
                format!("resize(unsigned({}),{width})", e.text)
            }
        }
    }
}

fn converted(e: &Expr, width: u32, signed: bool) -> Expr {
    let same = e.width == width && e.signed == signed;
    Expr {
        text: convert(e, width, signed),
        width,
        signed,
        atomic: same && e.atomic || !same,
    }
}

/// Width an operand needs inside a signed or unsigned evaluation domain.
fn need(e: &Expr, signed_domain: bool) -> u32 {
    e.width + u32::from(signed_domain && !e.signed)
}

struct Renderer<'a> {
    design: &'a Design,
}

impl Renderer<'_> {
    fn node(&self, id: NodeId) -> &SignalNode {
        self.design.node(id)
    }

    fn leaf(&self, n: &SignalNode) -> String {
        match n.kind {
            NodeKind::Buffer { tap, .. } => format!("{}({tap})", n.name),
            _ => n.name.clone(),
        }
    }

    fn constant(&self, n: &SignalNode, integer: i64) -> String {
        let signed = n.signedness().is_signed();
        if integer.unsigned_abs() < 1 << 31 {
            let f = if signed { "to_signed" } else { "to_unsigned" };
            return format!("{f}({integer},{})", n.width());
        }
        let mut bits = String::with_capacity(n.width() as usize);
        for i in (0..n.width()).rev() {
            bits.push(if (integer >> i) & 1 == 1 { '1' } else { '0' });
        }
        format!("{}'(\"{bits}\")", type_name(signed))
    }

    fn expr(&self, id: NodeId) -> Expr {
        let n = self.node(id);
        let signed = n.signedness().is_signed();
        match n.kind {
            NodeKind::Constant { integer, .. } => Expr {
                text: self.constant(n, integer),
                width: n.width(),
                signed,
                atomic: true,
            },
            _ if n.is_signal() => Expr {
                text: self.leaf(n),
                width: n.width(),
                signed,
                atomic: true,
            },
            NodeKind::Add | NodeKind::Sub => {
                let sym = if n.kind == NodeKind::Add { "+" } else { "-" };
                let ops: Vec<Expr> = n.operands.iter().map(|&o| self.expr(o)).collect();
                let domain = signed || ops.iter().any(|e| e.signed);
                let width = ops
                    .iter()
                    .map(|e| need(e, domain))
                    .chain([n.width() + u32::from(domain && !signed)])
                    .max()
                    .unwrap();
                let mut text = convert(&ops[0], width, domain);
                for e in &ops[1..] {
                    text.push_str(sym);
                    if e.signed == domain {
                        text.push_str(&e.wrapped());
                    } else {
                        text.push_str(&convert(e, need(e, domain), domain));
                    }
                }
                Expr {
                    text,
                    width,
                    signed: domain,
                    atomic: false,
                }
            }
            NodeKind::Mul => {
                let a = self.expr(n.operands[0]);
                let b = self.expr(n.operands[1]);
                let domain = a.signed || b.signed;
                let a = converted(&a, need(&a, domain), domain);
                let b = converted(&b, need(&b, domain), domain);
                Expr {
                    text: format!("{}*{}", a.wrapped(), b.wrapped()),
                    width: a.width + b.width,
                    signed: domain,
                    atomic: false,
                }
            }
            NodeKind::LeftShift { amount } => {
                let x = self.expr(n.operands[0]);
                Expr {
                    text: format!("shift_left({},{amount})", convert(&x, n.width(), signed)),
                    width: n.width(),
                    signed,
                    atomic: true,
                }
            }
            NodeKind::RightShift { amount } => {
                let x = self.expr(n.operands[0]);
                let shifted = Expr {
                    text: format!("shift_right({},{amount})", x.text),
                    width: x.width,
                    signed: x.signed,
                    atomic: true,
                };
                converted(&shifted, n.width(), signed)
            }
            NodeKind::Compare { .. } | NodeKind::Select => {
                unreachable!("placement rules keep `{}` out of numeric operands", n.name)
            }
            _ => unreachable!(),
        }
    }

    /// VHDL boolean expression for a boolean node.
    fn condition(&self, id: NodeId) -> String {
        let n = self.node(id);
        let NodeKind::Compare { op } = n.kind else {
            return format!("{} = \"1\"", self.leaf(n));
        };
        let (a, b) = (n.operands[0], n.operands[1]);
        if op.is_logical() {
            let word = if op == CompareOp::And { "and" } else { "or" };
            return format!("({}) {word} ({})", self.condition(a), self.condition(b));
        }
        let a = self.expr(a);
        let b = self.expr(b);
        let domain = a.signed || b.signed;
        let a = converted(&a, need(&a, domain), domain);
        let b = converted(&b, need(&b, domain), domain);
        let sym = match op {
            CompareOp::Eq => "=",
            CompareOp::Ne => "/=",
            other => other.symbol(),
        };
        format!("{} {sym} {}", a.wrapped(), b.wrapped())
    }

    /// Right-hand side of `target <= ...;` as a `target`-typed value.
    fn assignment(&self, target: &SignalNode, root: NodeId) -> String {
        let r = self.node(root);
        let (w, s) = (target.width(), target.signedness().is_signed());
        match r.kind {
            NodeKind::Compare { .. } => {
                format!("\"1\" when {} else \"0\"", self.condition(root))
            }
            NodeKind::Select => {
                let t = self.expr(r.operands[1]);
                let e = self.expr(r.operands[2]);
                format!(
                    "{} when {} else {}",
                    convert(&t, w, s),
                    self.condition(r.operands[0]),
                    convert(&e, w, s)
                )
            }
            _ => convert(&self.expr(root), w, s),
        }
    }
}

fn sequential_lines(design: &Design) -> Vec<String> {
    let r = Renderer { design };
    let mut lines = Vec::new();
    for n in design.nodes() {
        if n.kind == NodeKind::RegisterAssign {
            lines.push(format!("{} <= {};", n.name, r.assignment(n, n.operands[0])));
        }
    }
    for n in design.nodes() {
        if let NodeKind::Buffer { tap, .. } = n.kind {
            let src = r.expr(n.operands[0]).text;
            lines.push(format!("{}({tap}) <= {src};", n.name));
        }
    }
    lines
}

/// Signal, delay-line type and delay-line array declarations.
pub fn emit_declarations(design: &Design) -> String {
    let mut out = String::new();
    for line in declaration_lines(design).into_iter().chain(buffer_lines(design)) {
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// Clocked assignments: registers in build order, then delay-line shifts.
pub fn emit_sequential(design: &Design) -> String {
    let mut out = String::new();
    for line in sequential_lines(design) {
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// Complete VHDL file: entity with clock, `<input>_in` and `<output>_out`
/// ports, and an architecture holding the declarations, table components
/// and one clocked process.
pub fn emit_entity(design: &Design, name: &str, clock_name: &str) -> Result<String> {
    check_identifier(name)?;
    check_identifier(clock_name)?;
    let clock_lower = clock_name.to_ascii_lowercase();
    let clash = design
        .nodes()
        .iter()
        .any(|n| n.name.to_ascii_lowercase() == clock_lower);
    if clash {
        return Err(Error::DuplicateName(clock_name.to_string()));
    }
    let r = Renderer { design };
    let mut s = String::new();
    let w = &mut s;

    writeln!(w, "library ieee;").unwrap();
    writeln!(w, "use ieee.std_logic_1164.all;").unwrap();
    writeln!(w, "use ieee.numeric_std.all;").unwrap();
    writeln!(w).unwrap();

    let mut ports = vec![format!("{clock_name} : in std_logic")];
    for &i in design.inputs() {
        let n = design.node(i);
        ports.push(format!("{}_in : in {}", n.name, vector_type(n)));
    }
    for (out, id) in design.outputs() {
        ports.push(format!("{out}_out : out {}", vector_type(design.node(*id))));
    }
    writeln!(w, "entity {name} is").unwrap();
    writeln!(w, "  port (").unwrap();
    for (k, p) in ports.iter().enumerate() {
        let sep = if k + 1 < ports.len() { ";" } else { "" };
        writeln!(w, "    {p}{sep}").unwrap();
    }
    writeln!(w, "  );").unwrap();
    writeln!(w, "end entity {name};").unwrap();
    writeln!(w).unwrap();

    writeln!(w, "architecture rtl of {name} is").unwrap();
    writeln!(w, "  -- Define signals").unwrap();
    for line in declaration_lines(design).into_iter().chain(buffer_lines(design)) {
        writeln!(w, "  {line}").unwrap();
    }
    let direct = read_directly(design);
    let wired_only: Vec<&SignalNode> = design
        .inputs()
        .iter()
        .map(|&i| design.node(i))
        .filter(|n| !direct.contains(&n.id))
        .collect();
    if !wired_only.is_empty() {
        writeln!(w, "  -- Inputs read through delay lines only").unwrap();
        for n in &wired_only {
            writeln!(w, "  signal {} : {} := (others=>'0');", n.name, vector_type(n)).unwrap();
        }
    }
    for (k, lut) in design.luts().iter().enumerate() {
        let addr = lut_node(design, k, false);
        writeln!(w).unwrap();
        writeln!(
            w,
            "  -- {} x {} bit ROM initialized from {name}_{}.coe, {} cycle read",
            lut.depth, lut.word_width, lut.name, lut.read_latency
        )
        .unwrap();
        writeln!(w, "  component {name}_{} is", lut.name).unwrap();
        writeln!(w, "    port (").unwrap();
        writeln!(w, "      clka : in std_logic;").unwrap();
        writeln!(
            w,
            "      addra : in std_logic_vector({} downto 0);",
            addr.width() - 1
        )
        .unwrap();
        writeln!(
            w,
            "      douta : out std_logic_vector({} downto 0)",
            lut.word_width - 1
        )
        .unwrap();
        writeln!(w, "    );").unwrap();
        writeln!(w, "  end component;").unwrap();
        writeln!(
            w,
            "  signal {}_dout : std_logic_vector({} downto 0);",
            lut.name,
            lut.word_width - 1
        )
        .unwrap();
    }
    writeln!(w, "begin").unwrap();
    for &i in design.inputs() {
        let n = design.node(i);
        writeln!(w, "  {} <= {}_in;", n.name, n.name).unwrap();
    }
    for (out, id) in design.outputs() {
        writeln!(w, "  {out}_out <= {};", r.expr(*id).text).unwrap();
    }
    for (k, lut) in design.luts().iter().enumerate() {
        let addr = lut_node(design, k, false);
        let data = lut_node(design, k, true);
        writeln!(w).unwrap();
        writeln!(w, "  {}_rom : {name}_{}", lut.name, lut.name).unwrap();
        writeln!(w, "    port map (").unwrap();
        writeln!(w, "      clka => {clock_name},").unwrap();
        writeln!(w, "      addra => std_logic_vector({}),", addr.name).unwrap();
        writeln!(w, "      douta => {}_dout", lut.name).unwrap();
        writeln!(w, "    );").unwrap();
        writeln!(w, "  {} <= unsigned({}_dout);", data.name, lut.name).unwrap();
    }
    writeln!(w).unwrap();
    writeln!(w, "  process ({clock_name})").unwrap();
    writeln!(w, "  begin").unwrap();
    writeln!(w, "    if rising_edge({clock_name}) then").unwrap();
    let seq = sequential_lines(design);
    if !seq.is_empty() {
        writeln!(w, "      -- Sequential logic").unwrap();
    }
    for line in seq {
        writeln!(w, "      {line}").unwrap();
    }
    writeln!(w, "    end if;").unwrap();
    writeln!(w, "  end process;").unwrap();
    writeln!(w, "end architecture rtl;").unwrap();
    Ok(s)
}

/// Address register (`data == false`) or read node of table `lut`.
fn lut_node(design: &Design, lut: usize, data: bool) -> &SignalNode {
    let read = design
        .nodes()
        .iter()
        .find(|n| n.kind == NodeKind::LutRead { lut })
        .expect("every table has a read node");
    if data {
        read
    } else {
        design.node(read.operands[0])
    }
}

/// Every file of a design: `<entity>.vhd` and one `<entity>_<table>.coe`
/// per lookup table, as `(file name, contents)`.
pub fn render_files(design: &Design, clock_name: &str) -> Result<Vec<(String, String)>> {
    let name = design.name();
    let mut files = vec![(format!("{name}.vhd"), emit_entity(design, name, clock_name)?)];
    for lut in design.luts() {
        files.push((format!("{name}_{}.coe", lut.name), emit_coe(lut)));
    }
    Ok(files)
}

/// Split VHDL text into statements of single-space separated tokens, with
/// comments dropped. Layout differences (alignment, line breaks, spacing
/// around punctuation) vanish; anything else does not.
pub fn normalize_statements(text: &str) -> Vec<String> {
    let mut statements = Vec::new();
    let mut current: Vec<String> = Vec::new();
    for token in tokenize(text) {
        if token == ";" {
            current.push(token);
            statements.push(current.join(" "));
            current.clear();
        } else {
            current.push(token);
        }
    }
    if !current.is_empty() {
        statements.push(current.join(" "));
    }
    statements
}

/// Lexical tokens of VHDL text, comments removed.
pub fn tokenize(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '-' && chars.get(i + 1) == Some(&'-') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
        } else if c.is_ascii_alphanumeric() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            tokens.push(chars[start..i].iter().collect());
        } else if c == '"' {
            let start = i;
            i += 1;
            while i < chars.len() && chars[i] != '"' {
                i += 1;
            }
            i = (i + 1).min(chars.len());
            tokens.push(chars[start..i].iter().collect());
        } else if c == '\'' && chars.get(i + 2) == Some(&'\'') {
            tokens.push(chars[i..i + 3].iter().collect());
            i += 3;
        } else {
            let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
            if ["<=", ":=", "=>", ">=", "/=", "**"].contains(&two.as_str()) {
                tokens.push(two);
                i += 2;
            } else {
                tokens.push(c.to_string());
                i += 1;
            }
        }
    }
    tokens
}
