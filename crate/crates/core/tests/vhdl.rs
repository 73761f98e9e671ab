// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;
use std::process::Command;

use fxpipe::designs::{self, Example};
use fxpipe::vhdl::{self, normalize_statements, DesignUnit};
use fxpipe::{CompareOp, DesignBuilder, Error, FixedPointFormat, LutOptions, NodeKind};

/// Hand-written reference for the three-input adder, laid out with
/// aligned columns the way a person would type it.
const ADDER_REFERENCE: &str = "\
signal phi_0   : signed( 9 downto 0) := (others=>'0');
signal phi_1   : signed( 9 downto 0) := (others=>'0');
signal phiAdd  : signed(10 downto 0) := (others=>'0');
signal phiAdd2 : signed(11 downto 0) := (others=>'0');
type S10D1Array is array(0 downto 0) of signed(9 downto 0);
signal phi_2_b : S10D1Array := (others=>(others=>'0'));
phiAdd     <= resize(phi_0 ,11)+phi_1;
phiAdd2    <= resize(phiAdd,12)+phi_2_b(0);
phi_2_b(0) <= phi_2;
";

fn fmt10() -> FixedPointFormat {
    FixedPointFormat::signed(10, -3.14, 3.14).unwrap()
}

#[test]
fn adder_matches_reference_token_for_token() {
    let d = designs::build(Example::PipelinedAdd).unwrap();
    let emitted = vhdl::emit_declarations(&d) + &vhdl::emit_sequential(&d);
    assert_eq!(normalize_statements(&emitted), normalize_statements(ADDER_REFERENCE));

    let unit = DesignUnit::new(&d, "clk").unwrap();
    assert_eq!(unit.declarations.len(), 4);
    assert_eq!(unit.buffer_type_decls.len(), 2);
    assert_eq!(unit.sequential_statements.len(), 3);
    // the entity body carries the same statements
    let body = normalize_statements(&unit.full_text);
    for stmt in normalize_statements(ADDER_REFERENCE) {
        assert!(body.iter().any(|s| s.ends_with(&stmt)), "missing `{stmt}`");
    }
}

#[test]
fn deep_delay_line() {
    let mut b = DesignBuilder::new("t").unwrap();
    let x = b.input("x", fmt10()).unwrap();
    let y = b.input("y", fmt10()).unwrap();
    let mut r = b.clocked_assign("r1", x).unwrap();
    for k in 2..=3 {
        r = b.clocked_assign(&format!("r{k}"), r).unwrap();
    }
    let e = b.add(r, y).unwrap();
    let out = b.clocked_assign("sum", e).unwrap();
    b.output("sum", out).unwrap();
    let d = b.finish().unwrap();
    let seq = normalize_statements(&vhdl::emit_sequential(&d));
    let tail: Vec<&str> = seq[seq.len() - 3..].iter().map(String::as_str).collect();
    assert_eq!(tail, ["y_b ( 0 ) <= y ;", "y_b ( 1 ) <= y_b ( 0 ) ;", "y_b ( 2 ) <= y_b ( 1 ) ;"]);
    let decls = normalize_statements(&vhdl::emit_declarations(&d));
    assert!(decls.contains(&"type S10D3Array is array ( 2 downto 0 ) of signed ( 9 downto 0 ) ;".to_string()));
    assert!(decls.contains(&"signal y_b : S10D3Array := ( others => ( others => '0' ) ) ;".to_string()));
}

#[test]
fn unsigned_delay_line_type_name() {
    let mut b = DesignBuilder::new("t").unwrap();
    let x = b.input("x", FixedPointFormat::unsigned(6, 1.0).unwrap()).unwrap();
    let r1 = b.clocked_assign("r1", x).unwrap();
    let e = b.add(r1, x).unwrap();
    let r2 = b.clocked_assign("r2", e).unwrap();
    b.output("r2", r2).unwrap();
    let d = b.finish().unwrap();
    assert!(vhdl::emit_declarations(&d).contains("type U6D1Array is array(0 downto 0) of unsigned(5 downto 0);"));
}

fn compare_design() -> fxpipe::Design {
    let mut b = DesignBuilder::new("cmp").unwrap();
    let x = b.input("x", fmt10()).unwrap();
    let u = b.input("u", FixedPointFormat::unsigned(8, 2.0).unwrap()).unwrap();
    let c = b.compare(x, CompareOp::Ge, u).unwrap();
    let flag = b.clocked_assign("c", c).unwrap();
    let lo = b.compare(x, CompareOp::Lt, u).unwrap();
    let eq = b.compare(x, CompareOp::Eq, u).unwrap();
    let either = b.compare(lo, CompareOp::Or, eq).unwrap();
    let pick = b.select(either, x, u).unwrap();
    let m = b.clocked_assign("m", pick).unwrap();
    let k = b.constant(1.0, 4).unwrap();
    let c2 = b.compare(flag, CompareOp::And, flag).unwrap();
    let s = b.select(c2, m, k).unwrap();
    let last = b.clocked_assign("last", s).unwrap();
    b.output("last", last).unwrap();
    b.finish().unwrap()
}

#[test]
fn boolean_signals_are_one_bit_unsigned() {
    let d = compare_design();
    let decls = vhdl::emit_declarations(&d);
    assert!(decls.contains("signal c : unsigned(0 downto 0) := (others=>'0');"), "{decls}");
}

#[test]
fn compare_and_select_rendering() {
    let d = compare_design();
    let seq = vhdl::emit_sequential(&d);
    let lines: Vec<&str> = seq.lines().collect();
    assert_eq!(lines[0], "c <= \"1\" when x >= signed(resize(u,9)) else \"0\";");
    assert!(lines[1].starts_with("m <= "), "{seq}");
    assert!(lines[1].contains(" when (x < signed(resize(u,9))) or (x = signed(resize(u,9))) else "));
    assert!(lines[2].contains("when (c = \"1\") and (c = \"1\") else"), "{seq}");
}

#[test]
fn shifts_and_products() {
    let mut b = DesignBuilder::new("t").unwrap();
    let x = b.input("x", FixedPointFormat::signed(30, -1.0, 1.0).unwrap()).unwrap();
    let y = b.input("y", FixedPointFormat::signed(20, -1.0, 1.0).unwrap()).unwrap();
    let m = b.mul(x, y).unwrap();
    let p = b.clocked_assign("p", m).unwrap();
    let l = b.shl(p, 2).unwrap();
    let q = b.clocked_assign("q", l).unwrap();
    b.output("q", q).unwrap();
    let d = b.finish().unwrap();
    let seq = vhdl::emit_sequential(&d);
    let lines: Vec<&str> = seq.lines().collect();
    assert_eq!(lines[0], "p <= resize(shift_right(x,5),25)*resize(shift_right(y,2),18);");
    assert_eq!(lines[1], "q <= shift_left(resize(p,45),2);");
}

#[test]
fn every_register_and_tap_is_assigned_once() {
    for ex in Example::ALL {
        let d = designs::build(ex).unwrap();
        let unit = DesignUnit::new(&d, "clk").unwrap();
        let mut lhs: HashMap<String, usize> = HashMap::new();
        for s in &unit.sequential_statements {
            let target = s.split(" <= ").next().unwrap().to_string();
            *lhs.entry(target).or_default() += 1;
        }
        for n in d.nodes() {
            let target = match n.kind {
                NodeKind::RegisterAssign => n.name.clone(),
                NodeKind::Buffer { tap, .. } => format!("{}({tap})", n.name),
                _ => continue,
            };
            assert_eq!(lhs.get(&target), Some(&1), "{ex}: {target}");
        }
        let assigned = d
            .nodes()
            .iter()
            .filter(|n| matches!(n.kind, NodeKind::RegisterAssign | NodeKind::Buffer { .. }))
            .count();
        assert_eq!(unit.sequential_statements.len(), assigned);
        for lut in d.luts() {
            let data = format!("{}_data <= unsigned({}_dout);", lut.name, lut.name);
            assert!(unit.full_text.contains(&data), "{ex}: {data}");
        }
    }
}

#[test]
fn output_is_deterministic() {
    for ex in Example::ALL {
        let a = vhdl::render_files(&designs::build(ex).unwrap(), "clk").unwrap();
        let b = vhdl::render_files(&designs::build(ex).unwrap(), "clk").unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|(_, text)| !text.contains('\r')));
    }
}

#[test]
fn file_names() {
    let d = designs::build(Example::LineFit).unwrap();
    let names: Vec<String> = vhdl::render_files(&d, "clk").unwrap().into_iter().map(|f| f.0).collect();
    assert_eq!(names, ["line_fit.vhd", "line_fit_recip.coe"]);
}

#[test]
fn empty_design() {
    let d = DesignBuilder::new("empty").unwrap().finish().unwrap();
    assert_eq!(d.latency(), 0);
    let text = vhdl::emit_entity(&d, "empty", "clk").unwrap();
    let stmts = normalize_statements(&text);
    assert!(stmts.contains(&"entity empty is port ( clk : in std_logic ) ;".to_string()), "{text}");
    assert!(stmts.iter().any(|s| s.ends_with("process ( clk ) begin if rising_edge ( clk ) then end if ;")));
}

#[test]
fn clock_name_must_be_free() {
    let mut b = DesignBuilder::new("t").unwrap();
    b.input("clk", fmt10()).unwrap();
    let d = b.finish().unwrap();
    assert_eq!(vhdl::emit_entity(&d, "t", "clk"), Err(Error::DuplicateName("clk".into())));
    assert!(vhdl::emit_entity(&d, "t", "clock").is_ok());
}

#[test]
fn table_component_wiring() {
    let mut b = DesignBuilder::new("tab").unwrap();
    let x = b.input("x", fmt10()).unwrap();
    let (_, y) = b.lut("sine", f64::sin, x, 12, (-1.0, 1.0), LutOptions::default()).unwrap();
    b.output("y", y).unwrap();
    let d = b.finish().unwrap();
    let text = vhdl::emit_entity(&d, "tab", "clk").unwrap();
    for needle in [
        "component tab_sine is",
        "addra : in std_logic_vector(9 downto 0);",
        "douta : out std_logic_vector(11 downto 0)",
        "sine_rom : tab_sine",
        "addra => std_logic_vector(sine_addr),",
        "sine_addr <= ",
        "sine <= ",
    ] {
        assert!(text.contains(needle), "missing `{needle}`:\n{text}");
    }
}

/// Parse every bundled design with vsg when it is installed. vsg is a
/// style checker whose parser rejects malformed VHDL; style findings are
/// ignored, only parse failures count.
#[test]
fn third_party_parser_accepts_bundled_designs() {
    if Command::new("vsg").arg("--version").output().is_err() {
        eprintln!("vsg not installed; skipping");
        return;
    }
    let dir = std::env::temp_dir().join(format!("fxpipe-vsg-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.vhd");
    std::fs::write(&bad, "entity bad is\n port (a : in bit\nend entity;\n").unwrap();
    assert!(vsg_parse_error(&bad).is_some(), "vsg did not reject malformed input");
    for ex in Example::ALL {
        let d = designs::build(ex).unwrap();
        let path = dir.join(format!("{ex}.vhd"));
        std::fs::write(&path, vhdl::emit_entity(&d, d.name(), "clk").unwrap()).unwrap();
        assert_eq!(vsg_parse_error(&path), None, "{ex}");
    }
    std::fs::remove_dir_all(&dir).ok();
}

fn vsg_parse_error(path: &std::path::Path) -> Option<String> {
    let out = Command::new("vsg").arg("-f").arg(path).output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout).to_string() + &String::from_utf8_lossy(&out.stderr);
    text.contains("Error while processing").then_some(text)
}
