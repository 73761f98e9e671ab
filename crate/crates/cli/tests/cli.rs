// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fxpipe::designs::{self, Example};
use fxpipe::vhdl::normalize_statements;

fn fxpipe(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fxpipe"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn golden_artifacts_are_current() {
    let dir = tempfile::tempdir().unwrap();
    let o = fxpipe(&["golden"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("ok")).count(), 3);
    assert!(dir.path().join("pipelined_add_trace.csv").exists());
}

#[test]
fn emit_writes_the_adder_statements() {
    let dir = tempfile::tempdir().unwrap();
    let o = fxpipe(&["emit", "--example", "pipelined_add"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("pipelined_add.vhd")).unwrap();
    let stmts = normalize_statements(&text);
    for want in [
        "signal phiAdd2 : signed ( 11 downto 0 ) := ( others => '0' ) ;",
        "type S10D1Array is array ( 0 downto 0 ) of signed ( 9 downto 0 ) ;",
        "phiAdd2 <= resize ( phiAdd , 12 ) + phi_2_b ( 0 ) ;",
        "phi_2_b ( 0 ) <= phi_2 ;",
    ] {
        assert!(stmts.iter().any(|s| s.ends_with(want)), "missing `{want}`");
    }
    // no tables in this design
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn emit_writes_one_coe_per_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = fxpipe(&["emit", "--example", "circle_fit"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let d = designs::build(Example::CircleFit).unwrap();
    for lut in d.luts() {
        let coe = fs::read_to_string(dir.path().join(format!("circle_fit_{}.coe", lut.name))).unwrap();
        assert_eq!(fxpipe::lut::parse_coe(&coe).unwrap(), lut.contents);
    }
}

#[test]
fn single_vector_simulation_gives_the_reference_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = fxpipe(&["simulate", "--example", "pipelined_add", "--vectors", "1"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    let summary: Vec<(&str, &str, String)> = rows
        .iter()
        .map(|r| (r[1], r[3], format!("{:.5}", r[4].parse::<f64>().unwrap())))
        .collect();
    assert_eq!(
        summary,
        [
            ("phi_0", "256", "1.57153".to_string()),
            ("phi_1", "-128", "-0.78577".to_string()),
            ("phi_2", "128", "0.78577".to_string()),
            ("phiAdd", "128", "0.78577".to_string()),
            ("phiAdd2", "256", "1.57153".to_string()),
        ]
    );
    let precision: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("precision.json")).unwrap()).unwrap();
    assert_eq!(precision[0]["output"], "phiAdd2");
    assert_eq!(precision[0]["samples"], 1);
}

#[test]
fn report_matches_introspection() {
    for ex in Example::ALL {
        let dir = tempfile::tempdir().unwrap();
        let o = fxpipe(&["report", "--example", ex.name()], dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
        let r: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("resources.json")).unwrap()).unwrap();
        let d = designs::build(ex).unwrap();
        assert_eq!(r["example"], ex.name());
        assert_eq!(r["latency"], d.latency());
        assert_eq!(r["dsp"], d.mul_nodes().count());
        assert_eq!(r["multipliers"].as_array().unwrap().len(), d.mul_nodes().count());
        assert_eq!(r["tables"].as_array().unwrap().len(), d.luts().len());
        assert!(r["config"].is_object());
    }
}

#[test]
fn simulate_is_deterministic_per_seed() {
    let run = |seed: &str| {
        let dir = tempfile::tempdir().unwrap();
        let o = fxpipe(&["simulate", "--example", "line_fit", "--vectors", "50", "--seed", seed], dir.path());
        assert!(o.status.success(), "{}", stderr(&o));
        fs::read(dir.path().join("trace.csv")).unwrap()
    };
    assert_eq!(run("3"), run("3"));
    assert_ne!(run("3"), run("4"));
}

#[test]
fn config_file_feeds_the_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        "example = \"line_fit\"\nvectors = 5\n\n[line_fit]\nrecip_bits = 16\n\n[line_fit.z]\nbits = 14\nmin = -16.0\nmax = 16.0\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let cfg_arg = cfg.to_str().unwrap();
    let o = fxpipe(&["report", "--config", cfg_arg], &out);
    assert!(o.status.success(), "{}", stderr(&o));
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("resources.json")).unwrap()).unwrap();
    assert_eq!(r["example"], "line_fit");
    assert_eq!(r["config"]["recip_bits"], 16);
    assert_eq!(r["config"]["z"]["bits"], 14);

    let o = fxpipe(&["simulate", "--config", cfg_arg], &out);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = fs::read_to_string(out.join("trace.csv")).unwrap().lines().count();
    let d = designs::build(Example::LineFit).unwrap();
    let per_vector = d
        .nodes()
        .iter()
        .filter(|n| n.is_signal() && !matches!(n.kind, fxpipe::NodeKind::Buffer { .. }))
        .count();
    assert_eq!(rows, 1 + 5 * per_vector);

    // flags win over the file
    let o = fxpipe(&["report", "--config", cfg_arg, "--example", "pipelined_add"], &out);
    assert!(o.status.success());
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("resources.json")).unwrap()).unwrap();
    assert_eq!(r["example"], "pipelined_add");
}

#[test]
fn bad_invocations_fail_with_a_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let o = fxpipe(&["emit", "--example", "hough"], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("unknown example"));

    let o = fxpipe(&["simulate", "--example", "line_fit", "--vectors", "0"], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("at least 1"));

    let o = fxpipe(&["simulate", "--example", "line_fit", "--clamp", "--strict"], dir.path());
    assert!(!o.status.success());

    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "example = \"line_fit\"\n[line_fit]\nrecip_bits = 60\n").unwrap();
    let o = fxpipe(&["report", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("error:"), "{}", stderr(&o));

    fs::write(&cfg, "example = \"line_fit\"\ncolour = 3\n").unwrap();
    let o = fxpipe(&["report", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("colour"), "{}", stderr(&o));
}

#[test]
fn unwritable_output_directory_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let o = fxpipe(&["emit", "--example", "pipelined_add"], &blocker.join("sub"));
    assert!(!o.status.success());
    assert!(stderr(&o).contains("creating"), "{}", stderr(&o));
}

#[test]
fn out_of_range_inputs_depend_on_the_policy() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("narrow.toml");
    // stimulus is drawn for the default range, so a narrower input range
    // makes some of it out of range
    fs::write(&cfg, "example = \"pipelined_add\"\nvectors = 50\n[pipelined_add.phi]\nbits = 10\nmin = -1.0\nmax = 1.0\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let o = fxpipe(&["simulate", "--config", cfg, "--strict"], dir.path());
    assert!(!o.status.success());
    assert!(stderr(&o).contains("phi_"), "{}", stderr(&o));

    let o = fxpipe(&["simulate", "--config", cfg, "--clamp"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("InputClamped"));
}
