// SPDX-License-Identifier: Apache-2.0

//! `fxpipe`: simulate the bundled example designs, emit their VHDL and
//! coefficient files, and report resources.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use fxpipe::designs::{self, CircleFitConfig, Example, LineFitConfig, PipelinedAddConfig};
use fxpipe::sim::{self, RangePolicy, SimOptions, ViolationKind};
use fxpipe::{vhdl, Design};
use serde::Deserialize;
use serde_json::json;

const GOLDEN_BODY: &str = include_str!("../goldens/pipelined_add_body.vhd");
const GOLDEN_ENTITY: &str = include_str!("../goldens/pipelined_add.vhd");
const GOLDEN_TRACE: &str = include_str!("../goldens/pipelined_add_trace.csv");

#[derive(Parser)]
#[command(name = "fxpipe", version, about = "Pipelined fixed-point designs: simulation and VHDL emission")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the bit-accurate simulation; writes trace.csv and precision.json.
    Simulate(Common),
    /// Write <entity>.vhd and one .coe file per lookup table.
    Emit(Common),
    /// Write resources.json: latency, DSP, BRAM and register estimate.
    Report(Common),
    /// Regenerate the pipelined_add reference artifacts and diff them
    /// against the checked-in copies.
    Golden {
        /// Also write the regenerated artifacts here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    example: Option<Example>,
    /// Number of input vectors to simulate.
    #[arg(long)]
    vectors: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Saturate out-of-range inputs and record a violation.
    #[arg(long, conflicts_with = "strict")]
    clamp: bool,
    /// Reject out-of-range inputs (the default).
    #[arg(long)]
    strict: bool,
    /// TOML file with the same keys as the flags, plus per-example tables.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Policy {
    #[default]
    Strict,
    Clamp,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    example: Option<String>,
    vectors: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    range_policy: Option<Policy>,
    clock: Option<String>,
    pipelined_add: PipelinedAddConfig,
    line_fit: LineFitConfig,
    circle_fit: CircleFitConfig,
}

/// Flags merged over the config file, flags winning.
struct Settings {
    example: Example,
    vectors: usize,
    seed: u64,
    out: PathBuf,
    policy: Policy,
    clock: String,
    file: FileConfig,
}

impl Settings {
    fn resolve(c: &Common) -> Result<Self> {
        let file: FileConfig = match &c.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => FileConfig::default(),
        };
        let example = match (c.example, &file.example) {
            (Some(e), _) => e,
            (None, Some(name)) => name.parse().map_err(anyhow::Error::msg)?,
            (None, None) => bail!("no example given; use --example or set `example` in the config"),
        };
        let vectors = c.vectors.or(file.vectors).unwrap_or(1000);
        if vectors == 0 {
            bail!("--vectors must be at least 1");
        }
        let policy = if c.clamp {
            Policy::Clamp
        } else if c.strict {
            Policy::Strict
        } else {
            file.range_policy.unwrap_or_default()
        };
        Ok(Settings {
            example,
            vectors,
            seed: c.seed.or(file.seed).unwrap_or(1),
            out: c.out.clone().or(file.out.clone()).unwrap_or_else(|| PathBuf::from(".")),
            policy,
            clock: file.clock.clone().unwrap_or_else(|| "clk".into()),
            file,
        })
    }

    fn design(&self) -> Result<Design> {
        let d = match self.example {
            Example::PipelinedAdd => designs::pipelined_add(&self.file.pipelined_add),
            Example::LineFit => designs::line_fit(&self.file.line_fit),
            Example::CircleFit => designs::circle_fit(&self.file.circle_fit),
        };
        d.with_context(|| format!("building {}", self.example))
    }

    fn example_config(&self) -> serde_json::Value {
        match self.example {
            Example::PipelinedAdd => json!(self.file.pipelined_add),
            Example::LineFit => json!(self.file.line_fit),
            Example::CircleFit => json!(self.file.circle_fit),
        }
    }

    fn out_dir(&self) -> Result<&Path> {
        fs::create_dir_all(&self.out).with_context(|| format!("creating {}", self.out.display()))?;
        Ok(&self.out)
    }
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn simulate(s: &Settings) -> Result<()> {
    let design = s.design()?;
    let vectors = designs::example_vectors(s.example, &design, s.vectors, s.seed);
    let options = SimOptions {
        range_policy: match s.policy {
            Policy::Strict => RangePolicy::Strict,
            Policy::Clamp => RangePolicy::Clamp,
        },
    };
    let trace = sim::run(&design, &vectors, options)?;
    let dir = s.out_dir()?;
    let mut csv = Vec::new();
    sim::write_trace_csv(&design, &trace, &mut csv)?;
    write(dir, "trace.csv", std::str::from_utf8(&csv)?)?;
    write(dir, "precision.json", &sim::precision_json(&design, &trace)?)?;

    let mut fatal = 0;
    for v in trace.violations() {
        eprintln!("cycle {}: {:?} at `{}` (value {})", v.cycle, v.kind, v.node, v.value);
        if v.kind != ViolationKind::InputClamped {
            fatal += 1;
        }
    }
    if fatal > 0 {
        bail!("{fatal} width or address violations");
    }
    Ok(())
}

fn emit(s: &Settings) -> Result<()> {
    let design = s.design()?;
    let dir = s.out_dir()?;
    for (name, text) in vhdl::render_files(&design, &s.clock)? {
        write(dir, &name, &text)?;
    }
    Ok(())
}

fn report(s: &Settings) -> Result<()> {
    let design = s.design()?;
    let r = sim::resource_estimate(&design);
    let multipliers: Vec<_> = design
        .mul_nodes()
        .map(|n| {
            let dsp = n.dsp.expect("multipliers carry operand widths");
            json!({ "node": n.name, "operand_widths": [dsp.widths.0, dsp.widths.1], "shifts": [dsp.shifts.0, dsp.shifts.1] })
        })
        .collect();
    let tables: Vec<_> = design
        .luts()
        .iter()
        .map(|l| json!({ "name": l.name, "depth": l.depth, "word_width": l.word_width }))
        .collect();
    let doc = json!({
        "example": s.example.name(),
        "latency": r.latency,
        "dsp": r.dsp,
        "bram_bits": r.bram_bits,
        "ramb36": r.ramb36,
        "ramb18": r.ramb18,
        "register_bits": r.register_bits,
        "multipliers": multipliers,
        "tables": tables,
        "config": s.example_config(),
    });
    write(s.out_dir()?, "resources.json", &(serde_json::to_string_pretty(&doc)? + "\n"))
}

/// The reference artifacts as this build produces them.
fn golden_artifacts() -> Result<Vec<(&'static str, String, &'static str)>> {
    let design = designs::build(Example::PipelinedAdd)?;
    let body = vhdl::emit_declarations(&design) + &vhdl::emit_sequential(&design);
    let entity = vhdl::emit_entity(&design, design.name(), "clk")?;
    let trace = sim::run(&design, &[designs::pipelined_add_reference_vector()], SimOptions::default())?;
    let mut csv = Vec::new();
    sim::write_trace_csv(&design, &trace, &mut csv)?;
    Ok(vec![
        ("pipelined_add_body.vhd", body, GOLDEN_BODY),
        ("pipelined_add.vhd", entity, GOLDEN_ENTITY),
        ("pipelined_add_trace.csv", String::from_utf8(csv)?, GOLDEN_TRACE),
    ])
}

fn golden(out: Option<&Path>) -> Result<()> {
    let mut differing = Vec::new();
    for (name, fresh, checked_in) in golden_artifacts()? {
        if let Some(dir) = out {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            write(dir, name, &fresh)?;
        }
        if fresh == checked_in {
            println!("ok      {name}");
            continue;
        }
        println!("DIFFERS {name}");
        let (a, b): (Vec<&str>, Vec<&str>) = (checked_in.lines().collect(), fresh.lines().collect());
        for i in 0..a.len().max(b.len()) {
            let (x, y) = (a.get(i).copied(), b.get(i).copied());
            if x != y {
                println!("  line {}:\n  - {}\n  + {}", i + 1, x.unwrap_or("<eof>"), y.unwrap_or("<eof>"));
                break;
            }
        }
        differing.push(name);
    }
    if !differing.is_empty() {
        bail!("{} artifacts differ from the checked-in goldens", differing.len());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(c) => simulate(&Settings::resolve(&c)?),
        Command::Emit(c) => emit(&Settings::resolve(&c)?),
        Command::Report(c) => report(&Settings::resolve(&c)?),
        Command::Golden { out } => golden(out.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
