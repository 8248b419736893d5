use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qsurg_core::codes::{classical_distance, css_distance, soundness, validate_css, DistanceResult};
use qsurg_core::compile::{compile, parse_circuit, CostParams};
use qsurg_core::gf2::BitMatrix;
use qsurg_core::ledger::{
    ltsp_checks, pcs_checks, run_ledger, surgery_checks, teleport_checks, Ledger, LedgerConfig, Preset,
};
use qsurg_core::manifest::{self, Code};
use qsurg_core::sim::MemoryExperiment;
use qsurg_core::surgery::{build_deformed, build_glue, deformed_report, measured_extraction, DeformedCode};
use qsurg_core::{Error, Result};

#[derive(Parser)]
#[command(name = "qsurg", version, about = "Code surgery, resource-state preparation and teleported measurement toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a built-in code as a manifest plus matrix files.
    Build {
        /// repetition:N, hamming743, steane or surface:D
        #[arg(long)]
        code: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        name: Option<String>,
    },
    /// Validate a code and check its declared distance exhaustively.
    Verify {
        /// Manifest path or builtin:<name>
        #[arg(long)]
        code: String,
    },
    /// Exhaustive minimum distance.
    Distance {
        #[arg(long)]
        code: String,
        /// Stop the sweep after this weight.
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Deformed-code construction.
    #[command(subcommand)]
    Surgery(SurgeryCmd),
    /// Resource-state preparation checks.
    #[command(subcommand)]
    Ltsp(LtspCmd),
    /// Teleported measurement and surgery checks.
    #[command(subcommand)]
    Protocol(ProtocolCmd),
    /// Monte Carlo simulation.
    #[command(subcommand)]
    Sim(SimCmd),
    /// Schedule a logical circuit and estimate its cost.
    Compile(CompileArgs),
    /// Run the full check ledger.
    Ledger {
        #[arg(long, default_value = "desk")]
        preset: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        max_weight: Option<usize>,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum SurgeryCmd {
    Build {
        #[arg(long)]
        target: String,
        /// Matrix file selecting the measured logicals (one row per measurement).
        #[arg(long)]
        alpha: PathBuf,
        #[arg(long)]
        rcode: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum LtspCmd {
    Verify {
        #[arg(long)]
        source: String,
        #[arg(long)]
        fcode: String,
        #[arg(long, default_value_t = 2)]
        max_weight: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ProtocolCmd {
    Check {
        /// Output directory of `surgery build`.
        #[arg(long)]
        deformed: PathBuf,
        #[arg(long, default_value_t = 2)]
        max_weight: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum SimCmd {
    /// One teleported error-correction cycle on a CSS code.
    Run {
        /// Code manifest or builtin:<name> whose memory cycle is simulated.
        #[arg(long)]
        circuit: String,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        /// Fault-rate scale on resource-state locations.
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct CompileArgs {
    #[arg(long)]
    circuit: PathBuf,
    /// Logical qubits per block.
    #[arg(long)]
    k: u64,
    /// schedule.tsv,cost.tsv
    #[arg(long)]
    out: String,
    #[arg(long, default_value_t = 13)]
    n: u64,
    #[arg(long, default_value_t = 4)]
    k_r: u64,
    #[arg(long, default_value_t = 4)]
    k_f: u64,
    #[arg(long, default_value_t = 3)]
    d_s: u64,
    /// Number of data blocks; defaults to one past the largest block index.
    #[arg(long)]
    blocks: Option<u64>,
    /// Constant c in the c*k^2 operation-family count.
    #[arg(long, default_value_t = 6)]
    family_constant: u64,
}

/// Exit status: 0 all checks pass, 1 some check failed.
type Outcome = Result<bool>;

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(p, text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn distance_text(d: DistanceResult) -> String {
    match d {
        DistanceResult::Exact(d) => d.to_string(),
        DistanceResult::AtLeast(d) => format!(">={d}"),
    }
}

fn code_distance(code: &Code, budget: usize) -> Result<DistanceResult> {
    match code {
        Code::Css(c) => css_distance(c, budget),
        Code::Classical(c) => classical_distance(c, budget),
    }
}

fn verify(source: &str) -> Outcome {
    let code = manifest::load(source)?;
    let mut issues = match &code {
        Code::Css(c) => validate_css(c),
        Code::Classical(c) => c.validate(),
    };
    let d = code_distance(&code, usize::MAX)?;
    println!("n\t{}\nk\t{}\nd\t{}", code.n(), code.k(), distance_text(d));
    if let Some(declared) = code.d() {
        if d.exact() != Some(declared) {
            issues.push(format!("declared d={declared} but exhaustive search gives {}", distance_text(d)));
        }
    }
    if let Code::Classical(c) = &code {
        if c.n <= 24 && c.r() > 0 {
            let s = soundness(c)?;
            println!("soundness\t{}/{}", s.numer(), s.denom());
        }
    }
    for i in &issues {
        println!("issue\t{i}");
    }
    Ok(issues.is_empty())
}

fn load_matrix(path: &Path) -> Result<BitMatrix> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    BitMatrix::parse_text(&text)
}

fn deformed_from(target: &Code, alpha: &BitMatrix, rcode: &Code) -> Result<DeformedCode> {
    let target = target.as_css()?;
    let glue = build_glue(target, alpha)?;
    build_deformed(target, rcode.as_classical()?, &glue)
}

fn surgery_build(target: &str, alpha: &Path, rcode: &str, out: &Path) -> Outcome {
    let target = manifest::load(target)?;
    let rcode = manifest::load(rcode)?;
    let alpha = load_matrix(alpha)?;
    let dc = deformed_from(&target, &alpha, &rcode)?;
    fs::create_dir_all(out)?;
    manifest::write(out, "target", &target)?;
    manifest::write(out, "rcode", &rcode)?;
    manifest::write(out, "deformed", &Code::Css(dc.css.clone()))?;
    fs::write(out.join("alpha.txt"), alpha.to_text())?;
    let g = &dc.glue;
    let l = &dc.lifted;
    let blocks: [(&str, &BitMatrix); 12] = [
        ("glue.h_g", &g.h_g),
        ("glue.s", &g.s),
        ("glue.t", &g.t),
        ("glue.r", &g.r),
        ("glue.beta", &g.beta),
        ("glue.alpha_perp", &g.alpha_perp),
        ("lifted.h_x", &l.h_x),
        ("lifted.h_z", &l.h_z),
        ("lifted.s", &l.s),
        ("lifted.t", &l.t),
        ("lifted.h_g", &l.h_g),
        ("lifted.h_m", &l.h_m),
    ];
    for (name, m) in blocks {
        fs::write(out.join(format!("{name}.txt")), m.to_text())?;
    }
    let mut issues = deformed_report(&dc);
    match measured_extraction(&dc) {
        Ok(c) => fs::write(out.join("extraction.txt"), c.to_text())?,
        Err(e) => issues.push(e.to_string()),
    }
    let mut report = format!(
        "n\t{}\nk\t{}\nk_R\t{}\nn_G\t{}\nr_G\t{}\n",
        dc.css.n,
        dc.css.k,
        dc.k_r(),
        g.n_g(),
        g.r_g()
    );
    for i in &issues {
        report.push_str(&format!("issue\t{i}\n"));
    }
    report.push_str(&format!("status\t{}\n", if issues.is_empty() { "pass" } else { "fail" }));
    fs::write(out.join("report.tsv"), &report)?;
    print!("{report}");
    Ok(issues.is_empty())
}

fn finish_ledger(ledger: &Ledger, out: Option<&Path>) -> Outcome {
    write_or_print(out, &ledger.to_tsv())?;
    Ok(ledger.all_pass())
}

fn protocol_check(dir: &Path, cfg: &LedgerConfig, out: Option<&Path>) -> Outcome {
    let target = manifest::load(dir.join("target.manifest").to_str().unwrap_or_default())?;
    let rcode = manifest::load(dir.join("rcode.manifest").to_str().unwrap_or_default())?;
    let alpha = load_matrix(&dir.join("alpha.txt"))?;
    let dc = deformed_from(&target, &alpha, &rcode)?;
    let stored = manifest::load(dir.join("deformed.manifest").to_str().unwrap_or_default())?;
    let stored = stored.as_css()?;
    if stored.h_x != dc.css.h_x || stored.h_z != dc.css.h_z {
        return Err(Error::Precondition(format!(
            "{}: stored deformed checks differ from a rebuild of its inputs",
            dir.display()
        )));
    }
    let mut ledger = Ledger::default();
    pcs_checks(&mut ledger, &dc, cfg);
    teleport_checks(&mut ledger, &dc, cfg);
    surgery_checks(&mut ledger, &dc, cfg);
    finish_ledger(&ledger, out)
}

fn sim_run(source: &str, p: f64, trials: u64, seed: u64, lambda: f64, out: Option<&Path>) -> Outcome {
    if trials == 0 {
        return Err(Error::Precondition("trials must be at least 1".into()));
    }
    let code = manifest::load(source)?;
    let exp = MemoryExperiment::new(code.as_css()?, lambda)?;
    let report = exp.run(p, trials, seed)?;
    let text = format!("{}\n{}\n", qsurg_core::sim::McReport::TSV_HEADER, report.tsv_row());
    write_or_print(out, &text)?;
    Ok(true)
}

fn compile_cmd(args: &CompileArgs) -> Outcome {
    let (sched_path, cost_path) = args
        .out
        .split_once(',')
        .ok_or_else(|| Error::Parse("--out expects schedule.tsv,cost.tsv".into()))?;
    let text = fs::read_to_string(&args.circuit).map_err(|e| Error::Io(format!("{}: {e}", args.circuit.display())))?;
    let ops = parse_circuit(&text)?;
    let max_block = ops.iter().flat_map(|o| o.block_support()).max().map_or(0, |b| b as u64 + 1);
    let params = CostParams {
        k: args.k,
        n: args.n,
        k_r: args.k_r,
        k_f: args.k_f,
        d_s: args.d_s,
        blocks: args.blocks.unwrap_or(max_block),
        family_constant: args.family_constant,
    };
    let compiled = compile(&ops, &params)?;
    write_or_print(Some(Path::new(sched_path)), &compiled.schedule_tsv())?;
    write_or_print(Some(Path::new(cost_path)), &compiled.cost_tsv())?;
    let bounds_hold = compiled.costs.iter().flatten().all(|c| c.bound_present_holds() && c.bound_constant_holds());
    println!(
        "layers\t{}\nsublayers\t{}\ntotal_time\t{}",
        compiled.layers.len(),
        compiled.sublayers(),
        compiled.total_time()
    );
    Ok(bounds_hold)
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Build { code, out, name } => {
            let c = manifest::builtin(&code)?;
            let name = name.unwrap_or_else(|| code.replace(':', ""));
            let path = manifest::write(&out, &name, &c)?;
            println!("{}", path.display());
            Ok(true)
        }
        Command::Verify { code } => verify(&code),
        Command::Distance { code, budget } => {
            let c = manifest::load(&code)?;
            println!("{}", distance_text(code_distance(&c, budget.unwrap_or(usize::MAX))?));
            Ok(true)
        }
        Command::Surgery(SurgeryCmd::Build { target, alpha, rcode, out }) => surgery_build(&target, &alpha, &rcode, &out),
        Command::Ltsp(LtspCmd::Verify { source, fcode, max_weight, samples, seed, out }) => {
            let source = manifest::load(&source)?;
            let f = manifest::load(&fcode)?;
            let cfg = LedgerConfig { max_weight, samples, seed, ..LedgerConfig::new(Preset::Desk, seed) };
            let mut ledger = Ledger::default();
            ltsp_checks(&mut ledger, source.as_css()?, f.as_classical()?, &cfg);
            finish_ledger(&ledger, out.as_deref())
        }
        Command::Protocol(ProtocolCmd::Check { deformed, max_weight, samples, seed, out }) => {
            let cfg = LedgerConfig { max_weight, samples, seed, ..LedgerConfig::new(Preset::Desk, seed) };
            protocol_check(&deformed, &cfg, out.as_deref())
        }
        Command::Sim(SimCmd::Run { circuit, p, trials, seed, lambda, out }) => {
            sim_run(&circuit, p, trials, seed, lambda, out.as_deref())
        }
        Command::Compile(args) => compile_cmd(&args),
        Command::Ledger { preset, seed, max_weight, samples, trials, out } => {
            let mut cfg = LedgerConfig::new(preset.parse()?, seed);
            if let Some(w) = max_weight {
                cfg.max_weight = w;
            }
            if let Some(s) = samples {
                cfg.samples = s;
            }
            if let Some(t) = trials {
                cfg.mc_trials = t;
            }
            finish_ledger(&run_ledger(&cfg), out.as_deref())
        }
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("QSURG_THREADS") {
        let n: usize = v.parse().map_err(|_| Error::Parse(format!("QSURG_THREADS={v:?} is not a count")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Internal(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match configure_threads().and_then(|_| run(cli)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
