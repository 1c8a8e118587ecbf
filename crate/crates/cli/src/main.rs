use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use arpshield_core::detect::DetectorRegistry;
use arpshield_core::lattice::{render_table, Lattice};
use arpshield_core::packet::encode_trace_record;
use arpshield_core::report::{
    build_report, emit, feature_matrix, published_rate_checks, Format, Report,
};
use arpshield_core::scenario::{generate_class, AttackClass, Scenario, ScenarioRng};
use arpshield_core::sim::run_scenario;

const SEED_VAR: &str = "ARPSHIELD_SEED";

#[derive(Parser)]
#[command(name = "arpshield", version, about = "ARP spoofing detection testbed")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the attack-causality lattice and print its join/meet tables.
    VerifyLattice {
        /// Also fail when a published join/meet example disagrees.
        #[arg(long)]
        strict: bool,
    },
    /// Write frames of one class as a trace, or the canonical scenario file.
    Gen(GenArgs),
    /// Simulate a scenario and write its report.
    Run(RunArgs),
    /// Re-render a saved report.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "text")]
        format: String,
    },
    /// Check a CLCC report and a baseline report against the published rates.
    Compare {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        baseline: PathBuf,
        #[arg(long, value_enum)]
        against: Reference,
    },
    /// Print the feature comparison of ARP defences.
    Features,
}

#[derive(Clone, Copy, ValueEnum)]
enum Reference {
    Table3,
}

#[derive(Args)]
struct GenArgs {
    /// Attack class, e.g. PKT2 or Normal.
    #[arg(
        long,
        conflicts_with = "paper_mix",
        required_unless_present = "paper_mix"
    )]
    class: Option<String>,
    /// Emit the 100 normal + 11 x 105 abnormal scenario file.
    #[arg(long)]
    paper_mix: bool,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    count: u32,
    #[arg(long)]
    seed: Option<u64>,
    /// Detector named in the generated scenario file.
    #[arg(long, default_value = "clcc")]
    detector: String,
    /// Seed every host with static entries for the whole topology.
    #[arg(long)]
    static_entries: bool,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Overrides the detector named in the scenario file.
    #[arg(long)]
    detector: Option<String>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "json")]
    format: String,
    /// Also dump every delivered frame in the binary trace format.
    #[arg(long)]
    trace: Option<PathBuf>,
}

/// Exit 1: a check ran and failed. Exit 2: bad input.
enum Failure {
    Check(String),
    Usage(String),
}

type CmdResult = Result<(), Failure>;

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::VerifyLattice { strict } => verify_lattice(strict),
        Command::Gen(a) => gen(a),
        Command::Run(a) => run(a),
        Command::Report { input, format } => rerender(&input, &format),
        Command::Compare {
            input,
            baseline,
            against: Reference::Table3,
        } => compare(&input, &baseline),
        Command::Features => {
            print!("{}", feature_matrix());
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("arpshield: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("arpshield: {msg}");
            ExitCode::from(2)
        }
    }
}

fn env_seed() -> Result<Option<u64>, Failure> {
    match std::env::var(SEED_VAR) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| {
            usage(format!(
                "{SEED_VAR}={v:?} is not an unsigned 64-bit integer"
            ))
        }),
        Err(_) => Ok(None),
    }
}

fn write(path: &Path, bytes: &[u8]) -> CmdResult {
    fs::write(path, bytes).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn verify_lattice(strict: bool) -> CmdResult {
    let l = Lattice::from_edges(&arpshield_core::lattice::causality_edges())
        .map_err(|e| Failure::Check(e.to_string()))?;
    println!("partial order: ok");
    println!(
        "lattice: ok, bottom {} top {}",
        l.bottom().name(),
        l.top().name()
    );
    print!("{}", render_table("join (LUB)", l.join_table()));
    print!("{}", render_table("meet (GLB)", l.meet_table()));
    let bad = l.table_mismatches();
    println!("brute-force cross-check: {} of 128 entries differ", bad);
    let stated = l.stated_mismatches();
    for m in &stated {
        println!("stated example differs: {m}");
    }
    if bad > 0 {
        return Err(Failure::Check(format!(
            "{bad} table entries differ from brute force"
        )));
    }
    if strict && !stated.is_empty() {
        return Err(Failure::Check(format!(
            "{} stated examples differ",
            stated.len()
        )));
    }
    Ok(())
}

fn gen(a: GenArgs) -> CmdResult {
    let seed = env_seed()?.or(a.seed).unwrap_or(0);
    if a.paper_mix {
        let mut s = Scenario::paper_mix(seed);
        s.detector.kind = a.detector;
        s.detector.static_from_topology = a.static_entries;
        let text = s.to_toml().map_err(usage)?;
        return write(&a.out, text.as_bytes());
    }
    let class: AttackClass = a
        .class
        .as_deref()
        .unwrap_or_default()
        .parse()
        .map_err(usage)?;
    let s = Scenario::paper_mix(seed);
    let mut rng = ScenarioRng::new(seed);
    let mut out = Vec::new();
    for i in 0..a.count {
        let mut inj = generate_class(class, &s.topology, &mut rng).map_err(usage)?;
        inj.frame.frame_id = i as u64;
        let at = s.schedule.gap().as_nanos() * i as u64;
        out.extend_from_slice(&encode_trace_record(at, &inj.frame));
    }
    write(&a.out, &out)
}

fn run(a: RunArgs) -> CmdResult {
    let format: Format = a.format.parse().map_err(usage)?;
    let mut s = Scenario::from_toml(&read(&a.scenario)?).map_err(usage)?;
    if let Some(seed) = env_seed()? {
        s.seed.value = seed;
    }
    if let Some(kind) = a.detector {
        s.detector.kind = kind;
    }
    let registry = DetectorRegistry::with_defaults();
    if registry.get(&s.detector.kind).is_none() {
        return Err(usage(format!(
            "unknown detector {:?} (available: {})",
            s.detector.kind,
            registry.names().join(", ")
        )));
    }
    let out = run_scenario(&s, &registry, a.trace.is_some()).map_err(usage)?;
    if let (Some(path), Some(trace)) = (&a.trace, &out.trace) {
        write(path, trace)?;
    }
    let report = build_report(&out.records, &s, &s.detector.kind);
    write(&a.out, &emit(&report, format))?;
    println!(
        "{}: PDR {}% ({}/{}), {} records",
        report.detector_name,
        report.pdr_percent,
        report.pdr.apd,
        report.pdr.tmp,
        out.records.len()
    );
    Ok(())
}

fn load_report(path: &Path) -> Result<Report, Failure> {
    Report::from_json(&read(path)?)
        .map_err(|e| usage(format!("{}: not a JSON report: {e}", path.display())))
}

fn rerender(input: &Path, format: &str) -> CmdResult {
    let format: Format = format.parse().map_err(usage)?;
    let r = load_report(input)?;
    use std::io::Write;
    std::io::stdout()
        .write_all(&emit(&r, format))
        .map_err(|e| usage(e.to_string()))
}

fn compare(input: &Path, baseline: &Path) -> CmdResult {
    let clcc = load_report(input)?;
    let base = load_report(baseline)?;
    let checks = published_rate_checks(&clcc, &base);
    for c in &checks {
        println!(
            "{} {} ({})",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    if failed > 0 {
        return Err(Failure::Check(format!(
            "{failed} of {} checks failed",
            checks.len()
        )));
    }
    Ok(())
}
