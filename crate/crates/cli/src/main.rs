use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use corps::netsim::{self, DEFAULT_FUEL};
use corps::nicheck::{self, NiError};
use corps::normalize::{normalize_with, NormalizeError, StepRecord};
use corps::parser::line_col;
use corps::project::ProjectError;
use corps::syntax::Span;
use corps::typecheck::{check_program, CheckedProgram, Checker, TypeError};
use corps::{
    load_topology, parse_path, parse_program, project, project_network, resolve_topology, EvalMode,
    GenAgent, Network, NiConfig, SchedulerPolicy, Topology, Verdict,
};

const OK: u8 = 0;
const REJECTED: u8 = 1;
const PARSE: u8 = 2;
const FINDING: u8 = 3;
const USAGE: u8 = 4;

#[derive(Parser)]
#[command(
    name = "corps",
    version,
    about = "Typecheck, evaluate, project and simulate choreographies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Source {
    file: PathBuf,
    /// Preset name or topology file; overrides the program's header.
    #[arg(long)]
    topology: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    CommFree,
    Positive,
}

#[derive(Subcommand)]
enum Command {
    /// Typecheck a program and print the type of main.
    Check {
        #[command(flatten)]
        src: Source,
        /// Print the typing derivation.
        #[arg(long)]
        derivation: bool,
    },
    /// Evaluate main and print its normal form.
    Normalize {
        #[command(flatten)]
        src: Source,
        #[arg(long, value_enum, default_value = "positive")]
        mode: Mode,
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: usize,
        /// Write the reduction trace as JSON Lines.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Print the local process of one address, or of every address.
    Project {
        #[command(flatten)]
        src: Source,
        #[arg(long, conflicts_with = "all", required_unless_present = "all")]
        agent: Option<String>,
        #[arg(long)]
        all: bool,
        /// Write the projected network as JSON.
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Run the projected network and compare with the choreography.
    Simulate {
        #[arg(required_unless_present = "network", conflicts_with = "network")]
        file: Option<PathBuf>,
        #[arg(long)]
        topology: Option<String>,
        /// Run a network saved by `project --emit` instead of a program.
        #[arg(long)]
        network: Option<PathBuf>,
        /// rr, random, or random:SEED. Default: round-robin plus `--runs` random schedules.
        #[arg(long)]
        schedule: Option<String>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        runs: u64,
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: usize,
        /// Write the first failing (else the first) run's trace as JSON Lines.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Test whether an input can influence what an observer sees.
    Ni {
        #[command(flatten)]
        src: Source,
        /// Input to vary; defaults to the program's only input.
        #[arg(long)]
        input: Option<String>,
        #[arg(long)]
        observe: String,
        /// Comma-separated values; defaults to every value of a finite input type.
        #[arg(long)]
        values: Option<String>,
        #[arg(long, default_value_t = 10)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Run even when the topology permits the flow.
        #[arg(long)]
        force: bool,
        /// Compare under this single schedule only.
        #[arg(long)]
        schedule: Option<SchedulerPolicy>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

type Outcome = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(USAGE),
            };
        }
    };
    let outcome = match cli.command {
        Command::Check { src, derivation } => cmd_check(&src, derivation),
        Command::Normalize {
            src,
            mode,
            fuel,
            trace,
        } => cmd_normalize(&src, mode, fuel, trace.as_deref()),
        Command::Project {
            src,
            agent,
            all: _,
            emit,
        } => cmd_project(&src, agent.as_deref(), emit.as_deref()),
        Command::Simulate {
            file,
            topology,
            network,
            schedule,
            seed,
            runs,
            fuel,
            trace,
        } => {
            let sim = Simulation {
                schedule,
                seed,
                runs,
                fuel,
                trace,
            };
            match (file, network) {
                (_, Some(net)) => sim.network_file(&net),
                (Some(file), None) => sim.program(&Source { file, topology }),
                (None, None) => unreachable!("clap requires one of them"),
            }
        }
        Command::Ni {
            src,
            input,
            observe,
            values,
            trials,
            seed,
            force,
            schedule,
        } => cmd_ni(
            &src,
            input,
            &observe,
            values.as_deref(),
            (trials, seed, force, schedule),
        ),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("{}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::new(USAGE, format!("cannot read {}: {e}", path.display())))
}

fn location(path: &Path, text: &str, span: Option<Span>) -> String {
    match span {
        Some(s) => {
            let (line, col) = line_col(text, s.start);
            format!("{}:{line}:{col}", path.display())
        }
        None => path.display().to_string(),
    }
}

fn render_type_error(path: &Path, text: &str, e: &TypeError) -> String {
    let mut out = format!(
        "{}: error[{}]: {}\n  viewpoint: {}",
        location(path, text, e.span),
        e.rule,
        e.message,
        e.viewpoint
    );
    if let Some(q) = e
        .query
        .as_ref()
        .filter(|q| !e.message.contains(&q.to_string()))
    {
        out.push_str(&format!("\n  relation: {q} does not hold"));
    }
    out
}

fn render_project_error(path: &Path, text: &str, e: &ProjectError) -> String {
    let span = match e {
        ProjectError::NotProjectable { span, .. } | ProjectError::MergeConflict { span, .. } => {
            *span
        }
        ProjectError::IllTyped(t) => return render_type_error(path, text, t),
    };
    format!("{}: error: {e}", location(path, text, span))
}

fn parse_address(s: &str) -> Result<GenAgent, Failure> {
    let s = s.trim();
    let bracketed = if s.starts_with('[') {
        s.to_string()
    } else {
        format!("[{s}]")
    };
    parse_path(&bracketed).map_err(|e| Failure::new(USAGE, format!("bad address `{s}`: {e}")))
}

struct Loaded {
    path: PathBuf,
    text: String,
    checked: CheckedProgram,
}

fn topology_for(
    src: &Source,
    header: Option<&corps::syntax::TopologyRef>,
) -> Result<Topology, Failure> {
    let base = src.file.parent();
    let t = match &src.topology {
        Some(spec) => load_topology(spec, base),
        None => resolve_topology(header, base),
    };
    t.map_err(|e| Failure::new(USAGE, e.to_string()))
}

fn load(src: &Source) -> Result<Loaded, Failure> {
    let text = read(&src.file)?;
    let program = parse_program(&text).map_err(|e| {
        let mut msg = format!(
            "{}: parse error: {e}",
            location(&src.file, &text, Some(e.span))
        );
        if !e.expected.is_empty() {
            msg.push_str(&format!("\n  expected one of: {}", e.expected.join(", ")));
        }
        Failure::new(PARSE, msg)
    })?;
    let topology = topology_for(src, program.topology.as_ref())?;
    let checked = check_program(&program, &topology).map_err(|errs| {
        let rendered: Vec<String> = errs
            .iter()
            .map(|e| render_type_error(&src.file, &text, e))
            .collect();
        Failure::new(REJECTED, rendered.join("\n"))
    })?;
    Ok(Loaded {
        path: src.file.clone(),
        text,
        checked,
    })
}

fn replay_prefix(command: &str, src: &Source) -> String {
    let mut s = format!("replay: corps {command} {}", src.file.display());
    if let Some(t) = &src.topology {
        s.push_str(&format!(" --topology {t}"));
    }
    s
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::new(USAGE, format!("cannot write {}: {e}", path.display())))
}

fn cmd_check(src: &Source, derivation: bool) -> Outcome {
    let l = load(src)?;
    println!("OK : {}", l.checked.main_ty);
    if derivation {
        let mut checker = Checker::new(&l.checked.topology).with_derivations();
        let j = checker
            .check(
                &l.checked.input_context(),
                &l.checked.closed_main(),
                &l.checked.main_ty,
            )
            .map_err(|e| Failure::new(REJECTED, render_type_error(&l.path, &l.text, &e)))?;
        if let Some(d) = j.derivation {
            print!("{}", d.render());
        }
    }
    Ok(OK)
}

fn cmd_normalize(src: &Source, mode: Mode, fuel: usize, trace: Option<&Path>) -> Outcome {
    if fuel == 0 {
        return Err(Failure::new(USAGE, "--fuel must be positive"));
    }
    let l = load(src)?;
    let mode = match mode {
        Mode::CommFree => EvalMode::CommFree,
        Mode::Positive => EvalMode::PositiveComm,
    };
    let mut steps: Vec<StepRecord> = Vec::new();
    let result = normalize_with(mode, &l.checked.closed_main(), fuel, |rec, _| {
        steps.push(rec.clone())
    });
    if let Some(path) = trace {
        corps::normalize::write_trace_jsonl(&steps, create(path)?)
            .map_err(|e| Failure::new(USAGE, e.to_string()))?;
    }
    match result {
        Ok(n) => {
            println!("{}", n.term);
            println!("class: {:?} (steps: {}, mode: {mode})", n.class, n.steps);
            Ok(OK)
        }
        Err(e) => {
            let replay = format!(
                "{} --mode {mode} --fuel {fuel}",
                replay_prefix("normalize", src)
            );
            let kind = match e {
                NormalizeError::FuelExhausted { .. } => "fuel exhausted",
                NormalizeError::StuckUnexpected { .. } => "stuck",
            };
            println!("{kind}: {e}");
            println!("{replay}");
            Ok(FINDING)
        }
    }
}

fn cmd_project(src: &Source, agent: Option<&str>, emit: Option<&Path>) -> Outcome {
    let l = load(src)?;
    let fail = |e: ProjectError| Failure::new(REJECTED, render_project_error(&l.path, &l.text, &e));
    match agent {
        Some(a) => {
            let addr = parse_address(a)?;
            println!("{}", project(&l.checked, &addr).map_err(fail)?);
        }
        None => print!("{}", project_network(&l.checked).map_err(fail)?.render()),
    }
    if let Some(path) = emit {
        let net = project_network(&l.checked).map_err(fail)?;
        serde_json::to_writer_pretty(create(path)?, &net)
            .map_err(|e| Failure::new(USAGE, e.to_string()))?;
    }
    Ok(OK)
}

struct Simulation {
    schedule: Option<String>,
    seed: u64,
    runs: u64,
    fuel: usize,
    trace: Option<PathBuf>,
}

impl Simulation {
    fn schedules(&self) -> Result<Vec<SchedulerPolicy>, Failure> {
        let random = || {
            (self.seed..self.seed + self.runs)
                .map(SchedulerPolicy::Random)
                .collect()
        };
        match self.schedule.as_deref() {
            None => Ok(netsim::standard_schedules(self.seed, self.runs)),
            Some("random") => Ok(random()),
            Some(s) => s
                .parse::<SchedulerPolicy>()
                .map(|p| vec![p])
                .map_err(|e| Failure::new(USAGE, e)),
        }
    }

    fn write_trace(&self, trace: &[netsim::TraceEvent]) -> Result<(), Failure> {
        if let Some(path) = &self.trace {
            netsim::write_trace_jsonl(trace, create(path)?)
                .map_err(|e| Failure::new(USAGE, e.to_string()))?;
        }
        Ok(())
    }

    fn print_finals(&self, net: &Network, policy: SchedulerPolicy) -> Result<(), Failure> {
        if let Ok(r) = netsim::run(net, policy, self.fuel) {
            println!("final values under {policy}:");
            for (addr, v) in &r.finals {
                println!("  {addr} = {}", corps::project::simplify(v));
            }
        }
        Ok(())
    }

    /// Runs every schedule; reports the first failure.
    fn run_all(&self, net: &Network, replay: &str) -> Outcome {
        let schedules = self.schedules()?;
        self.print_finals(net, schedules[0])?;
        for &policy in &schedules {
            match netsim::run(net, policy, self.fuel) {
                Ok(r) if policy == schedules[0] => self.write_trace(&r.trace)?,
                Ok(_) => {}
                Err(e) => {
                    self.write_trace(e.trace())?;
                    println!("FAIL under {policy}: {e}");
                    println!("{replay} --schedule {policy}");
                    return Ok(FINDING);
                }
            }
        }
        println!("completed {} schedules", schedules.len());
        Ok(OK)
    }

    fn network_file(&self, path: &Path) -> Outcome {
        let text = read(path)?;
        let net: Network = serde_json::from_str(&text).map_err(|e| {
            Failure::new(PARSE, format!("{}: bad network JSON: {e}", path.display()))
        })?;
        let replay = format!("replay: corps simulate --network {}", path.display());
        self.run_all(&net, &replay)
    }

    fn program(&self, src: &Source) -> Outcome {
        let l = load(src)?;
        let replay = replay_prefix("simulate", src);
        let schedules = self.schedules()?;
        let report = match netsim::epp_agreement(&l.checked, &schedules, self.fuel) {
            Ok(r) => r,
            Err(netsim::AgreementError::NotProjectable(e)) => {
                return Err(Failure::new(
                    REJECTED,
                    render_project_error(&l.path, &l.text, &e),
                ))
            }
            Err(e @ netsim::AgreementError::OpenProgram) => {
                return Err(Failure::new(USAGE, format!("{e} (see `corps ni`)")))
            }
            Err(other) => {
                println!("note: not comparing with the choreography: {other}");
                let net = project_network(&l.checked).map_err(|e| {
                    Failure::new(REJECTED, render_project_error(&l.path, &l.text, &e))
                })?;
                return self.run_all(&net, &replay);
            }
        };
        self.print_finals(&report.network, schedules[0])?;
        let first_failure = report.failures().next().cloned();
        match first_failure {
            None => {
                if self.trace.is_some() {
                    if let Ok(r) = netsim::run(&report.network, schedules[0], self.fuel) {
                        self.write_trace(&r.trace)?;
                    }
                }
                println!(
                    "AGREE: {} schedules yield {} at {}",
                    report.outcomes.len(),
                    report.expected,
                    report.network.result_address
                );
                Ok(OK)
            }
            Some(f) => {
                let trace = match netsim::run(&report.network, f.policy, self.fuel) {
                    Ok(r) => r.trace,
                    Err(e) => e.trace().to_vec(),
                };
                self.write_trace(&trace)?;
                match &f.result {
                    Ok(v) => println!(
                        "DISAGREE under {}: expected {} at {}, got {v}",
                        f.policy, report.expected, report.network.result_address
                    ),
                    Err(e) => println!("DISAGREE under {}: {e}", f.policy),
                }
                println!("{replay} --schedule {}", f.policy);
                Ok(FINDING)
            }
        }
    }
}

fn cmd_ni(
    src: &Source,
    input: Option<String>,
    observe: &str,
    values: Option<&str>,
    (trials, seed, force, schedule): (u64, u64, bool, Option<SchedulerPolicy>),
) -> Outcome {
    let l = load(src)?;
    let inputs = &l.checked.program.inputs;
    let input = match input {
        Some(i) => i,
        None if inputs.len() == 1 => inputs[0].name.clone(),
        None => return Err(Failure::new(USAGE, "name the input to vary with --input")),
    };
    let observer = parse_address(observe)?;
    let values = match values {
        Some(v) => {
            nicheck::parse_values(v).map_err(|e| Failure::new(PARSE, format!("--values: {e}")))?
        }
        None => {
            let ty = nicheck::input_type(&l.checked, &input).map_err(ni_failure)?;
            nicheck::enumerate_values(ty, 64).ok_or_else(|| {
                Failure::new(
                    USAGE,
                    format!("cannot enumerate values of {ty}; pass --values"),
                )
            })?
        }
    };
    let cfg = NiConfig {
        trials,
        seed,
        force,
        schedule,
        ..NiConfig::new(input, observer, values)
    };
    let verdict = nicheck::ni_check(&l.checked, &cfg).map_err(|e| match e {
        NiError::NotProjectable(p) => {
            Failure::new(REJECTED, render_project_error(&l.path, &l.text, &p))
        }
        other => ni_failure(other),
    })?;
    println!("{verdict}");
    if let Verdict::InterferenceFound(w) = &verdict {
        println!("{} {}", replay_prefix("ni", src), w.replay_args(&cfg));
        return Ok(FINDING);
    }
    Ok(OK)
}

fn ni_failure(e: NiError) -> Failure {
    let code = match e {
        NiError::BadValue { .. } | NiError::NotProjectable(_) => REJECTED,
        NiError::Parse(_) => PARSE,
        _ => USAGE,
    };
    Failure::new(code, e.to_string())
}
