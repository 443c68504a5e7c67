use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mimo_mesh::dual::{
    compare_dpc_tdm, solve, CrpaSolution, CuttingPlaneParams, GainReport, Method, Scheme, SolveTrace,
    SubgradientParams,
};
use mimo_mesh::network::{random_scenario, ModelParams, RandomScenarioParams, Scenario};

/// Joint routing and MIMO broadcast power allocation for mesh networks.
#[derive(Parser, Debug)]
#[command(name = "mimo-mesh", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw a random scenario and write it as JSON.
    Generate {
        #[command(flatten)]
        gen: GenArgs,
        #[arg(long, default_value = "scenario.json")]
        out: PathBuf,
    },
    /// Solve a scenario and write the trace and recovered solution.
    Solve(SolveArgs),
}

#[derive(Args, Debug, Clone)]
struct GenArgs {
    /// Number of nodes.
    #[arg(long)]
    n: Option<usize>,
    /// Number of sessions.
    #[arg(long)]
    f: Option<usize>,
    #[arg(long, default_value_t = 2)]
    nt: usize,
    #[arg(long, default_value_t = 2)]
    nr: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Transmission range in the unit square.
    #[arg(long, default_value_t = 0.5)]
    dmax: f64,
    #[arg(long, default_value_t = 10.0)]
    pmax_dbm: f64,
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// Scenario file; without it one is generated from the generation flags.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[command(flatten)]
    gen: GenArgs,
    #[arg(long, value_enum, default_value_t = MethodArg::CuttingPlane)]
    method: MethodArg,
    #[arg(long, value_enum, default_value_t = SchemeArg::Dpc)]
    scheme: SchemeArg,
    /// Relative gap at which to stop.
    #[arg(long)]
    tol: Option<f64>,
    /// Cut limit (cutting plane) or iteration limit (subgradient).
    #[arg(long)]
    max_iters: Option<usize>,
    /// Subgradient step rule `beta / k`.
    #[arg(long, default_value_t = 0.1)]
    beta: f64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum MethodArg {
    CuttingPlane,
    Subgradient,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq)]
enum SchemeArg {
    Dpc,
    Tdm,
    Both,
}

const EXIT_INPUT: u8 = 1;
const EXIT_CAP: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_INPUT) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Generate { gen, out } => generate(&gen, &out).map(|()| true),
        Command::Solve(args) => run_solve(&args),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_CAP),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}

fn build_scenario(gen: &GenArgs) -> Result<Scenario> {
    let (Some(nodes), Some(sessions)) = (gen.n, gen.f) else {
        bail!("--n and --f are required to generate a scenario");
    };
    if nodes < 2 {
        bail!("--n must be at least 2, got {nodes}");
    }
    let model = ModelParams { n_t: gen.nt, n_r: gen.nr, d_max: gen.dmax, p_max_dbm: gen.pmax_dbm, ..Default::default() };
    Ok(random_scenario(&RandomScenarioParams { seed: gen.seed, nodes, sessions, model })?)
}

fn summary(sc: &Scenario) -> String {
    let mut s = format!("{} nodes, {} links, {} sessions", sc.n_nodes(), sc.n_links(), sc.n_sessions());
    for (i, sess) in sc.sessions.iter().enumerate() {
        s.push_str(&format!("\n  session {i}: {} -> {}", sess.src, sess.dst));
    }
    s
}

fn generate(gen: &GenArgs, out: &Path) -> Result<()> {
    let sc = build_scenario(gen)?;
    fs::write(out, sc.to_json()?).with_context(|| format!("writing {}", out.display()))?;
    println!("{}", summary(&sc));
    println!("wrote {}", out.display());
    Ok(())
}

fn load_scenario(args: &SolveArgs) -> Result<Scenario> {
    match &args.scenario {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Scenario::from_json(&text).with_context(|| format!("parsing {}", path.display()))
        }
        None => build_scenario(&args.gen),
    }
}

fn params(args: &SolveArgs) -> Result<(CuttingPlaneParams, SubgradientParams)> {
    let mut cp = CuttingPlaneParams::default();
    let mut sg = SubgradientParams { beta: args.beta, ..Default::default() };
    if let Some(tol) = args.tol {
        if !(tol >= 0.0) {
            bail!("--tol must be non-negative");
        }
        cp.tol_rel = tol;
        sg.tol_rel = tol;
    }
    if let Some(cap) = args.max_iters {
        if cap == 0 {
            bail!("--max-iters must be positive");
        }
        cp.max_cuts = cap;
        sg.max_iters = cap;
    }
    if !(args.beta > 0.0) {
        bail!("--beta must be positive");
    }
    Ok((cp, sg))
}

fn write_run(dir: &Path, suffix: &str, sol: &CrpaSolution, trace: &SolveTrace) -> Result<()> {
    fs::write(dir.join(format!("trace{suffix}.csv")), trace.to_csv())?;
    let json = serde_json::to_string_pretty(&sol.report())?;
    fs::write(dir.join(format!("solution{suffix}.json")), json + "\n")?;
    Ok(())
}

fn describe(sol: &CrpaSolution) -> String {
    format!(
        "{:?} {:?}: objective {:.6}, dual bound {:.6}, {} iterations, {}",
        sol.scheme,
        sol.method,
        sol.objective,
        sol.dual_bound,
        sol.iterations,
        if sol.converged { "converged" } else { "stopped at cap" }
    )
}

/// Returns whether every requested run converged.
fn run_solve(args: &SolveArgs) -> Result<bool> {
    let sc = load_scenario(args)?;
    let (cp, sg) = params(args)?;
    let method = match args.method {
        MethodArg::CuttingPlane => Method::CuttingPlane,
        MethodArg::Subgradient => Method::Subgradient,
    };
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    println!("{}", summary(&sc));
    let schemes = match args.scheme {
        SchemeArg::Dpc => vec![Scheme::Dpc],
        SchemeArg::Tdm => vec![Scheme::Tdm],
        SchemeArg::Both => vec![Scheme::Dpc, Scheme::Tdm],
    };
    if schemes.len() == 1 {
        let (sol, trace) = solve(&sc, schemes[0], method, &cp, &sg)?;
        write_run(&args.out, "", &sol, &trace)?;
        println!("{}", describe(&sol));
        return Ok(sol.converged);
    }
    let (report, runs) = match method {
        Method::CuttingPlane => {
            let c = compare_dpc_tdm(&sc, &cp)?;
            (c.report, [(c.dpc, c.dpc_trace), (c.tdm, c.tdm_trace)])
        }
        Method::Subgradient => {
            let dpc = solve(&sc, Scheme::Dpc, method, &cp, &sg)?;
            let tdm = solve(&sc, Scheme::Tdm, method, &cp, &sg)?;
            (GainReport::from_solutions(&dpc.0, &tdm.0), [dpc, tdm])
        }
    };
    write_run(&args.out, "", &runs[0].0, &runs[0].1)?;
    write_run(&args.out, "_tdm", &runs[1].0, &runs[1].1)?;
    fs::write(args.out.join("compare.json"), serde_json::to_string_pretty(&report)? + "\n")?;
    for (sol, _) in &runs {
        println!("{}", describe(sol));
    }
    println!(
        "utility gain {:.4}%, rate gain {:.4}%{}",
        100.0 * report.utility_gain,
        100.0 * report.rate_gain,
        if report.dominance_holds { "" } else { " (DPC below TDM)" }
    );
    Ok(runs.iter().all(|(s, _)| s.converged))
}
