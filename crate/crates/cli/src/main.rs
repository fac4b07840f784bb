//! `rklab` command-line front end: seminorms, spectral radii, word-graph
//! distances, Wasserstein distances, Connes brackets, Kantorovich duality,
//! and the two figure emitters.
//!
//! Exit codes: 0 success, 2 validation error, 3 solver non-convergence
//! (partial bracket still written). Errors go to stderr as JSON.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use rklab_core::connes::connes_depth;
use rklab_core::function::CylinderFunction;
use rklab_core::measure::CylinderMeasure;
use rklab_core::seminorm::{check_admissible, seminorm_bounds};
use rklab_core::spectral::{
    build_transfer, commutator_spectral_radius, spectral_radius, tropical_radius,
    variational_bound, DEFAULT_TOL,
};
use rklab_core::transport::{kantorovich_dual, wasserstein_graph, TransportInstance};
use rklab_core::word::Word;
use rklab_core::wordgraph::WordGraph;
use rklab_core::{Error, Exponents};

#[derive(Parser)]
#[command(name = "rklab", version, about = "finite-depth shift-space computations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Commutator seminorm of a cylinder function
    Seminorm {
        #[arg(long)]
        f: PathBuf,
        #[arg(long)]
        p: String,
    },
    /// Spectral radius bounds for the weighted Koopman operator of f∘σ − f
    Specrad {
        #[arg(long)]
        f: PathBuf,
        #[arg(long)]
        p: String,
        #[arg(long, value_enum, default_value_t = Variant::Normalized)]
        variant: Variant,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Word-graph distances
    Graph {
        #[arg(long)]
        depth: usize,
        #[arg(long, requires = "v", conflicts_with = "all_pairs")]
        u: Option<String>,
        #[arg(long, requires = "u")]
        v: Option<String>,
        #[arg(long = "all-pairs")]
        all_pairs: Option<PathBuf>,
    },
    /// Wasserstein distance W_{d_k} between two cylinder measures
    Wasserstein {
        #[arg(long)]
        mu: PathBuf,
        #[arg(long)]
        nu: PathBuf,
        #[arg(long)]
        depth: usize,
    },
    /// Certified Connes-distance bracket
    Connes {
        #[arg(long)]
        mu: PathBuf,
        #[arg(long)]
        nu: PathBuf,
        #[arg(long)]
        p: String,
        #[arg(long)]
        depth: usize,
        #[arg(long, default_value_t = 2000)]
        budget: usize,
    },
    /// Transportation LP and Kantorovich dual on CSV inputs
    Duality {
        #[arg(long)]
        cost: PathBuf,
        #[arg(long)]
        mu: PathBuf,
        #[arg(long)]
        nu: PathBuf,
    },
    /// CSV data behind the two figures
    Figures {
        #[arg(long, value_enum)]
        which: Figure,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    Printed,
    Normalized,
}

#[derive(Clone, Copy, ValueEnum)]
enum Figure {
    Fgamma,
    Dist,
}

fn main() -> ExitCode {
    rklab_core::init_threads();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (code, kind) = match &e {
                CliError::Core(Error::NoConvergence { .. }) => (3, "non-convergence"),
                _ => (2, "validation"),
            };
            eprintln!("{}", json!({ "error": e.to_string(), "kind": kind }));
            ExitCode::from(code)
        }
    }
}

#[derive(Debug)]
enum CliError {
    Core(Error),
    Io(String),
    Input(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(m) | CliError::Input(m) => write!(f, "{m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Seminorm { f, p } => cmd_seminorm(&f, &p),
        Command::Specrad { f, p, variant, tol } => cmd_specrad(&f, &p, variant, tol),
        Command::Graph {
            depth,
            u,
            v,
            all_pairs,
        } => cmd_graph(depth, u.as_deref(), v.as_deref(), all_pairs.as_deref()),
        Command::Wasserstein { mu, nu, depth } => cmd_wasserstein(&mu, &nu, depth),
        Command::Connes {
            mu,
            nu,
            p,
            depth,
            budget,
        } => cmd_connes(&mu, &nu, &p, depth, budget),
        Command::Duality { cost, mu, nu } => cmd_duality(&cost, &mu, &nu),
        Command::Figures { which, k, out } => cmd_figures(which, k, &out),
    }
}

fn read_function(path: &Path) -> Result<CylinderFunction> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok(CylinderFunction::from_json(&text)?)
}

fn read_measure(path: &Path) -> Result<CylinderMeasure> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok(CylinderMeasure::from_json(&text)?)
}

fn parse_exponent(p: &str) -> Result<Exponents> {
    Ok(Exponents::parse(p)?)
}

/// Temp-file-then-rename write, so readers never see a partial file.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut fh = fs::File::create(&tmp)?;
        fh.write_all(contents.as_bytes())?;
        fh.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Streaming variant of `write_atomic` for large CSV matrices.
fn write_atomic_stream<F>(path: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&mut std::io::BufWriter<fs::File>) -> std::io::Result<()>,
{
    let tmp = path.with_extension("tmp");
    {
        let mut w = std::io::BufWriter::new(fs::File::create(&tmp)?);
        fill(&mut w)?;
        w.flush()?;
        w.into_inner().map_err(|e| CliError::Io(e.to_string()))?.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn emit(report: &serde_json::Value) {
    let text = serde_json::to_string_pretty(report).expect("serializable");
    // ignore broken pipes so `rklab ... | head` stays quiet
    let _ = writeln!(std::io::stdout(), "{text}");
}

fn cmd_seminorm(fpath: &Path, p: &str) -> Result<()> {
    let f = read_function(fpath)?;
    let p = parse_exponent(p)?;
    let bounds = seminorm_bounds(&f, &p);
    let adm = check_admissible(&f, &p);
    emit(&json!({
        "depth": f.depth(),
        "p": p.p,
        "lambda": p.lambda,
        "value": bounds.seminorm,
        "upper": bounds.upper,
        "lower": bounds.lower,
        "chain": bounds.chain,
        "admissible": adm,
    }));
    Ok(())
}

fn cmd_specrad(fpath: &Path, p: &str, variant: Variant, tol: Option<f64>) -> Result<()> {
    let f = read_function(fpath)?;
    let p = parse_exponent(p)?;
    let w = f.derivative()?;
    let tol = tol.unwrap_or(DEFAULT_TOL);
    let variational = variational_bound(&w, &p, tol)?;
    let value = match variant {
        Variant::Printed => variational.printed,
        Variant::Normalized => variational.normalized,
    };
    let (bracket, radius) = if p.lambda.is_infinite() {
        (None, tropical_radius(&w))
    } else {
        let t = build_transfer(&w, &p)?;
        let r = spectral_radius(&t, tol)?;
        let lam = p.lambda.finite();
        (
            Some(json!({
                "radius": r.radius,
                "bracket_lo": r.bracket_lo,
                "bracket_hi": r.bracket_hi,
                "iterations": r.iterations,
            })),
            r.radius.max(0.0).powf(1.0 / lam),
        )
    };
    let p2_estimate = if !p.lambda.is_infinite() {
        Some(commutator_spectral_radius(&f, &p, f.depth() + 1, 100_000)?)
    } else {
        None
    };
    emit(&json!({
        "depth": f.depth(),
        "p": p.p,
        "lambda": p.lambda,
        "value": value,
        "r": radius,
        "variant": match variant { Variant::Printed => "printed", Variant::Normalized => "normalized" },
        "variant_values": { "printed": variational.printed, "normalized": variational.normalized },
        "transfer": bracket,
        "commutator_radius_p2": p2_estimate,
    }));
    Ok(())
}

fn cmd_graph(
    depth: usize,
    u: Option<&str>,
    v: Option<&str>,
    all_pairs: Option<&Path>,
) -> Result<()> {
    let g = WordGraph::new(depth)?;
    match (u, v, all_pairs) {
        (Some(u), Some(v), None) => {
            let u = Word::parse(u)?;
            let v = Word::parse(v)?;
            let d = g.bfs_distance(&u, &v)?;
            let lcs = g.lcs_distance_formula(&u, &v)?;
            emit(&json!({
                "depth": depth,
                "u": u.to_string(),
                "v": v.to_string(),
                "distance": d,
                "lcs_formula": lcs,
                "formula_agrees": lcs.value == d,
            }));
            Ok(())
        }
        (None, None, Some(out)) => {
            if depth > 14 {
                return Err(CliError::Input(format!(
                    "all-pairs output limited to depth 14, got {depth}"
                )));
            }
            let mut csv = String::new();
            for row in g.all_pairs() {
                let line: Vec<String> = row.iter().map(|d| d.to_string()).collect();
                csv.push_str(&line.join(","));
                csv.push('\n');
            }
            write_atomic(out, &csv)?;
            emit(&json!({ "depth": depth, "written": out.display().to_string() }));
            Ok(())
        }
        _ => Err(CliError::Input(
            "graph needs either --u WORD --v WORD or --all-pairs OUT.csv".into(),
        )),
    }
}

fn cmd_wasserstein(mu: &Path, nu: &Path, depth: usize) -> Result<()> {
    let mu = read_measure(mu)?;
    let nu = read_measure(nu)?;
    let r = wasserstein_graph(&mu, &nu, depth)?;
    emit(&json!({
        "depth": r.depth,
        "value": r.value,
        "potential": r.potential,
    }));
    Ok(())
}

fn cmd_connes(mu: &Path, nu: &Path, p: &str, depth: usize, budget: usize) -> Result<()> {
    let mu = read_measure(mu)?;
    let nu = read_measure(nu)?;
    let p = parse_exponent(p)?;
    let b = connes_depth(&mu, &nu, &p, depth, budget)?;
    let witness_file = PathBuf::from("connes_witness.json");
    write_atomic(
        &witness_file,
        &serde_json::to_string_pretty(&b.witness).expect("serializable"),
    )?;
    emit(&json!({
        "depth": b.depth,
        "p": p.p,
        "lambda": p.lambda,
        "lower": b.lower,
        "upper": b.upper,
        "wasserstein": b.wasserstein,
        "budget_exhausted": b.budget_exhausted,
        "witness_file": witness_file.display().to_string(),
    }));
    Ok(())
}

fn read_csv_matrix(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|s| s.trim().parse::<f64>()).collect();
        rows.push(row.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?);
    }
    Ok(rows)
}

fn read_csv_vector(path: &Path) -> Result<Vec<f64>> {
    Ok(read_csv_matrix(path)?.into_iter().flatten().collect())
}

fn cmd_duality(cost: &Path, mu: &Path, nu: &Path) -> Result<()> {
    let cost = read_csv_matrix(cost)?;
    let mu = read_csv_vector(mu)?;
    let nu = read_csv_vector(nu)?;
    let inst = TransportInstance::new(cost, mu, nu)?;
    let d = kantorovich_dual(&inst)?;
    emit(&json!({
        "value": d.primal,
        "dual": d.dual,
        "gap": d.gap,
        "certificate": { "a": d.a, "b": d.b },
    }));
    Ok(())
}

fn cmd_figures(which: Figure, k: usize, out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    match which {
        Figure::Fgamma => {
            if k == 0 || k > 16 {
                return Err(CliError::Input(format!("fgamma needs 1 <= k <= 16, got {k}")));
            }
            // one sample per depth-(k+1) plateau of the dyadic embedding:
            // f counts ones among the first k symbols, the discrete
            // derivative is w_{k+1} - w_1
            let mut csv = String::from("t,f,df\n");
            for w in Word::iter_all(k + 1) {
                let t = w.dyadic();
                let f = w.prefix(k).ones();
                let df = w.bit(k) as i64 - w.bit(0) as i64;
                csv.push_str(&format!("{t},{f},{df}\n"));
            }
            let path = out.join("fgamma.csv");
            write_atomic(&path, &csv)?;
            emit(&json!({ "k": k, "written": [path.display().to_string()] }));
        }
        Figure::Dist => {
            if k == 0 || k > 12 {
                return Err(CliError::Input(format!("dist needs 1 <= k <= 12, got {k}")));
            }
            let g = WordGraph::new(k)?;
            let n = g.vertex_count();

            let paths = [
                out.join("distance.csv"),
                out.join("first_difference.csv"),
                out.join("overlap.csv"),
            ];

            let matrix = g.all_pairs();
            write_atomic_stream(&paths[0], |w| {
                for row in &matrix {
                    for (j, d) in row.iter().enumerate() {
                        if j > 0 {
                            write!(w, ",")?;
                        }
                        write!(w, "{d}")?;
                    }
                    writeln!(w)?;
                }
                Ok(())
            })?;
            drop(matrix);

            // both remaining matrices depend only on u xor v, so tabulate
            // per xor value and render from the table.
            // first_difference: 2^-N with N the 1-based index of the first
            // differing coordinate; equal words (xor 0) get 0 as documented.
            // overlap: sum of 2^-i over agreeing coordinates, i 1-based.
            let mut fd_table = vec![String::from("0"); n];
            let mut ov_table = vec![String::new(); n];
            for x in 0..n {
                let mut ov = 0.0f64;
                let mut fd = 0.0f64;
                for i in 0..k {
                    let differs = x >> (k - 1 - i) & 1 == 1;
                    if differs && fd == 0.0 {
                        fd = 0.5f64.powi(i as i32 + 1);
                    }
                    if !differs {
                        ov += 0.5f64.powi(i as i32 + 1);
                    }
                }
                if x > 0 {
                    fd_table[x] = fd.to_string();
                }
                ov_table[x] = ov.to_string();
            }
            for (path, table) in [(&paths[1], &fd_table), (&paths[2], &ov_table)] {
                write_atomic_stream(path, |w| {
                    for u in 0..n {
                        for v in 0..n {
                            if v > 0 {
                                write!(w, ",")?;
                            }
                            write!(w, "{}", table[u ^ v])?;
                        }
                        writeln!(w)?;
                    }
                    Ok(())
                })?;
            }
            emit(&json!({
                "k": k,
                "written": paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            }));
        }
    }
    Ok(())
}
