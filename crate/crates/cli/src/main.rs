use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use fgft::experiments::{
    self, group_means, max_dense_n_from_env, parse_seeds, BenchOptions, Budget, EbandConfig,
    GraphSpec, Table2Config, Table3Config, Table4Config,
};
use fgft::filtering::{
    apply_poly, filter_exact, filter_fgft, filter_op_error, filter_operator_exact, fit_poly,
    poly_rcg, FilterSpec,
};
use fgft::graph::{load_graph, GraphFormat};
use fgft::jacobi::{exact_eigenvalues, exact_eigh};
use fgft::metrics::{err_d, err_s, SpectrumNorm};
use fgft::{laplacian, load_fgft, save_fgft, Engine, Fgft, FgftError, Graph, SparseLaplacian};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "fgft",
    version,
    about = "Approximate fast graph Fourier transforms"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an FGFT and write it with a JSON sidecar of metrics.
    Factorize(FactorizeArgs),
    /// Report metrics of an existing FGFT file against its graph.
    Eval(EvalArgs),
    /// Filter a signal exactly, through an FGFT, or with a polynomial.
    Filter(FilterArgs),
    /// Run one of the synthetic benchmark tables and write CSV.
    Bench(BenchArgs),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct GraphSource {
    /// Graph file: edge list, or Matrix Market when the extension is .mtx.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Generator spec such as `sensor:n=256` or `sbm:n=1000,d=8,eps_frac=10`.
    #[arg(long = "gen")]
    generator: Option<String>,
}

#[derive(Args)]
struct GraphArgs {
    #[command(flatten)]
    source: GraphSource,
    /// Seed for random generators.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl GraphArgs {
    fn load(&self) -> anyhow::Result<(Graph, String)> {
        if let Some(path) = &self.source.graph {
            let g = load_graph(path, GraphFormat::from_path(path))?;
            Ok((g, path.display().to_string()))
        } else {
            let spec: GraphSpec = self
                .source
                .generator
                .as_deref()
                .unwrap_or_default()
                .parse()?;
            Ok((spec.generate(self.seed)?, spec.to_string()))
        }
    }
}

#[derive(Args)]
#[group(required = false, multiple = false)]
struct BudgetArgs {
    /// Number of Givens rotations.
    #[arg(long)]
    givens: Option<usize>,
    /// Target complexity gain; J = round(n^2 / (4 RCG)).
    #[arg(long)]
    rcg: Option<f64>,
}

impl BudgetArgs {
    fn budget(&self) -> Option<Budget> {
        match (self.givens, self.rcg) {
            (Some(j), _) => Some(Budget::Rotations(j)),
            (None, Some(r)) => Some(Budget::Rcg(r)),
            _ => None,
        }
    }
}

#[derive(Args)]
struct FactorizeArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long, default_value = "parallel", value_parser = parse_engine)]
    engine: Engine,
    #[command(flatten)]
    budget: BudgetArgs,
    /// Output FGFT file; metrics go to `<out>.json`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long)]
    fgft: PathBuf,
}

#[derive(Args)]
struct FilterArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// `allpass`, `const:<c>`, `lowpass:<cut>`, `exp:<rate>` or `gains:<file>`.
    #[arg(long)]
    filter: String,
    /// `exact`, `fgft:<file>` or `poly:<degree>`.
    #[arg(long)]
    method: String,
    /// Input signal, one value per line.
    #[arg(long)]
    input: PathBuf,
    /// Output signal; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Table {
    Table2,
    Table3,
    Table4,
    Eband,
}

#[derive(Args)]
struct BenchArgs {
    table: Table,
    /// Graphs for table2 and eband (repeatable).
    #[arg(long = "gen")]
    generators: Vec<String>,
    /// Graph file for eband.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Engines for table2; a single engine for the other tables.
    #[arg(long, value_parser = parse_engine)]
    engine: Vec<Engine>,
    #[command(flatten)]
    budget: BudgetArgs,
    /// Seeds as `a..b`, `a..=b` or a comma list.
    #[arg(long, default_value = "0..10")]
    seeds: String,
    /// Graph sizes for table4.
    #[arg(long, value_delimiter = ',')]
    sizes: Vec<usize>,
    /// Average degrees for table3.
    #[arg(long, value_delimiter = ',')]
    degrees: Vec<f64>,
    /// Divisors of the critical epsilon for table3.
    #[arg(long, value_delimiter = ',')]
    eps_fracs: Vec<f64>,
    /// Nodes for table3.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Fill the wall-clock columns.
    #[arg(long)]
    timing: bool,
    /// CSV output; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_engine(s: &str) -> Result<Engine, String> {
    s.parse().map_err(|e: FgftError| e.to_string())
}

fn dense_ok(n: usize) -> bool {
    n <= max_dense_n_from_env().min(fgft::jacobi::MAX_EXACT_N)
}

fn finite_or_null(x: f64) -> serde_json::Value {
    if x.is_finite() {
        json!(x)
    } else {
        serde_json::Value::Null
    }
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn factorize(args: &FactorizeArgs) -> anyhow::Result<()> {
    let (g, source) = args.graph.load()?;
    let l = laplacian(&g);
    let n = l.n();
    let j = args
        .budget
        .budget()
        .unwrap_or(Budget::NLogN(2.0))
        .rotations(n)?;
    let start = Instant::now();
    let f = Fgft::build(&l, args.engine, j);
    let wall = start.elapsed().as_secs_f64();
    save_fgft(&f, &args.out)?;
    let es = if dense_ok(n) {
        Some(err_s(
            f.lambda_hat(),
            &exact_eigenvalues(&l)?,
            SpectrumNorm::Euclidean,
        )?)
    } else {
        None
    };
    let report = json!({
        "graph": source,
        "n": n,
        "engine": args.engine.to_string(),
        "requested_rotations": j,
        "rotations": f.rotation_count(),
        "rcg": finite_or_null(f.rcg()),
        "err_d": err_d(&f, &l)?,
        "err_s": es,
        "early_stopped": f.diagonalization().early_stopped,
        "wall_seconds": wall,
    });
    let path = sidecar_path(&args.out);
    fs::write(&path, serde_json::to_string_pretty(&report)? + "\n")
        .with_context(|| format!("writing {}", path.display()))?;
    println!("{}", serde_json::to_string(&report)?);
    Ok(())
}

fn eval(args: &EvalArgs) -> anyhow::Result<()> {
    let (g, source) = args.graph.load()?;
    let l = laplacian(&g);
    let f = load_fgft(&args.fgft)?;
    if f.n() != l.n() {
        bail!(
            "{} has dimension {}, graph has {}",
            args.fgft.display(),
            f.n(),
            l.n()
        );
    }
    let es = if dense_ok(l.n()) {
        Some(err_s(
            f.lambda_hat(),
            &exact_eigenvalues(&l)?,
            SpectrumNorm::Euclidean,
        )?)
    } else {
        None
    };
    let report = json!({
        "graph": source,
        "n": l.n(),
        "engine": f.params().engine.to_string(),
        "rotations": f.rotation_count(),
        "rcg": finite_or_null(f.rcg()),
        "err_d": err_d(&f, &l)?,
        "err_s": es,
        "same_source": *f.source_hash() == fgft::graph::matrix_digest(&l),
    });
    println!("{}", serde_json::to_string(&report)?);
    Ok(())
}

fn read_values(path: &Path) -> anyhow::Result<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| FgftError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    text.lines()
        .flat_map(|line| line.split('#').next().unwrap_or("").split_whitespace())
        .map(|t| {
            t.parse::<f64>()
                .with_context(|| format!("{}: bad number `{t}`", path.display()))
        })
        .collect()
}

fn parse_filter(s: &str, n: usize) -> anyhow::Result<FilterSpec> {
    let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
    Ok(match kind {
        "allpass" => FilterSpec::Tabulated(vec![1.0; n]),
        "const" => FilterSpec::Tabulated(vec![arg.parse().context("const:<gain>")?; n]),
        "lowpass" => FilterSpec::IdealLowpass {
            cut: arg.parse().context("lowpass:<cut>")?,
        },
        "exp" => FilterSpec::Exponential {
            rate: arg.parse().context("exp:<rate>")?,
        },
        "gains" => FilterSpec::Tabulated(read_values(Path::new(arg))?),
        _ => bail!("unknown filter `{s}`"),
    })
}

fn filter(args: &FilterArgs) -> anyhow::Result<()> {
    let (g, _) = args.graph.load()?;
    let l = laplacian(&g);
    let n = l.n();
    let x = read_values(&args.input)?;
    if x.len() != n {
        bail!(
            "{} holds {} values, graph has {n} nodes",
            args.input.display(),
            x.len()
        );
    }
    let spec = parse_filter(&args.filter, n)?;
    let eig = if dense_ok(n) {
        Some(exact_eigh(&l)?)
    } else {
        None
    };
    let (kind, arg) = args.method.split_once(':').unwrap_or((&args.method, ""));
    let mut stats = serde_json::Map::new();
    let y = match kind {
        "exact" => {
            let Some(eig) = &eig else {
                bail!("exact filtering needs n <= FGFT_MAX_DENSE_N, got {n}")
            };
            stats.insert("operator_error".into(), json!(0.0));
            filter_exact(eig, &spec, &x)?
        }
        "fgft" => {
            let f = load_fgft(arg)?;
            if f.n() != n {
                bail!("{arg} has dimension {}, graph has {n}", f.n());
            }
            stats.insert("rcg".into(), finite_or_null(f.rcg()));
            if let Some(eig) = &eig {
                let op = filter_operator_exact(eig, &spec)?;
                let e = filter_op_error(|v| filter_fgft(&f, &spec, v), op.view())?;
                stats.insert("operator_error".into(), json!(e));
            }
            filter_fgft(&f, &spec, &x)?
        }
        "poly" => {
            let p: usize = arg.parse().context("poly:<degree>")?;
            let sparse = SparseLaplacian::from_graph(&g);
            let (h, lmax) = match &eig {
                Some(eig) => (
                    spec.response(&eig.values)?,
                    *eig.values.last().unwrap_or(&0.0),
                ),
                None => {
                    if matches!(
                        spec,
                        FilterSpec::IdealLowpass { .. } | FilterSpec::Tabulated(_)
                    ) {
                        bail!(
                            "rank-indexed filters need the exact spectrum (n <= FGFT_MAX_DENSE_N)"
                        );
                    }
                    let bound = 2.0 * g.max_degree();
                    (spec.response(&vec![0.0; n])?, bound)
                }
            };
            let pf = fit_poly(h, p, lmax.max(f64::MIN_POSITIVE))?;
            stats.insert("rcg".into(), json!(poly_rcg(n, sparse.nnz(), p)));
            stats.insert("fit_residual".into(), json!(pf.fit_residual));
            if let Some(eig) = &eig {
                let op = filter_operator_exact(eig, &spec)?;
                let e = filter_op_error(|v| apply_poly(&sparse, &pf, v), op.view())?;
                stats.insert("operator_error".into(), json!(e));
            }
            apply_poly(&sparse, &pf, &x)?
        }
        _ => bail!("unknown method `{}`", args.method),
    };
    let mut text = String::new();
    for v in &y {
        text.push_str(&format!("{v}\n"));
    }
    match &args.out {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
            println!("{}", serde_json::Value::Object(stats));
        }
        None => {
            print!("{text}");
            eprintln!("{}", serde_json::Value::Object(stats));
        }
    }
    Ok(())
}

fn write_rows<T: serde::Serialize>(rows: &[T], out: &Option<PathBuf>) -> anyhow::Result<()> {
    match out {
        Some(path) => experiments::write_csv_file(rows, path)?,
        None => experiments::write_csv(rows, std::io::stdout().lock())?,
    }
    Ok(())
}

fn bench(args: &BenchArgs) -> anyhow::Result<()> {
    let opts = BenchOptions {
        seeds: parse_seeds(&args.seeds)?,
        timing: args.timing,
        max_dense_n: max_dense_n_from_env().min(fgft::jacobi::MAX_EXACT_N),
    };
    let single_engine = || -> anyhow::Result<Engine> {
        match args.engine.as_slice() {
            [] => Ok(Engine::Parallel),
            [e] => Ok(*e),
            _ => bail!("this table takes a single --engine"),
        }
    };
    let mut err = std::io::stderr().lock();
    match args.table {
        Table::Table2 => {
            let graphs = if args.generators.is_empty() {
                ["erdos", "community", "sensor", "ring"]
                    .iter()
                    .flat_map(|f| [128, 256, 512, 1024].map(|n| format!("{f}:n={n}")))
                    .map(|s| s.parse())
                    .collect::<Result<Vec<GraphSpec>, _>>()?
            } else {
                args.generators
                    .iter()
                    .map(|s| s.parse())
                    .collect::<Result<Vec<GraphSpec>, _>>()?
            };
            let engines = if args.engine.is_empty() {
                vec![Engine::Sequential, Engine::Parallel]
            } else {
                args.engine.clone()
            };
            let cfg = Table2Config {
                graphs,
                engines,
                budget: args.budget.budget(),
            };
            let rows = experiments::run_table2(&cfg, &opts)?;
            write_rows(&rows, &args.out)?;
            for ((family, n, engine), m) in group_means(
                &rows,
                |r| (r.family.clone(), r.n, r.engine.clone()),
                |r| r.err_d,
            ) {
                writeln!(err, "{family} n={n} {engine}: mean err_d {m:.4}")?;
            }
        }
        Table::Table3 => {
            let mut cfg = Table3Config {
                n: args.n,
                engine: single_engine()?,
                ..Table3Config::default()
            };
            if !args.degrees.is_empty() {
                cfg.degrees = args.degrees.clone();
            }
            if !args.eps_fracs.is_empty() {
                cfg.eps_divisors = args.eps_fracs.clone();
            }
            match args.budget.budget() {
                Some(Budget::Rcg(r)) => cfg.rcg = r,
                Some(_) => bail!("table3 takes --rcg"),
                None => {}
            }
            let rows = experiments::run_table3(&cfg, &opts)?;
            write_rows(&rows, &args.out)?;
            let means = group_means(
                &rows,
                |r| (r.avg_degree.to_bits(), r.eps_divisor.to_bits()),
                |r| r.err_d,
            );
            let spec_means = group_means(
                &rows,
                |r| (r.avg_degree.to_bits(), r.eps_divisor.to_bits()),
                |r| r.err_s.unwrap_or(f64::NAN),
            );
            for (((d, div), ed), (_, es)) in means.into_iter().zip(spec_means) {
                let (d, div) = (f64::from_bits(d), f64::from_bits(div));
                writeln!(
                    err,
                    "d={d} eps=eps_c/{div}: mean err_d {ed:.4} err_s {es:.4}"
                )?;
            }
        }
        Table::Table4 => {
            let mut cfg = Table4Config {
                engine: single_engine()?,
                ..Table4Config::default()
            };
            if !args.sizes.is_empty() {
                cfg.sizes = args.sizes.clone();
            }
            let rows = experiments::run_table4(&cfg, &opts)?;
            write_rows(&rows, &args.out)?;
            for ((n, rcg), m) in group_means(&rows, |r| (r.n, r.rcg.to_bits()), |r| r.err_d) {
                writeln!(
                    err,
                    "n={n} RCG={:.2}: mean err_d {m:.4}",
                    f64::from_bits(rcg)
                )?;
            }
        }
        Table::Eband => {
            let cfg = EbandConfig {
                engine: single_engine()?,
                ..EbandConfig::default()
            };
            let mut rows = Vec::new();
            if let Some(path) = &args.graph {
                let g = load_graph(path, GraphFormat::from_path(path))?;
                rows.extend(experiments::run_eband(
                    &path.display().to_string(),
                    &g,
                    0,
                    &cfg,
                    &opts,
                )?);
            }
            let generators = if args.generators.is_empty() && args.graph.is_none() {
                vec!["sensor:n=512".to_string()]
            } else {
                args.generators.clone()
            };
            for s in &generators {
                let spec: GraphSpec = s.parse()?;
                for &seed in &opts.seeds {
                    let g = spec.generate(seed)?;
                    rows.extend(experiments::run_eband(
                        &spec.to_string(),
                        &g,
                        seed,
                        &cfg,
                        &opts,
                    )?);
                }
            }
            write_rows(&rows, &args.out)?;
        }
    }
    Ok(())
}

/// Input errors (missing or malformed files, bad parameters) exit with 2.
fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<FgftError>() {
        Some(
            FgftError::Io { .. }
            | FgftError::Parse { .. }
            | FgftError::InvalidParameter(_)
            | FgftError::InvalidGraph(_)
            | FgftError::CorruptFile(_)
            | FgftError::VersionMismatch(_),
        ) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Factorize(a) => factorize(a),
        Command::Eval(a) => eval(a),
        Command::Filter(a) => filter(a),
        Command::Bench(a) => bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let mut msg = e.to_string();
            for cause in e.chain().skip(1) {
                let c = cause.to_string();
                if !msg.contains(&c) {
                    msg = format!("{msg}: {c}");
                }
            }
            eprintln!("error: {msg}");
            ExitCode::from(exit_code(&e))
        }
    }
}
