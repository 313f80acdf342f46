use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use defect_designs::asymptotic::{self, DEFAULT_LAMBDA_TOL, DEFAULT_PX_GRID};
use defect_designs::oracle::{self, SearchLimits, DEFAULT_BUDGET};
use defect_designs::rational;
use defect_designs::regions::{self, RegionCurve};
use defect_designs::subset_eval::{self, SizeDistribution};
use defect_designs::{
    copy_designs, hamming_block, make_complete, make_repetition, make_subset, merge_designs,
    symmetrize, BipartiteDesign, Error,
};
use serde_json::{json, Value};

mod output;
mod reproduce;

use output::{write_atomic, Format};

/// Construct, verify and compare defect-tolerant bipartite designs.
#[derive(Debug, Parser)]
#[command(name = "defect-designs", version)]
struct Cli {
    /// Output style for results.
    #[arg(long, value_enum, global = true, default_value_t = Format::Text)]
    format: Format,

    /// Worker threads for parallel sweeps [default: all cores].
    #[arg(long, global = true, env = "DEFECT_DESIGNS_THREADS")]
    threads: Option<usize>,

    /// Evaluation cap for exhaustive searches.
    #[arg(long, global = true, default_value_t = DEFAULT_BUDGET)]
    budget: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check whether a design corrects T defects over Q symbols.
    Verify {
        design: PathBuf,
        #[arg(long)]
        q: usize,
        #[arg(long)]
        t: usize,
    },
    /// Largest number of defects a design corrects over Q symbols.
    Maxt {
        design: PathBuf,
        #[arg(long)]
        q: usize,
    },
    /// Build a standard design and write it as JSON.
    Construct {
        #[command(subcommand)]
        kind: ConstructKind,
        /// Destination file [default: stdout].
        #[arg(long, short, global = true)]
        out: Option<PathBuf>,
    },
    /// Combine design files.
    Compose {
        #[command(subcommand)]
        op: ComposeOp,
        /// Destination file [default: stdout].
        #[arg(long, short, global = true)]
        out: Option<PathBuf>,
    },
    /// Fewest edges of a T-correcting design with K primaries and M redundant nodes.
    SearchMin {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        t: usize,
        #[arg(long)]
        q: usize,
        /// Report every optimal design up to isomorphism.
        #[arg(long)]
        all: bool,
        /// Write the witness (or all witnesses with --all) to this file.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Finite-k functional of a degree distribution.
    Fk {
        ps: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        q: usize,
        /// Also evaluate the version restricted to N copies.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Asymptotic functional of a degree distribution.
    F {
        ps: PathBuf,
        #[arg(long)]
        q: usize,
        /// Outer grid step [default: 1e-4 for q = 2, 1/200 otherwise].
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Write region boundaries as CSV.
    Region {
        #[command(subcommand)]
        kind: RegionKind,
        /// Destination file [default: stdout].
        #[arg(long, short, global = true)]
        out: Option<PathBuf>,
    },
    /// Regenerate a figure or table and check it.
    Reproduce {
        #[arg(value_enum)]
        target: reproduce::Target,
        /// Directory receiving the generated files.
        #[arg(long, default_value = "reproduce")]
        out_dir: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
enum ConstructKind {
    /// K primaries, each wired to its own T redundant nodes.
    Repetition {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        t: usize,
    },
    /// K primaries and R redundant nodes, all connected.
    Complete {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        r: usize,
    },
    /// One redundant node per subset of the listed sizes.
    Subset {
        #[arg(long)]
        k: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
    },
    /// Three primaries: the three pairs and the full triple.
    Hamming,
}

#[derive(Debug, Subcommand)]
enum ComposeOp {
    /// Disjoint union.
    Copy {
        #[arg(required = true)]
        designs: Vec<PathBuf>,
    },
    /// Union over shared primaries.
    Merge {
        #[arg(required = true)]
        designs: Vec<PathBuf>,
    },
    /// Merge of all primary permutations.
    Symmetrize {
        design: PathBuf,
        #[arg(long, default_value_t = defect_designs::design::DEFAULT_SYMMETRIZE_MAX_K)]
        max_k: usize,
    },
}

#[derive(Debug, Subcommand)]
enum RegionKind {
    /// Mixtures of repetition and complete designs.
    Interp {
        #[arg(long)]
        q: usize,
    },
    /// Exact region for a fixed number of defects (binary, T = 1 or 2).
    FiniteT {
        #[arg(long, default_value_t = 2)]
        q: usize,
        #[arg(long)]
        t: usize,
    },
    /// Exact region for three symbols and one defect.
    Q3t1,
    /// Covering lower bound for a fixed number of defects.
    Covering {
        #[arg(long)]
        q: usize,
        #[arg(long)]
        t: usize,
        #[arg(long, default_value_t = 1.5)]
        rho_max: f64,
        #[arg(long, default_value_t = 200)]
        points: usize,
    },
    /// Many defects with K primaries, by a grid over degree distributions.
    RinftyK {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        q: usize,
        /// Denominator of the probability grid.
        #[arg(long, default_value_t = 84)]
        grid: usize,
    },
    /// Converse bound for many defects (binary) from the dual program.
    RinftyBound {
        /// Number of label frequencies in the dual program.
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        c_min: f64,
        #[arg(long, default_value_t = 10.0)]
        c_max: f64,
        #[arg(long, default_value_t = 0.25)]
        c_step: f64,
        /// Degree horizon of the dual program [default: 10 max(c, 2n)].
        #[arg(long)]
        s0: Option<usize>,
        /// Directory receiving one certificate per mean.
        #[arg(long)]
        certificates: Option<PathBuf>,
    },
    /// Adaptive, fixed and non-adaptive wiring side by side.
    Scenarios {
        #[arg(long)]
        q: usize,
    },
}

/// Failures mapped to exit codes.
#[derive(Debug)]
enum Failure {
    Core(Error),
    Usage(String),
    /// A reproduction ran but some checks failed.
    Checks,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Core(Error::Io(e))
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Checks => 1,
            Failure::Core(e) => match e {
                Error::BudgetExceeded { .. } => 3,
                Error::InvalidArgument(_) | Error::Parse(_) | Error::Json(_) => 2,
                _ => 1,
            },
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn read_design(path: &Path) -> CliResult<BipartiteDesign> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(BipartiteDesign::from_json(&text)?)
}

fn read_distribution(path: &Path) -> CliResult<SizeDistribution> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(SizeDistribution::from_json(&text)?)
}

fn emit(format: Format, text: String, value: Value) {
    match format {
        Format::Text => println!("{text}"),
        Format::Json => println!("{value}"),
    }
}

fn emit_design(format: Format, g: &BipartiteDesign, out: Option<&Path>) -> CliResult<()> {
    let body = g.to_json();
    match out {
        None => println!("{body}"),
        Some(path) => {
            write_atomic(path, format!("{body}\n").as_bytes())?;
            emit(
                format,
                format!(
                    "wrote {} (k={} m={} edges={})",
                    path.display(),
                    g.k(),
                    g.m(),
                    g.edges()
                ),
                json!({"path": path, "k": g.k(), "m": g.m(), "edges": g.edges()}),
            );
        }
    }
    Ok(())
}

fn emit_curves(format: Format, curves: &[RegionCurve], out: Option<&Path>) -> CliResult<()> {
    let csv = regions::csv_string(curves);
    match out {
        None => print!("{csv}"),
        Some(path) => {
            write_atomic(path, csv.as_bytes())?;
            let rows: usize = curves.iter().map(|c| c.points.len()).sum();
            emit(
                format,
                format!("wrote {} ({} curves, {rows} rows)", path.display(), curves.len()),
                json!({"path": path, "curves": curves.len(), "rows": rows}),
            );
        }
    }
    Ok(())
}

fn ratio(x: &num_rational::BigRational) -> String {
    rational::format(x)
}

fn run(cli: Cli) -> CliResult<()> {
    let format = cli.format;
    let budget = cli.budget;
    match cli.command {
        Command::Verify { design, q, t } => {
            let g = read_design(&design)?;
            let ok = oracle::is_t_correcting(&g, q, t, budget)?;
            emit(format, ok.to_string(), json!({"q": q, "t": t, "correcting": ok}));
        }
        Command::Maxt { design, q } => {
            let g = read_design(&design)?;
            let t = oracle::design_t(&g, q, budget)?;
            emit(format, t.to_string(), json!({"q": q, "t": t}));
        }
        Command::Construct { kind, out } => {
            let g = match kind {
                ConstructKind::Repetition { k, t } => make_repetition(k, t)?,
                ConstructKind::Complete { k, r } => make_complete(k, r)?,
                ConstructKind::Subset { k, sizes } => make_subset(k, &sizes)?,
                ConstructKind::Hamming => hamming_block(),
            };
            emit_design(format, &g, out.as_deref())?;
        }
        Command::Compose { op, out } => {
            let g = match op {
                ComposeOp::Copy { designs } => copy_designs(&read_all(&designs)?)?,
                ComposeOp::Merge { designs } => merge_designs(&read_all(&designs)?)?,
                ComposeOp::Symmetrize { design, max_k } => symmetrize(&read_design(&design)?, max_k)?,
            };
            emit_design(format, &g, out.as_deref())?;
        }
        Command::SearchMin { k, m, t, q, all, out } => {
            let limits = SearchLimits {
                budget,
                ..SearchLimits::default()
            };
            let found = oracle::search_min_edges(k, m, t, q, &limits)?;
            let witnesses: Vec<&BipartiteDesign> = if all {
                found.all_witnesses.iter().collect()
            } else {
                vec![&found.witness]
            };
            if let Some(path) = &out {
                let body = if all {
                    serde_json::to_string(&witnesses).map_err(Error::Json)?
                } else {
                    found.witness.to_json()
                };
                write_atomic(path, format!("{body}\n").as_bytes())?;
            }
            let mut text = format!("E_min={}", found.e_min);
            for w in &witnesses {
                text.push_str(&format!("\nwitness {}", w.to_json()));
            }
            emit(
                format,
                text,
                json!({
                    "e_min": found.e_min,
                    "witnesses": witnesses,
                    "classes_checked": found.designs_checked,
                }),
            );
        }
        Command::Fk { ps, k, q, n } => {
            let ps = read_distribution(&ps)?;
            let sol = subset_eval::f_k_detailed(&ps, k, q)?;
            let point = regions::finite_k_point(&ps, k, q)?;
            let mut text = format!(
                "F_k = {}\npoint = ({}, {})\ncomposition = {:?}",
                ratio(&sol.value),
                ratio(&point.epsilon),
                ratio(&point.rho),
                sol.composition.counts
            );
            let mut value = json!({
                "k": k,
                "q": q,
                "f_k": ratio(&sol.value),
                "epsilon": ratio(&point.epsilon),
                "rho": ratio(&point.rho),
                "composition": sol.composition.counts,
            });
            if let Some(n) = n {
                let fkn = subset_eval::f_kn(&ps, k, n, q)?;
                text.push_str(&format!(
                    "\nF_k,n = {} ({})",
                    ratio(&fkn.value),
                    if fkn.exact { "exact" } else { "lower bound" }
                ));
                value["n"] = json!(n);
                value["f_kn"] = json!(ratio(&fkn.value));
                value["f_kn_exact"] = json!(fkn.exact);
            }
            emit(format, text, value);
        }
        Command::F { ps, q, tol } => {
            let ps = read_distribution(&ps)?;
            let mean = rational::to_f64(&ps.mean());
            if q == 2 {
                let f = asymptotic::f_binary(&ps, tol.unwrap_or(DEFAULT_LAMBDA_TOL))?;
                emit(
                    format,
                    format!(
                        "F = {:.6} (resolution {})\npoint = ({:.6}, {:.6})\nlambda = {:.6}, threshold = {:.6}",
                        f.value,
                        f.resolution,
                        mean / f.value,
                        1.0 / f.value,
                        f.lambda,
                        f.policy.gamma
                    ),
                    json!({
                        "q": q,
                        "f": f.value,
                        "epsilon": mean / f.value,
                        "rho": 1.0 / f.value,
                        "lambda": f.lambda,
                        "policy": f.policy,
                        "resolution": f.resolution,
                    }),
                );
            } else {
                let f = asymptotic::f_general(&ps, q, tol.unwrap_or(DEFAULT_PX_GRID))?;
                emit(
                    format,
                    format!(
                        "F = {:.6} (resolution {})\npoint = ({:.6}, {:.6})\nlabel frequencies = {:?}",
                        f.value,
                        f.resolution,
                        mean / f.value,
                        1.0 / f.value,
                        f.px
                    ),
                    json!({
                        "q": q,
                        "f": f.value,
                        "epsilon": mean / f.value,
                        "rho": 1.0 / f.value,
                        "px": f.px,
                        "resolution": f.resolution,
                    }),
                );
            }
        }
        Command::Region { kind, out } => {
            let curves = region_curves(kind, budget, format)?;
            emit_curves(format, &curves, out.as_deref())?;
        }
        Command::Reproduce { target, out_dir } => {
            let report = reproduce::run(target, &out_dir, budget)?;
            report.print(format);
            if !report.passed() {
                return Err(Failure::Checks);
            }
        }
    }
    Ok(())
}

fn read_all(paths: &[PathBuf]) -> CliResult<Vec<BipartiteDesign>> {
    paths.iter().map(|p| read_design(p)).collect()
}

fn region_curves(kind: RegionKind, budget: u64, format: Format) -> CliResult<Vec<RegionCurve>> {
    Ok(match kind {
        RegionKind::Interp { q } => vec![regions::region_interp(q)?],
        RegionKind::FiniteT { q, t } => {
            if q != 2 {
                return Err(Error::RegionUnknown(format!(
                    "no exact region is known for q = {q}; try `region covering`"
                ))
                .into());
            }
            vec![regions::region_finite_t_binary(t)?]
        }
        RegionKind::Q3t1 => vec![regions::region_q3_t1()],
        RegionKind::Covering { q, t, rho_max, points } => {
            vec![regions::covering_curve(q, t, rho_max, points)?]
        }
        RegionKind::RinftyK { k, q, grid } => vec![regions::region_rinfty_k(k, q, grid, budget)?],
        RegionKind::RinftyBound {
            n,
            c_min,
            c_max,
            c_step,
            s0,
            certificates,
        } => {
            if !(c_step > 0.0 && c_min >= 1.0 && c_max >= c_min) {
                return Err(Failure::Usage(
                    "need 1 <= c-min <= c-max and a positive c-step".into(),
                ));
            }
            let steps = ((c_max - c_min) / c_step + 1e-9).floor() as usize;
            let grid: Vec<f64> = (0..=steps).map(|i| c_min + c_step * i as f64).collect();
            let (curve, certs) = asymptotic::lower_bound_curve(&grid, n, s0)?;
            if let Some(dir) = certificates {
                fs::create_dir_all(&dir)?;
                for cert in &certs {
                    let name = format!("certificate_c{}.json", regions::format_sig(cert.c, 12));
                    write_atomic(&dir.join(name), format!("{}\n", cert.to_json()).as_bytes())?;
                }
                if format == Format::Text {
                    eprintln!("wrote {} certificates to {}", certs.len(), dir.display());
                }
            }
            vec![curve]
        }
        RegionKind::Scenarios { q } => regions::region_scenarios(q)?,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: cannot start {threads} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            match &failure {
                Failure::Core(e) => eprintln!("error: {e}"),
                Failure::Usage(msg) => eprintln!("error: {msg}"),
                Failure::Checks => eprintln!("some checks failed"),
            }
            ExitCode::from(failure.exit_code())
        }
    }
}
