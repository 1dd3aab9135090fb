//! `llwlc` command-line front end.
//!
//! Exit codes: 0 success, 1 input error, 2 numerical degeneracy,
//! 3 verification failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use llwlc_analysis::{
    compare, run_verification, wl1_distinguish, AnalysisError, CheckStatus, SignaturePolicy, Verdict, VerifyOptions,
    VerifySummary,
};
use llwlc_core::{
    assemble, extract_enclosing_subgraph, laplacian, make_named_graph, neumann_constraints, parse_edge_list, solve,
    stochastic_select, vertex_deleted_column, vertex_deleted_constraints, ConstrainedEigenbasis, ConstraintMatrix,
    EnclosingSubgraph, ExtractOptions, Graph, NamedGraph, SolveOptions, DEFAULT_RANK_TOL,
};
use llwlc_net::{
    auc, build_dataset, degree_product_scores, metrics_csv, split_links, train, write_checkpoint, ConstraintPolicy,
    ModelConfig, NetError, OptimizerKind, SpectralModel, TrainConfig,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("numerical degeneracy: {0}")]
    Numerical(String),
    #[error("verification failed: {0} violated case(s)")]
    Verification(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Verification(_) => 3,
        }
    }
}

fn is_degenerate(e: &llwlc_core::Error) -> bool {
    use llwlc_core::Error as E;
    matches!(
        e,
        E::DegenerateStart { .. } | E::EmptyConstraintMatrix { .. } | E::RankDeficient { .. }
    )
}

impl From<llwlc_core::Error> for CliError {
    fn from(e: llwlc_core::Error) -> Self {
        if is_degenerate(&e) {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match &e {
            AnalysisError::Core(c) | AnalysisError::Element { source: c, .. } if is_degenerate(c) => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<NetError> for CliError {
    fn from(e: NetError) -> Self {
        match &e {
            NetError::Core(c) if is_degenerate(c) => CliError::Numerical(e.to_string()),
            NetError::NonFinite { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "llwlc",
    version,
    about = "Constrained Lanczos spectra, expressivity checks and link prediction"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Constrained eigenbasis of a graph (or of a query pair's enclosing subgraph).
    Eig(EigArgs),
    /// Dump the assembled constraint matrix.
    Constraints(ConstraintArgs),
    /// 1-WL and constrained-signature verdicts for two graphs.
    Distinguish(DistinguishArgs),
    /// Train and evaluate the link predictor; writes per-epoch metrics.
    Lp(LpArgs),
    /// Run the bound and perturbation corpora.
    Verify(VerifyArgs),
    /// Write a named graph as an edge list.
    Gen(GenArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    None,
    Neumann,
    Vdel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OptimizerArg {
    Sgd,
    Adam,
}

#[derive(Debug, Args)]
pub struct ConstraintArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, value_enum, default_value = "none")]
    pub policy: PolicyArg,
    /// Number of deleted vertices for `vdel`.
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    /// Query pair; constraints are then built on its 2-hop enclosing subgraph.
    #[arg(long, num_args = 2, value_names = ["U", "V"])]
    pub query: Option<Vec<usize>>,
    /// Required whenever `vdel` samples vertices.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct EigArgs {
    #[command(flatten)]
    pub c: ConstraintArgs,
    #[arg(long, default_value_t = 10)]
    pub kappa: usize,
}

#[derive(Debug, Args)]
pub struct DistinguishArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub graph2: PathBuf,
    #[arg(long, value_enum, default_value = "neumann")]
    pub policy: PolicyArg,
    /// With `vdel`, sample this many vertices instead of the full deck.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub kappa: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct LpArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, value_enum, default_value = "neumann")]
    pub policy: PolicyArg,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value_t = 10)]
    pub kappa: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 20)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.001)]
    pub lr: f64,
    /// Held-out fraction of edges.
    #[arg(long, default_value_t = 0.1)]
    pub split: f64,
    #[arg(long, value_enum, default_value = "sgd")]
    pub optimizer: OptimizerArg,
    /// Minibatch size, 0 for full batch.
    #[arg(long, default_value_t = 0)]
    pub batch: usize,
    /// Metrics CSV path (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 50)]
    pub cases: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
    #[arg(long, default_value_t = 0.0, hide = true)]
    pub inflate_lhs: f64,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// e.g. `cycle:6`, `union:cycle:3+cycle:3`, `rook4x4`, `shrikhande`, `sbm:100:0.2:0.02:0`.
    #[arg(long)]
    pub name: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (program name first) and runs the subcommand; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let help = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let sink: &mut dyn Write = if help { out } else { err };
            let _ = write!(sink, "{}", e.render());
            return if help { 0 } else { 1 };
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    match cmd {
        Command::Eig(a) => cmd_eig(&a, out),
        Command::Constraints(a) => cmd_constraints(&a, out),
        Command::Distinguish(a) => cmd_distinguish(&a, out),
        Command::Lp(a) => cmd_lp(&a, out, err),
        Command::Verify(a) => cmd_verify(&a, out, err),
        Command::Gen(a) => {
            let name: NamedGraph = a.name.parse()?;
            emit(a.out.as_deref(), &make_named_graph(&name)?.to_edge_list(), out)
        }
    }
}

pub fn read_graph(path: &Path) -> CliResult<Graph> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    parse_edge_list(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn emit(path: Option<&Path>, text: &str, out: &mut dyn Write) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Input(format!("{}: {e}", p.display()))),
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Input(e.to_string())),
    }
}

fn require_seed(seed: Option<u64>, what: &str) -> CliResult<u64> {
    seed.ok_or_else(|| CliError::Input(format!("--seed is required for {what}")))
}

/// Operator graph and constraint matrix for `eig` / `constraints`.
struct Problem {
    graph: Graph,
    sub: Option<EnclosingSubgraph>,
    c: ConstraintMatrix,
}

fn build_problem(a: &ConstraintArgs) -> CliResult<Problem> {
    let g = read_graph(&a.graph)?;
    let sub = match a.query.as_deref() {
        Some(&[u, v]) => Some(extract_enclosing_subgraph(&g, u, v, ExtractOptions::default())?),
        Some(_) => return Err(CliError::Input("--query takes two node ids".into())),
        None => None,
    };
    let c = match (a.policy, &sub) {
        (PolicyArg::None, Some(s)) => ConstraintMatrix::empty(s.len()),
        (PolicyArg::None, None) => ConstraintMatrix::empty(g.node_count()),
        (PolicyArg::Neumann, Some(s)) => neumann_constraints(s),
        (PolicyArg::Neumann, None) => return Err(CliError::Input("the neumann policy needs --query".into())),
        (PolicyArg::Vdel, Some(s)) => vertex_deleted_constraints(s, a.k, require_seed(a.seed, "vdel")?)?,
        (PolicyArg::Vdel, None) => {
            let n = g.node_count();
            let picks = stochastic_select(n, a.k.min(n), require_seed(a.seed, "vdel")?)?;
            let cols = picks
                .iter()
                .map(|&v| vertex_deleted_column(&g, v))
                .collect::<Result<Vec<_>, _>>()?;
            assemble(cols, n, DEFAULT_RANK_TOL)?.matrix
        }
    };
    let graph = sub.as_ref().map_or_else(|| g.clone(), |s| s.graph().clone());
    Ok(Problem { graph, sub, c })
}

fn node_comment(sub: &Option<EnclosingSubgraph>) -> String {
    match sub {
        Some(s) => {
            let ids: Vec<String> = s.nodes().iter().map(usize::to_string).collect();
            format!("# nodes {}\n", ids.join(" "))
        }
        None => String::new(),
    }
}

fn eig_csv(b: &ConstrainedEigenbasis) -> String {
    let mut s = String::from("index,ritz_value,residual\n");
    for (i, r) in b.effective_values().iter().enumerate() {
        let res = b.diagnostics.residuals.get(i).copied().unwrap_or(f64::NAN);
        let _ = writeln!(s, "{i},{r:.16e},{res:e}");
    }
    s
}

fn cmd_eig(a: &EigArgs, out: &mut dyn Write) -> CliResult<()> {
    if a.kappa == 0 {
        return Err(CliError::Input("--kappa must be positive".into()));
    }
    let p = build_problem(&a.c)?;
    let n = p.graph.node_count();
    let opts = SolveOptions {
        steps: a.kappa.min(n),
        kappa_target: a.kappa,
        seed: a.c.seed.unwrap_or(0),
        ..Default::default()
    };
    let basis = solve(&laplacian(&p.graph), &p.c, &opts)?;
    let text = match a.c.format {
        Format::Text => basis.to_dump() + &node_comment(&p.sub),
        Format::Csv => eig_csv(&basis),
    };
    emit(a.c.out.as_deref(), &text, out)?;
    if a.c.out.is_some() {
        let r: Vec<String> = basis.effective_values().iter().map(|x| format!("{x:.10}")).collect();
        let d = &basis.diagnostics;
        let _ = writeln!(out, "R = {}", r.join(" "));
        let _ = writeln!(
            out,
            "kappa_effective={} steps={} breakdown={} max|CtV|={:e} max|VtV-I|={:e}",
            basis.kappa_effective, d.lanczos_steps, d.breakdown, d.max_constraint_violation, d.max_orthogonality_loss
        );
    }
    Ok(())
}

fn cmd_constraints(a: &ConstraintArgs, out: &mut dyn Write) -> CliResult<()> {
    let p = build_problem(a)?;
    let text = match a.format {
        Format::Text => p.c.to_dump() + &node_comment(&p.sub),
        Format::Csv => {
            let mut s = String::from("column,row,value,provenance\n");
            for (j, col) in p.c.columns().iter().enumerate() {
                for &(r, v) in col.entries() {
                    let _ = writeln!(s, "{j},{r},{v:e},{}", col.provenance());
                }
            }
            s
        }
    };
    emit(a.out.as_deref(), &text, out)
}

fn verdict_word(d: bool) -> &'static str {
    if d {
        "DISTINGUISHED"
    } else {
        "INDISTINGUISHABLE"
    }
}

fn cmd_distinguish(a: &DistinguishArgs, out: &mut dyn Write) -> CliResult<()> {
    let g1 = read_graph(&a.graph)?;
    let g2 = read_graph(&a.graph2)?;
    let policy = match (a.policy, a.k) {
        (PolicyArg::None, _) => return Err(CliError::Input("signatures need the neumann or vdel policy".into())),
        (PolicyArg::Neumann, _) => SignaturePolicy::NeumannPerEdge,
        (PolicyArg::Vdel, None) => SignaturePolicy::VertexDeletedAll,
        (PolicyArg::Vdel, Some(k)) => SignaturePolicy::VertexDeletedSample {
            k,
            seed: require_seed(a.seed, "a sampled deck")?,
        },
    };
    let wl = wl1_distinguish(&g1, &g2);
    let verdict = compare(&g1, &g2, policy, a.kappa)?;
    let text = match a.format {
        Format::Text => format!("WL1: {}\nLLwLC: {verdict}\n", verdict_word(wl)),
        Format::Csv => {
            let gap = match verdict {
                Verdict::Distinguished { gap } => format!("{gap:e}"),
                Verdict::Indistinguishable => String::new(),
            };
            format!(
                "test,verdict,gap\nwl1,{},\nllwlc,{},{gap}\n",
                verdict_word(wl),
                verdict_word(verdict.is_distinguished())
            )
        }
    };
    emit(None, &text, out)
}

fn cmd_lp(a: &LpArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    let seed = require_seed(a.seed, "lp")?;
    if !(a.split > 0.0 && a.split < 1.0) {
        return Err(CliError::Input(format!("--split must lie in (0, 1), got {}", a.split)));
    }
    let policy = match a.policy {
        PolicyArg::None => ConstraintPolicy::None,
        PolicyArg::Neumann => ConstraintPolicy::Neumann,
        PolicyArg::Vdel if a.k == 0 => return Err(CliError::Input("--k must be positive".into())),
        PolicyArg::Vdel => ConstraintPolicy::VertexDeleted { k: a.k },
    };
    let cfg = TrainConfig {
        lr: a.lr,
        epochs: a.epochs,
        kappa: a.kappa,
        seed,
        policy,
        optimizer: match a.optimizer {
            OptimizerArg::Sgd => OptimizerKind::Sgd,
            OptimizerArg::Adam => OptimizerKind::Adam,
        },
        batch_size: a.batch,
        ..Default::default()
    };
    cfg.validate()?;
    let g = read_graph(&a.graph)?;
    let split = split_links(&g, a.split, seed)?;
    let mut data = build_dataset(&split, policy, a.kappa, seed)?;
    let mut model = SpectralModel::new(&ModelConfig::default(), seed)?;
    let metrics = train(&mut model, &mut data, &cfg)?;

    emit(a.out.as_deref(), &metrics_csv(&metrics), out)?;
    if let Some(path) = &a.checkpoint {
        let header = format!("{}split={}\n", cfg.to_header(), a.split);
        emit(Some(path), &write_checkpoint(&model, &header), out)?;
    }
    let labels: Vec<f64> = split.test.iter().map(|t| t.2).collect();
    let baseline = auc(&degree_product_scores(&split.observed, &split.test), &labels)?;
    let last = metrics.last();
    let summary = format!(
        "test_auc={:.6} hits_at_k={:.6} degree_product_auc={baseline:.6}\n",
        last.map_or(f64::NAN, |m| m.auc),
        last.map_or(f64::NAN, |m| m.hits_at_k)
    );
    let sink: &mut dyn Write = if a.out.is_some() { out } else { err };
    let _ = sink.write_all(summary.as_bytes());
    Ok(())
}

fn violating(s: &VerifySummary) -> VerifySummary {
    VerifySummary {
        bounds: s
            .bounds
            .iter()
            .filter(|b| b.report.status == CheckStatus::Violated)
            .cloned()
            .collect(),
        scalings: s
            .scalings
            .iter()
            .filter(|c| c.report.status == CheckStatus::Violated)
            .cloned()
            .collect(),
    }
}

fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    let opts = VerifyOptions {
        seed: a.seed,
        bound_cases: a.cases,
        lhs_inflation: a.inflate_lhs,
        ..Default::default()
    };
    let summary = run_verification(&opts)?;
    let text = match a.format {
        Format::Text => summary.to_text(),
        Format::Csv => summary.to_csv(),
    };
    emit(a.out.as_deref(), &text, out)?;
    match summary.violations() {
        0 => Ok(()),
        v => {
            let _ = err.write_all(violating(&summary).to_text().as_bytes());
            Err(CliError::Verification(v))
        }
    }
}
