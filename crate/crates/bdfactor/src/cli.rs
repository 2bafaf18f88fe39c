//! Command-line front end: one subcommand per pipeline stage, deterministic
//! JSON/CSV emission, and the exit-code contract (0 success, 1 verification
//! breach, 2+ per error class).

use crate::cfrac::{
    eval_h, eval_h_prime, eval_h_tilde, eval_h_tilde_prime, h_closed, h_prime_closed,
    CfEvaluation, CF_MAX_ITER, CF_TOL,
};
use crate::chain::{
    block_index, potential_coeffs, relabel_to_blocks, validate_stochastic, AlmostBDChain, BDChain,
    StochasticityIssue,
};
use crate::error::{Error, Result};
use crate::factor::{
    ar_compatible, ar_factorize, darboux_ar, darboux_ra, ra_admissible, ra_factorize,
    ARFactors, FactorOptions, RAFactors,
};
use crate::io::{emit, load_chain, to_csv_string, to_json_string, Cell};
use crate::mat2::Mat2;
use crate::opoly::{norm_matrices, Family, FamilyEvaluator, NormKind};
use crate::spectral::{
    ar_stieltjes, christoffel, clamp_probability, constant_chain_measure, geronimus,
    km_quad_options, km_table, MatrixMeasure, ResidueReport, SqrtKind,
};
use crate::verify::{nstep, run_suite, Report, Suite};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::path::PathBuf;

/// Environment variable overriding the default tolerance (continued
/// fractions, factor stabilization, quadrature refinement).
pub const TOL_ENV: &str = "BDFACTOR_TOL";

/// Birth-death chains on the integers: stochastic factorizations, Darboux
/// transformations, and spectral matrices.
#[derive(Debug, Parser)]
#[command(name = "bdfactor", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Summarize a chain: coefficients, stochasticity, factorization bounds.
    Inspect(InspectArgs),
    /// Evaluate a tail continued fraction with its convergent table.
    Cfrac(CfracArgs),
    /// Factor the chain as reflecting times absorbing (two free parameters).
    FactorizeRa(FactorizeRaArgs),
    /// Factor the chain as absorbing times reflecting (unique when it exists).
    FactorizeAr(FactorizeArArgs),
    /// Swap the factors and emit the transformed chain.
    Darboux(DarbouxArgs),
    /// Evaluate a matrix polynomial family at a point.
    Opoly(OpolyArgs),
    /// Emit a spectral measure: support, density samples, atoms, moments.
    Spectrum(SpectrumArgs),
    /// One n-step probability by quadrature against the truncation oracle.
    Kmstep(KmstepArgs),
    /// Run a named cross-check suite and report each comparison.
    Verify(VerifyArgs),
}

/// Where the chain comes from; exactly one source must be given.
#[derive(Debug, Args, Clone)]
pub struct ChainSource {
    /// Path to a chain JSON file.
    #[arg(long, value_name = "PATH")]
    pub chain: Option<PathBuf>,
    /// Constant chain with probabilities a, b, c (right, stay, left).
    #[arg(long, num_args = 1..=3, value_delimiter = ',', value_name = "a,b,c")]
    pub constant: Option<Vec<f64>>,
    /// Constant chain with the boundary window and jumps that admit the
    /// unique absorbing-first factorization.
    #[arg(long, num_args = 1..=3, value_delimiter = ',', value_name = "a,b,c")]
    pub ar_example: Option<Vec<f64>>,
}

fn three(v: &[f64], flag: &str) -> Result<(f64, f64, f64)> {
    if v.len() != 3 {
        return Err(Error::Config(format!(
            "{flag} needs exactly three probabilities a,b,c; got {}",
            v.len()
        )));
    }
    Ok((v[0], v[1], v[2]))
}

impl ChainSource {
    pub fn resolve(&self) -> Result<AlmostBDChain> {
        let given = self.chain.is_some() as u8
            + self.constant.is_some() as u8
            + self.ar_example.is_some() as u8;
        if given != 1 {
            return Err(Error::Config(
                "give exactly one of --chain, --constant, --ar-example".into(),
            ));
        }
        if let Some(path) = &self.chain {
            return load_chain(path);
        }
        if let Some(v) = &self.constant {
            let (a, b, c) = three(v, "--constant")?;
            let chain: AlmostBDChain = BDChain::constant(a, b, c).into();
            chain.validate()?;
            return Ok(chain);
        }
        let v = self.ar_example.as_ref().expect("one source present");
        let (a, b, c) = three(v, "--ar-example")?;
        AlmostBDChain::ar_boundary_example(a, b, c)
    }
}

/// Output format selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Args, Clone)]
pub struct OutputArgs {
    /// Output format.
    #[arg(long, value_enum, default_value = "json")]
    pub format: OutputFormat,
    /// Write to this file instead of stdout.
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[command(flatten)]
    pub source: ChainSource,
    /// Report coefficients for states |n| <= RANGE.
    #[arg(long, default_value_t = 8)]
    pub range: i64,
    #[command(flatten)]
    pub out: OutputArgs,
}

/// Which tail continued fraction to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CfWhich {
    /// Positive-tail fraction (first reflecting parameter bound).
    H,
    /// Negative-tail fraction.
    HPrime,
    /// Positive-tail fraction of the absorbing-first dominance condition.
    HTilde,
    /// Negative-tail fraction of the dominance condition.
    HTildePrime,
}

#[derive(Debug, Args)]
pub struct CfracArgs {
    #[command(flatten)]
    pub source: ChainSource,
    /// Which fraction to evaluate.
    #[arg(long, value_enum, default_value = "h")]
    pub which: CfWhich,
    /// Convergence tolerance (three successive convergents must agree).
    #[arg(long)]
    pub tol: Option<f64>,
    /// Iteration cap.
    #[arg(long, default_value_t = CF_MAX_ITER)]
    pub max_iter: usize,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct FactorizeRaArgs {
    #[command(flatten)]
    pub source: ChainSource,
    /// First free parameter (mass leaving 0 downward in the reflecting
    /// factor).
    #[arg(long)]
    pub alpha: f64,
    /// Second free parameter (mass leaving 0 upward).
    #[arg(long)]
    pub x0: f64,
    /// Emit factor rows for |n| <= ROWS.
    #[arg(long, default_value_t = 16)]
    pub rows: i64,
    /// Stabilization tolerance for tail freezing.
    #[arg(long)]
    pub tol: Option<f64>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct FactorizeArArgs {
    #[command(flatten)]
    pub source: ChainSource,
    /// Emit factor rows for |n| <= ROWS.
    #[arg(long, default_value_t = 16)]
    pub rows: i64,
    /// Stabilization tolerance for tail freezing.
    #[arg(long)]
    pub tol: Option<f64>,
    #[command(flatten)]
    pub out: OutputArgs,
}

/// Which factorization order the Darboux transformation swaps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Ra,
    Ar,
}

#[derive(Debug, Args)]
pub struct DarbouxArgs {
    #[command(flatten)]
    pub source: ChainSource,
    /// Factorization order to swap.
    #[arg(long, value_enum)]
    pub direction: Direction,
    /// First reflecting parameter (required for --direction ra).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Second reflecting parameter (required for --direction ra).
    #[arg(long)]
    pub x0: Option<f64>,
    /// Emit transformed coefficients for |n| <= ROWS.
    #[arg(long, default_value_t = 16)]
    pub rows: i64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct OpolyArgs {
    #[command(flatten)]
    pub source: ChainSource,
    /// Polynomial family (Q, U, T, Qtilde, Qhat).
    #[arg(long, value_enum, ignore_case = true)]
    pub family: Family,
    /// Evaluation point.
    #[arg(long)]
    pub x: f64,
    /// Highest degree to emit.
    #[arg(long, default_value_t = 8)]
    pub n: usize,
    /// First reflecting parameter (families U and Qtilde).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Second reflecting parameter (families U and Qtilde).
    #[arg(long)]
    pub x0: Option<f64>,
    #[command(flatten)]
    pub out: OutputArgs,
}

/// Which example chain the spectral commands start from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExampleKind {
    /// Constant chain (reciprocal square-root measure).
    Rw,
    /// Boundary-jump chain of the unique absorbing-first factorization
    /// (measure recovered from the closed-form Stieltjes matrix).
    Ar,
}

/// Measure-level transformation applied after building the base measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransformKind {
    None,
    Geronimus,
    Christoffel,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    /// Base example chain.
    #[arg(long, value_enum)]
    pub example: ExampleKind,
    /// Probability of stepping right.
    #[arg(long)]
    pub a: f64,
    /// Probability of staying.
    #[arg(long)]
    pub b: f64,
    /// Probability of stepping left.
    #[arg(long)]
    pub c: f64,
    /// Transformation to apply to the measure.
    #[arg(long, value_enum, default_value = "none")]
    pub transform: TransformKind,
    /// First reflecting parameter (geronimus only).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Second reflecting parameter (geronimus only).
    #[arg(long)]
    pub x0: Option<f64>,
    /// Number of interior density sample points (CSV output).
    #[arg(long, default_value_t = 101)]
    pub samples: usize,
    /// Emit moments up to this order (JSON output).
    #[arg(long, default_value_t = 4)]
    pub moments: usize,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct KmstepArgs {
    /// Base example chain.
    #[arg(long, value_enum)]
    pub example: ExampleKind,
    /// Probability of stepping right.
    #[arg(long)]
    pub a: f64,
    /// Probability of staying.
    #[arg(long)]
    pub b: f64,
    /// Probability of stepping left.
    #[arg(long)]
    pub c: f64,
    /// Start state.
    #[arg(long, allow_hyphen_values = true)]
    pub i: i64,
    /// End state.
    #[arg(long, allow_hyphen_values = true)]
    pub j: i64,
    /// Number of steps.
    #[arg(long)]
    pub n: usize,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Suite to run; omit to run all of them.
    #[arg(long, value_enum)]
    pub suite: Option<Suite>,
    #[command(flatten)]
    pub out: OutputArgs,
}

/// Everything `run` produces: the rendered artifact plus whether a
/// verification suite failed (mapped to exit code 1 by the binary).
#[derive(Debug)]
pub struct RunOutput {
    pub content: String,
    pub breach: bool,
}

/// Resolved tolerance: explicit flag wins, then the environment override,
/// then the built-in default.
fn resolve_tol(flag: Option<f64>, default: f64) -> Result<f64> {
    let value = match flag {
        Some(t) => t,
        None => match std::env::var(TOL_ENV) {
            Ok(text) => text.trim().parse::<f64>().map_err(|_| {
                Error::Config(format!("cannot parse {TOL_ENV}={text:?} as a number"))
            })?,
            Err(_) => default,
        },
    };
    if !(value > 0.0 && value.is_finite()) {
        return Err(Error::Config(format!(
            "tolerance must be positive and finite, got {value}"
        )));
    }
    Ok(value)
}

fn mat_entries(m: &Mat2) -> [f64; 4] {
    [m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]]
}

/// Run one parsed command to completion and render its artifact.
pub fn run(command: &Command) -> Result<RunOutput> {
    let content = match command {
        Command::Inspect(args) => run_inspect(args)?,
        Command::Cfrac(args) => run_cfrac(args)?,
        Command::FactorizeRa(args) => run_factorize_ra(args)?,
        Command::FactorizeAr(args) => run_factorize_ar(args)?,
        Command::Darboux(args) => run_darboux(args)?,
        Command::Opoly(args) => run_opoly(args)?,
        Command::Spectrum(args) => run_spectrum(args)?,
        Command::Kmstep(args) => run_kmstep(args)?,
        Command::Verify(args) => return run_verify(args),
    };
    Ok(RunOutput {
        content,
        breach: false,
    })
}

/// Parse the process arguments, run, emit, and map errors to exit codes.
pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    let out = match &cli.command {
        Command::Inspect(a) => run(&cli.command).map(|o| (o, a.out.clone())),
        Command::Cfrac(a) => run(&cli.command).map(|o| (o, a.out.clone())),
        Command::FactorizeRa(a) => run(&cli.command).map(|o| (o, a.out.clone())),
        Command::FactorizeAr(a) => run(&cli.command).map(|o| (o, a.out.clone())),
        Command::Darboux(a) => run(&cli.command).map(|o| (o, a.out.clone())),
        Command::Opoly(a) => run(&cli.command).map(|o| (o, a.out.clone())),
        Command::Spectrum(a) => run(&cli.command).map(|o| (o, a.out.clone())),
        Command::Kmstep(a) => run(&cli.command).map(|o| (o, a.out.clone())),
        Command::Verify(a) => run(&cli.command).map(|o| (o, a.out.clone())),
    };
    match out {
        Ok((result, out_args)) => {
            if let Err(e) = emit(&result.content, out_args.output.as_deref()) {
                // a consumer that stopped reading stdout is not our failure
                if let Error::Io(io) = &e {
                    if io.kind() == std::io::ErrorKind::BrokenPipe {
                        return 0;
                    }
                }
                eprintln!("{e}");
                return e.exit_code();
            }
            if result.breach {
                1
            } else {
                0
            }
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

// ---------------------------------------------------------------- inspect

#[derive(Serialize)]
struct InspectRow {
    n: i64,
    a: f64,
    b: f64,
    c: f64,
    row_sum: f64,
    pi: Option<f64>,
}

#[derive(Serialize)]
struct AdmissibilitySummary {
    h: f64,
    h_prime: f64,
    feasible: bool,
}

#[derive(Serialize)]
struct InspectReport {
    chain: AlmostBDChain,
    pure: bool,
    window_extent: i64,
    stochastic: bool,
    issues: Vec<StochasticityIssue>,
    admissibility: Option<AdmissibilitySummary>,
    rows: Vec<InspectRow>,
}

fn run_inspect(args: &InspectArgs) -> Result<String> {
    let chain = args.source.resolve()?;
    if args.range < 1 {
        return Err(Error::Config("range must be at least 1".into()));
    }
    let range = args.range.max(chain.window_extent());
    let issues = validate_stochastic(&chain, range);
    let pot = potential_coeffs(&chain, range).ok();
    let admissibility = match ra_admissible(&chain, CF_TOL, CF_MAX_ITER) {
        Ok(adm) => Some(AdmissibilitySummary {
            h: adm.h,
            h_prime: adm.h_prime,
            feasible: adm.feasible,
        }),
        Err(Error::NonConvergence { .. }) => None,
        Err(e) => return Err(e),
    };
    let rows: Vec<InspectRow> = (-args.range..=args.range)
        .map(|n| InspectRow {
            n,
            a: chain.a(n),
            b: chain.b(n),
            c: chain.c(n),
            row_sum: chain.row_sum(n),
            pi: pot.as_ref().and_then(|p| p.pi(n).ok()),
        })
        .collect();
    match args.out.format {
        OutputFormat::Json => to_json_string(&InspectReport {
            pure: chain.is_pure(),
            window_extent: chain.window_extent(),
            stochastic: issues.is_empty(),
            issues,
            admissibility,
            rows,
            chain,
        }),
        OutputFormat::Csv => {
            let table: Vec<Vec<Cell>> = rows
                .iter()
                .map(|r| {
                    vec![
                        Cell::Int(r.n),
                        Cell::Float(r.a),
                        Cell::Float(r.b),
                        Cell::Float(r.c),
                        Cell::Float(r.row_sum),
                        r.pi.map_or(Cell::Str(String::new()), Cell::Float),
                    ]
                })
                .collect();
            to_csv_string(&["n", "a", "b", "c", "row_sum", "pi"], &table)
        }
    }
}

// ---------------------------------------------------------------- cfrac

#[derive(Serialize)]
struct CfracReport {
    which: CfWhich,
    value: f64,
    iterations: usize,
    closed_form: Option<f64>,
    convergents: usize,
}

fn run_cfrac(args: &CfracArgs) -> Result<String> {
    let chain = args.source.resolve()?;
    let tol = resolve_tol(args.tol, CF_TOL)?;
    let eval: CfEvaluation = match args.which {
        CfWhich::H => eval_h(&chain, tol, args.max_iter)?,
        CfWhich::HPrime => eval_h_prime(&chain, tol, args.max_iter)?,
        CfWhich::HTilde => eval_h_tilde(&chain, tol, args.max_iter)?,
        CfWhich::HTildePrime => eval_h_tilde_prime(&chain, tol, args.max_iter)?,
    };
    // closed forms exist for the constant chain's own two fractions
    let closed_form = if chain.is_pure() && chain.window_extent() == 0 {
        let (a, c) = (chain.a(0), chain.c(0));
        match args.which {
            CfWhich::H => Some(h_closed(a, c)),
            CfWhich::HPrime => Some(h_prime_closed(a, c)),
            _ => None,
        }
    } else {
        None
    };
    match args.out.format {
        OutputFormat::Json => to_json_string(&CfracReport {
            which: args.which,
            value: eval.value,
            iterations: eval.iterations,
            closed_form,
            convergents: eval.convergents.len(),
        }),
        OutputFormat::Csv => {
            let table: Vec<Vec<Cell>> = eval
                .convergents
                .iter()
                .map(|c| {
                    vec![
                        Cell::Int(c.k as i64),
                        Cell::Float(c.a_num),
                        Cell::Float(c.b_den),
                        Cell::Float(c.h),
                    ]
                })
                .collect();
            to_csv_string(&["k", "A_cf", "B_cf", "h_k"], &table)
        }
    }
}

// ---------------------------------------------------------------- factorize

#[derive(Serialize)]
struct FactorRow {
    n: i64,
    x: f64,
    y: f64,
    s: f64,
    r: f64,
}

fn factor_rows(seqs: &crate::factor::FactorSeqs, rows: i64) -> Vec<FactorRow> {
    (-rows..=rows)
        .map(|n| FactorRow {
            n,
            x: seqs.x(n),
            y: seqs.y(n),
            s: seqs.s(n),
            r: seqs.r(n),
        })
        .collect()
}

fn factor_csv(rows: &[FactorRow]) -> Result<String> {
    let table: Vec<Vec<Cell>> = rows
        .iter()
        .map(|r| {
            vec![
                Cell::Int(r.n),
                Cell::Float(r.x),
                Cell::Float(r.y),
                Cell::Float(r.s),
                Cell::Float(r.r),
            ]
        })
        .collect();
    to_csv_string(&["n", "x", "y", "s", "r"], &table)
}

#[derive(Serialize)]
struct RaFactorReport {
    alpha: f64,
    x0: f64,
    degenerate: bool,
    stabilized: bool,
    pos_frozen: Option<i64>,
    neg_frozen: Option<i64>,
    h: f64,
    h_prime: f64,
    rows: Vec<FactorRow>,
}

fn run_factorize_ra(args: &FactorizeRaArgs) -> Result<String> {
    let chain = args.source.resolve()?;
    let opts = FactorOptions {
        stab_tol: resolve_tol(args.tol, crate::factor::STAB_TOL)?,
        ..FactorOptions::default()
    };
    if args.rows < 0 {
        return Err(Error::Config("rows must be nonnegative".into()));
    }
    let adm = ra_admissible(&chain, CF_TOL, CF_MAX_ITER)?;
    let f = ra_factorize(&chain, args.alpha, args.x0, opts)?;
    let rows = factor_rows(&f.seqs, args.rows);
    match args.out.format {
        OutputFormat::Json => to_json_string(&RaFactorReport {
            alpha: f.alpha,
            x0: f.seqs.x(0),
            degenerate: f.degenerate,
            stabilized: f.seqs.stabilized(),
            pos_frozen: f.seqs.pos_frozen,
            neg_frozen: f.seqs.neg_frozen,
            h: adm.h,
            h_prime: adm.h_prime,
            rows,
        }),
        OutputFormat::Csv => factor_csv(&rows),
    }
}

#[derive(Serialize)]
struct ArFactorReport {
    alpha_tilde: f64,
    d_plus_expected: f64,
    d_minus_expected: f64,
    stabilized: bool,
    pos_frozen: Option<i64>,
    neg_frozen: Option<i64>,
    rows: Vec<FactorRow>,
}

fn run_factorize_ar(args: &FactorizeArArgs) -> Result<String> {
    let chain = args.source.resolve()?;
    let opts = FactorOptions {
        stab_tol: resolve_tol(args.tol, crate::factor::STAB_TOL)?,
        ..FactorOptions::default()
    };
    if args.rows < 0 {
        return Err(Error::Config("rows must be nonnegative".into()));
    }
    let comp = ar_compatible(&chain)?;
    let f = ar_factorize(&chain, opts)?;
    let rows = factor_rows(&f.seqs, args.rows);
    match args.out.format {
        OutputFormat::Json => to_json_string(&ArFactorReport {
            alpha_tilde: f.alpha_tilde,
            d_plus_expected: comp.d_plus_expected,
            d_minus_expected: comp.d_minus_expected,
            stabilized: f.seqs.stabilized(),
            pos_frozen: f.seqs.pos_frozen,
            neg_frozen: f.seqs.neg_frozen,
            rows,
        }),
        OutputFormat::Csv => factor_csv(&rows),
    }
}

// ---------------------------------------------------------------- darboux

#[derive(Serialize)]
struct DarbouxRow {
    n: i64,
    a: f64,
    b: f64,
    c: f64,
    jump: f64,
}

#[derive(Serialize)]
struct DarbouxReport {
    direction: Direction,
    chain: AlmostBDChain,
    rows: Vec<DarbouxRow>,
}

fn run_darboux(args: &DarbouxArgs) -> Result<String> {
    let chain = args.source.resolve()?;
    if args.rows < 0 {
        return Err(Error::Config("rows must be nonnegative".into()));
    }
    let transformed: AlmostBDChain = match args.direction {
        Direction::Ra => {
            let (alpha, x0) = match (args.alpha, args.x0) {
                (Some(alpha), Some(x0)) => (alpha, x0),
                _ => {
                    return Err(Error::Config(
                        "--direction ra needs --alpha and --x0".into(),
                    ))
                }
            };
            let f = ra_factorize(&chain, alpha, x0, FactorOptions::default())?;
            darboux_ra(&f).0
        }
        Direction::Ar => {
            let f = ar_factorize(&chain, FactorOptions::default())?;
            darboux_ar(&f).0.into()
        }
    };
    let rows: Vec<DarbouxRow> = (-args.rows..=args.rows)
        .map(|n| DarbouxRow {
            n,
            a: transformed.a(n),
            b: transformed.b(n),
            c: transformed.c(n),
            jump: match n {
                1 => transformed.d_plus,
                -1 => transformed.d_minus,
                _ => 0.0,
            },
        })
        .collect();
    match args.out.format {
        OutputFormat::Json => to_json_string(&DarbouxReport {
            direction: args.direction,
            chain: transformed,
            rows,
        }),
        OutputFormat::Csv => {
            let table: Vec<Vec<Cell>> = rows
                .iter()
                .map(|r| {
                    vec![
                        Cell::Int(r.n),
                        Cell::Float(r.a),
                        Cell::Float(r.b),
                        Cell::Float(r.c),
                        Cell::Float(r.jump),
                    ]
                })
                .collect();
            to_csv_string(&["n", "a", "b", "c", "jump"], &table)
        }
    }
}

// ---------------------------------------------------------------- opoly

#[derive(Serialize)]
struct OpolyRow {
    n: usize,
    entries: [f64; 4],
}

#[derive(Serialize)]
struct OpolyReport {
    family: Family,
    x: f64,
    values: Vec<OpolyRow>,
}

fn build_factors(
    chain: &AlmostBDChain,
    family: Family,
    alpha: Option<f64>,
    x0: Option<f64>,
) -> Result<(Option<RAFactors>, Option<ARFactors>)> {
    match family {
        Family::Q => Ok((None, None)),
        Family::U | Family::QTilde => match (alpha, x0) {
            (Some(alpha), Some(x0)) => Ok((
                Some(ra_factorize(chain, alpha, x0, FactorOptions::default())?),
                None,
            )),
            _ => Err(Error::Config(
                "families u and qtilde need --alpha and --x0".into(),
            )),
        },
        Family::T | Family::QHat => Ok((
            None,
            Some(ar_factorize(chain, FactorOptions::default())?),
        )),
    }
}

fn run_opoly(args: &OpolyArgs) -> Result<String> {
    let chain = args.source.resolve()?;
    let (ra, ar) = build_factors(&chain, args.family, args.alpha, args.x0)?;
    let blocks = relabel_to_blocks(chain);
    let fam = FamilyEvaluator::new(args.family, &blocks, ra.as_ref(), ar.as_ref(), args.n)?;
    let values: Vec<OpolyRow> = fam
        .eval(args.x)
        .iter()
        .enumerate()
        .map(|(n, m)| OpolyRow {
            n,
            entries: mat_entries(m),
        })
        .collect();
    match args.out.format {
        OutputFormat::Json => to_json_string(&OpolyReport {
            family: args.family,
            x: args.x,
            values,
        }),
        OutputFormat::Csv => {
            let table: Vec<Vec<Cell>> = values
                .iter()
                .map(|r| {
                    vec![
                        Cell::Int(r.n as i64),
                        Cell::Float(r.entries[0]),
                        Cell::Float(r.entries[1]),
                        Cell::Float(r.entries[2]),
                        Cell::Float(r.entries[3]),
                    ]
                })
                .collect();
            to_csv_string(&["n", "m11", "m12", "m21", "m22"], &table)
        }
    }
}

// ---------------------------------------------------------------- spectrum

#[derive(Serialize)]
struct MomentRow {
    k: i64,
    entries: [f64; 4],
}

#[derive(Serialize)]
struct SpectrumReport {
    example: ExampleKind,
    transform: TransformKind,
    support: [f64; 2],
    sqrt_kind: SqrtKind,
    inverse_x: bool,
    scale: f64,
    numerator: crate::spectral::SymPolyMat,
    denominator: Vec<f64>,
    atoms: Vec<crate::spectral::Atom>,
    atom_raw: Option<[f64; 4]>,
    atom_kept: Option<bool>,
    atom_proper: Option<bool>,
    residues: Option<Vec<ResidueReport>>,
    moments: Vec<MomentRow>,
}

fn spectrum_probs_valid(a: f64, b: f64, c: f64) -> Result<()> {
    if !(a > 0.0 && c > 0.0 && b >= 0.0) || (a + b + c - 1.0).abs() > 1e-12 {
        return Err(Error::Validation(format!(
            "probabilities must be positive with a+b+c = 1; got ({a}, {b}, {c})"
        )));
    }
    Ok(())
}

fn run_spectrum(args: &SpectrumArgs) -> Result<String> {
    spectrum_probs_valid(args.a, args.b, args.c)?;
    let mut residues = None;
    let mut atom_raw = None;
    let mut atom_kept = None;
    let mut atom_proper = None;
    let measure: MatrixMeasure = match (args.example, args.transform) {
        (ExampleKind::Rw, TransformKind::None) => {
            constant_chain_measure(args.a, args.b, args.c)?
        }
        (ExampleKind::Rw, TransformKind::Geronimus) => {
            let (alpha, x0) = match (args.alpha, args.x0) {
                (Some(alpha), Some(x0)) => (alpha, x0),
                _ => {
                    return Err(Error::Config(
                        "--transform geronimus needs --alpha and --x0".into(),
                    ))
                }
            };
            let chain: AlmostBDChain = BDChain::constant(args.a, args.b, args.c).into();
            chain.validate()?;
            let base = constant_chain_measure(args.a, args.b, args.c)?;
            let ra = ra_factorize(&chain, alpha, x0, FactorOptions::default())?;
            let pot = potential_coeffs(&chain, 4)?;
            let g = geronimus(&base, &ra, &pot.block(0)?)?;
            atom_raw = Some(mat_entries(&g.atom_raw));
            atom_kept = Some(g.atom_kept);
            atom_proper = Some(g.atom_proper);
            g.measure
        }
        (ExampleKind::Ar, TransformKind::None) => {
            let inv = ar_stieltjes(args.a, args.c)?.invert()?;
            residues = Some(inv.residues);
            inv.measure
        }
        (ExampleKind::Ar, TransformKind::Christoffel) => {
            let chain = AlmostBDChain::ar_boundary_example(args.a, args.b, args.c)?;
            let ar = ar_factorize(&chain, FactorOptions::default())?;
            let inv = ar_stieltjes(args.a, args.c)?.invert()?;
            residues = Some(inv.residues);
            christoffel(&inv.measure, &ar)?
        }
        (ExampleKind::Rw, TransformKind::Christoffel) => {
            return Err(Error::Config(
                "christoffel applies to the ar example measure".into(),
            ))
        }
        (ExampleKind::Ar, TransformKind::Geronimus) => {
            return Err(Error::Config(
                "geronimus applies to the rw example measure".into(),
            ))
        }
    };
    match args.out.format {
        OutputFormat::Json => {
            let mut moments = Vec::new();
            for k in 0..=args.moments as i64 {
                let (m, _) = measure.moment(k)?;
                moments.push(MomentRow {
                    k,
                    entries: mat_entries(&m),
                });
            }
            to_json_string(&SpectrumReport {
                example: args.example,
                transform: args.transform,
                support: [measure.lo, measure.hi],
                sqrt_kind: measure.sqrt_kind,
                inverse_x: measure.inverse_x,
                scale: measure.scale,
                numerator: measure.num.clone(),
                denominator: measure.den.clone(),
                atoms: measure.atoms.clone(),
                atom_raw,
                atom_kept,
                atom_proper,
                residues,
                moments,
            })
        }
        OutputFormat::Csv => {
            if args.samples == 0 {
                return Err(Error::Config("samples must be positive".into()));
            }
            let table: Vec<Vec<Cell>> = (0..args.samples)
                .map(|k| {
                    let t = (k as f64 + 0.5) / args.samples as f64;
                    let x = measure.lo + (measure.hi - measure.lo) * t;
                    let d = measure.density(x);
                    vec![
                        Cell::Float(x),
                        Cell::Float(d[(0, 0)]),
                        Cell::Float(d[(0, 1)]),
                        Cell::Float(d[(1, 1)]),
                    ]
                })
                .collect();
            to_csv_string(&["x", "psi11", "psi12", "psi22"], &table)
        }
    }
}

// ---------------------------------------------------------------- kmstep

#[derive(Serialize)]
struct KmstepReport {
    i: i64,
    j: i64,
    n: usize,
    spectral_raw: f64,
    spectral_clamped: f64,
    oracle: f64,
    difference: f64,
    quadrature_nodes: usize,
    quadrature_converged: bool,
}

fn run_kmstep(args: &KmstepArgs) -> Result<String> {
    spectrum_probs_valid(args.a, args.b, args.c)?;
    let (chain, measure) = match args.example {
        ExampleKind::Rw => {
            let chain: AlmostBDChain = BDChain::constant(args.a, args.b, args.c).into();
            chain.validate()?;
            let measure = constant_chain_measure(args.a, args.b, args.c)?;
            (chain, measure)
        }
        ExampleKind::Ar => {
            let chain = AlmostBDChain::ar_boundary_example(args.a, args.b, args.c)?;
            let measure = ar_stieltjes(args.a, args.c)?.invert()?.measure;
            (chain, measure)
        }
    };
    let imax = block_index(args.i).0.max(block_index(args.j).0);
    let blocks = relabel_to_blocks(chain.clone());
    let fam = FamilyEvaluator::new(Family::Q, &blocks, None, None, imax)?;
    let pot = potential_coeffs(&chain, imax as i64 + 2)?;
    let norms = norm_matrices(NormKind::Base, &pot, None, None, imax)?;
    let table = km_table(&measure, &fam, &norms, imax, args.n, km_quad_options())?;
    let value = table.scalar(args.i, args.j, args.n);
    let oracle = nstep(&chain, args.i, args.j, args.n);
    let report = KmstepReport {
        i: args.i,
        j: args.j,
        n: args.n,
        spectral_raw: value.raw,
        spectral_clamped: clamp_probability(value.raw),
        oracle,
        difference: value.raw - oracle,
        quadrature_nodes: table.info.nodes,
        quadrature_converged: table.info.converged,
    };
    match args.out.format {
        OutputFormat::Json => to_json_string(&report),
        OutputFormat::Csv => to_csv_string(
            &[
                "i",
                "j",
                "n",
                "spectral_raw",
                "spectral_clamped",
                "oracle",
                "difference",
            ],
            &[vec![
                Cell::Int(report.i),
                Cell::Int(report.j),
                Cell::Int(report.n as i64),
                Cell::Float(report.spectral_raw),
                Cell::Float(report.spectral_clamped),
                Cell::Float(report.oracle),
                Cell::Float(report.difference),
            ]],
        ),
    }
}

// ---------------------------------------------------------------- verify

fn run_verify(args: &VerifyArgs) -> Result<RunOutput> {
    let suites: Vec<Suite> = match args.suite {
        Some(s) => vec![s],
        None => vec![Suite::Rw, Suite::RaDarboux, Suite::ArDarboux, Suite::Stieltjes],
    };
    let mut reports: Vec<Report> = Vec::new();
    for s in suites {
        reports.push(run_suite(s)?);
    }
    let breach = reports.iter().any(|r| !r.pass);
    let content = match args.out.format {
        OutputFormat::Json => to_json_string(&reports)?,
        OutputFormat::Csv => {
            let mut table = Vec::new();
            for r in &reports {
                for c in &r.checks {
                    table.push(vec![
                        Cell::Str(r.suite.clone()),
                        Cell::Str(c.name.clone()),
                        Cell::Float(c.max_error),
                        Cell::Float(c.threshold),
                        Cell::Bool(c.pass),
                    ]);
                }
            }
            to_csv_string(&["suite", "check", "max_error", "threshold", "pass"], &table)?
        }
    };
    Ok(RunOutput { content, breach })
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn chain_source_requires_exactly_one() {
        let none = ChainSource {
            chain: None,
            constant: None,
            ar_example: None,
        };
        assert!(matches!(none.resolve(), Err(Error::Config(_))));
        let both = ChainSource {
            chain: None,
            constant: Some(vec![0.125, 0.75, 0.125]),
            ar_example: Some(vec![0.125, 0.75, 0.125]),
        };
        assert!(matches!(both.resolve(), Err(Error::Config(_))));
    }

    #[test]
    fn tolerance_resolution_prefers_flag_and_rejects_nonpositive() {
        assert_eq!(resolve_tol(Some(1e-9), 1e-13).unwrap(), 1e-9);
        assert!(resolve_tol(Some(0.0), 1e-13).is_err());
        assert!(resolve_tol(Some(-1.0), 1e-13).is_err());
        assert_eq!(resolve_tol(None, 1e-13).unwrap(), 1e-13);
    }

    #[test]
    fn factorize_ra_json_reports_critical_freeze() {
        let h = h_closed(0.125, 0.125);
        let cmd = Command::FactorizeRa(FactorizeRaArgs {
            source: ChainSource {
                chain: None,
                constant: Some(vec![0.125, 0.75, 0.125]),
                ar_example: None,
            },
            alpha: h,
            x0: h,
            rows: 4,
            tol: None,
            out: OutputArgs {
                format: OutputFormat::Json,
                output: None,
            },
        });
        let out = run(&cmd).unwrap();
        assert!(!out.breach);
        let v: serde_json::Value = serde_json::from_str(&out.content).unwrap();
        // at the critical seeds the factor tail freezes immediately
        assert_eq!(v["pos_frozen"].as_i64(), Some(2));
        assert!(v["stabilized"].as_bool().unwrap());
        // s_1 = a/x_0 = 1 - H' for the symmetric chain
        let s1 = v["rows"]
            .as_array()
            .unwrap()
            .iter()
            .find(|r| r["n"].as_i64() == Some(1))
            .unwrap()["s"]
            .as_f64()
            .unwrap();
        assert!((s1 - (1.0 - h_prime_closed(0.125, 0.125))).abs() < 1e-12);
    }

    #[test]
    fn spectrum_rejects_mismatched_transform() {
        let cmd = Command::Spectrum(SpectrumArgs {
            example: ExampleKind::Rw,
            a: 0.125,
            b: 0.75,
            c: 0.125,
            transform: TransformKind::Christoffel,
            alpha: None,
            x0: None,
            samples: 10,
            moments: 2,
            out: OutputArgs {
                format: OutputFormat::Json,
                output: None,
            },
        });
        assert!(matches!(run(&cmd), Err(Error::Config(_))));
    }
}
