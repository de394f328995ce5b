//! Command implementations behind the `aaon` binary.
//!
//! Exit-code contract: 0 on success, 1 on numerical failure (including a
//! failed Monte Carlo cross-check), 2 on a malformed request.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use aaon_core::curve::DiscountCurve;
use aaon_core::factors::{
    default_midpoint, factor_curve_exact, factor_linear, factor_piecewise, write_csv,
};
use aaon_core::forwards::{
    arithmetic_forward, geometric_forward, takada_det_forward, takada_oa, ForwardMethod,
    ForwardQuote,
};
use aaon_core::g2pp::G2ppParams;
use aaon_core::montecarlo::{mc_arithmetic_forward, mc_factor, simulate_paths, McConfig};
use aaon_core::timegrid::{AccrualGrid, DayCountBasis};
use aaon_core::{Curve64, G2pp64, Grid64};

/// Gauss-Legendre node count for the integrated-rate forward.
const TAKADA_TIME_STEPS: usize = 64;

#[derive(Debug)]
pub enum CliError {
    /// Malformed request: exit code 2.
    Spec(String),
    /// Numerical failure or failed cross-check: exit code 1.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Spec(_) => 2,
            CliError::Numerical(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Spec(m) | CliError::Numerical(m) => m,
        }
    }
}

fn spec_err(e: impl std::fmt::Display) -> CliError {
    CliError::Spec(e.to_string())
}

fn num_err(e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(e.to_string())
}

#[derive(Debug, Parser)]
#[command(
    name = "aaon",
    about = "Arithmetic-average overnight-rate forwards under two-factor Gaussian short-rate models",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Price a forward with one or more methods.
    Price(PriceArgs),
    /// Reproduce a results table from a parameter-row spec file.
    Table(TableArgs),
    /// Emit the exact, linear and piecewise factor curves as CSV.
    Factors(FactorsArgs),
    /// Cross-check the quadrature engine against Monte Carlo.
    McCheck(McCheckArgs),
}

#[derive(Debug, Args, Clone)]
pub struct MarketArgs {
    /// Discount curve: `flat:<rate>` or `csv:<path>`.
    #[arg(long)]
    pub curve: String,
    /// Model parameters: `sigma=..,a=..,eta=..,b=..,rho=..` or `json:<path>`.
    #[arg(long)]
    pub model: String,
    /// Period start, in days from the valuation date.
    #[arg(long)]
    pub start: u32,
    /// Period end, in days from the valuation date.
    #[arg(long)]
    pub end: u32,
    /// Day-count denominator (days per year).
    #[arg(long, default_value_t = 360)]
    pub basis: u32,
}

#[derive(Debug, Args)]
pub struct PriceArgs {
    #[command(flatten)]
    pub market: MarketArgs,
    /// Comma-separated list of quote methods.
    #[arg(long, value_delimiter = ',', required = true)]
    pub method: Vec<String>,
    /// Gauss-Hermite order per dimension.
    #[arg(long, default_value_t = 32)]
    pub order: usize,
    /// Monte Carlo path count (for `mc` quotes).
    #[arg(long, default_value_t = 100_000)]
    pub paths: usize,
    /// Monte Carlo seed.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Use antithetic path pairs.
    #[arg(long, default_value_t = false)]
    pub antithetic: bool,
    /// Knot period (1-based) for the piecewise method; defaults to ceil(K/2).
    #[arg(long)]
    pub midpoint: Option<usize>,
    /// Output destination: `-` for stdout or a file path.
    #[arg(long, default_value = "-")]
    pub out: String,
    /// Output format.
    #[arg(long, default_value = "json")]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    /// JSON spec file: an array holding one `{"start_day","end_day"}`
    /// header object and one object per parameter row.
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long, default_value_t = 100_000)]
    pub paths: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = false)]
    pub antithetic: bool,
    #[arg(long, default_value_t = 360)]
    pub basis: u32,
    #[arg(long, default_value_t = 32)]
    pub order: usize,
    /// Flat discount rate backing the table.
    #[arg(long, default_value_t = 0.05)]
    pub rate: f64,
    #[arg(long, default_value = "-")]
    pub out: String,
}

#[derive(Debug, Args)]
pub struct FactorsArgs {
    #[command(flatten)]
    pub market: MarketArgs,
    #[arg(long, default_value_t = 32)]
    pub order: usize,
    /// Knot period (1-based) for the piecewise curve; defaults to ceil(K/2).
    #[arg(long)]
    pub midpoint: Option<usize>,
    #[arg(long, default_value = "-")]
    pub out: String,
}

#[derive(Debug, Args)]
pub struct McCheckArgs {
    #[command(flatten)]
    pub market: MarketArgs,
    #[arg(long, default_value_t = 32)]
    pub order: usize,
    #[arg(long, default_value_t = 100_000)]
    pub paths: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = false)]
    pub antithetic: bool,
    #[arg(long, default_value = "-")]
    pub out: String,
}

/// One priced quote on the wire.
#[derive(Debug, Serialize, Deserialize)]
pub struct QuoteRecord {
    pub method: String,
    pub value: f64,
    pub std_error: Option<f64>,
    #[serde(rename = "Ts_days")]
    pub ts_days: u32,
    #[serde(rename = "Te_days")]
    pub te_days: u32,
}

fn parse_curve(spec: &str) -> Result<Curve64, CliError> {
    if let Some(rate) = spec.strip_prefix("flat:") {
        let rate: f64 = rate
            .parse()
            .map_err(|_| CliError::Spec(format!("invalid flat rate `{rate}`")))?;
        DiscountCurve::flat(rate).map_err(spec_err)
    } else if let Some(path) = spec.strip_prefix("csv:") {
        DiscountCurve::from_csv_path(path).map_err(spec_err)
    } else {
        Err(CliError::Spec(format!(
            "curve must be `flat:<rate>` or `csv:<path>`, got `{spec}`"
        )))
    }
}

fn parse_model(spec: &str) -> Result<G2pp64, CliError> {
    if let Some(path) = spec.strip_prefix("json:") {
        let data = std::fs::read_to_string(path)
            .map_err(|e| CliError::Spec(format!("model file `{path}`: {e}")))?;
        let params: G2pp64 = serde_json::from_str(&data)
            .map_err(|e| CliError::Spec(format!("model file `{path}`: {e}")))?;
        params.validate().map_err(spec_err)?;
        return Ok(params);
    }
    let mut fields = [None::<f64>; 5];
    const NAMES: [&str; 5] = ["sigma", "a", "eta", "b", "rho"];
    for part in spec.split(',') {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| CliError::Spec(format!("model term `{part}` is not `key=value`")))?;
        let idx = NAMES
            .iter()
            .position(|n| *n == key.trim())
            .ok_or_else(|| CliError::Spec(format!("unknown model parameter `{key}`")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| CliError::Spec(format!("invalid value for `{key}`: `{value}`")))?;
        fields[idx] = Some(value);
    }
    let get = |i: usize| {
        fields[i].ok_or_else(|| CliError::Spec(format!("missing model parameter `{}`", NAMES[i])))
    };
    G2ppParams::new(get(0)?, get(1)?, get(2)?, get(3)?, get(4)?).map_err(spec_err)
}

fn build_grid(market: &MarketArgs) -> Result<Grid64, CliError> {
    let basis = DayCountBasis::new(market.basis).map_err(spec_err)?;
    AccrualGrid::daily(market.start, market.end, basis).map_err(spec_err)
}

/// Converts a user-facing 1-based midpoint to the internal 0-based index.
fn resolve_midpoint(
    midpoint: Option<usize>,
    grid: &Grid64,
) -> Result<usize, CliError> {
    match midpoint {
        None => Ok(default_midpoint(grid)),
        Some(0) => Err(CliError::Spec("midpoint periods are numbered from 1".into())),
        Some(m) => Ok(m - 1),
    }
}

fn write_out(target: &str, content: &str) -> Result<(), CliError> {
    if target == "-" {
        print!("{content}");
        Ok(())
    } else {
        std::fs::write(target, content)
            .map_err(|e| CliError::Spec(format!("cannot write `{target}`: {e}")))
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Price(args) => cmd_price(args),
        Command::Table(args) => cmd_table(args),
        Command::Factors(args) => cmd_factors(args),
        Command::McCheck(args) => cmd_mc_check(args),
    }
}

fn cmd_price(args: PriceArgs) -> Result<(), CliError> {
    let curve = parse_curve(&args.market.curve)?;
    let model = parse_model(&args.market.model)?;
    let grid = build_grid(&args.market)?;
    let methods: Vec<ForwardMethod> = args
        .method
        .iter()
        .map(|m| ForwardMethod::from_str(m).map_err(spec_err))
        .collect::<Result<_, _>>()?;
    if methods.is_empty() {
        return Err(CliError::Spec("method list must be non-empty".into()));
    }
    let midpoint = resolve_midpoint(args.midpoint, &grid)?;

    let mut records = Vec::with_capacity(methods.len());
    for method in methods {
        let quote: ForwardQuote<f64> = match method {
            ForwardMethod::Exact
            | ForwardMethod::Murex
            | ForwardMethod::Linear
            | ForwardMethod::Piecewise => {
                arithmetic_forward(&model, &curve, &grid, method, args.order, Some(midpoint))
                    .map_err(num_err)?
            }
            ForwardMethod::Geometric => geometric_forward(&curve, &grid).map_err(num_err)?,
            ForwardMethod::TakadaDet => takada_det_forward(&curve, &grid).map_err(num_err)?,
            ForwardMethod::TakadaOa => {
                takada_oa(&model, &curve, &grid, TAKADA_TIME_STEPS).map_err(num_err)?
            }
            ForwardMethod::Mc => {
                let cfg = McConfig {
                    n_paths: args.paths,
                    seed: args.seed,
                    antithetic: args.antithetic,
                };
                cfg.validate().map_err(spec_err)?;
                let panel = simulate_paths(&model, &curve, &grid, &cfg).map_err(num_err)?;
                ForwardQuote::from_mc(mc_arithmetic_forward(&panel))
            }
        };
        records.push(QuoteRecord {
            method: quote.method.name().to_string(),
            value: quote.value,
            std_error: quote.std_error,
            ts_days: grid.start_day(),
            te_days: grid.end_day(),
        });
    }

    let content = match args.format {
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(&records)
                .map_err(|e| num_err(format!("serialize: {e}")))?;
            s.push('\n');
            s
        }
        OutputFormat::Csv => {
            let mut s = String::from("method,value,std_error,Ts_days,Te_days\n");
            for r in &records {
                let se = r
                    .std_error
                    .map(|v| v.to_string())
                    .unwrap_or_default();
                let _ = writeln!(s, "{},{},{},{},{}", r.method, r.value, se, r.ts_days, r.te_days);
            }
            s
        }
    };
    write_out(&args.out, &content)
}

/// One entry of the table spec file.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum TableEntry {
    Header { start_day: u32, end_day: u32 },
    Row { sigma: f64, a: f64, eta: f64, b: f64, rho: f64 },
}

fn cmd_table(args: TableArgs) -> Result<(), CliError> {
    let data = std::fs::read_to_string(&args.spec)
        .map_err(|e| CliError::Spec(format!("spec file `{}`: {e}", args.spec.display())))?;
    let entries: Vec<TableEntry> = serde_json::from_str(&data)
        .map_err(|e| CliError::Spec(format!("spec file `{}`: {e}", args.spec.display())))?;
    let mut period = None;
    let mut rows = Vec::new();
    for entry in entries {
        match entry {
            TableEntry::Header { start_day, end_day } => {
                if period.replace((start_day, end_day)).is_some() {
                    return Err(CliError::Spec(
                        "spec file has more than one period header".into(),
                    ));
                }
            }
            TableEntry::Row { sigma, a, eta, b, rho } => {
                rows.push(G2ppParams::new(sigma, a, eta, b, rho).map_err(spec_err)?);
            }
        }
    }
    let (start_day, end_day) =
        period.ok_or_else(|| CliError::Spec("spec file lacks a period header".into()))?;
    if rows.is_empty() {
        return Err(CliError::Spec("spec file has no parameter rows".into()));
    }
    let basis = DayCountBasis::new(args.basis).map_err(spec_err)?;
    let grid = AccrualGrid::daily(start_day, end_day, basis).map_err(spec_err)?;
    let curve = DiscountCurve::flat(args.rate).map_err(spec_err)?;
    let cfg = McConfig {
        n_paths: args.paths,
        seed: args.seed,
        antithetic: args.antithetic,
    };
    cfg.validate().map_err(spec_err)?;

    let mut out = String::from("sigma,a,eta,b,rho,A1,Fa,err_murex,err_lin,err_pw\n");
    for model in &rows {
        let row = table_row(model, &curve, &grid, args.order, &cfg).map_err(num_err)?;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:.5},{:.5},{:.5},{:.5},{:.5}",
            model.sigma,
            model.a,
            model.eta,
            model.b,
            model.rho,
            row.a1,
            row.fa_mc,
            row.err_murex,
            row.err_lin,
            row.err_pw
        );
    }
    write_out(&args.out, &out)
}

/// One computed table row: the Monte Carlo forward plus the noise-free
/// quadrature approximation errors.
pub struct TableRow {
    pub a1: f64,
    pub fa_mc: f64,
    pub fa_mc_std_error: f64,
    pub fa_exact: f64,
    pub err_murex: f64,
    pub err_lin: f64,
    pub err_pw: f64,
}

pub fn table_row(
    model: &G2pp64,
    curve: &Curve64,
    grid: &Grid64,
    order: usize,
    cfg: &McConfig,
) -> aaon_core::Result<TableRow> {
    let exact = arithmetic_forward(model, curve, grid, ForwardMethod::Exact, order, None)?;
    let factors = exact.factors.as_ref().expect("exact quote carries factors");
    let a1 = factors.values()[0];
    let murex = arithmetic_forward(model, curve, grid, ForwardMethod::Murex, order, None)?;
    let lin = arithmetic_forward(model, curve, grid, ForwardMethod::Linear, order, None)?;
    let pw = arithmetic_forward(model, curve, grid, ForwardMethod::Piecewise, order, None)?;
    let panel = simulate_paths(model, curve, grid, cfg)?;
    let fa = mc_arithmetic_forward(&panel);
    Ok(TableRow {
        a1,
        fa_mc: fa.value,
        fa_mc_std_error: fa.std_error,
        fa_exact: exact.value,
        err_murex: murex.value / exact.value - 1.0,
        err_lin: lin.value / exact.value - 1.0,
        err_pw: pw.value / exact.value - 1.0,
    })
}

fn cmd_factors(args: FactorsArgs) -> Result<(), CliError> {
    let curve = parse_curve(&args.market.curve)?;
    let model = parse_model(&args.market.model)?;
    let grid = build_grid(&args.market)?;
    let midpoint = resolve_midpoint(args.midpoint, &grid)?;

    let exact = factor_curve_exact(&model, &curve, &grid, args.order).map_err(num_err)?;
    let a1 = exact.values()[0];
    if midpoint >= exact.values().len() {
        return Err(CliError::Spec(format!(
            "midpoint {} out of range (K = {})",
            midpoint + 1,
            exact.values().len()
        )));
    }
    let am = exact.values()[midpoint];
    let lin = factor_linear(a1, &grid).map_err(num_err)?;
    let pw = factor_piecewise(a1, am, &grid, midpoint).map_err(spec_err)?;
    let mut buf = Vec::new();
    write_csv(&mut buf, &exact, &lin, &pw).map_err(num_err)?;
    let content = String::from_utf8(buf).expect("csv content is utf-8");
    write_out(&args.out, &content)
}

/// Comparison outcome of the two engines.
pub struct McCheckReport {
    pub fa_quad: f64,
    pub fa_mc: f64,
    pub fa_std_error: f64,
    pub a1_quad: f64,
    pub a1_mc: f64,
    pub a1_std_error: f64,
    pub pass: bool,
}

impl McCheckReport {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "F_a quadrature : {:.10}", self.fa_quad);
        let _ = writeln!(
            s,
            "F_a monte-carlo: {:.10} +/- {:.10}",
            self.fa_mc, self.fa_std_error
        );
        let _ = writeln!(s, "A_1 quadrature : {:.10}", self.a1_quad);
        let _ = writeln!(
            s,
            "A_1 monte-carlo: {:.10} +/- {:.10}",
            self.a1_mc, self.a1_std_error
        );
        let _ = writeln!(s, "verdict: {}", if self.pass { "PASS" } else { "FAIL" });
        s
    }
}

pub fn mc_check(
    model: &G2pp64,
    curve: &Curve64,
    grid: &Grid64,
    order: usize,
    cfg: &McConfig,
) -> aaon_core::Result<McCheckReport> {
    let fa_quad = arithmetic_forward(model, curve, grid, ForwardMethod::Exact, order, None)?.value;
    // the Monte Carlo factor estimates the change-of-numeraire ratio, so
    // the comparable quadrature number is the ratio form
    let (_, diag) =
        aaon_core::factors::factor_exact_with_diagnostics(model, curve, grid, 0, order)?;
    let a1_quad = diag.ratio_form();
    let panel = simulate_paths(model, curve, grid, cfg)?;
    let fa = mc_arithmetic_forward(&panel);
    let a1 = mc_factor(&panel, 0)?;
    // three-sigma rule with an absolute floor for the deterministic case
    let fa_ok = (fa.value - fa_quad).abs() <= (3.0 * fa.std_error).max(1e-12);
    let a1_ok = (a1.value - a1_quad).abs() <= (3.0 * a1.std_error).max(1e-12);
    Ok(McCheckReport {
        fa_quad,
        fa_mc: fa.value,
        fa_std_error: fa.std_error,
        a1_quad,
        a1_mc: a1.value,
        a1_std_error: a1.std_error,
        pass: fa_ok && a1_ok,
    })
}

fn cmd_mc_check(args: McCheckArgs) -> Result<(), CliError> {
    let curve = parse_curve(&args.market.curve)?;
    let model = parse_model(&args.market.model)?;
    let grid = build_grid(&args.market)?;
    let cfg = McConfig {
        n_paths: args.paths,
        seed: args.seed,
        antithetic: args.antithetic,
    };
    cfg.validate().map_err(spec_err)?;
    let report = mc_check(&model, &curve, &grid, args.order, &cfg).map_err(num_err)?;
    write_out(&args.out, &report.render())?;
    if report.pass {
        Ok(())
    } else {
        Err(CliError::Numerical(
            "monte-carlo cross-check failed the 3-sigma rule".into(),
        ))
    }
}
