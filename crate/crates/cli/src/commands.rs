use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser};
use num_complex::Complex64;
use rand::Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use qft_core::circuit::{build_syndrome_circuit, LayeredCircuit};
use qft_core::code::{CodeDefinition, CodeSummary, CssCode};
use qft_core::decoder::{certify_budgets, DecoderKind};
use qft_core::exact_sim::{verify_teleportation, LogicalClifford, LogicalGate};
use qft_core::ftcompile::{
    overhead_grid, plan_layout, resource_report, schedule, validate_schedule, BlockSizeRule, CodeFamily, PrepCostModel,
};
use qft_core::noise::{substream_rng, truncation_bound, GRID_RATES, GRID_SIZES};
use qft_core::pauli_sim::{exhaustive_push_check, run_memory_experiment, BlockContext, ExperimentConfig};

use crate::output::{config_hash, csv_document, json_document, table, Context};
use crate::Format;

/// Fidelity shortfall tolerated by `teleport-demo`.
const TELEPORT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Core(String),
}

fn core_err(e: impl std::fmt::Display) -> CliError {
    CliError::Core(e.to_string())
}

#[derive(Parser)]
struct Defaults<A: Args> {
    #[command(flatten)]
    inner: A,
}

fn defaults<A: Args>() -> A {
    Defaults::<A>::try_parse_from(["qft"])
        .expect("every flag has a default")
        .inner
}

fn read_config<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let parsed = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// The subcommand's flags, or the contents of `--config` when given.
pub fn load_args<A: DeserializeOwned>(config: Option<&Path>, flags: A) -> Result<A, CliError> {
    match config {
        Some(path) => read_config(path),
        None => Ok(flags),
    }
}

/// A bundled code name or a path to a code definition JSON file.
fn resolve_code(spec: &str) -> Result<CssCode, CliError> {
    match CssCode::bundled(spec) {
        Ok(code) => Ok(code),
        Err(e) if !Path::new(spec).is_file() => Err(CliError::Usage(e.to_string())),
        Err(_) => {
            let text = fs::read_to_string(spec).map_err(|e| CliError::Config(format!("{spec}: {e}")))?;
            CodeDefinition::from_json(&text)
                .and_then(|d| d.build())
                .map_err(|e| CliError::Config(format!("{spec}: {e}")))
        }
    }
}

fn parse_decoder(name: &str) -> Result<DecoderKind, CliError> {
    name.parse()
        .map_err(|e: qft_core::decoder::DecoderError| CliError::Usage(e.to_string()))
}

fn unsupported(format: Format, command: &str) -> CliError {
    CliError::Usage(format!("--format {format:?} is not available for {command}").to_lowercase())
}

#[derive(Serialize)]
struct SweepRow {
    code: String,
    delta: Option<f64>,
    rounds: u32,
    trials: u64,
    failures: u64,
    ci_low: f64,
    ci_high: f64,
    seed: u64,
}

#[derive(Serialize)]
struct SweepSummary {
    delta: Option<f64>,
    rounds: u32,
    failures: u64,
    heralded: u64,
    failure_rate: f64,
    ci_low: f64,
    ci_high: f64,
    residual_histograms: Vec<Vec<u64>>,
}

pub fn ec_sweep(ctx: &Context, config: Option<&Path>) -> Result<bool, CliError> {
    let path = config.ok_or_else(|| CliError::Usage("ec-sweep needs --config <path>".into()))?;
    let mut cfg: ExperimentConfig = read_config(path)?;
    if let Some(seed) = ctx.seed {
        cfg.seed = seed;
    }
    cfg.validate()
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let code = resolve_code(&cfg.code)?;
    let block = BlockContext::new(code, cfg.decoder).map_err(core_err)?;
    let deltas: Vec<Option<f64>> = if cfg.deltas.is_empty() {
        vec![None]
    } else {
        cfg.deltas.iter().copied().map(Some).collect()
    };
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for delta in &deltas {
        let model = delta.map_or_else(|| cfg.noise.clone(), |d| cfg.noise.with_delta(d));
        for &rounds in &cfg.rounds {
            let s = run_memory_experiment(&block, &model, rounds, cfg.trials, cfg.seed).map_err(core_err)?;
            let delta = delta.or_else(|| model.rate());
            rows.push(SweepRow {
                code: s.code.clone(),
                delta,
                rounds,
                trials: s.trials,
                failures: s.failures,
                ci_low: s.ci_low,
                ci_high: s.ci_high,
                seed: s.seed,
            });
            summaries.push(SweepSummary {
                delta,
                rounds,
                failures: s.failures,
                heralded: s.heralded,
                failure_rate: s.failure_rate(),
                ci_low: s.ci_low,
                ci_high: s.ci_high,
                residual_histograms: s.residual_histograms,
            });
        }
    }
    let hash = config_hash("ec-sweep", &cfg);
    let csv = || csv_document(&hash, &rows);
    let json = || json_document("ec-sweep", &hash, &cfg, &summaries);
    if ctx.writes_files() {
        ctx.emit("ec_sweep", "csv", &csv()?)?;
        ctx.emit("ec_sweep", "json", &json())?;
    } else {
        match ctx.format_or(Format::Csv) {
            Format::Csv => ctx.emit("ec_sweep", "csv", &csv()?)?,
            Format::Json => ctx.emit("ec_sweep", "json", &json())?,
            f => return Err(unsupported(f, "ec-sweep")),
        }
    }
    Ok(true)
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertifyArgs {
    /// Bundled code name or code definition JSON.
    #[arg(long, default_value = "steane")]
    pub code: String,
    /// lookup, greedy or hybrid.
    #[arg(long, default_value = "lookup")]
    pub decoder: String,
    /// Largest X and Z weight of the input errors.
    #[arg(long, default_value_t = 1)]
    pub t_data: usize,
    /// Largest number of flipped syndrome bits.
    #[arg(long, default_value_t = 1)]
    pub t_syn: usize,
}

impl Default for CertifyArgs {
    fn default() -> Self {
        defaults()
    }
}

#[derive(Serialize)]
struct CertificateRow {
    code: String,
    decoder: String,
    t_data: usize,
    t_syn: usize,
    t_residual: usize,
    logical_found: bool,
    cases_enumerated: u64,
}

#[derive(Serialize)]
struct LabeledCertificate<'a> {
    /// Budgets hold for this code and decoder only, not for a code family.
    budget_basis: &'static str,
    #[serde(flatten)]
    certificate: &'a qft_core::decoder::BudgetCertificate,
}

pub fn certify(ctx: &Context, args: CertifyArgs) -> Result<bool, CliError> {
    let kind = parse_decoder(&args.decoder)?;
    let code = resolve_code(&args.code)?;
    let decoder = kind.build(&code).map_err(core_err)?;
    let cert = certify_budgets(&code, decoder.as_ref(), args.t_data, args.t_syn).map_err(core_err)?;
    let hash = config_hash("certify", &args);
    match ctx.format_or(Format::Json) {
        Format::Json => {
            let labeled = LabeledCertificate {
                budget_basis: "per-code exhaustive enumeration",
                certificate: &cert,
            };
            ctx.emit("certificate", "json", &json_document("certify", &hash, &args, &labeled))?
        }
        Format::Csv => {
            let row = CertificateRow {
                code: cert.code.clone(),
                decoder: cert.decoder.clone(),
                t_data: cert.t_data,
                t_syn: cert.t_syn,
                t_residual: cert.t_residual,
                logical_found: cert.logical_found,
                cases_enumerated: cert.cases_enumerated,
            };
            ctx.emit("certificate", "csv", &csv_document(&hash, &[row])?)?
        }
        f => return Err(unsupported(f, "certify")),
    }
    Ok(!cert.logical_found)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum BlockRuleArg {
    Sqrt,
    Polylog,
}

impl From<BlockRuleArg> for BlockSizeRule {
    fn from(r: BlockRuleArg) -> Self {
        match r {
            BlockRuleArg::Sqrt => BlockSizeRule::SquareRoot,
            BlockRuleArg::Polylog => BlockSizeRule::PolylogFraction,
        }
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanArgs {
    /// Logical qubits of the computation.
    #[arg(long, default_value_t = 10_000)]
    pub x: u64,
    /// Target overhead; the code rate is 2/(1+α).
    #[arg(long, default_value_t = 3.0)]
    pub alpha: f64,
    /// Target total error.
    #[arg(long, default_value_t = 1e-6)]
    pub epsilon: f64,
    /// exact-rate, hgp-hamming or hgp-repetition.
    #[arg(long, default_value = "exact-rate")]
    pub family: String,
    #[arg(long, value_enum, default_value = "sqrt")]
    pub block_rule: BlockRuleArg,
    /// Ancilla preparation qubits per block qubit, times the polylog factor.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Exponent of the polylog factor.
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    /// Exponent of n in the preparation round count.
    #[arg(long, default_value_t = 2.0)]
    pub q: f64,
    /// Logarithm base of the polylog factor (default e).
    #[arg(long, default_value_t = std::f64::consts::E)]
    pub log_base: f64,
    /// Comma-separated x values; emits (x, x′, x′/x) rows instead of one plan.
    #[arg(long, value_delimiter = ',')]
    pub x_grid: Option<Vec<u64>>,
    /// Sequential logical circuit (JSON lines) to schedule.
    #[arg(long)]
    pub circuit: Option<PathBuf>,
}

impl Default for PlanArgs {
    fn default() -> Self {
        defaults()
    }
}

#[derive(Serialize)]
struct GridRow {
    x: u64,
    x_prime: u64,
    ratio: f64,
}

#[derive(Serialize)]
struct PlanResult {
    report: qft_core::ftcompile::ResourceReport,
    realized_rate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    schedule: Option<qft_core::ftcompile::Schedule>,
    #[serde(skip_serializing_if = "Option::is_none")]
    schedule_rounds: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    schedule_violation: Option<String>,
}

pub fn plan(ctx: &Context, args: PlanArgs) -> Result<bool, CliError> {
    let family: CodeFamily = args.family.parse().map_err(|e| CliError::Usage(format!("{e}")))?;
    let model = PrepCostModel {
        c: args.c,
        p: args.p,
        q: args.q,
        log_base: args.log_base,
    };
    let hash = config_hash("plan", &args);
    if let Some(xs) = &args.x_grid {
        let grid =
            overhead_grid(xs, args.alpha, family, args.epsilon, &model).map_err(|e| CliError::Usage(e.to_string()))?;
        let rows: Vec<GridRow> = grid
            .into_iter()
            .map(|(x, x_prime, ratio)| GridRow { x, x_prime, ratio })
            .collect();
        match ctx.format_or(Format::Csv) {
            Format::Csv => ctx.emit("plan_grid", "csv", &csv_document(&hash, &rows)?)?,
            Format::Json => ctx.emit("plan_grid", "json", &json_document("plan", &hash, &args, &rows))?,
            Format::Table => {
                let lines: Vec<(String, String)> = rows
                    .iter()
                    .map(|r| (r.x.to_string(), format!("{:>14}  {:.6}", r.x_prime, r.ratio)))
                    .collect();
                ctx.emit("plan_grid", "txt", &table(&lines))?
            }
        }
        return Ok(true);
    }
    let layout =
        plan_layout(args.x, args.alpha, family, args.block_rule.into()).map_err(|e| CliError::Usage(e.to_string()))?;
    let report = resource_report(&layout, args.epsilon, &model).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut result = PlanResult {
        realized_rate: layout.realized_rate(),
        report,
        schedule: None,
        schedule_rounds: None,
        schedule_violation: None,
    };
    if let Some(path) = &args.circuit {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let circuit =
            LayeredCircuit::from_jsonl(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let s = schedule(&circuit, &layout, &result.report).map_err(|e| CliError::Config(e.to_string()))?;
        result.schedule_violation = validate_schedule(&s).err().map(|e| e.to_string());
        result.schedule_rounds = Some(s.length_rounds());
        result.schedule = Some(s);
    }
    let r = &result.report;
    match ctx.format_or(Format::Json) {
        Format::Json => ctx.emit("plan", "json", &json_document("plan", &hash, &args, &result))?,
        Format::Table => {
            let mut rows = vec![
                ("code".to_string(), layout.code.clone()),
                ("logical qubits x".into(), layout.x.to_string()),
                ("blocks h".into(), layout.h.to_string()),
                ("block [[n, m]]".into(), format!("[[{}, {}]]", layout.n, layout.m)),
                ("target rate".into(), format!("{:.6}", layout.rate)),
                ("realized rate".into(), format!("{:.6}", result.realized_rate)),
                ("data qubits".into(), r.data_qubits.to_string()),
                ("ec ancilla".into(), r.ec_ancilla.to_string()),
                ("prep ancilla".into(), r.prep_ancilla.to_string()),
                ("total x′".into(), r.total.to_string()),
                ("overhead x′/x".into(), format!("{:.6}", r.overhead)),
                ("prep rounds".into(), r.prep_rounds.to_string()),
                (
                    "cost model (c, p, q)".into(),
                    format!("({}, {}, {})", model.c, model.p, model.q),
                ),
            ];
            if let Some(n) = result.schedule_rounds {
                rows.push(("schedule rounds".into(), n.to_string()));
            }
            ctx.emit("plan", "txt", &table(&rows))?
        }
        f => return Err(unsupported(f, "plan")),
    }
    Ok(result.schedule_violation.is_none())
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PushCheckArgs {
    #[arg(long, default_value = "steane")]
    pub code: String,
    /// Faults per insertion (1 or 2).
    #[arg(long, default_value_t = 2)]
    pub max_faults: usize,
}

impl Default for PushCheckArgs {
    fn default() -> Self {
        defaults()
    }
}

pub fn push_check(ctx: &Context, args: PushCheckArgs) -> Result<bool, CliError> {
    if !(1..=2).contains(&args.max_faults) {
        return Err(CliError::Usage("--max-faults must be 1 or 2".into()));
    }
    let code = resolve_code(&args.code)?;
    let circuit = build_syndrome_circuit(&code).map_err(core_err)?;
    let report = exhaustive_push_check(&circuit, args.max_faults).map_err(core_err)?;
    let hash = config_hash("push-check", &args);
    match ctx.format_or(Format::Json) {
        Format::Json => ctx.emit(
            "push_check",
            "json",
            &json_document("push-check", &hash, &args, &report),
        )?,
        Format::Csv => ctx.emit("push_check", "csv", &csv_document(&hash, &[&report])?)?,
        f => return Err(unsupported(f, "push-check")),
    }
    Ok(report.passed())
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruncationArgs {
    /// Comma-separated block sizes.
    #[arg(long, value_delimiter = ',', default_values_t = GRID_SIZES)]
    pub n: Vec<u64>,
    /// Comma-separated noise rates.
    #[arg(long, value_delimiter = ',', default_values_t = GRID_RATES)]
    pub delta: Vec<f64>,
}

impl Default for TruncationArgs {
    fn default() -> Self {
        defaults()
    }
}

#[derive(Serialize)]
struct TruncationRow {
    n: u64,
    delta: f64,
    t: u64,
    tail_threshold: u64,
    ln_lhs: f64,
    ln_bound: f64,
    certified: bool,
}

pub fn truncation_table(ctx: &Context, args: TruncationArgs) -> Result<bool, CliError> {
    let mut rows = Vec::new();
    for &n in &args.n {
        for &delta in &args.delta {
            let b = truncation_bound(n, delta).map_err(|e| CliError::Usage(e.to_string()))?;
            rows.push(TruncationRow {
                n,
                delta,
                t: b.t,
                tail_threshold: b.tail_threshold,
                ln_lhs: b.ln_lhs,
                ln_bound: b.ln_bound,
                certified: b.certified,
            });
        }
    }
    let hash = config_hash("truncation-table", &args);
    match ctx.format_or(Format::Csv) {
        Format::Csv => ctx.emit("truncation", "csv", &csv_document(&hash, &rows)?)?,
        Format::Json => ctx.emit(
            "truncation",
            "json",
            &json_document("truncation-table", &hash, &args, &rows),
        )?,
        f => return Err(unsupported(f, "truncation-table")),
    }
    Ok(rows.iter().all(|r| r.certified))
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TeleportArgs {
    /// Code with one logical qubit.
    #[arg(long, default_value = "steane")]
    pub code: String,
    /// i, h, s, x or z.
    #[arg(long, default_value = "h")]
    pub gate: String,
    /// Logical input: zero, one, plus or random.
    #[arg(long, default_value = "random")]
    pub input: String,
    #[arg(skip)]
    pub seed: u64,
}

impl Default for TeleportArgs {
    fn default() -> Self {
        defaults()
    }
}

#[derive(Serialize)]
struct TeleportSummary {
    logical_input: [[f64; 2]; 2],
    min_fidelity: f64,
    total_probability: f64,
    most_likely: qft_core::exact_sim::TeleportRecord,
    classes: Vec<qft_core::exact_sim::TeleportClass>,
}

pub fn teleport_demo(ctx: &Context, mut args: TeleportArgs) -> Result<bool, CliError> {
    if let Some(seed) = ctx.seed {
        args.seed = seed;
    }
    let code = resolve_code(&args.code)?;
    if code.m() != 1 {
        return Err(CliError::Usage(format!(
            "{} encodes {} logical qubits; teleport-demo needs 1",
            code.name(),
            code.m()
        )));
    }
    let gates = match args.gate.as_str() {
        "i" => vec![],
        "h" => vec![LogicalGate::H(0)],
        "s" => vec![LogicalGate::S(0)],
        "x" => vec![LogicalGate::X(0)],
        "z" => vec![LogicalGate::Z(0)],
        other => {
            return Err(CliError::Usage(format!(
                "unknown gate `{other}`; valid options: i, h, s, x, z"
            )))
        }
    };
    let gate = LogicalClifford::new(1, gates).map_err(core_err)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let amps = match args.input.as_str() {
        "zero" => [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        "one" => [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
        "plus" => [Complex64::new(s, 0.0), Complex64::new(s, 0.0)],
        "random" => {
            let mut rng = substream_rng(args.seed, 0, 0, 0);
            let raw: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            let a = [Complex64::new(raw[0], raw[1]), Complex64::new(raw[2], raw[3])];
            let norm = (a[0].norm_sqr() + a[1].norm_sqr()).sqrt().max(f64::MIN_POSITIVE);
            a.map(|z| z / norm)
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown input `{other}`; valid options: zero, one, plus, random"
            )))
        }
    };
    let r = verify_teleportation(&code, &amps, &gate).map_err(core_err)?;
    let summary = TeleportSummary {
        logical_input: amps.map(|z| [z.re, z.im]),
        min_fidelity: r.min_fidelity,
        total_probability: r.total_probability,
        most_likely: r.record,
        classes: r.classes,
    };
    let hash = config_hash("teleport-demo", &args);
    match ctx.format_or(Format::Json) {
        Format::Json => ctx.emit(
            "teleport",
            "json",
            &json_document("teleport-demo", &hash, &args, &summary),
        )?,
        Format::Csv => ctx.emit("teleport", "csv", &csv_document(&hash, &summary.classes)?)?,
        f => return Err(unsupported(f, "teleport-demo")),
    }
    Ok(summary.min_fidelity >= 1.0 - TELEPORT_TOLERANCE)
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodeInfoArgs {
    #[arg(long, default_value = "steane")]
    pub code: String,
}

impl Default for CodeInfoArgs {
    fn default() -> Self {
        defaults()
    }
}

pub fn code_info(ctx: &Context, args: CodeInfoArgs) -> Result<bool, CliError> {
    let code = resolve_code(&args.code)?;
    let s = CodeSummary::of(&code);
    let hash = config_hash("code-info", &args);
    match ctx.format_or(Format::Table) {
        Format::Json => ctx.emit("code_info", "json", &json_document("code-info", &hash, &args, &s))?,
        Format::Table => {
            let distance = match (s.d_min, s.d_min_exact) {
                (Some(d), true) => d.to_string(),
                (Some(d), false) => format!("≤ {d}"),
                (None, _) => "unknown".into(),
            };
            let mut rows = vec![
                ("name".to_string(), s.name.clone()),
                ("[[n, m, d]]".into(), format!("[[{}, {}, {distance}]]", s.n, s.m)),
                ("X checks".into(), format!("{} (rank {})", s.num_x_checks, s.rank_hx)),
                ("Z checks".into(), format!("{} (rank {})", s.num_z_checks, s.rank_hz)),
                ("(r, s)".into(), format!("({}, {})", s.r, s.s)),
            ];
            rows.extend(
                s.x_logicals
                    .iter()
                    .enumerate()
                    .map(|(i, l)| (format!("X̄{i}"), l.clone())),
            );
            rows.extend(
                s.z_logicals
                    .iter()
                    .enumerate()
                    .map(|(i, l)| (format!("Z̄{i}"), l.clone())),
            );
            ctx.emit("code_info", "txt", &table(&rows))?
        }
        f => return Err(unsupported(f, "code-info")),
    }
    Ok(true)
}
