use std::collections::BTreeSet;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use permcycle::acceptance::{run_criterion, AcceptanceConfig, CRITERIA};
use permcycle::classes::{
    class_egf_series, class_egf_structured, convergence_report, convergence_rows, joint_prob_c1_c2,
    limit_probability, prob_no_cycles_in, prob_no_powerlength_cycles, CycleCountSet,
    CycleLengthSet,
};
use permcycle::costmodel::{
    bard_table, key_recovery_cost, key_recovery_optimize, KeyRecoveryModel, FIGURE_OF_MERIT,
};
use permcycle::exactnum::{divisor_profile, factorial};
use permcycle::fixpoints::fixpoint_distribution;
use permcycle::keeloq::{
    bard_attack, build_codebook, cbw_attack, keeloq_decrypt, keeloq_encrypt, AttackReport,
    Codebook, KeeloqKey, MiniParams,
};
use permcycle::permlab::{experiment_iterated_fixpoints, trial_rng};
use permcycle::{BigRational, HpReal};
use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(
    name = "permcycle",
    version,
    about = "Cycle statistics of random permutations and fixed-point attacks"
)]
struct Cli {
    /// Working precision in bits for high-precision reals.
    #[arg(long, global = true, env = "PERMCYCLE_PRECISION_BITS", default_value_t = permcycle::DEFAULT_PRECISION_BITS)]
    bits: u32,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for simulations and attacks (results do not depend on it).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Decimal digits printed for high-precision values.
    #[arg(long, global = true, default_value_t = 30)]
    digits: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Limiting probabilities of cycle-structure events.
    #[command(subcommand)]
    Prob(ProbCmd),
    /// Exact EGF coefficients of permutation classes.
    #[command(subcommand)]
    Egf(EgfCmd),
    /// Divisor profile of k.
    Tau { k: u64 },
    /// Distribution of the number of fixed points of pi^k.
    Fixdist {
        #[arg(long)]
        k: u64,
        #[arg(long, default_value_t = 50)]
        cmax: usize,
    },
    /// Monte Carlo fixed points of pi^k for random pi in S_n.
    Simulate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        trials: u64,
        #[arg(long, value_delimiter = ',', required = true)]
        k: Vec<u64>,
        #[arg(long, default_value = "1/64", value_parser = parse_fraction)]
        fraction: BigRational,
    },
    /// Full-width Keeloq.
    Keeloq {
        #[arg(value_enum)]
        op: KeeloqOp,
        /// 64-bit key, hexadecimal.
        #[arg(long, value_parser = parse_hex64)]
        key: u64,
        /// 32-bit block, hexadecimal.
        #[arg(long, value_parser = parse_hex32)]
        block: u32,
    },
    /// Fixed-point attacks on reduced-width Keeloq.
    Attack(AttackArgs),
    /// Cost of the two-stage key recovery.
    Costs {
        #[arg(long, conflicts_with = "optimize")]
        runs: Option<u32>,
        #[arg(long)]
        optimize: bool,
        /// Largest run count scanned by --optimize.
        #[arg(long, default_value_t = 100)]
        max_runs: u32,
        /// Use pass rates from the limiting law instead of the simulated ones.
        #[arg(long)]
        theoretical: bool,
    },
    /// Success probability of the pairwise attack against the known codebook fraction.
    BardTable,
    /// Run the acceptance battery and print one PASS/FAIL line per criterion.
    #[command(alias = "check")]
    PaperCheck {
        /// Run only these criteria.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u32>,
    },
}

#[derive(Subcommand, Debug)]
enum ProbCmd {
    /// No cycle with a length in the list.
    NoCycles {
        #[arg(long, value_delimiter = ',', required = true)]
        lengths: Vec<u64>,
    },
    /// Exactly c fixed points.
    FixedPoints {
        #[arg(long)]
        c: u64,
    },
    /// Exactly c1 fixed points and c2 cycles of length 2, 4 or 8.
    Joint {
        #[arg(long)]
        c1: u64,
        #[arg(long)]
        c2: u64,
    },
    /// No cycle whose length is a perfect square (2) or cube (3).
    NoPowers {
        #[arg(long)]
        exponent: u32,
    },
    /// Finite-n probabilities of avoiding the listed lengths and their distance to the limit.
    Convergence {
        #[arg(long, value_delimiter = ',', required = true)]
        lengths: Vec<u64>,
        #[arg(long, default_value_t = 20)]
        order: usize,
    },
}

#[derive(Subcommand, Debug)]
enum EgfCmd {
    /// n! [z^n] of the class with allowed cycle lengths and cycle counts.
    Coeff {
        #[arg(long)]
        n: usize,
        /// Allowed cycle lengths (default: all).
        #[arg(long, value_delimiter = ',', conflicts_with = "except")]
        lengths: Option<Vec<u64>>,
        /// Forbidden cycle lengths.
        #[arg(long, value_delimiter = ',')]
        except: Option<Vec<u64>>,
        /// Allowed numbers of cycles (default: any).
        #[arg(long, value_delimiter = ',')]
        counts: Option<Vec<u64>>,
    },
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum KeeloqOp {
    Encrypt,
    Decrypt,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum AttackKind {
    Bard,
    Cbw,
}

#[derive(Args, Debug)]
struct AttackArgs {
    #[arg(value_enum)]
    kind: AttackKind,
    #[arg(long, default_value_t = 12)]
    width: u32,
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    /// Number of random keys attacked.
    #[arg(long, default_value_t = 1)]
    key_trials: u64,
    /// Attack a stored codebook instead of generating keys.
    #[arg(long, conflicts_with = "write_codebook")]
    codebook: Option<PathBuf>,
    /// Save the codebook of the first key trial.
    #[arg(long)]
    write_codebook: Option<PathBuf>,
    /// Include wall-clock times (makes output run-dependent).
    #[arg(long)]
    timing: bool,
}

fn parse_hex64(s: &str) -> Result<u64, String> {
    u64::from_str_radix(s.trim_start_matches("0x"), 16).map_err(|e| format!("bad hex key: {e}"))
}

fn parse_hex32(s: &str) -> Result<u32, String> {
    u32::from_str_radix(s.trim_start_matches("0x"), 16).map_err(|e| format!("bad hex block: {e}"))
}

/// `a/b` or a plain decimal, exactly.
fn parse_fraction(s: &str) -> Result<BigRational, String> {
    let bad = || format!("bad fraction {s:?}");
    if s.contains('/') {
        return s.parse::<BigRational>().map_err(|_| bad());
    }
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    if int.is_empty() && frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits: permcycle::BigInt = format!("{int}{frac}").parse().map_err(|_| bad())?;
    let scale = num_pow10(frac.len());
    Ok(BigRational::new(digits, scale))
}

fn num_pow10(n: usize) -> permcycle::BigInt {
    (0..n).fold(permcycle::BigInt::from(1), |a, _| a * 10)
}

struct Ctx {
    bits: u32,
    digits: usize,
    seed: u64,
}

impl Ctx {
    fn hp(&self, v: &HpReal) -> Value {
        json!({
            "value": v.to_decimal_string(self.digits),
            "precision_bits": v.precision_bits(),
            "error_bound_log2": -(v.precision_bits() as i64),
        })
    }
}

enum Outcome {
    Ok,
    Failed,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(w) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(1),
        Err(e) if is_broken_pipe(e.as_ref()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn is_broken_pipe(e: &(dyn std::error::Error + 'static)) -> bool {
    let io_kind = |e: &io::Error| e.kind() == io::ErrorKind::BrokenPipe;
    if let Some(io) = e.downcast_ref::<io::Error>() {
        return io_kind(io);
    }
    if let Some(csv::ErrorKind::Io(io)) = e.downcast_ref::<csv::Error>().map(|c| c.kind()) {
        return io_kind(io);
    }
    e.downcast_ref::<serde_json::Error>()
        .and_then(|j| j.io_error_kind())
        == Some(io::ErrorKind::BrokenPipe)
}

type AnyResult<T> = Result<T, Box<dyn std::error::Error>>;

/// Resolved settings echoed with every result.
fn config(cli: &Cli, format: Format, command: Value) -> Value {
    json!({
        "command": command,
        "precision_bits": cli.bits,
        "seed": cli.seed,
        "format": format,
        "digits": cli.digits,
    })
}

fn emit_json(config: Value, result: Value) -> AnyResult<()> {
    let out = json!({ "config": config, "result": result });
    let mut stdout = io::stdout().lock();
    serde_json::to_writer_pretty(&mut stdout, &out)?;
    writeln!(stdout)?;
    Ok(())
}

fn emit_csv<T: Serialize>(config: &Value, rows: &[T]) -> AnyResult<()> {
    let mut stdout = io::stdout().lock();
    writeln!(stdout, "# config: {}", serde_json::to_string(config)?)?;
    let mut w = csv::Writer::from_writer(stdout);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn emit_table(config: &Value, lines: &[String]) -> AnyResult<()> {
    let mut stdout = io::stdout().lock();
    writeln!(stdout, "# config: {}", serde_json::to_string(config)?)?;
    for l in lines {
        writeln!(stdout, "{l}")?;
    }
    Ok(())
}

fn run(cli: &Cli) -> AnyResult<Outcome> {
    let ctx = Ctx {
        bits: cli.bits,
        digits: cli.digits,
        seed: cli.seed,
    };
    if cli.bits < 16 {
        return Err("--bits must be at least 16".into());
    }
    match &cli.command {
        Command::Prob(cmd) => prob(cli, &ctx, cmd),
        Command::Egf(EgfCmd::Coeff {
            n,
            lengths,
            except,
            counts,
        }) => {
            let lset = match (lengths, except) {
                (Some(l), _) => CycleLengthSet::finite(l.iter().copied()),
                (None, Some(x)) => CycleLengthSet::all_except(x.iter().copied()),
                (None, None) => CycleLengthSet::All,
            };
            let cset = match counts {
                Some(c) => CycleCountSet::Finite(c.iter().copied().collect()),
                None => CycleCountSet::All,
            };
            let s = class_egf_series(&lset, &cset, *n)?;
            let coeff = s.coeff(*n)?;
            let count = &coeff * BigRational::from_integer(factorial(*n as u64));
            let format = cli.format.unwrap_or(Format::Json);
            let cfg = config(
                cli,
                format,
                json!({"egf-coeff": {"n": n, "lengths": lengths, "except": except, "counts": counts}}),
            );
            match format {
                Format::Json => emit_json(
                    cfg,
                    json!({"coefficient": coeff.to_string(), "count": count.to_string()}),
                )?,
                _ => emit_table(
                    &cfg,
                    &[
                        format!("[z^{n}] = {coeff}"),
                        format!("n! [z^{n}] = {count}"),
                    ],
                )?,
            }
            Ok(Outcome::Ok)
        }
        Command::Tau { k } => {
            let p = divisor_profile(*k)?;
            let format = cli.format.unwrap_or(Format::Json);
            let cfg = config(cli, format, json!({"tau": {"k": k}}));
            match format {
                Format::Json => emit_json(cfg, serde_json::to_value(&p)?)?,
                _ => emit_table(&cfg, &[p.tau.to_string()])?,
            }
            Ok(Outcome::Ok)
        }
        Command::Fixdist { k, cmax } => {
            let d = fixpoint_distribution(*k, *cmax, ctx.bits)?;
            #[derive(Serialize)]
            struct Row {
                c: usize,
                probability: String,
            }
            let rows: Vec<Row> = d
                .probabilities
                .iter()
                .enumerate()
                .map(|(c, p)| Row {
                    c,
                    probability: p.to_decimal_string(ctx.digits),
                })
                .collect();
            let format = cli.format.unwrap_or(Format::Csv);
            let cfg = config(cli, format, json!({"fixdist": {"k": k, "cmax": cmax}}));
            match format {
                Format::Json => emit_json(
                    cfg,
                    json!({
                        "probabilities": d.probabilities.iter().map(|p| ctx.hp(p)).collect::<Vec<_>>(),
                        "tail_bound": ctx.hp(&d.tail_bound),
                        "mass": ctx.hp(&d.total()),
                    }),
                )?,
                Format::Csv => emit_csv(&cfg, &rows)?,
                Format::Table => emit_table(
                    &cfg,
                    &rows
                        .iter()
                        .map(|r| format!("{:>6}  {}", r.c, r.probability))
                        .chain([format!(
                            "tail bound {}",
                            d.tail_bound.to_decimal_string(ctx.digits)
                        )])
                        .collect::<Vec<_>>(),
                )?,
            }
            Ok(Outcome::Ok)
        }
        Command::Simulate {
            n,
            trials,
            k,
            fraction,
        } => {
            let frac = HpReal::from_rational(fraction, 64).to_f64();
            let report = experiment_iterated_fixpoints(*n, *trials, k, frac, ctx.seed)?;
            let format = cli.format.unwrap_or(Format::Table);
            let cfg = config(
                cli,
                format,
                json!({"simulate": {"n": n, "trials": trials, "k": k, "fraction": fraction.to_string()}}),
            );
            match format {
                Format::Json => emit_json(cfg, serde_json::to_value(&report)?)?,
                Format::Csv => emit_csv(&cfg, &report.rows)?,
                Format::Table => {
                    let mut lines = vec![format!(
                        "{:>10}  {:>15}  {:>12}  {:>15}  {:>12}",
                        "k", "no fixed points", "one or more", "mean fixed pts", "std error"
                    )];
                    lines.extend(report.rows.iter().map(|r| {
                        format!(
                            "{:>10}  {:>15.6}  {:>12.6}  {:>15.4}  {:>12.4}",
                            r.k,
                            r.mean_miss_probability,
                            r.mean_found_probability,
                            r.mean_fixed_points,
                            r.fixed_points_standard_error
                        )
                    }));
                    emit_table(&cfg, &lines)?
                }
            }
            Ok(Outcome::Ok)
        }
        Command::Keeloq { op, key, block } => {
            let k = KeeloqKey(*key);
            let out = match op {
                KeeloqOp::Encrypt => keeloq_encrypt(*block, k),
                KeeloqOp::Decrypt => keeloq_decrypt(*block, k),
            };
            let format = cli.format.unwrap_or(Format::Table);
            let name = match op {
                KeeloqOp::Encrypt => "encrypt",
                KeeloqOp::Decrypt => "decrypt",
            };
            let cfg = config(
                cli,
                format,
                json!({"keeloq": {"op": name, "key": format!("{key:016x}"), "block": format!("{block:08x}")}}),
            );
            match format {
                Format::Json => emit_json(cfg, json!({"block": format!("{out:08x}")}))?,
                _ => emit_table(&cfg, &[format!("{out:08x}")])?,
            }
            Ok(Outcome::Ok)
        }
        Command::Attack(a) => attack(cli, &ctx, a),
        Command::Costs {
            runs,
            optimize,
            max_runs,
            theoretical,
        } => {
            let model = if *theoretical {
                KeyRecoveryModel::theoretical(ctx.bits)?
            } else {
                KeyRecoveryModel::empirical()
            };
            let format = cli.format.unwrap_or(Format::Json);
            let cfg = config(
                cli,
                format,
                json!({"costs": {"runs": runs, "optimize": optimize, "max_runs": max_runs, "theoretical": theoretical}}),
            );
            let result = if *optimize {
                let (n, cost) = key_recovery_optimize(&model, *max_runs, ctx.bits)?;
                json!({"model": model, "figure_of_merit": FIGURE_OF_MERIT, "optimal_runs": n, "cost": cost})
            } else {
                let n = runs.ok_or("costs needs --runs N or --optimize")?;
                json!({"model": model, "cost": key_recovery_cost(n, &model, ctx.bits)?})
            };
            match format {
                Format::Json => emit_json(cfg, result)?,
                _ => {
                    let cost = &result["cost"];
                    let lines: Vec<String> = cost
                        .as_object()
                        .map(|o| o.iter().map(|(k, v)| format!("{k:>32}  {v}")).collect())
                        .unwrap_or_default();
                    emit_table(&cfg, &lines)?
                }
            }
            Ok(Outcome::Ok)
        }
        Command::BardTable => {
            #[derive(Serialize)]
            struct Row {
                eta_percent: u32,
                success: String,
                success_percent: String,
            }
            let rows: Vec<Row> = bard_table(ctx.bits)
                .into_iter()
                .map(|(pct, v)| Row {
                    eta_percent: pct,
                    success_percent: format!("{:.2}", v.to_f64() * 100.0),
                    success: v.to_decimal_string(ctx.digits),
                })
                .collect();
            let format = cli.format.unwrap_or(Format::Csv);
            let cfg = config(cli, format, json!("bard-table"));
            match format {
                Format::Json => emit_json(cfg, serde_json::to_value(
                    rows.iter().map(|r| json!({"eta_percent": r.eta_percent, "success": {"value": r.success, "precision_bits": ctx.bits}})).collect::<Vec<_>>(),
                )?)?,
                Format::Csv => emit_csv(&cfg, &rows)?,
                Format::Table => emit_table(&cfg, &rows.iter().map(|r| format!("{:>4}%  {:>6}%", r.eta_percent, r.success_percent)).collect::<Vec<_>>())?,
            }
            Ok(Outcome::Ok)
        }
        Command::PaperCheck { only } => {
            let ids: Vec<u32> = if only.is_empty() {
                CRITERIA.iter().map(|c| c.0).collect()
            } else {
                only.clone()
            };
            let acfg = AcceptanceConfig {
                precision_bits: ctx.bits,
                seed: ctx.seed,
            };
            let format = cli.format.unwrap_or(Format::Table);
            let cfg = config(cli, format, json!({"paper-check": {"only": only}}));
            if format == Format::Table {
                let mut out = io::stdout().lock();
                writeln!(out, "# config: {}", serde_json::to_string(&cfg)?)?;
            }
            let mut results = Vec::new();
            for id in ids {
                let r = run_criterion(id, &acfg);
                if format == Format::Table {
                    let mut out = io::stdout().lock();
                    writeln!(out, "{r}")?;
                    out.flush()?;
                }
                results.push(r);
            }
            let failed = results.iter().filter(|r| !r.passed).count();
            match format {
                Format::Table => println!(
                    "{} of {} criteria passed",
                    results.len() - failed,
                    results.len()
                ),
                Format::Json => emit_json(cfg, serde_json::to_value(&results)?)?,
                Format::Csv => emit_csv(&cfg, &results)?,
            }
            Ok(if failed == 0 {
                Outcome::Ok
            } else {
                Outcome::Failed
            })
        }
    }
}

fn prob(cli: &Cli, ctx: &Ctx, cmd: &ProbCmd) -> AnyResult<Outcome> {
    let p = ctx.bits;
    let format = cli.format.unwrap_or(Format::Table);
    let (command, value) = match cmd {
        ProbCmd::NoCycles { lengths } => {
            let set: BTreeSet<u64> = lengths.iter().copied().collect();
            (
                json!({"prob-no-cycles": {"lengths": lengths}}),
                prob_no_cycles_in(&set, p),
            )
        }
        ProbCmd::FixedPoints { c } => {
            let f = class_egf_structured(&CycleLengthSet::finite([1]), Some(*c))?;
            (
                json!({"prob-fixed-points": {"c": c}}),
                limit_probability(&f, p)?,
            )
        }
        ProbCmd::Joint { c1, c2 } => (
            json!({"prob-joint": {"c1": c1, "c2": c2}}),
            joint_prob_c1_c2(*c1, *c2, p),
        ),
        ProbCmd::NoPowers { exponent } => (
            json!({"prob-no-powers": {"exponent": exponent}}),
            prob_no_powerlength_cycles(*exponent, p)?,
        ),
        ProbCmd::Convergence { lengths, order } => {
            let f = class_egf_structured(&CycleLengthSet::finite(lengths.iter().copied()), None)?;
            let report = convergence_report(&f, *order, p)?;
            let rows = convergence_rows(&report, ctx.digits);
            let cfg = config(
                cli,
                format,
                json!({"prob-convergence": {"lengths": lengths, "order": order}}),
            );
            match format {
                Format::Json => emit_json(
                    cfg,
                    json!({"limit": ctx.hp(&limit_probability(&f, p)?), "rows": rows}),
                )?,
                Format::Csv => emit_csv(&cfg, &rows)?,
                Format::Table => emit_table(
                    &cfg,
                    &rows
                        .iter()
                        .map(|r| format!("{:>5}  {:>10.3}  {}", r.n, r.log2_distance, r.exact))
                        .collect::<Vec<_>>(),
                )?,
            }
            return Ok(Outcome::Ok);
        }
    };
    let cfg = config(cli, format, command);
    match format {
        Format::Json => emit_json(cfg, ctx.hp(&value))?,
        _ => emit_table(&cfg, &[value.to_decimal_string(ctx.digits)])?,
    }
    Ok(Outcome::Ok)
}

#[derive(Serialize)]
struct AttackRow {
    trial: u64,
    key: Option<String>,
    recovered_key: Option<String>,
    succeeded: bool,
    candidates_examined: u64,
    fixed_points_found: u64,
    matching_property_hits: u64,
    filter_survivors: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_ms: Option<f64>,
}

fn attack(cli: &Cli, ctx: &Ctx, a: &AttackArgs) -> AnyResult<Outcome> {
    let params = MiniParams::scaled(a.width)?;
    let run = |cb: &Codebook| -> AnyResult<AttackReport> {
        Ok(match a.kind {
            AttackKind::Bard => bard_attack(cb, &params)?,
            AttackKind::Cbw => cbw_attack(cb, &params)?,
        })
    };
    let hex = |k: KeeloqKey| {
        format!(
            "{:0width$x}",
            k.0,
            width = (params.key_bits() as usize).div_ceil(4)
        )
    };
    let row = |trial: u64, key: Option<KeeloqKey>, r: AttackReport| AttackRow {
        trial,
        key: key.map(hex),
        recovered_key: r.recovered_key.map(hex),
        succeeded: r.succeeded,
        candidates_examined: r.candidates_examined,
        fixed_points_found: r.fixed_points_found,
        matching_property_hits: r.matching_property_hits,
        filter_survivors: r.filter_survivors,
        wall_time_ms: a.timing.then_some(r.wall_time_ms),
    };
    let mut rows = Vec::new();
    if let Some(path) = &a.codebook {
        let cb = Codebook::read_from(BufReader::new(File::open(path)?))?;
        if cb.width != a.width {
            return Err(format!(
                "codebook width {} differs from --width {}",
                cb.width, a.width
            )
            .into());
        }
        rows.push(row(0, None, run(&cb)?));
    } else {
        for t in 0..a.key_trials {
            let mut rng = trial_rng(ctx.seed, t);
            let key = KeeloqKey(rng.gen::<u64>() & params.key_mask());
            let cb = build_codebook(&params, key, a.eta, ctx.seed.wrapping_add(t))?;
            if t == 0 {
                if let Some(path) = &a.write_codebook {
                    let mut w = BufWriter::new(File::create(path)?);
                    cb.write_to(&mut w)?;
                    w.flush()?;
                }
            }
            rows.push(row(t, Some(key), run(&cb)?));
        }
    }
    let successes = rows.iter().filter(|r| r.succeeded).count();
    let trials = rows.len();
    let rate = successes as f64 / trials as f64;
    let format = cli.format.unwrap_or(Format::Json);
    let cfg = config(
        cli,
        format,
        json!({"attack": {"kind": a.kind, "width": a.width, "eta": a.eta, "key_trials": a.key_trials,
            "codebook": a.codebook, "nlf_taps": params.nlf_taps(), "linear_taps": params.linear_taps()}}),
    );
    match format {
        Format::Json => emit_json(
            cfg,
            json!({
                "trials": trials,
                "successes": successes,
                "success_rate": {"value": rate, "standard_error": (rate * (1.0 - rate) / trials as f64).sqrt()},
                "reports": rows,
            }),
        )?,
        Format::Csv => emit_csv(&cfg, &rows)?,
        Format::Table => emit_table(
            &cfg,
            &rows
                .iter()
                .map(|r| {
                    format!(
                        "{:>5}  {:<5}  candidates {:>6}  hits {:>6}",
                        r.trial, r.succeeded, r.candidates_examined, r.matching_property_hits
                    )
                })
                .chain([format!("success rate {rate:.4} over {trials} keys")])
                .collect::<Vec<_>>(),
        )?,
    }
    Ok(Outcome::Ok)
}
