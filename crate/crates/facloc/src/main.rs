//! `facloc`: evaluate mechanisms, compute exact optima, audit
//! strategyproofness, sweep random families, and generate instances.
//!
//! Exit status: 0 when all asserted properties held, 1 when an audit or
//! sweep found a violation, 2 for usage or input errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use facloc::audit::{audit_positions, audit_preferences, empirical_ratio};
use facloc::generators::{gen_random_one, gen_thm1, gen_thm2, gen_thm6_sequence, Thm2Variant};
use facloc::io::{
    audit_report_json, lottery_to_json, opt_report_json, parse_instance, parse_spec,
    ratio_report_json, render_instance, to_json_string, EvalReportJson, SolutionJson,
};
use facloc::mechanisms::{classify_general, classify_theta, theta_default};
use facloc::model::{parse_rational, Instance, Rational};
use facloc::solver::optimal_solution;
use facloc::sweep::{run_sweep, MechanismChoice, SweepConfig};

/// Environment variable limiting the sweep worker-thread count.
const THREADS_ENV: &str = "FACLOC_THREADS";

#[derive(Parser)]
#[command(
    name = "facloc",
    version,
    about = "Truthful one-of-k facility location: mechanisms, oracles, audits, sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MechArg {
    /// Randomized general-setting mechanism (k-approximation).
    General,
    /// Deterministic known-positions mechanism with parameter theta.
    Theta,
    /// Known-positions minisum mechanism.
    Minisum,
    /// Exhaustive optimum used as a (non-truthful) mechanism.
    Opt,
}

impl From<MechArg> for MechanismChoice {
    fn from(arg: MechArg) -> Self {
        match arg {
            MechArg::General => MechanismChoice::General,
            MechArg::Theta => MechanismChoice::Theta,
            MechArg::Minisum => MechanismChoice::Minisum,
            MechArg::Opt => MechanismChoice::Opt,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    Random,
    Thm1,
    Thm2,
    Thm6,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    I,
    J,
}

#[derive(Subcommand)]
enum Command {
    /// Run a mechanism on an instance and print its outcome and welfare.
    Eval {
        #[arg(long, value_enum)]
        mech: MechArg,
        /// Split parameter for --mech theta, e.g. "43/100" (default).
        #[arg(long)]
        theta: Option<String>,
        #[arg(long)]
        instance: PathBuf,
    },
    /// Print the exact optimal solution and the full welfare table.
    Opt {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Search for profitable unilateral misreports. Exits 1 if any exist.
    Audit {
        #[arg(long, value_enum)]
        mech: MechArg,
        #[arg(long)]
        theta: Option<String>,
        #[arg(long)]
        instance: PathBuf,
        /// Also sweep position misreports (general setting).
        #[arg(long)]
        positions: bool,
        /// Grid denominator of the position-deviation set.
        #[arg(long, default_value_t = 12)]
        denom: u64,
    },
    /// Audit and bound-check mechanisms over a seeded random family.
    /// Exits 1 if any asserted bound fails or any deviation is found.
    Sweep {
        /// Spec file; defaults to the built-in family (k in {2,3}, up to six
        /// agents, twelfths grid, nonempty approvals).
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 10_000)]
        count: u64,
        #[arg(long, value_enum, value_delimiter = ',',
              default_values_t = [MechArg::General, MechArg::Theta, MechArg::Minisum])]
        mechs: Vec<MechArg>,
        #[arg(long)]
        theta: Option<String>,
        /// Overrides the seed of the spec.
        #[arg(long)]
        seed: Option<u64>,
        /// Grid denominator of the position audits.
        #[arg(long, default_value_t = 12)]
        denom: u64,
        /// Skip deviation audits (bounds are still checked).
        #[arg(long)]
        no_audit: bool,
    },
    /// Generate instances: the seeded random family or one of the
    /// adversarial lower-bound families (thm1, thm2, thm6).
    Gen {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long)]
        k: Option<usize>,
        /// Exact rational, e.g. "1/100".
        #[arg(long)]
        eps: Option<String>,
        /// Variant of the thm2 family.
        #[arg(long, value_enum)]
        variant: Option<VariantArg>,
        /// Deviation step of the thm1/thm6 families.
        #[arg(long, default_value_t = 0)]
        step: usize,
        /// Spec file for --family random.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        count: u64,
        /// Output file (single instance; default stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Output directory (required when --count > 1).
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Debug)]
struct CliError(String);

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl<E: std::error::Error> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError(e.to_string())
    }
}

fn read_instance(path: &Path) -> Result<Instance, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError(format!("{}: {e}", path.display())))?;
    parse_instance(&text).map_err(|e| CliError(format!("{}: {e}", path.display())))
}

fn parse_theta_arg(theta: &Option<String>) -> Result<Rational, CliError> {
    match theta {
        Some(text) => Ok(parse_rational(text)?),
        None => Ok(theta_default()),
    }
}

fn configure_threads() {
    if let Ok(value) = std::env::var(THREADS_ENV) {
        if let Ok(threads) = value.parse::<usize>() {
            if threads > 0 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
        }
    }
}

fn cmd_eval(mech: MechArg, theta: &Option<String>, instance: &Path) -> Result<u8, CliError> {
    let inst = read_instance(instance)?;
    let theta = parse_theta_arg(theta)?;
    let choice: MechanismChoice = mech.into();
    if matches!(choice, MechanismChoice::Theta) {
        facloc::mechanisms::MechTheta::new(theta.clone())?;
    }
    let mechanism = choice.build(&theta);
    let lottery = mechanism.lottery(&inst);
    let case = match choice {
        MechanismChoice::Theta => classify_theta(&inst, &theta)?.tag().to_string(),
        _ => classify_general(&inst).tag().to_string(),
    };
    let atoms = lottery.atoms();
    let solution = if atoms.len() == 1 {
        Some(SolutionJson::from_solution(&atoms[0].0))
    } else {
        None
    };
    let report = EvalReportJson {
        instance: inst.digest(),
        mechanism: mechanism.name(),
        case,
        lottery: lottery_to_json(&lottery),
        solution,
        expected_welfare: facloc::io::RationalJson::from_rational(
            &inst.expected_social_welfare(&lottery),
        ),
    };
    print!("{}", to_json_string(&report));
    Ok(0)
}

fn cmd_opt(instance: &Path) -> Result<u8, CliError> {
    let inst = read_instance(instance)?;
    let opt = optimal_solution(&inst);
    print!("{}", to_json_string(&opt_report_json(&inst, &opt)));
    Ok(0)
}

fn cmd_audit(
    mech: MechArg,
    theta: &Option<String>,
    instance: &Path,
    positions: bool,
    denom: u64,
) -> Result<u8, CliError> {
    let inst = read_instance(instance)?;
    let theta = parse_theta_arg(theta)?;
    let choice: MechanismChoice = mech.into();
    if matches!(choice, MechanismChoice::Theta) {
        facloc::mechanisms::MechTheta::new(theta.clone())?;
    }
    let mechanism = choice.build(&theta);
    let prefs = audit_preferences(mechanism.as_ref(), &inst)?;
    let ratio = empirical_ratio(mechanism.as_ref(), &inst);
    let mut clean = prefs.clean();
    let positions_report = if positions {
        let report = audit_positions(mechanism.as_ref(), &inst, denom);
        clean &= report.clean();
        Some(audit_report_json(&report))
    } else {
        None
    };
    #[derive(serde::Serialize)]
    struct AuditOutput {
        preferences: facloc::io::AuditReportJson,
        #[serde(skip_serializing_if = "Option::is_none")]
        positions: Option<facloc::io::AuditReportJson>,
        ratio: facloc::io::RatioReportJson,
    }
    let output = AuditOutput {
        preferences: audit_report_json(&prefs),
        positions: positions_report,
        ratio: ratio_report_json(&ratio),
    };
    print!("{}", to_json_string(&output));
    Ok(if clean { 0 } else { 1 })
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    spec: &Option<PathBuf>,
    count: u64,
    mechs: &[MechArg],
    theta: &Option<String>,
    seed: Option<u64>,
    denom: u64,
    no_audit: bool,
) -> Result<u8, CliError> {
    configure_threads();
    let mut random_spec = match spec {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError(format!("{}: {e}", path.display())))?;
            parse_spec(&text)?
        }
        None => Default::default(),
    };
    if let Some(seed) = seed {
        random_spec.seed = seed;
    }
    let theta = parse_theta_arg(theta)?;
    facloc::mechanisms::MechTheta::new(theta.clone())?;
    let cfg = SweepConfig {
        spec: random_spec,
        count,
        mechanisms: mechs.iter().copied().map(Into::into).collect(),
        theta,
        position_denominator: denom,
        audit: !no_audit,
    };
    let report = run_sweep(&cfg)?;
    print!("{}", to_json_string(&report));
    Ok(if report.all_clean() { 0 } else { 1 })
}

#[allow(clippy::too_many_arguments)]
fn cmd_gen(
    family: FamilyArg,
    k: Option<usize>,
    eps: &Option<String>,
    variant: Option<VariantArg>,
    step: usize,
    spec: &Option<PathBuf>,
    seed: Option<u64>,
    count: u64,
    out: &Option<PathBuf>,
    out_dir: &Option<PathBuf>,
) -> Result<u8, CliError> {
    let parse_eps = || -> Result<Rational, CliError> {
        let text = eps
            .as_deref()
            .ok_or_else(|| CliError("--eps is required for this family".to_string()))?;
        Ok(parse_rational(text)?)
    };
    let instances: Vec<Instance> = match family {
        FamilyArg::Random => {
            let mut random_spec = match spec {
                Some(path) => {
                    let text = std::fs::read_to_string(path)
                        .map_err(|e| CliError(format!("{}: {e}", path.display())))?;
                    parse_spec(&text)?
                }
                None => Default::default(),
            };
            if let Some(seed) = seed {
                random_spec.seed = seed;
            }
            (0..count)
                .map(|i| gen_random_one(&random_spec, i))
                .collect::<Result<_, _>>()?
        }
        FamilyArg::Thm1 => {
            vec![gen_thm1(k.unwrap_or(2), &parse_eps()?, step)?]
        }
        FamilyArg::Thm2 => {
            let variant = match variant.unwrap_or(VariantArg::I) {
                VariantArg::I => Thm2Variant::I,
                VariantArg::J => Thm2Variant::J,
            };
            vec![gen_thm2(k.unwrap_or(2), &parse_eps()?, variant)?]
        }
        FamilyArg::Thm6 => {
            vec![gen_thm6_sequence(k.unwrap_or(2), &parse_eps()?, step)?]
        }
    };
    if instances.len() > 1 || (out_dir.is_some() && out.is_none()) {
        let dir = out_dir
            .as_deref()
            .ok_or_else(|| CliError("--out-dir is required when --count > 1".to_string()))?;
        std::fs::create_dir_all(dir).map_err(|e| CliError(format!("{}: {e}", dir.display())))?;
        for (i, inst) in instances.iter().enumerate() {
            let path = dir.join(format!("instance_{i:05}.json"));
            std::fs::write(&path, render_instance(inst))
                .map_err(|e| CliError(format!("{}: {e}", path.display())))?;
            println!("{}", path.display());
        }
    } else {
        let text = render_instance(&instances[0]);
        match out {
            Some(path) => {
                std::fs::write(path, text)
                    .map_err(|e| CliError(format!("{}: {e}", path.display())))?;
                println!("{}", path.display());
            }
            None => print!("{text}"),
        }
    }
    Ok(0)
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match &cli.command {
        Command::Eval {
            mech,
            theta,
            instance,
        } => cmd_eval(*mech, theta, instance),
        Command::Opt { instance } => cmd_opt(instance),
        Command::Audit {
            mech,
            theta,
            instance,
            positions,
            denom,
        } => cmd_audit(*mech, theta, instance, *positions, *denom),
        Command::Sweep {
            spec,
            count,
            mechs,
            theta,
            seed,
            denom,
            no_audit,
        } => cmd_sweep(spec, *count, mechs, theta, *seed, *denom, *no_audit),
        Command::Gen {
            family,
            k,
            eps,
            variant,
            step,
            spec,
            seed,
            count,
            out,
            out_dir,
        } => cmd_gen(
            *family, *k, eps, *variant, *step, spec, *seed, *count, out, out_dir,
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}
