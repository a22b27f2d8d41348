//! Pipeline driver: configuration, subcommands and file export.
//!
//! Subcommands compose through files alone: `basis` emits the bound
//! tables, `pair` certifies the selection and writes its manifest,
//! `kernel` synthesizes grids from the manifest, `verify` runs the full
//! property suite, `demo` generates a self-contained example end to end.

use carleman_core::config::RunConfig;
use carleman_core::error::Error;
use carleman_core::fileio;
use carleman_core::operator::{OperatorFamily, OperatorSpec};
use carleman_core::pairing::build_plan;
use carleman_core::synth;
use carleman_core::transform::{build_unitary, synthesize_kernel};
use carleman_core::verify::{
    check_linear_combination, check_mercer_closure, run_full_suite, VerificationReport,
};
use carleman_core::C64;
use clap::{Parser, Subcommand};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "carleman",
    about = "Build smoothing unitaries and arbitrarily smooth integral kernels for decaying operator families, then verify every asserted property",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (TOML); built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for emitted files.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads for parallel maps.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Override the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Emit the bound tables and atom samples for the configured window.
    Basis,
    /// Select the pairing for a family and write the certified manifest.
    Pair {
        /// Family manifest file.
        #[arg(long)]
        family: PathBuf,
    },
    /// Synthesize the kernel grid and truncation report for one member or
    /// a linear combination.
    Kernel {
        #[arg(long)]
        family: PathBuf,
        /// Pairing manifest from `pair`.
        #[arg(long)]
        manifest: PathBuf,
        /// Member label.
        #[arg(long, conflicts_with = "combine")]
        member: Option<String>,
        /// Combination spec `label=coeff,label=coeff,...` with Σ|coeff| ≤ 1.
        #[arg(long)]
        combine: Option<String>,
    },
    /// Run the verification suite; exit 0 only when every check passes.
    Verify {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, conflicts_with = "combine")]
        member: Option<String>,
        #[arg(long)]
        combine: Option<String>,
    },
    /// Generate a small family, then run basis, pair, kernel and verify.
    Demo,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::InsufficientDecay { .. } => 4,
        Error::InconsistentPlan(_) | Error::RankDeficientPlan(_) => 5,
        Error::ToleranceNotMet { .. }
        | Error::BoundViolated { .. }
        | Error::NormBoundExceeded { .. }
        | Error::NotOrthonormal(_)
        | Error::InequalityViolated { .. }
        | Error::SampleConstruction(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn load_config(cli_config: &Option<PathBuf>, seed: Option<u64>) -> Result<RunConfig, Error> {
    let mut config = match cli_config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = seed {
        config.run.seed = seed;
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    let config = load_config(&cli.config, cli.seed)?;
    std::fs::create_dir_all(&cli.out)?;
    match cli.command {
        Command::Basis => {
            cmd_basis(&config, &cli.out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Pair { family } => {
            cmd_pair(&config, &family, &cli.out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Kernel {
            family,
            manifest,
            member,
            combine,
        } => {
            cmd_kernel(&config, &family, &manifest, member.as_deref(), combine.as_deref(), &cli.out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify {
            family,
            manifest,
            member,
            combine,
        } => cmd_verify(
            &config,
            &family,
            &manifest,
            member.as_deref(),
            combine.as_deref(),
            &cli.out,
        ),
        Command::Demo => cmd_demo(&cli.out),
    }
}

fn cmd_basis(config: &RunConfig, out: &Path) -> Result<(), Error> {
    let mother = config.build_mother();
    let e = config.build_enumeration()?;
    // Certify the quadrature budget before emitting anything.
    for order in 0..=config.wavelet.m_max {
        mother.eval_with_error(0.37, order, config.wavelet.quad_tol)?;
    }
    let (d, a) = e.bound_tables(&mother, config.wavelet.m_max)?;
    let hash = config.hash_hex();
    let bounds = out.join("bounds.tsv");
    fileio::write_bounds(&bounds, &hash, &e, &d, &a)?;
    let grid = symmetric_grid(config.grid.half_width, config.grid.points);
    let atoms = out.join("atoms.tsv");
    fileio::write_atom_samples(&atoms, &hash, &e, &mother, 8, &grid)?;
    println!("wrote {}", bounds.display());
    println!("wrote {}", atoms.display());
    Ok(())
}

fn cmd_pair(config: &RunConfig, family_path: &Path, out: &Path) -> Result<(), Error> {
    let family = fileio::read_family(family_path)?;
    if family.dim() != config.space.dim {
        return Err(Error::Config(format!(
            "family dimension {} does not match configured {}",
            family.dim(),
            config.space.dim
        )));
    }
    let mother = config.build_mother();
    let e = config.build_enumeration()?;
    let plan = build_plan(
        &family,
        &e,
        &mother,
        config.pairing.pairs,
        config.space.dim - config.pairing.pairs,
        config.pairing.start_scale,
        config.pairing.dg_budget,
        config.pairing.h_budget_factor,
    )?;
    let manifest = out.join("pairing.txt");
    fileio::write_pairing(&manifest, &config.hash_hex(), &plan, &e)?;
    println!(
        "selected {} pairs, {} decaying atoms; budgets d(G+1) ≤ {}",
        plan.pair_count(),
        plan.h_count(),
        plan.budgets
            .dg_sums
            .iter()
            .cloned()
            .fold(0.0f64, f64::max)
    );
    println!("wrote {}", manifest.display());
    Ok(())
}

struct Pipeline {
    family: OperatorFamily,
    plan: carleman_core::pairing::PairingPlan,
    e: carleman_core::basis::BasisEnumeration,
    mother: carleman_core::wavelet::MotherWavelet,
}

fn load_pipeline(
    config: &RunConfig,
    family_path: &Path,
    manifest_path: &Path,
) -> Result<Pipeline, Error> {
    let family = fileio::read_family(family_path)?;
    let (plan, stamped) = fileio::read_pairing(manifest_path)?;
    if stamped != config.hash_hex() {
        return Err(Error::InconsistentPlan(format!(
            "manifest was written under config {stamped}, current is {}",
            config.hash_hex()
        )));
    }
    if plan.dim() != family.dim() || plan.dim() != config.space.dim {
        return Err(Error::InconsistentPlan(format!(
            "manifest dimension {} against family {} and config {}",
            plan.dim(),
            family.dim(),
            config.space.dim
        )));
    }
    plan.check_invariants()?;
    let mother = config.build_mother();
    let e = config.build_enumeration()?;
    Ok(Pipeline {
        family,
        plan,
        e,
        mother,
    })
}

/// Parse `label=coeff,...` and build the combination Σ z_α S_α.
fn parse_combination(
    family: &OperatorFamily,
    spec: &str,
) -> Result<(OperatorSpec, Vec<C64>), Error> {
    let mut z = vec![C64::new(0.0, 0.0); family.members().len()];
    for piece in spec.split(',') {
        let (label, value) = piece
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("bad combination piece {piece:?}")))?;
        let coeff: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad coefficient {value:?}")))?;
        let position = family
            .members()
            .iter()
            .position(|m| m.label() == label.trim())
            .ok_or_else(|| Error::Config(format!("no member labeled {label:?}")))?;
        z[position] = C64::new(coeff, 0.0);
    }
    let budget: f64 = z.iter().map(|c| c.norm()).sum();
    if budget > 1.0 + 1e-12 {
        return Err(Error::CoefficientBudgetExceeded(budget));
    }
    let dim = family.dim();
    let mut matrix = DMatrix::<C64>::zeros(dim, dim);
    for (coeff, member) in z.iter().zip(family.members()) {
        matrix += member.matrix() * *coeff;
    }
    Ok((OperatorSpec::from_matrix("combination", matrix), z))
}

fn resolve_operator(
    family: &OperatorFamily,
    member: Option<&str>,
    combine: Option<&str>,
) -> Result<(OperatorSpec, Option<Vec<C64>>), Error> {
    match (member, combine) {
        (_, Some(spec)) => {
            let (op, z) = parse_combination(family, spec)?;
            Ok((op, Some(z)))
        }
        (Some(label), None) => {
            let op = family
                .member(label)
                .ok_or_else(|| Error::Config(format!("no member labeled {label:?}")))?;
            Ok((op.clone(), None))
        }
        (None, None) => Ok((family.members()[0].clone(), None)),
    }
}

fn cmd_kernel(
    config: &RunConfig,
    family_path: &Path,
    manifest_path: &Path,
    member: Option<&str>,
    combine: Option<&str>,
    out: &Path,
) -> Result<(), Error> {
    let pipeline = load_pipeline(config, family_path, manifest_path)?;
    let (op, _) = resolve_operator(&pipeline.family, member, combine)?;
    let u = build_unitary(&pipeline.plan, &pipeline.e)?;
    let (kernel, _, report) = synthesize_kernel(
        &op,
        &u,
        &pipeline.plan,
        &pipeline.e,
        &pipeline.mother,
        config.kernel.rank_cap,
    )?;
    let hash = config.hash_hex();
    let grid = symmetric_grid(config.grid.half_width, config.grid.points);
    let label = op.label().replace(['/', ' '], "_");
    let grid_path = out.join(format!("kernel_{label}.tsv"));
    fileio::write_kernel_grid(
        &grid_path,
        &hash,
        op.label(),
        &kernel,
        &pipeline.mother,
        &grid,
        &config.grid.derivatives,
        &report,
    )?;
    let report_path = out.join(format!("truncation_{label}.tsv"));
    fileio::write_truncation(&report_path, &hash, &report)?;
    println!("wrote {}", grid_path.display());
    println!("wrote {}", report_path.display());
    Ok(())
}

fn cmd_verify(
    config: &RunConfig,
    family_path: &Path,
    manifest_path: &Path,
    member: Option<&str>,
    combine: Option<&str>,
    out: &Path,
) -> Result<ExitCode, Error> {
    let pipeline = load_pipeline(config, family_path, manifest_path)?;
    let cfg = config.check_config();
    let u = build_unitary(&pipeline.plan, &pipeline.e)?;
    let mut report = match combine {
        Some(spec) => {
            let (_, z) = parse_combination(&pipeline.family, spec)?;
            let mut report = VerificationReport::default();
            report.extend(check_linear_combination(
                &pipeline.family,
                &z,
                &u,
                &pipeline.plan,
                &pipeline.e,
                &pipeline.mother,
                config.kernel.rank_cap,
                &cfg,
            )?);
            report
        }
        None => {
            let label = member
                .map(str::to_string)
                .unwrap_or_else(|| pipeline.family.members()[0].label().to_string());
            let mut report = run_full_suite(
                &pipeline.family,
                Some(&label),
                &pipeline.plan,
                &pipeline.e,
                &pipeline.mother,
                config.kernel.rank_cap,
                &cfg,
            )?;
            let op = pipeline
                .family
                .member(&label)
                .ok_or_else(|| Error::Config(format!("no member labeled {label:?}")))?;
            report.extend(check_mercer_closure(
                op,
                &u,
                &pipeline.plan,
                &pipeline.e,
                &pipeline.mother,
                config.kernel.rank_cap,
                &cfg,
                config.checks.mercer_samples,
            )?);
            report
        }
    };
    report.records.sort_by(|a, b| a.name.cmp(&b.name));
    let path = out.join("verification.txt");
    fileio::write_verification(&path, &config.hash_hex(), &report)?;
    let passed = report.records.iter().filter(|r| r.pass).count();
    println!(
        "verification: {passed}/{} checks passed",
        report.records.len()
    );
    for record in report.records.iter().filter(|r| !r.pass) {
        println!(
            "FAIL {}: measured {:e} vs bound {:e}",
            record.name, record.measured, record.bound
        );
    }
    println!("wrote {}", path.display());
    Ok(if report.verdict() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

/// Configuration sized for the demo: a small section with a steeply
/// decaying family so the whole pipeline finishes in seconds.
fn demo_config() -> RunConfig {
    let mut config = RunConfig::default();
    config.space.dim = 20;
    config.window.j_min = -18;
    config.window.j_max = 2;
    config.window.k_min = -2;
    config.window.k_max = 2;
    config.pairing.pairs = 3;
    config.kernel.rank_cap = 8;
    config.checks.boxes = vec![6.0, 12.0, 24.0];
    config.checks.mercer_samples = 2;
    config.checks.section_samples = 8;
    config.checks.action_functions = 8;
    config.checks.annulus_step = 0.75;
    config.checks.annulus_margin = 4.0;
    config.grid.half_width = 6.0;
    config.grid.points = 41;
    config.grid.derivatives = vec![(1, 0)];
    config
}

fn cmd_demo(out: &Path) -> Result<ExitCode, Error> {
    let config = demo_config();
    std::fs::create_dir_all(out)?;
    let config_path = out.join("demo-config.toml");
    config.save(&config_path)?;
    println!("wrote {}", config_path.display());

    let mut rng = ChaCha8Rng::seed_from_u64(config.run.seed);
    let family = synth::decaying_family(&mut rng, config.space.dim, 4, 3, 16.0);
    let family_dir = out.join("family");
    let manifest = fileio::write_family(&family_dir, "family.txt", &family)?;
    println!("wrote {}", manifest.display());

    cmd_basis(&config, out)?;
    cmd_pair(&config, &manifest, out)?;
    let pairing = out.join("pairing.txt");
    cmd_kernel(&config, &manifest, &pairing, Some("alpha0"), None, out)?;
    cmd_verify(&config, &manifest, &pairing, Some("alpha0"), None, out)
}

fn symmetric_grid(half_width: f64, points: usize) -> Vec<f64> {
    if points <= 1 {
        return vec![0.0];
    }
    let step = 2.0 * half_width / (points - 1) as f64;
    (0..points).map(|q| -half_width + q as f64 * step).collect()
}
