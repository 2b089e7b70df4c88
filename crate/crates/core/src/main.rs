//! Command-line driver: potential generation, the full invariant pipeline,
//! the quadratic closed-form checks, and the inequality audits.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use landau_invariant::blockop;
use landau_invariant::error::Error;
use landau_invariant::invariant;
use landau_invariant::landau::{self, Truncation};
use landau_invariant::potential::{
    self, anderson_mixture, AndersonSpec, GaussianMixture,
};
use landau_invariant::quadratic;

#[derive(Parser)]
#[command(name = "landau-invariant", version, about = "Constant of motion for a charged particle in a magnetic field with a Gaussian-mixture potential")]
struct Cli {
    /// Cap worker-thread parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Omit the timestamp header line from CSV outputs.
    #[arg(long, global = true)]
    no_timestamp: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a Gaussian-mixture potential file.
    GenPotential(GenPotentialArgs),
    /// Run the full pipeline: assemble, iterate, verify, evolve.
    Run(RunArgs),
    /// Closed-form checks for linear and quadratic potentials.
    Quadratic(QuadraticArgs),
    /// Empirical audits of the decay and convolution inequalities.
    Audit(AuditArgs),
}

#[derive(Args)]
struct GenPotentialArgs {
    /// Random mixture on the integer grid [-w, w]².
    #[arg(long, value_name = "W")]
    anderson_width: Option<u32>,
    /// Uniform weight range (used with --anderson-width).
    #[arg(long, num_args = 2, value_names = ["LOW", "HIGH"], allow_negative_numbers = true)]
    amp: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Add a single atom: y1 y2 weight. Repeatable.
    #[arg(long, num_args = 3, value_names = ["Y1", "Y2", "W"], action = clap::ArgAction::Append, allow_negative_numbers = true)]
    single_atom: Vec<f64>,
    /// Output mixture JSON path.
    #[arg(long, default_value = "mixture.json")]
    out: PathBuf,
    /// Also write a potential raster CSV here.
    #[arg(long)]
    raster: Option<PathBuf>,
    #[arg(long, default_value_t = 12.0)]
    raster_extent: f64,
    #[arg(long, default_value_t = 101)]
    raster_samples: usize,
}

#[derive(Args)]
struct RunArgs {
    /// Run configuration JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    mixture: Option<PathBuf>,
    #[arg(long)]
    coupling_scale: Option<f64>,
    #[arg(long)]
    iterate_tol: Option<f64>,
    #[arg(long)]
    verify_tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_landau: Option<usize>,
    #[arg(long)]
    n_center: Option<usize>,
    #[arg(long)]
    interior_margin: Option<usize>,
}

#[derive(Args)]
struct QuadraticArgs {
    /// Linear potential check at field (E1, E2).
    #[arg(long, num_args = 2, value_names = ["E1", "E2"], allow_negative_numbers = true)]
    linear: Option<Vec<f64>>,
    /// Dot/antidot check: eps and sign (+1 or -1).
    #[arg(long, num_args = 2, value_names = ["EPS", "SIGN"], allow_negative_numbers = true)]
    dot: Option<Vec<f64>>,
    /// 4×4 matrix eigenvalues for V'' = [[a, b], [c, d]].
    #[arg(long, num_args = 4, value_names = ["A", "B", "C", "D"], allow_negative_numbers = true)]
    hmatrix: Option<Vec<f64>>,
    #[arg(long, default_value_t = 32)]
    n_landau: usize,
    #[arg(long, default_value_t = 32)]
    n_center: usize,
    /// Interior margin; generous by default so truncation leakage of the
    /// conjugating unitaries stays out of the asserted window.
    #[arg(long, default_value_t = 12)]
    interior_margin: usize,
    /// Report JSON path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long, default_value_t = 200)]
    n_max: usize,
    #[arg(long, default_value = "audit.json")]
    out: PathBuf,
}

/// One canonical, diff-able reproduction artifact per run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
struct RunConfig {
    truncation: Truncation,
    potential: PotentialSource,
    coupling_scale: f64,
    gamma: f64,
    iterate_tol: f64,
    verify_tol: f64,
    max_steps: usize,
    evolution: EvolutionConfig,
    output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            truncation: Truncation { n_landau: 12, n_center: 24, interior_margin: 3 },
            potential: PotentialSource::Anderson(AndersonSpec {
                grid_half_width: 10,
                amplitude_low: -0.02,
                amplitude_high: 0.02,
                seed: 7,
            }),
            coupling_scale: 1.0,
            gamma: 1.0,
            iterate_tol: 1e-12,
            verify_tol: 1e-8,
            max_steps: 30,
            evolution: EvolutionConfig::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum PotentialSource {
    MixtureFile(PathBuf),
    Anderson(AndersonSpec),
    Mixture(GaussianMixture),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
struct EvolutionConfig {
    t_max: f64,
    steps: usize,
    initial_state: InitialState,
    drift_tol: f64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            t_max: 100.0,
            steps: 50,
            initial_state: InitialState::Superposition { levels: vec![1, 2, 3], k: 3 },
            drift_tol: 1e-7,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum InitialState {
    Landau { n: usize, k: usize },
    Superposition { levels: Vec<usize>, k: usize },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let result = match &cli.command {
        Command::GenPotential(args) => cmd_gen_potential(args, cli.no_timestamp),
        Command::Run(args) => cmd_run(args, cli.no_timestamp),
        Command::Quadratic(args) => cmd_quadratic(args),
        Command::Audit(args) => cmd_audit(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::GapViolation { .. } => ExitCode::from(3),
                Error::OmegaImaginary(_) => ExitCode::from(4),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn timestamp_header(no_timestamp: bool) -> String {
    if no_timestamp {
        String::new()
    } else {
        let secs = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        format!("# generated at unix time {secs}\n")
    }
}

fn write_text(path: &Path, content: &str) -> Result<(), Error> {
    std::fs::write(path, content)
        .map_err(|e| Error::Domain(format!("cannot write {}: {e}", path.display())))
}

fn cmd_gen_potential(args: &GenPotentialArgs, no_timestamp: bool) -> Result<ExitCode, Error> {
    let mut mix = GaussianMixture::default();
    if let Some(w) = args.anderson_width {
        let amp = args.amp.clone().unwrap_or_else(|| vec![-0.02, 0.02]);
        if amp[0] > amp[1] {
            return Err(Error::Domain("--amp LOW must not exceed HIGH".into()));
        }
        let spec = AndersonSpec {
            grid_half_width: w,
            amplitude_low: amp[0],
            amplitude_high: amp[1],
            seed: args.seed,
        };
        mix = mix.merged(&anderson_mixture(&spec));
    }
    for atom in args.single_atom.chunks(3) {
        mix = mix.merged(&GaussianMixture::single(atom[2], [atom[0], atom[1]]));
    }
    if mix.atoms.is_empty() {
        return Err(Error::Domain(
            "nothing to generate: pass --anderson-width and/or --single-atom".into(),
        ));
    }
    write_text(&args.out, &format!("{}\n", serde_json::to_string_pretty(&mix).unwrap()))?;
    println!(
        "wrote {} atoms to {} (total variation {})",
        mix.atoms.len(),
        args.out.display(),
        mix.total_variation()
    );
    if let Some(raster) = &args.raster {
        let csv = potential::raster_csv(&mix, args.raster_extent, args.raster_samples);
        write_text(raster, &format!("{}{}", timestamp_header(no_timestamp), csv))?;
        println!("wrote raster to {}", raster.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn load_config(args: &RunArgs) -> Result<RunConfig, Error> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Domain(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| Error::Domain(format!("bad config {}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(dir) = &args.out_dir {
        config.output_dir = dir.clone();
    }
    if let Some(path) = &args.mixture {
        config.potential = PotentialSource::MixtureFile(path.clone());
    }
    if let Some(s) = args.coupling_scale {
        config.coupling_scale = s;
    }
    if let Some(t) = args.iterate_tol {
        config.iterate_tol = t;
    }
    if let Some(t) = args.verify_tol {
        config.verify_tol = t;
    }
    if let Some(n) = args.n_landau {
        config.truncation.n_landau = n;
    }
    if let Some(n) = args.n_center {
        config.truncation.n_center = n;
    }
    if let Some(m) = args.interior_margin {
        config.truncation.interior_margin = m;
    }
    if let (Some(seed), PotentialSource::Anderson(spec)) = (args.seed, &mut config.potential) {
        spec.seed = seed;
    }
    config.truncation.validate()?;
    if !(config.iterate_tol > 0.0 && config.verify_tol > 0.0 && config.gamma > 0.0) {
        return Err(Error::Domain("tolerances and gamma must be positive".into()));
    }
    Ok(config)
}

fn resolve_mixture(source: &PotentialSource) -> Result<GaussianMixture, Error> {
    match source {
        PotentialSource::Mixture(m) => Ok(m.clone()),
        PotentialSource::Anderson(spec) => Ok(anderson_mixture(spec)),
        PotentialSource::MixtureFile(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Domain(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| Error::Domain(format!("bad mixture {}: {e}", path.display())))
        }
    }
}

fn cmd_run(args: &RunArgs, no_timestamp: bool) -> Result<ExitCode, Error> {
    let config = load_config(args)?;
    std::fs::create_dir_all(&config.output_dir)
        .map_err(|e| Error::Domain(format!("cannot create {}: {e}", config.output_dir.display())))?;

    let mix = resolve_mixture(&config.potential)?.scaled(config.coupling_scale);
    let assembly = potential::assemble(&mix, &config.truncation)?;
    let v = assembly.op;
    let v1 = v.norm_l(1);
    println!("potential: {} atoms, ‖V‖₁ = {v1:.6e}", mix.atoms.len());
    if v1 > config.gamma / 8.0 {
        eprintln!(
            "WARN: ‖V‖₁ = {v1:.3e} exceeds γ/8 = {:.3e}; outside the convergence hypothesis",
            config.gamma / 8.0
        );
    }

    let profile = potential::decay_profile(&v);
    write_text(
        &config.output_dir.join("decay_profile.csv"),
        &format!("{}{}", timestamp_header(no_timestamp), profile.to_csv()),
    )?;

    let h = invariant::build_hamiltonian(&v, &config.truncation)?;
    let inv = invariant::construct_invariant(
        &h,
        &config.truncation,
        config.gamma,
        config.iterate_tol,
        config.max_steps,
    )?;
    write_text(
        &config.output_dir.join("trace.csv"),
        &format!("{}{}", timestamp_header(no_timestamp), inv.trace.to_csv()),
    )?;

    let psi0 = match &config.evolution.initial_state {
        InitialState::Landau { n, k } => invariant::landau_state(&config.truncation, *n, *k)?,
        InitialState::Superposition { levels, k } => {
            invariant::superposition_state(&config.truncation, levels, *k)?
        }
    };
    let times = invariant::sample_times(config.evolution.t_max, config.evolution.steps);
    let table = invariant::evolve_expectations(&h, &inv.j, &config.truncation, &psi0, &times)?;
    write_text(
        &config.output_dir.join("evolution.csv"),
        &format!("{}{}", timestamp_header(no_timestamp), table.to_csv()),
    )?;

    let mut report = inv.report;
    report.evolution_drift_j = Some(table.drift_j);
    report.evolution_drift_h_la = Some(table.drift_h_la);
    write_text(
        &config.output_dir.join("invariant.json"),
        &format!("{}\n", serde_json::to_string_pretty(&report).unwrap()),
    )?;

    println!(
        "iteration: {} steps, final ‖𝒪H‖₁ = {:.3e}",
        report.iteration_steps, report.final_off_norm_1
    );
    println!(
        "residuals: [H,J] = {:.3e}, J-spectrum = {:.3e}, H-spectrum = {:.3e}, ⟨J⟩ drift = {:.3e}",
        report.commutator_residual,
        report.j_spectrum_error,
        report.spectrum_error,
        table.drift_j
    );

    let checks: [(&str, bool); 4] = [
        (
            "commutator_residual <= verify_tol",
            report.commutator_residual <= config.verify_tol,
        ),
        ("j_spectrum_error <= 1e-10", report.j_spectrum_error <= 1e-10),
        ("spectrum_error <= 1e-9", report.spectrum_error <= 1e-9),
        (
            "evolution_drift_j <= drift_tol",
            table.drift_j <= config.evolution.drift_tol,
        ),
    ];
    for (name, ok) in checks {
        if !ok {
            eprintln!("FAILED assertion: {name}");
            return Ok(ExitCode::from(1));
        }
    }
    println!("all run assertions passed");
    Ok(ExitCode::SUCCESS)
}

fn cmd_quadratic(args: &QuadraticArgs) -> Result<ExitCode, Error> {
    let trunc = Truncation::new(args.n_landau, args.n_center, args.interior_margin)?;
    let mut report = serde_json::Map::new();
    let mut failed = false;

    if let Some(e) = &args.linear {
        let r = quadratic::check_linear_case([e[0], e[1]], &trunc)?;
        println!(
            "linear E = ({}, {}): id1 {:.3e}, id2 {:.3e}, invariant {:.3e}",
            e[0], e[1], r.residual_identity1, r.residual_identity2, r.residual_invariant
        );
        failed |= r.residual_identity1 > 1e-6
            || r.residual_identity2 > 1e-6
            || r.residual_invariant > 1e-6;
        report.insert("linear".into(), serde_json::to_value(&r).unwrap());
    }
    if let Some(d) = &args.dot {
        let sign = if d[1] >= 0.0 { 1 } else { -1 };
        let r = quadratic::check_dot_case(d[0], sign, &trunc)?;
        println!(
            "dot eps = {}, sign = {sign:+}: Ω = {:.10}, id1 {:.3e}, invariant {:.3e}",
            d[0], r.omega, r.residual_identity1, r.residual_invariant
        );
        failed |= r.residual_identity1 > 1e-6 || r.residual_invariant > 1e-6;
        report.insert("dot".into(), serde_json::to_value(&r).unwrap());
    }
    if let Some(v) = &args.hmatrix {
        let r = quadratic::hamiltonian_matrix_eigen([[v[0], v[1]], [v[2], v[3]]]);
        println!("ℍ eigenvalues (re, im): {:?}", r.eigenvalues);
        println!(
            "stated formula values: {:?} (mismatch {:.3e}, recorded only)",
            r.formula_eigenvalues, r.formula_mismatch
        );
        report.insert("hmatrix".into(), serde_json::to_value(&r).unwrap());
    }
    if report.is_empty() {
        return Err(Error::Domain(
            "pass at least one of --linear, --dot, --hmatrix".into(),
        ));
    }
    if let Some(out) = &args.out {
        write_text(
            out,
            &format!(
                "{}\n",
                serde_json::to_string_pretty(&serde_json::Value::Object(report)).unwrap()
            ),
        )?;
    }
    Ok(if failed {
        eprintln!("FAILED: residual above tolerance");
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn cmd_audit(args: &AuditArgs) -> Result<ExitCode, Error> {
    let bounds = landau::audit_bounds(args.n_max);
    let product = blockop::product_norm_audit(128, 9);
    println!(
        "decay constants at n_max = {}: c6 = {:.6}, c7 = {:.6}, c8 = {:.6}",
        bounds.n_max, bounds.c6, bounds.c7, bounds.c8
    );
    println!(
        "product-norm inequality: worst ratio {:.6} over {} random instances (must be ≤ 1)",
        product.worst_ratio, product.instances
    );
    let stable = bounds.c6 <= bounds.c6_at_100 + 1e-12
        && bounds.c7 <= bounds.c7_at_100 + 1e-12
        && bounds.c8 <= bounds.c8_at_100 + 1e-12;
    let report = serde_json::json!({
        "bounds": bounds,
        "bounds_stable_past_100": stable,
        "product_norm": { "worst_ratio": product.worst_ratio, "instances": product.instances },
    });
    write_text(&args.out, &format!("{}\n", serde_json::to_string_pretty(&report).unwrap()))?;
    if !stable || product.worst_ratio > 1.0 {
        eprintln!("FAILED: audit bound violated");
        return Ok(ExitCode::from(1));
    }
    println!("audit passed; report at {}", args.out.display());
    Ok(ExitCode::SUCCESS)
}
