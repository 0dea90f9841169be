//! Command-line front end.
//!
//! Every subcommand writes `#`-prefixed manifest lines (command, version,
//! constants mode, resolved parameters) followed by either a CSV table or a
//! `key = value` report. Output goes to standard output or `--out`;
//! warnings and errors go to the error stream. Exit status is 0 on success,
//! 1 on a usage error and 2 on a domain error, including an infeasible
//! factoring request.

use std::f64::consts::PI;
use std::ffi::OsString;
use std::fmt::Display;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::bounds::{
    self, BoundMode, ConstantsMode, Feasibility, Prefactors, TAU_E_HEATING, TAU_E_LASER_PHASE,
};
use crate::chain;
use crate::decoherence;
use crate::pulse;
use crate::species::{
    builtin_registry, load_registry, IonSpecies, SpeciesRegistry, TrapConfig, CODATA_2018,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DOMAIN: i32 = 2;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(
    name = "iontrap",
    version,
    about = "Decoherence-limited feasibility estimates for trapped-ion quantum computers"
)]
struct Cli {
    /// Prefactor set: rounded reference values or first-principles ones.
    #[arg(long, global = true, value_enum, default_value_t = ConstantsArg::Printed)]
    constants: ConstantsArg,
    /// TOML file adding or overriding species.
    #[arg(long, global = true, value_name = "PATH")]
    species_file: Option<PathBuf>,
    /// Write output here instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ConstantsArg {
    Printed,
    Derived,
}

impl From<ConstantsArg> for ConstantsMode {
    fn from(arg: ConstantsArg) -> Self {
        match arg {
            ConstantsArg::Printed => ConstantsMode::Printed,
            ConstantsArg::Derived => ConstantsMode::Derived,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List species or show one.
    Species {
        #[command(subcommand)]
        action: SpeciesAction,
    },
    /// Equilibrium positions of a chain, or a power-law fit of its minimum spacing.
    Chain(ChainArgs),
    /// Axial frequency, U-pulse duration, Lamb-Dicke parameter and validity ratio.
    Pulse(PulseArgs),
    /// Pulse budgets against ion count.
    Bound(BoundArgs),
    /// Largest number of bits that can be factored.
    FactorLimit(FactorLimitArgs),
    /// U-pulse time to factor a number of given size.
    TotalTime(TotalTimeArgs),
    /// Bound curves, factorization curve and their intersections.
    Fig1(Fig1Args),
    /// Combined-mode bit limit against experimental coherence time.
    Fig2(Fig2Args),
    /// Survival probability during a wait, closed form and Monte Carlo.
    SimulateDecay(DecayArgs),
}

#[derive(Debug, Subcommand)]
enum SpeciesAction {
    List,
    Show {
        #[arg(long)]
        species: String,
    },
}

#[derive(Debug, Args)]
struct SpeciesArgs {
    #[arg(long)]
    species: String,
    /// Override the transition wavelength.
    #[arg(long)]
    lambda_nm: Option<f64>,
    /// Override the excited-state lifetime.
    #[arg(long)]
    tau0_s: Option<f64>,
}

#[derive(Debug, Args)]
struct TrapArgs {
    #[arg(long, default_value_t = 1.0)]
    f_number: f64,
    /// Safety factor y >= 1.
    #[arg(long, default_value_t = 1.0)]
    safety: f64,
    /// Angle between laser and trap axis.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    theta_rad: f64,
}

#[derive(Debug, Args)]
struct ChainArgs {
    #[arg(long, required_unless_present = "fit", conflicts_with = "fit")]
    ions: Option<usize>,
    /// Fit `c / L^p` to solved minimum spacings over `--l-min..=--l-max`.
    #[arg(long)]
    fit: bool,
    #[arg(long, default_value_t = 2)]
    l_min: usize,
    #[arg(long, default_value_t = 50)]
    l_max: usize,
    /// Species used to convert positions to metres (needs `--nu-hz`).
    #[arg(long, requires = "nu_hz")]
    species: Option<String>,
    /// Axial trap frequency.
    #[arg(long, requires = "species")]
    nu_hz: Option<f64>,
}

#[derive(Debug, Args)]
struct PulseArgs {
    #[command(flatten)]
    species: SpeciesArgs,
    #[command(flatten)]
    trap: TrapArgs,
    #[arg(long)]
    ions: usize,
    /// Sweep from `--ions` up to this count.
    #[arg(long)]
    ions_max: Option<usize>,
}

#[derive(Debug, Args)]
struct BoundArgs {
    #[command(flatten)]
    species: SpeciesArgs,
    #[command(flatten)]
    trap: TrapArgs,
    #[arg(long, default_value_t = 2)]
    ions_min: u64,
    #[arg(long, default_value_t = 100)]
    ions_max: u64,
    /// Also tabulate the experimental budget for this coherence time.
    #[arg(long)]
    tau_e_s: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Intrinsic,
    Experimental,
    Combined,
}

impl From<ModeArg> for BoundMode {
    fn from(arg: ModeArg) -> Self {
        match arg {
            ModeArg::Intrinsic => BoundMode::Intrinsic,
            ModeArg::Experimental => BoundMode::Experimental,
            ModeArg::Combined => BoundMode::Combined,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TauPreset {
    /// 0.17 s, from a heating rate of 6 phonons/s.
    Heating,
    /// 1 ms laser phase coherence.
    LaserPhase,
}

#[derive(Debug, Args)]
struct FactorLimitArgs {
    #[command(flatten)]
    species: SpeciesArgs,
    #[command(flatten)]
    trap: TrapArgs,
    #[arg(long, value_enum, default_value_t = ModeArg::Intrinsic)]
    mode: ModeArg,
    #[arg(long, conflicts_with = "tau_e_preset")]
    tau_e_s: Option<f64>,
    #[arg(long, value_enum)]
    tau_e_preset: Option<TauPreset>,
}

#[derive(Debug, Args)]
struct TotalTimeArgs {
    #[command(flatten)]
    species: SpeciesArgs,
    #[command(flatten)]
    trap: TrapArgs,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=bounds::MAX_BITS))]
    bits: u64,
}

#[derive(Debug, Args)]
struct Fig1Args {
    /// Comma-separated species names.
    #[arg(long, value_delimiter = ',', default_value = "Hg II,Ca II,Ba II")]
    species: Vec<String>,
    #[command(flatten)]
    trap: TrapArgs,
    /// Factorization curve runs over l = 1..=l-max.
    #[arg(long, default_value_t = 15, value_parser = clap::value_parser!(u64).range(1..=bounds::MAX_BITS))]
    l_max: u64,
    #[arg(long, default_value_t = 2)]
    ions_min: u64,
    /// Defaults to the larger of 100 and 5·l-max + 2.
    #[arg(long)]
    ions_max: Option<u64>,
}

#[derive(Debug, Args)]
struct Fig2Args {
    #[arg(long, value_delimiter = ',', default_value = "Hg II,Ca II,Ba II")]
    species: Vec<String>,
    #[command(flatten)]
    trap: TrapArgs,
    #[arg(long, default_value_t = 1e-6)]
    tau_e_min_s: f64,
    #[arg(long, default_value_t = 1e3)]
    tau_e_max_s: f64,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    points: u64,
}

#[derive(Debug, Args)]
struct DecayArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    ions: u64,
    /// Wait time in units of the excited-state lifetime.
    #[arg(long = "T-over-tau0")]
    t_over_tau0: f64,
    /// Monte Carlo trajectories.
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    trajectories: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Domain(String),
    #[error("cannot write output: {0}")]
    Io(#[from] io::Error),
}

fn domain(err: impl Display) -> CliError {
    CliError::Domain(err.to_string())
}

/// Resolved parameters and provenance of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub command: String,
    pub constants: ConstantsMode,
    pub version: String,
    pub params: Vec<(String, String)>,
}

impl RunManifest {
    fn new(command: &str, constants: ConstantsMode) -> Self {
        Self {
            command: command.to_string(),
            constants,
            version: VERSION.to_string(),
            params: Vec::new(),
        }
    }

    fn param(&mut self, key: &str, value: impl Display) -> &mut Self {
        self.params.push((key.to_string(), value.to_string()));
        self
    }

    fn trap(&mut self, cfg: &TrapConfig) -> &mut Self {
        self.param("f_number", num(cfg.f_number))
            .param("safety", num(cfg.safety))
            .param("theta_rad", num(cfg.theta))
    }

    fn species(&mut self, sp: &IonSpecies) -> &mut Self {
        self.param(
            "species",
            format!(
                "{} (Z={}, A={}, lambda_nm={}, tau0_s={})",
                sp.name,
                sp.z,
                num(sp.mass_number),
                num(sp.lambda_nm),
                num(sp.tau0)
            ),
        )
    }

    pub fn render(&self) -> String {
        let mut out = format!(
            "# command: {}\n# version: {}\n# constants: {}\n",
            self.command, self.version, self.constants
        );
        for (key, value) in &self.params {
            out.push_str(&format!("# {key}: {value}\n"));
        }
        out
    }
}

/// Shortest representation that parses back to the same `f64`.
fn num(x: f64) -> String {
    format!("{x:?}")
}

struct Context {
    registry: SpeciesRegistry,
    constants: ConstantsMode,
    prefactors: Prefactors,
}

impl Context {
    fn species(&self, name: &str) -> Result<IonSpecies, CliError> {
        self.registry.lookup(name).cloned().map_err(domain)
    }

    fn species_with(&self, args: &SpeciesArgs) -> Result<IonSpecies, CliError> {
        let mut sp = self.species(&args.species)?;
        if let Some(l) = args.lambda_nm {
            sp.lambda_nm = l;
        }
        if let Some(t) = args.tau0_s {
            sp.tau0 = t;
        }
        sp.validate().map_err(domain)?;
        Ok(sp)
    }

    fn species_list(&self, names: &[String]) -> Result<Vec<IonSpecies>, CliError> {
        names.iter().map(|n| self.species(n.trim())).collect()
    }
}

fn trap_config(args: &TrapArgs, err: &mut dyn Write) -> Result<TrapConfig, CliError> {
    let cfg = TrapConfig::new(args.f_number, args.safety, args.theta_rad).map_err(domain)?;
    if cfg.is_optimistic_f_number() {
        writeln!(
            err,
            "warning: f-number {} is optimistic for diffraction-limited addressing",
            num(cfg.f_number)
        )?;
    }
    Ok(cfg)
}

/// Output of one subcommand before it is written.
enum Body {
    Table {
        header: Vec<&'static str>,
        rows: Vec<Vec<String>>,
    },
    Report(Vec<(&'static str, String)>),
}

struct Output {
    manifest: RunManifest,
    body: Body,
    /// Set when the result itself is a domain failure (still written).
    failure: Option<String>,
}

impl Output {
    fn table(manifest: RunManifest, header: Vec<&'static str>, rows: Vec<Vec<String>>) -> Self {
        Self {
            manifest,
            body: Body::Table { header, rows },
            failure: None,
        }
    }

    fn report(manifest: RunManifest, lines: Vec<(&'static str, String)>) -> Self {
        Self {
            manifest,
            body: Body::Report(lines),
            failure: None,
        }
    }

    fn render(&self) -> Result<Vec<u8>, CliError> {
        let mut buf = self.manifest.render().into_bytes();
        match &self.body {
            Body::Table { header, rows } => {
                let mut w = csv::WriterBuilder::new()
                    .terminator(csv::Terminator::Any(b'\n'))
                    .from_writer(&mut buf);
                w.write_record(header).map_err(io::Error::from)?;
                for row in rows {
                    w.write_record(row).map_err(io::Error::from)?;
                }
                w.flush()?;
            }
            Body::Report(lines) => {
                for (key, value) in lines {
                    buf.extend_from_slice(format!("{key} = {value}\n").as_bytes());
                }
            }
        }
        Ok(buf)
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(out, "{text}");
                EXIT_OK
            };
        }
    };
    match execute(cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                CliError::Usage(_) => EXIT_USAGE,
                CliError::Domain(_) | CliError::Io(_) => EXIT_DOMAIN,
            }
        }
    }
}

fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let registry = match &cli.species_file {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            load_registry(&text).map_err(|e| domain(format!("{}: {e}", path.display())))?
        }
        None => builtin_registry(),
    };
    let constants = ConstantsMode::from(cli.constants);
    let ctx = Context {
        registry,
        constants,
        prefactors: Prefactors::for_mode(constants, &CODATA_2018),
    };
    let output = match cli.command {
        Command::Species { action } => species_cmd(&ctx, action)?,
        Command::Chain(args) => chain_cmd(&ctx, args)?,
        Command::Pulse(args) => pulse_cmd(&ctx, args, err)?,
        Command::Bound(args) => bound_cmd(&ctx, args, err)?,
        Command::FactorLimit(args) => factor_limit_cmd(&ctx, args, err)?,
        Command::TotalTime(args) => total_time_cmd(&ctx, args, err)?,
        Command::Fig1(args) => fig1_cmd(&ctx, args, err)?,
        Command::Fig2(args) => fig2_cmd(&ctx, args, err)?,
        Command::SimulateDecay(args) => decay_cmd(&ctx, args)?,
    };
    let bytes = output.render()?;
    match &cli.out {
        Some(path) => std::fs::write(path, &bytes)?,
        None => out.write_all(&bytes)?,
    }
    match output.failure {
        Some(msg) => {
            writeln!(err, "error: {msg}")?;
            Ok(EXIT_DOMAIN)
        }
        None => Ok(EXIT_OK),
    }
}

fn species_cmd(ctx: &Context, action: SpeciesAction) -> Result<Output, CliError> {
    match action {
        SpeciesAction::List => {
            let manifest = RunManifest::new("species list", ctx.constants);
            let rows = ctx
                .registry
                .iter()
                .map(|sp| {
                    vec![
                        sp.name.clone(),
                        sp.z.to_string(),
                        num(sp.mass_number),
                        num(sp.lambda_nm),
                        num(sp.tau0),
                        sp.note.clone(),
                    ]
                })
                .collect();
            Ok(Output::table(
                manifest,
                vec!["name", "Z", "A", "lambda_nm", "tau0_s", "note"],
                rows,
            ))
        }
        SpeciesAction::Show { species } => {
            let sp = ctx.species(&species)?;
            let mut manifest = RunManifest::new("species show", ctx.constants);
            manifest.param("name", &sp.name);
            Ok(Output::report(
                manifest,
                vec![
                    ("name", sp.name.clone()),
                    ("Z", sp.z.to_string()),
                    ("A", num(sp.mass_number)),
                    ("lambda_nm", num(sp.lambda_nm)),
                    ("tau0_s", num(sp.tau0)),
                    ("mass_kg", num(sp.mass(&CODATA_2018))),
                    ("note", sp.note.clone()),
                ],
            ))
        }
    }
}

fn chain_cmd(ctx: &Context, args: ChainArgs) -> Result<Output, CliError> {
    let scale = match (&args.species, args.nu_hz) {
        (Some(name), Some(nu)) => {
            let sp = ctx.species(name)?;
            Some((
                sp.name.clone(),
                nu,
                chain::length_scale(&sp, &CODATA_2018, 2.0 * PI * nu).map_err(domain)?,
            ))
        }
        _ => None,
    };
    let mut manifest = RunManifest::new("chain", ctx.constants);
    if let Some((name, nu, ell)) = &scale {
        manifest
            .param("species", name)
            .param("nu_hz", num(*nu))
            .param("length_scale_m", num(*ell));
    }

    if args.fit {
        if args.l_min < 2 || args.l_max < args.l_min + 5 {
            return Err(domain(chain::ChainError::FitRange {
                min: args.l_min,
                max: args.l_max,
            }));
        }
        let sols = chain::equilibrium_sweep(args.l_min..=args.l_max).map_err(domain)?;
        let points: Vec<(f64, f64)> = sols
            .iter()
            .map(|s| (s.ions as f64, s.min_spacing))
            .collect();
        let (coefficient, exponent, rms) = chain::fit_power_law(&points).map_err(domain)?;
        let fit = chain::SpacingFit {
            coefficient,
            exponent,
            ions_min: args.l_min,
            ions_max: args.l_max,
            rms_log_error: rms,
        };
        manifest
            .param("l_min", args.l_min)
            .param("l_max", args.l_max)
            .param("fit_coefficient", num(fit.coefficient))
            .param("fit_exponent", num(fit.exponent))
            .param("fit_rms_log_error", num(fit.rms_log_error));
        let mut header = vec!["ions", "min_spacing", "fit", "reference_fit", "residual"];
        if scale.is_some() {
            header.push("min_spacing_m");
        }
        let rows = sols
            .iter()
            .map(|s| {
                let l = s.ions as f64;
                let mut row = vec![
                    s.ions.to_string(),
                    num(s.min_spacing),
                    num(fit.coefficient / l.powf(fit.exponent)),
                    num(chain::min_spacing_fit(s.ions)),
                    num(s.residual),
                ];
                if let Some((_, _, ell)) = &scale {
                    row.push(num(s.min_spacing * ell));
                }
                row
            })
            .collect();
        return Ok(Output::table(manifest, header, rows));
    }

    let ions = args.ions.expect("clap requires --ions without --fit");
    let sol = chain::equilibrium_positions(ions).map_err(domain)?;
    manifest
        .param("ions", ions)
        .param("min_spacing", num(sol.min_spacing))
        .param("residual", num(sol.residual))
        .param("iterations", sol.iterations);
    let mut header = vec!["index", "position", "gap_to_next"];
    if scale.is_some() {
        header.extend(["position_m", "gap_to_next_m"]);
    }
    let rows = sol
        .positions
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let gap = sol.gaps.get(i).copied();
            let mut row = vec![i.to_string(), num(x), gap.map(num).unwrap_or_default()];
            if let Some((_, _, ell)) = &scale {
                row.push(num(x * ell));
                row.push(gap.map(|g| num(g * ell)).unwrap_or_default());
            }
            row
        })
        .collect();
    Ok(Output::table(manifest, header, rows))
}

fn pulse_cmd(ctx: &Context, args: PulseArgs, err: &mut dyn Write) -> Result<Output, CliError> {
    let sp = ctx.species_with(&args.species)?;
    let cfg = trap_config(&args.trap, err)?;
    let last = args.ions_max.unwrap_or(args.ions);
    if last < args.ions {
        return Err(CliError::Usage(format!(
            "--ions-max {last} is below --ions {}",
            args.ions
        )));
    }
    let mut manifest = RunManifest::new("pulse", ctx.constants);
    manifest
        .species(&sp)
        .trap(&cfg)
        .param("ions", format!("{}..={last}", args.ions))
        .param("timing_prefactor", num(ctx.prefactors.timing));
    let mut rows = Vec::new();
    let mut worst: Option<f64> = None;
    for ions in args.ions..=last {
        let t = pulse::pulse_timing(&sp, &CODATA_2018, ions, &cfg).map_err(domain)?;
        let closed =
            pulse::u_pulse_duration(&sp, ions, &cfg, ctx.prefactors.timing).map_err(domain)?;
        if t.violates_validity() {
            worst = Some(worst.map_or(t.validity_ratio, |w: f64| w.max(t.validity_ratio)));
        }
        rows.push(vec![
            ions.to_string(),
            num(t.nu_x),
            num(t.nu_x / (2.0 * PI)),
            num(t.t_u),
            num(closed),
            num(t.eta),
            num(t.omega),
            num(t.validity_ratio),
        ]);
    }
    if let Some(w) = worst {
        writeln!(
            err,
            "warning: validity ratio (Omega*eta/(2*nu_x*sqrt(L)))^2 reaches {} (> {}); \
             single-mode sideband picture is not reliable",
            num(w),
            num(pulse::VALIDITY_WARNING_THRESHOLD)
        )?;
    }
    Ok(Output::table(
        manifest,
        vec![
            "ions",
            "nu_x_rad_s",
            "nu_x_hz",
            "t_u_s",
            "t_u_closed_form_s",
            "eta",
            "omega_rad_s",
            "validity_ratio",
        ],
        rows,
    ))
}

fn bound_cmd(ctx: &Context, args: BoundArgs, err: &mut dyn Write) -> Result<Output, CliError> {
    let sp = ctx.species_with(&args.species)?;
    let cfg = trap_config(&args.trap, err)?;
    if args.ions_max < args.ions_min {
        return Err(CliError::Usage(format!(
            "--ions-max {} is below --ions-min {}",
            args.ions_max, args.ions_min
        )));
    }
    let mut manifest = RunManifest::new("bound", ctx.constants);
    manifest
        .species(&sp)
        .trap(&cfg)
        .param("ions", format!("{}..={}", args.ions_min, args.ions_max));
    if let Some(t) = args.tau_e_s {
        manifest.param("tau_e_s", num(t));
    }
    let mut header = vec!["ions", "intrinsic_max_u_pulses"];
    if args.tau_e_s.is_some() {
        header.push("experimental_max_u_pulses");
    }
    let mut rows = Vec::new();
    for ions in args.ions_min..=args.ions_max {
        let mut row = vec![
            ions.to_string(),
            num(bounds::intrinsic_pulse_budget(&sp, ions, &cfg, &ctx.prefactors).map_err(domain)?),
        ];
        if let Some(t) = args.tau_e_s {
            row.push(num(bounds::experimental_pulse_budget(
                &sp,
                ions,
                &cfg,
                t,
                &ctx.prefactors,
            )
            .map_err(domain)?));
        }
        rows.push(row);
    }
    Ok(Output::table(manifest, header, rows))
}

fn factor_limit_cmd(
    ctx: &Context,
    args: FactorLimitArgs,
    err: &mut dyn Write,
) -> Result<Output, CliError> {
    let sp = ctx.species_with(&args.species)?;
    let cfg = trap_config(&args.trap, err)?;
    let mode = BoundMode::from(args.mode);
    let tau_e = args.tau_e_s.or(args.tau_e_preset.map(|p| match p {
        TauPreset::Heating => TAU_E_HEATING,
        TauPreset::LaserPhase => TAU_E_LASER_PHASE,
    }));
    if mode == BoundMode::Intrinsic && tau_e.is_some() {
        writeln!(
            err,
            "warning: intrinsic mode ignores the experimental coherence time"
        )?;
    }
    let tau_e = tau_e.filter(|_| mode != BoundMode::Intrinsic);
    if mode != BoundMode::Intrinsic && tau_e.is_none() {
        return Err(CliError::Usage(format!(
            "mode '{mode}' needs --tau-e-s or --tau-e-preset"
        )));
    }
    let r = bounds::max_factorable_bits(&sp, &cfg, mode, tau_e, &ctx.prefactors).map_err(domain)?;

    let mut manifest = RunManifest::new("factor-limit", ctx.constants);
    manifest.species(&sp).trap(&cfg).param("mode", mode);
    if let Some(t) = tau_e {
        manifest.param("tau_e_s", num(t));
    }
    let mut lines = vec![
        ("species", r.species.clone()),
        ("mode", mode.to_string()),
        (
            "status",
            match r.status {
                Feasibility::Feasible => "feasible",
                Feasibility::Infeasible => "infeasible",
            }
            .to_string(),
        ),
        ("l_max", r.l_max.to_string()),
        ("limiting", r.limiting.to_string()),
    ];
    if let (Some(res), Some(t_u), Some(total)) = (r.resources, r.t_u, r.total_time) {
        lines.extend([
            ("ions", res.ions.to_string()),
            (
                "ions_interleaved",
                bounds::shor_ions_interleaved(res.bits)
                    .map_err(domain)?
                    .to_string(),
            ),
            ("u_pulses", res.u_pulses.to_string()),
            ("t_u_s", num(t_u)),
            ("total_time_s", num(total)),
            ("total_time_h", num(total / 3600.0)),
        ]);
    }
    let mut output = Output::report(manifest, lines);
    if r.status == Feasibility::Infeasible {
        output.failure = Some(format!(
            "{} cannot factor even a 1-bit number in {mode} mode",
            r.species
        ));
    }
    Ok(output)
}

fn total_time_cmd(
    ctx: &Context,
    args: TotalTimeArgs,
    err: &mut dyn Write,
) -> Result<Output, CliError> {
    let sp = ctx.species_with(&args.species)?;
    let cfg = trap_config(&args.trap, err)?;
    let res = bounds::shor_resources(args.bits).map_err(domain)?;
    let total = bounds::total_time(args.bits, &sp, &cfg, &ctx.prefactors).map_err(domain)?;
    let mut manifest = RunManifest::new("total-time", ctx.constants);
    manifest.species(&sp).trap(&cfg).param("bits", args.bits);
    Ok(Output::report(
        manifest,
        vec![
            ("bits", res.bits.to_string()),
            ("ions", res.ions.to_string()),
            ("u_pulses", res.u_pulses.to_string()),
            ("t_u_s", num(total / res.u_pulses as f64)),
            ("total_time_s", num(total)),
            ("total_time_h", num(total / 3600.0)),
        ],
    ))
}

fn fig1_cmd(ctx: &Context, args: Fig1Args, err: &mut dyn Write) -> Result<Output, CliError> {
    let species = ctx.species_list(&args.species)?;
    let cfg = trap_config(&args.trap, err)?;
    let ions_max = args.ions_max.unwrap_or(100.max(5 * args.l_max + 2));
    if ions_max < args.ions_min {
        return Err(CliError::Usage(format!(
            "--ions-max {ions_max} is below --ions-min {}",
            args.ions_min
        )));
    }
    let refs: Vec<&IonSpecies> = species.iter().collect();
    let data = bounds::fig1_curves(
        &refs,
        &cfg,
        &ctx.prefactors,
        args.ions_min..=ions_max,
        args.l_max,
    )
    .map_err(domain)?;

    let mut manifest = RunManifest::new("fig1", ctx.constants);
    for sp in &species {
        manifest.species(sp);
    }
    manifest
        .trap(&cfg)
        .param("ions", format!("{}..={ions_max}", args.ions_min))
        .param("l_max", args.l_max);

    let mut rows = Vec::new();
    for curve in &data.bounds {
        for &(l, n) in &curve.points {
            rows.push(vec![
                "bound".to_string(),
                curve.species.clone(),
                String::new(),
                l.to_string(),
                num(n),
            ]);
        }
    }
    for p in &data.factorization {
        rows.push(vec![
            "factorization".to_string(),
            String::new(),
            p.bits.to_string(),
            p.ions.to_string(),
            p.u_pulses.to_string(),
        ]);
    }
    for sp in &species {
        let r = bounds::max_factorable_bits(sp, &cfg, BoundMode::Intrinsic, None, &ctx.prefactors)
            .map_err(domain)?;
        if let Some(res) = r.resources {
            rows.push(vec![
                "intersection".to_string(),
                sp.name.clone(),
                res.bits.to_string(),
                res.ions.to_string(),
                res.u_pulses.to_string(),
            ]);
        }
    }
    Ok(Output::table(
        manifest,
        vec!["series", "species", "bits", "ions", "u_pulses"],
        rows,
    ))
}

fn fig2_cmd(ctx: &Context, args: Fig2Args, err: &mut dyn Write) -> Result<Output, CliError> {
    let species = ctx.species_list(&args.species)?;
    let cfg = trap_config(&args.trap, err)?;
    let grid = bounds::log_grid(args.tau_e_min_s, args.tau_e_max_s, args.points as usize);
    let refs: Vec<&IonSpecies> = species.iter().collect();
    let curves = bounds::fig2_curves(&refs, &cfg, &ctx.prefactors, &grid).map_err(domain)?;

    let mut manifest = RunManifest::new("fig2", ctx.constants);
    for sp in &species {
        manifest.species(sp);
    }
    manifest
        .trap(&cfg)
        .param(
            "tau_e_s",
            format!("{}..={}", num(args.tau_e_min_s), num(args.tau_e_max_s)),
        )
        .param("points", args.points)
        .param("mode", BoundMode::Combined);
    let rows = curves
        .iter()
        .flat_map(|c| {
            c.points.iter().map(move |&(t, l)| {
                vec![
                    c.species.clone(),
                    num(t),
                    l.to_string(),
                    c.intrinsic_l_max.to_string(),
                ]
            })
        })
        .collect();
    Ok(Output::table(
        manifest,
        vec!["species", "tau_e_s", "l_max", "intrinsic_l_max"],
        rows,
    ))
}

fn decay_cmd(ctx: &Context, args: DecayArgs) -> Result<Output, CliError> {
    if !(args.t_over_tau0 >= 0.0 && args.t_over_tau0.is_finite()) {
        return Err(CliError::Usage(format!(
            "--T-over-tau0 must be non-negative and finite, got {}",
            args.t_over_tau0
        )));
    }
    let ions = usize::try_from(args.ions)
        .map_err(|_| CliError::Usage(format!("--ions {} is too large", args.ions)))?;
    let est = decoherence::simulate_trajectories(
        ions,
        args.t_over_tau0,
        1.0,
        args.trajectories,
        args.seed,
    )
    .map_err(domain)?;
    let mc = est
        .p_monte_carlo
        .expect("simulation always reports an estimate");
    let mut manifest = RunManifest::new("simulate-decay", ctx.constants);
    manifest
        .param("ions", ions)
        .param("t_over_tau0", num(args.t_over_tau0))
        .param("trajectories", args.trajectories)
        .param("seed", args.seed);
    Ok(Output::table(
        manifest,
        vec![
            "ions",
            "simulated_ions",
            "t_over_tau0",
            "p_exact",
            "p_exact_simulated",
            "p_linear",
            "linear_out_of_regime",
            "p_monte_carlo",
            "std_error",
            "trajectories",
            "seed",
        ],
        vec![vec![
            est.ions.to_string(),
            est.simulated_ions.to_string(),
            num(args.t_over_tau0),
            num(est.p_exact),
            num(est.p_exact_simulated),
            num(est.p_linear.probability),
            est.p_linear.out_of_regime.to_string(),
            num(mc.mean),
            num(mc.std_error),
            est.trajectories.to_string(),
            est.seed.to_string(),
        ]],
    ))
}
