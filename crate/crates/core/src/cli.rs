//! `geoqc` command line: single simulations, the spin echo, the two-spin
//! conditional gate, the `Δγ` surface sweep and the invariant suite.
//!
//! Parameters come from flags, then from an optional `key = value` file
//! (`--config`), then from built-in defaults. Every report starts with the
//! resolved parameters and the unit conventions. Exit codes: 0 success,
//! 1 failed check / IO error / non-adiabatic run, 2 usage error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Display;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bloch::RabiParams;
use crate::error::Error;
use crate::linalg::Spinor;
use crate::phase::PhaseDecomposition;
use crate::schedule::{
    LoopTiming, PiPulseMode, Profiles, RampShape, SweepProfile, DEFAULT_RAMP_FRACTION,
    DEFAULT_SWEEP_CYCLES,
};
use crate::schrodinger::{bloch_of_state, TwoSpinParams};
use crate::sequences::{
    branch_rabi, measure_cone_phase, run_conditional_sequence, run_spin_echo_1q, BranchPhases,
    RunOptions, DEFAULT_MIN_FIDELITY, DEFAULT_STEP_FRACTION,
};
use crate::surface::{fault_tolerance_surface, GridAxis};
use crate::verify::{self, Bound, VerifyConfig, CHECKS};

pub const UNITS: &str = "angular frequencies in rad/s, J in Hz (coupling term 2*pi*J*Sz*Sz), times in s, phases in rad, hbar = 1";

#[derive(Debug, Parser)]
#[command(
    name = "geoqc",
    version,
    about = "Geometric-phase gates on one and two spin-1/2 systems"
)]
pub struct Cli {
    /// Plain `key = value` file supplying defaults; flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One cone loop (forward and reversed) of a single driven spin.
    Simulate(SimulateArgs),
    /// Single-spin echo: loop, pi pulse, reversed loop, pi pulse.
    Echo(EchoArgs),
    /// Eight-step conditional phase sequence on two coupled spins.
    Conditional(ConditionalArgs),
    /// Closed-form differential phase over a (detuning, drive) grid.
    Sweep(SweepArgs),
    /// Invariant suite.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RampShapeArg {
    RaisedCosine,
    Linear,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SweepProfileArg {
    Tapered,
    Linear,
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    /// Drive ramp duration (s); default half the sweep time.
    #[arg(long)]
    pub ramp_time: Option<f64>,
    /// Phase sweep duration (s); default 500/|Omega'|.
    #[arg(long)]
    pub sweep_time: Option<f64>,
    /// Fixed RK4 step (s); default 0.005 / largest spectral spread.
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, value_enum)]
    pub ramp_shape: Option<RampShapeArg>,
    #[arg(long, value_enum)]
    pub sweep_profile: Option<SweepProfileArg>,
    /// Smallest acceptable return probability to the starting state.
    #[arg(long)]
    pub min_fidelity: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SingleSpinArgs {
    /// Transition frequency omega0 (rad/s).
    #[arg(long)]
    pub omega0: Option<f64>,
    /// Drive frequency omega (rad/s).
    #[arg(long)]
    pub omega: Option<f64>,
    /// Drive amplitude omega1 (rad/s).
    #[arg(long)]
    pub omega1: Option<f64>,
    /// Initial drive phase phi (rad).
    #[arg(long)]
    pub phi: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub spin: SingleSpinArgs,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    /// Trajectory CSV of the forward loop (`-` for stdout).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Record every n-th integration step; default about 2000 rows.
    #[arg(long)]
    pub stride: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EchoArgs {
    #[command(flatten)]
    pub spin: SingleSpinArgs,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    /// Use finite pi pulses of this Rabi frequency (rad/s) instead of ideal ones.
    #[arg(long)]
    pub pi_rabi: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ConditionalArgs {
    #[arg(long)]
    pub omega_a: Option<f64>,
    #[arg(long)]
    pub omega_b: Option<f64>,
    /// Coupling J (Hz).
    #[arg(long)]
    pub j: Option<f64>,
    #[arg(long)]
    pub omega1: Option<f64>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub phi: Option<f64>,
    /// Let the rotating field act on spin b as well.
    #[arg(long)]
    pub drive_on_b: Option<bool>,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    #[arg(long)]
    pub pi_rabi: Option<f64>,
    /// Smallest acceptable fidelity to the target gate.
    #[arg(long)]
    pub min_gate_fidelity: Option<f64>,
    /// Largest acceptable off-diagonal magnitude.
    #[arg(long)]
    pub leakage_tolerance: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub omega_a: Option<f64>,
    #[arg(long)]
    pub j: Option<f64>,
    /// Detuning axis (omega_a - omega)/(pi J).
    #[arg(long)]
    pub detuning_min: Option<f64>,
    #[arg(long)]
    pub detuning_max: Option<f64>,
    #[arg(long)]
    pub detuning_count: Option<usize>,
    /// Drive axis omega1/(pi J).
    #[arg(long)]
    pub omega1_min: Option<f64>,
    #[arg(long)]
    pub omega1_max: Option<f64>,
    #[arg(long)]
    pub omega1_count: Option<usize>,
    /// Surface CSV (`-` for stdout, the default).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// List the checks without running them.
    #[arg(long)]
    pub list: bool,
    /// Run the cone-phase check with a fast, non-adiabatic sweep.
    #[arg(long)]
    pub diabatic: bool,
    /// Seed of the random inputs.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Run only the named checks.
    #[arg(long = "check", value_name = "NAME")]
    pub checks: Vec<String>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Failure(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_)
            | Error::ZeroRabiVector
            | Error::InvalidDuration { .. }
            | Error::InvalidStep { .. }
            | Error::InvalidSpan { .. }
            | Error::StepTooLarge { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Failure(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Failure(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Values accepted in flags and in the config file.
trait ConfigValue: Sized {
    fn parse_value(s: &str) -> std::result::Result<Self, String>;
    fn render(&self) -> String;
}

macro_rules! from_str_value {
    ($($t:ty),*) => {$(
        impl ConfigValue for $t {
            fn parse_value(s: &str) -> std::result::Result<Self, String> {
                s.parse().map_err(|e| format!("{e}"))
            }
            fn render(&self) -> String {
                self.to_string()
            }
        }
    )*};
}

from_str_value!(f64, usize, u64, bool);

macro_rules! enum_value {
    ($($t:ty),*) => {$(
        impl ConfigValue for $t {
            fn parse_value(s: &str) -> std::result::Result<Self, String> {
                <$t as ValueEnum>::from_str(s, true)
            }
            fn render(&self) -> String {
                self.to_possible_value().map(|v| v.get_name().to_owned()).unwrap_or_default()
            }
        }
    )*};
}

enum_value!(RampShapeArg, SweepProfileArg);

/// Flag > file > default resolution, remembering what was used.
struct Resolver {
    file: BTreeMap<String, String>,
    used: Vec<(&'static str, String)>,
}

impl Resolver {
    fn new(config: Option<&Path>) -> CliResult<Self> {
        let file = match config {
            Some(path) => parse_config_file(path)?,
            None => BTreeMap::new(),
        };
        Ok(Self {
            file,
            used: Vec::new(),
        })
    }

    fn lookup<T: ConfigValue>(
        &mut self,
        key: &'static str,
        flag: Option<T>,
    ) -> CliResult<Option<T>> {
        let from_file = self.file.remove(key);
        let v = match (flag, from_file) {
            (Some(v), _) => Some(v),
            (None, Some(s)) => Some(T::parse_value(&s).map_err(|e| {
                CliError::Usage(format!("config key `{key}`: cannot parse `{s}`: {e}"))
            })?),
            (None, None) => None,
        };
        Ok(v)
    }

    fn get<T: ConfigValue>(
        &mut self,
        key: &'static str,
        flag: Option<T>,
        default: T,
    ) -> CliResult<T> {
        let v = self.lookup(key, flag)?.unwrap_or(default);
        self.used.push((key, v.render()));
        Ok(v)
    }

    /// Like [`Resolver::get`], but the default depends on values resolved later.
    fn get_opt<T: ConfigValue>(
        &mut self,
        key: &'static str,
        flag: Option<T>,
    ) -> CliResult<Option<T>> {
        self.lookup(key, flag)
    }

    fn record<T: ConfigValue>(&mut self, key: &'static str, v: &T) {
        self.used.push((key, v.render()));
    }

    /// Every key left in the file belongs to no parameter of this command.
    fn finish(&self) -> CliResult<()> {
        match self.file.keys().next() {
            Some(k) => Err(CliError::Usage(format!(
                "unknown config key `{k}` for this command"
            ))),
            None => Ok(()),
        }
    }
}

fn parse_config_file(path: &Path) -> CliResult<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!(
                "{}:{}: expected `key = value`",
                path.display(),
                n + 1
            ))
        })?;
        let key = k.trim().replace('-', "_");
        if key.is_empty() {
            return Err(CliError::Usage(format!(
                "{}:{}: empty key",
                path.display(),
                n + 1
            )));
        }
        if map.insert(key.clone(), v.trim().to_owned()).is_some() {
            return Err(CliError::Usage(format!(
                "{}:{}: duplicate key `{key}`",
                path.display(),
                n + 1
            )));
        }
    }
    Ok(map)
}

/// Report sink: the header, then `key = value` lines.
struct Report {
    lines: Vec<String>,
}

impl Report {
    fn new(command: &str, used: &[(&'static str, String)]) -> Self {
        let mut lines = vec![format!("# geoqc {command}"), format!("# units: {UNITS}")];
        lines.extend(used.iter().map(|(k, v)| format!("# config: {k} = {v}")));
        Self { lines }
    }

    fn value(&mut self, key: &str, v: impl Display) {
        self.lines.push(format!("{key} = {v}"));
    }

    fn num(&mut self, key: &str, v: f64) {
        self.value(key, fmt_num(v));
    }

    fn phases(&mut self, prefix: &str, p: &PhaseDecomposition) {
        self.num(&format!("{prefix}.total"), p.total);
        self.num(&format!("{prefix}.dynamic"), p.dynamic);
        self.num(&format!("{prefix}.geometric"), p.geometric);
    }

    fn branch(&mut self, prefix: &str, b: &BranchPhases) {
        self.phases(prefix, &b.phases);
        self.num(&format!("{prefix}.fidelity"), b.fidelity);
    }

    fn write(&self, w: &mut dyn Write) -> std::io::Result<()> {
        for l in &self.lines {
            writeln!(w, "{l}")?;
        }
        Ok(())
    }
}

/// 12 significant digits.
fn fmt_num(v: f64) -> String {
    // `+ 0.0` turns −0 into 0
    format!("{:.11e}", v + 0.0)
}

fn resolve_schedule(
    r: &mut Resolver,
    a: ScheduleArgs,
    rabi: f64,
) -> CliResult<(LoopTiming, RunOptions)> {
    if !(rabi > 0.0 && rabi.is_finite()) {
        return Err(Error::ZeroRabiVector.into());
    }
    let sweep = r.get("sweep_time", a.sweep_time, DEFAULT_SWEEP_CYCLES / rabi)?;
    let ramp = r.get("ramp_time", a.ramp_time, DEFAULT_RAMP_FRACTION * sweep)?;
    let timing = LoopTiming::new(ramp, sweep)?;
    let dt = r.get_opt("dt", a.dt)?;
    match dt {
        Some(dt) => {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::InvalidStep { dt }.into());
            }
            r.record("dt", &dt);
        }
        None => r.used.push(("dt", "auto".into())),
    }
    let ramp_shape = r.get("ramp_shape", a.ramp_shape, RampShapeArg::RaisedCosine)?;
    let sweep_profile = r.get("sweep_profile", a.sweep_profile, SweepProfileArg::Tapered)?;
    let min_fidelity = r.get("min_fidelity", a.min_fidelity, DEFAULT_MIN_FIDELITY)?;
    if !(0.0..=1.0).contains(&min_fidelity) {
        return Err(CliError::Usage(format!(
            "min_fidelity must lie in [0, 1], got {min_fidelity}"
        )));
    }
    let profiles = Profiles::new(
        match ramp_shape {
            RampShapeArg::RaisedCosine => RampShape::RaisedCosine,
            RampShapeArg::Linear => RampShape::Linear,
        },
        match sweep_profile {
            SweepProfileArg::Tapered => SweepProfile::Tapered,
            SweepProfileArg::Linear => SweepProfile::Linear,
        },
    );
    let opts = RunOptions {
        dt,
        step_fraction: DEFAULT_STEP_FRACTION,
        profiles,
        min_fidelity,
        ..RunOptions::default()
    };
    Ok((timing, opts))
}

fn resolve_pi_mode(r: &mut Resolver, pi_rabi: Option<f64>) -> CliResult<PiPulseMode> {
    match r.get_opt("pi_rabi", pi_rabi)? {
        Some(rabi) => {
            if !(rabi > 0.0 && rabi.is_finite()) {
                return Err(CliError::Usage(format!(
                    "pi_rabi must be positive, got {rabi}"
                )));
            }
            r.record("pi_rabi", &rabi);
            Ok(PiPulseMode::Finite { rabi })
        }
        None => {
            r.used.push(("pi_rabi", "ideal".into()));
            Ok(PiPulseMode::Ideal)
        }
    }
}

/// `θ = π/3` with `|Ω′| = 1`.
fn resolve_single_spin(r: &mut Resolver, a: SingleSpinArgs) -> CliResult<RabiParams> {
    let omega0 = r.get("omega0", a.omega0, 10.5)?;
    let omega = r.get("omega", a.omega, 10.0)?;
    let omega1 = r.get("omega1", a.omega1, (std::f64::consts::PI / 3.0).sin())?;
    let phi = r.get("phi", a.phi, 0.0)?;
    Ok(RabiParams::new(omega0, omega1, omega, phi)?)
}

/// Where a CSV goes.
enum Sink {
    Stdout,
    File(PathBuf),
}

fn sink_of(path: Option<PathBuf>) -> Option<Sink> {
    path.map(|p| {
        if p.as_os_str() == "-" {
            Sink::Stdout
        } else {
            Sink::File(p)
        }
    })
}

fn write_csv(
    sink: &Sink,
    out: &mut dyn Write,
    body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
) -> CliResult<()> {
    match sink {
        Sink::Stdout => body(out)?,
        Sink::File(p) => {
            let f = File::create(p)
                .map_err(|e| CliError::Failure(format!("cannot write {}: {e}", p.display())))?;
            let mut w = BufWriter::new(f);
            body(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn trajectory_csv(samples: &[(f64, Spinor)], w: &mut dyn Write) -> std::io::Result<()> {
    writeln!(w, "t,sx,sy,sz,re0,im0,re1,im1")?;
    for (t, psi) in samples {
        let s = bloch_of_state(psi);
        let [a, b] = psi.0;
        let row = [*t, s.x, s.y, s.z, a.re, a.im, b.re, b.im].map(fmt_num);
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

fn cmd_simulate(
    config: Option<&Path>,
    a: SimulateArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CliResult<()> {
    let mut r = Resolver::new(config)?;
    let p = resolve_single_spin(&mut r, a.spin)?;
    let rabi = p.detuning().hypot(p.omega1);
    let (timing, mut opts) = resolve_schedule(&mut r, a.schedule, rabi)?;
    if let Some(stride) = r.get_opt("stride", a.stride)? {
        if stride == 0 {
            return Err(CliError::Usage("stride must be at least 1".into()));
        }
        r.record("stride", &stride);
        opts.record_every = stride;
    } else {
        r.used.push(("stride", "auto".into()));
    }
    let sink = sink_of(a.output);
    r.used.push(("output", output_label(sink.as_ref())));
    r.finish()?;

    let m = measure_cone_phase(&p, &timing, &opts)?;
    let mut rep = Report::new("simulate", &r.used);
    rep.num("rabi_magnitude", rabi);
    rep.num("cos_theta", m.cos_theta);
    rep.num("geometric_phase", m.geometric);
    rep.num("expected_geometric_phase", m.expected);
    rep.num("geometric_phase_error", m.error());
    rep.phases("forward", &m.forward.phases);
    rep.num("forward.fidelity", m.forward.fidelity);
    rep.phases("reversed", &m.reversed.phases);
    rep.num("reversed.fidelity", m.reversed.fidelity);
    rep.num("plateau_polar_angle", m.forward.plateau_polar_angle);
    rep.num("dt", m.forward.dt);
    rep.value("steps", m.forward.steps + m.reversed.steps);
    let adiabatic = m.min_fidelity() >= opts.min_fidelity;
    rep.value("adiabatic", adiabatic);

    let report_to_err = matches!(sink, Some(Sink::Stdout));
    if let Some(sink) = &sink {
        write_csv(sink, out, |w| trajectory_csv(&m.forward.samples, w))?;
    }
    let dest: &mut dyn Write = if report_to_err { &mut *err } else { &mut *out };
    rep.write(dest)?;
    if !adiabatic {
        writeln!(
            err,
            "warning: return fidelity {:.6} below {}; the loop is not adiabatic and the phases are not geometric",
            m.min_fidelity(),
            opts.min_fidelity
        )?;
    }
    Ok(())
}

fn output_label(sink: Option<&Sink>) -> String {
    match sink {
        None => "none".into(),
        Some(Sink::Stdout) => "-".into(),
        Some(Sink::File(p)) => p.display().to_string(),
    }
}

fn cmd_echo(config: Option<&Path>, a: EchoArgs, out: &mut dyn Write) -> CliResult<()> {
    let mut r = Resolver::new(config)?;
    let p = resolve_single_spin(&mut r, a.spin)?;
    let rabi = p.detuning().hypot(p.omega1);
    let (timing, mut opts) = resolve_schedule(&mut r, a.schedule, rabi)?;
    opts.pi_mode = resolve_pi_mode(&mut r, a.pi_rabi)?;
    r.finish()?;

    let e = run_spin_echo_1q(&p, &timing, &opts)?;
    let mut rep = Report::new("echo", &r.used);
    rep.num("cos_theta", e.cos_theta);
    rep.branch("up", &e.up);
    rep.branch("down", &e.down);
    rep.num("difference_down_minus_up", e.difference);
    rep.num("expected_4pi_1_minus_cos_theta", e.expected);
    rep.num("difference_error", e.error());
    rep.num("cos_form_4pi_cos_theta", e.cos_form);
    rep.num("cos_form_error", e.cos_form_error());
    rep.num("dynamic_residual", e.dynamic_residual);
    rep.num("dt", e.dt);
    rep.write(out)?;
    Ok(())
}

fn cmd_conditional(
    config: Option<&Path>,
    a: ConditionalArgs,
    out: &mut dyn Write,
) -> CliResult<()> {
    let pi = std::f64::consts::PI;
    let mut r = Resolver::new(config)?;
    let omega_a = r.get("omega_a", a.omega_a, 40.0)?;
    let omega_b = r.get("omega_b", a.omega_b, 10.0)?;
    let j = r.get("j", a.j, 1.0)?;
    let omega1 = r.get("omega1", a.omega1, pi * j)?;
    let omega = r.get("omega", a.omega, omega_a - 1.5 * pi * j)?;
    let phi = r.get("phi", a.phi, 0.0)?;
    let drive_on_b = r.get("drive_on_b", a.drive_on_b, false)?;
    let p = TwoSpinParams {
        omega_a,
        omega_b,
        j,
        omega1,
        omega,
        phi,
        drive_on_b,
    };
    p.validate()?;
    let (rp, rm) = branch_rabi(&p);
    let (timing, mut opts) = resolve_schedule(&mut r, a.schedule, rp.min(rm))?;
    opts.pi_mode = resolve_pi_mode(&mut r, a.pi_rabi)?;
    let min_gate = r.get("min_gate_fidelity", a.min_gate_fidelity, 0.999)?;
    opts.leakage_tolerance = r.get(
        "leakage_tolerance",
        a.leakage_tolerance,
        opts.leakage_tolerance,
    )?;
    r.finish()?;

    let c = run_conditional_sequence(&p, &timing, &opts)?;
    let mut rep = Report::new("conditional", &r.used);
    rep.num("delta_gamma", c.delta_gamma);
    rep.num("gate_fidelity", c.fidelity);
    rep.num("leakage", c.leakage);
    rep.num("pattern_error", c.pattern_error);
    rep.num("controlled_phase_angle_target", 8.0 * c.delta_gamma);
    rep.num("controlled_phase_fidelity", c.controlled_phase_fidelity);
    rep.num("local.phi_a", c.local.phi_a);
    rep.num("local.phi_b", c.local.phi_b);
    rep.num("local.phi_controlled", c.local.phi_controlled);
    rep.num("dynamic_residual", c.dynamic_residual);
    for (b, name) in c.branches.iter().zip(["uu", "ud", "du", "dd"]) {
        rep.branch(&format!("branch.{name}"), b);
        rep.num(
            &format!("branch.{name}.max_loop_dynamic"),
            b.max_loop_dynamic,
        );
    }
    for (i, z) in c.gate.diag().iter().enumerate() {
        rep.value(
            &format!("gate.diag{i}"),
            format!("{} {}", fmt_num(z.re), fmt_num(z.im)),
        );
    }
    rep.num("dt", c.dt);
    let ok = c.fidelity >= min_gate;
    rep.value("matches_target", ok);
    rep.write(out)?;
    if !ok {
        return Err(CliError::Failure(format!(
            "gate fidelity {:.6} below {min_gate}",
            c.fidelity
        )));
    }
    Ok(())
}

fn cmd_sweep(
    config: Option<&Path>,
    a: SweepArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CliResult<()> {
    let mut r = Resolver::new(config)?;
    let omega_a = r.get("omega_a", a.omega_a, 40.0)?;
    let j = r.get("j", a.j, 1.0)?;
    let dmin = r.get("detuning_min", a.detuning_min, 0.2)?;
    let dmax = r.get("detuning_max", a.detuning_max, 3.0)?;
    let dcount = r.get("detuning_count", a.detuning_count, 50)?;
    let wmin = r.get("omega1_min", a.omega1_min, 0.1)?;
    let wmax = r.get("omega1_max", a.omega1_max, 5.0)?;
    let wcount = r.get("omega1_count", a.omega1_count, 100)?;
    let sink = sink_of(a.output).unwrap_or(Sink::Stdout);
    r.used.push(("output", output_label(Some(&sink))));
    r.finish()?;
    if dcount < 2 || wcount < 2 {
        return Err(CliError::Usage(format!(
            "grid counts must be at least 2, got {dcount} x {wcount}"
        )));
    }
    let detuning = GridAxis::new(dmin, dmax, dcount)?;
    let omega1 = GridAxis::new(wmin, wmax, wcount)?;
    let s = fault_tolerance_surface(omega_a, j, &detuning, &omega1)?;

    let mut rep = Report::new("sweep", &r.used);
    rep.value("rows", s.points.len());
    rep.lines.push("# peaks: detuning_over_piJ, omega1_over_piJ at peak, delta_gamma at peak, slope, relative slope, interior".into());
    for pk in &s.peaks {
        rep.value(
            "peak",
            [
                pk.detuning_over_pij,
                pk.omega1_over_pij,
                pk.delta_gamma,
                pk.slope,
                pk.relative_slope,
            ]
            .map(fmt_num)
            .join(", ")
                + &format!(", {}", pk.interior),
        );
    }
    let edge = s.peaks.iter().filter(|p| !p.interior).count();
    rep.value("rows_with_peak_on_axis_end", edge);

    write_csv(&sink, out, |w| s.write_csv(w))?;
    let dest: &mut dyn Write = if matches!(sink, Sink::Stdout) {
        &mut *err
    } else {
        &mut *out
    };
    rep.write(dest)?;
    Ok(())
}

fn cmd_verify(config: Option<&Path>, a: VerifyArgs, out: &mut dyn Write) -> CliResult<()> {
    if a.list {
        for c in CHECKS {
            writeln!(out, "{:<30} {}", c.name, c.description)?;
        }
        return Ok(());
    }
    let mut r = Resolver::new(config)?;
    let seed = r.get("seed", a.seed, 0)?;
    let diabatic = r.get("diabatic", a.diabatic.then_some(true), false)?;
    r.finish()?;
    let indices: Vec<usize> = if a.checks.is_empty() {
        (0..CHECKS.len()).collect()
    } else {
        a.checks
            .iter()
            .map(|n| {
                verify::find(n)
                    .ok_or_else(|| CliError::Usage(format!("unknown check `{n}` (see --list)")))
            })
            .collect::<CliResult<_>>()?
    };
    let cfg = VerifyConfig { seed, diabatic };
    let results = verify::run_checks(&indices, &cfg);

    let mut rep = Report::new("verify", &r.used);
    let mut failed = Vec::new();
    for res in &results {
        let status = if res.passed() { "PASS" } else { "FAIL" };
        if !res.passed() {
            failed.push(res.name);
        }
        let detail = match &res.error {
            Some(e) => format!("error: {e}"),
            None => res
                .measurements
                .iter()
                .map(|m| {
                    let op = match m.bound {
                        Bound::AtMost => "<=",
                        Bound::AtLeast => ">=",
                    };
                    format!("{} = {} ({op} {:e})", m.label, fmt_num(m.value), m.limit)
                })
                .collect::<Vec<_>>()
                .join("; "),
        };
        rep.lines
            .push(format!("{status} {:<30} {detail}", res.name));
    }
    rep.value("passed", results.len() - failed.len());
    rep.value("failed", failed.len());
    rep.write(out)?;
    if !failed.is_empty() {
        return Err(CliError::Failure(format!(
            "failing checks: {}",
            failed.join(", ")
        )));
    }
    Ok(())
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return if code == 0 { 0 } else { 2 };
        }
    };
    let config = cli.config.as_deref();
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(config, a, out, err),
        Command::Echo(a) => cmd_echo(config, a, out),
        Command::Conditional(a) => cmd_conditional(config, a, out),
        Command::Sweep(a) => cmd_sweep(config, a, out, err),
        Command::Verify(a) => cmd_verify(config, a, out),
    };
    match result {
        Ok(()) => 0,
        Err(CliError::Usage(m)) => {
            let _ = writeln!(err, "error: {m}");
            2
        }
        Err(CliError::Failure(m)) => {
            let _ = writeln!(err, "error: {m}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(
            std::iter::once("geoqc").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn config_file_parsing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.conf");
        std::fs::write(&path, "# comment\nomega-a = 30\n\nj=2 # trailing\n").unwrap();
        let m = parse_config_file(&path).unwrap();
        assert_eq!(m.get("omega_a").map(String::as_str), Some("30"));
        assert_eq!(m.get("j").map(String::as_str), Some("2"));
        std::fs::write(&path, "j = 1\nj = 2\n").unwrap();
        assert!(matches!(parse_config_file(&path), Err(CliError::Usage(_))));
        std::fs::write(&path, "nonsense\n").unwrap();
        assert!(matches!(parse_config_file(&path), Err(CliError::Usage(_))));
    }

    #[test]
    fn flags_override_file_and_unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.conf");
        std::fs::write(&path, "detuning_count = 3\nomega1_count = 2\n").unwrap();
        let cfg = path.to_str().unwrap();
        let (code, out, err) = run_capture(&["--config", cfg, "sweep", "--detuning-count", "2"]);
        assert_eq!(code, 0, "{err}");
        assert_eq!(out.lines().count(), 5);
        assert!(err.contains("# config: detuning_count = 2"));
        assert!(err.contains("# config: omega1_count = 2"));
        std::fs::write(&path, "bogus = 1\n").unwrap();
        let (code, _, err) = run_capture(&["--config", cfg, "sweep"]);
        assert_eq!(code, 2);
        assert!(err.contains("bogus"));
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run_capture(&["sweep", "--detuning-count", "1"]).0, 2);
        assert_eq!(run_capture(&["simulate", "--omega1", "-1"]).0, 2);
        assert_eq!(
            run_capture(&["simulate", "--omega0", "10", "--omega", "10", "--omega1", "0"]).0,
            2
        );
        assert_eq!(run_capture(&["frobnicate"]).0, 2);
        assert_eq!(run_capture(&["verify", "--check", "nope"]).0, 2);
        assert_eq!(run_capture(&["--help"]).0, 0);
    }

    #[test]
    fn unwritable_output_exits_1() {
        let (code, _, err) = run_capture(&[
            "sweep",
            "--detuning-count",
            "2",
            "--omega1-count",
            "2",
            "--output",
            "/nonexistent/dir/x.csv",
        ]);
        assert_eq!(code, 1, "{err}");
    }

    #[test]
    fn verify_subset() {
        let (code, out, _) = run_capture(&[
            "verify",
            "--check",
            "pauli-algebra",
            "--check",
            "delta-gamma",
        ]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().filter(|l| l.starts_with("PASS")).count(), 2);
        assert!(out.contains("# units:"));
    }
}
