//! Command-line front end.
//!
//! Exit codes: 0 success, 1 verify failure, 2 input or validation error,
//! 3 strict design-constraint failure, 4 numerical divergence.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::biquad::{
    analytic_sensitivities, build_mode, numeric_sensitivity, pole_frequency, quality_factor,
    quality_factor_approx, sweep, transfer_function, unwrap_phase, FilterMode,
};
use crate::checks;
use crate::circuit_file::CircuitFile;
use crate::designer::{
    design_filter, design_oscillator, verify_published_points, BiasDesign, FilterSpec,
    OscillatorSpec, DEFAULT_CURRENT_RATIO, DEFAULT_GM2_RX1_BUDGET, DEFAULT_STARTUP_MARGIN,
};
use crate::element::DEFAULT_THERMAL_VOLTAGE;
use crate::error::Error;
use crate::oscillator::{
    oscillation_condition, oscillation_frequency, simulate, OscillatorConfig, DEFAULT_CYCLES,
    DEFAULT_STEPS_PER_PERIOD,
};
use crate::quantity;

/// Environment variable overriding the default thermal voltage.
pub const VT_ENV: &str = "CCCCTA_VT";

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_STRICT: i32 = 3;
pub const EXIT_DIVERGED: i32 = 4;

fn parse_quantity(s: &str) -> Result<f64, String> {
    quantity::parse(s).map_err(|e| e.to_string())
}

fn parse_limit(s: &str) -> Result<f64, String> {
    match s.trim() {
        "inf" | "none" | "off" => Ok(f64::INFINITY),
        other => parse_quantity(other),
    }
}

#[derive(Debug, Parser)]
#[command(name = "ccccta", version, about = "Two-CCCCTA biquad filter / quadrature oscillator toolkit")]
struct Cli {
    /// Thermal voltage, e.g. 25.85m (overrides CCCCTA_VT and circuit files)
    #[arg(long, global = true, value_parser = parse_quantity)]
    vt: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Frequency response of one filter mode, written as CSV
    Response(ResponseArgs),
    /// Bias currents for a filter or oscillator target
    #[command(subcommand)]
    Design(DesignCommand),
    /// Time-domain oscillator run, written as CSV
    Oscillate(OscillateArgs),
    /// Analytic versus finite-difference sensitivities
    Sensitivity(SensitivityArgs),
    /// Check the published design points and property suites
    Verify,
}

#[derive(Debug, Args)]
struct ResponseArgs {
    /// Circuit file (key=value)
    #[arg(long)]
    circuit: PathBuf,
    /// lp, bp, hp, br or ap
    #[arg(long)]
    mode: FilterMode,
    #[arg(long, default_value = "10k", value_parser = parse_quantity)]
    f_start: f64,
    #[arg(long, default_value = "10M", value_parser = parse_quantity)]
    f_stop: f64,
    /// Points per decade
    #[arg(long, default_value_t = 50)]
    ppd: usize,
    /// Unwrap the phase across the sweep
    #[arg(long)]
    unwrap: bool,
    /// Output CSV (stdout when omitted; the report then goes to stderr)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum DesignCommand {
    /// Filter from pole frequency and Q
    Filter(DesignFilterArgs),
    /// Oscillator from oscillation frequency and startup margin
    Oscillator(DesignOscillatorArgs),
}

#[derive(Debug, Args)]
struct Capacitors {
    /// Both capacitors
    #[arg(long, value_parser = parse_quantity, conflicts_with_all = ["c1", "c2"])]
    c: Option<f64>,
    #[arg(long, value_parser = parse_quantity, requires = "c2")]
    c1: Option<f64>,
    #[arg(long, value_parser = parse_quantity, requires = "c1")]
    c2: Option<f64>,
}

impl Capacitors {
    fn resolve(&self) -> Result<(f64, f64), String> {
        match (self.c, self.c1, self.c2) {
            (Some(c), _, _) => Ok((c, c)),
            (None, Some(c1), Some(c2)) => Ok((c1, c2)),
            _ => Err("give --c, or both --c1 and --c2".into()),
        }
    }
}

#[derive(Debug, Args)]
struct DesignFilterArgs {
    #[arg(long, default_value = "100k", value_parser = parse_quantity)]
    f0: f64,
    #[arg(long, value_parser = parse_quantity)]
    q: f64,
    #[command(flatten)]
    caps: Capacitors,
    #[arg(long, default_value = "bp")]
    mode: FilterMode,
    /// Target g_m2*R_X1 = I_S2/(4 I_B1)
    #[arg(long, default_value_t = DEFAULT_GM2_RX1_BUDGET, value_parser = parse_quantity)]
    budget: f64,
    /// Aim the exact (not approximate) Q at the target
    #[arg(long)]
    exact_q: bool,
    /// Fail with exit 3 when the mode constraint cannot be met
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DesignOscillatorArgs {
    #[arg(long, value_parser = parse_quantity)]
    f: f64,
    #[command(flatten)]
    caps: Capacitors,
    /// I_S1 / I_B1
    #[arg(long, default_value_t = DEFAULT_CURRENT_RATIO, value_parser = parse_quantity)]
    ratio: f64,
    /// g_m2*R_X1 - 1
    #[arg(long, default_value_t = DEFAULT_STARTUP_MARGIN, value_parser = parse_quantity)]
    margin: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OscillateArgs {
    #[arg(long)]
    circuit: PathBuf,
    /// Simulated time in seconds (default: 100 periods)
    #[arg(long, value_parser = parse_quantity, conflicts_with = "cycles")]
    duration: Option<f64>,
    /// Simulated time in oscillation periods
    #[arg(long, value_parser = parse_quantity)]
    cycles: Option<f64>,
    /// Step in seconds (default: period/500)
    #[arg(long, value_parser = parse_quantity)]
    dt: Option<f64>,
    /// Limiter scale V_L, or `inf` for the linear system
    #[arg(long, default_value = "50m", value_parser = parse_limit)]
    v_limit: f64,
    #[arg(long, default_value = "1m", value_parser = parse_quantity)]
    x1_init: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SensitivityArgs {
    #[arg(long)]
    circuit: PathBuf,
    #[arg(long, default_value = "1e-4", value_parser = parse_quantity)]
    rel_step: f64,
}

/// A failed command: message plus exit code.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self { code: EXIT_INPUT, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Divergence { .. } => EXIT_DIVERGED,
            _ => EXIT_INPUT,
        };
        Self { code, message: e.to_string() }
    }
}

/// Where reports and data go.
struct Output<'a> {
    stdout: &'a mut dyn Write,
    stderr: &'a mut dyn Write,
}

impl Output<'_> {
    /// The report stream: stdout, unless stdout carries the data.
    fn report(&mut self, data_on_stdout: bool) -> &mut dyn Write {
        if data_on_stdout {
            &mut *self.stderr
        } else {
            &mut *self.stdout
        }
    }
}

fn io_failure(e: io::Error) -> Failure {
    Failure::input(format!("I/O error: {e}"))
}

/// Default thermal voltage: flag, then environment, then 25.85 mV.
fn default_vt(flag: Option<f64>, env: Option<&str>) -> Result<f64, Failure> {
    if let Some(v) = flag {
        return Ok(v);
    }
    match env {
        Some(text) => quantity::parse(text)
            .map_err(|e| Failure::input(format!("{VT_ENV}: {e}"))),
        None => Ok(DEFAULT_THERMAL_VOLTAGE),
    }
}

fn load_circuit(
    path: &Path,
    flag_vt: Option<f64>,
    env_vt: Option<&str>,
) -> Result<crate::biquad::BiquadCircuit, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let mut file = CircuitFile::parse(&text)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    if flag_vt.is_some() {
        file.vt = flag_vt;
    }
    let vt = default_vt(None, env_vt)?;
    file.circuit(vt)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

/// Shortest round-trip decimal text; exponent form for very small or large
/// magnitudes. Negative zero prints as `0`.
pub fn format_number(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

fn write_csv<I>(
    target: Option<&Path>,
    stdout: &mut dyn Write,
    header: &[&str],
    rows: I,
) -> Result<(), Failure>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let mut buf = Vec::new();
    {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(&mut buf);
        let csv_err = |e: csv::Error| Failure::input(format!("CSV: {e}"));
        w.write_record(header).map_err(csv_err)?;
        for row in rows {
            w.write_record(row.into_iter().map(format_number)).map_err(csv_err)?;
        }
        w.flush().map_err(io_failure)?;
    }
    match target {
        Some(path) => fs::write(path, buf)
            .map_err(|e| Failure::input(format!("{}: {e}", path.display()))),
        None => stdout.write_all(&buf).map_err(io_failure),
    }
}

fn cmd_response(
    args: &ResponseArgs,
    vt: Option<f64>,
    env_vt: Option<&str>,
    out: &mut Output,
) -> Result<i32, Failure> {
    let circuit = load_circuit(&args.circuit, vt, env_vt)?;
    let (weights, constraint) = build_mode(&circuit, args.mode);
    let h = transfer_function(&circuit, &weights)?;
    let mut points = sweep(&h, args.f_start, args.f_stop, args.ppd)?;
    if args.unwrap {
        unwrap_phase(&mut points);
    }
    write_csv(
        args.out.as_deref(),
        out.stdout,
        &["freq_hz", "mag_db", "phase_deg"],
        points.iter().map(|p| vec![p.freq_hz, p.magnitude_db, p.phase_deg]),
    )?;

    let report = out.report(args.out.is_none());
    let f0 = pole_frequency(&circuit)?.hz();
    let q_approx = quality_factor_approx(&circuit)?;
    let q_exact = match quality_factor(&circuit) {
        Ok(q) => format_number(q),
        Err(_) => "inf".into(),
    };
    let floored = points.iter().filter(|p| p.at_floor).count();
    writeln!(report, "mode={}", args.mode).map_err(io_failure)?;
    writeln!(report, "constraint={constraint}").map_err(io_failure)?;
    writeln!(report, "f0_hz={}", format_number(f0)).map_err(io_failure)?;
    writeln!(report, "q_exact={q_exact}").map_err(io_failure)?;
    writeln!(report, "q_approx={}", format_number(q_approx)).map_err(io_failure)?;
    writeln!(report, "points={}", points.len()).map_err(io_failure)?;
    if floored > 0 {
        writeln!(report, "floored_points={floored}").map_err(io_failure)?;
    }
    Ok(EXIT_OK)
}

fn write_design(
    design: &BiasDesign,
    target: Option<&Path>,
    out: &mut Output,
) -> Result<(), Failure> {
    let circuit = design.circuit()?;
    let text = CircuitFile::from_circuit(&circuit).render();
    match target {
        Some(path) => fs::write(path, &text)
            .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?,
        None => out.stdout.write_all(text.as_bytes()).map_err(io_failure)?,
    }
    let report = out.report(target.is_none());
    let q_exact = design.achieved_q_exact.map_or("inf".to_string(), format_number);
    let lines = [
        format!("achieved_f0_hz={}", format_number(design.achieved_f0_hz)),
        format!("achieved_q_approx={}", format_number(design.achieved_q)),
        format!("achieved_q_exact={q_exact}"),
        format!("co_margin={}", format_number(design.co_margin)),
        format!("constraint_satisfied={}", design.constraint_satisfied),
    ];
    for line in lines {
        writeln!(report, "{line}").map_err(io_failure)?;
    }
    for note in &design.constraint_notes {
        writeln!(report, "warning: {note}").map_err(io_failure)?;
    }
    Ok(())
}

fn cmd_design(
    cmd: &DesignCommand,
    vt: Option<f64>,
    env_vt: Option<&str>,
    out: &mut Output,
) -> Result<i32, Failure> {
    let v_t = default_vt(vt, env_vt)?;
    match cmd {
        DesignCommand::Filter(a) => {
            let (c1, c2) = a.caps.resolve().map_err(Failure::input)?;
            let spec = FilterSpec {
                f0_hz: a.f0,
                q: a.q,
                c1,
                c2,
                mode: a.mode,
                v_t,
                gm2_rx1_budget: a.budget,
                exact_q: a.exact_q,
            };
            let design = design_filter(&spec)?;
            if a.strict && !design.constraint_satisfied {
                let mut msg = String::from("mode constraint not met");
                for note in &design.constraint_notes {
                    msg.push_str(": ");
                    msg.push_str(note);
                }
                return Err(Failure { code: EXIT_STRICT, message: msg });
            }
            write_design(&design, a.out.as_deref(), out)?;
        }
        DesignCommand::Oscillator(a) => {
            let (c1, c2) = a.caps.resolve().map_err(Failure::input)?;
            let spec = OscillatorSpec {
                f_hz: a.f,
                c1,
                c2,
                current_ratio: a.ratio,
                startup_margin: a.margin,
                v_t,
            };
            write_design(&design_oscillator(&spec)?, a.out.as_deref(), out)?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_oscillate(
    args: &OscillateArgs,
    vt: Option<f64>,
    env_vt: Option<&str>,
    out: &mut Output,
) -> Result<i32, Failure> {
    let circuit = load_circuit(&args.circuit, vt, env_vt)?;
    let mut cfg = OscillatorConfig::new(circuit)?;
    let period = cfg.period()?;
    cfg.v_limit = args.v_limit;
    cfg.x1_init = args.x1_init;
    cfg.dt = args.dt.unwrap_or(period / DEFAULT_STEPS_PER_PERIOD);
    cfg.duration = match (args.duration, args.cycles) {
        (Some(d), _) => d,
        (None, Some(n)) => n * period,
        (None, None) => DEFAULT_CYCLES * period,
    };
    let run = simulate(&cfg)?;
    write_csv(
        args.out.as_deref(),
        out.stdout,
        &["t_s", "v_o1", "v_o2", "v_o3"],
        (0..run.t.len()).map(|i| vec![run.t[i], run.v_o1[i], run.v_o2[i], run.v_o3[i]]),
    )?;

    let fo = oscillation_frequency(&circuit)?.hz();
    let margin = oscillation_condition(&circuit);
    let opt = |v: Option<f64>| v.map_or("n/a".to_string(), format_number);
    let report = out.report(args.out.is_none());
    let lines = [
        format!("est_freq_hz={}", opt(run.est_freq_hz)),
        format!("fo_hz={}", format_number(fo)),
        format!("rel_error={}", opt(run.est_freq_hz.map(|f| (f - fo) / fo))),
        format!("phase_o2_vs_o1_deg={}", opt(run.est_phase_o2_vs_o1_deg)),
        format!("steady_amplitude_v={}", format_number(run.steady_amplitude)),
        format!("amplitude_drift={}", format_number(run.amplitude_drift)),
        format!("settled={}", run.settled),
        format!("co_margin={}", format_number(margin.margin)),
    ];
    for line in lines {
        writeln!(report, "{line}").map_err(io_failure)?;
    }
    Ok(EXIT_OK)
}

fn cmd_sensitivity(
    args: &SensitivityArgs,
    vt: Option<f64>,
    env_vt: Option<&str>,
    out: &mut Output,
) -> Result<i32, Failure> {
    let circuit = load_circuit(&args.circuit, vt, env_vt)?;
    let w = &mut *out.stdout;
    writeln!(w, "{:<6} {:<6} {:>9} {:>12} {:>10}", "param", "target", "analytic", "numeric", "abs_diff")
        .map_err(io_failure)?;
    for s in analytic_sensitivities() {
        let n = numeric_sensitivity(&circuit, s.parameter, s.target, args.rel_step)?;
        writeln!(
            w,
            "{:<6} {:<6} {:>9.4} {:>12.8} {:>10.2e}",
            s.parameter.name(),
            s.target.name(),
            s.value,
            n,
            (n - s.value).abs()
        )
        .map_err(io_failure)?;
    }
    Ok(EXIT_OK)
}

fn cmd_verify(vt: Option<f64>, env_vt: Option<&str>, out: &mut Output) -> Result<i32, Failure> {
    let v_t = default_vt(vt, env_vt)?;
    let w = &mut *out.stdout;
    let mark = |ok: bool| if ok { "PASS" } else { "FAIL" };
    let mut all_ok = true;

    writeln!(w, "published design points (V_T = {} V)", format_number(v_t)).map_err(io_failure)?;
    writeln!(
        w,
        "{:<34} {:>12} {:>12} {:>12} {:>9} {:>9}  result",
        "point", "theory_hz", "sim_hz", "computed_hz", "err_th", "err_sim"
    )
    .map_err(io_failure)?;
    for row in verify_published_points(v_t)? {
        let ok = row.passes();
        all_ok &= ok;
        let theory = row.theory_hz.map_or("-".to_string(), |t| format!("{t:.0}"));
        let err_th = row
            .error_vs_theory()
            .map_or("-".to_string(), |e| format!("{:+.2}%", e * 100.0));
        writeln!(
            w,
            "{:<34} {:>12} {:>12.0} {:>12.1} {:>9} {:>+8.2}%  {}",
            row.label,
            theory,
            row.simulated_hz,
            row.computed_hz,
            err_th,
            row.error_vs_simulated() * 100.0,
            mark(ok)
        )
        .map_err(io_failure)?;
    }

    writeln!(w, "\nchecks").map_err(io_failure)?;
    for check in checks::run_all(v_t) {
        all_ok &= check.passed;
        writeln!(w, "{} {:<24} {}", mark(check.passed), check.name, check.detail)
            .map_err(io_failure)?;
    }
    writeln!(w, "\noverall: {}", mark(all_ok)).map_err(io_failure)?;
    Ok(if all_ok { EXIT_OK } else { EXIT_VERIFY_FAILED })
}

/// Runs the command line `args` (including the program name) and returns the
/// exit code. `env_vt` is the value of [`VT_ENV`], if set.
pub fn run<I, T>(args: I, env_vt: Option<&str>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = if e.use_stderr() { e.render().to_string() } else { e.to_string() };
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    let mut out = Output { stdout, stderr };
    let result = match &cli.command {
        Command::Response(a) => cmd_response(a, cli.vt, env_vt, &mut out),
        Command::Design(d) => cmd_design(d, cli.vt, env_vt, &mut out),
        Command::Oscillate(a) => cmd_oscillate(a, cli.vt, env_vt, &mut out),
        Command::Sensitivity(a) => cmd_sensitivity(a, cli.vt, env_vt, &mut out),
        Command::Verify => cmd_verify(cli.vt, env_vt, &mut out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(out.stderr, "error: {}", f.message);
            f.code
        }
    }
}
