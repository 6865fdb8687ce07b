//! Command-line surface for the su11 library: eigenstate fixtures, moment
//! reports, CSV parameter scans, the generation-protocol simulator, and a
//! verification suite.
//!
//! Exit codes: 0 on success, 1 when a verification check fails, 2 for
//! usage and parameter errors.

mod checks;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use su11::fock::{self, FockVector, Representation};
use su11::moments::{self, Family, MomentsError, MomentsReport, SqueezingFlags};
use su11::scheme::{self, MeasuredMode, PostTransform, SchemeError, SchemeParams};
use su11::states::{self, EigenvalueSign, StateError};

#[derive(Parser)]
#[command(
    name = "su11",
    version,
    about = "SU(1,1) eigenstate toolbox: fixtures, moment reports, scans, protocol simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a family eigenstate and print it in the fixture format
    State(StateArgs),
    /// Print the closed-form moment report for one parameter point
    Moments(MomentsArgs),
    /// Tabulate closed-form observables over a parameter range as CSV
    Scan(ScanArgs),
    /// Run the two-amplifier generation protocol and grade its output
    Simulate(SimulateArgs),
    /// Run the verification suite and report per-check residuals
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    /// eigenstates of K3 - chi*K+, |chi| < 1
    #[value(name = "k3-kplus")]
    K3Kplus,
    /// eigenstates of K3 + chi*K-, finite ladders
    #[value(name = "k3-kminus")]
    K3Kminus,
    /// K1-K2 intelligent states, 0 < eta < 1
    #[value(name = "k1k2")]
    K1K2,
    /// K2-K3 intelligent states, eta > 0
    #[value(name = "k2k3")]
    K2K3,
}

/// Coupling flags shared by `state` and `moments`. Which of them apply
/// depends on the family, so presence is checked here rather than by clap.
#[derive(Args)]
struct CouplingArgs {
    /// Coupling magnitude |chi| (k3-kplus, k3-kminus)
    #[arg(long)]
    chi: Option<f64>,
    /// Coupling phase arg(chi) in radians
    #[arg(long)]
    theta: Option<f64>,
    /// Coupling eta (k1k2, k2k3)
    #[arg(long)]
    eta: Option<f64>,
}

impl CouplingArgs {
    fn family(&self, fam: FamilyArg) -> Result<Family, CliError> {
        match fam {
            FamilyArg::K3Kplus | FamilyArg::K3Kminus => {
                if self.eta.is_some() {
                    return Err(usage("--eta is not a parameter of the chi families"));
                }
                let mag = self
                    .chi
                    .ok_or_else(|| usage("this family needs --chi <magnitude>"))?;
                let chi = Complex64::from_polar(mag, self.theta.unwrap_or(0.0));
                Ok(match fam {
                    FamilyArg::K3Kplus => Family::K3MinusChiKPlus { chi },
                    _ => Family::K3PlusChiKMinus { chi },
                })
            }
            FamilyArg::K1K2 | FamilyArg::K2K3 => {
                if self.chi.is_some() || self.theta.is_some() {
                    return Err(usage("--chi/--theta are not parameters of the eta families"));
                }
                let eta = self.eta.ok_or_else(|| usage("this family needs --eta <value>"))?;
                Ok(match fam {
                    FamilyArg::K1K2 => Family::K1K2 { eta },
                    _ => Family::K2K3 { eta },
                })
            }
        }
    }
}

#[derive(Args)]
struct StateArgs {
    /// Eigenstate family
    #[arg(value_enum)]
    family: FamilyArg,
    /// Photon number of the ladder head; parity picks the sector, l = n/2
    #[arg(long)]
    n: u32,
    #[command(flatten)]
    coupling: CouplingArgs,
    /// Sector truncation for the amplitude ladder
    #[arg(long, default_value_t = fock::DEFAULT_N_MAX)]
    nmax: usize,
    /// Print every retained amplitude, including negligible ones
    #[arg(long)]
    dump: bool,
    /// Write the fixture here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MomentsArgs {
    /// Eigenstate family
    #[arg(value_enum)]
    family: FamilyArg,
    /// Photon number of the ladder head; parity picks the sector, l = n/2
    #[arg(long)]
    n: u32,
    #[command(flatten)]
    coupling: CouplingArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ParamArg {
    /// coupling magnitude |chi|
    #[value(name = "chi_mag")]
    ChiMag,
    /// coupling phase in radians; needs --chi for the fixed magnitude
    #[value(name = "theta")]
    Theta,
    /// eta coupling of the intelligent families
    #[value(name = "eta")]
    Eta,
    /// t = 1/|chi|^2 for the k3-kminus family
    #[value(name = "t")]
    T,
    /// u = 1/|chi| for the k3-kminus family
    #[value(name = "u")]
    U,
}

#[derive(Clone, Copy)]
struct RangeSpec {
    lo: f64,
    hi: f64,
}

fn parse_range(s: &str) -> Result<RangeSpec, String> {
    let (a, b) = s.split_once(':').ok_or("expected lo:hi")?;
    let lo: f64 = a.trim().parse().map_err(|e| format!("bad lower bound: {e}"))?;
    let hi: f64 = b.trim().parse().map_err(|e| format!("bad upper bound: {e}"))?;
    if !lo.is_finite() || !hi.is_finite() {
        return Err("range bounds must be finite".into());
    }
    if lo >= hi {
        return Err(format!("need lo < hi, got {lo}:{hi}"));
    }
    Ok(RangeSpec { lo, hi })
}

#[derive(Args)]
struct ScanArgs {
    /// Eigenstate family
    #[arg(long, value_enum)]
    family: FamilyArg,
    /// Photon number of the ladder head
    #[arg(long)]
    n: u32,
    /// Scan variable
    #[arg(long, value_enum)]
    param: ParamArg,
    /// Grid range lo:hi, endpoints included
    #[arg(long, value_parser = parse_range)]
    range: RangeSpec,
    /// Number of grid points, at least 2
    #[arg(long)]
    points: usize,
    /// Fixed |chi| for theta scans
    #[arg(long)]
    chi: Option<f64>,
    /// Fixed phase in radians for magnitude scans
    #[arg(long)]
    theta: Option<f64>,
    /// Write the CSV here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MeasureArg {
    A,
    B,
}

#[derive(Args)]
struct SimulateArgs {
    /// First-stage squeeze magnitude |xi1|
    #[arg(long)]
    xi1: f64,
    /// Mixing-stage magnitude |xi2|
    #[arg(long)]
    xi2: f64,
    /// First-stage pump phase in radians
    #[arg(long, default_value_t = 0.0)]
    theta1: f64,
    /// Mixing-stage pump phase in radians
    #[arg(long, default_value_t = 0.0)]
    theta2: f64,
    /// Which mode the photon counter watches
    #[arg(long, value_enum)]
    measure: MeasureArg,
    /// Counted photon number
    #[arg(long)]
    n: u32,
    /// Starting photon cutoff for the two-mode grid
    #[arg(long, default_value_t = 128)]
    nmax: usize,
}

#[derive(Args)]
struct VerifyArgs {
    /// Parameter-grid size for the check suite
    #[arg(long, value_enum, default_value = "small")]
    grid: checks::Grid,
    /// Golden fixture files to recheck against freshly built states
    #[arg(long = "fixture")]
    fixtures: Vec<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    /// Bad flags or parameters; exit code 2.
    Usage(String),
    /// A verification check failed; summary already printed, exit code 1.
    Check,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

impl From<MomentsError> for CliError {
    fn from(e: MomentsError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<StateError> for CliError {
    fn from(e: StateError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<SchemeError> for CliError {
    fn from(e: SchemeError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<fock::FockError> for CliError {
    fn from(e: fock::FockError) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    match run(&Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Check) => ExitCode::from(1),
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::State(a) => cmd_state(a),
        Command::Moments(a) => cmd_moments(a),
        Command::Scan(a) => cmd_scan(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Verify(a) => cmd_verify(a),
    }
}

/// Parity sector and ladder index of the head photon number n.
fn sector_of(n: u32) -> (Representation, u32) {
    let rep = if n.is_multiple_of(2) { Representation::Even } else { Representation::Odd };
    (rep, n / 2)
}

/// Builds the normalized sector ladder for a family point, doubling the
/// truncation on overflow up to [`fock::MAX_N_MAX`].
pub(crate) fn build_family_state(
    family: Family,
    rep: Representation,
    l: u32,
    n_max: usize,
) -> Result<FockVector, CliError> {
    let mut cap = n_max.clamp(8, fock::MAX_N_MAX);
    loop {
        let built = match family {
            Family::K3MinusChiKPlus { chi } => {
                states::build_state_beta_plus_zero(-chi, l, rep, cap)
            }
            _ => states::build_state_general(&family.beta(), l, EigenvalueSign::Plus, rep, cap),
        };
        match built {
            Ok(st) => return Ok(st.amps),
            Err(StateError::Fock(fock::FockError::TruncationTooSmall { .. }))
                if cap < fock::MAX_N_MAX =>
            {
                cap = (2 * cap).min(fock::MAX_N_MAX);
            }
            Err(e) => return Err(e.into()),
        }
    }
}

/// Fixture-header parameter field, `;`-separated key=value pairs.
pub(crate) fn family_params(family: &Family) -> String {
    match *family {
        Family::K3MinusChiKPlus { chi } | Family::K3PlusChiKMinus { chi } => {
            format!("chi_mag={};theta={}", chi.norm(), chi.arg())
        }
        Family::K1K2 { eta } | Family::K2K3 { eta } => format!("eta={eta}"),
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_state(a: &StateArgs) -> Result<(), CliError> {
    let family = a.coupling.family(a.family)?;
    family.validate()?;
    let (rep, l) = sector_of(a.n);
    let state = build_family_state(family, rep, l, a.nmax)?;
    let params = family_params(&family);
    let text = if a.dump {
        // serialize_fixture drops negligible entries; --dump keeps the ladder
        let mut out = format!("{},{},{},{}\n", state.rep.bargmann_k(), l, family.label(), params);
        for (n, amp) in state.amps.iter().enumerate() {
            out.push_str(&format!("{},{:.16e},{:.16e}\n", n, amp.re, amp.im));
        }
        out
    } else {
        fock::serialize_fixture(&state, l, family.label(), &params)
    };
    emit(&text, a.out.as_deref())
}

fn cmd_moments(a: &MomentsArgs) -> Result<(), CliError> {
    let family = a.coupling.family(a.family)?;
    let (rep, l) = sector_of(a.n);
    let report = moments::full_report(family, rep, l)?;
    print!("{}", render_report(&family, rep, l, &report));
    Ok(())
}

fn render_flags(f: &SqueezingFlags) -> String {
    let named = [
        (f.linear_squeezed_q, "linear_squeezed_q"),
        (f.linear_squeezed_p, "linear_squeezed_p"),
        (f.relative_quad_squeezed_k1, "relative_quad_squeezed_K1"),
        (f.relative_quad_squeezed_k2, "relative_quad_squeezed_K2"),
        (f.absolute_quad_squeezed_k1, "absolute_quad_squeezed_K1"),
        (f.absolute_quad_squeezed_k2, "absolute_quad_squeezed_K2"),
        (f.sub_poissonian, "sub_poissonian"),
    ];
    let set: Vec<&str> = named.iter().filter(|(on, _)| *on).map(|(_, name)| *name).collect();
    if set.is_empty() {
        "none".into()
    } else {
        set.join(", ")
    }
}

fn render_report(family: &Family, rep: Representation, l: u32, r: &MomentsReport) -> String {
    let ev = family.eigenvalue(rep, l);
    let mut out = String::new();
    out.push_str(&format!("{:<13} {}\n", "family", family.label()));
    out.push_str(&format!("{:<13} {}\n", "coupling", family_params(family).replace(';', ", ")));
    out.push_str(&format!(
        "{:<13} {} (k = {}), l = {}, head photon n = {}\n",
        "sector",
        rep.label(),
        rep.bargmann_k(),
        l,
        rep.photon_index(l as usize)
    ));
    out.push_str(&format!("{:<13} {:.16e} {:+.16e}i\n", "eigenvalue", ev.re, ev.im));
    let fields = [
        ("mean_K3", r.mean_k3),
        ("var_K3", r.var_k3),
        ("mean_K1", r.mean_k1),
        ("mean_K2", r.mean_k2),
        ("var_K1", r.var_k1),
        ("var_K2", r.var_k2),
        ("cov_AB", r.cov_ab),
        ("mean_N", r.mean_n),
        ("var_N", r.var_n),
    ];
    for (name, v) in fields {
        out.push_str(&format!("{name:<13} {v:.16e}\n"));
    }
    match r.g2 {
        Some(g) => out.push_str(&format!("{:<13} {:.16e}\n", "g2", g)),
        None => out.push_str(&format!("{:<13} inf (no photons at the ladder head)\n", "g2")),
    }
    for (name, v) in [
        ("var_q", r.var_q),
        ("var_p", r.var_p),
        ("delta0_sq", r.delta0_sq),
        ("sat_residual", r.sat_residual),
    ] {
        out.push_str(&format!("{name:<13} {v:.16e}\n"));
    }
    out.push_str(&format!("{:<13} {}\n", "flags", render_flags(&r.flags)));
    out
}

const CSV_HEADER: &str =
    "param,mean_K3,var_K3,mean_N,var_N,g2,var_q,var_p,var_K1,var_K2,sat_residual";

fn csv_cell(v: f64) -> String {
    format!("{v:.16e}")
}

/// Family at one grid point of the scanned variable. `Err` marks a point
/// where the coupling leaves the family's admissible set.
fn point_family(a: &ScanArgs, x: f64) -> Result<Family, String> {
    let fixed_theta = a.theta.unwrap_or(0.0);
    let chi_family = |chi: Complex64| match a.family {
        FamilyArg::K3Kplus => Family::K3MinusChiKPlus { chi },
        _ => Family::K3PlusChiKMinus { chi },
    };
    let fam = match a.param {
        ParamArg::ChiMag => chi_family(Complex64::from_polar(x, fixed_theta)),
        ParamArg::Theta => chi_family(Complex64::from_polar(a.chi.expect("checked"), x)),
        ParamArg::Eta => match a.family {
            FamilyArg::K1K2 => Family::K1K2 { eta: x },
            _ => Family::K2K3 { eta: x },
        },
        ParamArg::T => chi_family(Complex64::from_polar(1.0 / x.sqrt(), fixed_theta)),
        ParamArg::U => chi_family(Complex64::from_polar(1.0 / x, fixed_theta)),
    };
    fam.validate().map_err(|e| e.to_string())?;
    Ok(fam)
}

/// Rejects scans whose variable does not belong to the family, before any
/// grid point is evaluated.
fn check_scan_spec(a: &ScanArgs) -> Result<(), CliError> {
    let chi_family = matches!(a.family, FamilyArg::K3Kplus | FamilyArg::K3Kminus);
    match a.param {
        ParamArg::ChiMag => {
            if !chi_family {
                return Err(usage("chi_mag scans apply to the k3-kplus and k3-kminus families"));
            }
            if a.chi.is_some() {
                return Err(usage("a fixed --chi conflicts with a chi_mag scan"));
            }
        }
        ParamArg::Theta => {
            if !chi_family {
                return Err(usage("theta scans apply to the k3-kplus and k3-kminus families"));
            }
            let mag = a.chi.ok_or_else(|| usage("theta scans need --chi for the magnitude"))?;
            // the magnitude is fixed across the scan, so reject it upfront
            point_family(a, a.range.lo).map_err(|e| usage(format!("fixed --chi {mag}: {e}")))?;
        }
        ParamArg::Eta => {
            if chi_family {
                return Err(usage("eta scans apply to the k1k2 and k2k3 families"));
            }
            if a.chi.is_some() || a.theta.is_some() {
                return Err(usage("--chi/--theta are not parameters of the eta families"));
            }
        }
        ParamArg::T | ParamArg::U => {
            if a.family != FamilyArg::K3Kminus {
                return Err(usage("t and u scans apply to the k3-kminus family"));
            }
            if a.chi.is_some() {
                return Err(usage("a fixed --chi conflicts with a t or u scan"));
            }
            if a.range.lo <= 0.0 {
                return Err(usage("t and u scans need a strictly positive range"));
            }
        }
    }
    Ok(())
}

fn cmd_scan(a: &ScanArgs) -> Result<(), CliError> {
    if a.points < 2 {
        return Err(usage("--points must be at least 2"));
    }
    check_scan_spec(a)?;
    let (rep, l) = sector_of(a.n);
    let step = (a.range.hi - a.range.lo) / (a.points - 1) as f64;
    let mut csv = String::with_capacity((a.points + 1) * 16 * 24);
    csv.push_str(CSV_HEADER);
    csv.push('\n');
    for i in 0..a.points {
        // hit the upper endpoint exactly
        let x = if i + 1 == a.points { a.range.hi } else { a.range.lo + step * i as f64 };
        let report = point_family(a, x)
            .and_then(|fam| moments::full_report(fam, rep, l).map_err(|e| e.to_string()));
        let row = match report {
            Ok(r) => {
                let g2 = match r.g2 {
                    Some(g) => csv_cell(g),
                    None => {
                        eprintln!("note: param = {x}: g2 diverges (no photons at the ladder head)");
                        "nan".into()
                    }
                };
                format!(
                    "{},{},{},{},{},{},{},{},{},{},{}",
                    csv_cell(x),
                    csv_cell(r.mean_k3),
                    csv_cell(r.var_k3),
                    csv_cell(r.mean_n),
                    csv_cell(r.var_n),
                    g2,
                    csv_cell(r.var_q),
                    csv_cell(r.var_p),
                    csv_cell(r.var_k1),
                    csv_cell(r.var_k2),
                    csv_cell(r.sat_residual),
                )
            }
            Err(note) => {
                eprintln!("note: param = {x}: {note}");
                format!("{},nan,nan,nan,nan,nan,nan,nan,nan,nan,nan", csv_cell(x))
            }
        };
        csv.push_str(&row);
        csv.push('\n');
    }
    emit(&csv, a.out.as_deref())
}

fn cmd_simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let mode = match a.measure {
        MeasureArg::A => MeasuredMode::ModeA,
        MeasureArg::B => MeasuredMode::ModeB,
    };
    let p = SchemeParams::new(a.xi1, a.xi2, a.theta1, a.theta2, mode, a.n)?;
    let chi = scheme::chi_from_params(&p)?;
    let pt = PostTransform::from_scheme(&p)?;
    let outcome = scheme::simulate_protocol(&p, a.nmax)?;
    let shaped = scheme::apply_post_transform(&outcome.state, &pt)?;
    let (rep, l) = (p.rep(), p.l());

    let mut out = String::new();
    let mode_name = match mode {
        MeasuredMode::ModeA => "a",
        MeasuredMode::ModeB => "b",
    };
    out.push_str(&format!("{:<22} {}, outcome n = {}\n", "measured mode", mode_name, a.n));
    out.push_str(&format!(
        "{:<22} |chi| = {:.16e}, arg = {:.16e}\n",
        "coupling chi",
        chi.norm(),
        chi.arg()
    ));
    out.push_str(&format!("{:<22} {:.16e}\n", "outcome probability", outcome.probability));
    out.push_str(&format!("{:<22} {:.3e}\n", "conditional residual", outcome.residual));
    match pt.target_family() {
        Some(fam) => {
            let reference = build_family_state(fam, rep, l, shaped.n_max().max(96))?;
            let fidelity = shaped.fidelity(&reference);
            let measured = fock::oracle_moments(&shaped, &fam.defining_pair())?;
            out.push_str(&format!(
                "{:<22} {} ({})\n",
                "family",
                fam.label(),
                family_params(&fam).replace(';', ", ")
            ));
            out.push_str(&format!("{:<22} {:.16e}\n", "fidelity", fidelity));
            out.push_str(&format!("{:<22} {:.3e}\n", "saturation residual", measured.sat_residual));
        }
        None => {
            // chi = 0: the conditional state is the bare Fock state |n>
            let fidelity = shaped.amps.get(l as usize).map(|c| c.norm()).unwrap_or(0.0);
            out.push_str(&format!(
                "{:<22} none (chi = 0; the outcome is the Fock state |{}>)\n",
                "family", a.n
            ));
            out.push_str(&format!("{:<22} {:.16e}\n", "fidelity", fidelity));
        }
    }
    print!("{out}");
    Ok(())
}

fn cmd_verify(a: &VerifyArgs) -> Result<(), CliError> {
    if checks::run(a.grid, &a.fixtures) {
        Ok(())
    } else {
        Err(CliError::Check)
    }
}
