//! `mu-deriv`: command-line driver for the mu-invariant verification.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use muderiv::cm;
use muderiv::fourier::{self, Context, PosRat, Verdict, VerifyOptions, WitnessTarget};
use muderiv::hecke::{build_selfdual_char, twist_conductor, CharSpec, GlobalHeckeChar, Twist};
use muderiv::local::{self, FactorFamily, FactorKind, LocalElement, LocalFactor};
use muderiv::quad::{QuadField, SplitKind};
use muderiv::{Error, HypothesisError};

/// Exit codes. Hypothesis gates each get their own code.
mod code {
    pub const OK: u8 = 0;
    pub const NOT_EQUAL: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const RUNTIME: u8 = 3;
    pub const IO: u8 = 4;
    pub const BAD_PRIME: u8 = 10;
    pub const HYPOTHESIS_ORD: u8 = 11;
    pub const DIVIDES_H: u8 = 12;
    pub const DIVIDES_UNITS: u8 = 13;
    pub const ROOT_NUMBER_PLUS: u8 = 14;
    pub const CLASS_NUMBER: u8 = 15;
    pub const ROOT_NUMBER_MISMATCH: u8 = 16;
    pub const CONDUCTOR_MEETS_P: u8 = 17;
    pub const UNSUPPORTED: u8 = 18;
    pub const NO_CHARACTER: u8 = 19;
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Hypothesis(h) => match h {
            HypothesisError::BadPrime(_) => code::BAD_PRIME,
            HypothesisError::NotSplit { .. } => code::HYPOTHESIS_ORD,
            HypothesisError::DividesClassNumber { .. } => code::DIVIDES_H,
            HypothesisError::DividesUnits(_) => code::DIVIDES_UNITS,
            HypothesisError::RootNumberPlusOne => code::ROOT_NUMBER_PLUS,
            HypothesisError::ClassNumberNotOne(_) => code::CLASS_NUMBER,
            HypothesisError::RootNumberMismatch { .. } => code::ROOT_NUMBER_MISMATCH,
        },
        Error::ConductorMeetsP(_) => code::CONDUCTOR_MEETS_P,
        Error::Unsupported(_) => code::UNSUPPORTED,
        Error::NoSelfDualCharacter(_) => code::NO_CHARACTER,
        Error::InvalidInput(_) => code::USAGE,
        _ => code::RUNTIME,
    }
}

#[derive(Parser)]
#[command(name = "mu-deriv", version, about = "mu-invariants of derivatives of anticyclotomic Katz p-adic L-functions")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full check and write a certificate.
    Verify(VerifyArgs),
    /// Print the mu-invariant ledger and its minimum.
    Rhs(RunArgs),
    /// Construct a witness coefficient.
    Witness(WitnessArgs),
    /// Local table at one place.
    Local(LocalArgs),
    /// q-expansion of the CM form as CSV.
    Qexp(QexpArgs),
    /// Integral ideals up to a norm bound as CSV.
    Ideals(IdealArgs),
}

/// Character selection. A spec file or config file fills unset flags.
#[derive(Args, Clone, Default)]
struct CharArgs {
    /// `d` in K = Q(sqrt(-d)).
    #[arg(long)]
    d: Option<u64>,
    /// Odd infinity type.
    #[arg(long)]
    k: Option<u32>,
    /// canonical, conj, genus:D or conj,genus:D.
    #[arg(long)]
    twist: Option<String>,
    /// Character spec JSON: {"d","k","conductor":[[l,e]],"twist"}.
    #[arg(long = "char")]
    char_file: Option<PathBuf>,
    /// Run config JSON with any of the flag names as keys.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct RunArgs {
    #[command(flatten)]
    ch: CharArgs,
    #[arg(long)]
    p: Option<u64>,
    #[arg(long)]
    precision: Option<u32>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long = "beta-bound")]
    beta_bound: Option<u64>,
    /// Skip the functional-equation probe gate.
    #[arg(long)]
    no_probe: bool,
    /// Skip the 2B stabilization run.
    #[arg(long)]
    no_double: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct WitnessArgs {
    #[command(flatten)]
    run: RunArgs,
    /// `global`, or a rational prime below c^-.
    #[arg(long, default_value = "global")]
    target: String,
    #[arg(long = "beta-bound")]
    beta_bound: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LocalArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Rational prime below the place.
    #[arg(long)]
    place: u64,
    /// Sample of beta values (comma separated, `n` or `n/m`).
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    beta: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct QexpArgs {
    #[command(flatten)]
    ch: CharArgs,
    #[arg(long, default_value_t = 100)]
    bound: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct IdealArgs {
    #[arg(long)]
    d: u64,
    #[arg(long, default_value_t = 100)]
    bound: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    d: Option<u64>,
    p: Option<u64>,
    k: Option<u32>,
    conductor: Option<Vec<(u64, u32)>>,
    twist: Option<String>,
    beta_bound: Option<u64>,
    precision: Option<u32>,
    out: Option<PathBuf>,
    /// Only used by randomized property tests; accepted for completeness.
    #[allow(dead_code)]
    seed: Option<u64>,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

fn load_config(ch: &CharArgs) -> Result<RunConfig, Error> {
    match &ch.config {
        Some(path) => read_json(path),
        None => Ok(RunConfig::default()),
    }
}

fn character(ch: &CharArgs, cfg: &RunConfig) -> Result<GlobalHeckeChar, Error> {
    if let Some(path) = &ch.char_file {
        let spec: CharSpec = read_json(path)?;
        return spec.build();
    }
    let d = ch.d.or(cfg.d).ok_or_else(|| Error::InvalidInput("--d is required".into()))?;
    let k = ch.k.or(cfg.k).unwrap_or(1);
    let label = ch.twist.clone().or_else(|| cfg.twist.clone()).unwrap_or_else(|| "canonical".into());
    let twist = Twist::parse(&label)?;
    let field = QuadField::new(d)?;
    let conductor = cfg.conductor.clone().unwrap_or_else(|| twist_conductor(d, twist));
    build_selfdual_char(&field, k, &conductor, twist)
}

struct Run {
    lam: GlobalHeckeChar,
    p: u64,
    prec: u32,
    cfg: RunConfig,
}

fn run_setup(args: &RunArgs) -> Result<Run, Error> {
    let cfg = load_config(&args.ch)?;
    let lam = character(&args.ch, &cfg)?;
    let p = args.p.or(cfg.p).ok_or_else(|| Error::InvalidInput("--p is required".into()))?;
    let prec = args.precision.or(cfg.precision).unwrap_or(muderiv::padic::DEFAULT_PRECISION);
    if prec < 12 {
        return Err(Error::InvalidInput(format!("precision {prec} is below the minimum of 12")));
    }
    Ok(Run { lam, p, prec, cfg })
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), u8> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| {
            eprintln!("error: {}: {e}", path.display());
            code::IO
        }),
        None => io::stdout().write_all(text.as_bytes()).map_err(|_| code::IO),
    }
}

fn fail(e: &Error) -> u8 {
    eprintln!("error: {e}");
    exit_code(e)
}

fn pretty<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializes");
    s.push('\n');
    s
}

fn cmd_verify(a: VerifyArgs) -> Result<u8, u8> {
    let run = run_setup(&a.run).map_err(|e| fail(&e))?;
    let opts = VerifyOptions {
        bound: a.beta_bound.or(run.cfg.beta_bound).unwrap_or(500),
        prec: run.prec,
        probe: !a.no_probe,
        check_double: !a.no_double,
    };
    let out = a.out.clone().or(run.cfg.out.clone());
    match fourier::verify_mu_equality(&run.lam, run.p, &opts) {
        Ok(cert) => {
            emit(out.as_deref(), &cert.to_json())?;
            if cert.verdict == Verdict::Equal {
                Ok(code::OK)
            } else {
                eprintln!("verdict: not equal ({})", cert.failure.as_deref().unwrap_or("unknown"));
                Ok(code::NOT_EQUAL)
            }
        }
        Err((e, cert)) => {
            emit(out.as_deref(), &cert.to_json())?;
            Err(fail(&e))
        }
    }
}

fn cmd_rhs(a: RunArgs) -> Result<u8, u8> {
    let run = run_setup(&a).map_err(|e| fail(&e))?;
    let ledger = fourier::mu_formula_rhs(&run.lam, run.p).map_err(|e| fail(&e))?;
    emit(None, &pretty(&ledger))?;
    Ok(code::OK)
}

fn cmd_witness(a: WitnessArgs) -> Result<u8, u8> {
    let run = run_setup(&a.run).map_err(|e| fail(&e))?;
    let target = match a.target.as_str() {
        "global" => WitnessTarget::Global,
        s => WitnessTarget::Place(
            s.parse().map_err(|_| fail(&Error::InvalidInput(format!("target {s:?} is not global or a prime"))))?,
        ),
    };
    let bound = a.beta_bound.or(run.cfg.beta_bound).unwrap_or(500);
    let ctx = Context::new(&run.lam, run.p, run.prec).map_err(|e| fail(&e))?;
    let w = fourier::construct_witness(&ctx, target, bound).map_err(|e| fail(&e))?;
    let coeff = ctx.assemble(&w.point).map_err(|e| fail(&e))?;
    let body = serde_json::json!({
        "character": run.lam.label(),
        "p": run.p,
        "witness": w,
        "derivative": coeff.deriv_total,
    });
    emit(a.out.as_deref(), &pretty(&body))?;
    Ok(code::OK)
}

fn parse_beta(s: &str) -> Result<PosRat, Error> {
    let bad = || Error::InvalidInput(format!("beta {s:?} is not a positive rational"));
    let num = |x: &str| x.trim().parse::<u64>().ok().filter(|&v| v > 0).ok_or_else(bad);
    Ok(match s.split_once('/') {
        Some((n, d)) => PosRat::new(num(n)?, num(d)?),
        None => PosRat::int(num(s)?),
    })
}

fn local_factor(lam: &GlobalHeckeChar, place: u64, beta: PosRat, p: u64, prec: u32) -> Result<LocalFactor, Error> {
    let places = lam.places_above(place);
    let lc = lam.local_component(places[0])?;
    let n = beta.valuation(place);
    let mut f = match places[0].kind {
        SplitKind::Ramified => {
            let eps = local::eps_factor(lam, &lc, 0)?;
            let eta = LocalElement { m: n, u: beta.unit_residue(place) };
            local::whittaker_a_ramified(lam, &lc, eta, &eps, p, prec, true)?
        }
        SplitKind::Inert if lc.is_ramified() => {
            local::whittaker_a_inert(&lc, LocalElement { m: n, u: beta.unit_residue(place) }, p, prec, true)?
        }
        SplitKind::Inert => local::whittaker_a_deriv(n, &lc, p, prec)?,
        SplitKind::Split => {
            let fam = FactorFamily::SplitA { ell: place, n };
            LocalFactor::new(place.to_string(), FactorKind::ASplit, fam, p, prec, true)?
        }
    };
    f.place = format!("{place}@{beta}");
    Ok(f)
}

fn cmd_local(a: LocalArgs) -> Result<u8, u8> {
    let run = run_setup(&a.run).map_err(|e| fail(&e))?;
    let (lam, p, prec, ell) = (&run.lam, run.p, run.prec, a.place);
    let table = (|| -> Result<String, Error> {
        let places = lam.places_above(ell);
        let lc = lam.local_component(places[0])?;
        let xi = local::lambda_star_xi(lam, ell)?;
        let w = local::local_root_number(&lc, xi);
        let mut s = format!(
            "# place={ell} kind={} cond_exp={} lambda_star_xi={xi} root_number={w}",
            places[0].kind,
            local::cond_exponent(&lc)
        );
        if lam.conductor_minus().contains(&ell) {
            s.push_str(&format!(" mu_p={}", local::mu_p_local(&lc, p)));
        }
        s.push_str(&format!(" log_ratio_valuation={}\n", local::log_ratio_valuation(ell, p)));
        let mut factors = Vec::new();
        for b in &a.beta {
            factors.push(local_factor(lam, ell, parse_beta(b)?, p, prec)?);
        }
        let mut buf = Vec::new();
        local::write_factor_csv(&factors, &mut buf).expect("in-memory write");
        s.push_str(&String::from_utf8(buf).expect("utf8"));
        Ok(s)
    })()
    .map_err(|e| fail(&e))?;
    emit(a.out.as_deref(), &table)?;
    Ok(code::OK)
}

fn cmd_qexp(a: QexpArgs) -> Result<u8, u8> {
    let cfg = load_config(&a.ch).map_err(|e| fail(&e))?;
    let lam = character(&a.ch, &cfg).map_err(|e| fail(&e))?;
    let f = cm::q_expansion(&lam, a.bound).map_err(|e| fail(&e))?;
    let mut buf = Vec::new();
    f.write_csv(&mut buf).expect("in-memory write");
    emit(a.out.as_deref(), &String::from_utf8(buf).expect("utf8"))?;
    Ok(code::OK)
}

fn cmd_ideals(a: IdealArgs) -> Result<u8, u8> {
    let field = QuadField::new(a.d).map_err(|e| fail(&e))?;
    let mut buf = Vec::new();
    field.write_ideals_csv(&field.ideals_up_to_norm(a.bound), &mut buf).expect("in-memory write");
    emit(a.out.as_deref(), &String::from_utf8(buf).expect("utf8"))?;
    Ok(code::OK)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match cli.cmd {
        Command::Verify(a) => cmd_verify(a),
        Command::Rhs(a) => cmd_rhs(a),
        Command::Witness(a) => cmd_witness(a),
        Command::Local(a) => cmd_local(a),
        Command::Qexp(a) => cmd_qexp(a),
        Command::Ideals(a) => cmd_ideals(a),
    };
    ExitCode::from(r.unwrap_or_else(|c| c))
}

