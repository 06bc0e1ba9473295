//! Subcommands. Each returns the process exit code on completion (0, or 1
//! when a verification fails) and a [`Failure`] otherwise.

use std::f64::consts::FRAC_1_PI;
use std::fmt::Write as _;

use clap::{Args, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use painleve::asymfit::{compare, fit_with, to_json, Discrepancy};
use painleve::connection::{dist_mod_pi, gamma_a_phase_matched, predict, Regime};
use painleve::critical::locate_critical;
use painleve::integrator::solve_ivp;
use painleve::monodromy::{default_lambda_max, default_lambda_min, extract_q, MonodromyRecord};
use painleve::transforms::{
    linear_grid, pair_roundtrip, piii6_defect, pv4_defect, pv8_defect, report_states, residual_piii6,
    residual_pv4, residual_pv8, Equation, ResidualReport, State,
};
use painleve::Error;

use crate::record::Sink;

pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidArgument(_) | Error::OutOfRange(_) => 1,
            _ => 2,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure { code: 2, message: format!("i/o: {e}") }
    }
}

fn bad_flag(message: String) -> Failure {
    Failure { code: 1, message }
}

type Outcome = Result<i32, Failure>;

#[derive(Subcommand)]
pub enum Cmd {
    /// Integrate from the origin series and write the trajectory.
    #[command(allow_negative_numbers = true)]
    Solve(SolveArgs),
    /// Fit `±x + β ln x + γ` on doubling windows and compare with the formulas.
    #[command(allow_negative_numbers = true)]
    Fit(FitArgs),
    /// Regime, β and γ from the connection formulas.
    #[command(allow_negative_numbers = true)]
    Predict(PredictArgs),
    /// Residuals of the Painlevé V/III forms along a trajectory, with perturbed controls.
    #[command(allow_negative_numbers = true)]
    VerifyTransforms(TransformArgs),
    /// Bisection for the separatrix parameter.
    #[command(alias = "critical-scan", allow_negative_numbers = true)]
    Critical(CriticalArgs),
    /// Connection matrix of the Lax pair at one or more x.
    #[command(allow_negative_numbers = true)]
    Monodromy(MonodromyArgs),
    /// Solve, fit and compare over a grid of a.
    #[command(allow_negative_numbers = true)]
    Verify(VerifyArgs),
}

#[derive(Args, Serialize)]
pub struct SolveArgs {
    #[arg(long)]
    a: f64,
    #[arg(long, default_value_t = 100.0)]
    x_max: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Also resample on this many uniform points.
    #[arg(long)]
    grid: Option<usize>,
}

#[derive(Args, Serialize)]
pub struct FitArgs {
    #[arg(long)]
    a: f64,
    #[arg(long, default_value_t = 100.0)]
    x_lo: f64,
    #[arg(long, default_value_t = 3)]
    windows: usize,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    /// Add a 1/x regressor.
    #[arg(long)]
    refined: bool,
}

#[derive(Args, Serialize)]
pub struct PredictArgs {
    #[arg(long)]
    a: f64,
}

#[derive(Args, Serialize)]
pub struct TransformArgs {
    #[arg(long, default_value_t = 0.2)]
    a: f64,
    #[arg(long, default_value_t = 2.0)]
    lo: f64,
    #[arg(long, default_value_t = 20.0)]
    hi: f64,
    /// Number of grid points on [lo, hi].
    #[arg(long, default_value_t = 361)]
    grid: usize,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

#[derive(Args, Serialize)]
pub struct CriticalArgs {
    #[arg(long, default_value_t = 0.1)]
    lo: f64,
    #[arg(long, default_value_t = 1.0)]
    hi: f64,
    /// Bisection tolerance in a.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Initial classification horizon.
    #[arg(long, default_value_t = 200.0)]
    x_max: f64,
}

#[derive(Args, Serialize)]
pub struct MonodromyArgs {
    #[arg(long, default_value_t = 0.2)]
    a: f64,
    /// Repeat for several points; the first is the reference for the constancy defect.
    #[arg(long = "x", required = true)]
    x: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Defaults to 400/x².
    #[arg(long)]
    lambda_max: Option<f64>,
    /// Defaults to 1e-3/x.
    #[arg(long)]
    lambda_min: Option<f64>,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
}

#[derive(Args, Serialize)]
pub struct VerifyArgs {
    /// Comma-separated values of a.
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.15,0.25,0.35,0.5,1.0")]
    grid: Vec<f64>,
    #[arg(long, default_value_t = 1e-3)]
    beta_tol: f64,
    #[arg(long, default_value_t = 1e-2)]
    gamma_tol: f64,
    #[arg(long, default_value_t = 100.0)]
    x_lo: f64,
    #[arg(long, default_value_t = 3)]
    windows: usize,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
}

impl Cmd {
    pub fn name(&self) -> &'static str {
        match self {
            Cmd::Solve(_) => "solve",
            Cmd::Fit(_) => "fit",
            Cmd::Predict(_) => "predict",
            Cmd::VerifyTransforms(_) => "verify-transforms",
            Cmd::Critical(_) => "critical",
            Cmd::Monodromy(_) => "monodromy",
            Cmd::Verify(_) => "verify",
        }
    }

    pub fn parameters(&self) -> Value {
        let v = match self {
            Cmd::Solve(a) => serde_json::to_value(a),
            Cmd::Fit(a) => serde_json::to_value(a),
            Cmd::Predict(a) => serde_json::to_value(a),
            Cmd::VerifyTransforms(a) => serde_json::to_value(a),
            Cmd::Critical(a) => serde_json::to_value(a),
            Cmd::Monodromy(a) => serde_json::to_value(a),
            Cmd::Verify(a) => serde_json::to_value(a),
        };
        v.expect("arguments serialize")
    }

    pub fn run(&self, sink: &mut Sink) -> Outcome {
        match self {
            Cmd::Solve(a) => solve(a, sink),
            Cmd::Fit(a) => fit(a, sink),
            Cmd::Predict(a) => predict_cmd(a, sink),
            Cmd::VerifyTransforms(a) => verify_transforms(a, sink),
            Cmd::Critical(a) => critical(a, sink),
            Cmd::Monodromy(a) => monodromy(a, sink),
            Cmd::Verify(a) => verify(a, sink),
        }
    }
}

fn pretty<T: Serialize>(v: &T) -> Vec<u8> {
    serde_json::to_vec_pretty(v).expect("serializable")
}

fn e17(v: f64) -> String {
    format!("{v:.16e}")
}

fn solve(args: &SolveArgs, sink: &mut Sink) -> Outcome {
    let tr = solve_ivp(args.a, args.x_max, args.tol)?;
    let tag = format!("a{}", args.a);
    let mut csv = Vec::new();
    tr.write_csv(&mut csv)?;
    sink.write(&format!("solve_{tag}.csv"), &csv)?;
    let mut dat = String::new();
    for (x, p) in tr.xs.iter().zip(&tr.phis) {
        writeln!(dat, "{} {}", e17(*x), e17(*p)).unwrap();
    }
    sink.write(&format!("solve_{tag}.dat"), dat.as_bytes())?;
    if let Some(n) = args.grid {
        if n < 2 {
            return Err(bad_flag(format!("--grid needs at least 2 points, got {n}")));
        }
        let mut g = String::from("x,phi,dphi\n");
        for x in linear_grid(tr.seed_x0, tr.x_max(), n) {
            let (p, dp, _) = tr.dense_eval(x)?;
            writeln!(g, "{},{},{}", e17(x), e17(p), e17(dp)).unwrap();
        }
        sink.write(&format!("solve_{tag}_grid.csv"), g.as_bytes())?;
    }
    let n = tr.xs.len() - 1;
    let summary = json!({
        "a": tr.a,
        "x_max": tr.x_max(),
        "tol": tr.tol,
        "nodes": tr.xs.len(),
        "phi_end": tr.phis[n],
        "dphi_end": tr.dphis[n],
        "crossings": tr.crossings,
    });
    sink.write(&format!("solve_{tag}.json"), &pretty(&summary))?;
    println!("a = {}: {} nodes on [{}, {}], {} crossings of multiples of pi", tr.a, tr.xs.len(), tr.seed_x0, tr.x_max(), tr.crossings.len());
    println!("phi({}) = {}, phi' = {}", tr.x_max(), e17(tr.phis[n]), e17(tr.dphis[n]));
    Ok(0)
}

fn fit(args: &FitArgs, sink: &mut Sink) -> Outcome {
    if args.windows < 2 || !(args.x_lo > 0.0) {
        return Err(bad_flag(format!("need --x-lo > 0 and --windows >= 2, got {} and {}", args.x_lo, args.windows)));
    }
    let top = args.x_lo * 2f64.powi(args.windows as i32);
    let tr = solve_ivp(args.a, top, args.tol)?;
    let f = fit_with(&tr, args.x_lo, args.windows, args.refined)?;
    let pred = predict(args.a);
    sink.write(&format!("fit_a{}.json", args.a), to_json(&f).as_bytes())?;
    println!("sigma = {:+}, beta_fit = {}, gamma_fit = {}, drift = {:.3e}", f.sigma, e17(f.beta_fit), e17(f.gamma_fit), f.drift);
    for w in &f.windows {
        println!("  [{}, {}]: beta = {}, gamma = {}", w.x_lo, w.x_hi, e17(w.beta), e17(w.gamma));
    }
    let d = compare(&f, &pred)?;
    sink.write(&format!("fit_a{}_compare.json", args.a), &pretty(&json!({ "prediction": pred, "discrepancy": d })))?;
    println!("|beta_fit - beta| = {:.3e}, gamma distance ({:?}) = {:.3e}", d.beta, d.gamma_mod, d.gamma);
    Ok(0)
}

fn predict_cmd(args: &PredictArgs, sink: &mut Sink) -> Outcome {
    let p = predict(args.a);
    match p.regime {
        Regime::A => println!("regime A (a > 1/pi): phi ~ -x + beta ln x + gamma, gamma modulo pi"),
        Regime::B => println!("regime B (a < 1/pi): phi ~ x + beta ln x + gamma"),
        Regime::C => println!("regime C (a = 1/pi): phi increases to a finite limit"),
    }
    if let (Some(b), Some(g)) = (p.beta, p.gamma) {
        println!("beta = {}", e17(b));
        println!("gamma = {}", e17(g));
    }
    if let Some(l) = p.limit_value {
        println!("limit = {}", e17(l));
    }
    sink.write(&format!("predict_a{}.json", args.a), &pretty(&p))?;
    Ok(0)
}

struct Check {
    name: &'static str,
    value: f64,
    bound: f64,
    at_most: bool,
}

impl Check {
    fn ok(&self) -> bool {
        if self.at_most {
            self.value <= self.bound
        } else {
            self.value >= self.bound
        }
    }
}

fn verify_transforms(args: &TransformArgs, sink: &mut Sink) -> Outcome {
    if !(args.lo < args.hi) || args.grid < 2 {
        return Err(bad_flag(format!("need --lo < --hi and --grid >= 2, got {}, {}, {}", args.lo, args.hi, args.grid)));
    }
    let tr = solve_ivp(args.a, args.hi, args.tol)?;
    let grid = linear_grid(args.lo, args.hi, args.grid);
    let reports: [(&str, ResidualReport); 4] = [
        ("pv4", residual_pv4(&tr, &grid)?),
        ("piii6", residual_piii6(&tr, &grid)?),
        ("pv8", residual_pv8(&tr, &grid)?),
        ("pair7", pair_roundtrip(&tr, &grid)?),
    ];
    for (name, r) in &reports {
        let mut csv = Vec::new();
        r.write_csv(&mut csv)?;
        sink.write(&format!("residual_{name}_a{}.csv", args.a), &csv)?;
    }
    let mut pert = Vec::with_capacity(grid.len());
    for &x in &grid {
        pert.push(State::on(&tr, x)?.perturbed(1e-3));
    }
    let checks = [
        Check { name: "PV4 relative", value: reports[0].1.rel_norm, bound: 1e-6, at_most: true },
        Check { name: "PIII6 relative", value: reports[1].1.rel_norm, bound: 1e-6, at_most: true },
        Check { name: "PV8 relative", value: reports[2].1.rel_norm, bound: 1e-6, at_most: true },
        Check { name: "pair round trip", value: reports[3].1.norm, bound: 1e-8, at_most: true },
        Check { name: "PV4 control", value: report_states(&pert, Equation::PV4, pv4_defect).norm, bound: 1e-2, at_most: false },
        Check { name: "PIII6 control", value: report_states(&pert, Equation::PIII6, piii6_defect).norm, bound: 1e-2, at_most: false },
        Check { name: "PV8 control", value: report_states(&pert, Equation::PV8, pv8_defect).norm, bound: 1e-2, at_most: false },
    ];
    let mut rows = Vec::new();
    for c in &checks {
        let rel = if c.at_most { "<=" } else { ">=" };
        println!("{:<16} {:.3e} {rel} {:.0e}  {}", c.name, c.value, c.bound, if c.ok() { "PASS" } else { "FAIL" });
        rows.push(json!({ "check": c.name, "value": c.value, "bound": c.bound, "pass": c.ok() }));
    }
    sink.write(&format!("verify_transforms_a{}.json", args.a), &pretty(&rows))?;
    Ok(if checks.iter().all(Check::ok) { 0 } else { 1 })
}

fn critical(args: &CriticalArgs, sink: &mut Sink) -> Outcome {
    let s = locate_critical(args.lo, args.hi, args.x_max, args.tol)?;
    let mut csv = Vec::new();
    s.write_csv(&mut csv)?;
    sink.write("critical_trace.csv", &csv)?;
    let d = (s.a_star - FRAC_1_PI).abs();
    sink.write("critical.json", &pretty(&json!({ "search": s, "distance_to_one_over_pi": d })))?;
    println!("a* = {:.6} ({}), |a* - 1/pi| = {d:.3e}, {} steps, X up to {}", s.a_star, e17(s.a_star), s.trace.len() - 1, s.x_max_used);
    Ok(0)
}

fn monodromy(args: &MonodromyArgs, sink: &mut Sink) -> Outcome {
    if args.x.iter().any(|&x| !(x > 0.0)) {
        return Err(bad_flag("every --x must be positive".into()));
    }
    let top = args.x.iter().cloned().fold(0.0, f64::max) + 1.0;
    let tr = solve_ivp(args.a, top, args.tol)?;
    let mut recs: Vec<MonodromyRecord> = Vec::new();
    for &x in &args.x {
        let lmax = args.lambda_max.unwrap_or_else(|| default_lambda_max(x));
        let lmin = args.lambda_min.unwrap_or_else(|| default_lambda_min(x));
        let r = extract_q(&tr, x, args.c, lmax, lmin)?;
        sink.write(&format!("monodromy_a{}_x{}.json", args.a, x), r.to_json().as_bytes())?;
        println!("x = {x}: lambda in [{:.3e}, {:.3e}], truncation {:.2e}, Wronskian drift {:.2e}", r.lambda_min, r.lambda_max, r.truncation_estimate, r.wronskian_drift);
        for (i, row) in r.q.iter().enumerate() {
            for (j, q) in row.iter().enumerate() {
                println!("  Q{}{} = {} {:+e}i", i + 1, j + 1, e17(q.re), q.im);
            }
        }
        println!("  |Q21| / (2^(-3/4) sqrt(a pi)) = {}", r.q21_ratio);
        if let Some(first) = recs.first() {
            println!("  constancy defect vs x = {}: {:.3e}", first.x, first.relative_difference(&r));
        }
        recs.push(r);
    }
    Ok(0)
}

#[derive(Serialize)]
struct Row {
    a: f64,
    regime: Option<Regime>,
    beta_fit: Option<f64>,
    beta: Option<f64>,
    gamma_fit: Option<f64>,
    gamma: Option<f64>,
    discrepancy: Option<Discrepancy>,
    /// Regime A only: distance to the phase-matched γ, modulo π.
    gamma_phase_matched: Option<f64>,
    pass: bool,
    error: Option<String>,
}

fn verify_row(a: f64, args: &VerifyArgs) -> Row {
    let pred = predict(a);
    let mut row = Row {
        a,
        regime: Some(pred.regime),
        beta_fit: None,
        beta: pred.beta,
        gamma_fit: None,
        gamma: pred.gamma,
        discrepancy: None,
        gamma_phase_matched: None,
        pass: false,
        error: None,
    };
    let top = args.x_lo * 2f64.powi(args.windows as i32);
    let res = solve_ivp(a, top, args.tol)
        .and_then(|tr| fit_with(&tr, args.x_lo, args.windows, true))
        .and_then(|f| compare(&f, &pred).map(|d| (f, d)));
    match res {
        Ok((f, d)) => {
            row.beta_fit = Some(f.beta_fit);
            row.gamma_fit = Some(f.gamma_fit);
            if pred.regime == Regime::A {
                row.gamma_phase_matched = Some(dist_mod_pi(f.gamma_fit, gamma_a_phase_matched(f.beta_fit)));
            }
            row.pass = d.passes(args.beta_tol, args.gamma_tol);
            row.discrepancy = Some(d);
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".into(), e17)
}

fn verify(args: &VerifyArgs, sink: &mut Sink) -> Outcome {
    if args.grid.is_empty() {
        return Err(bad_flag("empty --grid".into()));
    }
    if let Some(a) = args.grid.iter().find(|&&a| (a - FRAC_1_PI).abs() < 1e-3) {
        return Err(bad_flag(format!("grid value {a} is within 1e-3 of 1/pi")));
    }
    if args.windows < 2 || !(args.x_lo > 0.0) {
        return Err(bad_flag(format!("need --x-lo > 0 and --windows >= 2, got {} and {}", args.x_lo, args.windows)));
    }
    let mut rows: Vec<Row> = args.grid.par_iter().map(|&a| verify_row(a, args)).collect();
    rows.sort_by(|p, q| p.a.total_cmp(&q.a));
    let mut csv = String::from("a,regime,beta_fit,beta,dbeta,gamma_fit,gamma,dgamma,dgamma_phase_matched,pass\n");
    println!("{:>8} {:>6} {:>10} {:>10} {:>10}  result", "a", "regime", "dbeta", "dgamma", "dgamma_pm");
    for r in &rows {
        let (db, dg) = r.discrepancy.map_or((None, None), |d| (Some(d.beta), Some(d.gamma)));
        let regime = r.regime.map_or("-".into(), |g| format!("{g:?}"));
        writeln!(
            csv,
            "{},{regime},{},{},{},{},{},{},{},{}",
            e17(r.a),
            opt(r.beta_fit),
            opt(r.beta),
            opt(db),
            opt(r.gamma_fit),
            opt(r.gamma),
            opt(dg),
            opt(r.gamma_phase_matched),
            r.pass
        )
        .unwrap();
        let show = |v: Option<f64>| v.map_or("-".into(), |v| format!("{v:.3e}"));
        println!(
            "{:>8} {:>6} {:>10} {:>10} {:>10}  {}{}",
            r.a,
            regime,
            show(db),
            show(dg),
            show(r.gamma_phase_matched),
            if r.pass { "PASS" } else { "FAIL" },
            r.error.as_deref().map_or(String::new(), |e| format!(" ({e})"))
        );
    }
    sink.write("verify.csv", csv.as_bytes())?;
    sink.write("verify.json", &pretty(&rows))?;
    let passed = rows.iter().filter(|r| r.pass).count();
    println!("{passed} of {} rows pass (beta tol {:e}, gamma tol {:e})", rows.len(), args.beta_tol, args.gamma_tol);
    Ok(if passed == rows.len() { 0 } else { 1 })
}
