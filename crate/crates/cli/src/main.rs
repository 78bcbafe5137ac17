use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64 as C;
use serde_json::{json, Value};

use kzb_core::connection::{
    curvature, g_reg, gauge_transform, gauss_manin, nu1_alg, nu1_naive, nu1_reg, omega_alg, omega_reg, Connection, GaugeFun,
};
use kzb_core::elliptic::{p_k_poly, p_poly, q_n_poly, r_n_fun};
use kzb_core::freelie::{basis, Derivation, LieElt};
use kzb_core::gauge::{solve_gauge, GaugeProblem, Mode as SolveMode, Outcome};
use kzb_core::oracle;
use kzb_core::{Curve, CurveFun, CurvePoly, Rat};

/// Largest truncation degree accepted on the command line.
const MAX_DEGREE: usize = 8;

#[derive(Parser)]
#[command(name = "kzb", version, about = "Exact algebraic elliptic KZB connections")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Model {
    GaussManin,
    OmegaAlg,
    OmegaReg,
    NuNaive,
    NuAlg,
    NuReg,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Inner,
    Full,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Table {
    Pk,
    Qn,
    Rn,
    P2m,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    Symbolic,
    Numeric,
}

#[derive(clap::Args)]
struct Common {
    /// Truncation degree.
    #[arg(long, default_value_t = 5)]
    degree: usize,
    /// Restrict to the fiber y^2 = 4x^3 - u0 x - v0.
    #[arg(long, num_args = 2, value_names = ["U0", "V0"], allow_negative_numbers = true)]
    fiber: Option<Vec<String>>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Print a connection form.
    EmitConnection {
        #[arg(long, value_enum)]
        model: Model,
        #[command(flatten)]
        common: Common,
    },
    /// Print the curvature of a connection form.
    Curvature {
        #[arg(long, value_enum)]
        model: Model,
        #[command(flatten)]
        common: Common,
    },
    /// Pole order and residue at the identity section.
    Residue {
        #[arg(long, value_enum)]
        model: Model,
        #[command(flatten)]
        common: Common,
    },
    /// Search for a gauge from the naive to the algebraic form on a fiber.
    SolveGauge {
        #[arg(long, value_enum, default_value_t = Mode::Full)]
        mode: Mode,
        #[command(flatten)]
        common: Common,
    },
    /// Tables of P_k, q_n, r_n or p_{2m}.
    Tables {
        #[arg(long, value_enum)]
        what: Table,
        #[arg(long, default_value_t = 6)]
        max: u32,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Run a verification suite.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
        /// Tolerance for the numeric suite; per-identity defaults when absent.
        #[arg(long)]
        tol: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
}

enum Failure {
    Usage(String),
    Verification,
}

type Run = Result<(), Failure>;

fn usage<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Usage(e.to_string())
}

fn parse_fiber(common: &Common) -> Result<Option<Arc<Curve>>, Failure> {
    let Some(f) = &common.fiber else { return Ok(None) };
    let u: Rat = f[0].parse().map_err(|_| Failure::Usage(format!("invalid rational {}", f[0])))?;
    let v: Rat = f[1].parse().map_err(|_| Failure::Usage(format!("invalid rational {}", f[1])))?;
    Curve::fiber(u, v).map(Some).map_err(usage)
}

fn check_degree(d: usize) -> Run {
    if d == 0 || d > MAX_DEGREE {
        return Err(Failure::Usage(format!("degree must lie in 1..={MAX_DEGREE}")));
    }
    Ok(())
}

fn model_name(m: Model) -> &'static str {
    match m {
        Model::GaussManin => "gauss-manin",
        Model::OmegaAlg => "omega-alg",
        Model::OmegaReg => "omega-reg",
        Model::NuNaive => "nu-naive",
        Model::NuAlg => "nu-alg",
        Model::NuReg => "nu-reg",
    }
}

/// Validates options, then builds the requested connection.
fn build(model: Model, common: &Common) -> Result<Connection, Failure> {
    check_degree(common.degree)?;
    let fiber = parse_fiber(common)?;
    let d = common.degree;
    let universal = |c: Connection| match &fiber {
        Some(f) => c.specialize(f),
        None => c,
    };
    let on_fiber = |mk: fn(&Arc<Curve>, usize) -> Connection| match &fiber {
        Some(f) => Ok(mk(f, d)),
        None => Err(Failure::Usage(format!("model {} needs --fiber U0 V0", model_name(model)))),
    };
    match model {
        Model::GaussManin => {
            if fiber.is_some() {
                return Err(Failure::Usage("gauss-manin lives on the universal family".into()));
            }
            Ok(gauss_manin(d))
        }
        Model::OmegaAlg => Ok(universal(omega_alg(d))),
        Model::OmegaReg => Ok(universal(omega_reg(d))),
        Model::NuNaive => on_fiber(nu1_naive),
        Model::NuAlg => on_fiber(nu1_alg),
        Model::NuReg => on_fiber(nu1_reg),
    }
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn emit(model: Model, common: &Common) -> Run {
    let c = build(model, common)?;
    match common.format {
        Format::Json => print_json(&serde_json::to_value(c.to_json(model_name(model))).expect("serializable")),
        Format::Text => print!("{c}"),
    }
    Ok(())
}

fn curvature_cmd(model: Model, common: &Common) -> Run {
    let c = build(model, common)?;
    let k = curvature(&c);
    match common.format {
        Format::Json => print_json(&json!({
            "model": model_name(model),
            "degree": c.degree(),
            "flat": k.is_zero(),
            "curvature": k.to_string(),
        })),
        Format::Text if k.is_zero() => println!("0"),
        Format::Text => println!("{k}"),
    }
    Ok(())
}

fn show_fun(f: &CurveFun) -> String {
    if f.as_constant().is_some_and(|c| c.is_one()) {
        String::new()
    } else {
        format!("({f}) ")
    }
}

fn render_residue(r: &Derivation<CurveFun>) -> String {
    if r.is_zero() {
        return "0".into();
    }
    match (GaugeFun { h: r.clone() }).inner_element() {
        Some(u) => {
            let b = basis();
            let parts: Vec<String> = u.terms().map(|(i, c)| format!("{}ad_{{{}}}", show_fun(c), b.bracket_string(i))).collect();
            parts.join(" + ")
        }
        None => r.to_string(),
    }
}

fn residue_cmd(model: Model, common: &Common) -> Run {
    let c = build(model, common)?;
    let order = c.pole_order_at_identity().map_err(usage)?;
    let res = c.residue_at_identity().map_err(usage)?;
    let text = render_residue(&res);
    match common.format {
        Format::Json => print_json(&json!({
            "model": model_name(model),
            "degree": c.degree(),
            "pole_order": order,
            "residue": text,
        })),
        Format::Text => println!("{text}"),
    }
    Ok(())
}

fn lie_json(u: &LieElt<CurvePoly>) -> Value {
    let b = basis();
    Value::Array(
        u.terms()
            .map(|(i, c)| json!({ "bracket": b.bracket_string(i), "coeff": c.to_string(), "terms": c.to_records() }))
            .collect(),
    )
}

fn solve_cmd(mode: Mode, common: &Common) -> Run {
    check_degree(common.degree)?;
    let Some(f) = parse_fiber(common)? else {
        return Err(Failure::Usage("solve-gauge needs --fiber U0 V0".into()));
    };
    let d = common.degree;
    let mode = match mode {
        Mode::Inner => SolveMode::Inner,
        Mode::Full => SolveMode::Full,
    };
    let p = GaugeProblem { source: nu1_naive(&f, d), target: nu1_alg(&f, d), mode, degree: d };
    let out = solve_gauge(&p).map_err(usage)?;
    match (out, common.format) {
        (Outcome::Success(s), Format::Json) => print_json(&json!({
            "outcome": "success",
            "degree": s.degree,
            "residual_zero": s.residual_zero,
            "free_constants": s.free,
            "image_S": lie_json(&s.image_s),
            "image_T": lie_json(&s.image_t),
        })),
        (Outcome::Success(s), Format::Text) => {
            println!("success at degree {} (residual zero: {})", s.degree, s.residual_zero);
            let show = |c: &CurvePoly| c.to_string();
            println!("S -> {}", s.image_s.render(show));
            println!("T -> {}", s.image_t.render(show));
            if !s.free.is_empty() {
                println!("free constants set to 0: {}", s.free.join(", "));
            }
        }
        (Outcome::Obstructed(o), Format::Json) => {
            let cons = |v: &[kzb_core::gauge::Constraint]| -> Vec<Value> {
                v.iter()
                    .map(|c| {
                        json!({
                            "source": c.source,
                            "terms": c.terms.iter().map(|(n, r)| json!([n, r])).collect::<Vec<_>>(),
                            "rhs": c.rhs,
                            "text": c.to_string(),
                        })
                    })
                    .collect()
            };
            print_json(&json!({
                "outcome": "obstructed",
                "degree": o.degree,
                "conflict": cons(&o.conflict),
                "constraints": cons(&o.constraints),
            }))
        }
        (Outcome::Obstructed(o), Format::Text) => print!("{o}"),
    }
    Ok(())
}

fn tables_cmd(what: Table, max: u32, format: Format) -> Run {
    let (label, lo) = match what {
        Table::Pk => ("P", 2),
        Table::Qn => ("q", 2),
        Table::Rn => ("r", 1),
        Table::P2m => ("p", 4),
    };
    if max < lo || max > 16 {
        return Err(Failure::Usage(format!("--max must lie in {lo}..=16")));
    }
    let mut rows = Vec::new();
    for k in lo..=max {
        let (text, rec) = match what {
            Table::Pk => (p_k_poly(k).to_string(), json!(p_k_poly(k).to_records())),
            Table::Qn => (q_n_poly(k).to_string(), json!(q_n_poly(k).to_records())),
            Table::Rn => {
                let f = r_n_fun(k);
                (f.to_string(), serde_json::to_value(f.to_record()).expect("serializable"))
            }
            Table::P2m if k % 2 == 1 => continue,
            Table::P2m => (p_poly(k).to_string(), json!(p_poly(k).to_records())),
        };
        rows.push((k, text, rec));
    }
    match format {
        Format::Text => {
            for (k, t, _) in rows {
                println!("{label}{k} = {t}");
            }
        }
        Format::Json => print_json(&Value::Array(
            rows.into_iter().map(|(k, t, r)| json!({ "name": format!("{label}{k}"), "value": t, "record": r })).collect(),
        )),
    }
    Ok(())
}

struct Check {
    name: String,
    ok: bool,
    detail: String,
}

fn symbolic_suite(common: &Common) -> Result<Vec<Check>, Failure> {
    check_degree(common.degree)?;
    let d = common.degree;
    let f = parse_fiber(common)?.unwrap_or_else(|| Curve::fiber(Rat::int(4), Rat::int(1)).expect("smooth fiber"));
    let u = Curve::universal();
    let mut out = Vec::new();
    let mut push = |name: &str, ok: bool, detail: String| out.push(Check { name: name.into(), ok, detail });

    push("gauss-manin flat", curvature(&gauss_manin(d)).is_zero(), String::new());
    let (a, r) = (omega_alg(d), omega_reg(d));
    push("omega-alg flat", curvature(&a).is_zero(), String::new());
    push("omega-reg flat", curvature(&r).is_zero(), String::new());
    let g = gauge_transform(&a, &g_reg(&u, d)).map_err(usage)?;
    push("omega gauge coherence", g == r, String::new());
    let (wa, wr) = (a.weight_violations().len(), r.weight_violations().len());
    push("weight zero", wa == 0 && wr == 0, format!("violations alg {wa} reg {wr}"));
    let (ea, er) = (a.max_delta_exponent(), r.max_delta_exponent());
    push("delta exponent", ea == 1 && er == 1, format!("alg {ea} reg {er}"));
    let ts = LieElt::t(d + 1).bracket(&LieElt::s(d + 1));
    let res = r.residue_at_identity().map_err(usage)?;
    let order = r.pole_order_at_identity().map_err(usage)?;
    let expected = Derivation::inner(&ts.map(|c| CurveFun::constant(&u, c.clone())));
    push("omega-reg residue", order == 1 && res == expected, format!("pole order {order}, residue {}", render_residue(&res)));
    let nr = nu1_reg(&f, d);
    push("nu-reg from nu-alg", gauge_transform(&nu1_alg(&f, d), &g_reg(&f, d)).map_err(usage)? == nr, String::new());
    push("omega-reg on fiber", r.specialize(&f) == nr, String::new());
    push("nu-reg pole order", nr.pole_order_at_identity().map_err(usage)? == 1, String::new());
    Ok(out)
}

fn numeric_suite(tol: Option<f64>) -> Result<Vec<Check>, Failure> {
    let defaults = [1e-9, 1e-7, 1e-6, 1e-6, 1e-6, 1e-8];
    let names = ["curve relation", "Kronecker expansion", "E1 tau-derivative", "modular log form", "dxi form", "F^Zag symmetry and periodicity"];
    let mut worst = [0.0f64; 6];
    for k in 0..10 {
        let kf = k as f64;
        let tau = C::new(-0.45 + 0.1 * kf, 0.4 + 0.12 * kf);
        let xi = C::new(0.13 + 0.07 * kf, 0.05 * (k % 3) as f64 * tau.im) + tau * (0.1 * (k % 2) as f64);
        let (u, v) = (C::new(0.3 + 0.05 * kf, 0.2 - 0.03 * kf), C::new(-0.25 + 0.02 * kf, 0.4));
        let p = oracle::Point::new(xi, tau).map_err(usage)?;
        let devs = [
            oracle::check_curve(&p),
            oracle::check_kronecker_expansion(&p, 5),
            oracle::check_e1_tau_derivative(&p),
            oracle::check_tau_form(tau),
            oracle::check_dxi_form(&p),
            oracle::check_fzag_properties(u, v, tau).map(|d| d.into_iter().fold(0.0, f64::max)),
        ];
        for (w, d) in worst.iter_mut().zip(devs) {
            *w = w.max(d.map_err(usage)?);
        }
    }
    Ok((0..6)
        .map(|i| {
            let t = tol.unwrap_or(defaults[i]);
            Check { name: names[i].into(), ok: worst[i] < t, detail: format!("max deviation {:.3e} (tol {t:.0e})", worst[i]) }
        })
        .collect())
}

fn verify_cmd(suite: Suite, tol: Option<f64>, common: &Common) -> Run {
    if let Some(t) = tol {
        if !(t > 0.0) {
            return Err(Failure::Usage("--tol must be positive".into()));
        }
    }
    let checks = match suite {
        Suite::Symbolic => symbolic_suite(common)?,
        Suite::Numeric => numeric_suite(tol)?,
    };
    let all = checks.iter().all(|c| c.ok);
    match common.format {
        Format::Json => print_json(&json!({
            "passed": all,
            "checks": checks.iter().map(|c| json!({ "name": c.name, "pass": c.ok, "detail": c.detail })).collect::<Vec<_>>(),
        })),
        Format::Text => {
            for c in &checks {
                let tail = if c.detail.is_empty() { String::new() } else { format!("  {}", c.detail) };
                println!("{} {}{tail}", if c.ok { "PASS" } else { "FAIL" }, c.name);
            }
        }
    }
    if all {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::EmitConnection { model, common } => emit(*model, common),
        Command::Curvature { model, common } => curvature_cmd(*model, common),
        Command::Residue { model, common } => residue_cmd(*model, common),
        Command::SolveGauge { mode, common } => solve_cmd(*mode, common),
        Command::Tables { what, max, format } => tables_cmd(*what, *max, *format),
        Command::Verify { suite, tol, common } => verify_cmd(*suite, *tol, common),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
