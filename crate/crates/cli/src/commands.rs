//! Computation commands: tables, invariants, estimates, sweeps.

use serde_json::json;

use sudlerlab_core::cf::CfTarget;
use sudlerlab_core::constants::{bound_suite, estimate_k, vol_41, vol_41_with, PowerExponent};
use sudlerlab_core::convergents::default_precision_bits;
use sudlerlab_core::identities::h_sequence;
use sudlerlab_core::limitfn::{build_limit_spec, convergence_report, interval_spec, limit_g, DEFAULT_N_TRUNC, DEFAULT_TAIL_TOLERANCE};
use sudlerlab_core::sudler::{jones_f, sudler_stream, SudlerTarget};
use sudlerlab_core::{spectral, ConvergentTable, Error, QuadraticIrrational, Result};

use crate::RunConfig;

pub fn parse_target(text: &str) -> Result<CfTarget> {
    text.parse()
}

pub fn parse_quadratic(text: &str) -> Result<QuadraticIrrational> {
    match text.parse::<CfTarget>()? {
        CfTarget::Quadratic(qi) => Ok(qi),
        CfTarget::Rational(_) => Err(Error::Domain("expected a periodic expansion, got a rational".into())),
    }
}

pub fn table_for(cfg: &RunConfig, target: &CfTarget, k_max: usize) -> Result<ConvergentTable> {
    let bits = match (cfg.precision_bits, target) {
        (Some(p), _) => p,
        (None, CfTarget::Quadratic(qi)) => default_precision_bits(qi, k_max),
        (None, CfTarget::Rational(_)) => 256,
    };
    ConvergentTable::build(target, k_max, bits)
}

/// A table at least deep enough for spectral extraction.
fn spectral_depth_table(cfg: &RunConfig, qi: &QuadraticIrrational, k_max: usize) -> Result<ConvergentTable> {
    let depth = k_max.max(qi.s() + 2 * qi.p());
    table_for(cfg, &CfTarget::Quadratic(qi.clone()), depth)
}

pub fn cmd_cf(cfg: &RunConfig, alpha: &str, k_max: usize) -> Result<bool> {
    let target = parse_target(alpha)?;
    let table = table_for(cfg, &target, k_max)?;
    if cfg.json {
        let rows: Vec<_> = table
            .entries
            .iter()
            .enumerate()
            .map(|(k, e)| {
                json!({
                    "k": k,
                    "a": e.a.to_string(),
                    "p": e.p.to_string(),
                    "q": e.q.to_string(),
                    "delta": e.delta_f64(),
                })
            })
            .collect();
        let mut doc = json!({ "target": target.to_string(), "entries": rows });
        if let CfTarget::Quadratic(qi) = &target {
            let deep = spectral_depth_table(cfg, qi, k_max)?;
            let sp = spectral(qi, &deep)?;
            doc["spectral"] = json!({
                "eta": sp.eta_f64,
                "lambda": sp.lambda,
                "kappa": sp.kappa,
                "trace": sp.trace.to_string(),
                "disc": sp.disc.to_string(),
                "B": (1..=sp.p).map(|r| sp.b_f64(r)).collect::<Vec<_>>(),
                "alpha_rev": sp.alpha_rev.iter().map(|a| a.to_string()).collect::<Vec<_>>(),
            });
        }
        println!("{doc}");
        return Ok(true);
    }
    if cfg.csv {
        println!("k,a,p,q,delta");
        for (k, e) in table.entries.iter().enumerate() {
            println!("{k},{},{},{},{}", e.a, e.p, e.q, e.delta_f64());
        }
        return Ok(true);
    }
    println!("target {target}   alpha = {}", table.alpha_fixed.to_f64());
    println!("{:>3} {:>8} {:>22} {:>22} {:>24}", "k", "a_k", "p_k", "q_k", "delta_k");
    for (k, e) in table.entries.iter().enumerate() {
        println!("{k:>3} {:>8} {:>22} {:>22} {:>24}", e.a, e.p, e.q, e.delta_f64());
    }
    if let CfTarget::Quadratic(qi) = &target {
        let deep = spectral_depth_table(cfg, qi, k_max)?;
        let sp = spectral(qi, &deep)?;
        println!("eta = {}   lambda = {}   kappa = {}", sp.eta_f64, sp.lambda, sp.kappa);
        for r in 1..=sp.p {
            println!("B_{r} = {}   alpha_{r} = {}", sp.b_f64(r), sp.alpha_rev[r - 1]);
        }
    }
    Ok(true)
}

pub fn cmd_jones(cfg: &RunConfig, rational: &str) -> Result<bool> {
    let target = parse_target(rational)?;
    let r = match target {
        CfTarget::Rational(r) => r,
        CfTarget::Quadratic(_) => return Err(Error::Domain("jones needs a rational argument".into())),
    };
    let log_j = jones_f(&r, cfg.chunk_size)?;
    let j = if log_j < 300.0 * std::f64::consts::LN_10 { Some(log_j.exp()) } else { None };
    if cfg.json {
        println!("{}", json!({ "target": r.to_string(), "log_j": log_j, "j": j }));
    } else {
        match j {
            Some(v) => println!("log J(e({r})) = {log_j}   J = {v}"),
            None => println!("log J(e({r})) = {log_j}   (J exceeds 1e300)"),
        }
    }
    Ok(true)
}

pub fn cmd_sudler(cfg: &RunConfig, target: &str, n_max: u64, stride: u64) -> Result<bool> {
    let target = parse_target(target)?;
    let st = match &target {
        CfTarget::Rational(r) => SudlerTarget::Rational(r.clone()),
        CfTarget::Quadratic(qi) => {
            SudlerTarget::Quadratic(qi.clone(), cfg.precision_bits.unwrap_or(256))
        }
    };
    let stream = sudler_stream(&st, n_max, cfg.chunk_size)?;
    let stride = stride.max(1);
    if cfg.csv {
        println!("N,logP");
        for (n, v) in stream.values.iter().enumerate() {
            if n as u64 % stride == 0 {
                println!("{n},{v}");
            }
        }
    } else if cfg.json {
        for (n, v) in stream.values.iter().enumerate() {
            if n as u64 % stride == 0 {
                println!("{}", json!({ "target": target.to_string(), "N": n, "logP": v }));
            }
        }
    } else {
        for (n, v) in stream.values.iter().enumerate() {
            if n as u64 % stride == 0 {
                println!("{n:>10} {v}");
            }
        }
    }
    Ok(true)
}

fn parse_window(text: &str) -> Result<(usize, usize)> {
    let parts: Vec<&str> = text.split("..").collect();
    if parts.len() != 2 {
        return Err(Error::Parse { pos: 0, msg: format!("window '{text}' is not of the form lo..hi") });
    }
    let lo = parts[0].parse().map_err(|_| Error::Parse { pos: 0, msg: "bad window start".into() })?;
    let hi = parts[1].parse().map_err(|_| Error::Parse { pos: 0, msg: "bad window end".into() })?;
    Ok((lo, hi))
}

fn parse_exponents(text: &str) -> Result<Vec<PowerExponent>> {
    text.split(',')
        .map(|t| {
            let t = t.trim();
            if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinity") {
                Ok(PowerExponent::Infinity)
            } else {
                t.parse::<f64>()
                    .map_err(|_| Error::Parse { pos: 0, msg: format!("bad exponent '{t}'") })
                    .and_then(|c| {
                        if c > 0.0 {
                            Ok(PowerExponent::Finite(c))
                        } else {
                            Err(Error::Domain("exponents must be positive".into()))
                        }
                    })
            }
        })
        .collect()
}

pub fn cmd_estimate(cfg: &RunConfig, alpha: &str, c: &str, k_window: &str) -> Result<bool> {
    let qi = parse_quadratic(alpha)?;
    let (k_lo, k_hi) = parse_window(k_window)?;
    let cs = parse_exponents(c)?;
    let table = table_for(cfg, &CfTarget::Quadratic(qi.clone()), k_hi.max(qi.s() + 2 * qi.p()))?;
    let sp = spectral(&qi, &table)?;

    let mut reports = Vec::new();
    for &c in &cs {
        reports.push(estimate_k(&qi, &table, c, k_lo, k_hi, cfg.chunk_size)?);
    }
    let checks = bound_suite(&reports, &sp);
    for r in &mut reports {
        r.bounds = checks.clone();
    }

    if cfg.json {
        println!("{}", serde_json::to_string(&reports).expect("reports serialize"));
        return Ok(true);
    }
    println!("alpha = {qi}   lambda = {}   window k = {k_lo}..{k_hi}", sp.lambda);
    for r in &reports {
        println!(
            "c = {:>4}   K_hat = {:.6}   intercept = {:+.4}   residual band = {:.2e}{}",
            r.c.to_string(),
            r.k_hat,
            r.intercept,
            r.fit_residual_band,
            if r.instability_warning { "   [instability warning]" } else { "" }
        );
    }
    for b in &checks {
        println!(
            "  [{}] {}   lhs = {:.6}  rhs = {:.6}",
            if b.pass { "pass" } else { "FAIL" },
            b.name,
            b.lhs,
            b.rhs
        );
    }
    Ok(checks.iter().all(|b| b.pass))
}

pub fn cmd_limitfn(
    cfg: &RunConfig,
    alpha: &str,
    r: usize,
    x_range: Option<&str>,
    points: usize,
    n_trunc: Option<u64>,
    convergence: Option<&str>,
) -> Result<bool> {
    let qi = parse_quadratic(alpha)?;
    let depth = (qi.s() + 2 * qi.p()).max(24);
    let table = table_for(cfg, &CfTarget::Quadratic(qi.clone()), depth)?;
    let sp = spectral(&qi, &table)?;
    let iv = interval_spec(&table, &sp, r)?;

    if let Some(mrange) = convergence {
        let (m_lo, m_hi) = parse_window(mrange)?;
        let spec = build_limit_spec(&table, &sp, r, n_trunc.unwrap_or(DEFAULT_N_TRUNC), DEFAULT_TAIL_TOLERANCE)?;
        let grid: Vec<f64> = (0..points.max(2))
            .map(|i| iv.lo + (iv.hi - iv.lo) * i as f64 / (points.max(2) - 1) as f64)
            .collect();
        let rows = convergence_report(&table, &sp, &spec, m_lo..=m_hi, &grid)?;
        println!("m,q_k,sup_error,rate_envelope");
        for row in rows {
            println!("{},{},{},{}", row.m, row.q_k, row.sup_error, row.rate_envelope);
        }
        return Ok(true);
    }
    let (lo, hi) = match x_range {
        Some(t) => {
            let parts: Vec<&str> = t.split("..").collect();
            if parts.len() != 2 {
                return Err(Error::Parse { pos: 0, msg: "x range must be lo..hi".into() });
            }
            (
                parts[0].parse().map_err(|_| Error::Parse { pos: 0, msg: "bad x lo".into() })?,
                parts[1].parse().map_err(|_| Error::Parse { pos: 0, msg: "bad x hi".into() })?,
            )
        }
        None => (iv.lo, iv.hi),
    };
    let spec = build_limit_spec(&table, &sp, r, n_trunc.unwrap_or(DEFAULT_N_TRUNC), DEFAULT_TAIL_TOLERANCE)?;
    let points = points.max(2);
    println!("x,G,tail_bound");
    for i in 0..points {
        let x = lo + (hi - lo) * i as f64 / (points - 1) as f64;
        let (g, tb) = limit_g(&spec, x);
        println!("{x},{g},{tb}");
    }
    Ok(true)
}

pub fn cmd_ostrowski(cfg: &RunConfig, alpha: &str, n: &str, k_max: usize) -> Result<bool> {
    use sudlerlab_core::ostrowski::{encode, epsilon};
    let qi = parse_quadratic(alpha)?;
    let n: num_bigint::BigUint = n
        .parse()
        .map_err(|_| Error::Parse { pos: 0, msg: format!("'{n}' is not a nonnegative integer") })?;
    let table = table_for(cfg, &CfTarget::Quadratic(qi.clone()), k_max)?;
    let exp = encode(&table, &n)?;
    // digits are little-endian: index 0 first
    if cfg.json {
        let eps: Vec<f64> = (0..exp.digits.len())
            .map(|k| epsilon(&table, k, &exp).map(|e| e.to_f64()))
            .collect::<Result<_>>()?;
        println!(
            "{}",
            json!({ "alpha": qi.to_string(), "n": n.to_string(), "digits": exp.digits, "epsilon": eps })
        );
    } else {
        println!("N = {n}   digits (b_0, b_1, ...) = {:?}", exp.digits);
        for k in 0..exp.digits.len() {
            let e = epsilon(&table, k, &exp)?.to_f64();
            println!("  k = {k}: b_k = {}, epsilon_k = {e}", exp.digits[k]);
        }
    }
    Ok(true)
}

pub fn cmd_vol41(cfg: &RunConfig) -> Result<bool> {
    let v = vol_41();
    if cfg.json {
        println!(
            "{}",
            json!({ "vol_41": v, "vol_over_2pi": v / std::f64::consts::TAU, "halving_delta": (v - vol_41_with(32)).abs() })
        );
    } else {
        println!("Vol(4_1) = {v}");
        println!("Vol/2pi  = {}", v / std::f64::consts::TAU);
    }
    Ok(true)
}

pub fn cmd_h_sequence(cfg: &RunConfig, alpha: &str, k_max: usize) -> Result<bool> {
    let qi = parse_quadratic(alpha)?;
    let seq = h_sequence(&qi, k_max, cfg.chunk_size)?;
    if cfg.json {
        println!(
            "{}",
            json!({ "alpha": qi.to_string(), "log_j": seq.log_j, "h": seq.h, "cesaro": seq.cesaro })
        );
        return Ok(true);
    }
    if cfg.csv {
        println!("k,log_j,h,cesaro");
        for k in 1..=seq.h.len() {
            println!("{k},{},{},{}", seq.log_j[k], seq.h[k - 1], seq.cesaro[k - 1]);
        }
        return Ok(true);
    }
    println!("{:>3} {:>22} {:>22} {:>22}", "k", "log J", "h_k", "cesaro mean");
    for k in 1..=seq.h.len() {
        println!("{k:>3} {:>22} {:>22} {:>22}", seq.log_j[k], seq.h[k - 1], seq.cesaro[k - 1]);
    }
    Ok(true)
}
