use std::fmt::Write as _;

use serde::Serialize;

use feedcap::noise::ArModel;
use feedcap::rate::{
    ar1_capacity, combined_rate, sk1_rate, sk2_rate, OptimalParams, RateResult, SearchOpts,
};
use feedcap::sim::{simulate as run_simulation, SimReport};
use feedcap::verify::{gram_forms_battery, lemma1_battery, limit_identity_battery};

use crate::config::{parse_beta_list, parse_sim_config};
use crate::errors::CliError;
use crate::output::fmt12;
use crate::SolverArgs;

/// Fixed sweep CSV header; frozen by golden-file tests.
pub const SWEEP_HEADER: &str =
    "beta_swept,P,rate_sk1_nats,rate_sk2_nats,rate_combined_nats,ar1_capacity_nats,diff_sk2_minus_sk1,winner";

fn build_model(beta: &str) -> Result<ArModel, CliError> {
    let betas = parse_beta_list(beta)?;
    ArModel::new(betas).map_err(|e| CliError::input(e.to_string()))
}

fn solver_opts(args: &SolverArgs) -> Result<SearchOpts, CliError> {
    if args.grid_theta < 2 || args.grid_real < 2 {
        return Err(CliError::input("grid sizes must be at least 2"));
    }
    if !args.tol.is_finite() || args.tol <= 0.0 {
        return Err(CliError::input("tolerance must be positive"));
    }
    Ok(SearchOpts {
        grid_theta: args.grid_theta,
        grid_real: args.grid_real,
        tol: args.tol,
        gamma_max: args.gamma_max,
    })
}

fn check_power(power: f64) -> Result<(), CliError> {
    if !power.is_finite() || power <= 0.0 {
        return Err(CliError::input("power must be positive"));
    }
    Ok(())
}

fn write_out(path: Option<&str>, content: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, content)
            .map_err(|e| CliError::Io(format!("cannot write '{p}': {e}"))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

// ---------------------------------------------------------------------------
// rate
// ---------------------------------------------------------------------------

fn rate_block(result: &RateResult, budget: f64, bits_first: bool) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "scheme = {}", result.scheme);
    let nats = format!("rate_nats = {}", fmt12(result.rate_nats));
    let bits = format!("rate_bits = {}", fmt12(result.rate_bits()));
    if bits_first {
        let _ = writeln!(s, "{bits}\n{nats}");
    } else {
        let _ = writeln!(s, "{nats}\n{bits}");
    }
    match &result.params {
        OptimalParams::Sk1 { gamma } => {
            let _ = writeln!(s, "gamma = {}", fmt12(*gamma));
        }
        OptimalParams::Sk2(p) => {
            let (g1, g2) = p.roots();
            let _ = writeln!(s, "gamma1 = {} {}", fmt12(g1.re), fmt12(g1.im));
            let _ = writeln!(s, "gamma2 = {} {}", fmt12(g2.re), fmt12(g2.im));
        }
    }
    let _ = writeln!(s, "power_at_solution = {}", fmt12(result.power_at_solution));
    let _ = writeln!(s, "power_budget = {}", fmt12(budget));
    let _ = writeln!(s, "boundary_hit = {}", result.diagnostics.boundary_hit);
    let _ = writeln!(s, "interior = {}", result.diagnostics.interior);
    s
}

pub fn rate(
    beta: &str,
    power: f64,
    scheme: &str,
    bits_first: bool,
    solver: &SolverArgs,
    out: Option<&str>,
) -> Result<(), CliError> {
    let model = build_model(beta)?;
    check_power(power)?;
    let opts = solver_opts(solver)?;
    let block = match scheme {
        "sk1" => rate_block(&sk1_rate(&model, power)?, power, bits_first),
        "sk2" => rate_block(&sk2_rate(&model, power, &opts)?, power, bits_first),
        "combined" => rate_block(&combined_rate(&model, power, &opts)?, power, bits_first),
        "ar1" => {
            if model.order() != 1 {
                return Err(CliError::input(format!(
                    "scheme ar1 requires an order-1 model, got p = {}",
                    model.order()
                )));
            }
            let c = ar1_capacity(model.betas()[0], power)?;
            let mut s = String::new();
            let _ = writeln!(s, "scheme = ar1_capacity");
            let _ = writeln!(s, "rate_nats = {}", fmt12(c));
            let _ = writeln!(s, "rate_bits = {}", fmt12(c / std::f64::consts::LN_2));
            s
        }
        other => {
            return Err(CliError::input(format!(
                "unknown scheme '{other}' (expected sk1, sk2, ar1 or combined)"
            )))
        }
    };
    print!("{block}");
    if let Some(path) = out {
        std::fs::write(path, &block)
            .map_err(|e| CliError::Io(format!("cannot write '{path}': {e}")))?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct SweepSpec {
    template: Vec<Option<f64>>, // None marks the swept slot
    grid: Vec<f64>,
    powers: Vec<f64>,
    sk1: bool,
    sk2: bool,
    combined: bool,
    ar1: bool,
}

fn parse_sweep_spec(
    beta: &str,
    range: &str,
    power: &str,
    schemes: &str,
) -> Result<SweepSpec, CliError> {
    let mut template = Vec::new();
    let mut swept_slots = 0;
    for tok in beta.split(',') {
        let t = tok.trim();
        if t.eq_ignore_ascii_case("x") {
            template.push(None);
            swept_slots += 1;
        } else {
            let v: f64 = t
                .parse()
                .map_err(|_| CliError::input(format!("invalid beta token '{t}'")))?;
            if !v.is_finite() || v.abs() >= 1.0 {
                return Err(CliError::input(format!("fixed beta {v} outside (-1, 1)")));
            }
            template.push(Some(v));
        }
    }
    if swept_slots != 1 {
        return Err(CliError::input(
            "exactly one beta slot must be the sweep marker 'x', e.g. --beta x,0.9",
        ));
    }
    let parts: Vec<&str> = range.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::input("range must be lo:hi:step"));
    }
    let lo: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| CliError::input(format!("invalid range bound '{}'", parts[0])))?;
    let hi: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| CliError::input(format!("invalid range bound '{}'", parts[1])))?;
    let step: f64 = parts[2]
        .trim()
        .parse()
        .map_err(|_| CliError::input(format!("invalid range step '{}'", parts[2])))?;
    if !step.is_finite() || step <= 0.0 {
        return Err(CliError::input("range step must be positive"));
    }
    if hi < lo {
        return Err(CliError::input("empty range: hi < lo"));
    }
    let count = ((hi - lo) / step + 0.5).floor() as usize;
    let grid: Vec<f64> = (0..=count).map(|k| lo + k as f64 * step).collect();
    for &b in &grid {
        if b.abs() >= 1.0 {
            return Err(CliError::input(format!("swept beta {b} leaves (-1, 1)")));
        }
    }
    let powers: Result<Vec<f64>, CliError> = power
        .split(',')
        .map(|t| {
            let v: f64 = t
                .trim()
                .parse()
                .map_err(|_| CliError::input(format!("invalid power '{}'", t.trim())))?;
            check_power(v)?;
            Ok(v)
        })
        .collect();
    let powers = powers?;
    let mut spec = SweepSpec {
        template,
        grid,
        powers,
        sk1: false,
        sk2: false,
        combined: false,
        ar1: false,
    };
    for tok in schemes.split(',') {
        match tok.trim() {
            "sk1" => spec.sk1 = true,
            "sk2" => spec.sk2 = true,
            "combined" => spec.combined = true,
            "ar1" => spec.ar1 = true,
            "" => {}
            other => {
                return Err(CliError::input(format!(
                    "unknown scheme '{other}' in --schemes"
                )))
            }
        }
    }
    if !(spec.sk1 || spec.sk2 || spec.combined || spec.ar1) {
        return Err(CliError::input("no schemes requested"));
    }
    Ok(spec)
}

pub fn sweep(
    beta: &str,
    range: &str,
    power: &str,
    schemes: &str,
    solver: &SolverArgs,
    out: Option<&str>,
) -> Result<(), CliError> {
    let spec = parse_sweep_spec(beta, range, power, schemes)?;
    let opts = solver_opts(solver)?;
    let mut csv = String::new();
    csv.push_str(SWEEP_HEADER);
    csv.push('\n');
    for &p in &spec.powers {
        for &b in &spec.grid {
            let betas: Vec<f64> =
                spec.template.iter().map(|slot| slot.unwrap_or(b)).collect();
            let model = ArModel::new(betas).map_err(|e| CliError::input(e.to_string()))?;
            let r1 = if spec.sk1 || spec.combined {
                Some(sk1_rate(&model, p)?)
            } else {
                None
            };
            let r2 = if spec.sk2 || spec.combined {
                Some(sk2_rate(&model, p, &opts)?)
            } else {
                None
            };
            let c_ar1 = if spec.ar1 && model.order() == 1 {
                Some(ar1_capacity(model.betas()[0], p)?)
            } else {
                None
            };
            let (combined_str, winner) = match (&r1, &r2) {
                (Some(a), Some(b2)) => {
                    let best = a.rate_nats.max(b2.rate_nats);
                    let tag = if b2.rate_nats > a.rate_nats { "sk2" } else { "sk1" };
                    (fmt12(best), tag.to_string())
                }
                _ => (String::new(), String::new()),
            };
            let diff = match (&r1, &r2) {
                (Some(a), Some(b2)) => fmt12(b2.rate_nats - a.rate_nats),
                _ => String::new(),
            };
            let cell1 = if spec.sk1 {
                r1.as_ref().map(|r| fmt12(r.rate_nats)).unwrap_or_default()
            } else {
                String::new()
            };
            let cell2 = if spec.sk2 {
                r2.as_ref().map(|r| fmt12(r.rate_nats)).unwrap_or_default()
            } else {
                String::new()
            };
            let cell_comb = if spec.combined { combined_str } else { String::new() };
            let cell_ar1 = c_ar1.map(fmt12).unwrap_or_default();
            let _ = writeln!(
                csv,
                "{},{},{cell1},{cell2},{cell_comb},{cell_ar1},{diff},{winner}",
                fmt12(b),
                fmt12(p),
            );
        }
    }
    write_out(out, &csv)
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ReportDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    generated_at_unix: Option<u64>,
    #[serde(flatten)]
    report: SimReport,
}

#[allow(clippy::too_many_arguments)]
pub fn simulate(
    config_path: &str,
    out: Option<&str>,
    no_timestamp: bool,
    log_domain: bool,
    seed: Option<u64>,
    trials: Option<u64>,
    horizon: Option<usize>,
) -> Result<(), CliError> {
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| CliError::Io(format!("cannot read '{config_path}': {e}")))?;
    let mut config = parse_sim_config(&text)?;
    if let Some(s) = seed {
        config.seed = s;
    }
    if let Some(t) = trials {
        config.trials = t;
    }
    if let Some(h) = horizon {
        config.horizon = h;
    }
    config.log_domain = log_domain;
    config.validate().map_err(|e| CliError::input(e.to_string()))?;
    let report = run_simulation(&config)?;
    let passed = report.summary.passed;
    let failing: Vec<String> = report
        .summary
        .checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{} ({})", c.name, c.detail))
        .collect();
    let doc = ReportDoc {
        generated_at_unix: if no_timestamp {
            None
        } else {
            Some(
                std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0),
            )
        },
        report,
    };
    let mut json = serde_json::to_string_pretty(&doc)
        .map_err(|e| CliError::Io(format!("serialization failed: {e}")))?;
    json.push('\n');
    write_out(out, &json)?;
    if !passed {
        return Err(CliError::Tolerance(format!(
            "tolerance checks failed: {}",
            failing.join("; ")
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

struct SuiteOutcome {
    name: &'static str,
    max_error: f64,
    tolerance: f64,
    detail: String,
}

impl SuiteOutcome {
    fn passed(&self) -> bool {
        self.max_error < self.tolerance
    }
}

fn run_suite(name: &str) -> SuiteOutcome {
    match name {
        "lemma1" => {
            let o = lemma1_battery();
            SuiteOutcome {
                name: "lemma1",
                max_error: o.max_abs_error,
                tolerance: 1e-9,
                detail: format!("{} random instances vs dense inversion", o.cases),
            }
        }
        "limit-identity" => {
            let o = limit_identity_battery();
            // gates normalized to a shared tolerance of 1
            let mut worst = o.max_anchored_rel_err / 1e-5;
            worst = worst.max(o.max_full_rel_err / 1e-8);
            worst = worst.max(o.max_diag_residue / 1e-12);
            if !o.raw_errors_linear {
                worst = f64::INFINITY;
            }
            SuiteOutcome {
                name: "limit-identity",
                max_error: worst,
                tolerance: 1.0,
                detail: format!(
                    "extrapolated@1e-4 {} (tol 1e-5), full {} (tol 1e-8), {} cases",
                    fmt12(o.max_anchored_rel_err),
                    fmt12(o.max_full_rel_err),
                    o.cases
                ),
            }
        }
        "gram-forms" => {
            let o = gram_forms_battery();
            SuiteOutcome {
                name: "gram-forms",
                max_error: o.max_rel_dev,
                tolerance: 1e-8,
                detail: format!("{} (model, params) combos, n <= 50", o.combos),
            }
        }
        _ => unreachable!(),
    }
}

pub fn verify(suite: &str) -> Result<(), CliError> {
    let names: Vec<&str> = match suite {
        "lemma1" | "limit-identity" | "gram-forms" => vec![suite],
        "all" => vec!["lemma1", "limit-identity", "gram-forms"],
        other => {
            return Err(CliError::input(format!(
                "unknown suite '{other}' (expected lemma1, limit-identity, gram-forms or all)"
            )))
        }
    };
    let mut all_ok = true;
    for name in names {
        let o = run_suite(name);
        let verdict = if o.passed() { "pass" } else { "FAIL" };
        println!(
            "{}: max error = {} (tolerance {}), {} -- {verdict}",
            o.name,
            fmt12(o.max_error),
            fmt12(o.tolerance),
            o.detail
        );
        all_ok &= o.passed();
    }
    if !all_ok {
        return Err(CliError::Tolerance("verification battery failed".into()));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// psd
// ---------------------------------------------------------------------------

pub fn psd(beta: &str, points: usize, out: Option<&str>) -> Result<(), CliError> {
    if points < 2 {
        return Err(CliError::input("points must be at least 2"));
    }
    let model = build_model(beta)?;
    let mut csv = String::from("theta,psd\n");
    for k in 0..points {
        let theta = std::f64::consts::PI * k as f64 / (points - 1) as f64;
        let _ = writeln!(csv, "{},{}", fmt12(theta), fmt12(model.psd(theta)));
    }
    write_out(out, &csv)
}
