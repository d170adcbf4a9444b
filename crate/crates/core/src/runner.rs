//! Subcommand dispatch shared by the CLI and the C interface.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::config::RunConfig;
use crate::dyadic::Domain;
use crate::error::{Error, Result};
use crate::grid::{random_lognormal, GridFunction};
use crate::lab::{self, ExperimentReport, GoodLambdaConfig, Theorem};
use crate::operators::{self, CoefficientMap};
use crate::sparse::SparseCollection;
use crate::weights::{self, WeightTuple};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Constants,
    Verify,
    Apply,
    GoodLambda,
    JnHeight,
    Testing,
    TheoremA,
    TheoremB,
    Kolmogorov,
    Packing,
    Appendix,
    Lemma34,
    Linearization,
    Exponents,
}

impl Command {
    pub const ALL: [Command; 14] = [
        Command::Constants,
        Command::Verify,
        Command::Apply,
        Command::GoodLambda,
        Command::JnHeight,
        Command::Testing,
        Command::TheoremA,
        Command::TheoremB,
        Command::Kolmogorov,
        Command::Packing,
        Command::Appendix,
        Command::Lemma34,
        Command::Linearization,
        Command::Exponents,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Constants => "constants",
            Command::Verify => "verify",
            Command::Apply => "apply",
            Command::GoodLambda => "goodlambda",
            Command::JnHeight => "jn-height",
            Command::Testing => "testing",
            Command::TheoremA => "theorem-a",
            Command::TheoremB => "theorem-b",
            Command::Kolmogorov => "kolmogorov",
            Command::Packing => "packing",
            Command::Appendix => "appendix",
            Command::Lemma34 => "lemma34",
            Command::Linearization => "linearization",
            Command::Exponents => "exponents",
        }
    }

    /// CSV columns after `label`.
    pub fn columns(self) -> &'static str {
        match self {
            Command::Constants => "value: the constant; label names it and its maximizing cube",
            Command::Verify => "level, fraction: |E_Q|/|Q| of the witness set",
            Command::Apply => "value: operator output per row-major cell",
            Command::GoodLambda => {
                "lambda, gamma, numerator w({A^q>2λ, A^r<=γ^(1/q-1/r)λ}), denominator w({A^q>λ}), ratio, x=η/(γ[w]_FW)"
            }
            Command::JnHeight => "lambda, ratio w({h>λ}∩Q0)/w(Q0)",
            Command::Testing => "value: testing-constant estimate after each one-variable step",
            Command::TheoremA | Command::TheoremB => {
                "general (ratio against [w^p]_FW[w]_p), sharp (against C_w[w]_p, NaN if not applicable), lhs, input_norm"
            }
            Command::Kolmogorov => "theta, c_opt, weak_norm, lower_bracket (1 = holds), upper_bracket (1 = holds)",
            Command::Packing => "lhs Σ_{Q'⊆Q}Π<g_j>^α|Q'|, rhs Π<g_j>_Q^α|Q|, ratio",
            Command::Appendix => "fw_prod, min_fw = min_j[v_j]_FW^(1/p), ap_pow_gamma = [w]_p^min(p_j'/p), ml_fw_v",
            Command::Lemma34 | Command::Linearization => "lhs, rhs, ratio",
            Command::Exponents => "value: alpha, beta, min(alpha,beta), improvement_region, general, gamma, delta",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown subcommand {s:?}")))
    }
}

/// Run one subcommand. Configuration and precondition problems are errors; failed
/// assertions come back as a report with `pass = false`.
pub fn run(command: Command, config: &RunConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    let mut report = match command {
        Command::Constants => constants(config)?,
        Command::Verify => verify(config)?,
        Command::Apply => apply(config)?,
        Command::GoodLambda => good_lambda(config)?,
        Command::JnHeight => jn_height(config)?,
        Command::Testing => testing(config)?,
        Command::TheoremA => theorem(config, Theorem::A)?,
        Command::TheoremB => theorem(config, Theorem::B)?,
        Command::Kolmogorov => kolmogorov(config)?,
        Command::Packing => packing(config)?,
        Command::Appendix => {
            let (domain, pvec) = (config.domain()?, config.exponents()?);
            lab::appendix_check(&config.weights(domain, pvec.m())?, &pvec)?
        }
        Command::Lemma34 => lemma34(config)?,
        Command::Linearization => linearization(config)?,
        Command::Exponents => exponents(config)?,
    };
    for common in ["seed", "seeds", "scope"] {
        let _ = config.raw(common);
    }
    if let Some(key) = config.unused().first() {
        return Err(Error::InvalidParameter(format!(
            "{key}: unknown key for {command}"
        )));
    }
    report.runtime_secs = start.elapsed().as_secs_f64();
    Ok(report)
}

fn weight_count(config: &RunConfig) -> usize {
    if config.contains("weight") {
        return 1;
    }
    (1..)
        .take_while(|j| config.contains(&format!("weight{j}")))
        .count()
        .max(1)
}

/// Input functions `f1..fm` (or `f`), defaulting to log-normal noise seeded from `seed`.
fn inputs(config: &RunConfig, domain: Domain, m: usize, seed: u64) -> Result<Vec<GridFunction>> {
    match config.functions("f", domain, m)? {
        Some(fs) => Ok(fs),
        None => {
            let sigma = config.f64_or("sigma", 1.0)?;
            lab::random_functions(domain, seed, m, sigma)
        }
    }
}

fn constants(config: &RunConfig) -> Result<ExperimentReport> {
    let domain = config.domain()?;
    let scope = config.scope()?;
    let kind = config.string_or("kind", "all");
    let m = if config.contains("p") || config.contains("p1") {
        config.exponents()?.m()
    } else {
        weight_count(config)
    };
    let ws = config.weights(domain, m)?;
    let pvec = if config.contains("p") || config.contains("p1") {
        Some(config.exponents()?)
    } else {
        None
    };
    let mut report = ExperimentReport::new(
        "constants",
        format!("d={} L={} scope={scope}", domain.dim(), domain.max_level()),
        &["value"],
    );
    let want = |k: &str| kind == "all" || kind == k;
    let describe = |v: &weights::ConstantValue| v.argmax.describe(&domain);
    if want("ap") && m == 1 {
        if let Some(p) = &pvec {
            let v = weights::ap_constant(ws.get(0), p.p(), scope)?;
            report.push(
                format!("ap;p={};argmax={}", p.p(), describe(&v)),
                vec![v.value],
            );
        }
    }
    if want("multilinear") {
        if let Some(p) = &pvec {
            let omega = config.function("omega", domain)?;
            let v = weights::multilinear_ap(&ws, p, omega.as_ref(), scope)?;
            report.push(
                format!("multilinear;p={p};argmax={}", describe(&v)),
                vec![v.value],
            );
        }
    }
    if want("fw") {
        for (j, w) in ws.weights().iter().enumerate() {
            let v = weights::fw_constant(w, scope)?;
            report.push(
                format!("fw;weight{};argmax={}", j + 1, describe(&v)),
                vec![v.value],
            );
        }
    }
    if want("mlfw") {
        if let Some(p) = &pvec {
            let v = weights::ml_fw_constant(&ws, p, scope)?;
            report.push(format!("mlfw;p={p};argmax={}", describe(&v)), vec![v.value]);
        }
    }
    if want("fwprod") {
        if let Some(p) = &pvec {
            if p.exponents().iter().all(|&x| x > 1.0) {
                let v = weights::fw_prod_constant(&ws, p, scope)?;
                report.push(
                    format!("fwprod;p={p};argmax={}", describe(&v)),
                    vec![v.value],
                );
            }
        }
    }
    let mut pass = true;
    if want("rh") {
        for (j, w) in ws.weights().iter().enumerate() {
            let rh = weights::reverse_holder_check(w, scope)?;
            pass &= rh.holds;
            report.push(
                format!(
                    "rh-ratio;weight{};r={};worst={}",
                    j + 1,
                    rh.r,
                    rh.worst.describe(&domain)
                ),
                vec![rh.max_ratio],
            );
        }
    }
    if report.rows.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "kind: nothing to compute for {kind:?} with the given keys"
        )));
    }
    pass &= report.rows.iter().all(|(_, v)| v[0].is_finite());
    report.fitted = report.rows[0].1[0];
    report.budget = f64::NAN;
    report.pass = pass;
    Ok(report)
}

fn verify(config: &RunConfig) -> Result<ExperimentReport> {
    let domain = config.domain()?;
    let seed = config.seed()?;
    let fs = if config.string_or("sparse", "") == "maximal" {
        Some(inputs(config, domain, 1, seed)?)
    } else {
        None
    };
    let eta = config.f64_or("eta", 0.5)?;
    let mut report = ExperimentReport::new(
        "verify",
        format!(
            "d={} L={} eta={eta} seed={seed}",
            domain.dim(),
            domain.max_level()
        ),
        &["level", "fraction"],
    );
    match config.sparse(domain, seed, fs.as_deref()) {
        Ok(s) => {
            let fr = s.witness_fractions();
            for (i, n) in s.nodes().iter().enumerate() {
                report.push(domain.cube_of(*n).to_string(), vec![n.level as f64, fr[i]]);
            }
            report.fitted = s.family().achievable_eta();
            report.budget = eta;
            report.pass = true;
            report.notes.push(format!("witness={:?}", s.witness_kind()));
        }
        Err(e @ Error::NotEtaSparse { .. }) => {
            report.notes.push(e.to_string());
            report.fitted = f64::NAN;
            report.budget = eta;
            report.pass = false;
        }
        Err(e) => return Err(e),
    }
    Ok(report)
}

fn apply(config: &RunConfig) -> Result<ExperimentReport> {
    let domain = config.domain()?;
    let seed = config.seed()?;
    let op = config.string_or("operator", "sparse");
    let pvec = if config.contains("p") || config.contains("p1") {
        Some(config.exponents()?)
    } else {
        None
    };
    let m = match (&pvec, config.usize_or("m", 0)?) {
        (Some(p), _) => p.m(),
        (None, 0) => 1,
        (None, m) => m,
    };
    let fs = inputs(config, domain, m, seed)?;
    let out = match op.as_str() {
        "sparse" => operators::sparse_operator(config.sparse(domain, seed, Some(&fs))?.family(), &fs)?,
        "sparse-q" => {
            let q = config.f64_or("q", 1.0)?;
            operators::sparse_q_averages(config.sparse(domain, seed, Some(&fs))?.family(), &fs, q)?
        }
        "maximal" => {
            let w = config.function("weight", domain)?;
            operators::maximal(&fs[0], w.as_ref(), None)?
        }
        "multilinear-maximal" => {
            let p = pvec.ok_or_else(|| Error::InvalidParameter("p: multilinear-maximal needs exponents".into()))?;
            operators::multilinear_maximal(&fs, &p)?
        }
        "height" => config.sparse(domain, seed, Some(&fs))?.family().height_function(None)?,
        other => {
            return Err(Error::InvalidParameter(format!(
                "operator: expected sparse, sparse-q, maximal, multilinear-maximal or height, got {other:?}"
            )))
        }
    };
    if let Some(path) = config.raw("output") {
        out.write_file(path)?;
    }
    let mut report = ExperimentReport::new(
        "apply",
        format!(
            "d={} L={} operator={op} seed={seed}",
            domain.dim(),
            domain.max_level()
        ),
        &["value"],
    );
    for (i, v) in out.values().iter().enumerate() {
        report.push(format!("cell={i}"), vec![*v]);
    }
    report.fitted = out.max_value();
    report.budget = f64::NAN;
    report.pass = out.values().iter().all(|v| v.is_finite());
    Ok(report)
}

/// Sparse collection and input functions for one seed.
fn instance(
    config: &RunConfig,
    domain: Domain,
    m: usize,
    seed: u64,
) -> Result<(SparseCollection, Vec<GridFunction>)> {
    let fs = inputs(config, domain, m, seed.wrapping_add(7919))?;
    let s = config.sparse(domain, seed, Some(&fs))?;
    Ok((s, fs))
}

fn merge(name: &str, instance: String, parts: Vec<(u64, ExperimentReport)>) -> ExperimentReport {
    let columns: Vec<&str> = parts
        .first()
        .map(|p| p.1.columns.iter().map(String::as_str).collect())
        .unwrap_or_default();
    let mut out = ExperimentReport::new(name, instance, &columns);
    for (seed, part) in parts {
        for (label, values) in part.rows {
            out.push(format!("seed={seed};{label}"), values);
        }
        out.notes
            .extend(part.notes.into_iter().map(|n| format!("seed={seed}: {n}")));
    }
    out
}

fn good_lambda(config: &RunConfig) -> Result<ExperimentReport> {
    let domain = config.domain()?;
    let q = config.f64_or("q", 0.25)?;
    let cfg = GoodLambdaConfig {
        q,
        r: config.f64_or("r", f64::INFINITY)?,
        lambda_grid: config.grid("lambda", lab::geometric_grid(1e-4, 1.0, 60))?,
        gamma_grid: config.grid("gamma", lab::height_aligned_gammas(q, 30))?,
        eta: config.f64_or("eta", 0.5)?,
        lorentz_p: config.f64_or("lorentz_p", 1.0)?,
        lorentz_s: config.f64_or("lorentz_s", 2.0)?,
    };
    cfg.validate()?;
    let w = config
        .function("weight", domain)?
        .unwrap_or(GridFunction::constant(domain, 1.0)?);
    w.require_weight()
        .map_err(|e| Error::InvalidParameter(format!("weight: {e}")))?;
    let r2_min = config.f64_or("r2_min", 0.8)?;
    let seeds = config.seeds()?;
    let parts: Vec<(u64, ExperimentReport)> = seeds
        .par_iter()
        .map(|&seed| {
            let (s, fs) = instance(config, domain, 1, seed)?;
            let a = CoefficientMap::from_averages(s.family(), &fs)?;
            Ok((seed, lab::good_lambda_experiment(&s, &a, &cfg, &w)?))
        })
        .collect::<Result<_>>()?;
    let reports: Vec<ExperimentReport> = parts.iter().map(|p| p.1.clone()).collect();
    let fit = lab::pooled_decay(&reports);
    let c_hats: Vec<f64> = reports.iter().filter_map(|r| r.metric("c_hat")).collect();
    let c_max = c_hats.iter().cloned().fold(0.0, f64::max);
    let c_min = c_hats.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut out = merge(
        "goodlambda",
        format!(
            "d={} L={} q={} r={} eta={} seeds={:?}",
            domain.dim(),
            domain.max_level(),
            cfg.q,
            cfg.r,
            cfg.eta,
            seeds
        ),
        parts,
    );
    out.metrics = vec![
        ("delta".into(), fit.delta),
        ("r2".into(), fit.r2),
        ("fit_points".into(), fit.points as f64),
        ("c_hat_max".into(), c_max),
        ("c_hat_min".into(), c_min),
    ];
    out.fitted = fit.delta;
    out.budget = r2_min;
    out.pass = fit.delta > 0.0 && fit.r2 >= r2_min;
    Ok(out)
}

fn jn_height(config: &RunConfig) -> Result<ExperimentReport> {
    let domain = config.domain()?;
    let seed = config.seed()?;
    let (s, _) = instance(config, domain, 1, seed)?;
    let w = config
        .function("weight", domain)?
        .unwrap_or(GridFunction::constant(domain, 1.0)?);
    let q0 = config.cube("q0", &domain)?;
    let grid = config.grid("lambda", (0..=domain.max_level()).map(f64::from).collect())?;
    lab::jn_height_experiment(&s, &q0, &w, &grid)
}

fn testing(config: &RunConfig) -> Result<ExperimentReport> {
    let domain = config.domain()?;
    let pvec = config.exponents()?;
    let ws = config.weights(domain, pvec.m())?;
    let seed = config.seed()?;
    let (s, _) = instance(config, domain, 1, seed)?;
    let q0 = config.cube("q0", &domain)?;
    let max_iter = config.usize_or("max_iter", 50)?;
    let tol = config.f64_or("tol", 1e-10)?;
    let outcome = lab::testing_constant(s.family(), &ws, &pvec, &q0, max_iter, tol)?;
    let mut report = ExperimentReport::new(
        "testing",
        format!(
            "d={} L={} p={pvec} Q0={q0} seed={seed}",
            domain.dim(),
            domain.max_level()
        ),
        &["value"],
    );
    for (i, v) in outcome.trace.iter().enumerate() {
        report.push(format!("step={i}"), vec![*v]);
    }
    report.metrics = vec![("iterations".into(), outcome.iterations as f64)];
    if !outcome.converged {
        report.notes.push(format!(
            "no fixed point after {} iterations; best iterate reported",
            outcome.iterations
        ));
    }
    report.fitted = outcome.value;
    report.budget = f64::NAN;
    report.pass = outcome.converged;
    Ok(report)
}

fn theorem(config: &RunConfig, which: Theorem) -> Result<ExperimentReport> {
    let domain = config.domain()?;
    let pvec = config.exponents()?;
    let ws = config.weights(domain, pvec.m())?;
    let budget = config.f64_or("budget", 1.0)?;
    let kind = config.string_or("inputs", "both");
    let sigma = config.f64_or("sigma", 0.5)?;
    if which == Theorem::A && config.string_or("branch", "general") == "sharp" {
        let key = |j: usize| {
            if config.contains("p") {
                "p".to_string()
            } else {
                format!("p{}", j + 1)
            }
        };
        if let Some(j) = (0..pvec.m()).find(|&j| !(pvec.pj(j) > 1.0 && pvec.pj(j).is_finite())) {
            return Err(Error::InvalidExponent(format!(
                "{}: the sharp branch needs p_j in (1, inf), got {}",
                key(j),
                pvec.pj(j)
            )));
        }
        if !(pvec.p() > 1.0) {
            return Err(Error::InvalidExponent(format!(
                "{}: the sharp branch needs p > 1, got {}",
                key(0),
                pvec.p()
            )));
        }
    }
    let mut instances = Vec::new();
    for seed in config.seeds()? {
        let s = config.sparse(domain, seed, None)?;
        let noise = lab::random_functions(domain, seed.wrapping_add(7919), pvec.m(), sigma)?;
        // `v_j` is undefined for `p_j = 1`; that slot keeps the noise.
        let dual = || -> Result<Vec<GridFunction>> {
            (0..pvec.m())
                .map(|j| {
                    if pvec.pj(j) > 1.0 {
                        ws.v_j(&pvec, j)?.mul(&noise[j])
                    } else {
                        Ok(noise[j].clone())
                    }
                })
                .collect()
        };
        match kind.as_str() {
            "dual" => instances.push((s.family().clone(), dual()?)),
            "lognormal" => instances.push((s.family().clone(), noise.clone())),
            "both" => {
                instances.push((s.family().clone(), dual()?));
                instances.push((s.family().clone(), noise.clone()));
            }
            other => {
                return Err(Error::InvalidParameter(format!(
                    "inputs: expected dual, lognormal or both, got {other:?}"
                )))
            }
        }
    }
    lab::theorem_experiment(which, &ws, &pvec, &instances, budget)
}

fn kolmogorov(config: &RunConfig) -> Result<ExperimentReport> {
    let domain = config.domain()?;
    let seed = config.seed()?;
    let p = config.f64_or("p", 1.0)?;
    let thetas = config.reals("theta")?.unwrap_or(vec![p / 2.0]);
    let samples = config.usize_or("samples", 100)?;
    let mu = config.function("mu", domain)?;
    let seeds = config.seeds()?;
    let parts: Vec<(u64, ExperimentReport)> = seeds
        .par_iter()
        .map(|&s| {
            let f = match config.function("f", domain)? {
                Some(f) => f,
                None => random_lognormal(domain, s, config.f64_or("sigma", 1.0)?)?,
            };
            Ok((
                s,
                lab::kolmogorov_check(&f, p, mu.as_ref(), &thetas, samples, s)?,
            ))
        })
        .collect::<Result<_>>()?;
    let pass = parts.iter().all(|p| p.1.pass);
    let worst = parts.iter().map(|p| p.1.fitted).fold(0.0, f64::max);
    let mut out = merge(
        "kolmogorov",
        format!(
            "d={} L={} p={p} seed={seed}",
            domain.dim(),
            domain.max_level()
        ),
        parts,
    );
    out.fitted = worst;
    out.budget = 1.0;
    out.pass = pass;
    Ok(out)
}

fn packing(config: &RunConfig) -> Result<ExperimentReport> {
    let domain = config.domain()?;
    let alphas = config.reals("alpha")?.unwrap_or(vec![0.3, 0.3]);
    let seeds = config.seeds()?;
    let parts: Vec<(u64, ExperimentReport)> = seeds
        .par_iter()
        .map(|&seed| {
            let (s, _) = instance(config, domain, 1, seed)?;
            let gs = match config.functions("g", domain, alphas.len())? {
                Some(gs) => gs,
                None => lab::random_functions(
                    domain,
                    seed.wrapping_add(104_729),
                    alphas.len(),
                    config.f64_or("sigma", 1.0)?,
                )?,
            };
            Ok((seed, lab::carleson_packing_check(&s, &gs, &alphas)?))
        })
        .collect::<Result<_>>()?;
    let pass = parts.iter().all(|p| p.1.pass);
    let worst = parts.iter().map(|p| p.1.fitted).fold(0.0, f64::max);
    let budget = parts
        .iter()
        .map(|p| p.1.budget)
        .fold(f64::INFINITY, f64::min);
    let mut out = merge(
        "packing",
        format!(
            "d={} L={} alpha={alphas:?}",
            domain.dim(),
            domain.max_level()
        ),
        parts,
    );
    out.fitted = worst;
    out.budget = budget;
    out.pass = pass;
    Ok(out)
}

fn lemma34(config: &RunConfig) -> Result<ExperimentReport> {
    let domain = config.domain()?;
    let pvec = config.exponents()?;
    let ws = config.weights(domain, pvec.m())?;
    let omega = config.function("omega", domain)?;
    let (s, _) = instance(config, domain, 1, config.seed()?)?;
    lab::lemma34_check(s.family(), &ws, &pvec, omega.as_ref())
}

fn linearization(config: &RunConfig) -> Result<ExperimentReport> {
    let domain = config.domain()?;
    let pvec = config.exponents()?;
    let ws = config.weights(domain, pvec.m())?;
    let theta = config.f64_or("theta", 1.0 / (2.0 * pvec.m() as f64))?;
    let (s, fs) = instance(config, domain, pvec.m(), config.seed()?)?;
    lab::linearization_check(s.family(), &fs, &ws, &pvec, theta)
}

fn exponents(config: &RunConfig) -> Result<ExperimentReport> {
    let pvec = config.exponents()?;
    let e = lab::alpha_beta(&pvec)?;
    let mut report = ExperimentReport::new("exponents", format!("p={pvec}"), &["value"]);
    for (k, v) in [
        ("alpha", e.alpha),
        ("beta", e.beta),
        ("min_alpha_beta", e.min_alpha_beta),
        ("improvement_region", e.improvement_region as u8 as f64),
        ("general", e.general),
        ("gamma", e.gamma),
        ("delta", e.delta),
    ] {
        report.push(k, vec![v]);
    }
    report.fitted = e.min_alpha_beta;
    report.budget = e.general;
    report.pass = true;
    Ok(report)
}

/// Weight tuple from mini-language specs.
pub fn parse_weights(domain: Domain, specs: &[&str]) -> Result<WeightTuple> {
    WeightTuple::new(
        specs
            .iter()
            .map(|s| GridFunction::from_spec(domain, s))
            .collect::<Result<_>>()?,
    )
}
