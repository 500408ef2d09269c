//! One function per command. Each validates everything it reads from the
//! config before starting any heavy computation.

use std::f64::consts::{LN_2, PI};

use rand::Rng;
use serde_json::{json, Value};
use torwalk::limits::{
    beta0, bound_check, log_sum_ratio, shell_inverse_square_sum, shell_weighted_sum, t_scale, target_laplace,
    RegimeParams, Rho,
};
use torwalk::mc::{lineage_count_law, simulate_hits, spread_starts, StartRule, DEFAULT_STEP_CAP};
use torwalk::spectral::{character_sum, condition_row, SpectralGrid};
use torwalk::sum::pairwise_sum;
use torwalk::{ConditionParams, Region, SeedSpec, Site, TorusSpec, TorusWalk};

use crate::config::{self, Command, LaplaceMode, RunConfig, StartName, StartSetting};
use crate::error::CliError;
use crate::report::{Outcome, Table};

pub const DEFAULT_SEED: u64 = 1;

/// Command-line overrides.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
}

pub fn run(command: Command, cfg: &RunConfig, ov: Overrides) -> Result<Outcome, CliError> {
    config::check_command(cfg, command)?;
    match command {
        Command::Laplace => laplace(cfg),
        Command::Uniformity => uniformity(cfg),
        Command::Beta0 => beta0_cmd(cfg),
        Command::Simulate => simulate(cfg, ov),
        Command::Coalesce => coalesce(cfg, ov),
        Command::Conditions => conditions(cfg),
        Command::Audit => audit(cfg, ov),
    }
}

/// Seed actually used: command line, then `mc.seed`, then the default.
pub fn resolve_seed(cfg: &RunConfig, ov: Overrides) -> u64 {
    ov.seed.or(cfg.mc.as_ref().and_then(|m| m.seed)).unwrap_or(DEFAULT_SEED)
}

type Setup = (Vec<(usize, TorusSpec)>, config::KernelPlan, Vec<usize>);

fn sides_and_ranges(cfg: &RunConfig) -> Result<Setup, CliError> {
    let sides = config::torus_sides(cfg)?;
    let plan = config::kernel_plan(cfg)?;
    let ls: Vec<usize> = sides.iter().map(|s| s.0).collect();
    plan.check_sides(&ls)?;
    let ms = ls.iter().map(|&l| plan.range_for(l)).collect::<Result<_, _>>()?;
    Ok((sides, plan, ms))
}

fn ranges_json(sides: &[(usize, TorusSpec)], ms: &[usize]) -> Value {
    Value::Array(sides.iter().zip(ms).map(|(s, m)| json!({ "L": s.0, "M": m })).collect())
}

pub fn laplace(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (sides, plan, ms) = sides_and_ranges(cfg)?;
    let lambdas = config::lambdas(cfg, false)?;
    let mode = config::laplace_mode(cfg)?;
    let quad = config::quadrature(cfg)?;

    let mut regions = Vec::with_capacity(sides.len());
    for &(l, spec) in &sides {
        let sites: Vec<Site> = match mode {
            LaplaceMode::Infinite => spec.sites().filter(|p| !p.is_origin()).collect(),
            LaplaceMode::Finite { alpha, v_log_power, .. } => {
                let v = (l as f64).ln().powf(v_log_power);
                Region::annulus(spec, alpha, v).punctured().enumerate().map_err(|e| CliError::Config(e.to_string()))?
            }
        };
        if sites.is_empty() {
            return Err(CliError::Config(format!("start region is empty at L = {l}")));
        }
        regions.push(sites);
    }

    let mut table = Table::new(&["L", "M", "lambda", "sup_gap", "target"]);
    let mut resolved = Vec::new();
    for ((&(l, spec), &m), sites) in sides.iter().zip(&ms).zip(&regions) {
        let kernel = plan.torus_kernel(spec, &quad)?;
        let grid = SpectralGrid::from_torus_kernel(&kernel);
        let sigma2 = kernel.sigma2() / (m * m) as f64;
        let (time_unit, params) = match mode {
            LaplaceMode::Infinite => ((l * l) as f64, RegimeParams::new(Rho::Infinite, sigma2, 0.0)?),
            LaplaceMode::Finite { rho, alpha, .. } => {
                ((l * l) as f64 * t_scale(l, m), RegimeParams::new(Rho::Finite(rho), sigma2, alpha)?)
            }
        };
        for &lambda in &lambdas {
            let field = grid.laplace_hit(lambda / time_unit)?;
            let target = target_laplace(&params, lambda)?;
            let gap = field.sup_deviation(sites, target).expect("region checked non-empty");
            table.push(vec![l.into(), m.into(), lambda.into(), gap.into(), target.into()]);
        }
        resolved.push(json!({ "L": l, "M": m, "sigma2": sigma2, "time_unit": time_unit, "region_size": sites.len() }));
    }
    Ok(Outcome { table, resolved: json!({ "cells": resolved }), warnings: vec![] })
}

pub fn uniformity(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (sides, plan, ms) = sides_and_ranges(cfg)?;
    let ks = config::t_multiples(cfg)?;
    let quad = config::quadrature(cfg)?;
    let mut table = Table::new(&["L", "M", "k", "t", "gap", "bound"]);
    for (&(l, spec), &m) in sides.iter().zip(&ms) {
        let grid = SpectralGrid::from_torus_kernel(&plan.torus_kernel(spec, &quad)?);
        let unit = ((l * l) as f64 / (m * m) as f64).max((l as f64).ln());
        for &k in &ks {
            let g = grid.uniformity_gap(k * unit)?;
            table.push(vec![l.into(), m.into(), k.into(), g.t.into(), g.gap.into(), g.bound.into()]);
        }
    }
    Ok(Outcome { table, resolved: json!({ "ranges": ranges_json(&sides, &ms) }), warnings: vec![] })
}

pub fn beta0_cmd(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let plan = config::kernel_plan(cfg)?;
    let cs = config::c_values(cfg)?;
    let quad = config::quadrature(cfg)?;
    let q0_range = match plan.mixture_parts() {
        Some((_, q0)) => q0,
        None => {
            return Err(CliError::Config(
                "beta0 needs a mixture kernel block (its `q0` is the short-range part)".into(),
            ))
        }
    };
    let q0 = torwalk::JumpKernel::uniform(q0_range)?;
    let mut table = Table::new(&["c", "level", "per_axis", "estimate", "delta"]);
    for &c in &cs {
        let est = beta0(c, &q0, &quad)?;
        let base = 12.0 / (c * PI);
        let mut prev: Option<f64> = None;
        for (i, lvl) in est.integral.levels.iter().enumerate() {
            let value = base + lvl.extrapolated;
            let delta = prev.map_or(f64::NAN, |p| (value - p).abs());
            table.push(vec![c.into(), i.into(), lvl.per_axis.into(), value.into(), delta.into()]);
            prev = Some(value);
        }
    }
    Ok(Outcome { table, resolved: json!({ "q0_range": q0_range, "tolerance": quad.tolerance }), warnings: vec![] })
}

pub fn simulate(cfg: &RunConfig, ov: Overrides) -> Result<Outcome, CliError> {
    let (sides, plan, ms) = sides_and_ranges(cfg)?;
    let lambdas = config::lambdas(cfg, true)?;
    let mc = config::mc(cfg)?;
    if mc.replicates < 2 {
        return Err(CliError::Config("`mc.replicates` must be at least 2".into()));
    }
    let quad = config::quadrature(cfg)?;
    let seed = SeedSpec::new(resolve_seed(cfg, ov));
    let start = match mc.start {
        None | Some(StartSetting::Named(StartName::Uniform)) => StartRule::UniformNonOrigin,
        Some(StartSetting::Site([x, y])) => StartRule::Fixed(Site::new(x, y)),
    };
    for &(l, spec) in &sides {
        if let StartRule::Fixed(x) = start {
            if spec.wrap(x).is_origin() {
                return Err(CliError::Config(format!("start {x} is the origin of T_{l}")));
            }
        }
    }

    let mut table = Table::new(&["L", "lambda", "mc_estimate", "se", "exact", "z_score"]);
    for (cell, &(l, spec)) in sides.iter().enumerate() {
        let kernel = plan.torus_kernel(spec, &quad)?;
        let walk = TorusWalk::new(&kernel)?;
        let samples = simulate_hits(
            &walk,
            start,
            mc.replicates,
            seed.cell(cell as u64),
            mc.step_cap.unwrap_or(DEFAULT_STEP_CAP),
        )?;
        // lambda is on the L^2 time scale; the walk runs on the unscaled clock
        let time_unit = (l * l) as f64;
        let scaled: Vec<f64> = lambdas.iter().map(|&x| x / time_unit).collect();
        let estimates = torwalk::mc::estimate_laplace(&samples, &scaled)?;
        let grid = SpectralGrid::from_torus_kernel(&kernel);
        for (&lambda, est) in lambdas.iter().zip(estimates) {
            let exact = if lambda == 0.0 {
                1.0
            } else {
                let field = grid.laplace_hit(est.lambda)?;
                match start {
                    StartRule::Fixed(x) => field.value(x),
                    StartRule::UniformNonOrigin => {
                        let o = spec.origin_index();
                        let vals: Vec<f64> =
                            field.values().iter().enumerate().filter(|(i, _)| *i != o).map(|(_, &v)| v).collect();
                        pairwise_sum(&vals) / vals.len() as f64
                    }
                }
            };
            let diff = est.estimate - exact;
            let z = if est.se > 0.0 {
                diff / est.se
            } else if diff == 0.0 {
                0.0
            } else {
                f64::INFINITY.copysign(diff)
            };
            table.push(vec![l.into(), lambda.into(), est.estimate.into(), est.se.into(), exact.into(), z.into()]);
        }
    }
    let seed_json = json!({ "master": seed.master, "replicates": mc.replicates });
    Ok(Outcome { table, resolved: json!({ "ranges": ranges_json(&sides, &ms), "mc": seed_json }), warnings: vec![] })
}

pub fn coalesce(cfg: &RunConfig, ov: Overrides) -> Result<Outcome, CliError> {
    let (sides, plan, ms) = sides_and_ranges(cfg)?;
    let s_values = config::s_values(cfg)?;
    let mc = config::mc(cfg)?;
    if mc.replicates == 0 {
        return Err(CliError::Config("`mc.replicates` must be positive".into()));
    }
    let n = mc.lineages.unwrap_or(2);
    for &(l, _) in &sides {
        if n < 2 || n > l {
            return Err(CliError::Config(format!("need 2 <= lineages <= L, got {n} at L = {l}")));
        }
    }
    let quad = config::quadrature(cfg)?;
    let seed = SeedSpec::new(resolve_seed(cfg, ov));

    let mut table = Table::new(&["L", "M", "s", "k", "empirical", "target", "se"]);
    let mut warnings = Vec::new();
    let mut cells = Vec::new();
    for (cell, (&(l, spec), &m)) in sides.iter().zip(&ms).enumerate() {
        let kernel = plan.torus_kernel(spec, &quad)?;
        let walk = TorusWalk::new(&kernel)?;
        let sigma2 = kernel.sigma2() / (m * m) as f64;
        let starts = spread_starts(spec, n);
        let law = lineage_count_law(
            &walk,
            &starts,
            &s_values,
            sigma2,
            mc.replicates,
            seed.cell(cell as u64),
            mc.step_cap.unwrap_or(DEFAULT_STEP_CAP),
        )?;
        if law.separation_warning {
            warnings.push(format!("L = {l}: starting lineages closer than L / log L"));
        }
        for row in &law.rows {
            for k in 1..=n {
                table.push(vec![
                    l.into(),
                    m.into(),
                    row.s.into(),
                    k.into(),
                    row.empirical[k - 1].into(),
                    row.target[k - 1].into(),
                    row.se[k - 1].into(),
                ]);
            }
        }
        let starts_json: Vec<[i64; 2]> = starts.iter().map(|p| [p.x, p.y]).collect();
        cells.push(json!({ "L": l, "M": m, "sigma2": sigma2, "time_unit": law.time_unit, "starts": starts_json }));
    }
    Ok(Outcome { table, resolved: json!({ "cells": cells, "seed": seed.master, "lineages": n }), warnings })
}

pub fn conditions(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let plan = config::kernel_plan(cfg)?;
    if plan.is_meanfield() {
        return Err(CliError::Config("conditions need a plane kernel family".into()));
    }
    if plan.has_range_rule() {
        return Err(CliError::Config(
            "conditions take their ranges from `conditions.m_values`; drop the kernel range".into(),
        ));
    }
    let block = cfg.conditions.as_ref().ok_or_else(|| CliError::Config("missing `conditions`".into()))?;
    if block.m_values.is_empty() || block.m_values.iter().any(|&m| m == 0 || m % 2 != 0) {
        return Err(CliError::Config("`conditions.m_values` must be a non-empty list of positive even ranges".into()));
    }
    let params = ConditionParams { delta: block.delta, delta_prime: block.delta_prime, a: block.a };
    let quad = config::quadrature(cfg)?;
    let mut table = Table::new(&["M", "sigma2", "small_freq_deviation", "mid_freq_min_gap", "large_freq_max_abs"]);
    for &m in &block.m_values {
        let kernel = plan.kernel(m, &quad)?.expect("plane family");
        let row = condition_row(&kernel, &params)?;
        table.push(vec![
            row.range.into(),
            row.sigma2.into(),
            row.small_freq_deviation.into(),
            row.mid_freq_min_gap.into(),
            row.large_freq_max_abs.into(),
        ]);
    }
    Ok(Outcome { table, resolved: json!({}), warnings: vec![] })
}

pub fn audit(cfg: &RunConfig, ov: Overrides) -> Result<Outcome, CliError> {
    let block = cfg.audit.as_ref().ok_or_else(|| CliError::Config("missing `audit`".into()))?;
    if block.draws == 0 || block.k_max == 0 || block.j == 0 || block.ratio_k < 2 {
        return Err(CliError::Config("audit needs draws, k_max, j >= 1 and ratio_k >= 2".into()));
    }
    let sides = config::torus_sides(cfg)?;
    let seed = SeedSpec::new(resolve_seed(cfg, ov));
    let mut rng = seed.stream(0);

    let mut torus_ratio = 0.0f64;
    let mut disc_ratio = 0.0f64;
    let mut all_hold = true;
    let mut c0 = 0.0f64;
    for _ in 0..block.draws {
        let k = rng.random_range(1..=block.k_max);
        let theta = loop {
            let th = [rng.random_range(-PI..=PI), rng.random_range(-PI..=PI)];
            if th[0] != 0.0 || th[1] != 0.0 {
                break th;
            }
        };
        let b = bound_check(k, theta);
        all_hold &= b.holds();
        torus_ratio = torus_ratio.max(b.torus_sum / b.torus_bound);
        disc_ratio = disc_ratio.max(b.disc_sum / b.disc_bound);
        if k > block.j {
            let norm = theta[0].abs().max(theta[1].abs());
            c0 = c0.max(shell_weighted_sum(k, block.j, theta) * (block.j as f64 * norm).min(1.0));
        }
    }

    let mut table = Table::new(&["check", "parameter", "value", "reference", "pass"]);
    table.push(vec![
        "torus_square_bound_ratio".into(),
        block.draws.into(),
        torus_ratio.into(),
        1.0.into(),
        (torus_ratio <= 1.0).into(),
    ]);
    table.push(vec![
        "disc_bound_ratio".into(),
        block.draws.into(),
        disc_ratio.into(),
        1.0.into(),
        (disc_ratio <= 1.0).into(),
    ]);
    table.push(vec![
        "bounds_hold".into(),
        block.draws.into(),
        (all_hold as usize as f64).into(),
        1.0.into(),
        all_hold.into(),
    ]);
    table.push(vec!["shell_c0_lower_bound".into(), block.j.into(), c0.into(), f64::NAN.into(), c0.is_finite().into()]);

    for (cell, &(l, spec)) in sides.iter().enumerate() {
        let mut r = seed.cell(cell as u64).stream(0);
        let mut worst = 0.0f64;
        for _ in 0..block.orthogonality_points {
            let o = spec.origin_index();
            let mut i = r.random_range(0..spec.size() - 1);
            if i >= o {
                i += 1;
            }
            worst = worst.max(character_sum::<f64>(spec, spec.site(i)).norm());
        }
        let tol = 1e-9 * (l * l) as f64;
        table.push(vec!["orthogonality_max_abs".into(), l.into(), worst.into(), tol.into(), (worst < tol).into()]);
    }

    let k = block.ratio_k;
    let ratio = log_sum_ratio(k);
    let two_pi = 2.0 * PI;
    table.push(vec![
        "log_sum_ratio".into(),
        k.into(),
        ratio.into(),
        two_pi.into(),
        ((ratio / two_pi - 1.0).abs() < 0.05).into(),
    ]);
    let shell = shell_inverse_square_sum(k);
    let reference = two_pi * LN_2;
    table.push(vec![
        "shell_inverse_square_sum".into(),
        k.into(),
        shell.into(),
        reference.into(),
        ((shell / reference - 1.0).abs() < 0.02).into(),
    ]);
    Ok(Outcome { table, resolved: json!({ "seed": seed.master }), warnings: vec![] })
}
