//! One driver per experiment kind. Trials fan out over a rayon pool and are
//! merged in trial order, so aggregates do not depend on the worker count.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;

use locaudit_core::adversary::experiment::lower_bound_trial;
use locaudit_core::adversary::{moment_matched_probs, world_separation, LowerBoundSetup};
use locaudit_core::auditor::{
    accuracy_interval, lower_bound_samples, simple_audit, upper_bound_samples, AuditInput, Auditor, AuditorConfig,
    ConstantAuditor, OracleAuditor, SimpleAuditor,
};
use locaudit_core::distributions::DistributionOracle;
use locaudit_core::measures::partition_profile;
use locaudit_core::seed::{rng_from_seed, trial_rng};
use locaudit_core::spheres::{mass_loss_scan, SpheresInstance};
use locaudit_core::{ConstantRule, Explainer, HyperRectangle, Label, PartitionExplainer, Point};

use crate::config::{admissible_grid, default_lambdas, AuditorKind, AutoOr, DistSpec, ExperimentConfig, Kind};
use crate::error::{HarnessError, HarnessResult};
use crate::record::{fmt_f64, fmt_opt, Aggregate, ExperimentRecord, RunVerdict, Table, TOOL_VERSION};

/// Sampling slack on top of `delta` when checking empirical coverage.
pub const COVERAGE_SLACK: f64 = 0.05;
/// Failure rate every non-oracle auditor must reach under the lower bound.
pub const LOWER_FAILURE_TARGET: f64 = 1.0 / 3.0 - 0.1;
/// Per-world frequency of the separation events.
pub const SEPARATION_TARGET: f64 = 0.9;

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    /// `None` lets rayon pick.
    pub workers: Option<usize>,
}

struct Outcome {
    config: ExperimentConfig,
    pass: bool,
    stats: BTreeMap<String, f64>,
    tables: Vec<Table>,
}

fn auditor_config(cfg: &ExperimentConfig) -> HarnessResult<AuditorConfig> {
    Ok(AuditorConfig::new(cfg.gamma, cfg.eps1, cfg.eps2, cfg.delta)?)
}

/// Validates, resolves `"auto"` fields, runs, and returns the record.
pub fn run(cfg: &ExperimentConfig, opts: &RunOptions) -> HarnessResult<ExperimentRecord> {
    let mut cfg = cfg.clone();
    if let Some(s) = opts.seed {
        cfg.master_seed = s;
    }
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.unwrap_or(0))
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;
    let start = Instant::now();
    let out = pool.install(|| match cfg.kind {
        Kind::AuditUpper => audit_upper(cfg),
        Kind::AuditLower => audit_lower(cfg),
        Kind::MomentCheck => moment_check(cfg),
        Kind::WorldSeparation => separation(cfg),
        Kind::SpheresScan => spheres_scan(cfg),
        Kind::LocalitySweep => locality_sweep(cfg),
    })?;
    Ok(ExperimentRecord {
        tool_version: TOOL_VERSION.to_string(),
        master_seed: out.config.master_seed,
        config: Some(out.config),
        wall_clock_secs: start.elapsed().as_secs_f64(),
        aggregate: Aggregate { verdict: Some(RunVerdict::from_pass(out.pass)), stats: out.stats },
        tables: out.tables,
    })
}

fn rate(hits: usize, of: usize) -> f64 {
    if of == 0 {
        0.0
    } else {
        hits as f64 / of as f64
    }
}

fn audit_upper(mut cfg: ExperimentConfig) -> HarnessResult<Outcome> {
    let dist = cfg.distribution.product()?;
    let DistSpec::UniformBox { lo, hi } = &cfg.distribution else { unreachable!("validated") };
    let support = HyperRectangle::from_bounds(lo.iter().map(|v| v.0).collect(), hi.iter().map(|v| v.0).collect())?;
    let cells = cfg.cells;
    let neg = cfg.negative_cells.unwrap_or(cells / 2);
    let lambda = cfg.lambda.unwrap_or(1.0 / cells as f64);
    let acfg = auditor_config(&cfg)?;
    let n = cfg.n.or_else(|| Ok(upper_bound_samples(&acfg, lambda)?))? as usize;
    cfg.negative_cells = Some(neg);
    cfg.lambda = Some(lambda);
    cfg.n = AutoOr::Value(n as u64);

    let expl = PartitionExplainer::slabs(&support, 0, cells, ConstantRule::Fixed(Label::Pos))?;
    let f = |x: &Point| match expl.cell_of(x) {
        Some(i) if i < neg => Label::Neg,
        _ => Label::Pos,
    };
    let truth = partition_profile(&expl, &dist, |i| if i < neg { 1.0 } else { 0.0 })?;
    let interval = accuracy_interval(&truth, &acfg)?;
    let seed = cfg.master_seed;
    let reports = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| {
            let trial = || {
                let mut rng = trial_rng(seed, t);
                let xs: Vec<Point> = (0..n).map(|_| dist.sample(&mut rng)).collect();
                let ys: Vec<Label> = xs.iter().map(f).collect();
                let es = xs.iter().map(|x| expl.explain(&f, x)).collect::<locaudit_core::Result<Vec<_>>>()?;
                Ok(simple_audit(&AuditInput::new(xs, ys, es)?, &acfg)?.judge(interval))
            };
            trial().map_err(|source| HarnessError::Trial { index: t, source })
        })
        .collect::<HarnessResult<Vec<_>>>()?;

    let mut table =
        Table::new("trials", &["trial", "estimate", "validated", "red", "blue", "interval_lo", "interval_hi", "in_interval"]);
    let mut hits = 0;
    let mut sum = 0.0;
    for (t, r) in reports.iter().enumerate() {
        let inside = r.verdict == locaudit_core::auditor::Verdict::Pass;
        hits += inside as usize;
        sum += r.estimate;
        table.push(vec![
            t.to_string(),
            fmt_f64(r.estimate),
            r.n_validated.to_string(),
            r.red.to_string(),
            r.blue.to_string(),
            fmt_f64(interval[0]),
            fmt_f64(interval[1]),
            inside.to_string(),
        ]);
    }
    let coverage = rate(hits, reports.len());
    let stats = BTreeMap::from([
        ("n".into(), n as f64),
        ("m".into(), acfg.m() as f64),
        ("k".into(), acfg.k() as f64),
        ("lambda".into(), lambda),
        ("interval_lo".into(), interval[0]),
        ("interval_hi".into(), interval[1]),
        ("coverage".into(), coverage),
        ("failure_rate".into(), 1.0 - coverage),
        ("mean_estimate".into(), sum / reports.len() as f64),
        ("required_coverage".into(), 1.0 - cfg.delta - COVERAGE_SLACK),
    ]);
    Ok(Outcome { pass: coverage >= 1.0 - cfg.delta - COVERAGE_SLACK, config: cfg, stats, tables: vec![table] })
}

fn lower_setup(cfg: &mut ExperimentConfig) -> HarnessResult<LowerBoundSetup> {
    let dist = cfg.distribution.product()?;
    let lambda = cfg.lambda.expect("validated");
    let k = match cfg.k {
        AutoOr::Auto => None,
        AutoOr::Value(k) => Some(k),
    };
    let setup = LowerBoundSetup::new(dist, auditor_config(cfg)?, lambda, cfg.delta_c, k)?;
    cfg.k = AutoOr::Value(setup.partition.k);
    Ok(setup)
}

fn audit_lower(mut cfg: ExperimentConfig) -> HarnessResult<Outcome> {
    let setup = lower_setup(&mut cfg)?;
    let n = cfg.n.or_else(|| Ok(lower_bound_samples(&setup.cfg, setup.lambda)?))? as usize;
    cfg.n = AutoOr::Value(n as u64);
    let constant = cfg.constant_estimate.unwrap_or(0.5 + 2.0 * cfg.eps2);
    cfg.constant_estimate = Some(constant);

    let mut table =
        Table::new("trials", &["auditor", "trial", "world", "estimate", "interval_lo", "interval_hi", "failed", "error"]);
    let mut stats = BTreeMap::from([
        ("n".into(), n as f64),
        ("k".into(), setup.partition.k as f64),
        ("cells".into(), setup.partition.len() as f64),
        ("two_m".into(), setup.two_m() as f64),
        ("required_failure_rate".into(), LOWER_FAILURE_TARGET),
    ]);
    let mut pass = true;
    for kind in cfg.auditors.clone() {
        let auditor: Box<dyn Auditor> = match kind {
            AuditorKind::Simple => Box::new(SimpleAuditor),
            AuditorKind::Constant => Box::new(ConstantAuditor(constant)),
            AuditorKind::Oracle => Box::new(OracleAuditor),
        };
        let seed = cfg.master_seed;
        let records = (0..cfg.trials as u64)
            .into_par_iter()
            .map(|t| {
                lower_bound_trial(&setup, n, auditor.as_ref(), seed, t).map_err(|source| HarnessError::Trial { index: t, source })
            })
            .collect::<HarnessResult<Vec<_>>>()?;
        let failures = records.iter().filter(|r| r.failed).count();
        let fr = rate(failures, records.len());
        stats.insert(format!("failure_rate.{}", auditor.name()), fr);
        if kind != AuditorKind::Oracle {
            pass &= fr >= LOWER_FAILURE_TARGET;
        }
        for r in records {
            table.push(vec![
                auditor.name().to_string(),
                r.index.to_string(),
                r.world.to_string(),
                fmt_opt(r.estimate),
                fmt_f64(r.interval[0]),
                fmt_f64(r.interval[1]),
                r.failed.to_string(),
                r.error.unwrap_or_default(),
            ]);
        }
    }
    Ok(Outcome { config: cfg, pass, stats, tables: vec![table] })
}

fn moment_check(mut cfg: ExperimentConfig) -> HarnessResult<Outcome> {
    let grid = cfg.grid.clone().unwrap_or_else(admissible_grid);
    cfg.grid = Some(grid.clone());
    let mut table = Table::new(
        "residuals",
        &[
            "gamma",
            "eps1",
            "eps2",
            "l",
            "m",
            "max_residual",
            "residual_at_2m",
            "relative_gap_at_2m",
            "offset_gap_ratio",
            "conditions_hold",
            "error",
        ],
    );
    let mut sums = Table::new("power_sums", &["gamma", "eps1", "eps2", "t", "relative_residual"]);
    let mut held = 0;
    let mut worst: f64 = 0.0;
    let mut min_gap = f64::INFINITY;
    for &[g, e1, e2] in &grid {
        let head = vec![fmt_f64(g), fmt_f64(e1), fmt_f64(e2)];
        match moment_matched_probs(g, e1, e2) {
            Ok(mp) => {
                let c = mp.conditions();
                held += c.all_hold() as usize;
                worst = worst.max(c.max_residual);
                min_gap = min_gap.min(c.relative_gap_at_2m);
                for (t, r) in c.residuals.iter().enumerate() {
                    sums.push([head.clone(), vec![t.to_string(), fmt_f64(*r)]].concat());
                }
                table.push(
                    [
                        head,
                        vec![
                            mp.l.to_string(),
                            mp.m.to_string(),
                            fmt_f64(c.max_residual),
                            fmt_f64(c.residual_at_2m),
                            fmt_f64(c.relative_gap_at_2m),
                            fmt_f64(c.offset_gap_ratio),
                            c.all_hold().to_string(),
                            String::new(),
                        ],
                    ]
                    .concat(),
                );
            }
            Err(e) => {
                let mut row = head;
                row.extend(std::iter::repeat_n(String::new(), 6));
                row.extend(["false".to_string(), e.to_string()]);
                table.push(row);
            }
        }
    }
    let stats = BTreeMap::from([
        ("triples".into(), grid.len() as f64),
        ("conditions_hold".into(), held as f64),
        ("max_residual".into(), worst),
        ("min_relative_gap_at_2m".into(), if min_gap.is_finite() { min_gap } else { 0.0 }),
    ]);
    Ok(Outcome { pass: held == grid.len(), config: cfg, stats, tables: vec![table, sums] })
}

fn separation(mut cfg: ExperimentConfig) -> HarnessResult<Outcome> {
    let setup = lower_setup(&mut cfg)?;
    let rep = world_separation(&setup, cfg.trials, cfg.master_seed);
    let mut table = Table::new("trials", &["trial", "world", "loss_at_upper", "loss_at_lower", "max_deviation", "in_event"]);
    for (i, r) in rep.records.iter().enumerate() {
        table.push(vec![
            i.to_string(),
            r.world.to_string(),
            fmt_f64(r.loss_at_upper),
            fmt_f64(r.loss_at_lower),
            fmt_f64(r.max_deviation),
            r.in_event.to_string(),
        ]);
    }
    let stats = BTreeMap::from([
        ("freq_world1".into(), rep.freq_world1),
        ("freq_world0".into(), rep.freq_world0),
        ("freq_concentrated".into(), rep.freq_concentrated),
        ("k".into(), rep.k as f64),
        ("cells".into(), rep.cells as f64),
        ("required_frequency".into(), SEPARATION_TARGET),
    ]);
    let pass = rep.freq_world1 >= SEPARATION_TARGET && rep.freq_world0 >= SEPARATION_TARGET;
    Ok(Outcome { config: cfg, pass, stats, tables: vec![table] })
}

fn spheres_scan(cfg: ExperimentConfig) -> HarnessResult<Outcome> {
    let DistSpec::Spheres { d } = cfg.distribution else { unreachable!("validated") };
    let inst = SpheresInstance::new(d)?;
    let mut rng = rng_from_seed(cfg.master_seed);
    let rep = mass_loss_scan(&inst, cfg.trials, cfg.n_points, cfg.restarts, cfg.slack, &mut rng)?;
    let mut table = Table::new(
        "scan",
        &["d", "ball_center_norm", "radius", "theta1", "theta2", "theta3", "mass", "mass_threshold", "best_loss", "verdict"],
    );
    for r in &rep.rows {
        table.push(vec![
            r.d.to_string(),
            fmt_f64(r.ball_center_norm),
            fmt_f64(r.radius),
            fmt_f64(r.theta[0]),
            fmt_f64(r.theta[1]),
            fmt_f64(r.theta[2]),
            fmt_f64(r.mass),
            fmt_f64(r.mass_threshold),
            fmt_opt(r.best_loss),
            if r.pass { "PASS" } else { "FAIL" }.to_string(),
        ]);
    }
    let passed = rep.rows.iter().filter(|r| r.pass).count();
    let point_b = rep.rows.iter().any(|r| r.mass < r.mass_threshold && r.best_loss.is_some_and(|l| l < 0.01));
    let heavy = rep
        .rows
        .iter()
        .filter(|r| r.mass >= r.mass_threshold)
        .filter_map(|r| r.best_loss)
        .fold(f64::INFINITY, f64::min);
    let mut stats = BTreeMap::from([
        ("d".into(), d as f64),
        ("balls".into(), rep.rows.len() as f64),
        ("passed".into(), passed as f64),
        ("mass_threshold".into(), inst.mass_threshold()),
        ("small_ball_near_zero_loss".into(), point_b as u8 as f64),
        ("whole_space_loss".into(), rep.rows[0].best_loss.unwrap_or(0.0)),
    ]);
    if heavy.is_finite() {
        stats.insert("min_loss_heavy_balls".into(), heavy);
    }
    Ok(Outcome { pass: rep.all_pass(), config: cfg, stats, tables: vec![table] })
}

fn locality_sweep(mut cfg: ExperimentConfig) -> HarnessResult<Outcome> {
    let acfg = auditor_config(&cfg)?;
    let mut lambdas = cfg.lambdas.clone().unwrap_or_else(default_lambdas);
    lambdas.sort_by(f64::total_cmp);
    cfg.lambdas = Some(lambdas.clone());
    let mut table = Table::new("bounds", &["lambda", "upper_n", "lower_n"]);
    let mut prev_upper = u64::MAX;
    let mut prev_lower = u64::MAX;
    let mut monotone = true;
    for &l in &lambdas {
        let up = upper_bound_samples(&acfg, l)?;
        let low = lower_bound_samples(&acfg, l).ok();
        monotone &= up <= prev_upper;
        prev_upper = up;
        if let Some(v) = low {
            monotone &= v <= prev_lower;
            prev_lower = v;
        }
        table.push(vec![fmt_f64(l), up.to_string(), low.map(|v| v.to_string()).unwrap_or_default()]);
    }
    let stats = BTreeMap::from([("points".into(), lambdas.len() as f64), ("monotone".into(), monotone as u8 as f64)]);
    Ok(Outcome { config: cfg, pass: monotone, stats, tables: vec![table] })
}
