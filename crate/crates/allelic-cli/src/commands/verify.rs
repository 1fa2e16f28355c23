//! `verify`: cross-validate the closed forms end to end.
//!
//! Stage 1 (exact, finite-support laws only): exhaustively enumerate every
//! tree up to `enum_max` individuals with exact rational probabilities and
//! compare, cell by cell, against P(T = n, A = k) = pi^{*n}_{n-k,k-1} / n,
//! the allelic-tree product formula, the first-cluster law
//! pi^{*n}_{n-1,l} / n, and the total enumerated mass. Any mismatch is
//! printed and fails the run. Stage 2 (statistical, any law): Monte Carlo
//! counts of (T, A) against the same grid via a pooled chi-square test plus
//! a per-cell standard-error sweep. Exit 0 iff both stages pass.

use std::collections::BTreeMap;
use std::path::PathBuf;

use allelic_core::dist::{p_tree_size_alleles, DistError};
use allelic_core::enumerate::{enumerate_cluster_prefix, enumerate_trees, DEFAULT_STATE_BUDGET};
use allelic_core::exact::{
    p_allelic_tree_exact, p_cluster_size_mutants_exact, p_tree_size_alleles_exact,
    p_tree_size_exact, parse_ratio, ExactConvolutionTable, Rational,
};
use allelic_core::gof::{compare, ks_normal, Observation};
use allelic_core::ConvolutionTable;
use anyhow::{bail, Context, Result};
use serde::Serialize;

use crate::config::{load_config, pick, positive, require, unit_open};
use crate::lawspec::{load_law, LoadedLaw};
use crate::parallel::parallel_monte_carlo;
use crate::report::{self, echo_object, SCHEMA_VERSION};

const DEFAULT_ENUM_MAX: usize = 8;
const DEFAULT_MC_TREES: u64 = 200_000;
const DEFAULT_CAP: usize = 100_000;
const DEFAULT_STAT_N_MAX: usize = 30;
const DEFAULT_SIGNIFICANCE: f64 = 1e-3;
const DEFAULT_SE_LIMIT: f64 = 4.0;
const DEFAULT_CELL_FLOOR: f64 = 1e-3;
/// Probability added to the chosen cell's formula value by fault injection.
const FAULT_BUMP: (i64, i64) = (1, 1000);

/// Arguments for `verify`.
#[derive(Debug, clap::Args)]
pub struct VerifyArgs {
    /// Law file (TOML).
    #[arg(long)]
    law: Option<PathBuf>,
    /// Config file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for the report and cell table (optional).
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed (required; there is no wall-clock default).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for the Monte Carlo stage.
    #[arg(long)]
    workers: Option<usize>,
    /// Exhaustive-enumeration size bound.
    #[arg(long)]
    enum_max: Option<usize>,
    /// Monte Carlo sample size.
    #[arg(long)]
    mc_trees: Option<u64>,
    /// Per-tree individual cap; larger trees are censored.
    #[arg(long)]
    cap: Option<usize>,
    /// Largest tree size in the statistical grid.
    #[arg(long)]
    stat_n_max: Option<usize>,
    /// Chi-square significance level.
    #[arg(long)]
    significance: Option<f64>,
    /// Per-cell standard-error limit.
    #[arg(long)]
    se_limit: Option<f64>,
    /// Cells with at least this probability must sit within the SE limit.
    #[arg(long)]
    cell_floor: Option<f64>,
    /// Corrupt the formula value of joint cell "n,k" (test hook).
    #[arg(long, hide = true)]
    inject_fault: Option<String>,
}

#[derive(Serialize)]
struct Mismatch {
    check: &'static str,
    cell: String,
    expected: String,
    got: String,
}

#[derive(Serialize)]
struct ExactStage {
    ran: bool,
    notice: Option<String>,
    checks: u64,
    mismatches: Vec<Mismatch>,
}

#[derive(Serialize, Clone)]
struct CellOut {
    n: u32,
    k: u32,
    probability: f64,
    expected: f64,
    observed: u64,
    z: f64,
}

#[derive(Serialize)]
struct StatStage {
    n_trees: u64,
    censoring_rate: f64,
    chi_square: f64,
    dof: usize,
    p_value: f64,
    tv: f64,
    impossible: u64,
    flagged: Vec<CellOut>,
    ks_statistic: Option<f64>,
    ks_p_value: Option<f64>,
    pass: bool,
}

#[derive(Serialize)]
struct VerifyReport {
    schema_version: u32,
    command: &'static str,
    config: serde_json::Value,
    exact_stage: ExactStage,
    statistical_stage: StatStage,
    pass: bool,
}

fn parse_fault(text: &str) -> Result<(usize, usize)> {
    let (n, k) = text
        .split_once(',')
        .context("--inject-fault wants \"n,k\"")?;
    Ok((n.trim().parse()?, k.trim().parse()?))
}

fn fault_bump_exact() -> Rational {
    parse_ratio(&format!("{}/{}", FAULT_BUMP.0, FAULT_BUMP.1)).expect("static ratio")
}

fn run_exact_stage(
    law: &LoadedLaw,
    enum_max: usize,
    fault: Option<(usize, usize)>,
) -> Result<ExactStage> {
    let Some(exact) = &law.exact else {
        return Ok(ExactStage {
            ran: false,
            notice: Some("law support is not finite; enumeration stage skipped".to_string()),
            checks: 0,
            mismatches: Vec::new(),
        });
    };
    let table = ExactConvolutionTable::build(exact, enum_max);
    let mut checks = 0u64;
    let mut mismatches = Vec::new();
    let mut record = |check: &'static str, cell: String, expected: &Rational, got: &Rational| {
        if expected != got {
            eprintln!("exact mismatch [{check}] at {cell}: expected {expected}, got {got}");
            mismatches.push(Mismatch {
                check,
                cell,
                expected: expected.to_string(),
                got: got.to_string(),
            });
        }
    };

    let trees = enumerate_trees(exact, enum_max, DEFAULT_STATE_BUDGET)?;
    let joint = trees.joint_size_alleles();
    for n in 1..=enum_max {
        for k in 1..=n {
            let mut formula = p_tree_size_alleles_exact(&table, n, k)?;
            if fault == Some((n, k)) {
                formula += fault_bump_exact();
            }
            let enumerated = joint.get(&(n, k)).cloned().unwrap_or_default();
            checks += 1;
            record(
                "joint_size_alleles",
                format!("(n={n}, k={k})"),
                &formula,
                &enumerated,
            );
        }
    }

    for (key, mass) in trees.entries() {
        let pairs: Vec<(usize, usize)> = key
            .sizes
            .iter()
            .zip(&key.mutants)
            .map(|(&s, &m)| (s as usize, m as usize))
            .collect();
        let formula = p_allelic_tree_exact(&table, &pairs)?;
        checks += 1;
        record(
            "allelic_tree_product",
            format!("(sizes={:?}, mutants={:?})", key.sizes, key.mutants),
            &formula,
            mass,
        );
    }

    let clusters = enumerate_cluster_prefix(exact, 1, enum_max, DEFAULT_STATE_BUDGET)?;
    for (key, mass) in clusters.entries() {
        let n = key.sizes[0] as usize;
        let l = key.mutants[0] as usize;
        let formula = p_cluster_size_mutants_exact(&table, n, l)?;
        checks += 1;
        record(
            "first_cluster_law",
            format!("(n={n}, l={l})"),
            &formula,
            mass,
        );
    }

    let by_size: Rational = (1..=enum_max)
        .map(|n| p_tree_size_exact(&table, n))
        .collect::<Result<Vec<_>, DistError>>()?
        .into_iter()
        .sum();
    checks += 1;
    record(
        "total_mass",
        format!("(n <= {enum_max})"),
        &by_size,
        &trees.total_mass(),
    );

    Ok(ExactStage {
        ran: true,
        notice: None,
        checks,
        mismatches,
    })
}

struct StatOutcome {
    stage: StatStage,
    cells: Vec<CellOut>,
}

#[allow(clippy::too_many_arguments)]
fn run_stat_stage(
    law: &LoadedLaw,
    seed: u64,
    mc_trees: u64,
    cap: usize,
    stat_n_max: usize,
    significance: f64,
    se_limit: f64,
    cell_floor: f64,
    workers: usize,
    fault: Option<(usize, usize)>,
) -> Result<StatOutcome> {
    let counts = parallel_monte_carlo(&law.float, mc_trees, seed, cap, 0, workers)?;
    let table =
        ConvolutionTable::build(&law.float, stat_n_max, ConvolutionTable::DEFAULT_MEMORY_CAP)?;

    let mut expected: BTreeMap<(u32, u32), f64> = BTreeMap::new();
    for n in 1..=stat_n_max {
        for k in 1..=n {
            let mut p = p_tree_size_alleles(&table, n, k)?;
            if fault == Some((n, k)) {
                p += FAULT_BUMP.0 as f64 / FAULT_BUMP.1 as f64;
            }
            if p > 0.0 {
                expected.insert((n as u32, k as u32), p);
            }
        }
    }
    let in_range: f64 = expected.values().sum();
    let other_expected = (1.0 - in_range).max(0.0);

    let mut observed: BTreeMap<(u32, u32), u64> = BTreeMap::new();
    let mut in_range_total = 0u64;
    for (&(n, k), &c) in &counts.joint {
        if (n as usize) <= stat_n_max {
            observed.insert((n, k), c);
            in_range_total += c;
        }
    }
    // A censored tree outgrew the cap, hence also the grid: it is an
    // out-of-range observation, not a missing one.
    let observation = Observation {
        counts: observed,
        other: counts.trees - in_range_total + counts.censored,
        censored: 0,
    };
    let gof = compare(&expected, other_expected, &observation)?;

    let cells: Vec<CellOut> = gof
        .cells
        .iter()
        .map(|c| CellOut {
            n: c.key.0,
            k: c.key.1,
            probability: c.probability,
            expected: c.expected,
            observed: c.observed,
            z: c.z,
        })
        .collect();
    let flagged: Vec<CellOut> = cells
        .iter()
        .filter(|c| c.probability >= cell_floor && c.z.abs() > se_limit)
        .cloned()
        .collect();
    for c in &flagged {
        eprintln!(
            "cell (n={}, k={}) is {:.2} standard errors off (observed {}, expected {:.1})",
            c.n, c.k, c.z, c.observed, c.expected
        );
    }
    if gof.impossible > 0 {
        eprintln!(
            "{} sampled trees landed in cells the formula gives probability 0",
            gof.impossible
        );
    }

    let well_filled: Vec<f64> = gof
        .cells
        .iter()
        .filter(|c| c.expected >= 10.0)
        .map(|c| c.z)
        .collect();
    let ks = if well_filled.len() >= 5 {
        Some(ks_normal(&well_filled)?)
    } else {
        None
    };

    let pass = gof.passes(significance) && flagged.is_empty();
    if !gof.passes(significance) {
        eprintln!(
            "pooled chi-square {} on {} dof: p = {} <= {significance}",
            gof.chi_square, gof.dof, gof.p_value
        );
    }
    Ok(StatOutcome {
        stage: StatStage {
            n_trees: mc_trees,
            censoring_rate: counts.censoring_rate(),
            chi_square: gof.chi_square,
            dof: gof.dof,
            p_value: gof.p_value,
            tv: gof.tv,
            impossible: gof.impossible,
            flagged,
            ks_statistic: ks.map(|k| k.statistic),
            ks_p_value: ks.map(|k| k.p_value),
            pass,
        },
        cells,
    })
}

/// Runs `verify`; returns the exit code.
pub fn run(args: VerifyArgs) -> Result<u8> {
    let file = load_config(args.config.as_deref())?;
    let law_path = require(args.law, file.law.clone(), "--law")?;
    let law = load_law(&law_path)?;
    let seed = require(args.seed, file.seed, "--seed")?;
    let workers = pick(args.workers, file.workers, 1);
    let enum_max = pick(args.enum_max, file.enum_max, DEFAULT_ENUM_MAX);
    let mc_trees = pick(args.mc_trees, file.mc_trees, DEFAULT_MC_TREES);
    let cap = pick(args.cap, file.cap, DEFAULT_CAP);
    let stat_n_max = pick(args.stat_n_max, file.stat_n_max, DEFAULT_STAT_N_MAX);
    let significance = pick(args.significance, file.significance, DEFAULT_SIGNIFICANCE);
    let se_limit = pick(args.se_limit, file.se_limit, DEFAULT_SE_LIMIT);
    let cell_floor = pick(args.cell_floor, file.cell_floor, DEFAULT_CELL_FLOOR);
    positive(workers as u64, "--workers")?;
    positive(enum_max as u64, "--enum-max")?;
    positive(mc_trees, "--mc-trees")?;
    positive(cap as u64, "--cap")?;
    positive(stat_n_max as u64, "--stat-n-max")?;
    unit_open(significance, "--significance")?;
    unit_open(cell_floor, "--cell-floor")?;
    if se_limit <= 0.0 || se_limit.is_nan() {
        bail!("--se-limit must be positive");
    }
    let fault = args.inject_fault.as_deref().map(parse_fault).transpose()?;

    let mut config_pairs = vec![
        ("law", serde_json::json!(law_path.display().to_string())),
        ("law_spec", law.echo.clone()),
        ("seed", serde_json::json!(seed)),
        ("workers", serde_json::json!(workers)),
        ("enum_max", serde_json::json!(enum_max)),
        ("mc_trees", serde_json::json!(mc_trees)),
        ("cap", serde_json::json!(cap)),
        ("stat_n_max", serde_json::json!(stat_n_max)),
        ("significance", serde_json::json!(significance)),
        ("se_limit", serde_json::json!(se_limit)),
        ("cell_floor", serde_json::json!(cell_floor)),
    ];
    if let Some((n, k)) = fault {
        config_pairs.push(("inject_fault", serde_json::json!([n, k])));
    }
    let config = echo_object(config_pairs);

    let exact_stage = run_exact_stage(&law, enum_max, fault)?;
    if !exact_stage.ran {
        eprintln!(
            "note: {}",
            exact_stage.notice.as_deref().unwrap_or_default()
        );
    }
    let outcome = run_stat_stage(
        &law,
        seed,
        mc_trees,
        cap,
        stat_n_max,
        significance,
        se_limit,
        cell_floor,
        workers,
        fault,
    )?;

    let pass = exact_stage.mismatches.is_empty() && outcome.stage.pass;
    let report = VerifyReport {
        schema_version: SCHEMA_VERSION,
        command: "verify",
        config,
        exact_stage,
        statistical_stage: outcome.stage,
        pass,
    };
    if let Some(out) = args.out.or(file.out.clone()) {
        let out = report::ensure_out_dir(&out)?;
        report::write_json(&out.join("verify_report.json"), &report)?;
        let header = vec![
            format!("schema_version: {SCHEMA_VERSION}"),
            format!("config: {}", report.config),
        ];
        report::write_csv_rows(&out.join("cells.csv"), &header, &outcome.cells)?;
    }
    report::print_json(&report)?;
    Ok(if pass { 0 } else { 1 })
}
