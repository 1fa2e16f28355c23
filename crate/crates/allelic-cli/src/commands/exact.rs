//! `exact`: tabulate the closed-form laws of a single tree.
//!
//! Emits P(T = n, A = k) = pi^{*n}_{n-k,k-1} / n over 1 <= k <= n <= n_max,
//! the cluster law P(|C| = n, M = l) = pi^{*n}_{n-1,l} / n, the per-cluster
//! mutant law nu_l = sum_n pi^{*n}_{n-1,l} / n, and P(A = k) by both the
//! direct sum and the nu-convolution route, with residual bounds. Row sums
//! of the joint grid are cross-checked against the one-variable size law
//! sum_{a+b=n-1} pi^{*n}_{a,b} / n; a mismatch exits 1.

use std::path::PathBuf;

use allelic_core::dist::{
    mutant_offspring_law, p_cluster_size_mutants, p_num_alleles, p_tree_size, p_tree_size_alleles,
    AllelesRoute,
};
use allelic_core::ConvolutionTable;
use anyhow::Result;
use serde::Serialize;

use crate::config::{load_config, pick, positive, require};
use crate::lawspec::load_law;
use crate::report::{self, echo_object, SCHEMA_VERSION};

/// Grid size for the size/allele and cluster tables.
const DEFAULT_N_MAX: usize = 20;
/// Largest allele count queried.
const DEFAULT_K_MAX: usize = 8;
/// Row sums must reproduce the size marginal this tightly.
const CROSS_CHECK_TOL: f64 = 1e-12;

/// Arguments for `exact`.
#[derive(Debug, clap::Args)]
pub struct ExactArgs {
    /// Law file (TOML).
    #[arg(long)]
    law: Option<PathBuf>,
    /// Config file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for the grid files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Largest tree and cluster size tabulated.
    #[arg(long)]
    n_max: Option<usize>,
    /// Largest allele count queried.
    #[arg(long)]
    k_max: Option<usize>,
}

#[derive(Serialize)]
struct JointRow {
    n: usize,
    k: usize,
    probability: f64,
}

#[derive(Serialize)]
struct ClusterRow {
    n: usize,
    l: usize,
    probability: f64,
}

#[derive(Serialize)]
struct MutantRow {
    l: usize,
    probability: f64,
}

#[derive(Serialize)]
struct AllelesQuery {
    query_kind: &'static str,
    params: serde_json::Value,
    value: f64,
    residual_bound: f64,
}

#[derive(Serialize)]
struct ExactSummary {
    schema_version: u32,
    command: &'static str,
    config: serde_json::Value,
    files: Vec<String>,
    cross_check: &'static str,
    nu_residual: f64,
}

/// Runs `exact`; returns the exit code.
pub fn run(args: ExactArgs) -> Result<u8> {
    let file = load_config(args.config.as_deref())?;
    let law_path = require(args.law, file.law.clone(), "--law")?;
    let law = load_law(&law_path)?;
    let n_max = pick(args.n_max, file.n_max, DEFAULT_N_MAX);
    let k_max = pick(args.k_max, file.k_max, DEFAULT_K_MAX);
    positive(n_max as u64, "--n-max")?;
    positive(k_max as u64, "--k-max")?;
    let out = report::ensure_out_dir(&require(args.out, file.out.clone(), "--out")?)?;

    let config = echo_object(vec![
        ("law", serde_json::json!(law_path.display().to_string())),
        ("law_spec", law.echo.clone()),
        ("n_max", serde_json::json!(n_max)),
        ("k_max", serde_json::json!(k_max)),
    ]);
    let header = vec![
        format!("schema_version: {SCHEMA_VERSION}"),
        format!("config: {config}"),
    ];

    let table = ConvolutionTable::build(&law.float, n_max, ConvolutionTable::DEFAULT_MEMORY_CAP)?;

    let mut joint_rows = Vec::new();
    for n in 1..=n_max {
        let mut row_sum = 0.0;
        for k in 1..=n {
            let p = p_tree_size_alleles(&table, n, k)?;
            row_sum += p;
            joint_rows.push(JointRow {
                n,
                k,
                probability: p,
            });
        }
        let marginal = p_tree_size(&table, n)?;
        if (row_sum - marginal).abs() > CROSS_CHECK_TOL {
            eprintln!(
                "cross-check failed at n = {n}: allele rows sum to {row_sum}, \
                 size marginal is {marginal}"
            );
            return Ok(1);
        }
    }

    let mut cluster_rows = Vec::new();
    for n in 1..=n_max {
        let cols = table.slice(n).map(|s| s.cols()).unwrap_or(0);
        for l in 0..cols {
            let p = p_cluster_size_mutants(&table, n, l)?;
            if p > 0.0 {
                cluster_rows.push(ClusterRow {
                    n,
                    l,
                    probability: p,
                });
            }
        }
    }

    let nu = mutant_offspring_law(&table);
    let mutant_rows: Vec<MutantRow> = nu
        .probs
        .iter()
        .enumerate()
        .map(|(l, &p)| MutantRow { l, probability: p })
        .collect();

    let mut queries = Vec::new();
    for k in 1..=k_max {
        let direct = p_num_alleles(&table, k, AllelesRoute::Direct)?;
        let via = p_num_alleles(&table, k, AllelesRoute::ViaMutantLaw)?;
        queries.push(AllelesQuery {
            query_kind: "num_alleles_direct",
            params: serde_json::json!({ "k": k }),
            value: direct.value,
            residual_bound: direct.residual,
        });
        queries.push(AllelesQuery {
            query_kind: "num_alleles_via_mutant_law",
            params: serde_json::json!({ "k": k }),
            value: via.value,
            residual_bound: via.residual,
        });
    }

    report::write_csv_rows(&out.join("size_alleles.csv"), &header, &joint_rows)?;
    report::write_csv_rows(&out.join("cluster_mutants.csv"), &header, &cluster_rows)?;
    let mut nu_header = header.clone();
    nu_header.push(format!("residual_bound: {}", nu.residual));
    report::write_csv_rows(&out.join("mutant_law.csv"), &nu_header, &mutant_rows)?;
    {
        use std::io::Write;
        let mut f = std::io::BufWriter::new(std::fs::File::create(out.join("num_alleles.jsonl"))?);
        writeln!(
            f,
            "{}",
            serde_json::json!({
                "schema_version": SCHEMA_VERSION,
                "command": "exact",
                "config": config,
            })
        )?;
        for q in &queries {
            writeln!(f, "{}", serde_json::to_string(q)?)?;
        }
    }

    let summary = ExactSummary {
        schema_version: SCHEMA_VERSION,
        command: "exact",
        config,
        files: vec![
            "size_alleles.csv".into(),
            "cluster_mutants.csv".into(),
            "mutant_law.csv".into(),
            "num_alleles.jsonl".into(),
        ],
        cross_check: "pass",
        nu_residual: nu.residual,
    };
    report::print_json(&summary)?;
    Ok(0)
}
