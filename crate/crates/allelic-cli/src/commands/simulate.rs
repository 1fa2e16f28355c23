//! `simulate`: sample a forest and dump every individual.
//!
//! Trees are i.i.d. DFS-with-mutations sequences of the law; tree i always
//! uses RNG substream i of the seed, so output is byte-identical across
//! runs and worker settings. A tree exceeding the per-tree cap is dropped
//! and counted as censored (never resampled); the run still exits 0 and the
//! summary carries the censoring rate.

use std::path::PathBuf;

use allelic_core::forest::{sample_tree_into, stream_rng, StepSampler};
use allelic_core::partition::allelic_partition;
use allelic_core::walk::Step;
use allelic_core::DfsSequence;
use anyhow::Result;

use crate::config::{load_config, pick, positive, require, DumpFormat};
use crate::dump;
use crate::lawspec::load_law;
use crate::report::{self, echo_object, SCHEMA_VERSION};

const DEFAULT_N_TREES: u64 = 10_000;
const DEFAULT_CAP: usize = 100_000;
/// A dump chunk holds whole trees and is flushed once it passes this many
/// individuals, bounding memory by one chunk plus one capped tree.
const CHUNK_INDIVIDUALS: usize = 1 << 18;

/// Arguments for `simulate`.
#[derive(Debug, clap::Args)]
pub struct SimulateArgs {
    /// Law file (TOML).
    #[arg(long)]
    law: Option<PathBuf>,
    /// Config file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for the dump and summary.
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed (required; there is no wall-clock default).
    #[arg(long)]
    seed: Option<u64>,
    /// Trees to attempt.
    #[arg(long)]
    n_trees: Option<u64>,
    /// Per-tree individual cap; larger trees are censored.
    #[arg(long)]
    cap: Option<usize>,
    /// Dump encoding.
    #[arg(long, value_enum)]
    format: Option<DumpFormat>,
}

enum DumpWriter {
    Csv(Box<dump::CsvDumpWriter>),
    Jsonl(dump::JsonlDumpWriter),
}

impl DumpWriter {
    fn append(&mut self, records: &[dump::DumpRecord]) -> Result<()> {
        match self {
            DumpWriter::Csv(w) => w.append(records),
            DumpWriter::Jsonl(w) => w.append(records),
        }
    }

    fn finish(self) -> Result<()> {
        match self {
            DumpWriter::Csv(w) => w.finish(),
            DumpWriter::Jsonl(w) => w.finish(),
        }
    }
}

/// Running dump counts; each flushed chunk renumbers from these.
#[derive(Default)]
struct Totals {
    trees_completed: u64,
    individuals: u64,
    alleles_total: u64,
}

impl Totals {
    fn flush(&mut self, chunk: &mut Vec<Step>, writer: &mut DumpWriter) -> Result<()> {
        if chunk.is_empty() {
            return Ok(());
        }
        let seq = DfsSequence::from_steps(std::mem::take(chunk))?;
        let records = dump::records_with_base(
            &seq,
            self.individuals,
            self.trees_completed as u32,
            self.alleles_total as u32,
        );
        writer.append(&records)?;
        self.individuals += seq.len() as u64;
        self.trees_completed += seq.complete_trees() as u64;
        self.alleles_total += allelic_partition(&seq).clusters().len() as u64;
        Ok(())
    }
}

#[derive(serde::Serialize)]
struct SimulateSummary {
    schema_version: u32,
    command: &'static str,
    config: serde_json::Value,
    trees_completed: u64,
    censored: u64,
    censoring_rate: f64,
    individuals: u64,
    alleles_total: u64,
    mean_tree_size: f64,
    mean_alleles_per_tree: f64,
    max_tree_size: usize,
    dump_file: String,
}

/// Runs `simulate`; returns the exit code.
pub fn run(args: SimulateArgs) -> Result<u8> {
    let file = load_config(args.config.as_deref())?;
    let law_path = require(args.law, file.law.clone(), "--law")?;
    let law = load_law(&law_path)?;
    let seed = require(args.seed, file.seed, "--seed")?;
    let n_trees = pick(args.n_trees, file.n_trees, DEFAULT_N_TREES);
    let cap = pick(args.cap, file.cap, DEFAULT_CAP);
    let format = pick(args.format, file.format, DumpFormat::Csv);
    positive(n_trees, "--n-trees")?;
    positive(cap as u64, "--cap")?;
    let out = report::ensure_out_dir(&require(args.out, file.out.clone(), "--out")?)?;

    let config = echo_object(vec![
        ("law", serde_json::json!(law_path.display().to_string())),
        ("law_spec", law.echo.clone()),
        ("seed", serde_json::json!(seed)),
        ("n_trees", serde_json::json!(n_trees)),
        ("cap", serde_json::json!(cap)),
        ("format", serde_json::to_value(format)?),
    ]);

    let (dump_file, mut writer) = match format {
        DumpFormat::Csv => {
            let header = vec![
                format!("schema_version: {SCHEMA_VERSION}"),
                format!("config: {config}"),
                "columns: index,clones,mutants,tree,cluster,generation,label".into(),
            ];
            let w = dump::CsvDumpWriter::create(&out.join("forest.csv"), &header)?;
            ("forest.csv", DumpWriter::Csv(Box::new(w)))
        }
        DumpFormat::Jsonl => {
            let header = serde_json::json!({
                "schema_version": SCHEMA_VERSION,
                "kind": "forest_dump",
                "config": config,
            });
            let w = dump::JsonlDumpWriter::create(&out.join("forest.jsonl"), &header)?;
            ("forest.jsonl", DumpWriter::Jsonl(w))
        }
    };

    let sampler = StepSampler::new(&law.float)?;
    let mut totals = Totals::default();
    let mut chunk: Vec<Step> = Vec::new();
    let mut scratch: Vec<Step> = Vec::new();
    let mut censored = 0u64;
    let mut max_tree_size = 0usize;
    for i in 0..n_trees {
        let mut rng = stream_rng(seed, i);
        if sample_tree_into(&sampler, &mut rng, cap, &mut scratch) {
            max_tree_size = max_tree_size.max(scratch.len());
            chunk.extend_from_slice(&scratch);
            if chunk.len() >= CHUNK_INDIVIDUALS {
                totals.flush(&mut chunk, &mut writer)?;
            }
        } else {
            censored += 1;
        }
    }
    totals.flush(&mut chunk, &mut writer)?;
    writer.finish()?;
    let Totals {
        trees_completed,
        individuals,
        alleles_total,
    } = totals;

    let denom = trees_completed.max(1) as f64;
    let summary = SimulateSummary {
        schema_version: SCHEMA_VERSION,
        command: "simulate",
        config,
        trees_completed,
        censored,
        censoring_rate: censored as f64 / n_trees as f64,
        individuals,
        alleles_total,
        mean_tree_size: individuals as f64 / denom,
        mean_alleles_per_tree: alleles_total as f64 / denom,
        max_tree_size,
        dump_file: dump_file.to_string(),
    };
    report::write_json(&out.join("summary.json"), &summary)?;
    report::print_json(&summary)?;
    Ok(0)
}
