//! Command-line front end for the allelic-partition library: exact grids,
//! forest dumps, formula-vs-simulation verification, and scaling probes.

use std::process::ExitCode;

use allelic_cli::commands;
use clap::{Parser, Subcommand};

/// Branching populations with neutral mutations: exact allelic-partition
/// laws, reproducible simulation, and cross-validation.
#[derive(Debug, Parser)]
#[command(name = "allelic", version, propagate_version = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write exact distribution tables for one offspring law.
    ///
    /// Evaluates, in floating point with explicit truncation residuals:
    ///   P(T = n, A = k)      = pi^{*n}(n-k, k-1) / n     (size_alleles.csv)
    ///   P(|C| = n, M = l)    = pi^{*n}(n-1, l) / n       (cluster_mutants.csv)
    ///   nu(l)                = sum_n pi^{*n}(n-1, l) / n (mutant_law.csv)
    ///   P(A = k)             both directly and as nu^{*k}(k-1) / k
    ///                                                    (num_alleles.jsonl)
    /// where pi^{*n} is the n-fold convolution of the joint offspring law,
    /// T is a tree's size, A its allele count, |C| and M the first allelic
    /// cluster's size and mutant count. Every row of size_alleles.csv is
    /// cross-checked against the one-dimensional size law
    /// P(T = n) = P(xi_1 + ... + xi_n = n - 1) / n; a mismatch exits 1.
    Exact(commands::exact::ExactArgs),

    /// Sample a forest and dump one record per individual.
    ///
    /// Trees are sampled by depth-first search from the joint offspring law,
    /// one independent RNG substream per tree, so dumps are reproducible
    /// for a given seed and invariant under any later parallel split. Trees
    /// exceeding --cap are censored: counted, never resampled. The dump
    /// (CSV or JSON lines) lists index, offspring counts, tree, allelic
    /// cluster, generation, and a genealogical label per individual.
    Simulate(commands::simulate::SimulateArgs),

    /// Cross-validate formulas, enumeration, and simulation; exit 0 on pass.
    ///
    /// Stage 1 (finite-support laws): every tree up to --enum-max
    /// individuals is enumerated with exact rational weights, and the
    /// aggregates are compared cell by cell with zero tolerance against
    ///   P(T = n, A = k) = pi^{*n}(n-k, k-1) / n,
    /// the per-tree product formula, and the first-cluster law
    /// pi^{*n}(n-1, l) / n. Stage 2 (all laws): --mc-trees sampled trees
    /// are scored against the (T, A) grid with a pooled chi-square test
    /// plus a per-cell standard-error sweep. Any exact mismatch, chi-square
    /// rejection, or out-of-bound cell exits 1.
    Verify(commands::verify::VerifyArgs),

    /// Probe the two large-population limits behind the formulas.
    ///
    /// Tilt stage: reweight the clone law by theta^j to criticality and
    /// sweep n^{3/2} P(|C| = n) against its limit 1/sqrt(2 pi sigma^2);
    /// the ratio column should drift to 1. Drift stage: with mutation
    /// probability d/n, the rescaled mutation-count path over [t_max n^2]
    /// individuals tracks the line d t; the report summarizes
    /// sup |path - d t| over --runs independent paths per size.
    Scaling(commands::scaling::ScalingArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Exact(args) => commands::exact::run(args),
        Command::Simulate(args) => commands::simulate::run(args),
        Command::Verify(args) => commands::verify::run(args),
        Command::Scaling(args) => commands::scaling::run(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
