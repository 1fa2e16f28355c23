//! Forest dumps: one record per individual, as CSV (comment-prefixed
//! header) or JSON lines (header record first). Both forms load back.
//!
//! Columns, in order: `index`, `clones`, `mutants`, `tree`, `cluster`,
//! `generation`, `label`. The label is `ancestor:mutations:lineage` with a
//! 1-based ancestor number and a dot-separated child-rank path, empty for
//! ancestors themselves.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use allelic_core::genealogy::{generation_view, label, Individual};
use allelic_core::walk::Step;
use allelic_core::DfsSequence;
use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

/// One dumped individual.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DumpRecord {
    /// 0-based position in DFS-with-mutations order.
    pub index: u64,
    /// Clone children.
    pub clones: u32,
    /// Mutant children.
    pub mutants: u32,
    /// 0-based tree id.
    pub tree: u32,
    /// Global 0-based cluster id.
    pub cluster: u32,
    /// Genealogical generation, ancestors at 0.
    pub generation: u32,
    /// `ancestor:mutations:lineage`.
    pub label: String,
}

fn render_label(view: &[Individual], idx: usize, tree0: u32) -> String {
    let lab = label(view, idx);
    let mut path = String::new();
    for (i, r) in lab.lineage.iter().enumerate() {
        if i > 0 {
            path.push('.');
        }
        path.push_str(&r.to_string());
    }
    format!("{}:{}:{}", tree0 + lab.ancestor, lab.mutations, path)
}

/// Flattens a forest into dump records.
pub fn records_of(seq: &DfsSequence) -> Vec<DumpRecord> {
    records_with_base(seq, 0, 0, 0)
}

/// Flattens a forest into dump records, numbering individuals, trees, and
/// clusters from the given bases. Streaming dumps hand whole forests to
/// consecutive calls and carry the counts forward.
pub fn records_with_base(
    seq: &DfsSequence,
    index0: u64,
    tree0: u32,
    cluster0: u32,
) -> Vec<DumpRecord> {
    let view = generation_view(seq);
    view.iter()
        .enumerate()
        .map(|(i, r)| DumpRecord {
            index: index0 + i as u64,
            clones: r.step.clones,
            mutants: r.step.mutants,
            tree: tree0 + r.tree,
            cluster: cluster0 + r.cluster,
            generation: r.generation,
            label: render_label(&view, i, tree0),
        })
        .collect()
}

/// Streaming CSV dump writer; the comment header goes out at creation.
pub struct CsvDumpWriter {
    w: csv::Writer<BufWriter<File>>,
}

impl CsvDumpWriter {
    /// Creates the file and writes `header_lines` as `#`-prefixed comments.
    pub fn create(path: &Path, header_lines: &[String]) -> Result<Self> {
        let file = File::create(path)
            .with_context(|| format!("cannot create dump file {}", path.display()))?;
        let mut out = BufWriter::new(file);
        for line in header_lines {
            writeln!(out, "# {line}")?;
        }
        Ok(Self {
            w: csv::Writer::from_writer(out),
        })
    }

    /// Appends records.
    pub fn append(&mut self, records: &[DumpRecord]) -> Result<()> {
        for r in records {
            self.w.serialize(r)?;
        }
        Ok(())
    }

    /// Flushes and closes the dump.
    pub fn finish(mut self) -> Result<()> {
        self.w.flush()?;
        Ok(())
    }
}

/// Streaming JSON-lines dump writer; the header record goes out at creation.
pub struct JsonlDumpWriter {
    out: BufWriter<File>,
}

impl JsonlDumpWriter {
    /// Creates the file and writes the header value as the first line.
    pub fn create(path: &Path, header: &serde_json::Value) -> Result<Self> {
        let file = File::create(path)
            .with_context(|| format!("cannot create dump file {}", path.display()))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "{}", serde_json::to_string(header)?)?;
        Ok(Self { out })
    }

    /// Appends records.
    pub fn append(&mut self, records: &[DumpRecord]) -> Result<()> {
        for r in records {
            writeln!(self.out, "{}", serde_json::to_string(r)?)?;
        }
        Ok(())
    }

    /// Flushes and closes the dump.
    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

/// Writes a CSV dump; `header_lines` go first as `#`-prefixed comments.
pub fn write_csv(path: &Path, header_lines: &[String], records: &[DumpRecord]) -> Result<()> {
    let mut w = CsvDumpWriter::create(path, header_lines)?;
    w.append(records)?;
    w.finish()
}

/// Writes a JSON-lines dump; the header value becomes the first line.
pub fn write_jsonl(path: &Path, header: &serde_json::Value, records: &[DumpRecord]) -> Result<()> {
    let mut w = JsonlDumpWriter::create(path, header)?;
    w.append(records)?;
    w.finish()
}

/// Loads a CSV dump, skipping `#` comment lines.
pub fn load_csv(path: &Path) -> Result<Vec<DumpRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .with_context(|| format!("cannot read dump file {}", path.display()))?;
    let mut records = Vec::new();
    for row in reader.deserialize() {
        records.push(row?);
    }
    Ok(records)
}

/// Loads a JSON-lines dump, returning the header and the records.
pub fn load_jsonl(path: &Path) -> Result<(serde_json::Value, Vec<DumpRecord>)> {
    let file =
        File::open(path).with_context(|| format!("cannot read dump file {}", path.display()))?;
    let mut lines = BufReader::new(file).lines();
    let Some(first) = lines.next() else {
        bail!("dump file {} is empty", path.display());
    };
    let header: serde_json::Value = serde_json::from_str(&first?)?;
    let mut records = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line)?);
    }
    Ok((header, records))
}

/// Rebuilds the step sequence of a loaded dump.
pub fn sequence_of(records: &[DumpRecord]) -> Result<DfsSequence> {
    let steps: Vec<Step> = records
        .iter()
        .map(|r| Step::new(r.clones, r.mutants))
        .collect();
    Ok(DfsSequence::from_steps(steps)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use allelic_core::forest::sample_dfs_sequence;
    use allelic_core::{JointOffspringLaw, Marginal};

    fn sample() -> DfsSequence {
        let half = Marginal::bernoulli(0.5).unwrap();
        let law = JointOffspringLaw::independent(&half, &half).unwrap();
        sample_dfs_sequence(&law, 11, 40, 1 << 20).unwrap()
    }

    #[test]
    fn csv_round_trips() {
        let seq = sample();
        let records = records_of(&seq);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("forest.csv");
        write_csv(&path, &["config: {}".into()], &records).unwrap();
        let loaded = load_csv(&path).unwrap();
        assert_eq!(loaded, records);
        assert_eq!(sequence_of(&loaded).unwrap(), seq);
    }

    #[test]
    fn jsonl_round_trips() {
        let seq = sample();
        let records = records_of(&seq);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("forest.jsonl");
        let header = serde_json::json!({"schema_version": 1, "kind": "forest_dump"});
        write_jsonl(&path, &header, &records).unwrap();
        let (loaded_header, loaded) = load_jsonl(&path).unwrap();
        assert_eq!(loaded_header, header);
        assert_eq!(loaded, records);
        assert_eq!(sequence_of(&loaded).unwrap(), seq);
    }

    #[test]
    fn chunked_records_stitch_to_the_whole() {
        // Splitting the forest at a tree boundary and carrying the counts
        // forward must reproduce the one-shot records exactly.
        let seq = sample();
        let whole = records_of(&seq);
        let cut = seq.tree_ends()[seq.complete_trees() / 2];
        let head = DfsSequence::from_steps(seq.steps()[..cut].to_vec()).unwrap();
        let tail = DfsSequence::from_steps(seq.steps()[cut..].to_vec()).unwrap();
        let mut stitched = records_of(&head);
        let clusters = stitched.iter().map(|r| r.cluster + 1).max().unwrap_or(0);
        stitched.extend(records_with_base(
            &tail,
            head.len() as u64,
            head.complete_trees() as u32,
            clusters,
        ));
        assert_eq!(stitched, whole);
    }

    #[test]
    fn labels_spell_out_the_lineage() {
        // One ancestor with a clone child and a mutant child: the clone
        // ranks before the mutant and stays in cluster 0.
        let steps = vec![Step::new(1, 1), Step::new(0, 0), Step::new(0, 0)];
        let seq = DfsSequence::from_steps(steps).unwrap();
        let records = records_of(&seq);
        assert_eq!(records[0].label, "1:0:");
        assert_eq!(records[1].label, "1:0:1");
        assert_eq!(records[2].label, "1:1:2");
        assert_eq!(records[1].cluster, 0);
        assert_eq!(records[2].cluster, 1);
    }
}
