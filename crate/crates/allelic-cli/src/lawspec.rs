//! Offspring-law files: a small TOML schema describing either a joint table,
//! a product of two marginals, or a binomial split of one total-count law.
//!
//! Probabilities may be written as TOML numbers or as strings like "1/3" or
//! "0.25". Laws whose support is finite are also materialized exactly in
//! rational arithmetic; truncated families (geometric, poisson) only get the
//! float form.

use std::fs;
use std::path::Path;

use allelic_core::exact::{parse_ratio, ExactJointLaw, Rational};
use allelic_core::{JointOffspringLaw, Marginal};
use anyhow::{bail, Context, Result};
use num_traits::{One, ToPrimitive, Zero};
use serde::Deserialize;

const LAW_SCHEMA_VERSION: u32 = 1;

fn default_tail() -> f64 {
    1e-12
}

/// A probability written either as a TOML number or a ratio/decimal string.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Number {
    /// Plain floating-point literal.
    Float(f64),
    /// "1/3", "0.25", "2".
    Text(String),
}

impl Number {
    fn exact(&self) -> Result<Rational> {
        match self {
            Number::Float(x) => {
                Rational::from_float(*x).with_context(|| format!("{x} is not a finite probability"))
            }
            Number::Text(s) => Ok(parse_ratio(s)?),
        }
    }

    fn float(&self) -> Result<f64> {
        let r = self.exact()?;
        r.to_f64().context("value does not fit in a float")
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
enum MarginalSpec {
    Delta {
        value: usize,
    },
    Bernoulli {
        p: Number,
    },
    Geometric {
        a: Number,
        #[serde(default = "default_tail")]
        tail: f64,
    },
    Poisson {
        lambda: Number,
        #[serde(default = "default_tail")]
        tail: f64,
    },
    Probs {
        probs: Vec<Number>,
    },
}

impl MarginalSpec {
    fn build(&self) -> Result<Marginal> {
        Ok(match self {
            MarginalSpec::Delta { value } => Marginal::delta(*value),
            MarginalSpec::Bernoulli { p } => Marginal::bernoulli(p.float()?)?,
            MarginalSpec::Geometric { a, tail } => Marginal::geometric(a.float()?, *tail)?,
            MarginalSpec::Poisson { lambda, tail } => Marginal::poisson(lambda.float()?, *tail)?,
            MarginalSpec::Probs { probs } => {
                let probs: Result<Vec<f64>> = probs.iter().map(Number::float).collect();
                Marginal::from_probs(probs?, 0.0)?
            }
        })
    }

    /// The same pmf in rationals, when the family has finite support.
    fn exact_probs(&self) -> Result<Option<Vec<Rational>>> {
        Ok(match self {
            MarginalSpec::Delta { value } => {
                let mut v = vec![Rational::zero(); value + 1];
                v[*value] = Rational::one();
                Some(v)
            }
            MarginalSpec::Bernoulli { p } => {
                let p = p.exact()?;
                Some(vec![Rational::one() - p.clone(), p])
            }
            MarginalSpec::Probs { probs } => {
                let probs: Result<Vec<Rational>> = probs.iter().map(Number::exact).collect();
                Some(probs?)
            }
            MarginalSpec::Geometric { .. } | MarginalSpec::Poisson { .. } => None,
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum LawKind {
    Independent {
        clone: MarginalSpec,
        mutant: MarginalSpec,
    },
    Table {
        entries: Vec<(usize, usize, Number)>,
    },
    Pruning {
        p: Number,
        base: MarginalSpec,
    },
}

#[derive(Debug, Clone, Deserialize)]
struct LawFile {
    schema_version: u32,
    #[serde(flatten)]
    law: LawKind,
}

impl LawFile {
    /// Unknown keys cannot be denied through the flattened enum, so the
    /// top level is checked by hand.
    fn check_keys(&self, table: &toml::Table) -> Result<()> {
        let allowed: &[&str] = match &self.law {
            LawKind::Independent { .. } => &["schema_version", "kind", "clone", "mutant"],
            LawKind::Table { .. } => &["schema_version", "kind", "entries"],
            LawKind::Pruning { .. } => &["schema_version", "kind", "p", "base"],
        };
        for key in table.keys() {
            if !allowed.contains(&key.as_str()) {
                bail!("unknown law key `{key}`");
            }
        }
        Ok(())
    }
}

/// A law file resolved into the forms the commands consume.
pub struct LoadedLaw {
    /// Float law driving sampling, tables and tilting.
    pub float: JointOffspringLaw,
    /// Rational law, present when every component has finite support.
    pub exact: Option<ExactJointLaw>,
    /// The file's content, echoed into output headers.
    pub echo: serde_json::Value,
}

impl LawFile {
    fn resolve(&self) -> Result<(JointOffspringLaw, Option<ExactJointLaw>)> {
        Ok(match &self.law {
            LawKind::Independent { clone, mutant } => {
                let float = JointOffspringLaw::independent(&clone.build()?, &mutant.build()?)?;
                let exact = match (clone.exact_probs()?, mutant.exact_probs()?) {
                    (Some(c), Some(m)) => Some(ExactJointLaw::independent(&c, &m)?),
                    _ => None,
                };
                (float, exact)
            }
            LawKind::Table { entries } => {
                let mut float_entries = Vec::with_capacity(entries.len());
                let mut exact_entries = Vec::with_capacity(entries.len());
                for (k, l, p) in entries {
                    let r = p.exact()?;
                    float_entries.push((*k, *l, r.to_f64().context("entry overflows a float")?));
                    exact_entries.push((*k, *l, r));
                }
                (
                    JointOffspringLaw::from_entries(&float_entries, 0.0)?,
                    Some(ExactJointLaw::from_entries(&exact_entries)?),
                )
            }
            LawKind::Pruning { p, base } => {
                let float = JointOffspringLaw::from_pruning(&base.build()?, p.float()?)?;
                let exact = match base.exact_probs()? {
                    Some(probs) => Some(ExactJointLaw::from_pruning(&probs, &p.exact()?)?),
                    None => None,
                };
                (float, exact)
            }
        })
    }
}

/// Reads and validates a law file.
pub fn load_law(path: &Path) -> Result<LoadedLaw> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read law file {}", path.display()))?;
    parse_law(&text).with_context(|| format!("invalid law file {}", path.display()))
}

/// Parses law-file text.
pub fn parse_law(text: &str) -> Result<LoadedLaw> {
    let table: toml::Table = toml::from_str(text)?;
    let file: LawFile = table.clone().try_into()?;
    file.check_keys(&table)?;
    if file.schema_version != LAW_SCHEMA_VERSION {
        bail!(
            "law schema_version {} is not supported (expected {LAW_SCHEMA_VERSION})",
            file.schema_version
        );
    }
    let echo = serde_json::to_value(&table)?;
    // Construction checks mass and subcriticality; degenerate marginals stay
    // loadable so they can still be sampled.
    let (float, exact) = file.resolve()?;
    Ok(LoadedLaw { float, exact, echo })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn independent_bernoulli_law_parses() {
        let law = parse_law(
            r#"
            schema_version = 1
            kind = "independent"
            clone = { family = "bernoulli", p = "1/2" }
            mutant = { family = "bernoulli", p = 0.5 }
            "#,
        )
        .unwrap();
        assert!((law.float.prob(1, 1) - 0.25).abs() < 1e-15);
        let exact = law.exact.unwrap();
        assert_eq!(exact.prob(1, 1), parse_ratio("1/4").unwrap());
    }

    #[test]
    fn table_law_parses_exactly() {
        let law = parse_law(
            r#"
            schema_version = 1
            kind = "table"
            entries = [[0, 0, "1/2"], [1, 0, "1/4"], [2, 1, "1/10"], [0, 2, "3/20"]]
            "#,
        )
        .unwrap();
        let exact = law.exact.unwrap();
        assert_eq!(exact.prob(2, 1), parse_ratio("1/10").unwrap());
        assert_eq!(exact.mean_total(), parse_ratio("17/20").unwrap());
    }

    #[test]
    fn pruning_of_finite_base_is_exact() {
        let law = parse_law(
            r#"
            schema_version = 1
            kind = "pruning"
            p = "1/2"
            base = { family = "probs", probs = ["1/2", "0", "1/2"] }
            "#,
        )
        .unwrap();
        let exact = law.exact.unwrap();
        assert_eq!(exact.prob(1, 1), parse_ratio("1/4").unwrap());
        assert!(law.float.validate().is_ok());
    }

    #[test]
    fn geometric_pruning_has_no_exact_form() {
        let law = parse_law(
            r#"
            schema_version = 1
            kind = "pruning"
            p = 0.3
            base = { family = "geometric", a = "1/3" }
            "#,
        )
        .unwrap();
        assert!(law.exact.is_none());
    }

    #[test]
    fn bad_inputs_are_rejected() {
        assert!(
            parse_law("schema_version = 2\nkind = \"table\"\nentries = [[0,0,\"1\"]]").is_err()
        );
        assert!(parse_law("schema_version = 1\nkind = \"nope\"").is_err());
        let supercritical = r#"
            schema_version = 1
            kind = "independent"
            clone = { family = "bernoulli", p = "3/4" }
            mutant = { family = "bernoulli", p = "3/4" }
        "#;
        assert!(parse_law(supercritical).is_err());
        let negative = r#"
            schema_version = 1
            kind = "table"
            entries = [[0, 0, "-1/2"], [1, 0, "3/2"]]
        "#;
        assert!(parse_law(negative).is_err());
        let stray_key = r#"
            schema_version = 1
            kind = "independent"
            clone = { family = "bernoulli", p = "1/2" }
            mutant = { family = "bernoulli", p = "1/2" }
            tail = 1e-9
        "#;
        let err = parse_law(stray_key).err().expect("stray key must fail");
        assert!(err.to_string().contains("tail"));
    }
}
