//! JSON file formats (schema `"v1"`) for instances, corpora and cost distributions.
//!
//! Instance:
//! ```json
//! { "schema": "v1", "n": 2, "budget": 1.0, "costs": [1.0, 1.0],
//!   "valuation": { "kind": "xos", "clauses": [[2, 0], [0, 3]] } }
//! ```
//! Valuation kinds: `additive` (`weights`), `xos` (`clauses`), `coverage`
//! (`coverSets`, `universeSize`), `table` (`values`, indexed by subset mask,
//! bit `i` = agent `i`), `closure` (`inner`). Values are compared with an
//! absolute tolerance of `1e-9`, so they should be scaled to roughly
//! `1`–`1000` per agent.
//!
//! Corpus: `{ "schema": "v1", "instances": [ { "id": "...", <instance fields> }, ... ] }`.
//!
//! Distribution: `{ "schema": "v1", "scenarios": [ { "prob": 0.5, "costs": [...] }, ... ] }`,
//! or just the bare scenario list.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bayesian::{Scenario, ScenarioDistribution};
use crate::error::{Error, Result};
use crate::harness::NamedInstance;
use crate::instance::Instance;
use crate::valuations::{SetFunction, Valuation};

pub const SCHEMA_VERSION: &str = "v1";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    schema: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<String>,
    n: usize,
    budget: f64,
    costs: Vec<f64>,
    valuation: Valuation,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CorpusFile {
    #[serde(default)]
    schema: Option<String>,
    /// Generator spec (`kind,n,count`) and seed, when the corpus was generated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    generator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    instances: Vec<InstanceFile>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum DistributionFile {
    Wrapped {
        #[serde(default)]
        schema: Option<String>,
        scenarios: Vec<Scenario>,
    },
    Bare(Vec<Scenario>),
}

/// 1-based line of the first occurrence of `"key"` in `text`.
fn line_of(text: &str, key: &str) -> Option<usize> {
    let needle = format!("\"{key}\"");
    let offset = text.find(&needle)?;
    Some(text[..offset].matches('\n').count() + 1)
}

fn parse_error(e: serde_json::Error) -> Error {
    let message = e.to_string();
    // serde reports "missing field `x`" / "unknown field `x`" / "unknown variant `x`" with the name in backticks
    let field = message
        .split('`')
        .nth(1)
        .filter(|_| message.contains("field") || message.contains("variant"))
        .unwrap_or("<document>")
        .to_string();
    Error::Schema {
        field,
        line: Some(e.line()),
        message,
    }
}

/// Re-attaches the line of the offending field to schema errors raised after parsing.
fn locate(err: Error, text: &str) -> Error {
    match err {
        Error::Schema {
            field,
            line: None,
            message,
        } => {
            let key = field.split(['[', '.']).next().unwrap_or(&field).to_string();
            Error::Schema {
                line: line_of(text, &key),
                field,
                message,
            }
        }
        Error::InvalidValuation(message) => Error::Schema {
            field: "valuation".into(),
            line: line_of(text, "valuation"),
            message,
        },
        other => other,
    }
}

fn check_version(schema: &Option<String>, text: &str) -> Result<()> {
    match schema {
        Some(v) if v != SCHEMA_VERSION => Err(Error::Schema {
            field: "schema".into(),
            line: line_of(text, "schema"),
            message: format!("unsupported schema version `{v}` (expected `{SCHEMA_VERSION}`)"),
        }),
        _ => Ok(()),
    }
}

fn build_instance(file: InstanceFile) -> Result<Instance> {
    if file.valuation.agents() != file.n {
        return Err(Error::Schema {
            field: "n".into(),
            line: None,
            message: format!(
                "n = {} but the valuation has {} agents",
                file.n,
                file.valuation.agents()
            ),
        });
    }
    Instance::new(file.valuation, file.costs, file.budget)
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    let file: InstanceFile = serde_json::from_str(text).map_err(parse_error)?;
    check_version(&file.schema, text)?;
    build_instance(file).map_err(|e| locate(e, text))
}

pub fn parse_corpus(text: &str) -> Result<Vec<NamedInstance>> {
    let file: CorpusFile = serde_json::from_str(text).map_err(parse_error)?;
    check_version(&file.schema, text)?;
    file.instances
        .into_iter()
        .enumerate()
        .map(|(k, f)| {
            let id = f.id.clone().unwrap_or_else(|| format!("instance-{k}"));
            let instance = build_instance(f).map_err(|e| match locate(e, text) {
                Error::Schema {
                    field,
                    line,
                    message,
                } => Error::Schema {
                    field: format!("instances[{k}].{field}"),
                    line,
                    message,
                },
                other => other,
            })?;
            Ok(NamedInstance { id, instance })
        })
        .collect()
}

pub fn parse_distribution(text: &str) -> Result<ScenarioDistribution> {
    let value: Value = serde_json::from_str(text).map_err(parse_error)?;
    let file: DistributionFile = serde_json::from_value(value).map_err(|e| Error::Schema {
        field: "scenarios".into(),
        line: line_of(text, "scenarios"),
        message: format!("expected a list of {{prob, costs}} scenarios: {e}"),
    })?;
    let scenarios = match file {
        DistributionFile::Wrapped { schema, scenarios } => {
            check_version(&schema, text)?;
            scenarios
        }
        DistributionFile::Bare(s) => s,
    };
    ScenarioDistribution::new(scenarios).map_err(|e| locate(e, text))
}

fn instance_file(instance: &Instance, id: Option<&str>) -> InstanceFile {
    InstanceFile {
        schema: id.is_none().then(|| SCHEMA_VERSION.to_string()),
        id: id.map(str::to_string),
        n: instance.agents(),
        budget: instance.budget(),
        costs: instance.costs().to_vec(),
        valuation: instance.valuation().clone(),
    }
}

pub fn instance_to_json(instance: &Instance) -> String {
    serde_json::to_string_pretty(&instance_file(instance, None)).expect("instances serialize")
}

/// `origin` records the generator spec and seed a corpus came from.
pub fn corpus_to_json(instances: &[NamedInstance], origin: Option<(&str, u64)>) -> String {
    let file = CorpusFile {
        schema: Some(SCHEMA_VERSION.to_string()),
        generator: origin.map(|(g, _)| g.to_string()),
        seed: origin.map(|(_, s)| s),
        instances: instances
            .iter()
            .map(|named| instance_file(&named.instance, Some(&named.id)))
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("corpora serialize")
}

pub fn distribution_to_json(dist: &ScenarioDistribution) -> String {
    #[derive(Serialize)]
    struct Out<'a> {
        schema: &'static str,
        scenarios: &'a [Scenario],
    }
    serde_json::to_string_pretty(&Out {
        schema: SCHEMA_VERSION,
        scenarios: dist.scenarios(),
    })
    .expect("distributions serialize")
}

pub fn read_instance(path: &Path) -> Result<Instance> {
    parse_instance(&std::fs::read_to_string(path)?)
}

pub fn read_corpus(path: &Path) -> Result<Vec<NamedInstance>> {
    parse_corpus(&std::fs::read_to_string(path)?)
}

pub fn read_distribution(path: &Path) -> Result<ScenarioDistribution> {
    parse_distribution(&std::fs::read_to_string(path)?)
}
