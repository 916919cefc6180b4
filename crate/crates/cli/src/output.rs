use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use bfm_core::schema::SCHEMA_VERSION;
use bfm_core::tolerance::Tolerances;

/// Provenance stamped on every result.
pub struct Stamp<'a> {
    pub verb: &'static str,
    pub seed: Option<u64>,
    pub mechanisms: Vec<String>,
    pub source: Option<&'a str>,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema: &'static str,
    verb: &'static str,
    seed: Option<u64>,
    mechanism: &'a [String],
    #[serde(skip_serializing_if = "Option::is_none")]
    source: Option<&'a str>,
    tolerances: Tolerances,
    result: T,
}

impl Stamp<'_> {
    pub fn json<T: Serialize>(&self, result: T) -> String {
        let envelope = Envelope {
            schema: SCHEMA_VERSION,
            verb: self.verb,
            seed: self.seed,
            mechanism: &self.mechanisms,
            source: self.source,
            tolerances: Tolerances::IN_FORCE,
            result,
        };
        let mut text = serde_json::to_string_pretty(&envelope).expect("results serialize");
        text.push('\n');
        text
    }

    /// A `#`-prefixed provenance line followed by the table.
    pub fn csv(&self, table: &str) -> String {
        let tolerances =
            serde_json::to_string(&Tolerances::IN_FORCE).expect("tolerances serialize");
        let seed = self
            .seed
            .map(|s| s.to_string())
            .unwrap_or_else(|| "-".into());
        let mechanism = if self.mechanisms.is_empty() {
            "-".to_string()
        } else {
            self.mechanisms.join(";")
        };
        format!(
            "# schema={SCHEMA_VERSION} verb={} seed={seed} mechanism={mechanism} tolerances={tolerances}\n{table}",
            self.verb
        )
    }
}

/// Writes to `path`, or to stdout when absent.
pub fn emit(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

/// Replaces infinities and NaN (not representable in JSON) by `null`.
pub fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}
