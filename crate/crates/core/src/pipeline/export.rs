use std::collections::BTreeMap;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::store::sha256_hex;
use super::{DatasetRecord, PipelineError};
use crate::control::render_control_code;
use crate::num::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportMode {
    Plain,
    Controlled,
}

impl std::str::FromStr for ExportMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "plain" => Ok(Self::Plain),
            "controlled" => Ok(Self::Controlled),
            other => Err(format!("unknown export mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportRow {
    pub input: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportManifest {
    pub mode: ExportMode,
    pub count: u64,
    /// sha256 of the exported bytes.
    pub digest: String,
}

/// Writes accepted records as `{input, target}` lines. Controlled mode
/// prepends the rendered control instruction and a newline to the input.
pub fn export_distillation<F: Real, W: Write>(
    records: &[DatasetRecord<F>],
    mode: ExportMode,
    sink: &mut W,
) -> Result<ExportManifest, PipelineError> {
    let mut bytes = Vec::new();
    let mut count = 0;
    for r in records.iter().filter(|r| r.accepted()) {
        let input = match mode {
            ExportMode::Plain => r.document.clone(),
            ExportMode::Controlled => {
                let attrs = r.attrs.as_ref().ok_or_else(|| {
                    PipelineError::Precondition(format!("record {} is not annotated; run annotate first", r.id))
                })?;
                format!("{}\n{}", render_control_code(&attrs.code()), r.document)
            }
        };
        let row = ExportRow { input, target: r.summary.clone() };
        serde_json::to_writer(&mut bytes, &row).map_err(|e| PipelineError::Store(e.to_string()))?;
        bytes.push(b'\n');
        count += 1;
    }
    sink.write_all(&bytes)?;
    Ok(ExportManifest { mode, count, digest: sha256_hex(&bytes) })
}

/// At most `target` records per style bucket, drawn uniformly with a
/// seeded shuffle. Output is ordered by id.
pub fn downsample_balance<F: Real>(
    records: &[DatasetRecord<F>],
    target: usize,
    seed: u64,
) -> Result<Vec<DatasetRecord<F>>, PipelineError> {
    let mut buckets: BTreeMap<u8, Vec<&DatasetRecord<F>>> = BTreeMap::new();
    for r in records {
        let b = r
            .style_bucket
            .ok_or_else(|| PipelineError::Precondition(format!("record {} has no style bucket", r.id)))?;
        buckets.entry(b).or_default().push(r);
    }
    let mut out = Vec::new();
    for (bucket, mut members) in buckets {
        members.sort_by_key(|r| r.id);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (bucket as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        members.shuffle(&mut rng);
        out.extend(members.into_iter().take(target).cloned());
    }
    out.sort_by_key(|r| r.id);
    Ok(out)
}
