//! File formats: labels and prediction CSVs, split and pooler JSON
//! documents, and the bundle manifest. All writes are atomic (temp file in
//! the target directory, then rename); floats are written with 10
//! significant digits.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use ensemblepool_core::metrics::RocPoint;
use ensemblepool_core::poolers::FittedPooler;
use ensemblepool_core::types::{
    BundleMember, EnsembleBundle, LabelVector, PredictionMatrix, SourceKind, SplitAssignment,
};

pub const SCHEMA_VERSION: u32 = 1;

/// 10-significant-digit float formatting used in every CSV we write.
pub fn format_float(value: f64) -> String {
    format!("{value:.9e}")
}

/// Writes bytes atomically: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut temp = match dir {
        Some(dir) => tempfile::NamedTempFile::new_in(dir),
        None => tempfile::NamedTempFile::new_in("."),
    }
    .with_context(|| format!("creating temp file next to {}", path.display()))?;
    temp.write_all(bytes)
        .with_context(|| format!("writing {}", path.display()))?;
    temp.persist(path)
        .with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// Reads `sample_id,label` CSV into a label vector.
pub fn read_labels_csv(path: &Path) -> Result<LabelVector> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    {
        let headers = reader.headers()?;
        if headers.len() != 2 || &headers[0] != "sample_id" || &headers[1] != "label" {
            bail!(
                "{}: expected header `sample_id,label`, found `{}`",
                path.display(),
                headers.iter().collect::<Vec<_>>().join(",")
            );
        }
    }
    let mut ids = Vec::new();
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record.with_context(|| format!("reading {}", path.display()))?;
        let line = record
            .position()
            .map_or_else(|| "?".to_string(), |p| p.line().to_string());
        if record.len() != 2 {
            bail!(
                "{} line {line}: expected 2 fields, found {}",
                path.display(),
                record.len()
            );
        }
        let label: usize = record[1].parse().map_err(|_| {
            anyhow!(
                "{} line {line}: label `{}` is not a non-negative integer",
                path.display(),
                &record[1]
            )
        })?;
        ids.push(record[0].to_string());
        labels.push(label);
    }
    LabelVector::new(ids, labels).map_err(|e| anyhow!("{}: {e}", path.display()))
}

/// Reads a prediction CSV (`sample_id,<class_0>,...`); returns the matrix
/// and the class names from the header. Rows within the ingestion
/// tolerance are silently renormalized.
pub fn read_predictions_csv(path: &Path) -> Result<(PredictionMatrix, Vec<String>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let class_names: Vec<String> = {
        let headers = reader.headers()?;
        if headers.len() < 2 || &headers[0] != "sample_id" {
            bail!(
                "{}: expected header `sample_id,<class names...>`",
                path.display()
            );
        }
        headers.iter().skip(1).map(str::to_string).collect()
    };
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.with_context(|| format!("reading {}", path.display()))?;
        let line = record
            .position()
            .map_or_else(|| "?".to_string(), |p| p.line().to_string());
        if record.len() != class_names.len() + 1 {
            bail!(
                "{} line {line}: expected {} fields, found {}",
                path.display(),
                class_names.len() + 1,
                record.len()
            );
        }
        let mut row = Vec::with_capacity(class_names.len());
        for field in record.iter().skip(1) {
            let value: f64 = field.parse().map_err(|_| {
                anyhow!(
                    "{} line {line}: `{field}` is not a number",
                    path.display()
                )
            })?;
            row.push(value);
        }
        ids.push(record[0].to_string());
        rows.push(row);
    }
    let matrix = PredictionMatrix::from_raw(ids, rows)
        .map_err(|e| anyhow!("{}: {e}", path.display()))?;
    Ok((matrix, class_names))
}

/// Writes a prediction CSV with the given class-name header.
pub fn write_predictions_csv(
    path: &Path,
    matrix: &PredictionMatrix,
    class_names: &[String],
) -> Result<()> {
    let mut out = String::new();
    out.push_str("sample_id");
    for name in class_names {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (id, row) in matrix.sample_ids().iter().zip(matrix.rows()) {
        out.push_str(id);
        for &v in row.values() {
            out.push(',');
            out.push_str(&format_float(v));
        }
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// Writes one ROC point list as `threshold,fpr,tpr` CSV.
pub fn write_roc_csv(path: &Path, points: &[RocPoint]) -> Result<()> {
    let mut out = String::from("threshold,fpr,tpr\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{}\n",
            format_float(p.threshold),
            format_float(p.fpr),
            format_float(p.tpr)
        ));
    }
    write_atomic(path, out.as_bytes())
}

/// Split assignments on disk: either one four-way assignment or the k
/// assignments of a cross-validation layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitDocument {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assignment: Option<SplitAssignment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub folds: Option<Vec<SplitAssignment>>,
}

impl SplitDocument {
    pub fn four_way(assignment: SplitAssignment) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            assignment: Some(assignment),
            folds: None,
        }
    }

    pub fn kfold(folds: Vec<SplitAssignment>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            assignment: None,
            folds: Some(folds),
        }
    }

    /// The assignment carrying the ensemble-train/testing partitions; fold
    /// documents share those across folds, so the first fold serves.
    pub fn primary(&self) -> Result<&SplitAssignment> {
        if let Some(assignment) = &self.assignment {
            return Ok(assignment);
        }
        self.folds
            .as_ref()
            .and_then(|f| f.first())
            .ok_or_else(|| anyhow!("split document holds neither an assignment nor folds"))
    }
}

pub fn read_split(path: &Path) -> Result<SplitDocument> {
    let text =
        fs::read_to_string(path).with_context(|| format!("opening {}", path.display()))?;
    let doc: SplitDocument =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if doc.assignment.is_none() && doc.folds.is_none() {
        bail!("{}: neither `assignment` nor `folds` present", path.display());
    }
    Ok(doc)
}

/// Serialized fitted pooler with a schema version.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoolerDocument {
    pub schema_version: u32,
    pub pooler: FittedPooler,
}

/// One member entry of a bundle manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestMember {
    pub name: String,
    #[serde(default = "default_source_kind")]
    pub source_kind: SourceKind,
    pub path: String,
}

fn default_source_kind() -> SourceKind {
    SourceKind::Architecture
}

/// Points at per-member prediction CSVs plus optional ground-truth labels.
/// Relative paths resolve against the manifest's directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BundleManifest {
    pub schema_version: u32,
    pub class_names: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<String>,
    pub members: Vec<ManifestMember>,
}

pub struct LoadedBundle {
    pub bundle: EnsembleBundle,
    pub class_names: Vec<String>,
    pub labels: Option<LabelVector>,
}

pub fn read_manifest(path: &Path) -> Result<LoadedBundle> {
    let text =
        fs::read_to_string(path).with_context(|| format!("opening {}", path.display()))?;
    let manifest: BundleManifest =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if manifest.members.is_empty() {
        bail!("{}: manifest lists no members", path.display());
    }
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let resolve = |p: &str| -> PathBuf {
        let candidate = Path::new(p);
        if candidate.is_absolute() {
            candidate.to_path_buf()
        } else {
            base.join(candidate)
        }
    };
    let mut members = Vec::with_capacity(manifest.members.len());
    for entry in &manifest.members {
        let (matrix, class_names) = read_predictions_csv(&resolve(&entry.path))?;
        if class_names.len() != manifest.class_names.len() {
            bail!(
                "member `{}` has {} classes, manifest declares {}",
                entry.name,
                class_names.len(),
                manifest.class_names.len()
            );
        }
        members.push(BundleMember {
            name: entry.name.clone(),
            source_kind: entry.source_kind,
            matrix,
        });
    }
    let bundle = EnsembleBundle::new(members).map_err(|e| anyhow!("{}: {e}", path.display()))?;
    let labels = manifest
        .labels
        .as_deref()
        .map(|p| read_labels_csv(&resolve(p)))
        .transpose()?;
    Ok(LoadedBundle {
        bundle,
        class_names: manifest.class_names,
        labels,
    })
}
