//! JSON model bundles and code descriptions.
//!
//! A bundle stores the code, the per-iteration row supports, the weight mode,
//! numeric guards and every weight. Weights are grouped per iteration in the
//! order channel, VN edge, CN, marginalization channel, marginalization sum;
//! edge-indexed arrays follow the row-major edge numbering (row by row, each
//! row in increasing column order). Floats are written in shortest
//! round-trip form, so reading a bundle back restores every bit.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use wbp_core::codes::CodeSpec;
use wbp_core::decoder::{DecoderModel, WeightMode};
use wbp_core::gf2::BinaryMatrix;

pub const BUNDLE_FORMAT: &str = "wbp-model/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeInfo {
    pub name: String,
    pub n: usize,
    pub k: usize,
}

impl CodeInfo {
    pub fn spec(&self) -> Result<CodeSpec> {
        Ok(CodeSpec::new(self.n, self.k, self.name.clone())?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationBundle {
    pub rows: Vec<Vec<u32>>,
    pub channel: Vec<f64>,
    pub vn_edge: Vec<f64>,
    pub check: Vec<f64>,
    pub marg_channel: Vec<f64>,
    pub marg_sum: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub format: String,
    pub code: CodeInfo,
    pub iterations: usize,
    pub mode: String,
    pub clamp: f64,
    pub saturation: f64,
    pub allow_empty: bool,
    /// Rows of the overcomplete matrix the schedule started from.
    pub overcomplete_rows: Option<usize>,
    /// Parity checks used for the per-iteration syndrome flags.
    pub reference: Vec<Vec<u32>>,
    /// Generator rows used for random-codeword evaluation.
    pub generator: Vec<Vec<u32>>,
    pub schedule: Vec<IterationBundle>,
}

fn supports(m: &BinaryMatrix) -> Vec<Vec<u32>> {
    (0..m.rows()).map(|r| m.row_support(r).to_vec()).collect()
}

fn matrix(cols: usize, rows: &[Vec<u32>], what: &str) -> Result<BinaryMatrix> {
    BinaryMatrix::from_supports(cols, rows.iter().map(|r| r.iter().map(|&v| v as usize).collect::<Vec<_>>()))
        .with_context(|| format!("invalid {what} rows"))
}

impl ModelBundle {
    pub fn from_model(model: &DecoderModel, generator: &BinaryMatrix, overcomplete_rows: Option<usize>) -> Self {
        let w = model.weights();
        let schedule = (0..model.iterations())
            .map(|l| IterationBundle {
                rows: supports(model.schedule()[l].matrix()),
                channel: w.channel(l).to_vec(),
                vn_edge: w.vn_edge(l).to_vec(),
                check: w.check(l).to_vec(),
                marg_channel: w.marg_channel(l).to_vec(),
                marg_sum: w.marg_sum(l).to_vec(),
            })
            .collect();
        ModelBundle {
            format: BUNDLE_FORMAT.to_string(),
            code: CodeInfo { name: model.code().name().to_string(), n: model.n(), k: model.code().k() },
            iterations: model.iterations(),
            mode: model.mode().as_str().to_string(),
            clamp: model.clamp(),
            saturation: model.saturation(),
            allow_empty: model.allows_empty_iterations(),
            overcomplete_rows,
            reference: supports(model.reference()),
            generator: supports(generator),
            schedule,
        }
    }

    pub fn to_model(&self) -> Result<DecoderModel> {
        if self.format != BUNDLE_FORMAT {
            bail!("unsupported bundle format {:?} (expected {BUNDLE_FORMAT:?})", self.format);
        }
        if self.schedule.len() != self.iterations {
            bail!("bundle declares {} iterations but stores {}", self.iterations, self.schedule.len());
        }
        let mode = WeightMode::parse(&self.mode).with_context(|| format!("unknown weight mode {:?}", self.mode))?;
        let n = self.code.n;
        let code = self.code.spec()?;
        let reference = matrix(n, &self.reference, "reference")?;
        let mut schedule = Vec::with_capacity(self.iterations);
        let mut values = Vec::new();
        for (l, it) in self.schedule.iter().enumerate() {
            schedule.push(matrix(n, &it.rows, &format!("iteration {} matrix", l + 1))?);
            for part in [&it.channel, &it.vn_edge, &it.check, &it.marg_channel, &it.marg_sum] {
                values.extend_from_slice(part);
            }
        }
        let mut model = DecoderModel::with_weights(code, reference, schedule, mode, values, self.allow_empty)?;
        // the flat vector only checks the total length; compare per part too
        for (l, it) in self.schedule.iter().enumerate() {
            let w = model.weights();
            if w.channel(l) != it.channel.as_slice()
                || w.vn_edge(l) != it.vn_edge.as_slice()
                || w.check(l) != it.check.as_slice()
                || w.marg_channel(l) != it.marg_channel.as_slice()
            {
                bail!("iteration {}: weight arrays do not match the matrix shape", l + 1);
            }
        }
        model.set_clamp(self.clamp)?;
        model.set_saturation(self.saturation)?;
        Ok(model)
    }

    pub fn generator(&self) -> Result<BinaryMatrix> {
        matrix(self.code.n, &self.generator, "generator")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read model bundle {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("{} is not a valid model bundle", path.display()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

/// Code description written next to the overcomplete matrix by `gen-code`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeFile {
    pub code: CodeInfo,
    /// How the matrix was produced.
    pub source: String,
    /// File name of the overcomplete parity-check matrix, relative to this file.
    pub parity_check: String,
    pub rows: usize,
    pub generator: Vec<Vec<u32>>,
}

/// A code loaded from a `gen-code` directory.
pub struct LoadedCode {
    pub spec: CodeSpec,
    pub h: BinaryMatrix,
    pub generator: BinaryMatrix,
}

impl LoadedCode {
    /// Parity checks spanning the dual code, for syndrome flags.
    pub fn reference(&self) -> BinaryMatrix {
        self.generator.nullspace()
    }
}

impl CodeFile {
    pub const FILE: &'static str = "code.json";

    /// Reads `dir/code.json` (or the given JSON file) and its matrix.
    pub fn load(path: &Path) -> Result<LoadedCode> {
        let json = if path.is_dir() { path.join(Self::FILE) } else { path.to_path_buf() };
        let text = std::fs::read_to_string(&json).with_context(|| format!("cannot read code description {}", json.display()))?;
        let file: CodeFile = serde_json::from_str(&text).with_context(|| format!("{} is not a valid code description", json.display()))?;
        let dir = json.parent().unwrap_or(Path::new("."));
        let h = crate::alist::read_alist(&dir.join(&file.parity_check))?;
        let spec = file.code.spec()?;
        if h.cols() != spec.n() {
            bail!("matrix has {} columns, code length is {}", h.cols(), spec.n());
        }
        let generator = matrix(spec.n(), &file.generator, "generator")?;
        if generator.rank() != spec.k() {
            bail!("generator has rank {}, expected k = {}", generator.rank(), spec.k());
        }
        Ok(LoadedCode { spec, h, generator })
    }
}

pub fn generator_rows(g: &BinaryMatrix) -> Vec<Vec<u32>> {
    supports(g)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}
