use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{read_file, IoError};
use crate::model::{Model, ModelDocument, ModelError};
use crate::pipeline::{AlignmentGranularity, CompareOptions};
use crate::rotation::{Axis, RotationConvention};
use crate::sync::{ComparisonMode, GroupBy, GroupKey, PairingMethod, DEFAULT_MAX_GAP};

/// Analysis settings, read from a JSON file.
///
/// Model paths are resolved relative to the config file. Each referenced file
/// is a model document; all of them are merged over the bundled model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub topology: Vec<PathBuf>,
    pub map: Option<PathBuf>,
    pub channels: Option<PathBuf>,
    pub convention: RotationConvention,
    pub alignment: AlignmentGranularity,
    pub mode: ComparisonMode,
    pub canonicalize_reference: bool,
    pub max_gap: f64,
    pub pairing: PairingMethod,
    pub group_by: Vec<GroupKey>,
    /// Euler component used as flexion when a reference stream carries
    /// `<channel>_x/_y/_z` columns.
    pub flexion_component: Axis,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            topology: Vec::new(),
            map: None,
            channels: None,
            convention: RotationConvention::default(),
            alignment: AlignmentGranularity::default(),
            mode: ComparisonMode::CrossSystem,
            canonicalize_reference: false,
            max_gap: DEFAULT_MAX_GAP,
            pairing: PairingMethod::Linear,
            group_by: Vec::new(),
            flexion_component: Axis::Z,
        }
    }
}

impl AnalysisConfig {
    pub fn parse(text: &str) -> Result<Self, IoError> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| IoError::parse(e.line(), e.to_string()))?;
        if !(cfg.max_gap > 0.0 && cfg.max_gap.is_finite()) {
            return Err(IoError::parse(0, "max_gap must be positive"));
        }
        Ok(cfg)
    }

    /// Parses the file and makes its model paths absolute.
    pub fn load(path: &Path) -> Result<Self, IoError> {
        let mut cfg = Self::parse(&read_file(path)?)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.topology.iter_mut().for_each(fix);
        cfg.map.iter_mut().for_each(fix);
        cfg.channels.iter_mut().for_each(fix);
        Ok(cfg)
    }

    fn model_files(&self) -> impl Iterator<Item = &PathBuf> {
        self.topology.iter().chain(&self.map).chain(&self.channels)
    }

    /// The bundled model with every referenced file merged in, validated.
    pub fn model(&self) -> Result<Model, ModelError> {
        let mut doc = ModelDocument::bundled();
        for path in self.model_files() {
            doc.merge(ModelDocument::load(path)?);
        }
        doc.build()
    }

    pub fn compare_options(&self) -> CompareOptions {
        CompareOptions {
            mode: self.mode,
            group_by: GroupBy::with_keys(self.group_by.iter().copied()),
            max_gap: self.max_gap,
            method: self.pairing,
            convention: self.convention,
            flexion_component: self.flexion_component,
            canonicalize_reference: self.canonicalize_reference,
        }
    }
}
