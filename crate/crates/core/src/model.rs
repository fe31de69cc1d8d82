//! Model documents: topologies, joint maps and channel specs in one JSON file.
//!
//! ```json
//! { "topology": [ ... ], "map": [ ... ], "channels": [ ... ] }
//! ```
//!
//! Every section is optional, so a model can be split across several files
//! and merged with [`ModelDocument::merge`]. The bundled defaults live in
//! `data/` and are compiled in.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{validate_specs, JointAngleSpec, KinematicsError};
use crate::skeleton::{validate_topology, JointMap, SkeletonError, SkeletonTopology, TopologyDef};

pub const REFERENCE_SEGMENTS_JSON: &str = include_str!("../data/reference_segments.json");
pub const POSE17_JSON: &str = include_str!("../data/pose17.json");
pub const CHANNELS_JSON: &str = include_str!("../data/channels.json");

/// Name of the bundled reference segment topology.
pub const REFERENCE_TOPOLOGY: &str = "segments";
/// Name of the bundled 17-joint (plus two virtual toe points) pose layout.
pub const POSE17_TOPOLOGY: &str = "pose17";

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: line {line}, column {column}: {reason}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        reason: String,
    },
    #[error(transparent)]
    Skeleton(#[from] SkeletonError),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error("topology `{0}` is defined twice")]
    DuplicateTopology(String),
    #[error("unknown topology `{0}`")]
    UnknownTopology(String),
    #[error("no map from `{0}` to `{1}`")]
    NoMap(String, String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    #[serde(default)]
    pub topology: Vec<TopologyDef>,
    #[serde(default)]
    pub map: Vec<JointMap>,
    #[serde(default)]
    pub channels: Vec<JointAngleSpec>,
}

impl ModelDocument {
    pub fn parse(text: &str, origin: &str) -> Result<Self, ModelError> {
        serde_json::from_str(text).map_err(|e| ModelError::Parse {
            path: origin.to_string(),
            line: e.line(),
            column: e.column(),
            reason: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    /// The three bundled documents merged.
    pub fn bundled() -> Self {
        let mut doc = Self::default();
        for (text, name) in [
            (REFERENCE_SEGMENTS_JSON, "reference_segments.json"),
            (POSE17_JSON, "pose17.json"),
            (CHANNELS_JSON, "channels.json"),
        ] {
            doc.merge(Self::parse(text, name).expect("bundled model data is valid"));
        }
        doc
    }

    /// Appends every section of `other`; later channel specs with the same
    /// name replace earlier ones.
    pub fn merge(&mut self, other: ModelDocument) {
        self.topology.extend(other.topology);
        self.map.extend(other.map);
        for spec in other.channels {
            match self.channels.iter_mut().find(|c| c.name == spec.name) {
                Some(slot) => *slot = spec,
                None => self.channels.push(spec),
            }
        }
    }

    /// Validates every section and resolves names.
    pub fn build(self) -> Result<Model, ModelError> {
        let mut topologies = BTreeMap::new();
        for def in self.topology {
            let name = def.name.clone();
            let topo = validate_topology(def)?;
            if topologies.insert(name.clone(), Arc::new(topo)).is_some() {
                return Err(ModelError::DuplicateTopology(name));
            }
        }
        for map in &self.map {
            let src = topologies
                .get(&map.source)
                .ok_or_else(|| ModelError::UnknownTopology(map.source.clone()))?;
            let dst = topologies
                .get(&map.target)
                .ok_or_else(|| ModelError::UnknownTopology(map.target.clone()))?;
            map.compile(src, dst)?;
        }
        validate_specs(&self.channels)?;
        Ok(Model {
            topologies,
            maps: self.map,
            channels: self.channels,
        })
    }
}

/// A validated model.
#[derive(Debug, Clone)]
pub struct Model {
    topologies: BTreeMap<String, Arc<SkeletonTopology>>,
    maps: Vec<JointMap>,
    channels: Vec<JointAngleSpec>,
}

impl Model {
    pub fn bundled() -> Self {
        ModelDocument::bundled()
            .build()
            .expect("bundled model data is valid")
    }

    pub fn topology(&self, name: &str) -> Result<Arc<SkeletonTopology>, ModelError> {
        self.topologies
            .get(name)
            .cloned()
            .ok_or_else(|| ModelError::UnknownTopology(name.to_string()))
    }

    pub fn topologies(&self) -> impl Iterator<Item = &Arc<SkeletonTopology>> {
        self.topologies.values()
    }

    pub fn map(&self, source: &str, target: &str) -> Result<&JointMap, ModelError> {
        self.maps
            .iter()
            .find(|m| m.source == source && m.target == target)
            .ok_or_else(|| ModelError::NoMap(source.to_string(), target.to_string()))
    }

    pub fn maps(&self) -> &[JointMap] {
        &self.maps
    }

    pub fn channels(&self) -> &[JointAngleSpec] {
        &self.channels
    }
}
