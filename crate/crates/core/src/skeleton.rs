//! Skeleton topologies, frames, sequences and joint correspondence maps.
//!
//! Positions inside a [`SkeletonFrame`] are stored in topology order, so a
//! frame is only meaningful together with the [`SkeletonTopology`] it was
//! built for. [`MotionSequence`] bundles the two.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on the sum of weights inside one [`MapRule`].
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SkeletonError {
    #[error("joint name must not be empty")]
    EmptyJointName,
    #[error("duplicate joint `{0}`")]
    DuplicateJoint(String),
    #[error("edge references undeclared joint `{0}`")]
    DanglingEdge(String),
    #[error("anchor {role} is invalid: {reason}")]
    MissingAnchor { role: AnchorRole, reason: String },
    #[error("edges form a cycle through joint `{0}`")]
    CyclicEdges(String),
    #[error("map rule references source joint `{0}` which is not in the frame")]
    MissingSourceJoint(String),
    #[error("map rule targets unknown joint `{0}`")]
    UnknownTargetJoint(String),
    #[error("target joint `{0}` appears in more than one map rule")]
    DuplicateRule(String),
    #[error("target joint `{0}` is not covered by any map rule")]
    UncoveredTarget(String),
    #[error("weights of rule for `{joint}` are invalid: {reason}")]
    BadWeights { joint: String, reason: String },
    #[error("map expects topology `{expected}`, got `{actual}`")]
    TopologyMismatch { expected: String, actual: String },
    #[error("frame has {actual} positions, topology `{topology}` has {expected} joints")]
    FrameSize {
        topology: String,
        expected: usize,
        actual: usize,
    },
    #[error("frame at t={t} has a non-finite position for joint `{joint}`")]
    NonFinitePosition { t: f64, joint: String },
    #[error("non-finite timestamp at frame {0}")]
    NonFiniteTime(usize),
    #[error("timestamps must strictly increase (frame {index}: {prev} then {next})")]
    TimestampOrder { index: usize, prev: f64, next: f64 },
    #[error("repetitions must be at least 1")]
    InvalidRepetitions,
}

/// Case-sensitive joint identifier.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct JointId(String);

impl JointId {
    pub fn new(name: impl Into<String>) -> Result<Self, SkeletonError> {
        let name = name.into();
        if name.is_empty() {
            return Err(SkeletonError::EmptyJointName);
        }
        Ok(Self(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for JointId {
    type Error = SkeletonError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<JointId> for String {
    fn from(value: JointId) -> Self {
        value.0
    }
}

impl std::borrow::Borrow<str> for JointId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for JointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AnchorRole {
    LeftShoulder,
    RightShoulder,
    LeftHip,
    RightHip,
}

impl AnchorRole {
    pub const ALL: [AnchorRole; 4] = [
        AnchorRole::LeftShoulder,
        AnchorRole::RightShoulder,
        AnchorRole::LeftHip,
        AnchorRole::RightHip,
    ];
}

impl fmt::Display for AnchorRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AnchorRole::LeftShoulder => "left_shoulder",
            AnchorRole::RightShoulder => "right_shoulder",
            AnchorRole::LeftHip => "left_hip",
            AnchorRole::RightHip => "right_hip",
        })
    }
}

/// The four shoulder/hip joints used as correspondence points for alignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Anchors {
    pub left_shoulder: JointId,
    pub right_shoulder: JointId,
    pub left_hip: JointId,
    pub right_hip: JointId,
}

impl Anchors {
    pub fn get(&self, role: AnchorRole) -> &JointId {
        match role {
            AnchorRole::LeftShoulder => &self.left_shoulder,
            AnchorRole::RightShoulder => &self.right_shoulder,
            AnchorRole::LeftHip => &self.left_hip,
            AnchorRole::RightHip => &self.right_hip,
        }
    }
}

/// Unvalidated topology as it appears in a model document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyDef {
    pub name: String,
    pub joints: Vec<JointId>,
    #[serde(default)]
    pub edges: Vec<(JointId, JointId)>,
    pub anchors: Anchors,
}

/// A validated skeleton topology. Only obtainable through [`validate_topology`].
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonTopology {
    def: TopologyDef,
    index: HashMap<JointId, usize>,
    anchor_indices: [usize; 4],
}

impl SkeletonTopology {
    pub fn name(&self) -> &str {
        &self.def.name
    }

    pub fn joints(&self) -> &[JointId] {
        &self.def.joints
    }

    pub fn edges(&self) -> &[(JointId, JointId)] {
        &self.def.edges
    }

    pub fn anchors(&self) -> &Anchors {
        &self.def.anchors
    }

    /// Joint indices of the anchors in [`AnchorRole::ALL`] order.
    pub fn anchor_indices(&self) -> [usize; 4] {
        self.anchor_indices
    }

    pub fn len(&self) -> usize {
        self.def.joints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.def.joints.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn index_of_id(&self, id: &JointId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn definition(&self) -> &TopologyDef {
        &self.def
    }
}

/// Checks every topology invariant and returns the validated topology.
pub fn validate_topology(def: TopologyDef) -> Result<SkeletonTopology, SkeletonError> {
    let mut index = HashMap::with_capacity(def.joints.len());
    for (i, joint) in def.joints.iter().enumerate() {
        if index.insert(joint.clone(), i).is_some() {
            return Err(SkeletonError::DuplicateJoint(joint.to_string()));
        }
    }

    for (parent, child) in &def.edges {
        for end in [parent, child] {
            if !index.contains_key(end) {
                return Err(SkeletonError::DanglingEdge(end.to_string()));
            }
        }
    }

    let mut anchor_indices = [0usize; 4];
    let mut seen: HashMap<usize, AnchorRole> = HashMap::new();
    for (slot, role) in AnchorRole::ALL.into_iter().enumerate() {
        let id = def.anchors.get(role);
        let Some(&i) = index.get(id) else {
            return Err(SkeletonError::MissingAnchor {
                role,
                reason: format!("joint `{id}` is not declared"),
            });
        };
        if let Some(other) = seen.insert(i, role) {
            return Err(SkeletonError::MissingAnchor {
                role,
                reason: format!("joint `{id}` is already used as {other}"),
            });
        }
        anchor_indices[slot] = i;
    }

    if let Some(joint) = find_cycle(&def.joints, &def.edges, &index) {
        return Err(SkeletonError::CyclicEdges(joint.to_string()));
    }

    Ok(SkeletonTopology {
        def,
        index,
        anchor_indices,
    })
}

/// Iterative three-colour DFS over parent -> child edges.
fn find_cycle<'a>(
    joints: &'a [JointId],
    edges: &[(JointId, JointId)],
    index: &HashMap<JointId, usize>,
) -> Option<&'a JointId> {
    let n = joints.len();
    let mut children = vec![Vec::new(); n];
    for (p, c) in edges {
        children[index[p]].push(index[c]);
    }
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state = vec![0u8; n];
    for root in 0..n {
        if state[root] != 0 {
            continue;
        }
        let mut stack = vec![(root, 0usize)];
        state[root] = 1;
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            if let Some(&child) = children[node].get(*next) {
                *next += 1;
                match state[child] {
                    0 => {
                        state[child] = 1;
                        stack.push((child, 0));
                    }
                    1 => return Some(&joints[child]),
                    _ => {}
                }
            } else {
                state[node] = 2;
                stack.pop();
            }
        }
    }
    None
}

/// Positions of every topology joint at one instant, in topology order.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonFrame {
    pub t: f64,
    pub positions: Vec<Vector3<f64>>,
}

impl SkeletonFrame {
    pub fn new(t: f64, positions: Vec<Vector3<f64>>) -> Self {
        Self { t, positions }
    }

    /// Builds a frame from named positions; every topology joint must be present.
    pub fn from_named<'a>(
        topology: &SkeletonTopology,
        t: f64,
        named: impl IntoIterator<Item = (&'a str, Vector3<f64>)>,
    ) -> Result<Self, SkeletonError> {
        let mut slots: Vec<Option<Vector3<f64>>> = vec![None; topology.len()];
        for (name, p) in named {
            let i = topology
                .index_of(name)
                .ok_or_else(|| SkeletonError::MissingSourceJoint(name.to_string()))?;
            slots[i] = Some(p);
        }
        let positions = slots
            .into_iter()
            .zip(topology.joints())
            .map(|(p, j)| p.ok_or_else(|| SkeletonError::MissingSourceJoint(j.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { t, positions })
    }

    pub fn position(&self, topology: &SkeletonTopology, name: &str) -> Option<Vector3<f64>> {
        topology.index_of(name).map(|i| self.positions[i])
    }

    pub fn anchor_points(&self, topology: &SkeletonTopology) -> [Vector3<f64>; 4] {
        topology.anchor_indices().map(|i| self.positions[i])
    }

    fn check(&self, topology: &SkeletonTopology) -> Result<(), SkeletonError> {
        if self.positions.len() != topology.len() {
            return Err(SkeletonError::FrameSize {
                topology: topology.name().to_string(),
                expected: topology.len(),
                actual: self.positions.len(),
            });
        }
        for (p, j) in self.positions.iter().zip(topology.joints()) {
            if !p.iter().all(|c| c.is_finite()) {
                return Err(SkeletonError::NonFinitePosition {
                    t: self.t,
                    joint: j.to_string(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Exercise {
    Squat,
    Situp,
    Pushup,
    Other(String),
}

impl Exercise {
    pub fn label(&self) -> &str {
        match self {
            Exercise::Squat => "squat",
            Exercise::Situp => "situp",
            Exercise::Pushup => "pushup",
            Exercise::Other(s) => s,
        }
    }

    pub fn parse(s: &str) -> Self {
        match s {
            "squat" => Exercise::Squat,
            "situp" => Exercise::Situp,
            "pushup" => Exercise::Pushup,
            other => Exercise::Other(other.to_string()),
        }
    }
}

impl fmt::Display for Exercise {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordingMeta {
    pub subject: String,
    pub exercise: Exercise,
    pub camera_perspective_deg: f64,
    pub clothing: String,
    pub repetitions: u32,
}

impl RecordingMeta {
    pub fn new(
        subject: impl Into<String>,
        exercise: Exercise,
        camera_perspective_deg: f64,
        clothing: impl Into<String>,
        repetitions: u32,
    ) -> Result<Self, SkeletonError> {
        if repetitions == 0 {
            return Err(SkeletonError::InvalidRepetitions);
        }
        Ok(Self {
            subject: subject.into(),
            exercise,
            camera_perspective_deg,
            clothing: clothing.into(),
            repetitions,
        })
    }

    pub fn validate(&self) -> Result<(), SkeletonError> {
        if self.repetitions == 0 {
            return Err(SkeletonError::InvalidRepetitions);
        }
        Ok(())
    }
}

impl Default for RecordingMeta {
    fn default() -> Self {
        Self {
            subject: "unknown".into(),
            exercise: Exercise::Other("unknown".into()),
            camera_perspective_deg: 0.0,
            clothing: "unknown".into(),
            repetitions: 1,
        }
    }
}

/// Time-ordered frames of one recording.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionSequence {
    topology: Arc<SkeletonTopology>,
    frames: Vec<SkeletonFrame>,
    meta: RecordingMeta,
}

impl MotionSequence {
    pub fn new(
        topology: Arc<SkeletonTopology>,
        frames: Vec<SkeletonFrame>,
        meta: RecordingMeta,
    ) -> Result<Self, SkeletonError> {
        meta.validate()?;
        for (i, frame) in frames.iter().enumerate() {
            if !frame.t.is_finite() {
                return Err(SkeletonError::NonFiniteTime(i));
            }
            frame.check(&topology)?;
            if i > 0 && frame.t <= frames[i - 1].t {
                return Err(SkeletonError::TimestampOrder {
                    index: i,
                    prev: frames[i - 1].t,
                    next: frame.t,
                });
            }
        }
        Ok(Self {
            topology,
            frames,
            meta,
        })
    }

    pub fn topology(&self) -> &SkeletonTopology {
        &self.topology
    }

    pub fn topology_arc(&self) -> &Arc<SkeletonTopology> {
        &self.topology
    }

    pub fn frames(&self) -> &[SkeletonFrame] {
        &self.frames
    }

    pub fn meta(&self) -> &RecordingMeta {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn into_frames(self) -> Vec<SkeletonFrame> {
        self.frames
    }

    /// Replaces the frames, re-checking sequence invariants.
    pub fn with_frames(&self, frames: Vec<SkeletonFrame>) -> Result<Self, SkeletonError> {
        Self::new(self.topology.clone(), frames, self.meta.clone())
    }
}

/// One target joint expressed as a convex combination of source joints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapRule {
    pub target: JointId,
    pub sources: Vec<(JointId, f64)>,
}

impl MapRule {
    pub fn copy(name: &JointId) -> Self {
        Self {
            target: name.clone(),
            sources: vec![(name.clone(), 1.0)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointMap {
    /// Name of the topology the map reads.
    pub source: String,
    /// Name of the topology the map produces.
    pub target: String,
    pub rules: Vec<MapRule>,
}

impl JointMap {
    /// Each joint of `topology` copied from the same-named source joint.
    pub fn identity(topology: &SkeletonTopology) -> Self {
        Self {
            source: topology.name().to_string(),
            target: topology.name().to_string(),
            rules: topology.joints().iter().map(MapRule::copy).collect(),
        }
    }

    /// Checks rule invariants against the target topology.
    pub fn validate(&self, target: &SkeletonTopology) -> Result<(), SkeletonError> {
        if self.target != target.name() {
            return Err(SkeletonError::TopologyMismatch {
                expected: self.target.clone(),
                actual: target.name().to_string(),
            });
        }
        let mut covered = HashSet::new();
        for rule in &self.rules {
            if target.index_of_id(&rule.target).is_none() {
                return Err(SkeletonError::UnknownTargetJoint(rule.target.to_string()));
            }
            if !covered.insert(rule.target.clone()) {
                return Err(SkeletonError::DuplicateRule(rule.target.to_string()));
            }
            check_weights(rule)?;
        }
        if let Some(j) = target.joints().iter().find(|j| !covered.contains(*j)) {
            return Err(SkeletonError::UncoveredTarget(j.to_string()));
        }
        Ok(())
    }

    /// Resolves source names against `source` once, for repeated frame mapping.
    pub fn compile(
        &self,
        source: &SkeletonTopology,
        target: &SkeletonTopology,
    ) -> Result<CompiledMap, SkeletonError> {
        if self.source != source.name() {
            return Err(SkeletonError::TopologyMismatch {
                expected: self.source.clone(),
                actual: source.name().to_string(),
            });
        }
        self.validate(target)?;
        let by_target: BTreeMap<usize, &MapRule> = self
            .rules
            .iter()
            .map(|r| (target.index_of_id(&r.target).expect("validated"), r))
            .collect();
        let mut rows = Vec::with_capacity(target.len());
        for rule in by_target.values() {
            let mut row = Vec::with_capacity(rule.sources.len());
            for (src, w) in &rule.sources {
                let i = source
                    .index_of_id(src)
                    .ok_or_else(|| SkeletonError::MissingSourceJoint(src.to_string()))?;
                row.push((i, *w));
            }
            rows.push(row);
        }
        Ok(CompiledMap {
            source_len: source.len(),
            rows,
        })
    }
}

fn check_weights(rule: &MapRule) -> Result<(), SkeletonError> {
    let bad = |reason: String| SkeletonError::BadWeights {
        joint: rule.target.to_string(),
        reason,
    };
    if rule.sources.is_empty() {
        return Err(bad("no source joints".into()));
    }
    let mut sum = 0.0;
    for (src, w) in &rule.sources {
        if !w.is_finite() || *w < 0.0 {
            return Err(bad(format!(
                "weight {w} for `{src}` is negative or non-finite"
            )));
        }
        sum += w;
    }
    if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(bad(format!("weights sum to {sum}, expected 1")));
    }
    Ok(())
}

/// A [`JointMap`] resolved to joint indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledMap {
    source_len: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl CompiledMap {
    pub fn apply(&self, frame: &SkeletonFrame) -> Result<SkeletonFrame, SkeletonError> {
        if frame.positions.len() != self.source_len {
            return Err(SkeletonError::FrameSize {
                topology: "source".into(),
                expected: self.source_len,
                actual: frame.positions.len(),
            });
        }
        let positions = self
            .rows
            .iter()
            .map(|row| {
                row.iter().fold(Vector3::zeros(), |acc, &(i, w)| {
                    acc + frame.positions[i] * w
                })
            })
            .collect();
        Ok(SkeletonFrame {
            t: frame.t,
            positions,
        })
    }
}

/// Maps one frame from `source` topology into `target` topology.
pub fn map_topology(
    frame: &SkeletonFrame,
    source: &SkeletonTopology,
    map: &JointMap,
    target: &SkeletonTopology,
) -> Result<SkeletonFrame, SkeletonError> {
    map.compile(source, target)?.apply(frame)
}

/// Maps every frame of a sequence; metadata is carried over.
pub fn map_sequence(
    seq: &MotionSequence,
    map: &JointMap,
    target: Arc<SkeletonTopology>,
) -> Result<MotionSequence, SkeletonError> {
    let compiled = map.compile(seq.topology(), &target)?;
    let frames = seq
        .frames()
        .iter()
        .map(|f| compiled.apply(f))
        .collect::<Result<Vec<_>, _>>()?;
    MotionSequence::new(target, frames, seq.meta().clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn jid(s: &str) -> JointId {
        JointId::new(s).unwrap()
    }

    fn anchors(ls: &str, rs: &str, lh: &str, rh: &str) -> Anchors {
        Anchors {
            left_shoulder: jid(ls),
            right_shoulder: jid(rs),
            left_hip: jid(lh),
            right_hip: jid(rh),
        }
    }

    fn chain17() -> TopologyDef {
        let names: Vec<String> = (0..13)
            .map(|i| format!("j{i}"))
            .chain(["lsh", "rsh", "lhip", "rhip"].map(String::from))
            .collect();
        let joints: Vec<JointId> = names.iter().map(|n| jid(n)).collect();
        let edges = joints
            .windows(2)
            .map(|w| (w[0].clone(), w[1].clone()))
            .collect();
        TopologyDef {
            name: "chain".into(),
            joints,
            edges,
            anchors: anchors("lsh", "rsh", "lhip", "rhip"),
        }
    }

    #[test]
    fn valid_chain_is_accepted() {
        let topo = validate_topology(chain17()).unwrap();
        assert_eq!(topo.len(), 17);
        assert_eq!(topo.anchor_indices(), [13, 14, 15, 16]);
    }

    #[test]
    fn dangling_edge_names_the_joint() {
        let mut def = chain17();
        def.edges.push((jid("j3"), jid("toe_X")));
        assert_eq!(
            validate_topology(def),
            Err(SkeletonError::DanglingEdge("toe_X".into()))
        );
    }

    #[test]
    fn shared_hip_anchor_is_rejected() {
        let mut def = chain17();
        def.anchors.right_hip = jid("lhip");
        assert!(matches!(
            validate_topology(def),
            Err(SkeletonError::MissingAnchor {
                role: AnchorRole::RightHip,
                ..
            })
        ));
    }

    #[test]
    fn undeclared_anchor_is_rejected() {
        let mut def = chain17();
        def.anchors.left_shoulder = jid("nope");
        assert!(matches!(
            validate_topology(def),
            Err(SkeletonError::MissingAnchor { .. })
        ));
    }

    #[test]
    fn duplicate_and_cycle() {
        let mut def = chain17();
        def.joints.push(jid("j0"));
        assert_eq!(
            validate_topology(def),
            Err(SkeletonError::DuplicateJoint("j0".into()))
        );

        let mut def = chain17();
        def.edges.push((jid("j5"), jid("j2")));
        assert!(matches!(
            validate_topology(def),
            Err(SkeletonError::CyclicEdges(_))
        ));
    }

    #[test]
    fn empty_joint_name_fails_deserialization() {
        let err = serde_json::from_str::<JointId>("\"\"");
        assert!(err.is_err());
    }

    fn line_topology(names: &[&str]) -> SkeletonTopology {
        validate_topology(TopologyDef {
            name: "t".into(),
            joints: names.iter().map(|n| jid(n)).collect(),
            edges: vec![],
            anchors: anchors(names[0], names[1], names[2], names[3]),
        })
        .unwrap()
    }

    #[test]
    fn midpoint_rule() {
        let src = line_topology(&["a", "b", "c", "d"]);
        let dst = validate_topology(TopologyDef {
            name: "dst".into(),
            joints: ["hip_center", "a", "b", "c"].map(jid).to_vec(),
            edges: vec![],
            anchors: anchors("hip_center", "a", "b", "c"),
        })
        .unwrap();
        let map = JointMap {
            source: "t".into(),
            target: "dst".into(),
            rules: vec![
                MapRule {
                    target: jid("hip_center"),
                    sources: vec![(jid("a"), 0.5), (jid("b"), 0.5)],
                },
                MapRule::copy(&jid("a")),
                MapRule::copy(&jid("b")),
                MapRule::copy(&jid("c")),
            ],
        };
        let frame = SkeletonFrame::new(
            0.25,
            vec![
                Vector3::zeros(),
                Vector3::new(2.0, 0.0, 0.0),
                Vector3::new(0.0, 1.0, 0.0),
                Vector3::new(0.0, 0.0, 1.0),
            ],
        );
        let out = map_topology(&frame, &src, &map, &dst).unwrap();
        assert_eq!(out.t, 0.25);
        assert_eq!(out.positions[0], Vector3::new(1.0, 0.0, 0.0));
        assert_eq!(out.positions[3], Vector3::new(0.0, 1.0, 0.0));
    }

    #[test]
    fn missing_source_joint() {
        let src = line_topology(&["a", "b", "c", "d"]);
        let mut map = JointMap::identity(&src);
        map.rules[0].sources = vec![(jid("spine4"), 1.0)];
        let frame = SkeletonFrame::new(0.0, vec![Vector3::zeros(); 4]);
        assert_eq!(
            map_topology(&frame, &src, &map, &src),
            Err(SkeletonError::MissingSourceJoint("spine4".into()))
        );
    }

    #[test]
    fn map_rule_invariants() {
        let topo = line_topology(&["a", "b", "c", "d"]);
        let mut map = JointMap::identity(&topo);
        map.rules[1].sources = vec![(jid("a"), 0.6), (jid("b"), 0.3)];
        assert!(matches!(
            map.validate(&topo),
            Err(SkeletonError::BadWeights { .. })
        ));
        let mut map = JointMap::identity(&topo);
        map.rules[1].sources = vec![(jid("a"), 1.5), (jid("b"), -0.5)];
        assert!(matches!(
            map.validate(&topo),
            Err(SkeletonError::BadWeights { .. })
        ));
        let mut map = JointMap::identity(&topo);
        map.rules.pop();
        assert_eq!(
            map.validate(&topo),
            Err(SkeletonError::UncoveredTarget("d".into()))
        );
        let mut map = JointMap::identity(&topo);
        map.rules[3] = MapRule::copy(&jid("c"));
        assert_eq!(
            map.validate(&topo),
            Err(SkeletonError::DuplicateRule("c".into()))
        );
    }

    #[test]
    fn sequence_rejects_non_monotone_time() {
        let topo = Arc::new(line_topology(&["a", "b", "c", "d"]));
        let frames = vec![
            SkeletonFrame::new(1.0, vec![Vector3::zeros(); 4]),
            SkeletonFrame::new(0.5, vec![Vector3::zeros(); 4]),
        ];
        assert!(matches!(
            MotionSequence::new(topo, frames, RecordingMeta::default()),
            Err(SkeletonError::TimestampOrder { index: 1, .. })
        ));
    }

    #[test]
    fn sequence_rejects_nan() {
        let topo = Arc::new(line_topology(&["a", "b", "c", "d"]));
        let mut pos = vec![Vector3::zeros(); 4];
        pos[2].y = f64::NAN;
        let frames = vec![SkeletonFrame::new(0.0, pos)];
        assert!(matches!(
            MotionSequence::new(topo, frames, RecordingMeta::default()),
            Err(SkeletonError::NonFinitePosition { .. })
        ));
    }

    #[test]
    fn zero_repetitions_rejected() {
        assert_eq!(
            RecordingMeta::new("s", Exercise::Squat, 0.0, "x", 0),
            Err(SkeletonError::InvalidRepetitions)
        );
    }

    fn arb_frame(n: usize) -> impl Strategy<Value = SkeletonFrame> {
        (
            -10.0..10.0f64,
            prop::collection::vec(prop::array::uniform3(-5.0..5.0f64), n),
        )
            .prop_map(|(t, ps)| SkeletonFrame::new(t, ps.into_iter().map(Vector3::from).collect()))
    }

    proptest! {
        #[test]
        fn identity_map_is_identity(frame in arb_frame(4)) {
            let topo = line_topology(&["a", "b", "c", "d"]);
            let out = map_topology(&frame, &topo, &JointMap::identity(&topo), &topo).unwrap();
            prop_assert_eq!(out, frame);
        }

        #[test]
        fn map_is_linear(frame in arb_frame(4), s in -3.0..3.0f64, w in 0.0..1.0f64) {
            let src = line_topology(&["a", "b", "c", "d"]);
            let mut map = JointMap::identity(&src);
            map.rules[0].sources = vec![(jid("b"), w), (jid("c"), 1.0 - w)];
            map.rules[3].sources = vec![(jid("a"), 0.25), (jid("b"), 0.25), (jid("d"), 0.5)];
            let scaled = SkeletonFrame::new(frame.t, frame.positions.iter().map(|p| p * s).collect());
            let a = map_topology(&frame, &src, &map, &src).unwrap();
            let b = map_topology(&scaled, &src, &map, &src).unwrap();
            for (pa, pb) in a.positions.iter().zip(&b.positions) {
                prop_assert!((pa * s - pb).norm() <= 1e-9);
            }
        }
    }

    /// Independent re-check of topology invariants: transitive closure for
    /// cycles, linear scans for everything else.
    fn brute_force_ok(def: &TopologyDef) -> bool {
        let names: Vec<&str> = def.joints.iter().map(|j| j.as_str()).collect();
        for i in 0..names.len() {
            for j in i + 1..names.len() {
                if names[i] == names[j] {
                    return false;
                }
            }
        }
        let pos = |s: &str| names.iter().position(|n| *n == s);
        for (p, c) in &def.edges {
            if pos(p.as_str()).is_none() || pos(c.as_str()).is_none() {
                return false;
            }
        }
        let a = [
            &def.anchors.left_shoulder,
            &def.anchors.right_shoulder,
            &def.anchors.left_hip,
            &def.anchors.right_hip,
        ];
        for i in 0..4 {
            if pos(a[i].as_str()).is_none() {
                return false;
            }
            for j in i + 1..4 {
                if a[i] == a[j] {
                    return false;
                }
            }
        }
        let n = names.len();
        let mut reach = vec![vec![false; n]; n];
        for (p, c) in &def.edges {
            reach[pos(p.as_str()).unwrap()][pos(c.as_str()).unwrap()] = true;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if reach[i][k] && reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
        (0..n).all(|i| !reach[i][i])
    }

    fn arb_topology() -> impl Strategy<Value = TopologyDef> {
        let pool = ["a", "b", "c", "d", "e", "f", "g"];
        (
            prop::collection::vec(prop::sample::select(pool.to_vec()), 3..8),
            prop::collection::vec(
                (
                    prop::sample::select(pool.to_vec()),
                    prop::sample::select(pool.to_vec()),
                ),
                0..8,
            ),
            prop::array::uniform4(prop::sample::select(pool.to_vec())),
        )
            .prop_map(|(joints, edges, a)| TopologyDef {
                name: "rand".into(),
                joints: joints.into_iter().map(jid).collect(),
                edges: edges.into_iter().map(|(p, c)| (jid(p), jid(c))).collect(),
                anchors: anchors(a[0], a[1], a[2], a[3]),
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]
        #[test]
        fn validation_matches_brute_force(def in arb_topology()) {
            let expected = brute_force_ok(&def);
            prop_assert_eq!(validate_topology(def).is_ok(), expected);
        }
    }
}
