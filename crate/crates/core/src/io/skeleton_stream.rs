use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{fmt_sig9, read_file, IoError};
use crate::skeleton::{MotionSequence, RecordingMeta, SkeletonFrame, SkeletonTopology};

/// Optional first line of a skeleton stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamHeader {
    pub topology: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<RecordingMeta>,
}

fn is_header(v: &Value) -> bool {
    v.get("topology").is_some() && v.get("t").is_none()
}

/// Reads the header line without parsing the frames.
pub fn stream_header(text: &str) -> Result<Option<StreamHeader>, IoError> {
    let Some(first) = text.lines().find(|l| !l.trim().is_empty()) else {
        return Ok(None);
    };
    let line = text.lines().position(|l| l == first).unwrap_or(0) + 1;
    let v: Value = serde_json::from_str(first).map_err(|e| IoError::parse(line, e.to_string()))?;
    if !is_header(&v) {
        return Ok(None);
    }
    serde_json::from_value(v)
        .map(Some)
        .map_err(|e| IoError::parse(line, format!("bad header: {e}")))
}

fn parse_point(line: usize, joint: &str, v: &Value) -> Result<Vector3<f64>, IoError> {
    let bad = || {
        IoError::parse(
            line,
            format!("joint `{joint}` needs [x, y, z] finite numbers"),
        )
    };
    let arr = v.as_array().filter(|a| a.len() == 3).ok_or_else(bad)?;
    let mut p = Vector3::zeros();
    for (c, x) in p.iter_mut().zip(arr) {
        *c = x.as_f64().filter(|f| f.is_finite()).ok_or_else(bad)?;
    }
    Ok(p)
}

fn parse_frame(
    line: usize,
    v: Value,
    topology: &SkeletonTopology,
) -> Result<SkeletonFrame, IoError> {
    let Value::Object(mut obj) = v else {
        return Err(IoError::parse(line, "expected a JSON object"));
    };
    let t = obj
        .remove("t")
        .ok_or_else(|| IoError::parse(line, "missing field `t`"))?
        .as_f64()
        .filter(|t| t.is_finite())
        .ok_or_else(|| IoError::parse(line, "`t` must be a finite number"))?;
    let Some(Value::Object(joints)) = obj.remove("joints") else {
        return Err(IoError::parse(line, "missing object field `joints`"));
    };
    if let Some(extra) = obj.keys().next() {
        return Err(IoError::parse(line, format!("unknown field `{extra}`")));
    }
    let mut slots: Vec<Option<Vector3<f64>>> = vec![None; topology.len()];
    for (name, value) in &joints {
        let i = topology
            .index_of(name)
            .ok_or_else(|| IoError::parse(line, format!("unknown joint `{name}`")))?;
        slots[i] = Some(parse_point(line, name, value)?);
    }
    let positions = slots
        .into_iter()
        .zip(topology.joints())
        .map(|(p, j)| {
            p.ok_or_else(|| IoError::MissingJoint {
                line,
                joint: j.to_string(),
            })
        })
        .collect::<Result<_, _>>()?;
    Ok(SkeletonFrame::new(t, positions))
}

/// Parses a skeleton stream against `topology`.
///
/// A header naming another topology is rejected. Without a header the
/// recording metadata is the default.
pub fn parse_skeleton_stream(
    text: &str,
    topology: Arc<SkeletonTopology>,
) -> Result<MotionSequence, IoError> {
    let mut meta = RecordingMeta::default();
    let mut frames: Vec<SkeletonFrame> = Vec::new();
    let mut first = true;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let v: Value =
            serde_json::from_str(raw).map_err(|e| IoError::parse(line, e.to_string()))?;
        if std::mem::take(&mut first) && is_header(&v) {
            let h: StreamHeader = serde_json::from_value(v)
                .map_err(|e| IoError::parse(line, format!("bad header: {e}")))?;
            if h.topology != topology.name() {
                return Err(IoError::parse(
                    line,
                    format!("stream is `{}`, expected `{}`", h.topology, topology.name()),
                ));
            }
            if let Some(m) = h.meta {
                m.validate()
                    .map_err(|e| IoError::parse(line, e.to_string()))?;
                meta = m;
            }
            continue;
        }
        let frame = parse_frame(line, v, &topology)?;
        if let Some(prev) = frames.last() {
            if frame.t <= prev.t {
                return Err(IoError::TimestampOrder {
                    line,
                    prev: prev.t,
                    next: frame.t,
                });
            }
        }
        frames.push(frame);
    }
    if frames.is_empty() {
        return Err(IoError::EmptyFile);
    }
    Ok(MotionSequence::new(topology, frames, meta)?)
}

pub fn read_skeleton_stream(
    path: &Path,
    topology: Arc<SkeletonTopology>,
) -> Result<MotionSequence, IoError> {
    parse_skeleton_stream(&read_file(path)?, topology)
}

/// Header line plus one line per frame, joints in topology order.
pub fn write_skeleton_stream(seq: &MotionSequence) -> String {
    let header = StreamHeader {
        topology: seq.topology().name().to_string(),
        meta: Some(seq.meta().clone()),
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    let names = seq.topology().joints();
    for frame in seq.frames() {
        let _ = write!(out, "{{\"t\":{},\"joints\":{{", fmt_sig9(frame.t));
        for (k, (name, p)) in names.iter().zip(&frame.positions).enumerate() {
            if k > 0 {
                out.push(',');
            }
            let name = serde_json::to_string(name.as_str()).expect("string serializes");
            let _ = write!(
                out,
                "{name}:[{},{},{}]",
                fmt_sig9(p.x),
                fmt_sig9(p.y),
                fmt_sig9(p.z)
            );
        }
        out.push_str("}}\n");
    }
    out
}
