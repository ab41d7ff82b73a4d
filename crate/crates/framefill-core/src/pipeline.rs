//! End-to-end instruction completion and symbolic waypoint planning.
//!
//! The pipeline parses an instruction, detects the missing role, enumerates
//! candidates from the object inventory, ranks them with a scorer, and can
//! emit a waypoint plan for the winning frame. Motion execution is symbolic:
//! plans are data, never hardware commands.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frames::{self, FrameError, Instruction, MissingRole, RoleLexicon, VerbFrame};
use crate::scorers::{self, Scorer, ScorerError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Scorer(#[from] ScorerError),
    #[error("object `{label}` not found in inventory")]
    ObjectNotFound { label: String },
    #[error("no action template registered for verb `{verb}`")]
    NoTemplate { verb: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("malformed inventory: {reason}")]
    MalformedInventory { reason: String },
    #[error("malformed template file at line {line}: {reason}")]
    MalformedTemplate { line: usize, reason: String },
}

/// A detected object: label plus 3D position in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectEntry {
    pub label: String,
    pub position: [f64; 3],
}

/// The objects available to fill a missing role.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjectInventory {
    pub entries: Vec<ObjectEntry>,
}

impl ObjectInventory {
    pub fn from_labels(labels: &[&str]) -> Self {
        ObjectInventory {
            entries: labels
                .iter()
                .map(|l| ObjectEntry {
                    label: l.to_string(),
                    position: [0.0, 0.0, 0.0],
                })
                .collect(),
        }
    }

    /// First entry with the given label.
    pub fn find(&self, label: &str) -> Option<&ObjectEntry> {
        self.entries.iter().find(|e| e.label == label)
    }

    fn validate(&self) -> Result<(), PipelineError> {
        for e in &self.entries {
            if e.label.is_empty() {
                return Err(PipelineError::MalformedInventory {
                    reason: "empty object label".into(),
                });
            }
            if e.position.iter().any(|c| !c.is_finite()) {
                return Err(PipelineError::MalformedInventory {
                    reason: format!("non-finite position for `{}`", e.label),
                });
            }
        }
        Ok(())
    }

    /// Load a JSON array of `{"label": ..., "position": [x, y, z]}`.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path).map_err(|source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let inv: ObjectInventory =
            serde_json::from_str(&text).map_err(|e| PipelineError::MalformedInventory {
                reason: e.to_string(),
            })?;
        inv.validate()?;
        Ok(inv)
    }
}

/// Which slot of the frame anchors the waypoint offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetRole {
    Role1,
    Role2,
}

impl std::str::FromStr for TargetRole {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "role1" | "r1" => Ok(TargetRole::Role1),
            "role2" | "r2" => Ok(TargetRole::Role2),
            other => Err(format!("unknown target role `{other}` (expected role1|role2)")),
        }
    }
}

/// Per-verb waypoint offsets relative to the target object's position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionTemplate {
    pub verb: String,
    pub target_role: TargetRole,
    pub offsets: Vec<[f64; 3]>,
}

/// Verb-indexed template collection.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ActionTemplateSet {
    templates: BTreeMap<String, ActionTemplate>,
}

impl ActionTemplateSet {
    pub fn get(&self, verb: &str) -> Option<&ActionTemplate> {
        self.templates.get(verb)
    }

    pub fn insert(&mut self, template: ActionTemplate) {
        self.templates.insert(template.verb.clone(), template);
    }

    /// Parse the TSV layout `verb<TAB>target_role<TAB>dx,dy,dz;dx,dy,dz;...`.
    pub fn from_tsv(text: &str) -> Result<Self, PipelineError> {
        let mut set = ActionTemplateSet::default();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |reason: String| PipelineError::MalformedTemplate {
                line: i + 1,
                reason,
            };
            let fields: Vec<&str> = line.split('\t').collect();
            let [verb, role, offsets] = fields.as_slice() else {
                return Err(bad("expected 3 tab-separated fields".into()));
            };
            let target_role = role.parse().map_err(bad)?;
            let mut parsed = Vec::new();
            for triple in offsets.split(';').filter(|s| !s.is_empty()) {
                let coords: Vec<f64> = triple
                    .split(',')
                    .map(|c| c.trim().parse())
                    .collect::<Result<_, _>>()
                    .map_err(|e| bad(format!("bad offset `{triple}`: {e}")))?;
                let [x, y, z] = coords.as_slice() else {
                    return Err(bad(format!("offset `{triple}` must have 3 coordinates")));
                };
                parsed.push([*x, *y, *z]);
            }
            if parsed.is_empty() {
                return Err(bad(format!("verb `{verb}` has no waypoints")));
            }
            set.insert(ActionTemplate {
                verb: verb.to_string(),
                target_role,
                offsets: parsed,
            });
        }
        Ok(set)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path).map_err(|source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_tsv(&text)
    }
}

/// A complete frame with its absolute end-effector waypoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaypointPlan {
    pub frame: VerbFrame,
    pub waypoints: Vec<[f64; 3]>,
}

/// Translate a possibly incomplete instruction into a complete frame.
///
/// A frame that parses complete is returned unchanged. A frame with one
/// missing role is completed by ranking inventory candidates with the
/// scorer. When the instruction yields several frames, the first is used.
pub fn complete(
    instr: &Instruction,
    inventory: &ObjectInventory,
    scorer: &dyn Scorer,
    lex: &RoleLexicon,
) -> Result<VerbFrame, PipelineError> {
    let parsed = frames::parse(instr, lex)?;
    let frame = parsed.into_iter().next().expect("parse returns >= 1 frame");
    match frame.missing_role()? {
        MissingRole::None => Ok(frame),
        MissingRole::Role1 | MissingRole::Role2 => {
            let cands = frames::candidates(&frame, inventory)?;
            let winner = scorers::rank(scorer, &cands, 0)?;
            Ok(cands[winner].clone())
        }
    }
}

/// Instantiate the verb's waypoint template against the target object's
/// position: each absolute waypoint is position + offset, in order.
pub fn plan(
    frame: &VerbFrame,
    inventory: &ObjectInventory,
    templates: &ActionTemplateSet,
) -> Result<WaypointPlan, PipelineError> {
    let (a1, a2) = frame.complete_args()?;
    let template = templates.get(&frame.v).ok_or_else(|| PipelineError::NoTemplate {
        verb: frame.v.clone(),
    })?;
    let target_label = match template.target_role {
        TargetRole::Role1 => a1,
        TargetRole::Role2 => a2,
    };
    let object = inventory
        .find(target_label)
        .ok_or_else(|| PipelineError::ObjectNotFound {
            label: target_label.to_string(),
        })?;
    let waypoints = template
        .offsets
        .iter()
        .map(|off| {
            [
                object.position[0] + off[0],
                object.position[1] + off[1],
                object.position[2] + off[2],
            ]
        })
        .collect();
    Ok(WaypointPlan {
        frame: frame.clone(),
        waypoints,
    })
}
