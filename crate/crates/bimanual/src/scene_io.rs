//! Scene, config, and report persistence.
//!
//! Scenes, configs and reports are JSON (human-diffable, numerically
//! lossless for finite doubles); only SDF grid dumps are binary. All
//! writes go through a temp-file-and-rename so interrupted runs never
//! leave torn files.
//!
//! Scene documents are versioned; loading validates the version, every
//! parameter vector length (10 shape / 3 orientation / 45 finger values
//! per hand, 3 translation), finiteness, and the wrist-difference
//! invariant of the targets.

use nalgebra::{Point3, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

use crate::error::Error;
use crate::harness::{PerturbationScales, SceneSpec};
use crate::kinematics::{TwoHandMesh, TOTAL_KEYPOINTS};
use crate::objective::JointTargets;
use crate::params::{FingerPose, HandOrientation, HandShape, TwoHandParams, FINGER_JOINTS, SHAPE_COEFFS};
use crate::template::TemplateConfig;
use crate::Result;

/// Supported scene document version.
pub const SCENE_VERSION: u32 = 1;

// ───────────────────────── document schema ─────────────────────────

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ParamsDoc {
    pub left_shape: Vec<f64>,
    pub right_shape: Vec<f64>,
    pub left_orient: [f64; 3],
    pub right_orient: [f64; 3],
    pub left_fingers: Vec<[f64; 3]>,
    pub right_fingers: Vec<[f64; 3]>,
    pub translation: [f64; 3],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TargetsDoc {
    pub joints_3d: Vec<[f64; 3]>,
    pub joints_2d: Vec<[f64; 2]>,
    pub visibility: Vec<bool>,
    pub translation_target: [f64; 3],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProvenanceDoc {
    pub seed: u64,
    pub preset: String,
    pub perturbation: PerturbationScales,
    pub joint_noise_std_mm: f64,
}

/// On-disk scene document.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SceneDoc {
    pub version: u32,
    pub template: TemplateConfig,
    #[serde(default)]
    pub gt_params: Option<ParamsDoc>,
    pub initial_params: ParamsDoc,
    pub targets: TargetsDoc,
    #[serde(default)]
    pub provenance: Option<ProvenanceDoc>,
}

/// A loaded and validated scene.
#[derive(Clone, Debug)]
pub struct LoadedScene {
    pub template: TemplateConfig,
    pub gt_params: Option<TwoHandParams>,
    pub initial_params: TwoHandParams,
    pub targets: JointTargets,
    pub provenance: Option<ProvenanceDoc>,
}

// ─────────────────────── conversions + checks ───────────────────────

fn vec3(v: &Vector3<f64>) -> [f64; 3] {
    [v.x, v.y, v.z]
}

impl ParamsDoc {
    pub fn from_params(p: &TwoHandParams) -> Self {
        let fingers = |f: &FingerPose| -> Vec<[f64; 3]> {
            f.joint_rotations.iter().map(vec3).collect()
        };
        Self {
            left_shape: p.left_shape.coefficients.to_vec(),
            right_shape: p.right_shape.coefficients.to_vec(),
            left_orient: vec3(&p.left_orient.axis_angle),
            right_orient: vec3(&p.right_orient.axis_angle),
            left_fingers: fingers(&p.left_fingers),
            right_fingers: fingers(&p.right_fingers),
            translation: vec3(&p.translation),
        }
    }

    pub fn to_params(&self, field: &'static str) -> Result<TwoHandParams> {
        let shape = |v: &Vec<f64>| -> Result<HandShape> {
            if v.len() != SHAPE_COEFFS {
                return Err(Error::DimensionMismatch {
                    field,
                    expected: SHAPE_COEFFS,
                    found: v.len(),
                });
            }
            let mut c = [0.0; SHAPE_COEFFS];
            c.copy_from_slice(v);
            HandShape::new(c)
        };
        let fingers = |v: &Vec<[f64; 3]>| -> Result<FingerPose> {
            if v.len() != FINGER_JOINTS {
                return Err(Error::DimensionMismatch {
                    field,
                    expected: FINGER_JOINTS,
                    found: v.len(),
                });
            }
            let mut r = [Vector3::zeros(); FINGER_JOINTS];
            for (i, a) in v.iter().enumerate() {
                r[i] = Vector3::new(a[0], a[1], a[2]);
            }
            FingerPose::new(r)
        };
        let p = TwoHandParams {
            left_shape: shape(&self.left_shape)?,
            right_shape: shape(&self.right_shape)?,
            left_orient: HandOrientation::new(Vector3::from(self.left_orient))?,
            right_orient: HandOrientation::new(Vector3::from(self.right_orient))?,
            left_fingers: fingers(&self.left_fingers)?,
            right_fingers: fingers(&self.right_fingers)?,
            translation: Vector3::from(self.translation),
        };
        p.validate()?;
        Ok(p)
    }
}

impl TargetsDoc {
    pub fn from_targets(t: &JointTargets) -> Self {
        Self {
            joints_3d: t.joints_3d.iter().map(|p| [p.x, p.y, p.z]).collect(),
            joints_2d: t.joints_2d.iter().map(|p| [p.x, p.y]).collect(),
            visibility: t.visibility.to_vec(),
            translation_target: vec3(&t.translation_target),
        }
    }

    pub fn to_targets(&self) -> Result<JointTargets> {
        let check = |len: usize, field: &'static str| -> Result<()> {
            if len != TOTAL_KEYPOINTS {
                return Err(Error::DimensionMismatch {
                    field,
                    expected: TOTAL_KEYPOINTS,
                    found: len,
                });
            }
            Ok(())
        };
        check(self.joints_3d.len(), "targets.joints_3d")?;
        check(self.joints_2d.len(), "targets.joints_2d")?;
        check(self.visibility.len(), "targets.visibility")?;
        let mut t = JointTargets {
            joints_3d: [Point3::origin(); TOTAL_KEYPOINTS],
            joints_2d: [Vector2::zeros(); TOTAL_KEYPOINTS],
            visibility: [true; TOTAL_KEYPOINTS],
            translation_target: Vector3::from(self.translation_target),
        };
        for (k, a) in self.joints_3d.iter().enumerate() {
            t.joints_3d[k] = Point3::new(a[0], a[1], a[2]);
        }
        for (k, a) in self.joints_2d.iter().enumerate() {
            t.joints_2d[k] = Vector2::new(a[0], a[1]);
        }
        for (k, v) in self.visibility.iter().enumerate() {
            t.visibility[k] = *v;
        }
        t.validate()?;
        Ok(t)
    }
}

impl ProvenanceDoc {
    pub fn from_spec(spec: &SceneSpec) -> Self {
        Self {
            seed: spec.seed,
            preset: spec.preset.name().to_string(),
            perturbation: spec.perturbation,
            joint_noise_std_mm: spec.joint_noise_std_mm,
        }
    }
}

impl SceneDoc {
    pub fn from_scene(scene: &crate::harness::Scene, template: &TemplateConfig) -> Self {
        Self {
            version: SCENE_VERSION,
            template: *template,
            gt_params: Some(ParamsDoc::from_params(&scene.gt_params)),
            initial_params: ParamsDoc::from_params(&scene.initial_params),
            targets: TargetsDoc::from_targets(&scene.targets),
            provenance: Some(ProvenanceDoc::from_spec(&scene.spec)),
        }
    }

    pub fn into_loaded(self) -> Result<LoadedScene> {
        if self.version != SCENE_VERSION {
            return Err(Error::VersionMismatch {
                found: self.version,
                supported: SCENE_VERSION,
            });
        }
        self.template.validate()?;
        Ok(LoadedScene {
            template: self.template,
            gt_params: match &self.gt_params {
                Some(p) => Some(p.to_params("gt_params")?),
                None => None,
            },
            initial_params: self.initial_params.to_params("initial_params")?,
            targets: self.targets.to_targets()?,
            provenance: self.provenance,
        })
    }
}

// ───────────────────────── file operations ─────────────────────────

/// Write bytes atomically: temp file in the target directory, then
/// rename over the destination.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let dir = match dir {
        Some(d) => d.to_path_buf(),
        None => std::path::PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Serialize any report-like structure to pretty JSON atomically.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)
        .map_err(|e| Error::Malformed(e.to_string()))?;
    bytes.push(b'\n');
    atomic_write(path, &bytes)
}

pub fn save_scene_doc(path: &Path, doc: &SceneDoc) -> Result<()> {
    write_json(path, doc)
}

pub fn save_scene(
    path: &Path,
    scene: &crate::harness::Scene,
    template: &TemplateConfig,
) -> Result<()> {
    save_scene_doc(path, &SceneDoc::from_scene(scene, template))
}

pub fn load_scene(path: &Path) -> Result<LoadedScene> {
    let text = std::fs::read_to_string(path)?;
    let doc: SceneDoc =
        serde_json::from_str(&text).map_err(|e| Error::Malformed(e.to_string()))?;
    doc.into_loaded()
}

/// Serialize a template to a self-describing JSON file.
pub fn save_template(path: &Path, template: &crate::template::HandTemplate) -> Result<()> {
    write_json(path, template)
}

pub fn load_template(path: &Path) -> Result<crate::template::HandTemplate> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Malformed(e.to_string()))
}

/// Load a refinement config document.
pub fn load_refine_config(path: &Path) -> Result<crate::refine::RefineConfig> {
    let text = std::fs::read_to_string(path)?;
    let config: crate::refine::RefineConfig =
        serde_json::from_str(&text).map_err(|e| Error::Malformed(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

/// Load a corpus spec document.
pub fn load_corpus_spec(path: &Path) -> Result<crate::harness::CorpusSpec> {
    let text = std::fs::read_to_string(path)?;
    let spec: crate::harness::CorpusSpec =
        serde_json::from_str(&text).map_err(|e| Error::Malformed(e.to_string()))?;
    spec.validate()?;
    Ok(spec)
}

// ───────────────────────── OBJ export ─────────────────────────

/// OBJ export options: group names for the two hands.
#[derive(Clone, Debug)]
pub struct ObjExportOptions {
    pub left_group: String,
    pub right_group: String,
}

impl Default for ObjExportOptions {
    fn default() -> Self {
        Self {
            left_group: "left".into(),
            right_group: "right".into(),
        }
    }
}

/// Export a posed pair as OBJ: two named groups, meters, deterministic
/// ordering (left vertices then right, faces likewise). Non-finite
/// vertices are refused.
pub fn export_obj(mesh: &TwoHandMesh, path: &Path, options: &ObjExportOptions) -> Result<()> {
    mesh.validate()?;
    let mut out = String::with_capacity((mesh.left_vertices.len() + mesh.right_vertices.len()) * 40);
    out.push_str("# two-hand mesh, units: meters\n");
    out.push_str(&format!("g {}\n", options.left_group));
    for v in &mesh.left_vertices {
        out.push_str(&format!("v {} {} {}\n", v.x, v.y, v.z));
    }
    for f in &mesh.faces {
        out.push_str(&format!("f {} {} {}\n", f[0] + 1, f[1] + 1, f[2] + 1));
    }
    let offset = mesh.left_vertices.len() as u32;
    out.push_str(&format!("g {}\n", options.right_group));
    for v in &mesh.right_vertices {
        out.push_str(&format!("v {} {} {}\n", v.x, v.y, v.z));
    }
    for f in &mesh.faces {
        out.push_str(&format!(
            "f {} {} {}\n",
            f[0] + 1 + offset,
            f[1] + 1 + offset,
            f[2] + 1 + offset
        ));
    }
    atomic_write(path, out.as_bytes())
}

/// Minimal OBJ reader for round-trip checks: returns vertex and face
/// counts.
pub fn obj_counts(path: &Path) -> Result<(usize, usize)> {
    let text = std::fs::read_to_string(path)?;
    let mut verts = 0;
    let mut faces = 0;
    for line in text.lines() {
        if line.starts_with("v ") {
            verts += 1;
        } else if line.starts_with("f ") {
            faces += 1;
        }
    }
    Ok((verts, faces))
}
