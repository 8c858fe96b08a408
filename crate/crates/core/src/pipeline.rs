//! End-to-end augmentation: deterministic randomness, enlargement-factor
//! bookkeeping, parallel execution, provenance, and output layout.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{AugmentConfig, ConfigError};
use crate::extract::{check_containment, extract_line};
use crate::geometry::{project_quad, sample_scene, GeometryError};
use crate::manifest::{
    write_manifest, AugmentedManifestEntry, Difficulty, ManifestError, ManifestRecord, Origin,
    TextLineSample,
};
use crate::raster::{Raster, RasterError};
use crate::render::{render_frame, FrameContext, SceneProvenance};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("I/O error at {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error("unknown sample id '{0}'")]
    UnknownSample(String),
}

/// Counter-based random stream keyed by hash(master_seed, sample_id,
/// replica). Distinct keys give independent streams; the same key always
/// yields the identical stream.
pub fn derive_rng(master_seed: u64, sample_id: &str, replica: u64) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(master_seed.to_le_bytes());
    hasher.update((sample_id.len() as u64).to_le_bytes());
    hasher.update(sample_id.as_bytes());
    hasher.update(replica.to_le_bytes());
    let digest = hasher.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(seed)
}

// retry attempts occupy the high half of the replica key so they can never
// collide with genuine replica indices
fn replica_key(replica: u32, attempt: u32) -> u64 {
    replica as u64 | ((attempt as u64) << 32)
}

#[derive(Debug, Clone)]
pub struct RejectionLog {
    pub sample_id: String,
    pub replica: u32,
    pub attempt: u32,
    pub reason: String,
}

#[derive(Debug, Default)]
pub struct AugmentSummary {
    pub master_seed: u64,
    pub originals: usize,
    pub augmented: usize,
    pub passed_through: usize,
    pub frames_rendered: usize,
    pub rejections: Vec<RejectionLog>,
    pub per_class: HashMap<Difficulty, usize>,
}

enum ReplicaResult {
    Augmented {
        line: Raster,
        provenance: SceneProvenance,
        frames_rendered: usize,
    },
    PassedThrough {
        frames_rendered: usize,
    },
}

struct ReplicaOutcome {
    result: ReplicaResult,
    rejections: Vec<RejectionLog>,
}

fn process_replica(
    sample: &TextLineSample,
    replica: u32,
    config: &AugmentConfig,
) -> Result<ReplicaOutcome, GeometryError> {
    let factor = config.enlargement_factor;
    let frames = config.trajectory.frames_per_scene;
    // spread replicas over the trajectory
    let frame_index = if factor > 1 {
        ((replica - 1) as u64 * frames as u64 / (factor - 1) as u64) as u32
    } else {
        0
    };
    let mut rejections = Vec::new();
    let mut frames_rendered = 0usize;
    for attempt in 0..config.max_attempts {
        let mut reject = |reason: String| {
            log::warn!(
                "sample {} replica {replica} attempt {attempt}: rejected ({reason})",
                sample.id
            );
            rejections.push(RejectionLog {
                sample_id: sample.id.clone(),
                replica,
                attempt,
                reason,
            });
        };
        let mut rng = derive_rng(config.seed, &sample.id, replica_key(replica, attempt));
        let scene = sample_scene(config, &mut rng)?;
        let (h, plane) = match scene.frame_homography(
            frame_index,
            sample.raster.width(),
            sample.raster.height(),
        ) {
            Ok(pair) => pair,
            Err(GeometryError::BehindCamera) => {
                reject("behind-camera".into());
                continue;
            }
            Err(e) => return Err(e),
        };
        let quad = match project_quad(&h, sample.raster.width(), sample.raster.height()) {
            Ok(q) => q,
            Err(GeometryError::BehindCamera) => {
                reject("behind-camera".into());
                continue;
            }
            Err(e) => return Err(e),
        };
        if !check_containment(&quad, config.render.width, config.render.height) {
            reject("out-of-frame".into());
            continue;
        }
        let provenance = SceneProvenance {
            source_id: sample.id.clone(),
            replica,
            frame: frame_index,
            camera: scene.camera.name.clone(),
            radius_m: scene.radius,
            psi_deg: scene.psi,
            seed: config.seed,
        };
        let frame = render_frame(
            &sample.raster,
            &FrameContext {
                homography: &h,
                plane: &plane,
                lights: &config.lights,
                ambient: config.ambient,
                render_width: config.render.width,
                render_height: config.render.height,
            },
            provenance.clone(),
        )?;
        frames_rendered += 1;
        match extract_line(&frame, sample.height) {
            Ok(line) => {
                return Ok(ReplicaOutcome {
                    result: ReplicaResult::Augmented {
                        line,
                        provenance,
                        frames_rendered,
                    },
                    rejections,
                })
            }
            Err(rejection) => {
                reject(rejection.to_string());
            }
        }
    }
    log::warn!(
        "sample {} replica {replica}: all {} attempts rejected, passing through unaugmented",
        sample.id,
        config.max_attempts
    );
    Ok(ReplicaOutcome {
        result: ReplicaResult::PassedThrough { frames_rendered },
        rejections,
    })
}

fn sanitize_id(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
        .collect()
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn copy_original(sample: &TextLineSample, base_dir: &Path, out_dir: &Path) -> Result<(), PipelineError> {
    let src = base_dir.join(&sample.image_path);
    let dst = out_dir.join(&sample.image_path);
    if let Some(parent) = dst.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    fs::copy(&src, &dst).map_err(io_err(&dst))?;
    Ok(())
}

/// Runs the full augmentation over `samples`, writing images and
/// `manifest.tsv` under `out_dir`. Output is a pure function of
/// (samples, config): the worker count never changes any byte.
pub fn augment_dataset(
    samples: &[TextLineSample],
    base_dir: &Path,
    config: &AugmentConfig,
    out_dir: &Path,
) -> Result<AugmentSummary, PipelineError> {
    config.validate()?;
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;

    let mut order: Vec<&TextLineSample> = samples.iter().collect();
    order.sort_by(|a, b| a.id.cmp(&b.id));

    let factor = config.enlargement_factor;
    let work: Vec<(&TextLineSample, u32)> = order
        .iter()
        .flat_map(|s| (1..factor).map(move |r| (*s, r)))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .expect("thread pool");
    let outcomes: Vec<Result<ReplicaOutcome, GeometryError>> = pool.install(|| {
        work.par_iter()
            .map(|(sample, replica)| process_replica(sample, *replica, config))
            .collect()
    });

    let mut summary = AugmentSummary {
        master_seed: config.seed,
        originals: order.len(),
        ..Default::default()
    };
    let mut entries: Vec<AugmentedManifestEntry> = Vec::new();
    let aug_dir = out_dir.join("aug");
    if factor > 1 {
        fs::create_dir_all(&aug_dir).map_err(io_err(&aug_dir))?;
    }

    let mut outcome_iter = outcomes.into_iter();
    for sample in &order {
        copy_original(sample, base_dir, out_dir)?;
        *summary.per_class.entry(sample.difficulty).or_default() += 1;
        entries.push(AugmentedManifestEntry {
            image_path: sample.image_path.clone(),
            difficulty: sample.difficulty,
            transcript: sample.transcript.clone(),
            origin: Origin::Original,
            provenance: None,
        });
        for replica in 1..factor {
            let outcome = outcome_iter.next().expect("outcome per work item")?;
            summary.rejections.extend(outcome.rejections);
            match outcome.result {
                ReplicaResult::Augmented {
                    line,
                    provenance,
                    frames_rendered,
                } => {
                    summary.frames_rendered += frames_rendered;
                    let rel = format!("aug/{}_r{replica}.png", sanitize_id(&sample.id));
                    let path = out_dir.join(&rel);
                    line.save_png(&path)?;
                    summary.augmented += 1;
                    entries.push(AugmentedManifestEntry {
                        image_path: rel,
                        difficulty: sample.difficulty,
                        transcript: sample.transcript.clone(),
                        origin: Origin::Augmented,
                        provenance: Some(provenance),
                    });
                }
                ReplicaResult::PassedThrough { frames_rendered } => {
                    summary.frames_rendered += frames_rendered;
                    summary.passed_through += 1;
                    entries.push(AugmentedManifestEntry {
                        image_path: sample.image_path.clone(),
                        difficulty: sample.difficulty,
                        transcript: sample.transcript.clone(),
                        origin: Origin::Original,
                        provenance: None,
                    });
                }
            }
        }
    }
    write_manifest(&entries, &out_dir.join("manifest.tsv"))?;
    Ok(summary)
}

/// Stratified-by-difficulty subset selection under the master seed; the
/// class proportions of the input are preserved. Returns records in input
/// order.
pub fn take_fraction(
    records: &[ManifestRecord],
    fraction: f64,
    seed: u64,
) -> Vec<ManifestRecord> {
    let fraction = fraction.clamp(0.0, 1.0);
    let mut selected: std::collections::HashSet<&str> = std::collections::HashSet::new();
    for difficulty in Difficulty::ALL {
        let mut members: Vec<&ManifestRecord> = records
            .iter()
            .filter(|r| r.difficulty == difficulty)
            .collect();
        members.sort_by(|a, b| a.image_path.cmp(&b.image_path));
        let take = (members.len() as f64 * fraction).round() as usize;
        let mut rng = derive_rng(seed, difficulty.as_str(), 0);
        // Fisher-Yates with the class's own stream
        use rand::Rng;
        for i in (1..members.len()).rev() {
            let j = rng.random_range(0..=i);
            members.swap(i, j);
        }
        for m in members.into_iter().take(take) {
            selected.insert(m.image_path.as_str());
        }
    }
    records
        .iter()
        .filter(|r| selected.contains(r.image_path.as_str()))
        .cloned()
        .collect()
}

/// Recursive content hash of a directory, for determinism checks.
pub fn hash_dir(dir: &Path) -> Result<String, PipelineError> {
    fn walk(dir: &Path, base: &Path, hasher: &mut Sha256) -> Result<(), PipelineError> {
        let mut paths: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(io_err(dir))?
            .map(|e| e.map(|e| e.path()))
            .collect::<Result<_, _>>()
            .map_err(io_err(dir))?;
        paths.sort();
        for path in paths {
            if path.is_dir() {
                walk(&path, base, hasher)?;
            } else {
                let rel = path.strip_prefix(base).unwrap();
                hasher.update(rel.to_string_lossy().as_bytes());
                hasher.update(fs::read(&path).map_err(io_err(&path))?);
            }
        }
        Ok(())
    }
    let mut hasher = Sha256::new();
    walk(dir, dir, &mut hasher)?;
    Ok(format!("{:x}", hasher.finalize()))
}
