//! TSV manifest I/O for Brno-style text-line datasets: one
//! `image_path<TAB>difficulty<TAB>transcript` record per line, extended with
//! provenance columns on output.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::{Raster, RasterError};
use crate::render::SceneProvenance;

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("cannot read manifest {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("cannot write manifest {path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    Easy,
    Medium,
    Hard,
    Unknown,
}

impl Difficulty {
    pub const ALL: [Difficulty; 4] = [
        Difficulty::Easy,
        Difficulty::Medium,
        Difficulty::Hard,
        Difficulty::Unknown,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Difficulty::Easy => "easy",
            Difficulty::Medium => "medium",
            Difficulty::Hard => "hard",
            Difficulty::Unknown => "unknown",
        }
    }
}

impl fmt::Display for Difficulty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Difficulty {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "easy" => Ok(Difficulty::Easy),
            "medium" => Ok(Difficulty::Medium),
            "hard" => Ok(Difficulty::Hard),
            "unknown" => Ok(Difficulty::Unknown),
            other => Err(format!("unknown difficulty '{other}'")),
        }
    }
}

/// One parsed manifest record, before any image is decoded. The id is the
/// image path string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRecord {
    pub image_path: String,
    pub difficulty: Difficulty,
    pub transcript: String,
}

impl ManifestRecord {
    pub fn id(&self) -> &str {
        &self.image_path
    }
}

/// Parses `image_path<TAB>difficulty<TAB>transcript` records; extra
/// (provenance) columns from a previous augmentation pass are ignored.
pub fn parse_manifest(path: &Path) -> Result<Vec<ManifestRecord>, ManifestError> {
    let text = fs::read_to_string(path).map_err(|source| ManifestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 3 {
            return Err(ManifestError::Parse {
                path: path.display().to_string(),
                line: i + 1,
                message: format!("expected at least 3 tab-separated fields, got {}", fields.len()),
            });
        }
        let difficulty = fields[1].parse().map_err(|e| ManifestError::Parse {
            path: path.display().to_string(),
            line: i + 1,
            message: e,
        })?;
        records.push(ManifestRecord {
            image_path: fields[0].to_string(),
            difficulty,
            transcript: fields[2].to_string(),
        });
    }
    if records.is_empty() {
        log::warn!("manifest {} is empty", path.display());
    }
    Ok(records)
}

/// One labelled text-line image, the unit of augmentation.
#[derive(Debug, Clone)]
pub struct TextLineSample {
    pub id: String,
    pub image_path: String,
    pub transcript: String,
    pub difficulty: Difficulty,
    pub height: u32,
    pub raster: Raster,
}

/// Records that failed to decode; collected rather than fatal unless the
/// caller runs strict.
#[derive(Debug)]
pub struct SampleLoadError {
    pub id: String,
    pub error: RasterError,
}

pub struct LoadedSamples {
    pub samples: Vec<TextLineSample>,
    pub failed: Vec<SampleLoadError>,
}

/// Decodes the image behind each record. Image paths are resolved relative
/// to `base_dir`.
pub fn load_samples(records: &[ManifestRecord], base_dir: &Path) -> LoadedSamples {
    let mut samples = Vec::with_capacity(records.len());
    let mut failed = Vec::new();
    for rec in records {
        match Raster::load(&base_dir.join(&rec.image_path)) {
            Ok(raster) => samples.push(TextLineSample {
                id: rec.image_path.clone(),
                image_path: rec.image_path.clone(),
                transcript: rec.transcript.clone(),
                difficulty: rec.difficulty,
                height: raster.height(),
                raster,
            }),
            Err(error) => {
                log::warn!("skipping sample {}: {error}", rec.image_path);
                failed.push(SampleLoadError {
                    id: rec.image_path.clone(),
                    error,
                });
            }
        }
    }
    LoadedSamples { samples, failed }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Original,
    Augmented,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Origin::Original => "original",
            Origin::Augmented => "augmented",
        })
    }
}

/// Output manifest record: the base columns plus origin and provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedManifestEntry {
    pub image_path: String,
    pub difficulty: Difficulty,
    pub transcript: String,
    pub origin: Origin,
    pub provenance: Option<SceneProvenance>,
}

impl AugmentedManifestEntry {
    pub fn id(&self) -> &str {
        &self.image_path
    }
}

fn entry_line(entry: &AugmentedManifestEntry) -> String {
    let path = entry.image_path.replace('\\', "/");
    match &entry.provenance {
        Some(p) => format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            path,
            entry.difficulty,
            entry.transcript,
            entry.origin,
            p.source_id,
            p.replica,
            p.frame,
            p.camera,
            p.radius_m,
            p.psi_deg
        ),
        None => format!(
            "{}\t{}\t{}\t{}\t-\t-\t-\t-\t-\t-",
            path, entry.difficulty, entry.transcript, entry.origin
        ),
    }
}

/// Writes the extended manifest atomically (temp file + rename).
pub fn write_manifest(entries: &[AugmentedManifestEntry], path: &Path) -> Result<(), ManifestError> {
    let wrap = |source: std::io::Error| ManifestError::Write {
        path: path.display().to_string(),
        source,
    };
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp).map_err(wrap)?;
        for entry in entries {
            writeln!(f, "{}", entry_line(entry)).map_err(wrap)?;
        }
        f.sync_all().map_err(wrap)?;
    }
    fs::rename(&tmp, path).map_err(wrap)
}

/// Reads back an extended manifest written by [`write_manifest`].
pub fn read_augmented_manifest(path: &Path) -> Result<Vec<AugmentedManifestEntry>, ManifestError> {
    let text = fs::read_to_string(path).map_err(|source| ManifestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let parse_err = |line: usize, message: String| ManifestError::Parse {
        path: path.display().to_string(),
        line,
        message,
    };
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 10 {
            return Err(parse_err(i + 1, format!("expected 10 fields, got {}", f.len())));
        }
        let difficulty = f[1].parse().map_err(|e| parse_err(i + 1, e))?;
        let origin = match f[3] {
            "original" => Origin::Original,
            "augmented" => Origin::Augmented,
            other => return Err(parse_err(i + 1, format!("unknown origin '{other}'"))),
        };
        let provenance = if f[4] == "-" {
            None
        } else {
            let num = |s: &str, what: &str| {
                s.parse::<f64>()
                    .map_err(|_| parse_err(i + 1, format!("bad {what} '{s}'")))
            };
            Some(SceneProvenance {
                source_id: f[4].to_string(),
                replica: f[5]
                    .parse()
                    .map_err(|_| parse_err(i + 1, format!("bad replica '{}'", f[5])))?,
                frame: f[6]
                    .parse()
                    .map_err(|_| parse_err(i + 1, format!("bad frame '{}'", f[6])))?,
                camera: f[7].to_string(),
                radius_m: num(f[8], "radius_m")?,
                psi_deg: num(f[9], "psi_deg")?,
                seed: 0,
            })
        };
        entries.push(AugmentedManifestEntry {
            image_path: f[0].to_string(),
            difficulty,
            transcript: f[2].to_string(),
            origin,
            provenance,
        });
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn parse_basic_record() {
        let f = write_tmp("lines/a1.png\thard\tThe quick brown fox\n");
        let records = parse_manifest(f.path()).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].difficulty, Difficulty::Hard);
        assert_eq!(records[0].transcript, "The quick brown fox");
    }

    #[test]
    fn parse_preserves_internal_spaces() {
        let f = write_tmp("a.png\teasy\t  two  spaces  kept  \n");
        let records = parse_manifest(f.path()).unwrap();
        assert_eq!(records[0].transcript, "  two  spaces  kept  ");
    }

    #[test]
    fn parse_empty_file() {
        let f = write_tmp("");
        assert!(parse_manifest(f.path()).unwrap().is_empty());
    }

    #[test]
    fn parse_two_fields_errors_with_line() {
        let f = write_tmp("a.png\teasy\tok\nb.png\tmedium\n");
        match parse_manifest(f.path()) {
            Err(ManifestError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn parse_bad_difficulty() {
        let f = write_tmp("a.png\timpossible\tx\n");
        assert!(matches!(
            parse_manifest(f.path()),
            Err(ManifestError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn parse_ignores_provenance_columns() {
        let f = write_tmp("a.png\teasy\thello\taugmented\tsrc.png\t1\t3\tfull-frame\t0.3\t-12.5\n");
        let records = parse_manifest(f.path()).unwrap();
        assert_eq!(records[0].transcript, "hello");
    }

    fn sample_entries() -> Vec<AugmentedManifestEntry> {
        vec![
            AugmentedManifestEntry {
                image_path: "lines/a.png".into(),
                difficulty: Difficulty::Easy,
                transcript: "hello world".into(),
                origin: Origin::Original,
                provenance: None,
            },
            AugmentedManifestEntry {
                image_path: "aug/a_r1_f3.png".into(),
                difficulty: Difficulty::Easy,
                transcript: "hello world".into(),
                origin: Origin::Augmented,
                provenance: Some(SceneProvenance {
                    source_id: "lines/a.png".into(),
                    replica: 1,
                    frame: 3,
                    camera: "aps-c".into(),
                    radius_m: 0.31425,
                    psi_deg: -17.25,
                    seed: 0,
                }),
            },
        ]
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.tsv");
        let entries = sample_entries();
        write_manifest(&entries, &path).unwrap();
        let back = read_augmented_manifest(&path).unwrap();
        assert_eq!(back, entries);
    }

    #[test]
    fn written_manifest_reingests_as_plain() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.tsv");
        write_manifest(&sample_entries(), &path).unwrap();
        let records = parse_manifest(&path).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[1].image_path, "aug/a_r1_f3.png");
        assert_eq!(records[1].transcript, "hello world");
    }
}
