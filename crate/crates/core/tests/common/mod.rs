//! Shared helpers for integration tests: synthetic text-line corpora,
//! independent oracles, and image comparison.

use std::path::Path;

use ocr_augment::config::AugmentConfig;
use ocr_augment::geometry::CameraSpec;
use ocr_augment::manifest::{load_samples, parse_manifest, TextLineSample};
use ocr_augment::raster::Raster;

/// Exhaustive-recursion edit distance, independent of the DP implementation.
pub fn levenshtein_oracle<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let sub = levenshtein_oracle(&a[1..], &b[1..]) + usize::from(a[0] != b[0]);
    let del = levenshtein_oracle(&a[1..], b) + 1;
    let ins = levenshtein_oracle(a, &b[1..]) + 1;
    sub.min(del).min(ins)
}

/// PSNR in dB over the overlapping region; infinite when identical.
pub fn psnr(a: &Raster, b: &Raster) -> f64 {
    assert_eq!(a.channels(), b.channels());
    let w = a.width().min(b.width());
    let h = a.height().min(b.height());
    let mut se = 0.0f64;
    let mut n = 0u64;
    for y in 0..h {
        for x in 0..w {
            for c in 0..a.channels() {
                let d = a.get(x, y, c) as f64 - b.get(x, y, c) as f64;
                se += d * d;
                n += 1;
            }
        }
    }
    let mse = se / n as f64;
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (255.0f64 * 255.0 / mse).log10()
    }
}

pub fn mean_abs_diff(a: &Raster, b: &Raster) -> f64 {
    let w = a.width().min(b.width());
    let h = a.height().min(b.height());
    let mut sum = 0.0f64;
    let mut n = 0u64;
    for y in 0..h {
        for x in 0..w {
            for c in 0..a.channels() {
                sum += (a.get(x, y, c) as f64 - b.get(x, y, c) as f64).abs();
                n += 1;
            }
        }
    }
    sum / n as f64
}

/// Smooth synthetic text line: dark wavy strokes on a light background.
/// Deterministic in `index`.
pub fn synthetic_line(index: u32, width: u32, height: u32) -> Raster {
    let phase = index as f64 * 0.73;
    let freq = 0.14 + (index % 7) as f64 * 0.015;
    Raster::from_fn(width, height, 1, |x, y, _| {
        let xf = x as f64;
        let yf = y as f64;
        let band = (-(yf - height as f64 / 2.0).powi(2) / (2.0 * (height as f64 / 5.0).powi(2))).exp();
        let strokes = 0.5 + 0.5 * (xf * freq + phase + (yf * 0.05).sin()).sin();
        let ink = band * strokes;
        (230.0 - 190.0 * ink) as u8
    })
}

/// Writes `n` synthetic lines plus a manifest.tsv into `dir` and loads them
/// back. Difficulties cycle easy/medium/hard.
pub fn synthetic_corpus(dir: &Path, n: u32) -> Vec<TextLineSample> {
    let lines_dir = dir.join("lines");
    std::fs::create_dir_all(&lines_dir).unwrap();
    let mut manifest = String::new();
    for i in 0..n {
        let width = 320 + (i % 5) * 37;
        let height = 32 + (i % 3) * 5;
        let img = synthetic_line(i, width, height);
        let rel = format!("lines/l{i:03}.png");
        img.save_png(&dir.join(&rel)).unwrap();
        let difficulty = ["easy", "medium", "hard"][(i % 3) as usize];
        manifest.push_str(&format!("{rel}\t{difficulty}\tsample text line {i}\n"));
    }
    let manifest_path = dir.join("manifest.tsv");
    std::fs::write(&manifest_path, manifest).unwrap();
    let records = parse_manifest(&manifest_path).unwrap();
    let loaded = load_samples(&records, dir);
    assert!(loaded.failed.is_empty());
    loaded.samples
}

/// A single camera whose focal length maps one source pixel to exactly one
/// frame pixel at the trajectory center (sensor aspect matches 16:9 render,
/// fx = fy = 2700, working distance 1.35 m at pixel_scale 0.0005).
pub fn unit_scale_camera() -> CameraSpec {
    CameraSpec {
        name: "unit-scale".into(),
        sensor_width: 19.2,
        sensor_height: 10.8,
        focal_length: 27.0,
        position: [0.0, 0.0, -1.35],
        look_at: [0.0, 0.0, 0.0],
    }
}

/// Config guaranteed to keep default-sized synthetic lines inside the frame.
pub fn contained_config() -> AugmentConfig {
    let mut config = AugmentConfig::default();
    config.cameras = vec![unit_scale_camera()];
    config.trajectory.radius_min = 0.05;
    config.trajectory.radius_max = 0.1;
    config
}
