//! Property suites for the geometry, extraction, and metric invariants.

// not every helper in the shared module is used by this target
#[allow(dead_code)]
mod common;

use nalgebra::{Matrix3, Vector3};
use proptest::prelude::*;
use rand::Rng;

use ocr_augment::config::AugmentConfig;
use ocr_augment::extract::{min_area_rect_points, RotatedRect};
use ocr_augment::geometry::{
    billboard_pose, plane_homography, project_quad, sample_scene, Intrinsics, RigidPose,
};
use ocr_augment::manifest::Difficulty;
use ocr_augment::metrics::{aggregate, levenshtein, LineEval};
use ocr_augment::pipeline::derive_rng;

use common::levenshtein_oracle;

fn token_seq() -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..4, 0..=6)
}

proptest! {
    #[test]
    fn levenshtein_matches_oracle(a in token_seq(), b in token_seq()) {
        prop_assert_eq!(levenshtein(&a, &b), levenshtein_oracle(&a, &b));
    }

    #[test]
    fn levenshtein_symmetry(a in token_seq(), b in token_seq()) {
        prop_assert_eq!(levenshtein(&a, &b), levenshtein(&b, &a));
    }

    #[test]
    fn levenshtein_identity_of_indiscernibles(a in token_seq(), b in token_seq()) {
        prop_assert_eq!(levenshtein(&a, &b) == 0, a == b);
    }

    #[test]
    fn levenshtein_triangle_inequality(a in token_seq(), b in token_seq(), c in token_seq()) {
        prop_assert!(levenshtein(&a, &c) <= levenshtein(&a, &b) + levenshtein(&b, &c));
    }
}

fn rect_quad(cx: f64, cy: f64, w: f64, h: f64, deg: f64) -> [[f64; 2]; 4] {
    let (s, c) = deg.to_radians().sin_cos();
    let corner = |dx: f64, dy: f64| [cx + c * dx - s * dy, cy + s * dx + c * dy];
    [
        corner(-w / 2.0, -h / 2.0),
        corner(w / 2.0, -h / 2.0),
        corner(w / 2.0, h / 2.0),
        corner(-w / 2.0, h / 2.0),
    ]
}

proptest! {
    #[test]
    fn min_area_rect_recovers_rotated_rects(
        cx in -50.0..50.0f64,
        cy in -50.0..50.0f64,
        w in 10.0..100.0f64,
        aspect in 1.2..5.0f64,
        deg in -89.0..89.0f64,
    ) {
        let h = w / aspect;
        let quad = rect_quad(cx, cy, w, h, deg);
        let rect = min_area_rect_points(&quad).unwrap();
        prop_assert!((rect.width - w).abs() < 1e-6);
        prop_assert!((rect.height - h).abs() < 1e-6);
        // angles are equivalent mod 180 under the width >= height canon
        let diff = (rect.angle - deg).rem_euclid(180.0);
        prop_assert!(diff < 1e-6 || diff > 180.0 - 1e-6, "angle {} vs {}", rect.angle, deg);
    }

    #[test]
    fn min_area_rect_enclosure_ordering(
        pts in prop::collection::vec((-100.0..100.0f64, -100.0..100.0f64), 4),
    ) {
        let quad: Vec<[f64; 2]> = pts.iter().map(|&(x, y)| [x, y]).collect();
        if let Ok(rect) = min_area_rect_points(&quad) {
            let rect_area = rect.width * rect.height;
            let (mut xmin, mut xmax) = (f64::INFINITY, f64::NEG_INFINITY);
            let (mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY);
            for p in &quad {
                xmin = xmin.min(p[0]);
                xmax = xmax.max(p[0]);
                ymin = ymin.min(p[1]);
                ymax = ymax.max(p[1]);
            }
            let aabb_area = (xmax - xmin) * (ymax - ymin);
            prop_assert!(rect_area <= aabb_area + 1e-6);
        }
    }

    #[test]
    fn billboard_orthonormal_and_facing(
        cam in (-0.5..0.5f64, -0.5..0.5f64, -3.0..-0.5f64),
        center in (-0.4..0.4f64, -0.4..0.4f64, -0.2..0.2f64),
    ) {
        let cam = Vector3::new(cam.0, cam.1, cam.2);
        let center = Vector3::new(center.0, center.1, center.2);
        let pose = billboard_pose(cam, center, 300, 40, 0.0005).unwrap();
        prop_assert!(pose.ex.dot(&pose.ey).abs() <= 1e-9);
        prop_assert!((pose.ex.norm() - 1.0).abs() <= 1e-9);
        prop_assert!((pose.ey.norm() - 1.0).abs() <= 1e-9);
        prop_assert!((pose.normal().norm() - 1.0).abs() <= 1e-9);
        prop_assert!(pose.normal().dot(&(cam - center)) > 0.0);
    }

    #[test]
    fn homography_round_trip(
        lateral in (-0.2..0.2f64, -0.1..0.1f64),
        depth in -0.1..0.1f64,
    ) {
        let intr = Intrinsics { fx: 2700.0, fy: 2700.0, cx: 960.0, cy: 540.0, width: 1920, height: 1080 };
        let cam_pos = Vector3::new(0.0, 0.0, -1.35);
        let cam_pose = RigidPose::look_at(cam_pos, Vector3::zeros()).unwrap();
        let center = Vector3::new(lateral.0, lateral.1, depth);
        let plane = billboard_pose(cam_pos, center, 300, 40, 0.0005).unwrap();
        let h = plane_homography(&intr, &cam_pose, &plane, 300, 40).unwrap();
        prop_assert!(h.determinant().abs() > 1e-12);
        // H * H^-1 = I within 1e-9 after normalization
        let prod = h.matrix() * h.inverse().unwrap().matrix();
        let prod = prod / prod[(2, 2)];
        prop_assert!((prod - Matrix3::identity()).abs().max() <= 1e-9);
        // quad corners map back to the source corners within 1e-6 px
        let quad = project_quad(&h, 300, 40).unwrap();
        let h_inv = h.inverse().unwrap();
        let src = [[0.0, 0.0], [300.0, 0.0], [300.0, 40.0], [0.0, 40.0]];
        for (corner, expected) in quad.corners.iter().zip(src.iter()) {
            let back = h_inv.apply(corner[0], corner[1]).unwrap();
            prop_assert!((back[0] - expected[0]).abs() <= 1e-6);
            prop_assert!((back[1] - expected[1]).abs() <= 1e-6);
        }
        prop_assert!(quad.signed_area() > 1.0);
    }
}

#[test]
fn scene_draws_stay_in_ranges() {
    let config = AugmentConfig::default();
    let traj = &config.trajectory;
    let mut rng = derive_rng(99, "range-check", 0);
    for _ in 0..10_000 {
        let scene = sample_scene(&config, &mut rng).unwrap();
        assert!(scene.radius >= traj.radius_min && scene.radius <= traj.radius_max);
        assert!(scene.psi >= traj.rotation_min && scene.psi <= traj.rotation_max);
        assert!(config.cameras.iter().any(|c| c.name == scene.camera.name));
    }
}

#[test]
fn scene_degenerate_ranges_are_constant() {
    let mut config = AugmentConfig::default();
    config.trajectory.radius_min = 0.3;
    config.trajectory.radius_max = 0.3;
    config.trajectory.rotation_min = 0.0;
    config.trajectory.rotation_max = 0.0;
    let mut rng = derive_rng(1, "degenerate", 0);
    for _ in 0..100 {
        let scene = sample_scene(&config, &mut rng).unwrap();
        assert_eq!(scene.radius, 0.3);
        assert_eq!(scene.psi, 0.0);
    }
}

#[test]
fn scene_sampling_is_pure_in_rng_state() {
    let config = AugmentConfig::default();
    for replica in 0..10u64 {
        let mut a = derive_rng(7, "purity", replica);
        let mut b = derive_rng(7, "purity", replica);
        let sa = sample_scene(&config, &mut a).unwrap();
        let sb = sample_scene(&config, &mut b).unwrap();
        assert_eq!(sa.camera.name, sb.camera.name);
        assert_eq!(sa.radius.to_bits(), sb.radius.to_bits());
        assert_eq!(sa.psi.to_bits(), sb.psi.to_bits());
    }
}

#[test]
fn min_area_rect_invariant_rect_contains_input() {
    let mut rng = derive_rng(3, "containment", 0);
    for _ in 0..500 {
        let quad: Vec<[f64; 2]> = (0..4)
            .map(|_| [rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0)])
            .collect();
        let Ok(rect) = min_area_rect_points(&quad) else {
            continue;
        };
        assert_rect_contains(&rect, &quad, 1e-6);
    }
}

fn assert_rect_contains(rect: &RotatedRect, points: &[[f64; 2]], tol: f64) {
    let (s, c) = rect.angle.to_radians().sin_cos();
    for p in points {
        let dx = p[0] - rect.center[0];
        let dy = p[1] - rect.center[1];
        let u = c * dx + s * dy;
        let v = -s * dx + c * dy;
        assert!(u.abs() <= rect.width / 2.0 + tol);
        assert!(v.abs() <= rect.height / 2.0 + tol);
    }
}

fn eval_line(cer: f64, wer: f64, difficulty: Difficulty) -> LineEval {
    LineEval {
        id: String::new(),
        reference: String::new(),
        hypothesis: String::new(),
        char_distance: 0,
        word_distance: 0,
        n_chars: 1,
        n_words: 1,
        cer,
        wer,
        difficulty,
    }
}

#[test]
fn aggregate_weighted_equals_grand_mean() {
    let mut rng = derive_rng(5, "aggregate", 0);
    for _ in 0..1000 {
        let n = rng.random_range(1..=200);
        let evals: Vec<LineEval> = (0..n)
            .map(|_| {
                let difficulty = Difficulty::ALL[rng.random_range(0..4)];
                eval_line(
                    rng.random_range(0.0..1.5),
                    rng.random_range(0.0..2.0),
                    difficulty,
                )
            })
            .collect();
        let report = aggregate(&evals);
        let grand_cer = evals.iter().map(|e| e.cer).sum::<f64>() / n as f64;
        let grand_wer = evals.iter().map(|e| e.wer).sum::<f64>() / n as f64;
        assert!((report.overall.macro_cer.unwrap() - grand_cer).abs() <= 1e-12);
        assert!((report.overall.macro_wer.unwrap() - grand_wer).abs() <= 1e-12);
    }
}
