//! Cameras, poses, trajectories, and the projective math mapping a planar
//! text image into a rendered frame.
//!
//! Conventions: the world is right-handed with +Y pointing down (image
//! convention), so "world down" is +Y. The camera frame has x right, y down,
//! z forward; a camera point (X, Y, Z) projects to pixel
//! (cx + fx·X/Z, cy + fy·Y/Z). Default scenes place cameras on the -Z axis
//! looking along +Z, which keeps the trajectory circle (world X-Y plane)
//! parallel to the image plane.

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::AugmentConfig;

/// World "down" direction (+Y, image convention).
pub const WORLD_DOWN: Vector3<f64> = Vector3::new(0.0, 1.0, 0.0);

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("invalid camera/trajectory spec: {0}")]
    InvalidSpec(String),
    #[error("degenerate pose: {0}")]
    DegeneratePose(String),
    #[error("plane corner behind camera")]
    BehindCamera,
    #[error("frame index {index} out of range (frames_per_scene = {frames})")]
    FrameIndexOutOfRange { index: u32, frames: u32 },
    #[error("config has an empty camera list")]
    EmptyCameraList,
}

/// Physical camera description: sensor and focal length in millimeters,
/// position and look-at point in meters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CameraSpec {
    pub name: String,
    pub sensor_width: f64,
    pub sensor_height: f64,
    pub focal_length: f64,
    pub position: [f64; 3],
    pub look_at: [f64; 3],
}

impl CameraSpec {
    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.sensor_width <= 0.0 || self.sensor_height <= 0.0 || self.focal_length <= 0.0 {
            return Err(GeometryError::InvalidSpec(format!(
                "camera '{}': sensor and focal length must be positive",
                self.name
            )));
        }
        if self.position == self.look_at {
            return Err(GeometryError::InvalidSpec(format!(
                "camera '{}': position equals look_at",
                self.name
            )));
        }
        Ok(())
    }

    pub fn position_v(&self) -> Vector3<f64> {
        Vector3::from(self.position)
    }

    pub fn look_at_v(&self) -> Vector3<f64> {
        Vector3::from(self.look_at)
    }
}

/// Pixel-space projection parameters derived from a [`CameraSpec`] and a
/// render resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl Intrinsics {
    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }
}

/// fx = f·W/sensor_w, fy = f·H/sensor_h, principal point at frame center.
pub fn intrinsics_from_spec(
    camera: &CameraSpec,
    render_width: u32,
    render_height: u32,
) -> Result<Intrinsics, GeometryError> {
    camera.validate()?;
    if render_width == 0 || render_height == 0 {
        return Err(GeometryError::InvalidSpec(
            "render resolution must be at least 1x1".into(),
        ));
    }
    Ok(Intrinsics {
        fx: camera.focal_length * render_width as f64 / camera.sensor_width,
        fy: camera.focal_length * render_height as f64 / camera.sensor_height,
        cx: render_width as f64 / 2.0,
        cy: render_height as f64 / 2.0,
        width: render_width,
        height: render_height,
    })
}

/// World-to-camera transform: p_cam = R·p_world + t.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidPose {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl RigidPose {
    const ORTHO_TOL: f64 = 1e-9;

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self, GeometryError> {
        let err = (rotation.transpose() * rotation - Matrix3::identity()).abs().max();
        if err > Self::ORTHO_TOL {
            return Err(GeometryError::DegeneratePose(format!(
                "rotation not orthonormal (deviation {err:.2e})"
            )));
        }
        if (rotation.determinant() - 1.0).abs() > Self::ORTHO_TOL {
            return Err(GeometryError::DegeneratePose("rotation determinant != +1".into()));
        }
        Ok(RigidPose { rotation, translation })
    }

    /// Camera pose looking from `position` toward `target`, image y axis
    /// aligned with world down.
    pub fn look_at(position: Vector3<f64>, target: Vector3<f64>) -> Result<Self, GeometryError> {
        let forward = target - position;
        if forward.norm() < 1e-12 {
            return Err(GeometryError::DegeneratePose("look_at equals position".into()));
        }
        let forward = forward.normalize();
        let mut down = WORLD_DOWN - forward * WORLD_DOWN.dot(&forward);
        if down.norm() < 1e-6 {
            // looking straight up or down: use world X as the reference axis
            let x = Vector3::x();
            down = x - forward * x.dot(&forward);
        }
        let down = down.normalize();
        let right = down.cross(&forward);
        let rotation = Matrix3::from_rows(&[
            right.transpose(),
            down.transpose(),
            forward.transpose(),
        ]);
        let translation = -rotation * position;
        RigidPose::new(rotation, translation)
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn transform(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }
}

/// Circular trajectory of the text plane. The circle lies in the world X-Y
/// plane (parallel to the image plane of a camera looking along +Z), `tilt`
/// tips it out of that plane about the X axis, then `psi` rotates it about
/// the optical (Z) axis through the circle center.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectorySpec {
    pub center: [f64; 3],
    pub radius_min: f64,
    pub radius_max: f64,
    pub rotation_min: f64,
    pub rotation_max: f64,
    pub frames_per_scene: u32,
    #[serde(default)]
    pub tilt: f64,
}

impl TrajectorySpec {
    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.radius_min > 0.0 && self.radius_min <= self.radius_max)
            && !(self.radius_min == 0.0 && self.radius_max == 0.0)
        {
            return Err(GeometryError::InvalidSpec(
                "trajectory requires 0 < radius_min <= radius_max".into(),
            ));
        }
        if self.rotation_min > self.rotation_max {
            return Err(GeometryError::InvalidSpec("rotation_min > rotation_max".into()));
        }
        if self.frames_per_scene < 1 {
            return Err(GeometryError::InvalidSpec("frames_per_scene must be >= 1".into()));
        }
        Ok(())
    }

    pub fn center_v(&self) -> Vector3<f64> {
        Vector3::from(self.center)
    }
}

fn rot_z(deg: f64) -> Matrix3<f64> {
    let (s, c) = deg.to_radians().sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

fn rot_x(deg: f64) -> Matrix3<f64> {
    let (s, c) = deg.to_radians().sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

/// Position of frame `frame_index` on the trajectory circle:
/// center + Rz(psi)·Rx(tilt)·(r·cos θ, r·sin θ, 0), θ = 2π·k/frames.
pub fn trajectory_position(
    traj: &TrajectorySpec,
    radius: f64,
    psi: f64,
    frame_index: u32,
) -> Result<Vector3<f64>, GeometryError> {
    if frame_index >= traj.frames_per_scene {
        return Err(GeometryError::FrameIndexOutOfRange {
            index: frame_index,
            frames: traj.frames_per_scene,
        });
    }
    let theta = 2.0 * std::f64::consts::PI * frame_index as f64 / traj.frames_per_scene as f64;
    let local = Vector3::new(radius * theta.cos(), radius * theta.sin(), 0.0);
    Ok(traj.center_v() + rot_z(psi) * rot_x(traj.tilt) * local)
}

/// Placement of the text plane in the world: `origin` is the 3D position of
/// the source image's top-left corner, `ex`/`ey` the in-plane axes along
/// text width and height, `pixel_scale` meters per source pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanePose {
    pub origin: Vector3<f64>,
    pub ex: Vector3<f64>,
    pub ey: Vector3<f64>,
    pub pixel_scale: f64,
}

impl PlanePose {
    /// Unit normal on the side facing the camera.
    pub fn normal(&self) -> Vector3<f64> {
        self.ey.cross(&self.ex)
    }

    /// World point of source pixel coordinate (u, v).
    pub fn point(&self, u: f64, v: f64) -> Vector3<f64> {
        self.origin + self.ex * (u * self.pixel_scale) + self.ey * (v * self.pixel_scale)
    }
}

/// Orients the plane so it faces the camera, with `ey` the projection of
/// world down onto the plane (text stays upright) and `ex` completing the
/// frame so the text reads left-to-right in the image.
pub fn billboard_pose(
    camera_position: Vector3<f64>,
    plane_center: Vector3<f64>,
    source_width: u32,
    source_height: u32,
    pixel_scale: f64,
) -> Result<PlanePose, GeometryError> {
    let to_cam = camera_position - plane_center;
    if to_cam.norm() < 1e-12 {
        return Err(GeometryError::DegeneratePose("plane center on camera position".into()));
    }
    let n = to_cam.normalize();
    let mut ey = WORLD_DOWN - n * WORLD_DOWN.dot(&n);
    if ey.norm() < 1e-6 {
        // view direction parallel to world up: fall back to world X
        let x = Vector3::x();
        ey = x - n * x.dot(&n);
    }
    let ey = ey.normalize();
    let ex = n.cross(&ey);
    let origin = plane_center
        - ex * (source_width as f64 / 2.0 * pixel_scale)
        - ey * (source_height as f64 / 2.0 * pixel_scale);
    Ok(PlanePose {
        origin,
        ex,
        ey,
        pixel_scale,
    })
}

/// 3x3 projective map from source pixel coordinates to frame pixel
/// coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Homography {
    m: Matrix3<f64>,
}

impl Homography {
    pub fn from_matrix(m: Matrix3<f64>) -> Self {
        Homography { m }
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.m
    }

    pub fn determinant(&self) -> f64 {
        self.m.determinant()
    }

    pub fn inverse(&self) -> Option<Homography> {
        self.m.try_inverse().map(Homography::from_matrix)
    }

    /// Maps (x, y) with homogeneous normalization; `None` when the point's
    /// w-coordinate is at or below 1e-12.
    pub fn apply(&self, x: f64, y: f64) -> Option<[f64; 2]> {
        let p = self.m * Vector3::new(x, y, 1.0);
        if p.z <= 1e-12 {
            return None;
        }
        Some([p.x / p.z, p.y / p.z])
    }
}

/// Projected corners of the source image in frame pixel coordinates,
/// ordered top-left, top-right, bottom-right, bottom-left of the source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quad2D {
    pub corners: [[f64; 2]; 4],
}

impl Quad2D {
    /// Positive for the corner order used here (y grows downward).
    pub fn signed_area(&self) -> f64 {
        let c = &self.corners;
        let mut a = 0.0;
        for i in 0..4 {
            let j = (i + 1) % 4;
            a += c[i][0] * c[j][1] - c[j][0] * c[i][1];
        }
        a / 2.0
    }

    pub fn bounding_box(&self) -> ([f64; 2], [f64; 2]) {
        let mut min = [f64::INFINITY; 2];
        let mut max = [f64::NEG_INFINITY; 2];
        for c in &self.corners {
            for k in 0..2 {
                min[k] = min[k].min(c[k]);
                max[k] = max[k].max(c[k]);
            }
        }
        (min, max)
    }
}

/// Closed form of projecting the textured plane through the pinhole camera:
/// H = K·[R·ex·s | R·ey·s | R·origin + t].
pub fn plane_homography(
    intr: &Intrinsics,
    camera_pose: &RigidPose,
    plane: &PlanePose,
    source_width: u32,
    source_height: u32,
) -> Result<Homography, GeometryError> {
    let w = source_width as f64;
    let h = source_height as f64;
    for (u, v) in [(0.0, 0.0), (w, 0.0), (w, h), (0.0, h)] {
        let depth = camera_pose.transform(&plane.point(u, v)).z;
        if depth <= 0.0 {
            return Err(GeometryError::BehindCamera);
        }
    }
    let r = camera_pose.rotation();
    let c1 = r * plane.ex * plane.pixel_scale;
    let c2 = r * plane.ey * plane.pixel_scale;
    let c3 = r * plane.origin + camera_pose.translation();
    let m = intr.matrix() * Matrix3::from_columns(&[c1, c2, c3]);
    if m.determinant().abs() <= 1e-12 {
        return Err(GeometryError::DegeneratePose("homography is singular".into()));
    }
    Ok(Homography::from_matrix(m))
}

/// Maps the four source-image corners through `h`.
pub fn project_quad(
    h: &Homography,
    source_width: u32,
    source_height: u32,
) -> Result<Quad2D, GeometryError> {
    let w = source_width as f64;
    let hh = source_height as f64;
    let mut corners = [[0.0; 2]; 4];
    for (i, (u, v)) in [(0.0, 0.0), (w, 0.0), (w, hh), (0.0, hh)].into_iter().enumerate() {
        corners[i] = h.apply(u, v).ok_or(GeometryError::BehindCamera)?;
    }
    Ok(Quad2D { corners })
}

/// One fully sampled scene: camera, drawn trajectory parameters, frame
/// count. A deterministic function of the random stream it was drawn from.
#[derive(Debug, Clone)]
pub struct SceneInstance {
    pub camera: CameraSpec,
    pub intrinsics: Intrinsics,
    pub camera_pose: RigidPose,
    pub trajectory: TrajectorySpec,
    pub radius: f64,
    pub psi: f64,
    pub pixel_scale: f64,
}

impl SceneInstance {
    pub fn frames_per_scene(&self) -> u32 {
        self.trajectory.frames_per_scene
    }

    pub fn plane_pose(
        &self,
        frame_index: u32,
        source_width: u32,
        source_height: u32,
    ) -> Result<PlanePose, GeometryError> {
        let center = trajectory_position(&self.trajectory, self.radius, self.psi, frame_index)?;
        billboard_pose(
            self.camera.position_v(),
            center,
            source_width,
            source_height,
            self.pixel_scale,
        )
    }

    pub fn frame_homography(
        &self,
        frame_index: u32,
        source_width: u32,
        source_height: u32,
    ) -> Result<(Homography, PlanePose), GeometryError> {
        let plane = self.plane_pose(frame_index, source_width, source_height)?;
        let h = plane_homography(
            &self.intrinsics,
            &self.camera_pose,
            &plane,
            source_width,
            source_height,
        )?;
        Ok((h, plane))
    }
}

/// Draws a scene from the config: camera uniform over the list, radius and
/// psi uniform over their ranges. Bit-identical for identical rng state.
pub fn sample_scene<R: Rng>(
    config: &AugmentConfig,
    rng: &mut R,
) -> Result<SceneInstance, GeometryError> {
    if config.cameras.is_empty() {
        return Err(GeometryError::EmptyCameraList);
    }
    config.trajectory.validate()?;
    let camera = config.cameras[rng.random_range(0..config.cameras.len())].clone();
    let intrinsics = intrinsics_from_spec(&camera, config.render.width, config.render.height)?;
    let camera_pose = RigidPose::look_at(camera.position_v(), camera.look_at_v())?;
    let traj = &config.trajectory;
    let radius = if traj.radius_min == traj.radius_max {
        traj.radius_min
    } else {
        rng.random_range(traj.radius_min..=traj.radius_max)
    };
    let psi = if traj.rotation_min == traj.rotation_max {
        traj.rotation_min
    } else {
        rng.random_range(traj.rotation_min..=traj.rotation_max)
    };
    Ok(SceneInstance {
        camera,
        intrinsics,
        camera_pose,
        trajectory: traj.clone(),
        radius,
        psi,
        pixel_scale: config.pixel_scale,
    })
}
