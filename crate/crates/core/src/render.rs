//! Frame rendering: inverse-warps the source text line through the plane
//! homography and applies a Lambertian light model on a black background.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::geometry::{project_quad, GeometryError, Homography, PlanePose, Quad2D};
use crate::raster::{round_u8, Raster};

/// Scene light. `Sun` is directional with no falloff; `Point` obeys the
/// inverse-square law; `Spot` is a point light gated by a smooth cone
/// falloff; `Area` is the mean of point-style samples stratified over its
/// rectangle.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LightSpec {
    Sun {
        /// Direction of light travel, unit norm.
        direction: [f64; 3],
        irradiance: f64,
    },
    Point {
        position: [f64; 3],
        power: f64,
    },
    Spot {
        position: [f64; 3],
        direction: [f64; 3],
        cone_half_angle: f64,
        blend: f64,
        power: f64,
    },
    Area {
        center: [f64; 3],
        normal: [f64; 3],
        width: f64,
        height: f64,
        radiance: f64,
        sample_count: u32,
    },
}

impl LightSpec {
    pub fn validate(&self) -> Result<(), GeometryError> {
        let unit = |v: &[f64; 3], what: &str| {
            let n = Vector3::from(*v).norm();
            if (n - 1.0).abs() > 1e-9 {
                Err(GeometryError::InvalidSpec(format!(
                    "{what} must be unit-norm (got {n})"
                )))
            } else {
                Ok(())
            }
        };
        match self {
            LightSpec::Sun { direction, irradiance } => {
                unit(direction, "sun direction")?;
                non_negative(*irradiance, "sun irradiance")
            }
            LightSpec::Point { power, .. } => non_negative(*power, "point power"),
            LightSpec::Spot {
                direction,
                cone_half_angle,
                blend,
                power,
                ..
            } => {
                unit(direction, "spot direction")?;
                if !(*cone_half_angle > 0.0 && *cone_half_angle <= 90.0) {
                    return Err(GeometryError::InvalidSpec(
                        "spot cone_half_angle must be in (0, 90]".into(),
                    ));
                }
                if !(0.0..=1.0).contains(blend) {
                    return Err(GeometryError::InvalidSpec("spot blend must be in [0, 1]".into()));
                }
                non_negative(*power, "spot power")
            }
            LightSpec::Area {
                normal,
                width,
                height,
                radiance,
                sample_count,
                ..
            } => {
                unit(normal, "area normal")?;
                if *width <= 0.0 || *height <= 0.0 {
                    return Err(GeometryError::InvalidSpec("area extent must be positive".into()));
                }
                if *sample_count < 1 {
                    return Err(GeometryError::InvalidSpec("area sample_count must be >= 1".into()));
                }
                non_negative(*radiance, "area radiance")
            }
        }
    }
}

fn non_negative(v: f64, what: &str) -> Result<(), GeometryError> {
    if v < 0.0 {
        Err(GeometryError::InvalidSpec(format!("{what} must be non-negative")))
    } else {
        Ok(())
    }
}

fn point_contribution(light_pos: Vector3<f64>, power: f64, point: &Vector3<f64>, normal: &Vector3<f64>) -> f64 {
    let offset = light_pos - point;
    let dist_sq = offset.norm_squared();
    if dist_sq < 1e-12 {
        return 0.0;
    }
    let l = offset / dist_sq.sqrt();
    power * l.dot(normal).max(0.0) / dist_sq
}

/// Smooth cone falloff: 1 inside cone·(1-blend), 0 outside cone,
/// smoothstepped in between.
fn spot_falloff(angle_deg: f64, cone_half_angle: f64, blend: f64) -> f64 {
    let inner = cone_half_angle * (1.0 - blend);
    if angle_deg <= inner {
        1.0
    } else if angle_deg >= cone_half_angle {
        0.0
    } else {
        let t = (cone_half_angle - angle_deg) / (cone_half_angle - inner);
        t * t * (3.0 - 2.0 * t)
    }
}

/// Lambertian shading at a surface point: clamp(ambient + sum of light
/// contributions, 0, 1).
pub fn shading_factor(
    lights: &[LightSpec],
    ambient: f64,
    point: &Vector3<f64>,
    normal: &Vector3<f64>,
) -> f64 {
    let mut total = ambient;
    for light in lights {
        total += match light {
            LightSpec::Sun { direction, irradiance } => {
                irradiance * (-Vector3::from(*direction).dot(normal)).max(0.0)
            }
            LightSpec::Point { position, power } => {
                point_contribution(Vector3::from(*position), *power, point, normal)
            }
            LightSpec::Spot {
                position,
                direction,
                cone_half_angle,
                blend,
                power,
            } => {
                let pos = Vector3::from(*position);
                let to_point = point - pos;
                if to_point.norm() < 1e-12 {
                    0.0
                } else {
                    let angle = to_point
                        .normalize()
                        .dot(&Vector3::from(*direction))
                        .clamp(-1.0, 1.0)
                        .acos()
                        .to_degrees();
                    point_contribution(pos, *power, point, normal)
                        * spot_falloff(angle, *cone_half_angle, *blend)
                }
            }
            LightSpec::Area {
                center,
                normal: area_normal,
                width,
                height,
                radiance,
                sample_count,
            } => {
                let c = Vector3::from(*center);
                let n = Vector3::from(*area_normal);
                // in-plane frame of the emitter rectangle
                let mut u = Vector3::x() - n * n.x;
                if u.norm() < 1e-6 {
                    u = Vector3::y() - n * n.y;
                }
                let u = u.normalize();
                let v = n.cross(&u);
                // stratified cell centers over an nx x ny grid
                let count = *sample_count as usize;
                let nx = (count as f64).sqrt().ceil() as usize;
                let ny = count.div_ceil(nx);
                let mut sum = 0.0;
                let mut taken = 0usize;
                'grid: for j in 0..ny {
                    for i in 0..nx {
                        if taken == count {
                            break 'grid;
                        }
                        let su = ((i as f64 + 0.5) / nx as f64 - 0.5) * width;
                        let sv = ((j as f64 + 0.5) / ny as f64 - 0.5) * height;
                        sum += point_contribution(c + u * su + v * sv, *radiance, point, normal);
                        taken += 1;
                    }
                }
                sum / count as f64
            }
        };
    }
    total.clamp(0.0, 1.0)
}

/// Provenance of one rendered frame, carried through to the output manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneProvenance {
    pub source_id: String,
    pub replica: u32,
    pub frame: u32,
    pub camera: String,
    pub radius_m: f64,
    pub psi_deg: f64,
    pub seed: u64,
}

/// One rendered frame: raster, projected text quad, and provenance.
#[derive(Debug, Clone)]
pub struct AugmentedFrame {
    pub image: Raster,
    pub quad: Quad2D,
    pub provenance: SceneProvenance,
}

/// Everything needed to render one frame of a scene.
pub struct FrameContext<'a> {
    pub homography: &'a Homography,
    pub plane: &'a PlanePose,
    pub lights: &'a [LightSpec],
    pub ambient: f64,
    pub render_width: u32,
    pub render_height: u32,
}

/// Inverse-warps the source through the homography onto a black frame and
/// multiplies by the shading factor at each plane point. Output pixels whose
/// center maps outside the source rectangle stay 0.
pub fn render_frame(
    source: &Raster,
    ctx: &FrameContext,
    provenance: SceneProvenance,
) -> Result<AugmentedFrame, GeometryError> {
    let quad = project_quad(ctx.homography, source.width(), source.height())?;
    let h_inv = ctx
        .homography
        .inverse()
        .ok_or(GeometryError::DegeneratePose("homography is singular".into()))?;
    let mut image = Raster::new(ctx.render_width, ctx.render_height, source.channels());
    let normal = ctx.plane.normal();
    let src_w = source.width() as f64;
    let src_h = source.height() as f64;

    // only pixels under the quad can be non-zero
    let (min, max) = quad.bounding_box();
    let x0 = (min[0].floor().max(0.0)) as u32;
    let y0 = (min[1].floor().max(0.0)) as u32;
    let x1 = (max[0].ceil() as i64).clamp(0, ctx.render_width as i64) as u32;
    let y1 = (max[1].ceil() as i64).clamp(0, ctx.render_height as i64) as u32;

    for y in y0..y1 {
        for x in x0..x1 {
            // output pixel center in edge-based frame coordinates
            let Some([su, sv]) = h_inv.apply(x as f64 + 0.5, y as f64 + 0.5) else {
                continue;
            };
            if su < 0.0 || su > src_w || sv < 0.0 || sv > src_h {
                continue;
            }
            let factor = shading_factor(ctx.lights, ctx.ambient, &ctx.plane.point(su, sv), &normal);
            for c in 0..source.channels() {
                let value = source.bilinear(su - 0.5, sv - 0.5, c);
                image.put(x, y, c, round_u8(value * factor));
            }
        }
    }
    Ok(AugmentedFrame {
        image,
        quad,
        provenance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sun_head_on_is_full() {
        let lights = [LightSpec::Sun {
            direction: [0.0, 0.0, 1.0],
            irradiance: 1.0,
        }];
        let n = -Vector3::z();
        for p in [Vector3::zeros(), Vector3::new(0.3, -0.2, 0.1)] {
            assert_eq!(shading_factor(&lights, 0.0, &p, &n), 1.0);
        }
    }

    #[test]
    fn grazing_sun_leaves_ambient() {
        let lights = [LightSpec::Sun {
            direction: [1.0, 0.0, 0.0],
            irradiance: 1.0,
        }];
        let n = -Vector3::z();
        assert_eq!(shading_factor(&lights, 0.1, &Vector3::zeros(), &n), 0.1);
    }

    #[test]
    fn point_light_inverse_square() {
        let n = -Vector3::z();
        let power = 0.5;
        let factor_at = |r: f64| {
            let lights = [LightSpec::Point {
                position: [0.0, 0.0, -r],
                power,
            }];
            shading_factor(&lights, 0.0, &Vector3::zeros(), &n)
        };
        assert_relative_eq!(factor_at(2.0), power / 4.0, epsilon = 1e-12);
        // doubling the distance quarters the unclamped value
        assert_relative_eq!(factor_at(4.0), factor_at(2.0) / 4.0, epsilon = 1e-12);
        // close light clamps at 1
        assert_eq!(factor_at(0.1), 1.0);
    }

    #[test]
    fn spot_gates_point_light() {
        let n = -Vector3::z();
        let spot = |target: Vector3<f64>| {
            let lights = [LightSpec::Spot {
                position: [0.0, 0.0, -1.0],
                direction: [0.0, 0.0, 1.0],
                cone_half_angle: 20.0,
                blend: 0.5,
                power: 0.5,
            }];
            shading_factor(&lights, 0.0, &target, &n)
        };
        // on-axis target inside the inner cone
        assert_relative_eq!(spot(Vector3::zeros()), 0.5, epsilon = 1e-12);
        // target far outside the cone
        assert_eq!(spot(Vector3::new(5.0, 0.0, 0.0)), 0.0);
    }

    #[test]
    fn spot_falloff_shape() {
        assert_eq!(spot_falloff(0.0, 20.0, 0.5), 1.0);
        assert_eq!(spot_falloff(10.0, 20.0, 0.5), 1.0);
        assert_eq!(spot_falloff(20.0, 20.0, 0.5), 0.0);
        assert_relative_eq!(spot_falloff(15.0, 20.0, 0.5), 0.5, epsilon = 1e-12);
        // hard edge when blend = 0
        assert_eq!(spot_falloff(19.99, 20.0, 0.0), 1.0);
    }

    #[test]
    fn area_light_matches_point_at_distance() {
        // a tiny area light far away behaves like a point light
        let n = -Vector3::z();
        let area = [LightSpec::Area {
            center: [0.0, 0.0, -3.0],
            normal: [0.0, 0.0, 1.0],
            width: 1e-4,
            height: 1e-4,
            radiance: 0.9,
            sample_count: 16,
        }];
        let point = [LightSpec::Point {
            position: [0.0, 0.0, -3.0],
            power: 0.9,
        }];
        let fa = shading_factor(&area, 0.0, &Vector3::zeros(), &n);
        let fp = shading_factor(&point, 0.0, &Vector3::zeros(), &n);
        assert_relative_eq!(fa, fp, epsilon = 1e-6);
    }

    #[test]
    fn ambient_monotonicity() {
        let lights = [LightSpec::Sun {
            direction: [0.0, 0.0, 1.0],
            irradiance: 0.3,
        }];
        let n = -Vector3::z();
        let p = Vector3::zeros();
        let mut last = 0.0;
        for i in 0..=10 {
            let f = shading_factor(&lights, i as f64 / 10.0, &p, &n);
            assert!(f >= last);
            last = f;
        }
    }
}
