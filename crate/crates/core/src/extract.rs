//! Turns a rendered frame back into a clean training line: containment
//! check, minimal enclosing rotated rectangle, rotation compensation, crop,
//! and aspect-preserving bicubic resize.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Quad2D;
use crate::raster::{round_u8, Raster};
use crate::render::AugmentedFrame;

/// Why a scene was rejected instead of yielding a training line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum Rejection {
    #[error("out-of-frame")]
    OutOfFrame,
    #[error("degenerate-geometry")]
    DegenerateGeometry,
    #[error("crop-out-of-bounds")]
    CropOutOfBounds,
    #[error("empty-line")]
    EmptyLine,
}

/// Minimal enclosing rotated rectangle, canonicalized to width >= height
/// with angle (degrees) in (-90, 90].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotatedRect {
    pub center: [f64; 2],
    pub width: f64,
    pub height: f64,
    pub angle: f64,
}

/// True iff every quad corner lies inside the closed pixel-index bounds
/// [0, dim-1].
pub fn check_containment(quad: &Quad2D, frame_width: u32, frame_height: u32) -> bool {
    quad.corners.iter().all(|c| {
        c[0] >= 0.0
            && c[0] <= (frame_width - 1) as f64
            && c[1] >= 0.0
            && c[1] <= (frame_height - 1) as f64
    })
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Andrew monotone chain; returns the hull in counterclockwise order
/// without the closing point.
fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts: Vec<[f64; 2]> = points.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<[f64; 2]> = Vec::with_capacity(pts.len());
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::with_capacity(pts.len());
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Minimum-area rectangle enclosing `points`: one side of the optimum is
/// collinear with a convex-hull edge, so every hull edge direction is tried.
pub fn min_area_rect_points(points: &[[f64; 2]]) -> Result<RotatedRect, Rejection> {
    let hull = convex_hull(points);
    if hull.len() < 3 {
        return Err(Rejection::DegenerateGeometry);
    }
    let mut best: Option<RotatedRect> = None;
    let mut best_area = f64::INFINITY;
    for i in 0..hull.len() {
        let a = hull[i];
        let b = hull[(i + 1) % hull.len()];
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        if len < 1e-12 {
            continue;
        }
        let dir = [(b[0] - a[0]) / len, (b[1] - a[1]) / len];
        let perp = [-dir[1], dir[0]];
        let mut umin = f64::INFINITY;
        let mut umax = f64::NEG_INFINITY;
        let mut vmin = f64::INFINITY;
        let mut vmax = f64::NEG_INFINITY;
        for p in &hull {
            let u = p[0] * dir[0] + p[1] * dir[1];
            let v = p[0] * perp[0] + p[1] * perp[1];
            umin = umin.min(u);
            umax = umax.max(u);
            vmin = vmin.min(v);
            vmax = vmax.max(v);
        }
        let area = (umax - umin) * (vmax - vmin);
        if area < best_area {
            best_area = area;
            let uc = (umin + umax) / 2.0;
            let vc = (vmin + vmax) / 2.0;
            best = Some(canonicalize(RotatedRect {
                center: [
                    uc * dir[0] + vc * perp[0],
                    uc * dir[1] + vc * perp[1],
                ],
                width: umax - umin,
                height: vmax - vmin,
                angle: dir[1].atan2(dir[0]).to_degrees(),
            }));
        }
    }
    best.ok_or(Rejection::DegenerateGeometry)
}

fn canonicalize(mut rect: RotatedRect) -> RotatedRect {
    if rect.width < rect.height {
        std::mem::swap(&mut rect.width, &mut rect.height);
        rect.angle += 90.0;
    }
    while rect.angle > 90.0 {
        rect.angle -= 180.0;
    }
    while rect.angle <= -90.0 {
        rect.angle += 180.0;
    }
    rect
}

pub fn min_area_rect(quad: &Quad2D) -> Result<RotatedRect, Rejection> {
    min_area_rect_points(&quad.corners)
}

/// Rotates the frame by -rect.angle about rect.center (bilinear), same
/// output dimensions; regions rotated in from outside are 0.
pub fn compensate_rotation(frame: &Raster, rect: &RotatedRect) -> Raster {
    if rect.angle == 0.0 {
        return frame.clone();
    }
    let (s, c) = rect.angle.to_radians().sin_cos();
    let (cx, cy) = (rect.center[0], rect.center[1]);
    let w = frame.width() as f64;
    let h = frame.height() as f64;
    let mut out = Raster::new(frame.width(), frame.height(), frame.channels());
    for y in 0..frame.height() {
        for x in 0..frame.width() {
            // output pixel center in edge-based coordinates
            let dx = x as f64 + 0.5 - cx;
            let dy = y as f64 + 0.5 - cy;
            let sx = c * dx - s * dy + cx;
            let sy = s * dx + c * dy + cy;
            if sx < 0.0 || sx > w || sy < 0.0 || sy > h {
                continue;
            }
            for ch in 0..frame.channels() {
                out.put(x, y, ch, round_u8(frame.bilinear(sx - 0.5, sy - 0.5, ch)));
            }
        }
    }
    out
}

/// Axis-aligned crop of round(width) x round(height) pixels centered at
/// rect.center.
pub fn crop_rect(compensated: &Raster, rect: &RotatedRect) -> Result<Raster, Rejection> {
    let out_w = rect.width.round() as i64;
    let out_h = rect.height.round() as i64;
    if out_w < 1 || out_h < 1 {
        return Err(Rejection::DegenerateGeometry);
    }
    let x0 = (rect.center[0] - rect.width / 2.0).round() as i64;
    let y0 = (rect.center[1] - rect.height / 2.0).round() as i64;
    if x0 < 0
        || y0 < 0
        || x0 + out_w > compensated.width() as i64
        || y0 + out_h > compensated.height() as i64
    {
        return Err(Rejection::CropOutOfBounds);
    }
    let mut out = Raster::new(out_w as u32, out_h as u32, compensated.channels());
    for y in 0..out_h as u32 {
        for x in 0..out_w as u32 {
            for c in 0..compensated.channels() {
                out.put(x, y, c, compensated.get(x0 as u32 + x, y0 as u32 + y, c));
            }
        }
    }
    Ok(out)
}

/// Catmull-Rom kernel (bicubic with a = -0.5).
fn catmull_rom(t: f64) -> f64 {
    const A: f64 = -0.5;
    let t = t.abs();
    if t <= 1.0 {
        (A + 2.0) * t * t * t - (A + 3.0) * t * t + 1.0
    } else if t < 2.0 {
        A * t * t * t - 5.0 * A * t * t + 8.0 * A * t - 4.0 * A
    } else {
        0.0
    }
}

fn resample_axis(len_in: usize, len_out: usize, get: impl Fn(usize) -> f64, out: &mut [f64]) {
    let scale = len_in as f64 / len_out as f64;
    for (d, slot) in out.iter_mut().enumerate() {
        let s = (d as f64 + 0.5) * scale - 0.5;
        let base = s.floor() as i64;
        let mut acc = 0.0;
        let mut wsum = 0.0;
        for k in -1..=2i64 {
            let idx = (base + k).clamp(0, len_in as i64 - 1) as usize;
            let w = catmull_rom(s - (base + k) as f64);
            acc += w * get(idx);
            wsum += w;
        }
        *slot = acc / wsum;
    }
}

/// Aspect-preserving bicubic resize to `target_height`; the no-op case is
/// returned byte-identical.
pub fn resize_to_height(line: &Raster, target_height: u32) -> Result<Raster, Rejection> {
    if line.is_empty() || target_height < 1 {
        return Err(Rejection::EmptyLine);
    }
    if line.height() == target_height {
        return Ok(line.clone());
    }
    let in_w = line.width() as usize;
    let in_h = line.height() as usize;
    let out_h = target_height as usize;
    let out_w = ((in_w as f64 * out_h as f64 / in_h as f64).round() as usize).max(1);
    let ch = line.channels() as usize;

    // horizontal pass then vertical pass, rounding only at the end
    let mut mid = vec![0.0f64; out_w * in_h * ch];
    let mut row = vec![0.0f64; out_w];
    for y in 0..in_h {
        for c in 0..ch {
            resample_axis(
                in_w,
                out_w,
                |x| line.get(x as u32, y as u32, c as u8) as f64,
                &mut row,
            );
            for x in 0..out_w {
                mid[(y * out_w + x) * ch + c] = row[x];
            }
        }
    }
    let mut out = Raster::new(out_w as u32, out_h as u32, line.channels());
    let mut col = vec![0.0f64; out_h];
    for x in 0..out_w {
        for c in 0..ch {
            resample_axis(in_h, out_h, |y| mid[(y * out_w + x) * ch + c], &mut col);
            for y in 0..out_h {
                out.put(x as u32, y as u32, c as u8, round_u8(col[y]));
            }
        }
    }
    Ok(out)
}

/// Full extraction chain: containment, min-area rect, rotation
/// compensation, crop, resize. Returns a [`Rejection`] instead of a raster
/// when the scene cannot yield a training line.
pub fn extract_line(frame: &AugmentedFrame, target_height: u32) -> Result<Raster, Rejection> {
    if !check_containment(&frame.quad, frame.image.width(), frame.image.height()) {
        return Err(Rejection::OutOfFrame);
    }
    let rect = min_area_rect(&frame.quad)?;
    let compensated = compensate_rotation(&frame.image, &rect);
    let cropped = crop_rect(&compensated, &rect)?;
    resize_to_height(&cropped, target_height)
}
