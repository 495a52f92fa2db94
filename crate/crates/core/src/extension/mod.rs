//! Per-square extension: given the adjusted map on a tiling square's
//! boundary (a closed polyline with prescribed images), produce a
//! piecewise-affine homeomorphism of the whole square onto the region
//! bounded by the image polygon, matching the boundary data exactly.

pub mod earclip;
pub mod overlay;

use thiserror::Error;

use crate::geometry::{predicates::SnapGrid, signed_area, Point2, Polygon, Triangle};
use crate::io::MeshData;

#[derive(Debug, Error)]
pub enum ExtendError {
    #[error("boundary image is not a simple polygon")]
    NonSimpleImage,
    #[error("boundary data is degenerate: {0}")]
    Degenerate(String),
    #[error("ear clipping stalled: {0}")]
    EarStuck(String),
    #[error("overlay cell construction failed: {0}")]
    BadCell(String),
    #[error("extension produced a flipped or degenerate triangle: {0}")]
    Flipped(String),
    #[error("extension mesh does not tile its region: {0}")]
    AreaMismatch(String),
}

/// Extends the boundary chain `(domain point, image)` of one tiling square
/// (counterclockwise, closed implicitly) to a triangulated map of the full
/// square.  The first `chain.len()` mesh vertices are the chain, in order.
///
/// Fast path: if the image polygon is star-shaped around its vertex
/// average, a matched pair of fans suffices.  Otherwise the map is built
/// by composing two fans through a convex reference polygon.
pub fn extend_square(chain: &[(Point2, Point2)], center: Point2) -> Result<MeshData, ExtendError> {
    let n = chain.len();
    if n < 3 {
        return Err(ExtendError::Degenerate(format!("boundary chain has {n} points")));
    }
    let domain_pts: Vec<Point2> = chain.iter().map(|c| c.0).collect();
    let image_pts: Vec<Point2> = chain.iter().map(|c| c.1).collect();
    for i in 0..n {
        let j = (i + 1) % n;
        if domain_pts[i] == domain_pts[j] || image_pts[i] == image_pts[j] {
            return Err(ExtendError::Degenerate(format!("repeated breakpoint at {i}")));
        }
    }
    let img_poly = Polygon::new(image_pts.clone());
    if img_poly.signed_area() <= 0.0 {
        return Err(ExtendError::Flipped("boundary image is not counterclockwise".into()));
    }
    let snap = SnapGrid::for_diameter(img_poly.diameter());
    if !img_poly.is_simple(&snap) {
        return Err(ExtendError::NonSimpleImage);
    }

    // Fan fast path: positive fan areas around the vertex average mean the
    // average sits in the polygon's kernel, so the fan is a triangulation.
    let mut apex = Point2::new(0.0, 0.0);
    for &p in &image_pts {
        apex = apex + p;
    }
    apex = apex / n as f64;
    let scale = img_poly.diameter();
    let tol = 1e-12 * scale * scale;
    let star = (0..n).all(|i| signed_area(image_pts[i], image_pts[(i + 1) % n], apex) > tol);
    if star {
        let mut ok = true;
        for i in 0..n {
            if signed_area(domain_pts[i], domain_pts[(i + 1) % n], center) <= 0.0 {
                ok = false;
                break;
            }
        }
        if ok {
            let mut vertices = domain_pts.clone();
            let mut images = image_pts.clone();
            vertices.push(center);
            images.push(apex);
            let triangles: Vec<[usize; 3]> = (0..n).map(|i| [i, (i + 1) % n, n]).collect();
            return Ok(MeshData { vertices, images, triangles });
        }
    }
    overlay::overlay_extension(&domain_pts, &image_pts, center)
}

/// Largest of `max(|M|, |M^-1|)` over the affine pieces of a mesh, with
/// operator norms; errors on flipped or degenerate pieces.
pub fn measured_bilip(
    vertices: &[Point2],
    images: &[Point2],
    triangles: &[[usize; 3]],
) -> Result<f64, ExtendError> {
    let mut worst = 0.0f64;
    for t in triangles {
        let dom = Triangle::new(vertices[t[0]], vertices[t[1]], vertices[t[2]]);
        let img = Triangle::new(images[t[0]], images[t[1]], images[t[2]]);
        let (m, _) = dom
            .affine_to(&img)
            .ok_or_else(|| ExtendError::Flipped(format!("degenerate domain triangle {t:?}")))?;
        if m.det() <= 0.0 {
            return Err(ExtendError::Flipped(format!("orientation reversed on {t:?}")));
        }
        let (smax, smin) = m.singular_values();
        if smin <= 0.0 {
            return Err(ExtendError::Flipped(format!("singular piece on {t:?}")));
        }
        worst = worst.max(smax.max(1.0 / smin));
    }
    Ok(worst)
}
