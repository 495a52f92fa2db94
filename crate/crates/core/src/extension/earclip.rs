//! Ear-clip triangulation of a simple polygon with round-robin ear
//! selection, so no single vertex accumulates a long thin fan.

use crate::geometry::{signed_area, Point2};

/// `p` inside or on the closed counterclockwise triangle `(a, b, c)`.
/// `tol` widens the boundary band so points within `tol` of an edge
/// count as on it (conservative: blocks ears rather than clipping them).
fn in_or_on(a: Point2, b: Point2, c: Point2, p: Point2, tol: f64) -> bool {
    signed_area(a, b, p) >= -tol && signed_area(b, c, p) >= -tol && signed_area(c, a, p) >= -tol
}

/// Triangulates a simple counterclockwise polygon, returning index triples
/// into `pts`.  Every input vertex stays a mesh vertex; collinear boundary
/// vertices are never clipped as zero-area ears, they end up shared by
/// neighboring triangles instead.
pub fn earclip(pts: &[Point2]) -> Result<Vec<[usize; 3]>, String> {
    let n = pts.len();
    if n < 3 {
        return Err(format!("polygon needs at least 3 vertices, got {n}"));
    }
    let mut scale = 0.0f64;
    for w in pts.windows(2) {
        scale = scale.max((w[1] - w[0]).norm());
    }
    let area_tol = 1e-14 * scale * scale;

    let mut next: Vec<usize> = (0..n).map(|i| (i + 1) % n).collect();
    let mut prev: Vec<usize> = (0..n).map(|i| (i + n - 1) % n).collect();
    let mut live = n;
    let mut out = Vec::with_capacity(n - 2);

    let mut cur = 0usize;
    let mut since_ear = 0usize;
    while live > 3 {
        let (p, q) = (prev[cur], next[cur]);
        let mut ear = signed_area(pts[p], pts[cur], pts[q]) > area_tol;
        if ear {
            let mut v = next[q];
            while v != p {
                if in_or_on(pts[p], pts[cur], pts[q], pts[v], area_tol) {
                    ear = false;
                    break;
                }
                v = next[v];
            }
        }
        if ear {
            out.push([p, cur, q]);
            next[p] = q;
            prev[q] = p;
            live -= 1;
            since_ear = 0;
            cur = q;
        } else {
            cur = next[cur];
            since_ear += 1;
            if since_ear > live {
                return Err("no ear found; polygon is degenerate or not simple".into());
            }
        }
    }
    let p = prev[cur];
    let q = next[cur];
    if signed_area(pts[p], pts[cur], pts[q]) <= area_tol {
        return Err("final triangle is degenerate".into());
    }
    out.push([p, cur, q]);
    Ok(out)
}
