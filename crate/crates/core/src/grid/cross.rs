//! Cross points: for every grid vertex, a point on each incident interior
//! edge close enough that the straight chord from the vertex image to the
//! point image stays inside the image region.
//!
//! The chord lies in the ball of radius `xi` around the vertex image, and
//! the `xi` are small enough that balls of adjacent vertices are disjoint;
//! this is what keeps the skeleton map injective near vertices.

use super::{EdgeClass, GridQ};
use crate::geometry::predicates::{point_in_polygon, Location};
use crate::geometry::Point2;
use crate::maps::{Domain, MapOracle};
use std::collections::HashMap;

/// Cross point on one edge incident to one vertex.
#[derive(Debug, Clone, Copy)]
pub struct CrossPoint {
    /// Fraction of the edge length from the vertex, in `(0, 1/3]`.
    pub t: f64,
    pub x: Point2,
    pub image: Point2,
}

pub struct Crosses {
    /// Image of every grid vertex.
    pub vertex_images: Vec<Point2>,
    /// Ball radius per vertex (0 where no interior edge is incident).
    pub xi: Vec<f64>,
    /// Vertices whose radius is pinned (on the accepted-region boundary)
    /// and must not shrink.
    pub forced: Vec<bool>,
    /// `(edge, vertex) -> cross point`.
    pub points: HashMap<(usize, usize), CrossPoint>,
}

/// Largest fraction `t <= cap` such that the image of the edge segment
/// `[v, v + t (w - v)]` stays within `xi` of the vertex image: coarse scan
/// at 1e-3 steps, then bisection to 1e-10.
fn first_exit(
    oracle: &dyn MapOracle,
    v: Point2,
    w: Point2,
    v_img: Point2,
    xi: f64,
    cap: f64,
) -> f64 {
    let gap = |s: f64| -> f64 { oracle.eval(v.lerp(w, s)).dist(v_img) - xi };
    let step = 1e-3;
    let mut prev = 0.0;
    let mut s = step;
    while s < cap {
        if gap(s) > 0.0 {
            // Bisect the bracket [prev, s]: gap(prev) <= 0 < gap(s).
            let (mut lo, mut hi) = (prev, s);
            while hi - lo > 1e-10 {
                let mid = 0.5 * (lo + hi);
                if gap(mid) > 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return lo.max(1e-12);
        }
        prev = s;
        s += step;
    }
    if gap(cap) > 0.0 {
        let (mut lo, mut hi) = (prev, cap);
        while hi - lo > 1e-10 {
            let mid = 0.5 * (lo + hi);
            if gap(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        return lo.max(1e-12);
    }
    cap
}

/// Checks that the open chord `(a_img, b_img]` stays inside the image
/// region, sampling 16 points against the dense boundary polygon.
fn chord_inside(q: &GridQ, a_img: Point2, b_img: Point2) -> bool {
    for k in 1..=16 {
        let p = a_img.lerp(b_img, k as f64 / 16.0);
        if point_in_polygon(&q.image_snap, &q.image_boundary.points, p) == Location::Outside {
            return false;
        }
    }
    true
}

/// Builds all cross points.  `l` is the declared bi-Lipschitz constant of
/// the target map.
pub fn build_crosses(
    oracle: &dyn MapOracle,
    domain: &Domain,
    q: &GridQ,
    l: f64,
) -> Result<Crosses, String> {
    let nv = q.vertices.len();
    let vertex_images: Vec<Point2> = q.vertices.iter().map(|&p| oracle.eval(p)).collect();
    let mut xi = vec![0.0f64; nv];
    let mut forced = vec![false; nv];
    let mut points: HashMap<(usize, usize), CrossPoint> = HashMap::new();

    for v in 0..nv {
        let interior_edges: Vec<usize> = q.vertex_edges[v]
            .iter()
            .copied()
            .filter(|&e| q.edges[e].class != EdgeClass::EpsBoundary)
            .collect();
        if interior_edges.is_empty() {
            continue;
        }
        let min_len = q.vertex_edges[v]
            .iter()
            .map(|&e| q.edge_len(e))
            .fold(f64::INFINITY, f64::min);
        forced[v] = q.vertex_on_eps[v];
        let mut radius = if forced[v] {
            min_len.min(q.r) / (3.0 * l)
        } else {
            (min_len / (3.0 * l)).min(q.r / (2.0 * l) * (1.0 - 1e-6))
        };
        // Whole ball inside the image region: chord checks are free.
        let clear = domain.dist_to_boundary(q.vertices[v]) / l;

        'shrink: for _attempt in 0..60 {
            let mut built: Vec<(usize, CrossPoint)> = Vec::with_capacity(interior_edges.len());
            for &e in &interior_edges {
                let (pa, pb) = q.edge_endpoints(e);
                let (from, to) = if q.edges[e].a == v { (pa, pb) } else { (pb, pa) };
                let t = first_exit(oracle, from, to, vertex_images[v], radius, 1.0 / 3.0);
                let x = from.lerp(to, t);
                let image = oracle.eval(x);
                let exempt = q.edges[e].class == EdgeClass::QPrimeBoundary;
                if !exempt && clear <= radius && !chord_inside(q, vertex_images[v], image) {
                    if forced[v] {
                        return Err(format!(
                            "cross chord leaves the image region at pinned vertex {v}"
                        ));
                    }
                    radius *= 0.5;
                    if radius < 1e-14 {
                        return Err(format!("cross radius underflow at vertex {v}"));
                    }
                    continue 'shrink;
                }
                built.push((e, CrossPoint { t, x, image }));
            }
            for (e, cp) in built {
                points.insert((e, v), cp);
            }
            xi[v] = radius;
            break;
        }
        if xi[v] == 0.0 {
            return Err(format!("failed to fit a cross at vertex {v}"));
        }
    }

    // Adjacent vertex balls must be disjoint, which the radius caps
    // guarantee; verify on every interior edge.
    for (id, e) in q.edges.iter().enumerate() {
        if xi[e.a] > 0.0 && xi[e.b] > 0.0 {
            let d = vertex_images[e.a].dist(vertex_images[e.b]);
            if d <= xi[e.a] + xi[e.b] {
                return Err(format!(
                    "vertex balls overlap across edge {id}: |u(a)-u(b)| = {d}, radii {} + {}",
                    xi[e.a], xi[e.b]
                ));
            }
        }
    }

    Ok(Crosses { vertex_images, xi, forced, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, build_tiling};
    use crate::lebesgue::classify;
    use crate::maps::{FoldCandidate, Identity, MapOracle, ShearSine};

    fn grid_for(
        oracle: &dyn MapOracle,
        domain: &Domain,
        r: f64,
        delta: f64,
        l: f64,
    ) -> (crate::lebesgue::LebesgueClassification, GridQ) {
        let c = classify(oracle, domain, r, delta, l, 2);
        let t = build_tiling(domain, &c, 2);
        let q = build_grid(oracle, domain, &c, &t);
        (c, q)
    }

    #[test]
    fn identity_crosses_reach_the_cap() {
        let (_c, q) = grid_for(&Identity, &Domain::UnitSquare, 0.125, -1.0, 1.0);
        let crosses = build_crosses(&Identity, &Domain::UnitSquare, &q, 1.0).unwrap();
        // Interior vertex: xi = r/3 and the exit scan hits the 1/3 cap.
        let v = q
            .vertices
            .iter()
            .position(|p| p.dist(Point2::new(0.5, 0.5)) < 1e-12)
            .unwrap();
        assert!((crosses.xi[v] - q.r / 3.0).abs() < 1e-12);
        for &e in &q.vertex_edges[v] {
            let cp = crosses.points[&(e, v)];
            assert!((cp.t - 1.0 / 3.0).abs() < 1e-9);
            assert!(cp.image.dist(cp.x) < 1e-12); // identity
        }
    }

    #[test]
    fn forced_vertices_get_pinned_radius() {
        let (c, q) = grid_for(&Identity, &Domain::UnitSquare, 0.125, 1e-9, 1.0);
        assert!(!c.accepted.is_empty());
        let crosses = build_crosses(&Identity, &Domain::UnitSquare, &q, 1.0).unwrap();
        let mut saw_forced = false;
        for v in 0..q.vertices.len() {
            if q.vertex_on_eps[v] && crosses.xi[v] > 0.0 {
                saw_forced = true;
                assert!(crosses.forced[v]);
                assert!((crosses.xi[v] - q.r / 3.0).abs() < 1e-12);
            }
        }
        assert!(saw_forced);
    }

    #[test]
    fn cross_points_stay_within_the_ball() {
        let maps: Vec<Box<dyn MapOracle>> = vec![
            Box::new(ShearSine::default()),
            Box::new(FoldCandidate::default()),
        ];
        for m in &maps {
            let l = m.lipschitz();
            let (_c, q) = grid_for(m.as_ref(), &Domain::UnitSquare, 0.0625, -1.0, l);
            let crosses = build_crosses(m.as_ref(), &Domain::UnitSquare, &q, l).unwrap();
            for (&(_e, v), cp) in &crosses.points {
                assert!(cp.t > 0.0 && cp.t <= 1.0 / 3.0 + 1e-12);
                let d = cp.image.dist(crosses.vertex_images[v]);
                assert!(
                    d <= crosses.xi[v] + 1e-9,
                    "{}: cross point at distance {d} exceeds xi {}",
                    m.name(),
                    crosses.xi[v]
                );
            }
        }
    }

    #[test]
    fn ball_disjointness_holds_on_every_edge() {
        let m = FoldCandidate::default();
        let l = m.lipschitz();
        let (_c, q) = grid_for(&m, &Domain::UnitSquare, 0.125, -1.0, l);
        let crosses = build_crosses(&m, &Domain::UnitSquare, &q, l).unwrap();
        for e in &q.edges {
            if crosses.xi[e.a] > 0.0 && crosses.xi[e.b] > 0.0 {
                let d = crosses.vertex_images[e.a].dist(crosses.vertex_images[e.b]);
                assert!(d > crosses.xi[e.a] + crosses.xi[e.b]);
            }
        }
    }

    #[test]
    fn disk_grid_builds_crosses() {
        let (_c, q) = grid_for(&Identity, &Domain::Disk, 0.125, 1e-9, 1.0);
        let crosses = build_crosses(&Identity, &Domain::Disk, &q, 1.0).unwrap();
        assert!(!crosses.points.is_empty());
    }
}
