//! The adjusted map on the grid 1-skeleton: per-edge image polylines that
//! are straight near vertices (the cross chords) and track the target map
//! within a per-edge budget in between.

use super::{Crosses, EdgeClass, GridQ};
use crate::geometry::Point2;
use crate::maps::MapOracle;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Breakpoints of the map restricted to the segment `[p, q]`, spaced `rho`
/// apart in domain arclength (plus the exact endpoints).  Returns
/// `(t, point, image)` triples with `t` the segment parameter.
pub fn segment_interpolation(
    oracle: &dyn MapOracle,
    p: Point2,
    q: Point2,
    rho: f64,
) -> Vec<(f64, Point2, Point2)> {
    let len = p.dist(q);
    let mut ts = vec![0.0];
    if rho > 0.0 && len > 0.0 {
        let mut k = 1usize;
        loop {
            let t = k as f64 * rho / len;
            if t >= 1.0 - 1e-9 {
                break;
            }
            ts.push(t);
            k += 1;
        }
    }
    ts.push(1.0);
    ts.into_iter()
        .map(|t| {
            let x = p.lerp(q, t);
            (t, x, oracle.eval(x))
        })
        .collect()
}

/// Measured sup distance between the map and the chord of `[x0, x1]`,
/// parameter-matched, 8 interior probes.
fn chord_error(oracle: &dyn MapOracle, x0: Point2, i0: Point2, x1: Point2, i1: Point2) -> f64 {
    let mut worst = 0.0f64;
    for k in 1..=8 {
        let s = k as f64 / 9.0;
        let x = x0.lerp(x1, s);
        worst = worst.max(oracle.eval(x).dist(i0.lerp(i1, s)));
    }
    worst
}

/// Breakpoints of the map along `[p, q]` by dyadic bisection: an interval is
/// split while its measured chord error exceeds `delta`, floored so no
/// interval drops below `rho_pin` in domain length.  Adaptive, so an edge
/// that is smooth except near one point (a derivative kink of the map)
/// stays short instead of being refined uniformly.  Returns `(t, point,
/// image)` with exact endpoints.
pub fn adaptive_polyline(
    oracle: &dyn MapOracle,
    p: Point2,
    q: Point2,
    delta: f64,
    rho_pin: f64,
) -> Vec<(f64, Point2, Point2)> {
    let len = p.dist(q);
    let mut out: Vec<(f64, Point2, Point2)> = vec![(0.0, p, oracle.eval(p))];
    // Depth-first over [t0, t1], emitting right endpoints in order.
    let mut stack: Vec<(f64, f64)> = vec![(0.0, 1.0)];
    while let Some((t0, t1)) = stack.pop() {
        let x0 = p.lerp(q, t0);
        let x1 = p.lerp(q, t1);
        let (i0, i1) = (oracle.eval(x0), oracle.eval(x1));
        let width = (t1 - t0) * len;
        if width > 2.0 * rho_pin && chord_error(oracle, x0, i0, x1, i1) > delta {
            let tm = 0.5 * (t0 + t1);
            stack.push((tm, t1));
            stack.push((t0, tm));
        } else {
            let x = if t1 >= 1.0 { q } else { x1 };
            out.push((t1, x, oracle.eval(x)));
        }
    }
    out
}

/// The adjusted map on the skeleton: one image polyline per grid edge,
/// parameterized by the edge parameter from vertex `a` to vertex `b`.
pub struct GridMap {
    /// `(t, domain point, image)` per breakpoint, ascending `t`.
    pub polylines: Vec<Vec<(f64, Point2, Point2)>>,
    pub vertex_images: Vec<Point2>,
    /// Smallest breakpoint spacing per edge (0 where not applicable).
    pub rho_used: Vec<f64>,
}

impl GridMap {
    /// Image of the point at parameter `t` on edge `e` (linear between
    /// breakpoints).
    pub fn eval_edge(&self, e: usize, t: f64) -> Point2 {
        let pts = &self.polylines[e];
        let t = t.clamp(0.0, 1.0);
        let mut hi = match pts.binary_search_by(|probe| probe.0.partial_cmp(&t).unwrap()) {
            Ok(k) => return pts[k].2,
            Err(k) => k,
        };
        if hi == 0 {
            hi = 1;
        }
        if hi >= pts.len() {
            hi = pts.len() - 1;
        }
        let lo = hi - 1;
        let (t0, _, i0) = pts[lo];
        let (t1, _, i1) = pts[hi];
        i0.lerp(i1, (t - t0) / (t1 - t0))
    }

    /// Closed counterclockwise boundary chain of tiling square `s`:
    /// `(domain point, image)` per breakpoint, first point not repeated.
    pub fn square_boundary(&self, q: &GridQ, s: usize) -> Vec<(Point2, Point2)> {
        let mut out = Vec::new();
        for chain in &q.square_sides[s] {
            for &(e, fwd) in chain {
                let pts = &self.polylines[e];
                if fwd {
                    for &(_, x, img) in &pts[..pts.len() - 1] {
                        out.push((x, img));
                    }
                } else {
                    for &(_, x, img) in pts[1..].iter().rev() {
                        out.push((x, img));
                    }
                }
            }
        }
        out
    }
}

/// Builds the per-edge polylines from the crosses.
pub fn build_grid_map(
    oracle: &dyn MapOracle,
    q: &GridQ,
    crosses: &Crosses,
    l: f64,
) -> Result<GridMap, String> {
    let mut polylines: Vec<Vec<(f64, Point2, Point2)>> = Vec::with_capacity(q.edges.len());
    let mut rho_used = vec![0.0f64; q.edges.len()];
    for (id, edge) in q.edges.iter().enumerate() {
        let (pa, pb) = q.edge_endpoints(id);
        match edge.class {
            EdgeClass::EpsBoundary => {
                let (ci, cj) = edge.eps_cell.ok_or("eps edge without its cell")?;
                let r = q.r;
                let horiz = pa.y == pb.y;
                let (c1, c2) = if horiz {
                    (Point2::new(ci as f64 * r, pa.y), Point2::new((ci + 1) as f64 * r, pa.y))
                } else {
                    (Point2::new(pa.x, cj as f64 * r), Point2::new(pa.x, (cj + 1) as f64 * r))
                };
                let u1 = oracle.eval(c1);
                let u2 = oracle.eval(c2);
                let img = |p: Point2| -> Point2 {
                    let frac = if horiz { (p.x - c1.x) / r } else { (p.y - c1.y) / r };
                    if frac <= 1e-12 {
                        u1
                    } else if frac >= 1.0 - 1e-12 {
                        u2
                    } else {
                        u1.lerp(u2, frac)
                    }
                };
                polylines.push(vec![(0.0, pa, img(pa)), (1.0, pb, img(pb))]);
            }
            _ => {
                let cp_a = *crosses
                    .points
                    .get(&(id, edge.a))
                    .ok_or_else(|| format!("missing cross on edge {id} at vertex {}", edge.a))?;
                let cp_b = *crosses
                    .points
                    .get(&(id, edge.b))
                    .ok_or_else(|| format!("missing cross on edge {id} at vertex {}", edge.b))?;
                let delta_ab = crosses.xi[edge.a].min(crosses.xi[edge.b]) / (72.0 * l * l);
                let rho_pin = delta_ab / std::f64::consts::SQRT_2;
                let middle = adaptive_polyline(oracle, cp_a.x, cp_b.x, delta_ab, rho_pin);
                rho_used[id] = middle
                    .windows(2)
                    .map(|w| w[0].1.dist(w[1].1))
                    .fold(f64::INFINITY, f64::min);
                let mut pts = Vec::with_capacity(middle.len() + 2);
                pts.push((0.0, pa, crosses.vertex_images[edge.a]));
                pts.push((cp_a.t, cp_a.x, cp_a.image));
                let span = 1.0 - cp_a.t - cp_b.t;
                for &(s, x, img) in &middle[1..middle.len() - 1] {
                    pts.push((cp_a.t + s * span, x, img));
                }
                pts.push((1.0 - cp_b.t, cp_b.x, cp_b.image));
                pts.push((1.0, pb, crosses.vertex_images[edge.b]));
                debug_assert!(pts.windows(2).all(|w| w[0].0 < w[1].0));
                polylines.push(pts);
            }
        }
    }
    Ok(GridMap { polylines, vertex_images: crosses.vertex_images.clone(), rho_used })
}

/// Measured bi-Lipschitz ratios of the skeleton map over sampled point
/// pairs: same-edge pairs, pairs across edges sharing a vertex, and random
/// far pairs.  Returns `(min ratio, max ratio)`.
pub fn verify_grid_bilip(map: &GridMap, q: &GridQ, pairs: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    let ne = q.edges.len();
    if ne == 0 {
        return (1.0, 1.0);
    }
    let consider = |e1: usize, t1: f64, e2: usize, t2: f64, lo: &mut f64, hi: &mut f64| {
        let (a1, b1) = q.edge_endpoints(e1);
        let (a2, b2) = q.edge_endpoints(e2);
        let x1 = a1.lerp(b1, t1);
        let x2 = a2.lerp(b2, t2);
        let dx = x1.dist(x2);
        if dx < 1e-12 {
            return;
        }
        let dy = map.eval_edge(e1, t1).dist(map.eval_edge(e2, t2));
        let ratio = dy / dx;
        *lo = lo.min(ratio);
        *hi = hi.max(ratio);
    };
    for e in 0..ne {
        for _ in 0..8 {
            let t1: f64 = rng.gen();
            let t2: f64 = rng.gen();
            consider(e, t1, e, t2, &mut lo, &mut hi);
        }
    }
    for v in 0..q.vertices.len() {
        let inc = &q.vertex_edges[v];
        if inc.len() < 2 {
            continue;
        }
        for _ in 0..8 {
            let e1 = inc[rng.gen_range(0..inc.len())];
            let e2 = inc[rng.gen_range(0..inc.len())];
            if e1 == e2 {
                continue;
            }
            consider(e1, rng.gen(), e2, rng.gen(), &mut lo, &mut hi);
        }
    }
    for _ in 0..pairs {
        let e1 = rng.gen_range(0..ne);
        let e2 = rng.gen_range(0..ne);
        consider(e1, rng.gen(), e2, rng.gen(), &mut lo, &mut hi);
    }
    if lo.is_infinite() {
        (1.0, 1.0)
    } else {
        (lo, hi)
    }
}

/// Serializes the skeleton map, one line per edge:
/// `side <a> <b> : <t> <image_x> <image_y> ...`.
pub fn write_grid(map: &GridMap, q: &GridQ) -> String {
    let mut out = String::new();
    for (id, e) in q.edges.iter().enumerate() {
        out.push_str(&format!("side {} {} :", e.a, e.b));
        for (t, _, img) in &map.polylines[id] {
            out.push_str(&format!(" {} {} {}", t, img.x, img.y));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_crosses, build_grid, build_tiling};
    use crate::lebesgue::classify;
    use crate::maps::{Affine, Domain, FoldCandidate, Identity};

    #[test]
    fn breakpoints_at_arclength_multiples() {
        let pts = segment_interpolation(&Identity, Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), 0.3);
        let ts: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let want = [0.0, 0.3, 0.6, 0.9, 1.0];
        assert_eq!(ts.len(), want.len());
        for (got, w) in ts.iter().zip(want) {
            assert!((got - w).abs() < 1e-12, "{got} vs {w}");
        }
        for (t, x, img) in pts {
            assert!(x.dist(Point2::new(t, 0.0)) < 1e-15);
            assert_eq!(x, img);
        }
    }

    #[test]
    fn affine_edges_stay_single_chords() {
        let m = Affine::example();
        let p = Point2::new(0.1, 0.2);
        let q = Point2::new(0.4, 0.2);
        // Zero chord error: no refinement at all.
        let pts = adaptive_polyline(&m, p, q, 1e-9, 1e-4);
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[0].1, p);
        assert_eq!(pts[1].1, q);
    }

    #[test]
    fn refinement_concentrates_at_a_derivative_kink() {
        // This edge crosses the circle where the fold's rotation rate
        // switches on; chord error decays only linearly with spacing there,
        // so uniform spacing at the floor would need thousands of points.
        let m = FoldCandidate::default();
        let p = Point2::new(0.5, 0.2);
        let q = Point2::new(0.5, 0.3);
        let delta = 4.0e-6;
        let pin = delta / std::f64::consts::SQRT_2;
        let pts = adaptive_polyline(&m, p, q, delta, pin);
        assert!(pts.len() < 500, "adaptive refinement blew up: {}", pts.len());
        for w in pts.windows(2) {
            assert!(w[1].0 > w[0].0);
            let width = w[0].1.dist(w[1].1);
            assert!(
                width > 0.99 * pin,
                "interval {width} under the floor {pin}"
            );
            // Every accepted chord meets the budget unless it sits at the
            // floor (where the kink itself caps the possible error).
            if width > 2.0 * pin {
                let mut worst = 0.0f64;
                for k in 1..=32 {
                    let s = k as f64 / 33.0;
                    let x = w[0].1.lerp(w[1].1, s);
                    worst = worst.max(m.eval(x).dist(w[0].2.lerp(w[1].2, s)));
                }
                assert!(worst <= 4.0 * delta, "chord error {worst} vs {delta}");
            }
        }
    }

    fn full_grid(
        oracle: &dyn crate::maps::MapOracle,
        domain: &Domain,
        r: f64,
        delta: f64,
        l: f64,
    ) -> (GridQ, GridMap) {
        let c = classify(oracle, domain, r, delta, l, 2);
        let t = build_tiling(domain, &c, 2);
        let q = build_grid(oracle, domain, &c, &t);
        let crosses = build_crosses(oracle, domain, &q, l).unwrap();
        let map = build_grid_map(oracle, &q, &crosses, l).unwrap();
        (q, map)
    }

    #[test]
    fn identity_grid_map_is_the_identity_on_the_skeleton() {
        let (q, map) = full_grid(&Identity, &Domain::UnitSquare, 0.125, -1.0, 1.0);
        for (pts, _) in map.polylines.iter().zip(&q.edges) {
            for &(_, x, img) in pts {
                assert!(img.dist(x) < 1e-15);
            }
        }
        let (lo, hi) = verify_grid_bilip(&map, &q, 200, 7);
        assert!((lo - 1.0).abs() < 1e-9 && (hi - 1.0).abs() < 1e-9, "({lo}, {hi})");
    }

    #[test]
    fn eps_edges_carry_the_affine_side_values() {
        let m = Affine::example();
        let (q, map) = full_grid(&m, &Domain::UnitSquare, 0.125, 1e-9, 2.0);
        let mut saw_eps = false;
        for (id, e) in q.edges.iter().enumerate() {
            if e.class == EdgeClass::EpsBoundary {
                saw_eps = true;
                let pts = &map.polylines[id];
                assert_eq!(pts.len(), 2);
                for &(_, x, img) in pts {
                    assert!(img.dist(m.eval(x)) < 1e-12);
                }
            }
        }
        assert!(saw_eps);
    }

    #[test]
    fn fold_grid_map_ratios_are_sane() {
        let m = FoldCandidate::default();
        let l = m.lipschitz();
        let (q, map) = full_grid(&m, &Domain::UnitSquare, 0.0625, -1.0, l);
        for pts in &map.polylines {
            assert!(pts.windows(2).all(|w| w[0].0 < w[1].0));
        }
        let (lo, hi) = verify_grid_bilip(&map, &q, 500, 11);
        assert!(lo > 1.0 / (2.0 * l), "lower ratio {lo}");
        assert!(hi < 2.0 * l, "upper ratio {hi}");
    }

    #[test]
    fn square_boundary_chains_close_up() {
        let (q, map) = full_grid(&Identity, &Domain::Disk, 0.125, 1e-9, 1.0);
        for s in 0..q.square_sides.len() {
            let chain = map.square_boundary(&q, s);
            assert!(chain.len() >= 4);
            // Consecutive points distinct; the loop is implicitly closed.
            for w in chain.windows(2) {
                assert!((w[0].0).dist(w[1].0) > 0.0);
            }
            let poly = crate::geometry::Polygon::new(chain.iter().map(|c| c.0).collect());
            assert!(poly.signed_area() > 0.0);
        }
    }

    #[test]
    fn grid_dump_lists_every_edge() {
        let (q, map) = full_grid(&Identity, &Domain::UnitSquare, 0.25, -1.0, 1.0);
        let dump = write_grid(&map, &q);
        assert_eq!(dump.lines().count(), q.edges.len());
        assert!(dump.starts_with("side "));
        assert!(dump.contains(" : 0 "));
    }
}
