//! Square tilings of the region left over after classification, and the
//! grid graph whose 1-skeleton carries the adjusted map.
//!
//! Aligned polygonal domains tile exactly with side-`r` squares.  Curved
//! domains use a 2:1-balanced quadtree truncated at a maximum depth; the
//! thin uncovered margin along the boundary is reported as the sliver.

pub mod cross;
pub mod interp;

pub use cross::{build_crosses, CrossPoint, Crosses};
pub use interp::{build_grid_map, segment_interpolation, verify_grid_bilip, write_grid, GridMap};

use crate::geometry::predicates::{Location, SnapGrid};
use crate::geometry::{Point2, Polygon, Square};
use crate::lebesgue::LebesgueClassification;
use crate::maps::{Domain, MapOracle};
use std::collections::{HashMap, HashSet};

/// One square of the tiling; `(i, j)` index the corner lattice at the
/// square's own depth, so the side is `r / 2^depth` and the southwest
/// corner sits at `(i, j) * side`.
#[derive(Debug, Clone)]
pub struct TileSquare {
    pub depth: u32,
    pub i: i64,
    pub j: i64,
    pub square: Square,
}

fn tile_square(r: f64, depth: u32, i: i64, j: i64) -> TileSquare {
    let side = r / (1u64 << depth) as f64;
    let square = Square::new(Point2::new((i as f64 + 0.5) * side, (j as f64 + 0.5) * side), side);
    TileSquare { depth, i, j, square }
}

#[derive(Debug, Clone)]
pub struct Tiling {
    pub r: f64,
    pub squares: Vec<TileSquare>,
    /// Domain area covered by neither accepted cells nor tiling squares.
    pub sliver_area: f64,
}

fn box_fully_outside(domain: &Domain, center: Point2, half: f64) -> bool {
    match domain {
        Domain::Disk => {
            let dx = ((center.x - 0.5).abs() - half).max(0.0);
            let dy = ((center.y - 0.5).abs() - half).max(0.0);
            (dx * dx + dy * dy).sqrt() >= 0.5
        }
        // Conservative default: never claim outside, the recursion then
        // bottoms out at max depth and the cell lands in the sliver.
        _ => false,
    }
}

/// Tiles the closure of the domain minus the accepted region.
pub fn build_tiling(domain: &Domain, class: &LebesgueClassification, max_depth: u32) -> Tiling {
    let r = class.r;
    let n = class.n as i64;
    let aligned = domain
        .right_polygon()
        .map(|rp| rp.aligned_to(r, 1e-9))
        .unwrap_or(false);
    let mut squares = Vec::new();
    if aligned {
        for i in 0..n {
            for j in 0..n {
                if class.is_accepted(i as i32, j as i32) {
                    continue;
                }
                let t = tile_square(r, 0, i, j);
                if domain.contains(t.square.center) {
                    squares.push(t);
                }
            }
        }
    } else {
        fn visit(
            domain: &Domain,
            r: f64,
            depth: u32,
            max_depth: u32,
            i: i64,
            j: i64,
            out: &mut Vec<TileSquare>,
        ) {
            let t = tile_square(r, depth, i, j);
            let half = 0.5 * t.square.side;
            if box_fully_outside(domain, t.square.center, half) {
                return;
            }
            if domain.box_fits(t.square.center, half) {
                out.push(t);
                return;
            }
            if depth == max_depth {
                return; // sliver
            }
            for di in 0..2 {
                for dj in 0..2 {
                    visit(domain, r, depth + 1, max_depth, 2 * i + di, 2 * j + dj, out);
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                if class.is_accepted(i as i32, j as i32) {
                    continue;
                }
                visit(domain, r, 0, max_depth, i, j, &mut squares);
            }
        }
        balance(&mut squares, r);
    }
    let covered: f64 = squares.iter().map(|s| s.square.side * s.square.side).sum();
    let sliver_area =
        (domain.area() - class.accepted.len() as f64 * r * r - covered).max(0.0);
    Tiling { r, squares, sliver_area }
}

/// Enforces the 2:1 rule: no square may share a side with one at depth
/// difference two or more; violators split until the rule holds.
fn balance(squares: &mut Vec<TileSquare>, r: f64) {
    loop {
        let dmax = squares.iter().map(|s| s.depth).max().unwrap_or(0);
        // Integer boxes at the finest scale present.
        let boxes: Vec<(i64, i64, i64, i64)> = squares
            .iter()
            .map(|s| {
                let u = 1i64 << (dmax - s.depth);
                (s.i * u, s.j * u, (s.i + 1) * u, (s.j + 1) * u)
            })
            .collect();
        let side_adjacent = |a: &(i64, i64, i64, i64), b: &(i64, i64, i64, i64)| -> bool {
            let x_touch = a.2 == b.0 || b.2 == a.0;
            let y_touch = a.3 == b.1 || b.3 == a.1;
            let x_overlap = a.2.min(b.2) > a.0.max(b.0);
            let y_overlap = a.3.min(b.3) > a.1.max(b.1);
            (x_touch && y_overlap) || (y_touch && x_overlap)
        };
        let mut to_split: HashSet<usize> = HashSet::new();
        for p in 0..squares.len() {
            for q in 0..squares.len() {
                if squares[q].depth >= squares[p].depth + 2
                    && side_adjacent(&boxes[p], &boxes[q])
                {
                    to_split.insert(p);
                    break;
                }
            }
        }
        if to_split.is_empty() {
            return;
        }
        let mut next = Vec::with_capacity(squares.len() + 3 * to_split.len());
        for (idx, s) in squares.drain(..).enumerate() {
            if to_split.contains(&idx) {
                for di in 0..2 {
                    for dj in 0..2 {
                        next.push(tile_square(r, s.depth + 1, 2 * s.i + di, 2 * s.j + dj));
                    }
                }
            } else {
                next.push(s);
            }
        }
        *squares = next;
    }
}

/// Classification of a grid edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeClass {
    /// Interior edge away from the accepted region: carries the full
    /// cross-and-breakpoints interpolation.
    QPrime,
    /// Edge on the domain boundary: interpolated the same way but exempt
    /// from strict interior checks (its image polyline *is* the piecewise
    /// boundary of the approximated image).
    QPrimeBoundary,
    /// Edge on the boundary of the accepted region: the interpolant is
    /// affine along the full side of the accepted cell, no breakpoints.
    EpsBoundary,
}

#[derive(Debug, Clone)]
pub struct GridEdge {
    pub a: usize,
    pub b: usize,
    pub class: EdgeClass,
    /// Accepted cell supplying the affine values of an `EpsBoundary` edge.
    pub eps_cell: Option<(i32, i32)>,
}

/// Ordered traversal of one square side: `(edge id, forward)` per sub-edge,
/// where `forward` means the stored `a -> b` direction agrees with the
/// counterclockwise traversal of the square.
pub type SideChain = Vec<(usize, bool)>;

/// The grid graph: vertices, classified edges, per-square boundary chains.
pub struct GridQ {
    pub r: f64,
    pub vertices: Vec<Point2>,
    pub edges: Vec<GridEdge>,
    pub vertex_edges: Vec<Vec<usize>>,
    /// Vertex lies on the boundary of an accepted cell.
    pub vertex_on_eps: Vec<bool>,
    /// Vertex lies on the domain boundary.
    pub vertex_on_boundary: Vec<bool>,
    /// Per tiling square: the four sides (bottom, right, top, left) in
    /// counterclockwise order.
    pub square_sides: Vec<[SideChain; 4]>,
    pub snap: SnapGrid,
    /// Dense polygonal approximation of the image-domain boundary.
    pub image_boundary: Polygon,
    pub image_snap: SnapGrid,
}

impl GridQ {
    pub fn edge_endpoints(&self, e: usize) -> (Point2, Point2) {
        (self.vertices[self.edges[e].a], self.vertices[self.edges[e].b])
    }

    pub fn edge_len(&self, e: usize) -> f64 {
        let (a, b) = self.edge_endpoints(e);
        a.dist(b)
    }
}

fn classify_edge(
    _domain: &Domain,
    class: &LebesgueClassification,
    snap: &SnapGrid,
    boundary: Option<&Polygon>,
    a: Point2,
    b: Point2,
) -> (EdgeClass, Option<(i32, i32)>) {
    let m = (a + b) * 0.5;
    let r = class.r;
    let horiz = a.y == b.y;
    let line = if horiz { m.y / r } else { m.x / r };
    if (line - line.round()).abs() < 1e-9 {
        let k = line.round() as i32;
        let cell = if horiz { (m.x / r).floor() as i32 } else { (m.y / r).floor() as i32 };
        let (hi, lo) = if horiz {
            ((cell, k), (cell, k - 1))
        } else {
            ((k, cell), (k - 1, cell))
        };
        let hi_acc = class.is_accepted(hi.0, hi.1);
        let lo_acc = class.is_accepted(lo.0, lo.1);
        debug_assert!(!(hi_acc && lo_acc), "edge between two accepted cells");
        if hi_acc {
            return (EdgeClass::EpsBoundary, Some(hi));
        }
        if lo_acc {
            return (EdgeClass::EpsBoundary, Some(lo));
        }
    }
    if let Some(poly) = boundary {
        if poly.locate(snap, m) == Location::Boundary {
            return (EdgeClass::QPrimeBoundary, None);
        }
    }
    (EdgeClass::QPrime, None)
}

/// Builds the grid graph of a tiling: deduplicated vertices, sides split at
/// hanging vertices, classified edges, boundary chains per square.
pub fn build_grid(
    oracle: &dyn MapOracle,
    domain: &Domain,
    class: &LebesgueClassification,
    tiling: &Tiling,
) -> GridQ {
    let snap = SnapGrid::for_diameter(2.0);
    let mut vertex_ids: HashMap<(i64, i64), usize> = HashMap::new();
    let mut vertices: Vec<Point2> = Vec::new();
    let intern = |p: Point2, vertex_ids: &mut HashMap<(i64, i64), usize>, vertices: &mut Vec<Point2>| -> usize {
        let key = snap.snap(p);
        *vertex_ids.entry(key).or_insert_with(|| {
            vertices.push(p);
            vertices.len() - 1
        })
    };
    // Corner coordinates computed straight from lattice indices: k * side is
    // the same float for every (k, depth) pair naming the same point, so
    // vertices shared across depths (and with the accepted-cell mesh, which
    // uses i * r) agree bitwise, not merely within snap tolerance.
    let lattice_corners = |s: &TileSquare| -> [Point2; 4] {
        let side = tiling.r / (1u64 << s.depth) as f64;
        let at = |i: i64, j: i64| Point2::new(i as f64 * side, j as f64 * side);
        [
            at(s.i, s.j),
            at(s.i + 1, s.j),
            at(s.i + 1, s.j + 1),
            at(s.i, s.j + 1),
        ]
    };
    for s in &tiling.squares {
        for c in lattice_corners(s) {
            intern(c, &mut vertex_ids, &mut vertices);
        }
    }
    // Row/column indexes of vertices for splitting sides at hanging points.
    let mut by_y: HashMap<i64, Vec<(i64, usize)>> = HashMap::new();
    let mut by_x: HashMap<i64, Vec<(i64, usize)>> = HashMap::new();
    for (idx, &p) in vertices.iter().enumerate() {
        let (sx, sy) = snap.snap(p);
        by_y.entry(sy).or_default().push((sx, idx));
        by_x.entry(sx).or_default().push((sy, idx));
    }
    for v in by_y.values_mut().chain(by_x.values_mut()) {
        v.sort_unstable();
    }

    let boundary_poly = domain.right_polygon().map(|rp| rp.poly);
    let mut edge_ids: HashMap<(usize, usize), usize> = HashMap::new();
    let mut edges: Vec<GridEdge> = Vec::new();
    let mut square_sides: Vec<[SideChain; 4]> = Vec::with_capacity(tiling.squares.len());

    for s in &tiling.squares {
        let corners = lattice_corners(s);
        let mut sides: [SideChain; 4] = Default::default();
        for (side_idx, chain) in sides.iter_mut().enumerate() {
            let from = corners[side_idx];
            let to = corners[(side_idx + 1) % 4];
            let horiz = from.y == to.y;
            // Vertices on the closed side, ordered along the traversal.
            let onside: Vec<usize> = if horiz {
                let (sy, sx0) = (snap.snap(from).1, snap.snap(from).0);
                let sx1 = snap.snap(to).0;
                let (lo, hi) = (sx0.min(sx1), sx0.max(sx1));
                let mut ids: Vec<(i64, usize)> = by_y[&sy]
                    .iter()
                    .filter(|&&(x, _)| x >= lo && x <= hi)
                    .copied()
                    .collect();
                if sx0 > sx1 {
                    ids.reverse();
                }
                ids.into_iter().map(|(_, idx)| idx).collect()
            } else {
                let (sx, sy0) = (snap.snap(from).0, snap.snap(from).1);
                let sy1 = snap.snap(to).1;
                let (lo, hi) = (sy0.min(sy1), sy0.max(sy1));
                let mut ids: Vec<(i64, usize)> = by_x[&sx]
                    .iter()
                    .filter(|&&(y, _)| y >= lo && y <= hi)
                    .copied()
                    .collect();
                if sy0 > sy1 {
                    ids.reverse();
                }
                ids.into_iter().map(|(_, idx)| idx).collect()
            };
            debug_assert!(onside.len() >= 2);
            for w in onside.windows(2) {
                let (u, v) = (w[0], w[1]);
                let key = (u.min(v), u.max(v));
                let id = *edge_ids.entry(key).or_insert_with(|| {
                    let (class_kind, eps_cell) = classify_edge(
                        domain,
                        class,
                        &snap,
                        boundary_poly.as_ref(),
                        vertices[key.0],
                        vertices[key.1],
                    );
                    edges.push(GridEdge { a: key.0, b: key.1, class: class_kind, eps_cell });
                    edges.len() - 1
                });
                chain.push((id, u == key.0));
            }
        }
        square_sides.push(sides);
    }

    let mut vertex_edges: Vec<Vec<usize>> = vec![Vec::new(); vertices.len()];
    for (id, e) in edges.iter().enumerate() {
        vertex_edges[e.a].push(id);
        vertex_edges[e.b].push(id);
    }
    for list in &mut vertex_edges {
        list.sort_unstable();
        list.dedup();
    }

    let r = class.r;
    let vertex_on_eps: Vec<bool> = vertices
        .iter()
        .map(|&p| {
            let cands = |c: f64| -> Vec<i32> {
                let f = c / r;
                let fl = f.floor();
                if (f - fl).abs() < 1e-9 {
                    vec![fl as i32 - 1, fl as i32]
                } else if (f - fl - 1.0).abs() < 1e-9 {
                    vec![fl as i32, fl as i32 + 1]
                } else {
                    vec![fl as i32]
                }
            };
            cands(p.x)
                .into_iter()
                .any(|i| cands(p.y).iter().any(|&j| class.is_accepted(i, j)))
        })
        .collect();
    let vertex_on_boundary: Vec<bool> = vertices
        .iter()
        .map(|&p| match &boundary_poly {
            Some(poly) => poly.locate(&snap, p) == Location::Boundary,
            None => domain.dist_to_boundary(p) <= 0.0,
        })
        .collect();

    let image_pts: Vec<Point2> = domain
        .boundary_polyline(2048)
        .into_iter()
        .map(|p| oracle.eval(p))
        .collect();
    let image_boundary = Polygon::new(image_pts);
    let image_snap = SnapGrid::for_diameter(image_boundary.diameter().max(1e-9) * 2.0);

    GridQ {
        r,
        vertices,
        edges,
        vertex_edges,
        vertex_on_eps,
        vertex_on_boundary,
        square_sides,
        snap,
        image_boundary,
        image_snap,
    }
}
