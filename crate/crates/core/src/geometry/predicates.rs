//! Exact orientation and intersection predicates.
//!
//! Coordinates are snapped to a uniform grid (about 2^-40 of the working
//! diameter) and all decisions are made with i128 integer arithmetic, so
//! orientation, segment intersection, point location and simplicity tests
//! are exact on the snapped configuration.  Constructions keep feature
//! separations many orders of magnitude above the snap step, so snapping
//! never merges distinct features.

use super::Point2;

/// Uniform snapping grid: `snap` maps a point to integer grid coordinates.
#[derive(Debug, Clone, Copy)]
pub struct SnapGrid {
    pub origin: Point2,
    pub step: f64,
}

impl SnapGrid {
    /// Grid tuned for configurations of the given diameter (step is
    /// `diameter * 2^-40`).
    pub fn for_diameter(diameter: f64) -> Self {
        let d = if diameter.is_finite() && diameter > 0.0 { diameter } else { 1.0 };
        SnapGrid { origin: Point2::new(0.0, 0.0), step: d * (0.5f64).powi(40) }
    }

    pub fn snap(&self, p: Point2) -> (i64, i64) {
        let x = ((p.x - self.origin.x) / self.step).round();
        let y = ((p.y - self.origin.y) / self.step).round();
        debug_assert!(x.abs() < 9.0e15 && y.abs() < 9.0e15, "point far outside snap range");
        (x as i64, y as i64)
    }

    pub fn unsnap(&self, s: (i64, i64)) -> Point2 {
        Point2::new(
            self.origin.x + s.0 as f64 * self.step,
            self.origin.y + s.1 as f64 * self.step,
        )
    }
}

/// Sign of the orientation determinant of `(a, b, c)`: +1 counterclockwise,
/// -1 clockwise, 0 collinear.  Exact.
pub fn orient_i64(a: (i64, i64), b: (i64, i64), c: (i64, i64)) -> i32 {
    let v = (b.0 - a.0) as i128 * (c.1 - a.1) as i128 - (b.1 - a.1) as i128 * (c.0 - a.0) as i128;
    match v.cmp(&0) {
        std::cmp::Ordering::Greater => 1,
        std::cmp::Ordering::Less => -1,
        std::cmp::Ordering::Equal => 0,
    }
}

/// How two closed segments meet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegKind {
    /// No common point.
    Disjoint,
    /// Exactly one common point, an endpoint of at least one segment.
    Touch((i64, i64)),
    /// Proper crossing at a single interior point of both segments.
    Cross,
    /// Collinear segments sharing more than one point.
    Overlap,
}

fn collinear_in_box(a: (i64, i64), b: (i64, i64), p: (i64, i64)) -> bool {
    p.0 >= a.0.min(b.0) && p.0 <= a.0.max(b.0) && p.1 >= a.1.min(b.1) && p.1 <= a.1.max(b.1)
}

/// Classifies the intersection of closed segments `ab` and `pq`.
/// Segments must be non-degenerate.
pub fn seg_kind(a: (i64, i64), b: (i64, i64), p: (i64, i64), q: (i64, i64)) -> SegKind {
    debug_assert!(a != b && p != q, "degenerate segment");
    let o1 = orient_i64(a, b, p);
    let o2 = orient_i64(a, b, q);
    let o3 = orient_i64(p, q, a);
    let o4 = orient_i64(p, q, b);

    if o1 == 0 && o2 == 0 {
        // All four points on one line: compare along the dominant axis of ab
        // (distinct collinear points always differ in that coordinate).
        let use_x = (b.0 - a.0).abs() >= (b.1 - a.1).abs();
        let key = |s: (i64, i64)| if use_x { s.0 } else { s.1 };
        let (amin, amax) = if key(a) <= key(b) { (a, b) } else { (b, a) };
        let (pmin, pmax) = if key(p) <= key(q) { (p, q) } else { (q, p) };
        if key(amax) < key(pmin) || key(pmax) < key(amin) {
            return SegKind::Disjoint;
        }
        if key(amax) == key(pmin) {
            return SegKind::Touch(amax);
        }
        if key(pmax) == key(amin) {
            return SegKind::Touch(amin);
        }
        return SegKind::Overlap;
    }

    if o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0 {
        if o1 != o2 && o3 != o4 {
            return SegKind::Cross;
        }
        return SegKind::Disjoint;
    }

    // Some endpoint is collinear with the other segment; the intersection,
    // if any, is that endpoint.
    if o1 == 0 && collinear_in_box(a, b, p) {
        return SegKind::Touch(p);
    }
    if o2 == 0 && collinear_in_box(a, b, q) {
        return SegKind::Touch(q);
    }
    if o3 == 0 && collinear_in_box(p, q, a) {
        return SegKind::Touch(a);
    }
    if o4 == 0 && collinear_in_box(p, q, b) {
        return SegKind::Touch(b);
    }
    SegKind::Disjoint
}

/// Location of a point relative to a closed region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Inside,
    Boundary,
    Outside,
}

/// Locates `p` relative to the closed triangle `(a, b, c)` (any orientation).
pub fn point_in_triangle(p: (i64, i64), a: (i64, i64), b: (i64, i64), c: (i64, i64)) -> Location {
    let s = orient_i64(a, b, c);
    debug_assert!(s != 0, "degenerate triangle");
    let (b, c) = if s > 0 { (b, c) } else { (c, b) };
    let d1 = orient_i64(a, b, p);
    let d2 = orient_i64(b, c, p);
    let d3 = orient_i64(c, a, p);
    if d1 < 0 || d2 < 0 || d3 < 0 {
        Location::Outside
    } else if d1 > 0 && d2 > 0 && d3 > 0 {
        Location::Inside
    } else {
        Location::Boundary
    }
}

/// Locates `p` relative to the closed polygonal region bounded by `pts`
/// (crossing-number on snapped coordinates; boundary detected exactly).
pub fn point_in_polygon(snap: &SnapGrid, pts: &[Point2], p: Point2) -> Location {
    let sp = snap.snap(p);
    let n = pts.len();
    let verts: Vec<(i64, i64)> = pts.iter().map(|&v| snap.snap(v)).collect();
    let mut crossings = 0u32;
    for i in 0..n {
        let u = verts[i];
        let v = verts[(i + 1) % n];
        if u == v {
            continue;
        }
        if orient_i64(u, v, sp) == 0 && collinear_in_box(u, v, sp) {
            return Location::Boundary;
        }
        // Half-open vertical rule: edge spans the horizontal line through p.
        if (u.1 > sp.1) != (v.1 > sp.1) {
            let dy = (v.1 - u.1) as i128;
            let cross = (v.0 - u.0) as i128 * (sp.1 - u.1) as i128 - (sp.0 - u.0) as i128 * dy;
            // Intersection abscissa is right of p iff cross and dy agree in sign.
            if (cross > 0 && dy > 0) || (cross < 0 && dy < 0) {
                crossings += 1;
            }
        }
    }
    if crossings % 2 == 1 {
        Location::Inside
    } else {
        Location::Outside
    }
}

fn simplicity_pair_ok(verts: &[(i64, i64)], n: usize, i: usize, j: usize) -> bool {
    let (a, b) = (verts[i], verts[(i + 1) % n]);
    let (p, q) = (verts[j], verts[(j + 1) % n]);
    let adjacent = (j + n - i) % n == 1 || (i + n - j) % n == 1;
    match seg_kind(a, b, p, q) {
        SegKind::Disjoint => !adjacent, // adjacent edges must share their vertex
        SegKind::Touch(t) => {
            if !adjacent {
                return false;
            }
            let shared = if (i + 1) % n == j { verts[j] } else { verts[i] };
            t == shared
        }
        SegKind::Cross | SegKind::Overlap => false,
    }
}

/// Exact all-pairs simplicity test; reference implementation for small
/// polygons and the oracle for the bucketed version.
pub fn polygon_is_simple_brute(snap: &SnapGrid, pts: &[Point2]) -> bool {
    let n = pts.len();
    if n < 3 {
        return false;
    }
    let verts: Vec<(i64, i64)> = pts.iter().map(|&p| snap.snap(p)).collect();
    for i in 0..n {
        if verts[i] == verts[(i + 1) % n] {
            return false; // zero-length edge after snapping
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if !simplicity_pair_ok(&verts, n, i, j) {
                return false;
            }
        }
    }
    true
}

/// Exact simplicity test with bbox bucketing for large polygons.
pub fn polygon_is_simple(snap: &SnapGrid, pts: &[Point2]) -> bool {
    let n = pts.len();
    if n < 3 {
        return false;
    }
    if n <= 64 {
        return polygon_is_simple_brute(snap, pts);
    }
    let verts: Vec<(i64, i64)> = pts.iter().map(|&p| snap.snap(p)).collect();
    for i in 0..n {
        if verts[i] == verts[(i + 1) % n] {
            return false;
        }
    }
    // Adjacent pairs always need the touch-at-shared-vertex check.
    for i in 0..n {
        if !simplicity_pair_ok(&verts, n, i, (i + 1) % n) {
            return false;
        }
    }
    // Non-adjacent pairs: candidates from a uniform bucket grid over edge
    // bounding boxes; disjoint bboxes cannot intersect.
    let mut boxes = Vec::with_capacity(n);
    let mut lens = Vec::with_capacity(n);
    for i in 0..n {
        let (a, b) = (verts[i], verts[(i + 1) % n]);
        let bx = (a.0.min(b.0), a.1.min(b.1), a.0.max(b.0), a.1.max(b.1));
        lens.push((bx.2 - bx.0).max(bx.3 - bx.1).max(1));
        boxes.push(bx);
    }
    let mut sorted = lens.clone();
    sorted.sort_unstable();
    // Cell size: the median edge length, floored so a single long edge in a
    // sea of short ones cannot fan out into millions of buckets.
    let max_len = *sorted.last().unwrap();
    let cell = sorted[n / 2].max(max_len / 256).max(1);
    let mut entries: i64 = 0;
    for bx in &boxes {
        entries += ((bx.2 - bx.0) / cell + 2) * ((bx.3 - bx.1) / cell + 2);
    }
    if entries > 4_000_000 {
        // Degenerate length mix; plain pair loop with bbox rejection.
        for i in 0..n {
            for j in (i + 2)..n {
                if i == 0 && j == n - 1 {
                    continue; // adjacent cyclically
                }
                let (b0, b1) = (&boxes[i], &boxes[j]);
                if b0.2 < b1.0 || b1.2 < b0.0 || b0.3 < b1.1 || b1.3 < b0.1 {
                    continue;
                }
                if !simplicity_pair_ok(&verts, n, i, j) {
                    return false;
                }
            }
        }
        return true;
    }
    use std::collections::{HashMap, HashSet};
    let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, bx) in boxes.iter().enumerate() {
        for cx in bx.0.div_euclid(cell)..=bx.2.div_euclid(cell) {
            for cy in bx.1.div_euclid(cell)..=bx.3.div_euclid(cell) {
                buckets.entry((cx, cy)).or_default().push(i);
            }
        }
    }
    let mut seen: HashSet<(usize, usize)> = HashSet::new();
    for list in buckets.values() {
        for ai in 0..list.len() {
            for bi in (ai + 1)..list.len() {
                let (i, j) = (list[ai].min(list[bi]), list[ai].max(list[bi]));
                let adjacent = (j + n - i) % n == 1 || (i + n - j) % n == 1;
                if adjacent {
                    continue; // already checked
                }
                let (b0, b1) = (&boxes[i], &boxes[j]);
                if b0.2 < b1.0 || b1.2 < b0.0 || b0.3 < b1.1 || b1.3 < b0.1 {
                    continue;
                }
                if !seen.insert((i, j)) {
                    continue;
                }
                if !simplicity_pair_ok(&verts, n, i, j) {
                    return false;
                }
            }
        }
    }
    true
}

/// Checks that two counterclockwise triangles intersect only in a shared
/// vertex, a shared full edge, or not at all.
pub fn validate_triangle_pair(t1: [(i64, i64); 3], t2: [(i64, i64); 3]) -> Result<(), String> {
    let shared: Vec<(i64, i64)> = t1
        .iter()
        .copied()
        .filter(|v| t2.contains(v))
        .collect();
    match shared.len() {
        3 => Err("duplicate triangle".into()),
        2 => {
            let (u, v) = (shared[0], shared[1]);
            let w1 = *t1.iter().find(|p| !shared.contains(p)).unwrap();
            let w2 = *t2.iter().find(|p| !shared.contains(p)).unwrap();
            let s1 = orient_i64(u, v, w1);
            let s2 = orient_i64(u, v, w2);
            if s1 != 0 && s2 != 0 && s1 != s2 {
                Ok(())
            } else {
                Err("triangles on the same side of a shared edge".into())
            }
        }
        1 => {
            let v = shared[0];
            for i in 0..3 {
                for j in 0..3 {
                    let e1 = (t1[i], t1[(i + 1) % 3]);
                    let e2 = (t2[j], t2[(j + 1) % 3]);
                    match seg_kind(e1.0, e1.1, e2.0, e2.1) {
                        SegKind::Disjoint => {}
                        SegKind::Touch(t) if t == v => {}
                        SegKind::Touch(_) => return Err("edges touch away from the shared vertex".into()),
                        SegKind::Cross => return Err("edges cross".into()),
                        SegKind::Overlap => return Err("edges overlap".into()),
                    }
                }
            }
            for w in t1.iter().filter(|&&w| w != v) {
                if point_in_triangle(*w, t2[0], t2[1], t2[2]) != Location::Outside {
                    return Err("vertex inside the other triangle".into());
                }
            }
            for w in t2.iter().filter(|&&w| w != v) {
                if point_in_triangle(*w, t1[0], t1[1], t1[2]) != Location::Outside {
                    return Err("vertex inside the other triangle".into());
                }
            }
            Ok(())
        }
        _ => {
            for i in 0..3 {
                for j in 0..3 {
                    let e1 = (t1[i], t1[(i + 1) % 3]);
                    let e2 = (t2[j], t2[(j + 1) % 3]);
                    if seg_kind(e1.0, e1.1, e2.0, e2.1) != SegKind::Disjoint {
                        return Err("edges of vertex-disjoint triangles intersect".into());
                    }
                }
            }
            for w in &t1 {
                if point_in_triangle(*w, t2[0], t2[1], t2[2]) != Location::Outside {
                    return Err("triangle contained in the other".into());
                }
            }
            for w in &t2 {
                if point_in_triangle(*w, t1[0], t1[1], t1[2]) != Location::Outside {
                    return Err("triangle contained in the other".into());
                }
            }
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    #[test]
    fn seg_kind_basic_cases() {
        let s = SnapGrid::for_diameter(10.0);
        let k = |a: Point2, b: Point2, p: Point2, q: Point2| {
            seg_kind(s.snap(a), s.snap(b), s.snap(p), s.snap(q))
        };
        // proper crossing
        assert_eq!(
            k(pt(0.0, 0.0), pt(1.0, 1.0), pt(0.0, 1.0), pt(1.0, 0.0)),
            SegKind::Cross
        );
        // shared endpoint
        match k(pt(0.0, 0.0), pt(1.0, 0.0), pt(1.0, 0.0), pt(1.0, 1.0)) {
            SegKind::Touch(t) => assert_eq!(t, s.snap(pt(1.0, 0.0))),
            other => panic!("expected touch, got {other:?}"),
        }
        // T-junction: endpoint in the interior of the other segment
        match k(pt(0.0, 0.0), pt(2.0, 0.0), pt(1.0, 0.0), pt(1.0, 1.0)) {
            SegKind::Touch(t) => assert_eq!(t, s.snap(pt(1.0, 0.0))),
            other => panic!("expected touch, got {other:?}"),
        }
        // collinear overlap
        assert_eq!(
            k(pt(0.0, 0.0), pt(2.0, 0.0), pt(1.0, 0.0), pt(3.0, 0.0)),
            SegKind::Overlap
        );
        // collinear touch
        match k(pt(0.0, 0.0), pt(1.0, 0.0), pt(1.0, 0.0), pt(2.0, 0.0)) {
            SegKind::Touch(t) => assert_eq!(t, s.snap(pt(1.0, 0.0))),
            other => panic!("expected touch, got {other:?}"),
        }
        // collinear disjoint
        assert_eq!(
            k(pt(0.0, 0.0), pt(1.0, 0.0), pt(1.5, 0.0), pt(2.0, 0.0)),
            SegKind::Disjoint
        );
        // disjoint, endpoint collinear with the other line but off-segment
        assert_eq!(
            k(pt(0.0, 0.0), pt(1.0, 0.0), pt(2.0, 0.0), pt(2.0, 1.0)),
            SegKind::Disjoint
        );
        // generic disjoint
        assert_eq!(
            k(pt(0.0, 0.0), pt(1.0, 0.0), pt(0.0, 1.0), pt(1.0, 1.0)),
            SegKind::Disjoint
        );
    }

    #[test]
    fn point_in_triangle_cases() {
        let s = SnapGrid::for_diameter(4.0);
        let a = s.snap(pt(0.0, 0.0));
        let b = s.snap(pt(2.0, 0.0));
        let c = s.snap(pt(0.0, 2.0));
        assert_eq!(point_in_triangle(s.snap(pt(0.5, 0.5)), a, b, c), Location::Inside);
        assert_eq!(point_in_triangle(s.snap(pt(1.0, 0.0)), a, b, c), Location::Boundary);
        assert_eq!(point_in_triangle(s.snap(pt(0.0, 0.0)), a, b, c), Location::Boundary);
        assert_eq!(point_in_triangle(s.snap(pt(-1.0, 0.0)), a, b, c), Location::Outside);
        assert_eq!(point_in_triangle(s.snap(pt(1.5, 1.5)), a, b, c), Location::Outside);
        // clockwise input triangles are normalised
        assert_eq!(point_in_triangle(s.snap(pt(0.5, 0.5)), a, c, b), Location::Inside);
    }

    #[test]
    fn point_in_polygon_lshape() {
        let s = SnapGrid::for_diameter(2.0);
        let pts = vec![
            pt(0.0, 0.0),
            pt(1.0, 0.0),
            pt(1.0, 0.5),
            pt(0.5, 0.5),
            pt(0.5, 1.0),
            pt(0.0, 1.0),
        ];
        assert_eq!(point_in_polygon(&s, &pts, pt(0.25, 0.25)), Location::Inside);
        assert_eq!(point_in_polygon(&s, &pts, pt(0.75, 0.75)), Location::Outside);
        assert_eq!(point_in_polygon(&s, &pts, pt(0.5, 0.75)), Location::Boundary);
        assert_eq!(point_in_polygon(&s, &pts, pt(0.75, 0.5)), Location::Boundary);
        assert_eq!(point_in_polygon(&s, &pts, pt(1.5, 0.25)), Location::Outside);
        assert_eq!(point_in_polygon(&s, &pts, pt(0.5, 0.5)), Location::Boundary);
    }

    #[test]
    fn simplicity_square_and_bowtie() {
        let s = SnapGrid::for_diameter(2.0);
        let square = vec![pt(0.0, 0.0), pt(1.0, 0.0), pt(1.0, 1.0), pt(0.0, 1.0)];
        assert!(polygon_is_simple(&s, &square));
        let bowtie = vec![pt(0.0, 0.0), pt(1.0, 1.0), pt(1.0, 0.0), pt(0.0, 1.0)];
        assert!(!polygon_is_simple(&s, &bowtie));
        let pinched = vec![pt(0.0, 0.0), pt(1.0, 0.0), pt(0.5, 0.5), pt(1.0, 1.0), pt(0.0, 1.0), pt(0.5, 0.5)];
        assert!(!polygon_is_simple(&s, &pinched));
    }

    #[test]
    fn bucketed_simplicity_matches_brute_on_large_polygons() {
        // Star-shaped polygon with many vertices: simple by construction.
        let s = SnapGrid::for_diameter(4.0);
        let n = 200;
        let mut pts = Vec::with_capacity(n);
        for i in 0..n {
            let th = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            let r = if i % 2 == 0 { 1.0 } else { 0.6 };
            pts.push(pt(r * th.cos(), r * th.sin()));
        }
        assert!(polygon_is_simple(&s, &pts));
        assert!(polygon_is_simple_brute(&s, &pts));
        // Introduce one long chord that cuts across: not simple.
        let mut bad = pts.clone();
        bad[50] = pt(-1.5, 0.0);
        assert_eq!(polygon_is_simple(&s, &bad), polygon_is_simple_brute(&s, &bad));
        assert!(!polygon_is_simple(&s, &bad));
    }

    #[test]
    fn triangle_pair_shared_edge_and_t_junction() {
        let s = SnapGrid::for_diameter(4.0);
        let tri = |a: Point2, b: Point2, c: Point2| [s.snap(a), s.snap(b), s.snap(c)];
        // shared full edge, opposite sides
        validate_triangle_pair(
            tri(pt(0.0, 0.0), pt(1.0, 0.0), pt(1.0, 1.0)),
            tri(pt(0.0, 0.0), pt(1.0, 1.0), pt(0.0, 1.0)),
        )
        .unwrap();
        // shared edge, same side: overlap
        assert!(validate_triangle_pair(
            tri(pt(0.0, 0.0), pt(1.0, 0.0), pt(0.0, 1.0)),
            tri(pt(0.0, 0.0), pt(1.0, 0.0), pt(0.2, 0.2)),
        )
        .is_err());
        // shared vertex only
        validate_triangle_pair(
            tri(pt(0.0, 0.0), pt(1.0, 0.0), pt(0.0, 1.0)),
            tri(pt(1.0, 0.0), pt(2.0, 0.0), pt(1.0, 1.0)),
        )
        .unwrap();
        // vertex of one in the interior of an edge of the other
        assert!(validate_triangle_pair(
            tri(pt(0.0, 0.0), pt(2.0, 0.0), pt(0.0, 2.0)),
            tri(pt(1.0, 0.0), pt(2.0, -1.0), pt(2.0, 0.5)),
        )
        .is_err());
        // disjoint
        validate_triangle_pair(
            tri(pt(0.0, 0.0), pt(1.0, 0.0), pt(0.0, 1.0)),
            tri(pt(2.0, 2.0), pt(3.0, 2.0), pt(2.0, 3.0)),
        )
        .unwrap();
        // containment without edge crossings
        assert!(validate_triangle_pair(
            tri(pt(-2.0, -2.0), pt(2.0, -2.0), pt(0.0, 3.0)),
            tri(pt(-0.1, 0.0), pt(0.1, 0.0), pt(0.0, 0.2)),
        )
        .is_err());
    }
}
