//! Planar primitives: points, 2x2 matrices with closed-form singular values,
//! squares, triangles, polygons and triangulations.
//!
//! Everything that must be *decided* (orientation, intersection, simplicity)
//! goes through the exact integer predicates in [`predicates`]; floating
//! point is only used for quantities that are merely *measured*.

pub mod predicates;

use std::ops::{Add, Div, Mul, Neg, Sub};

/// A point (or vector) in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the cross product, `self.x * o.y - self.y * o.x`.
    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dist(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    /// Point at parameter `t` on the segment from `self` to `o`.
    pub fn lerp(self, o: Point2, t: f64) -> Point2 {
        Point2::new(self.x + t * (o.x - self.x), self.y + t * (o.y - self.y))
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

impl Div<f64> for Point2 {
    type Output = Point2;
    fn div(self, s: f64) -> Point2 {
        Point2::new(self.x / s, self.y / s)
    }
}

impl From<(f64, f64)> for Point2 {
    fn from(t: (f64, f64)) -> Point2 {
        Point2::new(t.0, t.1)
    }
}

/// Twice-signed area helper: signed area of triangle `(a, b, c)`,
/// positive when the vertices are counterclockwise.
pub fn signed_area(a: Point2, b: Point2, c: Point2) -> f64 {
    0.5 * (b - a).cross(c - a)
}

/// A 2x2 real matrix in row-major order.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat2 {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

impl Mat2 {
    pub const fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Mat2 { a11, a12, a21, a22 }
    }

    pub const fn identity() -> Self {
        Mat2::new(1.0, 0.0, 0.0, 1.0)
    }

    pub const fn zero() -> Self {
        Mat2::new(0.0, 0.0, 0.0, 0.0)
    }

    pub fn det(self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn transpose(self) -> Mat2 {
        Mat2::new(self.a11, self.a21, self.a12, self.a22)
    }

    pub fn mul_vec(self, v: Point2) -> Point2 {
        Point2::new(self.a11 * v.x + self.a12 * v.y, self.a21 * v.x + self.a22 * v.y)
    }

    pub fn mul_mat(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.a11 * o.a11 + self.a12 * o.a21,
            self.a11 * o.a12 + self.a12 * o.a22,
            self.a21 * o.a11 + self.a22 * o.a21,
            self.a21 * o.a12 + self.a22 * o.a22,
        )
    }

    pub fn add_mat(self, o: Mat2) -> Mat2 {
        Mat2::new(self.a11 + o.a11, self.a12 + o.a12, self.a21 + o.a21, self.a22 + o.a22)
    }

    pub fn sub_mat(self, o: Mat2) -> Mat2 {
        Mat2::new(self.a11 - o.a11, self.a12 - o.a12, self.a21 - o.a21, self.a22 - o.a22)
    }

    pub fn scale(self, s: f64) -> Mat2 {
        Mat2::new(self.a11 * s, self.a12 * s, self.a21 * s, self.a22 * s)
    }

    pub fn inverse(self) -> Option<Mat2> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        Some(Mat2::new(self.a22 / d, -self.a12 / d, -self.a21 / d, self.a11 / d))
    }

    /// Singular values `(sigma_max, sigma_min)`.
    ///
    /// Uses the rotation/reflection split: with `E = (a11+a22)/2`,
    /// `F = (a11-a22)/2`, `G = (a21+a12)/2`, `H = (a21-a12)/2` the singular
    /// values are `hypot(E,H) ± hypot(F,G)`.  Exact (no rounding beyond the
    /// four sums) for diagonal and zero matrices, which keeps the deviation
    /// of an affine map from its own differential at literal `0.0`.
    pub fn singular_values(self) -> (f64, f64) {
        let e = 0.5 * (self.a11 + self.a22);
        let f = 0.5 * (self.a11 - self.a22);
        let g = 0.5 * (self.a21 + self.a12);
        let h = 0.5 * (self.a21 - self.a12);
        let q = e.hypot(h);
        let r = f.hypot(g);
        (q + r, (q - r).abs())
    }

    /// Operator norm (largest singular value).
    pub fn op_norm(self) -> f64 {
        self.singular_values().0
    }

    /// Whether the matrix lies in the bi-Lipschitz class with constant `L`:
    /// positive determinant, `|M| <= L` and `|M^-1| <= L`.
    pub fn in_l_class(self, l: f64) -> bool {
        if !(self.det() > 0.0) {
            return false;
        }
        let (smax, smin) = self.singular_values();
        smax <= l && smin >= 1.0 / l
    }
}

/// Axis-aligned closed square given by its center and side length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Square {
    pub center: Point2,
    pub side: f64,
}

impl Square {
    pub fn new(center: Point2, side: f64) -> Self {
        Square { center, side }
    }

    pub fn sw(&self) -> Point2 {
        self.center - Point2::new(0.5 * self.side, 0.5 * self.side)
    }

    /// Corners counterclockwise starting from the southwest one.
    pub fn corners(&self) -> [Point2; 4] {
        let h = 0.5 * self.side;
        [
            self.center + Point2::new(-h, -h),
            self.center + Point2::new(h, -h),
            self.center + Point2::new(h, h),
            self.center + Point2::new(-h, h),
        ]
    }

    /// Concentric square with side scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Square {
        Square::new(self.center, self.side * factor)
    }

    pub fn contains(&self, p: Point2, tol: f64) -> bool {
        let h = 0.5 * self.side + tol;
        (p.x - self.center.x).abs() <= h && (p.y - self.center.y).abs() <= h
    }
}

/// A triangle, counterclockwise when `signed_area` is positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle {
    pub a: Point2,
    pub b: Point2,
    pub c: Point2,
}

impl Triangle {
    pub fn new(a: Point2, b: Point2, c: Point2) -> Self {
        Triangle { a, b, c }
    }

    pub fn signed_area(&self) -> f64 {
        signed_area(self.a, self.b, self.c)
    }

    pub fn centroid(&self) -> Point2 {
        (self.a + self.b + self.c) / 3.0
    }

    pub fn vertices(&self) -> [Point2; 3] {
        [self.a, self.b, self.c]
    }

    /// Point with barycentric coordinates `(1 - s - t, s, t)`.
    pub fn barycentric_point(&self, s: f64, t: f64) -> Point2 {
        self.a + (self.b - self.a) * s + (self.c - self.a) * t
    }

    /// The affine map sending this triangle onto `img` (vertex to vertex),
    /// split into its linear part and the image of vertex `a`.
    /// `None` when this triangle is degenerate.
    pub fn affine_to(&self, img: &Triangle) -> Option<(Mat2, Point2)> {
        let d = Mat2::new(
            self.b.x - self.a.x,
            self.c.x - self.a.x,
            self.b.y - self.a.y,
            self.c.y - self.a.y,
        );
        let r = Mat2::new(
            img.b.x - img.a.x,
            img.c.x - img.a.x,
            img.b.y - img.a.y,
            img.c.y - img.a.y,
        );
        let m = r.mul_mat(d.inverse()?);
        Some((m, img.a))
    }
}

/// A polygonal chain understood as a closed polygon (last vertex joins the
/// first).  No simplicity is implied by the type; call
/// [`Polygon::is_simple`] to certify it.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    pub points: Vec<Point2>,
}

impl Polygon {
    pub fn new(points: Vec<Point2>) -> Self {
        Polygon { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Signed area by the shoelace formula; positive for counterclockwise.
    pub fn signed_area(&self) -> f64 {
        let n = self.points.len();
        let mut acc = 0.0;
        for i in 0..n {
            let p = self.points[i];
            let q = self.points[(i + 1) % n];
            acc += p.cross(q);
        }
        0.5 * acc
    }

    pub fn bbox(&self) -> (Point2, Point2) {
        let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.points {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        (lo, hi)
    }

    pub fn diameter(&self) -> f64 {
        let (lo, hi) = self.bbox();
        (hi - lo).norm()
    }

    /// Exact simplicity certificate (no two edges meet outside shared
    /// endpoints of adjacent edges) on coordinates snapped by `snap`.
    pub fn is_simple(&self, snap: &predicates::SnapGrid) -> bool {
        predicates::polygon_is_simple(snap, &self.points)
    }

    /// Where `p` sits relative to the closed region bounded by the polygon.
    pub fn locate(&self, snap: &predicates::SnapGrid, p: Point2) -> predicates::Location {
        predicates::point_in_polygon(snap, &self.points, p)
    }
}

/// A simple polygon all of whose edges are axis-parallel.
#[derive(Debug, Clone, PartialEq)]
pub struct RightPolygon {
    pub poly: Polygon,
}

impl RightPolygon {
    /// Validates axis-parallel edges and counterclockwise orientation.
    pub fn new(points: Vec<Point2>) -> Result<Self, String> {
        if points.len() < 4 {
            return Err("right polygon needs at least 4 vertices".into());
        }
        let n = points.len();
        for i in 0..n {
            let p = points[i];
            let q = points[(i + 1) % n];
            let horiz = p.y == q.y && p.x != q.x;
            let vert = p.x == q.x && p.y != q.y;
            if !(horiz || vert) {
                return Err(format!("edge {i} is not axis-parallel or is degenerate"));
            }
        }
        let poly = Polygon::new(points);
        if poly.signed_area() <= 0.0 {
            return Err("right polygon must be counterclockwise".into());
        }
        Ok(RightPolygon { poly })
    }

    pub fn unit_square() -> Self {
        RightPolygon::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ])
        .expect("unit square is a right polygon")
    }

    pub fn area(&self) -> f64 {
        self.poly.signed_area()
    }

    /// Whether every vertex coordinate is an integer multiple of `step`
    /// (up to `tol`), so an `step`-grid tiling fits the boundary exactly.
    pub fn aligned_to(&self, step: f64, tol: f64) -> bool {
        self.poly.points.iter().all(|p| {
            let fx = (p.x / step - (p.x / step).round()).abs();
            let fy = (p.y / step - (p.y / step).round()).abs();
            fx <= tol && fy <= tol
        })
    }
}

/// An indexed triangle mesh.  `triangles` lists vertex indices
/// counterclockwise.
#[derive(Debug, Clone, Default)]
pub struct Triangulation {
    pub vertices: Vec<Point2>,
    pub triangles: Vec<[usize; 3]>,
}

impl Triangulation {
    pub fn triangle(&self, t: usize) -> Triangle {
        let [i, j, k] = self.triangles[t];
        Triangle::new(self.vertices[i], self.vertices[j], self.vertices[k])
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle(t).signed_area()).sum()
    }
}

/// Checks that a mesh is a valid triangulation: indices in range, all
/// triangles counterclockwise with positive exact orientation, no duplicate
/// vertex slots inside a triangle, and every pair of triangles meeting only
/// in a shared vertex or a shared full edge.
pub fn validate_triangulation(snap: &predicates::SnapGrid, mesh: &Triangulation) -> Result<(), String> {
    let nv = mesh.vertices.len();
    let snapped: Vec<(i64, i64)> = mesh.vertices.iter().map(|&p| snap.snap(p)).collect();
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for &i in tri {
            if i >= nv {
                return Err(format!("triangle {t} references vertex {i} out of {nv}"));
            }
        }
        let [i, j, k] = *tri;
        if i == j || j == k || i == k {
            return Err(format!("triangle {t} repeats a vertex index"));
        }
        if predicates::orient_i64(snapped[i], snapped[j], snapped[k]) <= 0 {
            return Err(format!("triangle {t} is not strictly counterclockwise"));
        }
    }

    // Bucket triangles by snapped bbox cells so the pair scan skips far
    // pairs; cell size tracks the median triangle extent.
    let nt = mesh.triangles.len();
    let mut exts: Vec<i64> = Vec::with_capacity(nt);
    let mut boxes: Vec<(i64, i64, i64, i64)> = Vec::with_capacity(nt);
    for tri in &mesh.triangles {
        let ps = [snapped[tri[0]], snapped[tri[1]], snapped[tri[2]]];
        let xs = [ps[0].0, ps[1].0, ps[2].0];
        let ys = [ps[0].1, ps[1].1, ps[2].1];
        let (x0, x1) = (*xs.iter().min().unwrap(), *xs.iter().max().unwrap());
        let (y0, y1) = (*ys.iter().min().unwrap(), *ys.iter().max().unwrap());
        boxes.push((x0, y0, x1, y1));
        exts.push((x1 - x0).max(y1 - y0).max(1));
    }
    let mut sorted = exts.clone();
    sorted.sort_unstable();
    let cell = sorted.get(nt / 2).copied().unwrap_or(1).max(1);

    use std::collections::HashMap;
    let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (t, b) in boxes.iter().enumerate() {
        let (cx0, cy0) = (b.0.div_euclid(cell), b.1.div_euclid(cell));
        let (cx1, cy1) = (b.2.div_euclid(cell), b.3.div_euclid(cell));
        for cx in cx0..=cx1 {
            for cy in cy0..=cy1 {
                buckets.entry((cx, cy)).or_default().push(t);
            }
        }
    }
    let mut seen: std::collections::HashSet<(usize, usize)> = std::collections::HashSet::new();
    for list in buckets.values() {
        for ai in 0..list.len() {
            for bi in (ai + 1)..list.len() {
                let (s, t) = (list[ai].min(list[bi]), list[ai].max(list[bi]));
                let (b0, b1) = (&boxes[s], &boxes[t]);
                if b0.2 < b1.0 || b1.2 < b0.0 || b0.3 < b1.1 || b1.3 < b0.1 {
                    continue;
                }
                if !seen.insert((s, t)) {
                    continue;
                }
                let t1 = [snapped[mesh.triangles[s][0]], snapped[mesh.triangles[s][1]], snapped[mesh.triangles[s][2]]];
                let t2 = [snapped[mesh.triangles[t][0]], snapped[mesh.triangles[t][1]], snapped[mesh.triangles[t][2]]];
                if let Err(e) = predicates::validate_triangle_pair(t1, t2) {
                    return Err(format!("triangles {s} and {t}: {e}"));
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use predicates::SnapGrid;

    /// Independent oracle: sigma_max as the square root of the largest
    /// eigenvalue of M^T M via the quadratic formula.
    fn op_norm_eig(m: Mat2) -> f64 {
        let g = m.transpose().mul_mat(m);
        let tr = g.a11 + g.a22;
        let det = g.det();
        let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
        (0.5 * (tr + disc)).max(0.0).sqrt()
    }

    #[test]
    fn op_norm_matches_eigenvalue_oracle() {
        let m = Mat2::new(1.0, 3.0, 0.0, 1.0);
        let expected = ((11.0 + 117.0f64.sqrt()) / 2.0).sqrt();
        assert!((m.op_norm() - expected).abs() < 1e-12, "{} vs {}", m.op_norm(), expected);
        assert!((op_norm_eig(m) - expected).abs() < 1e-12);

        let cases = [
            Mat2::new(2.0, 0.0, 0.0, 0.5),
            Mat2::new(0.0, -1.0, 1.0, 0.0),
            Mat2::new(1.0, 0.2, -0.3, 1.4),
            Mat2::new(-0.5, 2.0, 1.0, 0.1),
            Mat2::new(1e-8, 0.0, 5.0, 3.0),
        ];
        for m in cases {
            assert!((m.op_norm() - op_norm_eig(m)).abs() <= 1e-12 * (1.0 + m.op_norm()));
        }
    }

    #[test]
    fn singular_values_exact_for_diagonal_and_zero() {
        let (smax, smin) = Mat2::new(2.0, 0.0, 0.0, 0.5).singular_values();
        assert_eq!(smax, 2.0);
        assert_eq!(smin, 0.5);
        let (zmax, zmin) = Mat2::zero().singular_values();
        assert_eq!(zmax, 0.0);
        assert_eq!(zmin, 0.0);
        let (imax, imin) = Mat2::identity().singular_values();
        assert_eq!(imax, 1.0);
        assert_eq!(imin, 1.0);
    }

    #[test]
    fn l_class_membership_boundary() {
        let m = Mat2::new(2.0, 0.0, 0.0, 0.5);
        assert!(m.in_l_class(2.0));
        assert!(!m.in_l_class(1.9));
        assert!(!Mat2::new(1.0, 0.0, 0.0, -1.0).in_l_class(10.0)); // orientation-reversing
        assert!(!Mat2::zero().in_l_class(10.0));
    }

    #[test]
    fn inverse_and_det_relations() {
        let m = Mat2::new(1.3, 0.4, -0.2, 0.9);
        let inv = m.inverse().unwrap();
        let id = m.mul_mat(inv);
        assert!((id.a11 - 1.0).abs() < 1e-14 && (id.a22 - 1.0).abs() < 1e-14);
        assert!(id.a12.abs() < 1e-14 && id.a21.abs() < 1e-14);
        let (smax, smin) = m.singular_values();
        assert!((smax * smin - m.det().abs()).abs() < 1e-12);
        assert!((inv.op_norm() - 1.0 / smin).abs() < 1e-12);
    }

    #[test]
    fn signed_area_unit_right_triangle() {
        let a = Point2::new(0.0, 0.0);
        let b = Point2::new(1.0, 0.0);
        let c = Point2::new(0.0, 1.0);
        assert_eq!(signed_area(a, b, c), 0.5);
        assert_eq!(signed_area(a, c, b), -0.5);
    }

    #[test]
    fn affine_to_recovers_linear_part() {
        let dom = Triangle::new(Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0));
        let m = Mat2::new(2.0, 1.0, 0.0, 0.5);
        let shift = Point2::new(0.3, -0.1);
        let img = Triangle::new(
            m.mul_vec(dom.a) + shift,
            m.mul_vec(dom.b) + shift,
            m.mul_vec(dom.c) + shift,
        );
        let (got, base) = dom.affine_to(&img).unwrap();
        assert!((got.a11 - 2.0).abs() < 1e-14);
        assert!((got.a12 - 1.0).abs() < 1e-14);
        assert!((got.a21 - 0.0).abs() < 1e-14);
        assert!((got.a22 - 0.5).abs() < 1e-14);
        assert!(base.dist(img.a) < 1e-14);
    }

    #[test]
    fn square_corners_counterclockwise() {
        let s = Square::new(Point2::new(0.5, 0.5), 1.0);
        let c = s.corners();
        assert_eq!(c[0], Point2::new(0.0, 0.0));
        assert_eq!(c[2], Point2::new(1.0, 1.0));
        let poly = Polygon::new(c.to_vec());
        assert!((poly.signed_area() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn right_polygon_validation() {
        assert!(RightPolygon::unit_square().area() - 1.0 == 0.0);
        let lshape = RightPolygon::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 0.5),
            Point2::new(0.5, 0.5),
            Point2::new(0.5, 1.0),
            Point2::new(0.0, 1.0),
        ])
        .unwrap();
        assert!((lshape.area() - 0.75).abs() < 1e-15);
        assert!(lshape.aligned_to(0.25, 1e-12));
        assert!(!lshape.aligned_to(0.4, 1e-12));
        assert!(RightPolygon::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.1),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ])
        .is_err());
    }

    #[test]
    fn triangulation_validation_accepts_shared_edge() {
        let mesh = Triangulation {
            vertices: vec![
                Point2::new(0.0, 0.0),
                Point2::new(1.0, 0.0),
                Point2::new(1.0, 1.0),
                Point2::new(0.0, 1.0),
            ],
            triangles: vec![[0, 1, 2], [0, 2, 3]],
        };
        let snap = SnapGrid::for_diameter(2.0);
        validate_triangulation(&snap, &mesh).unwrap();
    }

    #[test]
    fn triangulation_validation_rejects_t_junction() {
        // Vertex 4 sits in the interior of edge (0,1) of the first triangle.
        let mesh = Triangulation {
            vertices: vec![
                Point2::new(0.0, 0.0),
                Point2::new(2.0, 0.0),
                Point2::new(0.0, 2.0),
                Point2::new(2.0, -1.0),
                Point2::new(1.0, 0.0),
            ],
            triangles: vec![[0, 1, 2], [4, 3, 1]],
        };
        let snap = SnapGrid::for_diameter(4.0);
        assert!(validate_triangulation(&snap, &mesh).is_err());
    }

    #[test]
    fn triangulation_validation_rejects_overlap() {
        let mesh = Triangulation {
            vertices: vec![
                Point2::new(0.0, 0.0),
                Point2::new(2.0, 0.0),
                Point2::new(1.0, 2.0),
                Point2::new(1.0, -1.0),
                Point2::new(2.0, 1.0),
                Point2::new(0.5, 0.5),
            ],
            triangles: vec![[0, 1, 2], [3, 4, 5]],
        };
        let snap = SnapGrid::for_diameter(4.0);
        assert!(validate_triangulation(&snap, &mesh).is_err());
    }

    #[test]
    fn triangulation_validation_rejects_flipped() {
        let mesh = Triangulation {
            vertices: vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)],
            triangles: vec![[0, 2, 1]],
        };
        let snap = SnapGrid::for_diameter(2.0);
        assert!(validate_triangulation(&snap, &mesh).is_err());
    }
}
