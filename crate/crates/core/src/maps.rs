//! Map oracles: the interface through which the pipeline queries the target
//! homeomorphism, plus built-in analytic test maps and grid-sampled maps.
//!
//! Built-ins override `diff` and `invert` with closed forms; the trait
//! supplies finite-difference and damped-Newton defaults for maps that only
//! know how to evaluate (e.g. sampled data).

use crate::geometry::{Mat2, Point2, RightPolygon};
use std::f64::consts::PI;

/// The source domain of the map.  All variants sit inside the closed unit
/// square.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// Open unit square (0,1)^2.
    UnitSquare,
    /// Open L-shape: unit square minus the closed quadrant [1/2,1]^2.
    LShape,
    /// Open disk of radius 1/2 centered at (1/2, 1/2).
    Disk,
}

impl Domain {
    pub fn parse(s: &str) -> Result<Domain, String> {
        match s {
            "unit" => Ok(Domain::UnitSquare),
            "lshape" => Ok(Domain::LShape),
            "disk" => Ok(Domain::Disk),
            other => Err(format!("unknown domain '{other}' (expected unit|lshape|disk)")),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Domain::UnitSquare => "unit",
            Domain::LShape => "lshape",
            Domain::Disk => "disk",
        }
    }

    pub fn area(&self) -> f64 {
        match self {
            Domain::UnitSquare => 1.0,
            Domain::LShape => 0.75,
            Domain::Disk => PI * 0.25, // pi * (1/2)^2
        }
    }

    pub fn bbox(&self) -> (Point2, Point2) {
        (Point2::new(0.0, 0.0), Point2::new(1.0, 1.0))
    }

    /// Strict interior membership.
    pub fn contains(&self, p: Point2) -> bool {
        match self {
            Domain::UnitSquare => p.x > 0.0 && p.x < 1.0 && p.y > 0.0 && p.y < 1.0,
            Domain::LShape => {
                let in_outer = p.x > 0.0 && p.x < 1.0 && p.y > 0.0 && p.y < 1.0;
                in_outer && !(p.x >= 0.5 && p.y >= 0.5)
            }
            Domain::Disk => (p - Point2::new(0.5, 0.5)).norm() < 0.5,
        }
    }

    /// Whether the closed axis-aligned box `center + [-half, half]^2` is
    /// compactly contained in the domain.
    pub fn box_fits(&self, center: Point2, half: f64) -> bool {
        let (x, y) = (center.x, center.y);
        match self {
            Domain::UnitSquare => x.min(1.0 - x).min(y).min(1.0 - y) > half,
            Domain::LShape => {
                // Fit in either leg: [0,1/2]x[0,1] or [0,1]x[0,1/2].
                let h1 = x.min(0.5 - x).min(y).min(1.0 - y);
                let h2 = x.min(1.0 - x).min(y).min(0.5 - y);
                h1.max(h2) > half
            }
            Domain::Disk => (center - Point2::new(0.5, 0.5)).norm() + half * std::f64::consts::SQRT_2 < 0.5,
        }
    }

    /// Euclidean distance from an interior point to the domain boundary
    /// (0 on or outside the boundary).
    pub fn dist_to_boundary(&self, p: Point2) -> f64 {
        match self {
            Domain::UnitSquare => p.x.min(1.0 - p.x).min(p.y).min(1.0 - p.y).max(0.0),
            Domain::LShape => {
                if !self.contains(p) {
                    return 0.0;
                }
                let outer = p.x.min(1.0 - p.x).min(p.y).min(1.0 - p.y);
                // Distance to the notch corner region [1/2,1]^2.
                let dx = (0.5 - p.x).max(0.0);
                let dy = (0.5 - p.y).max(0.0);
                let notch = if dx > 0.0 && dy > 0.0 {
                    (dx * dx + dy * dy).sqrt()
                } else {
                    dx.max(dy)
                };
                outer.min(notch).max(0.0)
            }
            Domain::Disk => (0.5 - (p - Point2::new(0.5, 0.5)).norm()).max(0.0),
        }
    }

    /// The boundary as a right polygon, when the domain is one.
    pub fn right_polygon(&self) -> Option<RightPolygon> {
        match self {
            Domain::UnitSquare => Some(RightPolygon::unit_square()),
            Domain::LShape => Some(
                RightPolygon::new(vec![
                    Point2::new(0.0, 0.0),
                    Point2::new(1.0, 0.0),
                    Point2::new(1.0, 0.5),
                    Point2::new(0.5, 0.5),
                    Point2::new(0.5, 1.0),
                    Point2::new(0.0, 1.0),
                ])
                .expect("L-shape is a right polygon"),
            ),
            Domain::Disk => None,
        }
    }

    /// Counterclockwise dense sampling of the boundary with at least `n`
    /// points; polygon corners are always included exactly.
    pub fn boundary_polyline(&self, n: usize) -> Vec<Point2> {
        match self {
            Domain::Disk => {
                let c = Point2::new(0.5, 0.5);
                (0..n.max(8))
                    .map(|i| {
                        let th = 2.0 * PI * i as f64 / n.max(8) as f64;
                        c + Point2::new(0.5 * th.cos(), 0.5 * th.sin())
                    })
                    .collect()
            }
            _ => {
                let poly = self.right_polygon().expect("polygonal domain").poly;
                let m = poly.points.len();
                let total: f64 = (0..m)
                    .map(|i| poly.points[i].dist(poly.points[(i + 1) % m]))
                    .sum();
                let mut out = Vec::new();
                for i in 0..m {
                    let a = poly.points[i];
                    let b = poly.points[(i + 1) % m];
                    let steps = ((a.dist(b) / total * n as f64).ceil() as usize).max(1);
                    for k in 0..steps {
                        out.push(a.lerp(b, k as f64 / steps as f64));
                    }
                }
                out
            }
        }
    }
}

/// Interface to the target bi-Lipschitz orientation-preserving map.
pub trait MapOracle: Send + Sync {
    /// Value of the map.  Must be defined on the closed unit square (the
    /// bounding box of every supported domain).
    fn eval(&self, z: Point2) -> Point2;

    /// Differential; the default is a symmetric finite difference.
    fn diff(&self, z: Point2) -> Mat2 {
        let h = 1e-6;
        let dx = (self.eval(Point2::new(z.x + h, z.y)) - self.eval(Point2::new(z.x - h, z.y))) / (2.0 * h);
        let dy = (self.eval(Point2::new(z.x, z.y + h)) - self.eval(Point2::new(z.x, z.y - h))) / (2.0 * h);
        Mat2::new(dx.x, dy.x, dx.y, dy.y)
    }

    /// Preimage of `w`; the default runs damped Newton from the best seed on
    /// a coarse grid over the unit square.
    fn invert(&self, w: Point2) -> Option<Point2> {
        newton_invert(&|z| self.eval(z), &|z| self.diff(z), w)
    }

    /// Declared bi-Lipschitz constant: an upper bound for both `|Du|` and
    /// `|Du^-1|` on the domain.
    fn lipschitz(&self) -> f64;

    fn name(&self) -> &str;
}

/// Damped Newton inversion seeded from a 33x33 grid over the unit square.
pub fn newton_invert(
    eval: &dyn Fn(Point2) -> Point2,
    diff: &dyn Fn(Point2) -> Mat2,
    w: Point2,
) -> Option<Point2> {
    let mut best = Point2::new(0.5, 0.5);
    let mut best_err = f64::INFINITY;
    let n = 32;
    for i in 0..=n {
        for j in 0..=n {
            let z = Point2::new(i as f64 / n as f64, j as f64 / n as f64);
            let e = (eval(z) - w).norm();
            if e < best_err {
                best_err = e;
                best = z;
            }
        }
    }
    let tol = 1e-10 * (1.0 + w.norm());
    let mut z = best;
    let mut err = best_err;
    for _ in 0..60 {
        if err <= tol {
            return Some(z);
        }
        let j = diff(z);
        let inv = j.inverse()?;
        let full = inv.mul_vec(w - eval(z));
        let mut t = 1.0;
        let mut advanced = false;
        for _ in 0..20 {
            let cand = Point2::new((z.x + t * full.x).clamp(0.0, 1.0), (z.y + t * full.y).clamp(0.0, 1.0));
            let cand_err = (eval(cand) - w).norm();
            if cand_err < err {
                z = cand;
                err = cand_err;
                advanced = true;
                break;
            }
            t *= 0.5;
        }
        if !advanced {
            return None;
        }
    }
    if err <= tol {
        Some(z)
    } else {
        None
    }
}

/// Largest singular-value bound of the shear `[[1, s], [0, 1]]`.
fn shear_sigma_max(s: f64) -> f64 {
    let s = s.abs();
    (1.0 + 0.25 * s * s).sqrt() + 0.5 * s
}

fn rot(theta: f64) -> Mat2 {
    let (sin, cos) = theta.sin_cos();
    Mat2::new(cos, -sin, sin, cos)
}

/// The identity map.
pub struct Identity;

impl MapOracle for Identity {
    fn eval(&self, z: Point2) -> Point2 {
        z
    }
    fn diff(&self, _z: Point2) -> Mat2 {
        Mat2::identity()
    }
    fn invert(&self, w: Point2) -> Option<Point2> {
        Some(w)
    }
    fn lipschitz(&self) -> f64 {
        1.0
    }
    fn name(&self) -> &str {
        "identity"
    }
}

/// An affine map `z -> M z + b` with `M` orientation-preserving.
pub struct Affine {
    pub m: Mat2,
    pub b: Point2,
}

impl Affine {
    pub fn new(m: Mat2, b: Point2) -> Result<Self, String> {
        if !(m.det() > 0.0) {
            return Err("affine map must be orientation-preserving".into());
        }
        Ok(Affine { m, b })
    }

    /// The stock anisotropic example `diag(2, 1/2)`.
    pub fn example() -> Self {
        Affine::new(Mat2::new(2.0, 0.0, 0.0, 0.5), Point2::new(0.0, 0.0)).unwrap()
    }
}

impl MapOracle for Affine {
    fn eval(&self, z: Point2) -> Point2 {
        self.m.mul_vec(z) + self.b
    }
    fn diff(&self, _z: Point2) -> Mat2 {
        self.m
    }
    fn invert(&self, w: Point2) -> Option<Point2> {
        Some(self.m.inverse()?.mul_vec(w - self.b))
    }
    fn lipschitz(&self) -> f64 {
        let (smax, smin) = self.m.singular_values();
        smax.max(1.0 / smin)
    }
    fn name(&self) -> &str {
        "affine"
    }
}

/// Horizontal shear by a sine wave: `(x, y) -> (x + amp sin(2 pi freq y), y)`.
pub struct ShearSine {
    pub amp: f64,
    pub freq: f64,
}

impl ShearSine {
    pub fn new(amp: f64, freq: f64) -> Self {
        ShearSine { amp, freq }
    }

    fn slope(&self, y: f64) -> f64 {
        self.amp * 2.0 * PI * self.freq * (2.0 * PI * self.freq * y).cos()
    }
}

impl Default for ShearSine {
    fn default() -> Self {
        ShearSine::new(0.1, 1.0)
    }
}

impl MapOracle for ShearSine {
    fn eval(&self, z: Point2) -> Point2 {
        Point2::new(z.x + self.amp * (2.0 * PI * self.freq * z.y).sin(), z.y)
    }
    fn diff(&self, z: Point2) -> Mat2 {
        Mat2::new(1.0, self.slope(z.y), 0.0, 1.0)
    }
    fn invert(&self, w: Point2) -> Option<Point2> {
        Some(Point2::new(w.x - self.amp * (2.0 * PI * self.freq * w.y).sin(), w.y))
    }
    fn lipschitz(&self) -> f64 {
        // A unit-determinant shear: the inverse has the same norm.
        shear_sigma_max((self.amp * 2.0 * PI * self.freq).abs())
    }
    fn name(&self) -> &str {
        "shear_sine"
    }
}

/// Rotation by an angle growing linearly in the radius from the center of
/// the unit square: `z -> c + R(rate * |z - c|) (z - c)`.
pub struct PolarTwist {
    pub rate: f64,
}

impl PolarTwist {
    pub fn new(rate: f64) -> Self {
        PolarTwist { rate }
    }
}

impl Default for PolarTwist {
    fn default() -> Self {
        PolarTwist::new(0.5)
    }
}

const CENTER: Point2 = Point2::new(0.5, 0.5);

/// Differential of `z -> c + R(theta(rho)) (z - c)` for radial angle fields;
/// `dtheta` is `theta'(rho)`.  In the frame aligned with the ray it is the
/// shear `[[1, 0], [rho theta'(rho), 1]]` followed by the rotation.
fn radial_twist_diff(z: Point2, theta: f64, dtheta: f64) -> Mat2 {
    let w = z - CENTER;
    let rho = w.norm();
    let r = rot(theta);
    if rho < 1e-12 {
        return r;
    }
    let s = dtheta * rho;
    let (ux, uy) = (w.x / rho, w.y / rho);
    // R(theta) (I + s R(pi/2) u u^T), with u the unit radial direction.
    let k = Mat2::new(
        1.0 - s * uy * ux,
        -s * uy * uy,
        s * ux * ux,
        1.0 + s * ux * uy,
    );
    r.mul_mat(k)
}

impl MapOracle for PolarTwist {
    fn eval(&self, z: Point2) -> Point2 {
        let w = z - CENTER;
        CENTER + rot(self.rate * w.norm()).mul_vec(w)
    }
    fn diff(&self, z: Point2) -> Mat2 {
        let rho = (z - CENTER).norm();
        radial_twist_diff(z, self.rate * rho, self.rate)
    }
    fn invert(&self, w: Point2) -> Option<Point2> {
        // The radius is preserved, so the twist angle is known exactly.
        let v = w - CENTER;
        Some(CENTER + rot(-self.rate * v.norm()).mul_vec(v))
    }
    fn lipschitz(&self) -> f64 {
        // Unit-determinant local shear of magnitude rate * rho, maximal at
        // the far corner of the unit square (rho = sqrt(2)/2).
        shear_sigma_max(self.rate.abs() * std::f64::consts::SQRT_2 * 0.5)
    }
    fn name(&self) -> &str {
        "polar_twist"
    }
}

/// A twist concentrated on a thin annulus: identity inside radius `rho0`,
/// rotation by the full `sharpness` angle outside `rho0 + width`, linear in
/// between.  Coarse vertex interpolation of this map flips triangles that
/// straddle the band, which makes it the stock counterexample input.
pub struct FoldCandidate {
    pub sharpness: f64,
    pub rho0: f64,
    pub width: f64,
}

impl FoldCandidate {
    pub fn new(sharpness: f64) -> Self {
        FoldCandidate { sharpness, rho0: 0.25, width: 0.1 }
    }

    fn theta(&self, rho: f64) -> f64 {
        self.sharpness * ((rho - self.rho0) / self.width).clamp(0.0, 1.0)
    }

    fn dtheta(&self, rho: f64) -> f64 {
        if rho > self.rho0 && rho < self.rho0 + self.width {
            self.sharpness / self.width
        } else {
            0.0
        }
    }
}

impl Default for FoldCandidate {
    fn default() -> Self {
        FoldCandidate::new(1.1)
    }
}

impl MapOracle for FoldCandidate {
    fn eval(&self, z: Point2) -> Point2 {
        let w = z - CENTER;
        CENTER + rot(self.theta(w.norm())).mul_vec(w)
    }
    fn diff(&self, z: Point2) -> Mat2 {
        let rho = (z - CENTER).norm();
        radial_twist_diff(z, self.theta(rho), self.dtheta(rho))
    }
    fn invert(&self, w: Point2) -> Option<Point2> {
        let v = w - CENTER;
        Some(CENTER + rot(-self.theta(v.norm())).mul_vec(v))
    }
    fn lipschitz(&self) -> f64 {
        // Largest local shear sits at the outer edge of the band.
        shear_sigma_max(self.sharpness.abs() / self.width * (self.rho0 + self.width))
    }
    fn name(&self) -> &str {
        "fold_candidate"
    }
}

/// A map given by bilinear interpolation of samples on a uniform grid over
/// the unit square.
pub struct SampledMap {
    pub rows: usize,
    pub cols: usize,
    pub l: f64,
    /// Row-major, `values[row * cols + col]`, row indexing the y direction.
    pub values: Vec<Point2>,
}

impl SampledMap {
    /// Builds by sampling another oracle on an `(n+1) x (n+1)` grid.
    pub fn sample(oracle: &dyn MapOracle, n: usize) -> Self {
        let (rows, cols) = (n + 1, n + 1);
        let mut values = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let z = Point2::new(c as f64 / n as f64, r as f64 / n as f64);
                values.push(oracle.eval(z));
            }
        }
        SampledMap { rows, cols, l: oracle.lipschitz(), values }
    }

    fn at(&self, r: usize, c: usize) -> Point2 {
        self.values[r * self.cols + c]
    }
}

impl MapOracle for SampledMap {
    fn eval(&self, z: Point2) -> Point2 {
        let fx = (z.x.clamp(0.0, 1.0)) * (self.cols - 1) as f64;
        let fy = (z.y.clamp(0.0, 1.0)) * (self.rows - 1) as f64;
        let c0 = (fx.floor() as usize).min(self.cols - 2);
        let r0 = (fy.floor() as usize).min(self.rows - 2);
        let tx = fx - c0 as f64;
        let ty = fy - r0 as f64;
        let p00 = self.at(r0, c0);
        let p01 = self.at(r0, c0 + 1);
        let p10 = self.at(r0 + 1, c0);
        let p11 = self.at(r0 + 1, c0 + 1);
        p00 * ((1.0 - tx) * (1.0 - ty)) + p01 * (tx * (1.0 - ty)) + p10 * ((1.0 - tx) * ty) + p11 * (tx * ty)
    }

    fn diff(&self, z: Point2) -> Mat2 {
        let nx = (self.cols - 1) as f64;
        let ny = (self.rows - 1) as f64;
        let fx = (z.x.clamp(0.0, 1.0)) * nx;
        let fy = (z.y.clamp(0.0, 1.0)) * ny;
        let c0 = (fx.floor() as usize).min(self.cols - 2);
        let r0 = (fy.floor() as usize).min(self.rows - 2);
        let tx = fx - c0 as f64;
        let ty = fy - r0 as f64;
        let p00 = self.at(r0, c0);
        let p01 = self.at(r0, c0 + 1);
        let p10 = self.at(r0 + 1, c0);
        let p11 = self.at(r0 + 1, c0 + 1);
        let dx = ((p01 - p00) * (1.0 - ty) + (p11 - p10) * ty) * nx;
        let dy = ((p10 - p00) * (1.0 - tx) + (p11 - p01) * tx) * ny;
        Mat2::new(dx.x, dy.x, dx.y, dy.y)
    }

    fn lipschitz(&self) -> f64 {
        self.l
    }

    fn name(&self) -> &str {
        "sampled"
    }
}

/// Parses a map specification string:
/// `identity`, `affine[:a11,a12,a21,a22[,bx,by]]`, `shear_sine[:amp,freq]`,
/// `polar_twist[:rate]`, `fold_candidate[:sharpness]`, `sampled:<path>`.
pub fn parse_map_spec(spec: &str) -> Result<Box<dyn MapOracle>, String> {
    let (head, args) = match spec.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (spec, None),
    };
    let nums = |a: &str| -> Result<Vec<f64>, String> {
        a.split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|e| format!("bad number '{t}': {e}")))
            .collect()
    };
    match head {
        "identity" => Ok(Box::new(Identity)),
        "affine" => match args {
            None => Ok(Box::new(Affine::example())),
            Some(a) => {
                let v = nums(a)?;
                if v.len() != 4 && v.len() != 6 {
                    return Err("affine expects 4 or 6 numbers".into());
                }
                let m = Mat2::new(v[0], v[1], v[2], v[3]);
                let b = if v.len() == 6 { Point2::new(v[4], v[5]) } else { Point2::new(0.0, 0.0) };
                Ok(Box::new(Affine::new(m, b)?))
            }
        },
        "shear_sine" => match args {
            None => Ok(Box::new(ShearSine::default())),
            Some(a) => {
                let v = nums(a)?;
                if v.len() != 2 {
                    return Err("shear_sine expects amp,freq".into());
                }
                Ok(Box::new(ShearSine::new(v[0], v[1])))
            }
        },
        "polar_twist" => match args {
            None => Ok(Box::new(PolarTwist::default())),
            Some(a) => {
                let v = nums(a)?;
                if v.len() != 1 {
                    return Err("polar_twist expects rate".into());
                }
                Ok(Box::new(PolarTwist::new(v[0])))
            }
        },
        "fold_candidate" => match args {
            None => Ok(Box::new(FoldCandidate::default())),
            Some(a) => {
                let v = nums(a)?;
                if v.len() != 1 {
                    return Err("fold_candidate expects sharpness".into());
                }
                Ok(Box::new(FoldCandidate::new(v[0])))
            }
        },
        "sampled" => {
            let path = args.ok_or("sampled expects a file path")?;
            let text = std::fs::read_to_string(path).map_err(|e| format!("reading {path}: {e}"))?;
            Ok(Box::new(crate::io::parse_sampled_map(&text)?))
        }
        other => Err(format!("unknown map '{other}'")),
    }
}

/// Measures max(|Du|, |Du^-1|) over an `n x n` sample of the domain.
pub fn estimate_l(oracle: &dyn MapOracle, domain: &Domain, n: usize) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..=n {
        for j in 0..=n {
            let z = Point2::new(i as f64 / n as f64, j as f64 / n as f64);
            if !domain.contains(z) && !matches!(domain, Domain::UnitSquare) {
                continue;
            }
            let d = oracle.diff(z);
            let (smax, smin) = d.singular_values();
            if smin > 0.0 {
                worst = worst.max(smax).max(1.0 / smin);
            }
        }
    }
    worst
}
