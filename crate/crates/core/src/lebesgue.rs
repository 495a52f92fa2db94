//! Classification of grid cells by the averaged deviation of the
//! differential from a constant matrix, and the two-triangle diagonal
//! interpolation of the map on the accepted region.
//!
//! A cell is *accepted* when the map is so close to affine on it that vertex
//! interpolation is automatically injective and preserves the bi-Lipschitz
//! constants up to the budgeted slack.

use crate::geometry::{Mat2, Point2, Square};
use crate::io::MeshData;
use crate::maps::{Domain, MapOracle};
use rayon::prelude::*;
use std::collections::{HashMap, HashSet};

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Deviation budget that guarantees a sup-norm gap of `eta * side` between
/// the map and its vertex-affine interpolant on a cell.
pub fn delta_of_eta(eta: f64, l: f64) -> f64 {
    eta * eta / (32.0 * SQRT2 * l)
}

/// Inverse of [`delta_of_eta`]: the sup-norm factor guaranteed by an
/// averaged deviation `delta`.
pub fn eta_of_delta(delta: f64, l: f64) -> f64 {
    4.0 * (2.0 * SQRT2 * l * delta).sqrt()
}

/// Averaged operator-norm deviation of `Du` from `m` over the square,
/// midpoint rule on `quad_n x quad_n` subcells.
pub fn avg_deviation(oracle: &dyn MapOracle, square: &Square, m: Mat2, quad_n: usize) -> f64 {
    let n = quad_n.max(1);
    let sw = square.sw();
    let h = square.side / n as f64;
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let z = sw + Point2::new((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
            acc += oracle.diff(z).sub_mat(m).op_norm();
        }
    }
    acc / (n * n) as f64
}

/// Dense-grid sup of `|u(z) - (u(center) + m (z - center))|` over the square.
pub fn sup_affine_gap(oracle: &dyn MapOracle, square: &Square, m: Mat2, n: usize) -> f64 {
    let sw = square.sw();
    let base = oracle.eval(square.center);
    let mut worst = 0.0f64;
    for i in 0..=n {
        for j in 0..=n {
            let z = sw + Point2::new(square.side * i as f64 / n as f64, square.side * j as f64 / n as f64);
            let affine = base + m.mul_vec(z - square.center);
            worst = worst.max(oracle.eval(z).dist(affine));
        }
    }
    worst
}

/// The largest interpolation-slack factor `eta` compatible with a target
/// error `eps`, exponent `p`, cell side `r` and domain area.  Returns the
/// minimum of the six closed-form constraint roots.
///
/// The constraints (all left sides increasing in `eta`, with
/// `delta = eta^2 / (32 sqrt2 L)`):
///
/// 1. `eta < 1/(6L)`
/// 2. `6 eta r <= eps / (4L)`
/// 3. `(3L)^(p-1) * 9 (eta + delta) * area <= (eps/4)^p`
/// 4. `(3L)^(p-1) * (18 L^2 eta + 9 L^4 delta) * area <= (eps/4)^p`
/// 5. `12 eta <= eps / (L (L + eps))`
/// 6. `eta <= sqrt2 / (36 L^3)`
pub fn eta_budget(l: f64, eps: f64, p: f64, r: f64, area: f64) -> f64 {
    assert!(l >= 1.0 && eps > 0.0 && p >= 1.0 && r > 0.0 && area > 0.0);
    let a = (3.0 * l).powf(p - 1.0) * area;
    let b = (eps / 4.0).powf(p);
    let c = 1.0 / (32.0 * SQRT2 * l); // delta = c eta^2

    let b1 = 1.0 / (6.0 * l);
    let b2 = eps / (24.0 * l * r);
    // 9 a (eta + c eta^2) = b  =>  c eta^2 + eta - b/(9a) = 0; the root is
    // written additively so it survives 4ck << 1 without cancellation.
    let k3 = b / (9.0 * a);
    let b3 = 2.0 * k3 / (1.0 + (1.0 + 4.0 * c * k3).sqrt());
    // a (18 l^2 eta + 9 l^4 c eta^2) = b, same stable root form
    let (qa, qb) = (9.0 * l.powi(4) * c * a, 18.0 * l * l * a);
    let b4 = 2.0 * b / (qb + (qb * qb + 4.0 * qa * b).sqrt());
    let b5 = eps / (12.0 * l * (l + eps));
    let b6 = SQRT2 / (36.0 * l.powi(3));

    b1.min(b2).min(b3).min(b4).min(b5).min(b6) * (1.0 - 1e-12)
}

/// The same budget via bisection on the raw constraint conjunction;
/// reference implementation kept as the oracle for [`eta_budget`].
pub fn eta_budget_bisect(l: f64, eps: f64, p: f64, r: f64, area: f64) -> f64 {
    let a = (3.0 * l).powf(p - 1.0) * area;
    let b = (eps / 4.0).powf(p);
    let ok = |eta: f64| -> bool {
        let delta = delta_of_eta(eta, l);
        eta < 1.0 / (6.0 * l)
            && 6.0 * eta * r <= eps / (4.0 * l)
            && a * 9.0 * (eta + delta) <= b
            && a * (18.0 * l * l * eta + 9.0 * l.powi(4) * delta) <= b
            && 12.0 * eta <= eps / (l * (l + eps))
            && eta <= SQRT2 / (36.0 * l.powi(3))
    };
    let mut lo = 0.0;
    let mut hi = 1.0 / (6.0 * l);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Classification record for one cell of the `r`-grid over the unit square.
#[derive(Debug, Clone)]
pub struct CellClass {
    pub i: i32,
    pub j: i32,
    pub center: Point2,
    pub eligible: bool,
    pub accepted: bool,
    /// Reference differential at the cell center (zero when ineligible).
    pub m: Mat2,
    /// Averaged deviation (infinite when ineligible).
    pub deviation: f64,
}

/// Result of classifying the whole `r`-grid.
#[derive(Debug, Clone)]
pub struct LebesgueClassification {
    pub r: f64,
    pub delta: f64,
    pub l: f64,
    /// Grid extent: cells have `0 <= i, j < n`.
    pub n: i32,
    pub cells: Vec<CellClass>,
    pub accepted: HashSet<(i32, i32)>,
    /// Domain area not covered by accepted cells.
    pub area_deficit: f64,
}

impl LebesgueClassification {
    pub fn is_accepted(&self, i: i32, j: i32) -> bool {
        self.accepted.contains(&(i, j))
    }

    pub fn cell_square(&self, i: i32, j: i32) -> Square {
        Square::new(
            Point2::new((i as f64 + 0.5) * self.r, (j as f64 + 0.5) * self.r),
            self.r,
        )
    }
}

fn grid_extent(r: f64) -> i32 {
    let n = (1.0 / r).round();
    if (n * r - 1.0).abs() < 1e-9 {
        n as i32
    } else {
        (1.0 / r).ceil() as i32
    }
}

/// Classifies every cell of the `r`-grid over the unit-square bounding box.
///
/// A cell is eligible when the concentric square of triple side is compactly
/// contained in the domain; it is accepted when additionally the center
/// differential lies in the `L` class and the averaged deviation from it is
/// at most `delta`.
pub fn classify(
    oracle: &dyn MapOracle,
    domain: &Domain,
    r: f64,
    delta: f64,
    l: f64,
    quad_n: usize,
) -> LebesgueClassification {
    let n = grid_extent(r);
    let idx: Vec<(i32, i32)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let cells: Vec<CellClass> = idx
        .par_iter()
        .map(|&(i, j)| {
            let center = Point2::new((i as f64 + 0.5) * r, (j as f64 + 0.5) * r);
            let eligible = domain.box_fits(center, 1.5 * r);
            if !eligible {
                return CellClass {
                    i,
                    j,
                    center,
                    eligible,
                    accepted: false,
                    m: Mat2::zero(),
                    deviation: f64::INFINITY,
                };
            }
            let m = oracle.diff(center);
            // The acceptance average runs over the tripled square: the
            // sup-norm control it buys must hold on a neighborhood of the
            // cell, not just the cell itself.
            let square = Square::new(center, 3.0 * r);
            let deviation = avg_deviation(oracle, &square, m, quad_n);
            let accepted = deviation <= delta && m.in_l_class(l);
            CellClass { i, j, center, eligible, accepted, m, deviation }
        })
        .collect();
    let accepted: HashSet<(i32, i32)> =
        cells.iter().filter(|c| c.accepted).map(|c| (c.i, c.j)).collect();
    let area_deficit = domain.area() - accepted.len() as f64 * r * r;
    LebesgueClassification { r, delta, l, n, cells, accepted, area_deficit }
}

/// Serializes a classification, one line per grid cell:
/// `cell i j accepted|rejected m11 m12 m21 m22 deviation`.
pub fn write_classification(c: &LebesgueClassification) -> String {
    let mut out = String::new();
    for cell in &c.cells {
        let tag = if cell.accepted { "accepted" } else { "rejected" };
        out.push_str(&format!(
            "cell {} {} {} {} {} {} {} {}\n",
            cell.i, cell.j, tag, cell.m.a11, cell.m.a12, cell.m.a21, cell.m.a22, cell.deviation
        ));
    }
    out
}

/// Vertex-interpolates the map on the accepted cells: each cell splits into
/// the two triangles along its southwest-northeast diagonal, and every
/// vertex maps to the exact image of the corresponding grid corner.
pub fn interpolate(oracle: &dyn MapOracle, c: &LebesgueClassification) -> MeshData {
    let mut mesh = MeshData::default();
    let mut corner_index: HashMap<(i32, i32), usize> = HashMap::new();
    let mut cells: Vec<(i32, i32)> = c.accepted.iter().copied().collect();
    cells.sort_unstable();
    for (i, j) in cells {
        let mut corner = |ci: i32, cj: i32| -> usize {
            *corner_index.entry((ci, cj)).or_insert_with(|| {
                let z = Point2::new(ci as f64 * c.r, cj as f64 * c.r);
                mesh.vertices.push(z);
                mesh.images.push(oracle.eval(z));
                mesh.vertices.len() - 1
            })
        };
        let sw = corner(i, j);
        let se = corner(i + 1, j);
        let ne = corner(i + 1, j + 1);
        let nw = corner(i, j + 1);
        mesh.triangles.push([sw, se, ne]);
        mesh.triangles.push([sw, ne, nw]);
    }
    mesh
}
