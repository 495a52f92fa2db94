//! Measured properties of a piecewise-affine map given as a mesh: point
//! location and evaluation, inversion, bi-Lipschitz constants, injectivity,
//! and L^inf / W^{1,p} distances from the target map in both directions.

use crate::geometry::predicates::SnapGrid;
use crate::geometry::{signed_area, Mat2, Point2, Polygon, Triangle};
use crate::io::MeshData;
use crate::maps::MapOracle;
use rayon::prelude::*;

/// One affine piece: `v(z) = m (z - dom_a) + img_a` on its triangle.
#[derive(Debug, Clone, Copy)]
struct TriAffine {
    m: Mat2,
    minv: Option<Mat2>,
    dom_a: Point2,
    img_a: Point2,
}

/// Uniform bucket grid over triangle bounding boxes for point location.
struct Locator {
    lo: Point2,
    inv_cell: f64,
    nx: i64,
    ny: i64,
    bins: Vec<Vec<u32>>,
}

impl Locator {
    fn build(points: &[Point2], triangles: &[[usize; 3]]) -> Locator {
        let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        if points.is_empty() {
            lo = Point2::new(0.0, 0.0);
            hi = Point2::new(1.0, 1.0);
        }
        let extent = (hi.x - lo.x).max(hi.y - lo.y).max(1e-300);
        let per_axis = ((triangles.len() as f64).sqrt().ceil() as i64).clamp(1, 4096);
        let cell = extent / per_axis as f64;
        let inv_cell = 1.0 / cell;
        let nx = (((hi.x - lo.x) * inv_cell).ceil() as i64 + 1).max(1);
        let ny = (((hi.y - lo.y) * inv_cell).ceil() as i64 + 1).max(1);
        let mut bins = vec![Vec::new(); (nx * ny) as usize];
        for (t, tri) in triangles.iter().enumerate() {
            let (a, b, c) = (points[tri[0]], points[tri[1]], points[tri[2]]);
            let bx0 = (((a.x.min(b.x).min(c.x) - lo.x) * inv_cell).floor() as i64).clamp(0, nx - 1);
            let bx1 = (((a.x.max(b.x).max(c.x) - lo.x) * inv_cell).floor() as i64).clamp(0, nx - 1);
            let by0 = (((a.y.min(b.y).min(c.y) - lo.y) * inv_cell).floor() as i64).clamp(0, ny - 1);
            let by1 = (((a.y.max(b.y).max(c.y) - lo.y) * inv_cell).floor() as i64).clamp(0, ny - 1);
            for bx in bx0..=bx1 {
                for by in by0..=by1 {
                    bins[(by * nx + bx) as usize].push(t as u32);
                }
            }
        }
        Locator { lo, inv_cell, nx, ny, bins }
    }

    fn candidates(&self, p: Point2) -> &[u32] {
        let bx = (((p.x - self.lo.x) * self.inv_cell).floor() as i64).clamp(0, self.nx - 1);
        let by = (((p.y - self.lo.y) * self.inv_cell).floor() as i64).clamp(0, self.ny - 1);
        &self.bins[(by * self.nx + bx) as usize]
    }
}

/// Barycentric weights of `p` in the (counterclockwise) triangle.
fn barycentric(a: Point2, b: Point2, c: Point2, p: Point2) -> (f64, f64, f64) {
    let area = signed_area(a, b, c);
    (
        signed_area(p, b, c) / area,
        signed_area(a, p, c) / area,
        signed_area(a, b, p) / area,
    )
}

/// A piecewise-affine map, its inverse, and point locators on both sides.
pub struct PAMap {
    pub mesh: MeshData,
    tris: Vec<TriAffine>,
    dom_loc: Locator,
    img_loc: Locator,
    /// Every image triangle is positively oriented.
    pub orientation_ok: bool,
    /// `max(|Dv|, |Dv^-1|)` over all pieces; infinite when some piece is
    /// degenerate or flipped.
    pub bilip: f64,
}

impl PAMap {
    pub fn new(mesh: MeshData) -> Result<PAMap, String> {
        if mesh.triangles.is_empty() {
            return Err("empty mesh".into());
        }
        let mut tris = Vec::with_capacity(mesh.triangles.len());
        let mut orientation_ok = true;
        let mut bilip = 1.0f64;
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let dom = Triangle::new(mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]);
            let img = Triangle::new(mesh.images[tri[0]], mesh.images[tri[1]], mesh.images[tri[2]]);
            let (m, img_a) = dom
                .affine_to(&img)
                .ok_or_else(|| format!("triangle {t} is degenerate in the domain"))?;
            if img.signed_area() <= 0.0 {
                orientation_ok = false;
            }
            let (smax, smin) = m.singular_values();
            if m.det() > 0.0 && smin > 0.0 {
                bilip = bilip.max(smax).max(1.0 / smin);
            } else {
                bilip = f64::INFINITY;
            }
            tris.push(TriAffine { m, minv: m.inverse(), dom_a: dom.a, img_a });
        }
        let dom_loc = Locator::build(&mesh.vertices, &mesh.triangles);
        let img_loc = Locator::build(&mesh.images, &mesh.triangles);
        Ok(PAMap { mesh, tris, dom_loc, img_loc, orientation_ok, bilip })
    }

    pub fn triangle_count(&self) -> usize {
        self.mesh.triangles.len()
    }

    /// Index of the triangle containing `p` (tolerance `1e-9` in barycentric
    /// coordinates), or `None` when `p` is outside the meshed region.
    pub fn locate_domain(&self, p: Point2) -> Option<usize> {
        self.locate(p, true)
    }

    /// Index of the triangle whose image contains `w`.
    pub fn locate_image(&self, w: Point2) -> Option<usize> {
        self.locate(w, false)
    }

    fn locate(&self, p: Point2, domain: bool) -> Option<usize> {
        let (loc, pts) = if domain {
            (&self.dom_loc, &self.mesh.vertices)
        } else {
            (&self.img_loc, &self.mesh.images)
        };
        let mut best: Option<(f64, usize)> = None;
        for &t in loc.candidates(p) {
            let tri = &self.mesh.triangles[t as usize];
            let (wa, wb, wc) = barycentric(pts[tri[0]], pts[tri[1]], pts[tri[2]], p);
            let low = wa.min(wb).min(wc);
            if best.map_or(true, |(b, _)| low > b) {
                best = Some((low, t as usize));
            }
        }
        match best {
            Some((low, t)) if low >= -1e-9 => Some(t),
            _ => None,
        }
    }

    /// Value of the piecewise-affine map at `p`.
    pub fn eval(&self, p: Point2) -> Option<Point2> {
        let t = self.locate_domain(p)?;
        Some(self.eval_in(t, p))
    }

    fn eval_in(&self, t: usize, p: Point2) -> Point2 {
        let ta = &self.tris[t];
        ta.m.mul_vec(p - ta.dom_a) + ta.img_a
    }

    /// Value of the inverse map at `w`; `None` outside the image or when the
    /// piece found is degenerate.
    pub fn invert(&self, w: Point2) -> Option<Point2> {
        let t = self.locate_image(w)?;
        let ta = &self.tris[t];
        Some(ta.minv?.mul_vec(w - ta.img_a) + ta.dom_a)
    }

    fn diff(&self, t: usize) -> Mat2 {
        self.tris[t].m
    }
}

/// Injectivity verdict with a human-readable witness on failure.
#[derive(Debug, Clone)]
pub struct Injectivity {
    pub injective: bool,
    pub witness: Option<String>,
}

/// Decides whether the piecewise-affine map is an orientation-preserving
/// injection: every image triangle must be positively oriented and the image
/// of the mesh boundary must be a simple polygon (then the map has degree
/// one onto the region it encloses).  Expects a proper domain triangulation:
/// interior edges shared by exactly two triangles, no T-junctions.
///
/// On meshes of at most 200 triangles the verdict is cross-checked against
/// the brute-force pairwise image-overlap oracle: a decisive geometric
/// verdict here (injective, flipped triangle, or properly crossing boundary)
/// must agree with the oracle; when the mesh has no single boundary loop the
/// certificate does not apply and the oracle decides alone.
pub fn check_injective(mesh: &MeshData) -> Injectivity {
    let fast = injective_fast(mesh);
    if mesh.triangles.len() > 200 || mesh.triangles.is_empty() {
        return fast;
    }
    let brute = brute_overlap_witness(mesh);
    match fast.witness.as_deref() {
        Some(w) if w.starts_with("boundary:") => {
            // No single loop: islands or holes.  Interior overlap is then
            // the only failure mode the oracle can see.
            Injectivity { injective: brute.is_none(), witness: brute }
        }
        Some(w) if w.contains("is not simple") => {
            // A zero-area touch of the boundary: non-injective on the
            // closure, invisible to the interior-overlap oracle.
            fast
        }
        _ => {
            assert_eq!(
                fast.injective,
                brute.is_none(),
                "injectivity certificate and overlap oracle disagree: {:?} vs {:?}",
                fast.witness,
                brute
            );
            fast
        }
    }
}

fn injective_fast(mesh: &MeshData) -> Injectivity {
    let fail = |w: String| Injectivity { injective: false, witness: Some(w) };
    if mesh.triangles.is_empty() {
        return fail("empty mesh".into());
    }
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let area = signed_area(mesh.images[tri[0]], mesh.images[tri[1]], mesh.images[tri[2]]);
        if !(area > 0.0) {
            return fail(format!(
                "triangle {t} [{} {} {}] image signed area {area}",
                tri[0], tri[1], tri[2]
            ));
        }
    }
    let walk = match boundary_loop(mesh) {
        Ok(w) => w,
        Err(e) => return fail(format!("boundary: {e}")),
    };
    let img: Vec<Point2> = walk.iter().map(|&v| mesh.images[v]).collect();
    let poly = Polygon::new(img.clone());
    let snap = SnapGrid::for_diameter(2.0 * poly.diameter().max(1e-12));
    if !poly.is_simple(&snap) {
        // Recover a crossing pair for the witness.
        let n = img.len();
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (img[i], img[(i + 1) % n]);
                let (c, d) = (img[j], img[(j + 1) % n]);
                if segments_properly_cross(a, b, c, d) {
                    return fail(format!(
                        "image boundary edges {}-{} and {}-{} cross",
                        walk[i],
                        walk[(i + 1) % n],
                        walk[j],
                        walk[(j + 1) % n]
                    ));
                }
            }
        }
        return fail("image boundary polygon is not simple".into());
    }
    Injectivity { injective: true, witness: None }
}

fn segments_properly_cross(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let s1 = signed_area(a, b, c);
    let s2 = signed_area(a, b, d);
    let s3 = signed_area(c, d, a);
    let s4 = signed_area(c, d, b);
    s1 * s2 < 0.0 && s3 * s4 < 0.0
}

/// Area of the intersection of a convex polygon with the half-plane left of
/// `a -> b`, by Sutherland-Hodgman clipping.
fn clip_half_plane(poly: &[Point2], a: Point2, b: Point2) -> Vec<Point2> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    let side = |p: Point2| signed_area(a, b, p);
    for k in 0..poly.len() {
        let (p, q) = (poly[k], poly[(k + 1) % poly.len()]);
        let (sp, sq) = (side(p), side(q));
        if sp >= 0.0 {
            out.push(p);
        }
        if (sp > 0.0 && sq < 0.0) || (sp < 0.0 && sq > 0.0) {
            out.push(p.lerp(q, sp / (sp - sq)));
        }
    }
    out
}

/// Independent injectivity oracle: clips every pair of image triangles
/// against each other and reports the first pair overlapping in positive
/// area (or a flipped / degenerate triangle).  Quadratic; intended for
/// meshes of a few hundred triangles.
pub fn brute_overlap_witness(mesh: &MeshData) -> Option<String> {
    let nt = mesh.triangles.len();
    let tri_pts = |t: usize| -> [Point2; 3] {
        let tri = &mesh.triangles[t];
        [mesh.images[tri[0]], mesh.images[tri[1]], mesh.images[tri[2]]]
    };
    for t in 0..nt {
        let [a, b, c] = tri_pts(t);
        if !(signed_area(a, b, c) > 0.0) {
            return Some(format!("triangle {t} image flipped or degenerate"));
        }
    }
    for s in 0..nt {
        let sp = tri_pts(s);
        let s_area = signed_area(sp[0], sp[1], sp[2]);
        for t in (s + 1)..nt {
            let tp = tri_pts(t);
            let t_area = signed_area(tp[0], tp[1], tp[2]);
            let mut clipped = tp.to_vec();
            for k in 0..3 {
                clipped = clip_half_plane(&clipped, sp[k], sp[(k + 1) % 3]);
                if clipped.len() < 3 {
                    break;
                }
            }
            if clipped.len() >= 3 {
                let overlap = Polygon::new(clipped).signed_area();
                if overlap > 1e-12 * s_area.min(t_area) {
                    return Some(format!(
                        "image triangles {s} and {t} overlap in area {overlap}"
                    ));
                }
            }
        }
    }
    None
}

/// The boundary of the meshed region as one closed vertex loop, in
/// counterclockwise order.  Fails when boundary edges do not form a single
/// cycle (disconnected mesh, interior hole, or pinched vertex).
pub fn boundary_loop(mesh: &MeshData) -> Result<Vec<usize>, String> {
    use std::collections::HashMap;
    let mut directed: HashMap<(usize, usize), u32> = HashMap::new();
    for tri in &mesh.triangles {
        for k in 0..3 {
            let e = (tri[k], tri[(k + 1) % 3]);
            *directed.entry(e).or_insert(0) += 1;
        }
    }
    let mut next: HashMap<usize, usize> = HashMap::new();
    let mut count = 0usize;
    for (&(u, v), &c) in &directed {
        if c > 1 {
            return Err(format!("directed edge {u}->{v} used {c} times"));
        }
        if !directed.contains_key(&(v, u)) {
            if next.insert(u, v).is_some() {
                return Err(format!("two boundary edges leave vertex {u}"));
            }
            count += 1;
        }
    }
    if count == 0 {
        return Err("mesh has no boundary".into());
    }
    let start = *next.keys().min().unwrap();
    let mut walk = vec![start];
    let mut at = next[&start];
    while at != start {
        walk.push(at);
        at = *next.get(&at).ok_or("boundary walk left the edge set")?;
        if walk.len() > count {
            return Err("boundary walk does not close".into());
        }
    }
    if walk.len() != count {
        return Err(format!(
            "boundary has {count} edges but the loop through vertex {start} uses {}",
            walk.len()
        ));
    }
    Ok(walk)
}

/// Barycentric sample points `(i/n, j/n)` with `i + j <= n`, as weights on
/// the triangle's vertices; includes corners and edges.
fn lattice(n: usize) -> Vec<(f64, f64, f64)> {
    let mut out = Vec::with_capacity((n + 1) * (n + 2) / 2);
    for i in 0..=n {
        for j in 0..=(n - i) {
            let (a, b) = (i as f64 / n as f64, j as f64 / n as f64);
            out.push((1.0 - a - b, a, b));
        }
    }
    out
}

fn at_weights(a: Point2, b: Point2, c: Point2, w: (f64, f64, f64)) -> Point2 {
    Point2::new(
        w.0 * a.x + w.1 * b.x + w.2 * c.x,
        w.0 * a.y + w.1 * b.y + w.2 * c.y,
    )
}

/// Sup-norm distances `(|u - v|_inf, |u^-1 - v^-1|_inf)` measured on a
/// barycentric lattice of `n(n+1)/2`-ish points per triangle.  Forward
/// errors sample the domain triangles; inverse errors sample the image
/// triangles (the inverse of an affine piece is evaluated exactly, the
/// target's inverse comes from the oracle).  An unanswerable inverse query
/// yields infinity.
pub fn linf_errors(oracle: &dyn MapOracle, pa: &PAMap, n: usize) -> (f64, f64) {
    let weights = lattice(n.max(1));
    let per_tri: Vec<(f64, f64)> = (0..pa.triangle_count())
        .into_par_iter()
        .map(|t| {
            let tri = &pa.mesh.triangles[t];
            let (da, db, dc) = (
                pa.mesh.vertices[tri[0]],
                pa.mesh.vertices[tri[1]],
                pa.mesh.vertices[tri[2]],
            );
            let (ia, ib, ic) =
                (pa.mesh.images[tri[0]], pa.mesh.images[tri[1]], pa.mesh.images[tri[2]]);
            let mut fwd = 0.0f64;
            let mut inv = 0.0f64;
            for &w in &weights {
                let z = at_weights(da, db, dc, w);
                fwd = fwd.max(oracle.eval(z).dist(pa.eval_in(t, z)));
                if pa.orientation_ok {
                    // The affine piece carries barycentric weights across, so
                    // the exact inverse of the sampled image point is `z`.
                    let wimg = at_weights(ia, ib, ic, w);
                    inv = inv.max(match oracle_invert_seeded(oracle, wimg, z) {
                        Some(zu) => zu.dist(z),
                        None => f64::INFINITY,
                    });
                }
            }
            if !pa.orientation_ok {
                inv = f64::INFINITY;
            }
            (fwd, inv)
        })
        .collect();
    per_tri
        .into_iter()
        .fold((0.0f64, 0.0f64), |acc, e| (acc.0.max(e.0), acc.1.max(e.1)))
}

/// Midpoint-rule quadrature nodes: centroids of the `n^2` congruent
/// subtriangles, as barycentric weights.  All weights are equal, `1/n^2`
/// of the triangle area each.
fn midpoint_nodes(n: usize) -> Vec<(f64, f64, f64)> {
    let mut out = Vec::with_capacity(n * n);
    let h = 1.0 / n as f64;
    for i in 0..n {
        for j in 0..(n - i) {
            let (a, b) = (i as f64 * h, j as f64 * h);
            // Upward subtriangle centroid.
            out.push((a + h / 3.0, b + h / 3.0));
            if j < n - i - 1 {
                // Downward subtriangle centroid.
                out.push((a + 2.0 * h / 3.0, b + 2.0 * h / 3.0));
            }
        }
    }
    out.into_iter().map(|(a, b)| (1.0 - a - b, a, b)).collect()
}

/// Degree-two Gauss nodes on the same `4n^2` subtriangle subdivision; the
/// slower reference quadrature for the midpoint rule.
fn gauss_nodes(n: usize) -> Vec<((f64, f64, f64), f64)> {
    // Three-point rule, weights 1/3, on each subtriangle of the 2n-fold
    // subdivision.
    let nn = 2 * n;
    let h = 1.0 / nn as f64;
    let mut out = Vec::new();
    let mut tri = |v0: (f64, f64), v1: (f64, f64), v2: (f64, f64)| {
        for k in 0..3 {
            let mut w = [1.0 / 6.0; 3];
            w[k] = 2.0 / 3.0;
            let a = w[0] * v0.0 + w[1] * v1.0 + w[2] * v2.0;
            let b = w[0] * v0.1 + w[1] * v1.1 + w[2] * v2.1;
            out.push(((1.0 - a - b, a, b), 1.0 / 3.0));
        }
    };
    for i in 0..nn {
        for j in 0..(nn - i) {
            let (a, b) = (i as f64 * h, j as f64 * h);
            tri((a, b), (a + h, b), (a, b + h));
            if j < nn - i - 1 {
                tri((a + h, b), (a + h, b + h), (a, b + h));
            }
        }
    }
    // Weights sum to one per subtriangle, the same convention as the
    // midpoint nodes.
    out
}

/// The target's inverse at `w`, Newton-refined from `seed` (the affine
/// piece's exact preimage, which is within the interpolation gap of the true
/// one); falls back to the oracle's own inversion when refinement stalls.
fn oracle_invert_seeded(oracle: &dyn MapOracle, w: Point2, seed: Point2) -> Option<Point2> {
    let mut z = seed;
    for _ in 0..60 {
        let f = oracle.eval(z) - w;
        if f.norm() <= 1e-13 {
            return Some(z);
        }
        let j = match oracle.diff(z).inverse() {
            Some(j) => j,
            None => break,
        };
        let step = j.mul_vec(f);
        if !step.x.is_finite() || !step.y.is_finite() || step.norm() > 1.0 {
            break;
        }
        z = z - step;
    }
    oracle.invert(w)
}

fn w1p_with_nodes(
    oracle: &dyn MapOracle,
    pa: &PAMap,
    p: f64,
    nodes: &[((f64, f64, f64), f64)],
    cells_per_tri: f64,
) -> (f64, f64) {
    let per_tri: Vec<(f64, f64)> = (0..pa.triangle_count())
        .into_par_iter()
        .map(|t| {
            let tri = &pa.mesh.triangles[t];
            let (da, db, dc) = (
                pa.mesh.vertices[tri[0]],
                pa.mesh.vertices[tri[1]],
                pa.mesh.vertices[tri[2]],
            );
            let (ia, ib, ic) =
                (pa.mesh.images[tri[0]], pa.mesh.images[tri[1]], pa.mesh.images[tri[2]]);
            let m = pa.diff(t);
            let dom_area = signed_area(da, db, dc);
            let img_area = signed_area(ia, ib, ic);
            let mut fwd = 0.0f64;
            for &(w, wt) in nodes {
                let z = at_weights(da, db, dc, w);
                fwd += wt * oracle.diff(z).sub_mat(m).op_norm().powf(p);
            }
            fwd *= dom_area / cells_per_tri;
            let mut inv = 0.0f64;
            if pa.orientation_ok {
                let minv = match pa.tris[t].minv {
                    Some(mi) => mi,
                    None => return (fwd, f64::INFINITY),
                };
                for &(w, wt) in nodes {
                    // Push the node forward with the affine piece, pull it
                    // back with the target's inverse.
                    let wimg = at_weights(ia, ib, ic, w);
                    let z_pa = at_weights(da, db, dc, w);
                    let gap = match oracle_invert_seeded(oracle, wimg, z_pa) {
                        Some(zu) => match oracle.diff(zu).inverse() {
                            Some(dui) => dui.sub_mat(minv).op_norm(),
                            None => f64::INFINITY,
                        },
                        None => f64::INFINITY,
                    };
                    inv += wt * gap.powf(p);
                }
                inv *= img_area / cells_per_tri;
            } else {
                inv = f64::INFINITY;
            }
            (fwd, inv)
        })
        .collect();
    let (sf, si) = per_tri
        .into_iter()
        .fold((0.0f64, 0.0f64), |acc, e| (acc.0 + e.0, acc.1 + e.1));
    (sf.powf(1.0 / p), si.powf(1.0 / p))
}

/// W^{1,p} seminorm distances `(|Du - Dv|_p, |Du^-1 - Dv^-1|_p)` of the
/// differentials, operator norm pointwise.  Forward integrates over the
/// meshed domain region; inverse over its image by the change of variables
/// `w = v(z)` (so `|det Dv_T|` carries the measure and the target inverse is
/// evaluated at pushed-forward nodes).  Midpoint rule on `n^2` congruent
/// subtriangles per mesh triangle.
pub fn w1p_errors(oracle: &dyn MapOracle, pa: &PAMap, p: f64, n: usize) -> (f64, f64) {
    let n = n.max(1);
    let nodes: Vec<((f64, f64, f64), f64)> =
        midpoint_nodes(n).into_iter().map(|w| (w, 1.0)).collect();
    w1p_with_nodes(oracle, pa, p, &nodes, (n * n) as f64)
}

/// Reference value for [`w1p_errors`]: three-point degree-two Gauss rule on
/// a four-times finer subdivision.
pub fn w1p_errors_gauss(oracle: &dyn MapOracle, pa: &PAMap, p: f64, n: usize) -> (f64, f64) {
    let n = n.max(1);
    let nodes = gauss_nodes(n);
    w1p_with_nodes(oracle, pa, p, &nodes, (4 * n * n) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lebesgue::{classify, interpolate};
    use crate::maps::{Affine, Domain, Identity, ShearSine};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn affine_pa() -> (Affine, PAMap) {
        let m = Affine::example();
        let c = classify(&m, &Domain::UnitSquare, 0.125, 1e-9, 2.0, 2);
        let mesh = interpolate(&m, &c);
        let pa = PAMap::new(mesh).unwrap();
        (m, pa)
    }

    #[test]
    fn locate_and_eval_on_the_accepted_block() {
        let (m, pa) = affine_pa();
        // Accepted block is [1/4, 3/4]^2; inside it the interpolant equals
        // the map exactly.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let p = Point2::new(rng.gen_range(0.251..0.749), rng.gen_range(0.251..0.749));
            let v = pa.eval(p).expect("inside the meshed block");
            assert!(v.dist(m.eval(p)) < 1e-13);
        }
        assert!(pa.eval(Point2::new(0.1, 0.1)).is_none());
        assert!(pa.eval(Point2::new(0.9, 0.5)).is_none());
    }

    #[test]
    fn invert_round_trips() {
        let (m, pa) = affine_pa();
        assert!(pa.orientation_ok);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..500 {
            let p = Point2::new(rng.gen_range(0.26..0.74), rng.gen_range(0.26..0.74));
            let w = m.eval(p);
            let back = pa.invert(w).expect("inside the image block");
            assert!(back.dist(p) < 1e-12);
        }
    }

    #[test]
    fn bilip_of_an_affine_mesh_is_the_matrix_constant() {
        let (m, pa) = affine_pa();
        let (smax, smin) = m.m.singular_values();
        let want = smax.max(1.0 / smin);
        assert!((pa.bilip - want).abs() < 1e-12, "{} vs {want}", pa.bilip);
    }

    #[test]
    fn injectivity_accepts_a_valid_mesh_and_flags_overlap() {
        let (_, pa) = affine_pa();
        let ok = check_injective(&pa.mesh);
        assert!(ok.injective, "{:?}", ok.witness);

        // Two disjoint domain triangles whose images coincide: not injective.
        let bad = MeshData {
            vertices: vec![
                Point2::new(0.0, 0.0),
                Point2::new(1.0, 0.0),
                Point2::new(0.0, 1.0),
                Point2::new(3.0, 0.1),
                Point2::new(4.0, 0.1),
                Point2::new(3.0, 1.1),
            ],
            images: vec![
                Point2::new(0.0, 0.0),
                Point2::new(1.0, 0.0),
                Point2::new(0.0, 1.0),
                Point2::new(0.1, 0.1),
                Point2::new(1.1, 0.1),
                Point2::new(0.1, 1.1),
            ],
            triangles: vec![[0, 1, 2], [3, 4, 5]],
        };
        let v = check_injective(&bad);
        assert!(!v.injective);
        assert!(v.witness.unwrap().contains("overlap"));

        // A flipped image triangle is caught with the triangle as witness.
        let mut flipped = pa.mesh.clone();
        let [a, b, c] = flipped.triangles[0];
        flipped.triangles[0] = [a, c, b];
        let dom_orientation =
            signed_area(flipped.vertices[a], flipped.vertices[c], flipped.vertices[b]);
        assert!(dom_orientation < 0.0);
        let v = check_injective(&flipped);
        assert!(!v.injective);
        assert!(v.witness.unwrap().contains("signed area"));
    }

    #[test]
    fn figure_one_fold_is_reported_with_its_flipped_triangle() {
        // Unit square split along the southwest-northeast diagonal, with the
        // southeast corner pulled across the diagonal: triangle 0 flips and
        // its image lands inside the image of triangle 1.
        let mesh = MeshData {
            vertices: vec![
                Point2::new(0.0, 0.0),
                Point2::new(1.0, 0.0),
                Point2::new(1.0, 1.0),
                Point2::new(0.0, 1.0),
            ],
            images: vec![
                Point2::new(0.0, 0.0),
                Point2::new(0.2, 0.4),
                Point2::new(1.0, 1.0),
                Point2::new(0.0, 1.0),
            ],
            triangles: vec![[0, 1, 2], [0, 2, 3]],
        };
        let v = check_injective(&mesh);
        assert!(!v.injective);
        let w = v.witness.unwrap();
        assert!(w.contains("triangle 0"), "{w}");
        let area = signed_area(mesh.images[0], mesh.images[1], mesh.images[2]);
        assert!((area - -0.1).abs() < 1e-15, "flipped area should be -0.1, got {area}");
        // And the brute oracle names the same defect.
        assert!(brute_overlap_witness(&mesh).unwrap().contains("triangle 0"));
    }

    #[test]
    fn boundary_loop_walks_the_block_perimeter() {
        let (_, pa) = affine_pa();
        // 4x4 accepted cells: the boundary is the 16-edge perimeter.
        let walk = boundary_loop(&pa.mesh).unwrap();
        assert_eq!(walk.len(), 16);
        let poly = Polygon::new(walk.iter().map(|&v| pa.mesh.vertices[v]).collect());
        assert!((poly.signed_area() - 0.25).abs() < 1e-12);
        let img = Polygon::new(walk.iter().map(|&v| pa.mesh.images[v]).collect());
        assert!(img.signed_area() > 0.0);
        assert!(img.is_simple(&SnapGrid::for_diameter(2.0 * img.diameter())));
    }

    #[test]
    fn boundary_loop_rejects_two_islands() {
        let mesh = MeshData {
            vertices: vec![
                Point2::new(0.0, 0.0),
                Point2::new(1.0, 0.0),
                Point2::new(0.0, 1.0),
                Point2::new(3.0, 0.0),
                Point2::new(4.0, 0.0),
                Point2::new(3.0, 1.0),
            ],
            images: vec![
                Point2::new(0.0, 0.0),
                Point2::new(1.0, 0.0),
                Point2::new(0.0, 1.0),
                Point2::new(3.0, 0.0),
                Point2::new(4.0, 0.0),
                Point2::new(3.0, 1.0),
            ],
            triangles: vec![[0, 1, 2], [3, 4, 5]],
        };
        assert!(boundary_loop(&mesh).is_err());
    }

    #[test]
    fn affine_interpolant_has_zero_error_both_ways() {
        let (m, pa) = affine_pa();
        let (lf, li) = linf_errors(&m, &pa, 6);
        assert!(lf < 1e-13, "forward {lf}");
        assert!(li < 1e-11, "inverse {li}");
        let (wf, wi) = w1p_errors(&m, &pa, 2.0, 4);
        assert!(wf < 1e-12, "forward {wf}");
        assert!(wi < 1e-10, "inverse {wi}");
    }

    #[test]
    fn linf_matches_a_random_sampling_oracle() {
        // A genuinely curved map interpolated on a loose acceptance: the
        // lattice measurement and an independent random sampling must agree.
        let m = ShearSine::default();
        let l = m.lipschitz();
        let c = classify(&m, &Domain::UnitSquare, 0.125, 0.5, l, 2);
        assert!(!c.accepted.is_empty());
        let pa = PAMap::new(interpolate(&m, &c)).unwrap();
        let (lf, _) = linf_errors(&m, &pa, 24);
        assert!(lf > 1e-6, "curved map must show real error, got {lf}");
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut brute = 0.0f64;
        let mut hits = 0;
        while hits < 4000 {
            let p = Point2::new(rng.gen(), rng.gen());
            if let Some(v) = pa.eval(p) {
                brute = brute.max(m.eval(p).dist(v));
                hits += 1;
            }
        }
        assert!(
            (brute - lf).abs() <= 0.15 * lf,
            "lattice {lf} vs random {brute}"
        );
    }

    #[test]
    fn midpoint_quadrature_tracks_the_gauss_reference() {
        let m = ShearSine::default();
        let l = m.lipschitz();
        let c = classify(&m, &Domain::UnitSquare, 0.125, 0.5, l, 2);
        let pa = PAMap::new(interpolate(&m, &c)).unwrap();
        for &p in &[1.0, 2.0] {
            let (wf, wi) = w1p_errors(&m, &pa, p, 8);
            let (gf, gi) = w1p_errors_gauss(&m, &pa, p, 8);
            assert!(wf.is_finite() && gf > 0.0);
            assert!(
                (wf - gf).abs() <= 2e-2 * gf,
                "p={p} forward midpoint {wf} vs gauss {gf}"
            );
            assert!(
                (wi - gi).abs() <= 2e-2 * gi.max(1e-12),
                "p={p} inverse midpoint {wi} vs gauss {gi}"
            );
        }
    }

    #[test]
    fn flipped_meshes_report_infinite_inverse_error() {
        let m = Identity;
        // A hand-built fold: two triangles over the square, the second one
        // mapped onto the first.
        let mesh = MeshData {
            vertices: vec![
                Point2::new(0.0, 0.0),
                Point2::new(1.0, 0.0),
                Point2::new(1.0, 1.0),
                Point2::new(0.0, 1.0),
            ],
            images: vec![
                Point2::new(0.0, 0.0),
                Point2::new(1.0, 0.0),
                Point2::new(0.5, -0.1),
                Point2::new(0.0, 1.0),
            ],
            triangles: vec![[0, 1, 2], [0, 2, 3]],
        };
        let pa = PAMap::new(mesh).unwrap();
        assert!(!pa.orientation_ok);
        assert!(pa.bilip.is_infinite() || pa.bilip > 1.0);
        let (_, li) = linf_errors(&m, &pa, 4);
        assert!(li.is_infinite());
        let (_, wi) = w1p_errors(&m, &pa, 1.0, 2);
        assert!(wi.is_infinite());
    }
}
