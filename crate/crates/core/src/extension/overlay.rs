//! Extension of a boundary map to the square interior through a convex
//! reference polygon inscribed in the unit circle.
//!
//! Two piecewise-affine homeomorphisms are composed: a fan from the origin
//! carries the square onto the reference polygon, and the image polygon's
//! ear-clip triangulation (transplanted to the reference vertices, which is
//! valid because chords of a convex polygon cross iff their index pairs
//! interleave) carries the reference polygon onto the image.  Overlay cells
//! — ear triangles clipped by fan sectors — are the linearity pieces of the
//! composition.  Every overlay vertex has a symbolic identity so coordinates
//! shared between cells are computed exactly once and match bitwise.

use std::collections::HashMap;

use super::earclip::earclip;
use super::ExtendError;
use crate::geometry::{signed_area, Mat2, Point2, Triangle};
use crate::io::MeshData;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
enum PtId {
    /// Reference polygon vertex.
    K(u32),
    /// The origin.
    Center,
    /// Intersection of clip ray `ray` with the chord `(u, v)`, `u < v`.
    Cross { ray: u32, u: u32, v: u32 },
}

/// What straight piece of the arrangement an overlay-polygon edge lies on.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum EdgeLab {
    /// Chord between reference vertices `u < v`.
    Chord(u32, u32),
    /// Segment from a reference vertex to the origin (pre-split edge).
    Spoke(u32),
    /// Along a clip ray.
    Ray,
}

struct ClipPoly {
    /// Vertices, counterclockwise.
    v: Vec<(PtId, Point2)>,
    /// `lab[k]` is the label of the edge from `v[k]` to `v[k+1]` (cyclic).
    lab: Vec<EdgeLab>,
}

fn on_ray(id: PtId, ray: u32) -> bool {
    match id {
        PtId::Center => true,
        PtId::K(j) => j == ray,
        PtId::Cross { ray: r, .. } => r == ray,
    }
}

/// A cell whose vertices all sit on one chord is a measure-zero sliver
/// (a triangle grazing a sector along its edge); it carries no area and
/// must be dropped, exactly, by identity.
fn all_on_one_chord(ids: &[PtId]) -> bool {
    for &id in ids {
        if let PtId::Cross { u, v, .. } = id {
            let on = ids.iter().all(|&w| match w {
                PtId::K(a) => a == u || a == v,
                PtId::Cross { u: a, v: b, .. } => a == u && b == v,
                PtId::Center => false,
            });
            if on {
                return true;
            }
        }
    }
    false
}

/// Signed side of `p` relative to the line through the origin along `d`
/// (the ray `ray`).  Points whose identity places them on that line get an
/// exact zero.  `flip` negates, for clipping against the upper sector ray.
fn sigma(id: PtId, p: Point2, ray: u32, d: Point2, flip: bool) -> f64 {
    if on_ray(id, ray) {
        return 0.0;
    }
    if flip {
        p.cross(d)
    } else {
        d.cross(p)
    }
}

type CrossCache = HashMap<(u32, u32, u32), (Point2, f64)>;

/// Intersection of clip ray `ray` with the chord labeled `lab`, cached so
/// every cell referencing it sees the same bits.  Also stores the chord
/// parameter, used later for the image-side position.
fn crossing(
    lab: EdgeLab,
    ray: u32,
    kpts: &[Point2],
    cache: &mut CrossCache,
) -> Result<(PtId, Point2), ExtendError> {
    let (u, v) = match lab {
        EdgeLab::Chord(u, v) => (u, v),
        other => {
            return Err(ExtendError::BadCell(format!(
                "clip ray {ray} crossed a {other:?} edge"
            )))
        }
    };
    let id = PtId::Cross { ray, u, v };
    if let Some(&(p, _)) = cache.get(&(ray, u, v)) {
        return Ok((id, p));
    }
    let d = kpts[ray as usize];
    let (a, b) = (kpts[u as usize], kpts[v as usize]);
    let ca = d.cross(a);
    let cb = d.cross(b);
    if ca == cb {
        return Err(ExtendError::BadCell(format!("chord ({u}, {v}) parallel to ray {ray}")));
    }
    let s = ca / (ca - cb);
    let p = a.lerp(b, s);
    cache.insert((ray, u, v), (p, s));
    Ok((id, p))
}

/// One Sutherland-Hodgman pass against the half-plane bounded by clip ray
/// `ray` (keep side `sigma >= 0`).
fn clip(
    poly: &ClipPoly,
    ray: u32,
    flip: bool,
    kpts: &[Point2],
    cache: &mut CrossCache,
) -> Result<ClipPoly, ExtendError> {
    let m = poly.v.len();
    let d = kpts[ray as usize];
    let sg: Vec<f64> = poly.v.iter().map(|&(id, p)| sigma(id, p, ray, d, flip)).collect();
    let mut out_v: Vec<(PtId, Point2)> = Vec::with_capacity(m + 2);
    let mut out_l: Vec<EdgeLab> = Vec::with_capacity(m + 2);
    for j in 0..m {
        let jn = (j + 1) % m;
        let (sp, sq) = (sg[j], sg[jn]);
        let lab = poly.lab[j];
        if sq >= 0.0 {
            if sp < 0.0 && sq > 0.0 {
                let (xid, xp) = crossing(lab, ray, kpts, cache)?;
                out_v.push((xid, xp));
                out_l.push(lab);
            }
            out_v.push(poly.v[jn]);
            out_l.push(poly.lab[jn]);
        } else if sp > 0.0 {
            let (xid, xp) = crossing(lab, ray, kpts, cache)?;
            out_v.push((xid, xp));
            out_l.push(EdgeLab::Ray);
        }
    }
    // Edges whose endpoints both sit on the clip ray run along it, whatever
    // subject edge they came from.
    let k = out_v.len();
    for j in 0..k {
        let jn = (j + 1) % k;
        if on_ray(out_v[j].0, ray) && on_ray(out_v[jn].0, ray) {
            out_l[j] = EdgeLab::Ray;
        }
    }
    Ok(ClipPoly { v: out_v, lab: out_l })
}

/// Drops consecutive duplicate identities (cyclically).
fn dedup(poly: ClipPoly) -> ClipPoly {
    let mut v: Vec<(PtId, Point2)> = Vec::with_capacity(poly.v.len());
    let mut lab: Vec<EdgeLab> = Vec::with_capacity(poly.lab.len());
    for (k, &(id, p)) in poly.v.iter().enumerate() {
        if v.last().map(|&(lid, _)| lid) == Some(id) {
            if let Some(last) = lab.last_mut() {
                *last = poly.lab[k];
            }
            continue;
        }
        v.push((id, p));
        lab.push(poly.lab[k]);
    }
    while v.len() > 1 && v[0].0 == v[v.len() - 1].0 {
        v.pop();
        lab.pop();
    }
    ClipPoly { v, lab }
}

/// Reference-circle angles: image arc length blended with uniform spacing.
/// The blend keeps every angular gap strictly inside `(0, 0.95 pi)` so the
/// origin stays well inside the polygon.  `attempt > 0` adds a small
/// index-dependent jitter to the gaps: a uniform reblend cannot move a
/// diagonal that symmetry pins through the origin, a lopsided one can.
fn circle_angles(arcs: &[f64], attempt: i32) -> Vec<f64> {
    let n = arcs.len();
    let per: f64 = arcs.iter().sum();
    let tau = std::f64::consts::TAU;
    let uniform = tau / n as f64;
    let cap = 0.95 * std::f64::consts::PI;
    let gmax = arcs.iter().cloned().fold(0.0f64, f64::max) / per * tau;
    let mut lam = 0.9f64;
    if gmax > cap {
        lam = lam.min(0.98 * (cap - uniform) / (gmax - uniform));
    }
    let mut gaps: Vec<f64> = arcs
        .iter()
        .map(|&a| lam * (a / per * tau) + (1.0 - lam) * uniform)
        .collect();
    if attempt > 0 {
        let amp = 0.004 * attempt as f64;
        for (j, g) in gaps.iter_mut().enumerate() {
            *g *= 1.0 + amp * (2.399963 * j as f64 + attempt as f64).sin();
        }
        let sum: f64 = gaps.iter().sum();
        for g in &mut gaps {
            *g *= tau / sum;
        }
    }
    let mut th = 0.0;
    let mut out = Vec::with_capacity(n);
    for &g in &gaps {
        out.push(th);
        th += g;
    }
    out
}

fn chord_lab(a: u32, b: u32) -> EdgeLab {
    EdgeLab::Chord(a.min(b), a.max(b))
}

/// Whether sorted chord `(u, v)` is a side of the `n`-gon.
fn is_side(u: u32, v: u32, n: u32) -> bool {
    v == u + 1 || (u == 0 && v == n - 1)
}

/// Builds the extension mesh for one square whose boundary image polygon is
/// not star-shaped around its vertex average.  `domain_pts` trace the square
/// boundary counterclockwise, `image_pts` their (simple, counterclockwise)
/// images, `center` is the square center.
pub fn overlay_extension(
    domain_pts: &[Point2],
    image_pts: &[Point2],
    center: Point2,
) -> Result<MeshData, ExtendError> {
    let n = domain_pts.len();
    let nu = n as u32;
    let ears = earclip(image_pts).map_err(ExtendError::EarStuck)?;
    let mut diagonals: Vec<(u32, u32)> = Vec::new();
    for t in &ears {
        for e in 0..3 {
            let (a, b) = (t[e] as u32, t[(e + 1) % 3] as u32);
            let (u, v) = (a.min(b), a.max(b));
            if !is_side(u, v, nu) && !diagonals.contains(&(u, v)) {
                diagonals.push((u, v));
            }
        }
    }
    let arcs: Vec<f64> =
        (0..n).map(|i| image_pts[i].dist(image_pts[(i + 1) % n])).collect();

    // Place reference vertices; retry with a perturbed blend if a diagonal
    // passes too close to the origin.
    let mut kpts: Option<Vec<Point2>> = None;
    'attempt: for a in 0..8 {
        let angles = circle_angles(&arcs, a);
        let ks: Vec<Point2> = angles.iter().map(|&t| Point2::new(t.cos(), t.sin())).collect();
        for &(u, v) in &diagonals {
            let (p, q) = (ks[u as usize], ks[v as usize]);
            if p.cross(q).abs() / (q - p).norm() < 1e-9 {
                continue 'attempt;
            }
        }
        kpts = Some(ks);
        break;
    }
    let kpts = kpts.ok_or_else(|| {
        ExtendError::Degenerate("no reference placement separates the diagonals from the origin".into())
    })?;

    let o = Point2::new(0.0, 0.0);

    // Split the ear containing the origin into three origin fans so no clip
    // line meets a chord at the origin.
    let mut pieces: Vec<([PtId; 3], [EdgeLab; 3])> = Vec::new();
    let mut center_ear: Option<[usize; 3]> = None;
    for t in &ears {
        let (a, b, c) = (kpts[t[0]], kpts[t[1]], kpts[t[2]]);
        let inside =
            signed_area(a, b, o) > 0.0 && signed_area(b, c, o) > 0.0 && signed_area(c, a, o) > 0.0;
        if inside && center_ear.is_none() {
            center_ear = Some(*t);
            let ids = [t[0] as u32, t[1] as u32, t[2] as u32];
            for e in 0..3 {
                let (u, v) = (ids[e], ids[(e + 1) % 3]);
                pieces.push((
                    [PtId::K(u), PtId::K(v), PtId::Center],
                    [chord_lab(u, v), EdgeLab::Spoke(v), EdgeLab::Spoke(u)],
                ));
            }
        } else {
            let ids = [t[0] as u32, t[1] as u32, t[2] as u32];
            pieces.push((
                [PtId::K(ids[0]), PtId::K(ids[1]), PtId::K(ids[2])],
                [chord_lab(ids[0], ids[1]), chord_lab(ids[1], ids[2]), chord_lab(ids[2], ids[0])],
            ));
        }
    }
    let center_ear = center_ear.ok_or_else(|| {
        ExtendError::Degenerate("origin not strictly inside any reference triangle".into())
    })?;

    // Clip every piece against every fan sector.
    let mut cache: CrossCache = HashMap::new();
    let mut cells: Vec<(u32, Vec<PtId>)> = Vec::new();
    for (ids, labs) in &pieces {
        for i in 0..nu {
            let poly = ClipPoly {
                v: ids.iter().map(|&id| (id, coord_of(id, &kpts, &cache))).collect(),
                lab: labs.to_vec(),
            };
            let lo = clip(&poly, i, false, &kpts, &mut cache)?;
            if lo.v.len() < 3 {
                continue;
            }
            let hi = clip(&lo, (i + 1) % nu, true, &kpts, &mut cache)?;
            let cell = dedup(hi);
            if cell.v.len() < 3 {
                continue;
            }
            let all_lo = cell.v.iter().all(|&(id, _)| on_ray(id, i));
            let all_hi = cell.v.iter().all(|&(id, _)| on_ray(id, (i + 1) % nu));
            if all_lo || all_hi {
                continue;
            }
            let ids: Vec<PtId> = cell.v.iter().map(|&(id, _)| id).collect();
            if all_on_one_chord(&ids) {
                continue;
            }
            cells.push((i, ids));
        }
    }

    // Resolve each identity to one (domain, image) pair.
    let mut fan: Vec<Option<(Mat2, Point2)>> = vec![None; n];
    let mut fan_of = |i: u32| -> Result<(Mat2, Point2), ExtendError> {
        let iu = i as usize;
        if let Some(a) = fan[iu] {
            return Ok(a);
        }
        let j = (iu + 1) % n;
        let a = Triangle::new(o, kpts[iu], kpts[j])
            .affine_to(&Triangle::new(center, domain_pts[iu], domain_pts[j]))
            .ok_or_else(|| ExtendError::BadCell(format!("degenerate fan sector {i}")))?;
        fan[iu] = Some(a);
        Ok(a)
    };
    let ce = center_ear;
    let (com, coa) = Triangle::new(kpts[ce[0]], kpts[ce[1]], kpts[ce[2]])
        .affine_to(&Triangle::new(image_pts[ce[0]], image_pts[ce[1]], image_pts[ce[2]]))
        .ok_or_else(|| ExtendError::BadCell("degenerate origin ear".into()))?;
    let center_image = com.mul_vec(o - kpts[ce[0]]) + coa;

    let mut index: HashMap<PtId, usize> = HashMap::new();
    let mut dom: Vec<Point2> = Vec::with_capacity(n + cache.len() + 1);
    let mut img: Vec<Point2> = Vec::with_capacity(n + cache.len() + 1);
    for j in 0..n {
        index.insert(PtId::K(j as u32), j);
        dom.push(domain_pts[j]);
        img.push(image_pts[j]);
    }
    let mut triangles: Vec<[usize; 3]> = Vec::new();
    for (_, cell) in &cells {
        let mut resolved: Vec<usize> = Vec::with_capacity(cell.len());
        for &id in cell {
            if let Some(&k) = index.get(&id) {
                resolved.push(k);
                continue;
            }
            let (d, im) = match id {
                PtId::K(_) => unreachable!(),
                PtId::Center => (center, center_image),
                PtId::Cross { ray, u, v } => {
                    let (p, s) = cache[&(ray, u, v)];
                    let (m, t) = fan_of(ray)?;
                    (m.mul_vec(p) + t, image_pts[u as usize].lerp(image_pts[v as usize], s))
                }
            };
            let k = dom.len();
            index.insert(id, k);
            dom.push(d);
            img.push(im);
            resolved.push(k);
        }
        for j in 1..resolved.len() - 1 {
            triangles.push([resolved[0], resolved[j], resolved[j + 1]]);
        }
    }

    let mesh = MeshData { vertices: dom, images: img, triangles };
    check_areas(&mesh, domain_pts, image_pts)?;
    Ok(mesh)
}

fn coord_of(id: PtId, kpts: &[Point2], cache: &CrossCache) -> Point2 {
    match id {
        PtId::K(j) => kpts[j as usize],
        PtId::Center => Point2::new(0.0, 0.0),
        PtId::Cross { ray, u, v } => cache[&(ray, u, v)].0,
    }
}

fn shoelace(pts: &[Point2]) -> f64 {
    let mut s = 0.0;
    for i in 0..pts.len() {
        let j = (i + 1) % pts.len();
        s += pts[i].cross(pts[j]);
    }
    0.5 * s
}

/// Every triangle positively oriented on both sides, and the triangle areas
/// sum to the boundary polygon areas (so the cells tile without overlap).
fn check_areas(
    mesh: &MeshData,
    domain_pts: &[Point2],
    image_pts: &[Point2],
) -> Result<(), ExtendError> {
    let mut dom_sum = 0.0;
    let mut img_sum = 0.0;
    for t in &mesh.triangles {
        let da = signed_area(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]);
        let ia = signed_area(mesh.images[t[0]], mesh.images[t[1]], mesh.images[t[2]]);
        if da <= 0.0 || ia <= 0.0 {
            return Err(ExtendError::Flipped(format!(
                "triangle {t:?} has areas {da:.3e} / {ia:.3e}; domain {:?} {:?} {:?} image {:?} {:?} {:?}",
                mesh.vertices[t[0]],
                mesh.vertices[t[1]],
                mesh.vertices[t[2]],
                mesh.images[t[0]],
                mesh.images[t[1]],
                mesh.images[t[2]]
            )));
        }
        dom_sum += da;
        img_sum += ia;
    }
    let dom_ref = shoelace(domain_pts);
    let img_ref = shoelace(image_pts);
    if (dom_sum - dom_ref).abs() > 1e-9 * dom_ref.max(1e-300)
        || (img_sum - img_ref).abs() > 1e-9 * img_ref.max(1e-300)
    {
        return Err(ExtendError::AreaMismatch(format!(
            "domain {dom_sum} vs {dom_ref}, image {img_sum} vs {img_ref}"
        )));
    }
    Ok(())
}
