//! End-to-end driver: classify, interpolate the accepted region, tile the
//! rest, build the skeleton map, extend square by square, glue, measure,
//! and report.

pub mod emit;

use crate::extension::{extend_square, measured_bilip};
use crate::geometry::predicates::SnapGrid;
use crate::geometry::{signed_area, validate_triangulation, Point2, Triangulation};
use crate::grid::{
    build_crosses, build_grid, build_grid_map, build_tiling, verify_grid_bilip, write_grid,
    EdgeClass, GridMap, GridQ, Tiling,
};
use crate::io::MeshData;
use crate::lebesgue::{
    classify, delta_of_eta, eta_budget, interpolate, write_classification,
    LebesgueClassification,
};
use crate::maps::{Domain, MapOracle};
use crate::metrics::{boundary_loop, check_injective, linf_errors, w1p_errors, PAMap};
use rayon::prelude::*;
use std::collections::HashMap;
use std::time::Instant;

/// Ceiling constant for a single-square extension.
pub const C3: f64 = 636000.0;
/// Ceiling constant for the glued map: `72^4 * C3`.
pub const C1: f64 = 72.0 * 72.0 * 72.0 * 72.0 * C3;

#[derive(Debug, Clone)]
pub struct Params {
    /// Target for all four error terms.
    pub eps: f64,
    pub p: f64,
    /// Initial cell side; halved until the uncovered area fits the internal
    /// budget or the cap is reached.
    pub r0: f64,
    pub max_halvings: u32,
    pub quad_n: usize,
    pub max_depth: u32,
    /// Sample pairs for the skeleton ratio check.
    pub pairs: usize,
    pub seed: u64,
    /// Plain vertex interpolation on the full grid, no adjustment; the
    /// configuration that can fold.
    pub naive: bool,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            eps: 0.1,
            p: 1.0,
            r0: 0.125,
            max_halvings: 6,
            quad_n: 16,
            max_depth: 8,
            pairs: 100_000,
            seed: 0,
            naive: false,
        }
    }
}

/// Largest internal area budget whose guaranteed uncovered-region
/// contributions stay under the target: with `C = L + C1 L^4`,
/// `C eps^{1/p} + 2 (C sqrt(eps/pi) + eps) <= eps_target`.
/// Monotone in `eps`, solved by bisection.
pub fn internal_eps(l: f64, p: f64, eps_target: f64) -> f64 {
    let c = l + C1 * l.powi(4);
    let ok = |e: f64| {
        c * e.powf(1.0 / p) + 2.0 * (c * (e / std::f64::consts::PI).sqrt() + e) <= eps_target
    };
    let mut lo = 0.0f64;
    let mut hi = eps_target;
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

/// Everything the emitters need, in deterministic form.  Timings are kept
/// apart from the report so reruns with one seed are bitwise identical.
#[derive(Debug, Clone)]
pub struct Report {
    pub map: String,
    pub domain: String,
    pub eps_target: f64,
    pub p: f64,
    pub r0: f64,
    pub r: f64,
    pub max_halvings: u32,
    pub quad_n: usize,
    pub max_depth: u32,
    pub pairs: usize,
    pub seed: u64,
    pub naive: bool,
    pub eta: f64,
    pub delta: f64,
    pub eps_internal: f64,
    pub area_omega: f64,
    pub area_deficit: f64,
    pub sliver_area: f64,
    pub best_effort: bool,
    pub accepted_squares: usize,
    pub outside_squares: usize,
    pub mesh_vertices: usize,
    pub mesh_triangles: usize,
    pub linf_map: f64,
    pub linf_inv: f64,
    pub w1p_map: f64,
    pub w1p_inv: f64,
    pub linf_map_eps: f64,
    pub linf_inv_eps: f64,
    pub w1p_map_eps: f64,
    pub w1p_inv_eps: f64,
    pub bilip_v: f64,
    pub bilip_v_eps: f64,
    pub extension_max_bilip: f64,
    pub grid_ratio_lower: f64,
    pub grid_ratio_upper: f64,
    pub injective: bool,
    pub injectivity_witness: Option<String>,
    pub orientation_ok: bool,
    pub exit_ok: bool,
}

pub struct RunOutput {
    pub report: Report,
    pub mesh: MeshData,
    pub classification: Option<LebesgueClassification>,
    pub tiling: Option<Tiling>,
    pub grid_dump: String,
    /// Domain locations of the cross points, sorted, for the figure.
    pub cross_points: Vec<Point2>,
    pub timings: Vec<(String, f64)>,
}

/// A failed run, carrying whatever artifacts the stages before the failure
/// produced.
#[derive(Debug)]
pub struct RunFailure {
    pub stage: &'static str,
    pub message: String,
    pub classification_dump: Option<String>,
    pub grid_dump: Option<String>,
}

impl std::fmt::Display for RunFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} stage failed: {}", self.stage, self.message)
    }
}

fn bit_key(p: Point2) -> (u64, u64) {
    (p.x.to_bits(), p.y.to_bits())
}

struct Gluer {
    out: MeshData,
    ids: HashMap<(u64, u64), usize>,
}

impl Gluer {
    fn new() -> Gluer {
        Gluer { out: MeshData::default(), ids: HashMap::new() }
    }

    /// Interns a vertex by the exact bits of its domain coordinates.  A
    /// revisit must carry the identical image bits: every stage computes
    /// shared values from the same expressions, so a mismatch is a real
    /// continuity defect, not roundoff.
    fn intern(&mut self, z: Point2, img: Point2) -> Result<usize, String> {
        match self.ids.entry(bit_key(z)) {
            std::collections::hash_map::Entry::Occupied(e) => {
                let id = *e.get();
                let prev = self.out.images[id];
                if prev.x.to_bits() != img.x.to_bits() || prev.y.to_bits() != img.y.to_bits() {
                    return Err(format!(
                        "glue continuity broken at ({}, {}): image ({}, {}) vs ({}, {})",
                        z.x, z.y, prev.x, prev.y, img.x, img.y
                    ));
                }
                Ok(id)
            }
            std::collections::hash_map::Entry::Vacant(v) => {
                self.out.vertices.push(z);
                self.out.images.push(img);
                v.insert(self.out.vertices.len() - 1);
                Ok(self.out.vertices.len() - 1)
            }
        }
    }
}

/// Glues the accepted-region interpolation with the per-square extensions
/// into one mesh.  Accepted cells that border finer tiling squares gain
/// hanging vertices on their sides; such cells are re-meshed as a fan from
/// their center (the fan restricts the same two-triangle interpolant), so
/// the glued mesh is a proper triangulation with no T-junctions.
pub fn glue(
    class: &LebesgueClassification,
    q: &GridQ,
    gmap: &GridMap,
    eps_mesh: &MeshData,
    extensions: &[MeshData],
) -> Result<MeshData, String> {
    let mut g = Gluer::new();
    let eps_ids: Vec<usize> = eps_mesh
        .vertices
        .iter()
        .zip(&eps_mesh.images)
        .map(|(&z, &u)| g.intern(z, u))
        .collect::<Result<_, _>>()?;

    // Hanging candidates per accepted cell: the endpoints of the grid edges
    // running along its sides (corners included; filtered below).
    let mut on_cell: HashMap<(i32, i32), Vec<(Point2, Point2)>> = HashMap::new();
    for (eid, edge) in q.edges.iter().enumerate() {
        if edge.class == EdgeClass::EpsBoundary {
            let cell = edge.eps_cell.ok_or("eps edge without its cell")?;
            for &(_, z, u) in &gmap.polylines[eid] {
                on_cell.entry(cell).or_default().push((z, u));
            }
        }
    }

    let mut cells: Vec<(i32, i32)> = class.accepted.iter().copied().collect();
    cells.sort_unstable();
    for (k, &(i, j)) in cells.iter().enumerate() {
        let t0 = eps_mesh.triangles[2 * k];
        let t1 = eps_mesh.triangles[2 * k + 1];
        let (sw, se, ne, nw) = (eps_ids[t0[0]], eps_ids[t0[1]], eps_ids[t0[2]], eps_ids[t1[2]]);
        let corner_keys = [
            bit_key(g.out.vertices[sw]),
            bit_key(g.out.vertices[se]),
            bit_key(g.out.vertices[ne]),
            bit_key(g.out.vertices[nw]),
        ];
        let mut extra = on_cell.remove(&(i, j)).unwrap_or_default();
        extra.sort_by_key(|&(z, _)| bit_key(z));
        extra.dedup_by_key(|&mut (z, _)| bit_key(z));
        extra.retain(|&(z, _)| !corner_keys.contains(&bit_key(z)));
        if extra.is_empty() {
            g.out.triangles.push([sw, se, ne]);
            g.out.triangles.push([sw, ne, nw]);
            continue;
        }
        let (psw, pse, pne, pnw) =
            (g.out.vertices[sw], g.out.vertices[se], g.out.vertices[ne], g.out.vertices[nw]);
        let mut sides: [Vec<(Point2, Point2)>; 4] = Default::default();
        for &(z, u) in &extra {
            let side = if z.y == psw.y {
                0
            } else if z.x == pse.x {
                1
            } else if z.y == pne.y {
                2
            } else if z.x == psw.x {
                3
            } else {
                return Err(format!(
                    "hanging vertex ({}, {}) is not on a side of accepted cell ({i}, {j})",
                    z.x, z.y
                ));
            };
            sides[side].push((z, u));
        }
        sides[0].sort_by(|a, b| a.0.x.total_cmp(&b.0.x));
        sides[1].sort_by(|a, b| a.0.y.total_cmp(&b.0.y));
        sides[2].sort_by(|a, b| b.0.x.total_cmp(&a.0.x));
        sides[3].sort_by(|a, b| b.0.y.total_cmp(&a.0.y));
        let mut chain: Vec<usize> = Vec::with_capacity(4 + extra.len());
        for (corner, side) in [(sw, 0usize), (se, 1), (ne, 2), (nw, 3)] {
            chain.push(corner);
            for &(z, u) in &sides[side] {
                chain.push(g.intern(z, u)?);
            }
        }
        // Center vertex: the interpolant is affine along the diagonal, so
        // its value at the center is the midpoint of the corner images.
        let center = class.cell_square(i, j).center;
        let center_img = g.out.images[sw].lerp(g.out.images[ne], 0.5);
        let c_id = g.intern(center, center_img)?;
        let n = chain.len();
        for a in 0..n {
            g.out.triangles.push([c_id, chain[a], chain[(a + 1) % n]]);
        }
        let _ = (psw, pnw);
    }

    for ext in extensions {
        let map: Vec<usize> = ext
            .vertices
            .iter()
            .zip(&ext.images)
            .map(|(&z, &u)| g.intern(z, u))
            .collect::<Result<_, _>>()?;
        for t in &ext.triangles {
            g.out.triangles.push([map[t[0]], map[t[1]], map[t[2]]]);
        }
    }
    Ok(g.out)
}

/// Plain vertex interpolation of the map on every grid cell inside the
/// closed domain, with no adjustment anywhere.
pub fn naive_mesh(oracle: &dyn MapOracle, domain: &Domain, r: f64) -> MeshData {
    let n = (1.0 / r).ceil() as i64;
    let inside = |i: i64, j: i64| -> bool {
        let (cx, cy) = ((i as f64 + 0.5) * r, (j as f64 + 0.5) * r);
        let half = 0.5 * r;
        match domain {
            Domain::UnitSquare => true,
            Domain::LShape => !(cx > 0.5 && cy > 0.5),
            Domain::Disk => {
                let dx = (cx - 0.5).abs() + half;
                let dy = (cy - 0.5).abs() + half;
                dx * dx + dy * dy <= 0.25
            }
        }
    };
    let mut mesh = MeshData::default();
    let mut ids: HashMap<(i64, i64), usize> = HashMap::new();
    for i in 0..n {
        for j in 0..n {
            if !inside(i, j) {
                continue;
            }
            let mut corner = |ci: i64, cj: i64| -> usize {
                *ids.entry((ci, cj)).or_insert_with(|| {
                    let z = Point2::new(ci as f64 * r, cj as f64 * r);
                    mesh.vertices.push(z);
                    mesh.images.push(oracle.eval(z));
                    mesh.vertices.len() - 1
                })
            };
            let (sw, se, ne, nw) = (corner(i, j), corner(i + 1, j), corner(i + 1, j + 1), corner(i, j + 1));
            mesh.triangles.push([sw, se, ne]);
            mesh.triangles.push([sw, ne, nw]);
        }
    }
    mesh
}

/// Sample resolutions for the measured norms.
const LINF_N: usize = 8;
const W1P_N: usize = 6;

/// Per-triangle sampling depths `(sup lattice, derivative grid)`, thinned on
/// very large meshes so the metric pass stays near-linear in mesh size; the
/// per-triangle fields are close to affine at those sizes anyway.
fn sample_depths(triangles: usize) -> (usize, usize) {
    if triangles > 400_000 {
        (3, 2)
    } else if triangles > FULL_VALIDATE_MAX {
        (5, 3)
    } else {
        (LINF_N, W1P_N)
    }
}

pub fn run(
    oracle: &dyn MapOracle,
    domain: &Domain,
    params: &Params,
) -> Result<RunOutput, RunFailure> {
    let mut timings: Vec<(String, f64)> = Vec::new();
    let l = oracle.lipschitz().max(1.0);
    let eps_int = internal_eps(l, params.p, params.eps);

    if params.naive {
        let t = Instant::now();
        let mesh = naive_mesh(oracle, domain, params.r0);
        timings.push(("interpolate".into(), t.elapsed().as_secs_f64()));
        if mesh.triangles.is_empty() {
            return Err(RunFailure {
                stage: "interpolate",
                message: "no grid cell fits inside the domain".into(),
                classification_dump: None,
                grid_dump: None,
            });
        }
        let outside = mesh.triangles.len() / 2;
        let (report, mesh, timings) = measure_and_report(
            oracle,
            domain,
            params,
            mesh,
            MeasureCtx {
                l,
                eps_int,
                r: params.r0,
                eta: f64::NAN,
                delta: f64::NAN,
                area_deficit: f64::NAN,
                sliver_area: 0.0,
                best_effort: false,
                accepted: 0,
                outside,
                eps_mesh: None,
                extension_max_bilip: f64::NAN,
                grid_ratio: (f64::NAN, f64::NAN),
            },
            timings,
        )?;
        return Ok(RunOutput {
            report,
            mesh,
            classification: None,
            tiling: None,
            grid_dump: String::new(),
            cross_points: Vec::new(),
            timings,
        });
    }

    // Halve r until the uncovered area fits the internal budget (it almost
    // never does: the budget is astronomically small, so the cap is the
    // normal exit and the run is flagged best-effort; the measured norms
    // then decide the exit code).
    let t = Instant::now();
    let mut r = params.r0;
    let mut halvings = 0u32;
    let (class, eta, delta) = loop {
        let eta = eta_budget(l, eps_int, params.p, r, domain.area());
        let delta = delta_of_eta(eta, l);
        let class = classify(oracle, domain, r, delta, l, params.quad_n);
        if class.area_deficit <= eps_int || halvings == params.max_halvings {
            break (class, eta, delta);
        }
        r *= 0.5;
        halvings += 1;
    };
    timings.push(("classify".into(), t.elapsed().as_secs_f64()));
    let best_effort = class.area_deficit > eps_int;
    let class_dump = || Some(write_classification(&class));

    let t = Instant::now();
    let eps_mesh = interpolate(oracle, &class);
    let tiling = build_tiling(domain, &class, params.max_depth);
    timings.push(("tile".into(), t.elapsed().as_secs_f64()));
    if tiling.squares.is_empty() && class.accepted.is_empty() {
        return Err(RunFailure {
            stage: "tile",
            message: "nothing to cover: no accepted cells and no tiling squares".into(),
            classification_dump: class_dump(),
            grid_dump: None,
        });
    }

    let t = Instant::now();
    let q = build_grid(oracle, domain, &class, &tiling);
    let crosses = build_crosses(oracle, domain, &q, l).map_err(|e| RunFailure {
        stage: "crosses",
        message: e,
        classification_dump: class_dump(),
        grid_dump: None,
    })?;
    let mut cross_points: Vec<Point2> = crosses.points.values().map(|cp| cp.x).collect();
    cross_points.sort_by_key(|&p| bit_key(p));
    let gmap = build_grid_map(oracle, &q, &crosses, l).map_err(|e| RunFailure {
        stage: "grid",
        message: e,
        classification_dump: class_dump(),
        grid_dump: None,
    })?;
    let grid_dump = write_grid(&gmap, &q);
    timings.push(("grid".into(), t.elapsed().as_secs_f64()));

    let t = Instant::now();
    let grid_ratio = verify_grid_bilip(&gmap, &q, params.pairs, params.seed);
    timings.push(("grid_ratios".into(), t.elapsed().as_secs_f64()));

    let t = Instant::now();
    let extension_results: Result<Vec<MeshData>, (usize, String)> = (0..tiling.squares.len())
        .into_par_iter()
        .map(|s| {
            let chain = gmap.square_boundary(&q, s);
            extend_square(&chain, tiling.squares[s].square.center)
                .map_err(|e| (s, e.to_string()))
        })
        .collect();
    let extensions = extension_results.map_err(|(s, e)| RunFailure {
        stage: "extension",
        message: format!("square {s}: {e}"),
        classification_dump: class_dump(),
        grid_dump: Some(grid_dump.clone()),
    })?;
    let extension_max_bilip = extensions
        .iter()
        .map(|m| measured_bilip(&m.vertices, &m.images, &m.triangles).unwrap_or(f64::INFINITY))
        .fold(1.0f64, f64::max);
    timings.push(("extend".into(), t.elapsed().as_secs_f64()));

    let t = Instant::now();
    let glued = glue(&class, &q, &gmap, &eps_mesh, &extensions).map_err(|e| RunFailure {
        stage: "glue",
        message: e,
        classification_dump: class_dump(),
        grid_dump: Some(grid_dump.clone()),
    })?;
    validate_glued(&glued).map_err(|e| RunFailure {
        stage: "glue",
        message: format!("glued mesh invalid: {e}"),
        classification_dump: class_dump(),
        grid_dump: Some(grid_dump.clone()),
    })?;
    timings.push(("glue".into(), t.elapsed().as_secs_f64()));

    let accepted = class.accepted.len();
    let outside = tiling.squares.len();
    let ctx = MeasureCtx {
        l,
        eps_int,
        r,
        eta,
        delta,
        area_deficit: class.area_deficit,
        sliver_area: tiling.sliver_area,
        best_effort,
        accepted,
        outside,
        eps_mesh: if accepted > 0 { Some(eps_mesh) } else { None },
        extension_max_bilip,
        grid_ratio,
    };
    let (report, mesh, timings) =
        measure_and_report(oracle, domain, params, glued, ctx, timings)?;
    Ok(RunOutput {
        report,
        mesh,
        classification: Some(class),
        tiling: Some(tiling),
        grid_dump,
        cross_points,
        timings,
    })
}

/// Pairwise overlap scans above this size are replaced by the structural
/// checks alone; those already reject T-junctions, flips, and non-manifold
/// gluing, and the per-square pieces keep disjoint domains by construction.
const FULL_VALIDATE_MAX: usize = 50_000;

fn validate_glued(mesh: &MeshData) -> Result<(), String> {
    for (k, tri) in mesh.triangles.iter().enumerate() {
        for &i in tri {
            if i >= mesh.vertices.len() {
                return Err(format!("triangle {k} references vertex {i} out of range"));
            }
        }
        let a = signed_area(mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]);
        if a <= 0.0 {
            return Err(format!("triangle {k} has domain signed area {a}"));
        }
    }
    // A hanging vertex splits one side of an edge but not the other, so the
    // unsplit directed edge loses its reverse and surfaces as a second
    // boundary edge at its tail; the single-cycle walk rejects that.
    boundary_loop(mesh)?;
    if mesh.triangles.len() <= FULL_VALIDATE_MAX {
        let dom =
            Triangulation { vertices: mesh.vertices.clone(), triangles: mesh.triangles.clone() };
        validate_triangulation(&SnapGrid::for_diameter(2.0), &dom)?;
    }
    Ok(())
}

struct MeasureCtx {
    l: f64,
    eps_int: f64,
    r: f64,
    eta: f64,
    delta: f64,
    area_deficit: f64,
    sliver_area: f64,
    best_effort: bool,
    accepted: usize,
    outside: usize,
    eps_mesh: Option<MeshData>,
    extension_max_bilip: f64,
    grid_ratio: (f64, f64),
}

fn measure_and_report(
    oracle: &dyn MapOracle,
    domain: &Domain,
    params: &Params,
    mesh: MeshData,
    ctx: MeasureCtx,
    mut timings: Vec<(String, f64)>,
) -> Result<(Report, MeshData, Vec<(String, f64)>), RunFailure> {
    let t = Instant::now();
    let pa = PAMap::new(mesh).map_err(|e| RunFailure {
        stage: "metrics",
        message: e,
        classification_dump: None,
        grid_dump: None,
    })?;
    let verdict = check_injective(&pa.mesh);
    let (linf_n, w1p_n) = sample_depths(pa.mesh.triangles.len());
    let (linf_map, linf_inv) = linf_errors(oracle, &pa, linf_n);
    let (w1p_map, w1p_inv) = w1p_errors(oracle, &pa, params.p, w1p_n);
    let bilip_v = pa.bilip;
    let orientation_ok = pa.orientation_ok;

    let nan = f64::NAN;
    let (linf_map_eps, linf_inv_eps, w1p_map_eps, w1p_inv_eps, bilip_v_eps) =
        match ctx.eps_mesh {
            Some(em) => {
                let pa_eps = PAMap::new(em).map_err(|e| RunFailure {
                    stage: "metrics",
                    message: format!("accepted-region mesh: {e}"),
                    classification_dump: None,
                    grid_dump: None,
                })?;
                let (ln, wn) = sample_depths(pa_eps.mesh.triangles.len());
                let (lf, li) = linf_errors(oracle, &pa_eps, ln);
                let (wf, wi) = w1p_errors(oracle, &pa_eps, params.p, wn);
                (lf, li, wf, wi, pa_eps.bilip)
            }
            None => (nan, nan, nan, nan, nan),
        };
    timings.push(("metrics".into(), t.elapsed().as_secs_f64()));

    let exit_ok = verdict.injective
        && orientation_ok
        && linf_map <= params.eps
        && linf_inv <= params.eps
        && w1p_map <= params.eps
        && w1p_inv <= params.eps;
    let report = Report {
        map: oracle.name().to_string(),
        domain: domain.name().to_string(),
        eps_target: params.eps,
        p: params.p,
        r0: params.r0,
        r: ctx.r,
        max_halvings: params.max_halvings,
        quad_n: params.quad_n,
        max_depth: params.max_depth,
        pairs: params.pairs,
        seed: params.seed,
        naive: params.naive,
        eta: ctx.eta,
        delta: ctx.delta,
        eps_internal: ctx.eps_int,
        area_omega: domain.area(),
        area_deficit: ctx.area_deficit,
        sliver_area: ctx.sliver_area,
        best_effort: ctx.best_effort,
        accepted_squares: ctx.accepted,
        outside_squares: ctx.outside,
        mesh_vertices: pa.mesh.vertices.len(),
        mesh_triangles: pa.mesh.triangles.len(),
        linf_map,
        linf_inv,
        w1p_map,
        w1p_inv,
        linf_map_eps,
        linf_inv_eps,
        w1p_map_eps,
        w1p_inv_eps,
        bilip_v,
        bilip_v_eps,
        extension_max_bilip: ctx.extension_max_bilip,
        grid_ratio_lower: ctx.grid_ratio.0,
        grid_ratio_upper: ctx.grid_ratio.1,
        injective: verdict.injective,
        injectivity_witness: verdict.witness,
        orientation_ok,
        exit_ok,
    };
    let _ = ctx.l;
    Ok((report, pa.mesh, timings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{Affine, FoldCandidate, Identity, ShearSine};

    #[test]
    fn internal_eps_is_tiny_but_positive() {
        let e = internal_eps(1.0, 1.0, 1.0);
        assert!(e > 0.0);
        assert!(e < 1e-20, "the literal constants force a microscopic budget, got {e}");
        // And it satisfies its own constraint.
        let c = 1.0 + C1;
        assert!(c * e + 2.0 * (c * (e / std::f64::consts::PI).sqrt() + e) <= 1.0);
        // Monotone in the target.
        assert!(internal_eps(1.0, 1.0, 0.1) < internal_eps(1.0, 1.0, 1.0));
    }

    #[test]
    fn affine_run_is_exact_on_the_accepted_region() {
        let m = Affine::example();
        let params = Params { r0: 0.125, max_halvings: 1, quad_n: 4, ..Params::default() };
        let out = run(&m, &Domain::UnitSquare, &params).unwrap();
        let rep = &out.report;
        assert!(rep.best_effort, "the area budget is unreachable by design");
        assert!(rep.accepted_squares > 0);
        assert!(rep.injective, "{:?}", rep.injectivity_witness);
        assert!(rep.orientation_ok);
        assert!(rep.linf_map_eps < 1e-12 && rep.linf_inv_eps < 1e-11);
        assert!(rep.w1p_map_eps < 1e-11 && rep.w1p_inv_eps < 1e-11);
        // Off the accepted region the extension interpolates freely; the
        // error there is bounded by the cell size, not by machine epsilon.
        assert!(rep.linf_map <= params.eps, "global error {}", rep.linf_map);
        assert!(rep.exit_ok);
        assert_eq!(out.mesh.triangles.len(), rep.mesh_triangles);
    }

    #[test]
    fn identity_disk_run_glues_across_depths() {
        // The disk tiling mixes depths, so accepted cells gain hanging
        // vertices and are re-fanned; the glued mesh must still validate
        // and the identity map must come through exactly.
        let params = Params {
            r0: 0.125,
            max_halvings: 0,
            quad_n: 2,
            max_depth: 3,
            pairs: 2000,
            ..Params::default()
        };
        let out = run(&Identity, &Domain::Disk, &params).unwrap();
        let rep = &out.report;
        assert!(rep.injective, "{:?}", rep.injectivity_witness);
        assert!(rep.orientation_ok);
        assert!(rep.sliver_area > 0.0);
        assert!(rep.accepted_squares > 0 && rep.outside_squares > 0);
        // Exact on the accepted region, cell-size accurate elsewhere.
        assert!(rep.linf_map_eps < 1e-12, "accepted region: {}", rep.linf_map_eps);
        assert!(rep.linf_map <= params.eps, "global: {}", rep.linf_map);
        assert!(rep.linf_inv <= params.eps);
        assert!(rep.bilip_v >= 1.0 && rep.bilip_v < 3.0, "bilip {}", rep.bilip_v);
    }

    #[test]
    fn naive_fold_flips_where_the_pipeline_does_not() {
        let fold = FoldCandidate::default();
        let naive_params = Params { r0: 0.25, naive: true, ..Params::default() };
        let naive_out = run(&fold, &Domain::UnitSquare, &naive_params).unwrap();
        assert!(!naive_out.report.orientation_ok, "naive quarter-grid must fold");
        assert!(!naive_out.report.injective);
        assert!(!naive_out.report.exit_ok);

        let params = Params {
            eps: 0.2,
            r0: 0.25,
            max_halvings: 2,
            quad_n: 2,
            pairs: 5000,
            ..Params::default()
        };
        let out = run(&fold, &Domain::UnitSquare, &params).unwrap();
        assert!(out.report.injective, "{:?}", out.report.injectivity_witness);
        assert!(out.report.orientation_ok);
    }

    #[test]
    fn shear_run_meets_its_target_and_reports_consistently() {
        let m = ShearSine::default();
        let params = Params {
            eps: 0.1,
            r0: 1.0 / 32.0,
            max_halvings: 0,
            quad_n: 2,
            pairs: 5000,
            ..Params::default()
        };
        let out = run(&m, &Domain::UnitSquare, &params).unwrap();
        let rep = &out.report;
        assert!(rep.injective, "{:?}", rep.injectivity_witness);
        assert!(rep.orientation_ok);
        assert!(rep.linf_map <= 0.1 && rep.linf_inv <= 0.1);
        assert!(rep.w1p_map <= 0.1 && rep.w1p_inv <= 0.1);
        assert!(rep.exit_ok);
        // Nothing is accepted for a curved map under the literal budget.
        assert_eq!(rep.accepted_squares, 0);
        assert!(rep.linf_map_eps.is_nan());
        // Gluing never worsens the bi-Lipschitz constant beyond its parts.
        assert!(
            rep.bilip_v <= rep.extension_max_bilip.max(rep.bilip_v_eps.max(1.0)) + 1e-9,
            "glued {} vs parts {} / {}",
            rep.bilip_v,
            rep.extension_max_bilip,
            rep.bilip_v_eps
        );
    }
}
