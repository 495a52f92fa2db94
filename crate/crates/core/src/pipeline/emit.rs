//! Text and figure emitters.  Report, mesh, and figure bytes depend only on
//! the run configuration (floats go through the shortest-roundtrip
//! formatter, containers are sorted), so identical runs emit identical
//! files.  Wall-clock timings live in their own file for that reason.

use super::{Report, RunOutput};
use crate::geometry::{signed_area, Point2};
use std::fmt::Write as _;

pub fn render_report(r: &Report) -> String {
    let mut s = String::new();
    macro_rules! line {
        ($k:expr, $v:expr) => {
            writeln!(s, "{} {}", $k, $v).unwrap()
        };
    }
    line!("map", r.map);
    line!("domain", r.domain);
    line!("eps_target", r.eps_target);
    line!("p", r.p);
    line!("r0", r.r0);
    line!("r", r.r);
    line!("max_halvings", r.max_halvings);
    line!("quad_n", r.quad_n);
    line!("max_depth", r.max_depth);
    line!("pairs", r.pairs);
    line!("seed", r.seed);
    line!("naive", r.naive);
    line!("eta", r.eta);
    line!("delta", r.delta);
    line!("eps_internal", r.eps_internal);
    line!("area_omega", r.area_omega);
    line!("area_deficit", r.area_deficit);
    line!("sliver_area", r.sliver_area);
    line!("best_effort", r.best_effort);
    line!("accepted_squares", r.accepted_squares);
    line!("outside_squares", r.outside_squares);
    line!("mesh_vertices", r.mesh_vertices);
    line!("mesh_triangles", r.mesh_triangles);
    line!("linf_map", r.linf_map);
    line!("linf_inv", r.linf_inv);
    line!("w1p_map", r.w1p_map);
    line!("w1p_inv", r.w1p_inv);
    line!("linf_map_eps", r.linf_map_eps);
    line!("linf_inv_eps", r.linf_inv_eps);
    line!("w1p_map_eps", r.w1p_map_eps);
    line!("w1p_inv_eps", r.w1p_inv_eps);
    line!("bilip_v", r.bilip_v);
    line!("bilip_v_eps", r.bilip_v_eps);
    line!("extension_max_bilip", r.extension_max_bilip);
    line!("grid_ratio_lower", r.grid_ratio_lower);
    line!("grid_ratio_upper", r.grid_ratio_upper);
    line!("injective", r.injective);
    if let Some(w) = &r.injectivity_witness {
        line!("injectivity_witness", w);
    }
    line!("orientation_ok", r.orientation_ok);
    line!("exit_ok", r.exit_ok);
    s
}

pub fn render_timings(timings: &[(String, f64)]) -> String {
    let mut s = String::new();
    for (stage, secs) in timings {
        writeln!(s, "{stage} {secs:.6}").unwrap();
    }
    s
}

const PANEL: f64 = 460.0;
const PAD: f64 = 20.0;

struct Viewport {
    x0: f64,
    scale: f64,
    min: Point2,
    ymax: f64,
}

impl Viewport {
    fn fit(points: impl Iterator<Item = Point2>, x0: f64) -> Viewport {
        let mut min = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut max = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            min = Point2::new(min.x.min(p.x), min.y.min(p.y));
            max = Point2::new(max.x.max(p.x), max.y.max(p.y));
        }
        if !min.x.is_finite() {
            min = Point2::new(0.0, 0.0);
            max = Point2::new(1.0, 1.0);
        }
        let w = (max.x - min.x).max(1e-12);
        let h = (max.y - min.y).max(1e-12);
        Viewport { x0, scale: PANEL / w.max(h), min, ymax: max.y }
    }

    fn map(&self, p: Point2) -> (f64, f64) {
        (self.x0 + (p.x - self.min.x) * self.scale, PAD + (self.ymax - p.y) * self.scale)
    }
}

fn tri_path(v: &Viewport, a: Point2, b: Point2, c: Point2) -> String {
    let (ax, ay) = v.map(a);
    let (bx, by) = v.map(b);
    let (cx, cy) = v.map(c);
    format!("M{ax:.2} {ay:.2}L{bx:.2} {by:.2}L{cx:.2} {cy:.2}Z")
}

/// Two panels: the domain triangulation (accepted cells shaded, cross
/// points marked) and the image triangulation (fold-violating triangles
/// highlighted).  With no outside region there is no skeleton to show, so
/// only the image panel is drawn.
pub fn render_svg(out: &RunOutput) -> String {
    let mesh = &out.mesh;
    let two_panel = out.tiling.as_ref().map_or(false, |t| !t.squares.is_empty());
    let width = if two_panel { 2.0 * (PANEL + PAD) + PAD } else { PANEL + 2.0 * PAD };
    let height = PANEL + 2.0 * PAD;
    let mut s = String::new();
    writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {width:.0} {height:.0}\" \
         font-family=\"sans-serif\" font-size=\"12\">"
    )
    .unwrap();
    writeln!(s, "<rect width=\"{width:.0}\" height=\"{height:.0}\" fill=\"white\"/>").unwrap();

    let mut img_x0 = PAD;
    if two_panel {
        let dv = Viewport::fit(mesh.vertices.iter().copied(), PAD);
        if let Some(class) = &out.classification {
            let mut cells: Vec<(i32, i32)> = class.accepted.iter().copied().collect();
            cells.sort_unstable();
            for (i, j) in cells {
                let sq = class.cell_square(i, j);
                let h = 0.5 * sq.side;
                let (x, y) = dv.map(Point2::new(sq.center.x - h, sq.center.y + h));
                let side = sq.side * dv.scale;
                writeln!(
                    s,
                    "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{side:.2}\" height=\"{side:.2}\" \
                     fill=\"#cfe6c3\"/>"
                )
                .unwrap();
            }
        }
        write!(s, "<path fill=\"none\" stroke=\"#556\" stroke-width=\"0.5\" d=\"").unwrap();
        for t in &mesh.triangles {
            let d = tri_path(&dv, mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]);
            s.push_str(&d);
        }
        writeln!(s, "\"/>").unwrap();
        for &p in &out.cross_points {
            let (x, y) = dv.map(p);
            writeln!(s, "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"1.6\" fill=\"#c0392b\"/>")
                .unwrap();
        }
        writeln!(s, "<text x=\"{PAD}\" y=\"{:.0}\">domain</text>", height - 6.0).unwrap();
        img_x0 = 2.0 * PAD + PANEL + PAD;
    }

    let iv = Viewport::fit(mesh.images.iter().copied(), img_x0);
    for t in &mesh.triangles {
        let (a, b, c) = (mesh.images[t[0]], mesh.images[t[1]], mesh.images[t[2]]);
        if signed_area(a, b, c) <= 0.0 {
            writeln!(
                s,
                "<path fill=\"#e74c3c\" fill-opacity=\"0.85\" d=\"{}\"/>",
                tri_path(&iv, a, b, c)
            )
            .unwrap();
        }
    }
    write!(s, "<path fill=\"none\" stroke=\"#556\" stroke-width=\"0.5\" d=\"").unwrap();
    for t in &mesh.triangles {
        let d = tri_path(&iv, mesh.images[t[0]], mesh.images[t[1]], mesh.images[t[2]]);
        s.push_str(&d);
    }
    writeln!(s, "\"/>").unwrap();
    writeln!(s, "<text x=\"{img_x0:.0}\" y=\"{:.0}\">image</text>", height - 6.0).unwrap();
    writeln!(s, "</svg>").unwrap();
    s
}
