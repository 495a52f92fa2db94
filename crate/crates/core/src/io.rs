//! Plain-text interchange formats.
//!
//! All writers format floats with Rust's shortest-roundtrip `Display`, so
//! emitted files are bitwise deterministic for identical inputs.

use crate::geometry::Point2;
use crate::maps::SampledMap;

/// Raw mesh data as stored in a PAMESH file: domain vertices, their images,
/// and counterclockwise triangles.
#[derive(Debug, Clone, Default)]
pub struct MeshData {
    pub vertices: Vec<Point2>,
    pub images: Vec<Point2>,
    pub triangles: Vec<[usize; 3]>,
}

/// Serializes a mesh in the PAMESH format:
///
/// ```text
/// PAMESH <nv> <nt>
/// v <x> <y> <ux> <uy>     (nv lines)
/// t <i> <j> <k>           (nt lines)
/// ```
pub fn write_pamesh(vertices: &[Point2], images: &[Point2], triangles: &[[usize; 3]]) -> String {
    assert_eq!(vertices.len(), images.len());
    let mut out = String::new();
    out.push_str(&format!("PAMESH {} {}\n", vertices.len(), triangles.len()));
    for (v, u) in vertices.iter().zip(images) {
        out.push_str(&format!("v {} {} {} {}\n", v.x, v.y, u.x, u.y));
    }
    for t in triangles {
        out.push_str(&format!("t {} {} {}\n", t[0], t[1], t[2]));
    }
    out
}

pub fn parse_pamesh(text: &str) -> Result<MeshData, String> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or("empty PAMESH file")?;
    let mut it = header.split_whitespace();
    if it.next() != Some("PAMESH") {
        return Err("missing PAMESH header".into());
    }
    let nv: usize = it.next().ok_or("missing vertex count")?.parse().map_err(|e| format!("vertex count: {e}"))?;
    let nt: usize = it.next().ok_or("missing triangle count")?.parse().map_err(|e| format!("triangle count: {e}"))?;
    let mut mesh = MeshData::default();
    for _ in 0..nv {
        let line = lines.next().ok_or("truncated vertex section")?;
        let mut f = line.split_whitespace();
        if f.next() != Some("v") {
            return Err(format!("expected vertex line, got '{line}'"));
        }
        let mut val = || -> Result<f64, String> {
            f.next().ok_or("short vertex line")?.parse().map_err(|e| format!("vertex number: {e}"))
        };
        let (x, y, ux, uy) = (val()?, val()?, val()?, val()?);
        mesh.vertices.push(Point2::new(x, y));
        mesh.images.push(Point2::new(ux, uy));
    }
    for _ in 0..nt {
        let line = lines.next().ok_or("truncated triangle section")?;
        let mut f = line.split_whitespace();
        if f.next() != Some("t") {
            return Err(format!("expected triangle line, got '{line}'"));
        }
        let mut val = || -> Result<usize, String> {
            f.next().ok_or("short triangle line")?.parse().map_err(|e| format!("triangle index: {e}"))
        };
        let t = [val()?, val()?, val()?];
        for &i in &t {
            if i >= nv {
                return Err(format!("triangle index {i} out of range {nv}"));
            }
        }
        mesh.triangles.push(t);
    }
    Ok(mesh)
}

/// Serializes a sampled map:
///
/// ```text
/// SAMPLEDMAP <n_rows> <n_cols> <L>
/// <z_x> <z_y> <u_x> <u_y>      (n_rows * n_cols lines, row-major in y)
/// ```
pub fn write_sampled_map(map: &SampledMap) -> String {
    let mut out = String::new();
    out.push_str(&format!("SAMPLEDMAP {} {} {}\n", map.rows, map.cols, map.l));
    for r in 0..map.rows {
        for c in 0..map.cols {
            let z = Point2::new(c as f64 / (map.cols - 1) as f64, r as f64 / (map.rows - 1) as f64);
            let u = map.values[r * map.cols + c];
            out.push_str(&format!("{} {} {} {}\n", z.x, z.y, u.x, u.y));
        }
    }
    out
}

pub fn parse_sampled_map(text: &str) -> Result<SampledMap, String> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or("empty SAMPLEDMAP file")?;
    let mut it = header.split_whitespace();
    if it.next() != Some("SAMPLEDMAP") {
        return Err("missing SAMPLEDMAP header".into());
    }
    let rows: usize = it.next().ok_or("missing row count")?.parse().map_err(|e| format!("rows: {e}"))?;
    let cols: usize = it.next().ok_or("missing col count")?.parse().map_err(|e| format!("cols: {e}"))?;
    let l: f64 = it.next().ok_or("missing L")?.parse().map_err(|e| format!("L: {e}"))?;
    if rows < 2 || cols < 2 {
        return Err("grid must be at least 2x2".into());
    }
    if !(l >= 1.0) {
        return Err("L must be >= 1".into());
    }
    let mut values = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let line = lines.next().ok_or("truncated sample section")?;
            let mut f = line.split_whitespace();
            let mut val = || -> Result<f64, String> {
                f.next().ok_or("short sample line")?.parse().map_err(|e| format!("sample number: {e}"))
            };
            let (zx, zy, ux, uy) = (val()?, val()?, val()?, val()?);
            let ex = c as f64 / (cols - 1) as f64;
            let ey = r as f64 / (rows - 1) as f64;
            if (zx - ex).abs() > 1e-9 || (zy - ey).abs() > 1e-9 {
                return Err(format!(
                    "sample position ({zx}, {zy}) is off the uniform grid point ({ex}, {ey})"
                ));
            }
            values.push(Point2::new(ux, uy));
        }
    }
    Ok(SampledMap { rows, cols, l, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{Identity, MapOracle, ShearSine};

    #[test]
    fn pamesh_round_trip_is_bitwise_stable() {
        let vertices = vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)];
        let images = vec![Point2::new(0.0, 0.0), Point2::new(2.0, 0.0), Point2::new(0.0, 0.5)];
        let triangles = vec![[0usize, 1, 2]];
        let text = write_pamesh(&vertices, &images, &triangles);
        let mesh = parse_pamesh(&text).unwrap();
        let again = write_pamesh(&mesh.vertices, &mesh.images, &mesh.triangles);
        assert_eq!(text, again);
        assert_eq!(mesh.triangles, triangles);
    }

    #[test]
    fn pamesh_rejects_bad_input() {
        assert!(parse_pamesh("").is_err());
        assert!(parse_pamesh("PAMESH 1 0\n").is_err()); // truncated
        assert!(parse_pamesh("PAMESH 1 1\nv 0 0 0 0\nt 0 0 2\n").is_err()); // index range
    }

    #[test]
    fn sampled_map_round_trip() {
        let s = crate::maps::SampledMap::sample(&ShearSine::default(), 6);
        let text = write_sampled_map(&s);
        let back = parse_sampled_map(&text).unwrap();
        assert_eq!(back.rows, s.rows);
        assert_eq!(back.cols, s.cols);
        assert_eq!(back.l, s.l);
        for (a, b) in s.values.iter().zip(&back.values) {
            assert_eq!(a, b); // Display round-trips f64 exactly
        }
        let z = Point2::new(0.37, 0.61);
        assert!(back.eval(z).dist(s.eval(z)) == 0.0);
    }

    #[test]
    fn sampled_map_rejects_off_grid_positions() {
        let s = crate::maps::SampledMap::sample(&Identity, 2);
        let mut text = write_sampled_map(&s);
        text = text.replace("0.5 0 ", "0.51 0 ");
        assert!(parse_sampled_map(&text).is_err());
    }
}
