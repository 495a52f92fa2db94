//! Cross-checks of every derived quantity against an independent
//! implementation: closed forms against bisection, quadratures against
//! refined references, analytic inverses against Newton, fast paths against
//! brute force.

use pahom::geometry::{Mat2, Point2, Square};
use pahom::io::MeshData;
use pahom::lebesgue::{
    avg_deviation, delta_of_eta, eta_budget, eta_budget_bisect, eta_of_delta, sup_affine_gap,
};
use pahom::maps::{Affine, MapOracle, PolarTwist, ShearSine};
use pahom::metrics::{brute_overlap_witness, w1p_errors_gauss};
use pahom::pipeline::internal_eps;
use pahom::{check_injective, linf_errors, w1p_errors, PAMap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn budget_closed_form_agrees_with_bisection() {
    for &l in &[1.0, 1.3, 2.0, 4.0] {
        for &eps in &[0.01, 0.1, 1.0, 3.0] {
            for &p in &[1.0, 1.5, 2.0] {
                for &r in &[0.03125, 0.125, 0.5] {
                    let a = eta_budget(l, eps, p, r, 1.0);
                    let b = eta_budget_bisect(l, eps, p, r, 1.0);
                    assert!(
                        (a - b).abs() <= 1e-6 * b.max(1e-30),
                        "l={l} eps={eps} p={p} r={r}: closed {a} vs bisect {b}"
                    );
                }
            }
        }
    }
}

#[test]
fn deviation_to_gap_conversions_invert_each_other() {
    for &l in &[1.0, 2.0, 7.5] {
        for &eta in &[1e-6, 1e-3, 0.05, 0.4] {
            let d = delta_of_eta(eta, l);
            assert!((eta_of_delta(d, l) - eta).abs() < 1e-12 * eta);
        }
    }
}

#[test]
fn internal_budget_sits_on_the_constraint_boundary() {
    for &l in &[1.0, 2.0] {
        for &p in &[1.0, 2.0] {
            for &target in &[0.05, 0.2, 1.0] {
                let e = internal_eps(l, p, target);
                let c = l + pahom::pipeline::C1 * l.powi(4);
                let lhs = |x: f64| {
                    c * x.powf(1.0 / p)
                        + 2.0 * (c * (x / std::f64::consts::PI).sqrt() + x)
                };
                assert!(lhs(e) <= target);
                // Doubling the solution must break the constraint: the
                // bisection stopped against the boundary, not short of it.
                assert!(lhs(e * 2.0) > target, "l={l} p={p} target={target}");
            }
        }
    }
}

#[test]
fn quadrature_deviation_converges_with_refinement() {
    let m = ShearSine::default();
    let sq = Square::new(Point2::new(0.4, 0.55), 0.2);
    let dm = m.diff(sq.center);
    let coarse = avg_deviation(&m, &sq, dm, 16);
    let fine = avg_deviation(&m, &sq, dm, 128);
    assert!((coarse - fine).abs() < 2e-3 * fine.max(1e-12), "{coarse} vs {fine}");
}

#[test]
fn sup_oracle_matches_random_sampling() {
    let m = ShearSine::default();
    let sq = Square::new(Point2::new(0.5, 0.5), 0.25);
    let dm = m.diff(sq.center);
    let lattice = sup_affine_gap(&m, &sq, dm, 63);
    let base = m.eval(sq.center);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut rand_sup = 0.0f64;
    for _ in 0..20_000 {
        let z = sq.sw()
            + Point2::new(rng.gen::<f64>() * sq.side, rng.gen::<f64>() * sq.side);
        let gap = m.eval(z).dist(base + dm.mul_vec(z - sq.center));
        rand_sup = rand_sup.max(gap);
    }
    assert!(rand_sup <= lattice * 1.02 + 1e-12, "random {rand_sup} vs lattice {lattice}");
    assert!(lattice <= rand_sup * 1.05 + 1e-12);
}

#[test]
fn newton_inversion_agrees_with_the_analytic_inverse() {
    let m = Affine::example();
    let minv = m.m.inverse().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..200 {
        let z = Point2::new(rng.gen::<f64>(), rng.gen::<f64>());
        let w = m.eval(z);
        let back = m.invert(w).expect("affine images invert");
        let exact = minv.mul_vec(w - m.b);
        assert!(back.dist(exact) < 1e-10);
    }
}

#[test]
fn operator_norm_matches_direct_maximization() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let m = Mat2::new(
            rng.gen::<f64>() * 4.0 - 2.0,
            rng.gen::<f64>() * 4.0 - 2.0,
            rng.gen::<f64>() * 4.0 - 2.0,
            rng.gen::<f64>() * 4.0 - 2.0,
        );
        let mut sup = 0.0f64;
        for k in 0..2000 {
            let t = k as f64 / 2000.0 * std::f64::consts::TAU;
            let v = Point2::new(t.cos(), t.sin());
            sup = sup.max(m.mul_vec(v).norm());
        }
        assert!((m.op_norm() - sup).abs() < 1e-5 * sup.max(1.0));
    }
}

fn interpolation_mesh(oracle: &dyn MapOracle, n: usize) -> MeshData {
    let mut mesh = MeshData::default();
    let h = 1.0 / n as f64;
    for i in 0..=n {
        for j in 0..=n {
            let z = Point2::new(i as f64 * h, j as f64 * h);
            mesh.vertices.push(z);
            mesh.images.push(oracle.eval(z));
        }
    }
    let id = |i: usize, j: usize| i * (n + 1) + j;
    for i in 0..n {
        for j in 0..n {
            mesh.triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            mesh.triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    mesh
}

#[test]
fn derivative_seminorm_quadrature_tracks_the_gauss_reference() {
    let m = ShearSine::new(0.15, 1.0);
    let pa = PAMap::new(interpolation_mesh(&m, 9)).unwrap();
    for &p in &[1.0, 2.0] {
        let (f_mid, i_mid) = w1p_errors(&m, &pa, p, 6);
        let (f_gauss, i_gauss) = w1p_errors_gauss(&m, &pa, p, 6);
        assert!((f_mid - f_gauss).abs() < 0.02 * f_gauss, "p={p}: {f_mid} vs {f_gauss}");
        assert!((i_mid - i_gauss).abs() < 0.03 * i_gauss, "p={p}: {i_mid} vs {i_gauss}");
    }
}

#[test]
fn sup_error_lattice_tracks_dense_random_sampling() {
    let m = ShearSine::new(0.15, 1.0);
    let pa = PAMap::new(interpolation_mesh(&m, 7)).unwrap();
    let (lat_f, _) = linf_errors(&m, &pa, 10);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut rand_f = 0.0f64;
    for _ in 0..40_000 {
        let z = Point2::new(rng.gen::<f64>(), rng.gen::<f64>());
        if let Some(v) = pa.eval(z) {
            rand_f = rand_f.max(v.dist(m.eval(z)));
        }
    }
    assert!(rand_f <= lat_f * 1.10 + 1e-12, "random {rand_f} vs lattice {lat_f}");
    assert!(lat_f <= rand_f * 1.10 + 1e-12);
}

#[test]
fn evaluation_and_inversion_round_trip() {
    let m = PolarTwist::default();
    let pa = PAMap::new(interpolation_mesh(&m, 8)).unwrap();
    assert!(pa.orientation_ok);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..500 {
        let z = Point2::new(rng.gen::<f64>(), rng.gen::<f64>());
        let w = pa.eval(z).expect("inside the meshed unit square");
        let back = pa.invert(w).expect("image point inverts");
        assert!(back.dist(z) < 1e-9, "round trip drift {}", back.dist(z));
    }
}

#[test]
fn fast_injectivity_agrees_with_brute_force_on_small_meshes() {
    // Valid mesh: agreement on the accepting side.
    let m = ShearSine::default();
    let mesh = interpolation_mesh(&m, 6);
    assert!(mesh.triangles.len() <= 200);
    let verdict = check_injective(&mesh);
    assert!(verdict.injective);
    assert!(brute_overlap_witness(&mesh).is_none());

    // Folded mesh: both sides must find the defect.
    let mut folded = interpolation_mesh(&m, 3);
    folded.images[5] = Point2::new(0.9, 0.9);
    let verdict = check_injective(&folded);
    assert!(!verdict.injective);
    assert!(verdict.witness.is_some());
}
