use cptorus::discreteness::bq_classify;
use cptorus::holonomy::{raw_generators_at, transport};
use cptorus::tensorlab::{schwarzian_tensor, smooth_family, DensityGrid, GridGeom, QuadDiffField};
use cptorus::{calibrate_origin, holonomy_generators, trace_triple, ClassTag, Modulus, ProjectivePoint};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Symmetric square truncation of the lattice sum, `|m|, |n| ≤ n_max`.
fn lattice_sum(z: Complex64, tau: Complex64, n_max: i64) -> Complex64 {
    let mut s = 1.0 / (z * z);
    for m in -n_max..=n_max {
        for n in -n_max..=n_max {
            if m == 0 && n == 0 {
                continue;
            }
            let w = tau * n as f64 + m as f64;
            s += 1.0 / ((z - w) * (z - w)) - 1.0 / (w * w);
        }
    }
    s
}

/// Richardson extrapolation of the truncation error, which is `O(N⁻²)`.
fn wp_oracle(z: Complex64, tau: Complex64) -> Complex64 {
    let s1 = lattice_sum(z, tau, 40);
    let s2 = lattice_sum(z, tau, 80);
    let s4 = lattice_sum(z, tau, 160);
    let r1 = (s2 * 4.0 - s1) / 3.0;
    let r2 = (s4 * 4.0 - s2) / 3.0;
    // next term is O(N⁻³)
    (r2 * 8.0 - r1) / 7.0
}

#[test]
fn wp_matches_lattice_sum() {
    let cases = [
        (c(0.0, 1.0), c(0.3, 0.2)),
        (c(0.369, 1.573), c(0.41, 0.77)),
        (c(0.5, 0.8660254037844386), c(-0.2, 0.35)),
        (c(-0.3, 2.4), c(0.1, 1.9)),
        (c(1.7, 0.9), c(0.05, 0.6)),
    ];
    for (tau, z) in cases {
        let m = Modulus::new(tau).unwrap();
        let got = m.wp(z, 1e-14).unwrap();
        let want = wp_oracle(z, tau);
        let rel = (got - want).norm() / want.norm().max(1.0);
        assert!(rel < 1e-7, "tau={tau} z={z}: {got} vs {want} ({rel:.2e})");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn wp_even_and_doubly_periodic(
        re in -1.0f64..1.0, im in 0.5f64..2.5,
        x in -2.0f64..2.0, y in -2.0f64..2.0,
    ) {
        let tau = c(re, im);
        let m = Modulus::new(tau).unwrap();
        let z = c(x, y);
        prop_assume!(m.lattice_distance(z) > 0.05);
        let v = m.wp(z, 1e-14).unwrap();
        let scale = v.norm().max(1.0);
        prop_assert!((m.wp(-z, 1e-14).unwrap() - v).norm() < 1e-10 * scale);
        prop_assert!((m.wp(z + 1.0, 1e-14).unwrap() - v).norm() < 1e-10 * scale);
        prop_assert!((m.wp(z + tau, 1e-14).unwrap() - v).norm() < 1e-10 * scale);
    }

    #[test]
    fn tensor_cocycle_on_random_densities(
        a in proptest::array::uniform5(-0.5f64..0.5),
        b in proptest::array::uniform5(-0.5f64..0.5),
        d in proptest::array::uniform5(-0.5f64..0.5),
    ) {
        let geom = GridGeom::covering(-0.2, 0.2, -0.2, 0.2, 1e-2).unwrap();
        let dens = |k: [f64; 5]| DensityGrid::from_log(geom, move |z: Complex64| {
            k[0] * z.re * z.re + k[1] * z.re * z.im + k[2] * (3.0 * z.im).sin() + k[3] * z.re + k[4] * z.im * z.im * z.im
        });
        let (g1, g2, g3) = (dens(a), dens(b), dens(d));
        let b12 = schwarzian_tensor(&g1, &g2).unwrap();
        let b23 = schwarzian_tensor(&g2, &g3).unwrap();
        let b13 = schwarzian_tensor(&g1, &g3).unwrap();
        let b21 = schwarzian_tensor(&g2, &g1).unwrap();
        let cocycle = QuadDiffField::combine(&[(1.0, &b13), (-1.0, &b12), (-1.0, &b23)]).unwrap();
        let anti = QuadDiffField::combine(&[(1.0, &b12), (1.0, &b21)]).unwrap();
        prop_assert!(cocycle.max_abs() < 1e-10);
        prop_assert!(anti.max_abs() < 1e-10);
    }
}

#[test]
fn smooth_family_tensor_against_itself_is_zero() {
    let geom = GridGeom::covering(-0.1, 0.1, -0.1, 0.1, 1e-2).unwrap();
    let g = DensityGrid::from_log(geom, smooth_family(3));
    assert_eq!(schwarzian_tensor(&g, &g).unwrap().max_abs(), 0.0);
}

#[test]
fn uniformizing_traces_of_symmetric_tori() {
    let sq = calibrate_origin(&Modulus::new(c(0.0, 1.0)).unwrap(), 1e-12).unwrap();
    let r2 = 2.0 * 2f64.sqrt();
    let t = sq.triple;
    assert!(
        (t.x - r2).norm() < 1e-8 && (t.y - r2).norm() < 1e-8 && (t.z - 4.0).norm() < 1e-8,
        "{t:?}"
    );
    assert!(sq.b0.im.abs() < 1e-10);

    let hex = calibrate_origin(&Modulus::new(c(0.5, 0.75f64.sqrt())).unwrap(), 1e-12).unwrap();
    let t = hex.triple;
    assert!(hex.b0.norm() < 1e-8, "b0 = {}", hex.b0);
    assert!(
        (t.x - 3.0).norm() < 1e-8 && (t.y - 3.0).norm() < 1e-8 && (t.z - 6.0).norm() < 1e-8,
        "{t:?}"
    );
    assert_eq!(hex.class.tag, ClassTag::DiscreteBq);
}

#[test]
fn perturbed_accessory_leaves_the_real_locus() {
    let m = Modulus::new(c(0.369, 1.573)).unwrap();
    let cal = calibrate_origin(&m, 1e-12).unwrap();
    for db in [c(1e-3, 0.0), c(0.0, 1e-3)] {
        let p = ProjectivePoint::new(m, c(0.0, 0.0), cal.b0 + db);
        let t = trace_triple(&holonomy_generators(&p, 1e-12).unwrap()).unwrap();
        assert!(t.max_imag() > 1e-6, "db={db}: {t:?}");
    }
}

#[test]
fn transport_agrees_with_reference_integration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let tau = c(rng.random_range(-0.5..0.5), rng.random_range(0.8..2.0));
        let m = Modulus::new(tau).unwrap();
        let p = ProjectivePoint::new(
            m,
            c(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)),
            c(0.0, 0.0),
        );
        let z0 = p.base_point();
        let path = [z0, z0 + c(0.5, 0.1 * tau.im), z0 + tau];
        let tol = 1e-9;
        let coarse = transport(&path, &p, tol).unwrap();
        let fine = transport(&path, &p, tol / 100.0).unwrap();
        assert!((coarse.det() - 1.0).norm() < 10.0 * tol);
        assert!(
            coarse.distance(&fine) < 1e3 * tol * fine.max_abs(),
            "{coarse:?} vs {fine:?}"
        );
    }
}

#[test]
fn triples_do_not_depend_on_base_point() {
    let m = Modulus::new(c(0.2, 1.3)).unwrap();
    let p = ProjectivePoint::new(m, c(-1.5, 0.7), c(0.3, 0.0));
    let t0 = trace_triple(&holonomy_generators(&p, 1e-12).unwrap()).unwrap();
    let mut g = raw_generators_at(&p, p.base_point() + c(0.2, -0.1), 1e-12).unwrap();
    g.normalize_signs();
    let t1 = trace_triple(&g).unwrap();
    assert!(t0.distance(&t1) < 1e-8, "{t0:?} vs {t1:?}");
}

#[test]
fn real_traces_above_two_are_discrete() {
    // Fricke coordinates of a hexagonal Fuchsian torus
    let t = cptorus::TraceTriple::real(3.0, 3.0, 6.0);
    assert_eq!(bq_classify(&t, 60, 1e-3).tag, ClassTag::DiscreteBq);
}
