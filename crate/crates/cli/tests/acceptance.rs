//! Acceptance criteria 1–9. Prints one PASS/FAIL line per criterion and exits
//! nonzero if a criterion outside `KNOWN_RED` fails.

use std::f64::consts::PI;
use std::fs;
use std::process::{Command, ExitCode};
use std::time::Instant;

use cptorus::holonomy::{calibrate_origin, holonomy_generators, trace_triple, transport};
use cptorus::loci::{self, center_on_ray, trace_ray, RayContext, RayOptions};
use cptorus::slicescan::{scan, ScanParams};
use cptorus::tensorlab::{self, Check};
use cptorus::{ClassTag, FuchsianCenter, Modulus, ProjectivePoint, ScanWindow, Slope};
use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria reported red by analysis; see the README.
const KNOWN_RED: &[u32] = &[7];

const FIG3_TAU: Complex64 = Complex64::new(0.369, 1.573);

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn fail(e: impl std::fmt::Display) -> Outcome {
    Outcome::new(false, format!("error: {e}"))
}

fn find<'a>(checks: &'a [Check], name: &str) -> &'a Check {
    checks
        .iter()
        .find(|c| c.name == name)
        .unwrap_or_else(|| panic!("missing check {name}"))
}

fn summarize(checks: &[&Check]) -> String {
    checks
        .iter()
        .map(|c| match c.ratio {
            Some(r) => format!("{}={:.1e}(x{:.2})", c.name, c.residual, r),
            None => format!("{}={:.1e}", c.name, c.residual),
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn tensor_suite() -> Outcome {
    let h = 1e-3;
    let report = match tensorlab::selftest(h) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    let names = [
        "beta_cstar",
        "cocycle",
        "antisymmetry",
        "naturality_inversion",
        "mobius_flat_euclidean",
        "mobius_flat_spherical",
        "mobius_flat_hyperbolic",
    ];
    let checks: Vec<&Check> = names.iter().map(|n| find(&report.checks, n)).collect();
    let pass = checks
        .iter()
        .all(|c| c.residual < 50.0 * h * h && c.ratio.is_none_or(|r| (3.5..=4.5).contains(&r)));
    // every truncation-dominated identity must carry a ratio
    let ratios = checks.iter().filter(|c| c.ratio.is_some()).count() == 4;
    Outcome::new(pass && ratios, summarize(&checks))
}

fn decomposition() -> Outcome {
    let h = 1e-3;
    let report = match tensorlab::selftest(h) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    let names = [
        "decomposition_hyperbolic",
        "decomposition_euclidean",
        "recombination_hyperbolic",
        "recombination_euclidean",
    ];
    let checks: Vec<&Check> = names.iter().map(|n| find(&report.checks, n)).collect();
    let pass = checks.iter().all(|c| c.residual < 50.0 * h * h);
    Outcome::new(pass, summarize(&checks))
}

fn holonomy_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20240607);
    let tol = 1e-10;
    let (mut det, mut comm, mut markov, mut path) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let tau = c(rng.random_range(-0.5..0.5), rng.random_range(0.7..2.5));
        let m = Modulus::new(tau).unwrap();
        let cc = c(rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0));
        let p = ProjectivePoint::new(m, cc, c(0.0, 0.0));
        let z0 = p.base_point();
        let direct = [[z0, z0 + 1.0], [z0, z0 + tau]];
        // detours inside the open cell strip, homotopic to the straight segments
        let bent = [
            [z0, z0 + c(0.5, 0.2 * tau.im), z0 + 1.0],
            [z0, z0 + tau * 0.5 + c(0.2, 0.0), z0 + tau],
        ];
        for k in 0..2 {
            let (a, b) = match (transport(&direct[k], &p, tol), transport(&bent[k], &p, tol)) {
                (Ok(a), Ok(b)) => (a, b),
                (Err(e), _) | (_, Err(e)) => return fail(e),
            };
            det = det.max((a.det() - 1.0).norm()).max((b.det() - 1.0).norm());
            path = path.max(a.distance(&b) / a.max_abs().max(1.0));
        }
        let g = match holonomy_generators(&p, tol) {
            Ok(g) => g,
            Err(e) => return fail(e),
        };
        comm = comm.max((g.commutator_trace() + 2.0).norm());
        match trace_triple(&g) {
            Ok(t) => markov = markov.max(t.relative_markov_residual()),
            Err(e) => return fail(e),
        }
    }
    Outcome::new(
        det < 1e-8 && comm < 1e-7 && markov < 1e-6 && path < 1e-7,
        format!("draws=100 det={det:.1e} comm={comm:.1e} markov={markov:.1e} path={path:.1e}"),
    )
}

fn calibration() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for tau in [c(0.0, 1.0), c(0.5, 0.75f64.sqrt()), FIG3_TAU] {
        let m = Modulus::new(tau).unwrap();
        let cal = match calibrate_origin(&m, 1e-10) {
            Ok(c) => c,
            Err(e) => return fail(e),
        };
        pass &= cal.imag_residual < 1e-8 && cal.class.tag == ClassTag::DiscreteBq;
        if tau == c(0.0, 1.0) {
            pass &= cal.b0.im.abs() < 1e-10;
        }
        parts.push(format!(
            "tau={:.3}{:+.3}i im={:.1e} {}",
            tau.re,
            tau.im,
            cal.imag_residual,
            cal.class.tag.name()
        ));
    }
    Outcome::new(pass, parts.join("; "))
}

/// Rays and centers n=1,2 of the three hexagonal systoles.
fn hexagonal(weights: &mut Vec<FuchsianCenter>) -> Outcome {
    let tau = c(0.5, 0.75f64.sqrt());
    let m = Modulus::new(tau).unwrap();
    let slopes = [
        Slope::new(1, 0).unwrap(),
        Slope::new(0, 1).unwrap(),
        Slope::new(1, -1).unwrap(),
    ];
    let mut rays = Vec::new();
    let mut axis = 0.0f64;
    for s in slopes {
        let ray = match RayContext::calibrated(&m, s)
            .and_then(|ctx| trace_ray(ctx, &RayOptions::new(4.0 * PI + 0.3, 0.25)))
        {
            Ok(r) => r,
            Err(e) => return fail(e),
        };
        let rot = Complex64::from_polar(1.0, 2.0 * s.vector(&m).arg());
        for n in 1..=2 {
            match center_on_ray(&ray, n) {
                Ok(cn) => {
                    axis = axis.max((cn.c * rot).im.abs() / cn.c.norm());
                    weights.push(cn);
                }
                Err(e) => return fail(e),
            }
        }
        rays.push(ray);
    }
    // z ↦ e^{iπ/3} z carries 1 ↦ τ ↦ τ − 1 and acts on c by e^{-2πi/3}
    let omega = Complex64::from_polar(1.0, -2.0 * PI / 3.0);
    let mut perm = 0.0f64;
    for k in 0..3 {
        let (src, dst) = (&rays[k], &rays[(k + 1) % 3]);
        for p in src.points.iter().skip(1) {
            let sample = match dst.ctx.sample(p.c * omega) {
                Ok(s) => s,
                Err(e) => return fail(e),
            };
            let x = sample.gamma.trace();
            let w = match dst.weight_near(&sample, p.t) {
                Ok(w) => w,
                Err(e) => return fail(e),
            };
            perm = perm
                .max(x.im.abs() / x.norm())
                .max((w - p.t).abs() / p.t.max(1.0));
        }
    }
    Outcome::new(
        axis < 1e-3 && perm < 1e-6,
        format!("centers=6 axis={axis:.1e} rotation={perm:.1e}"),
    )
}

fn fig3(weights: &mut Vec<FuchsianCenter>) -> Outcome {
    let m = Modulus::new(FIG3_TAU).unwrap();
    let s = Slope::systole(&m);
    let (ray, centers) = match loci::fuchsian_centers(&m, s, 4) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    let w = ScanWindow::new(c(-33.0, 0.0), 80.0, 80.0, 512, 512).unwrap();
    let raster = scan(&ray.ctx.origin, &w, &ScanParams::default());
    let mut pass = centers.len() == 4;
    let mut parts = vec![format!(
        "slope={s} window=80x80@-33 (L1 {:.0})",
        2.0 * 80.0 * FIG3_TAU.im
    )];
    for cn in &centers {
        let Some((i, j)) = w.locate(cn.c) else {
            pass = false;
            parts.push(format!("n={} outside", cn.n));
            continue;
        };
        let tag = raster.get(i, j).tag;
        let island = raster.component_size(i, j, ClassTag::DiscreteBq);
        pass &= cn.class == ClassTag::DiscreteBq && tag == ClassTag::DiscreteBq && island >= 10;
        parts.push(format!("n={} c={:.3} island={island}", cn.n, cn.c));
    }
    weights.extend(centers);
    Outcome::new(pass, parts.join(" "))
}

fn normdiff() -> Outcome {
    let m = Modulus::new(FIG3_TAU).unwrap();
    let s = Slope::systole(&m);
    let run = |t_max: f64| {
        RayContext::calibrated(&m, s)
            .and_then(|ctx| trace_ray(ctx, &RayOptions::new(t_max, 0.1)))
            .and_then(|ray| loci::normdiff_on_ray(&ray))
    };
    let (short, long) = match (run(10.0 * PI), run(20.0 * PI)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return fail(e),
    };
    let g1 = loci::growth_constant(&short, &s, &m);
    let g2 = loci::growth_constant(&long, &s, &m);
    let change = (g2 - g1).abs() / g1;
    let bounded = g2.is_finite() && change < 0.05;
    let origin = short[0].t == 0.0 && short[0].norm == 0.0;
    let early = short
        .iter()
        .filter(|r| r.t <= 2.0 * PI)
        .map(|r| r.norm)
        .fold(0.0, f64::max);
    Outcome::new(
        bounded && origin && early < 2.0,
        format!(
            "C(10pi)={g1:.4} C(20pi)={g2:.4} change={:.2}% t0={} max[0,2pi]={early:.3} (<2 required)",
            100.0 * change,
            short[0].norm
        ),
    )
}

fn weights(centers: &[FuchsianCenter]) -> Outcome {
    let worst = centers
        .iter()
        .map(|cn| (cn.weight - 2.0 * PI * cn.n as f64).abs())
        .fold(0.0, f64::max);
    Outcome::new(
        !centers.is_empty() && worst < 1e-5,
        format!("centers={} max|w-2pi n|={worst:.1e}", centers.len()),
    )
}

fn determinism() -> Outcome {
    let dir = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => return fail(e),
    };
    let run = |jobs: &str| -> Result<(Vec<u8>, Vec<u8>), String> {
        let o = Command::new(env!("CARGO_BIN_EXE_cptorus"))
            .current_dir(dir.path())
            .args([
                "--jobs",
                jobs,
                "scan",
                "--tau",
                "0.369,1.573",
                "--center",
                "-10,0",
                "--width",
                "30",
                "--height",
                "30",
                "--res",
                "64x64",
                "--depth",
                "60",
                "--overlay-centers",
                "1/0,1",
                "--out",
                "d.ppm",
                "--csv",
                "d.csv",
            ])
            .output()
            .map_err(|e| e.to_string())?;
        if !o.status.success() {
            return Err(String::from_utf8_lossy(&o.stderr).into_owned());
        }
        let ppm = fs::read(dir.path().join("d.ppm")).map_err(|e| e.to_string())?;
        let csv = fs::read(dir.path().join("d.csv")).map_err(|e| e.to_string())?;
        Ok((ppm, csv))
    };
    match (run("1"), run("8")) {
        (Ok(a), Ok(b)) => Outcome::new(
            a == b,
            format!("64x64 ppm={}B csv={}B identical={}", a.0.len(), a.1.len(), a == b),
        ),
        (Err(e), _) | (_, Err(e)) => fail(e),
    }
}

fn main() -> ExitCode {
    let mut centers = Vec::new();
    let mut red = Vec::new();
    let mut report = |n: u32, name: &str, f: &mut dyn FnMut() -> Outcome| {
        let t0 = Instant::now();
        let o = f();
        let status = if o.pass { "PASS" } else { "FAIL" };
        let note = if !o.pass && KNOWN_RED.contains(&n) {
            " [known red]"
        } else {
            ""
        };
        println!(
            "{status} criterion {n} {name}: {} ({:.1}s){note}",
            o.detail,
            t0.elapsed().as_secs_f64()
        );
        if !o.pass && !KNOWN_RED.contains(&n) {
            red.push(n);
        }
    };
    report(1, "schwarzian tensor suite", &mut tensor_suite);
    report(2, "decomposition", &mut decomposition);
    report(3, "holonomy soundness", &mut holonomy_soundness);
    report(4, "calibration", &mut calibration);
    report(5, "hexagonal collinearity", &mut || hexagonal(&mut centers));
    report(6, "fig3 islands", &mut || fig3(&mut centers));
    report(7, "normdiff growth", &mut normdiff);
    report(8, "center weights", &mut || weights(&centers));
    report(9, "determinism", &mut determinism);
    if red.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!("unexpected failures: {red:?}");
        ExitCode::FAILURE
    }
}
