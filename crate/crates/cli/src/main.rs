mod config;
mod json;

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;
use std::process::ExitCode;

use clap::{CommandFactory, Parser};
use cptorus::loci::{self, RayContext, RayOptions, LOCI_TOL};
use cptorus::slicescan::{self, ScanParams};
use cptorus::{calibrate_origin, tensorlab, Error, Modulus, ProjectivePoint, ScanWindow, Slope};
use num_complex::Complex64;
use serde::Serialize;

use config::{Cli, Report, RunConfig};

enum Failure {
    Usage(String),
    Compute(Error),
    /// The run finished but its checks did not pass.
    Checks,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Compute(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match (cli.command, cli.config) {
        (Some(c), None) => c,
        (None, Some(path)) => match load_config(&path) {
            Ok(c) => c,
            Err(msg) => return usage(&msg),
        },
        (Some(_), Some(_)) => return usage("--config cannot be combined with a subcommand"),
        (None, None) => {
            let _ = Cli::command().print_help();
            return ExitCode::from(2);
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs.unwrap_or(0))
        .build()
    {
        Ok(p) => p,
        Err(e) => return usage(&format!("--jobs: {e}")),
    };
    match pool.install(|| run(&cfg)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => usage(&msg),
        Err(Failure::Compute(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Checks) => ExitCode::from(1),
    }
}

fn usage(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn load_config(path: &Path) -> Result<RunConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("--config {}: {e}", path.display()))?;
    let cfg: RunConfig =
        serde_json::from_str(text.trim()).map_err(|e| format!("--config {}: {e}", path.display()))?;
    cfg.validate()
        .map_err(|e| format!("--config {}: {e}", path.display()))?;
    Ok(cfg)
}

fn modulus(tau: Complex64) -> Result<Modulus, Failure> {
    Modulus::new(tau).map_err(|e| Failure::Usage(format!("--tau: {e}")))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    slicescan::write_atomic(path, bytes)?;
    Ok(())
}

fn run(cfg: &RunConfig) -> Result<(), Failure> {
    let echo = json::to_string(cfg);
    match cfg {
        RunConfig::Calibrate(a) => {
            let m = modulus(a.tau)?;
            let cal = calibrate_origin(&m, a.tol)?;
            #[derive(Serialize)]
            struct Out<'a> {
                config: &'a RunConfig,
                #[serde(flatten)]
                calibration: &'a cptorus::holonomy::Calibration,
            }
            println!(
                "{}",
                json::to_string(&Out {
                    config: cfg,
                    calibration: &cal
                })
            );
        }
        RunConfig::Scan(a) => {
            let m = modulus(a.tau)?;
            let window = ScanWindow::new(a.center, a.width, a.height, a.res.nx, a.res.ny)
                .map_err(|e| Failure::Usage(format!("--res/--width/--height: {e}")))?;
            let cal = calibrate_origin(&m, LOCI_TOL)?;
            let origin = ProjectivePoint::new(m, Complex64::new(0.0, 0.0), cal.b0);
            let params = ScanParams {
                depth: a.depth,
                eps: a.eps,
                tol: a.tol,
                ..ScanParams::default()
            };
            let mut raster = slicescan::scan(&origin, &window, &params);
            let mut extra = vec![
                format!("config={echo}"),
                format!(
                    "window_c={:.16e}x{:.16e} window_l1={:.16e}x{:.16e}",
                    a.width,
                    a.height,
                    2.0 * a.width * m.area(),
                    2.0 * a.height * m.area()
                ),
            ];
            if let Some(o) = a.overlay_centers {
                let ctx = RayContext::new(origin, o.slope, LOCI_TOL)?;
                let ray = loci::trace_ray(ctx, &RayOptions::new(2.0 * PI * o.nmax as f64 + 0.3, 0.25))?;
                for n in 1..=o.nmax {
                    let c = loci::center_on_ray(&ray, n)?;
                    extra.push(format!(
                        "center slope={} n={} c={:.16e},{:.16e} class={}",
                        o.slope,
                        n,
                        c.c.re,
                        c.c.im,
                        raster_class(&raster, c.c)
                    ));
                    raster.overlays.points.push(c.c);
                }
            }
            if let Some(o) = a.overlay_ray {
                let ctx = RayContext::new(origin, o.slope, LOCI_TOL)?;
                let ray = loci::trace_ray(ctx, &RayOptions::new(o.tmax, 0.25))?;
                raster
                    .overlays
                    .polylines
                    .push(ray.points.iter().map(|p| p.c).collect());
            }
            write(&a.out, &slicescan::encode_ppm(&raster, &extra))?;
            if let Some(csv) = &a.csv {
                write(csv, slicescan::encode_csv(&raster, &extra).as_bytes())?;
            }
        }
        RunConfig::Ray(a) => {
            let m = modulus(a.tau)?;
            let slope = a.slope.unwrap_or_else(|| Slope::systole(&m));
            let ctx = RayContext::calibrated(&m, slope)?;
            let ray = loci::trace_ray(ctx, &RayOptions::new(a.tmax, a.step))?;
            let mut s = header(&echo, &ray.ctx);
            s.push_str("t,re_c,im_c,re_x,im_x,residual\n");
            for p in &ray.points {
                let _ = writeln!(
                    s,
                    "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                    p.t, p.c.re, p.c.im, p.triple.x.re, p.triple.x.im, p.residual
                );
            }
            write(&a.out, s.as_bytes())?;
        }
        RunConfig::Centers(a) => {
            let m = modulus(a.tau)?;
            let slope = a.slope.unwrap_or_else(|| Slope::systole(&m));
            let (ray, centers) = loci::fuchsian_centers(&m, slope, a.nmax)?;
            let theta = slope.vector(&m).arg();
            let rot = Complex64::from_polar(1.0, 2.0 * theta);
            // spread of the center arguments about the first one
            let first = centers[0].c;
            let spread = centers
                .iter()
                .map(|c| (c.c * first.conj()).arg().abs())
                .fold(0.0, f64::max);
            let axis = centers
                .iter()
                .map(|c| (c.c * rot).im.abs() / c.c.norm())
                .fold(0.0, f64::max);
            #[derive(Serialize)]
            struct Out<'a> {
                config: &'a RunConfig,
                tau: Complex64,
                b0: Complex64,
                slope: String,
                transversal: String,
                centers: &'a [cptorus::FuchsianCenter],
                collinear: bool,
                collinear_residual: f64,
                axis_residual: f64,
            }
            let out = Out {
                config: cfg,
                tau: a.tau,
                b0: ray.ctx.origin.b0,
                slope: slope.to_string(),
                transversal: ray.ctx.transversal.to_string(),
                centers: &centers,
                collinear: spread < 1e-3,
                collinear_residual: spread,
                axis_residual: axis,
            };
            let text = json::to_string(&out) + "\n";
            match &a.out {
                Some(p) => write(p, text.as_bytes())?,
                None => print!("{text}"),
            }
        }
        RunConfig::Normdiff(a) => {
            let m = modulus(a.tau)?;
            let slope = a.slope.unwrap_or_else(|| Slope::systole(&m));
            let ctx = RayContext::calibrated(&m, slope)?;
            let ray = loci::trace_ray(ctx, &RayOptions::new(a.tmax, a.step))?;
            let series = loci::normdiff_on_ray(&ray)?;
            let mut s = header(&echo, &ray.ctx);
            let _ = writeln!(
                s,
                "# extremal_length={:.16e} growth_constant={:.16e}",
                cptorus::flatdiff::extremal_length(&slope, &m),
                loci::growth_constant(&series, &slope, &m)
            );
            s.push_str("t,norm,ratio\n");
            for r in &series {
                let _ = writeln!(s, "{:.16e},{:.16e},{:.16e}", r.t, r.norm, r.ratio);
            }
            write(&a.out, s.as_bytes())?;
        }
        RunConfig::Selftest(a) => {
            let report = tensorlab::selftest(a.h).map_err(|e| Failure::Usage(format!("--h: {e}")))?;
            match a.report {
                Report::Text => print!("{}", report.text()),
                Report::Json => {
                    #[derive(Serialize)]
                    struct Out<'a> {
                        config: &'a RunConfig,
                        #[serde(flatten)]
                        report: &'a tensorlab::SelftestReport,
                    }
                    println!(
                        "{}",
                        json::to_string(&Out {
                            config: cfg,
                            report: &report
                        })
                    );
                }
            }
            if !report.pass {
                return Err(Failure::Checks);
            }
        }
    }
    Ok(())
}

fn header(echo: &str, ctx: &RayContext) -> String {
    format!(
        "# config={echo}\n# slope={} transversal={} b0={:.16e},{:.16e}\n",
        ctx.slope, ctx.transversal, ctx.origin.b0.re, ctx.origin.b0.im
    )
}

fn raster_class(r: &cptorus::ClassificationRaster, c: Complex64) -> &'static str {
    match r.window.locate(c) {
        Some((i, j)) => r.get(i, j).tag.name(),
        None => "outside",
    }
}
