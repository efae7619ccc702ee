use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cptorus::Slope;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Holonomy, discreteness and pleating-ray experiments on punctured tori.
#[derive(Debug, Parser)]
#[command(name = "cptorus", version)]
pub struct Cli {
    /// Worker threads for the raster fan-out [default: logical cores].
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Rerun a configuration echoed into an earlier artifact (JSON).
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Option<RunConfig>,
}

/// A complete, reproducible run. Echoed verbatim into every artifact.
#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "lowercase", deny_unknown_fields)]
pub enum RunConfig {
    /// Find the uniformizing structure and print its traces as JSON.
    Calibrate(CalibrateArgs),
    /// Render a discreteness raster of a window of the slice.
    Scan(ScanArgs),
    /// Trace the pleating ray of a slope.
    Ray(RayArgs),
    /// Locate the Fuchsian centers on a pleating ray.
    Centers(CentersArgs),
    /// Series of ‖2φ_T + φ_F‖₁ along a pleating ray.
    Normdiff(NormdiffArgs),
    /// Run the Schwarzian-tensor identity suite.
    Selftest(SelftestArgs),
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateArgs {
    /// Modulus of the torus.
    #[arg(long, value_name = "RE,IM", value_parser = parse_tau, allow_hyphen_values = true)]
    pub tau: Complex64,
    /// Integrator tolerance.
    #[arg(long, default_value_t = 1e-10, value_parser = parse_positive)]
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanArgs {
    #[arg(long, value_name = "RE,IM", value_parser = parse_tau, allow_hyphen_values = true)]
    pub tau: Complex64,
    /// Window center in the c-plane.
    #[arg(long, value_name = "RE,IM", value_parser = parse_complex, allow_hyphen_values = true)]
    pub center: Complex64,
    #[arg(long, value_parser = parse_positive)]
    pub width: f64,
    #[arg(long, value_parser = parse_positive)]
    pub height: f64,
    /// Raster size.
    #[arg(long, value_name = "NXxNY")]
    pub res: Resolution,
    /// BQ search depth.
    #[arg(long, default_value_t = 60)]
    pub depth: u32,
    /// BQ growth margin.
    #[arg(long, default_value_t = 1e-3, value_parser = parse_positive)]
    pub eps: f64,
    /// Per-pixel integrator tolerance.
    #[arg(long, default_value_t = 1e-9, value_parser = parse_positive)]
    pub tol: f64,
    /// Mark the centers 1..=N of a slope.
    #[arg(long, value_name = "SLOPE,NMAX")]
    pub overlay_centers: Option<SlopeCount>,
    /// Draw the pleating ray of a slope up to weight TMAX.
    #[arg(long, value_name = "SLOPE,TMAX")]
    pub overlay_ray: Option<SlopeLength>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write per-pixel rows as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RayArgs {
    #[arg(long, value_name = "RE,IM", value_parser = parse_tau, allow_hyphen_values = true)]
    pub tau: Complex64,
    /// Pleating curve [default: systole of the flat torus].
    #[arg(long, value_name = "P/Q", value_parser = parse_slope)]
    pub slope: Option<Slope>,
    #[arg(long, value_parser = parse_positive)]
    pub tmax: f64,
    /// Target spacing in the weight.
    #[arg(long, default_value_t = 0.25, value_parser = parse_positive)]
    pub step: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CentersArgs {
    #[arg(long, value_name = "RE,IM", value_parser = parse_tau, allow_hyphen_values = true)]
    pub tau: Complex64,
    /// Pleating curve [default: systole of the flat torus].
    #[arg(long, value_name = "P/Q", value_parser = parse_slope)]
    pub slope: Option<Slope>,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub nmax: u32,
    /// Output file [default: standard output].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormdiffArgs {
    #[arg(long, value_name = "RE,IM", value_parser = parse_tau, allow_hyphen_values = true)]
    pub tau: Complex64,
    /// Pleating curve [default: systole of the flat torus].
    #[arg(long, value_name = "P/Q", value_parser = parse_slope)]
    pub slope: Option<Slope>,
    #[arg(long, value_parser = parse_positive)]
    pub tmax: f64,
    #[arg(long, default_value_t = 0.1, value_parser = parse_positive)]
    pub step: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelftestArgs {
    /// Grid spacing.
    #[arg(long, default_value_t = 1e-3, value_parser = parse_positive)]
    pub h: f64,
    #[arg(long, value_enum, default_value_t = Report::Text)]
    pub report: Report,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Report {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub nx: usize,
    pub ny: usize,
}

impl FromStr for Resolution {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s.split_once('x').ok_or("expected NXxNY, e.g. 512x512")?;
        let nx: usize = a.parse().map_err(|_| format!("bad width {a:?}"))?;
        let ny: usize = b.parse().map_err(|_| format!("bad height {b:?}"))?;
        if nx == 0 || ny == 0 {
            return Err("resolution must be positive".into());
        }
        Ok(Self { nx, ny })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeCount {
    pub slope: Slope,
    pub nmax: u32,
}

impl FromStr for SlopeCount {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s.split_once(',').ok_or("expected SLOPE,NMAX, e.g. 1/0,4")?;
        let nmax: u32 = b.parse().map_err(|_| format!("bad count {b:?}"))?;
        if nmax == 0 {
            return Err("count must be at least 1".into());
        }
        Ok(Self {
            slope: parse_slope(a)?,
            nmax,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeLength {
    pub slope: Slope,
    pub tmax: f64,
}

impl FromStr for SlopeLength {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s.split_once(',').ok_or("expected SLOPE,TMAX, e.g. 1/0,26")?;
        Ok(Self {
            slope: parse_slope(a)?,
            tmax: parse_positive(b)?,
        })
    }
}

pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    let (a, b) = s.split_once(',').ok_or("expected RE,IM")?;
    let re: f64 = a.trim().parse().map_err(|_| format!("bad real part {a:?}"))?;
    let im: f64 = b
        .trim()
        .parse()
        .map_err(|_| format!("bad imaginary part {b:?}"))?;
    if !re.is_finite() || !im.is_finite() {
        return Err("components must be finite".into());
    }
    Ok(Complex64::new(re, im))
}

pub fn parse_tau(s: &str) -> Result<Complex64, String> {
    let t = parse_complex(s)?;
    if t.im <= 0.0 {
        return Err(format!("Im τ must be positive, got {}", t.im));
    }
    Ok(t)
}

pub fn parse_slope(s: &str) -> Result<Slope, String> {
    s.parse::<Slope>().map_err(|e| e.to_string())
}

pub fn parse_positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(format!("must be positive, got {v}"));
    }
    Ok(v)
}

impl RunConfig {
    /// Re-checks the invariants that flag parsing enforces, for configs read
    /// from a file.
    pub fn validate(&self) -> Result<(), String> {
        let tau = match self {
            RunConfig::Calibrate(a) => Some(a.tau),
            RunConfig::Scan(a) => Some(a.tau),
            RunConfig::Ray(a) => Some(a.tau),
            RunConfig::Centers(a) => Some(a.tau),
            RunConfig::Normdiff(a) => Some(a.tau),
            RunConfig::Selftest(_) => None,
        };
        if let Some(t) = tau {
            if t.im.is_nan() || t.im <= 0.0 {
                return Err(format!("tau: Im τ must be positive, got {}", t.im));
            }
        }
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(format!("{name}: must be positive, got {v}"))
            }
        };
        match self {
            RunConfig::Calibrate(a) => positive("tol", a.tol),
            RunConfig::Scan(a) => {
                positive("width", a.width)?;
                positive("height", a.height)?;
                positive("eps", a.eps)?;
                positive("tol", a.tol)?;
                if a.res.nx == 0 || a.res.ny == 0 {
                    return Err("res: resolution must be positive".into());
                }
                Ok(())
            }
            RunConfig::Ray(a) => positive("tmax", a.tmax).and(positive("step", a.step)),
            RunConfig::Centers(a) if a.nmax == 0 => Err("nmax: must be at least 1".into()),
            RunConfig::Centers(_) => Ok(()),
            RunConfig::Normdiff(a) => positive("tmax", a.tmax).and(positive("step", a.step)),
            RunConfig::Selftest(a) => positive("h", a.h),
        }
    }
}
