//! Raster classification of a window of the `c`-plane.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discreteness::{bq_classify, jorgensen_reject, ClassTag, PixelClass, DEFAULT_DEPTH, DEFAULT_EPS};
use crate::error::{Error, Result};
use crate::holonomy::{holonomy_generators_with, trace_triple, ProjectivePoint};
use crate::ode::Dop853;

/// Default per-pixel integration tolerance.
pub const SCAN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanWindow {
    pub center: Complex64,
    pub width: f64,
    pub height: f64,
    pub nx: usize,
    pub ny: usize,
}

impl ScanWindow {
    pub fn new(center: Complex64, width: f64, height: f64, nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidArgument("raster needs at least one pixel".into()));
        }
        if !(width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite()) {
            return Err(Error::InvalidArgument("window size must be positive".into()));
        }
        Ok(Self {
            center,
            width,
            height,
            nx,
            ny,
        })
    }

    /// Centre of pixel `(i, j)`; `i` runs right, `j` runs down.
    pub fn pixel_center(&self, i: usize, j: usize) -> Complex64 {
        let re = -self.width / 2.0 + (i as f64 + 0.5) * self.width / self.nx as f64;
        let im = self.height / 2.0 - (j as f64 + 0.5) * self.height / self.ny as f64;
        self.center + Complex64::new(re, im)
    }

    /// Pixel containing `c`, if inside the window.
    pub fn locate(&self, c: Complex64) -> Option<(usize, usize)> {
        let d = c - self.center;
        let fx = (d.re + self.width / 2.0) / self.width * self.nx as f64;
        let fy = (self.height / 2.0 - d.im) / self.height * self.ny as f64;
        if fx < 0.0 || fy < 0.0 || fx >= self.nx as f64 || fy >= self.ny as f64 {
            return None;
        }
        Some((fx as usize, fy as usize))
    }
}

/// Per-pixel controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanParams {
    pub depth: u32,
    pub eps: f64,
    pub tol: f64,
    /// Integrator step budget per transport; exceeding it yields `UNKNOWN`
    /// with the budget flag.
    pub max_steps: usize,
}

impl Default for ScanParams {
    fn default() -> Self {
        Self {
            depth: DEFAULT_DEPTH,
            eps: DEFAULT_EPS,
            tol: SCAN_TOL,
            max_steps: 20_000,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Overlays {
    /// Marked points (Fuchsian centers).
    pub points: Vec<Complex64>,
    /// Polylines (pleating rays).
    pub polylines: Vec<Vec<Complex64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationRaster {
    pub window: ScanWindow,
    pub tau: Complex64,
    pub params: ScanParams,
    /// Row-major, `ny` rows of `nx`.
    pub classes: Vec<PixelClass>,
    pub overlays: Overlays,
}

impl ClassificationRaster {
    pub fn get(&self, i: usize, j: usize) -> &PixelClass {
        &self.classes[j * self.window.nx + i]
    }

    pub fn count(&self, tag: ClassTag) -> usize {
        self.classes.iter().filter(|c| c.tag == tag).count()
    }

    /// Size of the 4-connected component of `tag` pixels containing `(i, j)`.
    pub fn component_size(&self, i: usize, j: usize, tag: ClassTag) -> usize {
        let (nx, ny) = (self.window.nx, self.window.ny);
        if self.get(i, j).tag != tag {
            return 0;
        }
        let mut seen = vec![false; nx * ny];
        let mut stack = vec![(i, j)];
        seen[j * nx + i] = true;
        let mut n = 0;
        while let Some((a, b)) = stack.pop() {
            n += 1;
            let mut push = |x: usize, y: usize| {
                if !seen[y * nx + x] && self.classes[y * nx + x].tag == tag {
                    seen[y * nx + x] = true;
                    stack.push((x, y));
                }
            };
            if a > 0 {
                push(a - 1, b);
            }
            if a + 1 < nx {
                push(a + 1, b);
            }
            if b > 0 {
                push(a, b - 1);
            }
            if b + 1 < ny {
                push(a, b + 1);
            }
        }
        n
    }
}

/// Classifies the structure at `c`: holonomy, trace triple, Jørgensen
/// pre-filter, then the Farey-tree search.
pub fn classify_point(origin: &ProjectivePoint, c: Complex64, params: &ScanParams) -> PixelClass {
    let p = origin.at(c);
    let g = match generators(&p, params) {
        Ok(g) => g,
        Err(Error::StepFailure { reason, .. }) if reason.contains("budget") => {
            return PixelClass {
                tag: ClassTag::Unknown,
                depth_used: 0,
                evidence: None,
                budget_exhausted: true,
            };
        }
        Err(_) => return PixelClass::error(),
    };
    let Ok(t) = trace_triple(&g) else {
        return PixelClass::error();
    };
    if jorgensen_reject(&g) {
        return PixelClass::new(ClassTag::BqViolated, 0);
    }
    bq_classify(&t, params.depth, params.eps)
}

fn generators(p: &ProjectivePoint, params: &ScanParams) -> Result<crate::holonomy::GeneratorPair> {
    let integ = Dop853 {
        max_steps: params.max_steps,
        ..Dop853::new(params.tol)
    };
    holonomy_generators_with(p, &integ)
}

/// Classifies every pixel of `w`. Rows are distributed over the current rayon
/// pool and written into a preallocated grid, so the result does not depend
/// on the number of workers.
pub fn scan(origin: &ProjectivePoint, w: &ScanWindow, params: &ScanParams) -> ClassificationRaster {
    let mut classes = vec![PixelClass::error(); w.nx * w.ny];
    classes.par_chunks_mut(w.nx).enumerate().for_each(|(j, row)| {
        for (i, cell) in row.iter_mut().enumerate() {
            *cell = classify_point(origin, w.pixel_center(i, j), params);
        }
    });
    ClassificationRaster {
        window: *w,
        tau: origin.modulus.tau(),
        params: *params,
        classes,
        overlays: Overlays::default(),
    }
}

pub fn palette(tag: ClassTag) -> [u8; 3] {
    match tag {
        ClassTag::DiscreteBq => [40, 40, 90],
        ClassTag::BqViolated => [235, 235, 235],
        ClassTag::Unknown => [128, 128, 128],
        ClassTag::Error => [255, 0, 0],
    }
}

pub const CENTER_COLOR: [u8; 3] = [255, 220, 0];
pub const RAY_COLOR: [u8; 3] = [0, 200, 220];

pub fn palette_inverse(rgb: [u8; 3]) -> Option<ClassTag> {
    [
        ClassTag::DiscreteBq,
        ClassTag::BqViolated,
        ClassTag::Unknown,
        ClassTag::Error,
    ]
    .into_iter()
    .find(|t| palette(*t) == rgb)
}

/// `tau=… center=… width=… height=… res=… depth=… eps=… tol=…`
pub fn provenance(r: &ClassificationRaster) -> String {
    let w = &r.window;
    format!(
        "tau={:.16e},{:.16e} center={:.16e},{:.16e} width={:.16e} height={:.16e} res={}x{} depth={} eps={:.16e} tol={:.16e}",
        r.tau.re, r.tau.im, w.center.re, w.center.im, w.width, w.height, w.nx, w.ny,
        r.params.depth, r.params.eps, r.params.tol
    )
}

/// P6 image with the provenance comment on line 2, followed by `extra`
/// comment lines.
pub fn encode_ppm(r: &ClassificationRaster, extra: &[String]) -> Vec<u8> {
    let w = &r.window;
    let mut header = String::from("P6\n");
    let _ = writeln!(header, "# {}", provenance(r));
    for line in extra {
        for l in line.lines() {
            let _ = writeln!(header, "# {l}");
        }
    }
    let _ = write!(header, "{} {}\n255\n", w.nx, w.ny);
    let mut rgb: Vec<[u8; 3]> = r.classes.iter().map(|c| palette(c.tag)).collect();

    let mut put = |c: Complex64, color: [u8; 3]| {
        if let Some((i, j)) = w.locate(c) {
            rgb[j * w.nx + i] = color;
        }
    };
    for line in &r.overlays.polylines {
        for seg in line.windows(2) {
            // sample densely enough to touch every crossed pixel
            let dx = (seg[1].re - seg[0].re).abs() / w.width * w.nx as f64;
            let dy = (seg[1].im - seg[0].im).abs() / w.height * w.ny as f64;
            let n = (2.0 * dx.max(dy)).ceil().clamp(1.0, 1e6) as usize;
            for k in 0..=n {
                put(seg[0] + (seg[1] - seg[0]) * (k as f64 / n as f64), RAY_COLOR);
            }
        }
    }
    for &p in &r.overlays.points {
        put(p, CENTER_COLOR);
    }

    let mut out = header.into_bytes();
    out.reserve(rgb.len() * 3);
    for px in rgb {
        out.extend_from_slice(&px);
    }
    out
}

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let io = |e: std::io::Error| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::Io {
            path: path.display().to_string(),
            message: "not a file path".into(),
        })?
        .to_string_lossy()
        .into_owned();
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    std::fs::write(&tmp, bytes).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        io(e)
    })
}

pub fn write_ppm(r: &ClassificationRaster, path: &Path) -> Result<()> {
    write_atomic(path, &encode_ppm(r, &[]))
}

/// A decoded P6 file.
#[derive(Debug, Clone, PartialEq)]
pub struct Ppm {
    pub comments: Vec<String>,
    pub nx: usize,
    pub ny: usize,
    pub pixels: Vec<[u8; 3]>,
}

impl Ppm {
    /// Class grid through [`palette_inverse`]; overlay pixels map to `None`.
    pub fn classes(&self) -> Vec<Option<ClassTag>> {
        self.pixels.iter().map(|p| palette_inverse(*p)).collect()
    }
}

pub fn decode_ppm(bytes: &[u8]) -> Result<Ppm> {
    let bad = |m: &str| Error::InvalidArgument(format!("malformed PPM: {m}"));
    let mut pos = 0usize;
    let mut comments = Vec::new();
    let mut tokens: Vec<usize> = Vec::new();
    let mut magic = false;
    while tokens.len() < 3 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos >= bytes.len() {
            return Err(bad("truncated header"));
        }
        if bytes[pos] == b'#' {
            let end = bytes[pos..]
                .iter()
                .position(|&b| b == b'\n')
                .map(|e| pos + e)
                .unwrap_or(bytes.len());
            let text = String::from_utf8_lossy(&bytes[pos + 1..end]);
            comments.push(text.trim_start().to_string());
            pos = end;
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let tok = std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("header is not text"))?;
        if !magic {
            if tok != "P6" {
                return Err(bad("expected P6"));
            }
            magic = true;
        } else {
            tokens.push(tok.parse().map_err(|_| bad("bad header number"))?);
        }
    }
    let (nx, ny, maxval) = (tokens[0], tokens[1], tokens[2]);
    if maxval != 255 {
        return Err(bad("only 8-bit images are supported"));
    }
    pos += 1;
    let payload = &bytes[pos.min(bytes.len())..];
    if payload.len() != nx * ny * 3 {
        return Err(bad("payload size does not match dimensions"));
    }
    let pixels = payload.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    Ok(Ppm {
        comments,
        nx,
        ny,
        pixels,
    })
}

pub fn read_ppm(path: &Path) -> Result<Ppm> {
    let bytes = std::fs::read(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    decode_ppm(&bytes)
}

/// CSV rows `i,j,re_c,im_c,class,depth_used` after `#`-prefixed header lines.
pub fn encode_csv(r: &ClassificationRaster, extra: &[String]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# {}", provenance(r));
    for line in extra {
        for l in line.lines() {
            let _ = writeln!(s, "# {l}");
        }
    }
    s.push_str("i,j,re_c,im_c,class,depth_used\n");
    let w = &r.window;
    for j in 0..w.ny {
        for i in 0..w.nx {
            let c = w.pixel_center(i, j);
            let cls = r.get(i, j);
            let _ = writeln!(
                s,
                "{i},{j},{:.16e},{:.16e},{},{}",
                c.re,
                c.im,
                cls.tag.name(),
                cls.depth_used
            );
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::Modulus;

    fn square() -> ProjectivePoint {
        ProjectivePoint::new(
            Modulus::new(Complex64::new(0.0, 1.0)).unwrap(),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
        )
    }

    fn blank(nx: usize, ny: usize, tag: ClassTag) -> ClassificationRaster {
        let window = ScanWindow::new(Complex64::new(0.0, 0.0), 2.0, 2.0, nx, ny).unwrap();
        ClassificationRaster {
            window,
            tau: Complex64::new(0.0, 1.0),
            params: ScanParams::default(),
            classes: vec![PixelClass::new(tag, 0); nx * ny],
            overlays: Overlays::default(),
        }
    }

    #[test]
    fn window_geometry() {
        let w = ScanWindow::new(Complex64::new(1.0, -1.0), 4.0, 2.0, 4, 2).unwrap();
        assert_eq!(w.pixel_center(0, 0), Complex64::new(-0.5, -0.5));
        assert_eq!(w.pixel_center(3, 1), Complex64::new(2.5, -1.5));
        for j in 0..2 {
            for i in 0..4 {
                assert_eq!(w.locate(w.pixel_center(i, j)), Some((i, j)));
            }
        }
        assert_eq!(w.locate(Complex64::new(10.0, 0.0)), None);
        assert!(ScanWindow::new(Complex64::new(0.0, 0.0), 0.0, 1.0, 1, 1).is_err());
        assert!(ScanWindow::new(Complex64::new(0.0, 0.0), 1.0, 1.0, 0, 1).is_err());
    }

    #[test]
    fn single_pixel_at_origin_is_discrete() {
        let w = ScanWindow::new(Complex64::new(0.0, 0.0), 0.1, 0.1, 1, 1).unwrap();
        let r = scan(&square(), &w, &ScanParams::default());
        assert_eq!(r.classes[0].tag, ClassTag::DiscreteBq);
    }

    #[test]
    fn unknown_payload() {
        let r = blank(2, 2, ClassTag::Unknown);
        let bytes = encode_ppm(&r, &[]);
        let ppm = decode_ppm(&bytes).unwrap();
        assert_eq!(ppm.pixels.len() * 3, 12);
        assert!(ppm.pixels.iter().all(|p| *p == [128, 128, 128]));
        assert_eq!(&bytes[bytes.len() - 12..], &[128u8; 12]);
        let text = String::from_utf8_lossy(&bytes);
        assert!(text.lines().nth(1).unwrap().starts_with("# tau="));
    }

    #[test]
    fn palette_round_trip() {
        let mut r = blank(3, 2, ClassTag::Unknown);
        let tags = [
            ClassTag::DiscreteBq,
            ClassTag::BqViolated,
            ClassTag::Unknown,
            ClassTag::Error,
            ClassTag::DiscreteBq,
            ClassTag::Error,
        ];
        for (c, t) in r.classes.iter_mut().zip(tags) {
            c.tag = t;
        }
        let ppm = decode_ppm(&encode_ppm(&r, &["config={}".into()])).unwrap();
        let back: Vec<ClassTag> = ppm.classes().into_iter().map(Option::unwrap).collect();
        assert_eq!(back, tags);
        assert_eq!(ppm.comments.len(), 2);
        assert_eq!(ppm.comments[1], "config={}");
    }

    #[test]
    fn overlays_use_contrasting_colors() {
        let mut r = blank(8, 8, ClassTag::BqViolated);
        r.overlays.points.push(Complex64::new(0.1, 0.1));
        r.overlays
            .polylines
            .push(vec![Complex64::new(-0.9, -0.9), Complex64::new(0.9, -0.9)]);
        let ppm = decode_ppm(&encode_ppm(&r, &[])).unwrap();
        let (i, j) = r.window.locate(Complex64::new(0.1, 0.1)).unwrap();
        assert_eq!(ppm.pixels[j * 8 + i], CENTER_COLOR);
        assert_eq!(ppm.pixels[7 * 8..].iter().filter(|p| **p == RAY_COLOR).count(), 8);
        assert_eq!(palette_inverse(CENTER_COLOR), None);
    }

    #[test]
    fn components() {
        let mut r = blank(4, 4, ClassTag::BqViolated);
        for (i, j) in [(1, 1), (1, 2), (2, 2), (3, 3)] {
            r.classes[j * 4 + i].tag = ClassTag::DiscreteBq;
        }
        assert_eq!(r.component_size(1, 1, ClassTag::DiscreteBq), 3);
        assert_eq!(r.component_size(3, 3, ClassTag::DiscreteBq), 1);
        assert_eq!(r.component_size(0, 0, ClassTag::DiscreteBq), 0);
    }

    #[test]
    fn malformed_ppm_is_rejected() {
        assert!(decode_ppm(b"P3\n1 1\n255\n").is_err());
        assert!(decode_ppm(b"P6\n2 2\n255\n\x00").is_err());
    }
}
