//! Finite-difference checks of the Schwarzian calculus on explicit conformal
//! metrics `ρ = e^σ |dz|`.
//!
//! All derivatives are second-order centered differences; a sample is valid on
//! the interior stencil, i.e. away from the outer ring of the grid.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type C = Complex64;

/// Regular grid `origin + h (i + j·i)`, `0 ≤ i < nx`, `0 ≤ j < ny`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridGeom {
    pub origin: C,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridGeom {
    pub fn new(origin: C, h: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(h > 0.0) || nx < 3 || ny < 3 {
            return Err(Error::InvalidArgument(
                "grid needs h > 0 and at least 3×3 points".into(),
            ));
        }
        Ok(Self { origin, h, nx, ny })
    }

    /// Grid covering the rectangle `[x0, x1] × [y0, y1]` with spacing about `h`.
    pub fn covering(x0: f64, x1: f64, y0: f64, y1: f64, h: f64) -> Result<Self> {
        let nx = ((x1 - x0) / h).round() as usize + 1;
        let ny = ((y1 - y0) / h).round() as usize + 1;
        Self::new(C::new(x0, y0), h, nx, ny)
    }

    /// 3×3 grid centred at `z`.
    pub fn stencil(z: C, h: f64) -> Self {
        Self {
            origin: z - C::new(h, h),
            h,
            nx: 3,
            ny: 3,
        }
    }

    pub fn point(&self, i: usize, j: usize) -> C {
        self.origin + C::new(i as f64 * self.h, j as f64 * self.h)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn interior(&self, i: usize, j: usize) -> bool {
        i > 0 && j > 0 && i + 1 < self.nx && j + 1 < self.ny
    }
}

/// Log-density samples `σ` of a conformal metric.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub geom: GridGeom,
    pub sigma: Vec<f64>,
}

impl DensityGrid {
    pub fn from_log(geom: GridGeom, sigma: impl Fn(C) -> f64) -> Self {
        let mut s = Vec::with_capacity(geom.len());
        for j in 0..geom.ny {
            for i in 0..geom.nx {
                s.push(sigma(geom.point(i, j)));
            }
        }
        Self { geom, sigma: s }
    }

    pub fn from_density(geom: GridGeom, rho: impl Fn(C) -> f64) -> Self {
        Self::from_log(geom, |z| rho(z).ln())
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.sigma[j * self.geom.nx + i]
    }

    /// `(σ_z, σ_zz)` at an interior point.
    fn wirtinger(&self, i: usize, j: usize) -> (C, C) {
        let h = self.geom.h;
        let c = self.at(i, j);
        let (e, w, n, s) = (
            self.at(i + 1, j),
            self.at(i - 1, j),
            self.at(i, j + 1),
            self.at(i, j - 1),
        );
        let sx = (e - w) / (2.0 * h);
        let sy = (n - s) / (2.0 * h);
        let sxx = (e - 2.0 * c + w) / (h * h);
        let syy = (n - 2.0 * c + s) / (h * h);
        let sxy = (self.at(i + 1, j + 1) - self.at(i + 1, j - 1) - self.at(i - 1, j + 1)
            + self.at(i - 1, j - 1))
            / (4.0 * h * h);
        (C::new(sx, -sy) * 0.5, C::new(sxx - syy, -2.0 * sxy) * 0.25)
    }
}

/// Samples of the `dz²` coefficient of a quadratic differential.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadDiffField {
    pub geom: GridGeom,
    pub values: Vec<C>,
    pub valid: Vec<bool>,
}

impl QuadDiffField {
    fn interior_from(geom: GridGeom, f: impl Fn(usize, usize) -> C) -> Self {
        let mut values = vec![C::new(0.0, 0.0); geom.len()];
        let mut valid = vec![false; geom.len()];
        for j in 0..geom.ny {
            for i in 0..geom.nx {
                if geom.interior(i, j) {
                    values[j * geom.nx + i] = f(i, j);
                    valid[j * geom.nx + i] = true;
                }
            }
        }
        Self { geom, values, valid }
    }

    pub fn at(&self, i: usize, j: usize) -> Option<C> {
        let k = j * self.geom.nx + i;
        self.valid[k].then(|| self.values[k])
    }

    /// `sup |self − exact|` over valid samples.
    pub fn max_error(&self, exact: impl Fn(C) -> C) -> f64 {
        let mut m = 0.0f64;
        for j in 0..self.geom.ny {
            for i in 0..self.geom.nx {
                if let Some(v) = self.at(i, j) {
                    m = m.max((v - exact(self.geom.point(i, j))).norm());
                }
            }
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.max_error(|_| C::new(0.0, 0.0))
    }

    /// Pointwise linear combination `Σ kᵢ fᵢ` on a common grid.
    pub fn combine(terms: &[(f64, &QuadDiffField)]) -> Result<QuadDiffField> {
        let first = terms
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty combination".into()))?
            .1;
        let geom = first.geom;
        let mut values = vec![C::new(0.0, 0.0); geom.len()];
        let mut valid = vec![true; geom.len()];
        for (k, f) in terms {
            if f.geom != geom {
                return Err(Error::GridMismatch);
            }
            for n in 0..geom.len() {
                values[n] += f.values[n] * *k;
                valid[n] &= f.valid[n];
            }
        }
        Ok(QuadDiffField { geom, values, valid })
    }
}

/// `S(f) = (f″/f′)′ − ½ (f″/f′)²` from complex differences of step `h`.
pub fn schwarzian_derivative(f: impl Fn(C) -> C, geom: &GridGeom) -> Result<QuadDiffField> {
    let h = geom.h;
    let mut values = Vec::with_capacity(geom.len());
    for j in 0..geom.ny {
        for i in 0..geom.nx {
            let z = geom.point(i, j);
            let (m2, m1, c0, p1, p2) = (f(z - 2.0 * h), f(z - h), f(z), f(z + h), f(z + 2.0 * h));
            let d1 = (p1 - m1) / (2.0 * h);
            let d2 = (p1 - c0 * 2.0 + m1) / (h * h);
            let d3 = (p2 - p1 * 2.0 + m1 * 2.0 - m2) / (2.0 * h * h * h);
            if d1.norm() < 1e-12 {
                return Err(Error::DegenerateDerivative(z));
            }
            let r = d2 / d1;
            values.push(d3 / d1 - r * r * 1.5);
        }
    }
    Ok(QuadDiffField {
        geom: *geom,
        values,
        valid: vec![true; geom.len()],
    })
}

/// `β(ρ₁, ρ₂) = [(σ₂ − σ₁)_zz − (σ₂)_z² + (σ₁)_z²] dz²`.
pub fn schwarzian_tensor(g1: &DensityGrid, g2: &DensityGrid) -> Result<QuadDiffField> {
    if g1.geom != g2.geom {
        return Err(Error::GridMismatch);
    }
    Ok(QuadDiffField::interior_from(g1.geom, |i, j| {
        let (z1, zz1) = g1.wirtinger(i, j);
        let (z2, zz2) = g2.wirtinger(i, j);
        zz2 - zz1 - z2 * z2 + z1 * z1
    }))
}

/// Gaussian curvature `−Δσ / e^{2σ}`; `NaN` on the boundary ring.
pub fn curvature(g: &DensityGrid) -> Vec<f64> {
    let geom = g.geom;
    let h = geom.h;
    let mut out = vec![f64::NAN; geom.len()];
    for j in 1..geom.ny - 1 {
        for i in 1..geom.nx - 1 {
            let lap = (g.at(i + 1, j) + g.at(i - 1, j) + g.at(i, j + 1) + g.at(i, j - 1) - 4.0 * g.at(i, j))
                / (h * h);
            out[j * geom.nx + i] = -lap / (2.0 * g.at(i, j)).exp();
        }
    }
    out
}

/// A map sampled on a grid, with values written as complex coordinates of
/// the target.
#[derive(Debug, Clone, PartialEq)]
pub struct MapSamples {
    pub geom: GridGeom,
    pub values: Vec<C>,
}

impl MapSamples {
    pub fn from_fn(geom: GridGeom, f: impl Fn(C) -> C) -> Self {
        let mut values = Vec::with_capacity(geom.len());
        for j in 0..geom.ny {
            for i in 0..geom.nx {
                values.push(f(geom.point(i, j)));
            }
        }
        Self { geom, values }
    }
}

/// Riemannian metric of the target, `g(w)` as a symmetric 2×2 matrix in the
/// coordinates `(Re w, Im w)`.
pub type TargetMetric<'a> = &'a dyn Fn(C) -> [[f64; 2]; 2];

/// Hopf differential `⟨f_z, f_z⟩_g dz²`, the (2,0) part of `f*g`.
pub fn hopf_differential(f: &MapSamples, g: TargetMetric<'_>) -> QuadDiffField {
    let geom = f.geom;
    let h = geom.h;
    let at = |i: usize, j: usize| f.values[j * geom.nx + i];
    QuadDiffField::interior_from(geom, |i, j| {
        let fx = (at(i + 1, j) - at(i - 1, j)) / (2.0 * h);
        let fy = (at(i, j + 1) - at(i, j - 1)) / (2.0 * h);
        // f_z = ½(f_x − i f_y), componentwise in (u, v)
        let u = C::new(fx.re, -fy.re) * 0.5;
        let v = C::new(fx.im, -fy.im) * 0.5;
        let m = g(at(i, j));
        u * u * m[0][0] + u * v * (2.0 * m[0][1]) + v * v * m[1][1]
    })
}

/// `sup |β(|dz|, ρ)|` over the interior.
pub fn mobius_flat_check(g: &DensityGrid) -> f64 {
    let flat = DensityGrid {
        geom: g.geom,
        sigma: vec![0.0; g.geom.len()],
    };
    schwarzian_tensor(&flat, g)
        .map(|b| b.max_abs())
        .unwrap_or(f64::NAN)
}

/// The two local models of the grafting decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    /// Hyperbolic disk; the collapsing map is the identity.
    Hyperbolic,
    /// Grafted cylinder `|dz|/|z|` on the upper half-plane; the collapsing map is `z ↦ i|z|`.
    Euclidean,
}

pub fn hyperbolic_disk(z: C) -> f64 {
    2.0 / (1.0 - z.norm_sqr())
}

pub fn spherical(z: C) -> f64 {
    2.0 / (1.0 + z.norm_sqr())
}

fn half_plane_metric(w: C) -> [[f64; 2]; 2] {
    let k = 1.0 / (w.im * w.im);
    [[k, 0.0], [0.0, k]]
}

fn disk_metric(w: C) -> [[f64; 2]; 2] {
    let k = hyperbolic_disk(w).powi(2);
    [[k, 0.0], [0.0, k]]
}

/// Default grid for a model region at spacing `h`.
pub fn model_grid(region: Region, h: f64) -> Result<GridGeom> {
    match region {
        Region::Hyperbolic => GridGeom::covering(-0.4, 0.4, -0.4, 0.4, h),
        Region::Euclidean => GridGeom::covering(-0.4, 0.4, 0.6, 1.4, h),
    }
}

/// `(ρ_λ, Φ(κ))` of a model: the Thurston density and the Hopf differential
/// of the collapsing map into the hyperbolic plane.
fn model_pieces(region: Region, geom: GridGeom) -> (DensityGrid, QuadDiffField) {
    match region {
        Region::Hyperbolic => {
            let rho = DensityGrid::from_density(geom, hyperbolic_disk);
            let kappa = MapSamples::from_fn(geom, |z| z);
            (rho, hopf_differential(&kappa, &disk_metric))
        }
        Region::Euclidean => {
            let rho = DensityGrid::from_density(geom, |z| 1.0 / z.norm());
            let kappa = MapSamples::from_fn(geom, |z| C::new(0.0, z.norm()));
            (rho, hopf_differential(&kappa, &half_plane_metric))
        }
    }
}

/// `sup |β(ρ_λ, ρ_sph) + Φ(κ)|` on a model region.
pub fn decomposition_check(region: Region, geom: GridGeom) -> f64 {
    let (rho, phi) = model_pieces(region, geom);
    let sph = DensityGrid::from_density(geom, spherical);
    let beta = schwarzian_tensor(&rho, &sph).expect("same grid");
    QuadDiffField::combine(&[(1.0, &beta), (1.0, &phi)])
        .expect("same grid")
        .max_abs()
}

/// `sup |4β(ρ₀, ρ_sph) − 4β(ρ₀, ρ_λ) + 4Φ(κ)|` for a smooth reference `ρ₀`.
pub fn recombination_check(region: Region, geom: GridGeom, sigma0: impl Fn(C) -> f64) -> f64 {
    let (rho, phi) = model_pieces(region, geom);
    let sph = DensityGrid::from_density(geom, spherical);
    let r0 = DensityGrid::from_log(geom, sigma0);
    let lhs = schwarzian_tensor(&r0, &sph).expect("same grid");
    let b0l = schwarzian_tensor(&r0, &rho).expect("same grid");
    QuadDiffField::combine(&[(4.0, &lhs), (-4.0, &b0l), (4.0, &phi)])
        .expect("same grid")
        .max_abs()
}

/// Thurston density of the half-plane grafted along `iℝ⁺` by `t`, developed
/// onto the wedge `0 < arg z < π + t`: hyperbolic on the two boundary
/// sectors, flat `|dz|/|z|` on the grafted sector of angle `t`.
pub fn wedge_thurston_density(z: C, t: f64) -> f64 {
    let phi = z.arg();
    let r = z.norm();
    if phi <= PI / 2.0 {
        1.0 / (r * phi.sin())
    } else if phi <= PI / 2.0 + t {
        1.0 / r
    } else {
        1.0 / (r * (PI + t - phi).sin())
    }
}

/// Poincaré density of the wedge `0 < arg z < θ`, pulled back from the
/// half-plane by `z ↦ z^{π/θ}`.
pub fn wedge_poincare_density(z: C, theta: f64) -> f64 {
    let k = PI / theta;
    k / (z.norm() * (k * z.arg()).sin())
}

/// `min (ρ_Th − ρ_P) / ρ_P` over the interior of `geom` (which must lie in the wedge).
pub fn kobayashi_check(t: f64, geom: &GridGeom) -> f64 {
    let mut worst = f64::INFINITY;
    for j in 1..geom.ny - 1 {
        for i in 1..geom.nx - 1 {
            let z = geom.point(i, j);
            let th = wedge_thurston_density(z, t);
            let p = wedge_poincare_density(z, PI + t);
            worst = worst.min((th - p) / p);
        }
    }
    worst
}

/// Outcome of one identity in the self-test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tol: f64,
    /// `residual(h) / residual(h/2)` for truncation-dominated identities.
    pub ratio: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelftestReport {
    pub h: f64,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl SelftestReport {
    pub fn text(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            let ratio = c.ratio.map(|r| format!(" ratio={r:.3}")).unwrap_or_default();
            s.push_str(&format!(
                "{} {:<28} residual={:.3e} tol={:.3e}{}\n",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.residual,
                c.tol,
                ratio
            ));
        }
        s.push_str(if self.pass {
            "selftest: PASS\n"
        } else {
            "selftest: FAIL\n"
        });
        s
    }
}

/// Smooth test densities `σ = a x² + b xy + c sin(d y) + e x`.
pub fn smooth_family(k: usize) -> impl Fn(C) -> f64 {
    const COEF: [[f64; 5]; 4] = [
        [0.3, -0.2, 0.1, 1.3, 0.05],
        [-0.15, 0.25, -0.2, 0.7, 0.1],
        [0.05, 0.1, 0.3, 2.1, -0.2],
        [0.2, 0.05, -0.1, 1.7, 0.15],
    ];
    let [a, b, c, d, e] = COEF[k % COEF.len()];
    move |z: C| a * z.re * z.re + b * z.re * z.im + c * (d * z.im).sin() + e * z.re
}

/// Tolerance budget `50 h²`.
pub fn tolerance(h: f64) -> f64 {
    50.0 * h * h
}

/// β(|dz|, |z⁻¹dz|) against ¼ z⁻² on a grid avoiding the origin.
pub fn cstar_residual(h: f64) -> Result<f64> {
    let geom = GridGeom::covering(0.4, 0.9, -0.25, 0.25, h)?;
    let flat = DensityGrid::from_log(geom, |_| 0.0);
    let cyl = DensityGrid::from_density(geom, |z| 1.0 / z.norm());
    Ok(schwarzian_tensor(&flat, &cyl)?.max_error(|z| (z * z).inv() * 0.25))
}

/// `β(f*ρ₁, f*ρ₂) − f*β(ρ₁, ρ₂)` for `f(z) = 1/z`, the right side evaluated
/// on 3×3 stencils around `f(z)`.
pub fn naturality_residual(h: f64) -> Result<f64> {
    let geom = GridGeom::covering(0.8, 1.2, 0.1, 0.5, h)?;
    let s1 = smooth_family(0);
    let s2 = smooth_family(1);
    let pull = |s: &dyn Fn(C) -> f64, z: C| s(z.inv()) - z.norm_sqr().ln();
    let p1 = DensityGrid::from_log(geom, |z| pull(&s1, z));
    let p2 = DensityGrid::from_log(geom, |z| pull(&s2, z));
    let lhs = schwarzian_tensor(&p1, &p2)?;
    let mut worst = 0.0f64;
    for j in 1..geom.ny - 1 {
        for i in 1..geom.nx - 1 {
            let z = geom.point(i, j);
            let w = z.inv();
            let st = GridGeom::stencil(w, h);
            let b = schwarzian_tensor(&DensityGrid::from_log(st, &s1), &DensityGrid::from_log(st, &s2))?;
            let fprime = -(z * z).inv();
            let rhs = b.at(1, 1).expect("centre of stencil") * fprime * fprime;
            worst = worst.max((lhs.at(i, j).expect("interior") - rhs).norm());
        }
    }
    Ok(worst)
}

fn cocycle_residual(h: f64) -> Result<(f64, f64)> {
    let geom = GridGeom::covering(-0.5, 0.5, -0.5, 0.5, h)?;
    let g: Vec<DensityGrid> = (0..3)
        .map(|k| DensityGrid::from_log(geom, smooth_family(k)))
        .collect();
    let b12 = schwarzian_tensor(&g[0], &g[1])?;
    let b23 = schwarzian_tensor(&g[1], &g[2])?;
    let b13 = schwarzian_tensor(&g[0], &g[2])?;
    let b21 = schwarzian_tensor(&g[1], &g[0])?;
    let cocycle = QuadDiffField::combine(&[(1.0, &b13), (-1.0, &b12), (-1.0, &b23)])?.max_abs();
    let anti = QuadDiffField::combine(&[(1.0, &b12), (1.0, &b21)])?.max_abs();
    Ok((cocycle, anti))
}

fn flat_residuals(h: f64) -> Result<[f64; 3]> {
    let geom = GridGeom::covering(-0.5, 0.5, -0.5, 0.5, h)?;
    Ok([
        mobius_flat_check(&DensityGrid::from_log(geom, |_| 0.0)),
        mobius_flat_check(&DensityGrid::from_density(geom, spherical)),
        mobius_flat_check(&DensityGrid::from_density(geom, hyperbolic_disk)),
    ])
}

/// Runs the identity suite at spacing `h`; convergence ratios compare with `h/2`.
pub fn selftest(h: f64) -> Result<SelftestReport> {
    if !(h > 0.0 && h <= 0.05) {
        return Err(Error::InvalidArgument(format!(
            "grid spacing must lie in (0, 0.05], got {h}"
        )));
    }
    let tol = tolerance(h);
    let mut checks = Vec::new();
    let mut push = |name: &str, residual: f64, tol: f64, ratio: Option<f64>| {
        let ratio_ok = ratio.is_none_or(|r| (3.5..=4.5).contains(&r));
        checks.push(Check {
            name: name.to_string(),
            residual,
            tol,
            ratio,
            pass: residual < tol && ratio_ok,
        });
    };
    let both = |f: &dyn Fn(f64) -> Result<f64>| -> Result<(f64, f64)> {
        let a = f(h)?;
        let b = f(h / 2.0)?;
        Ok((a, a / b))
    };

    let (r, k) = both(&cstar_residual)?;
    push("beta_cstar", r, tol, Some(k));

    let (cocycle, anti) = cocycle_residual(h)?;
    push("cocycle", cocycle, tol, None);
    push("antisymmetry", anti, tol, None);

    let (r, k) = both(&naturality_residual)?;
    push("naturality_inversion", r, tol, Some(k));

    let fa = flat_residuals(h)?;
    let fb = flat_residuals(h / 2.0)?;
    push("mobius_flat_euclidean", fa[0], tol, None);
    push("mobius_flat_spherical", fa[1], tol, Some(fa[1] / fb[1]));
    push("mobius_flat_hyperbolic", fa[2], tol, Some(fa[2] / fb[2]));

    let geom = GridGeom::covering(-0.5, 0.5, -0.5, 0.5, h)?;
    let kh = curvature(&DensityGrid::from_density(geom, hyperbolic_disk));
    let ks = curvature(&DensityGrid::from_density(geom, spherical));
    let annulus = GridGeom::covering(0.4, 0.9, -0.25, 0.25, h)?;
    let kc = curvature(&DensityGrid::from_density(annulus, |z| 1.0 / z.norm()));
    let dev = |k: &[f64], want: f64| {
        k.iter()
            .filter(|v| !v.is_nan())
            .map(|v| (v - want).abs())
            .fold(0.0, f64::max)
    };
    push("curvature_hyperbolic", dev(&kh, -1.0), tol, None);
    push("curvature_spherical", dev(&ks, 1.0), tol, None);
    push("curvature_cylinder", dev(&kc, 0.0), tol, None);

    let sgeom = GridGeom::covering(0.5, 1.0, 0.2, 0.7, h)?;
    let mob = schwarzian_derivative(|z| (z * 2.0 + 1.0) / (z * C::new(0.5, 0.3) + 3.0), &sgeom)?;
    push("schwarzian_mobius", mob.max_abs(), tol, None);
    let sq = schwarzian_derivative(|z| z * z, &sgeom)?;
    push(
        "schwarzian_square",
        sq.max_error(|z| -(z * z).inv() * 1.5),
        tol,
        None,
    );
    let ex = schwarzian_derivative(|z| z.exp(), &sgeom)?;
    push("schwarzian_exp", ex.max_error(|_| C::new(-0.5, 0.0)), tol, None);
    // β(|dz|, f*|dz|) = ½ S(f) for f = z²
    let flat = DensityGrid::from_log(sgeom, |_| 0.0);
    let pulled = DensityGrid::from_density(sgeom, |z| 2.0 * z.norm());
    let beta = schwarzian_tensor(&flat, &pulled)?;
    let half_s = QuadDiffField {
        valid: beta.valid.clone(),
        ..sq.clone()
    };
    push(
        "tensor_generalizes_schwarzian",
        QuadDiffField::combine(&[(1.0, &beta), (-0.5, &half_s)])?.max_abs(),
        tol,
        None,
    );

    let hgeom = model_grid(Region::Euclidean, h)?;
    let collapse = hopf_differential(
        &MapSamples::from_fn(hgeom, |z| C::new(0.0, z.norm())),
        &half_plane_metric,
    );
    push(
        "hopf_collapse",
        collapse.max_error(|z| (z * z).inv() * 0.25),
        tol,
        None,
    );
    let reflect = hopf_differential(
        &MapSamples::from_fn(hgeom, |z| C::new(-z.re, z.im)),
        &half_plane_metric,
    );
    push("hopf_isometry", reflect.max_abs(), tol, None);
    let holo = hopf_differential(&MapSamples::from_fn(hgeom, |z| z * z + z), &half_plane_metric);
    push("hopf_conformal", holo.max_abs(), tol, None);

    for (name, region) in [
        ("decomposition_hyperbolic", Region::Hyperbolic),
        ("decomposition_euclidean", Region::Euclidean),
    ] {
        let a = decomposition_check(region, model_grid(region, h)?);
        let b = decomposition_check(region, model_grid(region, h / 2.0)?);
        let ratio = (a > 1e3 * f64::EPSILON).then_some(a / b);
        push(name, a, tol, ratio);
    }
    for (name, region) in [
        ("recombination_hyperbolic", Region::Hyperbolic),
        ("recombination_euclidean", Region::Euclidean),
    ] {
        push(
            name,
            recombination_check(region, model_grid(region, h)?, smooth_family(2)),
            tol,
            None,
        );
    }

    let wedge = GridGeom::covering(-1.0, 1.0, 0.05, 1.0, h.max(1e-2))?;
    let worst = kobayashi_check(1.5, &wedge);
    checks.push(Check {
        name: "kobayashi_wedge".into(),
        residual: worst,
        tol: 0.0,
        ratio: None,
        pass: worst >= -1e-12,
    });

    let pass = checks.iter().all(|c| c.pass);
    Ok(SelftestReport { h, checks, pass })
}
