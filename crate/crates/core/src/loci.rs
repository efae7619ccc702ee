//! Pleating rays, grafting weights and Fuchsian centers.
//!
//! Along the pleating ray of a simple curve `γ` the holonomy of `γ` stays real
//! hyperbolic while the rest of the group bends about its axis. The ray is
//! traced as the level set `tr ρ_c(γ) = 2 cosh u`, `u` increasing, by a
//! predictor–corrector in the complex unknown `c`; the trace is analytic in `c`,
//! so each corrector is a one-variable complex Newton solve. The bending angle
//! about the axis of `ρ(γ)`, read off the transversal generator, is the
//! grafting weight; it passes through `2πn` exactly at the Fuchsian centers.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::discreteness::{bq_classify, realize_triple, ClassTag, TraceTriple, DEFAULT_DEPTH, DEFAULT_EPS};
use crate::elliptic::Modulus;
use crate::error::{Error, Result};
use crate::flatdiff::{extremal_length, foliation_map, Letter, Slope};
use crate::holonomy::{calibrate_origin, raw_generators, transport, GeneratorPair, ProjectivePoint};
use crate::mobius::MobiusMap;

/// Integration tolerance used along rays and at centers.
pub const LOCI_TOL: f64 = 1e-12;

/// Corrector target on `|tr ρ(γ) − 2 cosh u|`, relative to `max(1, |tr ρ(γ)|)`.
pub const CORRECTOR_TOL: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayPoint {
    /// Grafting weight.
    pub t: f64,
    pub c: Complex64,
    /// `(tr ρ(γ), tr ρ(δ), tr ρ(γδ))`.
    pub triple: TraceTriple,
    /// `|Im tr ρ(γ)| / max(1, |tr ρ(γ)|)`.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FuchsianCenter {
    pub slope: Slope,
    pub n: u32,
    pub c: Complex64,
    pub triple: TraceTriple,
    /// Grafting weight recovered at the center.
    pub weight: f64,
    /// Largest `|Im|` of the three traces, relative to their size.
    pub imag_residual: f64,
    pub markov_residual: f64,
    pub class: ClassTag,
}

/// Product of the letters, left to right.
pub fn word_matrix(word: &[Letter], g: &GeneratorPair) -> MobiusMap {
    word.iter().fold(MobiusMap::IDENTITY, |acc, l| {
        acc * match l {
            Letter::A => g.a,
            Letter::B => g.b,
            Letter::AInv => g.a.inverse_sl2(),
            Letter::BInv => g.b.inverse_sl2(),
        }
    })
}

/// `ρ(γ)` for the slope's Christoffel word in the (unnormalized) generators
/// based at the cell centre.
pub fn curve_holonomy(p: &ProjectivePoint, s: &Slope, tol: f64) -> Result<MobiusMap> {
    let g = raw_generators(p, tol)?;
    Ok(word_matrix(&s.word(), &g))
}

/// Transport along the straight closed geodesic `w → w + (p + qτ)` of the flat
/// torus, based at `w = (1 + τ + δ)/2` so the loop stays half a strip away from
/// the puncture. Conjugate to [`curve_holonomy`].
pub fn straight_loop_holonomy(p: &ProjectivePoint, s: &Slope, tol: f64) -> Result<MobiusMap> {
    let m = &p.modulus;
    let v = s.vector(m);
    let w = s.transversal().vector(m) * 0.5;
    transport(&[w, w + v], p, tol)
}

/// Fixed data of one ray: the calibrated origin, `γ`, its transversal `δ`,
/// and the lift signs making both traces positive at the origin.
#[derive(Debug, Clone)]
pub struct RayContext {
    pub origin: ProjectivePoint,
    pub slope: Slope,
    pub transversal: Slope,
    gamma_word: Vec<Letter>,
    delta_word: Vec<Letter>,
    sign_gamma: f64,
    sign_delta: f64,
    pub tol: f64,
}

/// Holonomy data at one value of `c`.
#[derive(Debug, Clone, Copy)]
pub struct RaySample {
    pub c: Complex64,
    pub gamma: MobiusMap,
    pub delta: MobiusMap,
}

impl RaySample {
    pub fn triple(&self) -> TraceTriple {
        TraceTriple::new(
            self.gamma.trace(),
            self.delta.trace(),
            (self.gamma * self.delta).trace(),
        )
    }
}

impl RayContext {
    pub fn new(origin: ProjectivePoint, slope: Slope, tol: f64) -> Result<Self> {
        let transversal = slope.transversal();
        let mut ctx = Self {
            origin: origin.at(Complex64::new(0.0, 0.0)),
            slope,
            transversal,
            gamma_word: slope.word(),
            delta_word: transversal.word(),
            sign_gamma: 1.0,
            sign_delta: 1.0,
            tol,
        };
        let s0 = ctx.sample(Complex64::new(0.0, 0.0))?;
        ctx.sign_gamma = if s0.gamma.trace().re < 0.0 { -1.0 } else { 1.0 };
        ctx.sign_delta = if s0.delta.trace().re < 0.0 { -1.0 } else { 1.0 };
        Ok(ctx)
    }

    /// Calibrates the origin of `m` and builds the context.
    pub fn calibrated(m: &Modulus, slope: Slope) -> Result<Self> {
        let cal = calibrate_origin(m, LOCI_TOL)?;
        Self::new(
            ProjectivePoint::new(*m, Complex64::new(0.0, 0.0), cal.b0),
            slope,
            LOCI_TOL,
        )
    }

    pub fn sample(&self, c: Complex64) -> Result<RaySample> {
        let g = raw_generators(&self.origin.at(c), self.tol)?;
        let gm = word_matrix(&self.gamma_word, &g);
        let dm = word_matrix(&self.delta_word, &g);
        let (gamma, delta) = (gm * self.sign_gamma, dm * self.sign_delta);
        let comm = gamma.commutator(&delta).trace();
        let scale = 1.0 + gamma.max_abs() * delta.max_abs();
        let ctol = crate::holonomy::COMMUTATOR_TOL * scale * scale;
        if !((comm + 2.0).norm() <= ctol) {
            return Err(Error::CommutatorDrift {
                trace: comm,
                tol: ctol,
            });
        }
        Ok(RaySample { c, gamma, delta })
    }

    fn f(&self, c: Complex64) -> Result<(Complex64, RaySample)> {
        let s = self.sample(c)?;
        Ok((s.gamma.trace(), s))
    }

    fn derivative(&self, c: Complex64, fc: Complex64) -> Result<Complex64> {
        let h = 1e-6 * (1.0 + c.norm());
        let (fp, _) = self.f(c + h)?;
        let d = (fp - fc) / h;
        if !(d.norm() > 0.0) || !d.re.is_finite() {
            return Err(Error::DegenerateDerivative(c));
        }
        Ok(d)
    }
}

/// Bending angle `arg(D₁₁/D₂₂)` where `D` is `ρ(δ)` in a frame diagonalizing
/// `ρ(γ) = diag(λ, 1/λ)`, `|λ| > 1`. Defined mod 2π.
pub fn bending_angle(gamma: &MobiusMap, delta: &MobiusMap) -> Result<f64> {
    let x = gamma.trace();
    if x.norm() <= 2.0 || (x * x - 4.0).norm() < 1e-12 {
        return Err(Error::DegenerateAxis(x));
    }
    let root = (x * x - 4.0).sqrt();
    let mut lam = (x + root) * 0.5;
    if lam.norm() < 1.0 {
        lam = (x - root) * 0.5;
    }
    let lam_inv = lam.inv();
    let eig = |l: Complex64| -> (Complex64, Complex64) {
        let v1 = (gamma.b, l - gamma.a);
        let v2 = (l - gamma.d, gamma.c);
        if v1.0.norm_sqr() + v1.1.norm_sqr() >= v2.0.norm_sqr() + v2.1.norm_sqr() {
            v1
        } else {
            v2
        }
    };
    let (p1, p2) = (eig(lam), eig(lam_inv));
    let p = MobiusMap::new(p1.0, p2.0, p1.1, p2.1);
    let d = p.inverse() * *delta * p;
    let u = d.a / d.d;
    if !(u.norm() > 0.0) || !u.re.is_finite() {
        return Err(Error::DegenerateAxis(x));
    }
    Ok(u.arg())
}

fn wrap(a: f64) -> f64 {
    let r = (a + PI).rem_euclid(2.0 * PI) - PI;
    if r <= -PI {
        r + 2.0 * PI
    } else {
        r
    }
}

/// Grafting weight at the end of a ray prefix: the bending angle continued
/// along the prefix from the origin, oriented so that it increases, and
/// evaluated for the pair `g = (ρ(γ), ρ(δ))` at the prefix end.
///
/// The angle is a conjugation invariant of the pair, so the stored trace
/// triples suffice to follow its branch.
pub fn grafting_weight(prefix: &[RayPoint], g: &GeneratorPair) -> Result<f64> {
    let first = prefix
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty ray prefix".into()))?;
    if first.c.norm() != 0.0 || first.t != 0.0 {
        return Err(Error::InvalidArgument(
            "ray prefix must start at the origin".into(),
        ));
    }
    let angle_of = |t: &TraceTriple| {
        let r = realize_triple(t);
        bending_angle(&r.a, &r.b)
    };
    let angle0 = angle_of(&first.triple)?;
    let mut raw = 0.0;
    let mut orientation = 0.0f64;
    for p in &prefix[1..] {
        raw += wrap(angle_of(&p.triple)? - angle0 - raw);
        if orientation == 0.0 && raw != 0.0 {
            orientation = raw.signum();
        }
    }
    raw += wrap(bending_angle(&g.a, &g.b)? - angle0 - raw);
    if orientation == 0.0 {
        orientation = if raw < 0.0 { -1.0 } else { 1.0 };
    }
    Ok(orientation * raw)
}

/// Lift of `angle` (weight direction `orientation`) nearest the weight `near`.
fn unwrap_near(angle: f64, near: f64, orientation: f64) -> f64 {
    near + wrap(orientation * angle - near)
}

/// A traced pleating ray.
#[derive(Debug, Clone)]
pub struct Ray {
    pub ctx: RayContext,
    pub points: Vec<RayPoint>,
    /// `±1`: the sign turning the bending angle into an increasing weight.
    pub orientation: f64,
    /// Bending angle at the origin.
    pub angle0: f64,
    /// Holonomy at each point (same indexing as `points`).
    pub samples: Vec<RaySample>,
}

impl Ray {
    /// Weight of an arbitrary sample near the ray end.
    pub fn weight_near(&self, s: &RaySample, near: f64) -> Result<f64> {
        let a = bending_angle(&s.gamma, &s.delta)? - self.angle0;
        Ok(unwrap_near(a, near, self.orientation))
    }
}

/// Continuation controls.
#[derive(Debug, Clone, Copy)]
pub struct RayOptions {
    /// Target spacing in the grafting weight.
    pub step: f64,
    pub t_max: f64,
    /// Smallest step in `u` before giving up.
    pub min_du: f64,
    pub max_points: usize,
}

impl RayOptions {
    pub fn new(t_max: f64, step: f64) -> Self {
        Self {
            step,
            t_max,
            min_du: 1e-9,
            max_points: 100_000,
        }
    }
}

/// Traces the pleating ray of `s` for the modulus `m`.
pub fn pleating_ray(m: &Modulus, s: Slope, t_max: f64, step: f64) -> Result<Vec<RayPoint>> {
    let ctx = RayContext::calibrated(m, s)?;
    Ok(trace_ray(ctx, &RayOptions::new(t_max, step))?.points)
}

/// Predictor–corrector continuation of `tr ρ_c(γ) = 2 cosh u` from `c = 0`.
pub fn trace_ray(ctx: RayContext, opt: &RayOptions) -> Result<Ray> {
    if !(opt.t_max > 0.0) || !(opt.step > 0.0) {
        return Err(Error::InvalidArgument("t_max and step must be positive".into()));
    }
    let zero = Complex64::new(0.0, 0.0);
    let (f0, s0) = ctx.f(zero)?;
    if !(f0.re > 2.0) {
        return Err(Error::DegenerateAxis(f0));
    }
    let angle0 = bending_angle(&s0.gamma, &s0.delta)?;
    let mut u = (f0.re / 2.0).acosh();
    let res0 = f0.im.abs() / f0.norm().max(1.0);
    let mut points = vec![RayPoint {
        t: 0.0,
        c: zero,
        triple: s0.triple(),
        residual: res0,
    }];
    let mut samples = vec![s0];
    let mut orientation = 0.0f64;
    let mut c = zero;
    let mut fprime = ctx.derivative(c, f0)?;
    let mut t = 0.0f64;
    let mut du = 0.02f64;
    let mut dtdu: Option<f64> = None;

    while t < opt.t_max {
        if points.len() >= opt.max_points {
            return Err(Error::ContinuationStall {
                t,
                c,
                reason: format!("point budget {} exhausted", opt.max_points),
            });
        }
        if let Some(r) = dtdu {
            let want = opt.step / r;
            du = want.min(2.0 * du);
        }
        loop {
            if du < opt.min_du {
                return Err(Error::ContinuationStall {
                    t,
                    c,
                    reason: format!("step in u fell below {:.1e}", opt.min_du),
                });
            }
            let target = 2.0 * (u + du).cosh();
            let dc_du = Complex64::new(2.0 * (u).sinh(), 0.0) / fprime;
            let pred = c + dc_du * du;
            let pred_step = (pred - c).norm();
            match correct(&ctx, pred, target, fprime) {
                Ok((cn, fn_, sn)) => {
                    let jump = (cn - pred).norm();
                    if jump > 10.0 * pred_step {
                        if du / 2.0 < opt.min_du {
                            return Err(Error::BranchLoss {
                                t,
                                jump,
                                step: pred_step,
                            });
                        }
                        du /= 2.0;
                        continue;
                    }
                    let raw = bending_angle(&sn.gamma, &sn.delta)? - angle0;
                    let inc = wrap(raw - orientation * t);
                    if inc.abs() > PI / 4.0 {
                        du /= 2.0;
                        continue;
                    }
                    if orientation == 0.0 {
                        if inc == 0.0 {
                            du *= 2.0;
                            continue;
                        }
                        orientation = inc.signum();
                    }
                    let dt = orientation * inc;
                    if !(dt > 0.0) {
                        return Err(Error::ContinuationStall {
                            t,
                            c: cn,
                            reason: format!("weight stopped increasing (increment {dt:.3e})"),
                        });
                    }
                    let d_new = ctx.derivative(cn, fn_)?;
                    t += dt;
                    dtdu = Some(dt / du);
                    u += du;
                    c = cn;
                    fprime = d_new;
                    points.push(RayPoint {
                        t,
                        c,
                        triple: sn.triple(),
                        residual: fn_.im.abs() / fn_.norm().max(1.0),
                    });
                    samples.push(sn);
                    break;
                }
                Err(_) => {
                    du /= 2.0;
                }
            }
        }
    }
    Ok(Ray {
        ctx,
        points,
        orientation,
        angle0,
        samples,
    })
}

/// Chord-Newton solve of `f(c) = target` from `c`, refreshing the derivative
/// when progress stalls.
fn correct(
    ctx: &RayContext,
    start: Complex64,
    target: f64,
    fprime: Complex64,
) -> Result<(Complex64, Complex64, RaySample)> {
    let mut c = start;
    let mut d = fprime;
    let mut last = f64::INFINITY;
    for it in 0..25 {
        let (fc, s) = ctx.f(c)?;
        let err = (fc - target).norm() / target.abs().max(1.0);
        if err < CORRECTOR_TOL {
            return Ok((c, fc, s));
        }
        if it > 0 && err > 0.5 * last {
            d = ctx.derivative(c, fc)?;
        }
        if it > 3 && err > last {
            break;
        }
        last = err;
        c -= (fc - target) / d;
        if !c.re.is_finite() || !c.im.is_finite() {
            break;
        }
    }
    Err(Error::NewtonDivergence {
        reason: "ray corrector did not converge".into(),
        residual: last,
    })
}

/// Fuchsian center of multiplicity `n` on the pleating ray of `s`.
pub fn fuchsian_center(m: &Modulus, s: Slope, n: u32) -> Result<FuchsianCenter> {
    let ctx = RayContext::calibrated(m, s)?;
    let ray = trace_ray(ctx, &RayOptions::new(2.0 * PI * n as f64 + 0.3, 0.25))?;
    center_on_ray(&ray, n)
}

/// All centers `1..=nmax` from one traced ray.
pub fn fuchsian_centers(m: &Modulus, s: Slope, nmax: u32) -> Result<(Ray, Vec<FuchsianCenter>)> {
    let ctx = RayContext::calibrated(m, s)?;
    let ray = trace_ray(ctx, &RayOptions::new(2.0 * PI * nmax as f64 + 0.3, 0.25))?;
    let centers = (1..=nmax)
        .map(|n| center_on_ray(&ray, n))
        .collect::<Result<Vec<_>>>()?;
    Ok((ray, centers))
}

/// Locates the center of weight `2πn` on an already traced ray.
pub fn center_on_ray(ray: &Ray, n: u32) -> Result<FuchsianCenter> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "center multiplicity must be at least 1".into(),
        ));
    }
    let goal = 2.0 * PI * n as f64;
    let pts = &ray.points;
    let k = pts
        .iter()
        .position(|p| p.t >= goal)
        .ok_or_else(|| Error::ContinuationStall {
            t: pts.last().map(|p| p.t).unwrap_or(0.0),
            c: pts.last().map(|p| p.c).unwrap_or_default(),
            reason: format!("ray ended before weight {goal:.6}"),
        })?;
    let (a, b) = (&pts[k - 1], &pts[k]);
    let lam = (goal - a.t) / (b.t - a.t);
    let guess = a.c + (b.c - a.c) * lam;

    let ctx = &ray.ctx;
    // Gauss–Newton on the imaginary parts of all three traces. At moduli with
    // a reflection symmetry preserving γ, Im tr ρ(γ) and Im tr ρ(δ) vanish on
    // a whole line through the center and only tr ρ(γδ) pins it down.
    let eval = |c: Complex64| -> Result<([Complex64; 3], RaySample)> {
        let s = ctx.sample(c)?;
        Ok((s.triple().as_array(), s))
    };
    let mut c = guess;
    let mut best: Option<(f64, Complex64, RaySample)> = None;
    for _ in 0..40 {
        let (f, s) = eval(c)?;
        let scale = f.map(|v| v.norm().max(1.0));
        let size = (0..3).map(|k| f[k].im.abs() / scale[k]).fold(0.0, f64::max);
        if best.as_ref().is_none_or(|b| size < b.0) {
            best = Some((size, c, s));
        }
        if size < 1e-13 {
            break;
        }
        let h = 1e-7 * (1.0 + c.norm());
        let (fp, _) = eval(c + h)?;
        // ∂ Im f / ∂ Re c = Im f', ∂ Im f / ∂ Im c = Re f'
        let mut jtj = [[0.0f64; 2]; 2];
        let mut jtr = [0.0f64; 2];
        for k in 0..3 {
            let d = (fp[k] - f[k]) / h / scale[k];
            let row = [d.im, d.re];
            let r = f[k].im / scale[k];
            for i in 0..2 {
                for j in 0..2 {
                    jtj[i][j] += row[i] * row[j];
                }
                jtr[i] += row[i] * r;
            }
        }
        let det = jtj[0][0] * jtj[1][1] - jtj[0][1] * jtj[1][0];
        if det == 0.0 || !det.is_finite() {
            return Err(Error::NewtonDivergence {
                reason: "singular Jacobian at center".into(),
                residual: size,
            });
        }
        let dx = (jtj[1][1] * jtr[0] - jtj[0][1] * jtr[1]) / det;
        let dy = (jtj[0][0] * jtr[1] - jtj[1][0] * jtr[0]) / det;
        let next = c - Complex64::new(dx, dy);
        if (next - guess).norm() > 10.0 * (b.c - a.c).norm().max(1e-3) {
            return Err(Error::NewtonDivergence {
                reason: format!("center iterate left the bracketing step near weight {goal:.4}"),
                residual: size,
            });
        }
        let done = (next - c).norm() < 1e-15 * (1.0 + c.norm());
        c = next;
        if done {
            break;
        }
    }
    let (size, c, s) = best.expect("at least one iterate");
    if size > 1e-9 {
        return Err(Error::NewtonDivergence {
            reason: "center traces not real".into(),
            residual: size,
        });
    }
    let triple = s.triple();
    let imag_residual = triple
        .as_array()
        .iter()
        .map(|t| t.im.abs() / t.norm().max(1.0))
        .fold(0.0, f64::max);
    let markov_residual = triple.relative_markov_residual();
    let weight = ray.weight_near(&s, goal)?;
    let class = bq_classify(&triple, DEFAULT_DEPTH, DEFAULT_EPS).tag;
    Ok(FuchsianCenter {
        slope: ctx.slope,
        n,
        c,
        triple,
        weight,
        imag_residual,
        markov_residual,
        class,
    })
}

/// One row of the Fig. 4 series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSample {
    pub t: f64,
    /// `‖2φ_T + φ_F‖₁ = |4c + a(t)| Im τ`.
    pub norm: f64,
    /// `norm / ‖2φ_T‖₁`, zero at the origin.
    pub ratio: f64,
}

/// `‖2φ_T(tγ) + φ_F(tγ)‖₁` along a traced ray.
pub fn normdiff_on_ray(ray: &Ray) -> Result<Vec<NormSample>> {
    let m = &ray.ctx.origin.modulus;
    let s = &ray.ctx.slope;
    let h = m.tau().im;
    ray.points
        .iter()
        .map(|p| {
            let a = foliation_map(s, p.t, m)?.a;
            let norm = (p.c * 4.0 + a).norm() * h;
            let thurston = 4.0 * p.c.norm() * h;
            let ratio = if thurston > 0.0 { norm / thurston } else { 0.0 };
            Ok(NormSample { t: p.t, norm, ratio })
        })
        .collect()
}

pub fn normdiff_series(m: &Modulus, s: Slope, t_max: f64) -> Result<Vec<NormSample>> {
    let ctx = RayContext::calibrated(m, s)?;
    let ray = trace_ray(ctx, &RayOptions::new(t_max, 0.1))?;
    normdiff_on_ray(&ray)
}

/// `max_t norm(t) / (1 + t √E(γ))` over a series.
pub fn growth_constant(series: &[NormSample], s: &Slope, m: &Modulus) -> f64 {
    let e = extremal_length(s, m).sqrt();
    series
        .iter()
        .map(|r| r.norm / (1.0 + r.t * e))
        .fold(0.0, f64::max)
}
