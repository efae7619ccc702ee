//! Holonomy of projective structures on the punctured torus.
//!
//! A structure is represented by the Lamé-type equation
//! `y'' + (¼℘(z; τ) + b₀ + c) y = 0` on `ℂ − Λ`. The Schwarzian of a solution
//! quotient is `2q dz²`, so moving the affine coordinate by `c` moves the
//! structure by the quadratic differential `2c dz²`. The coefficient ¼ gives
//! equal indicial exponents `(½, ½)` at the lattice, i.e. a cusp.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::discreteness::{bq_classify, ClassTag, PixelClass, TraceTriple};
use crate::elliptic::Modulus;
use crate::error::{Error, Result};
use crate::mobius::MobiusMap;
use crate::ode::Dop853;

/// Default absolute/relative integration tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Tolerance on `|tr[A,B] + 2|`, relative to the squared size of the generators.
pub const COMMUTATOR_TOL: f64 = 1e-6;

/// A point of the affine space of projective structures on `ℂ/Λ − {0}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectivePoint {
    pub modulus: Modulus,
    /// Affine coordinate relative to the calibrated origin.
    pub c: Complex64,
    /// Accessory constant of the uniformizing structure.
    pub b0: Complex64,
}

impl ProjectivePoint {
    pub fn new(modulus: Modulus, c: Complex64, b0: Complex64) -> Self {
        Self { modulus, c, b0 }
    }

    /// Same modulus and calibration, different offset.
    pub fn at(&self, c: Complex64) -> Self {
        Self { c, ..*self }
    }

    /// Constant part `b₀ + c` of the potential.
    pub fn accessory(&self) -> Complex64 {
        self.b0 + self.c
    }

    /// Canonical base point `(1 + τ)/2`, the centre of the fundamental cell.
    pub fn base_point(&self) -> Complex64 {
        (self.modulus.tau() + 1.0) * 0.5
    }
}

/// Holonomy images of the loops `z ↦ z + 1` and `z ↦ z + τ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorPair {
    pub a: MobiusMap,
    pub b: MobiusMap,
}

impl GeneratorPair {
    pub fn commutator_trace(&self) -> Complex64 {
        self.a.commutator(&self.b).trace()
    }

    pub fn product(&self) -> MobiusMap {
        self.a * self.b
    }

    /// Flips the SL₂ lifts so that `Re tr A ≥ 0` and `Re tr B ≥ 0` (ties
    /// broken on the imaginary part). Returns the flips applied.
    pub fn normalize_signs(&mut self) -> (bool, bool) {
        let flip = |m: &MobiusMap| {
            let t = m.trace();
            t.re < 0.0 || (t.re == 0.0 && t.im < 0.0)
        };
        let fa = flip(&self.a);
        let fb = flip(&self.b);
        if fa {
            self.a = -self.a;
        }
        if fb {
            self.b = -self.b;
        }
        (fa, fb)
    }
}

/// `q(z) = ¼℘(z; τ) + b₀ + c`.
pub fn potential(z: Complex64, p: &ProjectivePoint) -> Result<Complex64> {
    Ok(p.modulus.wp(z, 1e-15)? * 0.25 + p.accessory())
}

/// Fundamental solution of `Y' = [[0, 1], [-q, 0]] Y` along a polyline,
/// starting from the identity at the first vertex.
pub fn transport(path: &[Complex64], p: &ProjectivePoint, tol: f64) -> Result<MobiusMap> {
    transport_with(path, p, &Dop853::new(tol))
}

/// [`transport`] with explicit integrator settings.
pub fn transport_with(path: &[Complex64], p: &ProjectivePoint, integ: &Dop853) -> Result<MobiusMap> {
    let mut total = MobiusMap::IDENTITY;
    for seg in path.windows(2) {
        let (start, end) = (seg[0], seg[1]);
        let delta = end - start;
        if delta.norm() == 0.0 {
            continue;
        }
        let rhs = |s: f64, y: &[Complex64; 4]| -> Result<[Complex64; 4]> {
            let q = potential(start + delta * s, p)? * delta;
            Ok([y[2] * delta, y[3] * delta, -q * y[0], -q * y[1]])
        };
        let id = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
        ];
        let (y, _) = integ.integrate(rhs, id)?;
        total = MobiusMap::new(y[0], y[1], y[2], y[3]) * total;
    }
    Ok(total)
}

/// Generators from straight transports `z₀ → z₀ + 1` and `z₀ → z₀ + τ`,
/// with the SL₂ lifts the equation itself produces.
pub fn raw_generators_at(p: &ProjectivePoint, z0: Complex64, tol: f64) -> Result<GeneratorPair> {
    let tau = p.modulus.tau();
    let a = transport(&[z0, z0 + 1.0], p, tol)?;
    let b = transport(&[z0, z0 + tau], p, tol)?;
    Ok(GeneratorPair { a, b })
}

pub fn raw_generators(p: &ProjectivePoint, tol: f64) -> Result<GeneratorPair> {
    raw_generators_at(p, p.base_point(), tol)
}

/// Holonomy generators based at the cell centre, with lifts normalized by
/// [`GeneratorPair::normalize_signs`].
///
/// The commutator is the loop around the puncture, whose local monodromy is
/// `-[[1, 2πi], [0, 1]]`; its trace is `-2` for every choice of lifts.
pub fn holonomy_generators(p: &ProjectivePoint, tol: f64) -> Result<GeneratorPair> {
    holonomy_generators_with(p, &Dop853::new(tol))
}

/// [`holonomy_generators`] with explicit integrator settings.
pub fn holonomy_generators_with(p: &ProjectivePoint, integ: &Dop853) -> Result<GeneratorPair> {
    let z0 = p.base_point();
    let tau = p.modulus.tau();
    let mut g = GeneratorPair {
        a: transport_with(&[z0, z0 + 1.0], p, integ)?,
        b: transport_with(&[z0, z0 + tau], p, integ)?,
    };
    g.normalize_signs();
    Ok(g)
}

/// `(tr A, tr B, tr AB)`, refusing pairs whose commutator is not parabolic.
pub fn trace_triple(g: &GeneratorPair) -> Result<TraceTriple> {
    let comm = g.commutator_trace();
    let scale = 1.0 + g.a.max_abs() * g.b.max_abs();
    let tol = COMMUTATOR_TOL * scale * scale;
    if !((comm + 2.0).norm() <= tol) {
        return Err(Error::CommutatorDrift { trace: comm, tol });
    }
    Ok(TraceTriple::new(g.a.trace(), g.b.trace(), g.product().trace()))
}

/// Outcome of [`calibrate_origin`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub tau: Complex64,
    pub b0: Complex64,
    pub triple: TraceTriple,
    /// `max(|Im x|, |Im y|, |Im z|)` at `c = 0`.
    pub imag_residual: f64,
    /// `|x² + y² + z² − xyz|`.
    pub markov_residual: f64,
    pub commutator_residual: f64,
    pub class: PixelClass,
    /// Moduli visited by the continuation, seed first.
    pub path_len: usize,
}

/// Newton tolerance on the imaginary parts of the traces.
const CAL_TARGET: f64 = 1e-11;

/// Finds the accessory constant `b₀` of the uniformizing (Fuchsian) structure.
///
/// The square torus `τ = i` is invariant under `z ↦ iz`, which sends `b` to
/// `-b`, so its uniformizing constant is `b₀ = 0`. From there `b` is continued
/// along the vertical segment to `i·Im τ` and then horizontally to `τ`, solving
/// `Im tr A = Im tr B = Im tr AB = 0` by Gauss–Newton at each stop. Following
/// the branch from the symmetric seed keeps the solve on the Fuchsian point
/// rather than on one of the other real-holonomy structures (which have longer
/// traces).
pub fn calibrate_origin(m: &Modulus, tol: f64) -> Result<Calibration> {
    let tau = m.tau();
    let tol = tol.min(1e-11);
    let fail = |reason: String, residual: f64| Error::CalibrationFailure {
        tau,
        reason,
        residual,
    };

    // path: vertical in log Im τ, then horizontal in Re τ
    let target_im = tau.im;
    let mut stops: Vec<Complex64> = Vec::new();
    let log_span = target_im.ln().abs();
    let nv = ((log_span / 0.08).ceil() as usize).max(1);
    for k in 0..=nv {
        let t = (target_im.ln() * k as f64 / nv as f64).exp();
        stops.push(Complex64::new(0.0, t));
    }
    let nh = ((tau.re.abs() / 0.04).ceil() as usize).max(1);
    if tau.re != 0.0 {
        for k in 1..=nh {
            stops.push(Complex64::new(tau.re * k as f64 / nh as f64, target_im));
        }
    }
    if let Some(last) = stops.last_mut() {
        *last = tau;
    }

    let mut b = Complex64::new(0.0, 0.0);
    let mut prev: Option<(Complex64, Complex64)> = None; // (τ, b) at the previous stop
    let mut cur_tau = stops[0];
    b = solve_real_traces(cur_tau, b, tol).map_err(|(r, res)| fail(r, res))?;
    let mut visited = 1usize;

    for &next in &stops[1..] {
        // subdivide adaptively if the solve fails
        let mut pending = vec![next];
        while let Some(goal) = pending.pop() {
            let guess = match prev {
                Some((pt, pb)) if (cur_tau - pt).norm() > 0.0 => {
                    let slope = (b - pb) / (cur_tau - pt);
                    b + slope * (goal - cur_tau)
                }
                _ => b,
            };
            match solve_real_traces(goal, guess, tol) {
                Ok(nb) if (nb - b).norm() < 0.5 * (1.0 + b.norm()) => {
                    prev = Some((cur_tau, b));
                    cur_tau = goal;
                    b = nb;
                    visited += 1;
                }
                other => {
                    if (goal - cur_tau).norm() < 1e-5 {
                        let res = match other {
                            Err((_, r)) => r,
                            Ok(_) => f64::NAN,
                        };
                        return Err(fail(format!("continuation stalled near tau = {goal}"), res));
                    }
                    pending.push(goal);
                    pending.push((goal + cur_tau) * 0.5);
                }
            }
        }
    }

    let p = ProjectivePoint::new(*m, Complex64::new(0.0, 0.0), b);
    let g = holonomy_generators(&p, tol)?;
    let triple = trace_triple(&g)?;
    let imag_residual = triple.max_imag();
    let class = bq_classify(
        &triple,
        crate::discreteness::DEFAULT_DEPTH,
        crate::discreteness::DEFAULT_EPS,
    );
    let cal = Calibration {
        tau,
        b0: b,
        triple,
        imag_residual,
        markov_residual: triple.markov_residual(),
        commutator_residual: (g.commutator_trace() + 2.0).norm(),
        class,
        path_len: visited,
    };
    if class.tag != ClassTag::DiscreteBq {
        return Err(fail(
            format!("calibrated origin classified {:?}", class.tag),
            imag_residual,
        ));
    }
    if imag_residual > 1e-8 {
        return Err(fail("traces not real".into(), imag_residual));
    }
    Ok(cal)
}

/// Gauss–Newton on `(Im x, Im y, Im z)` as functions of `b`, at `c = 0`.
fn solve_real_traces(
    tau: Complex64,
    guess: Complex64,
    tol: f64,
) -> std::result::Result<Complex64, (String, f64)> {
    let m = Modulus::new(tau).map_err(|e| (e.to_string(), f64::NAN))?;
    let zero = Complex64::new(0.0, 0.0);
    let eval = |b: Complex64| -> std::result::Result<[Complex64; 3], (String, f64)> {
        let p = ProjectivePoint::new(m, zero, b);
        let g = raw_generators(&p, tol).map_err(|e| (e.to_string(), f64::NAN))?;
        Ok([g.a.trace(), g.b.trace(), g.product().trace()])
    };
    let mut b = guess;
    let mut last_res = f64::INFINITY;
    for _ in 0..30 {
        let f = eval(b)?;
        let scale = f.iter().map(|t| t.norm()).fold(1.0, f64::max);
        let res = f.iter().map(|t| t.im.abs()).fold(0.0, f64::max);
        if res < CAL_TARGET * scale {
            return Ok(b);
        }
        let h = 1e-6 * (1.0 + b.norm());
        let fp = eval(b + h)?;
        let fm = eval(b - h)?;
        // d Im f / d Re b = Im f', d Im f / d Im b = Re f'
        let mut jtj = [[0.0f64; 2]; 2];
        let mut jtr = [0.0f64; 2];
        for k in 0..3 {
            let d = (fp[k] - fm[k]) / (2.0 * h);
            let row = [d.im, d.re];
            for i in 0..2 {
                for j in 0..2 {
                    jtj[i][j] += row[i] * row[j];
                }
                jtr[i] += row[i] * f[k].im;
            }
        }
        let det = jtj[0][0] * jtj[1][1] - jtj[0][1] * jtj[1][0];
        if det.abs() < 1e-300 {
            return Err(("singular Jacobian".into(), res));
        }
        let dx = (jtj[1][1] * jtr[0] - jtj[0][1] * jtr[1]) / det;
        let dy = (jtj[0][0] * jtr[1] - jtj[1][0] * jtr[0]) / det;
        b -= Complex64::new(dx, dy);
        if !b.re.is_finite() || !b.im.is_finite() {
            return Err(("Newton produced non-finite iterate".into(), res));
        }
        if res > 10.0 * last_res && res > 1e-6 * scale {
            return Err(("Newton diverging".into(), res));
        }
        last_res = res;
    }
    Err(("Newton did not converge".into(), last_res))
}
