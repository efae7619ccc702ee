//! Weierstrass ℘ for the lattice `Z + τZ`.
//!
//! Evaluation goes through Jacobi theta series in the nome `q = exp(iπτ')`,
//! where `τ'` is the SL₂(Z)-reduced modulus. Since `Im τ' ≥ √3/2`, `|q| ≤ 0.066`
//! and a handful of terms reach machine precision.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Number of cached nome powers. Six terms already underflow the tail for
/// reduced moduli; the extra slots absorb tight tolerances.
const THETA_TERMS: usize = 10;

/// Relative guard radius around lattice points, in units of the systole.
pub const GUARD_FRACTION: f64 = 1e-4;

/// Torus modulus together with the τ-dependent constants needed by ℘.
///
/// Immutable after construction; cheap to copy between workers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Modulus {
    tau: Complex64,
    /// SL₂(Z)-reduced modulus `(aτ+b)/(cτ+d)`.
    reduced: Complex64,
    /// `cτ + d`; the lattice equals `scale · (Z + τ'Z)`.
    scale: Complex64,
    /// `q^{n²}` for `n = 0..THETA_TERMS`.
    q_square: [Complex64; THETA_TERMS],
    /// `q^{(n+1/2)²}` for `n = 0..THETA_TERMS`.
    q_half: [Complex64; THETA_TERMS],
    /// `π² θ₂(0)² θ₃(0)²`.
    lead: Complex64,
    /// `π² (θ₂(0)⁴ + θ₃(0)⁴) / 3`.
    shift: Complex64,
}

impl Modulus {
    pub fn new(tau: Complex64) -> Result<Self> {
        if !(tau.im > 0.0) || !tau.re.is_finite() || !tau.im.is_finite() {
            return Err(Error::InvalidModulus(tau));
        }
        let (reduced, [_, _, c, d]) = reduce_modulus(tau);
        let scale = tau * c as f64 + d as f64;

        let mut q_square = [Complex64::new(0.0, 0.0); THETA_TERMS];
        let mut q_half = [Complex64::new(0.0, 0.0); THETA_TERMS];
        for n in 0..THETA_TERMS {
            let nf = n as f64;
            q_square[n] = (I * PI * reduced * (nf * nf)).exp();
            q_half[n] = (I * PI * reduced * ((nf + 0.5) * (nf + 0.5))).exp();
        }
        let theta2: Complex64 = q_half.iter().sum::<Complex64>() * 2.0;
        let theta3: Complex64 = q_square[1..].iter().sum::<Complex64>() * 2.0 + 1.0;
        let pi2 = PI * PI;
        let lead = (theta2 * theta3).powu(2) * pi2;
        let shift = (theta2.powu(4) + theta3.powu(4)) * (pi2 / 3.0);

        Ok(Self {
            tau,
            reduced,
            scale,
            q_square,
            q_half,
            lead,
            shift,
        })
    }

    pub fn tau(&self) -> Complex64 {
        self.tau
    }

    /// Area of the fundamental cell, `Im τ`.
    pub fn area(&self) -> f64 {
        self.tau.im
    }

    /// Length of the shortest nonzero lattice vector.
    pub fn systole(&self) -> f64 {
        // reduced τ' has |τ'| ≥ 1, so 1 is the shortest vector of Z + τ'Z
        self.scale.norm()
    }

    pub fn guard_radius(&self) -> f64 {
        GUARD_FRACTION * self.systole()
    }

    /// Distance from `z` to the nearest lattice point.
    pub fn lattice_distance(&self, z: Complex64) -> f64 {
        let (w, _) = self.reduce_point(z);
        w.norm()
    }

    /// Reduces `z` modulo the lattice to the representative closest to the
    /// origin, returning `(z', (m, n))` with `z' = z + m + nτ`.
    ///
    /// Candidates are generated from the parallelogram cell of the reduced basis
    /// (lattice coordinates in `(-1/2, 1/2]`) and its eight neighbours; among
    /// equidistant candidates the first in scan order wins, so the result is
    /// reproducible bit-for-bit.
    pub fn reduce_point(&self, z: Complex64) -> (Complex64, (i64, i64)) {
        let w = z / self.scale;
        let (cell, _) = parallelogram_reduce(w, self.reduced);
        let mut best = cell;
        let mut best_norm = cell.norm_sqr();
        for k in [0.0, -1.0, 1.0] {
            for l in [0.0, -1.0, 1.0] {
                let cand = cell + k + self.reduced * l;
                let n2 = cand.norm_sqr();
                if n2 < best_norm * (1.0 - 1e-12) {
                    best = cand;
                    best_norm = n2;
                }
            }
        }
        let delta = best * self.scale - z;
        let n = (delta.im / self.tau.im).round();
        let m = (delta.re - n * self.tau.re).round();
        let reduced = z + m + self.tau * n;
        (reduced, (m as i64, n as i64))
    }

    /// Weierstrass ℘(z; Z + τZ) to relative accuracy `tol`.
    pub fn wp(&self, z: Complex64, tol: f64) -> Result<Complex64> {
        let w = z / self.scale;
        let (cell, _) = parallelogram_reduce(w, self.reduced);
        let mut nearest = cell.norm();
        for k in [-1.0, 0.0, 1.0] {
            for l in [-1.0, 0.0, 1.0] {
                nearest = nearest.min((cell + k + self.reduced * l).norm());
            }
        }
        let distance = nearest * self.scale.norm();
        let guard = self.guard_radius();
        if distance < guard {
            return Err(Error::PoleProximity { z, distance, guard });
        }
        let value = self.wp_reduced(cell, tol.max(f64::EPSILON));
        Ok(value / (self.scale * self.scale))
    }

    /// ℘ on the reduced lattice `Z + τ'Z` at a cell-reduced point.
    fn wp_reduced(&self, w: Complex64, tol: f64) -> Complex64 {
        // θ₁(πw), θ₄(πw) with e = exp(iπw)
        let e = (I * PI * w).exp();
        let e2 = e * e;
        let e_inv = e.inv();
        let e2_inv = e_inv * e_inv;

        let mut th1 = Complex64::new(0.0, 0.0);
        let mut th4 = Complex64::new(1.0, 0.0);
        // odd powers e^{±(2n+1)}, even powers e^{±2n}
        let (mut odd_p, mut odd_m) = (e, e_inv);
        let (mut even_p, mut even_m) = (e2, e2_inv);
        let mut sign = 1.0;
        for n in 0..THETA_TERMS {
            let t1 = self.q_half[n] * (odd_p - odd_m) * sign;
            th1 += t1;
            let mut t4 = Complex64::new(0.0, 0.0);
            if n + 1 < THETA_TERMS {
                t4 = self.q_square[n + 1] * (even_p + even_m) * (-sign);
                th4 += t4;
            }
            if t1.norm() <= tol * 1e-2 * th1.norm() && t4.norm() <= tol * 1e-2 {
                break;
            }
            odd_p *= e2;
            odd_m *= e2_inv;
            even_p *= e2;
            even_m *= e2_inv;
            sign = -sign;
        }
        // th1 accumulated (E^k − E^{-k}) without the 2/(2i) factor: θ₁ = -i·th1
        let th1 = -I * th1;
        let ratio = th4 / th1;
        self.lead * ratio * ratio - self.shift
    }
}

/// Reduces `tau` to the standard fundamental domain of SL₂(Z).
///
/// Returns the reduced modulus and the matrix `[a, b, c, d]` with
/// `τ' = (aτ + b)/(cτ + d)`.
pub fn reduce_modulus(tau: Complex64) -> (Complex64, [i64; 4]) {
    let mut t = tau;
    let (mut a, mut b, mut c, mut d) = (1i64, 0i64, 0i64, 1i64);
    for _ in 0..200 {
        let k = t.re.round();
        if k != 0.0 {
            t -= k;
            let ki = k as i64;
            a -= ki * c;
            b -= ki * d;
        }
        if t.norm_sqr() < 1.0 - 1e-15 {
            t = -t.inv();
            let (na, nb, nc, nd) = (-c, -d, a, b);
            a = na;
            b = nb;
            c = nc;
            d = nd;
        } else {
            break;
        }
    }
    (t, [a, b, c, d])
}

/// Writes `w = u + vτ` and shifts `(u, v)` into `(-1/2, 1/2]`.
fn parallelogram_reduce(w: Complex64, tau: Complex64) -> (Complex64, (i64, i64)) {
    let v = w.im / tau.im;
    let n = (v - 0.5).ceil();
    let w = w - tau * n;
    let m = (w.re - 0.5).ceil();
    (w - m, (-(m as i64), -(n as i64)))
}
