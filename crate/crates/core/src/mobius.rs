use std::ops::{Mul, Neg};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// A 2×2 complex matrix, used for SL₂(ℂ) lifts of Möbius maps and for
/// fundamental-solution transports of the holonomy ODE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobiusMap {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl MobiusMap {
    pub const IDENTITY: MobiusMap = MobiusMap {
        a: Complex64 { re: 1.0, im: 0.0 },
        b: Complex64 { re: 0.0, im: 0.0 },
        c: Complex64 { re: 0.0, im: 0.0 },
        d: Complex64 { re: 1.0, im: 0.0 },
    };

    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        Self { a, b, c, d }
    }

    pub fn det(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> Complex64 {
        self.a + self.d
    }

    /// Inverse assuming unit determinant (the adjugate).
    pub fn inverse_sl2(&self) -> Self {
        Self::new(self.d, -self.b, -self.c, self.a)
    }

    /// General inverse, dividing the adjugate by the determinant.
    pub fn inverse(&self) -> Self {
        let det = self.det();
        Self::new(self.d / det, -self.b / det, -self.c / det, self.a / det)
    }

    pub fn commutator(&self, other: &Self) -> Self {
        *self * *other * self.inverse_sl2() * other.inverse_sl2()
    }

    pub fn max_abs(&self) -> f64 {
        self.a
            .norm()
            .max(self.b.norm())
            .max(self.c.norm())
            .max(self.d.norm())
    }

    /// Largest entrywise difference.
    pub fn distance(&self, other: &Self) -> f64 {
        (self.a - other.a)
            .norm()
            .max((self.b - other.b).norm())
            .max((self.c - other.c).norm())
            .max((self.d - other.d).norm())
    }

    /// Action on the Riemann sphere; `None` stands for ∞.
    pub fn apply(&self, z: Option<Complex64>) -> Option<Complex64> {
        match z {
            None => {
                if self.c == Complex64::new(0.0, 0.0) {
                    None
                } else {
                    Some(self.a / self.c)
                }
            }
            Some(z) => {
                let den = self.c * z + self.d;
                if den == Complex64::new(0.0, 0.0) {
                    None
                } else {
                    Some((self.a * z + self.b) / den)
                }
            }
        }
    }

    pub fn pow(&self, n: i64) -> Self {
        let base = if n < 0 { self.inverse_sl2() } else { *self };
        let mut result = Self::IDENTITY;
        for _ in 0..n.unsigned_abs() {
            result = result * base;
        }
        result
    }
}

impl Mul for MobiusMap {
    type Output = MobiusMap;

    fn mul(self, o: MobiusMap) -> MobiusMap {
        MobiusMap {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }
}

impl Mul<f64> for MobiusMap {
    type Output = MobiusMap;

    fn mul(self, k: f64) -> MobiusMap {
        MobiusMap::new(self.a * k, self.b * k, self.c * k, self.d * k)
    }
}

impl Neg for MobiusMap {
    type Output = MobiusMap;

    fn neg(self) -> MobiusMap {
        MobiusMap::new(-self.a, -self.b, -self.c, -self.d)
    }
}
