//! Quadratic differentials on the flat punctured torus `ℂ/(Z + τZ) − {0}`.
//!
//! `Q(X)` is spanned by `dz²`, so a differential is a single coefficient and
//! every Jenkins–Strebel differential has a closed form.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::elliptic::Modulus;
use crate::error::{Error, Result};

/// Homotopy class of an essential simple closed curve, `p·[1] + q·[τ]`.
///
/// Stored primitive and with the sign fixed so that `p > 0`, or `p = 0, q = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "(i64, i64)", into = "(i64, i64)")]
pub struct Slope {
    p: i64,
    q: i64,
}

/// A letter of a word in the generators `A` (loop `z ↦ z+1`) and `B` (loop `z ↦ z+τ`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Letter {
    A,
    B,
    AInv,
    BInv,
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Slope {
    pub fn new(p: i64, q: i64) -> Result<Self> {
        if p == 0 && q == 0 {
            return Err(Error::InvalidSlope {
                p,
                q,
                reason: "zero class",
            });
        }
        if gcd(p, q) != 1 {
            return Err(Error::InvalidSlope {
                p,
                q,
                reason: "not primitive",
            });
        }
        if p < 0 || (p == 0 && q < 0) {
            Ok(Self { p: -p, q: -q })
        } else {
            Ok(Self { p, q })
        }
    }

    pub fn p(&self) -> i64 {
        self.p
    }

    pub fn q(&self) -> i64 {
        self.q
    }

    /// Translation vector `p + qτ`.
    pub fn vector(&self, m: &Modulus) -> Complex64 {
        m.tau() * self.q as f64 + self.p as f64
    }

    /// Shortest slope of the lattice. Ties go to the smaller `|p| + |q|`,
    /// then the smaller `|q|`, then negative `q`.
    pub fn systole(m: &Modulus) -> Slope {
        let mut best: Option<(f64, Slope)> = None;
        for p in 0..=12i64 {
            for q in -12..=12i64 {
                let Ok(s) = Slope::new(p, q) else { continue };
                if s.p != p || s.q != q {
                    continue;
                }
                let len = s.vector(m).norm();
                let better = match best {
                    None => true,
                    Some((bl, bs)) => {
                        if len < bl * (1.0 - 1e-12) {
                            true
                        } else if len <= bl * (1.0 + 1e-12) {
                            (s.p + s.q.abs(), s.q.abs(), s.q) < (bs.p + bs.q.abs(), bs.q.abs(), bs.q)
                        } else {
                            false
                        }
                    }
                };
                if better {
                    best = Some((len, s));
                }
            }
        }
        best.map(|(_, s)| s).unwrap_or(Slope { p: 1, q: 0 })
    }

    /// The two Farey parents of `(p, |q|)`: primitive `(r, s)`, `(p−r, |q|−s)`
    /// with nonnegative entries, ordered by increasing slope `s/r`.
    fn parents(p: i64, q: i64) -> ((i64, i64), (i64, i64)) {
        // r·q − s·p = −1 with 0 ≤ r ≤ p, 0 ≤ s ≤ q; the parent of smaller slope
        let mut found = (0, 0);
        for r in 0..=p {
            // s = (r q + 1) / p must be an integer
            if p > 0 && (r * q + 1) % p == 0 {
                let s = (r * q + 1) / p;
                if s <= q {
                    found = (r, s);
                    break;
                }
            }
        }
        // found has s·p − r·q = 1, so its slope exceeds q/p: it is the right parent
        let right = found;
        let left = (p - right.0, q - right.1);
        (left, right)
    }

    /// Christoffel word of the class. For Farey neighbours the words form a
    /// free basis, and the word of a mediant is the concatenation of its
    /// parents' words, smaller slope first.
    pub fn word(&self) -> Vec<Letter> {
        let (p, q) = (self.p, self.q);
        let mut w = christoffel(p, q.abs());
        if q < 0 {
            for l in &mut w {
                if *l == Letter::B {
                    *l = Letter::BInv;
                }
            }
        }
        w
    }

    /// Farey neighbour `δ` with `i(γ, δ) = 1` of smallest `|r| + |s|`.
    pub fn transversal(&self) -> Slope {
        let (p, q) = (self.p, self.q);
        if q == 0 {
            return Slope { p: 0, q: 1 };
        }
        if p == 0 {
            return Slope { p: 1, q: 0 };
        }
        let (left, right) = Self::parents(p, q.abs());
        let pick = if left.0 + left.1 <= right.0 + right.1 {
            left
        } else {
            right
        };
        let sign = if q < 0 { -1 } else { 1 };
        Slope::new(pick.0, sign * pick.1).expect("Farey parent is primitive")
    }
}

fn christoffel(p: i64, q: i64) -> Vec<Letter> {
    match (p, q) {
        (1, 0) => vec![Letter::A],
        (0, 1) => vec![Letter::B],
        _ => {
            let (left, right) = Slope::parents(p, q);
            let mut w = christoffel(left.0, left.1);
            w.extend(christoffel(right.0, right.1));
            w
        }
    }
}

impl fmt::Display for Slope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

impl FromStr for Slope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("slope must look like P/Q, got {s:?}"));
        let (a, b) = s.split_once('/').ok_or_else(bad)?;
        let p = a.trim().parse::<i64>().map_err(|_| bad())?;
        let q = b.trim().parse::<i64>().map_err(|_| bad())?;
        Slope::new(p, q)
    }
}

impl TryFrom<(i64, i64)> for Slope {
    type Error = Error;

    fn try_from((p, q): (i64, i64)) -> Result<Self> {
        Slope::new(p, q)
    }
}

impl From<Slope> for (i64, i64) {
    fn from(s: Slope) -> Self {
        (s.p, s.q)
    }
}

/// The differential `a·dz²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusQuadDiff {
    pub a: Complex64,
}

impl TorusQuadDiff {
    pub fn new(a: Complex64) -> Self {
        Self { a }
    }
}

/// `|p + qτ|² / Im τ`.
pub fn extremal_length(s: &Slope, m: &Modulus) -> f64 {
    s.vector(m).norm_sqr() / m.tau().im
}

/// Jenkins–Strebel differential of `t·γ`: `a = t² (p + q τ̄)² / (Im τ)²`.
pub fn foliation_map(s: &Slope, t: f64, m: &Modulus) -> Result<TorusQuadDiff> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "weight must be nonnegative, got {t}"
        )));
    }
    let v = s.vector(m).conj();
    let h = m.tau().im;
    Ok(TorusQuadDiff::new(v * v * (t * t / (h * h))))
}

pub fn l1_norm(d: &TorusQuadDiff, m: &Modulus) -> f64 {
    d.a.norm() * m.tau().im
}

/// `(horizontal, vertical)` directions in `[0, π)`; horizontal vectors satisfy `a v² > 0`.
pub fn foliation_slopes(d: &TorusQuadDiff) -> Result<(f64, f64)> {
    if d.a.norm() == 0.0 {
        return Err(Error::ZeroDifferential);
    }
    let h = (-d.a.arg() / 2.0).rem_euclid(PI);
    let v = (h + PI / 2.0).rem_euclid(PI);
    Ok((h, v))
}

pub fn intersection_number(s1: &Slope, s2: &Slope) -> i64 {
    (s1.p * s2.q - s2.p * s1.q).abs()
}
