//! Discreteness of punctured-torus representations through trace growth on
//! the Farey tree of simple closed curves.
//!
//! Regions of the tree carry the traces of simple curves. Three regions meet
//! at each vertex and their traces `(x, y, z)` satisfy `x² + y² + z² = xyz`
//! when the commutator is parabolic with trace `-2`. Crossing the edge between
//! `X` and `Y` replaces `z` by its Vieta conjugate `xy − z`.
//!
//! Growth certificate. Suppose the edge `(X, Y)` was just crossed, producing
//! `w = xy − z`, with `|x|, |y| ≥ 2 + ε` and `|w| > |z|`. Then
//! `|w| ≥ |x||y|/2 ≥ 2 + ε`, and the next flips `yw − x`, `xw − y` again beat
//! the traces they replace. By induction every region beyond the edge has
//! trace modulus at least `2 + ε`, so the whole subtree is discarded.
//!
//! Rotation certificate. Around a region `R` with small trace `r = λ + 1/λ`,
//! `|λ| > 1`, consecutive neighbours obey `y_{m+1} = r y_m − y_{m−1}`, hence
//! `y_m = αλ^m + βλ^{-m}`. Once `|α||λ|^m − |β||λ|^{-m} ≥ 2 + ε` that bound
//! holds for every later neighbour, and each subtree hanging off the rotation
//! satisfies the growth certificate, so the rest of the rotation is discarded.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::holonomy::GeneratorPair;
use crate::mobius::MobiusMap;

pub const DEFAULT_DEPTH: u32 = 60;
pub const DEFAULT_EPS: f64 = 1e-3;
/// Maximum number of tree vertices expanded for one classification.
pub const NODE_BUDGET: usize = 20_000;
/// Relative Markov residual above which a triple is rejected as garbage.
pub const MARKOV_TOL: f64 = 1e-6;

/// Traces of `A`, `B` and `AB`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceTriple {
    pub x: Complex64,
    pub y: Complex64,
    pub z: Complex64,
}

impl TraceTriple {
    pub fn new(x: Complex64, y: Complex64, z: Complex64) -> Self {
        Self { x, y, z }
    }

    pub fn real(x: f64, y: f64, z: f64) -> Self {
        Self::new(x.into(), y.into(), z.into())
    }

    pub fn as_array(&self) -> [Complex64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(t: [Complex64; 3]) -> Self {
        Self::new(t[0], t[1], t[2])
    }

    /// `|x² + y² + z² − xyz|`.
    pub fn markov_residual(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z - self.x * self.y * self.z).norm()
    }

    /// Markov residual divided by `max(1, |x|² + |y|² + |z|²)`, the size of
    /// the terms that cancel.
    pub fn relative_markov_residual(&self) -> f64 {
        let scale = self.x.norm_sqr() + self.y.norm_sqr() + self.z.norm_sqr();
        self.markov_residual() / scale.max(1.0)
    }

    pub fn max_imag(&self) -> f64 {
        self.x.im.abs().max(self.y.im.abs()).max(self.z.im.abs())
    }

    pub fn distance(&self, o: &Self) -> f64 {
        (self.x - o.x)
            .norm()
            .max((self.y - o.y).norm())
            .max((self.z - o.z).norm())
    }
}

/// Replaces coordinate `which` (0, 1, 2 for x, y, z) by its Vieta conjugate.
pub fn neighbor_flip(t: &TraceTriple, which: usize) -> TraceTriple {
    let mut a = t.as_array();
    let (i, j) = others(which);
    a[which] = a[i] * a[j] - a[which];
    TraceTriple::from_array(a)
}

fn others(k: usize) -> (usize, usize) {
    match k {
        0 => (1, 2),
        1 => (0, 2),
        2 => (0, 1),
        _ => panic!("generator index {k} out of range"),
    }
}

/// A concrete SL₂(ℂ) pair realizing a Markov triple:
/// `A = [[x, -1], [1, 0]]`, `B = [[0, ζ], [-1/ζ, y]]` with `ζ + 1/ζ = z`.
pub fn realize_triple(t: &TraceTriple) -> GeneratorPair {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let disc = (t.z * t.z - 4.0).sqrt();
    let mut zeta = (t.z + disc) * 0.5;
    if zeta.norm() < 1e-300 {
        zeta = (t.z - disc) * 0.5;
    }
    GeneratorPair {
        a: MobiusMap::new(t.x, -one, one, zero),
        b: MobiusMap::new(zero, zeta, -zeta.inv(), t.y),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassTag {
    #[serde(rename = "DISCRETE_BQ")]
    DiscreteBq,
    #[serde(rename = "BQ_VIOLATED")]
    BqViolated,
    #[serde(rename = "UNKNOWN")]
    Unknown,
    #[serde(rename = "ERROR")]
    Error,
}

impl ClassTag {
    pub fn name(&self) -> &'static str {
        match self {
            ClassTag::DiscreteBq => "DISCRETE_BQ",
            ClassTag::BqViolated => "BQ_VIOLATED",
            ClassTag::Unknown => "UNKNOWN",
            ClassTag::Error => "ERROR",
        }
    }
}

/// The trace that triggered a `BQ_VIOLATED` verdict and the tree depth at
/// which it was seen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub trace: Complex64,
    pub depth: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelClass {
    pub tag: ClassTag,
    pub depth_used: u32,
    pub evidence: Option<Evidence>,
    /// The search hit [`NODE_BUDGET`] (or an integration budget upstream).
    pub budget_exhausted: bool,
}

impl PixelClass {
    pub fn new(tag: ClassTag, depth_used: u32) -> Self {
        Self {
            tag,
            depth_used,
            evidence: None,
            budget_exhausted: false,
        }
    }

    pub fn error() -> Self {
        Self::new(ClassTag::Error, 0)
    }

    fn violated(trace: Complex64, depth: u32, depth_used: u32) -> Self {
        Self {
            tag: ClassTag::BqViolated,
            depth_used,
            evidence: Some(Evidence { trace, depth }),
            budget_exhausted: false,
        }
    }
}

struct Node {
    tr: [Complex64; 3],
    /// Consecutive flips each region has survived.
    age: [u32; 3],
    /// Index flipped to reach this vertex.
    last: Option<usize>,
    /// Outgoing flips already certified as escaping.
    skip: [bool; 3],
    depth: u32,
}

/// Classifies a trace triple by depth-limited search of the Farey tree.
///
/// `BQ_VIOLATED` when some visited simple-curve trace has modulus `≤ 2 − ε`,
/// or when a branch reaches `max_depth` still rotating (for at least half the
/// depth) around a region of trace modulus `< 2 + ε`. `DISCRETE_BQ` when every
/// branch ends in a growth or rotation certificate. `UNKNOWN` otherwise.
pub fn bq_classify(t: &TraceTriple, max_depth: u32, eps: f64) -> PixelClass {
    bq_classify_with_budget(t, max_depth, eps, NODE_BUDGET)
}

pub fn bq_classify_with_budget(t: &TraceTriple, max_depth: u32, eps: f64, budget: usize) -> PixelClass {
    let root = t.as_array();
    if root.iter().any(|w| !w.re.is_finite() || !w.im.is_finite())
        || !(t.relative_markov_residual() <= MARKOV_TOL)
    {
        return PixelClass::error();
    }
    let low = 2.0 - eps;
    let high = 2.0 + eps;
    if let Some(w) = root
        .iter()
        .copied()
        .filter(|w| w.norm() <= low)
        .min_by(|a, b| a.norm().total_cmp(&b.norm()))
    {
        return PixelClass::violated(w, 0, 0);
    }
    if max_depth == 0 {
        return PixelClass::new(ClassTag::Unknown, 0);
    }
    let persist = (max_depth / 2).max(1);

    let mut stack = vec![Node {
        tr: root,
        age: [0; 3],
        last: None,
        skip: [false; 3],
        depth: 0,
    }];
    let mut expanded = 0usize;
    let mut depth_used = 0u32;
    let mut unresolved = false;
    let mut suspect: Option<Evidence> = None;

    while let Some(node) = stack.pop() {
        expanded += 1;
        if expanded > budget {
            return PixelClass {
                tag: if suspect.is_some() {
                    ClassTag::BqViolated
                } else {
                    ClassTag::Unknown
                },
                depth_used,
                evidence: suspect,
                budget_exhausted: true,
            };
        }
        let depth = node.depth + 1;
        let mut children: Vec<Node> = Vec::with_capacity(2);
        for k in 0..3 {
            if Some(k) == node.last || node.skip[k] {
                continue;
            }
            let (i, j) = others(k);
            let (ti, tj, tk) = (node.tr[i], node.tr[j], node.tr[k]);
            let w = ti * tj - tk;
            depth_used = depth_used.max(depth);
            if !(w.re.is_finite() && w.im.is_finite()) {
                return PixelClass::error();
            }
            if w.norm() <= low {
                return PixelClass::violated(w, depth, depth_used);
            }
            if ti.norm() >= high && tj.norm() >= high && w.norm() > tk.norm() {
                continue;
            }
            let mut tr = node.tr;
            tr[k] = w;
            let mut age = node.age;
            age[k] = 0;
            age[i] += 1;
            age[j] += 1;

            // rotation around i continues by flipping j, and vice versa
            let mut skip = [false; 3];
            skip[j] = rotation_escapes(ti, tj, w, high);
            skip[i] = rotation_escapes(tj, ti, w, high);

            if depth >= max_depth {
                if !(skip[i] && skip[j]) {
                    unresolved = true;
                    for r in [i, j] {
                        if tr[r].norm() < high && age[r] >= persist && suspect.is_none() {
                            suspect = Some(Evidence { trace: tr[r], depth });
                        }
                    }
                }
                continue;
            }
            if skip[i] && skip[j] {
                // both continuations certified; the flip of k leads back
                continue;
            }
            children.push(Node {
                tr,
                age,
                last: Some(k),
                skip,
                depth,
            });
        }
        // explore the smallest new trace first
        children.sort_by(|a, b| {
            let ka = a.last.map(|k| a.tr[k].norm()).unwrap_or(0.0);
            let kb = b.last.map(|k| b.tr[k].norm()).unwrap_or(0.0);
            kb.total_cmp(&ka)
        });
        stack.extend(children);
    }

    if let Some(ev) = suspect {
        return PixelClass {
            tag: ClassTag::BqViolated,
            depth_used,
            evidence: Some(ev),
            budget_exhausted: false,
        };
    }
    PixelClass::new(
        if unresolved {
            ClassTag::Unknown
        } else {
            ClassTag::DiscreteBq
        },
        depth_used,
    )
}

/// Whether the rotation around a region of trace `r`, whose last two
/// neighbours are `prev` then `cur`, has entered its certified growth phase.
fn rotation_escapes(r: Complex64, prev: Complex64, cur: Complex64, high: f64) -> bool {
    if r.norm() >= high {
        // handled by the growth certificate at each step
        return false;
    }
    // λ + 1/λ = r with |λ| > 1
    let disc = (r * r - 4.0).sqrt();
    let mut lambda = (r + disc) * 0.5;
    if lambda.norm() < 1.0 {
        lambda = (r - disc) * 0.5;
    }
    let mod_l = lambda.norm();
    if mod_l <= 1.0 + 1e-9 {
        return false;
    }
    let inv = lambda.inv();
    let alpha = (cur - prev * inv) / (lambda - inv);
    let beta = prev - alpha;
    alpha.norm() * mod_l - beta.norm() / mod_l >= high
}

/// Pairs `(U, V)` tested against Jørgensen's inequality: the generators, and
/// each generator against its conjugates by short words.
///
/// With `tr[A, B] = -2` the generating pair contributes `|tr[A,B] − 2| = 4`,
/// and `tr[A, BAB⁻¹] − 2 = 4 tr²A`, so only conjugators of length two can
/// fire for representations with a cusp.
pub fn jorgensen_pairs(g: &GeneratorPair) -> Vec<(MobiusMap, MobiusMap)> {
    let (a, b) = (g.a, g.b);
    let conj = |u: MobiusMap, v: MobiusMap| v * u * v.inverse_sl2();
    let mut pairs = vec![(a, b), (b, a)];
    for v in [b * b, b * a, b * a.inverse_sl2()] {
        pairs.push((a, conj(a, v)));
    }
    for v in [a * a, a * b, a * b.inverse_sl2()] {
        pairs.push((b, conj(b, v)));
    }
    pairs
}

/// `true` when `|tr²U − 4| + |tr[U, V] − 2| < 1` for one of the
/// [`jorgensen_pairs`], which rules out discreteness for non-elementary
/// groups. `false` is not a conclusion.
pub fn jorgensen_reject(g: &GeneratorPair) -> bool {
    jorgensen_pairs(g).iter().any(|(u, v)| {
        let tu = u.trace();
        (tu * tu - 4.0).norm() + (u.commutator(v).trace() - 2.0).norm() < 1.0
    })
}
