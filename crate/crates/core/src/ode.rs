//! Adaptive Dormand–Prince 8(5,3) integration for small complex linear systems.
//!
//! The state is four complex numbers (a 2×2 matrix). Step-size control follows
//! Hairer's DOP853: a fifth-order and a third-order error estimate are blended
//! and the step is rescaled by `err^{-1/8}` within `[1/6, 3]`.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type State = [Complex64; 4];

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

const C: [f64; 12] = [
    0.0,
    5.260_015_195_876_773E-2,
    7.890_022_793_815_16E-2,
    1.183_503_419_072_274E-1,
    2.816_496_580_927_726E-1,
    3.333_333_333_333_333E-1,
    0.25,
    3.076_923_076_923_077E-1,
    6.512_820_512_820_513E-1,
    0.6,
    8.571_428_571_428_571E-1,
    1.0,
];

#[rustfmt::skip]
const A: [[f64; 11]; 12] = [
    [0.0; 11],
    [5.260_015_195_876_773E-2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.972_505_698_453_79E-2, 5.917_517_095_361_37E-2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [2.958_758_547_680_685E-2, 0.0, 8.876_275_643_042_054E-2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [2.413_651_341_592_667E-1, 0.0, -8.845_494_793_282_861E-1, 9.248_340_032_617_92E-1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.703_703_703_703_703_5E-2, 0.0, 0.0, 1.708_286_087_294_738_6E-1, 1.254_676_875_668_224_2E-1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.7109375E-2, 0.0, 0.0, 1.702_522_110_195_440_5E-1, 6.021_653_898_045_596E-2, -1.7578125E-2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.709_200_011_850_479E-2, 0.0, 0.0, 1.703_839_257_122_399_8E-1, 1.072_620_304_463_732_8E-1, -1.531_943_774_862_440_2E-2, 8.273_789_163_814_023E-3, 0.0, 0.0, 0.0, 0.0],
    [6.241_109_587_160_757E-1, 0.0, 0.0, -3.360_892_629_446_941_4, -8.682_193_468_417_26E-1, 2.759_209_969_944_671E1, 2.015_406_755_047_789_4E1, -4.348_988_418_106_996E1, 0.0, 0.0, 0.0],
    [4.776_625_364_382_643_4E-1, 0.0, 0.0, -2.488_114_619_971_667_7, -5.902_908_268_368_43E-1, 2.123_005_144_818_119_3E1, 1.527_923_363_288_242_3E1, -3.328_821_096_898_486E1, -2.033_120_170_850_862_7E-2, 0.0, 0.0],
    [-9.371_424_300_859_873E-1, 0.0, 0.0, 5.186_372_428_844_064, 1.091_437_348_996_729_5, -8.149_787_010_746_927, -1.852_006_565_999_696E1, 2.273_948_709_935_050_5E1, 2.493_605_552_679_652_3, -3.046_764_471_898_219_6, 0.0],
    [2.273_310_147_516_538, 0.0, 0.0, -1.053_449_546_673_725E1, -2.000_872_058_224_862_5, -1.795_893_186_311_88E1, 2.794_888_452_941_996E1, -2.858_998_277_135_023_5, -8.872_856_933_530_63, 1.236_056_717_579_430_3E1, 6.433_927_460_157_636E-1],
];

const B: [f64; 12] = [
    5.429_373_411_656_876_5E-2,
    0.0,
    0.0,
    0.0,
    0.0,
    4.450_312_892_752_409,
    1.891_517_899_314_500_3,
    -5.801_203_960_010_585,
    3.111_643_669_578_199E-1,
    -1.521_609_496_625_161E-1,
    2.013_654_008_040_303_4E-1,
    4.471_061_572_777_259E-2,
];

/// Fifth-order error weights.
const ER: [f64; 12] = [
    1.312_004_499_419_488E-2,
    0.0,
    0.0,
    0.0,
    0.0,
    -1.225_156_446_376_204_4,
    -4.957_589_496_572_502E-1,
    1.664_377_182_454_986_4,
    -3.503_288_487_499_736_6E-1,
    3.341_791_187_130_175E-1,
    8.192_320_648_511_571E-2,
    -2.235_530_786_388_629_4E-2,
];

/// Third-order embedded weights on stages 1, 9 and 12.
const BHH: [f64; 3] = [
    2.440_944_881_889_764E-1,
    7.338_466_882_816_118E-1,
    2.205_882_352_941_176_6E-2,
];

/// Integrator settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dop853 {
    pub rtol: f64,
    pub atol: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

impl Dop853 {
    pub fn new(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol,
            h_min: 1e-13,
            max_steps: 200_000,
        }
    }

    /// Integrates `y' = f(s, y)` from `s = 0` to `s = 1`.
    pub fn integrate<F>(&self, mut f: F, y0: State) -> Result<(State, Stats)>
    where
        F: FnMut(f64, &State) -> Result<State>,
    {
        let mut stats = Stats::default();
        let mut s = 0.0f64;
        let mut y = y0;
        let mut k: [State; 12] = [[ZERO; 4]; 12];
        k[0] = f(s, &y)?;
        stats.evaluations += 1;

        let mut h = initial_step(&y, &k[0], self.rtol, self.atol);
        let mut last_rejected = false;
        let expo1 = 1.0 / 8.0;
        let (facc1, facc2, safe): (f64, f64, f64) = (1.0 / 0.333, 1.0 / 6.0, 0.9);

        while s < 1.0 {
            if stats.accepted + stats.rejected >= self.max_steps {
                return Err(Error::StepFailure {
                    tol: self.rtol,
                    reason: format!("step budget {} exhausted at s = {s:.6}", self.max_steps),
                });
            }
            if h < self.h_min {
                return Err(Error::StepFailure {
                    tol: self.rtol,
                    reason: format!("step {h:.3e} below floor at s = {s:.6}"),
                });
            }
            let last = s + h >= 1.0;
            if last {
                h = 1.0 - s;
            }

            for stage in 1..12 {
                let mut ys = y;
                for (j, kj) in k.iter().enumerate().take(stage) {
                    let coef = A[stage][j];
                    if coef != 0.0 {
                        let w = coef * h;
                        for i in 0..4 {
                            ys[i] += kj[i] * w;
                        }
                    }
                }
                k[stage] = f(s + C[stage] * h, &ys)?;
            }
            stats.evaluations += 11;

            let mut y_new = y;
            for (j, kj) in k.iter().enumerate() {
                if B[j] != 0.0 {
                    let w = B[j] * h;
                    for i in 0..4 {
                        y_new[i] += kj[i] * w;
                    }
                }
            }

            let mut err5 = 0.0;
            let mut err3 = 0.0;
            for i in 0..4 {
                let sk = self.atol + self.rtol * y[i].norm().max(y_new[i].norm());
                let mut e5 = ZERO;
                let mut bsum = ZERO;
                for j in 0..12 {
                    e5 += k[j][i] * ER[j];
                    bsum += k[j][i] * B[j];
                }
                let e3 = bsum - k[0][i] * BHH[0] - k[8][i] * BHH[1] - k[11][i] * BHH[2];
                err5 += (e5 / sk).norm_sqr();
                err3 += (e3 / sk).norm_sqr();
            }
            let mut deno = err5 + 0.01 * err3;
            if deno <= 0.0 {
                deno = 1.0;
            }
            let err = h * err5 * (1.0 / (deno * 4.0)).sqrt();
            if !err.is_finite() {
                stats.rejected += 1;
                h *= 0.25;
                last_rejected = true;
                continue;
            }

            let fac11 = err.powf(expo1);
            let fac = facc2.max(facc1.min(fac11 / safe));
            let mut h_new = h / fac;

            if err <= 1.0 {
                stats.accepted += 1;
                s = if last { 1.0 } else { s + h };
                y = y_new;
                if s < 1.0 {
                    k[0] = f(s, &y)?;
                    stats.evaluations += 1;
                }
                if last_rejected {
                    h_new = h_new.min(h);
                    last_rejected = false;
                }
            } else {
                stats.rejected += 1;
                h_new = h / facc1.min(fac11 / safe);
                last_rejected = true;
            }
            h = h_new;
        }
        Ok((y, stats))
    }
}

fn initial_step(y: &State, dy: &State, rtol: f64, atol: f64) -> f64 {
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..4 {
        let sk = atol + rtol * y[i].norm();
        d0 += (y[i] / sk).norm_sqr();
        d1 += (dy[i] / sk).norm_sqr();
    }
    let h = if d0 < 1e-10 || d1 < 1e-10 {
        1e-6
    } else {
        0.01 * (d0 / d1).sqrt()
    };
    h.clamp(1e-6, 0.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth_matches_closed_form() {
        let integ = Dop853::new(1e-12);
        let lambda = Complex64::new(1.5, -2.0);
        let (y, stats) = integ
            .integrate(
                |_, y| Ok([y[0] * lambda, y[1] * lambda, y[2], y[3] * 0.0]),
                [Complex64::new(1.0, 0.0); 4],
            )
            .unwrap();
        assert!((y[0] - lambda.exp()).norm() < 1e-10 * lambda.exp().norm());
        assert!((y[2] - std::f64::consts::E).norm() < 1e-10);
        assert!((y[3] - 1.0).norm() < 1e-14);
        assert!(stats.accepted > 0);
    }

    #[test]
    fn time_dependent_rhs() {
        // y' = 3 s² y, y(1) = e
        let integ = Dop853::new(1e-11);
        let (y, _) = integ
            .integrate(
                |s, y| Ok([y[0] * (3.0 * s * s), ZERO, ZERO, ZERO]),
                [Complex64::new(1.0, 0.0), ZERO, ZERO, ZERO],
            )
            .unwrap();
        assert!((y[0] - std::f64::consts::E).norm() < 1e-10);
    }

    #[test]
    fn step_budget_is_reported() {
        let integ = Dop853 {
            max_steps: 3,
            ..Dop853::new(1e-12)
        };
        let res = integ.integrate(
            |_, y| Ok([y[1] * 400.0, -y[0] * 400.0, ZERO, ZERO]),
            [Complex64::new(1.0, 0.0), ZERO, ZERO, ZERO],
        );
        assert!(matches!(res, Err(Error::StepFailure { .. })));
    }
}
