//! Dormand–Prince 8(5,3) integrator for complex state vectors.
//!
//! Step-size control and the initial step guess follow Hairer, Nørsett &
//! Wanner, *Solving Ordinary Differential Equations I*. There is no dense
//! output: steps are shortened to land exactly on requested output times.

use crate::{Error, Result, C64};

/// Right-hand side `dy = f(t, y)`.
pub trait OdeSystem {
    fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]);
}

impl<F: Fn(f64, &[C64], &mut [C64])> OdeSystem for F {
    fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]) {
        self(t, y, dy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Options {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub h_init: Option<f64>,
    pub max_steps: usize,
}

impl Default for Options {
    fn default() -> Self {
        Self { rtol: 1e-9, atol: 1e-12, h_max: f64::INFINITY, h_init: None, max_steps: 1_000_000 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evals: usize,
}

const STAGES: usize = 12;

const C: [f64; STAGES] = [
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

const A: [[f64; STAGES]; STAGES] = {
    let mut a = [[0.0; STAGES]; STAGES];
    a[1][0] = 5.260_015_195_876_773E-2;
    a[2][0] = 1.972_505_698_453_79E-2;
    a[2][1] = 5.917_517_095_361_37E-2;
    a[3][0] = 2.958_758_547_680_685E-2;
    a[3][2] = 8.876_275_643_042_054E-2;
    a[4][0] = 2.413_651_341_592_667E-1;
    a[4][2] = -8.845_494_793_282_861E-1;
    a[4][3] = 9.248_340_032_617_92E-1;
    a[5][0] = 3.703_703_703_703_703_5E-2;
    a[5][3] = 1.708_286_087_294_738_6E-1;
    a[5][4] = 1.254_676_875_668_224_2E-1;
    a[6][0] = 3.7109375E-2;
    a[6][3] = 1.702_522_110_195_440_5E-1;
    a[6][4] = 6.021_653_898_045_596E-2;
    a[6][5] = -1.7578125E-2;
    a[7][0] = 3.709_200_011_850_479E-2;
    a[7][3] = 1.703_839_257_122_399_8E-1;
    a[7][4] = 1.072_620_304_463_732_8E-1;
    a[7][5] = -1.531_943_774_862_440_2E-2;
    a[7][6] = 8.273_789_163_814_023E-3;
    a[8][0] = 6.241_109_587_160_757E-1;
    a[8][3] = -3.360_892_629_446_941_4;
    a[8][4] = -8.682_193_468_417_26E-1;
    a[8][5] = 2.759_209_969_944_671E1;
    a[8][6] = 2.015_406_755_047_789_4E1;
    a[8][7] = -4.348_988_418_106_996E1;
    a[9][0] = 4.776_625_364_382_643_4E-1;
    a[9][3] = -2.488_114_619_971_667_7;
    a[9][4] = -5.902_908_268_368_43E-1;
    a[9][5] = 2.123_005_144_818_119_3E1;
    a[9][6] = 1.527_923_363_288_242_3E1;
    a[9][7] = -3.328_821_096_898_486E1;
    a[9][8] = -2.033_120_170_850_862_7E-2;
    a[10][0] = -9.371_424_300_859_873E-1;
    a[10][3] = 5.186_372_428_844_064;
    a[10][4] = 1.091_437_348_996_729_5;
    a[10][5] = -8.149_787_010_746_927;
    a[10][6] = -1.852_006_565_999_696E1;
    a[10][7] = 2.273_948_709_935_050_5E1;
    a[10][8] = 2.493_605_552_679_652_3;
    a[10][9] = -3.046_764_471_898_219_6;
    a[11][0] = 2.273_310_147_516_538;
    a[11][3] = -1.053_449_546_673_725E1;
    a[11][4] = -2.000_872_058_224_862_5;
    a[11][5] = -1.795_893_186_311_88E1;
    a[11][6] = 2.794_888_452_941_996E1;
    a[11][7] = -2.858_998_277_135_023_5;
    a[11][8] = -8.872_856_933_530_63;
    a[11][9] = 1.236_056_717_579_430_3E1;
    a[11][10] = 6.433_927_460_157_636E-1;
    a
};

const B: [f64; STAGES] = [
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

const BHH: [(usize, f64); 3] =
    [(0, 2.440_944_881_889_764E-1), (8, 7.338_466_882_816_118E-1), (11, 2.205_882_352_941_176_6E-2)];

const ER: [f64; STAGES] = [
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

const SAFE: f64 = 0.9;
const FAC_MIN: f64 = 1.0 / 3.0; // 1/facc1 in Hairer's notation
const FAC_MAX: f64 = 6.0;

struct Work {
    k: Vec<Vec<C64>>,
    tmp: Vec<C64>,
    y_new: Vec<C64>,
}

fn scale(y0: C64, y1: C64, o: &Options) -> f64 {
    o.atol + o.rtol * y0.norm().max(y1.norm())
}

fn initial_step<S: OdeSystem>(sys: &S, t: f64, y: &[C64], f0: &[C64], dir: f64, o: &Options, w: &mut Work) -> f64 {
    let n = y.len().max(1) as f64;
    let (mut dnf, mut dny) = (0.0, 0.0);
    for (yi, fi) in y.iter().zip(f0) {
        let sk = o.atol + o.rtol * yi.norm();
        dnf += fi.norm_sqr() / (sk * sk);
        dny += yi.norm_sqr() / (sk * sk);
    }
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { (dny / dnf).sqrt() * 0.01 };
    h = h.min(o.h_max);
    for i in 0..y.len() {
        w.tmp[i] = y[i] + f0[i] * (h * dir);
    }
    sys.rhs(t + h * dir, &w.tmp, &mut w.y_new);
    let mut der2 = 0.0;
    for i in 0..y.len() {
        let sk = o.atol + o.rtol * y[i].norm();
        der2 += (w.y_new[i] - f0[i]).norm_sqr() / (sk * sk);
    }
    let der2 = (der2 / n).sqrt() / h;
    let der12 = der2.max((dnf / n).sqrt());
    let h1 = if der12 <= 1e-15 { (h * 1e-3).max(1e-6) } else { (0.01 / der12).powf(1.0 / 8.0) };
    (100.0 * h).min(h1).min(o.h_max)
}

/// Integrate from `(t0, y0)` through the increasing (or decreasing) `outputs`,
/// calling `on_output(t, y)` at each. Output times equal to `t0` are reported
/// without stepping.
pub fn integrate<S, F>(sys: &S, t0: f64, y0: &[C64], outputs: &[f64], opts: &Options, mut on_output: F) -> Result<Stats>
where
    S: OdeSystem,
    F: FnMut(f64, &[C64]),
{
    let n = y0.len();
    let mut stats = Stats::default();
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut w =
        Work { k: vec![vec![C64::default(); n]; STAGES], tmp: vec![C64::default(); n], y_new: vec![C64::default(); n] };
    let Some(&t_last) = outputs.last() else { return Ok(stats) };
    let dir = if t_last >= t0 { 1.0 } else { -1.0 };

    sys.rhs(t, &y, &mut w.k[0]);
    stats.evals += 1;
    let mut h = match opts.h_init {
        Some(h) => h.abs(),
        None => {
            let f0 = w.k[0].clone();
            stats.evals += 1;
            initial_step(sys, t, &y, &f0, dir, opts, &mut w)
        }
    };
    let n_f = n.max(1) as f64;
    let mut last_rejected = false;

    for &t_out in outputs {
        if (t_out - t) * dir < 0.0 {
            return Err(Error::InvalidInput("output times must be monotone".into()));
        }
        while (t_out - t) * dir > 0.0 {
            if stats.accepted + stats.rejected >= opts.max_steps {
                return Err(Error::MaxSteps(opts.max_steps));
            }
            let remaining = (t_out - t).abs();
            let tiny = 1e-14 * t.abs().max(1.0);
            if remaining <= tiny {
                t = t_out;
                break;
            }
            let landing = h >= remaining;
            let hs = if landing { remaining } else { h };
            if hs <= tiny {
                return Err(Error::StepUnderflow { t, h: hs });
            }
            let hd = hs * dir;

            for s in 1..STAGES {
                w.tmp.copy_from_slice(&y);
                for j in 0..s {
                    let a = A[s][j];
                    if a != 0.0 {
                        let c = hd * a;
                        for (x, kj) in w.tmp.iter_mut().zip(&w.k[j]) {
                            *x += kj * c;
                        }
                    }
                }
                let (_, rest) = w.k.split_at_mut(s);
                sys.rhs(t + C[s] * hd, &w.tmp, &mut rest[0]);
            }
            stats.evals += STAGES - 1;

            let (mut err5, mut err3) = (0.0, 0.0);
            for i in 0..n {
                let mut inc = C64::default();
                let mut e5 = C64::default();
                for s in 0..STAGES {
                    if B[s] != 0.0 {
                        inc += w.k[s][i] * B[s];
                    }
                    if ER[s] != 0.0 {
                        e5 += w.k[s][i] * ER[s];
                    }
                }
                let mut e3 = inc;
                for (s, b) in BHH {
                    e3 -= w.k[s][i] * b;
                }
                let yn = y[i] + inc * hd;
                w.y_new[i] = yn;
                let sk = scale(y[i], yn, opts);
                err5 += e5.norm_sqr() / (sk * sk);
                err3 += e3.norm_sqr() / (sk * sk);
            }
            let mut deno = err5 + 0.01 * err3;
            if deno <= 0.0 {
                deno = 1.0;
            }
            let err = hs * err5 * (1.0 / (n_f * deno)).sqrt();
            let fac11 = err.powf(1.0 / 8.0);
            let fac = (fac11 / SAFE).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);

            if err <= 1.0 {
                stats.accepted += 1;
                t = if landing { t_out } else { t + hd };
                std::mem::swap(&mut y, &mut w.y_new);
                // first-same-as-last
                sys.rhs(t, &y, &mut w.k[0]);
                stats.evals += 1;
                let mut h_new = (hs / fac).min(opts.h_max);
                if last_rejected {
                    h_new = h_new.min(hs);
                }
                last_rejected = false;
                // a step shortened to hit an output time keeps the previous proposal
                h = if landing && hs < h { h.max(h_new) } else { h_new };
            } else {
                stats.rejected += 1;
                last_rejected = true;
                let f = if err.is_finite() { (fac11 / SAFE).min(1.0 / FAC_MIN) } else { 1.0 / FAC_MIN };
                h = hs / f;
            }
        }
        on_output(t_out, &y);
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::I;

    #[test]
    fn rotation_is_accurate() {
        let f = |_t: f64, y: &[C64], dy: &mut [C64]| {
            dy[0] = -I * 3.0 * y[0];
        };
        let ts: Vec<f64> = (0..=20).map(|i| i as f64 * 0.5).collect();
        let mut out = vec![];
        integrate(&f, 0.0, &[C64::new(1.0, 0.0)], &ts, &Options::default(), |t, y| out.push((t, y[0]))).unwrap();
        for (t, y) in out {
            assert!((y - (-I * 3.0 * t).exp()).norm() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn decay_and_rabi() {
        let f = |_t: f64, y: &[C64], dy: &mut [C64]| {
            dy[0] = -0.7 * y[0] - I * 0.2 * y[1];
            dy[1] = -I * 0.2 * y[0];
        };
        let mut last = [C64::default(); 2];
        let opts = Options { rtol: 1e-11, atol: 1e-14, ..Options::default() };
        integrate(&f, 0.0, &[C64::new(1.0, 0.0), C64::default()], &[5.0], &opts, |_, y| last.copy_from_slice(y))
            .unwrap();
        // eigen-solution of the 2x2 system
        let m = nalgebra::Matrix2::new(C64::new(-0.7, 0.0), -I * 0.2, -I * 0.2, C64::default()) * C64::new(5.0, 0.0);
        let e = m.exp() * nalgebra::Vector2::new(C64::new(1.0, 0.0), C64::default());
        assert!((last[0] - e[0]).norm() < 1e-9);
        assert!((last[1] - e[1]).norm() < 1e-9);
    }

    #[test]
    fn max_steps_reported() {
        let f = |_t: f64, y: &[C64], dy: &mut [C64]| dy[0] = -I * 100.0 * y[0];
        let opts = Options { max_steps: 5, ..Options::default() };
        let r = integrate(&f, 0.0, &[C64::new(1.0, 0.0)], &[100.0], &opts, |_, _| {});
        assert_eq!(r, Err(Error::MaxSteps(5)));
    }
}
