//! Adaptive Gauss–Kronrod (7/15) quadrature on finite intervals.
//!
//! The vector form integrates several functions sharing one set of nodes,
//! which is how the limit-law tables are built: one evaluation of a
//! conditional pmf at a node yields every coefficient at once.

use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Convergence settings for [`integrate`] and [`integrate_vec`].
#[derive(Debug, Clone, Copy)]
pub struct QuadSettings {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadSettings {
    fn default() -> Self {
        Self {
            abs_tol: 1e-13,
            rel_tol: 1e-9,
            max_intervals: 2000,
        }
    }
}

impl QuadSettings {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }
}

/// Value and error estimate of a quadrature.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

struct Segment {
    a: f64,
    b: f64,
    values: Vec<f64>,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn kronrod_vec<F>(f: &mut F, a: f64, b: f64, dim: usize) -> (Vec<f64>, f64)
where
    F: FnMut(f64, &mut [f64]),
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut kron = vec![0.0; dim];
    let mut gauss = vec![0.0; dim];
    let mut buf = vec![0.0; dim];
    let mut buf2 = vec![0.0; dim];

    f(center, &mut buf);
    for d in 0..dim {
        kron[d] = buf[d] * WGK[7];
        gauss[d] = buf[d] * WG[3];
    }
    for j in 0..7 {
        let dx = half * XGK[j];
        f(center - dx, &mut buf);
        f(center + dx, &mut buf2);
        for d in 0..dim {
            let s = buf[d] + buf2[d];
            kron[d] += WGK[j] * s;
            if j % 2 == 1 {
                gauss[d] += WG[j / 2] * s;
            }
        }
    }
    let mut err: f64 = 0.0;
    for d in 0..dim {
        kron[d] *= half;
        gauss[d] *= half;
        err = err.max((kron[d] - gauss[d]).abs());
    }
    (kron, err)
}

/// Integrates a vector-valued function over `[a, b]`.
///
/// `f(x, out)` writes `dim` values. Convergence is judged on the largest
/// componentwise error against the largest componentwise magnitude.
pub fn integrate_vec<F>(
    mut f: F,
    a: f64,
    b: f64,
    dim: usize,
    settings: QuadSettings,
) -> Result<(Vec<f64>, f64)>
where
    F: FnMut(f64, &mut [f64]),
{
    let (values, err) = kronrod_vec(&mut f, a, b, dim);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, values, err });
    let mut count = 1;
    loop {
        let mut total = vec![0.0; dim];
        let mut total_err = 0.0;
        for s in heap.iter() {
            for d in 0..dim {
                total[d] += s.values[d];
            }
            total_err += s.err;
        }
        let scale = total.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if total_err <= settings.abs_tol.max(settings.rel_tol * scale) {
            return Ok((total, total_err));
        }
        if count >= settings.max_intervals {
            return Err(Error::Quadrature(format!(
                "error estimate {total_err:.3e} after {count} intervals on [{a}, {b}]"
            )));
        }
        let worst = heap.pop().expect("heap never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::Quadrature(format!(
                "interval collapsed near {mid} with error {:.3e}",
                worst.err
            )));
        }
        let (lv, le) = kronrod_vec(&mut f, worst.a, mid, dim);
        let (rv, re) = kronrod_vec(&mut f, mid, worst.b, dim);
        heap.push(Segment {
            a: worst.a,
            b: mid,
            values: lv,
            err: le,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            values: rv,
            err: re,
        });
        count += 1;
    }
}

/// Integrates a scalar function over `[a, b]`.
pub fn integrate<F>(mut f: F, a: f64, b: f64, settings: QuadSettings) -> Result<QuadResult>
where
    F: FnMut(f64) -> f64,
{
    let mut intervals = 0;
    let (v, err) = integrate_vec(
        |x, out| {
            intervals += 1;
            out[0] = f(x);
        },
        a,
        b,
        1,
        settings,
    )?;
    Ok(QuadResult {
        value: v[0],
        error: err,
        intervals: intervals / 15,
    })
}
