//! Globally adaptive Gauss-Kronrod (7/15) integration on finite intervals.
//!
//! The interval with the largest error estimate is bisected until the summed
//! estimate falls below `max(abs_tol, rel_tol * |I|)`. Nodes never touch the
//! endpoints, so integrable endpoint singularities (such as `|x|^-1/2` at the
//! origin) are handled by repeated bisection towards the singular end.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Result, VgError};

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
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Integral estimate together with its error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_intervals: 4000,
        }
    }
}

impl QuadOptions {
    pub fn absolute(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol: 0.0,
            ..Self::default()
        }
    }
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (i, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    Segment {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Integrates `f` over `[a, b]` (either orientation).
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    opts: QuadOptions,
) -> Result<Integral> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(VgError::Domain(format!(
            "integration bounds must be finite, got [{a}, {b}]"
        )));
    }
    if a == b {
        return Ok(Integral {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    if a > b {
        let r = integrate(f, b, a, opts)?;
        return Ok(Integral {
            value: -r.value,
            ..r
        });
    }

    let mut heap = BinaryHeap::new();
    let first = kronrod15(&mut f, a, b);
    let mut total = first.value;
    let mut error = first.error;
    let mut evaluations = 15;
    heap.push(first);

    loop {
        let tol = opts.abs_tol.max(opts.rel_tol * total.abs());
        if !error.is_finite() || !total.is_finite() {
            return Err(VgError::QuadratureFailure {
                error,
                tolerance: tol,
            });
        }
        if error <= tol {
            break;
        }
        if heap.len() >= opts.max_intervals {
            return Err(VgError::QuadratureFailure {
                error,
                tolerance: tol,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval can no longer be split in double precision.
            heap.push(Segment {
                error: 0.0,
                ..worst
            });
            error -= worst.error;
            continue;
        }
        let left = kronrod15(&mut f, worst.a, mid);
        let right = kronrod15(&mut f, mid, worst.b);
        evaluations += 30;
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }

    // Re-sum to shed the drift accumulated by incremental updates.
    let (value, error) = heap
        .iter()
        .fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
    Ok(Integral {
        value,
        error,
        evaluations,
    })
}

/// Integrates over `[a, b]` after splitting at the interior `breaks`
/// (points outside the interval are ignored). Each piece receives an equal
/// share of the absolute tolerance.
pub fn integrate_with_breaks<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    opts: QuadOptions,
) -> Result<Integral> {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let mut points: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|&p| p > lo && p < hi)
        .collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    let mut edges = Vec::with_capacity(points.len() + 2);
    edges.push(lo);
    edges.extend(points);
    edges.push(hi);

    let pieces = (edges.len() - 1) as f64;
    let piece_opts = QuadOptions {
        abs_tol: opts.abs_tol / pieces,
        ..opts
    };
    let mut out = Integral {
        value: 0.0,
        error: 0.0,
        evaluations: 0,
    };
    for w in edges.windows(2) {
        let r = integrate(&mut f, w[0], w[1], piece_opts)?;
        out.value += r.value;
        out.error += r.error;
        out.evaluations += r.evaluations;
    }
    if a > b {
        out.value = -out.value;
    }
    Ok(out)
}
