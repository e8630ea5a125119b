//! Globally adaptive Gauss-Kronrod (7/15) quadrature on finite intervals.
//!
//! Used as the independent integration route for the Dawson oracle, the
//! lifetime-broadened Gaussian self-energy and the window integrals of the
//! spectra.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Values the integrator can accumulate: real or complex.
pub trait QuadValue:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn magnitude(self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-14,
            rel_tol: 1e-12,
            max_intervals: 2000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: f64,
    pub intervals: usize,
    pub converged: bool,
}

struct Piece<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

impl<T> PartialEq for Piece<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl<T> Eq for Piece<T> {}

impl<T> PartialOrd for Piece<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T> Ord for Piece<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<T: QuadValue, F: Fn(f64) -> T>(f: &F, a: f64, b: f64) -> (T, f64) {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(centre - dx) + f(centre + dx);
        kron = kron + pair * w;
        if j % 2 == 1 {
            gauss = gauss + pair * WG[j / 2];
        }
    }
    let value = kron * half;
    let error = ((kron - gauss) * half).magnitude();
    (value, error)
}

/// Integrate `f` over `[a, b]`, splitting first at the given interior
/// breakpoints (points outside `(a, b)` are ignored).
pub fn integrate<T, F>(f: F, a: f64, b: f64, breakpoints: &[f64], opts: QuadOptions) -> QuadResult<T>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    if a == b {
        return QuadResult {
            value: T::zero(),
            error: 0.0,
            intervals: 0,
            converged: true,
        };
    }
    if b < a {
        let r = integrate(f, b, a, breakpoints, opts);
        return QuadResult {
            value: r.value * -1.0,
            ..r
        };
    }
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&p| p > a && p < b && p.is_finite())
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(a);
    edges.extend(cuts);
    edges.push(b);

    let mut heap = BinaryHeap::new();
    let mut total = T::zero();
    let mut total_err = 0.0;
    for w in edges.windows(2) {
        let (value, error) = kronrod(&f, w[0], w[1]);
        total = total + value;
        total_err += error;
        heap.push(Piece {
            a: w[0],
            b: w[1],
            value,
            error,
        });
    }

    let mut converged = false;
    loop {
        let target = opts.abs_tol.max(opts.rel_tol * total.magnitude());
        if total_err <= target {
            converged = true;
            break;
        }
        if heap.len() >= opts.max_intervals {
            break;
        }
        let worst = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval cannot be split further in floating point
            heap.push(worst);
            break;
        }
        let (v1, e1) = kronrod(&f, worst.a, mid);
        let (v2, e2) = kronrod(&f, mid, worst.b);
        total = total - worst.value + v1 + v2;
        total_err += e1 + e2 - worst.error;
        heap.push(Piece {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Piece {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
    }

    // re-sum to shed drift from the incremental updates
    let mut pieces = heap.into_vec();
    pieces.sort_by(|p, q| p.a.total_cmp(&q.a));
    let value = pieces.iter().fold(T::zero(), |acc, p| acc + p.value);
    let error = pieces.iter().map(|p| p.error).sum();
    QuadResult {
        value,
        error,
        intervals: pieces.len(),
        converged,
    }
}
