//! Adaptive Gauss-Kronrod (7/15) integration with user breakpoints, plus a
//! fixed Gauss-Legendre rule for short smooth panels.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
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

#[allow(clippy::excessive_precision)]
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

// Gauss weights for the odd Kronrod nodes XGK[1], XGK[3], XGK[5], XGK[7].
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone)]
pub struct QuadratureOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-13,
            rel_tol: 1e-13,
            max_intervals: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadratureEstimate {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    // Max-heap on error; ties by left endpoint so refinement order is fixed.
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kron += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Panel {
        a,
        b,
        value: kron * half,
        error: ((kron - gauss) * half).abs(),
    }
}

/// Integrates `f` over `[a, b]`, splitting first at every breakpoint that
/// falls strictly inside the interval.
///
/// Refinement bisects the panel with the largest error estimate until the
/// summed error is below `max(abs_tol, rel_tol * |I|)`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    opts: &QuadratureOptions,
) -> Result<QuadratureEstimate> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::domain(format!("integration limits must be finite: [{a}, {b}]")));
    }
    if a == b {
        return Ok(QuadratureEstimate {
            value: 0.0,
            error: 0.0,
            intervals: 0,
        });
    }
    if a > b {
        return integrate(f, b, a, breakpoints, opts).map(|e| QuadratureEstimate { value: -e.value, ..e });
    }

    let mut cuts: Vec<f64> = breakpoints.iter().copied().filter(|&c| c > a && c < b).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(a);
    edges.extend(cuts);
    edges.push(b);

    let mut heap: BinaryHeap<Panel> = edges.windows(2).map(|w| kronrod(&f, w[0], w[1])).collect();

    loop {
        let (value, error) = totals(&heap);
        let target = opts.abs_tol.max(opts.rel_tol * value.abs());
        if error <= target {
            return Ok(QuadratureEstimate {
                value,
                error,
                intervals: heap.len(),
            });
        }
        if heap.len() >= opts.max_intervals {
            return Err(Error::Quadrature {
                lower: a,
                upper: b,
                estimate: value,
                error,
                intervals: heap.len(),
            });
        }
        let worst = heap.pop().expect("heap is non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel at floating-point resolution; keep it and give up.
            heap.push(worst);
            let (value, error) = totals(&heap);
            return Err(Error::Quadrature {
                lower: a,
                upper: b,
                estimate: value,
                error,
                intervals: heap.len(),
            });
        }
        heap.push(kronrod(&f, worst.a, mid));
        heap.push(kronrod(&f, mid, worst.b));
    }
}

fn totals(heap: &BinaryHeap<Panel>) -> (f64, f64) {
    // Sum in left-to-right order so the total does not depend on heap layout.
    let mut panels: Vec<&Panel> = heap.iter().collect();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    panels.iter().fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error))
}

const GL_ORDER: usize = 16;

fn gl_rule() -> &'static ([f64; GL_ORDER], [f64; GL_ORDER]) {
    static RULE: OnceLock<([f64; GL_ORDER], [f64; GL_ORDER])> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_ORDER;
        let mut nodes = [0.0; GL_ORDER];
        let mut weights = [0.0; GL_ORDER];
        for i in 0..n {
            // Newton on P_n from the Chebyshev-like initial guess.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let k = k as f64;
                    let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let step = p1 / dp;
                x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        (nodes, weights)
    })
}

/// Fixed 16-point Gauss-Legendre rule over `[a, b]`.
pub fn gauss_legendre<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let (nodes, weights) = gl_rule();
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    nodes
        .iter()
        .zip(weights.iter())
        .map(|(&x, &w)| w * f(center + half * x))
        .sum::<f64>()
        * half
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let est = integrate(|x| 3.0 * x * x, 0.0, 2.0, &[], &QuadratureOptions::default()).unwrap();
        assert!((est.value - 8.0).abs() < 1e-14);
    }

    #[test]
    fn discontinuous_with_breakpoints() {
        let step = |x: f64| if x.abs() < 1.0 { 0.0 } else { x * x };
        let est = integrate(step, -3.0, 3.0, &[-1.0, 1.0], &QuadratureOptions::default()).unwrap();
        assert!((est.value - 2.0 * 26.0 / 3.0).abs() < 1e-13);
        assert_eq!(est.intervals, 3);
    }

    #[test]
    fn reversed_limits_negate() {
        let opts = QuadratureOptions::default();
        let fwd = integrate(f64::exp, 0.0, 1.0, &[], &opts).unwrap().value;
        let rev = integrate(f64::exp, 1.0, 0.0, &[], &opts).unwrap().value;
        assert_eq!(fwd, -rev);
        assert!((fwd - (std::f64::consts::E - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn non_convergence_reports_diagnostics() {
        let opts = QuadratureOptions {
            abs_tol: 1e-15,
            rel_tol: 0.0,
            max_intervals: 8,
        };
        let err = integrate(|x: f64| x.abs().sqrt().recip(), -1.0, 1.0, &[], &opts).unwrap_err();
        assert!(matches!(err, Error::Quadrature { intervals: 8, .. }), "{err:?}");
    }

    #[test]
    fn gauss_legendre_weights_sum_to_two() {
        let (nodes, weights) = gl_rule();
        assert!((weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        assert!(nodes.iter().all(|x| x.abs() < 1.0));
        // Exact through degree 31.
        let v = gauss_legendre(|x| x.powi(30), -1.0, 1.0);
        assert!((v - 2.0 / 31.0).abs() < 1e-14);
    }
}
