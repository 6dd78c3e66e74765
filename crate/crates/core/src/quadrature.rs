//! One-dimensional quadrature of vector-valued integrands.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::{Error, Result};

const KRONROD_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const KRONROD_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
/// Gauss weights for the odd-indexed Kronrod nodes (the 7-point rule).
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Sums vectors in a fixed binary-tree order, independent of thread count.
pub fn pairwise_sum(parts: &[Vec<Complex64>], dim: usize) -> Vec<Complex64> {
    match parts.len() {
        0 => vec![Complex64::new(0.0, 0.0); dim],
        1 => parts[0].clone(),
        n => {
            let (l, r) = parts.split_at(n / 2);
            let mut a = pairwise_sum(l, dim);
            let b = pairwise_sum(r, dim);
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            a
        }
    }
}

#[derive(Clone, Debug)]
struct Panel {
    a: f64,
    b: f64,
    kronrod: Vec<Complex64>,
    /// |Kronrod - Gauss| per component.
    error: Vec<f64>,
}

fn panel<F>(f: &F, a: f64, b: f64, dim: usize) -> Result<Panel>
where
    F: Fn(f64) -> Result<Vec<Complex64>>,
{
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let zero = Complex64::new(0.0, 0.0);
    let mut k = vec![zero; dim];
    let mut g = vec![zero; dim];
    for (j, (&x, &w)) in KRONROD_NODES.iter().zip(&KRONROD_WEIGHTS).enumerate() {
        let points: &[f64] = if x == 0.0 { &[0.0] } else { &[-x, x] };
        for &s in points {
            let v = f(mid + half * s)?;
            if v.len() != dim {
                return Err(Error::Numerical("integrand changed dimension".into()));
            }
            for c in 0..dim {
                k[c] += v[c] * w;
                if j % 2 == 1 {
                    g[c] += v[c] * GAUSS_WEIGHTS[j / 2];
                }
            }
        }
    }
    Ok(Panel {
        a,
        b,
        kronrod: k.iter().map(|v| v * half).collect(),
        error: k.iter().zip(&g).map(|(k, g)| ((k - g) * half).norm()).collect(),
    })
}

/// Stopping rule for [`integrate_adaptive`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Adaptive {
    pub initial_panels: usize,
    /// Required relative accuracy of every component.
    pub rtol: f64,
    /// Absolute floor for components that integrate to (nearly) zero.
    pub atol: f64,
    pub max_panels: usize,
}

/// Adaptive 7/15-point Gauss-Kronrod integration of a complex vector-valued
/// `f` over `[a, b]`.
///
/// The interval starts as `initial_panels` equal panels. Every round bisects
/// the panels whose worst tolerance-scaled error exceeds the mean, until each
/// component's summed error estimate is below `max(rtol |I_c|, atol)`. Panel
/// evaluations run in parallel, the reduction order is fixed.
pub fn integrate_adaptive<F>(
    f: F,
    a: f64,
    b: f64,
    dim: usize,
    rule: &Adaptive,
) -> Result<Vec<Complex64>>
where
    F: Fn(f64) -> Result<Vec<Complex64>> + Sync,
{
    let Adaptive {
        initial_panels,
        rtol,
        atol,
        max_panels,
    } = *rule;
    if !(b > a) || initial_panels == 0 {
        return Err(Error::Domain(format!(
            "bad integration interval [{a}, {b}] with {initial_panels} panels"
        )));
    }
    let width = (b - a) / initial_panels as f64;
    let bounds: Vec<(f64, f64)> = (0..initial_panels)
        .map(|i| {
            let lo = a + i as f64 * width;
            let hi = if i + 1 == initial_panels { b } else { lo + width };
            (lo, hi)
        })
        .collect();
    let mut panels: Vec<Panel> = bounds
        .par_iter()
        .map(|&(lo, hi)| panel(&f, lo, hi, dim))
        .collect::<Result<_>>()?;
    loop {
        let parts: Vec<Vec<Complex64>> = panels.iter().map(|p| p.kronrod.clone()).collect();
        let total = pairwise_sum(&parts, dim);
        let tol: Vec<f64> = total.iter().map(|v| (rtol * v.norm()).max(atol)).collect();
        let badness: Vec<f64> = panels
            .iter()
            .map(|p| {
                p.error
                    .iter()
                    .zip(&tol)
                    .map(|(e, t)| if *t > 0.0 { e / t } else if *e > 0.0 { f64::INFINITY } else { 0.0 })
                    .fold(0.0, f64::max)
            })
            .collect();
        let converged = (0..dim).all(|c| panels.iter().map(|p| p.error[c]).sum::<f64>() <= tol[c]);
        if converged {
            return Ok(total);
        }
        if panels.len() >= max_panels {
            let worst = badness.iter().sum::<f64>();
            return Err(Error::Numerical(format!(
                "quadrature did not converge: error/tolerance {worst:.3e} after {} panels",
                panels.len()
            )));
        }
        let mean = badness.iter().sum::<f64>() / panels.len() as f64;
        let refined: Vec<Vec<Panel>> = panels
            .par_iter()
            .zip(badness.par_iter())
            .map(|(old, &bad)| {
                if bad >= mean {
                    let m = 0.5 * (old.a + old.b);
                    Ok(vec![panel(&f, old.a, m, dim)?, panel(&f, m, old.b, dim)?])
                } else {
                    Ok(vec![old.clone()])
                }
            })
            .collect::<Result<_>>()?;
        panels = refined.into_iter().flatten().collect();
    }
}

/// Gauss-Hermite nodes and weights for the weight exp(-x^2), via the
/// eigenvalues of the Jacobi matrix.
pub fn gauss_hermite(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::invalid("nodes", "must be positive"));
    }
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        let off = (i as f64 / 2.0).sqrt();
        jacobi[(i, i - 1)] = off;
        jacobi[(i - 1, i)] = off;
    }
    let eig = SymmetricEigen::new(jacobi);
    let mu0 = std::f64::consts::PI.sqrt();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    Ok(pairs.into_iter().unzip())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_moments() {
        let s = 2.0f64;
        let norm = 1.0 / (s * (2.0 * std::f64::consts::PI).sqrt());
        let r = integrate_adaptive(
            |x| {
                let w = norm * (-0.5 * (x / s).powi(2)).exp();
                Ok(vec![w.into(), (w * x * x).into(), Complex64::from_polar(w, x)])
            },
            -16.0,
            16.0,
            3,
            &Adaptive { initial_panels: 8, rtol: 1e-12, atol: 0.0, max_panels: 10_000 },
        )
        .unwrap();
        assert!((r[0] - 1.0).norm() < 1e-12);
        assert!((r[1] - 4.0).norm() < 1e-11);
        assert!((r[2] - (-2.0f64).exp()).norm() < 1e-12);
    }

    #[test]
    fn sharp_lorentzian_is_resolved() {
        let g = 1e-3;
        let r = integrate_adaptive(
            |x| Ok(vec![(g / std::f64::consts::PI / ((x - 0.123).powi(2) + g * g)).into()]),
            -10.0,
            10.0,
            1,
            &Adaptive { initial_panels: 4, rtol: 1e-10, atol: 0.0, max_panels: 100_000 },
        )
        .unwrap();
        let exact = ((10.0 - 0.123) / g).atan() / std::f64::consts::PI
            + ((10.0 + 0.123) / g).atan() / std::f64::consts::PI;
        assert!((r[0] - exact).norm() < 1e-9, "{} vs {exact}", r[0]);
    }

    #[test]
    fn hermite_rule_integrates_polynomials() {
        let (x, w) = gauss_hermite(20).unwrap();
        let m0: f64 = w.iter().sum();
        let m4: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(4)).sum();
        let sp = std::f64::consts::PI.sqrt();
        assert!((m0 - sp).abs() < 1e-13);
        assert!((m4 - 0.75 * sp).abs() < 1e-12);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn pairwise_sum_matches_naive() {
        let parts: Vec<Vec<Complex64>> = (0..37).map(|i| vec![Complex64::new(i as f64, 1.0)]).collect();
        assert_eq!(pairwise_sum(&parts, 1), vec![Complex64::new(666.0, 37.0)]);
    }
}
