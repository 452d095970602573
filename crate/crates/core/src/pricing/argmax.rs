//! Argmax of independent Gaussian perturbations.
//!
//! `P[i = argmax_j (mu_j + s_j Z_j)]` is the 1-D integral
//! `∫ φ_i(x) Π_{j≠i} Φ_j(x) dx`, evaluated for all `i` at once with adaptive
//! Gauss–Kronrod (7/15) quadrature over `[min(mu - 8s), max(mu + 8s)]`.

use crate::error::{domain, Result};

/// Absolute tolerance of the quadrature (summed over all arms).
pub const QUADRATURE_TOLERANCE: f64 = 1e-9;

const MAX_DEPTH: u32 = 48;

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[inline]
fn norm_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * std::f64::consts::FRAC_1_SQRT_2)
}

#[inline]
fn norm_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

// Kronrod 15-point nodes/weights on [-1, 1] (nodes at odd positions are the
// embedded Gauss 7-point nodes).
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
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Integrand<'a> {
    means: &'a [f64],
    stds: &'a [f64],
    random: &'a [usize],
    cdf: Vec<f64>,
    pdf: Vec<f64>,
    suffix: Vec<f64>,
}

impl<'a> Integrand<'a> {
    fn new(means: &'a [f64], stds: &'a [f64], random: &'a [usize]) -> Self {
        let r = random.len();
        Self {
            means,
            stds,
            random,
            cdf: vec![0.0; r],
            pdf: vec![0.0; r],
            suffix: vec![1.0; r + 1],
        }
    }

    /// Adds `weight * f_i(x)` to `acc[i]` for every random arm.
    fn accumulate(&mut self, x: f64, weight: f64, acc: &mut [f64]) {
        let r = self.random.len();
        for (k, &i) in self.random.iter().enumerate() {
            let z = (x - self.means[i]) / self.stds[i];
            self.cdf[k] = norm_cdf(z);
            self.pdf[k] = norm_pdf(z) / self.stds[i];
        }
        self.suffix[r] = 1.0;
        for k in (0..r).rev() {
            self.suffix[k] = self.suffix[k + 1] * self.cdf[k];
        }
        let mut prefix = 1.0;
        for k in 0..r {
            acc[k] += weight * self.pdf[k] * prefix * self.suffix[k + 1];
            prefix *= self.cdf[k];
        }
    }

    fn kronrod(&mut self, a: f64, b: f64, kron: &mut [f64], gauss: &mut [f64]) {
        kron.iter_mut().for_each(|v| *v = 0.0);
        gauss.iter_mut().for_each(|v| *v = 0.0);
        let center = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let r = self.random.len();
        let mut point = vec![0.0; r];
        for (k, (&xk, &wk)) in XGK.iter().zip(&WGK).enumerate() {
            let xs: &[f64] = if xk == 0.0 { &[0.0] } else { &[-1.0, 1.0] };
            for &sgn in xs {
                point.iter_mut().for_each(|v| *v = 0.0);
                self.accumulate(center + sgn * half * xk, 1.0, &mut point);
                for i in 0..r {
                    kron[i] += wk * point[i];
                    if k % 2 == 1 {
                        gauss[i] += WG[k / 2] * point[i];
                    }
                }
            }
        }
        kron.iter_mut().for_each(|v| *v *= half);
        gauss.iter_mut().for_each(|v| *v *= half);
    }
}

/// Probability that each coordinate of `means + stds * Z` is the maximum,
/// `Z` standard normal i.i.d. Zero-std coordinates are point masses; ties
/// among them go to the lowest index.
pub fn argmax_probabilities(means: &[f64], stds: &[f64]) -> Result<Vec<f64>> {
    if means.is_empty() || means.len() != stds.len() {
        return Err(domain("means and stds must be non-empty and of equal length"));
    }
    if stds.iter().any(|&s| !(s >= 0.0 && s.is_finite())) || means.iter().any(|m| !m.is_finite()) {
        return Err(domain("means must be finite and stds finite and non-negative"));
    }
    let k = means.len();
    let random: Vec<usize> = (0..k).filter(|&i| stds[i] > 0.0).collect();
    let fixed: Vec<usize> = (0..k).filter(|&i| stds[i] == 0.0).collect();
    let mut out = vec![0.0; k];

    // Largest deterministic value (lowest index wins ties).
    let floor = fixed
        .iter()
        .copied()
        .fold(None::<usize>, |best, i| match best {
            Some(b) if means[b] >= means[i] => Some(b),
            _ => Some(i),
        });

    if random.is_empty() {
        out[floor.expect("some coordinate is deterministic")] = 1.0;
        return Ok(out);
    }

    let mut lo = random
        .iter()
        .map(|&i| means[i] - 8.0 * stds[i])
        .fold(f64::INFINITY, f64::min);
    let hi = random
        .iter()
        .map(|&i| means[i] + 8.0 * stds[i])
        .fold(f64::NEG_INFINITY, f64::max);
    if let Some(f) = floor {
        lo = lo.max(means[f]);
        let p_fixed: f64 = random
            .iter()
            .map(|&i| norm_cdf((means[f] - means[i]) / stds[i]))
            .product();
        out[f] = p_fixed;
    }

    if hi > lo {
        let r = random.len();
        let mut integrand = Integrand::new(means, stds, &random);
        let mut total = vec![0.0; r];
        let mut kron = vec![0.0; r];
        let mut gauss = vec![0.0; r];
        let width = hi - lo;
        let mut stack = vec![(lo, hi, 0u32)];
        while let Some((a, b, depth)) = stack.pop() {
            integrand.kronrod(a, b, &mut kron, &mut gauss);
            let err: f64 = kron.iter().zip(&gauss).map(|(x, y)| (x - y).abs()).sum();
            let budget = QUADRATURE_TOLERANCE * (b - a) / width;
            if err <= budget || depth >= MAX_DEPTH {
                for (t, v) in total.iter_mut().zip(&kron) {
                    *t += v;
                }
            } else {
                let mid = 0.5 * (a + b);
                stack.push((mid, b, depth + 1));
                stack.push((a, mid, depth + 1));
            }
        }
        for (k, &i) in random.iter().enumerate() {
            out[i] = total[k].max(0.0);
        }
    }

    let sum: f64 = out.iter().sum();
    if sum > 0.0 {
        out.iter_mut().for_each(|v| *v /= sum);
    }
    Ok(out)
}

/// Exploit-arm law `q_i = P[i = argmax(G + u)]`, `u ~ N(0, s^2 I)`.
pub fn arm_probabilities(cumulative: &[f64], noise_sd: f64) -> Result<Vec<f64>> {
    if !(noise_sd > 0.0) {
        return Err(domain(format!("noise standard deviation must be positive, got {noise_sd}")));
    }
    argmax_probabilities(cumulative, &vec![noise_sd; cumulative.len()])
}
