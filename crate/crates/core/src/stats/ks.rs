use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Outcome of a one-sample KS test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub d_statistic: f64,
    pub p_value: f64,
    pub sample_count: usize,
}

/// Sample sizes up to this bound use the exact distribution of `D_m`.
const EXACT_LIMIT: usize = 140;

/// Two-sided KS distance between the sample and `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::domain("KS statistic of an empty sample"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let d = sorted.iter().enumerate().fold(0.0f64, |acc, (i, &x)| {
        let f = cdf(x);
        let below = f - i as f64 / n;
        let above = (i + 1) as f64 / n - f;
        acc.max(below).max(above)
    });
    Ok(d.clamp(0.0, 1.0))
}

/// `Pr(D_m >= d)` under the null hypothesis.
///
/// Exact for `m <= 140` (Marsaglia-Tsang-Wang matrix evaluation of the
/// Durbin recursion), otherwise the Kolmogorov limit law at
/// `d * (sqrt(m) + 0.12 + 0.11 / sqrt(m))`. `m == 0` carries no evidence and
/// returns 1.
pub fn ks_pvalue(d: f64, m: usize) -> f64 {
    if m == 0 || d.is_nan() || d <= 0.5 / m as f64 {
        // D_m >= 1/(2m) holds for every sample
        return 1.0;
    }
    if d >= 1.0 {
        return 0.0;
    }
    if m <= EXACT_LIMIT {
        (1.0 - kolmogorov_cdf_exact(m, d)).clamp(0.0, 1.0)
    } else {
        let root = (m as f64).sqrt();
        kolmogorov_sf(d * (root + 0.12 + 0.11 / root))
    }
}

/// KS test of `samples` against U(0,1).
pub fn ks_test_uniform(samples: &[f64]) -> Result<KsResult> {
    let d = ks_statistic(samples, super::uniform_cdf)?;
    Ok(KsResult {
        d_statistic: d,
        p_value: ks_pvalue(d, samples.len()),
        sample_count: samples.len(),
    })
}

/// Survival function of the Kolmogorov distribution, `Pr(K > z)`.
pub fn kolmogorov_sf(z: f64) -> f64 {
    use std::f64::consts::PI;
    if z <= 0.0 {
        return 1.0;
    }
    if z < 1.18 {
        // Jacobi theta form converges fast for small z
        let w = (2.0 * PI).sqrt() / z;
        let v = PI * PI / (8.0 * z * z);
        let cdf: f64 = (1..=7)
            .map(|j| {
                let k = (2 * j - 1) as f64;
                (-k * k * v).exp()
            })
            .sum::<f64>()
            * w;
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let mut sum = 0.0;
        for j in 1..=100 {
            let jf = j as f64;
            let term = (-2.0 * jf * jf * z * z).exp();
            sum += if j % 2 == 1 { term } else { -term };
            if term < 1e-17 {
                break;
            }
        }
        (2.0 * sum).clamp(0.0, 1.0)
    }
}

/// `Pr(D_n < d)`.
fn kolmogorov_cdf_exact(n: usize, d: f64) -> f64 {
    let nd = n as f64 * d;
    let k = nd as usize + 1;
    let m = 2 * k - 1;
    let h = k as f64 - nd;

    let mut hm = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            if i + 1 >= j {
                hm[i * m + j] = 1.0;
            }
        }
    }
    for i in 0..m {
        hm[i * m] -= h.powi(i as i32 + 1);
        hm[(m - 1) * m + i] -= h.powi((m - i) as i32);
    }
    if 2.0 * h - 1.0 > 0.0 {
        hm[(m - 1) * m] += (2.0 * h - 1.0).powi(m as i32);
    }
    for i in 0..m {
        for j in 0..m {
            if i + 1 > j {
                for g in 1..=(i + 1 - j) {
                    hm[i * m + j] /= g as f64;
                }
            }
        }
    }

    let (q, mut exponent) = matrix_power(&hm, 0, m, n);
    let mut s = q[(k - 1) * m + k - 1];
    for i in 1..=n {
        s = s * i as f64 / n as f64;
        if s < 1e-140 {
            s *= 1e140;
            exponent -= 140;
        }
    }
    s * 10f64.powi(exponent)
}

/// `a^n` with a decimal exponent carried separately to avoid overflow.
fn matrix_power(a: &[f64], a_exp: i32, m: usize, n: usize) -> (Vec<f64>, i32) {
    if n == 1 {
        return (a.to_vec(), a_exp);
    }
    let (half, half_exp) = matrix_power(a, a_exp, m, n / 2);
    let squared = matrix_multiply(&half, &half, m);
    let (mut v, mut v_exp) = if n.is_multiple_of(2) {
        (squared, 2 * half_exp)
    } else {
        (matrix_multiply(a, &squared, m), a_exp + 2 * half_exp)
    };
    if v[(m / 2) * m + m / 2] > 1e140 {
        v.iter_mut().for_each(|x| *x *= 1e-140);
        v_exp += 140;
    }
    (v, v_exp)
}

fn matrix_multiply(a: &[f64], b: &[f64], m: usize) -> Vec<f64> {
    let mut c = vec![0.0; m * m];
    for i in 0..m {
        for l in 0..m {
            let a_il = a[i * m + l];
            if a_il == 0.0 {
                continue;
            }
            let row = &b[l * m..(l + 1) * m];
            for (c_ij, b_lj) in c[i * m..(i + 1) * m].iter_mut().zip(row) {
                *c_ij += a_il * b_lj;
            }
        }
    }
    c
}
