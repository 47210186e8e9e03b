//! Bessel functions of integer order, coherent-state amplitudes and the
//! integer-order incomplete gamma ratio.

use statrs::function::factorial::ln_factorial;
use statrs::function::gamma::gamma_ur;

pub use statrs::function::erf::erf;

const RESCALE_ABOVE: f64 = 1e200;

/// `J_0(x) ..= J_{n_max}(x)` by Miller's backward recurrence, normalized with
/// `J_0 + 2 Σ J_{2k} = 1`.
pub fn bessel_j_array(n_max: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; n_max + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    let reach = n_max.max(ax.ceil() as usize);
    let mut start = reach + 30 + (80.0 * reach as f64).sqrt() as usize;
    start += start % 2;

    let mut above = 0.0_f64;
    let mut cur = 1e-30_f64;
    let mut norm = 0.0_f64;
    for k in (1..=start).rev() {
        // cur = J_k, above = J_{k+1}; produce J_{k-1}
        let below = (2.0 * k as f64 / ax) * cur - above;
        above = cur;
        cur = below;
        let idx = k - 1;
        if idx <= n_max {
            out[idx] = cur;
        }
        if idx % 2 == 0 {
            norm += if idx == 0 { cur } else { 2.0 * cur };
        }
        if cur.abs() > RESCALE_ABOVE {
            let s = 1.0 / RESCALE_ABOVE;
            cur *= s;
            above *= s;
            norm *= s;
            for v in out.iter_mut().skip(idx) {
                *v *= s;
            }
        }
    }
    for v in out.iter_mut() {
        *v /= norm;
    }
    if x < 0.0 {
        for (n, v) in out.iter_mut().enumerate() {
            if n % 2 == 1 {
                *v = -*v;
            }
        }
    }
    out
}

/// `J_n(x)` for any integer order.
pub fn bessel_j(n: i64, x: f64) -> f64 {
    let k = n.unsigned_abs() as usize;
    let v = bessel_j_array(k, x)[k];
    if n < 0 && k % 2 == 1 {
        -v
    } else {
        v
    }
}

/// Signed lookup into a table of non-negative orders.
#[inline]
pub fn signed_order(table: &[f64], n: i64) -> f64 {
    let k = n.unsigned_abs() as usize;
    match table.get(k) {
        Some(&v) if n < 0 && k % 2 == 1 => -v,
        Some(&v) => v,
        None => 0.0,
    }
}

/// `ln n!`
#[inline]
pub fn ln_fact(n: usize) -> f64 {
    ln_factorial(n as u64)
}

/// `⟨n|β₀⟩ = e^{-β₀²/2} β₀ⁿ / √n!` for real `β₀ ≥ 0`, evaluated in log space.
pub fn coherent_amplitude(n: usize, beta0: f64) -> f64 {
    if beta0 == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    (-0.5 * beta0 * beta0 + n as f64 * beta0.ln() - 0.5 * ln_fact(n)).exp()
}

/// Coherent amplitudes for `n = 0 ..= n_max`.
pub fn coherent_amplitudes(n_max: usize, beta0: f64) -> Vec<f64> {
    (0..=n_max).map(|n| coherent_amplitude(n, beta0)).collect()
}

/// `Γ(n+1, x) / n!` for integer `n ≥ 0` and any real `x`.
///
/// Negative arguments use the terminating series `e^{-x} Σ_{k≤n} x^k/k!`.
pub fn upper_gamma_ratio(n: usize, x: f64) -> f64 {
    if x > 0.0 {
        gamma_ur((n + 1) as f64, x)
    } else if x == 0.0 {
        1.0
    } else {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..=n {
            term *= x / k as f64;
            sum += term;
        }
        (-x).exp() * sum
    }
}
