//! Thin float helpers over `libm` (the core crate has no `std`).

pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

pub(crate) fn powi(x: f64, n: u32) -> f64 {
    libm::pow(x, n as f64)
}

/// `ceil` that ignores float noise below `1e-9` (so `1.1 * 400.0` maps to 440).
pub(crate) fn ceil_tol(x: f64) -> f64 {
    libm::ceil(x - 1e-9)
}

/// `ln(n!)`.
pub(crate) fn ln_factorial(n: usize) -> f64 {
    libm::lgamma(n as f64 + 1.0)
}

/// Poisson pmf, evaluated in log space so large means do not underflow early.
pub(crate) fn poisson_pmf(mean: f64, n: usize) -> f64 {
    if mean <= 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    exp(n as f64 * ln(mean) - mean - ln_factorial(n))
}

/// `P(Poisson(mean) > n)`, summed upward from the pmf at `n + 1` until terms
/// stop contributing. Accurate far into the upper tail, unlike `1 - cdf`.
pub(crate) fn poisson_upper_tail(mean: f64, n: usize) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    let mut k = n + 1;
    let mut term = poisson_pmf(mean, k);
    let mut total = 0.0;
    loop {
        total += term;
        k += 1;
        term *= mean / k as f64;
        if (k as f64) > mean && term < total * 1e-17 {
            break;
        }
        if term == 0.0 && (k as f64) > mean {
            break;
        }
    }
    total
}

/// `P(Poisson(mean) >= c)`.
#[cfg(test)]
pub(crate) fn poisson_tail_ge(mean: f64, c: u32) -> f64 {
    if c == 0 {
        return 1.0;
    }
    poisson_upper_tail(mean, c as usize - 1)
}

/// Smallest `n` with `P(Poisson(mean) > n) < tol`.
pub(crate) fn poisson_truncation(mean: f64, tol: f64) -> usize {
    let mut n = libm::floor(mean + 10.0 * sqrt(mean.max(1.0))) as usize;
    while poisson_upper_tail(mean, n) >= tol {
        n += 1 + n / 16;
    }
    n
}
