//! Erlang-B blocking for the M/G/C/C loss system.

/// Erlang-B blocking probability with `c` servers and offered load `rho`.
pub fn erlang_b(c: u32, rho: f64) -> f64 {
    let mut b = 1.0;
    for k in 1..=c {
        b = rho * b / (k as f64 + rho * b);
    }
    b
}
