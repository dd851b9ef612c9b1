//! Dilogarithm and totient helpers.

use crate::error::{Error, Result};

/// `zeta(2) = pi^2 / 6`.
pub const ZETA2: f64 = std::f64::consts::PI * std::f64::consts::PI / 6.0;

/// Dilogarithm `Li_2(z)` on `[0, 1]`, absolute error below `1e-14`.
///
/// Series for `z <= 1/2`, the reflection
/// `Li_2(z) = pi^2/6 - log(z) log(1-z) - Li_2(1-z)` otherwise.
pub fn dilog(z: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::Domain(format!("dilog argument must lie in [0, 1], got {z}")));
    }
    if z == 1.0 {
        return Ok(ZETA2);
    }
    if z <= 0.5 {
        Ok(dilog_series(z))
    } else {
        let q = 1.0 - z;
        // log(z) = log1p(-q) keeps precision near z = 1.
        Ok(ZETA2 - (-q).ln_1p() * q.ln() - dilog_series(q))
    }
}

fn dilog_series(z: f64) -> f64 {
    debug_assert!((0.0..=0.5).contains(&z));
    let mut sum = 0.0;
    let mut zk = 1.0;
    for k in 1..200u32 {
        zk *= z;
        let term = zk / ((k * k) as f64);
        sum += term;
        if term < 1e-17 {
            break;
        }
    }
    sum
}

/// Euler totients `phi(0..=n)` by sieve (`phi(0)` is set to 0).
pub fn totient_upto(n: u64) -> Vec<u64> {
    let n = n as usize;
    let mut phi: Vec<u64> = (0..=n as u64).collect();
    for i in 2..=n {
        if phi[i] == i as u64 {
            // i is prime; apply the (1 - 1/p) factor to all multiples.
            let mut j = i;
            while j <= n {
                phi[j] -= phi[j] / i as u64;
                j += i;
            }
        }
    }
    if n >= 1 {
        phi[1] = 1;
    }
    phi
}
