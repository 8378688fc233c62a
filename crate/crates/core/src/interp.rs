//! Interpolation of uniformly sampled series.

/// Stencil width of the local Lagrange interpolant (quintic).
const STENCIL: usize = 6;

#[inline]
fn weights(x: f64, i0: usize, width: usize, w: &mut [f64; STENCIL]) {
    for k in 0..width {
        let mut num = 1.0;
        let mut den = 1.0;
        for m in 0..width {
            if m != k {
                num *= x - (i0 + m) as f64;
                den *= k as f64 - m as f64;
            }
        }
        w[k] = num / den;
    }
}

/// Quintic Lagrange interpolation of `get(i)`, `i in 0..len`, sampled at
/// `t0 + i * dt`. The stencil is shifted inward near the ends, so values
/// slightly outside the sampled range are extrapolated.
pub fn uniform_at(len: usize, t0: f64, dt: f64, t: f64, get: impl Fn(usize) -> f64) -> f64 {
    debug_assert!(len >= 1);
    let x = (t - t0) / dt;
    let width = STENCIL.min(len);
    let base = x.floor() as i64 - (width as i64 / 2 - 1);
    let i0 = base.clamp(0, (len - width) as i64) as usize;
    let xi = x.round();
    if (x - xi).abs() < 1e-12 && xi >= 0.0 && (xi as usize) < len {
        return get(xi as usize);
    }
    let mut w = [0.0; STENCIL];
    weights(x, i0, width, &mut w);
    (0..width).map(|k| w[k] * get(i0 + k)).sum()
}

/// Quintic Lagrange interpolation of a periodic series: `len` samples at
/// `i * period / len` covering exactly one period (endpoint excluded).
pub fn periodic_at(len: usize, period: f64, t: f64, get: impl Fn(usize) -> f64) -> f64 {
    debug_assert!(len >= STENCIL);
    let dt = period / len as f64;
    let x = (t / dt).rem_euclid(len as f64);
    let base = x.floor() as i64 - (STENCIL as i64 / 2 - 1);
    let mut w = [0.0; STENCIL];
    // stencil-relative coordinate
    weights(x - base as f64, 0, STENCIL, &mut w);
    (0..STENCIL)
        .map(|k| {
            let idx = (base + k as i64).rem_euclid(len as i64) as usize;
            w[k] * get(idx)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_polynomials_of_degree_five() {
        let f = |t: f64| 1.0 - 2.0 * t + 0.5 * t.powi(3) - 0.01 * t.powi(5);
        let dt = 0.3;
        let vals: Vec<f64> = (0..20).map(|i| f(i as f64 * dt)).collect();
        for &t in &[0.05, 1.234, 3.3, 5.61, 5.69] {
            let v = uniform_at(vals.len(), 0.0, dt, t, |i| vals[i]);
            assert!((v - f(t)).abs() < 1e-9, "t={t}: {v} vs {}", f(t));
        }
    }

    #[test]
    fn grid_points_are_exact() {
        let vals = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0];
        for (i, v) in vals.iter().enumerate() {
            assert_eq!(uniform_at(vals.len(), 1.0, 0.5, 1.0 + 0.5 * i as f64, |k| vals[k]), *v);
        }
    }

    #[test]
    fn periodic_sine() {
        let period = 7.0;
        let m = 140;
        let vals: Vec<f64> = (0..m)
            .map(|i| (2.0 * std::f64::consts::PI * i as f64 / m as f64).sin())
            .collect();
        for &t in &[0.01, 3.456, 6.99, 7.5, -0.2] {
            let v = periodic_at(m, period, t, |i| vals[i]);
            let exact = (2.0 * std::f64::consts::PI * t / period).sin();
            assert!((v - exact).abs() < 1e-9, "t={t}");
        }
    }
}
