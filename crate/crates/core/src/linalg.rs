//! Dense eigenvalues of small real nonsymmetric matrices.
//!
//! Balancing, reduction to upper Hessenberg form by stabilized elementary
//! similarity transforms, then Francis double-shift QR iteration on the
//! Hessenberg matrix. Only eigenvalues are computed.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

const RADIX: f64 = 2.0;

/// 1-based square work array, which keeps the classic index arithmetic of
/// the Hessenberg QR sweep readable.
struct Work {
    n: usize,
    a: Vec<f64>,
}

impl Work {
    fn from_matrix(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        let mut a = vec![0.0; (n + 1) * (n + 1)];
        for i in 0..n {
            for j in 0..n {
                a[(i + 1) * (n + 1) + j + 1] = m[(i, j)];
            }
        }
        Work { n, a }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * (self.n + 1) + j]
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.a[i * (self.n + 1) + j]
    }

    fn swap(&mut self, (i1, j1): (usize, usize), (i2, j2): (usize, usize)) {
        let s = self.n + 1;
        self.a.swap(i1 * s + j1, i2 * s + j2);
    }
}

fn balance(w: &mut Work) {
    let n = w.n;
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 1..=n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 1..=n {
                if j != i {
                    c += w.at(j, i).abs();
                    r += w.at(i, j).abs();
                }
            }
            if c != 0.0 && r != 0.0 {
                let mut g = r / RADIX;
                let mut f = 1.0;
                let s = c + r;
                while c < g {
                    f *= RADIX;
                    c *= sqrdx;
                }
                g = r * RADIX;
                while c > g {
                    f /= RADIX;
                    c /= sqrdx;
                }
                if (c + r) / f < 0.95 * s {
                    done = false;
                    let g = 1.0 / f;
                    for j in 1..=n {
                        *w.at_mut(i, j) *= g;
                    }
                    for j in 1..=n {
                        *w.at_mut(j, i) *= f;
                    }
                }
            }
        }
    }
}

fn hessenberg(w: &mut Work) {
    let n = w.n;
    for m in 2..n {
        let mut x: f64 = 0.0;
        let mut i = m;
        for j in m..=n {
            if w.at(j, m - 1).abs() > x.abs() {
                x = w.at(j, m - 1);
                i = j;
            }
        }
        if i != m {
            for j in (m - 1)..=n {
                w.swap((i, j), (m, j));
            }
            for j in 1..=n {
                w.swap((j, i), (j, m));
            }
        }
        if x != 0.0 {
            for i in (m + 1)..=n {
                let mut y = w.at(i, m - 1);
                if y != 0.0 {
                    y /= x;
                    *w.at_mut(i, m - 1) = y;
                    for j in m..=n {
                        let v = w.at(m, j);
                        *w.at_mut(i, j) -= y * v;
                    }
                    for j in 1..=n {
                        let v = w.at(j, i);
                        *w.at_mut(j, m) += y * v;
                    }
                }
            }
        }
    }
    // discard the stored multipliers below the subdiagonal
    for i in 3..=n {
        for j in 1..(i - 1) {
            *w.at_mut(i, j) = 0.0;
        }
    }
}

#[inline]
fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

fn hqr(w: &mut Work, max_iterations: usize) -> Result<Vec<Complex64>> {
    let n = w.n;
    let mut wr = vec![0.0; n + 1];
    let mut wi = vec![0.0; n + 1];

    let mut anorm = 0.0;
    for i in 1..=n {
        for j in (i.saturating_sub(1)).max(1)..=n {
            anorm += w.at(i, j).abs();
        }
    }

    let mut total = 0usize;
    let mut nn = n;
    let mut t = 0.0;
    while nn >= 1 {
        let mut its = 0usize;
        loop {
            let mut l = nn;
            while l >= 2 {
                let mut s = w.at(l - 1, l - 1).abs() + w.at(l, l).abs();
                if s == 0.0 {
                    s = anorm;
                }
                if w.at(l, l - 1).abs() + s == s {
                    *w.at_mut(l, l - 1) = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = w.at(nn, nn);
            if l == nn {
                wr[nn] = x + t;
                wi[nn] = 0.0;
                nn -= 1;
            } else {
                let mut y = w.at(nn - 1, nn - 1);
                let mut wv = w.at(nn, nn - 1) * w.at(nn - 1, nn);
                if l == nn - 1 {
                    let p = 0.5 * (y - x);
                    let q = p * p + wv;
                    let mut z = q.abs().sqrt();
                    x += t;
                    if q >= 0.0 {
                        z = p + sign(z, p);
                        wr[nn - 1] = x + z;
                        wr[nn] = x + z;
                        if z != 0.0 {
                            wr[nn] = x - wv / z;
                        }
                        wi[nn - 1] = 0.0;
                        wi[nn] = 0.0;
                    } else {
                        wr[nn - 1] = x + p;
                        wr[nn] = x + p;
                        wi[nn - 1] = -z;
                        wi[nn] = z;
                    }
                    nn -= 2;
                } else {
                    if total >= max_iterations {
                        return Err(Error::NoConvergence { iterations: total });
                    }
                    if its > 0 && its % 10 == 0 {
                        // exceptional shift
                        t += x;
                        for i in 1..=nn {
                            *w.at_mut(i, i) -= x;
                        }
                        let s = w.at(nn, nn - 1).abs() + w.at(nn - 1, nn - 2).abs();
                        x = 0.75 * s;
                        y = x;
                        wv = -0.4375 * s * s;
                    }
                    its += 1;
                    total += 1;

                    let (mut p, mut q, mut r, mut z);
                    let mut m = nn - 2;
                    loop {
                        z = w.at(m, m);
                        r = x - z;
                        let s0 = y - z;
                        p = (r * s0 - wv) / w.at(m + 1, m) + w.at(m, m + 1);
                        q = w.at(m + 1, m + 1) - z - r - s0;
                        r = w.at(m + 2, m + 1);
                        let s = p.abs() + q.abs() + r.abs();
                        p /= s;
                        q /= s;
                        r /= s;
                        if m == l {
                            break;
                        }
                        let u = w.at(m, m - 1).abs() * (q.abs() + r.abs());
                        let v = p.abs()
                            * (w.at(m - 1, m - 1).abs() + z.abs() + w.at(m + 1, m + 1).abs());
                        if u + v == v {
                            break;
                        }
                        m -= 1;
                    }
                    for i in (m + 2)..=nn {
                        *w.at_mut(i, i - 2) = 0.0;
                        if i != m + 2 {
                            *w.at_mut(i, i - 3) = 0.0;
                        }
                    }
                    let mut k = m;
                    while k < nn {
                        if k != m {
                            p = w.at(k, k - 1);
                            q = w.at(k + 1, k - 1);
                            r = 0.0;
                            if k != nn - 1 {
                                r = w.at(k + 2, k - 1);
                            }
                            x = p.abs() + q.abs() + r.abs();
                            if x != 0.0 {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        let s = sign((p * p + q * q + r * r).sqrt(), p);
                        if s != 0.0 {
                            if k == m {
                                if l != m {
                                    *w.at_mut(k, k - 1) = -w.at(k, k - 1);
                                }
                            } else {
                                *w.at_mut(k, k - 1) = -s * x;
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            z = r / s;
                            q /= p;
                            r /= p;
                            for j in k..=nn {
                                p = w.at(k, j) + q * w.at(k + 1, j);
                                if k != nn - 1 {
                                    p += r * w.at(k + 2, j);
                                    *w.at_mut(k + 2, j) -= p * z;
                                }
                                *w.at_mut(k + 1, j) -= p * y;
                                *w.at_mut(k, j) -= p * x;
                            }
                            let mmin = if nn < k + 3 { nn } else { k + 3 };
                            for i in l..=mmin {
                                p = x * w.at(i, k) + y * w.at(i, k + 1);
                                if k != nn - 1 {
                                    p += z * w.at(i, k + 2);
                                    *w.at_mut(i, k + 2) -= p * r;
                                }
                                *w.at_mut(i, k + 1) -= p * q;
                                *w.at_mut(i, k) -= p;
                            }
                        }
                        k += 1;
                    }
                }
            }
            if nn < 2 || l + 1 >= nn {
                break;
            }
        }
    }

    Ok((1..=n).map(|i| Complex64::new(wr[i], wi[i])).collect())
}

/// Sort by real part, then by imaginary part.
pub fn sort_spectrum(values: &mut [Complex64]) {
    values.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// All eigenvalues of a square real matrix, with multiplicity, sorted by
/// real part and then imaginary part.
///
/// The QR sweep is capped at `100 * n` iterations in total.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidSize(format!(
            "eigenvalues need a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("matrix has non-finite entries".into()));
    }
    // Triangular input: the diagonal is exact, while QR on a defective block
    // (the chain Laplacian) would only resolve it to about eps^(1/n).
    let upper = (0..n).all(|i| (0..i).all(|j| m[(i, j)] == 0.0));
    let lower = (0..n).all(|i| (i + 1..n).all(|j| m[(i, j)] == 0.0));
    if upper || lower {
        let mut values: Vec<Complex64> = (0..n).map(|i| Complex64::new(m[(i, i)], 0.0)).collect();
        sort_spectrum(&mut values);
        return Ok(values);
    }
    let mut w = Work::from_matrix(m);
    balance(&mut w);
    hessenberg(&mut w);
    let mut values = hqr(&mut w, 100 * n)?;
    sort_spectrum(&mut values);
    Ok(values)
}

/// Infinity norm (maximum absolute row sum).
pub fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn diagonal_and_triangular() {
        let m = DMatrix::from_row_slice(3, 3, &[3.0, 1.0, 2.0, 0.0, -1.0, 5.0, 0.0, 0.0, 2.0]);
        let ev = eigenvalues(&m).unwrap();
        let re: Vec<f64> = ev.iter().map(|z| z.re).collect();
        assert!((re[0] + 1.0).abs() < 1e-12);
        assert!((re[1] - 2.0).abs() < 1e-12);
        assert!((re[2] - 3.0).abs() < 1e-12);
        assert!(ev.iter().all(|z| z.im == 0.0));
    }

    #[test]
    fn rotation_block() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, -2.0, 2.0, 0.0]);
        let ev = eigenvalues(&m).unwrap();
        assert!(close(ev[0], Complex64::new(0.0, -2.0), 1e-12));
        assert!(close(ev[1], Complex64::new(0.0, 2.0), 1e-12));
    }

    #[test]
    fn companion_matrix_roots() {
        // x^4 - 10x^3 + 35x^2 - 50x + 24 = (x-1)(x-2)(x-3)(x-4)
        let m = DMatrix::from_row_slice(
            4,
            4,
            &[
                10.0, -35.0, 50.0, -24.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0,
                0.0,
            ],
        );
        let ev = eigenvalues(&m).unwrap();
        for (k, z) in ev.iter().enumerate() {
            assert!(close(*z, Complex64::new(k as f64 + 1.0, 0.0), 1e-9), "{z}");
        }
    }

    #[test]
    fn badly_scaled_matrix_is_balanced() {
        let m = DMatrix::from_row_slice(
            3,
            3,
            &[1.0, 1e8, 0.0, 1e-8, 1.0, 1e8, 0.0, 1e-8, 1.0],
        );
        let ev = eigenvalues(&m).unwrap();
        // similar to tridiag(1, 1, 1): 1 - sqrt2, 1, 1 + sqrt2
        let s = 2f64.sqrt();
        assert!(close(ev[0], Complex64::new(1.0 - s, 0.0), 1e-9));
        assert!(close(ev[1], Complex64::new(1.0, 0.0), 1e-9));
        assert!(close(ev[2], Complex64::new(1.0 + s, 0.0), 1e-9));
    }

    #[test]
    fn rejects_non_square() {
        let m = DMatrix::<f64>::zeros(2, 3);
        assert!(matches!(eigenvalues(&m), Err(Error::InvalidSize(_))));
    }

    #[test]
    fn empty_and_scalar() {
        assert!(eigenvalues(&DMatrix::<f64>::zeros(0, 0)).unwrap().is_empty());
        let ev = eigenvalues(&DMatrix::from_element(1, 1, -4.5)).unwrap();
        assert_eq!(ev, vec![Complex64::new(-4.5, 0.0)]);
    }
}
