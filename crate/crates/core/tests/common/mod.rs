//! Independent reference computations for the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;

/// `exp(A)` by scaling and squaring with the degree-13 Padé approximant.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    const THETA13: f64 = 5.371920351148152;
    let n = a.nrows();
    let norm1 = (0..n)
        .map(|j| a.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let s = if norm1 > THETA13 {
        (norm1 / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = a / 2f64.powi(s);
    let id = DMatrix::<f64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * (&a6 * B[13] + &a4 * B[11] + &a2 * B[9]) + &a6 * B[7] + &a4 * B[5] + &a2 * B[3] + &id * B[1];
    let u = &a * u_inner;
    let v = &a6 * (&a6 * B[12] + &a4 * B[10] + &a2 * B[8]) + &a6 * B[6] + &a4 * B[4] + &a2 * B[2] + &id * B[0];
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu().solve(&p).expect("Padé denominator is invertible");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// Polynomial coefficients, lowest degree first.
type Poly = Vec<f64>;

fn poly_mul(a: &[f64], b: &[f64]) -> Poly {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn permutations(n: usize) -> Vec<(Vec<usize>, f64)> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], sign: f64, out: &mut Vec<(Vec<usize>, f64)>) {
        let n = used.len();
        if prefix.len() == n {
            out.push((prefix.clone(), sign));
            return;
        }
        for v in 0..n {
            if !used[v] {
                // sign flips once per earlier element greater than v
                let inversions = prefix.iter().filter(|&&p| p > v).count();
                let s = if inversions % 2 == 0 { sign } else { -sign };
                used[v] = true;
                prefix.push(v);
                rec(prefix, used, s, out);
                prefix.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], 1.0, &mut out);
    out
}

/// `det(λI - M)` by the Leibniz expansion over all permutations.
pub fn char_poly(m: &DMatrix<f64>) -> Poly {
    let n = m.nrows();
    let mut total = vec![0.0; n + 1];
    for (perm, sign) in permutations(n) {
        let mut term: Poly = vec![sign];
        for (i, &j) in perm.iter().enumerate() {
            let entry: Poly = if i == j { vec![-m[(i, j)], 1.0] } else { vec![-m[(i, j)]] };
            term = poly_mul(&term, &entry);
        }
        for (k, c) in term.iter().enumerate() {
            total[k] += c;
        }
    }
    total
}

fn horner(p: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut v = Complex64::new(0.0, 0.0);
    let mut d = Complex64::new(0.0, 0.0);
    for &c in p.iter().rev() {
        d = d * z + v;
        v = v * z + c;
    }
    (v, d)
}

/// Roots of a polynomial by Durand-Kerner iteration, each polished with a
/// few Newton steps.
pub fn poly_roots(p: &[f64]) -> Vec<Complex64> {
    let deg = p.len() - 1;
    let lead = p[deg];
    let monic: Vec<f64> = p.iter().map(|c| c / lead).collect();
    let radius = 1.0 + monic[..deg].iter().map(|c| c.abs()).fold(0.0, f64::max);
    let seed = Complex64::new(0.4, 0.9);
    let mut z: Vec<Complex64> = (0..deg).map(|k| seed.powu(k as u32) * radius).collect();
    for _ in 0..2000 {
        let mut change: f64 = 0.0;
        for i in 0..deg {
            let (num, _) = horner(&monic, z[i]);
            let mut den = Complex64::new(1.0, 0.0);
            for j in 0..deg {
                if j != i {
                    den *= z[i] - z[j];
                }
            }
            let step = num / den;
            z[i] -= step;
            change = change.max(step.norm());
        }
        if change < 1e-15 * radius {
            break;
        }
    }
    for r in z.iter_mut() {
        for _ in 0..3 {
            let (v, d) = horner(&monic, *r);
            if d.norm() > 0.0 {
                *r -= v / d;
            }
        }
    }
    z
}

/// Largest distance in a greedy nearest matching of two multisets.
pub fn match_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap();
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

/// Classical fixed-step RK4 from `t0` over `steps` steps of `h`; `visit` sees
/// every (t, x) including the start.
pub fn rk4<F, V>(f: F, x0: &[f64], t0: f64, h: f64, steps: usize, mut visit: V)
where
    F: Fn(&[f64], &mut [f64]),
    V: FnMut(f64, &[f64]),
{
    let d = x0.len();
    let mut x = x0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    visit(t0, &x);
    for s in 0..steps {
        f(&x, &mut k1);
        for i in 0..d {
            tmp[i] = x[i] + 0.5 * h * k1[i];
        }
        f(&tmp, &mut k2);
        for i in 0..d {
            tmp[i] = x[i] + 0.5 * h * k2[i];
        }
        f(&tmp, &mut k3);
        for i in 0..d {
            tmp[i] = x[i] + h * k3[i];
        }
        f(&tmp, &mut k4);
        for i in 0..d {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        visit(t0 + (s + 1) as f64 * h, &x);
    }
}

/// Single FHN node period with RK4 at `h`: mean spacing of the last few
/// upward zero crossings of `y`, after a 600-unit run from `(0, 0.1)`.
pub fn fhn_period_rk4(alpha: f64, beta: f64, gamma: f64, h: f64) -> f64 {
    let f = |x: &[f64], dx: &mut [f64]| {
        dx[0] = alpha * (x[1] - beta * x[0]);
        dx[1] = x[1] - gamma * x[1].powi(3) - x[0];
    };
    let steps = (600.0 / h).round() as usize;
    let mut prev: Option<(f64, f64)> = None;
    let mut crossings = Vec::new();
    rk4(f, &[0.0, 0.1], 0.0, h, steps, |t, x| {
        if let Some((tp, yp)) = prev {
            if yp < 0.0 && x[1] >= 0.0 {
                crossings.push(tp + h * (-yp) / (x[1] - yp));
            }
        }
        prev = Some((t, x[1]));
    });
    let tail = &crossings[crossings.len() - 5..];
    (tail[4] - tail[0]) / 4.0
}

/// Solution of `x' = -x(t - 1)` with history `x = 1` on `[-1, 0]`:
/// `x(t) = Σ_{k=0}^{m} (-1)^k (t - k + 1)^k / k!` on `[m - 1, m]`.
pub fn delayed_exponential(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    let m = t.ceil() as i32;
    let mut sum = 0.0;
    let mut fact = 1.0;
    for k in 0..=m {
        if k > 0 {
            fact *= k as f64;
        }
        let base = t - (k - 1) as f64;
        sum += (-1f64).powi(k) * base.powi(k) / fact;
    }
    sum
}

/// Kinetic matrix from off-diagonal rates `(i, j, q)` built directly,
/// without the library.
pub fn kinetic_dense(n: usize, rates: &[(usize, usize, f64)]) -> DMatrix<f64> {
    let mut k = DMatrix::zeros(n, n);
    for &(i, j, q) in rates {
        k[(i, j)] += q;
        k[(j, j)] -= q;
    }
    k
}
