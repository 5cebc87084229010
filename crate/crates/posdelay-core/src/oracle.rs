//! Reference implementations used only by test suites (behind the `oracle`
//! feature). Deliberately independent of the library's own algorithms:
//! eigenvalues come from a balanced Hessenberg + double-shift QR sweep,
//! Perron roots additionally from Gelfand's formula by repeated squaring,
//! and integrals from adaptive Simpson quadrature. The library never calls
//! into this module.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::matrix::Matrix;

/// All eigenvalues of a square matrix as (re, im) pairs.
/// Classic balance + elmhes + hqr; panics if QR fails to converge.
pub fn eigenvalues(m: &Matrix) -> Vec<(f64, f64)> {
    assert!(m.is_square(), "eigenvalues need a square matrix");
    let n = m.rows();
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            a[i][j] = m[(i, j)];
        }
    }
    balance(&mut a);
    hessenberg(&mut a);
    hqr(a)
}

/// Largest eigenvalue modulus.
pub fn rho(m: &Matrix) -> f64 {
    eigenvalues(m)
        .iter()
        .map(|&(re, im)| math::sqrt(re * re + im * im))
        .fold(0.0, f64::max)
}

/// Largest eigenvalue real part.
pub fn spectral_abscissa(m: &Matrix) -> f64 {
    eigenvalues(m).iter().map(|&(re, _)| re).fold(f64::NEG_INFINITY, f64::max)
}

fn balance(a: &mut [Vec<f64>]) {
    let n = a.len();
    let radix: f64 = 2.0;
    let sq = radix * radix;
    loop {
        let mut done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += math::abs(a[j][i]);
                    r += math::abs(a[i][j]);
                }
            }
            if c != 0.0 && r != 0.0 {
                let mut g = r / radix;
                let mut f = 1.0;
                let s = c + r;
                let mut c2 = c;
                while c2 < g {
                    f *= radix;
                    c2 *= sq;
                }
                g = r * radix;
                while c2 > g {
                    f /= radix;
                    c2 /= sq;
                }
                if (c2 + r) / f < 0.95 * s {
                    done = false;
                    let ginv = 1.0 / f;
                    for j in 0..n {
                        a[i][j] *= ginv;
                    }
                    for j in 0..n {
                        a[j][i] *= f;
                    }
                }
            }
        }
        if done {
            break;
        }
    }
}

fn hessenberg(a: &mut [Vec<f64>]) {
    let n = a.len();
    if n < 3 {
        return;
    }
    for m in 1..n - 1 {
        let mut x = 0.0;
        let mut i = m;
        for j in m..n {
            if math::abs(a[j][m - 1]) > math::abs(x) {
                x = a[j][m - 1];
                i = j;
            }
        }
        if i != m {
            a.swap(i, m);
            for row in a.iter_mut() {
                row.swap(i, m);
            }
        }
        if x != 0.0 {
            for i in m + 1..n {
                let mut y = a[i][m - 1];
                if y != 0.0 {
                    y /= x;
                    a[i][m - 1] = y;
                    for j in m..n {
                        a[i][j] -= y * a[m][j];
                    }
                    for j in 0..n {
                        a[j][m] += y * a[j][i];
                    }
                }
            }
        }
    }
    // the elimination leaves multipliers below the subdiagonal; hqr expects zeros
    for i in 2..n {
        for j in 0..i - 1 {
            a[i][j] = 0.0;
        }
    }
}

fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        math::abs(a)
    } else {
        -math::abs(a)
    }
}

/// Double-shift QR on an upper Hessenberg matrix (EISPACK hqr).
fn hqr(mut a: Vec<Vec<f64>>) -> Vec<(f64, f64)> {
    let n = a.len();
    let eps = f64::EPSILON;
    let mut eig = Vec::with_capacity(n);
    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += math::abs(a[i][j]);
        }
    }
    let mut t = 0.0;
    let mut nn = n as isize - 1;
    while nn >= 0 {
        let mut its = 0;
        loop {
            // find small subdiagonal element
            let mut l = nn;
            while l >= 1 {
                let s = math::abs(a[(l - 1) as usize][(l - 1) as usize])
                    + math::abs(a[l as usize][l as usize]);
                let s = if s == 0.0 { anorm } else { s };
                if math::abs(a[l as usize][(l - 1) as usize]) <= eps * s {
                    a[l as usize][(l - 1) as usize] = 0.0;
                    break;
                }
                l -= 1;
            }
            let x = a[nn as usize][nn as usize];
            if l == nn {
                eig.push((x + t, 0.0));
                nn -= 1;
                break;
            }
            let y = a[(nn - 1) as usize][(nn - 1) as usize];
            let w = a[nn as usize][(nn - 1) as usize] * a[(nn - 1) as usize][nn as usize];
            if l == nn - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let mut z = math::sqrt(math::abs(q));
                let x = x + t;
                if q >= 0.0 {
                    z = p + sign(z, p);
                    eig.push((x + z, 0.0));
                    if z != 0.0 {
                        eig.push((x - w / z, 0.0));
                    } else {
                        eig.push((x + z, 0.0));
                    }
                } else {
                    eig.push((x + p, z));
                    eig.push((x + p, -z));
                }
                nn -= 2;
                break;
            }
            assert!(its < 60, "QR iteration failed to converge");
            let (mut x, mut y, mut w) = (x, y, w);
            if its == 10 || its == 20 {
                // exceptional shift
                t += x;
                for i in 0..=nn as usize {
                    a[i][i] -= x;
                }
                let s = math::abs(a[nn as usize][(nn - 1) as usize])
                    + math::abs(a[(nn - 1) as usize][(nn - 2) as usize]);
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            let mut m = nn - 2;
            let (mut p, mut q, mut r) = (0.0, 0.0, 0.0);
            while m >= l {
                let z = a[m as usize][m as usize];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a[(m + 1) as usize][m as usize] + a[m as usize][(m + 1) as usize];
                q = a[(m + 1) as usize][(m + 1) as usize] - z - rr - ss;
                r = a[(m + 2) as usize][(m + 1) as usize];
                let s = math::abs(p) + math::abs(q) + math::abs(r);
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = math::abs(a[m as usize][(m - 1) as usize]) * (math::abs(q) + math::abs(r));
                let v = math::abs(p)
                    * (math::abs(a[(m - 1) as usize][(m - 1) as usize])
                        + math::abs(z)
                        + math::abs(a[(m + 1) as usize][(m + 1) as usize]));
                if u <= eps * v {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nn {
                a[i as usize][(i - 2) as usize] = 0.0;
                if i > m + 2 {
                    a[i as usize][(i - 3) as usize] = 0.0;
                }
            }
            for k in m..nn {
                if k != m {
                    p = a[k as usize][(k - 1) as usize];
                    q = a[(k + 1) as usize][(k - 1) as usize];
                    r = if k != nn - 1 { a[(k + 2) as usize][(k - 1) as usize] } else { 0.0 };
                    x = math::abs(p) + math::abs(q) + math::abs(r);
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = sign(math::sqrt(p * p + q * q + r * r), p);
                if s == 0.0 {
                    continue;
                }
                if k == m {
                    if l != m {
                        a[k as usize][(k - 1) as usize] = -a[k as usize][(k - 1) as usize];
                    }
                } else {
                    a[k as usize][(k - 1) as usize] = -s * x;
                }
                p += s;
                x = p / s;
                y = q / s;
                let z = r / s;
                q /= p;
                r /= p;
                for j in k as usize..=nn as usize {
                    let mut pp = a[k as usize][j] + q * a[(k + 1) as usize][j];
                    if k != nn - 1 {
                        pp += r * a[(k + 2) as usize][j];
                        a[(k + 2) as usize][j] -= pp * z;
                    }
                    a[(k + 1) as usize][j] -= pp * y;
                    a[k as usize][j] -= pp * x;
                }
                let mmin = if nn < k + 3 { nn } else { k + 3 };
                for i in l as usize..=mmin as usize {
                    let mut pp = x * a[i][k as usize] + y * a[i][(k + 1) as usize];
                    if k != nn - 1 {
                        pp += z * a[i][(k + 2) as usize];
                        a[i][(k + 2) as usize] -= pp * r;
                    }
                    a[i][(k + 1) as usize] -= pp * q;
                    a[i][k as usize] -= pp;
                }
            }
        }
    }
    eig
}

/// Perron root of a nonnegative matrix by Gelfand's formula with repeated
/// squaring: rho = lim ||M^(2^k)||^(1/2^k). Independent of both the QR
/// path above and the library's Collatz-Wielandt iteration.
pub fn perron_root_squaring(m: &Matrix) -> f64 {
    assert!(m.is_square());
    let mut b = m.clone();
    let mut acc = 0.0; // sum of 2^-k * ln(m_k)
    let mut pow = 1.0;
    for _ in 0..60 {
        let mk = b.max_abs_entry();
        if mk == 0.0 {
            return 0.0;
        }
        acc += pow * ln(mk);
        b = b.scale(1.0 / mk);
        b = b.mul(&b);
        pow *= 0.5;
    }
    // remaining factor rho(B_K)^(2^-K) with rho(B_K) within a factor n of
    // its max entry; the 2^-60 exponent makes that slack irrelevant
    let tail = b.max_abs_entry().max(f64::MIN_POSITIVE);
    acc += pow * ln(tail);
    math::exp(acc)
}

// f64::ln is std-only; small wrapper so the oracle stays no_std-clean.
fn ln(x: f64) -> f64 {
    #[cfg(feature = "std")]
    {
        x.ln()
    }
    #[cfg(not(feature = "std"))]
    {
        libm::log(x)
    }
}

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || math::abs(delta) <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
            + rec(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    rec(f, a, fa, b, fb, whole, m, fm, tol, 48)
}
