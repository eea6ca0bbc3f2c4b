//! Reference values computed independently of `bvpm-core`: power series,
//! closed forms, an adaptive Simpson integrator and an adaptive RK45
//! integrator. Nothing here shares code with the library under test.

use std::f64::consts::PI;

/// Bessel J_n(x) by its power series (fine for |x| <= 20).
pub fn bessel_j(n: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = half.powi(n as i32) / factorial(n);
    let mut sum = term;
    let q = -half * half;
    for k in 1..200 {
        term *= q / (k as f64 * (k as f64 + n as f64));
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

/// Modified Bessel I_n(x) by its power series, summed until the term falls
/// below 1e-16 of the partial sum.
pub fn bessel_i(n: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = half.powi(n as i32) / factorial(n);
    let mut sum = term;
    let q = half * half;
    for k in 1..500 {
        term *= q / (k as f64 * (k as f64 + n as f64));
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// First positive zero of J_0 by bisection on the power series.
pub fn j0_first_zero() -> f64 {
    let (mut a, mut b) = (2.0, 3.0);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if bessel_j(0, a).signum() == bessel_j(0, m).signum() {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Unit disk eigenvalue j0^2.
pub fn disk_lambda() -> f64 {
    j0_first_zero().powi(2)
}

/// phi(r) = J0(j0 r) on the unit disk.
pub fn disk_phi(r: f64) -> f64 {
    bessel_j(0, j0_first_zero() * r)
}

/// kcheck[1] for V = 1 on the unit disk: -phi'(1)/lambda = J1(j0)/j0.
pub fn disk_kcheck_one() -> f64 {
    let z = j0_first_zero();
    bessel_j(1, z) / z
}

/// Unit ball in R^3: phi(r) = sin(pi r)/(pi r).
pub fn ball3_phi(r: f64) -> f64 {
    if r == 0.0 {
        1.0
    } else {
        (PI * r).sin() / (PI * r)
    }
}

/// Radial solution of -Δu + k u = 0 on the unit disk with u = 1 on the circle.
pub fn constant_v_solution(k: f64, r: f64) -> f64 {
    let s = k.sqrt();
    bessel_i(0, s * r) / bessel_i(0, s)
}

/// Poisson kernel of the disk of radius R written independently:
/// (R^2 - |x|^2) / (2 pi R |x - y|^2).
pub fn disk_poisson(rad: f64, x: [f64; 2], y: [f64; 2]) -> f64 {
    let d2 = (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2);
    (rad * rad - x[0] * x[0] - x[1] * x[1]) / (2.0 * PI * rad * d2)
}

/// Adaptive Simpson with absolute tolerance.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn step<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Integrate a function with an integrable singularity at `a` by splitting
/// [a, b] into dyadic pieces toward `a` down to width `(b - a) 2^-levels`.
pub fn simpson_toward<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, levels: u32, tol: f64) -> f64 {
    let mut total = 0.0;
    let mut hi = b;
    for _ in 0..levels {
        let lo = a + 0.5 * (hi - a);
        total += simpson(f, lo, hi, tol);
        hi = lo;
    }
    total
}

/// Adaptive Dormand-Prince RK45 for y' = f(t, y) from t0 to t1.
pub fn rk45<F: Fn(f64, &[f64]) -> Vec<f64>>(f: &F, t0: f64, y0: &[f64], t1: f64, rtol: f64) -> Vec<f64> {
    const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut h = (t1 - t0) * 1e-4;
    while (t1 - t) * (t1 - t0).signum() > 0.0 {
        if (t + h - t1) * (t1 - t0).signum() > 0.0 {
            h = t1 - t;
        }
        let mut k: Vec<Vec<f64>> = Vec::with_capacity(7);
        for s in 0..7 {
            let mut ys = y.clone();
            for (p, kp) in k.iter().enumerate() {
                for i in 0..n {
                    ys[i] += h * A[s][p] * kp[i];
                }
            }
            k.push(f(t + C[s] * h, &ys));
        }
        let mut err: f64 = 0.0;
        let mut ynew = y.clone();
        for i in 0..n {
            let mut s5 = 0.0;
            let mut s4 = 0.0;
            for s in 0..7 {
                s5 += B5[s] * k[s][i];
                s4 += B4[s] * k[s][i];
            }
            ynew[i] += h * s5;
            let sc = rtol * y[i].abs().max(ynew[i].abs()).max(1e-300);
            err = err.max((h * (s5 - s4)).abs() / sc);
        }
        if err <= 1.0 {
            t += h;
            y = ynew;
        }
        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= fac;
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn j0_zero_value() {
        assert!((j0_first_zero() - 2.404_825_557_695_773).abs() < 1e-13);
    }

    #[test]
    fn i0_of_one() {
        assert!((bessel_i(0, 1.0) - 1.266_065_877_752_008_4).abs() < 1e-14);
    }

    #[test]
    fn rk45_exponential() {
        let y = rk45(&|_t, y: &[f64]| vec![y[0]], 0.0, &[1.0], 2.0, 1e-10);
        assert!((y[0] - 2f64.exp()).abs() < 1e-8);
    }

    #[test]
    fn simpson_polynomial() {
        let v = simpson(&|x: f64| x.powi(4), 0.0, 1.0, 1e-12);
        assert!((v - 0.2).abs() < 1e-12);
    }
}
