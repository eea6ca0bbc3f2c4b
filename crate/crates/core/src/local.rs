//! Integration near boundary points: graded 1-D rules, polar coordinates
//! centred at an arbitrary point of the disk, and closed-form angular
//! integrals of |x - z|^{-N} over (partial) spheres.

use std::f64::consts::PI;

use crate::quad::GaussLegendre;

thread_local! {
    static GL8: GaussLegendre = GaussLegendre::new(8);
    static GL16: GaussLegendre = GaussLegendre::new(16);
}

fn gl_panel<F: FnMut(f64) -> f64>(a: f64, b: f64, f: &mut F) -> f64 {
    GL8.with(|g| g.integrate(a, b, &mut *f))
}

fn levels_for(width: f64, scale: f64) -> usize {
    if scale <= 0.0 || width <= scale {
        return 1;
    }
    ((width / scale).log2().ceil() as usize + 2).min(60)
}

/// ∫_a^b f with dyadic panels toward both ends. `sa`, `sb` are the distances
/// from each end to the nearest singularity of f (smaller means finer).
pub fn graded<F: FnMut(f64) -> f64>(a: f64, b: f64, sa: f64, sb: f64, mut f: F) -> f64 {
    if b <= a {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let h = m - a;
    let mut s = 0.0;
    let la = levels_for(h, sa);
    let mut hi = m;
    for k in 0..la {
        let lo = if k + 1 == la { a } else { a + 0.5 * (hi - a) };
        s += gl_panel(lo, hi, &mut f);
        hi = lo;
    }
    let lb = levels_for(h, sb);
    let mut lo = m;
    for k in 0..lb {
        let hi = if k + 1 == lb { b } else { b - 0.5 * (b - lo) };
        s += gl_panel(lo, hi, &mut f);
        lo = hi;
    }
    s
}

/// ∫_a^b f on a panel whose endpoints may carry square-root behaviour; the
/// map t = a + (b-a)(1 - cos πu)/2 removes it.
pub fn cos_mapped<F: FnMut(f64) -> f64>(a: f64, b: f64, pieces: usize, mut f: F) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mut s = 0.0;
    GL16.with(|g| {
        for p in 0..pieces {
            let u0 = p as f64 / pieces as f64;
            let u1 = (p + 1) as f64 / pieces as f64;
            s += g.integrate(u0, u1, |u| {
                let t = a + (b - a) * 0.5 * (1.0 - (PI * u).cos());
                let dt = (b - a) * 0.5 * PI * (PI * u).sin();
                f(t) * dt
            });
        }
    });
    s
}

/// Region for `polar_around`: δ in [delta_lo, delta_hi) and |x - c| in
/// [rho_lo, rho_hi).
#[derive(Debug, Clone, Copy)]
pub struct Shell {
    pub delta_lo: f64,
    pub delta_hi: f64,
    pub rho_lo: f64,
    pub rho_hi: f64,
}

fn ray_disk(c: [f64; 2], e: [f64; 2], s: f64) -> Option<(f64, f64)> {
    let p = c[0] * e[0] + c[1] * e[1];
    let q = c[0] * c[0] + c[1] * c[1] - s * s;
    let disc = p * p - q;
    if disc <= 0.0 || s <= 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    Some((-p - sq, -p + sq))
}

/// Subintervals of the ray c + ρe (ρ ≥ 0) inside the shell.
fn ray_pieces(radius: f64, c: [f64; 2], e: [f64; 2], sh: &Shell) -> Vec<(f64, f64)> {
    let outer = match ray_disk(c, e, radius - sh.delta_lo) {
        Some(iv) => iv,
        None => return vec![],
    };
    let inner = if sh.delta_hi.is_finite() { ray_disk(c, e, radius - sh.delta_hi) } else { None };
    let mut raw = Vec::with_capacity(2);
    match inner {
        Some((a2, b2)) => {
            raw.push((outer.0, a2.min(outer.1)));
            raw.push((b2.max(outer.0), outer.1));
        }
        None => raw.push(outer),
    }
    raw.into_iter()
        .map(|(a, b)| (a.max(sh.rho_lo).max(0.0), b.min(sh.rho_hi)))
        .filter(|(a, b)| b > a)
        .collect()
}

fn push_cos_breaks(out: &mut Vec<f64>, theta_c: f64, v: f64) {
    if v.abs() <= 1.0 {
        let a = v.acos();
        out.push(theta_c + a);
        out.push(theta_c - a);
    }
}

/// ∫_shell f(x, ρ) dx for N = 2 in polar coordinates (ρ, ψ) centred at c.
/// `extra_breaks` are ray angles where f jumps.
pub fn polar_around<F>(radius: f64, c: [f64; 2], sh: Shell, extra_breaks: &[f64], f: F) -> f64
where
    F: Fn([f64; 2], f64) -> f64,
{
    polar_around_cut(radius, c, sh, extra_breaks, |_, _, _| vec![], f)
}

/// As `polar_around`, with `cuts(e, a, b)` returning the ρ in (a, b) where
/// f jumps along the ray of direction e.
pub fn polar_around_cut<F, C>(radius: f64, c: [f64; 2], sh: Shell, extra_breaks: &[f64], cuts: C, f: F) -> f64
where
    F: Fn([f64; 2], f64) -> f64,
    C: Fn([f64; 2], f64, f64) -> Vec<f64>,
{
    let rc = (c[0] * c[0] + c[1] * c[1]).sqrt();
    let theta_c = c[1].atan2(c[0]);
    let mut breaks = vec![];
    if rc > 0.0 {
        for s in [radius - sh.delta_lo, radius - sh.delta_hi] {
            if !(s > 0.0) || !s.is_finite() {
                continue;
            }
            if rc >= s {
                push_cos_breaks(&mut breaks, theta_c, (rc * rc - s * s).sqrt() / rc);
                push_cos_breaks(&mut breaks, theta_c, -(rc * rc - s * s).sqrt() / rc);
            }
            for r0 in [sh.rho_lo, sh.rho_hi] {
                if r0 > 0.0 && r0.is_finite() {
                    push_cos_breaks(&mut breaks, theta_c, (s * s - rc * rc - r0 * r0) / (2.0 * r0 * rc));
                }
            }
        }
    }
    breaks.extend_from_slice(extra_breaks);
    // reduce to [theta_c - π, theta_c + π)
    let base = theta_c - PI;
    let mut pts: Vec<f64> = breaks.iter().map(|b| base + (b - base).rem_euclid(2.0 * PI)).collect();
    pts.push(base);
    pts.push(base + 2.0 * PI);
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let radial = |psi: f64| -> f64 {
        let e = [psi.cos(), psi.sin()];
        let mut tot = 0.0;
        for (a, b) in ray_pieces(radius, c, e, &sh) {
            let end_scale = |rho: f64| -> f64 {
                let x = [c[0] + rho * e[0], c[1] + rho * e[1]];
                let d = radius - (x[0] * x[0] + x[1] * x[1]).sqrt();
                rho.min(d).max(1e-15 * radius)
            };
            let mut pts = vec![a];
            pts.extend(cuts(e, a, b).into_iter().filter(|&t| t > a && t < b));
            pts.push(b);
            pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
            let last = pts.len() - 2;
            for (i, w) in pts.windows(2).enumerate() {
                let sa = if i == 0 { end_scale(w[0]) } else { w[1] - w[0] };
                let sb = if i == last { end_scale(w[1]) } else { w[1] - w[0] };
                tot += graded(w[0], w[1], sa, sb, |rho| {
                    let x = [c[0] + rho * e[0], c[1] + rho * e[1]];
                    f(x, rho) * rho
                });
            }
        }
        tot
    };
    let mut s = 0.0;
    for w in pts.windows(2) {
        let pieces = ((w[1] - w[0]) / 0.4).ceil().max(1.0) as usize;
        s += cos_mapped(w[0], w[1], pieces, &radial);
    }
    s
}

/// For the sphere |x| = r and centre z with |z| = a, returns
/// (∫ |x - z|^{-N} dS, area) restricted to |x - z| < d (d may be infinite).
pub fn sphere_partial(n: usize, a: f64, r: f64, d: f64) -> (f64, f64) {
    if (a - r).abs() >= d || r <= 0.0 {
        return (0.0, 0.0);
    }
    // cosine of the half-opening angle of the cap |x - z| < d
    let cm = if a == 0.0 {
        -1.0
    } else {
        ((a * a + r * r - d * d) / (2.0 * a * r)).clamp(-1.0, 1.0)
    };
    if n == 2 {
        let tm = cm.acos();
        if a == 0.0 {
            return (2.0 * PI * r / (r * r), 2.0 * PI * r);
        }
        let half = if tm >= PI - 1e-15 {
            0.5 * PI
        } else {
            ((a + r) / (a - r).abs() * (0.5 * tm).tan()).atan()
        };
        (r * 4.0 / (a * a - r * r).abs() * half, 2.0 * r * tm)
    } else {
        if a == 0.0 {
            return (4.0 * PI * r * r / r.powi(3), 4.0 * PI * r * r);
        }
        let far = if cm <= -1.0 { 1.0 / (a + r) } else { 1.0 / d };
        (2.0 * PI * r / a * (1.0 / (a - r).abs() - far), 2.0 * PI * r * r * (1.0 - cm))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_handles_near_singularity() {
        let eta = 1e-9;
        let got = graded(0.0, 1.0, eta, 1.0, |x| 1.0 / (x + eta));
        let want = ((1.0 + eta) / eta).ln();
        assert!((got - want).abs() < 1e-9 * want);
    }

    #[test]
    fn polar_area_of_disk_shell() {
        // area of {δ > 0.1} seen from a boundary point
        let sh = Shell { delta_lo: 0.1, delta_hi: f64::INFINITY, rho_lo: 0.0, rho_hi: f64::INFINITY };
        let a = polar_around(1.0, [1.0, 0.0], sh, &[], |_, _| 1.0);
        assert!((a - PI * 0.81).abs() < 1e-10, "{a}");
        // annulus 0.1 < δ < 0.3 from an interior point
        let sh = Shell { delta_lo: 0.1, delta_hi: 0.3, rho_lo: 0.0, rho_hi: f64::INFINITY };
        let a = polar_around(1.0, [0.2, -0.3], sh, &[], |_, _| 1.0);
        assert!((a - PI * (0.81 - 0.49)).abs() < 1e-10, "{a}");
        // disk of radius 0.25 around an interior point intersected with δ > 0.1
        let sh = Shell { delta_lo: 0.0, delta_hi: f64::INFINITY, rho_lo: 0.0, rho_hi: 0.25 };
        let a = polar_around(1.0, [0.3, 0.1], sh, &[], |_, _| 1.0);
        assert!((a - PI * 0.0625).abs() < 1e-10, "{a}");
    }

    #[test]
    fn full_circle_integral_of_inverse_square() {
        for (a, r) in [(1.0, 0.5), (0.3, 0.7)] {
            let (s, len) = sphere_partial(2, a, r, f64::INFINITY);
            assert!((s - 2.0 * PI * r / (a * a - r * r).abs()).abs() < 1e-12);
            assert!((len - 2.0 * PI * r).abs() < 1e-12);
            let (s3, area) = sphere_partial(3, a, r, f64::INFINITY);
            let want = 2.0 * PI * r / a * (1.0 / (a - r).abs() - 1.0 / (a + r));
            assert!((s3 - want).abs() < 1e-12 * want, "{s3}");
            assert!((area - 4.0 * PI * r * r).abs() < 1e-12);
        }
    }

    #[test]
    fn partial_circle_matches_quadrature() {
        let (a, r, d) = (1.0, 0.8, 0.5);
        let (s, len) = sphere_partial(2, a, r, d);
        let tm = ((a * a + r * r - d * d) / (2.0 * a * r)).acos();
        let direct = crate::quad::adaptive(-tm, tm, 1e-14, |t| r / (a * a + r * r - 2.0 * a * r * t.cos()));
        assert!((s - direct).abs() < 1e-10 * direct);
        assert!((len - 2.0 * r * tm).abs() < 1e-14);
    }
}
