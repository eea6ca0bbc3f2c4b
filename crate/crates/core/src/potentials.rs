//! Nonnegative potentials V, their truncations min(V, k), and the integral
//! conditions that decide admissibility and boundary regularity.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::domain::{BallDomain, PolarGrid};
use crate::error::{Error, Result};
use crate::kernels::Field;
use crate::lab::Lab;
use crate::local::{graded, polar_around_cut, sphere_partial, Shell};
use crate::par;
use crate::verdict::{self, DivergenceVerdict, GEOMETRIC_RATIO};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialKind {
    Bounded {
        c: f64,
    },
    /// c δ^{-α}
    DistancePower {
        c: f64,
        alpha: f64,
    },
    /// v(δ) by linear interpolation in a table sorted by δ; below the first
    /// entry the table is continued as a power law through its first two
    /// points.
    RadialProfile {
        delta: Vec<f64>,
        values: Vec<f64>,
    },
    /// c |x - y0|^{-α} inside the cone {δ ≥ ε |x - y0|}, zero outside.
    /// y0 = R (cos θ0, sin θ0).
    ConeSingular {
        theta0: f64,
        aperture: f64,
        c: f64,
        alpha: f64,
    },
    #[serde(skip)]
    GridSampled {
        field: Field,
    },
    Truncated {
        base: Box<PotentialKind>,
        k: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Potential {
    pub kind: PotentialKind,
    pub label: String,
}

impl Potential {
    pub fn zero() -> Self {
        Self::bounded(0.0)
    }

    pub fn bounded(c: f64) -> Self {
        Potential { kind: PotentialKind::Bounded { c }, label: format!("bounded({c})") }
    }

    pub fn distance_power(c: f64, alpha: f64) -> Self {
        Potential { kind: PotentialKind::DistancePower { c, alpha }, label: format!("distpow({c},{alpha})") }
    }

    pub fn radial_profile(delta: Vec<f64>, values: Vec<f64>, label: &str) -> Result<Self> {
        if delta.len() < 2 || delta.len() != values.len() {
            return Err(Error::domain("radial profile needs at least two (delta, value) pairs"));
        }
        if delta.windows(2).any(|w| w[1] <= w[0]) || delta[0] <= 0.0 {
            return Err(Error::domain("radial profile deltas must be positive and increasing"));
        }
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::domain("radial profile values must be finite and nonnegative"));
        }
        Ok(Potential { kind: PotentialKind::RadialProfile { delta, values }, label: label.into() })
    }

    pub fn cone_singular(theta0: f64, aperture: f64, c: f64, alpha: f64) -> Result<Self> {
        if !(aperture > 0.0 && aperture < 1.0) {
            return Err(Error::domain(format!("cone aperture {aperture} outside (0, 1)")));
        }
        Ok(Potential {
            kind: PotentialKind::ConeSingular { theta0, aperture, c, alpha },
            label: format!("cone({theta0:.4},{aperture},{c},{alpha})"),
        })
    }

    pub fn grid_sampled(field: Field, label: &str) -> Result<Self> {
        if field.values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::domain("sampled potential must be finite and nonnegative"));
        }
        Ok(Potential { kind: PotentialKind::GridSampled { field }, label: label.into() })
    }

    pub fn with_label(mut self, label: &str) -> Self {
        self.label = label.into();
        self
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, PotentialKind::Bounded { c } if c == 0.0)
    }

    /// Depends on x only through δ(x).
    pub fn is_radial(&self) -> bool {
        kind_is_radial(&self.kind)
    }

    /// Finite everywhere on the closed domain.
    pub fn is_bounded(&self) -> bool {
        kind_is_bounded(&self.kind)
    }

    /// V as a function of δ, for radial kinds.
    pub fn eval_delta(&self, delta: f64) -> Option<f64> {
        kind_eval_delta(&self.kind, delta)
    }

    /// V(x) without boundary checks (N = 2 coordinates or |x| for N = 3).
    pub fn eval_unchecked(&self, domain: &BallDomain, x: &[f64]) -> f64 {
        kind_eval(&self.kind, domain, x)
    }

    pub fn evaluate(&self, domain: &BallDomain, x: &[f64]) -> Result<f64> {
        let r = domain.check_point(x)?;
        if r >= domain.radius && !self.is_bounded() {
            return Err(Error::domain("unbounded potential evaluated on the boundary"));
        }
        Ok(self.eval_unchecked(domain, x).max(0.0))
    }

    pub fn truncate(&self, k: f64) -> Result<Potential> {
        if !(k > 0.0) {
            return Err(Error::domain(format!("truncation level {k} must be positive")));
        }
        let kind = match &self.kind {
            PotentialKind::Bounded { c } => PotentialKind::Bounded { c: c.min(k) },
            PotentialKind::Truncated { base, k: k0 } => PotentialKind::Truncated { base: base.clone(), k: k0.min(k) },
            other => PotentialKind::Truncated { base: Box::new(other.clone()), k },
        };
        Ok(Potential { kind, label: format!("min({},{k})", self.label) })
    }

    pub fn scaled(&self, f: f64) -> Potential {
        Potential { kind: scale_kind(&self.kind, f), label: format!("{}*{f}", self.label) }
    }

    /// Values at grid nodes; the boundary ring is set to 0 (it never enters
    /// the interior equations).
    pub fn sample(&self, grid: &PolarGrid) -> Vec<f64> {
        let d = grid.domain;
        par::map_range(grid.len(), |n| {
            if grid.is_boundary(n) {
                0.0
            } else if let Some(x) = self.eval_delta(grid.delta_of(n)) {
                // exact ring constancy keeps radial potentials on the direct path
                x.max(0.0)
            } else {
                self.eval_unchecked(&d, &grid.coords(n)).max(0.0)
            }
        })
    }

    /// sup over interior nodes of δ² V.
    pub fn sup_delta2(&self, grid: &PolarGrid) -> f64 {
        let v = self.sample(grid);
        (0..grid.len())
            .filter(|&n| !grid.is_boundary(n))
            .map(|n| grid.delta_of(n).powi(2) * v[n])
            .fold(0.0, f64::max)
    }

    /// Directions (absolute angles) of rays from `c` along which V jumps.
    pub fn ray_breaks(&self, domain: &BallDomain, c: [f64; 2]) -> Vec<f64> {
        let mut out = vec![];
        collect_breaks(&self.kind, domain, c, &mut out);
        out
    }

    /// Directions from `c` enclosing the part of supp V with δ < delta_hi,
    /// when that part is a small set seen from far away.
    pub fn support_breaks(&self, domain: &BallDomain, c: [f64; 2], delta_hi: f64) -> Vec<f64> {
        match base_kind(&self.kind) {
            PotentialKind::ConeSingular { theta0, aperture, .. } if delta_hi.is_finite() => {
                let y0 = [domain.radius * theta0.cos(), domain.radius * theta0.sin()];
                let dist = (y0[0] - c[0]).hypot(y0[1] - c[1]);
                let reach = delta_hi / aperture;
                if dist <= 1e-12 * domain.radius || reach >= dist {
                    return vec![];
                }
                let psi = (y0[1] - c[1]).atan2(y0[0] - c[0]);
                let half = (reach / dist).asin();
                vec![psi - half, psi, psi + half]
            }
            _ => vec![],
        }
    }

    /// ρ in (a, b) where V jumps along the ray c + ρe.
    pub fn ray_cuts(&self, domain: &BallDomain, c: [f64; 2], e: [f64; 2], a: f64, b: f64) -> Vec<f64> {
        let PotentialKind::ConeSingular { theta0, aperture, .. } = base_kind(&self.kind) else {
            return vec![];
        };
        let rr = domain.radius;
        let y0 = [rr * theta0.cos(), rr * theta0.sin()];
        let h = |rho: f64| {
            let p = [c[0] + rho * e[0], c[1] + rho * e[1]];
            (rr - p[0].hypot(p[1])) - aperture * (p[0] - y0[0]).hypot(p[1] - y0[1])
        };
        const SAMPLES: usize = 64;
        let mut out = vec![];
        let mut lo = a;
        let mut hlo = h(a);
        for i in 1..=SAMPLES {
            let hi = a + (b - a) * i as f64 / SAMPLES as f64;
            let hhi = h(hi);
            if (hlo > 0.0) != (hhi > 0.0) {
                let (mut l, mut u) = (lo, hi);
                for _ in 0..60 {
                    let m = 0.5 * (l + u);
                    if (h(m) > 0.0) == (hlo > 0.0) {
                        l = m;
                    } else {
                        u = m;
                    }
                }
                out.push(0.5 * (l + u));
            }
            lo = hi;
            hlo = hhi;
        }
        out
    }

    /// ∫ over the shell of f(x, ρ) in polar coordinates around c, with the
    /// jumps of V resolved.
    pub fn polar_integral<F>(&self, domain: &BallDomain, c: [f64; 2], sh: Shell, f: F) -> f64
    where
        F: Fn([f64; 2], f64) -> f64,
    {
        let mut breaks = self.ray_breaks(domain, c);
        breaks.extend(self.support_breaks(domain, c, sh.delta_hi));
        polar_around_cut(domain.radius, c, sh, &breaks, |e, a, b| self.ray_cuts(domain, c, e, a, b), f)
    }
}

fn base_kind(k: &PotentialKind) -> &PotentialKind {
    match k {
        PotentialKind::Truncated { base, .. } => base_kind(base),
        other => other,
    }
}

fn kind_is_radial(k: &PotentialKind) -> bool {
    match k {
        PotentialKind::Bounded { .. } | PotentialKind::DistancePower { .. } | PotentialKind::RadialProfile { .. } => true,
        PotentialKind::Truncated { base, .. } => kind_is_radial(base),
        _ => false,
    }
}

fn kind_is_bounded(k: &PotentialKind) -> bool {
    match k {
        PotentialKind::Bounded { .. } | PotentialKind::GridSampled { .. } | PotentialKind::Truncated { .. } => true,
        PotentialKind::DistancePower { c, alpha } => *c == 0.0 || *alpha <= 0.0,
        PotentialKind::RadialProfile { delta, values } => {
            // bounded unless the power-law continuation blows up
            let (d0, d1, v0, v1) = (delta[0], delta[1], values[0], values[1]);
            !(v0 > 0.0 && v1 > 0.0 && v0 > v1 && d1 > d0)
        }
        PotentialKind::ConeSingular { c, alpha, .. } => *c == 0.0 || *alpha <= 0.0,
    }
}

fn profile_eval(delta: &[f64], values: &[f64], t: f64) -> f64 {
    let n = delta.len();
    if t <= delta[0] {
        let (d0, d1, v0, v1) = (delta[0], delta[1], values[0], values[1]);
        if v0 > 0.0 && v1 > 0.0 {
            let p = (v0 / v1).ln() / (d1 / d0).ln();
            return v0 * (d0 / t.max(1e-300)).powf(p);
        }
        return v0;
    }
    if t >= delta[n - 1] {
        return values[n - 1];
    }
    let i = delta.partition_point(|&x| x <= t) - 1;
    let w = (t - delta[i]) / (delta[i + 1] - delta[i]);
    (1.0 - w) * values[i] + w * values[i + 1]
}

fn kind_eval_delta(k: &PotentialKind, t: f64) -> Option<f64> {
    match k {
        PotentialKind::Bounded { c } => Some(*c),
        PotentialKind::DistancePower { c, alpha } => Some(if *c == 0.0 { 0.0 } else { c * t.powf(-alpha) }),
        PotentialKind::RadialProfile { delta, values } => Some(profile_eval(delta, values, t)),
        PotentialKind::Truncated { base, k } => kind_eval_delta(base, t).map(|v| v.min(*k)),
        _ => None,
    }
}

fn kind_eval(k: &PotentialKind, d: &BallDomain, x: &[f64]) -> f64 {
    let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
    let delta = d.radius - r;
    match k {
        PotentialKind::ConeSingular { theta0, aperture, c, alpha } => {
            if x.len() != 2 {
                return 0.0;
            }
            let y0 = [d.radius * theta0.cos(), d.radius * theta0.sin()];
            let rho = ((x[0] - y0[0]).powi(2) + (x[1] - y0[1]).powi(2)).sqrt();
            if delta >= aperture * rho && rho > 0.0 {
                c * rho.powf(-alpha)
            } else {
                0.0
            }
        }
        PotentialKind::GridSampled { field } => {
            if x.len() == 2 {
                field.interpolate_polar(r, x[1].atan2(x[0]))
            } else {
                field.interpolate_polar(r, 0.0)
            }
        }
        PotentialKind::Truncated { base, k } => kind_eval(base, d, x).min(*k),
        other => kind_eval_delta(other, delta).unwrap_or(0.0),
    }
}

fn scale_kind(k: &PotentialKind, f: f64) -> PotentialKind {
    match k {
        PotentialKind::Bounded { c } => PotentialKind::Bounded { c: c * f },
        PotentialKind::DistancePower { c, alpha } => PotentialKind::DistancePower { c: c * f, alpha: *alpha },
        PotentialKind::RadialProfile { delta, values } => PotentialKind::RadialProfile {
            delta: delta.clone(),
            values: values.iter().map(|v| v * f).collect(),
        },
        PotentialKind::ConeSingular { theta0, aperture, c, alpha } => PotentialKind::ConeSingular {
            theta0: *theta0,
            aperture: *aperture,
            c: c * f,
            alpha: *alpha,
        },
        PotentialKind::GridSampled { field } => PotentialKind::GridSampled { field: field.map(|v| v * f) },
        PotentialKind::Truncated { base, k } => PotentialKind::Truncated { base: Box::new(scale_kind(base, f)), k: k * f },
    }
}

fn collect_breaks(k: &PotentialKind, d: &BallDomain, c: [f64; 2], out: &mut Vec<f64>) {
    match k {
        PotentialKind::ConeSingular { theta0, aperture, .. } => {
            let y0 = [d.radius * theta0.cos(), d.radius * theta0.sin()];
            if (c[0] - y0[0]).hypot(c[1] - y0[1]) < 1e-12 * d.radius {
                let inward = theta0 + PI;
                let a = aperture.acos();
                out.push(inward - a);
                out.push(inward + a);
            }
        }
        PotentialKind::Truncated { base, .. } => collect_breaks(base, d, c, out),
        _ => {}
    }
}

/// Number of dyadic cutoff levels used by every classifier.
pub const LEVELS: usize = 11;
/// Inner δ cutoff standing in for 0 in tail integrals.
pub const TAIL_FLOOR: f64 = 1e-9;

/// Verdict on ∫_0^s t v(t) dt.
pub fn distance_moment<F: Fn(f64) -> f64>(v: F, s: f64) -> Result<DivergenceVerdict> {
    if !(s > 0.0) {
        return Err(Error::domain("t1 upper limit must be positive"));
    }
    let cut = verdict::dyadic_cutoffs(0.5 * s, LEVELS);
    let mut samples = Vec::with_capacity(LEVELS);
    let mut acc = 0.0;
    let mut hi = s;
    for &e in &cut {
        acc += graded(e, hi, e, hi, |t| t * v(t));
        samples.push((e, acc));
        hi = e;
    }
    verdict::classify(samples)
}

/// Nested δ shells {ε_j < δ ≤ ε_{j-1}} (first shell δ > ε_0) around the
/// boundary node `j_y`, integrated and accumulated into cutoff samples.
/// `radial(r)` is the integrand after exact integration over the sphere
/// |x| = r (radial V); `local(x, ρ)` is the pointwise integrand used
/// otherwise.
pub(crate) fn delta_shell_samples<R, L>(lab: &Lab, v: &Potential, j_y: usize, radial: R, local: L) -> Result<Vec<(f64, f64)>>
where
    R: Fn(f64) -> f64,
    L: Fn([f64; 2], f64) -> f64,
{
    let d = lab.domain();
    let rr = d.radius;
    let cut = verdict::dyadic_cutoffs(0.25 * rr, LEVELS);
    let mut samples = Vec::with_capacity(LEVELS);
    let mut acc = 0.0;
    let mut hi = f64::INFINITY;
    if v.is_radial() {
        for &e in &cut {
            let top = hi.min(rr);
            acc += graded(e, top, e, if hi.is_finite() { hi } else { rr }, |t| radial(rr - t));
            samples.push((e, acc));
            hi = e;
        }
    } else {
        if d.dimension != 2 {
            return Err(Error::domain("non-radial potentials are supported on the disk only"));
        }
        let y = lab.grid.boundary_point(j_y);
        let c = [y[0], y[1]];
        for &e in &cut {
            let sh = Shell { delta_lo: e, delta_hi: hi, rho_lo: 0.0, rho_hi: f64::INFINITY };
            acc += v.polar_integral(&d, c, sh, &local);
            samples.push((e, acc));
            hi = e;
        }
    }
    Ok(samples)
}

/// Verdict and value of the boundary kernel integral at node `j_y`, written
/// after exchanging the order of integration as
/// ∫ V φ² (|x - y|^{-N} - D^{-N}) / N dx with inner cutoff in δ.
pub fn boundary_kernel_integral(v: &Potential, lab: &Lab, j_y: usize) -> Result<(DivergenceVerdict, Option<f64>)> {
    let d = lab.domain();
    let cut = verdict::dyadic_cutoffs(0.25 * d.radius, LEVELS);
    if v.is_zero() {
        return Ok((DivergenceVerdict::zero(&cut), Some(0.0)));
    }
    let n = d.dimension;
    let nf = n as f64;
    let dd = d.diameter().powi(n as i32);
    let radial = |r: f64| {
        let (s, area) = sphere_partial(n, d.radius, r, f64::INFINITY);
        let vv = v.eval_delta(d.radius - r).unwrap_or(0.0);
        vv * lab.phi(r).powi(2) * (s - area / dd) / nf
    };
    let local = |x: [f64; 2], rho: f64| {
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        v.eval_unchecked(&d, &x) * lab.phi(r).powi(2) * (rho.powi(-2) - 1.0 / dd) / nf
    };
    let samples = delta_shell_samples(lab, v, j_y, radial, local)?;
    let verdict = verdict::classify(samples)?;
    let value = verdict.limit;
    Ok((verdict, value))
}

/// sup over base points of a tail integral, for a dyadic schedule of radii.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UniformTail {
    pub radii: Vec<f64>,
    pub sup_tail: Vec<f64>,
    /// Boundary node index attaining each sup.
    pub argmax: Vec<usize>,
    /// Tails tend to 0 geometrically.
    pub vanishes: bool,
}

fn tail_vanishes(t: &[f64]) -> bool {
    let floor = 1e-13 * t.iter().fold(0.0f64, |m, v| m.max(*v)) + 1e-300;
    let n = t.len();
    if t[n - 1] <= floor {
        return true;
    }
    t[n - 5..].windows(2).all(|w| w[1] <= floor || w[1] <= GEOMETRIC_RATIO * w[0])
}

fn tail_radii(rr: f64) -> Vec<f64> {
    verdict::dyadic_cutoffs(0.25 * rr, LEVELS)
}

fn sup_over(vals: Vec<Vec<f64>>, nodes: &[usize]) -> (Vec<f64>, Vec<usize>) {
    let levels = vals.first().map(|v| v.len()).unwrap_or(0);
    let mut sup = vec![0.0; levels];
    let mut arg = vec![nodes.first().copied().unwrap_or(0); levels];
    for (row, &node) in vals.iter().zip(nodes) {
        for l in 0..levels {
            if row[l] > sup[l] {
                sup[l] = row[l];
                arg[l] = node;
            }
        }
    }
    (sup, arg)
}

/// Tails ∫_{|x-y|<d} V φ² (|x-y|^{-N} - d^{-N}) / N dx, maximised
/// over boundary nodes y.
pub fn uniform_kernel_tail(v: &Potential, lab: &Lab) -> Result<UniformTail> {
    let d = lab.domain();
    let rr = d.radius;
    let radii = tail_radii(rr);
    if v.is_zero() {
        let n = radii.len();
        return Ok(UniformTail { radii, sup_tail: vec![0.0; n], argmax: vec![0; n], vanishes: true });
    }
    let n = d.dimension;
    let nf = n as f64;
    let eta = TAIL_FLOOR * rr;
    let nodes: Vec<usize> = if v.is_radial() { vec![0] } else { (0..lab.grid.k()).collect() };
    if !v.is_radial() && n != 2 {
        return Err(Error::domain("non-radial potentials are supported on the disk only"));
    }
    let vals = par::map_slice(&nodes, |&j| {
        radii
            .iter()
            .map(|&dr| {
                let dn = dr.powi(n as i32);
                if v.is_radial() {
                    graded(eta, dr, eta, 1e-6 * dr, |t| {
                        let r = rr - t;
                        let (s, area) = sphere_partial(n, rr, r, dr);
                        v.eval_delta(t).unwrap_or(0.0) * lab.phi(r).powi(2) * (s - area / dn) / nf
                    })
                } else {
                    let y = lab.grid.boundary_point(j);
                    let c = [y[0], y[1]];
                    let sh = Shell { delta_lo: eta, delta_hi: f64::INFINITY, rho_lo: 0.0, rho_hi: dr };
                    v.polar_integral(&d, c, sh, |x, rho| {
                        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
                        v.eval_unchecked(&d, &x) * lab.phi(r).powi(2) * (rho.powi(-2) - 1.0 / dn) / nf
                    })
                }
            })
            .collect::<Vec<f64>>()
    });
    let (sup_tail, argmax) = sup_over(vals, &nodes);
    let vanishes = tail_vanishes(&sup_tail);
    Ok(UniformTail { radii, sup_tail, argmax, vanishes })
}

/// Levels ε of φ over which the level-set tail supremum is taken.
pub fn level_schedule() -> Vec<f64> {
    verdict::dyadic_cutoffs(0.25, 32)
}

/// Radius a with φ(a) = level (φ is decreasing from φ(0) = 1).
pub fn level_radius(lab: &Lab, level: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, lab.domain().radius);
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if lab.phi(m) > level {
            lo = m;
        } else {
            hi = m;
        }
    }
    0.5 * (lo + hi)
}

/// Sufficient level-set form of the uniform tail condition: tails
/// ∫_{B_d(z)} V (φ - ε)_+² (|x-z|^{-N} - d^{-N}) / N dx maximised over the
/// level sets z ∈ {φ = ε} and over ε in `level_schedule()`. Non-radial
/// potentials use every fourth boundary direction for z.
pub fn level_set_tail(v: &Potential, lab: &Lab) -> Result<UniformTail> {
    let d = lab.domain();
    let rr = d.radius;
    let radii = tail_radii(rr);
    let n = d.dimension;
    if v.is_zero() {
        let l = radii.len();
        return Ok(UniformTail { radii, sup_tail: vec![0.0; l], argmax: vec![0; l], vanishes: true });
    }
    if !v.is_radial() && n != 2 {
        return Err(Error::domain("non-radial potentials are supported on the disk only"));
    }
    let nf = n as f64;
    let levels = level_schedule();
    let dirs: Vec<usize> = if v.is_radial() { vec![0] } else { (0..lab.grid.k()).step_by(4).collect() };
    let jobs: Vec<(usize, f64)> = dirs.iter().flat_map(|&j| levels.iter().map(move |&e| (j, e))).collect();
    let vals = par::map_slice(&jobs, |&(j, eps)| {
        let a = level_radius(lab, eps);
        radii
            .iter()
            .map(|&dr| {
                let dn = dr.powi(n as i32);
                if v.is_radial() {
                    let lo = (a - dr).max(0.0);
                    graded(lo, a, 1e-6 * dr, a - lo, |r| {
                        let w = (lab.phi(r) - eps).max(0.0);
                        let (s, area) = sphere_partial(n, a, r, dr);
                        v.eval_delta(rr - r).unwrap_or(0.0) * w * w * (s - area / dn) / nf
                    })
                } else {
                    let t = lab.grid.angular_nodes[j];
                    let c = [a * t.cos(), a * t.sin()];
                    let sh = Shell { delta_lo: 0.0, delta_hi: f64::INFINITY, rho_lo: 0.0, rho_hi: dr };
                    v.polar_integral(&d, c, sh, |x, rho| {
                        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
                        let w = (lab.phi(r) - eps).max(0.0);
                        v.eval_unchecked(&d, &x) * w * w * (rho.powi(-2) - 1.0 / dn) / nf
                    })
                }
            })
            .collect::<Vec<f64>>()
    });
    let nodes: Vec<usize> = jobs.iter().map(|j| j.0).collect();
    let (sup_tail, argmax) = sup_over(vals, &nodes);
    let vanishes = tail_vanishes(&sup_tail);
    Ok(UniformTail { radii, sup_tail, argmax, vanishes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verdict::Classification;

    #[test]
    fn evaluate_examples() {
        let d = BallDomain::unit_disk();
        assert_eq!(Potential::bounded(3.0).evaluate(&d, &[0.2, 0.1]).unwrap(), 3.0);
        let v = Potential::distance_power(1.0, 2.0);
        assert!((v.evaluate(&d, &[0.5, 0.0]).unwrap() - 4.0).abs() < 1e-12);
        assert!(v.evaluate(&d, &[1.0, 0.0]).is_err());
        let cone = Potential::cone_singular(0.0, 0.5, 1.0, 2.0).unwrap();
        assert_eq!(cone.evaluate(&d, &[0.0, 0.9]).unwrap(), 0.0);
        assert!(cone.evaluate(&d, &[0.5, 0.0]).unwrap() > 0.0);
    }

    #[test]
    fn truncation_lattice() {
        let d = BallDomain::unit_disk();
        let v = Potential::distance_power(1.0, 2.0);
        let t = v.truncate(16.0).unwrap();
        assert_eq!(t.evaluate(&d, &[0.9, 0.0]).unwrap(), 16.0);
        let tt = t.truncate(4.0).unwrap();
        let direct = v.truncate(4.0).unwrap();
        for x in [[0.1, 0.2], [0.7, 0.0], [0.0, -0.95]] {
            assert_eq!(tt.evaluate(&d, &x).unwrap(), direct.evaluate(&d, &x).unwrap());
        }
        assert!(matches!(Potential::bounded(3.0).truncate(10.0).unwrap().kind, PotentialKind::Bounded { c } if c == 3.0));
    }

    #[test]
    fn t1_examples() {
        assert_eq!(distance_moment(|t| t.powf(-1.5), 1.0).unwrap().classification, Classification::Convergent);
        assert_eq!(distance_moment(|t| t.powi(-2), 1.0).unwrap().classification, Classification::DivergentLog);
        assert_eq!(distance_moment(|_| 2.0, 1.0).unwrap().classification, Classification::Convergent);
    }
}
