//! Truncation-limit kernels, reduced measures and the vanishing set Sing_V:
//! two numerical detectors plus the cone, conical-kernel and path criteria.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::domain::dist;
use crate::error::{Error, Result};
use crate::kernels::{green_apply, poisson_kernel, BoundaryMeasure, Field};
use crate::lab::Lab;
use crate::local::{cos_mapped, graded};
use crate::operator;
use crate::par;
use crate::potentials::{Potential, LEVELS};
use crate::solver::{self, MeasureSolution};
use crate::verdict::{self, fit_limit, DivergenceVerdict};

/// Relative threshold below which a kernel limit counts as zero.
pub const SING_THRESHOLD: f64 = 1e-3;
/// Fourier modes used to recover boundary traces.
pub const TRACE_MODES: usize = 32;
/// Circles on which harmonic parts are sampled (fractions of R).
pub const TRACE_CIRCLES: [f64; 3] = [0.5, 0.7, 0.85];
const FIT_POINTS: usize = 5;

/// Mollification widths for kernel estimates, in boundary cells.
pub fn default_widths_cells() -> Vec<f64> {
    vec![4.0, 2.0, 1.0]
}

/// Fit u_k(x0) ≈ L + B k^{-p} on the last finite levels; returns (L, p).
pub fn k_limit(levels: &[f64], values: &[f64]) -> (f64, f64) {
    let finite: Vec<(f64, f64)> = levels.iter().zip(values).filter(|(k, _)| k.is_finite()).map(|(k, v)| (*k, *v)).collect();
    let n = finite.len();
    if n < FIT_POINTS {
        return (values[values.len() - 1], 0.0);
    }
    let tail = &finite[n - FIT_POINTS..];
    let range = tail[0].1 - tail[FIT_POINTS - 1].1;
    if range.abs() <= 1e-12 * tail[0].1.abs().max(1e-300) {
        return (tail[FIT_POINTS - 1].1, 0.0);
    }
    let x: Vec<f64> = tail.iter().map(|t| tail[0].0 / t.0).collect();
    let y: Vec<f64> = tail.iter().map(|t| t.1).collect();
    let (l, _, p, _) = fit_limit(&x, &y, 0.05, 4.0);
    (l, p)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelWidthTrace {
    pub width: f64,
    pub levels: Vec<f64>,
    pub values: Vec<f64>,
    pub k_limit: f64,
    pub k_exponent: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KvEstimate {
    pub y_theta: f64,
    pub x0: Vec<f64>,
    pub traces: Vec<KernelWidthTrace>,
    /// Richardson extrapolation of the k-limits to zero width.
    pub value: f64,
    /// Poisson kernel K(x0, y) for the same pair.
    pub poisson: f64,
}

fn eval_at(f: &Field, x0: &[f64]) -> f64 {
    let r = (x0[0] * x0[0] + x0[1] * x0[1]).sqrt();
    f.interpolate_polar(r, x0[1].atan2(x0[0]))
}

/// K_V(x0, y) as lim_k of truncated solutions with mollified δ_y data,
/// for several widths (arclength) extrapolated to width 0.
pub fn kv_kernel(lab: &Lab, v: &Potential, y_theta: f64, x0: &[f64], schedule: &[f64], widths: &[f64]) -> Result<KvEstimate> {
    let d = lab.domain();
    if d.dimension != 2 {
        return Err(Error::domain("kernel estimates need the disk"));
    }
    d.check_point(x0)?;
    if widths.is_empty() || schedule.is_empty() {
        return Err(Error::domain("empty schedule"));
    }
    let y = [d.radius * y_theta.cos(), d.radius * y_theta.sin()];
    let poisson = poisson_kernel(&d, x0, &y)?;
    let dirac = BoundaryMeasure::dirac(&lab.grid, y_theta, 1.0);
    let mut traces = Vec::with_capacity(widths.len());
    for &w in widths {
        let sol = solver::solve_measure(lab, v, &dirac, schedule, w)?;
        let values: Vec<f64> = sol.fields.iter().map(|f| eval_at(f, x0)).collect();
        let (l, p) = k_limit(&sol.levels, &values);
        traces.push(KernelWidthTrace { width: w, levels: sol.levels.clone(), values, k_limit: l, k_exponent: p });
    }
    let n = traces.len();
    let value = if n >= 2 {
        let (a, b) = (&traces[n - 2], &traces[n - 1]);
        let q = (a.width / b.width).powi(2);
        (q * b.k_limit - a.k_limit) / (q - 1.0)
    } else {
        traces[0].k_limit
    };
    Ok(KvEstimate { y_theta, x0: x0.to_vec(), traces, value, poisson })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    Singular,
    Regular,
    Inconclusive,
}

/// Verdict of a ratio limit against the threshold band [τ, 10τ].
fn membership(ratio_limit: f64, decreasing: bool) -> Membership {
    if ratio_limit < SING_THRESHOLD && decreasing {
        Membership::Singular
    } else if ratio_limit < 10.0 * SING_THRESHOLD {
        Membership::Inconclusive
    } else {
        Membership::Regular
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelDetection {
    pub membership: Membership,
    /// Extrapolated K_V(x0, y) / K(x0, y).
    pub ratio: f64,
    pub estimate: KvEstimate,
}

/// y ∈ Sing_V iff the extrapolated K_V(x0, y) is below τ K(x0, y) with a
/// decreasing trace in k.
pub fn sing_detect_kernel(lab: &Lab, v: &Potential, y_theta: f64, x0: &[f64]) -> Result<KernelDetection> {
    let widths: Vec<f64> = default_widths_cells().iter().map(|c| c * lab.grid.dtheta * lab.domain().radius).collect();
    let estimate = kv_kernel(lab, v, y_theta, x0, &solver::default_schedule(), &widths)?;
    let last = estimate.traces.last().unwrap();
    let finite: Vec<f64> = last.values.iter().zip(&last.levels).filter(|(_, k)| k.is_finite()).map(|(v, _)| *v).collect();
    let decreasing = finite.windows(2).all(|w| w[1] < w[0]);
    let ratio = estimate.value / estimate.poisson;
    Ok(KernelDetection { membership: membership(ratio, decreasing), ratio, estimate })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GreenRatioDetection {
    pub membership: Membership,
    /// (distance to y, g^V / g^0) along the radial segment toward y.
    pub samples: Vec<(f64, f64)>,
    pub limit: f64,
    pub exponent: f64,
    pub residual: f64,
}

/// Discrete Green function with pole at node `x0`: unit source at the
/// node, zero boundary values. Scale is arbitrary; use it in ratios.
pub fn green_with_pole(lab: &Lab, v: &[f64], x0: usize) -> Result<(Field, operator::SolveReport)> {
    let g = &lab.grid;
    if g.is_boundary(x0) {
        return Err(Error::domain("pole on the boundary"));
    }
    let mut f = vec![0.0; g.len()];
    f[x0] = 1.0;
    let (u, rep) = operator::solve(&lab.op, v, &f, 1e-10)?;
    Ok((Field::new(g.clone(), u)?, rep))
}

/// Ratio g^V_{x0} / g^0_{x0} approaching y along the radial segment, with
/// the untruncated grid potential; the limit is fitted as L + B δ^q.
pub fn sing_detect_green_ratio(lab: &Lab, v: &Potential, j_y: usize, x0: usize) -> Result<GreenRatioDetection> {
    let g = &lab.grid;
    let d = g.domain;
    if d.dimension != 2 {
        return Err(Error::domain("green ratio detector needs the disk"));
    }
    let vs = v.sample(g);
    let (gv, rep) = green_with_pole(lab, &vs, x0)?;
    let (g0, _) = green_with_pole(lab, &vec![0.0; g.len()], x0)?;
    let theta = g.angular_nodes[j_y];
    let cut = verdict::dyadic_cutoffs(0.5 * d.radius, LEVELS);
    let mut samples = Vec::with_capacity(cut.len());
    for &delta in &cut {
        let r = d.radius - delta;
        samples.push((delta, gv.interpolate_polar(r, theta) / g0.interpolate_polar(r, theta)));
    }
    let tail = &samples[samples.len() - FIT_POINTS..];
    let x: Vec<f64> = tail.iter().map(|s| s.0 / tail[0].0).collect();
    let y: Vec<f64> = tail.iter().map(|s| s.1).collect();
    let spread = (y[0] - y[FIT_POINTS - 1]).abs();
    let (limit, exponent) = if spread <= 1e-9 * y[0].abs() {
        (y[FIT_POINTS - 1], 0.0)
    } else {
        let (l, _, p, _) = fit_limit(&x, &y, 0.05, 4.0);
        (l, p)
    };
    let decreasing = samples.windows(2).all(|w| w[1].1 < w[0].1);
    Ok(GreenRatioDetection { membership: membership(limit, decreasing), samples, limit, exponent, residual: rep.residual })
}

/// Recovery of boundary mass coefficients from discrete-harmonic fields.
/// Each angular mode of a discrete-harmonic function decays inward along
/// its own radial profile φ_n (the grid counterpart of (r/R)^n), computed
/// once from a single harmonic solve.
#[derive(Debug, Clone)]
pub struct HarmonicRecovery {
    rings: Vec<usize>,
    /// φ_n at each ring of `rings`, n = 0..=TRACE_MODES.
    profiles: Vec<Vec<f64>>,
}

fn ring_dft(w: &Field, i: usize, nmax: usize) -> Vec<(f64, f64)> {
    let g = &w.grid;
    (0..=nmax)
        .map(|n| {
            let nf = n as f64;
            let (mut re, mut im) = (0.0, 0.0);
            for j in 0..g.k() {
                let t = g.angular_nodes[j];
                let val = w.at(i, j);
                re += val * (nf * t).cos();
                im -= val * (nf * t).sin();
            }
            (re, im)
        })
        .collect()
}

impl HarmonicRecovery {
    pub fn new(lab: &Lab) -> Result<Self> {
        let g = &lab.grid;
        if g.domain.dimension != 2 {
            return Err(Error::domain("harmonic recovery needs the disk"));
        }
        if g.k() <= 2 * TRACE_MODES {
            return Err(Error::domain("too few angular nodes for the trace modes"));
        }
        let rr = g.domain.radius;
        let rings: Vec<usize> = TRACE_CIRCLES
            .iter()
            .map(|c| {
                let target = c * rr;
                (1..g.m()).min_by(|&a, &b| (g.radial_nodes[a] - target).abs().total_cmp(&(g.radial_nodes[b] - target).abs())).unwrap()
            })
            .collect();
        let probe = BoundaryMeasure::from_density(g, |t| (0..=TRACE_MODES).map(|n| (n as f64 * t).cos()).sum());
        let h = solver::discrete_harmonic(lab, &probe)?;
        let edge = ring_dft(&h, g.m(), TRACE_MODES);
        let profiles = rings
            .iter()
            .map(|&i| ring_dft(&h, i, TRACE_MODES).iter().zip(&edge).map(|(a, b)| a.0 / b.0).collect())
            .collect();
        Ok(HarmonicRecovery { rings, profiles })
    }

    /// Mass coefficients ∫ e^{-inθ} dν, n = 0..=TRACE_MODES, of the boundary
    /// data of a field discrete-harmonic inside the outermost circle. Returns
    /// the outermost-circle values and the spread against the other circles.
    pub fn coefficients(&self, w: &Field) -> (Vec<(f64, f64)>, Vec<f64>) {
        let g = &w.grid;
        let s = 2.0 * PI * g.domain.radius / g.k() as f64;
        let per_ring: Vec<Vec<(f64, f64)>> = self
            .rings
            .iter()
            .zip(&self.profiles)
            .map(|(&i, phi)| ring_dft(w, i, TRACE_MODES).iter().zip(phi).map(|(c, p)| (c.0 * s / p, c.1 * s / p)).collect())
            .collect();
        let best = per_ring.last().unwrap().clone();
        let err = (0..=TRACE_MODES)
            .map(|n| per_ring.iter().map(|c| (c[n].0 - best[n].0).hypot(c[n].1 - best[n].1)).fold(0.0, f64::max))
            .collect();
        (best, err)
    }
}

/// Mass coefficients of a nodal boundary density, on the same footing as
/// `HarmonicRecovery::coefficients`.
pub fn nodal_coefficients(lab: &Lab, density: &[f64]) -> Vec<(f64, f64)> {
    let g = &lab.grid;
    let s = 2.0 * PI * g.domain.radius / g.k() as f64;
    (0..=TRACE_MODES)
        .map(|n| {
            let nf = n as f64;
            let (mut re, mut im) = (0.0, 0.0);
            for (j, &rho) in density.iter().enumerate() {
                let t = g.angular_nodes[j];
                re += rho * (nf * t).cos();
                im -= rho * (nf * t).sin();
            }
            (re * s, im * s)
        })
        .collect()
}

/// Fejér mean of a Fourier series with mass coefficients c_n, as a density
/// per unit arclength at the boundary nodes.
pub fn fejer_density(lab: &Lab, coeffs: &[(f64, f64)]) -> Vec<f64> {
    let g = &lab.grid;
    let rr = g.domain.radius;
    let nmax = coeffs.len() - 1;
    (0..g.k())
        .map(|j| {
            let t = g.angular_nodes[j];
            let mut s = coeffs[0].0;
            for (n, &(re, im)) in coeffs.iter().enumerate().skip(1) {
                let w = 1.0 - n as f64 / (nmax + 1) as f64;
                let nf = n as f64;
                s += 2.0 * w * (re * (nf * t).cos() - im * (nf * t).sin());
            }
            s / (2.0 * PI * rr)
        })
        .collect()
}

/// η cutoffs for the boundary layer excluded from G[Vv]: 0.1 R 2^{-j/2}
/// down to 8 boundary cells.
pub fn layer_cutoffs(lab: &Lab) -> Vec<f64> {
    let g = &lab.grid;
    let h = g.domain.radius - g.radial_nodes[g.m() - 1];
    (0..80).map(|j| 0.1 * g.domain.radius * 2f64.powf(-0.5 * j as f64)).take_while(|&e| e >= 8.0 * h).collect()
}

/// Smooth cutoff: 0 for δ ≤ η, 1 for δ ≥ 2η.
fn layer_ramp(delta: f64, eta: f64) -> f64 {
    let t = (delta / eta - 1.0).clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Extrapolation model for η-traces m(η), x = η/η_0. `Continuum` is
/// L + B x^p + B' x^{2p}. `Layer` is L + B x^p + C x^{-q}: the extra term is
/// the discrete singular branch that the untruncated grid potential leaves
/// next to the boundary when V h² is of order one; it vanishes under
/// refinement at fixed η.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerModel {
    Constant,
    Continuum,
    Layer,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LayerFit {
    pub model: LayerModel,
    pub p: f64,
    pub q: f64,
    pub limit: f64,
    pub rms: f64,
}

/// Layer model needs this much smaller an rms to be preferred.
const LAYER_EVIDENCE: f64 = 10.0;
/// Points kept in the short window used for the error estimate.
const SHORT_WINDOW: usize = 12;

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let mut m = [[0.0; 4]; 3];
    for i in 0..3 {
        m[i][..3].copy_from_slice(&a[i]);
        m[i][3] = b[i];
    }
    for c in 0..3 {
        let piv = (c..3).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))?;
        if m[piv][c].abs() < 1e-300 {
            return None;
        }
        m.swap(c, piv);
        for r in 0..3 {
            if r != c {
                let f = m[r][c] / m[c][c];
                for k in c..4 {
                    m[r][k] -= f * m[c][k];
                }
            }
        }
    }
    Some([m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]])
}

fn columns(model: LayerModel, x: &[f64], p: f64, q: f64) -> Vec<[f64; 3]> {
    let xmin = x.iter().cloned().fold(f64::INFINITY, f64::min);
    x.iter()
        .map(|&t| match model {
            LayerModel::Layer => [1.0, t.powf(p), (xmin / t).powf(q)],
            _ => [1.0, t.powf(p), t.powf(2.0 * p)],
        })
        .collect()
}

/// Least-squares coefficients for fixed model and exponents; returns (L, rms).
fn layer_lsq(model: LayerModel, x: &[f64], y: &[f64], p: f64, q: f64) -> Option<(f64, f64)> {
    let cols = columns(model, x, p, q);
    let mut a = [[0.0; 3]; 3];
    let mut b = [0.0; 3];
    for (c, &yy) in cols.iter().zip(y) {
        for i in 0..3 {
            for j in 0..3 {
                a[i][j] += c[i] * c[j];
            }
            b[i] += c[i] * yy;
        }
    }
    let sol = solve3(a, b)?;
    let rss: f64 = cols.iter().zip(y).map(|(c, &yy)| (sol[0] * c[0] + sol[1] * c[1] + sol[2] * c[2] - yy).powi(2)).sum();
    Some((sol[0], (rss / y.len() as f64).sqrt()))
}

fn best_fit(model: LayerModel, x: &[f64], y: &[f64]) -> LayerFit {
    let mut best = LayerFit { model, p: 0.0, q: 0.0, limit: y[y.len() - 1], rms: f64::INFINITY };
    let qs: Vec<f64> = match model {
        LayerModel::Layer => (0..=35).map(|i| 0.25 + 0.05 * i as f64).collect(),
        _ => vec![0.0],
    };
    let p_hi = if model == LayerModel::Layer { 75 } else { 35 };
    for ip in 0..=p_hi {
        let p = 0.25 + 0.05 * ip as f64;
        for &q in &qs {
            if let Some((l, rms)) = layer_lsq(model, x, y, p, q) {
                if rms < best.rms {
                    best = LayerFit { model, p, q, limit: l, rms };
                }
            }
        }
    }
    best
}

/// Extrapolate m(η) to η → 0 (cutoffs decreasing).
pub fn fit_layer_trace(etas: &[f64], values: &[f64]) -> LayerFit {
    let last = values[values.len() - 1];
    let spread = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - values.iter().cloned().fold(f64::INFINITY, f64::min);
    if spread <= 1e-12 * last.abs().max(1e-300) || values.len() < 5 {
        return LayerFit { model: LayerModel::Constant, p: 0.0, q: 0.0, limit: last, rms: 0.0 };
    }
    let x: Vec<f64> = etas.iter().map(|e| e / etas[0]).collect();
    let cont = best_fit(LayerModel::Continuum, &x, values);
    let layer = best_fit(LayerModel::Layer, &x, values);
    if layer.rms * LAYER_EVIDENCE < cont.rms {
        layer
    } else {
        cont
    }
}

/// Limit of another trace on the same cutoffs under a fixed fit.
fn layer_limit(etas: &[f64], values: &[f64], fit: &LayerFit) -> f64 {
    if fit.model == LayerModel::Constant {
        return values[values.len() - 1];
    }
    let x: Vec<f64> = etas.iter().map(|e| e / etas[0]).collect();
    layer_lsq(fit.model, &x, values, fit.p, fit.q).map_or(values[values.len() - 1], |(l, _)| l)
}

/// Extrapolated limit and error bar: the change when only the last
/// `SHORT_WINDOW` cutoffs are used.
fn layer_extrapolate(etas: &[f64], values: &[f64]) -> (LayerFit, f64) {
    let fit = fit_layer_trace(etas, values);
    let n = etas.len();
    let err = if n > SHORT_WINDOW {
        (fit_layer_trace(&etas[n - SHORT_WINDOW..], &values[n - SHORT_WINDOW..]).limit - fit.limit).abs()
    } else {
        0.0
    };
    (fit, err)
}

#[derive(Debug, Clone)]
pub struct ReducedResult {
    pub solution: MeasureSolution,
    /// w_η = v + G[s_η V v] for the smallest η (s_η the layer cutoff).
    pub harmonic_part: Field,
    /// Fejér-smoothed density of μ* at boundary nodes.
    pub reduced_density: Vec<f64>,
    /// Same smoothing of the (mollified) data μ.
    pub data_density: Vec<f64>,
    /// Extrapolated coefficients ∫ e^{-inθ} dμ*, n = 0..=TRACE_MODES.
    pub coefficients: Vec<(f64, f64)>,
    /// Largest disagreement between circles, per mode (smallest η).
    pub coefficient_error: Vec<f64>,
    /// (η, μ*_η(∂Ω)).
    pub mass_trace: Vec<(f64, f64)>,
    pub fit: LayerFit,
    /// μ*(∂Ω) extrapolated to η → 0.
    pub reduced_mass: f64,
    /// Change of the extrapolated mass on the short cutoff window.
    pub mass_error: f64,
    pub data_mass: f64,
    pub mass_loss: f64,
    /// Relative discrete-Laplacian residual of w on nodes with δ > 2η.
    pub harmonic_residual: f64,
}

impl ReducedResult {
    /// μ* as a density measure (negative Fejér undershoot clipped).
    pub fn reduced_measure(&self) -> BoundaryMeasure {
        let density = self.reduced_density.iter().map(|x| x.max(0.0)).collect();
        BoundaryMeasure { atoms: vec![], density, nonnegative: true }
    }
}

/// Harmonic parts w_η = f − G[s_η (−Δ_h f)] of a field for the layer
/// cutoffs, with their recovered coefficients. For a solution of
/// (−Δ+V)v = 0 this is v + G[s_η V v]; for a supersolution it also removes
/// the interior Riesz mass. Shared by reduced measures and sweeping.
pub fn layer_traces(lab: &Lab, rec: &HarmonicRecovery, f: &Field) -> Result<Vec<(f64, Field, Vec<(f64, f64)>, Vec<f64>)>> {
    let g = &lab.grid;
    let lap = lab.op.apply_laplacian(&f.values);
    let etas = layer_cutoffs(lab);
    if etas.len() < 5 {
        return Err(Error::domain("grid too coarse for layer cutoffs"));
    }
    par::map_slice(&etas, |&eta| {
        let src: Vec<f64> = (0..g.len()).map(|n| if g.is_boundary(n) { 0.0 } else { layer_ramp(g.delta_of(n), eta) * lap[n] }).collect();
        let (gf, _) = green_apply(&lab.op, &Field::new(g.clone(), src)?)?;
        let w = f.zip(&gf, |a, b| a - b);
        let (c, e) = rec.coefficients(&w);
        Ok((eta, w, c, e))
    })
    .into_iter()
    .collect()
}

/// Boundary measure carried by the harmonic parts of `u`: coefficients
/// extrapolated to η → 0 with the fit of the mass trace.
pub struct LayerMeasure {
    pub harmonic_part: Field,
    pub coefficients: Vec<(f64, f64)>,
    pub coefficient_error: Vec<f64>,
    pub mass_trace: Vec<(f64, f64)>,
    pub fit: LayerFit,
    pub mass: f64,
    pub mass_error: f64,
    pub harmonic_residual: f64,
}

pub fn layer_measure(lab: &Lab, rec: &HarmonicRecovery, f: &Field) -> Result<LayerMeasure> {
    let g = &lab.grid;
    let traces = layer_traces(lab, rec, f)?;
    let etas: Vec<f64> = traces.iter().map(|t| t.0).collect();
    let masses: Vec<f64> = traces.iter().map(|t| t.2[0].0).collect();
    let (fit, mass_error) = layer_extrapolate(&etas, &masses);
    let coefficients: Vec<(f64, f64)> = (0..=TRACE_MODES)
        .map(|m| {
            let re: Vec<f64> = traces.iter().map(|t| t.2[m].0).collect();
            let im: Vec<f64> = traces.iter().map(|t| t.2[m].1).collect();
            (layer_limit(&etas, &re, &fit), layer_limit(&etas, &im, &fit))
        })
        .collect();
    let (eta, w, _, coefficient_error) = traces.into_iter().last().unwrap();
    let lw = lab.op.apply_laplacian(&w.values);
    let scale = w.interior_sup().max(1e-300);
    let lap = (0..g.len()).filter(|&n| !g.is_boundary(n) && g.delta_of(n) > 2.0 * eta).map(|n| lw[n].abs()).fold(0.0, f64::max);
    Ok(LayerMeasure {
        harmonic_part: w,
        coefficients,
        coefficient_error,
        mass_trace: etas.into_iter().zip(masses).collect(),
        fit,
        mass: fit.limit,
        mass_error,
        harmonic_residual: lap / scale,
    })
}

/// Reduced measure of μ: v = lim u_k (untruncated grid level), harmonic
/// parts w_η = v + G[s_η V v] recovered on interior circles, extrapolated
/// in η.
pub fn reduce(lab: &Lab, v: &Potential, mu: &BoundaryMeasure, schedule: &[f64], width: f64) -> Result<ReducedResult> {
    let rec = HarmonicRecovery::new(lab)?;
    reduce_with(lab, &rec, v, mu, schedule, width)
}

pub fn reduce_with(lab: &Lab, rec: &HarmonicRecovery, v: &Potential, mu: &BoundaryMeasure, schedule: &[f64], width: f64) -> Result<ReducedResult> {
    let sol = solver::solve_measure(lab, v, mu, schedule, width)?;
    let lm = layer_measure(lab, rec, &sol.limit)?;
    let data_coeffs = nodal_coefficients(lab, &sol.data.density);
    let data_mass = data_coeffs[0].0;
    Ok(ReducedResult {
        harmonic_part: lm.harmonic_part,
        reduced_density: fejer_density(lab, &lm.coefficients),
        data_density: fejer_density(lab, &data_coeffs),
        coefficients: lm.coefficients,
        coefficient_error: lm.coefficient_error,
        mass_trace: lm.mass_trace,
        fit: lm.fit,
        reduced_mass: lm.mass,
        mass_error: lm.mass_error,
        data_mass,
        mass_loss: data_mass - lm.mass,
        harmonic_residual: lm.harmonic_residual,
        solution: sol,
    })
}

/// C_{ε,y} = {x : δ(x) ≥ ε |x - y|}.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ConeRegion {
    pub theta: f64,
    pub aperture: f64,
}

impl ConeRegion {
    pub fn new(theta: f64, aperture: f64) -> Result<Self> {
        if !(aperture > 0.0 && aperture < 1.0) {
            return Err(Error::domain(format!("cone aperture {aperture} not in (0,1)")));
        }
        Ok(ConeRegion { theta, aperture })
    }

    /// Largest ρ on the ray at angle ψ from the inward normal.
    pub fn reach(&self, radius: f64, psi: f64) -> f64 {
        let e = self.aperture;
        (2.0 * radius * (psi.cos() - e) / (1.0 - e * e)).max(0.0)
    }
}

/// ∫_{C ∩ {|x-y| > η}} F(x, ρ) dx for the cutoff schedule, as cumulative
/// samples. N=2 uses polar coordinates at y; N=3 axisymmetric ones.
fn cone_samples<F>(lab: &Lab, cone: &ConeRegion, f: F) -> Vec<(f64, f64)>
where
    F: Fn(&[f64], f64) -> f64 + Sync,
{
    let d = lab.domain();
    let rr = d.radius;
    let n = d.dimension;
    let cut = verdict::dyadic_cutoffs(0.25 * rr, LEVELS);
    let half = cone.aperture.acos();
    let inward = cone.theta + PI;
    let y2 = [rr * cone.theta.cos(), rr * cone.theta.sin()];
    let shell = |lo: f64, hi: f64| -> f64 {
        cos_mapped(-half, half, 8, |psi| {
            let top = cone.reach(rr, psi).min(hi);
            if top <= lo {
                return 0.0;
            }
            graded(lo, top, lo, top - lo, |rho| {
                if n == 2 {
                    let a = inward + psi;
                    let x = [y2[0] + rho * a.cos(), y2[1] + rho * a.sin()];
                    f(&x, rho) * rho
                } else {
                    // axis along -e_1 from y = (R, 0, 0)
                    let x = [rr - rho * psi.cos(), rho * psi.sin(), 0.0];
                    f(&x, rho) * rho * rho * psi.sin().abs() * PI
                }
            })
        })
    };
    let mut acc = 0.0;
    let mut hi = f64::INFINITY;
    let mut out = Vec::with_capacity(cut.len());
    for &e in &cut {
        acc += shell(e, hi);
        out.push((e, acc));
        hi = e;
    }
    out
}

/// ∫_{C_{ε,y}} V |x - y|^{2-N} dx with inner cutoff in |x - y|.
pub fn cone_criterion(lab: &Lab, v: &Potential, cone: &ConeRegion) -> Result<DivergenceVerdict> {
    let d = lab.domain();
    if d.dimension == 3 && !v.is_radial() {
        return Err(Error::domain("N=3 cone integrals need a radial potential"));
    }
    let n = d.dimension as i32;
    let samples = cone_samples(lab, cone, |x, rho| v.eval_unchecked(&d, x) * rho.powi(2 - n));
    verdict::classify(samples)
}

/// ∫_{C_{ε,y}} K(x, y) V φ dx with inner cutoff in |x - y|.
pub fn tilde_zv(lab: &Lab, v: &Potential, cone: &ConeRegion) -> Result<DivergenceVerdict> {
    let d = lab.domain();
    if d.dimension == 3 && !v.is_radial() {
        return Err(Error::domain("N=3 cone integrals need a radial potential"));
    }
    let rr = d.radius;
    let n = d.dimension as i32;
    let area = d.unit_sphere_area();
    let samples = cone_samples(lab, cone, |x, rho| {
        let r2: f64 = x.iter().map(|c| c * c).sum();
        let kern = (rr * rr - r2) / (area * rr * rho.powi(n));
        kern * v.eval_unchecked(&d, x) * lab.phi(r2.sqrt())
    });
    verdict::classify(samples)
}

/// ∫_0^1 V(γ(t)) t dt with cutoffs t > η on a dyadic schedule from 1/2.
pub fn path_criterion<P>(lab: &Lab, v: &Potential, path: P) -> Result<DivergenceVerdict>
where
    P: Fn(f64) -> Vec<f64>,
{
    let d = lab.domain();
    let cut = verdict::dyadic_cutoffs(0.5, LEVELS);
    let integrand = |t: f64| v.eval_unchecked(&d, &path(t)) * t;
    let mut acc = graded(0.5, 1.0, 0.5, 0.5, integrand);
    let mut samples = vec![(cut[0], acc)];
    for w in cut.windows(2) {
        acc += graded(w[1], w[0], w[1], w[0] - w[1], integrand);
        samples.push((w[1], acc));
    }
    verdict::classify(samples)
}

/// Straight segment from the boundary point at angle θ toward the centre,
/// parametrised by distance.
pub fn radial_path(lab: &Lab, theta: f64) -> impl Fn(f64) -> Vec<f64> {
    let d = lab.domain();
    let rr = d.radius;
    let n = d.dimension;
    move |t: f64| {
        let r = (rr - t).max(0.0);
        if n == 2 {
            vec![r * theta.cos(), r * theta.sin()]
        } else {
            vec![r, 0.0, 0.0]
        }
    }
}

/// Distance from a node to a boundary point (for reporting).
pub fn node_distance(lab: &Lab, node: usize, y_theta: f64) -> f64 {
    let rr = lab.domain().radius;
    dist(&lab.grid.coords(node), &[rr * y_theta.cos(), rr * y_theta.sin()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::GridSpec;

    #[test]
    fn cone_reach_matches_definition() {
        let c = ConeRegion::new(0.3, 0.4).unwrap();
        for psi in [-1.0f64, -0.2, 0.0, 0.5, 1.1] {
            let rho = c.reach(1.0, psi);
            if rho > 0.0 {
                let a = c.theta + PI + psi;
                let x = [c.theta.cos() + rho * a.cos(), c.theta.sin() + rho * a.sin()];
                let delta = 1.0 - x[0].hypot(x[1]);
                assert!((delta - 0.4 * rho).abs() < 1e-12);
            }
        }
        assert!(ConeRegion::new(0.0, 1.0).is_err());
    }

    #[test]
    fn path_criterion_power_family() {
        let lab = Lab::new(GridSpec::disk(32, 32)).unwrap();
        let p = radial_path(&lab, 0.0);
        assert!(path_criterion(&lab, &Potential::distance_power(1.0, 2.0), &p).unwrap().classification == verdict::Classification::DivergentLog);
        assert!(path_criterion(&lab, &Potential::distance_power(1.0, 1.5), &p).unwrap().is_convergent());
        assert!(path_criterion(&lab, &Potential::bounded(2.0), &p).unwrap().is_convergent());
    }

    #[test]
    fn k_limit_recovers_power_tail() {
        let k: Vec<f64> = (0..9).map(|j| 4f64.powi(j)).collect();
        let v: Vec<f64> = k.iter().map(|k| 0.2 + k.powf(-0.5)).collect();
        let (l, p) = k_limit(&k, &v);
        assert!((l - 0.2).abs() < 1e-8 && (p - 0.5).abs() < 1e-6);
    }
}
