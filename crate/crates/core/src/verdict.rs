//! Refinement-based classification of possibly divergent integrals, plus the
//! small curve fits shared by the extrapolation code.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Increment ratio below which a sample sequence counts as geometrically
/// convergent. Must admit ε^{1/2} tails (ratio 2^{-1/2}).
pub const GEOMETRIC_RATIO: f64 = 0.75;
/// Smallest tail exponent the finite-limit model may use (2^{-q} = 0.75).
pub const MIN_TAIL_EXPONENT: f64 = 0.415;
const FIT_WINDOW: usize = 5;
const RATIO_WINDOW: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "p", rename_all = "snake_case")]
pub enum Classification {
    Convergent,
    DivergentLog,
    DivergentPower(f64),
    Inconclusive,
}

impl Classification {
    pub fn is_divergent(&self) -> bool {
        matches!(self, Classification::DivergentLog | Classification::DivergentPower(_))
    }

    pub fn label(&self) -> String {
        match self {
            Classification::Convergent => "convergent".into(),
            Classification::DivergentLog => "divergent_log".into(),
            Classification::DivergentPower(p) => format!("divergent_power({p:.3})"),
            Classification::Inconclusive => "inconclusive".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFit {
    pub model: String,
    /// Exponent of the model (q for finite, p for power, 0 for log).
    pub exponent: f64,
    pub a: f64,
    pub b: f64,
    /// RMS residual divided by the sample range.
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceVerdict {
    pub classification: Classification,
    /// (cutoff, truncated integral), cutoffs decreasing.
    pub samples: Vec<(f64, f64)>,
    pub fit_error: f64,
    /// Extrapolated value for convergent verdicts.
    pub limit: Option<f64>,
    pub fits: Vec<ModelFit>,
}

impl DivergenceVerdict {
    pub fn is_convergent(&self) -> bool {
        self.classification == Classification::Convergent
    }

    pub fn is_divergent(&self) -> bool {
        self.classification.is_divergent()
    }

    /// Verdict for an integral that is identically zero.
    pub fn zero(cutoffs: &[f64]) -> Self {
        DivergenceVerdict {
            classification: Classification::Convergent,
            samples: cutoffs.iter().map(|&e| (e, 0.0)).collect(),
            fit_error: 0.0,
            limit: Some(0.0),
            fits: vec![],
        }
    }
}

/// Cutoffs eps0 * 2^{-j}, j = 0..levels.
pub fn dyadic_cutoffs(eps0: f64, levels: usize) -> Vec<f64> {
    (0..levels).map(|j| eps0 * 0.5f64.powi(j as i32)).collect()
}

/// Least squares y ≈ a + b g. Returns (a, b, rms).
pub fn linear_fit(g: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = g.len() as f64;
    let mg = g.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = g.iter().map(|x| (x - mg).powi(2)).sum();
    let sxy: f64 = g.iter().zip(y).map(|(x, v)| (x - mg) * (v - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mg;
    let rms = (g.iter().zip(y).map(|(x, v)| (a + b * x - v).powi(2)).sum::<f64>() / n).sqrt();
    (a, b, rms)
}

/// Fit y ≈ a + b h(x, s) with the shape parameter s scanned over [lo, hi]
/// and then refined by golden section. Returns (s, a, b, rms).
fn shape_fit<H: Fn(f64, f64) -> f64>(x: &[f64], y: &[f64], lo: f64, hi: f64, h: H) -> (f64, f64, f64, f64) {
    let eval = |s: f64| {
        let g: Vec<f64> = x.iter().map(|&t| h(t, s)).collect();
        let (a, b, r) = linear_fit(&g, y);
        (r, a, b)
    };
    let steps = 200;
    let mut best = (f64::INFINITY, lo);
    for i in 0..=steps {
        let s = lo + (hi - lo) * i as f64 / steps as f64;
        let (r, _, _) = eval(s);
        if r < best.0 {
            best = (r, s);
        }
    }
    let dh = (hi - lo) / steps as f64;
    let (mut a, mut b) = ((best.1 - dh).max(lo), (best.1 + dh).min(hi));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if eval(c).0 <= eval(d).0 {
            b = d;
        } else {
            a = c;
        }
    }
    let s = 0.5 * (a + b);
    let (r, aa, bb) = eval(s);
    if r <= best.0 {
        (s, aa, bb, r)
    } else {
        let (r, aa, bb) = eval(best.1);
        (best.1, aa, bb, r)
    }
}

/// Fit y ≈ L + B x^p for x → 0+, p in [p_lo, p_hi]. Returns (L, B, p, rms).
pub fn fit_limit(x: &[f64], y: &[f64], p_lo: f64, p_hi: f64) -> (f64, f64, f64, f64) {
    let (p, a, b, r) = shape_fit(x, y, p_lo, p_hi, |t, s| t.powf(s));
    (a, b, p, r)
}

/// Log-log slope of |y| against x (least squares).
pub fn power_exponent(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.abs().max(1e-300).ln()).collect();
    linear_fit(&lx, &ly).1
}

/// Whether the last `window` increments of `seq` decay with ratio at most
/// `ratio` (increments below `floor` count as converged).
pub fn geometric_decay(seq: &[f64], window: usize, ratio: f64, floor: f64) -> bool {
    if seq.len() < window + 1 {
        return false;
    }
    let inc: Vec<f64> = seq.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let tail = &inc[inc.len() - window..];
    tail.windows(2).all(|w| w[1] <= floor || w[1] <= ratio * w[0])
}

/// Classify samples (cutoff, I(cutoff)) with cutoffs decreasing.
pub fn classify(samples: Vec<(f64, f64)>) -> Result<DivergenceVerdict> {
    if samples.len() < FIT_WINDOW + 1 {
        return Err(Error::domain(format!("need at least {} cutoff levels", FIT_WINDOW + 1)));
    }
    if samples.windows(2).any(|w| w[1].0 >= w[0].0) {
        return Err(Error::domain("cutoffs must decrease"));
    }
    if samples.iter().any(|s| !s.1.is_finite()) {
        return Ok(DivergenceVerdict {
            classification: Classification::Inconclusive,
            samples,
            fit_error: f64::INFINITY,
            limit: None,
            fits: vec![],
        });
    }
    let values: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let slack = 1e-9 * scale + 1e-300;
    if values.windows(2).any(|w| w[1] < w[0] - slack) {
        return Err(Error::Invariant("truncated integrals decrease under refinement".into()));
    }
    let last = &samples[samples.len() - FIT_WINDOW..];
    let eps: Vec<f64> = last.iter().map(|s| s.0).collect();
    let y: Vec<f64> = last.iter().map(|s| s.1).collect();
    let range = y[y.len() - 1] - y[0];
    if range <= 1e-12 * scale.max(1e-300) {
        return Ok(DivergenceVerdict {
            classification: Classification::Convergent,
            limit: Some(*values.last().unwrap()),
            samples,
            fit_error: 0.0,
            fits: vec![],
        });
    }
    // normalise the cutoff so that the exponentials stay O(1)
    let e0 = eps[0];
    let t: Vec<f64> = eps.iter().map(|e| e / e0).collect();
    let (q, af, bf, rf) = shape_fit(&t, &y, MIN_TAIL_EXPONENT, 4.0, |x, s| x.powf(s));
    let lg: Vec<f64> = t.iter().map(|x| -x.ln()).collect();
    let (al, bl, rl) = linear_fit(&lg, &y);
    let (p, ap, bp, rp) = shape_fit(&t, &y, 0.05, 4.0, |x, s| x.powf(-s));
    let fits = vec![
        ModelFit { model: "finite".into(), exponent: q, a: af, b: bf, error: rf / range },
        ModelFit { model: "log".into(), exponent: 0.0, a: al, b: bl, error: rl / range },
        ModelFit { model: "power".into(), exponent: p, a: ap, b: bp, error: rp / range },
    ];
    let mut order: Vec<usize> = vec![0, 1, 2];
    order.sort_by(|&i, &j| fits[i].error.partial_cmp(&fits[j].error).unwrap());
    let (e1, e2) = (fits[order[0]].error, fits[order[1]].error);
    let geometric = geometric_decay(&values, RATIO_WINDOW, GEOMETRIC_RATIO, 1e-13 * scale);
    let separated = e1 < 0.9 * e2;
    let classification = match (order[0], separated) {
        _ if geometric && (order[0] == 0 || !separated) => Classification::Convergent,
        (_, false) => Classification::Inconclusive,
        (0, true) => Classification::Inconclusive,
        (1, true) => Classification::DivergentLog,
        _ => Classification::DivergentPower(p),
    };
    let limit = (classification == Classification::Convergent).then(|| if order[0] == 0 { af } else { *values.last().unwrap() });
    Ok(DivergenceVerdict { classification, samples, fit_error: e1, limit, fits })
}

/// Evaluate `integral(cutoff)` on the dyadic schedule and classify.
pub fn classify_fn<F: Fn(f64) -> f64>(eps0: f64, levels: usize, integral: F) -> Result<DivergenceVerdict> {
    let samples = dyadic_cutoffs(eps0, levels).into_iter().map(|e| (e, integral(e))).collect();
    classify(samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(f: impl Fn(f64) -> f64) -> DivergenceVerdict {
        classify_fn(0.5, 11, f).unwrap()
    }

    #[test]
    fn closed_form_tails() {
        // ∫_ε^1 t^{-1/2} dt
        let v = run(|e| 2.0 * (1.0 - e.sqrt()));
        assert_eq!(v.classification, Classification::Convergent);
        assert!((v.limit.unwrap() - 2.0).abs() < 1e-6);
        // ∫_ε^1 dt/t
        assert_eq!(run(|e| -e.ln()).classification, Classification::DivergentLog);
        // ∫_ε^1 t^{-2} dt
        match run(|e| 1.0 / e - 1.0).classification {
            Classification::DivergentPower(p) => assert!((p - 1.0).abs() < 1e-3),
            c => panic!("{c:?}"),
        }
        assert_eq!(run(|_| 3.0).classification, Classification::Convergent);
    }

    #[test]
    fn decreasing_samples_are_rejected() {
        assert!(classify_fn(0.5, 11, |e| e).is_err());
    }

    #[test]
    fn limit_fit_recovers_exponent() {
        let k: Vec<f64> = (0..6).map(|j| 4f64.powi(j)).collect();
        let x: Vec<f64> = k.iter().map(|v| 1.0 / v).collect();
        let y: Vec<f64> = x.iter().map(|v| 0.3 + 2.0 * v.powf(0.5)).collect();
        let (l, _, p, _) = fit_limit(&x, &y, 0.05, 4.0);
        assert!((l - 0.3).abs() < 1e-8 && (p - 0.5).abs() < 1e-6);
    }
}
