//! Power coefficient curve `C_p(λ)` and quantities derived from its shape.
//!
//! The curve is stored as a tabulated grid and interpolated with a
//! monotone-preserving piecewise cubic Hermite interpolant (Fritsch–Carlson
//! slopes). The interpolant is C¹, reproduces the grid exactly at the nodes
//! and never introduces extrema between nodes, so a single-peaked table stays
//! single-peaked after interpolation.

use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

/// Synthetic single-peak fixture shipped with the crate (λ ∈ [2, 10],
/// peak C_p* = 0.48 at λ* = 7.5). Not measured turbine data.
pub const SYNTHETIC_CP_CSV: &str = include_str!("../data/cp_synthetic.csv");

const MIN_POINTS: usize = 4;
const LAMBDA_STAR_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum CurveError {
    #[error("need at least {MIN_POINTS} (lambda, cp) pairs for a C1 fit, got {0}")]
    TooFewPoints(usize),
    #[error("non-finite value at row {0}")]
    NonFinite(usize),
    #[error("lambda grid must be strictly increasing (row {0})")]
    NonIncreasingGrid(usize),
    #[error("lambda must be positive, got {0}")]
    NonPositiveLambda(f64),
    #[error("power coefficient must be positive, got {value} at row {index}")]
    NonPositiveCp { index: usize, value: f64 },
    #[error("curve is not single-peaked: {0}")]
    NotSinglePeaked(String),
    #[error("tip-speed ratio {lambda} outside envelope [{min}, {max}]")]
    OutOfEnvelope { lambda: f64, min: f64, max: f64 },
    #[error("curve file: {0}")]
    Format(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Tabulated power coefficient with its monotone cubic interpolant.
///
/// Immutable after construction; `λ*`, `C_p*` and `λ₀` are resolved once in
/// [`CpCurve::new`].
#[derive(Debug, Clone, PartialEq)]
pub struct CpCurve {
    lambda: Vec<f64>,
    cp: Vec<f64>,
    slopes: Vec<f64>,
    lambda_star: f64,
    cp_star: f64,
    lambda_zero: f64,
}

impl CpCurve {
    /// Build a curve from `(λ, C_p)` pairs.
    ///
    /// Rejects grids that are not strictly increasing, non-positive values,
    /// and tables whose fitted derivative does not follow the
    /// `+ … 0 … −` single-peak pattern.
    pub fn new(pairs: &[(f64, f64)]) -> Result<Self, CurveError> {
        if pairs.len() < MIN_POINTS {
            return Err(CurveError::TooFewPoints(pairs.len()));
        }
        for (i, &(l, c)) in pairs.iter().enumerate() {
            if !l.is_finite() || !c.is_finite() {
                return Err(CurveError::NonFinite(i));
            }
        }
        if pairs[0].0 <= 0.0 {
            return Err(CurveError::NonPositiveLambda(pairs[0].0));
        }
        for (i, w) in pairs.windows(2).enumerate() {
            if w[1].0 <= w[0].0 {
                return Err(CurveError::NonIncreasingGrid(i + 1));
            }
        }
        if let Some((index, &(_, value))) = pairs.iter().enumerate().find(|(_, p)| p.1 <= 0.0) {
            return Err(CurveError::NonPositiveCp { index, value });
        }

        let lambda: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let cp: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let slopes = pchip_slopes(&lambda, &cp);

        let mut curve = CpCurve {
            lambda,
            cp,
            slopes,
            lambda_star: f64::NAN,
            cp_star: f64::NAN,
            lambda_zero: f64::NAN,
        };
        let peak = curve.check_single_peak()?;
        curve.lambda_star = curve.locate_peak(peak);
        curve.cp_star = curve.eval(curve.lambda_star);
        curve.lambda_zero = curve.find_lambda_zero();
        Ok(curve)
    }

    /// The bundled synthetic fixture.
    pub fn synthetic() -> Self {
        Self::from_csv_reader(SYNTHETIC_CP_CSV.as_bytes()).expect("bundled curve is valid")
    }

    /// Parse a `lambda,cp` CSV (header row required).
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self, CurveError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "lambda" || &headers[1] != "cp" {
            return Err(CurveError::Format(format!(
                "expected header `lambda,cp`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut pairs = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != 2 {
                return Err(CurveError::Format(format!("row {row}: expected 2 columns")));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| CurveError::Format(format!("row {row}: `{s}`: {e}")))
            };
            pairs.push((parse(&rec[0])?, parse(&rec[1])?));
        }
        Self::new(&pairs)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self, CurveError> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }

    /// Write the grid back out as `lambda,cp`. Values use the shortest
    /// round-trip representation, so re-loading reproduces the grid bit for bit.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<(), CurveError> {
        writeln!(out, "lambda,cp")?;
        for (l, c) in self.lambda.iter().zip(&self.cp) {
            writeln!(out, "{l},{c}")?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<(), CurveError> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(f)
    }

    pub fn lambda_grid(&self) -> &[f64] {
        &self.lambda
    }

    pub fn cp_values(&self) -> &[f64] {
        &self.cp
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda[0]
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda[self.lambda.len() - 1]
    }

    /// Tip-speed ratio of maximum power capture.
    pub fn lambda_star(&self) -> f64 {
        self.lambda_star
    }

    /// `C_p(λ*)`.
    pub fn cp_star(&self) -> f64 {
        self.cp_star
    }

    /// Largest root of `κ` below `λ*`, or `λ_min` when `κ > 0` on all of
    /// `[λ_min, λ*]`. Above this value `Φ` is strictly increasing in `U`.
    pub fn lambda_zero(&self) -> f64 {
        self.lambda_zero
    }

    pub fn contains(&self, lambda: f64) -> bool {
        lambda >= self.lambda_min() && lambda <= self.lambda_max()
    }

    pub fn clamp(&self, lambda: f64) -> f64 {
        if lambda.is_nan() {
            return self.lambda_max();
        }
        lambda.clamp(self.lambda_min(), self.lambda_max())
    }

    fn check(&self, lambda: f64) -> Result<(), CurveError> {
        if self.contains(lambda) {
            Ok(())
        } else {
            Err(CurveError::OutOfEnvelope {
                lambda,
                min: self.lambda_min(),
                max: self.lambda_max(),
            })
        }
    }

    pub fn cp(&self, lambda: f64) -> Result<f64, CurveError> {
        self.check(lambda)?;
        Ok(self.eval(lambda))
    }

    pub fn cp_prime(&self, lambda: f64) -> Result<f64, CurveError> {
        self.check(lambda)?;
        Ok(self.eval_prime(lambda))
    }

    /// `κ(λ) = (3/λ)·C_p(λ) − C_p'(λ)`; the sign of `∂Φ/∂U`.
    pub fn kappa(&self, lambda: f64) -> Result<f64, CurveError> {
        self.check(lambda)?;
        Ok(self.eval_kappa(lambda))
    }

    fn eval_kappa(&self, lambda: f64) -> f64 {
        3.0 / lambda * self.eval(lambda) - self.eval_prime(lambda)
    }

    fn segment(&self, lambda: f64) -> usize {
        let n = self.lambda.len();
        let pp = self.lambda.partition_point(|&x| x <= lambda);
        pp.saturating_sub(1).min(n - 2)
    }

    /// Interpolant value; caller guarantees `lambda` is in the envelope.
    pub(crate) fn eval(&self, lambda: f64) -> f64 {
        let k = self.segment(lambda);
        let h = self.lambda[k + 1] - self.lambda[k];
        let t = (lambda - self.lambda[k]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.cp[k]
            + h10 * h * self.slopes[k]
            + h01 * self.cp[k + 1]
            + h11 * h * self.slopes[k + 1]
    }

    pub(crate) fn eval_prime(&self, lambda: f64) -> f64 {
        let k = self.segment(lambda);
        let h = self.lambda[k + 1] - self.lambda[k];
        let t = (lambda - self.lambda[k]) / h;
        let t2 = t * t;
        let d00 = 6.0 * t2 - 6.0 * t;
        let d10 = 3.0 * t2 - 4.0 * t + 1.0;
        let d01 = -6.0 * t2 + 6.0 * t;
        let d11 = 3.0 * t2 - 2.0 * t;
        (d00 * self.cp[k] + d01 * self.cp[k + 1]) / h
            + d10 * self.slopes[k]
            + d11 * self.slopes[k + 1]
    }

    /// Returns the index of the peak node. The data must rise strictly to one
    /// interior node and fall strictly after it; the fitted derivative is then
    /// sampled inside every interval to confirm the sign pattern survived.
    fn check_single_peak(&self) -> Result<usize, CurveError> {
        let n = self.lambda.len();
        let secant = |k: usize| (self.cp[k + 1] - self.cp[k]) / (self.lambda[k + 1] - self.lambda[k]);
        let signs: Vec<i8> = (0..n - 1)
            .map(|k| {
                let s = secant(k);
                if s > 0.0 {
                    1
                } else if s < 0.0 {
                    -1
                } else {
                    0
                }
            })
            .collect();
        if let Some(k) = signs.iter().position(|&s| s == 0) {
            return Err(CurveError::NotSinglePeaked(format!(
                "flat segment between rows {k} and {}",
                k + 1
            )));
        }
        let changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
        if changes != 1 || signs[0] < 0 {
            return Err(CurveError::NotSinglePeaked(format!(
                "expected one rise-then-fall pattern, found {changes} slope sign changes"
            )));
        }
        let peak = signs.iter().position(|&s| s < 0).unwrap();

        const PROBES: usize = 16;
        for (k, &expect) in signs.iter().enumerate() {
            for j in 1..PROBES {
                let x = self.lambda[k] + (self.lambda[k + 1] - self.lambda[k]) * j as f64 / PROBES as f64;
                let d = self.eval_prime(x);
                if (expect > 0 && d <= 0.0) || (expect < 0 && d >= 0.0) {
                    return Err(CurveError::NotSinglePeaked(format!(
                        "fitted derivative changes sign inside [{}, {}]",
                        self.lambda[k],
                        self.lambda[k + 1]
                    )));
                }
            }
        }
        let (d_lo, d_hi) = (self.slopes[0], self.slopes[n - 1]);
        if d_lo <= 0.0 || d_hi >= 0.0 {
            return Err(CurveError::NotSinglePeaked(
                "derivative must be positive at lambda_min and negative at lambda_max".into(),
            ));
        }
        Ok(peak)
    }

    /// Golden-section search on the interpolant, then bisection on the sign
    /// of the derivative.
    fn locate_peak(&self, peak_node: usize) -> f64 {
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (self.lambda_min(), self.lambda_max());
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let (mut fc, mut fd) = (self.eval(c), self.eval(d));
        while b - a > 1e-6 {
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = self.eval(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = self.eval(d);
            }
        }
        let guess = 0.5 * (a + b);

        // Bracket the derivative sign change around the golden-section guess,
        // falling back to the neighbouring nodes of the peak.
        let span = 1e-4 * (self.lambda_max() - self.lambda_min());
        let (mut lo, mut hi) = (
            (guess - span).max(self.lambda_min()),
            (guess + span).min(self.lambda_max()),
        );
        if !(self.eval_prime(lo) > 0.0 && self.eval_prime(hi) <= 0.0) {
            lo = self.lambda[peak_node - 1];
            hi = self.lambda[(peak_node + 1).min(self.lambda.len() - 1)];
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.eval_prime(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let star = 0.5 * (lo + hi);
        debug_assert!(hi - lo < LAMBDA_STAR_TOL);
        star
    }

    fn find_lambda_zero(&self) -> f64 {
        let lo = self.lambda_min();
        let star = self.lambda_star;
        let steps = 1000.max(8 * self.lambda.len());
        let dx = (star - lo) / steps as f64;
        let mut prev = star;
        for i in 1..=steps {
            let x = if i == steps { lo } else { star - dx * i as f64 };
            if self.eval_kappa(x) <= 0.0 {
                let (mut neg, mut pos) = (x, prev);
                for _ in 0..200 {
                    let mid = 0.5 * (neg + pos);
                    if mid <= neg || mid >= pos {
                        break;
                    }
                    if self.eval_kappa(mid) > 0.0 {
                        pos = mid;
                    } else {
                        neg = mid;
                    }
                }
                return pos;
            }
            prev = x;
        }
        lo
    }
}

/// Fritsch–Carlson node slopes with shape-preserving one-sided end slopes.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        let (d0, d1) = (delta[k - 1], delta[k]);
        if d0 * d1 <= 0.0 {
            d[k] = 0.0;
        } else {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / d0 + w2 / d1);
        }
    }
    d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

fn end_slope(h0: f64, h1: f64, m0: f64, m1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if d.signum() != m0.signum() || m0 == 0.0 {
        0.0
    } else if m0.signum() != m1.signum() && d.abs() > 3.0 * m0.abs() {
        3.0 * m0
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine_curve() -> CpCurve {
        // 0.05 offset keeps the endpoint values strictly positive.
        let pairs: Vec<(f64, f64)> = (0..33)
            .map(|i| {
                let l = 2.0 + 8.0 * i as f64 / 32.0;
                (l, 0.05 + 0.5 * (std::f64::consts::PI * (l - 2.0) / 8.0).sin())
            })
            .collect();
        CpCurve::new(&pairs).unwrap()
    }

    #[test]
    fn too_few_points() {
        let err = CpCurve::new(&[(2.0, 0.1), (5.0, 0.4), (9.0, 0.2)]).unwrap_err();
        assert!(matches!(err, CurveError::TooFewPoints(3)));
    }

    #[test]
    fn negative_cp_rejected() {
        let err = CpCurve::new(&[(2.0, 0.1), (4.0, -0.1), (6.0, 0.4), (9.0, 0.2)]).unwrap_err();
        assert!(matches!(err, CurveError::NonPositiveCp { index: 1, .. }));
    }

    #[test]
    fn non_monotone_grid_rejected() {
        let err = CpCurve::new(&[(2.0, 0.1), (5.0, 0.3), (4.0, 0.4), (9.0, 0.2)]).unwrap_err();
        assert!(matches!(err, CurveError::NonIncreasingGrid(2)));
    }

    #[test]
    fn two_peaks_rejected() {
        let pairs = [(2.0, 0.1), (3.0, 0.3), (4.0, 0.2), (5.0, 0.4), (6.0, 0.1)];
        assert!(matches!(CpCurve::new(&pairs), Err(CurveError::NotSinglePeaked(_))));
    }

    #[test]
    fn monotone_table_rejected() {
        let pairs = [(2.0, 0.1), (3.0, 0.2), (4.0, 0.3), (5.0, 0.4)];
        assert!(matches!(CpCurve::new(&pairs), Err(CurveError::NotSinglePeaked(_))));
    }

    #[test]
    fn sine_peak_at_six() {
        let c = sine_curve();
        assert!((c.lambda_star() - 6.0).abs() < 1e-8, "{}", c.lambda_star());
        assert!(c.cp_prime(c.lambda_star()).unwrap().abs() < 1e-8);
        assert_eq!(c.cp(6.0).unwrap(), c.cp_star());
    }

    #[test]
    fn nodes_reproduced_exactly() {
        let c = sine_curve();
        for (l, v) in c.lambda_grid().iter().zip(c.cp_values()) {
            assert_eq!(c.cp(*l).unwrap(), *v);
        }
    }

    #[test]
    fn midpoint_matches_generator() {
        let c = sine_curve();
        for i in 0..32 {
            let l = 2.0 + 8.0 * (i as f64 + 0.5) / 32.0;
            let exact = 0.05 + 0.5 * (std::f64::consts::PI * (l - 2.0) / 8.0).sin();
            assert!((c.cp(l).unwrap() - exact).abs() < 1e-3);
        }
    }

    #[test]
    fn derivative_sign_pattern() {
        let c = sine_curve();
        assert!(c.cp_prime(3.0).unwrap() > 0.0);
        assert!(c.cp_prime(5.99).unwrap() > 0.0);
        assert!(c.cp_prime(6.01).unwrap() < 0.0);
        assert!(c.cp_prime(10.0).unwrap() < 0.0);
    }

    #[test]
    fn out_of_envelope_is_an_error() {
        let c = sine_curve();
        assert!(matches!(c.cp(1.99), Err(CurveError::OutOfEnvelope { .. })));
        assert!(matches!(c.cp_prime(10.01), Err(CurveError::OutOfEnvelope { .. })));
        assert!(matches!(c.kappa(f64::NAN), Err(CurveError::OutOfEnvelope { .. })));
    }

    #[test]
    fn kappa_at_peak_and_beyond() {
        let c = sine_curve();
        let ks = c.kappa(c.lambda_star()).unwrap();
        assert!((ks - 3.0 / c.lambda_star() * c.cp_star()).abs() < 1e-8);
        for i in 0..=100 {
            let l = c.lambda_star() + (c.lambda_max() - c.lambda_star()) * i as f64 / 100.0;
            assert!(c.kappa(l).unwrap() > 0.0);
        }
    }

    #[test]
    fn lambda_zero_is_lambda_min_when_kappa_positive() {
        // Slowly rising curve: 3C/λ dominates C' everywhere.
        let pairs: Vec<(f64, f64)> = (0..25)
            .map(|i| {
                let l = 4.0 + 6.0 * i as f64 / 24.0;
                (l, 0.4 - 0.01 * (l - 6.0) * (l - 6.0))
            })
            .collect();
        let c = CpCurve::new(&pairs).unwrap();
        assert_eq!(c.lambda_zero(), c.lambda_min());
    }

    #[test]
    fn synthetic_fixture_shape() {
        let c = CpCurve::synthetic();
        assert_eq!(c.lambda_min(), 2.0);
        assert_eq!(c.lambda_max(), 10.0);
        assert!((c.lambda_star() - 7.5).abs() < 1e-8);
        assert!((c.cp_star() - 0.48).abs() < 1e-12);
        let l0 = c.lambda_zero();
        assert!(l0 > c.lambda_min() && l0 < c.lambda_star());
        assert!(c.kappa(l0).unwrap().abs() <= 1e-8);
        // κ crosses zero exactly once below λ*.
        let xs: Vec<f64> = (0..=2000).map(|i| 2.0 + (c.lambda_star() - 2.0) * i as f64 / 2000.0).collect();
        let crossings = xs
            .windows(2)
            .filter(|w| c.kappa(w[0]).unwrap().signum() != c.kappa(w[1]).unwrap().signum())
            .count();
        assert_eq!(crossings, 1);
    }
}
