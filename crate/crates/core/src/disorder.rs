//! Potential laws nu with samplers, densities, and numerical validators for
//! the mean-zero, fourth-moment, regularity, and sub-Cauchy hypotheses.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::io::BufRead;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DisorderError {
    #[error("disorder strength beta must be > 0, got {0}")]
    BadBeta(f64),
    #[error("regularity bound L must be >= 1, got {0}")]
    BadRegularityBound(f64),
    #[error("table law: {0}")]
    BadTable(String),
    #[error("validation tolerance must lie in (0, 0.1], got {0}")]
    BadTolerance(f64),
    #[error("table file parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UniformScaling {
    /// Support [-beta, beta]; E V^4 = beta^4 / 5.
    Plain,
    /// Support scaled so E V^4 = beta^4 exactly.
    MomentMatched,
}

#[derive(Debug, Clone, PartialEq)]
enum LawKind {
    UniformSymmetric { scaling: UniformScaling },
    GaussianTruncated { sigma: f64 },
    Table { xs: Vec<f64>, density: Vec<f64>, cdf: Vec<f64> },
}

/// The law of the i.i.d. potential, with declared strength beta and
/// regularity bound L. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DisorderLaw {
    kind: LawKind,
    beta: f64,
    l: f64,
}

const GAUSSIAN_TRUNC_SIGMAS: f64 = 6.0;

impl DisorderLaw {
    pub fn uniform(beta: f64, l: f64, scaling: UniformScaling) -> Result<Self, DisorderError> {
        check_params(beta, l)?;
        Ok(Self {
            kind: LawKind::UniformSymmetric { scaling },
            beta,
            l,
        })
    }

    /// Centered Gaussian with sigma chosen so E V^4 = beta^4 before
    /// truncation at +-6 sigma (truncation error < 1e-8 in total variation).
    pub fn gaussian(beta: f64, l: f64) -> Result<Self, DisorderError> {
        check_params(beta, l)?;
        let sigma = beta / 3f64.powf(0.25);
        Ok(Self {
            kind: LawKind::GaussianTruncated { sigma },
            beta,
            l,
        })
    }

    /// Piecewise-linear density on the given grid, normalized on construction.
    pub fn table(xs: Vec<f64>, weights: Vec<f64>, beta: f64, l: f64) -> Result<Self, DisorderError> {
        check_params(beta, l)?;
        if xs.len() < 2 || xs.len() != weights.len() {
            return Err(DisorderError::BadTable(format!(
                "need >= 2 nodes and matching lengths, got {} and {}",
                xs.len(),
                weights.len()
            )));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(DisorderError::BadTable("grid must be strictly increasing".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(DisorderError::BadTable("weights must be finite and >= 0".into()));
        }
        let mass = trapezoid(&xs, &weights);
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(DisorderError::BadTable(format!("non-normalizable table, mass = {mass}")));
        }
        let density: Vec<f64> = weights.iter().map(|w| w / mass).collect();
        let mut cdf = vec![0.0; xs.len()];
        for i in 1..xs.len() {
            cdf[i] = cdf[i - 1] + 0.5 * (density[i] + density[i - 1]) * (xs[i] - xs[i - 1]);
        }
        // clamp accumulated rounding so the cdf tops out at exactly 1
        let top = cdf[xs.len() - 1];
        for v in cdf.iter_mut() {
            *v /= top;
        }
        Ok(Self {
            kind: LawKind::Table { xs, density, cdf },
            beta,
            l,
        })
    }

    /// Load a table law from two-column whitespace-separated text (x, weight).
    pub fn table_from_reader<R: BufRead>(reader: R, beta: f64, l: f64) -> Result<Self, DisorderError> {
        let mut xs = Vec::new();
        let mut ws = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let x: f64 = parts
                .next()
                .ok_or_else(|| DisorderError::Parse { line: i + 1, msg: "missing x".into() })?
                .parse()
                .map_err(|e| DisorderError::Parse { line: i + 1, msg: format!("{e}") })?;
            let w: f64 = parts
                .next()
                .ok_or_else(|| DisorderError::Parse { line: i + 1, msg: "missing weight".into() })?
                .parse()
                .map_err(|e| DisorderError::Parse { line: i + 1, msg: format!("{e}") })?;
            xs.push(x);
            ws.push(w);
        }
        Self::table(xs, ws, beta, l)
    }

    pub fn table_from_file(path: &std::path::Path, beta: f64, l: f64) -> Result<Self, DisorderError> {
        let file = std::fs::File::open(path)?;
        Self::table_from_reader(std::io::BufReader::new(file), beta, l)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn regularity_bound(&self) -> f64 {
        self.l
    }

    fn uniform_half_width(&self) -> Option<f64> {
        match &self.kind {
            LawKind::UniformSymmetric { scaling } => Some(match scaling {
                UniformScaling::Plain => self.beta,
                UniformScaling::MomentMatched => 5f64.powf(0.25) * self.beta,
            }),
            _ => None,
        }
    }

    /// Support interval [lo, hi].
    pub fn support(&self) -> (f64, f64) {
        match &self.kind {
            LawKind::UniformSymmetric { .. } => {
                let a = self.uniform_half_width().unwrap();
                (-a, a)
            }
            LawKind::GaussianTruncated { sigma } => {
                (-GAUSSIAN_TRUNC_SIGMAS * sigma, GAUSSIAN_TRUNC_SIGMAS * sigma)
            }
            LawKind::Table { xs, .. } => (xs[0], *xs.last().unwrap()),
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        match &self.kind {
            LawKind::UniformSymmetric { .. } => {
                let a = self.uniform_half_width().unwrap();
                if x.abs() <= a {
                    0.5 / a
                } else {
                    0.0
                }
            }
            LawKind::GaussianTruncated { sigma } => {
                if x.abs() > GAUSSIAN_TRUNC_SIGMAS * sigma {
                    return 0.0;
                }
                let z = x / sigma;
                let norm = erf(GAUSSIAN_TRUNC_SIGMAS / std::f64::consts::SQRT_2);
                (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt() * norm)
            }
            LawKind::Table { xs, density, .. } => {
                if x < xs[0] || x > *xs.last().unwrap() {
                    return 0.0;
                }
                let i = xs.partition_point(|&v| v <= x).min(xs.len() - 1).max(1);
                let (x0, x1) = (xs[i - 1], xs[i]);
                let t = (x - x0) / (x1 - x0);
                density[i - 1] * (1.0 - t) + density[i] * t
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match &self.kind {
            LawKind::UniformSymmetric { .. } => {
                let a = self.uniform_half_width().unwrap();
                ((x + a) / (2.0 * a)).clamp(0.0, 1.0)
            }
            LawKind::GaussianTruncated { sigma } => {
                let cap = GAUSSIAN_TRUNC_SIGMAS;
                if x <= -cap * sigma {
                    return 0.0;
                }
                if x >= cap * sigma {
                    return 1.0;
                }
                let phi = |t: f64| 0.5 * (1.0 + erf(t / std::f64::consts::SQRT_2));
                let lo = phi(-cap);
                ((phi(x / sigma) - lo) / (1.0 - 2.0 * lo)).clamp(0.0, 1.0)
            }
            LawKind::Table { xs, density, cdf } => {
                if x <= xs[0] {
                    return 0.0;
                }
                if x >= *xs.last().unwrap() {
                    return 1.0;
                }
                let i = xs.partition_point(|&v| v <= x).max(1);
                let (x0, x1) = (xs[i - 1], xs[i]);
                let t = x - x0;
                let slope = (density[i] - density[i - 1]) / (x1 - x0);
                (cdf[i - 1] + density[i - 1] * t + 0.5 * slope * t * t).clamp(0.0, 1.0)
            }
        }
    }

    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            LawKind::UniformSymmetric { .. } => {
                let a = self.uniform_half_width().unwrap();
                rng.random_range(-a..a)
            }
            LawKind::GaussianTruncated { sigma } => {
                let normal = Normal::new(0.0, *sigma).expect("sigma > 0");
                loop {
                    let x = normal.sample(rng);
                    if x.abs() <= GAUSSIAN_TRUNC_SIGMAS * sigma {
                        return x;
                    }
                }
            }
            LawKind::Table { xs, density, cdf } => {
                let u: f64 = rng.random_range(0.0..1.0);
                let i = cdf.partition_point(|&v| v <= u).clamp(1, xs.len() - 1);
                // invert the quadratic cdf on segment [x_{i-1}, x_i]
                let (x0, x1) = (xs[i - 1], xs[i]);
                let h = x1 - x0;
                let (f0, f1) = (density[i - 1], density[i]);
                let du = u - cdf[i - 1];
                let slope = (f1 - f0) / h;
                let t = if slope.abs() * h < 1e-12 * (f0 + 1e-300) {
                    du / f0.max(1e-300)
                } else {
                    // solve 0.5 slope t^2 + f0 t - du = 0 for t in [0, h]
                    let disc = (f0 * f0 + 2.0 * slope * du).max(0.0);
                    (-f0 + disc.sqrt()) / slope
                };
                x0 + t.clamp(0.0, h)
            }
        }
    }

    /// n i.i.d. draws; deterministic given the rng stream.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.sample_one(rng)).collect()
    }

    /// Sub-Cauchy tail pair (s, r) = (L beta, beta): the sub-Cauchy hypothesis
    /// implies density(x) <= L beta (|x| - beta)_+^{-2}.
    pub fn tail_pair(&self) -> (f64, f64) {
        (self.l * self.beta, self.beta)
    }

    /// Numerically check the four hypotheses. Deterministic.
    pub fn validate(&self, tol: f64) -> Result<ValidationReport, DisorderError> {
        if !(tol > 0.0 && tol <= 0.1) {
            return Err(DisorderError::BadTolerance(tol));
        }
        let (lo, hi) = self.support();
        // quadrature for E V and E V^4 (Simpson on the support)
        let n = 40_000usize;
        let h = (hi - lo) / n as f64;
        let mut mean = 0.0;
        let mut m4 = 0.0;
        let mut mass = 0.0;
        for i in 0..=n {
            let x = lo + i as f64 * h;
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let f = self.density(x) * w;
            mass += f;
            mean += x * f;
            m4 += x.powi(4) * f;
        }
        mass *= h / 3.0;
        mean *= h / 3.0;
        m4 *= h / 3.0;
        if !(mass > 0.5) || !mass.is_finite() {
            return Err(DisorderError::BadTable(format!("non-normalizable density, mass = {mass}")));
        }
        mean /= mass;
        m4 /= mass;

        let beta = self.beta;
        // scan grids: x in beta * {-10..10} / 2, t,s in beta * 2^{-10..0}, t < s
        let xs: Vec<f64> = (-10..=10).map(|j| beta * j as f64 / 2.0).collect();
        let ts: Vec<f64> = (0..=10).map(|j| beta * 2f64.powi(-j)).collect();
        let prob = |x: f64, t: f64| (self.cdf(x + t) - self.cdf(x - t)).max(0.0);

        let mut reg_worst: f64 = 0.0;
        let mut sc_worst: f64 = 0.0;
        for &x in &xs {
            for (i, &s) in ts.iter().enumerate() {
                if !(s < beta) && i == 0 {
                    // hypotheses are stated for t < s < beta; the top node
                    // s = beta is still scanned as the boundary case
                }
                let ps = prob(x, s);
                for &t in &ts[i + 1..] {
                    if ps > 0.0 {
                        let ratio = (prob(x, t) / ps) * (s / t);
                        reg_worst = reg_worst.max(ratio);
                    } else if prob(x, t) > 0.0 {
                        reg_worst = f64::INFINITY;
                    }
                }
            }
            for &t in &ts[1..] {
                // t < beta only
                let ratio = prob(x, t) * (beta * beta + x * x) / (beta * t);
                sc_worst = sc_worst.max(ratio);
            }
        }

        let passes = HypothesisPasses {
            mean_zero: mean.abs() <= tol * beta,
            fourth_moment: m4 <= beta.powi(4) * (1.0 + tol),
            regularity: reg_worst <= self.l * (1.0 + tol),
            subcauchy: sc_worst <= self.l * (1.0 + tol),
        };
        Ok(ValidationReport {
            mean,
            fourth_moment: m4,
            regularity_worst_ratio: reg_worst,
            subcauchy_worst_ratio: sc_worst,
            passes,
        })
    }
}

fn check_params(beta: f64, l: f64) -> Result<(), DisorderError> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(DisorderError::BadBeta(beta));
    }
    if !(l >= 1.0) || !l.is_finite() {
        return Err(DisorderError::BadRegularityBound(l));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypothesisPasses {
    pub mean_zero: bool,
    pub fourth_moment: bool,
    pub regularity: bool,
    pub subcauchy: bool,
}

/// Measured hypothesis diagnostics. The two worst ratios are the effective
/// regularity constants; each hypothesis passes iff its ratio <= L (1 + tol).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub mean: f64,
    pub fourth_moment: f64,
    pub regularity_worst_ratio: f64,
    pub subcauchy_worst_ratio: f64,
    pub passes: HypothesisPasses,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.passes.mean_zero && self.passes.fourth_moment && self.passes.regularity && self.passes.subcauchy
    }
}

/// Abramowitz-Stegun 7.1.26 rational approximation, |error| < 1.5e-7.
fn erf(x: f64) -> f64 {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let y = 1.0
        - (((((1.061405429 * t - 1.453152027) * t) + 1.421413741) * t - 0.284496736) * t
            + 0.254829592)
            * t
            * (-x * x).exp();
    sign * y
}

fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (y[0] + y[1]) * (x[1] - x[0]))
        .sum()
}
