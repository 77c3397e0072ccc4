//! Deterministic density backend: Cauchy-projected iteration on a real grid
//! with FFT convolution, plus symbolic sub-Cauchy tail propagation and the
//! hyperbolic-regime concentration certificate.

use crate::disorder::DisorderLaw;
use crate::halfplane::{free_green, EnergyPoint, HalfPlanePoint};
use crate::population::MeasurePool;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DensityError {
    #[error("grids differ; operands must share x_min, x_max and n_points")]
    GridMismatch,
    #[error("grid too narrow: pool barycenter {0} outside [{1}, {2}]")]
    GridTooNarrow(f64, f64, f64),
    #[error("evaluation beyond the grid requires a tail model")]
    MissingTail,
    #[error("contraction unavailable: |w| r = {0} >= 1")]
    ContractionUnavailable(f64),
    #[error("hyperbolic certificate requires |E| >= 2 sqrt(K); got |E| = {0}, 2 sqrt(K) = {1}")]
    NotHyperbolic(f64, f64),
    #[error("invalid configuration: {0}")]
    BadConfig(String),
}

/// Uniform grid on [x_min, x_max) with n_points nodes (power of two).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
}

impl GridSpec {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self, DensityError> {
        if !(x_min < x_max) || !n_points.is_power_of_two() || n_points < 8 {
            return Err(DensityError::BadConfig(
                "need x_min < x_max and n_points a power of two >= 8".into(),
            ));
        }
        Ok(Self { x_min, x_max, n_points })
    }

    /// Symmetric grid sized for an energy: half-width max(8, 4(|E|+1)).
    pub fn for_energy(e: f64) -> Self {
        let x = (4.0 * (e.abs() + 1.0)).max(8.0);
        Self { x_min: -x, x_max: x, n_points: 1 << 14 }
    }

    /// Wider, finer grid for cross-backend comparisons: the pushforward's
    /// near-zero patch region has width 2/X, so larger X shrinks the part of
    /// the line served by the tail model.
    pub fn fine_for_energy(e: f64) -> Self {
        let x = (4.0 * (e.abs() + 1.0)).max(32.0);
        Self { x_min: -x, x_max: x, n_points: 1 << 16 }
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_points as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }
}

/// Sub-Cauchy tail claim f(center + x) <= s (|x| - r)_+^{-2}.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TailBound {
    pub s: f64,
    pub r: f64,
    pub center: f64,
}

impl TailBound {
    pub fn new(s: f64, r: f64, center: f64) -> Self {
        assert!(s >= 0.0 && r >= 0.0);
        Self { s, r, center }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let u = (x - self.center).abs() - self.r;
        if u <= 0.0 {
            f64::INFINITY
        } else {
            self.s / (u * u)
        }
    }

    /// Mass of the bound outside [x_min, x_max].
    fn exterior_mass(&self, x_min: f64, x_max: f64) -> f64 {
        let right = x_max - self.center - self.r;
        let left = self.center - x_min - self.r;
        let m = |d: f64| if d > 0.0 { self.s / d } else { f64::INFINITY };
        m(right) + m(left)
    }
}

#[derive(Debug, Clone)]
pub struct GridDensity {
    pub spec: GridSpec,
    pub values: Vec<f64>,
    pub tail: Option<TailBound>,
}

impl GridDensity {
    pub fn zeros(spec: GridSpec) -> Self {
        Self { spec, values: vec![0.0; spec.n_points], tail: None }
    }

    /// Trapezoid integral over the grid.
    pub fn grid_mass(&self) -> f64 {
        let n = self.values.len();
        let sum: f64 = self.values.iter().sum();
        self.spec.dx() * (sum - 0.5 * (self.values[0] + self.values[n - 1]))
    }

    pub fn total_mass(&self) -> f64 {
        let tail = self
            .tail
            .map(|t| t.exterior_mass(self.spec.x_min, self.spec.x_max))
            .unwrap_or(0.0);
        self.grid_mass() + if tail.is_finite() { tail } else { 0.0 }
    }

    fn scale(&mut self, c: f64) {
        for v in &mut self.values {
            *v *= c;
        }
    }

    /// Monotone cubic (Fritsch-Carlson) interpolation, clamped to >= 0.
    /// Falls back to the tail model outside the grid.
    pub fn eval(&self, y: f64) -> Result<f64, DensityError> {
        let (a, b, n, dx) = (self.spec.x_min, self.spec.x_max, self.spec.n_points, self.spec.dx());
        if y < a || y > b - dx {
            return match self.tail {
                Some(t) => {
                    let v = t.eval(y);
                    Ok(if v.is_finite() { v } else { 0.0 })
                }
                None => Err(DensityError::MissingTail),
            };
        }
        let fi = (y - a) / dx;
        let i = (fi.floor() as usize).min(n - 2);
        let t = fi - i as f64;
        let f0 = self.values[i];
        let f1 = self.values[i + 1];
        let slope = |j: usize| (self.values[j + 1] - self.values[j]) / dx;
        let deriv = |j: usize| -> f64 {
            if j == 0 {
                slope(0)
            } else if j == n - 1 {
                slope(n - 2)
            } else {
                let (sl, sr) = (slope(j - 1), slope(j));
                if sl * sr <= 0.0 {
                    0.0
                } else {
                    2.0 * sl * sr / (sl + sr)
                }
            }
        };
        let (d0, d1) = (deriv(i) * dx, deriv(i + 1) * dx);
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        Ok((h00 * f0 + h10 * d0 + h01 * f1 + h11 * d1).max(0.0))
    }

    /// Two-column text export: `x f(x)` per line, with the tail model as a
    /// trailing JSON comment line when present.
    pub fn write_text<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{} {}", self.spec.x(i), v)?;
        }
        if let Some(t) = self.tail {
            writeln!(w, "# tail {}", serde_json::to_string(&t).unwrap())?;
        }
        Ok(())
    }
}

/// Density of the Cauchy measure sigma_z at x.
pub fn cauchy_density(z: HalfPlanePoint, x: f64) -> f64 {
    let (a, b) = (z.re(), z.im());
    b / (std::f64::consts::PI * (b * b + (x - a) * (x - a)))
}

/// sigma_z sampled on a grid with its exact tail s = Im z / pi about Re z.
pub fn cauchy_grid(z: HalfPlanePoint, spec: GridSpec) -> GridDensity {
    let values = (0..spec.n_points).map(|i| cauchy_density(z, spec.x(i))).collect();
    GridDensity {
        spec,
        values,
        tail: Some(TailBound::new(z.im() / std::f64::consts::PI, 0.0, z.re())),
    }
}

/// Cauchy projection of a pool: the exact density of the measure
/// (1/N) sum_k sigma_{g_k}, sampled on the grid, tail fitted at probe points
/// beyond the grid (r = 0, s measured, never assumed).
pub fn cauchy_project(pool: &MeasurePool, spec: GridSpec) -> Result<GridDensity, DensityError> {
    if pool.is_empty() {
        return Err(DensityError::BadConfig("pool is empty".into()));
    }
    let n = pool.len() as f64;
    let bary: f64 = pool.samples().iter().map(|p| p.re()).sum::<f64>() / n;
    if bary < spec.x_min || bary > spec.x_max {
        return Err(DensityError::GridTooNarrow(bary, spec.x_min, spec.x_max));
    }
    let mix = |x: f64| -> f64 {
        pool.samples().iter().map(|p| cauchy_density(*p, x)).sum::<f64>() / n
    };
    let values: Vec<f64> = (0..spec.n_points).into_par_iter().map(|i| mix(spec.x(i))).collect();
    let half = 0.5 * (spec.x_max - spec.x_min);
    let mut s = 0.0f64;
    for m in [1.25, 1.5, 2.0, 4.0, 8.0, 16.0] {
        for sign in [-1.0, 1.0] {
            let x = bary + sign * m * half;
            let u = (x - bary).abs();
            s = s.max(mix(x) * u * u);
        }
    }
    Ok(GridDensity { spec, values, tail: Some(TailBound::new(s, 0.0, bary)) })
}

fn fft_linear_convolution(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len();
    let m = (2 * n).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(m);
    let ifft = planner.plan_fft_inverse(m);
    let mut fa: Vec<Complex64> = a.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut fb: Vec<Complex64> = b.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fa.resize(m, Complex64::new(0.0, 0.0));
    fb.resize(m, Complex64::new(0.0, 0.0));
    fft.process(&mut fa);
    fft.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    ifft.process(&mut fa);
    fa.iter().map(|c| c.re / m as f64).collect()
}

/// Discrete linear convolution via FFT; output on the same grid,
/// renormalized so its grid mass is the product of the input grid masses.
pub fn grid_convolve(f: &GridDensity, g: &GridDensity) -> Result<GridDensity, DensityError> {
    if f.spec != g.spec {
        return Err(DensityError::GridMismatch);
    }
    let n = f.spec.n_points;
    let dx = f.spec.dx();
    let full = fft_linear_convolution(&f.values, &g.values);
    // node m of the output corresponds to full index m + n/2 (x_j + x_k = x_m
    // requires j + k = m + n/2 on a symmetric-origin uniform grid)
    let values: Vec<f64> = (0..n).map(|m| (dx * full[m + n / 2]).max(0.0)).collect();
    let mut out = GridDensity { spec: f.spec, values, tail: None };
    let target = f.grid_mass() * g.grid_mass();
    let got = out.grid_mass();
    if got > 0.0 {
        out.scale(target / got);
    }
    Ok(out)
}

/// Pushforward under x -> -1/(x) with the delta_E shift folded in:
/// v(x) = x^{-2} f(-1/x - E). Beyond-grid arguments use f's tail model;
/// the regime switch is smoothed over 4 grid cells.
pub fn pushforward_reciprocal(f: &GridDensity, e: f64) -> Result<GridDensity, DensityError> {
    let spec = f.spec;
    let n = spec.n_points;
    let dx = spec.dx();
    let last = spec.x(n - 1);
    let mut values = vec![0.0; n];
    let mut regime = vec![false; n]; // true where the tail model supplied the value
    for i in 0..n {
        let x = spec.x(i);
        if x == 0.0 {
            // limit: v(0) = lim x^{-2} s/(-1/x - E - c)^2 = s
            values[i] = match f.tail {
                Some(t) => t.s,
                None => return Err(DensityError::MissingTail),
            };
            regime[i] = true;
            continue;
        }
        let y = -1.0 / x - e;
        let outside = y < spec.x_min || y > last;
        regime[i] = outside;
        let fy = if outside {
            match f.tail {
                Some(t) => {
                    let v = t.eval(y);
                    if v.is_finite() {
                        v
                    } else {
                        0.0
                    }
                }
                None => return Err(DensityError::MissingTail),
            }
        } else {
            f.eval(y)?
        };
        values[i] = fy / (x * x);
    }
    // smooth the interpolation/tail switch over 4 cells
    let raw = values.clone();
    for i in 1..n {
        if regime[i] != regime[i - 1] {
            let lo = i.saturating_sub(4);
            let hi = (i + 4).min(n - 1);
            for j in lo..=hi {
                let a = j.saturating_sub(2);
                let b = (j + 2).min(n - 1);
                values[j] = raw[a..=b].iter().sum::<f64>() / (b - a + 1) as f64;
            }
        }
    }
    // output tail: for |x| large, v(x) ~ f(-E) / x^2; measure s near y = -E
    let mut s_out = 0.0f64;
    for j in 0..=16 {
        let y = -e + (j as f64 / 8.0 - 1.0) / (0.5 * (spec.x_max - spec.x_min));
        if let Ok(v) = f.eval(y) {
            s_out = s_out.max(v);
        }
    }
    let _ = dx;
    Ok(GridDensity { spec, values, tail: Some(TailBound::new(s_out, 0.0, 0.0)) })
}

/// Measured sub-Cauchy tail of a grid density: r = 0 about the grid
/// barycenter, s = max of value * (x - center)^2 over the outer 10% of nodes
/// on each side. Recorded from data, never assumed.
pub fn fit_tail_from_grid(f: &GridDensity) -> TailBound {
    let n = f.spec.n_points;
    let dx = f.spec.dx();
    let mass = f.grid_mass().max(1e-300);
    let center = (0..n).map(|i| f.spec.x(i) * f.values[i]).sum::<f64>() * dx / mass;
    let band = n / 10;
    let mut s = 0.0f64;
    for i in (0..band).chain(n - band..n) {
        let u = f.spec.x(i) - center;
        s = s.max(f.values[i] * u * u);
    }
    TailBound::new(s, 0.0, center)
}

/// Grid sample of the disorder density, renormalized to unit mass. Laws much
/// narrower than the grid spacing degrade to a single-node atom.
pub fn law_grid(law: &DisorderLaw, spec: GridSpec) -> GridDensity {
    let values: Vec<f64> = (0..spec.n_points).map(|i| law.density(spec.x(i))).collect();
    let (s, r) = law.tail_pair();
    let mut out = GridDensity { spec, values, tail: Some(TailBound::new(s, r, 0.0)) };
    let m = out.grid_mass();
    if m > 1e-6 {
        out.scale(1.0 / m);
    } else {
        // unresolvable atom: place unit mass at the node nearest 0
        let i = ((0.0 - spec.x_min) / spec.dx()).round() as usize;
        out.values.iter_mut().for_each(|v| *v = 0.0);
        out.values[i.min(spec.n_points - 1)] = 1.0 / spec.dx();
    }
    out
}

/// One generation of the projected density iteration:
/// f' = ((f^{*K} * nu * sigma_{i eta}) o psi) psi', normalized.
/// `law = None` means zero disorder.
pub fn density_step(
    f: &GridDensity,
    law: Option<&DisorderLaw>,
    energy: &EnergyPoint,
) -> Result<GridDensity, DensityError> {
    let k = energy.k;
    let mut acc = f.clone();
    for _ in 1..k {
        acc = grid_convolve(&acc, f)?;
    }
    if let Some(law) = law {
        let nu = law_grid(law, f.spec);
        acc = grid_convolve(&acc, &nu)?;
    }
    let sigma = cauchy_grid(HalfPlanePoint::new(0.0, energy.eta).unwrap(), f.spec);
    acc = grid_convolve(&acc, &sigma)?;
    // tail measured from the outer grid band; the symbolic combine rule is
    // reserved for the certificate, where its slack is accounted for
    acc.tail = Some(fit_tail_from_grid(&acc));
    let mut out = pushforward_reciprocal(&acc, energy.e)?;
    // normalize: grid mass + exterior tail mass = 1
    let ext = out
        .tail
        .map(|t| t.exterior_mass(out.spec.x_min, out.spec.x_max))
        .unwrap_or(0.0);
    let ext = if ext.is_finite() { ext.min(0.5) } else { 0.0 };
    let m = out.grid_mass();
    if m > 0.0 {
        out.scale((1.0 - ext) / m);
    }
    Ok(out)
}

/// L1 distance of two densities on the same grid (trapezoid rule).
pub fn l1_distance(f: &GridDensity, g: &GridDensity) -> Result<f64, DensityError> {
    if f.spec != g.spec {
        return Err(DensityError::GridMismatch);
    }
    let n = f.spec.n_points;
    let d: Vec<f64> = f.values.iter().zip(&g.values).map(|(a, b)| (a - b).abs()).collect();
    Ok(f.spec.dx() * (d.iter().sum::<f64>() - 0.5 * (d[0] + d[n - 1])))
}

/// Fixed-point driver for the density backend. Starts from sigma at the free
/// point w_{E + i eta} and iterates density_step until the L1 change drops
/// below tol. Returns (density, iterations, final L1 change).
pub fn density_solve(
    law: Option<&DisorderLaw>,
    energy: &EnergyPoint,
    spec: GridSpec,
    max_iters: u32,
    tol: f64,
) -> Result<(GridDensity, u32, f64), DensityError> {
    let mut f = cauchy_grid(energy.free_point(), spec);
    let mut change = f64::INFINITY;
    let mut iters = 0;
    for i in 1..=max_iters {
        let next = density_step(&f, law, energy)?;
        change = l1_distance(&next, &f)?;
        f = next;
        iters = i;
        if change <= tol {
            break;
        }
    }
    Ok((f, iters, change))
}

/// Pairwise sub-Cauchy combine rule for a convolution:
/// (s1, r1) + (s2, r2) -> (s1 + s2 + 8 s1 s2 / t, r1 + r2 + t); centers add.
pub fn tail_pair_combine(a: TailBound, b: TailBound, t: f64) -> TailBound {
    let cross = if a.s * b.s == 0.0 { 0.0 } else { 8.0 * a.s * b.s / t };
    TailBound::new(a.s + b.s + cross, a.r + b.r + t, a.center + b.center)
}

/// Contraction factor of the pushforward about a real fixed point w:
/// tau = w^2 / (1 - |w| r)^2.
pub fn tail_contraction(w: f64, r: f64) -> Result<f64, DensityError> {
    let wr = w.abs() * r;
    if wr >= 1.0 {
        return Err(DensityError::ContractionUnavailable(wr));
    }
    Ok(w * w / ((1.0 - wr) * (1.0 - wr)))
}

/// One symbolic tail generation: combine K copies of `tails[0]` (the density
/// tail, about w) with the remaining entries (about 0), then contract through
/// the pushforward, returning a bound about w.
pub fn tail_step(tails: &[TailBound], t: f64, w: f64, k: u32) -> Result<TailBound, DensityError> {
    if tails.is_empty() || t < 0.0 {
        return Err(DensityError::BadConfig("need at least one tail and t >= 0".into()));
    }
    let mut c = tails[0];
    for _ in 1..k {
        c = tail_pair_combine(c, tails[0], t);
    }
    for extra in &tails[1..] {
        c = tail_pair_combine(c, *extra, t);
    }
    let tau = tail_contraction(w, c.r)?;
    Ok(TailBound::new(tau * c.s, tau * c.r, w))
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateReport {
    pub closes: bool,
    pub first_failure: Option<u32>,
    pub steps: u32,
    pub w: f64,
    pub s_seed: f64,
    pub r_seed: f64,
    pub s_final: f64,
    pub r_final: f64,
    pub t_used: f64,
    /// Worst s_n / s_seed over the run (margin < 1 means the induction has
    /// slack).
    pub margin: f64,
    /// Radius 2 beta^{1/4} |w| of the certified neighborhood.
    pub concentration_radius: f64,
    /// When the induction closes: bound on mu(|z - w| >= radius), i.e.
    /// 2 s / (beta^{1/4} |w|) divided by sigma_i([1, inf)) = 1/4.
    pub concentration_bound: Option<f64>,
}

fn certify_with_t(
    w: f64,
    beta: f64,
    nu_tail: TailBound,
    eta_tail: TailBound,
    n_steps: u32,
    t: f64,
    k: u32,
) -> CertificateReport {
    let s0 = beta.powf(0.75) * w * w;
    let r0 = beta.powf(0.25) * w.abs();
    let mut s = s0;
    let mut r = r0;
    let mut closes = true;
    let mut first_failure = None;
    let mut margin = 0.0f64;
    for step in 1..=n_steps {
        let den = TailBound::new(s, r, w);
        match tail_step(&[den, nu_tail, eta_tail], t, w, k) {
            Ok(next) => {
                s = next.s;
                r = next.r;
                if s0 > 0.0 {
                    margin = margin.max(s / s0).max(r / r0);
                }
                if s > s0 || r > r0 {
                    closes = false;
                    first_failure = Some(step);
                    break;
                }
            }
            Err(_) => {
                closes = false;
                first_failure = Some(step);
                break;
            }
        }
    }
    let radius = 2.0 * beta.powf(0.25) * w.abs();
    let bound = if closes && beta > 0.0 {
        Some(8.0 * s / (beta.powf(0.25) * w.abs()))
    } else if closes {
        Some(0.0)
    } else {
        None
    };
    CertificateReport {
        closes,
        first_failure,
        steps: n_steps,
        w,
        s_seed: s0,
        r_seed: r0,
        s_final: s,
        r_final: r,
        t_used: t,
        margin,
        concentration_radius: radius,
        concentration_bound: bound,
    }
}

/// Hyperbolic-regime tail certificate. Seeds (s0, r0) =
/// (beta^{3/4} w^2, beta^{1/4} |w|) and iterates tail_step; the induction
/// closes when (s_n, r_n) stays below the seed for every step. `t_override`
/// pins the combine parameter; otherwise a geometric grid over multiples of
/// beta^{1/2} w^2 is searched and the first closing value is reported.
pub fn tail_certify(
    energy: &EnergyPoint,
    beta: f64,
    nu_tail: TailBound,
    eta_tail: TailBound,
    n_steps: u32,
    t_override: Option<f64>,
) -> Result<CertificateReport, DensityError> {
    let k = energy.k;
    let threshold = 2.0 * (k as f64).sqrt();
    if energy.e.abs() < threshold {
        return Err(DensityError::NotHyperbolic(energy.e.abs(), threshold));
    }
    if !(0.0..1.0).contains(&beta) {
        return Err(DensityError::BadConfig("beta must lie in [0, 1)".into()));
    }
    let w = free_green(Complex64::new(energy.e, 0.0), k).re;
    let t0 = beta.sqrt() * w * w;
    if let Some(t) = t_override {
        return Ok(certify_with_t(w, beta, nu_tail, eta_tail, n_steps, t, k));
    }
    let mut best = certify_with_t(w, beta, nu_tail, eta_tail, n_steps, t0, k);
    if best.closes {
        return Ok(best);
    }
    for j in 1..=8 {
        let t = t0 * (1u32 << j) as f64;
        let rep = certify_with_t(w, beta, nu_tail, eta_tail, n_steps, t, k);
        if rep.closes {
            return Ok(rep);
        }
        if rep.margin < best.margin || best.margin == 0.0 {
            best = rep;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::population::MeasurePool;
    use std::f64::consts::PI;

    fn p(re: f64, im: f64) -> HalfPlanePoint {
        HalfPlanePoint::new(re, im).unwrap()
    }

    #[test]
    fn cauchy_density_examples() {
        assert!((cauchy_density(p(0.0, 1.0), 0.0) - 1.0 / PI).abs() < 1e-15);
        assert!((cauchy_density(p(0.0, 1.0), 1.0) - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert!((cauchy_density(p(2.0, 3.0), 2.0) - 1.0 / (3.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn project_single_point_matches_closed_form() {
        let spec = GridSpec::new(-8.0, 8.0, 1 << 12).unwrap();
        let pool = MeasurePool::from_samples(vec![p(0.0, 1.0); 5], 0, 0);
        let f = cauchy_project(&pool, spec).unwrap();
        for i in 0..spec.n_points {
            assert!((f.values[i] - cauchy_density(p(0.0, 1.0), spec.x(i))).abs() < 1e-12);
        }
        let t = f.tail.unwrap();
        // exact Cauchy tail scale is Im/pi; the probe fit approaches it from
        // below as u^2/(1 + u^2)
        assert!(t.s >= 0.99 / PI && t.s <= 1.0 / PI + 1e-12);
    }

    #[test]
    fn project_two_point_mixture() {
        let spec = GridSpec::new(-8.0, 8.0, 1 << 10).unwrap();
        let pool = MeasurePool::from_samples(vec![p(0.0, 1.0), p(-1.0, 1.0)], 0, 0);
        let f = cauchy_project(&pool, spec).unwrap();
        for i in 0..spec.n_points {
            let x = spec.x(i);
            let want = 0.5 * (cauchy_density(p(0.0, 1.0), x) + cauchy_density(p(-1.0, 1.0), x));
            assert!((f.values[i] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn project_rejects_narrow_grid() {
        let spec = GridSpec::new(-1.0, 1.0, 8).unwrap();
        let pool = MeasurePool::from_samples(vec![p(5.0, 1.0)], 0, 0);
        assert!(matches!(cauchy_project(&pool, spec), Err(DensityError::GridTooNarrow(..))));
    }

    #[test]
    fn convolve_delta_identity() {
        let spec = GridSpec::new(-8.0, 8.0, 1 << 10).unwrap();
        let f = cauchy_grid(p(0.5, 1.0), spec);
        let mut delta = GridDensity::zeros(spec);
        let i0 = spec.n_points / 2; // x = 0 exactly
        assert_eq!(spec.x(i0), 0.0);
        delta.values[i0] = 1.0 / spec.dx();
        let out = grid_convolve(&f, &delta).unwrap();
        for i in 8..spec.n_points - 8 {
            assert!((out.values[i] - f.values[i]).abs() < 1e-8, "node {i}");
        }
    }

    #[test]
    fn convolve_semigroup() {
        // sigma_i * sigma_i = sigma_2i in L1
        let spec = GridSpec::new(-512.0, 512.0, 1 << 17).unwrap();
        let f = cauchy_grid(p(0.0, 1.0), spec);
        let out = grid_convolve(&f, &f).unwrap();
        let want = cauchy_grid(p(0.0, 2.0), spec);
        let err = l1_distance(&out, &want).unwrap();
        assert!(err <= 1e-3, "L1 = {err}");
    }

    #[test]
    fn convolve_triangle() {
        let spec = GridSpec::new(-8.0, 8.0, 1 << 12).unwrap();
        let mut u = GridDensity::zeros(spec);
        for i in 0..spec.n_points {
            if spec.x(i).abs() <= 1.0 {
                u.values[i] = 0.5;
            }
        }
        let out = grid_convolve(&u, &u).unwrap();
        let dx = spec.dx();
        for i in 0..spec.n_points {
            let x = spec.x(i);
            let want = if x.abs() <= 2.0 { 0.25 * (2.0 - x.abs()) } else { 0.0 };
            assert!((out.values[i] - want).abs() < 2.0 * dx, "x = {x}");
        }
    }

    #[test]
    fn convolve_associative() {
        // compactly supported bumps: no off-grid leakage, so the only error
        // is FFT roundoff
        let spec = GridSpec::new(-64.0, 64.0, 1 << 13).unwrap();
        let bump = |c: f64, w: f64| {
            let mut g = GridDensity::zeros(spec);
            for i in 0..spec.n_points {
                let u = (spec.x(i) - c) / w;
                if u.abs() < 1.0 {
                    g.values[i] = (1.0 - u * u) / w;
                }
            }
            g
        };
        let a = bump(0.3, 1.0);
        let b = bump(-0.2, 0.5);
        let c = bump(0.1, 2.0);
        let ab_c = grid_convolve(&grid_convolve(&a, &b).unwrap(), &c).unwrap();
        let a_bc = grid_convolve(&a, &grid_convolve(&b, &c).unwrap()).unwrap();
        assert!(l1_distance(&ab_c, &a_bc).unwrap() < 1e-10);
        let ab = grid_convolve(&a, &b).unwrap();
        let ba = grid_convolve(&b, &a).unwrap();
        assert!(l1_distance(&ab, &ba).unwrap() < 1e-12);
    }

    #[test]
    fn pushforward_fixes_sigma_i() {
        // psi fixes i and sigma_i is automorphism-invariant under psi
        let spec = GridSpec::new(-64.0, 64.0, 1 << 15).unwrap();
        let f = cauchy_grid(p(0.0, 1.0), spec);
        let out = pushforward_reciprocal(&f, 0.0).unwrap();
        let err = l1_distance(&out, &f).unwrap();
        assert!(err < 2e-3, "L1 = {err}");
    }

    #[test]
    fn pushforward_moves_near_atom() {
        // bump at -1/w0 - E maps to a bump at w0
        let (w0, e) = (-0.5, 3.0);
        let pre = -1.0 / w0 - e; // = -1
        let spec = GridSpec::new(-16.0, 16.0, 1 << 14).unwrap();
        let f = cauchy_grid(p(pre, 1e-3), spec);
        let out = pushforward_reciprocal(&f, e).unwrap();
        let imax = (0..spec.n_points).max_by(|&a, &b| out.values[a].total_cmp(&out.values[b])).unwrap();
        assert!((spec.x(imax) - w0).abs() < 1e-2, "peak at {}", spec.x(imax));
    }

    #[test]
    fn pushforward_conserves_mass() {
        let spec = GridSpec::new(-64.0, 64.0, 1 << 15).unwrap();
        for (a, b, e) in [(0.0, 1.0, 0.0), (0.5, 2.0, 1.0), (-1.0, 0.5, 3.0)] {
            let f = cauchy_grid(p(a, b), spec);
            let out = pushforward_reciprocal(&f, e).unwrap();
            let m = out.total_mass();
            assert!((m - 1.0).abs() <= 1e-3, "mass = {m} for ({a}, {b}, {e})");
        }
    }

    #[test]
    fn density_step_fixed_point_at_zero_disorder() {
        // eta large enough that sigma_w (width ~ eta/2 near E = 3) spans
        // several grid cells; narrower spikes are not grid-representable
        let energy = EnergyPoint::new(3.0, 0.05, 2).unwrap();
        let spec = GridSpec::new(-64.0, 64.0, 1 << 15).unwrap();
        let f = cauchy_grid(energy.free_point(), spec);
        let out = density_step(&f, None, &energy).unwrap();
        let err = l1_distance(&out, &f).unwrap();
        assert!(err <= 5e-3, "L1 = {err}");
    }

    #[test]
    fn density_step_mass_drift() {
        let energy = EnergyPoint::new(0.0, 0.01, 2).unwrap();
        let spec = GridSpec::new(-64.0, 64.0, 1 << 14).unwrap();
        let mut f = cauchy_grid(energy.free_point(), spec);
        for _ in 0..20 {
            f = density_step(&f, None, &energy).unwrap();
            assert!((f.total_mass() - 1.0).abs() <= 1e-3);
        }
    }

    #[test]
    fn tail_combine_example() {
        let out = tail_pair_combine(TailBound::new(1.0, 0.0, 0.0), TailBound::new(1.0, 0.0, 0.0), 1.0);
        assert_eq!((out.s, out.r), (10.0, 1.0));
    }

    #[test]
    fn tail_contraction_example() {
        let tau = tail_contraction(-0.5, 0.1).unwrap();
        assert!((tau - 0.25 / 0.9025).abs() < 1e-10);
        assert!((tau - 0.27701).abs() < 5e-6);
        assert!(tail_contraction(-0.5, 2.5).is_err());
    }

    #[test]
    fn tail_pushforward_example() {
        // single tail, K = 1, t = 0: pure contraction of (1, 0.1) at w = -1/2
        let out = tail_step(&[TailBound::new(1.0, 0.1, -0.5)], 0.0, -0.5, 1).unwrap();
        assert!((out.s - 0.27701).abs() < 5e-6);
        assert!((out.r - 0.027701).abs() < 5e-7);
    }

    #[test]
    fn tail_step_monotone() {
        let base = tail_step(
            &[TailBound::new(0.01, 0.02, -0.5), TailBound::new(0.001, 0.0005, 0.0)],
            0.005,
            -0.5,
            2,
        )
        .unwrap();
        let bigger = tail_step(
            &[TailBound::new(0.02, 0.03, -0.5), TailBound::new(0.002, 0.0005, 0.0)],
            0.005,
            -0.5,
            2,
        )
        .unwrap();
        assert!(bigger.s >= base.s && bigger.r >= base.r);
    }

    #[test]
    fn certificate_closes_in_hyperbolic_regime() {
        let energy = EnergyPoint::new(3.0, 1e-6, 2).unwrap();
        let beta = 1e-4;
        let nu = TailBound::new(2.0 * beta, beta, 0.0);
        let eta = TailBound::new(2.0 * beta * beta, beta * beta, 0.0);
        let rep = tail_certify(&energy, beta, nu, eta, 200, None).unwrap();
        assert!(rep.closes, "margin {}", rep.margin);
        assert!(rep.concentration_bound.unwrap() > 0.0);
        assert!(rep.s_final <= rep.s_seed && rep.r_final <= rep.r_seed);
    }

    #[test]
    fn certificate_fails_at_parabolic_boundary() {
        let e = 2.0 * 2f64.sqrt();
        let energy = EnergyPoint::new(e, 1e-6, 2).unwrap();
        let beta = 1e-4;
        let nu = TailBound::new(2.0 * beta, beta, 0.0);
        let eta = TailBound::new(2.0 * beta * beta, beta * beta, 0.0);
        let rep = tail_certify(&energy, beta, nu, eta, 200, None).unwrap();
        assert!(!rep.closes);
        assert!(rep.first_failure.is_some());
    }

    #[test]
    fn certificate_trivial_at_zero_beta() {
        let energy = EnergyPoint::new(3.0, 1e-6, 2).unwrap();
        let zero = TailBound::new(0.0, 0.0, 0.0);
        let rep = tail_certify(&energy, 0.0, zero, zero, 50, None).unwrap();
        assert!(rep.closes);
        assert_eq!(rep.s_final, 0.0);
    }

    #[test]
    fn certificate_rejects_elliptic_energy() {
        let energy = EnergyPoint::new(1.0, 1e-6, 2).unwrap();
        let zero = TailBound::new(0.0, 0.0, 0.0);
        assert!(matches!(
            tail_certify(&energy, 1e-4, zero, zero, 10, None),
            Err(DensityError::NotHyperbolic(..))
        ));
    }

    #[test]
    fn text_export_roundtrip_shape() {
        let spec = GridSpec::new(-8.0, 8.0, 8).unwrap();
        let f = cauchy_grid(p(0.0, 1.0), spec);
        let mut buf = Vec::new();
        f.write_text(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 9);
        assert!(text.lines().last().unwrap().starts_with("# tail"));
    }
}
