//! Lyapunov exponent estimation, the delocalization criterion, phase
//! classification and concentration probes over converged pools.

use crate::disorder::DisorderLaw;
use crate::halfplane::{EnergyPoint, HalfPlaneError, HalfPlanePoint};
use crate::population::{
    concentration_grid, pool_stats, run_to_fixed_point, InitMode, IterationConfig, MeasurePool,
    PopulationError,
};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpectraError {
    #[error(transparent)]
    Population(#[from] PopulationError),
    #[error(transparent)]
    HalfPlane(#[from] HalfPlaneError),
    #[error("path of length {0} requested from replicas of depth {1}")]
    PathTooShort(usize, usize),
    #[error("invalid configuration: {0}")]
    BadConfig(String),
}

/// Point estimate with a jackknife standard error.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

fn mean_stderr(xs: impl Iterator<Item = f64>) -> Estimate {
    let xs: Vec<f64> = xs.collect();
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    // jackknife stderr of a sample mean reduces to s / sqrt(n)
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    Estimate { value: mean, stderr: (var / n).sqrt() }
}

/// Sample mean of log |g| over the pool, with standard error.
pub fn lyapunov_estimate(pool: &MeasurePool) -> Estimate {
    mean_stderr(pool.samples().iter().map(|p| p.abs().ln()))
}

/// lambda + log K; positive predicts absolutely continuous spectrum.
pub fn criterion_margin(lyapunov: f64, k: u32) -> f64 {
    lyapunov + (k as f64).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseLabel {
    DelocalizedPredicted,
    LocalizedPredicted,
    Boundary,
}

impl std::fmt::Display for PhaseLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PhaseLabel::DelocalizedPredicted => "delocalized_predicted",
            PhaseLabel::LocalizedPredicted => "localized_predicted",
            PhaseLabel::Boundary => "boundary",
        })
    }
}

pub fn phase_classify(e: f64, k: u32, eps: f64, margin: f64, stderr: f64) -> PhaseLabel {
    assert!(eps > 0.0);
    let edge = (k + 1) as f64;
    if e.abs() > edge + eps {
        PhaseLabel::LocalizedPredicted
    } else if margin - 2.0 * stderr > 0.0 && e.abs() < edge - eps {
        PhaseLabel::DelocalizedPredicted
    } else {
        PhaseLabel::Boundary
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConcentrationProbe {
    /// t -> empirical P(|g - w| >= t |w|) on a geometric grid.
    pub table: Vec<(f64, f64)>,
    /// Smallest grid t with P(t) <= t |w| (self-consistent threshold).
    pub t_star: Option<f64>,
}

pub fn concentration_probe(pool: &MeasurePool, energy: &EnergyPoint) -> ConcentrationProbe {
    let w = energy.free_point();
    let stats = pool_stats(pool, w);
    let wn = w.abs();
    let t_star = stats
        .concentration
        .iter()
        .find(|&&(t, p)| p <= t * wn)
        .map(|&(t, _)| t);
    ConcentrationProbe { table: stats.concentration, t_star }
}

/// t -> empirical P(|g| >= 1/t) on the standard geometric grid; diagnostic
/// for the weak integrability bound (reported, never asserted).
pub fn weak_bound_table(pool: &MeasurePool) -> Vec<(f64, f64)> {
    let n = pool.len() as f64;
    concentration_grid()
        .into_iter()
        .map(|t| {
            let c = pool.samples().iter().filter(|p| p.abs() >= 1.0 / t).count();
            (t, c as f64 / n)
        })
        .collect()
}

/// (1/n) mean over replicas of log |prod_{k<=n} g(p_k)| along stored root
/// paths; by the off-diagonal factorization this estimates the Lyapunov
/// exponent.
pub fn offdiagonal_check(paths: &[Vec<HalfPlanePoint>], n: usize) -> Result<Estimate, SpectraError> {
    if paths.is_empty() || n == 0 {
        return Err(SpectraError::BadConfig("need replicas and n >= 1".into()));
    }
    let depth = paths[0].len();
    if n > depth {
        return Err(SpectraError::PathTooShort(n, depth));
    }
    Ok(mean_stderr(paths.iter().map(|path| {
        path[..n].iter().map(|g| g.abs().ln()).sum::<f64>() / n as f64
    })))
}

#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaPolicy {
    Fixed(f64),
    /// eta = min(beta^2, 1e-3) * {1, 1/4, 1/16}, extrapolated linearly to 0.
    Schedule,
}

#[derive(Debug, Clone)]
pub struct SolveSettings {
    pub e: f64,
    pub k: u32,
    pub beta: f64,
    pub law: Option<DisorderLaw>,
    pub eta: EtaPolicy,
    pub pool_size: usize,
    pub max_generations: u32,
    pub convergence_tol: f64,
    /// Phase-classification boundary width.
    pub eps: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralReport {
    pub e: f64,
    pub k: u32,
    pub beta: f64,
    /// Smallest eta actually simulated.
    pub eta: f64,
    pub lyapunov: f64,
    pub lyapunov_stderr: f64,
    pub criterion_margin: f64,
    pub log_w: f64,
    pub t_star: Option<f64>,
    pub phase: PhaseLabel,
    pub converged: bool,
    pub generations: u32,
    pub seed: u64,
    /// Raw per-eta values behind any extrapolation.
    pub eta_schedule: Vec<f64>,
    pub lyapunov_raw: Vec<f64>,
    pub concentration: Vec<(f64, f64)>,
}

impl SpectralReport {
    pub const CSV_HEADER: &'static str = "e,k,beta,eta,lyapunov,lyapunov_stderr,criterion_margin,log_w,t_star,phase,converged,generations,seed";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.e,
            self.k,
            self.beta,
            self.eta,
            self.lyapunov,
            self.lyapunov_stderr,
            self.criterion_margin,
            self.log_w,
            self.t_star.map_or(String::from(""), |t| t.to_string()),
            self.phase,
            self.converged,
            self.generations,
            self.seed
        )
    }
}

fn run_at_eta(
    s: &SolveSettings,
    eta: f64,
) -> Result<(MeasurePool, Estimate, bool, u32), SpectraError> {
    let energy = EnergyPoint::new(s.e, eta, s.k)?;
    let mut cfg = IterationConfig::new(energy, s.law.clone(), s.seed);
    cfg.pool_size = s.pool_size;
    cfg.max_generations = s.max_generations;
    cfg.convergence_tol = s.convergence_tol;
    let init = InitMode::Delta(energy.free_point());
    let (pool, trace) = run_to_fixed_point(&cfg, init)?;
    let lam = lyapunov_estimate(&pool);
    Ok((pool, lam, trace.converged, trace.generations))
}

/// Least-squares linear extrapolation of (eta_i, lambda_i) to eta = 0, with
/// the intercept stderr propagated from the per-point errors.
fn extrapolate_to_zero(etas: &[f64], lams: &[Estimate]) -> Estimate {
    let n = etas.len() as f64;
    let sx: f64 = etas.iter().sum();
    let sxx: f64 = etas.iter().map(|x| x * x).sum();
    let det = n * sxx - sx * sx;
    let mut value = 0.0;
    let mut var = 0.0;
    for (x, l) in etas.iter().zip(lams) {
        let c = (sxx - x * sx) / det; // intercept coefficient of point i
        value += c * l.value;
        var += c * c * l.stderr * l.stderr;
    }
    Estimate { value, stderr: var.sqrt() }
}

/// Full solve: population run(s) per the eta policy, Lyapunov estimate,
/// criterion margin, concentration probe and phase label.
pub fn solve_report(s: &SolveSettings) -> Result<SpectralReport, SpectraError> {
    if s.beta > 0.0 && s.law.is_none() || s.beta == 0.0 && s.law.is_some() {
        return Err(SpectraError::BadConfig("beta and law must be consistent".into()));
    }
    let etas: Vec<f64> = match s.eta {
        EtaPolicy::Fixed(eta) => vec![eta],
        EtaPolicy::Schedule => {
            let base = if s.beta > 0.0 { (s.beta * s.beta).min(1e-3) } else { 1e-3 };
            vec![base, base / 4.0, base / 16.0]
        }
    };
    let mut lams = Vec::new();
    let mut converged = true;
    let mut last: Option<(MeasurePool, u32, f64)> = None;
    for &eta in &etas {
        let (pool, lam, ok, gens) = run_at_eta(s, eta)?;
        lams.push(lam);
        converged &= ok;
        last = Some((pool, gens, eta));
    }
    let (pool, generations, eta_min) = last.expect("at least one eta");
    let lam = if etas.len() == 1 { lams[0] } else { extrapolate_to_zero(&etas, &lams) };
    let margin = criterion_margin(lam.value, s.k);
    let energy = EnergyPoint::new(s.e, eta_min, s.k)?;
    let probe = concentration_probe(&pool, &energy);
    let phase = phase_classify(s.e, s.k, s.eps, margin, lam.stderr);
    let log_w = energy.free_point().abs().ln();
    Ok(SpectralReport {
        e: s.e,
        k: s.k,
        beta: s.beta,
        eta: eta_min,
        lyapunov: lam.value,
        lyapunov_stderr: lam.stderr,
        criterion_margin: margin,
        log_w,
        t_star: probe.t_star,
        phase,
        converged,
        generations,
        seed: s.seed,
        eta_schedule: etas,
        lyapunov_raw: lams.iter().map(|l| l.value).collect(),
        concentration: probe.table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disorder::{DisorderLaw, UniformScaling};
    use crate::halfplane::free_green;
    use crate::population::{finite_tree_paths, init_pool, step_pool, TreeBoundary};
    use num_complex::Complex64;

    fn delta_pool(e: f64, eta: f64, k: u32, n: usize) -> (MeasurePool, EnergyPoint) {
        let energy = EnergyPoint::new(e, eta, k).unwrap();
        let mut cfg = IterationConfig::new(energy, None, 0);
        cfg.pool_size = n;
        (init_pool(InitMode::Delta(energy.free_point()), &cfg).unwrap(), energy)
    }

    #[test]
    fn lyapunov_examples() {
        let (pool, energy) = delta_pool(0.0, 1e-6, 2, 100);
        let lam = lyapunov_estimate(&pool);
        assert!(lam.stderr < 1e-12);
        assert!((lam.value - energy.free_point().abs().ln()).abs() < 1e-15);
        // K=2, E=0, small eta: log(1/sqrt 2)
        assert!((lam.value - (-0.5 * 2f64.ln())).abs() < 1e-5);
        assert!((lam.value + 0.34657).abs() < 1e-4);
        // K=2, E=3: log(1/2), margin 0 at |E| = K+1
        let (pool, _) = delta_pool(3.0, 1e-8, 2, 100);
        let lam = lyapunov_estimate(&pool);
        assert!((lam.value - 0.5f64.ln()).abs() < 1e-6);
        assert!(criterion_margin(lam.value, 2).abs() < 1e-6);
    }

    #[test]
    fn criterion_margin_arithmetic() {
        assert!((criterion_margin(-0.34657, 2) - 0.34658).abs() < 5e-6);
        assert_eq!(criterion_margin(-(2f64.ln()), 2), 0.0);
        assert!((criterion_margin(-1.0, 2) + 0.30685).abs() < 1e-5);
    }

    #[test]
    fn phase_classify_examples() {
        assert_eq!(
            phase_classify(0.0, 2, 0.1, 0.34, 0.001),
            PhaseLabel::DelocalizedPredicted
        );
        assert_eq!(phase_classify(3.5, 2, 0.1, -1.0, 0.001), PhaseLabel::LocalizedPredicted);
        assert_eq!(phase_classify(3.0, 2, 0.1, 0.2, 0.001), PhaseLabel::Boundary);
    }

    #[test]
    fn concentration_zero_disorder() {
        let (pool, energy) = delta_pool(1.0, 1e-4, 2, 200);
        let probe = concentration_probe(&pool, &energy);
        assert!(probe.table.iter().all(|&(_, p)| p == 0.0));
        assert_eq!(probe.t_star, Some(concentration_grid()[0]));
    }

    #[test]
    fn t_star_monotone_in_beta() {
        let mut stars = Vec::new();
        for beta in [0.0125, 0.05] {
            let law = DisorderLaw::uniform(beta, 2.0, UniformScaling::MomentMatched).unwrap();
            let energy = EnergyPoint::new(0.0, 1e-4, 2).unwrap();
            let mut cfg = IterationConfig::new(energy, Some(law), 21);
            cfg.pool_size = 20_000;
            let mut pool = init_pool(InitMode::Delta(energy.free_point()), &cfg).unwrap();
            for _ in 0..60 {
                pool = step_pool(&pool, &cfg);
            }
            stars.push(concentration_probe(&pool, &energy).t_star.unwrap());
        }
        assert!(stars[0] < stars[1], "t*: {stars:?}");
    }

    #[test]
    fn weak_bound_shape_reported() {
        let law = DisorderLaw::uniform(0.05, 2.0, UniformScaling::Plain).unwrap();
        let energy = EnergyPoint::new(0.0, 1e-4, 2).unwrap();
        let mut cfg = IterationConfig::new(energy, Some(law), 22);
        cfg.pool_size = 10_000;
        let mut pool = init_pool(InitMode::LeafLaw, &cfg).unwrap();
        for _ in 0..40 {
            pool = step_pool(&pool, &cfg);
        }
        let table = weak_bound_table(&pool);
        // non-decreasing in t, bounded by 1
        for w in table.windows(2) {
            assert!(w[1].1 >= w[0].1);
        }
        assert!(table.iter().all(|&(_, p)| (0.0..=1.0).contains(&p)));
    }

    #[test]
    fn offdiagonal_zero_disorder_is_exact() {
        // beta = 0 at the exact fixed point: every path vertex has |g| = |w|
        let energy = EnergyPoint::new(1.0, 0.05, 2).unwrap();
        let cfg = IterationConfig::new(energy, None, 23);
        let w = energy.free_point();
        let boundary_pool = MeasurePool::from_samples(vec![w; 64], 0, 23);
        let paths = finite_tree_paths(6, &cfg, 16, TreeBoundary::Pool(&boundary_pool)).unwrap();
        for n in [1, 3, 6] {
            let est = offdiagonal_check(&paths, n).unwrap();
            assert!((est.value - w.abs().ln()).abs() < 1e-12, "n = {n}");
        }
        assert!(matches!(
            offdiagonal_check(&paths, 7),
            Err(SpectraError::PathTooShort(7, 6))
        ));
    }

    #[test]
    fn offdiagonal_n1_matches_pool_mean() {
        let law = DisorderLaw::uniform(0.1, 2.0, UniformScaling::Plain).unwrap();
        let energy = EnergyPoint::new(0.5, 0.01, 2).unwrap();
        let cfg = IterationConfig::new(energy, Some(law), 24);
        let paths = finite_tree_paths(4, &cfg, 2_000, TreeBoundary::LeafLaw).unwrap();
        let roots: Vec<HalfPlanePoint> = paths.iter().map(|p| p[0]).collect();
        let pool = MeasurePool::from_samples(roots, 0, 24);
        let est = offdiagonal_check(&paths, 1).unwrap();
        let lam = lyapunov_estimate(&pool);
        assert!((est.value - lam.value).abs() < 1e-14);
    }

    #[test]
    fn solve_report_zero_disorder() {
        let s = SolveSettings {
            e: 0.0,
            k: 2,
            beta: 0.0,
            law: None,
            eta: EtaPolicy::Fixed(0.01),
            pool_size: 500,
            max_generations: 100,
            convergence_tol: 0.005,
            eps: 0.1,
            seed: 7,
        };
        let rep = solve_report(&s).unwrap();
        let w = free_green(Complex64::new(0.0, 0.01), 2);
        assert!((rep.lyapunov - w.norm().ln()).abs() < 1e-12);
        assert!(rep.criterion_margin > 0.0);
        assert!(rep.converged);
        assert_eq!(rep.phase, PhaseLabel::DelocalizedPredicted);
        // csv row has the documented number of columns
        assert_eq!(rep.csv_row().split(',').count(), SpectralReport::CSV_HEADER.split(',').count());
        // json serializes
        let js = serde_json::to_string(&rep).unwrap();
        assert!(js.contains("\"criterion_margin\""));
    }

    #[test]
    fn extrapolation_recovers_linear_truth() {
        let etas = [1e-3, 2.5e-4, 6.25e-5];
        let lams: Vec<Estimate> = etas
            .iter()
            .map(|&x| Estimate { value: -0.3 + 2.0 * x, stderr: 1e-6 })
            .collect();
        let out = extrapolate_to_zero(&etas, &lams);
        assert!((out.value + 0.3).abs() < 1e-12);
    }
}
