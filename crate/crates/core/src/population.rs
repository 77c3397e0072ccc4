//! Monte Carlo population-dynamics backend for the convolution fixed-point
//! equation, plus the exact finite-tree recursion used as an oracle.

use crate::disorder::DisorderLaw;
use crate::halfplane::{hyp_dist, EnergyPoint, HalfPlanePoint};
use crate::ks::ks_two_sample_sorted;
use crate::rng::{stream, StreamLabel};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PopulationError {
    #[error("pool sizes differ: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("delta initialization requires a point of the open upper half-plane")]
    BadDeltaPoint,
    #[error("finite tree of depth {depth} with K = {k} exceeds the vertex cap of 1e7 per replica")]
    MemoryGuard { depth: u32, k: u32 },
    #[error("invalid configuration: {0}")]
    BadConfig(String),
}

/// Empirical measure on the upper half-plane: N samples plus the seed that
/// produced them. Represents the law mu of the punctured Green's function.
#[derive(Debug, Clone)]
pub struct MeasurePool {
    samples: Vec<HalfPlanePoint>,
    generation: u32,
    seed: u64,
}

impl MeasurePool {
    pub fn samples(&self) -> &[HalfPlanePoint] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn generation(&self) -> u32 {
        self.generation
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn from_samples(samples: Vec<HalfPlanePoint>, generation: u32, seed: u64) -> Self {
        Self { samples, generation, seed }
    }

    fn sorted_marginals(&self) -> (Vec<f64>, Vec<f64>) {
        let mut re: Vec<f64> = self.samples.iter().map(|p| p.re()).collect();
        let mut im: Vec<f64> = self.samples.iter().map(|p| p.im()).collect();
        re.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        im.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        (re, im)
    }

    /// CSV export: one `re,im` line per sample.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "re,im")?;
        for p in &self.samples {
            writeln!(w, "{},{}", p.re(), p.im())?;
        }
        Ok(())
    }

    /// Binary export: little-endian f64 pairs (re, im).
    pub fn write_binary<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        for p in &self.samples {
            w.write_all(&p.re().to_le_bytes())?;
            w.write_all(&p.im().to_le_bytes())?;
        }
        Ok(())
    }
}

/// Parameters of one population run.
#[derive(Debug, Clone)]
pub struct IterationConfig {
    pub energy: EnergyPoint,
    /// None means zero disorder (h identically 0).
    pub law: Option<DisorderLaw>,
    pub pool_size: usize,
    pub max_generations: u32,
    pub convergence_tol: f64,
    pub seed: u64,
}

impl IterationConfig {
    pub fn new(energy: EnergyPoint, law: Option<DisorderLaw>, seed: u64) -> Self {
        Self {
            energy,
            law,
            pool_size: 100_000,
            max_generations: 500,
            convergence_tol: 0.005,
            seed,
        }
    }

    fn draw_potential<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.law {
            Some(law) => law.sample_one(rng),
            None => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum InitMode {
    Delta(HalfPlanePoint),
    /// Leaf value g = -1/(h + E + i eta), so generation n matches the
    /// depth-(n+1) finite tree exactly in law.
    LeafLaw,
}

pub fn init_pool(mode: InitMode, cfg: &IterationConfig) -> Result<MeasurePool, PopulationError> {
    let n = cfg.pool_size;
    if n == 0 {
        return Err(PopulationError::BadConfig("pool_size must be >= 1".into()));
    }
    let z = cfg.energy.z();
    let samples = match mode {
        InitMode::Delta(p) => vec![p; n],
        InitMode::LeafLaw => (0..n)
            .into_par_iter()
            .map(|j| {
                let mut rng = stream(cfg.seed, StreamLabel::PoolInit, j as u64);
                let h = cfg.draw_potential(&mut rng);
                let g = -Complex64::new(1.0, 0.0) / (h + z);
                HalfPlanePoint::from_complex(g).expect("eta > 0 keeps g in H")
            })
            .collect(),
    };
    Ok(MeasurePool { samples, generation: 0, seed: cfg.seed })
}

/// One generation of the distributional recursion: each output slot draws K
/// parents with replacement and a fresh potential, then applies
/// g' = -1/(g_1 + ... + g_K + h + E + i eta).
pub fn step_pool(pool: &MeasurePool, cfg: &IterationConfig) -> MeasurePool {
    let n = pool.samples.len();
    let k = cfg.energy.k as usize;
    let z = cfg.energy.z();
    let generation = pool.generation + 1;
    let samples: Vec<HalfPlanePoint> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut rng = stream(pool.seed, StreamLabel::PoolStep { generation }, j as u64);
            let mut sum = Complex64::new(0.0, 0.0);
            for _ in 0..k {
                let i = rng.random_range(0..n);
                sum += pool.samples[i].as_complex();
            }
            let h = cfg.draw_potential(&mut rng);
            let g = -Complex64::new(1.0, 0.0) / (sum + h + z);
            HalfPlanePoint::from_complex(g).expect("Im denominator >= eta > 0")
        })
        .collect();
    MeasurePool { samples, generation, seed: pool.seed }
}

/// Max of the two one-dimensional KS distances of the re and im marginals.
/// Empirical Wasserstein-style surrogate for comparing pools.
pub fn pool_distance(a: &MeasurePool, b: &MeasurePool) -> Result<f64, PopulationError> {
    if a.len() != b.len() {
        return Err(PopulationError::SizeMismatch(a.len(), b.len()));
    }
    let (ar, ai) = a.sorted_marginals();
    let (br, bi) = b.sorted_marginals();
    Ok(ks_two_sample_sorted(&ar, &br).max(ks_two_sample_sorted(&ai, &bi)))
}

/// Sup distance of sorted marginals (an infinity-Wasserstein surrogate);
/// complements KS, which saturates at 1 for atomic pools even when the atoms
/// are a machine epsilon apart.
fn sorted_sup_distance(a: &MeasurePool, b: &MeasurePool) -> f64 {
    let (ar, ai) = a.sorted_marginals();
    let (br, bi) = b.sorted_marginals();
    let sup = |x: &[f64], y: &[f64]| {
        x.iter().zip(y).map(|(u, v)| (u - v).abs()).fold(0.0f64, f64::max)
    };
    sup(&ar, &br).max(sup(&ai, &bi))
}

#[derive(Debug, Clone)]
pub struct ConvergenceTrace {
    /// Decorrelated metric per generation: pool_distance(gen n, gen n-5).
    pub metrics: Vec<f64>,
    pub converged: bool,
    pub generations: u32,
}

/// Iterate until the decorrelated KS metric drops below `convergence_tol`
/// or `max_generations` is reached. Non-convergence is reported in the
/// trace, not an error.
pub fn run_to_fixed_point(
    cfg: &IterationConfig,
    init: InitMode,
) -> Result<(MeasurePool, ConvergenceTrace), PopulationError> {
    const LAG: usize = 5;
    let mut pool = init_pool(init, cfg)?;
    let mut history: Vec<MeasurePool> = vec![pool.clone()];
    let mut metrics = Vec::new();
    let mut converged = false;
    for gen in 1..=cfg.max_generations {
        pool = step_pool(&pool, cfg);
        if history.len() >= LAG {
            let reference = &history[history.len() - LAG];
            let m = pool_distance(&pool, reference)?;
            metrics.push(m);
            let bit_stable = sorted_sup_distance(&pool, reference) <= 1e-9;
            if (m <= cfg.convergence_tol || bit_stable) && gen >= 10 {
                converged = true;
                break;
            }
        } else {
            metrics.push(f64::NAN);
        }
        history.push(pool.clone());
        if history.len() > LAG {
            history.remove(0);
        }
    }
    let generations = pool.generation;
    Ok((pool, ConvergenceTrace { metrics, converged, generations }))
}

/// Leaf boundary condition for finite-tree runs.
pub enum TreeBoundary<'a> {
    /// Leaves take g = -1/(h + E + i eta).
    LeafLaw,
    /// Leaves are drawn uniformly from an (assumed converged) pool; makes
    /// every vertex of the path marginally converged in law.
    Pool(&'a MeasurePool),
}

fn tree_vertex<R: Rng + ?Sized>(
    level: u32,
    cfg: &IterationConfig,
    boundary: &TreeBoundary<'_>,
    rng: &mut R,
    record: bool,
    out: &mut Vec<HalfPlanePoint>,
) -> Complex64 {
    let z = cfg.energy.z();
    let g = if level <= 1 {
        match boundary {
            TreeBoundary::LeafLaw => {
                let h = cfg.draw_potential(rng);
                -Complex64::new(1.0, 0.0) / (h + z)
            }
            TreeBoundary::Pool(pool) => {
                let i = rng.random_range(0..pool.len());
                pool.samples()[i].as_complex()
            }
        }
    } else {
        let h = cfg.draw_potential(rng);
        let mut sum = Complex64::new(0.0, 0.0);
        for child in 0..cfg.energy.k {
            sum += tree_vertex(level - 1, cfg, boundary, rng, record && child == 0, out);
        }
        -Complex64::new(1.0, 0.0) / (sum + h + z)
    };
    if record {
        out.push(HalfPlanePoint::from_complex(g).expect("tree values stay in H"));
    }
    g
}

fn check_tree_guard(depth: u32, k: u32) -> Result<(), PopulationError> {
    // vertices per replica: (K^depth - 1)/(K - 1)
    let mut vertices: u64 = 0;
    let mut level_size: u64 = 1;
    for _ in 0..depth {
        vertices = vertices.saturating_add(level_size);
        level_size = level_size.saturating_mul(k as u64);
        if vertices > 10_000_000 {
            return Err(PopulationError::MemoryGuard { depth, k });
        }
    }
    Ok(())
}

/// Exact punctured Green's function at the root of m independent depth-n
/// K-ary trees with i.i.d. potentials, computed bottom-up in O(depth) memory
/// per replica. Equals generation n-1 of `step_pool` from `LeafLaw`
/// initialization, in law.
pub fn finite_tree_green(
    depth: u32,
    cfg: &IterationConfig,
    replicas: usize,
) -> Result<MeasurePool, PopulationError> {
    if depth < 1 || replicas < 1 {
        return Err(PopulationError::BadConfig("depth and replicas must be >= 1".into()));
    }
    check_tree_guard(depth, cfg.energy.k)?;
    let samples: Vec<HalfPlanePoint> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(cfg.seed, StreamLabel::TreeReplica, r as u64);
            let mut sink = Vec::new();
            let g = tree_vertex(depth, cfg, &TreeBoundary::LeafLaw, &mut rng, false, &mut sink);
            HalfPlanePoint::from_complex(g).expect("tree values stay in H")
        })
        .collect();
    Ok(MeasurePool { samples, generation: depth - 1, seed: cfg.seed })
}

/// Realized finite trees with the per-vertex g values along a root path
/// retained, one path (root first) per replica. Path length equals `depth`.
pub fn finite_tree_paths(
    depth: u32,
    cfg: &IterationConfig,
    replicas: usize,
    boundary: TreeBoundary<'_>,
) -> Result<Vec<Vec<HalfPlanePoint>>, PopulationError> {
    if depth < 1 || replicas < 1 {
        return Err(PopulationError::BadConfig("depth and replicas must be >= 1".into()));
    }
    if let TreeBoundary::Pool(p) = &boundary {
        if p.is_empty() {
            return Err(PopulationError::BadConfig("boundary pool is empty".into()));
        }
    }
    check_tree_guard(depth, cfg.energy.k)?;
    let paths: Vec<Vec<HalfPlanePoint>> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(cfg.seed, StreamLabel::TreeReplica, r as u64);
            let mut out = Vec::with_capacity(depth as usize);
            tree_vertex(depth, cfg, &boundary, &mut rng, true, &mut out);
            out.reverse(); // recorded leaf-to-root; return root first
            out
        })
        .collect();
    Ok(paths)
}

/// Summary statistics of a pool against a reference point.
#[derive(Debug, Clone)]
pub struct PoolStats {
    /// Estimate of E d(g, ref)^2.
    pub mean_hyp_dist_sq: f64,
    /// Estimate of E d(g, ref).
    pub mean_hyp_dist: f64,
    /// Variance of d(g, ref).
    pub variance_hyp_dist: f64,
    /// t -> empirical P(|g - ref| >= t |ref|) on a geometric t-grid.
    pub concentration: Vec<(f64, f64)>,
    /// Mean of log |g|.
    pub lyapunov_raw: f64,
}

/// Geometric grid used for concentration tables.
pub fn concentration_grid() -> Vec<f64> {
    let n = 65;
    (0..n)
        .map(|i| 10f64.powf(-4.0 + 4.6 * i as f64 / (n - 1) as f64))
        .collect()
}

pub fn pool_stats(pool: &MeasurePool, reference: HalfPlanePoint) -> PoolStats {
    assert!(!pool.is_empty(), "pool_stats requires a nonempty pool");
    let n = pool.len() as f64;
    let mut sum_d = 0.0;
    let mut sum_d2 = 0.0;
    let mut sum_log = 0.0;
    let refc = reference.as_complex();
    let refn = reference.abs();
    let grid = concentration_grid();
    let mut counts = vec![0usize; grid.len()];
    for p in pool.samples() {
        let d = hyp_dist(*p, reference);
        sum_d += d;
        sum_d2 += d * d;
        sum_log += p.abs().ln();
        let rel = (p.as_complex() - refc).norm() / refn;
        for (i, &t) in grid.iter().enumerate() {
            if rel >= t {
                counts[i] += 1;
            } else {
                break;
            }
        }
    }
    let mean_d = sum_d / n;
    let mean_d2 = sum_d2 / n;
    PoolStats {
        mean_hyp_dist_sq: mean_d2,
        mean_hyp_dist: mean_d,
        variance_hyp_dist: (mean_d2 - mean_d * mean_d).max(0.0),
        concentration: grid.iter().copied().zip(counts.iter().map(|&c| c as f64 / n)).collect(),
        lyapunov_raw: sum_log / n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disorder::UniformScaling;
    use crate::halfplane::free_green;
    use crate::ks::ks_two_sample_band;

    fn cfg(e: f64, eta: f64, k: u32, law: Option<DisorderLaw>, n: usize, seed: u64) -> IterationConfig {
        let mut c = IterationConfig::new(EnergyPoint::new(e, eta, k).unwrap(), law, seed);
        c.pool_size = n;
        c
    }

    #[test]
    fn init_delta_and_leaf_examples() {
        let c = cfg(0.0, 1.0, 2, None, 4, 0);
        let p = init_pool(InitMode::Delta(HalfPlanePoint::new(0.0, 1.0).unwrap()), &c).unwrap();
        assert_eq!(p.len(), 4);
        for s in p.samples() {
            assert_eq!((s.re(), s.im()), (0.0, 1.0));
        }
        // leaf law with h == 0 at E=0, eta=1: all samples -1/i = i
        let p = init_pool(InitMode::LeafLaw, &c).unwrap();
        for s in p.samples() {
            assert!((s.as_complex() - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        }
        // delta at w_3 + i beta w_3^2, E=3, K=2, beta=0.01
        let w = free_green(Complex64::new(3.0, 0.0), 2);
        let z0 = HalfPlanePoint::new(w.re, 0.01 * w.re * w.re).unwrap();
        let c = cfg(3.0, 1e-3, 2, None, 8, 0);
        let p = init_pool(InitMode::Delta(z0), &c).unwrap();
        for s in p.samples() {
            assert!((s.re() + 0.5).abs() < 1e-15 && (s.im() - 0.0025).abs() < 1e-15);
        }
    }

    #[test]
    fn step_fixed_point_at_zero_disorder() {
        for (e, eta, k) in [(0.0, 0.01, 2u32), (3.0, 1e-3, 2), (1.0, 0.1, 3)] {
            let c = cfg(e, eta, k, None, 64, 1);
            let energy = c.energy;
            let w = energy.free_point();
            let mut pool = init_pool(InitMode::Delta(w), &c).unwrap();
            for _ in 0..100 {
                pool = step_pool(&pool, &c);
            }
            for s in pool.samples() {
                assert!((s.as_complex() - w.as_complex()).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn step_arithmetic_example() {
        // K=2, E=0, eta=0.01, pool of i, h == 0 -> -1/(2.01 i) = i/2.01
        let c = cfg(0.0, 0.01, 2, None, 16, 2);
        let pool = init_pool(InitMode::Delta(HalfPlanePoint::new(0.0, 1.0).unwrap()), &c).unwrap();
        let next = step_pool(&pool, &c);
        for s in next.samples() {
            assert!((s.as_complex() - Complex64::new(0.0, 1.0 / 2.01)).norm() < 1e-15);
        }
    }

    #[test]
    fn samples_bounded_by_inverse_eta() {
        let law = DisorderLaw::uniform(0.5, 2.0, UniformScaling::Plain).unwrap();
        let c = cfg(1.0, 0.05, 2, Some(law), 2000, 3);
        let mut pool = init_pool(InitMode::LeafLaw, &c).unwrap();
        for _ in 0..20 {
            pool = step_pool(&pool, &c);
            for s in pool.samples() {
                assert!(s.abs() <= 1.0 / 0.05 + 1e-12);
            }
        }
    }

    #[test]
    fn run_converges_in_hyperbolic_regime() {
        // beta=0, E=3, eta=1e-3, K=2: strong contraction toward w ~ -0.5
        let c = cfg(3.0, 1e-3, 2, None, 256, 4);
        let w = c.energy.free_point();
        let (pool, trace) = run_to_fixed_point(&c, InitMode::Delta(HalfPlanePoint::new(0.0, 2.0).unwrap())).unwrap();
        assert!(trace.converged, "metrics tail: {:?}", &trace.metrics[trace.metrics.len().saturating_sub(3)..]);
        for s in pool.samples() {
            assert!((s.as_complex() - w.as_complex()).norm() < 1e-6);
        }
        assert!((w.re() + 0.5).abs() < 1e-3);
    }

    #[test]
    fn zero_disorder_pool_follows_scalar_moebius_orbit() {
        // with a delta pool and no disorder the population is exactly the
        // orbit of z0 under z -> -1/(Kz + E + i eta)
        let c = cfg(0.0, 0.01, 2, None, 32, 5);
        let z = c.energy.z();
        let mut orbit = Complex64::new(0.0, 2.0);
        let mut pool = init_pool(InitMode::Delta(HalfPlanePoint::new(0.0, 2.0).unwrap()), &c).unwrap();
        for _ in 0..50 {
            pool = step_pool(&pool, &c);
            orbit = -Complex64::new(1.0, 0.0) / (2.0 * orbit + z);
            for s in pool.samples() {
                assert!((s.as_complex() - orbit).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn pool_distance_examples() {
        let c = cfg(0.0, 1.0, 2, None, 100, 6);
        let a = init_pool(InitMode::Delta(HalfPlanePoint::new(0.0, 1.0).unwrap()), &c).unwrap();
        assert_eq!(pool_distance(&a, &a).unwrap(), 0.0);
        let b = init_pool(InitMode::Delta(HalfPlanePoint::new(0.0, 2.0).unwrap()), &c).unwrap();
        assert_eq!(pool_distance(&a, &b).unwrap(), 1.0);
        let mut short = a.clone();
        short.samples.truncate(10);
        assert!(pool_distance(&a, &short).is_err());
    }

    #[test]
    fn finite_tree_examples() {
        // depth 1, h == 0, E=0, eta=1 -> all i
        let c = cfg(0.0, 1.0, 2, None, 0, 7);
        let p = finite_tree_green(1, &c, 16).unwrap();
        for s in p.samples() {
            assert!((s.as_complex() - Complex64::new(0.0, 1.0)).norm() < 1e-15);
        }
        // depth 2, K=2 -> -1/(2i + i) = i/3
        let p = finite_tree_green(2, &c, 16).unwrap();
        for s in p.samples() {
            assert!((s.as_complex() - Complex64::new(0.0, 1.0 / 3.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn finite_tree_matches_scalar_orbit_at_zero_disorder() {
        let c = cfg(1.5, 0.1, 2, None, 0, 8);
        let z = c.energy.z();
        let mut orbit = -Complex64::new(1.0, 0.0) / z;
        for depth in 1..=8u32 {
            let p = finite_tree_green(depth, &c, 4).unwrap();
            for s in p.samples() {
                assert!((s.as_complex() - orbit).norm() < 1e-13);
            }
            orbit = -Complex64::new(1.0, 0.0) / (2.0 * orbit + z);
        }
    }

    #[test]
    fn memory_guard_rejects_huge_trees() {
        let c = cfg(0.0, 0.1, 2, None, 0, 9);
        assert!(matches!(
            finite_tree_green(40, &c, 1),
            Err(PopulationError::MemoryGuard { .. })
        ));
    }

    #[test]
    fn tree_and_leaf_initialized_pool_agree_in_law() {
        let law = DisorderLaw::uniform(0.3, 2.0, UniformScaling::Plain).unwrap();
        let n = 20_000;
        let c = cfg(1.0, 0.01, 2, Some(law), n, 10);
        let depth = 6;
        let mut pool = init_pool(InitMode::LeafLaw, &c).unwrap();
        for _ in 0..(depth - 1) {
            pool = step_pool(&pool, &c);
        }
        let mut c2 = c.clone();
        c2.seed = 11;
        let tree = finite_tree_green(depth, &c2, n).unwrap();
        let band = ks_two_sample_band(n, n, 1.63);
        let d = pool_distance(&pool, &tree).unwrap();
        assert!(d <= band, "KS {d} > band {band}");
    }

    #[test]
    fn pool_stats_examples() {
        let refp = HalfPlanePoint::new(0.0, 1.0).unwrap();
        let c = cfg(0.0, 1.0, 2, None, 50, 12);
        let pool = init_pool(InitMode::Delta(refp), &c).unwrap();
        let st = pool_stats(&pool, refp);
        assert_eq!(st.mean_hyp_dist_sq, 0.0);
        assert!(st.concentration.iter().all(|&(_, p)| p == 0.0));
        assert!((st.lyapunov_raw - 0.0).abs() < 1e-15);

        // {i, 2i} against i: d = 0 and 0.5; log |g| = 0 and ln 2
        let samples = vec![refp, HalfPlanePoint::new(0.0, 2.0).unwrap()];
        let pool = MeasurePool::from_samples(samples, 0, 0);
        let st = pool_stats(&pool, refp);
        assert!((st.mean_hyp_dist_sq - 0.125).abs() < 1e-15);
        assert!((st.lyapunov_raw - 0.5 * 2f64.ln()).abs() < 1e-15);
        // concentration table is non-increasing in t
        for w in st.concentration.windows(2) {
            assert!(w[1].1 <= w[0].1);
        }
    }

    #[test]
    fn step_is_deterministic_for_fixed_seed() {
        let law = DisorderLaw::uniform(0.2, 2.0, UniformScaling::Plain).unwrap();
        let c = cfg(0.5, 0.05, 2, Some(law), 500, 13);
        let p0 = init_pool(InitMode::LeafLaw, &c).unwrap();
        let a = step_pool(&p0, &c);
        let b = step_pool(&p0, &c);
        for (x, y) in a.samples().iter().zip(b.samples()) {
            assert_eq!(x, y);
        }
    }

    #[test]
    fn finite_tree_paths_record_root_path() {
        let c = cfg(0.0, 1.0, 2, None, 0, 14);
        let paths = finite_tree_paths(3, &c, 4, TreeBoundary::LeafLaw).unwrap();
        for path in paths {
            assert_eq!(path.len(), 3);
            // h == 0 deterministic recursion: leaf i, then i/3, then root
            assert!((path[2].as_complex() - Complex64::new(0.0, 1.0)).norm() < 1e-15);
            assert!((path[1].as_complex() - Complex64::new(0.0, 1.0 / 3.0)).norm() < 1e-15);
            let root = -Complex64::new(1.0, 0.0) / (2.0 * path[1].as_complex() + Complex64::new(0.0, 1.0));
            assert!((path[0].as_complex() - root).norm() < 1e-15);
        }
    }
}
