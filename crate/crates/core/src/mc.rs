//! Monte Carlo for the torus walk: hitting times of the origin and systems
//! of coalescing random walks.
//!
//! Hitting times are drawn as a jump skeleton plus a `Gamma(N, 1)` holding
//! time, which is exact in law for a rate-one walk. Every replicate owns a
//! ChaCha substream selected by its task index, so results do not depend on
//! how tasks are scheduled across workers.

use std::collections::HashMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use rayon::prelude::*;
use thiserror::Error;

use crate::kernels::{JumpSampler, KernelError};
use crate::limits::{death_process_dist, t_scale, LimitsError};
use crate::torus::{Site, TorusSpec};
use crate::wrapped::TorusKernel;

pub const DEFAULT_STEP_CAP: u64 = 10_000_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum McError {
    #[error("walk started at the origin")]
    StartAtOrigin,
    #[error("step cap of {cap} skeleton steps reached (start {start})")]
    StepCap { cap: u64, start: Site },
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("invalid argument: {0}")]
    BadArgument(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Limits(#[from] LimitsError),
}

/// Master seed; replicate `i` draws from substream `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedSpec {
    pub master: u64,
}

impl SeedSpec {
    pub fn new(master: u64) -> Self {
        SeedSpec { master }
    }

    pub fn stream(&self, task: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(task);
        rng
    }

    /// An independent master seed for experiment cell `cell`, drawn from a
    /// stream counted down from the top so it never meets a replicate stream.
    pub fn cell(&self, cell: u64) -> SeedSpec {
        SeedSpec::new(self.stream(u64::MAX - cell).random())
    }
}

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> R {
    match rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

/// Jump-by-jump walk on `T_L`.
#[derive(Debug, Clone)]
pub struct TorusWalk {
    spec: TorusSpec,
    range: usize,
    sigma2: f64,
    sampler: JumpSampler,
}

impl TorusWalk {
    pub fn new(kernel: &TorusKernel<f64>) -> Result<Self, McError> {
        Ok(TorusWalk {
            spec: kernel.spec(),
            range: kernel.range(),
            sigma2: kernel.sigma2(),
            sampler: kernel.sampler()?,
        })
    }

    pub fn spec(&self) -> TorusSpec {
        self.spec
    }

    pub fn range(&self) -> usize {
        self.range
    }

    /// `sigma_M^2` of the increments.
    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    #[inline]
    fn wrap_near(&self, v: i64) -> i64 {
        // increments are canonical offsets, so one correction suffices
        let h = self.spec.half();
        if v > h {
            v - 2 * h
        } else if v <= -h {
            v + 2 * h
        } else {
            v
        }
    }

    #[inline]
    pub fn step<R: Rng + ?Sized>(&self, x: Site, rng: &mut R) -> Site {
        let j = self.sampler.sample(rng);
        Site::new(self.wrap_near(x.x + j.x), self.wrap_near(x.y + j.y))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HitSample {
    pub start: Site,
    /// Skeleton jumps until the first visit to the origin.
    pub jumps: u64,
    /// Hitting time `H`, a `Gamma(jumps, 1)` draw.
    pub time: f64,
}

/// First arrival at the origin from `x`.
pub fn simulate_hit<R: Rng + ?Sized>(
    walk: &TorusWalk,
    x: Site,
    rng: &mut R,
    step_cap: u64,
) -> Result<HitSample, McError> {
    let start = walk.spec.wrap(x);
    if start.is_origin() {
        return Err(McError::StartAtOrigin);
    }
    let mut pos = start;
    let mut jumps = 0u64;
    while !pos.is_origin() {
        if jumps >= step_cap {
            return Err(McError::StepCap { cap: step_cap, start });
        }
        pos = walk.step(pos, rng);
        jumps += 1;
    }
    let time = Gamma::new(jumps as f64, 1.0).expect("shape >= 1").sample(rng);
    Ok(HitSample { start, jumps, time })
}

/// How each replicate chooses its start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StartRule {
    Fixed(Site),
    /// Uniform over `T'_L`, drawn from the replicate's own stream.
    UniformNonOrigin,
}

/// `replicates` independent hitting samples; replicate `i` uses substream `i`.
pub fn simulate_hits(
    walk: &TorusWalk,
    start: StartRule,
    replicates: usize,
    seed: SeedSpec,
    step_cap: u64,
) -> Result<Vec<HitSample>, McError> {
    let spec = walk.spec;
    (0..replicates)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.stream(i as u64);
            let x = match start {
                StartRule::Fixed(x) => x,
                StartRule::UniformNonOrigin => {
                    let o = spec.origin_index();
                    let mut k = rng.random_range(0..spec.size() - 1);
                    if k >= o {
                        k += 1;
                    }
                    spec.site(k)
                }
            };
            simulate_hit(walk, x, &mut rng, step_cap)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceEstimate {
    pub lambda: f64,
    pub estimate: f64,
    pub se: f64,
}

/// Sample mean and standard error of `exp(-lambda H)` for each `lambda`.
pub fn estimate_laplace(samples: &[HitSample], lambdas: &[f64]) -> Result<Vec<LaplaceEstimate>, McError> {
    if samples.len() < 2 {
        return Err(McError::TooFewSamples { need: 2, got: samples.len() });
    }
    let n = samples.len() as f64;
    lambdas
        .iter()
        .map(|&lambda| {
            if !(lambda >= 0.0 && lambda.is_finite()) {
                return Err(McError::BadArgument(format!("lambda {lambda} must be finite and >= 0")));
            }
            let values: Vec<f64> = samples.iter().map(|s| (-lambda * s.time).exp()).collect();
            let mean = crate::sum::pairwise_sum(&values) / n;
            let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
            let var = crate::sum::pairwise_sum(&sq) / (n - 1.0);
            Ok(LaplaceEstimate { lambda, estimate: mean, se: (var / n).sqrt() })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MergeEvent {
    pub time: f64,
    /// Index (into the starts) of the lineage already at the site.
    pub survivor: usize,
    /// Index of the lineage that jumped onto it.
    pub absorbed: usize,
    pub site: Site,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoalescenceTrace {
    pub starts: Vec<Site>,
    pub horizon: f64,
    pub events: Vec<MergeEvent>,
    /// Position at the horizon of every live lineage, by start index.
    pub final_positions: Vec<(usize, Site)>,
    pub jumps: u64,
}

impl CoalescenceTrace {
    /// `|zeta_t|` for `t <= horizon`.
    pub fn count_at(&self, t: f64) -> usize {
        self.starts.len() - self.events.iter().take_while(|e| e.time <= t).count()
    }

    pub fn final_count(&self) -> usize {
        self.starts.len() - self.events.len()
    }

    /// `(time, count)` after each merge, starting from `(0, n)`.
    pub fn count_path(&self) -> Vec<(f64, usize)> {
        let n = self.starts.len();
        std::iter::once((0.0, n)).chain(self.events.iter().enumerate().map(|(i, e)| (e.time, n - i - 1))).collect()
    }

    /// Horizon position of the lineage that started at `starts[i]`,
    /// following merges to the surviving lineage.
    pub fn position_of(&self, i: usize) -> Option<Site> {
        let mut id = i;
        for e in &self.events {
            if e.absorbed == id {
                id = e.survivor;
            }
        }
        self.final_positions.iter().find(|(j, _)| *j == id).map(|&(_, p)| p)
    }
}

/// Coalescing rate-one walks from `starts`, run until `horizon`.
/// Events come from one global exponential clock at rate `|zeta_t|`; the
/// mover is chosen uniformly and merges into any lineage it lands on.
pub fn simulate_coalescent<R: Rng + ?Sized>(
    walk: &TorusWalk,
    starts: &[Site],
    horizon: f64,
    rng: &mut R,
    step_cap: u64,
) -> Result<CoalescenceTrace, McError> {
    if starts.is_empty() {
        return Err(McError::BadArgument("no starting lineages".into()));
    }
    if !(horizon >= 0.0) {
        return Err(McError::BadArgument(format!("horizon {horizon} must be >= 0")));
    }
    let spec = walk.spec;
    let starts: Vec<Site> = starts.iter().map(|&p| spec.wrap(p)).collect();
    let mut occupied: HashMap<Site, usize> = HashMap::with_capacity(starts.len());
    for (i, &p) in starts.iter().enumerate() {
        if occupied.insert(p, i).is_some() {
            return Err(McError::BadArgument(format!("duplicate start {p}")));
        }
    }
    // live[k] = (start index, position)
    let mut live: Vec<(usize, Site)> = starts.iter().copied().enumerate().collect();
    let mut events = Vec::new();
    let mut t = 0.0;
    let mut jumps = 0u64;
    while live.len() > 1 {
        let wait: f64 = Exp1.sample(rng);
        t += wait / live.len() as f64;
        if t > horizon {
            break;
        }
        if jumps >= step_cap {
            return Err(McError::StepCap { cap: step_cap, start: starts[0] });
        }
        jumps += 1;
        let k = rng.random_range(0..live.len());
        let (id, from) = live[k];
        let to = walk.step(from, rng);
        occupied.remove(&from);
        if let Some(&survivor) = occupied.get(&to) {
            events.push(MergeEvent { time: t, survivor, absorbed: id, site: to });
            live.swap_remove(k);
        } else {
            occupied.insert(to, id);
            live[k].1 = to;
        }
    }
    live.sort_by_key(|&(id, _)| id);
    Ok(CoalescenceTrace { starts, horizon, events, final_positions: live, jumps })
}

/// Empirical law of the lineage count at one scaled time.
#[derive(Debug, Clone, PartialEq)]
pub struct LineageCountRow {
    pub s: f64,
    /// Unscaled time `s L^2 t_L`.
    pub time: f64,
    /// Entry `k - 1` is the frequency of `|zeta| = k`.
    pub empirical: Vec<f64>,
    /// Binomial standard errors of `empirical`.
    pub se: Vec<f64>,
    /// `P(D_{pi sigma^2 s} = k)`.
    pub target: Vec<f64>,
}

impl LineageCountRow {
    pub fn total_variation(&self) -> f64 {
        0.5 * self.empirical.iter().zip(&self.target).map(|(a, b)| (a - b).abs()).sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineageLaw {
    pub rows: Vec<LineageCountRow>,
    /// Set when some pair of starts is closer than `L / log L`.
    pub separation_warning: bool,
    pub time_unit: f64,
    pub sigma2: f64,
}

/// Lineage counts at times `s L^2 t_L` against the pure-death law at
/// `pi sigma^2 s`, over `replicates` runs (replicate `i` uses substream `i`).
pub fn lineage_count_law(
    walk: &TorusWalk,
    starts: &[Site],
    s_values: &[f64],
    sigma2: f64,
    replicates: usize,
    seed: SeedSpec,
    step_cap: u64,
) -> Result<LineageLaw, McError> {
    let n = starts.len();
    if n < 2 {
        return Err(McError::BadArgument("need at least two lineages".into()));
    }
    if replicates == 0 {
        return Err(McError::TooFewSamples { need: 1, got: 0 });
    }
    if s_values.iter().any(|&s| !(s >= 0.0 && s.is_finite())) {
        return Err(McError::BadArgument("scaled times must be finite and >= 0".into()));
    }
    let spec = walk.spec;
    let l = spec.side();
    let time_unit = (l * l) as f64 * t_scale(l, walk.range);
    let min_sep = l as f64 / (l as f64).ln();
    let separation_warning =
        starts.iter().enumerate().any(|(i, &a)| starts[i + 1..].iter().any(|&b| spec.wrap(a - b).norm() < min_sep));

    let horizon = s_values.iter().copied().fold(0.0, f64::max) * time_unit;
    let traces: Vec<CoalescenceTrace> = (0..replicates)
        .into_par_iter()
        .map(|i| simulate_coalescent(walk, starts, horizon, &mut seed.stream(i as u64), step_cap))
        .collect::<Result<_, _>>()?;

    let r = replicates as f64;
    let rows = s_values
        .iter()
        .map(|&s| {
            let time = s * time_unit;
            let mut counts = vec![0usize; n];
            for tr in &traces {
                counts[tr.count_at(time) - 1] += 1;
            }
            let empirical: Vec<f64> = counts.iter().map(|&c| c as f64 / r).collect();
            let se = empirical.iter().map(|&p| (p * (1.0 - p) / r).sqrt()).collect();
            let target = death_process_dist(n, std::f64::consts::PI * sigma2 * s)?;
            Ok(LineageCountRow { s, time, empirical, se, target })
        })
        .collect::<Result<_, McError>>()?;
    Ok(LineageLaw { rows, separation_warning, time_unit, sigma2 })
}

/// `n` starts spread on the diagonal at spacing `L/n`, beginning at the origin.
pub fn spread_starts(spec: TorusSpec, n: usize) -> Vec<Site> {
    let l = spec.side() as i64;
    (0..n as i64).map(|i| spec.wrap(Site::new(i * l / n as i64, i * l / n as i64))).collect()
}

/// One-sample Kolmogorov-Smirnov statistic against the exponential law with the given mean.
pub fn ks_statistic_exponential(samples: &[f64], mean: f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let cdf = 1.0 - (-x / mean).exp();
            (cdf - i as f64 / n).abs().max(((i + 1) as f64 / n - cdf).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 1% critical value of the KS statistic for `n` samples.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.627_6 / (n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::JumpKernel;
    use crate::oracle::{dense_laplace_hit, DenseChain};
    use crate::spectral::SpectralGrid;

    fn spec(l: usize) -> TorusSpec {
        TorusSpec::new(l).unwrap()
    }

    fn uniform_walk(l: usize, m: usize) -> (TorusWalk, TorusKernel<f64>) {
        let k = TorusKernel::from_kernel(&JumpKernel::uniform(m).unwrap(), spec(l)).unwrap();
        (TorusWalk::new(&k).unwrap(), k)
    }

    #[test]
    fn substreams_are_distinct_and_reproducible() {
        let s = SeedSpec::new(42);
        let a: Vec<u64> = (0..4).map(|_| s.stream(0).random()).collect();
        assert!(a.windows(2).all(|w| w[0] == w[1]));
        let x: u64 = s.stream(0).random();
        let y: u64 = s.stream(1).random();
        assert_ne!(x, y);
    }

    #[test]
    fn steps_stay_on_torus() {
        let (walk, _) = uniform_walk(8, 6);
        let mut rng = SeedSpec::new(1).stream(0);
        let mut x = Site::ORIGIN;
        for _ in 0..10_000 {
            x = walk.step(x, &mut rng);
            assert_eq!(spec(8).wrap(x), x);
        }
    }

    #[test]
    fn origin_start_and_step_cap_are_errors() {
        let (walk, _) = uniform_walk(16, 2);
        let mut rng = SeedSpec::new(1).stream(0);
        assert_eq!(simulate_hit(&walk, Site::new(16, 0), &mut rng, 10), Err(McError::StartAtOrigin));
        let err = simulate_hit(&walk, Site::new(8, 8), &mut rng, 3).unwrap_err();
        assert!(matches!(err, McError::StepCap { cap: 3, .. }));
    }

    #[test]
    fn meanfield_skeleton_is_geometric_and_wald_holds() {
        let l = 8;
        let kernel = TorusKernel::meanfield(spec(l));
        let walk = TorusWalk::new(&kernel).unwrap();
        let samples =
            simulate_hits(&walk, StartRule::Fixed(Site::new(1, 2)), 100_000, SeedSpec::new(9), DEFAULT_STEP_CAP)
                .unwrap();
        let n = samples.len() as f64;
        let mean_n = samples.iter().map(|s| s.jumps as f64).sum::<f64>() / n;
        let mean_h = samples.iter().map(|s| s.time).sum::<f64>() / n;
        let expect = (l * l - 1) as f64;
        // geometric with success 1/(L^2 - 1): sd = sqrt((1-p))/p
        let p = 1.0 / expect;
        let se = ((1.0 - p).sqrt() / p) / n.sqrt();
        assert!((mean_n - expect).abs() < 3.0 * se, "{mean_n}");
        assert!((mean_h - expect).abs() < 3.0 * se * 1.5, "{mean_h}");
        assert!(samples.iter().all(|s| s.jumps >= 1));
    }

    #[test]
    fn meanfield_hitting_time_passes_ks() {
        let l = 8;
        let walk = TorusWalk::new(&TorusKernel::meanfield(spec(l))).unwrap();
        let samples =
            simulate_hits(&walk, StartRule::UniformNonOrigin, 100_000, SeedSpec::new(3), DEFAULT_STEP_CAP).unwrap();
        let times: Vec<f64> = samples.iter().map(|s| s.time).collect();
        let d = ks_statistic_exponential(&times, (l * l - 1) as f64);
        assert!(d < ks_critical_1pct(times.len()), "{d}");
    }

    #[test]
    fn ks_detects_wrong_mean() {
        let walk = TorusWalk::new(&TorusKernel::meanfield(spec(4))).unwrap();
        let samples =
            simulate_hits(&walk, StartRule::UniformNonOrigin, 20_000, SeedSpec::new(3), DEFAULT_STEP_CAP).unwrap();
        let times: Vec<f64> = samples.iter().map(|s| s.time).collect();
        assert!(ks_statistic_exponential(&times, 20.0) > ks_critical_1pct(times.len()));
    }

    #[test]
    fn laplace_estimates_basic_properties() {
        let walk = TorusWalk::new(&TorusKernel::meanfield(spec(4))).unwrap();
        let samples =
            simulate_hits(&walk, StartRule::UniformNonOrigin, 100_000, SeedSpec::new(17), DEFAULT_STEP_CAP).unwrap();
        let est = estimate_laplace(&samples, &[0.0, 0.5, 1.0, 2.0]).unwrap();
        assert_eq!(est[0].estimate, 1.0);
        assert_eq!(est[0].se, 0.0);
        assert!(est.windows(2).all(|w| w[1].estimate < w[0].estimate));
        let e1 = est[2];
        assert!((e1.estimate - 1.0 / 16.0).abs() < 3.0 * e1.se, "{e1:?}");
        assert!(estimate_laplace(&samples[..1], &[1.0]).is_err());
        assert!(estimate_laplace(&[], &[1.0]).is_err());
    }

    #[test]
    fn hitting_laplace_matches_dense_oracle() {
        let (walk, kernel) = uniform_walk(8, 2);
        let x = Site::new(3, -2);
        let samples = simulate_hits(&walk, StartRule::Fixed(x), 50_000, SeedSpec::new(5), DEFAULT_STEP_CAP).unwrap();
        let est = estimate_laplace(&samples, &[0.5]).unwrap()[0];
        let chain = DenseChain::from_torus_kernel(&kernel).unwrap();
        let exact = crate::oracle::at(spec(8), &dense_laplace_hit(&chain, 0.5).unwrap(), x);
        assert!((est.estimate - exact).abs() < 3.0 * est.se, "{} vs {exact} (se {})", est.estimate, est.se);
    }

    #[test]
    fn worker_count_does_not_change_samples() {
        let (walk, _) = uniform_walk(16, 4);
        let run = |w| {
            with_workers(w, || {
                simulate_hits(&walk, StartRule::UniformNonOrigin, 500, SeedSpec::new(77), DEFAULT_STEP_CAP).unwrap()
            })
        };
        let one = run(1);
        assert_eq!(one, run(2));
        assert_eq!(one, run(8));
    }

    #[test]
    fn single_lineage_never_merges() {
        let (walk, _) = uniform_walk(16, 2);
        let tr =
            simulate_coalescent(&walk, &[Site::new(3, 3)], 100.0, &mut SeedSpec::new(1).stream(0), DEFAULT_STEP_CAP)
                .unwrap();
        assert!(tr.events.is_empty());
        assert_eq!(tr.final_count(), 1);
    }

    #[test]
    fn coalescent_bookkeeping() {
        let (walk, _) = uniform_walk(8, 2);
        let starts = [Site::new(0, 0), Site::new(1, 0), Site::new(0, 1), Site::new(3, 3), Site::new(-2, 1)];
        for seed in 0..50 {
            let tr = simulate_coalescent(&walk, &starts, 40.0, &mut SeedSpec::new(seed).stream(0), DEFAULT_STEP_CAP)
                .unwrap();
            assert_eq!(tr.events.len(), starts.len() - tr.final_count());
            assert_eq!(tr.final_positions.len(), tr.final_count());
            let path = tr.count_path();
            assert!(path.windows(2).all(|w| w[1].1 < w[0].1 && w[1].0 >= w[0].0));
            for e in &tr.events {
                assert!(e.time <= tr.horizon);
            }
            // surviving lineages occupy distinct sites
            let mut sites: Vec<Site> = tr.final_positions.iter().map(|p| p.1).collect();
            sites.sort();
            sites.dedup();
            assert_eq!(sites.len(), tr.final_count());
        }
        assert!(simulate_coalescent(&walk, &[Site::ORIGIN, Site::new(8, 0)], 1.0, &mut SeedSpec::new(0).stream(0), 10)
            .is_err());
        assert!(simulate_coalescent(&walk, &[], 1.0, &mut SeedSpec::new(0).stream(0), 10).is_err());
    }

    /// Two lineages: the difference walk jumps at rate 2, so the merge time
    /// has Laplace transform `F(x, lambda / 2)` of the rate-one walk.
    #[test]
    fn pair_merge_time_matches_difference_walk() {
        let (walk, kernel) = uniform_walk(8, 2);
        let starts = [Site::ORIGIN, Site::new(2, -3)];
        let runs = 10_000;
        let times: Vec<f64> = (0..runs)
            .map(|i| {
                let tr = simulate_coalescent(
                    &walk,
                    &starts,
                    f64::INFINITY,
                    &mut SeedSpec::new(8).stream(i),
                    DEFAULT_STEP_CAP,
                )
                .unwrap();
                tr.events[0].time
            })
            .collect();
        let chain = DenseChain::from_torus_kernel(&kernel).unwrap();
        for lambda in [0.02, 0.1, 0.5] {
            let vals: Vec<f64> = times.iter().map(|t| (-lambda * t).exp()).collect();
            let mean = vals.iter().sum::<f64>() / runs as f64;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (runs as f64 - 1.0);
            let se = (var / runs as f64).sqrt();
            let exact =
                crate::oracle::at(spec(8), &dense_laplace_hit(&chain, lambda / 2.0).unwrap(), starts[1] - starts[0]);
            assert!((mean - exact).abs() < 3.0 * se, "lambda={lambda}: {mean} vs {exact}");
        }
    }

    /// A lineage inside a coalescing system has the single-walk marginal law.
    #[test]
    fn lineage_marginal_matches_single_walk() {
        let (walk, kernel) = uniform_walk(8, 2);
        let starts = [Site::ORIGIN, Site::new(1, 1), Site::new(-1, 2)];
        let t = 3.0;
        let runs = 20_000u64;
        let heat = SpectralGrid::from_torus_kernel(&kernel).heat(t).unwrap();
        let probes = [Site::ORIGIN, Site::new(1, 0), Site::new(1, 1), Site::new(2, 0)];
        let mut hits = vec![0usize; probes.len()];
        for i in 0..runs {
            let tr = simulate_coalescent(&walk, &starts, t, &mut SeedSpec::new(4).stream(i), DEFAULT_STEP_CAP).unwrap();
            let p = tr.position_of(0).unwrap();
            for (j, &q) in probes.iter().enumerate() {
                if p == q {
                    hits[j] += 1;
                }
            }
        }
        for (j, &q) in probes.iter().enumerate() {
            let expect = heat.prob(q);
            let freq = hits[j] as f64 / runs as f64;
            let se = (expect * (1.0 - expect) / runs as f64).sqrt();
            assert!((freq - expect).abs() < 3.0 * se, "{q}: {freq} vs {expect}");
        }
    }

    #[test]
    fn lineage_law_edge_cases() {
        let (walk, kernel) = uniform_walk(64, 8);
        let starts = spread_starts(spec(64), 2);
        let sigma2 = kernel.sigma2() / 64.0;
        let law =
            lineage_count_law(&walk, &starts, &[0.0, 10.0], sigma2, 1000, SeedSpec::new(2), DEFAULT_STEP_CAP).unwrap();
        assert!(!law.separation_warning);
        assert_eq!(law.rows[0].empirical, vec![0.0, 1.0]);
        assert_eq!(law.rows[0].target, vec![0.0, 1.0]);
        for row in &law.rows {
            assert!((row.empirical.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        // finite-L merging is slower than the limit law, but well under way by s = 10
        assert!(law.rows[1].empirical[0] > 0.5);
        let s = 10.0;
        let d = (-std::f64::consts::PI * sigma2 * s).exp();
        assert!((law.rows[1].target[1] - d).abs() < 1e-15);

        let close = [Site::ORIGIN, Site::new(1, 0)];
        let law = lineage_count_law(&walk, &close, &[0.1], sigma2, 10, SeedSpec::new(2), DEFAULT_STEP_CAP).unwrap();
        assert!(law.separation_warning);
    }
}
