//! Synthetic trajectory sets and query generators.
//!
//! Every trajectory draws from its own ChaCha stream, selected by a counter, so
//! output depends only on the configuration and seed.

use rand::{seq::index::sample, Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CctError, Result};
use crate::geometry::{TrajId, Trajectory, TrajectorySet};
use crate::query::exact_distances;

const STREAM_UNIQUE: u64 = 1 << 56;
const STREAM_COPY: u64 = 2 << 56;
const STREAM_NOISE: u64 = 3 << 56;
const STREAM_SAMPLE: u64 = 4 << 56;
const STREAM_QUERY: u64 = 5 << 56;

/// Redraws allowed per fixed-result query before giving up.
pub const MAX_REDRAWS: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub cluster_size: usize,
    pub straightness: f64,
    pub max_edge: f64,
    pub avg_size: usize,
    pub total: usize,
    pub dim: usize,
    pub seed: u64,
    /// Unclustered random walks added last.
    pub noise_count: usize,
    /// Query ids sampled from the set before noise is added.
    pub query_count: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            cluster_size: 10,
            straightness: 0.95,
            max_edge: 0.6,
            avg_size: 15,
            total: 5000,
            dim: 2,
            seed: 0,
            noise_count: 500,
            query_count: 1000,
        }
    }
}

impl SyntheticConfig {
    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(CctError::ConfigInvalid(m.into()));
        if self.cluster_size < 1 {
            return bad("cluster size must be at least 1");
        }
        if !(0.0..1.0).contains(&self.straightness) {
            return bad("straightness must lie in [0, 1)");
        }
        if !(self.max_edge > 0.0 && self.max_edge.is_finite()) {
            return bad("max edge must be positive");
        }
        if self.avg_size < 2 {
            return bad("average size must be at least 2");
        }
        if self.dim < 1 {
            return bad("dimension must be at least 1");
        }
        if self.total <= self.noise_count {
            return bad("total must exceed the noise count");
        }
        Ok(())
    }

    /// Vertex count range of the random walk.
    pub fn size_range(&self) -> (usize, usize) {
        let n = self.avg_size;
        (n.div_ceil(2).max(2), (3 * n / 2).max(2))
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticData {
    pub set: TrajectorySet,
    pub query_pool: Vec<TrajId>,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn random_walk(cfg: &SyntheticConfig, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (lo, hi) = cfg.size_range();
    let z = rng.gen_range(lo..=hi);
    let d = cfg.dim;
    let mut coords: Vec<f64> = Vec::with_capacity(z * d);
    coords.extend((0..d).map(|_| rng.gen::<f64>()));
    for i in 1..z {
        for k in 0..d {
            let prev = coords[(i - 1) * d + k];
            let momentum = if i >= 2 { prev - coords[(i - 2) * d + k] } else { 0.0 };
            let sigma: f64 = rng.gen();
            coords.push(cfg.max_edge * sigma + prev + cfg.straightness * momentum);
        }
    }
    coords
}

fn trajectory(id: TrajId, dim: usize, coords: Vec<f64>) -> Result<Trajectory> {
    Trajectory::new(id, dim, coords)
}

/// Copy of `src` with every coordinate moved by up to `vertex` and the whole
/// trajectory translated by up to `shift` per coordinate.
fn perturbed(src: &Trajectory, id: TrajId, vertex: f64, shift: f64, rng: &mut ChaCha8Rng) -> Result<Trajectory> {
    let d = src.dim();
    let offset: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..=1.0) * shift).collect();
    let coords = src
        .coords()
        .iter()
        .enumerate()
        .map(|(i, &x)| x + rng.gen_range(-1.0..=1.0) * vertex + offset[i % d])
        .collect();
    trajectory(id, d, coords)
}

pub fn gen_synthetic(cfg: &SyntheticConfig) -> Result<SyntheticData> {
    cfg.validate()?;
    let body = cfg.total - cfg.noise_count;
    let groups = body / cfg.cluster_size;
    let singles = body - groups * cfg.cluster_size;
    let mut trajs: Vec<Trajectory> = Vec::with_capacity(cfg.total);
    let mut next_id: TrajId = 0;

    for g in 0..groups as u64 {
        let mut rng = stream(cfg.seed, STREAM_UNIQUE | g);
        let original = trajectory(next_id, cfg.dim, random_walk(cfg, &mut rng))?;
        next_id += 1;
        for c in 1..cfg.cluster_size as u64 {
            let mut rng = stream(cfg.seed, STREAM_COPY | (g * cfg.cluster_size as u64 + c));
            trajs.push(perturbed(&original, next_id, cfg.max_edge, cfg.max_edge, &mut rng)?);
            next_id += 1;
        }
        trajs.insert(trajs.len() + 1 - cfg.cluster_size, original);
    }
    for s in 0..singles as u64 {
        let mut rng = stream(cfg.seed, STREAM_UNIQUE | (groups as u64 + s));
        trajs.push(trajectory(next_id, cfg.dim, random_walk(cfg, &mut rng))?);
        next_id += 1;
    }

    let mut rng = stream(cfg.seed, STREAM_SAMPLE);
    let amount = cfg.query_count.min(trajs.len());
    let mut query_pool: Vec<TrajId> = sample(&mut rng, trajs.len(), amount)
        .into_iter()
        .map(|i| trajs[i].id())
        .collect();
    query_pool.sort_unstable();

    for s in 0..cfg.noise_count as u64 {
        let mut rng = stream(cfg.seed, STREAM_NOISE | s);
        trajs.push(trajectory(next_id, cfg.dim, random_walk(cfg, &mut rng))?);
        next_id += 1;
    }
    Ok(SyntheticData {
        set: TrajectorySet::new(trajs)?,
        query_pool,
    })
}

/// Fraction of reach used for per-vertex query perturbation.
pub const QUERY_VERTEX_FRAC: f64 = 0.03;
/// Fraction of reach used for query translation.
pub const QUERY_SHIFT_FRAC: f64 = 0.05;

fn perturbed_query(set: &[Trajectory], id: TrajId, rng: &mut ChaCha8Rng) -> Result<(TrajId, Trajectory)> {
    let src = &set[rng.gen_range(0..set.len())];
    let r = src.reach();
    let q = perturbed(src, id, QUERY_VERTEX_FRAC * r, QUERY_SHIFT_FRAC * r, rng)?;
    Ok((src.id(), q))
}

/// Queries made by perturbing random members of `set`. Query `i` gets id `first_id + i`.
pub fn gen_queries_perturb(set: &[Trajectory], count: usize, seed: u64, first_id: TrajId) -> Result<Vec<Trajectory>> {
    gen_queries_perturb_with_sources(set, count, seed, first_id).map(|v| v.into_iter().map(|x| x.1).collect())
}

/// As [`gen_queries_perturb`], also returning the id of each query's source.
pub fn gen_queries_perturb_with_sources(set: &[Trajectory], count: usize, seed: u64, first_id: TrajId) -> Result<Vec<(TrajId, Trajectory)>> {
    if set.is_empty() {
        return Err(CctError::EmptySet);
    }
    (0..count as u64)
        .map(|i| {
            let mut rng = stream(seed, STREAM_QUERY | i);
            perturbed_query(set, first_id + i, &mut rng)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct FixedResultQuery {
    pub query: Trajectory,
    pub tau: f64,
}

/// Queries whose range query at the returned `tau` has exactly `result_size` results.
pub fn gen_queries_fixed_result(set: &[Trajectory], count: usize, result_size: usize, seed: u64, first_id: TrajId) -> Result<Vec<FixedResultQuery>> {
    if result_size == 0 || result_size >= set.len() {
        return Err(CctError::ConfigInvalid(format!(
            "result size {result_size} must lie in 1..{}",
            set.len()
        )));
    }
    let mut out = Vec::with_capacity(count);
    for i in 0..count as u64 {
        let mut rng = stream(seed, STREAM_QUERY | i);
        let mut found = None;
        for _ in 0..MAX_REDRAWS {
            let (_, q) = perturbed_query(set, first_id + i, &mut rng)?;
            let mut d: Vec<f64> = exact_distances(set, &q)?.into_iter().map(|x| x.1).collect();
            d.sort_by(f64::total_cmp);
            let (inner, outer) = (d[result_size - 1], d[result_size]);
            if outer - inner > 1e-9 * inner.max(1.0) {
                let tau = 0.5 * (inner + outer);
                debug_assert_eq!(d.iter().filter(|&&x| x <= tau).count(), result_size);
                found = Some(FixedResultQuery { query: q, tau });
                break;
            }
        }
        out.push(found.ok_or(CctError::TieExhaustion(MAX_REDRAWS))?);
    }
    Ok(out)
}
