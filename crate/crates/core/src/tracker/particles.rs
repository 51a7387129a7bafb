use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::AffineState;

const MIN_SCALE: f64 = 1e-3;

/// Standard deviations of the per-parameter Gaussian random walk, in
/// `(lx, ly, theta, s, alpha, phi)` order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionModelParams {
    pub sigma: [f64; 6],
}

impl Default for MotionModelParams {
    fn default() -> Self {
        Self {
            sigma: [4.0, 4.0, 0.02, 0.01, 0.002, 0.001],
        }
    }
}

impl MotionModelParams {
    pub fn still() -> Self {
        Self { sigma: [0.0; 6] }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSet {
    /// Mean of the proposal distribution.
    pub prev: AffineState,
    pub states: Vec<AffineState>,
    /// Proposal density `p(x_i | x_prev)` of each particle.
    pub motion_priors: Vec<f64>,
    pub likelihoods: Option<Vec<f64>>,
}

impl ParticleSet {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Draws `n` states around `prev`; all `6n` normal variates are consumed
/// particle-major, parameter-minor from a generator seeded with `seed`.
pub fn propose_particles(
    prev: &AffineState,
    motion: &MotionModelParams,
    n: usize,
    seed: u64,
) -> ParticleSet {
    assert!(n >= 1, "need at least one particle");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = prev.as_array();
    let mut states = Vec::with_capacity(n);
    let mut motion_priors = Vec::with_capacity(n);
    for _ in 0..n {
        let mut p = base;
        let mut density = 1.0;
        for (k, value) in p.iter_mut().enumerate() {
            let z: f64 = StandardNormal.sample(&mut rng);
            let sigma = motion.sigma[k];
            if sigma > 0.0 {
                *value += sigma * z;
                density *= (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt());
            }
        }
        p[3] = p[3].max(MIN_SCALE);
        p[4] = p[4].max(MIN_SCALE);
        states.push(AffineState::from_array(p));
        motion_priors.push(density);
    }
    ParticleSet {
        prev: *prev,
        states,
        motion_priors,
        likelihoods: None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackResult {
    pub state: AffineState,
    pub confidence: f64,
    pub occlusion_fraction: f64,
    pub frame: usize,
    /// Winning particle, `None` when every weight vanished and the previous state was kept.
    pub particle: Option<usize>,
}

impl TrackResult {
    pub fn is_lost(&self) -> bool {
        self.particle.is_none()
    }
}

/// Picks the particle maximising likelihood × motion prior (lowest index on ties).
pub fn map_estimate(particles: &ParticleSet, frame: usize) -> Result<TrackResult> {
    let likelihoods = particles.likelihoods.as_ref().ok_or(Error::LikelihoodsUnset)?;
    if likelihoods.len() != particles.len() {
        return Err(Error::LikelihoodsUnset);
    }
    let mut best: Option<(usize, f64)> = None;
    let mut total = 0.0;
    for (i, (l, p)) in likelihoods.iter().zip(&particles.motion_priors).enumerate() {
        let w = l * p;
        total += w;
        if best.is_none_or(|(_, bw)| w > bw) {
            best = Some((i, w));
        }
    }
    let (idx, w) = best.expect("non-empty particle set");
    if total <= 0.0 || !total.is_finite() {
        return Ok(TrackResult {
            state: particles.prev,
            confidence: 0.0,
            occlusion_fraction: 0.0,
            frame,
            particle: None,
        });
    }
    Ok(TrackResult {
        state: particles.states[idx],
        confidence: (w / total).clamp(0.0, 1.0),
        occlusion_fraction: 0.0,
        frame,
        particle: Some(idx),
    })
}
