//! IQ-plane state discrimination with a Gaussian mixture, quantum-jump
//! statistics and a synthetic trace generator.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent f64 methods when std is linked
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReadoutError {
    #[error("component {0} collapsed below the covariance regularization")]
    SingularComponent(usize),
    #[error("{got} samples are too few for {k} components (need {need})")]
    InsufficientSamples { got: usize, k: usize, need: usize },
    #[error("state {0} never occurs in the sequence")]
    NoOccupancy(QubitState),
    #[error("sequences have different lengths ({0} and {1})")]
    LengthMismatch(usize, usize),
    #[error("row {0} of the transition matrix is not a probability distribution")]
    InvalidStochasticMatrix(usize),
    #[error("model has no component mapped to state {0}")]
    MissingState(QubitState),
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
}

pub type Result<T, E = ReadoutError> = core::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum QubitState {
    Ground,
    Excited,
    /// Second excited state and above.
    Higher,
}

impl QubitState {
    pub const ALL: [QubitState; 3] = [QubitState::Ground, QubitState::Excited, QubitState::Higher];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            QubitState::Ground => "0",
            QubitState::Excited => "1",
            QubitState::Higher => "2+",
        }
    }
}

impl core::fmt::Display for QubitState {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IqSample {
    pub t: u64,
    pub i: f64,
    pub q: f64,
}

impl IqSample {
    pub fn new(t: u64, i: f64, q: f64) -> Self {
        Self { t, i, q }
    }

    fn xy(&self) -> [f64; 2] {
        [self.i, self.q]
    }
}

type Cov = [[f64; 2]; 2];

fn det(c: &Cov) -> f64 {
    c[0][0] * c[1][1] - c[0][1] * c[1][0]
}

fn min_eigenvalue(c: &Cov) -> f64 {
    let tr = c[0][0] + c[1][1];
    let d = ((c[0][0] - c[1][1]).powi(2) / 4.0 + c[0][1] * c[1][0]).max(0.0).sqrt();
    tr / 2.0 - d
}

/// Precomputed pieces of a bivariate normal log-density.
#[derive(Debug, Clone, Copy)]
struct Density {
    mean: [f64; 2],
    inv: Cov,
    log_norm: f64,
}

impl Density {
    fn new(mean: [f64; 2], cov: &Cov, weight: f64) -> Self {
        let d = det(cov);
        let inv = [[cov[1][1] / d, -cov[0][1] / d], [-cov[1][0] / d, cov[0][0] / d]];
        let log_norm = weight.ln() - (2.0 * core::f64::consts::PI).ln() - 0.5 * d.ln();
        Self { mean, inv, log_norm }
    }

    fn log_pdf(&self, x: [f64; 2]) -> f64 {
        let (a, b) = (x[0] - self.mean[0], x[1] - self.mean[1]);
        let m = a * (self.inv[0][0] * a + self.inv[0][1] * b) + b * (self.inv[1][0] * a + self.inv[1][1] * b);
        self.log_norm - 0.5 * m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmmModel {
    pub means: Vec<[f64; 2]>,
    pub covariances: Vec<Cov>,
    pub weights: Vec<f64>,
    pub state_map: Vec<QubitState>,
    /// Average per-sample log-likelihood after the last EM step.
    pub log_lik: f64,
    /// Average log-likelihood after every EM step.
    pub history: Vec<f64>,
    pub converged: bool,
}

impl GmmModel {
    /// Model from explicit components; states follow weight order.
    pub fn from_components(means: Vec<[f64; 2]>, covariances: Vec<Cov>, weights: Vec<f64>) -> Result<Self> {
        let k = means.len();
        if k == 0 || covariances.len() != k || weights.len() != k {
            return Err(ReadoutError::InvalidArgument("component arrays must be non-empty and equally long"));
        }
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|w| !(*w >= 0.0)) || !(total > 0.0) {
            return Err(ReadoutError::InvalidArgument("weights must be non-negative with a positive sum"));
        }
        for (c, cov) in covariances.iter().enumerate() {
            if !(det(cov) > 0.0 && cov[0][0] > 0.0) || (cov[0][1] - cov[1][0]).abs() > 1e-12 * cov[0][0] {
                return Err(ReadoutError::SingularComponent(c));
            }
        }
        let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let state_map = states_by_weight(&weights);
        Ok(Self { means, covariances, weights, state_map, log_lik: f64::NAN, history: Vec::new(), converged: false })
    }

    pub fn k(&self) -> usize {
        self.means.len()
    }

    fn densities(&self) -> Vec<Density> {
        (0..self.k()).map(|c| Density::new(self.means[c], &self.covariances[c], self.weights[c])).collect()
    }

    /// Component with the largest responsibility; ties go to the lower index.
    pub fn classify(&self, i: f64, q: f64) -> usize {
        best_component(&self.densities(), [i, q])
    }

    pub fn component_of(&self, state: QubitState) -> Result<usize> {
        self.state_map.iter().position(|&s| s == state).ok_or(ReadoutError::MissingState(state))
    }

    /// Fixes the state map from reference shots prepared in `|0>` and `|1>`:
    /// each state goes to the component that captures most of its shots.
    pub fn calibrate_state_map(&mut self, ground: &[IqSample], excited: &[IqSample]) -> Result<()> {
        if ground.is_empty() || excited.is_empty() {
            return Err(ReadoutError::InvalidArgument("reference sets must be non-empty"));
        }
        let dens = self.densities();
        let vote = |shots: &[IqSample]| {
            let mut counts = vec![0usize; self.k()];
            for s in shots {
                counts[best_component(&dens, s.xy())] += 1;
            }
            // first maximum wins
            let mut best = 0;
            for c in 1..counts.len() {
                if counts[c] > counts[best] {
                    best = c;
                }
            }
            best
        };
        let g = vote(ground);
        let e = vote(excited);
        if g == e {
            return Err(ReadoutError::InvalidArgument("ground and excited references land in the same component"));
        }
        for (c, s) in self.state_map.iter_mut().enumerate() {
            *s = if c == g {
                QubitState::Ground
            } else if c == e {
                QubitState::Excited
            } else {
                QubitState::Higher
            };
        }
        Ok(())
    }
}

fn best_component(dens: &[Density], x: [f64; 2]) -> usize {
    let mut best = 0;
    let mut best_v = dens[0].log_pdf(x);
    for (c, d) in dens.iter().enumerate().skip(1) {
        let v = d.log_pdf(x);
        if v > best_v {
            best = c;
            best_v = v;
        }
    }
    best
}

fn states_by_weight(weights: &[f64]) -> Vec<QubitState> {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    let mut map = vec![QubitState::Higher; weights.len()];
    if let Some(&c) = order.first() {
        map[c] = QubitState::Ground;
    }
    if let Some(&c) = order.get(1) {
        map[c] = QubitState::Excited;
    }
    map
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmmOptions {
    pub k: usize,
    pub seed: u64,
    pub max_iters: usize,
    /// Stop once the average log-likelihood gains less than this.
    pub tol: f64,
}

impl Default for GmmOptions {
    fn default() -> Self {
        Self { k: 3, seed: 0, max_iters: 500, tol: 1e-10 }
    }
}

/// Weighted mean and covariance; `weight(j)` is the weight of sample `j`.
fn moments(xs: &[[f64; 2]], weight: impl Fn(usize) -> f64) -> ([f64; 2], Cov, f64) {
    let (mut n, mut si, mut sq) = (0.0, 0.0, 0.0);
    for (j, x) in xs.iter().enumerate() {
        let w = weight(j);
        n += w;
        si += w * x[0];
        sq += w * x[1];
    }
    let mean = [si / n, sq / n];
    let mut c = [[0.0; 2]; 2];
    for (j, x) in xs.iter().enumerate() {
        let w = weight(j);
        let (a, b) = (x[0] - mean[0], x[1] - mean[1]);
        c[0][0] += w * a * a;
        c[0][1] += w * a * b;
        c[1][1] += w * b * b;
    }
    c[0][0] /= n;
    c[0][1] /= n;
    c[1][1] /= n;
    c[1][0] = c[0][1];
    (mean, c, n)
}

/// Expectation maximization for a `k`-component bivariate mixture.
///
/// Centers are seeded by farthest-point traversal starting from a random
/// sample; each sample then joins its nearest center, and the pooled
/// within-cluster covariance initializes every component. Covariances
/// carry `+eps I` with `eps = 1e-9` times the mean per-axis data variance.
pub fn fit_gmm(samples: &[IqSample], opts: &GmmOptions) -> Result<GmmModel> {
    let k = opts.k;
    if k == 0 {
        return Err(ReadoutError::InvalidArgument("k must be positive"));
    }
    let n = samples.len();
    if n < 10 * k {
        return Err(ReadoutError::InsufficientSamples { got: n, k, need: 10 * k });
    }
    if samples.iter().any(|s| !s.i.is_finite() || !s.q.is_finite()) {
        return Err(ReadoutError::InvalidArgument("non-finite IQ sample"));
    }
    let xs: Vec<[f64; 2]> = samples.iter().map(IqSample::xy).collect();
    let (_, global, _) = moments(&xs, |_| 1.0);
    let variance = 0.5 * (global[0][0] + global[1][1]);
    if !(variance > 0.0) {
        return Err(ReadoutError::SingularComponent(0));
    }
    let eps = 1e-9 * variance;

    // farthest-point seeding
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut centers = vec![xs[rng.random_range(0..n)]];
    let dist2 = |a: &[f64; 2], b: &[f64; 2]| (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2);
    let mut nearest: Vec<f64> = xs.iter().map(|x| dist2(x, &centers[0])).collect();
    while centers.len() < k {
        let mut far = 0;
        for j in 1..n {
            if nearest[j] > nearest[far] {
                far = j;
            }
        }
        let c = xs[far];
        for (j, x) in xs.iter().enumerate() {
            nearest[j] = nearest[j].min(dist2(x, &c));
        }
        centers.push(c);
    }

    let mut resp = vec![0.0; n * k];
    for (j, x) in xs.iter().enumerate() {
        let mut best = 0;
        for c in 1..k {
            if dist2(x, &centers[c]) < dist2(x, &centers[best]) {
                best = c;
            }
        }
        resp[j * k + best] = 1.0;
    }
    let mut means = vec![[0.0; 2]; k];
    let mut weights = vec![0.0; k];
    let mut pooled = [[0.0; 2]; 2];
    for c in 0..k {
        let (mean, cov, nk) = moments(&xs, |j| resp[j * k + c]);
        if !(nk > 0.0) {
            return Err(ReadoutError::SingularComponent(c));
        }
        means[c] = mean;
        weights[c] = nk / n as f64;
        for a in 0..2 {
            for b in 0..2 {
                pooled[a][b] += cov[a][b] * nk / n as f64;
            }
        }
    }
    pooled[0][0] += eps;
    pooled[1][1] += eps;
    let mut covariances = vec![pooled; k];

    let mut history = Vec::new();
    let mut converged = false;
    let mut log_lik = f64::NEG_INFINITY;
    let mut logp = vec![0.0; k];
    for _ in 0..opts.max_iters {
        // E-step
        let dens: Vec<Density> = (0..k).map(|c| Density::new(means[c], &covariances[c], weights[c])).collect();
        let mut total = 0.0;
        for (j, x) in xs.iter().enumerate() {
            let mut m = f64::NEG_INFINITY;
            for c in 0..k {
                logp[c] = dens[c].log_pdf(*x);
                m = m.max(logp[c]);
            }
            let s: f64 = logp.iter().map(|l| (l - m).exp()).sum();
            let lse = m + s.ln();
            total += lse;
            for c in 0..k {
                resp[j * k + c] = (logp[c] - lse).exp();
            }
        }
        let ll = total / n as f64;
        history.push(ll);
        let gain = ll - log_lik;
        log_lik = ll;
        if gain < opts.tol {
            converged = true;
            break;
        }

        // M-step
        for c in 0..k {
            let (mean, mut cov, nk) = moments(&xs, |j| resp[j * k + c]);
            if !(nk > 0.0) || !(min_eigenvalue(&cov) >= eps) {
                return Err(ReadoutError::SingularComponent(c));
            }
            cov[0][0] += eps;
            cov[1][1] += eps;
            means[c] = mean;
            covariances[c] = cov;
            weights[c] = nk / n as f64;
        }
        let wsum: f64 = weights.iter().sum();
        for w in weights.iter_mut() {
            *w /= wsum;
        }
    }

    let state_map = states_by_weight(&weights);
    Ok(GmmModel { means, covariances, weights, state_map, log_lik, history, converged })
}

pub fn assign_states(model: &GmmModel, samples: &[IqSample]) -> Vec<QubitState> {
    let dens = model.densities();
    samples.iter().map(|s| model.state_map[best_component(&dens, s.xy())]).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Correlations {
    /// Empirical frequencies of `|0>`, `|1>`, `|2+>`.
    pub populations: [f64; 3],
    pub counts: [usize; 3],
    /// `P(0 -> 0)` over adjacent pairs starting in 0; `None` if 0 never starts a pair.
    pub p00: Option<f64>,
    pub p11: Option<f64>,
}

impl Correlations {
    pub fn p(&self, state: QubitState) -> Result<f64> {
        match state {
            QubitState::Ground => self.p00,
            QubitState::Excited => self.p11,
            QubitState::Higher => None,
        }
        .ok_or(ReadoutError::NoOccupancy(state))
    }
}

/// Populations and consecutive-measurement correlations
/// `P_xx = #(x -> x) / #(x -> any)`.
pub fn correlations(seq: &[QubitState]) -> Result<Correlations> {
    if seq.len() < 2 {
        return Err(ReadoutError::InvalidArgument("need at least two measurements"));
    }
    let mut counts = [0usize; 3];
    for s in seq {
        counts[s.index()] += 1;
    }
    let mut starts = [0usize; 3];
    let mut stays = [0usize; 3];
    for w in seq.windows(2) {
        starts[w[0].index()] += 1;
        if w[0] == w[1] {
            stays[w[0].index()] += 1;
        }
    }
    let n = seq.len() as f64;
    let ratio = |x: usize| (starts[x] > 0).then(|| stays[x] as f64 / starts[x] as f64);
    Ok(Correlations {
        populations: [counts[0] as f64 / n, counts[1] as f64 / n, counts[2] as f64 / n],
        counts,
        p00: ratio(0),
        p11: ratio(1),
    })
}

/// `|mu_1 - mu_0| / (sigma_0 + sigma_1)` with each sigma projected on the
/// axis joining the two pointer states.
pub fn snr(model: &GmmModel) -> Result<f64> {
    let g = model.component_of(QubitState::Ground)?;
    let e = model.component_of(QubitState::Excited)?;
    let (m0, m1) = (model.means[g], model.means[e]);
    let d = [m1[0] - m0[0], m1[1] - m0[1]];
    let dist = (d[0] * d[0] + d[1] * d[1]).sqrt();
    if !(dist > 0.0) {
        return Err(ReadoutError::InvalidArgument("pointer states coincide"));
    }
    let u = [d[0] / dist, d[1] / dist];
    let proj = |c: &Cov| (u[0] * (c[0][0] * u[0] + c[0][1] * u[1]) + u[1] * (c[1][0] * u[0] + c[1][1] * u[1])).sqrt();
    Ok(dist / (proj(&model.covariances[g]) + proj(&model.covariances[e])))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutStats {
    pub populations: [f64; 3],
    pub counts: [usize; 3],
    pub p00: Option<f64>,
    pub p11: Option<f64>,
    pub snr: f64,
}

/// Fits the mixture, assigns states and summarizes a trace.
pub fn analyze(samples: &[IqSample], opts: &GmmOptions) -> Result<(GmmModel, Vec<QubitState>, ReadoutStats)> {
    let model = fit_gmm(samples, opts)?;
    let seq = assign_states(&model, samples);
    let stats = stats_for(&model, &seq)?;
    Ok((model, seq, stats))
}

pub fn stats_for(model: &GmmModel, seq: &[QubitState]) -> Result<ReadoutStats> {
    let c = correlations(seq)?;
    Ok(ReadoutStats { populations: c.populations, counts: c.counts, p00: c.p00, p11: c.p11, snr: snr(model)? })
}

/// Fraction of post-selection measurements found in `target`.
pub fn reset_fidelity(pre: &[QubitState], post: &[QubitState], target: QubitState) -> Result<f64> {
    if pre.len() != post.len() {
        return Err(ReadoutError::LengthMismatch(pre.len(), post.len()));
    }
    if post.is_empty() {
        return Err(ReadoutError::InvalidArgument("no reset shots"));
    }
    Ok(post.iter().filter(|&&s| s == target).count() as f64 / post.len() as f64)
}

fn check_stochastic(m: &[Vec<f64>]) -> Result<()> {
    for (r, row) in m.iter().enumerate() {
        let s: f64 = row.iter().sum();
        if row.len() != m.len() || row.iter().any(|p| !(*p >= 0.0)) || (s - 1.0).abs() > 1e-9 {
            return Err(ReadoutError::InvalidStochasticMatrix(r));
        }
    }
    Ok(())
}

fn gaussian_draw(rng: &mut ChaCha8Rng, mean: [f64; 2], cov: &Cov) -> [f64; 2] {
    let l00 = cov[0][0].sqrt();
    let l10 = cov[1][0] / l00;
    let l11 = (cov[1][1] - l10 * l10).max(0.0).sqrt();
    let z0: f64 = rng.sample(StandardNormal);
    let z1: f64 = rng.sample(StandardNormal);
    [mean[0] + l00 * z0, mean[1] + l10 * z0 + l11 * z1]
}

/// Markov chain over the emission model's components, sampled with
/// Gaussian IQ noise. The chain starts in component 0.
pub fn synth_trace(
    transitions: &[Vec<f64>],
    emission: &GmmModel,
    n: usize,
    seed: u64,
) -> Result<(Vec<QubitState>, Vec<IqSample>)> {
    check_stochastic(transitions)?;
    if transitions.len() != emission.k() {
        return Err(ReadoutError::InvalidArgument("transition matrix size must match the component count"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut truth = Vec::with_capacity(n);
    let mut samples = Vec::with_capacity(n);
    let mut c = 0usize;
    for t in 0..n {
        truth.push(emission.state_map[c]);
        let [i, q] = gaussian_draw(&mut rng, emission.means[c], &emission.covariances[c]);
        samples.push(IqSample::new(t as u64, i, q));
        let u: f64 = rng.random();
        let row = &transitions[c];
        let mut acc = 0.0;
        let mut next = row.len() - 1;
        for (j, p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                next = j;
                break;
            }
        }
        c = next;
    }
    Ok((truth, samples))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResetConfig {
    /// Probability that the qubit starts in `|1>`.
    pub p_excited: f64,
    /// Probability of decay `1 -> 0` between the two readouts.
    pub p_decay: f64,
    pub shots: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResetOutcome {
    pub target: QubitState,
    pub pre: Vec<QubitState>,
    pub post: Vec<QubitState>,
    pub fidelity: f64,
}

/// Measurement-conditioned reset: read, flip when the outcome differs
/// from `target`, let the qubit decay, read again.
///
/// `emission` generates IQ points for the true state and must contain
/// ground and excited components; `discriminator` classifies them.
pub fn simulate_active_reset(
    emission: &GmmModel,
    discriminator: &GmmModel,
    target: QubitState,
    cfg: &ResetConfig,
) -> Result<ResetOutcome> {
    if target == QubitState::Higher {
        return Err(ReadoutError::InvalidArgument("reset target must be 0 or 1"));
    }
    let in_unit = |p: f64| (0.0..=1.0).contains(&p);
    if !in_unit(cfg.p_excited) || !in_unit(cfg.p_decay) || cfg.shots == 0 {
        return Err(ReadoutError::InvalidArgument("probabilities must lie in [0, 1] and shots be positive"));
    }
    let g = emission.component_of(QubitState::Ground)?;
    let e = emission.component_of(QubitState::Excited)?;
    let dens = discriminator.densities();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let read = |rng: &mut ChaCha8Rng, excited: bool| {
        let c = if excited { e } else { g };
        let x = gaussian_draw(rng, emission.means[c], &emission.covariances[c]);
        discriminator.state_map[best_component(&dens, x)]
    };
    let mut pre = Vec::with_capacity(cfg.shots);
    let mut post = Vec::with_capacity(cfg.shots);
    for _ in 0..cfg.shots {
        let mut excited = rng.random::<f64>() < cfg.p_excited;
        let first = read(&mut rng, excited);
        if first != target {
            excited = !excited;
        }
        if excited && rng.random::<f64>() < cfg.p_decay {
            excited = false;
        }
        pre.push(first);
        post.push(read(&mut rng, excited));
    }
    let fidelity = reset_fidelity(&pre, &post, target)?;
    Ok(ResetOutcome { target, pre, post, fidelity })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_blobs(sep: f64, n: usize, seed: u64) -> (Vec<QubitState>, Vec<IqSample>) {
        let emission =
            GmmModel::from_components(vec![[0.0, 0.0], [sep, 0.0]], vec![[[1.0, 0.0], [0.0, 1.0]]; 2], vec![0.6, 0.4])
                .unwrap();
        let m = vec![vec![0.9, 0.1], vec![0.15, 0.85]];
        synth_trace(&m, &emission, n, seed).unwrap()
    }

    #[test]
    fn recovers_two_gaussians() {
        let (_, samples) = two_blobs(8.0, 20_000, 3);
        let model = fit_gmm(&samples, &GmmOptions { k: 2, ..Default::default() }).unwrap();
        let g = model.component_of(QubitState::Ground).unwrap();
        let e = model.component_of(QubitState::Excited).unwrap();
        assert!(model.means[g][0].abs() < 0.5 && model.means[g][1].abs() < 0.5);
        assert!((model.means[e][0] - 8.0).abs() < 0.5);
        assert!((model.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_samples_are_singular() {
        let samples: Vec<IqSample> = (0..100).map(|t| IqSample::new(t, 1.0, 2.0)).collect();
        assert!(matches!(fit_gmm(&samples, &GmmOptions::default()), Err(ReadoutError::SingularComponent(_))));
    }

    #[test]
    fn too_few_samples() {
        let samples: Vec<IqSample> = (0..20).map(|t| IqSample::new(t, t as f64, 0.0)).collect();
        assert!(matches!(fit_gmm(&samples, &GmmOptions::default()), Err(ReadoutError::InsufficientSamples { .. })));
    }

    #[test]
    fn em_log_likelihood_never_drops() {
        let (_, samples) = two_blobs(3.0, 5_000, 9);
        let model = fit_gmm(&samples, &GmmOptions::default()).unwrap();
        assert!(model.history.windows(2).all(|w| w[1] >= w[0] - 1e-10));
    }

    #[test]
    fn sample_at_mean_takes_that_state() {
        let m = GmmModel::from_components(vec![[0.0, 0.0], [6.0, 0.0]], vec![[[1.0, 0.0], [0.0, 1.0]]; 2], vec![0.7, 0.3])
            .unwrap();
        let s = assign_states(&m, &[IqSample::new(0, 6.0, 0.0), IqSample::new(1, 0.0, 0.0)]);
        assert_eq!(s, vec![QubitState::Excited, QubitState::Ground]);
    }

    #[test]
    fn equidistant_point_goes_to_lower_index() {
        let m = GmmModel::from_components(vec![[0.0, 0.0], [6.0, 0.0]], vec![[[1.0, 0.0], [0.0, 1.0]]; 2], vec![0.5, 0.5])
            .unwrap();
        assert_eq!(m.classify(3.0, 0.0), 0);
    }

    #[test]
    fn correlation_examples() {
        use QubitState::*;
        let c = correlations(&[Ground, Ground, Ground, Ground]).unwrap();
        assert_eq!(c.p00, Some(1.0));
        assert_eq!(c.p11, None);
        assert_eq!(c.p(Excited), Err(ReadoutError::NoOccupancy(Excited)));
        let c = correlations(&[Ground, Excited, Ground, Excited]).unwrap();
        assert_eq!((c.p00, c.p11), (Some(0.0), Some(0.0)));
        assert!((c.populations.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn snr_arithmetic() {
        let eye = [[1.0, 0.0], [0.0, 1.0]];
        let m = GmmModel::from_components(vec![[0.0, 0.0], [6.0, 0.0]], vec![eye; 2], vec![0.6, 0.4]).unwrap();
        assert!((snr(&m).unwrap() - 3.0).abs() < 1e-12);
        let big = [[4.0, 0.0], [0.0, 4.0]];
        let m = GmmModel::from_components(vec![[0.0, 0.0], [6.0, 0.0]], vec![big; 2], vec![0.6, 0.4]).unwrap();
        assert!((snr(&m).unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn reset_fidelity_contract() {
        use QubitState::*;
        assert_eq!(reset_fidelity(&[Excited, Ground], &[Ground, Ground], Ground).unwrap(), 1.0);
        assert!(matches!(reset_fidelity(&[Ground], &[Ground, Ground], Ground), Err(ReadoutError::LengthMismatch(1, 2))));
    }

    #[test]
    fn identity_chain_stays_put() {
        let emission =
            GmmModel::from_components(vec![[0.0, 0.0], [5.0, 0.0]], vec![[[1.0, 0.0], [0.0, 1.0]]; 2], vec![0.5, 0.5])
                .unwrap();
        let (truth, _) = synth_trace(&[vec![1.0, 0.0], vec![0.0, 1.0]], &emission, 1000, 1).unwrap();
        assert!(truth.iter().all(|&s| s == truth[0]));
    }

    #[test]
    fn bad_transition_matrix_rejected() {
        let emission =
            GmmModel::from_components(vec![[0.0, 0.0], [5.0, 0.0]], vec![[[1.0, 0.0], [0.0, 1.0]]; 2], vec![0.5, 0.5])
                .unwrap();
        assert_eq!(
            synth_trace(&[vec![0.5, 0.6], vec![0.0, 1.0]], &emission, 10, 1).unwrap_err(),
            ReadoutError::InvalidStochasticMatrix(0)
        );
    }

    #[test]
    fn synthetic_trace_is_reproducible() {
        assert_eq!(two_blobs(4.0, 500, 42), two_blobs(4.0, 500, 42));
    }

    #[test]
    fn reference_calibration_overrides_weights() {
        let (_, samples) = two_blobs(8.0, 5_000, 5);
        let mut model = fit_gmm(&samples, &GmmOptions { k: 2, ..Default::default() }).unwrap();
        // pretend the heavier blob is actually the excited state
        let ground: Vec<IqSample> = (0..10).map(|t| IqSample::new(t, 8.0, 0.0)).collect();
        let excited: Vec<IqSample> = (0..10).map(|t| IqSample::new(t, 0.0, 0.0)).collect();
        model.calibrate_state_map(&ground, &excited).unwrap();
        let g = model.component_of(QubitState::Ground).unwrap();
        assert!((model.means[g][0] - 8.0).abs() < 0.5);
    }
}
