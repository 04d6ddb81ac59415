//! Bounded Nelder-Mead simplex minimization.
//!
//! The simplex lives in coordinates normalized to the box `[lo, hi]`, so
//! parameters of very different magnitude get comparable steps. Trial
//! points are clipped back into the box.

use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent f64 methods when std is linked
use num_traits::Float;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    /// Simplex spread in normalized coordinates.
    pub x_tol: f64,
    /// Spread of simplex values relative to the value at the start point.
    pub f_tol: f64,
    /// Edge length of the initial simplex in normalized coordinates.
    pub initial_step: f64,
    /// Number of starts; start 0 is the supplied point, the rest jitter it.
    pub starts: usize,
    /// Relative half-width of the multiplicative jitter.
    pub jitter: f64,
    /// Fresh simplices rebuilt around a converged point, to escape
    /// premature collapse.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self { max_evals: 2000, x_tol: 1e-6, f_tol: 1e-10, initial_step: 0.05, starts: 1, jitter: 0.2, restarts: 2, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub fx: f64,
    pub evals: usize,
    pub converged: bool,
    /// Best value seen after each iteration, across all starts.
    pub history: Vec<f64>,
}

struct Boxed<'a> {
    lo: &'a [f64],
    hi: &'a [f64],
}

impl Boxed<'_> {
    fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(self.lo.iter().zip(self.hi)).map(|(v, (l, h))| (v - l) / (h - l)).collect()
    }

    fn to_box(&self, u: &[f64]) -> Vec<f64> {
        u.iter().zip(self.lo.iter().zip(self.hi)).map(|(v, (l, h))| l + v.clamp(0.0, 1.0) * (h - l)).collect()
    }
}

fn clip(u: &mut [f64]) {
    for v in u.iter_mut() {
        *v = v.clamp(0.0, 1.0);
    }
}

/// Minimizes `f` inside the box `lo <= x <= hi` starting from `x0`.
///
/// Non-finite objective values are treated as `+inf`.
pub fn minimize<F>(mut f: F, x0: &[f64], lo: &[f64], hi: &[f64], opts: &NelderMeadOptions) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    assert!(lo.len() == n && hi.len() == n, "bounds must match the parameter count");
    assert!(lo.iter().zip(hi).all(|(l, h)| l < h), "lower bounds must be below upper bounds");
    let bx = Boxed { lo, hi };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut best: Option<Minimum> = None;
    let mut history = Vec::new();
    let mut total = 0;
    for start in 0..opts.starts.max(1) {
        let x_start: Vec<f64> = if start == 0 {
            x0.to_vec()
        } else {
            x0.iter()
                .enumerate()
                .map(|(i, &v)| (v * (1.0 + opts.jitter * rng.random_range(-1.0..=1.0))).clamp(lo[i], hi[i]))
                .collect()
        };
        let (mut run, scale) = simplex(&mut f, &bx, &x_start, opts, best.as_ref().map(|b| b.fx), None, &mut history);
        total += run.evals;
        for _ in 0..opts.restarts {
            if !run.converged || total >= opts.max_evals * opts.starts.max(1) {
                break;
            }
            let prior = best.as_ref().map_or(run.fx, |b| b.fx.min(run.fx));
            // Restarts keep the objective scale of their start; a restart
            // from an exact fit would otherwise demand spreads below roundoff.
            let (mut again, _) = simplex(&mut f, &bx, &run.x, opts, Some(prior), Some(scale), &mut history);
            again.converged |= again.fx <= run.fx;
            total += again.evals;
            let gain = run.fx - again.fx;
            let done = !(gain > opts.f_tol * run.fx.abs());
            if again.fx <= run.fx {
                run = again;
            }
            if done {
                break;
            }
        }
        if best.as_ref().is_none_or(|b| run.fx < b.fx) {
            best = Some(run);
        }
    }
    let mut best = best.expect("at least one start");
    best.evals = total;
    best.history = history;
    best
}

fn simplex<F>(
    f: &mut F,
    bx: &Boxed<'_>,
    x0: &[f64],
    opts: &NelderMeadOptions,
    prior_best: Option<f64>,
    scale: Option<f64>,
    history: &mut Vec<f64>,
) -> (Minimum, f64)
where
    F: FnMut(&[f64]) -> f64,
{
    const ALPHA: f64 = 1.0;
    const GAMMA: f64 = 2.0;
    const RHO: f64 = 0.5;
    const SIGMA: f64 = 0.5;

    let n = x0.len();
    let mut evals = 0;
    let mut eval = |u: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(&bx.to_box(u));
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let mut u0 = bx.to_unit(x0);
    clip(&mut u0);
    let f0 = eval(&u0, &mut evals);
    let f_scale = scale.unwrap_or(if f0.is_finite() && f0 > 0.0 { f0 } else { 1.0 });
    let mut pts = alloc::vec![(u0.clone(), f0)];
    for i in 0..n {
        let mut u = u0.clone();
        // step away from the nearer wall so the vertex stays distinct
        u[i] += if u[i] + opts.initial_step <= 1.0 { opts.initial_step } else { -opts.initial_step };
        let fu = eval(&u, &mut evals);
        pts.push((u, fu));
    }

    let mut running_best = prior_best.map_or(f0, |p| p.min(f0));
    let mut converged = false;
    while evals < opts.max_evals {
        pts.sort_by(|a, b| a.1.total_cmp(&b.1));
        running_best = running_best.min(pts[0].1);
        history.push(running_best);

        let f_spread = pts[n].1 - pts[0].1;
        let x_spread = pts[1..]
            .iter()
            .flat_map(|(u, _)| u.iter().zip(&pts[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0f64, f64::max);
        if x_spread <= opts.x_tol && f_spread <= opts.f_tol * f_scale {
            converged = true;
            break;
        }

        let centroid: Vec<f64> =
            (0..n).map(|j| pts[..n].iter().map(|(u, _)| u[j]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> {
            let mut u: Vec<f64> = centroid.iter().zip(&pts[n].0).map(|(c, w)| c + t * (c - w)).collect();
            clip(&mut u);
            u
        };

        let ur = along(ALPHA);
        let fr = eval(&ur, &mut evals);
        if fr < pts[0].1 {
            let ue = along(GAMMA);
            let fe = eval(&ue, &mut evals);
            pts[n] = if fe < fr { (ue, fe) } else { (ur, fr) };
            continue;
        }
        if fr < pts[n - 1].1 {
            pts[n] = (ur, fr);
            continue;
        }
        let (uc, fc) = if fr < pts[n].1 {
            let u = along(RHO * ALPHA);
            let v = eval(&u, &mut evals);
            (u, v)
        } else {
            let u = along(-RHO);
            let v = eval(&u, &mut evals);
            (u, v)
        };
        if fc < pts[n].1.min(fr) {
            pts[n] = (uc, fc);
            continue;
        }
        let anchor = pts[0].0.clone();
        for p in pts[1..].iter_mut() {
            for (v, a) in p.0.iter_mut().zip(&anchor) {
                *v = a + SIGMA * (*v - a);
            }
            p.1 = eval(&p.0, &mut evals);
        }
    }
    pts.sort_by(|a, b| a.1.total_cmp(&b.1));
    running_best = running_best.min(pts[0].1);
    history.push(running_best);
    let (u, fx) = pts.swap_remove(0);
    (Minimum { x: bx.to_box(&u), fx, evals, converged, history: Vec::new() }, f_scale)
}
