//! Local-oscillator noise, closed-loop Ramsey interrogation and Allan analysis.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::{num_complex::Complex, FftPlanner};

use crate::bayes::SensorDesign;
use crate::error::{Error, Result};
use crate::frequentist::{response_curve, sme_from_mean, ResponseCurve};
use crate::measurement::{draw_index, outcome_distribution};
use crate::rng::stream;
use crate::table::ResultTable;

pub const MAX_NOISE_SAMPLES: usize = 1 << 24;
/// Phase grid used by the in-loop estimators.
pub const ESTIMATOR_GRID: usize = 8192;
pub const PRIOR_HALF_LIFE: f64 = 50.0;
pub const SLIP_RUN: usize = 100;

/// One-sided fractional-frequency PSD S(f) = h f^(-1-alpha).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OscillatorNoiseSpec {
    pub alpha: i32,
    pub h_alpha: f64,
    pub sample_rate: f64,
}

impl OscillatorNoiseSpec {
    pub fn new(alpha: i32, h_alpha: f64, sample_rate: f64) -> Result<Self> {
        if !(-1..=1).contains(&alpha) {
            return Err(Error::invalid(format!("alpha must be -1, 0 or 1, got {alpha}")));
        }
        if !(h_alpha > 0.0 && h_alpha.is_finite()) {
            return Err(Error::invalid(format!("h_alpha must be positive, got {h_alpha}")));
        }
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::invalid(format!("sample rate must be positive, got {sample_rate}")));
        }
        Ok(OscillatorNoiseSpec { alpha, h_alpha, sample_rate })
    }

    pub fn psd(&self, f: f64) -> f64 {
        self.h_alpha * f.powi(-1 - self.alpha)
    }

    /// Allan deviation of the free-running oscillator.
    pub fn free_allan(&self, tau: f64) -> f64 {
        let h = self.h_alpha;
        match self.alpha {
            -1 => (h / (2.0 * tau)).sqrt(),
            0 => (2.0 * std::f64::consts::LN_2 * h).sqrt(),
            _ => (2.0 * PI * PI / 3.0 * h * tau).sqrt(),
        }
    }
}

/// Gaussian white noise shaped by sqrt(S(f)) in the frequency domain.
pub fn synthesize_noise(shape: &OscillatorNoiseSpec, duration: f64, seed: u64) -> Result<Vec<f64>> {
    let n = (duration * shape.sample_rate).round() as usize;
    if n < 2 {
        return Err(Error::invalid("noise record shorter than two samples"));
    }
    if n > MAX_NOISE_SAMPLES {
        return Err(Error::invalid(format!("{n} samples exceed the cap of {MAX_NOISE_SAMPLES}")));
    }
    let fs = shape.sample_rate;
    let mut rng = stream(seed, 0);
    let mut buf: Vec<Complex<f64>> = (0..n).map(|_| Complex::new(rng.sample(StandardNormal), 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, z) in buf.iter_mut().enumerate() {
        let kk = k.min(n - k);
        let amp = if kk == 0 {
            if shape.alpha == -1 { (shape.h_alpha * fs / 2.0).sqrt() } else { 0.0 }
        } else {
            (shape.psd(kk as f64 * fs / n as f64) * fs / 2.0).sqrt()
        };
        *z *= amp;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    Ok(buf.into_iter().map(|z| z.re / n as f64).collect())
}

/// One-sided Welch PSD with Hann windows and half overlap.
pub fn welch_psd(y: &[f64], sample_rate: f64, segment: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if segment < 8 || segment > y.len() {
        return Err(Error::InsufficientData(format!("segment {segment} for {} samples", y.len())));
    }
    let window: Vec<f64> = (0..segment).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / segment as f64).cos()).collect();
    let wss: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::new().plan_fft_forward(segment);
    let half = segment / 2;
    let mut acc = vec![0.0; half + 1];
    let mut count = 0usize;
    let mut start = 0;
    while start + segment <= y.len() {
        let seg = &y[start..start + segment];
        let mean = seg.iter().sum::<f64>() / segment as f64;
        let mut buf: Vec<Complex<f64>> = seg.iter().zip(&window).map(|(v, w)| Complex::new((v - mean) * w, 0.0)).collect();
        fft.process(&mut buf);
        for (a, z) in acc.iter_mut().zip(&buf) {
            *a += z.norm_sqr();
        }
        count += 1;
        start += segment / 2;
    }
    let scale = 2.0 / (sample_rate * wss * count as f64);
    let freqs = (1..=half).map(|k| k as f64 * sample_rate / segment as f64).collect();
    let psd = acc[1..].iter().enumerate().map(|(i, a)| if i + 1 == half { a * scale / 2.0 } else { a * scale }).collect();
    Ok((freqs, psd))
}

/// Least-squares slope of log y against log x.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = x.iter().zip(y).filter(|(a, b)| **a > 0.0 && **b > 0.0).map(|(a, b)| (a.ln(), b.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// PSD slope over [f_lo, f_hi], after averaging into log-spaced bins.
pub fn psd_slope(freqs: &[f64], psd: &[f64], f_lo: f64, f_hi: f64) -> Result<f64> {
    let bins = 24;
    let (la, lb) = (f_lo.ln(), f_hi.ln());
    let mut sum = vec![(0.0, 0.0, 0usize); bins];
    for (&f, &p) in freqs.iter().zip(psd) {
        if f < f_lo || f > f_hi {
            continue;
        }
        let b = (((f.ln() - la) / (lb - la)) * bins as f64).floor().clamp(0.0, bins as f64 - 1.0) as usize;
        sum[b].0 += f.ln();
        sum[b].1 += p;
        sum[b].2 += 1;
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = sum.iter().filter(|s| s.2 > 0).map(|s| ((s.0 / s.2 as f64).exp(), s.1 / s.2 as f64)).unzip();
    if xs.len() < 4 {
        return Err(Error::InsufficientData("fewer than four populated frequency bins".into()));
    }
    Ok(loglog_slope(&xs, &ys))
}

/// Sensor interrogated once per clock cycle.
#[derive(Clone, Debug)]
pub enum ClockSensor {
    /// Coherent spin state with a Jy readout, sampled as a binomial.
    Css { n_atoms: usize },
    /// Any probe and readout on the Dicke space.
    Design(SensorDesign),
    /// Returns the true phase without projection noise.
    Ideal,
}

impl ClockSensor {
    pub fn n_atoms(&self) -> usize {
        match self {
            ClockSensor::Css { n_atoms } => *n_atoms,
            ClockSensor::Design(d) => d.state.space().n_atoms(),
            ClockSensor::Ideal => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClockEstimator {
    /// Posterior mean under the tracked gaussian prior.
    Mmse,
    /// Inversion of the mean response.
    Sme,
}

#[derive(Clone, Debug)]
pub struct ClockConfig {
    pub omega0: f64,
    pub t: f64,
    pub t_dead: f64,
    pub gain: f64,
    pub cycles: usize,
    pub sensor: ClockSensor,
    pub estimator: ClockEstimator,
    pub seed: u64,
    /// Deterministic fractional-frequency offset added to the oscillator.
    pub lo_offset: f64,
}

impl ClockConfig {
    pub fn new(omega0: f64, t: f64, cycles: usize, sensor: ClockSensor, seed: u64) -> Result<Self> {
        let cfg = ClockConfig { omega0, t, t_dead: 0.0, gain: 0.5, cycles, sensor, estimator: ClockEstimator::Mmse, seed, lo_offset: 0.0 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_dead_time(mut self, t_dead: f64) -> Result<Self> {
        self.t_dead = t_dead;
        self.validate()?;
        Ok(self)
    }

    pub fn with_gain(mut self, gain: f64) -> Result<Self> {
        self.gain = gain;
        self.validate()?;
        Ok(self)
    }

    pub fn with_lo_offset(mut self, y: f64) -> Self {
        self.lo_offset = y;
        self
    }

    pub fn with_estimator(mut self, e: ClockEstimator) -> Self {
        self.estimator = e;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega0 > 0.0 && self.omega0.is_finite()) {
            return Err(Error::invalid("omega0 must be positive"));
        }
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(Error::invalid("interrogation time must be positive"));
        }
        if !(self.t_dead >= 0.0 && self.t_dead.is_finite()) {
            return Err(Error::invalid("dead time must be non-negative"));
        }
        if !(self.gain > 0.0 && self.gain < 2.0) {
            return Err(Error::invalid(format!("gain must lie in (0, 2), got {}", self.gain)));
        }
        if self.cycles == 0 {
            return Err(Error::invalid("at least one cycle required"));
        }
        if self.sensor.n_atoms() == 0 {
            return Err(Error::invalid("sensor needs at least one atom"));
        }
        Ok(())
    }

    pub fn cycle_time(&self) -> f64 {
        self.t + self.t_dead
    }

    /// Samples per interrogation and per dead interval at the noise rate.
    fn sample_counts(&self, fs: f64) -> Result<(usize, usize)> {
        if fs * self.t < 16.0 * (1.0 - 1e-12) {
            return Err(Error::invalid(format!("sample rate {fs} below 16/T")));
        }
        let whole = |x: f64, what: &str| {
            let r = x.round();
            if (x - r).abs() > 1e-6 * x.max(1.0) {
                Err(Error::invalid(format!("{what} is not a whole number of noise samples")))
            } else {
                Ok(r as usize)
            }
        };
        Ok((whole(fs * self.t, "interrogation time")?, whole(fs * self.t_dead, "dead time")?))
    }
}

/// sigma_y(tau) = Delta_phi / (omega0 T) * sqrt((T + T_D) / tau).
pub fn instability(delta_phi: f64, omega0: f64, t: f64, t_dead: f64, tau: f64) -> f64 {
    delta_phi / (omega0 * t) * ((t + t_dead) / tau).sqrt()
}

/// Coherence time T_C solving sigma_y,LO(T_C) * omega0 * (T + T_C) = 1 rad.
///
/// The left side is not monotone for white frequency noise; the root on the
/// increasing branch (where accumulated phase noise grows past one radian) is
/// returned.
pub fn coherence_time(noise: &OscillatorNoiseSpec, omega0: f64, t: f64) -> Result<f64> {
    let g = |tc: f64| noise.free_allan(tc) * omega0 * (t + tc) - 1.0;
    let grid: Vec<f64> = (-160..=160).map(|k| t * 2f64.powf(k as f64 / 4.0)).collect();
    let mut bracket = None;
    for w in grid.windows(2) {
        if g(w[0]) < 0.0 && g(w[1]) >= 0.0 {
            bracket = Some((w[0], w[1]));
        }
    }
    let (a, b) = bracket.ok_or_else(|| Error::Undefined("oscillator never stays within one radian".into()))?;
    crate::optim::bisect(g, a, b, 1e-12 * b, 400)
}

/// Per-cycle record of the closed loop.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CycleRecord {
    pub cycle_index: usize,
    pub phi_true: f64,
    pub phi_estimate: f64,
    pub correction: f64,
    pub residual_y: f64,
}

#[derive(Clone, Debug)]
pub struct ClockRun {
    pub records: Vec<CycleRecord>,
    /// Cycle-averaged fractional frequency of the uncorrected oscillator.
    pub free_y: Vec<f64>,
    /// Tracked prior variance used for each cycle's estimate.
    pub prior_variance: Vec<f64>,
    pub cycle_time: f64,
    pub phase_slip: bool,
}

impl ClockRun {
    pub fn residual_y(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.residual_y).collect()
    }

    pub fn phi_true(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.phi_true).collect()
    }

    pub fn series_table(&self) -> ResultTable {
        let mut t = ResultTable::new(["cycle_index", "phi_true", "phi_estimate", "correction", "residual_y"]);
        for r in &self.records {
            t.push(vec![r.cycle_index.into(), r.phi_true.into(), r.phi_estimate.into(), r.correction.into(), r.residual_y.into()])
                .expect("five columns");
        }
        t.set_meta("cycle_time_s", self.cycle_time);
        t.set_meta("phase_slip", self.phase_slip);
        t
    }
}

struct SensorModel {
    grid: Vec<f64>,
    kind: ModelKind,
}

enum ModelKind {
    Css { n: usize, ln_p: Vec<f64>, ln_q: Vec<f64> },
    Table { design: SensorDesign, outcomes: Vec<f64>, lik: Vec<Vec<f64>>, curve: Option<ResponseCurve> },
    Ideal,
}

impl SensorModel {
    fn new(sensor: &ClockSensor, estimator: ClockEstimator) -> Result<Self> {
        let k = ESTIMATOR_GRID;
        let grid: Vec<f64> = (0..k).map(|i| -PI + (i as f64 + 0.5) * 2.0 * PI / k as f64).collect();
        let kind = match sensor {
            ClockSensor::Css { n_atoms } => ModelKind::Css {
                n: *n_atoms,
                ln_p: grid.iter().map(|p| ((1.0 + p.sin()) / 2.0).ln()).collect(),
                ln_q: grid.iter().map(|p| ((1.0 - p.sin()) / 2.0).ln()).collect(),
            },
            ClockSensor::Design(design) => {
                let dists: Vec<_> = grid.par_iter().map(|&p| outcome_distribution(&design.state, &design.basis, p)).collect::<Result<_>>()?;
                let outcomes = dists[0].outcomes.clone();
                let lik = (0..outcomes.len()).map(|o| dists.iter().map(|d| d.probs[o]).collect()).collect();
                let curve = if estimator == ClockEstimator::Sme {
                    let pg: Vec<f64> = (0..=512).map(|i| -PI + i as f64 * 2.0 * PI / 512.0).collect();
                    Some(response_curve(&design.state, &design.basis, &pg)?)
                } else {
                    None
                };
                ModelKind::Table { design: design.clone(), outcomes, lik, curve }
            }
            ClockSensor::Ideal => ModelKind::Ideal,
        };
        Ok(SensorModel { grid, kind })
    }

    /// Draws an outcome index at the true phase.
    fn sample<R: Rng>(&self, phi: f64, rng: &mut R) -> Result<usize> {
        match &self.kind {
            ModelKind::Css { n, .. } => {
                let p = ((1.0 + phi.sin()) / 2.0).clamp(0.0, 1.0);
                let b = Binomial::new(*n as u64, p).map_err(|e| Error::invalid(e.to_string()))?;
                Ok(b.sample(rng) as usize)
            }
            ModelKind::Table { design, .. } => {
                let d = outcome_distribution(&design.state, &design.basis, phi)?;
                Ok(draw_index(&d.cdf(), rng.random::<f64>()))
            }
            ModelKind::Ideal => Ok(0),
        }
    }

    /// Posterior mean and variance under a zero-mean gaussian prior.
    fn mmse(&self, outcome: usize, prior_var: f64) -> (f64, f64) {
        let k = self.grid.len();
        let mut logw = vec![0.0; k];
        for (j, &p) in self.grid.iter().enumerate() {
            let ll = match &self.kind {
                ModelKind::Css { n, ln_p, ln_q } => {
                    let m = outcome as f64;
                    let up = if outcome > 0 { m * ln_p[j] } else { 0.0 };
                    let dn = if outcome < *n { (*n as f64 - m) * ln_q[j] } else { 0.0 };
                    up + dn
                }
                ModelKind::Table { lik, .. } => lik[outcome][j].ln(),
                ModelKind::Ideal => 0.0,
            };
            logw[j] = ll - p * p / (2.0 * prior_var);
        }
        let top = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let (mut z, mut m1, mut m2) = (0.0, 0.0, 0.0);
        for (j, &p) in self.grid.iter().enumerate() {
            let w = (logw[j] - top).exp();
            z += w;
            m1 += w * p;
            m2 += w * p * p;
        }
        let mean = m1 / z;
        (mean, (m2 / z - mean * mean).max(0.0))
    }

    fn sme(&self, outcome: usize) -> Result<f64> {
        match &self.kind {
            ModelKind::Css { n, .. } => {
                let half = *n as f64 / 2.0;
                Ok(((outcome as f64 - half) / half).clamp(-1.0, 1.0).asin())
            }
            ModelKind::Table { outcomes, curve, .. } => {
                let c = curve.as_ref().expect("response curve built for SME");
                Ok(sme_from_mean(outcomes[outcome], c)?.phi)
            }
            ModelKind::Ideal => Err(Error::invalid("ideal sensor has no outcomes")),
        }
    }
}

fn bootstrap_prior(noise: &OscillatorNoiseSpec, cfg: &ClockConfig) -> f64 {
    match coherence_time(noise, cfg.omega0, cfg.t) {
        Ok(tc) => (cfg.t / tc).powi(2 + noise.alpha).clamp(1e-8, 1.0),
        Err(_) => 1.0,
    }
}

/// Closed-loop Monte Carlo: one Ramsey interrogation per cycle, integrator feedback.
pub fn run_servo(cfg: &ClockConfig, noise: &OscillatorNoiseSpec) -> Result<ClockRun> {
    cfg.validate()?;
    let fs = noise.sample_rate;
    let (n_t, n_d) = cfg.sample_counts(fs)?;
    let n_c = n_t + n_d;
    let total = cfg.cycles * n_c + 1;
    let y_lo = synthesize_noise(noise, total as f64 / fs, cfg.seed)?;
    let model = SensorModel::new(&cfg.sensor, cfg.estimator)?;
    let mut rng = stream(cfg.seed, 1);
    let dt = 1.0 / fs;
    let trap = |a: usize, b: usize| dt * (y_lo[a..=b].iter().sum::<f64>() - 0.5 * (y_lo[a] + y_lo[b]));

    let decay = 0.5f64.powf(1.0 / PRIOR_HALF_LIFE);
    let mut prior = bootstrap_prior(noise, cfg);
    let mut spread = prior;
    let mut y_corr = 0.0;
    let mut slip_run = 0usize;
    let mut phase_slip = false;
    let mut records = Vec::with_capacity(cfg.cycles);
    let mut free_y = Vec::with_capacity(cfg.cycles);
    let mut priors = Vec::with_capacity(cfg.cycles);
    for k in 0..cfg.cycles {
        let i0 = k * n_c;
        let phi_true = cfg.omega0 * (trap(i0, i0 + n_t) + (cfg.lo_offset + y_corr) * cfg.t);
        let lo_avg = trap(i0, i0 + n_c) / cfg.cycle_time() + cfg.lo_offset;
        priors.push(prior);
        let (est, post_var) = if let ModelKind::Ideal = model.kind {
            (phi_true, 0.0)
        } else {
            let outcome = model.sample(phi_true, &mut rng)?;
            match cfg.estimator {
                ClockEstimator::Mmse => model.mmse(outcome, prior),
                ClockEstimator::Sme => (model.sme(outcome)?, 0.0),
            }
        };
        if cfg.estimator == ClockEstimator::Mmse {
            prior = decay * prior + (1.0 - decay) * (est * est + post_var);
        } else {
            prior = decay * prior + (1.0 - decay) * est * est;
        }
        spread = decay * spread + (1.0 - decay) * phi_true * phi_true;
        slip_run = if spread.sqrt() > PI { slip_run + 1 } else { 0 };
        phase_slip |= slip_run >= SLIP_RUN;
        let correction = -cfg.gain * est / (cfg.omega0 * cfg.t);
        records.push(CycleRecord { cycle_index: k, phi_true, phi_estimate: est, correction, residual_y: lo_avg + y_corr });
        free_y.push(lo_avg);
        y_corr += correction;
    }
    Ok(ClockRun { records, free_y, prior_variance: priors, cycle_time: cfg.cycle_time(), phase_slip })
}

/// Independent runs over seeds, in parallel.
pub fn run_servo_seeds(cfg: &ClockConfig, noise: &OscillatorNoiseSpec, seeds: &[u64]) -> Vec<Result<ClockRun>> {
    seeds
        .par_iter()
        .map(|&s| {
            let mut c = cfg.clone();
            c.seed = s;
            run_servo(&c, noise)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct AllanSeries {
    pub tau: Vec<f64>,
    pub sigma_y: Vec<f64>,
    /// Relative standard error, 1/sqrt(number of disjoint tau intervals).
    pub confidence: Vec<f64>,
}

impl AllanSeries {
    pub fn table(&self) -> ResultTable {
        let mut t = ResultTable::new(["tau_s", "sigma_y", "stderr"]);
        for i in 0..self.tau.len() {
            t.push_reals(&[self.tau[i], self.sigma_y[i], self.sigma_y[i] * self.confidence[i]]).expect("three columns");
        }
        t
    }
}

/// Octave multiples 1, 2, 4, ... of the base interval with at least three per record.
pub fn octave_grid(n_samples: usize) -> Vec<usize> {
    std::iter::successors(Some(1usize), |m| Some(m * 2)).take_while(|m| 3 * m <= n_samples).collect()
}

/// Overlapping Allan deviation of interval averages y with spacing tau0.
pub fn allan_deviation(y: &[f64], tau0: f64, multiples: &[usize]) -> Result<AllanSeries> {
    let n = y.len();
    if let Some(&m) = multiples.iter().find(|&&m| m == 0 || 3 * m > n) {
        return Err(Error::InsufficientData(format!("{n} samples for tau = {m} tau0")));
    }
    let mut cum = vec![0.0; n + 1];
    for (i, v) in y.iter().enumerate() {
        cum[i + 1] = cum[i] + v;
    }
    let mut out = AllanSeries { tau: vec![], sigma_y: vec![], confidence: vec![] };
    for &m in multiples {
        let terms = n - 2 * m + 1;
        let mf = m as f64;
        let s: f64 = (0..terms)
            .map(|j| {
                let d = (cum[j + 2 * m] - 2.0 * cum[j + m] + cum[j]) / mf;
                d * d
            })
            .sum();
        out.tau.push(mf * tau0);
        out.sigma_y.push((s / (2.0 * terms as f64)).sqrt());
        out.confidence.push(1.0 / ((n / m) as f64).sqrt());
    }
    Ok(out)
}

/// Variance of the pre-correction phase over the second half of a locked run.
pub fn stationary_prior_width(cfg: &ClockConfig, noise: &OscillatorNoiseSpec) -> Result<f64> {
    let run = run_servo(cfg, noise)?;
    if run.phase_slip {
        return Err(Error::Undefined("servo lost lock".into()));
    }
    let phi = &run.phi_true()[cfg.cycles / 2..];
    let mean = phi.iter().sum::<f64>() / phi.len() as f64;
    Ok(phi.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / phi.len() as f64)
}

/// Prior width against interrogation time, runs in parallel.
pub fn prior_width_scan(cfg: &ClockConfig, noise: &OscillatorNoiseSpec, t_grid: &[f64]) -> Result<Vec<f64>> {
    t_grid
        .par_iter()
        .map(|&t| {
            let mut c = cfg.clone();
            c.t = t;
            let shape = OscillatorNoiseSpec { sample_rate: 16.0 / t, ..*noise };
            stationary_prior_width(&c, &shape)
        })
        .collect()
}
