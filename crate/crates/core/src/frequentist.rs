//! Sample-mean and maximum-likelihood phase estimation, Fisher information and
//! Monte Carlo estimation experiments.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measurement::{
    outcome_distribution, outcome_distribution_with_derivative, sample_counts, MeasurementBasis,
    OutcomeDistribution,
};
use crate::optim::golden_section_min;
use crate::rng::stream;
use crate::spin::{DickeVector, State};

const LOG_FLOOR: f64 = -690.775_527_898_213_7; // ln(1e-300)
const FI_CUTOFF: f64 = 1e-14;
pub const MLE_GRID: usize = 1024;

/// Mean and variance of the measured observable over a phase grid.
#[derive(Clone, Debug)]
pub struct ResponseCurve {
    pub phi_grid: Vec<f64>,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub monotone_interval: (f64, f64),
    model: Option<(State, MeasurementBasis)>,
}

impl ResponseCurve {
    fn interval_indices(&self) -> (usize, usize) {
        let lo = self.phi_grid.iter().position(|&p| p >= self.monotone_interval.0).unwrap_or(0);
        let hi = self.phi_grid.iter().rposition(|&p| p <= self.monotone_interval.1).unwrap_or(0);
        (lo, hi)
    }

    fn exact_mean(&self, phi: f64) -> Option<f64> {
        self.model.as_ref().and_then(|(s, b)| outcome_distribution(s, b, phi).ok().map(|d| d.mean()))
    }
}

pub fn response_curve(state: &State, basis: &MeasurementBasis, phi_grid: &[f64]) -> Result<ResponseCurve> {
    if phi_grid.is_empty() {
        return Err(Error::invalid("empty phase grid"));
    }
    if phi_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("phase grid must be strictly ascending"));
    }
    let mut mean = Vec::with_capacity(phi_grid.len());
    let mut var = Vec::with_capacity(phi_grid.len());
    for &phi in phi_grid {
        let d = outcome_distribution(state, basis, phi)?;
        mean.push(d.mean());
        var.push(d.variance());
    }
    let monotone_interval = monotone_run(phi_grid, &mean);
    Ok(ResponseCurve {
        phi_grid: phi_grid.to_vec(),
        mean,
        var,
        monotone_interval,
        model: Some((state.clone(), basis.clone())),
    })
}

/// The run of constant finite-difference sign containing (or nearest to) the grid midpoint.
fn monotone_run(grid: &[f64], mean: &[f64]) -> (f64, f64) {
    let n = grid.len();
    if n < 2 {
        return (grid[0], grid[0]);
    }
    let scale = mean.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
    let sign: Vec<i8> = mean
        .windows(2)
        .map(|w| {
            let d = w[1] - w[0];
            if d.abs() <= 1e-13 * scale {
                0
            } else if d > 0.0 {
                1
            } else {
                -1
            }
        })
        .collect();
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut start = None;
    for (i, &s) in sign.iter().enumerate() {
        match start {
            Some(st) if s != 0 && sign[st] == s => {}
            _ => {
                if let Some(st) = start {
                    runs.push((st, i));
                }
                start = if s != 0 { Some(i) } else { None };
            }
        }
    }
    if let Some(st) = start {
        runs.push((st, sign.len()));
    }
    let mid = (n - 1) / 2;
    let best = runs
        .iter()
        .min_by_key(|(a, b)| if mid >= *a && mid <= *b { 0 } else { (*a as i64 - mid as i64).abs().min((*b as i64 - mid as i64).abs()) as usize })
        .copied();
    match best {
        Some((a, b)) => (grid[a], grid[b]),
        None => (grid[mid], grid[mid]),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmeEstimate {
    pub phi: f64,
    pub railed: bool,
}

/// Inverts the response curve at the sample mean of the outcomes.
pub fn sme(outcomes: &[f64], curve: &ResponseCurve) -> Result<SmeEstimate> {
    if outcomes.is_empty() {
        return Err(Error::invalid("no outcomes"));
    }
    let m = outcomes.iter().sum::<f64>() / outcomes.len() as f64;
    sme_from_mean(m, curve)
}

pub fn sme_from_mean(m: f64, curve: &ResponseCurve) -> Result<SmeEstimate> {
    let (ia, ib) = curve.interval_indices();
    let (lo, hi) = (curve.phi_grid[ia], curve.phi_grid[ib]);
    let (ma, mb) = (curve.mean[ia], curve.mean[ib]);
    if ia == ib {
        return Ok(SmeEstimate { phi: lo, railed: true });
    }
    let increasing = mb > ma;
    let (mmin, mmax) = if increasing { (ma, mb) } else { (mb, ma) };
    if m <= mmin {
        return Ok(SmeEstimate { phi: if increasing { lo } else { hi }, railed: true });
    }
    if m >= mmax {
        return Ok(SmeEstimate { phi: if increasing { hi } else { lo }, railed: true });
    }
    // bracket on the grid
    let seg = &curve.mean[ia..=ib];
    let k = if increasing { seg.partition_point(|&x| x < m) } else { seg.partition_point(|&x| x > m) };
    let k = k.clamp(1, seg.len() - 1);
    let (pa, pb) = (curve.phi_grid[ia + k - 1], curve.phi_grid[ia + k]);
    let (va, vb) = (seg[k - 1], seg[k]);
    if curve.model.is_some() {
        let f = |p: f64| curve.exact_mean(p).unwrap_or(f64::NAN) - m;
        if let Ok(root) = crate::optim::bisect(f, pa, pb, 1e-13, 200) {
            return Ok(SmeEstimate { phi: root, railed: false });
        }
    }
    let t = if vb != va { (m - va) / (vb - va) } else { 0.5 };
    Ok(SmeEstimate { phi: pa + t * (pb - pa), railed: false })
}

/// Error propagation r Delta^2 phi = Var(M) / (d<M>/dphi)^2.
pub fn sme_variance(state: &State, basis: &MeasurementBasis, phi: f64) -> Result<f64> {
    let (d, dp) = outcome_distribution_with_derivative(state, basis, phi)?;
    let slope: f64 = d.outcomes.iter().zip(&dp).map(|(o, q)| o * q).sum();
    if slope.abs() < 1e-10 {
        return Err(Error::Divergent(phi));
    }
    Ok(d.variance() / (slope * slope))
}

/// Classical Fisher information of the grouped outcome distribution.
pub fn fisher_information(state: &State, basis: &MeasurementBasis, phi: f64) -> Result<f64> {
    let (d, dp) = outcome_distribution_with_derivative(state, basis, phi)?;
    Ok(fisher_from(&d, &dp))
}

pub(crate) fn fisher_from(d: &OutcomeDistribution, dp: &[f64]) -> f64 {
    d.probs.iter().zip(dp).filter(|(p, _)| **p > FI_CUTOFF).map(|(p, q)| q * q / p).sum()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MleEstimate {
    pub phi: f64,
    pub ambiguous: bool,
}

/// Tabulated log-likelihoods over a search interval.
#[derive(Clone, Debug)]
pub struct LikelihoodTable {
    state: State,
    basis: MeasurementBasis,
    interval: (f64, f64),
    grid: Vec<f64>,
    /// log p(outcome group g | grid point i), stored [i][g]
    logp: Vec<Vec<f64>>,
}

impl LikelihoodTable {
    pub fn new(state: &State, basis: &MeasurementBasis, interval: (f64, f64)) -> Result<Self> {
        let (a, b) = interval;
        if !(b > a) {
            return Err(Error::invalid("empty MLE search interval"));
        }
        let grid: Vec<f64> = (0..MLE_GRID).map(|i| a + (b - a) * i as f64 / (MLE_GRID - 1) as f64).collect();
        let logp = grid
            .iter()
            .map(|&phi| outcome_distribution(state, basis, phi).map(|d| d.probs.iter().map(|&p| safe_ln(p)).collect()))
            .collect::<Result<Vec<Vec<f64>>>>()?;
        Ok(LikelihoodTable { state: state.clone(), basis: basis.clone(), interval, grid, logp })
    }

    pub fn n_groups(&self) -> usize {
        self.basis.groups().len()
    }

    /// Group index of an outcome value.
    pub fn group_of(&self, outcome: f64) -> Result<usize> {
        self.basis
            .groups()
            .iter()
            .position(|(v, _)| (v - outcome).abs() <= crate::measurement::GROUP_TOL)
            .ok_or_else(|| Error::invalid(format!("outcome {outcome} is not produced by this basis")))
    }

    pub fn log_likelihood(&self, counts: &[u32], phi: f64) -> f64 {
        match outcome_distribution(&self.state, &self.basis, phi) {
            Ok(d) => counts.iter().zip(&d.probs).filter(|(c, _)| **c > 0).map(|(&c, &p)| c as f64 * safe_ln(p)).sum(),
            Err(_) => f64::NEG_INFINITY,
        }
    }

    /// Maximum-likelihood estimate from an outcome histogram.
    pub fn estimate(&self, counts: &[u32]) -> MleEstimate {
        let scores: Vec<f64> = self
            .logp
            .iter()
            .map(|row| counts.iter().zip(row).filter(|(c, _)| **c > 0).map(|(&c, &l)| c as f64 * l).sum())
            .collect();
        let best = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let tol = 1e-9 * best.abs().max(1.0);
        let center = 0.5 * (self.interval.0 + self.interval.1);
        let ties: Vec<usize> = (0..scores.len()).filter(|&i| scores[i] >= best - tol).collect();
        let pick = *ties
            .iter()
            .min_by(|&&a, &&b| (self.grid[a] - center).abs().total_cmp(&(self.grid[b] - center).abs()))
            .unwrap();
        // ties separated by more than one grid step indicate distinct maxima
        let ambiguous = ties.iter().any(|&i| (i as i64 - pick as i64).abs() > 1);
        let lo = self.grid[pick.saturating_sub(1)];
        let hi = self.grid[(pick + 1).min(self.grid.len() - 1)];
        let (phi, v) = golden_section_min(|p| -self.log_likelihood(counts, p), lo, hi, 1e-8);
        let phi = if -v >= scores[pick] { phi } else { self.grid[pick] };
        MleEstimate { phi, ambiguous }
    }
}

fn safe_ln(p: f64) -> f64 {
    if p > 1e-300 {
        p.ln()
    } else {
        LOG_FLOOR
    }
}

/// Maximizes the likelihood of the outcomes over the search interval.
pub fn mle(outcomes: &[f64], state: &State, basis: &MeasurementBasis, search_interval: (f64, f64)) -> Result<MleEstimate> {
    let table = LikelihoodTable::new(state, basis, search_interval)?;
    let mut counts = vec![0u32; table.n_groups()];
    for &o in outcomes {
        counts[table.group_of(o)?] += 1;
    }
    Ok(table.estimate(&counts))
}

/// Squeezing parameter of a symmetric state.
pub fn wineland_xi2(state: &DickeVector) -> Result<f64> {
    crate::states::xi2(state)
}

/// Squeezing below the coherent-state value certifies entanglement.
pub fn is_entangled_by_squeezing(xi2: f64) -> bool {
    xi2 < 1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimatorKind {
    Sme,
    Mle,
}

#[derive(Clone, Debug)]
pub struct EstimationExperiment {
    pub state: State,
    pub basis: MeasurementBasis,
    pub estimator: EstimatorKind,
    pub phi_true: Vec<f64>,
    pub r: usize,
    pub trials: usize,
    pub seed: u64,
    /// Unambiguous phase interval used to invert the response and bound the MLE search.
    pub interval: (f64, f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimationStats {
    pub phi_true: f64,
    pub mse: f64,
    pub bias: f64,
    pub variance: f64,
    pub mse_stderr: f64,
    pub railed_fraction: f64,
    pub ambiguous_fraction: f64,
}

impl EstimationStats {
    pub fn from_estimates(phi_true: f64, est: &[f64], railed: usize, ambiguous: usize) -> Self {
        let n = est.len() as f64;
        let mean = est.iter().sum::<f64>() / n;
        let variance = est.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / n;
        let sq: Vec<f64> = est.iter().map(|e| (e - phi_true) * (e - phi_true)).collect();
        let mse = sq.iter().sum::<f64>() / n;
        let sd = if est.len() > 1 {
            (sq.iter().map(|s| (s - mse) * (s - mse)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        EstimationStats {
            phi_true,
            mse,
            bias: mean - phi_true,
            variance,
            mse_stderr: sd / n.sqrt(),
            railed_fraction: railed as f64 / n,
            ambiguous_fraction: ambiguous as f64 / n,
        }
    }
}

/// Points used to tabulate the response curve for the sample-mean estimator.
pub const RESPONSE_GRID: usize = 1025;

/// Monte Carlo over (phi_true, trial) cells, each with its own random stream.
pub fn run_experiment(cfg: &EstimationExperiment) -> Result<Vec<EstimationStats>> {
    if cfg.r == 0 || cfg.trials == 0 {
        return Err(Error::invalid("r and trials must be at least 1"));
    }
    let (a, b) = cfg.interval;
    enum Est {
        Sme(ResponseCurve, Vec<f64>),
        Mle(LikelihoodTable),
    }
    let est = match cfg.estimator {
        EstimatorKind::Sme => {
            let grid: Vec<f64> = (0..RESPONSE_GRID).map(|i| a + (b - a) * i as f64 / (RESPONSE_GRID - 1) as f64).collect();
            let curve = response_curve(&cfg.state, &cfg.basis, &grid)?;
            let values = cfg.basis.groups().iter().map(|g| g.0).collect();
            Est::Sme(curve, values)
        }
        EstimatorKind::Mle => Est::Mle(LikelihoodTable::new(&cfg.state, &cfg.basis, cfg.interval)?),
    };
    let mut out = Vec::with_capacity(cfg.phi_true.len());
    for (ip, &phi) in cfg.phi_true.iter().enumerate() {
        let dist = outcome_distribution(&cfg.state, &cfg.basis, phi)?;
        let cells: Vec<(f64, bool)> = (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = stream(cfg.seed, (ip * cfg.trials + t) as u64);
                let counts = sample_counts(&dist, cfg.r, &mut rng);
                match &est {
                    Est::Sme(curve, values) => {
                        let m = counts.iter().zip(values).map(|(&c, v)| c as f64 * v).sum::<f64>() / cfg.r as f64;
                        let e = sme_from_mean(m, curve).expect("curve has a valid interval");
                        (e.phi, e.railed)
                    }
                    Est::Mle(table) => {
                        let e = table.estimate(&counts);
                        (e.phi, e.ambiguous)
                    }
                }
            })
            .collect();
        let estimates: Vec<f64> = cells.iter().map(|c| c.0).collect();
        let flagged = cells.iter().filter(|c| c.1).count();
        let (railed, ambiguous) = match cfg.estimator {
            EstimatorKind::Sme => (flagged, 0),
            EstimatorKind::Mle => (0, flagged),
        };
        out.push(EstimationStats::from_estimates(phi, &estimates, railed, ambiguous));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::{basis_jy, basis_parity, ParityQuadrature};
    use crate::spin::{collective_op, variance, OpLabel};
    use crate::states::{css_x, ghz, sss_ground, SqueezingParentParams};
    use std::f64::consts::PI;

    fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn css_response_and_sme() {
        let n = 16;
        let s = css_x(n).unwrap().to_state();
        let b = basis_jy(n).unwrap();
        let c = response_curve(&s, &b, &grid(-PI, PI, 801)).unwrap();
        for (p, m) in c.phi_grid.iter().zip(&c.mean) {
            assert!((m - 8.0 * p.sin()).abs() < 1e-10);
        }
        assert!((c.monotone_interval.0 + PI / 2.0).abs() < 1e-2);
        assert!((c.monotone_interval.1 - PI / 2.0).abs() < 1e-2);
        let e = sme_from_mean(4.0, &c).unwrap();
        assert!((e.phi - (0.5f64).asin()).abs() < 1e-9 && !e.railed);
        assert!(sme_from_mean(0.0, &c).unwrap().phi.abs() < 1e-12);
        let top = sme_from_mean(8.0, &c).unwrap();
        assert!(top.railed && (top.phi - PI / 2.0).abs() < 1e-2);
        let one = response_curve(&s, &b, &[0.3]).unwrap();
        assert!(one.var[0] >= 0.0);
    }

    #[test]
    fn ghz_parity_response() {
        let n = 6;
        let c = response_curve(&ghz(n).unwrap().to_state(), &basis_parity(n, ParityQuadrature::X).unwrap(), &grid(0.0, PI / n as f64, 101))
            .unwrap();
        for (p, m) in c.phi_grid.iter().zip(&c.mean) {
            assert!((m - (n as f64 * p).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn error_propagation_limits() {
        let n = 16;
        let css = css_x(n).unwrap().to_state();
        assert!((sme_variance(&css, &basis_jy(n).unwrap(), 0.0).unwrap() - 1.0 / 16.0).abs() < 1e-12);
        let g = ghz(n).unwrap().to_state();
        let v = sme_variance(&g, &basis_parity(n, ParityQuadrature::X).unwrap(), PI / (4.0 * n as f64)).unwrap();
        assert!((v - 1.0 / 256.0).abs() < 1e-12);
        assert!(matches!(sme_variance(&g, &basis_parity(n, ParityQuadrature::X).unwrap(), 0.0), Err(Error::Divergent(_))));
    }

    #[test]
    fn squeezed_error_propagation_formula() {
        let n = 10;
        let s = sss_ground(SqueezingParentParams { n_atoms: n, ratio: 0.3 }).unwrap();
        let [jx, jy] = [OpLabel::Jx, OpLabel::Jy].map(|l| collective_op(n, l).unwrap());
        let vx = variance(&s, &jx).unwrap();
        let vy = variance(&s, &jy).unwrap();
        let mx = crate::spin::expectation(&s, &jx).unwrap();
        for phi in [0.0f64, 0.2, -0.5, 1.0] {
            let want = (phi.cos().powi(2) * vy + phi.sin().powi(2) * vx) / (phi.cos().powi(2) * mx * mx);
            let got = sme_variance(&s.to_state(), &basis_jy(n).unwrap(), phi).unwrap();
            assert!((got - want).abs() < 1e-6 * want, "{phi}: {got} vs {want}");
        }
    }

    #[test]
    fn fisher_information_values() {
        let n = 12;
        let css = css_x(n).unwrap().to_state();
        for phi in [-1.2, 0.0, 0.7] {
            assert!((fisher_information(&css, &basis_jy(n).unwrap(), phi).unwrap() - n as f64).abs() < 1e-8);
        }
        let g = ghz(n).unwrap().to_state();
        for phi in [0.03, 0.1, -0.2] {
            let f = fisher_information(&g, &basis_parity(n, ParityQuadrature::X).unwrap(), phi).unwrap();
            assert!((f - (n * n) as f64).abs() < 1e-8);
        }
        let eig = basis_jy(n).unwrap().vector(3).to_state();
        assert!(fisher_information(&eig, &basis_jy(n).unwrap(), 0.0).unwrap() < 1e-10);
    }

    #[test]
    fn fisher_grouping_invariant() {
        // same vectors, outcomes of equal magnitude merged
        let n = 5;
        let b = basis_jy(n).unwrap();
        let merged = b.relabel(b.outcomes().iter().map(|x| x.abs()).collect()).unwrap();
        let s = css_x(n).unwrap().to_state();
        let f1 = fisher_information(&s, &b, 0.4).unwrap();
        let f2 = fisher_information(&s, &merged, 0.4).unwrap();
        assert!(f2 <= f1 + 1e-8);
        let parity = basis_parity(n, ParityQuadrature::X).unwrap();
        let f3 = fisher_information(&s, &parity, 0.4).unwrap();
        let f4 = fisher_information(&s, &parity.relabel(parity.outcomes().to_vec()).unwrap(), 0.4).unwrap();
        assert!((f3 - f4).abs() < 1e-8);
    }

    #[test]
    fn mle_binomial_example() {
        let s = css_x(1).unwrap().to_state();
        let b = basis_jy(1).unwrap();
        let mut outcomes = vec![0.5; 7];
        outcomes.extend(vec![-0.5; 3]);
        let e = mle(&outcomes, &s, &b, (-PI / 2.0, PI / 2.0)).unwrap();
        assert!((e.phi - (0.4f64).asin()).abs() < 1e-7, "{}", e.phi);
        assert!(!e.ambiguous);
    }

    #[test]
    fn mle_point_mass() {
        let n = 4;
        let s = css_x(n).unwrap().to_state();
        let b = basis_jy(n).unwrap();
        let e = mle(&vec![2.0; 20], &s, &b, (-PI / 2.0, PI / 2.0)).unwrap();
        assert!((e.phi - PI / 2.0).abs() < PI / MLE_GRID as f64 * 2.0);
    }

    #[test]
    fn mse_decomposition_and_crb() {
        let n = 8;
        let cfg = EstimationExperiment {
            state: css_x(n).unwrap().to_state(),
            basis: basis_jy(n).unwrap(),
            estimator: EstimatorKind::Mle,
            phi_true: vec![-0.6, 0.0, 0.4],
            r: 50,
            trials: 400,
            seed: 3,
            interval: (-PI / 2.0, PI / 2.0),
        };
        for st in run_experiment(&cfg).unwrap() {
            assert!((st.mse - (st.bias * st.bias + st.variance)).abs() < 1e-10 * st.mse.max(1e-300) + 1e-16);
            if st.bias.abs() < 0.1 * st.variance.sqrt() {
                assert!(cfg.r as f64 * st.mse >= 0.9 / n as f64);
            }
        }
        let again = run_experiment(&cfg).unwrap();
        assert_eq!(again, run_experiment(&cfg).unwrap());
    }

    #[test]
    fn single_shot_near_edge_beats_crb() {
        let n = 16;
        let cfg = EstimationExperiment {
            state: css_x(n).unwrap().to_state(),
            basis: basis_jy(n).unwrap(),
            estimator: EstimatorKind::Sme,
            phi_true: vec![PI / 2.0 - 0.02],
            r: 1,
            trials: 2000,
            seed: 1,
            interval: (-PI / 2.0, PI / 2.0),
        };
        let st = run_experiment(&cfg).unwrap()[0];
        assert!(st.mse < 1.0 / n as f64);
    }

    #[test]
    fn mle_is_asymptotically_normal() {
        let n = 4;
        let r = 1000;
        let phi = 0.3;
        let cfg = EstimationExperiment {
            state: css_x(n).unwrap().to_state(),
            basis: basis_jy(n).unwrap(),
            estimator: EstimatorKind::Mle,
            phi_true: vec![phi],
            r,
            trials: 2000,
            seed: 17,
            interval: (-PI / 2.0, PI / 2.0),
        };
        // regenerate the estimates to measure the Kolmogorov distance
        let table = LikelihoodTable::new(&cfg.state, &cfg.basis, cfg.interval).unwrap();
        let dist = outcome_distribution(&cfg.state, &cfg.basis, phi).unwrap();
        let mut est: Vec<f64> = (0..cfg.trials)
            .map(|t| {
                let mut rng = stream(cfg.seed, t as u64);
                table.estimate(&sample_counts(&dist, r, &mut rng)).phi
            })
            .collect();
        est.sort_by(f64::total_cmp);
        let sd = (1.0 / (r as f64 * n as f64)).sqrt();
        let mut ks = 0.0f64;
        for (i, e) in est.iter().enumerate() {
            let cdf = 0.5 * (1.0 + libm::erf((e - phi) / (sd * 2f64.sqrt())));
            let lo = i as f64 / est.len() as f64;
            let hi = (i + 1) as f64 / est.len() as f64;
            ks = ks.max((cdf - lo).abs()).max((cdf - hi).abs());
        }
        assert!(ks <= 0.05, "Kolmogorov distance {ks}");
        let _ = run_experiment(&cfg).unwrap();
    }

    #[test]
    fn squeezing_flags_entanglement() {
        let s = sss_ground(SqueezingParentParams { n_atoms: 8, ratio: 0.5 }).unwrap();
        let x = wineland_xi2(&s).unwrap();
        assert!(x < 1.0 && is_entangled_by_squeezing(x));
        assert!((wineland_xi2(&css_x(8).unwrap()).unwrap() - 1.0).abs() < 1e-12);
    }
}
