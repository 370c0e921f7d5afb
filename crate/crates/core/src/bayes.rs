//! Bayesian phase estimation: priors, posteriors, posterior variance, the
//! optimal measurement and state, the alternating interferometer optimization,
//! dynamic-range sweeps and variational decoders.

use std::f64::consts::PI;

use gauss_quad::legendre::GaussLegendre;
use rand::Rng;
use rayon::prelude::*;

use crate::bounds::eigenbasis_jz_resolved;
use crate::error::{Error, Result};
use crate::linalg::{eigh, spectral_map, trace_product, CMatrix, CVector, C64, ZERO};
use crate::measurement::{basis_phase_op, basis_jy, outcome_distribution, BasisLabel, MeasurementBasis, GROUP_TOL};
use crate::optim::nelder_mead;
use crate::spin::{DickeVector, Space, State};
use crate::states::{css_x, ghz_balanced, sine_state};

pub const QUAD_NODES: usize = 513;
/// Gaussian priors are truncated at mean +- this many standard deviations.
pub const GAUSS_SUPPORT: f64 = 8.0;
const SUPPORT_CUTOFF: f64 = 1e-12;
const EVIDENCE_FLOOR: f64 = 1e-300;

#[derive(Clone, Debug, PartialEq)]
pub enum PriorKind {
    Gaussian { mean: f64, delta2: f64 },
    Flat { lo: f64, hi: f64 },
    /// Piecewise-linear density through the given points.
    Tabulated { phi: Vec<f64>, density: Vec<f64> },
}

/// Prior density together with a quadrature rule over its support.
#[derive(Clone, Debug)]
pub struct PriorDensity {
    kind: PriorKind,
    nodes: Vec<f64>,
    /// Quadrature weight times density, normalized to 1.
    weights: Vec<f64>,
}

impl PriorDensity {
    pub fn gaussian(mean: f64, delta: f64) -> Result<Self> {
        Self::gaussian_with_nodes(mean, delta, QUAD_NODES)
    }

    pub fn gaussian_with_nodes(mean: f64, delta: f64, nodes: usize) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() || !mean.is_finite() {
            return Err(Error::invalid(format!("gaussian prior needs finite mean and delta > 0, got delta = {delta}")));
        }
        let kind = PriorKind::Gaussian { mean, delta2: delta * delta };
        Self::build(kind, (mean - GAUSS_SUPPORT * delta, mean + GAUSS_SUPPORT * delta), nodes)
    }

    pub fn flat(lo: f64, hi: f64) -> Result<Self> {
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::invalid("flat prior needs lo < hi"));
        }
        Self::build(PriorKind::Flat { lo, hi }, (lo, hi), QUAD_NODES)
    }

    pub fn tabulated(phi: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        if phi.len() < 2 || phi.len() != density.len() || phi.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("tabulated prior needs >= 2 ascending points"));
        }
        if density.iter().any(|&p| p < 0.0 || !p.is_finite()) {
            return Err(Error::invalid("tabulated density must be non-negative"));
        }
        let support = (phi[0], *phi.last().unwrap());
        Self::build(PriorKind::Tabulated { phi, density }, support, QUAD_NODES)
    }

    /// The same prior on a quadrature rule with a different node count.
    pub fn with_nodes(&self, nodes: usize) -> Result<Self> {
        Self::build(self.kind.clone(), self.support(), nodes)
    }

    /// Prior of g*phi for phi drawn from this prior, g > 0.
    pub fn scaled(&self, g: f64) -> Result<Self> {
        if !(g > 0.0) || !g.is_finite() {
            return Err(Error::invalid(format!("phase gain must be positive, got {g}")));
        }
        let kind = match &self.kind {
            PriorKind::Gaussian { mean, delta2 } => PriorKind::Gaussian { mean: g * mean, delta2: g * g * delta2 },
            PriorKind::Flat { lo, hi } => PriorKind::Flat { lo: g * lo, hi: g * hi },
            PriorKind::Tabulated { phi, density } => PriorKind::Tabulated {
                phi: phi.iter().map(|x| g * x).collect(),
                density: density.iter().map(|p| p / g).collect(),
            },
        };
        let (a, b) = self.support();
        Self::build(kind, (g * a, g * b), self.nodes.len())
    }

    fn build(kind: PriorKind, (a, b): (f64, f64), n: usize) -> Result<Self> {
        let n = std::num::NonZeroUsize::new(n).ok_or_else(|| Error::invalid("need at least one node"))?;
        let rule = GaussLegendre::new(n);
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        let mut nodes = Vec::with_capacity(n.get());
        let mut weights = Vec::with_capacity(n.get());
        for &(x, w) in rule.as_node_weight_pairs() {
            let phi = mid + half * x;
            nodes.push(phi);
            weights.push(w * half * density_at(&kind, phi));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::invalid("prior has zero mass"));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(PriorDensity { kind, nodes, weights })
    }

    pub fn kind(&self) -> &PriorKind {
        &self.kind
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn support(&self) -> (f64, f64) {
        match &self.kind {
            PriorKind::Gaussian { mean, delta2 } => {
                let d = delta2.sqrt();
                (mean - GAUSS_SUPPORT * d, mean + GAUSS_SUPPORT * d)
            }
            PriorKind::Flat { lo, hi } => (*lo, *hi),
            PriorKind::Tabulated { phi, .. } => (phi[0], *phi.last().unwrap()),
        }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    pub fn mean(&self) -> f64 {
        match self.kind {
            PriorKind::Gaussian { mean, .. } => mean,
            _ => self.integrate(|x| x),
        }
    }

    pub fn second_moment(&self) -> f64 {
        match self.kind {
            PriorKind::Gaussian { mean, delta2 } => mean * mean + delta2,
            _ => self.integrate(|x| x * x),
        }
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.second_moment() - m * m
    }

    /// Fisher information of the prior density.
    pub fn information(&self) -> f64 {
        match &self.kind {
            PriorKind::Gaussian { delta2, .. } => 1.0 / delta2,
            PriorKind::Flat { .. } => 0.0,
            PriorKind::Tabulated { phi, density } => {
                let norm = trapezoid(phi, density);
                let mut acc = 0.0;
                for i in 0..phi.len() - 1 {
                    let h = phi[i + 1] - phi[i];
                    let p = 0.5 * (density[i] + density[i + 1]) / norm;
                    let dp = (density[i + 1] - density[i]) / norm / h;
                    if p > 0.0 {
                        acc += dp * dp / p * h;
                    }
                }
                acc
            }
        }
    }

    /// (c0, c1, c2)(m) = integral of phi^k exp(-i phi m) p(phi).
    pub fn characteristic(&self, m: f64) -> [C64; 3] {
        match self.kind {
            PriorKind::Gaussian { mean, delta2 } => {
                let c0 = C64::from_polar((-0.5 * delta2 * m * m).exp(), -mean * m);
                let a = C64::new(mean, -delta2 * m);
                [c0, a * c0, (a * a + delta2) * c0]
            }
            _ => self.characteristic_quadrature(m),
        }
    }

    pub fn characteristic_quadrature(&self, m: f64) -> [C64; 3] {
        let mut c = [ZERO; 3];
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            let e = C64::from_polar(w, -x * m);
            c[0] += e;
            c[1] += e * x;
            c[2] += e * x * x;
        }
        c
    }
}

fn density_at(kind: &PriorKind, phi: f64) -> f64 {
    match kind {
        PriorKind::Gaussian { mean, delta2 } => (-(phi - mean).powi(2) / (2.0 * delta2)).exp(),
        PriorKind::Flat { lo, hi } => {
            if phi >= *lo && phi <= *hi {
                1.0
            } else {
                0.0
            }
        }
        PriorKind::Tabulated { phi: xs, density } => {
            if phi < xs[0] || phi > *xs.last().unwrap() {
                return 0.0;
            }
            let k = xs.partition_point(|&x| x <= phi).clamp(1, xs.len() - 1);
            let t = (phi - xs[k - 1]) / (xs[k] - xs[k - 1]);
            density[k - 1] + t * (density[k] - density[k - 1])
        }
    }
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2).zip(y.windows(2)).map(|(a, b)| 0.5 * (a[1] - a[0]) * (b[0] + b[1])).sum()
}

/// Posterior weights on the prior's quadrature nodes.
#[derive(Clone, Debug)]
pub struct Posterior {
    pub nodes: Vec<f64>,
    /// Quadrature weight times posterior density; sums to 1.
    pub weights: Vec<f64>,
    pub evidence: f64,
}

impl Posterior {
    pub fn from_prior(prior: &PriorDensity) -> Self {
        Posterior { nodes: prior.nodes.clone(), weights: prior.weights.clone(), evidence: 1.0 }
    }

    /// Multiplies in a likelihood evaluated on the nodes.
    pub fn update_with_likelihood(&self, likelihood: &[f64]) -> Result<Posterior> {
        if likelihood.len() != self.nodes.len() {
            return Err(Error::DimensionMismatch { expected: self.nodes.len(), got: likelihood.len() });
        }
        let mut w: Vec<f64> = self.weights.iter().zip(likelihood).map(|(a, b)| a * b).collect();
        let evidence: f64 = w.iter().sum();
        if !(evidence > EVIDENCE_FLOOR) {
            return Err(Error::ImpossibleOutcome);
        }
        w.iter_mut().for_each(|x| *x /= evidence);
        Ok(Posterior { nodes: self.nodes.clone(), weights: w, evidence: self.evidence * evidence })
    }

    pub fn update(&self, outcome: f64, design: &SensorDesign) -> Result<Posterior> {
        self.update_with_likelihood(&likelihood_on(&self.nodes, outcome, design, 1.0)?)
    }

    pub fn mean(&self) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| x * w).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.nodes.iter().zip(&self.weights).map(|(x, w)| (x - m) * (x - m) * w).sum::<f64>().max(0.0)
    }
}

/// p(outcome | gain * phi) on each node.
pub fn likelihood_on(nodes: &[f64], outcome: f64, design: &SensorDesign, gain: f64) -> Result<Vec<f64>> {
    let g = design
        .basis
        .groups()
        .iter()
        .position(|(v, _)| (v - outcome).abs() <= GROUP_TOL)
        .ok_or_else(|| Error::invalid(format!("outcome {outcome} is not produced by this basis")))?;
    nodes
        .iter()
        .map(|&phi| outcome_distribution(&design.state, &design.basis, gain * phi).map(|d| d.probs[g]))
        .collect()
}

/// A probe state together with its readout.
#[derive(Clone, Debug)]
pub struct SensorDesign {
    pub state: State,
    pub basis: MeasurementBasis,
}

impl SensorDesign {
    pub fn new(state: State, basis: MeasurementBasis) -> Result<Self> {
        if state.space() != basis.space() {
            return Err(Error::DimensionMismatch { expected: basis.space().dim(), got: state.dim() });
        }
        Ok(SensorDesign { state, basis })
    }
}

pub fn posterior_update(prior: &PriorDensity, outcome: f64, design: &SensorDesign) -> Result<Posterior> {
    Posterior::from_prior(prior).update(outcome, design)
}

pub fn mmse_estimator(posterior: &Posterior) -> f64 {
    posterior.mean()
}

/// Elementwise weights W_ab = c_k(m_a - m_b) for k = 0, 1, 2.
fn characteristic_weights(space: &Space, prior: &PriorDensity) -> [CMatrix; 3] {
    let m = space.m_values();
    let d = m.len();
    let n = space.n_atoms() as i64;
    let table: Vec<[C64; 3]> = (-n..=n).map(|k| prior.characteristic(k as f64)).collect();
    let mut out = [CMatrix::zeros(d, d), CMatrix::zeros(d, d), CMatrix::zeros(d, d)];
    for a in 0..d {
        for b in 0..d {
            let k = ((m[a] - m[b]).round() as i64 + n) as usize;
            for (j, w) in out.iter_mut().enumerate() {
                w[(a, b)] = table[k][j];
            }
        }
    }
    out
}

/// (rho_bar, rho_prime): the prior-averaged encoded density and its first moment.
pub fn averaged_density_pair(state: &State, prior: &PriorDensity) -> (CMatrix, CMatrix) {
    let rho = state.density();
    let [c0, c1, _] = characteristic_weights(state.space(), prior);
    (rho.component_mul(&c0), rho.component_mul(&c1))
}

/// The same pair by direct quadrature over the prior nodes.
pub fn averaged_density_pair_quadrature(state: &State, prior: &PriorDensity) -> (CMatrix, CMatrix) {
    let d = state.dim();
    let mut bar = CMatrix::zeros(d, d);
    let mut prime = CMatrix::zeros(d, d);
    for (&phi, &w) in prior.nodes.iter().zip(&prior.weights) {
        let r = state.encode(phi).density();
        bar += r.scale(w);
        prime += r.scale(w * phi);
    }
    (bar, prime)
}

/// Per outcome group: (integral of p(mu|phi) p(phi), integral of phi p(mu|phi) p(phi)).
pub fn group_moments(design: &SensorDesign, prior: &PriorDensity) -> Vec<(f64, f64)> {
    let (bar, prime) = averaged_density_pair(&design.state, prior);
    let v = design.basis.vectors();
    let a0 = v.adjoint() * &bar * v;
    let a1 = v.adjoint() * &prime * v;
    design
        .basis
        .groups()
        .iter()
        .map(|(_, members)| {
            let s0: f64 = members.iter().map(|&k| a0[(k, k)].re).sum();
            let s1: f64 = members.iter().map(|&k| a1[(k, k)].re).sum();
            (s0, s1)
        })
        .collect()
}

/// Expected posterior variance, sum over outcomes of p(mu) Var(phi | mu).
pub fn posterior_variance(design: &SensorDesign, prior: &PriorDensity) -> f64 {
    let explained: f64 = group_moments(design, prior)
        .iter()
        .filter(|(a0, _)| *a0 > EVIDENCE_FLOOR)
        .map(|(a0, a1)| a1 * a1 / a0)
        .sum();
    (prior.second_moment() - explained).max(0.0)
}

/// Posterior variance with every integral taken on the quadrature nodes.
pub fn posterior_variance_quadrature(design: &SensorDesign, prior: &PriorDensity) -> Result<f64> {
    let g = design.basis.groups().len();
    let mut a0 = vec![0.0; g];
    let mut a1 = vec![0.0; g];
    let mut second = 0.0;
    for (&phi, &w) in prior.nodes.iter().zip(&prior.weights) {
        let d = outcome_distribution(&design.state, &design.basis, phi)?;
        for (k, p) in d.probs.iter().enumerate() {
            a0[k] += w * p;
            a1[k] += w * phi * p;
        }
        second += w * phi * phi;
    }
    let explained: f64 = a0.iter().zip(&a1).filter(|(x, _)| **x > EVIDENCE_FLOOR).map(|(x, y)| y * y / x).sum();
    Ok((second - explained).max(0.0))
}

/// 1/Delta^2 = 1/Delta^2_post - I; infinite when the measurement adds nothing.
pub fn estimator_variance_from_posterior(post: f64, prior_information: f64) -> f64 {
    let inv = 1.0 / post - prior_information;
    if inv > 0.0 && post > 0.0 {
        1.0 / inv
    } else {
        f64::INFINITY
    }
}

pub fn avg_estimator_variance(design: &SensorDesign, prior: &PriorDensity) -> f64 {
    estimator_variance_from_posterior(posterior_variance(design, prior), prior.information())
}

/// Basis relabelled with the posterior-mean estimate for each outcome.
pub fn bayes_labels(design: &SensorDesign, prior: &PriorDensity) -> Result<MeasurementBasis> {
    let moments = group_moments(design, prior);
    let mean = prior.mean();
    let mut outcomes = vec![0.0; design.basis.outcomes().len()];
    for ((_, members), (a0, a1)) in design.basis.groups().iter().zip(&moments) {
        let est = if *a0 > EVIDENCE_FLOOR { a1 / a0 } else { mean };
        for &k in members {
            outcomes[k] = est;
        }
    }
    design.basis.relabel(outcomes)
}

/// Prior-averaged classical Fisher information.
pub fn averaged_fisher(design: &SensorDesign, prior: &PriorDensity) -> Result<f64> {
    let mut acc = 0.0;
    for (&phi, &w) in prior.nodes.iter().zip(&prior.weights) {
        acc += w * crate::frequentist::fisher_information(&design.state, &design.basis, phi)?;
    }
    Ok(acc)
}

/// Bayesian Cramer-Rao bound 1/(F_bar + I).
pub fn bayes_crb(design: &SensorDesign, prior: &PriorDensity) -> Result<f64> {
    Ok(1.0 / (averaged_fisher(design, prior)? + prior.information()))
}

/// Optimal measurement operator for a state, returned as its eigenbasis with
/// eigenvalue outcomes, together with the minimal posterior variance.
pub fn optimal_measurement(state: &State, prior: &PriorDensity) -> Result<(MeasurementBasis, f64)> {
    let (op, bound) = personick_operator(state, prior)?;
    let (values, vectors) = eigenbasis_jz_resolved(&op, state.space())?;
    let mean = prior.mean();
    let outcomes = values.iter().map(|v| v + mean).collect();
    let basis = MeasurementBasis::from_columns(state.space().clone(), vectors, outcomes, BasisLabel::Optimal)?;
    Ok((basis, bound))
}

/// Minimal posterior variance over all measurements for a given state.
pub fn personick_bound(state: &State, prior: &PriorDensity) -> Result<f64> {
    Ok(personick_operator(state, prior)?.1)
}

/// Centred solution of M rho_bar + rho_bar M = 2 rho_prime and the bound it attains.
fn personick_operator(state: &State, prior: &PriorDensity) -> Result<(CMatrix, f64)> {
    let (bar, prime) = averaged_density_pair(state, prior);
    personick_from_pair(&bar, &prime, prior)
}

/// Personick operator and bound from an averaged pair (rho_bar, rho_prime).
pub(crate) fn personick_from_pair(bar: &CMatrix, prime: &CMatrix, prior: &PriorDensity) -> Result<(CMatrix, f64)> {
    let centred = prime - bar.scale(prior.mean());
    let e = eigh(bar)?;
    if e.values.iter().all(|&p| p <= SUPPORT_CUTOFF) {
        return Err(Error::invalid("averaged density has no support"));
    }
    let r = e.vectors.adjoint() * &centred * &e.vectors;
    let d = e.values.len();
    let mut mk = CMatrix::zeros(d, d);
    for k in 0..d {
        for l in 0..d {
            let s = e.values[k] + e.values[l];
            if s > SUPPORT_CUTOFF {
                mk[(k, l)] = r[(k, l)] * (2.0 / s);
            }
        }
    }
    let op = crate::linalg::symmetrize(&(&e.vectors * mk * e.vectors.adjoint()));
    let bound = prior.variance() - trace_product(bar, &(&op * &op)).re;
    Ok((op, bound.max(0.0)))
}

/// The Hermitian matrix whose lowest eigenvector is the optimal probe for a basis
/// whose outcomes are used directly as the estimates.
pub fn optimal_state_matrix(basis: &MeasurementBasis, prior: &PriorDensity) -> CMatrix {
    let v = basis.vectors();
    let mu = basis.outcomes();
    let scaled = |f: &dyn Fn(f64) -> f64| {
        let mut s = v.clone();
        for (k, mut c) in s.column_iter_mut().enumerate() {
            let w = f(mu[k]);
            c.iter_mut().for_each(|z| *z *= w);
        }
        s * v.adjoint()
    };
    let m1 = scaled(&|x| x);
    let m2 = scaled(&|x| x * x);
    let [c0, c1, _] = characteristic_weights(basis.space(), prior);
    // the phase difference enters as m_b - m_a, i.e. the transposed weights
    let a = m2.component_mul(&c0.transpose()) - m1.component_mul(&c1.transpose()).scale(2.0);
    crate::linalg::symmetrize(&a)
}

/// Lowest-cost probe for a fixed basis and its cost (expected squared error
/// with the basis outcomes as estimates).
pub fn optimal_state_with_cost(basis: &MeasurementBasis, prior: &PriorDensity) -> Result<(DickeVector, f64)> {
    if !basis.space().is_symmetric() {
        return Err(Error::invalid("optimal probe search requires the symmetric subspace"));
    }
    let n = basis.n_atoms();
    let a = optimal_state_matrix(basis, prior);
    let e = eigh(&a)?;
    let scale = e.values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let deg = e.values.iter().take_while(|&&x| x - e.values[0] <= 1e-10 * scale).count();
    let reference = css_x(n)?;
    let block = e.vectors.columns(0, deg);
    let coeffs = block.adjoint() * reference.amps();
    let mut psi = if coeffs.norm() > 1e-8 { block * coeffs } else { e.vectors.column(0).clone_owned() };
    let ov = reference.amps().dotc(&psi);
    if ov.norm() > 1e-12 {
        psi *= ov.conj() / ov.norm();
    }
    let psi = DickeVector::normalized(n, psi)?;
    let cost = prior.second_moment() + psi.amps().dotc(&(&a * psi.amps())).re;
    Ok((psi, cost))
}

pub fn optimal_state(basis: &MeasurementBasis, prior: &PriorDensity) -> Result<DickeVector> {
    Ok(optimal_state_with_cost(basis, prior)?.0)
}

#[derive(Clone, Debug)]
pub struct OqiResult {
    pub design: SensorDesign,
    pub posterior_variance: f64,
    pub avg_estimator_variance: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Cost after each half-step, starting with the initial design.
    pub history: Vec<f64>,
}

pub const OQI_TOL: f64 = 1e-10;
pub const OQI_MAX_ITER: usize = 200;

/// Alternates optimal measurement and optimal probe until the posterior
/// variance improves by less than `tol` in one iteration.
pub fn oqi_solve(prior: &PriorDensity, init: &SensorDesign, tol: f64, max_iter: usize) -> Result<OqiResult> {
    let n = init.state.n_atoms();
    let space = Space::symmetric(n);
    let mut state = init.state.clone();
    let mut cost = posterior_variance(init, prior);
    let mut history = vec![cost];
    let mut converged = false;
    let mut iterations = 0;
    let weights = characteristic_weights(&space, prior);
    let slack = |c: f64| 1e-12 * c.abs().max(1.0);
    for it in 1..=max_iter {
        iterations = it;
        let (basis, j1) = optimal_measurement(&state, prior)?;
        if j1 > cost + slack(cost) {
            return Err(Error::NonMonotone(j1 - cost));
        }
        history.push(j1);
        let (psi, j2) = optimal_state_with_cost(&basis, prior)?;
        if j2 > j1 + slack(j1) {
            return Err(Error::NonMonotone(j2 - j1));
        }
        history.push(j2);
        let mut next = psi.into_amps();
        let mut j = j2;
        // quasi-exact Newton candidate, kept only when it lowers the bound further
        if let Some((cand, jn)) = newton_candidate(&next, j, &space, &weights, prior) {
            next = cand;
            j = jn;
            history.push(j);
        }
        state = State::pure(space.clone(), next)?;
        let gain = cost - j;
        cost = j.min(cost);
        if gain < tol {
            converged = true;
            break;
        }
    }
    let (basis, _) = optimal_measurement(&state, prior)?;
    let design = SensorDesign::new(state, basis)?;
    let post = posterior_variance(&design, prior);
    Ok(OqiResult {
        posterior_variance: post,
        avg_estimator_variance: estimator_variance_from_posterior(post, prior.information()),
        design,
        iterations,
        converged,
        history,
    })
}

/// Personick bound of the normalized probe u/|u| and its gradient with respect to u*.
fn probe_cost_grad(u: &CVector, space: &Space, weights: &[CMatrix; 3], prior: &PriorDensity) -> Result<(f64, CVector)> {
    let norm = u.norm();
    let psi = u.unscale(norm);
    let (op, bound) = personick_operator(&State::pure(space.clone(), psi.clone())?, prior)?;
    let d = psi.len();
    let m = op + CMatrix::identity(d, d).scale(prior.mean());
    let [c0, c1, _] = weights;
    let a = (&m * &m).component_mul(&c0.transpose()) - m.component_mul(&c1.transpose()).scale(2.0);
    let ap = &a * &psi;
    let j = psi.dotc(&ap);
    Ok((bound, (ap - psi.scale(1.0) * j).unscale(norm)))
}

/// Saddle-free Newton step on the probe sphere, with a finite-difference Hessian
/// and backtracking. Returns the improved probe and its bound, if any.
fn newton_candidate(psi0: &CVector, f0: f64, space: &Space, weights: &[CMatrix; 3], prior: &PriorDensity) -> Option<(CVector, f64)> {
    let d = psi0.len();
    let mut aug = CMatrix::identity(d, d).insert_column(0, ZERO);
    aug.set_column(0, psi0);
    let q = aug.qr().q();
    let mut dirs = Vec::with_capacity(2 * (d - 1));
    for k in 1..d {
        let c: CVector = q.column(k).into_owned();
        dirs.push(c.clone());
        dirs.push(c * C64::new(0.0, 1.0));
    }
    let nd = dirs.len();
    let at = |x: &nalgebra::DVector<f64>| -> CVector {
        let mut u = psi0.clone();
        for (t, &xi) in dirs.iter().zip(x.iter()) {
            u += t.scale(xi);
        }
        u
    };
    let grad = |x: &nalgebra::DVector<f64>| -> Option<nalgebra::DVector<f64>> {
        let (_, gc) = probe_cost_grad(&at(x), space, weights, prior).ok()?;
        Some(nalgebra::DVector::from_iterator(nd, dirs.iter().map(|t| 2.0 * t.dotc(&gc).re)))
    };
    let zero = nalgebra::DVector::<f64>::zeros(nd);
    let g = grad(&zero)?;
    let h = 1e-5;
    let mut hess = nalgebra::DMatrix::<f64>::zeros(nd, nd);
    for j in 0..nd {
        let mut e = zero.clone();
        e[j] = h;
        let gp = grad(&e)?;
        e[j] = -h;
        let gm = grad(&e)?;
        hess.set_column(j, &((gp - gm) / (2.0 * h)));
    }
    let hess = (&hess + hess.transpose()) * 0.5;
    let eig = hess.symmetric_eigen();
    let scale = eig.eigenvalues.amax().max(1e-300);
    let mut step = nalgebra::DVector::<f64>::zeros(nd);
    for k in 0..nd {
        let v = eig.eigenvectors.column(k);
        let lam = eig.eigenvalues[k].abs().max(1e-8 * scale);
        step -= v * (v.dot(&g) / lam);
    }
    if step.iter().any(|x| !x.is_finite()) {
        return None;
    }
    let mut alpha = 1.0;
    for _ in 0..30 {
        let u = at(&(&step * alpha));
        let psi = u.unscale(u.norm());
        if let Ok(f) = personick_bound(&State::pure(space.clone(), psi.clone()).ok()?, prior) {
            if f < f0 && personick_operator(&State::pure(space.clone(), psi.clone()).ok()?, prior).is_ok_and(|(op, _)| op.iter().all(|z| z.re.is_finite() && z.im.is_finite())) {
                return Some((psi, f));
            }
        }
        alpha *= 0.5;
    }
    None
}

/// Default starting probes: x-CSS, balanced GHZ and the sine state.
pub fn oqi_default_inits(n: usize) -> Result<Vec<SensorDesign>> {
    Ok(vec![
        SensorDesign::new(css_x(n)?.to_state(), basis_jy(n)?)?,
        SensorDesign::new(ghz_balanced(n)?.to_state(), crate::measurement::basis_parity(n, crate::measurement::ParityQuadrature::X)?)?,
        SensorDesign::new(sine_state(n)?.to_state(), basis_phase_op(n)?)?,
    ])
}

/// Runs the alternating solver from every start and keeps the lowest posterior variance.
pub fn oqi_best(prior: &PriorDensity, inits: &[SensorDesign], tol: f64, max_iter: usize) -> Result<OqiResult> {
    let mut best: Option<OqiResult> = None;
    for init in inits {
        let r = oqi_solve(prior, init, tol, max_iter)?;
        if best.as_ref().is_none_or(|b| r.posterior_variance < b.posterior_variance) {
            best = Some(r);
        }
    }
    best.ok_or_else(|| Error::invalid("no starting designs"))
}

/// (2 n pi)^2 times the prior mass outside [-n pi, n pi] for a zero-mean gaussian.
pub fn coherence_time_limit(n: u32, delta2: f64) -> f64 {
    let a = 2.0 * n as f64 * PI;
    a * a * (1.0 - libm::erf(n as f64 * PI / (2.0 * delta2).sqrt()))
}

/// Phase-slip contribution 4 pi^2 (1 - erf(pi / (sqrt 2 delta))).
pub fn phase_slip_estimate(delta2: f64) -> f64 {
    coherence_time_limit(1, delta2)
}

#[derive(Clone, Debug)]
pub struct DynamicRangeTable {
    pub delta2: Vec<f64>,
    /// (design name, Delta^2 per prior variance)
    pub series: Vec<(String, Vec<f64>)>,
    pub oqi: Option<Vec<f64>>,
    pub oqi_iterations: Option<Vec<usize>>,
    pub ctl: Vec<f64>,
}

/// Average estimator variance of each design over a grid of zero-mean gaussian prior variances.
pub fn dynamic_range_sweep(designs: &[(String, SensorDesign)], delta2_grid: &[f64], with_oqi: bool) -> Result<DynamicRangeTable> {
    let priors: Vec<PriorDensity> = delta2_grid.iter().map(|&d2| PriorDensity::gaussian(0.0, d2.sqrt())).collect::<Result<_>>()?;
    let cells: Vec<f64> = (0..designs.len() * priors.len())
        .into_par_iter()
        .map(|c| avg_estimator_variance(&designs[c / priors.len()].1, &priors[c % priors.len()]))
        .collect();
    let series = designs
        .iter()
        .enumerate()
        .map(|(i, (name, _))| (name.clone(), cells[i * priors.len()..(i + 1) * priors.len()].to_vec()))
        .collect();
    let (oqi, oqi_iterations) = if with_oqi {
        let n = designs.first().map(|d| d.1.state.n_atoms()).ok_or_else(|| Error::invalid("no designs"))?;
        let mut inits = oqi_default_inits(n)?;
        inits.extend(designs.iter().filter(|d| d.1.state.space().is_symmetric()).map(|d| d.1.clone()));
        let res: Vec<OqiResult> =
            priors.par_iter().map(|p| oqi_best(p, &inits, OQI_TOL, OQI_MAX_ITER)).collect::<Result<_>>()?;
        (Some(res.iter().map(|r| r.avg_estimator_variance).collect()), Some(res.iter().map(|r| r.iterations).collect()))
    } else {
        (None, None)
    };
    Ok(DynamicRangeTable {
        delta2: delta2_grid.to_vec(),
        series,
        oqi,
        oqi_iterations,
        ctl: delta2_grid.iter().map(|&d2| coherence_time_limit(1, d2)).collect(),
    })
}

/// exp(-i theta G) through a cached eigen-decomposition of G.
struct Generator {
    eig: crate::linalg::Eigh,
}

impl Generator {
    fn exp(&self, theta: f64) -> CMatrix {
        spectral_map(&self.eig, |l| C64::from_polar(1.0, -theta * l))
    }
}

/// U_de(theta) = product over layers and generators of exp(-i theta G).
pub fn decoder_unitary(generators: &[CMatrix], params: &[f64]) -> Result<CMatrix> {
    let gens = generators.iter().map(|g| eigh(g).map(|eig| Generator { eig })).collect::<Result<Vec<_>>>()?;
    Ok(build_decoder(&gens, params, generators.first().map_or(0, |g| g.nrows())))
}

fn build_decoder(gens: &[Generator], params: &[f64], d: usize) -> CMatrix {
    let mut u = CMatrix::identity(d, d);
    for (k, &theta) in params.iter().enumerate() {
        u = gens[k % gens.len()].exp(theta) * u;
    }
    u
}

/// Measurement: apply U_de, then read out the fixed base basis.
pub fn decoded_basis(base: &MeasurementBasis, u: &CMatrix) -> Result<MeasurementBasis> {
    MeasurementBasis::from_columns(base.space().clone(), u.adjoint() * base.vectors(), base.outcomes().to_vec(), BasisLabel::Decoder)
}

#[derive(Clone, Debug)]
pub struct DecoderResult {
    pub params: Vec<f64>,
    pub posterior_variance: f64,
    pub avg_estimator_variance: f64,
}

pub const DECODER_RESTARTS: usize = 20;

/// Simplex search over decoder angles, restarted from random points.
#[allow(clippy::too_many_arguments)]
pub fn variational_decoder(
    state: &State,
    base: &MeasurementBasis,
    generators: &[CMatrix],
    depth: usize,
    prior: &PriorDensity,
    init_params: Option<&[f64]>,
    seed: u64,
) -> Result<DecoderResult> {
    let n_params = depth * generators.len();
    let gens = generators.iter().map(|g| eigh(g).map(|eig| Generator { eig })).collect::<Result<Vec<_>>>()?;
    let d = state.dim();
    let cost = |theta: &[f64]| -> f64 {
        let u = build_decoder(&gens, theta, d);
        match decoded_basis(base, &u).and_then(|b| SensorDesign::new(state.clone(), b)) {
            Ok(design) => posterior_variance(&design, prior),
            Err(_) => f64::INFINITY,
        }
    };
    if n_params == 0 {
        let v = cost(&[]);
        return Ok(DecoderResult {
            params: vec![],
            posterior_variance: v,
            avg_estimator_variance: estimator_variance_from_posterior(v, prior.information()),
        });
    }
    let start = init_params.map(|p| p.to_vec()).unwrap_or_else(|| vec![0.0; n_params]);
    if start.len() != n_params {
        return Err(Error::DimensionMismatch { expected: n_params, got: start.len() });
    }
    let mut rng = crate::rng::stream(seed, 0);
    let mut best = (start.clone(), cost(&start));
    for restart in 0..DECODER_RESTARTS {
        let x0: Vec<f64> = if restart == 0 { start.clone() } else { (0..n_params).map(|_| rng.random_range(-PI..PI)).collect() };
        let (x, fx, _) = nelder_mead(|t| cost(t), &x0, 0.3, 1e-12, 4000);
        if fx < best.1 {
            best = (x, fx);
        }
    }
    Ok(DecoderResult {
        posterior_variance: best.1,
        avg_estimator_variance: estimator_variance_from_posterior(best.1, prior.information()),
        params: best.0,
    })
}
