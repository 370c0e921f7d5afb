//! Dynamic-range extension with several independently read sub-ensembles:
//! dual-quadrature splitting, attenuated-phase cascades and GHZ cascades.

use std::f64::consts::FRAC_PI_4;

use rand::Rng;
use rayon::prelude::*;

use crate::bayes::{
    coherence_time_limit, estimator_variance_from_posterior, optimal_measurement, personick_from_pair, Posterior,
    PriorDensity, SensorDesign,
};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::measurement::{
    basis_jy, basis_phase_op, outcome_distribution, parity_with_offset, sample_with, spin_along, GROUP_TOL,
};
use crate::spin::{Space, State};
use crate::states::{css_x, ghz, sine_state};

/// Largest number of joint outcome tuples enumerated for an exact posterior variance.
pub const MAX_JOINT_OUTCOMES: usize = 20_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GroupState {
    Css,
    Ghz,
    Sine,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GroupReadout {
    /// Collective spin along the azimuth.
    SpinAlong(f64),
    /// Parity whose GHZ signal is cos(n phi - offset).
    ParityOffset(f64),
    PhaseOp,
    Jy,
    /// Personick-optimal basis for the group's gain-scaled prior.
    Optimal,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleGroup {
    pub n_atoms: usize,
    pub state: GroupState,
    pub readout: GroupReadout,
    /// The group's encoded phase is gain * phi.
    pub gain: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsemblePartition {
    groups: Vec<EnsembleGroup>,
}

impl EnsemblePartition {
    pub fn new(groups: Vec<EnsembleGroup>) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::invalid("partition needs at least one group"));
        }
        for g in &groups {
            if g.n_atoms == 0 {
                return Err(Error::invalid("every group needs at least one atom"));
            }
            if !(g.gain > 0.0) || !g.gain.is_finite() {
                return Err(Error::invalid(format!("phase gain must be positive, got {}", g.gain)));
            }
        }
        Ok(EnsemblePartition { groups })
    }

    pub fn groups(&self) -> &[EnsembleGroup] {
        &self.groups
    }

    pub fn n_total(&self) -> usize {
        self.groups.iter().map(|g| g.n_atoms).sum()
    }

    /// Same groups with every readout replaced.
    pub fn with_readout(&self, readout: GroupReadout) -> Self {
        let groups = self.groups.iter().map(|g| EnsembleGroup { readout, ..g.clone() }).collect();
        EnsemblePartition { groups }
    }

    /// Same groups with every gain multiplied by c.
    pub fn with_gains_scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.groups.iter().map(|g| EnsembleGroup { gain: g.gain * c, ..g.clone() }).collect())
    }

    /// One sensor design per group; optimal readouts are solved against the
    /// gain-scaled prior.
    pub fn designs(&self, prior: &PriorDensity) -> Result<Vec<SensorDesign>> {
        self.groups.par_iter().map(|g| group_design(g, prior)).collect()
    }
}

fn group_state(g: &EnsembleGroup) -> Result<State> {
    let n = g.n_atoms;
    Ok(match g.state {
        GroupState::Css => css_x(n)?,
        GroupState::Ghz => ghz(n)?,
        GroupState::Sine => sine_state(n)?,
    }
    .to_state())
}

fn group_design(g: &EnsembleGroup, prior: &PriorDensity) -> Result<SensorDesign> {
    let n = g.n_atoms;
    let state = group_state(g)?;
    let basis = match g.readout {
        GroupReadout::SpinAlong(a) => spin_along(&Space::symmetric(n), a)?,
        GroupReadout::ParityOffset(o) => parity_with_offset(n, o)?,
        GroupReadout::PhaseOp => basis_phase_op(n)?,
        GroupReadout::Jy => basis_jy(n)?,
        GroupReadout::Optimal => optimal_measurement(&state, &prior.scaled(g.gain)?)?.0,
    };
    SensorDesign::new(state, basis)
}

/// n CSS ensembles of N/n atoms with gains 1, 1/2, ..., 1/2^(n-1); each is
/// split into halves read along azimuths +pi/4 and -pi/4.
pub fn scheme_attenuated(n_total: usize, n_groups: usize) -> Result<EnsemblePartition> {
    if n_groups == 0 {
        return Err(Error::invalid("need at least one attenuation stage"));
    }
    if n_total == 0 || n_total % (2 * n_groups) != 0 {
        return Err(Error::invalid(format!("N = {n_total} is not divisible by 2n = {}", 2 * n_groups)));
    }
    let half = n_total / (2 * n_groups);
    let mut groups = Vec::with_capacity(2 * n_groups);
    for k in 0..n_groups {
        // powers of two are exact in binary floating point
        let gain = 0.5f64.powi(k as i32);
        for az in [FRAC_PI_4, -FRAC_PI_4] {
            groups.push(EnsembleGroup { n_atoms: half, state: GroupState::Css, readout: GroupReadout::SpinAlong(az), gain });
        }
    }
    EnsemblePartition::new(groups)
}

/// Pairs of GHZ states of sizes 1, 2, ..., 2^(n-1), the two members of each pair
/// read in quadratures offset by +-pi/4; N = 2(2^n - 1).
pub fn scheme_ghz_cascade(n_pairs: usize) -> Result<EnsemblePartition> {
    if n_pairs == 0 || n_pairs > 12 {
        return Err(Error::invalid("cascade needs between 1 and 12 pairs"));
    }
    let mut groups = Vec::with_capacity(2 * n_pairs);
    for k in 0..n_pairs {
        for off in [FRAC_PI_4, -FRAC_PI_4] {
            groups.push(EnsembleGroup { n_atoms: 1 << k, state: GroupState::Ghz, readout: GroupReadout::ParityOffset(off), gain: 1.0 });
        }
    }
    EnsemblePartition::new(groups)
}

/// Small-prior estimator variance 3n / (4 (1 - 4^-n) N) of the attenuated scheme.
pub fn attenuated_bound(n_total: usize, n_groups: usize) -> f64 {
    let n = n_groups as f64;
    3.0 * n / (4.0 * (1.0 - 4f64.powi(-(n_groups as i32)))) / n_total as f64
}

/// Inverse total QFI of the GHZ cascade, 6 / (N^2 + 4N).
pub fn ghz_cascade_bound(n_pairs: usize) -> f64 {
    let n = 2.0 * (2f64.powi(n_pairs as i32) - 1.0);
    6.0 / (n * n + 4.0 * n)
}

/// Gain-weighted Fisher information sum_i g_i^2 F_i(g_i phi).
pub fn fisher_sum(partition: &EnsemblePartition, prior: &PriorDensity, phi: f64) -> Result<f64> {
    let designs = partition.designs(prior)?;
    let mut total = 0.0;
    for (g, d) in partition.groups.iter().zip(&designs) {
        total += g.gain * g.gain * crate::frequentist::fisher_information(&d.state, &d.basis, g.gain * phi)?;
    }
    Ok(total)
}

/// Outcome likelihoods of every group tabulated on the prior's nodes.
#[derive(Clone, Debug)]
pub struct CombinedModel {
    prior: PriorDensity,
    gains: Vec<f64>,
    designs: Vec<SensorDesign>,
    /// Grouped outcome values per ensemble.
    outcomes: Vec<Vec<f64>>,
    /// tables[i][o][j] = p(outcome o of group i | gain_i * phi_j)
    tables: Vec<Vec<Vec<f64>>>,
}

impl CombinedModel {
    pub fn new(partition: &EnsemblePartition, prior: &PriorDensity) -> Result<Self> {
        let designs = partition.designs(prior)?;
        let gains: Vec<f64> = partition.groups.iter().map(|g| g.gain).collect();
        let nodes = prior.nodes();
        let tables = designs
            .par_iter()
            .zip(&gains)
            .map(|(d, &g)| {
                let k = d.basis.groups().len();
                let mut t = vec![vec![0.0; nodes.len()]; k];
                for (j, &phi) in nodes.iter().enumerate() {
                    let dist = outcome_distribution(&d.state, &d.basis, g * phi)?;
                    for (o, p) in dist.probs.iter().enumerate() {
                        t[o][j] = *p;
                    }
                }
                Ok(t)
            })
            .collect::<Result<Vec<_>>>()?;
        let outcomes = designs.iter().map(|d| d.basis.groups().iter().map(|(v, _)| *v).collect()).collect();
        Ok(CombinedModel { prior: prior.clone(), gains, designs, outcomes, tables })
    }

    pub fn designs(&self) -> &[SensorDesign] {
        &self.designs
    }

    fn outcome_index(&self, group: usize, value: f64) -> Result<usize> {
        self.outcomes[group]
            .iter()
            .position(|v| (v - value).abs() <= GROUP_TOL)
            .ok_or_else(|| Error::invalid(format!("outcome {value} is not produced by group {group}")))
    }

    fn check_len(&self, outcomes: &[f64]) -> Result<()> {
        if outcomes.len() != self.tables.len() {
            return Err(Error::DimensionMismatch { expected: self.tables.len(), got: outcomes.len() });
        }
        Ok(())
    }

    /// Posterior from the product of all group likelihoods on the shared grid.
    pub fn posterior(&self, outcomes: &[f64]) -> Result<Posterior> {
        self.check_len(outcomes)?;
        let mut like = vec![1.0; self.prior.nodes().len()];
        for (i, &o) in outcomes.iter().enumerate() {
            let row = &self.tables[i][self.outcome_index(i, o)?];
            like.iter_mut().zip(row).for_each(|(l, p)| *l *= p);
        }
        Posterior::from_prior(&self.prior).update_with_likelihood(&like)
    }

    /// The same posterior built by one Bayesian update per group.
    pub fn posterior_sequential(&self, outcomes: &[f64]) -> Result<Posterior> {
        self.check_len(outcomes)?;
        let mut post = Posterior::from_prior(&self.prior);
        for (i, &o) in outcomes.iter().enumerate() {
            post = post.update_with_likelihood(&self.tables[i][self.outcome_index(i, o)?])?;
        }
        Ok(post)
    }

    /// One shot per group at the true phase.
    pub fn sample<R: Rng + ?Sized>(&self, phi: f64, rng: &mut R) -> Result<Vec<f64>> {
        self.designs
            .iter()
            .zip(&self.gains)
            .map(|(d, &g)| Ok(sample_with(&outcome_distribution(&d.state, &d.basis, g * phi)?, 1, rng)[0]))
            .collect()
    }

    /// Number of joint outcome tuples.
    pub fn joint_outcomes(&self) -> usize {
        self.tables.iter().fold(1usize, |acc, t| acc.saturating_mul(t.len()))
    }

    /// Expected posterior variance over all joint outcomes, by exact enumeration.
    pub fn posterior_variance(&self) -> Result<f64> {
        let count = self.joint_outcomes();
        if count > MAX_JOINT_OUTCOMES {
            return Err(Error::invalid(format!("{count} joint outcomes exceed the enumeration cap {MAX_JOINT_OUTCOMES}")));
        }
        let nodes = self.prior.nodes();
        let w = self.prior.weights();
        let first = &self.tables[0];
        let explained: f64 = first
            .par_iter()
            .map(|row| {
                let acc: Vec<f64> = w.iter().zip(row).map(|(a, b)| a * b).collect();
                explained_below(&self.tables[1..], &acc, nodes)
            })
            .sum();
        let second: f64 = nodes.iter().zip(w).map(|(x, p)| x * x * p).sum();
        Ok((second - explained).max(0.0))
    }
}

/// Sum over the remaining outcome tuples of (integral phi L)^2 / (integral L).
fn explained_below(tables: &[Vec<Vec<f64>>], acc: &[f64], nodes: &[f64]) -> f64 {
    if acc.iter().sum::<f64>() <= 1e-300 {
        return 0.0;
    }
    match tables.split_first() {
        None => {
            let a0: f64 = acc.iter().sum();
            let a1: f64 = acc.iter().zip(nodes).map(|(a, x)| a * x).sum();
            a1 * a1 / a0
        }
        Some((head, rest)) => {
            let mut buf = vec![0.0; acc.len()];
            let mut total = 0.0;
            for row in head {
                buf.iter_mut().zip(acc.iter().zip(row)).for_each(|(b, (a, p))| *b = a * p);
                total += explained_below(rest, &buf, nodes);
            }
            total
        }
    }
}

pub fn combined_posterior(partition: &EnsemblePartition, prior: &PriorDensity, outcomes: &[f64]) -> Result<Posterior> {
    CombinedModel::new(partition, prior)?.posterior(outcomes)
}

/// Average estimator variance of the partition with its prescribed readouts.
pub fn combined_estimator_variance(partition: &EnsemblePartition, prior: &PriorDensity) -> Result<f64> {
    let post = CombinedModel::new(partition, prior)?.posterior_variance()?;
    Ok(estimator_variance_from_posterior(post, prior.information()))
}

/// Spectrum of the total generator sum_i g_i Jz_i in the product of the group
/// probes: (eigenvalue, probability) pairs, ascending, with coincident values merged.
pub fn generator_spectrum(partition: &EnsemblePartition) -> Result<Vec<(f64, f64)>> {
    let mut levels = vec![(0.0, 1.0)];
    for g in &partition.groups {
        let state = group_state(g)?;
        let rho = state.density();
        let m = state.space().m_values();
        let mut next = Vec::with_capacity(levels.len() * m.len());
        for &(h, p) in &levels {
            for (k, &mk) in m.iter().enumerate() {
                let q = rho[(k, k)].re;
                if q > 0.0 {
                    next.push((h + g.gain * mk, p * q));
                }
            }
        }
        next.sort_by(|a, b| a.0.total_cmp(&b.0));
        levels = Vec::with_capacity(next.len());
        for (h, p) in next {
            match levels.last_mut() {
                Some((h0, p0)) if (h - *h0).abs() <= 1e-9 => *p0 += p,
                _ => levels.push((h, p)),
            }
        }
    }
    Ok(levels)
}

/// Minimal expected posterior variance over all joint measurements on the
/// product of the group probes. Only the distribution of the total generator
/// enters, so the problem is solved on its eigenvalue support.
pub fn joint_personick_bound(partition: &EnsemblePartition, prior: &PriorDensity) -> Result<f64> {
    let levels = generator_spectrum(partition)?;
    let d = levels.len();
    let mut bar = CMatrix::zeros(d, d);
    let mut prime = CMatrix::zeros(d, d);
    for a in 0..d {
        for b in 0..d {
            let amp = (levels[a].1 * levels[b].1).sqrt();
            let [c0, c1, _] = prior.characteristic(levels[a].0 - levels[b].0);
            bar[(a, b)] = c0 * amp;
            prime[(a, b)] = c1 * amp;
        }
    }
    Ok(personick_from_pair(&bar, &prime, prior)?.1)
}

#[derive(Clone, Debug)]
pub struct SchemeSweep {
    pub delta2: Vec<f64>,
    /// Prescribed readouts fused through the joint posterior.
    pub prescribed: Vec<f64>,
    /// Per-group optimal readouts fused through the joint posterior.
    pub per_group_optimal: Vec<f64>,
    /// Optimal joint measurement on the product probe.
    pub joint_optimal: Vec<f64>,
    pub ctl_order: u32,
    pub ctl: Vec<f64>,
}

/// Average estimator variance of a partition over zero-mean gaussian priors.
pub fn scheme_sweep(partition: &EnsemblePartition, delta2_grid: &[f64], ctl_order: u32) -> Result<SchemeSweep> {
    let optimal = partition.with_readout(GroupReadout::Optimal);
    let rows = delta2_grid
        .par_iter()
        .map(|&d2| {
            let prior = PriorDensity::gaussian(0.0, d2.sqrt())?;
            let info = prior.information();
            let a = combined_estimator_variance(partition, &prior)?;
            let b = combined_estimator_variance(&optimal, &prior)?;
            let c = estimator_variance_from_posterior(joint_personick_bound(partition, &prior)?, info);
            Ok((a, b, c))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SchemeSweep {
        delta2: delta2_grid.to_vec(),
        prescribed: rows.iter().map(|r| r.0).collect(),
        per_group_optimal: rows.iter().map(|r| r.1).collect(),
        joint_optimal: rows.iter().map(|r| r.2).collect(),
        ctl_order,
        ctl: delta2_grid.iter().map(|&d2| coherence_time_limit(ctl_order, d2)).collect(),
    })
}
