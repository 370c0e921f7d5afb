//! Projective measurement bases and outcome statistics.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{eigh_unchecked, unitary_deviation, CMatrix, CVector, C64, ZERO};
use crate::spin::{spin_matrix, DickeVector, OpLabel, Space, State};
use crate::states::phase_state;

/// Values closer than this are merged into one outcome.
pub const GROUP_TOL: f64 = 1e-9;
const CLAMP_TOL: f64 = 1e-12;
const SUM_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub enum BasisLabel {
    JyResolved,
    /// Excitation-resolved measurement of cos(a) Jx + sin(a) Jy.
    SpinAlong(f64),
    ParityX,
    ParityPlus,
    ParityMinus,
    /// x-parity rotated by the given per-atom angle about z.
    ParityRotated(f64),
    PhaseOp,
    Computational,
    Decoder,
    Sld,
    Optimal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParityQuadrature {
    X,
    Plus,
    Minus,
}

/// Orthonormal basis with a real outcome attached to each vector.
#[derive(Clone, Debug)]
pub struct MeasurementBasis {
    space: Space,
    vectors: CMatrix,
    outcomes: Vec<f64>,
    label: BasisLabel,
    groups: Vec<(f64, Vec<usize>)>,
}

fn group_outcomes(outcomes: &[f64]) -> Vec<(f64, Vec<usize>)> {
    let mut order: Vec<usize> = (0..outcomes.len()).collect();
    order.sort_by(|&a, &b| outcomes[a].total_cmp(&outcomes[b]).then(a.cmp(&b)));
    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    for i in order {
        match groups.last_mut() {
            Some((v, members)) if (outcomes[i] - *v).abs() <= GROUP_TOL => members.push(i),
            _ => groups.push((outcomes[i], vec![i])),
        }
    }
    groups
}

impl MeasurementBasis {
    /// Columns of `vectors` become basis states.
    pub fn from_columns(space: Space, vectors: CMatrix, outcomes: Vec<f64>, label: BasisLabel) -> Result<Self> {
        let d = space.dim();
        if vectors.nrows() != d || vectors.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: vectors.ncols() });
        }
        if outcomes.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: outcomes.len() });
        }
        if outcomes.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("outcome values must be finite"));
        }
        let dev = unitary_deviation(&vectors);
        if dev > 1e-10 {
            return Err(Error::NotUnitary(dev));
        }
        let groups = group_outcomes(&outcomes);
        Ok(MeasurementBasis { space, vectors, outcomes, label, groups })
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn n_atoms(&self) -> usize {
        self.space.n_atoms()
    }

    pub fn vectors(&self) -> &CMatrix {
        &self.vectors
    }

    pub fn outcomes(&self) -> &[f64] {
        &self.outcomes
    }

    pub fn label(&self) -> &BasisLabel {
        &self.label
    }

    /// Distinct outcome values (ascending) with the basis vectors they collect.
    pub fn groups(&self) -> &[(f64, Vec<usize>)] {
        &self.groups
    }

    pub fn vector(&self, k: usize) -> DickeVector {
        DickeVector::new(self.space.n_atoms(), self.vectors.column(k).clone_owned())
            .expect("symmetric-space basis vector")
    }

    /// Observable sum_k mu_k |v_k><v_k|.
    pub fn observable(&self) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for (k, mut col) in scaled.column_iter_mut().enumerate() {
            col.scale_mut(self.outcomes[k]);
        }
        scaled * self.vectors.adjoint()
    }

    /// The same vectors with new outcome values.
    pub fn relabel(&self, outcomes: Vec<f64>) -> Result<Self> {
        Self::from_columns(self.space.clone(), self.vectors.clone(), outcomes, self.label.clone())
    }

    /// Embeds a symmetric-subspace basis into a larger sector space, completing
    /// it with the computational basis of the other sectors.
    pub fn on_space(&self, target: &Space) -> Result<Self> {
        if &self.space == target {
            return Ok(self.clone());
        }
        if !self.space.is_symmetric() {
            return Err(Error::invalid("only symmetric-subspace bases can be embedded"));
        }
        let blocks = target.blocks();
        if blocks.first().map(|b| b.0) != Some(self.space.n_atoms()) {
            return Err(Error::invalid("target space must start with the symmetric sector"));
        }
        let d = target.dim();
        let s = self.space.dim();
        let mut v = CMatrix::zeros(d, d);
        v.view_mut((0, 0), (s, s)).copy_from(&self.vectors);
        let m = target.m_values();
        let mut outcomes = self.outcomes.clone();
        for k in s..d {
            v[(k, k)] = C64::new(1.0, 0.0);
            outcomes.push(m[k]);
        }
        Self::from_columns(target.clone(), v, outcomes, self.label.clone())
    }
}

/// Jz eigenbasis with outcomes M.
pub fn basis_computational(space: &Space) -> MeasurementBasis {
    let d = space.dim();
    MeasurementBasis::from_columns(space.clone(), CMatrix::identity(d, d), space.m_values(), BasisLabel::Computational)
        .expect("identity is unitary")
}

/// Excitation-resolved measurement of cos(a) Jx + sin(a) Jy with outcomes M.
pub fn spin_along(space: &Space, azimuth: f64) -> Result<MeasurementBasis> {
    if !matches!(space, Space::Sectors { .. }) {
        return Err(Error::invalid("spin-direction bases are built on sector spaces"));
    }
    let d = space.dim();
    let mut v = CMatrix::zeros(d, d);
    let mut outcomes = Vec::with_capacity(d);
    for (t, off) in space.blocks() {
        let e = eigh_unchecked(&spin_matrix(t, OpLabel::Jx)?);
        let j = t as f64 / 2.0;
        for col in 0..=t {
            for row in 0..=t {
                let m = row as f64 - j;
                v[(off + row, off + col)] = e.vectors[(row, col)] * C64::from_polar(1.0, -azimuth * m);
            }
            outcomes.push(col as f64 - j);
        }
    }
    MeasurementBasis::from_columns(space.clone(), v, outcomes, BasisLabel::SpinAlong(azimuth))
}

/// Excitation-resolved Jy measurement on the symmetric subspace.
pub fn basis_jy(n: usize) -> Result<MeasurementBasis> {
    if n == 0 {
        return Err(Error::invalid("N must be at least 1"));
    }
    let mut b = spin_along(&Space::symmetric(n), PI / 2.0)?;
    b.label = BasisLabel::JyResolved;
    Ok(b)
}

/// Eigenbasis of the x-parity conjugated by exp(-i beta Jz), beta per atom.
pub fn parity_rotated(space: &Space, beta: f64) -> Result<MeasurementBasis> {
    if !matches!(space, Space::Sectors { .. }) {
        return Err(Error::invalid("parity bases are built on sector spaces"));
    }
    let d = space.dim();
    let m = space.m_values();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = CMatrix::zeros(d, d);
    let mut outcomes = Vec::with_capacity(d);
    let mut col = 0;
    for (t, off) in space.blocks() {
        let s = space.sector_parity(t);
        for k in 0..=t / 2 {
            let mirror = t - k;
            if k == mirror {
                v[(off + k, col)] = C64::new(1.0, 0.0);
                outcomes.push(s);
                col += 1;
                continue;
            }
            v[(off + k, col)] = C64::new(h, 0.0);
            v[(off + mirror, col)] = C64::new(h, 0.0);
            outcomes.push(s);
            col += 1;
            v[(off + k, col)] = C64::new(h, 0.0);
            v[(off + mirror, col)] = C64::new(-h, 0.0);
            outcomes.push(-s);
            col += 1;
        }
    }
    for r in 0..d {
        let ph = C64::from_polar(1.0, -beta * m[r]);
        for c in 0..d {
            if v[(r, c)] != ZERO {
                v[(r, c)] *= ph;
            }
        }
    }
    MeasurementBasis::from_columns(space.clone(), v, outcomes, BasisLabel::ParityRotated(beta))
}

pub fn basis_parity(n: usize, quadrature: ParityQuadrature) -> Result<MeasurementBasis> {
    if n == 0 {
        return Err(Error::invalid("N must be at least 1"));
    }
    let (beta, label) = match quadrature {
        ParityQuadrature::X => (0.0, BasisLabel::ParityX),
        ParityQuadrature::Plus => (PI / 4.0, BasisLabel::ParityPlus),
        ParityQuadrature::Minus => (-PI / 4.0, BasisLabel::ParityMinus),
    };
    let mut b = parity_rotated(&Space::symmetric(n), beta)?;
    b.label = label;
    Ok(b)
}

/// Parity measurement whose signal is shifted by a collective phase offset:
/// <Pi>_phi = cos(N phi - offset) on the GHZ state.
pub fn parity_with_offset(n: usize, offset: f64) -> Result<MeasurementBasis> {
    parity_rotated(&Space::symmetric(n), offset / n as f64)
}

/// Phase-state basis with outcomes Phi_k = 2 pi k/(N+1).
pub fn basis_phase_op(n: usize) -> Result<MeasurementBasis> {
    if n == 0 {
        return Err(Error::invalid("N must be at least 1"));
    }
    let mut v = CMatrix::zeros(n + 1, n + 1);
    let mut outcomes = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let k = i as f64 - n as f64 / 2.0;
        v.set_column(i, phase_state(n, k)?.amps());
        outcomes.push(2.0 * PI * k / (n as f64 + 1.0));
    }
    MeasurementBasis::from_columns(Space::symmetric(n), v, outcomes, BasisLabel::PhaseOp)
}

/// Basis given by the columns of a decoding unitary on the symmetric subspace.
pub fn basis_decoder(u: &CMatrix, outcomes: Vec<f64>) -> Result<MeasurementBasis> {
    if u.nrows() < 2 {
        return Err(Error::invalid("decoder must act on at least one atom"));
    }
    MeasurementBasis::from_columns(Space::symmetric(u.nrows() - 1), u.clone(), outcomes, BasisLabel::Decoder)
}

/// Grouped outcome probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeDistribution {
    pub outcomes: Vec<f64>,
    pub probs: Vec<f64>,
}

impl OutcomeDistribution {
    pub fn mean(&self) -> f64 {
        self.outcomes.iter().zip(&self.probs).map(|(o, p)| o * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.outcomes.iter().zip(&self.probs).map(|(o, p)| (o - m) * (o - m) * p).sum::<f64>()
    }

    pub fn cdf(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect()
    }
}

fn check_state(state: &State, basis: &MeasurementBasis) -> Result<()> {
    if state.space() != basis.space() {
        return Err(Error::DimensionMismatch { expected: basis.space().dim(), got: state.dim() });
    }
    Ok(())
}

/// Per-vector probabilities and their phase derivatives.
pub fn vector_probabilities(state: &State, basis: &MeasurementBasis, phi: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    check_state(state, basis)?;
    let m = state.space().m_values();
    let v = basis.vectors();
    let d = m.len();
    let mut p = vec![0.0; d];
    let mut dp = vec![0.0; d];
    match state.encode(phi) {
        State::Pure { amps, .. } => {
            let jz_amps = CVector::from_iterator(d, amps.iter().zip(&m).map(|(a, mm)| a * *mm));
            let a = v.ad_mul(&amps);
            let b = v.ad_mul(&jz_amps);
            for k in 0..d {
                p[k] = a[k].norm_sqr();
                dp[k] = 2.0 * (a[k].conj() * b[k]).im;
            }
        }
        State::Mixed { rho, .. } => {
            let rv = &rho * v;
            for k in 0..d {
                let col = v.column(k);
                let rcol = rv.column(k);
                let mut pk = ZERO;
                let mut dk = ZERO;
                for r in 0..d {
                    let c = col[r].conj();
                    pk += c * rcol[r];
                    dk += c * rcol[r] * m[r];
                }
                p[k] = pk.re;
                dp[k] = 2.0 * dk.im;
            }
        }
    }
    Ok((p, dp))
}

fn finalize(basis: &MeasurementBasis, p: &[f64], dp: Option<&[f64]>) -> Result<(OutcomeDistribution, Vec<f64>)> {
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > SUM_TOL {
        return Err(Error::BasisIncomplete(total));
    }
    let mut outcomes = Vec::with_capacity(basis.groups().len());
    let mut probs = Vec::with_capacity(basis.groups().len());
    let mut dprobs = Vec::with_capacity(basis.groups().len());
    for (value, members) in basis.groups() {
        let mut q: f64 = members.iter().map(|&k| p[k]).sum();
        if q < 0.0 && q >= -CLAMP_TOL {
            q = 0.0;
        }
        outcomes.push(*value);
        probs.push(q.max(0.0) / total);
        if let Some(dp) = dp {
            dprobs.push(members.iter().map(|&k| dp[k]).sum::<f64>() / total);
        }
    }
    Ok((OutcomeDistribution { outcomes, probs }, dprobs))
}

/// p(mu | phi) after the encoding exp(-i phi Jz).
pub fn outcome_distribution(state: &State, basis: &MeasurementBasis, phi: f64) -> Result<OutcomeDistribution> {
    let (p, _) = vector_probabilities(state, basis, phi)?;
    Ok(finalize(basis, &p, None)?.0)
}

/// Grouped distribution together with d p(mu|phi)/d phi.
pub fn outcome_distribution_with_derivative(
    state: &State,
    basis: &MeasurementBasis,
    phi: f64,
) -> Result<(OutcomeDistribution, Vec<f64>)> {
    let (p, dp) = vector_probabilities(state, basis, phi)?;
    finalize(basis, &p, Some(&dp))
}

/// Index of the outcome drawn by inverse-CDF sampling with uniform u.
pub fn draw_index(cdf: &[f64], u: f64) -> usize {
    let total = *cdf.last().unwrap_or(&1.0);
    let target = u * total;
    let k = cdf.partition_point(|&c| c <= target);
    let mut k = k.min(cdf.len() - 1);
    // skip zero-probability groups reached through rounding
    while k > 0 && cdf[k] == cdf[k - 1] {
        k -= 1;
    }
    k
}

/// r draws, returned as outcome values.
pub fn sample_with<R: Rng + ?Sized>(dist: &OutcomeDistribution, r: usize, rng: &mut R) -> Vec<f64> {
    let cdf = dist.cdf();
    (0..r).map(|_| dist.outcomes[draw_index(&cdf, rng.random::<f64>())]).collect()
}

/// Outcome histogram of r draws, indexed like `dist.outcomes`.
pub fn sample_counts<R: Rng + ?Sized>(dist: &OutcomeDistribution, r: usize, rng: &mut R) -> Vec<u32> {
    let cdf = dist.cdf();
    let mut counts = vec![0u32; cdf.len()];
    for _ in 0..r {
        counts[draw_index(&cdf, rng.random::<f64>())] += 1;
    }
    counts
}

/// r independent draws from a seeded stream.
pub fn sample(dist: &OutcomeDistribution, r: usize, seed: u64) -> Result<Vec<f64>> {
    if r == 0 {
        return Err(Error::invalid("need at least one repetition"));
    }
    let mut rng = crate::rng::stream(seed, 0);
    Ok(sample_with(dist, r, &mut rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{collective_op, rotate, Axis};
    use crate::states::{css_x, ghz, sine_state};
    use proptest::prelude::*;

    fn random_state(n: usize, seed: u64) -> DickeVector {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let amps = CVector::from_fn(n + 1, |_, _| {
            C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
        });
        DickeVector::normalized(n, amps).unwrap()
    }

    #[test]
    fn jy_basis_vectors_are_eigenvectors() {
        for n in [1, 4, 9] {
            let b = basis_jy(n).unwrap();
            let jy = collective_op(n, OpLabel::Jy).unwrap().matrix;
            for k in 0..=n {
                let v = b.vectors().column(k);
                let r = &jy * v - v * C64::new(b.outcomes()[k], 0.0);
                assert!(r.norm() < 1e-10);
            }
        }
    }

    #[test]
    fn css_jy_statistics() {
        let n = 16;
        let s = css_x(n).unwrap().to_state();
        let b = basis_jy(n).unwrap();
        let d0 = outcome_distribution(&s, &b, 0.0).unwrap();
        assert!(d0.mean().abs() < 1e-12);
        assert!((d0.variance() - 4.0).abs() < 1e-10);
        for phi in [-1.2, 0.3, 0.9] {
            let d = outcome_distribution(&s, &b, phi).unwrap();
            assert!((d.mean() - 8.0 * f64::sin(phi)).abs() < 1e-10);
        }
    }

    #[test]
    fn single_atom_probability() {
        let s = css_x(1).unwrap().to_state();
        let b = basis_jy(1).unwrap();
        for phi in [-0.7, 0.0, 0.4, 1.3] {
            let d = outcome_distribution(&s, &b, phi).unwrap();
            assert!((d.probs[1] - (1.0 + phi.sin()) / 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn ghz_parity_signal() {
        let n = 16;
        let s = ghz(n).unwrap().to_state();
        let b = basis_parity(n, ParityQuadrature::X).unwrap();
        for i in 0..=1000 {
            let phi = -PI + 2.0 * PI * i as f64 / 1000.0;
            let d = outcome_distribution(&s, &b, phi).unwrap();
            assert!((d.mean() - (n as f64 * phi).cos()).abs() < 1e-10);
        }
        let half = outcome_distribution(&s, &b, PI / (2.0 * n as f64)).unwrap();
        assert!((half.probs[0] - 0.5).abs() < 1e-12 && (half.probs[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn css_parity_signal() {
        let n = 6;
        let s = css_x(n).unwrap().to_state();
        let b = basis_parity(n, ParityQuadrature::X).unwrap();
        for phi in [0.0, 0.2, 0.8] {
            let d = outcome_distribution(&s, &b, phi).unwrap();
            assert!((d.mean() - phi.cos().powi(n as i32)).abs() < 1e-12);
        }
    }

    #[test]
    fn parity_ranks() {
        for n in 1..9 {
            let b = basis_parity(n, ParityQuadrature::Plus).unwrap();
            let g = b.groups();
            assert_eq!(g.len(), 2);
            assert_eq!(g[0].0, -1.0);
            assert_eq!(g[1].0, 1.0);
            let ranks = [g[0].1.len(), g[1].1.len()];
            assert_eq!(ranks.iter().max().copied(), Some((n + 2) / 2));
            assert_eq!(ranks.iter().min().copied(), Some((n + 1) / 2));
        }
    }

    #[test]
    fn dual_quadrature_parity_on_ghz() {
        let n = 4;
        let s = ghz(n).unwrap().to_state();
        let plus = parity_with_offset(n, PI / 4.0).unwrap();
        let phi = 0.17;
        let d = outcome_distribution(&s, &plus, phi).unwrap();
        assert!((d.mean() - (n as f64 * phi - PI / 4.0).cos()).abs() < 1e-12);
    }

    #[test]
    fn phase_operator_basis() {
        let n = 16;
        let b = basis_phase_op(n).unwrap();
        assert!(unitary_deviation(b.vectors()) < 1e-12);
        assert!(b.outcomes()[0] > -PI && *b.outcomes().last().unwrap() < PI);
        let d = outcome_distribution(&sine_state(n).unwrap().to_state(), &b, 0.0).unwrap();
        let best = (0..d.probs.len()).max_by(|&a, &c| d.probs[a].total_cmp(&d.probs[c])).unwrap();
        assert!(d.outcomes[best].abs() < 1e-12);
    }

    #[test]
    fn decoder_identity_is_computational() {
        let n = 3;
        let m = Space::symmetric(n).m_values();
        let b = basis_decoder(&CMatrix::identity(4, 4), m.clone()).unwrap();
        let s = random_state(n, 2).to_state();
        let d1 = outcome_distribution(&s, &b, 0.3).unwrap();
        let d2 = outcome_distribution(&s, &basis_computational(&Space::symmetric(n)), 0.3).unwrap();
        assert_eq!(d1.outcomes, d2.outcomes);
        for (a, c) in d1.probs.iter().zip(&d2.probs) {
            assert!((a - c).abs() < 1e-14);
        }
        let mut bad = CMatrix::identity(4, 4);
        bad[(0, 1)] = C64::new(0.5, 0.0);
        assert!(matches!(basis_decoder(&bad, m), Err(Error::NotUnitary(_))));
    }

    #[test]
    fn basis_state_gives_point_mass() {
        let b = basis_jy(5).unwrap();
        let s = b.vector(2).to_state();
        let d = outcome_distribution(&s, &b, 0.0).unwrap();
        assert!((d.probs[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sampling_contract() {
        let point = OutcomeDistribution { outcomes: vec![-1.0, 2.0], probs: vec![0.0, 1.0] };
        assert!(sample(&point, 50, 1).unwrap().iter().all(|&x| x == 2.0));
        let d = outcome_distribution(&css_x(4).unwrap().to_state(), &basis_jy(4).unwrap(), 0.4).unwrap();
        assert_eq!(sample(&d, 100, 9).unwrap(), sample(&d, 100, 9).unwrap());
        let r = 100_000;
        let draws = sample(&d, r, 42).unwrap();
        for (o, p) in d.outcomes.iter().zip(&d.probs) {
            let f = draws.iter().filter(|&&x| x == *o).count() as f64 / r as f64;
            assert!((f - p).abs() <= 5.0 / (r as f64).sqrt());
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let s = random_state(6, 8).to_state();
        for b in [basis_jy(6).unwrap(), basis_parity(6, ParityQuadrature::Minus).unwrap(), basis_phase_op(6).unwrap()] {
            let (_, dp) = outcome_distribution_with_derivative(&s, &b, 0.3).unwrap();
            let h = 1e-5;
            let up = outcome_distribution(&s, &b, 0.3 + h).unwrap();
            let dn = outcome_distribution(&s, &b, 0.3 - h).unwrap();
            for k in 0..dp.len() {
                assert!((dp[k] - (up.probs[k] - dn.probs[k]) / (2.0 * h)).abs() < 1e-8);
            }
            let mixed = State::mixed(s.space().clone(), s.density()).unwrap();
            let (_, dpm) = outcome_distribution_with_derivative(&mixed, &b, 0.3).unwrap();
            for k in 0..dp.len() {
                assert!((dp[k] - dpm[k]).abs() < 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn probabilities_sum_to_one(seed in any::<u64>(), n in 1usize..10, phi in -4.0f64..4.0) {
            let s = random_state(n, seed).to_state();
            for b in [basis_jy(n).unwrap(), basis_parity(n, ParityQuadrature::X).unwrap(),
                      basis_parity(n, ParityQuadrature::Plus).unwrap(), basis_phase_op(n).unwrap()] {
                let d = outcome_distribution(&s, &b, phi).unwrap();
                prop_assert!((d.probs.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            }
        }

        #[test]
        fn phase_covariance(seed in any::<u64>(), n in 1usize..8, p1 in -2.0f64..2.0, p2 in -2.0f64..2.0) {
            let s = random_state(n, seed);
            let b = basis_jy(n).unwrap();
            let d1 = outcome_distribution(&s.to_state(), &b, p1 + p2).unwrap();
            let d2 = outcome_distribution(&rotate(&s, Axis::Z, p1).to_state(), &b, p2).unwrap();
            for (a, c) in d1.probs.iter().zip(&d2.probs) {
                prop_assert!((a - c).abs() < 1e-12);
            }
        }
    }
}
