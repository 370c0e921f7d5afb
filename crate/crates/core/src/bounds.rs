//! Quantum Fisher information, the symmetric logarithmic derivative and the
//! entanglement-depth witness.

use crate::error::{Error, Result};
use crate::linalg::{diag, eigh, CMatrix, C64, I};
use crate::measurement::{BasisLabel, MeasurementBasis};
use crate::spin::{CollectiveOperator, DickeVector, Space, State};

pub const RANK_CUTOFF: f64 = 1e-12;
const DEGENERACY_TOL: f64 = 1e-9;

/// Eigen-decomposition of a density matrix over the full space.
#[derive(Clone, Debug)]
pub struct SpectralDensity {
    space: Space,
    probs: Vec<f64>,
    states: CMatrix,
}

impl SpectralDensity {
    pub fn from_state(state: &State) -> Result<Self> {
        let e = eigh(&state.density())?;
        let probs = e.values.iter().map(|&p| p.max(0.0)).collect::<Vec<_>>();
        let total: f64 = probs.iter().sum();
        if total <= 0.0 {
            return Err(Error::invalid("density has no support"));
        }
        Ok(SpectralDensity { space: state.space().clone(), probs: probs.iter().map(|p| p / total).collect(), states: e.vectors })
    }

    pub fn from_parts(space: Space, probs: Vec<f64>, states: CMatrix) -> Result<Self> {
        space.check_dim(states.nrows())?;
        if states.ncols() != probs.len() {
            return Err(Error::DimensionMismatch { expected: states.ncols(), got: probs.len() });
        }
        if probs.iter().any(|&p| p < 0.0) || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-10 {
            return Err(Error::invalid("probabilities must be non-negative and sum to 1"));
        }
        let dev = crate::linalg::unitary_deviation(&states);
        if states.ncols() == states.nrows() && dev > 1e-10 {
            return Err(Error::NotUnitary(dev));
        }
        Ok(SpectralDensity { space, probs, states })
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn states(&self) -> &CMatrix {
        &self.states
    }

    pub fn rank(&self) -> usize {
        self.probs.iter().filter(|&&p| p > RANK_CUTOFF).count()
    }

    pub fn density(&self) -> CMatrix {
        let mut scaled = self.states.clone();
        for (k, mut c) in scaled.column_iter_mut().enumerate() {
            c.iter_mut().for_each(|z| *z *= self.probs[k]);
        }
        scaled * self.states.adjoint()
    }

    /// G in the eigenbasis.
    fn rotated(&self, generator: &CMatrix) -> Result<CMatrix> {
        self.space.check_dim(generator.nrows())?;
        Ok(self.states.adjoint() * generator * &self.states)
    }
}

/// Jz on any space.
pub fn jz(space: &Space) -> CMatrix {
    diag(&space.m_values())
}

/// 4 Var(G) for a symmetric pure state.
pub fn qfi_pure(state: &DickeVector, generator: &CollectiveOperator) -> Result<f64> {
    if generator.n_atoms != state.n_atoms() {
        return Err(Error::DimensionMismatch { expected: state.n_atoms(), got: generator.n_atoms });
    }
    Ok(qfi_pure_vec(state.amps(), &generator.matrix))
}

fn qfi_pure_vec(v: &crate::linalg::CVector, g: &CMatrix) -> f64 {
    let gv = g * v;
    let m = v.dotc(&gv).re;
    (4.0 * (gv.norm_squared() - m * m)).max(0.0)
}

/// QFI of a density of arbitrary rank.
pub fn qfi_mixed(rho: &SpectralDensity, generator: &CMatrix) -> Result<f64> {
    qfi_mixed_with_cutoff(rho, generator, RANK_CUTOFF)
}

pub fn qfi_mixed_with_cutoff(rho: &SpectralDensity, generator: &CMatrix, cutoff: f64) -> Result<f64> {
    let g = rho.rotated(generator)?;
    let p = &rho.probs;
    let g2 = rho.states.adjoint() * generator * generator * &rho.states;
    let d = p.len();
    let mut convex = 0.0;
    for k in 0..d {
        if p[k] > 0.0 {
            convex += p[k] * 4.0 * (g2[(k, k)].re - g[(k, k)].re * g[(k, k)].re);
        }
    }
    let mut cross = 0.0;
    for k in 0..d {
        for l in 0..d {
            let s = p[k] + p[l];
            if k != l && s > cutoff {
                cross += 8.0 * p[k] * p[l] / s * g[(k, l)].norm_sqr();
            }
        }
    }
    Ok((convex - cross).max(0.0))
}

/// QFI of any state, through its spectral decomposition when mixed.
pub fn qfi(state: &State, generator: &CMatrix) -> Result<f64> {
    match state {
        State::Pure { space, amps } => {
            space.check_dim(generator.nrows())?;
            Ok(qfi_pure_vec(amps, generator))
        }
        State::Mixed { .. } => qfi_mixed(&SpectralDensity::from_state(state)?, generator),
    }
}

/// Symmetric logarithmic derivative for the encoding exp(-i phi G).
pub fn sld(rho: &SpectralDensity, generator: &CMatrix) -> Result<CMatrix> {
    if rho.rank() == 0 {
        return Err(Error::invalid("density has no support"));
    }
    let g = rho.rotated(generator)?;
    let p = &rho.probs;
    let d = p.len();
    let mut l = CMatrix::zeros(d, d);
    for k in 0..d {
        for j in 0..d {
            let s = p[k] + p[j];
            if s > RANK_CUTOFF {
                // <k|[G, rho]|j> = G_kj (p_j - p_k)
                l[(k, j)] = -I * g[(k, j)] * (p[j] - p[k]) * (2.0 / s);
            }
        }
    }
    let out = &rho.states * l * rho.states.adjoint();
    Ok(crate::linalg::symmetrize(&out))
}

/// Projective measurement in the SLD eigenbasis, outcomes the SLD eigenvalues.
pub fn qcrb_measurement(rho: &SpectralDensity, generator: &CMatrix) -> Result<MeasurementBasis> {
    let l = sld(rho, generator)?;
    let (values, vectors) = eigenbasis_jz_resolved(&l, &rho.space)?;
    MeasurementBasis::from_columns(rho.space.clone(), vectors, values, BasisLabel::Sld)
}

/// Eigenbasis with degenerate eigenspaces split by a secondary diagonalization of Jz.
pub(crate) fn eigenbasis_jz_resolved(a: &CMatrix, space: &Space) -> Result<(Vec<f64>, CMatrix)> {
    let e = eigh(a)?;
    let jz = jz(space);
    let mut vectors = e.vectors;
    let scale = e.values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let d = e.values.len();
    let mut start = 0;
    while start < d {
        let mut end = start + 1;
        while end < d && e.values[end] - e.values[start] <= DEGENERACY_TOL * scale {
            end += 1;
        }
        if end - start > 1 {
            let block = vectors.columns(start, end - start).clone_owned();
            let sub = block.adjoint() * &jz * &block;
            let w = eigh(&crate::linalg::symmetrize(&sub))?;
            vectors.columns_mut(start, end - start).copy_from(&(block * w.vectors));
        }
        start = end;
    }
    Ok((e.values, vectors))
}

/// Largest QFI compatible with groups of at most k entangled atoms.
pub fn depth_bound(k: usize, n: usize) -> f64 {
    let l = n / k;
    (l * k * k + (n - k * l).pow(2)) as f64
}

/// Smallest group size k whose bound accommodates the given QFI.
pub fn entanglement_depth(qfi_value: f64, n: usize) -> Result<usize> {
    let hl = (n * n) as f64;
    if n == 0 || !(qfi_value >= 0.0) || qfi_value > hl * (1.0 + 1e-12) {
        return Err(Error::invalid(format!("QFI {qfi_value} outside [0, N^2] for N = {n}")));
    }
    Ok((1..=n).find(|&k| qfi_value <= depth_bound(k, n) * (1.0 + 1e-12)).unwrap_or(n))
}

/// (lambda_max - lambda_min)^2 of a Hermitian generator.
pub fn generalized_heisenberg(generator: &CMatrix) -> Result<f64> {
    let e = eigh(generator)?;
    match (e.values.first(), e.values.last()) {
        (Some(a), Some(b)) => Ok((b - a) * (b - a)),
        _ => Ok(0.0),
    }
}

/// Residual of the SLD defining equation, -i[G, rho] = (L rho + rho L)/2.
pub fn sld_residual(rho: &SpectralDensity, generator: &CMatrix, l: &CMatrix) -> f64 {
    let r = rho.density();
    let comm = (generator * &r - &r * generator) * (-I);
    let anti = (l * &r + &r * l) * C64::new(0.5, 0.0);
    (comm - anti).iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

/// tr[rho L^2].
pub fn sld_variance(rho: &SpectralDensity, l: &CMatrix) -> f64 {
    let r = rho.density();
    crate::linalg::trace_product(&r, &(l * l)).re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frequentist::fisher_information;
    use crate::linalg::identity;
    use crate::measurement::MeasurementBasis;
    use crate::rng::{random_density, random_pure, random_unitary, stream};
    use crate::spin::{collective_op, rotate, Axis, OpLabel};
    use crate::states::{css_x, ghz};
    use proptest::prelude::*;

    fn spectral(rho: CMatrix, space: Space) -> SpectralDensity {
        SpectralDensity::from_state(&State::mixed(space, rho).unwrap()).unwrap()
    }

    #[test]
    fn pure_values() {
        let n = 10;
        let jz = collective_op(n, OpLabel::Jz).unwrap();
        assert!((qfi_pure(&ghz(n).unwrap(), &jz).unwrap() - 100.0).abs() < 1e-10);
        assert!((qfi_pure(&css_x(n).unwrap(), &jz).unwrap() - 10.0).abs() < 1e-10);
        let d0 = rotate(&DickeVector::dicke(n, n / 2).unwrap(), Axis::X, std::f64::consts::FRAC_PI_2);
        // <Jy^2> = j(j+1)/2 in |j, 0>, rotated into Jz
        let j = n as f64 / 2.0;
        assert!((qfi_pure(&d0, &jz).unwrap() - 4.0 * j * (j + 1.0) / 2.0).abs() < 1e-9);
    }

    #[test]
    fn pure_limit_and_maximally_mixed() {
        let n = 6;
        let g = ghz(n).unwrap();
        let s = spectral(g.to_state().density(), Space::symmetric(n));
        let jz = jz(&Space::symmetric(n));
        assert!((qfi_mixed(&s, &jz).unwrap() - 36.0).abs() < 1e-10);
        let mm = spectral(identity(n + 1).unscale((n + 1) as f64), Space::symmetric(n));
        assert!(qfi_mixed(&mm, &jz).unwrap().abs() < 1e-12);
        assert!(max_abs(&sld(&mm, &jz).unwrap()) < 1e-12);
    }

    fn max_abs(a: &CMatrix) -> f64 {
        crate::linalg::max_abs(a)
    }

    #[test]
    fn sld_two_formulas_agree() {
        let n = 4;
        let sp = Space::symmetric(n);
        let mut r = stream(9, 0);
        let rho = spectral(random_density(n + 1, 3, &mut r), sp.clone());
        let g = jz(&sp);
        let l = sld(&rho, &g).unwrap();
        assert!(crate::linalg::hermitian_deviation(&l) < 1e-10);
        assert!(sld_residual(&rho, &g, &l) < 1e-8);
        assert!((sld_variance(&rho, &l) - qfi_mixed(&rho, &g).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn pure_sld_residual() {
        let n = 5;
        let s = spectral(css_x(n).unwrap().to_state().density(), Space::symmetric(n));
        let g = jz(&Space::symmetric(n));
        assert!(sld_residual(&s, &g, &sld(&s, &g).unwrap()) < 1e-8);
    }

    #[test]
    fn cutoff_stability() {
        let sp = Space::symmetric(6);
        let mut r = stream(4, 0);
        let rho = spectral(random_density(7, 4, &mut r), sp.clone());
        let g = jz(&sp);
        let a = qfi_mixed_with_cutoff(&rho, &g, 1e-10).unwrap();
        let b = qfi_mixed_with_cutoff(&rho, &g, 1e-14).unwrap();
        assert!((a - b).abs() < 1e-8);
    }

    #[test]
    fn sld_measurement_saturates() {
        for (n, st, want) in [(8, ghz(8).unwrap(), 64.0), (8, css_x(8).unwrap(), 8.0)] {
            let s = SpectralDensity::from_state(&st.to_state()).unwrap();
            let b = qcrb_measurement(&s, &jz(&Space::symmetric(n))).unwrap();
            let f = fisher_information(&st.to_state(), &b, 0.0).unwrap();
            assert!((f - want).abs() < 1e-6, "{f} vs {want}");
        }
        let sp = Space::symmetric(4);
        let rho = random_density(5, 5, &mut stream(2, 0));
        let state = State::mixed(sp.clone(), rho).unwrap();
        let s = SpectralDensity::from_state(&state).unwrap();
        let q = qfi_mixed(&s, &jz(&sp)).unwrap();
        let f = fisher_information(&state, &qcrb_measurement(&s, &jz(&sp)).unwrap(), 0.0).unwrap();
        assert!((f - q).abs() < 1e-6);
    }

    #[test]
    fn depth_table() {
        assert_eq!(entanglement_depth(8.0, 8).unwrap(), 1);
        assert_eq!(entanglement_depth(64.0, 8).unwrap(), 8);
        assert_eq!(entanglement_depth(10.0, 4).unwrap(), 3);
        assert_eq!([1, 2, 3, 4].map(|k| depth_bound(k, 4)), [4.0, 8.0, 10.0, 16.0]);
        assert!(entanglement_depth(17.0, 4).is_err());
    }

    #[test]
    fn heisenberg_helper() {
        assert_eq!(generalized_heisenberg(&jz(&Space::symmetric(6))).unwrap(), 36.0);
    }

    #[test]
    fn additivity_on_product_space() {
        let mut r = stream(21, 0);
        for (na, nb) in [(2usize, 3usize), (3, 3), (4, 4)] {
            let ra = random_density(1 << na, 2, &mut r);
            let rb = random_density(1 << nb, 3, &mut r);
            let qa = qfi(&State::mixed(Space::product(na), ra.clone()).unwrap(), &jz(&Space::product(na))).unwrap();
            let qb = qfi(&State::mixed(Space::product(nb), rb.clone()).unwrap(), &jz(&Space::product(nb))).unwrap();
            let joint = ra.kronecker(&rb);
            let sp = Space::product(na + nb);
            let q = qfi(&State::mixed(sp.clone(), joint).unwrap(), &jz(&sp)).unwrap();
            assert!((q - qa - qb).abs() < 1e-8 * q.max(1.0), "{q} vs {}", qa + qb);
        }
    }

    #[test]
    fn fi_never_exceeds_qfi() {
        let mut r = stream(33, 0);
        for trial in 0..100 {
            let n = 2 + trial % 5;
            let sp = Space::symmetric(n);
            let d = n + 1;
            let state = if trial % 2 == 0 {
                State::pure(sp.clone(), random_pure(d, &mut r)).unwrap()
            } else {
                State::mixed(sp.clone(), random_density(d, 1 + trial % d, &mut r)).unwrap()
            };
            let basis = MeasurementBasis::from_columns(
                sp.clone(),
                random_unitary(d, &mut r),
                (0..d).map(|k| k as f64).collect(),
                BasisLabel::Computational,
            )
            .unwrap();
            let f = fisher_information(&state, &basis, 0.0).unwrap();
            let q = qfi(&state, &jz(&sp)).unwrap();
            assert!(f <= q + 1e-8, "trial {trial}: {f} > {q}");
        }
    }

    #[test]
    fn convex_sum_upper_bound() {
        let mut r = stream(34, 0);
        for trial in 0..100 {
            let sp = Space::symmetric(5);
            let rho = spectral(random_density(6, 1 + trial % 6, &mut r), sp.clone());
            let g = jz(&sp);
            let convex: f64 = (0..6)
                .map(|k| rho.probs()[k] * qfi_pure_vec(&rho.states().column(k).clone_owned(), &g))
                .sum();
            assert!(qfi_mixed(&rho, &g).unwrap() <= convex + 1e-10);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn qfi_independent_of_phase(seed in 0u64..1000, phi in -3.0f64..3.0) {
            let sp = Space::symmetric(4);
            let state = State::mixed(sp.clone(), random_density(5, 3, &mut stream(seed, 0))).unwrap();
            let g = jz(&sp);
            let a = qfi(&state, &g).unwrap();
            let b = qfi(&state.encode(phi), &g).unwrap();
            prop_assert!((a - b).abs() <= 1e-10 * a.max(1.0));
        }

        #[test]
        fn sld_residual_small(seed in 0u64..1000, rank in 1usize..6) {
            let sp = Space::symmetric(4);
            let rho = spectral(random_density(5, rank, &mut stream(seed, 1)), sp.clone());
            let g = jz(&sp);
            let l = sld(&rho, &g).unwrap();
            prop_assert!(sld_residual(&rho, &g, &l) <= 1e-8);
        }
    }
}
