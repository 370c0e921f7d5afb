//! Independent spontaneous emission of every atom at rate 1/T_A: coherences decay
//! as exp(-T/T_A), excited populations as exp(-2T/T_A).
//!
//! The N-atom channel factorizes as
//! E(rho) = sum_k (1 - e^{-2g})^k D_g[Phi^k(rho) / k!],  g = T/T_A,
//! where Phi(rho) = sum_k s-^(k) rho s+^(k) and D_g scales the element between
//! a and b excitations by e^{-g(a+b)}. Every term is positive, so the sum is
//! free of cancellation at any T.

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;

use crate::bounds::{jz, qfi};
use crate::error::{Error, Result};
use crate::frequentist::fisher_information;
use crate::linalg::{binomial, eigh, CMatrix, C64};
use crate::measurement::{spin_along, MeasurementBasis};
use crate::optim::golden_section_min;
use crate::spin::{DickeVector, FullDensity, Space, State, FULL_DENSITY_CAP};
use crate::states::{ghz, ghz_balanced};

/// Largest atom number handled by the block backend.
pub const BLOCK_CAP: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayParams {
    /// T / T_A
    pub t_over_ta: f64,
}

impl DecayParams {
    pub fn new(t_over_ta: f64) -> Result<Self> {
        if !(t_over_ta >= 0.0) || t_over_ta.is_nan() {
            return Err(Error::invalid(format!("decay time must be non-negative, got {t_over_ta}")));
        }
        Ok(DecayParams { t_over_ta })
    }
}

/// Multiplicity of the spin-j irrep in N spin-1/2 particles.
pub fn sector_degeneracy(n: usize, twice_j: usize) -> f64 {
    let k = (n - twice_j) / 2;
    binomial(n, k) - if k == 0 { 0.0 } else { binomial(n, k - 1) }
}

/// Permutation-invariant density rho = sum_j R_j (x) 1_{d_j}, stored as the
/// (2j+1)-dimensional blocks R_j, largest j first.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockDensity {
    n_atoms: usize,
    blocks: Vec<CMatrix>,
}

impl BlockDensity {
    pub fn zeros(n: usize) -> Result<Self> {
        if n == 0 || n > BLOCK_CAP {
            return Err(Error::TooLarge(n, BLOCK_CAP));
        }
        let blocks = Space::all_sectors(n).blocks().iter().map(|&(t, _)| CMatrix::zeros(t + 1, t + 1)).collect();
        Ok(BlockDensity { n_atoms: n, blocks })
    }

    pub fn from_dicke(state: &DickeVector) -> Result<Self> {
        let mut b = Self::zeros(state.n_atoms())?;
        b.blocks[0] = state.amps() * state.amps().adjoint();
        Ok(b)
    }

    /// Blocks from a state on a sector space; each sector present in the
    /// state is read as the multiplicity-averaged block d_j R_j.
    pub fn from_state(state: &State) -> Result<Self> {
        let space = state.space();
        let Space::Sectors { n_atoms, twice_j } = space else {
            return Err(Error::invalid("block densities are built from sector-space states"));
        };
        let mut b = Self::zeros(*n_atoms)?;
        let rho = state.density();
        for ((t, off), &tj) in space.blocks().into_iter().zip(twice_j) {
            let idx = (n_atoms - tj) / 2;
            let d = sector_degeneracy(*n_atoms, tj);
            b.blocks[idx] += rho.view((off, off), (t + 1, t + 1)).unscale(d);
        }
        Ok(b)
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    /// (twice_j, R_j) pairs, largest j first.
    pub fn blocks(&self) -> impl Iterator<Item = (usize, &CMatrix)> {
        self.blocks.iter().map(|b| (b.nrows() - 1, b))
    }

    pub fn degeneracy(&self, twice_j: usize) -> f64 {
        sector_degeneracy(self.n_atoms, twice_j)
    }

    /// sum_j d_j tr R_j
    pub fn trace(&self) -> f64 {
        self.blocks().map(|(t, b)| self.degeneracy(t) * b.trace().re).sum()
    }

    /// Probability of each sector, largest j first.
    pub fn sector_weights(&self) -> Vec<f64> {
        self.blocks().map(|(t, b)| self.degeneracy(t) * b.trace().re).collect()
    }

    /// Smallest eigenvalue over all blocks.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        let mut lo = f64::INFINITY;
        for b in &self.blocks {
            lo = lo.min(eigh(b)?.values.iter().copied().fold(f64::INFINITY, f64::min));
        }
        Ok(lo)
    }

    /// Equivalent state on the all-sector space with blocks d_j R_j. Spectra,
    /// collective expectations, FI and QFI coincide with the full density.
    pub fn to_state(&self) -> Result<State> {
        let space = Space::all_sectors(self.n_atoms);
        let d = space.dim();
        let mut rho = CMatrix::zeros(d, d);
        for ((t, off), b) in space.blocks().into_iter().zip(&self.blocks) {
            rho.view_mut((off, off), (t + 1, t + 1)).copy_from(&b.scale(sector_degeneracy(self.n_atoms, t)));
        }
        State::mixed(space, rho)
    }

    pub fn max_abs_diff(&self, other: &BlockDensity) -> f64 {
        self.blocks.iter().zip(&other.blocks).map(|(a, b)| (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)).fold(0.0, f64::max)
    }
}

/// <j_a, m - 1/2; 1/2, +1/2 | j, m>
fn cg_up(twice_ja: i64, twice_j: i64, m: f64) -> f64 {
    let ja = twice_ja as f64 / 2.0;
    let den = 2.0 * ja + 1.0;
    if twice_j == twice_ja + 1 {
        ((ja + m + 0.5) / den).max(0.0).sqrt()
    } else {
        -((ja - m + 0.5) / den).max(0.0).sqrt()
    }
}

/// <j_a, m + 1/2; 1/2, -1/2 | j, m>
fn cg_down(twice_ja: i64, twice_j: i64, m: f64) -> f64 {
    let ja = twice_ja as f64 / 2.0;
    let den = 2.0 * ja + 1.0;
    if twice_j == twice_ja + 1 {
        ((ja - m + 0.5) / den).max(0.0).sqrt()
    } else {
        ((ja + m + 0.5) / den).max(0.0).sqrt()
    }
}

/// Phi(rho) = sum_k s-^(k) rho s+^(k) on blocks. The last atom is split off,
/// the jump acts on it, and the result is averaged over the multiplicity space.
fn jump_sum(rho: &BlockDensity) -> BlockDensity {
    let n = rho.n_atoms;
    let mut out = BlockDensity::zeros(n).expect("same size as the input");
    let nf = n as f64;
    for (t, block) in rho.blocks() {
        let tj = t as i64;
        for tja in [tj - 1, tj + 1] {
            if tja < 0 || tja > n as i64 - 1 {
                continue;
            }
            let dja = sector_degeneracy(n - 1, tja as usize);
            for tjp in [tja - 1, tja + 1] {
                if tjp < 0 || tjp > n as i64 {
                    continue;
                }
                let dest = (n - tjp as usize) / 2;
                let pref = nf * dja / sector_degeneracy(n, tjp as usize);
                let jp = tjp as f64 / 2.0;
                let j = tj as f64 / 2.0;
                // c(m) e(m - 1) for every source row/column
                let amp: Vec<f64> = (0..=t)
                    .map(|i| {
                        let m = i as f64 - j;
                        if (m - 1.0).abs() > jp + 1e-9 {
                            0.0
                        } else {
                            cg_up(tja, tj, m) * cg_down(tja, tjp, m - 1.0)
                        }
                    })
                    .collect();
                let shift = j - jp; // destination index = source index - 1 - shift
                for a in 0..=t {
                    if amp[a] == 0.0 {
                        continue;
                    }
                    let da = (a as f64 - 1.0 - shift).round() as usize;
                    for b in 0..=t {
                        if amp[b] == 0.0 {
                            continue;
                        }
                        let db = (b as f64 - 1.0 - shift).round() as usize;
                        out.blocks[dest][(da, db)] += block[(a, b)] * (pref * amp[a] * amp[b]);
                    }
                }
            }
        }
    }
    out
}

/// Spontaneous emission on the block representation.
pub fn damp_blocks(rho: &BlockDensity, params: DecayParams) -> BlockDensity {
    let g = params.t_over_ta;
    let n = rho.n_atoms;
    let p = -(-2.0 * g).exp_m1();
    let mut out = BlockDensity::zeros(n).expect("same size as the input");
    let mut term = rho.clone();
    let mut weight = 1.0;
    for k in 0..=n {
        if k > 0 {
            term = jump_sum(&term);
            term.blocks.iter_mut().for_each(|b| *b /= C64::new(k as f64, 0.0));
            weight *= p;
        }
        if weight == 0.0 {
            break;
        }
        for (dst, src) in out.blocks.iter_mut().zip(&term.blocks) {
            let t = src.nrows() - 1;
            // excitations of index i in a spin-j block: i + (N - 2j)/2
            let base = ((n - t) / 2) as f64;
            for a in 0..=t {
                for b in 0..=t {
                    let ex = 2.0 * base + (a + b) as f64;
                    let f = if ex == 0.0 { 1.0 } else { (-g * ex).exp() };
                    dst[(a, b)] += src[(a, b)] * (weight * f);
                }
            }
        }
    }
    out
}

pub fn damp_dicke(state: &DickeVector, params: DecayParams) -> Result<BlockDensity> {
    Ok(damp_blocks(&BlockDensity::from_dicke(state)?, params))
}

/// Exact per-atom Kraus evolution on the 2^N space (bit k set: atom k excited).
pub fn damp_full(rho: &FullDensity, params: DecayParams) -> Result<FullDensity> {
    let n = rho.n_atoms;
    if n > FULL_DENSITY_CAP {
        return Err(Error::TooLarge(n, FULL_DENSITY_CAP));
    }
    let g = params.t_over_ta;
    let coh = (-g).exp();
    let p = -(-2.0 * g).exp_m1();
    let dim = 1usize << n;
    let mut m = rho.matrix.clone();
    for k in 0..n {
        let bit = 1usize << k;
        let mut next = CMatrix::zeros(dim, dim);
        for a in 0..dim {
            let fa = if a & bit != 0 { coh } else { 1.0 };
            for b in 0..dim {
                let fb = if b & bit != 0 { coh } else { 1.0 };
                let mut v = m[(a, b)] * (fa * fb);
                if a & bit == 0 && b & bit == 0 {
                    v += m[(a | bit, b | bit)] * p;
                }
                next[(a, b)] = v;
            }
        }
        m = next;
    }
    Ok(FullDensity { n_atoms: n, matrix: m })
}

/// Blocks of a permutation-invariant full-space density, read out through the
/// projectors onto total spin j and magnetization m:
/// R_j[m, m'] = tr(rho P_{j,m'} J+^{m'-m}) / (d_j * ladder norm).
pub fn blocks_from_full(rho: &FullDensity) -> Result<BlockDensity> {
    let n = rho.n_atoms;
    let space = Space::product(n);
    let jx = space.collective(crate::spin::OpLabel::Jx)?;
    let jy = space.collective(crate::spin::OpLabel::Jy)?;
    let jzm = space.collective(crate::spin::OpLabel::Jz)?;
    let jp = space.collective(crate::spin::OpLabel::JPlus)?;
    let j2 = &jx * &jx + &jy * &jy + &jzm * &jzm;
    let e = eigh(&j2)?;
    let m_values = space.m_values();
    let mut out = BlockDensity::zeros(n)?;
    for (idx, (t, _)) in Space::all_sectors(n).blocks().into_iter().enumerate() {
        let j = t as f64 / 2.0;
        let target = j * (j + 1.0);
        let d = sector_degeneracy(n, t);
        // projector onto the sector, then onto each magnetization
        let cols: Vec<usize> = (0..e.values.len()).filter(|&k| (e.values[k] - target).abs() < 1e-6).collect();
        let mut pj = CMatrix::zeros(1 << n, 1 << n);
        for &k in &cols {
            let v = e.vectors.column(k);
            pj += v * v.adjoint();
        }
        for a in 0..=t {
            for b in a..=t {
                let ma = a as f64 - j;
                let mb = b as f64 - j;
                // P_{j,mb} (J+)^{b-a}
                let mut op = pj.clone();
                for (r, &mr) in m_values.iter().enumerate() {
                    if (mr - mb).abs() > 1e-9 {
                        op.row_mut(r).fill(C64::new(0.0, 0.0));
                    }
                }
                let mut norm = 1.0;
                for s in 0..(b - a) {
                    op = &op * &jp;
                    let m = ma + s as f64;
                    norm *= ((j - m) * (j + m + 1.0)).sqrt();
                }
                let v = crate::linalg::trace_product(&rho.matrix, &op) / (d * norm);
                out.blocks[idx][(a, b)] = v;
                out.blocks[idx][(b, a)] = v.conj();
            }
        }
    }
    Ok(out)
}

/// Parent-Hamiltonian ratios of the squeezed-state family used for decay
/// curves, weakest to strongest squeezing.
pub const SQUEEZED_FAMILY_RATIOS: [f64; 3] = [0.5, 0.1, 0.01];

/// GHZ state whose Jy-resolved signal has maximal slope at phi = 0.
pub fn ghz_for_y_readout(n: usize) -> Result<DickeVector> {
    if n % 2 == 0 {
        ghz_balanced(n)
    } else {
        ghz(n)
    }
}

/// Excitation-resolved Jy measurement on every sector.
pub fn readout_y(n: usize) -> Result<MeasurementBasis> {
    spin_along(&Space::all_sectors(n), FRAC_PI_2)
}

pub fn qfi_after_decay(state: &DickeVector, params: DecayParams) -> Result<f64> {
    let s = damp_dicke(state, params)?.to_state()?;
    qfi(&s, &jz(s.space()))
}

/// Fisher information after decay, for a basis on the all-sector space
/// (Jy-resolved by default).
pub fn fi_after_decay(state: &DickeVector, basis: Option<&MeasurementBasis>, params: DecayParams, phi: f64) -> Result<f64> {
    let s = damp_dicke(state, params)?.to_state()?;
    let default;
    let basis = match basis {
        Some(b) => b,
        None => {
            default = readout_y(state.n_atoms())?;
            &default
        }
    };
    fisher_information(&s, basis, phi)
}

/// QCRB on the Allan variance, normalized as sigma_y^2 omega0^2 tau T_A:
/// Delta^2 / T with Delta^2 = 1/QFI(T) and T in units of T_A.
pub fn allan_qcrb(state: &DickeVector, t_over_ta: f64) -> Result<f64> {
    if !(t_over_ta > 0.0) {
        return Err(Error::invalid("interrogation time must be positive"));
    }
    let q = qfi_after_decay(state, DecayParams::new(t_over_ta)?)?;
    Ok(if q > 0.0 { 1.0 / (q * t_over_ta) } else { f64::INFINITY })
}

/// Interrogation time minimizing the Allan QCRB, searched in log T over [lo, hi].
pub fn allan_optimum(state: &DickeVector, lo: f64, hi: f64) -> Result<(f64, f64)> {
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::invalid("need 0 < lo < hi"));
    }
    // coarse scan, then golden section around the best grid point
    let grid: Vec<f64> = (0..=64).map(|i| lo.ln() + (hi / lo).ln() * i as f64 / 64.0).collect();
    let vals: Vec<f64> = grid.par_iter().map(|&x| allan_qcrb(state, x.exp())).collect::<Result<_>>()?;
    let k = (0..vals.len()).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap_or(0);
    let a = grid[k.saturating_sub(1)];
    let b = grid[(k + 1).min(grid.len() - 1)];
    let (x, v) = golden_section_min(|x| allan_qcrb(state, x.exp()).unwrap_or(f64::INFINITY), a, b, 1e-10);
    Ok((x.exp(), v))
}

/// Values of a quantity on a T grid evaluated in parallel.
pub fn scan_t<F>(grid: &[f64], f: F) -> Result<Vec<f64>>
where
    F: Fn(DecayParams) -> Result<f64> + Sync,
{
    grid.par_iter().map(|&t| f(DecayParams::new(t)?)).collect()
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::rng::{random_pure, stream};
    use crate::spin::embed_full;
    use crate::states::{css_x, sss_ground, xi2, SqueezingParentParams};

    fn full_of(state: &DickeVector) -> FullDensity {
        embed_full(state).unwrap().to_density().unwrap()
    }

    fn random_dicke(n: usize, seed: u64) -> DickeVector {
        DickeVector::new(n, random_pure(n + 1, &mut stream(seed, n as u64))).unwrap()
    }

    #[test]
    fn single_atom_population_decay() {
        let up = DickeVector::dicke(1, 1).unwrap();
        for g in [0.0, 0.1, 0.7, 3.0] {
            let p = DecayParams::new(g).unwrap();
            let b = damp_dicke(&up, p).unwrap();
            let r = &b.blocks[0];
            assert!((r[(1, 1)].re - (-2.0 * g).exp()).abs() < 1e-14);
            let f = damp_full(&full_of(&up), p).unwrap();
            assert!((f.matrix[(1, 1)].re - (-2.0 * g).exp()).abs() < 1e-14);
        }
        let plus = css_x(1).unwrap();
        let b = damp_dicke(&plus, DecayParams::new(0.3).unwrap()).unwrap();
        assert!((b.blocks[0][(0, 1)].norm() - 0.5 * (-0.3f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn identity_and_full_decay() {
        let s = random_dicke(5, 1);
        let b0 = BlockDensity::from_dicke(&s).unwrap();
        assert!(damp_blocks(&b0, DecayParams::new(0.0).unwrap()).max_abs_diff(&b0) < 1e-15);
        let inf = damp_blocks(&b0, DecayParams::new(f64::INFINITY).unwrap());
        let mut ground = BlockDensity::zeros(5).unwrap();
        ground.blocks[0][(0, 0)] = C64::new(1.0, 0.0);
        assert!(inf.max_abs_diff(&ground) < 1e-14);
        let late = damp_blocks(&b0, DecayParams::new(40.0).unwrap());
        assert!(late.max_abs_diff(&ground) < 1e-14);
    }

    #[test]
    fn blocks_match_kraus_oracle() {
        for n in [2, 4, 6] {
            let states = [ghz(n).unwrap(), css_x(n).unwrap(), random_dicke(n, 7)];
            for s in &states {
                for g in [0.05, 0.2, 1.0] {
                    let p = DecayParams::new(g).unwrap();
                    let blocks = damp_dicke(s, p).unwrap();
                    let full = damp_full(&full_of(s), p).unwrap();
                    assert!((crate::linalg::trace_product(&full.matrix, &CMatrix::identity(1 << n, 1 << n)).re - 1.0).abs() < 1e-12);
                    let oracle = blocks_from_full(&full).unwrap();
                    assert!((oracle.trace() - 1.0).abs() < 1e-10, "projection lost weight");
                    let diff = blocks.max_abs_diff(&oracle);
                    assert!(diff < 1e-8, "N = {n}, T = {g}: {diff}");
                }
            }
        }
    }

    #[test]
    fn multi_sector_inputs_match_oracle() {
        let n = 4;
        let s = random_dicke(n, 3);
        let (p1, p2) = (DecayParams::new(0.3).unwrap(), DecayParams::new(0.45).unwrap());
        let blocks = damp_blocks(&damp_dicke(&s, p1).unwrap(), p2);
        let full = damp_full(&damp_full(&full_of(&s), p1).unwrap(), p2).unwrap();
        assert!(blocks.max_abs_diff(&blocks_from_full(&full).unwrap()) < 1e-8);
    }

    #[test]
    fn qfi_matches_full_space() {
        let n = 4;
        for s in [ghz(n).unwrap(), random_dicke(n, 9)] {
            let p = DecayParams::new(0.2).unwrap();
            let full = damp_full(&full_of(&s), p).unwrap().to_state();
            let q_full = qfi(&full, &jz(full.space())).unwrap();
            let q_blocks = qfi_after_decay(&s, p).unwrap();
            assert!((q_full - q_blocks).abs() < 1e-8 * q_full.max(1.0), "{q_full} vs {q_blocks}");
        }
    }

    #[test]
    fn ghz_leaks_to_next_sector() {
        let n = 6;
        let b = damp_dicke(&ghz(n).unwrap(), DecayParams::new(0.01).unwrap()).unwrap();
        let w = b.sector_weights();
        assert!(w[1] > 1e-3, "{w:?}");
        assert!(w[2..].iter().all(|&x| x < w[1] * 1e-1));
        let oracle = blocks_from_full(&damp_full(&full_of(&ghz(n).unwrap()), DecayParams::new(0.01).unwrap()).unwrap()).unwrap();
        for (a, b) in w.iter().zip(oracle.sector_weights()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn semigroup_and_commutation() {
        let s = random_dicke(9, 4);
        let b = BlockDensity::from_dicke(&s).unwrap();
        let (t1, t2) = (0.13, 0.41);
        let two = damp_blocks(&damp_blocks(&b, DecayParams::new(t1).unwrap()), DecayParams::new(t2).unwrap());
        let one = damp_blocks(&b, DecayParams::new(t1 + t2).unwrap());
        assert!(two.max_abs_diff(&one) < 1e-10);
        // phase encoding commutes with the channel
        let phi = 0.37;
        let p = DecayParams::new(0.25).unwrap();
        let a = BlockDensity::from_state(&damp_blocks(&b, p).to_state().unwrap().encode(phi)).unwrap();
        let enc = BlockDensity::from_dicke(&s.to_state().encode(phi).as_dicke().unwrap()).unwrap();
        assert!(a.max_abs_diff(&damp_blocks(&enc, p)) < 1e-10);
    }

    #[test]
    fn noiseless_limits() {
        let s = sss_ground(SqueezingParentParams { n_atoms: 8, ratio: 2.0 }).unwrap();
        let p = DecayParams::new(0.0).unwrap();
        let q0 = crate::bounds::qfi_pure(&s, &crate::spin::collective_op(8, crate::spin::OpLabel::Jz).unwrap()).unwrap();
        assert!((qfi_after_decay(&s, p).unwrap() - q0).abs() < 1e-10);
        let f0 = fisher_information(&s.to_state(), &crate::measurement::basis_jy(8).unwrap(), 0.0).unwrap();
        assert!((fi_after_decay(&s, None, p, 0.0).unwrap() - f0).abs() < 1e-10);
    }

    #[test]
    fn qfi_is_monotone_in_time() {
        let n = 8;
        let mut states = vec![css_x(n).unwrap(), ghz(n).unwrap()];
        for r in [8.0, 1.0, 0.1] {
            states.push(sss_ground(SqueezingParentParams { n_atoms: n, ratio: r }).unwrap());
        }
        let grid: Vec<f64> = (0..20).map(|i| 0.005 * 1.35f64.powi(i)).collect();
        for s in &states {
            let q = scan_t(&grid, |p| qfi_after_decay(s, p)).unwrap();
            for w in q.windows(2) {
                assert!(w[1] <= w[0] + 1e-8, "{q:?}");
            }
        }
    }

    #[test]
    fn fi_below_qfi_after_decay() {
        let n = 6;
        let basis = readout_y(n).unwrap();
        for s in [css_x(n).unwrap(), ghz(n).unwrap(), sss_ground(SqueezingParentParams { n_atoms: n, ratio: 0.5 }).unwrap()] {
            for g in [0.02, 0.1, 0.5] {
                let p = DecayParams::new(g).unwrap();
                for phi in [0.0, 0.1, 0.4] {
                    let f = fi_after_decay(&s, Some(&basis), p, phi).unwrap();
                    let q = qfi_after_decay(&s, p).unwrap();
                    assert!(f <= q * (1.0 + 1e-9) + 1e-12, "{f} > {q}");
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn channel_preserves_trace_and_positivity(seed in 0u64..1_000_000, n in 2usize..12, g in 0.0f64..3.0) {
            let s = random_dicke(n, seed);
            let b = damp_dicke(&s, DecayParams::new(g).unwrap()).unwrap();
            prop_assert!((b.trace() - 1.0).abs() < 1e-10);
            prop_assert!(b.min_eigenvalue().unwrap() > -1e-10);
        }
    }

    fn family(n: usize) -> Vec<DickeVector> {
        SQUEEZED_FAMILY_RATIOS.iter().map(|&r| sss_ground(SqueezingParentParams { n_atoms: n, ratio: r }).unwrap()).collect()
    }

    #[test]
    fn stronger_squeezing_degrades_faster() {
        let n = 8;
        let p = DecayParams::new(0.1).unwrap();
        let fam = family(n);
        let xi: Vec<f64> = fam.iter().map(|s| xi2(s).unwrap()).collect();
        let f: Vec<f64> = fam.iter().map(|s| fi_after_decay(s, None, p, 0.0).unwrap()).collect();
        assert!(xi.windows(2).all(|w| w[1] < w[0]), "{xi:?}");
        assert!(f.windows(2).all(|w| w[1] < w[0]), "{f:?}");
    }

    #[test]
    fn ghz_outlasts_strongest_squeezing() {
        let n = 8;
        let p = DecayParams::new(0.05).unwrap();
        let g = fi_after_decay(&ghz_for_y_readout(n).unwrap(), None, p, 0.0).unwrap();
        let s = fi_after_decay(family(n).last().unwrap(), None, p, 0.0).unwrap();
        assert!(g > s, "{g} vs {s}");
        let g0 = fi_after_decay(&ghz_for_y_readout(n).unwrap(), None, DecayParams::new(0.0).unwrap(), 0.0).unwrap();
        assert!((g0 - 64.0).abs() < 1e-8);
    }

    #[test]
    fn ghz_qfi_closed_form() {
        // only the all-up/all-down coherence carries phase information
        let n = 6;
        for g in [0.01, 0.1, 0.4] {
            let a = (-2.0 * g * n as f64).exp();
            let b = (1.0 - (-2.0 * g).exp()).powi(n as i32);
            let expect = (n * n) as f64 * a / (0.5 * a + 0.5 + 0.5 * b);
            let q = qfi_after_decay(&ghz(n).unwrap(), DecayParams::new(g).unwrap()).unwrap();
            assert!((q - expect).abs() < 1e-9 * expect, "{q} vs {expect}");
        }
    }

    #[test]
    fn allan_optimum_shifts_shorter_for_ghz() {
        let n = 8;
        let (tg, vg) = allan_optimum(&ghz(n).unwrap(), 1e-4, 10.0).unwrap();
        let (tc, vc) = allan_optimum(&css_x(n).unwrap(), 1e-4, 10.0).unwrap();
        assert!(tg < tc, "{tg} vs {tc}");
        assert!(tg > 1e-4 && tc < 10.0);
        for (t, v, s) in [(tg, vg, ghz(n).unwrap()), (tc, vc, css_x(n).unwrap())] {
            assert!(allan_qcrb(&s, t * 0.7).unwrap() > v && allan_qcrb(&s, t * 1.4).unwrap() > v);
        }
    }
}
