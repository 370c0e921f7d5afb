//! Probe-state constructors.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{binomial, eigh, eigh_real, CMatrix, CVector, C64, ZERO};
use crate::optim::{bisect, golden_section_min};
use crate::spin::{
    collective_op, embed_full, expectation, rotate, Axis, DickeVector, FullVector, OpLabel,
    SpinMoments, FULL_VECTOR_CAP,
};

/// Coherent spin state pointing along (polar, azimuth); polar 0 is |M = +N/2>.
pub fn css(n: usize, polar: f64, azimuth: f64) -> Result<DickeVector> {
    if n == 0 {
        return Err(Error::invalid("N must be at least 1"));
    }
    let (c, s) = ((polar / 2.0).cos(), (polar / 2.0).sin());
    let amps = CVector::from_iterator(
        n + 1,
        (0..=n).map(|m| {
            let down = n - m;
            let mag = binomial(n, m).sqrt() * c.powi(m as i32) * s.powi(down as i32);
            C64::from_polar(mag, azimuth * down as f64)
        }),
    );
    DickeVector::normalized(n, amps)
}

/// The x-aligned coherent spin state.
pub fn css_x(n: usize) -> Result<DickeVector> {
    css(n, PI / 2.0, 0.0)
}

/// Control parameter of the squeezing parent Hamiltonian chi Jy^2 + omega Jx.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SqueezingParentParams {
    pub n_atoms: usize,
    pub ratio: f64,
}

/// Ratio small enough that the ground state sits at the squeezing bound to 1e-6.
pub const EXTREME_RATIO: f64 = 1e-5;

fn parent_hamiltonian(p: &SqueezingParentParams) -> Result<CMatrix> {
    let jy = collective_op(p.n_atoms, OpLabel::Jy)?.matrix;
    let jx = collective_op(p.n_atoms, OpLabel::Jx)?.matrix;
    Ok(&jy * &jy + jx.scale(p.ratio))
}

/// Ground state of Jy^2 + ratio Jx with mean spin along +x.
pub fn sss_ground(p: SqueezingParentParams) -> Result<DickeVector> {
    if !(p.ratio.is_finite() && p.ratio >= 0.0) {
        return Err(Error::invalid("squeezing ratio must be finite and non-negative"));
    }
    let n = p.n_atoms;
    let h = parent_hamiltonian(&p)?;
    let e = eigh(&h)?;
    let scale = e.values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let degenerate: Vec<usize> =
        (0..e.values.len()).filter(|&k| e.values[k] - e.values[0] <= 1e-10 * scale).collect();
    let mut v = if degenerate.len() == 1 {
        e.vectors.column(0).clone_owned()
    } else {
        // project the x-CSS onto the ground space
        let reference = css_x(n)?;
        let mut acc = CVector::zeros(n + 1);
        for &k in &degenerate {
            let col = e.vectors.column(k);
            acc += col * col.dotc(reference.amps());
        }
        if acc.norm() < 1e-12 {
            e.vectors.column(0).clone_owned()
        } else {
            acc
        }
    };
    v.unscale_mut(v.norm());
    let mut state = DickeVector::new(n, v)?;
    let jx = collective_op(n, OpLabel::Jx)?;
    if expectation(&state, &jx)? < 0.0 {
        state = rotate(&state, Axis::Z, PI);
    }
    Ok(align_phase(state, &css_x(n)?))
}

/// Multiplies by a global phase making the overlap with `reference` real positive.
fn align_phase(state: DickeVector, reference: &DickeVector) -> DickeVector {
    let ov = reference.overlap(&state);
    if ov.norm() < 1e-14 {
        return state;
    }
    let ph = ov.conj() / ov.norm();
    let n = state.n_atoms();
    DickeVector::new(n, state.into_amps().map(|a| a * ph)).expect("phase change keeps the norm")
}

/// Variances of Jx and Jy for the parent ground state.
fn parent_variances(n: usize, ratio: f64) -> Result<(f64, f64)> {
    let s = sss_ground(SqueezingParentParams { n_atoms: n, ratio })?;
    let vx = crate::spin::variance(&s, &collective_op(n, OpLabel::Jx)?)?;
    let vy = crate::spin::variance(&s, &collective_op(n, OpLabel::Jy)?)?;
    Ok((vx, vy))
}

/// Ratio (omega/chi)* at which the ground state has equal Jx and Jy variances.
pub fn balanced_ratio(n: usize) -> Result<f64> {
    let f = |log_r: f64| -> f64 {
        let (vx, vy) = parent_variances(n, log_r.exp()).expect("parent ground state");
        vy - vx
    };
    let lr = bisect(f, (1e-6f64).ln(), (1e6f64).ln(), 1e-12, 200)?;
    Ok(lr.exp())
}

/// exp(-i chi_t Jz^2) applied to the x-aligned CSS.
pub fn oat_quench(n: usize, chi_t: f64) -> Result<DickeVector> {
    if n < 2 {
        return Err(Error::invalid("one-axis twisting needs N >= 2"));
    }
    let base = css_x(n)?;
    let j = n as f64 / 2.0;
    let amps = CVector::from_iterator(
        n + 1,
        base.amps().iter().enumerate().map(|(k, a)| {
            let m = k as f64 - j;
            a * C64::from_polar(1.0, -chi_t * m * m)
        }),
    );
    DickeVector::new(n, amps)
}

/// Squeezing parameter from collective-spin moments.
///
/// Uses the smallest variance orthogonal to the mean spin.
pub fn xi2_from_moments(n: usize, mom: &SpinMoments) -> Result<f64> {
    let m = mom.mean;
    let len2 = m.iter().map(|x| x * x).sum::<f64>();
    if len2 < 1e-20 {
        return Err(Error::Undefined("mean spin vanishes".into()));
    }
    let len = len2.sqrt();
    let u = [m[0] / len, m[1] / len, m[2] / len];
    // orthonormal frame perpendicular to u
    let seed = if u[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 0.0, 1.0] };
    let dot = seed[0] * u[0] + seed[1] * u[1] + seed[2] * u[2];
    let mut e1 = [seed[0] - dot * u[0], seed[1] - dot * u[1], seed[2] - dot * u[2]];
    let l1 = e1.iter().map(|x| x * x).sum::<f64>().sqrt();
    e1.iter_mut().for_each(|x| *x /= l1);
    let e2 = [u[1] * e1[2] - u[2] * e1[1], u[2] * e1[0] - u[0] * e1[2], u[0] * e1[1] - u[1] * e1[0]];
    let c = mom.covariance();
    let q = |a: &[f64; 3], b: &[f64; 3]| -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for k in 0..3 {
                s += a[i] * c[i][k] * b[k];
            }
        }
        s
    };
    let (a, b, d) = (q(&e1, &e1), q(&e1, &e2), q(&e2, &e2));
    let lam_min = 0.5 * (a + d) - (0.25 * (a - d) * (a - d) + b * b).sqrt();
    Ok(n as f64 * lam_min / len2)
}

pub fn xi2(state: &DickeVector) -> Result<f64> {
    xi2_from_moments(state.n_atoms(), &SpinMoments::of_state(&state.to_state())?)
}

/// Twisting strength minimizing the squeezing parameter, with that minimum.
pub fn oat_optimum(n: usize) -> Result<(f64, f64)> {
    let f = |ct: f64| xi2(&oat_quench(n, ct).expect("valid N")).unwrap_or(f64::INFINITY);
    let grid: Vec<f64> = (0..=600).map(|k| 10f64.powf(-4.0 + 4.0 * k as f64 / 600.0)).collect();
    let vals: Vec<f64> = grid.iter().map(|&c| f(c)).collect();
    let best = (0..grid.len()).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    let (ct, v) = golden_section_min(f, lo, hi, 1e-13);
    Ok((ct, v))
}

/// (|M=+N/2> + |M=-N/2>)/sqrt 2.
pub fn ghz(n: usize) -> Result<DickeVector> {
    if n == 0 {
        return Err(Error::invalid("N must be at least 1"));
    }
    let mut amps = CVector::zeros(n + 1);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    amps[0] = C64::new(h, 0.0);
    amps[n] = C64::new(h, 0.0);
    DickeVector::new(n, amps)
}

/// GHZ state pre-rotated by pi/(2N) about z so that its x-parity signal is
/// -sin(N phi), odd about phi = 0.
pub fn ghz_balanced(n: usize) -> Result<DickeVector> {
    Ok(rotate(&ghz(n)?, Axis::Z, PI / (2.0 * n as f64)))
}

/// Sine state with amplitudes proportional to sin(pi (m+1)/(N+2)), m = M + N/2.
pub fn sine_state(n: usize) -> Result<DickeVector> {
    if n == 0 {
        return Err(Error::invalid("N must be at least 1"));
    }
    let norm = (2.0 / (n as f64 + 2.0)).sqrt();
    let amps = CVector::from_iterator(
        n + 1,
        (0..=n).map(|m| C64::new(norm * (PI * (m as f64 + 1.0) / (n as f64 + 2.0)).sin(), 0.0)),
    );
    DickeVector::normalized(n, amps)
}

/// Phase state exp(-i Phi_k Jz)|Phi_0>, Phi_k = 2 pi k/(N+1), k in {-N/2, ..., N/2}.
pub fn phase_state(n: usize, k: f64) -> Result<DickeVector> {
    if n == 0 {
        return Err(Error::invalid("N must be at least 1"));
    }
    let idx = k + n as f64 / 2.0;
    if (idx - idx.round()).abs() > 1e-9 || idx < -1e-9 || idx > n as f64 + 1e-9 {
        return Err(Error::invalid(format!("phase-state index {k} outside the grid for N = {n}")));
    }
    let phi = 2.0 * PI * k / (n as f64 + 1.0);
    let a = (n as f64 + 1.0).sqrt().recip();
    let seed = DickeVector::new(n, CVector::from_element(n + 1, C64::new(a, 0.0)))?;
    Ok(rotate(&seed, Axis::Z, phi))
}

/// Unit-spaced lattice with open boundaries.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeGeometry {
    pub extents: Vec<usize>,
}

impl LatticeGeometry {
    pub fn new(extents: Vec<usize>) -> Result<Self> {
        if extents.is_empty() || extents.len() > 3 || extents.contains(&0) {
            return Err(Error::invalid("lattice needs 1 to 3 positive extents"));
        }
        let n: usize = extents.iter().product();
        if n > FULL_VECTOR_CAP {
            return Err(Error::TooLarge(n, FULL_VECTOR_CAP));
        }
        Ok(LatticeGeometry { extents })
    }

    pub fn chain(n: usize) -> Result<Self> {
        Self::new(vec![n])
    }

    pub fn n_sites(&self) -> usize {
        self.extents.iter().product()
    }

    pub fn positions(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.n_sites());
        for idx in 0..self.n_sites() {
            let mut rem = idx;
            let mut p = Vec::with_capacity(self.extents.len());
            for &e in &self.extents {
                p.push((rem % e) as f64);
                rem /= e;
            }
            out.push(p);
        }
        out
    }

    /// Pair couplings 1/r^alpha for k < l.
    pub fn couplings(&self, alpha: f64) -> Vec<(usize, usize, f64)> {
        let pos = self.positions();
        let mut out = Vec::new();
        for k in 0..pos.len() {
            for l in k + 1..pos.len() {
                let r = pos[k].iter().zip(&pos[l]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                let c = r.powf(-alpha);
                if c != 0.0 {
                    out.push((k, l, c));
                }
            }
        }
        out
    }
}

/// Spectral data for quenches under
/// sum_{k<l} [chi s_k.s_l + (chi - chi') z_k z_l] / r_kl^alpha,
/// block-diagonal in the excitation number.
#[derive(Clone, Debug)]
pub struct XxzQuench {
    n: usize,
    sectors: Vec<XxzSector>,
}

#[derive(Clone, Debug)]
struct XxzSector {
    states: Vec<usize>,
    values: Vec<f64>,
    vectors: Option<DMatrix<f64>>,
    initial: Vec<C64>,
}

impl XxzQuench {
    pub fn new(geometry: &LatticeGeometry, alpha: f64, chi: f64, chi_prime: f64) -> Result<Self> {
        if !(alpha >= 0.0) {
            return Err(Error::invalid("alpha must be non-negative"));
        }
        let n = geometry.n_sites();
        let pairs = geometry.couplings(alpha);
        let start = embed_full(&css_x(n)?)?;
        let mut by_count: Vec<Vec<usize>> = vec![Vec::new(); n + 1];
        for b in 0..1usize << n {
            by_count[b.count_ones() as usize].push(b);
        }
        let zz = 2.0 * chi - chi_prime;
        let mut sectors = Vec::with_capacity(n + 1);
        for states in by_count {
            let d = states.len();
            let mut h = DMatrix::<f64>::zeros(d, d);
            let index: std::collections::HashMap<usize, usize> =
                states.iter().enumerate().map(|(i, &b)| (b, i)).collect();
            for (i, &b) in states.iter().enumerate() {
                for &(k, l, c) in &pairs {
                    let sk = if b >> k & 1 == 1 { 1.0 } else { -1.0 };
                    let sl = if b >> l & 1 == 1 { 1.0 } else { -1.0 };
                    h[(i, i)] += c * zz * sk * sl;
                    if chi != 0.0 && sk != sl {
                        let flipped = b ^ (1 << k) ^ (1 << l);
                        h[(index[&flipped], i)] += 2.0 * chi * c;
                    }
                }
            }
            let initial: Vec<C64> = states.iter().map(|&b| start.amps[b]).collect();
            let diagonal = chi == 0.0 || d == 1;
            let (values, vectors) = if diagonal {
                ((0..d).map(|i| h[(i, i)]).collect(), None)
            } else {
                let (v, m) = eigh_real(&h);
                (v, Some(m))
            };
            sectors.push(XxzSector { states, values, vectors, initial });
        }
        Ok(XxzQuench { n, sectors })
    }

    pub fn n_atoms(&self) -> usize {
        self.n
    }

    /// State after evolving the x-aligned CSS for time t.
    pub fn state_at(&self, t: f64) -> Result<FullVector> {
        let mut amps = CVector::zeros(1 << self.n);
        for s in &self.sectors {
            match &s.vectors {
                None => {
                    for (i, &b) in s.states.iter().enumerate() {
                        amps[b] = s.initial[i] * C64::from_polar(1.0, -s.values[i] * t);
                    }
                }
                Some(v) => {
                    let d = s.states.len();
                    let mut coeff = vec![ZERO; d];
                    for (k, c) in coeff.iter_mut().enumerate() {
                        let mut acc = ZERO;
                        for i in 0..d {
                            acc += s.initial[i] * v[(i, k)];
                        }
                        *c = acc * C64::from_polar(1.0, -s.values[k] * t);
                    }
                    for (i, &b) in s.states.iter().enumerate() {
                        let mut acc = ZERO;
                        for k in 0..d {
                            acc += coeff[k] * v[(i, k)];
                        }
                        amps[b] = acc;
                    }
                }
            }
        }
        let norm = amps.norm();
        FullVector::new(self.n, amps.unscale(norm))
    }

    /// Energy of the initial state, conserved along the quench.
    pub fn energy(&self) -> f64 {
        let mut e = 0.0;
        for s in &self.sectors {
            match &s.vectors {
                None => {
                    e += s.initial.iter().zip(&s.values).map(|(a, v)| a.norm_sqr() * v).sum::<f64>();
                }
                Some(v) => {
                    for k in 0..s.states.len() {
                        let mut acc = ZERO;
                        for i in 0..s.states.len() {
                            acc += s.initial[i] * v[(i, k)];
                        }
                        e += acc.norm_sqr() * s.values[k];
                    }
                }
            }
        }
        e
    }

    pub fn xi2_at(&self, t: f64) -> Result<f64> {
        xi2_full(&self.state_at(t)?)
    }

    /// Minimum squeezing parameter over t in (0, t_max].
    pub fn min_xi2(&self, t_max: f64, samples: usize) -> Result<(f64, f64)> {
        let grid: Vec<f64> = (1..=samples).map(|k| t_max * k as f64 / samples as f64).collect();
        let vals: Vec<f64> = grid.iter().map(|&t| self.xi2_at(t).unwrap_or(f64::INFINITY)).collect();
        let best = (0..grid.len()).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
        let lo = if best == 0 { 0.0 } else { grid[best - 1] };
        let hi = grid[(best + 1).min(grid.len() - 1)];
        Ok(golden_section_min(|t| self.xi2_at(t).unwrap_or(f64::INFINITY), lo, hi, 1e-10))
    }
}

/// Energy expectation of a full-space state under the same Hamiltonian, evaluated directly.
pub fn xxz_energy(geometry: &LatticeGeometry, alpha: f64, chi: f64, chi_prime: f64, state: &FullVector) -> f64 {
    let mut e = 0.0;
    let zz = 2.0 * chi - chi_prime;
    for (k, l, c) in geometry.couplings(alpha) {
        for (b, a) in state.amps.iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            let sk = if b >> k & 1 == 1 { 1.0 } else { -1.0 };
            let sl = if b >> l & 1 == 1 { 1.0 } else { -1.0 };
            e += c * zz * sk * sl * a.norm_sqr();
            if chi != 0.0 && sk != sl {
                let f = b ^ (1 << k) ^ (1 << l);
                e += (2.0 * chi * c * state.amps[f].conj() * a).re;
            }
        }
    }
    e
}

/// Evolves the embedded x-CSS for time t.
pub fn xxz_quench(geometry: &LatticeGeometry, alpha: f64, chi: f64, chi_prime: f64, t: f64) -> Result<FullVector> {
    XxzQuench::new(geometry, alpha, chi, chi_prime)?.state_at(t)
}

pub fn xi2_full(state: &FullVector) -> Result<f64> {
    xi2_from_moments(state.n_atoms, &SpinMoments::of_full(state)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::variance;

    #[test]
    fn css_amplitudes() {
        let s = css(2, PI / 2.0, 0.0).unwrap();
        let want = [0.5, std::f64::consts::FRAC_1_SQRT_2, 0.5];
        for (a, w) in s.amps().iter().zip(want) {
            assert!((a - C64::new(w, 0.0)).norm() < 1e-15);
        }
        let up = css(7, 0.0, 0.3).unwrap();
        assert!((up.amps()[7].norm() - 1.0).abs() < 1e-15);
        for n in [1, 5, 16] {
            let x = css_x(n).unwrap();
            let jx = expectation(&x, &collective_op(n, OpLabel::Jx).unwrap()).unwrap();
            assert!((jx - n as f64 / 2.0).abs() < 1e-12);
            for l in [OpLabel::Jy, OpLabel::Jz] {
                let op = collective_op(n, l).unwrap();
                assert!(expectation(&x, &op).unwrap().abs() < 1e-12);
                assert!((variance(&x, &op).unwrap() - n as f64 / 4.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn extreme_squeezing_bound() {
        for n in [4usize, 8, 16] {
            let s = sss_ground(SqueezingParentParams { n_atoms: n, ratio: EXTREME_RATIO }).unwrap();
            let x = xi2(&s).unwrap();
            assert!((x - 2.0 / (n as f64 + 2.0)).abs() < 1e-6, "N={n}: {x}");
            let dicke_y = rotate(&DickeVector::dicke(n, n / 2).unwrap(), Axis::X, PI / 2.0);
            assert!(s.fidelity(&dicke_y) > 1.0 - 1e-6);
        }
    }

    #[test]
    fn strong_field_gives_css() {
        let s = sss_ground(SqueezingParentParams { n_atoms: 10, ratio: 1e6 }).unwrap();
        assert!((xi2(&s).unwrap() - 1.0).abs() < 1e-3);
        assert!(s.fidelity(&css_x(10).unwrap()) > 1.0 - 1e-6);
    }

    #[test]
    fn sss_is_ground_state() {
        for ratio in [0.0, 0.01, 0.5, 3.0] {
            let p = SqueezingParentParams { n_atoms: 8, ratio };
            // undo the reorientation to +x before comparing with the spectrum
            let s = rotate(&sss_ground(p).unwrap(), Axis::Z, PI);
            let h = parent_hamiltonian(&p).unwrap();
            let e = eigh(&h).unwrap();
            let energy = s.amps().dotc(&(&h * s.amps())).re;
            assert!(energy <= e.values[1] + 1e-10);
            assert!((energy - e.values[0]).abs() < 1e-10);
        }
    }

    #[test]
    fn balanced_ratio_equalizes_variances() {
        let r = balanced_ratio(8).unwrap();
        let (vx, vy) = parent_variances(8, r).unwrap();
        assert!((vx - vy).abs() < 1e-8, "{vx} {vy}");
    }

    #[test]
    fn oat_starts_from_css() {
        let s = oat_quench(6, 0.0).unwrap();
        assert!((s.fidelity(&css_x(6).unwrap()) - 1.0).abs() < 1e-14);
        assert!((xi2(&s).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ghz_properties() {
        for n in 1..10 {
            let g = ghz(n).unwrap();
            assert_eq!(g.amps().iter().filter(|a| a.norm() > 0.0).count(), 2);
            let v = variance(&g, &collective_op(n, OpLabel::Jz).unwrap()).unwrap();
            assert!((v - (n * n) as f64 / 4.0).abs() < 1e-12);
        }
        assert!((ghz(1).unwrap().fidelity(&css_x(1).unwrap()) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn phase_states_orthonormal() {
        let n = 8;
        let states: Vec<DickeVector> =
            (0..=n).map(|i| phase_state(n, i as f64 - n as f64 / 2.0).unwrap()).collect();
        for a in 0..=n {
            for b in 0..=n {
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((states[a].overlap(&states[b]).norm() - want).abs() < 1e-12);
            }
        }
        for amp in states[n / 2].amps().iter() {
            assert!((amp.norm() - 1.0 / 3.0).abs() < 1e-15);
        }
        assert!(phase_state(n, 5.0).is_err());
        assert!(phase_state(3, 0.5).is_ok());
        assert!(phase_state(3, 0.0).is_err());
    }

    #[test]
    fn sine_state_symmetric() {
        let s = sine_state(16).unwrap();
        assert!((s.amps().norm() - 1.0).abs() < 1e-14);
        for k in 0..=16 {
            assert!((s.amps()[k] - s.amps()[16 - k]).norm() < 1e-14);
            assert!(s.amps()[k].re > 0.0);
        }
    }

    #[test]
    fn heisenberg_point_keeps_css() {
        let g = LatticeGeometry::chain(6).unwrap();
        let q = XxzQuench::new(&g, 1.5, 0.7, 0.7).unwrap();
        for t in [0.0, 0.3, 1.1, 4.0] {
            assert!((q.xi2_at(t).unwrap() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn all_to_all_ising_is_oat() {
        let n = 8;
        let g = LatticeGeometry::chain(n).unwrap();
        let chi_p = 0.37;
        let q = XxzQuench::new(&g, 0.0, 0.0, chi_p).unwrap();
        for t in [0.05, 0.2, 0.9] {
            let oat = xi2(&oat_quench(n, -2.0 * chi_p * t).unwrap()).unwrap();
            assert!((q.xi2_at(t).unwrap() - oat).abs() < 1e-8);
        }
    }

    #[test]
    fn quench_conserves_energy() {
        let g = LatticeGeometry::new(vec![3, 2]).unwrap();
        let (a, c, cp) = (1.0, 0.4, 1.3);
        let q = XxzQuench::new(&g, a, c, cp).unwrap();
        let e0 = q.energy();
        for t in [0.0, 0.4, 2.5] {
            let e = xxz_energy(&g, a, c, cp, &q.state_at(t).unwrap());
            assert!((e - e0).abs() < 1e-10);
        }
    }
}
