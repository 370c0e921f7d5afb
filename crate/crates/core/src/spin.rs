//! Collective spin algebra in the Dicke basis, sector sums and the full product space.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use once_cell::sync::Lazy;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    binomial, eigh_unchecked, spectral_map, CMatrix, CVector, Eigh, C64, ONE, ZERO,
};

/// Largest atom number for full-space state vectors.
pub const FULL_VECTOR_CAP: usize = 14;
/// Largest atom number for full-space density matrices.
pub const FULL_DENSITY_CAP: usize = 10;

const NORM_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OpLabel {
    Jx,
    Jy,
    Jz,
    JPlus,
    JMinus,
    Custom,
}

impl From<Axis> for OpLabel {
    fn from(a: Axis) -> Self {
        match a {
            Axis::X => OpLabel::Jx,
            Axis::Y => OpLabel::Jy,
            Axis::Z => OpLabel::Jz,
        }
    }
}

/// Hilbert space carrying a representation of the collective spin.
///
/// `Sectors` is a direct sum of spin-j irreducible blocks, each stored with
/// ascending magnetization. The symmetric subspace is the single sector
/// j = N/2. `Product` is the 2^N computational basis, bit k set meaning atom k
/// is excited.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Space {
    Sectors { n_atoms: usize, twice_j: Vec<usize> },
    Product { n_atoms: usize },
}

impl Space {
    pub fn symmetric(n: usize) -> Self {
        Space::Sectors { n_atoms: n, twice_j: vec![n] }
    }

    /// Every total-spin sector of N spin-1/2 particles, largest j first.
    pub fn all_sectors(n: usize) -> Self {
        let twice_j = (0..=n / 2).map(|k| n - 2 * k).collect();
        Space::Sectors { n_atoms: n, twice_j }
    }

    pub fn product(n: usize) -> Self {
        Space::Product { n_atoms: n }
    }

    pub fn n_atoms(&self) -> usize {
        match self {
            Space::Sectors { n_atoms, .. } | Space::Product { n_atoms } => *n_atoms,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Space::Sectors { twice_j, .. } => twice_j.iter().map(|t| t + 1).sum(),
            Space::Product { n_atoms } => 1usize << n_atoms,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        matches!(self, Space::Sectors { n_atoms, twice_j } if twice_j.len() == 1 && twice_j[0] == *n_atoms)
    }

    /// (twice_j, offset) for each sector block.
    pub fn blocks(&self) -> Vec<(usize, usize)> {
        match self {
            Space::Sectors { twice_j, .. } => {
                let mut off = 0;
                twice_j
                    .iter()
                    .map(|&t| {
                        let b = (t, off);
                        off += t + 1;
                        b
                    })
                    .collect()
            }
            Space::Product { .. } => vec![],
        }
    }

    /// Diagonal of Jz.
    pub fn m_values(&self) -> Vec<f64> {
        match self {
            Space::Sectors { twice_j, .. } => twice_j
                .iter()
                .flat_map(|&t| (0..=t).map(move |k| k as f64 - t as f64 / 2.0))
                .collect(),
            Space::Product { n_atoms } => {
                let half = *n_atoms as f64 / 2.0;
                (0..1usize << n_atoms).map(|b| b.count_ones() as f64 - half).collect()
            }
        }
    }

    /// Eigenvalue of the x-parity on sector j relative to the |M> <-> |-M> swap.
    pub fn sector_parity(&self, twice_j: usize) -> f64 {
        let k = (self.n_atoms() - twice_j) / 2;
        if k % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Dense matrix of a collective operator on this space.
    pub fn collective(&self, label: OpLabel) -> Result<CMatrix> {
        match self {
            Space::Sectors { .. } => {
                let mut m = CMatrix::zeros(self.dim(), self.dim());
                for (t, off) in self.blocks() {
                    let b = spin_matrix(t, label)?;
                    m.view_mut((off, off), (t + 1, t + 1)).copy_from(&b);
                }
                Ok(m)
            }
            Space::Product { n_atoms } => {
                if *n_atoms > FULL_DENSITY_CAP {
                    return Err(Error::TooLarge(*n_atoms, FULL_DENSITY_CAP));
                }
                let d = self.dim();
                let mut m = CMatrix::zeros(d, d);
                for b in 0..d {
                    let mut e = CVector::zeros(d);
                    e[b] = ONE;
                    m.set_column(b, &apply_collective_full(*n_atoms, label, &e)?);
                }
                Ok(m)
            }
        }
    }

    pub fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got });
        }
        Ok(())
    }
}

/// Spin-j matrix of `label` in the ascending |j, m> basis.
pub fn spin_matrix(twice_j: usize, label: OpLabel) -> Result<CMatrix> {
    let d = twice_j + 1;
    let j = twice_j as f64 / 2.0;
    let mut plus = CMatrix::zeros(d, d);
    for k in 0..twice_j {
        let m = k as f64 - j;
        plus[(k + 1, k)] = C64::new((j * (j + 1.0) - m * (m + 1.0)).max(0.0).sqrt(), 0.0);
    }
    Ok(match label {
        OpLabel::Jz => CMatrix::from_diagonal(&CVector::from_iterator(
            d,
            (0..d).map(|k| C64::new(k as f64 - j, 0.0)),
        )),
        OpLabel::JPlus => plus,
        OpLabel::JMinus => plus.adjoint(),
        OpLabel::Jx => (&plus + plus.adjoint()).scale(0.5),
        OpLabel::Jy => (&plus - plus.adjoint()) * C64::new(0.0, -0.5),
        OpLabel::Custom => return Err(Error::invalid("custom operators have no canonical matrix")),
    })
}

/// Applies a collective operator to a full-space vector without forming the matrix.
pub fn apply_collective_full(n: usize, label: OpLabel, v: &CVector) -> Result<CVector> {
    let d = 1usize << n;
    if v.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: v.len() });
    }
    let half = n as f64 / 2.0;
    let mut out = CVector::zeros(d);
    let (wp, wm) = match label {
        OpLabel::Jz => {
            for b in 0..d {
                out[b] = v[b] * (b.count_ones() as f64 - half);
            }
            return Ok(out);
        }
        OpLabel::JPlus => (ONE, ZERO),
        OpLabel::JMinus => (ZERO, ONE),
        OpLabel::Jx => (C64::new(0.5, 0.0), C64::new(0.5, 0.0)),
        OpLabel::Jy => (C64::new(0.0, -0.5), C64::new(0.0, 0.5)),
        OpLabel::Custom => return Err(Error::invalid("custom operators have no canonical matrix")),
    };
    for b in 0..d {
        let a = v[b];
        if a == ZERO {
            continue;
        }
        for k in 0..n {
            let bit = 1usize << k;
            if b & bit == 0 {
                out[b | bit] += wp * a;
            } else {
                out[b & !bit] += wm * a;
            }
        }
    }
    Ok(out)
}

/// Collective operator on the symmetric subspace of N atoms.
#[derive(Clone, Debug)]
pub struct CollectiveOperator {
    pub n_atoms: usize,
    pub matrix: CMatrix,
    pub label: OpLabel,
}

impl CollectiveOperator {
    pub fn custom(n_atoms: usize, matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != n_atoms + 1 || matrix.ncols() != n_atoms + 1 {
            return Err(Error::DimensionMismatch { expected: n_atoms + 1, got: matrix.nrows() });
        }
        Ok(CollectiveOperator { n_atoms, matrix, label: OpLabel::Custom })
    }
}

pub fn collective_op(n: usize, label: OpLabel) -> Result<CollectiveOperator> {
    if n == 0 {
        return Err(Error::invalid("N must be at least 1"));
    }
    Ok(CollectiveOperator { n_atoms: n, matrix: spin_matrix(n, label)?, label })
}

/// Pure state in the symmetric subspace, amplitudes ascending in M.
#[derive(Clone, Debug, PartialEq)]
pub struct DickeVector {
    n_atoms: usize,
    amps: CVector,
}

impl DickeVector {
    pub fn new(n_atoms: usize, amps: CVector) -> Result<Self> {
        if n_atoms == 0 {
            return Err(Error::invalid("N must be at least 1"));
        }
        if amps.len() != n_atoms + 1 {
            return Err(Error::DimensionMismatch { expected: n_atoms + 1, got: amps.len() });
        }
        let norm2 = amps.norm_squared();
        if (norm2 - 1.0).abs() > NORM_TOL {
            return Err(Error::invalid(format!("state norm^2 = {norm2}, expected 1")));
        }
        Ok(DickeVector { n_atoms, amps })
    }

    /// Normalizes `amps` before validation.
    pub fn normalized(n_atoms: usize, amps: CVector) -> Result<Self> {
        let n = amps.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::invalid("cannot normalize a zero vector"));
        }
        Self::new(n_atoms, amps.unscale(n))
    }

    /// Dicke state |M> given by its excitation count m = M + N/2.
    pub fn dicke(n_atoms: usize, excitations: usize) -> Result<Self> {
        if excitations > n_atoms {
            return Err(Error::invalid("excitation count exceeds N"));
        }
        let mut amps = CVector::zeros(n_atoms + 1);
        amps[excitations] = ONE;
        Self::new(n_atoms, amps)
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn amps(&self) -> &CVector {
        &self.amps
    }

    pub fn into_amps(self) -> CVector {
        self.amps
    }

    pub fn space(&self) -> Space {
        Space::symmetric(self.n_atoms)
    }

    pub fn overlap(&self, other: &DickeVector) -> C64 {
        self.amps.dotc(&other.amps)
    }

    pub fn fidelity(&self, other: &DickeVector) -> f64 {
        self.overlap(other).norm_sqr()
    }

    pub fn to_state(&self) -> State {
        State::Pure { space: self.space(), amps: self.amps.clone() }
    }
}

impl From<&DickeVector> for State {
    fn from(d: &DickeVector) -> Self {
        d.to_state()
    }
}

impl From<DickeVector> for State {
    fn from(d: DickeVector) -> Self {
        State::Pure { space: Space::symmetric(d.n_atoms), amps: d.amps }
    }
}

/// Probe state on any supported space.
#[derive(Clone, Debug, PartialEq)]
pub enum State {
    Pure { space: Space, amps: CVector },
    Mixed { space: Space, rho: CMatrix },
}

impl State {
    pub fn pure(space: Space, amps: CVector) -> Result<Self> {
        space.check_dim(amps.len())?;
        let n2 = amps.norm_squared();
        if (n2 - 1.0).abs() > 1e-10 {
            return Err(Error::invalid(format!("state norm^2 = {n2}, expected 1")));
        }
        Ok(State::Pure { space, amps })
    }

    pub fn mixed(space: Space, rho: CMatrix) -> Result<Self> {
        space.check_dim(rho.nrows())?;
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(Error::invalid(format!("density trace = {tr}, expected 1")));
        }
        let dev = crate::linalg::hermitian_deviation(&rho);
        if dev > 1e-10 {
            return Err(Error::NotHermitian(dev));
        }
        Ok(State::Mixed { space, rho })
    }

    pub fn space(&self) -> &Space {
        match self {
            State::Pure { space, .. } | State::Mixed { space, .. } => space,
        }
    }

    pub fn dim(&self) -> usize {
        self.space().dim()
    }

    pub fn n_atoms(&self) -> usize {
        self.space().n_atoms()
    }

    pub fn density(&self) -> CMatrix {
        match self {
            State::Pure { amps, .. } => amps * amps.adjoint(),
            State::Mixed { rho, .. } => rho.clone(),
        }
    }

    /// <O> for a Hermitian matrix on this space.
    pub fn expect(&self, op: &CMatrix) -> C64 {
        match self {
            State::Pure { amps, .. } => amps.dotc(&(op * amps)),
            State::Mixed { rho, .. } => crate::linalg::trace_product(rho, op),
        }
    }

    /// Applies the phase encoding exp(-i phi Jz).
    pub fn encode(&self, phi: f64) -> State {
        let m = self.space().m_values();
        match self {
            State::Pure { space, amps } => State::Pure {
                space: space.clone(),
                amps: CVector::from_iterator(
                    amps.len(),
                    amps.iter().zip(&m).map(|(a, &mm)| a * C64::from_polar(1.0, -phi * mm)),
                ),
            },
            State::Mixed { space, rho } => {
                let ph: Vec<C64> = m.iter().map(|&mm| C64::from_polar(1.0, -phi * mm)).collect();
                State::Mixed {
                    space: space.clone(),
                    rho: CMatrix::from_fn(rho.nrows(), rho.ncols(), |a, b| rho[(a, b)] * ph[a] * ph[b].conj()),
                }
            }
        }
    }

    /// Applies a unitary U: |psi> -> U|psi>, rho -> U rho U^dagger.
    pub fn transform(&self, u: &CMatrix) -> Result<State> {
        self.space().check_dim(u.nrows())?;
        Ok(match self {
            State::Pure { space, amps } => State::Pure { space: space.clone(), amps: u * amps },
            State::Mixed { space, rho } => State::Mixed { space: space.clone(), rho: u * rho * u.adjoint() },
        })
    }

    pub fn as_dicke(&self) -> Option<DickeVector> {
        match self {
            State::Pure { space, amps } if space.is_symmetric() => {
                DickeVector::new(space.n_atoms(), amps.clone()).ok()
            }
            _ => None,
        }
    }

    pub fn trace(&self) -> f64 {
        match self {
            State::Pure { amps, .. } => amps.norm_squared(),
            State::Mixed { rho, .. } => rho.trace().re,
        }
    }
}

static ROTATIONS: Lazy<RwLock<HashMap<(usize, Axis), Arc<Eigh>>>> = Lazy::new(|| RwLock::new(HashMap::new()));

fn rotation_generator(twice_j: usize, axis: Axis) -> Arc<Eigh> {
    if let Some(e) = ROTATIONS.read().expect("rotation cache poisoned").get(&(twice_j, axis)) {
        return e.clone();
    }
    let m = spin_matrix(twice_j, axis.into()).expect("axis labels have matrices");
    let e = Arc::new(eigh_unchecked(&m));
    ROTATIONS.write().expect("rotation cache poisoned").insert((twice_j, axis), e.clone());
    e
}

/// exp(-i angle J_axis) on a sector space.
pub fn rotation_matrix(space: &Space, axis: Axis, angle: f64) -> Result<CMatrix> {
    let d = space.dim();
    if axis == Axis::Z {
        let m = space.m_values();
        return Ok(CMatrix::from_diagonal(&CVector::from_iterator(
            d,
            m.iter().map(|&x| C64::from_polar(1.0, -angle * x)),
        )));
    }
    match space {
        Space::Sectors { .. } => {
            let mut u = CMatrix::zeros(d, d);
            for (t, off) in space.blocks() {
                let e = rotation_generator(t, axis);
                let b = spectral_map(&e, |l| C64::from_polar(1.0, -angle * l));
                u.view_mut((off, off), (t + 1, t + 1)).copy_from(&b);
            }
            Ok(u)
        }
        Space::Product { n_atoms } => {
            if *n_atoms > FULL_DENSITY_CAP {
                return Err(Error::TooLarge(*n_atoms, FULL_DENSITY_CAP));
            }
            crate::linalg::unitary_propagator(&space.collective(axis.into())?, angle)
        }
    }
}

/// exp(-i angle J_axis)|state>.
pub fn rotate(state: &DickeVector, axis: Axis, angle: f64) -> DickeVector {
    let amps = match axis {
        Axis::Z => {
            let j = state.n_atoms as f64 / 2.0;
            CVector::from_iterator(
                state.amps.len(),
                state.amps.iter().enumerate().map(|(k, a)| a * C64::from_polar(1.0, -angle * (k as f64 - j))),
            )
        }
        _ => {
            let u = rotation_matrix(&state.space(), axis, angle).expect("sector rotation");
            &u * &state.amps
        }
    };
    DickeVector { n_atoms: state.n_atoms, amps }
}

pub fn rotate_state(state: &State, axis: Axis, angle: f64) -> Result<State> {
    if axis == Axis::Z {
        return Ok(state.encode(angle));
    }
    state.transform(&rotation_matrix(state.space(), axis, angle)?)
}

/// Pure state on the 2^N computational basis.
#[derive(Clone, Debug, PartialEq)]
pub struct FullVector {
    pub n_atoms: usize,
    pub amps: CVector,
}

impl FullVector {
    pub fn new(n_atoms: usize, amps: CVector) -> Result<Self> {
        if n_atoms > FULL_VECTOR_CAP {
            return Err(Error::TooLarge(n_atoms, FULL_VECTOR_CAP));
        }
        if amps.len() != 1usize << n_atoms {
            return Err(Error::DimensionMismatch { expected: 1 << n_atoms, got: amps.len() });
        }
        let n2 = amps.norm_squared();
        if (n2 - 1.0).abs() > NORM_TOL {
            return Err(Error::invalid(format!("state norm^2 = {n2}, expected 1")));
        }
        Ok(FullVector { n_atoms, amps })
    }

    pub fn to_density(&self) -> Result<FullDensity> {
        if self.n_atoms > FULL_DENSITY_CAP {
            return Err(Error::TooLarge(self.n_atoms, FULL_DENSITY_CAP));
        }
        Ok(FullDensity { n_atoms: self.n_atoms, matrix: &self.amps * self.amps.adjoint() })
    }

    pub fn to_state(&self) -> State {
        State::Pure { space: Space::product(self.n_atoms), amps: self.amps.clone() }
    }
}

/// Density matrix on the 2^N computational basis.
#[derive(Clone, Debug, PartialEq)]
pub struct FullDensity {
    pub n_atoms: usize,
    pub matrix: CMatrix,
}

impl FullDensity {
    pub fn new(n_atoms: usize, matrix: CMatrix) -> Result<Self> {
        if n_atoms > FULL_DENSITY_CAP {
            return Err(Error::TooLarge(n_atoms, FULL_DENSITY_CAP));
        }
        State::mixed(Space::product(n_atoms), matrix.clone())?;
        Ok(FullDensity { n_atoms, matrix })
    }

    pub fn to_state(&self) -> State {
        State::Mixed { space: Space::product(self.n_atoms), rho: self.matrix.clone() }
    }
}

/// Symmetric Dicke state mapped into the computational basis.
pub fn embed_full(state: &DickeVector) -> Result<FullVector> {
    let n = state.n_atoms;
    if n > FULL_VECTOR_CAP {
        return Err(Error::TooLarge(n, FULL_VECTOR_CAP));
    }
    let norms: Vec<f64> = (0..=n).map(|k| binomial(n, k).sqrt().recip()).collect();
    let amps = CVector::from_iterator(1 << n, (0..1usize << n).map(|b| {
        let k = b.count_ones() as usize;
        state.amps[k] * norms[k]
    }));
    Ok(FullVector { n_atoms: n, amps })
}

/// Symmetric component of a full-space state and the norm lost outside it.
pub fn project_dicke(state: &FullVector) -> Result<(DickeVector, f64)> {
    let n = state.n_atoms;
    let mut amps = CVector::zeros(n + 1);
    for (b, a) in state.amps.iter().enumerate() {
        amps[b.count_ones() as usize] += a;
    }
    for k in 0..=n {
        amps[k] = amps[k].unscale(binomial(n, k).sqrt());
    }
    let kept = amps.norm_squared();
    let leakage = (1.0 - kept).max(0.0);
    if kept < 1e-300 {
        return Err(Error::Undefined("state has no symmetric component".into()));
    }
    Ok((DickeVector { n_atoms: n, amps: amps.unscale(kept.sqrt()) }, leakage))
}

/// Anything carrying a collective-spin expectation value.
pub trait SpinExpectation {
    fn dim(&self) -> usize;
    fn expect_matrix(&self, op: &CMatrix) -> C64;
}

impl SpinExpectation for DickeVector {
    fn dim(&self) -> usize {
        self.amps.len()
    }
    fn expect_matrix(&self, op: &CMatrix) -> C64 {
        self.amps.dotc(&(op * &self.amps))
    }
}

impl SpinExpectation for State {
    fn dim(&self) -> usize {
        State::dim(self)
    }
    fn expect_matrix(&self, op: &CMatrix) -> C64 {
        self.expect(op)
    }
}

impl SpinExpectation for FullDensity {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }
    fn expect_matrix(&self, op: &CMatrix) -> C64 {
        crate::linalg::trace_product(&self.matrix, op)
    }
}

pub fn expectation<S: SpinExpectation>(state: &S, op: &CollectiveOperator) -> Result<f64> {
    if state.dim() != op.matrix.nrows() {
        return Err(Error::DimensionMismatch { expected: op.matrix.nrows(), got: state.dim() });
    }
    Ok(state.expect_matrix(&op.matrix).re)
}

pub fn variance<S: SpinExpectation>(state: &S, op: &CollectiveOperator) -> Result<f64> {
    let mean = expectation(state, op)?;
    let sq = &op.matrix * &op.matrix;
    Ok(state.expect_matrix(&sq).re - mean * mean)
}

/// First and symmetrized second moments of (Jx, Jy, Jz).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinMoments {
    pub mean: [f64; 3],
    pub second: [[f64; 3]; 3],
}

impl SpinMoments {
    pub fn covariance(&self) -> [[f64; 3]; 3] {
        let mut c = self.second;
        for (a, row) in c.iter_mut().enumerate() {
            for (b, x) in row.iter_mut().enumerate() {
                *x -= self.mean[a] * self.mean[b];
            }
        }
        c
    }

    pub fn of_state(state: &State) -> Result<Self> {
        let space = state.space();
        let ops = [
            space.collective(OpLabel::Jx)?,
            space.collective(OpLabel::Jy)?,
            space.collective(OpLabel::Jz)?,
        ];
        match state {
            State::Pure { amps, .. } => {
                let w: Vec<CVector> = ops.iter().map(|o| o * amps).collect();
                Ok(Self::from_images(amps, &w))
            }
            State::Mixed { rho, .. } => {
                let mut mean = [0.0; 3];
                let mut second = [[0.0; 3]; 3];
                for a in 0..3 {
                    mean[a] = crate::linalg::trace_product(rho, &ops[a]).re;
                    for b in 0..3 {
                        second[a][b] = crate::linalg::trace_product(rho, &(&ops[a] * &ops[b])).re;
                    }
                }
                Ok(SpinMoments { mean, second })
            }
        }
    }

    pub fn of_full(state: &FullVector) -> Result<Self> {
        let n = state.n_atoms;
        let w = [
            apply_collective_full(n, OpLabel::Jx, &state.amps)?,
            apply_collective_full(n, OpLabel::Jy, &state.amps)?,
            apply_collective_full(n, OpLabel::Jz, &state.amps)?,
        ];
        Ok(Self::from_images(&state.amps, &w))
    }

    fn from_images(v: &CVector, w: &[CVector]) -> Self {
        let mut mean = [0.0; 3];
        let mut second = [[0.0; 3]; 3];
        for a in 0..3 {
            mean[a] = v.dotc(&w[a]).re;
            for b in 0..3 {
                second[a][b] = w[a].dotc(&w[b]).re;
            }
        }
        SpinMoments { mean, second }
    }
}

/// Dicke-basis J+ element sqrt(j(j+1) - m(m+1)).
pub fn ladder_coefficient(twice_j: usize, twice_m: i64) -> f64 {
    let j = twice_j as f64 / 2.0;
    let m = twice_m as f64 / 2.0;
    (j * (j + 1.0) - m * (m + 1.0)).max(0.0).sqrt()
}
