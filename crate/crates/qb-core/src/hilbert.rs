//! Hilbert-space layouts, collective-spin and bosonic operators, basis
//! states, tensor products, and partial traces.
//!
//! Only the maximal-spin sector `S = N/2` of the battery is represented:
//! every operator used here commutes with the total spin, so the dynamics
//! never leaves it. Joint-space indexing is battery-first,
//! `index = m_index * (n_max + 1) + n`.

use nalgebra::{DMatrix, DVector};

use crate::linalg;
use crate::{C64, Error, Result};

/// Tolerance at which an operator is flagged Hermitian.
pub const HERMITICITY_TOL: f64 = 1e-12;

/// Symmetric (Dicke) sector of `N` two-level cells; dimension `N + 1`.
///
/// Basis label `m_index` in `0..=N` means the Dicke state
/// `|S = N/2, m = -N/2 + m_index>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SpinSector {
    n_cells: usize,
}

impl SpinSector {
    pub fn new(n_cells: usize) -> Result<Self> {
        if n_cells == 0 {
            return Err(Error::InvalidParam("spin sector needs at least one cell".into()));
        }
        Ok(Self { n_cells })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn dim(&self) -> usize {
        self.n_cells + 1
    }

    /// Total spin `S = N/2`.
    pub fn spin(&self) -> f64 {
        self.n_cells as f64 / 2.0
    }

    /// z-projection of basis state `m_index`.
    pub fn m_z(&self, m_index: usize) -> f64 {
        -self.spin() + m_index as f64
    }
}

/// Truncated bosonic mode with photon numbers `0..=n_max`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FockSpace {
    n_max: usize,
}

impl FockSpace {
    pub fn new(n_max: usize) -> Self {
        Self { n_max }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.n_max + 1
    }
}

/// Battery (x) charger product space, battery-first ordering.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct JointSpace {
    pub spin: SpinSector,
    pub fock: FockSpace,
}

impl JointSpace {
    pub fn new(spin: SpinSector, fock: FockSpace) -> Self {
        Self { spin, fock }
    }

    pub fn dim(&self) -> usize {
        self.spin.dim() * self.fock.dim()
    }

    /// Flat index of `|m_index, n>`.
    pub fn index(&self, m_index: usize, n: usize) -> usize {
        m_index * self.fock.dim() + n
    }
}

/// Hilbert-space descriptor attached to every operator and state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Layout {
    Spin(SpinSector),
    Fock(FockSpace),
    Joint(JointSpace),
}

impl Layout {
    pub fn dim(&self) -> usize {
        match self {
            Layout::Spin(s) => s.dim(),
            Layout::Fock(f) => f.dim(),
            Layout::Joint(j) => j.dim(),
        }
    }

    pub(crate) fn expect_same(&self, other: &Layout) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::LayoutMismatch { expected: format!("{self}"), found: format!("{other}") })
        }
    }
}

impl std::fmt::Display for Layout {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Layout::Spin(s) => write!(f, "spin(N={})", s.n_cells()),
            Layout::Fock(k) => write!(f, "fock(n_max={})", k.n_max()),
            Layout::Joint(j) => {
                write!(f, "joint(N={}, n_max={})", j.spin.n_cells(), j.fock.n_max())
            }
        }
    }
}

/// Dense complex operator tagged with its layout.
#[derive(Clone, Debug)]
pub struct Operator {
    layout: Layout,
    data: DMatrix<C64>,
    hermitian: bool,
}

impl Operator {
    /// Wraps a square matrix; the Hermiticity flag is measured against
    /// [`HERMITICITY_TOL`].
    pub fn new(layout: Layout, data: DMatrix<C64>) -> Result<Self> {
        if data.nrows() != data.ncols() {
            return Err(Error::InvalidParam(format!(
                "operator must be square, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        if data.nrows() != layout.dim() {
            return Err(Error::LayoutMismatch {
                expected: format!("{layout} (dim {})", layout.dim()),
                found: format!("matrix of dim {}", data.nrows()),
            });
        }
        let hermitian = linalg::hermiticity_deviation(&data) < HERMITICITY_TOL;
        Ok(Self { layout, data, hermitian })
    }

    /// Like [`Operator::new`] but fails unless the matrix is Hermitian.
    pub fn hermitian(layout: Layout, data: DMatrix<C64>) -> Result<Self> {
        let op = Self::new(layout, data)?;
        if !op.hermitian {
            return Err(Error::NotHermitian(format!(
                "deviation {:.3e} exceeds {:.0e}",
                linalg::hermiticity_deviation(&op.data),
                HERMITICITY_TOL
            )));
        }
        Ok(op)
    }

    pub fn zeros(layout: Layout) -> Self {
        let d = layout.dim();
        Self { layout, data: DMatrix::zeros(d, d), hermitian: true }
    }

    pub fn identity(layout: Layout) -> Self {
        let d = layout.dim();
        Self { layout, data: DMatrix::identity(d, d), hermitian: true }
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn data(&self) -> &DMatrix<C64> {
        &self.data
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn adjoint(&self) -> Operator {
        Self { layout: self.layout, data: self.data.adjoint(), hermitian: self.hermitian }
    }

    pub fn scale(&self, factor: C64) -> Operator {
        Operator::new(self.layout, self.data.map(|v| v * factor)).expect("same shape")
    }

    pub fn add(&self, other: &Operator) -> Result<Operator> {
        self.layout.expect_same(&other.layout)?;
        Operator::new(self.layout, &self.data + &other.data)
    }

    pub fn sub(&self, other: &Operator) -> Result<Operator> {
        self.layout.expect_same(&other.layout)?;
        Operator::new(self.layout, &self.data - &other.data)
    }

    pub fn matmul(&self, other: &Operator) -> Result<Operator> {
        self.layout.expect_same(&other.layout)?;
        Operator::new(self.layout, &self.data * &other.data)
    }

    /// `[self, other] = self*other - other*self`.
    pub fn commutator(&self, other: &Operator) -> Result<Operator> {
        self.layout.expect_same(&other.layout)?;
        Operator::new(self.layout, &self.data * &other.data - &other.data * &self.data)
    }

    pub fn apply(&self, state: &PureState) -> Result<PureState> {
        self.layout.expect_same(&state.layout)?;
        Ok(PureState { layout: self.layout, amplitudes: &self.data * &state.amplitudes })
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |acc, v| acc.max(v.norm()))
    }
}

/// Complex amplitude vector over a layout.
#[derive(Clone, Debug)]
pub struct PureState {
    layout: Layout,
    amplitudes: DVector<C64>,
}

impl PureState {
    /// Wraps an amplitude vector. The norm must already be within `1e-8`
    /// of one; states are never silently renormalized.
    pub fn new(layout: Layout, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != layout.dim() {
            return Err(Error::LayoutMismatch {
                expected: format!("{layout} (dim {})", layout.dim()),
                found: format!("vector of dim {}", amplitudes.len()),
            });
        }
        let state = Self { layout, amplitudes };
        let drift = (state.norm() - 1.0).abs();
        if drift > 1e-8 {
            return Err(Error::InvalidState(format!("norm deviates from 1 by {drift:.3e}")));
        }
        Ok(state)
    }

    pub(crate) fn from_parts(layout: Layout, amplitudes: DVector<C64>) -> Self {
        Self { layout, amplitudes }
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn inner(&self, other: &PureState) -> Result<C64> {
        self.layout.expect_same(&other.layout)?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// `|psi><psi|` as a density matrix.
    pub fn to_density(&self) -> DensityMatrix {
        let d = self.amplitudes.len();
        let mut rho = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                rho[(i, j)] = self.amplitudes[i] * self.amplitudes[j].conj();
            }
        }
        DensityMatrix { layout: self.layout, data: rho }
    }
}

/// Hermitian, unit-trace, positive-semidefinite matrix over a layout.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    layout: Layout,
    data: DMatrix<C64>,
}

impl DensityMatrix {
    /// Validates all invariants: Hermiticity to `1e-10`, trace within
    /// `1e-8` of one, smallest eigenvalue at least `-1e-10`.
    pub fn try_new(layout: Layout, data: DMatrix<C64>) -> Result<Self> {
        if data.nrows() != data.ncols() || data.nrows() != layout.dim() {
            return Err(Error::LayoutMismatch {
                expected: format!("{layout} (dim {})", layout.dim()),
                found: format!("matrix {}x{}", data.nrows(), data.ncols()),
            });
        }
        let rho = Self { layout, data };
        rho.validate(1e-10, 1e-8, -1e-10)?;
        Ok(rho)
    }

    pub(crate) fn from_parts(layout: Layout, data: DMatrix<C64>) -> Self {
        Self { layout, data }
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn data(&self) -> &DMatrix<C64> {
        &self.data
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.data.diagonal().sum()
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        linalg::hermiticity_deviation(&self.data)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::min_eigenvalue(&self.data)
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::eigvalsh(&self.data)
    }

    pub fn validate(&self, herm_tol: f64, trace_tol: f64, min_eig_floor: f64) -> Result<()> {
        let dev = self.hermiticity_deviation();
        if dev > herm_tol {
            return Err(Error::InvalidState(format!("Hermiticity deviation {dev:.3e}")));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > trace_tol || tr.im.abs() > trace_tol {
            return Err(Error::InvalidState(format!("trace {tr} deviates from 1")));
        }
        let lo = self.min_eigenvalue();
        if lo < min_eig_floor {
            return Err(Error::InvalidState(format!("negative eigenvalue {lo:.3e}")));
        }
        Ok(())
    }
}

/// Collective spin operators on a sector.
pub struct SpinOps {
    pub sz: Operator,
    pub sp: Operator,
    pub sm: Operator,
    pub sx: Operator,
}

/// Builds `S_z`, `S_+`, `S_-`, and `S_x = (S_+ + S_-)/2` on the maximal
/// sector: `S_z` is diagonal with entries `-N/2 + m_index` and
/// `S_+|S,m> = sqrt(S(S+1) - m(m+1)) |S,m+1>`.
pub fn collective_spin_ops(sector: SpinSector) -> SpinOps {
    let d = sector.dim();
    let s = sector.spin();
    let mut sz = DMatrix::<C64>::zeros(d, d);
    let mut sp = DMatrix::<C64>::zeros(d, d);
    for m_index in 0..d {
        let m = sector.m_z(m_index);
        sz[(m_index, m_index)] = C64::new(m, 0.0);
        if m_index + 1 < d {
            let amp = (s * (s + 1.0) - m * (m + 1.0)).sqrt();
            sp[(m_index + 1, m_index)] = C64::new(amp, 0.0);
        }
    }
    let sm = sp.adjoint();
    let sx = (&sp + &sm).scale(0.5);
    let layout = Layout::Spin(sector);
    SpinOps {
        sz: Operator::new(layout, sz).expect("layout fits"),
        sp: Operator::new(layout, sp).expect("layout fits"),
        sm: Operator::new(layout, sm).expect("layout fits"),
        sx: Operator::new(layout, sx).expect("layout fits"),
    }
}

/// Bosonic ladder operators on a truncated Fock space.
pub struct FockOps {
    pub annihilate: Operator,
    pub create: Operator,
    pub number: Operator,
}

/// Builds `c`, `c^dagger`, and the number operator; `c|n> = sqrt(n)|n-1>`.
/// Requires `n_max >= 1` so the ladder is non-trivial.
pub fn fock_ops(space: FockSpace) -> Result<FockOps> {
    if space.n_max() < 1 {
        return Err(Error::InvalidParam("fock_ops needs n_max >= 1".into()));
    }
    let d = space.dim();
    let mut c = DMatrix::<C64>::zeros(d, d);
    let mut num = DMatrix::<C64>::zeros(d, d);
    for n in 0..d {
        num[(n, n)] = C64::new(n as f64, 0.0);
        if n > 0 {
            c[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
        }
    }
    let cdag = c.adjoint();
    let layout = Layout::Fock(space);
    Ok(FockOps {
        annihilate: Operator::new(layout, c).expect("layout fits"),
        create: Operator::new(layout, cdag).expect("layout fits"),
        number: Operator::new(layout, num).expect("layout fits"),
    })
}

/// Kronecker product in battery-first ordering. `a` must live on a spin
/// sector and `b` on a Fock space.
pub fn tensor(a: &Operator, b: &Operator) -> Result<Operator> {
    let (spin, fock) = match (a.layout(), b.layout()) {
        (Layout::Spin(s), Layout::Fock(f)) => (s, f),
        (la, lb) => {
            return Err(Error::LayoutMismatch {
                expected: "spin (x) fock".into(),
                found: format!("{la} (x) {lb}"),
            });
        }
    };
    let joint = JointSpace::new(spin, fock);
    Operator::new(Layout::Joint(joint), a.data().kronecker(b.data()))
}

/// Unit basis vector `|m_index, n>` on the joint space.
pub fn basis_state(joint: JointSpace, m_index: usize, n: usize) -> Result<PureState> {
    if m_index >= joint.spin.dim() {
        return Err(Error::OutOfRange(format!(
            "m_index {m_index} outside 0..={}",
            joint.spin.n_cells()
        )));
    }
    if n >= joint.fock.dim() {
        return Err(Error::OutOfRange(format!("n {n} outside 0..={}", joint.fock.n_max())));
    }
    let mut amps = DVector::zeros(joint.dim());
    amps[joint.index(m_index, n)] = C64::new(1.0, 0.0);
    Ok(PureState::from_parts(Layout::Joint(joint), amps))
}

/// Unit basis vector `|m_index>` on a bare spin sector.
pub fn spin_basis_state(sector: SpinSector, m_index: usize) -> Result<PureState> {
    if m_index >= sector.dim() {
        return Err(Error::OutOfRange(format!("m_index {m_index} outside 0..={}", sector.n_cells())));
    }
    let mut amps = DVector::zeros(sector.dim());
    amps[m_index] = C64::new(1.0, 0.0);
    Ok(PureState::from_parts(Layout::Spin(sector), amps))
}

/// Reduced battery state of a joint density matrix:
/// `(rho_b)_{m m'} = sum_n <m,n|rho|m',n>`.
pub fn partial_trace_battery(rho: &DensityMatrix) -> Result<DensityMatrix> {
    let joint = expect_joint(rho.layout())?;
    let db = joint.spin.dim();
    let df = joint.fock.dim();
    let mut out = DMatrix::<C64>::zeros(db, db);
    for m in 0..db {
        for mp in 0..db {
            let mut acc = C64::new(0.0, 0.0);
            for n in 0..df {
                acc += rho.data()[(joint.index(m, n), joint.index(mp, n))];
            }
            out[(m, mp)] = acc;
        }
    }
    Ok(DensityMatrix::from_parts(Layout::Spin(joint.spin), out))
}

/// Reduced battery state of a joint pure state, without forming the joint
/// density matrix.
pub fn partial_trace_battery_pure(psi: &PureState) -> Result<DensityMatrix> {
    let joint = expect_joint(psi.layout())?;
    let db = joint.spin.dim();
    let df = joint.fock.dim();
    let amps = psi.amplitudes();
    let mut out = DMatrix::<C64>::zeros(db, db);
    for m in 0..db {
        for mp in 0..db {
            let mut acc = C64::new(0.0, 0.0);
            for n in 0..df {
                acc += amps[joint.index(m, n)] * amps[joint.index(mp, n)].conj();
            }
            out[(m, mp)] = acc;
        }
    }
    Ok(DensityMatrix::from_parts(Layout::Spin(joint.spin), out))
}

fn expect_joint(layout: Layout) -> Result<JointSpace> {
    match layout {
        Layout::Joint(j) => Ok(j),
        other => Err(Error::LayoutMismatch { expected: "joint space".into(), found: format!("{other}") }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn re(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn rejects_empty_sector() {
        assert!(SpinSector::new(0).is_err());
    }

    #[test]
    fn spin_half_sz() {
        let ops = collective_spin_ops(SpinSector::new(1).unwrap());
        assert_abs_diff_eq!(ops.sz.data()[(0, 0)].re, -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(ops.sz.data()[(1, 1)].re, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn ladder_matrix_element_n2() {
        // S_+ |1,-1> = sqrt(2) |1,0>
        let ops = collective_spin_ops(SpinSector::new(2).unwrap());
        assert_abs_diff_eq!(ops.sp.data()[(1, 0)].re, 2.0_f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn sz_extremes_n8() {
        let ops = collective_spin_ops(SpinSector::new(8).unwrap());
        let evs: Vec<f64> = (0..9).map(|k| ops.sz.data()[(k, k)].re).collect();
        assert_abs_diff_eq!(evs.iter().cloned().fold(f64::MIN, f64::max), 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(evs.iter().cloned().fold(f64::MAX, f64::min), -4.0, epsilon = 1e-15);
    }

    #[test]
    fn commutation_relations_across_sizes() {
        // [Sz, S+] = S+ and Sx = (S+ + S-)/2 for N = 1..=12.
        for n in 1..=12 {
            let ops = collective_spin_ops(SpinSector::new(n).unwrap());
            let comm = ops.sz.commutator(&ops.sp).unwrap();
            let dev = comm.sub(&ops.sp).unwrap().max_abs();
            assert!(dev < 1e-12, "N={n}: [Sz,S+] deviation {dev:.3e}");
            let sm_check = ops.sp.adjoint().sub(&ops.sm).unwrap().max_abs();
            assert!(sm_check < 1e-15);
        }
    }

    #[test]
    fn fock_ladder() {
        let ops = fock_ops(FockSpace::new(2)).unwrap();
        // c|2> = sqrt(2)|1>
        assert_abs_diff_eq!(ops.annihilate.data()[(1, 2)].re, 2.0_f64.sqrt(), epsilon = 1e-15);
        // c|0> = 0
        for i in 0..3 {
            assert_eq!(ops.annihilate.data()[(i, 0)], re(0.0));
        }
        // number eigenvalues 0..=n_max
        for n in 0..3 {
            assert_abs_diff_eq!(ops.number.data()[(n, n)].re, n as f64, epsilon = 1e-15);
        }
    }

    #[test]
    fn fock_commutator_truncation_corner() {
        for n_max in [1usize, 3, 9, 24] {
            let ops = fock_ops(FockSpace::new(n_max)).unwrap();
            let comm = ops.annihilate.commutator(&ops.create).unwrap();
            let d = n_max + 1;
            for i in 0..d {
                for j in 0..d {
                    let want = if i == j && i < n_max {
                        1.0
                    } else if i == j {
                        // truncation artifact at the (n_max, n_max) corner
                        -(n_max as f64)
                    } else {
                        0.0
                    };
                    assert_abs_diff_eq!(comm.data()[(i, j)].re, want, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn tensor_identities() {
        let i2 = Operator::identity(Layout::Spin(SpinSector::new(1).unwrap()));
        let i3 = Operator::identity(Layout::Fock(FockSpace::new(2)));
        let prod = tensor(&i2, &i3).unwrap();
        assert_eq!(prod.dim(), 6);
        assert!(prod.sub(&Operator::identity(prod.layout())).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn tensor_factorization_property() {
        // (A (x) I)(I (x) B) = A (x) B to 1e-12 across sector sizes.
        for n in [1usize, 2, 5, 12] {
            let n_max = 3 * n;
            let spin = SpinSector::new(n).unwrap();
            let fock = FockSpace::new(n_max);
            let sops = collective_spin_ops(spin);
            let fops = fock_ops(fock).unwrap();
            let a = &sops.sx;
            let b = fops.annihilate.add(&fops.create).unwrap();
            let lhs = tensor(a, &Operator::identity(Layout::Fock(fock)))
                .unwrap()
                .matmul(&tensor(&Operator::identity(Layout::Spin(spin)), &b).unwrap())
                .unwrap();
            let rhs = tensor(a, &b).unwrap();
            assert!(lhs.sub(&rhs).unwrap().max_abs() < 1e-12, "N={n}");
        }
    }

    #[test]
    fn tensor_matches_hand_built_4x4() {
        // N = 1, n_max = 1: Sx (x) (c + c^dag) laid out by hand in the
        // battery-first basis {|0,0>, |0,1>, |1,0>, |1,1>}.
        let spin = SpinSector::new(1).unwrap();
        let fock = FockSpace::new(1);
        let sops = collective_spin_ops(spin);
        let fops = fock_ops(fock).unwrap();
        let x = fops.annihilate.add(&fops.create).unwrap();
        let got = tensor(&sops.sx, &x).unwrap();
        #[rustfmt::skip]
        let want = DMatrix::from_row_slice(4, 4, &[
            re(0.0), re(0.0), re(0.0), re(0.5),
            re(0.0), re(0.0), re(0.5), re(0.0),
            re(0.0), re(0.5), re(0.0), re(0.0),
            re(0.5), re(0.0), re(0.0), re(0.0),
        ]);
        assert!((got.data() - want).iter().all(|v| v.norm() < 1e-15));
    }

    #[test]
    fn sz_embedding_scales_basis_states() {
        let spin = SpinSector::new(4).unwrap();
        let fock = FockSpace::new(3);
        let joint = JointSpace::new(spin, fock);
        let sops = collective_spin_ops(spin);
        let szi = tensor(&sops.sz, &Operator::identity(Layout::Fock(fock))).unwrap();
        for m_index in 0..spin.dim() {
            for n in 0..fock.dim() {
                let psi = basis_state(joint, m_index, n).unwrap();
                let out = szi.apply(&psi).unwrap();
                let idx = joint.index(m_index, n);
                assert_abs_diff_eq!(out.amplitudes()[idx].re, spin.m_z(m_index), epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn basis_state_layout_and_norm() {
        let joint = JointSpace::new(SpinSector::new(8).unwrap(), FockSpace::new(16));
        // the paper's starting point: battery drained, charger at |N>
        let psi = basis_state(joint, 0, 8).unwrap();
        assert_abs_diff_eq!(psi.norm(), 1.0, epsilon = 1e-15);
        assert_eq!(psi.amplitudes()[joint.index(0, 8)], re(1.0));

        let excited = basis_state(JointSpace::new(SpinSector::new(1).unwrap(), FockSpace::new(1)), 1, 0).unwrap();
        assert_abs_diff_eq!(excited.norm(), 1.0, epsilon = 1e-15);

        assert!(basis_state(joint, 9, 0).is_err());
        assert!(basis_state(joint, 0, 17).is_err());
    }

    #[test]
    fn partial_trace_product_state() {
        let joint = JointSpace::new(SpinSector::new(2).unwrap(), FockSpace::new(2));
        let psi = basis_state(joint, 1, 2).unwrap();
        let rho_b = partial_trace_battery_pure(&psi).unwrap();
        assert_abs_diff_eq!(rho_b.data()[(1, 1)].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(rho_b.trace().re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn partial_trace_entangled_state() {
        // (|0,1> + |1,0>)/sqrt(2) reduces to diag(1/2, 1/2).
        let joint = JointSpace::new(SpinSector::new(1).unwrap(), FockSpace::new(1));
        let mut amps = DVector::zeros(4);
        amps[joint.index(0, 1)] = re(1.0 / 2.0_f64.sqrt());
        amps[joint.index(1, 0)] = re(1.0 / 2.0_f64.sqrt());
        let psi = PureState::new(Layout::Joint(joint), amps).unwrap();
        let rho_b = partial_trace_battery_pure(&psi).unwrap();
        assert_abs_diff_eq!(rho_b.data()[(0, 0)].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(rho_b.data()[(1, 1)].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(rho_b.data()[(0, 1)].norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn excitation_ladder_reduces_to_diagonal() {
        // A state sum_m d_m |m, N-m> has each charger level tied to a unique
        // battery level, so the reduction is exactly diagonal.
        let n = 4usize;
        let joint = JointSpace::new(SpinSector::new(n).unwrap(), FockSpace::new(n));
        let coeffs = [0.1, -0.35, 0.52, 0.4, -0.2];
        let norm: f64 = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
        let mut amps = DVector::zeros(joint.dim());
        for (m, c) in coeffs.iter().enumerate() {
            amps[joint.index(m, n - m)] = re(c / norm);
        }
        let psi = PureState::new(Layout::Joint(joint), amps).unwrap();
        let rho_b = partial_trace_battery_pure(&psi).unwrap();
        for i in 0..=n {
            for j in 0..=n {
                if i != j {
                    assert_eq!(rho_b.data()[(i, j)], re(0.0));
                }
            }
        }
        assert_abs_diff_eq!(rho_b.trace().re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn partial_trace_matches_dense_route_and_preserves_trace() {
        let joint = JointSpace::new(SpinSector::new(2).unwrap(), FockSpace::new(3));
        let mut amps = DVector::zeros(joint.dim());
        // arbitrary normalized amplitudes with phases
        for k in 0..joint.dim() {
            let x = (k as f64 + 1.0) / 10.0;
            amps[k] = C64::new(x.cos(), (0.7 * x).sin());
        }
        let norm = amps.norm();
        for k in 0..joint.dim() {
            amps[k] /= re(norm);
        }
        let psi = PureState::new(Layout::Joint(joint), amps).unwrap();
        let via_pure = partial_trace_battery_pure(&psi).unwrap();
        let via_dense = partial_trace_battery(&psi.to_density()).unwrap();
        assert!((via_pure.data() - via_dense.data()).iter().all(|v| v.norm() < 1e-14));
        assert_abs_diff_eq!(via_pure.trace().re, 1.0, epsilon = 1e-12);
        assert!(via_pure.min_eigenvalue() > -1e-12);
    }

    #[test]
    fn embed_then_trace_is_identity() {
        // rho_b (x) |n><n| traced back equals rho_b.
        let spin = SpinSector::new(3).unwrap();
        let fock = FockSpace::new(2);
        let joint = JointSpace::new(spin, fock);
        let mut amps = DVector::zeros(spin.dim());
        let raw = [0.6, -0.3, 0.5, 0.55];
        let norm: f64 = raw.iter().map(|c| c * c).sum::<f64>().sqrt();
        for (k, c) in raw.iter().enumerate() {
            amps[k] = re(c / norm);
        }
        let rho_b = PureState::new(Layout::Spin(spin), amps).unwrap().to_density();
        let db = spin.dim();
        let df = fock.dim();
        let mut joint_rho = DMatrix::<C64>::zeros(joint.dim(), joint.dim());
        let pick = 1usize; // charger level hosting the embedding
        for i in 0..db {
            for j in 0..db {
                joint_rho[(joint.index(i, pick), joint.index(j, pick))] = rho_b.data()[(i, j)];
            }
        }
        let _ = df;
        let embedded = DensityMatrix::try_new(Layout::Joint(joint), joint_rho).unwrap();
        let back = partial_trace_battery(&embedded).unwrap();
        assert!((back.data() - rho_b.data()).iter().all(|v| v.norm() < 1e-14));
    }

    #[test]
    fn layout_mismatch_is_an_error() {
        let a = collective_spin_ops(SpinSector::new(2).unwrap());
        let b = collective_spin_ops(SpinSector::new(3).unwrap());
        assert!(matches!(a.sz.add(&b.sz), Err(Error::LayoutMismatch { .. })));
        assert!(matches!(a.sz.matmul(&b.sz), Err(Error::LayoutMismatch { .. })));
        let fock = fock_ops(FockSpace::new(2)).unwrap();
        // tensor demands spin (x) fock ordering
        assert!(tensor(&fock.number, &a.sz).is_err());
        // partial trace demands a joint layout
        let rho = spin_basis_state(SpinSector::new(2).unwrap(), 0).unwrap().to_density();
        assert!(partial_trace_battery(&rho).is_err());
    }

    #[test]
    fn hermitian_flag() {
        let ops = collective_spin_ops(SpinSector::new(3).unwrap());
        assert!(ops.sz.is_hermitian());
        assert!(ops.sx.is_hermitian());
        assert!(!ops.sp.is_hermitian());
        assert!(Operator::hermitian(ops.sp.layout(), ops.sp.data().clone()).is_err());
    }

    #[test]
    fn density_matrix_invariants_enforced() {
        let layout = Layout::Spin(SpinSector::new(1).unwrap());
        // trace != 1
        let bad = DMatrix::from_row_slice(2, 2, &[re(0.9), re(0.0), re(0.0), re(0.0)]);
        assert!(DensityMatrix::try_new(layout, bad).is_err());
        // negative eigenvalue
        let neg = DMatrix::from_row_slice(2, 2, &[re(1.1), re(0.0), re(0.0), re(-0.1)]);
        assert!(DensityMatrix::try_new(layout, neg).is_err());
        // not Hermitian
        let nh = DMatrix::from_row_slice(2, 2, &[re(0.5), re(0.2), re(0.0), re(0.5)]);
        assert!(DensityMatrix::try_new(layout, nh).is_err());
        // valid
        let ok = DMatrix::from_row_slice(2, 2, &[re(0.5), re(0.1), re(0.1), re(0.5)]);
        assert!(DensityMatrix::try_new(layout, ok).is_ok());
    }
}
