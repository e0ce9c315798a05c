//! System parameters and the four Hamiltonian variants of the modulated
//! collective-charging battery.
//!
//! Lab frame:
//! `H(t) = omega0 Sz + omega_c c^dag c + lambda(t) g Sx (c + c^dag)
//!         + xi nu cos(nu t) (Sz + c^dag c)`.
//!
//! On resonance the interaction picture with respect to the free plus
//! modulation part splits the coupling into a static rotating term
//! `H_R = (g/2)(S+ c + c^dag S-)` and a counter-rotating term whose phase
//! `exp(-2i omega0 t - 2i xi sin(nu t))` averages, for fast modulation, to
//! the Bessel-shrunk factor `J0(2 xi) exp(-2i omega0 t)`. The four builders
//! below expose the lab frame, the exact interaction picture, that effective
//! reduction, and the bare Tavis-Cummings limit.

pub mod bessel;

pub use bessel::{bessel_j, bessel_j0_zero};

use crate::hilbert::{
    collective_spin_ops, fock_ops, tensor, FockSpace, JointSpace, Layout, Operator, SpinSector,
};
use crate::linalg;
use crate::{C64, Error, Result};

/// Battery/charger constants. `omega0` is the global energy unit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemParams {
    n_cells: usize,
    omega0: f64,
    omega_c: f64,
    g: f64,
    n_max: usize,
}

impl SystemParams {
    pub fn new(n_cells: usize, omega0: f64, omega_c: f64, g: f64, n_max: usize) -> Result<Self> {
        if !(omega0.is_finite() && omega0 > 0.0) {
            return Err(Error::InvalidParam(format!("omega0 must be positive, got {omega0}")));
        }
        if !(omega_c.is_finite() && omega_c >= 0.0) {
            return Err(Error::InvalidParam(format!("omega_c must be non-negative, got {omega_c}")));
        }
        if !(g.is_finite() && g >= 0.0) {
            return Err(Error::InvalidParam(format!("g must be non-negative, got {g}")));
        }
        if n_cells == 0 {
            return Err(Error::InvalidParam("need at least one battery cell".into()));
        }
        if n_max == 0 {
            return Err(Error::InvalidParam("need n_max >= 1".into()));
        }
        Ok(Self { n_cells, omega0, omega_c, g, n_max })
    }

    /// Resonant charger (`omega_c = omega0`), the configuration used
    /// throughout the charging analysis.
    pub fn resonant(n_cells: usize, omega0: f64, g: f64, n_max: usize) -> Result<Self> {
        Self::new(n_cells, omega0, omega0, g, n_max)
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn omega_c(&self) -> f64 {
        self.omega_c
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn is_resonant(&self) -> bool {
        (self.omega_c - self.omega0).abs() <= 1e-12 * self.omega0
    }

    pub fn spin_sector(&self) -> SpinSector {
        SpinSector::new(self.n_cells).expect("validated at construction")
    }

    pub fn fock_space(&self) -> FockSpace {
        FockSpace::new(self.n_max)
    }

    pub fn joint_space(&self) -> JointSpace {
        JointSpace::new(self.spin_sector(), self.fock_space())
    }

    /// Battery free Hamiltonian `omega0 Sz` on the bare spin sector.
    pub fn battery_hamiltonian(&self) -> Operator {
        let ops = collective_spin_ops(self.spin_sector());
        ops.sz.scale(C64::from(self.omega0))
    }

    /// Charger free Hamiltonian `omega_c c^dag c` on the bare Fock space.
    pub fn charger_hamiltonian(&self) -> Result<Operator> {
        let ops = fock_ops(self.fock_space())?;
        Ok(ops.number.scale(C64::from(self.omega_c)))
    }
}

/// Sinusoidal energy-shift drive `xi nu cos(nu t)` applied to battery and
/// charger alike. Only `J_n(xi)^2` and `J0(2 xi)` ever enter, so the sign
/// of `xi` is gauge and it is stored as `|xi|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModulationParams {
    xi: f64,
    nu: f64,
}

impl ModulationParams {
    pub fn new(xi: f64, nu: f64) -> Result<Self> {
        if !xi.is_finite() {
            return Err(Error::InvalidParam(format!("xi must be finite, got {xi}")));
        }
        if !(nu.is_finite() && nu >= 0.0) {
            return Err(Error::InvalidParam(format!("nu must be non-negative, got {nu}")));
        }
        Ok(Self { xi: xi.abs(), nu })
    }

    /// No modulation.
    pub fn off() -> Self {
        Self { xi: 0.0, nu: 0.0 }
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// `J0(2 xi)`, the factor by which the counter-rotating coupling
    /// shrinks in the fast-modulation limit.
    pub fn cr_shrinkage(&self) -> Result<f64> {
        bessel_j(0, 2.0 * self.xi)
    }
}

/// Square charging window: the coupling is on for `0 <= t <= tau_c`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChargingWindow {
    tau_c: f64,
}

impl ChargingWindow {
    pub fn new(tau_c: f64) -> Result<Self> {
        if tau_c.is_nan() || tau_c <= 0.0 {
            return Err(Error::InvalidParam(format!("tau_c must be positive, got {tau_c}")));
        }
        Ok(Self { tau_c })
    }

    /// Window that never closes; used while scanning for the first
    /// efficiency maximum, which then defines the charging time.
    pub fn always_on() -> Self {
        Self { tau_c: f64::INFINITY }
    }

    pub fn tau_c(&self) -> f64 {
        self.tau_c
    }

    pub fn lambda(&self, t: f64) -> f64 {
        if (0.0..=self.tau_c).contains(&t) {
            1.0
        } else {
            0.0
        }
    }
}

/// Complex coefficient carried by a non-Hermitian Hamiltonian term.
#[derive(Clone, Copy, Debug)]
pub(crate) enum PhaseFn {
    /// `exp(-i freq t)`
    Exp { freq: f64 },
    /// `exp(-i (freq t + depth sin(nu t)))`
    ExpSinusoid { freq: f64, depth: f64, nu: f64 },
}

impl PhaseFn {
    pub(crate) fn eval(&self, t: f64) -> C64 {
        match *self {
            PhaseFn::Exp { freq } => C64::from_polar(1.0, -freq * t),
            PhaseFn::ExpSinusoid { freq, depth, nu } => {
                C64::from_polar(1.0, -(freq * t + depth * (nu * t).sin()))
            }
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) enum Term {
    /// Hermitian, coefficient one.
    Static(Operator),
    /// Hermitian, multiplied by the charging window.
    Windowed { op: Operator, tau_c: f64 },
    /// Hermitian, multiplied by `amp cos(freq t)`.
    Cosine { op: Operator, amp: f64, freq: f64 },
    /// `f(t) op + conj(f(t)) op^dag` with `|f| = 1`.
    RotatingPair { op: Operator, phase: PhaseFn },
}

/// Time-dependent Hamiltonian as a sum of structured terms. Evaluation at
/// any `t` yields a Hermitian [`Operator`]; the propagators additionally
/// exploit the term structure for fast application.
#[derive(Clone, Debug)]
pub struct Hamiltonian {
    layout: Layout,
    pub(crate) terms: Vec<Term>,
}

impl Hamiltonian {
    /// Wraps a single static Hermitian operator.
    pub fn from_static(op: Operator) -> Result<Self> {
        if !op.is_hermitian() {
            return Err(Error::NotHermitian("static Hamiltonian term".into()));
        }
        Ok(Self { layout: op.layout(), terms: vec![Term::Static(op)] })
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn is_static(&self) -> bool {
        self.terms.iter().all(|t| matches!(t, Term::Static(_)))
    }

    /// Dense snapshot at time `t`.
    pub fn at(&self, t: f64) -> Operator {
        let mut data = Operator::zeros(self.layout).data().clone();
        for term in &self.terms {
            match term {
                Term::Static(op) => data += op.data(),
                Term::Windowed { op, tau_c } => {
                    if (0.0..=*tau_c).contains(&t) {
                        data += op.data();
                    }
                }
                Term::Cosine { op, amp, freq } => {
                    let c = C64::from(amp * (freq * t).cos());
                    data += &op.data().map(|v| v * c);
                }
                Term::RotatingPair { op, phase } => {
                    let f = phase.eval(t);
                    data += &op.data().map(|v| v * f);
                    data += &op.data().adjoint().map(|v| v * f.conj());
                }
            }
        }
        Operator::new(self.layout, data).expect("terms share the layout")
    }

    /// Upper bound on `sup_t ||H(t)||_2` via triangle inequality over terms
    /// and the row-sum norm; used for the step-size heuristic.
    pub fn norm_bound(&self) -> f64 {
        self.terms
            .iter()
            .map(|term| match term {
                Term::Static(op) | Term::Windowed { op, .. } => linalg::inf_norm(op.data()),
                Term::Cosine { op, amp, .. } => amp.abs() * linalg::inf_norm(op.data()),
                Term::RotatingPair { op, .. } => {
                    linalg::inf_norm(op.data()) + linalg::one_norm(op.data())
                }
            })
            .sum()
    }

    /// Time points at which a term switches discontinuously; the
    /// propagators align integration steps with these.
    pub(crate) fn breakpoints(&self) -> Vec<f64> {
        self.terms
            .iter()
            .filter_map(|t| match t {
                Term::Windowed { tau_c, .. } if tau_c.is_finite() => Some(*tau_c),
                _ => None,
            })
            .collect()
    }
}

/// Lab-frame Hamiltonian: free battery and charger, windowed Dicke
/// coupling, and the cosine energy-shift modulation.
pub fn h_lab(p: &SystemParams, m: &ModulationParams, w: &ChargingWindow) -> Result<Hamiltonian> {
    let parts = JointParts::build(p)?;
    let free = parts.sz_joint.scale(C64::from(p.omega0)).add(&parts.num_joint.scale(C64::from(p.omega_c)))?;
    let mut terms = vec![Term::Static(free)];
    if p.g > 0.0 {
        let coupling = parts.sx_x_joint.scale(C64::from(p.g));
        terms.push(Term::Windowed { op: coupling, tau_c: w.tau_c() });
    }
    if m.xi() * m.nu() > 0.0 {
        let shift = parts.sz_joint.add(&parts.num_joint)?;
        terms.push(Term::Cosine { op: shift, amp: m.xi() * m.nu(), freq: m.nu() });
    }
    Ok(Hamiltonian { layout: parts.layout, terms })
}

/// Exact interaction picture on resonance:
/// `H_R + (g/2)(S- c exp(-2i omega0 t - 2i xi sin(nu t)) + h.c.)`.
pub fn h_int_exact(p: &SystemParams, m: &ModulationParams) -> Result<Hamiltonian> {
    let parts = require_resonant(p)?;
    let mut terms = vec![Term::Static(parts.rotating.clone())];
    if p.g > 0.0 {
        terms.push(Term::RotatingPair {
            op: parts.sm_c_joint.scale(C64::from(p.g / 2.0)),
            phase: PhaseFn::ExpSinusoid { freq: 2.0 * p.omega0, depth: 2.0 * m.xi(), nu: m.nu() },
        });
    }
    Ok(Hamiltonian { layout: parts.layout, terms })
}

/// Fast-modulation reduction of [`h_int_exact`]:
/// `H_R + (g/2) J0(2 xi) (S- c exp(-2i omega0 t) + h.c.)`.
pub fn h_int_effective(p: &SystemParams, m: &ModulationParams) -> Result<Hamiltonian> {
    let parts = require_resonant(p)?;
    let shrink = m.cr_shrinkage()?;
    let mut terms = vec![Term::Static(parts.rotating.clone())];
    if p.g > 0.0 {
        terms.push(Term::RotatingPair {
            op: parts.sm_c_joint.scale(C64::from(shrink * p.g / 2.0)),
            phase: PhaseFn::Exp { freq: 2.0 * p.omega0 },
        });
    }
    Ok(Hamiltonian { layout: parts.layout, terms })
}

/// Tavis-Cummings limit: the excitation-conserving rotating term alone.
pub fn h_tc(p: &SystemParams) -> Result<Hamiltonian> {
    let parts = JointParts::build(p)?;
    Ok(Hamiltonian { layout: parts.layout, terms: vec![Term::Static(parts.rotating)] })
}

struct JointParts {
    layout: Layout,
    sz_joint: Operator,
    num_joint: Operator,
    sx_x_joint: Operator,
    sm_c_joint: Operator,
    /// `(g/2)(S+ c + c^dag S-)`
    rotating: Operator,
}

impl JointParts {
    fn build(p: &SystemParams) -> Result<Self> {
        let spin = p.spin_sector();
        let fock = p.fock_space();
        let sops = collective_spin_ops(spin);
        let fops = fock_ops(fock)?;
        let id_spin = Operator::identity(Layout::Spin(spin));
        let id_fock = Operator::identity(Layout::Fock(fock));
        let sz_joint = tensor(&sops.sz, &id_fock)?;
        let num_joint = tensor(&id_spin, &fops.number)?;
        let x = fops.annihilate.add(&fops.create)?;
        let sx_x_joint = tensor(&sops.sx, &x)?;
        let sp_c = tensor(&sops.sp, &fops.annihilate)?;
        let rotating = sp_c.add(&sp_c.adjoint())?.scale(C64::from(p.g / 2.0));
        let sm_c_joint = tensor(&sops.sm, &fops.annihilate)?;
        Ok(Self { layout: sz_joint.layout(), sz_joint, num_joint, sx_x_joint, sm_c_joint, rotating })
    }
}

fn require_resonant(p: &SystemParams) -> Result<JointParts> {
    if !p.is_resonant() {
        return Err(Error::UnsupportedConfig(format!(
            "interaction-picture builders require omega_c = omega0 (got omega_c = {}, omega0 = {})",
            p.omega_c, p.omega0
        )));
    }
    JointParts::build(p)
}
