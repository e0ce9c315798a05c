//! Energies, passive states, ergotropy, efficiency, entropies,
//! relative-entropy coherence, and first-maximum detection.

use nalgebra::DMatrix;

use crate::hilbert::{DensityMatrix, Operator};
use crate::linalg;
use crate::{C64, Error, Result};

/// Eigenvalues (ascending) and matching orthonormal eigenvector columns of
/// a Hermitian operator.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<C64>,
}

pub fn spectrum(h: &Operator) -> Result<Spectrum> {
    if !h.is_hermitian() {
        return Err(Error::NotHermitian("spectrum requires a Hermitian operator".into()));
    }
    let (eigenvalues, eigenvectors) = linalg::eigh(h.data());
    Ok(Spectrum { eigenvalues, eigenvectors })
}

/// `Tr[rho H]` for Hermitian `H`. The imaginary residue must stay below
/// `1e-10`; it is discarded after the check.
pub fn mean_energy(rho: &DensityMatrix, h: &Operator) -> Result<f64> {
    rho.layout().expect_same(&h.layout())?;
    if !h.is_hermitian() {
        return Err(Error::NotHermitian("mean_energy requires a Hermitian operator".into()));
    }
    let mut tr = C64::new(0.0, 0.0);
    for i in 0..rho.dim() {
        for k in 0..rho.dim() {
            tr += rho.data()[(i, k)] * h.data()[(k, i)];
        }
    }
    if tr.im.abs() > 1e-10 {
        return Err(Error::Accuracy(format!("Tr[rho H] has imaginary residue {:.3e}", tr.im)));
    }
    Ok(tr.re)
}

/// Populations of `rho` sorted descending, paired with the energies of `h`
/// sorted ascending: the state from which no cyclic unitary can extract
/// work. Ties among equal populations are resolved by the sort order; any
/// such ordering yields the same energy.
pub fn passive_state(rho: &DensityMatrix, h: &Operator) -> Result<DensityMatrix> {
    rho.layout().expect_same(&h.layout())?;
    let spec_h = spectrum(h)?;
    let populations = descending_populations(rho)?;
    let d = rho.dim();
    let mut out = DMatrix::<C64>::zeros(d, d);
    for k in 0..d {
        let v = spec_h.eigenvectors.column(k);
        let p = C64::from(populations[k]);
        for i in 0..d {
            for j in 0..d {
                out[(i, j)] += p * v[i] * v[j].conj();
            }
        }
    }
    Ok(DensityMatrix::from_parts(rho.layout(), out))
}

/// Maximal work extractable by cyclic unitaries:
/// `Tr[rho H] - Tr[passive(rho) H]`. Non-negative up to `-1e-10` roundoff.
pub fn ergotropy(rho: &DensityMatrix, h: &Operator) -> Result<f64> {
    rho.layout().expect_same(&h.layout())?;
    let spec_h = spectrum(h)?;
    let populations = descending_populations(rho)?;
    let passive_energy: f64 =
        populations.iter().zip(spec_h.eigenvalues.iter()).map(|(r, e)| r * e).sum();
    let erg = mean_energy(rho, h)? - passive_energy;
    if erg < -1e-10 {
        return Err(Error::Accuracy(format!("ergotropy {erg:.3e} below -1e-10")));
    }
    Ok(erg)
}

/// Ergotropy over the initial energy supplied by the charger,
/// `eta = erg / Tr[rho_c(0) H_c]`.
pub fn efficiency(erg: f64, charger0: &DensityMatrix, h_c: &Operator) -> Result<f64> {
    let supply = mean_energy(charger0, h_c)?;
    if supply <= 0.0 {
        return Err(Error::InvalidParam(format!(
            "initial charger energy must be positive, got {supply:.3e}"
        )));
    }
    Ok(erg / supply)
}

/// Logarithm base for entropy-like quantities.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LogBase {
    #[default]
    Natural,
    Two,
}

impl LogBase {
    fn apply(&self, x: f64) -> f64 {
        match self {
            LogBase::Natural => x.ln(),
            LogBase::Two => x.log2(),
        }
    }
}

/// Von Neumann entropy `-sum r_k log r_k` (natural log).
pub fn vn_entropy(rho: &DensityMatrix) -> Result<f64> {
    vn_entropy_in(rho, LogBase::Natural)
}

pub fn vn_entropy_in(rho: &DensityMatrix, base: LogBase) -> Result<f64> {
    let populations = rho.eigenvalues();
    entropy_of(&populations, base)
}

/// Relative entropy of coherence in the eigenbasis of `h`:
/// `C(rho) = S(rho_dephased) - S(rho)` (natural log).
pub fn rel_entropy_coherence(rho: &DensityMatrix, h: &Operator) -> Result<f64> {
    rel_entropy_coherence_in(rho, h, LogBase::Natural)
}

pub fn rel_entropy_coherence_in(rho: &DensityMatrix, h: &Operator, base: LogBase) -> Result<f64> {
    rho.layout().expect_same(&h.layout())?;
    let spec_h = spectrum(h)?;
    // populations of rho in the energy eigenbasis = diagonal of V^dag rho V
    let d = rho.dim();
    let mut dephased = Vec::with_capacity(d);
    for k in 0..d {
        let v = spec_h.eigenvectors.column(k);
        let mut p = C64::new(0.0, 0.0);
        for i in 0..d {
            for j in 0..d {
                p += v[i].conj() * rho.data()[(i, j)] * v[j];
            }
        }
        dephased.push(p.re);
    }
    let coherence = entropy_of(&dephased, base)? - vn_entropy_in(rho, base)?;
    if coherence < -1e-10 {
        return Err(Error::Accuracy(format!("coherence {coherence:.3e} below -1e-10")));
    }
    Ok(coherence)
}

fn entropy_of(populations: &[f64], base: LogBase) -> Result<f64> {
    let mut s = 0.0;
    for &r in populations {
        if r < -1e-10 {
            return Err(Error::InvalidState(format!("population {r:.3e} below -1e-10")));
        }
        let r = r.clamp(0.0, 1.0);
        if r > 0.0 {
            s -= r * base.apply(r);
        }
    }
    Ok(s)
}

fn descending_populations(rho: &DensityMatrix) -> Result<Vec<f64>> {
    let mut populations = rho.eigenvalues();
    if let Some(&lo) = populations.first() {
        if lo < -1e-10 {
            return Err(Error::InvalidState(format!("population {lo:.3e} below -1e-10")));
        }
    }
    populations.reverse();
    Ok(populations.into_iter().map(|r| r.clamp(0.0, 1.0)).collect())
}

/// Result of scanning a series for its first interior maximum.
#[derive(Clone, Copy, Debug)]
pub struct SeriesPeak {
    pub t: f64,
    pub value: f64,
    /// Set when no interior maximum exists and the final sample was
    /// returned instead.
    pub monotone_endpoint: bool,
}

/// First index with `v[i-1] < v[i] >= v[i+1]`, refined by a parabola
/// through the three surrounding samples. A series with no such index
/// (monotone or flat) yields the final sample with the endpoint flag set.
pub fn first_local_max(series: &[(f64, f64)]) -> Result<SeriesPeak> {
    if series.len() < 3 {
        return Err(Error::InvalidParam(format!(
            "need at least 3 samples to locate a maximum, got {}",
            series.len()
        )));
    }
    for i in 1..series.len() - 1 {
        let (tl, vl) = series[i - 1];
        let (tc, vc) = series[i];
        let (tr, vr) = series[i + 1];
        if vl < vc && vc >= vr {
            // parabola through the three surrounding samples
            let denom = vl - 2.0 * vc + vr;
            if denom.abs() < 1e-300 {
                return Ok(SeriesPeak { t: tc, value: vc, monotone_endpoint: false });
            }
            let delta = (0.5 * (vl - vr) / denom).clamp(-1.0, 1.0);
            let spacing = 0.5 * (tr - tl);
            return Ok(SeriesPeak {
                t: tc + delta * spacing,
                value: vc - 0.25 * (vl - vr) * delta,
                monotone_endpoint: false,
            });
        }
    }
    let (t, value) = *series.last().expect("non-empty");
    Ok(SeriesPeak { t, value, monotone_endpoint: true })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{collective_spin_ops, spin_basis_state, Layout, PureState, SpinSector};
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn re(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn battery_h(n: usize) -> Operator {
        collective_spin_ops(SpinSector::new(n).unwrap()).sz
    }

    fn uniform_superposition(n: usize) -> DensityMatrix {
        let sector = SpinSector::new(n).unwrap();
        let d = sector.dim();
        let amps = DVector::from_element(d, re(1.0 / (d as f64).sqrt()));
        PureState::new(Layout::Spin(sector), amps).unwrap().to_density()
    }

    fn random_density(n_dim: usize, rng: &mut StdRng) -> DMatrix<C64> {
        let a = DMatrix::from_fn(n_dim, n_dim, |_, _| {
            C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let mut rho = &a * a.adjoint();
        let tr: C64 = rho.diagonal().sum();
        rho /= tr;
        rho
    }

    #[test]
    fn mean_energy_basics_n8() {
        let h = battery_h(8);
        let sector = SpinSector::new(8).unwrap();
        // ground state of Sz -> -4
        let ground = spin_basis_state(sector, 0).unwrap().to_density();
        assert_abs_diff_eq!(mean_energy(&ground, &h).unwrap(), -4.0, epsilon = 1e-12);
        // maximally mixed -> 0 by symmetry of the ladder
        let mixed = DensityMatrix::try_new(
            Layout::Spin(sector),
            DMatrix::from_diagonal(&DVector::from_element(9, re(1.0 / 9.0))),
        )
        .unwrap();
        assert_abs_diff_eq!(mean_energy(&mixed, &h).unwrap(), 0.0, epsilon = 1e-12);
        // uniform superposition -> 0 (mean of -4..=4)
        assert_abs_diff_eq!(mean_energy(&uniform_superposition(8), &h).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn passive_state_reorders_populations() {
        let sector = SpinSector::new(1).unwrap();
        let h = battery_h(1);
        let rho = DensityMatrix::try_new(
            Layout::Spin(sector),
            DMatrix::from_row_slice(2, 2, &[re(0.3), re(0.0), re(0.0), re(0.7)]),
        )
        .unwrap();
        let passive = passive_state(&rho, &h).unwrap();
        assert_abs_diff_eq!(passive.data()[(0, 0)].re, 0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(passive.data()[(1, 1)].re, 0.3, epsilon = 1e-12);
        // passive state commutes with h and has non-increasing populations
        let comm = (passive.data() * h.data() - h.data() * passive.data())
            .iter()
            .fold(0.0_f64, |a, v| a.max(v.norm()));
        assert!(comm < 1e-12);
    }

    #[test]
    fn pure_states_become_ground_projectors() {
        let h = battery_h(4);
        let rho = uniform_superposition(4);
        let passive = passive_state(&rho, &h).unwrap();
        assert_abs_diff_eq!(passive.data()[(0, 0)].re, 1.0, epsilon = 1e-10);
        // maximally mixed is its own passive state
        let sector = SpinSector::new(4).unwrap();
        let mixed = DensityMatrix::try_new(
            Layout::Spin(sector),
            DMatrix::from_diagonal(&DVector::from_element(5, re(0.2))),
        )
        .unwrap();
        let same = passive_state(&mixed, &h).unwrap();
        assert!((same.data() - mixed.data()).iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn ergotropy_cases() {
        let h = battery_h(8);
        let sector = SpinSector::new(8).unwrap();
        // fully excited battery releases the whole spectrum span
        let top = spin_basis_state(sector, 8).unwrap().to_density();
        assert_abs_diff_eq!(ergotropy(&top, &h).unwrap(), 8.0, epsilon = 1e-10);
        // uniform superposition: pure state, <H> = 0, ground at -4
        assert_abs_diff_eq!(ergotropy(&uniform_superposition(8), &h).unwrap(), 4.0, epsilon = 1e-10);
        // uniform mixture is passive
        let mixed = DensityMatrix::try_new(
            Layout::Spin(sector),
            DMatrix::from_diagonal(&DVector::from_element(9, re(1.0 / 9.0))),
        )
        .unwrap();
        assert_abs_diff_eq!(ergotropy(&mixed, &h).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn efficiency_normalizes_by_charger_supply() {
        use crate::hilbert::FockSpace;
        let fock = FockSpace::new(8);
        let fops = crate::hilbert::fock_ops(fock).unwrap();
        let h_c = fops.number.clone();
        let mut amps = DVector::zeros(9);
        amps[8] = re(1.0);
        let charger = PureState::new(Layout::Fock(fock), amps).unwrap().to_density();
        assert_abs_diff_eq!(efficiency(8.0, &charger, &h_c).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(efficiency(0.0, &charger, &h_c).unwrap(), 0.0, epsilon = 1e-15);
        // vacuum charger has no supply
        let mut vac = DVector::zeros(9);
        vac[0] = re(1.0);
        let empty = PureState::new(Layout::Fock(fock), vac).unwrap().to_density();
        assert!(efficiency(1.0, &empty, &h_c).is_err());
    }

    #[test]
    fn entropy_and_coherence_cases() {
        let h = battery_h(8);
        let rho = uniform_superposition(8);
        // S(rho) = 0 for a pure state; dephasing in the Sz basis gives ln 9
        assert_abs_diff_eq!(vn_entropy(&rho).unwrap(), 0.0, epsilon = 1e-10);
        let c = rel_entropy_coherence(&rho, &h).unwrap();
        assert_abs_diff_eq!(c, 9.0_f64.ln(), epsilon = 1e-10);
        let c2 = rel_entropy_coherence_in(&rho, &h, LogBase::Two).unwrap();
        assert_abs_diff_eq!(c2, 9.0_f64.log2(), epsilon = 1e-10);
        // diagonal states carry no coherence
        let sector = SpinSector::new(8).unwrap();
        let diag = DensityMatrix::try_new(
            Layout::Spin(sector),
            DMatrix::from_diagonal(&DVector::from_fn(9, |k, _| re((k as f64 + 1.0) / 45.0))),
        )
        .unwrap();
        assert_abs_diff_eq!(rel_entropy_coherence(&diag, &h).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn ergotropy_invariant_under_energy_diagonal_unitaries() {
        let mut rng = StdRng::seed_from_u64(7);
        let h = battery_h(4);
        let sector = SpinSector::new(4).unwrap();
        for _ in 0..20 {
            let rho = random_density(5, &mut rng);
            let rho = DensityMatrix::try_new(Layout::Spin(sector), rho).unwrap();
            let base = ergotropy(&rho, &h).unwrap();
            // conjugate by a random unitary diagonal in the Sz eigenbasis
            let phases: Vec<C64> =
                (0..5).map(|_| C64::from_polar(1.0, rng.random::<f64>() * 6.28)).collect();
            let mut conj = rho.data().clone();
            for i in 0..5 {
                for j in 0..5 {
                    conj[(i, j)] *= phases[i] * phases[j].conj();
                }
            }
            let rotated = DensityMatrix::try_new(Layout::Spin(sector), conj).unwrap();
            let got = ergotropy(&rotated, &h).unwrap();
            assert!((got - base).abs() < 1e-10, "{got} vs {base}");
        }
    }

    #[test]
    fn degenerate_populations_have_unambiguous_ergotropy() {
        // two equal populations: any tie-break gives the same energy
        let sector = SpinSector::new(2).unwrap();
        let h = battery_h(2);
        let rho_a = DensityMatrix::try_new(
            Layout::Spin(sector),
            DMatrix::from_diagonal(&DVector::from_vec(vec![re(0.25), re(0.25), re(0.5)])),
        )
        .unwrap();
        let rho_b = DensityMatrix::try_new(
            Layout::Spin(sector),
            DMatrix::from_diagonal(&DVector::from_vec(vec![re(0.25), re(0.5), re(0.25)])),
        )
        .unwrap();
        let ea = ergotropy(&rho_a, &h).unwrap();
        let eb = ergotropy(&rho_b, &h).unwrap();
        // same multiset of populations -> same passive energy; mean energies differ
        let pa = mean_energy(&rho_a, &h).unwrap() - ea;
        let pb = mean_energy(&rho_b, &h).unwrap() - eb;
        assert_abs_diff_eq!(pa, pb, epsilon = 1e-12);
    }

    #[test]
    fn first_local_max_on_sine() {
        let series: Vec<(f64, f64)> = (0..81).map(|k| {
            let t = 4.0 * k as f64 / 80.0;
            (t, t.sin())
        }).collect();
        let peak = first_local_max(&series).unwrap();
        assert!(!peak.monotone_endpoint);
        assert_abs_diff_eq!(peak.t, std::f64::consts::FRAC_PI_2, epsilon = 1e-2);
        assert_abs_diff_eq!(peak.value, 1.0, epsilon = 1e-3);
    }

    #[test]
    fn first_local_max_monotone_fallback() {
        let series: Vec<(f64, f64)> = (0..10).map(|k| (k as f64, k as f64 * 0.1)).collect();
        let peak = first_local_max(&series).unwrap();
        assert!(peak.monotone_endpoint);
        assert_abs_diff_eq!(peak.t, 9.0, epsilon = 1e-15);
        assert!(first_local_max(&series[..2]).is_err());
    }

    #[test]
    fn first_local_max_flat_top() {
        // plateau: strict rise then non-strict comparison catches the first
        // flat-topped sample
        let series = vec![(0.0, 0.0), (1.0, 1.0), (2.0, 1.0), (3.0, 0.5)];
        let peak = first_local_max(&series).unwrap();
        assert!(!peak.monotone_endpoint);
        assert!(peak.value >= 1.0 - 1e-12);
    }

    proptest! {
        #[test]
        fn coherence_nonnegative_and_zero_iff_commuting(seed in 0u64..500) {
            let mut rng = StdRng::seed_from_u64(seed);
            let sector = SpinSector::new(3).unwrap();
            let h = battery_h(3);
            let rho = DensityMatrix::try_new(Layout::Spin(sector), random_density(4, &mut rng)).unwrap();
            let c = rel_entropy_coherence(&rho, &h).unwrap();
            prop_assert!(c >= -1e-10);
            // commuting with nondegenerate h means diagonal; dephasing it
            // must then yield zero coherence
            let mut diag = DMatrix::<C64>::zeros(4, 4);
            for k in 0..4 {
                diag[(k, k)] = rho.data()[(k, k)];
            }
            let tr: C64 = diag.diagonal().sum();
            let diag = diag.map(|v| v / tr);
            let dephased = DensityMatrix::try_new(Layout::Spin(sector), diag).unwrap();
            prop_assert!(rel_entropy_coherence(&dephased, &h).unwrap() < 1e-12);
        }

        #[test]
        fn ergotropy_bounded_by_span_above_ground(seed in 0u64..500) {
            let mut rng = StdRng::seed_from_u64(seed);
            let sector = SpinSector::new(4).unwrap();
            let h = battery_h(4);
            let rho = DensityMatrix::try_new(Layout::Spin(sector), random_density(5, &mut rng)).unwrap();
            let erg = ergotropy(&rho, &h).unwrap();
            let mean = mean_energy(&rho, &h).unwrap();
            let ground = spectrum(&h).unwrap().eigenvalues[0];
            prop_assert!(erg >= -1e-10);
            prop_assert!(erg <= mean - ground + 1e-10);
        }
    }
}
