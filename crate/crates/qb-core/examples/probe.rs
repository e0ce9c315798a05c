// Scratch probe for calibrating truncation and checking headline numbers.
// Not part of the deliverable surface; run with:
//   cargo run --release -p qb-core --example probe

use qb_core::dynamics::{propagate_amplitudes, propagate_state, TimeGrid};
use qb_core::hilbert::{basis_state, partial_trace_battery_pure};
use qb_core::model::{h_int_effective, h_lab, h_tc, ChargingWindow, ModulationParams, SystemParams};
use qb_core::observables::{efficiency, ergotropy, first_local_max, rel_entropy_coherence};

fn charge_run(n: usize, n_max: usize, g: f64, xi: f64, variant: &str, nu: f64, dt_max: Option<f64>) {
    let p = SystemParams::resonant(n, 1.0, g, n_max).unwrap();
    let m = ModulationParams::new(xi, nu).unwrap();
    let h = match variant {
        "eff" => h_int_effective(&p, &m).unwrap(),
        "tc" => h_tc(&p).unwrap(),
        "lab" => h_lab(&p, &m, &ChargingWindow::always_on()).unwrap(),
        _ => unreachable!(),
    };
    let t1 = 10.0 / g;
    let mut grid = TimeGrid::new(0.0, t1, 801).unwrap();
    if let Some(cap) = dt_max {
        grid = grid.with_dt_max(cap).unwrap();
    }
    let start = std::time::Instant::now();
    let samples = match propagate_state(&h, &basis_state(p.joint_space(), 0, n).unwrap(), &grid) {
        Ok(s) => s,
        Err(e) => {
            println!("variant={variant} N={n} n_max={n_max} xi={xi} nu={nu}: ERR {e}");
            return;
        }
    };
    let h_b = p.battery_hamiltonian();
    let h_c = p.charger_hamiltonian().unwrap();
    let charger0 = {
        use nalgebra::DVector;
        use qb_core::hilbert::{Layout, PureState};
        let mut amps = DVector::zeros(n_max + 1);
        amps[n] = qb_core::C64::new(1.0, 0.0);
        PureState::new(Layout::Fock(p.fock_space()), amps).unwrap().to_density()
    };
    let mut eta_series = Vec::new();
    let mut c_max = 0.0_f64;
    let mut top_max = 0.0_f64;
    let mut norm_max = 0.0_f64;
    let joint = p.joint_space();
    for s in &samples {
        let rho_b = partial_trace_battery_pure(&s.state).unwrap();
        let erg = ergotropy(&rho_b, &h_b).unwrap();
        let eta = efficiency(erg, &charger0, &h_c).unwrap();
        eta_series.push((s.t, eta));
        c_max = c_max.max(rel_entropy_coherence(&rho_b, &h_b).unwrap());
        let mut top = 0.0;
        for mi in 0..=n {
            top += s.state.amplitudes()[joint.index(mi, n_max)].norm_sqr();
            top += s.state.amplitudes()[joint.index(mi, n_max - 1)].norm_sqr();
        }
        top_max = top_max.max(top);
        norm_max = norm_max.max(s.norm_err);
    }
    let peak = first_local_max(&eta_series).unwrap();
    let (t_best, eta_best) = eta_series
        .iter()
        .copied()
        .fold((0.0, f64::MIN), |acc, (t, v)| if v > acc.1 { (t, v) } else { acc });
    println!(
        "variant={variant} N={n} n_max={n_max} g={g} xi={xi} nu={nu}: first_peak={:.5}@t={:.3} (mono={}), max_eta={:.5}@t={:.3}, C_max={:.2e}, top2={:.3e}, norm_err={:.3e}, wall={:?}",
        peak.value, peak.t, peak.monotone_endpoint, eta_best, t_best, c_max, top_max, norm_max, start.elapsed()
    );
}

fn amp_run(n: usize, n_max: usize, g: f64, xi: f64) {
    let p = SystemParams::resonant(n, 1.0, g, n_max).unwrap();
    let m = ModulationParams::new(xi, 0.0).unwrap();
    let grid = TimeGrid::new(0.0, 10.0 / g, 801).unwrap();
    match propagate_amplitudes(&p, &m, &grid) {
        Ok(samples) => {
            let top: f64 =
                samples.iter().map(|s| s.table.top_fock_population()).fold(0.0, f64::max);
            println!("amp N={n} n_max={n_max} xi={xi}: ok, top2_max={top:.3e}");
        }
        Err(e) => println!("amp N={n} n_max={n_max} xi={xi}: ERR {e}"),
    }
}

fn main() {
    println!("--- amplitude-ladder truncation scan (N=2, xi=0) ---");
    for n_max in [20, 24, 28, 36, 44] {
        amp_run(2, n_max, 1.0, 0.0);
    }
    println!("--- amplitude-ladder truncation scan (N=2, xi=0.8) ---");
    for n_max in [20, 28, 36] {
        amp_run(2, n_max, 1.0, 0.8);
    }
    println!("--- amplitude-ladder truncation scan (N=1, xi=0) ---");
    for n_max in [12, 16, 20, 24, 28] {
        amp_run(1, n_max, 1.0, 0.0);
    }
    println!("--- N=8 effective, xi=0, large n_max (guard study) ---");
    for n_max in [24, 64, 96, 128] {
        charge_run(8, n_max, 1.0, 0.0, "eff", 0.0, None);
    }
    println!("--- coherence at the exact Bessel zero ---");
    let xi_opt = qb_core::model::bessel_j0_zero(1).unwrap() / 2.0;
    charge_run(8, 24, 1.0, xi_opt, "eff", 0.0, None);
    println!("--- lab frame, xi=1.202, nu scan (max eta is the metric) ---");
    charge_run(8, 24, 1.0, 1.202, "lab", 5.0, Some(1.0e-4));
    charge_run(8, 24, 1.0, 1.202, "lab", 10.0, None);
    charge_run(8, 24, 1.0, 1.202, "lab", 50.0, None);
}
