//! Acceptance criteria. Each test prints one `ACCEPTANCE [PASS|FAIL]` line;
//! run with `-- --nocapture --test-threads 1` to see them in order.

use std::f64::consts::PI;

use excsim_core::coupling::calibrate_sigma_chi;
use excsim_core::experiments::{
    mach_zehnder_sweep, run_beam_splitter, run_interference, run_multichannel_split, run_oscillation,
    two_port_oracle, MultichannelSetup, OscillationSetup, SplitterSetup, StepControl,
};
use excsim_core::{
    dispersion_omega, evolve, CouplingProfile, Hamiltonian, IntegratorConfig, LatticeParams, PacketSpec,
    Topology, WaveState, WavenumberGrid,
};
use ndarray::Array2;
use num_complex::Complex64 as C64;

fn report(name: &str, pass: bool, detail: String) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("ACCEPTANCE [{tag}] {name}: {detail}");
    assert!(pass, "{name} failed: {detail}");
}

/// Brute-force integration of the (N+1)-port star equations
/// `i c0' = chi sum_d c_d`, `i c_d' = chi c0`, by classical midpoint steps.
fn star_ode_populations(n_daughters: usize, chi: f64, t: f64) -> Vec<f64> {
    let steps = 200_000;
    let h = t / steps as f64;
    let mut c = vec![C64::new(0.0, 0.0); n_daughters + 1];
    c[0] = C64::new(1.0, 0.0);
    let deriv = |c: &[C64]| -> Vec<C64> {
        let mi = C64::new(0.0, -chi);
        let sum: C64 = c[1..].iter().sum();
        let mut d = vec![mi * sum];
        d.extend(c[1..].iter().map(|_| mi * c[0]));
        d
    };
    for _ in 0..steps {
        let k1 = deriv(&c);
        let mid: Vec<C64> = c.iter().zip(&k1).map(|(a, k)| a + k * (h / 2.0)).collect();
        let k2 = deriv(&mid);
        for (a, k) in c.iter_mut().zip(&k2) {
            *a += k * h;
        }
    }
    c.iter().map(|z| z.norm_sqr()).collect()
}

#[test]
fn eigenstate_fidelity() {
    let n = 16;
    let p = LatticeParams::unit(n).unwrap();
    let grid = WavenumberGrid::new(&p);
    let h = Hamiltonian::new(p, CouplingProfile::Zero, Topology::Pair).unwrap();
    let t = 10.0;
    let mut worst: f64 = 0.0;
    for m in 0..n {
        let k = grid.wavenumber(m);
        let amps = Array2::from_shape_fn((2, n), |(c, j)| {
            if c == 0 {
                C64::from_polar(0.25, -k * j as f64)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let s = WaveState::from_amplitudes(amps, 0.0).unwrap();
        let out = evolve(&h, &s, &IntegratorConfig::new(0.01, t), &[]).unwrap();
        let want = C64::from_polar(1.0, -dispersion_omega(k, &p) * t);
        for j in 0..n {
            let ratio = out.state.amplitude(0, j) / s.amplitude(0, j);
            worst = worst.max((ratio / want).arg().abs());
        }
    }
    report(
        "eigenstate fidelity",
        worst <= 1e-6,
        format!("max phase error {worst:.3e} rad at t = 10 over all 16 plane waves (tol 1e-6)"),
    );
}

#[test]
fn norm_conservation() {
    let mut rows = Vec::new();
    let osc = run_oscillation(&OscillationSetup::default()).unwrap();
    rows.push(("oscillation", osc.final_norm()));
    let split = run_beam_splitter(&SplitterSetup::default()).unwrap();
    rows.push(("splitter", split.final_norm()));
    let recomb = run_interference(&SplitterSetup::default(), -PI / 2.0).unwrap();
    rows.push(("recombination", recomb.final_norm()));
    for r in mach_zehnder_sweep(&SplitterSetup::default(), &[0.0, PI / 2.0, PI], None).unwrap() {
        rows.push(("mach-zehnder", r.final_norm()));
    }
    let worst = rows.iter().map(|(_, n)| (n - 1.0).abs()).fold(0.0, f64::max);
    let detail = rows
        .iter()
        .map(|(k, n)| format!("{k} {:.1e}", n - 1.0))
        .collect::<Vec<_>>()
        .join(", ");
    report(
        "norm conservation",
        worst <= 1e-8,
        format!("max |norm - 1| = {worst:.2e} (tol 1e-8); {detail}"),
    );
}

#[test]
fn rabi_transfer() {
    let setup = OscillationSetup::default();
    let r = run_oscillation(&setup).unwrap();
    let half_period = PI / (2.0 * 0.02);
    let interval = r.metric("transfer_interval").unwrap_or(f64::NAN);
    let after_onset = r.metric("first_transfer_after_onset").unwrap_or(f64::NAN);
    let rel_interval = (interval / half_period - 1.0).abs();
    let rel_onset = (after_onset / half_period - 1.0).abs();

    let constant = OscillationSetup {
        profile: CouplingProfile::uniform(0.02).unwrap(),
        ..OscillationSetup::default()
    };
    let rms = run_oscillation(&constant).unwrap().metric("oracle_rms").unwrap();

    // Literal decaying switch, for the record: the angle saturates at chi0 t0 = 0.5.
    let decaying = OscillationSetup {
        profile: CouplingProfile::exponential_switch(0.02, 25.0).unwrap(),
        ..OscillationSetup::default()
    };
    let max_decay = run_oscillation(&decaying).unwrap().metric("max_transfer").unwrap();

    report(
        "rabi transfer",
        rel_interval <= 0.05 && rel_onset <= 0.05 && rms <= 0.01,
        format!(
            "transfer interval {interval:.3} vs pi/(2 chi0) = {half_period:.3} ({:.2}%), \
             first transfer after switch-on {after_onset:.3} ({:.2}%), tol 5%; \
             constant-chi cos^2 RMS {rms:.2e} (tol 1e-2); decaying switch peaks at P2 = {max_decay:.4}",
            100.0 * rel_interval,
            100.0 * rel_onset
        ),
    );
}

#[test]
fn fifty_fifty_splitter() {
    let p = LatticeParams::unit(600).unwrap();
    let sigma_chi = calibrate_sigma_chi(0.1, 5.34, &p).unwrap();
    let r = run_beam_splitter(&SplitterSetup::default()).unwrap();
    let (p1, p2) = (r.final_populations[0], r.final_populations[1]);
    let residual = r.metric("phase_residual").unwrap();
    let pass = (sigma_chi - 5.07).abs() <= 0.01
        && (p1 - 0.5).abs() <= 0.01
        && (p2 - 0.5).abs() <= 0.01
        && residual <= 0.05;
    report(
        "50/50 splitter",
        pass,
        format!(
            "sigma_chi = {sigma_chi:.4} (5.07 +- 0.01); populations ({p1:.4}, {p2:.4}) (0.5 +- 0.01); \
             residual at phi = pi/2 {residual:.4} (<= 0.05); packet moves {}",
            r.direction
        ),
    );
}

#[test]
fn recombination() {
    let r = run_interference(&SplitterSetup::default(), -PI / 2.0).unwrap();
    let concentration = r.metric("concentration").unwrap();
    let dominant = r.metric("dominant_channel").unwrap();
    let oracle = r.metric("oracle_dominant_channel").unwrap();
    report(
        "recombination",
        concentration >= 0.99 && dominant == oracle,
        format!(
            "{concentration:.5} of population on channel {dominant} (>= 0.99); oracle predicts channel {oracle}"
        ),
    );
}

#[test]
fn mach_zehnder_response() {
    let deltas: Vec<f64> = (0..=16).map(|i| i as f64 * PI / 8.0).collect();
    let reports = mach_zehnder_sweep(&SplitterSetup::default(), &deltas, None).unwrap();
    let mut worst: f64 = 0.0;
    for (d, r) in deltas.iter().zip(&reports) {
        worst = worst.max((r.final_populations[0] - (d / 2.0).sin().powi(2)).abs());
    }
    report(
        "mach-zehnder response",
        worst <= 0.02,
        format!("max |P1 - sin^2(delta/2)| = {worst:.4} over 17 phases in [0, 2 pi] (tol 0.02)"),
    );
}

#[test]
fn multichannel_split() {
    let mut details = Vec::new();
    let mut pass = true;
    for n in [2usize, 3] {
        let setup = MultichannelSetup {
            n_daughters: n,
            chi: 0.05,
            ..MultichannelSetup::default()
        };
        let r = run_multichannel_split(&setup).unwrap();
        let t_eq = r.metric("t_eq").unwrap();
        let lattice: Vec<f64> = (1..=n + 1)
            .map(|i| r.metric(&format!("P{i}_at_t_eq")).unwrap())
            .collect();
        let brute = star_ode_populations(n, 0.05, t_eq);
        let share = 1.0 / (n as f64 + 1.0);
        let dev_share = lattice.iter().map(|p| (p - share).abs()).fold(0.0, f64::max);
        let dev_brute = lattice
            .iter()
            .zip(&brute)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        pass &= dev_share <= 0.02 && dev_brute <= 0.02;
        details.push(format!(
            "N = {n}: t_eq = {t_eq:.4}, max |P - 1/{}| = {dev_share:.2e}, vs star ODE {dev_brute:.2e}",
            n + 1
        ));
    }
    report("multi-channel split", pass, format!("{} (tol 0.02)", details.join("; ")));
}

#[test]
fn integrator_order() {
    let p = LatticeParams::unit(64).unwrap();
    let profile = CouplingProfile::spatial_gaussian(0.3, 3.0, 32.0, &p).unwrap();
    let h = Hamiltonian::new(p, profile, Topology::Pair).unwrap();
    let spec = PacketSpec {
        sigma: 4.0,
        center: 20.0,
        wavenumber: 1.2,
        channel: 0,
    };
    let s = excsim_core::make_gaussian_packet(&spec, &p, 2).unwrap();
    let t = 10.0;
    let run = |dt: f64| evolve(&h, &s, &IntegratorConfig::new(dt, t), &[]).unwrap().state;
    let reference = run(0.01 / 8.0);
    let err = |dt: f64| {
        let u = run(dt);
        u.amplitudes()
            .iter()
            .zip(reference.amplitudes().iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    };
    let e = [err(0.04), err(0.02), err(0.01)];
    let r1 = e[0] / e[1];
    let r2 = e[1] / e[2];
    let ok = |r: f64| (8.0..=32.0).contains(&r);
    report(
        "integrator order",
        ok(r1) && ok(r2),
        format!(
            "errors {:.3e}, {:.3e}, {:.3e} at dt = 0.04, 0.02, 0.01; ratios {r1:.2}, {r2:.2} (16 within x2)",
            e[0], e[1], e[2]
        ),
    );
}

#[test]
fn oracle_equivalence() {
    let pairs = [(0.1, 5.34), (0.05, 5.34), (0.1, 4.712), (0.08, 1.0), (0.1, 2.0)];
    let mut worst: f64 = 0.0;
    let mut details = Vec::new();
    for (chi0, k0) in pairs {
        let setup = SplitterSetup {
            chi0,
            k0,
            sigma_chi: Some(5.07),
            step: StepControl {
                sample_every: 100,
                ..StepControl::default()
            },
            ..SplitterSetup::default()
        };
        let r = run_beam_splitter(&setup).unwrap();
        let theta = r.metric("theta").unwrap();
        let oracle = two_port_oracle(theta, None, 1).unwrap();
        let dev = (r.final_populations[0] - oracle[0].norm_sqr())
            .abs()
            .max((r.final_populations[1] - oracle[1].norm_sqr()).abs());
        worst = worst.max(dev);
        details.push(format!("({chi0}, {k0}): theta {theta:.3}, dev {dev:.4}"));
    }
    report(
        "oracle equivalence",
        worst <= 0.02,
        format!("max deviation {worst:.4} (tol 0.02); {}", details.join("; ")),
    );
}
