//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

use std::time::{Duration, Instant};

use iontrap::bounds::{self, BoundMode, Prefactors};
use iontrap::chain;
use iontrap::cli;
use iontrap::decoherence;
use iontrap::pulse::{self, SidebandState};
use iontrap::species::{builtin_registry, IonSpecies, TrapConfig, CODATA_2018};
use num_complex::Complex64;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn species(name: &str) -> IonSpecies {
    builtin_registry().lookup(name).unwrap().clone()
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

// `l_max` as reported by the `factor-limit` subcommand.
fn cli_l_max(name: &str, safety: &str) -> Option<u64> {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = [
        "iontrap",
        "factor-limit",
        "--species",
        name,
        "--f-number",
        "1",
        "--safety",
        safety,
        "--mode",
        "intrinsic",
    ];
    if cli::run(argv, &mut out, &mut err) != cli::EXIT_OK {
        return None;
    }
    String::from_utf8(out)
        .ok()?
        .lines()
        .find_map(|l| l.strip_prefix("l_max = ")?.parse().ok())
}

fn intrinsic_limits(safety: f64, expected: [u64; 3]) -> Outcome {
    let start = Instant::now();
    let cfg = TrapConfig::new(1.0, safety, 0.0).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, want) in ["Hg II", "Ca II", "Ba II"].into_iter().zip(expected) {
        let lib = bounds::max_factorable_bits(
            &species(name),
            &cfg,
            BoundMode::Intrinsic,
            None,
            &Prefactors::PRINTED,
        )
        .unwrap()
        .l_max;
        let via_cli = cli_l_max(name, &safety.to_string());
        pass &= lib == want && via_cli == Some(want);
        parts.push(format!("{name}: {lib} (cli {via_cli:?}, want {want})"));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(1);
    outcome(pass, format!("{}; {elapsed:.2?}", parts.join(", ")))
}

fn criterion_1() -> Outcome {
    intrinsic_limits(1.0, [6, 9, 13])
}

fn criterion_2() -> Outcome {
    intrinsic_limits(3.0, [3, 5, 7])
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let yb = species("Yb II");
    let r = bounds::max_factorable_bits(
        &yb,
        &TrapConfig::default(),
        BoundMode::Intrinsic,
        None,
        &Prefactors::PRINTED,
    )
    .unwrap();
    let res = r.resources.expect("Yb II is feasible");
    let hours = r.total_time.unwrap() / 3600.0;
    let checks = [
        ("l_max == 438", r.l_max == 438),
        ("L == 2192", res.ions == 2192),
        (
            "N_U within 5% of 4.5e10",
            within(res.u_pulses as f64, 4.5e10, 0.05 * 4.5e10),
        ),
        ("time within 15% of 100 h", within(hours, 100.0, 15.0)),
    ];
    let elapsed = start.elapsed();
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    outcome(
        failed.is_empty() && elapsed < Duration::from_secs(1),
        format!(
            "l_max = {}, L = {}, N_U = {:.4e}, time = {hours:.1} h; failed: {failed:?}; {elapsed:.2?}",
            r.l_max, res.ions, res.u_pulses as f64
        ),
    )
}

fn criterion_4() -> Outcome {
    let fit = chain::fit_min_spacing(2, 50).unwrap();
    let fit_ok = within(fit.coefficient, 2.0, 0.1) && within(fit.exponent, 0.56, 0.03);

    let start = Instant::now();
    let sweep = chain::equilibrium_sweep(2..=1000);
    let elapsed = start.elapsed();
    let (sweep_ok, worst) = match &sweep {
        Ok(sols) => {
            let worst = sols.iter().map(|s| s.residual).fold(0.0, f64::max);
            (sols.len() == 999 && worst <= 1e-10, worst)
        }
        Err(_) => (false, f64::NAN),
    };
    outcome(
        fit_ok && sweep_ok && elapsed < Duration::from_secs(30),
        format!(
            "c = {:.4}, p = {:.4}; worst residual L<=1000 = {worst:.2e}; sweep {elapsed:.2?}",
            fit.coefficient, fit.exponent
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut worst: f64 = 0.0;
    for (ions, x) in [(2, 0.25f64.cbrt()), (3, 1.25f64.cbrt())] {
        let s = chain::equilibrium_positions(ions).unwrap();
        let (lo, hi) = (s.positions[0], s.positions[ions - 1]);
        worst = worst.max(((hi - x) / x).abs()).max(((lo + x) / x).abs());
        if ions == 3 {
            worst = worst.max(s.positions[1].abs());
        }
    }
    outcome(worst <= 1e-9, format!("max relative error {worst:.2e}"))
}

fn criterion_6() -> Outcome {
    let pf = Prefactors::derived(&CODATA_2018);
    outcome(
        within(pf.timing, 2.9, 0.1)
            && within(pf.intrinsic, 2.0, 0.07)
            && within(pf.experimental, 0.34, 0.01),
        format!(
            "timing {:.4}, intrinsic {:.4}, experimental {:.4}",
            pf.timing, pf.intrinsic, pf.experimental
        ),
    )
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let exact = decoherence::survival_exact(3, 0.01, 1.0).unwrap();
    let exact_ok = within(exact, 0.995019, 1e-6);

    let mut grid_ok = true;
    for ions in [1, 2, 3, 5, 10, 30, 100] {
        for x in [1e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1] {
            let t = x / ions as f64;
            let e = decoherence::survival_exact(ions, t, 1.0).unwrap();
            let lin = decoherence::survival_linear(ions, t, 1.0)
                .unwrap()
                .probability;
            grid_ok &= (e - lin).abs() <= 0.05 * x * x;
        }
    }

    let run = || decoherence::simulate_trajectories(3, 0.01, 1.0, 1_000_000, 2024).unwrap();
    let a = run();
    let b = run();
    let mc = a.p_monte_carlo.unwrap();
    let sigmas = (mc.mean - a.p_exact_simulated).abs() / mc.std_error;
    let repro =
        a.p_monte_carlo.map(|m| m.mean.to_bits()) == b.p_monte_carlo.map(|m| m.mean.to_bits());
    let elapsed = start.elapsed();
    outcome(
        exact_ok && grid_ok && sigmas <= 3.0 && repro && elapsed < Duration::from_secs(60),
        format!(
            "exact {exact:.7}; linear grid {}; MC {:.6} ({sigmas:.2} sigma); bitwise repro {repro}; {elapsed:.2?}",
            if grid_ok { "ok" } else { "violated" },
            mc.mean
        ),
    )
}

fn criterion_8() -> Outcome {
    let ions = 47;
    let t = pulse::pulse_timing(
        &species("Ca II"),
        &CODATA_2018,
        ions,
        &TrapConfig::default(),
    )
    .unwrap();
    let t_u = 2.0 * std::f64::consts::PI * (ions as f64).sqrt() / (t.omega * t.eta);
    let g = pulse::sideband_coupling(t.omega, t.eta, ions);
    let start = SidebandState::ground_one_phonon();
    let end = pulse::sideband_evolve(start, g, t_u, 0.3);
    let amp_err = (end.amp_g1 - Complex64::new(-1.0, 0.0))
        .norm()
        .max(end.amp_e0.norm());

    let steps = 1_000_000;
    let dt = t_u / steps as f64;
    let mut s = start;
    for _ in 0..steps {
        s = pulse::sideband_evolve(s, g, dt, 0.3);
    }
    let drift = (s.norm_sqr() - 1.0).abs();
    outcome(
        amp_err <= 1e-10 && drift <= 1e-12,
        format!("amplitude error {amp_err:.2e}; norm drift after {steps} steps {drift:.2e}"),
    )
}

fn criterion_9() -> Outcome {
    let cfg = TrapConfig::default();
    let pf = Prefactors::PRINTED;
    let grid = bounds::log_grid(1e-6, 1e3, 100);
    let all = [species("Hg II"), species("Ca II"), species("Ba II")];
    let refs: Vec<&IonSpecies> = all.iter().collect();
    let curves = bounds::fig2_curves(&refs, &cfg, &pf, &grid).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for (sp, curve) in all.iter().zip(&curves) {
        let levels: Vec<u64> = curve.points.iter().map(|p| p.1).collect();
        let monotone = levels.windows(2).all(|w| w[0] <= w[1]);
        let saturates = levels.last() == Some(&curve.intrinsic_l_max);
        let mut is_min = true;
        for &(tau_e, combined) in &curve.points {
            let exp =
                bounds::max_factorable_bits(sp, &cfg, BoundMode::Experimental, Some(tau_e), &pf)
                    .unwrap()
                    .l_max;
            is_min &= combined == exp.min(curve.intrinsic_l_max);
        }
        pass &= monotone && saturates && is_min;
        parts.push(format!(
            "{}: monotone {monotone}, saturates at {} {saturates}, min {is_min}",
            sp.name, curve.intrinsic_l_max
        ));
    }
    outcome(pass, parts.join("; "))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("intrinsic factoring limits (y = 1)", criterion_1),
        ("safety-factor sensitivity (y = 3)", criterion_2),
        ("Yb II headline", criterion_3),
        ("chain power-law fit and residuals", criterion_4),
        ("analytic chain cases", criterion_5),
        ("first-principles prefactors", criterion_6),
        ("decoherence model", criterion_7),
        ("sideband dynamics", criterion_8),
        ("coherence-time curves", criterion_9),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failures += 1;
        }
        println!(
            "{} criterion {}: {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
