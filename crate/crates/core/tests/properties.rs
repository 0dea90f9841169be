use iontrap::bounds::{self, BoundMode, Prefactors};
use iontrap::chain;
use iontrap::decoherence;
use iontrap::pulse::{self, SidebandState};
use iontrap::species::{builtin_registry, IonSpecies, SpeciesRegistry, TrapConfig};
use num_complex::Complex64;
use proptest::prelude::*;

fn species_strategy() -> impl Strategy<Value = IonSpecies> {
    (
        "[A-Z][a-z]? I{1,3}",
        1u32..4,
        1.0f64..300.0,
        100.0f64..3000.0,
        1e-3f64..1e9,
        prop::option::of("[a-z ]{1,20}"),
    )
        .prop_map(|(name, z, a, lambda, tau0, note)| {
            let sp = IonSpecies::new(name, z, a, lambda, tau0).unwrap();
            match note {
                Some(n) => sp.with_note(n),
                None => sp,
            }
        })
}

fn registry_strategy() -> impl Strategy<Value = SpeciesRegistry> {
    prop::collection::vec(species_strategy(), 0..6).prop_map(|list| {
        let mut reg = SpeciesRegistry::empty();
        for sp in list {
            reg.insert(sp);
        }
        reg
    })
}

fn builtin(name: &str) -> IonSpecies {
    builtin_registry().lookup(name).unwrap().clone()
}

fn l_max(sp: &IonSpecies, cfg: &TrapConfig, mode: BoundMode, tau_e: Option<f64>) -> u64 {
    bounds::max_factorable_bits(sp, cfg, mode, tau_e, &Prefactors::PRINTED)
        .unwrap()
        .l_max
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn species_document_round_trips(reg in registry_strategy()) {
        let back = SpeciesRegistry::from_document(&reg.to_document()).unwrap();
        prop_assert_eq!(back, reg);
    }

    #[test]
    fn chain_shape(ions in 2usize..160) {
        let s = chain::equilibrium_positions(ions).unwrap();
        prop_assert!(s.residual <= chain::RESIDUAL_TOLERANCE);
        let x = &s.positions;
        prop_assert!(x.windows(2).all(|w| w[1] > w[0]));
        let scale = x[ions - 1];
        for i in 0..ions {
            prop_assert!((x[i] + x[ions - 1 - i]).abs() <= 1e-12 * scale);
        }
        prop_assert!(x.iter().sum::<f64>().abs() <= 1e-11 * scale * ions as f64);
        // gaps shrink toward the centre, where the minimum sits
        let half = &s.gaps[..ions / 2];
        prop_assert!(half.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        prop_assert_eq!(s.min_spacing, s.center_gap());
        prop_assert!(s.gaps.iter().all(|&g| g >= s.min_spacing));
    }

    #[test]
    fn intrinsic_budget_falls_with_ions(ions in 2u64..5000, tau0 in 1e-3f64..1e8) {
        let mut sp = builtin("Ca II");
        sp.tau0 = tau0;
        let cfg = TrapConfig::default();
        let pf = Prefactors::PRINTED;
        let a = bounds::intrinsic_pulse_budget(&sp, ions, &cfg, &pf).unwrap();
        let b = bounds::intrinsic_pulse_budget(&sp, ions + 1, &cfg, &pf).unwrap();
        prop_assert!(b < a);
    }

    #[test]
    fn l_max_monotone_in_parameters(
        tau0 in 1e-3f64..1e6,
        factor in 1.0f64..10.0,
        safety in 1.0f64..5.0,
        f_number in 0.5f64..5.0,
    ) {
        let mut sp = builtin("Ba II");
        sp.tau0 = tau0;
        let cfg = TrapConfig::new(f_number, safety, 0.0).unwrap();
        let base = l_max(&sp, &cfg, BoundMode::Intrinsic, None);

        let mut longer = sp.clone();
        longer.tau0 = tau0 * factor;
        prop_assert!(l_max(&longer, &cfg, BoundMode::Intrinsic, None) >= base);

        let mut redder = sp.clone();
        redder.lambda_nm *= factor;
        prop_assert!(l_max(&redder, &cfg, BoundMode::Intrinsic, None) <= base);

        let worse_y = TrapConfig::new(f_number, safety * factor, 0.0).unwrap();
        prop_assert!(l_max(&sp, &worse_y, BoundMode::Intrinsic, None) <= base);
        let worse_f = TrapConfig::new(f_number * factor, safety, 0.0).unwrap();
        prop_assert!(l_max(&sp, &worse_f, BoundMode::Intrinsic, None) <= base);
    }

    #[test]
    fn combined_is_min_of_modes(tau_e in 1e-7f64..1e4, which in 0usize..4) {
        let sp = builtin(["Hg II", "Ca II", "Ba II", "Yb II"][which]);
        let cfg = TrapConfig::default();
        let combined = l_max(&sp, &cfg, BoundMode::Combined, Some(tau_e));
        let intrinsic = l_max(&sp, &cfg, BoundMode::Intrinsic, None);
        let experimental = l_max(&sp, &cfg, BoundMode::Experimental, Some(tau_e));
        prop_assert_eq!(combined, intrinsic.min(experimental));
        prop_assert!(l_max(&sp, &cfg, BoundMode::Experimental, Some(tau_e * 2.0)) >= experimental);
    }

    #[test]
    fn resources_respect_bound_at_limit(which in 0usize..3, safety in 1.0f64..4.0) {
        let sp = builtin(["Hg II", "Ca II", "Ba II"][which]);
        let cfg = TrapConfig::new(1.0, safety, 0.0).unwrap();
        let pf = Prefactors::PRINTED;
        let r = bounds::max_factorable_bits(&sp, &cfg, BoundMode::Intrinsic, None, &pf).unwrap();
        let rhs = bounds::intrinsic_bound_rhs(&sp, &cfg, &pf);
        let lhs = |l: u64| {
            let p = bounds::shor_resources(l).unwrap();
            p.u_pulses as f64 * (p.ions as f64).powf(1.84)
        };
        if r.l_max > 0 {
            prop_assert!(lhs(r.l_max) < rhs);
        }
        prop_assert!(lhs(r.l_max + 1) >= rhs);
    }

    #[test]
    fn survival_ordering(ions in 2usize..200, x in 0.0f64..0.5) {
        let t = x / ions as f64;
        let exact = decoherence::survival_exact(ions, t, 1.0).unwrap();
        let linear = decoherence::survival_linear(ions, t, 1.0).unwrap().probability;
        prop_assert!((0.0..=1.0).contains(&exact));
        prop_assert!(exact >= linear - 1e-15);
        let later = decoherence::survival_exact(ions, t * 1.5 + 1e-9, 1.0).unwrap();
        prop_assert!(later <= exact);
        let more = decoherence::survival_exact(ions + 1, t, 1.0).unwrap();
        prop_assert!(more <= exact);
    }

    #[test]
    fn sideband_unitarity(
        re in -1.0f64..1.0,
        im in -1.0f64..1.0,
        g in 1e2f64..1e7,
        t in 0.0f64..1e-3,
        phi in -3.2f64..3.2,
    ) {
        let a = Complex64::new(re, im);
        let b_mag = (2.0 - a.norm_sqr()).max(0.0).sqrt();
        let s = SidebandState { amp_g1: a, amp_e0: Complex64::new(0.0, b_mag) };
        let n = s.norm_sqr();
        let out = pulse::sideband_evolve(s, g, t, phi);
        prop_assert!((out.norm_sqr() - n).abs() <= 1e-14 * n.max(1.0));
        // running backwards in time undoes the pulse
        let back = pulse::sideband_evolve(out, g, -t, phi);
        prop_assert!((back.amp_g1 - s.amp_g1).norm() < 1e-12);
        prop_assert!((back.amp_e0 - s.amp_e0).norm() < 1e-12);
    }
}

#[test]
fn fig2_curves_rise_to_intrinsic_limit() {
    let all = [
        builtin("Hg II"),
        builtin("Ca II"),
        builtin("Ba II"),
        builtin("Yb II"),
    ];
    let refs: Vec<&IonSpecies> = all.iter().collect();
    let grid = bounds::log_grid(1e-7, 1e9, 60);
    let curves =
        bounds::fig2_curves(&refs, &TrapConfig::default(), &Prefactors::PRINTED, &grid).unwrap();
    for c in &curves {
        assert!(
            c.points.windows(2).all(|w| w[0].1 <= w[1].1),
            "{}",
            c.species
        );
        assert!(c.points.iter().all(|p| p.1 <= c.intrinsic_l_max));
        assert_eq!(
            c.points.last().unwrap().1,
            c.intrinsic_l_max,
            "{}",
            c.species
        );
        assert_eq!(c.points[0].1, 0, "{}", c.species);
    }
}

#[test]
fn fig2_rejects_bad_grids() {
    let ca = builtin("Ca II");
    let cfg = TrapConfig::default();
    let pf = Prefactors::PRINTED;
    for grid in [
        vec![],
        vec![1.0, 1.0],
        vec![2.0, 1.0],
        vec![0.0, 1.0],
        vec![1.0, f64::INFINITY],
    ] {
        assert_eq!(
            bounds::fig2_curves(&[&ca], &cfg, &pf, &grid),
            Err(bounds::BoundsError::Grid)
        );
    }
    assert_eq!(
        bounds::fig2_curves(&[], &cfg, &pf, &[1.0]),
        Err(bounds::BoundsError::NoSpecies)
    );
}

#[test]
fn fig1_factorization_hits_intersections() {
    let hg = builtin("Hg II");
    let cfg = TrapConfig::default();
    let pf = Prefactors::PRINTED;
    let data = bounds::fig1_curves(&[&hg], &cfg, &pf, 2..=100, 15).unwrap();
    let curve = &data.bounds[0];
    // Below the Hg bound up to l = 6, above it from l = 7.
    for p in &data.factorization {
        let budget = curve.points.iter().find(|q| q.0 == p.ions).unwrap().1;
        assert_eq!((p.u_pulses as f64) < budget, p.bits <= 6, "l = {}", p.bits);
    }
}
