use proptest::prelude::*;
use ramanmag_core::raman_laser::{laser_point, pump_depletion, single_pass_raman_gain};
use ramanmag_core::*;

const MHZ: f64 = 1e6;

fn mw(rabi: f64, detuning: f64) -> MicrowaveDrive {
    MicrowaveDrive::new(rabi * MHZ, detuning * MHZ, 1.0 * MHZ)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn forward_map_increasing_in_intracavity(
        kappa in 10e6f64..500e6, beta in 0.0f64..5000.0, log_ir in 3.0f64..12.0, factor in 1.0001f64..3.0
    ) {
        let sys = CavitySystem::default().with_loss_rate(kappa);
        let ir = 10f64.powf(log_ir);
        prop_assert!(pump_intensity_for_intracavity(&sys, ir * factor, beta) > pump_intensity_for_intracavity(&sys, ir, beta));
    }

    #[test]
    fn forward_map_increasing_in_beta(
        kappa in 10e6f64..500e6, beta in 0.0f64..5000.0, ir in 0.0f64..1e11, dbeta in 1.0f64..500.0
    ) {
        let sys = CavitySystem::default().with_loss_rate(kappa);
        prop_assert!(pump_intensity_for_intracavity(&sys, ir, beta + dbeta) > pump_intensity_for_intracavity(&sys, ir, beta));
    }

    #[test]
    fn stokes_energy_bounded_by_pump_loss(
        power in 0.2f64..2.0, rabi in 0.0f64..100.0, detuning in 0.0f64..200.0
    ) {
        let sys = CavitySystem::default();
        let pt = laser_point(&sys, &NVRates::default(), &mw(rabi, detuning), power).unwrap();
        let i0 = power / sys.beam_area();
        let dp = pump_depletion(&sys, i0, pt.intracavity_intensity, pt.beta);
        let dr = single_pass_raman_gain(&sys, i0, pt.intracavity_intensity, pt.beta);
        prop_assert!(dr <= sys.raman_frequency / sys.pump_frequency * dp * (1.0 + 1e-12));
        prop_assert!(pt.output_power >= 0.0 && pt.beta >= 0.0 && pt.pump_rate >= 0.0);
    }

    #[test]
    fn threshold_ordering(rabi in 1.0f64..150.0, detuning in 1.0f64..300.0) {
        let sys = CavitySystem::default();
        let r = NVRates::default();
        let resonant = threshold_pump(&sys, &r, &mw(rabi, 0.0)).unwrap();
        let detuned = threshold_pump(&sys, &r, &mw(rabi, detuning)).unwrap();
        let off = threshold_pump(&sys, &r, &mw(0.0, 0.0)).unwrap();
        prop_assert!(resonant <= detuned * (1.0 + 1e-10));
        prop_assert!(detuned <= off * (1.0 + 1e-10));
    }
}

#[test]
fn output_increases_above_threshold() {
    let sys = CavitySystem::default();
    let r = NVRates::default();
    for drive in [mw(0.0, 0.0), mw(18.0, 0.0), mw(18.0, 60.0)] {
        let p_th = threshold_pump(&sys, &r, &drive).unwrap();
        let grid: Vec<f64> = (1..=60).map(|i| p_th * (1.0 + 0.01 * i as f64)).collect();
        let pts = laser_curve(&sys, &r, &drive, &grid).unwrap();
        assert!(pts
            .windows(2)
            .all(|w| w[1].output_power > w[0].output_power));
        assert!(pts[0].output_power > 0.0);
    }
}

#[test]
fn threshold_matches_laser_curve_onset() {
    let sys = CavitySystem::default();
    let r = NVRates::default();
    for drive in [mw(0.0, 0.0), mw(18.0, 0.0), mw(18.0, 200.0)] {
        let p_th = threshold_pump(&sys, &r, &drive).unwrap();
        let step = 0.5e-3;
        let grid: Vec<f64> = (0..1000).map(|i| 0.30 + step * i as f64).collect();
        let pts = laser_curve(&sys, &r, &drive, &grid).unwrap();
        let onset = pts
            .iter()
            .find(|p| p.output_power > 0.0)
            .unwrap()
            .pump_power;
        assert!(
            onset >= p_th && onset - p_th <= step,
            "onset {onset} threshold {p_th}"
        );
    }
}

#[test]
fn absorption_free_laser_curve() {
    let sys = CavitySystem {
        ensemble: NVEnsemble {
            density: 0.0,
            ..NVEnsemble::default()
        },
        ..CavitySystem::default()
    };
    let r = NVRates::default();
    let p0 =
        sys.beam_area() * sys.refractive_index * sys.loss_rate / (299_792_458.0 * sys.raman_gain);
    let pts = laser_curve(&sys, &r, &mw(18.0, 0.0), &[0.99 * p0, 1.01 * p0, 2.0 * p0]).unwrap();
    assert_eq!(pts[0].output_power, 0.0);
    assert!(pts[1].output_power > 0.0);
    assert!(pts.iter().all(|p| p.beta == 0.0));
}

#[test]
fn saturated_beta_agrees_with_time_evolution() {
    let sys = CavitySystem::default();
    let r = NVRates::default();
    let drive = mw(18.0, 0.0);
    // intensity giving Λ_p = 1e9 s⁻¹
    let intensity = 1e9 * 6.626_070_15e-34 * sys.pump_frequency / sys.ensemble.cross_section;
    let beta = beta_at_pump(&sys, &r, &drive, intensity).unwrap();
    let full = sys.ensemble.cross_section * sys.ensemble.density;
    assert!(beta < full);
    let evolved = time_evolve(
        &r,
        &drive.with_pump_rate(pump_rate_from_intensity(&sys, intensity)),
        &DensityMatrixState::pure_level(1),
        2e-4,
        &StepControl::default(),
    )
    .unwrap();
    let beta_oracle = full * ground_population(&evolved);
    assert!((beta / beta_oracle - 1.0).abs() < 1e-6);
}

#[test]
fn detuned_curves_approach_mw_off() {
    let sys = CavitySystem::default();
    let r = NVRates::default();
    let off = threshold_pump(&sys, &r, &mw(0.0, 0.0)).unwrap();
    let mut prev = 0.0;
    for d in [0.0, 25.0, 50.0, 100.0, 200.0, 1000.0] {
        let p = threshold_pump(&sys, &r, &mw(18.0, d)).unwrap();
        assert!(p > prev);
        prev = p;
    }
    assert!((off - prev) / off < 1e-3);
}

#[test]
fn threshold_grows_nearly_linearly_with_loss() {
    let r = NVRates::default();
    let kappas: Vec<f64> = (0..6).map(|i| (75.0 + 35.0 * i as f64) * MHZ).collect();
    let th: Vec<f64> = kappas
        .iter()
        .map(|&k| {
            threshold_pump(
                &CavitySystem::default().with_loss_rate(k),
                &r,
                &mw(18.0, 0.0),
            )
            .unwrap()
        })
        .collect();
    // least-squares line through the points; deviations within 1%
    let n = th.len() as f64;
    let mx = kappas.iter().sum::<f64>() / n;
    let my = th.iter().sum::<f64>() / n;
    let sxy: f64 = kappas
        .iter()
        .zip(&th)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum();
    let sxx: f64 = kappas.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    for (x, y) in kappas.iter().zip(&th) {
        let fit = my + slope * (x - mx);
        assert!((y / fit - 1.0).abs() < 0.01, "{x} {y} {fit}");
    }
    assert!(slope > 0.0);
}
