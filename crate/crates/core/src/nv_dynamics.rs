//! Five-level NV centre under optical pumping and microwave driving.
//!
//! Levels: |1⟩ = ground m_s = 0, |2⟩ = ground m_s = ±1, |3⟩/|4⟩ the
//! corresponding excited states and |5⟩ the singlet shelf. Only the ground
//! coherence ρ₁₂ is kept, so the state is the real 7-vector
//! `(ρ₁₁, ρ₂₂, ρ₃₃, ρ₄₄, ρ₅₅, Re ρ₁₂, Im ρ₁₂)`.

use nalgebra::{SMatrix, SVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::{CM2, PER_CM3, PER_MICROSECOND};
use crate::error::{Error, Result};
use crate::numerics::dormand_prince;

pub use crate::numerics::OdeOptions as StepControl;

pub const STATE_DIM: usize = 7;
pub type StateVector = SVector<f64, STATE_DIM>;
pub type Generator = SMatrix<f64, STATE_DIM, STATE_DIM>;

/// Tolerance on Σρᵢᵢ = 1 and on the positivity checks of a state.
pub const STATE_TOL: f64 = 1e-10;
/// Pivots smaller than this (relative to the largest matrix entry) mark the
/// steady-state system as singular.
const SINGULAR_PIVOT: f64 = 1e-14;
const STEADY_RESIDUAL_TOL: f64 = 1e-10;

/// Internal transition rates Rᵢⱼ (s⁻¹).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NVRates {
    pub r31: f64,
    pub r42: f64,
    pub r35: f64,
    pub r45: f64,
    pub r51: f64,
    pub r52: f64,
}

impl Default for NVRates {
    fn default() -> Self {
        Self {
            r31: 66.16 * PER_MICROSECOND,
            r42: 66.16 * PER_MICROSECOND,
            r35: 11.1 * PER_MICROSECOND,
            r45: 91.8 * PER_MICROSECOND,
            r51: 4.87 * PER_MICROSECOND,
            r52: 2.04 * PER_MICROSECOND,
        }
    }
}

impl NVRates {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("r31", self.r31),
            ("r42", self.r42),
            ("r35", self.r35),
            ("r45", self.r45),
            ("r51", self.r51),
            ("r52", self.r52),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(
                    name,
                    format!("rate must be positive and finite, got {v}"),
                ));
            }
        }
        Ok(())
    }

    fn all(&self) -> [f64; 6] {
        [self.r31, self.r42, self.r35, self.r45, self.r51, self.r52]
    }
}

/// How the quoted Rabi frequency enters the ground-state coupling.
///
/// With `HalfCoupling` the coherent terms read `i(Ω_d/2)(ρ₂₂ − ρ₁₁)` as the
/// master equation is usually written. With `FullCoupling` the quoted value
/// is half of that equation's Ω, i.e. the coupling term is `iΩ_d(ρ₂₂ − ρ₁₁)`;
/// this is the convention under which the published figure values
/// (optimum drive, minimum sensitivity) are reproduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RabiConvention {
    #[default]
    FullCoupling,
    HalfCoupling,
}

/// Microwave drive and ground-state dephasing, without the optical pump.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MicrowaveDrive {
    /// Rabi frequency Ω_d (s⁻¹).
    pub rabi: f64,
    /// Detuning Δ_g (s⁻¹).
    pub detuning: f64,
    /// Intrinsic dephasing Γ_g (s⁻¹).
    pub dephasing: f64,
    #[serde(default)]
    pub convention: RabiConvention,
}

impl MicrowaveDrive {
    pub fn new(rabi: f64, detuning: f64, dephasing: f64) -> Self {
        Self {
            rabi,
            detuning,
            dephasing,
            convention: RabiConvention::default(),
        }
    }

    pub fn with_convention(mut self, convention: RabiConvention) -> Self {
        self.convention = convention;
        self
    }

    pub fn with_detuning(mut self, detuning: f64) -> Self {
        self.detuning = detuning;
        self
    }

    pub fn with_pump_rate(self, pump_rate: f64) -> DriveField {
        DriveField {
            rabi: self.rabi,
            detuning: self.detuning,
            dephasing: self.dephasing,
            pump_rate,
            convention: self.convention,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.with_pump_rate(0.0).validate()
    }
}

/// Everything acting on the NV: microwave drive, dephasing and pump rate Λ_p.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DriveField {
    pub rabi: f64,
    pub detuning: f64,
    pub dephasing: f64,
    pub pump_rate: f64,
    #[serde(default)]
    pub convention: RabiConvention,
}

impl DriveField {
    pub fn validate(&self) -> Result<()> {
        let non_negative = [
            ("rabi", self.rabi),
            ("dephasing", self.dephasing),
            ("pump_rate", self.pump_rate),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(
                    name,
                    format!("must be non-negative and finite, got {v}"),
                ));
            }
        }
        if !self.detuning.is_finite() {
            return Err(Error::invalid("detuning", "must be finite"));
        }
        Ok(())
    }

    /// The factor `k` multiplying `i(ρ₂₂ − ρ₁₁)` in dρ₁₂/dt.
    pub fn coupling(&self) -> f64 {
        match self.convention {
            RabiConvention::FullCoupling => self.rabi,
            RabiConvention::HalfCoupling => 0.5 * self.rabi,
        }
    }

    pub fn microwave(&self) -> MicrowaveDrive {
        MicrowaveDrive {
            rabi: self.rabi,
            detuning: self.detuning,
            dephasing: self.dephasing,
            convention: self.convention,
        }
    }
}

/// NV density matrix restricted to populations and the ground coherence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrixState {
    pub pop: [f64; 5],
    pub coh12: Complex64,
}

impl DensityMatrixState {
    /// All population in level `level` (1-based, 1..=5).
    pub fn pure_level(level: usize) -> Self {
        assert!((1..=5).contains(&level), "level must be in 1..=5");
        let mut pop = [0.0; 5];
        pop[level - 1] = 1.0;
        Self {
            pop,
            coh12: Complex64::new(0.0, 0.0),
        }
    }

    pub fn from_vector(v: &StateVector) -> Self {
        Self {
            pop: [v[0], v[1], v[2], v[3], v[4]],
            coh12: Complex64::new(v[5], v[6]),
        }
    }

    pub fn to_vector(&self) -> StateVector {
        StateVector::from([
            self.pop[0],
            self.pop[1],
            self.pop[2],
            self.pop[3],
            self.pop[4],
            self.coh12.re,
            self.coh12.im,
        ])
    }

    pub fn trace(&self) -> f64 {
        self.pop.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self
            .pop
            .iter()
            .any(|p| !(-STATE_TOL..=1.0 + STATE_TOL).contains(p))
        {
            return Err(Error::invalid(
                "pop",
                format!("population outside [0, 1]: {:?}", self.pop),
            ));
        }
        if (self.trace() - 1.0).abs() > STATE_TOL {
            return Err(Error::invalid(
                "pop",
                format!("trace {} != 1", self.trace()),
            ));
        }
        if self.coh12.norm_sqr() > self.pop[0] * self.pop[1] + STATE_TOL {
            return Err(Error::invalid("coh12", "|ρ₁₂|² exceeds ρ₁₁ρ₂₂"));
        }
        Ok(())
    }
}

/// NV ensemble absorption parameters (SI: m², m⁻³).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NVEnsemble {
    pub cross_section: f64,
    pub density: f64,
}

impl Default for NVEnsemble {
    fn default() -> Self {
        Self::from_cgs(1.3e-17, 1.77e18)
    }
}

impl NVEnsemble {
    /// Cross-section in cm² and density in cm⁻³.
    pub fn from_cgs(cross_section_cm2: f64, density_per_cm3: f64) -> Self {
        Self {
            cross_section: cross_section_cm2 * CM2,
            density: density_per_cm3 * PER_CM3,
        }
    }

    /// Density may be zero (absorption-free limit); the cross-section may not.
    pub fn validate(&self) -> Result<()> {
        if !(self.cross_section > 0.0 && self.cross_section.is_finite()) {
            return Err(Error::invalid(
                "cross_section",
                "must be positive and finite",
            ));
        }
        if !(self.density >= 0.0 && self.density.is_finite()) {
            return Err(Error::invalid("density", "must be non-negative and finite"));
        }
        Ok(())
    }
}

/// Real generator `G` with `d(state)/dt = G · state`.
pub fn build_generator(rates: &NVRates, drive: &DriveField) -> Generator {
    let NVRates {
        r31,
        r42,
        r35,
        r45,
        r51,
        r52,
    } = *rates;
    let pump = drive.pump_rate;
    let k = drive.coupling();
    let decay12 = pump + drive.dephasing;
    let (p1, p2, p3, p4, p5, re, im) = (0, 1, 2, 3, 4, 5, 6);

    let mut g = Generator::zeros();
    // ρ₁₁, ρ₂₂: pumping out, radiative and singlet return, coherent exchange
    g[(p1, p1)] = -pump;
    g[(p1, p3)] = r31;
    g[(p1, p5)] = r51;
    g[(p1, im)] = -2.0 * k;
    g[(p2, p2)] = -pump;
    g[(p2, p4)] = r42;
    g[(p2, p5)] = r52;
    g[(p2, im)] = 2.0 * k;
    // excited states
    g[(p3, p1)] = pump;
    g[(p3, p3)] = -(r31 + r35);
    g[(p4, p2)] = pump;
    g[(p4, p4)] = -(r42 + r45);
    // singlet
    g[(p5, p3)] = r35;
    g[(p5, p4)] = r45;
    g[(p5, p5)] = -(r51 + r52);
    // ρ₁₂ = x + iy
    g[(re, re)] = -decay12;
    g[(re, im)] = -drive.detuning;
    g[(im, re)] = drive.detuning;
    g[(im, im)] = -decay12;
    g[(im, p1)] = k;
    g[(im, p2)] = -k;
    g
}

/// Unique stationary state of the master equation with Σρᵢᵢ = 1.
pub fn steady_state(rates: &NVRates, drive: &DriveField) -> Result<DensityMatrixState> {
    rates.validate()?;
    drive.validate()?;
    let g = build_generator(rates, drive);
    let scale = g.amax();

    let mut a = g;
    for j in 0..STATE_DIM {
        a[(0, j)] = if j < 5 { 1.0 } else { 0.0 };
    }
    let mut b = StateVector::zeros();
    b[0] = 1.0;

    let a_scale = a.amax();
    let lu = a.lu();
    let u = lu.u();
    let min_pivot = (0..STATE_DIM)
        .map(|i| u[(i, i)].abs())
        .fold(f64::INFINITY, f64::min);
    let relative_pivot = min_pivot / a_scale;
    if !(relative_pivot > SINGULAR_PIVOT) {
        return Err(Error::SingularSystem { relative_pivot });
    }
    let mut x = lu
        .solve(&b)
        .ok_or(Error::SingularSystem { relative_pivot })?;
    // one step of iterative refinement
    if let Some(dx) = lu.solve(&(b - a * x)) {
        x += dx;
    }

    let residual = (g * x).amax();
    let trace_err = (x.fixed_rows::<5>(0).sum() - 1.0).abs();
    if residual > STEADY_RESIDUAL_TOL * scale || trace_err > STATE_TOL {
        return Err(Error::SingularSystem { relative_pivot });
    }
    Ok(DensityMatrixState::from_vector(&x))
}

/// Integrate the master equation for `duration` seconds.
pub fn time_evolve(
    rates: &NVRates,
    drive: &DriveField,
    initial: &DensityMatrixState,
    duration: f64,
    control: &StepControl,
) -> Result<DensityMatrixState> {
    rates.validate()?;
    drive.validate()?;
    initial.validate()?;
    let g = build_generator(rates, drive);
    let y = dormand_prince(|_, y| g * y, 0.0, initial.to_vector(), duration, control)?;
    Ok(DensityMatrixState::from_vector(&y))
}

/// Smallest strictly positive rate among the internal rates, Λ_p, Γ_g, Ω_d
/// and |Δ_g|. Sets a natural time scale for relaxation checks.
pub fn min_nonzero_rate(rates: &NVRates, drive: &DriveField) -> f64 {
    rates
        .all()
        .into_iter()
        .chain([
            drive.pump_rate,
            drive.dephasing,
            drive.coupling(),
            drive.detuning.abs(),
        ])
        .filter(|r| *r > 0.0)
        .fold(f64::INFINITY, f64::min)
}

/// Total ground-state population ρ_g = ρ₁₁ + ρ₂₂.
pub fn ground_population(state: &DensityMatrixState) -> f64 {
    state.pop[0] + state.pop[1]
}

/// Base-e pump absorption coefficient β = σ D ρ_g (m⁻¹).
pub fn absorption_coefficient(ensemble: &NVEnsemble, rho_g: f64) -> f64 {
    ensemble.cross_section * ensemble.density * rho_g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{MHZ, PER_CM};

    fn reference_drive(detuning: f64) -> DriveField {
        MicrowaveDrive::new(18.0 * MHZ, detuning, 1.0 * MHZ).with_pump_rate(17.64 * MHZ)
    }

    /// Eqs. for dρ/dt written directly in complex form, one line per equation.
    fn complex_rhs(r: &NVRates, d: &DriveField, s: &StateVector) -> StateVector {
        let i = Complex64::i();
        let omega = 2.0 * d.coupling();
        let (rho11, rho22, rho33, rho44, rho55) = (s[0], s[1], s[2], s[3], s[4]);
        let rho12 = Complex64::new(s[5], s[6]);
        let rho21 = rho12.conj();
        let l = d.pump_rate;
        let drho12 =
            (i * d.detuning - l - d.dephasing) * rho12 - i * (omega / 2.0) * (rho22 - rho11);
        let drho11 =
            -i * (omega / 2.0) * (rho21 - rho12) - l * rho11 + r.r31 * rho33 + r.r51 * rho55;
        let drho22 =
            i * (omega / 2.0) * (rho21 - rho12) - l * rho22 + r.r42 * rho44 + r.r52 * rho55;
        let drho33 = l * rho11 - (r.r31 + r.r35) * rho33;
        let drho44 = l * rho22 - (r.r42 + r.r45) * rho44;
        let drho55 = r.r35 * rho33 + r.r45 * rho44 - (r.r52 + r.r51) * rho55;
        assert!(drho11.im.abs() < 1e-6 * drho11.re.abs().max(1.0));
        StateVector::from([
            drho11.re, drho22.re, drho33, drho44, drho55, drho12.re, drho12.im,
        ])
    }

    #[test]
    fn default_rates() {
        let r = NVRates::default();
        assert_eq!(r.r31, 66.16e6);
        assert_eq!(r.r42, 66.16e6);
        assert_eq!(r.r45, 91.8e6);
        assert_eq!(r.r35, 11.1e6);
        assert_eq!(r.r51, 4.87e6);
        assert_eq!(r.r52, 2.04e6);
        r.validate().unwrap();
    }

    #[test]
    fn invalid_rates_and_drive_rejected() {
        let r = NVRates {
            r35: 0.0,
            ..NVRates::default()
        };
        assert!(r.validate().is_err());
        let d = DriveField {
            rabi: -1.0,
            ..DriveField::default()
        };
        assert!(d.validate().is_err());
        let d = DriveField {
            detuning: f64::NAN,
            ..DriveField::default()
        };
        assert!(d.validate().is_err());
        // negative detuning is fine
        DriveField {
            detuning: -5.0,
            ..DriveField::default()
        }
        .validate()
        .unwrap();
    }

    #[test]
    fn generator_matches_hand_coded_equations() {
        let rates = NVRates::default();
        for convention in [RabiConvention::FullCoupling, RabiConvention::HalfCoupling] {
            let mut drive = reference_drive(0.0);
            drive.convention = convention;
            let g = build_generator(&rates, &drive);
            for j in 0..STATE_DIM {
                let mut e = StateVector::zeros();
                e[j] = 1.0;
                let expected = complex_rhs(&rates, &drive, &e);
                for i in 0..STATE_DIM {
                    assert!(
                        (g[(i, j)] - expected[i]).abs() <= 1e-12 * g.amax(),
                        "entry ({i},{j}) {convention:?}: {} vs {}",
                        g[(i, j)],
                        expected[i]
                    );
                }
            }
        }
    }

    #[test]
    fn full_coupling_doubles_coherent_terms() {
        let rates = NVRates::default();
        let full = build_generator(&rates, &reference_drive(0.0));
        let mut half_drive = reference_drive(0.0);
        half_drive.convention = RabiConvention::HalfCoupling;
        let half = build_generator(&rates, &half_drive);
        assert_eq!(full[(0, 6)], -18.0e6 * 2.0);
        assert_eq!(half[(0, 6)], -18.0e6);
        assert_eq!(full[(6, 0)], 2.0 * half[(6, 0)]);
    }

    #[test]
    fn undriven_unpumped_generator_decouples_coherence() {
        let g = build_generator(
            &NVRates::default(),
            &MicrowaveDrive::new(0.0, 3e6, 1e6).with_pump_rate(0.0),
        );
        for i in 0..5 {
            assert_eq!(g[(i, 5)], 0.0);
            assert_eq!(g[(i, 6)], 0.0);
            assert_eq!(g[(5, i)], 0.0);
            assert_eq!(g[(6, i)], 0.0);
        }
        // ground levels receive flow only from decays
        assert_eq!(g[(0, 0)], 0.0);
        assert_eq!(g[(1, 1)], 0.0);
        assert_eq!(g[(2, 0)], 0.0);
        assert_eq!(g[(3, 1)], 0.0);
    }

    #[test]
    fn population_columns_sum_to_zero() {
        let g = build_generator(&NVRates::default(), &reference_drive(37e6));
        for j in 0..STATE_DIM {
            let s: f64 = (0..5).map(|i| g[(i, j)]).sum();
            assert!(s.abs() <= 1e-9, "column {j} sums to {s}");
        }
    }

    #[test]
    fn degenerate_dark_case_is_singular() {
        for dephasing in [0.0, 1e6, 5e7] {
            let drive = MicrowaveDrive::new(0.0, 0.0, dephasing).with_pump_rate(0.0);
            assert!(matches!(
                steady_state(&NVRates::default(), &drive),
                Err(Error::SingularSystem { .. })
            ));
        }
    }

    #[test]
    fn undriven_steady_state_matches_flow_balance() {
        let r = NVRates::default();
        for pump in [1e5, 3e6, 17.64e6, 4e8] {
            for detuning in [0.0, -40e6, 200e6] {
                let drive = MicrowaveDrive::new(0.0, detuning, 1e6).with_pump_rate(pump);
                let s = steady_state(&r, &drive).unwrap();
                // per unit ρ₅₅: R35 ρ₃₃ = R51 ρ₅₅, R45 ρ₄₄ = R52 ρ₅₅, ρ₃₃ = Λρ₁₁/(R31+R35), ...
                let a = pump / (r.r31 + r.r35);
                let b = pump / (r.r42 + r.r45);
                let unnorm = [
                    r.r51 / (r.r35 * a),
                    r.r52 / (r.r45 * b),
                    r.r51 / r.r35,
                    r.r52 / r.r45,
                    1.0,
                ];
                let total: f64 = unnorm.iter().sum();
                for (i, u) in unnorm.iter().enumerate() {
                    assert!(
                        (s.pop[i] - u / total).abs() < 1e-12,
                        "pump {pump} level {i}"
                    );
                }
                assert!(s.coh12.norm() < 1e-14);
            }
        }
    }

    #[test]
    fn resonant_driving_lowers_ground_population() {
        let r = NVRates::default();
        let on = ground_population(&steady_state(&r, &reference_drive(0.0)).unwrap());
        let off = ground_population(&steady_state(&r, &reference_drive(200e6)).unwrap());
        assert!(on < off, "{on} vs {off}");
    }

    #[test]
    fn steady_state_is_a_valid_density_matrix() {
        let s = steady_state(&NVRates::default(), &reference_drive(7e6)).unwrap();
        s.validate().unwrap();
        let g = build_generator(&NVRates::default(), &reference_drive(7e6));
        assert!((g * s.to_vector()).amax() <= 1e-10 * g.amax());
    }

    #[test]
    fn time_evolve_keeps_steady_state() {
        let r = NVRates::default();
        let d = reference_drive(12e6);
        let s = steady_state(&r, &d).unwrap();
        let out = time_evolve(&r, &d, &s, 2e-6, &StepControl::default()).unwrap();
        for (a, b) in out.to_vector().iter().zip(s.to_vector().iter()) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn dark_state_is_stationary() {
        let d = MicrowaveDrive::new(0.0, 0.0, 1e6).with_pump_rate(0.0);
        let init = DensityMatrixState::pure_level(1);
        let out = time_evolve(
            &NVRates::default(),
            &d,
            &init,
            1e-3,
            &StepControl::default(),
        )
        .unwrap();
        assert_eq!(out, init);
    }

    #[test]
    fn singlet_branching_ratio() {
        let r = NVRates::default();
        let d = MicrowaveDrive::new(0.0, 0.0, 1e6).with_pump_rate(0.0);
        let out = time_evolve(
            &r,
            &d,
            &DensityMatrixState::pure_level(5),
            10e-3,
            &StepControl::default(),
        )
        .unwrap();
        let total = r.r51 + r.r52;
        assert!((out.pop[0] - r.r51 / total).abs() < 1e-6);
        assert!((out.pop[1] - r.r52 / total).abs() < 1e-6);
        assert!((out.trace() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn ground_population_extremes() {
        assert_eq!(ground_population(&DensityMatrixState::pure_level(1)), 1.0);
        assert_eq!(ground_population(&DensityMatrixState::pure_level(5)), 0.0);
    }

    #[test]
    fn absorption_coefficient_values() {
        let e = NVEnsemble::default();
        assert_eq!(absorption_coefficient(&e, 0.0), 0.0);
        // σD = 1.3e-17 × 1.77e18 = 23.01 cm⁻¹
        assert!((absorption_coefficient(&e, 1.0) / PER_CM - 23.01).abs() < 1e-10);
        assert!((absorption_coefficient(&e, 0.5) / PER_CM - 11.505).abs() < 1e-10);
    }

    #[test]
    fn invalid_initial_state_rejected() {
        let mut s = DensityMatrixState::pure_level(1);
        s.pop[1] = 0.5;
        assert!(time_evolve(
            &NVRates::default(),
            &reference_drive(0.0),
            &s,
            1e-6,
            &StepControl::default()
        )
        .is_err());
        let mut s = DensityMatrixState::pure_level(1);
        s.coh12 = Complex64::new(0.1, 0.0);
        assert!(s.validate().is_err());
    }
}
