//! Exact statevector simulation of QAOA on diagonal Hamiltonians.
//!
//! Qubit `i` is bit `i` of the basis-state index. One level applies
//! `exp(-iθ_obj H)` and then `exp(-iθ_mix Σ X_i)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuits::GateSchedule;
use crate::encodings::EncodedProblem;
use crate::error::{bail_arg, Error, Result};

/// Largest register simulated.
pub const MAX_QUBITS: usize = 26;

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    pub num_qubits: usize,
    pub amps: Vec<Complex64>,
}

impl StateVector {
    /// `|+⟩^{⊗n}`.
    pub fn uniform(num_qubits: usize) -> Self {
        let dim = 1usize << num_qubits;
        let a = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
        Self {
            num_qubits,
            amps: vec![a; dim],
        }
    }

    pub fn basis(num_qubits: usize, index: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amps[index] = Complex64::new(1.0, 0.0);
        Self { num_qubits, amps }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

/// Energy table `E_b` and feasibility mask over all basis states.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagonalHamiltonian {
    pub num_qubits: usize,
    pub energies: Vec<f64>,
    pub feasible: Vec<bool>,
}

impl DiagonalHamiltonian {
    pub fn new(energies: Vec<f64>, feasible: Vec<bool>) -> Result<Self> {
        let dim = energies.len();
        if !dim.is_power_of_two() || feasible.len() != dim {
            bail_arg!("energy table length {dim} must be a power of two matching the mask");
        }
        Ok(Self {
            num_qubits: dim.trailing_zeros() as usize,
            energies,
            feasible,
        })
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn feasible_count(&self) -> usize {
        self.feasible.iter().filter(|&&f| f).count()
    }
}

/// Tabulates energies and feasibility of every basis state.
pub fn build_diagonal(problem: &EncodedProblem) -> Result<DiagonalHamiltonian> {
    let n = problem.num_qubits;
    if n > MAX_QUBITS {
        return Err(Error::Resource(format!(
            "{n} qubits exceeds the statevector limit of {MAX_QUBITS}"
        )));
    }
    let dim = 1usize << n;
    let (energies, feasible): (Vec<f64>, Vec<bool>) = (0..dim as u64)
        .into_par_iter()
        .map(|x| (problem.energy(&x), problem.decode(&x).is_feasible()))
        .unzip();
    DiagonalHamiltonian::new(energies, feasible)
}

fn check_dims(s: &StateVector, h: &DiagonalHamiltonian) {
    assert_eq!(s.amps.len(), h.dim(), "state and Hamiltonian dimensions differ");
}

/// `amp[b] ← amp[b]·exp(-iθE_b)`.
pub fn apply_objective(s: &mut StateVector, h: &DiagonalHamiltonian, theta: f64) {
    check_dims(s, h);
    for (a, &e) in s.amps.iter_mut().zip(&h.energies) {
        *a *= Complex64::from_polar(1.0, -theta * e);
    }
}

/// `exp(-iθX)` on every qubit.
pub fn apply_mixer(s: &mut StateVector, theta: f64) {
    let (c, sn) = (theta.cos(), theta.sin());
    let c = Complex64::new(c, 0.0);
    let ms = Complex64::new(0.0, -sn);
    for q in 0..s.num_qubits {
        let bit = 1usize << q;
        for base in 0..s.amps.len() {
            if base & bit != 0 {
                continue;
            }
            let (a, b) = (s.amps[base], s.amps[base | bit]);
            s.amps[base] = c * a + ms * b;
            s.amps[base | bit] = ms * a + c * b;
        }
    }
}

/// `(Σ_i X_i)|s⟩`.
pub fn apply_x_sum(s: &StateVector) -> StateVector {
    let mut out = vec![Complex64::new(0.0, 0.0); s.amps.len()];
    for q in 0..s.num_qubits {
        let bit = 1usize << q;
        for (b, o) in out.iter_mut().enumerate() {
            *o += s.amps[b ^ bit];
        }
    }
    StateVector {
        num_qubits: s.num_qubits,
        amps: out,
    }
}

/// Applies `exp(-iθH)` gate by gate from a schedule: each gate is a phase
/// `exp(-iθ c Z_S)` on its support.
pub fn apply_schedule(s: &mut StateVector, schedule: &GateSchedule, theta: f64) {
    assert_eq!(s.num_qubits, schedule.num_qubits);
    let global = Complex64::from_polar(1.0, -theta * schedule.global_phase);
    for a in s.amps.iter_mut() {
        *a *= global;
    }
    for gate in schedule.gates() {
        let mask = gate.qubits.iter().fold(0usize, |m, &q| m | 1 << q);
        let plus = Complex64::from_polar(1.0, -theta * gate.angle_coeff);
        let minus = plus.conj();
        for (b, a) in s.amps.iter_mut().enumerate() {
            *a *= if (b & mask).count_ones() % 2 == 0 { plus } else { minus };
        }
    }
}

pub fn expectation(s: &StateVector, h: &DiagonalHamiltonian) -> f64 {
    check_dims(s, h);
    s.amps
        .iter()
        .zip(&h.energies)
        .map(|(a, &e)| e * a.norm_sqr())
        .sum()
}

pub fn feasible_probability(s: &StateVector, h: &DiagonalHamiltonian) -> f64 {
    check_dims(s, h);
    s.amps
        .iter()
        .zip(&h.feasible)
        .filter(|(_, &f)| f)
        .map(|(a, _)| a.norm_sqr())
        .sum()
}

/// QAOA angles. Mixer angles live on `[0, π)`, objective angles on `[0, R)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QaoaParams {
    pub theta_mix: Vec<f64>,
    pub theta_obj: Vec<f64>,
    pub period: f64,
}

impl QaoaParams {
    /// Builds parameters, reducing every angle into its periodic domain.
    pub fn new(theta_mix: Vec<f64>, theta_obj: Vec<f64>, period: f64) -> Result<Self> {
        if theta_mix.len() != theta_obj.len() {
            bail_arg!(
                "{} mixer angles but {} objective angles",
                theta_mix.len(),
                theta_obj.len()
            );
        }
        if !(period > 0.0) {
            bail_arg!("objective period must be positive, got {period}");
        }
        let mut p = Self {
            theta_mix,
            theta_obj,
            period,
        };
        p.wrap();
        Ok(p)
    }

    pub fn zeros(r: usize, period: f64) -> Self {
        Self {
            theta_mix: vec![0.0; r],
            theta_obj: vec![0.0; r],
            period,
        }
    }

    pub fn levels(&self) -> usize {
        self.theta_mix.len()
    }

    pub fn wrap(&mut self) {
        for t in &mut self.theta_mix {
            *t = wrap_angle(*t, PI);
        }
        let r = self.period;
        for t in &mut self.theta_obj {
            *t = wrap_angle(*t, r);
        }
    }

    /// `[θ_mix..., θ_obj...]`.
    pub fn to_vec(&self) -> Vec<f64> {
        self.theta_mix.iter().chain(&self.theta_obj).copied().collect()
    }

    pub fn from_vec(x: &[f64], period: f64) -> Result<Self> {
        if x.len() % 2 != 0 {
            bail_arg!("parameter vector length {} is odd", x.len());
        }
        let r = x.len() / 2;
        Self::new(x[..r].to_vec(), x[r..].to_vec(), period)
    }
}

/// Reduces `x` into `[0, period)`.
pub fn wrap_angle(x: f64, period: f64) -> f64 {
    let w = x.rem_euclid(period);
    // rem_euclid can round up to `period` for tiny negative inputs.
    if w >= period {
        0.0
    } else {
        w
    }
}

/// QAOA state for raw (unreduced) angle lists.
pub fn qaoa_state_raw(h: &DiagonalHamiltonian, theta_mix: &[f64], theta_obj: &[f64]) -> StateVector {
    assert_eq!(theta_mix.len(), theta_obj.len());
    let mut s = StateVector::uniform(h.num_qubits);
    for (&m, &o) in theta_mix.iter().zip(theta_obj) {
        apply_objective(&mut s, h, o);
        apply_mixer(&mut s, m);
    }
    s
}

pub fn qaoa_state(h: &DiagonalHamiltonian, p: &QaoaParams) -> StateVector {
    qaoa_state_raw(h, &p.theta_mix, &p.theta_obj)
}

/// Energy and its gradient `[∂/∂θ_mix..., ∂/∂θ_obj...]` by reverse-mode
/// propagation through the layers.
pub fn energy_and_gradient(
    h: &DiagonalHamiltonian,
    theta_mix: &[f64],
    theta_obj: &[f64],
) -> (f64, Vec<f64>) {
    let r = theta_mix.len();
    let mut psi = qaoa_state_raw(h, theta_mix, theta_obj);
    let mut lam = psi.clone();
    for (a, &e) in lam.amps.iter_mut().zip(&h.energies) {
        *a *= e;
    }
    let energy = psi.inner(&lam).re;
    let mut grad = vec![0.0; 2 * r];
    for l in (0..r).rev() {
        // Mixer: generator Σ X.
        let gx = apply_x_sum(&psi);
        grad[l] = 2.0 * lam.inner(&gx).im;
        apply_mixer(&mut psi, -theta_mix[l]);
        apply_mixer(&mut lam, -theta_mix[l]);
        // Objective: generator H.
        let g: Complex64 = lam
            .amps
            .iter()
            .zip(&psi.amps)
            .zip(&h.energies)
            .map(|((a, b), &e)| a.conj() * b * e)
            .sum();
        grad[r + l] = 2.0 * g.im;
        apply_objective(&mut psi, h, -theta_obj[l]);
        apply_objective(&mut lam, h, -theta_obj[l]);
    }
    (energy, grad)
}

pub fn gradient(h: &DiagonalHamiltonian, p: &QaoaParams) -> Vec<f64> {
    energy_and_gradient(h, &p.theta_mix, &p.theta_obj).1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encodings::{encode_enum, encode_hobo, encode_qubo, random_instance, TspInstance};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn hobo3() -> DiagonalHamiltonian {
        build_diagonal(&encode_hobo(&TspInstance::zero(3).unwrap()).unwrap()).unwrap()
    }

    #[test]
    fn feasible_counts() {
        assert_eq!(hobo3().feasible_count(), 6);
        let e = build_diagonal(&encode_enum(&TspInstance::zero(3).unwrap(), None).unwrap()).unwrap();
        assert_eq!((e.feasible_count(), e.dim() - e.feasible_count()), (6, 2));
        let q = build_diagonal(&encode_qubo(&TspInstance::zero(2).unwrap(), false).unwrap()).unwrap();
        assert_eq!(q.feasible_count(), 2);
    }

    #[test]
    fn uniform_expectation_is_mean() {
        let h = build_diagonal(&encode_qubo(&TspInstance::zero(2).unwrap(), false).unwrap()).unwrap();
        let s = StateVector::uniform(4);
        let mean = h.energies.iter().sum::<f64>() / 16.0;
        assert!((expectation(&s, &h) - mean).abs() < 1e-12);
    }

    #[test]
    fn zero_levels_give_uniform_baseline() {
        let h = hobo3();
        let s = qaoa_state(&h, &QaoaParams::zeros(0, 2.0 * PI));
        assert!((feasible_probability(&s, &h) - 0.09375).abs() < 1e-12);
        let s = qaoa_state(&h, &QaoaParams::zeros(4, 2.0 * PI));
        assert_eq!(s, StateVector::uniform(6));
    }

    #[test]
    fn mixer_special_angles() {
        let mut s = StateVector::basis(3, 0);
        apply_mixer(&mut s, PI / 2.0);
        assert!((s.amps[7].norm_sqr() - 1.0).abs() < 1e-12);
        let mut s = StateVector::uniform(3);
        apply_objective(&mut s, &hobo3_small(), 0.7);
        let before = s.clone();
        apply_mixer(&mut s, PI);
        for (a, b) in s.amps.iter().zip(&before.amps) {
            assert!((a + b).norm() < 1e-12, "θ=π multiplies by (-1)^3");
        }
    }

    fn hobo3_small() -> DiagonalHamiltonian {
        DiagonalHamiltonian::new((0..8).map(|x| x as f64).collect(), vec![true; 8]).unwrap()
    }

    #[test]
    fn objective_is_phase_only() {
        let h = build_diagonal(&encode_qubo(&random_instance(3, 1).unwrap(), false).unwrap()).unwrap();
        let mut s = qaoa_state_raw(&h, &[0.3], &[0.2]);
        let before = s.probabilities();
        apply_objective(&mut s, &h, 1.234);
        for (a, b) in s.probabilities().iter().zip(&before) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let h = build_diagonal(&encode_hobo(&random_instance(3, 4).unwrap()).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for r in 1..=3 {
            let x: Vec<f64> = (0..2 * r).map(|_| rng.gen::<f64>() * PI).collect();
            let (_, g) = energy_and_gradient(&h, &x[..r], &x[r..]);
            for j in 0..2 * r {
                let step = 1e-5;
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[j] += step;
                xm[j] -= step;
                let fp = energy_and_gradient(&h, &xp[..r], &xp[r..]).0;
                let fm = energy_and_gradient(&h, &xm[..r], &xm[r..]).0;
                let fd = (fp - fm) / (2.0 * step);
                assert!((fd - g[j]).abs() <= 1e-5 * g[j].abs().max(1.0), "{fd} vs {}", g[j]);
            }
        }
        assert!(gradient(&h, &QaoaParams::zeros(0, PI)).is_empty());
    }

    #[test]
    fn wrapping() {
        let p = QaoaParams::new(vec![PI + 0.1, -0.2], vec![7.0, -1e-18], 2.0 * PI).unwrap();
        assert!((p.theta_mix[0] - 0.1).abs() < 1e-12);
        assert!((p.theta_mix[1] - (PI - 0.2)).abs() < 1e-12);
        assert!((p.theta_obj[0] - (7.0 - 2.0 * PI)).abs() < 1e-12);
        assert!(p.theta_obj[1] < 2.0 * PI);
        assert!(QaoaParams::new(vec![0.0], vec![], PI).is_err());
    }

    #[test]
    fn too_many_qubits() {
        let p = encode_qubo(&TspInstance::zero(6).unwrap(), false).unwrap();
        assert!(matches!(build_diagonal(&p), Err(Error::Resource(_))));
    }
}
