//! Closed-form resource estimates per encoding: qubits, terms, depth, volume,
//! energy range and measurement counts.

use serde::{Deserialize, Serialize};

use crate::encodings::enumeration::{ceil_log2, default_e_pen, factorial};
use crate::encodings::hobo::bits_per_slot;
use crate::encodings::{EncodedProblem, EncodingKind, Layout, MixedLayout, TspInstance};
use crate::error::{bail_arg, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Exactness {
    Exact,
    Bound,
    Exponential,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QubitCount {
    pub logical: u64,
    pub ancilla: u64,
}

impl QubitCount {
    pub fn total(&self) -> u64 {
        self.logical + self.ancilla
    }
}

fn binom2(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

fn check_k(kind: EncodingKind, n: usize, k: Option<usize>) -> Result<Option<MixedLayout>> {
    if n < 2 {
        bail_arg!("N must be at least 2, got {n}");
    }
    match (kind, k) {
        (EncodingKind::Mixed, Some(k)) => Ok(Some(MixedLayout::new(n, k)?)),
        (EncodingKind::Mixed, None) => Err(Error::InvalidArgument("the mixed encoding needs K".into())),
        (_, Some(_)) => Err(Error::InvalidArgument("K applies to the mixed encoding only".into())),
        (_, None) => Ok(None),
    }
}

/// Qubits per encoding; ancillas are those used by the Gray-code scheduling.
pub fn qubit_count(kind: EncodingKind, n: usize, k: Option<usize>) -> Result<QubitCount> {
    let mixed = check_k(kind, n, k)?;
    let nn = n as u64;
    Ok(match kind {
        EncodingKind::Qubo => QubitCount { logical: nn * nn, ancilla: 0 },
        EncodingKind::Hobo => QubitCount {
            logical: nn * bits_per_slot(n) as u64,
            ancilla: nn / 2,
        },
        EncodingKind::Mixed => {
            let m = mixed.expect("checked");
            QubitCount {
                logical: m.num_qubits() as u64,
                ancilla: (nn / 2) * m.l as u64,
            }
        }
        EncodingKind::Enum => QubitCount {
            logical: ceil_log2(factorial(n)?) as u64,
            ancilla: 0,
        },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermEstimate {
    pub value: Option<u64>,
    pub exactness: Exactness,
}

/// Term-count formulas. HOBO and mixed values are upper bounds under the
/// assumption that no term cancels.
pub fn term_count_formula(kind: EncodingKind, n: usize, k: Option<usize>) -> Result<TermEstimate> {
    let mixed = check_k(kind, n, k)?;
    let nn = n as u64;
    Ok(match kind {
        EncodingKind::Qubo => TermEstimate {
            value: Some(2 * nn.pow(3) - nn.pow(2) + 1),
            exactness: Exactness::Exact,
        },
        EncodingKind::Hobo => {
            let x = 0.5 * (n as f64).powi(4) - 0.5 * (n as f64).powi(3) + (n as f64).powi(2);
            TermEstimate {
                value: Some(x.ceil() as u64),
                exactness: Exactness::Bound,
            }
        }
        EncodingKind::Mixed => {
            let m = mixed.expect("checked");
            let (l, kk) = (m.l as u64, m.k as u64);
            let p = 1u64 << kk;
            let s = m.slack_bits as u64;
            let distinct = (binom2(nn) * l * p * p).saturating_sub(nn * l * (nn - 2) * p);
            let cross = nn * l * l * (p * p - 2 * p);
            let slack = nn * (s + kk * l * s + binom2(s));
            TermEstimate {
                value: Some(distinct + cross + slack),
                exactness: Exactness::Bound,
            }
        }
        EncodingKind::Enum => TermEstimate {
            value: None,
            exactness: Exactness::Exponential,
        },
    })
}

/// `C(N,2)·2^{2K} - (N-2)·N·2^K`, the HOBO count before relaxing `2^K` to `N`.
pub fn hobo_terms_pre_relaxation(n: usize) -> u64 {
    let nn = n as u64;
    let p = 1u64 << bits_per_slot(n);
    binom2(nn) * p * p - (nn - 2) * nn * p
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthEstimate {
    /// Multi-qubit phase gates (with ancilla for HOBO and mixed).
    pub phase_gate: Option<u64>,
    pub cnot_rotation: Option<u64>,
}

/// Depth bounds achieved by the scheduling constructions.
pub fn depth_formula(kind: EncodingKind, n: usize, k: Option<usize>) -> Result<DepthEstimate> {
    let mixed = check_k(kind, n, k)?;
    let nn = n as u64;
    Ok(match kind {
        EncodingKind::Qubo => DepthEstimate {
            phase_gate: Some(4 * nn + 1),
            cnot_rotation: Some(12 * nn + 1),
        },
        EncodingKind::Hobo => DepthEstimate {
            phase_gate: Some(2 * nn.pow(3) - 1),
            cnot_rotation: None,
        },
        EncodingKind::Mixed => {
            let m = mixed.expect("checked");
            let block = 2 * (1u64 << (2 * m.k)) - 1;
            let l = m.l as u64;
            DepthEstimate {
                phase_gate: Some(nn * block + 2 * (l - 1) * block + 3 * (nn + m.slack_bits as u64) + 1),
                cnot_rotation: None,
            }
        }
        EncodingKind::Enum => DepthEstimate {
            phase_gate: None,
            cnot_rotation: None,
        },
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub phase_gate: Option<u64>,
    pub cnot_rotation: Option<u64>,
}

pub fn volume_formula(kind: EncodingKind, n: usize, k: Option<usize>) -> Result<VolumeEstimate> {
    let q = qubit_count(kind, n, k)?.total();
    let d = depth_formula(kind, n, k)?;
    Ok(VolumeEstimate {
        phase_gate: d.phase_gate.map(|x| x * q),
        cnot_rotation: d.cnot_rotation.map(|x| x * q),
    })
}

/// `K = ⌊α log₂ N⌋` and `C_α(N) = 2^{K - α log₂ N}`.
pub fn c_alpha(alpha: f64, n: usize) -> (usize, f64) {
    let x = alpha * (n as f64).log2();
    // Guard against α·log₂N landing a hair below an integer.
    let k = (x + 1e-12).floor().max(0.0) as usize;
    (k, 2f64.powf(k as f64 - x))
}

/// Leading-order forms for the mixed encoding at exponent `α`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedAsymptotics {
    pub alpha: f64,
    pub k: usize,
    pub c_alpha: f64,
    /// `(C/2)·N^{3+α}`.
    pub terms: f64,
    /// `2C²·N^{1+2α}`.
    pub depth: f64,
    /// `(α/C)·N^{2-α}·log₂N + N^{2-α}/(2C)`.
    pub qubits: f64,
}

pub fn mixed_asymptotics(alpha: f64, n: usize) -> MixedAsymptotics {
    let (k, c) = c_alpha(alpha, n);
    let nf = n as f64;
    MixedAsymptotics {
        alpha,
        k,
        c_alpha: c,
        terms: c / 2.0 * nf.powf(3.0 + alpha),
        depth: 2.0 * c * c * nf.powf(1.0 + 2.0 * alpha),
        qubits: alpha / c * nf.powf(2.0 - alpha) * nf.log2() + nf.powf(2.0 - alpha) / (2.0 * c),
    }
}

/// Interval `[a, b]` containing every energy of the encoding.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyRange {
    pub lower: f64,
    pub upper: f64,
}

impl EnergyRange {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Addend-by-addend energy bound for an instance, without building the encoding.
pub fn energy_range(kind: EncodingKind, inst: &TspInstance, k: Option<usize>, e_pen: Option<f64>) -> Result<EnergyRange> {
    let mixed = check_k(kind, inst.n, k)?;
    let n = inst.n as f64;
    let max_w = inst.max_w();
    let sum_w: f64 = inst.w.iter().flatten().sum();
    let pairs = n * (n - 1.0) / 2.0;
    let upper = match kind {
        EncodingKind::Qubo => (inst.a1 + inst.a2) * n * (n - 1.0).powi(2) + inst.b * n * sum_w,
        EncodingKind::Hobo => {
            let kk = bits_per_slot(inst.n);
            let zeros = (0..kk).filter(|&j| (inst.n - 1) >> j & 1 == 0).count() as f64;
            inst.a1 * n * zeros + inst.a2 * pairs + inst.b * n * max_w
        }
        EncodingKind::Mixed => {
            let m = mixed.expect("checked");
            let (kk, l) = (m.k as f64, m.l as f64);
            let slack_max = ((1u64 << m.slack_bits) as f64).powi(2).max((kk * l - 1.0).powi(2));
            let guard = if m.needs_guard() {
                (0..m.k).filter(|&j| (m.last_bunch_cities >> j) & 1 == 0).count() as f64
            } else {
                0.0
            };
            inst.a1 * n * (slack_max + l * (l - 1.0) * kk * kk + guard)
                + inst.a2 * pairs * 2.0 * kk * l
                + inst.b * n * l * l * max_w
        }
        EncodingKind::Enum => {
            let pen = e_pen.unwrap_or_else(|| default_e_pen(inst));
            pen.max(inst.b * n * max_w)
        }
    };
    let lower = match kind {
        EncodingKind::Enum => inst.b * n * inst.min_w(),
        _ => 0.0,
    };
    Ok(EnergyRange { lower, upper })
}

/// [`energy_range`] for an already built encoding.
pub fn energy_upper_bound(problem: &EncodedProblem) -> Result<EnergyRange> {
    match &problem.layout {
        Layout::Mixed(m) => energy_range(problem.kind, &problem.instance, Some(m.k), None),
        Layout::Enum(e) => energy_range(problem.kind, &problem.instance, None, Some(e.e_pen)),
        _ => energy_range(problem.kind, &problem.instance, None, None),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HoeffdingConvention {
    /// Exponent `-2Mt²/(b-a)`, linear in the range.
    #[serde(rename = "paper")]
    Linear,
    /// Exponent `-2Mt²/(b-a)²`, the classical inequality.
    #[serde(rename = "standard")]
    Squared,
}

impl std::str::FromStr for HoeffdingConvention {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Self::Linear),
            "standard" => Ok(Self::Squared),
            other => Err(Error::InvalidArgument(format!("unknown convention '{other}'"))),
        }
    }
}

/// Smallest `M` with `2·exp(-2Mt²/D) ≤ δ`, `D = width` or `width²`.
pub fn hoeffding_samples(width: f64, t: f64, delta: f64, convention: HoeffdingConvention) -> Result<u64> {
    if !(width > 0.0) || !(t > 0.0) || !(delta > 0.0 && delta < 1.0) {
        bail_arg!("need width > 0, t > 0 and 0 < δ < 1 (got {width}, {t}, {delta})");
    }
    let d = match convention {
        HoeffdingConvention::Linear => width,
        HoeffdingConvention::Squared => width * width,
    };
    let x = d * (2.0 / delta).ln() / (2.0 * t * t);
    let m = (x - 1e-9 * x.max(1.0)).ceil().max(1.0);
    Ok(m as u64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementBound {
    pub lower: f64,
    pub upper: f64,
    pub t: f64,
    pub delta: f64,
    pub samples_linear: u64,
    pub samples_squared: u64,
}

/// One row of the resource table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResourceReport {
    pub kind: EncodingKind,
    pub n: usize,
    pub k: Option<usize>,
    pub qubits: QubitCount,
    pub terms: TermEstimate,
    pub depth: DepthEstimate,
    pub volume: VolumeEstimate,
    pub mixed: Option<MixedAsymptotics>,
    pub measurement: Option<MeasurementBound>,
}

pub fn report(
    kind: EncodingKind,
    n: usize,
    k: Option<usize>,
    inst: Option<&TspInstance>,
    t: f64,
    delta: f64,
) -> Result<ResourceReport> {
    let measurement = match inst {
        Some(inst) => {
            let range = energy_range(kind, inst, k, None)?;
            let w = range.width().max(f64::MIN_POSITIVE);
            Some(MeasurementBound {
                lower: range.lower,
                upper: range.upper,
                t,
                delta,
                samples_linear: hoeffding_samples(w, t, delta, HoeffdingConvention::Linear)?,
                samples_squared: hoeffding_samples(w, t, delta, HoeffdingConvention::Squared)?,
            })
        }
        None => None,
    };
    let mixed = match (kind, k) {
        (EncodingKind::Mixed, Some(k)) => Some(mixed_asymptotics(k as f64 / (n as f64).log2(), n)),
        _ => None,
    };
    Ok(ResourceReport {
        kind,
        n,
        k,
        qubits: qubit_count(kind, n, k)?,
        terms: term_count_formula(kind, n, k)?,
        depth: depth_formula(kind, n, k)?,
        volume: volume_formula(kind, n, k)?,
        mixed,
        measurement,
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let m = points.len() as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(a, b), &(x, y)| (a + x.ln(), b + y.ln()));
    let (mx, my) = (sx / m, sy / m);
    let (num, den) = points.iter().fold((0.0, 0.0), |(n, d), &(x, y)| {
        let dx = x.ln() - mx;
        (n + dx * (y.ln() - my), d + dx * dx)
    });
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encodings::{encode, random_instance, PenaltyPolicy};
    use crate::encodings::instance::random_cost_matrix;

    #[test]
    fn qubits() {
        assert_eq!(qubit_count(EncodingKind::Qubo, 5, None).unwrap().total(), 25);
        assert_eq!(qubit_count(EncodingKind::Enum, 5, None).unwrap().total(), 7);
        let h = qubit_count(EncodingKind::Hobo, 5, None).unwrap();
        assert_eq!((h.logical, h.ancilla), (15, 2));
        let m = qubit_count(EncodingKind::Mixed, 6, Some(2)).unwrap();
        assert_eq!((m.logical, m.ancilla), (36, 6));
        assert!(qubit_count(EncodingKind::Mixed, 6, None).is_err());
        assert!(qubit_count(EncodingKind::Mixed, 6, Some(4)).is_err());
        assert!(qubit_count(EncodingKind::Qubo, 6, Some(1)).is_err());
    }

    #[test]
    fn terms_and_depths() {
        assert_eq!(term_count_formula(EncodingKind::Qubo, 3, None).unwrap().value, Some(46));
        assert_eq!(term_count_formula(EncodingKind::Qubo, 4, None).unwrap().value, Some(113));
        let h = term_count_formula(EncodingKind::Hobo, 4, None).unwrap();
        assert_eq!((h.value, h.exactness), (Some(112), Exactness::Bound));
        assert_eq!(term_count_formula(EncodingKind::Hobo, 3, None).unwrap().value, Some(36));
        assert_eq!(term_count_formula(EncodingKind::Enum, 3, None).unwrap().exactness, Exactness::Exponential);
        assert_eq!(depth_formula(EncodingKind::Qubo, 5, None).unwrap().cnot_rotation, Some(61));
        assert_eq!(depth_formula(EncodingKind::Hobo, 4, None).unwrap().phase_gate, Some(127));
        assert_eq!(hobo_terms_pre_relaxation(4), 64);
    }

    #[test]
    fn c_alpha_range() {
        for n in 3..200 {
            for alpha in [0.2, 0.5, 0.75, 1.0] {
                let (_, c) = c_alpha(alpha, n);
                assert!((0.5..=1.0 + 1e-12).contains(&c), "n={n} α={alpha} C={c}");
            }
        }
        let m = mixed_asymptotics(2.0 / 6f64.log2(), 6);
        assert_eq!(m.k, 2);
        assert!((m.c_alpha - 1.0).abs() < 1e-12);
        assert!((m.depth - 2.0 * 6f64.powf(1.0 + 2.0 * m.alpha)).abs() < 1e-9);
    }

    #[test]
    fn hoeffding() {
        let d = 2.0 / std::f64::consts::E.powi(2);
        assert_eq!(hoeffding_samples(1.0, 1.0, d, HoeffdingConvention::Linear).unwrap(), 1);
        assert_eq!(hoeffding_samples(1.0, 1.0, d, HoeffdingConvention::Squared).unwrap(), 1);
        let a = hoeffding_samples(100.0, 0.5, 0.01, HoeffdingConvention::Linear).unwrap();
        let b = hoeffding_samples(200.0, 0.5, 0.01, HoeffdingConvention::Linear).unwrap();
        assert!((b as f64 / a as f64 - 2.0).abs() < 0.01);
        assert!(hoeffding_samples(0.0, 1.0, 0.1, HoeffdingConvention::Linear).is_err());
    }

    #[test]
    fn qubo_zero_bound() {
        let inst = TspInstance::zero(3).unwrap();
        assert_eq!(energy_range(EncodingKind::Qubo, &inst, None, None).unwrap().upper, 24.0);
    }

    #[test]
    fn bounds_dominate_small_cases() {
        let inst = random_instance(3, 4).unwrap();
        for (kind, k) in [
            (EncodingKind::Qubo, None),
            (EncodingKind::Hobo, None),
            (EncodingKind::Mixed, Some(1)),
            (EncodingKind::Mixed, Some(2)),
            (EncodingKind::Enum, None),
        ] {
            let p = encode(&inst, kind, k, false).unwrap();
            let r = energy_upper_bound(&p).unwrap();
            for x in 0..(1u64 << p.num_qubits) {
                let e = p.energy(&x);
                assert!(e <= r.upper + 1e-9 && e >= r.lower - 1e-9, "{kind} {e} ∉ [{}, {}]", r.lower, r.upper);
            }
        }
    }

    #[test]
    fn monotone_in_n() {
        for kind in [EncodingKind::Qubo, EncodingKind::Hobo, EncodingKind::Enum] {
            let mut prev = (0, 0);
            for n in 2..=12 {
                let q = qubit_count(kind, n, None).unwrap().total();
                let t = term_count_formula(kind, n, None).unwrap().value.unwrap_or(0);
                assert!(q >= prev.0 && t >= prev.1, "{kind} n={n}");
                prev = (q, t);
            }
        }
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = (1..6).map(|i| (i as f64, 3.0 * (i as f64).powi(3))).collect();
        assert!((log_log_slope(&pts) - 3.0).abs() < 1e-12);
        let w = random_cost_matrix(8, 1);
        let inst = TspInstance::with_policy(w, 1.0, PenaltyPolicy::Minimal).unwrap();
        assert!(energy_range(EncodingKind::Hobo, &inst, None, None).unwrap().upper > 0.0);
    }
}
