use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::enumeration::{self, EnumLayout};
use super::hobo::{self, HoboLayout};
use super::instance::{Decoded, Route, TspInstance};
use super::mixed::{self, MixedLayout};
use super::qubo::{self, QuboLayout};
use crate::error::{Error, Result};
use crate::polynomial::BinaryPolynomial;

/// Read access to a bitstring; bit `i` is qubit `i`.
pub trait Bits {
    fn bit(&self, i: usize) -> bool;

    /// Unsigned integer formed by bits `start..start+width`, little-endian.
    fn field(&self, start: usize, width: usize) -> u64 {
        (0..width).fold(0u64, |acc, k| acc | (self.bit(start + k) as u64) << k)
    }
}

impl Bits for u64 {
    #[inline]
    fn bit(&self, i: usize) -> bool {
        self >> i & 1 == 1
    }

    #[inline]
    fn field(&self, start: usize, width: usize) -> u64 {
        (self >> start) & ((1u64 << width) - 1)
    }
}

impl Bits for [bool] {
    #[inline]
    fn bit(&self, i: usize) -> bool {
        self[i]
    }
}

impl Bits for Vec<bool> {
    #[inline]
    fn bit(&self, i: usize) -> bool {
        self[i]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncodingKind {
    Qubo,
    Hobo,
    Mixed,
    Enum,
}

impl EncodingKind {
    pub const ALL: [EncodingKind; 4] = [
        EncodingKind::Qubo,
        EncodingKind::Hobo,
        EncodingKind::Mixed,
        EncodingKind::Enum,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EncodingKind::Qubo => "qubo",
            EncodingKind::Hobo => "hobo",
            EncodingKind::Mixed => "mixed",
            EncodingKind::Enum => "enum",
        }
    }
}

impl fmt::Display for EncodingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EncodingKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qubo" => Ok(EncodingKind::Qubo),
            "hobo" => Ok(EncodingKind::Hobo),
            "mixed" | "mix" => Ok(EncodingKind::Mixed),
            "enum" | "enumeration" => Ok(EncodingKind::Enum),
            other => Err(Error::InvalidArgument(format!("unknown encoding '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Layout {
    Qubo(QuboLayout),
    Hobo(HoboLayout),
    Mixed(MixedLayout),
    Enum(EnumLayout),
}

/// An encoded TSP instance: qubit layout, optional Hamiltonian, energy and decoder.
#[derive(Clone, Debug)]
pub struct EncodedProblem {
    pub kind: EncodingKind,
    pub num_qubits: usize,
    pub instance: TspInstance,
    pub hamiltonian: Option<BinaryPolynomial>,
    pub layout: Layout,
}

/// JSON summary of an encoding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodingSummary {
    pub kind: EncodingKind,
    pub num_qubits: usize,
    /// Terms of the Hamiltonian form with every cost entry nonzero.
    pub num_terms: Option<usize>,
    /// Terms that survive for this instance's actual cost matrix.
    pub instance_terms: Option<usize>,
    pub ising_terms: Option<usize>,
    pub order: Option<usize>,
    pub layout: Layout,
}

impl EncodedProblem {
    /// Energy of a bitstring, computed from the encoding's structure.
    ///
    /// Agrees with evaluating [`Self::hamiltonian`] when it is present.
    pub fn energy<B: Bits + ?Sized>(&self, bits: &B) -> f64 {
        match &self.layout {
            Layout::Qubo(l) => qubo::energy(&self.instance, l, bits),
            Layout::Hobo(l) => hobo::energy(&self.instance, l, bits),
            Layout::Mixed(l) => mixed::energy(&self.instance, l, bits),
            Layout::Enum(l) => enumeration::energy(self, l, bits),
        }
    }

    pub fn decode<B: Bits + ?Sized>(&self, bits: &B) -> Decoded {
        match &self.layout {
            Layout::Qubo(l) => qubo::decode(l, bits),
            Layout::Hobo(l) => hobo::decode(l, bits),
            Layout::Mixed(l) => mixed::decode(l, bits),
            Layout::Enum(l) => enumeration::decode(self, l, bits),
        }
    }

    /// The canonical bitstring representing `route`.
    pub fn encode_route(&self, route: &Route) -> Result<Vec<bool>> {
        let route = Route::new(route.0.clone())?;
        if route.len() != self.instance.n {
            return Err(Error::InvalidArgument(format!(
                "route has {} cities, instance has {}",
                route.len(),
                self.instance.n
            )));
        }
        match &self.layout {
            Layout::Qubo(l) => qubo::encode_route(l, &route),
            Layout::Hobo(l) => Ok(hobo::encode_route(l, &route)),
            Layout::Mixed(l) => Ok(mixed::encode_route(l, &route)),
            Layout::Enum(_) => enumeration::encode_route(self, &route),
        }
    }

    /// Qubits grouped by time slot; `None` when the encoding has no such structure.
    pub fn collections(&self) -> Option<Vec<Vec<usize>>> {
        match &self.layout {
            Layout::Qubo(l) => Some(l.collections()),
            Layout::Hobo(l) => Some(l.collections()),
            Layout::Mixed(l) => Some(l.collections()),
            Layout::Enum(_) => None,
        }
    }

    /// Period of the objective angle used by the optimizer.
    pub fn objective_period(&self) -> f64 {
        match self.kind {
            EncodingKind::Qubo => std::f64::consts::PI,
            _ => 2.0 * std::f64::consts::PI,
        }
    }

    pub fn summary(&self) -> Result<EncodingSummary> {
        let generic = match &self.hamiltonian {
            Some(_) => Some(self.rebuild_with(generic_cost_matrix(self.instance.n))?),
            None => None,
        };
        Ok(EncodingSummary {
            kind: self.kind,
            num_qubits: self.num_qubits,
            num_terms: generic
                .as_ref()
                .and_then(|g| g.hamiltonian.as_ref())
                .map(|h| h.term_count()),
            instance_terms: self.hamiltonian.as_ref().map(|h| h.term_count()),
            ising_terms: self.hamiltonian.as_ref().map(|h| h.to_ising().term_count()),
            order: self.hamiltonian.as_ref().map(|h| h.order()),
            layout: self.layout.clone(),
        })
    }

    /// Same encoding applied to a different cost matrix, with penalties large enough
    /// to stay valid.
    fn rebuild_with(&self, w: Vec<Vec<f64>>) -> Result<EncodedProblem> {
        let max_w = w
            .iter()
            .flatten()
            .fold(0.0f64, |m, &v| m.max(v));
        let floor = self.instance.b * max_w;
        let a1 = if self.instance.a1 > floor { self.instance.a1 } else { floor + 1.0 };
        let a2 = if self.instance.a2 > floor { self.instance.a2 } else { floor + 1.0 };
        let inst = TspInstance::new(w, a1, a2, self.instance.b)?;
        match &self.layout {
            Layout::Qubo(l) => qubo::encode_qubo(&inst, l.fix_first_city),
            Layout::Hobo(_) => hobo::encode_hobo(&inst),
            Layout::Mixed(l) => mixed::encode_mixed(&inst, l.k),
            Layout::Enum(l) => enumeration::encode_enum(&inst, Some(l.e_pen)),
        }
    }
}

/// Symmetric cost matrix with distinct, generic positive entries.
pub fn generic_cost_matrix(n: usize) -> Vec<Vec<f64>> {
    let mut w = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let (a, b) = (i.min(j), i.max(j));
                w[i][j] = 1.0 + ((a * n + b + 2) as f64).sqrt() / 7.0;
            }
        }
    }
    w
}

/// Builds the requested encoding. `k` is used by the mixed encoding only.
pub fn encode(
    inst: &TspInstance,
    kind: EncodingKind,
    k: Option<usize>,
    fix_first_city: bool,
) -> Result<EncodedProblem> {
    if k.is_some() && kind != EncodingKind::Mixed {
        return Err(Error::InvalidArgument("K applies to the mixed encoding only".into()));
    }
    if fix_first_city && kind != EncodingKind::Qubo {
        return Err(Error::InvalidArgument(
            "fixing the first city is supported for QUBO only".into(),
        ));
    }
    match kind {
        EncodingKind::Qubo => qubo::encode_qubo(inst, fix_first_city),
        EncodingKind::Hobo => hobo::encode_hobo(inst),
        EncodingKind::Mixed => {
            let k = k.unwrap_or_else(|| hobo::bits_per_slot(inst.n));
            mixed::encode_mixed(inst, k)
        }
        EncodingKind::Enum => enumeration::encode_enum(inst, None),
    }
}
