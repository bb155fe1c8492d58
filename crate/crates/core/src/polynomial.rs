//! Pseudo-Boolean polynomials over binary variables and their Ising form.
//!
//! A [`BinaryPolynomial`] stores `Σ_I α_I Π_{i∈I} b_i` as a map from sorted,
//! duplicate-free index sets to nonzero coefficients. Multiplication applies
//! `b_i² = b_i` eagerly, so every stored monomial is a set. The
//! [`IsingPolynomial`] uses the same canonical form over Pauli-Z products and is
//! obtained by substituting `b_i = (1 - Z_i) / 2`.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{bail_arg, Error, Result};

/// Coefficients with magnitude below this are treated as zero.
pub const PRUNE_EPS: f64 = 1e-12;

/// Sorted, duplicate-free variable indices.
pub type Monomial = Vec<u32>;

#[derive(Clone, Debug, Default, PartialEq)]
struct TermMap {
    num_vars: usize,
    terms: BTreeMap<Monomial, f64>,
}

impl TermMap {
    fn accumulate(&mut self, mono: Monomial, coeff: f64) {
        if coeff == 0.0 {
            return;
        }
        let entry = self.terms.entry(mono).or_insert(0.0);
        *entry += coeff;
    }

    fn prune(&mut self) {
        self.terms.retain(|_, c| c.abs() >= PRUNE_EPS);
    }

    fn from_iter<I>(num_vars: usize, iter: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, f64)>,
    {
        let mut map = TermMap {
            num_vars,
            terms: BTreeMap::new(),
        };
        for (mut mono, coeff) in iter {
            mono.sort_unstable();
            mono.dedup();
            if let Some(&max) = mono.last() {
                if max as usize >= num_vars {
                    bail_arg!("variable index {max} out of range for {num_vars} variables");
                }
            }
            map.accumulate(mono, coeff);
        }
        map.prune();
        Ok(map)
    }

    fn add(&self, other: &TermMap, sign: f64) -> TermMap {
        let mut out = self.clone();
        out.num_vars = self.num_vars.max(other.num_vars);
        for (mono, &c) in &other.terms {
            out.accumulate(mono.clone(), sign * c);
        }
        out.prune();
        out
    }

    fn scale(&self, factor: f64) -> TermMap {
        let mut out = TermMap {
            num_vars: self.num_vars,
            terms: BTreeMap::new(),
        };
        for (mono, &c) in &self.terms {
            out.accumulate(mono.clone(), c * factor);
        }
        out.prune();
        out
    }

    fn order(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }
}

fn union_sorted(a: &[u32], b: &[u32]) -> Monomial {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Symmetric difference of two sorted index sets (`Z_i² = 1`).
fn symdiff_sorted(a: &[u32], b: &[u32]) -> Monomial {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Pseudo-Boolean polynomial `Σ_I α_I Π_{i∈I} b_i` in canonical form.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BinaryPolynomial {
    inner: TermMap,
}

impl BinaryPolynomial {
    /// The zero polynomial over `num_vars` variables.
    pub fn zero(num_vars: usize) -> Self {
        Self {
            inner: TermMap {
                num_vars,
                terms: BTreeMap::new(),
            },
        }
    }

    pub fn constant(num_vars: usize, value: f64) -> Self {
        let mut p = Self::zero(num_vars);
        p.inner.accumulate(Vec::new(), value);
        p.inner.prune();
        p
    }

    /// The single variable `b_index`.
    pub fn var(num_vars: usize, index: usize) -> Self {
        assert!(index < num_vars, "variable {index} out of range");
        let mut p = Self::zero(num_vars);
        p.inner.accumulate(vec![index as u32], 1.0);
        p
    }

    /// `1 - b_index`.
    pub fn not_var(num_vars: usize, index: usize) -> Self {
        Self::constant(num_vars, 1.0) - Self::var(num_vars, index)
    }

    /// Builds a polynomial from `(indices, coefficient)` pairs. Index lists are
    /// sorted and deduplicated (idempotence), repeated monomials are summed.
    pub fn from_terms<I>(num_vars: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, f64)>,
    {
        Ok(Self {
            inner: TermMap::from_iter(num_vars, terms)?,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.inner.num_vars
    }

    /// Returns a copy declared over at least `num_vars` variables.
    pub fn with_num_vars(mut self, num_vars: usize) -> Self {
        self.inner.num_vars = self.inner.num_vars.max(num_vars);
        self
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> {
        self.inner.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn coefficient(&self, mono: &[u32]) -> f64 {
        self.inner.terms.get(mono).copied().unwrap_or(0.0)
    }

    pub fn constant_term(&self) -> f64 {
        self.coefficient(&[])
    }

    /// Number of nonzero terms, constant included.
    pub fn term_count(&self) -> usize {
        self.inner.terms.len()
    }

    /// Largest monomial size among nonzero terms.
    pub fn order(&self) -> usize {
        self.inner.order()
    }

    pub fn is_zero(&self) -> bool {
        self.inner.terms.is_empty()
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            inner: self.inner.scale(factor),
        }
    }

    pub fn add_poly(&self, other: &Self) -> Self {
        Self {
            inner: self.inner.add(&other.inner, 1.0),
        }
    }

    /// Distributed product with set-union of index sets.
    pub fn mul_poly(&self, other: &Self) -> Self {
        let mut out = TermMap {
            num_vars: self.num_vars().max(other.num_vars()),
            terms: BTreeMap::new(),
        };
        for (a, &ca) in &self.inner.terms {
            for (b, &cb) in &other.inner.terms {
                out.accumulate(union_sorted(a, b), ca * cb);
            }
        }
        out.prune();
        Self { inner: out }
    }

    pub fn square(&self) -> Self {
        self.mul_poly(self)
    }

    /// Renames variable `i` to `map[i]` over a space of `num_vars` variables.
    pub fn relabel(&self, map: &[u32], num_vars: usize) -> Result<Self> {
        if map.len() < self.num_vars() {
            bail_arg!("relabel map covers {} of {} variables", map.len(), self.num_vars());
        }
        Self::from_terms(
            num_vars,
            self.terms()
                .map(|(m, c)| (m.iter().map(|&i| map[i as usize]).collect(), c)),
        )
    }

    /// Evaluates at `assignment`, which must cover every declared variable.
    pub fn evaluate(&self, assignment: &[bool]) -> Result<f64> {
        if assignment.len() < self.num_vars() {
            return Err(Error::InvalidArgument(format!(
                "assignment has {} bits, polynomial needs {}",
                assignment.len(),
                self.num_vars()
            )));
        }
        Ok(self.evaluate_with(|i| assignment[i]))
    }

    /// Evaluates with bit values supplied by `bit`.
    pub fn evaluate_with<F: Fn(usize) -> bool>(&self, bit: F) -> f64 {
        self.inner
            .terms
            .iter()
            .filter(|(m, _)| m.iter().all(|&i| bit(i as usize)))
            .map(|(_, &c)| c)
            .sum()
    }

    /// Substitutes `b_i ← (1 - Z_i)/2` and expands.
    pub fn to_ising(&self) -> IsingPolynomial {
        let mut out = TermMap {
            num_vars: self.num_vars(),
            terms: BTreeMap::new(),
        };
        for (mono, &c) in &self.inner.terms {
            let w = mono.len();
            let scale = c / (1u64 << w) as f64;
            // Π (1 - Z_i) = Σ_{S⊆I} (-1)^{|S|} Z_S
            for subset in 0u64..(1u64 << w) {
                let sel: Monomial = (0..w)
                    .filter(|&k| subset >> k & 1 == 1)
                    .map(|k| mono[k])
                    .collect();
                let sign = if sel.len() % 2 == 0 { 1.0 } else { -1.0 };
                out.accumulate(sel, sign * scale);
            }
        }
        out.prune();
        IsingPolynomial { inner: out }
    }

    /// Bitmask form for fast evaluation on basis-state indices.
    pub fn compile(&self) -> Result<CompiledPolynomial> {
        CompiledPolynomial::new(self.terms().map(|(m, c)| (m.as_slice(), c)), self.num_vars())
    }
}

/// Accumulates many scaled, relabelled copies of small template polynomials
/// and canonicalizes once at the end.
#[derive(Clone, Debug)]
pub struct PolynomialBuilder {
    inner: TermMap,
}

impl PolynomialBuilder {
    pub fn new(num_vars: usize) -> Self {
        Self {
            inner: TermMap {
                num_vars,
                terms: BTreeMap::new(),
            },
        }
    }

    pub fn add_term(&mut self, mut mono: Monomial, coeff: f64) {
        mono.sort_unstable();
        mono.dedup();
        debug_assert!(mono.last().map_or(true, |&m| (m as usize) < self.inner.num_vars));
        self.inner.accumulate(mono, coeff);
    }

    /// Adds `scale · p(x_{map[0]}, x_{map[1]}, ...)`.
    pub fn add_mapped(&mut self, p: &BinaryPolynomial, map: &[u32], scale: f64) {
        for (mono, c) in p.terms() {
            let mapped: Monomial = mono.iter().map(|&i| map[i as usize]).collect();
            self.add_term(mapped, c * scale);
        }
    }

    pub fn add(&mut self, p: &BinaryPolynomial, scale: f64) {
        for (mono, c) in p.terms() {
            self.inner.accumulate(mono.clone(), c * scale);
        }
    }

    pub fn finish(mut self) -> BinaryPolynomial {
        self.inner.prune();
        BinaryPolynomial { inner: self.inner }
    }
}

/// Polynomial over Pauli-Z products, `Σ_S β_S Π_{i∈S} Z_i`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IsingPolynomial {
    inner: TermMap,
}

impl IsingPolynomial {
    pub fn zero(num_qubits: usize) -> Self {
        Self {
            inner: TermMap {
                num_vars: num_qubits,
                terms: BTreeMap::new(),
            },
        }
    }

    pub fn from_terms<I>(num_qubits: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, f64)>,
    {
        Ok(Self {
            inner: TermMap::from_iter(num_qubits, terms)?,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.inner.num_vars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> {
        self.inner.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn coefficient(&self, mono: &[u32]) -> f64 {
        self.inner.terms.get(mono).copied().unwrap_or(0.0)
    }

    pub fn term_count(&self) -> usize {
        self.inner.terms.len()
    }

    pub fn order(&self) -> usize {
        self.inner.order()
    }

    pub fn add_poly(&self, other: &Self) -> Self {
        Self {
            inner: self.inner.add(&other.inner, 1.0),
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            inner: self.inner.scale(factor),
        }
    }

    /// Product using `Z_i² = 1`.
    pub fn mul_poly(&self, other: &Self) -> Self {
        let mut out = TermMap {
            num_vars: self.num_qubits().max(other.num_qubits()),
            terms: BTreeMap::new(),
        };
        for (a, &ca) in &self.inner.terms {
            for (b, &cb) in &other.inner.terms {
                out.accumulate(symdiff_sorted(a, b), ca * cb);
            }
        }
        out.prune();
        Self { inner: out }
    }

    /// Evaluates with spins `z_i ∈ {+1, -1}`.
    pub fn evaluate_spins(&self, spins: &[i8]) -> Result<f64> {
        if spins.len() < self.num_qubits() {
            bail_arg!(
                "spin assignment has {} entries, polynomial needs {}",
                spins.len(),
                self.num_qubits()
            );
        }
        Ok(self
            .inner
            .terms
            .iter()
            .map(|(m, &c)| {
                let neg = m.iter().filter(|&&i| spins[i as usize] < 0).count();
                if neg % 2 == 0 {
                    c
                } else {
                    -c
                }
            })
            .sum())
    }

    /// Evaluates at `z_i = 1 - 2 b_i`.
    pub fn evaluate_bits(&self, bits: &[bool]) -> Result<f64> {
        let spins: Vec<i8> = bits.iter().map(|&b| if b { -1 } else { 1 }).collect();
        self.evaluate_spins(&spins)
    }
}

/// Bitmask form of a polynomial over at most 64 variables.
#[derive(Clone, Debug)]
pub struct CompiledPolynomial {
    constant: f64,
    terms: Vec<(u64, f64)>,
}

impl CompiledPolynomial {
    fn new<'a, I>(terms: I, num_vars: usize) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a [u32], f64)>,
    {
        if num_vars > 64 {
            return Err(Error::Resource(format!(
                "bitmask evaluation supports at most 64 variables, got {num_vars}"
            )));
        }
        let mut constant = 0.0;
        let mut out = Vec::new();
        for (mono, c) in terms {
            if mono.is_empty() {
                constant += c;
            } else {
                let mask = mono.iter().fold(0u64, |m, &i| m | (1u64 << i));
                out.push((mask, c));
            }
        }
        Ok(Self {
            constant,
            terms: out,
        })
    }

    /// Value of the binary polynomial at basis index `bits` (bit `i` is `b_i`).
    #[inline]
    pub fn evaluate(&self, bits: u64) -> f64 {
        self.terms
            .iter()
            .filter(|(mask, _)| bits & mask == *mask)
            .fold(self.constant, |acc, (_, c)| acc + c)
    }
}

impl Add for BinaryPolynomial {
    type Output = BinaryPolynomial;
    fn add(self, rhs: Self) -> Self {
        self.add_poly(&rhs)
    }
}

impl<'a> Add<&'a BinaryPolynomial> for &'a BinaryPolynomial {
    type Output = BinaryPolynomial;
    fn add(self, rhs: Self) -> BinaryPolynomial {
        self.add_poly(rhs)
    }
}

impl Sub for BinaryPolynomial {
    type Output = BinaryPolynomial;
    fn sub(self, rhs: Self) -> Self {
        Self {
            inner: self.inner.add(&rhs.inner, -1.0),
        }
    }
}

impl Neg for BinaryPolynomial {
    type Output = BinaryPolynomial;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl Mul for BinaryPolynomial {
    type Output = BinaryPolynomial;
    fn mul(self, rhs: Self) -> Self {
        self.mul_poly(&rhs)
    }
}

impl<'a> Mul<&'a BinaryPolynomial> for &'a BinaryPolynomial {
    type Output = BinaryPolynomial;
    fn mul(self, rhs: Self) -> BinaryPolynomial {
        self.mul_poly(rhs)
    }
}

impl Mul<f64> for BinaryPolynomial {
    type Output = BinaryPolynomial;
    fn mul(self, rhs: f64) -> Self {
        self.scale(rhs)
    }
}

impl std::iter::Sum for BinaryPolynomial {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        let mut acc = TermMap::default();
        for p in iter {
            acc.num_vars = acc.num_vars.max(p.num_vars());
            for (m, c) in p.inner.terms {
                acc.accumulate(m, c);
            }
        }
        acc.prune();
        BinaryPolynomial { inner: acc }
    }
}

/// JSON shape: `{"num_vars": n, "terms": [[[i, j, ...], coeff], ...]}`.
#[derive(Serialize, Deserialize)]
struct PolynomialRepr {
    num_vars: usize,
    terms: Vec<(Vec<u32>, f64)>,
}

impl Serialize for BinaryPolynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PolynomialRepr {
            num_vars: self.num_vars(),
            terms: self.terms().map(|(m, c)| (m.clone(), c)).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for BinaryPolynomial {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = PolynomialRepr::deserialize(d)?;
        BinaryPolynomial::from_terms(repr.num_vars, repr.terms).map_err(serde::de::Error::custom)
    }
}

impl Serialize for IsingPolynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PolynomialRepr {
            num_vars: self.num_qubits(),
            terms: self.terms().map(|(m, c)| (m.clone(), c)).collect(),
        }
        .serialize(s)
    }
}
