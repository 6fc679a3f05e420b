//! Pauli strings on up to 64 qubits and sparse Pauli sums.
//!
//! A string is stored as an `(x, z)` pair of bitmasks with `Y = iXZ` per qubit, so a
//! string equals `i^{|x & z|} X^x Z^z`. Qubit 0 is the leftmost letter in text form.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Coefficients below this magnitude are dropped after every merge.
pub const PRUNE_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `i^k`
#[inline]
pub fn i_pow(k: u32) -> Complex64 {
    match k % 4 {
        0 => ONE,
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Letter {
    I,
    X,
    Y,
    Z,
}

impl Letter {
    fn as_char(self) -> char {
        match self {
            Letter::I => 'I',
            Letter::X => 'X',
            Letter::Y => 'Y',
            Letter::Z => 'Z',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    n_qubits: usize,
    x: u64,
    z: u64,
}

impl PauliString {
    pub fn identity(n_qubits: usize) -> Self {
        assert!(n_qubits <= 64, "at most 64 qubits");
        Self { n_qubits, x: 0, z: 0 }
    }

    pub fn from_masks(n_qubits: usize, x: u64, z: u64) -> Result<Self> {
        if n_qubits > 64 {
            return Err(Error::Dimension(format!("{n_qubits} qubits exceed the 64-qubit limit")));
        }
        let allowed = if n_qubits == 64 { u64::MAX } else { (1u64 << n_qubits) - 1 };
        if (x | z) & !allowed != 0 {
            return Err(Error::Dimension(format!("mask bits beyond qubit {}", n_qubits)));
        }
        Ok(Self { n_qubits, x, z })
    }

    /// Single-qubit letter embedded in an `n_qubits` register.
    pub fn single(n_qubits: usize, qubit: usize, letter: Letter) -> Self {
        assert!(qubit < n_qubits);
        let bit = 1u64 << qubit;
        let (x, z) = match letter {
            Letter::I => (0, 0),
            Letter::X => (bit, 0),
            Letter::Y => (bit, bit),
            Letter::Z => (0, bit),
        };
        Self { n_qubits, x, z }
    }

    #[inline]
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    #[inline]
    pub fn x_mask(&self) -> u64 {
        self.x
    }

    #[inline]
    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn letter(&self, q: usize) -> Letter {
        match ((self.x >> q) & 1, (self.z >> q) & 1) {
            (0, 0) => Letter::I,
            (1, 0) => Letter::X,
            (1, 1) => Letter::Y,
            _ => Letter::Z,
        }
    }

    pub fn weight(&self) -> u32 {
        (self.x | self.z).count_ones()
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// Number of Y letters.
    #[inline]
    pub fn n_y(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    pub fn commutes_with(&self, other: &Self) -> bool {
        ((self.x & other.z) ^ (self.z & other.x)).count_ones() % 2 == 0
    }

    /// `self · other = i^k · result`; returns `(k mod 4, result)`.
    pub fn mul_phase(&self, other: &Self) -> (u32, Self) {
        debug_assert_eq!(self.n_qubits, other.n_qubits);
        let x = self.x ^ other.x;
        let z = self.z ^ other.z;
        let k = self.n_y() + other.n_y() + 2 * (self.z & other.x).count_ones()
            + 4 * 64
            - (x & z).count_ones();
        (k % 4, Self { n_qubits: self.n_qubits, x, z })
    }

    /// `P|b⟩ = phase · |b'⟩`.
    #[inline]
    pub fn apply_to_basis(&self, b: u64) -> (Complex64, u64) {
        let sign = if (b & self.z).count_ones() % 2 == 0 { 0 } else { 2 };
        (i_pow(self.n_y() + sign), b ^ self.x)
    }

    /// Replaces every Z letter by I; X and Y letters are kept.
    pub fn strip_z(&self) -> Self {
        Self { n_qubits: self.n_qubits, x: self.x, z: self.z & self.x }
    }

    /// Qubits with a non-identity letter, ascending.
    pub fn support(&self) -> Vec<usize> {
        let m = self.x | self.z;
        (0..self.n_qubits).filter(|&q| (m >> q) & 1 == 1).collect()
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let dim = 1usize << self.n_qubits;
        let mut m = DMatrix::from_element(dim, dim, ZERO);
        for b in 0..dim as u64 {
            let (ph, out) = self.apply_to_basis(b);
            m[(out as usize, b as usize)] = ph;
        }
        m
    }
}

impl std::str::FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.len() > 64 {
            return Err(Error::Dimension("Pauli string longer than 64 letters".into()));
        }
        let mut p = Self::identity(s.len());
        for (q, ch) in s.chars().enumerate() {
            let letter = match ch.to_ascii_uppercase() {
                'I' => Letter::I,
                'X' => Letter::X,
                'Y' => Letter::Y,
                'Z' => Letter::Z,
                other => return Err(Error::parse(0, format!("invalid Pauli letter '{other}'"))),
            };
            let single = Self::single(s.len(), q, letter);
            p.x |= single.x;
            p.z |= single.z;
        }
        Ok(p)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.n_qubits {
            write!(f, "{}", self.letter(q).as_char())?;
        }
        Ok(())
    }
}

/// Sparse linear combination of Pauli strings with complex coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    n_qubits: usize,
    terms: BTreeMap<PauliString, Complex64>,
}

impl PauliSum {
    pub fn zero(n_qubits: usize) -> Self {
        Self { n_qubits, terms: BTreeMap::new() }
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self::from_term(PauliString::identity(n_qubits), ONE)
    }

    pub fn from_term(p: PauliString, c: Complex64) -> Self {
        let mut s = Self::zero(p.n_qubits());
        s.add_term(p, c);
        s
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PauliString, &Complex64)> {
        self.terms.iter()
    }

    pub fn coeff(&self, p: &PauliString) -> Complex64 {
        self.terms.get(p).copied().unwrap_or(ZERO)
    }

    /// Adds `c·p`, merging with an existing entry and pruning tiny results.
    pub fn add_term(&mut self, p: PauliString, c: Complex64) {
        assert_eq!(p.n_qubits(), self.n_qubits, "qubit count mismatch");
        let entry = self.terms.entry(p).or_insert(ZERO);
        *entry += c;
        if entry.norm() < PRUNE_TOL {
            self.terms.remove(&p);
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = Self::zero(self.n_qubits);
        for (p, v) in &self.terms {
            out.add_term(*p, v * c);
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        Self {
            n_qubits: self.n_qubits,
            terms: self.terms.iter().map(|(p, c)| (*p, c.conj())).collect(),
        }
    }

    /// `[self, other]`
    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    /// Largest |imaginary part| of any coefficient. Zero iff the sum is Hermitian.
    pub fn max_imag(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.im.abs()))
    }

    /// Largest |real part| of any coefficient. Zero iff the sum is anti-Hermitian.
    pub fn max_real(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.re.abs()))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_imag() <= tol
    }

    pub fn is_anti_hermitian(&self, tol: f64) -> bool {
        self.max_real() <= tol
    }

    /// `(A + A†)/2`, i.e. the real parts of all coefficients.
    pub fn hermitian_part(&self) -> Self {
        let mut out = Self::zero(self.n_qubits);
        for (p, c) in &self.terms {
            out.add_term(*p, Complex64::new(c.re, 0.0));
        }
        out
    }

    /// Whether every pair of strings commutes.
    pub fn strings_commute(&self) -> bool {
        let strings: Vec<&PauliString> = self.terms.keys().collect();
        strings
            .iter()
            .enumerate()
            .all(|(i, a)| strings[i + 1..].iter().all(|b| a.commutes_with(b)))
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let dim = 1usize << self.n_qubits;
        let mut m = DMatrix::from_element(dim, dim, ZERO);
        for (p, c) in &self.terms {
            for b in 0..dim as u64 {
                let (ph, out) = p.apply_to_basis(b);
                m[(out as usize, b as usize)] += c * ph;
            }
        }
        m
    }

    /// `self |ψ⟩` by direct term loop.
    pub fn apply(&self, psi: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(psi.len(), 1usize << self.n_qubits);
        let mut out = vec![ZERO; psi.len()];
        for (p, c) in &self.terms {
            for (b, &amp) in psi.iter().enumerate() {
                if amp == ZERO {
                    continue;
                }
                let (ph, t) = p.apply_to_basis(b as u64);
                out[t as usize] += c * ph * amp;
            }
        }
        out
    }

    /// One term per line: `re im STRING`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (p, c) in &self.terms {
            s.push_str(&format!("{:e} {:e} {}\n", c.re, c.im, p));
        }
        s
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut out: Option<Self> = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let tok: Vec<&str> = line.split_whitespace().collect();
            if tok.len() != 3 {
                return Err(Error::parse(lineno + 1, "expected 're im STRING'"));
            }
            let re: f64 = tok[0].parse().map_err(|_| Error::parse(lineno + 1, "bad real part"))?;
            let im: f64 = tok[1].parse().map_err(|_| Error::parse(lineno + 1, "bad imaginary part"))?;
            let p: PauliString = tok[2].parse().map_err(|e: Error| Error::parse(lineno + 1, e.to_string()))?;
            let sum = out.get_or_insert_with(|| Self::zero(p.n_qubits()));
            if sum.n_qubits != p.n_qubits() {
                return Err(Error::parse(lineno + 1, "inconsistent string length"));
            }
            sum.add_term(p, Complex64::new(re, im));
        }
        out.ok_or_else(|| Error::parse(0, "empty Pauli sum"))
    }

    pub fn compile(&self) -> CompiledPauliSum {
        CompiledPauliSum::new(self)
    }
}

impl Add for &PauliSum {
    type Output = PauliSum;
    fn add(self, rhs: &PauliSum) -> PauliSum {
        assert_eq!(self.n_qubits, rhs.n_qubits);
        let mut out = self.clone();
        for (p, c) in &rhs.terms {
            out.add_term(*p, *c);
        }
        out
    }
}

impl Sub for &PauliSum {
    type Output = PauliSum;
    fn sub(self, rhs: &PauliSum) -> PauliSum {
        self + &(-rhs)
    }
}

impl Neg for &PauliSum {
    type Output = PauliSum;
    fn neg(self) -> PauliSum {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Mul for &PauliSum {
    type Output = PauliSum;
    fn mul(self, rhs: &PauliSum) -> PauliSum {
        assert_eq!(self.n_qubits, rhs.n_qubits);
        let mut out = PauliSum::zero(self.n_qubits);
        for (p, a) in &self.terms {
            for (q, b) in &rhs.terms {
                let (k, r) = p.mul_phase(q);
                out.add_term(r, a * b * i_pow(k));
            }
        }
        out
    }
}

/// Pauli sum regrouped by X mask for fast repeated application to state vectors.
///
/// All strings sharing an X mask map `|b⟩` to `|b ⊕ x⟩`, so each group reduces to a
/// diagonal `d(b)` followed by a bit flip: `(Hψ)[b ⊕ x] += d(b) ψ[b]`.
#[derive(Debug, Clone)]
pub struct CompiledPauliSum {
    n_qubits: usize,
    groups: Vec<Group>,
}

#[derive(Debug, Clone)]
struct Group {
    x: u64,
    /// `(z mask, coefficient · i^{n_y})`
    terms: Vec<(u64, Complex64)>,
    diag: Option<Vec<Complex64>>,
}

/// Cap on tabulated diagonal entries across all groups.
const DIAG_TABLE_LIMIT: usize = 1 << 24;

impl CompiledPauliSum {
    pub fn new(sum: &PauliSum) -> Self {
        let mut by_x: BTreeMap<u64, Vec<(u64, Complex64)>> = BTreeMap::new();
        for (p, c) in sum.terms() {
            by_x.entry(p.x_mask()).or_default().push((p.z_mask(), c * i_pow(p.n_y())));
        }
        let dim = 1usize << sum.n_qubits();
        let tabulate = by_x.len().saturating_mul(dim) <= DIAG_TABLE_LIMIT;
        let groups = by_x
            .into_iter()
            .map(|(x, terms)| {
                let diag = tabulate.then(|| {
                    (0..dim as u64)
                        .map(|b| diag_entry(&terms, b))
                        .collect::<Vec<_>>()
                });
                Group { x, terms, diag }
            })
            .collect();
        Self { n_qubits: sum.n_qubits(), groups }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// `out = H ψ`
    pub fn apply_into(&self, psi: &[Complex64], out: &mut [Complex64]) {
        let dim = 1usize << self.n_qubits;
        assert_eq!(psi.len(), dim);
        assert_eq!(out.len(), dim);
        let row = |c: usize| -> Complex64 {
            let mut acc = ZERO;
            for g in &self.groups {
                let b = c ^ g.x as usize;
                let d = match &g.diag {
                    Some(d) => d[b],
                    None => diag_entry(&g.terms, b as u64),
                };
                acc += d * psi[b];
            }
            acc
        };
        if dim >= 1 << 12 {
            out.par_iter_mut().enumerate().for_each(|(c, o)| *o = row(c));
        } else {
            for (c, o) in out.iter_mut().enumerate() {
                *o = row(c);
            }
        }
    }

    pub fn apply(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![ZERO; psi.len()];
        self.apply_into(psi, &mut out);
        out
    }

    /// `⟨ψ|H|ψ⟩` (complex; the imaginary part vanishes for Hermitian sums).
    pub fn expectation(&self, psi: &[Complex64]) -> Complex64 {
        let h = self.apply(psi);
        psi.iter().zip(&h).map(|(a, b)| a.conj() * b).sum()
    }
}

#[inline]
fn diag_entry(terms: &[(u64, Complex64)], b: u64) -> Complex64 {
    let mut acc = ZERO;
    for &(z, c) in terms {
        if (b & z).count_ones() % 2 == 0 {
            acc += c;
        } else {
            acc -= c;
        }
    }
    acc
}
