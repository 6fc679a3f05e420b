//! Second-quantized operators and the Jordan–Wigner map.
//!
//! `a†_p = ½(X_p − iY_p) Z_{p−1}…Z_0` and `a_p = ½(X_p + iY_p) Z_{p−1}…Z_0`, with
//! occupied spin orbitals encoded as |1⟩.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::integrals::{IntegralSet, Partition};
use crate::pauli::{i_pow, PauliString, PauliSum, PRUNE_TOL};

/// One ladder operator: spin-orbital index and whether it creates.
pub type Ladder = (usize, bool);

/// Sum of products of ladder operators, each product applied right-to-left.
#[derive(Debug, Clone, PartialEq)]
pub struct FermionOperator {
    pub n_modes: usize,
    pub terms: Vec<(Complex64, Vec<Ladder>)>,
}

impl FermionOperator {
    pub fn zero(n_modes: usize) -> Self {
        Self { n_modes, terms: Vec::new() }
    }

    pub fn term(n_modes: usize, coeff: f64, ops: &[Ladder]) -> Self {
        Self { n_modes, terms: vec![(Complex64::new(coeff, 0.0), ops.to_vec())] }
    }

    pub fn push(&mut self, coeff: Complex64, ops: Vec<Ladder>) {
        self.terms.push((coeff, ops));
    }

    pub fn extend(&mut self, other: &Self) {
        self.terms.extend(other.terms.iter().cloned());
    }

    /// Reverses each product and conjugates coefficients.
    pub fn adjoint(&self) -> Self {
        Self {
            n_modes: self.n_modes,
            terms: self
                .terms
                .iter()
                .map(|(c, ops)| (c.conj(), ops.iter().rev().map(|&(p, cr)| (p, !cr)).collect()))
                .collect(),
        }
    }

    /// Every spin-orbital index appearing in any term.
    pub fn modes(&self) -> Vec<usize> {
        let mut m: Vec<usize> = self.terms.iter().flat_map(|(_, ops)| ops.iter().map(|o| o.0)).collect();
        m.sort_unstable();
        m.dedup();
        m
    }
}

impl fmt::Display for FermionOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, (c, ops)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({}{:+}i)", c.re, c.im)?;
            for &(p, cr) in ops {
                write!(f, " {}{}", p, if cr { "^" } else { "" })?;
            }
        }
        Ok(())
    }
}

/// JW image of a single ladder operator as two `(coefficient, string)` pairs.
fn jw_ladder(n: usize, p: usize, create: bool) -> [(Complex64, PauliString); 2] {
    let parity = (1u64 << p) - 1;
    let bit = 1u64 << p;
    let x = PauliString::from_masks(n, bit, parity).expect("index checked by caller");
    let y = PauliString::from_masks(n, bit, parity | bit).expect("index checked by caller");
    let s = if create { -0.5 } else { 0.5 };
    [(Complex64::new(0.5, 0.0), x), (Complex64::new(0.0, s), y)]
}

/// Expands one ladder product into accumulated Pauli terms.
fn expand_product(
    n: usize,
    coeff: Complex64,
    ops: &[Ladder],
    acc: &mut BTreeMap<PauliString, Complex64>,
) {
    let mut partial: Vec<(Complex64, PauliString)> = vec![(coeff, PauliString::identity(n))];
    for &(p, create) in ops {
        let factors = jw_ladder(n, p, create);
        let mut next = Vec::with_capacity(partial.len() * 2);
        for (c, s) in &partial {
            for (fc, fs) in &factors {
                let (k, r) = s.mul_phase(fs);
                next.push((c * fc * i_pow(k), r));
            }
        }
        // merge equal strings to keep the expansion small
        next.sort_by(|a, b| a.1.cmp(&b.1));
        partial.clear();
        for (c, s) in next {
            match partial.last_mut() {
                Some((lc, ls)) if *ls == s => *lc += c,
                _ => partial.push((c, s)),
            }
        }
        partial.retain(|(c, _)| c.norm() >= PRUNE_TOL);
    }
    for (c, s) in partial {
        *acc.entry(s).or_insert(Complex64::new(0.0, 0.0)) += c;
    }
}

fn collect(n: usize, acc: BTreeMap<PauliString, Complex64>) -> PauliSum {
    let mut out = PauliSum::zero(n);
    for (s, c) in acc {
        out.add_term(s, c);
    }
    out
}

/// Jordan–Wigner image of `op` on `n_qubits` qubits.
pub fn jw_transform(op: &FermionOperator, n_qubits: usize) -> Result<PauliSum> {
    if n_qubits > 64 {
        return Err(Error::Dimension(format!("{n_qubits} qubits exceed the 64-qubit limit")));
    }
    let mut acc = BTreeMap::new();
    for (c, ops) in &op.terms {
        if let Some(&(p, _)) = ops.iter().find(|(p, _)| *p >= n_qubits) {
            return Err(Error::Validation(format!("spin-orbital {p} out of range for {n_qubits} qubits")));
        }
        expand_product(n_qubits, *c, ops, &mut acc);
    }
    Ok(collect(n_qubits, acc))
}

/// Qubit Hamiltonian of `ints` in the fragment-major register of `part`.
///
/// `H = Σ h_pq a†_pσ a_qσ + ½ Σ (pq|rs) a†_pσ a†_rτ a_sτ a_qσ + E_core`. The result is
/// projected onto its Hermitian part, which only removes rounding residue.
pub fn hamiltonian_to_pauli(ints: &IntegralSet, part: &Partition) -> Result<PauliSum> {
    if part.n_orb() != ints.n_orb {
        return Err(Error::Dimension(format!(
            "partition covers {} orbitals, integrals have {}",
            part.n_orb(),
            ints.n_orb
        )));
    }
    let n = part.n_qubits();
    let no = ints.n_orb;
    let spins = [false, true];
    let mut acc: BTreeMap<PauliString, Complex64> = BTreeMap::new();
    let tol = 1e-14;

    for p in 0..no {
        for q in 0..no {
            let h = ints.h(p, q);
            if h.abs() < tol {
                continue;
            }
            for &s in &spins {
                let ops = [(part.qubit(p, s), true), (part.qubit(q, s), false)];
                expand_product(n, Complex64::new(h, 0.0), &ops, &mut acc);
            }
        }
    }
    for p in 0..no {
        for q in 0..no {
            for r in 0..no {
                for s in 0..no {
                    let g = ints.g(p, q, r, s);
                    if g.abs() < tol {
                        continue;
                    }
                    for &sa in &spins {
                        for &sb in &spins {
                            let (ip, ir) = (part.qubit(p, sa), part.qubit(r, sb));
                            let (is, iq) = (part.qubit(s, sb), part.qubit(q, sa));
                            if ip == ir || is == iq {
                                continue;
                            }
                            let ops = [(ip, true), (ir, true), (is, false), (iq, false)];
                            expand_product(n, Complex64::new(0.5 * g, 0.0), &ops, &mut acc);
                        }
                    }
                }
            }
        }
    }
    *acc.entry(PauliString::identity(n)).or_insert(Complex64::new(0.0, 0.0)) +=
        Complex64::new(ints.core_energy, 0.0);

    let raw = collect(n, acc);
    let residue = raw.max_imag();
    if residue > 1e-10 {
        return Err(Error::NonHermitian(residue));
    }
    Ok(raw.hermitian_part())
}

/// Total number operator `Σ_p a†_p a_p` on `n_qubits` qubits.
pub fn number_operator(n_qubits: usize) -> PauliSum {
    let mut op = FermionOperator::zero(n_qubits);
    for p in 0..n_qubits {
        op.push(Complex64::new(1.0, 0.0), vec![(p, true), (p, false)]);
    }
    jw_transform(&op, n_qubits).expect("indices in range")
}

/// `S_z = ½ Σ (n_pα − n_pβ)` for the interleaved register (even qubits alpha).
pub fn sz_operator(n_qubits: usize) -> PauliSum {
    let mut op = FermionOperator::zero(n_qubits);
    for p in 0..n_qubits {
        let sign = if p % 2 == 0 { 0.5 } else { -0.5 };
        op.push(Complex64::new(sign, 0.0), vec![(p, true), (p, false)]);
    }
    jw_transform(&op, n_qubits).expect("indices in range")
}

/// Spin of a qubit in the interleaved register: `false` alpha, `true` beta.
#[inline]
pub fn spin_of(q: usize) -> bool {
    q % 2 == 1
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Excitation {
    /// `τ_p^q = a†_q a_p − a†_p a_q`
    Single { p: usize, q: usize },
    /// `τ_pq^rs = a†_s a†_r a_p a_q − a†_q a†_p a_r a_s`
    Double { p: usize, q: usize, r: usize, s: usize },
}

impl Excitation {
    pub fn indices(&self) -> Vec<usize> {
        match *self {
            Excitation::Single { p, q } => vec![p, q],
            Excitation::Double { p, q, r, s } => vec![p, q, r, s],
        }
    }

    /// Checks index ranges, distinctness within each ladder group and spin conservation.
    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        if let Some(i) = self.indices().into_iter().find(|&i| i >= n_qubits) {
            return Err(Error::Validation(format!("index {i} out of range for {n_qubits} qubits")));
        }
        match *self {
            Excitation::Single { p, q } => {
                if spin_of(p) != spin_of(q) {
                    return Err(Error::Validation(format!("single {p}->{q} flips spin")));
                }
            }
            Excitation::Double { p, q, r, s } => {
                if p == q || r == s {
                    return Err(Error::Validation(format!(
                        "double ({p},{q})->({r},{s}) repeats an index within a group"
                    )));
                }
                let mut a = [spin_of(p), spin_of(q)];
                let mut b = [spin_of(r), spin_of(s)];
                a.sort_unstable();
                b.sort_unstable();
                if a != b {
                    return Err(Error::Validation(format!("double ({p},{q})->({r},{s}) changes Sz")));
                }
            }
        }
        Ok(())
    }

    pub fn fermion_operator(&self, n_qubits: usize) -> FermionOperator {
        let mut op = FermionOperator::zero(n_qubits);
        let one = Complex64::new(1.0, 0.0);
        match *self {
            Excitation::Single { p, q } => {
                op.push(one, vec![(q, true), (p, false)]);
                op.push(-one, vec![(p, true), (q, false)]);
            }
            Excitation::Double { p, q, r, s } => {
                op.push(one, vec![(s, true), (r, true), (p, false), (q, false)]);
                op.push(-one, vec![(q, true), (p, true), (r, false), (s, false)]);
            }
        }
        op
    }

    pub fn label(&self) -> String {
        match *self {
            Excitation::Single { p, q } => format!("s({p},{q})"),
            Excitation::Double { p, q, r, s } => format!("d({p},{q};{r},{s})"),
        }
    }
}

/// Builds an anti-Hermitian excitation generator and its JW image.
pub fn excitation_generator(exc: &Excitation, n_qubits: usize) -> Result<(FermionOperator, PauliSum)> {
    exc.validate(n_qubits)?;
    let op = exc.fermion_operator(n_qubits);
    let image = jw_transform(&op, n_qubits)?;
    Ok((op, image))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn number_operator_single_mode() {
        let op = FermionOperator::term(1, 1.0, &[(0, true), (0, false)]);
        let s = jw_transform(&op, 1).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.coeff(&"I".parse().unwrap()), c(0.5, 0.0));
        assert_eq!(s.coeff(&"Z".parse().unwrap()), c(-0.5, 0.0));
    }

    #[test]
    fn hopping_term() {
        let mut op = FermionOperator::term(2, 1.0, &[(0, true), (1, false)]);
        op.push(c(1.0, 0.0), vec![(1, true), (0, false)]);
        let s = jw_transform(&op, 2).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.coeff(&"XX".parse().unwrap()), c(0.5, 0.0));
        assert_eq!(s.coeff(&"YY".parse().unwrap()), c(0.5, 0.0));
    }

    #[test]
    fn out_of_range_index() {
        let op = FermionOperator::term(2, 1.0, &[(2, true)]);
        assert!(matches!(jw_transform(&op, 2), Err(Error::Validation(_))));
    }

    #[test]
    fn single_generator() {
        let (_, img) = excitation_generator(&Excitation::Single { p: 0, q: 2 }, 4).unwrap();
        assert_eq!(img.len(), 2);
        assert!(img.is_anti_hermitian(0.0));
        assert!(img.strings_commute());
        let (_, zero) = excitation_generator(&Excitation::Single { p: 1, q: 1 }, 4).unwrap();
        assert!(zero.is_empty());
    }

    #[test]
    fn double_generator() {
        let (_, img) = excitation_generator(&Excitation::Double { p: 0, q: 1, r: 2, s: 3 }, 4).unwrap();
        assert_eq!(img.len(), 8);
        assert!(img.is_anti_hermitian(0.0));
        assert!(img.strings_commute());
        for (p, _) in img.terms() {
            assert_eq!(p.weight(), 4);
        }
    }

    #[test]
    fn generator_errors() {
        assert!(excitation_generator(&Excitation::Single { p: 0, q: 1 }, 4).is_err());
        assert!(excitation_generator(&Excitation::Double { p: 0, q: 0, r: 1, s: 2 }, 4).is_err());
        assert!(excitation_generator(&Excitation::Double { p: 0, q: 2, r: 1, s: 3 }, 4).is_err());
        assert!(excitation_generator(&Excitation::Single { p: 0, q: 4 }, 4).is_err());
    }

    #[test]
    fn one_level_hamiltonian() {
        let eps = -0.7;
        let mut ints = IntegralSet::zeros(1, 2, 0);
        ints.set_h(0, 0, eps);
        let h = hamiltonian_to_pauli(&ints, &Partition::single(1, 2)).unwrap();
        assert_eq!(h.coeff(&"II".parse().unwrap()), c(eps, 0.0));
        assert_eq!(h.coeff(&"ZI".parse().unwrap()), c(-0.5 * eps, 0.0));
        assert_eq!(h.coeff(&"IZ".parse().unwrap()), c(-0.5 * eps, 0.0));
        assert_eq!(h.len(), 3);
    }
}
