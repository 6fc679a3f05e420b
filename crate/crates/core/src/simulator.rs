//! Dense state-vector simulation of parameterized circuits.
//!
//! Basis index bit `q` is qubit `q` (little-endian). Axis rotations follow
//! `R_G(θ) = e^{−iθG/2}`; a Pauli rotation with angle `θ` applies `e^{−iθP}`.

use std::fmt;
use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::{CompiledPauliSum, Letter, PauliString, PauliSum};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const NORM_TOL: f64 = 1e-10;

/// Computational basis state of up to 64 qubits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Bitstring {
    n_qubits: usize,
    mask: u64,
}

impl Bitstring {
    pub fn zeros(n_qubits: usize) -> Self {
        assert!(n_qubits <= 64);
        Self { n_qubits, mask: 0 }
    }

    pub fn from_mask(n_qubits: usize, mask: u64) -> Result<Self> {
        if n_qubits > 64 || (n_qubits < 64 && mask >> n_qubits != 0) {
            return Err(Error::Dimension(format!("mask {mask:#b} does not fit {n_qubits} qubits")));
        }
        Ok(Self { n_qubits, mask })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn get(&self, q: usize) -> bool {
        (self.mask >> q) & 1 == 1
    }

    pub fn set(&mut self, q: usize, value: bool) {
        assert!(q < self.n_qubits);
        if value {
            self.mask |= 1 << q;
        } else {
            self.mask &= !(1 << q);
        }
    }

    pub fn count_ones(&self) -> u32 {
        self.mask.count_ones()
    }
}

/// Occupation string with qubit 0 leftmost.
impl fmt::Display for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.n_qubits {
            write!(f, "{}", if self.get(q) { '1' } else { '0' })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl QuantumState {
    /// |0…0⟩
    pub fn zero(n_qubits: usize) -> Self {
        let mut amps = vec![ZERO; 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Self { n_qubits, amps }
    }

    pub fn basis(bits: Bitstring) -> Self {
        let mut s = Self { n_qubits: bits.n_qubits(), amps: vec![ZERO; 1 << bits.n_qubits()] };
        s.amps[bits.mask() as usize] = Complex64::new(1.0, 0.0);
        s
    }

    /// Wraps amplitudes, rejecting vectors whose norm is not 1 within 1e-10.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let n = amps.len();
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::Dimension(format!("{n} amplitudes is not a power of two")));
        }
        let s = Self { n_qubits: n.trailing_zeros() as usize, amps };
        let norm = s.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Validation(format!("state norm {norm} differs from 1")));
        }
        Ok(s)
    }

    /// Wraps and rescales amplitudes to unit norm.
    pub fn normalized(amps: Vec<Complex64>) -> Result<Self> {
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Validation("cannot normalize a zero or non-finite vector".into()));
        }
        Self::from_amplitudes(amps.into_iter().map(|a| a / norm).collect())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amps[index]
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::Dimension(format!(
                "inner product of {}- and {}-qubit states",
                self.n_qubits, other.n_qubits
            )));
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn apply_gate(&mut self, gate: &Gate, params: &[f64]) {
        match gate {
            Gate::Cnot { control, target } => apply_cnot(&mut self.amps, *control, *target),
            _ => {
                let (p, phi) = gate.rotation(self.n_qubits, params).expect("rotation gate");
                apply_pauli_rotation(&mut self.amps, &p, phi);
            }
        }
    }

    /// Binary dump: `u32` qubit count, the tag `LE`, then `2ⁿ` pairs of `f64` (re, im),
    /// all little-endian.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.n_qubits as u32).to_le_bytes())?;
        w.write_all(b"LE")?;
        for a in &self.amps {
            w.write_all(&a.re.to_le_bytes())?;
            w.write_all(&a.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut head = [0u8; 6];
        r.read_exact(&mut head)?;
        let n = u32::from_le_bytes([head[0], head[1], head[2], head[3]]) as usize;
        if &head[4..] != b"LE" {
            return Err(Error::Schema("state dump lacks the LE tag".into()));
        }
        if n > 40 {
            return Err(Error::Schema(format!("state dump claims {n} qubits")));
        }
        let mut amps = Vec::with_capacity(1 << n);
        let mut buf = [0u8; 16];
        for _ in 0..1usize << n {
            r.read_exact(&mut buf)?;
            let re = f64::from_le_bytes(buf[..8].try_into().unwrap());
            let im = f64::from_le_bytes(buf[8..].try_into().unwrap());
            amps.push(Complex64::new(re, im));
        }
        Self::from_amplitudes(amps)
    }
}

/// `e^{−iφP}` in place.
pub fn apply_pauli_rotation(amps: &mut [Complex64], p: &PauliString, phi: f64) {
    if phi == 0.0 {
        return;
    }
    let (s, c) = phi.sin_cos();
    let x = p.x_mask() as usize;
    let z = p.z_mask() as usize;
    // −i·sinφ·i^{n_y}
    let base = Complex64::new(0.0, -s) * crate::pauli::i_pow(p.n_y());
    let sign = |b: usize| if (b & z).count_ones() % 2 == 0 { base } else { -base };
    if x == 0 {
        for (b, a) in amps.iter_mut().enumerate() {
            *a *= c + sign(b);
        }
        return;
    }
    let hi = 1usize << (63 - (x as u64).leading_zeros());
    for b in 0..amps.len() {
        if b & hi != 0 {
            continue;
        }
        let t = b ^ x;
        let (a0, a1) = (amps[b], amps[t]);
        amps[b] = a0 * c + sign(t) * a1;
        amps[t] = a1 * c + sign(b) * a0;
    }
}

pub fn apply_cnot(amps: &mut [Complex64], control: usize, target: usize) {
    let cm = 1usize << control;
    let tm = 1usize << target;
    for b in 0..amps.len() {
        if b & cm != 0 && b & tm == 0 {
            amps.swap(b, b | tm);
        }
    }
}

/// Rotation angle: fixed, or `scale · θ[slot]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Angle {
    Fixed(f64),
    Param { slot: usize, scale: f64 },
}

impl Angle {
    pub fn slot(slot: usize) -> Self {
        Angle::Param { slot, scale: 1.0 }
    }

    pub fn value(&self, params: &[f64]) -> f64 {
        match *self {
            Angle::Fixed(v) => v,
            Angle::Param { slot, scale } => scale * params[slot],
        }
    }

    fn scaled(&self, k: f64) -> Self {
        match *self {
            Angle::Fixed(v) => Angle::Fixed(k * v),
            Angle::Param { slot, scale } => Angle::Param { slot, scale: k * scale },
        }
    }

    fn slot_and_scale(&self) -> Option<(usize, f64)> {
        match *self {
            Angle::Fixed(_) => None,
            Angle::Param { slot, scale } => Some((slot, scale)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    Rx { qubit: usize, angle: Angle },
    Ry { qubit: usize, angle: Angle },
    Rz { qubit: usize, angle: Angle },
    Cnot { control: usize, target: usize },
    /// `e^{−iθP}`
    PauliRot { string: PauliString, angle: Angle },
}

impl Gate {
    pub fn angle(&self) -> Option<&Angle> {
        match self {
            Gate::Rx { angle, .. } | Gate::Ry { angle, .. } | Gate::Rz { angle, .. } => Some(angle),
            Gate::PauliRot { angle, .. } => Some(angle),
            Gate::Cnot { .. } => None,
        }
    }

    /// `(P, dφ/dvalue)` such that the gate is `e^{−iφP}` with `φ = k·value`.
    fn generator(&self, n: usize) -> Option<(PauliString, f64)> {
        match self {
            Gate::Rx { qubit, .. } => Some((PauliString::single(n, *qubit, Letter::X), 0.5)),
            Gate::Ry { qubit, .. } => Some((PauliString::single(n, *qubit, Letter::Y), 0.5)),
            Gate::Rz { qubit, .. } => Some((PauliString::single(n, *qubit, Letter::Z), 0.5)),
            Gate::PauliRot { string, .. } => Some((*string, 1.0)),
            Gate::Cnot { .. } => None,
        }
    }

    /// `(P, φ)` with the gate equal to `e^{−iφP}`.
    fn rotation(&self, n: usize, params: &[f64]) -> Option<(PauliString, f64)> {
        let (p, k) = self.generator(n)?;
        Some((p, k * self.angle()?.value(params)))
    }

    fn qubits(&self) -> Vec<usize> {
        match self {
            Gate::Rx { qubit, .. } | Gate::Ry { qubit, .. } | Gate::Rz { qubit, .. } => vec![*qubit],
            Gate::Cnot { control, target } => vec![*control, *target],
            Gate::PauliRot { string, .. } => string.support(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamCircuit {
    n_qubits: usize,
    gates: Vec<Gate>,
    n_params: usize,
}

impl ParamCircuit {
    pub fn new(n_qubits: usize) -> Self {
        Self { n_qubits, gates: Vec::new(), n_params: 0 }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Appends a gate, growing the parameter count to cover its slot.
    pub fn push(&mut self, gate: Gate) {
        if let Some((slot, _)) = gate.angle().and_then(Angle::slot_and_scale) {
            self.n_params = self.n_params.max(slot + 1);
        }
        self.gates.push(gate);
    }

    /// Appends `e^{θ·G}` for an anti-Hermitian generator `G = Σ i·a_j P_j` whose strings
    /// commute, realized exactly as one Pauli rotation per string.
    pub fn push_generator(&mut self, image: &PauliSum, slot: usize) -> Result<()> {
        if image.n_qubits() != self.n_qubits {
            return Err(Error::Dimension("generator and circuit qubit counts differ".into()));
        }
        if !image.is_anti_hermitian(1e-12) {
            return Err(Error::Validation("generator is not anti-Hermitian".into()));
        }
        if !image.strings_commute() {
            return Err(Error::Validation("generator strings do not commute".into()));
        }
        for (p, c) in image.terms() {
            // e^{θ·i·a·P} = e^{−i(−aθ)P}
            self.push(Gate::PauliRot { string: *p, angle: Angle::Param { slot, scale: -c.im } });
        }
        self.n_params = self.n_params.max(slot + 1);
        Ok(())
    }

    /// Checks qubit indices and that parameter slots are dense.
    pub fn validate(&self) -> Result<()> {
        let mut used = vec![false; self.n_params];
        for g in &self.gates {
            if let Some(q) = g.qubits().into_iter().find(|&q| q >= self.n_qubits) {
                return Err(Error::Validation(format!("gate acts on qubit {q} of {}", self.n_qubits)));
            }
            if let Gate::Cnot { control, target } = g {
                if control == target {
                    return Err(Error::Validation("CNOT control equals target".into()));
                }
            }
            if let Gate::PauliRot { string, .. } = g {
                if string.n_qubits() != self.n_qubits {
                    return Err(Error::Validation("Pauli rotation register mismatch".into()));
                }
            }
            if let Some((slot, _)) = g.angle().and_then(Angle::slot_and_scale) {
                used[slot] = true;
            }
        }
        if let Some(k) = used.iter().position(|u| !u) {
            return Err(Error::Validation(format!("parameter slot {k} is unused")));
        }
        Ok(())
    }
}

fn check_params(circuit: &ParamCircuit, params: &[f64]) -> Result<()> {
    if params.len() != circuit.n_params() {
        return Err(Error::Dimension(format!(
            "circuit has {} parameters, {} given",
            circuit.n_params(),
            params.len()
        )));
    }
    Ok(())
}

fn check_state(circuit: &ParamCircuit, state: &QuantumState) -> Result<()> {
    if state.n_qubits() != circuit.n_qubits() {
        return Err(Error::Dimension(format!(
            "{}-qubit circuit applied to a {}-qubit state",
            circuit.n_qubits(),
            state.n_qubits()
        )));
    }
    Ok(())
}

pub fn prepare_basis(bits: Bitstring) -> QuantumState {
    QuantumState::basis(bits)
}

pub fn apply_circuit(state: &QuantumState, circuit: &ParamCircuit, params: &[f64]) -> Result<QuantumState> {
    check_params(circuit, params)?;
    check_state(circuit, state)?;
    let mut out = state.clone();
    for g in circuit.gates() {
        out.apply_gate(g, params);
    }
    Ok(out)
}

/// `⟨ψ|H|ψ⟩` for Hermitian `H`.
pub fn expectation(state: &QuantumState, h: &PauliSum) -> Result<f64> {
    if h.n_qubits() != state.n_qubits() {
        return Err(Error::Dimension(format!(
            "{}-qubit operator on a {}-qubit state",
            h.n_qubits(),
            state.n_qubits()
        )));
    }
    let residue = h.max_imag();
    if residue > 1e-10 {
        return Err(Error::NonHermitian(residue));
    }
    let v = h.compile().expectation(state.amplitudes());
    debug_assert!(v.im.abs() < 1e-10 * (1.0 + v.re.abs()));
    Ok(v.re)
}

/// Energy of `circuit(params)|reference⟩`.
pub fn energy(circuit: &ParamCircuit, params: &[f64], reference: &QuantumState, h: &CompiledPauliSum) -> f64 {
    let mut amps = reference.amplitudes().to_vec();
    run_gates(circuit, params, &mut amps);
    let hpsi = h.apply(&amps);
    amps.iter().zip(&hpsi).map(|(a, b)| (a.conj() * b).re).sum()
}

fn run_gates(circuit: &ParamCircuit, params: &[f64], amps: &mut [Complex64]) {
    let n = circuit.n_qubits();
    for g in circuit.gates() {
        match g {
            Gate::Cnot { control, target } => apply_cnot(amps, *control, *target),
            _ => {
                let (p, phi) = g.rotation(n, params).expect("rotation gate");
                apply_pauli_rotation(amps, &p, phi);
            }
        }
    }
}

/// Energy and exact gradient by reverse-mode (adjoint) differentiation.
///
/// One forward pass, one `H` application and one backward sweep; numerically identical
/// to the parameter-shift rule for these gate kinds.
pub fn energy_and_gradient(
    circuit: &ParamCircuit,
    params: &[f64],
    reference: &QuantumState,
    h: &CompiledPauliSum,
) -> (f64, Vec<f64>) {
    let n = circuit.n_qubits();
    let mut psi = reference.amplitudes().to_vec();
    run_gates(circuit, params, &mut psi);
    let mut lambda = h.apply(&psi);
    let e: f64 = psi.iter().zip(&lambda).map(|(a, b)| (a.conj() * b).re).sum();
    let mut grad = vec![0.0; circuit.n_params()];
    let mut scratch = vec![ZERO; psi.len()];
    for g in circuit.gates().iter().rev() {
        match g {
            Gate::Cnot { control, target } => {
                apply_cnot(&mut psi, *control, *target);
                apply_cnot(&mut lambda, *control, *target);
            }
            _ => {
                let (p, k) = g.generator(n).expect("rotation gate");
                let angle = g.angle().expect("rotation gate");
                if let Some((slot, scale)) = angle.slot_and_scale() {
                    // dE/dφ = 2·Im⟨λ|P|ψ⟩
                    scratch.iter_mut().for_each(|s| *s = ZERO);
                    for (b, &a) in psi.iter().enumerate() {
                        let (ph, t) = p.apply_to_basis(b as u64);
                        scratch[t as usize] = ph * a;
                    }
                    let overlap: Complex64 = lambda.iter().zip(&scratch).map(|(l, s)| l.conj() * s).sum();
                    grad[slot] += 2.0 * overlap.im * k * scale;
                }
                let phi = k * angle.value(params);
                apply_pauli_rotation(&mut psi, &p, -phi);
                apply_pauli_rotation(&mut lambda, &p, -phi);
            }
        }
    }
    (e, grad)
}

/// Analytic gradient by the parameter-shift rule applied to every parameterized gate
/// occurrence: for `e^{−iφP}`, `dE/dφ = E(φ + π/4) − E(φ − π/4)`.
pub fn parameter_shift_gradient(
    circuit: &ParamCircuit,
    params: &[f64],
    h: &PauliSum,
    reference: &QuantumState,
) -> Result<Vec<f64>> {
    check_params(circuit, params)?;
    check_state(circuit, reference)?;
    if h.max_imag() > 1e-10 {
        return Err(Error::NonHermitian(h.max_imag()));
    }
    let n = circuit.n_qubits();
    let hc = h.compile();
    let mut grad = vec![0.0; circuit.n_params()];
    let shift = std::f64::consts::FRAC_PI_4;
    for (idx, g) in circuit.gates().iter().enumerate() {
        let Some((slot, scale)) = g.angle().and_then(Angle::slot_and_scale) else {
            continue;
        };
        let (_, k) = g.generator(n).ok_or_else(|| Error::UnsupportedGate(format!("{g:?}")))?;
        let eval = |delta: f64| -> f64 {
            let mut amps = reference.amplitudes().to_vec();
            for (j, gj) in circuit.gates().iter().enumerate() {
                match gj {
                    Gate::Cnot { control, target } => apply_cnot(&mut amps, *control, *target),
                    _ => {
                        let (pj, mut phi) = gj.rotation(n, params).expect("rotation gate");
                        if j == idx {
                            phi += delta;
                        }
                        apply_pauli_rotation(&mut amps, &pj, phi);
                    }
                }
            }
            let hpsi = hc.apply(&amps);
            amps.iter().zip(&hpsi).map(|(a, b)| (a.conj() * b).re).sum()
        };
        grad[slot] += (eval(shift) - eval(-shift)) * k * scale;
    }
    Ok(grad)
}

/// Tensor product with `a` on the low qubit indices.
pub fn kron(a: &QuantumState, b: &QuantumState) -> QuantumState {
    let na = a.n_qubits();
    let mut amps = vec![ZERO; 1 << (na + b.n_qubits())];
    for (ib, &vb) in b.amplitudes().iter().enumerate() {
        if vb == ZERO {
            continue;
        }
        for (ia, &va) in a.amplitudes().iter().enumerate() {
            amps[ia | (ib << na)] = va * vb;
        }
    }
    QuantumState { n_qubits: na + b.n_qubits(), amps }
}

/// CNOT cost: CNOTs count 1, a Pauli rotation of weight `w` counts `2(w − 1)`.
pub fn count_cnots(circuit: &ParamCircuit) -> usize {
    circuit.gates().iter().map(gate_cnots).sum()
}

pub fn gate_cnots(g: &Gate) -> usize {
    match g {
        Gate::Cnot { .. } => 1,
        Gate::PauliRot { string, .. } => 2 * (string.weight() as usize).saturating_sub(1),
        _ => 0,
    }
}

/// Rewrites Pauli rotations as basis changes, a CNOT staircase and one `Rz`, leaving a
/// circuit of `Rx`, `Ry`, `Rz` and `CNOT` only. Equal to the input up to global phase.
pub fn decompose(circuit: &ParamCircuit) -> ParamCircuit {
    use std::f64::consts::FRAC_PI_2;
    let n = circuit.n_qubits();
    let mut out = ParamCircuit::new(n);
    for g in circuit.gates() {
        let Gate::PauliRot { string, angle } = g else {
            out.push(g.clone());
            continue;
        };
        let support = string.support();
        let Some(&last) = support.last() else {
            continue; // identity: global phase only
        };
        let into_z = |q: usize, out: &mut ParamCircuit, forward: bool| {
            let s = if forward { 1.0 } else { -1.0 };
            match string.letter(q) {
                Letter::X => out.push(Gate::Ry { qubit: q, angle: Angle::Fixed(-s * FRAC_PI_2) }),
                Letter::Y => out.push(Gate::Rx { qubit: q, angle: Angle::Fixed(s * FRAC_PI_2) }),
                _ => {}
            }
        };
        for &q in &support {
            into_z(q, &mut out, true);
        }
        for w in support.windows(2) {
            out.push(Gate::Cnot { control: w[0], target: w[1] });
        }
        out.push(Gate::Rz { qubit: last, angle: angle.scaled(2.0) });
        for w in support.windows(2).rev() {
            out.push(Gate::Cnot { control: w[0], target: w[1] });
        }
        for &q in &support {
            into_z(q, &mut out, false);
        }
    }
    out.n_params = out.n_params.max(circuit.n_params());
    out
}
