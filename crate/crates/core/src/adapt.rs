//! Operator pools, ADAPT-VQE and the fixed-order UCCGSD product.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fermion::{excitation_generator, spin_of, Excitation, FermionOperator};
use crate::hea::OptimizerConfig;
use crate::integrals::Partition;
use crate::optimize::minimize;
use crate::pauli::{CompiledPauliSum, PauliString, PauliSum};
use crate::simulator::{apply_circuit, count_cnots, energy, energy_and_gradient, gate_cnots, Gate, ParamCircuit, QuantumState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PoolKind {
    FermionicGsdInter,
    FermionicGsdFull,
    QubitInter,
}

impl PoolKind {
    pub fn is_inter(self) -> bool {
        !matches!(self, PoolKind::FermionicGsdFull)
    }
}

impl fmt::Display for PoolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PoolKind::FermionicGsdInter => "fermionic_gsd_inter",
            PoolKind::FermionicGsdFull => "fermionic_gsd_full",
            PoolKind::QubitInter => "qubit_inter",
        })
    }
}

impl FromStr for PoolKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fermionic_gsd_inter" | "fermionic" => Ok(PoolKind::FermionicGsdInter),
            "fermionic_gsd_full" | "full" => Ok(PoolKind::FermionicGsdFull),
            "qubit_inter" | "qubit" => Ok(PoolKind::QubitInter),
            other => Err(Error::Config(format!("unknown pool kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PoolOperator {
    pub label: String,
    pub excitation: Option<Excitation>,
    pub generator: Option<FermionOperator>,
    /// Anti-Hermitian qubit image with mutually commuting strings.
    pub image: PauliSum,
    pub cnot_cost: usize,
    compiled: CompiledPauliSum,
}

impl PoolOperator {
    fn new(label: String, excitation: Option<Excitation>, generator: Option<FermionOperator>, image: PauliSum) -> Self {
        let cnot_cost = image.terms().map(|(p, _)| 2 * (p.weight() as usize).saturating_sub(1)).sum();
        let compiled = image.compile();
        Self { label, excitation, generator, image, cnot_cost, compiled }
    }

    /// Qubits touched by the generator.
    pub fn qubits(&self) -> Vec<usize> {
        match &self.excitation {
            Some(e) => e.indices(),
            None => {
                let mut q: Vec<usize> = self.image.terms().flat_map(|(p, _)| p.support()).collect();
                q.sort_unstable();
                q.dedup();
                q
            }
        }
    }

    /// Distinct fragments touched by the generator's indices.
    pub fn fragments_touched(&self, part: &Partition) -> usize {
        let f: BTreeSet<usize> = self.qubits().into_iter().map(|q| part.fragment_of_qubit(q)).collect();
        f.len()
    }
}

#[derive(Debug, Clone)]
pub struct OperatorPool {
    pub kind: PoolKind,
    pub n_qubits: usize,
    pub operators: Vec<PoolOperator>,
}

impl OperatorPool {
    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }
}

/// Spin-conserving generalized singles then doubles over all spin orbitals, in canonical
/// order: singles `(p<q)` ascending, doubles `((p<q), (r<s))` with `(p,q) < (r,s)`
/// ascending. Doubles may share indices between their pairs.
pub fn gsd_excitations(n_qubits: usize) -> Vec<Excitation> {
    let mut out = Vec::new();
    for p in 0..n_qubits {
        for q in p + 1..n_qubits {
            if spin_of(p) == spin_of(q) {
                out.push(Excitation::Single { p, q });
            }
        }
    }
    let pairs: Vec<(usize, usize)> = (0..n_qubits).flat_map(|p| (p + 1..n_qubits).map(move |q| (p, q))).collect();
    let beta_count = |(a, b): (usize, usize)| spin_of(a) as u8 + spin_of(b) as u8;
    for (i, &(p, q)) in pairs.iter().enumerate() {
        for &(r, s) in &pairs[i + 1..] {
            if beta_count((p, q)) == beta_count((r, s)) {
                out.push(Excitation::Double { p, q, r, s });
            }
        }
    }
    out
}

fn touches_two_fragments(indices: &[usize], part: &Partition) -> bool {
    let f: BTreeSet<usize> = indices.iter().map(|&q| part.fragment_of_qubit(q)).collect();
    f.len() >= 2
}

pub fn build_pool(part: &Partition, n_qubits: usize, kind: PoolKind) -> Result<OperatorPool> {
    if n_qubits != part.n_qubits() {
        return Err(Error::Dimension(format!(
            "pool over {n_qubits} qubits for a {}-qubit partition",
            part.n_qubits()
        )));
    }
    if kind.is_inter() && part.n_fragments() < 2 {
        return Err(Error::Validation(format!("{kind} pool needs at least two fragments")));
    }
    let mut fermionic = Vec::new();
    for exc in gsd_excitations(n_qubits) {
        if kind.is_inter() && !touches_two_fragments(&exc.indices(), part) {
            continue;
        }
        let (op, image) = excitation_generator(&exc, n_qubits)?;
        if image.is_empty() {
            continue;
        }
        debug_assert!(image.strings_commute());
        fermionic.push(PoolOperator::new(exc.label(), Some(exc), Some(op), image));
    }
    let operators = match kind {
        PoolKind::FermionicGsdInter | PoolKind::FermionicGsdFull => fermionic,
        PoolKind::QubitInter => {
            let strings: BTreeSet<String> = fermionic
                .iter()
                .flat_map(|op| op.image.terms().map(|(p, _)| p.strip_z()).collect::<Vec<_>>())
                // stripping leaves a single-fragment string when the parent excitation
                // repeats an index
                .filter(|p| touches_two_fragments(&p.support(), part))
                .map(|p| p.to_string())
                .collect();
            strings
                .into_iter()
                .map(|s| {
                    let p: PauliString = s.parse().expect("round-tripped string");
                    let image = PauliSum::from_term(p, Complex64::new(0.0, 1.0));
                    PoolOperator::new(s, None, None, image)
                })
                .collect()
        }
    };
    Ok(OperatorPool { kind, n_qubits, operators })
}

/// `g_k = ⟨ψ|[H, τ_k]|ψ⟩ = 2 Re⟨Hψ|τ_k ψ⟩`, the derivative of the energy with respect to
/// a new outermost factor `e^{θτ_k}` at `θ = 0`.
pub fn pool_gradients(state: &QuantumState, h: &PauliSum, pool: &OperatorPool) -> Result<Vec<f64>> {
    if state.n_qubits() != h.n_qubits() || state.n_qubits() != pool.n_qubits {
        return Err(Error::Dimension("state, Hamiltonian and pool sizes differ".into()));
    }
    Ok(gradients_compiled(state.amplitudes(), &h.compile(), pool))
}

fn gradients_compiled(psi: &[Complex64], h: &CompiledPauliSum, pool: &OperatorPool) -> Vec<f64> {
    let hpsi = h.apply(psi);
    pool.operators
        .par_iter()
        .map(|op| {
            let tpsi = op.compiled.apply(psi);
            2.0 * hpsi.iter().zip(&tpsi).map(|(a, b)| (a.conj() * b).re).sum::<f64>()
        })
        .collect()
}

/// Smallest energy decrease (Hartree) that counts as progress for one ADAPT iteration.
pub const ENERGY_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptSettings {
    pub grad_threshold: f64,
    pub max_depth: usize,
}

impl Default for AdaptSettings {
    fn default() -> Self {
        Self { grad_threshold: 1e-8, max_depth: 200 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    GradientThreshold,
    /// The last selected operator could not lower the energy by more than
    /// [`ENERGY_FLOOR`]; it is dropped. The gradient has reached the level set by
    /// double-precision energies (`|g| ~ sqrt(ε)`).
    EnergyFloor,
    MaxDepth,
    OptimizerFailure,
    /// Single-shot product optimization (UCCGSD).
    FixedAnsatz,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::GradientThreshold => "gradient_threshold",
            StopReason::EnergyFloor => "energy_floor",
            StopReason::MaxDepth => "max_depth",
            StopReason::OptimizerFailure => "optimizer_failure",
            StopReason::FixedAnsatz => "fixed_ansatz",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptIteration {
    pub label: String,
    /// Largest |gradient| over the pool at selection time.
    pub max_grad: f64,
    /// Euclidean norm of the full pool gradient at selection time.
    pub grad_norm: f64,
    pub params: Vec<f64>,
    pub energy: f64,
    pub cumulative_cnots: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptResult {
    pub initial_energy: f64,
    pub iterations: Vec<AdaptIteration>,
    pub final_energy: f64,
    pub params: Vec<f64>,
    pub circuit: ParamCircuit,
    pub reason: StopReason,
    pub converged: bool,
    /// Final-energy of every restart (UCCGSD only).
    pub restart_energies: Vec<f64>,
}

impl AdaptResult {
    pub fn cnots(&self) -> usize {
        count_cnots(&self.circuit)
    }

    pub fn final_state(&self, reference: &QuantumState) -> Result<QuantumState> {
        apply_circuit(reference, &self.circuit, &self.params)
    }

    /// `iteration,label,grad,energy,cnots`, one row per iteration (row 0 is the reference).
    pub fn trajectory_csv(&self) -> String {
        let mut s = String::from("iteration,label,grad,energy,cnots\n");
        s.push_str(&format!("0,reference,,{:.12},0\n", self.initial_energy));
        for (k, it) in self.iterations.iter().enumerate() {
            s.push_str(&format!(
                "{},{},{:.6e},{:.12},{}\n",
                k + 1,
                it.label,
                it.max_grad,
                it.energy,
                it.cumulative_cnots
            ));
        }
        s
    }
}

fn argmax_abs(g: &[f64]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (k, v) in g.iter().enumerate() {
        if best.is_none_or(|(_, b)| v.abs() > b) {
            best = Some((k, v.abs()));
        }
    }
    best
}

fn reoptimize(
    circuit: &ParamCircuit,
    reference: &QuantumState,
    h: &CompiledPauliSum,
    x0: &[f64],
    opt: &OptimizerConfig,
) -> Result<(Vec<f64>, f64)> {
    let m = minimize(|x| energy_and_gradient(circuit, x, reference, h), x0, &opt.lbfgs())?;
    Ok((m.x, m.f))
}

/// ADAPT-VQE from `reference`: repeatedly append the operator with the largest gradient
/// magnitude as the new outermost factor and re-optimize all parameters from the previous
/// optimum (new parameter at zero).
pub fn adapt_vqe(
    h: &PauliSum,
    reference: &QuantumState,
    pool: &OperatorPool,
    settings: &AdaptSettings,
    opt: &OptimizerConfig,
) -> Result<AdaptResult> {
    if !(settings.grad_threshold > 0.0) {
        return Err(Error::Config("adapt.grad_threshold must be positive".into()));
    }
    opt.validate()?;
    if h.n_qubits() != reference.n_qubits() || pool.n_qubits != reference.n_qubits() {
        return Err(Error::Dimension("Hamiltonian, reference and pool sizes differ".into()));
    }
    if h.max_imag() > 1e-10 {
        return Err(Error::NonHermitian(h.max_imag()));
    }
    let hc = h.compile();
    let mut circuit = ParamCircuit::new(reference.n_qubits());
    let mut params: Vec<f64> = Vec::new();
    let initial_energy = energy(&circuit, &params, reference, &hc);
    let mut current = initial_energy;
    let mut iterations = Vec::new();

    let reason = loop {
        let state = apply_circuit(reference, &circuit, &params)?;
        let grads = gradients_compiled(state.amplitudes(), &hc, pool);
        let Some((k, gmax)) = argmax_abs(&grads) else {
            break StopReason::GradientThreshold;
        };
        if gmax < settings.grad_threshold {
            break StopReason::GradientThreshold;
        }
        if iterations.len() >= settings.max_depth {
            break StopReason::MaxDepth;
        }
        let op = &pool.operators[k];
        let slot = params.len();
        circuit.push_generator(&op.image, slot)?;
        let mut x0 = params.clone();
        x0.push(0.0);

        let outcome = reoptimize(&circuit, reference, &hc, &x0, opt).or_else(|e| {
            log::warn!("ADAPT step {} failed ({e}); retrying with jitter", iterations.len() + 1);
            let mut rng = opt.rng(u32::MAX as u64, iterations.len() as u64);
            let jittered: Vec<f64> = x0.iter().map(|v| v + 1e-2 * (2.0 * rng.gen::<f64>() - 1.0)).collect();
            reoptimize(&circuit, reference, &hc, &jittered, opt)
        });
        let (x, e) = match outcome {
            Ok(v) => v,
            Err(e) => {
                log::error!("ADAPT aborted: {e}");
                // drop the factor that could not be optimized
                circuit = rebuild_without_last(&circuit, slot);
                break StopReason::OptimizerFailure;
            }
        };
        if current - e < ENERGY_FLOOR {
            circuit = rebuild_without_last(&circuit, slot);
            break StopReason::EnergyFloor;
        }
        params = x;
        current = e;
        iterations.push(AdaptIteration {
            label: op.label.clone(),
            max_grad: gmax,
            grad_norm: grads.iter().map(|g| g * g).sum::<f64>().sqrt(),
            params: params.clone(),
            energy: e,
            cumulative_cnots: count_cnots(&circuit),
        });
    };

    let converged = matches!(reason, StopReason::GradientThreshold | StopReason::EnergyFloor);
    Ok(AdaptResult {
        initial_energy,
        iterations,
        final_energy: current,
        params,
        circuit,
        reason,
        converged,
        restart_energies: Vec::new(),
    })
}

fn rebuild_without_last(circuit: &ParamCircuit, slot: usize) -> ParamCircuit {
    let mut out = ParamCircuit::new(circuit.n_qubits());
    for g in circuit.gates() {
        let is_last = matches!(g.angle(), Some(crate::simulator::Angle::Param { slot: s, .. }) if *s == slot);
        if !is_last {
            out.push(g.clone());
        }
    }
    out
}

/// One product `Π_k e^{θ_k τ_k}` over the full GSD pool in canonical order (first
/// operator innermost), optimized jointly from `opt.restarts` random starts.
pub fn uccgsd_vqe(
    h: &PauliSum,
    reference: &QuantumState,
    part: &Partition,
    opt: &OptimizerConfig,
) -> Result<AdaptResult> {
    opt.validate()?;
    let n = reference.n_qubits();
    if h.n_qubits() != n {
        return Err(Error::Dimension("Hamiltonian and reference sizes differ".into()));
    }
    let pool = build_pool(part, n, PoolKind::FermionicGsdFull)?;
    let mut circuit = ParamCircuit::new(n);
    for (slot, op) in pool.operators.iter().enumerate() {
        circuit.push_generator(&op.image, slot)?;
    }
    let hc = h.compile();
    let initial_energy = energy(&circuit, &vec![0.0; circuit.n_params()], reference, &hc);

    let runs: Vec<Result<(Vec<f64>, f64)>> = (0..opt.restarts)
        .into_par_iter()
        .map(|r| {
            let x0 = opt.init.sample(&mut opt.rng(u32::MAX as u64 - 1, r as u64), circuit.n_params());
            reoptimize(&circuit, reference, &hc, &x0, opt)
        })
        .collect();
    let mut restart_energies = Vec::with_capacity(runs.len());
    let mut best: Option<(Vec<f64>, f64)> = None;
    for (r, run) in runs.into_iter().enumerate() {
        match run {
            Ok((x, e)) => {
                restart_energies.push(e);
                if best.as_ref().is_none_or(|(_, b)| e < *b) {
                    best = Some((x, e));
                }
            }
            Err(err) => {
                log::warn!("UCCGSD restart {r} discarded: {err}");
                restart_energies.push(f64::NAN);
            }
        }
    }
    let (params, e) = best.ok_or_else(|| Error::Optimizer("all UCCGSD restarts failed".into()))?;
    let cnots = count_cnots(&circuit);
    Ok(AdaptResult {
        initial_energy,
        iterations: vec![AdaptIteration {
            label: format!("uccgsd[{}]", pool.len()),
            max_grad: f64::NAN,
            grad_norm: f64::NAN,
            params: params.clone(),
            energy: e,
            cumulative_cnots: cnots,
        }],
        final_energy: e,
        params,
        circuit,
        reason: StopReason::FixedAnsatz,
        converged: true,
        restart_energies,
    })
}

/// CNOT cost of one pool operator as emitted into a circuit.
pub fn operator_cnots(op: &PoolOperator) -> usize {
    op.image
        .terms()
        .map(|(p, _)| gate_cnots(&Gate::PauliRot { string: *p, angle: crate::simulator::Angle::Fixed(0.0) }))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_by_one() -> Partition {
        Partition::parse("0;1", "2,0").unwrap()
    }

    #[test]
    fn small_pool_counts() {
        let part = two_by_one();
        let inter = build_pool(&part, 4, PoolKind::FermionicGsdInter).unwrap();
        let singles = inter.operators.iter().filter(|o| matches!(o.excitation, Some(Excitation::Single { .. }))).count();
        let doubles = inter.len() - singles;
        assert_eq!((singles, doubles), (2, 6));
        // with one orbital per fragment every generator already spans both
        let full = build_pool(&part, 4, PoolKind::FermionicGsdFull).unwrap();
        assert_eq!(full.len(), inter.len());
        let part = Partition::parse("0,1;2,3", "2,2").unwrap();
        let inter = build_pool(&part, 8, PoolKind::FermionicGsdInter).unwrap();
        let full = build_pool(&part, 8, PoolKind::FermionicGsdFull).unwrap();
        assert!(full.len() > inter.len());
        for op in &inter.operators {
            assert!(full.operators.iter().any(|f| f.label == op.label));
        }
    }

    #[test]
    fn qubit_pool_shape() {
        let part = Partition::parse("0,1;2,3", "2,2").unwrap();
        let pool = build_pool(&part, 8, PoolKind::QubitInter).unwrap();
        assert!(!pool.is_empty());
        for op in &pool.operators {
            let (p, c) = op.image.terms().next().unwrap();
            assert_eq!(p.z_mask() & !p.x_mask(), 0);
            assert!(matches!(p.weight(), 2 | 4), "{p}");
            assert_eq!(*c, Complex64::new(0.0, 1.0));
            assert_eq!(p.n_y() % 2, 1, "{p}");
        }
        let labels: Vec<&String> = pool.operators.iter().map(|o| &o.label).collect();
        let mut sorted = labels.clone();
        sorted.sort();
        assert_eq!(labels, sorted);
    }

    #[test]
    fn single_fragment_inter_pool_rejected() {
        let part = Partition::single(2, 2);
        assert!(build_pool(&part, 4, PoolKind::QubitInter).is_err());
        assert!(build_pool(&part, 4, PoolKind::FermionicGsdFull).is_ok());
    }

    #[test]
    fn double_costs_48_cnots() {
        let part = Partition::parse("0,1;2,3", "2,2").unwrap();
        let pool = build_pool(&part, 8, PoolKind::FermionicGsdInter).unwrap();
        let op = pool.operators.iter().find(|o| o.label == "d(0,1;4,5)").unwrap();
        assert_eq!(op.cnot_cost, 48);
        assert_eq!(operator_cnots(op), 48);
    }
}
