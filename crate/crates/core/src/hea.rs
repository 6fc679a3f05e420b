//! Hardware-efficient ansatz, fragment VQE and MRPS assembly.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fermion::{hamiltonian_to_pauli, number_operator};
use crate::integrals::{FragmentProblem, Partition};
use crate::optimize::{minimize, LbfgsOptions, Termination};
use crate::pauli::PauliSum;
use crate::simulator::{apply_circuit, energy_and_gradient, kron, Angle, Gate, ParamCircuit, QuantumState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Entangler {
    Linear,
    Full,
    Circular,
    Pairwise,
}

impl Entangler {
    pub const ALL: [Entangler; 4] = [Entangler::Linear, Entangler::Full, Entangler::Circular, Entangler::Pairwise];

    /// CNOT pairs `(control, target)` of one entangling block.
    pub fn pairs(self, n: usize) -> Vec<(usize, usize)> {
        if n < 2 {
            return Vec::new();
        }
        match self {
            Entangler::Linear => (0..n - 1).map(|i| (i, i + 1)).collect(),
            Entangler::Circular => {
                let mut v: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
                v.push((n - 1, 0));
                v
            }
            Entangler::Full => (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect(),
            Entangler::Pairwise => (0..n - 1)
                .step_by(2)
                .chain((1..n - 1).step_by(2))
                .map(|i| (i, i + 1))
                .collect(),
        }
    }
}

impl fmt::Display for Entangler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Entangler::Linear => "linear",
            Entangler::Full => "full",
            Entangler::Circular => "circular",
            Entangler::Pairwise => "pairwise",
        })
    }
}

impl FromStr for Entangler {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "linear" => Ok(Entangler::Linear),
            "full" => Ok(Entangler::Full),
            "circular" => Ok(Entangler::Circular),
            "pairwise" => Ok(Entangler::Pairwise),
            other => Err(Error::Config(format!("unknown entangler '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rotation {
    Rx,
    Ry,
    Rz,
}

impl Rotation {
    fn gate(self, qubit: usize, slot: usize) -> Gate {
        let angle = Angle::slot(slot);
        match self {
            Rotation::Rx => Gate::Rx { qubit, angle },
            Rotation::Ry => Gate::Ry { qubit, angle },
            Rotation::Rz => Gate::Rz { qubit, angle },
        }
    }
}

impl FromStr for Rotation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "RX" => Ok(Rotation::Rx),
            "RY" => Ok(Rotation::Ry),
            "RZ" => Ok(Rotation::Rz),
            other => Err(Error::Config(format!("unknown rotation gate '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeaConfig {
    pub layers: usize,
    pub entangler: Entangler,
    pub sequence: Vec<Rotation>,
    pub final_rotation: bool,
    /// Weight λ of the penalty `λ⟨(N̂ − n_frag)²⟩` added during fragment optimization.
    pub number_penalty: f64,
}

impl Default for HeaConfig {
    fn default() -> Self {
        Self {
            layers: 6,
            entangler: Entangler::Linear,
            sequence: vec![Rotation::Ry, Rotation::Rz],
            final_rotation: true,
            number_penalty: 0.0,
        }
    }
}

impl HeaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 {
            return Err(Error::Config("hea.layers must be at least 1".into()));
        }
        if self.sequence.is_empty() {
            return Err(Error::Config("hea.sequence must not be empty".into()));
        }
        if !(self.number_penalty >= 0.0) {
            return Err(Error::Config("fragment.number_penalty must be non-negative".into()));
        }
        Ok(())
    }
}

/// Layers of single-qubit rotations followed by an entangling block, plus an optional
/// trailing rotation layer. Slot `(l·n + q)·|seq| + g` holds gate `g` on qubit `q` in
/// layer `l`.
pub fn build_hea(n_qubits: usize, cfg: &HeaConfig) -> Result<ParamCircuit> {
    cfg.validate()?;
    if n_qubits == 0 {
        return Err(Error::Validation("HEA needs at least one qubit".into()));
    }
    let mut c = ParamCircuit::new(n_qubits);
    let mut slot = 0;
    let mut rotations = |c: &mut ParamCircuit| {
        for q in 0..n_qubits {
            for r in &cfg.sequence {
                c.push(r.gate(q, slot));
                slot += 1;
            }
        }
    };
    for _ in 0..cfg.layers {
        rotations(&mut c);
        for (control, target) in cfg.entangler.pairs(n_qubits) {
            c.push(Gate::Cnot { control, target });
        }
    }
    if cfg.final_rotation {
        rotations(&mut c);
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitDistribution {
    Uniform { low: f64, high: f64 },
}

impl Default for InitDistribution {
    fn default() -> Self {
        InitDistribution::Uniform { low: -std::f64::consts::PI, high: std::f64::consts::PI }
    }
}

impl InitDistribution {
    pub fn sample(&self, rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        match *self {
            InitDistribution::Uniform { low, high } => {
                (0..n).map(|_| if high > low { rng.gen_range(low..high) } else { low }).collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub gtol: f64,
    pub max_evals: usize,
    pub restarts: usize,
    pub seed: u64,
    pub init: InitDistribution,
    pub bounds: Option<(f64, f64)>,
    pub memory: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            gtol: 1e-9,
            max_evals: 10_000,
            restarts: 10,
            seed: 0,
            init: InitDistribution::default(),
            bounds: None,
            memory: 10,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gtol > 0.0) || self.max_evals == 0 || self.restarts == 0 || self.memory == 0 {
            return Err(Error::Config("optimizer tolerances, budgets and restarts must be positive".into()));
        }
        Ok(())
    }

    pub fn lbfgs(&self) -> LbfgsOptions {
        LbfgsOptions {
            memory: self.memory,
            gtol: self.gtol,
            max_evals: self.max_evals,
            bounds: self.bounds,
            ..LbfgsOptions::default()
        }
    }

    /// Independent stream for `(seed, tag, restart)`.
    pub fn rng(&self, tag: u64, restart: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream((tag << 32) | restart);
        rng
    }
}

/// Outcome of one fragment optimization.
#[derive(Debug, Clone, PartialEq)]
pub struct FragmentState {
    pub fragment_id: usize,
    pub layers: usize,
    pub entangler: Entangler,
    pub params: Vec<f64>,
    /// `⟨H_A⟩` including the constant shift, without any number penalty.
    pub energy: f64,
    pub state: QuantumState,
    /// Final energy of every restart; `NaN` marks a discarded restart.
    pub restart_energies: Vec<f64>,
    pub best_restart: usize,
    pub evals: usize,
}

impl FragmentState {
    pub fn median_energy(&self) -> f64 {
        let mut e: Vec<f64> = self.restart_energies.iter().copied().filter(|v| v.is_finite()).collect();
        e.sort_by(f64::total_cmp);
        match e.len() {
            0 => f64::NAN,
            n if n % 2 == 1 => e[n / 2],
            n => 0.5 * (e[n / 2 - 1] + e[n / 2]),
        }
    }

    /// Structured-text record: one `key = value` per line.
    pub fn to_record(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:.12e}")).collect::<Vec<_>>().join(",");
        format!(
            "fragment_id = {}\nlayers = {}\nentangler = {}\nrestart_energies = {}\nbest_restart = {}\nbest_energy = {:.12}\nmedian_energy = {:.12}\nparams = {}\n",
            self.fragment_id,
            self.layers,
            self.entangler,
            list(&self.restart_energies),
            self.best_restart,
            self.energy,
            self.median_energy(),
            list(&self.params),
        )
    }
}

/// Qubit Hamiltonian of a fragment problem on its own register.
pub fn fragment_hamiltonian(prob: &FragmentProblem) -> Result<PauliSum> {
    let ints = &prob.integrals;
    hamiltonian_to_pauli(ints, &Partition::single(ints.n_orb, ints.n_elec))
}

/// `λ (N̂ − n)²`
pub fn number_penalty(n_qubits: usize, n_elec: usize, lambda: f64) -> PauliSum {
    let shifted = &number_operator(n_qubits)
        - &PauliSum::identity(n_qubits).scale(num_complex::Complex64::new(n_elec as f64, 0.0));
    (&shifted * &shifted).scale(num_complex::Complex64::new(lambda, 0.0))
}

struct Run {
    params: Vec<f64>,
    energy: f64,
    evals: usize,
}

fn optimize_from(
    circuit: &ParamCircuit,
    reference: &QuantumState,
    objective: &crate::pauli::CompiledPauliSum,
    x0: &[f64],
    opt: &OptimizerConfig,
) -> Result<Run> {
    let m = minimize(|x| energy_and_gradient(circuit, x, reference, objective), x0, &opt.lbfgs())?;
    if m.termination == Termination::MaxEvaluations {
        log::debug!("restart hit the evaluation budget at |g| = {:.2e}", m.grad_norm);
    }
    Ok(Run { params: m.x, energy: m.f, evals: m.evals })
}

/// Runs the fragment VQE with `opt.restarts` seeded random initializations (in parallel)
/// plus any `warm_starts`, keeping the lowest energy; ties go to the lowest index, with
/// warm starts counted after the random restarts.
pub fn fragment_vqe_with(
    prob: &FragmentProblem,
    cfg: &HeaConfig,
    opt: &OptimizerConfig,
    warm_starts: &[Vec<f64>],
) -> Result<FragmentState> {
    opt.validate()?;
    let circuit = build_hea(prob.n_qubits, cfg)?;
    let h = fragment_hamiltonian(prob)?;
    let objective = if cfg.number_penalty > 0.0 {
        &h + &number_penalty(prob.n_qubits, prob.integrals.n_elec, cfg.number_penalty)
    } else {
        h.clone()
    };
    let objective = objective.compile();
    let h_plain = h.compile();
    let reference = QuantumState::zero(prob.n_qubits);

    let mut starts: Vec<Vec<f64>> = (0..opt.restarts)
        .map(|r| opt.init.sample(&mut opt.rng(prob.fragment_id as u64, r as u64), circuit.n_params()))
        .collect();
    for w in warm_starts {
        if w.len() != circuit.n_params() {
            return Err(Error::Dimension("warm start has the wrong parameter count".into()));
        }
        starts.push(w.clone());
    }

    let runs: Vec<Result<Run>> = starts
        .par_iter()
        .map(|x0| optimize_from(&circuit, &reference, &objective, x0, opt))
        .collect();

    let mut restart_energies = Vec::with_capacity(runs.len());
    let mut best: Option<(usize, Run)> = None;
    let mut evals = 0;
    for (k, run) in runs.into_iter().enumerate() {
        match run {
            Ok(run) => {
                evals += run.evals;
                let e = crate::simulator::energy(&circuit, &run.params, &reference, &h_plain);
                restart_energies.push(e);
                let better = match &best {
                    None => true,
                    Some((_, b)) => run.energy < b.energy,
                };
                if better {
                    best = Some((k, run));
                }
            }
            Err(e) => {
                log::warn!("fragment {} restart {} discarded: {}", prob.fragment_id, k, e);
                restart_energies.push(f64::NAN);
            }
        }
    }
    let (best_restart, run) =
        best.ok_or_else(|| Error::Optimizer(format!("all restarts failed for fragment {}", prob.fragment_id)))?;
    let state = apply_circuit(&reference, &circuit, &run.params)?;
    Ok(FragmentState {
        fragment_id: prob.fragment_id,
        layers: cfg.layers,
        entangler: cfg.entangler,
        energy: restart_energies[best_restart],
        params: run.params,
        state,
        restart_energies,
        best_restart,
        evals,
    })
}

/// Fragment VQE from independent random restarts.
pub fn fragment_vqe(prob: &FragmentProblem, cfg: &HeaConfig, opt: &OptimizerConfig) -> Result<FragmentState> {
    fragment_vqe_with(prob, cfg, opt, &[])
}

/// Runs every fragment concurrently; results are ordered by fragment id.
pub fn fragment_vqe_all(
    problems: &[FragmentProblem],
    cfg: &HeaConfig,
    opt: &OptimizerConfig,
) -> Result<Vec<FragmentState>> {
    problems.par_iter().map(|p| fragment_vqe(p, cfg, opt)).collect()
}

/// Fragment VQE for `L = 1..=max_layers`. Level `L + 1` adds the optimum of level `L`
/// with a zero-angle layer prepended as an extra start; that circuit prepares exactly the
/// same state because the entangler acts trivially on |0…0⟩, so the best energy can
/// only go down.
pub fn layer_ladder(
    prob: &FragmentProblem,
    cfg: &HeaConfig,
    opt: &OptimizerConfig,
    max_layers: usize,
) -> Result<Vec<FragmentState>> {
    let mut out: Vec<FragmentState> = Vec::with_capacity(max_layers);
    for layers in 1..=max_layers {
        let level = HeaConfig { layers, ..cfg.clone() };
        let warm: Vec<Vec<f64>> = match out.last() {
            Some(prev) => {
                let width = prob.n_qubits * cfg.sequence.len();
                let mut w = vec![0.0; width];
                w.extend_from_slice(&prev.params);
                vec![w]
            }
            None => Vec::new(),
        };
        out.push(fragment_vqe_with(prob, &level, opt, &warm)?);
    }
    Ok(out)
}

/// Weight of a state on basis states whose Hamming weight has the parity of `n_elec`.
pub fn parity_weight(state: &QuantumState, n_elec: usize) -> f64 {
    state
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(b, _)| (b.count_ones() as usize) % 2 == n_elec % 2)
        .map(|(_, a)| a.norm_sqr())
        .sum()
}

/// Tensor product of fragment states in partition order (fragment 0 on the lowest qubits).
pub fn assemble_product(states: &[&QuantumState], part: &Partition) -> Result<QuantumState> {
    if states.len() != part.n_fragments() {
        return Err(Error::Validation(format!(
            "{} fragment states for {} fragments",
            states.len(),
            part.n_fragments()
        )));
    }
    let mut acc: Option<QuantumState> = None;
    for (fid, (s, frag)) in states.iter().zip(part.fragments()).enumerate() {
        if s.n_qubits() != 2 * frag.orbitals.len() {
            return Err(Error::Dimension(format!(
                "fragment {fid} state has {} qubits, expected {}",
                s.n_qubits(),
                2 * frag.orbitals.len()
            )));
        }
        let weight = parity_weight(s, frag.n_elec);
        if weight < 0.999 {
            return Err(Error::Parity { fragment: fid, weight });
        }
        acc = Some(match acc {
            None => (*s).clone(),
            Some(a) => kron(&a, s),
        });
    }
    acc.ok_or_else(|| Error::Validation("empty partition".into()))
}

/// The multireference product state of optimized fragments.
pub fn assemble_mrps(frags: &[FragmentState], part: &Partition) -> Result<QuantumState> {
    for (k, f) in frags.iter().enumerate() {
        if f.fragment_id != k {
            return Err(Error::Validation(format!("fragment state {k} carries id {}", f.fragment_id)));
        }
    }
    let states: Vec<&QuantumState> = frags.iter().map(|f| &f.state).collect();
    assemble_product(&states, part)
}

/// Per-parameter variance of `∂E/∂θ_k` over `samples` uniform random parameter vectors
/// in `[−π, π)`, evaluated on |0…0⟩.
pub fn gradient_variance(circuit: &ParamCircuit, h: &PauliSum, samples: usize, seed: u64) -> Result<Vec<f64>> {
    if samples < 2 {
        return Err(Error::Validation("gradient variance needs at least 2 samples".into()));
    }
    if h.n_qubits() != circuit.n_qubits() {
        return Err(Error::Dimension("Hamiltonian and circuit qubit counts differ".into()));
    }
    let compiled = h.compile();
    let reference = QuantumState::zero(circuit.n_qubits());
    let dist = InitDistribution::default();
    let grads: Vec<Vec<f64>> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s as u64);
            let x = dist.sample(&mut rng, circuit.n_params());
            energy_and_gradient(circuit, &x, &reference, &compiled).1
        })
        .collect();
    let n = samples as f64;
    Ok((0..circuit.n_params())
        .map(|k| {
            let mean = grads.iter().map(|g| g[k]).sum::<f64>() / n;
            grads.iter().map(|g| (g[k] - mean).powi(2)).sum::<f64>() / n
        })
        .collect())
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::count_cnots;

    #[test]
    fn hea_counts() {
        let cfg = HeaConfig { layers: 1, sequence: vec![Rotation::Ry], final_rotation: false, ..Default::default() };
        let c = build_hea(2, &cfg).unwrap();
        assert_eq!((c.n_params(), count_cnots(&c)), (2, 1));

        let c = build_hea(4, &HeaConfig::default()).unwrap();
        assert_eq!((c.n_params(), count_cnots(&c)), (56, 18));

        let cfg = HeaConfig { layers: 1, entangler: Entangler::Full, ..Default::default() };
        assert_eq!(count_cnots(&build_hea(4, &cfg).unwrap()), 6);
    }

    #[test]
    fn entangler_sizes() {
        for n in 2..9 {
            assert_eq!(Entangler::Linear.pairs(n).len(), n - 1);
            assert_eq!(Entangler::Circular.pairs(n).len(), n);
            assert_eq!(Entangler::Full.pairs(n).len(), n * (n - 1) / 2);
            assert_eq!(Entangler::Pairwise.pairs(n).len(), n - 1);
        }
        assert_eq!(Entangler::Pairwise.pairs(5), vec![(0, 1), (2, 3), (1, 2), (3, 4)]);
    }

    #[test]
    fn slot_order_is_layer_qubit_gate() {
        let c = build_hea(2, &HeaConfig { layers: 1, final_rotation: false, ..Default::default() }).unwrap();
        let slots: Vec<(usize, usize)> = c
            .gates()
            .iter()
            .filter_map(|g| match g {
                Gate::Ry { qubit, angle: Angle::Param { slot, .. } } => Some((*qubit, *slot)),
                Gate::Rz { qubit, angle: Angle::Param { slot, .. } } => Some((*qubit, *slot)),
                _ => None,
            })
            .collect();
        assert_eq!(slots, vec![(0, 0), (0, 1), (1, 2), (1, 3)]);
    }

    #[test]
    fn invalid_configs() {
        assert!(build_hea(2, &HeaConfig { layers: 0, ..Default::default() }).is_err());
        assert!(build_hea(2, &HeaConfig { sequence: vec![], ..Default::default() }).is_err());
        assert!(gradient_variance(&ParamCircuit::new(1), &PauliSum::identity(1), 1, 0).is_err());
    }
}
