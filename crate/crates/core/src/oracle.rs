//! Exact diagonalization and wavefunction diagnostics.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::integrals::Partition;
use crate::pauli::PauliSum;
use crate::simulator::QuantumState;

/// Largest register diagonalized densely; bigger problems use Lanczos.
pub const DENSE_QUBIT_LIMIT: usize = 10;

#[derive(Debug, Clone)]
pub struct SpectrumResult {
    pub energy: f64,
    pub state: QuantumState,
    /// Lowest eigenvalues in ascending order (all of them on the dense path).
    pub eigenvalues: Vec<f64>,
    /// `‖Hψ − Eψ‖`
    pub residual: f64,
}

/// Lowest eigenpair of a Hermitian Pauli sum over the full Fock space.
pub fn exact_ground_state(h: &PauliSum) -> Result<SpectrumResult> {
    ground_state_filtered(h, None)
}

/// Lowest eigenpair within the subspace of basis states with `n_particles` set bits.
pub fn ground_state_in_sector(h: &PauliSum, n_particles: usize) -> Result<SpectrumResult> {
    ground_state_filtered(h, Some(n_particles))
}

fn ground_state_filtered(h: &PauliSum, sector: Option<usize>) -> Result<SpectrumResult> {
    let residue = h.max_imag();
    if residue > 1e-10 {
        return Err(Error::NonHermitian(residue));
    }
    let n = h.n_qubits();
    let dim = 1usize << n;
    let basis: Vec<usize> = match sector {
        None => (0..dim).collect(),
        Some(k) => (0..dim).filter(|b| b.count_ones() as usize == k).collect(),
    };
    if basis.is_empty() {
        return Err(Error::Validation(format!("sector {sector:?} is empty on {n} qubits")));
    }

    let (energy, eigenvalues, amps) = if n <= DENSE_QUBIT_LIMIT {
        dense_lowest(h, &basis)
    } else {
        lanczos_lowest(h, &basis)?
    };
    let mut full = vec![Complex64::new(0.0, 0.0); dim];
    for (k, &b) in basis.iter().enumerate() {
        full[b] = amps[k];
    }
    fix_phase(&mut full);
    let state = QuantumState::normalized(full)?;
    let hpsi = h.compile().apply(state.amplitudes());
    let residual = hpsi
        .iter()
        .zip(state.amplitudes())
        .map(|(a, b)| (a - b * energy).norm_sqr())
        .sum::<f64>()
        .sqrt();
    Ok(SpectrumResult { energy, state, eigenvalues, residual })
}

fn dense_lowest(h: &PauliSum, basis: &[usize]) -> (f64, Vec<f64>, Vec<Complex64>) {
    let dense = h.to_dense();
    let m = basis.len();
    let sub = DMatrix::from_fn(m, m, |i, j| dense[(basis[i], basis[j])]);
    let eig = SymmetricEigen::new(sub);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let k = order[0];
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vec = eig.eigenvectors.column(k).iter().copied().collect();
    (eig.eigenvalues[k], values, vec)
}

/// Lanczos with full reorthogonalization and restarts from the current Ritz vector.
fn lanczos_lowest(h: &PauliSum, basis: &[usize]) -> Result<(f64, Vec<f64>, Vec<Complex64>)> {
    let compiled = h.compile();
    let dim = 1usize << h.n_qubits();
    let m = basis.len();
    let krylov = m.min(200);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut start: Vec<Complex64> = (0..m).map(|_| Complex64::new(rng.gen::<f64>() - 0.5, 0.0)).collect();
    let apply = |v: &[Complex64]| -> Vec<Complex64> {
        let mut full = vec![Complex64::new(0.0, 0.0); dim];
        for (k, &b) in basis.iter().enumerate() {
            full[b] = v[k];
        }
        let out = compiled.apply(&full);
        basis.iter().map(|&b| out[b]).collect()
    };
    let norm = |v: &[Complex64]| v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();

    for _restart in 0..50 {
        let s = norm(&start);
        start.iter_mut().for_each(|a| *a /= s);
        let mut vs: Vec<Vec<Complex64>> = vec![start.clone()];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        for j in 0..krylov {
            let mut w = apply(&vs[j]);
            let a: f64 = vs[j].iter().zip(&w).map(|(x, y)| (x.conj() * y).re).sum();
            alpha.push(a);
            for _ in 0..2 {
                for v in &vs {
                    let c: Complex64 = v.iter().zip(&w).map(|(x, y)| x.conj() * y).sum();
                    w.iter_mut().zip(v).for_each(|(wi, vi)| *wi -= c * vi);
                }
            }
            let b = norm(&w);
            let t = DMatrix::from_fn(j + 1, j + 1, |r, c| {
                if r == c {
                    alpha[r]
                } else if r + 1 == c {
                    beta[r]
                } else if c + 1 == r {
                    beta[c]
                } else {
                    0.0
                }
            });
            let eig = SymmetricEigen::new(t);
            let k = (0..=j).min_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y])).unwrap();
            let coeffs: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
            let resid = b * coeffs[j].abs();
            if resid < 1e-11 || b < 1e-14 || j + 1 == krylov {
                let mut vec = vec![Complex64::new(0.0, 0.0); m];
                for (c, v) in coeffs.iter().zip(&vs) {
                    vec.iter_mut().zip(v).for_each(|(x, y)| *x += *c * y);
                }
                if resid < 1e-11 || b < 1e-14 {
                    let mut values = eig.eigenvalues.iter().copied().collect::<Vec<_>>();
                    values.sort_by(f64::total_cmp);
                    return Ok((eig.eigenvalues[k], values, vec));
                }
                start = vec;
                break;
            }
            beta.push(b);
            vs.push(w.into_iter().map(|x| x / b).collect());
        }
    }
    Err(Error::Optimizer("Lanczos did not converge".into()))
}

/// Makes the largest-magnitude amplitude (first on ties) real and positive.
pub fn fix_phase(amps: &mut [Complex64]) {
    let mut best = 0;
    let mut best_mag = -1.0;
    for (i, a) in amps.iter().enumerate() {
        let m = a.norm_sqr();
        if m > best_mag * (1.0 + 1e-12) {
            best = i;
            best_mag = m;
        }
    }
    if best_mag <= 0.0 {
        return;
    }
    let phase = amps[best].conj() / amps[best].norm();
    amps.iter_mut().for_each(|a| *a *= phase);
}

/// `|⟨a|b⟩|²`
pub fn fidelity(a: &QuantumState, b: &QuantumState) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr().min(1.0))
}

/// Spin-traced one-particle reduced density matrix `D_pq = Σ_σ ⟨a†_{pσ} a_{qσ}⟩`, indexed
/// by spatial orbitals in the source order. Hermitian; real for real states.
pub fn one_rdm(state: &QuantumState, n_orb: usize, part: &Partition) -> Result<DMatrix<Complex64>> {
    if part.n_orb() != n_orb || state.n_qubits() != 2 * n_orb {
        return Err(Error::Dimension(format!(
            "{}-qubit state for {} orbitals",
            state.n_qubits(),
            n_orb
        )));
    }
    let amps = state.amplitudes();
    let mut d = DMatrix::from_element(n_orb, n_orb, Complex64::new(0.0, 0.0));
    let parity = |b: usize, q: usize| if (b & ((1 << q) - 1)).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
    for p in 0..n_orb {
        for q in 0..n_orb {
            let mut acc = Complex64::new(0.0, 0.0);
            for beta in [false, true] {
                let (i, j) = (part.qubit(p, beta), part.qubit(q, beta));
                for (b, &amp) in amps.iter().enumerate() {
                    if b >> j & 1 == 0 || amp.norm_sqr() == 0.0 {
                        continue;
                    }
                    let b1 = b ^ (1 << j);
                    if b1 >> i & 1 == 1 {
                        continue;
                    }
                    let b2 = b1 | (1 << i);
                    acc += amps[b2].conj() * amp * (parity(b, j) * parity(b1, i));
                }
            }
            d[(p, q)] = acc;
        }
    }
    Ok(d)
}

/// Eigenvalues of a Hermitian 1-RDM, descending.
pub fn natural_occupations(rdm: &DMatrix<Complex64>) -> Vec<f64> {
    let herm = (rdm + rdm.adjoint()) * Complex64::new(0.5, 0.0);
    let mut occ: Vec<f64> = SymmetricEigen::new(herm).eigenvalues.iter().copied().collect();
    occ.sort_by(|a, b| b.total_cmp(a));
    occ
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EntropyConvention {
    /// Spin-traced occupations in [0, 2], as written.
    #[default]
    SpinTraced,
    /// Occupations divided by two.
    Halved,
}

/// `S = −Σ n ln n` over occupations above 1e-12.
pub fn shannon_entropy(occ: &[f64], convention: EntropyConvention) -> Result<f64> {
    if let Some(&bad) = occ.iter().find(|&&n| n < -1e-8) {
        return Err(Error::Validation(format!("negative occupation {bad}")));
    }
    let scale = match convention {
        EntropyConvention::SpinTraced => 1.0,
        EntropyConvention::Halved => 0.5,
    };
    Ok(-occ
        .iter()
        .map(|&n| n * scale)
        .filter(|&n| n > 1e-12)
        .map(|n| n * n.ln())
        .sum::<f64>())
}

/// Non-parallelity error: `max − min` of per-geometry errors.
pub fn npe(errors: &[f64]) -> Result<f64> {
    if errors.len() < 2 {
        return Err(Error::Validation(format!("NPE needs at least 2 points, got {}", errors.len())));
    }
    let max = errors.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = errors.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(max - min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::Bitstring;

    #[test]
    fn z_ground_state() {
        let h = PauliSum::parse_text("1 0 Z\n").unwrap();
        let r = exact_ground_state(&h).unwrap();
        assert!((r.energy + 1.0).abs() < 1e-15);
        assert!((r.state.amplitude(1).re - 1.0).abs() < 1e-15);
        assert!(r.residual < 1e-12);
    }

    #[test]
    fn fidelity_cases() {
        let zero = QuantumState::zero(1);
        let one = QuantumState::basis(Bitstring::from_mask(1, 1).unwrap());
        let h = 0.5f64.sqrt();
        let plus = QuantumState::from_amplitudes(vec![Complex64::new(h, 0.0), Complex64::new(h, 0.0)]).unwrap();
        assert_eq!(fidelity(&zero, &zero).unwrap(), 1.0);
        assert_eq!(fidelity(&zero, &one).unwrap(), 0.0);
        assert!((fidelity(&plus, &zero).unwrap() - 0.5).abs() < 1e-15);
        assert!(fidelity(&zero, &QuantumState::zero(2)).is_err());
    }

    #[test]
    fn entropy_and_npe() {
        let s = shannon_entropy(&[2.0, 0.0], EntropyConvention::SpinTraced).unwrap();
        assert!((s + 2.0 * 2f64.ln()).abs() < 1e-15);
        assert_eq!(shannon_entropy(&[1.0, 1.0], EntropyConvention::SpinTraced).unwrap(), 0.0);
        assert!(shannon_entropy(&[2.0, -0.1], EntropyConvention::SpinTraced).is_err());
        assert_eq!(npe(&[0.3, 0.3, 0.3]).unwrap(), 0.0);
        assert!((npe(&[1e-3, 2e-3]).unwrap() - 1e-3).abs() < 1e-18);
        assert!(npe(&[]).is_err());
    }

    #[test]
    fn rdm_of_determinant_and_pair_state() {
        let part = Partition::single(2, 2);
        let hf = QuantumState::basis(Bitstring::from_mask(4, 0b0011).unwrap());
        let d = one_rdm(&hf, 2, &part).unwrap();
        assert_eq!(d[(0, 0)].re, 2.0);
        assert_eq!(d[(1, 1)].re, 0.0);
        assert_eq!(d[(0, 1)].norm(), 0.0);

        let h = 0.5f64.sqrt();
        let mut amps = vec![Complex64::new(0.0, 0.0); 16];
        amps[0b0011] = Complex64::new(h, 0.0);
        amps[0b1100] = Complex64::new(h, 0.0);
        let pair = QuantumState::from_amplitudes(amps).unwrap();
        let occ = natural_occupations(&one_rdm(&pair, 2, &part).unwrap());
        assert!((occ[0] - 1.0).abs() < 1e-14 && (occ[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn lanczos_matches_dense() {
        let n = 7;
        let mut text = String::new();
        for q in 0..n {
            let mut z = vec!['I'; n];
            z[q] = 'Z';
            text.push_str(&format!("{} 0 {}\n", 0.1 * (q as f64 + 1.0), z.iter().collect::<String>()));
            if q + 1 < n {
                let mut xx = vec!['I'; n];
                xx[q] = 'X';
                xx[q + 1] = 'X';
                text.push_str(&format!("0.3 0 {}\n", xx.iter().collect::<String>()));
            }
        }
        let h = PauliSum::parse_text(&text).unwrap();
        let basis: Vec<usize> = (0..1 << n).collect();
        let (lanczos, _, _) = lanczos_lowest(&h, &basis).unwrap();
        let (dense, _, _) = dense_lowest(&h, &basis);
        assert!((lanczos - dense).abs() < 1e-10, "{lanczos} vs {dense}");
    }
}
