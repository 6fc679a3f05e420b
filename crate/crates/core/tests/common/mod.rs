#![allow(dead_code)]

use std::path::PathBuf;

use nalgebra::{DMatrix, SymmetricEigen};

use mrps::integrals::{parse_fcidump, read_sidecar, IntegralSet};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn load(name: &str) -> IntegralSet {
    let path = fixture(&format!("{name}.fcidump"));
    parse_fcidump(&std::fs::read_to_string(&path).unwrap()).unwrap()
}

pub fn meta_f64(name: &str, key: &str) -> f64 {
    read_sidecar(&fixture(&format!("{name}.fcidump"))).unwrap()[key].parse().unwrap()
}

/// Sign of moving past the occupied modes below `k` in `det`.
fn sign_below(det: u64, k: usize) -> f64 {
    if (det & ((1u64 << k) - 1)).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn annihilate(det: u64, k: usize) -> Option<(f64, u64)> {
    (det >> k & 1 == 1).then(|| (sign_below(det, k), det & !(1 << k)))
}

fn create(det: u64, k: usize) -> Option<(f64, u64)> {
    (det >> k & 1 == 0).then(|| (sign_below(det, k), det | (1 << k)))
}

/// Lowest eigenvalue of the molecular Hamiltonian in the `n_elec`, `S_z = 0` determinant
/// space, built directly from second-quantized matrix elements (spin orbital `2p + σ`).
/// Shares nothing with the Pauli-string route.
pub fn determinant_fci(ints: &IntegralSet) -> f64 {
    let n = ints.n_orb;
    let m = 2 * n;
    let dets: Vec<u64> = (0u64..1 << m)
        .filter(|d| d.count_ones() as usize == ints.n_elec)
        .filter(|d| {
            let alpha = (0..n).filter(|p| d >> (2 * p) & 1 == 1).count();
            2 * alpha == ints.n_elec
        })
        .collect();
    let index = |d: u64| dets.binary_search(&d).ok();
    let mut hm = DMatrix::<f64>::zeros(dets.len(), dets.len());
    for (col, &d) in dets.iter().enumerate() {
        hm[(col, col)] += ints.core_energy;
        for p in 0..n {
            for q in 0..n {
                let hpq = ints.h(p, q);
                if hpq == 0.0 {
                    continue;
                }
                for s in 0..2 {
                    let Some((s1, d1)) = annihilate(d, 2 * q + s) else { continue };
                    let Some((s2, d2)) = create(d1, 2 * p + s) else { continue };
                    if let Some(row) = index(d2) {
                        hm[(row, col)] += hpq * s1 * s2;
                    }
                }
            }
        }
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for t in 0..n {
                        let g = ints.g(p, q, r, t);
                        if g == 0.0 {
                            continue;
                        }
                        for s in 0..2 {
                            for u in 0..2 {
                                // a†_{pσ} a†_{rτ} a_{tτ} a_{qσ}
                                let Some((s1, d1)) = annihilate(d, 2 * q + s) else { continue };
                                let Some((s2, d2)) = annihilate(d1, 2 * t + u) else { continue };
                                let Some((s3, d3)) = create(d2, 2 * r + u) else { continue };
                                let Some((s4, d4)) = create(d3, 2 * p + s) else { continue };
                                if let Some(row) = index(d4) {
                                    hm[(row, col)] += 0.5 * g * s1 * s2 * s3 * s4;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    SymmetricEigen::new(hm).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Closed-shell determinant energy from the textbook formula.
pub fn closed_shell_energy(ints: &IntegralSet, occupied: &[usize]) -> f64 {
    let mut e = ints.core_energy;
    for &i in occupied {
        e += 2.0 * ints.h(i, i);
        for &j in occupied {
            e += 2.0 * ints.g(i, i, j, j) - ints.g(i, j, j, i);
        }
    }
    e
}

/// Deterministic random orthogonal matrix (Gram–Schmidt on an LCG fill).
pub fn random_orthogonal(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    };
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    while rows.len() < n {
        let mut v: Vec<f64> = (0..n).map(|_| next()).collect();
        for r in &rows {
            let d: f64 = r.iter().zip(&v).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(r).for_each(|(x, y)| *x -= d * y);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            rows.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    rows
}
