mod common;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use mrps::adapt::{adapt_vqe, build_pool, AdaptSettings, PoolKind};
use mrps::fermion::{excitation_generator, hamiltonian_to_pauli, jw_transform, number_operator, sz_operator, FermionOperator};
use mrps::hea::{build_hea, Entangler, HeaConfig, OptimizerConfig};
use mrps::integrals::{rotate_orbitals, IntegralSet, OrbitalRotation, Partition};
use mrps::oracle::ground_state_in_sector;
use mrps::pauli::{PauliString, PauliSum};
use mrps::simulator::{
    apply_circuit, energy, energy_and_gradient, parameter_shift_gradient, prepare_basis, Bitstring, ParamCircuit,
    QuantumState,
};

const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn dense_close(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>, tol: f64) -> bool {
    (a - b).iter().all(|v| v.norm() <= tol)
}

fn pauli_string(n: usize) -> impl Strategy<Value = PauliString> {
    let mask = (1u64 << n) - 1;
    (any::<u64>(), any::<u64>()).prop_map(move |(x, z)| PauliString::from_masks(n, x & mask, z & mask).unwrap())
}

fn pauli_sum(n: usize) -> impl Strategy<Value = PauliSum> {
    prop::collection::vec((pauli_string(n), -1.0..1.0f64, -1.0..1.0f64), 1..6).prop_map(move |terms| {
        let mut s = PauliSum::zero(n);
        for (p, re, im) in terms {
            s.add_term(p, Complex64::new(re, im));
        }
        s
    })
}

fn random_state(n: usize) -> impl Strategy<Value = QuantumState> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1 << n)
        .prop_filter_map("non-zero", |v| QuantumState::normalized(v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect()).ok())
}

/// Random real integrals with the full 8-fold symmetry.
fn random_integrals(n: usize, n_elec: usize) -> impl Strategy<Value = IntegralSet> {
    (prop::collection::vec(-1.0..1.0f64, n * n), prop::collection::vec(-0.5..0.5f64, n * n * n * n), -1.0..1.0f64).prop_map(
        move |(h, g, core)| {
            let mut ints = IntegralSet::zeros(n, n_elec, 0);
            ints.core_energy = core;
            for p in 0..n {
                for q in 0..=p {
                    ints.set_h(p, q, h[p * n + q]);
                }
            }
            for (k, v) in g.iter().enumerate() {
                let (p, q, r, s) = (k / (n * n * n), k / (n * n) % n, k / n % n, k % n);
                ints.set_g(p, q, r, s, *v);
            }
            ints
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn jw_anticommutation(n in 1usize..6, p in 0usize..6, q in 0usize..6) {
        prop_assume!(p < n && q < n);
        let a = |k: usize, c: bool| jw_transform(&FermionOperator::term(n, 1.0, &[(k, c)]), n).unwrap();
        let (ap, aqd) = (a(p, false), a(q, true));
        let anti = &(&ap * &aqd) + &(&aqd * &ap);
        let want = if p == q { PauliSum::identity(n) } else { PauliSum::zero(n) };
        prop_assert!(dense_close(&anti.to_dense(), &want.to_dense(), 1e-14));
        let (aq, apd) = (a(q, false), a(p, true));
        let same = &(&ap * &aq) + &(&aq * &ap);
        prop_assert!(same.to_dense().iter().all(|v| v.norm() <= 1e-14));
        prop_assert!(dense_close(&apd.to_dense(), &ap.to_dense().adjoint(), 1e-14));
    }

    #[test]
    fn string_product_matches_dense(a in pauli_string(4), b in pauli_string(4)) {
        let (k, c) = a.mul_phase(&b);
        let lhs = c.to_dense() * mrps::pauli::i_pow(k);
        prop_assert!(dense_close(&lhs, &(a.to_dense() * b.to_dense()), 1e-14));
        prop_assert_eq!(a.commutes_with(&b), dense_close(&(a.to_dense() * b.to_dense()), &(b.to_dense() * a.to_dense()), 1e-14));
    }

    #[test]
    fn sum_algebra_matches_dense(a in pauli_sum(3), b in pauli_sum(3), psi in random_state(3)) {
        let (da, db) = (a.to_dense(), b.to_dense());
        prop_assert!(dense_close(&(&a * &b).to_dense(), &(&da * &db), 1e-12));
        prop_assert!(dense_close(&(&a + &b).to_dense(), &(&da + &db), 1e-12));
        prop_assert!(dense_close(&a.commutator(&b).to_dense(), &(&da * &db - &db * &da), 1e-12));
        prop_assert!(dense_close(&a.adjoint().to_dense(), &da.adjoint(), 1e-12));
        let v = nalgebra::DVector::from_column_slice(psi.amplitudes());
        let want = &da * v;
        for (x, y) in a.compile().apply(psi.amplitudes()).iter().zip(want.iter()) {
            prop_assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn hamiltonian_conserves_number_and_sz(ints in random_integrals(3, 2)) {
        let h = hamiltonian_to_pauli(&ints, &Partition::single(3, 2)).unwrap();
        prop_assert!(h.is_hermitian(1e-12));
        for op in [number_operator(6), sz_operator(6)] {
            let c = h.commutator(&op);
            prop_assert!(c.terms().all(|(_, v)| v.norm() < 1e-10));
        }
    }

    #[test]
    fn rotation_preserves_spectrum(ints in random_integrals(2, 2), seed in 0u64..1000) {
        let u = OrbitalRotation::from_rows(common::random_orthogonal(2, seed)).unwrap();
        let part = Partition::single(2, 2);
        let e0 = ground_state_in_sector(&hamiltonian_to_pauli(&ints, &part).unwrap(), 2).unwrap().energy;
        let rot = rotate_orbitals(&ints, &u).unwrap();
        let e1 = ground_state_in_sector(&hamiltonian_to_pauli(&rot, &part).unwrap(), 2).unwrap().energy;
        prop_assert!((e0 - e1).abs() < 1e-9);
    }

    #[test]
    fn circuits_preserve_norm(params in prop::collection::vec(-4.0..4.0f64, 48), start in 0u64..16) {
        let cfg = HeaConfig { layers: 3, entangler: Entangler::Full, ..HeaConfig::default() };
        let c = build_hea(4, &cfg).unwrap();
        let s = apply_circuit(&prepare_basis(Bitstring::from_mask(4, start).unwrap()), &c, &params[..c.n_params()]).unwrap();
        prop_assert!((s.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn generator_then_inverse_is_identity(theta in -3.0..3.0f64, psi in random_state(6)) {
        let exc = mrps::fermion::Excitation::Double { p: 0, q: 3, r: 1, s: 4 };
        let (_, image) = excitation_generator(&exc, 6).unwrap();
        let mut c = ParamCircuit::new(6);
        c.push_generator(&image, 0).unwrap();
        c.push_generator(&image.scale(-ONE), 1).unwrap();
        let out = apply_circuit(&psi, &c, &[theta, theta]).unwrap();
        prop_assert!((out.inner(&psi).unwrap() - ONE).norm() < 1e-10);
    }

    #[test]
    fn gradients_agree(params in prop::collection::vec(-3.0..3.0f64, 24), h in pauli_sum(4)) {
        let h = h.hermitian_part();
        prop_assume!(!h.is_empty());
        let cfg = HeaConfig { layers: 2, ..HeaConfig::default() };
        let c = build_hea(4, &cfg).unwrap();
        let x = &params[..c.n_params()];
        let reference = QuantumState::zero(4);
        let hc = h.compile();
        let (_, adjoint) = energy_and_gradient(&c, x, &reference, &hc);
        let shift = parameter_shift_gradient(&c, x, &h, &reference).unwrap();
        let eps = 1e-5;
        for k in 0..x.len() {
            let mut up = x.to_vec();
            let mut dn = x.to_vec();
            up[k] += eps;
            dn[k] -= eps;
            let fd = (energy(&c, &up, &reference, &hc) - energy(&c, &dn, &reference, &hc)) / (2.0 * eps);
            prop_assert!((shift[k] - fd).abs() < 1e-6, "k={} shift={} fd={}", k, shift[k], fd);
            prop_assert!((shift[k] - adjoint[k]).abs() < 1e-10);
        }
    }

    #[test]
    fn energies_respect_the_variational_bound(ints in random_integrals(2, 2), params in prop::collection::vec(-3.0..3.0f64, 40)) {
        let part = Partition::single(2, 2);
        let h = hamiltonian_to_pauli(&ints, &part).unwrap();
        let exact = mrps::oracle::exact_ground_state(&h).unwrap();
        let c = build_hea(4, &HeaConfig { layers: 2, ..HeaConfig::default() }).unwrap();
        let e = energy(&c, &params[..c.n_params()], &QuantumState::zero(4), &h.compile());
        prop_assert!(e >= exact.energy - 1e-9);
    }
}

#[test]
fn inter_pool_predicate_holds_for_every_operator() {
    for (orbs, elec) in [("0,2;1,3", "2,2"), ("0;1,2;3", "2,0,2"), ("0,1,2;3", "4,0")] {
        let part = Partition::parse(orbs, elec).unwrap();
        for kind in [PoolKind::FermionicGsdInter, PoolKind::QubitInter] {
            let pool = build_pool(&part, 8, kind).unwrap();
            assert!(!pool.is_empty());
            for op in &pool.operators {
                assert!(op.fragments_touched(&part) >= 2, "{kind} {}", op.label);
                assert!(op.image.is_anti_hermitian(1e-12), "{}", op.label);
            }
        }
        let full = build_pool(&part, 8, PoolKind::FermionicGsdFull).unwrap();
        assert!(full.operators.iter().any(|op| op.fragments_touched(&part) == 1));
    }
}

#[test]
fn adapt_descends_and_selects_above_threshold() {
    let ints = common::load("h4_rect_r2_1.30_localized");
    let part = Partition::parse("0,2;1,3", "2,2").unwrap();
    let h = hamiltonian_to_pauli(&ints, &part).unwrap();
    let reference = prepare_basis(mrps::integrals::hf_reference(&ints, &part).unwrap());
    let settings = AdaptSettings::default();
    for kind in [PoolKind::QubitInter, PoolKind::FermionicGsdInter] {
        let pool = build_pool(&part, 8, kind).unwrap();
        let r = adapt_vqe(&h, &reference, &pool, &settings, &OptimizerConfig::default()).unwrap();
        let mut prev = r.initial_energy;
        for it in &r.iterations {
            assert!(it.energy <= prev + 1e-12, "{kind}: {} after {prev}", it.energy);
            assert!(it.max_grad >= settings.grad_threshold);
            prev = it.energy;
        }
        assert_eq!(r.final_energy, prev);
        let exact = ground_state_in_sector(&h, 4).unwrap().energy;
        assert!(r.final_energy >= exact - 1e-9);
        let replay = energy(&r.circuit, &r.params, &reference, &h.compile());
        assert!((replay - r.final_energy).abs() < 1e-12);
    }
}
