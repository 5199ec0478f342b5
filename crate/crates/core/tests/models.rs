use num_complex::Complex64 as C64;
use patchpeps::generators::{aklt_chain, random_injective_peps};
use patchpeps::observable::{pauli, spin1};
use patchpeps::oracle::exact_correlation;
use patchpeps::peps::{build_state_vector, disentangle_site, injectivity_check};
use patchpeps::tensor::kron;
use patchpeps::transfer::{decay_fit, dressed_transfer, site_transfer_operator, spectrum};
use patchpeps::{DenseTensor, LatticeSpec, Observable};

fn total_spin_squared() -> DenseTensor {
    let id = DenseTensor::identity(3);
    let mut s2 = DenseTensor::zeros(vec![9, 9]);
    for axis in ["x", "y", "z"] {
        let s = spin1(axis).unwrap();
        let total = kron(&s, &id).unwrap();
        let other = kron(&id, &s).unwrap();
        let sum = DenseTensor::new(
            vec![9, 9],
            total.data().iter().zip(other.data()).map(|(a, b)| a + b).collect(),
        )
        .unwrap();
        let sq = sum.matmul(&sum).unwrap();
        for (acc, v) in s2.data_mut().iter_mut().zip(sq.data()) {
            *acc += v;
        }
    }
    s2
}

#[test]
fn two_site_aklt_has_no_spin_two_weight() {
    let psi = build_state_vector(&aklt_chain(2).unwrap()).unwrap().reshape(vec![9, 1]).unwrap();
    let s2 = total_spin_squared();
    // S² has eigenvalues 0, 2, 6; (S²)(S² − 2)/24 projects onto spin 2.
    let s2psi = s2.matmul(&psi).unwrap();
    let s4psi = s2.matmul(&s2psi).unwrap();
    let p2: Vec<C64> = s4psi.data().iter().zip(s2psi.data()).map(|(a, b)| (a - b * 2.0) / 24.0).collect();
    let weight: f64 = p2.iter().map(|z| z.norm_sqr()).sum();
    assert!(weight < 1e-24 * psi.norm().powi(2), "{weight}");
}

#[test]
fn aklt_sites_block_to_injective_pairs() {
    let chain = aklt_chain(6).unwrap();
    assert!(!injectivity_check(chain.site(2)).injective);
    let b = patchpeps::peps::block(&chain, &[vec![2], vec![3]]).unwrap();
    let r = injectivity_check(&b);
    assert!(r.injective);
    assert_eq!(b.tensor.shape(), &[9, 2, 2]);
}

#[test]
fn aklt_correlation_ratio_from_site_three() {
    let chain = aklt_chain(8).unwrap();
    let conn = |x: usize| {
        let a = Observable::preset("s_z", vec![3], 3).unwrap();
        let b = Observable::preset("s_z", vec![3 + x], 3).unwrap();
        exact_correlation(&chain, &a, &b).unwrap().1
    };
    assert!((conn(2) / conn(1) + 1.0 / 3.0).norm() < 1e-6);
    assert!((conn(3) / conn(2) + 1.0 / 3.0).norm() < 1e-6);
    let mid = Observable::preset("s_z", vec![4], 3).unwrap();
    assert!(patchpeps::exact_expectation(&chain, &mid).unwrap().value.norm() < 1e-10);
}

/// |φ⟩ on every edge, laid out on the axes a full disentangling leaves behind.
fn pair_state(lat: &LatticeSpec, order: &[usize], bond: usize) -> DenseTensor {
    let mut edge_of_axis = Vec::new();
    for &s in order {
        for leg in lat.legs(s) {
            edge_of_axis.push(leg.edge.id(lat.dimension));
        }
    }
    let shape = vec![bond; edge_of_axis.len()];
    let n: usize = shape.iter().product();
    let amp = (bond as f64).powf(-0.5 * lat.num_edges() as f64);
    let mut data = vec![C64::new(0.0, 0.0); n];
    let mut index = vec![0usize; shape.len()];
    for (flat, slot) in data.iter_mut().enumerate() {
        let mut rem = flat;
        for k in (0..shape.len()).rev() {
            index[k] = rem % bond;
            rem /= bond;
        }
        let consistent = (0..index.len())
            .all(|a| (0..index.len()).all(|b| edge_of_axis[a] != edge_of_axis[b] || index[a] == index[b]));
        if consistent {
            *slot = C64::new(amp, 0.0);
        }
    }
    DenseTensor::new(shape, data).unwrap()
}

#[test]
fn full_disentangling_recovers_the_pairs() {
    let lat = LatticeSpec::grid(2, 2).unwrap();
    let peps = random_injective_peps(&lat, 2, 4, 0.3, 5).unwrap();
    assert!(peps.tensors().iter().all(|t| injectivity_check(t).injective));
    let mut state = build_state_vector(&peps).unwrap();
    let order = [3, 2, 1, 0];
    for &s in &order {
        state = disentangle_site(&state, peps.site(s), s).unwrap();
    }
    let want = pair_state(&lat, &order, 2);
    assert_eq!(state.shape(), want.shape());
    let overlap: C64 = want.data().iter().zip(state.data()).map(|(w, s)| w.conj() * s).sum();
    let fidelity = overlap.norm_sqr() / (want.norm().powi(2) * state.norm().powi(2));
    assert!(fidelity > 1.0 - 1e-8, "{fidelity}");
}

#[test]
fn random_chain_sites_have_a_unique_top() {
    let lat = LatticeSpec::chain(5).unwrap();
    for seed in 0..20 {
        let peps = random_injective_peps(&lat, 2, 2, 0.5, seed).unwrap();
        let e = site_transfer_operator(peps.site(2)).unwrap();
        assert!(e.swap_conj_defect() < 1e-12 * e.matrix.norm());
        let s = spectrum(&e).unwrap();
        assert!(s.unique_top, "seed {seed}");
        assert!(s.ratio < 1.0 && s.ratio >= 0.0);
    }
}

#[test]
fn perturbed_chain_decay_matches_spectral_gap() {
    let peps = random_injective_peps(&LatticeSpec::chain(8).unwrap(), 2, 2, 0.1, 42).unwrap();
    let site = peps.site(3);
    let e = site_transfer_operator(site).unwrap();
    let gap = spectrum(&e).unwrap().delta_bound;
    let z = dressed_transfer(site, &pauli("z").unwrap()).unwrap();
    // Beyond x = 4 the connected part falls under the rounding of the joint
    // value; the fit stays on the resolved points.
    let fit = decay_fit(&e, &z, &z, 1..=4, 200).unwrap();
    assert!((fit.rate - gap).abs() <= 0.05 * gap, "rate {} vs {gap}", fit.rate);
}

#[test]
fn aklt_decay_rate_is_ln_three() {
    let chain = aklt_chain(4).unwrap();
    let e = site_transfer_operator(chain.site(1)).unwrap();
    let sz = dressed_transfer(chain.site(1), &spin1("z").unwrap()).unwrap();
    let fit = decay_fit(&e, &sz, &sz, 1..=10, 64).unwrap();
    assert!((fit.rate - 3f64.ln()).abs() < 0.02 * 3f64.ln());
    assert!(fit.r_squared > 1.0 - 1e-9);
}
