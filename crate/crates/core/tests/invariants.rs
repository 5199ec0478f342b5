use num_complex::Complex64 as C64;
use patchpeps::estimator::patch_expectation;
use patchpeps::format::{read_peps, write_peps};
use patchpeps::generators::{aklt_chain, random_injective_peps};
use patchpeps::linalg::{condition_number, pseudo_inverse};
use patchpeps::oracle::exact_expectation;
use patchpeps::parent::parent_terms;
use patchpeps::patch::select_patch;
use patchpeps::tensor::{contract, tensor_product};
use patchpeps::transfer::{dressed_transfer, site_transfer_operator};
use patchpeps::{par, DenseTensor, LatticeSpec, Observable, PepsState};
use proptest::prelude::*;

fn tensor_from(shape: Vec<usize>, seed: &[f64]) -> DenseTensor {
    let n: usize = shape.iter().product();
    let data = (0..n)
        .map(|i| C64::new(seed[(2 * i) % seed.len()], seed[(2 * i + 1) % seed.len()]))
        .collect();
    DenseTensor::new(shape, data).unwrap()
}

fn entries() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 16..64)
}

fn mat_mul(a: &DenseTensor, b: &DenseTensor) -> DenseTensor {
    a.matmul(b).unwrap()
}

fn small_lattice() -> impl Strategy<Value = LatticeSpec> {
    prop_oneof![
        (3usize..7).prop_map(|n| LatticeSpec::chain(n).unwrap()),
        (2usize..4, 2usize..4).prop_map(|(r, c)| LatticeSpec::grid(r, c).unwrap()),
    ]
}

/// t[.., i, ..] ← Σ_j t[.., j, ..] m[j, i] on `axis`.
fn act_on_axis(t: &DenseTensor, axis: usize, m: &DenseTensor) -> DenseTensor {
    let c = contract(t, m, &[(axis, 0)]).unwrap();
    let r = c.rank();
    let mut perm: Vec<usize> = (0..r - 1).collect();
    perm.insert(axis, r - 1);
    c.permute(&perm).unwrap()
}

fn axis_of(lat: &LatticeSpec, site: usize, edge_id: usize) -> usize {
    1 + lat.legs(site).iter().position(|l| l.edge.id(lat.dimension) == edge_id).unwrap()
}

fn rel_close(a: C64, b: C64, tol: f64) -> bool {
    (a - b).norm() <= tol * b.norm().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, ..ProptestConfig::default() })]

    #[test]
    fn contraction_order_does_not_matter(x in entries(), y in entries(), z in entries()) {
        let a = tensor_from(vec![2, 3, 2], &x);
        let b = tensor_from(vec![3, 2, 2], &y);
        let c = tensor_from(vec![2, 3], &z);
        // (a·b)·c versus a·(b·c), contracting a1–b0 and b2–c0.
        let left = contract(&contract(&a, &b, &[(1, 0)]).unwrap(), &c, &[(3, 0)]).unwrap();
        let right = contract(&a, &contract(&b, &c, &[(2, 0)]).unwrap(), &[(1, 0)]).unwrap();
        prop_assert!(left.max_abs_diff(&right) <= 1e-12);
        // Listing pairs in a different order is the same contraction.
        let ab = contract(&a, &b, &[(1, 0), (2, 1)]).unwrap();
        let ba = contract(&a, &b, &[(2, 1), (1, 0)]).unwrap();
        prop_assert!(ab.max_abs_diff(&ba) <= 1e-12);
    }

    #[test]
    fn identity_contraction_is_neutral(x in entries()) {
        let a = tensor_from(vec![2, 3, 4], &x);
        for (axis, n) in [(0, 2), (1, 3), (2, 4)] {
            let back = act_on_axis(&a, axis, &DenseTensor::identity(n));
            prop_assert_eq!(&back, &a);
        }
        let outer = tensor_product(&a, &DenseTensor::scalar(C64::new(1.0, 0.0)));
        prop_assert_eq!(outer.data(), a.data());
    }

    #[test]
    fn pseudo_inverse_penrose_identities(x in entries(), rows in 2usize..5, cols in 2usize..5) {
        let a = tensor_from(vec![rows, cols], &x);
        let p = pseudo_inverse(&a, 1e-12).unwrap();
        let scale = a.norm() * p.norm();
        prop_assert!(mat_mul(&mat_mul(&a, &p), &a).max_abs_diff(&a) <= 1e-10 * a.norm() * scale);
        prop_assert!(mat_mul(&mat_mul(&p, &a), &p).max_abs_diff(&p) <= 1e-10 * p.norm() * scale);
        let ap = mat_mul(&a, &p);
        prop_assert!(ap.max_abs_diff(&ap.adjoint().unwrap()) <= 1e-10 * scale);
        let pa = mat_mul(&p, &a);
        prop_assert!(pa.max_abs_diff(&pa.adjoint().unwrap()) <= 1e-10 * scale);
    }

    #[test]
    fn condition_number_symmetries(x in entries(), n in 2usize..5, s in 0.01f64..100.0) {
        let a = tensor_from(vec![n + 1, n], &x);
        if let Ok(k) = condition_number(&a) {
            prop_assume!(k < 1e6);
            let scaled = condition_number(&a.scale(C64::new(0.0, s))).unwrap();
            prop_assert!((scaled - k).abs() <= 1e-8 * k);
            let p = pseudo_inverse(&a, 0.0).unwrap();
            // A⁺ is wide; its condition number on the support matches.
            let kp = patchpeps::linalg::support_condition_number(&p).unwrap();
            prop_assert!((kp - k).abs() <= 1e-6 * k);
        }
    }

    #[test]
    fn unclipped_patch_size(ell in 0usize..4) {
        let n = 2 * ell + 3;
        let lat = LatticeSpec::grid(n, n).unwrap();
        let p = select_patch(&lat, &[vec![n / 2, n / 2]], ell).unwrap();
        prop_assert!(!p.clipped);
        prop_assert_eq!(p.len(), 2 * ell * ell + 2 * ell + 1);
        let chain = LatticeSpec::chain(n).unwrap();
        prop_assert_eq!(select_patch(&chain, &[vec![n / 2]], ell).unwrap().len(), 2 * ell + 1);
    }

    #[test]
    fn identity_observable_is_exactly_one(lat in small_lattice(), seed in 0u64..1000, ell in 0usize..3) {
        let peps = random_injective_peps(&lat, 2, 2, 0.3, seed).unwrap();
        let site = lat.coord(seed as usize % lat.num_sites());
        let id = Observable::identity(vec![site], 2).unwrap();
        prop_assert_eq!(patch_expectation(&peps, &id, ell).unwrap().value, C64::new(1.0, 0.0));
    }

    #[test]
    fn full_coverage_patch_matches_oracle(lat in small_lattice(), seed in 0u64..1000) {
        let peps = random_injective_peps(&lat, 2, 2, 0.3, seed).unwrap();
        let site = lat.coord(seed as usize % lat.num_sites());
        let z = Observable::preset("pauli-z", site, 2).unwrap();
        let exact = exact_expectation(&peps, &z).unwrap().value;
        let full = patch_expectation(&peps, &z, lat.diameter()).unwrap();
        prop_assert!(full.value == exact || (full.value - exact).norm() <= 1e-10 * exact.norm().max(1.0));
    }

    #[test]
    fn gauge_and_scale_leave_values_unchanged(lat in small_lattice(), seed in 0u64..1000, g in entries(), s in 0.1f64..10.0) {
        let peps = random_injective_peps(&lat, 2, 2, 0.3, seed).unwrap();
        let edges = lat.edges();
        let e = edges[seed as usize % edges.len()];
        // Near-identity gauge so the inverse is well conditioned.
        let gm = DenseTensor::from_fn_matrix(2, 2, |i, j| {
            let d = if i == j { 1.0 } else { 0.0 };
            C64::new(d + 0.3 * g[2 * i + j], 0.3 * g[4 + 2 * i + j])
        });
        let ginv = pseudo_inverse(&gm, 0.0).unwrap().permute(&[1, 0]).unwrap();
        let id = e.id(lat.dimension);
        let ta = act_on_axis(&peps.site(e.a).tensor, axis_of(&lat, e.a, id), &gm);
        let tb = act_on_axis(&peps.site(e.b).tensor, axis_of(&lat, e.b, id), &ginv);
        let gauged = peps.with_tensor(e.a, ta).unwrap().with_tensor(e.b, tb).unwrap();
        let scaled = gauged.with_tensor(0, gauged.site(0).tensor.scale(C64::new(s, -s))).unwrap();

        let site = lat.coord(seed as usize % lat.num_sites());
        let z = Observable::preset("pauli-x", site, 2).unwrap();
        let before = exact_expectation(&peps, &z).unwrap().value;
        let after = exact_expectation(&scaled, &z).unwrap().value;
        prop_assert!((before - after).norm() <= 1e-9 * before.norm().max(1.0));
    }

    #[test]
    fn file_round_trip_is_byte_stable(lat in small_lattice(), seed in 0u64..1000, d in 1usize..4) {
        let peps = random_injective_peps(&lat, 2, d, 0.5, seed).unwrap();
        let text = write_peps(&peps).unwrap();
        let back: PepsState = read_peps(&text).unwrap();
        prop_assert_eq!(&back, &peps);
        prop_assert_eq!(write_peps(&back).unwrap(), text);
    }

    #[test]
    fn transfer_operators_are_swap_conjugate(seed in 0u64..1000, d in 2usize..4, bond in 1usize..4) {
        let peps = random_injective_peps(&LatticeSpec::chain(4).unwrap(), bond, d, 0.5, seed).unwrap();
        let t = peps.site(1);
        let e = site_transfer_operator(t).unwrap();
        prop_assert!(e.swap_conj_defect() <= 1e-12 * e.matrix.norm());
        // A Hermitian insertion keeps the symmetry.
        let h = DenseTensor::from_fn_matrix(d, d, |i, j| C64::new((i + j) as f64, i as f64 - j as f64));
        let eh = dressed_transfer(t, &h).unwrap();
        prop_assert!(eh.swap_conj_defect() <= 1e-12 * eh.matrix.norm());
    }

    #[test]
    fn parallel_and_sequential_agree_bitwise(seed in 0u64..1000, ell in 1usize..3) {
        let lat = LatticeSpec::grid(5, 5).unwrap();
        let peps = random_injective_peps(&lat, 2, 2, 0.3, seed).unwrap();
        let z = Observable::preset("pauli-z", vec![2, 2], 2).unwrap();
        par::set_parallel(false);
        let seq = patch_expectation(&peps, &z, ell).map(|e| e.value);
        par::set_parallel(true);
        let parl = patch_expectation(&peps, &z, ell).map(|e| e.value);
        prop_assert_eq!(seq.unwrap(), parl.unwrap());
    }
}

#[test]
fn parent_terms_are_hermitian_projectors() {
    let chain = aklt_chain(6).unwrap();
    for term in parent_terms(&chain, 2).unwrap() {
        let p = &term.projector;
        let adj = p.adjoint().unwrap();
        assert!(p.max_abs_diff(&adj) <= 1e-12);
        assert!(p.matmul(p).unwrap().max_abs_diff(p) <= 1e-12);
    }
}

#[test]
fn gauge_helper_moves_the_right_axis() {
    let lat = LatticeSpec::grid(2, 2).unwrap();
    let peps = random_injective_peps(&lat, 2, 2, 0.3, 1).unwrap();
    let e = lat.edges()[0];
    let a = axis_of(&lat, e.a, e.id(lat.dimension));
    let t = &peps.site(e.a).tensor;
    let swap = DenseTensor::from_fn_matrix(2, 2, |i, j| C64::new(if i != j { 1.0 } else { 0.0 }, 0.0));
    let moved = act_on_axis(t, a, &swap);
    let mut idx = vec![0; t.rank()];
    idx[0] = 1;
    let mut flipped = idx.clone();
    flipped[a] = 1;
    assert_eq!(moved.get(&idx), t.get(&flipped));
    assert!(rel_close(moved.norm().into(), t.norm().into(), 1e-14));
}
