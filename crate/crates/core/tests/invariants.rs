use aqrm_core::ed::{self, apply_parity, build_hamiltonian, ecs_to_fock, residual_norm, EdOptions, TruncatedHamiltonian};
use aqrm_core::exceptional::{self, pole1_condition};
use aqrm_core::gfunction::{eval_g, lowest_levels, Branch, ScanOptions};
use aqrm_core::ModelParams;
use nalgebra::DVector;
use proptest::prelude::*;

fn anisotropy() -> impl Strategy<Value = f64> {
    prop_oneof![0.1..0.9, 1.1..3.0]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn hamiltonian_commutes_with_parity(delta in 0.1..2.5, g in 0.0..1.5, r in 0.0..3.0, seed in any::<u64>()) {
        let h = build_hamiltonian(&ModelParams::new(delta, g, r).unwrap(), 30);
        let v = DVector::from_fn(h.dim(), |i, _| ((i as u64 ^ seed) % 97) as f64 - 48.0);
        let lhs = h.apply(&apply_parity(&v));
        let rhs = apply_parity(&h.apply(&v));
        prop_assert!((lhs - rhs).norm() < 1e-10 * v.norm());
    }

    #[test]
    fn coupling_duality_preserves_spectrum(delta in 0.1..2.5, g in 0.05..1.2, r in 0.0..2.5) {
        let a = build_hamiltonian(&ModelParams::new(delta, g, r).unwrap(), 60);
        let b = TruncatedHamiltonian::from_couplings(-delta, g * r, g, 60);
        let low = |h: &TruncatedHamiltonian| {
            let mut v: Vec<f64> = h.even.symmetric_eigenvalues().iter().chain(h.odd.symmetric_eigenvalues().iter()).copied().collect();
            v.sort_by(f64::total_cmp);
            v.truncate(6);
            v
        };
        for (x, y) in low(&a).iter().zip(low(&b)) {
            prop_assert!((x - y).abs() < 1e-8, "{} vs {}", x, y);
        }
    }

    #[test]
    fn regular_levels_agree_with_ed(delta in 0.2..2.0, g in 0.05..1.3, r in anisotropy()) {
        let p = ModelParams::new(delta, g, r).unwrap();
        let levels = lowest_levels(&p, 5, &ScanOptions::default()).unwrap();
        let res = ed::diagonalize_with(&p, &EdOptions::new(&p, 5));
        prop_assert!(res.converged);
        prop_assert_eq!(levels.len(), 5);
        for (k, pt) in levels.iter().enumerate() {
            prop_assert!((pt.energy - res.energies[k]).abs() < 1e-8);
            prop_assert_eq!(pt.parity, Some(res.parities[k]));
        }
    }

    #[test]
    fn regular_zero_vanishes_in_one_branch_only(delta in 0.2..2.0, g in 0.1..1.3, r in anisotropy()) {
        let p = ModelParams::new(delta, g, r).unwrap();
        for pt in lowest_levels(&p, 4, &ScanOptions::default()).unwrap() {
            let branch = Branch::for_parity(pt.parity.unwrap());
            let (lo, hi) = (eval_g(&p, pt.x - 1e-9).unwrap(), eval_g(&p, pt.x + 1e-9).unwrap());
            prop_assert!(lo.relative(branch) * hi.relative(branch) < 0.0, "x = {}", pt.x);
            let other = eval_g(&p, pt.x).unwrap().relative(branch.other());
            prop_assert!(other.abs() > 1e-6, "x = {}: {}", pt.x, other);
        }
    }

    #[test]
    fn cubic_roots_satisfy_the_pole_condition(delta in 0.3..2.5, r in anisotropy()) {
        for g in exceptional::solve_pole1_cubic(delta, r) {
            let scale = 1.0 + g.powi(6);
            prop_assert!(pole1_condition(delta, r, g * g).abs() < 1e-8 * scale, "g = {}", g);
        }
    }

    #[test]
    fn lowest_crossing_is_quasi_exact(delta in 0.2..2.5, r in 0.05..0.9) {
        let g0 = exceptional::closed_form_g0(delta, r).unwrap();
        let p = ModelParams::new(delta, g0, r).unwrap();
        let (a, b) = exceptional::build_quasi_exact_pair(0, &p).unwrap();
        let n_trunc = ed::suggested_trunc(&p);
        let h = build_hamiltonian(&p, n_trunc);
        let energy = -p.derived().lambda_plus;
        for s in [a, b] {
            let v = ecs_to_fock(&s, n_trunc).unwrap();
            prop_assert!(residual_norm(&h, &v, energy) < 1e-9);
        }
    }

    #[test]
    fn degenerate_points_sit_on_their_pole_line(delta in 0.3..2.0, r in anisotropy(), n in 1usize..3) {
        let base = ModelParams::new(delta, 1.0, r).unwrap();
        for q in exceptional::find_degenerate_points(n, &base, (0.0, 3.0)).unwrap() {
            prop_assert!((q.energy - (n as f64 - q.params().derived().lambda_plus)).abs() < 1e-12);
            prop_assert!(q.confirmed, "{:?}", q);
        }
    }
}
