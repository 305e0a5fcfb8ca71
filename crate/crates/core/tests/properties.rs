use num_complex::Complex64;
use proptest::prelude::*;

use spectral_coupling::coupling::{
    anticommutator_lower_bound_check, block_decompose, effective_operator, effective_operator_in_basis,
    schur_inverse,
};
use spectral_coupling::graph::{reduce_graph, DirectedGraph, SupernodeConvention};
use spectral_coupling::operator::{c64, op_norm, resolvent, spectrum, DenseOperator, Matrix, SubspaceBasis};
use spectral_coupling::riesz::{riesz_projector, riesz_projector_with, RieszOptions};
use spectral_coupling::zoo::{finite_rank_perturbation, planted_isolated_eigenvalue, random_oblique_pair};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

fn square(max_dim: usize) -> impl Strategy<Value = DenseOperator> {
    (1..=max_dim).prop_flat_map(|n| {
        prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n * n).prop_map(move |v| {
            let m = Matrix::from_iterator(n, n, v.into_iter().map(|(re, im)| c64(re, im)));
            DenseOperator::new(m).unwrap()
        })
    })
}

fn pair(max_dim: usize) -> impl Strategy<Value = (DenseOperator, DenseOperator)> {
    (1..=max_dim).prop_flat_map(|n| {
        let entries = || prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n * n);
        (entries(), entries()).prop_map(move |(x, y)| {
            let mk = |v: Vec<(f64, f64)>| {
                DenseOperator::new(Matrix::from_iterator(n, n, v.into_iter().map(|(re, im)| c64(re, im))))
                    .unwrap()
            };
            (mk(x), mk(y))
        })
    })
}

fn far_shift() -> impl Strategy<Value = Complex64> {
    // |z| > 32 exceeds the norm of any generated matrix (entries bounded by √2).
    (0.0..std::f64::consts::TAU, 50.0..80.0f64).prop_map(|(t, r)| Complex64::from_polar(r, t))
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn first_resolvent_identity(m in square(32), z in far_shift(), y in far_shift()) {
        let rz = resolvent(&m, z).unwrap();
        let ry = resolvent(&m, y).unwrap();
        let lhs = &(&rz - &ry) - &(&rz * &ry).scale_complex(z - y);
        prop_assert!(op_norm(&lhs) <= 1e-8 * (1.0 + op_norm(&rz) * op_norm(&ry)));
    }

    #[test]
    fn norm_is_submultiplicative_and_adjoint_invariant((m, n) in pair(16)) {
        prop_assert!(op_norm(&(&m * &n)) <= op_norm(&m) * op_norm(&n) * (1.0 + 1e-12));
        prop_assert!((op_norm(&m.adjoint()) - op_norm(&m)).abs() <= 1e-12 * (1.0 + op_norm(&m)));
    }

    #[test]
    fn block_diagonal_spectrum_is_union((m, n) in pair(8)) {
        let (p, q) = (m.dim(), n.dim());
        let joint = DenseOperator::from_fn(p + q, |i, j| match (i < p, j < p) {
            (true, true) => m.get(i, j),
            (false, false) => n.get(i - p, j - p),
            _ => c64(0.0, 0.0),
        })
        .unwrap();
        let mut parts: Vec<Complex64> = spectrum(&m).eigenvalues().to_vec();
        parts.extend_from_slice(spectrum(&n).eigenvalues());
        let whole = spectrum(&joint).eigenvalues().to_vec();
        prop_assert_eq!(whole.len(), parts.len());
        // Greedy matching is exact here since both lists come from the same blocks.
        let mut used = vec![false; whole.len()];
        for x in &parts {
            let k = (0..whole.len())
                .filter(|&k| !used[k])
                .min_by(|&a, &b| (whole[a] - x).norm().total_cmp(&(whole[b] - x).norm()))
                .unwrap();
            prop_assert!((whole[k] - x).norm() <= 1e-8);
            used[k] = true;
        }
    }
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn riesz_projector_invariants(dim in 2usize..=12, frac in 0.1f64..=0.9, seed in any::<u64>()) {
        let mult = ((dim as f64 * frac) as usize).clamp(1, dim - 1);
        let pl = planted_isolated_eigenvalue(dim, mult, seed).unwrap();
        let tol = 1e-10;
        let rp = riesz_projector(&pl.operator, pl.eigenvalue, tol).unwrap();
        let p = &rp.p;
        prop_assert!(op_norm(&(&(p * p) - p)) <= 1e-9);
        prop_assert_eq!(rp.rank(), mult);
        let cluster = spectrum(&pl.operator).count_within(pl.eigenvalue, 1e-6);
        prop_assert_eq!(cluster, mult);

        // Commutation with the resolvent on the contour.
        for k in 0..8 {
            let zeta = rp.center + Complex64::from_polar(rp.radius, std::f64::consts::TAU * k as f64 / 8.0);
            let r = resolvent(&pl.operator, zeta).unwrap();
            let comm = &(p * &r) - &(&r * p);
            prop_assert!(op_norm(&comm) <= 10.0 * tol * (1.0 + op_norm(&r) * op_norm(p)));
        }

        let third = RieszOptions { radius_fraction: 1.0 / 3.0, ..RieszOptions::default() };
        let rp3 = riesz_projector_with(&pl.operator, pl.eigenvalue, tol, &third).unwrap();
        prop_assert!(op_norm(&(&rp3.p - p)) <= 1e-8 * (1.0 + op_norm(p)));
    }

    #[test]
    fn embedding_is_exact(dim in 3usize..=10, seed in any::<u64>()) {
        let inst = random_oblique_pair(dim, dim / 2, seed).unwrap();
        let rp = inst.projector.as_ref().unwrap();
        let eff = effective_operator(&inst.a, rp).unwrap();
        let pap = &(&rp.p * &inst.a) * &rp.p;
        let err = op_norm(&(&pap - &eff.embedded()));
        prop_assert!(err <= 1e-10 * (1.0 + op_norm(&inst.a)) * (1.0 + op_norm(&rp.p)).powi(2));
    }

    #[test]
    fn compressed_spectrum_is_basis_invariant(dim in 3usize..=8, seed in any::<u64>(), mix in any::<u64>()) {
        let inst = random_oblique_pair(dim, 2, seed).unwrap();
        let rp = inst.projector.as_ref().unwrap();
        let base = effective_operator(&inst.a, rp).unwrap();
        let v = base.basis();
        let t = {
            let s = (mix % 1000) as f64 / 1000.0;
            Matrix::from_row_slice(2, 2, &[c64(1.0, s), c64(0.5, 0.0), c64(-s, 0.2), c64(2.0, 0.0)])
        };
        let mixed = SubspaceBasis::new(v * t).unwrap();
        let other = effective_operator_in_basis(&inst.a, rp, &mixed).unwrap();
        let mut e1 = base.eigenvalues();
        let mut e2 = other.eigenvalues();
        let key = |z: &Complex64| (z.re, z.im);
        e1.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
        e2.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
        for (x, y) in e1.iter().zip(&e2) {
            prop_assert!((x - y).norm() <= 1e-8 * (1.0 + x.norm()));
        }
    }

    #[test]
    fn schur_inverse_matches_direct_solve(dim in 3usize..=12, seed in any::<u64>(), exp in 0.0f64..=4.0) {
        let inst = finite_rank_perturbation(dim, dim / 2, seed).unwrap();
        let rp = inst.projector.as_ref().unwrap();
        let (z, beta) = (c64(0.3, 1.5), 10f64.powf(exp));
        if let Ok(bd) = block_decompose(&inst.a, &inst.b, rp, z, beta) {
            if let Ok(t) = schur_inverse(&bd) {
                let direct = resolvent(&inst.a.plus_scaled(beta, &inst.b).unwrap(), z).unwrap();
                prop_assert!(op_norm(&(&t - &direct)) <= 1e-8 * op_norm(&t));
            }
        }
    }

    #[test]
    fn gamma_star_is_homogeneous_in_a(dim in 2usize..=8, seed in any::<u64>(), c in 0.1f64..=10.0) {
        let inst = finite_rank_perturbation(dim, 1, seed).unwrap();
        let rp = inst.projector.as_ref().unwrap();
        let g1 = anticommutator_lower_bound_check(&inst.a, &inst.b, rp).unwrap();
        let g2 = anticommutator_lower_bound_check(&inst.a.scale(c), &inst.b, rp).unwrap();
        prop_assert_eq!(g1.is_feasible(), g2.is_feasible());
        if g1.is_feasible() {
            let (x, y) = (g1.gamma_star, g2.gamma_star);
            let slack = 1e-12 * c * op_norm(&inst.a) * op_norm(&inst.b);
            prop_assert!((y - c * x).abs() <= 1e-8 * c * x + slack, "{} vs {}", y, c * x);
        }
    }
}

fn integer_graph() -> impl Strategy<Value = (DirectedGraph, Vec<usize>, Vec<usize>)> {
    (4usize..=9).prop_flat_map(|n| {
        (
            prop::collection::vec(1u32..=4, n),
            prop::collection::vec(prop::option::weighted(0.4, 1u32..=5), n * n),
            2usize..n,
            Just((0..n).collect::<Vec<usize>>()).prop_shuffle(),
        )
            .prop_map(move |(masses, weights, k, order)| {
                let mut g = DirectedGraph::new();
                for (i, m) in masses.iter().enumerate() {
                    g.add_node(format!("n{i}"), *m as f64).unwrap();
                }
                // A chain through the cluster keeps W connected.
                for i in 0..k - 1 {
                    g.add_edge(i, i + 1, 1.0).unwrap();
                    g.add_edge(i + 1, i, 1.0).unwrap();
                }
                for x in 0..n {
                    for y in 0..n {
                        if let Some(w) = weights[x * n + y] {
                            if x != y && !(y == x + 1 && x + 1 < k) && !(x == y + 1 && y + 1 < k) {
                                g.add_edge(x, y, w as f64).unwrap();
                            }
                        }
                    }
                }
                (g, (0..k).collect(), order)
            })
    })
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn laplacian_rows_sum_to_zero((g, _, _) in integer_graph()) {
        let l = g.laplacian().unwrap();
        for i in 0..g.node_count() {
            let row: Complex64 = (0..g.node_count()).map(|j| l.get(i, j)).sum();
            prop_assert!(row.norm() <= 1e-14 * (1.0 + l.get(i, i).norm()));
        }
    }

    #[test]
    fn reduction_conserves_mass((g, w, _) in integer_graph()) {
        let red = reduce_graph(&g, &w, SupernodeConvention::MassWeighted).unwrap();
        prop_assert_eq!(red.graph.total_mass(), g.total_mass());
        let l = red.laplacian().unwrap();
        for i in 0..red.graph.node_count() {
            let row: Complex64 = (0..red.graph.node_count()).map(|j| l.get(i, j)).sum();
            prop_assert!(row.norm() <= 1e-14 * (1.0 + l.get(i, i).norm()));
        }
    }

    #[test]
    fn reduction_commutes_with_relabeling((g, w, order) in integer_graph()) {
        let direct = reduce_graph(&g, &w, SupernodeConvention::MassWeighted).unwrap();
        let h = g.permuted(&order).unwrap();
        // Node order[k] of g becomes node k of h.
        let w_h: Vec<usize> = w.iter().map(|x| order.iter().position(|y| y == x).unwrap()).collect();
        let relabeled = reduce_graph(&h, &w_h, SupernodeConvention::MassWeighted).unwrap();

        let key = |red: &spectral_coupling::graph::ReducedGraph, i: usize| -> String {
            if i == red.supernode { "*".into() } else { red.graph.node_ids()[i].clone() }
        };
        let n = direct.graph.node_count();
        prop_assert_eq!(n, relabeled.graph.node_count());
        let map: Vec<usize> = (0..n)
            .map(|i| (0..n).find(|&j| key(&relabeled, j) == key(&direct, i)).unwrap())
            .collect();
        let (l1, l2) = (direct.laplacian().unwrap(), relabeled.laplacian().unwrap());
        for i in 0..n {
            prop_assert_eq!(direct.graph.masses()[i], relabeled.graph.masses()[map[i]]);
            for j in 0..n {
                prop_assert_eq!(l1.get(i, j), l2.get(map[i], map[j]));
            }
        }
    }
}
