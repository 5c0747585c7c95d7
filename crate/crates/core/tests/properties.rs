use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use stoq_core::bits::BitString;
use stoq_core::circuits::{decompose_stoquastic, OutBasis, VerifierCircuit};
use stoq_core::estimators::{
    cnf_ensemble, replica_ensemble, sbp_bounds, sbp_matrix, trace_power_exact, ClusteredSolver,
};
use stoq_core::exec::Exec;
use stoq_core::gates::{apply_circuit, apply_inverse, Gate};
use stoq_core::instances::{random_block_projector, random_stoquastic_hamiltonian, Cnf, GridSpec};
use stoq_core::ops::{block_decompose, projector_check};
use stoq_core::spectral::eigenvalues;
use stoq_core::walk::wilson_interval;

fn gate_strategy(width: usize) -> impl Strategy<Value = Gate> {
    (
        0..3usize,
        prop::sample::subsequence((0..width).collect::<Vec<_>>(), 3.min(width)),
        any::<bool>(),
    )
        .prop_map(move |(kind, mut q, flip)| {
            if flip {
                q.reverse();
            }
            match kind.min(q.len() - 1) {
                0 => Gate::x(q[0]),
                1 => Gate::cnot(q[0], q[1]),
                _ => Gate::toffoli(q[0], q[1], q[2]),
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn circuits_are_reversible(gates in prop::collection::vec(gate_strategy(5), 0..12), b in 0u64..32) {
        prop_assert_eq!(apply_inverse(&gates, apply_circuit(&gates, b)), b);
    }

    #[test]
    fn bitstrings_round_trip(n in 1usize..40, v in any::<u64>()) {
        let x = BitString::new(v & ((1u64 << n) - 1), n).unwrap();
        prop_assert_eq!(BitString::parse(&x.to_binary(), None).unwrap(), x);
    }

    #[test]
    fn generated_projectors_decompose(seed in any::<u64>(), k in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (block, comps) = random_block_projector(&mut rng, k).unwrap();
        let dim = 1 << k;
        let p = DMatrix::from_row_slice(dim, dim, &block);
        prop_assert!(projector_check(&p, 1e-12).ok);
        prop_assert!(p.iter().all(|&v| v >= 0.0));
        let d = block_decompose(&p, 1e-12).unwrap();
        prop_assert_eq!(d.rank(), comps.len());
        prop_assert!((p.trace() - comps.len() as f64).abs() < 1e-9);
    }

    #[test]
    fn decomposition_reconstructs(seed in any::<u64>(), n in 2usize..=4, terms in 1usize..5) {
        let inst = random_stoquastic_hamiltonian(n, terms, seed, GridSpec::Continuous).unwrap();
        let d = decompose_stoquastic(&inst).unwrap();
        prop_assert!(d.parts.iter().all(|p| p.p >= 0.0));
        prop_assert!((d.parts.iter().map(|p| p.p).sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(d.residual(&inst.hamiltonian().unwrap(), 10).unwrap() < 1e-10);
    }

    #[test]
    fn sbp_matrix_is_substochastic_and_bounded(seed in any::<u64>(), n in 2usize..=5) {
        let inst = random_stoquastic_hamiltonian(n, n + 1, seed, GridSpec::Continuous).unwrap();
        let (g, p) = sbp_matrix(&inst).unwrap();
        let d = g.to_dense(10).unwrap();
        prop_assert!(d.iter().all(|&v| (-1e-15..=1.0).contains(&v)));
        let mu = eigenvalues(&d)[d.nrows() - 1];
        let lmin = eigenvalues(&inst.hamiltonian().unwrap().to_dense(10).unwrap())[0];
        prop_assert!((mu - 0.5 * (1.0 - lmin / p)).abs() < 1e-10);
        for l in 1..6 {
            let t = trace_power_exact(&g, l, 10).unwrap().value;
            prop_assert!(t >= mu.powi(l as i32) - 1e-12);
            prop_assert!(t <= (1 << n) as f64 * mu.powi(l as i32) + 1e-12);
        }
    }

    #[test]
    fn bounds_are_minimal(ly in -2.0f64..0.0, gap in 0.05f64..1.0, n in 0usize..12) {
        let p = 4.0;
        let b = sbp_bounds(ly, ly + gap, p, n, 0.5).unwrap();
        let f = |l: usize| (n as f64) * 2f64.ln() + l as f64 * (b.mu_no / b.mu_yes).ln();
        prop_assert!(f(b.l) <= 0.5f64.ln() + 1e-9);
        prop_assert!(b.l == 1 || f(b.l - 1) > 0.5f64.ln());
    }

    #[test]
    fn wilson_contains_estimate(k in 0u64..500, extra in 1u64..500) {
        let n = k + extra;
        let (lo, hi) = wilson_interval(k, n, 1.96);
        let p = k as f64 / n as f64;
        prop_assert!(lo <= p + 1e-12 && p <= hi + 1e-12);
        prop_assert!((0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi));
    }

    #[test]
    fn cnf_energy_is_min_unsat(seed in any::<u64>(), r in 0u64..4) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut clauses = Vec::new();
        for _ in 0..8 {
            let q: i64 = if rng.gen_bool(0.5) { 1 } else { 2 };
            let q = if rng.gen_bool(0.5) { q } else { -q };
            let a = rng.gen_range(3..=6i64);
            let b = (a - 3 + rng.gen_range(1..4)) % 4 + 3;
            let mut c = vec![if rng.gen_bool(0.5) { a } else { -a }, if rng.gen_bool(0.5) { b } else { -b }];
            if rng.gen_bool(0.6) {
                c.push(q);
            }
            clauses.push(c);
        }
        let cnf = Cnf { num_vars: 6, clauses };
        let ens = cnf_ensemble(&cnf, 2).unwrap();
        let bits = [r & 1 == 1, r & 2 == 2];
        let got = ClusteredSolver::new(10).lambda_min(&ens.realize(&bits).unwrap()).unwrap();
        let want = (0..16u64).map(|w| cnf.unsatisfied_count(r | (w << 2))).min().unwrap() as f64;
        prop_assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn replicas_average_their_copies(bits in prop::collection::vec(any::<bool>(), 6)) {
        let cnf = Cnf::parse("p cnf 5 4\n1 3 4 0\n-1 -3 0\n2 -4 5 0\n-2 4 0\n").unwrap();
        let ens = cnf_ensemble(&cnf, 2).unwrap();
        let rep = replica_ensemble(&ens, 3).unwrap();
        let solver = ClusteredSolver::new(10);
        let whole = solver.lambda_min(&rep.realize(&bits).unwrap()).unwrap();
        let parts: f64 = bits
            .chunks(2)
            .map(|c| solver.lambda_min(&ens.realize(c).unwrap()).unwrap())
            .sum::<f64>() / 3.0;
        prop_assert!((whole - parts).abs() < 1e-12);
    }

    #[test]
    fn acceptance_operator_modes_agree(gates in prop::collection::vec(gate_strategy(4), 1..8), plus in any::<bool>()) {
        let basis = if plus { OutBasis::Plus } else { OutBasis::Zero };
        let c = VerifierCircuit::new(0, 2, 1, 1, basis, gates).unwrap();
        let z = BitString::zeros(0);
        let a = c.acceptance_operator(z, Exec::Sequential).unwrap();
        let b = c.acceptance_operator(z, Exec::Parallel).unwrap();
        prop_assert_eq!(&a, &b);
        let e = eigenvalues(&a);
        prop_assert!(e[0] >= -1e-12 && e[e.len() - 1] <= 1.0 + 1e-12);
    }
}
