//! Seeded generators for test inputs.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::{LhMinInstance, StoqSatInstance};
use crate::error::{Error, Result};
use crate::ops::{projector_from_components, BlockComponent, LocalOperator};

fn pick_support(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    let mut all: Vec<usize> = (0..n).collect();
    all.shuffle(rng);
    let mut s = all[..k].to_vec();
    s.sort_unstable();
    s
}

/// Random non-negative projector on `k` local qubits: the local basis is
/// split into random blocks and a random subset of blocks (at least one)
/// each gets a strictly positive unit vector.
pub fn random_block_projector(
    rng: &mut ChaCha8Rng,
    k: usize,
) -> Result<(Vec<f64>, Vec<BlockComponent>)> {
    let dim = 1usize << k;
    let mut order: Vec<u64> = (0..dim as u64).collect();
    order.shuffle(rng);
    let mut blocks: Vec<Vec<u64>> = Vec::new();
    let mut i = 0;
    while i < dim {
        let len = rng.gen_range(1..=(dim - i).min(4));
        blocks.push(order[i..i + len].to_vec());
        i += len;
    }
    let mut comps = Vec::new();
    for b in &blocks {
        if rng.gen_bool(0.5) {
            let w: Vec<(u64, f64)> = b.iter().map(|&x| (x, rng.gen_range(0.1..1.0))).collect();
            comps.push(BlockComponent::from_weights(k, w)?);
        }
    }
    if comps.is_empty() {
        let b = &blocks[rng.gen_range(0..blocks.len())];
        let w: Vec<(u64, f64)> = b.iter().map(|&x| (x, rng.gen_range(0.1..1.0))).collect();
        comps.push(BlockComponent::from_weights(k, w)?);
    }
    let p = projector_from_components(dim, &comps)?;
    Ok((p.transpose().as_slice().to_vec(), comps))
}

/// `M` random `k`-local non-negative projectors on `n` qubits.
/// No promise about satisfiability; `epsilon` is left unset.
pub fn random_projector_instance(
    n: usize,
    k: usize,
    m: usize,
    seed: u64,
) -> Result<StoqSatInstance> {
    if k == 0 || k > 6 || k > n || m == 0 {
        return Err(Error::Precondition(format!(
            "need 1 <= k <= min(6, n) and M >= 1 (n={n}, k={k}, M={m})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut projectors = Vec::with_capacity(m);
    for _ in 0..m {
        let support = pick_support(&mut rng, n, k);
        let (block, _) = random_block_projector(&mut rng, k)?;
        projectors.push(LocalOperator::new(support, block)?);
    }
    let mut inst = StoqSatInstance::new(n, None, projectors);
    inst.metadata.insert("source".into(), json!("random"));
    inst.metadata.insert("seed".into(), json!(seed));
    Ok(inst)
}

/// Yes-instance with a planted non-negative product state `phi`: each qubit
/// is `|0>`, `|1>` or a random positive superposition, and each projector is
/// `|phi_S><phi_S|` plus random blocks disjoint from `supp(phi_S)`.
/// The planted state is stored in `metadata.planted` as per-qubit amplitude pairs.
pub fn planted_product_instance(
    n: usize,
    k: usize,
    m: usize,
    seed: u64,
) -> Result<StoqSatInstance> {
    if k == 0 || k > 6 || k > n || m == 0 {
        return Err(Error::Precondition(format!(
            "need 1 <= k <= min(6, n) and M >= 1 (n={n}, k={k}, M={m})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let qubits: Vec<[f64; 2]> = (0..n)
        .map(|_| match rng.gen_range(0..3) {
            0 => [1.0, 0.0],
            1 => [0.0, 1.0],
            _ => {
                let a: f64 = rng.gen_range(0.2..1.0);
                let b: f64 = rng.gen_range(0.2..1.0);
                let s = (a * a + b * b).sqrt();
                [a / s, b / s]
            }
        })
        .collect();
    let dim = 1usize << k;
    let mut projectors = Vec::with_capacity(m);
    for _ in 0..m {
        let support = pick_support(&mut rng, n, k);
        let phi: Vec<f64> = (0..dim)
            .map(|d| {
                support
                    .iter()
                    .enumerate()
                    .map(|(i, &q)| qubits[q][(d >> i) & 1])
                    .product()
            })
            .collect();
        let mut comps = vec![BlockComponent::from_weights(
            k,
            phi.iter()
                .enumerate()
                .filter(|(_, &a)| a > 0.0)
                .map(|(d, &a)| (d as u64, a)),
        )?];
        let mut rest: Vec<u64> = (0..dim as u64)
            .filter(|&d| phi[d as usize] == 0.0)
            .collect();
        rest.shuffle(&mut rng);
        let mut i = 0;
        while i < rest.len() {
            let len = rng.gen_range(1..=(rest.len() - i).min(3));
            if rng.gen_bool(0.5) {
                let w: Vec<(u64, f64)> = rest[i..i + len]
                    .iter()
                    .map(|&x| (x, rng.gen_range(0.1..1.0)))
                    .collect();
                comps.push(BlockComponent::from_weights(k, w)?);
            }
            i += len;
        }
        let p = projector_from_components(dim, &comps)?;
        projectors.push(LocalOperator::new(
            support,
            p.transpose().as_slice().to_vec(),
        )?);
    }
    let mut inst = StoqSatInstance::new(n, None, projectors);
    inst.metadata
        .insert("source".into(), json!("planted-product"));
    inst.metadata.insert("seed".into(), json!(seed));
    inst.metadata.insert("planted".into(), json!(qubits));
    Ok(inst)
}

/// Entry distribution for [`random_stoquastic_hamiltonian`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GridSpec {
    /// Uniform reals.
    Continuous,
    /// Multiples of `2^-bits`.
    Dyadic(u32),
}

/// Random 2-local stoquastic Hamiltonian: `terms` terms on random qubit
/// pairs, diagonal entries in `[-1, 1]`, off-diagonal entries in `[-1, 0]`
/// (about half of them zero).
pub fn random_stoquastic_hamiltonian(
    n: usize,
    terms: usize,
    seed: u64,
    grid: GridSpec,
) -> Result<LhMinInstance> {
    if n < 2 || terms == 0 {
        return Err(Error::Precondition(
            "need n >= 2 and at least one term".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| -> f64 {
        match grid {
            GridSpec::Continuous => rng.gen_range(lo..=hi),
            GridSpec::Dyadic(bits) => {
                let scale = (1u64 << bits) as f64;
                let a = (lo * scale).round() as i64;
                let b = (hi * scale).round() as i64;
                rng.gen_range(a..=b) as f64 / scale
            }
        }
    };
    let mut out = Vec::with_capacity(terms);
    for _ in 0..terms {
        let support = pick_support(&mut rng, n, 2);
        let mut block = vec![0.0; 16];
        for r in 0..4 {
            block[r * 4 + r] = draw(&mut rng, -1.0, 1.0);
            for c in 0..r {
                let v = if rng.gen_bool(0.5) {
                    draw(&mut rng, -1.0, 0.0)
                } else {
                    0.0
                };
                block[r * 4 + c] = v;
                block[c * 4 + r] = v;
            }
        }
        out.push(LocalOperator::new(support, block)?);
    }
    let mut inst = LhMinInstance::new(n, out);
    inst.metadata
        .insert("source".into(), json!("random-stoquastic"));
    inst.metadata.insert("seed".into(), json!(seed));
    Ok(inst)
}
