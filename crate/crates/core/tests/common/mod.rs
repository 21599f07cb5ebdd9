#![allow(dead_code)]

use aignet::aig::aiger::{AndGate, LiteralAig};
use aignet::aig::Aig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A uniformly random topological order, as `perm[old] = new`.
pub fn random_topo_perm(aig: &Aig, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = aig.len();
    let mut pending: Vec<usize> = aig.nodes.iter().map(|x| x.fanins.len()).collect();
    let mut users = vec![Vec::new(); n];
    for (u, v) in aig.edges() {
        users[u].push(v);
    }
    let mut ready: Vec<usize> = (0..n).filter(|&v| pending[v] == 0).collect();
    let mut perm = vec![0; n];
    let mut next = 0;
    while !ready.is_empty() {
        let v = ready.swap_remove(rng.gen_range(0..ready.len()));
        perm[v] = next;
        next += 1;
        for &u in &users[v] {
            pending[u] -= 1;
            if pending[u] == 0 {
                ready.push(u);
            }
        }
    }
    perm
}

/// An AIGER-level circuit with arbitrary complemented edges and constants.
pub fn random_literal_aig(inputs: usize, ands: usize, outputs: usize, seed: u64) -> LiteralAig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pick = |upto: u64, rng: &mut ChaCha8Rng| {
        // occasionally reference the constant
        let var = if rng.gen_bool(0.05) { 0 } else { rng.gen_range(1..=upto) };
        2 * var + rng.gen_range(0..2)
    };
    let mut gates = Vec::new();
    for k in 0..ands as u64 {
        let lhs = 2 * (inputs as u64 + 1 + k);
        let upto = inputs as u64 + k;
        gates.push(AndGate { lhs, rhs0: pick(upto, &mut rng), rhs1: pick(upto, &mut rng) });
    }
    let max_var = (inputs + ands) as u64;
    LiteralAig {
        max_var,
        inputs: (1..=inputs as u64).map(|v| 2 * v).collect(),
        outputs: (0..outputs).map(|_| pick(max_var, &mut rng)).collect(),
        ands: gates,
        trailer: Vec::new(),
    }
}

/// Literal-level interpreter: value of every variable under `assignment`.
pub fn eval_literal_aig(lit: &LiteralAig, assignment: &[bool]) -> Vec<bool> {
    let mut value = vec![false; lit.max_var as usize + 1];
    for (i, &l) in lit.inputs.iter().enumerate() {
        value[(l / 2) as usize] = assignment[i];
    }
    let get = |value: &[bool], l: u64| value[(l / 2) as usize] ^ (l & 1 == 1);
    for g in &lit.ands {
        value[(g.lhs / 2) as usize] = get(&value, g.rhs0) && get(&value, g.rhs1);
    }
    value
}

pub fn literal_value(value: &[bool], l: u64) -> bool {
    value[(l / 2) as usize] ^ (l & 1 == 1)
}
