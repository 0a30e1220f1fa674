//! Brute-force reference implementations, written without reusing any
//! solver code.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shield_core::game::{GameGraph, Rank, NO_MOVE};
use shield_core::random::{random_game, ConditionKind};

pub const INF: u32 = u32::MAX;

fn succs(g: &GameGraph, s: usize, i: usize) -> Vec<usize> {
    let no = g.num_outputs();
    let base = (s * g.num_inputs() + i) * no;
    g.succ[base..base + no]
        .iter()
        .filter(|&&t| t != NO_MOVE)
        .map(|&t| t as usize)
        .collect()
}

fn all_succs(g: &GameGraph, s: usize) -> Vec<usize> {
    (0..g.num_inputs()).flat_map(|i| succs(g, s, i)).collect()
}

fn member(g: &GameGraph) -> Vec<bool> {
    (0..g.num_states()).map(|s| g.condition.set().contains(s)).collect()
}

/// Complement of the environment's attractor to the unsafe states.
pub fn safety_region(g: &GameGraph) -> Vec<bool> {
    let n = g.num_states();
    let safe = member(g);
    let mut bad: Vec<bool> = safe.iter().map(|s| !s).collect();
    loop {
        let mut changed = false;
        for s in 0..n {
            if bad[s] {
                continue;
            }
            let env_wins = (0..g.num_inputs()).any(|i| succs(g, s, i).iter().all(|&t| bad[t]));
            if env_wins {
                bad[s] = true;
                changed = true;
            }
        }
        if !changed {
            return bad.iter().map(|b| !b).collect();
        }
    }
}

/// Value iteration of `r(s) = 1 + max_i min_o r(succ)`.
pub fn minmax_ranks(g: &GameGraph, target: &[bool]) -> Vec<u32> {
    let n = g.num_states();
    let mut r: Vec<u32> = (0..n).map(|s| if target[s] { 0 } else { INF }).collect();
    loop {
        let mut next = r.clone();
        for s in 0..n {
            if target[s] {
                continue;
            }
            let mut worst = 0u32;
            for i in 0..g.num_inputs() {
                let best = succs(g, s, i).iter().map(|&t| r[t]).min().unwrap_or(INF);
                worst = worst.max(best);
            }
            next[s] = if worst == INF { INF } else { worst + 1 };
        }
        if next == r {
            return r;
        }
        r = next;
    }
}

/// Forward breadth-first search from every state separately.
pub fn bfs_ranks(g: &GameGraph, target: &[bool]) -> Vec<u32> {
    let n = g.num_states();
    (0..n)
        .map(|s0| {
            let mut dist = vec![INF; n];
            dist[s0] = 0;
            let mut frontier = vec![s0];
            let mut d = 0;
            loop {
                if frontier.iter().any(|&s| target[s]) {
                    return d;
                }
                let mut next = Vec::new();
                for &s in &frontier {
                    for t in all_succs(g, s) {
                        if dist[t] == INF {
                            dist[t] = d + 1;
                            next.push(t);
                        }
                    }
                }
                if next.is_empty() {
                    return INF;
                }
                frontier = next;
                d += 1;
            }
        })
        .collect()
}

fn cpre(g: &GameGraph, s: usize, set: &[bool]) -> bool {
    (0..g.num_inputs()).all(|i| succs(g, s, i).iter().any(|&t| set[t]))
}

/// `νZ. μY. (F ∩ CPre(Z)) ∪ CPre(Y)`.
pub fn buchi_region(g: &GameGraph) -> Vec<bool> {
    let n = g.num_states();
    let acc = member(g);
    let mut z = vec![true; n];
    loop {
        let mut y = vec![false; n];
        loop {
            let ny: Vec<bool> = (0..n)
                .map(|s| (acc[s] && cpre(g, s, &z)) || cpre(g, s, &y))
                .collect();
            if ny == y {
                break;
            }
            y = ny;
        }
        if y == z {
            return z;
        }
        z = y;
    }
}

/// Transitive closure over present moves: `reach[a][b]` iff a path of
/// length >= 1 leads from `a` to `b`.
pub fn closure(g: &GameGraph) -> Vec<Vec<bool>> {
    let n = g.num_states();
    let mut r = vec![vec![false; n]; n];
    for s in 0..n {
        for t in all_succs(g, s) {
            r[s][t] = true;
        }
    }
    for k in 0..n {
        for a in 0..n {
            if r[a][k] {
                for b in 0..n {
                    if r[k][b] {
                        r[a][b] = true;
                    }
                }
            }
        }
    }
    r
}

/// States that can reach an accepting state lying on a cycle.
pub fn coop_region(g: &GameGraph) -> Vec<bool> {
    let n = g.num_states();
    let acc = member(g);
    let r = closure(g);
    let cyclic: Vec<bool> = (0..n).map(|s| acc[s] && r[s][s]).collect();
    (0..n)
        .map(|s| cyclic[s] || (0..n).any(|t| cyclic[t] && r[s][t]))
        .collect()
}

pub fn ranks_u32(r: &[Rank]) -> Vec<u32> {
    r.iter().map(|x| x.value().unwrap_or(INF)).collect()
}

pub fn bits(set: &fixedbitset::FixedBitSet, n: usize) -> Vec<bool> {
    (0..n).map(|s| set.contains(s)).collect()
}

/// Bit budgets with at most two variables in total.
pub const BIT_SHAPES: [(usize, usize); 5] = [(0, 1), (1, 0), (1, 1), (0, 2), (2, 0)];

/// A random game of at most 8 states; some moves are removed, but every
/// (state, input) keeps at least one output.
pub fn sample_game(seed: u64, kind: ConditionKind) -> GameGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=8);
    let (ib, ob) = BIT_SHAPES[rng.gen_range(0..BIT_SHAPES.len())];
    let density = rng.gen_range(0.1..0.9);
    let mut g = random_game(&mut rng, n, ib, ob, kind, density);
    if rng.gen_bool(0.5) {
        let no = g.num_outputs();
        for row in g.succ.chunks_mut(no) {
            let keep = rng.gen_range(0..no);
            for (o, t) in row.iter_mut().enumerate() {
                if o != keep && rng.gen_bool(0.3) {
                    *t = NO_MOVE;
                }
            }
        }
    }
    g
}
