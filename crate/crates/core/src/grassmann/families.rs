use serde::{Deserialize, Serialize};

use super::{join, meet, PlaneSet, Space};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FamilyKind {
    /// All planes containing `center`, a (k-1)-subspace.
    Star { center: u32 },
    /// All planes inside `carrier`, a (k+1)-subspace.
    Top { carrier: u32 },
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacentFamily {
    pub members: PlaneSet,
    pub kind: FamilyKind,
}

type Bits = Vec<u64>;

fn bit(b: &Bits, i: usize) -> bool {
    b[i / 64] >> (i % 64) & 1 == 1
}

fn set_bit(b: &mut Bits, i: usize) {
    b[i / 64] |= 1 << (i % 64);
}

fn and(a: &Bits, b: &Bits) -> Bits {
    a.iter().zip(b).map(|(x, y)| x & y).collect()
}

fn count(b: &Bits) -> u32 {
    b.iter().map(|w| w.count_ones()).sum()
}

fn ones(b: &Bits) -> Vec<usize> {
    let mut out = Vec::new();
    for (wi, &w) in b.iter().enumerate() {
        let mut w = w;
        while w != 0 {
            let t = w.trailing_zeros() as usize;
            out.push(wi * 64 + t);
            w &= w - 1;
        }
    }
    out
}

struct Bk<'a> {
    adj: &'a [Bits],
    out: Vec<Vec<u32>>,
}

impl Bk<'_> {
    // Bron-Kerbosch with Tomita pivoting.
    fn run(&mut self, r: &mut Vec<u32>, p: Bits, mut x: Bits) {
        if count(&p) == 0 {
            if count(&x) == 0 {
                let mut c = r.clone();
                c.sort_unstable();
                self.out.push(c);
            }
            return;
        }
        let mut best = usize::MAX;
        let mut best_deg = 0;
        for u in ones(&p).into_iter().chain(ones(&x)) {
            let d = count(&and(&p, &self.adj[u]));
            if best == usize::MAX || d > best_deg {
                best = u;
                best_deg = d;
            }
        }
        let mut p = p;
        let cand: Vec<usize> = ones(&p)
            .into_iter()
            .filter(|&v| !bit(&self.adj[best], v))
            .collect();
        for v in cand {
            r.push(v as u32);
            self.run(r, and(&p, &self.adj[v]), and(&x, &self.adj[v]));
            r.pop();
            p[v / 64] &= !(1 << (v % 64));
            set_bit(&mut x, v);
        }
    }
}

/// Maximal cliques of the adjacency graph on G_k, each tagged as a star or a top.
pub fn maximal_adjacent_families(space: &Space, k: usize) -> Result<Vec<AdjacentFamily>> {
    let n = space.n();
    if !(1 < k && k + 1 < n) {
        return Err(Error::Precondition(format!("need 1 < k < n-1, got k = {k}, n = {n}")));
    }
    let lat = space.lattice()?;
    let size = space.size(k);
    let words = size.div_ceil(64);
    let mut adj: Vec<Bits> = vec![vec![0; words]; size];
    for a in 0..size {
        for b in a + 1..size {
            if lat.distance(k, a as u32, b as u32) == 1 {
                set_bit(&mut adj[a], b);
                set_bit(&mut adj[b], a);
            }
        }
    }
    let mut all = vec![0u64; words];
    for i in 0..size {
        set_bit(&mut all, i);
    }
    let mut bk = Bk {
        adj: &adj,
        out: Vec::new(),
    };
    bk.run(&mut Vec::new(), all, vec![0; words]);
    let mut cliques = bk.out;
    cliques.sort();
    let stars = space.incidence(k - 1, k)?;
    let tops = space.incidence(k + 1, k)?;
    cliques
        .into_iter()
        .map(|members| {
            let kind = if members.len() < 2 {
                FamilyKind::Other
            } else {
                let a = space.subspace(k, members[0])?;
                let b = space.subspace(k, members[1])?;
                let c = space.index_of(&meet(&a, &b)?)?;
                let t = space.index_of(&join(&a, &b)?)?;
                if stars[c as usize] == members {
                    FamilyKind::Star { center: c }
                } else if tops[t as usize] == members {
                    FamilyKind::Top { carrier: t }
                } else {
                    FamilyKind::Other
                }
            };
            Ok(AdjacentFamily {
                members: PlaneSet::from_sorted(space, k, members),
                kind,
            })
        })
        .collect()
}
