//! Exact rationals as strings, set partitions over [d] as bitmasks, and a
//! seeded rng for reproducible perturbations and test data.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    BigRational::from(BigInt::from(n))
}

/// Parse "p/q" or "p".
pub fn parse_q(s: &str) -> Result<Q> {
    let bad = || Error::BadInput(format!("not a rational: {s:?}"));
    let mut parts = s.splitn(2, '/');
    let num: BigInt = parts.next().ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
    match parts.next() {
        None => Ok(BigRational::from(num)),
        Some(d) => {
            let den: BigInt = d.trim().parse().map_err(|_| bad())?;
            if den.is_zero() {
                return Err(bad());
            }
            Ok(BigRational::new(num, den))
        }
    }
}

pub fn format_q(x: &Q) -> String {
    if x.denom().is_one() {
        format!("{}", x.numer())
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn sign(x: &Q) -> i8 {
    if x.is_zero() {
        0
    } else if x.is_positive() {
        1
    } else {
        -1
    }
}

/// A partition of {0..d-1}; blocks are bitmasks, sorted by lowest set bit.
pub type Partition = Vec<u32>;

pub fn normalize_partition(mut blocks: Partition) -> Partition {
    blocks.retain(|&b| b != 0);
    blocks.sort_by_key(|b| b.trailing_zeros());
    blocks
}

pub fn discrete_partition(d: usize) -> Partition {
    (0..d).map(|i| 1u32 << i).collect()
}

pub fn full_mask(d: usize) -> u32 {
    if d == 32 {
        u32::MAX
    } else {
        (1u32 << d) - 1
    }
}

pub fn is_partition_of(p: &Partition, d: usize) -> bool {
    let mut seen = 0u32;
    for &b in p {
        if b == 0 || (seen & b) != 0 {
            return false;
        }
        seen |= b;
    }
    seen == full_mask(d)
}

/// Does every block of `fine` sit inside one block of `coarse`?
pub fn refines(fine: &Partition, coarse: &Partition) -> bool {
    fine.iter().all(|&f| coarse.iter().any(|&c| f & c == f))
}

/// Block of `p` containing element `i`.
pub fn block_of(p: &Partition, i: usize) -> u32 {
    let bit = 1u32 << i;
    p.iter().copied().find(|&b| b & bit != 0).unwrap_or(0)
}

/// Finest common coarsening (join) of two partitions of the same ground set.
pub fn join_partitions(a: &Partition, b: &Partition) -> Partition {
    let mut blocks: Vec<u32> = a.clone();
    blocks.extend(b.iter().copied());
    loop {
        let mut merged = false;
        'outer: for i in 0..blocks.len() {
            for j in i + 1..blocks.len() {
                if blocks[i] & blocks[j] != 0 {
                    blocks[i] |= blocks[j];
                    blocks.remove(j);
                    merged = true;
                    break 'outer;
                }
            }
        }
        if !merged {
            break;
        }
    }
    normalize_partition(blocks)
}

/// All partitions of {0..d-1}, in a fixed deterministic order.
pub fn all_partitions(d: usize) -> Vec<Partition> {
    // restricted growth strings
    let mut out = Vec::new();
    let mut rgs = vec![0usize; d];
    loop {
        let k = rgs.iter().copied().max().map_or(0, |m| m + 1);
        let mut blocks = vec![0u32; k.max(1)];
        if d == 0 {
            out.push(Vec::new());
        } else {
            for (i, &c) in rgs.iter().enumerate() {
                blocks[c] |= 1 << i;
            }
            out.push(normalize_partition(blocks));
        }
        // next restricted growth string
        let mut i = d;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if i == 0 {
                return out;
            }
            let prefix_max = rgs[..i].iter().copied().max().unwrap();
            if rgs[i] <= prefix_max {
                rgs[i] += 1;
                for r in rgs[i + 1..].iter_mut() {
                    *r = 0;
                }
                break;
            }
        }
    }
}

/// All partitions of the set given by `mask` (blocks stay inside `mask`).
pub fn partitions_of_mask(mask: u32) -> Vec<Partition> {
    let elems: Vec<usize> = (0..32).filter(|&i| mask & (1 << i) != 0).collect();
    all_partitions(elems.len())
        .into_iter()
        .map(|p| {
            normalize_partition(
                p.iter()
                    .map(|&b| {
                        let mut m = 0u32;
                        for (j, &e) in elems.iter().enumerate() {
                            if b & (1 << j) != 0 {
                                m |= 1 << e;
                            }
                        }
                        m
                    })
                    .collect(),
            )
        })
        .collect()
}

/// Partitions refining `p` (including `p` itself).
pub fn refinements(p: &Partition) -> Vec<Partition> {
    let mut out: Vec<Partition> = vec![Vec::new()];
    for &b in p {
        let subs = partitions_of_mask(b);
        let mut next = Vec::with_capacity(out.len() * subs.len());
        for pre in &out {
            for s in &subs {
                let mut q = pre.clone();
                q.extend(s.iter().copied());
                next.push(q);
            }
        }
        out = next;
    }
    out.into_iter().map(normalize_partition).collect()
}

/// Partitions coarsened by `p` (all partitions `q` with `p` refining `q`).
pub fn coarsenings(p: &Partition, d: usize) -> Vec<Partition> {
    all_partitions(d)
        .into_iter()
        .filter(|c| refines(p, c))
        .collect()
}

/// Apply a permutation of the copies to a partition.
pub fn perm_partition(p: &Partition, perm: &[usize]) -> Partition {
    normalize_partition(
        p.iter()
            .map(|&b| {
                let mut m = 0u32;
                for (i, &pi) in perm.iter().enumerate() {
                    if b & (1 << i) != 0 {
                        m |= 1 << pi;
                    }
                }
                m
            })
            .collect(),
    )
}

/// All permutations of 0..d in a deterministic order.
pub fn all_perms(d: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..d).collect();
    fn rec(k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == cur.len() {
            out.push(cur.clone());
            return;
        }
        for i in k..cur.len() {
            cur.swap(k, i);
            rec(k + 1, cur, out);
            cur.swap(k, i);
        }
    }
    rec(0, &mut cur, &mut out);
    out.sort();
    out
}

/// A canonical comparison key for a partition: block masks sorted ascending.
pub fn partition_sort_key(p: &Partition) -> Vec<u32> {
    let mut v = p.clone();
    v.sort();
    v
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random positive rational with small numerator and denominator.
pub fn random_positive_q(rng: &mut ChaCha8Rng) -> Q {
    let num = rng.gen_range(1..=48i64);
    let den = rng.gen_range(1..=12i64);
    q(num, den)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_round_trip() {
        let x = parse_q("3/2").unwrap();
        assert_eq!(format_q(&x), "3/2");
        assert_eq!(format_q(&parse_q("4/2").unwrap()), "2");
        assert_eq!(format_q(&parse_q("-7").unwrap()), "-7");
        assert!(parse_q("1/0").is_err());
        assert!(parse_q("x").is_err());
    }

    #[test]
    fn partition_counts_are_bell_numbers() {
        assert_eq!(all_partitions(1).len(), 1);
        assert_eq!(all_partitions(2).len(), 2);
        assert_eq!(all_partitions(3).len(), 5);
        assert_eq!(all_partitions(4).len(), 15);
        assert_eq!(all_partitions(5).len(), 52);
        for p in all_partitions(4) {
            assert!(is_partition_of(&p, 4));
        }
    }

    #[test]
    fn join_and_refine() {
        let a = vec![0b011, 0b100]; // {12|3}
        let b = vec![0b001, 0b110]; // {1|23}
        let j = join_partitions(&a, &b);
        assert_eq!(j, vec![0b111]);
        assert!(refines(&discrete_partition(3), &a));
        assert!(!refines(&a, &b));
        let refs = refinements(&a);
        assert_eq!(refs.len(), 2); // {12|3}, {1|2|3}
        let coars = coarsenings(&a, 3);
        assert_eq!(coars.len(), 2); // {12|3}, {123}
    }
}
