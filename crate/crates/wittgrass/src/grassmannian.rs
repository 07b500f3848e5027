//! Enumeration and counting of submodules of `R^n`, `R = O/p^c`, organized
//! by the elementary divisor type of the quotient.
//!
//! Every submodule has a unique canonical form ([`LatticeCanon`]) with a
//! *pivot profile*: the strictly increasing pivot columns `J` and their
//! pivot valuations `E`. The colength (length of `R^n/N`) is determined by
//! the profile alone — `sum E + (n - |J|) c` — so colength-filtered
//! enumeration prunes whole profiles up front.
//!
//! Within one profile, forms are enumerated bottom-up. Suppose the rows
//! below position `i` span `N'`. A tail `t` (supported strictly right of
//! the pivot column `j_i`, pivot-column entries reduced) completes row `i
//! = p^(e_i) e_(j_i) + t` into a valid canonical form iff
//! `p^(c - e_i) t in N'` — the closure condition — and two tails give the
//! same submodule iff they differ by an element of `N'`. The valid tails
//! are therefore the cosets of `N'` inside
//! `(N' : p^(c - e_i))` restricted to columns `> j_i`, and each coset's
//! canonical representative is exactly the reduced row. Naive
//! "independent free entries" parametrizations are wrong for `n >= 3`:
//! closure couples entries across rows, e.g. rows `(p, x, y), (0, p, z)`
//! in `(O/p^2)^3` force `p y = x z`.
//!
//! Everything is deterministic: profiles are generated in a fixed order and
//! final lists are sorted by the canonical forms' serialization, so the
//! output is independent of thread count.

use crate::lattice::{coset_transversal, LatticeCanon};
use crate::partitions::{dominates, Partition};
use crate::ring::GaloisRingCtx;
use crate::{Result, WorkBound};
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

/// All pivot profiles `(J, E)` for ambient rank `n` at precision `c`, in a
/// fixed deterministic order: by subset `J` in lexicographic order of the
/// column list, then valuation vectors `E` odometer-style.
pub fn pivot_profiles(n: usize, c: u32) -> Vec<(Vec<usize>, Vec<u32>)> {
    let mut subsets: Vec<Vec<usize>> = Vec::new();
    // enumerate subsets of {0..n-1} in lex order of their element lists
    fn rec(start: usize, n: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        out.push(cur.clone());
        for j in start..n {
            cur.push(j);
            rec(j + 1, n, cur, out);
            cur.pop();
        }
    }
    rec(0, n, &mut Vec::new(), &mut subsets);
    let mut out = Vec::new();
    for js in subsets {
        let k = js.len();
        let mut es = vec![0u32; k];
        loop {
            out.push((js.clone(), es.clone()));
            // odometer over valuations 0..c-1
            let mut idx = 0;
            loop {
                if idx == k {
                    break;
                }
                es[idx] += 1;
                if es[idx] < c {
                    break;
                }
                es[idx] = 0;
                idx += 1;
            }
            if idx == k {
                break;
            }
        }
        if k == 0 {
            // the loop above pushed the single empty profile and then
            // terminated; nothing further
        }
    }
    out
}

/// Colength of every submodule with the given profile.
pub fn profile_colength(n: usize, c: u32, js: &[usize], es: &[u32]) -> u64 {
    (n - js.len()) as u64 * c as u64 + es.iter().map(|&e| e as u64).sum::<u64>()
}

fn enumerate_profile(
    ctx: &Arc<GaloisRingCtx>,
    n: usize,
    js: &[usize],
    es: &[u32],
    bound: &WorkBound,
    counter: &AtomicU64,
) -> Result<Vec<LatticeCanon>> {
    let c = ctx.precision();
    let mut states: Vec<LatticeCanon> = vec![LatticeCanon::zero_module(ctx, n)];
    for i in (0..js.len()).rev() {
        let mut next = Vec::new();
        for nmod in &states {
            let colon = nmod.colon_p_pow(c - es[i])?;
            let tails = colon.tail_submodule(js[i] + 1)?;
            let reps = coset_transversal(&tails, nmod)?;
            for t in reps {
                let seen = counter.fetch_add(1, Ordering::Relaxed) + 1;
                bound.check(seen as u128, "submodule enumeration")?;
                let mut row = t;
                row[js[i]] = ctx.mul_p_pow(&ctx.one(), es[i])?;
                let mut gens = vec![row];
                gens.extend(nmod.rows().iter().cloned());
                let newmod = LatticeCanon::from_generators(ctx, n, gens)?;
                debug_assert_eq!(newmod.pivot_cols(), &js[i..]);
                debug_assert_eq!(newmod.pivot_vals(), &es[i..]);
                next.push(newmod);
            }
        }
        states = next;
    }
    Ok(states)
}

fn enumerate_profiles_filtered(
    ctx: &Arc<GaloisRingCtx>,
    n: usize,
    keep: impl Fn(&[usize], &[u32]) -> bool + Sync,
    bound: &WorkBound,
) -> Result<Vec<LatticeCanon>> {
    let c = ctx.precision();
    let profiles: Vec<_> = pivot_profiles(n, c)
        .into_iter()
        .filter(|(js, es)| keep(js, es))
        .collect();
    let counter = AtomicU64::new(0);
    let chunks: Vec<Vec<LatticeCanon>> = profiles
        .par_iter()
        .map(|(js, es)| enumerate_profile(ctx, n, js, es, bound, &counter))
        .collect::<Result<Vec<_>>>()?;
    let mut all: Vec<LatticeCanon> = chunks.into_iter().flatten().collect();
    all.sort();
    Ok(all)
}

/// Every submodule of `R^n`, sorted canonically.
pub fn enumerate_all(
    ctx: &Arc<GaloisRingCtx>,
    n: usize,
    bound: &WorkBound,
) -> Result<Vec<LatticeCanon>> {
    enumerate_profiles_filtered(ctx, n, |_, _| true, bound)
}

/// Every submodule of `R^n` with `length(R^n / N) = colength`, sorted.
pub fn enumerate_colength(
    ctx: &Arc<GaloisRingCtx>,
    n: usize,
    colength: u64,
    bound: &WorkBound,
) -> Result<Vec<LatticeCanon>> {
    let c = ctx.precision();
    enumerate_profiles_filtered(
        ctx,
        n,
        |js, es| profile_colength(n, c, js, es) == colength,
        bound,
    )
}

/// Every submodule whose quotient has elementary divisor type exactly
/// `lambda`, sorted.
pub fn enumerate_cotype(
    ctx: &Arc<GaloisRingCtx>,
    n: usize,
    lambda: &Partition,
    bound: &WorkBound,
) -> Result<Vec<LatticeCanon>> {
    if !lambda.fits_in_box(n, ctx.precision()) {
        return Ok(vec![]);
    }
    let per_colength = enumerate_colength(ctx, n, lambda.size(), bound)?;
    let mut out = Vec::new();
    for lat in per_colength {
        if &lat.cokernel_type()? == lambda {
            out.push(lat);
        }
    }
    Ok(out)
}

/// The number of submodules of quotient type exactly `lambda`.
pub fn count_cotype(
    ctx: &Arc<GaloisRingCtx>,
    n: usize,
    lambda: &Partition,
    bound: &WorkBound,
) -> Result<u128> {
    Ok(enumerate_cotype(ctx, n, lambda, bound)?.len() as u128)
}

/// The number of submodules whose quotient type is dominated by `lambda`
/// (same size, every prefix sum at most that of `lambda`).
pub fn count_cotype_leq(
    ctx: &Arc<GaloisRingCtx>,
    n: usize,
    lambda: &Partition,
    bound: &WorkBound,
) -> Result<u128> {
    if !lambda.fits_in_box(n, ctx.precision()) {
        // quotient types dominated by lambda could still fit even if lambda
        // itself does not; enumerate by colength and compare
    }
    let per_colength = enumerate_colength(ctx, n, lambda.size(), bound)?;
    let mut count: u128 = 0;
    for lat in per_colength {
        if dominates(lambda, &lat.cokernel_type()?) {
            count += 1;
        }
    }
    Ok(count)
}

/// Full census: quotient type -> number of submodules, over all of `R^n`.
pub fn census(
    ctx: &Arc<GaloisRingCtx>,
    n: usize,
    bound: &WorkBound,
) -> Result<BTreeMap<Partition, u128>> {
    let all = enumerate_all(ctx, n, bound)?;
    let mut out: BTreeMap<Partition, u128> = BTreeMap::new();
    for lat in all {
        *out.entry(lat.cokernel_type()?).or_insert(0) += 1;
    }
    Ok(out)
}

/// Total number of submodules of `R^n`.
pub fn count_all(ctx: &Arc<GaloisRingCtx>, n: usize, bound: &WorkBound) -> Result<u128> {
    Ok(enumerate_all(ctx, n, bound)?.len() as u128)
}
