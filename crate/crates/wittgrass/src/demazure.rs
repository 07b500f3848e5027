//! Chains of lattices adapted to a partition, and their fibers over
//! submodule endpoints.
//!
//! Fix a partition `lambda` with at most `n` parts and work in the window
//! `R = O/p^c` with `c = lambda_1`. A *chain adapted to `lambda`* is a
//! descending flag
//!
//! ```text
//! R^n = E_0 >= E_1 >= ... >= E_L,   L = lambda_1,
//! p E_i <= E_{i+1} <= E_i,   dim_{F_q}(E_i / E_{i+1}) = n_lambda(i),
//! ```
//!
//! so each step chooses a subspace of the n-dimensional `F_q`-vector space
//! `E_i / p E_i` of codimension `n_lambda(i)`. The number of chains is the
//! product of Gaussian binomial coefficients `prod_i binom[n, n_lambda(i)]_q`,
//! and every endpoint `E_L` has colength `|lambda|`.
//!
//! The *fiber* over a submodule `M` of colength `|lambda|` is the set of
//! chains ending at `M`. It is nonempty exactly when the quotient type of
//! `M` is dominated by `lambda`, and is a single chain — `E_i = p^i E_0 + M`
//! — exactly when the type equals `lambda`.

use crate::lattice::LatticeCanon;
use crate::partitions::Partition;
use crate::ring::{GaloisRingCtx, RingElem};
use crate::{Error, Result, WorkBound};
use std::sync::Arc;

/// Gaussian binomial `binom[n, k]_q`, by the `q`-Pascal recursion
/// `binom[n,k] = binom[n-1,k-1] + q^k binom[n-1,k]` in checked `u128`.
pub fn gauss_binomial(n: u64, k: u64, q: u64) -> Result<u128> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k); // symmetry keeps the table small
    let mut prev: Vec<u128> = vec![1]; // row n' = 0
    for np in 1..=n {
        let kmax = k.min(np);
        let mut row: Vec<u128> = Vec::with_capacity(kmax as usize + 1);
        row.push(1);
        for kk in 1..=kmax {
            let a = if kk <= np - 1 {
                *prev.get(kk as usize).unwrap_or(&0)
            } else {
                0
            };
            let b = *prev.get(kk as usize - 1).unwrap_or(&0);
            // row[kk] = b + q^kk * a
            let mut qk: u128 = 1;
            for _ in 0..kk {
                qk = qk
                    .checked_mul(q as u128)
                    .ok_or_else(|| Error::Overflow("q-power in Gaussian binomial".into()))?;
            }
            let t = qk
                .checked_mul(a)
                .and_then(|x| x.checked_add(b))
                .ok_or_else(|| Error::Overflow("Gaussian binomial".into()))?;
            row.push(t);
        }
        prev = row;
    }
    Ok(*prev.get(k as usize).unwrap_or(&0))
}

/// A chain `E_1 >= ... >= E_L` (the ambient `E_0 = R^n` is implicit).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Chain {
    pub steps: Vec<LatticeCanon>,
}

impl Chain {
    /// The endpoint `E_L`; `None` for the empty chain.
    pub fn endpoint(&self) -> Option<&LatticeCanon> {
        self.steps.last()
    }
}

/// All `dim`-dimensional subspaces of `F_q^n` over the residue field
/// `field`, as lists of reduced-echelon basis rows, in a deterministic
/// order (pivot columns lexicographic, then free entries odometer-style).
pub fn subspaces_rref(
    field: &Arc<GaloisRingCtx>,
    n: usize,
    dim: usize,
) -> Result<Vec<Vec<Vec<RingElem>>>> {
    if field.precision() != 1 {
        return Err(Error::BadParams(
            "subspace enumeration works over a residue field context".into(),
        ));
    }
    if dim > n {
        return Ok(vec![]);
    }
    if dim == 0 {
        return Ok(vec![vec![]]);
    }
    let elems = field.all_elements();
    let mut out = Vec::new();
    // pivot column combinations in lexicographic order
    let mut pivots: Vec<usize> = (0..dim).collect();
    loop {
        // free positions: row i, non-pivot columns right of pivots[i]
        let mut free_pos: Vec<(usize, usize)> = Vec::new();
        for (i, &pc) in pivots.iter().enumerate() {
            for j in pc + 1..n {
                if !pivots.contains(&j) {
                    free_pos.push((i, j));
                }
            }
        }
        let mut indices = vec![0usize; free_pos.len()];
        loop {
            let mut rows: Vec<Vec<RingElem>> = (0..dim)
                .map(|i| {
                    let mut r = vec![field.zero(); n];
                    r[pivots[i]] = field.one();
                    r
                })
                .collect();
            for (slot, &(i, j)) in free_pos.iter().enumerate() {
                rows[i][j] = elems[indices[slot]].clone();
            }
            out.push(rows);
            // odometer over free entries
            let mut t = 0;
            loop {
                if t == indices.len() {
                    break;
                }
                indices[t] += 1;
                if indices[t] < elems.len() {
                    break;
                }
                indices[t] = 0;
                t += 1;
            }
            if t == indices.len() {
                break;
            }
        }
        // next pivot combination
        let mut i = dim;
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            if pivots[i] + (dim - i) <= n - 1 {
                pivots[i] += 1;
                for t in i + 1..dim {
                    pivots[t] = pivots[t - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Check the defining conditions of a chain adapted to `lambda`.
pub fn is_valid_chain(
    ctx: &Arc<GaloisRingCtx>,
    n: usize,
    lambda: &Partition,
    chain: &Chain,
) -> Result<bool> {
    let l = lambda.max_part() as usize;
    if chain.steps.len() != l {
        return Ok(false);
    }
    let mut prev = LatticeCanon::full(ctx, n);
    for (i, e) in chain.steps.iter().enumerate() {
        if !prev.contains_module(e)? {
            return Ok(false);
        }
        if !e.contains_module(&prev.scale_p_pow(1)?)? {
            return Ok(false);
        }
        let drop = e.colength() - prev.colength();
        if drop != lambda.n_at(i as u32) as u64 {
            return Ok(false);
        }
        prev = e.clone();
    }
    Ok(true)
}

/// Enumerate every chain adapted to `lambda` in `R^n`. Requires
/// `ctx.precision() == lambda_1` (for the empty partition the context is
/// unused and the single empty chain is returned).
pub fn enumerate_chains(
    ctx: &Arc<GaloisRingCtx>,
    n: usize,
    lambda: &Partition,
    bound: &WorkBound,
) -> Result<Vec<Chain>> {
    if lambda.is_empty() {
        return Ok(vec![Chain { steps: vec![] }]);
    }
    if lambda.len() > n {
        return Err(Error::Shape(format!(
            "partition with {} parts in ambient rank {}",
            lambda.len(),
            n
        )));
    }
    if ctx.precision() != lambda.max_part() {
        return Err(Error::BadParams(format!(
            "chains for {lambda} need window precision {}, context has {}",
            lambda.max_part(),
            ctx.precision()
        )));
    }
    let field = ctx.residue_field();
    let l = lambda.max_part();
    // predicted count guards the work up front
    let mut predicted: u128 = 1;
    for i in 0..l {
        let g = gauss_binomial(n as u64, lambda.n_at(i) as u64, ctx.q())?;
        predicted = predicted
            .checked_mul(g)
            .ok_or_else(|| Error::Overflow("chain count".into()))?;
    }
    bound.check(predicted, "chain enumeration")?;
    let mut partial: Vec<Vec<LatticeCanon>> = vec![vec![]];
    for i in 0..l {
        let codim = lambda.n_at(i);
        let sub_dim = n - codim;
        let subspaces = subspaces_rref(&field, n, sub_dim)?;
        let mut next: Vec<Vec<LatticeCanon>> = Vec::new();
        for pref in &partial {
            let prev = match pref.last() {
                Some(e) => e.clone(),
                None => LatticeCanon::full(ctx, n),
            };
            let basis = prev.window_basis_matrix(ctx)?;
            let p_prev = prev.scale_p_pow(1)?;
            for w in &subspaces {
                // pull back the subspace through the basis of prev
                let mut gens: Vec<Vec<RingElem>> = Vec::with_capacity(w.len() + p_prev.rows().len());
                for wrow in w {
                    let mut g = vec![ctx.zero(); n];
                    for (j, coeff) in wrow.iter().enumerate() {
                        if coeff.is_zero() {
                            continue;
                        }
                        let lift = ctx.lift_residue(coeff)?;
                        for t in 0..n {
                            let add = ctx.mul(&lift, basis.get(j, t))?;
                            g[t] = ctx.add(&g[t], &add)?;
                        }
                    }
                    gens.push(g);
                }
                gens.extend(p_prev.rows().iter().cloned());
                let e_next = LatticeCanon::from_generators(ctx, n, gens)?;
                debug_assert_eq!(
                    e_next.colength(),
                    prev.colength() + codim as u64,
                    "codimension step mismatch"
                );
                let mut nc = pref.clone();
                nc.push(e_next);
                next.push(nc);
            }
        }
        partial = next;
    }
    let mut chains: Vec<Chain> = partial.into_iter().map(|steps| Chain { steps }).collect();
    chains.sort();
    Ok(chains)
}

/// The number of chains adapted to `lambda`, by the product formula.
pub fn chain_count(n: usize, lambda: &Partition, q: u64) -> Result<u128> {
    let mut acc: u128 = 1;
    for i in 0..lambda.max_part() {
        let g = gauss_binomial(n as u64, lambda.n_at(i) as u64, q)?;
        acc = acc
            .checked_mul(g)
            .ok_or_else(|| Error::Overflow("chain count".into()))?;
    }
    Ok(acc)
}

/// All chains adapted to `lambda` ending at `m`.
pub fn fiber_over(
    ctx: &Arc<GaloisRingCtx>,
    n: usize,
    lambda: &Partition,
    m: &LatticeCanon,
    bound: &WorkBound,
) -> Result<Vec<Chain>> {
    let all = enumerate_chains(ctx, n, lambda, bound)?;
    if lambda.is_empty() {
        let full = LatticeCanon::full(ctx, n);
        return Ok(if *m == full { all } else { vec![] });
    }
    Ok(all
        .into_iter()
        .filter(|c| c.endpoint() == Some(m))
        .collect())
}

/// The canonical chain `E_i = p^i E_0 + M` through a submodule `M`. It is
/// adapted to `lambda` exactly when the quotient type of `M` is `lambda`.
pub fn standard_chain(
    ctx: &Arc<GaloisRingCtx>,
    n: usize,
    lambda: &Partition,
    m: &LatticeCanon,
) -> Result<Chain> {
    let l = lambda.max_part();
    let full = LatticeCanon::full(ctx, n);
    let mut steps = Vec::with_capacity(l as usize);
    for i in 1..=l {
        steps.push(full.scale_p_pow(i)?.add(m)?);
    }
    Ok(Chain { steps })
}

// ---------------------------------------------------------------------------
// Stratum inequalities on a quotient module
//
// Fix a torsion module `Q = O/p^{mu_1} + ... + O/p^{mu_r}` (`mu = lambda_q`,
// weakly decreasing) with its distinguished generators, and a target type
// `lambda`. A subspace `F` of the `F_q`-vector space `Q/pQ` (the first-step
// datum of a chain refining `Q`) lands in the stratum of `lambda` exactly
// when it meets the coordinate filtration
//
// ```text
// F^m = span{ e_j : mu_j <= m }   (the socle-depth filtration of Q/pQ)
// ```
//
// in at least the expected dimensions:
//
// ```text
// dim(F /\ F^m) >= a_m,   a_m = r - n_lambda(0)
//                               + sum_{i >= m+1} (n_mu(i) - n_lambda(i)).
// ```
//
// When `|lambda| = |mu|` and `dim F = r - n_lambda(0)` this system of
// inequalities is equivalent to the dominance `lambda - 1 >= type(Fil^1 Q)`,
// where `Fil^1 Q` is the submodule of `Q` generated by lifts of `F` together
// with `pQ`, and `lambda - 1` lowers every positive part by one. The
// equivalence is certified by exhaustive sweep in the test suite.
// ---------------------------------------------------------------------------

/// The filtration subspace `F^m = span{ e_j : mu_j <= m }` of `F_q^r`.
pub fn socle_filtration_step(
    field: &Arc<GaloisRingCtx>,
    lambda_q: &Partition,
    m: u32,
) -> Result<LatticeCanon> {
    if field.precision() != 1 {
        return Err(Error::BadParams(
            "filtration subspaces live over a residue field context".into(),
        ));
    }
    let r = lambda_q.len();
    let mut gens = Vec::new();
    for j in 1..=r {
        if lambda_q.part(j) <= m {
            let mut e = vec![field.zero(); r];
            e[j - 1] = field.one();
            gens.push(e);
        }
    }
    LatticeCanon::from_generators(field, r, gens)
}

/// The expected-intersection lower bound `a_m` (may be negative, in which
/// case the inequality at `m` is vacuous).
pub fn stratum_bound(lambda_q: &Partition, lambda: &Partition, m: u32) -> i64 {
    let r = lambda_q.len() as i64;
    let mut a = r - lambda.n_at(0) as i64;
    let top = lambda_q.max_part().max(lambda.max_part());
    for i in m + 1..top.max(m + 1) {
        a += lambda_q.n_at(i) as i64 - lambda.n_at(i) as i64;
    }
    a
}

/// Evaluate the stratum inequalities `dim(F /\ F^m) >= a_m` for all `m`.
/// `f_rows` spans `F` inside `F_q^r` with `r = lambda_q.len()`.
pub fn quot_stratum_predicate(
    field: &Arc<GaloisRingCtx>,
    lambda_q: &Partition,
    lambda: &Partition,
    f_rows: &[Vec<RingElem>],
) -> Result<bool> {
    if field.precision() != 1 {
        return Err(Error::BadParams(
            "stratum predicate works over a residue field context".into(),
        ));
    }
    let r = lambda_q.len();
    let f = LatticeCanon::from_generators(field, r, f_rows.to_vec())?;
    let top = lambda_q.max_part().max(lambda.max_part());
    for m in 0..=top {
        let fm = socle_filtration_step(field, lambda_q, m)?;
        let dim = f.intersect(&fm)?.module_length() as i64;
        if dim < stratum_bound(lambda_q, lambda, m) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The elementary divisor type of `Fil^1 Q`: the submodule of
/// `Q = + O/p^{mu_j}` generated by (lifts of) `F` and `pQ`. Computed from
/// the length sequence `lg(i) = length(T / p^i T)` via
/// `n_T(i) = lg(i+1) - lg(i)`.
pub fn fil1_type(
    field: &Arc<GaloisRingCtx>,
    lambda_q: &Partition,
    f_rows: &[Vec<RingElem>],
) -> Result<Partition> {
    if field.precision() != 1 {
        return Err(Error::BadParams(
            "fil1_type takes a residue field context".into(),
        ));
    }
    let r = lambda_q.len();
    let c = lambda_q.max_part().max(1);
    let ctx = field.with_precision(c)?;
    // relations of Q inside R^r, and the submodule N_F covering Fil^1 Q
    let mut d_gens: Vec<Vec<RingElem>> = Vec::new();
    for j in 1..=r {
        let mut row = vec![ctx.zero(); r];
        row[j - 1] = ctx.mul_p_pow(&ctx.one(), lambda_q.part(j))?;
        d_gens.push(row);
    }
    let d_mod = LatticeCanon::from_generators(&ctx, r, d_gens)?;
    let mut n_gens: Vec<Vec<RingElem>> = Vec::new();
    for row in f_rows {
        if row.len() != r {
            return Err(Error::Shape(format!(
                "subspace row of length {} in rank {}",
                row.len(),
                r
            )));
        }
        n_gens.push(
            row.iter()
                .map(|e| ctx.from_coeffs(e.coeffs()))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    let p_elt = ctx.mul_p_pow(&ctx.one(), 1)?;
    for j in 0..r {
        let mut row = vec![ctx.zero(); r];
        row[j] = p_elt.clone();
        n_gens.push(row);
    }
    let n_mod = LatticeCanon::from_generators(&ctx, r, n_gens)?;
    // lg(i) = length(N_F / (p^i N_F + D)) = colength(p^i N_F + D) - colength(N_F)
    let base = n_mod.colength();
    let mut lg = Vec::with_capacity(c as usize + 1);
    for i in 0..=c {
        let pi = n_mod.scale_p_pow(i)?.add(&d_mod)?;
        lg.push(pi.colength() - base);
    }
    // lg is concave, so its differences are weakly decreasing; Partition::new
    // re-checks that and would surface any violation as a hard error
    let mut conj_parts: Vec<u32> = Vec::new();
    for i in 0..c as usize {
        let n_i = lg[i + 1] - lg[i];
        conj_parts.push(
            u32::try_from(n_i)
                .map_err(|_| Error::Overflow("length-sequence difference".into()))?,
        );
    }
    Ok(Partition::new(conj_parts)?.conjugate())
}
