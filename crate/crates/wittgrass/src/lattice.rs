//! Matrices and finitely generated submodules over `R = O/p^c`.
//!
//! `R` is a chain ring: every ideal is `(p^e)`. Every submodule `N` of
//! `R^n` has a unique *canonical echelon form* (its Howell form): rows with
//! pivot entries exactly `p^(e_1), ..., p^(e_k)` at strictly increasing
//! pivot columns, all other entries in a pivot column reduced modulo the
//! pivot (coefficientwise integer residues), and the row list closed in the
//! sense that `p^(c - e_i)` times row `i` lies in the span of the rows
//! after it. Two generating sets span the same submodule iff they produce
//! identical canonical forms, which makes [`LatticeCanon`] usable as a key.
//!
//! The same elimination run over square matrices produces a Smith normal
//! form `U A V = diag(p^(d_1), ..., p^(d_n))` with `d_1 <= ... <= d_n` and
//! `U, V` invertible, provided `det A` is nonzero at the working precision;
//! otherwise [`Error::Precision`] is returned and the caller should retry
//! with a larger `N`. The decreasing sequence of the `d_i` is the *elementary
//! divisor type* of the cokernel, a partition.

use crate::partitions::Partition;
use crate::ring::{GaloisRingCtx, RingElem};
use crate::{Error, Result};
use std::sync::Arc;

/// A dense matrix over one ring context, row major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mat {
    ctx: Arc<GaloisRingCtx>,
    rows: usize,
    cols: usize,
    data: Vec<RingElem>,
}

impl Mat {
    pub fn zero(ctx: &Arc<GaloisRingCtx>, rows: usize, cols: usize) -> Mat {
        Mat {
            ctx: ctx.clone(),
            rows,
            cols,
            data: vec![ctx.zero(); rows * cols],
        }
    }

    pub fn identity(ctx: &Arc<GaloisRingCtx>, n: usize) -> Mat {
        let mut m = Mat::zero(ctx, n, n);
        for i in 0..n {
            m.set(i, i, ctx.one());
        }
        m
    }

    pub fn from_rows(ctx: &Arc<GaloisRingCtx>, cols: usize, rows: Vec<Vec<RingElem>>) -> Result<Mat> {
        let mut data = Vec::with_capacity(rows.len() * cols);
        let nrows = rows.len();
        for r in rows {
            if r.len() != cols {
                return Err(Error::Shape(format!(
                    "row of length {} in a {}-column matrix",
                    r.len(),
                    cols
                )));
            }
            for e in r {
                if **e.ctx() != **ctx {
                    return Err(Error::CtxMismatch("matrix entry over a foreign ring".into()));
                }
                data.push(e);
            }
        }
        Ok(Mat {
            ctx: ctx.clone(),
            rows: nrows,
            cols,
            data,
        })
    }

    pub fn ctx(&self) -> &Arc<GaloisRingCtx> {
        &self.ctx
    }
    pub fn nrows(&self) -> usize {
        self.rows
    }
    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &RingElem {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: RingElem) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> Vec<RingElem> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn rows_vec(&self) -> Vec<Vec<RingElem>> {
        (0..self.rows).map(|i| self.row(i)).collect()
    }

    pub fn transpose(&self) -> Mat {
        let mut out = Mat::zero(&self.ctx, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.get(i, j).clone());
            }
        }
        out
    }

    pub fn mul(&self, other: &Mat) -> Result<Mat> {
        if *self.ctx != *other.ctx {
            return Err(Error::CtxMismatch("matrix product across rings".into()));
        }
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "product of {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Mat::zero(&self.ctx, self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = self.ctx.zero();
                for k in 0..self.cols {
                    let t = self.ctx.mul(self.get(i, k), other.get(k, j))?;
                    acc = self.ctx.add(&acc, &t)?;
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &Mat) -> Result<Mat> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Shape("matrix sum shape mismatch".into()));
        }
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a = self.ctx.add(a, b)?;
        }
        Ok(out)
    }

    pub fn scale(&self, s: &RingElem) -> Result<Mat> {
        let mut out = self.clone();
        for a in out.data.iter_mut() {
            *a = self.ctx.mul(a, s)?;
        }
        Ok(out)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|e| e.is_zero())
    }

    /// Entrywise image in another context over the same field (precision
    /// change; canonical representatives are carried over and reduced).
    pub fn to_precision(&self, target: &Arc<GaloisRingCtx>) -> Result<Mat> {
        if target.field() != self.ctx.field() {
            return Err(Error::CtxMismatch("precision change across fields".into()));
        }
        let rows = (0..self.rows)
            .map(|i| {
                (0..self.cols)
                    .map(|j| target.from_coeffs(self.get(i, j).coeffs()))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Mat::from_rows(target, self.cols, rows)
    }
}

// ----- row-vector helpers -----

fn row_is_zero(r: &[RingElem]) -> bool {
    r.iter().all(|e| e.is_zero())
}

fn first_nonzero(r: &[RingElem]) -> Option<usize> {
    r.iter().position(|e| !e.is_zero())
}

fn row_scale(ctx: &GaloisRingCtx, r: &[RingElem], s: &RingElem) -> Result<Vec<RingElem>> {
    r.iter().map(|e| ctx.mul(e, s)).collect()
}

/// `a - m * b` componentwise.
fn row_sub_scaled(
    ctx: &GaloisRingCtx,
    a: &[RingElem],
    m: &RingElem,
    b: &[RingElem],
) -> Result<Vec<RingElem>> {
    a.iter()
        .zip(b)
        .map(|(x, y)| ctx.sub(x, &ctx.mul(m, y)?))
        .collect()
}

/// Reduce the coefficients of `a` mod `p^e` and return `(reduced, multiplier)`
/// with `a = reduced + p^e * multiplier` (coefficientwise exact).
fn split_mod_p_pow(ctx: &Arc<GaloisRingCtx>, a: &RingElem, e: u32) -> Result<(RingElem, RingElem)> {
    let red = ctx.reduce_mod_p_pow(a, e)?;
    let diff = ctx.sub(a, &red)?;
    let mult = ctx.div_p_pow_exact(&diff, e)?;
    Ok((red, mult))
}

/// The canonical form of a submodule of `R^n`, with pivot bookkeeping.
#[derive(Debug, Clone)]
pub struct LatticeCanon {
    ctx: Arc<GaloisRingCtx>,
    n: usize,
    rows: Vec<Vec<RingElem>>,
    pivot_cols: Vec<usize>,
    pivot_vals: Vec<u32>,
}

impl PartialEq for LatticeCanon {
    fn eq(&self, other: &Self) -> bool {
        *self.ctx == *other.ctx && self.n == other.n && self.sort_key() == other.sort_key()
    }
}
impl Eq for LatticeCanon {}
impl PartialOrd for LatticeCanon {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for LatticeCanon {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}
impl std::hash::Hash for LatticeCanon {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.sort_key().hash(state);
    }
}

/// Run the canonicalization on a list of generator rows.
fn howell_rows(
    ctx: &Arc<GaloisRingCtx>,
    n: usize,
    gens: Vec<Vec<RingElem>>,
) -> Result<(Vec<Vec<RingElem>>, Vec<usize>, Vec<u32>)> {
    let c = ctx.precision();
    let mut active: Vec<Vec<RingElem>> = Vec::new();
    for g in gens {
        if g.len() != n {
            return Err(Error::Shape(format!(
                "generator of length {} in ambient rank {}",
                g.len(),
                n
            )));
        }
        for e in &g {
            if **e.ctx() != **ctx {
                return Err(Error::CtxMismatch("generator over a foreign ring".into()));
            }
        }
        if !row_is_zero(&g) {
            active.push(g);
        }
    }
    let mut placed: Vec<Vec<RingElem>> = Vec::new();
    let mut pivot_cols: Vec<usize> = Vec::new();
    let mut pivot_vals: Vec<u32> = Vec::new();
    for j in 0..n {
        // among active rows with support starting at j, find minimal valuation
        let mut best: Option<(usize, u32)> = None;
        for (idx, r) in active.iter().enumerate() {
            match first_nonzero(r) {
                Some(col) if col == j => {
                    let v = ctx.valuation(&r[j])?;
                    if best.map_or(true, |(_, bv)| v < bv) {
                        best = Some((idx, v));
                    }
                }
                _ => {}
            }
        }
        let Some((idx, v)) = best else { continue };
        let mut pivot_row = active.swap_remove(idx);
        // normalize the pivot entry to exactly p^v
        let unit = ctx.div_p_pow_exact(&pivot_row[j], v)?;
        let unit_inv = ctx.inv(&unit)?;
        pivot_row = row_scale(ctx, &pivot_row, &unit_inv)?;
        // eliminate column j from all remaining active rows starting at j
        let mut next_active = Vec::with_capacity(active.len() + 1);
        for r in active.into_iter() {
            if first_nonzero(&r) == Some(j) {
                let m = ctx.div_p_pow_exact(&r[j], v)?;
                let nr = row_sub_scaled(ctx, &r, &m, &pivot_row)?;
                if !row_is_zero(&nr) {
                    next_active.push(nr);
                }
            } else {
                next_active.push(r);
            }
        }
        // closure row: p^(c - v) * pivot_row has support strictly right of j
        if v > 0 {
            let closure = row_scale(ctx, &pivot_row, &ctx.mul_p_pow(&ctx.one(), c - v)?)?;
            if !row_is_zero(&closure) {
                next_active.push(closure);
            }
        }
        active = next_active;
        placed.push(pivot_row);
        pivot_cols.push(j);
        pivot_vals.push(v);
    }
    debug_assert!(active.iter().all(|r| row_is_zero(r)));
    // back-substitution: reduce entries above each later pivot
    let k = placed.len();
    for i in 0..k {
        for l in i + 1..k {
            let jc = pivot_cols[l];
            let e = pivot_vals[l];
            let (red, mult) = split_mod_p_pow(ctx, &placed[i][jc], e)?;
            if !mult.is_zero() {
                let nr = row_sub_scaled(ctx, &placed[i], &mult, &placed[l])?;
                placed[i] = nr;
                debug_assert_eq!(placed[i][jc], red);
            }
        }
    }
    Ok((placed, pivot_cols, pivot_vals))
}

impl LatticeCanon {
    /// Canonical form of the submodule generated by `gens` inside `R^n`.
    pub fn from_generators(
        ctx: &Arc<GaloisRingCtx>,
        n: usize,
        gens: Vec<Vec<RingElem>>,
    ) -> Result<LatticeCanon> {
        let (rows, pivot_cols, pivot_vals) = howell_rows(ctx, n, gens)?;
        Ok(LatticeCanon {
            ctx: ctx.clone(),
            n,
            rows,
            pivot_cols,
            pivot_vals,
        })
    }

    /// The full module `R^n`.
    pub fn full(ctx: &Arc<GaloisRingCtx>, n: usize) -> LatticeCanon {
        let gens = (0..n)
            .map(|j| {
                let mut r = vec![ctx.zero(); n];
                r[j] = ctx.one();
                r
            })
            .collect();
        LatticeCanon::from_generators(ctx, n, gens).expect("identity generators are well formed")
    }

    /// The zero submodule.
    pub fn zero_module(ctx: &Arc<GaloisRingCtx>, n: usize) -> LatticeCanon {
        LatticeCanon::from_generators(ctx, n, vec![]).expect("empty generator list")
    }

    /// `p^s R^n`.
    pub fn p_power_full(ctx: &Arc<GaloisRingCtx>, n: usize, s: u32) -> Result<LatticeCanon> {
        let ps = ctx.mul_p_pow(&ctx.one(), s)?;
        let gens = (0..n)
            .map(|j| {
                let mut r = vec![ctx.zero(); n];
                r[j] = ps.clone();
                r
            })
            .collect();
        LatticeCanon::from_generators(ctx, n, gens)
    }

    pub fn ctx(&self) -> &Arc<GaloisRingCtx> {
        &self.ctx
    }
    pub fn ambient_rank(&self) -> usize {
        self.n
    }
    pub fn rows(&self) -> &[Vec<RingElem>] {
        &self.rows
    }
    pub fn pivot_cols(&self) -> &[usize] {
        &self.pivot_cols
    }
    pub fn pivot_vals(&self) -> &[u32] {
        &self.pivot_vals
    }

    /// Deterministic total-order key: ambient data, pivots, then all entry
    /// coefficients.
    pub fn sort_key(&self) -> Vec<u64> {
        let mut key = vec![self.n as u64, self.rows.len() as u64];
        for (&jc, &jv) in self.pivot_cols.iter().zip(&self.pivot_vals) {
            key.push(jc as u64);
            key.push(jv as u64);
        }
        for r in &self.rows {
            for e in r {
                key.extend_from_slice(e.coeffs());
            }
        }
        key
    }

    /// Canonical coset representative of `v` modulo this submodule: every
    /// pivot-column entry is made coefficientwise smaller than its pivot.
    pub fn coset_rep(&self, v: &[RingElem]) -> Result<Vec<RingElem>> {
        if v.len() != self.n {
            return Err(Error::Shape(format!(
                "vector of length {} in ambient rank {}",
                v.len(),
                self.n
            )));
        }
        let mut w = v.to_vec();
        for i in 0..self.rows.len() {
            let jc = self.pivot_cols[i];
            let e = self.pivot_vals[i];
            let (_, mult) = split_mod_p_pow(&self.ctx, &w[jc], e)?;
            if !mult.is_zero() {
                w = row_sub_scaled(&self.ctx, &w, &mult, &self.rows[i])?;
            }
        }
        Ok(w)
    }

    pub fn contains(&self, v: &[RingElem]) -> Result<bool> {
        Ok(row_is_zero(&self.coset_rep(v)?))
    }

    pub fn contains_module(&self, other: &LatticeCanon) -> Result<bool> {
        for r in &other.rows {
            if !self.contains(r)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Length of this module over `O` (number of `F_q` composition
    /// factors): `sum_i (c - e_i)`.
    pub fn module_length(&self) -> u64 {
        let c = self.ctx.precision() as u64;
        self.pivot_vals.iter().map(|&e| c - e as u64).sum()
    }

    /// Length of `R^n / N` over `O`: `(n - k)c + sum_i e_i`.
    pub fn colength(&self) -> u64 {
        let c = self.ctx.precision() as u64;
        (self.n as u64 - self.rows.len() as u64) * c
            + self.pivot_vals.iter().map(|&e| e as u64).sum::<u64>()
    }

    /// Sum of submodules.
    pub fn add(&self, other: &LatticeCanon) -> Result<LatticeCanon> {
        self.check_compatible(other)?;
        let mut gens = self.rows.clone();
        gens.extend(other.rows.iter().cloned());
        LatticeCanon::from_generators(&self.ctx, self.n, gens)
    }

    /// Intersection of submodules, via the canonical form of the doubled
    /// block matrix `[[A, A], [B, 0]]`: rows whose left block vanishes have
    /// right blocks generating the intersection. Completeness relies on the
    /// closure property of the canonical form.
    pub fn intersect(&self, other: &LatticeCanon) -> Result<LatticeCanon> {
        self.check_compatible(other)?;
        let n = self.n;
        let mut gens: Vec<Vec<RingElem>> = Vec::new();
        for r in &self.rows {
            let mut g = r.clone();
            g.extend(r.iter().cloned());
            gens.push(g);
        }
        let zero = self.ctx.zero();
        for r in &other.rows {
            let mut g = r.clone();
            g.extend(std::iter::repeat(zero.clone()).take(n));
            gens.push(g);
        }
        let (rows, _, _) = howell_rows(&self.ctx, 2 * n, gens)?;
        let mut inter_gens = Vec::new();
        for r in rows {
            if row_is_zero(&r[..n]) {
                inter_gens.push(r[n..].to_vec());
            }
        }
        LatticeCanon::from_generators(&self.ctx, n, inter_gens)
    }

    /// The colon module `(N : p^s) = { x : p^s x in N }`.
    pub fn colon_p_pow(&self, s: u32) -> Result<LatticeCanon> {
        let c = self.ctx.precision();
        if s == 0 {
            return Ok(self.clone());
        }
        if s >= c {
            return Ok(LatticeCanon::full(&self.ctx, self.n));
        }
        let ps_full = LatticeCanon::p_power_full(&self.ctx, self.n, s)?;
        let inter = self.intersect(&ps_full)?;
        // divide generators by p^s (any exact quotient works: the ambiguity
        // is absorbed by the p^(c-s) e_j generators below)
        let mut gens: Vec<Vec<RingElem>> = Vec::new();
        for r in &inter.rows {
            let g = r
                .iter()
                .map(|e| self.ctx.div_p_pow_exact(e, s))
                .collect::<Result<Vec<_>>>()?;
            gens.push(g);
        }
        let pcs = self.ctx.mul_p_pow(&self.ctx.one(), c - s)?;
        for j in 0..self.n {
            let mut r = vec![self.ctx.zero(); self.n];
            r[j] = pcs.clone();
            gens.push(r);
        }
        LatticeCanon::from_generators(&self.ctx, self.n, gens)
    }

    /// `p^s N`.
    pub fn scale_p_pow(&self, s: u32) -> Result<LatticeCanon> {
        let ps = self.ctx.mul_p_pow(&self.ctx.one(), s)?;
        let gens = self
            .rows
            .iter()
            .map(|r| row_scale(&self.ctx, r, &ps))
            .collect::<Result<Vec<_>>>()?;
        LatticeCanon::from_generators(&self.ctx, self.n, gens)
    }

    /// The submodule of elements supported on columns `>= j` (intersection
    /// with the coordinate subspace): by the closure property this is
    /// exactly the span of the canonical rows with pivot column `>= j`.
    pub fn tail_submodule(&self, j: usize) -> Result<LatticeCanon> {
        let gens = self
            .rows
            .iter()
            .zip(&self.pivot_cols)
            .filter(|(_, &jc)| jc >= j)
            .map(|(r, _)| r.clone())
            .collect();
        LatticeCanon::from_generators(&self.ctx, self.n, gens)
    }

    /// The elementary divisor type of `R^n / N` as a partition
    /// (decreasing `p`-power exponents).
    pub fn cokernel_type(&self) -> Result<Partition> {
        let c = self.ctx.precision();
        let n = self.n;
        let big_prec = c
            .checked_mul(n as u32)
            .and_then(|x| x.checked_add(1))
            .ok_or_else(|| Error::Overflow("cokernel precision".into()))?;
        let big = self.ctx.with_precision(big_prec)?;
        let mut gens: Vec<Vec<RingElem>> = Vec::new();
        for r in &self.rows {
            gens.push(
                r.iter()
                    .map(|e| big.from_coeffs(e.coeffs()))
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        let pc = big.mul_p_pow(&big.one(), c)?;
        for j in 0..n {
            let mut r = vec![big.zero(); n];
            r[j] = pc.clone();
            gens.push(r);
        }
        let mat = Mat::from_rows(&big, n, gens)?;
        let d_vals = smith_diagonal_general(&mat)?;
        let mut parts: Vec<u32> = d_vals.into_iter().filter(|&v| v > 0).collect();
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Partition::new(parts)
    }

    /// An `O`-basis (at precision `big`) of the preimage of `N` under
    /// `O^n -> R^n`: the canonical rows, completed by `p^c e_j` for every
    /// non-pivot column `j`, listed in column order. The resulting matrix is
    /// echelon with diagonal `p^(e_i)` / `p^c`.
    pub fn window_basis_matrix(&self, big: &Arc<GaloisRingCtx>) -> Result<Mat> {
        if big.field() != self.ctx.field() {
            return Err(Error::CtxMismatch("basis lift across fields".into()));
        }
        let c = self.ctx.precision();
        if big.precision() < c {
            return Err(Error::Precision(
                "window basis needs at least the window precision".into(),
            ));
        }
        let pc = big.mul_p_pow(&big.one(), c)?;
        let mut rows: Vec<Vec<RingElem>> = Vec::with_capacity(self.n);
        let mut next_pivot = 0usize;
        for j in 0..self.n {
            if next_pivot < self.pivot_cols.len() && self.pivot_cols[next_pivot] == j {
                rows.push(
                    self.rows[next_pivot]
                        .iter()
                        .map(|e| big.from_coeffs(e.coeffs()))
                        .collect::<Result<Vec<_>>>()?,
                );
                next_pivot += 1;
            } else {
                let mut r = vec![big.zero(); self.n];
                r[j] = pc.clone();
                rows.push(r);
            }
        }
        Mat::from_rows(big, self.n, rows)
    }

    fn check_compatible(&self, other: &LatticeCanon) -> Result<()> {
        if *self.ctx != *other.ctx || self.n != other.n {
            return Err(Error::CtxMismatch(
                "submodules over different rings or ambient ranks".into(),
            ));
        }
        Ok(())
    }
}

/// All cosets of `sub` inside `sup` (both submodules of the same `R^n`,
/// `sub` contained in `sup`), as canonical representatives in a
/// deterministic sorted order. Breadth-first closure over the generators of
/// `sup`, canonicalizing through [`LatticeCanon::coset_rep`] of `sub`.
pub fn coset_transversal(
    sup: &LatticeCanon,
    sub: &LatticeCanon,
) -> Result<Vec<Vec<RingElem>>> {
    sup.check_compatible(sub)?;
    if !sup.contains_module(sub)? {
        return Err(Error::Shape(
            "transversal requested for a non-nested pair of submodules".into(),
        ));
    }
    let ctx = sup.ctx();
    let n = sup.ambient_rank();
    let key = |v: &[RingElem]| -> Vec<u64> { v.iter().flat_map(|e| e.coeffs().to_vec()).collect() };
    // additive generators of sup as an abelian group: x^j * (each row),
    // j < d — p-multiples come from repeated addition
    let mut add_gens: Vec<Vec<RingElem>> = Vec::new();
    for g in sup.rows() {
        for j in 0..ctx.d() {
            let mut basis = vec![0u64; ctx.d()];
            basis[j] = 1;
            let xj = ctx.from_coeffs(&basis)?;
            add_gens.push(row_scale(ctx, g, &xj)?);
        }
    }
    let zero = sub.coset_rep(&vec![ctx.zero(); n])?;
    let mut seen = std::collections::BTreeMap::new();
    seen.insert(key(&zero), zero.clone());
    let mut frontier = vec![zero];
    while let Some(r) = frontier.pop() {
        for g in &add_gens {
            let s: Vec<RingElem> = r
                .iter()
                .zip(g)
                .map(|(a, b)| ctx.add(a, b))
                .collect::<Result<Vec<_>>>()?;
            let rep = sub.coset_rep(&s)?;
            let k = key(&rep);
            if !seen.contains_key(&k) {
                seen.insert(k, rep.clone());
                frontier.push(rep);
            }
        }
    }
    let expected = sup.module_length() - sub.module_length();
    debug_assert_eq!(
        seen.len() as u128,
        (ctx.q() as u128).pow(expected as u32),
        "transversal size disagrees with the index"
    );
    Ok(seen.into_values().collect())
}

/// Smith normal form data for a square matrix `A`:
/// `U A V = diag(p^(d_1), ..., p^(d_n))` with `d` increasing.
#[derive(Debug, Clone)]
pub struct Snf {
    pub d_vals: Vec<u32>,
    pub u: Mat,
    pub u_inv: Mat,
    pub v: Mat,
    pub v_inv: Mat,
    /// `w` with `det A = p^(d_1 + ... + d_n) * w`; `w` is a unit, well
    /// defined modulo `p^(N - sum d_i)`.
    pub det_unit: RingElem,
}

struct SnfWorker {
    ctx: Arc<GaloisRingCtx>,
    b: Mat,
    u: Mat,
    u_inv: Mat,
    v: Mat,
    v_inv: Mat,
    /// running product det(U) * det(V), always a unit
    det_uv: RingElem,
}

impl SnfWorker {
    fn new(a: &Mat) -> SnfWorker {
        let ctx = a.ctx().clone();
        let m = a.nrows();
        let n = a.ncols();
        SnfWorker {
            b: a.clone(),
            u: Mat::identity(&ctx, m),
            u_inv: Mat::identity(&ctx, m),
            v: Mat::identity(&ctx, n),
            v_inv: Mat::identity(&ctx, n),
            det_uv: ctx.one(),
            ctx,
        }
    }

    fn swap_rows(&mut self, i1: usize, i2: usize) -> Result<()> {
        if i1 == i2 {
            return Ok(());
        }
        for j in 0..self.b.ncols() {
            let t = self.b.get(i1, j).clone();
            self.b.set(i1, j, self.b.get(i2, j).clone());
            self.b.set(i2, j, t);
        }
        for j in 0..self.u.ncols() {
            let t = self.u.get(i1, j).clone();
            self.u.set(i1, j, self.u.get(i2, j).clone());
            self.u.set(i2, j, t);
        }
        // U_inv gets the inverse op on the other side: swap columns
        for i in 0..self.u_inv.nrows() {
            let t = self.u_inv.get(i, i1).clone();
            self.u_inv.set(i, i1, self.u_inv.get(i, i2).clone());
            self.u_inv.set(i, i2, t);
        }
        self.det_uv = self.ctx.neg(&self.det_uv)?;
        Ok(())
    }

    fn swap_cols(&mut self, j1: usize, j2: usize) -> Result<()> {
        if j1 == j2 {
            return Ok(());
        }
        for i in 0..self.b.nrows() {
            let t = self.b.get(i, j1).clone();
            self.b.set(i, j1, self.b.get(i, j2).clone());
            self.b.set(i, j2, t);
        }
        for i in 0..self.v.nrows() {
            let t = self.v.get(i, j1).clone();
            self.v.set(i, j1, self.v.get(i, j2).clone());
            self.v.set(i, j2, t);
        }
        for j in 0..self.v_inv.ncols() {
            let t = self.v_inv.get(j1, j).clone();
            self.v_inv.set(j1, j, self.v_inv.get(j2, j).clone());
            self.v_inv.set(j2, j, t);
        }
        self.det_uv = self.ctx.neg(&self.det_uv)?;
        Ok(())
    }

    /// row i *= s (s a unit; s_inv its inverse)
    fn scale_row(&mut self, i: usize, s: &RingElem, s_inv: &RingElem) -> Result<()> {
        for j in 0..self.b.ncols() {
            self.b.set(i, j, self.ctx.mul(self.b.get(i, j), s)?);
        }
        for j in 0..self.u.ncols() {
            self.u.set(i, j, self.ctx.mul(self.u.get(i, j), s)?);
        }
        for r in 0..self.u_inv.nrows() {
            self.u_inv
                .set(r, i, self.ctx.mul(self.u_inv.get(r, i), s_inv)?);
        }
        self.det_uv = self.ctx.mul(&self.det_uv, s)?;
        Ok(())
    }

    /// row i -= m * row t
    fn shear_row(&mut self, i: usize, m: &RingElem, t: usize) -> Result<()> {
        for j in 0..self.b.ncols() {
            let sub = self.ctx.mul(m, self.b.get(t, j))?;
            self.b.set(i, j, self.ctx.sub(self.b.get(i, j), &sub)?);
        }
        for j in 0..self.u.ncols() {
            let sub = self.ctx.mul(m, self.u.get(t, j))?;
            self.u.set(i, j, self.ctx.sub(self.u.get(i, j), &sub)?);
        }
        // inverse op: col t of U_inv += m * col i
        for r in 0..self.u_inv.nrows() {
            let addv = self.ctx.mul(m, self.u_inv.get(r, i))?;
            self.u_inv
                .set(r, t, self.ctx.add(self.u_inv.get(r, t), &addv)?);
        }
        Ok(())
    }

    /// col j -= m * col t
    fn shear_col(&mut self, j: usize, m: &RingElem, t: usize) -> Result<()> {
        for i in 0..self.b.nrows() {
            let sub = self.ctx.mul(m, self.b.get(i, t))?;
            self.b.set(i, j, self.ctx.sub(self.b.get(i, j), &sub)?);
        }
        for i in 0..self.v.nrows() {
            let sub = self.ctx.mul(m, self.v.get(i, t))?;
            self.v.set(i, j, self.ctx.sub(self.v.get(i, j), &sub)?);
        }
        // inverse op: row t of V_inv += m * row j
        for cjj in 0..self.v_inv.ncols() {
            let addv = self.ctx.mul(m, self.v_inv.get(j, cjj))?;
            self.v_inv
                .set(t, cjj, self.ctx.add(self.v_inv.get(t, cjj), &addv)?);
        }
        Ok(())
    }

    /// Diagonalize; returns pivot valuations found (length = number of
    /// completed pivots, at most min(m, n)).
    fn run(&mut self) -> Result<Vec<u32>> {
        let m = self.b.nrows();
        let n = self.b.ncols();
        let steps = m.min(n);
        let mut d_vals = Vec::with_capacity(steps);
        for t in 0..steps {
            // global minimum valuation in the remaining block
            let mut best: Option<(usize, usize, u32)> = None;
            for i in t..m {
                for j in t..n {
                    let e = self.b.get(i, j);
                    if e.is_zero() {
                        continue;
                    }
                    let v = self.ctx.valuation(e)?;
                    if best.map_or(true, |(_, _, bv)| v < bv) {
                        best = Some((i, j, v));
                    }
                }
            }
            let Some((bi, bj, v)) = best else {
                break; // remaining block is zero
            };
            self.swap_rows(t, bi)?;
            self.swap_cols(t, bj)?;
            let unit = self.ctx.div_p_pow_exact(self.b.get(t, t), v)?;
            let unit_inv = self.ctx.inv(&unit)?;
            self.scale_row(t, &unit_inv, &unit)?;
            for i in t + 1..m {
                let e = self.b.get(i, t);
                if e.is_zero() {
                    continue;
                }
                let mult = self.ctx.div_p_pow_exact(e, v)?;
                self.shear_row(i, &mult, t)?;
            }
            for j in t + 1..n {
                let e = self.b.get(t, j);
                if e.is_zero() {
                    continue;
                }
                let mult = self.ctx.div_p_pow_exact(e, v)?;
                self.shear_col(j, &mult, t)?;
            }
            d_vals.push(v);
        }
        Ok(d_vals)
    }
}

/// Smith normal form of a square matrix whose determinant is nonzero at the
/// working precision. [`Error::Precision`] when `det A = 0 mod p^N`.
pub fn snf_square(a: &Mat) -> Result<Snf> {
    if a.nrows() != a.ncols() {
        return Err(Error::Shape(format!(
            "Smith form of a non-square {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    let n = a.nrows();
    let prec = a.ctx().precision();
    let mut w = SnfWorker::new(a);
    let d_vals = w.run()?;
    let total: u64 = d_vals.iter().map(|&v| v as u64).sum();
    if d_vals.len() < n || total >= prec as u64 {
        return Err(Error::Precision(format!(
            "determinant vanishes at precision {prec}; retry with a larger modulus exponent"
        )));
    }
    // det A = p^total * (det U * det V)^{-1}
    let det_unit = a.ctx().inv(&w.det_uv)?;
    Ok(Snf {
        d_vals,
        u: w.u,
        u_inv: w.u_inv,
        v: w.v,
        v_inv: w.v_inv,
        det_unit,
    })
}

/// Diagonal valuations for a possibly rectangular matrix; missing pivots
/// (zero remaining block) report as the full precision (annihilated
/// coordinates). No invertibility requirement.
pub fn smith_diagonal_general(a: &Mat) -> Result<Vec<u32>> {
    let mut w = SnfWorker::new(a);
    let mut d_vals = w.run()?;
    let steps = a.nrows().min(a.ncols());
    while d_vals.len() < steps {
        d_vals.push(a.ctx().precision());
    }
    Ok(d_vals)
}

/// The elementary divisor type of the cokernel `R^n / (row span of A)` for a
/// square `A` with unit determinant at the working precision, as a
/// decreasing partition. Requires `sum d_i < N`.
pub fn matrix_cotype(a: &Mat) -> Result<Partition> {
    let snf = snf_square(a)?;
    let mut parts: Vec<u32> = snf.d_vals.into_iter().filter(|&v| v > 0).collect();
    parts.sort_unstable_by(|a, b| b.cmp(a));
    Partition::new(parts)
}

/// Valuation of `det A` and the unit `w` with `det A = p^val * w`, from the
/// Smith form. Precision must exceed the determinant valuation.
pub fn det_val_unit(a: &Mat) -> Result<(u64, RingElem)> {
    let snf = snf_square(a)?;
    let val: u64 = snf.d_vals.iter().map(|&v| v as u64).sum();
    Ok((val, snf.det_unit))
}
