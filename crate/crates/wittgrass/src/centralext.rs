//! Tame symbols and the determinant central extension of the special
//! linear group over the p-adic fraction field.
//!
//! Field elements are carried as `p^v · u` with `u` a unit at a finite
//! window ([`ValUnit`]); group elements as `p^v · U` with `U` integral and
//! unit-normalized ([`LoopGroupElt`]).  The extension's 2-cocycle compares
//! two trivializations of the determinant line of the quotient attached to
//! a product `g·h`: the tensor of the canonical reference trivializations
//! of the two factor quotients against the canonical reference of the
//! product quotient.  On commuting diagonal pairs the resulting commutator
//! pairing collapses to a fixed power of the tame symbol; the exponent is
//! measured once, frozen as [`PAIRING_EXPONENT`], and asserted by the
//! tests.

use std::sync::Arc;

use crate::detline::{adapt_elem, adapt_vec, same_field, ChainBasis, GradedLine, TorsionPresentation};
use crate::lattice::{det_val_unit, snf_square, LatticeCanon, Mat};
use crate::ring::{GaloisRingCtx, RingElem};
use crate::{Error, Result};

/// A value of the tame symbol: a nonzero element of the residue field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolValue {
    value: RingElem,
}

impl SymbolValue {
    pub fn new(value: RingElem) -> Result<SymbolValue> {
        if value.ctx().precision() != 1 {
            return Err(Error::BadParams(
                "a symbol value lives in the residue field".into(),
            ));
        }
        if value.is_zero() {
            return Err(Error::BadParams("a symbol value must be nonzero".into()));
        }
        Ok(SymbolValue { value })
    }

    pub fn residue(&self) -> &RingElem {
        &self.value
    }

    pub fn is_one(&self) -> bool {
        self.value == self.value.ctx().one()
    }

    pub fn mul(&self, other: &SymbolValue) -> Result<SymbolValue> {
        SymbolValue::new(self.value.ctx().mul(&self.value, &other.value)?)
    }

    pub fn inv(&self) -> Result<SymbolValue> {
        SymbolValue::new(self.value.ctx().inv(&self.value)?)
    }

    pub fn pow(&self, e: i64) -> Result<SymbolValue> {
        SymbolValue::new(residue_pow(&self.value, e)?)
    }
}

/// A nonzero element of the fraction field at a finite window: `p^v · u`
/// with `u` a unit of the stored ring window.
#[derive(Debug, Clone)]
pub struct ValUnit {
    v: i64,
    unit: RingElem,
}

impl ValUnit {
    pub fn new(v: i64, unit: RingElem) -> Result<ValUnit> {
        if !unit.ctx().is_unit(&unit)? {
            return Err(Error::NotAUnit(
                "the unit part of a field element must be invertible at its window".into(),
            ));
        }
        Ok(ValUnit { v, unit })
    }

    /// Split a nonzero integral element into `p^v · unit`.  The unit part
    /// keeps only the digits the input determines: its window shrinks by
    /// `v`.
    pub fn from_ring(e: &RingElem) -> Result<ValUnit> {
        let ctx = e.ctx();
        let s = ctx.valuation(e)?;
        if s >= ctx.precision() {
            return Err(Error::Precision(
                "element vanishes at its window, so its valuation is undetermined".into(),
            ));
        }
        let raw = ctx.div_p_pow_exact(e, s)?;
        let hon = ctx.with_precision(ctx.precision() - s)?;
        let unit = adapt_elem(&hon, &raw)?;
        ValUnit::new(i64::from(s), unit)
    }

    pub fn valuation(&self) -> i64 {
        self.v
    }

    pub fn unit(&self) -> &RingElem {
        &self.unit
    }

    /// Product at the common window of the two unit parts.
    pub fn mul(&self, other: &ValUnit) -> Result<ValUnit> {
        let actx = self.unit.ctx();
        let bctx = other.unit.ctx();
        if !same_field(actx, bctx) {
            return Err(Error::CtxMismatch(
                "cannot multiply field elements over different residue characteristics".into(),
            ));
        }
        let m = actx.precision().min(bctx.precision());
        let tctx = actx.with_precision(m)?;
        let v = self
            .v
            .checked_add(other.v)
            .ok_or_else(|| Error::Overflow("valuation sum exceeds the supported range".into()))?;
        let unit = tctx.mul(&adapt_elem(&tctx, &self.unit)?, &adapt_elem(&tctx, &other.unit)?)?;
        ValUnit::new(v, unit)
    }

    pub fn inv(&self) -> Result<ValUnit> {
        let v = self
            .v
            .checked_neg()
            .ok_or_else(|| Error::Overflow("valuation negation exceeds the supported range".into()))?;
        ValUnit::new(v, self.unit.ctx().inv(&self.unit)?)
    }
}

/// Power in the residue field with an integer exponent; the exponent is
/// reduced modulo the order `q − 1` of the unit group, so negative
/// exponents need no explicit inversion.
fn residue_pow(x: &RingElem, e: i64) -> Result<RingElem> {
    let ctx = x.ctx().clone();
    if ctx.precision() != 1 {
        return Err(Error::BadParams(
            "integer powers with negative exponents are reduced in the residue field".into(),
        ));
    }
    if x.is_zero() {
        return Err(Error::NotAUnit("cannot raise zero to an integer power".into()));
    }
    let order = ctx.q() - 1;
    let mut k = if order == 0 { 0 } else { e.rem_euclid(order as i64) as u64 };
    let mut acc = ctx.one();
    let mut base = x.clone();
    while k > 0 {
        if k & 1 == 1 {
            acc = ctx.mul(&acc, &base)?;
        }
        base = ctx.mul(&base, &base)?;
        k >>= 1;
    }
    Ok(acc)
}

/// The tame symbol of two nonzero field elements:
/// `(−1)^{v(a)·v(b)} · ā^{v(b)} · b̄^{−v(a)}` in the residue field, where
/// `x̄` is the leading unit reduced modulo p.  Bimultiplicative and
/// antisymmetric.
pub fn tame_symbol(a: &ValUnit, b: &ValUnit) -> Result<SymbolValue> {
    let actx = a.unit.ctx();
    let bctx = b.unit.ctx();
    if !same_field(actx, bctx) {
        return Err(Error::CtxMismatch(
            "tame symbol arguments must share one residue characteristic".into(),
        ));
    }
    let rf = actx.residue_field();
    let abar = actx.to_residue(&a.unit)?;
    let bbar = bctx.to_residue(&b.unit)?;
    let mut s = rf.mul(&residue_pow(&abar, b.v)?, &residue_pow(&bbar, -a.v)?)?;
    if (a.v & 1 == 1) && (b.v & 1 == 1) {
        s = rf.neg(&s)?;
    }
    SymbolValue::new(s)
}

/// An invertible matrix over the fraction field at a finite window, stored
/// as `p^{v_shift} · U` with `U` integral and unit-normalized: the minimum
/// valuation over the entries of `U` is zero.  `v_shift` is therefore the
/// bottom scale of the element — the largest `a` with
/// `p^a R^n ⊇ g R^n`.
///
/// With the `special` flag the element is checked to have determinant
/// exactly 1 at the stored window; without it any invertible determinant
/// is accepted.
#[derive(Debug, Clone)]
pub struct LoopGroupElt {
    v_shift: i64,
    mat: Mat,
    det_val: u32,
    special: bool,
}

impl LoopGroupElt {
    /// Wrap `p^{v_shift} · mat`, renormalizing so the stored matrix has a
    /// unit entry.  Dividing out `p^k` keeps only the digits the input
    /// determines, so the stored window shrinks by the normalization
    /// amount.
    pub fn new(v_shift: i64, mat: Mat, special: bool) -> Result<LoopGroupElt> {
        let n = mat.nrows();
        if n == 0 || mat.ncols() != n {
            return Err(Error::Shape(
                "a group element needs a nonempty square matrix".into(),
            ));
        }
        let ctx = mat.ctx().clone();
        let mut kmin = ctx.precision();
        for i in 0..n {
            for j in 0..n {
                kmin = kmin.min(ctx.valuation(mat.get(i, j))?);
            }
        }
        if kmin >= ctx.precision() {
            return Err(Error::Singular(
                "matrix vanishes at the stored window".into(),
            ));
        }
        let (v_shift, mat) = if kmin > 0 {
            let tctx = ctx.with_precision(ctx.precision() - kmin)?;
            let mut rows = Vec::with_capacity(n);
            for r in mat.rows_vec() {
                let mut row = Vec::with_capacity(n);
                for e in r {
                    row.push(adapt_elem(&tctx, &ctx.div_p_pow_exact(&e, kmin)?)?);
                }
                rows.push(row);
            }
            let v = v_shift.checked_add(i64::from(kmin)).ok_or_else(|| {
                Error::Overflow("valuation shift exceeds the supported range".into())
            })?;
            (v, Mat::from_rows(&tctx, n, rows)?)
        } else {
            (v_shift, mat)
        };
        let (dval64, dunit) = det_val_unit(&mat)?;
        let prec = mat.ctx().precision();
        if dval64 >= u64::from(prec) {
            return Err(Error::Precision(
                "determinant vanishes at the stored window, so invertibility is undetermined"
                    .into(),
            ));
        }
        let det_val = dval64 as u32;
        if special {
            let total = (n as i128) * (v_shift as i128) + i128::from(det_val);
            if total != 0 {
                return Err(Error::BadParams(format!(
                    "determinant valuation {} is nonzero, so the element is not special",
                    total
                )));
            }
            let hon = mat.ctx().with_precision(prec - det_val)?;
            if adapt_elem(&hon, &dunit)? != hon.one() {
                return Err(Error::BadParams(
                    "determinant unit part is not 1, so the element is not special".into(),
                ));
            }
        }
        Ok(LoopGroupElt {
            v_shift,
            mat,
            det_val,
            special,
        })
    }

    pub fn identity(ctx: &Arc<GaloisRingCtx>, n: usize) -> Result<LoopGroupElt> {
        LoopGroupElt::new(0, Mat::identity(ctx, n), true)
    }

    pub fn ctx(&self) -> &Arc<GaloisRingCtx> {
        self.mat.ctx()
    }

    pub fn rank(&self) -> usize {
        self.mat.nrows()
    }

    /// The stored window of the normalized integral matrix.
    pub fn window(&self) -> u32 {
        self.mat.ctx().precision()
    }

    /// Bottom scale: the largest `a` with `p^a R^n ⊇ g R^n`.
    pub fn min_scale(&self) -> i64 {
        self.v_shift
    }

    /// The normalized integral matrix `U` with `g = p^{v} · U`.
    pub fn matrix(&self) -> &Mat {
        &self.mat
    }

    pub fn is_special(&self) -> bool {
        self.special
    }

    /// Valuation of `det g`.
    pub fn det_valuation(&self) -> i64 {
        (self.rank() as i64) * self.v_shift + i64::from(self.det_val)
    }

    /// Product at the common window of the two factors; the result is
    /// renormalized, which may shrink its window further.
    pub fn mul(&self, other: &LoopGroupElt) -> Result<LoopGroupElt> {
        if !same_field(self.ctx(), other.ctx()) {
            return Err(Error::CtxMismatch(
                "cannot multiply group elements over different residue characteristics".into(),
            ));
        }
        if self.rank() != other.rank() {
            return Err(Error::Shape("group elements of different rank".into()));
        }
        let m = self.window().min(other.window());
        let tctx = self.ctx().with_precision(m)?;
        let a = adapt_mat(&tctx, &self.mat)?;
        let b = adapt_mat(&tctx, &other.mat)?;
        let v = self.v_shift.checked_add(other.v_shift).ok_or_else(|| {
            Error::Overflow("valuation shift exceeds the supported range".into())
        })?;
        LoopGroupElt::new(v, a.mul(&b)?, self.special && other.special)
    }

    /// Inverse, computed exactly from a diagonal decomposition of the
    /// stored matrix.  The inverse of an element known to window `N`
    /// carries `N − s` honest digits, where `p^s` is the largest
    /// elementary divisor of the stored matrix.
    pub fn inverse(&self) -> Result<LoopGroupElt> {
        let ctx = self.mat.ctx();
        let n = self.rank();
        let snf = snf_square(&self.mat)?;
        let s = *snf.d_vals.last().expect("nonempty diagonal");
        if s >= ctx.precision() {
            return Err(Error::Precision(
                "inverse undetermined: an elementary divisor exhausts the window".into(),
            ));
        }
        // U·A·V = D, so A^{-1} = V·D^{-1}·U and p^s·A^{-1} is integral:
        // X = V · diag(p^{s-d_i}) · U.
        let mut mid = Mat::identity(ctx, n);
        for (i, &d) in snf.d_vals.iter().enumerate() {
            mid.set(i, i, ctx.mul_p_pow(&ctx.one(), s - d)?);
        }
        let x = snf.v.mul(&mid)?.mul(&snf.u)?;
        let hon = ctx.with_precision(ctx.precision() - s)?;
        let xa = adapt_mat(&hon, &x)?;
        let v = self
            .v_shift
            .checked_neg()
            .and_then(|t| t.checked_sub(i64::from(s)))
            .ok_or_else(|| Error::Overflow("valuation shift exceeds the supported range".into()))?;
        LoopGroupElt::new(v, xa, self.special)
    }

    /// Exact equality at the common window of the two elements.  Both
    /// sides are normalized, so differing bottom scales mean genuinely
    /// different elements.
    pub fn eq_at_common_window(&self, other: &LoopGroupElt) -> Result<bool> {
        if !same_field(self.ctx(), other.ctx()) || self.rank() != other.rank() {
            return Ok(false);
        }
        if self.v_shift != other.v_shift {
            return Ok(false);
        }
        let m = self.window().min(other.window());
        let tctx = self.ctx().with_precision(m)?;
        Ok(adapt_mat(&tctx, &self.mat)? == adapt_mat(&tctx, &other.mat)?)
    }

    /// Do the two elements commute exactly at their common window?
    pub fn commutes_with(&self, other: &LoopGroupElt) -> Result<bool> {
        let gh = self.mul(other)?;
        let hg = other.mul(self)?;
        gh.eq_at_common_window(&hg)
    }
}

fn adapt_mat(target: &Arc<GaloisRingCtx>, m: &Mat) -> Result<Mat> {
    let rows = m
        .rows_vec()
        .iter()
        .map(|r| adapt_vec(target, r))
        .collect::<Result<Vec<_>>>()?;
    Mat::from_rows(target, m.ncols(), rows)
}

/// The diagonal element `diag(p^{v_1}·u_1, …, p^{v_n}·u_n)`, stored at the
/// common window of `ctx` and the unit parts.
pub fn diagonal_element(
    ctx: &Arc<GaloisRingCtx>,
    entries: &[ValUnit],
    special: bool,
) -> Result<LoopGroupElt> {
    if entries.is_empty() {
        return Err(Error::Shape("a diagonal element needs at least one entry".into()));
    }
    let mut w = ctx.precision();
    for e in entries {
        if !same_field(ctx, e.unit().ctx()) {
            return Err(Error::CtxMismatch(
                "diagonal entries must share the ring's residue characteristic".into(),
            ));
        }
        w = w.min(e.unit().ctx().precision());
    }
    let tctx = ctx.with_precision(w)?;
    let vmin = entries.iter().map(ValUnit::valuation).min().expect("nonempty");
    let n = entries.len();
    let mut m = Mat::identity(&tctx, n);
    for (j, e) in entries.iter().enumerate() {
        let shift = u32::try_from(e.valuation() - vmin)
            .map_err(|_| Error::Overflow("diagonal valuation spread exceeds the supported range".into()))?;
        if shift >= w {
            return Err(Error::Precision(
                "diagonal valuation spread exceeds the stored window".into(),
            ));
        }
        let u = adapt_elem(&tctx, e.unit())?;
        m.set(j, j, tctx.mul_p_pow(&u, shift)?);
    }
    LoopGroupElt::new(vmin, m, special)
}

/// The column span of `p^k · mat` as a canonical submodule, at the window
/// the stored entries honestly determine (`window(mat) + k`).
fn column_lattice(mat: &Mat, k: u32) -> Result<LatticeCanon> {
    let ctx = mat.ctx();
    let w = ctx
        .precision()
        .checked_add(k)
        .ok_or_else(|| Error::Overflow("window exceeds the supported range".into()))?;
    let deep = ctx.with_precision(w)?;
    let n = mat.nrows();
    let cols = mat.transpose().rows_vec();
    let mut gens = Vec::with_capacity(n);
    for c in cols {
        gens.push(
            c.iter()
                .map(|e| deep.mul_p_pow(&adapt_elem(&deep, e)?, k))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    LatticeCanon::from_generators(&deep, n, gens)
}

/// The presentation of `R^n / U R^n` for the normalized matrix of `g`.
fn presentation(g: &LoopGroupElt) -> Result<TorsionPresentation> {
    TorsionPresentation::new(&column_lattice(g.matrix(), 0)?)
}

/// Chain spanning `R^n / p^b R^n`: the rows `p^i e_j`, level-major.
/// Exact vectors, honest at any window.
fn box_chain(ctx: &Arc<GaloisRingCtx>, n: usize, b: u32) -> Result<ChainBasis> {
    let mut vecs = Vec::with_capacity(n * b as usize);
    for i in 0..b {
        for j in 0..n {
            let mut v = vec![ctx.zero(); n];
            v[j] = ctx.mul_p_pow(&ctx.one(), i)?;
            vecs.push(v);
        }
    }
    Ok(ChainBasis::new(vecs))
}

/// `p^b` times each chain vector, with every window deepened by `b`: the
/// class of `p^b x` at window `w + b` is exactly determined by the class
/// of `x` at window `w`.
fn shift_chain(chain: &ChainBasis, b: u32) -> Result<ChainBasis> {
    if b == 0 {
        return Ok(chain.clone());
    }
    let mut out = Vec::with_capacity(chain.len());
    for v in chain.vectors() {
        let ctx = v[0].ctx();
        let w = ctx
            .precision()
            .checked_add(b)
            .ok_or_else(|| Error::Overflow("window exceeds the supported range".into()))?;
        let deep = ctx.with_precision(w)?;
        out.push(
            v.iter()
                .map(|e| deep.mul_p_pow(&adapt_elem(&deep, e)?, b))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    Ok(ChainBasis::new(out))
}

/// Image of each chain vector under an integral matrix, at the common
/// honest window of the vector and the matrix.
fn translate_chain(chain: &ChainBasis, u: &Mat) -> Result<ChainBasis> {
    let n = u.nrows();
    let mut out = Vec::with_capacity(chain.len());
    for v in chain.vectors() {
        if v.len() != n {
            return Err(Error::Shape("chain vector length does not match the matrix".into()));
        }
        let m = v[0].ctx().precision().min(u.ctx().precision());
        let tctx = u.ctx().with_precision(m)?;
        let ua = adapt_mat(&tctx, u)?;
        let va = adapt_vec(&tctx, v)?;
        let mut w = Vec::with_capacity(n);
        for i in 0..n {
            let mut acc = tctx.zero();
            for (j, vj) in va.iter().enumerate() {
                acc = tctx.add(&acc, &tctx.mul(ua.get(i, j), vj)?)?;
            }
            w.push(acc);
        }
        out.push(w);
    }
    Ok(ChainBasis::new(out))
}

fn check_pair(g: &LoopGroupElt, h: &LoopGroupElt) -> Result<()> {
    if !same_field(g.ctx(), h.ctx()) {
        return Err(Error::CtxMismatch(
            "group elements over different residue characteristics".into(),
        ));
    }
    if g.rank() != h.rank() {
        return Err(Error::Shape("group elements of different rank".into()));
    }
    Ok(())
}

/// The determinant line of `p^a R^n / g R^n`, trivialized against the
/// canonical reference of the quotient: degree `v_p(det g) − n·a`, and
/// scalar 1 — computed honestly, not asserted, by extending the canonical
/// reference of `R^n / U R^n` with full box layers down to scale `a` and
/// evaluating it in the scale-shifted presentation.
pub fn coset_det(g: &LoopGroupElt, a: i64) -> Result<GradedLine> {
    if a > g.min_scale() {
        return Err(Error::BadParams(format!(
            "scale {} does not contain the image lattice; it must be at most {}",
            a,
            g.min_scale()
        )));
    }
    let b = u32::try_from(g.min_scale() - a)
        .map_err(|_| Error::Overflow("scale gap exceeds the supported range".into()))?;
    let tp0 = presentation(g)?;
    let tp = tp0.shifted(b)?;
    let chain = ChainBasis::concat(
        &box_chain(tp.work_ctx(), g.rank(), b)?,
        &shift_chain(&tp0.reference_chain(), b)?,
    );
    tp.det_torsion(&chain)
}

/// The 2-cocycle of the determinant central extension at auxiliary bottom
/// scale `a`, which must satisfy `p^a R^n ⊇ h R^n`.
///
/// Writing `T = p^{a+v(g)} R^n / gh R^n`, the value is the transition
/// scalar, inside the graded determinant line of `T`, between
///
/// * the tensor of the canonical reference of `R^n / g R^n`-at-scale-0
///   with the `g`-translate of the box-extended canonical reference of
///   `p^a R^n / h R^n`, and
/// * the canonical reference of `T` itself.
///
/// The value does not depend on `a` (tested), and the normalization
/// `c(1, h) = c(g, 1) = 1` holds structurally at canonical scales.
pub fn cocycle(g: &LoopGroupElt, h: &LoopGroupElt, a: i64) -> Result<SymbolValue> {
    check_pair(g, h)?;
    if !g.is_special() || !h.is_special() {
        return Err(Error::BadParams(
            "the cocycle is defined on the special linear group".into(),
        ));
    }
    if a > h.min_scale() {
        return Err(Error::BadParams(format!(
            "scale {} does not contain the image lattice of the second factor; it must be at most {}",
            a,
            h.min_scale()
        )));
    }
    let n = g.rank();
    let b_h = u32::try_from(h.min_scale() - a)
        .map_err(|_| Error::Overflow("scale gap exceeds the supported range".into()))?;
    let gh = g.mul(h)?;
    let k = gh.min_scale() - g.min_scale() - h.min_scale();
    debug_assert!(k >= 0, "normalization only raises the bottom scale");
    let b_t = u32::try_from(k + i64::from(b_h))
        .map_err(|_| Error::Overflow("scale gap exceeds the supported range".into()))?;
    let tp_t = presentation(&gh)?.shifted(b_t)?;
    // Reference vectors of the second factor must carry enough digits to
    // keep their classes determined after translation by g.
    let depth = tp_t.module_type().max_part() + 1;
    let tp_g = presentation(g)?;
    let tp_h = TorsionPresentation::with_window(&column_lattice(h.matrix(), 0)?, depth)?;
    let boxes = box_chain(tp_t.work_ctx(), n, b_h)?;
    let h_ext = ChainBasis::concat(&boxes, &shift_chain(&tp_h.reference_chain(), b_h)?);
    let n_chain = ChainBasis::concat(&tp_g.reference_chain(), &translate_chain(&h_ext, g.matrix())?);
    let line = tp_t.det_torsion(&n_chain)?;
    SymbolValue::new(line.scalar().clone())
}

/// [`cocycle`] at the canonical bottom scale `a = min_scale(h)`.
pub fn cocycle_canonical(g: &LoopGroupElt, h: &LoopGroupElt) -> Result<SymbolValue> {
    cocycle(g, h, h.min_scale())
}

/// The commutator pairing `c(g,h) · c(h,g)^{-1}` of the extension, defined
/// on exactly commuting pairs of special elements.
pub fn commutator_pairing(g: &LoopGroupElt, h: &LoopGroupElt) -> Result<SymbolValue> {
    check_pair(g, h)?;
    if !g.commutes_with(h)? {
        return Err(Error::NonCommuting);
    }
    let c1 = cocycle_canonical(g, h)?;
    let c2 = cocycle_canonical(h, g)?;
    c1.mul(&c2.inv()?)
}

/// On diagonal pairs `diag(a, a^{-1})`, `diag(b, b^{-1})` the commutator
/// pairing equals `tame_symbol(a, b)` raised to this power.  Measured once
/// over the exhaustive diagonal grids in the tests and frozen here.
pub const PAIRING_EXPONENT: i64 = 2;
