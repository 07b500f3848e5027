//! Truncated Witt vectors `W_m(F_q)` and their universal addition and
//! multiplication laws.
//!
//! The laws are *derived, not hardcoded*: the ghost polynomial
//! `w_n(Z_0..Z_n) = sum_{i<=n} p^i Z_i^(p^(n-i))` must turn coordinatewise
//! sum/product laws into ordinary sum/product, so
//!
//! ```text
//! p^n S_n = w_n(X) + w_n(Y) - sum_{i<n} p^i S_i^(p^(n-i))
//! p^n P_n = w_n(X) * w_n(Y) - sum_{i<n} p^i P_i^(p^(n-i))
//! ```
//!
//! and each right-hand side is divisible by `p^n` over the integers; the
//! recursion solves for `S_n`, `P_n` in `Z[X_0..X_{m-1}, Y_0..Y_{m-1}]`.
//! A failed exact division would indicate a bug and surfaces as
//! [`Error::Divisibility`].
//!
//! Over a perfect field of characteristic `p` the ring `W_m(F_q)` is
//! isomorphic to `O/p^m` (the ring of [`crate::ring`]); the isomorphism
//! sends `(a_0, a_1, ...)` to `sum_i [a_i^(p^-i)] p^i`, where `[.]` is the
//! Teichmüller lift and `a -> a^(p^-1)` is the inverse Frobenius of `F_q`.
//! Both directions are provided and tested to be mutually inverse ring
//! homomorphisms.
//!
//! Supported truncation lengths: `1 <= m <= 5`. Law computation is guarded
//! by a [`WorkBound`]: polynomial sizes grow quickly with `p` and `m`.

use crate::ring::{GaloisRingCtx, RingElem};
use crate::{Error, Result, WorkBound};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

/// Largest supported truncation length.
pub const MAX_LEN: usize = 5;

/// A polynomial with integer coefficients in `nvars` variables.
///
/// Keys are exponent vectors of fixed length `nvars`; the map never stores
/// zero coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntPoly {
    nvars: usize,
    terms: BTreeMap<Vec<u16>, BigInt>,
}

impl IntPoly {
    pub fn zero(nvars: usize) -> Self {
        IntPoly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: impl Into<BigInt>) -> Self {
        let c = c.into();
        let mut p = IntPoly::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(vec![0; nvars], c);
        }
        p
    }

    /// The variable `Z_i`.
    pub fn var(nvars: usize, i: usize) -> Self {
        assert!(i < nvars);
        let mut e = vec![0u16; nvars];
        e[i] = 1;
        let mut p = IntPoly::zero(nvars);
        p.terms.insert(e, BigInt::one());
        p
    }

    /// A single monomial `c * Z^e`.
    pub fn monomial(nvars: usize, exps: &[(usize, u16)], c: impl Into<BigInt>) -> Self {
        let c = c.into();
        let mut e = vec![0u16; nvars];
        for &(i, k) in exps {
            assert!(i < nvars);
            e[i] += k;
        }
        let mut p = IntPoly::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(e, c);
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Iterate terms in the canonical (exponent-lexicographic) order.
    pub fn terms(&self) -> impl Iterator<Item = (&[u16], &BigInt)> {
        self.terms.iter().map(|(e, c)| (e.as_slice(), c))
    }

    fn insert_add(&mut self, e: Vec<u16>, c: BigInt) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(e) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.nvars, other.nvars);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.insert_add(e.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = -c.clone();
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self, bound: &WorkBound) -> Result<Self> {
        assert_eq!(self.nvars, other.nvars);
        bound.check(
            self.terms.len() as u128 * other.terms.len() as u128,
            "polynomial product",
        )?;
        let mut out = IntPoly::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Vec<u16> = ea
                    .iter()
                    .zip(eb)
                    .map(|(&x, &y)| {
                        x.checked_add(y)
                            .expect("exponent overflow in polynomial product")
                    })
                    .collect();
                out.insert_add(e, ca * cb);
            }
        }
        Ok(out)
    }

    pub fn pow(&self, mut e: u32, bound: &WorkBound) -> Result<Self> {
        let mut base = self.clone();
        let mut acc = IntPoly::constant(self.nvars, 1);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base, bound)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base, bound)?;
            }
        }
        Ok(acc)
    }

    pub fn scale(&self, c: &BigInt) -> Self {
        if c.is_zero() {
            return IntPoly::zero(self.nvars);
        }
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v = &*v * c;
        }
        out
    }

    /// Divide every coefficient exactly by `d`.
    pub fn div_exact(&self, d: &BigInt) -> Result<Self> {
        let mut out = IntPoly::zero(self.nvars);
        for (e, c) in &self.terms {
            let (q, r) = num_integer_div_rem(c, d);
            if !r.is_zero() {
                return Err(Error::Divisibility(format!(
                    "coefficient {c} of a ghost combination is not divisible by {d}"
                )));
            }
            out.terms.insert(e.clone(), q);
        }
        Ok(out)
    }

    /// Evaluate over a ring of characteristic dividing the coefficients'
    /// modulus: coefficients are mapped through [`GaloisRingCtx::from_int`].
    pub fn eval_ring(&self, ctx: &Arc<GaloisRingCtx>, vals: &[RingElem]) -> Result<RingElem> {
        if vals.len() != self.nvars {
            return Err(Error::Shape(format!(
                "{} values for a polynomial in {} variables",
                vals.len(),
                self.nvars
            )));
        }
        let modulus = BigInt::from(ctx.pn());
        let mut acc = ctx.zero();
        for (e, c) in &self.terms {
            let mut r = c % &modulus;
            if r.is_negative() {
                r += &modulus;
            }
            let cint: u64 = r.try_into().expect("reduced coefficient fits u64");
            let mut term = ctx.from_int(cint as i128);
            for (i, &exp) in e.iter().enumerate() {
                if exp > 0 {
                    let vp = ctx.pow(&vals[i], exp as u128)?;
                    term = ctx.mul(&term, &vp)?;
                }
            }
            acc = ctx.add(&acc, &term)?;
        }
        Ok(acc)
    }

    /// Evaluate over the integers.
    pub fn eval_bigint(&self, vals: &[BigInt]) -> BigInt {
        assert_eq!(vals.len(), self.nvars);
        let mut acc = BigInt::zero();
        for (e, c) in &self.terms {
            let mut term = c.clone();
            for (i, &exp) in e.iter().enumerate() {
                for _ in 0..exp {
                    term *= &vals[i];
                }
            }
            acc += term;
        }
        acc
    }
}

fn num_integer_div_rem(a: &BigInt, b: &BigInt) -> (BigInt, BigInt) {
    (a / b, a % b)
}

/// The universal sum and product laws for `W_m` at the prime `p`, as
/// polynomials in `Z[X_0..X_{m-1}, Y_0..Y_{m-1}]` (`X_i` is variable `i`,
/// `Y_i` is variable `m + i`).
#[derive(Debug)]
pub struct WittPolySet {
    pub p: u64,
    pub m: usize,
    /// `sum[n]` is `S_n`.
    pub sum: Vec<IntPoly>,
    /// `prod[n]` is `P_n`.
    pub prod: Vec<IntPoly>,
}

/// Ghost polynomial `w_n` in the variables selected by `vars` (which must
/// have length at least `n + 1`), inside an `nvars`-variable ring.
pub fn ghost_poly(nvars: usize, vars: &[usize], n: usize, p: u64) -> IntPoly {
    let mut acc = IntPoly::zero(nvars);
    for i in 0..=n {
        let pi = BigInt::from(p).pow(i as u32);
        let exp = (p as u128).pow((n - i) as u32);
        let exp16 = u16::try_from(exp).expect("ghost exponent fits u16");
        let term = IntPoly::monomial(nvars, &[(vars[i], exp16)], pi);
        acc = acc.add(&term);
    }
    acc
}

fn compute_laws(p: u64, m: usize, bound: &WorkBound) -> Result<WittPolySet> {
    let nv = 2 * m;
    let xs: Vec<usize> = (0..m).collect();
    let ys: Vec<usize> = (m..2 * m).collect();
    let mut sum: Vec<IntPoly> = Vec::with_capacity(m);
    let mut prod: Vec<IntPoly> = Vec::with_capacity(m);
    for n in 0..m {
        let wx = ghost_poly(nv, &xs, n, p);
        let wy = ghost_poly(nv, &ys, n, p);
        // substitute Y_i -> X_i is not needed: ghost in X uses vars xs, in Y uses ys
        let mut s_rhs = wx.add(&wy);
        let mut p_rhs = wx.mul(&wy, bound)?;
        for i in 0..n {
            let pi = BigInt::from(p).pow(i as u32);
            let e32 = u32::try_from((p as u128).pow((n - i) as u32))
                .map_err(|_| Error::Overflow("law exponent".into()))?;
            s_rhs = s_rhs.sub(&sum[i].pow(e32, bound)?.scale(&pi));
            p_rhs = p_rhs.sub(&prod[i].pow(e32, bound)?.scale(&pi));
        }
        let pn = BigInt::from(p).pow(n as u32);
        sum.push(s_rhs.div_exact(&pn)?);
        prod.push(p_rhs.div_exact(&pn)?);
    }
    Ok(WittPolySet { p, m, sum, prod })
}

fn law_cache() -> &'static Mutex<HashMap<(u64, usize), Arc<WittPolySet>>> {
    static CACHE: OnceLock<Mutex<HashMap<(u64, usize), Arc<WittPolySet>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// The sum/product laws for `(p, m)`, computed once and cached process-wide.
pub fn witt_laws(p: u64, m: usize, bound: &WorkBound) -> Result<Arc<WittPolySet>> {
    if m == 0 || m > MAX_LEN {
        return Err(Error::BadParams(format!(
            "truncation length m = {m} out of range 1..={MAX_LEN}"
        )));
    }
    if let Some(hit) = law_cache().lock().unwrap().get(&(p, m)) {
        return Ok(hit.clone());
    }
    let laws = Arc::new(compute_laws(p, m, bound)?);
    law_cache()
        .lock()
        .unwrap()
        .entry((p, m))
        .or_insert_with(|| laws.clone());
    Ok(laws)
}

/// A length-`m` Witt vector over `F_q`: digits live in a precision-1 ring
/// context.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WittVec {
    pub(crate) digits: Vec<RingElem>,
}

impl WittVec {
    pub fn digits(&self) -> &[RingElem] {
        &self.digits
    }
}

/// Arithmetic context for `W_m(F_q)`.
pub struct WittCtx {
    field: Arc<GaloisRingCtx>,
    m: usize,
    laws: Arc<WittPolySet>,
}

impl WittCtx {
    /// `field` must be a precision-1 context (the residue field `F_q`).
    pub fn new(field: &Arc<GaloisRingCtx>, m: usize, bound: &WorkBound) -> Result<WittCtx> {
        if field.precision() != 1 {
            return Err(Error::BadParams(
                "Witt digits live in a precision-1 (residue field) context".into(),
            ));
        }
        let laws = witt_laws(field.p(), m, bound)?;
        Ok(WittCtx {
            field: field.clone(),
            m,
            laws,
        })
    }

    pub fn field(&self) -> &Arc<GaloisRingCtx> {
        &self.field
    }
    pub fn len(&self) -> usize {
        self.m
    }
    pub fn laws(&self) -> &Arc<WittPolySet> {
        &self.laws
    }

    fn check_vec(&self, a: &WittVec) -> Result<()> {
        if a.digits.len() != self.m {
            return Err(Error::Shape(format!(
                "Witt vector of length {} in a length-{} context",
                a.digits.len(),
                self.m
            )));
        }
        for d in &a.digits {
            if **d.ctx() != *self.field {
                return Err(Error::CtxMismatch("Witt digit over a foreign field".into()));
            }
        }
        Ok(())
    }

    pub fn from_digits(&self, digits: Vec<RingElem>) -> Result<WittVec> {
        let v = WittVec { digits };
        self.check_vec(&v)?;
        Ok(v)
    }

    pub fn zero(&self) -> WittVec {
        WittVec {
            digits: vec![self.field.zero(); self.m],
        }
    }

    pub fn one(&self) -> WittVec {
        let mut digits = vec![self.field.zero(); self.m];
        digits[0] = self.field.one();
        WittVec { digits }
    }

    /// Evaluate the 2m-variable law polynomials at `(a, b)`.
    fn eval_laws(&self, polys: &[IntPoly], a: &WittVec, b: &WittVec) -> Result<WittVec> {
        let vals: Vec<RingElem> = a.digits.iter().chain(&b.digits).cloned().collect();
        let digits = polys
            .iter()
            .map(|poly| poly.eval_ring(&self.field, &vals))
            .collect::<Result<Vec<_>>>()?;
        Ok(WittVec { digits })
    }

    pub fn add(&self, a: &WittVec, b: &WittVec) -> Result<WittVec> {
        self.check_vec(a)?;
        self.check_vec(b)?;
        self.eval_laws(&self.laws.sum, a, b)
    }

    pub fn mul(&self, a: &WittVec, b: &WittVec) -> Result<WittVec> {
        self.check_vec(a)?;
        self.check_vec(b)?;
        self.eval_laws(&self.laws.prod, a, b)
    }

    /// Additive inverse, solved digit by digit: `S_n` is `X_n + Y_n` plus a
    /// polynomial in earlier digits only, so each digit of `b = -a` is
    /// `b_n = -(a_n + f_n(a_{<n}, b_{<n}))`.
    pub fn neg(&self, a: &WittVec) -> Result<WittVec> {
        self.check_vec(a)?;
        let nv = 2 * self.m;
        let mut b_digits: Vec<RingElem> = Vec::with_capacity(self.m);
        for n in 0..self.m {
            let xn = IntPoly::var(nv, n);
            let yn = IntPoly::var(nv, self.m + n);
            let f = self.laws.sum[n].sub(&xn).sub(&yn);
            let mut vals: Vec<RingElem> = a.digits.clone();
            vals.extend(b_digits.iter().cloned());
            // unsolved later digits of b do not occur in f; pad with zeros
            vals.resize(nv, self.field.zero());
            let fv = f.eval_ring(&self.field, &vals)?;
            let digit = self.field.neg(&self.field.add(&a.digits[n], &fv)?)?;
            b_digits.push(digit);
        }
        let b = WittVec { digits: b_digits };
        debug_assert_eq!(self.add(a, &b)?, self.zero());
        Ok(b)
    }

    pub fn sub(&self, a: &WittVec, b: &WittVec) -> Result<WittVec> {
        self.add(a, &self.neg(b)?)
    }

    /// Witt vector Frobenius over a perfect field of characteristic `p`:
    /// componentwise `p`-th power.
    pub fn frobenius(&self, a: &WittVec) -> Result<WittVec> {
        self.check_vec(a)?;
        let digits = a
            .digits
            .iter()
            .map(|d| self.field.frobenius(d))
            .collect::<Result<Vec<_>>>()?;
        Ok(WittVec { digits })
    }

    /// Verschiebung: shift digits up one place (the top digit falls off the
    /// truncation).
    pub fn verschiebung(&self, a: &WittVec) -> Result<WittVec> {
        self.check_vec(a)?;
        let mut digits = Vec::with_capacity(self.m);
        digits.push(self.field.zero());
        digits.extend(a.digits[..self.m - 1].iter().cloned());
        Ok(WittVec { digits })
    }

    /// `k`-fold Witt sum of `a` with itself (`k >= 0`), by binary doubling.
    pub fn mul_int(&self, a: &WittVec, k: u64) -> Result<WittVec> {
        let mut acc = self.zero();
        let mut base = a.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.add(&acc, &base)?;
            }
            e >>= 1;
            if e > 0 {
                base = self.add(&base, &base)?;
            }
        }
        Ok(acc)
    }

    /// The isomorphism `W_m(F_q) -> O/p^m`, `a -> sum_i [a_i^(p^-i)] p^i`.
    ///
    /// `ring` must have the same field parameters and precision `m`.
    pub fn to_galois(&self, a: &WittVec, ring: &Arc<GaloisRingCtx>) -> Result<RingElem> {
        self.check_vec(a)?;
        if ring.field() != self.field.field() || ring.precision() as usize != self.m {
            return Err(Error::CtxMismatch(format!(
                "target ring must share the field and have precision {}",
                self.m
            )));
        }
        let mut acc = ring.zero();
        for (i, d) in a.digits.iter().enumerate() {
            let mut twisted = d.clone();
            for _ in 0..i {
                twisted = self.field.frobenius_inv_residue(&twisted)?;
            }
            let t = ring.teichmuller(&ring.lift_residue(&twisted)?)?;
            acc = ring.add(&acc, &ring.mul_p_pow(&t, i as u32)?)?;
        }
        Ok(acc)
    }

    /// Inverse isomorphism `O/p^m -> W_m(F_q)`: Teichmüller digits, then
    /// `a_i = b_i^(p^i)`.
    pub fn from_galois(&self, x: &RingElem) -> Result<WittVec> {
        let ring = x.ctx();
        if ring.field() != self.field.field() || ring.precision() as usize != self.m {
            return Err(Error::CtxMismatch(format!(
                "source ring must share the field and have precision {}",
                self.m
            )));
        }
        let raw = ring.teich_expand(x)?;
        let mut digits = Vec::with_capacity(self.m);
        for (i, b) in raw.into_iter().enumerate() {
            let mut d = self.field.lift_residue(&b)?;
            for _ in 0..i {
                d = self.field.frobenius(&d)?;
            }
            digits.push(d);
        }
        Ok(WittVec { digits })
    }
}
