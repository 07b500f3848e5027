//! Finite fields `F_q` with `q = p^d` and the truncated unramified
//! extensions `O/p^N` where `O = W(F_q)`.
//!
//! `O/p^N` is the Galois ring `GR(p^N, d) = (Z/p^N)[x] / (f)`, where `f` is a
//! monic degree-`d` polynomial that is irreducible modulo `p`, lifted to
//! `Z/p^N` coefficient by coefficient. Elements are represented on the power
//! basis `1, x, ..., x^(d-1)` as vectors of `d` coefficients in `[0, p^N)`.
//!
//! The modulus is chosen deterministically: candidates `x^d + c_{d-1}x^{d-1}
//! + ... + c_0` are scanned in increasing order of the base-`p` integer
//! `c_0 + c_1 p + ... + c_{d-1} p^{d-1}` (constant coefficient least
//! significant), and the first irreducible candidate wins. For `d = 1` this
//! selects `x`, so `O/p^N = Z/p^N` on the nose; for `(p, d) = (2, 2)` it
//! selects `x^2 + x + 1`.
//!
//! A unit `u` of `F_q` has a unique Teichmüller representative `[u]` in
//! `O/p^N`: the lift with `[u]^q = [u]`. Every element decomposes uniquely
//! as `x = sum_i [a_i] p^i` with digits `a_i in F_q`; [`GaloisRingCtx::teich_expand`]
//! computes the digits and [`GaloisRingCtx::teich_reconstruct`] reassembles
//! them.

use crate::{Error, Result};
use std::fmt;
use std::sync::Arc;

/// A prime `p` and a monic irreducible modulus of degree `d` over `F_p`,
/// defining `F_q`, `q = p^d`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FieldParams {
    pub(crate) p: u64,
    pub(crate) d: usize,
    /// Monic modulus, little-endian coefficients over `F_p`, length `d + 1`.
    pub(crate) modulus: Vec<u64>,
}

impl FieldParams {
    pub fn p(&self) -> u64 {
        self.p
    }
    pub fn d(&self) -> usize {
        self.d
    }
    pub fn q(&self) -> u64 {
        self.p.pow(self.d as u32)
    }
    /// Little-endian coefficients of the modulus over `F_p` (length `d+1`).
    pub fn modulus(&self) -> &[u64] {
        &self.modulus
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut k = 3u64;
    while k.checked_mul(k).map_or(false, |kk| kk <= n) {
        if n % k == 0 {
            return false;
        }
        k += 2;
    }
    true
}

/// Polynomial remainder of `a` by monic `b` with coefficients mod `m`.
fn poly_rem(mut a: Vec<u64>, b: &[u64], m: u64) -> Vec<u64> {
    let db = b.len() - 1;
    debug_assert_eq!(b[db], 1, "modulus must be monic");
    while a.len() > db {
        let da = a.len() - 1;
        let lead = a[da] % m;
        if lead != 0 {
            for i in 0..=db {
                let sub = (lead as u128 * b[i] as u128) % m as u128;
                let idx = da - db + i;
                a[idx] = ((a[idx] as u128 + m as u128 - sub) % m as u128) as u64;
            }
        }
        a.pop();
    }
    a
}

/// Schoolbook product of two coefficient vectors mod `m`.
fn poly_mul(a: &[u64], b: &[u64], m: u64) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            let t = (ai as u128 * bj as u128 + out[i + j] as u128) % m as u128;
            out[i + j] = t as u64;
        }
    }
    out
}

/// True if the monic polynomial `f` (little-endian over `F_p`) has no monic
/// divisor of degree `1..=deg(f)/2`: trial division over all monic
/// candidates, exact and exhaustive.
fn is_irreducible(f: &[u64], p: u64) -> bool {
    let d = f.len() - 1;
    if d == 0 {
        return false;
    }
    if d == 1 {
        return true;
    }
    for deg in 1..=d / 2 {
        // all monic polynomials of degree `deg`: p^deg candidates
        let count = p.pow(deg as u32);
        for v in 0..count {
            let mut g = Vec::with_capacity(deg + 1);
            let mut t = v;
            for _ in 0..deg {
                g.push(t % p);
                t /= p;
            }
            g.push(1);
            let r = poly_rem(f.to_vec(), &g, p);
            if r.iter().all(|&c| c % p == 0) {
                return false;
            }
        }
    }
    true
}

/// Construct `F_q`, `q = p^d`, with the deterministic first-in-scan-order
/// irreducible modulus described in the module documentation.
pub fn make_field(p: u64, d: usize) -> Result<FieldParams> {
    if !is_prime(p) {
        return Err(Error::BadParams(format!("p = {p} is not prime")));
    }
    if d == 0 {
        return Err(Error::BadParams("degree d must be positive".into()));
    }
    let q = (p as u128).checked_pow(d as u32).filter(|&q| q <= 1 << 24);
    let q = match q {
        Some(q) => q as u64,
        None => {
            return Err(Error::BadParams(format!(
                "field size p^d = {p}^{d} too large for the modulus scan"
            )))
        }
    };
    for v in 0..q {
        let mut f = Vec::with_capacity(d + 1);
        let mut t = v;
        for _ in 0..d {
            f.push(t % p);
            t /= p;
        }
        f.push(1);
        if is_irreducible(&f, p) {
            return Ok(FieldParams { p, d, modulus: f });
        }
    }
    unreachable!("an irreducible monic polynomial of every degree exists over F_p")
}

/// The ring `O/p^N` for a chosen `F_q`. Shared behind an [`Arc`] by every
/// element created from it.
#[derive(Debug, PartialEq, Eq, Hash)]
pub struct GaloisRingCtx {
    pub(crate) field: FieldParams,
    /// Precision `N >= 1`.
    pub(crate) precision: u32,
    /// `p^N`.
    pub(crate) pn: u64,
}

/// Construct `O/p^N` over the field described by `params`.
pub fn make_ring(params: FieldParams, precision: u32) -> Result<Arc<GaloisRingCtx>> {
    if precision == 0 {
        return Err(Error::BadParams("precision N must be positive".into()));
    }
    let pn = (params.p as u128).checked_pow(precision);
    let pn = match pn.filter(|&v| v < 1 << 62) {
        Some(v) => v as u64,
        None => {
            return Err(Error::BadParams(format!(
                "p^N = {}^{} exceeds the supported coefficient range",
                params.p, precision
            )))
        }
    };
    Ok(Arc::new(GaloisRingCtx {
        field: params,
        precision,
        pn,
    }))
}

/// Convenience: `make_field` followed by `make_ring`.
pub fn make_ring_pdn(p: u64, d: usize, precision: u32) -> Result<Arc<GaloisRingCtx>> {
    make_ring(make_field(p, d)?, precision)
}

/// An element of `O/p^N`, coefficients on the power basis in `[0, p^N)`.
///
/// Ordering and hashing look only at the coefficient vector; they are
/// meaningful only among elements of one context.
#[derive(Clone)]
pub struct RingElem {
    pub(crate) ctx: Arc<GaloisRingCtx>,
    pub(crate) coeffs: Vec<u64>,
}

impl PartialEq for RingElem {
    fn eq(&self, other: &Self) -> bool {
        *self.ctx == *other.ctx && self.coeffs == other.coeffs
    }
}
impl Eq for RingElem {}

impl PartialOrd for RingElem {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for RingElem {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.coeffs.cmp(&other.coeffs)
    }
}
impl std::hash::Hash for RingElem {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.coeffs.hash(state);
    }
}

impl fmt::Debug for RingElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RingElem{:?}", self.coeffs)
    }
}

impl GaloisRingCtx {
    pub fn p(&self) -> u64 {
        self.field.p
    }
    pub fn d(&self) -> usize {
        self.field.d
    }
    pub fn q(&self) -> u64 {
        self.field.q()
    }
    pub fn precision(&self) -> u32 {
        self.precision
    }
    /// `p^N`, the coefficient modulus.
    pub fn pn(&self) -> u64 {
        self.pn
    }
    pub fn field(&self) -> &FieldParams {
        &self.field
    }

    /// The residue field `O/p` as a precision-1 context over the same
    /// modulus.
    pub fn residue_field(self: &Arc<Self>) -> Arc<GaloisRingCtx> {
        if self.precision == 1 {
            return self.clone();
        }
        Arc::new(GaloisRingCtx {
            field: self.field.clone(),
            precision: 1,
            pn: self.field.p,
        })
    }

    /// Same `(p, d, modulus)` but arbitrary precision `n`.
    pub fn with_precision(self: &Arc<Self>, n: u32) -> Result<Arc<GaloisRingCtx>> {
        if n == self.precision {
            return Ok(self.clone());
        }
        make_ring(self.field.clone(), n)
    }

    fn check_same(&self, other: &RingElem) -> Result<()> {
        if *other.ctx != *self {
            return Err(Error::CtxMismatch(format!(
                "expected GR({}, {}) at precision {}, got GR({}, {}) at precision {}",
                self.p(),
                self.d(),
                self.precision,
                other.ctx.p(),
                other.ctx.d(),
                other.ctx.precision
            )));
        }
        Ok(())
    }

    pub fn zero(self: &Arc<Self>) -> RingElem {
        RingElem {
            ctx: self.clone(),
            coeffs: vec![0; self.field.d],
        }
    }

    pub fn one(self: &Arc<Self>) -> RingElem {
        self.from_int(1)
    }

    /// The image of the integer `v` (constant polynomial), reduced mod `p^N`.
    pub fn from_int(self: &Arc<Self>, v: i128) -> RingElem {
        let m = self.pn as i128;
        let mut c = vec![0u64; self.field.d];
        c[0] = (((v % m) + m) % m) as u64;
        RingElem {
            ctx: self.clone(),
            coeffs: c,
        }
    }

    /// Element with the given little-endian coefficients (length at most
    /// `d`), each reduced mod `p^N`.
    pub fn from_coeffs(self: &Arc<Self>, coeffs: &[u64]) -> Result<RingElem> {
        if coeffs.len() > self.field.d {
            return Err(Error::Shape(format!(
                "coefficient vector of length {} in a degree-{} ring",
                coeffs.len(),
                self.field.d
            )));
        }
        let mut c = vec![0u64; self.field.d];
        for (i, &v) in coeffs.iter().enumerate() {
            c[i] = v % self.pn;
        }
        Ok(RingElem {
            ctx: self.clone(),
            coeffs: c,
        })
    }

    pub fn add(&self, a: &RingElem, b: &RingElem) -> Result<RingElem> {
        self.check_same(a)?;
        self.check_same(b)?;
        let coeffs = a
            .coeffs
            .iter()
            .zip(&b.coeffs)
            .map(|(&x, &y)| ((x as u128 + y as u128) % self.pn as u128) as u64)
            .collect();
        Ok(RingElem {
            ctx: a.ctx.clone(),
            coeffs,
        })
    }

    pub fn sub(&self, a: &RingElem, b: &RingElem) -> Result<RingElem> {
        self.check_same(a)?;
        self.check_same(b)?;
        let m = self.pn as u128;
        let coeffs = a
            .coeffs
            .iter()
            .zip(&b.coeffs)
            .map(|(&x, &y)| ((x as u128 + m - y as u128) % m) as u64)
            .collect();
        Ok(RingElem {
            ctx: a.ctx.clone(),
            coeffs,
        })
    }

    pub fn neg(&self, a: &RingElem) -> Result<RingElem> {
        self.check_same(a)?;
        let m = self.pn;
        let coeffs = a.coeffs.iter().map(|&x| (m - x) % m).collect();
        Ok(RingElem {
            ctx: a.ctx.clone(),
            coeffs,
        })
    }

    pub fn mul(&self, a: &RingElem, b: &RingElem) -> Result<RingElem> {
        self.check_same(a)?;
        self.check_same(b)?;
        let prod = poly_mul(&a.coeffs, &b.coeffs, self.pn);
        let modulus: Vec<u64> = self.field.modulus.iter().map(|&c| c % self.pn).collect();
        let mut red = poly_rem(prod, &modulus, self.pn);
        red.resize(self.field.d, 0);
        Ok(RingElem {
            ctx: a.ctx.clone(),
            coeffs: red,
        })
    }

    /// Multiply by an integer scalar.
    pub fn mul_int(&self, a: &RingElem, v: i128) -> Result<RingElem> {
        self.check_same(a)?;
        let m = self.pn as i128;
        let vm = (((v % m) + m) % m) as u128;
        let coeffs = a
            .coeffs
            .iter()
            .map(|&x| ((x as u128 * vm) % self.pn as u128) as u64)
            .collect();
        Ok(RingElem {
            ctx: a.ctx.clone(),
            coeffs,
        })
    }

    /// `a^e` by binary powering.
    pub fn pow(&self, a: &RingElem, mut e: u128) -> Result<RingElem> {
        self.check_same(a)?;
        let mut base = a.clone();
        let mut acc = a.ctx.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base)?;
            }
            e >>= 1;
            if e > 0 {
                base = self.mul(&base, &base)?;
            }
        }
        Ok(acc)
    }

    /// A unit is an element whose reduction mod `p` is nonzero.
    pub fn is_unit(&self, a: &RingElem) -> Result<bool> {
        self.check_same(a)?;
        Ok(a.coeffs.iter().any(|&c| c % self.p() != 0))
    }

    /// Inverse of a unit: invert in the residue field by Fermat powering,
    /// then Newton-lift (`y <- y(2 - xy)`) to full precision.
    pub fn inv(&self, a: &RingElem) -> Result<RingElem> {
        if !self.is_unit(a)? {
            return Err(Error::NotAUnit(format!("{a:?} has zero residue")));
        }
        let p = self.p();
        // residue inverse via a^(q-2) computed mod (p, f)
        let a0: Vec<u64> = a.coeffs.iter().map(|&c| c % p).collect();
        let modulus_p: Vec<u64> = self.field.modulus.iter().map(|&c| c % p).collect();
        let q = self.q();
        let mut acc = vec![0u64; self.field.d];
        acc[0] = 1;
        let mut base = a0;
        let mut e = if q >= 2 { q - 2 } else { 0 };
        while e > 0 {
            if e & 1 == 1 {
                let t = poly_mul(&acc, &base, p);
                let mut r = poly_rem(t, &modulus_p, p);
                r.resize(self.field.d, 0);
                acc = r;
            }
            e >>= 1;
            if e > 0 {
                let t = poly_mul(&base, &base, p);
                let mut r = poly_rem(t, &modulus_p, p);
                r.resize(self.field.d, 0);
                base = r;
            }
        }
        let mut y = RingElem {
            ctx: a.ctx.clone(),
            coeffs: acc,
        };
        let two = a.ctx.from_int(2);
        let mut gained = 1u32;
        while gained < self.precision {
            let xy = self.mul(a, &y)?;
            let corr = self.sub(&two, &xy)?;
            y = self.mul(&y, &corr)?;
            gained *= 2;
        }
        let check = self.mul(a, &y)?;
        debug_assert_eq!(check, a.ctx.one());
        Ok(y)
    }

    /// p-adic valuation: the largest `v <= N` with `p^v | a` (coefficient by
    /// coefficient). Returns `N` exactly when `a = 0`.
    pub fn valuation(&self, a: &RingElem) -> Result<u32> {
        self.check_same(a)?;
        let p = self.p();
        let mut v = self.precision;
        for &c in &a.coeffs {
            if c == 0 {
                continue;
            }
            let mut cv = 0u32;
            let mut t = c;
            while t % p == 0 {
                t /= p;
                cv += 1;
            }
            v = v.min(cv);
        }
        Ok(v)
    }

    /// Multiply by `p^k`.
    pub fn mul_p_pow(&self, a: &RingElem, k: u32) -> Result<RingElem> {
        let mut shift = 1u128;
        for _ in 0..k {
            shift = (shift * self.p() as u128) % self.pn as u128;
        }
        self.mul_int(a, shift as i128)
    }

    /// Exact division by `p^k`; every coefficient must be divisible by
    /// `p^k`. The answer is well defined modulo `p^(N-k)` and is returned in
    /// the same context with canonical representatives below `p^(N-k)`.
    pub fn div_p_pow_exact(&self, a: &RingElem, k: u32) -> Result<RingElem> {
        self.check_same(a)?;
        if k == 0 {
            return Ok(a.clone());
        }
        let pk = self.p().checked_pow(k).ok_or_else(|| {
            Error::BadParams(format!("p^{k} overflows in division"))
        })?;
        let mut coeffs = Vec::with_capacity(a.coeffs.len());
        for &c in &a.coeffs {
            if c % pk != 0 {
                return Err(Error::Divisibility(format!(
                    "coefficient {c} not divisible by p^{k}"
                )));
            }
            coeffs.push(c / pk);
        }
        Ok(RingElem {
            ctx: a.ctx.clone(),
            coeffs,
        })
    }

    /// Reduce the coefficients mod `p^k` (canonical representative of the
    /// class in `O/p^k`, still carried in this context).
    pub fn reduce_mod_p_pow(&self, a: &RingElem, k: u32) -> Result<RingElem> {
        self.check_same(a)?;
        let kk = k.min(self.precision);
        let pk = self.p().pow(kk);
        let coeffs = a.coeffs.iter().map(|&c| c % pk).collect();
        Ok(RingElem {
            ctx: a.ctx.clone(),
            coeffs,
        })
    }

    /// Image of `a` in the residue field.
    pub fn to_residue(self: &Arc<Self>, a: &RingElem) -> Result<RingElem> {
        self.check_same(a)?;
        let rf = self.residue_field();
        let coeffs = a.coeffs.iter().map(|&c| c % self.p()).collect();
        Ok(RingElem { ctx: rf, coeffs })
    }

    /// Lift an element of the residue field (or of this ring) coefficient by
    /// coefficient into this ring.
    pub fn lift_residue(self: &Arc<Self>, a: &RingElem) -> Result<RingElem> {
        if a.ctx.field != self.field {
            return Err(Error::CtxMismatch(
                "lift of an element over a different field".into(),
            ));
        }
        Ok(RingElem {
            ctx: self.clone(),
            coeffs: a.coeffs.iter().map(|&c| c % self.pn).collect(),
        })
    }

    /// Teichmüller representative of the residue class of `a`: the unique
    /// lift `t` with `t^q = t` and `t = a (mod p)`. Computed by iterating
    /// `t <- t^q`, which gains at least one p-adic digit per step.
    pub fn teichmuller(self: &Arc<Self>, a: &RingElem) -> Result<RingElem> {
        let mut t = self.lift_residue(&{
            // reduce whatever we were given to its residue coefficients
            let coeffs: Vec<u64> = a.coeffs.iter().map(|&c| c % self.p()).collect();
            RingElem {
                ctx: a.ctx.clone(),
                coeffs,
            }
        })?;
        let q = self.q() as u128;
        for _ in 0..self.precision {
            let next = self.pow(&t, q)?;
            if next == t {
                return Ok(t);
            }
            t = next;
        }
        let fixed = self.pow(&t, q)?;
        if fixed != t {
            return Err(Error::Divisibility(
                "Teichmüller iteration failed to stabilize".into(),
            ));
        }
        Ok(t)
    }

    /// Teichmüller digits of `x`: the unique `a_0, ..., a_{N-1} in F_q` with
    /// `x = sum_i [a_i] p^i`. Digits are returned in the residue field.
    pub fn teich_expand(self: &Arc<Self>, x: &RingElem) -> Result<Vec<RingElem>> {
        self.check_same(x)?;
        let rf = self.residue_field();
        let p = self.p();
        let mut digits = Vec::with_capacity(self.precision as usize);
        let mut cur = x.coeffs.clone(); // canonical representatives < p^(N-i)
        for i in 0..self.precision {
            let digit_coeffs: Vec<u64> = cur.iter().map(|&c| c % p).collect();
            let digit = RingElem {
                ctx: rf.clone(),
                coeffs: digit_coeffs.clone(),
            };
            digits.push(digit);
            if i + 1 == self.precision {
                break;
            }
            let t = self.teichmuller(&RingElem {
                ctx: self.clone(),
                coeffs: digit_coeffs,
            })?;
            // subtract the truncation of [a_i] at the remaining precision,
            // then divide exactly by p
            let rem_pow = self.p().pow(self.precision - i);
            let m = rem_pow as u128;
            for (c, &tc) in cur.iter_mut().zip(&t.coeffs) {
                let tv = tc as u128 % m;
                let cv = (*c as u128 + m - tv) % m;
                debug_assert_eq!(cv % p as u128, 0);
                *c = (cv / p as u128) as u64;
            }
        }
        Ok(digits)
    }

    /// Reassemble `sum_i [a_i] p^i` from residue-field digits.
    pub fn teich_reconstruct(self: &Arc<Self>, digits: &[RingElem]) -> Result<RingElem> {
        if digits.len() as u32 > self.precision {
            return Err(Error::Shape(format!(
                "{} digits at precision {}",
                digits.len(),
                self.precision
            )));
        }
        let mut acc = self.zero();
        for (i, a) in digits.iter().enumerate() {
            let t = self.teichmuller(&self.lift_residue(a)?)?;
            let term = self.mul_p_pow(&t, i as u32)?;
            acc = self.add(&acc, &term)?;
        }
        Ok(acc)
    }

    /// Frobenius `x -> x^p`.
    pub fn frobenius(&self, a: &RingElem) -> Result<RingElem> {
        self.pow(a, self.p() as u128)
    }

    /// Inverse Frobenius on the *residue field*: `x -> x^(p^(d-1))`, the
    /// unique `y` with `y^p = x`. Only meaningful at precision 1.
    pub fn frobenius_inv_residue(&self, a: &RingElem) -> Result<RingElem> {
        self.check_same(a)?;
        if self.precision != 1 {
            return Err(Error::BadParams(
                "inverse Frobenius is only defined on the residue field".into(),
            ));
        }
        if self.field.d == 1 {
            return Ok(a.clone());
        }
        let e = (self.p() as u128).pow(self.field.d as u32 - 1);
        self.pow(a, e)
    }

    /// Every element of the ring, in odometer order over coefficient
    /// vectors (constant coefficient fastest). `q^N` elements.
    pub fn all_elements(self: &Arc<Self>) -> Vec<RingElem> {
        let d = self.field.d;
        let m = self.pn;
        let total = (m as u128).pow(d as u32);
        assert!(total <= 1 << 24, "all_elements called on an oversized ring");
        let mut out = Vec::with_capacity(total as usize);
        let mut cur = vec![0u64; d];
        loop {
            out.push(RingElem {
                ctx: self.clone(),
                coeffs: cur.clone(),
            });
            let mut i = 0;
            loop {
                if i == d {
                    return out;
                }
                cur[i] += 1;
                if cur[i] < m {
                    break;
                }
                cur[i] = 0;
                i += 1;
            }
        }
    }
}

impl RingElem {
    pub fn ctx(&self) -> &Arc<GaloisRingCtx> {
        &self.ctx
    }
    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }
    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }
}
