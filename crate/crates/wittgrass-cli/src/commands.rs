//! One function per subcommand.  Each returns the full stdout payload;
//! errors carry the exit class (usage vs resource).

use crate::fileio::{
    encode_digit, entry_elem, file_ctx, parse_document, render_digits, render_partition, Entry,
    ParsedFile,
};
use num_bigint::Sign;
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::sync::Arc;
use wittgrass::centralext::{cocycle, cocycle_canonical, tame_symbol, LoopGroupElt, ValUnit};
use wittgrass::demazure::{chain_count, enumerate_chains};
use wittgrass::detline::{ChainBasis, TorsionPresentation};
use wittgrass::grassmannian::{census, count_cotype, count_cotype_leq};
use wittgrass::lattice::{snf_square, Mat};
use wittgrass::partitions::{
    dominance_witness, dominates, dominates_clipped_rows, dominates_conjugate_tails,
    dominates_prefix_sums, Partition,
};
use wittgrass::ring::{make_ring_pdn, GaloisRingCtx};
use wittgrass::wittlaws::{witt_laws, IntPoly};
use wittgrass::{Error, WorkBound};

/// Schema version stamped into every JSON document.
pub const SCHEMA_VERSION: u64 = 1;

/// Failure classes map to process exit codes: usage errors exit 2,
/// resource errors (work bound, insufficient precision) exit 3.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Resource(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> CliError {
        match e {
            Error::WorkBound(_) | Error::Precision(_) => CliError::Resource(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

type CmdResult = Result<String, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Requested stdout format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Text,
    Json,
    Csv,
}

fn json_out(v: Value) -> String {
    let mut s = serde_json::to_string_pretty(&v).expect("serializing a finite JSON tree");
    s.push('\n');
    s
}

// ----- shared parsing helpers -----

/// Split a prime power `q = p^d`.
fn prime_power_parts(q: u64) -> Option<(u64, usize)> {
    if q < 2 {
        return None;
    }
    let mut p = q;
    let mut f = 2u64;
    while f * f <= q {
        if q % f == 0 {
            p = f;
            break;
        }
        f += 1;
    }
    let mut rest = q;
    let mut d = 0usize;
    while rest % p == 0 {
        rest /= p;
        d += 1;
    }
    (rest == 1).then_some((p, d))
}

fn parse_q(q: u64) -> Result<(u64, usize), CliError> {
    prime_power_parts(q)
        .ok_or_else(|| usage(format!("q = {q} is not a prime power")))
}

/// Comma-separated weakly decreasing positive parts; `0` denotes the
/// empty partition.
fn parse_partition(s: &str) -> Result<Partition, CliError> {
    let mut parts = Vec::new();
    for tok in s.split(',') {
        let v: u32 = tok.trim().parse().map_err(|_| {
            usage(format!(
                "partition {s:?}: expected comma-separated nonnegative integers, found {tok:?}"
            ))
        })?;
        parts.push(v);
    }
    Partition::new(parts)
        .map_err(|_| usage(format!("partition {s:?} is not weakly decreasing")))
}

fn partition_json(p: &Partition) -> Value {
    Value::Array(p.parts().iter().map(|&x| json!(x)).collect())
}

fn read_file(path: &str) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read {path}: {e}")))
}

fn load_document(
    path: &str,
    square: bool,
    allow_negative: bool,
) -> Result<ParsedFile, CliError> {
    let text = read_file(path)?;
    parse_document(&text, square, allow_negative)
        .map_err(|e| usage(e.in_file(path)))
}

/// Build the integral matrix a parsed square file denotes (all shifts
/// nonnegative by parse mode).
fn integral_matrix(ctx: &Arc<GaloisRingCtx>, f: &ParsedFile) -> Result<Mat, CliError> {
    let mut rows = Vec::with_capacity(f.n);
    for row in &f.rows {
        let mut out = Vec::with_capacity(f.n);
        for e in row {
            let shift = (e.v as u64).min(f.precision as u64) as u32;
            out.push(entry_elem(ctx, &e.digits, shift)?);
        }
        rows.push(out);
    }
    Ok(Mat::from_rows(ctx, f.n, rows)?)
}

/// Build a loop-group element from a parsed file with arbitrary shifts:
/// the common bottom scale is split off and the rest is integral.
fn loop_element(
    ctx: &Arc<GaloisRingCtx>,
    f: &ParsedFile,
    path: &str,
) -> Result<LoopGroupElt, CliError> {
    let s = f
        .rows
        .iter()
        .flatten()
        .filter(|e| !e.is_zero())
        .map(|e| e.v)
        .min()
        .ok_or_else(|| usage(format!("the matrix in {path} is zero")))?;
    let mut rows = Vec::with_capacity(f.n);
    for row in &f.rows {
        let mut out = Vec::with_capacity(f.n);
        for e in row {
            if e.is_zero() {
                out.push(ctx.zero());
            } else {
                let shift = ((e.v - s) as u64).min(f.precision as u64) as u32;
                out.push(entry_elem(ctx, &e.digits, shift)?);
            }
        }
        rows.push(out);
    }
    let mat = Mat::from_rows(ctx, f.n, rows)?;
    Ok(LoopGroupElt::new(s, mat, true)?)
}

fn render_matrix(m: &Mat) -> Result<Vec<Vec<String>>, CliError> {
    let mut out = Vec::with_capacity(m.nrows());
    for i in 0..m.nrows() {
        let mut row = Vec::with_capacity(m.ncols());
        for j in 0..m.ncols() {
            row.push(render_digits(m.get(i, j))?);
        }
        out.push(row);
    }
    Ok(out)
}

// ----- witt-laws -----

/// Canonical term order: ascending total degree, then descending
/// lexicographic on the exponent vector.
fn sorted_terms(poly: &IntPoly) -> Vec<(Vec<u16>, num_bigint::BigInt)> {
    let mut terms: Vec<(Vec<u16>, num_bigint::BigInt)> = poly
        .terms()
        .map(|(e, c)| (e.to_vec(), c.clone()))
        .collect();
    terms.sort_by(|a, b| {
        let da: u64 = a.0.iter().map(|&e| e as u64).sum();
        let db: u64 = b.0.iter().map(|&e| e as u64).sum();
        da.cmp(&db).then_with(|| b.0.cmp(&a.0))
    });
    terms
}

fn var_name(i: usize, m: usize) -> String {
    if i < m {
        format!("X_{i}")
    } else {
        format!("Y_{}", i - m)
    }
}

fn poly_text(poly: &IntPoly, m: usize) -> String {
    let terms = sorted_terms(poly);
    if terms.is_empty() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (i, (exps, c)) in terms.iter().enumerate() {
        let neg = c.sign() == Sign::Minus;
        if i == 0 {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        let mag = c.magnitude().to_string();
        let mut factors: Vec<String> = Vec::new();
        let vars: Vec<String> = exps
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(v, &e)| {
                let name = var_name(v, m);
                if e > 1 {
                    format!("{name}^{e}")
                } else {
                    name
                }
            })
            .collect();
        if mag != "1" || vars.is_empty() {
            factors.push(mag);
        }
        factors.extend(vars);
        out.push_str(&factors.join("*"));
    }
    out
}

fn poly_json(poly: &IntPoly, m: usize) -> Value {
    let terms: Vec<Value> = sorted_terms(poly)
        .iter()
        .map(|(exps, c)| {
            json!({
                "coeff": c.to_string(),
                "exponents": exps.iter().map(|&e| json!(e)).collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({ "text": poly_text(poly, m), "terms": terms })
}

pub fn witt_laws_cmd(p: u64, m: usize, mode: Mode) -> CmdResult {
    let bound = WorkBound::from_env();
    let laws = witt_laws(p, m, &bound)?;
    match mode {
        Mode::Json => {
            let sum: Vec<Value> = laws
                .sum
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let mut v = poly_json(s, m);
                    v["index"] = json!(i);
                    v
                })
                .collect();
            let prod: Vec<Value> = laws
                .prod
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let mut v = poly_json(s, m);
                    v["index"] = json!(i);
                    v
                })
                .collect();
            Ok(json_out(json!({
                "schema_version": SCHEMA_VERSION,
                "command": "witt-laws",
                "p": p,
                "m": m,
                "sum": sum,
                "prod": prod,
            })))
        }
        _ => {
            let mut out = String::new();
            for (i, s) in laws.sum.iter().enumerate() {
                let _ = writeln!(out, "S_{i} = {}", poly_text(s, m));
            }
            for (i, s) in laws.prod.iter().enumerate() {
                let _ = writeln!(out, "P_{i} = {}", poly_text(s, m));
            }
            Ok(out)
        }
    }
}

// ----- dominance -----

fn witness_text(coeffs: &[u64]) -> String {
    let terms: Vec<String> = coeffs
        .iter()
        .enumerate()
        .filter(|(_, &k)| k > 0)
        .map(|(i, &k)| {
            if k == 1 {
                format!("eps_{}", i + 1)
            } else {
                format!("{k}*eps_{}", i + 1)
            }
        })
        .collect();
    if terms.is_empty() {
        "0".to_string()
    } else {
        terms.join(" + ")
    }
}

pub fn dominance_cmd(lhs: &str, rhs: &str, mode: Mode) -> CmdResult {
    let l = parse_partition(lhs)?;
    let r = parse_partition(rhs)?;
    let witness = dominance_witness(&l, &r);
    let m_eps = witness.is_some();
    let m_prefix = dominates_prefix_sums(&l, &r);
    let m_tails = dominates_conjugate_tails(&l, &r);
    let m_rows = dominates_clipped_rows(&l, &r);
    let verdict = dominates(&l, &r);
    match mode {
        Mode::Json => Ok(json_out(json!({
            "schema_version": SCHEMA_VERSION,
            "command": "dominance",
            "lhs": partition_json(&l),
            "rhs": partition_json(&r),
            "methods": {
                "epsilon": m_eps,
                "prefix_sums": m_prefix,
                "conjugate_tails": m_tails,
                "clipped_rows": m_rows,
            },
            "verdict": verdict,
            "witness": witness
                .as_ref()
                .map(|w| Value::Array(w.iter().map(|&k| json!(k)).collect()))
                .unwrap_or(Value::Null),
        }))),
        _ => {
            let mut out = String::new();
            let _ = writeln!(out, "lhs {}", render_partition(l.parts()));
            let _ = writeln!(out, "rhs {}", render_partition(r.parts()));
            let _ = writeln!(out, "epsilon {m_eps}");
            let _ = writeln!(out, "prefix_sums {m_prefix}");
            let _ = writeln!(out, "conjugate_tails {m_tails}");
            let _ = writeln!(out, "clipped_rows {m_rows}");
            let _ = writeln!(out, "verdict {verdict}");
            if let Some(w) = &witness {
                let _ = writeln!(out, "witness {}", witness_text(w));
            }
            Ok(out)
        }
    }
}

// ----- snf -----

pub fn snf_cmd(matrix: &str, mode: Mode) -> CmdResult {
    let f = load_document(matrix, true, false)?;
    let ctx = file_ctx(&f)?;
    let mat = integral_matrix(&ctx, &f)?;
    let snf = snf_square(&mat)?;
    let total: u64 = snf.d_vals.iter().map(|&x| x as u64).sum();
    let cotype = Partition::from_unsorted(snf.d_vals.clone());
    // the determinant unit is well defined only below the remaining window
    let honest = ctx.with_precision(f.precision - total as u32)?;
    let det_unit = render_digits(&honest.from_coeffs(snf.det_unit.coeffs())?)?;
    let divisors: Vec<String> = snf.d_vals.iter().map(|x| x.to_string()).collect();
    match mode {
        Mode::Json => Ok(json_out(json!({
            "schema_version": SCHEMA_VERSION,
            "command": "snf",
            "p": f.p,
            "d": f.d,
            "precision": f.precision,
            "n": f.n,
            "divisors": snf.d_vals.iter().map(|&x| json!(x)).collect::<Vec<_>>(),
            "type": partition_json(&cotype),
            "det_valuation": total,
            "det_unit": det_unit,
            "u": render_matrix(&snf.u)?,
            "u_inv": render_matrix(&snf.u_inv)?,
            "v": render_matrix(&snf.v)?,
            "v_inv": render_matrix(&snf.v_inv)?,
        }))),
        _ => {
            let mut out = String::new();
            let _ = writeln!(out, "n {}", f.n);
            let _ = writeln!(out, "divisors {}", divisors.join(","));
            let _ = writeln!(out, "type {}", render_partition(cotype.parts()));
            let _ = writeln!(out, "det_valuation {total}");
            let _ = writeln!(out, "det_unit {det_unit}");
            Ok(out)
        }
    }
}

// ----- det -----

pub fn det_cmd(matrix: &str, chain: Option<&str>, mode: Mode) -> CmdResult {
    let f = load_document(matrix, true, false)?;
    let ctx = file_ctx(&f)?;
    let mat = integral_matrix(&ctx, &f)?;
    let tp = TorsionPresentation::from_matrix(&mat)?;
    let basis = match chain {
        None => tp.reference_chain(),
        Some(path) => {
            let cf = load_document(path, false, false)?;
            if !cf.same_header(&f) {
                return Err(usage(format!(
                    "chain file {path} has a different header (p, d, N, n) than the matrix file"
                )));
            }
            let mut vectors = Vec::with_capacity(cf.rows.len());
            for row in &cf.rows {
                let mut v = Vec::with_capacity(cf.n);
                for e in row {
                    let shift = (e.v as u64).min(cf.precision as u64) as u32;
                    v.push(entry_elem(&ctx, &e.digits, shift)?);
                }
                vectors.push(v);
            }
            ChainBasis::new(vectors)
        }
    };
    let line = tp.det_torsion(&basis)?;
    let scalar = render_digits(line.scalar())?;
    match mode {
        Mode::Json => Ok(json_out(json!({
            "schema_version": SCHEMA_VERSION,
            "command": "det",
            "p": f.p,
            "d": f.d,
            "precision": f.precision,
            "n": f.n,
            "type": partition_json(tp.module_type()),
            "length": tp.length(),
            "scalar": scalar,
            "degree": line.degree(),
        }))),
        _ => {
            let mut out = String::new();
            let _ = writeln!(out, "scalar {scalar}");
            let _ = writeln!(out, "degree {}", line.degree());
            Ok(out)
        }
    }
}

// ----- count -----

fn csv_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

pub fn count_cmd(
    n: usize,
    c: u32,
    q: u64,
    typ: Option<&str>,
    leq: bool,
    mode: Mode,
) -> CmdResult {
    let (p, d) = parse_q(q)?;
    if n == 0 {
        return Err(usage("the rank n must be at least 1"));
    }
    if leq && typ.is_none() {
        return Err(usage("--leq needs --type"));
    }
    let ctx = make_ring_pdn(p, d, c)?;
    let bound = WorkBound::from_env();
    match typ {
        Some(t) => {
            let lambda = parse_partition(t)?;
            let count = if leq {
                count_cotype_leq(&ctx, n, &lambda, &bound)?
            } else {
                count_cotype(&ctx, n, &lambda, &bound)?
            };
            match mode {
                Mode::Json => Ok(json_out(json!({
                    "schema_version": SCHEMA_VERSION,
                    "command": "count",
                    "n": n,
                    "c": c,
                    "q": q,
                    "type": partition_json(&lambda),
                    "leq": leq,
                    "count": count.to_string(),
                    "strata": Value::Null,
                }))),
                Mode::Csv => {
                    let mut out = String::from("type,count\n");
                    let _ = writeln!(
                        out,
                        "{},{count}",
                        csv_quote(&render_partition(lambda.parts()))
                    );
                    Ok(out)
                }
                Mode::Text => Ok(format!("{count}\n")),
            }
        }
        None => {
            let table = census(&ctx, n, &bound)?;
            let mut rows: Vec<(Partition, u128)> = table.into_iter().collect();
            rows.sort_by(|a, b| {
                (a.0.size(), a.0.parts())
                    .cmp(&(b.0.size(), b.0.parts()))
            });
            match mode {
                Mode::Json => {
                    let strata: Vec<Value> = rows
                        .iter()
                        .map(|(t, k)| {
                            json!({"type": partition_json(t), "count": k.to_string()})
                        })
                        .collect();
                    Ok(json_out(json!({
                        "schema_version": SCHEMA_VERSION,
                        "command": "count",
                        "n": n,
                        "c": c,
                        "q": q,
                        "type": Value::Null,
                        "leq": leq,
                        "count": Value::Null,
                        "strata": strata,
                    })))
                }
                Mode::Csv => {
                    let mut out = String::from("type,count\n");
                    for (t, k) in &rows {
                        let _ =
                            writeln!(out, "{},{k}", csv_quote(&render_partition(t.parts())));
                    }
                    Ok(out)
                }
                Mode::Text => {
                    let mut out = String::new();
                    for (t, k) in &rows {
                        let _ = writeln!(out, "{} {k}", render_partition(t.parts()));
                    }
                    Ok(out)
                }
            }
        }
    }
}

// ----- demazure -----

pub fn demazure_cmd(n: usize, typ: &str, q: u64, fibers: bool, mode: Mode) -> CmdResult {
    let (p, d) = parse_q(q)?;
    if n == 0 {
        return Err(usage("the rank n must be at least 1"));
    }
    let lambda = parse_partition(typ)?;
    if lambda.len() > n {
        return Err(usage(format!(
            "type {} has more parts than the rank {n}",
            render_partition(lambda.parts())
        )));
    }
    let bound = WorkBound::from_env();
    if !fibers {
        let chains = chain_count(n, &lambda, q)?;
        return match mode {
            Mode::Json => Ok(json_out(json!({
                "schema_version": SCHEMA_VERSION,
                "command": "demazure",
                "n": n,
                "q": q,
                "type": partition_json(&lambda),
                "chains": chains.to_string(),
                "fibers": false,
                "strata": Value::Null,
            }))),
            _ => {
                let mut out = String::new();
                let _ = writeln!(out, "type {}", render_partition(lambda.parts()));
                let _ = writeln!(out, "n {n}");
                let _ = writeln!(out, "q {q}");
                let _ = writeln!(out, "chains {chains}");
                Ok(out)
            }
        };
    }
    let prec = lambda.max_part().max(1);
    let ctx = make_ring_pdn(p, d, prec)?;
    let chains = enumerate_chains(&ctx, n, &lambda, &bound)?;
    let total = chains.len() as u128;
    // fiber size of each endpoint, then group endpoints by stratum type
    let mut fiber_sizes: std::collections::BTreeMap<Vec<u64>, (Partition, u128)> =
        std::collections::BTreeMap::new();
    for ch in &chains {
        let (key, t) = match ch.endpoint() {
            Some(m) => (m.sort_key(), m.cokernel_type()?),
            None => (Vec::new(), Partition::empty()),
        };
        fiber_sizes.entry(key).or_insert((t, 0)).1 += 1;
    }
    // stratum type -> fiber size -> number of points
    let mut strata: std::collections::BTreeMap<Vec<u32>, std::collections::BTreeMap<u128, u128>> =
        std::collections::BTreeMap::new();
    for (t, k) in fiber_sizes.into_values() {
        *strata
            .entry(t.parts().to_vec())
            .or_default()
            .entry(k)
            .or_insert(0) += 1;
    }
    let mut rows: Vec<(Vec<u32>, u128, u128)> = Vec::new();
    for (t, sizes) in &strata {
        for (&fiber, &points) in sizes {
            rows.push((t.clone(), points, fiber));
        }
    }
    match mode {
        Mode::Json => {
            let strata_json: Vec<Value> = rows
                .iter()
                .map(|(t, points, fiber)| {
                    json!({
                        "type": Value::Array(t.iter().map(|&x| json!(x)).collect()),
                        "points": points.to_string(),
                        "fiber": fiber.to_string(),
                    })
                })
                .collect();
            Ok(json_out(json!({
                "schema_version": SCHEMA_VERSION,
                "command": "demazure",
                "n": n,
                "q": q,
                "type": partition_json(&lambda),
                "chains": total.to_string(),
                "fibers": true,
                "strata": strata_json,
            })))
        }
        _ => {
            let mut out = String::new();
            let _ = writeln!(out, "type {}", render_partition(lambda.parts()));
            let _ = writeln!(out, "n {n}");
            let _ = writeln!(out, "q {q}");
            let _ = writeln!(out, "chains {total}");
            for (t, points, fiber) in &rows {
                let _ = writeln!(
                    out,
                    "stratum {} points {points} fiber {fiber}",
                    render_partition(t)
                );
            }
            let identity: Vec<String> = rows
                .iter()
                .map(|(_, points, fiber)| format!("{points}*{fiber}"))
                .collect();
            let _ = writeln!(out, "identity {total} = {}", identity.join(" + "));
            Ok(out)
        }
    }
}

// ----- tame -----

/// Parse an expression `d0.d1...*p^v` into a split valuation and unit.
fn parse_val_unit(expr: &str, p: u64, d: usize) -> Result<ValUnit, CliError> {
    let q = (1..=d)
        .try_fold(1u64, |acc, _| acc.checked_mul(p))
        .filter(|_| d >= 1)
        .ok_or_else(|| usage(format!("residue field size p^d = {p}^{d} is out of range")))?;
    let entry: Entry = crate::fileio::parse_entry_str(expr, q)
        .map_err(|e| usage(format!("expression {expr:?}, column {}: {}", e.col, e.msg)))?;
    if entry.is_zero() {
        return Err(usage(format!("expression {expr:?} denotes zero, which has no symbol")));
    }
    let prec = entry.digits.len() as u32;
    let ctx = make_ring_pdn(p, d, prec)?;
    let x = entry_elem(&ctx, &entry.digits, 0)?;
    let split = ValUnit::from_ring(&x)?;
    let v = entry
        .v
        .checked_add(split.valuation())
        .ok_or_else(|| usage("valuation shift out of range"))?;
    Ok(ValUnit::new(v, split.unit().clone())?)
}

pub fn tame_cmd(p: u64, d: usize, a: &str, b: &str, mode: Mode) -> CmdResult {
    let va = parse_val_unit(a, p, d)?;
    let vb = parse_val_unit(b, p, d)?;
    let sym = tame_symbol(&va, &vb)?;
    let digit = encode_digit(sym.residue());
    match mode {
        Mode::Json => Ok(json_out(json!({
            "schema_version": SCHEMA_VERSION,
            "command": "tame",
            "p": p,
            "d": d,
            "q": va.unit().ctx().q(),
            "a": {"valuation": va.valuation(), "unit": render_digits(va.unit())?},
            "b": {"valuation": vb.valuation(), "unit": render_digits(vb.unit())?},
            "symbol": digit.to_string(),
        }))),
        _ => Ok(format!("{digit}\n")),
    }
}

// ----- cocycle -----

pub fn cocycle_cmd(
    p: u64,
    d: usize,
    n: usize,
    g_path: &str,
    h_path: &str,
    a: Option<i64>,
    mode: Mode,
) -> CmdResult {
    let gf = load_document(g_path, true, true)?;
    let hf = load_document(h_path, true, true)?;
    if !gf.same_header(&hf) {
        return Err(usage(format!(
            "{g_path} and {h_path} declare different headers (p, d, N, n)"
        )));
    }
    if gf.p != p || gf.d != d || gf.n != n {
        return Err(usage(format!(
            "{g_path} declares p {} d {} n {}, flags say p {p} d {d} n {n}",
            gf.p, gf.d, gf.n
        )));
    }
    let ctx = file_ctx(&gf)?;
    let g = loop_element(&ctx, &gf, g_path)?;
    let h = loop_element(&ctx, &hf, h_path)?;
    let a_used = a.unwrap_or_else(|| h.min_scale());
    let value = match a {
        Some(scale) => cocycle(&g, &h, scale)?,
        None => cocycle_canonical(&g, &h)?,
    };
    let digit = encode_digit(value.residue());
    match mode {
        Mode::Json => Ok(json_out(json!({
            "schema_version": SCHEMA_VERSION,
            "command": "cocycle",
            "p": p,
            "d": d,
            "n": n,
            "q": ctx.q(),
            "precision": gf.precision,
            "a": a_used,
            "value": digit.to_string(),
        }))),
        _ => Ok(format!("{digit}\n")),
    }
}
