//! Text formats shared by the file-driven subcommands.
//!
//! A matrix file is a structured text document:
//!
//! ```text
//! # comments and blank lines are allowed anywhere
//! p 5
//! d 1
//! N 6
//! n 2
//! 1        0.2*p^1
//! 0.0.1    4.3
//! ```
//!
//! The four header lines declare, in this order, the prime `p`, the residue
//! field degree `d`, the precision `N` (number of base-`p` digits carried),
//! and the matrix size `n`.  They are followed by `n` rows of `n`
//! whitespace-separated entries.
//!
//! Every entry is written as `d0.d1...dk*p^v`: a dot-separated list of at
//! most `N` Teichmueller digits (least significant first) with an optional
//! valuation shift `*p^v`.  Each digit is an integer in `[0, q)` encoding a
//! residue-field element by its polynomial coefficients in base `p`
//! (`digit = c_0 + c_1 p + ... + c_{d-1} p^{d-1}`).  Omitted trailing digits
//! are zero, so the digit list defines one exact element of `O/p^N`.  The
//! shift `v` must be nonnegative in integral contexts; loop-group files may
//! use negative shifts.
//!
//! A vector (chain) file uses the same header followed by any number of
//! rows, one ambient vector of `n` entries per row.

use std::fmt::Write as _;
use std::sync::Arc;
use wittgrass::ring::{make_ring_pdn, GaloisRingCtx, RingElem};

/// A parse failure with its source position (1-based line and column).
#[derive(Debug)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

impl ParseError {
    fn new(line: usize, col: usize, msg: impl Into<String>) -> ParseError {
        ParseError {
            line,
            col,
            msg: msg.into(),
        }
    }

    /// Render with the file name, as `file:line:col: message`.
    pub fn in_file(&self, path: &str) -> String {
        format!("{path}:{}:{}: {}", self.line, self.col, self.msg)
    }
}

/// One parsed entry: Teichmueller digit values and a valuation shift.
#[derive(Debug, Clone)]
pub struct Entry {
    pub digits: Vec<u64>,
    pub v: i64,
}

impl Entry {
    pub fn is_zero(&self) -> bool {
        self.digits.iter().all(|&d| d == 0)
    }
}

/// Header and rows of a matrix or vector file.
#[derive(Debug)]
pub struct ParsedFile {
    pub p: u64,
    pub d: usize,
    pub precision: u32,
    pub n: usize,
    pub rows: Vec<Vec<Entry>>,
}

impl ParsedFile {
    pub fn same_header(&self, other: &ParsedFile) -> bool {
        self.p == other.p
            && self.d == other.d
            && self.precision == other.precision
            && self.n == other.n
    }
}

/// Parse a single entry token.  `q` bounds the digit values; `line` and
/// `base_col` anchor error positions.
fn parse_entry(
    token: &str,
    q: u64,
    precision: u32,
    allow_negative: bool,
    line: usize,
    base_col: usize,
) -> Result<Entry, ParseError> {
    let (digit_part, v) = match token.find("*p^") {
        Some(i) => {
            let vs = &token[i + 3..];
            let v: i64 = vs.parse().map_err(|_| {
                ParseError::new(
                    line,
                    base_col + i + 3,
                    format!("expected an integer valuation shift, found {vs:?}"),
                )
            })?;
            (&token[..i], v)
        }
        None => (token, 0i64),
    };
    if !allow_negative && v < 0 {
        return Err(ParseError::new(
            line,
            base_col,
            format!("negative valuation shift p^{v} is not allowed here"),
        ));
    }
    if digit_part.is_empty() {
        return Err(ParseError::new(line, base_col, "empty digit list"));
    }
    let mut digits = Vec::new();
    let mut col = base_col;
    for piece in digit_part.split('.') {
        let dv: u64 = piece.parse().map_err(|_| {
            ParseError::new(
                line,
                col,
                format!("expected a Teichmueller digit in [0, {q}), found {piece:?}"),
            )
        })?;
        if dv >= q {
            return Err(ParseError::new(
                line,
                col,
                format!("digit {dv} is out of range for the residue field of size {q}"),
            ));
        }
        digits.push(dv);
        col += piece.len() + 1;
    }
    if digits.len() as u32 > precision {
        return Err(ParseError::new(
            line,
            base_col,
            format!("{} digits exceed the declared precision {precision}", digits.len()),
        ));
    }
    Ok(Entry { digits, v })
}

/// Parse a standalone entry expression (command-line argument rather than
/// file token): any digit count, negative shifts allowed, positions are
/// column-only.
pub fn parse_entry_str(expr: &str, q: u64) -> Result<Entry, ParseError> {
    parse_entry(expr.trim(), q, u32::MAX, true, 0, 1)
}

/// Lines that carry content: skip blanks and `#` comments.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| {
            let t = l.trim_start();
            !t.is_empty() && !t.starts_with('#')
        })
}

fn parse_header_line(
    expected_key: &str,
    got: Option<(usize, &str)>,
) -> Result<(usize, u64), ParseError> {
    let (line_no, line) = got.ok_or_else(|| {
        ParseError::new(0, 1, format!("missing header line `{expected_key} <value>`"))
    })?;
    let mut it = line.split_whitespace();
    let key = it.next().unwrap_or("");
    if key != expected_key {
        return Err(ParseError::new(
            line_no,
            line.find(key).map_or(1, |c| c + 1),
            format!("expected header `{expected_key} <value>`, found {key:?}"),
        ));
    }
    let vs = it.next().ok_or_else(|| {
        ParseError::new(line_no, line.len() + 1, format!("header `{expected_key}` has no value"))
    })?;
    let col = line.find(vs).map_or(1, |c| c + 1);
    if let Some(extra) = it.next() {
        return Err(ParseError::new(
            line_no,
            line.rfind(extra).map_or(1, |c| c + 1),
            format!("unexpected trailing token {extra:?} after header `{expected_key}`"),
        ));
    }
    let value: u64 = vs.parse().map_err(|_| {
        ParseError::new(
            line_no,
            col,
            format!("header `{expected_key}` needs a nonnegative integer, found {vs:?}"),
        )
    })?;
    Ok((line_no, value))
}

/// Parse the whole document.  `square` demands exactly `n` rows (a matrix);
/// otherwise any number of rows is accepted (a vector list).
pub fn parse_document(
    text: &str,
    square: bool,
    allow_negative: bool,
) -> Result<ParsedFile, ParseError> {
    let mut lines = content_lines(text);
    let (_, p) = parse_header_line("p", lines.next())?;
    let (dline, d) = parse_header_line("d", lines.next())?;
    let (_, precision) = parse_header_line("N", lines.next())?;
    let (nline, n) = parse_header_line("n", lines.next())?;
    let d = d as usize;
    let n = n as usize;
    if n == 0 {
        return Err(ParseError::new(nline, 1, "matrix size n must be at least 1"));
    }
    let q = match (1..=d).try_fold(1u64, |acc, _| acc.checked_mul(p)) {
        Some(q) if d >= 1 => q,
        _ => {
            return Err(ParseError::new(
                dline,
                1,
                format!("residue field size p^d = {p}^{d} is out of range"),
            ))
        }
    };
    let mut rows: Vec<Vec<Entry>> = Vec::new();
    for (line_no, line) in lines {
        let mut row = Vec::with_capacity(n);
        let mut offset = 0usize;
        let bytes = line.as_bytes();
        while offset < bytes.len() {
            while offset < bytes.len() && bytes[offset].is_ascii_whitespace() {
                offset += 1;
            }
            if offset >= bytes.len() {
                break;
            }
            let start = offset;
            while offset < bytes.len() && !bytes[offset].is_ascii_whitespace() {
                offset += 1;
            }
            let token = &line[start..offset];
            row.push(parse_entry(
                token,
                q,
                precision as u32,
                allow_negative,
                line_no,
                start + 1,
            )?);
        }
        if row.len() != n {
            return Err(ParseError::new(
                line_no,
                1,
                format!("row has {} entries, expected {n}", row.len()),
            ));
        }
        rows.push(row);
    }
    if square && rows.len() != n {
        return Err(ParseError::new(
            0,
            1,
            format!("found {} matrix rows, expected {n}", rows.len()),
        ));
    }
    Ok(ParsedFile {
        p,
        d,
        precision: precision as u32,
        n,
        rows,
    })
}

/// The ring context a parsed file lives in.
pub fn file_ctx(f: &ParsedFile) -> wittgrass::Result<Arc<GaloisRingCtx>> {
    make_ring_pdn(f.p, f.d, f.precision)
}

/// Decode one digit value into a residue-field element: base-`p`
/// positional coefficients.
pub fn decode_digit(rf: &Arc<GaloisRingCtx>, value: u64) -> wittgrass::Result<RingElem> {
    let p = rf.p();
    let mut coeffs = Vec::with_capacity(rf.d());
    let mut rest = value;
    for _ in 0..rf.d() {
        coeffs.push(rest % p);
        rest /= p;
    }
    rf.from_coeffs(&coeffs)
}

/// Encode a residue-field element as its digit value.
pub fn encode_digit(e: &RingElem) -> u64 {
    let p = e.ctx().p();
    let mut acc = 0u64;
    for &c in e.coeffs().iter().rev() {
        acc = acc * p + c;
    }
    acc
}

/// Build the exact element `p^shift * (sum_i teich(digits[i]) p^i)` of
/// `O/p^N`.
pub fn entry_elem(
    ctx: &Arc<GaloisRingCtx>,
    digits: &[u64],
    shift: u32,
) -> wittgrass::Result<RingElem> {
    let rf = ctx.residue_field();
    let dres: Vec<RingElem> = digits
        .iter()
        .map(|&v| decode_digit(&rf, v))
        .collect::<wittgrass::Result<_>>()?;
    let x = ctx.teich_reconstruct(&dres)?;
    ctx.mul_p_pow(&x, shift)
}

/// Render an element as its Teichmueller digit string (trailing zero
/// digits trimmed, at least one digit kept).
pub fn render_digits(e: &RingElem) -> wittgrass::Result<String> {
    let digs = e.ctx().teich_expand(e)?;
    let mut vals: Vec<u64> = digs.iter().map(encode_digit).collect();
    while vals.len() > 1 && vals.last() == Some(&0) {
        vals.pop();
    }
    let mut out = String::new();
    for (i, v) in vals.iter().enumerate() {
        if i > 0 {
            out.push('.');
        }
        let _ = write!(out, "{v}");
    }
    Ok(out)
}

/// Render a partition as comma-separated parts (`0` for the empty type).
pub fn render_partition(parts: &[u32]) -> String {
    if parts.is_empty() {
        return "0".to_string();
    }
    parts
        .iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}
