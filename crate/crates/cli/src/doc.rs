//! Problem documents.
//!
//! The native format is JSON:
//!
//! ```json
//! {
//!   "format": "sdfeas-problem",
//!   "version": 1,
//!   "n": 2,
//!   "span": [ [[1, 0], [0]] ],
//!   "c": [[0, 1], [0]]
//! }
//! ```
//!
//! Every matrix is its upper triangle in row-major order, written either as
//! one flat list or as a list of rows (row `i` holds `n - i` entries).
//! Instead of `span` and `c` a document may give `"equations"`, a list of
//! `{"a": matrix, "b": number}` meaning `⟨a, x⟩ = b`.
//!
//! Files ending in `.dat-s` are read as SDPA sparse input instead; see
//! [`parse_sdpa`].

use std::fmt;
use std::path::Path;

use sdfeas::symlin::packed_len;
use sdfeas::{Config, Sdfp, SymMatrix};
use serde::{Deserialize, Serialize};

pub const PROBLEM_FORMAT: &str = "sdfeas-problem";
pub const PROBLEM_VERSION: u32 = 1;

/// Why a document could not be turned into a problem.
#[derive(Debug, Clone, PartialEq)]
pub struct DocError {
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl DocError {
    fn at(line: usize, column: usize, message: impl Into<String>) -> Self {
        DocError { line: Some(line), column: Some(column), message: message.into() }
    }

    fn plain(message: impl Into<String>) -> Self {
        DocError { line: None, column: None, message: message.into() }
    }
}

impl fmt::Display for DocError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "{l}:{c}: {}", self.message),
            _ => f.write_str(&self.message),
        }
    }
}

impl From<serde_json::Error> for DocError {
    fn from(e: serde_json::Error) -> Self {
        // serde_json appends " at line L column C" to its own messages.
        let msg = e.to_string();
        let msg = match msg.rfind(" at line ") {
            Some(i) => msg[..i].to_string(),
            None => msg,
        };
        DocError::at(e.line(), e.column(), msg)
    }
}

/// Upper triangle, flat or by rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Upper {
    Flat(Vec<f64>),
    Rows(Vec<Vec<f64>>),
}

impl Upper {
    fn to_matrix(&self, n: usize, what: &str) -> Result<SymMatrix, DocError> {
        let flat = match self {
            Upper::Flat(v) => v.clone(),
            Upper::Rows(rows) => {
                if rows.len() != n {
                    return Err(DocError::plain(format!("{what}: expected {n} rows, found {}", rows.len())));
                }
                for (i, r) in rows.iter().enumerate() {
                    if r.len() != n - i {
                        return Err(DocError::plain(format!(
                            "{what}: row {i} should hold {} entries, found {}",
                            n - i,
                            r.len()
                        )));
                    }
                }
                rows.concat()
            }
        };
        if flat.len() != packed_len(n) {
            return Err(DocError::plain(format!(
                "{what}: expected {} upper-triangle entries for n = {n}, found {}",
                packed_len(n),
                flat.len()
            )));
        }
        SymMatrix::new(n, flat).map_err(|e| DocError::plain(format!("{what}: {e}")))
    }

    /// Row form of a matrix.
    pub fn rows_of(m: &SymMatrix) -> Upper {
        let n = m.dim();
        Upper::Rows((0..n).map(|i| (i..n).map(|j| m.get(i, j)).collect()).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equation {
    pub a: Upper,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDocument {
    pub format: String,
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<Vec<Upper>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Upper>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equations: Option<Vec<Equation>>,
}

impl ProblemDocument {
    /// Span-form document for `p`.
    pub fn from_problem(p: &Sdfp, name: Option<String>) -> Self {
        ProblemDocument {
            format: PROBLEM_FORMAT.into(),
            version: PROBLEM_VERSION,
            name,
            n: p.n(),
            span: Some(p.basis().iter().map(Upper::rows_of).collect()),
            c: Some(Upper::rows_of(p.anchor())),
            equations: None,
        }
    }

    pub fn to_problem(&self, cfg: &Config) -> Result<Sdfp, DocError> {
        if self.format != PROBLEM_FORMAT {
            return Err(DocError::plain(format!("format must be \"{PROBLEM_FORMAT}\", found \"{}\"", self.format)));
        }
        if self.version != PROBLEM_VERSION {
            return Err(DocError::plain(format!("unsupported version {}", self.version)));
        }
        let n = self.n;
        if n == 0 {
            return Err(DocError::plain("n must be positive"));
        }
        match (&self.span, &self.c, &self.equations) {
            (Some(span), Some(c), None) => {
                let gens = span
                    .iter()
                    .enumerate()
                    .map(|(i, m)| m.to_matrix(n, &format!("span[{i}]")))
                    .collect::<Result<Vec<_>, _>>()?;
                let c = c.to_matrix(n, "c")?;
                Sdfp::from_spanning(n, gens, c, cfg).map_err(|e| DocError::plain(format!("span: {e}")))
            }
            (None, None, Some(eqs)) => {
                let eqs = eqs
                    .iter()
                    .enumerate()
                    .map(|(i, e)| {
                        if !e.b.is_finite() {
                            return Err(DocError::plain(format!("equations[{i}].b is not finite")));
                        }
                        Ok((e.a.to_matrix(n, &format!("equations[{i}].a"))?, e.b))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Sdfp::from_equations(n, &eqs, cfg).map_err(|e| DocError::plain(format!("equations: {e}")))
            }
            (None, Some(_), Some(_)) | (Some(_), _, Some(_)) => {
                Err(DocError::plain("give either \"span\" and \"c\" or \"equations\", not both"))
            }
            (Some(_), None, None) => Err(DocError::plain("span form needs \"c\"")),
            (None, Some(_), None) => Err(DocError::plain("span form needs \"span\" (use [] for L = {0})")),
            (None, None, None) => Err(DocError::plain("document needs \"span\" and \"c\", or \"equations\"")),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents serialize")
    }
}

pub fn parse_json(text: &str, cfg: &Config) -> Result<Sdfp, DocError> {
    let doc: ProblemDocument = serde_json::from_str(text)?;
    doc.to_problem(cfg)
}

/// Reads a problem from `path`, choosing the format from the extension.
pub fn load(path: &Path, cfg: &Config) -> Result<Sdfp, DocError> {
    let text = std::fs::read_to_string(path).map_err(|e| DocError::plain(format!("cannot read: {e}")))?;
    let sdpa = path.extension().and_then(|e| e.to_str()).is_some_and(|e| e == "dat-s");
    if sdpa {
        parse_sdpa(&text, cfg)
    } else {
        parse_json(&text, cfg)
    }
}

struct Token<'a> {
    text: &'a str,
    line: usize,
    column: usize,
}

/// Splits on whitespace and the punctuation SDPA allows around numbers.
fn tokens(text: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut in_header = true;
    for (ln, line) in text.lines().enumerate() {
        let trimmed = line.trim_start();
        if in_header && (trimmed.starts_with('"') || trimmed.starts_with('*')) {
            continue;
        }
        let mut start = None;
        for (i, ch) in line.char_indices().chain(std::iter::once((line.len(), ' '))) {
            let sep = ch.is_whitespace() || matches!(ch, ',' | '{' | '}' | '(' | ')');
            match (sep, start) {
                (false, None) => start = Some(i),
                (true, Some(s)) => {
                    out.push(Token { text: &line[s..i], line: ln + 1, column: s + 1 });
                    in_header = false;
                    start = None;
                }
                _ => {}
            }
        }
    }
    out
}

struct Cursor<'a> {
    toks: Vec<Token<'a>>,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn next(&mut self, what: &str) -> Result<&Token<'a>, DocError> {
        let t = self.toks.get(self.pos).ok_or_else(|| DocError::plain(format!("unexpected end of input, expected {what}")))?;
        self.pos += 1;
        Ok(t)
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    /// Drops the rest of the current line, where SDPA files keep comments.
    fn finish_line(&mut self) {
        if let Some(line) = self.pos.checked_sub(1).map(|p| self.toks[p].line) {
            while self.toks.get(self.pos).is_some_and(|t| t.line == line) {
                self.pos += 1;
            }
        }
    }

    fn int(&mut self, what: &str) -> Result<(i64, usize, usize), DocError> {
        let t = self.next(what)?;
        let v = t.text.parse::<i64>().map_err(|_| DocError::at(t.line, t.column, format!("expected {what}, found \"{}\"", t.text)))?;
        Ok((v, t.line, t.column))
    }

    fn num(&mut self, what: &str) -> Result<f64, DocError> {
        let t = self.next(what)?;
        t.text
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| DocError::at(t.line, t.column, format!("expected {what}, found \"{}\"", t.text)))
    }
}

/// Reads the equality-form subset of SDPA sparse input: a single
/// semidefinite block, constraints `⟨F_i, X⟩ = c_i` for `i = 1..m`. The
/// objective matrix `F_0` is read and discarded. Text after the leading
/// fields of a line is ignored.
pub fn parse_sdpa(text: &str, cfg: &Config) -> Result<Sdfp, DocError> {
    let mut cur = Cursor { toks: tokens(text), pos: 0 };

    let (m, l, c) = cur.int("the constraint count")?;
    if m < 0 {
        return Err(DocError::at(l, c, "constraint count is negative"));
    }
    let m = m as usize;
    cur.finish_line();
    let (blocks, l, c) = cur.int("the block count")?;
    if blocks != 1 {
        return Err(DocError::at(l, c, "only a single block is supported"));
    }
    cur.finish_line();
    let (n, l, c) = cur.int("the block size")?;
    if n <= 0 {
        return Err(DocError::at(l, c, "only a positive (semidefinite) block size is supported"));
    }
    let n = n as usize;
    cur.finish_line();
    let b = (0..m).map(|_| cur.num("a right-hand side entry")).collect::<Result<Vec<_>, _>>()?;
    cur.finish_line();

    let mut mats = vec![SymMatrix::zeros(n); m + 1];
    while !cur.at_end() {
        let (mat, l, c) = cur.int("a matrix number")?;
        if mat < 0 || mat as usize > m {
            return Err(DocError::at(l, c, format!("matrix number {mat} outside 0..={m}")));
        }
        let (blk, l, c) = cur.int("a block number")?;
        if blk != 1 {
            return Err(DocError::at(l, c, "block number must be 1"));
        }
        let mut idx = [0usize; 2];
        for slot in &mut idx {
            let (v, l, c) = cur.int("an index")?;
            if v < 1 || v as usize > n {
                return Err(DocError::at(l, c, format!("index {v} outside 1..={n}")));
            }
            *slot = v as usize - 1;
        }
        let v = cur.num("an entry value")?;
        cur.finish_line();
        mats[mat as usize].set(idx[0].min(idx[1]), idx[0].max(idx[1]), v);
    }
    let eqs: Vec<(SymMatrix, f64)> = mats.into_iter().skip(1).zip(b).collect();
    Sdfp::from_equations(n, &eqs, cfg).map_err(|e| DocError::plain(format!("constraints: {e}")))
}
