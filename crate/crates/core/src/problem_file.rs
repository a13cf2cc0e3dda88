//! Text format for problem instances.
//!
//! ```text
//! %%SocNewtonProblem 1
//! kind pwls
//! n 2
//! matrix inline
//! 5.0 1.0
//! 1.0 0.0
//! b
//! 13.0 3.0
//! planted
//! 2.0 1.0
//! provenance {"n":2,"kind":"dense","seed":7}
//! end
//! ```
//!
//! * `kind` is `pwls` (vector section `b`) or `lsoccp` (vector section `q`).
//! * `matrix inline` is followed by `n` rows of `n` numbers; `matrix mtx PATH`
//!   refers to a Matrix Market file, relative paths being resolved against
//!   the directory of the problem file.
//! * `planted` (pwls only) and `provenance` (a one-line JSON generator spec)
//!   are optional.
//! * Blank lines and lines starting with `#` are ignored on input.
//!
//! Numbers are written in shortest round-trip form, so writing a file that
//! was read back reproduces it byte for byte.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::linalg::{mm, Matrix};
use crate::lsoccp::LsoccpProblem;
use crate::probgen::GenSpec;
use crate::pwls::PwlsProblem;

pub const MAGIC: &str = "%%SocNewtonProblem";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Problem {
    Pwls(PwlsProblem),
    Lsoccp(LsoccpProblem),
}

impl Problem {
    pub fn dim(&self) -> usize {
        match self {
            Problem::Pwls(p) => p.dim(),
            Problem::Lsoccp(p) => p.dim(),
        }
    }

    pub fn matrix(&self) -> &Matrix {
        match self {
            Problem::Pwls(p) => p.t(),
            Problem::Lsoccp(p) => p.m(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Problem::Pwls(_) => "pwls",
            Problem::Lsoccp(_) => "lsoccp",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemFile {
    pub problem: Problem,
    pub provenance: Option<GenSpec>,
    /// Where the matrix lives when it is not stored inline, as written in the file.
    pub matrix_path: Option<PathBuf>,
}

impl ProblemFile {
    pub fn new(problem: Problem) -> Self {
        Self {
            problem,
            provenance: None,
            matrix_path: None,
        }
    }

    /// Renders the file text. The matrix is inlined unless `matrix_path` is set.
    pub fn to_text(&self) -> String {
        let p = &self.problem;
        let n = p.dim();
        let mut s = String::new();
        let _ = writeln!(s, "{MAGIC} {FORMAT_VERSION}");
        let _ = writeln!(s, "kind {}", p.kind_name());
        let _ = writeln!(s, "n {n}");
        match &self.matrix_path {
            Some(path) => {
                let _ = writeln!(s, "matrix mtx {}", path.display());
            }
            None => {
                s.push_str("matrix inline\n");
                let v = p.matrix().to_dense_values();
                for row in v.chunks(n) {
                    push_numbers(&mut s, row);
                }
            }
        }
        let (name, vec) = match p {
            Problem::Pwls(q) => ("b", q.b()),
            Problem::Lsoccp(q) => ("q", q.q()),
        };
        let _ = writeln!(s, "{name}");
        push_numbers(&mut s, vec);
        if let Problem::Pwls(q) = p {
            if let Some(x) = q.planted_solution() {
                s.push_str("planted\n");
                push_numbers(&mut s, x);
            }
        }
        if let Some(g) = &self.provenance {
            let json = serde_json::to_string(g).expect("generator specs serialize");
            let _ = writeln!(s, "provenance {json}");
        }
        s.push_str("end\n");
        s
    }

    /// Writes the problem file and, for `matrix mtx`, the Matrix Market side file.
    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(rel) = &self.matrix_path {
            let target = resolve(path, rel);
            mm::write_path(self.problem.matrix(), &target)?;
        }
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Parses file text; `base_dir` anchors relative Matrix Market paths.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| perr(0, format!("unexpected end of file, expected {what}")))
        };

        let (no, header) = next("header")?;
        let mut h = header.split_whitespace();
        if h.next() != Some(MAGIC) {
            return Err(perr(no, format!("missing `{MAGIC}` header")));
        }
        let version: u32 = parse_tok(h.next(), no, "format version")?;
        if version != FORMAT_VERSION {
            return Err(perr(no, format!("unsupported format version {version}")));
        }

        let (no, kind_line) = next("kind")?;
        let kind = keyword_value(kind_line, "kind", no)?;
        if kind != "pwls" && kind != "lsoccp" {
            return Err(perr(no, format!("unknown kind `{kind}`")));
        }
        let (no, n_line) = next("n")?;
        let n: usize = parse_tok(Some(keyword_value(n_line, "n", no)?), no, "dimension")?;
        if n == 0 {
            return Err(perr(no, "dimension must be >= 1"));
        }

        let (no, m_line) = next("matrix")?;
        let mut m_toks = m_line.split_whitespace();
        if m_toks.next() != Some("matrix") {
            return Err(perr(no, "expected `matrix inline` or `matrix mtx PATH`"));
        }
        let (matrix, matrix_path) = match m_toks.next() {
            Some("inline") => {
                let mut v = Vec::with_capacity(n * n);
                for _ in 0..n {
                    let (no, row) = next("matrix row")?;
                    v.extend(parse_numbers(row, n, no)?);
                }
                (Matrix::dense(n, n, v)?, None)
            }
            Some("mtx") => {
                let rest = m_line.splitn(3, char::is_whitespace).nth(2).map(str::trim);
                let rel = PathBuf::from(rest.filter(|r| !r.is_empty()).ok_or_else(|| perr(no, "missing path"))?);
                let full = if rel.is_absolute() { rel.clone() } else { base_dir.join(&rel) };
                let m = mm::read_path(&full).map_err(|e| match e {
                    Error::Parse { line, msg } => {
                        perr(no, format!("{}: line {line}: {msg}", full.display()))
                    }
                    Error::Io(io) => perr(no, format!("{}: {io}", full.display())),
                    other => other,
                })?;
                if m.n_rows() != n || m.n_cols() != n {
                    return Err(perr(
                        no,
                        format!("matrix is {}x{}, header says n = {n}", m.n_rows(), m.n_cols()),
                    ));
                }
                (m, Some(rel))
            }
            _ => return Err(perr(no, "expected `matrix inline` or `matrix mtx PATH`")),
        };

        let vec_name = if kind == "pwls" { "b" } else { "q" };
        let (no, name) = next(vec_name)?;
        if name != vec_name {
            return Err(perr(no, format!("expected section `{vec_name}`")));
        }
        let (no, row) = next("vector")?;
        let rhs = parse_numbers(row, n, no)?;

        let mut planted = None;
        let mut provenance = None;
        loop {
            let (no, line) = next("`end`")?;
            let key = line.split_whitespace().next().unwrap_or("");
            match key {
                "end" if line == "end" => break,
                "planted" if kind == "pwls" && planted.is_none() => {
                    let (no, row) = next("planted solution")?;
                    planted = Some(parse_numbers(row, n, no)?);
                }
                "provenance" if provenance.is_none() => {
                    let json = line["provenance".len()..].trim();
                    provenance = Some(
                        serde_json::from_str::<GenSpec>(json)
                            .map_err(|e| perr(no, format!("bad provenance: {e}")))?,
                    );
                }
                _ => return Err(perr(no, format!("unexpected line `{line}`"))),
            }
        }
        if let Some((no, line)) = lines.next() {
            return Err(perr(no, format!("content after `end`: `{line}`")));
        }

        let problem = if kind == "pwls" {
            let mut p = PwlsProblem::new(matrix, rhs).map_err(|e| perr(0, e.to_string()))?;
            if let Some(x) = planted {
                p = p.with_planted_solution(x)?;
            }
            Problem::Pwls(p)
        } else {
            Problem::Lsoccp(LsoccpProblem::new(matrix, rhs).map_err(|e| perr(0, e.to_string()))?)
        };
        Ok(Self {
            problem,
            provenance,
            matrix_path,
        })
    }
}

fn resolve(problem_path: &Path, rel: &Path) -> PathBuf {
    if rel.is_absolute() {
        rel.to_path_buf()
    } else {
        problem_path.parent().unwrap_or(Path::new(".")).join(rel)
    }
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn push_numbers(s: &mut String, v: &[f64]) {
    for (i, x) in v.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{x:?}");
    }
    s.push('\n');
}

fn keyword_value<'a>(line: &'a str, key: &str, no: usize) -> Result<&'a str> {
    let mut t = line.split_whitespace();
    match (t.next(), t.next(), t.next()) {
        (Some(k), Some(v), None) if k == key => Ok(v),
        _ => Err(perr(no, format!("expected `{key} VALUE`"))),
    }
}

fn parse_tok<T: std::str::FromStr>(tok: Option<&str>, no: usize, what: &str) -> Result<T> {
    tok.ok_or_else(|| perr(no, format!("missing {what}")))?
        .parse()
        .map_err(|_| perr(no, format!("cannot parse {what}")))
}

fn parse_numbers(line: &str, n: usize, no: usize) -> Result<Vec<f64>> {
    let v: Vec<f64> = line
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| perr(no, format!("cannot parse number `{t}`"))))
        .collect::<Result<_>>()?;
    if v.len() != n {
        return Err(perr(no, format!("expected {n} numbers, found {}", v.len())));
    }
    Ok(v)
}

/// Reads a vector from text: numbers separated by whitespace, commas,
/// semicolons or parentheses.
pub fn parse_vector_text(text: &str) -> Result<Vec<f64>> {
    text.split(|c: char| c.is_whitespace() || matches!(c, ',' | ';' | '(' | ')' | '[' | ']'))
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| perr(0, format!("cannot parse number `{t}`")))
        })
        .collect()
}
