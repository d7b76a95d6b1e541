//! Extended alist format for labeled non-binary codes.
//!
//! ```text
//! N M q [prim_poly]
//! max_var_degree max_check_degree
//! <N variable degrees>
//! <M check degrees>
//! <N lines: "check:exp" entries, 1-based check index, label = alpha^exp>
//! <M lines: "var:exp" entries, 1-based variable index>
//! ```
//!
//! `prim_poly` (hex) is written only when the field does not use the default
//! primitive polynomial for its degree. A multi-edge appears as a repeated entry.
//! Blank lines are ignored.

use std::collections::HashMap;
use std::fmt::Write;

use crate::error::{Error, Result};
use crate::gf::{FieldElement, FieldParams};

use super::{Edge, TannerGraph};

pub fn export_code(g: &TannerGraph) -> String {
    let f = g.field();
    let mut out = String::new();
    write!(out, "{} {} {}", g.n_vars(), g.n_checks(), f.q()).unwrap();
    if !f.is_default_poly() {
        write!(out, " {:#x}", f.prim_poly()).unwrap();
    }
    out.push('\n');
    let dv: Vec<usize> = (0..g.n_vars()).map(|v| g.var_degree(v)).collect();
    let dc: Vec<usize> = (0..g.n_checks()).map(|c| g.check_degree(c)).collect();
    writeln!(
        out,
        "{} {}",
        dv.iter().max().copied().unwrap_or(0),
        dc.iter().max().copied().unwrap_or(0)
    )
    .unwrap();
    writeln!(out, "{}", join(dv.iter())).unwrap();
    writeln!(out, "{}", join(dc.iter())).unwrap();
    let exp = |e: &Edge| f.log(e.label).expect("labels are nonzero");
    for v in 0..g.n_vars() {
        let items = g.var_edges(v).iter().map(|&e| {
            let e = g.edge(e);
            format!("{}:{}", e.check + 1, exp(e))
        });
        writeln!(out, "{}", join(items)).unwrap();
    }
    for c in 0..g.n_checks() {
        let items = g.check_edges(c).iter().map(|&e| {
            let e = g.edge(e);
            format!("{}:{}", e.var + 1, exp(e))
        });
        writeln!(out, "{}", join(items)).unwrap();
    }
    out
}

fn join<T: ToString>(items: impl Iterator<Item = T>) -> String {
    items.map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self, what: &str) -> Result<(usize, Vec<&'a str>)> {
        for (i, line) in self.inner.by_ref() {
            self.last = i + 1;
            let toks: Vec<&str> = line.split_whitespace().collect();
            if !toks.is_empty() {
                return Ok((i + 1, toks));
            }
        }
        Err(Error::Parse { line: self.last + 1, msg: format!("unexpected end of input, expected {what}") })
    }
}

fn num<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T> {
    tok.parse().map_err(|_| Error::Parse { line, msg: format!("invalid {what} '{tok}'") })
}

fn perr<T>(line: usize, msg: impl Into<String>) -> Result<T> {
    Err(Error::Parse { line, msg: msg.into() })
}

pub fn import_code(text: &str) -> Result<TannerGraph> {
    let mut lines = Lines { inner: text.lines().enumerate(), last: 0 };

    let (ln, head) = lines.next("header")?;
    if head.len() != 3 && head.len() != 4 {
        return perr(ln, "header must be 'N M q [prim_poly]'");
    }
    let n: usize = num(head[0], ln, "N")?;
    let m_checks: usize = num(head[1], ln, "M")?;
    let q: usize = num(head[2], ln, "q")?;
    if !q.is_power_of_two() || q < 4 {
        return perr(ln, format!("q={q} is not a power of two >= 4"));
    }
    let m = q.trailing_zeros();
    let field = match head.get(3) {
        None => FieldParams::new(m),
        Some(tok) => {
            let poly = u32::from_str_radix(tok.trim_start_matches("0x"), 16)
                .map_err(|_| Error::Parse { line: ln, msg: format!("invalid polynomial '{tok}'") })?;
            FieldParams::with_poly(m, poly)
        }
    }
    .map_err(|e| Error::Parse { line: ln, msg: e.to_string() })?;

    let (ln, maxes) = lines.next("maximum degrees")?;
    if maxes.len() != 2 {
        return perr(ln, "expected two maximum degrees");
    }
    let (ln_dv, dv) = lines.next("variable degrees")?;
    let dv: Vec<usize> = dv.iter().map(|t| num(t, ln_dv, "degree")).collect::<Result<_>>()?;
    if dv.len() != n {
        return perr(ln_dv, format!("expected {n} variable degrees, found {}", dv.len()));
    }
    let (ln_dc, dc) = lines.next("check degrees")?;
    let dc: Vec<usize> = dc.iter().map(|t| num(t, ln_dc, "degree")).collect::<Result<_>>()?;
    if dc.len() != m_checks {
        return perr(ln_dc, format!("expected {m_checks} check degrees, found {}", dc.len()));
    }
    if dv.iter().max().copied().unwrap_or(0) != num::<usize>(maxes[0], ln, "degree")?
        || dc.iter().max().copied().unwrap_or(0) != num::<usize>(maxes[1], ln, "degree")?
    {
        return perr(ln, "maximum degrees do not match the degree lists");
    }

    let entry = |tok: &str, line: usize, bound: usize| -> Result<(usize, FieldElement)> {
        let (idx, exp) = tok
            .split_once(':')
            .ok_or_else(|| Error::Parse { line, msg: format!("entry '{tok}' is not index:exponent") })?;
        let idx: usize = num(idx, line, "index")?;
        if idx == 0 || idx > bound {
            return perr(line, format!("index {idx} outside 1..={bound}"));
        }
        let exp: usize = num(exp, line, "label exponent")?;
        if exp >= q - 1 {
            return perr(line, format!("label exponent {exp} outside 0..{}", q - 1));
        }
        Ok((idx - 1, field.alpha_pow(exp)))
    };

    let mut edges = Vec::new();
    let mut from_vars: HashMap<(usize, usize, u16), usize> = HashMap::new();
    for (v, &d) in dv.iter().enumerate() {
        let (ln, toks) = lines.next("variable adjacency")?;
        if toks.len() != d {
            return perr(ln, format!("variable {} lists {} edges, degree is {d}", v + 1, toks.len()));
        }
        for t in toks {
            let (c, label) = entry(t, ln, m_checks)?;
            edges.push(Edge { var: v, check: c, label });
            *from_vars.entry((v, c, label.0)).or_default() += 1;
        }
    }
    let mut from_checks: HashMap<(usize, usize, u16), usize> = HashMap::new();
    for (c, &d) in dc.iter().enumerate() {
        let (ln, toks) = lines.next("check adjacency")?;
        if toks.len() != d {
            return perr(ln, format!("check {} lists {} edges, degree is {d}", c + 1, toks.len()));
        }
        for t in toks {
            let (v, label) = entry(t, ln, n)?;
            *from_checks.entry((v, c, label.0)).or_default() += 1;
        }
    }
    if from_vars != from_checks {
        return perr(lines.last, "variable and check adjacency blocks disagree");
    }
    TannerGraph::new(field, n, m_checks, edges).map_err(|e| Error::Parse { line: lines.last, msg: e.to_string() })
}
