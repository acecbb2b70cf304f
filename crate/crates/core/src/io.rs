//! Line-oriented text formats. Indices are 1-based in files. Blank lines and
//! lines starting with `#` are ignored; errors carry 1-based line numbers.
//!
//! ```text
//! xor <n> <m> <k>              csp <n> <m> <k> <truth_table_hex>
//! <b> <i1> ... <ik>            <i1> <s1> ... <ik> <sk>
//!
//! plant <k>                    assignment: one line of n values ±1
//! <y1> ... <yk> <mass>
//! ```

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::instance::{pattern, pattern_index, Assignment, CspInstance, CspPredicate, PlantingDistribution, XorInstance};

fn content_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            None
        } else {
            Some((i + 1, t.split_whitespace().collect()))
        }
    })
}

fn num<T: FromStr>(line: usize, tok: &str, what: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    tok.parse::<T>()
        .map_err(|e| Error::parse(line, format!("{what} `{tok}`: {e}")))
}

fn sign(line: usize, tok: &str) -> Result<i8> {
    match tok {
        "+1" | "1" => Ok(1),
        "-1" => Ok(-1),
        _ => Err(Error::parse(line, format!("expected +1 or -1, got `{tok}`"))),
    }
}

fn index(line: usize, tok: &str, n: usize) -> Result<u32> {
    let i: usize = num(line, tok, "index")?;
    if i == 0 || i > n {
        return Err(Error::parse(line, format!("index {i} outside [1, {n}]")));
    }
    Ok((i - 1) as u32)
}

fn fmt_sign(s: i8) -> &'static str {
    if s == 1 {
        "+1"
    } else {
        "-1"
    }
}

fn header<'a>(
    lines: &mut impl Iterator<Item = (usize, Vec<&'a str>)>,
    tag: &str,
    arity: usize,
) -> Result<(usize, Vec<&'a str>)> {
    let (line, toks) = lines.next().ok_or_else(|| Error::parse(1, "empty file"))?;
    if toks.first() != Some(&tag) || toks.len() != arity + 1 {
        return Err(Error::parse(line, format!("expected a `{tag}` header with {arity} fields")));
    }
    Ok((line, toks[1..].to_vec()))
}

fn check_count(line: usize, got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::parse(line, format!("header announces {expected} clauses, found {got}")));
    }
    Ok(())
}

pub fn write_xor(inst: &XorInstance) -> String {
    let mut out = format!("xor {} {} {}\n", inst.n(), inst.m(), inst.k());
    for (scope, b) in inst.clauses() {
        out.push_str(fmt_sign(b));
        for &v in scope {
            out.push(' ');
            out.push_str(&(v + 1).to_string());
        }
        out.push('\n');
    }
    out
}

pub fn parse_xor(text: &str) -> Result<XorInstance> {
    let mut lines = content_lines(text);
    let (hl, h) = header(&mut lines, "xor", 3)?;
    let n: usize = num(hl, h[0], "n")?;
    let m: usize = num(hl, h[1], "m")?;
    let k: usize = num(hl, h[2], "k")?;
    if k == 0 || k > n {
        return Err(Error::parse(hl, format!("arity {k} outside [1, {n}]")));
    }
    let mut inst = XorInstance::with_capacity(n, k, m);
    let mut scope = Vec::with_capacity(k);
    for (line, toks) in lines {
        if toks.len() != k + 1 {
            return Err(Error::parse(line, format!("expected {} fields, found {}", k + 1, toks.len())));
        }
        let b = sign(line, toks[0])?;
        scope.clear();
        for t in &toks[1..] {
            scope.push(index(line, t, n)?);
        }
        inst.push(&scope, b);
    }
    check_count(hl, inst.m(), m)?;
    Ok(inst)
}

pub fn write_csp(psi: &CspInstance) -> String {
    let mut out = format!("csp {} {} {} {}\n", psi.n(), psi.m(), psi.k(), psi.predicate().to_hex());
    for (scope, negs) in psi.clauses() {
        let fields: Vec<String> = scope
            .iter()
            .zip(negs)
            .map(|(&v, &s)| format!("{} {}", v + 1, fmt_sign(s)))
            .collect();
        out.push_str(&fields.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_csp(text: &str) -> Result<CspInstance> {
    let mut lines = content_lines(text);
    let (hl, h) = header(&mut lines, "csp", 4)?;
    let n: usize = num(hl, h[0], "n")?;
    let m: usize = num(hl, h[1], "m")?;
    let k: usize = num(hl, h[2], "k")?;
    if k == 0 || k > n {
        return Err(Error::parse(hl, format!("arity {k} outside [1, {n}]")));
    }
    let predicate = CspPredicate::from_hex(k, h[3]).map_err(|e| Error::parse(hl, e.to_string()))?;
    let mut psi = CspInstance::new(n, predicate);
    let (mut scope, mut negs) = (Vec::with_capacity(k), Vec::with_capacity(k));
    for (line, toks) in lines {
        if toks.len() != 2 * k {
            return Err(Error::parse(line, format!("expected {} fields, found {}", 2 * k, toks.len())));
        }
        scope.clear();
        negs.clear();
        for pair in toks.chunks(2) {
            scope.push(index(line, pair[0], n)?);
            negs.push(sign(line, pair[1])?);
        }
        psi.push(&scope, &negs);
    }
    check_count(hl, psi.m(), m)?;
    Ok(psi)
}

pub fn write_assignment(x: &Assignment) -> String {
    let parts: Vec<&str> = x.as_slice().iter().map(|&s| fmt_sign(s)).collect();
    format!("{}\n", parts.join(" "))
}

pub fn parse_assignment(text: &str) -> Result<Assignment> {
    let mut lines = content_lines(text);
    let Some((line, toks)) = lines.next() else {
        return Assignment::new(Vec::new());
    };
    if let Some((extra, _)) = lines.next() {
        return Err(Error::parse(extra, "assignment must be a single line"));
    }
    let entries = toks.iter().map(|t| sign(line, t)).collect::<Result<Vec<i8>>>()?;
    Assignment::new(entries)
}

/// Writes every pattern of positive mass.
pub fn write_plant(q: &PlantingDistribution) -> String {
    let k = q.k();
    let mut out = format!("plant {k}\n");
    for (idx, &p) in q.mass().iter().enumerate() {
        if p > 0.0 {
            let y: Vec<&str> = pattern(k, idx).into_iter().map(fmt_sign).collect();
            out.push_str(&format!("{} {p:.16e}\n", y.join(" ")));
        }
    }
    out
}

pub fn parse_plant(text: &str) -> Result<PlantingDistribution> {
    let mut lines = content_lines(text);
    let (hl, h) = header(&mut lines, "plant", 1)?;
    let k: usize = num(hl, h[0], "k")?;
    if k == 0 || k > crate::instance::MAX_ARITY {
        return Err(Error::parse(hl, format!("arity {k} outside [1, {}]", crate::instance::MAX_ARITY)));
    }
    let mut mass = vec![0.0; 1 << k];
    let mut seen = vec![false; 1 << k];
    for (line, toks) in lines {
        if toks.len() != k + 1 {
            return Err(Error::parse(line, format!("expected {} fields, found {}", k + 1, toks.len())));
        }
        let y = toks[..k].iter().map(|t| sign(line, t)).collect::<Result<Vec<i8>>>()?;
        let p: f64 = num(line, toks[k], "mass")?;
        let idx = pattern_index(&y);
        if seen[idx] {
            return Err(Error::parse(line, "pattern listed twice"));
        }
        seen[idx] = true;
        mass[idx] = p;
    }
    PlantingDistribution::new(k, mass).map_err(|e| Error::parse(hl, e.to_string()))
}
