//! CPLEX LP and free MPS writers and readers.
//!
//! Names are sanitized to `[A-Za-z0-9_.]`, prefixed with `_` when they would
//! start with a digit, a period or an `e`, and cut to 255 characters. Two
//! names that end up equal abort the export.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use crate::error::FormatError;
use crate::mip::{Family, Integrality, MipModel, Relation, VarId, VarKey};

const MAX_NAME: usize = 255;
const TERMS_PER_LINE: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExportFormat {
    LpText,
    MpsText,
}

impl ExportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ExportFormat::LpText => "lp",
            ExportFormat::MpsText => "mps",
        }
    }
}

pub fn sanitize(name: &str) -> String {
    let mut s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '.' { c } else { '_' })
        .collect();
    let needs_prefix = match s.chars().next() {
        None => true,
        Some(c) => c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E',
    };
    if needs_prefix {
        s.insert(0, '_');
    }
    s.truncate(MAX_NAME);
    s
}

fn unique(raw: impl Iterator<Item = String>) -> Result<Vec<String>, FormatError> {
    let mut seen: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut out = Vec::new();
    for r in raw {
        let s = sanitize(&r);
        seen.entry(s.clone()).or_default().push(r);
        out.push(s);
    }
    let collisions: Vec<String> = seen
        .into_values()
        .filter(|v| v.len() > 1)
        .flatten()
        .collect();
    if collisions.is_empty() {
        Ok(out)
    } else {
        Err(FormatError::NameCollision(collisions))
    }
}

/// Sanitized variable names in model order.
pub fn sanitized_names(model: &MipModel) -> Result<Vec<String>, FormatError> {
    unique(model.variables.iter().map(|v| v.name.clone()))
}

fn row_names(model: &MipModel) -> Result<Vec<String>, FormatError> {
    unique(model.constraints.iter().map(|c| c.name()))
}

fn num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && !(1e-4..1e15).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

pub fn export_model(model: &MipModel, format: ExportFormat) -> Result<String, FormatError> {
    let vars = sanitized_names(model)?;
    let rows = row_names(model)?;
    Ok(match format {
        ExportFormat::LpText => write_lp(model, &vars, &rows),
        ExportFormat::MpsText => write_mps(model, &vars, &rows),
    })
}

fn write_expr(out: &mut String, terms: &[(VarId, f64)], vars: &[String]) {
    if terms.is_empty() {
        let _ = write!(out, " 0 {}", vars[0]);
        return;
    }
    for (k, (v, c)) in terms.iter().enumerate() {
        if k > 0 && k % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let sign = if *c < 0.0 { '-' } else { '+' };
        if k == 0 && sign == '+' {
            let _ = write!(out, " {} {}", num(c.abs()), vars[v.0]);
        } else {
            let _ = write!(out, " {sign} {} {}", num(c.abs()), vars[v.0]);
        }
    }
}

fn write_lp(model: &MipModel, vars: &[String], rows: &[String]) -> String {
    let mut out = String::from("\\ embedding model\nMinimize\n obj:");
    write_expr(&mut out, &model.objective, vars);
    out.push_str("\nSubject To\n");
    for (c, name) in model.constraints.iter().zip(rows) {
        let _ = write!(out, " {name}:");
        write_expr(&mut out, &c.terms, vars);
        let _ = writeln!(out, " {} {}", c.relation.symbol(), num(c.rhs));
    }
    out.push_str("Bounds\n");
    for (v, name) in model.variables.iter().zip(vars) {
        match (v.lower.is_finite(), v.upper.is_finite()) {
            (true, true) if v.lower == v.upper => {
                let _ = writeln!(out, " {name} = {}", num(v.lower));
            }
            (true, true) => {
                let _ = writeln!(out, " {} <= {name} <= {}", num(v.lower), num(v.upper));
            }
            (true, false) => {
                let _ = writeln!(out, " {name} >= {}", num(v.lower));
            }
            (false, true) => {
                let _ = writeln!(out, " -inf <= {name} <= {}", num(v.upper));
            }
            (false, false) => {
                let _ = writeln!(out, " {name} free");
            }
        }
    }
    let binaries: Vec<&String> = model
        .variables
        .iter()
        .zip(vars)
        .filter(|(v, _)| v.integrality == Integrality::Binary)
        .map(|(_, n)| n)
        .collect();
    if !binaries.is_empty() {
        out.push_str("Binaries\n");
        for chunk in binaries.chunks(TERMS_PER_LINE) {
            let line: Vec<&str> = chunk.iter().map(|s| s.as_str()).collect();
            let _ = writeln!(out, " {}", line.join(" "));
        }
    }
    out.push_str("End\n");
    out
}

fn write_mps(model: &MipModel, vars: &[String], rows: &[String]) -> String {
    let mut out = String::from("NAME embedding\nROWS\n N obj\n");
    for (c, name) in model.constraints.iter().zip(rows) {
        let t = match c.relation {
            Relation::Le => 'L',
            Relation::Ge => 'G',
            Relation::Eq => 'E',
        };
        let _ = writeln!(out, " {t} {name}");
    }
    let mut columns: Vec<Vec<(&str, f64)>> = vec![Vec::new(); model.variables.len()];
    for (v, c) in &model.objective {
        columns[v.0].push(("obj", *c));
    }
    for (c, name) in model.constraints.iter().zip(rows) {
        for (v, a) in &c.terms {
            columns[v.0].push((name, *a));
        }
    }
    out.push_str("COLUMNS\n");
    let mut marked = false;
    for (j, entries) in columns.iter().enumerate() {
        let binary = model.variables[j].integrality == Integrality::Binary;
        if binary != marked {
            let tag = if binary { "'INTORG'" } else { "'INTEND'" };
            let _ = writeln!(out, " MARKER 'MARKER' {tag}");
            marked = binary;
        }
        if entries.is_empty() {
            // keep the column declared
            let _ = writeln!(out, " {} obj 0", vars[j]);
        }
        for (row, a) in entries {
            let _ = writeln!(out, " {} {row} {}", vars[j], num(*a));
        }
    }
    if marked {
        out.push_str(" MARKER 'MARKER' 'INTEND'\n");
    }
    out.push_str("RHS\n");
    for (c, name) in model.constraints.iter().zip(rows) {
        if c.rhs != 0.0 {
            let _ = writeln!(out, " rhs {name} {}", num(c.rhs));
        }
    }
    out.push_str("BOUNDS\n");
    for (v, name) in model.variables.iter().zip(vars) {
        match (v.lower.is_finite(), v.upper.is_finite()) {
            (true, true) if v.lower == v.upper => {
                let _ = writeln!(out, " FX bnd {name} {}", num(v.lower));
            }
            (false, false) => {
                let _ = writeln!(out, " FR bnd {name}");
            }
            (lo, hi) => {
                if !lo {
                    let _ = writeln!(out, " MI bnd {name}");
                } else if v.lower != 0.0 {
                    let _ = writeln!(out, " LO bnd {name} {}", num(v.lower));
                }
                if hi {
                    let _ = writeln!(out, " UP bnd {name} {}", num(v.upper));
                }
            }
        }
    }
    out.push_str("ENDATA\n");
    out
}

/// Builder shared by both readers.
#[derive(Default)]
struct Reader {
    model: MipModel,
    bounds: HashMap<VarId, (Option<f64>, Option<f64>)>,
    binaries: Vec<VarId>,
}

impl Reader {
    fn var(&mut self, name: &str) -> VarId {
        self.model.add_continuous(VarKey::External(name.to_string()))
    }

    fn finish(mut self) -> MipModel {
        for v in &self.binaries {
            let var = &mut self.model.variables[v.0];
            var.integrality = Integrality::Binary;
            var.upper = 1.0;
        }
        for (v, (lo, hi)) in self.bounds {
            let var = &mut self.model.variables[v.0];
            if let Some(lo) = lo {
                var.lower = lo;
            }
            if let Some(hi) = hi {
                var.upper = hi;
            }
        }
        self.model
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Name(String),
    Op(Relation),
    Colon,
    Plus,
    Minus,
}

fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || "_.!\"#$%&()/,;?@`'{}|~[]".contains(c)
}

fn tokenize(line: &str, lineno: usize) -> Result<Vec<Tok>, FormatError> {
    let chars: Vec<char> = line.chars().collect();
    let mut i = 0;
    let mut out = Vec::new();
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == ':' {
            out.push(Tok::Colon);
            i += 1;
        } else if c == '+' {
            out.push(Tok::Plus);
            i += 1;
        } else if c == '-' {
            out.push(Tok::Minus);
            i += 1;
        } else if c == '<' || c == '>' || c == '=' {
            let mut j = i + 1;
            while j < chars.len() && (chars[j] == '=' || chars[j] == '<' || chars[j] == '>') {
                j += 1;
            }
            let op: String = chars[i..j].iter().collect();
            let rel = match op.as_str() {
                "<" | "<=" | "=<" => Relation::Le,
                ">" | ">=" | "=>" => Relation::Ge,
                "=" => Relation::Eq,
                _ => {
                    return Err(FormatError::Parse {
                        line: lineno,
                        message: format!("bad operator `{op}`"),
                    })
                }
            };
            out.push(Tok::Op(rel));
            i = j;
        } else if c.is_ascii_digit() || c == '.' {
            let mut j = i;
            while j < chars.len() && (chars[j].is_ascii_digit() || chars[j] == '.') {
                j += 1;
            }
            if j < chars.len() && (chars[j] == 'e' || chars[j] == 'E') {
                let mut k = j + 1;
                if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                    k += 1;
                }
                if k < chars.len() && chars[k].is_ascii_digit() {
                    while k < chars.len() && chars[k].is_ascii_digit() {
                        k += 1;
                    }
                    j = k;
                }
            }
            let text: String = chars[i..j].iter().collect();
            let v = text.parse::<f64>().map_err(|_| FormatError::Parse {
                line: lineno,
                message: format!("bad number `{text}`"),
            })?;
            out.push(Tok::Num(v));
            i = j;
        } else if is_name_char(c) {
            let mut j = i;
            while j < chars.len() && is_name_char(chars[j]) {
                j += 1;
            }
            let text: String = chars[i..j].iter().collect();
            match text.to_ascii_lowercase().as_str() {
                "inf" | "infinity" => out.push(Tok::Num(f64::INFINITY)),
                _ => out.push(Tok::Name(text)),
            }
            i = j;
        } else {
            return Err(FormatError::Parse {
                line: lineno,
                message: format!("unexpected character `{c}`"),
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, PartialEq)]
enum LpSection {
    Start,
    Objective,
    Constraints,
    Bounds,
    Binaries,
    End,
}

fn lp_section(line: &str) -> Option<LpSection> {
    let l = line.trim().to_ascii_lowercase();
    match l.as_str() {
        "minimize" | "minimise" | "min" => Some(LpSection::Objective),
        "subject to" | "such that" | "st" | "s.t." => Some(LpSection::Constraints),
        "bounds" | "bound" => Some(LpSection::Bounds),
        "binaries" | "binary" | "bin" => Some(LpSection::Binaries),
        "end" => Some(LpSection::End),
        _ => None,
    }
}

type Located = (usize, Tok);

/// Parses `[name:] expr`, returning the terms and the index after the expression.
fn parse_expr(r: &mut Reader, toks: &[Located], mut i: usize) -> Result<(Vec<(VarId, f64)>, usize), FormatError> {
    let mut terms = Vec::new();
    let mut sign = 1.0;
    let mut coef: Option<f64> = None;
    while i < toks.len() {
        match &toks[i].1 {
            Tok::Plus => {}
            Tok::Minus => sign = -sign,
            Tok::Num(v) => coef = Some(coef.unwrap_or(1.0) * v),
            Tok::Name(n) => {
                let v = r.var(n);
                terms.push((v, sign * coef.unwrap_or(1.0)));
                sign = 1.0;
                coef = None;
            }
            Tok::Op(_) => break,
            Tok::Colon => {
                return Err(FormatError::Parse {
                    line: toks[i].0,
                    message: "unexpected `:`".into(),
                })
            }
        }
        i += 1;
    }
    if coef.is_some() {
        let line = toks.get(i.saturating_sub(1)).map_or(0, |t| t.0);
        return Err(FormatError::Parse {
            line,
            message: "constant terms are not supported".into(),
        });
    }
    Ok((terms, i))
}

fn signed_number(toks: &[Located], i: &mut usize, line: usize) -> Result<f64, FormatError> {
    let mut sign = 1.0;
    while *i < toks.len() {
        match &toks[*i].1 {
            Tok::Plus => {}
            Tok::Minus => sign = -sign,
            Tok::Num(v) => {
                *i += 1;
                return Ok(sign * v);
            }
            _ => break,
        }
        *i += 1;
    }
    Err(FormatError::Parse {
        line,
        message: "expected a number".into(),
    })
}

/// Reads a CPLEX LP document back into a model.
pub fn parse_lp(text: &str) -> Result<MipModel, FormatError> {
    let mut r = Reader::default();
    let mut section = LpSection::Start;
    let mut objective: Vec<Located> = Vec::new();
    let mut constraints: Vec<Located> = Vec::new();
    let mut bound_lines: Vec<(usize, Vec<Tok>)> = Vec::new();
    let mut binary_names: Vec<(usize, String)> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let lineno = k + 1;
        let line = raw.split('\\').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        if let Some(s) = lp_section(line) {
            section = s;
            continue;
        }
        let toks = tokenize(line, lineno)?;
        match section {
            LpSection::Start => {
                return Err(FormatError::Parse {
                    line: lineno,
                    message: "expected `Minimize`".into(),
                })
            }
            LpSection::Objective => objective.extend(toks.into_iter().map(|t| (lineno, t))),
            LpSection::Constraints => constraints.extend(toks.into_iter().map(|t| (lineno, t))),
            LpSection::Bounds => bound_lines.push((lineno, toks)),
            LpSection::Binaries => {
                for t in toks {
                    match t {
                        Tok::Name(n) => binary_names.push((lineno, n)),
                        _ => {
                            return Err(FormatError::Parse {
                                line: lineno,
                                message: "expected variable names".into(),
                            })
                        }
                    }
                }
            }
            LpSection::End => {
                return Err(FormatError::Parse {
                    line: lineno,
                    message: "content after `End`".into(),
                })
            }
        }
    }
    if section != LpSection::End {
        return Err(FormatError::Parse {
            line: text.lines().count(),
            message: "missing `End`".into(),
        });
    }

    let mut i = 0;
    if matches!(objective.get(1), Some((_, Tok::Colon))) {
        i = 2;
    }
    let (obj, end) = parse_expr(&mut r, &objective, i)?;
    if end != objective.len() {
        return Err(FormatError::Parse {
            line: objective[end].0,
            message: "relation in objective".into(),
        });
    }

    let mut i = 0;
    let mut count = 0;
    while i < constraints.len() {
        let line = constraints[i].0;
        let name = match (&constraints[i].1, constraints.get(i + 1).map(|t| &t.1)) {
            (Tok::Name(n), Some(Tok::Colon)) => {
                i += 2;
                n.clone()
            }
            _ => format!("c{count}"),
        };
        let (terms, j) = parse_expr(&mut r, &constraints, i)?;
        let Some((_, Tok::Op(rel))) = constraints.get(j) else {
            return Err(FormatError::Parse {
                line,
                message: format!("constraint `{name}` lacks a relation"),
            });
        };
        let rel = *rel;
        i = j + 1;
        let rhs = signed_number(&constraints, &mut i, line)?;
        r.model.add_constraint(terms, rel, rhs, Family::External, name);
        count += 1;
    }

    for (line, toks) in bound_lines {
        parse_bound(&mut r, &toks, line)?;
    }
    for (line, n) in binary_names {
        if r.model.var(&n).is_none() {
            return Err(FormatError::UnknownVariable { line, name: n });
        }
        let v = r.var(&n);
        r.binaries.push(v);
    }
    let mut model = r.finish();
    model.set_objective(obj);
    Ok(model)
}

fn parse_bound(r: &mut Reader, toks: &[Tok], line: usize) -> Result<(), FormatError> {
    let err = |m: &str| FormatError::Parse {
        line,
        message: m.to_string(),
    };
    let value = |t: &[Tok]| -> Option<(f64, usize)> {
        match t {
            [Tok::Minus, Tok::Num(v), ..] => Some((-v, 2)),
            [Tok::Plus, Tok::Num(v), ..] => Some((*v, 2)),
            [Tok::Num(v), ..] => Some((*v, 1)),
            _ => None,
        }
    };
    // `x free`
    if let [Tok::Name(n), Tok::Name(f)] = toks {
        if f.eq_ignore_ascii_case("free") {
            let v = r.var(n);
            r.bounds.insert(v, (Some(f64::NEG_INFINITY), Some(f64::INFINITY)));
            return Ok(());
        }
    }
    // `l <= x [<= u]`
    if let Some((l, k)) = value(toks) {
        let (Some(Tok::Op(rel)), Some(Tok::Name(n))) = (toks.get(k), toks.get(k + 1)) else {
            return Err(err("malformed bound"));
        };
        let v = r.var(n);
        let entry = r.bounds.entry(v).or_insert((None, None));
        match rel {
            Relation::Le => entry.0 = Some(l),
            Relation::Ge => entry.1 = Some(l),
            Relation::Eq => *entry = (Some(l), Some(l)),
        }
        let rest = &toks[k + 2..];
        if rest.is_empty() {
            return Ok(());
        }
        let Some(Tok::Op(rel2)) = rest.first() else {
            return Err(err("malformed bound"));
        };
        let Some((u, used)) = value(&rest[1..]) else {
            return Err(err("malformed bound"));
        };
        if used + 1 != rest.len() {
            return Err(err("trailing tokens in bound"));
        }
        match rel2 {
            Relation::Le => entry.1 = Some(u),
            Relation::Ge => entry.0 = Some(u),
            Relation::Eq => return Err(err("malformed bound")),
        }
        return Ok(());
    }
    // `x rel v`
    if let [Tok::Name(n), Tok::Op(rel), rest @ ..] = toks {
        let Some((b, used)) = value(rest) else {
            return Err(err("malformed bound"));
        };
        if used != rest.len() {
            return Err(err("trailing tokens in bound"));
        }
        let v = r.var(n);
        let entry = r.bounds.entry(v).or_insert((None, None));
        match rel {
            Relation::Le => entry.1 = Some(b),
            Relation::Ge => entry.0 = Some(b),
            Relation::Eq => *entry = (Some(b), Some(b)),
        }
        return Ok(());
    }
    Err(err("malformed bound"))
}

/// Reads a free-format MPS document back into a model.
pub fn parse_mps(text: &str) -> Result<MipModel, FormatError> {
    let mut r = Reader::default();
    let mut section = String::new();
    let mut rows: Vec<(String, Option<Relation>)> = Vec::new();
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut row_terms: Vec<Vec<(VarId, f64)>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    let mut objective: Vec<(VarId, f64)> = Vec::new();
    let mut in_marker = false;
    let mut ended = false;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let err = |m: String| FormatError::Parse { line, message: m };
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if !raw.starts_with(char::is_whitespace) {
            section = fields[0].to_ascii_uppercase();
            match section.as_str() {
                "NAME" | "ROWS" | "COLUMNS" | "RHS" | "BOUNDS" => {}
                "ENDATA" => {
                    ended = true;
                    break;
                }
                other => return Err(err(format!("unsupported section `{other}`"))),
            }
            continue;
        }
        match section.as_str() {
            "ROWS" => {
                let [t, name] = fields[..] else {
                    return Err(err("expected `type name`".into()));
                };
                let rel = match t {
                    "N" => None,
                    "L" => Some(Relation::Le),
                    "G" => Some(Relation::Ge),
                    "E" => Some(Relation::Eq),
                    _ => return Err(err(format!("bad row type `{t}`"))),
                };
                if rel.is_none() && rows.iter().any(|(_, r)| r.is_none()) {
                    return Err(err("second objective row".into()));
                }
                row_index.insert(name.to_string(), rows.len());
                rows.push((name.to_string(), rel));
                row_terms.push(Vec::new());
                rhs.push(0.0);
            }
            "COLUMNS" => {
                if fields.len() >= 3 && fields[1] == "'MARKER'" {
                    in_marker = fields[2] == "'INTORG'";
                    continue;
                }
                if fields.len() != 3 && fields.len() != 5 {
                    return Err(err("expected `column row value [row value]`".into()));
                }
                let v = r.var(fields[0]);
                if in_marker && !r.binaries.contains(&v) {
                    r.binaries.push(v);
                }
                for pair in fields[1..].chunks(2) {
                    let idx = *row_index
                        .get(pair[0])
                        .ok_or_else(|| err(format!("unknown row `{}`", pair[0])))?;
                    let a: f64 = pair[1].parse().map_err(|_| err(format!("bad number `{}`", pair[1])))?;
                    if rows[idx].1.is_none() {
                        objective.push((v, a));
                    } else {
                        row_terms[idx].push((v, a));
                    }
                }
            }
            "RHS" => {
                let body = if fields.len() % 2 == 1 { &fields[1..] } else { &fields[..] };
                for pair in body.chunks(2) {
                    let idx = *row_index
                        .get(pair[0])
                        .ok_or_else(|| err(format!("unknown row `{}`", pair[0])))?;
                    rhs[idx] = pair[1].parse().map_err(|_| err(format!("bad number `{}`", pair[1])))?;
                }
            }
            "BOUNDS" => {
                if fields.len() < 3 {
                    return Err(err("expected `type set column [value]`".into()));
                }
                let (t, name) = (fields[0], fields[2]);
                let Some(v) = r.model.var(name) else {
                    return Err(FormatError::UnknownVariable {
                        line,
                        name: name.to_string(),
                    });
                };
                let value = || -> Result<f64, FormatError> {
                    fields
                        .get(3)
                        .ok_or_else(|| err("missing bound value".into()))?
                        .parse()
                        .map_err(|_| err("bad bound value".into()))
                };
                let entry = r.bounds.entry(v).or_insert((None, None));
                match t {
                    "UP" => entry.1 = Some(value()?),
                    "LO" => entry.0 = Some(value()?),
                    "FX" => {
                        let x = value()?;
                        *entry = (Some(x), Some(x));
                    }
                    "FR" => *entry = (Some(f64::NEG_INFINITY), Some(f64::INFINITY)),
                    "MI" => entry.0 = Some(f64::NEG_INFINITY),
                    "PL" => entry.1 = Some(f64::INFINITY),
                    "BV" => {
                        if !r.binaries.contains(&v) {
                            r.binaries.push(v);
                        }
                    }
                    _ => return Err(err(format!("unsupported bound type `{t}`"))),
                }
            }
            "NAME" => {}
            _ => return Err(err("data outside a section".into())),
        }
    }
    if !ended {
        return Err(FormatError::Parse {
            line: text.lines().count(),
            message: "missing ENDATA".into(),
        });
    }
    for (k, (name, rel)) in rows.iter().enumerate() {
        if let Some(rel) = rel {
            r.model
                .add_constraint(std::mem::take(&mut row_terms[k]), *rel, rhs[k], Family::External, name.clone());
        }
    }
    // a binary keeps explicit tighter bounds (BV after FX) but defaults to [0, 1]
    let binaries = r.binaries.clone();
    let mut model = {
        let bounds = std::mem::take(&mut r.bounds);
        r.bounds = HashMap::new();
        let mut m = r.finish();
        for (v, (lo, hi)) in bounds {
            if let Some(lo) = lo {
                m.variables[v.0].lower = lo;
            }
            if let Some(hi) = hi {
                m.variables[v.0].upper = hi;
            }
        }
        m
    };
    for v in binaries {
        let var = &mut model.variables[v.0];
        var.lower = var.lower.max(0.0);
        var.upper = var.upper.min(1.0);
    }
    model.set_objective(objective);
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sanitize_rules() {
        assert_eq!(sanitize("new(x,A)"), "new_x_A_");
        assert_eq!(sanitize("1abc"), "_1abc");
        assert_eq!(sanitize("e12"), "_e12");
        assert_eq!(sanitize(&"a".repeat(300)).len(), 255);
    }

    #[test]
    fn collisions_are_listed() {
        let mut m = MipModel::new();
        m.add_continuous(VarKey::External("a-b".into()));
        m.add_continuous(VarKey::External("a_b".into()));
        match export_model(&m, ExportFormat::LpText) {
            Err(FormatError::NameCollision(names)) => assert_eq!(names, vec!["a-b", "a_b"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn one_variable_document() {
        let mut m = MipModel::new();
        let x = m.add_continuous(VarKey::External("x".into()));
        m.set_objective(vec![(x, 1.0)]);
        let text = export_model(&m, ExportFormat::LpText).unwrap();
        let bounds = text.split("Bounds\n").nth(1).unwrap().split("End").next().unwrap();
        assert_eq!(bounds.lines().count(), 1);
        assert_eq!(text.lines().filter(|l| l.starts_with(" obj:")).count(), 1);
    }

    #[test]
    fn numbers_round_trip() {
        for x in [1.0, -2.5, 1e-7, 123456.789, 3e20, 0.1 + 0.2] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn lp_reader_accepts_common_forms() {
        let text = "\\ c\nMinimize\n obj: 2 x + 3 y - z\nSubject To\n c1: x + y >= 2\n c2: -x + 2.5 z <= -1e-1\n x + z = 4\nBounds\n x <= 10\n -inf <= z <= 3\n y free\nBinaries\n y\nEnd\n";
        let m = parse_lp(text).unwrap();
        assert_eq!(m.constraints.len(), 3);
        assert_eq!(m.constraints[1].rhs, -0.1);
        let z = m.var("z").unwrap();
        assert_eq!(m.variables[z.0].lower, f64::NEG_INFINITY);
        let y = m.var("y").unwrap();
        assert_eq!(m.variables[y.0].integrality, Integrality::Binary);
    }

    #[test]
    fn lp_reader_reports_line_numbers() {
        let text = "Minimize\n obj: x\nSubject To\n c1: x + >= \nEnd\n";
        match parse_lp(text) {
            Err(FormatError::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
    }
}
