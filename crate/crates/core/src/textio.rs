//! The `.dqi` problem language and the first-order emission of PQI/NQI.
//!
//! ```text
//! dqi-1
//! schema { visible F1/1, F2/1; hidden U/2; }
//! constraints {
//!   F1(x) -> exists y. U(x, y);
//!   U(x, y) -> F2(y);
//!   R(x, y) -> x = y;
//!   A(x) -> B(x) | C(x);
//!   R(x, x) -> false;
//! }
//! query Q { exists x. U(x, x) | exists x. F1(x) & F2(x) }
//! query P(x) { exists y. U(x, y) }
//! instance V { F1(a). F2(a). }
//! ```
//!
//! Inside formulas, identifiers starting with a lowercase letter are variables; other
//! identifiers, numbers and quoted strings are constants. In instances every term is a
//! constant, except `@n` which denotes the labeled null `n`. Conjunction is `&` (a comma
//! is also accepted), `true` is the empty CQ and `false` the empty union or empty head.
//! `#` starts a comment that runs to the end of the line.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::classify::is_frontier_guarded;
use crate::error::{Error, Result};
use crate::model::{
    name, Atom, ConjunctiveQuery, ConstraintSet, Dependency, Egd, Fact, HeadDisjunct, Instance,
    Name, Schema, Term, Tgd, UnionQuery, Value, Visibility,
};

/// Header line of the format.
pub const HEADER: &str = "dqi-1";
/// Header line of emitted first-order text.
pub const GNFO_HEADER: &str = "dqi-gnfo-1";

/// Schema, constraints and named queries and instances.
#[derive(Clone, PartialEq, Eq, Default, Debug)]
pub struct ProblemFile {
    pub schema: Schema,
    pub constraints: ConstraintSet,
    pub queries: BTreeMap<Name, UnionQuery>,
    pub instances: BTreeMap<Name, Instance>,
}

impl ProblemFile {
    pub fn query(&self, n: &str) -> Result<&UnionQuery> {
        self.queries
            .get(n)
            .ok_or_else(|| Error::Schema(format!("no query named {n}")))
    }

    pub fn instance(&self, n: &str) -> Result<&Instance> {
        self.instances
            .get(n)
            .ok_or_else(|| Error::Schema(format!("no instance named {n}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Str(String),
    Null(u64),
    Sym(&'static str),
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

const SYMBOLS: [&str; 14] = [
    ":=", "->", "{", "}", "(", ")", ";", ",", ".", "/", "|", "&", "=", "!",
];

fn lex(text: &str, first_line: usize) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line_no = first_line + ln;
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            if c == '#' {
                break;
            }
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            if c.is_ascii_alphanumeric() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Token {
                    tok: Tok::Ident(chars[start..i].iter().collect()),
                    line: line_no,
                    col,
                });
                continue;
            }
            if c == '"' {
                let mut s = String::new();
                i += 1;
                let mut closed = false;
                while i < chars.len() {
                    match chars[i] {
                        '\\' if i + 1 < chars.len() => {
                            s.push(chars[i + 1]);
                            i += 2;
                        }
                        '"' => {
                            closed = true;
                            i += 1;
                            break;
                        }
                        ch => {
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                if !closed {
                    return Err(Error::Syntax {
                        line: line_no,
                        col,
                        msg: "unterminated string".into(),
                    });
                }
                out.push(Token {
                    tok: Tok::Str(s),
                    line: line_no,
                    col,
                });
                continue;
            }
            if c == '@' {
                let start = i + 1;
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let digits: String = chars[start..i].iter().collect();
                let n = digits.parse::<u64>().map_err(|_| Error::Syntax {
                    line: line_no,
                    col,
                    msg: "expected digits after @".into(),
                })?;
                out.push(Token {
                    tok: Tok::Null(n),
                    line: line_no,
                    col,
                });
                continue;
            }
            let rest: String = chars[i..].iter().take(2).collect();
            match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
                Some(s) => {
                    out.push(Token {
                        tok: Tok::Sym(s),
                        line: line_no,
                        col,
                    });
                    i += s.len();
                }
                None => {
                    return Err(Error::Syntax {
                        line: line_no,
                        col,
                        msg: format!("unexpected character {c:?}"),
                    })
                }
            }
        }
    }
    Ok(out)
}

/// Strips the header line and returns the remaining text with its first line number.
fn split_header<'a>(text: &'a str, header: &str) -> Result<(&'a str, usize)> {
    let mut offset = 0;
    for (ln, line) in text.split_inclusive('\n').enumerate() {
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            offset += line.len();
            continue;
        }
        if content != header {
            return Err(Error::Syntax {
                line: ln + 1,
                col: 1,
                msg: format!("expected header line {header:?}"),
            });
        }
        return Ok((&text[offset + line.len()..], ln + 2));
    }
    Err(Error::Syntax {
        line: 1,
        col: 1,
        msg: format!("missing header line {header:?}"),
    })
}

struct Parser<'s> {
    toks: Vec<Token>,
    pos: usize,
    schema: Option<&'s Schema>,
}

impl<'s> Parser<'s> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|t| &t.tok)
    }

    fn here(&self) -> (usize, usize) {
        match self.toks.get(self.pos).or(self.toks.last()) {
            Some(t) => (t.line, t.col),
            None => (1, 1),
        }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        let (line, col) = self.here();
        Err(Error::Syntax {
            line,
            col,
            msg: msg.into(),
        })
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Sym(x)) if *x == s)
    }

    fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(x)) if x == s)
            && !matches!(self.peek_at(1), Some(Tok::Sym("(")))
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(format!("expected {s:?}"))
        }
    }

    fn eat_kw(&mut self, s: &str) -> bool {
        if self.is_kw(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.err("expected an identifier"),
        }
    }

    fn variable(&mut self) -> Result<Name> {
        let (line, col) = self.here();
        let s = self.ident()?;
        if !is_var_name(&s) {
            return Err(Error::Syntax {
                line,
                col,
                msg: format!("{s} is not a variable (variables start with a lowercase letter)"),
            });
        }
        Ok(name(&s))
    }

    fn var_list(&mut self) -> Result<Vec<Name>> {
        let mut vs = vec![self.variable()?];
        while self.eat_sym(",") {
            vs.push(self.variable()?);
        }
        Ok(vs)
    }

    fn term(&mut self) -> Result<Term> {
        match self.peek().cloned() {
            Some(Tok::Ident(s)) => {
                self.pos += 1;
                Ok(if is_var_name(&s) {
                    Term::Var(name(&s))
                } else {
                    Term::Const(name(&s))
                })
            }
            Some(Tok::Str(s)) => {
                self.pos += 1;
                Ok(Term::Const(name(&s)))
            }
            _ => self.err("expected a term"),
        }
    }

    fn atom(&mut self) -> Result<Atom> {
        let (line, col) = self.here();
        let rel = self.ident()?;
        self.expect_sym("(")?;
        let mut args = Vec::new();
        if !self.is_sym(")") {
            args.push(self.term()?);
            while self.eat_sym(",") {
                args.push(self.term()?);
            }
        }
        self.expect_sym(")")?;
        let atom = Atom::new(&rel, args);
        if let Some(s) = self.schema {
            s.check_atom(&atom).map_err(|e| Error::Syntax {
                line,
                col,
                msg: e.to_string(),
            })?;
        }
        Ok(atom)
    }

    fn conj(&mut self) -> Result<Vec<Atom>> {
        let mut atoms = vec![self.atom()?];
        while self.is_sym("&") || self.is_sym(",") {
            self.pos += 1;
            atoms.push(self.atom()?);
        }
        Ok(atoms)
    }

    fn head_disjunct(&mut self) -> Result<HeadDisjunct> {
        let exists = if self.eat_kw("exists") {
            let vs = self.var_list()?;
            self.expect_sym(".")?;
            vs
        } else {
            Vec::new()
        };
        Ok(HeadDisjunct {
            exists,
            atoms: self.conj()?,
        })
    }

    fn dependency(&mut self) -> Result<Dependency> {
        let (line, col) = self.here();
        let body = self.conj()?;
        self.expect_sym("->")?;
        let dep = if self.eat_kw("false") {
            Dependency::Tgd(Tgd::new(body, Vec::new()))
        } else if matches!(self.peek(), Some(Tok::Ident(s)) if is_var_name(s))
            && matches!(self.peek_at(1), Some(Tok::Sym("=")))
        {
            let lhs = self.variable()?;
            self.expect_sym("=")?;
            let rhs = self.term()?;
            Dependency::Egd(Egd { body, lhs, rhs })
        } else {
            let mut heads = vec![self.head_disjunct()?];
            while self.eat_sym("|") {
                heads.push(self.head_disjunct()?);
            }
            Dependency::Tgd(Tgd::new(body, heads))
        };
        dep.check_well_formed().map_err(|e| Error::Syntax {
            line,
            col,
            msg: e.to_string(),
        })?;
        self.expect_sym(";")?;
        Ok(dep)
    }

    fn cq(&mut self, free: &[Name]) -> Result<ConjunctiveQuery> {
        if self.eat_kw("true") {
            return Ok(ConjunctiveQuery {
                free: free.to_vec(),
                exists: Vec::new(),
                atoms: Vec::new(),
            });
        }
        let explicit = if self.eat_kw("exists") {
            let vs = self.var_list()?;
            self.expect_sym(".")?;
            Some(vs)
        } else {
            None
        };
        let atoms = self.conj()?;
        let mut implicit: Vec<Name> = Vec::new();
        for v in atoms.iter().flat_map(|a| a.vars()) {
            if !free.contains(v) && !implicit.contains(v) {
                implicit.push(v.clone());
            }
        }
        let exists = match explicit {
            None => implicit,
            Some(vs) => {
                let a: BTreeSet<&Name> = vs.iter().collect();
                let b: BTreeSet<&Name> = implicit.iter().collect();
                if a != b || a.len() != vs.len() {
                    return self.err(
                        "the exists list must name exactly the non-free variables of the disjunct",
                    );
                }
                vs
            }
        };
        Ok(ConjunctiveQuery {
            free: free.to_vec(),
            exists,
            atoms,
        })
    }

    fn ucq(&mut self, free: &[Name]) -> Result<UnionQuery> {
        if self.eat_kw("false") {
            return Ok(UnionQuery {
                free: free.to_vec(),
                disjuncts: Vec::new(),
            });
        }
        let mut ds = vec![self.cq(free)?];
        while self.eat_sym("|") {
            ds.push(self.cq(free)?);
        }
        let q = UnionQuery {
            free: free.to_vec(),
            disjuncts: ds,
        };
        if let Err(e) = q.check_well_formed() {
            return self.err(e.to_string());
        }
        Ok(q)
    }

    fn value(&mut self) -> Result<Value> {
        match self.peek().cloned() {
            Some(Tok::Ident(s)) | Some(Tok::Str(s)) => {
                self.pos += 1;
                Ok(Value::Const(name(&s)))
            }
            Some(Tok::Null(n)) => {
                self.pos += 1;
                Ok(Value::Null(n))
            }
            _ => self.err("expected a value"),
        }
    }

    fn fact(&mut self) -> Result<Fact> {
        let (line, col) = self.here();
        let rel = self.ident()?;
        self.expect_sym("(")?;
        let mut args = Vec::new();
        if !self.is_sym(")") {
            args.push(self.value()?);
            while self.eat_sym(",") {
                args.push(self.value()?);
            }
        }
        self.expect_sym(")")?;
        self.expect_sym(".")?;
        if let Some(s) = self.schema {
            match s.arity(&rel) {
                None => {
                    return Err(Error::Syntax {
                        line,
                        col,
                        msg: format!("schema mismatch: undeclared relation {rel}"),
                    })
                }
                Some(k) if k != args.len() => {
                    return Err(Error::Syntax {
                        line,
                        col,
                        msg: format!(
                            "schema mismatch: relation {rel} has arity {k} but the fact has {} values",
                            args.len()
                        ),
                    })
                }
                _ => {}
            }
        }
        Ok(Fact::new(&rel, args))
    }
}

fn is_var_name(s: &str) -> bool {
    s.chars().next().is_some_and(|c| c.is_ascii_lowercase())
}

/// Parses a `.dqi` file.
pub fn parse(text: &str) -> Result<ProblemFile> {
    let (body, first_line) = split_header(text, HEADER)?;
    let toks = lex(body, first_line)?;
    let mut pf = ProblemFile::default();
    let mut pos = 0;
    while pos < toks.len() {
        let schema = pf.schema.clone();
        let mut p = Parser {
            toks: toks.clone(),
            pos,
            schema: Some(&schema),
        };
        if p.eat_kw("schema") {
            p.expect_sym("{")?;
            while !p.eat_sym("}") {
                let vis = if p.eat_kw("visible") {
                    Visibility::Visible
                } else if p.eat_kw("hidden") {
                    Visibility::Hidden
                } else {
                    return p.err("expected `visible` or `hidden`");
                };
                loop {
                    let (line, col) = p.here();
                    let rel = p.ident()?;
                    p.expect_sym("/")?;
                    let ar = p.ident()?;
                    let arity = ar.parse::<usize>().map_err(|_| Error::Syntax {
                        line,
                        col,
                        msg: format!("invalid arity {ar}"),
                    })?;
                    pf.schema
                        .add(&rel, arity, vis)
                        .map_err(|e| Error::Syntax {
                            line,
                            col,
                            msg: e.to_string(),
                        })?;
                    if !p.eat_sym(",") {
                        break;
                    }
                }
                p.expect_sym(";")?;
            }
        } else if p.eat_kw("constraints") {
            p.expect_sym("{")?;
            while !p.eat_sym("}") {
                let d = p.dependency()?;
                pf.constraints.deps.push(d);
            }
        } else if p.eat_kw("query") {
            let (line, col) = p.here();
            let qn = p.ident()?;
            let free = if p.eat_sym("(") {
                let vs = if p.is_sym(")") { Vec::new() } else { p.var_list()? };
                p.expect_sym(")")?;
                vs
            } else {
                Vec::new()
            };
            p.expect_sym("{")?;
            let q = p.ucq(&free)?;
            p.expect_sym("}")?;
            if pf.queries.insert(name(&qn), q).is_some() {
                return Err(Error::Syntax {
                    line,
                    col,
                    msg: format!("query {qn} defined twice"),
                });
            }
        } else if p.eat_kw("instance") {
            let (line, col) = p.here();
            let iname = p.ident()?;
            p.expect_sym("{")?;
            let mut inst = Instance::new();
            while !p.eat_sym("}") {
                inst.insert(p.fact()?);
            }
            if pf.instances.insert(name(&iname), inst).is_some() {
                return Err(Error::Syntax {
                    line,
                    col,
                    msg: format!("instance {iname} defined twice"),
                });
            }
        } else {
            return p.err("expected `schema`, `constraints`, `query` or `instance`");
        }
        pos = p.pos;
    }
    Ok(pf)
}

fn is_plain_ident(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn quote(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

fn fmt_const_in_formula(c: &str) -> String {
    if is_plain_ident(c) && !is_var_name(c) {
        c.to_string()
    } else {
        quote(c)
    }
}

fn fmt_term(t: &Term) -> String {
    match t {
        Term::Var(v) => v.to_string(),
        Term::Const(c) => fmt_const_in_formula(c),
    }
}

fn fmt_atom(a: &Atom) -> String {
    let args: Vec<String> = a.args.iter().map(fmt_term).collect();
    format!("{}({})", a.relation, args.join(", "))
}

fn fmt_conj(atoms: &[Atom]) -> String {
    atoms.iter().map(fmt_atom).collect::<Vec<_>>().join(" & ")
}

fn fmt_value(v: &Value) -> String {
    match v {
        Value::Const(c) if is_plain_ident(c) => c.to_string(),
        Value::Const(c) => quote(c),
        Value::Null(n) => format!("@{n}"),
    }
}

/// Formats a fact in instance syntax, without the trailing period.
pub fn format_fact(f: &Fact) -> String {
    let args: Vec<String> = f.args.iter().map(fmt_value).collect();
    format!("{}({})", f.relation, args.join(", "))
}

/// Formats one dependency in constraint syntax, without the trailing semicolon.
pub fn format_dependency(d: &Dependency) -> String {
    match d {
        Dependency::Tgd(t) => {
            let rhs = if t.heads.is_empty() {
                "false".to_string()
            } else {
                t.heads
                    .iter()
                    .map(|h| {
                        if h.exists.is_empty() {
                            fmt_conj(&h.atoms)
                        } else {
                            let vs: Vec<&str> = h.exists.iter().map(|v| &**v).collect();
                            format!("exists {}. {}", vs.join(", "), fmt_conj(&h.atoms))
                        }
                    })
                    .collect::<Vec<_>>()
                    .join(" | ")
            };
            format!("{} -> {}", fmt_conj(&t.body), rhs)
        }
        Dependency::Egd(e) => format!("{} -> {} = {}", fmt_conj(&e.body), e.lhs, fmt_term(&e.rhs)),
    }
}

fn format_cq(d: &ConjunctiveQuery) -> String {
    if d.atoms.is_empty() {
        return "true".into();
    }
    if d.exists.is_empty() {
        fmt_conj(&d.atoms)
    } else {
        let vs: Vec<&str> = d.exists.iter().map(|v| &**v).collect();
        format!("exists {}. {}", vs.join(", "), fmt_conj(&d.atoms))
    }
}

/// Formats a query body (the part between braces).
pub fn format_query(q: &UnionQuery) -> String {
    if q.disjuncts.is_empty() {
        return "false".into();
    }
    q.disjuncts
        .iter()
        .map(format_cq)
        .collect::<Vec<_>>()
        .join("\n  | ")
}

/// Serializes a problem file; `parse(&serialize(p)) == p`.
pub fn serialize(p: &ProblemFile) -> String {
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    out.push_str("schema {\n");
    for d in p.schema.relations() {
        let vis = match d.visibility {
            Visibility::Visible => "visible",
            Visibility::Hidden => "hidden",
        };
        let _ = writeln!(out, "  {vis} {}/{};", d.name, d.arity);
    }
    out.push_str("}\n");
    out.push_str("constraints {\n");
    for d in &p.constraints.deps {
        let _ = writeln!(out, "  {};", format_dependency(d));
    }
    out.push_str("}\n");
    for (n, q) in &p.queries {
        if q.free.is_empty() {
            let _ = writeln!(out, "query {n} {{");
        } else {
            let fv: Vec<&str> = q.free.iter().map(|v| &**v).collect();
            let _ = writeln!(out, "query {n}({}) {{", fv.join(", "));
        }
        let _ = writeln!(out, "  {}", format_query(q));
        out.push_str("}\n");
    }
    for (n, inst) in &p.instances {
        let _ = writeln!(out, "instance {n} {{");
        for f in inst.facts() {
            let _ = writeln!(out, "  {}.", format_fact(&f));
        }
        out.push_str("}\n");
    }
    out
}

/// Problem polarity for [`emit_gnfo`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImplicationKind {
    Pqi,
    Nqi,
}

fn g_term(t: &Term) -> String {
    match t {
        Term::Var(v) => v.to_string(),
        Term::Const(c) => quote(c),
    }
}

fn g_atom(a: &Atom) -> String {
    let args: Vec<String> = a.args.iter().map(g_term).collect();
    format!("{}({})", a.relation, args.join(", "))
}

fn g_conj(atoms: &[Atom]) -> String {
    if atoms.is_empty() {
        return "true".into();
    }
    atoms.iter().map(g_atom).collect::<Vec<_>>().join(" & ")
}

fn g_exists(vars: &[Name], body: String) -> String {
    if vars.is_empty() {
        format!("({body})")
    } else {
        let vs: Vec<&str> = vars.iter().map(|v| &**v).collect();
        format!("(exists {}. ({body}))", vs.join(", "))
    }
}

fn g_forall(vars: &BTreeSet<Name>, body: String) -> String {
    if vars.is_empty() {
        format!("({body})")
    } else {
        let vs: Vec<&str> = vars.iter().map(|v| &**v).collect();
        format!("(forall {}. ({body}))", vs.join(", "))
    }
}

fn g_join(parts: Vec<String>, op: &str, empty: &str) -> String {
    if parts.is_empty() {
        empty.to_string()
    } else {
        parts.join(op)
    }
}

/// Emits `!Q & C & V` (PQI) or `Q & C & V` (NQI): the problem holds iff the formula is
/// unsatisfiable. `V` is the closed-world description of the visible instance.
pub fn emit_gnfo(
    kind: ImplicationKind,
    q: &UnionQuery,
    c: &ConstraintSet,
    s: &Schema,
    v: &Instance,
) -> Result<String> {
    if !q.is_boolean() {
        return Err(Error::Unsupported("formula emission needs a Boolean query".into()));
    }
    let qf = g_join(
        q.disjuncts
            .iter()
            .map(|d| g_exists(&d.exists, g_conj(&d.atoms)))
            .collect(),
        " | ",
        "false",
    );
    let mut cparts = Vec::new();
    for (i, d) in c.deps.iter().enumerate() {
        let uvars: BTreeSet<Name> = d.body().iter().flat_map(|a| a.vars().cloned()).collect();
        match d {
            Dependency::Tgd(t) => {
                if !is_frontier_guarded(t) {
                    return Err(Error::Unsupported(format!(
                        "dependency #{i} `{}` is not frontier-guarded and has no guarded-negation form",
                        format_dependency(d)
                    )));
                }
                let rhs = g_join(
                    t.heads
                        .iter()
                        .map(|h| g_exists(&h.exists, g_conj(&h.atoms)))
                        .collect(),
                    " | ",
                    "false",
                );
                cparts.push(g_forall(&uvars, format!("{} -> {}", g_conj(&t.body), rhs)));
            }
            Dependency::Egd(e) => {
                let mut eq_vars = vec![e.lhs.clone()];
                if let Term::Var(r) = &e.rhs {
                    eq_vars.push(r.clone());
                }
                let guarded = e
                    .body
                    .iter()
                    .any(|a| eq_vars.iter().all(|x| a.vars().any(|y| y == x)));
                if !guarded {
                    return Err(Error::Unsupported(format!(
                        "dependency #{i} `{}` equates variables that share no body atom",
                        format_dependency(d)
                    )));
                }
                cparts.push(g_forall(
                    &uvars,
                    format!("{} -> {} = {}", g_conj(&e.body), e.lhs, g_term(&e.rhs)),
                ));
            }
        }
    }
    let cf = g_join(cparts, " & ", "true");
    let mut vparts = Vec::new();
    for d in s.visible_relations() {
        let tuples: Vec<&Vec<Value>> = v.tuples(&d.name).map(|t| t.iter().collect()).unwrap_or_default();
        for t in &tuples {
            let args: Vec<String> = t.iter().map(|x| quote(&x.to_string())).collect();
            vparts.push(format!("{}({})", d.name, args.join(", ")));
        }
        if d.arity == 0 {
            if tuples.is_empty() {
                vparts.push(format!("({}() -> false)", d.name));
            }
            continue;
        }
        let xs: Vec<String> = (1..=d.arity).map(|k| format!("x{k}")).collect();
        let alts = g_join(
            tuples
                .iter()
                .map(|t| {
                    let eqs: Vec<String> = xs
                        .iter()
                        .zip(t.iter())
                        .map(|(x, val)| format!("{x} = {}", quote(&val.to_string())))
                        .collect();
                    format!("({})", eqs.join(" & "))
                })
                .collect(),
            " | ",
            "false",
        );
        vparts.push(format!(
            "(forall {}. ({}({}) -> {}))",
            xs.join(", "),
            d.name,
            xs.join(", "),
            alts
        ));
    }
    let vf = g_join(vparts, " & ", "true");
    let goal = match kind {
        ImplicationKind::Pqi => "!Q & C & V",
        ImplicationKind::Nqi => "Q & C & V",
    };
    Ok(format!(
        "{GNFO_HEADER}\nlet Q := {qf};\nlet C := {cf};\nlet V := {vf};\n{goal}\n"
    ))
}

#[derive(Debug)]
enum F {
    Atom,
    Bool,
    Def,
}

struct FParser<'a> {
    p: Parser<'a>,
    defs: BTreeSet<String>,
    bound: Vec<Name>,
}

impl FParser<'_> {
    fn formula(&mut self) -> Result<F> {
        let f = self.disj()?;
        if self.p.eat_sym("->") {
            self.formula()?;
            return Ok(F::Bool);
        }
        Ok(f)
    }

    fn disj(&mut self) -> Result<F> {
        let mut f = self.conj()?;
        while self.p.eat_sym("|") {
            self.conj()?;
            f = F::Bool;
        }
        Ok(f)
    }

    fn conj(&mut self) -> Result<F> {
        let mut f = self.unary()?;
        while self.p.eat_sym("&") {
            self.unary()?;
            f = F::Bool;
        }
        Ok(f)
    }

    fn quantified(&mut self) -> Result<F> {
        let vs = self.p.var_list()?;
        self.p.expect_sym(".")?;
        let n = self.bound.len();
        self.bound.extend(vs);
        self.unary()?;
        self.bound.truncate(n);
        Ok(F::Bool)
    }

    fn fterm(&mut self) -> Result<()> {
        let t = self.p.term()?;
        if let Term::Var(v) = t {
            if !self.bound.contains(&v) {
                return self.p.err(format!("variable {v} is not bound by a quantifier"));
            }
        }
        Ok(())
    }

    fn unary(&mut self) -> Result<F> {
        if self.p.eat_sym("!") {
            self.unary()?;
            return Ok(F::Bool);
        }
        if self.p.eat_sym("(") {
            self.formula()?;
            self.p.expect_sym(")")?;
            return Ok(F::Bool);
        }
        if self.p.eat_kw("forall") || self.p.eat_kw("exists") {
            return self.quantified();
        }
        if self.p.eat_kw("true") || self.p.eat_kw("false") {
            return Ok(F::Bool);
        }
        match self.p.peek().cloned() {
            Some(Tok::Ident(s)) if matches!(self.p.peek_at(1), Some(Tok::Sym("("))) => {
                self.p.pos += 2;
                if !self.p.is_sym(")") {
                    self.fterm()?;
                    while self.p.eat_sym(",") {
                        self.fterm()?;
                    }
                }
                self.p.expect_sym(")")?;
                let _ = s;
                Ok(F::Atom)
            }
            Some(Tok::Ident(s)) if self.defs.contains(&s) => {
                self.p.pos += 1;
                Ok(F::Def)
            }
            Some(Tok::Ident(_)) | Some(Tok::Str(_)) => {
                self.fterm()?;
                self.p.expect_sym("=")?;
                self.fterm()?;
                Ok(F::Bool)
            }
            _ => self.p.err("expected a formula"),
        }
    }
}

/// Checks emitted first-order text against its grammar: a header, `let` definitions of
/// closed formulas, and a final closed formula over the defined names.
pub fn check_gnfo(text: &str) -> Result<()> {
    let (body, first_line) = split_header(text, GNFO_HEADER)?;
    let toks = lex(body, first_line)?;
    let mut fp = FParser {
        p: Parser {
            toks,
            pos: 0,
            schema: None,
        },
        defs: BTreeSet::new(),
        bound: Vec::new(),
    };
    while fp.p.eat_kw("let") {
        let n = fp.p.ident()?;
        fp.p.expect_sym(":=")?;
        fp.formula()?;
        fp.p.expect_sym(";")?;
        fp.defs.insert(n);
    }
    let f = fp.formula()?;
    if fp.p.peek().is_some() {
        return fp.p.err("trailing input after the goal formula");
    }
    let _ = f;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const PSB: &str = "dqi-1
# PQI without certainty
schema { visible F1/1, F2/1; hidden U/2; }
constraints {
  F1(x) -> exists y. U(x, y);
  U(x, y) -> F2(y);
}
query Q { exists x. U(x, x) }
instance V { F1(a). F2(a). }
";

    #[test]
    fn parses_example_file() {
        let p = parse(PSB).unwrap();
        assert_eq!(p.constraints.len(), 2);
        assert_eq!(p.queries.len(), 1);
        assert_eq!(p.instances.len(), 1);
        assert_eq!(p.instance("V").unwrap().len(), 2);
        assert!(p.schema.is_visible("F1"));
        assert!(p.schema.is_hidden("U"));
    }

    #[test]
    fn empty_sections() {
        let p = parse("dqi-1\nschema { }\nconstraints { }\n").unwrap();
        assert_eq!(p, ProblemFile::default());
        assert_eq!(serialize(&p), "dqi-1\nschema {\n}\nconstraints {\n}\n");
    }

    #[test]
    fn round_trip_example() {
        let p = parse(PSB).unwrap();
        let text = serialize(&p);
        assert_eq!(parse(&text).unwrap(), p);
    }

    #[test]
    fn parses_all_dependency_forms() {
        let t = "dqi-1
schema { hidden R/2, T/0, A/1, B/1, C/1, App/3; }
constraints {
  R(x, x) -> T();
  R(x, y) -> x = y;
  R(x, y) -> x = \"c\";
  A(x) -> B(x) | exists z. C(z);
  A(x) -> false;
}
query Q(x) { App(Smith, x, \"Jones\") }
query E { false }
query T { true }
instance I { R(@3, \"a b\"). T(). }
";
        let p = parse(t).unwrap();
        assert_eq!(p.constraints.len(), 5);
        assert!(matches!(p.constraints.deps[1], Dependency::Egd(_)));
        assert_eq!(p.query("Q").unwrap().free.len(), 1);
        assert!(p.query("E").unwrap().disjuncts.is_empty());
        assert!(p.query("T").unwrap().disjuncts[0].atoms.is_empty());
        assert_eq!(parse(&serialize(&p)).unwrap(), p);
    }

    #[test]
    fn errors_are_positioned() {
        let e = parse("dqi-1\nschema { visible F/1; }\nconstraints {\n  F(x, y) -> F(x);\n}\n")
            .unwrap_err();
        assert!(matches!(e, Error::Syntax { line: 4, .. }), "{e}");
        let e = parse("dqi-1\nconstraints { G(x) -> G(x); }\n").unwrap_err();
        assert!(e.to_string().contains("undeclared"), "{e}");
        let e = parse("dqi-1\nschema { hidden G/1; }\nconstraints { G(x) -> G(y); }\n").unwrap_err();
        assert!(e.to_string().contains("unsafe"), "{e}");
        assert!(parse("schema { }").is_err());
    }

    #[test]
    fn gnfo_emission() {
        let p = parse(PSB).unwrap();
        let q = p.query("Q").unwrap();
        let v = p.instance("V").unwrap();
        let pqi = emit_gnfo(ImplicationKind::Pqi, q, &p.constraints, &p.schema, v).unwrap();
        assert!(pqi.contains("!Q & C"));
        assert!(pqi.contains("(forall x1. (F1(x1) -> (x1 = \"a\")))"));
        assert!(pqi.contains("(forall x1. (F2(x1) -> (x1 = \"a\")))"));
        check_gnfo(&pqi).unwrap();
        let nqi = emit_gnfo(ImplicationKind::Nqi, q, &p.constraints, &p.schema, v).unwrap();
        check_gnfo(&nqi).unwrap();
        let a: Vec<&str> = pqi.lines().collect();
        let b: Vec<&str> = nqi.lines().collect();
        let diff: Vec<usize> = (0..a.len()).filter(|&i| a[i] != b[i]).collect();
        assert_eq!(diff, vec![a.len() - 1]);
        let empty = emit_gnfo(ImplicationKind::Pqi, q, &p.constraints, &p.schema, &Instance::new()).unwrap();
        assert!(empty.contains("(forall x1. (F1(x1) -> false))"));
        check_gnfo(&empty).unwrap();
    }

    #[test]
    fn gnfo_rejects_unguarded() {
        let p = parse("dqi-1\nschema { hidden R/1, S/1, T/2; }\nconstraints { R(x) & S(y) -> T(x, y); }\nquery Q { exists x. R(x) }\n").unwrap();
        let e = emit_gnfo(ImplicationKind::Pqi, p.query("Q").unwrap(), &p.constraints, &p.schema, &Instance::new())
            .unwrap_err();
        assert!(e.to_string().contains("#0"));
    }

    #[test]
    fn gnfo_checker_rejects_free_variables() {
        assert!(check_gnfo("dqi-gnfo-1\nlet Q := R(x);\nQ\n").is_err());
        assert!(check_gnfo("dqi-gnfo-1\nlet Q := exists x. (R(x));\n!Q\n").is_ok());
    }
}
