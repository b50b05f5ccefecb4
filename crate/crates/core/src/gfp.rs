//! Greatest-fixpoint Datalog for negative implication under linear TGDs.
//!
//! For active-domain-controllable problems a witness for the negation of NQI can be taken
//! over the known values `K` (values of the visible instance and constants). The largest
//! hidden instance over `K` that satisfies every TGD with a hidden body is the greatest
//! fixpoint of a Datalog program; NQI fails iff that instance together with `V` satisfies
//! the TGDs with visible bodies and makes the query true.
//!
//! Linear TGDs whose body atoms repeat variables or carry constants are first rewritten
//! so that each hidden fact records which positions hold known values and the equality
//! pattern of the others.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::ControlFlow;

use crate::classify::is_id_like;
use crate::error::{Error, Result};
use crate::eval::first_violation;
use crate::hom::{Index, Pattern};
use crate::model::{
    name, Atom, ConjunctiveQuery, ConstraintSet, HeadDisjunct, Instance, Name,
    Schema, Term, Tgd, Tuple, UnionQuery, Value, Visibility,
};

/// Entry of an equality pattern: a known value or a class of unknown values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PatternEntry {
    Known,
    Class(u8),
}

/// Which positions of a fact hold known values, and how the others are equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EqualityPattern {
    pub entries: Vec<PatternEntry>,
}

impl EqualityPattern {
    /// Renumbers classes by first occurrence.
    pub fn canonical(raw: &[PatternEntry]) -> EqualityPattern {
        let mut map: BTreeMap<u8, u8> = BTreeMap::new();
        let entries = raw
            .iter()
            .map(|e| match e {
                PatternEntry::Known => PatternEntry::Known,
                PatternEntry::Class(k) => {
                    let n = map.len() as u8;
                    PatternEntry::Class(*map.entry(*k).or_insert(n))
                }
            })
            .collect();
        EqualityPattern { entries }
    }

    pub fn known_positions(&self) -> Vec<usize> {
        (0..self.entries.len())
            .filter(|i| self.entries[*i] == PatternEntry::Known)
            .collect()
    }

    pub fn classes(&self) -> BTreeSet<u8> {
        self.entries
            .iter()
            .filter_map(|e| match e {
                PatternEntry::Class(k) => Some(*k),
                PatternEntry::Known => None,
            })
            .collect()
    }

    /// Every canonical pattern of the given length.
    pub fn all(len: usize) -> Vec<EqualityPattern> {
        fn rec(len: usize, next: u8, cur: &mut Vec<PatternEntry>, out: &mut Vec<EqualityPattern>) {
            if cur.len() == len {
                out.push(EqualityPattern {
                    entries: cur.clone(),
                });
                return;
            }
            cur.push(PatternEntry::Known);
            rec(len, next, cur, out);
            cur.pop();
            for k in 0..=next {
                cur.push(PatternEntry::Class(k));
                rec(len, if k == next { next + 1 } else { next }, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        rec(len, 0, &mut Vec::new(), &mut out);
        out
    }

    /// Suffix used to name the copy of a relation: `k` for a known position, the class
    /// number otherwise.
    pub fn tag(&self) -> String {
        self.entries
            .iter()
            .map(|e| match e {
                PatternEntry::Known => "k".to_string(),
                PatternEntry::Class(k) if *k < 10 => k.to_string(),
                PatternEntry::Class(k) => format!("_{k}_"),
            })
            .collect()
    }
}

/// A Datalog rule with optional inequalities between body terms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatalogRule {
    pub head: Atom,
    pub body: Vec<Atom>,
    pub neq: Vec<(Term, Term)>,
}

/// A Datalog program evaluated under greatest-fixpoint semantics.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GFPProgram {
    /// Extensional relations with arities.
    pub extensional: BTreeMap<Name, usize>,
    /// Intensional relations with arities.
    pub intensional: BTreeMap<Name, usize>,
    pub rules: Vec<DatalogRule>,
    pub constants: BTreeSet<Name>,
    pub goal: Name,
    /// The relation collecting the known values.
    pub adom: Name,
}

impl GFPProgram {
    /// Adds a constant to the domain.
    pub fn add_constant(&mut self, c: &str) {
        if self.constants.insert(name(c)) {
            self.rules.push(DatalogRule {
                head: Atom::new(&self.adom, vec![Term::constant(c)]),
                body: Vec::new(),
                neq: Vec::new(),
            });
        }
    }
}

fn fmt_term(t: &Term) -> String {
    match t {
        Term::Var(v) => v.to_string(),
        Term::Const(c)
            if c.chars().all(|x| x.is_ascii_alphanumeric() || x == '_')
                && !c.starts_with(|x: char| x.is_ascii_lowercase()) =>
        {
            c.to_string()
        }
        Term::Const(c) => format!("{c:?}"),
    }
}

fn fmt_atom(a: &Atom) -> String {
    if a.args.is_empty() {
        return a.relation.to_string();
    }
    let args: Vec<String> = a.args.iter().map(fmt_term).collect();
    format!("{}({})", a.relation, args.join(", "))
}

impl fmt::Display for GFPProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let decl = |m: &BTreeMap<Name, usize>| {
            m.iter()
                .map(|(r, k)| format!("{r}/{k}"))
                .collect::<Vec<_>>()
                .join(", ")
        };
        writeln!(f, "% extensional: {}", decl(&self.extensional))?;
        writeln!(f, "% intensional: {}", decl(&self.intensional))?;
        let cs: Vec<String> = self
            .constants
            .iter()
            .map(|c| fmt_term(&Term::Const(c.clone())))
            .collect();
        writeln!(f, "% constants: {}", cs.join(", "))?;
        writeln!(f, "% goal: {}", self.goal)?;
        for r in &self.rules {
            let mut parts: Vec<String> = r.body.iter().map(fmt_atom).collect();
            parts.extend(
                r.neq
                    .iter()
                    .map(|(a, b)| format!("{} != {}", fmt_term(a), fmt_term(b))),
            );
            if parts.is_empty() {
                writeln!(f, "{}.", fmt_atom(&r.head))?;
            } else {
                writeln!(f, "{} :- {}.", fmt_atom(&r.head), parts.join(", "))?;
            }
        }
        Ok(())
    }
}

fn check_linear(c: &ConstraintSet) -> Result<()> {
    if c.has_egd() {
        return Err(Error::Class(
            "greatest-fixpoint evaluation needs TGDs only".into(),
        ));
    }
    if c.tgds().any(|t| !t.is_linear()) {
        return Err(Error::Class(
            "greatest-fixpoint evaluation needs linear TGDs".into(),
        ));
    }
    Ok(())
}

fn var_list(atoms: &[Atom]) -> Vec<Name> {
    let mut out: Vec<Name> = Vec::new();
    for v in atoms.iter().flat_map(|a| a.vars()) {
        if !out.contains(v) {
            out.push(v.clone());
        }
    }
    out
}

/// Copies of hidden relations keyed by (relation, pattern).
struct Copies {
    schema: Schema,
    names: BTreeMap<(Name, EqualityPattern), Name>,
    queue: Vec<(Name, EqualityPattern)>,
}

impl Copies {
    fn get(&mut self, rel: &Name, p: &EqualityPattern) -> Name {
        let key = (rel.clone(), p.clone());
        if let Some(n) = self.names.get(&key) {
            return n.clone();
        }
        let n = self.schema.fresh_name(&format!("{rel}__{}", p.tag()));
        self.schema
            .add(&n, p.known_positions().len(), Visibility::Hidden)
            .expect("fresh name");
        self.names.insert(key.clone(), n.clone());
        self.queue.push(key);
        n
    }
}

/// Value of a head or body term in the rewritten problem.
#[derive(Clone, Debug, PartialEq, Eq)]
enum Slot {
    Known(Term),
    Class(u8),
}

/// Rewrites `(q, c, s)` so that its negative implication is active-domain controllable:
/// hidden relations are replaced by copies recording known positions and the equality
/// pattern of the rest. Each query disjunct is first packed into one hidden atom.
pub fn enforce_adom_controllability(
    q: &UnionQuery,
    c: &ConstraintSet,
    s: &Schema,
) -> Result<(UnionQuery, ConstraintSet, Schema)> {
    check_linear(c)?;
    if !q.is_boolean() {
        return Err(Error::Class("a Boolean query is needed".into()));
    }
    let mut work_schema = s.clone();
    let mut deps: Vec<Tgd> = c.tgds().cloned().collect();
    let mut packed: Vec<Option<(Name, usize)>> = Vec::new();
    for (i, d) in q.disjuncts.iter().enumerate() {
        if d.atoms.is_empty() {
            packed.push(None);
            continue;
        }
        let vars = var_list(&d.atoms);
        let qn = work_schema.fresh_name(&format!("_aux_q{i}"));
        work_schema.add(&qn, vars.len(), Visibility::Hidden)?;
        let head = Atom {
            relation: qn.clone(),
            args: vars.iter().map(|v| Term::Var(v.clone())).collect(),
        };
        deps.push(Tgd::simple(vec![head], d.atoms.clone()));
        packed.push(Some((qn, vars.len())));
    }
    let mut out_schema = Schema::new();
    for d in s.visible_relations() {
        out_schema.add(&d.name, d.arity, Visibility::Visible)?;
    }
    let mut copies = Copies {
        schema: out_schema,
        names: BTreeMap::new(),
        queue: Vec::new(),
    };
    let mut out_q = Vec::new();
    for p in &packed {
        match p {
            None => out_q.push(ConjunctiveQuery::boolean(Vec::new())),
            Some((qn, k)) => {
                for pat in EqualityPattern::all(*k) {
                    let cn = copies.get(qn, &pat);
                    let args: Vec<Term> = pat
                        .known_positions()
                        .iter()
                        .map(|i| Term::Var(name(&format!("v{i}"))))
                        .collect();
                    out_q.push(ConjunctiveQuery::boolean(vec![Atom {
                        relation: cn,
                        args,
                    }]));
                }
            }
        }
    }
    let mut out_c = ConstraintSet::default();
    let mut fresh_var = 0usize;
    for t in deps.iter().filter(|t| work_schema.is_visible(&t.body[0].relation)) {
        let slots: Vec<Slot> = t.body[0].args.iter().map(|x| Slot::Known(x.clone())).collect();
        let body = t.body[0].clone();
        out_c.push(rewrite_tgd(t, body, &slots, &work_schema, &mut copies, &mut fresh_var));
    }
    let mut done = 0;
    while done < copies.queue.len() {
        let (rel, pat) = copies.queue[done].clone();
        done += 1;
        let cn = copies.names[&(rel.clone(), pat.clone())].clone();
        for t in deps.iter().filter(|t| t.body[0].relation == rel) {
            let Some((body, slots)) = match_body(&t.body[0], &pat, &cn) else {
                continue;
            };
            out_c.push(rewrite_tgd(t, body, &slots, &work_schema, &mut copies, &mut fresh_var));
        }
    }
    Ok((UnionQuery::new(out_q), out_c, copies.schema))
}

/// Matches a body atom against a copy pattern. Returns the rewritten body atom and the
/// slot of each body position.
fn match_body(atom: &Atom, pat: &EqualityPattern, copy: &Name) -> Option<(Atom, Vec<Slot>)> {
    let mut var_slot: BTreeMap<Name, PatternEntry> = BTreeMap::new();
    let mut slots = Vec::new();
    let mut args = Vec::new();
    for (t, e) in atom.args.iter().zip(&pat.entries) {
        match (t, e) {
            (Term::Const(_), PatternEntry::Class(_)) => return None,
            (Term::Const(_), PatternEntry::Known) => {
                slots.push(Slot::Known(t.clone()));
                args.push(t.clone());
            }
            (Term::Var(v), _) => {
                match var_slot.get(v) {
                    Some(prev) if prev != e => return None,
                    _ => {
                        var_slot.insert(v.clone(), *e);
                    }
                }
                match e {
                    PatternEntry::Known => {
                        slots.push(Slot::Known(t.clone()));
                        args.push(t.clone());
                    }
                    PatternEntry::Class(k) => slots.push(Slot::Class(*k)),
                }
            }
        }
    }
    Some((
        Atom {
            relation: copy.clone(),
            args,
        },
        slots,
    ))
}

/// Choice for an existential variable: a known value, or a class (existing or new).
#[derive(Clone, Copy, Debug)]
enum ExChoice {
    Known,
    Class(u8),
}

fn rewrite_tgd(
    t: &Tgd,
    body: Atom,
    body_slots: &[Slot],
    s: &Schema,
    copies: &mut Copies,
    fresh_var: &mut usize,
) -> Tgd {
    let mut var_slot: BTreeMap<Name, Slot> = BTreeMap::new();
    for (x, sl) in t.body[0].args.iter().zip(body_slots) {
        if let Term::Var(v) = x {
            var_slot.insert(v.clone(), sl.clone());
        }
    }
    let body_classes: BTreeSet<u8> = body_slots
        .iter()
        .filter_map(|x| match x {
            Slot::Class(k) => Some(*k),
            Slot::Known(_) => None,
        })
        .collect();
    let base = body_classes.iter().max().map_or(0, |m| m + 1);
    let mut heads: Vec<HeadDisjunct> = Vec::new();
    let mut seen: BTreeSet<Vec<Atom>> = BTreeSet::new();
    for h in &t.heads {
        let ex: Vec<Name> = h
            .exists
            .iter()
            .filter(|y| h.atoms.iter().any(|a| a.vars().any(|v| v == *y)))
            .cloned()
            .collect();
        let mut choices: Vec<Vec<ExChoice>> = vec![Vec::new()];
        for _ in &ex {
            let mut next = Vec::new();
            for ch in &choices {
                let used_new = ch
                    .iter()
                    .filter_map(|c| match c {
                        ExChoice::Class(k) if *k >= base => Some(*k),
                        _ => None,
                    })
                    .max()
                    .map_or(base, |m| m + 1);
                let mut opts = vec![ExChoice::Known];
                opts.extend(body_classes.iter().map(|k| ExChoice::Class(*k)));
                opts.extend((base..=used_new).map(ExChoice::Class));
                for o in opts {
                    let mut c2 = ch.clone();
                    c2.push(o);
                    next.push(c2);
                }
            }
            choices = next;
        }
        'choice: for ch in choices {
            let mut vs = var_slot.clone();
            let mut renamed: BTreeMap<Name, Name> = BTreeMap::new();
            for (y, c) in ex.iter().zip(&ch) {
                match c {
                    ExChoice::Known => {
                        *fresh_var += 1;
                        let ny = name(&format!("{y}_{}", *fresh_var));
                        renamed.insert(y.clone(), ny.clone());
                        vs.insert(y.clone(), Slot::Known(Term::Var(ny)));
                    }
                    ExChoice::Class(k) => {
                        vs.insert(y.clone(), Slot::Class(*k));
                    }
                }
            }
            let mut atoms = Vec::new();
            for a in &h.atoms {
                let slots: Vec<Slot> = a
                    .args
                    .iter()
                    .map(|x| match x {
                        Term::Var(v) => vs[v].clone(),
                        Term::Const(_) => Slot::Known(x.clone()),
                    })
                    .collect();
                let known: Vec<Term> = slots
                    .iter()
                    .filter_map(|x| match x {
                        Slot::Known(t) => Some(t.clone()),
                        Slot::Class(_) => None,
                    })
                    .collect();
                if s.is_visible(&a.relation) {
                    if known.len() != slots.len() {
                        continue 'choice;
                    }
                    atoms.push(Atom {
                        relation: a.relation.clone(),
                        args: known,
                    });
                } else {
                    let raw: Vec<PatternEntry> = slots
                        .iter()
                        .map(|x| match x {
                            Slot::Known(_) => PatternEntry::Known,
                            Slot::Class(k) => PatternEntry::Class(*k),
                        })
                        .collect();
                    let pat = EqualityPattern::canonical(&raw);
                    let cn = copies.get(&a.relation, &pat);
                    atoms.push(Atom {
                        relation: cn,
                        args: known,
                    });
                }
            }
            let key: Vec<Atom> = {
                let mut k = atoms.clone();
                k.sort();
                k
            };
            if !seen.insert(key) {
                continue;
            }
            let exists: Vec<Name> = var_list(&atoms)
                .into_iter()
                .filter(|v| renamed.values().any(|w| w == v))
                .collect();
            heads.push(HeadDisjunct { exists, atoms });
        }
    }
    Tgd::new(vec![body], heads)
}

struct Namer {
    taken: Schema,
}

impl Namer {
    fn fresh(&mut self, base: &str, arity: usize) -> Name {
        let n = self.taken.fresh_name(base);
        self.taken
            .add(&n, arity, Visibility::Hidden)
            .expect("fresh name");
        n
    }
}

/// Builds the greatest-fixpoint program of `(q, c, s)`: one rule per hidden relation
/// (split by equality and constant type when bodies need it) whose body conjoins the
/// heads of the TGDs on that relation, `A`-rules collecting known values, and `Goal`
/// rules for the query disjuncts.
pub fn build_gfp_program(q: &UnionQuery, c: &ConstraintSet, s: &Schema) -> Result<GFPProgram> {
    check_linear(c)?;
    if !q.is_boolean() {
        return Err(Error::Class("a Boolean query is needed".into()));
    }
    let mut namer = Namer { taken: s.clone() };
    for d in &c.deps {
        for a in d.atoms() {
            if !namer.taken.contains(&a.relation) {
                namer.taken.add(&a.relation, a.args.len(), Visibility::Hidden)?;
            }
        }
    }
    let adom = namer.fresh("A", 1);
    let goal = namer.fresh("Goal", 0);
    let mut p = GFPProgram {
        extensional: s.visible_relations().map(|d| (d.name.clone(), d.arity)).collect(),
        intensional: BTreeMap::new(),
        rules: Vec::new(),
        constants: BTreeSet::new(),
        goal: goal.clone(),
        adom: adom.clone(),
    };
    p.intensional.insert(adom.clone(), 1);
    p.intensional.insert(goal.clone(), 0);
    for d in s.visible_relations() {
        let xs: Vec<Term> = (1..=d.arity).map(|i| Term::var(&format!("x{i}"))).collect();
        for x in &xs {
            p.rules.push(DatalogRule {
                head: Atom::new(&adom, vec![x.clone()]),
                body: vec![Atom::new(&d.name, xs.clone())],
                neq: Vec::new(),
            });
        }
    }
    let mut consts: BTreeSet<Name> = c.constants();
    consts.extend(q.constants());
    for k in &consts {
        p.add_constant(k);
    }
    let mut sat: BTreeMap<usize, (Name, Vec<Name>)> = BTreeMap::new();
    let tgds: Vec<&Tgd> = c.tgds().collect();
    for (i, t) in tgds.iter().enumerate() {
        if t.heads.len() > 1 {
            let xs = var_list(&t.body);
            let sn = namer.fresh(&format!("Sat{i}"), xs.len());
            p.intensional.insert(sn.clone(), xs.len());
            for h in &t.heads {
                let mut body: Vec<Atom> = xs
                    .iter()
                    .map(|x| Atom::new(&adom, vec![Term::Var(x.clone())]))
                    .collect();
                body.extend(h.atoms.iter().cloned());
                p.rules.push(DatalogRule {
                    head: Atom::new(&sn, xs.iter().map(|x| Term::Var(x.clone())).collect()),
                    body,
                    neq: Vec::new(),
                });
            }
            sat.insert(i, (sn, xs));
        }
    }
    let mut hidden: BTreeMap<Name, usize> = s.hidden_relations().map(|d| (d.name.clone(), d.arity)).collect();
    for t in &tgds {
        for a in t.body.iter().chain(t.heads.iter().flat_map(|h| h.atoms.iter())) {
            if !s.is_visible(&a.relation) {
                hidden.entry(a.relation.clone()).or_insert(a.args.len());
            }
        }
    }
    for d in &q.disjuncts {
        for a in &d.atoms {
            if !s.is_visible(&a.relation) {
                hidden.entry(a.relation.clone()).or_insert(a.args.len());
            }
        }
    }
    let mut ex_counter = 0usize;
    for (r, k) in &hidden {
        p.intensional.insert(r.clone(), *k);
        let on_r: Vec<usize> = (0..tgds.len())
            .filter(|i| tgds[*i].body[0].relation == *r)
            .collect();
        let plain = on_r.iter().all(|i| {
            let b = &tgds[*i].body[0];
            !b.has_repeated_var() && b.constants().next().is_none()
        });
        let body_consts: BTreeSet<Name> = on_r
            .iter()
            .flat_map(|i| tgds[*i].body[0].constants().cloned().collect::<Vec<_>>())
            .collect();
        for (head_terms, neq) in position_types(*k, plain, &body_consts) {
            let mut body: Vec<Atom> = head_terms
                .iter()
                .filter(|t| t.is_var())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .map(|x| Atom::new(&adom, vec![x.clone()]))
                .collect();
            let mut dead = false;
            for &i in &on_r {
                let t = tgds[i];
                let Some(theta) = unify(&t.body[0], &head_terms) else {
                    continue;
                };
                if t.heads.is_empty() {
                    dead = true;
                    break;
                }
                if let Some((sn, xs)) = sat.get(&i) {
                    body.push(Atom::new(sn, xs.iter().map(|x| theta[x].clone()).collect()));
                    continue;
                }
                let h = &t.heads[0];
                let mut ren: BTreeMap<Name, Term> = theta.clone();
                for y in &h.exists {
                    ex_counter += 1;
                    ren.insert(y.clone(), Term::var(&format!("{y}_e{ex_counter}")));
                }
                for a in &h.atoms {
                    body.push(a.rename(&|v| ren[v].clone()));
                }
            }
            if dead {
                continue;
            }
            p.rules.push(DatalogRule {
                head: Atom::new(r, head_terms),
                body,
                neq,
            });
        }
    }
    for d in &q.disjuncts {
        p.rules.push(DatalogRule {
            head: Atom::new(&goal, Vec::new()),
            body: d.atoms.clone(),
            neq: Vec::new(),
        });
    }
    Ok(p)
}

/// Head argument lists covering all tuples of a relation, one per equality and constant
/// type, with the inequalities that pin the type down. A single plain head when no body
/// distinguishes types.
fn position_types(k: usize, plain: bool, consts: &BTreeSet<Name>) -> Vec<(Vec<Term>, Vec<(Term, Term)>)> {
    let var = |i: usize| Term::var(&format!("x{i}"));
    if plain {
        return vec![((1..=k).map(var).collect(), Vec::new())];
    }
    let consts: Vec<Name> = consts.iter().cloned().collect();
    let mut out = Vec::new();
    // Each position gets a block id; each block is a constant index or a fresh variable.
    fn rec(
        k: usize,
        consts: &[Name],
        cur: &mut Vec<Term>,
        blocks: &mut Vec<Term>,
        out: &mut Vec<(Vec<Term>, Vec<(Term, Term)>)>,
    ) {
        if cur.len() == k {
            let vars: Vec<&Term> = blocks.iter().filter(|t| t.is_var()).collect();
            let mut neq = Vec::new();
            for (i, a) in vars.iter().enumerate() {
                for b in &vars[i + 1..] {
                    neq.push(((*a).clone(), (*b).clone()));
                }
                for c in consts {
                    neq.push(((*a).clone(), Term::Const(c.clone())));
                }
            }
            out.push((cur.clone(), neq));
            return;
        }
        for b in blocks.clone() {
            cur.push(b);
            rec(k, consts, cur, blocks, out);
            cur.pop();
        }
        for c in consts {
            let t = Term::Const(c.clone());
            if blocks.contains(&t) {
                continue;
            }
            blocks.push(t.clone());
            cur.push(t);
            rec(k, consts, cur, blocks, out);
            cur.pop();
            blocks.pop();
        }
        let v = Term::var(&format!("x{}", cur.len() + 1));
        blocks.push(v.clone());
        cur.push(v);
        rec(k, consts, cur, blocks, out);
        cur.pop();
        blocks.pop();
    }
    rec(k, &consts, &mut Vec::new(), &mut Vec::new(), &mut out);
    out
}

/// Unifies a body atom with head terms in which distinct terms denote distinct values.
fn unify(body: &Atom, terms: &[Term]) -> Option<BTreeMap<Name, Term>> {
    let mut theta: BTreeMap<Name, Term> = BTreeMap::new();
    for (b, t) in body.args.iter().zip(terms) {
        match b {
            Term::Const(_) => {
                if b != t {
                    return None;
                }
            }
            Term::Var(v) => match theta.get(v) {
                Some(prev) if prev != t => return None,
                _ => {
                    theta.insert(v.clone(), t.clone());
                }
            },
        }
    }
    Some(theta)
}

struct CompiledRule {
    pattern: Pattern,
    head_rel: Name,
    head: Vec<std::result::Result<usize, Value>>,
    neq: Vec<(std::result::Result<usize, Value>, std::result::Result<usize, Value>)>,
}

fn compile_rule(r: &DatalogRule) -> CompiledRule {
    let pattern = Pattern::new(&r.body);
    let slot = |t: &Term| match t {
        Term::Var(v) => Ok(pattern.var_index(v).expect("safe rule")),
        Term::Const(c) => Err(Value::Const(c.clone())),
    };
    let head = r.head.args.iter().map(slot).collect();
    let neq = r.neq.iter().map(|(a, b)| (slot(a), slot(b))).collect();
    CompiledRule {
        head_rel: r.head.relation.clone(),
        head,
        neq,
        pattern,
    }
}

/// Largest number of intensional tuples the evaluator materializes.
pub const GFP_CEILING: u128 = 20_000_000;

/// Evaluates `p` over `ext` from the full intensional database down to the greatest
/// fixpoint of the immediate consequence operator (a tuple stays iff some rule derives
/// it). Returns the truth of the goal and the final database including `ext`.
pub fn eval_gfp(p: &GFPProgram, ext: &Instance) -> Result<(bool, Instance)> {
    eval_gfp_observed(p, ext, &mut |_| {})
}

/// [`eval_gfp`] calling `round` with the intensional database before each application of
/// the operator; the last call receives the fixpoint.
pub fn eval_gfp_observed(
    p: &GFPProgram,
    ext: &Instance,
    round: &mut dyn FnMut(&Instance),
) -> Result<(bool, Instance)> {
    let ext = ext.restrict(|r| p.extensional.contains_key(r));
    let mut dom: BTreeSet<Value> = ext.active_domain();
    dom.extend(p.constants.iter().map(|c| Value::Const(c.clone())));
    let dom: Vec<Value> = dom.into_iter().collect();
    let mut size: u128 = 0;
    for k in p.intensional.values() {
        size = size.saturating_add((dom.len() as u128).saturating_pow(*k as u32));
    }
    if size > GFP_CEILING {
        return Err(Error::Ceiling {
            size,
            ceiling: GFP_CEILING,
        });
    }
    let mut cur = Instance::new();
    for (r, k) in &p.intensional {
        for t in itertools::Itertools::multi_cartesian_product((0..*k).map(|_| dom.iter().cloned())) {
            cur.insert_tuple(r, t);
        }
        if *k == 0 {
            cur.insert_tuple(r, Vec::new());
        }
    }
    let rules: Vec<CompiledRule> = p.rules.iter().map(compile_rule).collect();
    loop {
        round(&cur);
        let db = ext.union(&cur);
        let next = consequence(&rules, &db);
        debug_assert!(next.is_subset(&cur));
        if next == cur {
            break;
        }
        cur = next;
    }
    let goal = cur.contains_tuple(&p.goal, &[]);
    Ok((goal, ext.union(&cur)))
}

fn consequence(rules: &[CompiledRule], db: &Instance) -> Instance {
    let idx = Index::new(db);
    let mut out = Instance::new();
    for r in rules {
        let get = |s: &std::result::Result<usize, Value>, b: &[Option<Value>]| -> Value {
            match s {
                Ok(i) => b[*i].clone().expect("bound"),
                Err(v) => v.clone(),
            }
        };
        let mut derived: Vec<Tuple> = Vec::new();
        r.pattern.search(&idx, Vec::new(), &mut |b| {
            if r.neq.iter().all(|(x, y)| get(x, b) != get(y, b)) {
                derived.push(r.head.iter().map(|s| get(s, b)).collect());
            }
            ControlFlow::Continue(())
        });
        for t in derived {
            out.insert_tuple(&r.head_rel, t);
        }
    }
    out
}

/// Which route [`nqi_via_gfp`] takes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GfpRoute {
    /// Constraints whose witnesses collapse onto the known values.
    Direct,
    /// Rewritten with [`enforce_adom_controllability`] first.
    Rewritten,
}

/// Result of the pipeline, with the program and fixpoint for inspection.
#[derive(Clone, Debug)]
pub struct GfpRun {
    pub nqi: bool,
    pub route: GfpRoute,
    pub program: GFPProgram,
    pub fixpoint: Instance,
    /// Goal truth in the fixpoint.
    pub goal: bool,
    /// The visible-body TGDs hold in `V` plus the fixpoint.
    pub obligations_met: bool,
}

/// Decides negative implication for linear TGDs exactly.
pub fn nqi_via_gfp(q: &UnionQuery, c: &ConstraintSet, s: &Schema, v: &Instance) -> Result<bool> {
    Ok(nqi_via_gfp_run(q, c, s, v)?.nqi)
}

/// [`nqi_via_gfp`] with the intermediate program and fixpoint.
pub fn nqi_via_gfp_run(q: &UnionQuery, c: &ConstraintSet, s: &Schema, v: &Instance) -> Result<GfpRun> {
    check_linear(c)?;
    if !q.is_boolean() {
        return Err(Error::Class("a Boolean query is needed".into()));
    }
    let v = v.visible_part(s);
    let direct = c.tgds().all(is_id_like);
    let (q2, c2, s2, route) = if direct {
        (q.clone(), c.clone(), s.clone(), GfpRoute::Direct)
    } else {
        let (q2, c2, s2) = enforce_adom_controllability(q, c, s)?;
        (q2, c2, s2, GfpRoute::Rewritten)
    };
    let mut program = build_gfp_program(&q2, &c2, &s2)?;
    let known_empty = v.active_domain().is_empty() && c2.constants().is_empty() && q2.constants().is_empty();
    if direct && known_empty {
        program.add_constant("!w0");
    }
    let (goal, fixpoint) = eval_gfp(&program, &v)?;
    let obligations = ConstraintSet::new(
        c2.deps
            .iter()
            .filter(|d| s2.is_visible(&d.body()[0].relation))
            .cloned()
            .collect(),
    );
    let hidden = fixpoint.restrict(|r| s2.is_hidden(r));
    let world = v.union(&hidden);
    let obligations_met = first_violation(&obligations, &world).is_none();
    Ok(GfpRun {
        nqi: !(goal && obligations_met),
        route,
        program,
        fixpoint,
        goal,
        obligations_met,
    })
}

/// The hidden part of the greatest fixpoint, for inspection: relations of `s` only.
pub fn fixpoint_projection(run: &GfpRun, s: &Schema) -> Instance {
    run.fixpoint.restrict(|r| s.contains(r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Fact;

    fn a(r: &str, args: &[&str]) -> Atom {
        Atom::parse_args(r, args)
    }

    fn medical() -> (UnionQuery, ConstraintSet, Schema) {
        (
            UnionQuery::boolean(vec![a("Appointment", &["Smith", "x", "Jones"])]),
            ConstraintSet::new(vec![Tgd::simple(
                vec![a("Appointment", &["p", "a", "d"])],
                vec![a("Patient", &["p"])],
            )
            .into()]),
            Schema::new().visible("Patient", 1).hidden("Appointment", 3),
        )
    }

    #[test]
    fn medical_program_and_answers() {
        let (q, c, s) = medical();
        let p = build_gfp_program(&q, &c, &s).unwrap();
        let text = p.to_string();
        assert!(text.contains("A(x1) :- Patient(x1)."), "{text}");
        assert!(text.contains("Appointment(x1, x2, x3) :- A(x1), A(x2), A(x3), Patient(x1)."), "{text}");
        assert!(text.contains("Goal :- Appointment(Smith, x, Jones)."), "{text}");
        assert!(nqi_via_gfp(&q, &c, &s, &Instance::new()).unwrap());
        let v = Instance::from_facts([Fact::consts("Patient", &["Smith"])]);
        assert!(!nqi_via_gfp(&q, &c, &s, &v).unwrap());
    }

    #[test]
    fn self_support_survives() {
        let p = GFPProgram {
            extensional: BTreeMap::new(),
            intensional: [(name("U"), 1), (name("Goal"), 0), (name("A"), 1)].into_iter().collect(),
            rules: vec![
                DatalogRule {
                    head: a("U", &["x"]),
                    body: vec![a("U", &["x"])],
                    neq: Vec::new(),
                },
                DatalogRule {
                    head: a("Goal", &[]),
                    body: vec![a("U", &["x"])],
                    neq: Vec::new(),
                },
            ],
            constants: ["a"].into_iter().map(name).collect(),
            goal: name("Goal"),
            adom: name("A"),
        };
        let (goal, fp) = eval_gfp(&p, &Instance::new()).unwrap();
        assert!(goal);
        assert_eq!(fp.tuples("U").unwrap().len(), 1);
    }

    #[test]
    fn unknown_values_needed() {
        // R(x, x) has no witness over {a} but the rewrite finds one with a fresh value.
        let s = Schema::new().visible("S", 1).hidden("R", 2);
        let c = ConstraintSet::new(vec![
            Tgd::simple(vec![a("S", &["x"])], vec![a("R", &["x", "y"])]).into(),
            Tgd::new(vec![a("R", &["x", "x"])], Vec::new()).into(),
        ]);
        let q = UnionQuery::boolean(vec![a("S", &["x"])]);
        let v = Instance::from_facts([Fact::consts("S", &["a"])]);
        let run = nqi_via_gfp_run(&q, &c, &s, &v).unwrap();
        assert_eq!(run.route, GfpRoute::Rewritten);
        assert!(!run.nqi);
    }

    #[test]
    fn empty_known_domain() {
        let s = Schema::new().hidden("H", 1);
        let q = UnionQuery::boolean(vec![a("H", &["x"])]);
        assert!(!nqi_via_gfp(&q, &ConstraintSet::default(), &s, &Instance::new()).unwrap());
    }

    #[test]
    fn pattern_enumeration() {
        assert_eq!(EqualityPattern::all(2).len(), 5);
        assert_eq!(EqualityPattern::all(3).len(), 15);
        let p = EqualityPattern::canonical(&[PatternEntry::Class(4), PatternEntry::Known, PatternEntry::Class(4)]);
        assert_eq!(p.tag(), "0k0");
    }
}
