//! Answer-preserving transformations between problems.
//!
//! Every reduction is a pure function from one [`ProblemInstance`] to another. Relations
//! introduced by a reduction are named `_aux_…`, made unique against the input schema.

use std::collections::BTreeSet;
use std::fmt;

use crate::classify::body_connected;
use crate::deciders::some_visible_fact;
use crate::error::{Error, Result};
use crate::eval::{canonical_db, canonical_query};
use crate::model::{
    name, Atom, ConjunctiveQuery, ConstraintSet, Dependency, Egd, HeadDisjunct, Instance,
    Name, Schema, Term, Tgd, UnionQuery, Value, Visibility,
};
use crate::textio::ProblemFile;

/// The decision problem a [`ProblemInstance`] poses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ProblemKind {
    Pqi,
    Nqi,
    ExistsPqi,
    ExistsNqi,
    Owq,
    Realizability,
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ProblemKind::Pqi => "pqi",
            ProblemKind::Nqi => "nqi",
            ProblemKind::ExistsPqi => "exists-pqi",
            ProblemKind::ExistsNqi => "exists-nqi",
            ProblemKind::Owq => "owq",
            ProblemKind::Realizability => "realizability",
        };
        f.write_str(s)
    }
}

/// A problem together with its inputs. `query` is absent for realizability; `instance`
/// is the visible instance (PQI, NQI, realizability), the open-world instance (OWQ) or
/// absent (existence problems). OWQ problems use an all-hidden schema.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProblemInstance {
    pub kind: ProblemKind,
    pub query: Option<UnionQuery>,
    pub constraints: ConstraintSet,
    pub schema: Schema,
    pub instance: Option<Instance>,
}

impl ProblemInstance {
    pub fn pqi(q: UnionQuery, c: ConstraintSet, s: Schema, v: Instance) -> Self {
        Self::make(ProblemKind::Pqi, Some(q), c, s, Some(v))
    }

    pub fn nqi(q: UnionQuery, c: ConstraintSet, s: Schema, v: Instance) -> Self {
        Self::make(ProblemKind::Nqi, Some(q), c, s, Some(v))
    }

    pub fn exists_pqi(q: UnionQuery, c: ConstraintSet, s: Schema) -> Self {
        Self::make(ProblemKind::ExistsPqi, Some(q), c, s, None)
    }

    pub fn exists_nqi(q: UnionQuery, c: ConstraintSet, s: Schema) -> Self {
        Self::make(ProblemKind::ExistsNqi, Some(q), c, s, None)
    }

    /// The schema is derived from the relations used, all hidden.
    pub fn owq(q: UnionQuery, c: ConstraintSet, i: Instance) -> Result<Self> {
        let s = crate::oracle::schema_of(&c, &q, &i)?;
        Ok(Self::make(ProblemKind::Owq, Some(q), c, s, Some(i)))
    }

    pub fn realizability(c: ConstraintSet, s: Schema, v: Instance) -> Self {
        Self::make(ProblemKind::Realizability, None, c, s, Some(v))
    }

    fn make(
        kind: ProblemKind,
        query: Option<UnionQuery>,
        constraints: ConstraintSet,
        schema: Schema,
        instance: Option<Instance>,
    ) -> Self {
        ProblemInstance {
            kind,
            query,
            constraints,
            schema,
            instance,
        }
    }

    /// The query; the empty union for realizability.
    pub fn q(&self) -> UnionQuery {
        self.query.clone().unwrap_or_else(|| UnionQuery::new(Vec::new()))
    }

    /// The instance; empty for existence problems.
    pub fn inst(&self) -> Instance {
        self.instance.clone().unwrap_or_default()
    }

    /// Checks that query, constraints and instance fit the schema.
    pub fn check(&self) -> Result<()> {
        self.schema.check_constraints(&self.constraints)?;
        if let Some(q) = &self.query {
            q.check_well_formed()?;
            self.schema.check_query(q)?;
            if !q.is_boolean() {
                return Err(Error::Class("problem queries must be Boolean".into()));
            }
        }
        if let Some(i) = &self.instance {
            self.schema.check_instance(i)?;
        }
        Ok(())
    }

    /// Atoms of query and constraints, plus facts and declared relations.
    pub fn size(&self) -> usize {
        let q: usize = self
            .query
            .iter()
            .flat_map(|q| &q.disjuncts)
            .map(|d| d.atoms.len() + 1)
            .sum();
        let c: usize = self.constraints.deps.iter().map(|d| d.atoms().len()).sum();
        q + c + self.instance.as_ref().map_or(0, Instance::len) + self.schema.len()
    }

    /// A file with the query named `Q` and the instance named `V` (`I` for OWQ).
    pub fn to_file(&self) -> ProblemFile {
        let mut p = ProblemFile {
            schema: self.schema.clone(),
            constraints: self.constraints.clone(),
            ..ProblemFile::default()
        };
        if let Some(q) = &self.query {
            p.queries.insert(name("Q"), q.clone());
        }
        if let Some(i) = &self.instance {
            let n = if self.kind == ProblemKind::Owq { "I" } else { "V" };
            p.instances.insert(name(n), i.clone());
        }
        p
    }

    /// Reads a problem of the given kind from a file. Without explicit names, the
    /// first Boolean query and the first instance are used; a missing instance is empty.
    pub fn from_file(
        kind: ProblemKind,
        p: &ProblemFile,
        query: Option<&str>,
        instance: Option<&str>,
    ) -> Result<Self> {
        let q = match query {
            Some(n) => Some(p.query(n)?.clone()),
            None => p
                .queries
                .values()
                .find(|q| q.is_boolean())
                .or_else(|| p.queries.values().next())
                .cloned(),
        };
        let i = match instance {
            Some(n) => p.instance(n)?.clone(),
            None => p.instances.values().next().cloned().unwrap_or_default(),
        };
        let need_q = || q.clone().ok_or_else(|| Error::Schema("the file has no query".into()));
        let c = p.constraints.clone();
        let s = p.schema.clone();
        let out = match kind {
            ProblemKind::Pqi => Self::pqi(need_q()?, c, s, i),
            ProblemKind::Nqi => Self::nqi(need_q()?, c, s, i),
            ProblemKind::ExistsPqi => Self::exists_pqi(need_q()?, c, s),
            ProblemKind::ExistsNqi => Self::exists_nqi(need_q()?, c, s),
            ProblemKind::Owq => {
                let q = need_q()?;
                let mut s = s.all_hidden();
                for r in crate::oracle::schema_of(&c, &q, &i)?.relations() {
                    if !s.contains(&r.name) {
                        s.add(&r.name, r.arity, Visibility::Hidden)?;
                    }
                }
                Self::make(ProblemKind::Owq, Some(q), c, s, Some(i))
            }
            ProblemKind::Realizability => Self::realizability(c, s, i),
        };
        out.check()?;
        Ok(out)
    }
}

fn expect(p: &ProblemInstance, kind: ProblemKind) -> Result<()> {
    if p.kind == kind {
        Ok(())
    } else {
        Err(Error::Class(format!("expected a {kind} problem, got {}", p.kind)))
    }
}

fn constant_free(p: &ProblemInstance, what: &str) -> Result<()> {
    if p.constraints.constants().is_empty() && p.q().constants().is_empty() {
        Ok(())
    } else {
        Err(Error::Class(format!("{what} needs a constant-free query and constraints")))
    }
}

/// Adds a fresh `_aux_` relation and returns its name.
fn aux(s: &mut Schema, base: &str, arity: usize, vis: Visibility) -> Name {
    let n = s.fresh_name(&format!("_aux_{base}"));
    s.add(&n, arity, vis).expect("fresh relation");
    n
}

fn fresh_var(used: &mut BTreeSet<Name>, base: &str) -> Name {
    let n = if used.contains(base) {
        (0..)
            .map(|i| format!("{base}{i}"))
            .find(|c| !used.contains(c.as_str()))
            .expect("unbounded")
    } else {
        base.to_string()
    };
    let n = name(&n);
    used.insert(n.clone());
    n
}

/// A constant name not in `used`.
fn fresh_const(used: &mut BTreeSet<Name>, base: &str) -> Name {
    let mut n = base.to_string();
    while used.contains(n.as_str()) {
        n.push('\'');
    }
    let n = name(&n);
    used.insert(n.clone());
    n
}

fn dep_vars(d: &Dependency) -> BTreeSet<Name> {
    let mut out: BTreeSet<Name> = d.atoms().iter().flat_map(|a| a.vars().cloned()).collect();
    match d {
        Dependency::Tgd(t) => out.extend(t.heads.iter().flat_map(|h| h.exists.iter().cloned())),
        Dependency::Egd(e) => {
            out.insert(e.lhs.clone());
        }
    }
    out
}


fn atom(r: &Name, args: Vec<Term>) -> Atom {
    Atom {
        relation: r.clone(),
        args,
    }
}

fn extend(a: &Atom, t: &Term) -> Atom {
    let mut args = a.args.clone();
    args.push(t.clone());
    atom(&a.relation, args)
}

fn vars(names: &[Name]) -> Vec<Term> {
    names.iter().map(|n| Term::Var(n.clone())).collect()
}


/// Head disjunct whose existential variables are those not bound by `bound`.
fn head(bound: &BTreeSet<Name>, atoms: Vec<Atom>) -> HeadDisjunct {
    let mut exists: Vec<Name> = Vec::new();
    for v in atoms.iter().flat_map(|a| a.vars()) {
        if !bound.contains(v) && !exists.contains(v) {
            exists.push(v.clone());
        }
    }
    HeadDisjunct { exists, atoms }
}

fn vars_of(atoms: &[Atom]) -> BTreeSet<Name> {
    atoms.iter().flat_map(|a| a.vars().cloned()).collect()
}

/// Adds `t` as last argument of every atom of `d`.
fn extend_dep(d: &Dependency, t: &Term) -> Dependency {
    match d {
        Dependency::Tgd(g) => Dependency::Tgd(Tgd {
            body: g.body.iter().map(|a| extend(a, t)).collect(),
            heads: g
                .heads
                .iter()
                .map(|h| HeadDisjunct {
                    exists: h.exists.clone(),
                    atoms: h.atoms.iter().map(|a| extend(a, t)).collect(),
                })
                .collect(),
        }),
        Dependency::Egd(e) => Dependency::Egd(Egd {
            body: e.body.iter().map(|a| extend(a, t)).collect(),
            lhs: e.lhs.clone(),
            rhs: e.rhs.clone(),
        }),
    }
}

fn widened(s: &Schema, extra: usize) -> Schema {
    let mut out = Schema::new();
    for r in s.relations() {
        out.add(&r.name, r.arity + extra, r.visibility).expect("same names");
    }
    out
}

/// Replaces a Boolean UCQ by a CQ: every relation gains a truth-value position, the
/// visible tables `Or`, `Zero`, `One` evaluate the disjunction, and every relation
/// holds the padding fact `R(⊥,…,⊥,0)`: visible ones directly, hidden ones through a
/// visible `Pad_R` and the ID `Pad_R(x̄) → R(x̄)`. The padding lets every disjunct hold
/// with truth value 0. Needs a PQI problem with constant-free query and constraints.
pub fn ucq_to_cq(p: &ProblemInstance) -> Result<ProblemInstance> {
    expect(p, ProblemKind::Pqi)?;
    constant_free(p, "the disjunction encoding")?;
    let q = p.q();
    let v = p.inst();
    let mut s = widened(&p.schema, 1);
    let or = aux(&mut s, "Or", 3, Visibility::Visible);
    let zero = aux(&mut s, "Zero", 1, Visibility::Visible);
    let one = aux(&mut s, "One", 1, Visibility::Visible);
    let mut pads = Vec::new();
    for r in p.schema.hidden_relations() {
        let pad = aux(&mut s, &format!("Pad_{}", r.name), r.arity + 1, Visibility::Visible);
        pads.push((pad, r.name.clone(), r.arity));
    }

    let mut deps = Vec::new();
    for (pad, r, k) in &pads {
        let args: Vec<Term> = (0..=*k).map(|i| Term::var(&format!("x{i}"))).collect();
        deps.push(Tgd::simple(vec![atom(pad, args.clone())], vec![atom(r, args)]).into());
    }
    for d in &p.constraints.deps {
        let mut used = dep_vars(d);
        let b = Term::Var(fresh_var(&mut used, "b"));
        let mut nd = extend_dep(d, &b);
        if let Dependency::Tgd(t) = &mut nd {
            if t.heads.is_empty() {
                t.body.push(atom(&one, vec![b.clone()]));
            }
        }
        deps.push(nd);
    }

    let mut used: BTreeSet<Name> = BTreeSet::new();
    let mut renamed: Vec<Vec<Atom>> = Vec::new();
    for (i, d) in q.disjuncts.iter().enumerate() {
        let map = |x: &Name| Term::Var(name(&format!("{x}_{i}")));
        let atoms: Vec<Atom> = d.atoms.iter().map(|a| a.rename(&map)).collect();
        used.extend(vars_of(&atoms));
        renamed.push(atoms);
    }
    let c: Vec<Term> = (0..=renamed.len())
        .map(|i| Term::Var(fresh_var(&mut used, &format!("c{i}"))))
        .collect();
    let mut atoms = vec![atom(&zero, vec![c[0].clone()])];
    for (i, body) in renamed.iter().enumerate() {
        let b = Term::Var(fresh_var(&mut used, &format!("b{}", i + 1)));
        atoms.extend(body.iter().map(|a| extend(a, &b)));
        atoms.push(atom(&or, vec![c[i].clone(), b, c[i + 1].clone()]));
    }
    atoms.push(atom(&one, vec![c[renamed.len()].clone()]));
    let q2 = UnionQuery::boolean(atoms);

    let mut taken: BTreeSet<Name> = v
        .active_domain()
        .into_iter()
        .filter_map(|x| match x {
            Value::Const(c) => Some(c),
            Value::Null(_) => None,
        })
        .collect();
    let f = Value::Const(fresh_const(&mut taken, "0"));
    let t = Value::Const(fresh_const(&mut taken, "1"));
    let bot = Value::Const(fresh_const(&mut taken, "Bot"));
    let mut v2 = Instance::new();
    for row in [[&t, &t, &t], [&t, &f, &t], [&f, &t, &t], [&f, &f, &f]] {
        v2.insert_tuple(&or, row.iter().map(|x| (*x).clone()).collect());
    }
    v2.insert_tuple(&zero, vec![f.clone()]);
    v2.insert_tuple(&one, vec![t.clone()]);
    for r in p.schema.visible_relations() {
        let mut pad = vec![bot.clone(); r.arity];
        pad.push(f.clone());
        v2.insert_tuple(&r.name, pad);
    }
    for (padr, _, k) in &pads {
        let mut pad = vec![bot.clone(); *k];
        pad.push(f.clone());
        v2.insert_tuple(padr, pad);
    }
    for fact in v.facts() {
        let mut args = fact.args.clone();
        args.push(t.clone());
        v2.insert_tuple(&fact.relation, args);
    }
    Ok(ProblemInstance::pqi(q2, ConstraintSet::new(deps), s, v2))
}

/// Splits disjunctions with more than two disjuncts through fresh hidden relations over
/// the frontier of the remaining disjuncts.
fn binarize(c: &ConstraintSet, s: &mut Schema) -> Vec<Dependency> {
    let mut out = Vec::new();
    let mut work: Vec<Dependency> = c.deps.iter().rev().cloned().collect();
    while let Some(d) = work.pop() {
        match d {
            Dependency::Tgd(t) if t.heads.len() > 2 => {
                let bvars = t.body_vars();
                let rest: Vec<HeadDisjunct> = t.heads[1..].to_vec();
                let fr: Vec<Name> = rest
                    .iter()
                    .flat_map(|h| h.atoms.iter().flat_map(|a| a.vars().cloned()))
                    .filter(|v| bvars.contains(v))
                    .collect::<BTreeSet<_>>()
                    .into_iter()
                    .collect();
                let x = aux(s, "Or_rest", fr.len(), Visibility::Hidden);
                let xa = atom(&x, vars(&fr));
                out.push(Dependency::Tgd(Tgd::new(
                    t.body.clone(),
                    vec![t.heads[0].clone(), HeadDisjunct { exists: Vec::new(), atoms: vec![xa.clone()] }],
                )));
                work.push(Dependency::Tgd(Tgd::new(vec![xa], rest)));
            }
            other => out.push(other),
        }
    }
    out
}

/// Replaces disjunctive linear TGDs by linear TGDs with the constants `0` and `1`: each
/// relation gains a truth-value position, a two-way disjunction becomes a conjunction
/// with a visible `Or(b1, b2)` lookup, and `Init`/`Check` force the lookup table to be
/// the intended one. Needs an existence-of-PQI problem with constant-free, linear TGDs.
pub fn disj_to_constants(p: &ProblemInstance) -> Result<ProblemInstance> {
    expect(p, ProblemKind::ExistsPqi)?;
    constant_free(p, "the disjunction-to-constants encoding")?;
    if p.constraints.has_egd() || p.constraints.tgds().any(|t| !t.is_linear()) {
        return Err(Error::Class(
            "the disjunction-to-constants encoding needs linear TGDs".into(),
        ));
    }
    let mut s0 = p.schema.clone();
    let deps = binarize(&p.constraints, &mut s0);
    let mut s = widened(&s0, 1);
    let or = aux(&mut s, "Or", 2, Visibility::Visible);
    let init = aux(&mut s, "Init", 0, Visibility::Visible);
    let check = aux(&mut s, "Check", 1, Visibility::Hidden);
    let zero = Term::Const(name("0"));
    let one = Term::Const(name("1"));

    let mut out = Vec::new();
    for d in &deps {
        let Dependency::Tgd(t) = d else { unreachable!("EGDs rejected above") };
        let body: Vec<Atom> = t.body.iter().map(|a| extend(a, &one)).collect();
        let heads = match t.heads.len() {
            0 => Vec::new(),
            1 => vec![HeadDisjunct {
                exists: t.heads[0].exists.clone(),
                atoms: t.heads[0].atoms.iter().map(|a| extend(a, &one)).collect(),
            }],
            _ => {
                let mut used = dep_vars(d);
                let b1 = fresh_var(&mut used, "b1");
                let b2 = fresh_var(&mut used, "b2");
                let mut exists = Vec::new();
                let mut atoms = Vec::new();
                for (h, b) in t.heads.iter().zip([&b1, &b2]) {
                    exists.extend(h.exists.iter().cloned());
                    atoms.extend(h.atoms.iter().map(|a| extend(a, &Term::Var(b.clone()))));
                }
                exists.push(b1.clone());
                exists.push(b2.clone());
                atoms.push(atom(&or, vec![Term::Var(b1), Term::Var(b2)]));
                vec![HeadDisjunct { exists, atoms }]
            }
        };
        out.push(Dependency::Tgd(Tgd::new(body, heads)));
    }
    let init_atom = atom(&init, Vec::new());
    out.push(Dependency::Tgd(Tgd::simple(
        vec![init_atom.clone()],
        vec![
            atom(&or, vec![zero.clone(), one.clone()]),
            atom(&or, vec![one.clone(), zero.clone()]),
            atom(&or, vec![one.clone(), one.clone()]),
        ],
    )));
    out.push(Dependency::Tgd(Tgd::simple(
        vec![init_atom.clone()],
        vec![
            atom(&or, vec![Term::var("b1"), Term::var("b2")]),
            atom(&check, vec![Term::var("b1")]),
            atom(&check, vec![Term::var("b2")]),
        ],
    )));
    let q = UnionQuery::new(
        p.q()
            .disjuncts
            .iter()
            .map(|d| {
                let mut atoms: Vec<Atom> = d.atoms.iter().map(|a| extend(a, &one)).collect();
                atoms.push(atom(&check, vec![one.clone()]));
                atoms.push(init_atom.clone());
                ConjunctiveQuery::boolean(atoms)
            })
            .collect(),
    );
    Ok(ProblemInstance::exists_pqi(q, ConstraintSet::new(out), s))
}

/// The visible instance of [`disj_to_constants`] matching a visible instance of the
/// input: facts tagged with `1`, plus `Init` and the lookup table.
pub fn disj_to_constants_instance(out: &ProblemInstance, v: &Instance) -> Instance {
    let or = out
        .schema
        .visible_relations()
        .find(|r| r.name.starts_with("_aux_Or") && r.arity == 2)
        .map(|r| r.name.clone())
        .expect("lookup relation");
    let init = out
        .schema
        .visible_relations()
        .find(|r| r.name.starts_with("_aux_Init") && r.arity == 0)
        .map(|r| r.name.clone())
        .expect("init relation");
    let one = Value::constant("1");
    let zero = Value::constant("0");
    let mut v2 = Instance::new();
    for f in v.facts() {
        let mut args = f.args.clone();
        args.push(one.clone());
        v2.insert_tuple(&f.relation, args);
    }
    v2.insert_tuple(&init, Vec::new());
    for row in [[&zero, &one], [&one, &zero], [&one, &one]] {
        v2.insert_tuple(&or, row.iter().map(|x| (*x).clone()).collect());
    }
    v2
}

/// Turns PQI into NQI: a hidden `Good` marker and a visible `Error` flag raised when
/// `Good` holds together with a disjunct of the query; the new query is `Good`. With
/// `connected`, every relation gains a shared position tied to a visible single-value
/// `Check` relation, so that every body is connected.
pub fn pqi_to_nqi(p: &ProblemInstance, connected: bool) -> Result<ProblemInstance> {
    expect(p, ProblemKind::Pqi)?;
    let q = p.q();
    let v = p.inst();
    if !connected {
        let mut s = p.schema.clone();
        let error = aux(&mut s, "Error", 0, Visibility::Visible);
        let good = aux(&mut s, "Good", 0, Visibility::Hidden);
        let mut deps = p.constraints.deps.clone();
        for d in &q.disjuncts {
            let mut body = d.atoms.clone();
            body.push(atom(&good, Vec::new()));
            deps.push(Tgd::simple(body, vec![atom(&error, Vec::new())]).into());
        }
        let q2 = UnionQuery::boolean(vec![atom(&good, Vec::new())]);
        return Ok(ProblemInstance::nqi(q2, ConstraintSet::new(deps), s, v));
    }
    let mut s = widened(&p.schema, 1);
    let good = aux(&mut s, "Good", 1, Visibility::Hidden);
    let error = aux(&mut s, "Error", 1, Visibility::Visible);
    let check = aux(&mut s, "Check", 1, Visibility::Visible);
    let mut deps = Vec::new();
    for d in &p.constraints.deps {
        let mut used = dep_vars(d);
        let w = Term::Var(fresh_var(&mut used, "w"));
        deps.push(extend_dep(d, &w));
    }
    for d in &q.disjuncts {
        let mut used = d.vars();
        let w = Term::Var(fresh_var(&mut used, "w"));
        let mut body: Vec<Atom> = d.atoms.iter().map(|a| extend(a, &w)).collect();
        body.push(atom(&good, vec![w.clone()]));
        deps.push(Tgd::simple(body, vec![atom(&error, vec![w])]).into());
    }
    let w = Term::var("w");
    for r in p.schema.relations() {
        let mut args: Vec<Term> = (0..r.arity).map(|i| Term::var(&format!("x{i}"))).collect();
        args.push(w.clone());
        deps.push(Tgd::simple(vec![atom(&r.name, args)], vec![atom(&check, vec![w.clone()])]).into());
    }
    deps.push(Tgd::simple(vec![atom(&good, vec![w.clone()])], vec![atom(&check, vec![w.clone()])]).into());
    let q2 = UnionQuery::boolean(vec![atom(&good, vec![w])]);
    let mut taken: BTreeSet<Name> = v
        .active_domain()
        .into_iter()
        .filter_map(|x| match x {
            Value::Const(c) => Some(c),
            Value::Null(_) => None,
        })
        .collect();
    taken.extend(p.constraints.constants());
    taken.extend(q.constants());
    let a = Value::Const(fresh_const(&mut taken, "Dummy"));
    let mut v2 = Instance::new();
    for f in v.facts() {
        let mut args = f.args.clone();
        args.push(a.clone());
        v2.insert_tuple(&f.relation, args);
    }
    v2.insert_tuple(&check, vec![a]);
    Ok(ProblemInstance::nqi(q2, ConstraintSet::new(deps), s, v2))
}

/// Turns open-world query answering into PQI: every relation stays hidden and gains a
/// visible copy `R'` with `R'(x̄) → R(x̄)`; the visible instance is the OWQ instance
/// over the copies.
pub fn owq_to_pqi(p: &ProblemInstance) -> Result<ProblemInstance> {
    expect(p, ProblemKind::Owq)?;
    let mut s = p.schema.all_hidden();
    let mut deps = p.constraints.deps.clone();
    let mut copies = std::collections::BTreeMap::new();
    for r in p.schema.relations() {
        let c = aux(&mut s, &format!("{}_vis", r.name), r.arity, Visibility::Visible);
        let args: Vec<Term> = (0..r.arity).map(|i| Term::var(&format!("x{i}"))).collect();
        deps.push(Tgd::simple(vec![atom(&c, args.clone())], vec![atom(&r.name, args)]).into());
        copies.insert(r.name.clone(), c);
    }
    let v = p.inst().rename_relations(|r| copies[r].clone());
    Ok(ProblemInstance::pqi(p.q(), ConstraintSet::new(deps), s, v))
}

/// Turns open-world query answering into existence of PQI: a visible 0-ary `Good` and
/// the constraint `Good → ∃ȳ Q_F` with `Q_F` the canonical query of the instance.
pub fn owq_to_exists_pqi(p: &ProblemInstance) -> Result<ProblemInstance> {
    expect(p, ProblemKind::Owq)?;
    let mut s = p.schema.all_hidden();
    let good = aux(&mut s, "Good", 0, Visibility::Visible);
    let mut deps = p.constraints.deps.clone();
    let f = p.inst();
    if !f.is_empty() {
        let qf = canonical_query(&f);
        let qf = rename_query_vars(&qf, "y");
        deps.push(Tgd::simple(vec![atom(&good, Vec::new())], qf.atoms).into());
    }
    Ok(ProblemInstance::exists_pqi(p.q(), ConstraintSet::new(deps), s))
}

/// Renames the variables of `q` to `{prefix}{i}` in order of first occurrence.
fn rename_query_vars(q: &ConjunctiveQuery, prefix: &str) -> ConjunctiveQuery {
    let order: Vec<Name> = {
        let mut seen = Vec::new();
        for v in q.atoms.iter().flat_map(|a| a.vars()) {
            if !seen.contains(v) {
                seen.push(v.clone());
            }
        }
        seen
    };
    let map = |x: &Name| {
        let i = order.iter().position(|v| v == x).expect("query variable");
        Term::Var(name(&format!("{prefix}{i}")))
    };
    ConjunctiveQuery::boolean(q.atoms.iter().map(|a| a.rename(&map)).collect())
}

/// Turns the complement of NQI into realizability: a visible 0-ary `R_Q` with
/// `R_Q → ∨_i ∃ȳ I_i(ȳ)` and `I_i(ȳ) → A` for each atom `A` of disjunct `i`; the
/// visible instance gains `R_Q`.
pub fn nqi_to_realizability(p: &ProblemInstance) -> Result<ProblemInstance> {
    expect(p, ProblemKind::Nqi)?;
    let q = p.q();
    let mut s = p.schema.clone();
    let rq = aux(&mut s, "RQ", 0, Visibility::Visible);
    let mut deps = p.constraints.deps.clone();
    let mut heads = Vec::new();
    for (i, d) in q.disjuncts.iter().enumerate() {
        let dv: Vec<Name> = d.vars().into_iter().collect();
        let ii = aux(&mut s, &format!("Q{i}"), dv.len(), Visibility::Hidden);
        let ia = atom(&ii, vars(&dv));
        heads.push(head(&BTreeSet::new(), vec![ia.clone()]));
        for a in &d.atoms {
            deps.push(Tgd::simple(vec![ia.clone()], vec![a.clone()]).into());
        }
    }
    deps.push(Tgd::new(vec![atom(&rq, Vec::new())], heads).into());
    let mut v = p.inst();
    v.insert_tuple(&rq, Vec::new());
    Ok(ProblemInstance::realizability(ConstraintSet::new(deps), s, v))
}

/// Turns realizability into the complement of NQI. Each relation `R` gets a hidden copy
/// `R_h` carrying the constraints. Each visible `R` gets a visible `R_v` holding the
/// facts of `R` with two extra positions linking them in a successor chain, a hidden
/// `R_u` walking that chain from the value in a visible `First_R_v`, and a hidden
/// `First_R_h`. The query asks for `First_R_h` of every nonempty visible relation, which
/// forces `R_h` to equal the visible facts of `R`. Chain values are constants `#ord…`;
/// the last fact points to itself.
pub fn realizability_to_nqi(p: &ProblemInstance) -> Result<ProblemInstance> {
    expect(p, ProblemKind::Realizability)?;
    let v = p.inst().visible_part(&p.schema);
    let mut s = Schema::new();
    let mut copies = std::collections::BTreeMap::new();
    for r in p.schema.relations() {
        s.add(&r.name, r.arity, Visibility::Hidden)?;
    }
    let orig = s.clone();
    for r in p.schema.relations() {
        let h = aux(&mut s, &format!("{}_h", r.name), r.arity, Visibility::Hidden);
        copies.insert(r.name.clone(), h);
    }
    // The original relations only reserved their names.
    let mut s2 = Schema::new();
    for r in s.relations().filter(|r| !orig.contains(&r.name)) {
        s2.add(&r.name, r.arity, r.visibility)?;
    }
    let mut s = s2;
    let ren = |a: &Atom| atom(&copies[&a.relation], a.args.clone());
    let mut deps: Vec<Dependency> = p
        .constraints
        .deps
        .iter()
        .map(|d| match d {
            Dependency::Tgd(t) => Dependency::Tgd(Tgd {
                body: t.body.iter().map(ren).collect(),
                heads: t
                    .heads
                    .iter()
                    .map(|h| HeadDisjunct {
                        exists: h.exists.clone(),
                        atoms: h.atoms.iter().map(ren).collect(),
                    })
                    .collect(),
            }),
            Dependency::Egd(e) => Dependency::Egd(Egd {
                body: e.body.iter().map(ren).collect(),
                lhs: e.lhs.clone(),
                rhs: e.rhs.clone(),
            }),
        })
        .collect();

    let mut taken: BTreeSet<Name> = v
        .active_domain()
        .into_iter()
        .filter_map(|x| match x {
            Value::Const(c) => Some(c),
            Value::Null(_) => None,
        })
        .collect();
    taken.extend(p.constraints.constants());
    let mut next_ord = 0usize;
    let mut ord = || loop {
        let n = name(&format!("#ord{next_ord}"));
        next_ord += 1;
        if !taken.contains(&n) {
            return Value::Const(n);
        }
    };

    let mut v2 = Instance::new();
    let mut query = Vec::new();
    for r in p.schema.visible_relations() {
        let k = r.arity;
        let rv = aux(&mut s, &format!("{}_v", r.name), k + 2, Visibility::Visible);
        let ru = aux(&mut s, &format!("{}_u", r.name), k + 2, Visibility::Hidden);
        let fv = aux(&mut s, &format!("First_{}_v", r.name), 1, Visibility::Visible);
        let fh = aux(&mut s, &format!("First_{}_h", r.name), 1, Visibility::Hidden);
        let rh = copies[&r.name].clone();
        let xs: Vec<Term> = (0..k).map(|i| Term::var(&format!("x{i}"))).collect();
        let ws: Vec<Term> = (0..k).map(|i| Term::var(&format!("w{i}"))).collect();
        let (pv, nv, mv) = (Term::var("p"), Term::var("n"), Term::var("m"));
        let with = |base: &[Term], a: &Term, b: &Term| {
            let mut t = base.to_vec();
            t.push(a.clone());
            t.push(b.clone());
            t
        };
        deps.push(Tgd::simple(vec![atom(&fh, vec![pv.clone()])], vec![atom(&fv, vec![pv.clone()])]).into());
        deps.push(
            Tgd::simple(vec![atom(&fh, vec![pv.clone()])], vec![atom(&ru, with(&xs, &pv, &nv))]).into(),
        );
        deps.push(
            Tgd::simple(vec![atom(&ru, with(&xs, &pv, &nv))], vec![atom(&ru, with(&ws, &nv, &mv))]).into(),
        );
        deps.push(
            Tgd::simple(vec![atom(&ru, with(&xs, &pv, &nv))], vec![atom(&rv, with(&xs, &pv, &nv))]).into(),
        );
        deps.push(Tgd::simple(vec![atom(&ru, with(&xs, &pv, &nv))], vec![atom(&rh, xs.clone())]).into());
        deps.push(Tgd::simple(vec![atom(&rh, xs.clone())], vec![atom(&rv, with(&xs, &pv, &nv))]).into());

        let tuples: Vec<Vec<Value>> = v.tuples(&r.name).map(|ts| ts.iter().cloned().collect()).unwrap_or_default();
        if tuples.is_empty() {
            continue;
        }
        let ids: Vec<Value> = tuples.iter().map(|_| ord()).collect();
        for (i, t) in tuples.iter().enumerate() {
            let succ = ids.get(i + 1).unwrap_or(&ids[i]).clone();
            let mut args = t.clone();
            args.push(ids[i].clone());
            args.push(succ);
            v2.insert_tuple(&rv, args);
        }
        v2.insert_tuple(&fv, vec![ids[0].clone()]);
        query.push(atom(&fh, vec![Term::var(&format!("f{}", query.len()))]));
    }
    let q = UnionQuery::boolean(query);
    Ok(ProblemInstance::nqi(q, ConstraintSet::new(deps), s, v2))
}

/// Turns existence of NQI into open-world query answering: the query "some visible fact"
/// over the canonical database of the CQ. Needs connected constant-free constraints and
/// a Boolean CQ.
pub fn exists_nqi_to_owq(p: &ProblemInstance) -> Result<ProblemInstance> {
    expect(p, ProblemKind::ExistsNqi)?;
    constant_free(p, "the reduction to open-world answering")?;
    if !p.constraints.deps.iter().all(|d| body_connected(d.body())) {
        return Err(Error::Class(
            "the reduction to open-world answering needs connected bodies".into(),
        ));
    }
    let q = p.q();
    if q.disjuncts.len() != 1 {
        return Err(Error::Class(
            "the reduction to open-world answering needs a conjunctive query".into(),
        ));
    }
    let target = some_visible_fact(&p.schema);
    let i = canonical_db(&q.disjuncts[0]);
    Ok(ProblemInstance::make(
        ProblemKind::Owq,
        Some(target),
        p.constraints.clone(),
        p.schema.all_hidden(),
        Some(i),
    ))
}

/// Lifts a witness of the NQI problem produced by [`pqi_to_nqi`] (non-connected) back to
/// a PQI counterexample of the input: the facts of the input schema.
pub fn project_to(w: &Instance, s: &Schema) -> Instance {
    w.restrict(|r| s.contains(r))
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::chase::ChaseBudget;
    use crate::classify::classify;
    use crate::deciders::{exists_nqi, nqi, owq, pqi, realizable};
    use crate::model::ConstraintClass;
    use crate::textio::parse;

    const PSB: &str = "dqi-1
schema { visible F1/1, F2/1; hidden U/2; }
constraints { F1(x) -> exists y. U(x, y); U(x, y) -> F2(y); }
query Q { exists x. U(x, x) }
instance V { F1(a). F2(a). }
";

    fn b() -> ChaseBudget {
        ChaseBudget::default()
    }

    fn psb() -> ProblemInstance {
        ProblemInstance::from_file(ProblemKind::Pqi, &parse(PSB).unwrap(), None, None).unwrap()
    }

    fn decide_pqi(p: &ProblemInstance) -> Option<bool> {
        pqi(&p.q(), &p.constraints, &p.schema, &p.inst(), b()).unwrap().as_bool()
    }

    fn decide_nqi(p: &ProblemInstance) -> Option<bool> {
        nqi(&p.q(), &p.constraints, &p.schema, &p.inst(), b()).unwrap().as_bool()
    }

    #[test]
    fn or_table_and_size() {
        let p = psb();
        let out = ucq_to_cq(&p).unwrap();
        out.check().unwrap();
        let or = out.inst().restrict(|r| r.starts_with("_aux_Or"));
        assert_eq!(or.len(), 4);
        assert_eq!(out.inst().restrict(|r| r.starts_with("_aux_Zero")).len(), 1);
        assert!(out.size() <= 4 * p.size() + 16);
        assert_eq!(decide_pqi(&out), Some(true));
        assert!(classify(&out.constraints, &out.schema).contains(&ConstraintClass::ID));
    }

    #[test]
    fn second_disjunct_implied() {
        let text = "dqi-1
schema { visible F/1; hidden A/1, B/1; }
constraints { F(x) -> B(x); }
query Q { exists x. A(x) | exists x. B(x) }
instance V { F(a). }
";
        let p = ProblemInstance::from_file(ProblemKind::Pqi, &parse(text).unwrap(), None, None).unwrap();
        assert_eq!(decide_pqi(&p), Some(true));
        assert_eq!(decide_pqi(&ucq_to_cq(&p).unwrap()), Some(true));
    }

    #[test]
    fn pqi_to_nqi_variants() {
        let p = psb();
        for connected in [false, true] {
            let out = pqi_to_nqi(&p, connected).unwrap();
            out.check().unwrap();
            assert_eq!(decide_nqi(&out), Some(true), "connected={connected}");
        }
        let out = pqi_to_nqi(&p, true).unwrap();
        assert!(classify(&out.constraints, &out.schema).contains(&ConstraintClass::ConnectedBody));
    }

    #[test]
    fn owq_to_pqi_example() {
        let p = psb();
        let o = ProblemInstance::owq(p.q(), p.constraints.clone(), p.inst()).unwrap();
        let out = owq_to_pqi(&o).unwrap();
        out.check().unwrap();
        assert_eq!(decide_pqi(&out), Some(false));
        let ans = owq(&o.q(), &o.constraints, &o.inst(), b()).unwrap();
        assert_eq!(ans.as_bool(), Some(false));
    }

    #[test]
    fn nqi_realizability_round() {
        let p = psb();
        let n = ProblemInstance::nqi(p.q(), p.constraints.clone(), p.schema.clone(), p.inst());
        let r = nqi_to_realizability(&n).unwrap();
        r.check().unwrap();
        let nq = decide_nqi(&n).unwrap();
        let re = realizable(&r.constraints, &r.schema, &r.inst(), b()).unwrap().as_bool().unwrap();
        assert_eq!(nq, !re);
        let back = realizability_to_nqi(&r).unwrap();
        back.check().unwrap();
        let v = nqi(&back.q(), &back.constraints, &back.schema, &back.inst(), b()).unwrap();
        assert_eq!(v.as_bool(), Some(!re));
    }

    #[test]
    fn non_realizable_to_nqi() {
        let text = "dqi-1
schema { visible R/2; }
constraints { R(x, y) & R(x, z) -> y = z; }
instance V { R(a, b). R(a, c). }
";
        let p = ProblemInstance::from_file(ProblemKind::Realizability, &parse(text).unwrap(), None, None).unwrap();
        let out = realizability_to_nqi(&p).unwrap();
        let v = nqi(&out.q(), &out.constraints, &out.schema, &out.inst(), b()).unwrap();
        assert!(v.is_true());
    }

    #[test]
    fn exists_nqi_to_owq_example() {
        let text = "dqi-1
schema { visible V/1; hidden H/1; }
constraints { H(x) -> V(x); }
query Q { exists x. H(x) }
";
        let p = ProblemInstance::from_file(ProblemKind::ExistsNqi, &parse(text).unwrap(), None, None).unwrap();
        let out = exists_nqi_to_owq(&p).unwrap();
        let o = owq(&out.q(), &out.constraints, &out.inst(), b()).unwrap();
        let e = exists_nqi(&p.q(), &p.constraints, &p.schema, b()).unwrap();
        assert_eq!(o.as_bool(), Some(true));
        assert_eq!(e.as_bool(), Some(true));
    }

    #[test]
    fn disjunction_rule_shape() {
        let text = "dqi-1
schema { visible A/1; hidden B/1, C/1; }
constraints { A(x) -> B(x) | C(x); }
query Q { exists x. B(x) }
";
        let p = ProblemInstance::from_file(ProblemKind::ExistsPqi, &parse(text).unwrap(), None, None).unwrap();
        let out = disj_to_constants(&p).unwrap();
        out.check().unwrap();
        let t = out.constraints.tgds().next().unwrap();
        assert_eq!(t.heads.len(), 1);
        assert_eq!(t.heads[0].exists.len(), 2);
        assert!(t.heads[0].atoms.iter().any(|a| a.relation.starts_with("_aux_Or")));
        assert!(out.constraints.tgds().all(|t| t.is_linear() && !t.is_disjunctive()));
    }

    #[test]
    fn round_trips_through_text() {
        let p = psb();
        for out in [ucq_to_cq(&p).unwrap(), pqi_to_nqi(&p, true).unwrap()] {
            let text = crate::textio::serialize(&out.to_file());
            let back = ProblemInstance::from_file(out.kind, &parse(&text).unwrap(), None, None).unwrap();
            assert_eq!(back, out);
        }
    }
}
