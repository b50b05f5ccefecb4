//! Domain model: values, schemas, atoms, facts, instances, dependencies and queries.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Interned-ish name used for relations, variables and constants.
pub type Name = Arc<str>;

/// Builds a [`Name`] from a string slice.
pub fn name(s: &str) -> Name {
    Arc::from(s)
}

/// A domain value: a named constant (unique name assumption) or a labeled null.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Value {
    Const(Name),
    Null(u64),
}

impl Value {
    pub fn constant(s: &str) -> Value {
        Value::Const(name(s))
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null(_))
    }

    pub fn is_const(&self) -> bool {
        matches!(self, Value::Const(_))
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Const(c) => write!(f, "{c}"),
            Value::Null(n) => write!(f, "@{n}"),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Visibility {
    Visible,
    Hidden,
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct RelationDecl {
    pub name: Name,
    pub arity: usize,
    pub visibility: Visibility,
}

/// A partitioned signature. Relations are kept sorted by name.
#[derive(Clone, PartialEq, Eq, Default, Debug)]
pub struct Schema {
    relations: BTreeMap<Name, RelationDecl>,
}

impl Schema {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares a relation; redeclaring a name is an error.
    pub fn add(&mut self, rel: &str, arity: usize, visibility: Visibility) -> Result<()> {
        if self.relations.contains_key(rel) {
            return Err(Error::Schema(format!("relation {rel} declared twice")));
        }
        let n = name(rel);
        self.relations.insert(
            n.clone(),
            RelationDecl {
                name: n,
                arity,
                visibility,
            },
        );
        Ok(())
    }

    pub fn with(mut self, rel: &str, arity: usize, visibility: Visibility) -> Self {
        self.add(rel, arity, visibility).expect("fresh relation");
        self
    }

    pub fn visible(self, rel: &str, arity: usize) -> Self {
        self.with(rel, arity, Visibility::Visible)
    }

    pub fn hidden(self, rel: &str, arity: usize) -> Self {
        self.with(rel, arity, Visibility::Hidden)
    }

    pub fn get(&self, rel: &str) -> Option<&RelationDecl> {
        self.relations.get(rel)
    }

    pub fn contains(&self, rel: &str) -> bool {
        self.relations.contains_key(rel)
    }

    pub fn arity(&self, rel: &str) -> Option<usize> {
        self.get(rel).map(|d| d.arity)
    }

    pub fn is_visible(&self, rel: &str) -> bool {
        self.get(rel)
            .is_some_and(|d| d.visibility == Visibility::Visible)
    }

    pub fn is_hidden(&self, rel: &str) -> bool {
        self.get(rel).is_some_and(|d| d.visibility == Visibility::Hidden)
    }

    pub fn relations(&self) -> impl Iterator<Item = &RelationDecl> {
        self.relations.values()
    }

    pub fn visible_relations(&self) -> impl Iterator<Item = &RelationDecl> {
        self.relations
            .values()
            .filter(|d| d.visibility == Visibility::Visible)
    }

    pub fn hidden_relations(&self) -> impl Iterator<Item = &RelationDecl> {
        self.relations
            .values()
            .filter(|d| d.visibility == Visibility::Hidden)
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    pub fn max_arity(&self) -> usize {
        self.relations.values().map(|d| d.arity).max().unwrap_or(0)
    }

    /// Returns a name starting with `base` that is not yet declared.
    pub fn fresh_name(&self, base: &str) -> Name {
        if !self.contains(base) {
            return name(base);
        }
        (0..)
            .map(|i| format!("{base}_{i}"))
            .find(|c| !self.contains(c))
            .map(|c| name(&c))
            .expect("unbounded search")
    }

    /// Same schema with every relation hidden.
    pub fn all_hidden(&self) -> Schema {
        let mut s = self.clone();
        for d in s.relations.values_mut() {
            d.visibility = Visibility::Hidden;
        }
        s
    }

    pub fn check_atom(&self, atom: &Atom) -> Result<()> {
        match self.get(&atom.relation) {
            None => Err(Error::Schema(format!(
                "undeclared relation {}",
                atom.relation
            ))),
            Some(d) if d.arity != atom.args.len() => Err(Error::Schema(format!(
                "relation {} has arity {} but is used with {} arguments",
                atom.relation,
                d.arity,
                atom.args.len()
            ))),
            Some(_) => Ok(()),
        }
    }

    pub fn check_instance(&self, inst: &Instance) -> Result<()> {
        for (rel, tuples) in inst.relations() {
            let d = self
                .get(rel)
                .ok_or_else(|| Error::Schema(format!("undeclared relation {rel}")))?;
            if let Some(t) = tuples.iter().find(|t| t.len() != d.arity) {
                return Err(Error::Schema(format!(
                    "fact over {rel} has {} values, expected {}",
                    t.len(),
                    d.arity
                )));
            }
        }
        Ok(())
    }

    pub fn check_query(&self, q: &UnionQuery) -> Result<()> {
        for cq in &q.disjuncts {
            for a in &cq.atoms {
                self.check_atom(a)?;
            }
        }
        q.check_well_formed()
    }

    pub fn check_constraints(&self, c: &ConstraintSet) -> Result<()> {
        for d in &c.deps {
            for a in d.atoms() {
                self.check_atom(a)?;
            }
            d.check_well_formed()?;
        }
        Ok(())
    }
}

/// A term inside an atom: a variable or a constant.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Term {
    Var(Name),
    Const(Name),
}

impl Term {
    pub fn var(s: &str) -> Term {
        Term::Var(name(s))
    }

    pub fn constant(s: &str) -> Term {
        Term::Const(name(s))
    }

    pub fn as_var(&self) -> Option<&Name> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Atom {
    pub relation: Name,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(relation: &str, args: Vec<Term>) -> Atom {
        Atom {
            relation: name(relation),
            args,
        }
    }

    /// Builds an atom from short-hand arguments: lowercase-initial strings are variables,
    /// everything else is a constant.
    pub fn parse_args(relation: &str, args: &[&str]) -> Atom {
        let args = args
            .iter()
            .map(|a| {
                if a.chars().next().is_some_and(|c| c.is_ascii_lowercase()) {
                    Term::var(a)
                } else {
                    Term::constant(a)
                }
            })
            .collect();
        Atom::new(relation, args)
    }

    pub fn vars(&self) -> impl Iterator<Item = &Name> {
        self.args.iter().filter_map(Term::as_var)
    }

    pub fn constants(&self) -> impl Iterator<Item = &Name> {
        self.args.iter().filter_map(|t| match t {
            Term::Const(c) => Some(c),
            Term::Var(_) => None,
        })
    }

    pub fn has_repeated_var(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.vars().any(|v| !seen.insert(v))
    }

    pub fn rename(&self, f: &dyn Fn(&Name) -> Term) -> Atom {
        Atom {
            relation: self.relation.clone(),
            args: self
                .args
                .iter()
                .map(|t| match t {
                    Term::Var(v) => f(v),
                    c => c.clone(),
                })
                .collect(),
        }
    }

    /// Grounds the atom; unbound variables are an error of the caller.
    pub fn ground(&self, h: &Homomorphism) -> Option<Fact> {
        let args = self
            .args
            .iter()
            .map(|t| match t {
                Term::Var(v) => h.get(v).cloned(),
                Term::Const(c) => Some(Value::Const(c.clone())),
            })
            .collect::<Option<Vec<_>>>()?;
        Some(Fact {
            relation: self.relation.clone(),
            args,
        })
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Fact {
    pub relation: Name,
    pub args: Vec<Value>,
}

impl Fact {
    pub fn new(relation: &str, args: Vec<Value>) -> Fact {
        Fact {
            relation: name(relation),
            args,
        }
    }

    /// Fact over constants only.
    pub fn consts(relation: &str, args: &[&str]) -> Fact {
        Fact::new(relation, args.iter().map(|a| Value::constant(a)).collect())
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.relation)?;
        for (i, v) in self.args.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// A tuple of values.
pub type Tuple = Vec<Value>;

/// A finite set of facts, stored per relation in sorted order.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Debug)]
pub struct Instance {
    rels: BTreeMap<Name, BTreeSet<Tuple>>,
}

impl Instance {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_facts<I: IntoIterator<Item = Fact>>(facts: I) -> Self {
        let mut inst = Instance::new();
        for f in facts {
            inst.insert(f);
        }
        inst
    }

    pub fn insert(&mut self, fact: Fact) -> bool {
        self.rels.entry(fact.relation).or_default().insert(fact.args)
    }

    pub fn insert_tuple(&mut self, rel: &Name, tuple: Tuple) -> bool {
        if let Some(set) = self.rels.get_mut(rel) {
            return set.insert(tuple);
        }
        self.rels.entry(rel.clone()).or_default().insert(tuple)
    }

    pub fn remove(&mut self, fact: &Fact) -> bool {
        let Some(set) = self.rels.get_mut(&fact.relation) else {
            return false;
        };
        let removed = set.remove(&fact.args);
        if set.is_empty() {
            self.rels.remove(&fact.relation);
        }
        removed
    }

    pub fn contains(&self, fact: &Fact) -> bool {
        self.contains_tuple(&fact.relation, &fact.args)
    }

    pub fn contains_tuple(&self, rel: &str, tuple: &[Value]) -> bool {
        self.rels.get(rel).is_some_and(|s| s.contains(tuple))
    }

    pub fn tuples(&self, rel: &str) -> Option<&BTreeSet<Tuple>> {
        self.rels.get(rel)
    }

    pub fn relations(&self) -> impl Iterator<Item = (&Name, &BTreeSet<Tuple>)> {
        self.rels.iter()
    }

    pub fn facts(&self) -> impl Iterator<Item = Fact> + '_ {
        self.rels.iter().flat_map(|(r, ts)| {
            ts.iter().map(move |t| Fact {
                relation: r.clone(),
                args: t.clone(),
            })
        })
    }

    pub fn len(&self) -> usize {
        self.rels.values().map(BTreeSet::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.rels.is_empty()
    }

    /// Exactly the values occurring in some fact.
    pub fn active_domain(&self) -> BTreeSet<Value> {
        self.rels
            .values()
            .flat_map(|ts| ts.iter().flatten().cloned())
            .collect()
    }

    pub fn nulls(&self) -> BTreeSet<u64> {
        self.active_domain()
            .into_iter()
            .filter_map(|v| match v {
                Value::Null(n) => Some(n),
                Value::Const(_) => None,
            })
            .collect()
    }

    pub fn max_null(&self) -> Option<u64> {
        self.nulls().into_iter().next_back()
    }

    /// Facts whose relation satisfies `keep`.
    pub fn restrict(&self, keep: impl Fn(&str) -> bool) -> Instance {
        Instance {
            rels: self
                .rels
                .iter()
                .filter(|(r, _)| keep(r))
                .map(|(r, t)| (r.clone(), t.clone()))
                .collect(),
        }
    }

    /// The visible part of the instance with respect to `s`.
    pub fn visible_part(&self, s: &Schema) -> Instance {
        self.restrict(|r| s.is_visible(r))
    }

    pub fn hidden_part(&self, s: &Schema) -> Instance {
        self.restrict(|r| !s.is_visible(r))
    }

    pub fn union(&self, other: &Instance) -> Instance {
        let mut out = self.clone();
        out.extend(other);
        out
    }

    pub fn extend(&mut self, other: &Instance) {
        for (r, ts) in &other.rels {
            self.rels
                .entry(r.clone())
                .or_default()
                .extend(ts.iter().cloned());
        }
    }

    pub fn is_subset(&self, other: &Instance) -> bool {
        self.rels.iter().all(|(r, ts)| {
            other
                .rels
                .get(r)
                .is_some_and(|os| ts.iter().all(|t| os.contains(t)))
        })
    }

    /// Applies `f` to every value.
    pub fn map_values(&self, f: impl Fn(&Value) -> Value) -> Instance {
        Instance {
            rels: self
                .rels
                .iter()
                .map(|(r, ts)| {
                    (
                        r.clone(),
                        ts.iter().map(|t| t.iter().map(&f).collect()).collect(),
                    )
                })
                .collect(),
        }
    }

    /// Renames every relation through `f`.
    pub fn rename_relations(&self, f: impl Fn(&Name) -> Name) -> Instance {
        let mut out = Instance::new();
        for (r, ts) in &self.rels {
            let nr = f(r);
            out.rels.entry(nr).or_default().extend(ts.iter().cloned());
        }
        out
    }
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, fact) in self.facts().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{fact}")?;
        }
        write!(f, "}}")
    }
}

/// Variable assignment. Constants are never keys; they map to themselves implicitly.
pub type Homomorphism = BTreeMap<Name, Value>;

/// One disjunct of a TGD head.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct HeadDisjunct {
    pub exists: Vec<Name>,
    pub atoms: Vec<Atom>,
}

impl HeadDisjunct {
    pub fn new(exists: &[&str], atoms: Vec<Atom>) -> Self {
        HeadDisjunct {
            exists: exists.iter().map(|v| name(v)).collect(),
            atoms,
        }
    }
}

/// `body -> head_1 | ... | head_n`. An empty head list denotes `false`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Tgd {
    pub body: Vec<Atom>,
    pub heads: Vec<HeadDisjunct>,
}

impl Tgd {
    pub fn new(body: Vec<Atom>, heads: Vec<HeadDisjunct>) -> Self {
        Tgd { body, heads }
    }

    /// Single-disjunct TGD; head variables not occurring in the body are existential.
    pub fn simple(body: Vec<Atom>, head: Vec<Atom>) -> Self {
        let bvars: BTreeSet<Name> = body.iter().flat_map(|a| a.vars().cloned()).collect();
        let mut exists = Vec::new();
        for v in head.iter().flat_map(|a| a.vars()) {
            if !bvars.contains(v) && !exists.contains(v) {
                exists.push(v.clone());
            }
        }
        Tgd {
            body,
            heads: vec![HeadDisjunct {
                exists,
                atoms: head,
            }],
        }
    }

    pub fn body_vars(&self) -> BTreeSet<Name> {
        self.body.iter().flat_map(|a| a.vars().cloned()).collect()
    }

    /// Body variables that also occur in some head disjunct.
    pub fn frontier(&self) -> BTreeSet<Name> {
        let b = self.body_vars();
        self.heads
            .iter()
            .flat_map(|h| h.atoms.iter().flat_map(|a| a.vars().cloned()))
            .filter(|v| b.contains(v))
            .collect()
    }

    pub fn is_linear(&self) -> bool {
        self.body.len() == 1
    }

    pub fn is_disjunctive(&self) -> bool {
        self.heads.len() > 1
    }
}

/// `body -> lhs = rhs`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Egd {
    pub body: Vec<Atom>,
    pub lhs: Name,
    pub rhs: Term,
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Dependency {
    Tgd(Tgd),
    Egd(Egd),
}

impl Dependency {
    pub fn body(&self) -> &[Atom] {
        match self {
            Dependency::Tgd(t) => &t.body,
            Dependency::Egd(e) => &e.body,
        }
    }

    pub fn as_tgd(&self) -> Option<&Tgd> {
        match self {
            Dependency::Tgd(t) => Some(t),
            Dependency::Egd(_) => None,
        }
    }

    /// All atoms: body followed by every head disjunct.
    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out: Vec<&Atom> = self.body().iter().collect();
        if let Dependency::Tgd(t) = self {
            out.extend(t.heads.iter().flat_map(|h| h.atoms.iter()));
        }
        out
    }

    pub fn constants(&self) -> BTreeSet<Name> {
        let mut out: BTreeSet<Name> = self
            .atoms()
            .into_iter()
            .flat_map(|a| a.constants().cloned())
            .collect();
        if let Dependency::Egd(Egd {
            rhs: Term::Const(c),
            ..
        }) = self
        {
            out.insert(c.clone());
        }
        out
    }

    pub fn check_well_formed(&self) -> Result<()> {
        match self {
            Dependency::Tgd(t) => {
                if t.body.is_empty() {
                    return Err(Error::Schema("TGD with empty body".into()));
                }
                let bvars = t.body_vars();
                for h in &t.heads {
                    for e in &h.exists {
                        if bvars.contains(e) {
                            return Err(Error::Schema(format!(
                                "existential variable {e} also occurs in the body"
                            )));
                        }
                    }
                    for v in h.atoms.iter().flat_map(|a| a.vars()) {
                        if !bvars.contains(v) && !h.exists.contains(v) {
                            return Err(Error::Schema(format!(
                                "variable {v} is unsafe: it occurs in the head but neither in the body nor among the existentials"
                            )));
                        }
                    }
                }
                Ok(())
            }
            Dependency::Egd(e) => {
                if e.body.is_empty() {
                    return Err(Error::Schema("EGD with empty body".into()));
                }
                let bvars: BTreeSet<&Name> = e.body.iter().flat_map(|a| a.vars()).collect();
                let rhs_ok = match &e.rhs {
                    Term::Var(v) => bvars.contains(v),
                    Term::Const(_) => true,
                };
                if !bvars.contains(&e.lhs) || !rhs_ok {
                    return Err(Error::Schema(
                        "EGD equates a variable that does not occur in its body".into(),
                    ));
                }
                Ok(())
            }
        }
    }
}

impl From<Tgd> for Dependency {
    fn from(t: Tgd) -> Self {
        Dependency::Tgd(t)
    }
}

impl From<Egd> for Dependency {
    fn from(e: Egd) -> Self {
        Dependency::Egd(e)
    }
}

/// A sequence of dependencies. Class tags are recomputed by [`crate::classify::classify`].
#[derive(Clone, PartialEq, Eq, Default, Debug)]
pub struct ConstraintSet {
    pub deps: Vec<Dependency>,
}

impl ConstraintSet {
    pub fn new(deps: Vec<Dependency>) -> Self {
        ConstraintSet { deps }
    }

    pub fn len(&self) -> usize {
        self.deps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deps.is_empty()
    }

    pub fn tgds(&self) -> impl Iterator<Item = &Tgd> {
        self.deps.iter().filter_map(Dependency::as_tgd)
    }

    pub fn constants(&self) -> BTreeSet<Name> {
        self.deps.iter().flat_map(|d| d.constants()).collect()
    }

    pub fn has_egd(&self) -> bool {
        self.deps.iter().any(|d| matches!(d, Dependency::Egd(_)))
    }

    pub fn push(&mut self, d: impl Into<Dependency>) {
        self.deps.push(d.into());
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct ConjunctiveQuery {
    pub free: Vec<Name>,
    pub exists: Vec<Name>,
    pub atoms: Vec<Atom>,
}

impl ConjunctiveQuery {
    /// Boolean CQ; every variable is existential, listed in order of first occurrence.
    pub fn boolean(atoms: Vec<Atom>) -> Self {
        let mut exists: Vec<Name> = Vec::new();
        for v in atoms.iter().flat_map(|a| a.vars()) {
            if !exists.contains(v) {
                exists.push(v.clone());
            }
        }
        ConjunctiveQuery {
            free: Vec::new(),
            exists,
            atoms,
        }
    }

    /// CQ with the given free variables; the rest are existential.
    pub fn with_free(free: &[&str], atoms: Vec<Atom>) -> Self {
        let free: Vec<Name> = free.iter().map(|v| name(v)).collect();
        let mut exists: Vec<Name> = Vec::new();
        for v in atoms.iter().flat_map(|a| a.vars()) {
            if !free.contains(v) && !exists.contains(v) {
                exists.push(v.clone());
            }
        }
        ConjunctiveQuery {
            free,
            exists,
            atoms,
        }
    }

    pub fn vars(&self) -> BTreeSet<Name> {
        self.atoms.iter().flat_map(|a| a.vars().cloned()).collect()
    }

    pub fn constants(&self) -> BTreeSet<Name> {
        self.atoms
            .iter()
            .flat_map(|a| a.constants().cloned())
            .collect()
    }

    pub fn is_boolean(&self) -> bool {
        self.free.is_empty()
    }

    /// Replaces free variables by constants, yielding a Boolean CQ.
    pub fn substitute(&self, values: &[Value]) -> ConjunctiveQuery {
        let map: BTreeMap<&Name, &Value> = self.free.iter().zip(values).collect();
        let atoms = self
            .atoms
            .iter()
            .map(|a| {
                a.rename(&|v| match map.get(v) {
                    Some(Value::Const(c)) => Term::Const(c.clone()),
                    Some(Value::Null(n)) => Term::Const(name(&format!("@{n}"))),
                    None => Term::Var(v.clone()),
                })
            })
            .collect();
        ConjunctiveQuery {
            free: Vec::new(),
            exists: self.exists.clone(),
            atoms,
        }
    }
}

/// A union of CQs sharing one free-variable signature. An empty union is `false`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct UnionQuery {
    pub free: Vec<Name>,
    pub disjuncts: Vec<ConjunctiveQuery>,
}

impl UnionQuery {
    pub fn new(disjuncts: Vec<ConjunctiveQuery>) -> Self {
        let free = disjuncts.first().map(|d| d.free.clone()).unwrap_or_default();
        UnionQuery { free, disjuncts }
    }

    pub fn single(cq: ConjunctiveQuery) -> Self {
        UnionQuery::new(vec![cq])
    }

    /// Boolean single-disjunct query.
    pub fn boolean(atoms: Vec<Atom>) -> Self {
        UnionQuery::single(ConjunctiveQuery::boolean(atoms))
    }

    pub fn is_boolean(&self) -> bool {
        self.free.is_empty()
    }

    pub fn constants(&self) -> BTreeSet<Name> {
        self.disjuncts.iter().flat_map(|d| d.constants()).collect()
    }

    pub fn substitute(&self, values: &[Value]) -> UnionQuery {
        UnionQuery {
            free: Vec::new(),
            disjuncts: self.disjuncts.iter().map(|d| d.substitute(values)).collect(),
        }
    }

    pub fn check_well_formed(&self) -> Result<()> {
        for d in &self.disjuncts {
            if d.free != self.free {
                return Err(Error::Schema(
                    "query disjuncts have different free variables".into(),
                ));
            }
            let vars = d.vars();
            for v in &d.free {
                if !vars.contains(v) {
                    return Err(Error::Schema(format!(
                        "free variable {v} does not occur in any atom"
                    )));
                }
            }
            let declared: BTreeSet<&Name> = d.free.iter().chain(d.exists.iter()).collect();
            for v in &vars {
                if !declared.contains(v) {
                    return Err(Error::Schema(format!("variable {v} is not quantified")));
                }
            }
        }
        Ok(())
    }
}

/// Syntactic constraint classes.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum ConstraintClass {
    ID,
    LinearTGD,
    FGTGD,
    ConnectedBody,
    DisjunctiveHead,
    HasConstants,
    HasEGD,
    CQViewScenario,
}

impl fmt::Display for ConstraintClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ConstraintClass::ID => "ID",
            ConstraintClass::LinearTGD => "LinearTGD",
            ConstraintClass::FGTGD => "FGTGD",
            ConstraintClass::ConnectedBody => "ConnectedBody",
            ConstraintClass::DisjunctiveHead => "DisjunctiveHead",
            ConstraintClass::HasConstants => "HasConstants",
            ConstraintClass::HasEGD => "HasEGD",
            ConstraintClass::CQViewScenario => "CQViewScenario",
        };
        f.write_str(s)
    }
}
