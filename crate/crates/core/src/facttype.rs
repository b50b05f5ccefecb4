//! Fact-type abstraction of chases under linear TGDs without constants.
//!
//! A fact type is a relation with an equality pattern: each position holds either the
//! distinguished value `a` or a null class numbered by first occurrence. Under linear
//! TGDs the subtree of chase facts generated from a fact depends only on its type, so
//! the (oblivious) visible chase of the critical instance over `a` is described by a
//! finite graph over types. A null class of a type is forced when some descendant
//! carries it into a visible fact (where the grounding maps it to `a`) or into a forced
//! position of a descendant type.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::model::{
    ConjunctiveQuery, ConstraintSet, Dependency, Instance, Name, Schema, Term, Tgd,
    UnionQuery, Value,
};
use crate::normalize::normalize_single_head;

/// One position of a fact type.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TypeSlot {
    /// The distinguished value `a`.
    A,
    /// A null class.
    N(u8),
}

/// A relation with a canonical equality pattern over its positions.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FactType {
    pub relation: Name,
    pub pattern: Vec<TypeSlot>,
}

impl FactType {
    /// Renumbers null classes by first occurrence. Returns the type and the map from old
    /// to new class ids.
    pub fn canonical(relation: Name, raw: &[TypeSlot]) -> (FactType, BTreeMap<u8, u8>) {
        let mut map = BTreeMap::new();
        let pattern = raw
            .iter()
            .map(|s| match s {
                TypeSlot::A => TypeSlot::A,
                TypeSlot::N(k) => {
                    let n = map.len() as u8;
                    TypeSlot::N(*map.entry(*k).or_insert(n))
                }
            })
            .collect();
        (FactType { relation, pattern }, map)
    }

    /// The all-`a` type of a relation.
    pub fn all_a(relation: Name, arity: usize) -> FactType {
        FactType {
            relation,
            pattern: vec![TypeSlot::A; arity],
        }
    }

    pub fn classes(&self) -> BTreeSet<u8> {
        self.pattern
            .iter()
            .filter_map(|s| match s {
                TypeSlot::N(k) => Some(*k),
                TypeSlot::A => None,
            })
            .collect()
    }

    /// Sets the given classes to `a` and renumbers.
    pub fn with_a(&self, classes: &BTreeSet<u8>) -> (FactType, BTreeMap<u8, u8>) {
        let raw: Vec<TypeSlot> = self
            .pattern
            .iter()
            .map(|s| match s {
                TypeSlot::N(k) if classes.contains(k) => TypeSlot::A,
                other => *other,
            })
            .collect();
        FactType::canonical(self.relation.clone(), &raw)
    }

    /// Every canonical type of a relation of the given arity.
    pub fn all_types(relation: &Name, arity: usize) -> Vec<FactType> {
        let mut out = Vec::new();
        let mut cur = Vec::with_capacity(arity);
        fn rec(relation: &Name, arity: usize, next: u8, cur: &mut Vec<TypeSlot>, out: &mut Vec<FactType>) {
            if cur.len() == arity {
                out.push(FactType {
                    relation: relation.clone(),
                    pattern: cur.clone(),
                });
                return;
            }
            cur.push(TypeSlot::A);
            rec(relation, arity, next, cur, out);
            cur.pop();
            for k in 0..=next {
                cur.push(TypeSlot::N(k));
                rec(relation, arity, if k == next { next + 1 } else { next }, cur, out);
                cur.pop();
            }
        }
        rec(relation, arity, 0, &mut cur, &mut out);
        out
    }
}

/// A linear single-head TGD in positional form.
#[derive(Clone, Debug)]
struct LinearRule {
    body_rel: Name,
    /// Variable id per body position.
    body: Vec<usize>,
    /// Empty for denial constraints.
    head: Option<(Name, Vec<HeadArg>)>,
}

#[derive(Clone, Copy, Debug)]
enum HeadArg {
    /// Copies the body variable with this id.
    Frontier(usize),
    /// Fresh null; equal ids denote the same null.
    Fresh(usize),
}

fn compile_rules(c: &ConstraintSet) -> Result<Vec<LinearRule>> {
    let mut out = Vec::new();
    for d in &c.deps {
        let Dependency::Tgd(t) = d else {
            return Err(Error::Class("fact types need TGDs only".into()));
        };
        out.push(compile_rule(t)?);
    }
    Ok(out)
}

fn compile_rule(t: &Tgd) -> Result<LinearRule> {
    if !t.is_linear() || t.heads.len() > 1 || t.heads.first().is_some_and(|h| h.atoms.len() != 1) {
        return Err(Error::Class(
            "fact types need linear TGDs with at most one single-atom head".into(),
        ));
    }
    let mut ids: Vec<Name> = Vec::new();
    let var_id = |v: &Name, ids: &mut Vec<Name>| match ids.iter().position(|w| w == v) {
        Some(i) => i,
        None => {
            ids.push(v.clone());
            ids.len() - 1
        }
    };
    let mut body = Vec::new();
    for tm in &t.body[0].args {
        match tm {
            Term::Var(v) => body.push(var_id(v, &mut ids)),
            Term::Const(_) => return Err(Error::Class("fact types need constant-free TGDs".into())),
        }
    }
    let nbody = ids.len();
    let head = match t.heads.first() {
        None => None,
        Some(h) => {
            let a = &h.atoms[0];
            let mut args = Vec::new();
            for tm in &a.args {
                match tm {
                    Term::Var(v) => {
                        let i = var_id(v, &mut ids);
                        args.push(if i < nbody {
                            HeadArg::Frontier(i)
                        } else {
                            HeadArg::Fresh(i)
                        });
                    }
                    Term::Const(_) => {
                        return Err(Error::Class("fact types need constant-free TGDs".into()))
                    }
                }
            }
            Some((a.relation.clone(), args))
        }
    };
    Ok(LinearRule {
        body_rel: t.body[0].relation.clone(),
        body,
        head,
    })
}

/// Outcome of applying a rule to a type.
enum Applied {
    /// Head type and, for each class of the body type, its class in the head (if carried).
    Child(FactType, BTreeMap<u8, u8>),
    Denial,
}

fn apply(rule: &LinearRule, t: &FactType) -> Option<Applied> {
    if rule.body_rel != t.relation || rule.body.len() != t.pattern.len() {
        return None;
    }
    let mut val: BTreeMap<usize, TypeSlot> = BTreeMap::new();
    for (v, s) in rule.body.iter().zip(&t.pattern) {
        match val.get(v) {
            Some(x) if x != s => return None,
            _ => {
                val.insert(*v, *s);
            }
        }
    }
    let Some((rel, args)) = &rule.head else {
        return Some(Applied::Denial);
    };
    let base = t.classes().iter().max().map_or(0, |m| *m as usize + 1);
    let raw: Vec<TypeSlot> = args
        .iter()
        .map(|a| match a {
            HeadArg::Frontier(v) => val[v],
            HeadArg::Fresh(i) => TypeSlot::N((base + i) as u8),
        })
        .collect();
    let (u, map) = FactType::canonical(rel.clone(), &raw);
    let carry = map.into_iter().filter(|(k, _)| (*k as usize) < base).collect();
    Some(Applied::Child(u, carry))
}

/// Forcing information computed over a set of types closed under generation.
struct Closure<'s> {
    schema: &'s Schema,
    rules: Vec<LinearRule>,
    forced: HashMap<FactType, BTreeSet<u8>>,
}

impl<'s> Closure<'s> {
    fn new(schema: &'s Schema, rules: Vec<LinearRule>, seeds: impl IntoIterator<Item = FactType>) -> Self {
        let mut cl = Closure {
            schema,
            rules,
            forced: HashMap::new(),
        };
        let mut order: Vec<FactType> = Vec::new();
        for t in seeds {
            if !cl.forced.contains_key(&t) {
                cl.forced.insert(t.clone(), BTreeSet::new());
                order.push(t);
            }
        }
        loop {
            let mut changed = false;
            let mut i = 0;
            while i < order.len() {
                let t = order[i].clone();
                i += 1;
                let f = cl.forced[&t].clone();
                let (s, to_s) = t.with_a(&f);
                let from_s: BTreeMap<u8, u8> = to_s.iter().map(|(a, b)| (*b, *a)).collect();
                let mut add = BTreeSet::new();
                for r in &cl.rules {
                    let Some(Applied::Child(u, carry)) = apply(r, &s) else {
                        continue;
                    };
                    if !cl.forced.contains_key(&u) {
                        cl.forced.insert(u.clone(), BTreeSet::new());
                        order.push(u.clone());
                        changed = true;
                    }
                    let visible = cl.schema.is_visible(&u.relation);
                    let fu = &cl.forced[&u];
                    for (ks, ku) in carry {
                        if visible || fu.contains(&ku) {
                            add.insert(from_s[&ks]);
                        }
                    }
                }
                if !add.is_subset(&f) {
                    cl.forced.get_mut(&t).expect("known").extend(add);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        cl
    }

    /// The type a fact of type `t` has once all forced classes are identified with `a`.
    fn settle(&self, t: &FactType) -> FactType {
        if self.schema.is_visible(&t.relation) {
            return FactType::all_a(t.relation.clone(), t.pattern.len());
        }
        t.with_a(&self.forced[t]).0
    }

    /// Children of a settled type: their settled types and the class carry maps.
    fn children(&self, f: &FactType) -> (Vec<(FactType, BTreeMap<u8, u8>)>, bool) {
        let mut out = Vec::new();
        let mut denial = false;
        for r in &self.rules {
            match apply(r, f) {
                None => {}
                Some(Applied::Denial) => denial = true,
                Some(Applied::Child(u, carry)) => {
                    let raw_settled = if self.schema.is_visible(&u.relation) {
                        u.with_a(&u.classes())
                    } else {
                        u.with_a(&self.forced[&u])
                    };
                    let (su, m) = raw_settled;
                    let carry = carry
                        .into_iter()
                        .filter_map(|(k, ku)| m.get(&ku).map(|x| (k, *x)))
                        .collect();
                    out.push((su, carry));
                }
            }
        }
        (out, denial)
    }

    /// Settled types reachable from the visible all-`a` facts, and whether a denial
    /// constraint fires on one of them.
    fn reachable(&self) -> (BTreeSet<FactType>, bool) {
        let mut seen = BTreeSet::new();
        let mut queue: VecDeque<FactType> = self
            .schema
            .visible_relations()
            .map(|d| FactType::all_a(d.name.clone(), d.arity))
            .collect();
        let mut denial = false;
        while let Some(f) = queue.pop_front() {
            if !seen.insert(f.clone()) {
                continue;
            }
            let (ch, d) = self.children(&f);
            denial |= d;
            for (u, _) in ch {
                if !seen.contains(&u) {
                    queue.push_back(u);
                }
            }
        }
        (seen, denial)
    }
}

/// Forcing data of one fact type.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TypeInfo {
    /// Positions (0-based) whose value becomes `a` in the visible chase of the critical
    /// instance.
    pub forced_positions: BTreeSet<usize>,
    /// Visible relations of facts generated below a fact of this type.
    pub reachable_visible: BTreeSet<Name>,
}

fn check_linear(c: &ConstraintSet) -> Result<()> {
    if c.has_egd() {
        return Err(Error::Class("fact types need TGDs only".into()));
    }
    if !c.constants().is_empty() {
        return Err(Error::Class("fact types need constant-free TGDs".into()));
    }
    if c.tgds().any(|t| !t.is_linear() || t.is_disjunctive()) {
        return Err(Error::Class(
            "fact types need linear non-disjunctive TGDs".into(),
        ));
    }
    Ok(())
}

/// Computes forcing data for every fact type of the relations of `s` (arity at most 6)
/// and of the types they generate.
pub fn fact_type_closure(c: &ConstraintSet, s: &Schema) -> Result<BTreeMap<FactType, TypeInfo>> {
    check_linear(c)?;
    let (nc, ns) = normalize_single_head(c, s)?;
    let rules = compile_rules(&nc)?;
    let seeds: Vec<FactType> = s
        .relations()
        .filter(|d| d.arity <= 6)
        .flat_map(|d| FactType::all_types(&d.name, d.arity))
        .collect();
    let cl = Closure::new(&ns, rules, seeds.clone());
    let mut out = BTreeMap::new();
    for t in seeds {
        let forced: BTreeSet<u8> = if ns.is_visible(&t.relation) {
            t.classes()
        } else {
            cl.forced[&t].clone()
        };
        let forced_positions = t
            .pattern
            .iter()
            .enumerate()
            .filter(|(_, x)| matches!(x, TypeSlot::N(k) if forced.contains(k)))
            .map(|(i, _)| i)
            .collect();
        let mut reach = BTreeSet::new();
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([cl.settle(&t)]);
        while let Some(f) = queue.pop_front() {
            if !seen.insert(f.clone()) {
                continue;
            }
            for (u, _) in cl.children(&f).0 {
                if s.is_visible(&u.relation) {
                    reach.insert(u.relation.clone());
                }
                queue.push_back(u);
            }
        }
        out.insert(
            t,
            TypeInfo {
                forced_positions,
                reachable_visible: reach,
            },
        );
    }
    Ok(out)
}

/// Decides whether `q` holds in the visible chase of the critical instance over `a`,
/// for linear TGDs without constants. The answer is also `true` when that chase fails.
pub fn decide_pqi_critical_linear(
    q: &UnionQuery,
    c: &ConstraintSet,
    s: &Schema,
    a: &Value,
) -> Result<bool> {
    check_linear(c)?;
    if !q.is_boolean() {
        return Err(Error::Class("a Boolean query is needed".into()));
    }
    let (nc, ns) = normalize_single_head(c, s)?;
    let rules = compile_rules(&nc)?;
    let roots: Vec<FactType> = ns
        .visible_relations()
        .map(|d| FactType::all_a(d.name.clone(), d.arity))
        .collect();
    let cl = Closure::new(&ns, rules, roots);
    let (reach, denial) = cl.reachable();
    if denial {
        return Ok(true);
    }
    for d in &q.disjuncts {
        if cq_matches(d, &cl, &reach, a) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Query atom in positional form: variable ids or fixed slots.
#[derive(Clone, Debug)]
struct QAtom {
    rel: Name,
    args: Vec<QArg>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum QArg {
    Var(usize),
    /// A constant equal to `a`.
    IsA,
    /// A constant different from `a`: never matches.
    Other,
}

fn cq_matches(d: &ConjunctiveQuery, cl: &Closure<'_>, reach: &BTreeSet<FactType>, a: &Value) -> bool {
    let mut vars: Vec<Name> = Vec::new();
    let atoms: Vec<QAtom> = d
        .atoms
        .iter()
        .map(|at| QAtom {
            rel: at.relation.clone(),
            args: at
                .args
                .iter()
                .map(|t| match t {
                    Term::Var(v) => QArg::Var(match vars.iter().position(|w| w == v) {
                        Some(i) => i,
                        None => {
                            vars.push(v.clone());
                            vars.len() - 1
                        }
                    }),
                    Term::Const(k) => {
                        if matches!(a, Value::Const(x) if x == k) {
                            QArg::IsA
                        } else {
                            QArg::Other
                        }
                    }
                })
                .collect(),
        })
        .collect();
    if atoms.iter().any(|x| x.args.contains(&QArg::Other)) {
        return false;
    }
    let nv = vars.len();
    'guess: for va_mask in 0u64..(1u64 << nv) {
        let in_va = |v: usize| va_mask & (1 << v) != 0;
        let mut rest: Vec<usize> = Vec::new();
        for (i, at) in atoms.iter().enumerate() {
            let all_a = at.args.iter().all(|x| match x {
                QArg::Var(v) => in_va(*v),
                _ => true,
            });
            if all_a {
                if !reach.contains(&FactType::all_a(at.rel.clone(), at.args.len())) {
                    continue 'guess;
                }
            } else {
                rest.push(i);
            }
        }
        for comp in components(&atoms, &rest, &in_va) {
            let m = Matcher {
                cl,
                atoms: &atoms,
                va_mask,
            };
            if !m.component_matches(&comp, reach) {
                continue 'guess;
            }
        }
        return true;
    }
    false
}

fn components(atoms: &[QAtom], rest: &[usize], in_va: &dyn Fn(usize) -> bool) -> Vec<Vec<usize>> {
    let nulls_of = |i: usize| -> BTreeSet<usize> {
        atoms[i]
            .args
            .iter()
            .filter_map(|x| match x {
                QArg::Var(v) if !in_va(*v) => Some(*v),
                _ => None,
            })
            .collect()
    };
    let mut left: Vec<usize> = rest.to_vec();
    let mut out = Vec::new();
    while let Some(first) = left.pop() {
        let mut comp = vec![first];
        let mut vs = nulls_of(first);
        loop {
            let before = comp.len();
            left.retain(|&i| {
                if nulls_of(i).iter().any(|v| vs.contains(v)) {
                    comp.push(i);
                    vs.extend(nulls_of(i));
                    false
                } else {
                    true
                }
            });
            if comp.len() == before {
                break;
            }
        }
        comp.sort();
        out.push(comp);
    }
    out
}

/// Matching state: settled type, atoms still to place in its subtree, and variables
/// already bound to null classes of the type.
type State = (FactType, u32, Vec<(usize, u8)>);

struct Matcher<'a, 'c> {
    cl: &'a Closure<'c>,
    atoms: &'a [QAtom],
    va_mask: u64,
}

impl Matcher<'_, '_> {
    fn in_va(&self, v: usize) -> bool {
        self.va_mask & (1 << v) != 0
    }

    fn component_matches(&self, comp: &[usize], reach: &BTreeSet<FactType>) -> bool {
        let mask: u32 = comp.iter().fold(0, |m, i| m | (1 << i));
        let seeds: Vec<State> = reach.iter().map(|t| (t.clone(), mask, Vec::new())).collect();
        let mut table: HashMap<State, bool> = seeds.iter().map(|s| (s.clone(), false)).collect();
        let mut order: Vec<State> = seeds.clone();
        let mut children_cache: HashMap<FactType, Vec<(FactType, BTreeMap<u8, u8>)>> = HashMap::new();
        loop {
            let mut changed = false;
            let mut i = 0;
            while i < order.len() {
                let st = order[i].clone();
                i += 1;
                if table[&st] {
                    continue;
                }
                let mut fresh = Vec::new();
                if self.eval(&st, &table, &mut fresh, &mut children_cache) {
                    table.insert(st, true);
                    changed = true;
                }
                for n in fresh {
                    if !table.contains_key(&n) {
                        table.insert(n.clone(), false);
                        order.push(n);
                        changed = true;
                    }
                }
            }
            if seeds.iter().any(|s| table[s]) {
                return true;
            }
            if !changed {
                return false;
            }
        }
    }

    fn unify(&self, at: &QAtom, t: &FactType, beta: &mut BTreeMap<usize, u8>) -> bool {
        if at.rel != t.relation || at.args.len() != t.pattern.len() {
            return false;
        }
        for (x, s) in at.args.iter().zip(&t.pattern) {
            match (x, s) {
                (QArg::IsA, TypeSlot::A) => {}
                (QArg::Var(v), TypeSlot::A) if self.in_va(*v) => {}
                (QArg::Var(v), TypeSlot::N(k)) if !self.in_va(*v) => match beta.get(v) {
                    Some(j) if j != k => return false,
                    Some(_) => {}
                    None => {
                        beta.insert(*v, *k);
                    }
                },
                _ => return false,
            }
        }
        true
    }

    fn eval(
        &self,
        st: &State,
        table: &HashMap<State, bool>,
        fresh: &mut Vec<State>,
        cache: &mut HashMap<FactType, Vec<(FactType, BTreeMap<u8, u8>)>>,
    ) -> bool {
        let (t, set, beta0) = st;
        if *set == 0 {
            return true;
        }
        let children = cache
            .entry(t.clone())
            .or_insert_with(|| self.cl.children(t).0)
            .clone();
        let classes: Vec<u8> = t.classes().into_iter().collect();
        let mut sub = *set;
        loop {
            let here = sub;
            let mut beta: BTreeMap<usize, u8> = beta0.iter().copied().collect();
            let ok = (0..32)
                .filter(|i| here & (1 << i) != 0)
                .all(|i| self.unify(&self.atoms[i], t, &mut beta));
            if ok {
                let rest = set & !here;
                if rest == 0 {
                    return true;
                }
                if !children.is_empty()
                    && self.distribute(rest, &beta, &classes, &children, table, fresh)
                {
                    return true;
                }
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & set;
        }
        false
    }

    fn distribute(
        &self,
        rest: u32,
        beta: &BTreeMap<usize, u8>,
        classes: &[u8],
        children: &[(FactType, BTreeMap<u8, u8>)],
        table: &HashMap<State, bool>,
        fresh: &mut Vec<State>,
    ) -> bool {
        let items: Vec<usize> = (0..32).filter(|i| rest & (1 << i) != 0).collect();
        let nc = children.len();
        let mut assign = vec![0usize; items.len()];
        loop {
            let mut groups = vec![0u32; nc];
            for (k, &i) in items.iter().enumerate() {
                groups[assign[k]] |= 1 << i;
            }
            if self.try_groups(&groups, beta, classes, children, table, fresh) {
                return true;
            }
            let mut k = 0;
            loop {
                if k == assign.len() {
                    return false;
                }
                assign[k] += 1;
                if assign[k] < nc {
                    break;
                }
                assign[k] = 0;
                k += 1;
            }
        }
    }

    fn try_groups(
        &self,
        groups: &[u32],
        beta: &BTreeMap<usize, u8>,
        classes: &[u8],
        children: &[(FactType, BTreeMap<u8, u8>)],
        table: &HashMap<State, bool>,
        fresh: &mut Vec<State>,
    ) -> bool {
        let mut var_groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (g, m) in groups.iter().enumerate() {
            let mut vs = BTreeSet::new();
            for i in (0..32).filter(|i| m & (1 << i) != 0) {
                for x in &self.atoms[i].args {
                    if let QArg::Var(v) = x {
                        if !self.in_va(*v) {
                            vs.insert(*v);
                        }
                    }
                }
            }
            for v in vs {
                var_groups.entry(v).or_default().push(g);
            }
        }
        let mut fixed: Vec<(usize, u8)> = Vec::new();
        let mut guess: Vec<(usize, Vec<u8>)> = Vec::new();
        for (v, gs) in &var_groups {
            if let Some(k) = beta.get(v) {
                if gs.iter().any(|g| !children[*g].1.contains_key(k)) {
                    return false;
                }
                fixed.push((*v, *k));
            } else if gs.len() >= 2 {
                let opts: Vec<u8> = classes
                    .iter()
                    .copied()
                    .filter(|k| gs.iter().all(|g| children[*g].1.contains_key(k)))
                    .collect();
                if opts.is_empty() {
                    return false;
                }
                guess.push((*v, opts));
            }
        }
        let mut pick = vec![0usize; guess.len()];
        loop {
            let mut bind: BTreeMap<usize, u8> = fixed.iter().copied().collect();
            for (j, (v, opts)) in guess.iter().enumerate() {
                bind.insert(*v, opts[pick[j]]);
            }
            let mut all = true;
            for (g, m) in groups.iter().enumerate() {
                if *m == 0 {
                    continue;
                }
                let (u, carry) = &children[g];
                let cb: Vec<(usize, u8)> = bind
                    .iter()
                    .filter(|(v, _)| var_groups[v].contains(&g))
                    .map(|(v, k)| (*v, carry[k]))
                    .collect();
                let st = (u.clone(), *m, cb);
                match table.get(&st) {
                    Some(true) => {}
                    Some(false) => {
                        all = false;
                        break;
                    }
                    None => {
                        fresh.push(st);
                        all = false;
                        break;
                    }
                }
            }
            if all {
                return true;
            }
            let mut j = 0;
            loop {
                if j == pick.len() {
                    return false;
                }
                pick[j] += 1;
                if pick[j] < guess[j].1.len() {
                    break;
                }
                pick[j] = 0;
                j += 1;
            }
        }
    }
}

/// Relations derivable by the classical chase of `i` under linear constant-free TGDs.
/// Constants of `i` behave like nulls since the TGDs mention none.
pub fn derivable_relations(c: &ConstraintSet, i: &Instance) -> Result<BTreeSet<Name>> {
    check_linear(c)?;
    let mut rules = Vec::new();
    for t in c.tgds() {
        if t.heads.is_empty() {
            continue;
        }
        let (n, _) = normalize_single_head(&ConstraintSet::new(vec![t.clone().into()]), &Schema::new())?;
        for d in n.tgds() {
            rules.push(compile_rule(d)?);
        }
    }
    let mut seen: BTreeSet<FactType> = BTreeSet::new();
    let mut queue: VecDeque<FactType> = VecDeque::new();
    for f in i.facts() {
        let mut ids: Vec<&Value> = Vec::new();
        let raw: Vec<TypeSlot> = f
            .args
            .iter()
            .map(|v| {
                TypeSlot::N(match ids.iter().position(|w| *w == v) {
                    Some(k) => k as u8,
                    None => {
                        ids.push(v);
                        (ids.len() - 1) as u8
                    }
                })
            })
            .collect();
        queue.push_back(FactType::canonical(f.relation.clone(), &raw).0);
    }
    while let Some(t) = queue.pop_front() {
        if !seen.insert(t.clone()) {
            continue;
        }
        for r in &rules {
            if let Some(Applied::Child(u, _)) = apply(r, &t) {
                queue.push_back(u);
            }
        }
    }
    Ok(seen.into_iter().map(|t| t.relation).collect())
}

/// Whether the classical chase of `i` under `c` contains a visible fact.
pub fn derives_visible(c: &ConstraintSet, s: &Schema, i: &Instance) -> Result<bool> {
    Ok(derivable_relations(c, i)?.iter().any(|r| s.is_visible(r)))
}
