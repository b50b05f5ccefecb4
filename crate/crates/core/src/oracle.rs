//! Bounded brute-force ground truth.
//!
//! The oracles quantify over every full instance whose visible part is fixed and whose
//! hidden facts range over a bounded domain: the values of the visible instance, the
//! constants of the query and constraints, and `k` fresh values `!w0`, `!w1`, ….
//! [`enumerate_extensions`] lists these instances naively; the deciding functions use a
//! depth-first search over candidate facts that prunes partial instances which certainly
//! violate a dependency or cannot reach the wanted query polarity.

use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;

use crate::chase::{classical_chase, ChaseBudget, ClassicalOutcome};
use crate::classify::is_id_like;
use crate::error::{Error, Result};
use crate::eval::{eval_ucq, satisfies, violated_trigger};
use crate::gfp::enforce_adom_controllability;
use crate::hom::Index;
use crate::model::{ConstraintSet, Fact, Instance, Name, Schema, UnionQuery, Value};

/// Bounds of the enumeration domain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DomainBound {
    /// Number of fresh values added to the domain.
    pub extra_values: usize,
    /// Largest number of facts added to the fixed part; `None` for no limit.
    pub max_facts: Option<usize>,
    /// Constants added to the domain besides the values of the fixed instance.
    pub constants: BTreeSet<Name>,
    /// Largest number of search nodes; exceeding it is a [`Error::Ceiling`] error.
    pub max_nodes: Option<u64>,
}

impl DomainBound {
    pub fn new(extra_values: usize) -> Self {
        DomainBound {
            extra_values,
            max_facts: None,
            constants: BTreeSet::new(),
            max_nodes: None,
        }
    }

    pub fn with_max_nodes(mut self, n: u64) -> Self {
        self.max_nodes = Some(n);
        self
    }

    pub fn with_max_facts(mut self, m: usize) -> Self {
        self.max_facts = Some(m);
        self
    }

    pub fn with_constants(mut self, cs: impl IntoIterator<Item = Name>) -> Self {
        self.constants.extend(cs);
        self
    }
}

/// Name of the `i`-th fresh value.
pub fn fresh_value(i: usize) -> Value {
    Value::constant(&format!("!w{i}"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exactness {
    /// The answer is the true answer of the unbounded problem.
    ExactForClass,
    /// The answer holds over the bounded domain only.
    BoundedOnly,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleAnswer {
    pub answer: bool,
    pub exactness: Exactness,
    /// A full instance refuting PQI/NQI/OWQ or proving realizability.
    pub witness: Option<Instance>,
    /// Search nodes visited.
    pub explored: u64,
}

/// Largest number of instances [`enumerate_extensions`] accepts to list.
pub const ENUMERATION_CEILING: u128 = 1 << 24;
/// Largest number of candidate facts the pruned search accepts.
pub const CANDIDATE_CEILING: usize = 4096;

/// Known values plus `extra_values` fresh ones; never empty.
fn domain(fixed: &Instance, d: &DomainBound) -> Vec<Value> {
    let mut dom: BTreeSet<Value> = fixed.active_domain();
    dom.extend(d.constants.iter().map(|c| Value::Const(c.clone())));
    let mut i = 0;
    let mut added = 0;
    let wanted = if dom.is_empty() { d.extra_values.max(1) } else { d.extra_values };
    while added < wanted {
        let v = fresh_value(i);
        i += 1;
        if dom.insert(v) {
            added += 1;
        }
    }
    dom.into_iter().collect()
}

/// All facts over `dom` for the given relations, by relation name then tuple, minus
/// those in `skip`.
fn candidates(rels: &[(Name, usize)], dom: &[Value], skip: &Instance) -> Vec<Fact> {
    let mut out = Vec::new();
    for (r, k) in rels {
        let tuples: Vec<Vec<Value>> = if *k == 0 {
            vec![Vec::new()]
        } else {
            (0..*k).map(|_| dom.iter().cloned()).multi_cartesian_product().collect()
        };
        for t in tuples {
            if !skip.contains_tuple(r, &t) {
                out.push(Fact {
                    relation: r.clone(),
                    args: t,
                });
            }
        }
    }
    out
}

fn count_subsets(n: usize, m: usize) -> u128 {
    let mut total: u128 = 0;
    let mut c: u128 = 1;
    for i in 0..=m.min(n) {
        total = total.saturating_add(c);
        c = c.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    total
}

/// Every full instance with visible part `v` and hidden facts over the bounded domain,
/// by increasing number of hidden facts, then lexicographically by candidate order
/// (relations by name, tuples lexicographic).
pub fn enumerate_extensions(
    v: &Instance,
    s: &Schema,
    d: &DomainBound,
) -> Result<Box<dyn Iterator<Item = Instance>>> {
    let fixed = v.clone();
    let dom = domain(&fixed, d);
    let rels: Vec<(Name, usize)> = s.hidden_relations().map(|r| (r.name.clone(), r.arity)).collect();
    let cands = candidates(&rels, &dom, &fixed);
    let m = d.max_facts.unwrap_or(cands.len()).min(cands.len());
    let size = count_subsets(cands.len(), m);
    if size > ENUMERATION_CEILING {
        return Err(Error::Ceiling {
            size,
            ceiling: ENUMERATION_CEILING,
        });
    }
    let it = (0..=m).flat_map(move |k| {
        let fixed = fixed.clone();
        let cands = cands.clone();
        (0..cands.len()).combinations(k).map(move |idx| {
            let mut inst = fixed.clone();
            for i in idx {
                inst.insert(cands[i].clone());
            }
            inst
        })
    });
    Ok(Box::new(it))
}

/// Query polarity sought by a search.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Goal {
    QueryTrue,
    QueryFalse,
    Any,
}

struct Search<'a> {
    c: &'a ConstraintSet,
    q: &'a UnionQuery,
    goal: Goal,
    cands: Vec<Fact>,
    include_first: bool,
    cap: usize,
    def: Instance,
    poss: Instance,
    count: usize,
    nodes: u64,
    limit: u64,
}

impl Search<'_> {
    fn consistent(&mut self) -> bool {
        self.nodes += 1;
        if self.nodes > self.limit {
            return false;
        }
        match self.goal {
            Goal::QueryTrue if !eval_ucq(self.q, &self.poss) => return false,
            Goal::QueryFalse if eval_ucq(self.q, &self.def) => return false,
            _ => {}
        }
        let di = Index::new(&self.def);
        let pi = Index::new(&self.poss);
        self.c
            .deps
            .iter()
            .all(|d| violated_trigger(d, &di, &pi).is_none())
    }

    fn rec(&mut self, i: usize) -> bool {
        if !self.consistent() {
            return false;
        }
        if i == self.cands.len() {
            return true;
        }
        if self.count == self.cap {
            for f in &self.cands[i..] {
                self.poss.remove(f);
            }
            let ok = self.consistent();
            if !ok {
                for f in &self.cands[i..] {
                    self.poss.insert(f.clone());
                }
            }
            return ok;
        }
        let f = self.cands[i].clone();
        let order = if self.include_first {
            [true, false]
        } else {
            [false, true]
        };
        for inc in order {
            if inc {
                self.def.insert(f.clone());
                self.count += 1;
                if self.rec(i + 1) {
                    return true;
                }
                self.def.remove(&f);
                self.count -= 1;
            } else {
                self.poss.remove(&f);
                if self.rec(i + 1) {
                    return true;
                }
                self.poss.insert(f.clone());
            }
        }
        false
    }
}

/// Searches for an instance `fixed ∪ X` with `X` drawn from `cands`, satisfying `c` and
/// with the wanted polarity of `q`. Returns a witness with the fewest added facts.
fn search(
    c: &ConstraintSet,
    q: &UnionQuery,
    goal: Goal,
    fixed: &Instance,
    mut cands: Vec<Fact>,
    cap: Option<usize>,
    limit: Option<u64>,
) -> Result<(Option<Instance>, u64)> {
    let limit = limit.unwrap_or(u64::MAX);
    if cands.len() > CANDIDATE_CEILING {
        return Err(Error::Ceiling {
            size: cands.len() as u128,
            ceiling: CANDIDATE_CEILING as u128,
        });
    }
    let qrels: BTreeSet<&Name> = q
        .disjuncts
        .iter()
        .flat_map(|d| d.atoms.iter().map(|a| &a.relation))
        .collect();
    cands.sort_by_key(|f| !qrels.contains(&f.relation));
    let n = cands.len();
    let cap = cap.unwrap_or(n).min(n);
    let mut nodes = 0;
    let mut run = |cap: usize, include_first: bool| {
        let mut poss = fixed.clone();
        for f in &cands {
            poss.insert(f.clone());
        }
        let mut s = Search {
            c,
            q,
            goal,
            cands: cands.clone(),
            include_first,
            cap,
            def: fixed.clone(),
            poss,
            count: 0,
            nodes: 0,
            limit: limit.saturating_sub(nodes),
        };
        let found = s.rec(0);
        nodes += s.nodes;
        if s.nodes > s.limit {
            return Err(Error::Ceiling {
                size: nodes as u128,
                ceiling: limit as u128,
            });
        }
        Ok(found.then_some(s.def))
    };
    let Some(first) = run(cap, goal == Goal::QueryTrue)? else {
        return Ok((None, nodes));
    };
    let size = first.len() - fixed.len();
    for m in 0..size {
        if let Some(w) = run(m, false)? {
            return Ok((Some(w), nodes));
        }
    }
    Ok((Some(first), nodes))
}

fn hidden_rels(s: &Schema) -> Vec<(Name, usize)> {
    s.hidden_relations().map(|r| (r.name.clone(), r.arity)).collect()
}

fn problem_constants(q: &UnionQuery, c: &ConstraintSet) -> BTreeSet<Name> {
    let mut out = c.constants();
    out.extend(q.constants());
    out
}

fn boolean(q: &UnionQuery) -> Result<()> {
    if q.is_boolean() {
        Ok(())
    } else {
        Err(Error::Class("a Boolean query is needed".into()))
    }
}

/// PQI over the bounded domain: no instance satisfies `c` and falsifies `q`.
pub fn oracle_pqi(q: &UnionQuery, c: &ConstraintSet, s: &Schema, v: &Instance, d: &DomainBound) -> Result<OracleAnswer> {
    boolean(q)?;
    let d = d.clone().with_constants(problem_constants(q, c));
    let v = v.visible_part(s);
    let dom = domain(&v, &d);
    let cands = candidates(&hidden_rels(s), &dom, &v);
    let (w, explored) = search(c, q, Goal::QueryFalse, &v, cands, d.max_facts, d.max_nodes)?;
    Ok(OracleAnswer {
        answer: w.is_none(),
        exactness: if w.is_some() {
            Exactness::ExactForClass
        } else {
            Exactness::BoundedOnly
        },
        witness: w,
        explored,
    })
}

/// Constraints whose witnesses collapse onto a nonempty set of known values.
fn collapses(c: &ConstraintSet) -> bool {
    !c.has_egd() && c.tgds().all(is_id_like)
}

/// NQI over the bounded domain: no instance satisfies `c` and `q`.
pub fn oracle_nqi(q: &UnionQuery, c: &ConstraintSet, s: &Schema, v: &Instance, d: &DomainBound) -> Result<OracleAnswer> {
    boolean(q)?;
    let d = d.clone().with_constants(problem_constants(q, c));
    let v = v.visible_part(s);
    let dom = domain(&v, &d);
    let cands = candidates(&hidden_rels(s), &dom, &v);
    let (w, explored) = search(c, q, Goal::QueryTrue, &v, cands, d.max_facts, d.max_nodes)?;
    let exact = w.is_some() || (collapses(c) && d.max_facts.is_none());
    Ok(OracleAnswer {
        answer: w.is_none(),
        exactness: if exact {
            Exactness::ExactForClass
        } else {
            Exactness::BoundedOnly
        },
        witness: w,
        explored,
    })
}

/// NQI for linear TGDs, exact: the oracle with no fresh values on the problem rewritten
/// to be active-domain controllable. The witness, if any, is over the rewritten schema.
pub fn oracle_nqi_adom(q: &UnionQuery, c: &ConstraintSet, s: &Schema, v: &Instance) -> Result<OracleAnswer> {
    let (q2, c2, s2) = enforce_adom_controllability(q, c, s)?;
    let mut ans = oracle_nqi(&q2, &c2, &s2, &v.visible_part(s), &DomainBound::new(0))?;
    ans.exactness = Exactness::ExactForClass;
    Ok(ans)
}

/// Realizability over the bounded domain: some instance with visible part `v` satisfies
/// `c`.
pub fn oracle_realizable(c: &ConstraintSet, s: &Schema, v: &Instance, d: &DomainBound) -> Result<OracleAnswer> {
    let d = d.clone().with_constants(c.constants());
    let v = v.visible_part(s);
    let dom = domain(&v, &d);
    let cands = candidates(&hidden_rels(s), &dom, &v);
    let never = UnionQuery::new(Vec::new());
    let (w, explored) = search(c, &never, Goal::Any, &v, cands, d.max_facts, d.max_nodes)?;
    let visible_only = ConstraintSet::new(
        c.deps
            .iter()
            .filter(|dep| dep.atoms().iter().all(|a| s.is_visible(&a.relation)))
            .cloned()
            .collect(),
    );
    let exact = w.is_some()
        || !satisfies(&visible_only, &v)
        || (collapses(c) && d.max_facts.is_none());
    Ok(OracleAnswer {
        answer: w.is_some(),
        exactness: if exact {
            Exactness::ExactForClass
        } else {
            Exactness::BoundedOnly
        },
        witness: w,
        explored,
    })
}

/// Relation arities used by `c`, `q` and `i`.
pub fn schema_of(c: &ConstraintSet, q: &UnionQuery, i: &Instance) -> Result<Schema> {
    let mut ar: BTreeMap<Name, usize> = BTreeMap::new();
    let mut note = |r: &Name, k: usize| -> Result<()> {
        match ar.get(r) {
            Some(j) if *j != k => Err(Error::Schema(format!(
                "relation {r} used with arities {j} and {k}"
            ))),
            _ => {
                ar.insert(r.clone(), k);
                Ok(())
            }
        }
    };
    for d in &c.deps {
        for a in d.atoms() {
            note(&a.relation, a.args.len())?;
        }
    }
    for d in &q.disjuncts {
        for a in &d.atoms {
            note(&a.relation, a.args.len())?;
        }
    }
    for (r, ts) in i.relations() {
        if let Some(t) = ts.iter().next() {
            note(r, t.len())?;
        }
    }
    let mut s = Schema::new();
    for (r, k) in ar {
        s = s.hidden(&r, k);
    }
    Ok(s)
}

/// Open-world answering over the bounded domain: every superset of `i` satisfying `c`
/// makes `q` true.
pub fn oracle_owq(q: &UnionQuery, c: &ConstraintSet, i: &Instance, d: &DomainBound) -> Result<OracleAnswer> {
    boolean(q)?;
    let s = schema_of(c, q, i)?;
    let d = d.clone().with_constants(problem_constants(q, c));
    let dom = domain(i, &d);
    let cands = candidates(&hidden_rels(&s), &dom, i);
    let (w, explored) = search(c, q, Goal::QueryFalse, i, cands, d.max_facts, d.max_nodes)?;
    let saturates = !c.tgds().any(|t| t.is_disjunctive())
        && matches!(
            classical_chase(i, c, ChaseBudget::default()),
            Ok(ClassicalOutcome::Saturated(_)) | Ok(ClassicalOutcome::EgdFailure)
        );
    Ok(OracleAnswer {
        answer: w.is_none(),
        exactness: if w.is_some() || saturates {
            Exactness::ExactForClass
        } else {
            Exactness::BoundedOnly
        },
        witness: w,
        explored,
    })
}
