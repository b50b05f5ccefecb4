//! Decision procedures with three-valued verdicts and checkable certificates.
//!
//! Each decider dispatches on the constraint class: an exact method when one applies,
//! otherwise a budgeted chase, backed by a bounded counterexample search. `False`
//! verdicts of [`pqi`] and [`nqi`] and `True` verdicts of [`realizable`] carry a witness
//! instance whenever one is found; [`validate_witness`] re-checks it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use itertools::Itertools;

use crate::chase::{
    chase_vis_critical, visible_chase_with, ChaseBudget, ChaseOptions, ChaseStats, ChaseTree,
    CriticalOutcome, NodeStatus,
};
use crate::classify::body_connected;
use crate::error::{Error, Result};
use crate::eval::{canonical_db, eval_ucq, first_violation, satisfies};
use crate::hom::find_homomorphisms;
use crate::facttype::{decide_pqi_critical_linear, derivable_relations};
use crate::gfp::{nqi_via_gfp_run, GfpRoute};
use crate::model::{
    Atom, ConjunctiveQuery, ConstraintSet, Instance, Schema, Term, Tuple, UnionQuery, Value,
};
use crate::oracle::{oracle_nqi, oracle_pqi, oracle_realizable, DomainBound};

/// Three-valued answer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Answer {
    True,
    False,
    Unknown(String),
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Answer::True => write!(f, "true"),
            Answer::False => write!(f, "false"),
            Answer::Unknown(_) => write!(f, "unknown"),
        }
    }
}

/// Evidence backing a verdict.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Certificate {
    /// A full instance refuting the implication, or proving realizability.
    Witness(Instance),
    /// The chase tree was explored completely.
    ChaseExhausted(ChaseStats),
    /// An exact method for the constraint class answered.
    ClassExact(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub value: Answer,
    pub certificate: Option<Certificate>,
    /// Procedure that produced the verdict.
    pub method: String,
}

impl Verdict {
    fn new(value: Answer, certificate: Option<Certificate>, method: &str) -> Self {
        Verdict {
            value,
            certificate,
            method: method.into(),
        }
    }

    fn exact(value: bool, method: &str) -> Self {
        Verdict::new(
            Answer::from(value),
            Some(Certificate::ClassExact(method.into())),
            method,
        )
    }

    fn witness(value: bool, w: Instance, method: &str) -> Self {
        Verdict::new(Answer::from(value), Some(Certificate::Witness(w)), method)
    }

    fn exhausted(value: bool, t: &ChaseTree, method: &str) -> Self {
        Verdict::new(
            Answer::from(value),
            Some(Certificate::ChaseExhausted(t.stats())),
            method,
        )
    }

    fn unknown(reason: impl Into<String>, method: &str) -> Self {
        Verdict::new(Answer::Unknown(reason.into()), None, method)
    }

    pub fn is_true(&self) -> bool {
        self.value == Answer::True
    }

    pub fn is_false(&self) -> bool {
        self.value == Answer::False
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self.value, Answer::Unknown(_))
    }

    /// `Some(b)` for a definite answer.
    pub fn as_bool(&self) -> Option<bool> {
        match self.value {
            Answer::True => Some(true),
            Answer::False => Some(false),
            Answer::Unknown(_) => None,
        }
    }

    pub fn witness_instance(&self) -> Option<&Instance> {
        match &self.certificate {
            Some(Certificate::Witness(w)) => Some(w),
            _ => None,
        }
    }
}

impl From<bool> for Answer {
    fn from(b: bool) -> Self {
        if b {
            Answer::True
        } else {
            Answer::False
        }
    }
}

/// Fresh values tried by counterexample searches.
const REFUTE_MAX_EXTRA: usize = 2;
/// Search nodes allowed per counterexample search.
const REFUTE_NODES: u64 = 200_000;

fn boolean(q: &UnionQuery) -> Result<()> {
    if q.is_boolean() {
        Ok(())
    } else {
        Err(Error::Class(
            "a Boolean query is needed; use the tuple variants".into(),
        ))
    }
}

fn budget_reason(t: &ChaseTree) -> String {
    let st = t.stats();
    format!(
        "chase budget exhausted ({} nodes, {} cut, depth {})",
        st.nodes, st.budget_cut, st.max_depth
    )
}

fn refute<F>(f: F) -> Option<Instance>
where
    F: Fn(&DomainBound) -> Result<crate::oracle::OracleAnswer>,
{
    (0..=REFUTE_MAX_EXTRA).find_map(|k| {
        let d = DomainBound::new(k).with_max_nodes(REFUTE_NODES);
        f(&d).ok().and_then(|a| a.witness)
    })
}

/// Positive query implication: every instance satisfying `c` with visible part `v`
/// satisfies `q`.
pub fn pqi(q: &UnionQuery, c: &ConstraintSet, s: &Schema, v: &Instance, b: ChaseBudget) -> Result<Verdict> {
    boolean(q)?;
    let v = v.visible_part(s);
    let close = |i: &Instance| eval_ucq(q, i);
    let stop = |n: &crate::chase::ChaseNode| n.status == NodeStatus::Leaf;
    let tree = visible_chase_with(
        c,
        s,
        &v,
        b,
        ChaseOptions {
            close_when: Some(&close),
            stop_when: Some(&stop),
            keep_internal: false,
        },
    );
    if let Some(leaf) = tree.leaves().next() {
        return Ok(Verdict::witness(false, leaf.instance.clone(), "visible-chase"));
    }
    if tree.is_complete() {
        return Ok(Verdict::exhausted(true, &tree, "visible-chase"));
    }
    if let Some(w) = refute(|d| oracle_pqi(q, c, s, &v, d)) {
        return Ok(Verdict::witness(false, w, "bounded-search"));
    }
    Ok(Verdict::unknown(budget_reason(&tree), "visible-chase"))
}

/// Negative query implication: no instance satisfying `c` with visible part `v`
/// satisfies `q`.
pub fn nqi(q: &UnionQuery, c: &ConstraintSet, s: &Schema, v: &Instance, b: ChaseBudget) -> Result<Verdict> {
    boolean(q)?;
    let v = v.visible_part(s);
    let search = || refute(|d| oracle_nqi(q, c, s, &v, d));
    let linear = !c.has_egd() && c.tgds().all(|t| t.is_linear());
    if linear {
        let run = nqi_via_gfp_run(q, c, s, &v)?;
        let method = match run.route {
            GfpRoute::Direct => "gfp",
            GfpRoute::Rewritten => "gfp-rewritten",
        };
        if run.nqi {
            return Ok(Verdict::exact(true, method));
        }
        if run.route == GfpRoute::Direct {
            let world = v.union(&run.fixpoint.restrict(|r| s.is_hidden(r)));
            if let Some(w) = support_witness(q, c, &v, &world) {
                return Ok(Verdict::witness(false, w, method));
            }
        }
        if let Some(w) = search() {
            return Ok(Verdict::witness(false, w, method));
        }
        return Ok(Verdict::exact(false, method));
    }
    let mut trees = Vec::new();
    for seed in nqi_seeds(q, s, &v) {
        let tree = visible_chase_with(
            c,
            s,
            &seed,
            b,
            ChaseOptions {
                close_when: None,
                stop_when: Some(&|n: &crate::chase::ChaseNode| n.status == NodeStatus::Leaf),
                keep_internal: false,
            },
        );
        if let Some(leaf) = tree.leaves().next() {
            return Ok(Verdict::witness(false, leaf.instance.clone(), "seeded-chase"));
        }
        trees.push(tree);
    }
    if trees.iter().all(ChaseTree::all_dummy) {
        let mut stats = ChaseStats::default();
        for t in &trees {
            let st = t.stats();
            stats.nodes += st.nodes;
            stats.dummies += st.dummies;
            stats.internal += st.internal;
            stats.max_depth = stats.max_depth.max(st.max_depth);
        }
        return Ok(Verdict::new(
            Answer::True,
            Some(Certificate::ChaseExhausted(stats)),
            "seeded-chase",
        ));
    }
    if let Some(w) = search() {
        return Ok(Verdict::witness(false, w, "bounded-search"));
    }
    let reason = match trees.iter().find(|t| !t.is_complete()) {
        Some(t) => format!("no complete method for class; {}", budget_reason(t)),
        None => "no complete method for class".to_string(),
    };
    Ok(Verdict::unknown(reason, "bounded-search"))
}

/// A sub-instance of `world` containing `v` that satisfies `q` and `c`: a match of `q`
/// closed under `c` using head matches found in `world`. `None` when `world` is not
/// such a model itself.
fn support_witness(q: &UnionQuery, c: &ConstraintSet, v: &Instance, world: &Instance) -> Option<Instance> {
    if !satisfies(c, world) {
        return None;
    }
    let (d, h) = q.disjuncts.iter().find_map(|d| {
        find_homomorphisms(&d.atoms, world, &Default::default())
            .into_iter()
            .next()
            .map(|h| (d, h))
    })?;
    let mut w = v.clone();
    for a in &d.atoms {
        w.insert(a.ground(&h)?);
    }
    while let Some(viol) = first_violation(c, &w) {
        let t = c.deps[viol.dependency].as_tgd()?;
        let (atoms, ext) = t.heads.iter().find_map(|hd| {
            find_homomorphisms(&hd.atoms, world, &viol.trigger)
                .into_iter()
                .next()
                .map(|e| (&hd.atoms, e))
        })?;
        for a in atoms {
            w.insert(a.ground(&ext)?);
        }
    }
    Some(w)
}

/// Starting instances for the chase refuting NQI: `v` plus the hidden atoms of one
/// disjunct, whose visible atoms are mapped into `v` and whose other variables become
/// distinct nulls. Every instance satisfying `q` with visible part `v` contains the
/// image of one of them.
fn nqi_seeds(q: &UnionQuery, s: &Schema, v: &Instance) -> Vec<Instance> {
    let first = v.max_null().map_or(1, |n| n + 1);
    let mut out = Vec::new();
    for d in &q.disjuncts {
        let (vis, hid): (Vec<Atom>, Vec<Atom>) =
            d.atoms.iter().cloned().partition(|a| s.is_visible(&a.relation));
        for h in find_homomorphisms(&vis, v, &Default::default()) {
            let mut h = h;
            let mut next = first;
            for x in hid.iter().flat_map(|a| a.vars()) {
                if !h.contains_key(x) {
                    h.insert(x.clone(), Value::Null(next));
                    next += 1;
                }
            }
            let hidden = Instance::from_facts(hid.iter().map(|a| a.ground(&h).expect("total")));
            let seed = v.union(&hidden);
            if !out.contains(&seed) {
                out.push(seed);
            }
        }
    }
    out
}

/// Some instance satisfying `c` has visible part `v`.
pub fn realizable(c: &ConstraintSet, s: &Schema, v: &Instance, b: ChaseBudget) -> Result<Verdict> {
    let v = v.visible_part(s);
    let stop = |n: &crate::chase::ChaseNode| n.status == NodeStatus::Leaf;
    let tree = visible_chase_with(
        c,
        s,
        &v,
        b,
        ChaseOptions {
            close_when: None,
            stop_when: Some(&stop),
            keep_internal: false,
        },
    );
    if let Some(leaf) = tree.leaves().next() {
        return Ok(Verdict::witness(true, leaf.instance.clone(), "visible-chase"));
    }
    if tree.all_dummy() {
        return Ok(Verdict::exhausted(false, &tree, "visible-chase"));
    }
    if let Some(w) = refute(|d| oracle_realizable(c, s, &v, d)) {
        return Ok(Verdict::witness(true, w, "bounded-search"));
    }
    Ok(Verdict::unknown(budget_reason(&tree), "visible-chase"))
}

/// Relations of `q` if it is a union of single atoms with distinct variables and no
/// constants.
fn atomic_relations(q: &UnionQuery) -> Option<BTreeSet<String>> {
    q.disjuncts
        .iter()
        .map(|d| {
            (d.atoms.len() == 1
                && d.atoms[0].constants().next().is_none()
                && !d.atoms[0].has_repeated_var())
            .then(|| d.atoms[0].relation.to_string())
        })
        .collect()
}

/// Relations of `i` plus heads of TGDs whose body relations are all reached. Without
/// EGDs and denials the chase of `i` is a model using only these relations.
fn relation_closure(c: &ConstraintSet, i: &Instance) -> BTreeSet<crate::model::Name> {
    let mut reach: BTreeSet<crate::model::Name> = i.relations().map(|(r, _)| r.clone()).collect();
    loop {
        let before = reach.len();
        for t in c.tgds() {
            if t.body.iter().all(|a| reach.contains(&a.relation)) {
                for h in &t.heads {
                    reach.extend(h.atoms.iter().map(|a| a.relation.clone()));
                }
            }
        }
        if reach.len() == before {
            return reach;
        }
    }
}

/// Open-world query answering: every instance containing `i` and satisfying `c`
/// satisfies `q`.
pub fn owq(q: &UnionQuery, c: &ConstraintSet, i: &Instance, b: ChaseBudget) -> Result<Verdict> {
    boolean(q)?;
    if eval_ucq(q, i) {
        return Ok(Verdict::exact(true, "query-in-instance"));
    }
    if !c.has_egd() && c.tgds().all(|t| !t.heads.is_empty()) {
        let reach = relation_closure(c, i);
        let blocked = q
            .disjuncts
            .iter()
            .all(|d| d.atoms.iter().any(|a| !reach.contains(&a.relation)));
        if blocked {
            return Ok(Verdict::exact(false, "relation-closure"));
        }
    }
    let linear = !c.has_egd()
        && c.constants().is_empty()
        && c.tgds().all(|t| t.is_linear() && !t.is_disjunctive());
    if linear {
        if let Some(rels) = atomic_relations(q) {
            let derived = derivable_relations(c, i)?;
            let hit = derived.iter().any(|r| rels.contains(&r.to_string()));
            return Ok(Verdict::exact(hit, "fact-type-closure"));
        }
    }
    let close = |f: &Instance| eval_ucq(q, f);
    let stop = |n: &crate::chase::ChaseNode| n.status == NodeStatus::Leaf;
    let tree = visible_chase_with(
        c,
        &Schema::new(),
        i,
        b,
        ChaseOptions {
            close_when: Some(&close),
            stop_when: Some(&stop),
            keep_internal: false,
        },
    );
    if let Some(leaf) = tree.leaves().next() {
        return Ok(Verdict::witness(false, leaf.instance.clone(), "classical-chase"));
    }
    if tree.is_complete() {
        return Ok(Verdict::exhausted(true, &tree, "classical-chase"));
    }
    Ok(Verdict::unknown(budget_reason(&tree), "classical-chase"))
}

/// Value of the critical instance used by [`exists_pqi`].
pub fn critical_value() -> Value {
    Value::constant("a")
}

/// Some visible instance makes `q` positively implied.
pub fn exists_pqi(q: &UnionQuery, c: &ConstraintSet, s: &Schema, b: ChaseBudget) -> Result<Verdict> {
    boolean(q)?;
    if !c.constants().is_empty() || !q.constants().is_empty() {
        return Err(Error::Class(
            "existence of a positive implication is undecidable with constants".into(),
        ));
    }
    if c.tgds().any(|t| t.is_disjunctive()) {
        return Err(Error::Class(
            "existence of a positive implication is undecidable with disjunctive heads".into(),
        ));
    }
    let a = critical_value();
    if !c.has_egd() && c.tgds().all(|t| t.is_linear()) {
        let ans = decide_pqi_critical_linear(q, c, s, &a)?;
        return Ok(Verdict::exact(ans, "fact-type-closure"));
    }
    match chase_vis_critical(c, s, &a, b)? {
        CriticalOutcome::Saturated(i) => {
            if eval_ucq(q, &i) {
                Ok(Verdict::exact(true, "critical-chase"))
            } else {
                Ok(Verdict::witness(false, i, "critical-chase"))
            }
        }
        CriticalOutcome::Failed(_) => Ok(Verdict::exact(true, "critical-chase")),
        CriticalOutcome::BudgetExceeded(i) => {
            if eval_ucq(q, &i) {
                Ok(Verdict::exact(true, "critical-chase"))
            } else {
                Ok(Verdict::unknown("chase budget exhausted", "critical-chase"))
            }
        }
    }
}

/// The query `∨_{R visible} ∃x̄ R(x̄)`.
pub fn some_visible_fact(s: &Schema) -> UnionQuery {
    UnionQuery::new(
        s.visible_relations()
            .map(|r| {
                let args: Vec<Term> = (0..r.arity).map(|i| Term::var(&format!("x{i}"))).collect();
                ConjunctiveQuery::boolean(vec![Atom {
                    relation: r.name.clone(),
                    args,
                }])
            })
            .collect(),
    )
}

/// Some visible instance makes `q` negatively implied.
pub fn exists_nqi(q: &UnionQuery, c: &ConstraintSet, s: &Schema, b: ChaseBudget) -> Result<Verdict> {
    boolean(q)?;
    if !c.constants().is_empty() || !q.constants().is_empty() {
        return Err(Error::Class(
            "existence of a negative implication is undecidable with constants".into(),
        ));
    }
    if !c.deps.iter().all(|d| body_connected(d.body())) {
        return Err(Error::Class(
            "existence of a negative implication is undecidable without connected bodies".into(),
        ));
    }
    let target = some_visible_fact(s);
    let mut unknown = None;
    let mut methods = BTreeSet::new();
    for d in &q.disjuncts {
        if d.atoms.iter().any(|a| s.is_visible(&a.relation)) {
            methods.insert("visible-atom".to_string());
            continue;
        }
        let v = owq(&target, c, &canonical_db(d), b)?;
        methods.insert(v.method.clone());
        match v.value {
            Answer::True => {}
            Answer::False => {
                let cert = v
                    .witness_instance()
                    .map(|w| Certificate::Witness(w.clone()))
                    .or(v.certificate);
                return Ok(Verdict::new(Answer::False, cert, &v.method));
            }
            Answer::Unknown(r) => unknown = Some((r, v.method)),
        }
    }
    if let Some((r, m)) = unknown {
        return Ok(Verdict::unknown(r, &m));
    }
    let method = methods.into_iter().join("+");
    let method = if method.is_empty() { "empty-union".into() } else { method };
    Ok(Verdict::exact(true, &method))
}

/// Per-tuple answers of a query with free variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TupleAnswers {
    /// Tuples with a `True` verdict.
    pub tuples: BTreeSet<Tuple>,
    pub verdicts: BTreeMap<Tuple, Verdict>,
}

fn per_tuple<F>(q: &UnionQuery, s: &Schema, v: &Instance, decide: F) -> Result<TupleAnswers>
where
    F: Fn(&UnionQuery) -> Result<Verdict>,
{
    let dom: Vec<Value> = v.visible_part(s).active_domain().into_iter().collect();
    let mut out = TupleAnswers {
        tuples: BTreeSet::new(),
        verdicts: BTreeMap::new(),
    };
    let n = q.free.len();
    let tuples: Vec<Tuple> = if n == 0 {
        vec![Vec::new()]
    } else {
        (0..n).map(|_| dom.iter().cloned()).multi_cartesian_product().collect()
    };
    for t in tuples {
        let verdict = decide(&q.substitute(&t))?;
        if verdict.is_true() {
            out.tuples.insert(t.clone());
        }
        out.verdicts.insert(t, verdict);
    }
    Ok(out)
}

/// [`pqi`] for each tuple over the active domain of `v`.
pub fn pqi_tuples(q: &UnionQuery, c: &ConstraintSet, s: &Schema, v: &Instance, b: ChaseBudget) -> Result<TupleAnswers> {
    per_tuple(q, s, v, |qt| pqi(qt, c, s, v, b))
}

/// [`nqi`] for each tuple over the active domain of `v`.
pub fn nqi_tuples(q: &UnionQuery, c: &ConstraintSet, s: &Schema, v: &Instance, b: ChaseBudget) -> Result<TupleAnswers> {
    per_tuple(q, s, v, |qt| nqi(qt, c, s, v, b))
}

/// Problem a witness refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WitnessKind {
    /// Refutes PQI: `q` false.
    Pqi,
    /// Refutes NQI: `q` true.
    Nqi,
    /// Proves realizability.
    Realizable,
    /// Refutes OWQ: contains `v`, `q` false.
    Owq,
}

/// Checks that `w` satisfies `c`, has visible part `v` (contains `v` for OWQ) and gives
/// `q` the polarity the problem requires.
pub fn validate_witness(
    kind: WitnessKind,
    q: &UnionQuery,
    c: &ConstraintSet,
    s: &Schema,
    v: &Instance,
    w: &Instance,
) -> std::result::Result<(), String> {
    if let Some(viol) = crate::eval::first_violation(c, w) {
        return Err(format!("dependency #{} is violated", viol.dependency));
    }
    if kind == WitnessKind::Owq {
        if !v.is_subset(w) {
            return Err("the witness does not contain the instance".into());
        }
    } else if w.visible_part(s) != v.visible_part(s) {
        return Err("the visible part differs".into());
    }
    match kind {
        WitnessKind::Pqi | WitnessKind::Owq if eval_ucq(q, w) => Err("the query holds".into()),
        WitnessKind::Nqi if !eval_ucq(q, w) => Err("the query fails".into()),
        _ => Ok(()),
    }
}
