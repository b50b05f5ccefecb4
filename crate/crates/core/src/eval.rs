//! Query evaluation, constraint satisfaction and the elementary instance constructions.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::ControlFlow;

use crate::error::Result;
use crate::hom::{Index, Pattern};
use crate::model::{
    name, Atom, ConjunctiveQuery, ConstraintSet, Dependency, Fact, Homomorphism, Instance,
    Schema, Term, Tuple, UnionQuery, Value,
};

/// Values occurring in some fact.
pub fn active_domain(i: &Instance) -> BTreeSet<Value> {
    i.active_domain()
}

/// Whether the Boolean reading of `q` holds in `i` (some disjunct maps into `i`).
pub fn eval_ucq(q: &UnionQuery, i: &Instance) -> bool {
    let idx = Index::new(i);
    eval_ucq_indexed(q, &idx)
}

pub(crate) fn eval_ucq_indexed(q: &UnionQuery, idx: &Index<'_>) -> bool {
    q.disjuncts
        .iter()
        .any(|d| Pattern::new(&d.atoms).exists(idx, Vec::new()))
}

/// Like [`eval_ucq`], but rejects queries that do not type-check against `s`.
pub fn eval_ucq_checked(q: &UnionQuery, s: &Schema, i: &Instance) -> Result<bool> {
    s.check_query(q)?;
    s.check_instance(i)?;
    Ok(eval_ucq(q, i))
}

/// Answer tuples: images of the free variables over all disjuncts.
pub fn eval_ucq_tuples(q: &UnionQuery, i: &Instance) -> BTreeSet<Tuple> {
    let idx = Index::new(i);
    let mut out = BTreeSet::new();
    for d in &q.disjuncts {
        let p = Pattern::with_vars(&d.atoms, &d.free);
        let n = d.free.len();
        p.search(&idx, Vec::new(), &mut |b| {
            out.insert(b[..n].iter().map(|v| v.clone().expect("bound")).collect());
            ControlFlow::Continue(())
        });
    }
    out
}

/// A violated trigger: dependency index and the body homomorphism.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub dependency: usize,
    pub trigger: Homomorphism,
}

/// Whether every dependency holds in `i`.
pub fn satisfies(c: &ConstraintSet, i: &Instance) -> bool {
    first_violation(c, i).is_none()
}

/// The first violated trigger in dependency order, if any.
pub fn first_violation(c: &ConstraintSet, i: &Instance) -> Option<Violation> {
    let idx = Index::new(i);
    for (di, d) in c.deps.iter().enumerate() {
        if let Some(h) = violated_trigger(d, &idx, &idx) {
            return Some(Violation {
                dependency: di,
                trigger: h,
            });
        }
    }
    None
}

/// Finds a body match into `body_target` whose conclusion fails in `head_target`.
/// Using a larger `head_target` yields "certainly violated" checks for partial instances.
pub(crate) fn violated_trigger(
    d: &Dependency,
    body_target: &Index<'_>,
    head_target: &Index<'_>,
) -> Option<Homomorphism> {
    let bp = Pattern::new(d.body());
    let mut found = None;
    match d {
        Dependency::Tgd(t) => {
            let heads: Vec<Pattern> = t
                .heads
                .iter()
                .map(|h| Pattern::with_vars(&h.atoms, bp.vars()))
                .collect();
            bp.search(body_target, Vec::new(), &mut |b| {
                let ok = heads.iter().any(|hp| hp.exists(head_target, b.to_vec()));
                if ok {
                    ControlFlow::Continue(())
                } else {
                    found = Some(bp.to_hom(b));
                    ControlFlow::Break(())
                }
            });
        }
        Dependency::Egd(e) => {
            let li = bp.var_index(&e.lhs).expect("lhs occurs in body");
            let rhs = match &e.rhs {
                Term::Var(v) => Err(bp.var_index(v).expect("rhs occurs in body")),
                Term::Const(c) => Ok(Value::Const(c.clone())),
            };
            bp.search(body_target, Vec::new(), &mut |b| {
                let l = b[li].as_ref().expect("bound");
                let equal = match &rhs {
                    Err(ri) => b[*ri].as_ref() == Some(l),
                    Ok(v) => v == l,
                };
                if equal {
                    ControlFlow::Continue(())
                } else {
                    found = Some(bp.to_hom(b));
                    ControlFlow::Break(())
                }
            });
        }
    }
    found
}

/// The canonical database of a Boolean CQ: variables become fresh nulls numbered from 1
/// in order of first occurrence.
pub fn canonical_db(q: &ConjunctiveQuery) -> Instance {
    canonical_db_from(q, 1).0
}

/// Canonical database with nulls numbered from `first`; also returns the variable map.
pub fn canonical_db_from(q: &ConjunctiveQuery, first: u64) -> (Instance, Homomorphism) {
    let mut h = Homomorphism::new();
    let mut next = first;
    for v in q.atoms.iter().flat_map(|a| a.vars()) {
        if !h.contains_key(v) {
            h.insert(v.clone(), Value::Null(next));
            next += 1;
        }
    }
    let inst = Instance::from_facts(q.atoms.iter().map(|a| a.ground(&h).expect("total")));
    (inst, h)
}

/// The canonical query of an instance: each value `v` becomes an existential variable.
pub fn canonical_query(i: &Instance) -> ConjunctiveQuery {
    let names: BTreeMap<Value, String> = i
        .active_domain()
        .into_iter()
        .enumerate()
        .map(|(k, v)| (v, format!("y{k}")))
        .collect();
    let atoms = i
        .facts()
        .map(|f| Atom {
            relation: f.relation.clone(),
            args: f
                .args
                .iter()
                .map(|v| Term::Var(name(&names[v])))
                .collect(),
        })
        .collect();
    ConjunctiveQuery::boolean(atoms)
}

/// The critical instance: every visible relation holds exactly the tuple `(a, ..., a)`.
pub fn critical_instance(s: &Schema, a: &Value) -> Instance {
    Instance::from_facts(
        s.visible_relations()
            .map(|d| Fact::new(&d.name, vec![a.clone(); d.arity])),
    )
}

/// Whether there is a bijective, constant-preserving renaming of nulls mapping `a` onto `b`.
pub fn isomorphic(a: &Instance, b: &Instance) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let an: Vec<u64> = a.nulls().into_iter().collect();
    let bn: Vec<u64> = b.nulls().into_iter().collect();
    if an.len() != bn.len() {
        return false;
    }
    let atoms = crate::hom::instance_atoms(a);
    let p = Pattern::new(&atoms);
    let idx = Index::new(b);
    p.search(&idx, Vec::new(), &mut |bind| {
        let img: BTreeSet<&Value> = bind.iter().flatten().collect();
        if img.len() == bind.len() && img.iter().all(|v| v.is_null()) {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Egd, HeadDisjunct, Tgd};

    fn a(r: &str, args: &[&str]) -> Atom {
        Atom::parse_args(r, args)
    }

    fn psb_constraints() -> ConstraintSet {
        ConstraintSet::new(vec![
            Tgd::simple(vec![a("F1", &["x"])], vec![a("U", &["x", "y"])]).into(),
            Tgd::simple(vec![a("U", &["x", "y"])], vec![a("F2", &["y"])]).into(),
        ])
    }

    #[test]
    fn active_domain_examples() {
        assert!(active_domain(&Instance::new()).is_empty());
        let i = Instance::from_facts([Fact::consts("F1", &["a"]), Fact::consts("F2", &["a"])]);
        assert_eq!(active_domain(&i).len(), 1);
        let i = Instance::from_facts([Fact::new(
            "R",
            vec![Value::constant("a"), Value::Null(1)],
        )]);
        assert_eq!(active_domain(&i).len(), 2);
    }

    #[test]
    fn eval_examples() {
        let q = UnionQuery::boolean(vec![a("U", &["x", "x"])]);
        assert!(eval_ucq(&q, &Instance::from_facts([Fact::consts("U", &["a", "a"])])));
        assert!(!eval_ucq(&q, &Instance::from_facts([Fact::consts("U", &["a", "b"])])));
        let q = UnionQuery::boolean(vec![a("App", &["Smith", "a", "Jones"])]);
        let i = Instance::from_facts([Fact::consts("App", &["Smith", "1", "Jones"])]);
        assert!(eval_ucq(&q, &i));
    }

    #[test]
    fn checked_eval_rejects_undeclared_relation() {
        let q = UnionQuery::boolean(vec![a("Nope", &["x"])]);
        let s = Schema::new().visible("U", 2);
        assert!(eval_ucq_checked(&q, &s, &Instance::new()).is_err());
    }

    #[test]
    fn answer_tuples() {
        let q = UnionQuery::single(ConjunctiveQuery::with_free(
            &["x"],
            vec![a("U", &["x", "y"])],
        ));
        let i = Instance::from_facts([Fact::consts("U", &["a", "b"]), Fact::consts("U", &["c", "c"])]);
        let t = eval_ucq_tuples(&q, &i);
        assert_eq!(t.len(), 2);
    }

    #[test]
    fn satisfaction_examples() {
        let c = ConstraintSet::new(vec![Tgd::simple(
            vec![a("F1", &["x"])],
            vec![a("U", &["x", "y"])],
        )
        .into()]);
        let ok = Instance::from_facts([Fact::consts("F1", &["a"]), Fact::consts("U", &["a", "a"])]);
        assert!(satisfies(&c, &ok));
        assert!(!satisfies(&c, &Instance::from_facts([Fact::consts("F1", &["a"])])));
        let c = ConstraintSet::new(vec![Tgd::simple(vec![a("R", &["x", "x"])], vec![a("T", &[])]).into()]);
        assert!(satisfies(&c, &Instance::from_facts([Fact::consts("R", &["a", "b"])])));
        assert!(!satisfies(&c, &Instance::from_facts([Fact::consts("R", &["a", "a"])])));
        assert!(satisfies(&psb_constraints(), &Instance::new()));
    }

    #[test]
    fn egd_and_false_heads() {
        let egd: Dependency = Egd {
            body: vec![a("R", &["x", "y"])],
            lhs: name("x"),
            rhs: Term::var("y"),
        }
        .into();
        let c = ConstraintSet::new(vec![egd]);
        assert!(!satisfies(&c, &Instance::from_facts([Fact::consts("R", &["a", "b"])])));
        assert!(satisfies(&c, &Instance::from_facts([Fact::consts("R", &["a", "a"])])));
        let bot = ConstraintSet::new(vec![Tgd::new(vec![a("R", &["x"])], vec![]).into()]);
        assert!(!satisfies(&bot, &Instance::from_facts([Fact::consts("R", &["a"])])));
        let disj = ConstraintSet::new(vec![Tgd::new(
            vec![a("A", &["x"])],
            vec![
                HeadDisjunct::new(&[], vec![a("B", &["x"])]),
                HeadDisjunct::new(&[], vec![a("C", &["x"])]),
            ],
        )
        .into()]);
        let i = Instance::from_facts([Fact::consts("A", &["a"]), Fact::consts("C", &["a"])]);
        assert!(satisfies(&disj, &i));
    }

    #[test]
    fn canonical_constructions() {
        let q = ConjunctiveQuery::boolean(vec![a("U", &["x", "x"])]);
        let db = canonical_db(&q);
        assert_eq!(db.facts().collect::<Vec<_>>(), vec![Fact::new("U", vec![Value::Null(1), Value::Null(1)])]);
        let q = ConjunctiveQuery::boolean(vec![a("App", &["Smith", "a", "Jones"])]);
        let db = canonical_db(&q);
        assert!(db.contains(&Fact::new(
            "App",
            vec![Value::constant("Smith"), Value::Null(1), Value::constant("Jones")]
        )));
        assert!(canonical_query(&Instance::new()).atoms.is_empty());
        let i = Instance::from_facts([Fact::consts("F1", &["a"]), Fact::consts("F2", &["a"])]);
        let back = canonical_db(&canonical_query(&i));
        assert!(isomorphic(&back, &canonical_db(&canonical_query(&back))));
        assert_eq!(back.len(), 2);
        assert_eq!(back.nulls().len(), 1);
    }

    #[test]
    fn critical_instance_examples() {
        let s = Schema::new().visible("F1", 1).visible("F2", 1).hidden("U", 2);
        let v = critical_instance(&s, &Value::constant("a"));
        assert_eq!(v, Instance::from_facts([Fact::consts("F1", &["a"]), Fact::consts("F2", &["a"])]));
        assert!(critical_instance(&Schema::new().hidden("H", 1), &Value::constant("a")).is_empty());
        let v = critical_instance(&Schema::new().visible("E", 2), &Value::constant("a"));
        assert!(v.contains(&Fact::consts("E", &["a", "a"])));
    }
}
