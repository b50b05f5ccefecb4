//! Syntactic constraint classes.

use std::collections::{BTreeMap, BTreeSet};

use crate::model::{Atom, ConstraintClass, ConstraintSet, Dependency, Name, Schema, Term, Tgd};

/// Computes the class tags of `c` over `s`.
///
/// `ID`, `LinearTGD` and `FGTGD` describe sets made only of TGDs; `ConnectedBody` covers
/// TGD and EGD bodies alike.
pub fn classify(c: &ConstraintSet, s: &Schema) -> BTreeSet<ConstraintClass> {
    let mut tags = BTreeSet::new();
    let tgds: Vec<&Tgd> = c.tgds().collect();
    let only_tgds = tgds.len() == c.deps.len();
    if only_tgds {
        if tgds.iter().all(|t| is_id(t)) {
            tags.insert(ConstraintClass::ID);
        }
        if tgds.iter().all(|t| t.is_linear()) {
            tags.insert(ConstraintClass::LinearTGD);
        }
        if tgds.iter().all(|t| is_frontier_guarded(t)) {
            tags.insert(ConstraintClass::FGTGD);
        }
    }
    if c.deps.iter().all(|d| body_connected(d.body())) {
        tags.insert(ConstraintClass::ConnectedBody);
    }
    if tgds.iter().any(|t| t.is_disjunctive()) {
        tags.insert(ConstraintClass::DisjunctiveHead);
    }
    if !c.constants().is_empty() {
        tags.insert(ConstraintClass::HasConstants);
    }
    if c.has_egd() {
        tags.insert(ConstraintClass::HasEGD);
    }
    if is_cq_view_scenario(c, s) {
        tags.insert(ConstraintClass::CQViewScenario);
    }
    tags
}

/// Linear, single head atom, no constants, no variable repeated within an atom.
pub fn is_id(t: &Tgd) -> bool {
    t.is_linear()
        && t.heads.len() == 1
        && t.heads[0].atoms.len() == 1
        && t.body
            .iter()
            .chain(t.heads[0].atoms.iter())
            .all(|a| a.constants().next().is_none() && !a.has_repeated_var())
}

/// Linear, non-disjunctive, constant-free and with a body atom without repeated
/// variables. Heads may have several atoms. Witnesses for such sets collapse onto the
/// known values, so negative implication can be decided over them directly.
pub fn is_id_like(t: &Tgd) -> bool {
    t.is_linear()
        && t.heads.len() == 1
        && !t.body[0].has_repeated_var()
        && t.body
            .iter()
            .chain(t.heads[0].atoms.iter())
            .all(|a| a.constants().next().is_none())
}

/// Some body atom contains every frontier variable.
pub fn is_frontier_guarded(t: &Tgd) -> bool {
    let fr = t.frontier();
    t.body.iter().any(|a| {
        let vs: BTreeSet<&Name> = a.vars().collect();
        fr.iter().all(|v| vs.contains(v))
    })
}

/// The atoms of `body` form one component when atoms sharing a variable are adjacent.
pub fn body_connected(body: &[Atom]) -> bool {
    if body.len() <= 1 {
        return true;
    }
    let mut seen = vec![false; body.len()];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        let vi: BTreeSet<&Name> = body[i].vars().collect();
        for (j, a) in body.iter().enumerate() {
            if !seen[j] && a.vars().any(|v| vi.contains(v)) {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen.into_iter().all(|b| b)
}

/// Each visible relation `R` has exactly the pair `R(x) -> exists y. phi_R(x, y)` and
/// `phi_R(x, y) -> R(x)` with `phi_R` over hidden relations, and nothing else occurs.
pub fn is_cq_view_scenario(c: &ConstraintSet, s: &Schema) -> bool {
    let mut forward: BTreeMap<Name, &Tgd> = BTreeMap::new();
    let mut backward: BTreeMap<Name, &Tgd> = BTreeMap::new();
    for d in &c.deps {
        let Dependency::Tgd(t) = d else {
            return false;
        };
        if t.heads.len() != 1 {
            return false;
        }
        let head = &t.heads[0];
        let plain = |a: &Atom| a.constants().next().is_none() && !a.has_repeated_var();
        if t.body.len() == 1
            && s.is_visible(&t.body[0].relation)
            && plain(&t.body[0])
            && head.atoms.iter().all(|a| s.is_hidden(&a.relation))
            && !head.atoms.is_empty()
        {
            if forward.insert(t.body[0].relation.clone(), t).is_some() {
                return false;
            }
        } else if head.atoms.len() == 1
            && head.exists.is_empty()
            && s.is_visible(&head.atoms[0].relation)
            && plain(&head.atoms[0])
            && t.body.iter().all(|a| s.is_hidden(&a.relation))
        {
            if backward
                .insert(head.atoms[0].relation.clone(), t)
                .is_some()
            {
                return false;
            }
        } else {
            return false;
        }
    }
    let visible: BTreeSet<Name> = s.visible_relations().map(|d| d.name.clone()).collect();
    let fk: BTreeSet<Name> = forward.keys().cloned().collect();
    let bk: BTreeSet<Name> = backward.keys().cloned().collect();
    if fk != visible || bk != visible {
        return false;
    }
    visible.iter().all(|r| same_view(forward[r], backward[r]))
}

fn same_view(fwd: &Tgd, bwd: &Tgd) -> bool {
    let xs = &fwd.body[0].args;
    let ys = &bwd.heads[0].atoms[0].args;
    let mut map: BTreeMap<Name, Name> = BTreeMap::new();
    for (x, y) in ys.iter().zip(xs) {
        if let (Term::Var(y), Term::Var(x)) = (y, x) {
            map.insert(y.clone(), x.clone());
        }
    }
    let target: BTreeSet<&Atom> = fwd.heads[0].atoms.iter().collect();
    if target.len() != bwd.body.len() {
        return false;
    }
    extend_iso(&bwd.body, 0, &mut map, &target)
}

fn extend_iso(
    atoms: &[Atom],
    i: usize,
    map: &mut BTreeMap<Name, Name>,
    target: &BTreeSet<&Atom>,
) -> bool {
    if i == atoms.len() {
        let img: BTreeSet<Atom> = atoms
            .iter()
            .map(|a| a.rename(&|v| Term::Var(map[v].clone())))
            .collect();
        let vals: BTreeSet<&Name> = map.values().collect();
        return vals.len() == map.len() && img.iter().collect::<BTreeSet<_>>() == *target;
    }
    let a = &atoms[i];
    for t in target.iter().filter(|t| t.relation == a.relation) {
        let saved = map.clone();
        let mut ok = true;
        for (x, y) in a.args.iter().zip(&t.args) {
            match (x, y) {
                (Term::Var(x), Term::Var(y)) => match map.get(x) {
                    Some(z) if z != y => {
                        ok = false;
                        break;
                    }
                    Some(_) => {}
                    None => {
                        map.insert(x.clone(), y.clone());
                    }
                },
                (Term::Const(a), Term::Const(b)) if a == b => {}
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if ok && extend_iso(atoms, i + 1, map, target) {
            return true;
        }
        *map = saved;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ConstraintClass::*, HeadDisjunct};

    fn a(r: &str, args: &[&str]) -> Atom {
        Atom::parse_args(r, args)
    }

    #[test]
    fn inclusion_dependency_tags() {
        let c = ConstraintSet::new(vec![Tgd::simple(
            vec![a("F1", &["x"])],
            vec![a("U", &["x", "y"])],
        )
        .into()]);
        let s = Schema::new().visible("F1", 1).hidden("U", 2);
        let tags = classify(&c, &s);
        assert_eq!(
            tags,
            [ID, LinearTGD, FGTGD, ConnectedBody].into_iter().collect()
        );
    }

    #[test]
    fn repeated_variable_is_not_id() {
        let c = ConstraintSet::new(vec![Tgd::simple(vec![a("R", &["x", "x"])], vec![a("T", &[])]).into()]);
        let s = Schema::new().hidden("R", 2).visible("T", 0);
        let tags = classify(&c, &s);
        assert!(!tags.contains(&ID));
        assert!(tags.contains(&LinearTGD) && tags.contains(&FGTGD) && tags.contains(&ConnectedBody));
    }

    #[test]
    fn zero_ary_conjunct_disconnects() {
        let c = ConstraintSet::new(vec![Tgd::simple(
            vec![a("U", &["x", "y"]), a("Good", &[])],
            vec![a("Error", &[])],
        )
        .into()]);
        let s = Schema::new().hidden("U", 2).hidden("Good", 0).visible("Error", 0);
        let tags = classify(&c, &s);
        assert!(tags.contains(&FGTGD));
        assert!(!tags.contains(&ConnectedBody));
        assert!(!tags.contains(&LinearTGD));
    }

    #[test]
    fn disjunction_and_constants() {
        let c = ConstraintSet::new(vec![Tgd::new(
            vec![a("A", &["x"])],
            vec![
                HeadDisjunct::new(&[], vec![a("B", &["x"])]),
                HeadDisjunct::new(&[], vec![a("C", &["x", "K"])]),
            ],
        )
        .into()]);
        let tags = classify(&c, &Schema::new());
        assert!(tags.contains(&DisjunctiveHead));
        assert!(tags.contains(&HasConstants));
        assert!(!tags.contains(&ID));
    }

    #[test]
    fn cq_view_pattern() {
        let s = Schema::new().visible("V", 1).hidden("R", 2).hidden("S", 1);
        let c = ConstraintSet::new(vec![
            Tgd::simple(vec![a("V", &["x"])], vec![a("R", &["x", "y"]), a("S", &["y"])]).into(),
            Tgd::simple(vec![a("R", &["u", "w"]), a("S", &["w"])], vec![a("V", &["u"])]).into(),
        ]);
        assert!(classify(&c, &s).contains(&CQViewScenario));
        let c2 = ConstraintSet::new(vec![
            Tgd::simple(vec![a("V", &["x"])], vec![a("R", &["x", "y"]), a("S", &["y"])]).into(),
            Tgd::simple(vec![a("R", &["u", "w"])], vec![a("V", &["u"])]).into(),
        ]);
        assert!(!classify(&c2, &s).contains(&CQViewScenario));
    }
}
