//! Single-atom head normalisation.

use crate::error::{Error, Result};
use crate::model::{
    Atom, ConstraintSet, Dependency, HeadDisjunct, Name, Schema, Term, Tgd, Visibility,
};

/// Routes every multi-atom head through a fresh hidden relation whose arguments are the
/// head variables in order of first occurrence. Returns the new constraints and the
/// schema extended with the intermediate relations.
pub fn normalize_single_head(c: &ConstraintSet, s: &Schema) -> Result<(ConstraintSet, Schema)> {
    let mut schema = s.clone();
    let mut out = ConstraintSet::default();
    for d in &c.deps {
        let t = match d {
            Dependency::Tgd(t) => t,
            Dependency::Egd(_) => {
                out.deps.push(d.clone());
                continue;
            }
        };
        if t.heads.is_empty() {
            out.deps.push(d.clone());
            continue;
        }
        if t.heads.len() != 1 {
            return Err(Error::Unsupported(
                "normalisation applies to non-disjunctive TGDs; disjunctive heads are handled by chase branching".into(),
            ));
        }
        let head = &t.heads[0];
        if head.atoms.len() <= 1 {
            out.deps.push(d.clone());
            continue;
        }
        let mut vars: Vec<Name> = Vec::new();
        for v in head.atoms.iter().flat_map(|a| a.vars()) {
            if !vars.contains(v) {
                vars.push(v.clone());
            }
        }
        let aux = schema.fresh_name("_aux_h");
        schema.add(&aux, vars.len(), Visibility::Hidden)?;
        let aux_atom = Atom {
            relation: aux.clone(),
            args: vars.iter().map(|v| Term::Var(v.clone())).collect(),
        };
        out.deps.push(
            Tgd::new(
                t.body.clone(),
                vec![HeadDisjunct {
                    exists: head.exists.clone(),
                    atoms: vec![aux_atom.clone()],
                }],
            )
            .into(),
        );
        for a in &head.atoms {
            out.deps
                .push(Tgd::simple(vec![aux_atom.clone()], vec![a.clone()]).into());
        }
    }
    Ok((out, schema))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(r: &str, args: &[&str]) -> Atom {
        Atom::parse_args(r, args)
    }

    #[test]
    fn single_heads_unchanged() {
        let c = ConstraintSet::new(vec![Tgd::simple(vec![a("F1", &["x"])], vec![a("U", &["x", "y"])]).into()]);
        let s = Schema::new().visible("F1", 1).hidden("U", 2);
        let (n, s2) = normalize_single_head(&c, &s).unwrap();
        assert_eq!(n, c);
        assert_eq!(s2, s);
    }

    #[test]
    fn multi_atom_head_is_split() {
        let c = ConstraintSet::new(vec![Tgd::simple(
            vec![a("R", &["x"])],
            vec![a("S", &["x", "y"]), a("T", &["y"])],
        )
        .into()]);
        let s = Schema::new().visible("R", 1).hidden("S", 2).hidden("T", 1);
        let (n, s2) = normalize_single_head(&c, &s).unwrap();
        assert_eq!(n.deps.len(), 3);
        assert_eq!(s2.arity("_aux_h"), Some(2));
        let first = n.deps[0].as_tgd().unwrap();
        assert_eq!(first.heads[0].atoms, vec![a("_aux_h", &["x", "y"])]);
        assert_eq!(first.heads[0].exists, vec![crate::model::name("y")]);
        assert_eq!(n.deps[2].as_tgd().unwrap().heads[0].atoms, vec![a("T", &["y"])]);
    }

    #[test]
    fn disjunctive_heads_rejected() {
        let c = ConstraintSet::new(vec![Tgd::new(
            vec![a("A", &["x"])],
            vec![
                HeadDisjunct::new(&[], vec![a("B", &["x"])]),
                HeadDisjunct::new(&[], vec![a("C", &["x"])]),
            ],
        )
        .into()]);
        assert!(normalize_single_head(&c, &Schema::new()).is_err());
    }
}
