//! Disclosure analysis for relational schemas split into visible and hidden relations.
//!
//! Given constraints (TGDs and EGDs), a Boolean UCQ and a visible instance, the crate
//! decides whether every completion of the visible instance makes the query true
//! (positive implication), false (negative implication), whether any completion exists
//! at all (realizability), and whether some visible instance exhibits such disclosure.

pub mod chase;
pub mod classify;
pub mod deciders;
pub mod error;
pub mod eval;
pub mod facttype;
pub mod gen;
pub mod gfp;
pub mod hom;
pub mod model;
pub mod normalize;
pub mod oracle;
pub mod reductions;
pub mod textio;

pub use classify::classify;
pub use error::{Error, Result};
pub use eval::{
    active_domain, canonical_db, canonical_query, critical_instance, eval_ucq, eval_ucq_tuples,
    satisfies,
};
pub use hom::find_homomorphisms;
pub use model::*;
pub use normalize::normalize_single_head;
pub use textio::{emit_gnfo, parse, serialize, ImplicationKind, ProblemFile};
pub use chase::{
    chase_vis_critical, classical_chase, visible_chase, ChaseBudget, ChaseNode, ChaseTree,
    NodeStatus,
};
pub use facttype::{decide_pqi_critical_linear, fact_type_closure, FactType, TypeInfo, TypeSlot};
pub use gfp::{build_gfp_program, enforce_adom_controllability, eval_gfp, eval_gfp_observed, nqi_via_gfp, DatalogRule, EqualityPattern, GFPProgram};
pub use oracle::{enumerate_extensions, oracle_nqi, oracle_nqi_adom, oracle_owq, oracle_pqi, oracle_realizable, DomainBound, Exactness, OracleAnswer};
pub use deciders::{exists_nqi, exists_pqi, nqi, nqi_tuples, owq, pqi, pqi_tuples, realizable, validate_witness, Answer, Certificate, TupleAnswers, Verdict, WitnessKind};
pub use reductions::{disj_to_constants, exists_nqi_to_owq, nqi_to_realizability, owq_to_exists_pqi, owq_to_pqi, pqi_to_nqi, realizability_to_nqi, ucq_to_cq, ProblemInstance, ProblemKind};
