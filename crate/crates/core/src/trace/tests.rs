use super::oracle::{all_schedules, oracle_representatives, Oracle};
use super::*;
use crate::objects::{counter_spec, Response, DEC, INC, READ};

fn rel() -> ConflictRelation {
    counter_spec().conflicts().clone()
}

fn tr(s: &[Op]) -> Trace<Op> {
    normalize(s, &rel())
}

#[test]
fn updates_commute_reads_do_not() {
    assert_eq!(tr(&[INC, DEC]), tr(&[DEC, INC]));
    assert_ne!(tr(&[READ, INC]), tr(&[INC, READ]));
    assert!(tr(&[]).is_empty());
    assert!(equivalent(&[INC, DEC], &[DEC, INC], &rel()));
    assert!(!equivalent(&[READ, INC], &[INC, READ], &rel()));
    assert!(equivalent(&[READ, INC, DEC], &[READ, INC, DEC], &rel()));
}

#[test]
fn length_two_equivalence_matches_swap_closure() {
    let mut oracle = Oracle::new(&rel());
    let pairs = all_schedules(&[READ, INC, DEC], 2);
    for s in pairs.iter().filter(|s| s.len() == 2) {
        for t in pairs.iter().filter(|s| s.len() == 2) {
            assert_eq!(
                equivalent(s, t, &rel()),
                oracle.equivalent(s, t),
                "{s:?} {t:?}"
            );
        }
    }
}

#[test]
fn canonical_form_is_least_representative() {
    for s in all_schedules(&[READ, INC, DEC], 5) {
        let t = tr(&s);
        let reps = oracle_representatives(&t, 8).unwrap();
        assert_eq!(reps.iter().next().unwrap().as_slice(), t.letters());
        assert!(reps.contains(&s));
        assert_eq!(tr(t.letters()), t);
        assert_eq!(t.len(), s.len());
    }
}

#[test]
fn concat_examples() {
    let e = Trace::empty(&rel());
    let t = tr(&[READ, INC]);
    assert_eq!(concat(&e, &t).unwrap(), t);
    assert_eq!(concat(&t, &e).unwrap(), t);
    assert_eq!(
        concat(&tr(&[INC]), &tr(&[DEC])).unwrap(),
        concat(&tr(&[DEC]), &tr(&[INC])).unwrap()
    );
    assert_ne!(
        concat(&tr(&[READ]), &tr(&[INC])).unwrap(),
        concat(&tr(&[INC]), &tr(&[READ])).unwrap()
    );
}

#[test]
fn concat_rejects_mixed_relations() {
    let other = ConflictRelation::empty();
    let a = tr(&[INC]);
    let b = normalize(&[INC], &other);
    assert_eq!(concat(&a, &b), Err(TraceError::RelationMismatch));
    assert_eq!(
        glb(&[a.clone(), b.clone()]),
        Err(TraceError::RelationMismatch)
    );
    assert_eq!(lub(&[a, b]), Err(TraceError::RelationMismatch));
}

#[test]
fn ops_counts() {
    assert!(tr(&[]).ops().is_empty());
    let m = tr(&[INC, DEC, INC]).ops();
    assert_eq!(m.get(&INC), Some(&2));
    assert_eq!(m.get(&DEC), Some(&1));
    assert_eq!(m.get(&READ), None);
}

#[test]
fn prefix_examples() {
    let u = tr(&[DEC, INC]);
    assert!(is_prefix(&tr(&[]), &u));
    assert!(is_prefix(&tr(&[INC]), &u));
    assert!(!is_prefix(&tr(&[READ]), &tr(&[INC, READ])));
    assert!(is_prefix(&u, &u));
}

#[test]
fn residual_examples() {
    let t = tr(&[READ, INC, DEC]);
    assert_eq!(residual(&t, &t).unwrap(), tr(&[]));
    assert_eq!(residual(&tr(&[INC]), &tr(&[DEC, INC])).unwrap(), tr(&[DEC]));
    assert_eq!(
        residual(&tr(&[READ]), &tr(&[INC])),
        Err(TraceError::NotAPrefix)
    );
}

#[test]
fn compatible_examples() {
    let t = tr(&[READ, INC]);
    assert!(compatible(std::slice::from_ref(&t)));
    assert!(!compatible(&[tr(&[READ, INC]), tr(&[INC, READ])]));
    assert!(compatible(&[tr(&[INC]), tr(&[DEC])]));
    assert!(compatible::<Op>(&[]));
}

#[test]
fn glb_examples() {
    let t = tr(&[INC, READ]);
    assert_eq!(glb(&[tr(&[]), t.clone()]).unwrap(), tr(&[]));
    assert_eq!(
        glb(&[tr(&[INC, READ]), tr(&[INC, DEC])]).unwrap(),
        tr(&[INC])
    );
    assert_eq!(glb(&[tr(&[READ, INC]), tr(&[INC, READ])]).unwrap(), tr(&[]));
    assert_eq!(glb::<Op>(&[]), Err(TraceError::EmptySet));
}

#[test]
fn lub_examples() {
    let t = tr(&[READ, INC]);
    assert_eq!(lub(std::slice::from_ref(&t)).unwrap(), t);
    assert_eq!(lub(&[tr(&[INC]), tr(&[DEC])]).unwrap(), tr(&[INC, DEC]));
    assert_eq!(lub(&[tr(&[INC]), tr(&[DEC])]).unwrap(), tr(&[DEC, INC]));
    assert_eq!(
        lub(&[tr(&[READ, INC]), tr(&[INC, READ])]),
        Err(TraceError::Incompatible)
    );
}

#[test]
fn oracle_examples_freeze() {
    let reps = oracle_representatives(&tr(&[INC, DEC]), 8).unwrap();
    assert_eq!(
        reps.into_iter().collect::<Vec<_>>(),
        vec![vec![DEC, INC], vec![INC, DEC]]
    );
    let reps = oracle_representatives(&tr(&[READ, INC]), 8).unwrap();
    assert_eq!(reps.into_iter().collect::<Vec<_>>(), vec![vec![READ, INC]]);
    let reps = oracle_representatives(&tr(&[]), 8).unwrap();
    assert_eq!(reps.into_iter().collect::<Vec<_>>(), vec![Vec::<Op>::new()]);
    assert!(matches!(
        oracle_representatives(&tr(&[INC; 9]), 8),
        Err(TraceError::OracleBoundExceeded { len: 9, bound: 8 })
    ));
}

#[test]
fn sigma_star_counter() {
    let spec = counter_spec();
    assert!(sigma_star(&tr(&[]), spec.initial(), &spec)
        .unwrap()
        .is_empty());
    let out = sigma_star(&tr(&[INC, DEC, READ]), spec.initial(), &spec).unwrap();
    let responses: Vec<_> = out.iter().map(|(r, _)| r.clone()).collect();
    assert_eq!(
        responses,
        vec![Response::Ack, Response::Ack, Response::Int(0)]
    );
    assert_eq!(out.last().unwrap().1, crate::objects::State::Int(0));
}

#[test]
fn ret_star_worked_example() {
    let spec = counter_spec();
    let t = tr(&[INC, DEC, READ]);
    assert_eq!(
        ret_star(&OccurrenceRef::first(READ), &t, &spec).unwrap(),
        Response::Int(0)
    );
    let extended = tr(&[INC, DEC, READ, INC, INC, READ]);
    assert_eq!(
        ret_star(&OccurrenceRef::first(READ), &extended, &spec).unwrap(),
        Response::Int(0)
    );
    assert_eq!(
        ret_star(&OccurrenceRef::new(READ, 2), &extended, &spec).unwrap(),
        Response::Int(2)
    );
    assert_eq!(
        ret_star(&OccurrenceRef::first(INC), &tr(&[INC]), &spec).unwrap(),
        Response::Ack
    );
    assert!(matches!(
        ret_star(&OccurrenceRef::new(READ, 3), &extended, &spec),
        Err(TraceError::OccurrenceNotFound { index: 3, .. })
    ));
}

#[test]
fn sigma_star_is_representative_independent_for_updates() {
    let spec = counter_spec();
    let a = sigma_star_schedule(&[INC, DEC], spec.initial(), &spec).unwrap();
    let b = sigma_star_schedule(&[DEC, INC], spec.initial(), &spec).unwrap();
    assert_eq!(a[0].0, b[1].0);
    assert_eq!(a[1].0, b[0].0);
    assert_eq!(a[1].1, b[1].1);
}

#[test]
fn self_conflicting_letters_keep_their_order() {
    let ops = [Op("a"), Op("b")];
    let total = ConflictRelation::total(&ops);
    let t = normalize(&[Op("b"), Op("a"), Op("b")], &total);
    assert_eq!(t.letters(), &[Op("b"), Op("a"), Op("b")]);
    assert!(is_prefix(&normalize(&[Op("b")], &total), &t));
    assert!(!is_prefix(&normalize(&[Op("a")], &total), &t));
    let g = glb(&[t.clone(), normalize(&[Op("b"), Op("b")], &total)]).unwrap();
    assert_eq!(g.letters(), &[Op("b")]);
}

mod props {
    use super::*;
    use proptest::prelude::*;

    fn schedule(max: usize) -> impl Strategy<Value = Vec<Op>> {
        prop::collection::vec(prop::sample::select(vec![READ, INC, DEC]), 0..=max)
    }

    proptest! {
        #[test]
        fn concat_is_associative(a in schedule(4), b in schedule(4), c in schedule(4)) {
            let (a, b, c) = (tr(&a), tr(&b), tr(&c));
            let left = concat(&concat(&a, &b).unwrap(), &c).unwrap();
            let right = concat(&a, &concat(&b, &c).unwrap()).unwrap();
            prop_assert_eq!(left, right);
        }

        #[test]
        fn prefix_of_concatenation(a in schedule(6), b in schedule(6)) {
            let (a, b) = (tr(&a), tr(&b));
            let ab = concat(&a, &b).unwrap();
            prop_assert!(is_prefix(&a, &ab));
            prop_assert_eq!(residual(&a, &ab).unwrap(), b.clone());
            let mut counts = a.ops();
            for (l, k) in b.ops() {
                *counts.entry(l).or_insert(0) += k;
            }
            prop_assert_eq!(ab.ops(), counts);
        }

        #[test]
        fn bounds_are_built_from_members(a in schedule(6), b in schedule(6), c in schedule(6)) {
            let set = [tr(&a), tr(&b), tr(&c)];
            let g = glb(&set).unwrap();
            for x in &set {
                prop_assert!(is_prefix(&g, x));
                prop_assert!(multiset_le(&g.ops(), &x.ops()));
            }
            if let Ok(l) = lub(&set) {
                let mut union = Multiset::new();
                for x in &set {
                    prop_assert!(is_prefix(x, &l));
                    for (k, v) in x.ops() {
                        let e = union.entry(k).or_insert(0);
                        *e = (*e).max(v);
                    }
                }
                prop_assert!(multiset_le(&l.ops(), &union));
            }
        }

        #[test]
        fn lub_is_order_independent(a in schedule(5), b in schedule(5), c in schedule(5)) {
            let (a, b, c) = (tr(&a), tr(&b), tr(&c));
            let one = lub(&[a.clone(), b.clone(), c.clone()]);
            let two = lub(&[c, a, b]);
            prop_assert_eq!(one, two);
        }
    }
}
