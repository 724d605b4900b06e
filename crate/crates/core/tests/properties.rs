mod props;

#[test]
fn reduce_is_idempotent() {
    props::reduce_is_idempotent().unwrap();
}

#[test]
fn reduce_preserves_weight() {
    props::reduce_preserves_weight().unwrap();
}

#[test]
fn space_and_time_derivatives_commute() {
    props::space_and_time_derivatives_commute().unwrap();
}

#[test]
fn total_derivatives_reduce_to_zero() {
    props::total_derivatives_reduce_to_zero().unwrap();
}

#[test]
fn functional_is_invariant_under_reduce() {
    props::functional_is_invariant_under_reduce().unwrap();
}

#[test]
fn total_derivatives_integrate_to_zero() {
    props::total_derivatives_integrate_to_zero().unwrap();
}

#[test]
fn text_round_trip() {
    props::text_round_trip().unwrap();
}

#[test]
fn squares_are_invariant_under_negation() {
    props::squares_are_invariant_under_negation().unwrap();
}

#[test]
fn second_order_family_identity() {
    props::second_order_family_identity().unwrap();
}

#[test]
fn canonical_forms_carry_the_alternating_sign() {
    props::canonical_forms_carry_the_alternating_sign().unwrap();
}
