mod common;

use common::*;

#[test]
fn planted_flags_are_recovered() {
    let c = planted_bisection();
    assert!(c.passed, "{}", c.detail);
}

#[test]
fn frame_pointer_flag_is_active_at_o1() {
    let c = frame_pointer_probe();
    assert!(c.passed, "{}", c.detail);
}
