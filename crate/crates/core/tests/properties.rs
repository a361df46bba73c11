mod common;

#[test]
fn scale_equivariance() {
    common::prop_scale().unwrap();
}

#[test]
fn translation_equivariance() {
    common::prop_translation().unwrap();
}

#[test]
fn psi_is_monotone_in_obstacle_size() {
    common::prop_psi_monotone().unwrap();
}

#[test]
fn central_differences_converge_at_second_order() {
    common::prop_grid_convergence().unwrap();
}

#[test]
fn archive_is_mutually_nondominated() {
    common::prop_archive_nondominated().unwrap();
}

#[test]
fn subtask_boxes_nest() {
    common::prop_box_nesting().unwrap();
}

#[test]
fn six_bar_fixtures_load() {
    assert!(common::six_bar_fixtures().len() >= 3);
}
