#![allow(dead_code)]

use proxnewton::problems::*;
use proxnewton::Problem;

pub struct Fixture {
    pub problem: Problem,
    /// λ of an ℓ1 regularizer, if any.
    pub lambda: Option<f64>,
}

/// Small instances of every built-in problem, seeds pinned.
pub fn fixtures() -> Vec<Fixture> {
    vec![
        Fixture {
            problem: make_quadratic_singular(30, 10, 1).unwrap(),
            lambda: None,
        },
        Fixture {
            problem: make_lasso_degenerate(40, 80, 20, 0.1, 2).unwrap(),
            lambda: Some(0.1),
        },
        Fixture {
            problem: make_holder(20, 1.5, 3, None).unwrap(),
            lambda: None,
        },
        Fixture {
            problem: make_holder(20, 1.5, 3, Some(0.05)).unwrap(),
            lambda: Some(0.05),
        },
        Fixture {
            problem: make_box_ge(12, 4, true).unwrap(),
            lambda: None,
        },
        Fixture {
            problem: make_box_ge(12, 4, false).unwrap(),
            lambda: None,
        },
        Fixture {
            problem: make_nonmonotone_ge(10, 5.0, 5).unwrap(),
            lambda: None,
        },
    ]
}
