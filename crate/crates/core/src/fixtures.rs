//! Built-in example frames.

use crate::frame::{Frame, Tolerance};

pub const FIXTURE_NAMES: [&str; 4] = ["r2-weak", "canonical-r2", "r3-example", "r4-example"];

fn build(rows: &[&[f64]], tol: Tolerance) -> Frame {
    Frame::with_tolerance(rows.iter().map(|r| r.to_vec()).collect(), tol).expect("fixture is valid")
}

pub const R2_WEAK: [[f64; 2]; 2] = [[1.0, 1.0], [1.0, -1.0]];

pub const CANONICAL_R2: [[f64; 2]; 2] = [[1.0, 0.0], [0.0, 1.0]];

pub const R3_EXAMPLE: [[f64; 3]; 4] = [
    [1.0, 1.0, 1.0],
    [-1.0, 1.0, 1.0],
    [1.0, -1.0, 1.0],
    [1.0, 1.0, -1.0],
];

pub const R4_EXAMPLE: [[f64; 4]; 6] = [
    [1.0, 1.0, 1.0, -1.0],
    [-1.0, 1.0, 1.0, 1.0],
    [1.0, -1.0, 1.0, 1.0],
    [1.0, 1.0, -1.0, -1.0],
    [1.0, -1.0, 1.0, -1.0],
    [1.0, -1.0, -1.0, 1.0],
];

/// `{(1, 1), (1, -1)}`.
pub fn r2_weak() -> Frame {
    r2_weak_with(Tolerance::default())
}

pub fn r2_weak_with(tol: Tolerance) -> Frame {
    build(&[&R2_WEAK[0], &R2_WEAK[1]], tol)
}

/// `{e_1, e_2}`.
pub fn canonical_r2() -> Frame {
    canonical_r2_with(Tolerance::default())
}

pub fn canonical_r2_with(tol: Tolerance) -> Frame {
    build(&[&CANONICAL_R2[0], &CANONICAL_R2[1]], tol)
}

/// Four `+-1` vectors in `R^3`, an equal-norm tight frame.
pub fn r3_example() -> Frame {
    r3_example_with(Tolerance::default())
}

pub fn r3_example_with(tol: Tolerance) -> Frame {
    let rows: Vec<&[f64]> = R3_EXAMPLE.iter().map(|r| r.as_slice()).collect();
    build(&rows, tol)
}

/// Six `+-1` vectors in `R^4`.
pub fn r4_example() -> Frame {
    r4_example_with(Tolerance::default())
}

pub fn r4_example_with(tol: Tolerance) -> Frame {
    let rows: Vec<&[f64]> = R4_EXAMPLE.iter().map(|r| r.as_slice()).collect();
    build(&rows, tol)
}

pub fn by_name(name: &str, tol: Tolerance) -> Option<Frame> {
    match name {
        "r2-weak" => Some(r2_weak_with(tol)),
        "canonical-r2" => Some(canonical_r2_with(tol)),
        "r3-example" => Some(r3_example_with(tol)),
        "r4-example" => Some(r4_example_with(tol)),
        _ => None,
    }
}
