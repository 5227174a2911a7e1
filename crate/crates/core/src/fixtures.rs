//! The example systems shipped with the crate, in the text format accepted
//! by [`parse_system`].

use crate::system::{parse_system, VectorField};

pub const EXAMPLE1: &str = include_str!("../systems/example1.sys");
pub const VANDERPOL: &str = include_str!("../systems/vanderpol.sys");
pub const HOPF: &str = include_str!("../systems/hopf.sys");
pub const KRASOVSKII: &str = include_str!("../systems/krasovskii.sys");
pub const LINEAR: &str = include_str!("../systems/linear.sys");
pub const CIRCLE: &str = include_str!("../systems/circle.sys");

/// `(name, source)` for every fixture.
pub const ALL: [(&str, &str); 6] = [
    ("example1", EXAMPLE1),
    ("vanderpol", VANDERPOL),
    ("hopf", HOPF),
    ("krasovskii", KRASOVSKII),
    ("linear", LINEAR),
    ("circle", CIRCLE),
];

fn load(src: &str) -> VectorField {
    parse_system(src).expect("bundled fixture parses")
}

/// `ẋ1 = -x1 + 2x1²x2, ẋ2 = -x2`.
pub fn example1() -> VectorField {
    load(EXAMPLE1)
}

pub fn vanderpol() -> VectorField {
    load(VANDERPOL)
}

pub fn hopf() -> VectorField {
    load(HOPF)
}

pub fn krasovskii() -> VectorField {
    load(KRASOVSKII)
}

pub fn linear() -> VectorField {
    load(LINEAR)
}

pub fn circle() -> VectorField {
    load(CIRCLE)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_fixtures_parse_and_vanish_at_origin() {
        for (name, src) in ALL {
            let vf = parse_system(src).unwrap_or_else(|e| panic!("{name}: {e}"));
            let f0 = vf.eval(&[0.0, 0.0]).unwrap();
            assert!(f0.iter().all(|v| *v == 0.0), "{name}");
            assert!(vf.jacobian(&[0.0, 0.0]).is_ok(), "{name}");
        }
    }

    #[test]
    fn krasovskii_is_removable_at_origin() {
        let vf = krasovskii();
        let j = vf.jacobian(&[0.0, 0.0]).unwrap();
        assert_eq!(j.to_rows(), vec![vec![0.0, 1.0], vec![-1.0, 0.0]]);
    }

    #[test]
    fn circle_jacobian_at_origin() {
        let j = circle().jacobian(&[0.0, 0.0]).unwrap();
        assert_eq!(j.to_rows(), vec![vec![-0.1, -1.0], vec![1.0, -0.1]]);
    }
}
