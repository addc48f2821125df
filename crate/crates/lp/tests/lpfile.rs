use ats_lp::{read_lp, write_lp, ModelInstance, Sense};
use proptest::prelude::*;

fn small_model() -> ModelInstance {
    let mut m = ModelInstance::new("toy");
    let x = m.add_integer("x_0", 0.0, 10.0);
    let y = m.add_continuous("y.1", f64::NEG_INFINITY, 4.5);
    let z = m.add_continuous("z(2,3)", f64::NEG_INFINITY, f64::INFINITY);
    let w = m.add_continuous("w", 2.0, 2.0);
    m.add_cost(x, 3.0);
    m.add_cost(y, -0.1);
    m.add_cost(z, 1e-12);
    m.add_constraint("c1", [(x, 1.0), (y, -2.5)], Sense::Ge, -3.0);
    m.add_constraint("c2", [(z, 1e20), (w, 1.0)], Sense::Eq, 0.5);
    m.add_constraint("empty", [], Sense::Le, 7.0);
    m
}

#[test]
fn writes_documented_layout() {
    let text = write_lp(&small_model()).unwrap();
    let expected = "\\ Model: toy
Minimize
 obj: 3.0 x_0 - 0.1 y.1 + 1e-12 z(2,3)
Subject To
 c1: 1.0 x_0 - 2.5 y.1 >= -3.0
 c2: 1e20 z(2,3) + 1.0 w = 0.5
 empty: <= 7.0
Bounds
 0.0 <= x_0 <= 10.0
 -inf <= y.1 <= 4.5
 z(2,3) free
 w = 2.0
Generals
 x_0
End
";
    assert_eq!(text, expected);
}

#[test]
fn round_trip_is_exact() {
    let m = small_model();
    let back = read_lp(&write_lp(&m).unwrap()).unwrap();
    assert_eq!(back, m);
}

#[test]
fn reads_common_variations() {
    let text = "\\ a comment line
Maximize
 profit: 2 x + 3 y
Subject To
 c1: x + y <= 4
 -x + 2 y>=-2
Bounds
 x <= 3
 y >= -1
 -5 <= u <= 5
Binaries
 b
General
 x
End
";
    let m = read_lp(text).unwrap();
    let names: Vec<&str> = m.variables.iter().map(|v| v.name.as_str()).collect();
    assert_eq!(names, ["x", "y", "u", "b"]);
    assert_eq!(m.objective, vec![-2.0, -3.0, 0.0, 0.0]);
    assert_eq!(m.constraints.len(), 2);
    assert_eq!(m.constraints[1].name, "R1");
    assert_eq!(m.constraints[1].rhs, -2.0);
    assert_eq!(m.variables[0].upper, 3.0);
    assert!(m.variables[0].integer);
    assert_eq!(m.variables[1].lower, -1.0);
    assert_eq!((m.variables[3].lower, m.variables[3].upper, m.variables[3].integer), (0.0, 1.0, true));
}

#[test]
fn rejects_malformed_input() {
    assert!(read_lp("Minimize\n obj: x\nSubject To\n c: x >=\nEnd\n").is_err());
    assert!(read_lp("Minimize\n obj: x\nSubject To\n c: x >= 1\n").is_err());
    assert!(read_lp("Minimize\n obj: 2 3\nEnd\n").is_err());
    let mut bad = ModelInstance::new("bad");
    bad.add_continuous("1x", 0.0, 1.0);
    assert!(write_lp(&bad).is_err());
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e6..1e6f64,
        any::<f64>().prop_filter("finite", |x| x.is_finite()),
        Just(0.1),
        Just(-0.0),
    ]
}

prop_compose! {
    fn arb_model()(
        nv in 1usize..8,
        rows in proptest::collection::vec(
            (proptest::collection::vec((0usize..8, finite()), 0..6), 0u8..3, finite()), 0..6),
        bounds in proptest::collection::vec((finite(), 0.0..1e3f64, 0u8..4, any::<bool>()), 8),
        obj in proptest::collection::vec(finite(), 8),
    ) -> ModelInstance {
        let mut m = ModelInstance::new("prop");
        for j in 0..nv {
            let (lo, width, kind, integer) = bounds[j];
            let (l, u) = match kind {
                0 => (lo, lo + width),
                1 => (f64::NEG_INFINITY, lo),
                2 => (f64::NEG_INFINITY, f64::INFINITY),
                _ => (lo, f64::INFINITY),
            };
            let v = m.add_var(format!("v{j}"), l, u, integer);
            m.add_cost(v, if obj[j] == 0.0 { 0.0 } else { obj[j] });
        }
        for (k, (terms, sense, rhs)) in rows.into_iter().enumerate() {
            let sense = [Sense::Le, Sense::Ge, Sense::Eq][sense as usize];
            m.constraints.push(ats_lp::Constraint {
                name: format!("r{k}"),
                terms: terms.into_iter().map(|(j, c)| (ats_lp::VarId(j % nv), c)).collect(),
                sense,
                rhs,
            });
        }
        m
    }
}

proptest! {
    #[test]
    fn any_valid_model_round_trips(m in arb_model()) {
        let text = write_lp(&m).unwrap();
        let back = read_lp(&text).unwrap();
        prop_assert_eq!(back.variables.len(), m.variables.len());
        for (a, b) in back.variables.iter().zip(&m.variables) {
            prop_assert_eq!(&a.name, &b.name);
            prop_assert_eq!(a.lower.to_bits(), b.lower.to_bits());
            prop_assert_eq!(a.upper.to_bits(), b.upper.to_bits());
            prop_assert_eq!(a.integer, b.integer);
        }
        for (a, b) in back.objective.iter().zip(&m.objective) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
        prop_assert_eq!(back.constraints.len(), m.constraints.len());
        for (a, b) in back.constraints.iter().zip(&m.constraints) {
            prop_assert_eq!(&a.name, &b.name);
            prop_assert_eq!(a.sense, b.sense);
            prop_assert_eq!(a.rhs.to_bits(), b.rhs.to_bits());
            prop_assert_eq!(a.terms.len(), b.terms.len());
            for (s, t) in a.terms.iter().zip(&b.terms) {
                prop_assert_eq!(s.0, t.0);
                prop_assert_eq!(s.1.to_bits(), t.1.to_bits());
            }
        }
    }
}
