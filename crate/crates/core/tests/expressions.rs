//! Expression language against an independent tree type and interpreter.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trudinger::expr::{parse_expression, ParseError};

/// Reference tree, printed fully parenthesized and evaluated here.
#[derive(Clone, Debug)]
enum Ref {
    Num(f64),
    Var(usize),
    Time,
    Neg(Box<Ref>),
    Bin(char, Box<Ref>, Box<Ref>),
    Call(&'static str, Vec<Ref>),
}

impl Ref {
    fn render(&self) -> String {
        match self {
            Ref::Num(v) => format!("{v:?}"),
            Ref::Var(i) => format!("x{}", i + 1),
            Ref::Time => "t".into(),
            Ref::Neg(e) => format!("(-{})", e.render()),
            Ref::Bin(op, l, r) => format!("({}{op}{})", l.render(), r.render()),
            Ref::Call(f, args) => format!("{f}({})", args.iter().map(Ref::render).collect::<Vec<_>>().join(",")),
        }
    }

    fn eval(&self, x: &[f64], t: f64) -> f64 {
        match self {
            Ref::Num(v) => *v,
            Ref::Var(i) => x[*i],
            Ref::Time => t,
            Ref::Neg(e) => -e.eval(x, t),
            Ref::Bin(op, l, r) => {
                let (a, b) = (l.eval(x, t), r.eval(x, t));
                match op {
                    '+' => a + b,
                    '-' => a - b,
                    '*' => a * b,
                    '/' => a / b,
                    _ => a.powf(b),
                }
            }
            Ref::Call(f, args) => {
                let a = args[0].eval(x, t);
                match *f {
                    "sin" => a.sin(),
                    "cos" => a.cos(),
                    "exp" => a.exp(),
                    "log" => a.ln(),
                    "sqrt" => a.sqrt(),
                    "abs" => a.abs(),
                    "min" => a.min(args[1].eval(x, t)),
                    _ => a.max(args[1].eval(x, t)),
                }
            }
        }
    }
}

fn random_tree(rng: &mut ChaCha8Rng, depth: u32) -> Ref {
    if depth == 0 || rng.gen_bool(0.25) {
        return match rng.gen_range(0..3) {
            0 => Ref::Num((rng.gen_range(0.0..5.0f64) * 1000.0).round() / 1000.0),
            1 => Ref::Var(rng.gen_range(0..3)),
            _ => Ref::Time,
        };
    }
    let sub = |rng: &mut ChaCha8Rng| Box::new(random_tree(rng, depth - 1));
    match rng.gen_range(0..4) {
        0 => Ref::Neg(sub(rng)),
        1 => {
            let op = ['+', '-', '*', '/', '^'][rng.gen_range(0..5)];
            Ref::Bin(op, sub(rng), sub(rng))
        }
        _ => {
            let f = ["sin", "cos", "exp", "log", "sqrt", "abs", "min", "max"][rng.gen_range(0..8)];
            let arity = if f == "min" || f == "max" { 2 } else { 1 };
            Ref::Call(f, (0..arity).map(|_| random_tree(rng, depth - 1)).collect())
        }
    }
}

fn close(a: f64, b: f64) -> bool {
    if a.is_nan() || b.is_nan() {
        return a.is_nan() && b.is_nan();
    }
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300)
}

#[test]
fn matches_reference_interpreter_on_random_trees() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let tree = random_tree(&mut rng, 5);
        let src = tree.render();
        let parsed = parse_expression(&src).unwrap_or_else(|e| panic!("{src}: {e}"));
        for _ in 0..4 {
            let x = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let t = rng.gen_range(0.0..1.0);
            let (want, got) = (tree.eval(&x, t), parsed.eval(&x, t));
            assert!(close(want, got), "{src} at {x:?}, {t}: {want} vs {got}");
        }
    }
}

#[test]
fn printed_trees_reparse_identically() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let src = random_tree(&mut rng, 5).render();
        let first = parse_expression(&src).unwrap();
        let printed = first.tree().to_string();
        let second = parse_expression(&printed).unwrap();
        assert_eq!(first.tree(), second.tree(), "{src} printed as {printed}");
    }
}

#[test]
fn grammar_examples() {
    let e = parse_expression("2+sin(x1)*exp(-t)").unwrap();
    assert!((e.eval(&[std::f64::consts::FRAC_PI_2], 0.0) - 3.0).abs() < 1e-15);
    assert_eq!(parse_expression("1").unwrap().eval(&[], 0.0), 1.0);
    assert_eq!(parse_expression("2^3^2").unwrap().eval(&[], 0.0), 512.0);
    // Unary minus binds looser than ^ and tighter than *.
    assert_eq!(parse_expression("-2^2").unwrap().eval(&[], 0.0), -4.0);
    assert_eq!(parse_expression("2*-3").unwrap().eval(&[], 0.0), -6.0);
    assert_eq!(parse_expression("7-2-1").unwrap().eval(&[], 0.0), 4.0);
}

#[test]
fn errors_report_byte_offsets() {
    match parse_expression("1 + foo(2)") {
        Err(ParseError::UnknownIdentifier { offset, name }) => {
            assert_eq!(offset, 4);
            assert_eq!(name, "foo");
        }
        other => panic!("unexpected {other:?}"),
    }
    assert_eq!(parse_expression("(1 + 2").unwrap_err().offset(), 6);
    assert!(parse_expression("").is_err());
}

proptest! {
    #[test]
    fn numbers_round_trip(v in 0.0f64..1e6) {
        let e = parse_expression(&format!("{v:?}")).unwrap();
        prop_assert_eq!(e.eval(&[], 0.0), v);
    }

    #[test]
    fn addition_and_multiplication_commute(a in 0.0f64..10.0, b in 0.0f64..10.0, x in -3.0f64..3.0) {
        let lhs = parse_expression(&format!("{a:?}*x1 + {b:?}")).unwrap().eval(&[x], 0.0);
        let rhs = parse_expression(&format!("{b:?} + x1*{a:?}")).unwrap().eval(&[x], 0.0);
        prop_assert_eq!(lhs, rhs);
    }
}
