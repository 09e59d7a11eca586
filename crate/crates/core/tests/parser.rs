mod common;

use proptest::prelude::*;

use contlog::formula::build::*;
use contlog::formula::{Formula, Sort};
use contlog::numeric::rational::{int, rat};
use contlog::numeric::RatInterval;
use contlog::parser::{parse, print, ParseError};

#[test]
fn displacement_sentence() {
    let f = parse("sup v:B1 . d(U1(v), v)").unwrap();
    assert_eq!(f, sup("v", Sort::Ball(1), d(apply("U1", b1("v")), b1("v"))));
    assert_eq!(print(&f), "sup v:B1 . d(U1(v), v)");
}

#[test]
fn constant_min_has_point_range() {
    let f = parse("min(1/2, 1/2)").unwrap();
    assert_eq!(f.range().unwrap(), RatInterval::point(rat(1, 2)));
}

#[test]
fn printer_examples() {
    assert_eq!(print(&sup("v", Sort::Ball(1), d(b1("v"), b1("v")))), "sup v:B1 . d(v, v)");
    assert_eq!(print(&not(int(2), d(b1("v"), b1("w")))), "not[2](d(v, w))");
    let right = prod(q(1, 2), prod(q(1, 3), q(1, 5)));
    assert_eq!(print(&right), "1/2 * (1/3 * 1/5)");
    assert_eq!(parse(&print(&right)).unwrap(), right);
}

#[test]
fn inverse_and_word_sugar() {
    let f = parse("inf v:B1 . d(U1~(U1(v)), v)").unwrap();
    assert_eq!(f, inf("v", Sort::Ball(1), d(apply_inv("U1", apply("U1", b1("v"))), b1("v"))));
    let g = parse("sup v:B1 . d(w[2,-1](v), v)").unwrap();
    assert_eq!(g, sup("v", Sort::Ball(1), d(word(&[2, -1], b1("v")), b1("v"))));
}

#[test]
fn formula_file_with_comments() {
    let src = "# displacement of U1\n\nsup v:B1 .   # bound vector\n  d(U1(v), v)\n";
    assert_eq!(parse(src).unwrap(), parse("sup v:B1 . d(U1(v), v)").unwrap());
}

#[test]
fn free_identifiers_are_constants() {
    let f = parse("d(a1, a2)").unwrap();
    assert_eq!(f, d(cst("a1"), cst("a2")));
    assert!(f.is_closed());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn print_then_parse_is_identity(f in common::closed_formula(8, true)) {
        let text = print(&f);
        let back = parse(&text);
        prop_assert!(back.is_ok(), "{} failed: {:?}", text, back);
        let back = back.unwrap();
        prop_assert_eq!(&back, &f, "text {}", text);
        prop_assert_eq!(print(&back), text);
    }

    #[test]
    fn arbitrary_text_never_panics(s in "[a-z0-9():,.~*\\[\\]/ -]{0,40}") {
        let _ = parse(&s);
    }
}

fn generated_depth(f: &Formula) -> usize {
    1 + f.children_formulas().iter().map(|c| generated_depth(c)).max().unwrap_or(0)
}

trait Children {
    fn children_formulas(&self) -> Vec<&Formula>;
}

impl Children for Formula {
    fn children_formulas(&self) -> Vec<&Formula> {
        use Formula::*;
        match self {
            D(..) | ReIP(..) | ImIP(..) | Const(_) => vec![],
            Half(f) | Neg(_, f) | Sup(_, _, f) | Inf(_, _, f) => vec![f],
            TruncSub(a, b) | Min(a, b) | Max(a, b) | AbsDiff(a, b) | TruncAdd(_, a, b) | Prod(a, b) => vec![a, b],
        }
    }
}

#[test]
fn generator_reaches_deep_trees() {
    use proptest::strategy::ValueTree;
    use proptest::test_runner::TestRunner;
    let mut runner = TestRunner::deterministic();
    let strat = common::closed_formula(8, true);
    let deepest = (0..300).map(|_| generated_depth(&strat.new_tree(&mut runner).unwrap().current())).max().unwrap();
    assert!(deepest >= 8, "deepest generated tree has depth {deepest}");
}

const MALFORMED: [&str; 50] = [
    "",
    "   ",
    "# only a comment",
    "d(",
    "d(v)",
    "d(v, w",
    "d v, w)",
    "d(v,, w)",
    "d(, w)",
    "reip(v w)",
    "imip(v, w))",
    "sup",
    "sup v",
    "sup v:",
    "sup v:B1",
    "sup v:B1 .",
    "sup v B1 . d(v, v)",
    "sup v:C1 . d(v, v)",
    "sup v:B . d(v, v)",
    "sup v:Bx . d(v, v)",
    "inf :B1 . d(v, v)",
    "sup 1:B1 . d(v, v)",
    "1/",
    "1//2",
    "1/0",
    "min(1/2)",
    "min(1/2, 1/2, 1/2)",
    "max 1, 2",
    "adiff(1)",
    "half()",
    "half(1, 2)",
    "not(1)",
    "not[](1)",
    "not[1]1",
    "not[a](1)",
    "plus[1](1)",
    "plus(1, 2)",
    "1 -.",
    "-. 1",
    "1 - 1",
    "1 * ",
    "* 1",
    "1 1",
    "(1",
    "1)",
    "d(scale(1/2 v), v)",
    "d(scale(1/2, ), v)",
    "d(qu(), v)",
    "sup v:B1 . d(w[](v), v)",
    "sup v:B1 . d(U1~v, v)",
];

#[test]
fn malformed_corpus_is_rejected_with_syntax_errors() {
    let mut seen = std::collections::BTreeSet::new();
    for src in MALFORMED {
        assert!(seen.insert(src), "duplicate corpus entry {src:?}");
        match parse(src) {
            Err(ParseError::Syntax { line, col, .. }) => assert!(line >= 1 && col >= 1, "{src:?}"),
            other => panic!("{src:?} gave {other:?}"),
        }
    }
    assert_eq!(seen.len(), 50);
}

#[test]
fn type_errors_are_distinguished() {
    assert!(matches!(parse("d(add(v, w), v)"), Err(ParseError::Type(_))));
    assert!(matches!(parse("sup v:B1 . d(add(v, v), v)"), Err(ParseError::Type(_))));
    assert!(matches!(parse("sup v:B2 . d(U1(v), v)"), Err(ParseError::Type(_))));
    assert!(matches!(parse("not[1](sup v:B1 . d(v, 0:B1))"), Err(ParseError::Type(_))));
}
