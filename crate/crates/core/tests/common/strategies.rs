use proptest::prelude::*;
use rust_decimal::Decimal;
use sachs_core::helpgen::{AnnotatedItem, Annotation, ExplanationCount};
use sachs_core::workbook::{BinaryOp, FormulaExpr, Function};
use sachs_core::{CellAddress, CellRange, ExplanationType};

pub fn addr() -> impl Strategy<Value = CellAddress> {
    (1u32..=40, 1u32..=200).prop_map(|(c, r)| CellAddress::new(c, r).unwrap())
}

pub fn number() -> impl Strategy<Value = Decimal> {
    (0i64..1_000_000, 0u32..4).prop_map(|(m, s)| Decimal::new(m, s))
}

pub fn formula() -> impl Strategy<Value = FormulaExpr> {
    let leaf = prop_oneof![number().prop_map(FormulaExpr::Number), addr().prop_map(FormulaExpr::Cell)];
    leaf.prop_recursive(5, 48, 4, |inner| {
        let range = (addr(), addr())
            .prop_filter("two distinct corners", |(a, b)| a != b)
            .prop_map(|(a, b)| FormulaExpr::Range(CellRange::new(a, b)));
        let arg = prop_oneof![3 => inner.clone(), 1 => range];
        prop_oneof![
            inner.clone().prop_map(|e| FormulaExpr::Neg(Box::new(e))),
            (
                prop_oneof![Just(BinaryOp::Add), Just(BinaryOp::Sub), Just(BinaryOp::Mul), Just(BinaryOp::Div)],
                inner.clone(),
                inner.clone()
            )
                .prop_map(|(op, l, r)| FormulaExpr::binary(op, l, r)),
            (proptest::sample::select(Function::ALL.to_vec()), proptest::collection::vec(arg, 1..4))
                .prop_map(|(function, args)| FormulaExpr::Call { function, args }),
        ]
    })
}

pub fn sample_set() -> impl Strategy<Value = (u8, Vec<(f64, f64)>)> {
    (1u8..=2).prop_flat_map(|order| {
        let n = usize::from(order) + 1;
        (
            Just(order),
            proptest::collection::btree_set(-50i32..50, n),
            proptest::collection::vec(-1000i32..1000, n),
        )
            .prop_map(|(order, xs, ys)| {
                let pts = xs.into_iter().zip(ys).map(|(x, y)| (f64::from(x), f64::from(y))).collect();
                (order, pts)
            })
    })
}

pub fn annotation() -> impl Strategy<Value = Annotation> {
    let item = proptest::collection::btree_map(0usize..7, 1u32..4, 0..7);
    proptest::collection::vec(item, 1..40).prop_map(|items| Annotation {
        items: items
            .into_iter()
            .enumerate()
            .map(|(i, types)| AnnotatedItem {
                id: format!("i{i}"),
                explanations: types
                    .into_iter()
                    .map(|(t, count)| ExplanationCount {
                        kind: ExplanationType::ALL[t],
                        count,
                    })
                    .collect(),
            })
            .collect(),
    })
}

