mod common;

use std::sync::OnceLock;

use common::{random_edit, Edit};
use modelbench::fixtures::{self, ExprLayout};
use modelbench::query::parse;
use modelbench::store::{Origin, Store};
use modelbench::{ElementId, Workbench};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn base() -> &'static (Store, ElementId) {
    static BASE: OnceLock<(Store, ElementId)> = OnceLock::new();
    BASE.get_or_init(|| {
        let mut wb = Workbench::default();
        let f = fixtures::expression(&mut wb, ExprLayout::Standard).unwrap();
        (wb.into_store(), f.model)
    })
}

/// Applies `len` random edits as separate user transactions; edits that no
/// longer apply are skipped.
fn scripted(seed: u64, len: usize) -> (Store, Vec<Edit>) {
    let (store, model) = base();
    let mut store = store.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut applied = Vec::new();
    for _ in 0..len {
        let edit = random_edit(&mut rng, &store, *model);
        if store.transact("p", Origin::User, |tx| edit.apply(tx)).is_ok() {
            applied.push(edit);
        }
    }
    (store, applied)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn replaying_the_log_reproduces_the_document(seed in any::<u64>(), len in 1usize..40) {
        let (store, _) = scripted(seed, len);
        let replayed = Store::replay(store.log()).unwrap();
        prop_assert_eq!(replayed.to_canonical_string(), store.to_canonical_string());
    }

    #[test]
    fn undo_restores_the_prior_snapshot(seed in any::<u64>(), len in 0usize..20) {
        let (mut store, _) = scripted(seed, len);
        let (_, model) = base();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let before = store.clone();
        let edit = random_edit(&mut rng, &store, *model);
        if let Ok(commit) = store.transact("p", Origin::User, |tx| edit.apply(tx)) {
            if commit.tx.is_some() {
                store.undo("p").unwrap();
                prop_assert!(store.same_state(&before), "{:?}", edit);
                store.redo("p").unwrap();
                let mut again = before.clone();
                again.transact("p", Origin::User, |tx| edit.apply(tx)).unwrap();
                prop_assert!(store.same_state(&again));
            }
        }
    }

    #[test]
    fn canonical_text_is_a_fixpoint(seed in any::<u64>(), len in 0usize..30) {
        let (store, _) = scripted(seed, len);
        let text = store.to_canonical_string();
        let back = Store::from_canonical_str(&text).unwrap();
        prop_assert!(back.same_state(&store));
        prop_assert_eq!(back.to_canonical_string(), text);
    }

    #[test]
    fn foreign_application_matches_local(seed in any::<u64>(), len in 1usize..30) {
        // A second replica fed each transaction without id preservation
        // reaches the same elements.
        let (store, _) = scripted(seed, len);
        let (start, _) = base();
        let mut other = start.clone();
        for tx in &store.log()[start.log().len()..] {
            other.apply_foreign(tx, false).unwrap();
        }
        prop_assert!(other.same_state(&store));
    }
}

fn expr_source() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        (0i64..1000).prop_map(|i| i.to_string()),
        (0u32..1000).prop_map(|i| format!("{}.5", i)),
        "[a-z]{1,6}".prop_map(|s| format!("'{s}'")),
        Just("true".to_string()),
        Just("null".to_string()),
        Just("data".to_string()),
        Just("node.x".to_string()),
        Just("data.$val.value".to_string()),
        Just("x".to_string()),
    ];
    leaf.prop_recursive(4, 32, 3, |inner| {
        prop_oneof![
            (inner.clone(), prop::sample::select(vec!["+", "-", "*", "/", "%", "<", "<=", "==", "!=", "&&", "||", "??"]), inner.clone())
                .prop_map(|(a, op, b)| format!("({a} {op} {b})")),
            inner.clone().prop_map(|a| format!("!({a})")),
            inner.clone().prop_map(|a| format!("-({a})")),
            (inner.clone(), inner.clone(), inner.clone()).prop_map(|(c, a, b)| format!("({c} ? {a} : {b})")),
            prop::collection::vec(inner.clone(), 0..3).prop_map(|v| format!("[{}]", v.join(", "))),
            (inner.clone(), inner.clone()).prop_map(|(l, b)| format!("{l}.map(x => {b})")),
            inner.clone().prop_map(|a| format!("`v ${{{a}}} w`")),
            (inner.clone(), 0usize..3).prop_map(|(a, i)| format!("({a})[{i}]")),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn printing_then_parsing_is_a_fixpoint(src in expr_source()) {
        let first = parse(&src).unwrap().to_string();
        let second = parse(&first).unwrap().to_string();
        prop_assert_eq!(first, second);
    }
}

#[test]
fn scripts_mostly_apply() {
    let mut kinds = std::collections::BTreeSet::new();
    let mut total = 0;
    for seed in 0..20 {
        let (_, applied) = scripted(seed, 40);
        total += applied.len();
        for e in applied {
            kinds.insert(format!("{e:?}").split(['(', ' ']).next().unwrap().to_string());
        }
    }
    assert!(total > 20 * 30, "only {total} of 800 edits applied");
    assert_eq!(kinds.len(), 7, "{kinds:?}");
}
