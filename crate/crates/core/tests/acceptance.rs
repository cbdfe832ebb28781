//! Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if
//! any criterion fails. Each check recomputes its expectations from raw
//! store contents rather than trusting the kernel's own answers.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{
    class_of, dependents, entities_without_pk, expr_value, flagged, random_edit, raw, real, rendered_sections, snap,
    values_of_feature, zoom_sections, PITCH,
};
use modelbench::console::{run_script, Session, EXIT_OK};
use modelbench::fixtures::{self, ExprLayout};
use modelbench::meta::{AttrType, Element, PrimitiveKind, Scalar};
use modelbench::query::Value;
use modelbench::store::{FeatureEdit, MetaEdit, NewAttribute, Origin, Store};
use modelbench::{ElementId, Workbench};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

struct Criterion {
    name: &'static str,
    budget: Option<Duration>,
    check: fn() -> Outcome,
}

const CRITERIA: &[Criterion] = &[
    Criterion { name: "console-oracle", budget: Some(Duration::from_secs(1)), check: console_oracle },
    Criterion { name: "expression-semantics", budget: Some(Duration::from_secs(1)), check: expression_semantics },
    Criterion { name: "cascade-workflow", budget: None, check: cascade_workflow },
    Criterion { name: "grid-snapping", budget: None, check: grid_snapping },
    Criterion { name: "semantic-zoom", budget: None, check: semantic_zoom },
    Criterion { name: "validation", budget: None, check: validation },
    Criterion { name: "co-evolution", budget: None, check: co_evolution },
    Criterion { name: "collaboration-convergence", budget: Some(Duration::from_secs(30)), check: collaboration },
    Criterion { name: "replay-determinism", budget: None, check: replay_determinism },
];

fn main() -> ExitCode {
    // Keep panic output from interleaving with the report.
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for c in CRITERIA {
        let start = Instant::now();
        let result = match catch_unwind(AssertUnwindSafe(c.check)) {
            Ok(r) => r,
            Err(p) => Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into())),
        };
        let elapsed = start.elapsed();
        let result = match (result, c.budget) {
            (Ok(d), Some(b)) if elapsed >= b => Err(format!("{d}; over budget")),
            (r, _) => r,
        };
        let timing = match c.budget {
            Some(b) => format!("{:.3}s/{:.0}s", elapsed.as_secs_f64(), b.as_secs_f64()),
            None => format!("{:.3}s", elapsed.as_secs_f64()),
        };
        match result {
            Ok(detail) => println!("PASS {} ({detail}, {timing})", c.name),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} ({detail}, {timing})", c.name);
            }
        }
    }
    println!("{} of {} criteria passed", CRITERIA.len() - failed, CRITERIA.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn console_oracle() -> Outcome {
    let mut s = Session::new();
    let script = "fixtures load erd\n\
                  select User\n\
                  eval data.$ownedAttributes.values.map(attr => attr.name)\n\
                  drag User 495 120\n\
                  eval `${node.x} * ${node.y} = ${node.x * node.y}`\n\
                  eval view.oclCondition";
    let (out, code, _) = run_script(&mut s, script);
    ensure!(code == EXIT_OK, "script failed: {out}");
    let lines: Vec<&str> = out.lines().collect();
    for want in [
        "[ 'id', 'surname', 'firstname' ]",
        "495 * 120 = 59400",
        "context DObject inv: self.instanceof.name = 'Entity'",
    ] {
        ensure!(lines.contains(&want), "missing `{want}` in {lines:?}");
    }
    Ok("3/3 exact lines".into())
}

fn expression_semantics() -> Outcome {
    let mut got = Vec::new();
    for (layout, want) in [(ExprLayout::Standard, 684.0), (ExprLayout::Mirrored, -684.0)] {
        let mut wb = Workbench::default();
        let f = fixtures::expression(&mut wb, layout).map_err(|e| e.to_string())?;
        let oracle = expr_value(wb.store(), f.root());
        let val = real(wb.store(), f.root(), "val");
        ensure!(oracle == want, "oracle {oracle} for {layout:?}");
        ensure!(val == oracle, "{layout:?}: root {val}, oracle {oracle}");
        got.push(val);
    }
    Ok(format!("root {} / {}", got[0], got[1]))
}

fn cascade_workflow() -> Outcome {
    let mut wb = Workbench::default();
    let f = fixtures::expression(&mut wb, ExprLayout::Standard).map_err(|e| e.to_string())?;
    let expected = dependents(wb.store(), f.e[0]);
    let o = wb
        .set_feature(f.e[0], "val", FeatureEdit::Set(vec![Scalar::Real(112.0)]))
        .map_err(|e| e.to_string())?;
    ensure!(o.cascade.failures.is_empty(), "rule failures {:?}", o.cascade.failures);
    ensure!(o.cascade.txs.len() == 3 && expected.len() == 3, "{} txs, {} dependents", o.cascade.txs.len(), expected.len());
    let order: Vec<String> = o.cascade.trace.iter().map(|l| l.subject.clone()).collect();
    let want: Vec<String> = expected.iter().map(|e| format!("{}{e}", class_of(wb.store(), *e))).collect();
    ensure!(order == want, "order {order:?}, expected {want:?}");
    let root = expr_value(wb.store(), f.root());
    let val = real(wb.store(), f.root(), "val");
    ensure!(root == 784.0 && val == root, "root {val}, oracle {root}");
    let text: String = o.cascade.trace.iter().map(|l| format!("{l}\n")).collect();
    ensure!(text == include_str!("golden/cascade_e0_112.trace"), "trace differs from golden:\n{text}");
    Ok("3 txs in dependency order, root 784, golden trace".into())
}

fn grid_snapping() -> Outcome {
    const POINTS: usize = 1000;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0015);
    let mut bases = Vec::new();
    for grid in [true, false] {
        let mut wb = Workbench::default();
        let f = fixtures::expression(&mut wb, ExprLayout::Standard).map_err(|e| e.to_string())?;
        wb.set_control_parameter(f.model, "grid", Value::Bool(grid)).map_err(|e| e.to_string())?;
        bases.push((wb, f.e[5]));
    }
    let mut worst: f64 = 0.0;
    for _ in 0..POINTS {
        let (x, y) = (rng.gen_range(-500.0..2000.0), rng.gen_range(-500.0..2000.0));
        for (i, (base, e)) in bases.iter().enumerate() {
            let mut wb = base.clone();
            wb.simulate_drag(*e, &[(x, y)]).map_err(|err| err.to_string())?;
            let l = wb.store().node(*e).map_err(|err| err.to_string())?.layout();
            if i == 0 {
                ensure!((l.x / PITCH).fract() == 0.0 && (l.y / PITCH).fract() == 0.0, "({x}, {y}) -> ({}, {})", l.x, l.y);
                ensure!((l.x, l.y) == (snap(x), snap(y)), "({x}, {y}) -> ({}, {})", l.x, l.y);
                worst = worst.max((l.x - x).abs()).max((l.y - y).abs());
                ensure!(worst <= PITCH / 2.0, "moved {worst} from ({x}, {y})");
            } else {
                ensure!((l.x, l.y) == (x, y), "grid off moved ({x}, {y}) to ({}, {})", l.x, l.y);
            }
        }
    }
    Ok(format!("{POINTS} drops, max offset {worst:.3} <= 7.5, grid off exact"))
}

fn semantic_zoom() -> Outcome {
    let mut wb = Workbench::default();
    let f = fixtures::expression(&mut wb, ExprLayout::Standard).map_err(|e| e.to_string())?;
    let numbers: Vec<ElementId> = f.e.iter().copied().filter(|e| class_of(wb.store(), *e) == "Number").collect();
    let tree = wb.render(f.model, None).map_err(|e| e.to_string())?;
    for got in rendered_sections(&tree, &numbers) {
        ensure!(got == zoom_sections(3), "unset level rendered {got:?}");
    }
    for level in 0..=3 {
        wb.set_control_parameter(f.model, "level", Value::Int(level)).map_err(|e| e.to_string())?;
        let tree = wb.render(f.model, None).map_err(|e| e.to_string())?;
        for got in rendered_sections(&tree, &numbers) {
            ensure!(got == zoom_sections(level), "level {level} rendered {got:?}");
        }
    }
    Ok("levels 0-3 match guards, default 3".into())
}

fn validation() -> Outcome {
    let consistent = |wb: &Workbench, model: ElementId| -> Result<BTreeSet<ElementId>, String> {
        let expected = entities_without_pk(wb.store(), model);
        let (got, counts) = flagged(wb.store(), model);
        ensure!(got == expected, "flagged {got:?}, expected {expected:?}");
        ensure!(counts.iter().all(|c| *c == 1), "marker counts {counts:?}");
        Ok(got)
    };
    let mut wb = Workbench::default();
    let f = fixtures::erd(&mut wb).map_err(|e| e.to_string())?;
    let book = wb
        .edit(|tx| {
            tx.add_object(
                f.model,
                "Entity",
                &json!({"name": "Book", "ownedAttributes": [{"name": "title", "type": "String", "isPK": false}]}),
            )
        })
        .map_err(|e| e.to_string())?
        .value;
    ensure!(consistent(&wb, f.model)? == BTreeSet::from([book]), "Book not flagged alone");
    let title = match raw(wb.store(), book, "ownedAttributes").as_slice() {
        [Scalar::Ref(a)] => *a,
        other => return Err(format!("Book attributes {other:?}")),
    };
    wb.set_feature(title, "isPK", FeatureEdit::Set(vec![Scalar::Bool(true)])).map_err(|e| e.to_string())?;
    ensure!(consistent(&wb, f.model)?.is_empty(), "marker survived isPK=true");
    wb.set_feature(title, "isPK", FeatureEdit::Set(vec![Scalar::Bool(false)])).map_err(|e| e.to_string())?;

    let is_pk = wb
        .store()
        .elements()
        .feature_by_name(f.attribute, "isPK")
        .map_err(|e| e.to_string())?
        .ok_or("no isPK")?
        .id();
    wb.co_evolve(MetaEdit::RemoveFeature { feature: is_pk }).map_err(|e| e.to_string())?;
    ensure!(consistent(&wb, f.model)?.len() == 3, "removing isPK did not flag all entities");
    wb.undo().map_err(|e| e.to_string())?;
    ensure!(consistent(&wb, f.model)? == BTreeSet::from([book]), "undo of removal");
    let spec = NewAttribute {
        default: Some(Scalar::Bool(false)),
        ..NewAttribute::single("isPK", AttrType::Primitive(PrimitiveKind::Boolean))
    };
    wb.co_evolve(MetaEdit::RemoveFeature { feature: is_pk }).map_err(|e| e.to_string())?;
    wb.co_evolve(MetaEdit::AddAttribute { class: f.attribute, spec }).map_err(|e| e.to_string())?;
    ensure!(consistent(&wb, f.model)?.len() == 3, "re-added isPK");
    wb.set_feature(title, "isPK", FeatureEdit::Set(vec![Scalar::Bool(true)])).map_err(|e| e.to_string())?;
    ensure!(consistent(&wb, f.model)?.len() == 2, "Book still flagged");
    Ok("one marker per PK-less entity through edits and co-evolution".into())
}

fn co_evolution() -> Outcome {
    let mut wb = Workbench::default();
    let f = fixtures::erd(&mut wb).map_err(|e| e.to_string())?;
    let is_pk = wb
        .store()
        .elements()
        .feature_by_name(f.attribute, "isPK")
        .map_err(|e| e.to_string())?
        .ok_or("no isPK")?
        .id();
    let before = values_of_feature(wb.store(), is_pk);
    let t = wb.store().elements();
    let instances = t
        .iter()
        .filter(|e| matches!(e, Element::Object(o) if t.is_subclass_of(o.instance_of, f.attribute).unwrap_or(false)))
        .count();
    ensure!(before.len() == instances && instances > 0, "{} values for {instances} instances", before.len());
    let snapshot = wb.store().clone();
    wb.co_evolve(MetaEdit::RemoveFeature { feature: is_pk }).map_err(|e| e.to_string())?;
    let t = wb.store().elements();
    ensure!(before.iter().all(|v| !t.contains(*v)), "values survived removal");
    ensure!(values_of_feature(wb.store(), is_pk).is_empty(), "sweep found leftover values");
    wb.undo().map_err(|e| e.to_string())?;
    ensure!(values_of_feature(wb.store(), is_pk) == before, "undo restored different values");
    ensure!(wb.store().same_state(&snapshot), "undo did not restore the snapshot");
    Ok(format!("{} values removed and restored", before.len()))
}

fn collaboration() -> Outcome {
    let r = common::sim::simulate(7, 200);
    ensure!(r.submitted == 400, "{r:?}");
    ensure!(r.retransmitted > 0, "no retransmissions: {r:?}");
    Ok(format!(
        "400 edits, {} logged, {} rejected, {} retransmitted, byte-identical",
        r.accepted, r.rejected, r.retransmitted
    ))
}

fn replay_determinism() -> Outcome {
    const SCRIPTS: u64 = 256;
    let mut wb = Workbench::default();
    let f = fixtures::expression(&mut wb, ExprLayout::Standard).map_err(|e| e.to_string())?;
    let base = wb.into_store();
    let mut txs = 0;
    for seed in 0..SCRIPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = base.clone();
        for _ in 0..rng.gen_range(1..60) {
            let edit = random_edit(&mut rng, &store, f.model);
            let _ = store.transact("p", Origin::User, |tx| edit.apply(tx));
        }
        txs += store.log().len();
        let replayed = Store::replay(store.log()).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure!(replayed.to_canonical_string() == store.to_canonical_string(), "seed {seed} diverged");
    }
    Ok(format!("{SCRIPTS} scripts, {txs} txs replayed byte-identically"))
}
