//! The console binary and the in-process session.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use modelbench::console::{run_script, Session, EXIT_COMMAND, EXIT_OK, EXIT_VALIDATION};

const BIN: &str = env!("CARGO_BIN_EXE_modelbench");

type Run = (String, Vec<(String, Vec<u8>)>);

fn run_in(dir: &Path, args: &[&str]) -> (String, i32) {
    let out = Command::new(BIN).args(args).current_dir(dir).output().unwrap();
    (String::from_utf8(out.stdout).unwrap(), out.status.code().unwrap())
}

fn run(args: &[&str]) -> (String, i32) {
    run_in(Path::new("."), args)
}

fn script(lines: &[&str]) -> (String, i32) {
    let mut s = Session::new();
    let (out, code, serve) = run_script(&mut s, &lines.join("\n"));
    assert_eq!(serve, None);
    (out, code)
}

#[test]
fn erd_console_expressions_print_exactly() {
    let start = Instant::now();
    let (out, code) = script(&[
        "fixtures load erd",
        "select User",
        "eval data.$ownedAttributes.values.map(attr => attr.name)",
        "drag User 495 120",
        "eval `${node.x} * ${node.y} = ${node.x * node.y}`",
        "eval view.oclCondition",
    ]);
    assert!(start.elapsed() < Duration::from_secs(1));
    assert_eq!(code, EXIT_OK, "{out}");
    let lines: Vec<&str> = out.lines().collect();
    assert!(lines.contains(&"[ 'id', 'surname', 'firstname' ]"), "{out}");
    assert!(lines.contains(&"495 * 120 = 59400"), "{out}");
    assert!(lines.contains(&"context DObject inv: self.instanceof.name = 'Entity'"), "{out}");
}

#[test]
fn set_triggers_the_cascade() {
    let (out, code) = script(&["fixtures load expr", "set e0.val 112", "select e4", "eval data.$val.value"]);
    assert_eq!(code, EXIT_OK, "{out}");
    // 1000 - ((112 + 2) + 102)
    let expected = 1000.0 - ((112.0 + 2.0) + 102.0);
    assert_eq!(out.lines().last().unwrap(), format!("{expected}"));
}

#[test]
fn grid_render_has_the_dot_lattice() {
    let (out, code) = script(&["fixtures load expr", "render --grid on"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains(r#"<pattern id="grid" width="15" height="15""#), "{out}");
    let (off, _) = script(&["fixtures load expr", "render --grid off"]);
    assert!(!off.contains(r#"<pattern id="grid""#));
}

#[test]
fn eval_leaves_the_store_alone() {
    let mut s = Session::new();
    let mut out = String::new();
    for line in ["fixtures load erd", "select User"] {
        s.execute(line, &mut out).unwrap();
    }
    let before = s.workbench().store().checksum();
    for e in [
        "data.$ownedAttributes.values.map(attr => attr.name)",
        "`${node.x} * ${node.y}`",
        "view.oclCondition",
        "data.name",
    ] {
        s.execute(&format!("eval {e}"), &mut out).unwrap();
    }
    assert_eq!(s.workbench().store().checksum(), before);
}

#[test]
fn drag_snaps_and_undo_redo_move_back_and_forth() {
    let mut s = Session::new();
    let mut out = String::new();
    for line in ["fixtures load expr", "render --grid on", "drag e0 22 38"] {
        s.execute(line, &mut out).unwrap();
    }
    assert!(out.ends_with("/Eq1/Number:e0 at 15, 45\n"), "{out}");
    let dropped = s.workbench().store().clone();
    s.execute("undo", &mut out).unwrap();
    assert!(!s.workbench().store().same_state(&dropped));
    s.execute("redo", &mut out).unwrap();
    assert!(s.workbench().store().same_state(&dropped));
}

#[test]
fn errors_name_elements_by_path() {
    let (out, code) = script(&["fixtures load expr", "set e0.nope 1"]);
    assert_eq!(code, EXIT_COMMAND);
    assert!(out.contains("error at line 2:"), "{out}");
    assert!(out.contains("/Eq1/Number:e0"), "{out}");
    assert!(!out.contains('#'), "{out}");

    let (out, _) = script(&["fixtures load expr", "set e0.val abc"]);
    assert!(out.contains("/Eq1/Number:e0.val"), "{out}");

    let (out, code) = script(&["frobnicate"]);
    assert_eq!(code, EXIT_COMMAND);
    assert!(out.contains("frobnicate"), "{out}");
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["-e", "fixtures load erd", "-e", "validate --strict"]).1, EXIT_OK);
    assert_eq!(run(&["-e", "select nowhere"]).1, EXIT_COMMAND);
    let (out, code) = run(&["-e", "fixtures load erd", "-e", "set #19.isPK false", "-e", "validate --strict"]);
    assert_eq!(code, EXIT_VALIDATION, "{out}");
    assert!(out.contains("Entity User has no primary key"), "{out}");
    // Without --strict, errors are reported but do not fail the script.
    assert_eq!(run(&["-e", "fixtures load erd", "-e", "set #19.isPK false", "-e", "validate"]).1, EXIT_OK);
}

#[test]
fn save_and_load_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (out, code) = run_in(
        dir.path(),
        &["-e", "fixtures load expr", "-e", "set e0.val 112", "-e", "save eq.json"],
    );
    assert_eq!(code, EXIT_OK, "{out}");
    let (out, code) = run_in(dir.path(), &["-e", "load eq.json", "-e", "select e4", "-e", "eval data.$val.value"]);
    assert_eq!(code, EXIT_OK, "{out}");
    assert_eq!(out.lines().last(), Some("784"));
}

#[test]
fn scripts_replay_byte_identically() {
    let text = "\
fixtures load erd
select User
eval data.$ownedAttributes.values.map(attr => attr.name)
drag User 22 38
set #19.isPK false
validate --report report.txt
render --out erd.svg
trace on
fixtures load expr
set e0.val 112
render --level 1 --out zoom.svg
undo
redo
render --grid on --out expr.svg
save all.json
";
    let outputs: Vec<Run> = (0..2)
        .map(|_| {
            let dir = tempfile::tempdir().unwrap();
            std::fs::write(dir.path().join("run.mb"), text).unwrap();
            let (out, code) = run_in(dir.path(), &["run.mb"]);
            assert_eq!(code, EXIT_OK, "{out}");
            let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir.path())
                .unwrap()
                .map(|e| {
                    let e = e.unwrap();
                    (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
                })
                .collect();
            files.sort();
            (out, files)
        })
        .collect();
    assert_eq!(outputs[0].1.len(), 6);
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn stdin_script_and_interactive_mode() {
    use std::io::Write;
    use std::process::Stdio;
    let feed = |args: &[&str], input: &str| {
        let mut child = Command::new(BIN)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .unwrap();
        child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
        let out = child.wait_with_output().unwrap();
        (String::from_utf8(out.stdout).unwrap(), out.status.code().unwrap())
    };
    let (out, code) = feed(&["-"], "fixtures load expr\nselect e4\neval data.$val.value\n");
    assert_eq!(code, EXIT_OK);
    assert_eq!(out.lines().last(), Some("684"));

    // Interactive mode keeps going after an error.
    let (out, code) = feed(&[], "fixtures load expr\nbogus\nselect e4\n");
    assert_eq!(code, EXIT_COMMAND);
    assert!(out.contains("error: "), "{out}");
    assert!(out.contains("selected /Eq1/Sub:e4"), "{out}");
}
