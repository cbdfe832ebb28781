//! Line-oriented command console over a [`Workbench`].

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::fixtures::{self, ExprLayout};
use crate::id::ElementId;
use crate::meta::Element;
use crate::query::{parse, EvalContext};
use crate::store::{FeatureEdit, Store};
use crate::validation::{self, Marker, Severity};
use crate::viewpoint::{self, render_to_svg};
use crate::workbench::{element_path, parse_literal, resolve_path, Outcome, Workbench};

pub const EXIT_OK: i32 = 0;
pub const EXIT_COMMAND: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;

#[derive(Parser, Debug)]
#[command(no_binary_name = true, disable_help_flag = true, disable_help_subcommand = true)]
struct Line {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FixtureName {
    Erd,
    Expr,
    /// The expression tree with the 1000 operand on the right.
    ExprMirrored,
}

#[derive(Subcommand, Debug)]
enum FixtureCmd {
    Load { name: FixtureName },
}

#[derive(Subcommand, Debug)]
enum Command {
    New,
    Load { file: PathBuf },
    Save { file: Option<PathBuf> },
    Fixtures {
        #[command(subcommand)]
        cmd: FixtureCmd,
    },
    Select { path: String },
    Render {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        level: Option<i64>,
        #[arg(long)]
        grid: Option<Switch>,
        #[arg(long)]
        viewpoint: Option<String>,
    },
    Validate {
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        strict: bool,
    },
    Drag {
        element: String,
        x: f64,
        y: f64,
    },
    Set {
        target: String,
        value: String,
    },
    Undo,
    Redo,
    Serve {
        #[arg(long, default_value_t = 7878)]
        port: u16,
    },
    Trace { mode: Switch },
    Help,
}

/// What a command asks of the host process.
#[derive(Clone, Debug, PartialEq)]
pub enum Action {
    Continue,
    /// Validation with `--strict` found errors.
    ValidationFailed,
    /// Start the collaboration service on the current project.
    Serve { port: u16 },
}

const HELP: &str = "commands:
  new | load <file> | save [file]
  fixtures load erd|expr|expr-mirrored
  select <path>            /model, /model/Class:name, #id or a unique object name
  eval <expression>        evaluated on the selected element
  render [--out file] [--level n] [--grid on|off] [--viewpoint name]
  validate [--report file] [--strict]
  drag <element> <x> <y>
  set <element>.<feature> <value>
  undo | redo | trace on|off | serve [--port n]";

pub struct Session {
    wb: Workbench,
    selected: Option<ElementId>,
    file: Option<PathBuf>,
    trace: bool,
}

impl Default for Session {
    fn default() -> Self {
        Session::new()
    }
}

impl Session {
    pub fn new() -> Self {
        Session {
            wb: Workbench::default(),
            selected: None,
            file: None,
            trace: false,
        }
    }

    pub fn workbench(&self) -> &Workbench {
        &self.wb
    }

    pub fn workbench_mut(&mut self) -> &mut Workbench {
        &mut self.wb
    }

    /// Replaces the project with `store`, clearing the selection.
    pub fn open_store(&mut self, store: Store) {
        self.wb = Workbench::new(store);
        self.selected = None;
    }

    pub fn selected(&self) -> Option<ElementId> {
        self.selected
    }

    /// Runs one command line, appending its output to `out`.
    pub fn execute(&mut self, line: &str, out: &mut String) -> Result<Action> {
        let line = line.trim();
        if line.is_empty() || line.starts_with("//") {
            return Ok(Action::Continue);
        }
        if let Some(expr) = line.strip_prefix("eval").filter(|r| r.is_empty() || r.starts_with(char::is_whitespace)) {
            let text = self.eval(expr.trim())?;
            let _ = writeln!(out, "{text}");
            return Ok(Action::Continue);
        }
        let words = shlex::split(&escape_hashes(line)).ok_or_else(|| Error::Invalid(format!("unbalanced quotes in `{line}`")))?;
        let cmd = Line::try_parse_from(&words)
            .map_err(|e| {
                let text = e.render().to_string();
                let first = text.lines().next().unwrap_or("bad command");
                Error::Invalid(first.strip_prefix("error: ").unwrap_or(first).to_string())
            })?
            .cmd;
        self.run(cmd, out)
    }

    fn run(&mut self, cmd: Command, out: &mut String) -> Result<Action> {
        match cmd {
            Command::Help => out.push_str(HELP),
            Command::New => {
                *self = Session {
                    trace: self.trace,
                    ..Session::new()
                };
                out.push_str("new project\n");
            }
            Command::Load { file } => {
                let text = std::fs::read_to_string(&file).map_err(|e| Error::Io(format!("{}: {e}", file.display())))?;
                self.open_store(Store::from_canonical_str(&text)?);
                let _ = writeln!(out, "loaded {}", file.display());
                self.file = Some(file);
            }
            Command::Save { file } => {
                let file = file
                    .or_else(|| self.file.clone())
                    .ok_or_else(|| Error::Invalid("save needs a file name".into()))?;
                std::fs::write(&file, self.wb.store().to_canonical_string())
                    .map_err(|e| Error::Io(format!("{}: {e}", file.display())))?;
                let _ = writeln!(out, "saved {}", file.display());
                self.file = Some(file);
            }
            Command::Fixtures {
                cmd: FixtureCmd::Load { name },
            } => {
                let model = match name {
                    FixtureName::Erd => fixtures::erd(&mut self.wb)?.model,
                    FixtureName::Expr => fixtures::expression(&mut self.wb, ExprLayout::Standard)?.model,
                    FixtureName::ExprMirrored => fixtures::expression(&mut self.wb, ExprLayout::Mirrored)?.model,
                };
                self.selected = Some(model);
                let _ = writeln!(out, "loaded fixture {}", element_path(self.wb.store(), model));
            }
            Command::Select { path } => {
                let id = self.resolve(&path)?;
                self.selected = Some(id);
                let _ = writeln!(out, "selected {}", element_path(self.wb.store(), id));
            }
            Command::Render {
                out: file,
                level,
                grid,
                viewpoint,
            } => {
                let model = self.current_model()?;
                if let Some(level) = level {
                    let o = self.wb.set_control_parameter(model, "level", crate::query::Value::Int(level))?;
                    self.report(&o, out);
                }
                if let Some(g) = grid {
                    let o = self.wb.set_control_parameter(model, "grid", crate::query::Value::Bool(matches!(g, Switch::On)))?;
                    self.report(&o, out);
                }
                let tree = self.wb.render(model, viewpoint.as_deref())?;
                let svg = render_to_svg(&tree);
                match file {
                    Some(f) => {
                        std::fs::write(&f, svg).map_err(|e| Error::Io(format!("{}: {e}", f.display())))?;
                        let _ = writeln!(out, "rendered {} nodes to {}", tree.iter().count(), f.display());
                    }
                    None => out.push_str(&svg),
                }
            }
            Command::Validate { report, strict } => {
                let models: Vec<ElementId> = self
                    .wb
                    .store()
                    .elements()
                    .models()
                    .filter(|m| !m.is_metamodel)
                    .map(|m| m.id)
                    .collect();
                let mut markers = Vec::new();
                for m in models {
                    markers.extend(self.wb.validate(m)?.0);
                }
                let text = self.marker_report(&markers);
                match report {
                    Some(f) => {
                        std::fs::write(&f, &text).map_err(|e| Error::Io(format!("{}: {e}", f.display())))?;
                        let _ = writeln!(out, "{} markers written to {}", markers.len(), f.display());
                    }
                    None => out.push_str(&text),
                }
                if strict && validation::has_errors(&markers) {
                    return Ok(Action::ValidationFailed);
                }
            }
            Command::Drag { element, x, y } => {
                let id = self.resolve(&element)?;
                let start = self.wb.store().node(id)?.layout();
                let path: Vec<(f64, f64)> = (1..=4)
                    .map(|i| {
                        let t = i as f64 / 4.0;
                        (start.x + (x - start.x) * t, start.y + (y - start.y) * t)
                    })
                    .collect();
                let o = self.wb.simulate_drag(id, &path)?;
                self.report(&o, out);
                let l = self.wb.store().node(id)?.layout();
                let _ = writeln!(
                    out,
                    "{} at {}, {}",
                    element_path(self.wb.store(), id),
                    crate::query::fmt_real(l.x),
                    crate::query::fmt_real(l.y)
                );
            }
            Command::Set { target, value } => {
                let (element, feature) = target
                    .rsplit_once('.')
                    .ok_or_else(|| Error::Invalid(format!("expected <element>.<feature>, got `{target}`")))?;
                let id = self.resolve(element)?;
                let edit = if value == "null" {
                    FeatureEdit::Set(Vec::new())
                } else {
                    let scalar = parse_literal(self.wb.store(), id, feature, &value).map_err(|e| match e {
                        Error::Type(m) => Error::Type(format!("{}.{feature}: {m}", element_path(self.wb.store(), id))),
                        e => e,
                    })?;
                    FeatureEdit::Set(vec![scalar])
                };
                let o = self.wb.set_feature(id, feature, edit)?;
                self.report(&o, out);
                let _ = writeln!(out, "set {}.{feature}", element_path(self.wb.store(), id));
            }
            Command::Undo => {
                let o = self.wb.undo()?;
                self.report(&o, out);
                out.push_str("undone\n");
            }
            Command::Redo => {
                let o = self.wb.redo()?;
                self.report(&o, out);
                out.push_str("redone\n");
            }
            Command::Trace { mode } => {
                self.trace = matches!(mode, Switch::On);
                let _ = writeln!(out, "trace {}", if self.trace { "on" } else { "off" });
            }
            Command::Serve { port } => return Ok(Action::Serve { port }),
        }
        Ok(Action::Continue)
    }

    fn report<T>(&self, o: &Outcome<T>, out: &mut String) {
        if self.trace {
            for line in &o.cascade.trace {
                let _ = writeln!(out, "{line}");
            }
        }
        for f in &o.cascade.failures {
            let _ = writeln!(out, "rule {} failed on {}: {}", f.rule, element_path(self.wb.store(), f.subject), f.message);
        }
    }

    fn marker_report(&self, markers: &[Marker]) -> String {
        let mut text = String::new();
        for m in markers {
            let sev = match m.severity {
                Severity::Error => "error",
                Severity::Warning => "warning",
            };
            let _ = writeln!(text, "{sev} {} [{}] {}", element_path(self.wb.store(), m.element), m.rule, m.message);
        }
        let errors = markers.iter().filter(|m| m.severity == Severity::Error).count();
        let _ = writeln!(text, "{errors} errors, {} warnings", markers.len() - errors);
        text
    }

    /// Evaluates `expr` on the selected element without changing the store.
    pub fn eval(&self, expr: &str) -> Result<String> {
        let ast = parse(expr)?;
        let store = self.wb.store();
        let ctx = match self.selected {
            Some(id) => {
                let model = store.elements().owning_model(id).ok();
                let vp = model.and_then(|m| self.wb.viewpoint_for(m, None).ok().flatten());
                match vp {
                    Some(vp) => viewpoint::element_context(store, id, vp)?,
                    None => EvalContext::for_element(store, id),
                }
            }
            None => EvalContext::new(store),
        };
        Ok(ctx.eval(&ast)?.to_string())
    }

    /// Formats `e` for display, replacing element ids with paths where a
    /// path is known.
    pub fn explain(&self, e: &Error) -> String {
        let text = e.to_string();
        let store = self.wb.store();
        let mut out = String::with_capacity(text.len());
        let mut rest = text.as_str();
        while let Some(at) = rest.find('#') {
            out.push_str(&rest[..at]);
            let digits = rest[at + 1..].chars().take_while(char::is_ascii_digit).count();
            let token = &rest[at..at + 1 + digits];
            match token.parse::<ElementId>() {
                Ok(id) if digits > 0 => out.push_str(&element_path(store, id)),
                _ => out.push_str(token),
            }
            rest = &rest[at + 1 + digits..];
        }
        out.push_str(rest);
        out
    }

    /// Resolves a path, `#id`, or the name of exactly one object.
    pub fn resolve(&self, path: &str) -> Result<ElementId> {
        let store = self.wb.store();
        if path.starts_with('/') || path.starts_with('#') {
            return resolve_path(store, path);
        }
        let t = store.elements();
        let hits: Vec<ElementId> = t
            .iter()
            .filter(|e| matches!(e, Element::Object(_)))
            .map(Element::id)
            .filter(|id| t.object_name(*id).as_deref() == Some(path))
            .collect();
        match hits.as_slice() {
            [one] => Ok(*one),
            [] => Err(Error::Invalid(format!("nothing named `{path}`"))),
            _ => Err(Error::Invalid(format!(
                "`{path}` is ambiguous: {}",
                hits.iter().map(|h| element_path(store, *h)).collect::<Vec<_>>().join(", ")
            ))),
        }
    }

    fn current_model(&self) -> Result<ElementId> {
        let store = self.wb.store();
        if let Some(id) = self.selected {
            return store.elements().owning_model(id);
        }
        let models: Vec<ElementId> = store.elements().models().filter(|m| !m.is_metamodel).map(|m| m.id).collect();
        models.last().copied().ok_or_else(|| Error::Invalid("no model loaded".into()))
    }
}

/// Escapes `#` outside quotes so shell-style splitting keeps `#id` words
/// instead of reading them as comments.
fn escape_hashes(line: &str) -> String {
    let mut out = String::with_capacity(line.len());
    let mut quote = None;
    let mut escaped = false;
    for c in line.chars() {
        match (quote, c) {
            _ if escaped => escaped = false,
            (None, '\\') | (Some('"'), '\\') => escaped = true,
            (None, '\'' | '"') => quote = Some(c),
            (Some(q), _) if c == q => quote = None,
            (None, '#') => out.push('\\'),
            _ => {}
        }
        out.push(c);
    }
    out
}

/// Runs every line of `script`, stopping at the first failing command.
/// Returns the output and the process exit code.
pub fn run_script(session: &mut Session, script: &str) -> (String, i32, Option<u16>) {
    let mut out = String::new();
    for (n, line) in script.lines().enumerate() {
        match session.execute(line, &mut out) {
            Ok(Action::Continue) => {}
            Ok(Action::ValidationFailed) => return (out, EXIT_VALIDATION, None),
            Ok(Action::Serve { port }) => return (out, EXIT_OK, Some(port)),
            Err(e) => {
                let _ = writeln!(out, "error at line {}: {}", n + 1, session.explain(&e));
                return (out, EXIT_COMMAND, None);
            }
        }
    }
    (out, EXIT_OK, None)
}
