use serde::{Deserialize, Serialize};

use crate::query::{parse, Predicate};

/// Declarative template tree. String fields named `expr`, `data`, `guard`,
/// `over`, `start`, `end` and the root `class` hold expression sources;
/// `Box::class`, `Text::text` and titles are literal text.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum TemplateNode {
    /// Root of a view. `class` is an expression producing the class list.
    ViewRoot {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        class: Option<String>,
        #[serde(default)]
        children: Vec<TemplateNode>,
    },
    Box {
        #[serde(default)]
        class: String,
        #[serde(default)]
        children: Vec<TemplateNode>,
    },
    Text {
        text: String,
    },
    Expr {
        expr: String,
    },
    /// Children rendered only while `guard` is truthy.
    If {
        guard: String,
        #[serde(default)]
        children: Vec<TemplateNode>,
    },
    /// Children rendered once per item of `over`, bound to `var`.
    Repeat {
        over: String,
        var: String,
        #[serde(default)]
        children: Vec<TemplateNode>,
    },
    /// Renders the element `data` evaluates to with its own view.
    DefaultNode {
        data: String,
    },
    Edge {
        view: String,
        start: String,
        end: String,
    },
    /// Text box editing `field` of `data` (an object, or a feature value
    /// with `field` = `value`).
    Input {
        data: String,
        field: String,
        #[serde(default)]
        autosize: bool,
        #[serde(default)]
        hidden: bool,
    },
    /// Drop-down over enum literals or reference candidates.
    Selector {
        data: String,
        field: String,
    },
    Toggle {
        name: String,
        title: String,
    },
    Slider {
        name: String,
        title: String,
        min: i64,
        max: i64,
    },
    Control {
        title: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        payoff: Option<String>,
        #[serde(default)]
        children: Vec<TemplateNode>,
    },
    /// Extension slot; renders nothing.
    Decorators,
}

/// A parameter control declared in a template.
#[derive(Clone, Debug, PartialEq)]
pub enum ControlSpec {
    Toggle { name: String },
    Slider { name: String, min: i64, max: i64 },
}

impl TemplateNode {
    pub fn children(&self) -> &[TemplateNode] {
        match self {
            TemplateNode::ViewRoot { children, .. }
            | TemplateNode::Box { children, .. }
            | TemplateNode::If { children, .. }
            | TemplateNode::Repeat { children, .. }
            | TemplateNode::Control { children, .. } => children,
            _ => &[],
        }
    }

    fn children_mut(&mut self) -> Option<&mut Vec<TemplateNode>> {
        match self {
            TemplateNode::ViewRoot { children, .. }
            | TemplateNode::Box { children, .. }
            | TemplateNode::If { children, .. }
            | TemplateNode::Repeat { children, .. }
            | TemplateNode::Control { children, .. } => Some(children),
            _ => None,
        }
    }

    /// Checks that embedded expressions parse and slider bounds are sane.
    pub fn check(&self) -> Result<(), String> {
        let expr = |src: &str| parse(src).map(|_| ()).map_err(|e| e.to_string());
        match self {
            TemplateNode::ViewRoot { class: Some(c), .. } => expr(c)?,
            TemplateNode::Expr { expr: e } => expr(e)?,
            TemplateNode::If { guard, .. } => {
                Predicate::parse(guard).map_err(|e| e.to_string())?;
            }
            TemplateNode::Repeat { over, var, .. } => {
                expr(over)?;
                if !crate::query::is_identifier(var) {
                    return Err(format!("`{var}` is not a valid variable name"));
                }
            }
            TemplateNode::DefaultNode { data } => expr(data)?,
            TemplateNode::Edge { start, end, .. } => {
                expr(start)?;
                expr(end)?;
            }
            TemplateNode::Input { data, .. } | TemplateNode::Selector { data, .. } => expr(data)?,
            TemplateNode::Slider { name, min, max, .. } if min >= max => {
                return Err(format!("slider `{name}` needs min < max"));
            }
            _ => {}
        }
        self.children().iter().try_for_each(TemplateNode::check)
    }

    pub fn map_sources(&mut self, f: &mut dyn FnMut(&str) -> String) {
        match self {
            TemplateNode::ViewRoot { class: Some(c), .. } => *c = f(c),
            TemplateNode::Expr { expr } => *expr = f(expr),
            TemplateNode::If { guard, .. } => *guard = f(guard),
            TemplateNode::Repeat { over, .. } => *over = f(over),
            TemplateNode::DefaultNode { data } => *data = f(data),
            TemplateNode::Edge { start, end, .. } => {
                *start = f(start);
                *end = f(end);
            }
            TemplateNode::Input { data, .. } | TemplateNode::Selector { data, .. } => *data = f(data),
            _ => {}
        }
        if let Some(children) = self.children_mut() {
            for c in children {
                c.map_sources(f);
            }
        }
    }

    /// Finds the Toggle or Slider named `name`.
    pub fn find_control(&self, name: &str) -> Option<ControlSpec> {
        match self {
            TemplateNode::Toggle { name: n, .. } if n == name => {
                return Some(ControlSpec::Toggle { name: n.clone() });
            }
            TemplateNode::Slider { name: n, min, max, .. } if n == name => {
                return Some(ControlSpec::Slider {
                    name: n.clone(),
                    min: *min,
                    max: *max,
                });
            }
            _ => {}
        }
        self.children().iter().find_map(|c| c.find_control(name))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serde_uses_kind_tag() {
        let t = TemplateNode::Slider {
            name: "level".into(),
            title: "Zoom level".into(),
            min: 0,
            max: 3,
        };
        let json = serde_json::to_string(&t).unwrap();
        assert!(json.contains("\"kind\":\"slider\""));
        assert_eq!(serde_json::from_str::<TemplateNode>(&json).unwrap(), t);
    }

    #[test]
    fn check_rejects_bad_slider_and_bad_expr() {
        let bad = TemplateNode::Slider {
            name: "s".into(),
            title: String::new(),
            min: 3,
            max: 3,
        };
        assert!(bad.check().is_err());
        assert!(TemplateNode::Expr { expr: "a +".into() }.check().is_err());
    }

    #[test]
    fn find_control_searches_nested() {
        let t = TemplateNode::ViewRoot {
            class: None,
            children: vec![TemplateNode::Control {
                title: "c".into(),
                payoff: None,
                children: vec![TemplateNode::Toggle {
                    name: "grid".into(),
                    title: "Grid".into(),
                }],
            }],
        };
        assert_eq!(t.find_control("grid"), Some(ControlSpec::Toggle { name: "grid".into() }));
        assert_eq!(t.find_control("level"), None);
    }
}
