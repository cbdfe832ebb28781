use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::id::ElementId;

pub const DEFAULT_X: f64 = 0.0;
pub const DEFAULT_Y: f64 = 0.0;
pub const DEFAULT_WIDTH: f64 = 120.0;
pub const DEFAULT_HEIGHT: f64 = 60.0;

/// Position and extent of a node, in canvas units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

impl Layout {
    pub fn new(x: f64, y: f64, width: f64, height: f64) -> Self {
        Layout { x, y, width, height }
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.width / 2.0, self.y + self.height / 2.0)
    }
}

impl Default for Layout {
    fn default() -> Self {
        Layout::new(DEFAULT_X, DEFAULT_Y, DEFAULT_WIDTH, DEFAULT_HEIGHT)
    }
}

/// Open value stored in a node's `state` map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateValue {
    Bool(bool),
    Int(i64),
    Real(f64),
    Text(String),
    List(Vec<StateValue>),
    Record(BTreeMap<String, StateValue>),
}

impl fmt::Display for StateValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateValue::Bool(b) => write!(f, "{b}"),
            StateValue::Int(i) => write!(f, "{i}"),
            StateValue::Real(r) => write!(f, "{r}"),
            StateValue::Text(s) => f.write_str(s),
            StateValue::List(items) => {
                f.write_str("[")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str("]")
            }
            StateValue::Record(map) => {
                f.write_str("{")?;
                for (i, (k, v)) in map.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{k}: {v}")?;
                }
                f.write_str("}")
            }
        }
    }
}

/// Layout record plus open state for one element.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeInfo {
    pub element: ElementId,
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
    pub state: BTreeMap<String, StateValue>,
}

impl NodeInfo {
    pub fn new(element: ElementId, layout: Layout) -> Self {
        NodeInfo {
            element,
            x: layout.x,
            y: layout.y,
            width: layout.width,
            height: layout.height,
            state: BTreeMap::new(),
        }
    }

    pub fn layout(&self) -> Layout {
        Layout::new(self.x, self.y, self.width, self.height)
    }

    pub(crate) fn set_layout(&mut self, layout: Layout) {
        self.x = layout.x;
        self.y = layout.y;
        self.width = layout.width;
        self.height = layout.height;
    }
}
