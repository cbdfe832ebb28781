//! Metamodel edits applied together with the migration of every conforming
//! model and the rewriting of viewpoint sources that mention renamed names.

use crate::error::{Error, Result};
use crate::id::ElementId;
use crate::meta::{AttrType, ClassFlags, Element, Feature, PrimitiveKind, Scalar};
use crate::query::rewrite::{rename_class, rename_member};
use crate::query::Value;
use crate::store::edit::check_name;
use crate::store::typing::check_scalar;
use crate::store::{NewAttribute, NewReference, Tx};

#[derive(Clone, Debug, PartialEq)]
pub enum MetaEdit {
    AddAttribute { class: ElementId, spec: NewAttribute },
    AddReference { class: ElementId, spec: NewReference },
    RemoveFeature { feature: ElementId },
    RenameFeature { feature: ElementId, name: String },
    RenameClass { class: ElementId, name: String },
    /// Retypes an attribute, converting stored values where a conversion
    /// exists. Values without one are kept and left to validation.
    SetAttributeType { attribute: ElementId, ty: AttrType },
    /// Refuses when an existing value list exceeds the new upper bound.
    SetBounds { feature: ElementId, lower: u32, upper: Option<u32> },
    SetClassFlags { class: ElementId, flags: ClassFlags },
    AddSuperclass { class: ElementId, superclass: ElementId },
    DeleteClass { class: ElementId },
}

fn convert(scalar: &Scalar, ty: AttrType) -> Option<Scalar> {
    let text = match scalar {
        Scalar::Str(s) | Scalar::Literal(s) => s.clone(),
        Scalar::Int(i) => i.to_string(),
        Scalar::Real(r) => Value::Real(*r).to_string(),
        Scalar::Bool(b) => b.to_string(),
        Scalar::Ref(_) => return None,
    };
    match ty {
        AttrType::Primitive(PrimitiveKind::String) => Some(Scalar::Str(text)),
        AttrType::Primitive(PrimitiveKind::Integer) => match scalar {
            Scalar::Real(r) if r.fract() == 0.0 => Some(Scalar::Int(*r as i64)),
            Scalar::Bool(_) => None,
            _ => text.trim().parse().ok().map(Scalar::Int),
        },
        AttrType::Primitive(PrimitiveKind::Real) => match scalar {
            Scalar::Bool(_) => None,
            _ => text.trim().parse::<f64>().ok().filter(|r| r.is_finite()).map(Scalar::Real),
        },
        AttrType::Primitive(PrimitiveKind::Boolean) => match text.as_str() {
            "true" => Some(Scalar::Bool(true)),
            "false" => Some(Scalar::Bool(false)),
            _ => None,
        },
        AttrType::Enum(_) => Some(Scalar::Literal(text)),
    }
}

impl Tx<'_> {
    /// Applies a metamodel edit and migrates instances and viewpoints in the
    /// same transaction. A no-op edit records no ops.
    pub fn co_evolve(&mut self, edit: MetaEdit) -> Result<()> {
        match edit {
            MetaEdit::AddAttribute { class, spec } => self.add_attribute(class, spec).map(|_| ()),
            MetaEdit::AddReference { class, spec } => self.add_reference(class, spec).map(|_| ()),
            MetaEdit::RemoveFeature { feature } => {
                self.remove_feature(feature)?;
                self.check_forest()
            }
            MetaEdit::RenameFeature { feature, name } => self.rename_feature(feature, name),
            MetaEdit::RenameClass { class, name } => self.rename_class(class, name),
            MetaEdit::SetAttributeType { attribute, ty } => self.retype(attribute, ty),
            MetaEdit::SetBounds { feature, lower, upper } => self.set_bounds(feature, lower, upper),
            MetaEdit::SetClassFlags { class, flags } => {
                let c = self.elements().class(class)?;
                if (flags.is_abstract || flags.is_interface) && c.is_instantiable() {
                    let direct = self
                        .elements()
                        .iter()
                        .any(|e| matches!(e, Element::Object(o) if o.instance_of == class));
                    if direct {
                        return Err(Error::CoEvolution(format!(
                            "`{}` has instances and cannot become abstract",
                            c.name
                        )));
                    }
                }
                self.set_class_flags(class, flags)
            }
            MetaEdit::AddSuperclass { class, superclass } => self.add_superclass(class, superclass),
            MetaEdit::DeleteClass { class } => self.delete_element(class),
        }
    }

    fn rewrite_viewpoints(&mut self, f: &dyn Fn(&str) -> String) -> Result<()> {
        let vps: Vec<_> = self.store().viewpoints().cloned().collect();
        for mut vp in vps {
            let before = vp.clone();
            vp.map_sources(&mut |s| f(s));
            if vp != before {
                self.put_viewpoint(vp.id, Some(vp))?;
            }
        }
        Ok(())
    }

    fn rename_feature(&mut self, feature: ElementId, name: String) -> Result<()> {
        check_name(&name)?;
        let f = self.elements().feature(feature)?;
        let old = f.name().to_string();
        if old == name {
            return Ok(());
        }
        let owner = match f {
            Feature::Attribute(a) => a.owner,
            Feature::Reference(r) => r.owner,
        };
        if self.feature_names_around(owner)?.contains(&name) {
            return Err(Error::NameClash(name));
        }
        self.modify(feature, |e| {
            match e {
                Element::Attribute(a) => a.name = name.clone(),
                Element::Reference(r) => r.name = name.clone(),
                _ => unreachable!(),
            }
            Ok(())
        })?;
        self.rewrite_viewpoints(&|src| rename_member(src, &old, &name).unwrap_or_else(|_| src.to_string()))
    }

    fn rename_class(&mut self, class: ElementId, name: String) -> Result<()> {
        let c = self.elements().class(class)?.clone();
        if c.name == name {
            return Ok(());
        }
        self.check_classifier_name(c.package, &name)?;
        let old = c.name.clone();
        self.modify(class, |e| {
            if let Element::Class(c) = e {
                c.name = name.clone();
            }
            Ok(())
        })?;
        self.rewrite_viewpoints(&|src| rename_class(src, &old, &name).unwrap_or_else(|_| src.to_string()))
    }

    fn retype(&mut self, attribute: ElementId, ty: AttrType) -> Result<()> {
        let a = self.elements().attribute(attribute)?.clone();
        if a.ty == ty {
            return Ok(());
        }
        if let AttrType::Enum(e) = ty {
            self.elements().enumeration(e)?;
        }
        let mut retyped = a.clone();
        retyped.ty = ty;
        let migrate = |tx: &Tx<'_>, s: &Scalar| -> Option<Scalar> {
            convert(s, ty).and_then(|c| check_scalar(tx.elements(), Feature::Attribute(&retyped), c).ok())
        };
        let default_value = a.default_value.as_ref().and_then(|d| migrate(self, d));
        let slots: Vec<_> = self
            .elements()
            .iter()
            .filter_map(|e| match e {
                Element::Value(v) if v.feature == attribute => Some(v.clone()),
                _ => None,
            })
            .collect();
        let mut migrated = Vec::with_capacity(slots.len());
        for mut v in slots {
            v.values = v.values.iter().map(|s| migrate(self, s).unwrap_or_else(|| s.clone())).collect();
            migrated.push(v);
        }
        self.replace(Element::Attribute(crate::meta::DAttribute {
            default_value,
            ..retyped.clone()
        }))?;
        for v in migrated {
            self.replace(Element::Value(v))?;
        }
        Ok(())
    }

    fn set_bounds(&mut self, feature: ElementId, lower: u32, upper: Option<u32>) -> Result<()> {
        if upper == Some(0) || upper.is_some_and(|u| lower > u) {
            return Err(Error::Multiplicity(format!("invalid bounds {lower}..{upper:?}")));
        }
        let name = self.elements().feature(feature)?.name().to_string();
        if let Some(u) = upper {
            let over = self
                .elements()
                .iter()
                .any(|e| matches!(e, Element::Value(v) if v.feature == feature && v.values.len() > u as usize));
            if over {
                return Err(Error::CoEvolution(format!(
                    "existing values of `{name}` exceed the new upper bound {u}"
                )));
            }
        }
        self.modify(feature, |e| {
            match e {
                Element::Attribute(a) => {
                    a.lower_bound = lower;
                    a.upper_bound = upper;
                }
                Element::Reference(r) => {
                    r.lower_bound = lower;
                    r.upper_bound = upper;
                }
                _ => unreachable!(),
            }
            Ok(())
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions() {
        let int = AttrType::Primitive(PrimitiveKind::Integer);
        assert_eq!(convert(&Scalar::Str(" 42".into()), int), Some(Scalar::Int(42)));
        assert_eq!(convert(&Scalar::Real(3.0), int), Some(Scalar::Int(3)));
        assert_eq!(convert(&Scalar::Str("x".into()), int), None);
        assert_eq!(
            convert(&Scalar::Int(7), AttrType::Primitive(PrimitiveKind::String)),
            Some(Scalar::Str("7".into()))
        );
        assert_eq!(convert(&Scalar::Bool(true), int), None);
    }
}
