use serde_json::Value as Json;

use crate::error::{Error, Result};
use crate::id::ElementId;
use crate::meta::{AttrType, ElementTable, Feature, PrimitiveKind, Scalar};

/// Checks `scalar` against the declared type of `feature`, applying the
/// lossless coercions (integer to real, text to enum literal).
pub(crate) fn check_scalar(table: &ElementTable, feature: Feature<'_>, scalar: Scalar) -> Result<Scalar> {
    let mismatch = |s: &Scalar| Error::Type(format!("feature `{}` cannot hold {s:?}", feature.name()));
    match feature {
        Feature::Attribute(a) => match (a.ty, scalar) {
            (AttrType::Primitive(PrimitiveKind::Integer), Scalar::Int(i)) => Ok(Scalar::Int(i)),
            (AttrType::Primitive(PrimitiveKind::Integer), Scalar::Real(r)) if r.fract() == 0.0 && r.abs() < 9.0e15 => {
                Ok(Scalar::Int(r as i64))
            }
            (AttrType::Primitive(PrimitiveKind::Real), Scalar::Int(i)) => Ok(Scalar::Real(i as f64)),
            (AttrType::Primitive(PrimitiveKind::Real), Scalar::Real(r)) if r.is_finite() => Ok(Scalar::Real(r)),
            (AttrType::Primitive(PrimitiveKind::String), Scalar::Str(s) | Scalar::Literal(s)) => Ok(Scalar::Str(s)),
            (AttrType::Primitive(PrimitiveKind::Boolean), Scalar::Bool(b)) => Ok(Scalar::Bool(b)),
            (AttrType::Enum(e), Scalar::Str(s) | Scalar::Literal(s)) => {
                let en = table.enumeration(e)?;
                if en.literals.contains(&s) {
                    Ok(Scalar::Literal(s))
                } else {
                    Err(Error::Type(format!("`{s}` is not a literal of enum `{}`", en.name)))
                }
            }
            (_, other) => Err(mismatch(&other)),
        },
        Feature::Reference(r) => match scalar {
            Scalar::Ref(target) => {
                let o = table.object(target)?;
                if table.is_subclass_of(o.instance_of, r.target)? {
                    Ok(Scalar::Ref(target))
                } else {
                    Err(Error::Type(format!(
                        "{target} is a `{}`, reference `{}` expects `{}`",
                        table.class(o.instance_of)?.name,
                        r.name,
                        table.class(r.target)?.name
                    )))
                }
            }
            other => Err(mismatch(&other)),
        },
    }
}

/// Converts a literal from an initialization document into a scalar for
/// `feature`. References accept `"#<id>"`, a raw id number, or the name of
/// an object in `model`.
pub fn scalar_from_json(table: &ElementTable, model: ElementId, feature: Feature<'_>, value: &Json) -> Result<Scalar> {
    let raw = match (feature, value) {
        (Feature::Reference(_), Json::String(s)) => {
            if let Ok(id) = s.parse::<ElementId>() {
                if s.starts_with('#') {
                    return check_scalar(table, feature, Scalar::Ref(id));
                }
            }
            let matches: Vec<ElementId> = table
                .model_objects(model)
                .into_iter()
                .filter(|o| table.object_name(*o).as_deref() == Some(s.as_str()))
                .collect();
            match matches.as_slice() {
                [one] => Scalar::Ref(*one),
                [] => return Err(Error::Type(format!("no object named `{s}` for reference `{}`", feature.name()))),
                _ => {
                    return Err(Error::Ambiguous {
                        parent: model,
                        name: s.clone(),
                        candidates: matches,
                    })
                }
            }
        }
        (Feature::Reference(_), Json::Number(n)) => match n.as_u64() {
            Some(raw) => Scalar::Ref(ElementId::from_raw(raw)),
            None => return Err(Error::Type(format!("`{n}` is not an element id"))),
        },
        (_, Json::Bool(b)) => Scalar::Bool(*b),
        (_, Json::Number(n)) => match n.as_i64() {
            Some(i) => Scalar::Int(i),
            None => Scalar::Real(n.as_f64().unwrap_or(f64::NAN)),
        },
        (_, Json::String(s)) => Scalar::Str(s.clone()),
        (_, other) => {
            return Err(Error::Type(format!(
                "feature `{}` cannot be initialized from {other}",
                feature.name()
            )))
        }
    };
    check_scalar(table, feature, raw)
}
