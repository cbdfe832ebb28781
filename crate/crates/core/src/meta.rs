//! Meta-metamodel constructs and the reflective read API over them.
//!
//! Every construct (models, packages, classifiers, features, objects and
//! feature values) lives in one flat [`ElementTable`] keyed by
//! [`ElementId`]. Containment between constructs is expressed by id lists,
//! so the table can be cloned cheaply into an immutable snapshot and
//! serialized in a stable order.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::id::ElementId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrimitiveKind {
    Integer,
    Real,
    String,
    Boolean,
}

impl PrimitiveKind {
    pub fn name(self) -> &'static str {
        match self {
            PrimitiveKind::Integer => "integer",
            PrimitiveKind::Real => "real",
            PrimitiveKind::String => "string",
            PrimitiveKind::Boolean => "boolean",
        }
    }
}

/// Declared type of an attribute.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttrType {
    Primitive(PrimitiveKind),
    Enum(ElementId),
}

/// A single stored datum inside a [`DValue`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scalar {
    Int(i64),
    Real(f64),
    Str(String),
    Bool(bool),
    Literal(String),
    Ref(ElementId),
}

impl Scalar {
    pub fn as_ref_target(&self) -> Option<ElementId> {
        match self {
            Scalar::Ref(id) => Some(*id),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Scalar::Int(i) => Some(*i as f64),
            Scalar::Real(r) => Some(*r),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DModel {
    pub id: ElementId,
    pub name: String,
    pub is_metamodel: bool,
    /// The metamodel an instance model conforms to; `None` for metamodels.
    pub conforms_to: Option<ElementId>,
    pub packages: Vec<ElementId>,
    pub root_objects: Vec<ElementId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DPackage {
    pub id: ElementId,
    pub name: String,
    pub model: ElementId,
    pub classifiers: Vec<ElementId>,
}

/// Signature of a class operation. Stored for reflection only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperationSig {
    pub name: String,
    pub params: Vec<String>,
    pub returns: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassFlags {
    pub is_abstract: bool,
    pub is_interface: bool,
    pub is_final: bool,
    pub is_singleton: bool,
    pub is_rootable: bool,
    pub is_primitive: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DClass {
    pub id: ElementId,
    pub name: String,
    pub package: ElementId,
    pub flags: ClassFlags,
    pub extends: Vec<ElementId>,
    pub attributes: Vec<ElementId>,
    pub references: Vec<ElementId>,
    pub operations: Vec<OperationSig>,
}

impl DClass {
    pub fn is_instantiable(&self) -> bool {
        !self.flags.is_abstract && !self.flags.is_interface
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DEnum {
    pub id: ElementId,
    pub name: String,
    pub package: ElementId,
    pub literals: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DAttribute {
    pub id: ElementId,
    pub name: String,
    pub owner: ElementId,
    #[serde(rename = "type")]
    pub ty: AttrType,
    pub lower_bound: u32,
    /// `None` means unbounded.
    pub upper_bound: Option<u32>,
    pub default_value: Option<Scalar>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DReference {
    pub id: ElementId,
    pub name: String,
    pub owner: ElementId,
    pub target: ElementId,
    pub lower_bound: u32,
    pub upper_bound: Option<u32>,
    pub is_containment: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Container {
    pub object: ElementId,
    pub reference: ElementId,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DObject {
    pub id: ElementId,
    pub model: ElementId,
    pub instance_of: ElementId,
    /// Feature id to the id of the [`DValue`] holding its data.
    #[serde(with = "crate::id::keyed")]
    pub features: BTreeMap<ElementId, ElementId>,
    pub container: Option<Container>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DValue {
    pub id: ElementId,
    pub owner: ElementId,
    pub feature: ElementId,
    pub values: Vec<Scalar>,
}

/// Any stored construct.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Element {
    #[serde(rename = "DModel")]
    Model(DModel),
    #[serde(rename = "DPackage")]
    Package(DPackage),
    #[serde(rename = "DClass")]
    Class(DClass),
    #[serde(rename = "DEnum")]
    Enum(DEnum),
    #[serde(rename = "DAttribute")]
    Attribute(DAttribute),
    #[serde(rename = "DReference")]
    Reference(DReference),
    #[serde(rename = "DObject")]
    Object(DObject),
    #[serde(rename = "DValue")]
    Value(DValue),
}

impl Element {
    pub fn id(&self) -> ElementId {
        match self {
            Element::Model(e) => e.id,
            Element::Package(e) => e.id,
            Element::Class(e) => e.id,
            Element::Enum(e) => e.id,
            Element::Attribute(e) => e.id,
            Element::Reference(e) => e.id,
            Element::Object(e) => e.id,
            Element::Value(e) => e.id,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Element::Model(_) => "DModel",
            Element::Package(_) => "DPackage",
            Element::Class(_) => "DClass",
            Element::Enum(_) => "DEnum",
            Element::Attribute(_) => "DAttribute",
            Element::Reference(_) => "DReference",
            Element::Object(_) => "DObject",
            Element::Value(_) => "DValue",
        }
    }

    /// Declared name for named constructs. Objects and values have none here;
    /// see [`ElementTable::object_name`].
    pub fn declared_name(&self) -> Option<&str> {
        match self {
            Element::Model(e) => Some(&e.name),
            Element::Package(e) => Some(&e.name),
            Element::Class(e) => Some(&e.name),
            Element::Enum(e) => Some(&e.name),
            Element::Attribute(e) => Some(&e.name),
            Element::Reference(e) => Some(&e.name),
            Element::Object(_) | Element::Value(_) => None,
        }
    }
}

/// A structural feature of a class: either an attribute or a reference.
#[derive(Clone, Copy, Debug)]
pub enum Feature<'a> {
    Attribute(&'a DAttribute),
    Reference(&'a DReference),
}

impl<'a> Feature<'a> {
    pub fn id(&self) -> ElementId {
        match self {
            Feature::Attribute(a) => a.id,
            Feature::Reference(r) => r.id,
        }
    }

    pub fn name(&self) -> &'a str {
        match self {
            Feature::Attribute(a) => &a.name,
            Feature::Reference(r) => &r.name,
        }
    }

    pub fn bounds(&self) -> (u32, Option<u32>) {
        match self {
            Feature::Attribute(a) => (a.lower_bound, a.upper_bound),
            Feature::Reference(r) => (r.lower_bound, r.upper_bound),
        }
    }

    pub fn is_containment(&self) -> bool {
        matches!(self, Feature::Reference(r) if r.is_containment)
    }
}

macro_rules! typed_getter {
    ($name:ident, $variant:ident, $ty:ty, $label:literal) => {
        pub fn $name(&self, id: ElementId) -> Result<&$ty> {
            match self.resolve(id)? {
                Element::$variant(e) => Ok(e),
                other => Err(Error::WrongKind {
                    id,
                    expected: $label,
                    actual: other.kind_name(),
                }),
            }
        }
    };
}

/// Flat table of every construct in a project.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ElementTable {
    map: BTreeMap<ElementId, Element>,
}

impl ElementTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Element> {
        self.map.values()
    }

    pub fn contains(&self, id: ElementId) -> bool {
        self.map.contains_key(&id)
    }

    pub fn get(&self, id: ElementId) -> Option<&Element> {
        self.map.get(&id)
    }

    pub(crate) fn insert(&mut self, element: Element) -> Option<Element> {
        self.map.insert(element.id(), element)
    }

    pub(crate) fn remove(&mut self, id: ElementId) -> Option<Element> {
        self.map.remove(&id)
    }

    /// Looks up any element by id.
    pub fn resolve(&self, id: ElementId) -> Result<&Element> {
        self.map.get(&id).ok_or(Error::NotFound(id))
    }

    typed_getter!(model, Model, DModel, "DModel");
    typed_getter!(package, Package, DPackage, "DPackage");
    typed_getter!(class, Class, DClass, "DClass");
    typed_getter!(enumeration, Enum, DEnum, "DEnum");
    typed_getter!(attribute, Attribute, DAttribute, "DAttribute");
    typed_getter!(reference, Reference, DReference, "DReference");
    typed_getter!(object, Object, DObject, "DObject");
    typed_getter!(value, Value, DValue, "DValue");

    pub fn feature(&self, id: ElementId) -> Result<Feature<'_>> {
        match self.resolve(id)? {
            Element::Attribute(a) => Ok(Feature::Attribute(a)),
            Element::Reference(r) => Ok(Feature::Reference(r)),
            other => Err(Error::WrongKind {
                id,
                expected: "DAttribute or DReference",
                actual: other.kind_name(),
            }),
        }
    }

    /// The model an element belongs to.
    pub fn owning_model(&self, id: ElementId) -> Result<ElementId> {
        Ok(match self.resolve(id)? {
            Element::Model(m) => m.id,
            Element::Package(p) => p.model,
            Element::Class(c) => self.package(c.package)?.model,
            Element::Enum(e) => self.package(e.package)?.model,
            Element::Attribute(a) => self.owning_model(a.owner)?,
            Element::Reference(r) => self.owning_model(r.owner)?,
            Element::Object(o) => o.model,
            Element::Value(v) => self.object(v.owner)?.model,
        })
    }

    pub fn models(&self) -> impl Iterator<Item = &DModel> {
        self.map.values().filter_map(|e| match e {
            Element::Model(m) => Some(m),
            _ => None,
        })
    }

    pub fn model_by_name(&self, name: &str) -> Option<&DModel> {
        self.models().find(|m| m.name == name)
    }

    /// Every classifier of a metamodel, across its packages.
    pub fn classifiers(&self, metamodel: ElementId) -> Result<Vec<ElementId>> {
        let model = self.model(metamodel)?;
        let mut out = Vec::new();
        for pkg in &model.packages {
            out.extend(self.package(*pkg)?.classifiers.iter().copied());
        }
        Ok(out)
    }

    pub fn class_by_name(&self, metamodel: ElementId, name: &str) -> Result<Option<&DClass>> {
        for id in self.classifiers(metamodel)? {
            if let Element::Class(c) = self.resolve(id)? {
                if c.name == name {
                    return Ok(Some(c));
                }
            }
        }
        Ok(None)
    }

    /// Objects of an instance model in creation order.
    pub fn model_objects(&self, model: ElementId) -> Vec<ElementId> {
        self.map
            .values()
            .filter_map(|e| match e {
                Element::Object(o) if o.model == model => Some(o.id),
                _ => None,
            })
            .collect()
    }

    /// Direct supertypes followed transitively, without duplicates,
    /// most general classes first.
    pub fn superclasses(&self, class: ElementId) -> Result<Vec<ElementId>> {
        fn visit(
            table: &ElementTable,
            id: ElementId,
            seen: &mut BTreeSet<ElementId>,
            out: &mut Vec<ElementId>,
        ) -> Result<()> {
            for sup in &table.class(id)?.extends {
                if seen.insert(*sup) {
                    visit(table, *sup, seen, out)?;
                    out.push(*sup);
                }
            }
            Ok(())
        }
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        visit(self, class, &mut seen, &mut out)?;
        Ok(out)
    }

    pub fn is_subclass_of(&self, class: ElementId, ancestor: ElementId) -> Result<bool> {
        if class == ancestor {
            return Ok(true);
        }
        Ok(self.superclasses(class)?.contains(&ancestor))
    }

    /// Direct subclasses of `class`, in creation order.
    pub fn direct_subclasses(&self, class: ElementId) -> Vec<ElementId> {
        self.map
            .values()
            .filter_map(|e| match e {
                Element::Class(c) if c.extends.contains(&class) => Some(c.id),
                _ => None,
            })
            .collect()
    }

    /// `class` and all its transitive subclasses.
    pub fn subclasses_closure(&self, class: ElementId) -> BTreeSet<ElementId> {
        let mut out = BTreeSet::from([class]);
        let mut stack = vec![class];
        while let Some(c) = stack.pop() {
            for sub in self.direct_subclasses(c) {
                if out.insert(sub) {
                    stack.push(sub);
                }
            }
        }
        out
    }

    /// Instances of `class` and its transitive subclasses within `model`,
    /// in creation order.
    pub fn class_all_instances(&self, class: ElementId, model: ElementId) -> Result<Vec<ElementId>> {
        self.class(class)?;
        let m = self.model(model)?;
        let class_mm = self.owning_model(class)?;
        if m.conforms_to != Some(class_mm) {
            return Err(Error::Invalid(format!(
                "model `{}` does not conform to the metamodel owning class {class}",
                m.name
            )));
        }
        let family = self.subclasses_closure(class);
        Ok(self
            .map
            .values()
            .filter_map(|e| match e {
                Element::Object(o) if o.model == model && family.contains(&o.instance_of) => Some(o.id),
                _ => None,
            })
            .collect())
    }

    /// Own and inherited features, superclass features first, each group in
    /// declaration order.
    pub fn class_features(&self, class: ElementId) -> Result<(Vec<ElementId>, Vec<ElementId>)> {
        let mut chain = self.superclasses(class)?;
        chain.push(class);
        let mut attributes = Vec::new();
        let mut references = Vec::new();
        for c in chain {
            let c = self.class(c)?;
            attributes.extend(c.attributes.iter().copied());
            references.extend(c.references.iter().copied());
        }
        Ok((attributes, references))
    }

    /// Declared supertypes and direct subtypes.
    pub fn class_hierarchy(&self, class: ElementId) -> Result<(Vec<ElementId>, Vec<ElementId>)> {
        let c = self.class(class)?;
        Ok((c.extends.clone(), self.direct_subclasses(class)))
    }

    /// Looks up a feature (own or inherited) by name.
    pub fn feature_by_name(&self, class: ElementId, name: &str) -> Result<Option<Feature<'_>>> {
        let (attrs, refs) = self.class_features(class)?;
        for id in attrs.into_iter().chain(refs) {
            let f = self.feature(id)?;
            if f.name() == name {
                return Ok(Some(f));
            }
        }
        Ok(None)
    }

    /// Data held by an object's feature, if the object has a value for it.
    pub fn feature_value(&self, object: ElementId, feature: ElementId) -> Result<Option<&DValue>> {
        let o = self.object(object)?;
        match o.features.get(&feature) {
            Some(v) => Ok(Some(self.value(*v)?)),
            None => Ok(None),
        }
    }

    /// The object's `name` attribute, when its class declares one.
    pub fn object_name(&self, object: ElementId) -> Option<String> {
        let o = self.object(object).ok()?;
        let f = self.feature_by_name(o.instance_of, "name").ok()??;
        let v = self.feature_value(object, f.id()).ok()??;
        match v.values.first()? {
            Scalar::Str(s) | Scalar::Literal(s) => Some(s.clone()),
            _ => None,
        }
    }

    /// Name usable for display and path addressing of any element.
    pub fn display_name(&self, id: ElementId) -> Option<String> {
        match self.get(id)? {
            Element::Object(_) => self.object_name(id),
            Element::Value(v) => self.feature(v.feature).ok().map(|f| f.name().to_string()),
            other => other.declared_name().map(str::to_string),
        }
    }

    pub fn class_name_of(&self, object: ElementId) -> Result<&str> {
        let o = self.object(object)?;
        Ok(&self.class(o.instance_of)?.name)
    }

    /// Access a child by exact name.
    ///
    /// For classes this is a feature, for metamodels a classifier, for
    /// instance models an object whose `name` attribute matches, for packages
    /// a classifier and for objects the [`DValue`] of the named feature.
    pub fn named_child(&self, parent: ElementId, name: &str) -> Result<ElementId> {
        let candidates: Vec<ElementId> = match self.resolve(parent)? {
            Element::Class(c) => {
                let (attrs, refs) = self.class_features(c.id)?;
                attrs
                    .into_iter()
                    .chain(refs)
                    .filter(|f| self.feature(*f).map(|f| f.name() == name).unwrap_or(false))
                    .collect()
            }
            Element::Model(m) if m.is_metamodel => self
                .classifiers(m.id)?
                .into_iter()
                .chain(m.packages.iter().copied())
                .filter(|c| self.resolve(*c).ok().and_then(Element::declared_name) == Some(name))
                .collect(),
            Element::Model(m) => self
                .model_objects(m.id)
                .into_iter()
                .filter(|o| self.object_name(*o).as_deref() == Some(name))
                .collect(),
            Element::Package(p) => p
                .classifiers
                .iter()
                .copied()
                .filter(|c| self.resolve(*c).ok().and_then(Element::declared_name) == Some(name))
                .collect(),
            Element::Object(o) => match self.feature_by_name(o.instance_of, name)? {
                Some(f) => o.features.get(&f.id()).copied().into_iter().collect(),
                None => Vec::new(),
            },
            Element::Enum(_) | Element::Attribute(_) | Element::Reference(_) | Element::Value(_) => Vec::new(),
        };
        match candidates.as_slice() {
            [] => Err(Error::NoSuchChild {
                parent,
                name: name.to_string(),
            }),
            [one] => Ok(*one),
            _ => Err(Error::Ambiguous {
                parent,
                name: name.to_string(),
                candidates,
            }),
        }
    }

    /// Objects contained (via containment references) by `object`, in
    /// feature declaration order then value order.
    pub fn contained_objects(&self, object: ElementId) -> Result<Vec<ElementId>> {
        let o = self.object(object)?;
        let (_, refs) = self.class_features(o.instance_of)?;
        let mut out = Vec::new();
        for r in refs {
            if !self.reference(r)?.is_containment {
                continue;
            }
            if let Some(v) = self.feature_value(object, r)? {
                out.extend(v.values.iter().filter_map(Scalar::as_ref_target));
            }
        }
        Ok(out)
    }

    /// Objects whose feature values mention `target`.
    pub fn referrers(&self, target: ElementId) -> Vec<ElementId> {
        let mut out = BTreeSet::new();
        for e in self.map.values() {
            if let Element::Value(v) = e {
                if v.values.iter().any(|s| s.as_ref_target() == Some(target)) {
                    out.insert(v.owner);
                }
            }
        }
        out.into_iter().collect()
    }

    /// Number of containment hops from `object` up to its root.
    pub fn containment_depth(&self, object: ElementId) -> Result<usize> {
        let limit = self.map.len();
        let mut depth = 0;
        let mut cur = self.object(object)?;
        while let Some(c) = cur.container {
            depth += 1;
            if depth > limit {
                return Err(Error::Invalid(format!("containment cycle through {object}")));
            }
            cur = self.object(c.object)?;
        }
        Ok(depth)
    }

    /// Whether `ancestor` is `object` or one of its containers.
    pub fn is_container_of(&self, ancestor: ElementId, object: ElementId) -> Result<bool> {
        let mut cur = Some(object);
        let mut steps = 0;
        while let Some(id) = cur {
            if id == ancestor {
                return Ok(true);
            }
            steps += 1;
            if steps > self.map.len() {
                return Err(Error::Invalid(format!("containment cycle through {object}")));
            }
            cur = self.object(id)?.container.map(|c| c.object);
        }
        Ok(false)
    }
}
