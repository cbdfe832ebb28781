use std::collections::{BTreeMap, BTreeSet};

use serde_json::Value as Json;

use crate::error::{Error, Result};
use crate::id::ElementId;
use crate::meta::{
    AttrType, ClassFlags, Container, DAttribute, DClass, DEnum, DModel, DObject, DPackage, DReference, DValue, Element,
    Feature, OperationSig, Scalar,
};
use crate::store::node::Layout;
use crate::store::typing::{check_scalar, scalar_from_json};
use crate::store::Tx;

/// Reserved key of an initialization document naming the concrete class of
/// a nested object.
pub const CLASS_KEY: &str = "@class";

#[derive(Clone, Debug, PartialEq)]
pub struct NewAttribute {
    pub name: String,
    pub ty: AttrType,
    pub lower: u32,
    pub upper: Option<u32>,
    pub default: Option<Scalar>,
}

impl NewAttribute {
    pub fn single(name: &str, ty: AttrType) -> Self {
        NewAttribute {
            name: name.to_string(),
            ty,
            lower: 0,
            upper: Some(1),
            default: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NewReference {
    pub name: String,
    pub target: ElementId,
    pub lower: u32,
    pub upper: Option<u32>,
    pub containment: bool,
}

/// Edit applied to the data of one feature of an object.
#[derive(Clone, Debug, PartialEq)]
pub enum FeatureEdit {
    /// Replace the whole list.
    Set(Vec<Scalar>),
    /// Insert at `index`, or append when `None`.
    Insert { index: Option<usize>, value: Scalar },
    /// Remove at `index`, or the last entry when `None`.
    Remove { index: Option<usize> },
    /// Remove the first entry equal to the payload.
    RemoveValue(Scalar),
}

pub(super) fn check_name(name: &str) -> Result<()> {
    if name.trim().is_empty() || name.trim() != name {
        return Err(Error::InvalidName(name.to_string()));
    }
    Ok(())
}

fn check_bounds(lower: u32, upper: Option<u32>) -> Result<()> {
    match upper {
        Some(0) => Err(Error::Multiplicity("upper bound must be positive".into())),
        Some(u) if lower > u => Err(Error::Multiplicity(format!("lower bound {lower} exceeds upper bound {u}"))),
        _ => Ok(()),
    }
}

impl Tx<'_> {
    pub fn add_metamodel(&mut self, name: &str) -> Result<ElementId> {
        self.new_model(name, true, None)
    }

    pub fn add_model(&mut self, name: &str, metamodel: ElementId) -> Result<ElementId> {
        if !self.elements().model(metamodel)?.is_metamodel {
            return Err(Error::Invalid(format!("{metamodel} is not a metamodel")));
        }
        self.new_model(name, false, Some(metamodel))
    }

    fn new_model(&mut self, name: &str, is_metamodel: bool, conforms_to: Option<ElementId>) -> Result<ElementId> {
        check_name(name)?;
        if self.elements().model_by_name(name).is_some() {
            return Err(Error::NameClash(name.to_string()));
        }
        let id = self.alloc_id();
        self.create(Element::Model(DModel {
            id,
            name: name.to_string(),
            is_metamodel,
            conforms_to,
            packages: Vec::new(),
            root_objects: Vec::new(),
        }))?;
        self.create_node(id, Layout::default())?;
        Ok(id)
    }

    pub fn add_package(&mut self, model: ElementId, name: &str) -> Result<ElementId> {
        check_name(name)?;
        let m = self.elements().model(model)?;
        if !m.is_metamodel {
            return Err(Error::Invalid(format!("packages live in metamodels, `{}` is a model", m.name)));
        }
        for p in &m.packages {
            if self.elements().package(*p)?.name == name {
                return Err(Error::NameClash(name.to_string()));
            }
        }
        let id = self.alloc_id();
        self.create(Element::Package(DPackage {
            id,
            name: name.to_string(),
            model,
            classifiers: Vec::new(),
        }))?;
        self.modify(model, |e| {
            if let Element::Model(m) = e {
                m.packages.push(id);
            }
            Ok(())
        })?;
        Ok(id)
    }

    /// Package that receives classifiers added to `target`: the package
    /// itself, or the first package of a metamodel (created on demand).
    fn classifier_home(&mut self, target: ElementId) -> Result<ElementId> {
        match self.elements().resolve(target)? {
            Element::Package(p) => Ok(p.id),
            Element::Model(m) if m.is_metamodel => match m.packages.first() {
                Some(p) => Ok(*p),
                None => {
                    let name = m.name.clone();
                    self.add_package(target, &name)
                }
            },
            other => Err(Error::WrongKind {
                id: target,
                expected: "metamodel or DPackage",
                actual: other.kind_name(),
            }),
        }
    }

    pub(super) fn check_classifier_name(&self, package: ElementId, name: &str) -> Result<()> {
        check_name(name)?;
        for c in &self.elements().package(package)?.classifiers {
            if self.elements().resolve(*c)?.declared_name() == Some(name) {
                return Err(Error::NameClash(name.to_string()));
            }
        }
        Ok(())
    }

    /// Adds a concrete class without features.
    pub fn add_class(&mut self, target: ElementId, name: &str) -> Result<ElementId> {
        check_name(name)?;
        let package = self.classifier_home(target)?;
        self.check_classifier_name(package, name)?;
        let id = self.alloc_id();
        self.create(Element::Class(DClass {
            id,
            name: name.to_string(),
            package,
            flags: ClassFlags::default(),
            extends: Vec::new(),
            attributes: Vec::new(),
            references: Vec::new(),
            operations: Vec::new(),
        }))?;
        self.modify(package, |e| {
            if let Element::Package(p) = e {
                p.classifiers.push(id);
            }
            Ok(())
        })?;
        self.create_node(id, Layout::default())?;
        Ok(id)
    }

    pub fn add_enum(&mut self, target: ElementId, name: &str, literals: &[&str]) -> Result<ElementId> {
        check_name(name)?;
        let package = self.classifier_home(target)?;
        self.check_classifier_name(package, name)?;
        if literals.is_empty() {
            return Err(Error::Invalid(format!("enum `{name}` needs at least one literal")));
        }
        let distinct: BTreeSet<&str> = literals.iter().copied().collect();
        if distinct.len() != literals.len() {
            return Err(Error::Invalid(format!("enum `{name}` has duplicate literals")));
        }
        let id = self.alloc_id();
        self.create(Element::Enum(DEnum {
            id,
            name: name.to_string(),
            package,
            literals: literals.iter().map(|s| s.to_string()).collect(),
        }))?;
        self.modify(package, |e| {
            if let Element::Package(p) = e {
                p.classifiers.push(id);
            }
            Ok(())
        })?;
        Ok(id)
    }

    pub fn set_class_flags(&mut self, class: ElementId, flags: ClassFlags) -> Result<()> {
        if flags.is_final && !self.elements().direct_subclasses(class).is_empty() {
            return Err(Error::Hierarchy(format!(
                "class `{}` has subclasses and cannot be final",
                self.elements().class(class)?.name
            )));
        }
        self.modify(class, |e| {
            if let Element::Class(c) = e {
                c.flags = flags;
            }
            Ok(())
        })
    }

    pub fn add_operation(&mut self, class: ElementId, sig: OperationSig) -> Result<()> {
        self.modify(class, |e| match e {
            Element::Class(c) => {
                if c.operations.iter().any(|o| o.name == sig.name) {
                    return Err(Error::NameClash(sig.name.clone()));
                }
                c.operations.push(sig);
                Ok(())
            }
            _ => unreachable!(),
        })
    }

    /// Names of features visible from `class`, its ancestors and descendants.
    pub(super) fn feature_names_around(&self, class: ElementId) -> Result<BTreeSet<String>> {
        let t = self.elements();
        let mut classes: BTreeSet<ElementId> = t.superclasses(class)?.into_iter().collect();
        classes.extend(t.subclasses_closure(class));
        let mut names = BTreeSet::new();
        for c in classes {
            let c = t.class(c)?;
            for f in c.attributes.iter().chain(&c.references) {
                names.insert(t.feature(*f)?.name().to_string());
            }
        }
        Ok(names)
    }

    pub fn add_superclass(&mut self, class: ElementId, superclass: ElementId) -> Result<()> {
        let t = self.elements();
        let sup = t.class(superclass)?;
        let sub = t.class(class)?;
        if sup.flags.is_final {
            return Err(Error::Hierarchy(format!("`{}` is final", sup.name)));
        }
        if sub.extends.contains(&superclass) {
            return Ok(());
        }
        if t.is_subclass_of(superclass, class)? {
            return Err(Error::Hierarchy(format!(
                "`{}` extending `{}` would create a cycle",
                sub.name, sup.name
            )));
        }
        let mine = self.feature_names_around(class)?;
        let (sa, sr) = t.class_features(superclass)?;
        for f in sa.into_iter().chain(sr) {
            let name = t.feature(f)?.name();
            if mine.contains(name) {
                return Err(Error::NameClash(name.to_string()));
            }
        }
        self.modify(class, |e| {
            if let Element::Class(c) = e {
                c.extends.push(superclass);
            }
            Ok(())
        })?;
        self.sync_instance_features(class)
    }

    /// Gives every instance of `class` (and its subclasses) a value slot for
    /// each declared feature and drops slots for features no longer declared.
    pub(crate) fn sync_instance_features(&mut self, class: ElementId) -> Result<()> {
        let family = self.elements().subclasses_closure(class);
        let objects: Vec<ElementId> = self
            .elements()
            .iter()
            .filter_map(|e| match e {
                Element::Object(o) if family.contains(&o.instance_of) => Some(o.id),
                _ => None,
            })
            .collect();
        for oid in objects {
            let o = self.elements().object(oid)?.clone();
            let (attrs, refs) = self.elements().class_features(o.instance_of)?;
            let declared: BTreeSet<ElementId> = attrs.iter().chain(&refs).copied().collect();
            let mut features = o.features.clone();
            for (f, v) in o.features.iter() {
                if !declared.contains(f) {
                    self.delete(*v)?;
                    features.remove(f);
                }
            }
            for f in attrs.into_iter().chain(refs) {
                if features.contains_key(&f) {
                    continue;
                }
                let values = match self.elements().feature(f)? {
                    Feature::Attribute(a) => a.default_value.clone().into_iter().collect(),
                    Feature::Reference(_) => Vec::new(),
                };
                let vid = self.alloc_id();
                self.create(Element::Value(DValue {
                    id: vid,
                    owner: oid,
                    feature: f,
                    values,
                }))?;
                features.insert(f, vid);
            }
            self.modify(oid, |e| {
                if let Element::Object(o) = e {
                    o.features = features;
                }
                Ok(())
            })?;
        }
        Ok(())
    }

    pub fn add_attribute(&mut self, class: ElementId, spec: NewAttribute) -> Result<ElementId> {
        check_name(&spec.name)?;
        check_bounds(spec.lower, spec.upper)?;
        self.elements().class(class)?;
        if self.feature_names_around(class)?.contains(&spec.name) {
            return Err(Error::NameClash(spec.name));
        }
        if let AttrType::Enum(e) = spec.ty {
            self.elements().enumeration(e)?;
        }
        let id = self.alloc_id();
        let attribute = DAttribute {
            id,
            name: spec.name,
            owner: class,
            ty: spec.ty,
            lower_bound: spec.lower,
            upper_bound: spec.upper,
            default_value: None,
        };
        let default_value = match spec.default {
            Some(d) => Some(check_scalar(self.elements(), Feature::Attribute(&attribute), d)?),
            None => None,
        };
        self.create(Element::Attribute(DAttribute {
            default_value,
            ..attribute
        }))?;
        self.modify(class, |e| {
            if let Element::Class(c) = e {
                c.attributes.push(id);
            }
            Ok(())
        })?;
        self.sync_instance_features(class)?;
        Ok(id)
    }

    pub fn add_reference(&mut self, class: ElementId, spec: NewReference) -> Result<ElementId> {
        check_name(&spec.name)?;
        check_bounds(spec.lower, spec.upper)?;
        self.elements().class(class)?;
        self.elements().class(spec.target)?;
        if self.feature_names_around(class)?.contains(&spec.name) {
            return Err(Error::NameClash(spec.name));
        }
        let id = self.alloc_id();
        self.create(Element::Reference(DReference {
            id,
            name: spec.name,
            owner: class,
            target: spec.target,
            lower_bound: spec.lower,
            upper_bound: spec.upper,
            is_containment: spec.containment,
        }))?;
        self.modify(class, |e| {
            if let Element::Class(c) = e {
                c.references.push(id);
            }
            Ok(())
        })?;
        self.sync_instance_features(class)?;
        Ok(id)
    }

    /// Creates an instance of the class named `class_name` as a root object
    /// of `model`, initialized from a nested literal document.
    pub fn add_object(&mut self, model: ElementId, class_name: &str, init: &Json) -> Result<ElementId> {
        let m = self.elements().model(model)?;
        let metamodel = m
            .conforms_to
            .ok_or_else(|| Error::Invalid(format!("`{}` is a metamodel and holds no objects", m.name)))?;
        let class = self
            .elements()
            .class_by_name(metamodel, class_name)?
            .ok_or_else(|| Error::NoSuchChild {
                parent: metamodel,
                name: class_name.to_string(),
            })?
            .id;
        let id = self.instantiate(model, class, init, None)?;
        self.modify(model, |e| {
            if let Element::Model(m) = e {
                m.root_objects.push(id);
            }
            Ok(())
        })?;
        Ok(id)
    }

    fn instantiate(
        &mut self,
        model: ElementId,
        class: ElementId,
        init: &Json,
        container: Option<Container>,
    ) -> Result<ElementId> {
        let c = self.elements().class(class)?;
        if !c.is_instantiable() {
            return Err(Error::NotInstantiable(c.name.clone()));
        }
        if c.flags.is_singleton && !self.elements().class_all_instances(class, model)?.is_empty() {
            return Err(Error::Invalid(format!("`{}` is a singleton", c.name)));
        }
        let fields = match init {
            Json::Null => serde_json::Map::new(),
            Json::Object(map) => map.clone(),
            other => return Err(Error::Type(format!("object initializer must be a document, got {other}"))),
        };
        let (attrs, refs) = self.elements().class_features(class)?;
        let known: BTreeSet<String> = attrs
            .iter()
            .chain(&refs)
            .map(|f| self.elements().feature(*f).map(|f| f.name().to_string()))
            .collect::<Result<_>>()?;
        for key in fields.keys() {
            if key != CLASS_KEY && !known.contains(key) {
                return Err(Error::Type(format!(
                    "`{}` has no feature `{key}`",
                    self.elements().class(class)?.name
                )));
            }
        }

        let id = self.alloc_id();
        let mut features = BTreeMap::new();
        for f in attrs.into_iter().chain(refs) {
            let feature = self.elements().feature(f)?;
            let name = feature.name().to_string();
            let (_, upper) = feature.bounds();
            let values = match fields.get(&name) {
                None | Some(Json::Null) => match feature {
                    Feature::Attribute(a) => a.default_value.clone().into_iter().collect(),
                    Feature::Reference(_) => Vec::new(),
                },
                Some(v) => {
                    let items: Vec<&Json> = match v {
                        Json::Array(items) => items.iter().collect(),
                        single => vec![single],
                    };
                    if let Some(u) = upper {
                        if items.len() > u as usize {
                            return Err(Error::Multiplicity(format!(
                                "`{name}` accepts at most {u} values, got {}",
                                items.len()
                            )));
                        }
                    }
                    let mut out = Vec::with_capacity(items.len());
                    for item in items {
                        let scalar = match self.elements().feature(f)? {
                            Feature::Reference(r) if r.is_containment => {
                                let target = r.target;
                                let child_class = self.nested_class(target, item)?;
                                let child = self.instantiate(
                                    model,
                                    child_class,
                                    item,
                                    Some(Container {
                                        object: id,
                                        reference: f,
                                    }),
                                )?;
                                Scalar::Ref(child)
                            }
                            feature => scalar_from_json(self.elements(), model, feature, item)?,
                        };
                        out.push(scalar);
                    }
                    out
                }
            };
            let vid = self.alloc_id();
            self.create(Element::Value(DValue {
                id: vid,
                owner: id,
                feature: f,
                values,
            }))?;
            features.insert(f, vid);
        }
        self.create(Element::Object(DObject {
            id,
            model,
            instance_of: class,
            features,
            container,
        }))?;
        self.create_node(id, Layout::default())?;
        Ok(id)
    }

    fn nested_class(&self, target: ElementId, init: &Json) -> Result<ElementId> {
        let Some(name) = init.get(CLASS_KEY).and_then(Json::as_str) else {
            return Ok(target);
        };
        let t = self.elements();
        let mm = t.owning_model(target)?;
        let class = t.class_by_name(mm, name)?.ok_or_else(|| Error::NoSuchChild {
            parent: mm,
            name: name.to_string(),
        })?;
        if !t.is_subclass_of(class.id, target)? {
            return Err(Error::Type(format!(
                "`{name}` is not a `{}`",
                t.class(target)?.name
            )));
        }
        Ok(class.id)
    }

    /// Edits the data of the feature named `feature` on `object`.
    pub fn mutate_feature(&mut self, object: ElementId, feature: &str, edit: FeatureEdit) -> Result<()> {
        let o = self.elements().object(object)?.clone();
        let f = self
            .elements()
            .feature_by_name(o.instance_of, feature)?
            .ok_or_else(|| Error::NoSuchChild {
                parent: object,
                name: feature.to_string(),
            })?;
        let fid = f.id();
        let (_, upper) = f.bounds();
        let containment = f.is_containment();
        let vid = *o
            .features
            .get(&fid)
            .ok_or_else(|| Error::Invalid(format!("{object} has no slot for `{feature}`")))?;
        let old = self.elements().value(vid)?.values.clone();
        let mut values = old.clone();
        match edit {
            FeatureEdit::Set(items) => {
                if let Some(u) = upper {
                    if items.len() > u as usize {
                        return Err(Error::Multiplicity(format!(
                            "`{feature}` accepts at most {u} values, got {}",
                            items.len()
                        )));
                    }
                }
                values = items
                    .into_iter()
                    .map(|s| check_scalar(self.elements(), f, s))
                    .collect::<Result<_>>()?;
            }
            FeatureEdit::Insert { index, value } => {
                if let Some(u) = upper {
                    if values.len() >= u as usize {
                        return Err(Error::Multiplicity(format!("`{feature}` is full ({u} values)")));
                    }
                }
                let value = check_scalar(self.elements(), f, value)?;
                match index {
                    Some(i) if i > values.len() => {
                        return Err(Error::Invalid(format!("insert index {i} out of range")));
                    }
                    Some(i) => values.insert(i, value),
                    None => values.push(value),
                }
            }
            FeatureEdit::Remove { index } => {
                if values.is_empty() {
                    return Err(Error::Invalid(format!("cannot remove from empty `{feature}`")));
                }
                let i = index.unwrap_or(values.len() - 1);
                if i >= values.len() {
                    return Err(Error::Invalid(format!("remove index {i} out of range")));
                }
                values.remove(i);
            }
            FeatureEdit::RemoveValue(v) => {
                let Some(i) = values.iter().position(|x| *x == v) else {
                    return Err(Error::Invalid(format!("`{feature}` does not hold {v:?}")));
                };
                values.remove(i);
            }
        }
        self.modify(vid, |e| {
            if let Element::Value(v) = e {
                v.values = values.clone();
            }
            Ok(())
        })?;
        if containment {
            let before: BTreeSet<ElementId> = old.iter().filter_map(Scalar::as_ref_target).collect();
            let after: Vec<ElementId> = values.iter().filter_map(Scalar::as_ref_target).collect();
            let after_set: BTreeSet<ElementId> = after.iter().copied().collect();
            if after_set.len() != after.len() {
                return Err(Error::Invalid(format!("`{feature}` would contain an object twice")));
            }
            for gone in before.difference(&after_set) {
                self.detach(*gone)?;
            }
            for added in after_set.difference(&before) {
                self.attach(
                    *added,
                    Container {
                        object,
                        reference: fid,
                    },
                )?;
            }
        }
        Ok(())
    }

    /// Turns a contained object into a root of its model.
    fn detach(&mut self, object: ElementId) -> Result<()> {
        let o = self.elements().object(object)?.clone();
        self.modify(object, |e| {
            if let Element::Object(o) = e {
                o.container = None;
            }
            Ok(())
        })?;
        self.modify(o.model, |e| {
            if let Element::Model(m) = e {
                if !m.root_objects.contains(&object) {
                    m.root_objects.push(object);
                }
            }
            Ok(())
        })
    }

    fn attach(&mut self, object: ElementId, container: Container) -> Result<()> {
        if self.elements().is_container_of(object, container.object)? {
            return Err(Error::Invalid(format!(
                "containing {object} in {} would create a containment cycle",
                container.object
            )));
        }
        let o = self.elements().object(object)?.clone();
        if o.model != self.elements().object(container.object)?.model {
            return Err(Error::Invalid("containment across models".into()));
        }
        match o.container {
            Some(prev) => {
                if let Some(v) = self.elements().feature_value(prev.object, prev.reference)? {
                    let vid = v.id;
                    self.modify(vid, |e| {
                        if let Element::Value(v) = e {
                            v.values.retain(|s| s.as_ref_target() != Some(object));
                        }
                        Ok(())
                    })?;
                }
            }
            None => {
                self.modify(o.model, |e| {
                    if let Element::Model(m) = e {
                        m.root_objects.retain(|r| *r != object);
                    }
                    Ok(())
                })?;
            }
        }
        self.modify(object, |e| {
            if let Element::Object(o) = e {
                o.container = Some(container);
            }
            Ok(())
        })
    }

    /// Deletes any element, cleaning up everything that pointed at it.
    pub fn delete_element(&mut self, id: ElementId) -> Result<()> {
        match self.elements().resolve(id)?.clone() {
            Element::Object(_) => self.delete_object(id),
            Element::Value(v) => {
                self.modify(v.owner, |e| {
                    if let Element::Object(o) = e {
                        o.features.remove(&v.feature);
                    }
                    Ok(())
                })?;
                self.delete(id).map(|_| ())
            }
            Element::Attribute(_) | Element::Reference(_) => {
                self.remove_feature(id)?;
                self.check_forest()
            }
            Element::Class(_) => {
                self.delete_class(id)?;
                self.check_forest()
            }
            Element::Enum(en) => {
                let used = self
                    .elements()
                    .iter()
                    .any(|e| matches!(e, Element::Attribute(a) if a.ty == AttrType::Enum(id)));
                if used {
                    return Err(Error::CoEvolution(format!("enum `{}` is still used by attributes", en.name)));
                }
                self.modify(en.package, |e| {
                    if let Element::Package(p) = e {
                        p.classifiers.retain(|c| *c != id);
                    }
                    Ok(())
                })?;
                self.delete(id).map(|_| ())
            }
            Element::Package(p) => {
                for c in p.classifiers.iter().rev() {
                    self.delete_element(*c)?;
                }
                self.modify(p.model, |e| {
                    if let Element::Model(m) = e {
                        m.packages.retain(|x| *x != id);
                    }
                    Ok(())
                })?;
                self.delete(id).map(|_| ())
            }
            Element::Model(m) => {
                let dependents: Vec<String> = self
                    .elements()
                    .models()
                    .filter(|other| other.conforms_to == Some(id))
                    .map(|other| other.name.clone())
                    .collect();
                if !dependents.is_empty() {
                    return Err(Error::CoEvolution(format!(
                        "metamodel `{}` still has conforming models: {}",
                        m.name,
                        dependents.join(", ")
                    )));
                }
                for root in m.root_objects.iter().rev() {
                    self.delete_object(*root)?;
                }
                for p in m.packages.iter().rev() {
                    self.delete_element(*p)?;
                }
                self.delete_node(id)?;
                self.delete(id).map(|_| ())
            }
        }
    }

    fn delete_object(&mut self, id: ElementId) -> Result<()> {
        for child in self.elements().contained_objects(id)?.into_iter().rev() {
            self.delete_object(child)?;
        }
        let o = self.elements().object(id)?.clone();
        if o.container.is_none() {
            self.modify(o.model, |e| {
                if let Element::Model(m) = e {
                    m.root_objects.retain(|r| *r != id);
                }
                Ok(())
            })?;
        }
        let pointing: Vec<ElementId> = self
            .elements()
            .iter()
            .filter_map(|e| match e {
                Element::Value(v) if v.owner != id && v.values.iter().any(|s| s.as_ref_target() == Some(id)) => {
                    Some(v.id)
                }
                _ => None,
            })
            .collect();
        for vid in pointing {
            self.modify(vid, |e| {
                if let Element::Value(v) = e {
                    v.values.retain(|s| s.as_ref_target() != Some(id));
                }
                Ok(())
            })?;
        }
        for vid in o.features.values() {
            self.delete(*vid)?;
        }
        self.delete_node(id)?;
        self.delete(id).map(|_| ())
    }

    /// Removes a feature from its class along with every value recorded for
    /// it. Refuses when that would leave contained objects without a
    /// container.
    pub(crate) fn remove_feature(&mut self, feature: ElementId) -> Result<()> {
        let f = self.elements().feature(feature)?;
        let owner = match f {
            Feature::Attribute(a) => a.owner,
            Feature::Reference(r) => r.owner,
        };
        let name = f.name().to_string();
        let containment = f.is_containment();
        let slots: Vec<DValue> = self
            .elements()
            .iter()
            .filter_map(|e| match e {
                Element::Value(v) if v.feature == feature => Some(v.clone()),
                _ => None,
            })
            .collect();
        if containment && slots.iter().any(|v| !v.values.is_empty()) {
            return Err(Error::CoEvolution(format!(
                "removing containment `{name}` would orphan contained objects"
            )));
        }
        for v in slots {
            self.modify(v.owner, |e| {
                if let Element::Object(o) = e {
                    o.features.remove(&feature);
                }
                Ok(())
            })?;
            self.delete(v.id)?;
        }
        self.modify(owner, |e| {
            if let Element::Class(c) = e {
                c.attributes.retain(|x| *x != feature);
                c.references.retain(|x| *x != feature);
            }
            Ok(())
        })?;
        self.delete(feature).map(|_| ())
    }

    fn delete_class(&mut self, class: ElementId) -> Result<()> {
        let instances: Vec<ElementId> = self
            .elements()
            .iter()
            .filter_map(|e| match e {
                Element::Object(o) if o.instance_of == class => Some(o.id),
                _ => None,
            })
            .collect();
        for o in instances.into_iter().rev() {
            if self.elements().contains(o) {
                self.delete_object(o)?;
            }
        }
        let incoming: Vec<ElementId> = self
            .elements()
            .iter()
            .filter_map(|e| match e {
                Element::Reference(r) if r.target == class && r.owner != class => Some(r.id),
                _ => None,
            })
            .collect();
        for r in incoming {
            self.remove_feature(r)?;
        }
        let c = self.elements().class(class)?.clone();
        for sub in self.elements().direct_subclasses(class) {
            self.modify(sub, |e| {
                if let Element::Class(s) = e {
                    s.extends.retain(|x| *x != class);
                }
                Ok(())
            })?;
            self.sync_instance_features(sub)?;
        }
        for f in c.attributes.iter().chain(&c.references).rev() {
            self.remove_feature(*f)?;
        }
        self.modify(c.package, |e| {
            if let Element::Package(p) = e {
                p.classifiers.retain(|x| *x != class);
            }
            Ok(())
        })?;
        self.delete_node(class)?;
        self.delete(class).map(|_| ())
    }

    /// Every contained object must sit in the value list of a live container.
    pub(crate) fn check_forest(&self) -> Result<()> {
        let t = self.elements();
        for e in t.iter() {
            if let Element::Object(o) = e {
                if let Some(c) = o.container {
                    let held = t
                        .get(c.object)
                        .and_then(|_| t.feature_value(c.object, c.reference).ok().flatten())
                        .map(|v| v.values.contains(&Scalar::Ref(o.id)))
                        .unwrap_or(false);
                    if !held {
                        return Err(Error::CoEvolution(format!("edit would orphan contained object {}", o.id)));
                    }
                }
            }
        }
        Ok(())
    }
}
