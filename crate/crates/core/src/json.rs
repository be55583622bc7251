//! JSON schemas shared by the library and the command-line front end.

use std::fmt;
use std::sync::Arc;

use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::coords::Distribution;
use crate::error::{Error, Result};
use crate::poset::{Poset, PosetJson};

/// A `label → value` map that keeps insertion order when serialized.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabelMap<T>(pub Vec<(String, T)>);

impl<T> LabelMap<T> {
    pub fn get(&self, label: &str) -> Option<&T> {
        self.0.iter().find(|(l, _)| l == label).map(|(_, v)| v)
    }

    /// Values for every element of `poset`, in canonical order.
    pub fn values_for(&self, poset: &Poset) -> Result<Vec<T>>
    where
        T: Copy,
    {
        for (label, _) in &self.0 {
            poset.id(label)?;
        }
        if self.0.len() != poset.len() {
            return Err(Error::LengthMismatch { expected: poset.len(), got: self.0.len() });
        }
        poset
            .labels()
            .iter()
            .map(|l| self.get(l).copied().ok_or_else(|| Error::UnknownLabel(l.clone())))
            .collect()
    }

    pub fn from_values(poset: &Poset, values: &[T]) -> Self
    where
        T: Copy,
    {
        LabelMap(poset.labels().iter().cloned().zip(values.iter().copied()).collect())
    }
}

impl<T: Serialize> Serialize for LabelMap<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

impl<'de, T: Deserialize<'de>> Deserialize<'de> for LabelMap<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct MapVisitor<T>(std::marker::PhantomData<T>);

        impl<'de, T: Deserialize<'de>> Visitor<'de> for MapVisitor<T> {
            type Value = LabelMap<T>;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a map from element labels to values")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> std::result::Result<Self::Value, A::Error> {
                let mut entries = Vec::with_capacity(access.size_hint().unwrap_or(0));
                while let Some((k, v)) = access.next_entry::<String, T>()? {
                    if entries.iter().any(|(e, _): &(String, T)| *e == k) {
                        return Err(serde::de::Error::custom(format!("duplicate label `{k}`")));
                    }
                    entries.push((k, v));
                }
                Ok(LabelMap(entries))
            }
        }

        deserializer.deserialize_map(MapVisitor(std::marker::PhantomData))
    }
}

/// `{ "poset": ..., "p": {label: prob} }`. Extra fields (such as those
/// written by the structure learners) are ignored on input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionJson {
    pub poset: PosetJson,
    pub p: LabelMap<f64>,
}

impl DistributionJson {
    pub fn from_distribution(d: &Distribution) -> Self {
        DistributionJson {
            poset: d.poset().to_json(),
            p: LabelMap::from_values(d.poset(), d.probs()),
        }
    }

    pub fn to_distribution(&self) -> Result<Distribution> {
        let poset = Arc::new(Poset::from_json(&self.poset)?);
        self.to_distribution_on(poset)
    }

    /// Reads the probabilities against an already-built poset.
    pub fn to_distribution_on(&self, poset: Arc<Poset>) -> Result<Distribution> {
        let values = self.p.values_for(&poset)?;
        Distribution::new(poset, values)
    }
}
