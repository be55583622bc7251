//! Finite posets with a unique bottom element.
//!
//! Elements are addressed by [`ElementId`], a dense index equal to the
//! element's position in the canonical topological order. Every per-element
//! array in this crate is indexed the same way, so numerical results do not
//! depend on hash iteration order.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bitset::BitSet;
use crate::error::{Error, Result};

/// Dense index of an element: its position in the canonical topological order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct ElementId(pub(crate) usize);

impl ElementId {
    /// The bottom element always sits at index zero.
    pub const BOTTOM: ElementId = ElementId(0);

    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// A validated finite poset.
///
/// The cover relation is stored in both directions and the transitive
/// closure is kept as one bitset per element, so `leq` is a single bit test.
#[derive(Clone)]
pub struct Poset {
    labels: Vec<String>,
    index: HashMap<String, usize>,
    /// `lower_covers[x]`: elements `s` with `s ⋖ x`, ascending.
    lower_covers: Vec<Vec<usize>>,
    /// `upper_covers[x]`: elements `s` with `x ⋖ s`, ascending.
    upper_covers: Vec<Vec<usize>>,
    /// `below[x]` holds every `s ≤ x`.
    below: Vec<BitSet>,
    /// `above[x]` holds every `s ≥ x`.
    above: Vec<BitSet>,
}

impl fmt::Debug for Poset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Poset")
            .field("labels", &self.labels)
            .field("covers", &self.cover_pairs().collect::<Vec<_>>())
            .finish()
    }
}

impl PartialEq for Poset {
    fn eq(&self, other: &Self) -> bool {
        self.labels == other.labels && self.lower_covers == other.lower_covers
    }
}

impl Eq for Poset {}

impl Poset {
    /// Builds a poset from element labels and `(child, parent)` cover pairs.
    ///
    /// The canonical order is Kahn's algorithm with ties broken by the order
    /// of `labels`. Covers implied by transitivity are rejected.
    pub fn build<S: AsRef<str>>(labels: &[S], covers: &[(S, S)]) -> Result<Poset> {
        if labels.is_empty() {
            return Err(Error::EmptyPoset);
        }
        let n = labels.len();
        let mut input_index = HashMap::with_capacity(n);
        for (i, label) in labels.iter().enumerate() {
            let label = label.as_ref();
            if input_index.insert(label.to_owned(), i).is_some() {
                return Err(Error::DuplicateLabel(label.to_owned()));
            }
        }
        let lookup = |label: &str| {
            input_index
                .get(label)
                .copied()
                .ok_or_else(|| Error::UnknownLabel(label.to_owned()))
        };

        let mut up: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut indegree = vec![0usize; n];
        for (child, parent) in covers {
            let (c, p) = (lookup(child.as_ref())?, lookup(parent.as_ref())?);
            if c == p {
                return Err(Error::CycleDetected(child.as_ref().to_owned()));
            }
            if up[c].contains(&p) {
                return Err(Error::RedundantCoverEdge {
                    child: child.as_ref().to_owned(),
                    parent: parent.as_ref().to_owned(),
                });
            }
            up[c].push(p);
            indegree[p] += 1;
        }

        let minimal: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        if minimal.len() > 1 {
            return Err(Error::MultipleMinimalElements(
                minimal.iter().map(|&i| labels[i].as_ref().to_owned()).collect(),
            ));
        }

        // Kahn's method; the ready set is kept ordered by input position.
        let mut ready: std::collections::BTreeSet<usize> = minimal.into_iter().collect();
        let mut order = Vec::with_capacity(n);
        let mut remaining = indegree.clone();
        while let Some(next) = ready.pop_first() {
            order.push(next);
            for &p in &up[next] {
                remaining[p] -= 1;
                if remaining[p] == 0 {
                    ready.insert(p);
                }
            }
        }
        if order.len() != n {
            let stuck = (0..n).find(|&i| remaining[i] > 0).expect("cycle member");
            return Err(Error::CycleDetected(labels[stuck].as_ref().to_owned()));
        }

        let mut omega = vec![0usize; n];
        for (pos, &orig) in order.iter().enumerate() {
            omega[orig] = pos;
        }
        let mut upper_covers: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut lower_covers: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (orig, parents) in up.iter().enumerate() {
            for &p in parents {
                upper_covers[omega[orig]].push(omega[p]);
                lower_covers[omega[p]].push(omega[orig]);
            }
        }
        upper_covers.iter_mut().for_each(|v| v.sort_unstable());
        lower_covers.iter_mut().for_each(|v| v.sort_unstable());

        let ordered_labels: Vec<String> = order.iter().map(|&i| labels[i].as_ref().to_owned()).collect();

        let mut below: Vec<BitSet> = Vec::with_capacity(n);
        for x in 0..n {
            let mut set = BitSet::new(n);
            set.insert(x);
            for &c in &lower_covers[x] {
                set.union_with(&below[c]);
            }
            below.push(set);
        }
        let mut above: Vec<BitSet> = vec![BitSet::new(n); n];
        for x in (0..n).rev() {
            let mut set = BitSet::new(n);
            set.insert(x);
            for &p in &upper_covers[x] {
                set.union_with(&above[p]);
            }
            above[x] = set;
        }

        // A cover (c, x) is redundant when another lower cover of x lies above c.
        for x in 0..n {
            for &c in &lower_covers[x] {
                if lower_covers[x].iter().any(|&d| d != c && below[d].contains(c)) {
                    return Err(Error::RedundantCoverEdge {
                        child: ordered_labels[c].clone(),
                        parent: ordered_labels[x].clone(),
                    });
                }
            }
        }

        let index = ordered_labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i))
            .collect();
        Ok(Poset {
            labels: ordered_labels,
            index,
            lower_covers,
            upper_covers,
            below,
            above,
        })
    }

    /// Builds a poset from an arbitrary strict order relation on `labels`,
    /// keeping only the covers (transitive reduction).
    ///
    /// `less(i, j)` must be a strict partial order on input positions.
    pub fn from_order<S, F>(labels: &[S], less: F) -> Result<Poset>
    where
        S: AsRef<str>,
        F: Fn(usize, usize) -> bool,
    {
        let n = labels.len();
        let mut strictly_below: Vec<BitSet> = Vec::with_capacity(n);
        for j in 0..n {
            let mut set = BitSet::new(n);
            for i in 0..n {
                if i != j && less(i, j) {
                    set.insert(i);
                }
            }
            strictly_below.push(set);
        }
        let mut covers = Vec::new();
        for j in 0..n {
            // Anything strictly below some other element of below(j) is not a cover.
            let mut implied = BitSet::new(n);
            for i in strictly_below[j].iter() {
                implied.union_with(&strictly_below[i]);
            }
            for i in strictly_below[j].iter() {
                if !implied.contains(i) {
                    covers.push((labels[i].as_ref(), labels[j].as_ref()));
                }
            }
        }
        let names: Vec<&str> = labels.iter().map(|l| l.as_ref()).collect();
        Poset::build(&names, &covers)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn bottom(&self) -> ElementId {
        ElementId::BOTTOM
    }

    /// All elements in canonical order.
    pub fn elements(&self) -> impl ExactSizeIterator<Item = ElementId> + DoubleEndedIterator {
        (0..self.len()).map(ElementId)
    }

    /// Elements of `S⁺`, i.e. everything except the bottom.
    pub fn non_bottom(&self) -> impl ExactSizeIterator<Item = ElementId> + DoubleEndedIterator {
        (1..self.len()).map(ElementId)
    }

    pub fn label(&self, x: ElementId) -> &str {
        &self.labels[x.0]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn id(&self, label: &str) -> Result<ElementId> {
        self.index
            .get(label)
            .map(|&i| ElementId(i))
            .ok_or_else(|| Error::UnknownLabel(label.to_owned()))
    }

    /// Validates an index coming from outside the poset.
    pub fn element(&self, index: usize) -> Result<ElementId> {
        if index < self.len() {
            Ok(ElementId(index))
        } else {
            Err(Error::UnknownElement(index))
        }
    }

    fn check(&self, x: ElementId) -> Result<()> {
        self.element(x.0).map(|_| ())
    }

    /// `s ≤ x`.
    pub fn leq(&self, s: ElementId, x: ElementId) -> Result<bool> {
        self.check(s)?;
        self.check(x)?;
        Ok(self.below[x.0].contains(s.0))
    }

    /// Unchecked `s ≤ x` for indices already known to be in range.
    #[inline]
    pub(crate) fn le(&self, s: usize, x: usize) -> bool {
        self.below[x].contains(s)
    }

    /// The principal ideal `↓x`, ascending.
    pub fn down_set(&self, x: ElementId) -> Result<Vec<ElementId>> {
        self.check(x)?;
        Ok(self.below[x.0].iter().map(ElementId).collect())
    }

    /// The principal filter `↑x`, ascending.
    pub fn up_set(&self, x: ElementId) -> Result<Vec<ElementId>> {
        self.check(x)?;
        Ok(self.above[x.0].iter().map(ElementId).collect())
    }

    pub(crate) fn below_bits(&self, x: usize) -> &BitSet {
        &self.below[x]
    }

    pub fn lower_covers(&self, x: ElementId) -> impl Iterator<Item = ElementId> + '_ {
        self.lower_covers[x.0].iter().map(|&i| ElementId(i))
    }

    pub fn upper_covers(&self, x: ElementId) -> impl Iterator<Item = ElementId> + '_ {
        self.upper_covers[x.0].iter().map(|&i| ElementId(i))
    }

    pub(crate) fn lower_cover_indices(&self, x: usize) -> &[usize] {
        &self.lower_covers[x]
    }

    pub(crate) fn upper_cover_indices(&self, x: usize) -> &[usize] {
        &self.upper_covers[x]
    }

    /// Cover pairs `(child, parent)` in canonical order.
    pub fn cover_pairs(&self) -> impl Iterator<Item = (ElementId, ElementId)> + '_ {
        self.lower_covers
            .iter()
            .enumerate()
            .flat_map(|(x, cs)| cs.iter().map(move |&c| (ElementId(c), ElementId(x))))
    }

    /// Least upper bound, if one exists.
    pub fn join(&self, x: ElementId, y: ElementId) -> Result<Option<ElementId>> {
        self.check(x)?;
        self.check(y)?;
        let mut common = self.above[x.0].clone();
        common.intersect_with(&self.above[y.0]);
        // The candidate is the first common upper bound in topological order;
        // it is the join only if it lies below every other common upper bound.
        let Some(first) = common.iter().next() else {
            return Ok(None);
        };
        let least = common.iter().all(|z| self.le(first, z));
        Ok(least.then_some(ElementId(first)))
    }

    /// Greatest lower bound, if one exists.
    pub fn meet(&self, x: ElementId, y: ElementId) -> Result<Option<ElementId>> {
        self.check(x)?;
        self.check(y)?;
        let mut common = self.below[x.0].clone();
        common.intersect_with(&self.below[y.0]);
        let Some(last) = common.iter().last() else {
            return Ok(None);
        };
        let greatest = common.iter().all(|z| self.le(z, last));
        Ok(greatest.then_some(ElementId(last)))
    }

    /// Whether every pair of elements has a join and a meet.
    pub fn is_lattice(&self) -> bool {
        self.elements().all(|x| {
            self.elements().all(|y| {
                matches!(self.join(x, y), Ok(Some(_))) && matches!(self.meet(x, y), Ok(Some(_)))
            })
        })
    }

    pub fn covering_graph(&self) -> CoveringGraph {
        CoveringGraph {
            vertices: self.len(),
            edges: self
                .cover_pairs()
                .map(|(child, parent)| CoverEdge { lower: child, upper: parent, weight: None })
                .collect(),
        }
    }

    pub fn to_json(&self) -> PosetJson {
        PosetJson {
            elements: self.labels.clone(),
            covers: self
                .cover_pairs()
                .map(|(c, p)| (self.label(c).to_owned(), self.label(p).to_owned()))
                .collect(),
            bottom: Some(self.labels[0].clone()),
        }
    }

    pub fn from_json(json: &PosetJson) -> Result<Poset> {
        let poset = Poset::build(&json.elements, &json.covers)?;
        if let Some(bottom) = &json.bottom {
            if bottom != poset.label(poset.bottom()) {
                return Err(Error::BottomMismatch {
                    declared: bottom.clone(),
                    found: poset.label(poset.bottom()).to_owned(),
                });
            }
        }
        Ok(poset)
    }
}

/// Undirected covering graph. Each edge keeps its orientation in the order
/// (`lower ⋖ upper`) so weights can be interpreted.
#[derive(Debug, Clone, PartialEq)]
pub struct CoveringGraph {
    pub vertices: usize,
    pub edges: Vec<CoverEdge>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverEdge {
    pub lower: ElementId,
    pub upper: ElementId,
    pub weight: Option<f64>,
}

/// On-disk poset schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosetJson {
    pub elements: Vec<String>,
    #[serde(default)]
    pub covers: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bottom: Option<String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn diamond() -> Poset {
        Poset::build(
            &["⊥", "x1", "x2", "x3"],
            &[("⊥", "x1"), ("⊥", "x2"), ("x1", "x3"), ("x2", "x3")],
        )
        .unwrap()
    }

    fn chain4() -> Poset {
        Poset::build(&["0", "1", "2", "3"], &[("0", "1"), ("1", "2"), ("2", "3")]).unwrap()
    }

    fn ids(p: &Poset, labels: &[&str]) -> Vec<ElementId> {
        let mut v: Vec<_> = labels.iter().map(|l| p.id(l).unwrap()).collect();
        v.sort();
        v
    }

    #[test]
    fn diamond_structure() {
        let d = diamond();
        assert_eq!(d.len(), 4);
        assert_eq!(d.label(d.bottom()), "⊥");
        let [b, x1, x2, x3] = ["⊥", "x1", "x2", "x3"].map(|l| d.id(l).unwrap());
        assert!(d.leq(b, x3).unwrap());
        assert!(!d.leq(x1, x2).unwrap());
        assert!(d.leq(x3, x3).unwrap());
        assert_eq!(d.down_set(x3).unwrap(), ids(&d, &["⊥", "x1", "x2", "x3"]));
        assert_eq!(d.down_set(b).unwrap(), vec![b]);
        assert_eq!(d.up_set(x1).unwrap(), ids(&d, &["x1", "x3"]));
        assert_eq!(d.up_set(b).unwrap().len(), 4);
        assert_eq!(d.join(x1, x2).unwrap(), Some(x3));
        assert_eq!(d.meet(x1, x2).unwrap(), Some(b));
        assert!(d.is_lattice());
        let g = d.covering_graph();
        assert_eq!((g.vertices, g.edges.len()), (4, 4));
    }

    #[test]
    fn chain_queries() {
        let c = chain4();
        let id = |l| c.id(l).unwrap();
        assert_eq!(c.down_set(id("2")).unwrap(), ids(&c, &["0", "1", "2"]));
        assert_eq!(c.up_set(id("2")).unwrap(), ids(&c, &["2", "3"]));
        assert_eq!(c.join(id("1"), id("2")).unwrap(), Some(id("2")));
        assert_eq!(c.covering_graph().edges.len(), 3);
    }

    #[test]
    fn singleton_and_missing_join() {
        let s = Poset::build::<&str>(&["a"], &[]).unwrap();
        assert_eq!(s.label(s.bottom()), "a");
        assert_eq!(s.covering_graph().edges.len(), 0);

        let v = Poset::build(&["⊥", "a", "b"], &[("⊥", "a"), ("⊥", "b")]).unwrap();
        assert_eq!(v.join(v.id("a").unwrap(), v.id("b").unwrap()).unwrap(), None);
        assert!(!v.is_lattice());
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(
            Poset::build::<&str>(&["a", "b"], &[]),
            Err(Error::MultipleMinimalElements(_))
        ));
        assert!(matches!(
            Poset::build(&["a", "a"], &[("a", "a")]),
            Err(Error::DuplicateLabel(_))
        ));
        assert!(matches!(
            Poset::build(&["a", "b"], &[("a", "c")]),
            Err(Error::UnknownLabel(_))
        ));
        assert!(matches!(
            Poset::build(&["r", "a", "b"], &[("r", "a"), ("a", "b"), ("b", "a")]),
            Err(Error::CycleDetected(_))
        ));
        assert!(matches!(
            Poset::build(&["0", "1", "2"], &[("0", "1"), ("1", "2"), ("0", "2")]),
            Err(Error::RedundantCoverEdge { .. })
        ));
        assert!(matches!(Poset::build::<&str>(&[], &[]), Err(Error::EmptyPoset)));
    }

    #[test]
    fn unknown_element_is_rejected() {
        let d = diamond();
        assert!(matches!(d.leq(ElementId(0), ElementId(9)), Err(Error::UnknownElement(9))));
        assert!(d.down_set(ElementId(4)).is_err());
    }

    #[test]
    fn canonical_order_follows_input_ties() {
        let a = Poset::build(&["⊥", "b", "a"], &[("⊥", "a"), ("⊥", "b")]).unwrap();
        assert_eq!(a.labels(), &["⊥", "b", "a"]);
        let b = Poset::build(&["a", "⊥", "b"], &[("⊥", "b"), ("⊥", "a")]).unwrap();
        assert_eq!(b.labels(), &["⊥", "a", "b"]);
    }

    #[test]
    fn from_order_reduces_transitive_edges() {
        let labels = ["0", "1", "2", "3"];
        let p = Poset::from_order(&labels, |i, j| i < j).unwrap();
        assert_eq!(p, chain4());
    }

    #[test]
    fn json_round_trip_and_bottom_check() {
        let d = diamond();
        let json = d.to_json();
        assert_eq!(Poset::from_json(&json).unwrap(), d);
        let mut wrong = json.clone();
        wrong.bottom = Some("x1".into());
        assert!(matches!(Poset::from_json(&wrong), Err(Error::BottomMismatch { .. })));
        let text = r#"{"elements":["⊥","x1"],"covers":[["⊥","x1"]]}"#;
        let parsed: PosetJson = serde_json::from_str(text).unwrap();
        assert_eq!(Poset::from_json(&parsed).unwrap().len(), 2);
    }
}
