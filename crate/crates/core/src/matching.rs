//! Conflict structure between request classes and exact enumeration of the
//! matching set (maximal conflict-free selections) and the service-vector set
//! (all conflict-free selections, including the empty one).

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::model::NetworkSpec;

/// Hard cap on the number of classes accepted by the enumerators.
pub const MAX_CLASSES: usize = 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatchingError {
    #[error("{classes} request classes exceed the enumeration cap of {MAX_CLASSES}")]
    TooManyClasses { classes: usize },
}

/// Binary vector over request classes; bit `i` is class `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ClassSet(u32);

/// A maximal conflict-free selection of classes.
pub type Matching = ClassSet;
/// Any conflict-free selection of classes (possibly empty, possibly non-maximal).
pub type ServiceVector = ClassSet;

impl ClassSet {
    pub const EMPTY: ClassSet = ClassSet(0);

    pub fn from_bits(bits: u32) -> Self {
        ClassSet(bits)
    }

    pub fn from_classes(classes: &[usize]) -> Self {
        ClassSet(classes.iter().fold(0, |b, &i| b | (1 << i)))
    }

    /// Parses a 0/1 slice, element `i` being class `i`.
    pub fn from_slice(bits: &[u8]) -> Self {
        ClassSet(
            bits.iter()
                .enumerate()
                .filter(|(_, &b)| b != 0)
                .fold(0, |acc, (i, _)| acc | (1 << i)),
        )
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 & (1 << i) != 0
    }

    pub fn with(self, i: usize) -> Self {
        ClassSet(self.0 | (1 << i))
    }

    pub fn without(self, i: usize) -> Self {
        ClassSet(self.0 & !(1 << i))
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Component-wise `self <= other`.
    pub fn is_subset_of(self, other: ClassSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..32).filter(move |&i| self.contains(i))
    }

    pub fn to_vec(self, num_classes: usize) -> Vec<u8> {
        (0..num_classes).map(|i| self.contains(i) as u8).collect()
    }

    /// Renders the first `num_classes` bits, class 0 first (e.g. `"100001"`).
    pub fn to_bit_string(self, num_classes: usize) -> String {
        (0..num_classes)
            .map(|i| if self.contains(i) { '1' } else { '0' })
            .collect()
    }

    pub fn parse_bit_string(text: &str) -> Option<Self> {
        if text.len() > 32 {
            return None;
        }
        let mut bits = 0u32;
        for (i, c) in text.chars().enumerate() {
            match c {
                '1' => bits |= 1 << i,
                '0' => {}
                _ => return None,
            }
        }
        Some(ClassSet(bits))
    }

    /// Ordering key under which enumerator output is sorted: lexicographic on
    /// the bit string read from class 0, with `1` ranked before `0`.
    pub fn enumeration_key(self) -> u32 {
        !self.0.reverse_bits()
    }
}

impl fmt::Display for ClassSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = 32 - self.0.leading_zeros() as usize;
        write!(f, "{}", self.to_bit_string(width.max(1)))
    }
}

/// Pairs `(i, j)`, `i < j`, of classes that share at least one link.
pub fn conflict_pairs(spec: &NetworkSpec) -> BTreeSet<(usize, usize)> {
    let classes = spec.classes();
    let mut pairs = BTreeSet::new();
    for i in 0..classes.len() {
        for j in i + 1..classes.len() {
            if classes[i].link_mask() & classes[j].link_mask() != 0 {
                pairs.insert((i, j));
            }
        }
    }
    pairs
}

/// True when `set` uses every link at most once.
pub fn is_conflict_free(set: ClassSet, spec: &NetworkSpec) -> bool {
    let mut used = 0u64;
    for i in set.iter() {
        let mask = spec.class(i).link_mask();
        if used & mask != 0 {
            return false;
        }
        used |= mask;
    }
    true
}

/// True when no class outside `set` can be added without a link conflict.
pub fn is_maximal(set: ClassSet, spec: &NetworkSpec) -> bool {
    let used = links_used(set, spec);
    (0..spec.num_classes()).all(|r| set.contains(r) || spec.class(r).link_mask() & used != 0)
}

fn links_used(set: ClassSet, spec: &NetworkSpec) -> u64 {
    set.iter().fold(0, |m, i| m | spec.class(i).link_mask())
}

/// True iff every selected class has all of its links up in `link_state`
/// (bit `j` set = link `j` holds an entanglement this slot).
pub fn servable_under(sigma: ServiceVector, link_state: u64, spec: &NetworkSpec) -> bool {
    sigma.iter().all(|i| {
        let mask = spec.class(i).link_mask();
        mask & link_state == mask
    })
}

/// Classes whose links are all up in `link_state`.
pub fn servable_classes(link_state: u64, spec: &NetworkSpec) -> ClassSet {
    let mut set = ClassSet::EMPTY;
    for (i, class) in spec.classes().iter().enumerate() {
        if class.link_mask() & link_state == class.link_mask() {
            set = set.with(i);
        }
    }
    set
}

fn check_cap(spec: &NetworkSpec) -> Result<(), MatchingError> {
    if spec.num_classes() > MAX_CLASSES {
        Err(MatchingError::TooManyClasses {
            classes: spec.num_classes(),
        })
    } else {
        Ok(())
    }
}

struct Search<'a> {
    masks: Vec<u64>,
    // later_conflict[i]: some class after i shares a link with i
    later_conflict: Vec<bool>,
    maximal_only: bool,
    out: &'a mut Vec<ClassSet>,
}

impl Search<'_> {
    fn visit(&mut self, i: usize, chosen: ClassSet, used: u64) {
        if i == self.masks.len() {
            if !self.maximal_only || self.is_maximal(chosen, used) {
                self.out.push(chosen);
            }
            return;
        }
        let free = self.masks[i] & used == 0;
        if free {
            self.visit(i + 1, chosen.with(i), used | self.masks[i]);
        }
        // A free class can only be left out of a maximal set if a later
        // class ends up blocking it.
        if !free || !self.maximal_only || self.later_conflict[i] {
            self.visit(i + 1, chosen, used);
        }
    }

    fn is_maximal(&self, chosen: ClassSet, used: u64) -> bool {
        self.masks
            .iter()
            .enumerate()
            .all(|(r, &m)| chosen.contains(r) || m & used != 0)
    }
}

fn enumerate(spec: &NetworkSpec, maximal_only: bool) -> Result<Vec<ClassSet>, MatchingError> {
    check_cap(spec)?;
    let masks: Vec<u64> = spec.classes().iter().map(|c| c.link_mask()).collect();
    let later_conflict = (0..masks.len())
        .map(|i| masks[i + 1..].iter().any(|&m| m & masks[i] != 0))
        .collect();
    let mut out = Vec::new();
    Search {
        masks,
        later_conflict,
        maximal_only,
        out: &mut out,
    }
    .visit(0, ClassSet::EMPTY, 0);
    Ok(out)
}

/// Every matching, each once, ordered by [`ClassSet::enumeration_key`].
pub fn enumerate_matchings(spec: &NetworkSpec) -> Result<Vec<Matching>, MatchingError> {
    enumerate(spec, true)
}

/// Every service vector including the zero vector, ordered by
/// [`ClassSet::enumeration_key`].
pub fn enumerate_service_vectors(spec: &NetworkSpec) -> Result<Vec<ServiceVector>, MatchingError> {
    enumerate(spec, false)
}

/// Matchings and service vectors of one network, computed once.
#[derive(Debug, Clone)]
pub struct MatchingTable {
    num_classes: usize,
    matchings: Vec<Matching>,
    service_vectors: Vec<ServiceVector>,
    // first_containing[i]: index into `matchings` of the first matching serving class i
    first_containing: Vec<usize>,
}

impl MatchingTable {
    pub fn new(spec: &NetworkSpec) -> Result<Self, MatchingError> {
        let matchings = enumerate_matchings(spec)?;
        let service_vectors = enumerate_service_vectors(spec)?;
        let first_containing = (0..spec.num_classes())
            .map(|i| {
                matchings
                    .iter()
                    .position(|m| m.contains(i))
                    .expect("every class extends to a maximal matching")
            })
            .collect();
        Ok(Self {
            num_classes: spec.num_classes(),
            matchings,
            service_vectors,
            first_containing,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn matchings(&self) -> &[Matching] {
        &self.matchings
    }

    pub fn service_vectors(&self) -> &[ServiceVector] {
        &self.service_vectors
    }

    /// First matching (in enumeration order) that serves class `i`.
    pub fn first_matching_with(&self, i: usize) -> usize {
        self.first_containing[i]
    }
}
