//! Finite groups given by multiplication tables, monomorphisms between them,
//! and left transversals of monomorphism images.
//!
//! Elements are plain indices `0..order`, with `0` pinned as the identity.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Largest group order accepted by [`FiniteGroup::from_table`].
pub const MAX_GROUP_ORDER: usize = 64;

/// An element of a [`FiniteGroup`], addressed by index.
pub type Elem = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupAxiom {
    Identity,
    Inverses,
    LatinSquare,
    Associativity,
}

impl fmt::Display for GroupAxiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GroupAxiom::Identity => "identity",
            GroupAxiom::Inverses => "inverses",
            GroupAxiom::LatinSquare => "latin-square",
            GroupAxiom::Associativity => "associativity",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroupError {
    #[error("multiplication table is empty")]
    EmptyTable,
    #[error("multiplication table is not square: row {row} has {len} entries, expected {expected}")]
    NotSquare {
        row: usize,
        len: usize,
        expected: usize,
    },
    #[error("table entry ({row},{col}) = {value} is out of range for order {order}")]
    EntryOutOfRange {
        row: usize,
        col: usize,
        value: usize,
        order: usize,
    },
    #[error("group of order {order} exceeds the limit of {MAX_GROUP_ORDER}")]
    GroupTooLarge { order: usize },
    #[error("not a group ({reason}): witness ({}, {}, {})", witness.0, witness.1, witness.2)]
    NotAGroup {
        reason: GroupAxiom,
        witness: (usize, usize, usize),
    },
    #[error("element names: expected {expected}, got {got}")]
    NameCount { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MonoError {
    #[error("map has {got} entries but the source group has order {expected}")]
    WrongLength { expected: usize, got: usize },
    #[error("map sends {element} to {value}, outside the target of order {order}")]
    OutOfRange {
        element: usize,
        value: usize,
        order: usize,
    },
    #[error("map is not injective: {0} and {1} have the same image")]
    NotInjective(Elem, Elem),
    #[error("map is not a homomorphism: fails on the pair ({0}, {1})")]
    NotHomomorphism(Elem, Elem),
    #[error("cannot compose: target of the first map is not the source of the second")]
    NotComposable,
}

/// A finite group given extensionally by its multiplication table.
#[derive(Clone, PartialEq, Eq)]
pub struct FiniteGroup {
    order: usize,
    table: Vec<Elem>,
    inverse: Vec<Elem>,
    names: Option<Vec<String>>,
}

impl fmt::Debug for FiniteGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FiniteGroup")
            .field("order", &self.order)
            .finish_non_exhaustive()
    }
}

impl FiniteGroup {
    /// Validates a raw multiplication table. Row `i`, column `j` holds `i * j`.
    pub fn from_table(rows: &[Vec<usize>]) -> Result<Self, GroupError> {
        let n = rows.len();
        if n == 0 {
            return Err(GroupError::EmptyTable);
        }
        if n > MAX_GROUP_ORDER {
            return Err(GroupError::GroupTooLarge { order: n });
        }
        for (row, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(GroupError::NotSquare {
                    row,
                    len: r.len(),
                    expected: n,
                });
            }
            for (col, &value) in r.iter().enumerate() {
                if value >= n {
                    return Err(GroupError::EntryOutOfRange {
                        row,
                        col,
                        value,
                        order: n,
                    });
                }
            }
        }
        let table: Vec<Elem> = rows.iter().flatten().copied().collect();
        let at = |i: usize, j: usize| table[i * n + j];

        for i in 0..n {
            if at(0, i) != i {
                return Err(GroupError::NotAGroup {
                    reason: GroupAxiom::Identity,
                    witness: (0, i, at(0, i)),
                });
            }
            if at(i, 0) != i {
                return Err(GroupError::NotAGroup {
                    reason: GroupAxiom::Identity,
                    witness: (i, 0, at(i, 0)),
                });
            }
        }

        let mut inverse = vec![0; n];
        for (i, slot) in inverse.iter_mut().enumerate() {
            match (0..n).find(|&j| at(i, j) == 0 && at(j, i) == 0) {
                Some(j) => *slot = j,
                None => {
                    return Err(GroupError::NotAGroup {
                        reason: GroupAxiom::Inverses,
                        witness: (i, i, at(i, i)),
                    })
                }
            }
        }

        let mut seen = vec![false; n];
        for i in 0..n {
            seen.iter_mut().for_each(|s| *s = false);
            for j in 0..n {
                let k = at(i, j);
                if std::mem::replace(&mut seen[k], true) {
                    return Err(GroupError::NotAGroup {
                        reason: GroupAxiom::LatinSquare,
                        witness: (i, j, k),
                    });
                }
            }
            seen.iter_mut().for_each(|s| *s = false);
            for j in 0..n {
                let k = at(j, i);
                if std::mem::replace(&mut seen[k], true) {
                    return Err(GroupError::NotAGroup {
                        reason: GroupAxiom::LatinSquare,
                        witness: (j, i, k),
                    });
                }
            }
        }

        for i in 0..n {
            for j in 0..n {
                let ij = at(i, j);
                for k in 0..n {
                    if at(ij, k) != at(i, at(j, k)) {
                        return Err(GroupError::NotAGroup {
                            reason: GroupAxiom::Associativity,
                            witness: (i, j, k),
                        });
                    }
                }
            }
        }

        Ok(FiniteGroup {
            order: n,
            table,
            inverse,
            names: None,
        })
    }

    pub fn trivial() -> Self {
        FiniteGroup {
            order: 1,
            table: vec![0],
            inverse: vec![0],
            names: None,
        }
    }

    /// The cyclic group of order `n`, element `k` standing for `k mod n`.
    pub fn cyclic(n: usize) -> Result<Self, GroupError> {
        let rows: Vec<Vec<usize>> = (0..n).map(|i| (0..n).map(|j| (i + j) % n).collect()).collect();
        Self::from_table(&rows)
    }

    /// The dihedral group of order `2n`; `i + n·j` stands for `rⁱsʲ`.
    pub fn dihedral(n: usize) -> Result<Self, GroupError> {
        let enc = |i: usize, j: usize| i % n + n * (j % 2);
        let rows: Vec<Vec<usize>> = (0..2 * n)
            .map(|a| {
                let (i, j) = (a % n, a / n);
                (0..2 * n)
                    .map(|b| {
                        let (k, l) = (b % n, b / n);
                        let k = if j == 1 { n - k } else { k };
                        enc(i + k, j + l)
                    })
                    .collect()
            })
            .collect();
        Self::from_table(&rows)
    }

    /// `A × B`; `a + |A|·b` stands for `(a, b)`.
    pub fn direct_product(a: &FiniteGroup, b: &FiniteGroup) -> Result<Self, GroupError> {
        let (m, n) = (a.order, b.order);
        let rows: Vec<Vec<usize>> = (0..m * n)
            .map(|x| {
                (0..m * n)
                    .map(|y| a.mul(x % m, y % m) + m * b.mul(x / m, y / m))
                    .collect()
            })
            .collect();
        Self::from_table(&rows)
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self, GroupError> {
        if names.len() != self.order {
            return Err(GroupError::NameCount {
                expected: self.order,
                got: names.len(),
            });
        }
        self.names = Some(names);
        Ok(self)
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn is_trivial(&self) -> bool {
        self.order == 1
    }

    #[inline]
    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        self.table[a * self.order + b]
    }

    #[inline]
    pub fn inv(&self, a: Elem) -> Elem {
        self.inverse[a]
    }

    pub fn elements(&self) -> std::ops::Range<Elem> {
        0..self.order
    }

    pub fn name(&self, a: Elem) -> String {
        match &self.names {
            Some(names) => names[a].clone(),
            None => a.to_string(),
        }
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    pub fn table_rows(&self) -> Vec<Vec<usize>> {
        self.table.chunks(self.order).map(|r| r.to_vec()).collect()
    }

    pub fn element_order(&self, a: Elem) -> usize {
        let mut x = a;
        let mut k = 1;
        while x != 0 {
            x = self.mul(x, a);
            k += 1;
        }
        k
    }
}

/// An injective homomorphism between finite groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Monomorphism {
    source: Arc<FiniteGroup>,
    target: Arc<FiniteGroup>,
    map: Vec<Elem>,
    preimage: Vec<Option<Elem>>,
    // For every target element x: (minimal representative t of x·image, c with x = t·map(c)).
    coset: Vec<(Elem, Elem)>,
    transversal: Vec<Elem>,
}

impl Monomorphism {
    pub fn new(
        source: Arc<FiniteGroup>,
        target: Arc<FiniteGroup>,
        map: Vec<Elem>,
    ) -> Result<Self, MonoError> {
        if map.len() != source.order() {
            return Err(MonoError::WrongLength {
                expected: source.order(),
                got: map.len(),
            });
        }
        let mut preimage = vec![None; target.order()];
        for (element, &value) in map.iter().enumerate() {
            if value >= target.order() {
                return Err(MonoError::OutOfRange {
                    element,
                    value,
                    order: target.order(),
                });
            }
            if let Some(other) = preimage[value] {
                return Err(MonoError::NotInjective(other, element));
            }
            preimage[value] = Some(element);
        }
        for i in source.elements() {
            for j in source.elements() {
                if map[source.mul(i, j)] != target.mul(map[i], map[j]) {
                    return Err(MonoError::NotHomomorphism(i, j));
                }
            }
        }

        let mut coset = vec![(usize::MAX, 0); target.order()];
        let mut transversal = Vec::new();
        for t in target.elements() {
            if coset[t].0 != usize::MAX {
                continue;
            }
            transversal.push(t);
            for c in source.elements() {
                coset[target.mul(t, map[c])] = (t, c);
            }
        }

        Ok(Monomorphism {
            source,
            target,
            map,
            preimage,
            coset,
            transversal,
        })
    }

    pub fn identity(group: Arc<FiniteGroup>) -> Self {
        let map = group.elements().collect();
        Self::new(group.clone(), group, map).expect("identity map is a monomorphism")
    }

    pub fn source(&self) -> &Arc<FiniteGroup> {
        &self.source
    }

    pub fn target(&self) -> &Arc<FiniteGroup> {
        &self.target
    }

    #[inline]
    pub fn apply(&self, c: Elem) -> Elem {
        self.map[c]
    }

    pub fn map(&self) -> &[Elem] {
        &self.map
    }

    /// The source element mapping to `x`, if `x` lies in the image.
    #[inline]
    pub fn preimage(&self, x: Elem) -> Option<Elem> {
        self.preimage[x]
    }

    #[inline]
    pub fn in_image(&self, x: Elem) -> bool {
        self.preimage[x].is_some()
    }

    /// Minimal-index representatives of the left cosets `t·image`, ascending.
    pub fn left_transversal(&self) -> &[Elem] {
        &self.transversal
    }

    /// Splits `x` as `rep · map(c)` with `rep` taken from the left transversal.
    #[inline]
    pub fn split(&self, x: Elem) -> (Elem, Elem) {
        self.coset[x]
    }

    #[inline]
    pub fn coset_rep(&self, x: Elem) -> Elem {
        self.coset[x].0
    }

    pub fn index(&self) -> usize {
        self.target.order() / self.source.order()
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &Monomorphism) -> Result<Monomorphism, MonoError> {
        if *self.target != *other.source {
            return Err(MonoError::NotComposable);
        }
        let map = self.map.iter().map(|&x| other.apply(x)).collect();
        Monomorphism::new(self.source.clone(), other.target.clone(), map)
    }
}
