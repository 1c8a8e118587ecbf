//! Attack-causality order over eight attack elements.
//!
//! `X <= Y` reads "X causes Y, directly or indirectly". Relations are stored
//! as 8x8 boolean matrices; every check here is exhaustive enumeration, which
//! at this size is both the implementation and the oracle.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const N: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AttackElement {
    /// Sniffing
    S,
    /// Content sniffing
    CS,
    /// ARP sniffing
    AS,
    /// Broadcast attacks
    BA,
    /// Phishing
    PA,
    /// ARP cache poisoning
    CP,
    DoS,
    DDoS,
}

impl AttackElement {
    pub const ALL: [AttackElement; N] = [
        AttackElement::S,
        AttackElement::CS,
        AttackElement::AS,
        AttackElement::BA,
        AttackElement::PA,
        AttackElement::CP,
        AttackElement::DoS,
        AttackElement::DDoS,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i]
    }

    pub fn name(self) -> &'static str {
        match self {
            AttackElement::S => "S",
            AttackElement::CS => "CS",
            AttackElement::AS => "AS",
            AttackElement::BA => "BA",
            AttackElement::PA => "PA",
            AttackElement::CP => "CP",
            AttackElement::DoS => "DoS",
            AttackElement::DDoS => "DDoS",
        }
    }

    pub fn long_name(self) -> &'static str {
        match self {
            AttackElement::S => "Sniffing",
            AttackElement::CS => "Content Sniffing",
            AttackElement::AS => "ARP Sniffing",
            AttackElement::BA => "Broadcast Attacks",
            AttackElement::PA => "Phishing Attacks",
            AttackElement::CP => "ARP Cache Poisoning",
            AttackElement::DoS => "Denial of Service",
            AttackElement::DDoS => "Distributed Denial of Service",
        }
    }
}

impl fmt::Display for AttackElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AttackElement {
    type Err = LatticeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        // "P" is accepted as an alias for phishing.
        match s {
            "P" => Ok(AttackElement::PA),
            _ => AttackElement::ALL
                .into_iter()
                .find(|e| e.name().eq_ignore_ascii_case(s))
                .ok_or_else(|| LatticeError::UnknownElement(s.to_string())),
        }
    }
}

use AttackElement::*;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LatticeError {
    #[error("closure is not antisymmetric: {0} and {1} cause each other")]
    CycleDetected(AttackElement, AttackElement),
    #[error("relation is not a partial order")]
    NotAPoset,
    #[error("relation is not a lattice: {0} and {1} lack a unique {2}")]
    NotALattice(AttackElement, AttackElement, &'static str),
    #[error("unknown attack element {0:?}")]
    UnknownElement(String),
}

pub type Edge = (AttackElement, AttackElement);

/// Covering pairs of the attack-causality lattice.
pub fn causality_edges() -> BTreeSet<Edge> {
    [
        (S, CS),
        (S, AS),
        (CS, BA),
        (AS, BA),
        (CS, PA),
        (CS, CP),
        (PA, DoS),
        (CP, DoS),
        (DoS, DDoS),
        (BA, DDoS),
    ]
    .into_iter()
    .collect()
}

/// Published join/meet examples as `(x, y, lub, glb)`. Two of the meets
/// are not what any lattice can give for a comparable pair; see
/// [`Lattice::stated_mismatches`].
pub const STATED_RESULTS: [(AttackElement, AttackElement, AttackElement, AttackElement); 4] = [
    (CS, AS, BA, S),
    (PA, CP, DoS, CS),
    (CP, DoS, DoS, CS),
    (DoS, DDoS, DDoS, S),
];

/// A stated result that disagrees with the computed one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StatedMismatch {
    pub op: &'static str,
    pub x: AttackElement,
    pub y: AttackElement,
    pub stated: AttackElement,
    pub computed: AttackElement,
}

impl fmt::Display for StatedMismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}({}, {}): stated {}, computed {}",
            self.op,
            self.x.name(),
            self.y.name(),
            self.stated.name(),
            self.computed.name()
        )
    }
}

/// A binary relation over the eight elements; `holds(x, y)` means `x <= y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct CausalRelation {
    m: [[bool; N]; N],
}

impl CausalRelation {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = Edge>>(pairs: I) -> Self {
        let mut r = Self::empty();
        for (x, y) in pairs {
            r.insert(x, y);
        }
        r
    }

    pub fn insert(&mut self, x: AttackElement, y: AttackElement) {
        self.m[x.index()][y.index()] = true;
    }

    pub fn remove(&mut self, x: AttackElement, y: AttackElement) {
        self.m[x.index()][y.index()] = false;
    }

    pub fn holds(&self, x: AttackElement, y: AttackElement) -> bool {
        self.m[x.index()][y.index()]
    }

    pub fn pairs(&self) -> BTreeSet<Edge> {
        let mut out = BTreeSet::new();
        for x in AttackElement::ALL {
            for y in AttackElement::ALL {
                if self.holds(x, y) {
                    out.insert((x, y));
                }
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.m.iter().flatten().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn upper_bounds(&self, x: AttackElement) -> Vec<AttackElement> {
        AttackElement::ALL
            .into_iter()
            .filter(|&z| self.holds(x, z))
            .collect()
    }

    pub fn lower_bounds(&self, x: AttackElement) -> Vec<AttackElement> {
        AttackElement::ALL
            .into_iter()
            .filter(|&z| self.holds(z, x))
            .collect()
    }

    /// Covering pairs: `x < y` with nothing strictly between.
    pub fn hasse_edges(&self) -> BTreeSet<Edge> {
        let mut out = BTreeSet::new();
        for x in AttackElement::ALL {
            for y in AttackElement::ALL {
                if x == y || !self.holds(x, y) {
                    continue;
                }
                let between = AttackElement::ALL
                    .into_iter()
                    .any(|z| z != x && z != y && self.holds(x, z) && self.holds(z, y));
                if !between {
                    out.insert((x, y));
                }
            }
        }
        out
    }
}

/// Reflexive-transitive closure (Warshall), rejecting cycles.
pub fn closure(edges: &BTreeSet<Edge>) -> Result<CausalRelation, LatticeError> {
    let mut r = CausalRelation::from_pairs(edges.iter().copied());
    for x in AttackElement::ALL {
        r.insert(x, x);
    }
    for k in 0..N {
        for i in 0..N {
            if !r.m[i][k] {
                continue;
            }
            for j in 0..N {
                if r.m[k][j] {
                    r.m[i][j] = true;
                }
            }
        }
    }
    for i in 0..N {
        for j in (i + 1)..N {
            if r.m[i][j] && r.m[j][i] {
                return Err(LatticeError::CycleDetected(
                    AttackElement::from_index(i),
                    AttackElement::from_index(j),
                ));
            }
        }
    }
    Ok(r)
}

pub fn is_reflexive(r: &CausalRelation) -> bool {
    AttackElement::ALL.into_iter().all(|x| r.holds(x, x))
}

pub fn is_antisymmetric(r: &CausalRelation) -> bool {
    AttackElement::ALL.into_iter().all(|x| {
        AttackElement::ALL
            .into_iter()
            .all(|y| x == y || !(r.holds(x, y) && r.holds(y, x)))
    })
}

pub fn is_transitive(r: &CausalRelation) -> bool {
    for x in AttackElement::ALL {
        for y in AttackElement::ALL {
            if !r.holds(x, y) {
                continue;
            }
            for z in AttackElement::ALL {
                if r.holds(y, z) && !r.holds(x, z) {
                    return false;
                }
            }
        }
    }
    true
}

pub fn is_poset(r: &CausalRelation) -> bool {
    is_reflexive(r) && is_antisymmetric(r) && is_transitive(r)
}

/// Least common upper bound by enumeration, `None` when absent or not unique.
pub fn brute_lub(r: &CausalRelation, x: AttackElement, y: AttackElement) -> Option<AttackElement> {
    let common: Vec<_> = AttackElement::ALL
        .into_iter()
        .filter(|&z| r.holds(x, z) && r.holds(y, z))
        .collect();
    let least: Vec<_> = common
        .iter()
        .copied()
        .filter(|&z| common.iter().all(|&w| r.holds(z, w)))
        .collect();
    match least.as_slice() {
        [z] => Some(*z),
        _ => None,
    }
}

pub fn brute_glb(r: &CausalRelation, x: AttackElement, y: AttackElement) -> Option<AttackElement> {
    let common: Vec<_> = AttackElement::ALL
        .into_iter()
        .filter(|&z| r.holds(z, x) && r.holds(z, y))
        .collect();
    let greatest: Vec<_> = common
        .iter()
        .copied()
        .filter(|&z| common.iter().all(|&w| r.holds(w, z)))
        .collect();
    match greatest.as_slice() {
        [z] => Some(*z),
        _ => None,
    }
}

/// Every pair has a unique LUB and GLB. Requires a poset.
pub fn is_lattice(r: &CausalRelation) -> Result<bool, LatticeError> {
    if !is_poset(r) {
        return Err(LatticeError::NotAPoset);
    }
    Ok(first_missing_bound(r).is_none())
}

fn first_missing_bound(r: &CausalRelation) -> Option<(AttackElement, AttackElement, &'static str)> {
    for x in AttackElement::ALL {
        for y in AttackElement::ALL {
            if brute_lub(r, x, y).is_none() {
                return Some((x, y, "LUB"));
            }
            if brute_glb(r, x, y).is_none() {
                return Some((x, y, "GLB"));
            }
        }
    }
    None
}

/// Whether the relation restricted to `domain` is a lattice. Used for
/// sub-structures such as chains.
pub fn is_lattice_on(r: &CausalRelation, domain: &[AttackElement]) -> bool {
    for &x in domain {
        for &y in domain {
            let ub: Vec<_> = domain
                .iter()
                .copied()
                .filter(|&z| r.holds(x, z) && r.holds(y, z))
                .collect();
            let lb: Vec<_> = domain
                .iter()
                .copied()
                .filter(|&z| r.holds(z, x) && r.holds(z, y))
                .collect();
            let least = ub
                .iter()
                .filter(|&&z| ub.iter().all(|&w| r.holds(z, w)))
                .count();
            let greatest = lb
                .iter()
                .filter(|&&z| lb.iter().all(|&w| r.holds(w, z)))
                .count();
            if least != 1 || greatest != 1 {
                return false;
            }
        }
    }
    true
}

/// A validated lattice with precomputed join and meet tables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lattice {
    relation: CausalRelation,
    join: [[AttackElement; N]; N],
    meet: [[AttackElement; N]; N],
    bottom: AttackElement,
    top: AttackElement,
}

impl Lattice {
    pub fn from_relation(relation: CausalRelation) -> Result<Self, LatticeError> {
        if !is_poset(&relation) {
            return Err(LatticeError::NotAPoset);
        }
        if let Some((x, y, which)) = first_missing_bound(&relation) {
            return Err(LatticeError::NotALattice(x, y, which));
        }
        let mut join = [[S; N]; N];
        let mut meet = [[S; N]; N];
        for x in AttackElement::ALL {
            for y in AttackElement::ALL {
                join[x.index()][y.index()] = brute_lub(&relation, x, y).expect("checked above");
                meet[x.index()][y.index()] = brute_glb(&relation, x, y).expect("checked above");
            }
        }
        // A finite lattice is bounded: fold join/meet over all elements.
        let top = AttackElement::ALL
            .into_iter()
            .fold(S, |acc, e| join[acc.index()][e.index()]);
        let bottom = AttackElement::ALL
            .into_iter()
            .fold(DDoS, |acc, e| meet[acc.index()][e.index()]);
        Ok(Lattice {
            relation,
            join,
            meet,
            bottom,
            top,
        })
    }

    pub fn from_edges(edges: &BTreeSet<Edge>) -> Result<Self, LatticeError> {
        Self::from_relation(closure(edges)?)
    }

    pub fn standard() -> Self {
        Self::from_edges(&causality_edges()).expect("attack-causality edges form a lattice")
    }

    pub fn relation(&self) -> &CausalRelation {
        &self.relation
    }

    pub fn leq(&self, x: AttackElement, y: AttackElement) -> bool {
        self.relation.holds(x, y)
    }

    pub fn lub(&self, x: AttackElement, y: AttackElement) -> AttackElement {
        self.join[x.index()][y.index()]
    }

    pub fn glb(&self, x: AttackElement, y: AttackElement) -> AttackElement {
        self.meet[x.index()][y.index()]
    }

    pub fn join_table(&self) -> &[[AttackElement; N]; N] {
        &self.join
    }

    pub fn meet_table(&self) -> &[[AttackElement; N]; N] {
        &self.meet
    }

    pub fn bottom(&self) -> AttackElement {
        self.bottom
    }

    pub fn top(&self) -> AttackElement {
        self.top
    }

    /// Compares every table entry with a fresh brute-force computation and
    /// returns the number of mismatches.
    pub fn table_mismatches(&self) -> usize {
        let mut bad = 0;
        for x in AttackElement::ALL {
            for y in AttackElement::ALL {
                if brute_lub(&self.relation, x, y) != Some(self.lub(x, y)) {
                    bad += 1;
                }
                if brute_glb(&self.relation, x, y) != Some(self.glb(x, y)) {
                    bad += 1;
                }
            }
        }
        bad
    }

    pub fn stated_mismatches(&self) -> Vec<StatedMismatch> {
        let mut out = Vec::new();
        for (x, y, lub, glb) in STATED_RESULTS {
            for (op, stated, computed) in
                [("LUB", lub, self.lub(x, y)), ("GLB", glb, self.glb(x, y))]
            {
                if stated != computed {
                    out.push(StatedMismatch {
                        op,
                        x,
                        y,
                        stated,
                        computed,
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relationship {
    /// The target is a consequence of some detected element.
    Consequence,
    /// The target is a cause of some detected element.
    Cause,
    Incomparable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageAnswer {
    pub target: AttackElement,
    pub relationship: Relationship,
    /// Detected elements the target follows from.
    pub via: Vec<AttackElement>,
    pub root_causes: BTreeSet<AttackElement>,
    pub consequences: BTreeSet<AttackElement>,
}

/// Relates a target attack to the set of attacks a mitigation detects.
/// Consequence takes precedence over cause when both hold (the target
/// equals a detected element, or sits between two of them).
pub fn coverage_query(
    l: &Lattice,
    detected: &BTreeSet<AttackElement>,
    target: AttackElement,
) -> CoverageAnswer {
    let root_causes = detected
        .iter()
        .flat_map(|&d| l.relation.lower_bounds(d))
        .collect();
    let consequences = detected
        .iter()
        .flat_map(|&d| l.relation.upper_bounds(d))
        .collect();
    let via: Vec<_> = detected
        .iter()
        .copied()
        .filter(|&d| l.leq(d, target))
        .collect();
    let relationship = if !via.is_empty() {
        Relationship::Consequence
    } else if detected.iter().any(|&d| l.leq(target, d)) {
        Relationship::Cause
    } else {
        Relationship::Incomparable
    };
    CoverageAnswer {
        target,
        relationship,
        via,
        root_causes,
        consequences,
    }
}

/// Aligned text rendering of a join or meet table.
pub fn render_table(title: &str, table: &[[AttackElement; N]; N]) -> String {
    let mut out = format!("{title}\n{:>6}", "");
    for y in AttackElement::ALL {
        out.push_str(&format!("{:>6}", y.name()));
    }
    out.push('\n');
    for x in AttackElement::ALL {
        out.push_str(&format!("{:>6}", x.name()));
        for y in AttackElement::ALL {
            out.push_str(&format!("{:>6}", table[x.index()][y.index()].name()));
        }
        out.push('\n');
    }
    out
}
