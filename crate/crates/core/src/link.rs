//! 4x4x4 tripartite link graphs packed into a `u64`.
//!
//! Triple `(i, j, k)` with `i` in class `Q1`, `j` in `Q2`, `k` in `Q3` lives at
//! bit `16 i + 4 j + k`.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use itertools::Itertools;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::{check_disjoint, CountRoute, Density, Hypergraph};
use crate::solve::tripartite_pm_444;

/// Number of triples an `H_ext` cover touches.
pub const EXT_EDGES: u32 = 37;

pub type Triple = (u8, u8, u8);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct LinkGraph(pub u64);

#[inline]
pub const fn bit(i: usize, j: usize, k: usize) -> u32 {
    (16 * i + 4 * j + k) as u32
}

impl LinkGraph {
    pub const EMPTY: LinkGraph = LinkGraph(0);
    pub const FULL: LinkGraph = LinkGraph(u64::MAX);

    pub fn from_triples<I: IntoIterator<Item = Triple>>(triples: I) -> Self {
        let mut mask = 0u64;
        for (i, j, k) in triples {
            mask |= 1 << bit(i as usize, j as usize, k as usize);
        }
        LinkGraph(mask)
    }

    pub fn mask(self) -> u64 {
        self.0
    }

    pub fn edge_count(self) -> u32 {
        self.0.count_ones()
    }

    pub fn has(self, i: usize, j: usize, k: usize) -> bool {
        self.0 >> bit(i, j, k) & 1 == 1
    }

    pub fn with(self, i: usize, j: usize, k: usize) -> Self {
        LinkGraph(self.0 | 1 << bit(i, j, k))
    }

    pub fn without(self, i: usize, j: usize, k: usize) -> Self {
        LinkGraph(self.0 & !(1 << bit(i, j, k)))
    }

    pub fn triples(self) -> impl Iterator<Item = Triple> {
        let mask = self.0;
        (0..64u8)
            .filter(move |b| mask >> b & 1 == 1)
            .map(|b| (b / 16, b / 4 % 4, b % 4))
    }

    /// `|N(x, y)|` for `x`, `y` in the two classes of `side`.
    pub fn pair_degree(self, side: Side, x: usize, y: usize) -> u8 {
        (0..4)
            .filter(|&z| {
                let (i, j, k) = side.place(x, y, z);
                self.has(i, j, k)
            })
            .count() as u8
    }

    fn degree_table(self, side: Side) -> [[u8; 4]; 4] {
        let mut t = [[0; 4]; 4];
        for (x, row) in t.iter_mut().enumerate() {
            for (y, d) in row.iter_mut().enumerate() {
                *d = self.pair_degree(side, x, y);
            }
        }
        t
    }

    /// `deg(x1, y2) + deg(x2, y1)`.
    pub fn crossing_degree_sum(
        self,
        side: Side,
        (x1, y1): (usize, usize),
        (x2, y2): (usize, usize),
    ) -> Result<u8> {
        if x1 == x2 || y1 == y2 {
            return Err(Error::NotDisjoint);
        }
        Ok(self.pair_degree(side, x1, y2) + self.pair_degree(side, x2, y1))
    }

    /// First pair system, in (side, permutation, subset) order, whose sorted
    /// degrees dominate the requirement of `kind`.
    pub fn detect_pattern(self, kind: PatternKind) -> Option<PairSystem> {
        let need = kind.requirement();
        for side in Side::ALL {
            let table = self.degree_table(side);
            for perm in (0..4usize).permutations(4) {
                for subset in (0..4usize).combinations(need.len()) {
                    let mut pairs: Vec<(u8, u8)> =
                        subset.iter().map(|&x| (x as u8, perm[x] as u8)).collect();
                    pairs.sort_by_key(|&(x, y)| std::cmp::Reverse(table[x as usize][y as usize]));
                    let degrees: Vec<u8> = pairs
                        .iter()
                        .map(|&(x, y)| table[x as usize][y as usize])
                        .collect();
                    if degrees.iter().zip(need).all(|(d, n)| d >= n) {
                        return Some(PairSystem {
                            side,
                            pairs,
                            degrees,
                        });
                    }
                }
            }
        }
        None
    }

    /// The cover triple when this graph is exactly an `H_ext`.
    pub fn is_ext(self) -> Option<Triple> {
        if self.edge_count() != EXT_EDGES {
            return None;
        }
        (0..64u8)
            .map(|c| (c / 16, c / 4 % 4, c % 4))
            .find(|&(a, b, c)| cover_mask(a, b, c) == self.0)
    }

    pub fn perfect_matching(self) -> Option<[Triple; 4]> {
        tripartite_pm_444(self)
    }

    pub fn classify(self) -> Result<Classification> {
        let edges = self.edge_count();
        if edges < EXT_EDGES {
            return Err(Error::NotApplicable { edges });
        }
        if let Some(m) = self.perfect_matching() {
            return Ok(Classification {
                verdict: Verdict::PerfectMatching,
                witness: Witness::Matching(m),
            });
        }
        for kind in PatternKind::ALL {
            if let Some(ps) = self.detect_pattern(kind) {
                return Ok(Classification {
                    verdict: kind.verdict(),
                    witness: Witness::Pairs(ps),
                });
            }
        }
        if let Some(cover) = self.is_ext() {
            return Ok(Classification {
                verdict: Verdict::Ext,
                witness: Witness::Cover(cover),
            });
        }
        Err(Error::LemmaViolation(self.0))
    }

    /// Minimum mask over all class permutations and within-class relabellings.
    pub fn canonical_form(self) -> LinkGraph {
        let t = tables();
        let mut best = u64::MAX;
        for cperm in &t.class_perms {
            let m = remap(self.0, cperm);
            let slices = [
                (m & 0xffff) as u16,
                (m >> 16 & 0xffff) as u16,
                (m >> 32 & 0xffff) as u16,
                (m >> 48) as u16,
            ];
            for rows in &t.perms {
                for cols in 0..24 {
                    let mut s = slices.map(|sl| relabel_slice(sl, rows, &t.nibble[cols]));
                    // relabelling Q1 permutes the slices; smallest goes on top
                    s.sort_unstable_by(|a, b| b.cmp(a));
                    let v = u64::from(s[0])
                        | u64::from(s[1]) << 16
                        | u64::from(s[2]) << 32
                        | u64::from(s[3]) << 48;
                    best = best.min(v);
                }
            }
        }
        LinkGraph(best)
    }

    pub fn apply(self, g: &GroupElement) -> LinkGraph {
        LinkGraph::from_triples(self.triples().map(|t| g.map(t)))
    }
}

/// 37-edge mask of all triples meeting `{a, b, c}`.
pub fn cover_mask(a: u8, b: u8, c: u8) -> u64 {
    let mut mask = 0;
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                if i == a || j == b || k == c {
                    mask |= 1u64 << bit(i as usize, j as usize, k as usize);
                }
            }
        }
    }
    mask
}

struct Tables {
    perms: Vec<[u8; 4]>,
    // nibble[p][x]: 4-bit row x with its bits relabelled by perms[p]
    nibble: Vec<[u8; 16]>,
    // class_perms[p][b]: destination bit of source bit b
    class_perms: Vec<[u8; 64]>,
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let perms: Vec<[u8; 4]> = (0..4u8)
            .permutations(4)
            .map(|p| [p[0], p[1], p[2], p[3]])
            .collect();
        let nibble = perms
            .iter()
            .map(|p| {
                let mut row = [0u8; 16];
                for (x, out) in row.iter_mut().enumerate() {
                    for (k, &pk) in p.iter().enumerate() {
                        if x >> k & 1 == 1 {
                            *out |= 1 << pk;
                        }
                    }
                }
                row
            })
            .collect();
        let class_perms = (0..3usize)
            .permutations(3)
            .map(|cp| {
                let mut dest = [0u8; 64];
                for (b, d) in dest.iter_mut().enumerate() {
                    let t = [b / 16, b / 4 % 4, b % 4];
                    *d = bit(t[cp[0]], t[cp[1]], t[cp[2]]) as u8;
                }
                dest
            })
            .collect();
        Tables {
            perms,
            nibble,
            class_perms,
        }
    })
}

fn remap(mask: u64, dest: &[u8; 64]) -> u64 {
    let mut out = 0;
    let mut m = mask;
    while m != 0 {
        let b = m.trailing_zeros() as usize;
        out |= 1 << dest[b];
        m &= m - 1;
    }
    out
}

fn relabel_slice(slice: u16, rows: &[u8; 4], cols: &[u8; 16]) -> u16 {
    let mut out = 0u16;
    for (j, &pj) in rows.iter().enumerate() {
        let row = (slice >> (4 * j) & 0xf) as usize;
        out |= u16::from(cols[row]) << (4 * pj);
    }
    out
}

/// An element of the symmetry group: `Q_c` of the image takes its
/// coordinate from class `classes[c]` of the source, relabelled by `perms[c]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupElement {
    pub classes: [u8; 3],
    pub perms: [[u8; 4]; 3],
}

impl GroupElement {
    pub fn map(&self, t: Triple) -> Triple {
        let src = [t.0, t.1, t.2];
        let img: [u8; 3] =
            std::array::from_fn(|c| self.perms[c][src[self.classes[c] as usize] as usize]);
        (img[0], img[1], img[2])
    }

    pub fn random<R: rand::Rng>(rng: &mut R) -> Self {
        use rand::seq::SliceRandom;
        let mut classes = [0u8, 1, 2];
        classes.shuffle(rng);
        let mut perms = [[0u8, 1, 2, 3]; 3];
        for p in &mut perms {
            p.shuffle(rng);
        }
        GroupElement { classes, perms }
    }

    pub fn all() -> impl Iterator<Item = GroupElement> {
        let classes: Vec<[u8; 3]> = (0..3u8)
            .permutations(3)
            .map(|p| [p[0], p[1], p[2]])
            .collect();
        let perms = tables().perms.clone();
        classes.into_iter().flat_map(move |cl| {
            let perms = perms.clone();
            perms
                .clone()
                .into_iter()
                .cartesian_product(perms.clone())
                .cartesian_product(perms)
                .map(move |((a, b), c)| GroupElement {
                    classes: cl,
                    perms: [a, b, c],
                })
        })
    }
}

impl fmt::Display for LinkGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

impl FromStr for LinkGraph {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.len() != 16 || !s.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected 16 hex digits, found {s:?}"),
            });
        }
        u64::from_str_radix(s, 16)
            .map(LinkGraph)
            .map_err(|e| Error::Parse {
                line: 1,
                msg: e.to_string(),
            })
    }
}

impl Serialize for LinkGraph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LinkGraph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Unordered pair of classes; the remaining class is the "third" one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    Q1Q2,
    Q1Q3,
    Q2Q3,
}

impl Side {
    pub const ALL: [Side; 3] = [Side::Q1Q2, Side::Q1Q3, Side::Q2Q3];

    /// Class indices `(x class, y class, third class)`.
    pub fn classes(self) -> (usize, usize, usize) {
        match self {
            Side::Q1Q2 => (0, 1, 2),
            Side::Q1Q3 => (0, 2, 1),
            Side::Q2Q3 => (1, 2, 0),
        }
    }

    /// Coordinates `(i, j, k)` of the triple with `x`, `y` on this side and `z` in the third class.
    pub fn place(self, x: usize, y: usize, z: usize) -> (usize, usize, usize) {
        match self {
            Side::Q1Q2 => (x, y, z),
            Side::Q1Q3 => (x, z, y),
            Side::Q2Q3 => (z, x, y),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PatternKind {
    H432,
    H4221,
    H3321,
}

impl PatternKind {
    pub const ALL: [PatternKind; 3] = [PatternKind::H432, PatternKind::H4221, PatternKind::H3321];

    pub fn requirement(self) -> &'static [u8] {
        match self {
            PatternKind::H432 => &[4, 3, 2],
            PatternKind::H4221 => &[4, 2, 2, 1],
            PatternKind::H3321 => &[3, 3, 2, 1],
        }
    }

    pub fn verdict(self) -> Verdict {
        match self {
            PatternKind::H432 => Verdict::H432,
            PatternKind::H4221 => Verdict::H4221,
            PatternKind::H3321 => Verdict::H3321,
        }
    }
}

impl FromStr for PatternKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "h432" | "432" => Ok(PatternKind::H432),
            "h4221" | "4221" => Ok(PatternKind::H4221),
            "h3321" | "3321" => Ok(PatternKind::H3321),
            _ => Err(Error::Parse {
                line: 1,
                msg: format!("unknown pattern {s:?}"),
            }),
        }
    }
}

/// Disjoint cross-class pairs on one side, with their degrees (descending).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairSystem {
    pub side: Side,
    pub pairs: Vec<(u8, u8)>,
    pub degrees: Vec<u8>,
}

impl PairSystem {
    /// Recounts every degree on `l` and checks disjointness and the requirement.
    pub fn verify(&self, l: LinkGraph, kind: PatternKind) -> bool {
        let need = kind.requirement();
        self.pairs.len() == need.len()
            && self.pairs.iter().map(|p| p.0).all_unique()
            && self.pairs.iter().map(|p| p.1).all_unique()
            && self.pairs.iter().zip(need).all(|(&(x, y), &n)| {
                x < 4 && y < 4 && l.pair_degree(self.side, x as usize, y as usize) >= n
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Verdict {
    PerfectMatching,
    H432,
    H4221,
    H3321,
    Ext,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Witness {
    Matching([Triple; 4]),
    Pairs(PairSystem),
    Cover(Triple),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub verdict: Verdict,
    pub witness: Witness,
}

impl Classification {
    /// Independent recheck of the witness against `l`.
    pub fn verify(&self, l: LinkGraph) -> bool {
        match (&self.witness, self.verdict) {
            (Witness::Matching(m), Verdict::PerfectMatching) => {
                m.iter().map(|t| t.0).all_unique()
                    && m.iter().map(|t| t.1).all_unique()
                    && m.iter().map(|t| t.2).all_unique()
                    && m.iter()
                        .all(|&(i, j, k)| l.has(i as usize, j as usize, k as usize))
            }
            (Witness::Pairs(ps), Verdict::H432) => ps.verify(l, PatternKind::H432),
            (Witness::Pairs(ps), Verdict::H4221) => ps.verify(l, PatternKind::H4221),
            (Witness::Pairs(ps), Verdict::H3321) => ps.verify(l, PatternKind::H3321),
            (&Witness::Cover((a, b, c)), Verdict::Ext) => {
                a < 4 && b < 4 && c < 4 && cover_mask(a, b, c) == l.0
            }
            _ => false,
        }
    }
}

/// Link graph of three 4-class blocks towards `z`: bit `(i, j, k)` is set iff
/// `d_4(Z, (A_i x B_j x C_k)) >= 2 eta`.
pub fn build_link_graph(
    h: &Hypergraph,
    blocks: [&[Vec<usize>]; 3],
    z: &[usize],
    eta: Density,
) -> Result<LinkGraph> {
    let mut parts: Vec<&[usize]> = vec![z];
    for block in blocks {
        if block.len() != 4 {
            return Err(Error::InvalidPartition(format!(
                "block has {} classes, expected 4",
                block.len()
            )));
        }
        parts.extend(block.iter().map(Vec::as_slice));
    }
    check_disjoint(&parts, h.n())?;
    let threshold = eta * Ratio::from_integer(2);
    let mut mask = 0u64;
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                let (a, b, c) = (&blocks[0][i], &blocks[1][j], &blocks[2][k]);
                let denom = (z.len() * a.len() * b.len() * c.len()) as u64;
                if denom == 0 {
                    continue;
                }
                let count = h.count_typed_edges(&[z, a, b, c], &[1, 1, 1, 1], CountRoute::Auto)?;
                if Ratio::new(count, denom) >= threshold {
                    mask |= 1 << bit(i, j, k);
                }
            }
        }
    }
    Ok(LinkGraph(mask))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn hext() -> LinkGraph {
        LinkGraph(cover_mask(0, 0, 0))
    }

    #[test]
    fn pair_degrees() {
        assert_eq!(LinkGraph::FULL.pair_degree(Side::Q1Q3, 2, 1), 4);
        assert_eq!(hext().pair_degree(Side::Q2Q3, 0, 0), 4);
        assert_eq!(hext().pair_degree(Side::Q2Q3, 1, 1), 1);
    }

    #[test]
    fn crossing_sums() {
        assert_eq!(
            LinkGraph::FULL
                .crossing_degree_sum(Side::Q1Q2, (0, 1), (2, 3))
                .unwrap(),
            8
        );
        assert_eq!(
            LinkGraph::EMPTY
                .crossing_degree_sum(Side::Q1Q2, (0, 1), (2, 3))
                .unwrap(),
            0
        );
        assert_eq!(
            hext()
                .crossing_degree_sum(Side::Q2Q3, (0, 0), (1, 1))
                .unwrap(),
            8
        );
        assert_eq!(
            hext().crossing_degree_sum(Side::Q2Q3, (0, 0), (0, 1)),
            Err(Error::NotDisjoint)
        );
    }

    #[test]
    fn detectors_on_extremes() {
        for kind in PatternKind::ALL {
            assert!(LinkGraph::EMPTY.detect_pattern(kind).is_none());
            let ps = LinkGraph::FULL.detect_pattern(kind).unwrap();
            assert!(ps.verify(LinkGraph::FULL, kind));
        }
    }

    #[test]
    fn ext_detection() {
        assert_eq!(hext().edge_count(), 37);
        assert_eq!(hext().is_ext(), Some((0, 0, 0)));
        assert_eq!(LinkGraph::FULL.is_ext(), None);
        let moved = hext().without(0, 0, 0).with(1, 1, 1);
        assert_eq!(moved.edge_count(), 37);
        assert_eq!(moved.is_ext(), None);
    }

    #[test]
    fn classify_examples() {
        let full = LinkGraph::FULL.classify().unwrap();
        assert_eq!(full.verdict, Verdict::PerfectMatching);
        assert!(full.verify(LinkGraph::FULL));
        let ext = hext().classify().unwrap();
        assert_eq!(ext.verdict, Verdict::Ext);
        assert_eq!(ext.witness, Witness::Cover((0, 0, 0)));
        let small = LinkGraph(u64::MAX >> 28);
        assert_eq!(small.classify(), Err(Error::NotApplicable { edges: 36 }));
    }

    #[test]
    fn hex_round_trip() {
        assert_eq!(LinkGraph::FULL.to_string(), "ffffffffffffffff");
        let l: LinkGraph = hext().to_string().parse().unwrap();
        assert_eq!(l, hext());
        assert!("xyz".parse::<LinkGraph>().is_err());
        assert!("0000000000000000f".parse::<LinkGraph>().is_err());
    }

    #[test]
    fn canonical_form_matches_orbit_minimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let samples = [
            LinkGraph::EMPTY,
            LinkGraph::FULL,
            hext(),
            LinkGraph(rng.gen()),
        ];
        for l in samples {
            let oracle = GroupElement::all().map(|g| l.apply(&g).0).min().unwrap();
            assert_eq!(l.canonical_form().0, oracle, "{l}");
        }
        assert_eq!(GroupElement::all().count(), 82_944);
    }

    #[test]
    fn canonical_form_of_relabelled_hext() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = hext().canonical_form();
        for _ in 0..50 {
            let g = GroupElement::random(&mut rng);
            assert_eq!(hext().apply(&g).canonical_form(), c);
        }
    }

    #[test]
    fn link_graph_of_complete_and_empty_hosts() {
        let classes: Vec<Vec<Vec<usize>>> = (0..3)
            .map(|b| (0..4).map(|c| vec![b * 4 + c]).collect())
            .collect();
        let z = vec![12, 13];
        let blocks = [&classes[0][..], &classes[1][..], &classes[2][..]];
        let k = Hypergraph::complete(14, 4).unwrap();
        let half = Ratio::new(1, 2);
        assert_eq!(
            build_link_graph(&k, blocks, &z, half).unwrap(),
            LinkGraph::FULL
        );
        let e = Hypergraph::empty(14, 4).unwrap();
        assert_eq!(
            build_link_graph(&e, blocks, &z, Ratio::new(1, 100)).unwrap(),
            LinkGraph::EMPTY
        );
        let overlap = vec![0];
        assert!(matches!(
            build_link_graph(&k, blocks, &overlap, half),
            Err(Error::InvalidPartition(_))
        ));
    }

    #[test]
    fn diagonal_planted_link_graph() {
        let classes: Vec<Vec<Vec<usize>>> = (0..3)
            .map(|b| {
                (0..4)
                    .map(|c| vec![b * 8 + 2 * c, b * 8 + 2 * c + 1])
                    .collect()
            })
            .collect();
        let z: Vec<usize> = (24..27).collect();
        let mut edges = Vec::new();
        for i in 0..4 {
            for &a in &classes[0][i] {
                for &b in &classes[1][i] {
                    for &c in &classes[2][i] {
                        for &w in &z {
                            edges.push(vec![a, b, c, w]);
                        }
                    }
                }
            }
        }
        let h = Hypergraph::new(27, 4, edges).unwrap();
        let l = build_link_graph(
            &h,
            [&classes[0][..], &classes[1][..], &classes[2][..]],
            &z,
            Ratio::new(1, 2),
        )
        .unwrap();
        assert_eq!(l, LinkGraph::from_triples((0..4).map(|i| (i, i, i))));
    }
}
