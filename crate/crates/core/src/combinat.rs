//! Point subsets, boundary divisors, strata and the relabeling action of
//! permutations on them.
//!
//! Points are labeled `1..=n`; label `i` lives in bit `i - 1` of a mask.
//! A boundary divisor is stored through the side of its partition that does
//! not contain point 2, and the global divisor order is `(|rep|, mask)`.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

/// Largest supported number of marked points (one 16-bit mask per subset).
pub const MAX_POINTS: usize = 16;

/// Smallest number of marked points accepted anywhere in the crate.
pub const MIN_POINTS: usize = 4;

pub fn check_point_count(n: usize) -> Result<()> {
    if (MIN_POINTS..=MAX_POINTS).contains(&n) {
        Ok(())
    } else {
        Err(Error::PointCount(n))
    }
}

#[inline]
fn full_mask(n: usize) -> u32 {
    (1u32 << n) - 1
}

/// A subset of the marked points `{p_1, ..., p_n}`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct PointSubset {
    mask: u32,
    n: u8,
}

impl PointSubset {
    pub fn new(n: usize, mask: u32) -> Result<Self> {
        check_point_count(n)?;
        if mask & !full_mask(n) != 0 {
            return Err(Error::InvalidStratum(format!(
                "mask {mask:#b} has labels above n = {n}"
            )));
        }
        Ok(PointSubset { mask, n: n as u8 })
    }

    pub fn from_labels(n: usize, labels: &[usize]) -> Result<Self> {
        check_point_count(n)?;
        let mut mask = 0u32;
        for &l in labels {
            if l == 0 || l > n {
                return Err(Error::InvalidStratum(format!("label {l} outside 1..={n}")));
            }
            mask |= 1 << (l - 1);
        }
        Ok(PointSubset { mask, n: n as u8 })
    }

    #[inline]
    pub fn mask(&self) -> u32 {
        self.mask
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n as usize
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.mask.count_ones() as usize
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    #[inline]
    pub fn contains(&self, label: usize) -> bool {
        label >= 1 && label <= self.n() && self.mask >> (label - 1) & 1 == 1
    }

    #[inline]
    pub fn complement(&self) -> Self {
        PointSubset {
            mask: full_mask(self.n()) ^ self.mask,
            n: self.n,
        }
    }

    #[inline]
    pub fn is_subset_of(&self, other: &PointSubset) -> bool {
        self.mask & !other.mask == 0
    }

    /// Labels in increasing order.
    pub fn labels(&self) -> Vec<usize> {
        (1..=self.n()).filter(|&l| self.contains(l)).collect()
    }

    /// `rho^{-1}(S) = { i : rho(i) in S }`.
    pub fn preimage(&self, rho: &Permutation) -> PointSubset {
        debug_assert_eq!(rho.n(), self.n());
        let mut mask = 0u32;
        for (i, &img) in rho.images.iter().enumerate() {
            if self.mask >> img & 1 == 1 {
                mask |= 1 << i;
            }
        }
        PointSubset { mask, n: self.n }
    }
}

impl fmt::Display for PointSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, l) in self.labels().into_iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, "}}")
    }
}

/// The class of a boundary divisor `D^S = D^{S^c}`, stored through its
/// canonical side (the one without point 2).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct BoundaryDivisor {
    rep: PointSubset,
}

impl BoundaryDivisor {
    /// Picks the side of `{S, S^c}` that does not contain point 2.
    pub fn canonicalize(s: PointSubset) -> Result<Self> {
        let n = s.n();
        let size = s.len();
        if size < 2 || size + 2 > n {
            return Err(Error::Stability { size, n });
        }
        let rep = if s.contains(2) { s.complement() } else { s };
        Ok(BoundaryDivisor { rep })
    }

    pub fn from_labels(n: usize, labels: &[usize]) -> Result<Self> {
        Self::canonicalize(PointSubset::from_labels(n, labels)?)
    }

    #[inline]
    pub fn rep(&self) -> PointSubset {
        self.rep
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.rep.n()
    }

    /// `|S ∩ {p_1, p_2}| = 1`. With the canonical side this is just `p_1 ∈ rep`.
    #[inline]
    pub fn is_ramified(&self) -> bool {
        self.rep.contains(1)
    }

    /// Relabel by `rho^{-1}`.
    pub fn pull_back(&self, rho: &Permutation) -> BoundaryDivisor {
        let s = self.rep.preimage(rho);
        let rep = if s.contains(2) { s.complement() } else { s };
        BoundaryDivisor { rep }
    }
}

impl Ord for BoundaryDivisor {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.rep.len(), self.rep.mask).cmp(&(other.rep.len(), other.rep.mask))
    }
}

impl PartialOrd for BoundaryDivisor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BoundaryDivisor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "D{}", self.rep)
    }
}

/// Whether `[D] ⌣ [E]` can be nonzero: one of `S ⊆ T`, `T ⊆ S`, `S ⊆ T^c`,
/// `T^c ⊆ S` holds.
pub fn compatible(d: &BoundaryDivisor, e: &BoundaryDivisor) -> bool {
    let s = d.rep;
    let t = e.rep;
    s.is_subset_of(&t)
        || t.is_subset_of(&s)
        || s.is_subset_of(&t.complement())
        || t.complement().is_subset_of(&s)
}

/// All boundary divisors for `n` points in the global order.
pub fn enumerate_divisors(n: usize) -> Vec<BoundaryDivisor> {
    assert!((MIN_POINTS..=MAX_POINTS).contains(&n), "n = {n} out of range");
    let mut out: Vec<BoundaryDivisor> = (0..full_mask(n))
        .filter(|m| m & 0b10 == 0)
        .filter_map(|m| {
            let size = m.count_ones() as usize;
            (size >= 2 && size + 2 <= n).then_some(BoundaryDivisor {
                rep: PointSubset { mask: m, n: n as u8 },
            })
        })
        .collect();
    out.sort();
    out
}

/// A codimension-`k` boundary stratum, identified with its unique set of
/// pairwise compatible divisors (sorted, no repeats).
#[derive(Clone, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct Stratum {
    divisors: Vec<BoundaryDivisor>,
}

impl Stratum {
    pub fn new(mut divisors: Vec<BoundaryDivisor>) -> Result<Self> {
        if divisors.is_empty() {
            return Err(Error::InvalidStratum("empty divisor list".into()));
        }
        let n = divisors[0].n();
        if divisors.iter().any(|d| d.n() != n) {
            return Err(Error::InvalidStratum("mixed point counts".into()));
        }
        divisors.sort();
        for w in divisors.windows(2) {
            if w[0] == w[1] {
                return Err(Error::InvalidStratum(format!("repeated divisor {}", w[0])));
            }
        }
        for (i, a) in divisors.iter().enumerate() {
            for b in &divisors[i + 1..] {
                if !compatible(a, b) {
                    return Err(Error::InvalidStratum(format!("{a} and {b} do not meet")));
                }
            }
        }
        Ok(Stratum { divisors })
    }

    pub(crate) fn from_sorted(divisors: Vec<BoundaryDivisor>) -> Self {
        debug_assert!(divisors.windows(2).all(|w| w[0] < w[1]));
        Stratum { divisors }
    }

    pub fn divisor(d: BoundaryDivisor) -> Self {
        Stratum { divisors: vec![d] }
    }

    /// The stratum `D ∩ E` of two distinct compatible divisors, or `None`.
    pub fn pair(d: BoundaryDivisor, e: BoundaryDivisor) -> Option<Self> {
        if d == e || !compatible(&d, &e) {
            return None;
        }
        let divisors = if d < e { vec![d, e] } else { vec![e, d] };
        Some(Stratum { divisors })
    }

    /// Builds a stratum from lists of labels, one list per divisor side.
    pub fn from_label_sets(n: usize, sets: &[&[usize]]) -> Result<Self> {
        let divisors = sets
            .iter()
            .map(|s| BoundaryDivisor::from_labels(n, s))
            .collect::<Result<Vec<_>>>()?;
        Self::new(divisors)
    }

    #[inline]
    pub fn codim(&self) -> usize {
        self.divisors.len()
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.divisors[0].n()
    }

    #[inline]
    pub fn divisors(&self) -> &[BoundaryDivisor] {
        &self.divisors
    }

    /// Number of ramified divisors among the defining set.
    pub fn ramified_count(&self) -> usize {
        self.divisors.iter().filter(|d| d.is_ramified()).count()
    }

    /// Sorted list of canonical-side label lists.
    pub fn descriptor(&self) -> Vec<Vec<usize>> {
        self.divisors.iter().map(|d| d.rep().labels()).collect()
    }

    pub fn from_descriptor(n: usize, desc: &[Vec<usize>]) -> Result<Self> {
        let sets: Vec<&[usize]> = desc.iter().map(|v| v.as_slice()).collect();
        Self::from_label_sets(n, &sets)
    }
}

impl fmt::Display for Stratum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.divisors.iter().enumerate() {
            if i > 0 {
                write!(f, "∩")?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

/// All codimension-`k` strata, lexicographic in the global divisor order.
pub fn enumerate_strata(n: usize, k: usize) -> Vec<Stratum> {
    let divisors = enumerate_divisors(n);
    let mut out = Vec::new();
    if k == 0 {
        return out;
    }
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    extend_strata(&divisors, k, 0, &mut chosen, &mut out);
    out
}

fn extend_strata(
    divisors: &[BoundaryDivisor],
    k: usize,
    start: usize,
    chosen: &mut Vec<usize>,
    out: &mut Vec<Stratum>,
) {
    if chosen.len() == k {
        out.push(Stratum::from_sorted(
            chosen.iter().map(|&i| divisors[i]).collect(),
        ));
        return;
    }
    for i in start..divisors.len() {
        if chosen.iter().all(|&j| compatible(&divisors[j], &divisors[i])) {
            chosen.push(i);
            extend_strata(divisors, k, i + 1, chosen, out);
            chosen.pop();
        }
    }
}

/// `g_rho^*` on strata: replace every side `S` by `rho^{-1}(S)`.
pub fn apply_permutation(rho: &Permutation, z: &Stratum) -> Stratum {
    let mut divisors: Vec<BoundaryDivisor> = z.divisors.iter().map(|d| d.pull_back(rho)).collect();
    divisors.sort();
    Stratum { divisors }
}

/// A bijection of the labels `1..=n`, stored 0-based.
#[derive(Clone, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct Permutation {
    images: Vec<u8>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation {
            images: (0..n as u8).collect(),
        }
    }

    /// From 1-based images: `images[i - 1] = rho(i)`.
    pub fn from_images(images: &[usize]) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &img in images {
            if img == 0 || img > n || seen[img - 1] {
                return Err(Error::InvalidPermutation(format!(
                    "{images:?} is not a bijection of 1..={n}"
                )));
            }
            seen[img - 1] = true;
        }
        Ok(Permutation {
            images: images.iter().map(|&i| (i - 1) as u8).collect(),
        })
    }

    /// Parses disjoint cycles such as `"(1 3)(2 4 5)"`. Unlisted labels are
    /// fixed; `""` and `"()"` are the identity.
    pub fn parse_cycles(n: usize, text: &str) -> Result<Self> {
        check_point_count(n)?;
        let mut images: Vec<u8> = (0..n as u8).collect();
        let mut used = vec![false; n];
        let mut cycle: Option<Vec<usize>> = None;
        let mut number: Option<(usize, String)> = None;

        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let parse_err = |pos: usize, token: &str, reason: &str| Error::Parse {
            token: token.to_string(),
            position: pos,
            reason: reason.to_string(),
        };

        let finish_number = |number: &mut Option<(usize, String)>,
                                 cycle: &mut Option<Vec<usize>>,
                                 used: &mut Vec<bool>|
         -> Result<()> {
            if let Some((pos, digits)) = number.take() {
                let label: usize = digits
                    .parse()
                    .map_err(|_| parse_err(pos, &digits, "not a label"))?;
                if label == 0 || label > n {
                    return Err(parse_err(pos, &digits, &format!("label outside 1..={n}")));
                }
                if used[label - 1] {
                    return Err(parse_err(pos, &digits, "label repeated"));
                }
                used[label - 1] = true;
                cycle
                    .as_mut()
                    .ok_or_else(|| parse_err(pos, &digits, "label outside a cycle"))?
                    .push(label);
            }
            Ok(())
        };

        for &(pos, c) in &chars {
            match c {
                '0'..='9' => match &mut number {
                    Some((_, digits)) => digits.push(c),
                    None => number = Some((pos, c.to_string())),
                },
                '(' => {
                    finish_number(&mut number, &mut cycle, &mut used)?;
                    if cycle.is_some() {
                        return Err(parse_err(pos, "(", "nested cycle"));
                    }
                    cycle = Some(Vec::new());
                }
                ')' => {
                    finish_number(&mut number, &mut cycle, &mut used)?;
                    let labels = cycle
                        .take()
                        .ok_or_else(|| parse_err(pos, ")", "unmatched closing parenthesis"))?;
                    for (i, &a) in labels.iter().enumerate() {
                        let b = labels[(i + 1) % labels.len()];
                        images[a - 1] = (b - 1) as u8;
                    }
                }
                c if c.is_whitespace() || c == ',' => {
                    finish_number(&mut number, &mut cycle, &mut used)?;
                }
                other => return Err(parse_err(pos, &other.to_string(), "unexpected character")),
            }
        }
        finish_number(&mut number, &mut cycle, &mut used)?;
        if cycle.is_some() {
            return Err(parse_err(text.len(), "<end>", "unclosed cycle"));
        }
        Ok(Permutation { images })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.images.len()
    }

    /// `rho(label)`, 1-based.
    #[inline]
    pub fn apply(&self, label: usize) -> usize {
        self.images[label - 1] as usize + 1
    }

    /// 1-based images.
    pub fn images(&self) -> Vec<usize> {
        self.images.iter().map(|&i| i as usize + 1).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &j)| i == j as usize)
    }

    /// `self ∘ other`, i.e. `x -> self(other(x))`.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        assert_eq!(self.n(), other.n());
        Permutation {
            images: other.images.iter().map(|&j| self.images[j as usize]).collect(),
        }
    }

    pub fn inverse(&self) -> Permutation {
        let mut images = vec![0u8; self.n()];
        for (i, &j) in self.images.iter().enumerate() {
            images[j as usize] = i as u8;
        }
        Permutation { images }
    }

    /// Non-trivial cycles, each starting at its smallest label, sorted by
    /// that label.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                cycle.push(i + 1);
                i = self.images[i] as usize;
            }
            if cycle.len() > 1 {
                out.push(cycle);
            }
        }
        out
    }

    /// Every permutation of `1..=n`, in lexicographic order of images.
    pub fn all(n: usize) -> Vec<Permutation> {
        let mut current: Vec<u8> = (0..n as u8).collect();
        let mut out = vec![Permutation {
            images: current.clone(),
        }];
        while next_lexicographic(&mut current) {
            out.push(Permutation {
                images: current.clone(),
            });
        }
        out
    }

    /// All `(n-1)!` single `n`-cycles `(1 a_2 ... a_n)`, ordered
    /// lexicographically by `(a_2, ..., a_n)`.
    pub fn full_cycles(n: usize) -> Vec<Permutation> {
        let mut tail: Vec<u8> = (1..n as u8).collect();
        let mut out = Vec::new();
        loop {
            let mut images = vec![0u8; n];
            let mut prev = 0u8;
            for &t in &tail {
                images[prev as usize] = t;
                prev = t;
            }
            images[prev as usize] = 0;
            out.push(Permutation { images });
            if !next_lexicographic(&mut tail) {
                break;
            }
        }
        out
    }
}

fn next_lexicographic(v: &mut [u8]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cycles = self.cycles();
        if cycles.is_empty() {
            return write!(f, "()");
        }
        for c in cycles {
            write!(f, "(")?;
            for (i, l) in c.iter().enumerate() {
                if i > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{l}")?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}
