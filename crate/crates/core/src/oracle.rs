//! Brute-force ground truth on explicit small groups.
//!
//! Groups are realized as `⊕ Z/p^{λ_i}` with elements indexed in mixed
//! radix. Nothing here uses the closed forms of [`crate::pgroup`].

use std::collections::{BTreeMap, HashMap, HashSet};

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::prime::Prime;

pub const DEFAULT_ORDER_CAP: usize = 4096;
pub const DEFAULT_BUDGET: u128 = 10_000_000;

/// `⊕ Z/p^{λ_i}` with explicit elements.
#[derive(Debug, Clone)]
pub struct ExplicitGroup {
    p: Prime,
    exponents: Vec<u32>,
    moduli: Vec<u64>,
    order: usize,
    strides: Vec<usize>,
    digits: Vec<Vec<u64>>,
    /// `k` such that the element has order `p^k`.
    order_exp: Vec<u32>,
    /// Full addition table for small groups.
    table: Option<Vec<u16>>,
}

/// Groups up to this order get a precomputed addition table.
const TABLE_ORDER: usize = 1024;

impl ExplicitGroup {
    pub fn new(lambda: &Partition, p: Prime) -> Result<Self> {
        Self::with_cap(lambda, p, DEFAULT_ORDER_CAP)
    }

    pub fn with_cap(lambda: &Partition, p: Prime, cap: usize) -> Result<Self> {
        Self::from_exponents(lambda.parts().to_vec(), p, cap)
    }

    /// Generators may be listed in any order; `Z/p^0` factors are allowed.
    pub fn from_exponents(exponents: Vec<u32>, p: Prime, cap: usize) -> Result<Self> {
        let mut order: u128 = 1;
        let mut moduli = Vec::with_capacity(exponents.len());
        for &e in &exponents {
            let m = (p.get() as u128).checked_pow(e).unwrap_or(u128::MAX);
            order = order.saturating_mul(m);
            if order > cap as u128 {
                return Err(Error::GroupTooLarge { order, cap });
            }
            moduli.push(m as u64);
        }
        let order = order as usize;
        let mut digits = Vec::with_capacity(order);
        let mut order_exp = Vec::with_capacity(order);
        for idx in 0..order {
            let mut rest = idx as u64;
            let d: Vec<u64> = moduli
                .iter()
                .map(|&m| {
                    let x = rest % m;
                    rest /= m;
                    x
                })
                .collect();
            order_exp.push(Self::element_order_exp(&d, &moduli, p));
            digits.push(d);
        }
        let mut strides = Vec::with_capacity(moduli.len());
        let mut s = 1usize;
        for &m in &moduli {
            strides.push(s);
            s *= m as usize;
        }
        let mut g = ExplicitGroup {
            p,
            exponents,
            moduli,
            order,
            strides,
            digits,
            order_exp,
            table: None,
        };
        if order <= TABLE_ORDER {
            let mut table = Vec::with_capacity(order * order);
            for a in 0..order {
                for b in 0..order {
                    table.push(g.add_slow(a, b) as u16);
                }
            }
            g.table = Some(table);
        }
        Ok(g)
    }

    fn element_order_exp(d: &[u64], moduli: &[u64], p: Prime) -> u32 {
        let mut k = 0;
        // smallest k with p^k * x = 0 in every coordinate
        loop {
            let pk = (p.get() as u128).pow(k);
            if d.iter().zip(moduli).all(|(&x, &m)| (x as u128 * pk) % m as u128 == 0) {
                return k;
            }
            k += 1;
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn prime(&self) -> Prime {
        self.p
    }

    pub fn generator_exponents(&self) -> &[u32] {
        &self.exponents
    }

    fn encode(&self, d: &[u64]) -> usize {
        let mut idx = 0u64;
        for (x, m) in d.iter().zip(&self.moduli).rev() {
            idx = idx * m + x;
        }
        idx as usize
    }

    #[inline]
    pub fn add(&self, a: usize, b: usize) -> usize {
        match &self.table {
            Some(t) => t[a * self.order + b] as usize,
            None => self.add_slow(a, b),
        }
    }

    fn add_slow(&self, a: usize, b: usize) -> usize {
        let (da, db) = (&self.digits[a], &self.digits[b]);
        let mut idx = 0;
        for i in 0..self.moduli.len() {
            idx += ((da[i] + db[i]) % self.moduli[i]) as usize * self.strides[i];
        }
        idx
    }

    /// Image of generator `i` under the homomorphism sending generators to
    /// `images`, evaluated at element `a` of the source.
    fn evaluate(&self, target: &ExplicitGroup, images: &[usize], a: usize) -> usize {
        let mut acc = vec![0u64; target.moduli.len()];
        for (coef, &img) in self.digits[a].iter().zip(images) {
            for ((slot, &y), &m) in acc.iter_mut().zip(&target.digits[img]).zip(&target.moduli) {
                *slot = ((*slot as u128 + *coef as u128 * y as u128) % m as u128) as u64;
            }
        }
        target.encode(&acc)
    }

    /// Elements of order dividing `p^k`.
    fn killed_by(&self, k: u32) -> Vec<usize> {
        (0..self.order).filter(|&b| self.order_exp[b] <= k).collect()
    }

    /// Isomorphism type of the subgroup with the given elements, read off
    /// from the sizes of its `p^k`-torsion layers.
    pub fn subgroup_type(&self, elements: &[usize]) -> Partition {
        let max_k = elements.iter().map(|&h| self.order_exp[h]).max().unwrap_or(0);
        let log = |n: usize| -> u32 {
            let mut n = n;
            let mut l = 0;
            while n > 1 {
                n /= self.p.get() as usize;
                l += 1;
            }
            l
        };
        let layers: Vec<u32> = (0..=max_k)
            .map(|k| log(elements.iter().filter(|&&h| self.order_exp[h] <= k).count()))
            .collect();
        let conj: Vec<u32> = layers.windows(2).map(|w| w[1] - w[0]).collect();
        Partition::new(conj).map(|c| c.conjugate()).unwrap_or_default()
    }
}

/// Bitset over the elements of an explicit group.
#[derive(Clone, PartialEq, Eq, Hash)]
struct ElementSet(Vec<u64>);

impl ElementSet {
    fn empty(order: usize) -> Self {
        ElementSet(vec![0; order.div_ceil(64)])
    }
    fn contains(&self, x: usize) -> bool {
        self.0[x / 64] >> (x % 64) & 1 == 1
    }
    fn insert(&mut self, x: usize) {
        self.0[x / 64] |= 1 << (x % 64);
    }
    fn len(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }
    fn intersection_len(&self, other: &ElementSet) -> usize {
        self.0.iter().zip(&other.0).map(|(a, b)| (a & b).count_ones() as usize).sum()
    }
    fn elements(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.len());
        for (i, &w) in self.0.iter().enumerate() {
            let mut w = w;
            while w != 0 {
                let t = w.trailing_zeros() as usize;
                out.push(i * 64 + t);
                w &= w - 1;
            }
        }
        out
    }
}

/// Smallest subgroup containing `sub` (a subgroup) and `b`.
fn join_cyclic(g: &ExplicitGroup, sub: &ElementSet, b: usize) -> ElementSet {
    let members = sub.elements();
    let mut out = sub.clone();
    let mut cur = b;
    while !sub.contains(cur) {
        for &s in &members {
            out.insert(g.add(s, cur));
        }
        cur = g.add(cur, b);
    }
    out
}

fn trivial_subgroup(g: &ExplicitGroup) -> ElementSet {
    let mut s = ElementSet::empty(g.order);
    s.insert(0);
    s
}

/// Calls `f(coset)` once per coset of `sub`.
fn for_each_coset(g: &ExplicitGroup, sub: &ElementSet, mut f: impl FnMut(&[usize])) {
    let members = sub.elements();
    let mut seen = ElementSet::empty(g.order);
    let mut coset = Vec::with_capacity(members.len());
    for b in 0..g.order {
        if seen.contains(b) {
            continue;
        }
        coset.clear();
        for &s in &members {
            let x = g.add(b, s);
            seen.insert(x);
            coset.push(x);
        }
        f(&coset);
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HomEnumeration {
    pub count: BigUint,
    /// Images of the source generators, one tuple per homomorphism.
    pub maps: Option<Vec<Vec<usize>>>,
}

/// Allowed images per source generator: elements whose order divides the
/// generator's order.
fn allowed_images(a: &ExplicitGroup, b: &ExplicitGroup) -> Vec<Vec<usize>> {
    a.exponents.iter().map(|&e| b.killed_by(e)).collect()
}

/// Counts homomorphisms `A → B` by choosing generator images, and lists them
/// if `list` is set and the count is within `budget`.
pub fn enumerate_homs(
    a: &ExplicitGroup,
    b: &ExplicitGroup,
    list: bool,
    budget: u128,
) -> Result<HomEnumeration> {
    let choices = allowed_images(a, b);
    let count: BigUint = choices.iter().map(|c| BigUint::from(c.len())).product();
    if !list {
        return Ok(HomEnumeration { count, maps: None });
    }
    let needed: u128 = choices
        .iter()
        .try_fold(1u128, |acc, c| acc.checked_mul(c.len() as u128))
        .unwrap_or(u128::MAX);
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let mut maps = Vec::with_capacity(needed as usize);
    let mut cur = Vec::with_capacity(choices.len());
    fn rec(choices: &[Vec<usize>], cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == choices.len() {
            out.push(cur.clone());
            return;
        }
        for &x in &choices[cur.len()] {
            cur.push(x);
            rec(choices, cur, out);
            cur.pop();
        }
    }
    rec(&choices, &mut cur, &mut maps);
    Ok(HomEnumeration {
        count,
        maps: Some(maps),
    })
}

/// Surjection count by listing every homomorphism and checking its image.
/// Only for instances whose homomorphism count is within `budget`.
pub fn enumerate_surjections_naive(
    a: &ExplicitGroup,
    b: &ExplicitGroup,
    budget: u128,
) -> Result<BigUint> {
    let homs = enumerate_homs(a, b, true, budget)?;
    let mut count = 0u64;
    for images in homs.maps.unwrap_or_default() {
        let mut image = ElementSet::empty(b.order);
        for x in 0..a.order {
            image.insert(a.evaluate(b, &images, x));
        }
        if image.len() == b.order {
            count += 1;
        }
    }
    Ok(BigUint::from(count))
}

/// Counts surjections `A → B`.
///
/// Homomorphisms are enumerated generator by generator, grouped by the
/// subgroup their images generate so far; two partial maps with the same
/// generated subgroup have the same number of surjective completions. The
/// image choices for the next generator are grouped by coset of that
/// subgroup, since `S + ⟨x⟩` depends only on `x + S`. `budget` bounds the
/// number of distinct (generator, subgroup) states.
pub fn enumerate_surjections(a: &ExplicitGroup, b: &ExplicitGroup, budget: u128) -> Result<BigUint> {
    let k = a.exponents.len();
    let allowed: Vec<ElementSet> = a
        .exponents
        .iter()
        .map(|&e| {
            let mut s = ElementSet::empty(b.order);
            for x in b.killed_by(e) {
                s.insert(x);
            }
            s
        })
        .collect();
    // number of free choices for generators i.. once the image is everything
    let mut tail_all = vec![1u128; k + 1];
    for i in (0..k).rev() {
        tail_all[i] = tail_all[i + 1]
            .checked_mul(allowed[i].len() as u128)
            .ok_or(Error::BudgetExceeded { needed: u128::MAX, budget: u128::MAX })?;
    }

    // generators i.. that can map to something nonzero
    let mut live = vec![0u32; k + 1];
    for i in (0..k).rev() {
        live[i] = live[i + 1] + u32::from(a.exponents[i] > 0);
    }
    let mut frattini = ElementSet::empty(b.order);
    for x in 0..b.order {
        let mut y = 0;
        for _ in 0..b.p.get() {
            y = b.add(y, x);
        }
        frattini.insert(y);
    }

    struct Dp<'g> {
        b: &'g ExplicitGroup,
        allowed: Vec<ElementSet>,
        tail_all: Vec<u128>,
        live: Vec<u32>,
        frattini: ElementSet,
        memo: Vec<HashMap<ElementSet, u128>>,
        states: u128,
        budget: u128,
    }

    impl Dp<'_> {
        fn count(&mut self, i: usize, sub: &ElementSet) -> Result<u128> {
            let full = sub.len() == self.b.order;
            if full {
                return Ok(self.tail_all[i]);
            }
            if i == self.allowed.len() {
                return Ok(0);
            }
            if let Some(&v) = self.memo[i].get(sub) {
                return Ok(v);
            }
            // B/S needs log_p |B / (S + pB)| generators
            let meet = sub.intersection_len(&self.frattini) as u128;
            let mut quotient = (self.b.order as u128 * meet) / (sub.len() as u128 * self.frattini.len() as u128);
            let mut rank = 0;
            while quotient > 1 {
                quotient /= self.b.p.get() as u128;
                rank += 1;
            }
            if rank > self.live[i] {
                return Ok(0);
            }
            self.states += 1;
            if self.states > self.budget {
                return Err(Error::BudgetExceeded {
                    needed: self.states,
                    budget: self.budget,
                });
            }
            let mut branches = Vec::new();
            for_each_coset(self.b, sub, |coset| {
                let valid = coset.iter().filter(|&&x| self.allowed[i].contains(x)).count();
                if valid > 0 {
                    branches.push((coset[0], valid as u128));
                }
            });
            let mut total: u128 = 0;
            for (rep, valid) in branches {
                let next = join_cyclic(self.b, sub, rep);
                let c = self.count(i + 1, &next)?;
                total = c
                    .checked_mul(valid)
                    .and_then(|x| x.checked_add(total))
                    .ok_or(Error::BudgetExceeded { needed: u128::MAX, budget: u128::MAX })?;
            }
            self.memo[i].insert(sub.clone(), total);
            Ok(total)
        }
    }

    let mut dp = Dp {
        b,
        allowed,
        tail_all,
        live,
        frattini,
        memo: vec![HashMap::new(); k],
        states: 0,
        budget,
    };
    let start = trivial_subgroup(b);
    dp.count(0, &start).map(BigUint::from)
}

/// Automorphisms are exactly the surjective endomorphisms of a finite group.
pub fn enumerate_automorphisms(a: &ExplicitGroup, budget: u128) -> Result<BigUint> {
    enumerate_surjections(a, a, budget)
}

/// Every subgroup of `A` as a sorted element list. Subgroups are reached by
/// joining cyclic subgroups onto already-found ones, starting from `{0}`,
/// and deduplicated by element set.
pub fn subgroups(a: &ExplicitGroup, budget: u128) -> Result<Vec<Vec<usize>>> {
    let start = trivial_subgroup(a);
    let mut seen: HashSet<ElementSet> = HashSet::new();
    seen.insert(start.clone());
    let mut frontier = vec![start];
    while let Some(sub) = frontier.pop() {
        let mut reps = Vec::new();
        for_each_coset(a, &sub, |coset| {
            if !sub.contains(coset[0]) {
                reps.push(coset[0]);
            }
        });
        for rep in reps {
            let next = join_cyclic(a, &sub, rep);
            if !seen.contains(&next) {
                if seen.len() as u128 >= budget {
                    return Err(Error::BudgetExceeded {
                        needed: seen.len() as u128 + 1,
                        budget,
                    });
                }
                seen.insert(next.clone());
                frontier.push(next);
            }
        }
    }
    let mut out: Vec<Vec<usize>> = seen.into_iter().map(|s| s.elements()).collect();
    out.sort();
    Ok(out)
}

/// Subgroup counts grouped by isomorphism type, in graded partition order.
pub fn enumerate_subgroups(a: &ExplicitGroup, budget: u128) -> Result<Vec<(Partition, BigUint)>> {
    let mut by_type: BTreeMap<Partition, u64> = BTreeMap::new();
    for h in subgroups(a, budget)? {
        *by_type.entry(a.subgroup_type(&h)).or_default() += 1;
    }
    Ok(by_type
        .into_iter()
        .map(|(t, c)| (t, BigUint::from(c)))
        .collect())
}
