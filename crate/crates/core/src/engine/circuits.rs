//! Layered Boolean circuits over XOR-shared bits.
//!
//! A circuit advances one AND layer at a time; the driver merges the layers
//! of every circuit in flight so that a whole batch shares one round per
//! layer. Gate counts depend only on circuit widths, never on data, which is
//! what lets the cost model run the same circuits against a counting oracle.

use super::EngineError;

/// Share-local operations. `holder` marks the party that carries public
/// constants; a plaintext evaluator is simply a holder.
#[derive(Debug, Clone, Copy)]
pub struct Local {
    pub holder: bool,
}

impl Local {
    #[inline]
    pub fn constant(&self, c: bool) -> bool {
        self.holder & c
    }

    #[inline]
    pub fn xor_const(&self, a: bool, c: bool) -> bool {
        a ^ self.constant(c)
    }

    #[inline]
    pub fn not(&self, a: bool) -> bool {
        a ^ self.holder
    }
}

/// Evaluates one layer of independent AND gates.
pub trait AndOracle {
    fn and_layer(&mut self, pairs: &[(bool, bool)]) -> Result<Vec<bool>, EngineError>;
}

/// Plaintext evaluation.
pub struct PlainAnd;

impl AndOracle for PlainAnd {
    fn and_layer(&mut self, pairs: &[(bool, bool)]) -> Result<Vec<bool>, EngineError> {
        Ok(pairs.iter().map(|&(a, b)| a & b).collect())
    }
}

/// Counts gates and layers without evaluating anything meaningful.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct CountingAnd {
    pub ands: u64,
    pub layers: u64,
}

impl AndOracle for CountingAnd {
    fn and_layer(&mut self, pairs: &[(bool, bool)]) -> Result<Vec<bool>, EngineError> {
        self.ands += pairs.len() as u64;
        self.layers += 1;
        Ok(vec![false; pairs.len()])
    }
}

pub trait Circuit {
    /// Appends the operands of the next AND layer; appends nothing once done.
    fn next_layer(&mut self, out: &mut Vec<(bool, bool)>);
    /// Consumes the results of the layer requested last.
    fn feed(&mut self, loc: &Local, results: &[bool]);
    fn output(&self) -> Vec<bool>;
}

/// Runs all circuits to completion, merging their layers. Returns the
/// number of layers evaluated.
pub fn run_layers(
    circuits: &mut [Box<dyn Circuit>],
    loc: &Local,
    oracle: &mut dyn AndOracle,
) -> Result<u64, EngineError> {
    let mut layers = 0;
    let mut pairs = Vec::new();
    let mut spans = Vec::with_capacity(circuits.len());
    loop {
        pairs.clear();
        spans.clear();
        for c in circuits.iter_mut() {
            let start = pairs.len();
            c.next_layer(&mut pairs);
            spans.push(start..pairs.len());
        }
        if pairs.is_empty() {
            return Ok(layers);
        }
        let results = oracle.and_layer(&pairs)?;
        for (c, span) in circuits.iter_mut().zip(&spans) {
            if !span.is_empty() {
                c.feed(loc, &results[span.clone()]);
            }
        }
        layers += 1;
    }
}

/// `[c < r]` for public `c` and shared `r`, both least-significant first.
///
/// Each bit contributes a pair `(lt, eq)`; adjacent pairs fold with
/// `lt = lt_hi ^ eq_hi & lt_lo`, `eq = eq_hi & eq_lo` in a balanced tree.
/// `eq` is skipped at the root, so `n` bits cost `2n - 3` ANDs in
/// `ceil(log2 n)` layers.
pub struct LessThanPublic {
    nodes: Vec<(bool, bool)>,
}

impl LessThanPublic {
    pub fn new(loc: &Local, c: &[bool], r: &[bool]) -> Self {
        assert_eq!(c.len(), r.len());
        assert!(!c.is_empty());
        let nodes = c
            .iter()
            .zip(r)
            .map(|(&ci, &ri)| (ri & !ci, loc.xor_const(ri, !ci)))
            .collect();
        LessThanPublic { nodes }
    }
}

impl Circuit for LessThanPublic {
    fn next_layer(&mut self, out: &mut Vec<(bool, bool)>) {
        let n = self.nodes.len();
        if n < 2 {
            return;
        }
        let root = n == 2;
        for j in 0..n / 2 {
            let (lo, hi) = (self.nodes[2 * j], self.nodes[2 * j + 1]);
            out.push((hi.1, lo.0));
            if !root {
                out.push((hi.1, lo.1));
            }
        }
    }

    fn feed(&mut self, _loc: &Local, results: &[bool]) {
        let n = self.nodes.len();
        let root = n == 2;
        let per = if root { 1 } else { 2 };
        let mut next = Vec::with_capacity(n.div_ceil(2));
        for j in 0..n / 2 {
            let hi = self.nodes[2 * j + 1];
            let lt = hi.0 ^ results[per * j];
            let eq = if root { false } else { results[per * j + 1] };
            next.push((lt, eq));
        }
        if n % 2 == 1 {
            next.push(self.nodes[n - 1]);
        }
        self.nodes = next;
    }

    fn output(&self) -> Vec<bool> {
        vec![self.nodes[0].0]
    }
}

/// AND of all inputs via a balanced tree: `n - 1` ANDs, `ceil(log2 n)` layers.
pub struct AndTree {
    nodes: Vec<bool>,
}

impl AndTree {
    pub fn new(bits: Vec<bool>) -> Self {
        assert!(!bits.is_empty());
        AndTree { nodes: bits }
    }
}

impl Circuit for AndTree {
    fn next_layer(&mut self, out: &mut Vec<(bool, bool)>) {
        if self.nodes.len() < 2 {
            return;
        }
        for j in 0..self.nodes.len() / 2 {
            out.push((self.nodes[2 * j], self.nodes[2 * j + 1]));
        }
    }

    fn feed(&mut self, _loc: &Local, results: &[bool]) {
        let n = self.nodes.len();
        let mut next = results.to_vec();
        if n % 2 == 1 {
            next.push(self.nodes[n - 1]);
        }
        self.nodes = next;
    }

    fn output(&self) -> Vec<bool> {
        vec![self.nodes[0]]
    }
}

/// All prefix borrows of `c - r`: output `i` is `[c_{0..=i} < r_{0..=i}]`.
/// Kogge-Stone, `ceil(log2 n)` layers; the last layer skips the `eq` terms.
pub struct PrefixBorrow {
    nodes: Vec<(bool, bool)>,
    dist: usize,
}

impl PrefixBorrow {
    pub fn new(loc: &Local, c: &[bool], r: &[bool]) -> Self {
        assert_eq!(c.len(), r.len());
        let nodes = c
            .iter()
            .zip(r)
            .map(|(&ci, &ri)| (ri & !ci, loc.xor_const(ri, !ci)))
            .collect();
        PrefixBorrow { nodes, dist: 1 }
    }

    fn last_layer(&self) -> bool {
        2 * self.dist >= self.nodes.len()
    }
}

impl Circuit for PrefixBorrow {
    fn next_layer(&mut self, out: &mut Vec<(bool, bool)>) {
        let n = self.nodes.len();
        if self.dist >= n {
            return;
        }
        let last = self.last_layer();
        for i in self.dist..n {
            let (hi, lo) = (self.nodes[i], self.nodes[i - self.dist]);
            out.push((hi.1, lo.0));
            if !last {
                out.push((hi.1, lo.1));
            }
        }
    }

    fn feed(&mut self, _loc: &Local, results: &[bool]) {
        let last = self.last_layer();
        let per = if last { 1 } else { 2 };
        let n = self.nodes.len();
        let mut next = self.nodes.clone();
        for (j, i) in (self.dist..n).enumerate() {
            let lt = self.nodes[i].0 ^ results[per * j];
            let eq = if last { false } else { results[per * j + 1] };
            next[i] = (lt, eq);
        }
        self.nodes = next;
        self.dist *= 2;
    }

    fn output(&self) -> Vec<bool> {
        self.nodes.iter().map(|n| n.0).collect()
    }
}

pub fn ceil_log2(n: u64) -> u64 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros() as u64
    }
}

/// Static AND count of a [`LessThanPublic`] over `n` bits.
pub fn lt_ands(n: u64) -> u64 {
    if n < 2 {
        0
    } else {
        2 * n - 3
    }
}

/// Static AND count of a [`PrefixBorrow`] over `n` bits.
pub fn prefix_ands(n: u64) -> u64 {
    let mut total = 0;
    let mut d = 1;
    while d < n {
        let last = 2 * d >= n;
        total += (n - d) * if last { 1 } else { 2 };
        d *= 2;
    }
    total
}
