//! Per-tour store of partial compositions of action ATFs.
//!
//! Actions `a_1..a_n` sit between boundaries `0..n`; `a_{i,j}` is the
//! composition of `a_{i+1}, ..., a_j`. Level 0 splits the actions into blocks
//! of about `n^(1/k)`; each block's full composition is an action of the
//! next level, up to a single top block. Inside a block every boundary is a
//! node of a balanced search tree and stores its compositions with all its
//! descendants, so an in-block range is joined from at most two stored
//! pieces. Blocks also keep their prefix and suffix compositions.
//!
//! Stored compositions are filled eagerly on build and lazily after updates.

use std::borrow::Cow;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::OnceLock;

use crate::plf::{compose, Atf};

pub const DEFAULT_LEVELS: usize = 2;

/// An action's arrival time function together with an identifier of the
/// action it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionAtf {
    pub atf: Atf,
    pub action_id: u64,
}

impl ActionAtf {
    pub fn new(atf: Atf, action_id: u64) -> Self {
        ActionAtf { atf, action_id }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StoreError {
    #[error("index {index} out of range for {len} actions")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("empty range {from}..{to}")]
    EmptyRange { from: usize, to: usize },
    #[error("composition has an empty domain")]
    EmptyDomain,
}

/// Number of compose calls, split by purpose.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ComposeCounts {
    pub build: u64,
    pub maintenance: u64,
    pub query: u64,
}

type Cell = OnceLock<Option<Atf>>;

fn fresh(n: usize) -> Vec<Cell> {
    (0..n).map(|_| OnceLock::new()).collect()
}

#[derive(Clone)]
struct Block {
    /// Index of the first action of this block within its level.
    start: usize,
    len: usize,
    /// Subtree interval `[lo, hi]` of every boundary node `0..=len`.
    span: Vec<(usize, usize)>,
    /// `right[h][d - h - 1] = a_{h,d}` for descendants `d > h`.
    right: Vec<Vec<Cell>>,
    /// `left[h][h - 1 - d] = a_{d,h}` for descendants `d < h`.
    left: Vec<Vec<Cell>>,
    /// `prefix[x - 1] = a_{0,x}`.
    prefix: Vec<Cell>,
    /// `suffix[x] = a_{x,len}`.
    suffix: Vec<Cell>,
}

fn fill_spans(lo: usize, hi: usize, span: &mut [(usize, usize)]) {
    let mid = (lo + hi) / 2;
    span[mid] = (lo, hi);
    if mid > lo {
        fill_spans(lo, mid - 1, span);
    }
    if mid < hi {
        fill_spans(mid + 1, hi, span);
    }
}

impl Block {
    fn new(start: usize, len: usize) -> Block {
        let mut span = vec![(0, 0); len + 1];
        fill_spans(0, len, &mut span);
        let right = span.iter().enumerate().map(|(h, &(_, hi))| fresh(hi - h)).collect();
        let left = span.iter().enumerate().map(|(h, &(lo, _))| fresh(h - lo)).collect();
        Block {
            start,
            len,
            span,
            right,
            left,
            prefix: fresh(len),
            suffix: fresh(len),
        }
    }

    fn end(&self) -> usize {
        self.start + self.len
    }

    /// Lowest common ancestor of local boundaries `i < j`.
    fn lca(&self, i: usize, j: usize) -> usize {
        let (mut lo, mut hi) = (0, self.len);
        loop {
            let mid = (lo + hi) / 2;
            if j < mid {
                hi = mid - 1;
            } else if i > mid {
                lo = mid + 1;
            } else {
                return mid;
            }
        }
    }

    /// Resets every stored composition that contains local action `x`
    /// (between boundaries `x - 1` and `x`).
    fn invalidate(&mut self, x: usize) {
        for h in 0..=self.len {
            let (lo, hi) = self.span[h];
            if h < x && hi >= x {
                for d in x..=hi {
                    self.right[h][d - h - 1] = OnceLock::new();
                }
            }
            if h >= x && lo < x {
                for d in lo..x {
                    self.left[h][h - 1 - d] = OnceLock::new();
                }
            }
        }
        for y in x..=self.len {
            self.prefix[y - 1] = OnceLock::new();
        }
        for y in 0..x {
            self.suffix[y] = OnceLock::new();
        }
    }
}

#[derive(Clone)]
struct Level {
    blocks: Vec<Block>,
}

impl Level {
    fn block_of(&self, action: usize) -> usize {
        self.blocks.partition_point(|b| b.start <= action) - 1
    }
}

/// Smallest `p` with `p^k >= n`.
fn block_size(n: usize, k: usize) -> usize {
    let mut p = (n as f64).powf(1.0 / k as f64).floor().max(1.0) as usize;
    while (p as u128).pow(k as u32) < n as u128 {
        p += 1;
    }
    p
}

pub struct SegmentStore {
    k: usize,
    /// Physical actions; removed ones hold identities until the next rebuild.
    actions: Vec<ActionAtf>,
    /// Physical index of every live action, in order.
    live: Vec<usize>,
    levels: Vec<Level>,
    structural_changes: usize,
    build_count: AtomicU64,
    maintenance_count: AtomicU64,
    query_count: AtomicU64,
}

impl Clone for SegmentStore {
    fn clone(&self) -> Self {
        let counts = self.counts();
        SegmentStore {
            k: self.k,
            actions: self.actions.clone(),
            live: self.live.clone(),
            levels: self.levels.clone(),
            structural_changes: self.structural_changes,
            build_count: AtomicU64::new(counts.build),
            maintenance_count: AtomicU64::new(counts.maintenance),
            query_count: AtomicU64::new(counts.query),
        }
    }
}

impl fmt::Debug for SegmentStore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SegmentStore")
            .field("k", &self.k)
            .field("len", &self.len())
            .field("levels", &self.levels.len())
            .finish()
    }
}

impl SegmentStore {
    /// Builds the store with `k >= 1` levels and fills every stored
    /// composition.
    pub fn build(actions: Vec<ActionAtf>, k: usize) -> SegmentStore {
        assert!(k >= 1, "at least one level");
        let live = (0..actions.len()).collect();
        let mut store = SegmentStore {
            k,
            actions,
            live,
            levels: Vec::new(),
            structural_changes: 0,
            build_count: AtomicU64::new(0),
            maintenance_count: AtomicU64::new(0),
            query_count: AtomicU64::new(0),
        };
        store.layout();
        store
    }

    pub fn len(&self) -> usize {
        self.live.len()
    }

    pub fn is_empty(&self) -> bool {
        self.live.is_empty()
    }

    pub fn levels(&self) -> usize {
        self.k
    }

    /// Action `i` (1-based).
    pub fn action(&self, i: usize) -> &ActionAtf {
        &self.actions[self.live[i - 1]]
    }

    pub fn actions(&self) -> impl Iterator<Item = &ActionAtf> + '_ {
        self.live.iter().map(|&q| &self.actions[q])
    }

    pub fn counts(&self) -> ComposeCounts {
        ComposeCounts {
            build: self.build_count.load(Ordering::Relaxed),
            maintenance: self.maintenance_count.load(Ordering::Relaxed),
            query: self.query_count.load(Ordering::Relaxed),
        }
    }

    pub fn reset_counts(&self) {
        self.build_count.store(0, Ordering::Relaxed);
        self.maintenance_count.store(0, Ordering::Relaxed);
        self.query_count.store(0, Ordering::Relaxed);
    }

    /// `a_{i,j}`: the actions `i+1..=j` composed in order.
    pub fn query(&self, i: usize, j: usize) -> Result<Atf, StoreError> {
        self.query_counted(i, j).map(|(a, _)| a)
    }

    /// Like [`SegmentStore::query`], also returning the number of compose
    /// calls spent joining stored pieces.
    pub fn query_counted(&self, i: usize, j: usize) -> Result<(Atf, u64), StoreError> {
        let mut joins = 0;
        let a = self.query_cow(i, j, &mut joins)?.into_owned();
        Ok((a, joins))
    }

    /// Composition of the whole tour.
    pub fn full(&self) -> Result<Atf, StoreError> {
        self.query(0, self.len())
    }

    fn query_cow(&self, i: usize, j: usize, joins: &mut u64) -> Result<Cow<'_, Atf>, StoreError> {
        let n = self.len();
        if j > n {
            return Err(StoreError::IndexOutOfRange { index: j, len: n });
        }
        if i >= j {
            return Err(StoreError::EmptyRange { from: i, to: j });
        }
        let lo = if i == 0 { 0 } else { self.live[i - 1] + 1 };
        let hi = if j == n { self.actions.len() } else { self.live[j - 1] + 1 };
        let before = *joins;
        let out = self.query_level(0, lo, hi, joins);
        self.query_count.fetch_add(*joins - before, Ordering::Relaxed);
        out
    }

    fn query_level(
        &self,
        lvl: usize,
        i: usize,
        j: usize,
        joins: &mut u64,
    ) -> Result<Cow<'_, Atf>, StoreError> {
        let ctr = &self.maintenance_count;
        let level = &self.levels[lvl];
        let bi = level.block_of(i);
        let bj = level.block_of(j - 1);
        if bi == bj {
            let blk = &level.blocks[bi];
            let (li, lj) = (i - blk.start, j - blk.start);
            let stored = if li == 0 {
                self.prefix(lvl, bi, lj, ctr)
            } else if lj == blk.len {
                self.suffix(lvl, bi, li, ctr)
            } else {
                let h = blk.lca(li, lj);
                if h == li {
                    self.right(lvl, bi, h, lj, ctr)
                } else if h == lj {
                    self.left(lvl, bi, h, li, ctr)
                } else {
                    let first = self.left(lvl, bi, h, li, ctr).ok_or(StoreError::EmptyDomain)?;
                    let second = self.right(lvl, bi, h, lj, ctr).ok_or(StoreError::EmptyDomain)?;
                    *joins += 1;
                    let joined = compose(first, second).map_err(|_| StoreError::EmptyDomain)?;
                    return Ok(Cow::Owned(joined));
                }
            };
            return stored.map(Cow::Borrowed).ok_or(StoreError::EmptyDomain);
        }
        let (head_blk, tail_blk) = (&level.blocks[bi], &level.blocks[bj]);
        let mut parts: Vec<Cow<'_, Atf>> = Vec::with_capacity(3);
        let up_lo = if i == head_blk.start {
            bi
        } else {
            let s = self.suffix(lvl, bi, i - head_blk.start, ctr);
            parts.push(Cow::Borrowed(s.ok_or(StoreError::EmptyDomain)?));
            bi + 1
        };
        let up_hi = if j == tail_blk.end() { bj + 1 } else { bj };
        if up_lo < up_hi {
            parts.push(self.query_level(lvl + 1, up_lo, up_hi, joins)?);
        }
        if j != tail_blk.end() {
            let p = self.prefix(lvl, bj, j - tail_blk.start, ctr);
            parts.push(Cow::Borrowed(p.ok_or(StoreError::EmptyDomain)?));
        }
        let mut iter = parts.into_iter();
        let mut acc = iter.next().expect("range is not empty");
        for next in iter {
            *joins += 1;
            acc = Cow::Owned(compose(&acc, &next).map_err(|_| StoreError::EmptyDomain)?);
        }
        Ok(acc)
    }

    /// Action `q` of level `lvl`: a physical action on level 0, otherwise the
    /// full composition of block `q` one level down.
    fn action_at(&self, lvl: usize, q: usize, ctr: &AtomicU64) -> Option<&Atf> {
        if lvl == 0 {
            Some(&self.actions[q].atf)
        } else {
            let len = self.levels[lvl - 1].blocks[q].len;
            self.prefix(lvl - 1, q, len, ctr)
        }
    }

    fn join(&self, first: &Atf, second: &Atf, ctr: &AtomicU64) -> Option<Atf> {
        ctr.fetch_add(1, Ordering::Relaxed);
        compose(first, second).ok()
    }

    fn prefix(&self, lvl: usize, b: usize, x: usize, ctr: &AtomicU64) -> Option<&Atf> {
        let blk = &self.levels[lvl].blocks[b];
        blk.prefix[x - 1]
            .get_or_init(|| {
                if x == 1 {
                    self.action_at(lvl, blk.start, ctr).cloned()
                } else {
                    let head = self.prefix(lvl, b, x - 1, ctr)?;
                    let last = self.action_at(lvl, blk.start + x - 1, ctr)?;
                    self.join(head, last, ctr)
                }
            })
            .as_ref()
    }

    fn suffix(&self, lvl: usize, b: usize, x: usize, ctr: &AtomicU64) -> Option<&Atf> {
        let blk = &self.levels[lvl].blocks[b];
        blk.suffix[x]
            .get_or_init(|| {
                let first = self.action_at(lvl, blk.start + x, ctr);
                if x + 1 == blk.len {
                    first.cloned()
                } else {
                    let rest = self.suffix(lvl, b, x + 1, ctr)?;
                    self.join(first?, rest, ctr)
                }
            })
            .as_ref()
    }

    fn right(&self, lvl: usize, b: usize, h: usize, d: usize, ctr: &AtomicU64) -> Option<&Atf> {
        let blk = &self.levels[lvl].blocks[b];
        blk.right[h][d - h - 1]
            .get_or_init(|| {
                let last = self.action_at(lvl, blk.start + d - 1, ctr);
                if d == h + 1 {
                    last.cloned()
                } else {
                    let head = self.right(lvl, b, h, d - 1, ctr)?;
                    self.join(head, last?, ctr)
                }
            })
            .as_ref()
    }

    fn left(&self, lvl: usize, b: usize, h: usize, d: usize, ctr: &AtomicU64) -> Option<&Atf> {
        let blk = &self.levels[lvl].blocks[b];
        blk.left[h][h - 1 - d]
            .get_or_init(|| {
                let first = self.action_at(lvl, blk.start + d, ctr);
                if d + 1 == h {
                    first.cloned()
                } else {
                    let rest = self.left(lvl, b, h, d + 1, ctr)?;
                    self.join(first?, rest, ctr)
                }
            })
            .as_ref()
    }

    /// Lays out all levels for the current physical actions and fills every
    /// cell.
    fn layout(&mut self) {
        self.levels.clear();
        let n = self.actions.len();
        if n == 0 {
            return;
        }
        let p = block_size(n, self.k);
        let mut count = n;
        loop {
            let blocks: Vec<Block> = (0..count)
                .step_by(p)
                .map(|s| Block::new(s, p.min(count - s)))
                .collect();
            let nb = blocks.len();
            self.levels.push(Level { blocks });
            if nb <= 1 {
                break;
            }
            count = nb;
        }
        self.fill_all();
    }

    fn fill_all(&self) {
        let ctr = &self.build_count;
        for (lvl, level) in self.levels.iter().enumerate() {
            for (b, blk) in level.blocks.iter().enumerate() {
                for x in 1..=blk.len {
                    self.prefix(lvl, b, x, ctr);
                }
                for x in 0..blk.len {
                    self.suffix(lvl, b, x, ctr);
                }
                for h in 0..=blk.len {
                    let (lo, hi) = blk.span[h];
                    for d in h + 1..=hi {
                        self.right(lvl, b, h, d, ctr);
                    }
                    for d in lo..h {
                        self.left(lvl, b, h, d, ctr);
                    }
                }
            }
        }
    }

    /// Discards removed slots and rebalances all blocks.
    pub fn rebuild(&mut self) {
        let live = std::mem::take(&mut self.live);
        let mut old = std::mem::take(&mut self.actions);
        self.actions = live.iter().map(|&q| std::mem::replace(&mut old[q], placeholder())).collect();
        self.live = (0..self.actions.len()).collect();
        self.structural_changes = 0;
        self.layout();
    }

    fn invalidate(&mut self, lvl: usize, q: usize) {
        if lvl >= self.levels.len() {
            return;
        }
        let level = &mut self.levels[lvl];
        let b = level.block_of(q);
        let blk = &mut level.blocks[b];
        blk.invalidate(q - blk.start + 1);
        self.invalidate(lvl + 1, b);
    }

    fn check_action(&self, i: usize) -> Result<(), StoreError> {
        if i == 0 || i > self.len() {
            return Err(StoreError::IndexOutOfRange { index: i, len: self.len() });
        }
        Ok(())
    }

    /// Replaces action `i` (1-based).
    pub fn update_action(&mut self, i: usize, action: ActionAtf) -> Result<(), StoreError> {
        self.check_action(i)?;
        let q = self.live[i - 1];
        self.actions[q] = action;
        self.invalidate(0, q);
        Ok(())
    }

    /// Removes action `i` (1-based) and returns it. The slot holds an
    /// identity until the next rebuild.
    pub fn remove_action(&mut self, i: usize) -> Result<ActionAtf, StoreError> {
        self.check_action(i)?;
        let q = self.live[i - 1];
        let (lo, hi) = self.live_range();
        let old = std::mem::replace(&mut self.actions[q], ActionAtf::new(Atf::identity(lo, hi), u64::MAX));
        self.live.remove(i - 1);
        self.invalidate(0, q);
        self.structural_change();
        Ok(old)
    }

    /// Inserts `action` after action `i`, so that it becomes action `i + 1`.
    pub fn insert_action(&mut self, i: usize, action: ActionAtf) -> Result<(), StoreError> {
        if i > self.len() {
            return Err(StoreError::IndexOutOfRange { index: i, len: self.len() });
        }
        let has_holes = self.live.len() < self.actions.len();
        let widens = {
            let (lo, hi) = self.live_range();
            let (alo, ahi) = atf_range(&action.atf);
            alo < lo || ahi > hi
        };
        let pos = if i == 0 { 0 } else { self.live[i - 1] + 1 };
        self.actions.insert(pos, action);
        for q in self.live.iter_mut() {
            if *q >= pos {
                *q += 1;
            }
        }
        self.live.insert(i, pos);
        if self.levels.is_empty() || (has_holes && widens) {
            // identities in removed slots must cover every live action
            self.rebuild();
            return Ok(());
        }
        let level = &mut self.levels[0];
        let b = level.block_of(pos.min(self.actions.len() - 2));
        let start = level.blocks[b].start;
        level.blocks[b] = Block::new(start, level.blocks[b].len + 1);
        for blk in &mut level.blocks[b + 1..] {
            blk.start += 1;
        }
        self.invalidate(1, b);
        self.structural_change();
        Ok(())
    }

    fn structural_change(&mut self) {
        self.structural_changes += 1;
        let threshold = ((self.len() + 1) as f64).log2().ceil().max(1.0) as usize;
        if self.structural_changes >= threshold {
            self.rebuild();
        }
    }

    /// Smallest departure and largest arrival over the live actions.
    fn live_range(&self) -> (f64, f64) {
        self.actions().map(|a| atf_range(&a.atf)).fold(
            (f64::INFINITY, f64::NEG_INFINITY),
            |(lo, hi), (a, b)| (lo.min(a), hi.max(b)),
        )
    }

    /// Tour after inserting a pickup after action `i` and a delivery after
    /// action `j >= i`. `after_i` and `after_j` replace actions `i` and `j`
    /// with versions that travel to the new stops; `pickup` travels on to
    /// action `i + 1` (or to the delivery when `i == j`, in which case
    /// `after_j` is unused) and `delivery` to action `j + 1`.
    ///
    /// Returns the composition and the number of compose calls spent.
    pub fn eval_insertion(
        &self,
        i: usize,
        j: usize,
        after_i: &Atf,
        pickup: &Atf,
        after_j: &Atf,
        delivery: &Atf,
    ) -> Result<(Atf, u64), StoreError> {
        let n = self.len();
        if i == 0 || j > n || i > j {
            return Err(StoreError::IndexOutOfRange { index: if i == 0 { i } else { j }, len: n });
        }
        let mut joins = 0;
        let mut parts: Vec<Cow<'_, Atf>> = Vec::with_capacity(7);
        if i > 1 {
            parts.push(self.query_cow(0, i - 1, &mut joins)?);
        }
        parts.push(Cow::Borrowed(after_i));
        parts.push(Cow::Borrowed(pickup));
        if i < j {
            if j - 1 > i {
                parts.push(self.query_cow(i, j - 1, &mut joins)?);
            }
            parts.push(Cow::Borrowed(after_j));
        }
        parts.push(Cow::Borrowed(delivery));
        if j < n {
            parts.push(self.query_cow(j, n, &mut joins)?);
        }
        let before = joins;
        let out = chain(parts, &mut joins)?;
        self.query_count.fetch_add(joins - before, Ordering::Relaxed);
        Ok((out, joins))
    }

    /// Tour with actions `from..=to` replaced by `bridge`: the composition
    /// `a_{to,n} ∘ bridge ∘ a_{0,from-1}`. `from == to + 1` inserts `bridge`.
    pub fn eval_removal(&self, from: usize, to: usize, bridge: &Atf) -> Result<Atf, StoreError> {
        let n = self.len();
        if from == 0 || to > n || from > to + 1 {
            return Err(StoreError::IndexOutOfRange { index: from, len: n });
        }
        let mut joins = 0;
        let mut parts: Vec<Cow<'_, Atf>> = Vec::with_capacity(3);
        if from > 1 {
            parts.push(self.query_cow(0, from - 1, &mut joins)?);
        }
        parts.push(Cow::Borrowed(bridge));
        if to < n {
            parts.push(self.query_cow(to, n, &mut joins)?);
        }
        let before = joins;
        let out = chain(parts, &mut joins)?;
        self.query_count.fetch_add(joins - before, Ordering::Relaxed);
        Ok(out)
    }
}

/// Exchanges segment `seg_a` of tour `a` with segment `seg_b` of tour `b`.
/// Each bridge is the caller's composition of the incoming segment with its
/// connecting travel; see [`SegmentStore::eval_removal`].
pub fn eval_swap(
    a: &SegmentStore,
    seg_a: (usize, usize),
    bridge_a: &Atf,
    b: &SegmentStore,
    seg_b: (usize, usize),
    bridge_b: &Atf,
) -> Result<(Atf, Atf), StoreError> {
    let new_a = a.eval_removal(seg_a.0, seg_a.1, bridge_a)?;
    let new_b = b.eval_removal(seg_b.0, seg_b.1, bridge_b)?;
    Ok((new_a, new_b))
}

fn chain(parts: Vec<Cow<'_, Atf>>, joins: &mut u64) -> Result<Atf, StoreError> {
    let mut iter = parts.into_iter();
    let mut acc = iter.next().expect("at least one part").into_owned();
    for next in iter {
        *joins += 1;
        acc = compose(&acc, &next).map_err(|_| StoreError::EmptyDomain)?;
    }
    Ok(acc)
}

fn atf_range(a: &Atf) -> (f64, f64) {
    (a.t_min(), a.t_max().max(*a.vs().last().unwrap()))
}

fn placeholder() -> ActionAtf {
    ActionAtf::new(Atf::identity(0.0, 0.0), u64::MAX)
}
