//! Successive-cancellation list decoding, path metric rules and final
//! codeword selection.

use std::cmp::Ordering;
use std::f64::consts::LN_2;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::channel::BeecParams;
use crate::code::{bit_reversal_permute, polar_transform, CodeSpec};
use crate::epmu::EpmuTable;
use crate::error::{invalid, Error, Result};
use crate::llr::{LlrAlgebra, Ternary};
use crate::numeric::softplus;
use crate::sc::{compute_layer, node_op, start_layer};

/// How a decision LLR and a bit hypothesis update the path metric.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum PmUpdateRule {
    /// `ln(1 + e^{(−1)^{1−u} λ})`.
    #[default]
    Exact,
    /// `max(0, (−1)^{1−u} λ)`.
    MaxApprox,
    /// Piecewise-linear fit of the exact rule with breakpoints at `±2 ln 2`.
    Refined,
    /// Per-bit lookup on the ternary level.
    EpmuTable(Arc<EpmuTable>),
}

/// Serializable name of a [`PmUpdateRule`]; the table itself travels separately.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PmRuleKind {
    Exact,
    MaxApprox,
    Refined,
    Epmu,
}

impl PmUpdateRule {
    pub fn kind(&self) -> PmRuleKind {
        match self {
            Self::Exact => PmRuleKind::Exact,
            Self::MaxApprox => PmRuleKind::MaxApprox,
            Self::Refined => PmRuleKind::Refined,
            Self::EpmuTable(_) => PmRuleKind::Epmu,
        }
    }

    /// PM increment for bit `i`. `lambda` is the real value the decoder
    /// reports and `level` its ternary level, if any.
    #[inline]
    pub fn increment(&self, i: usize, lambda: f64, level: Option<Ternary>, u: u8) -> Result<f64> {
        let s = if u == 0 { -lambda } else { lambda };
        Ok(match self {
            Self::Exact => softplus(s),
            Self::MaxApprox => s.max(0.0),
            Self::Refined => refined_increment(s),
            Self::EpmuTable(table) => table.entry(i, level.ok_or(Error::NotTernary)?, u)?,
        })
    }
}

/// Refined increment as a function of `s = (−1)^{1−u} λ`.
#[inline]
pub fn refined_increment(s: f64) -> f64 {
    const T: f64 = 2.0 * LN_2;
    if s > T {
        s
    } else if s < -T {
        0.0
    } else {
        0.5 * s + LN_2
    }
}

/// `pm` updated by `rule` for a real-valued `lambda` (no EPMU table lookup).
pub fn pm_update(rule: &PmUpdateRule, pm: f64, lambda: f64, u: u8) -> Result<f64> {
    Ok(pm + rule.increment(0, lambda, None, u)?)
}

/// A completed path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ListEntry {
    /// Rank of the path in the final `(pm, id)` order.
    pub path_id: usize,
    pub u: Vec<u8>,
    pub codeword: Vec<u8>,
    pub pm: f64,
}

/// Output of [`scl_decode`], ordered by `path_id`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FinalList {
    pub entries: Vec<ListEntry>,
}

impl FinalList {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, codeword: &[u8]) -> bool {
        self.entries.iter().any(|e| e.codeword == codeword)
    }
}

/// Deepest tree supported by the list decoder.
pub const MAX_DEPTH: u32 = 24;

/// Reference-counted buffers of one length; shared buffers are replaced, never
/// copied, because every layer write covers the whole buffer.
#[derive(Debug, Clone)]
struct Pool<T> {
    len: usize,
    bufs: Vec<Vec<T>>,
    refs: Vec<u32>,
    free: Vec<u32>,
}

impl<T: Copy + Default> Pool<T> {
    fn new(len: usize) -> Self {
        Self {
            len,
            bufs: Vec::new(),
            refs: Vec::new(),
            free: Vec::new(),
        }
    }

    fn reset(&mut self) {
        self.free.clear();
        self.free.extend((0..self.bufs.len() as u32).rev());
        self.refs.iter_mut().for_each(|r| *r = 0);
    }

    fn acquire(&mut self) -> u32 {
        let id = self.free.pop().unwrap_or_else(|| {
            self.bufs.push(vec![T::default(); self.len]);
            self.refs.push(0);
            (self.bufs.len() - 1) as u32
        });
        self.refs[id as usize] = 1;
        id
    }

    #[inline]
    fn retain(&mut self, id: u32) {
        self.refs[id as usize] += 1;
    }

    #[inline]
    fn release(&mut self, id: u32) {
        let r = &mut self.refs[id as usize];
        *r -= 1;
        if *r == 0 {
            self.free.push(id);
        }
    }

    /// A buffer owned only by the caller; contents are unspecified.
    #[inline]
    fn for_overwrite(&mut self, id: u32) -> u32 {
        if self.refs[id as usize] == 1 {
            id
        } else {
            self.release(id);
            self.acquire()
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct PathRec {
    pm: f64,
    messages: [u32; MAX_DEPTH as usize],
    left: [u32; MAX_DEPTH as usize],
}

/// Reusable list decoder for one code depth.
#[derive(Debug, Clone)]
pub struct SclDecoder<A: LlrAlgebra> {
    algebra: A,
    m: u32,
    list_size: usize,
    messages: Vec<Pool<A::Llr>>,
    left: Vec<Pool<u8>>,
    paths: Vec<PathRec>,
    next_paths: Vec<PathRec>,
    candidates: Vec<(f64, usize)>,
    uses: Vec<u8>,
    /// Per information bit, the `(parent rank, bit)` of every surviving path.
    trellis: Vec<Vec<(u32, u8)>>,
    scratch: [Vec<u8>; 2],
}

impl<A: LlrAlgebra> SclDecoder<A> {
    pub fn new(algebra: A, m: u32, list_size: usize) -> Result<Self> {
        if list_size == 0 {
            return Err(invalid("list_size", "must be at least 1"));
        }
        if m > MAX_DEPTH {
            return Err(Error::TooLarge(1usize << m.min(63)));
        }
        let n = 1usize << m;
        Ok(Self {
            algebra,
            m,
            list_size,
            messages: (1..=m).map(|l| Pool::new(n >> l)).collect(),
            left: (1..=m).map(|l| Pool::new(n >> l)).collect(),
            paths: Vec::with_capacity(list_size),
            next_paths: Vec::with_capacity(list_size),
            candidates: Vec::with_capacity(2 * list_size),
            uses: Vec::with_capacity(list_size),
            trellis: Vec::new(),
            scratch: [vec![0; n], vec![0; n]],
        })
    }

    pub fn list_size(&self) -> usize {
        self.list_size
    }

    pub fn algebra(&self) -> &A {
        &self.algebra
    }

    fn decision_llr(&mut self, p: usize, channel: &[A::Llr], i: usize) -> A::Llr {
        let m = self.m;
        if m == 0 {
            return channel[0];
        }
        let path = &mut self.paths[p];
        for layer in start_layer(i, m)..=m {
            let idx = layer as usize - 1;
            let out_id = self.messages[idx].for_overwrite(path.messages[idx]);
            path.messages[idx] = out_id;
            let (head, tail) = self.messages.split_at_mut(idx);
            let parent: &[A::Llr] = if idx == 0 {
                channel
            } else {
                &head[idx - 1].bufs[path.messages[idx - 1] as usize]
            };
            let left = &self.left[idx].bufs[path.left[idx] as usize];
            let out = &mut tail[0].bufs[out_id as usize];
            compute_layer(&self.algebra, node_op(i, m, layer), parent, left, out);
        }
        self.messages[m as usize - 1].bufs[path.messages[m as usize - 1] as usize][0]
    }

    fn commit(&mut self, p: usize, i: usize, bit: u8) {
        let m = self.m;
        let path = &mut self.paths[p];
        let [cur, next] = &mut self.scratch;
        cur[0] = bit;
        let mut layer = m;
        while layer > 0 {
            let idx = layer as usize - 1;
            let s = 1usize << (m - layer);
            if (i >> (m - layer)) & 1 == 0 {
                let id = self.left[idx].for_overwrite(path.left[idx]);
                path.left[idx] = id;
                self.left[idx].bufs[id as usize].copy_from_slice(&cur[..s]);
                return;
            }
            let left = &self.left[idx].bufs[path.left[idx] as usize];
            for j in 0..s {
                next[j] = left[j] ^ cur[j];
                next[j + s] = cur[j];
            }
            std::mem::swap(cur, next);
            layer -= 1;
        }
    }

    fn release(&mut self, rec: &PathRec) {
        for idx in 0..self.m as usize {
            self.messages[idx].release(rec.messages[idx]);
            self.left[idx].release(rec.left[idx]);
        }
    }

    /// Decodes one frame.
    ///
    /// Every information bit splits each path into children `2·rank + u`; the
    /// `list_size` children with the smallest `(pm, id)` survive and are
    /// re-ranked. Frozen bits extend each path with `u = 0` and still pay the
    /// PM increment.
    pub fn decode(
        &mut self,
        spec: &CodeSpec,
        channel_llrs: &[A::Llr],
        rule: &PmUpdateRule,
    ) -> Result<FinalList> {
        let (m, n) = (self.m, 1usize << self.m);
        if spec.m() != m {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: spec.n(),
            });
        }
        if channel_llrs.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: channel_llrs.len(),
            });
        }
        let channel = bit_reversal_permute(channel_llrs, m)?;
        self.messages.iter_mut().for_each(Pool::reset);
        self.left.iter_mut().for_each(Pool::reset);
        let mut root = PathRec {
            pm: 0.0,
            messages: [0; MAX_DEPTH as usize],
            left: [0; MAX_DEPTH as usize],
        };
        for idx in 0..m as usize {
            root.messages[idx] = self.messages[idx].acquire();
            root.left[idx] = self.left[idx].acquire();
        }
        self.paths.clear();
        self.paths.push(root);
        let mut info_bits = 0;

        for i in 0..n {
            let frozen = spec.is_frozen(i);
            self.candidates.clear();
            for p in 0..self.paths.len() {
                let llr = self.decision_llr(p, &channel, i);
                let lambda = self.algebra.metric_llr(llr);
                let level = self.algebra.level(llr);
                let inc0 = rule.increment(i, lambda, level, 0)?;
                if frozen {
                    self.paths[p].pm += inc0;
                    self.commit(p, i, 0);
                    continue;
                }
                let inc1 = rule.increment(i, lambda, level, 1)?;
                let pm = self.paths[p].pm;
                self.candidates.push((pm + inc0, 2 * p));
                self.candidates.push((pm + inc1, 2 * p + 1));
            }
            if frozen {
                continue;
            }
            let l = self.list_size;
            if self.candidates.len() > l {
                self.candidates.select_nth_unstable_by(l - 1, by_pm_then_id);
                self.candidates.truncate(l);
            }
            self.candidates.sort_unstable_by(by_pm_then_id);

            // a parent with two surviving children is shared once and moved once
            self.uses.clear();
            self.uses.resize(self.paths.len(), 0);
            for &(_, id) in &self.candidates {
                self.uses[id / 2] += 1;
            }
            if self.trellis.len() <= info_bits {
                self.trellis.push(Vec::with_capacity(l));
            }
            let row = &mut self.trellis[info_bits];
            row.clear();
            self.next_paths.clear();
            for c in 0..self.candidates.len() {
                let (pm, id) = self.candidates[c];
                let parent = id / 2;
                let mut child = self.paths[parent];
                child.pm = pm;
                if self.uses[parent] == 2 {
                    self.uses[parent] = 1;
                    for idx in 0..m as usize {
                        self.messages[idx].retain(child.messages[idx]);
                        self.left[idx].retain(child.left[idx]);
                    }
                }
                row.push((parent as u32, (id & 1) as u8));
                self.next_paths.push(child);
            }
            for p in 0..self.paths.len() {
                if self.uses[p] == 0 {
                    let rec = self.paths[p];
                    self.release(&rec);
                }
            }
            std::mem::swap(&mut self.paths, &mut self.next_paths);
            for c in 0..self.candidates.len() {
                let bit = (self.candidates[c].1 & 1) as u8;
                self.commit(c, i, bit);
            }
            info_bits += 1;
        }

        let mut order: Vec<usize> = (0..self.paths.len()).collect();
        order.sort_by(|&a, &b| {
            self.paths[a]
                .pm
                .total_cmp(&self.paths[b].pm)
                .then(a.cmp(&b))
        });
        let info_set = spec.info_set();
        let entries = order
            .into_iter()
            .enumerate()
            .map(|(path_id, rank)| {
                let mut u = vec![0u8; n];
                let mut r = rank;
                for (row, &i) in self.trellis[..info_bits].iter().zip(info_set).rev() {
                    let (parent, bit) = row[r];
                    u[i] = bit;
                    r = parent as usize;
                }
                let codeword = polar_transform(&u, m).expect("length n");
                ListEntry {
                    path_id,
                    u,
                    codeword,
                    pm: self.paths[rank].pm,
                }
            })
            .collect();
        Ok(FinalList { entries })
    }
}

/// Orders candidates by path metric, then by id.
#[inline]
fn by_pm_then_id(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// One-shot SCL decoding with list size `list_size`; see [`SclDecoder::decode`].
pub fn scl_decode<A: LlrAlgebra>(
    spec: &CodeSpec,
    channel_llrs: &[A::Llr],
    algebra: &A,
    list_size: usize,
    rule: &PmUpdateRule,
) -> Result<FinalList> {
    SclDecoder::new(algebra.clone(), spec.m(), list_size)?.decode(spec, channel_llrs, rule)
}

/// Codeword of the entry with minimal PM; ties go to the lower `path_id`.
pub fn select_lowest_pm(list: &FinalList) -> Result<&ListEntry> {
    list.entries
        .iter()
        .min_by(|a, b| a.pm.total_cmp(&b.pm).then(a.path_id.cmp(&b.path_id)))
        .ok_or(Error::EmptyList)
}

/// Channel output used by in-list ML selection.
#[derive(Debug, Clone, Copy)]
pub enum ChannelObservation<'a> {
    /// Real channel outputs or LLRs (any positive scaling of `y`).
    BiAwgn(&'a [f64]),
    /// Quantizer levels of the 3Q channel.
    Beec(&'a [Ternary]),
}

/// `Σ_i y_i (−1)^{c_i}`, monotone in the BiAWGN log-likelihood.
pub fn biawgn_correlation(y: &[f64], codeword: &[u8]) -> f64 {
    y.iter()
        .zip(codeword)
        .map(|(&v, &c)| if c == 0 { v } else { -v })
        .sum()
}

/// Number of nonzero levels whose sign disagrees with the codeword.
pub fn contradictions(levels: &[Ternary], codeword: &[u8]) -> usize {
    levels
        .iter()
        .zip(codeword)
        .filter(|&(&l, &c)| matches!((l, c), (Ternary::Plus, 1) | (Ternary::Minus, 0)))
        .count()
}

/// `ln p(y | c)` for the BEEC.
pub fn beec_log_likelihood(levels: &[Ternary], codeword: &[u8], params: &BeecParams) -> f64 {
    levels
        .iter()
        .zip(codeword)
        .map(|(&l, &c)| params.transition(l, c).ln())
        .sum()
}

/// In-list ML: the entry maximizing `p(y | c)`; ties go to the lower `path_id`.
pub fn select_ml<'l>(list: &'l FinalList, obs: ChannelObservation<'_>) -> Result<&'l ListEntry> {
    let score = |e: &ListEntry| -> f64 {
        match obs {
            ChannelObservation::BiAwgn(y) => biawgn_correlation(y, &e.codeword),
            ChannelObservation::Beec(levels) => -(contradictions(levels, &e.codeword) as f64),
        }
    };
    let mut best: Option<(&ListEntry, f64)> = None;
    for e in &list.entries {
        let s = score(e);
        match best {
            Some((b, bs)) if s < bs || (s == bs && e.path_id > b.path_id) => {}
            _ => best = Some((e, s)),
        }
    }
    best.map(|(e, _)| e).ok_or(Error::EmptyList)
}

/// ML-LB decision: the transmitted codeword joins the list (last in tie
/// order) if absent, then in-list ML selects. Returns `true` on error.
pub fn mllb_error(
    list: &FinalList,
    true_codeword: &[u8],
    obs: ChannelObservation<'_>,
) -> Result<bool> {
    if list.contains(true_codeword) {
        return Ok(select_ml(list, obs)?.codeword != true_codeword);
    }
    let mut augmented = list.clone();
    augmented.entries.push(ListEntry {
        path_id: list.len(),
        u: polar_transform(true_codeword, crate::code::depth_of(true_codeword.len())?)?,
        codeword: true_codeword.to_vec(),
        pm: f64::INFINITY,
    });
    Ok(select_ml(&augmented, obs)?.codeword != true_codeword)
}

/// Decodes and reports whether the ML-LB decision is wrong.
pub fn mllb_trial<A: LlrAlgebra>(
    spec: &CodeSpec,
    channel_llrs: &[A::Llr],
    true_codeword: &[u8],
    algebra: &A,
    list_size: usize,
    rule: &PmUpdateRule,
    obs: ChannelObservation<'_>,
) -> Result<bool> {
    let list = scl_decode(spec, channel_llrs, algebra, list_size, rule)?;
    mllb_error(&list, true_codeword, obs)
}
