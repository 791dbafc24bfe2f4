//! Streaming template matcher over click records.
//!
//! An instance of a template starts at offset `o` when every `Require(B)` slot
//! sees a photon detected in basis `B`; free slots accept anything, lost
//! photons included. The instance contributes the product of its required
//! outcomes (times the template phase) to an exact integer accumulator.
//!
//! Accumulators are plain integers, so chunked and parallel scans merge by
//! addition and agree bit for bit with a single pass.

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::pauli::Phase;
use crate::record::{ClickRecord, Event};
use crate::scalar::Scalar;
use crate::sim::{ConfigError, ExperimentConfig, Simulator};
use crate::template::{Slot, Template, TemplateId};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanMode {
    /// Every start offset is tested.
    #[default]
    Overlapping,
    /// Greedy left-to-right: after a match the next `span - 1` offsets are skipped.
    NonOverlapping,
}

impl std::str::FromStr for ScanMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "overlapping" | "all" => Ok(ScanMode::Overlapping),
            "non-overlapping" | "greedy" => Ok(ScanMode::NonOverlapping),
            _ => Err(format!("unknown scan mode {s:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScanOptions {
    pub mode: ScanMode,
    /// Ignore instances starting inside the record's burn-in prefix.
    pub skip_burn_in: bool,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            mode: ScanMode::Overlapping,
            skip_burn_in: true,
        }
    }
}

/// Correlator estimate `<Γ>` for one template.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CorrelatorEstimate {
    pub id: TemplateId,
    pub match_count: u64,
    pub signed_sum: i64,
    /// Matches starting less than one span after the previous match.
    pub overlapping: u64,
}

impl CorrelatorEstimate {
    pub fn empty(id: TemplateId) -> Self {
        CorrelatorEstimate {
            id,
            match_count: 0,
            signed_sum: 0,
            overlapping: 0,
        }
    }

    pub fn l(&self) -> u32 {
        self.id.l
    }

    /// `signed_sum / match_count`; NaN without matches.
    pub fn mean<T: Scalar>(&self) -> T {
        if self.match_count == 0 {
            return T::nan();
        }
        T::lit(self.signed_sum as f64) / T::count(self.match_count)
    }

    /// `sqrt((1 - mean^2) / match_count)`, treating instances as independent.
    pub fn stderr<T: Scalar>(&self) -> T {
        if self.match_count == 0 {
            return T::nan();
        }
        let m: T = self.mean();
        ((T::one() - m * m).max(T::zero()) / T::count(self.match_count)).sqrt()
    }

    pub fn overlap_fraction<T: Scalar>(&self) -> T {
        if self.match_count == 0 {
            return T::zero();
        }
        T::count(self.overlapping) / T::count(self.match_count)
    }

    /// Combines estimates of the same template from disjoint data.
    pub fn merge(&mut self, other: &CorrelatorEstimate) {
        debug_assert_eq!(self.id, other.id);
        self.match_count += other.match_count;
        self.signed_sum += other.signed_sum;
        self.overlapping += other.overlapping;
    }
}

#[derive(Clone, Debug)]
struct Pattern {
    id: TemplateId,
    span: usize,
    required: Vec<(usize, u8)>,
    sign_bit: bool,
}

impl Pattern {
    fn compile(t: &Template) -> Self {
        let required = t
            .slots()
            .iter()
            .enumerate()
            .filter_map(|(p, s)| match s {
                Slot::Require(b) => Some((p, b.code())),
                Slot::Free => None,
            })
            .collect();
        Pattern {
            id: t.id(),
            span: t.span(),
            required,
            sign_bit: t.phase() != Phase::ONE,
        }
    }

    /// Outcome parity of an instance at `window[0..span]`, or `None`.
    #[inline]
    fn test(&self, window: &[Event]) -> Option<bool> {
        let mut parity = self.sign_bit;
        for &(p, code) in &self.required {
            let b = window[p].byte();
            if b >> 1 != code {
                return None;
            }
            parity ^= b & 1 == 1;
        }
        Some(parity)
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct PatState {
    matches: u64,
    signed_sum: i64,
    overlapping: u64,
    last_match: Option<u64>,
    next_allowed: u64,
}

/// Tests absolute offsets `offsets` against one pattern. `events[k]` is the
/// photon at absolute position `base + k`; every tested window must fit.
fn scan_block(
    pat: &Pattern,
    events: &[Event],
    base: u64,
    offsets: Range<u64>,
    mode: ScanMode,
    st: &mut PatState,
) {
    for o in offsets {
        if mode == ScanMode::NonOverlapping && o < st.next_allowed {
            continue;
        }
        let k = (o - base) as usize;
        if let Some(parity) = pat.test(&events[k..k + pat.span]) {
            st.matches += 1;
            st.signed_sum += if parity { -1 } else { 1 };
            if matches!(st.last_match, Some(m) if o - m < pat.span as u64) {
                st.overlapping += 1;
            }
            st.last_match = Some(o);
            st.next_allowed = o + pat.span as u64;
        }
    }
}

/// Incremental scanner: feed chunks in order, then call [`Scanner::finish`].
/// Holds at most `max_span - 1` photons between chunks.
pub struct Scanner {
    patterns: Vec<Pattern>,
    states: Vec<PatState>,
    mode: ScanMode,
    buf: Vec<Event>,
    buf_start: u64,
    next_offset: u64,
    max_span: usize,
}

impl Scanner {
    /// `first_offset` is the first start position considered (the burn-in).
    pub fn new(templates: &[Template], mode: ScanMode, first_offset: u64) -> Self {
        let patterns: Vec<Pattern> = templates.iter().map(Pattern::compile).collect();
        let max_span = patterns.iter().map(|p| p.span).max().unwrap_or(1);
        Scanner {
            states: vec![PatState::default(); patterns.len()],
            patterns,
            mode,
            buf: Vec::new(),
            buf_start: 0,
            next_offset: first_offset,
            max_span,
        }
    }

    pub fn feed(&mut self, chunk: &[Event]) {
        self.buf.extend_from_slice(chunk);
        let end = self.buf_start + self.buf.len() as u64;
        let ready_end = (end + 1).saturating_sub(self.max_span as u64);
        if ready_end > self.next_offset {
            let start = self.next_offset.max(self.buf_start);
            for (pat, st) in self.patterns.iter().zip(&mut self.states) {
                scan_block(pat, &self.buf, self.buf_start, start..ready_end, self.mode, st);
            }
            self.next_offset = ready_end;
        }
        let keep_from = self.next_offset.max(self.buf_start);
        let drop = ((keep_from - self.buf_start) as usize).min(self.buf.len());
        self.buf.drain(..drop);
        self.buf_start += drop as u64;
    }

    pub fn finish(self) -> Vec<CorrelatorEstimate> {
        let end = self.buf_start + self.buf.len() as u64;
        let start = self.next_offset.max(self.buf_start);
        self.patterns
            .iter()
            .zip(self.states)
            .map(|(pat, mut st)| {
                let stop = (end + 1).saturating_sub(pat.span as u64).max(start);
                scan_block(pat, &self.buf, self.buf_start, start..stop, self.mode, &mut st);
                CorrelatorEstimate {
                    id: pat.id,
                    match_count: st.matches,
                    signed_sum: st.signed_sum,
                    overlapping: st.overlapping,
                }
            })
            .collect()
    }
}

fn first_offset(record: &ClickRecord, opts: &ScanOptions) -> u64 {
    if opts.skip_burn_in {
        record.burn_in()
    } else {
        0
    }
}

/// Single sequential pass over `record`.
pub fn scan(record: &ClickRecord, templates: &[Template], opts: &ScanOptions) -> Vec<CorrelatorEstimate> {
    let mut s = Scanner::new(templates, opts.mode, first_offset(record, opts));
    s.feed(record.events());
    s.finish()
}

/// Parallel scan over offset chunks of `chunk_size`, each reading `span - 1`
/// photons past its end. Results equal [`scan`] exactly. Greedy
/// non-overlapping matching is inherently sequential and falls back to it.
pub fn scan_chunked(
    record: &ClickRecord,
    templates: &[Template],
    opts: &ScanOptions,
    chunk_size: usize,
) -> Vec<CorrelatorEstimate> {
    if opts.mode == ScanMode::NonOverlapping {
        return scan(record, templates, opts);
    }
    let events = record.events();
    let n = events.len() as u64;
    let first = first_offset(record, opts).min(n);
    let chunk = chunk_size.max(1) as u64;
    let starts: Vec<u64> = (first..n).step_by(chunk as usize).collect();
    let patterns: Vec<Pattern> = templates.iter().map(Pattern::compile).collect();

    let partials: Vec<Vec<PatState>> = starts
        .par_iter()
        .map(|&a| {
            let b = (a + chunk).min(n);
            patterns
                .iter()
                .map(|pat| {
                    let span = pat.span as u64;
                    let mut st = PatState::default();
                    // Recover the previous match so the overlap count stitches.
                    let look = a.saturating_sub(span - 1).max(first);
                    for o in look..a {
                        if o + span <= n && pat.test(&events[o as usize..(o + span) as usize]).is_some() {
                            st.last_match = Some(o);
                        }
                    }
                    let stop = b.min((n + 1).saturating_sub(span)).max(a);
                    scan_block(pat, events, 0, a..stop, ScanMode::Overlapping, &mut st);
                    st
                })
                .collect()
        })
        .collect();

    patterns
        .iter()
        .enumerate()
        .map(|(i, pat)| {
            let mut est = CorrelatorEstimate::empty(pat.id);
            for part in &partials {
                est.match_count += part[i].matches;
                est.signed_sum += part[i].signed_sum;
                est.overlapping += part[i].overlapping;
            }
            est
        })
        .collect()
}

/// Simulates `config` as `n_streams` independent chains sharing its photon
/// budget and scans each on the fly, without materialising the records.
/// Every chain starts fresh, so each skips its own burn-in.
pub fn simulate_and_scan(
    config: &ExperimentConfig,
    templates: &[Template],
    mode: ScanMode,
    n_streams: u64,
) -> Result<Vec<CorrelatorEstimate>, ConfigError> {
    config.validate()?;
    let k = n_streams.max(1);
    let per_stream: Vec<Vec<CorrelatorEstimate>> = (0..k)
        .into_par_iter()
        .map(|s| {
            let n = config.n_photons / k + u64::from(s < config.n_photons % k);
            let cfg = ExperimentConfig {
                n_photons: n,
                burn_in: config.burn_in.min(n),
                ..config.clone()
            };
            let mut sim = Simulator::new(&cfg, s)?;
            let mut scanner = Scanner::new(templates, mode, cfg.burn_in);
            while let Some(chunk) = sim.next_chunk(1 << 16) {
                scanner.feed(chunk);
            }
            Ok(scanner.finish())
        })
        .collect::<Result<_, ConfigError>>()?;
    let mut total: Vec<CorrelatorEstimate> = templates.iter().map(|t| CorrelatorEstimate::empty(t.id())).collect();
    for part in &per_stream {
        for (t, p) in total.iter_mut().zip(part) {
            t.merge(p);
        }
    }
    Ok(total)
}
