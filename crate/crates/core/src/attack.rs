//! Ciphertext-only divide-and-conquer key recovery.
//!
//! A stage enumerates every joint fill `I` of its target registers and counts
//! `Z(I) = #{t : b_t(I) ^ s = c_t}`, where `b_t(I)` is the XOR of the outputs
//! of the registers selected by the stage mask (targets from `I`, the others
//! from fills recovered earlier) and `s` complements the prediction when the
//! correlation at the mask is negative.
//!
//! Register output is linear in the fill, so the predicted sequence of `I`
//! is the XOR of one basis row per set bit of `I`. The kernel walks the fills
//! of a chunk in Gray-code order: consecutive fills differ in one bit, so each
//! candidate costs one row XOR plus a popcount over `N / 64` words.

use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use bitvec::prelude::*;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::Bits;
use crate::boolfn::effective_spectrum;
use crate::cipher::{combine_words, key_setup, InstanceSpec, SecretKey, REGISTERS};
use crate::classifier::{format_kprime, masked_table, plan_attack, AttackPlan, AttackStage};
use crate::error::{Error, Result};
use crate::lfsr::{basis_sequences, LfsrState};
use crate::plaintext::PlaintextModel;

pub const DEFAULT_RETAIN: usize = 10;
pub const DEFAULT_BUDGET_EXPONENT: u32 = 32;
/// Validation threshold in standard deviations.
pub const VALIDATION_SIGMAS: f64 = 3.0;

const CHUNK_BITS: u32 = 14;

pub type KnownFills = [Option<u64>; REGISTERS];

#[derive(Clone, Debug)]
pub struct CiphertextSample {
    pub bits: Bits,
    pub model: PlaintextModel,
    pub spec: InstanceSpec,
}

impl CiphertextSample {
    pub fn new(bits: Bits, model: PlaintextModel, spec: InstanceSpec) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::Config("ciphertext sample is empty".into()));
        }
        Ok(Self { bits, model, spec })
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AttackOptions {
    /// Candidates kept per stage (and per distinct set of known fills).
    pub retain: usize,
    /// Largest stage exponent the engine will enumerate.
    pub budget_exponent: u32,
    /// Keep every score on the board (tests and small stages only).
    pub keep_all_scores: bool,
    pub progress: bool,
}

impl Default for AttackOptions {
    fn default() -> Self {
        Self {
            retain: DEFAULT_RETAIN,
            budget_exponent: DEFAULT_BUDGET_EXPONENT,
            keep_all_scores: false,
            progress: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    /// Joint fill: the first target register in the low bits.
    pub joint: u64,
    /// Per-target fills as `(register, fill)`.
    pub fills: Vec<(usize, u64)>,
    pub score: u32,
}

#[derive(Clone, Debug)]
pub struct ScoreBoard {
    pub stage: AttackStage,
    pub n: usize,
    pub complement: bool,
    /// Best candidates by score, ties to the smaller joint fill.
    pub retained: Vec<Candidate>,
    pub candidates: u64,
    /// Sum of `Z` over every joint fill; always `N 2^(exponent-1)`.
    pub score_sum: u64,
    /// `Z` indexed by joint fill when requested.
    pub all_scores: Option<Vec<u32>>,
    pub elapsed_secs: f64,
}

impl ScoreBoard {
    pub fn states_per_sec(&self) -> f64 {
        if self.elapsed_secs > 0.0 {
            self.candidates as f64 / self.elapsed_secs
        } else {
            f64::INFINITY
        }
    }
}

/// Splits a joint fill into per-register fills, targets in ascending order.
pub fn split_joint(spec: &InstanceSpec, targets: &[usize], joint: u64) -> Vec<(usize, u64)> {
    let degrees = spec.degrees();
    let mut shift = 0;
    targets
        .iter()
        .map(|&j| {
            let fill = (joint >> shift) & ((1u64 << degrees[j]) - 1);
            shift += degrees[j];
            (j, fill)
        })
        .collect()
}

/// Whether the prediction must be complemented for this mask and model.
pub fn stage_complement(spec: &InstanceSpec, kprime: u8, mask: u8, model: &PlaintextModel) -> bool {
    let w = effective_spectrum(&masked_table(spec, kprime)).get(mask as usize);
    (w < 0) ^ (model.p0 < 0.5)
}

fn words_of(bits: &BitSlice<u64, Lsb0>) -> Vec<u64> {
    let n = bits.len();
    let mut words: Vec<u64> = bits.to_bitvec().into_vec();
    words.truncate(n.div_ceil(64));
    if !n.is_multiple_of(64) {
        if let Some(last) = words.last_mut() {
            *last &= (1u64 << (n % 64)) - 1;
        }
    }
    words
}

fn register_words(spec: &InstanceSpec, j: usize, fill: u64, n: usize) -> Vec<u64> {
    let state = LfsrState::new(spec.polynomials[j], fill).expect("fill width checked");
    words_of(&state.generate_sequence(n))
}

struct Top {
    k: usize,
    items: Vec<Candidate>,
}

impl Top {
    fn new(k: usize) -> Self {
        Self {
            k,
            items: Vec::with_capacity(k + 1),
        }
    }

    #[inline]
    fn admits(&self, score: u32, joint: u64) -> bool {
        if self.k == 0 {
            return false;
        }
        match self.items.last() {
            Some(w) if self.items.len() == self.k => {
                score > w.score || (score == w.score && joint < w.joint)
            }
            _ => true,
        }
    }

    fn insert(&mut self, c: Candidate) {
        let pos = self
            .items
            .partition_point(|x| x.score > c.score || (x.score == c.score && x.joint < c.joint));
        self.items.insert(pos, c);
        self.items.truncate(self.k);
    }

    fn merge(mut self, other: Top) -> Top {
        for c in other.items {
            if self.admits(c.score, c.joint) {
                self.insert(c);
            }
        }
        self
    }
}

/// Scores every joint fill of `stage` against the sample.
pub fn score_stage(
    sample: &CiphertextSample,
    stage: &AttackStage,
    known: &KnownFills,
    kprime: u8,
    opts: &AttackOptions,
) -> Result<ScoreBoard> {
    let kernel = StageKernel::new(sample, stage, kprime, opts)?;
    let mut cache = SequenceCache::new(&sample.spec, sample.len());
    kernel.score(known, &mut cache, opts)
}

/// Register output sequences as masked words, keyed by `(register, fill)`.
struct SequenceCache<'a> {
    spec: &'a InstanceSpec,
    n: usize,
    map: HashMap<(usize, u64), Vec<u64>>,
}

impl<'a> SequenceCache<'a> {
    fn new(spec: &'a InstanceSpec, n: usize) -> Self {
        Self {
            spec,
            n,
            map: HashMap::new(),
        }
    }

    fn get(&mut self, j: usize, fill: u64) -> &[u64] {
        let (spec, n) = (self.spec, self.n);
        self.map
            .entry((j, fill))
            .or_insert_with(|| register_words(spec, j, fill, n))
    }
}

/// Per-stage precomputation shared by every board of the stage.
struct StageKernel<'a> {
    sample: &'a CiphertextSample,
    stage: &'a AttackStage,
    cipher: Vec<u64>,
    rows: Vec<Vec<u64>>,
    register_masks: Vec<u64>,
    complement: bool,
}

struct Scan<'a> {
    rows: &'a [Vec<u64>],
    target: &'a [u64],
    register_masks: &'a [u64],
    targets: &'a [usize],
    spec: &'a InstanceSpec,
    n: u32,
    chunk_bits: u32,
    retain: usize,
}

#[inline(always)]
fn popcount(d: &[u64]) -> u32 {
    d.iter().map(|x| x.count_ones()).sum()
}

#[inline(always)]
fn xor_popcount(d: &mut [u64], r: &[u64]) -> u32 {
    let mut c = 0u32;
    for (x, r) in d.iter_mut().zip(r) {
        *x ^= r;
        c += x.count_ones();
    }
    c
}

#[inline(always)]
fn scan_chunk(s: &Scan, h: u64, mut out: Option<&mut [u32]>) -> (Top, u64) {
    let base = h << s.chunk_bits;
    let mut d = s.target.to_vec();
    for (b, row) in s.rows.iter().enumerate() {
        if base >> b & 1 == 1 {
            for (x, r) in d.iter_mut().zip(row) {
                *x ^= r;
            }
        }
    }
    let mut top = Top::new(s.retain);
    let mut sum = 0u64;
    for i in 0..1u64 << s.chunk_bits {
        let mismatches = if i == 0 {
            popcount(&d)
        } else {
            xor_popcount(&mut d, &s.rows[i.trailing_zeros() as usize])
        };
        let score = s.n - mismatches;
        let low = i ^ (i >> 1);
        let joint = base | low;
        sum += score as u64;
        if let Some(out) = out.as_deref_mut() {
            out[low as usize] = score;
        }
        if top.admits(score, joint) && !s.register_masks.iter().any(|&m| joint & m == 0) {
            top.insert(Candidate {
                joint,
                fills: split_joint(s.spec, s.targets, joint),
                score,
            });
        }
    }
    (top, sum)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "popcnt")]
fn scan_chunk_popcnt(s: &Scan, h: u64, out: Option<&mut [u32]>) -> (Top, u64) {
    scan_chunk(s, h, out)
}

fn scan_dispatch(s: &Scan, h: u64, out: Option<&mut [u32]>) -> (Top, u64) {
    #[cfg(target_arch = "x86_64")]
    if std::arch::is_x86_feature_detected!("popcnt") {
        // SAFETY: the feature was detected at runtime.
        return unsafe { scan_chunk_popcnt(s, h, out) };
    }
    scan_chunk(s, h, out)
}

impl<'a> StageKernel<'a> {
    fn new(sample: &'a CiphertextSample, stage: &'a AttackStage, kprime: u8, opts: &AttackOptions) -> Result<Self> {
        if stage.exponent > opts.budget_exponent || stage.exponent > 63 {
            return Err(Error::StageTooLarge {
                exponent: stage.exponent,
                budget: opts.budget_exponent,
            });
        }
        let spec = &sample.spec;
        let n = sample.len();
        let degrees = spec.degrees();
        let rows: Vec<Vec<u64>> = stage
            .targets
            .iter()
            .flat_map(|&j| basis_sequences(spec.polynomials[j], n))
            .map(|b| words_of(&b))
            .collect();
        if rows.len() as u32 != stage.exponent {
            return Err(Error::Config(format!(
                "stage exponent {} does not match its targets {:?}",
                stage.exponent, stage.targets
            )));
        }
        let mut shift = 0;
        let register_masks = stage
            .targets
            .iter()
            .map(|&j| {
                let m = ((1u64 << degrees[j]) - 1) << shift;
                shift += degrees[j];
                m
            })
            .collect();
        Ok(Self {
            sample,
            stage,
            cipher: words_of(&sample.bits),
            rows,
            register_masks,
            complement: stage_complement(spec, kprime, stage.mask, &sample.model),
        })
    }

    fn score(&self, known: &KnownFills, cache: &mut SequenceCache, opts: &AttackOptions) -> Result<ScoreBoard> {
        let start = Instant::now();
        let n = self.sample.len();
        let stage = self.stage;

        // Target vector y = c ^ s ^ (known registers of the mask).
        let mut target = self.cipher.clone();
        for &j in &stage.known {
            let fill = known[j].ok_or(Error::MissingKnownRegister { register: j })?;
            for (t, w) in target.iter_mut().zip(cache.get(j, fill)) {
                *t ^= w;
            }
        }
        if self.complement {
            let len = target.len();
            for (i, t) in target.iter_mut().enumerate() {
                *t = !*t;
                if i + 1 == len && !n.is_multiple_of(64) {
                    *t &= (1u64 << (n % 64)) - 1;
                }
            }
        }

        let e = stage.exponent;
        let chunk_bits = e.min(CHUNK_BITS);
        let chunks = 1u64 << (e - chunk_bits);
        let scan = Scan {
            rows: &self.rows,
            target: &target,
            register_masks: &self.register_masks,
            targets: &stage.targets,
            spec: &self.sample.spec,
            n: n as u32,
            chunk_bits,
            retain: opts.retain,
        };

        let (locals, all_scores): (Vec<(Top, u64)>, Option<Vec<u32>>) = if opts.keep_all_scores {
            let mut all = vec![0u32; 1usize << e];
            let locals = all
                .par_chunks_mut(1 << chunk_bits)
                .enumerate()
                .map(|(h, out)| scan_dispatch(&scan, h as u64, Some(out)))
                .collect();
            (locals, Some(all))
        } else if chunks == 1 {
            (vec![scan_dispatch(&scan, 0, None)], None)
        } else {
            let locals = (0..chunks).into_par_iter().map(|h| scan_dispatch(&scan, h, None)).collect();
            (locals, None)
        };

        let mut top = Top::new(opts.retain);
        let mut score_sum = 0u64;
        for (t, s) in locals {
            top = top.merge(t);
            score_sum += s;
        }
        Ok(ScoreBoard {
            stage: stage.clone(),
            n,
            complement: self.complement,
            retained: top.items,
            candidates: 1u64 << e,
            score_sum,
            all_scores,
            elapsed_secs: start.elapsed().as_secs_f64(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Pass,
    Fail,
    /// The plaintext model is too close to unbiased to tell keys apart.
    Indeterminate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Validation {
    /// `|zero fraction - p0|` in standard deviations; lower is better.
    pub score: f64,
    pub zero_fraction: f64,
    pub verdict: Verdict,
}

/// Plaintext-plausibility test on `zeros` zero bits out of `n` decrypted bits.
pub fn validation_from_zeros(zeros: usize, n: usize, p0: f64) -> Validation {
    let nf = n as f64;
    let frac = zeros as f64 / nf;
    let sigma = ((p0 * (1.0 - p0)).max(1.0 / nf) / nf).sqrt();
    let score = (frac - p0).abs() / sigma;
    // A wrong key decrypts to roughly balanced bits; if p0 sits within
    // 2 * 3 sigma of 1/2 the test cannot separate it from the true key.
    let separation = (p0 - 0.5).abs() * 2.0 * nf.sqrt();
    let verdict = if separation < 2.0 * VALIDATION_SIGMAS {
        Verdict::Indeterminate
    } else if score <= VALIDATION_SIGMAS {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Validation {
        score,
        zero_fraction: frac,
        verdict,
    }
}

/// Decrypts the sample under `candidate` and checks the bit bias.
pub fn validate_key(sample: &CiphertextSample, candidate: &SecretKey) -> Result<Validation> {
    let mut inst = key_setup(&sample.spec, candidate)?;
    let plain = inst.decrypt(&sample.bits);
    let zeros = plain.len() - plain.count_ones();
    Ok(validation_from_zeros(zeros, plain.len(), sample.model.p0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveredKey {
    pub key: String,
    pub fills: [u64; REGISTERS],
    pub kprime: String,
    pub validation_score: f64,
    pub zero_fraction: f64,
    pub verdict: Verdict,
    /// Sum of stage scores along this candidate's path.
    pub stage_score: u64,
    pub rank: usize,
}

impl RecoveredKey {
    pub fn secret_key(&self, spec: &InstanceSpec) -> Result<SecretKey> {
        SecretKey::parse_hex(spec, &self.key)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoardRecord {
    pub known_fills: Vec<(usize, u64)>,
    pub complement: bool,
    pub candidates: u64,
    pub score_sum: u64,
    pub retained: Vec<Candidate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub mask: String,
    pub targets: Vec<usize>,
    pub known: Vec<usize>,
    pub exponent: u32,
    pub walsh: i32,
    pub boards: Vec<BoardRecord>,
    pub beam_after: usize,
}

/// Wall-clock figures, kept apart so transcripts stay byte-stable.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub stage_secs: Vec<f64>,
    pub states_per_sec: Vec<f64>,
    pub validation_secs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackTranscript {
    pub spec_fingerprint: String,
    pub kprime: String,
    pub n: usize,
    pub p0: f64,
    pub retain: usize,
    pub budget_exponent: u32,
    pub plan: AttackPlan,
    pub stages: Vec<StageRecord>,
    pub final_candidates: usize,
    pub validated: Vec<RecoveredKey>,
    pub outcome: String,
    pub metadata: RunMetadata,
}

#[derive(Clone, Debug)]
struct Partial {
    fills: KnownFills,
    score: u64,
}

/// Runs every stage of `plan`, then validates the surviving keys.
pub fn run_plan(
    sample: &CiphertextSample,
    plan: &AttackPlan,
    kprime: u8,
    opts: &AttackOptions,
) -> Result<Vec<RecoveredKey>> {
    let (transcript, result) = run_plan_with_transcript(sample, plan, kprime, opts);
    let _ = transcript;
    result
}

pub fn run_plan_with_transcript(
    sample: &CiphertextSample,
    plan: &AttackPlan,
    kprime: u8,
    opts: &AttackOptions,
) -> (AttackTranscript, Result<Vec<RecoveredKey>>) {
    let mut transcript = AttackTranscript {
        spec_fingerprint: sample.spec.fingerprint(),
        kprime: format_kprime(kprime),
        n: sample.len(),
        p0: sample.model.p0,
        retain: opts.retain,
        budget_exponent: opts.budget_exponent,
        plan: plan.clone(),
        stages: vec![],
        final_candidates: 0,
        validated: vec![],
        outcome: String::new(),
        metadata: RunMetadata::default(),
    };
    let result = execute(sample, plan, kprime, opts, &mut transcript);
    transcript.outcome = match &result {
        Ok(keys) => match keys.first() {
            Some(k) if k.verdict == Verdict::Indeterminate => "Indeterminate".into(),
            _ => "Recovered".into(),
        },
        Err(e) => e.name().into(),
    };
    if let Ok(keys) = &result {
        transcript.validated = keys.clone();
    }
    (transcript, result)
}

fn execute(
    sample: &CiphertextSample,
    plan: &AttackPlan,
    kprime: u8,
    opts: &AttackOptions,
    transcript: &mut AttackTranscript,
) -> Result<Vec<RecoveredKey>> {
    if let Some(s) = plan.stages.iter().find(|s| s.exponent > opts.budget_exponent) {
        return Err(Error::StageTooLarge {
            exponent: s.exponent,
            budget: opts.budget_exponent,
        });
    }
    let mut beam = vec![Partial {
        fills: [None; REGISTERS],
        score: 0,
    }];
    let mut throughput: Option<f64> = None;
    let mut cache = SequenceCache::new(&sample.spec, sample.len());
    for (si, stage) in plan.stages.iter().enumerate() {
        let mut groups: BTreeMap<Vec<u64>, Vec<usize>> = BTreeMap::new();
        for (i, p) in beam.iter().enumerate() {
            let key: Vec<u64> = stage.known.iter().map(|&j| p.fills[j].unwrap_or(0)).collect();
            groups.entry(key).or_default().push(i);
        }
        if opts.progress {
            let states = (groups.len() as f64) * (1u64 << stage.exponent) as f64;
            let eta = throughput.map_or("unknown".to_string(), |t| format!("{:.1}s", states / t));
            eprintln!(
                "stage {}/{} mask {:04b}: {} board(s) of 2^{} states, eta {eta}",
                si + 1,
                plan.stages.len(),
                stage.mask,
                groups.len(),
                stage.exponent
            );
        }
        let stage_start = Instant::now();
        let kernel = StageKernel::new(sample, stage, kprime, opts)?;
        let mut next = Vec::new();
        let mut boards = Vec::new();
        let mut states = 0u64;
        for (_, members) in groups {
            let known = beam[members[0]].fills;
            let board = kernel.score(&known, &mut cache, opts)?;
            states += board.candidates;
            for &m in &members {
                for c in &board.retained {
                    let mut fills = beam[m].fills;
                    for &(j, f) in &c.fills {
                        fills[j] = Some(f);
                    }
                    next.push(Partial {
                        fills,
                        score: beam[m].score + c.score as u64,
                    });
                }
            }
            boards.push(BoardRecord {
                known_fills: stage.known.iter().map(|&j| (j, known[j].unwrap_or(0))).collect(),
                complement: board.complement,
                candidates: board.candidates,
                score_sum: board.score_sum,
                retained: board.retained,
            });
        }
        let secs = stage_start.elapsed().as_secs_f64();
        let rate = if secs > 0.0 { states as f64 / secs } else { f64::INFINITY };
        throughput = Some(rate);
        if opts.progress {
            eprintln!("  {states} states in {secs:.2}s ({rate:.3e} states/s)");
        }
        transcript.metadata.stage_secs.push(secs);
        transcript.metadata.states_per_sec.push(rate);
        beam = next;
        transcript.stages.push(StageRecord {
            mask: format!("{:04b}", stage.mask),
            targets: stage.targets.clone(),
            known: stage.known.clone(),
            exponent: stage.exponent,
            walsh: stage.walsh,
            boards,
            beam_after: beam.len(),
        });
    }
    transcript.final_candidates = beam.len();

    let start = Instant::now();
    let keys = validate_beam(sample, kprime, &beam, &mut cache);
    transcript.metadata.validation_secs = start.elapsed().as_secs_f64();
    keys
}

fn validate_beam(
    sample: &CiphertextSample,
    kprime: u8,
    beam: &[Partial],
    cache: &mut SequenceCache,
) -> Result<Vec<RecoveredKey>> {
    let spec = &sample.spec;
    let n = sample.len();
    let p0 = sample.model.p0;
    let f = masked_table(spec, kprime);
    let cipher = words_of(&sample.bits);
    let tail_mask = if n.is_multiple_of(64) { u64::MAX } else { (1u64 << (n % 64)) - 1 };

    for p in beam {
        for (j, fill) in p.fills.iter().enumerate() {
            cache.get(j, fill.expect("plan covers every register"));
        }
    }
    let cache = &cache.map;

    // Zero counts outside [lo, hi] fail for certain; a candidate is dropped as
    // soon as its partial count leaves that window.
    let decided = validation_from_zeros(0, n, p0).verdict != Verdict::Indeterminate;
    let sigma = ((p0 * (1.0 - p0)).max(1.0 / n as f64) / n as f64).sqrt();
    let lo = ((p0 - VALIDATION_SIGMAS * sigma) * n as f64).floor() - 1.0;
    let hi = ((p0 + VALIDATION_SIGMAS * sigma) * n as f64).ceil() + 1.0;

    let mut keys: Vec<RecoveredKey> = beam
        .par_iter()
        .filter_map(|p| {
            let fills = p.fills.map(|f| f.unwrap());
            let seqs: [&Vec<u64>; REGISTERS] = std::array::from_fn(|j| &cache[&(j, fills[j])]);
            let mut ones = 0usize;
            for (w, c) in cipher.iter().enumerate() {
                let mut ks = combine_words(&f, std::array::from_fn(|j| seqs[j][w]));
                if w + 1 == cipher.len() {
                    ks &= tail_mask;
                }
                ones += (c ^ ks).count_ones() as usize;
                if decided && w % 8 == 7 {
                    let seen = (w + 1) * 64;
                    let zeros = seen - ones;
                    if (zeros as f64) > hi || ((zeros + n - seen) as f64) < lo {
                        return None;
                    }
                }
            }
            let v = validation_from_zeros(n - ones, n, p0);
            if v.verdict == Verdict::Fail {
                return None;
            }
            let key = SecretKey::from_parts(spec, fills, kprime).expect("retained candidates have nonzero fills");
            Some(RecoveredKey {
                key: key.to_hex(),
                fills,
                kprime: format_kprime(kprime),
                validation_score: v.score,
                zero_fraction: v.zero_fraction,
                verdict: v.verdict,
                stage_score: p.score,
                rank: 0,
            })
        })
        .collect();

    let indeterminate = keys.first().is_some_and(|k| k.verdict == Verdict::Indeterminate);
    if indeterminate {
        keys.sort_by(|a, b| b.stage_score.cmp(&a.stage_score).then(a.fills.cmp(&b.fills)));
    } else {
        keys.sort_by(|a, b| {
            a.validation_score
                .total_cmp(&b.validation_score)
                .then(b.stage_score.cmp(&a.stage_score))
                .then(a.fills.cmp(&b.fills))
        });
    }
    keys.dedup_by(|a, b| a.fills == b.fills);
    if keys.is_empty() {
        return Err(Error::EmptyBeam);
    }
    for (i, k) in keys.iter_mut().enumerate() {
        k.rank = i + 1;
    }
    Ok(keys)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status")]
pub enum InstanceStatus {
    Recovered { key: String, validation_score: f64 },
    EmptyBeam,
    /// Plaintext model too weak for validation to decide.
    NoSignal,
    Unattackable { uncovered: Vec<usize> },
    Skipped { exponent: u32 },
    NotAttempted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub kprime: String,
    pub max_exponent: Option<u32>,
    /// Position in the cheapest-first schedule, if attempted.
    pub order: Option<usize>,
    #[serde(flatten)]
    pub status: InstanceStatus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParallelReport {
    pub spec_fingerprint: String,
    pub best: Option<RecoveredKey>,
    pub instances: Vec<InstanceRecord>,
}

impl ParallelReport {
    pub fn record(&self, kprime: u8) -> &InstanceRecord {
        let hex = format_kprime(kprime);
        self.instances.iter().find(|r| r.kprime == hex).expect("one record per K'")
    }
}

/// One attack program per `K'`, cheapest classes first.
///
/// With `stop_at_first` the schedule ends at the first validated key and the
/// remaining instances are reported as not attempted.
pub fn run_parallel_instances(
    sample: &CiphertextSample,
    opts: &AttackOptions,
    stop_at_first: bool,
) -> ParallelReport {
    let spec = &sample.spec;
    let plans: Vec<(u8, Result<AttackPlan>)> = (0..=255u8).map(|k| (k, plan_attack(spec, k))).collect();
    let mut records: Vec<InstanceRecord> = plans
        .iter()
        .map(|(k, p)| InstanceRecord {
            kprime: format_kprime(*k),
            max_exponent: p.as_ref().ok().map(|p| p.max_exponent),
            order: None,
            status: match p {
                Err(Error::Unattackable { uncovered }) => InstanceStatus::Unattackable {
                    uncovered: uncovered.clone(),
                },
                Err(_) => InstanceStatus::EmptyBeam,
                Ok(p) if p.max_exponent > opts.budget_exponent => InstanceStatus::Skipped {
                    exponent: p.max_exponent,
                },
                Ok(_) => InstanceStatus::NotAttempted,
            },
        })
        .collect();

    let mut schedule: Vec<(u32, u8)> = plans
        .iter()
        .filter_map(|(k, p)| match p {
            Ok(p) if p.max_exponent <= opts.budget_exponent => Some((p.max_exponent, *k)),
            _ => None,
        })
        .collect();
    schedule.sort_unstable();

    let mut best: Option<RecoveredKey> = None;
    for (order, &(_, k)) in schedule.iter().enumerate() {
        let plan = plans[k as usize].1.as_ref().expect("scheduled plans exist");
        let rec = &mut records[k as usize];
        rec.order = Some(order);
        rec.status = match run_plan(sample, plan, k, opts) {
            Ok(keys) if keys[0].verdict == Verdict::Indeterminate => InstanceStatus::NoSignal,
            Ok(keys) => {
                let top = keys[0].clone();
                let status = InstanceStatus::Recovered {
                    key: top.key.clone(),
                    validation_score: top.validation_score,
                };
                if best
                    .as_ref()
                    .is_none_or(|b| top.validation_score < b.validation_score)
                {
                    best = Some(top);
                }
                status
            }
            Err(Error::StageTooLarge { exponent, .. }) => InstanceStatus::Skipped { exponent },
            Err(_) => InstanceStatus::EmptyBeam,
        };
        if stop_at_first && best.is_some() {
            break;
        }
    }
    ParallelReport {
        spec_fingerprint: spec.fingerprint(),
        best,
        instances: records,
    }
}
