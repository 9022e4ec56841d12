//! BPSK over AWGN, Monte-Carlo error-rate estimation and exact oracles.
//!
//! Bit `b` maps to the symbol `1 - 2b`, the channel adds Gaussian noise of
//! variance `sigma^2 = 1 / (2 R 10^(EbN0/10))`, and the receiver forms
//! `llr = 2 y / sigma^2`.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::codes::ENUMERATION_MAX_K;
use crate::decoder::{DecoderModel, LlrFrame, Tape};
use crate::error::invalid;
use crate::gf2::BinaryMatrix;
use crate::rng::{self, StreamRng};
use crate::{math, par, Error, Result};

/// Largest dimension accepted by [`map_bit_llrs`].
pub const MAP_MAX_K: usize = 20;

/// Operating point of the channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelPoint {
    ebn0_db: f64,
    rate: f64,
    sigma2: f64,
}

impl ChannelPoint {
    pub fn new(ebn0_db: f64, rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate <= 1.0) {
            return Err(invalid!("code rate must lie in (0, 1], got {rate}"));
        }
        if !ebn0_db.is_finite() {
            return Err(invalid!("Eb/N0 must be finite"));
        }
        let sigma2 = 1.0 / (2.0 * rate * math::powf(10.0, ebn0_db / 10.0));
        Ok(ChannelPoint { ebn0_db, rate, sigma2 })
    }

    pub fn ebn0_db(&self) -> f64 {
        self.ebn0_db
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Noise variance per real dimension.
    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// Uncoded bit error probability of a hard decision on one symbol.
    pub fn raw_bit_error_probability(&self) -> f64 {
        math::q_function(1.0 / math::sqrt(self.sigma2))
    }
}

/// Transmits `bits` and returns the channel LLRs. Draws exactly one standard
/// normal per bit from `rng`.
pub fn awgn_llr(bits: &[u8], point: &ChannelPoint, rng: &mut StreamRng) -> LlrFrame {
    let sigma = math::sqrt(point.sigma2);
    let scale = 2.0 / point.sigma2;
    let llrs = bits
        .iter()
        .map(|&b| {
            let z: f64 = rng.sample(StandardNormal);
            let y = (1.0 - 2.0 * (b & 1) as f64) + sigma * z;
            scale * y
        })
        .collect();
    LlrFrame::new(llrs).expect("noise is finite")
}

/// Anything that turns channel LLRs into a hard decision.
pub trait HardDecoder: Sync {
    /// Per-worker scratch space.
    type Workspace: Default + Send;

    fn decode_hard(&self, llrs: &[f64], ws: &mut Self::Workspace) -> Vec<u8>;
}

impl HardDecoder for DecoderModel {
    type Workspace = Tape;

    fn decode_hard(&self, llrs: &[f64], ws: &mut Tape) -> Vec<u8> {
        DecoderModel::decode_hard(self, llrs, ws).expect("frame length matches the model")
    }
}

/// Adapter for closures.
pub struct FnDecoder<F>(pub F);

impl<F> HardDecoder for FnDecoder<F>
where
    F: Fn(&[f64]) -> Vec<u8> + Sync,
{
    type Workspace = ();

    fn decode_hard(&self, llrs: &[f64], _: &mut ()) -> Vec<u8> {
        (self.0)(llrs)
    }
}

/// Brute-force maximum-likelihood decoder.
///
/// Selects the codeword maximizing `sum_v (1 - 2 x_v) llr_v`; exact ties go
/// to the lexicographically smallest codeword (position 0 most significant).
#[derive(Debug, Clone)]
pub struct MlDecoder {
    n: usize,
    bytes: usize,
    k: usize,
    // codeword bytes, little-endian bit order inside each byte
    words: Vec<u8>,
}

impl MlDecoder {
    pub fn new(g: &BinaryMatrix) -> Result<Self> {
        Self::with_limit(g, ENUMERATION_MAX_K)
    }

    fn with_limit(g: &BinaryMatrix, max_k: usize) -> Result<Self> {
        let basis = g.row_space_basis();
        let k = basis.rows();
        if k > max_k {
            return Err(Error::ResourceGuard(alloc::format!("code dimension {k} exceeds the exhaustive limit {max_k}")));
        }
        let n = g.cols();
        let bytes = n.div_ceil(8);
        let rows: Vec<Vec<u8>> = (0..k).map(|r| pack_bytes(&basis.row(r).to_bits())).collect();
        let mut words = vec![0u8; bytes << k];
        // Gray-code walk fills codeword i from codeword i with its lowest set bit cleared
        for i in 1usize..1 << k {
            let low = i.trailing_zeros() as usize;
            let prev = i & (i - 1);
            for b in 0..bytes {
                words[i * bytes + b] = words[prev * bytes + b] ^ rows[low][b];
            }
        }
        Ok(MlDecoder { n, bytes, k, words })
    }

    pub fn dimension(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn tables(&self, llrs: &[f64], tables: &mut Vec<f64>) {
        tables.clear();
        tables.resize(self.bytes * 256, 0.0);
        for b in 0..self.bytes {
            let t = &mut tables[b * 256..(b + 1) * 256];
            for x in 1usize..256 {
                let low = x.trailing_zeros() as usize;
                let pos = b * 8 + low;
                let add = if pos < self.n { llrs[pos] } else { 0.0 };
                t[x] = t[x & (x - 1)] + add;
            }
        }
    }

    /// Index (message order of the reduced basis) of the ML codeword.
    fn best_index(&self, llrs: &[f64], tables: &mut Vec<f64>) -> usize {
        assert_eq!(llrs.len(), self.n, "frame length must equal code length");
        self.tables(llrs, tables);
        let mut best = 0usize;
        let mut best_cost = f64::INFINITY;
        for i in 0..1usize << self.k {
            let w = &self.words[i * self.bytes..(i + 1) * self.bytes];
            let mut cost = 0.0;
            for (b, &byte) in w.iter().enumerate() {
                cost += tables[b * 256 + byte as usize];
            }
            if cost < best_cost || (cost == best_cost && self.lex_less(i, best)) {
                best = i;
                best_cost = cost;
            }
        }
        best
    }

    fn lex_less(&self, a: usize, b: usize) -> bool {
        let wa = &self.words[a * self.bytes..(a + 1) * self.bytes];
        let wb = &self.words[b * self.bytes..(b + 1) * self.bytes];
        for (x, y) in wa.iter().zip(wb) {
            let d = x ^ y;
            if d != 0 {
                return x >> d.trailing_zeros() & 1 == 0;
            }
        }
        false
    }

    fn unpack(&self, i: usize) -> Vec<u8> {
        let w = &self.words[i * self.bytes..(i + 1) * self.bytes];
        (0..self.n).map(|p| w[p / 8] >> (p % 8) & 1).collect()
    }

    /// ML codeword for `frame`.
    pub fn decode(&self, frame: &[f64]) -> Vec<u8> {
        let mut t = Vec::new();
        let i = self.best_index(frame, &mut t);
        self.unpack(i)
    }
}

impl HardDecoder for MlDecoder {
    type Workspace = Vec<f64>;

    fn decode_hard(&self, llrs: &[f64], ws: &mut Vec<f64>) -> Vec<u8> {
        let i = self.best_index(llrs, ws);
        self.unpack(i)
    }
}

fn pack_bytes(bits: &[u8]) -> Vec<u8> {
    let mut out = vec![0u8; bits.len().div_ceil(8)];
    for (i, &b) in bits.iter().enumerate() {
        out[i / 8] |= (b & 1) << (i % 8);
    }
    out
}

/// Brute-force ML decoding of a single frame.
pub fn ml_decode(g: &BinaryMatrix, frame: &LlrFrame) -> Result<Vec<u8>> {
    if frame.len() != g.cols() {
        return Err(Error::ShapeMismatch(alloc::format!("frame length {} != code length {}", frame.len(), g.cols())));
    }
    Ok(MlDecoder::new(g)?.decode(frame.values()))
}

/// Exact bitwise MAP LLRs of the code spanned by `g`:
/// `ln(sum over x with x_v = 0 of e^{m(x)} / sum over x with x_v = 1 of e^{m(x)})`
/// with `m(x) = sum_u (1 - 2 x_u) llr_u / 2`.
pub fn map_bit_llrs(g: &BinaryMatrix, frame: &LlrFrame) -> Result<Vec<f64>> {
    let n = g.cols();
    if frame.len() != n {
        return Err(Error::ShapeMismatch(alloc::format!("frame length {} != code length {n}", frame.len())));
    }
    let ml = MlDecoder::with_limit(g, MAP_MAX_K)?;
    let llr = frame.values();
    let total: f64 = llr.iter().sum();
    let mut zero = vec![f64::NEG_INFINITY; n];
    let mut one = vec![f64::NEG_INFINITY; n];
    let mut tables = Vec::new();
    ml.tables(llr, &mut tables);
    for i in 0..1usize << ml.k {
        let w = &ml.words[i * ml.bytes..(i + 1) * ml.bytes];
        let cost: f64 = w.iter().enumerate().map(|(b, &byte)| tables[b * 256 + byte as usize]).sum();
        let metric = 0.5 * (total - 2.0 * cost);
        for v in 0..n {
            let slot = if w[v / 8] >> (v % 8) & 1 == 1 { &mut one[v] } else { &mut zero[v] };
            *slot = math::log_add_exp(*slot, metric);
        }
    }
    Ok(zero.iter().zip(&one).map(|(a, b)| a - b).collect())
}

/// Monte-Carlo stop rule for one SNR point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StopRule {
    pub min_block_errors: u64,
    pub max_frames: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule { min_block_errors: 200, max_frames: 10_000_000 }
    }
}

/// Error counts at one SNR point.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub ebn0_db: f64,
    pub frames: u64,
    pub block_errors: u64,
    pub bit_errors: u64,
    pub bler: f64,
    pub ber: f64,
    /// Half-width of the 95% Wilson interval of the BLER.
    pub ci_halfwidth: f64,
    /// Fewer than the requested block errors at the frame limit.
    pub under_resolved: bool,
    /// Wall time in seconds (`None` without a clock).
    pub wall_time_s: Option<f64>,
}

impl SimResult {
    /// Equality of everything except wall time.
    pub fn same_counts(&self, other: &SimResult) -> bool {
        SimResult { wall_time_s: None, ..self.clone() } == SimResult { wall_time_s: None, ..other.clone() }
    }

    /// 95% Wilson interval of the BLER.
    pub fn bler_interval(&self) -> (f64, f64) {
        wilson_interval(self.block_errors, self.frames)
    }
}

const Z95: f64 = 1.959_963_984_540_054;

/// 95% Wilson score interval `(low, high)` for `errors` out of `trials`.
pub fn wilson_interval(errors: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 / denom * math::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
    let lo = if errors == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if errors == trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// Half-width of the 95% Wilson interval.
pub fn wilson_halfwidth(errors: u64, trials: u64) -> f64 {
    let (lo, hi) = wilson_interval(errors, trials);
    0.5 * (hi - lo)
}

/// Monte-Carlo setup shared by all SNR points.
#[derive(Debug, Clone)]
pub struct MonteCarlo {
    generator: BinaryMatrix,
    rate: f64,
    pub stop: StopRule,
    pub seed: u64,
    /// Frames per scheduling block (affects speed only, not results).
    pub block: usize,
}

const CHUNK: usize = 32;

impl MonteCarlo {
    /// `generator` spans the code; random messages are encoded with a basis
    /// of its row space.
    pub fn new(generator: &BinaryMatrix, stop: StopRule, seed: u64) -> Result<Self> {
        let generator = generator.row_space_basis();
        if generator.rows() == 0 {
            return Err(invalid!("generator spans only the zero word"));
        }
        let rate = generator.rows() as f64 / generator.cols() as f64;
        Ok(MonteCarlo { generator, rate, stop, seed, block: 4096 })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn generator(&self) -> &BinaryMatrix {
        &self.generator
    }

    /// Transmitted codeword and channel LLRs of frame `index` at SNR slot
    /// `snr_index`. The same key always gives the same frame.
    pub fn frame(&self, point: &ChannelPoint, snr_index: usize, index: u64) -> (Vec<u8>, LlrFrame) {
        let mut rng = rng::stream(self.seed, &[rng::domain::MONTE_CARLO, snr_index as u64, index]);
        let k = self.generator.rows();
        let mut word = crate::gf2::BitVec::zeros(self.generator.cols());
        for i in 0..k {
            if rng.random::<bool>() {
                word.xor_assign(&self.generator.row(i));
            }
        }
        let bits = word.to_bits();
        let llr = awgn_llr(&bits, point, &mut rng);
        (bits, llr)
    }

    /// Runs one SNR point.
    pub fn run_point<D: HardDecoder>(&self, decoder: &D, ebn0_db: f64, snr_index: usize) -> Result<SimResult> {
        let point = ChannelPoint::new(ebn0_db, self.rate)?;
        #[cfg(feature = "std")]
        let started = std::time::Instant::now();
        let mut frames = 0u64;
        let mut block_errors = 0u64;
        let mut bit_errors = 0u64;
        let block = self.block.max(CHUNK) as u64;
        'outer: while frames < self.stop.max_frames && block_errors < self.stop.min_block_errors {
            let this_block = block.min(self.stop.max_frames - frames);
            let chunks = this_block.div_ceil(CHUNK as u64) as usize;
            let base = frames;
            let results: Vec<Vec<u32>> = par::map_indexed(chunks, |ci| {
                let mut ws = D::Workspace::default();
                let start = base + (ci * CHUNK) as u64;
                let end = (start + CHUNK as u64).min(base + this_block);
                (start..end)
                    .map(|f| {
                        let (bits, llr) = self.frame(&point, snr_index, f);
                        let hard = decoder.decode_hard(llr.values(), &mut ws);
                        bits.iter().zip(&hard).filter(|(a, b)| a != b).count() as u32
                    })
                    .collect()
            });
            for errs in results.into_iter().flatten() {
                frames += 1;
                if errs > 0 {
                    block_errors += 1;
                    bit_errors += errs as u64;
                }
                if block_errors >= self.stop.min_block_errors {
                    break 'outer;
                }
            }
        }
        let n = self.generator.cols() as f64;
        #[cfg(feature = "std")]
        let wall_time_s = Some(started.elapsed().as_secs_f64());
        #[cfg(not(feature = "std"))]
        let wall_time_s = None;
        Ok(SimResult {
            ebn0_db,
            frames,
            block_errors,
            bit_errors,
            bler: if frames == 0 { 0.0 } else { block_errors as f64 / frames as f64 },
            ber: if frames == 0 { 0.0 } else { bit_errors as f64 / (frames as f64 * n) },
            ci_halfwidth: wilson_halfwidth(block_errors, frames),
            under_resolved: block_errors < self.stop.min_block_errors,
            wall_time_s,
        })
    }

    /// Runs every SNR point in order; SNR slot `i` is `ebn0_db[i]`.
    pub fn run<D: HardDecoder>(&self, decoder: &D, ebn0_db: &[f64]) -> Result<Vec<SimResult>> {
        ebn0_db.iter().enumerate().map(|(i, &e)| self.run_point(decoder, e, i)).collect()
    }
}

/// Runs a Monte-Carlo simulation over `ebn0_db` (see [`MonteCarlo`]).
pub fn monte_carlo<D: HardDecoder>(
    decoder: &D,
    generator: &BinaryMatrix,
    ebn0_db: &[f64],
    stop: StopRule,
    seed: u64,
) -> Result<Vec<SimResult>> {
    MonteCarlo::new(generator, stop, seed)?.run(decoder, ebn0_db)
}

/// Block-error counts of two decoders on the same frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PairedCounts {
    pub frames: u64,
    pub errors_a: u64,
    pub errors_b: u64,
    /// Frames where only `a` failed.
    pub only_a: u64,
    /// Frames where only `b` failed.
    pub only_b: u64,
}

impl MonteCarlo {
    /// Decodes `frames` frames with both decoders on identical noise.
    pub fn compare<A: HardDecoder, B: HardDecoder>(&self, a: &A, b: &B, ebn0_db: f64, snr_index: usize, frames: u64) -> Result<PairedCounts> {
        let point = ChannelPoint::new(ebn0_db, self.rate)?;
        let chunks = frames.div_ceil(CHUNK as u64) as usize;
        let per_chunk: Vec<PairedCounts> = par::map_indexed(chunks, |ci| {
            let mut wa = A::Workspace::default();
            let mut wb = B::Workspace::default();
            let start = (ci * CHUNK) as u64;
            let end = (start + CHUNK as u64).min(frames);
            let mut c = PairedCounts::default();
            for f in start..end {
                let (bits, llr) = self.frame(&point, snr_index, f);
                let ea = a.decode_hard(llr.values(), &mut wa) != bits;
                let eb = b.decode_hard(llr.values(), &mut wb) != bits;
                c.frames += 1;
                c.errors_a += ea as u64;
                c.errors_b += eb as u64;
                c.only_a += (ea && !eb) as u64;
                c.only_b += (eb && !ea) as u64;
            }
            c
        });
        Ok(per_chunk.into_iter().fold(PairedCounts::default(), |acc, c| PairedCounts {
            frames: acc.frames + c.frames,
            errors_a: acc.errors_a + c.errors_a,
            errors_b: acc.errors_b + c.errors_b,
            only_a: acc.only_a + c.only_a,
            only_b: acc.only_b + c.only_b,
        }))
    }
}

/// One-sided z statistic for "decoder A has lower BLER than decoder B" from
/// two independent runs (two-proportion test with pooled variance).
pub fn two_proportion_z(errors_a: u64, frames_a: u64, errors_b: u64, frames_b: u64) -> f64 {
    let (na, nb) = (frames_a as f64, frames_b as f64);
    let (pa, pb) = (errors_a as f64 / na, errors_b as f64 / nb);
    let p = (errors_a + errors_b) as f64 / (na + nb);
    let se = math::sqrt(p * (1.0 - p) * (1.0 / na + 1.0 / nb));
    if se == 0.0 {
        return 0.0;
    }
    (pb - pa) / se
}

/// One-sided z statistic of the exact-pairing sign test: positive when `b`
/// fails on more frames than `a` among discordant frames.
pub fn mcnemar_z(only_a: u64, only_b: u64) -> f64 {
    let d = (only_a + only_b) as f64;
    if d == 0.0 {
        return 0.0;
    }
    (only_b as f64 - only_a as f64) / math::sqrt(d)
}

/// One-sided 95% critical value of the standard normal.
pub const Z_ONE_SIDED_95: f64 = 1.644_853_626_951_472_2;
