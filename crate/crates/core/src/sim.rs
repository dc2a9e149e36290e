//! Monte Carlo driver: frame generation, decoder dispatch, per-point
//! statistics, complexity tables and CSV output.
//!
//! Frames are decoded in parallel batches and reduced in frame order, so a
//! fixed seed gives identical statistics for any number of worker threads.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{add_noise, esn0_to_ebn0, frame_rng, llrs, modulate, noise_variance};
use crate::ep::{read_store, EpOrder, EpTable};
use crate::error::{invalid, Error, Result};
use crate::gf2::{ge_op_count, BitWord};
use crate::osd::{DecoderConfig, PepOsdDecoder};
use crate::polar::{CodeSpec, CrcPolarCode};
use crate::scl::{scl_op_count, SclDecoder};

pub const DEFAULT_MIN_ERRORS: u64 = 100;

/// Frames decoded per parallel batch. Only affects how much work past an
/// early stop is discarded, never the results.
const BATCH: u64 = 512;

/// Smallest noise variance used to form LLRs, so noiseless points stay finite.
const MIN_LLR_VARIANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub enum DecoderKind {
    /// `ep_store: None` generates the table in memory from the config budget.
    Peposd {
        cfg: DecoderConfig,
        ep_store: Option<PathBuf>,
    },
    CaScl {
        list_size: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub code: CodeSpec,
    pub ebn0_db: Vec<f64>,
    pub decoder: DecoderKind,
    /// Maximum frames per point.
    pub frames: u64,
    /// A point stops once this many block errors are counted.
    pub min_errors: u64,
    pub seed: u64,
    /// Write 0 to `wall_time_s` when false, making output byte-reproducible.
    pub record_wall_time: bool,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(code: CodeSpec, ebn0_db: Vec<f64>, decoder: DecoderKind, frames: u64, seed: u64) -> Self {
        ExperimentConfig {
            code,
            ebn0_db,
            decoder,
            frames,
            min_errors: DEFAULT_MIN_ERRORS,
            seed,
            record_wall_time: true,
            threads: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointStats {
    pub ebn0_db: f64,
    #[serde(rename = "frames")]
    pub frames_run: u64,
    #[serde(rename = "errors")]
    pub block_errors: u64,
    pub bler: f64,
    pub avg_queries: f64,
    pub avg_bit_flips: f64,
    pub avg_candidates: f64,
    pub avg_ge_ops: f64,
    pub wall_time_s: f64,
}

#[derive(Clone, Copy, Debug, Default)]
struct FrameResult {
    error: bool,
    queries: u64,
    bit_flips: u64,
    candidates: u64,
    ge_ops: u64,
}

enum Engine {
    Peposd(PepOsdDecoder),
    Scl(SclDecoder),
}

fn build_engine(cfg: &ExperimentConfig, code: &Arc<CrcPolarCode>) -> Result<Engine> {
    match &cfg.decoder {
        DecoderKind::Peposd { cfg: dcfg, ep_store } => {
            let table = match ep_store {
                Some(path) => read_store(path)?,
                None => EpTable::generate(dcfg.w_i_max, dcfg.w_h_max, dcfg.order),
            };
            Ok(Engine::Peposd(PepOsdDecoder::for_code(code.clone(), &table, *dcfg)?))
        }
        DecoderKind::CaScl { list_size } => Ok(Engine::Scl(SclDecoder::new(&code.spec, *list_size)?)),
    }
}

fn simulate_frame(
    code: &CrcPolarCode,
    engine: &Engine,
    scl: &mut Option<SclDecoder>,
    sigma2: f64,
    seed: u64,
    point: u64,
    frame: u64,
) -> FrameResult {
    let mut rng = frame_rng(seed, point, frame);
    let msg = BitWord::from_fn(code.spec.k, |_| rng.random());
    let (u_info, c) = code.encode_message(&msg).expect("message length matches the code");
    let mut y = modulate(&c);
    add_noise(&mut y, sigma2.sqrt(), &mut rng);
    match engine {
        Engine::Peposd(dec) => {
            let out = dec.decode(&y).expect("frame length matches the code");
            FrameResult {
                error: !out.valid || out.info.as_ref() != Some(&u_info),
                queries: out.queries,
                bit_flips: out.bit_flips,
                candidates: out.candidates_found as u64,
                ge_ops: out.ge_ops,
            }
        }
        Engine::Scl(proto) => {
            let dec = scl.get_or_insert_with(|| proto.clone());
            let out = dec
                .decode(&llrs(&y, sigma2.max(MIN_LLR_VARIANCE)))
                .expect("frame length matches the code");
            FrameResult {
                error: !out.crc_ok || out.info != u_info,
                ..FrameResult::default()
            }
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Limits {
    frames: u64,
    min_errors: u64,
    seed: u64,
    record_wall_time: bool,
}

impl From<&ExperimentConfig> for Limits {
    fn from(c: &ExperimentConfig) -> Self {
        Limits {
            frames: c.frames,
            min_errors: c.min_errors,
            seed: c.seed,
            record_wall_time: c.record_wall_time,
        }
    }
}

fn run_point(cfg: Limits, code: &CrcPolarCode, engine: &Engine, point: u64, ebn0_db: f64) -> PointStats {
    let start = Instant::now();
    let sigma2 = noise_variance(ebn0_db, code.spec.rate());
    let mut acc = FrameResult::default();
    let (mut frames_run, mut errors) = (0u64, 0u64);
    let mut next = 0u64;
    'outer: while next < cfg.frames {
        let end = (next + BATCH).min(cfg.frames);
        let results: Vec<FrameResult> = (next..end)
            .into_par_iter()
            .map_init(
                || None,
                |scl, f| simulate_frame(code, engine, scl, sigma2, cfg.seed, point, f),
            )
            .collect();
        for r in results {
            frames_run += 1;
            errors += u64::from(r.error);
            acc.queries += r.queries;
            acc.bit_flips += r.bit_flips;
            acc.candidates += r.candidates;
            acc.ge_ops += r.ge_ops;
            if errors >= cfg.min_errors {
                break 'outer;
            }
        }
        next = end;
    }
    let f = frames_run as f64;
    PointStats {
        ebn0_db,
        frames_run,
        block_errors: errors,
        bler: errors as f64 / f,
        avg_queries: acc.queries as f64 / f,
        avg_bit_flips: acc.bit_flips as f64 / f,
        avg_candidates: acc.candidates as f64 / f,
        avg_ge_ops: acc.ge_ops as f64 / f,
        wall_time_s: if cfg.record_wall_time {
            start.elapsed().as_secs_f64()
        } else {
            0.0
        },
    }
}

/// Runs every point of the sweep in order.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<PointStats>> {
    if cfg.frames == 0 {
        return Err(invalid("frames must be at least 1"));
    }
    if cfg.ebn0_db.is_empty() {
        return Err(invalid("the Eb/N0 sweep is empty"));
    }
    if cfg.min_errors == 0 {
        return Err(invalid("min_errors must be at least 1"));
    }
    if let Some(v) = cfg.ebn0_db.iter().find(|v| v.is_nan() || **v == f64::NEG_INFINITY) {
        return Err(invalid(format!("invalid Eb/N0 point {v}")));
    }
    let code = Arc::new(CrcPolarCode::new(cfg.code.clone()));
    let engine = build_engine(cfg, &code)?;
    let body = || {
        cfg.ebn0_db
            .iter()
            .enumerate()
            .map(|(i, &snr)| run_point(cfg.into(), &code, &engine, i as u64, snr))
            .collect()
    };
    match cfg.threads {
        None => Ok(body()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map_err(|e| invalid(format!("thread pool: {e}")))?;
            Ok(pool.install(body))
        }
    }
}

/// Parses `start:step:stop` (inclusive), a single value, or a comma-separated
/// list of either. `inf` denotes a noiseless point.
pub fn parse_snr_range(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let fields: Vec<&str> = part.split(':').collect();
        let num = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| invalid(format!("bad SNR value {s:?}")))
        };
        match fields.as_slice() {
            [v] => out.push(num(v)?),
            [a, s, b] => {
                let (a, s, b) = (num(a)?, num(s)?, num(b)?);
                if !(a.is_finite() && s.is_finite() && b.is_finite()) || s <= 0.0 || b < a {
                    return Err(invalid(format!("bad SNR range {part:?}")));
                }
                let count = ((b - a) / s + 1e-9).floor() as u64 + 1;
                if count > 10_000 {
                    return Err(invalid(format!("SNR range {part:?} has too many points")));
                }
                // Rounded so that 2.0:0.1:2.3 does not print 2.3000000000000003.
                out.extend((0..count).map(|i| ((a + i as f64 * s) * 1e9).round() / 1e9));
            }
            _ => return Err(invalid(format!("bad SNR range {part:?}"))),
        }
    }
    if out.is_empty() {
        return Err(invalid("no SNR points given"));
    }
    Ok(out)
}

pub fn write_csv(stats: &[PointStats], w: impl Write) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    wtr.write_record([
        "ebn0_db",
        "frames",
        "errors",
        "bler",
        "avg_queries",
        "avg_bit_flips",
        "avg_candidates",
        "avg_ge_ops",
        "wall_time_s",
    ])?;
    for s in stats {
        wtr.serialize(s)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Writes `stats` as CSV to `path`.
pub fn emit_csv(stats: &[PointStats], path: impl AsRef<std::path::Path>) -> Result<()> {
    write_csv(stats, std::fs::File::create(path)?)
}

pub fn read_csv(r: impl Read) -> Result<Vec<PointStats>> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        out.push(row.map_err(Error::from)?);
    }
    Ok(out)
}

/// Bit-flip counts for the CA-OSD column as reported in the reference
/// complexity table, keyed by `(n, k, m)`. Not computed here.
pub const CA_OSD_REPORTED_BIT_FLIPS: [((usize, usize, usize), u64); 4] = [
    ((64, 32, 6), 8436),
    ((64, 44, 6), 19600),
    ((64, 53, 6), 32509),
    ((128, 108, 11), 273819),
];

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexityOptions {
    pub esn0_db: f64,
    pub w_i_max: u32,
    pub w_h_max: u32,
    pub order: EpOrder,
    pub frames: u64,
    pub seed: u64,
    pub list_size: usize,
    /// Whether to simulate PEPOSD bit flips; false leaves them empty.
    pub measure: bool,
}

impl Default for ComplexityOptions {
    fn default() -> Self {
        ComplexityOptions {
            esn0_db: 5.0,
            w_i_max: 50,
            w_h_max: 3,
            order: EpOrder::IwHw,
            frames: 1000,
            seed: 1,
            list_size: 32,
            measure: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexityRow {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub ge_ops: u64,
    /// `(delta, measured average bit flips per frame)`.
    pub peposd_bit_flips: Vec<(usize, f64)>,
    pub ca_osd_reported: Option<u64>,
    pub ca_scl_ops: u64,
}

/// `delta` values for the three PEPOSD columns.
pub fn complexity_deltas(n: usize) -> [usize; 3] {
    if n >= 128 {
        [1, 2, 8]
    } else {
        [8, 20, 100]
    }
}

pub fn complexity_report(codes: &[CodeSpec], opts: &ComplexityOptions) -> Result<Vec<ComplexityRow>> {
    let table = EpTable::generate(opts.w_i_max, opts.w_h_max, opts.order);
    let mut rows = Vec::with_capacity(codes.len());
    for spec in codes {
        let mut flips = Vec::new();
        if opts.measure {
            let ebn0 = esn0_to_ebn0(opts.esn0_db, spec.rate());
            let code = Arc::new(CrcPolarCode::new(spec.clone()));
            for delta in complexity_deltas(spec.n) {
                let dcfg = DecoderConfig::new(opts.w_i_max, opts.w_h_max, delta, opts.order);
                let dec = Engine::Peposd(PepOsdDecoder::for_code(code.clone(), &table, dcfg)?);
                let limits = Limits {
                    frames: opts.frames.max(1),
                    min_errors: u64::MAX,
                    seed: opts.seed,
                    record_wall_time: false,
                };
                let stats = run_point(limits, &code, &dec, 0, ebn0);
                flips.push((delta, stats.avg_bit_flips));
            }
        }
        rows.push(ComplexityRow {
            n: spec.n,
            k: spec.k,
            m: spec.m,
            ge_ops: ge_op_count(spec.n, spec.k_total()),
            peposd_bit_flips: flips,
            ca_osd_reported: CA_OSD_REPORTED_BIT_FLIPS
                .iter()
                .find(|(key, _)| *key == (spec.n, spec.k, spec.m))
                .map(|&(_, v)| v),
            ca_scl_ops: scl_op_count(spec.n, opts.list_size),
        });
    }
    Ok(rows)
}

/// Plain-text rendering of a complexity report.
pub fn format_complexity(rows: &[ComplexityRow], opts: &ComplexityOptions) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<16} {:>8} {:>28} {:>18} {:>10}",
        "code",
        "GE",
        "PEPOSD bit flips (delta)",
        "CA-OSD (reported)",
        format!("CA-SCL L={}", opts.list_size)
    );
    for r in rows {
        let flips = if r.peposd_bit_flips.is_empty() {
            "-".to_string()
        } else {
            r.peposd_bit_flips
                .iter()
                .map(|(d, f)| format!("{f:.1} ({d})"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let osd = r.ca_osd_reported.map_or("-".to_string(), |v| v.to_string());
        let _ = writeln!(
            s,
            "{:<16} {:>8} {:>28} {:>18} {:>10}",
            format!("[{},{}+{}]", r.n, r.k, r.m),
            r.ge_ops,
            flips,
            osd,
            r.ca_scl_ops
        );
    }
    let _ = writeln!(
        s,
        "PEPOSD: IW/HW={}/{}, Es/N0={} dB, {} frames, {} order. CA-OSD values are reported reference figures, not measured.",
        opts.w_i_max,
        opts.w_h_max,
        opts.esn0_db,
        opts.frames,
        opts.order.name()
    );
    s
}
