//! Columnar CSV plus JSON header for a Tx/Rx record pair.
//!
//! CSV columns: index, frame, is_ref, sent_re, sent_im, rx_re, rx_im, accepted.
//! Floats are written in shortest round-trip form, so loading reproduces the
//! records bit for bit. Corrected samples are rebuilt from the header's
//! per-frame phases.

use std::f64::consts::FRAC_PI_2;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use qnic_core::qcore::{Alphabet, CoherentSymbol, ComplexSample};
use qnic_core::C64;

use crate::error::{HwError, Result};
use crate::recovery::apply_frame_phases;
use crate::rx::RxRecord;
use crate::tx::{FrameConfig, TxRecord, TxSymbol};

pub const RECORD_SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordRow {
    pub index: usize,
    pub frame: u32,
    pub is_ref: bool,
    pub sent_re: f64,
    pub sent_im: f64,
    pub rx_re: f64,
    pub rx_im: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordHeader {
    pub schema: u32,
    pub seed: u64,
    pub frame: FrameConfig,
    pub alphabet: Alphabet,
    pub jitter_rel: f64,
    pub n_symbols: usize,
    pub frame_phases: Vec<f64>,
    pub survival_fraction: f64,
    /// Caller-supplied simulation parameters (channel, detector, drift, ...).
    #[serde(default)]
    pub params: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub header: RecordHeader,
    pub tx: TxRecord,
    pub rx: RxRecord,
}

impl Session {
    pub fn new(tx: TxRecord, rx: RxRecord, params: serde_json::Value) -> Result<Self> {
        if rx.len() != tx.symbols.len() {
            return Err(HwError::Mismatch(format!("{} received vs {} sent", rx.len(), tx.symbols.len())));
        }
        let header = RecordHeader {
            schema: RECORD_SCHEMA,
            seed: tx.seed,
            frame: tx.config,
            alphabet: tx.alphabet.clone(),
            jitter_rel: tx.jitter_rel,
            n_symbols: tx.symbols.len(),
            frame_phases: rx.frame_phases.clone(),
            survival_fraction: rx.survival_fraction,
            params,
        };
        Ok(Self { header, tx, rx })
    }
}

pub fn write_csv<W: Write>(w: W, tx: &TxRecord, rx: &RxRecord) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for (i, s) in tx.symbols.iter().enumerate() {
        out.serialize(RecordRow {
            index: i,
            frame: s.frame,
            is_ref: s.is_ref,
            sent_re: s.symbol.amplitude.re,
            sent_im: s.symbol.amplitude.im,
            rx_re: rx.raw[i].re,
            rx_im: rx.raw[i].im,
            accepted: rx.accepted[i],
        })?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<Vec<RecordRow>> {
    let mut rows = Vec::new();
    for (n, row) in csv::Reader::from_reader(r).deserialize().enumerate() {
        let row: RecordRow = row?;
        if row.index != n {
            return Err(HwError::Mismatch(format!("row {n} has index {}", row.index)));
        }
        rows.push(row);
    }
    Ok(rows)
}

fn alphabet_index(alphabet: &Alphabet, z: C64) -> u8 {
    let k = ((z.arg() - alphabet.phase0()) / FRAC_PI_2).round() as i64;
    k.rem_euclid(4) as u8
}

/// Rebuilds the record pair from CSV rows and the header.
pub fn records_from_rows(header: &RecordHeader, rows: &[RecordRow]) -> Result<(TxRecord, RxRecord)> {
    if header.schema != RECORD_SCHEMA {
        return Err(HwError::Mismatch(format!("unsupported record schema {}", header.schema)));
    }
    if rows.len() != header.n_symbols {
        return Err(HwError::Mismatch(format!("{} rows, header says {}", rows.len(), header.n_symbols)));
    }
    let mut frame_starts = Vec::new();
    let mut symbols = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        if i == 0 || r.frame != rows[i - 1].frame {
            if r.frame as usize != frame_starts.len() {
                return Err(HwError::Mismatch(format!("frame {} out of order at row {i}", r.frame)));
            }
            frame_starts.push(i);
        }
        let amplitude = C64::new(r.sent_re, r.sent_im);
        let index = if r.is_ref { 0 } else { alphabet_index(&header.alphabet, amplitude) };
        symbols.push(TxSymbol {
            symbol: CoherentSymbol { amplitude, index },
            frame: r.frame,
            is_ref: r.is_ref,
        });
    }
    frame_starts.push(rows.len());
    let tx = TxRecord {
        seed: header.seed,
        config: header.frame,
        alphabet: header.alphabet.clone(),
        jitter_rel: header.jitter_rel,
        symbols,
        frame_starts,
    };
    let raw: Vec<ComplexSample> = rows.iter().map(|r| ComplexSample { re: r.rx_re, im: r.rx_im }).collect();
    let accepted: Vec<bool> = rows.iter().map(|r| r.accepted).collect();
    let corrected = if header.frame_phases.is_empty() {
        raw.clone()
    } else {
        if header.frame_phases.len() != tx.n_frames() {
            return Err(HwError::Mismatch("frame phase count differs from frame count".into()));
        }
        apply_frame_phases(&tx, &raw, &header.frame_phases)
    };
    let kept = accepted.iter().filter(|a| **a).count();
    let rx = RxRecord {
        raw,
        corrected,
        survival_fraction: kept as f64 / accepted.len().max(1) as f64,
        accepted,
        frame_phases: header.frame_phases.clone(),
    };
    Ok((tx, rx))
}

pub fn session_paths(dir: &Path, stem: &str) -> (PathBuf, PathBuf) {
    (dir.join(format!("{stem}.csv")), dir.join(format!("{stem}.json")))
}

/// Writes `<stem>.csv` and `<stem>.json` into `dir`.
pub fn save_session(dir: &Path, stem: &str, session: &Session) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let (csv_path, json_path) = session_paths(dir, stem);
    write_csv(BufWriter::new(File::create(&csv_path)?), &session.tx, &session.rx)?;
    let mut w = BufWriter::new(File::create(&json_path)?);
    serde_json::to_writer_pretty(&mut w, &session.header)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok((csv_path, json_path))
}

pub fn load_session(dir: &Path, stem: &str) -> Result<Session> {
    let (csv_path, json_path) = session_paths(dir, stem);
    let header: RecordHeader = serde_json::from_reader(BufReader::new(File::open(json_path)?))?;
    let rows = read_csv(BufReader::new(File::open(csv_path)?))?;
    let (tx, rx) = records_from_rows(&header, &rows)?;
    Ok(Session { header, tx, rx })
}
