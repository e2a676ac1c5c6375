//! Output files.
//!
//! Curve CSVs (schema 1) start with one comment line
//! `# qnic <what> schema=1 config_sha256=<hex> seed=<u64>`, then the header
//! `loss_dB,alpha,xi,L,L_tilde,kappa,p_e,p_err,N,delta_r_opt`. Empty fields
//! mean the quantity does not apply or the point failed. `kappa` carries the
//! quoted rate: 2 kappa for secret sharing, kappa for QKD. `xi` is the
//! excess noise as quoted, so (alpha, xi) identifies a preset curve.
//!
//! Failure tables (`failures.csv`) have the same comment line and the header
//! `figure,preset,loss_dB,insecure,error`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;

pub const OUTPUT_SCHEMA: u32 = 1;

pub const CURVE_COLUMNS: [&str; 10] = [
    "loss_dB", "alpha", "xi", "L", "L_tilde", "kappa", "p_e", "p_err", "N", "delta_r_opt",
];

pub const FAILURE_COLUMNS: [&str; 5] = ["figure", "preset", "loss_dB", "insecure", "error"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveRow {
    pub loss_db: f64,
    pub alpha: f64,
    pub xi: f64,
    pub l: Option<f64>,
    pub l_tilde: Option<f64>,
    pub kappa: Option<f64>,
    pub p_e: Option<f64>,
    pub p_err: Option<f64>,
    pub n: Option<f64>,
    pub delta_r_opt: Option<f64>,
}

impl CurveRow {
    pub fn failed(loss_db: f64, alpha: f64, xi: f64) -> Self {
        Self {
            loss_db,
            alpha,
            xi,
            l: None,
            l_tilde: None,
            kappa: None,
            p_e: None,
            p_err: None,
            n: None,
            delta_r_opt: None,
        }
    }

    fn fields(&self) -> [String; 10] {
        let f = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        [
            self.loss_db.to_string(),
            self.alpha.to_string(),
            self.xi.to_string(),
            f(self.l),
            f(self.l_tilde),
            f(self.kappa),
            f(self.p_e),
            f(self.p_err),
            f(self.n),
            f(self.delta_r_opt),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailureRow {
    pub figure: String,
    pub preset: String,
    pub loss_db: f64,
    pub insecure: bool,
    pub error: String,
}

pub fn comment_line(what: &str, hash: &str, seed: u64) -> String {
    format!("# qnic {what} schema={OUTPUT_SCHEMA} config_sha256={hash} seed={seed}")
}

fn with_comment(path: &Path, comment: &str) -> Result<csv::Writer<BufWriter<File>>> {
    let mut f = BufWriter::new(File::create(path)?);
    writeln!(f, "{comment}")?;
    Ok(csv::Writer::from_writer(f))
}

pub fn write_curve(path: &Path, rows: &[CurveRow], what: &str, hash: &str, seed: u64) -> Result<()> {
    let mut w = with_comment(path, &comment_line(what, hash, seed))?;
    w.write_record(CURVE_COLUMNS)?;
    for r in rows {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_failures(path: &Path, rows: &[FailureRow], hash: &str, seed: u64) -> Result<()> {
    let mut w = with_comment(path, &comment_line("failures", hash, seed))?;
    w.write_record(FAILURE_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.figure.clone(),
            r.preset.clone(),
            r.loss_db.to_string(),
            r.insecure.to_string(),
            r.error.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Parsed curve file: the comment line and the data rows as strings.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveFile {
    pub comment: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub fn read_curve(path: &Path) -> Result<CurveFile> {
    let text = std::fs::read_to_string(path)?;
    let (comment, body) = text.split_once('\n').unwrap_or((&text, ""));
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let header = r.headers()?.iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|x| x.iter().map(str::to_string).collect()))
        .collect::<std::result::Result<_, _>>()?;
    Ok(CurveFile {
        comment: comment.to_string(),
        header,
        rows,
    })
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

/// SHA-256 of every regular file under `dir`, sorted by relative path.
pub fn hash_tree(dir: &Path) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d)? {
            let p = entry?.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap_or(&p).to_string_lossy().replace('\\', "/");
                out.push((rel, sha256_file(&p)?));
            }
        }
    }
    out.sort();
    Ok(out)
}
