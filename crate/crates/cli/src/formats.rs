//! On-disk formats: channel files, boundary CSV/JSON, triples and points.
//!
//! Matrices are written as arrays of rows. All rates are nats unless the
//! record says otherwise.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use wiretap_core::{BoundaryPoint, DMatrix, InputConstraint, PsdMatrix, PublicRateTriple, RateTriple, WiretapChannel};

pub const CSV_HEADER: [&str; 10] = ["r0", "mu_p", "mu_s", "rs", "rp", "r1", "re", "objective", "gap", "converged"];

pub type Rows = Vec<Vec<f64>>;

/// `{"covariance": [[..]]}` or `{"power": P}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ConstraintFile {
    Covariance(Rows),
    Power(f64),
}

/// Channel description. Missing gains mean identity gains (aligned channel).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_y: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_z: Option<Rows>,
    pub sigma_y: Rows,
    pub sigma_z: Rows,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraint: Option<ConstraintFile>,
}

fn matrix(rows: &Rows, what: &str) -> anyhow::Result<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if n == 0 || m == 0 {
        bail!("{what} is empty");
    }
    if rows.iter().any(|r| r.len() != m) {
        bail!("{what} has rows of different lengths");
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    if flat.iter().any(|x| !x.is_finite()) {
        bail!("{what} has a non-finite entry");
    }
    Ok(DMatrix::from_row_slice(n, m, &flat))
}

pub fn psd(rows: &Rows, what: &str) -> anyhow::Result<PsdMatrix> {
    PsdMatrix::new(matrix(rows, what)?).with_context(|| format!("{what} is not a valid covariance"))
}

impl ChannelFile {
    pub fn from_channel(ch: &WiretapChannel, constraint: Option<&InputConstraint>) -> Self {
        let rows = |m: &DMatrix<f64>| (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect();
        let gains = !ch.is_aligned();
        Self {
            h_y: gains.then(|| rows(&ch.h_y)),
            h_z: gains.then(|| rows(&ch.h_z)),
            sigma_y: ch.sigma_y.to_rows(),
            sigma_z: ch.sigma_z.to_rows(),
            constraint: constraint.map(|c| match c {
                InputConstraint::Covariance(s) => ConstraintFile::Covariance(s.to_rows()),
                InputConstraint::Power(p) => ConstraintFile::Power(*p),
            }),
        }
    }

    pub fn into_parts(self) -> anyhow::Result<(WiretapChannel, Option<InputConstraint>)> {
        let sigma_y = psd(&self.sigma_y, "sigma_y")?;
        let sigma_z = psd(&self.sigma_z, "sigma_z")?;
        let h_y = match &self.h_y {
            Some(r) => matrix(r, "h_y")?,
            None => DMatrix::identity(sigma_y.dim(), sigma_y.dim()),
        };
        let t = h_y.ncols();
        let h_z = match &self.h_z {
            Some(r) => matrix(r, "h_z")?,
            None => DMatrix::identity(sigma_z.dim(), t),
        };
        let ch = WiretapChannel::new(h_y, h_z, sigma_y, sigma_z);
        ch.validate().context("invalid channel")?;
        let constraint = match self.constraint {
            None => None,
            Some(ConstraintFile::Covariance(r)) => Some(InputConstraint::Covariance(psd(&r, "constraint")?)),
            Some(ConstraintFile::Power(p)) => Some(InputConstraint::power(p)?),
        };
        if let Some(c) = &constraint {
            c.check_dim(ch.transmit_dim())?;
        }
        Ok((ch, constraint))
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))
}

pub fn load_channel(path: &Path) -> anyhow::Result<(WiretapChannel, Option<InputConstraint>)> {
    read_json::<ChannelFile>(path)?.into_parts().with_context(|| format!("in {}", path.display()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    Nats,
    Bits,
}

impl Units {
    pub fn from_bits_flag(bits: bool) -> Self {
        if bits {
            Units::Bits
        } else {
            Units::Nats
        }
    }

    /// Factor applied to a value in nats for display.
    pub fn factor(self) -> f64 {
        match self {
            Units::Nats => 1.0,
            Units::Bits => 1.0 / std::f64::consts::LN_2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Units::Nats => "nats",
            Units::Bits => "bits",
        }
    }
}

/// One boundary point as written to CSV (without matrices) or JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub r0: f64,
    pub mu_p: f64,
    pub mu_s: f64,
    pub rs: f64,
    pub rp: f64,
    pub r1: f64,
    pub re: f64,
    pub objective: f64,
    pub gap: f64,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_opt: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<Rows>,
    #[serde(default = "default_units")]
    pub units: Units,
}

fn default_units() -> Units {
    Units::Nats
}

impl PointRecord {
    pub fn new(p: &BoundaryPoint, units: Units, with_matrices: bool) -> Self {
        let f = units.factor();
        Self {
            r0: p.r0_star * f,
            mu_p: p.mu_p,
            mu_s: p.mu_s,
            rs: p.rs * f,
            rp: p.rp * f,
            r1: p.r1() * f,
            re: p.re() * f,
            objective: p.objective * f,
            gap: p.gap * f,
            converged: p.converged,
            k_opt: with_matrices.then(|| p.k_opt().to_rows()),
            s: with_matrices.then(|| p.s.to_rows()),
            units,
        }
    }

    /// Common rate in nats.
    pub fn r0_nats(&self) -> f64 {
        self.r0 / self.units.factor()
    }
}

#[derive(Serialize)]
struct CsvRow {
    r0: f64,
    mu_p: f64,
    mu_s: f64,
    rs: f64,
    rp: f64,
    r1: f64,
    re: f64,
    objective: f64,
    gap: f64,
    converged: bool,
}

pub fn write_boundary_csv<W: Write>(points: &[BoundaryPoint], units: Units, out: W) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        let r = PointRecord::new(p, units, false);
        w.serialize(CsvRow {
            r0: r.r0,
            mu_p: r.mu_p,
            mu_s: r.mu_s,
            rs: r.rs,
            rp: r.rp,
            r1: r.r1,
            re: r.re,
            objective: r.objective,
            gap: r.gap,
            converged: r.converged,
        })?;
    }
    if points.is_empty() {
        w.write_record(CSV_HEADER)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_boundary_json<W: Write>(points: &[BoundaryPoint], units: Units, mut out: W) -> anyhow::Result<()> {
    let records: Vec<PointRecord> = points.iter().map(|p| PointRecord::new(p, units, true)).collect();
    serde_json::to_writer_pretty(&mut out, &records)?;
    writeln!(out)?;
    Ok(())
}

/// A triple in either form, told apart by its field names.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TripleFile {
    Public(PublicRateTriple),
    Equivocation(RateTriple),
}

impl TripleFile {
    pub fn validate(self) -> anyhow::Result<Self> {
        Ok(match self {
            TripleFile::Public(p) => TripleFile::Public(PublicRateTriple::new(p.r0, p.rp, p.rs)?),
            TripleFile::Equivocation(t) => TripleFile::Equivocation(RateTriple::new(t.r0, t.r1, t.re)?),
        })
    }
}

/// A point file holds one record or an array of them.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum PointFile {
    One(PointRecord),
    Many(Vec<PointRecord>),
}

impl PointFile {
    pub fn into_vec(self) -> Vec<PointRecord> {
        match self {
            PointFile::One(p) => vec![p],
            PointFile::Many(v) => v,
        }
    }
}
