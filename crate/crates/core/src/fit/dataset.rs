use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which dressed transition a measured frequency belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TransitionLabel {
    /// Qubit ground to first excited.
    T01,
    T02,
    T12,
    /// The dressed resonator line (one photon, qubit in the ground state).
    Resonator,
    /// Matched to whichever model transition lies nearest.
    Unassigned,
}

impl TransitionLabel {
    pub const MODELED: [TransitionLabel; 4] = [Self::T01, Self::T02, Self::T12, Self::Resonator];
}

impl fmt::Display for TransitionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::T01 => "01",
            Self::T02 => "02",
            Self::T12 => "12",
            Self::Resonator => "res",
            Self::Unassigned => "unassigned",
        })
    }
}

impl FromStr for TransitionLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "01" => Ok(Self::T01),
            "02" => Ok(Self::T02),
            "12" => Ok(Self::T12),
            "res" => Ok(Self::Resonator),
            "" | "unassigned" => Ok(Self::Unassigned),
            other => Err(Error::invalid(format!("unknown transition label `{other}`"))),
        }
    }
}

/// One measured line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionPoint {
    /// External flux in Φ0.
    pub flux: f64,
    /// GHz.
    pub freq: f64,
    pub label: TransitionLabel,
    pub weight: f64,
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    flux_phi0: f64,
    freq_ghz: f64,
    label: String,
    #[serde(default)]
    weight: Option<f64>,
}

/// Measured transition frequencies, kept in a canonical order so that the
/// cost does not depend on how the rows were listed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionDataset {
    rows: Vec<TransitionPoint>,
}

impl TransitionDataset {
    pub fn new(mut rows: Vec<TransitionPoint>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        for (i, r) in rows.iter().enumerate() {
            if !r.flux.is_finite() {
                return Err(Error::invalid(format!("row {}: flux is not finite", i + 1)));
            }
            if !(r.freq.is_finite() && r.freq > 0.0) {
                return Err(Error::invalid(format!("row {}: frequency must be positive", i + 1)));
            }
            if !(r.weight.is_finite() && r.weight >= 0.0) {
                return Err(Error::invalid(format!("row {}: weight must be nonnegative", i + 1)));
            }
        }
        rows.sort_by(|a, b| {
            a.flux
                .total_cmp(&b.flux)
                .then(a.label.cmp(&b.label))
                .then(a.freq.total_cmp(&b.freq))
                .then(a.weight.total_cmp(&b.weight))
        });
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[TransitionPoint] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Distinct flux values in ascending order.
    pub fn flux_points(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for r in &self.rows {
            if out.last() != Some(&r.flux) {
                out.push(r.flux);
            }
        }
        out
    }

    /// Read `flux_phi0,freq_ghz,label,weight`; a missing weight means 1.
    /// Lines starting with `#` are skipped.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
        let mut rows = Vec::new();
        for rec in rdr.deserialize() {
            let row: CsvRow = rec?;
            rows.push(TransitionPoint {
                flux: row.flux_phi0,
                freq: row.freq_ghz,
                label: row.label.parse()?,
                weight: row.weight.unwrap_or(1.0),
            });
        }
        Self::new(rows)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["flux_phi0", "freq_ghz", "label", "weight"])?;
        for r in &self.rows {
            w.write_record([
                format!("{:.8}", r.flux),
                format!("{:.9}", r.freq),
                r.label.to_string(),
                format!("{}", r.weight),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_round_trip() {
        for l in TransitionLabel::MODELED.into_iter().chain([TransitionLabel::Unassigned]) {
            assert_eq!(l.to_string().parse::<TransitionLabel>().unwrap(), l);
        }
        assert!("03".parse::<TransitionLabel>().is_err());
    }

    #[test]
    fn csv_round_trip_and_validation() {
        let text = "flux_phi0,freq_ghz,label,weight\n# comment\n0.4,3.8,01,1\n0.3,4.3,res,\n0.3,4.0,,2\n";
        let d = TransitionDataset::read_csv(text.as_bytes()).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.flux_points(), vec![0.3, 0.4]);
        assert_eq!(d.rows()[0].label, TransitionLabel::Resonator);
        assert_eq!(d.rows()[0].weight, 1.0);
        assert_eq!(d.rows()[1].label, TransitionLabel::Unassigned);
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        assert_eq!(TransitionDataset::read_csv(buf.as_slice()).unwrap(), d);

        assert!(matches!(TransitionDataset::new(vec![]), Err(Error::EmptyDataset)));
        assert!(TransitionDataset::read_csv("flux_phi0,freq_ghz,label,weight\n0.4,-1,01,1\n".as_bytes()).is_err());
    }
}
