//! Historical series, regime breakpoints and per-regime statistics.

use std::fs::File;
use std::io::{Read, Write};
use std::ops::Range;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regime::RegimeSpec;
use crate::srmr::{estimate_moments, MomentTargets};

/// A dated series: spreads in basis points or yields in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoricalSeries {
    pub label: String,
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_date(s: &str) -> std::result::Result<NaiveDate, String> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").map_err(|e| format!("bad date `{s}`: {e}"))
}

impl HistoricalSeries {
    pub fn new(label: impl Into<String>, dates: Vec<NaiveDate>, values: Vec<f64>) -> Result<Self> {
        if dates.len() != values.len() {
            return Err(Error::invalid("dates and values differ in length"));
        }
        if dates.is_empty() {
            return Err(Error::NoObservations);
        }
        if let Some(w) = dates.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::invalid(format!("dates not strictly increasing at {}", w[1])));
        }
        Ok(Self {
            label: label.into(),
            dates,
            values,
        })
    }

    pub fn read_csv(path: impl AsRef<Path>, label: impl Into<String>) -> Result<Self> {
        let path = path.as_ref();
        let f = File::open(path).map_err(|e| parse_error(path, 0, e.to_string()))?;
        Self::from_reader(f, path, label)
    }

    /// Reads `date,value` rows after a header. `path` only labels errors.
    pub fn from_reader<R: Read>(r: R, path: &Path, label: impl Into<String>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(r);
        let headers = rdr.headers().map_err(|e| parse_error(path, 1, e.to_string()))?.clone();
        if headers.len() < 2 || &headers[0] != "date" || &headers[1] != "value" {
            return Err(parse_error(path, 1, "expected header `date,value`"));
        }
        let mut dates = Vec::new();
        let mut values = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line() as usize);
                parse_error(path, line, e.to_string())
            })?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            if rec.len() != 2 {
                return Err(parse_error(path, line, format!("expected 2 fields, found {}", rec.len())));
            }
            let d = parse_date(&rec[0]).map_err(|m| parse_error(path, line, m))?;
            let v: f64 = rec[1]
                .parse()
                .map_err(|_| parse_error(path, line, format!("bad value `{}`", &rec[1])))?;
            if !v.is_finite() {
                return Err(parse_error(path, line, format!("non-finite value `{}`", &rec[1])));
            }
            if let Some(&prev) = dates.last() {
                if d <= prev {
                    return Err(parse_error(path, line, format!("date {d} does not follow {prev}")));
                }
            }
            dates.push(d);
            values.push(v);
        }
        Self::new(label, dates, values).map_err(|e| match e {
            Error::NoObservations => parse_error(path, 1, "no observations"),
            e => e,
        })
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["date", "value"])?;
        for (d, v) in self.dates.iter().zip(&self.values) {
            wtr.write_record([d.format("%Y-%m-%d").to_string(), v.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn last_value(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn require_positive(&self) -> Result<()> {
        match self.values.iter().position(|&v| !(v > 0.0)) {
            Some(i) => Err(Error::invalid(format!(
                "{}: nonpositive value {} on {}",
                self.label, self.values[i], self.dates[i]
            ))),
            None => Ok(()),
        }
    }

    /// Adds `shift` to every value.
    pub fn shifted(&self, shift: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v + shift).collect(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: NaiveDate,
    pub label: String,
}

/// Regime segments given by their start dates. A segment runs until the next
/// one starts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeBreakpoints {
    pub segments: Vec<Segment>,
}

impl RegimeBreakpoints {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::invalid("no regime segments"));
        }
        if let Some(w) = segments.windows(2).find(|w| w[1].start <= w[0].start) {
            return Err(Error::invalid(format!("segment starts not increasing at {}", w[1].start)));
        }
        Ok(Self { segments })
    }

    /// A single segment covering everything.
    pub fn whole(label: impl Into<String>) -> Self {
        Self {
            segments: vec![Segment {
                start: NaiveDate::MIN,
                label: label.into(),
            }],
        }
    }

    /// Reads `start,label` rows after a header.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| parse_error(path, 0, e.to_string()))?;
        let mut segments = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| parse_error(path, e.position().map_or(0, |p| p.line() as usize), e.to_string()))?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            let start = parse_date(rec.get(0).unwrap_or("")).map_err(|m| parse_error(path, line, m))?;
            let label = rec.get(1).filter(|s| !s.is_empty()).map_or_else(|| start.to_string(), String::from);
            segments.push(Segment { start, label });
        }
        Self::new(segments).map_err(|e| parse_error(path, 1, e.to_string()))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["start", "label"])?;
        for s in &self.segments {
            wtr.write_record([s.start.format("%Y-%m-%d").to_string(), s.label.clone()])?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Index ranges of the series that fall into each segment.
    pub fn partition(&self, series: &HistoricalSeries) -> Result<Vec<Range<usize>>> {
        let first = series.dates[0];
        let last = series.dates[series.len() - 1];
        if self.segments[0].start > first {
            return Err(Error::invalid(format!(
                "first segment starts {} after the series begins {first}",
                self.segments[0].start
            )));
        }
        let mut out = Vec::with_capacity(self.segments.len());
        for (k, seg) in self.segments.iter().enumerate() {
            if seg.start > last {
                return Err(Error::invalid(format!("segment `{}` starts after the series ends", seg.label)));
            }
            let lo = series.dates.partition_point(|d| *d < seg.start);
            let hi = match self.segments.get(k + 1) {
                Some(next) => series.dates.partition_point(|d| *d < next.start),
                None => series.len(),
            };
            if hi <= lo {
                return Err(Error::invalid(format!("segment `{}` has no observations", seg.label)));
            }
            out.push(lo..hi);
        }
        Ok(out)
    }
}

/// Statistics of one regime segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestedRegime {
    pub spec: RegimeSpec,
    pub targets: MomentTargets,
    pub start: NaiveDate,
    pub end: NaiveDate,
    /// Trading days in the segment.
    pub observations: usize,
}

/// Per-segment moment targets. Segment targets start at the segment's first
/// observation.
pub fn ingest(series: &HistoricalSeries, breakpoints: &RegimeBreakpoints) -> Result<Vec<IngestedRegime>> {
    series.require_positive()?;
    let ranges = breakpoints.partition(series)?;
    ranges
        .into_iter()
        .zip(&breakpoints.segments)
        .enumerate()
        .map(|(i, (r, seg))| {
            let targets = estimate_moments(&series.values[r.clone()])
                .map_err(|e| Error::invalid(format!("segment `{}`: {e}", seg.label)))?;
            if targets.sigma_s_hat == 0.0 || targets.sigma_r_hat == 0.0 {
                return Err(Error::Degenerate(format!("segment `{}` is constant", seg.label)));
            }
            let spec = RegimeSpec::new(i, targets.s_hat, targets.sigma_s_hat, targets.sigma_r_hat, seg.label.clone())?;
            Ok(IngestedRegime {
                spec,
                targets,
                start: series.dates[r.start],
                end: series.dates[r.end - 1],
                observations: r.len(),
            })
        })
        .collect()
}

/// Table of per-regime statistics, return statistics in daily percent.
pub fn write_regime_table<W: Write>(rows: &[IngestedRegime], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record([
        "regime",
        "label",
        "start",
        "end",
        "days",
        "mean",
        "stdev",
        "return_stdev_pct",
        "smoothness_pct2",
    ])?;
    for r in rows {
        wtr.write_record([
            r.spec.regime_id.to_string(),
            r.spec.label.clone(),
            r.start.to_string(),
            r.end.to_string(),
            r.observations.to_string(),
            format!("{:.4}", r.spec.spread_mean),
            format!("{:.4}", r.spec.spread_stdev),
            format!("{:.4}", 100.0 * r.spec.return_stdev),
            format!("{:.6}", 1e4 * r.targets.s2_hat),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Resolves `p` against `base` unless it is absolute.
pub fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}
