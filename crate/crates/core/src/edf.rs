//! EDF reading and writing, plus CHB-MIT seizure summary parsing.
//!
//! Only plain EDF is handled: a 256-byte fixed header, `ns` signal headers of
//! 256 bytes each (stored field-major), then data records of little-endian
//! `i16` samples interleaved per record and per channel. Seizure annotations
//! come from the sidecar `*-summary.txt` files, not from an EDF+ annotation
//! channel.

use std::sync::OnceLock;

use chrono::{Datelike, NaiveDate, NaiveDateTime, NaiveTime, Timelike};
use indexmap::IndexMap;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const FIXED_HEADER_LEN: usize = 256;
const SIGNAL_HEADER_LEN: usize = 256;

/// Per-signal header of an EDF file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelMeta {
    pub label: String,
    pub transducer: String,
    pub physical_dimension: String,
    pub physical_min: f64,
    pub physical_max: f64,
    pub digital_min: i32,
    pub digital_max: i32,
    pub prefiltering: String,
    pub samples_per_record: usize,
}

impl ChannelMeta {
    /// Physical units per digital step. Negative when the physical axis is
    /// inverted.
    pub fn gain(&self) -> f64 {
        (self.physical_max - self.physical_min) / f64::from(self.digital_max - self.digital_min)
    }

    /// Maps a stored digital value to physical units. The two ends of the
    /// digital range map exactly onto the two ends of the physical range.
    pub fn to_physical(&self, digital: i32) -> f64 {
        if digital == self.digital_min {
            self.physical_min
        } else if digital == self.digital_max {
            self.physical_max
        } else {
            self.physical_min + f64::from(digital - self.digital_min) * self.gain()
        }
    }

    /// Nearest digital value for a physical sample, clamped to the digital range.
    pub fn to_digital(&self, physical: f64) -> i32 {
        let d = f64::from(self.digital_min) + (physical - self.physical_min) / self.gain();
        (d.round() as i64).clamp(i64::from(self.digital_min), i64::from(self.digital_max)) as i32
    }

    fn validate(&self) -> Result<()> {
        if self.digital_min >= self.digital_max {
            return Err(Error::Calibration {
                channel: self.label.clone(),
                reason: format!(
                    "digital_min {} >= digital_max {}",
                    self.digital_min, self.digital_max
                ),
            });
        }
        if self.digital_min < i32::from(i16::MIN) || self.digital_max > i32::from(i16::MAX) {
            return Err(Error::Calibration {
                channel: self.label.clone(),
                reason: "digital range exceeds 16-bit storage".into(),
            });
        }
        if !(self.physical_min.is_finite() && self.physical_max.is_finite())
            || self.physical_min == self.physical_max
        {
            return Err(Error::Calibration {
                channel: self.label.clone(),
                reason: format!(
                    "physical range [{}, {}] is empty",
                    self.physical_min, self.physical_max
                ),
            });
        }
        if self.samples_per_record == 0 {
            return Err(Error::Calibration {
                channel: self.label.clone(),
                reason: "samples_per_record must be at least 1".into(),
            });
        }
        Ok(())
    }
}

/// A parsed EDF file with samples in physical units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recording {
    pub patient_id: String,
    pub recording_id: String,
    pub start_datetime: NaiveDateTime,
    pub record_duration_s: f64,
    pub num_records: usize,
    pub channels: Vec<ChannelMeta>,
    /// One sample vector per channel, `num_records * samples_per_record` long.
    pub signals: Vec<Vec<f64>>,
}

impl Recording {
    pub fn sample_rate_hz(&self, channel: usize) -> f64 {
        self.channels[channel].samples_per_record as f64 / self.record_duration_s
    }

    pub fn duration_s(&self) -> f64 {
        self.num_records as f64 * self.record_duration_s
    }

    /// Checks the structural invariants (calibration, sample counts).
    pub fn validate(&self) -> Result<()> {
        if !(self.record_duration_s.is_finite() && self.record_duration_s > 0.0) {
            return Err(Error::Config(format!(
                "record duration must be positive, got {}",
                self.record_duration_s
            )));
        }
        if self.signals.len() != self.channels.len() {
            return Err(Error::Shape {
                expected: self.channels.len(),
                got: self.signals.len(),
            });
        }
        for (ch, sig) in self.channels.iter().zip(&self.signals) {
            ch.validate()?;
            let expected = self.num_records * ch.samples_per_record;
            if sig.len() != expected {
                return Err(Error::Data(format!(
                    "channel `{}` has {} samples, expected {}",
                    ch.label,
                    sig.len(),
                    expected
                )));
            }
        }
        Ok(())
    }
}

/// Half-open seizure interval `[start_s, end_s)` within one file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeizureInterval {
    pub file_name: String,
    pub start_s: f64,
    pub end_s: f64,
}

impl SeizureInterval {
    pub fn new(file_name: impl Into<String>, start_s: f64, end_s: f64) -> Result<Self> {
        let file_name = file_name.into();
        if !(start_s >= 0.0 && end_s > start_s && end_s.is_finite()) {
            return Err(Error::Interval {
                file: file_name,
                start: start_s,
                end: end_s,
            });
        }
        Ok(Self {
            file_name,
            start_s,
            end_s,
        })
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(Error::Truncated {
                offset: self.bytes.len(),
                needed: end - self.bytes.len(),
            });
        }
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn text(&mut self, n: usize) -> Result<String> {
        let offset = self.pos;
        let raw = self.take(n)?;
        if let Some(i) = raw.iter().position(|b| !(0x20..=0x7e).contains(b)) {
            return Err(Error::NonAscii {
                offset: offset + i,
                byte: raw[i],
            });
        }
        // Printable ASCII is valid UTF-8.
        let s = std::str::from_utf8(raw).expect("ascii");
        Ok(s.trim_end_matches(' ').to_string())
    }

    fn number<T: std::str::FromStr>(&mut self, n: usize, field: &'static str) -> Result<T> {
        let offset = self.pos;
        let s = self.text(n)?;
        s.trim().parse().map_err(|_| Error::Field {
            field,
            offset,
            value: s,
        })
    }
}

fn parse_start(date: &str, time: &str, offset: usize) -> Result<NaiveDateTime> {
    let bad = |field: &'static str, v: &str| Error::Field {
        field,
        offset,
        value: v.to_string(),
    };
    let parts = |s: &str| -> Option<[u32; 3]> {
        let mut it = s.trim().split(['.', ':']).map(|p| p.trim().parse::<u32>().ok());
        let out = [it.next()??, it.next()??, it.next()??];
        it.next().is_none().then_some(out)
    };
    let [dd, mm, yy] = parts(date).ok_or_else(|| bad("start date", date))?;
    let [h, m, s] = parts(time).ok_or_else(|| bad("start time", time))?;
    // EDF clipping date: yy 85..=99 are 1985..1999, 00..=84 are 2000..2084.
    let year = if yy >= 85 { 1900 + yy } else { 2000 + yy } as i32;
    let d = NaiveDate::from_ymd_opt(year, mm, dd).ok_or_else(|| bad("start date", date))?;
    let t = NaiveTime::from_hms_opt(h, m, s).ok_or_else(|| bad("start time", time))?;
    Ok(NaiveDateTime::new(d, t))
}

/// Parses an EDF byte stream into a [`Recording`] in physical units.
pub fn parse_edf(bytes: &[u8]) -> Result<Recording> {
    let mut cur = Cursor { bytes, pos: 0 };

    let version = cur.text(8)?;
    if version.trim() != "0" {
        return Err(Error::Field {
            field: "version",
            offset: 0,
            value: version,
        });
    }
    let patient_id = cur.text(80)?;
    let recording_id = cur.text(80)?;
    let date_offset = cur.pos;
    let date = cur.text(8)?;
    let time = cur.text(8)?;
    let start_datetime = parse_start(&date, &time, date_offset)?;
    let header_offset = cur.pos;
    let header_bytes: usize = cur.number(8, "header byte count")?;
    cur.take(44)?;
    let records_offset = cur.pos;
    let declared_records: i64 = cur.number(8, "number of data records")?;
    let duration_offset = cur.pos;
    let record_duration_s: f64 = cur.number(8, "data record duration")?;
    let ns: usize = cur.number(4, "number of signals")?;

    if header_bytes != FIXED_HEADER_LEN + ns * SIGNAL_HEADER_LEN {
        return Err(Error::Field {
            field: "header byte count",
            offset: header_offset,
            value: header_bytes.to_string(),
        });
    }
    if ns > 0 && !(record_duration_s.is_finite() && record_duration_s > 0.0) {
        return Err(Error::Field {
            field: "data record duration",
            offset: duration_offset,
            value: record_duration_s.to_string(),
        });
    }

    let mut fields = |width: usize| -> Result<Vec<String>> {
        (0..ns).map(|_| cur.text(width)).collect()
    };
    let labels = fields(16)?;
    let transducers = fields(80)?;
    let dimensions = fields(8)?;
    let mut nums = |width: usize, name: &'static str| -> Result<Vec<f64>> {
        (0..ns).map(|_| cur.number::<f64>(width, name)).collect()
    };
    let phys_min = nums(8, "physical minimum")?;
    let phys_max = nums(8, "physical maximum")?;
    let dig_min = (0..ns)
        .map(|_| cur.number::<i32>(8, "digital minimum"))
        .collect::<Result<Vec<_>>>()?;
    let dig_max = (0..ns)
        .map(|_| cur.number::<i32>(8, "digital maximum"))
        .collect::<Result<Vec<_>>>()?;
    let prefilter = (0..ns).map(|_| cur.text(80)).collect::<Result<Vec<_>>>()?;
    let spr = (0..ns)
        .map(|_| cur.number::<usize>(8, "samples per record"))
        .collect::<Result<Vec<_>>>()?;
    for _ in 0..ns {
        cur.take(32)?;
    }

    let channels: Vec<ChannelMeta> = (0..ns)
        .map(|i| ChannelMeta {
            label: labels[i].clone(),
            transducer: transducers[i].clone(),
            physical_dimension: dimensions[i].clone(),
            physical_min: phys_min[i],
            physical_max: phys_max[i],
            digital_min: dig_min[i],
            digital_max: dig_max[i],
            prefiltering: prefilter[i].clone(),
            samples_per_record: spr[i],
        })
        .collect();
    for ch in &channels {
        ch.validate()?;
    }

    let record_len: usize = spr.iter().map(|n| n * 2).sum();
    let remaining = bytes.len() - cur.pos;
    let num_records = if declared_records >= 0 {
        declared_records as usize
    } else if declared_records == -1 && record_len > 0 && remaining.is_multiple_of(record_len) {
        remaining / record_len
    } else if declared_records == -1 && ns == 0 && remaining == 0 {
        0
    } else {
        return Err(Error::Field {
            field: "number of data records",
            offset: records_offset,
            value: declared_records.to_string(),
        });
    };

    let mut signals: Vec<Vec<f64>> = channels
        .iter()
        .map(|c| Vec::with_capacity(c.samples_per_record * num_records))
        .collect();
    for _ in 0..num_records {
        for (ch, sig) in channels.iter().zip(signals.iter_mut()) {
            let raw = cur.take(ch.samples_per_record * 2)?;
            sig.extend(
                raw.chunks_exact(2)
                    .map(|b| ch.to_physical(i32::from(i16::from_le_bytes([b[0], b[1]])))),
            );
        }
    }
    if cur.pos < bytes.len() {
        log::warn!(
            "ignoring {} trailing bytes after the last data record",
            bytes.len() - cur.pos
        );
    }

    Ok(Recording {
        patient_id,
        recording_id,
        start_datetime,
        record_duration_s,
        num_records,
        channels,
        signals,
    })
}

fn put_text(out: &mut Vec<u8>, s: &str, width: usize, field: &'static str) -> Result<()> {
    let bad = || Error::Field {
        field,
        offset: out.len(),
        value: s.to_string(),
    };
    if s.len() > width || !s.bytes().all(|b| (0x20..=0x7e).contains(&b)) {
        return Err(bad());
    }
    out.extend_from_slice(s.as_bytes());
    out.resize(out.len() + width - s.len(), b' ');
    Ok(())
}

/// Shortest text of at most `width` characters that parses back to exactly `v`.
fn format_exact(v: f64, width: usize) -> Option<String> {
    let candidates = [format!("{v}"), format!("{v:e}")];
    candidates
        .into_iter()
        .chain((0..width).rev().map(|p| format!("{v:.p$}")))
        .filter(|s| s.len() <= width)
        .find(|s| s.parse::<f64>().ok() == Some(v))
}

fn put_number(out: &mut Vec<u8>, v: f64, width: usize, field: &'static str) -> Result<()> {
    let s = format_exact(v, width).ok_or_else(|| Error::Field {
        field,
        offset: out.len(),
        value: format!("{v} (not representable in {width} characters)"),
    })?;
    put_text(out, &s, width, field)
}

/// Serializes a recording into EDF bytes.
///
/// Physical samples are quantized to the nearest digital step. Numeric header
/// values must be exactly representable in their 8-character fields.
pub fn write_edf(r: &Recording) -> Result<Vec<u8>> {
    r.validate()?;
    let ns = r.channels.len();
    let record_len: usize = r.channels.iter().map(|c| c.samples_per_record * 2).sum();
    let header_len = FIXED_HEADER_LEN + ns * SIGNAL_HEADER_LEN;
    let mut out = Vec::with_capacity(header_len + record_len * r.num_records);

    let dt = r.start_datetime;
    if !(1985..=2084).contains(&dt.year()) {
        return Err(Error::Field {
            field: "start date",
            offset: 168,
            value: dt.to_string(),
        });
    }
    put_text(&mut out, "0", 8, "version")?;
    put_text(&mut out, &r.patient_id, 80, "patient id")?;
    put_text(&mut out, &r.recording_id, 80, "recording id")?;
    let date = format!("{:02}.{:02}.{:02}", dt.day(), dt.month(), dt.year() % 100);
    let time = format!("{:02}.{:02}.{:02}", dt.hour(), dt.minute(), dt.second());
    put_text(&mut out, &date, 8, "start date")?;
    put_text(&mut out, &time, 8, "start time")?;
    put_text(&mut out, &header_len.to_string(), 8, "header byte count")?;
    put_text(&mut out, "", 44, "reserved")?;
    put_text(&mut out, &r.num_records.to_string(), 8, "number of data records")?;
    put_number(&mut out, r.record_duration_s, 8, "data record duration")?;
    put_text(&mut out, &ns.to_string(), 4, "number of signals")?;

    for c in &r.channels {
        put_text(&mut out, &c.label, 16, "label")?;
    }
    for c in &r.channels {
        put_text(&mut out, &c.transducer, 80, "transducer")?;
    }
    for c in &r.channels {
        put_text(&mut out, &c.physical_dimension, 8, "physical dimension")?;
    }
    for c in &r.channels {
        put_number(&mut out, c.physical_min, 8, "physical minimum")?;
    }
    for c in &r.channels {
        put_number(&mut out, c.physical_max, 8, "physical maximum")?;
    }
    for c in &r.channels {
        put_text(&mut out, &c.digital_min.to_string(), 8, "digital minimum")?;
    }
    for c in &r.channels {
        put_text(&mut out, &c.digital_max.to_string(), 8, "digital maximum")?;
    }
    for c in &r.channels {
        put_text(&mut out, &c.prefiltering, 80, "prefiltering")?;
    }
    for c in &r.channels {
        put_text(&mut out, &c.samples_per_record.to_string(), 8, "samples per record")?;
    }
    for _ in &r.channels {
        put_text(&mut out, "", 32, "reserved")?;
    }
    debug_assert_eq!(out.len(), header_len);

    for rec in 0..r.num_records {
        for (c, sig) in r.channels.iter().zip(&r.signals) {
            let lo = c.physical_min.min(c.physical_max);
            let hi = c.physical_min.max(c.physical_max);
            let slack = c.gain().abs() * 1e-9;
            let base = rec * c.samples_per_record;
            for (k, &p) in sig[base..base + c.samples_per_record].iter().enumerate() {
                if !(p >= lo - slack && p <= hi + slack) {
                    return Err(Error::Range {
                        channel: c.label.clone(),
                        index: base + k,
                        value: p,
                        min: lo,
                        max: hi,
                    });
                }
                out.extend_from_slice(&(c.to_digital(p) as i16).to_le_bytes());
            }
        }
    }
    Ok(out)
}

fn summary_patterns() -> &'static [Regex; 4] {
    static PATTERNS: OnceLock<[Regex; 4]> = OnceLock::new();
    PATTERNS.get_or_init(|| {
        [
            Regex::new(r"(?i)^File Name:\s*(\S+)").unwrap(),
            Regex::new(r"(?i)^Number of Seizures in File:\s*(\d+)").unwrap(),
            Regex::new(r"(?i)^Seizure(?:\s+\d+)?\s+Start Time:\s*([0-9]+(?:\.[0-9]*)?)\s*(?:seconds?|s)?\s*$").unwrap(),
            Regex::new(r"(?i)^Seizure(?:\s+\d+)?\s+End Time:\s*([0-9]+(?:\.[0-9]*)?)\s*(?:seconds?|s)?\s*$").unwrap(),
        ]
    })
}

#[derive(Default)]
struct FileBlock {
    name: String,
    declared: Option<usize>,
    intervals: Vec<SeizureInterval>,
    pending_start: Option<f64>,
}

impl FileBlock {
    fn finish(self, out: &mut IndexMap<String, Vec<SeizureInterval>>) -> Result<()> {
        if let Some(start) = self.pending_start {
            return Err(Error::Summary(format!(
                "`{}`: seizure starting at {start} s has no end time",
                self.name
            )));
        }
        if let Some(n) = self.declared {
            if n != self.intervals.len() {
                return Err(Error::Summary(format!(
                    "`{}` declares {n} seizures but lists {}",
                    self.name,
                    self.intervals.len()
                )));
            }
        }
        out.entry(self.name).or_default().extend(self.intervals);
        Ok(())
    }
}

/// Parses a CHB-MIT `*-summary.txt` document into seizure intervals per file,
/// in document order.
pub fn parse_seizure_summary(text: &str) -> Result<IndexMap<String, Vec<SeizureInterval>>> {
    let [file_re, count_re, start_re, end_re] = summary_patterns();
    let mut out = IndexMap::new();
    let mut block: Option<FileBlock> = None;

    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if let Some(c) = file_re.captures(line) {
            if let Some(b) = block.take() {
                b.finish(&mut out)?;
            }
            block = Some(FileBlock {
                name: c[1].to_string(),
                ..Default::default()
            });
            continue;
        }
        let Some(b) = block.as_mut() else { continue };
        let value = |c: &regex::Captures| -> Result<f64> {
            c[1].parse::<f64>()
                .map_err(|_| Error::Summary(format!("line {}: bad number {:?}", lineno + 1, &c[1])))
        };
        if let Some(c) = count_re.captures(line) {
            b.declared = Some(c[1].parse().map_err(|_| {
                Error::Summary(format!("line {}: bad seizure count", lineno + 1))
            })?);
        } else if let Some(c) = start_re.captures(line) {
            if b.pending_start.is_some() {
                return Err(Error::Summary(format!(
                    "line {}: `{}` has two start times in a row",
                    lineno + 1,
                    b.name
                )));
            }
            b.pending_start = Some(value(&c)?);
        } else if let Some(c) = end_re.captures(line) {
            let start = b.pending_start.take().ok_or_else(|| {
                Error::Summary(format!(
                    "line {}: end time without start in `{}`",
                    lineno + 1,
                    b.name
                ))
            })?;
            b.intervals
                .push(SeizureInterval::new(b.name.clone(), start, value(&c)?)?);
        }
    }
    if let Some(b) = block {
        b.finish(&mut out)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn start() -> NaiveDateTime {
        NaiveDate::from_ymd_opt(2010, 3, 14)
            .unwrap()
            .and_hms_opt(9, 26, 53)
            .unwrap()
    }

    fn channel(label: &str, spr: usize) -> ChannelMeta {
        ChannelMeta {
            label: label.into(),
            transducer: "AgAgCl electrode".into(),
            physical_dimension: "uV".into(),
            physical_min: -100.0,
            physical_max: 100.0,
            digital_min: -32768,
            digital_max: 32767,
            prefiltering: "HP:0.1Hz".into(),
            samples_per_record: spr,
        }
    }

    fn empty_recording() -> Recording {
        Recording {
            patient_id: "X".into(),
            recording_id: "Startdate X".into(),
            start_datetime: start(),
            record_duration_s: 1.0,
            num_records: 0,
            channels: vec![],
            signals: vec![],
        }
    }

    #[test]
    fn empty_recording_is_256_bytes() {
        let r = empty_recording();
        let bytes = write_edf(&r).unwrap();
        assert_eq!(bytes.len(), 256);
        let back = parse_edf(&bytes).unwrap();
        assert!(back.channels.is_empty());
        assert_eq!(back.num_records, 0);
        assert_eq!(back, r);
    }

    #[test]
    fn one_channel_two_records_layout() {
        let mut r = empty_recording();
        r.num_records = 2;
        r.channels = vec![channel("FP1-F7", 4)];
        r.signals = vec![vec![0.0, 1.0, -1.0, 50.0, -50.0, 99.0, -99.0, 0.5]];
        let bytes = write_edf(&r).unwrap();
        assert_eq!(bytes.len(), 528);
        let back = parse_edf(&bytes).unwrap();
        assert_eq!(back.channels, r.channels);
        let gain = r.channels[0].gain();
        for (a, b) in back.signals[0].iter().zip(&r.signals[0]) {
            assert!((a - b).abs() <= gain);
        }
    }

    #[test]
    fn calibration_of_digital_zero() {
        let ch = channel("C3", 1);
        let v = ch.to_physical(0);
        assert!((v - 0.0015259).abs() < 1e-7, "{v}");
        assert_eq!(ch.to_physical(-32768), -100.0);
        assert_eq!(ch.to_physical(32767), 100.0);
    }

    #[test]
    fn truncated_and_bad_fields() {
        let mut r = empty_recording();
        r.num_records = 1;
        r.channels = vec![channel("A", 2)];
        r.signals = vec![vec![0.0, 0.0]];
        let bytes = write_edf(&r).unwrap();
        match parse_edf(&bytes[..bytes.len() - 1]) {
            Err(Error::Truncated { offset, .. }) => assert_eq!(offset, bytes.len() - 1),
            other => panic!("{other:?}"),
        }
        match parse_edf(&bytes[..100]) {
            Err(Error::Truncated { .. }) => {}
            other => panic!("{other:?}"),
        }

        let mut bad = bytes.clone();
        bad[236..244].copy_from_slice(b"abc     ");
        match parse_edf(&bad) {
            Err(Error::Field { field, .. }) => assert_eq!(field, "number of data records"),
            other => panic!("{other:?}"),
        }

        // digital min field of signal 0 lives after label/transducer/dim/pmin/pmax.
        let off = 256 + 16 + 80 + 8 + 8 + 8;
        let mut bad = bytes.clone();
        bad[off..off + 8].copy_from_slice(b"40000   ");
        match parse_edf(&bad) {
            Err(Error::Calibration { channel, .. }) => assert_eq!(channel, "A"),
            other => panic!("{other:?}"),
        }

        let mut bad = bytes;
        bad[10] = 0xe9;
        assert!(matches!(parse_edf(&bad), Err(Error::NonAscii { offset: 10, .. })));
    }

    #[test]
    fn unknown_record_count_is_inferred() {
        let mut r = empty_recording();
        r.num_records = 3;
        r.channels = vec![channel("A", 2)];
        r.signals = vec![vec![0.0; 6]];
        let mut bytes = write_edf(&r).unwrap();
        bytes[236..244].copy_from_slice(b"-1      ");
        assert_eq!(parse_edf(&bytes).unwrap().num_records, 3);
        bytes.pop();
        assert!(parse_edf(&bytes).is_err());
    }

    #[test]
    fn write_rejects_out_of_range_sample() {
        let mut r = empty_recording();
        r.num_records = 1;
        r.channels = vec![channel("T7", 3)];
        r.signals = vec![vec![0.0, 100.5, 0.0]];
        match write_edf(&r) {
            Err(Error::Range { channel, index, .. }) => {
                assert_eq!(channel, "T7");
                assert_eq!(index, 1);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn numbers_must_fit_their_field() {
        assert_eq!(format_exact(-3276.8, 8).as_deref(), Some("-3276.8"));
        assert_eq!(format_exact(1.0, 8).as_deref(), Some("1"));
        assert!(format_exact(0.123456789, 8).is_none());
    }

    #[test]
    fn summary_unnumbered() {
        let text = "Data Sampling Rate: 256 Hz\n\
            Channel 1: FP1-F7\n\n\
            File Name: a.edf\n\
            File Start Time: 11:42:54\n\
            Number of Seizures in File: 1\n\
            Seizure Start Time: 10 seconds\n\
            Seizure End Time: 30 seconds\n\n\
            File Name: b.edf\n\
            Number of Seizures in File: 0\n";
        let m = parse_seizure_summary(text).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m["a.edf"], vec![SeizureInterval::new("a.edf", 10.0, 30.0).unwrap()]);
        assert!(m["b.edf"].is_empty());
        assert_eq!(m.get_index(0).unwrap().0, "a.edf");
    }

    #[test]
    fn summary_numbered() {
        let text = "File Name: chb06_01.edf\n\
            Number of Seizures in File: 2\n\
            Seizure 1 Start Time: 1724 seconds\n\
            Seizure 1 End Time: 1738 seconds\n\
            Seizure 2 Start Time:  7461 seconds\n\
            Seizure 2 End Time: 7476 seconds\n";
        let m = parse_seizure_summary(text).unwrap();
        let v = &m["chb06_01.edf"];
        assert_eq!(v.len(), 2);
        assert_eq!((v[0].start_s, v[0].end_s), (1724.0, 1738.0));
        assert_eq!((v[1].start_s, v[1].end_s), (7461.0, 7476.0));
    }

    #[test]
    fn summary_errors() {
        let mismatch = "File Name: c.edf\nNumber of Seizures in File: 2\n\
            Seizure Start Time: 1 seconds\nSeizure End Time: 5 seconds\n";
        match parse_seizure_summary(mismatch) {
            Err(Error::Summary(msg)) => assert!(msg.contains("c.edf")),
            other => panic!("{other:?}"),
        }
        let backwards = "File Name: d.edf\nNumber of Seizures in File: 1\n\
            Seizure Start Time: 9 seconds\nSeizure End Time: 5 seconds\n";
        assert!(matches!(
            parse_seizure_summary(backwards),
            Err(Error::Interval { .. })
        ));
    }
}
