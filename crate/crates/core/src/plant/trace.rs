//! Trace file: one CSV row per recorded tick followed by a `#summary` block of
//! `key=value` lines.

use std::io::{BufRead, Write};

use thiserror::Error;

use super::queue::Channel;
use crate::numfmt::sig6;

pub const TRACE_HEADER: &str =
    "t_ms,d_true_mm,d_meas_mm,v_est_mm_s,I_cmd_A,I_act_A,F_mag_N,F_contact_N,event";
pub const SUMMARY_MARKER: &str = "#summary";

#[derive(Debug, Error, PartialEq)]
pub enum TraceError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for TraceError {
    fn from(e: std::io::Error) -> Self {
        TraceError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t_ms: f64,
    pub d_true_mm: f64,
    pub d_meas_mm: f64,
    pub v_est_mm_s: f64,
    pub i_cmd_a: f64,
    pub i_act_a: f64,
    pub f_mag_n: f64,
    pub f_contact_n: f64,
    /// Events issued on this tick, `;`-separated, each
    /// `channel:onset_ms:late|ontime`. Empty if none.
    pub event: String,
}

/// One issued output event.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub channel: Channel,
    pub intended_onset_ms: f64,
    pub issue_ms: f64,
    pub fired_ms: f64,
    /// Fire time plus the channel's output latency.
    pub physical_onset_ms: f64,
    pub amplitude: f64,
    pub late: bool,
    /// How far past its issue time the event went out (ms).
    pub lateness_ms: f64,
}

impl EventRecord {
    pub fn status(&self) -> &'static str {
        if self.late {
            "late"
        } else {
            "ontime"
        }
    }

    /// Rendering used in the trace `event` column.
    pub fn column_text(&self) -> String {
        format!("{}:{}:{}", self.channel, sig6(self.intended_onset_ms), self.status())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Summary {
    pub duration_ms: f64,
    pub ticks: u64,
    pub sensor_samples: u64,
    /// Times at which the keystone height first crossed zero (ms).
    pub contacts_ms: Vec<f64>,
    pub events: Vec<EventRecord>,
    /// First issued event's intended onset minus the first contact time.
    pub onset_error_ms: Option<f64>,
    pub max_abs_f_mag_n: f64,
    /// Maximum |F_mag| before the first contact (whole run without contact).
    pub max_abs_f_mag_during_approach_n: f64,
    pub min_d_true_mm: f64,
    pub peak_f_contact_n: f64,
    pub command_saturations: u64,
    pub sensor_saturations: u64,
}

impl Summary {
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let mut kv: Vec<(String, String)> = Vec::new();
        let mut put = |k: &str, v: String| kv.push((k.to_string(), v));
        put("duration_ms", sig6(self.duration_ms));
        put("ticks", self.ticks.to_string());
        put("sensor_samples", self.sensor_samples.to_string());
        put("contact_count", self.contacts_ms.len().to_string());
        for (k, c) in self.contacts_ms.iter().enumerate() {
            put(&format!("contact_{}_ms", k + 1), sig6(*c));
        }
        put("event_count", self.events.len().to_string());
        for (k, e) in self.events.iter().enumerate() {
            let p = format!("event_{}_", k + 1);
            put(&format!("{p}channel"), e.channel.to_string());
            put(&format!("{p}intended_onset_ms"), sig6(e.intended_onset_ms));
            put(&format!("{p}issue_ms"), sig6(e.issue_ms));
            put(&format!("{p}fired_ms"), sig6(e.fired_ms));
            put(&format!("{p}physical_onset_ms"), sig6(e.physical_onset_ms));
            put(&format!("{p}amplitude"), sig6(e.amplitude));
            put(&format!("{p}late"), e.status().to_string());
            put(&format!("{p}lateness_ms"), sig6(e.lateness_ms));
        }
        if let Some(err) = self.onset_error_ms {
            put("onset_error_ms", sig6(err));
        }
        put("max_abs_F_mag", sig6(self.max_abs_f_mag_n));
        put(
            "max_abs_F_mag_during_approach",
            sig6(self.max_abs_f_mag_during_approach_n),
        );
        put("min_d_true_mm", sig6(self.min_d_true_mm));
        put("peak_F_contact", sig6(self.peak_f_contact_n));
        put("command_saturations", self.command_saturations.to_string());
        put("sensor_saturations", self.sensor_saturations.to_string());
        kv
    }

    fn from_pairs(pairs: &[(usize, String, String)]) -> Result<Self, TraceError> {
        let mut it = pairs.iter().peekable();
        let last_line = pairs.last().map_or(0, |p| p.0);
        let mut next = |key: &str| -> Result<(usize, String), TraceError> {
            match it.next() {
                Some((line, k, v)) if k == key => Ok((*line, v.clone())),
                Some((line, k, _)) => Err(TraceError::Parse {
                    line: *line,
                    message: format!("expected summary key {key:?}, found {k:?}"),
                }),
                None => Err(TraceError::Parse {
                    line: last_line + 1,
                    message: format!("missing summary key {key:?}"),
                }),
            }
        };
        fn num<T: std::str::FromStr>((line, v): (usize, String)) -> Result<T, TraceError> {
            v.parse().map_err(|_| TraceError::Parse {
                line,
                message: format!("bad value {v:?}"),
            })
        }

        let mut s = Summary {
            duration_ms: num(next("duration_ms")?)?,
            ticks: num(next("ticks")?)?,
            sensor_samples: num(next("sensor_samples")?)?,
            ..Default::default()
        };
        let contacts: usize = num(next("contact_count")?)?;
        for k in 1..=contacts {
            s.contacts_ms.push(num(next(&format!("contact_{k}_ms"))?)?);
        }
        let events: usize = num(next("event_count")?)?;
        for k in 1..=events {
            let p = format!("event_{k}_");
            let (line, channel) = next(&format!("{p}channel"))?;
            let channel = channel
                .parse()
                .map_err(|message| TraceError::Parse { line, message })?;
            let intended_onset_ms = num(next(&format!("{p}intended_onset_ms"))?)?;
            let issue_ms = num(next(&format!("{p}issue_ms"))?)?;
            let fired_ms = num(next(&format!("{p}fired_ms"))?)?;
            let physical_onset_ms = num(next(&format!("{p}physical_onset_ms"))?)?;
            let amplitude = num(next(&format!("{p}amplitude"))?)?;
            let (line, status) = next(&format!("{p}late"))?;
            let late = match status.as_str() {
                "late" => true,
                "ontime" => false,
                other => {
                    return Err(TraceError::Parse {
                        line,
                        message: format!("lateness must be late|ontime, got {other:?}"),
                    })
                }
            };
            let lateness_ms = num(next(&format!("{p}lateness_ms"))?)?;
            s.events.push(EventRecord {
                channel,
                intended_onset_ms,
                issue_ms,
                fired_ms,
                physical_onset_ms,
                amplitude,
                late,
                lateness_ms,
            });
        }
        // onset_error_ms is optional
        let (line, key) = match pairs.iter().find(|p| p.1 == "onset_error_ms") {
            Some(p) => (p.0, Some(p.2.clone())),
            None => (0, None),
        };
        if let Some(v) = key {
            next("onset_error_ms")?;
            s.onset_error_ms = Some(num((line, v))?);
        }
        s.max_abs_f_mag_n = num(next("max_abs_F_mag")?)?;
        s.max_abs_f_mag_during_approach_n = num(next("max_abs_F_mag_during_approach")?)?;
        s.min_d_true_mm = num(next("min_d_true_mm")?)?;
        s.peak_f_contact_n = num(next("peak_F_contact")?)?;
        s.command_saturations = num(next("command_saturations")?)?;
        s.sensor_saturations = num(next("sensor_saturations")?)?;
        if let Some((line, k, _)) = it.next() {
            return Err(TraceError::Parse {
                line: *line,
                message: format!("unexpected summary key {k:?}"),
            });
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
    pub summary: Summary,
}

impl Trace {
    pub fn write<W: Write>(&self, mut out: W) -> Result<(), TraceError> {
        writeln!(out, "{TRACE_HEADER}")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                sig6(r.t_ms),
                sig6(r.d_true_mm),
                sig6(r.d_meas_mm),
                sig6(r.v_est_mm_s),
                sig6(r.i_cmd_a),
                sig6(r.i_act_a),
                sig6(r.f_mag_n),
                sig6(r.f_contact_n),
                r.event
            )?;
        }
        self.write_summary(&mut out)
    }

    pub fn write_summary<W: Write>(&self, mut out: W) -> Result<(), TraceError> {
        writeln!(out, "{SUMMARY_MARKER}")?;
        for (k, v) in self.summary.to_pairs() {
            writeln!(out, "{k}={v}")?;
        }
        Ok(())
    }

    pub fn to_string_lossy(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("trace is utf-8")
    }

    pub fn read<R: BufRead>(input: R) -> Result<Self, TraceError> {
        let err = |line: usize, message: String| TraceError::Parse { line, message };
        let mut lines = input.lines().enumerate().map(|(k, l)| (k + 1, l));
        match lines.next() {
            Some((_, Ok(h))) if h.trim_end() == TRACE_HEADER => {}
            Some((_, Err(e))) => return Err(e.into()),
            _ => return Err(err(1, "missing trace header".into())),
        }
        let mut rows = Vec::new();
        let mut pairs = Vec::new();
        let mut in_summary = false;
        let mut last_t = f64::NEG_INFINITY;
        for (line, text) in lines {
            let text = text?;
            let text = text.trim_end();
            if in_summary {
                if text.is_empty() {
                    continue;
                }
                let (k, v) = text
                    .split_once('=')
                    .ok_or_else(|| err(line, format!("expected key=value, got {text:?}")))?;
                pairs.push((line, k.to_string(), v.to_string()));
                continue;
            }
            if text == SUMMARY_MARKER {
                in_summary = true;
                continue;
            }
            let cells: Vec<&str> = text.splitn(9, ',').collect();
            if cells.len() != 9 {
                return Err(err(line, format!("expected 9 columns, got {}", cells.len())));
            }
            let mut v = [0.0; 8];
            for (slot, cell) in v.iter_mut().zip(&cells) {
                *slot = cell
                    .parse()
                    .map_err(|_| err(line, format!("not a number: {cell:?}")))?;
            }
            if v[0] <= last_t {
                return Err(err(line, "timestamps must be strictly increasing".into()));
            }
            last_t = v[0];
            rows.push(TraceRow {
                t_ms: v[0],
                d_true_mm: v[1],
                d_meas_mm: v[2],
                v_est_mm_s: v[3],
                i_cmd_a: v[4],
                i_act_a: v[5],
                f_mag_n: v[6],
                f_contact_n: v[7],
                event: cells[8].to_string(),
            });
        }
        if !in_summary {
            return Err(err(rows.len() + 2, format!("missing {SUMMARY_MARKER} block")));
        }
        let summary = Summary::from_pairs(&pairs)?;
        Ok(Trace { rows, summary })
    }
}
