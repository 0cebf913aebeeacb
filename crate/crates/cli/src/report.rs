//! Plain-text reports over traces and grids.

use haptic_core::landscape::Mpsr;
use haptic_core::numfmt::{exact, sig6};
use haptic_core::plant::EventRecord;
use haptic_core::Trace;

const LATENCY_COLUMNS: [&str; 7] = [
    "channel",
    "onset_ms",
    "contact_ms",
    "error_ms",
    "physical_ms",
    "lateness",
    "deficit_ms",
];

/// Contact closest in time to the event's intended onset.
fn nearest_contact(contacts: &[f64], event: &EventRecord) -> Option<f64> {
    contacts.iter().copied().min_by(|a, b| {
        (a - event.intended_onset_ms)
            .abs()
            .total_cmp(&(b - event.intended_onset_ms).abs())
    })
}

/// One row per fired event: predicted onset, the contact it was aimed at,
/// the prediction error and how late the channel went out.
pub fn latency_table(trace: &Trace) -> String {
    let contacts = &trace.summary.contacts_ms;
    let rows: Vec<[String; 7]> = trace
        .summary
        .events
        .iter()
        .map(|e| {
            let contact = nearest_contact(contacts, e);
            [
                e.channel.to_string(),
                sig6(e.intended_onset_ms),
                contact.map_or("-".into(), sig6),
                contact.map_or("-".into(), |c| sig6(e.intended_onset_ms - c)),
                sig6(e.physical_onset_ms),
                e.status().to_string(),
                if e.late {
                    sig6(e.lateness_ms)
                } else {
                    "-".into()
                },
            ]
        })
        .collect();

    let widths: Vec<usize> = (0..LATENCY_COLUMNS.len())
        .map(|c| {
            rows.iter()
                .map(|r| r[c].len())
                .chain([LATENCY_COLUMNS[c].len()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let line = |cells: &[&str]| -> String {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        padded.join("  ").trim_end().to_string() + "\n"
    };

    let mut out = line(&LATENCY_COLUMNS);
    for r in &rows {
        out += &line(&r.iter().map(String::as_str).collect::<Vec<_>>());
    }
    if rows.is_empty() {
        out += "(no events)\n";
    }
    out
}

pub fn mpsr_line(m: &Mpsr) -> String {
    format!("mpsr={} at d_mm={}", sig6(m.force_n), exact(m.binding_distance_mm))
}
