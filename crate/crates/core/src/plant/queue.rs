//! Sample-accurate queue of prescheduled output events.

use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Channel {
    Audio,
    Tactile,
}

impl Channel {
    pub fn as_str(self) -> &'static str {
        match self {
            Channel::Audio => "audio",
            Channel::Tactile => "tactile",
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Channel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "audio" => Ok(Channel::Audio),
            "tactile" => Ok(Channel::Tactile),
            other => Err(format!("unknown channel {other:?}")),
        }
    }
}

/// An output command tagged with the wall time it must be issued and the
/// wall time its physical effect is meant to occur.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduledEvent {
    pub channel: Channel,
    pub intended_onset: f64,
    /// `intended_onset` minus the channel's output latency.
    pub issue_time: f64,
    /// Trigger amplitude in `[0, 1]`.
    pub amplitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EventId(u64);

/// An event handed back by [`EventQueue::due_events`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DueEvent {
    pub id: EventId,
    pub event: ScheduledEvent,
    /// Its issue time had already passed when it was scheduled.
    pub late: bool,
}

#[derive(Debug, Clone)]
struct Entry {
    id: EventId,
    event: ScheduledEvent,
    late: bool,
}

/// Events ordered by issue time; ties keep insertion order. Each event is
/// returned exactly once.
#[derive(Debug, Clone, Default)]
pub struct EventQueue {
    entries: Vec<Entry>,
    next_id: u64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Queues `event` at time `now`. An issue time already in the past is
    /// kept and flagged late; it comes out on the next query.
    pub fn schedule(&mut self, event: ScheduledEvent, now: f64) -> EventId {
        let id = EventId(self.next_id);
        self.next_id += 1;
        let late = event.issue_time < now;
        let at = self
            .entries
            .partition_point(|e| e.event.issue_time <= event.issue_time);
        self.entries.insert(at, Entry { id, event, late });
        id
    }

    /// Removes a pending event; false if it already fired or never existed.
    pub fn cancel(&mut self, id: EventId) -> bool {
        match self.entries.iter().position(|e| e.id == id) {
            Some(k) => {
                self.entries.remove(k);
                true
            }
            None => false,
        }
    }

    /// Removes and returns every event with `issue_time <= t`.
    pub fn due_events(&mut self, t: f64) -> Vec<DueEvent> {
        let n = self.entries.partition_point(|e| e.event.issue_time <= t);
        self.entries
            .drain(..n)
            .map(|e| DueEvent {
                id: e.id,
                event: e.event,
                late: e.late,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(issue: f64) -> ScheduledEvent {
        ScheduledEvent {
            channel: Channel::Audio,
            intended_onset: issue + 0.005,
            issue_time: issue,
            amplitude: 1.0,
        }
    }

    #[test]
    fn not_yet_due() {
        let mut q = EventQueue::new();
        q.schedule(ev(0.011), 0.010);
        assert!(q.due_events(0.010).is_empty());
        assert_eq!(q.len(), 1);
    }

    #[test]
    fn boundary_is_inclusive_and_on_time() {
        let mut q = EventQueue::new();
        let t = 0.010;
        let id = q.schedule(ev(t + 0.001), t);
        let due = q.due_events(t + 0.001);
        assert_eq!(due.len(), 1);
        assert_eq!(due[0].id, id);
        assert!(!due[0].late);
        assert!(q.due_events(1.0).is_empty());
    }

    #[test]
    fn past_issue_time_fires_late() {
        let mut q = EventQueue::new();
        q.schedule(ev(0.005), 0.010);
        let due = q.due_events(0.010 + 1.0 / 96000.0);
        assert_eq!(due.len(), 1);
        assert!(due[0].late);
    }

    #[test]
    fn ordering_and_ties() {
        let mut q = EventQueue::new();
        let a = q.schedule(ev(0.003), 0.0);
        let b = q.schedule(ev(0.001), 0.0);
        let c = q.schedule(ev(0.003), 0.0);
        let d = q.schedule(ev(0.002), 0.0);
        let ids: Vec<_> = q.due_events(1.0).iter().map(|e| e.id).collect();
        assert_eq!(ids, vec![b, d, a, c]);
    }

    #[test]
    fn cancel_removes_once() {
        let mut q = EventQueue::new();
        let a = q.schedule(ev(0.003), 0.0);
        assert!(q.cancel(a));
        assert!(!q.cancel(a));
        assert!(q.due_events(1.0).is_empty());
    }

    #[test]
    fn channel_names_round_trip() {
        for c in [Channel::Audio, Channel::Tactile] {
            assert_eq!(c.to_string().parse::<Channel>().unwrap(), c);
        }
        assert!("video".parse::<Channel>().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn each_event_returned_once_in_order(
                issues in proptest::collection::vec(0u32..50, 1..40),
                polls in proptest::collection::vec(0u32..60, 1..10),
            ) {
                let mut q = EventQueue::new();
                let ids: Vec<_> = issues
                    .iter()
                    .map(|&k| q.schedule(ev(k as f64 * 1e-3), 0.0))
                    .collect();
                let mut polls = polls;
                polls.sort_unstable();
                polls.push(60);
                let mut seen = Vec::new();
                for p in polls {
                    let t = p as f64 * 1e-3;
                    for due in q.due_events(t) {
                        prop_assert!(due.event.issue_time <= t);
                        seen.push(due.id);
                    }
                }
                // stable sort by issue time is the expected order
                let mut expected: Vec<_> = ids.iter().zip(&issues).collect();
                expected.sort_by_key(|(_, &k)| k);
                let expected: Vec<_> = expected.into_iter().map(|(id, _)| *id).collect();
                prop_assert_eq!(seen, expected);
                prop_assert!(q.is_empty());
            }
        }
    }
}
