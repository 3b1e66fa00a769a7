use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::model::Timestamp;

/// Same-instant ordering: lower classes are handled first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    ServiceComplete { berth: usize, vessel: usize },
    CraneShiftChange { day: i64 },
    RtaRealized { vessel: usize },
    EtaUpdated { vessel: usize, eta: Timestamp },
    VesselArrival { vessel: usize },
    BerthingStart { berth: usize },
    VesselDeparture { vessel: usize },
}

impl EventKind {
    pub fn class(&self) -> u8 {
        match self {
            EventKind::ServiceComplete { .. } => 0,
            EventKind::CraneShiftChange { .. } => 1,
            EventKind::RtaRealized { .. } => 2,
            EventKind::EtaUpdated { .. } => 3,
            EventKind::VesselArrival { .. } => 4,
            EventKind::BerthingStart { .. } => 5,
            EventKind::VesselDeparture { .. } => 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    pub time: Timestamp,
    pub seq: u64,
    pub kind: EventKind,
}

/// Pending events ordered by (time, class, insertion sequence).
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Reverse<(Timestamp, u8, u64, EventKindKey)>>,
    next_seq: u64,
}

// BinaryHeap needs Ord on the payload; the sequence number already makes keys unique.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct EventKindKey(EventKind);

impl PartialOrd for EventKindKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for EventKindKey {
    fn cmp(&self, _: &Self) -> std::cmp::Ordering {
        std::cmp::Ordering::Equal
    }
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, time: Timestamp, kind: EventKind) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Reverse((time, kind.class(), seq, EventKindKey(kind))));
    }

    pub fn pop(&mut self) -> Option<Event> {
        self.heap.pop().map(|Reverse((time, _, seq, k))| Event { time, seq, kind: k.0 })
    }

    pub fn peek_time(&self) -> Option<Timestamp> {
        self.heap.peek().map(|Reverse((t, ..))| *t)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_timestamp;
    use chrono::Duration;
    use proptest::prelude::*;

    #[test]
    fn ties_break_by_class_then_sequence() {
        let t = parse_timestamp("2021-01-01T00:00:00Z").unwrap();
        let mut q = EventQueue::new();
        q.push(t, EventKind::VesselDeparture { vessel: 0 });
        q.push(t, EventKind::BerthingStart { berth: 1 });
        q.push(t, EventKind::BerthingStart { berth: 0 });
        q.push(t, EventKind::ServiceComplete { berth: 0, vessel: 3 });
        q.push(t - Duration::seconds(1), EventKind::VesselArrival { vessel: 9 });
        let order: Vec<_> = std::iter::from_fn(|| q.pop()).map(|e| e.kind).collect();
        assert_eq!(
            order,
            vec![
                EventKind::VesselArrival { vessel: 9 },
                EventKind::ServiceComplete { berth: 0, vessel: 3 },
                EventKind::BerthingStart { berth: 1 },
                EventKind::BerthingStart { berth: 0 },
                EventKind::VesselDeparture { vessel: 0 },
            ]
        );
    }

    proptest! {
        #[test]
        fn dequeues_in_non_decreasing_time(offsets in prop::collection::vec((0i64..1000, 0usize..7), 1..60)) {
            let t0 = parse_timestamp("2021-01-01T00:00:00Z").unwrap();
            let mut q = EventQueue::new();
            for (o, k) in offsets {
                let kind = match k {
                    0 => EventKind::ServiceComplete { berth: 0, vessel: 0 },
                    1 => EventKind::CraneShiftChange { day: 0 },
                    2 => EventKind::RtaRealized { vessel: 0 },
                    3 => EventKind::EtaUpdated { vessel: 0, eta: t0 },
                    4 => EventKind::VesselArrival { vessel: 0 },
                    5 => EventKind::BerthingStart { berth: 0 },
                    _ => EventKind::VesselDeparture { vessel: 0 },
                };
                q.push(t0 + Duration::seconds(o), kind);
            }
            let mut last: Option<(Timestamp, u8, u64)> = None;
            while let Some(e) = q.pop() {
                let key = (e.time, e.kind.class(), e.seq);
                if let Some(l) = last { prop_assert!(l < key); }
                last = Some(key);
            }
        }
    }
}
