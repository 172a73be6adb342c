use std::io::Write;

use serde::Serialize;

use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    Start,
    ClockRead,
    Send,
    Recv,
    CollectiveEnter,
    CollectiveExit,
    WaitDone,
    Finish,
}

/// One trace row. `local_time` is the rank's reading for `ClockRead` and
/// `WaitDone` events and its noiseless clock value otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceEvent {
    pub rank: usize,
    pub event_kind: TraceKind,
    pub true_time: f64,
    pub local_time: f64,
}

pub fn write_trace_csv<W: Write>(events: &[TraceEvent], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for e in events {
        w.serialize(e)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_columns() {
        let ev = [TraceEvent { rank: 1, event_kind: TraceKind::ClockRead, true_time: 0.5, local_time: 1.5 }];
        let mut buf = Vec::new();
        write_trace_csv(&ev, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s, "rank,event_kind,true_time,local_time\n1,clock_read,0.5,1.5\n");
    }
}
