//! Timestamped packet log, exported as CSV.

use std::fmt;
use std::io;
use std::str::FromStr;

pub const CSV_HEADER: [&str; 7] = ["ts_ns", "endpoint", "direction", "proto", "detail", "size", "corr_id"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Send,
    Recv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Proto {
    Plain,
    Ike,
    Esp,
    E2,
}

macro_rules! token_enum {
    ($t:ty, $($v:path => $s:literal),+) => {
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($v => $s),+ })
            }
        }
        impl FromStr for $t {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                match s {
                    $($s => Ok($v),)+
                    _ => Err(format!("unknown {} `{s}`", stringify!($t))),
                }
            }
        }
    };
}

token_enum!(Direction, Direction::Send => "SEND", Direction::Recv => "RECV");
token_enum!(Proto, Proto::Plain => "PLAIN", Proto::Ike => "IKE", Proto::Esp => "ESP", Proto::E2 => "E2");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaptureEvent {
    pub ts_ns: u64,
    pub endpoint: String,
    pub direction: Direction,
    pub proto: Proto,
    /// Exchange label (`SA_INIT_REQ[1/2]`), E2 message kind, or ESP `spi/seq`.
    pub detail: String,
    /// Datagram payload bytes, excluding IP/UDP headers.
    pub size: usize,
    pub corr_id: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Capture {
    events: Vec<CaptureEvent>,
}

impl Capture {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, e: CaptureEvent) {
        self.events.push(e);
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn clear(&mut self) {
        self.events.clear();
    }

    /// Events sorted by timestamp; ties keep logging order.
    pub fn sorted(&self) -> Vec<CaptureEvent> {
        let mut v = self.events.clone();
        v.sort_by_key(|e| e.ts_ns);
        v
    }

    pub fn write_csv<W: io::Write>(events: &[CaptureEvent], w: W) -> Result<(), csv::Error> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(CSV_HEADER)?;
        for e in events {
            wr.write_record([
                e.ts_ns.to_string(),
                e.endpoint.clone(),
                e.direction.to_string(),
                e.proto.to_string(),
                e.detail.clone(),
                e.size.to_string(),
                e.corr_id.to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: io::Read>(r: R) -> Result<Vec<CaptureEvent>, String> {
        let mut rd = csv::Reader::from_reader(r);
        let header = rd.headers().map_err(|e| e.to_string())?;
        if header.iter().ne(CSV_HEADER) {
            return Err(format!("unexpected header {header:?}"));
        }
        let mut out = Vec::new();
        for rec in rd.records() {
            let rec = rec.map_err(|e| e.to_string())?;
            let f = |i: usize| rec.get(i).unwrap_or_default();
            let num = |i: usize| f(i).parse::<u64>().map_err(|e| format!("{}: {e}", CSV_HEADER[i]));
            out.push(CaptureEvent {
                ts_ns: num(0)?,
                endpoint: f(1).to_string(),
                direction: f(2).parse()?,
                proto: f(3).parse()?,
                detail: f(4).to_string(),
                size: num(5)? as usize,
                corr_id: num(6)?,
            });
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_roundtrip() {
        let ev = vec![
            CaptureEvent {
                ts_ns: 5,
                endpoint: "ran".into(),
                direction: Direction::Send,
                proto: Proto::Ike,
                detail: "SA_INIT_REQ[1/2]".into(),
                size: 1357,
                corr_id: 1,
            },
            CaptureEvent {
                ts_ns: 70_000,
                endpoint: "ric".into(),
                direction: Direction::Recv,
                proto: Proto::E2,
                detail: "SUB_REQ, with comma".into(),
                size: 40,
                corr_id: 2,
            },
        ];
        let mut buf = Vec::new();
        Capture::write_csv(&ev, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("ts_ns,endpoint,direction,proto,detail,size,corr_id\n"));
        assert_eq!(Capture::read_csv(&buf[..]).unwrap(), ev);
    }

    #[test]
    fn empty_capture_has_header_only() {
        let mut buf = Vec::new();
        Capture::write_csv(&Capture::new().sorted(), &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "ts_ns,endpoint,direction,proto,detail,size,corr_id\n");
    }
}
