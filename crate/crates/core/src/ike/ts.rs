//! Traffic selectors as lists of IPv4 prefixes.

use std::fmt;
use std::net::Ipv4Addr;

use ipnet::Ipv4Net;

use super::message::{Reader, WireError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TsError {
    #[error("invalid prefix `{0}`")]
    BadPrefix(String),
    #[error("traffic selector list is empty")]
    Empty,
}

/// Prefixes keep the host bits they were written with (`10.0.10.1/24`), but
/// matching only looks at the network part.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrafficSelectors {
    pub local: Vec<Ipv4Net>,
    pub remote: Vec<Ipv4Net>,
}

pub fn parse_prefix_list(text: &str) -> Result<Vec<Ipv4Net>, TsError> {
    let list = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<Ipv4Net>()
                .or_else(|_| s.parse::<Ipv4Addr>().map(Ipv4Net::from))
                .map_err(|_| TsError::BadPrefix(s.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if list.is_empty() {
        return Err(TsError::Empty);
    }
    Ok(list)
}

fn covers(list: &[Ipv4Net], addr: Ipv4Addr) -> bool {
    list.iter().any(|n| n.trunc().contains(&addr))
}

impl TrafficSelectors {
    pub fn new(local: Vec<Ipv4Net>, remote: Vec<Ipv4Net>) -> Result<Self, TsError> {
        if local.is_empty() || remote.is_empty() {
            return Err(TsError::Empty);
        }
        Ok(Self { local, remote })
    }

    pub fn parse(local: &str, remote: &str) -> Result<Self, TsError> {
        Self::new(parse_prefix_list(local)?, parse_prefix_list(remote)?)
    }

    /// Outbound match: `src` in local and `dst` in remote.
    pub fn matches(&self, src: Ipv4Addr, dst: Ipv4Addr) -> bool {
        covers(&self.local, src) && covers(&self.remote, dst)
    }

    /// Inbound match for packets arriving from the peer.
    pub fn matches_inbound(&self, src: Ipv4Addr, dst: Ipv4Addr) -> bool {
        covers(&self.remote, src) && covers(&self.local, dst)
    }

    pub fn swapped(&self) -> TrafficSelectors {
        TrafficSelectors { local: self.remote.clone(), remote: self.local.clone() }
    }
}

impl fmt::Display for TrafficSelectors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |l: &[Ipv4Net]| l.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(", ");
        write!(f, "{} === {}", join(&self.local), join(&self.remote))
    }
}

/// TS payload body: `[u8 count]` then `count x ([4-byte addr][u8 prefix_len])`.
pub fn encode_ts(list: &[Ipv4Net]) -> Vec<u8> {
    let mut out = vec![list.len() as u8];
    for n in list {
        out.extend_from_slice(&n.addr().octets());
        out.push(n.prefix_len());
    }
    out
}

pub fn decode_ts(buf: &[u8]) -> Result<Vec<Ipv4Net>, WireError> {
    let mut r = Reader::new(buf);
    let n = r.u8()?;
    let mut out = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let a: [u8; 4] = r.take(4)?.try_into().unwrap();
        let p = r.u8()?;
        out.push(Ipv4Net::new(Ipv4Addr::from(a), p).map_err(|_| WireError::MalformedPayload("TS"))?);
    }
    r.finish()?;
    if out.is_empty() {
        return Err(WireError::MalformedPayload("TS"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ran_side() -> TrafficSelectors {
        TrafficSelectors::parse("10.0.10.1/24, 172.16.1.0/27", "10.0.10.2/24, 172.16.2.32/27").unwrap()
    }

    #[test]
    fn swanctl_remote_prefix_misses_ric_address() {
        let ts = TrafficSelectors::parse("10.0.10.1/24, 172.16.1.0/27", "10.0.10.2/24, 172.16.2.0/27").unwrap();
        let ip = |s: &str| s.parse::<Ipv4Addr>().unwrap();
        assert!(!ts.matches(ip("172.16.1.10"), ip("172.16.2.34")));
    }

    #[test]
    fn selector_semantics() {
        let ts = ran_side();
        let ip = |s: &str| s.parse::<Ipv4Addr>().unwrap();
        assert!(ts.matches(ip("172.16.1.10"), ip("172.16.2.34")));
        assert!(ts.matches(ip("10.0.10.77"), ip("10.0.10.2")));
        assert!(!ts.matches(ip("172.16.1.40"), ip("172.16.2.34")));
        assert!(!ts.matches(ip("172.16.1.10"), ip("192.168.0.1")));
        assert!(ts.matches_inbound(ip("172.16.2.34"), ip("172.16.1.10")));
        assert!(ts.swapped().matches(ip("172.16.2.34"), ip("172.16.1.10")));
    }

    #[test]
    fn parse_errors() {
        assert_eq!(parse_prefix_list(""), Err(TsError::Empty));
        assert!(matches!(parse_prefix_list("10.0.0.0/33"), Err(TsError::BadPrefix(_))));
        assert_eq!(parse_prefix_list("10.1.2.3").unwrap()[0].prefix_len(), 32);
    }

    #[test]
    fn payload_roundtrip() {
        let ts = ran_side();
        assert_eq!(decode_ts(&encode_ts(&ts.local)).unwrap(), ts.local);
        assert!(decode_ts(&[0]).is_err());
        assert!(decode_ts(&[1, 10, 0, 0, 0, 40]).is_err());
    }
}
