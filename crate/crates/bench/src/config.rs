//! Scenario files: sectioned `key = value` text with sections `[scenario]`,
//! `[link]`, `[ike]`, `[traffic]` and `[e2]`. Durations use humantime
//! syntax (`50us`, `100ms`).

use std::fmt::Write as _;
use std::path::Path;
use std::time::Duration;

use ini::Ini;
use pqe2::e2;
use pqe2::esp::StartAction;
use pqe2::ike::Proposal;
use pqe2::kem::KemParamSet;
use pqe2::netlab::{LabError, LinkSpec};
use pqe2::testbed::Security;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("[{section}] {key}: {msg}")]
    Invalid { section: String, key: String, msg: String },
    #[error("unknown {0}")]
    Unknown(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Traffic {
    pub pingpong_messages: usize,
    pub payload: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct E2Config {
    pub period: Duration,
    pub metrics: Vec<String>,
    /// RIC E2 port and xApp (E42) port.
    pub ports: (u16, u16),
    pub xapp_startup: Duration,
    /// Length of the subscription stream per iteration; zero skips it.
    pub stream_duration: Duration,
    /// When the stream's tunnel policy is installed, from run start.
    pub tunnel_at: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub security: Security,
    pub proposal: Proposal,
    pub esp_proposal: Proposal,
    pub start_action: StartAction,
    pub iterations: usize,
    pub seed: [u8; 32],
    pub link: LinkSpec,
    pub traffic: Traffic,
    pub e2: E2Config,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let ecdh = Proposal::with_kem(KemParamSet::EcdhX25519);
        Self {
            name: "scenario".into(),
            security: Security::Ipsec,
            proposal: ecdh,
            esp_proposal: ecdh,
            start_action: StartAction::Trap,
            iterations: 100,
            seed: [0; 32],
            link: LinkSpec::default(),
            traffic: Traffic { pingpong_messages: 100, payload: 64 },
            e2: E2Config {
                period: e2::DEFAULT_PERIOD,
                metrics: e2::DEFAULT_METRICS.iter().map(|s| s.to_string()).collect(),
                ports: (e2::RIC_PORT, e2::XAPP_PORT),
                xapp_startup: Duration::ZERO,
                stream_duration: Duration::ZERO,
                tunnel_at: Duration::from_secs(1),
            },
        }
    }
}

/// Accepts up to 64 hex digits; shorter seeds are right-aligned.
pub fn parse_seed(text: &str) -> Result<[u8; 32], String> {
    let t = text.trim().trim_start_matches("0x");
    if t.is_empty() || t.len() > 64 {
        return Err(format!("seed must be 1 to 64 hex digits, got {} characters", t.len()));
    }
    let padded = format!("{t:0>64}");
    let bytes = hex::decode(&padded).map_err(|e| e.to_string())?;
    Ok(bytes.try_into().expect("64 hex digits"))
}

const KEYS: [(&str, &[&str]); 5] = [
    ("scenario", &["name", "security", "iterations", "seed"]),
    ("link", &["latency", "jitter", "mtu", "loss_rate"]),
    ("ike", &["proposal", "esp_proposal", "start_action"]),
    ("traffic", &["pingpong_messages", "payload"]),
    ("e2", &["period", "metrics", "ports", "xapp_startup", "stream_duration", "tunnel_at"]),
];

pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let ini = Ini::load_from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    for (section, props) in ini.iter() {
        let Some(section) = section else {
            if let Some((k, _)) = props.iter().next() {
                return Err(ConfigError::Unknown(format!("key `{k}` outside any section")));
            }
            continue;
        };
        let Some((_, keys)) = KEYS.iter().find(|(s, _)| *s == section) else {
            return Err(ConfigError::Unknown(format!("section [{section}]")));
        };
        for (k, _) in props.iter() {
            if !keys.contains(&k) {
                return Err(ConfigError::Unknown(format!("key `{k}` in [{section}]")));
            }
        }
    }
    let mut c = ScenarioConfig::default();
    let get = |s: &str, k: &str| ini.section(Some(s)).and_then(|p| p.get(k)).map(str::trim);
    fn field<T>(s: &str, k: &str, v: Option<&str>, f: impl FnOnce(&str) -> Result<T, String>) -> Result<Option<T>, ConfigError> {
        v.map(|v| f(v).map_err(|msg| ConfigError::Invalid { section: s.into(), key: k.into(), msg })).transpose()
    }
    let num = |v: &str| v.parse::<usize>().map_err(|e| e.to_string());
    let dur = |v: &str| humantime::parse_duration(v).map_err(|e| e.to_string());

    if let Some(v) = get("scenario", "name") {
        if v.is_empty() || v.contains([',', '/', '\\']) {
            return Err(ConfigError::Invalid { section: "scenario".into(), key: "name".into(), msg: "must be non-empty without , / or \\".into() });
        }
        c.name = v.to_string();
    }
    if let Some(v) = field("scenario", "security", get("scenario", "security"), |v| v.parse())? {
        c.security = v;
    }
    if let Some(v) = field("scenario", "iterations", get("scenario", "iterations"), num)? {
        if v == 0 {
            return Err(ConfigError::Invalid { section: "scenario".into(), key: "iterations".into(), msg: "must be at least 1".into() });
        }
        c.iterations = v;
    }
    if let Some(v) = field("scenario", "seed", get("scenario", "seed"), parse_seed)? {
        c.seed = v;
    }
    if let Some(v) = field("link", "latency", get("link", "latency"), dur)? {
        c.link.latency = v;
    }
    if let Some(v) = field("link", "jitter", get("link", "jitter"), dur)? {
        c.link.jitter = v;
    }
    if let Some(v) = field("link", "mtu", get("link", "mtu"), num)? {
        c.link.mtu = v;
    }
    if let Some(v) = field("link", "loss_rate", get("link", "loss_rate"), |v| v.parse::<f64>().map_err(|e| e.to_string()))? {
        c.link.loss_rate = v;
    }
    c.link.validate().map_err(|e| {
        let msg = match e {
            LabError::InvalidSpec(m) => m,
            other => other.to_string(),
        };
        let key = KEYS[1].1.iter().find(|k| msg.starts_with(**k)).unwrap_or(&"link");
        ConfigError::Invalid { section: "link".into(), key: key.to_string(), msg }
    })?;
    let proposal = |v: &str| v.parse::<Proposal>().map_err(|e| e.to_string());
    if let Some(v) = field("ike", "proposal", get("ike", "proposal"), proposal)? {
        c.proposal = v;
    }
    if let Some(v) = field("ike", "esp_proposal", get("ike", "esp_proposal"), proposal)? {
        c.esp_proposal = v;
    }
    if let Some(v) = field("ike", "start_action", get("ike", "start_action"), |v| v.parse())? {
        c.start_action = v;
    }
    if let Some(v) = field("traffic", "pingpong_messages", get("traffic", "pingpong_messages"), num)? {
        c.traffic.pingpong_messages = v;
    }
    if let Some(v) = field("traffic", "payload", get("traffic", "payload"), num)? {
        c.traffic.payload = v;
    }
    if let Some(v) = field("e2", "period", get("e2", "period"), dur)? {
        if v.is_zero() {
            return Err(ConfigError::Invalid { section: "e2".into(), key: "period".into(), msg: "must be positive".into() });
        }
        c.e2.period = v;
    }
    if let Some(v) = field("e2", "metrics", get("e2", "metrics"), |v| {
        let m: Vec<String> = v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
        if m.is_empty() {
            Err("empty metric list".into())
        } else {
            Ok(m)
        }
    })? {
        c.e2.metrics = v;
    }
    if let Some(v) = field("e2", "ports", get("e2", "ports"), |v| {
        let p: Vec<u16> = v.split(',').map(|s| s.trim().parse::<u16>()).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
        match p[..] {
            [a, b] if a != b => Ok((a, b)),
            _ => Err("expected two distinct ports `ric, xapp`".into()),
        }
    })? {
        c.e2.ports = v;
    }
    if let Some(v) = field("e2", "xapp_startup", get("e2", "xapp_startup"), dur)? {
        c.e2.xapp_startup = v;
    }
    if let Some(v) = field("e2", "stream_duration", get("e2", "stream_duration"), dur)? {
        c.e2.stream_duration = v;
    }
    if let Some(v) = field("e2", "tunnel_at", get("e2", "tunnel_at"), dur)? {
        c.e2.tunnel_at = v;
    }
    Ok(c)
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Io { path: path.display().to_string(), msg: e.to_string() })?;
    parse_config(&text)
}

impl ScenarioConfig {
    /// Canonical text form; parsing it gives back an equal config.
    pub fn to_ini(&self) -> String {
        let d = |d: Duration| humantime::format_duration(d).to_string();
        let mut s = String::new();
        let _ = writeln!(s, "[scenario]\nname = {}\nsecurity = {}\niterations = {}\nseed = {}", self.name, self.security, self.iterations, hex::encode(self.seed));
        let _ = writeln!(s, "\n[link]\nlatency = {}\njitter = {}\nmtu = {}\nloss_rate = {}", d(self.link.latency), d(self.link.jitter), self.link.mtu, self.link.loss_rate);
        let _ = writeln!(s, "\n[ike]\nproposal = {}\nesp_proposal = {}\nstart_action = {}", self.proposal, self.esp_proposal, self.start_action);
        let _ = writeln!(s, "\n[traffic]\npingpong_messages = {}\npayload = {}", self.traffic.pingpong_messages, self.traffic.payload);
        let _ = writeln!(
            s,
            "\n[e2]\nperiod = {}\nmetrics = {}\nports = {}, {}\nxapp_startup = {}\nstream_duration = {}\ntunnel_at = {}",
            d(self.e2.period),
            self.e2.metrics.join(", "),
            self.e2.ports.0,
            self.e2.ports.1,
            d(self.e2.xapp_startup),
            d(self.e2.stream_duration),
            d(self.e2.tunnel_at)
        );
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "
[scenario]
name = mlkem768
security = ipsec
iterations = 7
seed = 2a

[link]
latency = 62us 500ns
jitter = 5us
mtu = 1500

[ike]
proposal = aes256gcm16-prfsha256-mlkem768
esp_proposal = aes256gcm16-prfsha256-mlkem768
start_action = start

[traffic]
pingpong_messages = 10
payload = 14

[e2]
period = 50ms
metrics = DRB.UEThpDl
ports = 36421, 36422
";

    #[test]
    fn parses_every_section() {
        let c = parse_config(SAMPLE).unwrap();
        assert_eq!(c.name, "mlkem768");
        assert_eq!(c.iterations, 7);
        assert_eq!(c.seed[31], 0x2a);
        assert_eq!(c.link.latency, Duration::from_nanos(62_500));
        assert_eq!(c.link.mtu, 1500);
        assert_eq!(c.proposal.kem, KemParamSet::MlKem768);
        assert_eq!(c.start_action, StartAction::Start);
        assert_eq!(c.traffic.payload, 14);
        assert_eq!(c.e2.period, Duration::from_millis(50));
        assert_eq!(c.e2.metrics, vec!["DRB.UEThpDl".to_string()]);
    }

    #[test]
    fn canonical_form_roundtrips() {
        let c = parse_config(SAMPLE).unwrap();
        assert_eq!(parse_config(&c.to_ini()).unwrap(), c);
        let d = ScenarioConfig::default();
        assert_eq!(parse_config(&d.to_ini()).unwrap(), d);
    }

    #[test]
    fn rejects_bad_input() {
        for bad in [
            "[scenario]\niterations = 0\n",
            "[scenario]\nbogus = 1\n",
            "[nope]\n",
            "[link]\njitter = 1ms\nlatency = 10us\n",
            "[link]\nmtu = 100\n",
            "[ike]\nproposal = aes128-sha1-modp2048\n",
            "[e2]\nports = 1\n",
            "[e2]\nmetrics = ,\n",
            "[scenario]\nseed = xyz\n",
            "[scenario]\nsecurity = maybe\n",
        ] {
            assert!(parse_config(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn seeds() {
        assert_eq!(parse_seed("01").unwrap()[31], 1);
        assert_eq!(parse_seed(&"ff".repeat(32)).unwrap(), [0xff; 32]);
        assert!(parse_seed(&"0".repeat(65)).is_err());
        assert!(parse_seed("abc").unwrap()[30] == 0x0a);
    }
}
