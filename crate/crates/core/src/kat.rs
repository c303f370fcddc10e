//! Known-answer test ingestion and suite runners.
//!
//! Vector files use the NIST `.rsp` layout: `#` comments, `[Section]`
//! headers and blank-line separated `name = value` records. Values are hex
//! except for the `count` and `len` fields.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::crypto::{aead, AeadKey, PrfAlg};
use crate::kem::mlkem::{self, MlKemParams};

pub const MLKEM_KEYGEN: &str = include_str!("../kat/mlkem_keygen.rsp");
pub const MLKEM_ENCAP: &str = include_str!("../kat/mlkem_encap.rsp");
pub const MLKEM_DECAP: &str = include_str!("../kat/mlkem_decap.rsp");
pub const AES256GCM: &str = include_str!("../kat/aes256gcm.rsp");
pub const HMAC_SHA256: &str = include_str!("../kat/hmac_sha256.rsp");
pub const PRFPLUS_SHA256: &str = include_str!("../kat/prfplus_sha256.rsp");

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KatError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{file} record {count}: field `{field}` {msg}")]
    Field { file: &'static str, count: String, field: String, msg: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KatRecord {
    pub section: String,
    pub line: usize,
    pub fields: BTreeMap<String, String>,
}

impl KatRecord {
    pub fn count(&self) -> &str {
        self.fields.get("count").map(String::as_str).unwrap_or("?")
    }

    fn raw(&self, file: &'static str, name: &str) -> Result<&str, KatError> {
        self.fields.get(name).map(String::as_str).ok_or_else(|| KatError::Field {
            file,
            count: self.count().into(),
            field: name.into(),
            msg: "missing".into(),
        })
    }

    pub fn hex(&self, file: &'static str, name: &str) -> Result<Vec<u8>, KatError> {
        hex::decode(self.raw(file, name)?).map_err(|e| KatError::Field {
            file,
            count: self.count().into(),
            field: name.into(),
            msg: e.to_string(),
        })
    }

    fn array32(&self, file: &'static str, name: &str) -> Result<[u8; 32], KatError> {
        let v = self.hex(file, name)?;
        v.try_into().map_err(|_| KatError::Field {
            file,
            count: self.count().into(),
            field: name.into(),
            msg: "expected 32 bytes".into(),
        })
    }

    fn number(&self, file: &'static str, name: &str) -> Result<usize, KatError> {
        self.raw(file, name)?.parse().map_err(|_| KatError::Field {
            file,
            count: self.count().into(),
            field: name.into(),
            msg: "not a decimal integer".into(),
        })
    }
}

pub fn parse_records(text: &str) -> Result<Vec<KatRecord>, KatError> {
    let mut out = Vec::new();
    let mut section = String::new();
    let mut current: Option<KatRecord> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = idx + 1;
        if line.starts_with('#') {
            continue;
        }
        if line.is_empty() {
            out.extend(current.take());
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            out.extend(current.take());
            section = name.to_string();
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| KatError::Parse {
            line: lineno,
            msg: format!("expected `name = value`, got `{line}`"),
        })?;
        let rec = current.get_or_insert_with(|| KatRecord {
            section: section.clone(),
            line: lineno,
            fields: BTreeMap::new(),
        });
        if rec.fields.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
            return Err(KatError::Parse { line: lineno, msg: format!("duplicate field `{}`", k.trim()) });
        }
    }
    out.extend(current);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    MlKem,
    Aead,
    Prf,
}

impl Suite {
    pub const ALL: [Suite; 3] = [Suite::MlKem, Suite::Aead, Suite::Prf];

    pub fn name(self) -> &'static str {
        match self {
            Suite::MlKem => "mlkem",
            Suite::Aead => "aead",
            Suite::Prf => "prf",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown suite `{s}` (expected mlkem, aead or prf)"))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SuiteOutcome {
    pub passed: usize,
    /// `"<group>/<count>"` identifiers of mismatching vectors.
    pub failed: Vec<String>,
}

impl SuiteOutcome {
    pub fn ok(&self) -> bool {
        self.failed.is_empty() && self.passed > 0
    }

    fn record(&mut self, ok: bool, group: &str, rec: &KatRecord) {
        if ok {
            self.passed += 1;
        } else {
            self.failed.push(format!("{group}/{}", rec.count()));
        }
    }
}

fn mlkem_section(section: &str) -> Option<MlKemParams> {
    match section {
        "ML-KEM-512" => Some(mlkem::ML_KEM_512),
        "ML-KEM-768" => Some(mlkem::ML_KEM_768),
        "ML-KEM-1024" => Some(mlkem::ML_KEM_1024),
        _ => None,
    }
}

fn section_params(file: &'static str, rec: &KatRecord) -> Result<MlKemParams, KatError> {
    mlkem_section(&rec.section).ok_or_else(|| KatError::Field {
        file,
        count: rec.count().into(),
        field: "section".into(),
        msg: format!("unknown parameter set `{}`", rec.section),
    })
}

pub fn run_mlkem() -> Result<SuiteOutcome, KatError> {
    let mut out = SuiteOutcome::default();
    for rec in parse_records(MLKEM_KEYGEN)? {
        const F: &str = "mlkem_keygen";
        let p = section_params(F, &rec)?;
        let seed = rec.hex(F, "seed")?;
        if seed.len() != 64 {
            out.record(false, &rec.section, &rec);
            continue;
        }
        let d: [u8; 32] = seed[..32].try_into().unwrap();
        let z: [u8; 32] = seed[32..].try_into().unwrap();
        let (ek, dk) = mlkem::keygen_internal(&p, &d, &z);
        out.record(ek == rec.hex(F, "ek")? && dk == rec.hex(F, "dk")?, &format!("keygen/{}", rec.section), &rec);
    }
    for rec in parse_records(MLKEM_ENCAP)? {
        const F: &str = "mlkem_encap";
        let p = section_params(F, &rec)?;
        let m = rec.array32(F, "msg")?;
        let ss = rec.array32(F, "ss")?;
        let ct = rec.hex(F, "ct")?;
        let ok = match mlkem::encaps_internal(&p, &rec.hex(F, "ek")?, &m) {
            Ok((c, k)) => c == ct && k == ss && mlkem::decaps(&p, &rec.hex(F, "dk")?, &c) == Ok(ss),
            Err(_) => false,
        };
        out.record(ok, &format!("encap/{}", rec.section), &rec);
    }
    for rec in parse_records(MLKEM_DECAP)? {
        const F: &str = "mlkem_decap";
        let p = section_params(F, &rec)?;
        let ss = rec.array32(F, "ss")?;
        let ok = mlkem::decaps(&p, &rec.hex(F, "dk")?, &rec.hex(F, "ct")?) == Ok(ss);
        out.record(ok, &format!("decap/{}", rec.section), &rec);
    }
    Ok(out)
}

pub fn run_aead() -> Result<SuiteOutcome, KatError> {
    const F: &str = "aes256gcm";
    let mut out = SuiteOutcome::default();
    for rec in parse_records(AES256GCM)? {
        let key = rec.array32(F, "key")?;
        let iv: [u8; aead::NONCE_LEN] = rec.hex(F, "iv")?.try_into().map_err(|_| KatError::Field {
            file: F,
            count: rec.count().into(),
            field: "iv".into(),
            msg: "expected 12 bytes".into(),
        })?;
        let (pt, aad) = (rec.hex(F, "pt")?, rec.hex(F, "aad")?);
        let expected = [rec.hex(F, "ct")?, rec.hex(F, "tag")?].concat();
        let k = AeadKey::new(&key);
        let sealed = k.seal(&iv, &aad, &pt);
        let ok = sealed == expected && k.open(&iv, &aad, &sealed).as_deref() == Ok(&pt[..]);
        out.record(ok, "AES-256-GCM", &rec);
    }
    Ok(out)
}

pub fn run_prf() -> Result<SuiteOutcome, KatError> {
    let mut out = SuiteOutcome::default();
    for rec in parse_records(HMAC_SHA256)? {
        const F: &str = "hmac_sha256";
        let mac = PrfAlg::HmacSha256.compute(&rec.hex(F, "key")?, &rec.hex(F, "msg")?);
        out.record(mac.to_vec() == rec.hex(F, "mac")?, "HMAC-SHA-256", &rec);
    }
    for rec in parse_records(PRFPLUS_SHA256)? {
        const F: &str = "prfplus_sha256";
        let len = rec.number(F, "len")?;
        let got = PrfAlg::HmacSha256.prf_plus(&rec.hex(F, "key")?, &rec.hex(F, "seed")?, len);
        out.record(got.ok() == Some(rec.hex(F, "out")?), "PRF+", &rec);
    }
    Ok(out)
}

pub fn run_suite(suite: Suite) -> Result<SuiteOutcome, KatError> {
    match suite {
        Suite::MlKem => run_mlkem(),
        Suite::Aead => run_aead(),
        Suite::Prf => run_prf(),
    }
}
