//! Cipher-suite proposals in the `<aead>-<prf>-<kem>` string grammar used by
//! swanctl, e.g. `aes256gcm16-prfsha256-mlkem768`.

use std::fmt;
use std::str::FromStr;

use crate::crypto::{AeadAlg, PrfAlg};
use crate::kem::KemParamSet;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProposalError {
    #[error("unknown {kind} token `{token}`")]
    UnknownToken { kind: &'static str, token: String },
    #[error("malformed proposal `{0}`: expected <aead>-<prf>-<kem>")]
    MalformedString(String),
    #[error("no proposal chosen")]
    NoProposalChosen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Proposal {
    pub aead: AeadAlg,
    pub prf: PrfAlg,
    pub kem: KemParamSet,
}

pub fn aead_token(a: AeadAlg) -> &'static str {
    match a {
        AeadAlg::Aes256Gcm16 => "aes256gcm16",
    }
}

pub fn prf_token(p: PrfAlg) -> &'static str {
    match p {
        PrfAlg::HmacSha256 => "prfsha256",
    }
}

// IANA IKEv2 transform ids: ENCR_AES_GCM_16 and PRF_HMAC_SHA2_256.
const AEAD_IDS: [(AeadAlg, u16); 1] = [(AeadAlg::Aes256Gcm16, 20)];
const PRF_IDS: [(PrfAlg, u16); 1] = [(PrfAlg::HmacSha256, 5)];

impl Proposal {
    pub const fn new(aead: AeadAlg, prf: PrfAlg, kem: KemParamSet) -> Self {
        Self { aead, prf, kem }
    }

    /// The only AEAD/PRF pair the grammar knows, with the given KEM.
    pub const fn with_kem(kem: KemParamSet) -> Self {
        Self::new(AeadAlg::Aes256Gcm16, PrfAlg::HmacSha256, kem)
    }

    /// `(aead, prf, kem)` transform ids as carried in the SA payload.
    pub fn transform_ids(&self) -> [u16; 3] {
        let aead = AEAD_IDS.iter().find(|(a, _)| *a == self.aead).map(|x| x.1).unwrap();
        let prf = PRF_IDS.iter().find(|(p, _)| *p == self.prf).map(|x| x.1).unwrap();
        [aead, prf, self.kem.transform_id()]
    }

    pub fn from_transform_ids(ids: [u16; 3]) -> Result<Self, ProposalError> {
        let unknown = |kind, id: u16| ProposalError::UnknownToken { kind, token: id.to_string() };
        let aead = AEAD_IDS.iter().find(|(_, i)| *i == ids[0]).ok_or_else(|| unknown("aead", ids[0]))?.0;
        let prf = PRF_IDS.iter().find(|(_, i)| *i == ids[1]).ok_or_else(|| unknown("prf", ids[1]))?.0;
        let kem = KemParamSet::from_transform_id(ids[2]).map_err(|_| unknown("kem", ids[2]))?;
        Ok(Self { aead, prf, kem })
    }
}

impl fmt::Display for Proposal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}-{}", aead_token(self.aead), prf_token(self.prf), self.kem.token())
    }
}

impl FromStr for Proposal {
    type Err = ProposalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_proposal(s)
    }
}

pub fn parse_proposal(text: &str) -> Result<Proposal, ProposalError> {
    let parts: Vec<&str> = text.trim().split('-').collect();
    if parts.len() != 3 || parts.iter().any(|p| p.is_empty()) {
        return Err(ProposalError::MalformedString(text.to_string()));
    }
    let unknown = |kind, token: &str| ProposalError::UnknownToken { kind, token: token.to_string() };
    let aead = match parts[0] {
        "aes256gcm16" => AeadAlg::Aes256Gcm16,
        t => return Err(unknown("aead", t)),
    };
    let prf = match parts[1] {
        "prfsha256" => PrfAlg::HmacSha256,
        t => return Err(unknown("prf", t)),
    };
    let kem = parts[2].parse::<KemParamSet>().map_err(|_| unknown("kem", parts[2]))?;
    Ok(Proposal { aead, prf, kem })
}

/// Comma-separated proposal list, as in `proposals = a, b`.
pub fn parse_proposal_list(text: &str) -> Result<Vec<Proposal>, ProposalError> {
    let list = text
        .split(',')
        .map(parse_proposal)
        .collect::<Result<Vec<_>, _>>()?;
    if list.is_empty() {
        return Err(ProposalError::MalformedString(text.to_string()));
    }
    Ok(list)
}

/// First entry of `local` that also appears in `remote`.
pub fn negotiate(local: &[Proposal], remote: &[Proposal]) -> Result<Proposal, ProposalError> {
    local
        .iter()
        .find(|p| remote.contains(p))
        .copied()
        .ok_or(ProposalError::NoProposalChosen)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn swanctl_strings_parse() {
        let p = parse_proposal("aes256gcm16-prfsha256-mlkem768").unwrap();
        assert_eq!(p, Proposal::new(AeadAlg::Aes256Gcm16, PrfAlg::HmacSha256, KemParamSet::MlKem768));
        let p = parse_proposal("aes256gcm16-prfsha256-mlkem1024").unwrap();
        assert_eq!(p.kem, KemParamSet::MlKem1024);
        let p = parse_proposal("aes256gcm16-prfsha256-curve25519").unwrap();
        assert_eq!(p.kem, KemParamSet::EcdhX25519);
    }

    #[test]
    fn render_is_inverse_of_parse() {
        for kem in KemParamSet::ALL {
            let s = Proposal::with_kem(kem).to_string();
            assert_eq!(parse_proposal(&s).unwrap().to_string(), s);
            let p = Proposal::with_kem(kem);
            assert_eq!(Proposal::from_transform_ids(p.transform_ids()).unwrap(), p);
        }
    }

    #[test]
    fn bad_strings() {
        assert!(matches!(
            parse_proposal("aes256gcm16-prfsha999-mlkem768"),
            Err(ProposalError::UnknownToken { kind: "prf", .. })
        ));
        assert!(matches!(parse_proposal("aes128-prfsha256-mlkem768"), Err(ProposalError::UnknownToken { .. })));
        assert!(matches!(parse_proposal("aes256gcm16-prfsha256-kyber"), Err(ProposalError::UnknownToken { .. })));
        for s in ["", "aes256gcm16", "aes256gcm16-prfsha256", "a-b-c-d", "aes256gcm16--mlkem768"] {
            assert!(matches!(parse_proposal(s), Err(ProposalError::MalformedString(_))), "{s}");
        }
    }

    #[test]
    fn lists() {
        let l = parse_proposal_list("aes256gcm16-prfsha256-mlkem768, aes256gcm16-prfsha256-curve25519").unwrap();
        assert_eq!(l.len(), 2);
        assert_eq!(l[1].kem, KemParamSet::EcdhX25519);
    }

    #[test]
    fn first_local_match_wins() {
        let [a, b, c] = [KemParamSet::MlKem512, KemParamSet::MlKem768, KemParamSet::MlKem1024].map(Proposal::with_kem);
        let ecdh = Proposal::with_kem(KemParamSet::EcdhX25519);
        assert_eq!(negotiate(&[ecdh], &[ecdh]).unwrap(), ecdh);
        assert_eq!(negotiate(&[a, b], &[b, c]).unwrap(), b);
        assert_eq!(negotiate(&[c, b, a], &[a, b, c]).unwrap(), c);
        assert_eq!(negotiate(&[b], &[ecdh]), Err(ProposalError::NoProposalChosen));
    }
}
