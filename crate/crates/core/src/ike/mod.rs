//! IKEv2-style key exchange: proposals, framing, fragmentation, the key
//! schedule and the SA state machine.

pub mod fragment;
pub mod keys;
pub mod message;
pub mod proposal;
pub mod sa;
pub mod ts;

pub use fragment::{fragment, reassemble, FragmentError, Reassembler, FRAGMENT_OVERHEAD};
pub use keys::{derive_child_keys, derive_keys, ChildSaKeys, KeyMaterial};
pub use message::{Exchange, FragmentInfo, IkeMessage, MsgRole, Payload, PayloadTag, WireError};
pub use proposal::{negotiate, parse_proposal, parse_proposal_list, Proposal, ProposalError};
pub use sa::{authenticate, step, verify_auth, IkeConfig, IkeError, IkeEvent, IkeRole, IkeSaState, Phase};
pub use ts::TrafficSelectors;
