//! ESP-style tunnel data plane.

pub mod packet;
pub mod policy;
pub mod replay;

pub use packet::{esp_open, esp_seal, EspError, EspPacket, EspSa, InnerPacket, ESP_OVERHEAD, INNER_HEADER_LEN};
pub use policy::{SecurityPolicy, StartAction, TrapAction, TrapController};
pub use replay::{ReplayError, ReplayWindow};
