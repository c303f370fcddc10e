use std::time::Duration;

use pqe2::esp::StartAction;
use pqe2::ike::Proposal;
use pqe2::kem::KemParamSet;
use pqe2::netlab::{Direction, Proto};
use pqe2::testbed::{self, Security, TestbedConfig, Workload};

fn handshake(kem: KemParamSet, seed: u8) -> TestbedConfig {
    let mut c = TestbedConfig::new(Workload::Handshake);
    c.proposal = Proposal::with_kem(kem);
    c.esp_proposal = Proposal::with_kem(kem);
    c.seed = [seed; 32];
    c
}

#[test]
fn handshake_every_kem() {
    for kem in KemParamSet::ALL {
        let r = testbed::run_checked(&handshake(kem, 1)).unwrap();
        assert!(r.keys_agree(), "{kem}");
    }
}

#[test]
fn ecdh_handshake_six_ike_events_per_endpoint() {
    let r = testbed::run_checked(&handshake(KemParamSet::EcdhX25519, 2)).unwrap();
    for ep in [testbed::RAN, testbed::RIC] {
        let n = r.capture.iter().filter(|e| e.endpoint == ep && e.proto == Proto::Ike).count();
        assert_eq!(n, 6, "{ep}");
    }
}

#[test]
fn transcripts_reproduce_per_seed() {
    let a = testbed::run_checked(&handshake(KemParamSet::HybridX25519MlKem768, 3)).unwrap();
    let b = testbed::run_checked(&handshake(KemParamSet::HybridX25519MlKem768, 3)).unwrap();
    let c = testbed::run_checked(&handshake(KemParamSet::HybridX25519MlKem768, 4)).unwrap();
    assert_eq!(a.initiator_sent, b.initiator_sent);
    assert_eq!(a.responder_sent, b.responder_sent);
    assert_ne!(a.initiator_sent, c.initiator_sent);
}

#[test]
fn large_kem_fragments_sa_init() {
    let r = testbed::run_checked(&handshake(KemParamSet::MlKem1024, 5)).unwrap();
    let frags = r
        .capture
        .iter()
        .filter(|e| e.endpoint == testbed::RAN && e.direction == Direction::Send && e.detail.starts_with("SA_INIT_REQ["))
        .count();
    assert!(frags >= 2);
    assert!(r.keys_agree());
}

#[test]
fn pingpong_plain_and_tunneled() {
    for sec in [Security::None, Security::Ipsec] {
        let mut c = TestbedConfig::new(Workload::PingPong { messages: 50, payload: 64 });
        c.security = sec;
        c.start_action = StartAction::Start;
        let r = testbed::run_checked(&c).unwrap();
        assert_eq!(r.rtts_ns.len(), 50);
        assert_eq!(r.ping_timeouts, 0);
        let has_esp = r.capture.iter().any(|e| e.proto == Proto::Esp);
        assert_eq!(has_esp, sec == Security::Ipsec);
        if sec == Security::None {
            assert!(r.capture.iter().all(|e| e.proto != Proto::Ike));
        }
    }
}

#[test]
fn pingpong_large_payload_is_fragmented() {
    let mut c = TestbedConfig::new(Workload::PingPong { messages: 5, payload: 9000 });
    c.start_action = StartAction::Start;
    let r = testbed::run_checked(&c).unwrap();
    assert_eq!(r.rtts_ns.len(), 5);
}

#[test]
fn trap_holds_xapp_traffic_until_child_sa() {
    let c = TestbedConfig::new(Workload::XappLaunch { startup: Duration::ZERO });
    let r = testbed::run_checked(&c).unwrap();
    let rec = r.xapp.unwrap();
    let first = rec.first_packet_ts.unwrap();
    assert!(first >= rec.start_ts);
    let log = &r.capture;
    let first_wire = log.iter().find(|e| e.direction == Direction::Send).unwrap();
    assert_eq!(first_wire.proto, Proto::Ike);
    let child_resp = log
        .iter()
        .find(|e| e.direction == Direction::Send && e.detail.starts_with("CREATE_CHILD_RESP"))
        .unwrap();
    assert!(log.iter().filter(|e| e.proto == Proto::E2).count() == 0);
    let first_esp = log.iter().find(|e| e.proto == Proto::Esp).unwrap();
    assert!(first_esp.ts_ns >= child_resp.ts_ns);
    assert_eq!(first_esp.ts_ns, first);
}

#[test]
fn e2_connect_timeout_without_ric_reply() {
    let mut c = TestbedConfig::new(Workload::XappLaunch { startup: Duration::ZERO });
    c.security = Security::None;
    c.e2.ric_running = false;
    c.e2.connect_timeout = Duration::from_millis(20);
    let r = testbed::run(&c).unwrap();
    assert!(r.errors.iter().any(|e| e.contains("no answer")), "{:?}", r.errors);
}

#[test]
fn e2_stream_short_with_midstream_tunnel() {
    let mut c = TestbedConfig::new(Workload::E2Stream {
        duration: Duration::from_millis(600),
        tunnel_at: Duration::from_millis(250),
    });
    c.e2.period = Duration::from_millis(50);
    let r = testbed::run_checked(&c).unwrap();
    let sub = r.subscribed_ns.unwrap();
    let got = testbed::indications_in(&r, sub, Duration::from_millis(600));
    assert!((11..=13).contains(&got.len()), "{}", got.len());
    assert!(r.child_established_ns.is_some());
    assert!(r.capture.iter().any(|e| e.proto == Proto::Esp && e.detail.contains('/')));
    let gaps = got.windows(2).map(|w| w[1] - w[0]).max().unwrap();
    assert!(gaps <= 100_000_000, "{gaps}");
}
