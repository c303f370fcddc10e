use pqe2::esp::StartAction;
use pqe2::ike::Proposal;
use pqe2::kem::KemParamSet;
use pqe2::netlab::capture::{Direction, Proto};
use pqe2::testbed::{self, Security, Workload};
use pqe2_bench::config::ScenarioConfig;
use pqe2_bench::metrics::extract_phases;
use pqe2_bench::scenario::{self, iteration_seed, run_scenario, testbed_config};

fn small(kem: KemParamSet) -> ScenarioConfig {
    let mut c = ScenarioConfig::default();
    c.proposal = Proposal::with_kem(kem);
    c.esp_proposal = c.proposal;
    c.iterations = 3;
    c.traffic.pingpong_messages = 5;
    c
}

#[test]
fn iterations_are_isolated() {
    let cfg = small(KemParamSet::MlKem768);
    let seed = iteration_seed(&cfg.seed, 1);
    let t = testbed_config(&cfg, Workload::Handshake, seed);
    scenario::run_iteration(&cfg, 0).unwrap();
    let after = testbed::run_checked(&t).unwrap();
    let alone = testbed::run_checked(&t).unwrap();
    assert_eq!(after.initiator_sent, alone.initiator_sent);
    assert_eq!(after.responder_sent, alone.responder_sent);
}

#[test]
fn report_shape() {
    let r = run_scenario(&small(KemParamSet::EcdhX25519)).unwrap();
    assert_eq!(r.iterations.len(), 3);
    assert_eq!(r.phase_samples("ike_init").len(), 3);
    assert_eq!(r.pingpong_samples().len(), 15);
    assert_eq!(r.xapp_samples().len(), 3);
    assert_eq!(r.wire_overhead_bytes, 24);
}

#[test]
fn plain_security_has_no_ike_or_esp() {
    let mut cfg = small(KemParamSet::EcdhX25519);
    cfg.security = Security::None;
    let r = run_scenario(&cfg).unwrap();
    assert!(r.iterations.iter().all(|i| i.phases.is_none() && i.sa_init_request_bytes.is_none()));
    for w in [Workload::PingPong { messages: 5, payload: 64 }, Workload::XappLaunch { startup: Default::default() }] {
        let run = testbed::run_checked(&testbed_config(&cfg, w, [1; 32])).unwrap();
        assert!(run.capture.iter().all(|e| !matches!(e.proto, Proto::Ike | Proto::Esp)));
    }
}

#[test]
fn phases_fit_inside_setup_span() {
    for kem in KemParamSet::ALL {
        let cfg = small(kem);
        for i in 0..5 {
            let (p, _, r) = scenario::handshake(&cfg, iteration_seed(&[4; 32], i), i).unwrap();
            let first = r.capture.iter().find(|e| e.direction == Direction::Send && e.proto == Proto::Ike).unwrap().ts_ns;
            let span = r.child_established_ns.unwrap() - first;
            assert!(p.total().as_nanos() as u64 <= span, "{kem}");
            assert_eq!(extract_phases(&r.capture).unwrap(), p);
        }
    }
}

#[test]
fn start_mode_xapp_waits_for_tunnel() {
    let mut cfg = small(KemParamSet::MlKem1024);
    cfg.start_action = StartAction::Start;
    let (_, r) = scenario::xapp_launch(&cfg, [5; 32], 0).unwrap();
    let rec = r.xapp.unwrap();
    assert!(rec.start_ts > r.child_established_ns.unwrap());
}
