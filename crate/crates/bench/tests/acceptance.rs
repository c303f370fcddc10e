//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion fails.
//!
//! Run with `cargo test -p pqe2-bench --test acceptance -- --nocapture` to see
//! the report.

use std::collections::HashSet;
use std::process::Command;
use std::time::{Duration, Instant};

use pqe2::crypto::{AeadAlg, PrfAlg};
use pqe2::esp::replay::WINDOW_SIZE;
use pqe2::esp::{EspPacket, EspSa, ReplayWindow, StartAction};
use pqe2::ike::{derive_child_keys, Proposal};
use pqe2::kem::{kem_decaps, kem_encaps, kem_keygen, param_profile, KemParamSet};
use pqe2::netlab::capture::{Direction, Proto};
use pqe2::netlab::frag::{split, Defragmenter};
use pqe2::netlab::LinkSpec;
use pqe2::rng::derive_seed;
use pqe2::testbed::{self, Security, TestbedConfig, Workload};
use pqe2::Drbg;
use pqe2_bench::config::ScenarioConfig;
use pqe2_bench::metrics::extract_phases;
use pqe2_bench::scenario::{self, iteration_seed};
use pqe2_bench::stats::summarize;

const HANDSHAKES_PER_KEM: usize = 100;
const LADDER_ITERATIONS: usize = 100;
const PAIRED_PINGPONGS: usize = 100;
const TRAP_ITERATIONS: usize = 60;
const KEM_AGREEMENTS: usize = 1000;

const KEM_LADDER: [KemParamSet; 4] =
    [KemParamSet::EcdhX25519, KemParamSet::MlKem512, KemParamSet::MlKem768, KemParamSet::MlKem1024];

type Check = (&'static str, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn base_seed(label: &str) -> [u8; 32] {
    derive_seed(&[0xac; 32], label.as_bytes())
}

fn cfg_for(kem: KemParamSet, security: Security, start: StartAction) -> ScenarioConfig {
    let p = Proposal::with_kem(kem);
    ScenarioConfig {
        name: kem.token().into(),
        security,
        proposal: p,
        esp_proposal: p,
        start_action: start,
        link: LinkSpec::default(),
        ..ScenarioConfig::default()
    }
}

fn median(xs: &[u64]) -> u64 {
    summarize(xs).expect("non-empty samples").median
}

fn us(ns: f64) -> f64 {
    ns / 1000.0
}

fn c1_kat() -> Verdict {
    let t0 = Instant::now();
    let mut lines = Vec::new();
    let mut ok = true;
    for suite in ["mlkem", "aead", "prf"] {
        let out = Command::new(env!("CARGO_BIN_EXE_bench")).args(["kat", "--suite", suite]).output().expect("spawn bench");
        ok &= out.status.success();
        lines.push(String::from_utf8_lossy(&out.stdout).trim().to_string());
    }
    let secs = t0.elapsed().as_secs_f64();
    verdict(ok && secs < 30.0, format!("{} ({secs:.2}s, limit 30s)", lines.join("; ")))
}

fn c2_kem_agreement() -> Verdict {
    let mut failures = 0;
    for kem in KemParamSet::ALL {
        for i in 0..KEM_AGREEMENTS {
            let mut rng = Drbg::new(derive_seed(&base_seed("kem"), format!("{kem}/{i}").as_bytes()));
            let kp = kem_keygen(kem, &mut rng);
            let ok = kem_encaps(kem, &kp.ek, &mut rng)
                .ok()
                .is_some_and(|e| kem_decaps(kem, &kp.dk, &e.ct).is_ok_and(|ss| ss == e.ss));
            failures += usize::from(!ok);
        }
    }
    verdict(
        failures == 0,
        format!("{} sets x {KEM_AGREEMENTS} encaps/decaps, {failures} failures", KemParamSet::ALL.len()),
    )
}

fn c3_handshake_agreement() -> Verdict {
    let mut bad = Vec::new();
    for kem in KemParamSet::ALL {
        let mut agreed = 0;
        let mut reproduced = 0;
        for i in 0..HANDSHAKES_PER_KEM {
            let mut c = TestbedConfig::new(Workload::Handshake);
            c.proposal = Proposal::with_kem(kem);
            c.esp_proposal = c.proposal;
            c.seed = iteration_seed(&base_seed("handshake"), i);
            let (Ok(a), Ok(b)) = (testbed::run_checked(&c), testbed::run_checked(&c)) else { continue };
            agreed += usize::from(a.keys_agree() && b.keys_agree() && a.initiator.as_ref().map(|s| &s.keys) == b.initiator.as_ref().map(|s| &s.keys));
            reproduced += usize::from(a.initiator_sent == b.initiator_sent && a.responder_sent == b.responder_sent);
        }
        if agreed != HANDSHAKES_PER_KEM || reproduced != HANDSHAKES_PER_KEM {
            bad.push(format!("{kem}: agreed {agreed}, reproduced {reproduced}"));
        }
    }
    if bad.is_empty() {
        verdict(true, format!("{} KEMs x {HANDSHAKES_PER_KEM} seeds: keys agree, transcripts bit-identical on rerun", KemParamSet::ALL.len()))
    } else {
        verdict(false, bad.join("; "))
    }
}

fn c4_phase_ladder() -> Verdict {
    let t0 = Instant::now();
    let mut samples: Vec<[Vec<u64>; 3]> = vec![Default::default(); KEM_LADDER.len()];
    // interleave configs so slow drift of the host hits all of them alike
    for i in 0..LADDER_ITERATIONS {
        let seed = iteration_seed(&base_seed("ladder"), i);
        for (k, kem) in KEM_LADDER.iter().enumerate() {
            let cfg = cfg_for(*kem, Security::Ipsec, StartAction::Trap);
            let Ok((p, _, _)) = scenario::handshake(&cfg, seed, i) else {
                return verdict(false, format!("{kem} iteration {i}: handshake failed"));
            };
            for (slot, d) in p.values().into_iter().enumerate() {
                samples[k][slot].push(d.as_nanos() as u64);
            }
        }
    }
    let med: Vec<[u64; 3]> = samples.iter().map(|s| [median(&s[0]), median(&s[1]), median(&s[2])]).collect();
    let ladder = med[1][0] < med[2][0] && med[2][0] < med[3][0];
    let spread = |slot: usize| {
        let v: Vec<u64> = med.iter().map(|m| m[slot]).collect();
        let (lo, hi) = (*v.iter().min().unwrap(), *v.iter().max().unwrap());
        (hi - lo) as f64 / lo as f64
    };
    let (auth, child) = (spread(1), spread(2));
    let secs = t0.elapsed().as_secs_f64();
    let deltas: Vec<String> = (1..4)
        .map(|k| format!("{}{:+.1}us", KEM_LADDER[k], us(med[k][0] as f64 - med[0][0] as f64)))
        .collect();
    let init: Vec<String> = med.iter().zip(KEM_LADDER).map(|(m, k)| format!("{k}={:.1}", us(m[0] as f64))).collect();
    verdict(
        ladder && auth < 0.25 && child < 0.25 && secs < 300.0,
        format!(
            "median ike_init us: {}; auth spread {:.1}%, child spread {:.1}% (limit 25%); ike_init vs ECDH: {} (reference +3 ms / +4.7 ms for 768/1024); {LADDER_ITERATIONS} iterations in {secs:.1}s",
            init.join(" "),
            auth * 100.0,
            child * 100.0,
            deltas.join(", ")
        ),
    )
}

fn c5_paired_pingpong() -> Verdict {
    let mut positive = 0;
    let (mut plain_sum, mut tun_sum) = (0.0, 0.0);
    for i in 0..PAIRED_PINGPONGS {
        let seed = iteration_seed(&base_seed("pingpong"), i);
        let plain = scenario::pingpong(&cfg_for(KemParamSet::EcdhX25519, Security::None, StartAction::Start), seed, i);
        let tun = scenario::pingpong(&cfg_for(KemParamSet::EcdhX25519, Security::Ipsec, StartAction::Start), seed, i);
        let (Ok(plain), Ok(tun)) = (plain, tun) else {
            return verdict(false, format!("iteration {i}: ping-pong failed"));
        };
        let (Ok(p), Ok(t)) = (summarize(&plain.one_way_ns), summarize(&tun.one_way_ns)) else {
            return verdict(false, format!("iteration {i}: no samples"));
        };
        positive += usize::from(t.mean > p.mean);
        plain_sum += p.mean;
        tun_sum += t.mean;
    }
    let n = PAIRED_PINGPONGS as f64;
    let (plain, tun) = (plain_sum / n, tun_sum / n);
    let share = positive as f64 / n;
    verdict(
        tun > plain && share >= 0.95,
        format!(
            "one-way mean plain {:.2}us, tunneled {:.2}us, delta {:+.2}us, positive in {positive}/{PAIRED_PINGPONGS} pairs (need 95%); reference 125us / 290us",
            us(plain),
            us(tun),
            us(tun - plain)
        ),
    )
}

fn c6_ke_size_law() -> Verdict {
    let mut sizes = Vec::new();
    for kem in KemParamSet::ALL {
        let cfg = cfg_for(kem, Security::Ipsec, StartAction::Trap);
        match scenario::handshake(&cfg, base_seed("size"), 0) {
            Ok((_, bytes, _)) => sizes.push((kem, bytes)),
            Err(e) => return verdict(false, format!("{kem}: {e}")),
        }
    }
    let (_, base) = sizes[0];
    let ek0 = param_profile(KemParamSet::EcdhX25519).ek_bytes as i64;
    let mut ok = true;
    let mut parts = Vec::new();
    for (kem, b) in &sizes[1..] {
        let got = *b as i64 - base as i64;
        let want = param_profile(*kem).ek_bytes as i64 - ek0;
        ok &= got == want;
        parts.push(format!("{kem} {got:+} (ek {want:+})"));
    }
    verdict(ok, format!("SA_INIT request deltas vs curve25519 ({base} B): {}", parts.join(", ")))
}

fn c7_trap_semantics() -> Verdict {
    let jitter = LinkSpec::default().jitter.as_nanos() as f64;
    let tol = 3.0 * jitter;
    let pair = [KemParamSet::EcdhX25519, KemParamSet::MlKem1024];
    let mut leaks = 0;
    let mut trap_delay: [Vec<u64>; 2] = Default::default();
    let mut trap_phases: [Vec<u64>; 2] = Default::default();
    // initiator work outside the wire phases: before the first SA_INIT send,
    // and between exchanges
    let mut pre_send: [Vec<u64>; 2] = Default::default();
    let mut between: [Vec<u64>; 2] = Default::default();
    let mut start_delay: Vec<Vec<u64>> = vec![Vec::new(); KEM_LADDER.len()];
    for i in 0..TRAP_ITERATIONS {
        let seed = iteration_seed(&base_seed("trap"), i);
        for (k, kem) in pair.iter().enumerate() {
            let cfg = cfg_for(*kem, Security::Ipsec, StartAction::Trap);
            let Ok((d, r)) = scenario::xapp_launch(&cfg, seed, i) else {
                return verdict(false, format!("{kem} trap iteration {i} failed"));
            };
            let Ok(p) = extract_phases(&r.capture) else {
                return verdict(false, format!("{kem} trap iteration {i}: incomplete handshake"));
            };
            let est = r.child_established_ns.unwrap_or(u64::MAX);
            leaks += r
                .capture
                .iter()
                .filter(|e| e.direction == Direction::Send && matches!(e.proto, Proto::E2 | Proto::Esp | Proto::Plain) && e.ts_ns < est)
                .count();
            let first_ike = r.capture.iter().find(|e| e.proto == Proto::Ike).map_or(0, |e| e.ts_ns);
            let start = r.xapp.map_or(0, |x| x.start_ts);
            let total = p.total().as_nanos() as u64;
            trap_delay[k].push(d.as_nanos() as u64);
            trap_phases[k].push(total);
            pre_send[k].push(first_ike.saturating_sub(start));
            between[k].push(est.saturating_sub(first_ike).saturating_sub(total));
        }
        for (k, kem) in KEM_LADDER.iter().enumerate() {
            let cfg = cfg_for(*kem, Security::Ipsec, StartAction::Start);
            let Ok((d, _)) = scenario::xapp_launch(&cfg, seed, i) else {
                return verdict(false, format!("{kem} start iteration {i} failed"));
            };
            start_delay[k].push(d.as_nanos() as u64);
        }
    }
    let d_delay = median(&trap_delay[1]) as f64 - median(&trap_delay[0]) as f64;
    let d_phase = median(&trap_phases[1]) as f64 - median(&trap_phases[0]) as f64;
    let trap_ok = (d_delay - d_phase).abs() <= tol;
    let d_pre = median(&pre_send[1]) as f64 - median(&pre_send[0]) as f64;
    let d_between = median(&between[1]) as f64 - median(&between[0]) as f64;
    let start_med: Vec<u64> = start_delay.iter().map(|s| median(s)).collect();
    let start_spread = (start_med.iter().max().unwrap() - start_med.iter().min().unwrap()) as f64;
    let start_ok = start_spread <= tol;
    verdict(
        leaks == 0 && trap_ok && start_ok,
        format!(
            "app packets before tunnel: {leaks}; trap xApp delay delta (mlkem1024-curve25519) {:+.1}us vs phase-sum delta {:+.1}us, diff {:.1}us (tol {:.1}us), of which initiator work before the first SA_INIT send {:+.1}us and between exchanges {:+.1}us; start-mode delay medians {:?}us, spread {:.1}us (tol {:.1}us)",
            us(d_delay),
            us(d_phase),
            us((d_delay - d_phase).abs()),
            us(tol),
            us(d_pre),
            us(d_between),
            start_med.iter().map(|v| v / 1000).collect::<Vec<_>>(),
            us(start_spread),
            us(tol)
        ),
    )
}

fn esp_pair() -> (EspSa, EspSa) {
    let k = derive_child_keys(PrfAlg::HmacSha256, AeadAlg::Aes256Gcm16, &[5; 32], &[6; 32], &[7; 32], 0xa1, 0xb2, true);
    let peer = k.mirrored();
    (EspSa::new(k), EspSa::new(peer))
}

fn c8_esp_invariants() -> Verdict {
    let mtu = LinkSpec::default().mtu;
    // round trip through IP-level fragmentation
    let (mut a, mut b) = esp_pair();
    let mut rt_fail = 0;
    let mut fragmented = 0;
    for len in 0..=9000usize {
        let inner: Vec<u8> = (0..len).map(|i| (i * 31 + len) as u8).collect();
        let wire = a.seal(&inner).unwrap().encode();
        let mut frags = split(&wire, mtu - 28, len as u32).unwrap();
        fragmented += usize::from(frags.len() > 1);
        let half = frags.len() / 2;
        frags.rotate_left(half);
        let mut d = Defragmenter::new(4);
        let whole = frags.into_iter().find_map(|(h, f)| d.push("peer", h, f));
        let ok = whole.and_then(|w| EspPacket::decode(&w).ok()).and_then(|p| b.open(&p).ok()).is_some_and(|o| o == inner);
        rt_fail += usize::from(!ok);
    }
    // every accept/accept/probe schedule across the window's left edge, against a set-based model
    let span = WINDOW_SIZE + 8;
    let mut replay_fail = 0;
    let mut cases = 0;
    for x in 1..=span {
        for y in 1..=span {
            let mut w = ReplayWindow::new();
            let mut seen = HashSet::new();
            let mut high = 0;
            let model = |seen: &HashSet<u32>, high: u32, s: u32| !seen.contains(&s) && (s > high || high - s < WINDOW_SIZE);
            for s in [x, y] {
                let want = model(&seen, high, s);
                replay_fail += usize::from(w.accept(s).is_ok() != want);
                if want {
                    seen.insert(s);
                    high = high.max(s);
                }
            }
            for z in 1..=span {
                cases += 1;
                replay_fail += usize::from(w.check(z).is_ok() != model(&seen, high, z));
            }
        }
    }
    // every single-bit flip of a sealed 64-byte packet
    let (mut a, b) = esp_pair();
    let wire = a.seal(&[0x5a; 64]).unwrap().encode();
    let mut accepted = 0;
    for bit in 0..wire.len() * 8 {
        let mut w = wire.clone();
        w[bit / 8] ^= 1 << (bit % 8);
        let mut rx = b.clone();
        accepted += usize::from(EspPacket::decode(&w).is_ok_and(|p| rx.open(&p).is_ok()));
    }
    verdict(
        rt_fail == 0 && replay_fail == 0 && accepted == 0,
        format!(
            "round trip 0..=9000 B: {rt_fail} failures ({fragmented} fragmented at mtu {mtu}); replay schedules: {cases} probes, {replay_fail} mismatches; bit flips: {accepted} of {} accepted",
            wire.len() * 8
        ),
    )
}

fn c9_e2_stream() -> Verdict {
    let period = Duration::from_millis(100);
    let duration = Duration::from_secs(5);
    let tunnel_at = Duration::from_millis(2500);
    let mut c = TestbedConfig::new(Workload::E2Stream { duration, tunnel_at });
    c.e2.period = period;
    c.seed = base_seed("e2");
    let r = match testbed::run_checked(&c) {
        Ok(r) => r,
        Err(e) => return verdict(false, e.to_string()),
    };
    let Some(sub) = r.subscribed_ns else { return verdict(false, "no subscription") };
    let got = testbed::indications_in(&r, sub, duration);
    let expected = (duration.as_nanos() / period.as_nanos()) as usize;
    let gap = got.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(u64::MAX);
    let est = r.child_established_ns;
    let mid = est.is_some_and(|t| got.first().is_some_and(|&f| f < t) && got.last().is_some_and(|&l| l > t));
    let count_ok = got.len().abs_diff(expected) <= 1;
    let gap_ok = gap <= 2 * period.as_nanos() as u64;
    verdict(
        count_ok && gap_ok && mid,
        format!(
            "{} indications (expected {expected} +/-1), max gap {:.1}ms (limit {}ms), tunnel up at {}",
            got.len(),
            gap as f64 / 1e6,
            2 * period.as_millis(),
            est.map_or("never".to_string(), |t| format!("+{:.1}ms into the stream", (t.saturating_sub(sub)) as f64 / 1e6))
        ),
    )
}

#[test]
fn acceptance() {
    let criteria: [Check; 9] = [
        ("1 KEM/AEAD/PRF conformance vectors", c1_kat),
        ("2 KEM encaps/decaps agreement", c2_kem_agreement),
        ("3 handshake agreement and reproducibility", c3_handshake_agreement),
        ("4 phase ordering across KEMs", c4_phase_ladder),
        ("5 paired ping-pong overhead", c5_paired_pingpong),
        ("6 KE payload size law", c6_ke_size_law),
        ("7 trap semantics and xApp delay", c7_trap_semantics),
        ("8 ESP invariants", c8_esp_invariants),
        ("9 E2 indication stream across tunnel setup", c9_e2_stream),
    ];
    let mut failed = Vec::new();
    for (name, check) in criteria {
        let t0 = Instant::now();
        let v = check();
        println!("{} [{name}] {} ({:.1}s)", if v.pass { "PASS" } else { "FAIL" }, v.detail, t0.elapsed().as_secs_f64());
        if !v.pass {
            failed.push(name);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
