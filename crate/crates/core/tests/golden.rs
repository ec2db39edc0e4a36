//! Pinned slot records and an independent replay of the random stream.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qnet_sched::sim::{Simulator, SlotRecord};
use qnet_sched::{builtin_scenario, ClassSet, PolicyKind};

fn record(slot: u64, avg_queue: f64, link_state: u64, matching: u32, served: u32, arrivals: u32) -> SlotRecord {
    SlotRecord {
        slot,
        avg_queue,
        link_state,
        matching: ClassSet::from_bits(matching),
        measured: ClassSet::from_bits(served),
        departures: ClassSet::from_bits(served),
        arrivals: ClassSet::from_bits(arrivals),
    }
}

#[test]
fn net5_low_seed_42_first_slots() {
    let (net, arr) = builtin_scenario("net5-low").unwrap();
    let mut sim = Simulator::new(&net, &arr, PolicyKind::MaxWeight, 42, None).unwrap();
    let expected = [
        record(1, 0.0, 125, 0b10, 0, 0),
        record(2, 0.0, 121, 0b01, 0, 0b10),
        record(3, 0.5, 59, 0b10, 0, 0),
        record(4, 0.5, 127, 0b10, 0, 0),
        record(5, 0.5, 50, 0b10, 0, 0),
        record(6, 0.5, 127, 0b10, 0b10, 0b01),
    ];
    for e in expected {
        assert_eq!(sim.step(), e);
    }
    assert_eq!(sim.state().queues, vec![1, 0]);
}

/// Max-Weight on net5 replayed straight from the ChaCha8 stream: per slot,
/// one draw per link, one tie-break draw, one measurement draw for each
/// served class, then one arrival draw per class.
#[test]
fn net5_replay_from_raw_stream() {
    let (net, arr) = builtin_scenario("net5-low").unwrap();
    let mut sim = Simulator::new(&net, &arr, PolicyKind::MaxWeight, 42, None).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut uniform = move || (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    let masks: Vec<u64> = net.classes().iter().map(|c| c.link_mask()).collect();
    let q: Vec<f64> = net.classes().iter().map(|c| c.q).collect();
    let mut queues = [0u64; 2];
    for _ in 0..50_000 {
        let mut links = 0u64;
        for (j, &p) in net.link_probs().iter().enumerate() {
            if uniform() < p {
                links |= 1 << j;
            }
        }
        let up = |i: usize| masks[i] & links == masks[i];
        // The two classes share link 2, so the matchings are {0} then {1}.
        let w: Vec<f64> = (0..2)
            .map(|i| {
                if up(i) && queues[i] > 0 {
                    q[i] * queues[i] as f64
                } else {
                    0.0
                }
            })
            .collect();
        let best = w[0].max(w[1]);
        let ties: Vec<usize> = (0..2).filter(|&i| w[i] == best).collect();
        let u = uniform();
        let chosen = ties[((u * ties.len() as f64) as usize).min(ties.len() - 1)];
        let mut served = 0u32;
        if up(chosen) && queues[chosen] > 0 && uniform() < q[chosen] {
            served = 1 << chosen;
            queues[chosen] -= 1;
        }
        let mut arrivals = 0u32;
        for (i, &l) in arr.rates.iter().enumerate() {
            if uniform() < l {
                arrivals |= 1 << i;
                queues[i] += 1;
            }
        }
        let r = sim.step();
        assert_eq!(r.link_state, links);
        assert_eq!(r.matching, ClassSet::from_bits(1 << chosen));
        assert_eq!(r.departures.bits(), served);
        assert_eq!(r.arrivals.bits(), arrivals);
        assert_eq!(sim.state().queues, queues.to_vec());
    }
}
