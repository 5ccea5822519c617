//! BP engine checked against the exact oracles.

use proptest::prelude::*;
use sfd_core::{chain_dp, exhaustive_map, run_bp, CostVolume, PriorParams, Schedule, TinyInstance};

fn volume(w: usize, h: usize, l: usize, data: Vec<f64>) -> CostVolume {
    CostVolume::new(w, h, l, data).unwrap()
}

proptest! {
    /// BP is exact on trees: on 1xN chains its labeling energy equals the
    /// chain DP minimum, bit for bit.
    #[test]
    fn bp_exact_on_chains(
        n in 1usize..24,
        l in 2usize..12,
        seed_data in proptest::collection::vec(0.0f64..5.0, 0..1),
        lambda in 0.05f64..2.0,
        trunc in 0.5f64..6.0,
    ) {
        let _ = seed_data;
        let mut state = 0x9e3779b97f4a7c15u64
            ^ (n as u64) << 32 ^ (l as u64) << 16 ^ lambda.to_bits() ^ trunc.to_bits();
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / 9007199254740992.0
        };
        let data: Vec<f64> = (0..n * l).map(|_| 5.0 * next()).collect();
        let vol = volume(n, 1, l, data);
        let prior = PriorParams::new(trunc, lambda).unwrap();
        let (_, e_dp) = chain_dp(&vol, &prior).unwrap();
        let (_, diag) = run_bp(&vol, &prior, Schedule::RedBlack, 2 * n + 2, 1e-12).unwrap();
        prop_assert_eq!(e_dp.to_bits(), diag.energy.to_bits());
    }

    /// On loopy grids BP's energy never beats the exhaustive optimum.
    #[test]
    fn bp_bounded_below_by_exhaustive(
        w in 2usize..4,
        h in 2usize..4,
        l in 2usize..5,
        lambda in 0.0f64..1.5,
        trunc in 0.5f64..4.0,
    ) {
        let mut state = 0xdeadbeefcafef00du64
            ^ (w as u64) << 48 ^ (h as u64) << 32 ^ (l as u64) << 16
            ^ lambda.to_bits() ^ trunc.to_bits();
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / 9007199254740992.0
        };
        let data: Vec<f64> = (0..w * h * l).map(|_| next()).collect();
        let vol = volume(w, h, l, data);
        let prior = PriorParams::new(trunc, lambda).unwrap();
        let inst = TinyInstance::new(vol.clone(), prior).unwrap();
        let (_, e_opt) = exhaustive_map(&inst);
        let (_, diag) = run_bp(&vol, &prior, Schedule::RedBlack, 40, 1e-10).unwrap();
        prop_assert!(diag.energy >= e_opt - 1e-12);
    }
}

#[test]
fn both_schedules_agree_on_chains() {
    let mut state = 42u64;
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / 9007199254740992.0
    };
    for _ in 0..20 {
        let n = 2 + (next() * 14.0) as usize;
        let l = 2 + (next() * 6.0) as usize;
        let data: Vec<f64> = (0..n * l).map(|_| 3.0 * next()).collect();
        let vol = volume(n, 1, l, data);
        let prior = PriorParams::new(2.0, 0.5).unwrap();
        let (_, e_dp) = chain_dp(&vol, &prior).unwrap();
        for schedule in [Schedule::RedBlack, Schedule::Synchronous] {
            let (_, diag) = run_bp(&vol, &prior, schedule, 2 * n + 2, 1e-12).unwrap();
            assert_eq!(e_dp.to_bits(), diag.energy.to_bits(), "{schedule:?}");
        }
    }
}
