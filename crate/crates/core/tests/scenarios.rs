use evoworld_core::action::INFO_BIT;
use evoworld_core::scenarios::circuit::{compile_boolean, synthesize};
use evoworld_core::scenarios::file;
use evoworld_core::scenarios::machines::{make_comm_chain, patroller_fragment, transporter_fragment};
use evoworld_core::scenarios::rule110::{build_rule110, run_rule110};
use evoworld_core::scenarios::verify::{check_patroller, check_terraformer, check_transporter, verify_circuits};
use evoworld_core::scenarios::{validate_placement, Fragment};
use evoworld_core::{SimConfig, WorldState};
use proptest::prelude::*;

/// Rule 110 by the textbook: look up bit `4l + 2c + r` of the number 110,
/// cells outside the row are 0.
fn oracle_history(initial: &[bool], steps: usize) -> Vec<Vec<bool>> {
    let mut rows = vec![initial.to_vec()];
    for _ in 0..steps {
        let prev = rows.last().unwrap();
        let n = prev.len();
        let next = (0..n)
            .map(|i| {
                let l = i > 0 && prev[i - 1];
                let c = prev[i];
                let r = i + 1 < n && prev[i + 1];
                let k = 4 * l as u32 + 2 * c as u32 + r as u32;
                110u32 & (1 << k) != 0
            })
            .collect();
        rows.push(next);
    }
    rows
}

fn simulate_rule110(initial: &[bool], steps: usize, grid: usize) -> Vec<Vec<bool>> {
    let frag = build_rule110(initial, grid).unwrap();
    assert!(validate_placement(&frag).is_empty());
    let mut w = frag.into_world(&SimConfig::default()).unwrap();
    run_rule110(&mut w, initial.len(), steps).unwrap()
}

#[test]
fn rule110_centred_seed_matches_oracle() {
    let mut init = vec![false; 61];
    init[30] = true;
    let got = simulate_rule110(&init, 100, 64);
    assert_eq!(got, oracle_history(&init, 100));
    // the pattern grows leftward only
    assert!(got[100][..30].iter().any(|&b| b));
    assert!(got[100][31..].iter().all(|&b| !b));
}

#[test]
fn rule110_outlives_the_grid_height() {
    // 40 generations on a 16-row grid: rows are reused, history still exact
    let init: Vec<bool> = (0..12).map(|i| i == 11 || i == 4).collect();
    assert_eq!(simulate_rule110(&init, 40, 16), oracle_history(&init, 40));
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn rule110_random_rows(init in prop::collection::vec(any::<bool>(), 1..=30)) {
        let got = simulate_rule110(&init, 40, 32);
        prop_assert_eq!(got, oracle_history(&init, 40));
    }

    #[test]
    fn synthesis_is_exact(n in 1usize..=4, bits in any::<u16>()) {
        let table: Vec<bool> = (0..1usize << n).map(|r| (bits >> r) & 1 == 1).collect();
        let e = synthesize(&table);
        for (r, &want) in table.iter().enumerate() {
            prop_assert_eq!(e.eval(r), want);
        }
        prop_assert!(e.depth() <= 2 * n);
    }
}

/// Brute force: run the compiled circuit on every input row.
fn circuit_outputs(table: &[bool], n: usize) -> (usize, Vec<bool>) {
    let c = compile_boolean(table, n).unwrap();
    assert!(validate_placement(&c.fragment).is_empty());
    let out = (0..1usize << n)
        .map(|row| {
            let mut w = c.fragment_for(row).into_world(&SimConfig::default()).unwrap();
            w.run(c.schedule as u64, |_, _| {}).unwrap();
            let v = w.robots[c.output].memory[INFO_BIT] > 0.5;
            w.run(3, |_, _| {}).unwrap();
            assert_eq!(w.robots[c.output].memory[INFO_BIT] > 0.5, v, "output moved after the schedule");
            v
        })
        .collect();
    (c.schedule, out)
}

#[test]
fn all_two_input_functions() {
    for f in 0u8..16 {
        let table: Vec<bool> = (0..4).map(|r| (f >> r) & 1 == 1).collect();
        let (_, got) = circuit_outputs(&table, 2);
        assert_eq!(got, table, "function {f:04b}");
    }
}

#[test]
fn xor_and_majority() {
    let xor: Vec<bool> = (0..4).map(|r: usize| (r & 1) ^ (r >> 1) == 1).collect();
    let (schedule, got) = circuit_outputs(&xor, 2);
    assert_eq!(got, xor);
    assert!(schedule <= 3);
    let maj: Vec<bool> = (0..8).map(|r: usize| r.count_ones() >= 2).collect();
    assert_eq!(circuit_outputs(&maj, 3).1, maj);
}

#[test]
fn output_is_not_ready_before_schedule() {
    // XOR of zero inputs is 0, but every gate starts holding 0 and NAND(0, 0) = 1
    let xor: Vec<bool> = (0..4).map(|r: usize| (r & 1) ^ (r >> 1) == 1).collect();
    let c = compile_boolean(&xor, 2).unwrap();
    assert!(c.schedule >= 2);
    let mut w = c.fragment_for(3).into_world(&SimConfig::default()).unwrap();
    let mut seen = Vec::new();
    for _ in 0..=c.schedule {
        seen.push(w.robots[c.output].memory[INFO_BIT] > 0.5);
        w.tick().unwrap();
    }
    assert!(!seen[c.schedule]);
    assert!(seen[..c.schedule].iter().any(|&b| b), "{seen:?}");
}

#[test]
fn twenty_random_three_input_tables() {
    let r = verify_circuits(11, 20, false).unwrap();
    assert!(r.passed(), "{r}");
    assert_eq!(r.checks.len(), 36);
}

#[test]
fn terraformer_sweep_raises_gain() {
    let (ok, detail) = check_terraformer(&SimConfig::default()).unwrap();
    assert!(ok, "{detail}");
}

#[test]
fn patroller_stays_on_its_segment() {
    let (ok, detail) = check_patroller(&SimConfig::default()).unwrap();
    assert!(ok, "{detail}");
    // independent bound: over 4 periods x never leaves [a, b + 1)
    let (a, b) = (3usize, 10usize);
    let mut w = patroller_fragment(a, b, 4, true, 16).into_world(&SimConfig::default()).unwrap();
    for _ in 0..4 * 2 * (b - a) {
        w.tick().unwrap();
        let x = w.robots[0].pos[0];
        assert!(x >= a as f32 && x < (b + 1) as f32, "x = {x}");
    }
}

#[test]
fn transporter_beats_walking() {
    let (ok, detail) = check_transporter(&SimConfig::default()).unwrap();
    assert!(ok, "{detail}");
}

#[test]
fn transported_agent_advances_every_substep() {
    let f = transporter_fragment(evoworld_core::ActionVector::ONES, 64);
    let mut w = f.into_world(&SimConfig::default()).unwrap();
    let mut last = w.agents[0].pos[0];
    for _ in 0..30 {
        w.tick().unwrap();
        let x = w.agents[0].pos[0];
        assert!(x > last, "{x} after {last}");
        last = x;
    }
}

fn chain_bits(w: &WorldState) -> Vec<bool> {
    w.robots.iter().map(|r| r.memory[INFO_BIT] > 0.5).collect()
}

#[test]
fn comm_chain_wavefront() {
    let n = 9;
    let mut w = make_comm_chain(n, true, 32).unwrap().into_world(&SimConfig::default()).unwrap();
    for t in 0..n {
        let want: Vec<bool> = (0..n).map(|j| j <= t).collect();
        assert_eq!(chain_bits(&w), want, "t = {t}");
        w.tick().unwrap();
    }
    w.robots[0].memory[INFO_BIT] = 0.0;
    for t in 0..n {
        let want: Vec<bool> = (0..n).map(|j| j > t).collect();
        assert_eq!(chain_bits(&w), want, "after flip, t = {t}");
        w.tick().unwrap();
    }
}

#[test]
fn chain_too_long_for_grid() {
    assert!(make_comm_chain(30, true, 32).is_err());
    assert!(make_comm_chain(20, true, 32).is_ok());
}

#[test]
fn scenario_text_runs_like_the_fragment() {
    let f: Fragment = transporter_fragment(evoworld_core::ActionVector::ONES, 32);
    let text = file::to_text(&f);
    let back = file::parse(&text).unwrap();
    let cfg = SimConfig::default();
    let mut a = f.into_world(&cfg).unwrap();
    let mut b = back.into_world(&cfg).unwrap();
    a.run(25, |_, _| {}).unwrap();
    b.run(25, |_, _| {}).unwrap();
    assert_eq!(a.checksum(), b.checksum());
}
