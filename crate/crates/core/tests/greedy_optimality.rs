use reduce_sched::greedy_uni::{brute_force_min_time, uni_greedy_schedule, uni_greedy_time, OracleLimits};
use reduce_sched::schedule::{is_correct, simulate, validate_uni};
use reduce_sched::{MachineParams, SegmentPlan};

fn plans(max_q: usize, max_size: u64) -> Vec<SegmentPlan> {
    let mut out = Vec::new();
    let mut current: Vec<Vec<u64>> = vec![vec![]];
    for _ in 0..max_q {
        let mut next = Vec::new();
        for prefix in &current {
            for s in 1..=max_size {
                let mut v = prefix.clone();
                v.push(s);
                out.push(SegmentPlan::new(v.clone()).unwrap());
                next.push(v);
            }
        }
        current = next;
    }
    out
}

#[test]
fn greedy_matches_exhaustive_search_on_small_instances() {
    let mut checked = 0;
    for p in 2..=4 {
        for (a, b, g) in [(0, 1, 0), (1, 1, 1), (2, 1, 0), (1, 0, 2), (0, 2, 1)] {
            let params = MachineParams::from_ints(p, a, b, g).unwrap();
            for plan in plans(2, 3) {
                let greedy = uni_greedy_time(&params, &plan);
                let best = brute_force_min_time(&params, &plan, OracleLimits::default()).unwrap();
                assert_eq!(greedy, best, "p={p} ({a},{b},{g}) {plan}");
                checked += 1;
            }
        }
    }
    assert_eq!(checked, 3 * 5 * 12);
}

#[test]
fn greedy_schedules_are_valid_and_correct() {
    for p in 2..=12 {
        let params = MachineParams::from_ints(p, 2, 1, 1).unwrap();
        for plan in plans(3, 2) {
            let s = uni_greedy_schedule(&params, &plan);
            assert_eq!(validate_uni(&s), Ok(()));
            assert!(is_correct(&s));
            assert_eq!(simulate(&s).unwrap().completion, uni_greedy_time(&params, &plan));
        }
    }
}
