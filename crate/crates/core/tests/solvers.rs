mod common;

use bwmin_core::delay_bounds::{fifo_delay_shaped, sp_delay_shaped};
use bwmin_core::solvers::{
    all_minima, fifo_beats_sp_two_flow, fifo_bounds, min_bw_edf, min_bw_fifo, min_bw_fifo_shaped,
    min_bw_sp, min_bw_sp_shaped, sp_shaped_feasible, two_flow_closed_forms,
};
use bwmin_core::{FlowProfile, FlowSet};
use common::*;

#[test]
fn two_flow_general_matches_closed_forms() {
    let mut g = rng(11);
    for _ in 0..1000 {
        let (f1, f2) = random_pair(&mut g);
        let cf = two_flow_closed_forms(&f1, &f2).unwrap();
        let fs = FlowSet::new(vec![f1, f2]).unwrap();
        let m = all_minima(&fs).unwrap();
        assert!(rel(cf.edf, m.edf) < 1e-9, "{f1:?} {f2:?}");
        assert!(rel(cf.sp, m.sp) < 1e-9);
        assert!(rel(cf.sp_shaped, m.sp_shaped) < 1e-6, "{cf:?} {m:?}");
        assert!(rel(cf.fifo, m.fifo) < 1e-9);
        assert!(
            rel(cf.fifo_shaped, m.fifo_shaped) < 1e-6,
            "{f1:?} {f2:?} {cf:?} {m:?}"
        );
    }
}

#[test]
fn sp_shaped_matches_greedy_oracle() {
    let mut g = rng(12);
    for n in 1..=9 {
        for _ in 0..40 {
            let fs = random_set(&mut g, n);
            let want = bisect(fs.total_rate(), min_bw_sp(&fs).r_min, |r| {
                sp_greedy_feasible(&fs, r)
            });
            let got = min_bw_sp_shaped(&fs).r_min;
            assert!(rel(want, got) < 1e-7, "n={n}: {want} vs {got}");
        }
    }
}

#[test]
fn fifo_shaped_matches_convex_oracle() {
    let mut g = rng(13);
    for n in 1..=7 {
        for _ in 0..30 {
            let fs = random_set(&mut g, n);
            let want = bisect(fs.total_rate(), min_bw_fifo(&fs).r_min, |r| {
                fifo_convex_feasible(&fs, r)
            });
            let got = min_bw_fifo_shaped(&fs).unwrap().r_min;
            assert!(rel(want, got) < 1e-7, "n={n}: {want} vs {got}");
        }
    }
}

#[test]
fn feasibility_is_monotone_at_probes() {
    let mut g = rng(14);
    for _ in 0..100 {
        let fs = random_set(&mut g, 5);
        let sp = min_bw_sp_shaped(&fs).r_min;
        let fifo = min_bw_fifo_shaped(&fs).unwrap().r_min;
        for k in 0..20 {
            let f = 1.0 + 0.05 * k as f64;
            assert!(sp_shaped_feasible(&fs, sp * f), "f={f} r={sp} {fs:?}");
            let fb = fifo_bounds(&fs, fifo * f).unwrap();
            assert!(fb.feasible(), "{fb:?} f={f} r={fifo} {fs:?}");
        }
    }
}

#[test]
fn ordering_chain_and_plans() {
    let mut g = rng(15);
    for k in 0..300 {
        let fs = random_set(&mut g, 2 + k % 7);
        let m = all_minima(&fs).unwrap();
        let tol = |v: f64| 1e-9 * v;
        assert!(fs.total_rate() <= m.edf + tol(m.edf));
        assert!(m.edf <= m.sp_shaped + tol(m.sp_shaped), "{m:?} {fs:?}");
        assert!(m.sp_shaped <= m.sp + tol(m.sp));
        assert!(m.edf <= m.fifo_shaped + tol(m.fifo_shaped));
        assert!(m.fifo_shaped <= m.fifo + tol(m.fifo));
        if m.sp == fs.total_rate() {
            assert_eq!(m.edf, m.sp);
        }

        let sp = min_bw_sp_shaped(&fs);
        let plan = sp.plan.clone().unwrap();
        assert_eq!(plan.bursts()[0], fs.flow(0).burst);
        let d = sp_delay_shaped(&fs, &plan, sp.r_min).unwrap();
        for (x, f) in d.iter().zip(fs.flows()) {
            assert!(*x <= f.deadline + 1e-6);
        }
        let fifo = min_bw_fifo_shaped(&fs).unwrap();
        let d = fifo_delay_shaped(&fs, fifo.plan.as_ref().unwrap(), fifo.r_min).unwrap();
        for (x, f) in d.iter().zip(fs.flows()) {
            assert!(*x <= f.deadline + 1e-6, "{d:?} {fs:?}");
        }
    }
}

#[test]
fn homogeneity() {
    let mut g = rng(16);
    for _ in 0..50 {
        let fs = random_set(&mut g, 4);
        let a = all_minima(&fs).unwrap();
        let b = all_minima(&fs.scaled(3.5).unwrap()).unwrap();
        assert!(rel(a.edf * 3.5, b.edf) < 1e-9);
        assert!(rel(a.sp * 3.5, b.sp) < 1e-9);
        assert!(rel(a.sp_shaped * 3.5, b.sp_shaped) < 1e-7);
        assert!(rel(a.fifo * 3.5, b.fifo) < 1e-9);
        assert!(rel(a.fifo_shaped * 3.5, b.fifo_shaped) < 1e-7);
    }
}

#[test]
fn predicate_matches_closed_form_sign() {
    let f1 = |d| FlowProfile::new(4.0, 10.0, d).unwrap();
    let f2 = |d| FlowProfile::new(10.0, 18.0, d).unwrap();
    let mut inside = 0;
    for i in 1..=200 {
        for j in 1..i {
            let (d1, d2) = (4.0 * i as f64 / 200.0, 4.0 * j as f64 / 200.0);
            let cf = two_flow_closed_forms(&f1(d1), &f2(d2)).unwrap();
            let beats = fifo_beats_sp_two_flow(&f1(d1), &f2(d2)).unwrap();
            let diff = cf.sp_shaped - cf.fifo_shaped;
            if diff.abs() > 1e-9 {
                assert_eq!(beats, diff > 0.0, "d=({d1},{d2}) diff={diff}");
            }
            inside += beats as usize;
        }
    }
    assert!(inside > 0);
}

#[test]
fn single_flow_all_equal() {
    let fs = set(&[(2.0, 6.0, 1.5)]);
    let m = all_minima(&fs).unwrap();
    for v in [m.edf, m.sp, m.sp_shaped, m.fifo, m.fifo_shaped] {
        assert!(rel(v, 4.0) < 1e-9, "{m:?}");
    }
    assert_eq!(min_bw_edf(&fs).r_min, 4.0);
}

#[test]
fn zero_bursts_need_only_rates() {
    let fs = set(&[(1.0, 0.0, 2.0), (2.0, 0.0, 1.0), (0.5, 0.0, 0.5)]);
    let m = all_minima(&fs).unwrap();
    for v in [m.edf, m.sp, m.sp_shaped, m.fifo, m.fifo_shaped] {
        assert_eq!(v, 3.5);
    }
}
