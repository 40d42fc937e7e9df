use std::f64::consts::PI;

use qsteer::ed::{self, ChainSpec, GroundSpaceOptions, Solver};
use qsteer::ellipsoid;
use qsteer::ising::{self, IsingPairState};
use qsteer::linalg;
use qsteer::obesity;
use qsteer::quadrature::QuadConfig;
use qsteer::scan::{self, IsingScanConfig, XxzScanConfig, XxzSource, RECORD_IDENTITY_TOL};

fn ising_scan(from: f64, to: f64, step: f64, k: usize) -> scan::Scan {
    let cfg = IsingScanConfig {
        from,
        to,
        step,
        k,
        ..Default::default()
    };
    scan::ising_scan(&cfg).unwrap()
}

#[test]
fn ising_pair_states_are_physical_on_grid() {
    for k in [1, 2, 3] {
        for i in 0..=40 {
            let lambda = i as f64 * 0.05;
            let p = ising::ising_pair_state(lambda, k, QuadConfig::default()).unwrap();
            let m = p.rho.matrix();
            assert!((m.trace().re - 1.0).abs() < 1e-12);
            assert!(linalg::hermitian_eigenvalues(m).iter().all(|&e| e > -1e-7), "lambda {lambda} k {k}");
            assert!((p.obesity_closed_form() - obesity::obesity(&p.rho)).abs() < 1e-9);
        }
    }
}

#[test]
fn ising_correlators_converge_under_tolerance_halving() {
    for lambda in [0.3, 0.7, 0.98, 1.02, 1.4, 1.9] {
        for k in [1, 2] {
            let coarse = ising::pair_correlators(lambda, k, QuadConfig::with_tol(1e-8)).unwrap();
            let fine = ising::pair_correlators(lambda, k, QuadConfig::with_tol(5e-9)).unwrap();
            for (a, b) in [(coarse.sz, fine.sz), (coarse.xx, fine.xx), (coarse.yy, fine.yy), (coarse.zz, fine.zz)] {
                assert!((a - b).abs() < 1e-6, "lambda {lambda} k {k}");
            }
        }
    }
}

#[test]
fn ising_limits() {
    let p = ising::pair_correlators(0.0, 1, QuadConfig::default()).unwrap();
    assert!((p.sz - 1.0).abs() < 1e-10);
    assert!(p.xx.abs() < 1e-10 && p.yy.abs() < 1e-10);
    let p = ising::pair_correlators(50.0, 1, QuadConfig::default()).unwrap();
    assert!(p.sz.abs() < 0.02);
    assert!((p.xx - 1.0).abs() < 0.02);
}

#[test]
fn ising_scan_records_are_consistent() {
    let s = ising_scan(0.0, 2.0, 0.02, 1);
    assert!(s.failures.is_empty());
    assert_eq!(s.records.len(), 101);
    for r in &s.records {
        let (Some(g), Some(v)) = (r.gamma_b, r.volume) else {
            assert!(r.param < 1e-12, "only lambda = 0 lacks an ellipsoid");
            continue;
        };
        assert!((v - ellipsoid::volume_from(g, r.omega)).abs() < RECORD_IDENTITY_TOL);
    }
    for a in &s.filter_audit {
        assert!(a.law_residual < RECORD_IDENTITY_TOL);
        if a.param > 0.01 {
            assert!(a.bloch_residual < 1e-9);
        }
    }
}

#[test]
fn volume_derivative_decomposes_on_ising_scan() {
    let s = ising_scan(0.0, 2.0, 0.01, 1);
    let checks = scan::volume_derivative_checks(&s.records);
    assert!(checks.len() > 150);
    for c in &checks {
        assert!(c.holds(), "{c:?}");
    }
}

#[test]
fn filter_functions_agree() {
    let s = ising_scan(0.05, 1.95, 0.1, 1);
    for r in &s.records {
        let (Some(direct), Some(paper), Some(of)) = (r.filter_fn_direct, r.filter_fn_paper, r.omega_filtered) else {
            panic!("filter columns missing at {}", r.param);
        };
        assert!((direct * r.omega - of).abs() < 1e-12);
        assert!(direct >= 1.0 - 1e-10);
        assert!(paper > 0.0);
    }
}

#[test]
fn ising_closed_form_filter_gain() {
    for lambda in [0.3, 0.9, 1.1, 1.7] {
        let p = ising::ising_pair_state(lambda, 1, QuadConfig::default()).unwrap();
        let f = qsteer::filtering::ising_optimal_filter(p.a_plus, p.a_minus).unwrap();
        let of = qsteer::filtering::filtered_obesity_direct(&p.rho, &f).unwrap();
        let w = obesity::obesity(&p.rho);
        assert!((of / w - p.filter_gain()).abs() < 1e-9, "lambda {lambda}");
    }
}

#[test]
fn thermodynamic_limit_matches_large_chain() {
    let gs = ed::ground_space(&ChainSpec::ising(12, 0.5).unwrap()).unwrap();
    for k in [1, 2] {
        let t = ising::pair_correlators(0.5, k, QuadConfig::default()).unwrap();
        let f = gs.pair_correlators(0, k).unwrap();
        for (a, b) in [(t.sz, f.sz_i), (t.xx, f.xx), (t.yy, f.yy), (t.zz, f.zz)] {
            assert!((a - b).abs() < 2e-2);
        }
        let pair = IsingPairState::from_correlators(&t).unwrap();
        assert!((pair.rho.matrix() - gs.pair_state(0, k).unwrap().matrix()).camax() < 2e-2);
    }
}

#[test]
fn energy_density_converges() {
    for spec in [ChainSpec::ising(10, 0.5), ChainSpec::xxz(10, 0.5)] {
        let spec = spec.unwrap();
        let small = ed::ground_space(&spec).unwrap();
        let big = ed::ground_space(&ChainSpec::new(spec.model, 12, spec.param).unwrap()).unwrap();
        assert!(big.energy < small.energy);
        let (e10, e12) = (small.energy_per_site(), big.energy_per_site());
        assert!((e10 - e12).abs() < 5e-2, "{:?}: {e10} vs {e12}", spec.model);
    }
}

#[test]
fn lanczos_matches_dense() {
    for spec in [ChainSpec::ising(8, 0.7), ChainSpec::xxz(8, -0.4), ChainSpec::xxz(8, -1.0)] {
        let spec = spec.unwrap();
        let dense = ed::ground_space_with(&spec, GroundSpaceOptions { solver: Solver::Dense, ..Default::default() }).unwrap();
        let lanczos =
            ed::ground_space_with(&spec, GroundSpaceOptions { solver: Solver::Lanczos, ..Default::default() }).unwrap();
        assert!((dense.energy - lanczos.energy).abs() < 1e-9);
        assert_eq!(dense.degeneracy, lanczos.degeneracy);
        let (a, b) = (dense.pair_state(0, 1).unwrap(), lanczos.pair_state(0, 1).unwrap());
        assert!((a.matrix() - b.matrix()).camax() < 1e-7);
    }
}

#[test]
fn ordered_ising_doublet_needs_gap_aware_tolerance() {
    let spec = ChainSpec::ising(10, 2.0).unwrap();
    let strict = ed::ground_space(&spec).unwrap();
    assert_eq!(strict.degeneracy, 1);
    let loose = ed::ground_space_with(&spec, GroundSpaceOptions { degeneracy_tol: 1e-2, ..Default::default() }).unwrap();
    assert_eq!(loose.degeneracy, 2);
}

#[test]
fn xxz_pairs_are_bell_diagonal_with_xy_symmetry() {
    for delta in [-0.8, -0.3, 0.0] {
        let gs = ed::ground_space(&ChainSpec::xxz(12, delta).unwrap()).unwrap();
        for k in [1, 2] {
            let p = gs.bell_diagonal_params(0, k).unwrap();
            assert!((p.c1 - p.c2).abs() < 1e-9, "delta {delta} k {k}");
            let rho = p.state();
            let v = ellipsoid::ellipsoid_volume(&rho).unwrap();
            assert!((v - 4.0 * PI / 3.0 * obesity::obesity_bell_diagonal(&p).powi(4)).abs() < 1e-9);
        }
    }
}

#[test]
fn xxz_table_source_reproduces_ed_scan() {
    let mut rows = Vec::new();
    for i in 0..=8 {
        let delta = -2.0 + 0.25 * i as f64;
        let gs = ed::ground_space(&ChainSpec::xxz(8, delta).unwrap()).unwrap();
        rows.extend(ed::correlator_rows(&gs).unwrap());
    }
    let mut buf = Vec::new();
    ed::write_correlator_table(&mut buf, &rows).unwrap();
    let rows = ed::read_correlator_table(buf.as_slice()).unwrap();
    let base = XxzScanConfig {
        from: -2.0,
        to: 0.0,
        step: 0.25,
        n: 8,
        source: XxzSource::Ed(Default::default()),
    };
    let from_ed = scan::xxz_scan(&base).unwrap();
    let from_table = scan::xxz_scan(&XxzScanConfig { source: XxzSource::Table(rows), ..base }).unwrap();
    assert!(from_table.failures.is_empty());
    for (a, b) in from_ed.records.iter().zip(&from_table.records) {
        assert!((a.omega - b.omega).abs() < 1e-12);
        assert_eq!(b.gamma_b, Some(1.0));
    }
}
