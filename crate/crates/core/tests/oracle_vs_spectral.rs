use peltier_core::dynamics::ReducedModel;
use peltier_core::oracle::{compare, fd_solve, fd_steady, FieldGrid, OracleConfig, SolveOptions};
use peltier_core::spectral::ModalState;
use peltier_core::{PiecewiseControl, SystemParams};

fn mid_grid() -> OracleConfig {
    OracleConfig { nr: 12, nz: 120, pe_intervals: 8, dt: 0.1 }
}

#[test]
fn steady_profile_matches_the_oracle_limit() {
    let p = SystemParams::default();
    let m = ReducedModel::new(p, 4).unwrap();
    for u in [0.7, -0.9, 1.6] {
        let fd = fd_steady(u, &p, &mid_grid()).unwrap();
        let sp = m.steady_profile(u).unwrap();
        let synth = FieldGrid::from_fn(&p, &mid_grid(), |r, z| sp.field(&p, r, z)).unwrap();
        let rel = synth.v1_distance(&fd) / fd.v1_norm();
        assert!(rel < 3e-2, "u = {u}: {rel}");
        assert!((sp.v1_average(&p) - fd.v1_average()).abs() < 1e-2 * fd.v1_average().abs());
    }
}

#[test]
fn steady_face_jump_sign_agrees() {
    let p = SystemParams::default();
    let m = ReducedModel::new(p, 4).unwrap();
    let u_st = m.find_ust(5.5).unwrap();
    let (state, _) = m.initial_state(u_st, u_st).unwrap();
    let fd = fd_steady(u_st, &p, &mid_grid()).unwrap();
    assert!(state.face_jump() > 0.0);
    assert!(fd.face_jump() > 0.0);
}

#[test]
fn more_modes_track_the_oracle_more_closely() {
    let p = SystemParams::default();
    let cfg = mid_grid();
    let u_st = ReducedModel::new(p, 4).unwrap().find_ust(5.5).unwrap();
    let control = PiecewiseControl::constant(120.0, u_st).unwrap();
    let fd = fd_solve(&control, &FieldGrid::zeros(&p, &cfg).unwrap(), &p, &cfg, SolveOptions { sample_dt: 5.0, snapshot_every: 6 })
        .unwrap();
    let err = |k: usize| {
        let m = ReducedModel::new(p, k).unwrap();
        let spec = m.simulate(&control, &ModalState::zero(m.basis(u_st).unwrap()), 5.0).unwrap();
        compare(&spec, &fd).unwrap()
    };
    let (e4, e8) = (err(4), err(8));
    for ((t, a), b) in e4.times.iter().zip(&e4.field_rel_l2).zip(&e8.field_rel_l2) {
        if *t > 10.0 {
            assert!(b <= a, "t = {t}: K=8 {b} vs K=4 {a}");
        }
    }
}

#[test]
fn free_decay_from_the_steady_start_matches() {
    let p = SystemParams::default();
    let cfg = mid_grid();
    let m = ReducedModel::new(p, 4).unwrap();
    let u_st = m.find_ust(5.5).unwrap();
    let (init, _) = m.initial_state(u_st, 0.0).unwrap();
    let radial = m.radial();
    let start = FieldGrid::separable(
        &p,
        &cfg,
        |r| peltier_core::spectral::RadialFactors::profile(&radial, &p, r),
        |z| init.basis.axial_value(&init.coeffs, z),
    )
    .unwrap();
    let control = PiecewiseControl::constant(600.0, 0.0).unwrap();
    let spec = m.simulate(&control, &init, 10.0).unwrap();
    let fd = fd_solve(&control, &start, &p, &cfg, SolveOptions { sample_dt: 10.0, snapshot_every: 0 }).unwrap();
    let rep = compare(&spec, &fd).unwrap();
    for (t, e) in spec.times.iter().zip(&rep.norm_rel) {
        if *t >= 60.0 {
            assert!(*e < 2e-2, "t = {t}: {e}");
        }
    }
}

#[test]
fn oracle_compared_with_itself_is_exact() {
    let p = SystemParams::default();
    let cfg = OracleConfig { nr: 4, nz: 28, pe_intervals: 4, dt: 1.0 };
    let m = ReducedModel::new(p, 4).unwrap();
    let control = PiecewiseControl::constant(20.0, 1.0).unwrap();
    let spec = m.simulate(&control, &ModalState::zero(m.basis(1.0).unwrap()), 1.0).unwrap();
    let fd = fd_solve(&control, &FieldGrid::zeros(&p, &cfg).unwrap(), &p, &cfg, SolveOptions { sample_dt: 1.0, snapshot_every: 5 })
        .unwrap();
    for s in &fd.snapshots {
        assert_eq!(s.v1_distance(s), 0.0);
    }
    assert!(compare(&spec, &fd).is_ok());
}

#[test]
fn modal_start_matches_the_oracle_steady_field() {
    let p = SystemParams::default();
    let cfg = mid_grid();
    let m = ReducedModel::new(p, 4).unwrap();
    let u_st = m.find_ust(5.5).unwrap();
    let (init, _) = m.initial_state(u_st, 0.0).unwrap();
    let radial = m.radial();
    let synth = FieldGrid::separable(
        &p,
        &cfg,
        |r| peltier_core::spectral::RadialFactors::profile(&radial, &p, r),
        |z| init.basis.axial_value(&init.coeffs, z),
    )
    .unwrap();
    let fd = fd_steady(u_st, &p, &cfg).unwrap();
    assert!(synth.v1_distance(&fd) / fd.v1_norm() < 1e-2);
}

#[test]
fn mismatched_sampling_is_rejected() {
    let p = SystemParams::default();
    let cfg = OracleConfig { nr: 4, nz: 28, pe_intervals: 4, dt: 1.0 };
    let m = ReducedModel::new(p, 4).unwrap();
    let control = PiecewiseControl::constant(10.0, 0.5).unwrap();
    let spec = m.simulate(&control, &ModalState::zero(m.basis(0.5).unwrap()), 1.0).unwrap();
    let fd = fd_solve(&control, &FieldGrid::zeros(&p, &cfg).unwrap(), &p, &cfg, SolveOptions { sample_dt: 2.0, snapshot_every: 0 })
        .unwrap();
    assert!(matches!(compare(&spec, &fd), Err(peltier_core::Error::Sampling(_))));
}
