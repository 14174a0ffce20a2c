use ibshell::coupling::{interpolate_velocity, spread_force};
use ibshell::fluid::fluid_step;
use ibshell::shell::{compute_force, decompose_offset};
use ibshell::simulation::{
    clamp_force, clamp_mask, impulse_force, read_snapshot, write_snapshot, ModelConfig, Simulation, Snapshot,
    ThicknessLaw,
};
use ibshell::Error;

fn small(n: usize) -> ModelConfig {
    ModelConfig { n, dt: 4e-8, ..Default::default() }
}

#[test]
fn rest_state_is_a_fixed_point() {
    let cfg = ModelConfig { impulse: false, ..small(16) };
    let mut sim = Simulation::<f64>::new(&cfg).unwrap();
    let x0 = sim.positions();
    sim.run(10, |_| Ok(())).unwrap();
    let dx = sim.positions().iter().zip(&x0).flat_map(|(a, b)| (0..3).map(move |c| (a[c] - b[c]).abs())).fold(0.0, f64::max);
    assert!(dx < 1e-13);
    assert!(sim.fluid.max_speed() < 1e-13);
    assert_eq!(sim.shell.step, 10);
}

#[test]
fn one_step_equals_hand_chained_modules() {
    let cfg = small(16);
    let mut sim = Simulation::<f64>::new(&cfg).unwrap();
    // a nonzero starting displacement so every force term is active
    for (i, d) in sim.shell.displacement.iter_mut().enumerate() {
        let s = (i as f64 * 0.37).sin() * 1e-9;
        *d = [s, -0.5 * s, 0.25 * s];
    }
    let before = sim.shell.clone();
    let fluid0 = sim.fluid.clone();
    let params = Simulation::<f64>::fluid_params(&cfg);

    let x = before.positions(&sim.grid);
    let disp = decompose_offset(&before.displacement, &sim.geometry).unwrap();
    let elastic = compute_force(&disp, &sim.coefficients, &sim.geometry).unwrap();
    let springs = clamp_force(&before.displacement, &sim.grid.lattice, cfg.k_clamp, cfg.clamp_rows);
    let f: Vec<[f64; 3]> =
        elastic.cartesian.iter().zip(&springs).map(|(a, b)| [a[0] + b[0], a[1] + b[1], a[2] + b[2]]).collect();
    let mut body = spread_force(&f, &x, &sim.grid.lattice.areas(), &params).unwrap();
    body.add(&impulse_force(0, &cfg)).unwrap();
    let fluid1 = fluid_step(&fluid0, &body, &params).unwrap();
    let vel = interpolate_velocity(&fluid1.u, &x, &params).unwrap();

    sim.step().unwrap();
    let scale = fluid1.max_speed();
    for c in 0..3 {
        for (a, b) in sim.fluid.u[c].iter().zip(&fluid1.u[c]) {
            assert!((a - b).abs() <= 1e-12 * scale);
        }
    }
    for ((d, d0), v) in sim.shell.displacement.iter().zip(&before.displacement).zip(&vel) {
        for c in 0..3 {
            let want = d0[c] + cfg.dt * v[c];
            assert!((d[c] - want).abs() <= 1e-12 * want.abs().max(1e-30));
        }
    }
}

#[test]
fn total_energy_decays_without_forcing() {
    let cfg = ModelConfig { impulse: false, thickness_law: ThicknessLaw::Exact, ..small(32) };
    let mut sim = Simulation::<f64>::new(&cfg).unwrap();
    let (n1, n2) = (sim.grid.lattice.n1, sim.grid.lattice.n2);
    let mask = clamp_mask(n1, n2, cfg.clamp_rows);
    // smooth interior bump in the normal direction, zero on clamped rows
    for node in 0..n1 * n2 {
        if mask[node] {
            continue;
        }
        let (k1, k2) = (node / n2, node % n2);
        let s1 = (std::f64::consts::PI * k1 as f64 / (n1 - 1) as f64).sin();
        let s2 = (std::f64::consts::PI * k2 as f64 / (n2 - 1) as f64).sin();
        let amp = 1e-6 * (s1 * s2).powi(2);
        let nrm = sim.geometry.frame.normal[node];
        sim.shell.displacement[node] = nrm.map(|c| c * amp);
    }
    let initial = sim.energy().unwrap().total();
    assert!(initial > 0.0);
    // the edge stencils keep the discrete operator from being exactly
    // symmetric, so the quadratic form only decays on average
    let mut peak = initial;
    for _ in 0..600 {
        sim.step().unwrap();
        let e = sim.energy().unwrap();
        assert!(e.elastic >= 0.0 && e.kinetic >= 0.0 && e.spring >= 0.0);
        peak = peak.max(e.total());
    }
    assert!(peak < initial * (1.0 + 1e-3), "{peak:e} vs {initial:e}");
    assert!(sim.energy().unwrap().total() < initial * 0.999);
}

#[test]
fn impulse_pushes_the_shell_down() {
    let mut sim = Simulation::<f64>::new(&small(32)).unwrap();
    sim.run(50, |_| Ok(())).unwrap();
    let dz: f64 = sim.shell.displacement.iter().map(|d| d[2]).sum();
    assert!(dz < 0.0);
    let omega = sim.omega();
    assert!(omega.iter().sum::<f64>() < 0.0);
}

#[test]
fn impulse_is_independent_of_the_time_step() {
    let run = |dt: f64, steps: usize| {
        let cfg = ModelConfig { dt, ..small(16) };
        let mut sim = Simulation::<f64>::new(&cfg).unwrap();
        sim.run(steps, |_| Ok(())).unwrap();
        sim.fluid.u[2].iter().sum::<f64>() / sim.fluid.u[2].len() as f64
    };
    // right after the impulse step the mean flow carries the whole impulse
    let (a, b) = (run(4e-8, 1), run(1e-8, 1));
    assert!((a - b).abs() < 1e-10 * a.abs(), "{a} vs {b}");
}

#[test]
fn runaway_displacement_is_reported() {
    let cfg = ModelConfig { f_imp: 1e13, ..small(16) };
    let mut sim = Simulation::<f64>::new(&cfg).unwrap();
    let err = sim.run(50, |_| Ok(())).unwrap_err();
    assert!(matches!(err, Error::Unstable { .. }), "{err}");
}

#[test]
fn snapshot_round_trip() {
    let cfg = ModelConfig { n: 8, n1: Some(40), n2: Some(6), ..Default::default() };
    let mut sim = Simulation::<f64>::new(&cfg).unwrap();
    sim.run(3, |_| Ok(())).unwrap();
    let snap = Snapshot::capture(&sim);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.bin");
    write_snapshot(&snap, &path).unwrap();
    let back = read_snapshot(&path).unwrap();
    assert_eq!(back, snap);
    assert_eq!(ModelConfig::from_toml_str(&back.params).unwrap(), cfg);

    std::fs::write(&path, b"NOTASNAPSHOT").unwrap();
    assert!(matches!(read_snapshot(&path), Err(Error::Format(_))));
}

#[test]
fn single_precision_core_runs() {
    let cfg = ModelConfig { n: 8, n1: Some(40), n2: Some(6), ..Default::default() };
    let mut sim = Simulation::<f32>::new(&cfg).unwrap();
    sim.run(3, |_| Ok(())).unwrap();
    assert!(sim.fluid.is_finite());
    assert!(sim.omega().iter().sum::<f32>() < 0.0);
}

#[test]
fn config_round_trips_through_toml() {
    let cfg = ModelConfig { n: 64, thickness_law: ThicknessLaw::Exact, shell_offset: Some([0.01, 0.02, 0.03]), ..Default::default() };
    let text = cfg.to_toml_string();
    assert_eq!(ModelConfig::from_toml_str(&text).unwrap(), cfg);
    assert!(ModelConfig::from_toml_str("bogus = 1").is_err());
    assert!(ModelConfig::from_toml_str("n = 24").is_err());
}
