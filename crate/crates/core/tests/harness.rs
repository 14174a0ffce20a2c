use ibshell::harness::{
    convergence_rates, kernel_check, plate_check, rate, relative_difference, restrict_to_common_grid, spacetime_norm,
    ErrorSeries, KernelFault, Norm, PlateFault, StudyRecord, StudyReport,
};
use ibshell::Error;

type V = [f64; 3];

fn field(n: usize, f: impl Fn(usize) -> V) -> Vec<V> {
    (0..n).map(f).collect()
}

#[test]
fn restriction_picks_every_other_row() {
    let from = (641, 3);
    let x: Vec<usize> = (0..from.0 * from.1).collect();
    let y = restrict_to_common_grid(&x, from, (321, 3)).unwrap();
    assert_eq!(y.len(), 321 * 3);
    for k1 in 0..321 {
        for k2 in 0..3 {
            assert_eq!(y[k1 * 3 + k2], (2 * k1) * 3 + k2);
        }
    }
    assert_eq!(restrict_to_common_grid(&x, from, from).unwrap(), x);
    let c = vec![7.5; 17 * 5];
    assert!(restrict_to_common_grid(&c, (17, 5), (5, 3)).unwrap().iter().all(|&v| v == 7.5));
}

#[test]
fn restriction_rejects_non_nested_grids() {
    let x = vec![0.0; 1280 * 7];
    assert!(matches!(restrict_to_common_grid(&x, (1280, 7), (257, 7)), Err(Error::NonNested { .. })));
    assert!(matches!(restrict_to_common_grid(&x, (10, 7), (5, 7)), Err(Error::ShapeMismatch(_))));
}

#[test]
fn relative_difference_oracles() {
    let x0 = field(12, |i| [i as f64, 0.5, -1.0]);
    let x1 = field(12, |i| [i as f64 + 0.1 * (i as f64).sin(), 0.5 + 0.01 * i as f64, -1.0]);
    for p in Norm::ALL {
        assert_eq!(relative_difference(&x1, &x1, &x0, p).unwrap(), 0.0);
        assert!((relative_difference(&x1, &x0, &x0, p).unwrap() - 1.0).abs() < 1e-15);
    }
    // direct evaluation of the L2 ratio
    let eps = 1e-3;
    let x2: Vec<V> = x1.iter().map(|v| [v[0] + eps, v[1], v[2]]).collect();
    let num = (12.0 * eps * eps).sqrt();
    let den: f64 = x1.iter().zip(&x0).map(|(a, b)| (0..3).map(|c| (a[c] - b[c]).powi(2)).sum::<f64>()).sum::<f64>().sqrt();
    let e = relative_difference(&x1, &x2, &x0, Norm::L2).unwrap();
    assert!((e - num / den).abs() < 1e-12 * e);
    assert!(matches!(relative_difference(&x0, &x1, &x0, Norm::L1), Err(Error::ZeroDenominator)));
}

fn record(n: usize, dt: f64, times: &[f64], shift: impl Fn(f64) -> f64) -> StudyRecord {
    let mut r = StudyRecord::new(n, dt, (3, 2));
    for &t in times {
        r.push(t, field(6, |i| [t * i as f64 + shift(t), 0.0, 0.0])).unwrap();
    }
    r
}

#[test]
fn spacetime_norm_oracles() {
    let times = [0.0, 0.5, 1.0, 1.5, 2.0];
    let a = record(16, 4e-8, &times, |_| 0.0);
    for p in Norm::ALL {
        assert_eq!(spacetime_norm(&a, &a, p, (0.0, 2.0)).unwrap(), 0.0);
    }
    // a uniform gap g(t) on 6 nodes, one component
    let b = record(32, 2e-8, &times, |t| 0.1 * (1.0 + t));
    let l1 = spacetime_norm(&a, &b, Norm::L1, (1.0, 2.0)).unwrap();
    assert!((l1 - 6.0 * 0.1 * (2.0 + 2.5 + 3.0)).abs() < 1e-12);
    let linf = spacetime_norm(&a, &b, Norm::Inf, (1.0, 2.0)).unwrap();
    assert!((linf - 0.1 * (2.0 + 2.5 + 3.0)).abs() < 1e-12);
    // one sample time reduces to the plain norm
    let l2 = spacetime_norm(&a, &b, Norm::L2, (0.5, 0.5)).unwrap();
    assert!((l2 - 6f64.sqrt() * 0.15).abs() < 1e-12);

    let c = record(32, 2e-8, &[0.0, 0.5, 1.0, 1.5, 2.1], |_| 0.0);
    assert!(matches!(spacetime_norm(&a, &c, Norm::L1, (0.0, 2.0)), Err(Error::TimeSetMismatch)));
}

#[test]
fn rate_oracles() {
    assert!((rate(2.3984e-7, 9.6290e-8).unwrap() - 1.3166).abs() < 5e-5);
    assert_eq!(rate(1.0, 0.5).unwrap(), 1.0);
    assert_eq!(rate(4.0, 1.0).unwrap(), 2.0);
    assert!(matches!(rate(0.0, 1.0), Err(Error::ZeroNorm)));
    assert!(matches!(rate(1.0, 0.0), Err(Error::ZeroNorm)));
}

fn halving_runs() -> Vec<StudyRecord> {
    // run k sits 2^-k away from the limit, so successive gaps halve
    let times: Vec<f64> = (0..=8).map(|i| i as f64 * 0.25).collect();
    (0..3).map(|k| record(16 << k, 4e-8 / (1 << k) as f64, &times, move |t| t / (1 << k) as f64)).collect()
}

#[test]
fn study_rates_from_synthetic_runs() {
    let runs = halving_runs();
    for p in Norm::ALL {
        let r = convergence_rates(&runs, p, (1.0, 2.0)).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r[0] - 1.0).abs() < 1e-12, "{p}: {}", r[0]);
    }
    assert!(matches!(
        convergence_rates(&runs[..1], Norm::L1, (1.0, 2.0)),
        Err(Error::InsufficientRuns { needed: 3, got: 1 })
    ));
}

#[test]
fn error_series_skips_the_resting_start() {
    let runs = halving_runs();
    let s = ErrorSeries::between(&runs[0], &runs[1]).unwrap();
    assert_eq!(s.e[0], [None; 3]);
    assert_eq!(s.values(Norm::L1).len(), s.times.len() - 1);
}

#[test]
fn study_csv_round_trips() {
    let report = StudyReport::assemble(halving_runs(), (1.0, 2.0)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    report.write_csv(dir.path()).unwrap();

    let mut rd = csv::Reader::from_path(dir.path().join("study_norms.csv")).unwrap();
    assert_eq!(rd.headers().unwrap(), vec!["coarse", "fine", "norm", "value"]);
    let rows: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 2 * 3);
    assert_eq!(&rows[0][0], "4/16");
    assert_eq!(&rows[0][1], "2/32");
    for (row, want) in rows.iter().zip(report.pairs.iter().flat_map(|p| p.values)) {
        let v: f64 = row[3].parse().unwrap();
        assert_eq!(v, want);
        assert!(row[2].parse::<Norm>().is_ok());
    }

    let mut rd = csv::Reader::from_path(dir.path().join("study_rates.csv")).unwrap();
    assert_eq!(rd.headers().unwrap(), vec!["coarse", "mid", "fine", "norm", "rate"]);
    for row in rd.records() {
        let v: f64 = row.unwrap()[4].parse().unwrap();
        assert!((v - 1.0).abs() < 1e-6);
    }

    let mut rd = csv::Reader::from_path(dir.path().join("study_error.csv")).unwrap();
    assert_eq!(rd.headers().unwrap(), vec!["coarse", "fine", "t", "e1", "e2", "einf"]);
    let rows: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 2 * 9);
    assert_eq!(&rows[0][3], "");
    assert!(rows[1][3].parse::<f64>().is_ok());
}

#[test]
fn stock_checks_pass_and_faults_are_caught() {
    assert!(kernel_check(None).passed());
    assert!(!kernel_check(Some(KernelFault::SupportViolation)).passed());
    assert!(plate_check(None).unwrap().passed());
    assert!(!plate_check(Some(PlateFault::LambdaAsymmetry)).unwrap().passed());
}

#[test]
fn norm_names_parse() {
    assert_eq!("1".parse::<Norm>().unwrap(), Norm::L1);
    assert_eq!("2".parse::<Norm>().unwrap(), Norm::L2);
    assert_eq!("inf".parse::<Norm>().unwrap(), Norm::Inf);
    assert!(matches!("3".parse::<Norm>(), Err(Error::Config(_))));
}
