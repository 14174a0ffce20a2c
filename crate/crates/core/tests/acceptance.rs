//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs as a plain binary so the verdicts are always printed. Criteria
//! listed in `KNOWN_FAILURES` are reported but do not fail the target.

use std::process::ExitCode;

use ibshell::harness::{
    coupling_check, fluid_check, geometry_check, kernel_check, plate_check, run_convergence_study, run_wave,
    CheckReport, Norm, StudySpec, WaveSpec,
};
use ibshell::simulation::{ModelConfig, Simulation};

/// The scaled model shows no front moving toward the apex after the
/// rebound; see the project notes.
const KNOWN_FAILURES: &[usize] = &[8];

const RATE_BAND: (f64, f64) = (0.8, 1.6);

struct Verdicts(Vec<(usize, bool)>);

impl Verdicts {
    fn record(&mut self, id: usize, passed: bool, what: &str) {
        println!("{} criterion {id}: {what}", if passed { "PASS" } else { "FAIL" });
        self.0.push((id, passed));
    }

    fn check(&mut self, id: usize, report: ibshell::Result<CheckReport>) {
        match report {
            Ok(r) => {
                for line in r.failures() {
                    println!("    {}: {}", line.name, line.detail);
                }
                self.record(id, r.passed(), &format!("{} ({:.2?})", r.title, r.elapsed));
            }
            Err(e) => self.record(id, false, &format!("error: {e}")),
        }
    }
}

fn fixed_point() -> ibshell::Result<(f64, f64)> {
    let cfg = ModelConfig { n: 16, dt: 4e-8, impulse: false, ..Default::default() };
    let mut sim = Simulation::<f64>::new(&cfg)?;
    let x0 = sim.positions();
    sim.run(10, |_| Ok(()))?;
    let dx = sim.positions().iter().zip(&x0).flat_map(|(a, b)| (0..3).map(move |c| (a[c] - b[c]).abs())).fold(0.0, f64::max);
    Ok((dx, sim.fluid.max_speed()))
}

fn main() -> ExitCode {
    let mut v = Verdicts(Vec::new());

    v.check(1, Ok(kernel_check(None)));
    v.check(2, fluid_check(32, 100));
    v.check(3, plate_check(None));
    v.check(4, geometry_check(3));
    v.check(5, coupling_check(16, 64, 20));

    let spec = StudySpec::scaled(ModelConfig::default());
    match run_convergence_study(&spec) {
        Ok(r) => {
            for p in &r.pairs {
                println!("    {} vs {}: L1 {:.4e} L2 {:.4e} Linf {:.4e}", p.fine, p.coarse, p.values[0], p.values[1], p.values[2]);
            }
            let rates: Vec<Option<f64>> = Norm::ALL.iter().map(|&p| r.rate(0, p)).collect();
            let ok = [Norm::L1, Norm::L2]
                .iter()
                .all(|&p| r.rate(0, p).is_some_and(|x| (RATE_BAND.0..=RATE_BAND.1).contains(&x)));
            let shown: Vec<String> =
                Norm::ALL.iter().zip(&rates).map(|(p, x)| format!("L{p} {}", x.map_or("-".into(), |x| format!("{x:.4}")))).collect();
            v.record(6, ok, &format!("study rates {} within [{}, {}] in L1 and L2", shown.join(", "), RATE_BAND.0, RATE_BAND.1));

            for s in &r.errors {
                let e = s.values(Norm::L1);
                println!(
                    "    E(t) {} vs {}: L1 {:.3} -> {:.3}, settles L1 {} L2 {} Linf {}",
                    s.fine,
                    s.coarse,
                    e.first().copied().unwrap_or(f64::NAN),
                    e.last().copied().unwrap_or(f64::NAN),
                    s.settles(Norm::L1),
                    s.settles(Norm::L2),
                    s.settles(Norm::Inf)
                );
            }
            let ok = !r.errors.is_empty() && r.errors.iter().all(|s| s.settles(Norm::L1));
            v.record(7, ok, "E(t) last-quarter mean <= first-quarter mean for every adjacent pair (L1)");
        }
        Err(e) => {
            v.record(6, false, &format!("study error: {e}"));
            v.record(7, false, "no study");
        }
    }

    match run_wave(&WaveSpec::scaled()) {
        Ok(r) => {
            println!("    mean centreline omega at first snapshot {:.3e}", r.profiles[0].mean());
            println!("    arg-max rows {:?}, rebound at snapshot {}", r.argmax_rows(), r.rebound);
            let enough = r.profiles.len() >= 10;
            let ok = enough && r.initially_downward() && r.front_advances();
            v.record(
                8,
                ok,
                &format!(
                    "{} snapshots, initially downward {}, front advances after rebound {}",
                    r.profiles.len(),
                    r.initially_downward(),
                    r.front_advances()
                ),
            );
        }
        Err(e) => v.record(8, false, &format!("wave error: {e}")),
    }

    match fixed_point() {
        Ok((dx, du)) => v.record(9, dx < 1e-13 && du < 1e-13, &format!("rest state drift |dX| {dx:.1e}, |u| {du:.1e}")),
        Err(e) => v.record(9, false, &format!("error: {e}")),
    }

    let unexpected: Vec<usize> = v.0.iter().filter(|(id, ok)| !ok && !KNOWN_FAILURES.contains(id)).map(|(id, _)| *id).collect();
    let fixed: Vec<usize> = v.0.iter().filter(|(id, ok)| *ok && KNOWN_FAILURES.contains(id)).map(|(id, _)| *id).collect();
    if !fixed.is_empty() {
        println!("known failures now passing: {fixed:?}");
    }
    if unexpected.is_empty() {
        println!("acceptance: {} of {} criteria pass; known failures {:?}", v.0.iter().filter(|x| x.1).count(), v.0.len(), KNOWN_FAILURES);
        ExitCode::SUCCESS
    } else {
        println!("acceptance: unexpected failures {unexpected:?}");
        ExitCode::FAILURE
    }
}
