//! Acceptance criteria, one PASS/FAIL line each. Runs at the full default
//! bench geometry and grid.

use std::process::ExitCode;
use std::time::Instant;

use weakval::bench::{grid_vs_oracle, simulate_bench, BenchConfig, GridSpec, PointerField, SpinorField};
use weakval::jones::{predicted_weak_value, prepare_state, ObservableOp, PolarizationState};
use weakval::pointer::{
    method_readout, Axis, CouplingSpec, GaussianPointerSpec, JointState, Method, Sampling,
};
use weakval::readout::{calibrate, oracle_weak_value, SweepConfig, SweepPlan, SweepResult};
use weakval::{deg, Complex64};

const W: f64 = 306e-6;
const DELTA: f64 = 163e-6;

fn pointer() -> GaussianPointerSpec {
    GaussianPointerSpec::centered(W).unwrap()
}

fn sweep_thetas() -> Vec<f64> {
    (0..=30).map(|i| 3.0 * i as f64).collect()
}

struct Report {
    failed: usize,
}

impl Report {
    fn line(&mut self, id: &str, name: &str, pass: bool, detail: String) {
        if !pass {
            self.failed += 1;
        }
        println!("{} {id:<3} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    }
}

fn noiseless_sweep(delta: f64) -> (SweepPlan, SweepResult) {
    let plan = SweepPlan::new(&SweepConfig {
        delta,
        ..SweepConfig::default()
    })
    .unwrap();
    let result = plan.run();
    (plan, result)
}

fn max_oracle_gap(result: &SweepResult, delta: f64) -> f64 {
    result
        .rows
        .iter()
        .map(|r| {
            let o = oracle_weak_value(deg(r.theta_deg), delta, &pointer()).unwrap();
            (r.estimate.value - o).re.abs().max((r.estimate.value - o).im.abs())
        })
        .fold(0.0, f64::max)
}

fn criterion_1(r: &mut Report) {
    let start = Instant::now();
    let config = BenchConfig::default();
    let reference = simulate_bench(&PolarizationState::anti_diagonal(), DELTA, &pointer(), &config).unwrap();
    let displaced = simulate_bench(&PolarizationState::diagonal(), DELTA, &pointer(), &config).unwrap();
    let cal = calibrate(&[reference], &displaced).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let ok = (61.9..=63.7).contains(&cal.delta_x) && (166.0..=168.0).contains(&cal.sigma_x) && secs < 10.0;
    r.line(
        "1",
        "geometry cross-check",
        ok,
        format!(
            "δx'={:.3} px (need [61.9, 63.7]), σx'={:.3} px (need [166, 168]), σy'={:.2} px, {secs:.2} s (need < 10 s)",
            cal.delta_x, cal.sigma_x, cal.sigma_y
        ),
    );
}

fn criterion_2(r: &mut Report) {
    // Bound from the closed-form moments, before any image is rendered.
    let (mut ss_re, mut ss_im) = (0.0, 0.0);
    for t in sweep_thetas() {
        let d = oracle_weak_value(deg(t), DELTA, &pointer()).unwrap() - predicted_weak_value(deg(t));
        ss_re += d.re * d.re;
        ss_im += d.im * d.im;
    }
    let n = sweep_thetas().len() as f64;
    let bound = ((ss_re / n).sqrt() + 1e-3, (ss_im / n).sqrt() + 1e-3);

    let start = Instant::now();
    let (_, result) = noiseless_sweep(DELTA);
    let secs = start.elapsed().as_secs_f64();
    let dev = result.deviation_from_theory();
    let gap = max_oracle_gap(&result, DELTA);
    let ok = result.failed_points() == 0
        && dev.rms_re <= bound.0
        && dev.rms_im <= bound.1
        && gap < 1e-3
        && secs < 300.0;
    r.line(
        "2",
        "theory-curve reproduction",
        ok,
        format!(
            "RMS Re {:.4e} ≤ B {:.4e}, RMS Im {:.4e} ≤ B {:.4e}, max |pipeline − oracle| {gap:.2e} (need < 1e-3), {secs:.1} s",
            dev.rms_re, bound.0, dev.rms_im, bound.1
        ),
    );
}

fn criterion_3(r: &mut Report) {
    let max_err = |ratio: f64| {
        let (_, res) = noiseless_sweep(ratio * W);
        assert_eq!(res.failed_points(), 0);
        res.deviation_from_theory().max_abs
    };
    let e001 = max_err(0.01);
    r.line(
        "3a",
        "weak limit at δ/w = 0.01",
        e001 < 1e-3,
        format!("max |extracted − theory| = {e001:.3e} (need < 1e-3)"),
    );
    let (e01, e005) = (max_err(0.1), max_err(0.05));
    let factor = e01 / e005;
    r.line(
        "3b",
        "halving δ/w 0.1 → 0.05",
        (1.8..=2.2).contains(&factor),
        format!("max error {e01:.3e} → {e005:.3e}, factor {factor:.3} (need [1.8, 2.2])"),
    );
}

fn criterion_4(r: &mut Report) {
    let config = BenchConfig::default();
    let mut worst: f64 = 0.0;
    for t in sweep_thetas() {
        let rep = grid_vs_oracle(&prepare_state(deg(t)), DELTA, &pointer(), &config).unwrap();
        worst = worst.max(rep.max_discrepancy());
    }
    let grid = config.grid_for(&pointer());
    let psi = prepare_state(deg(12.0));
    let post = weakval::bench::bench_pointer(&psi, DELTA, &pointer()).unwrap();
    let (before, after) = PointerField::sample(&post, &grid).y_transform_energy();
    let parseval = (before - after).abs() / before;
    r.line(
        "4",
        "grid vs closed-form oracle",
        worst < 1e-3 && parseval < 1e-9,
        format!("max centroid/width discrepancy {worst:.3e} px (need < 1e-3), Parseval defect {parseval:.1e} (need < 1e-9)"),
    );
}

fn criterion_5(r: &mut Report) {
    let obs = ObservableOp::pi_d();
    let h = PolarizationState::horizontal();
    let d = DELTA / std::f64::consts::SQRT_2;
    let mut closed: f64 = 0.0;
    let mut grid_diff: f64 = 0.0;
    let grid = GridSpec::for_pointer(&pointer(), 256, 256);
    for t in sweep_thetas() {
        let psi = prepare_state(deg(t));
        let start = JointState::new(&psi, pointer());
        let xy = start.couple(Axis::X, d, &obs).couple(Axis::Y, d, &obs).postselect(&h).unwrap();
        let yx = start.couple(Axis::Y, d, &obs).couple(Axis::X, d, &obs).postselect(&h).unwrap();
        closed = closed.max(xy.max_difference(&yx).unwrap_or(f64::INFINITY));
        let s = SpinorField::product(&psi, &pointer(), &grid);
        let a = s.couple(Axis::X, d, &obs).couple(Axis::Y, d, &obs).postselect(&h);
        let b = s.couple(Axis::Y, d, &obs).couple(Axis::X, d, &obs).postselect(&h);
        let peak = a.data().iter().map(|v| v.norm()).fold(0.0, f64::max);
        grid_diff = grid_diff.max(a.max_abs_diff(&b) / peak);
    }
    r.line(
        "5",
        "coupling order commutes",
        closed <= 1e-12 && grid_diff <= 1e-12,
        format!("closed form {closed:.1e}, grid fields {grid_diff:.1e} relative (need ≤ 1e-12)"),
    );
}

fn criterion_6(r: &mut Report) {
    let coupling = CouplingSpec::walk_off(DELTA).unwrap();
    let h = PolarizationState::horizontal();
    let mut spread: f64 = 0.0;
    for t in sweep_thetas() {
        let psi = prepare_state(deg(t));
        let v: Vec<Complex64> = Method::ALL
            .iter()
            .map(|m| method_readout(*m, 1000, &psi, &coupling, &pointer(), &h, Sampling::Noiseless).unwrap().value)
            .collect();
        spread = spread.max((v[0] - v[2]).norm()).max((v[1] - v[2]).norm());
    }
    let psi = prepare_state(0.0);
    let budget = 20_000;
    let mut wins = 0;
    for seed in 0..100 {
        let e: Vec<_> = Method::ALL
            .iter()
            .map(|m| {
                method_readout(*m, budget, &psi, &coupling, &pointer(), &h, Sampling::Photons { seed }).unwrap()
            })
            .collect();
        let c = &e[2];
        if e[..2].iter().all(|ab| c.se_re <= ab.se_re && c.se_im <= ab.se_im) {
            wins += 1;
        }
    }
    r.line(
        "6",
        "method equivalence",
        spread <= 1e-10 && wins >= 95,
        format!("noiseless max |A/B − C| {spread:.1e} (need ≤ 1e-10), C has smallest errors in {wins}/100 seeds (need ≥ 95)"),
    );
}

fn criterion_7(r: &mut Report) {
    let (_, result) = noiseless_sweep(0.05 * W);
    let mut worst_fidelity: f64 = 1.0;
    let mut phase_ok = true;
    for row in &result.rows {
        let rec = PolarizationState::new(row.c_d, row.c_a).unwrap();
        worst_fidelity = worst_fidelity.min(rec.fidelity(&prepare_state(deg(row.theta_deg))));
        if row.c_d.norm() > 1e-9 && !(row.c_d.im.abs() <= 1e-12 && row.c_d.re >= 0.0) {
            phase_ok = false;
        }
    }
    r.line(
        "7",
        "direct-measurement round trip",
        worst_fidelity >= 0.999 && phase_ok && result.failed_points() == 0,
        format!("min fidelity {worst_fidelity:.6} (need ≥ 0.999), c_D real non-negative: {phase_ok}"),
    );
}

fn criterion_8(r: &mut Report) {
    let plan = SweepPlan::new(&SweepConfig {
        theta_start: 0.0,
        theta_end: 0.0,
        ..SweepConfig::default()
    })
    .unwrap();
    let seeds = 20u64;
    // (mean reported se, empirical sd) per component
    let stats = |photons: u64| {
        let rows: Vec<_> = (0..seeds)
            .map(|s| plan.run_with(Some(photons), 1000 + s).rows[0].clone())
            .collect();
        assert!(rows.iter().all(|r| r.is_ok()));
        let n = seeds as f64;
        let comp = |f: &dyn Fn(&weakval::readout::SweepRow) -> (f64, f64)| {
            let (vals, ses): (Vec<f64>, Vec<f64>) = rows.iter().map(f).unzip();
            let m = vals.iter().sum::<f64>() / n;
            let sd = (vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
            (ses.iter().sum::<f64>() / n, sd)
        };
        (
            comp(&|r| (r.estimate.value.re, r.estimate.se_re)),
            comp(&|r| (r.estimate.value.im, r.estimate.se_im)),
        )
    };
    let s4 = stats(10_000);
    let s5 = stats(100_000);
    let s6 = stats(1_000_000);
    let ratio_re = s6.0 .0 / s6.0 .1;
    let ratio_im = s6.1 .0 / s6.1 .1;
    let within2 = |x: f64| (0.5..=2.0).contains(&x);
    let root10 = 10f64.sqrt();
    let scale = [
        s4.0 .0 / s5.0 .0 / root10,
        s5.0 .0 / s6.0 .0 / root10,
        s4.1 .0 / s5.1 .0 / root10,
        s5.1 .0 / s6.1 .0 / root10,
    ];
    let scale_ok = scale.iter().all(|x| (x - 1.0).abs() <= 0.2);
    r.line(
        "8",
        "trial statistics",
        within2(ratio_re) && within2(ratio_im) && scale_ok,
        format!(
            "se/empirical sd at 1e6: Re {ratio_re:.2}, Im {ratio_im:.2} (need [0.5, 2]); se scaling vs √10: {:.3} {:.3} (Re), {:.3} {:.3} (Im) (need 1 ± 0.2)",
            scale[0], scale[1], scale[2], scale[3]
        ),
    );
}

fn main() -> ExitCode {
    let mut report = Report { failed: 0 };
    let criteria: [(&str, fn(&mut Report)); 8] = [
        ("1", criterion_1),
        ("2", criterion_2),
        ("3", criterion_3),
        ("4", criterion_4),
        ("5", criterion_5),
        ("6", criterion_6),
        ("7", criterion_7),
        ("8", criterion_8),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    for (id, run) in criteria {
        if filter.is_empty() || filter.iter().any(|f| f == id) {
            let t = Instant::now();
            run(&mut report);
            eprintln!("     criterion {id} took {:.1} s", t.elapsed().as_secs_f64());
        }
    }
    println!("acceptance: {} failing", report.failed);
    if report.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
