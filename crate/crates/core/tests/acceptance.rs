//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::f64::consts::PI;
use std::time::Instant;

use spinmetro::bayes::{
    avg_estimator_variance, bayes_crb, dynamic_range_sweep, optimal_measurement, posterior_variance, PriorDensity, SensorDesign,
};
use spinmetro::bounds::{jz, qfi};
use spinmetro::clock::{
    allan_deviation, instability, loglog_slope, prior_width_scan, psd_slope, run_servo_seeds, synthesize_noise, welch_psd, ClockConfig,
    ClockSensor, OscillatorNoiseSpec,
};
use spinmetro::decoherence::{
    allan_optimum, allan_qcrb, blocks_from_full, damp_dicke, damp_full, qfi_after_decay, scan_t, DecayParams, SQUEEZED_FAMILY_RATIOS,
};
use spinmetro::ensemble::{
    attenuated_bound, combined_estimator_variance, ghz_cascade_bound, scheme_attenuated, scheme_ghz_cascade,
};
use spinmetro::frequentist::{fisher_information, run_experiment, EstimationExperiment, EstimatorKind};
use spinmetro::measurement::{basis_jy, basis_parity, basis_phase_op, outcome_distribution, BasisLabel, MeasurementBasis, ParityQuadrature};
use spinmetro::rng::{random_density, random_pure, random_unitary, stream};
use spinmetro::states::{
    css_x, ghz, ghz_balanced, oat_optimum, sine_state, sss_ground, xi2, SqueezingParentParams, EXTREME_RATIO,
};
use spinmetro::{embed_full, DickeVector, Space, State};

type Check = Result<String, String>;

fn verdict(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rel(got: f64, want: f64) -> f64 {
    (got / want - 1.0).abs()
}

fn design(state: DickeVector, basis: MeasurementBasis) -> SensorDesign {
    SensorDesign::new(state.to_state(), basis).unwrap()
}

fn sql() -> Check {
    let n = 16;
    let r = 100;
    let start = Instant::now();
    let exp = EstimationExperiment {
        state: css_x(n).unwrap().to_state(),
        basis: basis_jy(n).unwrap(),
        estimator: EstimatorKind::Sme,
        phi_true: vec![0.0],
        r,
        trials: 10_000,
        seed: 1,
        interval: (-PI / 2.0, PI / 2.0),
    };
    let mse = run_experiment(&exp).unwrap()[0].mse;
    let secs = start.elapsed().as_secs_f64();
    let want = 1.0 / (r * n) as f64;
    let e = rel(mse, want);
    verdict(e <= 0.10 && secs < 60.0, format!("mse {mse:.4e} vs {want:.4e} (rel {e:.3}, limit 0.10), {secs:.1} s (limit 60)"))
}

fn heisenberg() -> Check {
    let n = 16;
    let r = 100;
    let parity = basis_parity(n, ParityQuadrature::X).unwrap();
    let plain = ghz(n).unwrap().to_state();
    let mut worst: f64 = 0.0;
    for i in 0..1001 {
        let phi = -PI + 2.0 * PI * i as f64 / 1000.0;
        let m = outcome_distribution(&plain, &parity, phi).unwrap().mean();
        worst = worst.max((m - (n as f64 * phi).cos()).abs());
    }
    let a = PI / (2.0 * n as f64);
    let exp = EstimationExperiment {
        state: ghz_balanced(n).unwrap().to_state(),
        basis: parity,
        estimator: EstimatorKind::Sme,
        phi_true: vec![PI / (4.0 * n as f64)],
        r,
        trials: 10_000,
        seed: 2,
        interval: (-a, a),
    };
    let mse = run_experiment(&exp).unwrap()[0].mse;
    let want = 1.0 / (r * n * n) as f64;
    let e = rel(mse, want);
    verdict(e <= 0.15 && worst <= 1e-10, format!("mse {mse:.4e} vs {want:.4e} (rel {e:.3}, limit 0.15); max |<Pi_x> - cos(N phi)| {worst:.1e}"))
}

fn squeezing() -> Check {
    let mut worst: f64 = 0.0;
    for n in [4usize, 8, 16] {
        let s = sss_ground(SqueezingParentParams { n_atoms: n, ratio: EXTREME_RATIO }).unwrap();
        worst = worst.max((xi2(&s).unwrap() - 2.0 / (n as f64 + 2.0)).abs());
    }
    let ns = [8.0, 16.0, 32.0, 64.0, 128.0];
    let mins: Vec<f64> = ns.iter().map(|&n| oat_optimum(n as usize).unwrap().1).collect();
    let slope = loglog_slope(&ns, &mins);
    verdict(
        worst <= 1e-6 && (slope + 2.0 / 3.0).abs() <= 0.1,
        format!("max |xi2 - 2/(N+2)| {worst:.1e} (limit 1e-6); OAT exponent {slope:.3} (want -0.667 +- 0.1)"),
    )
}

fn dynamic_range() -> Check {
    let n = 16;
    let nf = n as f64;
    let grid: Vec<f64> = (0..36).map(|i| 10f64.powf(-6.0 + 7.0 * i as f64 / 35.0)).collect();
    let sss = sss_ground(SqueezingParentParams { n_atoms: n, ratio: spinmetro::states::balanced_ratio(n).unwrap() }).unwrap();
    let designs = vec![
        ("css".to_string(), design(css_x(n).unwrap(), basis_jy(n).unwrap())),
        ("ghz".to_string(), design(ghz_balanced(n).unwrap(), basis_parity(n, ParityQuadrature::X).unwrap())),
        ("sine".to_string(), design(sine_state(n).unwrap(), basis_phase_op(n).unwrap())),
        ("sss".to_string(), design(sss, basis_jy(n).unwrap())),
    ];
    let t = dynamic_range_sweep(&designs, &grid, true).unwrap();
    let oqi = t.oqi.as_ref().unwrap();
    let iters = t.oqi_iterations.as_ref().unwrap();
    let (mut css_e, mut ghz_e, mut sine_r, mut env): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, f64::NEG_INFINITY);
    for (i, &d2) in grid.iter().enumerate() {
        if d2 <= 0.1 {
            css_e = css_e.max(rel(t.series[0].1[i], 1.0 / nf));
        }
        if d2 <= 1e-3 {
            ghz_e = ghz_e.max(rel(t.series[1].1[i], 1.0 / (nf * nf)));
        }
        if d2 <= 0.5 {
            sine_r = sine_r.max(t.series[2].1[i] / (PI * PI / ((nf + 1.0) * (nf + 1.0))));
        }
        let best = t.series.iter().map(|s| s.1[i]).fold(f64::INFINITY, f64::min);
        env = env.max(oqi[i] - best);
    }
    let max_iter = iters.iter().copied().max().unwrap_or(0);
    verdict(
        css_e <= 0.05 && ghz_e <= 0.10 && sine_r <= 1.1 && env <= 1e-8 && max_iter <= 50,
        format!(
            "CSS plateau rel {css_e:.3} (0.05), GHZ plateau rel {ghz_e:.3} (0.10), sine/(pi^2/(N+1)^2) {sine_r:.3} (1.1), OQI excess {env:.1e} (1e-8), OQI iterations {max_iter} (50)"
        ),
    )
}

fn personick() -> Check {
    let mut worst: f64 = 0.0;
    for n in [4, 8] {
        for delta in [0.1, 0.5, 1.0] {
            let prior = PriorDensity::gaussian(0.0, delta).unwrap();
            let st = css_x(n).unwrap().to_state();
            let (b, bound) = optimal_measurement(&st, &prior).unwrap();
            let got = posterior_variance(&SensorDesign::new(st, b).unwrap(), &prior);
            worst = worst.max((got - bound).abs());
        }
    }
    verdict(worst <= 1e-8, format!("max |post - bound| {worst:.1e} (limit 1e-8)"))
}

fn small_delta() -> Check {
    let n = 8;
    let delta: f64 = 0.01;
    let prior = PriorDensity::gaussian(0.0, delta).unwrap();
    let sss = sss_ground(SqueezingParentParams { n_atoms: n, ratio: 0.5 }).unwrap();
    let designs = [
        ("css", design(css_x(n).unwrap(), basis_jy(n).unwrap())),
        ("sss", design(sss, basis_jy(n).unwrap())),
        ("ghz", design(ghz_balanced(n).unwrap(), basis_parity(n, ParityQuadrature::X).unwrap())),
    ];
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, d) in &designs {
        let f = fisher_information(&d.state, &d.basis, 0.0).unwrap();
        let law = (delta * delta - posterior_variance(d, &prior)) / delta.powi(4);
        let e = rel(law, f);
        ok &= e <= 0.05;
        parts.push(format!("{name} rel {e:.4}"));
    }
    verdict(ok, format!("{} (limit 0.05)", parts.join(", ")))
}

fn multi_ensemble() -> Check {
    let prior = PriorDensity::gaussian(0.0, 0.01).unwrap();
    let att = combined_estimator_variance(&scheme_attenuated(48, 2).unwrap(), &prior).unwrap();
    let want_att = 8.0 / (5.0 * 48.0);
    let cas = combined_estimator_variance(&scheme_ghz_cascade(3).unwrap(), &prior).unwrap();
    let want_cas = 6.0 / (14.0 * 14.0 + 4.0 * 14.0);
    assert!((attenuated_bound(48, 2) - want_att).abs() < 1e-15 && (ghz_cascade_bound(3) - want_cas).abs() < 1e-15);
    let (ea, ec) = (rel(att, want_att), rel(cas, want_cas));
    verdict(ea <= 0.05 && ec <= 0.05, format!("attenuated n=2 rel {ea:.4}, cascade rel {ec:.4} (limit 0.05)"))
}

fn decoherence() -> Check {
    let mut worst: f64 = 0.0;
    let mut rng = stream(5, 0);
    for n in [2, 4, 6] {
        let random = DickeVector::normalized(n, random_pure(n + 1, &mut rng)).unwrap();
        for s in [css_x(n).unwrap(), ghz(n).unwrap(), random] {
            for g in [0.05, 0.2, 1.0] {
                let p = DecayParams::new(g).unwrap();
                let full = damp_full(&embed_full(&s).unwrap().to_density().unwrap(), p).unwrap();
                worst = worst.max(damp_dicke(&s, p).unwrap().max_abs_diff(&blocks_from_full(&full).unwrap()));
            }
        }
    }
    let n = 8;
    let mut states = vec![css_x(n).unwrap(), ghz(n).unwrap()];
    for r in SQUEEZED_FAMILY_RATIOS {
        states.push(sss_ground(SqueezingParentParams { n_atoms: n, ratio: r }).unwrap());
    }
    let grid: Vec<f64> = (0..20).map(|i| 0.005 * 1.35f64.powi(i)).collect();
    let mut rise: f64 = 0.0;
    for s in &states {
        let q = scan_t(&grid, |p| qfi_after_decay(s, p)).unwrap();
        for w in q.windows(2) {
            rise = rise.max(w[1] - w[0]);
        }
    }
    verdict(worst <= 1e-8 && rise <= 1e-8, format!("block vs Kraus max diff {worst:.1e} (1e-8); largest QFI rise {rise:.1e}"))
}

fn allan() -> Check {
    let n = 8;
    let nf = n as f64;
    let t = 1.0 / (20.0 * nf);
    let g = allan_qcrb(&ghz(n).unwrap(), t).unwrap() * nf * nf * t;
    let c = allan_qcrb(&css_x(n).unwrap(), t).unwrap() * nf * t;
    let (tg, _) = allan_optimum(&ghz(n).unwrap(), 1e-4, 10.0).unwrap();
    let (tc, _) = allan_optimum(&css_x(n).unwrap(), 1e-4, 10.0).unwrap();
    let (eg, ec) = (rel(g, 1.0), rel(c, 1.0));
    verdict(
        eg <= 0.05 && ec <= 0.05 && tg < tc,
        format!("GHZ / (1/(N^2 T)) {g:.4} (rel {eg:.4}), CSS / (1/(NT)) {c:.4} (rel {ec:.4}), limit 0.05; T_opt GHZ {tg:.3} < CSS {tc:.3}"),
    )
}

fn clock() -> Check {
    let start = Instant::now();
    let n = 16;
    let noise = OscillatorNoiseSpec::new(-1, 2.0 * 1.5 / n as f64, 16.0).unwrap();
    let cfg = ClockConfig::new(1.0, 1.0, 200_000, ClockSensor::Css { n_atoms: n }, 4).unwrap();
    // Allan variances pooled over independent runs; one run leaves ~50 averages at the longest tau
    let seeds: Vec<u64> = (0..8).collect();
    let runs: Vec<_> = run_servo_seeds(&cfg, &noise, &seeds).into_iter().map(Result::unwrap).collect();
    let slipped = runs.iter().any(|r| r.phase_slip);
    let m: Vec<usize> = (5..=12).map(|k| 1usize << k).collect();
    let mut var = vec![0.0; m.len()];
    let mut tau = Vec::new();
    for run in &runs {
        let a = allan_deviation(&run.residual_y(), run.cycle_time, &m).unwrap();
        for (v, s) in var.iter_mut().zip(&a.sigma_y) {
            *v += s * s / runs.len() as f64;
        }
        tau = a.tau;
    }
    let mut loop_e: f64 = 0.0;
    for (t, v) in tau.iter().zip(&var) {
        loop_e = loop_e.max(rel(v.sqrt(), instability(1.0 / (n as f64).sqrt(), 1.0, 1.0, 0.0, *t)));
    }

    let t_grid: Vec<f64> = (0..5).map(|i| 10f64.powf(i as f64 / 4.0)).collect();
    let big = ClockSensor::Css { n_atoms: 100_000 };
    let mut slopes = Vec::new();
    for (alpha, h) in [(-1, 0.006), (1, 4.5e-6)] {
        let cfg = ClockConfig::new(1.0, 1.0, 4000, big.clone(), 9).unwrap();
        let shape = OscillatorNoiseSpec::new(alpha, h, 16.0).unwrap();
        let w = prior_width_scan(&cfg, &shape, &t_grid).unwrap();
        slopes.push(loglog_slope(&t_grid, &w));
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = !slipped && loop_e <= 0.15 && (slopes[0] - 1.0).abs() <= 0.15 && (slopes[1] - 3.0).abs() <= 0.3 && secs < 300.0;
    verdict(
        ok,
        format!(
            "sigma_y rel err over tau 32..4096, 8 runs x 2e5 cycles: {loop_e:.3} (0.15); prior-width exponent {:.3} (1 +- 0.15), {:.3} (3 +- 0.3); {secs:.1} s (300)",
            slopes[0], slopes[1]
        ),
    )
}

fn noise() -> Check {
    let mut parts = Vec::new();
    let mut ok = true;
    for alpha in [-1, 0, 1] {
        let s = OscillatorNoiseSpec::new(alpha, 1e-2, 64.0).unwrap();
        let y = synthesize_noise(&s, (1 << 20) as f64 / 64.0, 11).unwrap();
        let (f, p) = welch_psd(&y, 64.0, 4096).unwrap();
        let slope = psd_slope(&f, &p, 64.0 * 8.0 / 4096.0, 16.0).unwrap();
        ok &= (slope - (-1.0 - alpha as f64)).abs() <= 0.1;
        parts.push(format!("alpha {alpha}: {slope:.3}"));
    }
    verdict(ok, format!("{} (want -1-alpha +- 0.1)", parts.join(", ")))
}

fn properties() -> Check {
    let mut r = stream(99, 0);
    let mut fi_excess: f64 = f64::NEG_INFINITY;
    for trial in 0..100 {
        let n = 2 + trial % 5;
        let sp = Space::symmetric(n);
        let d = n + 1;
        let state = if trial % 2 == 0 {
            State::pure(sp.clone(), random_pure(d, &mut r)).unwrap()
        } else {
            State::mixed(sp.clone(), random_density(d, 1 + trial % d, &mut r)).unwrap()
        };
        let basis = MeasurementBasis::from_columns(sp.clone(), random_unitary(d, &mut r), (0..d).map(|k| k as f64).collect(), BasisLabel::Computational).unwrap();
        let phi = 0.3 * (trial % 7) as f64 - 0.9;
        let f = fisher_information(&state, &basis, phi).unwrap();
        let q = qfi(&state, &jz(&sp)).unwrap();
        fi_excess = fi_excess.max(f - q - 1e-8 * q.max(1.0));
    }

    let n = 8;
    let named = [
        design(css_x(n).unwrap(), basis_jy(n).unwrap()),
        design(ghz_balanced(n).unwrap(), basis_parity(n, ParityQuadrature::X).unwrap()),
        design(sine_state(n).unwrap(), basis_phase_op(n).unwrap()),
        design(sss_ground(SqueezingParentParams { n_atoms: n, ratio: 0.5 }).unwrap(), basis_jy(n).unwrap()),
    ];
    let mut post_excess: f64 = f64::NEG_INFINITY;
    for d in &named {
        for delta in [0.01, 0.1, 0.5, 1.0, 2.0] {
            let p = PriorDensity::gaussian(0.0, delta).unwrap();
            post_excess = post_excess.max(posterior_variance(d, &p) - delta * delta);
            let _ = avg_estimator_variance(d, &p);
        }
    }

    let mut crb_gap: f64 = f64::INFINITY;
    for case in 0..50 {
        let n = 2 + case % 4;
        let sp = Space::symmetric(n);
        let state = State::pure(sp.clone(), random_pure(n + 1, &mut r)).unwrap();
        let basis = MeasurementBasis::from_columns(sp, random_unitary(n + 1, &mut r), (0..=n).map(|k| k as f64).collect(), BasisLabel::Computational).unwrap();
        let d = SensorDesign::new(state, basis).unwrap();
        let delta = 0.05 + 0.3 * (case % 7) as f64;
        let prior = PriorDensity::gaussian(0.0, delta).unwrap();
        let post = posterior_variance(&d, &prior);
        post_excess = post_excess.max(post - delta * delta);
        crb_gap = crb_gap.min(post - bayes_crb(&d, &prior).unwrap());
    }

    let mut add_err: f64 = 0.0;
    for (na, nb) in [(2usize, 3usize), (3, 3), (4, 4), (2, 6)] {
        let ra = random_density(1 << na, 2, &mut r);
        let rb = random_density(1 << nb, 3, &mut r);
        let qa = qfi(&State::mixed(Space::product(na), ra.clone()).unwrap(), &jz(&Space::product(na))).unwrap();
        let qb = qfi(&State::mixed(Space::product(nb), rb.clone()).unwrap(), &jz(&Space::product(nb))).unwrap();
        let sp = Space::product(na + nb);
        let q = qfi(&State::mixed(sp.clone(), ra.kronecker(&rb)).unwrap(), &jz(&sp)).unwrap();
        add_err = add_err.max((q - qa - qb).abs() / q.max(1.0));
    }
    verdict(
        fi_excess <= 0.0 && post_excess <= 1e-10 && crb_gap >= -1e-8 && add_err <= 1e-8,
        format!(
            "max FI - QFI {fi_excess:.1e}; max post - delta^2 {post_excess:.1e}; min post - BCRB {crb_gap:.1e}; QFI additivity rel err {add_err:.1e}"
        ),
    )
}

fn main() {
    let checks: [(&str, fn() -> Check); 12] = [
        ("standard quantum limit, CSS N=16 r=100", sql),
        ("Heisenberg limit, GHZ parity N=16 r=100", heisenberg),
        ("squeezing bound and OAT scaling", squeezing),
        ("dynamic range plateaus and OQI envelope, N=16", dynamic_range),
        ("Personick bound saturation", personick),
        ("small-prior expansion against classical FI", small_delta),
        ("multi-ensemble small-prior bounds", multi_ensemble),
        ("decoherence block backend and QFI monotonicity", decoherence),
        ("Allan QCRB short-time asymptotes and optima, N=8", allan),
        ("clock loop instability and prior-width exponent", clock),
        ("noise synthesis PSD slopes", noise),
        ("property suites", properties),
    ];
    let mut failed = 0;
    for (i, (name, f)) in checks.iter().enumerate() {
        let t = Instant::now();
        let (tag, detail) = match f() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("[{tag}] {:>2} {name}: {detail} [{:.1} s]", i + 1, t.elapsed().as_secs_f64());
    }
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
