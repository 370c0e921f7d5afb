//! Figure data: fixed experiment configs plus the MLE histogram.

use std::f64::consts::PI;

use rayon::prelude::*;
use spinmetro::frequentist::{fisher_information, LikelihoodTable};
use spinmetro::measurement::{outcome_distribution, sample_counts};
use spinmetro::rng::stream;
use spinmetro::states::balanced_ratio;
use spinmetro::table::ResultTable;
use spinmetro::Error;

use crate::config::{
    DecayConfig, DesignsConfig, EnsembleConfig, EstimationConfig, ExperimentConfig, Kind, PhaseGrid, SensorConfig, SweepConfig,
};
use crate::experiments::{build_design, run, Tables};

pub const FIGURES: [(u8, &str); 9] = [
    (1, "CSS mean and variance of J_y versus phase, N = 16"),
    (2, "CSS estimation error, SME and MLE, r = 1, 10, 100, N = 16"),
    (3, "MLE estimate histogram against its gaussian limit, N = 4, r = 1000"),
    (4, "Squeezed-state estimation error for three squeezing ratios, N = 16"),
    (5, "GHZ parity estimation error, r = 1, 10, 100, N = 16"),
    (6, "Bayesian dynamic range of CSS, GHZ, sine, SSS and OQI designs, N = 16"),
    (7, "Attenuated and GHZ-cascade multi-ensemble schemes"),
    (8, "Fisher information under spontaneous emission, N = 8"),
    (9, "Allan-variance QCRB versus Ramsey time, N = 8"),
];

fn blank(kind: Kind, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        kind,
        seed,
        output: None,
        sensor: None,
        phase: None,
        estimation: None,
        prior: None,
        sweep: None,
        designs: None,
        oqi: None,
        ensemble: None,
        decay: None,
        clock: None,
        noise: None,
        xxz: None,
    }
}

fn sensor(state: &str, n: usize, readout: &str) -> SensorConfig {
    SensorConfig { state: state.into(), n_atoms: n, readout: readout.into(), ratio: None, chi_t: None, label: None }
}

fn sss(n: usize, ratio: f64, label: &str) -> SensorConfig {
    SensorConfig { ratio: Some(ratio), label: Some(label.into()), ..sensor("sss", n, "jy") }
}

fn estimation(s: SensorConfig, phase: PhaseGrid, estimator: &str, reps: Vec<usize>, trials: usize, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        sensor: Some(s),
        phase: Some(phase),
        estimation: Some(EstimationConfig { estimator: estimator.into(), repetitions: reps, trials, interval: None }),
        ..blank(Kind::Estimation, seed)
    }
}

/// Every config a figure is made of, with the file-name suffix of each.
pub fn configs(fig: u8, seed: u64) -> Result<Vec<(String, ExperimentConfig)>, Error> {
    let n = 16;
    let half = PhaseGrid { min: -PI / 2.0, max: PI / 2.0, points: 41 };
    let out = match fig {
        1 => vec![(
            String::new(),
            ExperimentConfig {
                sensor: Some(sensor("css", n, "jy")),
                phase: Some(PhaseGrid { min: -PI, max: PI, points: 401 }),
                ..blank(Kind::Response, seed)
            },
        )],
        2 => ["sme", "mle"]
            .iter()
            .map(|e| (e.to_string(), estimation(sensor("css", n, "jy"), half.clone(), e, vec![1, 10, 100], 10_000, seed)))
            .collect(),
        4 => {
            let nf = n as f64;
            [(1.0 / (nf * nf), "inv-n2"), (1.0 / nf.sqrt(), "inv-sqrt-n"), (balanced_ratio(n)?, "balanced")]
                .iter()
                .map(|&(r, name)| (name.to_string(), estimation(sss(n, r, name), half.clone(), "sme", vec![10], 1000, seed)))
                .collect()
        }
        5 => {
            let a = PI / (2.0 * n as f64);
            let grid = PhaseGrid { min: -a, max: a, points: 41 };
            vec![(String::new(), estimation(sensor("ghz-balanced", n, "parity-x"), grid, "sme", vec![1, 10, 100], 10_000, seed))]
        }
        6 => {
            let sensors = vec![
                sensor("css", n, "jy"),
                sensor("ghz-balanced", n, "parity-x"),
                sensor("sine", n, "phase-op"),
                sss(n, balanced_ratio(n)?, "sss_jy"),
            ];
            vec![(
                String::new(),
                ExperimentConfig {
                    designs: Some(DesignsConfig { oqi: true, sensors }),
                    sweep: Some(SweepConfig { delta2_min: 1e-6, delta2_max: 10.0, points: 36 }),
                    ..blank(Kind::DynamicRange, seed)
                },
            )]
        }
        7 => {
            let sweep = SweepConfig { delta2_min: 1e-5, delta2_max: 10.0, points: 31 };
            let scheme = |s: &str, n_total, n_groups, n_pairs| ExperimentConfig {
                ensemble: Some(EnsembleConfig { scheme: s.into(), n_total, n_groups, n_pairs }),
                sweep: Some(sweep.clone()),
                ..blank(Kind::MultiEnsemble, seed)
            };
            let mut v: Vec<(String, ExperimentConfig)> =
                (1..=3).map(|g| (format!("attenuated-{g}"), scheme("attenuated", Some(48), Some(g), None))).collect();
            v.push(("cascade".into(), scheme("ghz-cascade", None, None, Some(3))));
            v.push((
                "reference".into(),
                ExperimentConfig {
                    designs: Some(DesignsConfig { oqi: true, sensors: vec![sensor("ghz-balanced", 14, "parity-x")] }),
                    sweep: Some(sweep),
                    ..blank(Kind::DynamicRange, seed)
                },
            ));
            v
        }
        8 | 9 => {
            let (kind, t_max) = if fig == 8 { (Kind::DecayScan, 1.0) } else { (Kind::AllanQcrb, 10.0) };
            vec![(
                String::new(),
                ExperimentConfig {
                    decay: Some(DecayConfig { n_atoms: 8, t_min: 1e-3, t_max, points: 61, ratios: None }),
                    ..blank(kind, seed)
                },
            )]
        }
        _ => return Err(Error::invalid(format!("no figure {fig}; expected 1..9"))),
    };
    Ok(out)
}

/// All tables of one figure, keyed by file-name suffix.
pub fn figure(fig: u8, seed: u64) -> Result<Tables, Error> {
    if fig == 3 {
        return mle_histogram(4, 1000, 10_000, 0.0, seed);
    }
    let mut out = Vec::new();
    for (prefix, cfg) in configs(fig, seed)? {
        let hash = cfg.hash();
        for (suffix, mut t) in run(&cfg)? {
            t.set_meta("config_hash", hash.as_str());
            t.set_meta("figure", fig);
            let name = [prefix.as_str(), suffix.as_str()].iter().filter(|s| !s.is_empty()).copied().collect::<Vec<_>>().join("-");
            out.push((name, t));
        }
    }
    Ok(out)
}

/// Histogram of MLE estimates at fixed phase, beside the normal density of variance 1/(rF).
pub fn mle_histogram(n: usize, r: usize, trials: usize, phi: f64, seed: u64) -> Result<Tables, Error> {
    let s = sensor("css", n, "jy");
    let d = build_design(&s)?;
    let interval = (-PI / 2.0, PI / 2.0);
    let table = LikelihoodTable::new(&d.state, &d.basis, interval)?;
    let dist = outcome_distribution(&d.state, &d.basis, phi)?;
    let mut est: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(seed, t as u64);
            table.estimate(&sample_counts(&dist, r, &mut rng)).phi
        })
        .collect();
    est.sort_by(f64::total_cmp);
    let f = fisher_information(&d.state, &d.basis, phi)?;
    let sd = (1.0 / (r as f64 * f)).sqrt();
    let normal_cdf = |x: f64| 0.5 * (1.0 + libm::erf((x - phi) / (sd * std::f64::consts::SQRT_2)));
    let ks = est
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = normal_cdf(x);
            (c - i as f64 / trials as f64).abs().max(((i + 1) as f64 / trials as f64 - c).abs())
        })
        .fold(0.0, f64::max);

    let bins = 41;
    let (lo, hi) = (phi - 5.0 * sd, phi + 5.0 * sd);
    let w = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in &est {
        let k = ((x - lo) / w).floor();
        if k >= 0.0 && (k as usize) < bins {
            counts[k as usize] += 1;
        }
    }
    let mut t = ResultTable::new(["bin_center", "count", "density", "gaussian"]);
    for (k, &c) in counts.iter().enumerate() {
        let x = lo + (k as f64 + 0.5) * w;
        let g = (-(x - phi).powi(2) / (2.0 * sd * sd)).exp() / (sd * (2.0 * PI).sqrt());
        t.push(vec![x.into(), c.into(), (c as f64 / (trials as f64 * w)).into(), g.into()])?;
    }
    let params = serde_json::json!({ "figure": 3, "n_atoms": n, "r": r, "trials": trials, "phi": phi, "seed": seed });
    t.set_meta("config_hash", crate::config::hash_value(&params));
    t.set_meta("figure", 3);
    t.set_meta("n_atoms", n);
    t.set_meta("r", r);
    t.set_meta("trials", trials);
    t.set_meta("phi_true", phi);
    t.set_meta("fisher", f);
    t.set_meta("kolmogorov_distance", ks);
    Ok(vec![(String::new(), t)])
}
