//! Experiment runners: one result table (or several) per configuration.

use std::f64::consts::PI;

use rayon::prelude::*;
use spinmetro::bayes::{avg_estimator_variance, dynamic_range_sweep, oqi_best, oqi_default_inits, PriorDensity, SensorDesign, OQI_MAX_ITER, OQI_TOL};
use spinmetro::clock::{
    allan_deviation, octave_grid, run_servo, ClockConfig, ClockEstimator, ClockSensor, OscillatorNoiseSpec,
};
use spinmetro::decoherence::{allan_optimum, allan_qcrb, fi_after_decay, ghz_for_y_readout, qfi_after_decay, DecayParams, SQUEEZED_FAMILY_RATIOS};
use spinmetro::ensemble::{attenuated_bound, ghz_cascade_bound, scheme_attenuated, scheme_ghz_cascade, scheme_sweep};
use spinmetro::frequentist::{fisher_information, response_curve, run_experiment, EstimationExperiment, EstimatorKind};
use spinmetro::measurement::{basis_jy, basis_parity, basis_phase_op, spin_along, MeasurementBasis, ParityQuadrature};
use spinmetro::states::{css_x, ghz, ghz_balanced, oat_quench, sine_state, sss_ground, xi2, LatticeGeometry, SqueezingParentParams, XxzQuench};
use spinmetro::table::{Cell, ResultTable};
use spinmetro::{DickeVector, Error, Space, State};

use crate::config::{DecayConfig, ExperimentConfig, Kind, SensorConfig};

pub type Tables = Vec<(String, ResultTable)>;

pub fn build_state(s: &SensorConfig) -> Result<DickeVector, Error> {
    let n = s.n_atoms;
    match s.state.as_str() {
        "css" => css_x(n),
        "ghz" => ghz(n),
        "ghz-balanced" => ghz_balanced(n),
        "sine" => sine_state(n),
        "sss" => sss_ground(SqueezingParentParams { n_atoms: n, ratio: s.ratio.unwrap_or(0.0) }),
        "oat" => oat_quench(n, s.chi_t.unwrap_or(0.0)),
        other => Err(Error::invalid(format!("unknown state {other}"))),
    }
}

pub fn build_readout(s: &SensorConfig) -> Result<MeasurementBasis, Error> {
    let n = s.n_atoms;
    match s.readout.as_str() {
        "jy" => basis_jy(n),
        "jx" => spin_along(&Space::symmetric(n), 0.0),
        "parity-x" => basis_parity(n, ParityQuadrature::X),
        "parity-plus" => basis_parity(n, ParityQuadrature::Plus),
        "parity-minus" => basis_parity(n, ParityQuadrature::Minus),
        "phase-op" => basis_phase_op(n),
        other => Err(Error::invalid(format!("unknown readout {other}"))),
    }
}

pub fn build_design(s: &SensorConfig) -> Result<SensorDesign, Error> {
    SensorDesign::new(State::from(build_state(s)?), build_readout(s)?)
}

pub fn design_label(s: &SensorConfig) -> String {
    s.label.clone().unwrap_or_else(|| format!("{}_{}", s.state, s.readout).replace('-', "_"))
}

/// Monotone branch of the readout response around zero.
pub fn default_interval(s: &SensorConfig) -> (f64, f64) {
    let n = s.n_atoms as f64;
    match s.state.as_str() {
        "ghz" => (0.0, PI / n),
        "ghz-balanced" => (-PI / (2.0 * n), PI / (2.0 * n)),
        _ => (-PI / 2.0, PI / 2.0),
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<Tables, Error> {
    let mut tables = match cfg.kind {
        Kind::Response => response(cfg.sensor.as_ref().unwrap(), &cfg.phase.as_ref().unwrap().values())?,
        Kind::Estimation => estimation(cfg)?,
        Kind::DynamicRange => {
            let d = cfg.designs.as_ref().unwrap();
            dynamic_range(&d.sensors, &cfg.sweep.as_ref().unwrap().values(), d.oqi)?
        }
        Kind::Oqi => oqi(cfg.oqi.as_ref().unwrap().n_atoms, &cfg.sweep.as_ref().unwrap().values())?,
        Kind::MultiEnsemble => multi_ensemble(cfg)?,
        Kind::DecayScan => decay_scan(cfg.decay.as_ref().unwrap())?,
        Kind::AllanQcrb => allan(cfg.decay.as_ref().unwrap())?,
        Kind::ClockRun => clock(cfg)?,
        Kind::XxzSqueezing => xxz(cfg)?,
    };
    for (_, t) in tables.iter_mut() {
        t.set_meta("kind", cfg.kind.name());
        t.set_meta("seed", cfg.seed);
    }
    Ok(tables)
}

pub fn response(s: &SensorConfig, phi: &[f64]) -> Result<Tables, Error> {
    let d = build_design(s)?;
    let c = response_curve(&d.state, &d.basis, phi)?;
    let mut t = ResultTable::new(["phi", "mean", "variance", "fisher"]);
    for (i, &p) in phi.iter().enumerate() {
        t.push_reals(&[p, c.mean[i], c.var[i], fisher_information(&d.state, &d.basis, p)?])?;
    }
    t.set_meta("n_atoms", s.n_atoms);
    t.set_meta("design", design_label(s));
    Ok(vec![(String::new(), t)])
}

pub fn estimation(cfg: &ExperimentConfig) -> Result<Tables, Error> {
    let s = cfg.sensor.as_ref().unwrap();
    let e = cfg.estimation.as_ref().unwrap();
    let phi = cfg.phase.as_ref().unwrap().values();
    estimation_table(s, &e.estimator, &e.repetitions, e.trials, e.interval.map(|[a, b]| (a, b)), &phi, cfg.seed, cfg.prior.as_ref().map(|p| (p.mean, p.delta2)))
}

#[allow(clippy::too_many_arguments)]
pub fn estimation_table(
    s: &SensorConfig,
    estimator: &str,
    repetitions: &[usize],
    trials: usize,
    interval: Option<(f64, f64)>,
    phi: &[f64],
    seed: u64,
    prior: Option<(f64, f64)>,
) -> Result<Tables, Error> {
    let d = build_design(s)?;
    let kind = if estimator == "mle" { EstimatorKind::Mle } else { EstimatorKind::Sme };
    let mut t = ResultTable::new(["estimator", "r", "phi", "mse", "bias", "variance", "mse_stderr", "railed_fraction", "ambiguous_fraction", "crb"]);
    let fisher: Vec<f64> = phi.iter().map(|&p| fisher_information(&d.state, &d.basis, p)).collect::<Result<_, _>>()?;
    for (k, &r) in repetitions.iter().enumerate() {
        let exp = EstimationExperiment {
            state: d.state.clone(),
            basis: d.basis.clone(),
            estimator: kind,
            phi_true: phi.to_vec(),
            r,
            trials,
            seed: seed.wrapping_add(k as u64 * 0x9E37_79B9),
            interval: interval.unwrap_or_else(|| default_interval(s)),
        };
        for (st, f) in run_experiment(&exp)?.iter().zip(&fisher) {
            let crb = if *f > 0.0 { 1.0 / (r as f64 * f) } else { f64::INFINITY };
            t.push(vec![
                estimator.into(),
                r.into(),
                st.phi_true.into(),
                st.mse.into(),
                st.bias.into(),
                st.variance.into(),
                st.mse_stderr.into(),
                st.railed_fraction.into(),
                st.ambiguous_fraction.into(),
                crb.into(),
            ])?;
        }
    }
    t.set_meta("n_atoms", s.n_atoms);
    t.set_meta("design", design_label(s));
    t.set_meta("trials", trials);
    if let Some((m, d2)) = prior {
        let p = PriorDensity::gaussian(m, d2.sqrt())?;
        t.set_meta("bayes_avg_estimator_variance", avg_estimator_variance(&d, &p));
    }
    Ok(vec![(String::new(), t)])
}

pub fn dynamic_range(sensors: &[SensorConfig], grid: &[f64], with_oqi: bool) -> Result<Tables, Error> {
    let designs: Vec<(String, SensorDesign)> = sensors.iter().map(|s| Ok((design_label(s), build_design(s)?))).collect::<Result<_, Error>>()?;
    let r = dynamic_range_sweep(&designs, grid, with_oqi)?;
    let mut cols = vec!["delta2".to_string()];
    cols.extend(r.series.iter().map(|s| s.0.clone()));
    if with_oqi {
        cols.push("oqi".into());
        cols.push("oqi_iterations".into());
    }
    cols.push("ctl".into());
    let mut t = ResultTable::new(cols);
    for i in 0..grid.len() {
        let mut row: Vec<Cell> = vec![grid[i].into()];
        row.extend(r.series.iter().map(|s| Cell::Real(s.1[i])));
        if let (Some(o), Some(it)) = (&r.oqi, &r.oqi_iterations) {
            row.push(o[i].into());
            row.push(it[i].into());
        }
        row.push(r.ctl[i].into());
        t.push(row)?;
    }
    t.set_meta("n_atoms", sensors[0].n_atoms);
    Ok(vec![(String::new(), t)])
}

pub fn oqi(n: usize, grid: &[f64]) -> Result<Tables, Error> {
    let inits = oqi_default_inits(n)?;
    let rows: Vec<_> = grid
        .par_iter()
        .map(|&d2| {
            let p = PriorDensity::gaussian(0.0, d2.sqrt())?;
            oqi_best(&p, &inits, OQI_TOL, OQI_MAX_ITER)
        })
        .collect::<Result<_, Error>>()?;
    let mut t = ResultTable::new(["delta2", "avg_estimator_variance", "posterior_variance", "iterations", "converged"]);
    for (d2, r) in grid.iter().zip(&rows) {
        t.push(vec![(*d2).into(), r.avg_estimator_variance.into(), r.posterior_variance.into(), r.iterations.into(), (r.converged as usize).into()])?;
    }
    t.set_meta("n_atoms", n);
    Ok(vec![(String::new(), t)])
}

pub fn multi_ensemble(cfg: &ExperimentConfig) -> Result<Tables, Error> {
    let e = cfg.ensemble.as_ref().unwrap();
    let grid = cfg.sweep.as_ref().unwrap().values();
    let (partition, order, bound) = match e.scheme.as_str() {
        "attenuated" => {
            let (n, g) = (e.n_total.unwrap(), e.n_groups.unwrap());
            (scheme_attenuated(n, g)?, g as u32, attenuated_bound(n, g))
        }
        _ => {
            let p = e.n_pairs.unwrap();
            (scheme_ghz_cascade(p)?, 1, ghz_cascade_bound(p))
        }
    };
    let t = ensemble_table(&partition, &grid, order, bound)?;
    Ok(vec![(String::new(), t)])
}

pub fn ensemble_table(partition: &spinmetro::ensemble::EnsemblePartition, grid: &[f64], order: u32, bound: f64) -> Result<ResultTable, Error> {
    let s = scheme_sweep(partition, grid, order)?;
    let mut t = ResultTable::new(["delta2", "prescribed", "per_group_optimal", "joint_optimal", "ctl"]);
    for i in 0..grid.len() {
        t.push_reals(&[grid[i], s.prescribed[i], s.per_group_optimal[i], s.joint_optimal[i], s.ctl[i]])?;
    }
    t.set_meta("n_atoms", partition.n_total());
    t.set_meta("groups", partition.groups().len());
    t.set_meta("small_prior_bound", bound);
    t.set_meta("ctl_order", order);
    Ok(t)
}

/// Named probe states of the decay figures.
pub fn decay_states(d: &DecayConfig) -> Result<Vec<(String, DickeVector)>, Error> {
    let n = d.n_atoms;
    let mut v = vec![("css".to_string(), css_x(n)?), ("ghz".to_string(), ghz_for_y_readout(n)?)];
    let ratios = d.ratios.clone().unwrap_or_else(|| SQUEEZED_FAMILY_RATIOS.to_vec());
    for r in ratios {
        v.push((format!("sss_{r}"), sss_ground(SqueezingParentParams { n_atoms: n, ratio: r })?));
    }
    Ok(v)
}

pub fn decay_scan(d: &DecayConfig) -> Result<Tables, Error> {
    let grid = crate::config::log_grid(d.t_min, d.t_max, d.points);
    let states = decay_states(d)?;
    let mut t = ResultTable::new(["state", "xi2", "t_over_ta", "fi", "qfi"]);
    for (name, s) in &states {
        let x = xi2(s).unwrap_or(f64::NAN);
        let rows: Vec<(f64, f64)> = grid
            .par_iter()
            .map(|&tt| {
                let p = DecayParams::new(tt)?;
                Ok((fi_after_decay(s, None, p, 0.0)?, qfi_after_decay(s, p)?))
            })
            .collect::<Result<_, Error>>()?;
        for (tt, (f, q)) in grid.iter().zip(rows) {
            t.push(vec![name.as_str().into(), x.into(), (*tt).into(), f.into(), q.into()])?;
        }
    }
    let n = d.n_atoms as f64;
    t.set_meta("n_atoms", d.n_atoms);
    t.set_meta("guide_css", 1.0 / n);
    t.set_meta("guide_squeezing_bound", 2.0 / (n * n + 2.0 * n));
    t.set_meta("guide_heisenberg", 1.0 / (n * n));
    Ok(vec![(String::new(), t)])
}

pub fn allan(d: &DecayConfig) -> Result<Tables, Error> {
    let grid = crate::config::log_grid(d.t_min, d.t_max, d.points);
    let states = decay_states(d)?;
    let mut curve = ResultTable::new(["state", "t_over_ta", "allan_qcrb"]);
    let mut opt = ResultTable::new(["state", "t_opt_over_ta", "allan_qcrb_min"]);
    for (name, s) in &states {
        let vals: Vec<f64> = grid.par_iter().map(|&tt| allan_qcrb(s, tt)).collect::<Result<_, Error>>()?;
        for (tt, v) in grid.iter().zip(vals) {
            curve.push(vec![name.as_str().into(), (*tt).into(), v.into()])?;
        }
        let (to, vo) = allan_optimum(s, d.t_min, d.t_max)?;
        opt.push(vec![name.as_str().into(), to.into(), vo.into()])?;
    }
    for t in [&mut curve, &mut opt] {
        t.set_meta("n_atoms", d.n_atoms);
        t.set_meta("normalization", "sigma_y^2 omega0^2 tau T_A");
    }
    Ok(vec![(String::new(), curve), ("optimum".into(), opt)])
}

pub fn clock_sensor(s: &SensorConfig) -> Result<ClockSensor, Error> {
    if s.state == "css" && s.readout == "jy" {
        Ok(ClockSensor::Css { n_atoms: s.n_atoms })
    } else {
        Ok(ClockSensor::Design(build_design(s)?))
    }
}

pub fn clock(cfg: &ExperimentConfig) -> Result<Tables, Error> {
    let c = cfg.clock.as_ref().unwrap();
    let n = cfg.noise.as_ref().unwrap();
    let s = cfg.sensor.as_ref().unwrap();
    let noise = OscillatorNoiseSpec::new(n.alpha, n.h_alpha, n.sample_rate)?;
    let est = if c.estimator == "sme" { ClockEstimator::Sme } else { ClockEstimator::Mmse };
    let cc = ClockConfig::new(c.omega0, c.t, c.cycles, clock_sensor(s)?, cfg.seed)?
        .with_dead_time(c.t_dead)?
        .with_gain(c.gain)?
        .with_estimator(est);
    clock_tables(&cc, &noise)
}

pub fn clock_tables(cc: &ClockConfig, noise: &OscillatorNoiseSpec) -> Result<Tables, Error> {
    let run = run_servo(cc, noise)?;
    let grid = octave_grid(run.records.len());
    let locked = allan_deviation(&run.residual_y(), run.cycle_time, &grid)?;
    let free = allan_deviation(&run.free_y, run.cycle_time, &grid)?;
    let mut series = run.series_table();
    let mut a = locked.table();
    let mut f = free.table();
    for t in [&mut series, &mut a, &mut f] {
        t.set_meta("n_atoms", cc.sensor.n_atoms());
        t.set_meta("omega0", cc.omega0);
        t.set_meta("t", cc.t);
        t.set_meta("t_dead", cc.t_dead);
        t.set_meta("gain", cc.gain);
        t.set_meta("alpha", noise.alpha);
        t.set_meta("h_alpha", noise.h_alpha);
    }
    Ok(vec![("series".into(), series), ("allan".into(), a), ("allan-free".into(), f)])
}

pub fn xxz(cfg: &ExperimentConfig) -> Result<Tables, Error> {
    let x = cfg.xxz.as_ref().unwrap();
    let geom = LatticeGeometry::new(x.extents.clone())?;
    let rows: Vec<(f64, f64, f64)> = x
        .chi_prime
        .par_iter()
        .map(|&cp| {
            let q = XxzQuench::new(&geom, x.alpha, x.chi, cp)?;
            let (t, v) = q.min_xi2(x.t_max, x.samples)?;
            Ok((cp, v, t))
        })
        .collect::<Result<_, Error>>()?;
    let mut t = ResultTable::new(["chi_prime", "min_xi2", "t_at_min"]);
    for r in rows {
        t.push_reals(&[r.0, r.1, r.2])?;
    }
    t.set_meta("n_atoms", geom.n_sites());
    t.set_meta("alpha", x.alpha);
    t.set_meta("chi", x.chi);
    Ok(vec![(String::new(), t)])
}
