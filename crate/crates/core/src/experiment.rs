//! Simulated multi-trial sweeps over actuator variants.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::actuator::{ActuatorSpec, ElongationData, ElongationSource};
use crate::arm::{add_noise, simulate_motion, ArmModel, Trajectory, TrialTiming};
use crate::design::{downselect, enumerate_paper_space, paper_constraints};
use crate::error::Result;
use crate::io::config::{ExperimentConfig, NoiseConfig};
use crate::metrics::{trial_metrics, TrialMetrics};
use crate::pneumatics::{
    classify_completion, cycle_profile, time_constant, Completion, PneumaticConfig, PressureSeries,
};

#[derive(Clone, Debug, PartialEq)]
pub struct Experiment {
    pub variants: Vec<ActuatorSpec>,
    pub data: ElongationData,
    pub pneumatics: PneumaticConfig,
    pub arm: ArmModel,
    pub timing: TrialTiming,
    pub trials: u32,
    pub seed: u64,
    pub noise: NoiseConfig,
    pub source: ElongationSource,
}

impl Experiment {
    /// The 18 down-selected variants under bundled defaults.
    pub fn standard(seed: u64) -> Self {
        Experiment {
            variants: downselect(&enumerate_paper_space(), &paper_constraints()).viable,
            data: ElongationData::default(),
            pneumatics: PneumaticConfig::default(),
            arm: ArmModel::default(),
            timing: TrialTiming::default(),
            trials: 10,
            seed,
            noise: NoiseConfig::default(),
            source: ElongationSource::default(),
        }
    }

    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let mut exp = Experiment::standard(cfg.seed);
        let variants = cfg.parsed_variants()?;
        if !variants.is_empty() {
            exp.variants = variants;
        }
        if let Some(path) = &cfg.pneumatics {
            exp.pneumatics = PneumaticConfig::from_path(path)?;
        }
        exp.arm = cfg.arm.apply(&exp.arm);
        exp.arm.validate()?;
        exp.timing.phase_s = cfg.phase_s;
        exp.trials = cfg.trials;
        exp.noise = cfg.noise;
        exp.source = cfg.elongation_source;
        Ok(exp)
    }

    /// Variants in report order, (p, n, shape).
    pub fn ordered_variants(&self) -> Vec<ActuatorSpec> {
        let mut v = self.variants.clone();
        v.sort_by(|a, b| a.report_cmp(b));
        v.dedup();
        v
    }
}

/// splitmix64 finaliser.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-trial seed derived from the run seed, the variant and the trial
/// number, independent of iteration order.
pub fn trial_seed(seed: u64, spec: &ActuatorSpec, trial: u32) -> u64 {
    let mut h = mix(seed);
    for part in [
        spec.shape as u64,
        spec.cell_length_cm.to_bits(),
        spec.n_cells as u64,
        trial as u64,
    ] {
        h = mix(h ^ part);
    }
    h
}

/// Multiplicative jitter 1 + cv·N(0, 1), clipped to ±4 cv.
fn jitter(rng: &mut ChaCha8Rng, cv: f64) -> f64 {
    if cv == 0.0 {
        return 1.0;
    }
    let z: f64 = Normal::new(0.0, 1.0).expect("unit normal").sample(rng);
    1.0 + cv * z.clamp(-4.0, 4.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialRun {
    pub trajectory: Trajectory,
    pub metrics: TrialMetrics,
}

/// One trial of one variant; `trial` counts from 1.
pub fn run_trial(exp: &Experiment, spec: &ActuatorSpec, trial: u32) -> Result<TrialRun> {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(exp.seed, spec, trial));
    let elongation = exp.data.elongation(spec, exp.source)? * jitter(&mut rng, exp.noise.elongation_cv);
    let tau = time_constant(spec, &exp.data.displacement, &exp.pneumatics)? / jitter(&mut rng, exp.noise.flow_cv);
    let clean = simulate_motion(elongation, tau, &exp.arm, exp.timing)?;
    let trajectory = add_noise(&clean, rng.next_u64(), exp.noise.sigma_pos_cm, exp.noise.sigma_acc_ms2)?;
    let metrics = trial_metrics(&trajectory, *spec, trial, None)?;
    Ok(TrialRun { trajectory, metrics })
}

/// Every trial of every variant, ordered by variant then trial.
pub fn run_sweep(exp: &Experiment) -> Result<Vec<TrialMetrics>> {
    let variants = exp.ordered_variants();
    let per_variant: Vec<Result<Vec<TrialMetrics>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = variants
            .iter()
            .map(|spec| {
                scope.spawn(move || {
                    (1..=exp.trials)
                        .map(|t| run_trial(exp, spec, t).map(|r| r.metrics))
                        .collect::<Result<Vec<_>>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation thread panicked"))
            .collect()
    });
    let mut out = Vec::with_capacity(variants.len() * exp.trials as usize);
    for rows in per_variant {
        out.extend(rows?);
    }
    Ok(out)
}

/// Noise-free inflate/vent pressure history of each variant.
pub fn pressure_series(exp: &Experiment) -> Result<Vec<PressureSeries>> {
    exp.ordered_variants()
        .iter()
        .map(|spec| {
            cycle_profile(
                spec,
                &exp.data.displacement,
                &exp.pneumatics,
                exp.timing.phase_s,
                exp.timing.dt_s,
            )
        })
        .collect()
}

/// Variants classified as unable to fully inflate or deflate.
pub fn incomplete_variants(exp: &Experiment) -> Result<Vec<ActuatorSpec>> {
    let mut out = Vec::new();
    for spec in exp.ordered_variants() {
        if classify_completion(&spec, &exp.data.displacement, &exp.pneumatics)? == Completion::Incomplete {
            out.push(spec);
        }
    }
    Ok(out)
}
