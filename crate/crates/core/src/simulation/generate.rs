//! Trial data generation for the simulation scenarios.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal, Uniform};

use crate::data::{SubjectRecord, TrialData};
use crate::error::Result;
use crate::randomization::AssignmentState;

use super::{Case, ScenarioConfig};

/// Coefficient of every component of `W` in the event-time model.
pub const ETA: f64 = 0.5;
/// Coefficient of every component of `W` in the covariate-dependent
/// censoring model.
pub const ETA_CENSOR: f64 = 0.2;
pub const W_DIM: usize = 3;

fn linear(coef: f64, w: &[f64; W_DIM]) -> f64 {
    coef * w.iter().sum::<f64>()
}

fn exp1<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Exp1.sample(rng)
}

/// Latent event time of a subject in `arm` with baseline vector `w`.
pub fn draw_event_time<R: Rng + ?Sized>(
    case: Case,
    theta: f64,
    arm: u8,
    w: &[f64; W_DIM],
    rng: &mut R,
) -> f64 {
    let shift = -theta * arm as f64 + linear(ETA, w);
    match case {
        Case::I | Case::II => {
            // Inverse CDF of a constant hazard: -ln(U) / rate.
            let u: f64 = 1.0 - rng.random::<f64>();
            -u.ln() / (std::f64::consts::LN_2 * shift.exp())
        }
        Case::III | Case::IV | Case::CrViolation { .. } => shift.exp() + exp1(rng),
    }
}

pub fn draw_censoring_time<R: Rng + ?Sized>(
    case: Case,
    arm: u8,
    w: &[f64; W_DIM],
    rng: &mut R,
) -> f64 {
    match case {
        Case::I | Case::III => Uniform::new(10.0, 40.0).expect("valid range").sample(rng),
        Case::II | Case::IV => 3.0 - 3.0 * arm as f64 + exp1(rng),
        Case::CrViolation { psi } => {
            let rate = 1.1f64.ln() * (-psi * arm as f64 + linear(ETA_CENSOR, w)).exp();
            exp1(rng) / rate
        }
    }
}

/// Level of `x` among the intervals cut by the sorted `cuts`.
pub fn discretize(x: f64, cuts: &[f64]) -> usize {
    cuts.iter().take_while(|&&c| x > c).count()
}

/// Draws one trial: baseline `W`, discretized margins `Z`, sequential
/// assignment under the configured scheme, then event and censoring times.
///
/// Subjects carry the third component of `W` as their only covariate and the
/// joint level of `Z` as their stratum.
pub fn generate_trial<R: Rng>(config: &ScenarioConfig, rng: &mut R) -> Result<TrialData> {
    config.validate()?;
    let n = config.n;
    let cuts = &config.z_cuts;
    let w: Vec<[f64; W_DIM]> = (0..n)
        .map(|_| std::array::from_fn(|_| StandardNormal.sample(rng)))
        .collect();
    let z: Vec<Vec<usize>> = w
        .iter()
        .map(|wi| cuts.iter().enumerate().map(|(m, c)| discretize(wi[m], c)).collect())
        .collect();

    let arms: Vec<u8> = {
        let mut state = AssignmentState::new(config.effective_scheme(), &mut *rng)?;
        z.iter().map(|zi| state.assign_next(zi)).collect::<Result<_>>()?
    };

    let subjects = (0..n)
        .map(|i| {
            let t = draw_event_time(config.case, config.theta, arms[i], &w[i], rng);
            let c = draw_censoring_time(config.case, arms[i], &w[i], rng);
            SubjectRecord::new(
                t.min(c),
                t <= c,
                arms[i],
                config.joint_level(&z[i]),
                vec![w[i][2]],
            )
        })
        .collect();
    TrialData::with_names(subjects, vec!["w3".to_string()])
}
