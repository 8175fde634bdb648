#![allow(dead_code)]

use calrank::{SubjectRecord, TrialData};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Small random dataset: `n` in 4..=50, 1 to 3 strata, 0 to 3 covariates,
/// about half the times on an integer grid so ties are common.
pub fn random_dataset(seed: u64) -> TrialData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(4..=50usize);
    let strata = rng.random_range(1..=3u32);
    let p = rng.random_range(0..=3usize);
    let tied = rng.random_bool(0.5);
    let subjects = (0..n)
        .map(|i| {
            let time = if tied {
                rng.random_range(1..=8) as f64
            } else {
                -(1.0 - rng.random::<f64>()).ln()
            };
            let arm = if i < 2 { i as u8 } else { rng.random_range(0..=1) };
            let x = (0..p).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
            SubjectRecord::new(time, rng.random_bool(0.7), arm, rng.random_range(0..strata), x)
        })
        .collect();
    TrialData::new(subjects).unwrap()
}

/// Observed-minus-expected events in arm 1 and the hypergeometric variance
/// without the ties correction, from 2x2 tables at each distinct event time
/// within each stratum.
pub fn classical_logrank(data: &TrialData, stratified: bool) -> (f64, f64) {
    let strata: Vec<Option<u32>> = if stratified {
        data.strata().into_iter().map(Some).collect()
    } else {
        vec![None]
    };
    let (mut oe, mut var) = (0.0, 0.0);
    for z in strata {
        let members: Vec<&SubjectRecord> = data
            .subjects()
            .iter()
            .filter(|s| z.is_none_or(|z| s.stratum == z))
            .collect();
        let mut times: Vec<f64> = members.iter().filter(|s| s.event).map(|s| s.time).collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        for t in times {
            let at_risk: Vec<_> = members.iter().filter(|s| s.time >= t).collect();
            let n = at_risk.len() as f64;
            let n1 = at_risk.iter().filter(|s| s.arm == 1).count() as f64;
            let dead: Vec<_> = members.iter().filter(|s| s.event && s.time == t).collect();
            let d = dead.len() as f64;
            let d1 = dead.iter().filter(|s| s.arm == 1).count() as f64;
            oe += d1 - d * n1 / n;
            var += d * (n1 / n) * (1.0 - n1 / n);
        }
    }
    (oe, var)
}

/// Breslow partial-likelihood score for the arm indicator, summed over
/// subjects with events, not divided by `n`.
pub fn breslow_score(data: &TrialData, theta: f64) -> f64 {
    let s = data.subjects();
    s.iter()
        .filter(|i| i.event)
        .map(|i| {
            let (mut num, mut den) = (0.0, 0.0);
            for j in s.iter().filter(|j| j.time >= i.time) {
                let w = (theta * j.arm as f64).exp();
                num += j.arm as f64 * w;
                den += w;
            }
            i.arm as f64 - num / den
        })
        .sum()
}

/// Per-subject derived outcomes computed directly from their defining sums:
/// for subject `i` in arm `j`, the jump weight at its own event time minus
/// the accumulated compensator over event times up to its follow-up time.
pub fn direct_outcomes(data: &TrialData, theta: f64, stratified: bool) -> Vec<f64> {
    let e = theta.exp();
    let s = data.subjects();
    s.iter()
        .map(|i| {
            let peers: Vec<_> = s
                .iter()
                .filter(|k| !stratified || k.stratum == i.stratum)
                .collect();
            let mut times: Vec<f64> = peers
                .iter()
                .filter(|k| k.event && k.time <= i.time)
                .map(|k| k.time)
                .collect();
            times.sort_by(f64::total_cmp);
            times.dedup();
            let mut value = 0.0;
            for t in times {
                let r1 = peers.iter().filter(|k| k.time >= t && k.arm == 1).count() as f64;
                let r0 = peers.iter().filter(|k| k.time >= t && k.arm == 0).count() as f64;
                let d = peers.iter().filter(|k| k.event && k.time == t).count() as f64;
                let sum = e * r1 + r0;
                let (w, rate) = if i.arm == 1 {
                    (r0 / sum, e * d / sum)
                } else {
                    (e * r1 / sum, d / sum)
                };
                if i.event && i.time == t {
                    value += w;
                }
                value -= w * rate;
            }
            value
        })
        .collect()
}

/// `P(T <= C)` in the Cox-model scenario at `theta = 0`, by Simpson's rule
/// over the normal linear predictor `s ~ N(0, 3 eta^2)`:
/// `1 - E[(exp(-10 l) - exp(-40 l)) / (30 l)]` with `l = ln 2 exp(s)`.
pub fn case_one_event_fraction(eta: f64) -> f64 {
    let sd = (3.0 * eta * eta).sqrt();
    let m = 4000;
    let (a, b) = (-10.0 * sd, 10.0 * sd);
    let h = (b - a) / m as f64;
    let f = |s: f64| {
        let l = std::f64::consts::LN_2 * s.exp();
        let survive = ((-10.0 * l).exp() - (-40.0 * l).exp()) / (30.0 * l);
        let dens = (-0.5 * (s / sd).powi(2)).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt());
        (1.0 - survive) * dens
    };
    let mut acc = f(a) + f(b);
    for k in 1..m {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

fn close(name: &str, a: f64, b: f64, tol: f64) -> Result<(), String> {
    if (a - b).abs() <= tol {
        Ok(())
    } else {
        Err(format!("{name}: {a:e} vs {b:e} (diff {:e}, tol {tol:e})", (a - b).abs()))
    }
}

/// Exact identities linking the score, its derivative, the derived outcomes
/// and the classical log-rank computation. Datasets without events or with
/// zero variance are skipped.
pub fn check_identities(data: &TrialData) -> Result<(), String> {
    use calrank::hazard::ScoreProfile;
    use calrank::logrank::{
        derived_outcomes, logrank_components, stratified_derived_outcomes,
        stratified_logrank_components,
    };
    use calrank::{adjusted_logrank, adjusted_stratified_logrank, logrank_test, stratified_logrank_test};

    if data.n_events() == 0 {
        return Ok(());
    }
    let n = data.n() as f64;
    let pooled = logrank_components(data).map_err(|e| e.to_string())?;
    let strat = stratified_logrank_components(data).map_err(|e| e.to_string())?;

    // (a) derived-outcome identity, pooled and stratified.
    let o = derived_outcomes(data).map_err(|e| e.to_string())?;
    close("U_L identity", pooled.u, o.signed_mean(data), 1e-12)?;
    let os = stratified_derived_outcomes(data).map_err(|e| e.to_string())?;
    close("U_SL identity", strat.u, os.signed_mean(data), 1e-12)?;
    for (k, theta) in [-0.7, 0.4].into_iter().enumerate() {
        for (stratified, profile) in [
            (false, ScoreProfile::unstratified(data)),
            (true, ScoreProfile::stratified(data)),
        ] {
            let u = profile.score(theta).unwrap();
            let ot = profile.derived_outcomes(data, theta).unwrap();
            close(&format!("U({theta}) identity #{k}"), u, ot.signed_mean(data), 1e-12)?;
            for (a, b) in ot.values.iter().zip(direct_outcomes(data, theta, stratified)) {
                close("direct outcome", *a, b, 1e-12)?;
            }
        }
    }

    // (b) classical log-rank equivalence.
    let (oe, var) = classical_logrank(data, false);
    close("O - E", n * pooled.u, oe, 1e-10)?;
    close("variance", n * pooled.sigma2, var, 1e-10)?;
    let (oe, var) = classical_logrank(data, true);
    close("stratified O - E", n * strat.u, oe, 1e-10)?;
    close("stratified variance", n * strat.sigma2, var, 1e-10)?;
    for theta in [-1.0, 0.3] {
        let u = ScoreProfile::unstratified(data).score(theta).unwrap();
        close("Breslow score", n * u, breslow_score(data, theta), 1e-10)?;
    }

    // (c) single-stratum collapse.
    let one = data.pooled();
    match (logrank_test(&one), stratified_logrank_test(&one)) {
        (Ok(a), Ok(b)) => {
            if a.statistic != b.statistic || a.se != b.se {
                return Err(format!("collapse: T_L {:?} vs T_SL {:?}", a, b));
            }
        }
        (Err(_), Err(_)) => {}
        (a, b) => return Err(format!("collapse availability: {a:?} vs {b:?}")),
    }
    if let (Ok(a), Ok(b)) = (
        adjusted_logrank(&one, None),
        adjusted_stratified_logrank(&one, None),
    ) {
        close("collapse T_CL vs T_CSL", a.statistic, b.statistic, 1e-12)?;
    }

    // (d) adjustment never inflates the standard error.
    if let (Ok(l), Ok(cl)) = (logrank_test(data), adjusted_logrank(data, None)) {
        if cl.se > l.se * (1.0 + 1e-14) {
            return Err(format!("se_CL {} > se_L {}", cl.se, l.se));
        }
    }
    if let (Ok(sl), Ok(csl)) = (
        stratified_logrank_test(data),
        adjusted_stratified_logrank(data, None),
    ) {
        if csl.se > sl.se * (1.0 + 1e-14) {
            return Err(format!("se_CSL {} > se_SL {}", csl.se, sl.se));
        }
    }

    // (e) score and derivative at zero.
    for (profile, c) in [
        (ScoreProfile::unstratified(data), pooled),
        (ScoreProfile::stratified(data), strat),
    ] {
        let (u0, g0) = profile.score_and_derivative(0.0).unwrap();
        close("U(0)", u0, c.u, 1e-14)?;
        close("g(0)", g0, c.sigma2, 1e-14)?;

        // (f) g against central differences of U.
        for theta in [-0.5, 0.0, 0.8] {
            let h = 1e-5;
            let fd = (profile.score(theta - h).unwrap() - profile.score(theta + h).unwrap()) / (2.0 * h);
            let g = profile.derivative(theta).unwrap();
            if g > 1e-8 {
                close("g vs finite difference", fd / g, 1.0, 1e-5)?;
            }
        }
    }
    Ok(())
}
