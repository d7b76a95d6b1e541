use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use crate::analysis::{floor_bound_general, CyclePredicate, Verdict};
use crate::channel::{initial_message_into, ChannelModel};
use crate::decoder::{DecodeResult, Decoder, DecoderConfig};
use crate::error::{Error, Result};
use crate::gf::FieldParams;
use crate::graph::{expurgate, TannerGraph};

use super::{
    trial_rng, Engine, EnsembleExperiment, Experiment, SERRecord, SerEstimate, SimConfig, ZigzagExperiment,
    FIXED_CODE_STREAM,
};

/// Runs trials `0..max_trials` in chunks until the budget or the stopping rule.
fn run_point<F>(cfg: &SimConfig, default_chunk: u64, trial: F) -> SerEstimate
where
    F: Fn(u64) -> Option<(u64, u64)> + Sync,
{
    let chunk = if cfg.chunk > 0 { cfg.chunk } else { default_chunk };
    let mut est = SerEstimate::default();
    let mut start = 0;
    while start < cfg.max_trials {
        let end = (start + chunk).min(cfg.max_trials);
        let outcomes: Vec<Option<(u64, u64)>> = (start..end).into_par_iter().map(&trial).collect();
        for o in outcomes {
            est.push(o);
        }
        start = end;
        if cfg.early_stop && est.converged(cfg.min_errors) {
            break;
        }
    }
    est
}

fn fill_llrs<R: Rng + ?Sized>(ch: &ChannelModel, out: &mut [f64], rng: &mut R) {
    for x in out.iter_mut() {
        *x = ch.sample_llr(rng);
    }
}

/// Simulates a single zigzag cycle code over the channel grid.
pub fn run_zigzag(exp: &ZigzagExperiment, cfg: &SimConfig) -> Result<Vec<SERRecord>> {
    cfg.validate()?;
    let field = FieldParams::new(exp.m)?;
    let gammas = exp.gammas(&field)?;
    let labels = exp.labels(&field)?;
    let m = exp.m as usize;
    let s = exp.s;
    let predicate = CyclePredicate::new(&field, &gammas)?;
    let graph = TannerGraph::zigzag_code(field.clone(), &labels)?;
    if exp.engine == Engine::Bp {
        let beta = gammas.iter().fold(crate::gf::FieldElement::ONE, |a, g| field.mul(a, *g));
        let period = s * field.order(beta)?;
        if cfg.decoder.ec_window < period {
            return Err(Error::Config(format!(
                "ec_window {} is shorter than one zigzag period s * order(beta) = {period}",
                cfg.decoder.ec_window
            )));
        }
    }
    let mut records = Vec::new();
    for &p in &cfg.grid {
        let ch = cfg.channel.model(p)?;
        let t0 = Instant::now();
        let est = match exp.engine {
            Engine::Predicate => run_point(cfg, 100_000, |t| {
                let mut rng = trial_rng(cfg.seed, t);
                let mut llrs = vec![0.0; s * m];
                fill_llrs(&ch, &mut llrs, &mut rng);
                let mut scratch = Vec::new();
                let failed = predicate.evaluate(&llrs, &mut scratch) == Verdict::NoneCorrect;
                Some((failed as u64, 1))
            }),
            Engine::Bp => run_point(cfg, 1_000, |t| {
                let mut rng = trial_rng(cfg.seed, t);
                let (errors, _) = decode_trial(&graph, &ch, &cfg.decoder, &mut rng).ok()?;
                if errors != 0 && errors != s as u64 {
                    log::warn!("trial {t}: {errors} of {s} symbols failed on a zigzag code");
                }
                Some(((errors > 0) as u64, 1))
            }),
        };
        let rec = SERRecord::from_estimate(p, &est, cfg.min_errors, None, cfg.seed, exp.engine, t0.elapsed().as_secs_f64());
        log::info!("zigzag p={p}: ser={:.3e} ({} / {})", rec.ser, rec.errors, rec.observed);
        records.push(rec);
    }
    Ok(records)
}

/// All-zero transmission over `ch`, BP decode; returns (errors, symbols).
fn decode_trial<R: Rng + ?Sized>(
    g: &TannerGraph,
    ch: &ChannelModel,
    dec: &DecoderConfig,
    rng: &mut R,
) -> Result<(u64, u64)> {
    let r = decode_once(g, ch, dec, rng)?;
    Ok((r.symbol_errors() as u64, g.n_vars() as u64))
}

fn decode_once<R: Rng + ?Sized>(
    g: &TannerGraph,
    ch: &ChannelModel,
    dec: &DecoderConfig,
    rng: &mut R,
) -> Result<DecodeResult> {
    let n = g.n_vars();
    let m = g.field().m() as usize;
    let q = g.field().q();
    let mut llrs = vec![0.0; n * m];
    fill_llrs(ch, &mut llrs, rng);
    let mut init = vec![0.0; n * q];
    for v in 0..n {
        initial_message_into(&llrs[v * m..(v + 1) * m], &mut init[v * q..(v + 1) * q])?;
    }
    let cfg = DecoderConfig { tie_break_seed: rng.gen(), ..*dec };
    let r = Decoder::new(g).decode_flat(&init, &cfg)?;
    if r.extinctions > 0 {
        log::debug!("{} message extinctions", r.extinctions);
    }
    Ok(r)
}

/// Replays one BP trial of the experiment at channel parameter `p` with the
/// per-iteration decision trace enabled.
pub fn trace_trial(cfg: &SimConfig, p: f64, trial: u64) -> Result<DecodeResult> {
    cfg.validate()?;
    let ch = cfg.channel.model(p)?;
    let dec = DecoderConfig { trace: true, ..cfg.decoder };
    let mut rng = trial_rng(cfg.seed, trial);
    match &cfg.experiment {
        Experiment::Zigzag(z) => {
            let field = FieldParams::new(z.m)?;
            let g = TannerGraph::zigzag_code(field.clone(), &z.labels(&field)?)?;
            decode_once(&g, &ch, &dec, &mut rng)
        }
        Experiment::Ensemble(e) => {
            let g = if e.fixed_code {
                expurgate(&e.spec, &mut trial_rng(cfg.seed, FIXED_CODE_STREAM))?
            } else {
                expurgate(&e.spec, &mut rng)?
            };
            decode_once(&g, &ch, &dec, &mut rng)
        }
    }
}

/// Simulates the expurgated ensemble, resampling the code every trial unless
/// `fixed_code` is set.
pub fn run_ensemble(exp: &EnsembleExperiment, cfg: &SimConfig) -> Result<Vec<SERRecord>> {
    cfg.validate()?;
    let fixed = if exp.fixed_code {
        Some(expurgate(&exp.spec, &mut trial_rng(cfg.seed, FIXED_CODE_STREAM))?)
    } else {
        None
    };
    let mut records = Vec::new();
    for &p in &cfg.grid {
        let ch = cfg.channel.model(p)?;
        let bound = floor_bound_general(&exp.spec, &ch, None)?;
        let bound = bound.convergent.then_some(bound.value);
        let t0 = Instant::now();
        let est = run_point(cfg, 64, |t| {
            let mut rng = trial_rng(cfg.seed, t);
            let owned;
            let g = match &fixed {
                Some(g) => g,
                None => match expurgate(&exp.spec, &mut rng) {
                    Ok(g) => {
                        owned = g;
                        &owned
                    }
                    Err(e) => {
                        log::warn!("trial {t}: {e}");
                        return None;
                    }
                },
            };
            match decode_trial(g, &ch, &cfg.decoder, &mut rng) {
                Ok(o) => Some(o),
                Err(e) => {
                    log::warn!("trial {t}: {e}");
                    None
                }
            }
        });
        let rec = SERRecord::from_estimate(p, &est, cfg.min_errors, bound, cfg.seed, Engine::Bp, t0.elapsed().as_secs_f64());
        log::info!("ensemble p={p}: ser={:.3e} ({} / {}), bound {:?}", rec.ser, rec.errors, rec.observed, rec.bound);
        records.push(rec);
    }
    Ok(records)
}

/// Dispatches on the experiment kind.
pub fn run(cfg: &SimConfig) -> Result<Vec<SERRecord>> {
    match &cfg.experiment {
        Experiment::Zigzag(z) => run_zigzag(z, cfg),
        Experiment::Ensemble(e) => run_ensemble(e, cfg),
    }
}
