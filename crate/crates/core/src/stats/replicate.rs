use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{hill_grid, ks_test, running_mean_divergence, Reference, StatReport, DEFAULT_ALPHA};
use crate::point_process::{MarkLaw, PalmVariant, PoissonLine};
use crate::rng::RngStream;
use crate::walk1d::{run_observed, start_walk, Environment, HitSet, StopRule, Termination};
use crate::walk2d::{explorer_run, tourist_run_2d, ExplorerOptions, Geometry, Point2};

/// Runs `f` on streams `0..n` of `seed` in parallel. The output order is the
/// stream order, whatever the scheduling.
pub fn replicate<T, E, F>(n: u64, seed: u64, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(RngStream) -> Result<T, E> + Sync,
{
    (0..n).into_par_iter().map(|i| f(RngStream::new(seed, i))).collect()
}

/// Named per-replica sampling experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Experiment {
    /// `|S_1|` under P^1.
    FirstStep { p: f64 },
    /// `T_{R_-}` under P^2, censored at `horizon`.
    HittingTime { p: f64, horizon: u64 },
    /// Step at which `[-half_width, half_width]` is cleared, under P^1.
    WindowClearing { p: f64, half_width: f64, budget: u64 },
    /// `|S_k - S_{k-1}|` of the planar tourist walk from the origin.
    TouristStep { k: usize },
    /// `|S_k - S_{k-1}|` of the explorer.
    ExplorerStep { k: usize },
}

/// Raw per-replica samples; `None` marks a value censored at the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub name: String,
    pub values: Vec<Option<f64>>,
}

impl SampleSet {
    pub fn uncensored(&self) -> Vec<f64> {
        self.values.iter().flatten().copied().collect()
    }

    pub fn censoring_rate(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.iter().filter(|v| v.is_none()).count() as f64 / self.values.len() as f64
    }

    /// One row per replica: `stream_id,value,censored`.
    pub fn write_csv<W: Write>(&self, mut w: W, header: &[(String, String)]) -> std::io::Result<()> {
        for (k, v) in header {
            writeln!(w, "# {k} = {v}")?;
        }
        writeln!(w, "stream_id,value,censored")?;
        for (i, v) in self.values.iter().enumerate() {
            match v {
                Some(x) => writeln!(w, "{i},{x:.16e},0")?,
                None => writeln!(w, "{i},,1")?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationOutput {
    pub experiment: Experiment,
    pub seed: u64,
    pub n_replicas: u64,
    pub samples: SampleSet,
    pub reports: Vec<StatReport>,
}

impl ReplicationOutput {
    pub fn write_samples(&self, path: &Path) -> std::io::Result<()> {
        let header = vec![
            ("experiment".to_string(), serde_json::to_string(&self.experiment).unwrap_or_default()),
            ("seed".to_string(), self.seed.to_string()),
            ("replicas".to_string(), self.n_replicas.to_string()),
        ];
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.samples.write_csv(f, &header)
    }
}

fn line(stream: RngStream, p: f64) -> Result<PoissonLine, String> {
    let law = MarkLaw::two_point(p).map_err(|e| e.to_string())?;
    PoissonLine::new(stream, 1.0, law).map_err(|e| e.to_string())
}

fn palm_env(stream: RngStream, p: f64, variant: PalmVariant) -> Result<Environment, String> {
    let l = line(stream, p)?;
    let cfg = l.realize_palm(-l.cell_len, l.cell_len, variant).map_err(|e| e.to_string())?;
    Ok(Environment::lazy(cfg, l))
}

impl Experiment {
    pub fn validate(&self) -> Result<(), String> {
        let p_ok = |p: f64| (0.0..=1.0).contains(&p);
        match *self {
            Experiment::FirstStep { p } if p_ok(p) => Ok(()),
            Experiment::HittingTime { p, horizon } if p_ok(p) && horizon > 0 => Ok(()),
            Experiment::WindowClearing { p, half_width, budget } if p_ok(p) && half_width > 0.0 && budget > 0 => Ok(()),
            Experiment::TouristStep { k } | Experiment::ExplorerStep { k } if k >= 1 => Ok(()),
            _ => Err(format!("invalid experiment {self:?}")),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::FirstStep { .. } => "first_step",
            Experiment::HittingTime { .. } => "hitting_time",
            Experiment::WindowClearing { .. } => "window_clearing",
            Experiment::TouristStep { .. } => "tourist_step",
            Experiment::ExplorerStep { .. } => "explorer_step",
        }
    }

    /// One replica's sample.
    pub fn sample(&self, stream: RngStream) -> Result<Option<f64>, String> {
        match *self {
            Experiment::FirstStep { p } => {
                let mut w = start_walk(palm_env(stream, p, PalmVariant::P1)?, 0.0).map_err(|e| e.to_string())?;
                Ok(Some(w.step().map_err(|e| e.to_string())?.abs()))
            }
            Experiment::HittingTime { p, horizon } => {
                let mut w = start_walk(palm_env(stream, p, PalmVariant::P2)?, 0.0).map_err(|e| e.to_string())?;
                let t = run_observed(&mut w, StopRule::Hit { set: HitSet::NonPositive, budget: horizon }, |_, _, _| {})
                    .map_err(|e| e.to_string())?;
                Ok(match t {
                    Termination::StopConditionMet { step } => Some(step as f64),
                    _ => None,
                })
            }
            Experiment::WindowClearing { p, half_width, budget } => {
                let mut w = start_walk(palm_env(stream, p, PalmVariant::P1)?, 0.0).map_err(|e| e.to_string())?;
                let rule = StopRule::WindowCleared { a: -half_width, b: half_width, budget };
                let t = run_observed(&mut w, rule, |_, _, _| {}).map_err(|e| e.to_string())?;
                Ok(match t {
                    Termination::StopConditionMet { step } => Some(step as f64),
                    _ => None,
                })
            }
            Experiment::TouristStep { k } => {
                let t = tourist_run_2d(Geometry::Plane, 1.0, Point2::ORIGIN, k as u64, stream).map_err(|e| e.to_string())?;
                Ok(Some(t.positions[k].dist(&t.positions[k - 1])))
            }
            Experiment::ExplorerStep { k } => {
                let run = explorer_run(k, stream, ExplorerOptions::default()).map_err(|e| e.to_string())?;
                Ok(Some(run.chain.discs[k - 1].radius))
            }
        }
    }

    /// Reports attached to a finished sample set.
    fn reports(&self, samples: &SampleSet) -> Vec<StatReport> {
        let values = samples.uncensored();
        let rate = samples.censoring_rate();
        let mut out = Vec::new();
        match *self {
            Experiment::FirstStep { .. } => {
                if let Ok(r) = ks_test(&values, Reference::Exponential { rate: 2.0 }, DEFAULT_ALPHA) {
                    out.push(r.named("first_step_ks_exp2").with_censoring(rate));
                }
            }
            Experiment::HittingTime { .. } => {
                if let Ok(d) = running_mean_divergence(&values, 1.0) {
                    for (m, mean) in d.checkpoints {
                        out.push(StatReport {
                            test_id: format!("partial_mean_{m}"),
                            sample_size: m,
                            statistic: mean,
                            threshold: f64::NAN,
                            p_value: None,
                            pass: true,
                            censoring_rate: Some(rate),
                        });
                    }
                }
                if let Ok(grid) = hill_grid(&values, &HILL_FRACTIONS) {
                    for h in grid {
                        out.push(StatReport {
                            test_id: format!("hill_k{}", h.k),
                            sample_size: h.n,
                            statistic: h.alpha,
                            threshold: HILL_THRESHOLD,
                            p_value: None,
                            pass: h.alpha <= HILL_THRESHOLD,
                            censoring_rate: Some(rate),
                        });
                    }
                }
            }
            _ => {}
        }
        out
    }
}

/// Fractions of the sample size used as the Hill `k`-grid.
pub const HILL_FRACTIONS: [f64; 4] = [0.02, 0.05, 0.10, 0.20];
/// Tail index at or below which the heavy-tail signature counts as present.
pub const HILL_THRESHOLD: f64 = 1.2;

/// Runs `n` replicas of `experiment` with streams `0..n` of `seed`.
pub fn run_experiment(experiment: Experiment, n: u64, seed: u64) -> Result<ReplicationOutput, String> {
    experiment.validate()?;
    if n == 0 {
        return Err("n_replicas must be positive".into());
    }
    let values = replicate(n, seed, |s| experiment.sample(s))?;
    let samples = SampleSet { name: experiment.name().into(), values };
    let reports = experiment.reports(&samples);
    Ok(ReplicationOutput { experiment, seed, n_replicas: n, samples, reports })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_aggregate() {
        let e = Experiment::FirstStep { p: 0.5 };
        let a = run_experiment(e, 300, 17).unwrap();
        let b = run_experiment(e, 300, 17).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let mut ba = Vec::new();
        let mut bb = Vec::new();
        a.samples.write_csv(&mut ba, &[]).unwrap();
        b.samples.write_csv(&mut bb, &[]).unwrap();
        assert_eq!(ba, bb);
    }

    #[test]
    fn single_replica_is_its_own_aggregate() {
        let e = Experiment::HittingTime { p: 0.5, horizon: 1000 };
        let out = run_experiment(e, 1, 3).unwrap();
        assert_eq!(out.samples.values, vec![e.sample(RngStream::new(3, 0)).unwrap()]);
    }

    #[test]
    fn censoring_is_reported() {
        // with a one-step horizon only walks whose first step goes left are observed
        let e = Experiment::HittingTime { p: 0.5, horizon: 1 };
        let out = run_experiment(e, 400, 3).unwrap();
        assert!(out.samples.values.iter().all(|v| v.is_none() || *v == Some(1.0)));
        let rate = out.samples.censoring_rate();
        assert!((0.4..0.6).contains(&rate), "{rate}");
        let first_censored = out.samples.values.iter().position(|v| v.is_none()).unwrap();
        let mut buf = Vec::new();
        out.samples.write_csv(&mut buf, &[("seed".into(), "3".into())]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# seed = 3\nstream_id,value,censored\n"));
        assert!(text.contains(&format!("\n{first_censored},,1\n")));
    }

    #[test]
    fn invalid_descriptors() {
        assert!(run_experiment(Experiment::FirstStep { p: 1.5 }, 10, 0).is_err());
        assert!(run_experiment(Experiment::TouristStep { k: 0 }, 10, 0).is_err());
        assert!(run_experiment(Experiment::FirstStep { p: 0.5 }, 0, 0).is_err());
    }
}
