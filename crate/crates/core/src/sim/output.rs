use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;

use super::{Engine, SERRecord, SimConfig};

/// One CSV line; `wall_time` is last so it can be ignored when diffing reruns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub channel_param: f64,
    pub ser: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub bound: Option<f64>,
    pub errors: u64,
    pub observed: u64,
    pub seed: u64,
    pub engine: Engine,
    pub wall_time: f64,
}

impl From<&SERRecord> for CsvRow {
    fn from(r: &SERRecord) -> Self {
        Self {
            channel_param: r.channel_param,
            ser: r.ser,
            ci_low: r.ci_low,
            ci_high: r.ci_high,
            bound: r.bound,
            errors: r.errors,
            observed: r.observed,
            seed: r.seed,
            engine: r.engine,
            wall_time: r.wall_time,
        }
    }
}

/// `results.csv` -> `results.csv.json`
pub fn sidecar_path(csv: &Path) -> PathBuf {
    let mut s = csv.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Writes the CSV and the JSON sidecar holding `cfg`.
pub fn emit_results(records: &[SERRecord], cfg: &SimConfig, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(CsvRow::from(r))?;
    }
    w.flush()?;
    fs::write(sidecar_path(path), serde_json::to_string_pretty(cfg)? + "\n")?;
    Ok(())
}

/// Whitespace-separated columns for plotting: parameter, SER, CI, bound.
pub fn write_points(records: &[SERRecord], path: &Path) -> Result<()> {
    let mut f = fs::File::create(path)?;
    writeln!(f, "# channel_param ser ci_low ci_high bound")?;
    for r in records {
        let bound = r.bound.map_or("nan".to_string(), |b| format!("{b:e}"));
        writeln!(f, "{} {:e} {:e} {:e} {bound}", r.channel_param, r.ser, r.ci_low, r.ci_high)?;
    }
    Ok(())
}

pub fn read_config(path: &Path) -> Result<SimConfig> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoder::DecoderConfig;
    use crate::sim::{run, BetaSpec, ChannelKind, Experiment, ZigzagExperiment};

    #[test]
    fn csv_and_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        let cfg = SimConfig {
            experiment: Experiment::Zigzag(ZigzagExperiment {
                s: 2,
                m: 3,
                beta: BetaSpec::Exponent { k: 1 },
                engine: Engine::Predicate,
            }),
            channel: ChannelKind::Bsc,
            grid: vec![0.05, 0.1],
            max_trials: 5000,
            min_errors: 5,
            early_stop: true,
            seed: 1,
            chunk: 0,
            decoder: DecoderConfig::default(),
        };
        let recs = run(&cfg).unwrap();
        emit_results(&recs, &cfg, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "channel_param,ser,ci_low,ci_high,bound,errors,observed,seed,engine,wall_time"
        );
        let mut rdr = csv::Reader::from_path(&path).unwrap();
        let rows: Vec<CsvRow> = rdr.deserialize().collect::<std::result::Result<_, _>>().unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.bound.is_none() && r.engine == Engine::Predicate));
        assert_eq!(rows[1].errors, recs[1].errors);
        let back = read_config(&sidecar_path(&path)).unwrap();
        assert_eq!(back, cfg);
        let again = run(&back).unwrap();
        assert_eq!(
            again.iter().map(|r| r.errors).collect::<Vec<_>>(),
            recs.iter().map(|r| r.errors).collect::<Vec<_>>()
        );
        let pts = dir.path().join("out.dat");
        write_points(&recs, &pts).unwrap();
        assert_eq!(fs::read_to_string(&pts).unwrap().lines().count(), 3);
    }
}
