//! Canonical on-disk form of run and evaluation records.
//!
//! One file per run: a `#`-prefixed header block carrying the full identity
//! of the run, then the per-step return values, comma separated. Floats are
//! written in Rust's shortest round-trip form, there are no timestamps or
//! hostnames, and header order is fixed, so regenerating a record yields
//! byte-identical files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::{EvalRecord, PairingMode, RunRecord};
use crate::agents::{Algorithm, CutoffMode, HyperConfig};
use crate::envs::EnvParams;
use crate::error::{Error, Result};

/// Marker for an empty list or map value, since a blank after the colon
/// would be invisible to the eye and fragile under editors.
const EMPTY: &str = "-";

const HEADER_KEYS: [&str; 16] = [
    "fingerprint",
    "env",
    "env_params",
    "algorithm",
    "config",
    "base_seed",
    "run_index",
    "pairing",
    "step_budget",
    "discount",
    "cutoff",
    "cutoff_mode",
    "episode_starts",
    "episode_returns",
    "episode_terminated",
    "final_episode_partial",
];

fn join_list<T: std::fmt::Display>(items: &[T]) -> String {
    if items.is_empty() {
        return EMPTY.to_string();
    }
    let mut out = String::new();
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write!(out, "{item}").expect("writing to a String cannot fail");
    }
    out
}

fn or_empty(s: String) -> String {
    if s.is_empty() {
        EMPTY.to_string()
    } else {
        s
    }
}

pub fn record_to_string(record: &RunRecord) -> String {
    let mut out = String::new();
    let mut field = |key: &str, value: String| {
        writeln!(out, "# {key}: {value}").expect("writing to a String cannot fail");
    };
    field("fingerprint", record.fingerprint.clone());
    field("env", record.env_id.clone());
    field("env_params", or_empty(record.env_params.canonical_string()));
    field("algorithm", record.algorithm.id().to_string());
    field("config", or_empty(record.config.canonical_string()));
    field("base_seed", record.base_seed.to_string());
    field("run_index", record.run_index.to_string());
    field("pairing", record.pairing.id().to_string());
    field("step_budget", record.step_budget.to_string());
    field("discount", record.discount.to_string());
    field(
        "cutoff",
        match record.cutoff {
            Some(c) => c.to_string(),
            None => "none".to_string(),
        },
    );
    field("cutoff_mode", record.cutoff_mode.id().to_string());
    field("episode_starts", join_list(&record.episode_starts));
    field("episode_returns", join_list(&record.episode_returns));
    field("episode_terminated", join_list(&record.episode_terminated));
    field(
        "final_episode_partial",
        record.final_episode_partial.to_string(),
    );
    out.push_str(&join_list(&record.per_step_return));
    out.push('\n');
    out
}

fn malformed(what: impl Into<String>) -> Error {
    Error::RecordFormat(what.into())
}

fn parse_scalar<T: FromStr>(value: &str, key: &str) -> Result<T> {
    value
        .parse::<T>()
        .map_err(|_| malformed(format!("bad `{key}` value `{value}`")))
}

fn parse_list<T: FromStr>(value: &str, key: &str) -> Result<Vec<T>> {
    if value == EMPTY {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|tok| {
            tok.parse::<T>()
                .map_err(|_| malformed(format!("bad `{key}` entry `{tok}`")))
        })
        .collect()
}

fn parse_kv_map(value: &str, key: &str) -> Result<BTreeMap<String, f64>> {
    let mut map = BTreeMap::new();
    if value == EMPTY {
        return Ok(map);
    }
    for pair in value.split(',') {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| malformed(format!("`{key}` entry `{pair}` is not key=value")))?;
        let v: f64 = v
            .parse()
            .map_err(|_| malformed(format!("bad `{key}` value in `{pair}`")))?;
        map.insert(k.to_string(), v);
    }
    Ok(map)
}

pub fn record_from_str(text: &str) -> Result<RunRecord> {
    let mut header: BTreeMap<&str, &str> = BTreeMap::new();
    let mut per_step_return: Vec<f64> = Vec::new();
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim_start();
            let (key, value) = rest
                .split_once(": ")
                .ok_or_else(|| malformed(format!("header line `{line}` is not `key: value`")))?;
            if !HEADER_KEYS.contains(&key) {
                return Err(malformed(format!("unknown header key `{key}`")));
            }
            if header.insert(key, value).is_some() {
                return Err(malformed(format!("duplicate header key `{key}`")));
            }
        } else if !line.trim().is_empty() {
            per_step_return.extend(parse_list::<f64>(line.trim(), "per_step_return")?);
        }
    }
    let get = |key: &str| -> Result<&str> {
        header
            .get(key)
            .copied()
            .ok_or_else(|| malformed(format!("missing header key `{key}`")))
    };

    let step_budget: usize = parse_scalar(get("step_budget")?, "step_budget")?;
    if per_step_return.len() != step_budget {
        return Err(malformed(format!(
            "expected {step_budget} per-step values, found {}",
            per_step_return.len()
        )));
    }
    let episode_starts: Vec<usize> = parse_list(get("episode_starts")?, "episode_starts")?;
    let episode_returns: Vec<f64> = parse_list(get("episode_returns")?, "episode_returns")?;
    let episode_terminated: Vec<bool> =
        parse_list(get("episode_terminated")?, "episode_terminated")?;
    if episode_starts.len() != episode_returns.len()
        || episode_starts.len() != episode_terminated.len()
    {
        return Err(malformed("episode header lists disagree in length"));
    }
    if episode_starts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(malformed("episode_starts must be strictly increasing"));
    }
    if episode_starts.iter().any(|&s| s >= step_budget) {
        return Err(malformed("episode start beyond the step budget"));
    }

    let cutoff = match get("cutoff")? {
        "none" => None,
        other => Some(parse_scalar(other, "cutoff")?),
    };
    Ok(RunRecord {
        fingerprint: get("fingerprint")?.to_string(),
        env_id: get("env")?.to_string(),
        env_params: EnvParams::from_map(parse_kv_map(get("env_params")?, "env_params")?),
        algorithm: get("algorithm")?.parse::<Algorithm>()?,
        config: HyperConfig::from_map(parse_kv_map(get("config")?, "config")?),
        base_seed: parse_scalar(get("base_seed")?, "base_seed")?,
        run_index: parse_scalar(get("run_index")?, "run_index")?,
        pairing: get("pairing")?.parse::<PairingMode>()?,
        step_budget,
        discount: parse_scalar(get("discount")?, "discount")?,
        cutoff,
        cutoff_mode: get("cutoff_mode")?.parse::<CutoffMode>()?,
        per_step_return,
        episode_starts,
        episode_returns,
        episode_terminated,
        final_episode_partial: parse_scalar(get("final_episode_partial")?, "final_episode_partial")?,
    })
}

pub fn write_record(record: &RunRecord, path: &Path) -> Result<()> {
    fs::write(path, record_to_string(record))?;
    Ok(())
}

pub fn read_record(path: &Path) -> Result<RunRecord> {
    let text = fs::read_to_string(path)?;
    record_from_str(&text)
        .map_err(|e| malformed(format!("{}: {e}", path.display())))
}

pub fn batch_file_name(run_index: u64) -> String {
    format!("run_{run_index:05}.csv")
}

/// Writes one file per record into `dir`, named by run index. Returns the
/// paths in record order.
pub fn write_batch(records: &[RunRecord], dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::with_capacity(records.len());
    for record in records {
        let path = dir.join(batch_file_name(record.run_index));
        write_record(record, &path)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Reads every `run_*.csv` in `dir`, ordered by file name (run index).
pub fn read_batch(dir: &Path) -> Result<Vec<RunRecord>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("run_") && n.ends_with(".csv"))
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(malformed(format!(
            "no run_*.csv record files in {}",
            dir.display()
        )));
    }
    paths.iter().map(|p| read_record(p)).collect()
}

pub fn eval_record_to_string(eval: &EvalRecord) -> String {
    let mut out = String::new();
    writeln!(out, "# fingerprint: {}", eval.fingerprint).unwrap();
    writeln!(out, "# base_seed: {}", eval.base_seed).unwrap();
    writeln!(out, "# run_index: {}", eval.run_index).unwrap();
    writeln!(out, "# interval: {}", eval.interval).unwrap();
    writeln!(out, "# rollouts: {}", eval.rollouts).unwrap();
    writeln!(out, "# columns: step,mean_return").unwrap();
    for (step, value) in eval.eval_steps.iter().zip(&eval.mean_returns) {
        writeln!(out, "{step},{value}").unwrap();
    }
    out
}

pub fn write_eval_record(eval: &EvalRecord, path: &Path) -> Result<()> {
    fs::write(path, eval_record_to_string(eval))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{run_online, EvalMode, ExperimentSpec, SeedPlan};

    fn sample_record() -> RunRecord {
        let spec = ExperimentSpec {
            env: "mountain-car".into(),
            env_params: EnvParams::new(),
            algorithm: Algorithm::SarsaLambda,
            config: HyperConfig::new()
                .set("alpha", 0.5)
                .set("epsilon", 0.1)
                .set("gamma_agent", 0.99)
                .set("lambda", 0.9)
                .set("tiles", 8.0)
                .set("tilings", 8.0),
            step_budget: 120,
            cutoff: Some(50),
            cutoff_mode: CutoffMode::Bootstrap,
            eval: EvalMode::Online,
        };
        run_online(
            &spec,
            &SeedPlan {
                base_seed: 9,
                run_index: 12,
                pairing: PairingMode::Independent,
            },
        )
        .unwrap()
    }

    #[test]
    fn round_trip_preserves_every_field() {
        let record = sample_record();
        // Mountain Car pays -1 per step, so this exercises negative floats.
        assert!(record.per_step_return.iter().all(|v| *v < 0.0));
        let parsed = record_from_str(&record_to_string(&record)).unwrap();
        assert_eq!(parsed, record);
    }

    #[test]
    fn serialization_is_byte_stable() {
        let record = sample_record();
        assert_eq!(record_to_string(&record), record_to_string(&record));
    }

    #[test]
    fn files_round_trip_and_batches_come_back_ordered() {
        let dir = tempfile::tempdir().unwrap();
        let mut records = vec![sample_record(), sample_record(), sample_record()];
        records[0].run_index = 2;
        records[1].run_index = 0;
        records[2].run_index = 1;
        write_batch(&records, dir.path()).unwrap();
        let loaded = read_batch(dir.path()).unwrap();
        let indices: Vec<u64> = loaded.iter().map(|r| r.run_index).collect();
        assert_eq!(indices, vec![0, 1, 2]);
        assert_eq!(loaded[2], records[0]);
    }

    #[test]
    fn rewritten_files_are_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let record = sample_record();
        let path = dir.path().join("run_00012.csv");
        write_record(&record, &path).unwrap();
        let first = fs::read(&path).unwrap();
        write_record(&record, &path).unwrap();
        assert_eq!(fs::read(&path).unwrap(), first);
    }

    #[test]
    fn parser_rejects_malformed_input() {
        let record = sample_record();
        let good = record_to_string(&record);

        let unknown_key = good.replace("# pairing:", "# flavor:");
        assert!(record_from_str(&unknown_key).is_err());

        let missing_key = good.replace("# discount: 0.99\n", "");
        assert!(record_from_str(&missing_key).is_err());

        let mut truncated_data = good.clone();
        truncated_data.truncate(good.rfind(',').unwrap());
        truncated_data.push('\n');
        assert!(record_from_str(&truncated_data).is_err());

        let bad_float = good.replace("# discount: 0.99", "# discount: fast");
        assert!(record_from_str(&bad_float).is_err());

        assert!(record_from_str("1,2,3\n").is_err());
    }

    #[test]
    fn empty_collections_use_an_explicit_marker() {
        let mut record = sample_record();
        record.env_params = EnvParams::new();
        let text = record_to_string(&record);
        assert!(text.contains("# env_params: -\n"));
        assert_eq!(record_from_str(&text).unwrap().env_params, EnvParams::new());
    }

    #[test]
    fn eval_records_serialize_as_step_tables() {
        let eval = EvalRecord {
            fingerprint: "0011223344556677".into(),
            base_seed: 4,
            run_index: 1,
            interval: 10,
            rollouts: 3,
            eval_steps: vec![0, 10, 20],
            mean_returns: vec![0.0, 0.25, 0.5],
        };
        let text = eval_record_to_string(&eval);
        assert!(text.ends_with("0,0\n10,0.25\n20,0.5\n"));
        assert!(text.contains("# interval: 10"));
    }
}
