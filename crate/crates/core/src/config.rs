//! Flat `key = value` experiment files.
//!
//! ```text
//! # 2x2 i.i.d. comparison
//! channel = iid
//! nt = 2
//! nr = 2
//! snr_db = 0:20:2
//! schemes = perfect, statistical, quantized-rank1-best, quantized-rank2-best
//! splits = 4x1, 2x2
//! ```

use std::collections::BTreeMap;

use crate::channel::{iid_model, v4_model, CorrelationModel};
use crate::error::{Error, Result};
use crate::infotheory::Constellation;
use crate::simengine::{QuantizedKind, QuantizedScheme, Scheme, SimConfig, DEFAULT_RANK_TWO_COUNT};

pub const KEYS: &[&str] = &[
    "channel",
    "nt",
    "nr",
    "vmask",
    "nc",
    "k",
    "perfect_k",
    "snr_db",
    "trials",
    "seed",
    "constellation",
    "optimizer_samples",
    "schemes",
    "splits",
    "rank2_count",
];

fn err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

/// Raw key/value pairs; unknown and repeated keys are rejected.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return err(format!(
                "line {}: expected `key = value`, got `{line}`",
                n + 1
            ));
        };
        let key = key.trim().to_ascii_lowercase();
        if !KEYS.contains(&key.as_str()) {
            return err(format!("line {}: unknown key `{key}`", n + 1));
        }
        if out.insert(key.clone(), value.trim().to_string()).is_some() {
            return err(format!("line {}: key `{key}` given twice", n + 1));
        }
    }
    Ok(out)
}

fn list(v: &str) -> Vec<&str> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect()
}

fn number<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("`{key}` has invalid value `{v}`")))
}

/// Comma list, or an inclusive `start:stop:step` range.
pub fn parse_grid(v: &str) -> Result<Vec<f64>> {
    if v.contains(':') {
        let parts: Vec<f64> = v
            .split(':')
            .map(|p| number::<f64>("snr_db", p))
            .collect::<Result<_>>()?;
        let [start, stop, step] = parts[..] else {
            return err("snr_db range must be start:stop:step");
        };
        if step.is_nan() || step <= 0.0 || stop < start {
            return err("snr_db range needs step > 0 and stop >= start");
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|i| start + step * i as f64).collect());
    }
    list(v).into_iter().map(|p| number("snr_db", p)).collect()
}

fn parse_split(s: &str) -> Result<(usize, usize)> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| Error::Config(format!("split `{s}` should look like 2x2")))?;
    Ok((number("splits", a)?, number("splits", b)?))
}

fn parse_model(pairs: &BTreeMap<String, String>) -> Result<CorrelationModel> {
    let get = |k: &str| pairs.get(k).map(String::as_str);
    let dims = |default: usize| -> Result<(usize, usize)> {
        let nt = get("nt")
            .map(|v| number("nt", v))
            .transpose()?
            .unwrap_or(default);
        let nr = get("nr")
            .map(|v| number("nr", v))
            .transpose()?
            .unwrap_or(default);
        Ok((nt, nr))
    };
    match get("channel").unwrap_or("iid") {
        "iid" => {
            if get("vmask").is_some() {
                return err("vmask needs channel = custom");
            }
            let (nt, nr) = dims(2)?;
            iid_model(nt, nr).map_err(|e| Error::Config(e.to_string()))
        }
        "v4" => {
            if dims(4)? != (4, 4) || get("vmask").is_some() {
                return err("channel = v4 is fixed at 4x4 with its own variance profile");
            }
            Ok(v4_model())
        }
        "custom" => {
            let (nt, nr) = dims(2)?;
            let mask: Vec<f64> = list(
                get("vmask").ok_or_else(|| Error::Config("channel = custom needs vmask".into()))?,
            )
            .into_iter()
            .map(|v| number("vmask", v))
            .collect::<Result<_>>()?;
            CorrelationModel::with_normalized_mask(nt, nr, mask)
                .map_err(|e| Error::Config(e.to_string()))
        }
        other => err(format!("unknown channel `{other}` (iid, v4, custom)")),
    }
}

/// Builds a [`SimConfig`]; `default_seed` applies when the file has no `seed`.
pub fn parse_sim_config(text: &str, default_seed: u64) -> Result<SimConfig> {
    let pairs = parse_pairs(text)?;
    let get = |k: &str| pairs.get(k).map(String::as_str);
    let model = parse_model(&pairs)?;
    let nt = model.nt();
    let nc = get("nc")
        .map(|v| number("nc", v))
        .transpose()?
        .unwrap_or(nt);
    let mut cfg = SimConfig::new(model, nc);
    cfg.seed = default_seed;
    if let Some(v) = get("k") {
        cfg.k = number("k", v)?;
    }
    if let Some(v) = get("perfect_k") {
        cfg.perfect_k = number("perfect_k", v)?;
    }
    if let Some(v) = get("snr_db") {
        cfg.snr_grid_db = parse_grid(v)?;
    }
    if let Some(v) = get("trials") {
        cfg.trials = number("trials", v)?;
    }
    if let Some(v) = get("seed") {
        cfg.seed = number("seed", v)?;
    }
    if let Some(v) = get("constellation") {
        cfg.constellation = Constellation::parse(v)?;
    }
    if let Some(v) = get("optimizer_samples") {
        cfg.optimizer_samples = number("optimizer_samples", v)?;
    }
    let rank2_count = get("rank2_count")
        .map(|v| number("rank2_count", v))
        .transpose()?
        .unwrap_or(DEFAULT_RANK_TWO_COUNT);
    let splits: Vec<(usize, usize)> = match get("splits") {
        Some(v) => list(v)
            .into_iter()
            .map(parse_split)
            .collect::<Result<_>>()?,
        None => vec![(2, 2)],
    };
    if splits.is_empty() {
        return err("splits is empty");
    }
    if let Some(v) = get("schemes") {
        let mut schemes = Vec::new();
        for name in list(v) {
            let quantized = |kind: QuantizedKind| -> Vec<Scheme> {
                splits
                    .iter()
                    .map(|&(n1, n2)| {
                        Scheme::Quantized(QuantizedScheme {
                            n1,
                            n2,
                            kind: kind.clone(),
                        })
                    })
                    .collect()
            };
            match name {
                "perfect" => schemes.push(Scheme::Perfect),
                "statistical" => schemes.push(Scheme::Statistical),
                "statistical-beamforming" => schemes.push(Scheme::StatisticalBeamforming),
                "quantized-rank1-best" => schemes.extend(quantized(QuantizedKind::RankOneBest)),
                "quantized-rank2-best" => {
                    schemes.extend(quantized(QuantizedKind::RankTwoBest { count: rank2_count }))
                }
                other => return err(format!("unknown scheme `{other}`")),
            }
        }
        cfg.schemes = schemes;
    } else {
        for s in cfg.schemes.iter_mut() {
            if let Scheme::Quantized(q) = s {
                if let QuantizedKind::RankTwoBest { count } = &mut q.kind {
                    *count = rank2_count;
                }
            }
        }
        if get("splits").is_some() {
            let kinds = [
                QuantizedKind::RankOneBest,
                QuantizedKind::RankTwoBest { count: rank2_count },
            ];
            cfg.schemes.retain(|s| !matches!(s, Scheme::Quantized(_)));
            for kind in kinds {
                for &(n1, n2) in &splits {
                    cfg.schemes.push(Scheme::Quantized(QuantizedScheme {
                        n1,
                        n2,
                        kind: kind.clone(),
                    }));
                }
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_file() {
        let text = "# comment\nchannel = iid\nnt = 2\nnr = 2\nsnr_db = 0:20:2  # grid\ntrials = 10\nseed = 7\n\
                    schemes = perfect, statistical, quantized-rank1-best, quantized-rank2-best\nsplits = 4x1, 2x2\n";
        let cfg = parse_sim_config(text, 0).unwrap();
        assert_eq!(cfg.snr_grid_db.len(), 11);
        assert_eq!(cfg.snr_grid_db[10], 20.0);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.trials, 10);
        assert_eq!(cfg.k, 2);
        assert_eq!(cfg.perfect_k, 4);
        assert_eq!(
            cfg.labels().unwrap(),
            vec![
                "perfect",
                "statistical",
                "quantized-rank1-best-4x1",
                "quantized-rank1-best-2x2",
                "quantized-rank2-best-4x1",
                "quantized-rank2-best-2x2"
            ]
        );
    }

    #[test]
    fn defaults_and_seed_fallback() {
        let cfg = parse_sim_config("channel = v4\n", 99).unwrap();
        assert_eq!(cfg.seed, 99);
        assert_eq!(cfg.nc, 4);
        assert_eq!(cfg.schemes.len(), 5);
        assert_eq!(parse_grid("0, 5,10").unwrap(), vec![0.0, 5.0, 10.0]);
        assert_eq!(parse_grid("-10:-4:3").unwrap(), vec![-10.0, -7.0, -4.0]);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(parse_sim_config("trails = 10\n", 0).is_err());
        assert!(parse_sim_config("trials = 10\ntrials = 11\n", 0).is_err());
        assert!(parse_sim_config("trials\n", 0).is_err());
        assert!(parse_sim_config("schemes =\n", 0).is_err());
        assert!(parse_sim_config("schemes = perfect, magic\n", 0).is_err());
        assert!(parse_sim_config("channel = v4\nnt = 2\n", 0).is_err());
        assert!(parse_sim_config("snr_db = 10:0:2\n", 0).is_err());
        assert!(parse_sim_config("splits = 3x1\n", 0).is_err());
        assert!(matches!(
            parse_sim_config("k = 5\n", 0),
            Err(Error::Infeasible(_))
        ));
        assert!(matches!(
            parse_sim_config("trials = x\n", 0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn custom_mask_is_normalized() {
        let cfg = parse_sim_config("channel = custom\nnt = 2\nnr = 1\nvmask = 1, 3\n", 0).unwrap();
        assert_eq!(cfg.model.vmask(), &[0.5, 1.5]);
    }
}
