//! Flat key/value experiment configuration.
//!
//! A config file is a sequence of `key = value` lines with `#` comments.
//! Command-line `--set key=value` pairs override file keys, which override
//! the built-in defaults. Unknown keys are rejected. Integers accept
//! decimal or `0x` hex.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use gaze_core::gaze::{GazeConfig, GazeVariant};
use gaze_core::memsys::{CacheConfig, HierarchyConfig};
use gaze_core::trace::{Activation, ReplayPattern, TraceSpec};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(message.into()))
}

/// Every key the configuration understands, with its default. The defaults
/// mirror the simulated system and the 4KB-region prefetcher design point.
const KNOWN_KEYS: &[(&str, &str)] = &[
    // trace source (exactly one of `trace` / `generator`)
    ("trace", ""),
    ("generator", ""),
    ("length", "4096"),
    ("seed", "1"),
    ("instr_step", "1"),
    ("start", "0x100000"),
    ("stride", "1"),
    ("regions", "64"),
    ("base_region", "4096"),
    ("frontier_density", "0.5"),
    ("rounds", "20"),
    ("patterns", ""),
    ("activations", ""),
    // prefetcher selection
    ("prefetcher", "gaze"),
    // hierarchy
    ("block_bytes", "64"),
    ("l1d_bytes", "49152"),
    ("l1d_ways", "12"),
    ("l1d_latency", "5"),
    ("l2c_bytes", "524288"),
    ("l2c_ways", "8"),
    ("l2c_latency", "10"),
    ("llc_bytes", "2097152"),
    ("llc_ways", "16"),
    ("llc_latency", "20"),
    ("mem_latency", "200"),
    ("queue_depth", "32"),
    ("queue_drain", "2"),
    ("mshrs", "16"),
    // prefetcher tables
    ("region_bytes", "4096"),
    ("ft_entries", "64"),
    ("ft_ways", "8"),
    ("at_entries", "64"),
    ("at_ways", "8"),
    ("pht_entries", "256"),
    ("pht_ways", "4"),
    ("dpct_entries", "8"),
    ("pb_entries", "32"),
    ("pb_ways", "8"),
    ("pb_drain", "2"),
    ("stage1_head", "16"),
    ("stage2_degree", "4"),
    ("dc_saturated", "7"),
    ("dc_half", "4"),
    ("dc_fast_floor", "6"),
    // output
    ("format", "json"),
];

/// Resolved flat configuration: defaults, then file keys, then overrides.
#[derive(Debug, Clone)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn resolve(file: Option<&Path>, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut values: BTreeMap<String, String> =
            KNOWN_KEYS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        let mut explicit_head = false;
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (key, value) = split_pair(line)
                    .ok_or_else(|| ConfigError(format!("line {}: expected key = value", lineno + 1)))?;
                set_known(&mut values, key, value)?;
                explicit_head |= key == "stage1_head";
            }
        }
        for pair in overrides {
            let (key, value) = split_pair(pair)
                .ok_or_else(|| ConfigError(format!("--set `{pair}`: expected key=value")))?;
            set_known(&mut values, key, value)?;
            explicit_head |= key == "stage1_head";
        }
        // Unless pinned explicitly, the stage-1 head tracks the region size
        // at one quarter of the blocks.
        if !explicit_head {
            if let (Ok(region), Ok(block)) =
                (parse_u64(&values["region_bytes"]), parse_u64(&values["block_bytes"]))
            {
                if block > 0 && region >= block {
                    values.insert("stage1_head".into(), (region / block / 4).to_string());
                }
            }
        }
        Ok(Self { values })
    }

    /// The effective key/value map, used as the config echo in reports.
    pub fn echo(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    fn get(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or("")
    }

    fn get_u64(&self, key: &str) -> Result<u64, ConfigError> {
        parse_u64(self.get(key)).map_err(|m| ConfigError(format!("key `{key}`: {m}")))
    }

    fn get_usize(&self, key: &str) -> Result<usize, ConfigError> {
        Ok(self.get_u64(key)? as usize)
    }

    fn get_u8(&self, key: &str) -> Result<u8, ConfigError> {
        let v = self.get_u64(key)?;
        if v > u8::MAX as u64 {
            return err(format!("key `{key}`: {v} out of range"));
        }
        Ok(v as u8)
    }

    fn get_f64(&self, key: &str) -> Result<f64, ConfigError> {
        self.get(key)
            .parse::<f64>()
            .map_err(|e| ConfigError(format!("key `{key}`: {e}")))
    }

    fn get_i64(&self, key: &str) -> Result<i64, ConfigError> {
        let raw = self.get(key);
        if let Some(rest) = raw.strip_prefix('-') {
            Ok(-(parse_u64(rest).map_err(|m| ConfigError(format!("key `{key}`: {m}")))? as i64))
        } else {
            Ok(self.get_u64(key)? as i64)
        }
    }

    pub fn output_format(&self) -> Result<OutputFormat, ConfigError> {
        match self.get("format") {
            "json" => Ok(OutputFormat::Json),
            "text" => Ok(OutputFormat::Text),
            "csv" => Ok(OutputFormat::Csv),
            other => err(format!("key `format`: unknown format `{other}`")),
        }
    }

    pub fn hierarchy(&self) -> Result<HierarchyConfig, ConfigError> {
        let block = self.get_usize("block_bytes")?;
        let cfg = HierarchyConfig {
            l1d: CacheConfig::new(
                self.get_usize("l1d_bytes")?,
                self.get_usize("l1d_ways")?,
                block,
                self.get_u64("l1d_latency")?,
            ),
            l2c: CacheConfig::new(
                self.get_usize("l2c_bytes")?,
                self.get_usize("l2c_ways")?,
                block,
                self.get_u64("l2c_latency")?,
            ),
            llc: CacheConfig::new(
                self.get_usize("llc_bytes")?,
                self.get_usize("llc_ways")?,
                block,
                self.get_u64("llc_latency")?,
            ),
            mem_latency: self.get_u64("mem_latency")?,
            queue_depth: self.get_usize("queue_depth")?,
            queue_drain: self.get_usize("queue_drain")?,
            mshrs: self.get_usize("mshrs")?,
        };
        cfg.validate().map_err(ConfigError)?;
        Ok(cfg)
    }

    pub fn gaze(&self) -> Result<GazeConfig, ConfigError> {
        let cfg = GazeConfig {
            region_bytes: self.get_usize("region_bytes")?,
            block_bytes: self.get_usize("block_bytes")?,
            ft_entries: self.get_usize("ft_entries")?,
            ft_ways: self.get_usize("ft_ways")?,
            at_entries: self.get_usize("at_entries")?,
            at_ways: self.get_usize("at_ways")?,
            pht_entries: self.get_usize("pht_entries")?,
            pht_ways: self.get_usize("pht_ways")?,
            dpct_entries: self.get_usize("dpct_entries")?,
            pb_entries: self.get_usize("pb_entries")?,
            pb_ways: self.get_usize("pb_ways")?,
            pb_drain: self.get_usize("pb_drain")?,
            stage1_head: self.get_usize("stage1_head")?,
            stage2_degree: self.get_usize("stage2_degree")?,
            dc_saturated: self.get_u8("dc_saturated")?,
            dc_half: self.get_u8("dc_half")?,
            dc_fast_floor: self.get_u8("dc_fast_floor")?,
            ..GazeConfig::default()
        };
        cfg.validate().map_err(ConfigError)?;
        Ok(cfg)
    }

    pub fn prefetcher(&self) -> Result<Selection, ConfigError> {
        Selection::parse(self.get("prefetcher"))
    }

    /// The trace source: a file path or an inline generator spec. Exactly
    /// one must be configured.
    pub fn trace_source(&self) -> Result<TraceSource, ConfigError> {
        let file = self.get("trace");
        let generator = self.get("generator");
        match (file.is_empty(), generator.is_empty()) {
            (false, false) => err("both `trace` and `generator` are set; pick one"),
            (true, true) => err("no trace source: set `trace` or `generator`"),
            (false, true) => Ok(TraceSource::File(file.into())),
            (true, false) => Ok(TraceSource::Spec(self.trace_spec(generator)?)),
        }
    }

    fn trace_spec(&self, kind: &str) -> Result<TraceSpec, ConfigError> {
        let length = self.get_usize("length")?;
        let instr_step = self.get_u64("instr_step")?;
        let seed = self.get_u64("seed")?;
        match kind {
            "streaming" => Ok(TraceSpec::Streaming { length, start: self.get_u64("start")?, instr_step }),
            "strided" => Ok(TraceSpec::Strided {
                length,
                start: self.get_u64("start")?,
                stride_blocks: self.get_i64("stride")?,
                instr_step,
            }),
            "irregular" => Ok(TraceSpec::Irregular {
                length,
                base_region: self.get_u64("base_region")?,
                regions: self.get_u64("regions")?,
                seed,
                instr_step,
            }),
            "bfs-mixed" => Ok(TraceSpec::BfsMixed {
                length,
                frontier_density: self.get_f64("frontier_density")?,
                seed,
                instr_step,
            }),
            "conflict" => Ok(TraceSpec::Conflict { seed, rounds: self.get_usize("rounds")?, instr_step }),
            "pattern-replay" => Ok(TraceSpec::PatternReplay {
                library: parse_patterns(self.get("patterns"))?,
                activations: parse_activations(self.get("activations"))?,
                instr_step,
            }),
            other => err(format!("unknown generator kind `{other}`")),
        }
    }
}

fn set_known(
    values: &mut BTreeMap<String, String>,
    key: &str,
    value: &str,
) -> Result<(), ConfigError> {
    if !values.contains_key(key) {
        return err(format!("unknown key `{key}`"));
    }
    values.insert(key.to_string(), value.to_string());
    Ok(())
}

fn split_pair(s: &str) -> Option<(&str, &str)> {
    let (k, v) = s.split_once('=')?;
    Some((k.trim(), v.trim()))
}

fn parse_u64(s: &str) -> Result<u64, String> {
    let s = s.trim();
    if let Some(hex) = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        u64::from_str_radix(hex, 16).map_err(|e| e.to_string())
    } else {
        s.parse::<u64>().map_err(|e| e.to_string())
    }
}

/// `patterns = 0,4,8,12;0,2,5,9` — semicolon-separated offset lists.
fn parse_patterns(s: &str) -> Result<Vec<ReplayPattern>, ConfigError> {
    if s.is_empty() {
        return err("pattern-replay needs `patterns`");
    }
    s.split(';')
        .enumerate()
        .map(|(i, entry)| {
            let offsets = entry
                .split(',')
                .map(|o| {
                    parse_u64(o)
                        .map_err(|m| ConfigError(format!("patterns[{i}]: {m}")))
                        .map(|v| v as u8)
                })
                .collect::<Result<Vec<u8>, _>>()?;
            Ok(ReplayPattern { offsets, pc: 0x52_0000 + i as u64 * 0x10 })
        })
        .collect()
}

/// `activations = 0x100:0;0x108:1` — region:pattern pairs in order.
fn parse_activations(s: &str) -> Result<Vec<Activation>, ConfigError> {
    if s.is_empty() {
        return err("pattern-replay needs `activations`");
    }
    s.split(';')
        .map(|entry| {
            let (region, pattern) = entry
                .split_once(':')
                .ok_or_else(|| ConfigError(format!("activation `{entry}`: expected region:pattern")))?;
            Ok(Activation {
                region: parse_u64(region).map_err(ConfigError)?,
                pattern: parse_u64(pattern).map_err(ConfigError)? as usize,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Text,
    Csv,
}

#[derive(Debug, Clone)]
pub enum TraceSource {
    File(std::path::PathBuf),
    Spec(TraceSpec),
}

/// Prefetcher selection by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    None,
    NextLine,
    IpStride,
    NAccess(usize),
    Gaze(GazeVariant),
}

impl Selection {
    pub fn parse(name: &str) -> Result<Self, ConfigError> {
        match name {
            "none" => Ok(Selection::None),
            "next-line" => Ok(Selection::NextLine),
            "ip-stride" => Ok(Selection::IpStride),
            "offset-table" => Ok(Selection::NAccess(1)),
            "gaze" => Ok(Selection::Gaze(GazeVariant::Full)),
            "gaze-pht-only" => Ok(Selection::Gaze(GazeVariant::PhtOnly)),
            "gaze-sm-only" => Ok(Selection::Gaze(GazeVariant::SmOnly)),
            other => {
                if let Some(n) = other.strip_prefix("n-access:") {
                    let n: usize = n
                        .parse()
                        .map_err(|_| ConfigError(format!("bad n-access count in `{other}`")))?;
                    if !(1..=4).contains(&n) {
                        return err(format!("n-access count must be 1..=4, got {n}"));
                    }
                    return Ok(Selection::NAccess(n));
                }
                err(format!("unknown prefetcher `{other}`"))
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            Selection::None => "none".into(),
            Selection::NextLine => "next-line".into(),
            Selection::IpStride => "ip-stride".into(),
            Selection::NAccess(n) => format!("n-access:{n}"),
            Selection::Gaze(GazeVariant::Full) => "gaze".into(),
            Selection::Gaze(GazeVariant::PhtOnly) => "gaze-pht-only".into(),
            Selection::Gaze(GazeVariant::SmOnly) => "gaze-sm-only".into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve() {
        let cfg = Config::resolve(None, &[]).unwrap();
        assert!(cfg.hierarchy().is_ok());
        assert!(cfg.gaze().is_ok());
        assert_eq!(cfg.prefetcher().unwrap(), Selection::Gaze(GazeVariant::Full));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = Config::resolve(None, &["no_such_key=1".into()]).unwrap_err();
        assert!(e.0.contains("unknown key"));
    }

    #[test]
    fn overrides_win() {
        let cfg = Config::resolve(None, &["mem_latency=99".into()]).unwrap();
        assert_eq!(cfg.hierarchy().unwrap().mem_latency, 99);
    }

    #[test]
    fn hex_values_parse() {
        let cfg = Config::resolve(None, &["generator=streaming".into(), "start=0x4000".into()]).unwrap();
        match cfg.trace_source().unwrap() {
            TraceSource::Spec(TraceSpec::Streaming { start, .. }) => assert_eq!(start, 0x4000),
            other => panic!("unexpected source {other:?}"),
        }
    }

    #[test]
    fn trace_source_must_be_unique() {
        let both = Config::resolve(None, &["trace=x".into(), "generator=streaming".into()]).unwrap();
        assert!(both.trace_source().is_err());
        let neither = Config::resolve(None, &[]).unwrap();
        assert!(neither.trace_source().is_err());
    }

    #[test]
    fn selection_names_round_trip() {
        for name in
            ["none", "next-line", "ip-stride", "gaze", "gaze-pht-only", "gaze-sm-only", "n-access:3"]
        {
            assert_eq!(Selection::parse(name).unwrap().name(), name);
        }
        assert_eq!(Selection::parse("offset-table").unwrap(), Selection::NAccess(1));
        assert!(Selection::parse("n-access:7").is_err());
        assert!(Selection::parse("bingo").is_err());
    }

    #[test]
    fn stage1_head_tracks_the_region_size() {
        let cfg = Config::resolve(None, &["region_bytes=2048".into()]).unwrap();
        assert_eq!(cfg.gaze().unwrap().stage1_head, 8);
        // explicit values are kept (and validated)
        let pinned =
            Config::resolve(None, &["region_bytes=2048".into(), "stage1_head=16".into()]).unwrap();
        assert!(pinned.gaze().is_err());
    }

    #[test]
    fn replay_patterns_parse() {
        let cfg = Config::resolve(
            None,
            &[
                "generator=pattern-replay".into(),
                "patterns=0,4,8;1,2".into(),
                "activations=0x100:0;0x108:1".into(),
            ],
        )
        .unwrap();
        match cfg.trace_source().unwrap() {
            TraceSource::Spec(TraceSpec::PatternReplay { library, activations, .. }) => {
                assert_eq!(library.len(), 2);
                assert_eq!(library[0].offsets, vec![0, 4, 8]);
                assert_eq!(activations[1].region, 0x108);
            }
            other => panic!("unexpected source {other:?}"),
        }
    }
}
