//! Layered configuration: flags override the config file, which overrides the
//! scaled defaults.

use std::path::PathBuf;

use clap::Args;
use mqa_core::{Error, Result, SimConfig, ValueRange};

#[derive(Debug, Clone, Args)]
pub struct Params {
    /// TOML file with simulation parameters (keys as in `SimConfig`).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Factor applied to the default worker and task totals.
    #[arg(long, default_value_t = 0.01)]
    pub scale: f64,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Total tasks.
    #[arg(long)]
    pub m: Option<usize>,
    /// Total workers.
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of time instances.
    #[arg(long = "R")]
    pub instances: Option<usize>,
    /// Budget per instance.
    #[arg(long = "B")]
    pub budget: Option<f64>,
    /// Unit price per distance.
    #[arg(long = "C")]
    pub unit_price: Option<f64>,
    /// Forecast window. `predict-eval` also takes a list (`1,2,4`) or an
    /// inclusive range (`1..5`).
    #[arg(long)]
    pub w: Option<String>,
    /// Grid cells per side.
    #[arg(long)]
    pub gamma: Option<usize>,
    /// Budget-feasibility threshold.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Quality range as `lo,hi`.
    #[arg(long = "q-range")]
    pub q_range: Option<ValueRange>,
    /// Deadline offset range as `lo,hi`.
    #[arg(long = "e-range")]
    pub e_range: Option<ValueRange>,
    /// Velocity range as `lo,hi`.
    #[arg(long = "v-range")]
    pub v_range: Option<ValueRange>,
}

impl Params {
    pub fn resolve(&self) -> Result<SimConfig> {
        if !(self.scale > 0.0) {
            return Err(Error::Config("scale must be positive".into()));
        }
        let base = SimConfig::default().scaled(self.scale);
        let mut config = match &self.config {
            None => base,
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                overlay_file(base, &text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
            }
        };
        put(&mut config.seed, self.seed);
        put(&mut config.tasks, self.m);
        put(&mut config.workers, self.n);
        put(&mut config.instances, self.instances);
        put(&mut config.budget, self.budget);
        put(&mut config.unit_price, self.unit_price);
        if let Some(ws) = self.windows()? {
            match ws[..] {
                [w] => config.window = w,
                _ => return Err(Error::Config("a single --w value is required here".into())),
            }
        }
        put(&mut config.gamma, self.gamma);
        put(&mut config.delta, self.delta);
        put(&mut config.quality, self.q_range);
        put(&mut config.deadline, self.e_range);
        put(&mut config.velocity, self.v_range);
        config.validate()?;
        Ok(config)
    }
}

impl Params {
    /// The `--w` values, if given.
    pub fn windows(&self) -> Result<Option<Vec<usize>>> {
        let Some(text) = &self.w else {
            return Ok(None);
        };
        let bad = || Error::Config(format!("cannot parse window list {text:?}"));
        let ws: Vec<usize> = match text.split_once("..") {
            Some((lo, hi)) => {
                let lo: usize = lo.trim().parse().map_err(|_| bad())?;
                let hi: usize = hi.trim().parse().map_err(|_| bad())?;
                (lo..=hi).collect()
            }
            None => text.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?,
        };
        if ws.is_empty() || ws.contains(&0) {
            return Err(bad());
        }
        Ok(Some(ws))
    }
}

fn put<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

/// Keys present in `text` replace those of `base`; unknown keys are errors.
fn overlay_file(base: SimConfig, text: &str) -> std::result::Result<SimConfig, String> {
    let mut table = toml::Table::try_from(&base).map_err(|e| e.to_string())?;
    let file: toml::Table = text.parse().map_err(|e: toml::de::Error| e.to_string())?;
    table.extend(file);
    table.try_into().map_err(|e: toml::de::Error| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_keys_replace_defaults() {
        let c = overlay_file(SimConfig::default(), "budget = 50.0\nquality = [2.0, 3.0]\n").unwrap();
        assert_eq!(c.budget, 50.0);
        assert_eq!(c.quality, ValueRange(2.0, 3.0));
        assert_eq!(c.window, 3);
        assert!(overlay_file(SimConfig::default(), "budgett = 1.0").is_err());
    }

    #[test]
    fn window_lists() {
        let with = |w: &str| Params::parse_from(["t", "--w", w]).windows();
        assert_eq!(with("3").unwrap(), Some(vec![3]));
        assert_eq!(with("1..4").unwrap(), Some(vec![1, 2, 3, 4]));
        assert_eq!(with("2,5").unwrap(), Some(vec![2, 5]));
        assert!(with("0..2").is_err());
        assert!(with("x").is_err());
    }

    #[derive(clap::Parser)]
    struct Wrapper {
        #[command(flatten)]
        params: Params,
    }

    impl Params {
        fn parse_from<const N: usize>(args: [&str; N]) -> Params {
            use clap::Parser;
            Wrapper::parse_from(args).params
        }
    }
}
