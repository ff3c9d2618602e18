use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use windopf::netmodel::WindFarm;
use windopf::windcost::{fit_gmm_em, read_wind_csv, EmOptions, GmmModel};

/// Where a farm's output distribution comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum WindSource {
    Gmm(PathBuf),
    Data(PathBuf),
}

/// One `--wind bus=<id>,kl=<v>,kh=<v>,pf=<v>,{gmm=<path>|data=<path>}` attachment.
///
/// Optional keys: `cap=<MW>` (defaults to the model's support maximum),
/// `k=<components>` for fitting (default 12) and `segs=<n>` PWL segments.
#[derive(Debug, Clone, PartialEq)]
pub struct WindSpec {
    pub bus: usize,
    pub k_l: f64,
    pub k_h: f64,
    pub power_factor: f64,
    pub source: WindSource,
    pub capacity: Option<f64>,
    pub components: usize,
    pub segments: usize,
}

impl std::str::FromStr for WindSpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let (mut bus, mut k_l, mut k_h, mut pf, mut source, mut cap) = (None, None, None, None, None, None);
        let (mut components, mut segments) = (12, 16);
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part.split_once('=').ok_or_else(|| anyhow!("wind spec entry '{part}' is not key=value"))?;
            let num = || value.parse::<f64>().map_err(|_| anyhow!("wind spec {key}: '{value}' is not a number"));
            let int = || value.parse::<usize>().map_err(|_| anyhow!("wind spec {key}: '{value}' is not an integer"));
            match key {
                "bus" => bus = Some(int()?),
                "kl" => k_l = Some(num()?),
                "kh" => k_h = Some(num()?),
                "pf" => pf = Some(num()?),
                "cap" => cap = Some(num()?),
                "k" => components = int()?,
                "segs" => segments = int()?,
                "gmm" | "data" if source.is_some() => bail!("wind spec takes exactly one of gmm= and data="),
                "gmm" => source = Some(WindSource::Gmm(value.into())),
                "data" => source = Some(WindSource::Data(value.into())),
                _ => bail!("unknown wind spec key '{key}'"),
            }
        }
        Ok(WindSpec {
            bus: bus.ok_or_else(|| anyhow!("wind spec needs bus="))?,
            k_l: k_l.ok_or_else(|| anyhow!("wind spec needs kl="))?,
            k_h: k_h.ok_or_else(|| anyhow!("wind spec needs kh="))?,
            power_factor: pf.ok_or_else(|| anyhow!("wind spec needs pf="))?,
            source: source.ok_or_else(|| anyhow!("wind spec needs gmm= or data="))?,
            capacity: cap,
            components,
            segments,
        })
    }
}

fn require(path: &Path) -> Result<()> {
    if !path.exists() {
        bail!("file not found: {}", path.display());
    }
    Ok(())
}

impl WindSpec {
    /// Loads or fits the distribution and builds the farm.
    pub fn build(&self, seed: u64) -> Result<WindFarm> {
        let gmm = match &self.source {
            WindSource::Gmm(p) => {
                require(p)?;
                GmmModel::load(p).with_context(|| format!("reading GMM {}", p.display()))?
            }
            WindSource::Data(p) => {
                require(p)?;
                let samples = read_wind_csv(p).with_context(|| format!("reading wind data {}", p.display()))?;
                let opts = EmOptions { seed, support_max: self.capacity, ..EmOptions::default() };
                fit_gmm_em(&samples, self.components, &opts)?.model
            }
        };
        let p_max = self.capacity.unwrap_or(gmm.support_max);
        let farm = WindFarm {
            bus: self.bus,
            p_min_mw: 0.0,
            p_max_mw: p_max,
            power_factor: self.power_factor,
            k_l: self.k_l,
            k_h: self.k_h,
            gmm,
            pwl_segments: self.segments,
        };
        farm.validate()?;
        Ok(farm)
    }
}
