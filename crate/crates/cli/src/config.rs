//! Optional TOML configuration.
//!
//! ```toml
//! [download]
//! map_url = "https://example.org/COM_CMB_IQU-{foreground}_{nside}_R2.02_full.fits"
//! cache_dir = "/data/planck"
//!
//! [download.powerspectrum_urls]
//! 1 = "https://example.org/COM_PowerSpect_CMB-TT-full_R3.01.txt"
//!
//! [summary]
//! cards = ["NSIDE", "ORDERING", "TELESCOP"]
//! ```
//!
//! Every key is optional. The file is taken from `--config`, then from
//! `SPHERESTAT_CONFIG`; without either the built-in defaults apply.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{CliError, CliResult};

pub const CONFIG_ENV: &str = "SPHERESTAT_CONFIG";
pub const CACHE_ENV: &str = "SPHERESTAT_CACHE";

const MAP_URL: &str = "http://irsa.ipac.caltech.edu/data/Planck/release_2/all-sky-maps/maps/component-maps/cmb/COM_CMB_IQU-{foreground}_{nside}_R2.02_full.fits";
const PS_URL: &str = "http://pla.esac.esa.int/pla/aio/product-action?COSMOLOGY.FILE_ID=";
const PS_FILES: [&str; 3] = [
    "COM_PowerSpect_CMB-TT-full_R3.01.txt",
    "COM_PowerSpect_CMB-TE-full_R3.01.txt",
    "COM_PowerSpect_CMB-EE-full_R3.01.txt",
];

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub download: Download,
    pub summary: Summary,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Download {
    /// Template with `{foreground}` and `{nside}` placeholders.
    pub map_url: String,
    pub powerspectrum_urls: BTreeMap<String, String>,
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Summary {
    /// Header keywords copied into `info` reports.
    pub cards: Vec<String>,
}

impl Default for Download {
    fn default() -> Self {
        Download {
            map_url: MAP_URL.to_string(),
            powerspectrum_urls: PS_FILES
                .iter()
                .enumerate()
                .map(|(k, f)| ((k + 1).to_string(), format!("{PS_URL}{f}")))
                .collect(),
            cache_dir: None,
        }
    }
}

impl Default for Summary {
    fn default() -> Self {
        let cards = ["NSIDE", "ORDERING", "COORDSYS", "INDXSCHM", "TELESCOP", "OBJECT", "TUNIT1", "BAD_DATA"];
        Summary { cards: cards.iter().map(|s| s.to_string()).collect() }
    }
}

impl Config {
    pub fn load(explicit: Option<&Path>) -> CliResult<Config> {
        let path = match explicit {
            Some(p) => Some(p.to_path_buf()),
            None => std::env::var_os(CONFIG_ENV).map(PathBuf::from),
        };
        let Some(path) = path else {
            return Ok(Config::default());
        };
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))?;
        Config::parse(&text).map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Config, toml::de::Error> {
        let mut cfg: Config = toml::from_str(text)?;
        // Overrides extend the shipped links rather than replacing them.
        let mut urls = Download::default().powerspectrum_urls;
        urls.append(&mut cfg.download.powerspectrum_urls);
        cfg.download.powerspectrum_urls = urls;
        Ok(cfg)
    }

    /// `SPHERESTAT_CACHE`, then `cache_dir`, then the working directory.
    pub fn cache_dir(&self) -> PathBuf {
        std::env::var_os(CACHE_ENV)
            .map(PathBuf::from)
            .or_else(|| self.download.cache_dir.clone())
            .unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn map_url(&self, foreground: &str, nside: u64) -> String {
        self.download.map_url.replace("{foreground}", foreground).replace("{nside}", &nside.to_string())
    }
}
