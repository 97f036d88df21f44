//! Single-stream downloads of Planck products.

use std::f64::consts::PI;
use std::fs::{self, File};
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use spherestat::fits::open_map;
use spherestat::geostat::{Convention, PowerSpectrum};

use crate::config::Config;
use crate::error::{CliError, CliResult};
use crate::{DownloadArgs, Product};

const PROGRESS_STEP: u64 = 16 << 20;

pub fn run(a: &DownloadArgs, cfg: &Config, out: Option<&Path>) -> CliResult<()> {
    let (url, default_name) = match a.product {
        Product::Map => {
            let fg = a.foreground.name();
            (cfg.map_url(fg, a.nside), format!("COM_CMB_IQU-{fg}_{}_R2.02_full.fits", a.nside))
        }
        Product::Powerspectrum => {
            let url = cfg.download.powerspectrum_urls.get(&a.link).ok_or_else(|| {
                let known: Vec<&str> = cfg.download.powerspectrum_urls.keys().map(String::as_str).collect();
                CliError::usage(format!("unknown power spectrum link `{}`; known: {}", a.link, known.join(", ")))
            })?;
            (url.clone(), format!("powerspectrum_{}.csv", a.link))
        }
    };
    let dest = match out {
        Some(p) => p.to_path_buf(),
        None => {
            let dir = cfg.cache_dir();
            fs::create_dir_all(&dir).map_err(|e| CliError::usage(format!("cache {}: {e}", dir.display())))?;
            dir.join(default_name)
        }
    };
    if a.offline {
        return Err(CliError::Network(format!("offline; not fetching {url}")));
    }
    let part = partial_path(&dest);
    let result = match a.product {
        Product::Map => fetch_map(&url, &part),
        Product::Powerspectrum => fetch_spectrum(&url, &part),
    };
    match result.and_then(|()| fs::rename(&part, &dest).map_err(|e| CliError::usage(format!("{}: {e}", dest.display())))) {
        Ok(()) => {
            eprintln!("saved {}", dest.display());
            Ok(())
        }
        Err(e) => {
            let _ = fs::remove_file(&part);
            Err(e)
        }
    }
}

fn partial_path(dest: &Path) -> PathBuf {
    let mut s = dest.as_os_str().to_owned();
    s.push(".part");
    PathBuf::from(s)
}

fn net(url: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Network(format!("{url}: {e}"))
}

/// Reader over a `file://` path or an HTTP(S) response body.
fn open(url: &str) -> CliResult<Box<dyn Read>> {
    if let Some(path) = url.strip_prefix("file://") {
        return Ok(Box::new(File::open(path).map_err(|e| net(url, e))?));
    }
    let config = ureq::Agent::config_builder()
        .timeout_connect(Some(Duration::from_secs(30)))
        .timeout_recv_response(Some(Duration::from_secs(60)))
        .build();
    let agent = ureq::Agent::new_with_config(config);
    let response = agent.get(url).call().map_err(|e| net(url, e))?;
    Ok(Box::new(response.into_body().into_reader()))
}

fn copy_with_progress(mut src: impl Read, dst: &mut impl Write, url: &str) -> CliResult<u64> {
    let mut buf = vec![0u8; 1 << 16];
    let mut total = 0u64;
    let mut next = PROGRESS_STEP;
    loop {
        let n = match src.read(&mut buf) {
            Ok(0) => break,
            Ok(n) => n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
            Err(e) => return Err(net(url, e)),
        };
        dst.write_all(&buf[..n]).map_err(|e| CliError::usage(format!("write: {e}")))?;
        total += n as u64;
        if total >= next {
            eprintln!("{} MiB", total >> 20);
            next += PROGRESS_STEP;
        }
    }
    Ok(total)
}

fn fetch_map(url: &str, part: &Path) -> CliResult<()> {
    let src = open(url)?;
    let file = File::create(part).map_err(|e| CliError::usage(format!("{}: {e}", part.display())))?;
    let mut w = BufWriter::new(file);
    let n = copy_with_progress(src, &mut w, url)?;
    w.flush().map_err(|e| CliError::usage(format!("write: {e}")))?;
    drop(w);
    eprintln!("{n} bytes from {url}");
    open_map(part).map_err(|e| CliError::Network(format!("{url} did not yield a HEALPix map: {e}")))?;
    Ok(())
}

/// Fetches a spectrum table and stores it as `l,D_l` CSV.
fn fetch_spectrum(url: &str, part: &Path) -> CliResult<()> {
    let mut text = String::new();
    let mut bytes = Vec::new();
    copy_with_progress(open(url)?, &mut bytes, url)?;
    text.push_str(&String::from_utf8_lossy(&bytes));
    let ps = PowerSpectrum::parse(&text).map_err(|e| CliError::Network(format!("{url} did not yield a spectrum: {e}")))?;
    let mut csv = String::from("l,D_l\n");
    for (&l, &v) in ps.ell.iter().zip(&ps.values) {
        let d = match ps.convention {
            Convention::Dl => v,
            Convention::Cl => l as f64 * (l as f64 + 1.0) * v / (2.0 * PI),
        };
        csv.push_str(&format!("{l},{d}\n"));
    }
    fs::write(part, csv).map_err(|e| CliError::usage(format!("{}: {e}", part.display())))
}
