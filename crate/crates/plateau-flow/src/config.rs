//! Flat key=value configuration with `[section]` headers.
//!
//! The format is line-oriented: blank lines and `#` comments are skipped,
//! `[section]` opens a section, and `key=value` assigns within it. Values
//! keep everything after the first `=`, so curve preset names with spaces
//! work unquoted.

use crate::{Error, Result};
use std::path::PathBuf;

/// Where the boundary curves come from.
#[derive(Debug, Clone, PartialEq)]
pub enum CurveSpec {
    Preset(String),
    Files { plus: PathBuf, minus: PathBuf },
}

/// Full configuration of a flow run.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    pub n_x: usize,
    pub n_theta: usize,
    pub dim: usize,
    pub h: f64,
    pub t_max: f64,
    pub n_sub: usize,
    pub eta: f64,
    /// `None` selects the normalized length `ell0(eta)`.
    pub ell_init: Option<f64>,
    pub tol_lin: f64,
    pub tol_kkt: f64,
    pub eps_stat: f64,
    pub eps_map: f64,
    pub ell_floor: f64,
    pub b_ceiling: f64,
    pub clamp: bool,
    pub obj_stride: usize,
    pub curves: CurveSpec,
    pub out_dir: Option<PathBuf>,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            n_x: 64,
            n_theta: 48,
            dim: 3,
            h: 1e-2,
            t_max: 50.0,
            n_sub: 4,
            eta: 1.0,
            ell_init: None,
            tol_lin: 1e-10,
            tol_kkt: 1e-6,
            eps_stat: 2e-3,
            eps_map: 2e-3,
            ell_floor: 1e-6,
            b_ceiling: 0.995,
            clamp: false,
            obj_stride: 0,
            curves: CurveSpec::Preset("circles r=1 sep=0.8".into()),
            out_dir: None,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0) {
            return Err(Error::InvalidParam(format!("h = {} must be positive", self.h)));
        }
        if self.t_max < 0.0 {
            return Err(Error::InvalidParam("t_max must be nonnegative".into()));
        }
        if !(self.eta > 0.0) {
            return Err(Error::InvalidParam("eta must be positive".into()));
        }
        for (name, v) in [
            ("tol_lin", self.tol_lin),
            ("tol_kkt", self.tol_kkt),
            ("eps_stat", self.eps_stat),
            ("eps_map", self.eps_map),
            ("ell_floor", self.ell_floor),
        ] {
            if !(v > 0.0) {
                return Err(Error::InvalidParam(format!("{name} must be positive")));
            }
        }
        if !(self.b_ceiling > 0.0 && self.b_ceiling < 1.0) {
            return Err(Error::InvalidParam("b_ceiling must lie in (0, 1)".into()));
        }
        if let Some(l) = self.ell_init {
            if !(l > 0.0) {
                return Err(Error::InvalidParam("ell_init must be positive".into()));
            }
        }
        if self.n_sub == 0 {
            return Err(Error::InvalidParam("n_sub must be positive".into()));
        }
        Ok(())
    }

    /// Canonical serialization; `parse` of the output reproduces the config.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        s.push_str("# plateau-flow configuration\n");
        s.push_str("[grid]\n");
        s.push_str(&format!("n_x={}\n", self.n_x));
        s.push_str(&format!("n_theta={}\n", self.n_theta));
        s.push_str(&format!("dim={}\n", self.dim));
        s.push_str("[time]\n");
        s.push_str(&format!("h={:.17e}\n", self.h));
        s.push_str(&format!("t_max={:.17e}\n", self.t_max));
        s.push_str(&format!("n_sub={}\n", self.n_sub));
        s.push_str("[metric]\n");
        s.push_str(&format!("eta={:.17e}\n", self.eta));
        match self.ell_init {
            Some(l) => s.push_str(&format!("ell_init={l:.17e}\n")),
            None => s.push_str("ell_init=auto\n"),
        }
        s.push_str("[tolerances]\n");
        s.push_str(&format!("tol_lin={:.17e}\n", self.tol_lin));
        s.push_str(&format!("tol_kkt={:.17e}\n", self.tol_kkt));
        s.push_str(&format!("eps_stat={:.17e}\n", self.eps_stat));
        s.push_str(&format!("eps_map={:.17e}\n", self.eps_map));
        s.push_str("[classification]\n");
        s.push_str(&format!("ell_floor={:.17e}\n", self.ell_floor));
        s.push_str(&format!("b_ceiling={:.17e}\n", self.b_ceiling));
        s.push_str("[options]\n");
        s.push_str(&format!("clamp={}\n", self.clamp));
        s.push_str(&format!("obj_stride={}\n", self.obj_stride));
        s.push_str("[curves]\n");
        match &self.curves {
            CurveSpec::Preset(name) => s.push_str(&format!("preset={name}\n")),
            CurveSpec::Files { plus, minus } => {
                s.push_str(&format!("plus_file={}\n", plus.display()));
                s.push_str(&format!("minus_file={}\n", minus.display()));
            }
        }
        if let Some(dir) = &self.out_dir {
            s.push_str("[output]\n");
            s.push_str(&format!("dir={}\n", dir.display()));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = FlowConfig::default();
        let mut section = String::new();
        let mut plus_file: Option<PathBuf> = None;
        let mut minus_file: Option<PathBuf> = None;
        let mut preset: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let lineno = idx + 1;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config {
                    line: lineno,
                    msg: format!("expected key=value, got '{line}'"),
                });
            };
            let key = key.trim();
            let value = value.trim();
            let bad = |msg: String| Error::Config { line: lineno, msg };
            let parse_usize = |v: &str| {
                v.parse::<usize>().map_err(|_| bad(format!("bad integer '{v}' for {key}")))
            };
            let parse_f64 = |v: &str| {
                v.parse::<f64>().map_err(|_| bad(format!("bad float '{v}' for {key}")))
            };
            match (section.as_str(), key) {
                ("grid", "n_x") => cfg.n_x = parse_usize(value)?,
                ("grid", "n_theta") => cfg.n_theta = parse_usize(value)?,
                ("grid", "dim") => cfg.dim = parse_usize(value)?,
                ("time", "h") => cfg.h = parse_f64(value)?,
                ("time", "t_max") => cfg.t_max = parse_f64(value)?,
                ("time", "n_sub") => cfg.n_sub = parse_usize(value)?,
                ("metric", "eta") => cfg.eta = parse_f64(value)?,
                ("metric", "ell_init") => {
                    cfg.ell_init = if value == "auto" { None } else { Some(parse_f64(value)?) }
                }
                ("tolerances", "tol_lin") => cfg.tol_lin = parse_f64(value)?,
                ("tolerances", "tol_kkt") => cfg.tol_kkt = parse_f64(value)?,
                ("tolerances", "eps_stat") => cfg.eps_stat = parse_f64(value)?,
                ("tolerances", "eps_map") => cfg.eps_map = parse_f64(value)?,
                ("classification", "ell_floor") => cfg.ell_floor = parse_f64(value)?,
                ("classification", "b_ceiling") => cfg.b_ceiling = parse_f64(value)?,
                ("options", "clamp") => {
                    cfg.clamp = value
                        .parse::<bool>()
                        .map_err(|_| bad(format!("bad bool '{value}' for clamp")))?
                }
                ("options", "obj_stride") => cfg.obj_stride = parse_usize(value)?,
                ("curves", "preset") => preset = Some(value.to_string()),
                ("curves", "plus_file") => plus_file = Some(PathBuf::from(value)),
                ("curves", "minus_file") => minus_file = Some(PathBuf::from(value)),
                ("output", "dir") => cfg.out_dir = Some(PathBuf::from(value)),
                _ => {
                    return Err(bad(format!("unknown key '{key}' in section '[{section}]'")));
                }
            }
        }
        cfg.curves = match (preset, plus_file, minus_file) {
            (Some(p), None, None) => CurveSpec::Preset(p),
            (None, Some(plus), Some(minus)) => CurveSpec::Files { plus, minus },
            (None, None, None) => cfg.curves,
            _ => {
                return Err(Error::Config {
                    line: 0,
                    msg: "curves need either preset= or both plus_file= and minus_file=".into(),
                })
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
