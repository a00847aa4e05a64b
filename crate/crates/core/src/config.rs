//! Problem parameters and the flat `key = value` configuration format.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fem::Family;
use crate::mesh::{Domain, Point2};

/// Velocity/pressure pair; the temperature degree follows from it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ElementFamily {
    /// P2 velocity, P1 pressure, P2 temperature.
    TaylorHood,
    /// P1 + bubble velocity, P1 pressure, P1 temperature.
    Mini,
}

impl ElementFamily {
    pub fn velocity(self) -> Family {
        match self {
            ElementFamily::TaylorHood => Family::P2,
            ElementFamily::Mini => Family::P1Bubble,
        }
    }

    pub fn pressure(self) -> Family {
        Family::P1
    }

    pub fn temperature(self) -> Family {
        match self {
            ElementFamily::TaylorHood => Family::P2,
            ElementFamily::Mini => Family::P1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ElementFamily::TaylorHood => "th",
            ElementFamily::Mini => "mini",
        }
    }
}

impl fmt::Display for ElementFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ElementFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "th" | "taylor_hood" | "taylor-hood" | "taylorhood" => Ok(ElementFamily::TaylorHood),
            "mini" => Ok(ElementFamily::Mini),
            other => Err(Error::InvalidConfig(format!("unknown element family `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemConfig {
    /// Viscosity.
    pub nu: f64,
    /// Thermal diffusivity.
    pub kappa: f64,
    /// Gravity direction multiplying the temperature in the momentum balance.
    pub g: [f64; 2],
    /// Strength of the point heat source.
    pub h_strength: f64,
    /// Location of the point heat source.
    pub z: Point2,
    /// Exponent of the weight `|x - z|^alpha`.
    pub alpha: f64,
    pub domain: Domain,
    pub element_family: ElementFamily,
    pub picard_tol: f64,
    pub picard_max: usize,
    pub adapt_max: usize,
    pub marking_fraction: f64,
    /// Subdivisions per unit length of the initial mesh; `None` uses the
    /// domain's benchmark mesh.
    pub initial_resolution: Option<usize>,
    /// The adaptive loop stops once a refined mesh exceeds this many elements.
    pub element_budget: usize,
    /// The adaptive loop stops once an element becomes smaller than this.
    pub min_element_area: f64,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        ProblemConfig {
            nu: 1.0,
            kappa: 1.0,
            g: [1.0, 0.0],
            h_strength: 1.0,
            z: Point2::new(0.5, 0.5),
            alpha: 0.5,
            domain: Domain::Square,
            element_family: ElementFamily::TaylorHood,
            picard_tol: 1e-8,
            picard_max: 50,
            adapt_max: 30,
            marking_fraction: 0.5,
            initial_resolution: None,
            element_budget: 200_000,
            min_element_area: 1e-15,
        }
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value.trim().parse().map_err(|_| Error::InvalidConfig(format!("`{key}`: cannot parse `{value}` as a number")))
}

fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("`{key}`: cannot parse `{value}` as a non-negative integer")))
}

fn parse_pair(key: &str, value: &str) -> Result<[f64; 2]> {
    let parts: Vec<&str> = value.split(',').collect();
    if parts.len() != 2 {
        return Err(Error::InvalidConfig(format!("`{key}`: expected two comma-separated numbers, got `{value}`")));
    }
    Ok([parse_f64(key, parts[0])?, parse_f64(key, parts[1])?])
}

impl ProblemConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim();
        let value = value.trim();
        match key {
            "nu" => self.nu = parse_f64(key, value)?,
            "kappa" => self.kappa = parse_f64(key, value)?,
            "g" => self.g = parse_pair(key, value)?,
            "gx" => self.g[0] = parse_f64(key, value)?,
            "gy" => self.g[1] = parse_f64(key, value)?,
            "h_strength" | "hsource" => self.h_strength = parse_f64(key, value)?,
            "z" => {
                let [x, y] = parse_pair(key, value)?;
                self.z = Point2::new(x, y);
            }
            "alpha" => self.alpha = parse_f64(key, value)?,
            "domain" => self.domain = value.parse()?,
            "element" | "element_family" => self.element_family = value.parse()?,
            "picard_tol" => self.picard_tol = parse_f64(key, value)?,
            "picard_max" => self.picard_max = parse_usize(key, value)?,
            "adapt_max" => self.adapt_max = parse_usize(key, value)?,
            "marking_fraction" | "marking_frac" => self.marking_fraction = parse_f64(key, value)?,
            "initial_resolution" => {
                self.initial_resolution = match value {
                    "" | "default" => None,
                    v => Some(parse_usize(key, v)?),
                }
            }
            "element_budget" => self.element_budget = parse_usize(key, value)?,
            "min_element_area" => self.min_element_area = parse_f64(key, value)?,
            _ => return Err(Error::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Parses `key = value` lines on top of the defaults. Blank lines and
    /// text after `#` are ignored. The result is not validated.
    pub fn parse_str(text: &str) -> Result<ProblemConfig> {
        let mut cfg = ProblemConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("line {}: expected `key = value`", lineno + 1)))?;
            cfg.set(key, value)?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<ProblemConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ProblemConfig::parse_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return invalid(format!("nu must be positive, got {}", self.nu));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return invalid(format!("kappa must be positive, got {}", self.kappa));
        }
        if !(self.g.iter().all(|v| v.is_finite()) && self.h_strength.is_finite()) {
            return invalid("g and h_strength must be finite".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return Err(Error::AlphaOutOfRange(self.alpha));
        }
        if !self.domain.contains_interior(self.z) {
            return invalid(format!("source point {} is not interior to the {} domain", self.z, self.domain));
        }
        if !(self.picard_tol > 0.0) {
            return invalid(format!("picard_tol must be positive, got {}", self.picard_tol));
        }
        if self.picard_max == 0 {
            return invalid("picard_max must be at least 1".into());
        }
        if self.adapt_max == 0 {
            return invalid("adapt_max must be at least 1".into());
        }
        if !(self.marking_fraction > 0.0 && self.marking_fraction <= 1.0) {
            return invalid(format!("marking_fraction must lie in (0, 1], got {}", self.marking_fraction));
        }
        if self.initial_resolution == Some(0) {
            return invalid("initial_resolution must be at least 1".into());
        }
        Ok(())
    }

    pub fn resolution(&self) -> usize {
        self.initial_resolution.unwrap_or_else(|| self.domain.default_resolution())
    }

    /// Serializes every field in the configuration file format.
    pub fn to_config_string(&self) -> String {
        format!(
            "nu = {}\nkappa = {}\ng = {},{}\nh_strength = {}\nz = {},{}\nalpha = {}\ndomain = {}\nelement = {}\n\
             picard_tol = {:e}\npicard_max = {}\nadapt_max = {}\nmarking_fraction = {}\ninitial_resolution = {}\n\
             element_budget = {}\nmin_element_area = {:e}\n",
            self.nu,
            self.kappa,
            self.g[0],
            self.g[1],
            self.h_strength,
            self.z.x,
            self.z.y,
            self.alpha,
            self.domain,
            self.element_family,
            self.picard_tol,
            self.picard_max,
            self.adapt_max,
            self.marking_fraction,
            self.initial_resolution.map_or("default".to_string(), |n| n.to_string()),
            self.element_budget,
            self.min_element_area,
        )
    }
}
