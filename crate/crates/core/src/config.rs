//! Flat `key = value` configuration covering every tunable default.

use std::fs;
use std::path::Path;

use crate::detector::DetectionConfig;
use crate::error::{Error, Result};
use crate::geometry::AffineState;
use crate::lsmd::PriorScaling;

/// Every recognised key, in the order [`Config::dump`] prints them.
pub const KEYS: &[&str] = &[
    "pipeline.seed",
    "ingest.patch_size",
    "ingest.stride",
    "ingest.use_difference",
    "sparse.lambda1",
    "sparse.max_iter",
    "sparse.tol",
    "lsmd.mu_L",
    "lsmd.mu_S",
    "lsmd.lambda_l1",
    "lsmd.max_iter",
    "lsmd.rel_tol",
    "lsmd.k",
    "lsmd.prior_scaling",
    "tracker.n_particles",
    "tracker.sigma_x",
    "tracker.sigma_y",
    "tracker.sigma_theta",
    "tracker.sigma_s",
    "tracker.sigma_alpha",
    "tracker.sigma_phi",
    "tracker.n_templates",
    "tracker.template_size",
    "tracker.sigma_c",
    "tracker.eps_occ",
    "tracker.tau_update",
    "tracker.max_occlusion",
    "tracker.use_difference",
    "tracker.init",
    "detector.tau_on",
    "detector.tau_off",
    "detector.min_len",
    "detector.kappa",
    "detector.lsmd_stride",
];

const SIGMA_KEYS: [&str; 6] = [
    "tracker.sigma_x",
    "tracker.sigma_y",
    "tracker.sigma_theta",
    "tracker.sigma_s",
    "tracker.sigma_alpha",
    "tracker.sigma_phi",
];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Config {
    pub seed: u64,
    pub detection: DetectionConfig,
}

fn type_error(key: &str, value: &str, expected: &'static str) -> Error {
    Error::TypeError {
        key: key.to_string(),
        value: value.to_string(),
        expected,
    }
}

fn range_error(key: &str, reason: &str) -> Error {
    Error::RangeError {
        key: key.to_string(),
        reason: reason.to_string(),
    }
}

fn int(key: &str, value: &str) -> Result<i64> {
    value.parse().map_err(|_| type_error(key, value, "int"))
}

fn count(key: &str, value: &str, min: i64) -> Result<usize> {
    let v = int(key, value)?;
    if v < min {
        return Err(range_error(key, &format!("must be at least {min}")));
    }
    Ok(v as usize)
}

fn real(key: &str, value: &str) -> Result<f64> {
    let v: f64 = value.parse().map_err(|_| type_error(key, value, "real"))?;
    if !v.is_finite() {
        return Err(range_error(key, "must be finite"));
    }
    Ok(v)
}

fn positive(key: &str, value: &str) -> Result<f64> {
    let v = real(key, value)?;
    if v <= 0.0 {
        return Err(range_error(key, "must be > 0"));
    }
    Ok(v)
}

fn non_negative(key: &str, value: &str) -> Result<f64> {
    let v = real(key, value)?;
    if v < 0.0 {
        return Err(range_error(key, "must be >= 0"));
    }
    Ok(v)
}

fn unit(key: &str, value: &str) -> Result<f64> {
    let v = real(key, value)?;
    if !(0.0..=1.0).contains(&v) {
        return Err(range_error(key, "must lie in [0, 1]"));
    }
    Ok(v)
}

fn boolean(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(type_error(key, value, "bool")),
    }
}

/// Parses `"lx,ly,theta,s,alpha,phi"`.
pub fn parse_affine(text: &str) -> Option<AffineState> {
    let v: Vec<f64> = text.split(',').map(|p| p.trim().parse().ok()).collect::<Option<_>>()?;
    let arr: [f64; 6] = v.try_into().ok()?;
    Some(AffineState::from_array(arr))
}

fn format_affine(s: &AffineState) -> String {
    s.as_array().map(|v| v.to_string()).join(",")
}

impl Config {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let d = &mut self.detection;
        match key {
            "pipeline.seed" => {
                let v = int(key, value)?;
                if v < 0 {
                    return Err(range_error(key, "must be >= 0"));
                }
                self.seed = v as u64;
            }
            "ingest.patch_size" => d.patch_size = count(key, value, 8)?,
            "ingest.stride" => d.stride = count(key, value, 1)?,
            "ingest.use_difference" => d.use_difference = boolean(key, value)?,
            "sparse.lambda1" => d.tracker.observation.solver.lambda1 = non_negative(key, value)?,
            "sparse.max_iter" => d.tracker.observation.solver.max_iter = count(key, value, 1)?,
            "sparse.tol" => d.tracker.observation.solver.tol = positive(key, value)?,
            "lsmd.mu_L" => d.lsmd.mu_l = positive(key, value)?,
            "lsmd.mu_S" => d.lsmd.mu_s = positive(key, value)?,
            "lsmd.lambda_l1" => d.lsmd.lambda_l1 = non_negative(key, value)?,
            "lsmd.max_iter" => d.lsmd.max_iter = count(key, value, 1)?,
            "lsmd.rel_tol" => d.lsmd.rel_tol = positive(key, value)?,
            "lsmd.k" => d.branching = count(key, value, 2)?,
            "lsmd.prior_scaling" => {
                d.prior_scaling = match value {
                    "absolute" => PriorScaling::Absolute,
                    "frame_max" => PriorScaling::FrameMax,
                    _ => return Err(type_error(key, value, "absolute|frame_max")),
                }
            }
            "tracker.n_particles" => d.tracker.n_particles = count(key, value, 1)?,
            k if SIGMA_KEYS.contains(&k) => {
                let i = SIGMA_KEYS.iter().position(|s| *s == k).expect("checked by guard");
                d.tracker.motion.sigma[i] = non_negative(key, value)?;
            }
            "tracker.n_templates" => d.tracker.n_templates = count(key, value, 1)?,
            "tracker.template_size" => {
                let v = count(key, value, 8)?;
                if v % 8 != 0 {
                    return Err(range_error(key, "must be a multiple of 8"));
                }
                d.tracker.template_size = v;
            }
            "tracker.sigma_c" => d.tracker.observation.sigma_c = positive(key, value)?,
            "tracker.eps_occ" => d.tracker.observation.eps_occ = non_negative(key, value)?,
            "tracker.tau_update" => d.tracker.update.tau_update = unit(key, value)?,
            "tracker.max_occlusion" => d.tracker.update.max_occlusion = unit(key, value)?,
            "tracker.use_difference" => d.tracker.use_difference = boolean(key, value)?,
            "tracker.init" => {
                d.track_init = if value == "none" {
                    None
                } else {
                    let s = parse_affine(value).ok_or_else(|| type_error(key, value, "six comma-separated reals"))?;
                    s.validate().map_err(|e| range_error(key, &e.to_string()))?;
                    Some(s)
                }
            }
            "detector.tau_on" => d.hysteresis.tau_on = unit(key, value)?,
            "detector.tau_off" => d.hysteresis.tau_off = unit(key, value)?,
            "detector.min_len" => d.hysteresis.min_len = count(key, value, 1)?,
            "detector.kappa" => d.kappa = unit(key, value)?,
            "detector.lsmd_stride" => d.lsmd_stride = count(key, value, 1)?,
            _ => return Err(Error::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Result<String> {
        let d = &self.detection;
        Ok(match key {
            "pipeline.seed" => self.seed.to_string(),
            "ingest.patch_size" => d.patch_size.to_string(),
            "ingest.stride" => d.stride.to_string(),
            "ingest.use_difference" => d.use_difference.to_string(),
            "sparse.lambda1" => d.tracker.observation.solver.lambda1.to_string(),
            "sparse.max_iter" => d.tracker.observation.solver.max_iter.to_string(),
            "sparse.tol" => d.tracker.observation.solver.tol.to_string(),
            "lsmd.mu_L" => d.lsmd.mu_l.to_string(),
            "lsmd.mu_S" => d.lsmd.mu_s.to_string(),
            "lsmd.lambda_l1" => d.lsmd.lambda_l1.to_string(),
            "lsmd.max_iter" => d.lsmd.max_iter.to_string(),
            "lsmd.rel_tol" => d.lsmd.rel_tol.to_string(),
            "lsmd.k" => d.branching.to_string(),
            "lsmd.prior_scaling" => match d.prior_scaling {
                PriorScaling::Absolute => "absolute".into(),
                PriorScaling::FrameMax => "frame_max".into(),
            },
            "tracker.n_particles" => d.tracker.n_particles.to_string(),
            k if SIGMA_KEYS.contains(&k) => {
                let i = SIGMA_KEYS.iter().position(|s| *s == k).expect("checked by guard");
                d.tracker.motion.sigma[i].to_string()
            }
            "tracker.n_templates" => d.tracker.n_templates.to_string(),
            "tracker.template_size" => d.tracker.template_size.to_string(),
            "tracker.sigma_c" => d.tracker.observation.sigma_c.to_string(),
            "tracker.eps_occ" => d.tracker.observation.eps_occ.to_string(),
            "tracker.tau_update" => d.tracker.update.tau_update.to_string(),
            "tracker.max_occlusion" => d.tracker.update.max_occlusion.to_string(),
            "tracker.use_difference" => d.tracker.use_difference.to_string(),
            "tracker.init" => d.track_init.as_ref().map_or("none".into(), format_affine),
            "detector.tau_on" => d.hysteresis.tau_on.to_string(),
            "detector.tau_off" => d.hysteresis.tau_off.to_string(),
            "detector.min_len" => d.hysteresis.min_len.to_string(),
            "detector.kappa" => d.kappa.to_string(),
            "detector.lsmd_stride" => d.lsmd_stride.to_string(),
            _ => return Err(Error::UnknownKey(key.to_string())),
        })
    }

    /// Checks constraints that involve more than one key.
    pub fn validate(&self) -> Result<()> {
        let h = &self.detection.hysteresis;
        if h.tau_off > h.tau_on {
            return Err(range_error("detector.tau_off", "must not exceed detector.tau_on"));
        }
        if self.detection.kappa > 0.0 && self.detection.track_init.is_none() {
            return Err(range_error("detector.kappa", "a positive kappa needs tracker.init"));
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of the current values.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            self.apply_assignment(line)?;
        }
        Ok(())
    }

    /// Applies a single `key=value` override.
    pub fn apply_assignment(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| type_error(assignment.trim(), "", "key = value"))?;
        self.set(key.trim(), value)
    }

    /// Defaults, then the optional file, then the overrides in order.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Config> {
        let mut config = Config::default();
        if let Some(path) = path {
            let text = fs::read_to_string(path).map_err(|e| match e.kind() {
                std::io::ErrorKind::NotFound => Error::MissingSource(path.to_path_buf()),
                _ => Error::Io(e),
            })?;
            config.apply_text(&text)?;
        }
        for o in overrides {
            config.apply_assignment(o)?;
        }
        config.validate()?;
        Ok(config)
    }

    /// The detection settings with the pipeline seed applied to every seeded stage.
    pub fn effective_detection(&self) -> DetectionConfig {
        let mut d = self.detection.clone();
        d.lsmd.seed = self.seed;
        d.tracker.seed = self.seed;
        d
    }

    /// Every key with its effective value, one `key = value` per line.
    pub fn dump(&self) -> String {
        KEYS.iter()
            .map(|k| format!("{k} = {}\n", self.get(k).expect("every listed key is readable")))
            .collect()
    }
}
