//! Line-oriented `key=value` run configuration with per-mode
//! validation. CLI flags override file values; unknown keys are
//! rejected so typos fail loudly instead of silently using defaults.

use std::path::PathBuf;

use collision_chords::chords::MapMode;

use crate::RunError;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mode: String,
    pub c: f64,
    pub mu: f64,
    pub seed: u64,
    pub threads: usize,
    pub out: Option<PathBuf>,
    /// sample count for `regularize`
    pub count: usize,
    /// integration horizon for `flow` and per-arc cap elsewhere
    pub horizon: f64,
    /// start point on the collision disc
    pub u1: f64,
    pub u2: f64,
    pub grid_r: usize,
    pub grid_theta: usize,
    pub max_order: usize,
    pub period_max: usize,
    pub iterates: usize,
    pub tol: f64,
    pub map: MapMode,
    pub with_action: bool,
    /// arc count and spacing for `indices`
    pub arcs: usize,
    pub arc_step: f64,
    /// action-window width for `specseq`
    pub width: f64,
    /// polynomial profile for `toy`, constant term first
    pub coeffs: Vec<f64>,
    pub chop: Option<f64>,
    pub floor: Option<f64>,
    /// path to a complex description for `specseq`
    pub complex: Option<PathBuf>,
    /// criteria subset for `verify`
    pub criteria: Option<Vec<usize>>,
}

impl RunConfig {
    pub fn defaults(mode: &str) -> Self {
        Self {
            mode: mode.to_string(),
            c: -2.0,
            mu: 0.0,
            seed: 0,
            threads: 1,
            out: None,
            count: 1000,
            horizon: 10.0,
            u1: 0.3,
            u2: 0.2,
            grid_r: 8,
            grid_theta: 16,
            max_order: 8,
            period_max: 64,
            iterates: 8,
            tol: 1e-6,
            map: MapMode::ClosedForm,
            with_action: false,
            arcs: 12,
            arc_step: 1.4,
            width: 0.4,
            coeffs: vec![0.0, 0.0, std::f64::consts::FRAC_PI_2],
            chop: None,
            floor: None,
            complex: None,
            criteria: None,
        }
    }

    /// Applies one `key=value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), RunError> {
        let bad = |what: &str| RunError::Config(format!("{key}: {what}: {value:?}"));
        match key {
            "mode" => {
                if value != self.mode {
                    return Err(RunError::Config(format!(
                        "config is for mode {value:?} but the {} subcommand was invoked",
                        self.mode
                    )));
                }
            }
            "c" => self.c = parse_f64(value).ok_or_else(|| bad("not a number"))?,
            "mu" => self.mu = parse_f64(value).ok_or_else(|| bad("not a number"))?,
            "seed" => self.seed = value.parse().map_err(|_| bad("not an integer"))?,
            "threads" => self.threads = value.parse().map_err(|_| bad("not an integer"))?,
            "output_dir" => self.out = Some(PathBuf::from(value)),
            "count" => self.count = value.parse().map_err(|_| bad("not an integer"))?,
            "horizon" => self.horizon = parse_f64(value).ok_or_else(|| bad("not a number"))?,
            "u1" => self.u1 = parse_f64(value).ok_or_else(|| bad("not a number"))?,
            "u2" => self.u2 = parse_f64(value).ok_or_else(|| bad("not a number"))?,
            "grid_r" => self.grid_r = value.parse().map_err(|_| bad("not an integer"))?,
            "grid_theta" => self.grid_theta = value.parse().map_err(|_| bad("not an integer"))?,
            "max_order" => self.max_order = value.parse().map_err(|_| bad("not an integer"))?,
            "period_max" => self.period_max = value.parse().map_err(|_| bad("not an integer"))?,
            "iterates" => self.iterates = value.parse().map_err(|_| bad("not an integer"))?,
            "tol" => self.tol = parse_f64(value).ok_or_else(|| bad("not a number"))?,
            "map" => {
                self.map = match value {
                    "closed-form" => MapMode::ClosedForm,
                    "numeric" => MapMode::Numeric,
                    _ => return Err(bad("expected closed-form or numeric")),
                }
            }
            "with_action" => {
                self.with_action = match value {
                    "true" => true,
                    "false" => false,
                    _ => return Err(bad("expected true or false")),
                }
            }
            "arcs" => self.arcs = value.parse().map_err(|_| bad("not an integer"))?,
            "arc_step" => self.arc_step = parse_f64(value).ok_or_else(|| bad("not a number"))?,
            "width" => self.width = parse_f64(value).ok_or_else(|| bad("not a number"))?,
            "coeffs" => {
                let parsed: Option<Vec<f64>> = value.split(',').map(parse_f64).collect();
                self.coeffs = parsed.ok_or_else(|| bad("expected comma-separated numbers"))?;
            }
            "chop" => self.chop = Some(parse_f64(value).ok_or_else(|| bad("not a number"))?),
            "floor" => self.floor = Some(parse_f64(value).ok_or_else(|| bad("not a number"))?),
            "complex" => self.complex = Some(PathBuf::from(value)),
            "criteria" => {
                let parsed: Result<Vec<usize>, _> =
                    value.split(',').map(|s| s.trim().parse()).collect();
                self.criteria = Some(parsed.map_err(|_| bad("expected comma-separated ids"))?);
            }
            _ => return Err(RunError::Config(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    pub fn apply_file(&mut self, text: &str) -> Result<(), RunError> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                RunError::Config(format!("line {}: expected key=value, got {line:?}", i + 1))
            })?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    /// Mode-specific validity checks; violations are config errors.
    pub fn validate(&self) -> Result<(), RunError> {
        let err = |msg: String| Err(RunError::Config(msg));
        if self.tol <= 0.0 || !self.tol.is_finite() {
            return err(format!("tol must be positive, got {}", self.tol));
        }
        if self.threads == 0 {
            return err("threads must be at least 1".into());
        }
        if self.mu != 0.0 {
            return err(format!("only mu = 0 is implemented, got mu = {}", self.mu));
        }
        let needs_open_book = matches!(
            self.mode.as_str(),
            "flow" | "return-map" | "chords" | "indices"
        );
        if needs_open_book && self.c >= -1.5 {
            return err(format!(
                "c = {} is not below the critical value -3/2; the section structure only exists for c < -3/2",
                self.c
            ));
        }
        if self.mode == "regularize" && self.c >= 0.0 {
            return err(format!("regularize needs a negative energy level, got c = {}", self.c));
        }
        if self.grid_r == 0 || self.grid_theta == 0 {
            return err("grid dimensions must be positive".into());
        }
        if self.width <= 0.0 {
            return err(format!("width must be positive, got {}", self.width));
        }
        if self.horizon <= 0.0 {
            return err(format!("horizon must be positive, got {}", self.horizon));
        }
        if self.mode == "toy" && self.coeffs.is_empty() {
            return err("coeffs must not be empty".into());
        }
        if let Some(ids) = &self.criteria {
            if ids.is_empty() || ids.iter().any(|&i| i == 0 || i > 10) {
                return err(format!("criteria must be ids in 1..=10, got {ids:?}"));
            }
        }
        Ok(())
    }

    /// Resolved settings echoed into the manifest.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut out = vec![
            ("mode".into(), self.mode.clone()),
            ("c".into(), format!("{}", self.c)),
            ("mu".into(), format!("{}", self.mu)),
            ("seed".into(), format!("{}", self.seed)),
            ("threads".into(), format!("{}", self.threads)),
            ("tol".into(), format!("{}", self.tol)),
        ];
        match self.mode.as_str() {
            "regularize" => out.push(("count".into(), format!("{}", self.count))),
            "flow" => {
                out.push(("u1".into(), format!("{}", self.u1)));
                out.push(("u2".into(), format!("{}", self.u2)));
                out.push(("horizon".into(), format!("{}", self.horizon)));
            }
            "return-map" => {
                out.push(("u1".into(), format!("{}", self.u1)));
                out.push(("u2".into(), format!("{}", self.u2)));
                out.push(("iterates".into(), format!("{}", self.iterates)));
            }
            "chords" => {
                out.push(("grid_r".into(), format!("{}", self.grid_r)));
                out.push(("grid_theta".into(), format!("{}", self.grid_theta)));
                out.push(("max_order".into(), format!("{}", self.max_order)));
                out.push(("period_max".into(), format!("{}", self.period_max)));
                out.push((
                    "map".into(),
                    match self.map {
                        MapMode::ClosedForm => "closed-form".into(),
                        MapMode::Numeric => "numeric".into(),
                    },
                ));
                out.push(("with_action".into(), format!("{}", self.with_action)));
            }
            "indices" => {
                out.push(("u1".into(), format!("{}", self.u1)));
                out.push(("u2".into(), format!("{}", self.u2)));
                out.push(("arcs".into(), format!("{}", self.arcs)));
                out.push(("arc_step".into(), format!("{}", self.arc_step)));
            }
            "specseq" => {
                out.push(("width".into(), format!("{}", self.width)));
                if let Some(p) = &self.complex {
                    out.push(("complex".into(), p.display().to_string()));
                }
            }
            "toy" => {
                let cs: Vec<String> = self.coeffs.iter().map(|c| format!("{c}")).collect();
                out.push(("coeffs".into(), cs.join(";")));
                if let Some(r) = self.chop {
                    out.push(("chop".into(), format!("{r}")));
                }
                if let Some(a) = self.floor {
                    out.push(("floor".into(), format!("{a}")));
                }
            }
            "verify" => {
                if let Some(ids) = &self.criteria {
                    let s: Vec<String> = ids.iter().map(|i| format!("{i}")).collect();
                    out.push(("criteria".into(), s.join(";")));
                }
            }
            _ => {}
        }
        out
    }
}

fn parse_f64(s: &str) -> Option<f64> {
    let v: f64 = s.trim().parse().ok()?;
    v.is_finite().then_some(v)
}
