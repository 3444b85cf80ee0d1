//! Flat `key = value` experiment configuration.
//!
//! Every key has a recorded default equal to the published value where one
//! exists; the remaining keys are artifact plumbing (seeds, output paths,
//! realization counts). The canonical rendering — sorted keys, one
//! `key = value` line each — is what [`ExperimentConfig::config_hash`]
//! covers, and parsing it back reproduces the config exactly.
//!
//! List- and grid-valued keys keep their literal text (comma lists or
//! inclusive `start:end:step` ranges) so serialization is lossless; the
//! `*_values` accessors expand them on use.

use mazesim_core::photonic::WidthConvention;
use mazesim_core::{Result, SimError};
use sha2::{Digest, Sha256};

/// Hex SHA-256 of a byte string; used for config and output hashing.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let digest = h.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// All recipe and module parameters in one flat bag.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Recipe name: `fig2`, `psweep`, `maze18` or `loss`.
    pub recipe: String,
    /// Output directory for tables, charts and the manifest.
    pub out_dir: String,
    /// Base seed; derived streams (mazes, noise realizations) use
    /// consecutive seeds starting here.
    pub seed: u64,
    /// Worker threads; 0 keeps the rayon default (all cores).
    pub threads: usize,
    /// Maze JSON substituting the built-in graph in graph-driven recipes;
    /// empty selects the shipped 18-site instance (`maze18`, `loss`) or
    /// seeded generation (`fig2`, `psweep`).
    pub maze_file: String,

    /// Grid rows for one-off maze generation.
    pub rows: usize,
    /// Grid columns for one-off maze generation.
    pub cols: usize,
    /// Uniform nearest-neighbour coupling T of the abstract model.
    pub t_rate: f64,
    /// Next-nearest-neighbour parasitic coupling as a fraction of the
    /// nearest-neighbour value (geometry-derived couplings only).
    pub nnn_ratio: f64,

    /// Sink transfer rate Gamma for single runs.
    pub gamma: f64,
    /// Gamma list for sweeps.
    pub gammas: String,
    /// Mixing parameter for single runs.
    pub p: f64,
    /// p grid for sweeps.
    pub p_grid: String,
    /// RK4 step; 0 derives the step from the stability bound.
    pub dt: f64,

    /// Maze sizes (node counts, perfect squares) for the scaling recipe.
    pub sizes: String,
    /// p values compared in the scaling recipe.
    pub p_set: String,
    /// Seeded mazes generated per size; the recipe reports the median and
    /// the min/max spread over them.
    pub mazes_per_size: usize,
    /// Maze sizes for the p-sweep recipe (node counts, perfect squares).
    pub sweep_sizes: String,

    /// Nearest-neighbour coupling of the waveguide model, 1/mm.
    pub kappa: f64,
    /// Detuning amplitude Delta-beta_max, 1/mm.
    pub dbeta_max: f64,
    /// Segment length of the piecewise-constant detuning, mm.
    pub segment_mm: f64,
    /// Sink chain length in waveguides.
    pub sink_len: usize,
    /// Propagation length, mm.
    pub z_end_mm: f64,
    /// Measurement lengths, mm (segment boundaries are always sampled too).
    pub z_grid_mm: String,
    /// Noise realizations in ensemble averages.
    pub realizations: usize,
    /// Individually reported noisy realizations in the showcase recipe.
    pub noise_seeds: usize,
    /// Reading of "amplitude" for the uniform detuning law: `full`
    /// (peak-to-peak width) or `half` (half width).
    pub width_convention: String,
    /// Extra maze-waveguide loss over the reference length, dB.
    pub loss_db: f64,
    /// Reference length for the loss figure, mm.
    pub loss_ref_mm: f64,
    /// p grid for calibrating the equivalent mixing parameter.
    pub calib_p_grid: String,

    /// Waveguide count of the linear-array benchmark.
    pub array_count: usize,
    /// Propagation length of the linear-array benchmark, mm.
    pub array_z_mm: f64,
    /// Coupling of the linear-array benchmark, 1/mm.
    pub array_kappa: f64,
    /// Detuning amplitudes compared in the linear-array benchmark.
    pub dbeta_list: String,
    /// Lindblad p values matched against the linear-array profiles.
    pub array_p_grid: String,
    /// Noise realizations per linear-array profile.
    pub array_realizations: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            recipe: "maze18".into(),
            out_dir: "out".into(),
            seed: 7,
            threads: 0,
            maze_file: String::new(),
            rows: 10,
            cols: 10,
            t_rate: 1.0,
            nnn_ratio: 0.2,
            gamma: 1.0,
            gammas: "0.1,1,10".into(),
            p: 0.1,
            p_grid: "0:1:0.02".into(),
            dt: 0.0,
            sizes: "64,100,144,256".into(),
            p_set: "0,0.1,1".into(),
            mazes_per_size: 3,
            sweep_sizes: "100".into(),
            kappa: 0.4,
            dbeta_max: 0.4,
            segment_mm: 3.0,
            sink_len: 62,
            z_end_mm: 60.0,
            z_grid_mm: "10,20,30,40,50,60".into(),
            realizations: 100,
            noise_seeds: 3,
            width_convention: "full".into(),
            loss_db: 2.0,
            loss_ref_mm: 60.0,
            calib_p_grid: "0:1:0.01".into(),
            array_count: 101,
            array_z_mm: 50.0,
            array_kappa: 0.4,
            dbeta_list: "0,0.2,0.4,0.8".into(),
            array_p_grid: "0,0.1,0.5,1".into(),
            array_realizations: 200,
        }
    }
}

/// The recipes a config can name.
pub const RECIPES: [&str; 4] = ["fig2", "psweep", "maze18", "loss"];

impl ExperimentConfig {
    /// Canonical text rendering: sorted keys, one `key = value` line each.
    /// Values are single-line; surrounding whitespace is not significant.
    pub fn to_text(&self) -> String {
        let mut pairs = self.pairs();
        pairs.sort_by(|a, b| a.0.cmp(b.0));
        let mut out = String::new();
        for (k, v) in pairs {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        }
        out
    }

    /// Parses the flat text format: `key = value` lines, `#` comments and
    /// blank lines ignored, unknown or repeated keys rejected, keys not
    /// present keep their defaults.
    pub fn from_text(text: &str) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        let mut seen: Vec<String> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                SimError::Parse(format!("config line {}: expected key = value", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            if seen.iter().any(|s| s == key) {
                return Err(SimError::Parse(format!(
                    "config line {}: repeated key {key}",
                    lineno + 1
                )));
            }
            seen.push(key.to_string());
            cfg.set(key, value)
                .map_err(|e| SimError::Parse(format!("config line {}: {e}", lineno + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Hex SHA-256 of the canonical text; identical hash means identical
    /// recipe output bytes.
    pub fn config_hash(&self) -> String {
        sha256_hex(self.to_text().as_bytes())
    }

    pub fn validate(&self) -> Result<()> {
        if !RECIPES.contains(&self.recipe.as_str()) {
            return Err(SimError::BadParameter(format!(
                "unknown recipe {:?}; expected one of {:?}",
                self.recipe, RECIPES
            )));
        }
        self.width()?;
        for (name, v) in [
            ("t_rate", self.t_rate),
            ("kappa", self.kappa),
            ("segment_mm", self.segment_mm),
            ("z_end_mm", self.z_end_mm),
            ("loss_ref_mm", self.loss_ref_mm),
            ("array_z_mm", self.array_z_mm),
            ("array_kappa", self.array_kappa),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(SimError::BadParameter(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("nnn_ratio", self.nnn_ratio),
            ("gamma", self.gamma),
            ("p", self.p),
            ("dt", self.dt),
            ("dbeta_max", self.dbeta_max),
            ("loss_db", self.loss_db),
        ] {
            if v < 0.0 || !v.is_finite() {
                return Err(SimError::BadParameter(format!("{name} must be nonnegative, got {v}")));
            }
        }
        if self.p > 1.0 {
            return Err(SimError::BadParameter(format!("p must lie in [0, 1], got {}", self.p)));
        }
        for (name, v) in [
            ("mazes_per_size", self.mazes_per_size),
            ("realizations", self.realizations),
            ("array_realizations", self.array_realizations),
        ] {
            if v == 0 {
                return Err(SimError::BadParameter(format!("{name} must be at least 1")));
            }
        }
        Ok(())
    }

    /// Width convention as the core enum.
    pub fn width(&self) -> Result<WidthConvention> {
        match self.width_convention.as_str() {
            "full" => Ok(WidthConvention::FullWidth),
            "half" => Ok(WidthConvention::HalfWidth),
            other => Err(SimError::BadParameter(format!(
                "width_convention must be full or half, got {other:?}"
            ))),
        }
    }

    pub fn gammas_values(&self) -> Result<Vec<f64>> {
        parse_grid(&self.gammas)
    }

    pub fn p_grid_values(&self) -> Result<Vec<f64>> {
        parse_grid(&self.p_grid)
    }

    pub fn p_set_values(&self) -> Result<Vec<f64>> {
        parse_grid(&self.p_set)
    }

    pub fn sizes_values(&self) -> Result<Vec<usize>> {
        parse_usize_list(&self.sizes)
    }

    pub fn sweep_sizes_values(&self) -> Result<Vec<usize>> {
        parse_usize_list(&self.sweep_sizes)
    }

    pub fn z_grid_values(&self) -> Result<Vec<f64>> {
        parse_grid(&self.z_grid_mm)
    }

    pub fn calib_p_grid_values(&self) -> Result<Vec<f64>> {
        parse_grid(&self.calib_p_grid)
    }

    pub fn dbeta_list_values(&self) -> Result<Vec<f64>> {
        parse_grid(&self.dbeta_list)
    }

    pub fn array_p_grid_values(&self) -> Result<Vec<f64>> {
        parse_grid(&self.array_p_grid)
    }

    fn pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("recipe", self.recipe.clone()),
            ("out_dir", self.out_dir.clone()),
            ("seed", self.seed.to_string()),
            ("threads", self.threads.to_string()),
            ("maze_file", self.maze_file.clone()),
            ("rows", self.rows.to_string()),
            ("cols", self.cols.to_string()),
            ("t_rate", self.t_rate.to_string()),
            ("nnn_ratio", self.nnn_ratio.to_string()),
            ("gamma", self.gamma.to_string()),
            ("gammas", self.gammas.clone()),
            ("p", self.p.to_string()),
            ("p_grid", self.p_grid.clone()),
            ("dt", self.dt.to_string()),
            ("sizes", self.sizes.clone()),
            ("p_set", self.p_set.clone()),
            ("mazes_per_size", self.mazes_per_size.to_string()),
            ("sweep_sizes", self.sweep_sizes.clone()),
            ("kappa", self.kappa.to_string()),
            ("dbeta_max", self.dbeta_max.to_string()),
            ("segment_mm", self.segment_mm.to_string()),
            ("sink_len", self.sink_len.to_string()),
            ("z_end_mm", self.z_end_mm.to_string()),
            ("z_grid_mm", self.z_grid_mm.clone()),
            ("realizations", self.realizations.to_string()),
            ("noise_seeds", self.noise_seeds.to_string()),
            ("width_convention", self.width_convention.clone()),
            ("loss_db", self.loss_db.to_string()),
            ("loss_ref_mm", self.loss_ref_mm.to_string()),
            ("calib_p_grid", self.calib_p_grid.clone()),
            ("array_count", self.array_count.to_string()),
            ("array_z_mm", self.array_z_mm.to_string()),
            ("array_kappa", self.array_kappa.to_string()),
            ("dbeta_list", self.dbeta_list.clone()),
            ("array_p_grid", self.array_p_grid.clone()),
            ("array_realizations", self.array_realizations.to_string()),
        ]
    }

    /// Sets one key from its text value; used by the parser and by CLI
    /// overrides.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn f64_of(key: &str, v: &str) -> Result<f64> {
            v.parse::<f64>().map_err(|_| SimError::Parse(format!("{key}: not a number: {v:?}")))
        }
        fn u64_of(key: &str, v: &str) -> Result<u64> {
            v.parse::<u64>().map_err(|_| SimError::Parse(format!("{key}: not an integer: {v:?}")))
        }
        fn usize_of(key: &str, v: &str) -> Result<usize> {
            v.parse::<usize>().map_err(|_| SimError::Parse(format!("{key}: not an integer: {v:?}")))
        }
        match key {
            "recipe" => self.recipe = value.to_string(),
            "out_dir" => self.out_dir = value.to_string(),
            "seed" => self.seed = u64_of(key, value)?,
            "threads" => self.threads = usize_of(key, value)?,
            "maze_file" => self.maze_file = value.to_string(),
            "rows" => self.rows = usize_of(key, value)?,
            "cols" => self.cols = usize_of(key, value)?,
            "t_rate" => self.t_rate = f64_of(key, value)?,
            "nnn_ratio" => self.nnn_ratio = f64_of(key, value)?,
            "gamma" => self.gamma = f64_of(key, value)?,
            "gammas" => self.gammas = value.to_string(),
            "p" => self.p = f64_of(key, value)?,
            "p_grid" => self.p_grid = value.to_string(),
            "dt" => self.dt = f64_of(key, value)?,
            "sizes" => self.sizes = value.to_string(),
            "p_set" => self.p_set = value.to_string(),
            "mazes_per_size" => self.mazes_per_size = usize_of(key, value)?,
            "sweep_sizes" => self.sweep_sizes = value.to_string(),
            "kappa" => self.kappa = f64_of(key, value)?,
            "dbeta_max" => self.dbeta_max = f64_of(key, value)?,
            "segment_mm" => self.segment_mm = f64_of(key, value)?,
            "sink_len" => self.sink_len = usize_of(key, value)?,
            "z_end_mm" => self.z_end_mm = f64_of(key, value)?,
            "z_grid_mm" => self.z_grid_mm = value.to_string(),
            "realizations" => self.realizations = usize_of(key, value)?,
            "noise_seeds" => self.noise_seeds = usize_of(key, value)?,
            "width_convention" => self.width_convention = value.to_string(),
            "loss_db" => self.loss_db = f64_of(key, value)?,
            "loss_ref_mm" => self.loss_ref_mm = f64_of(key, value)?,
            "calib_p_grid" => self.calib_p_grid = value.to_string(),
            "array_count" => self.array_count = usize_of(key, value)?,
            "array_z_mm" => self.array_z_mm = f64_of(key, value)?,
            "array_kappa" => self.array_kappa = f64_of(key, value)?,
            "dbeta_list" => self.dbeta_list = value.to_string(),
            "array_p_grid" => self.array_p_grid = value.to_string(),
            "array_realizations" => self.array_realizations = usize_of(key, value)?,
            other => return Err(SimError::Parse(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }
}

/// Expands a comma-separated list or an inclusive `start:end:step` range
/// into grid values. Range endpoints are hit exactly; the step must tile
/// the interval.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let text = text.trim();
    if text.is_empty() {
        return Err(SimError::EmptyInput("empty grid".into()));
    }
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(SimError::Parse(format!("range must be start:end:step, got {text:?}")));
        }
        let nums: Vec<f64> = parts
            .iter()
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| SimError::Parse(format!("not a number in range: {s:?}")))
            })
            .collect::<Result<_>>()?;
        let (start, end, step) = (nums[0], nums[1], nums[2]);
        if !(step > 0.0) || end < start {
            return Err(SimError::Parse(format!("need end >= start and step > 0 in {text:?}")));
        }
        let count = ((end - start) / step).round();
        if ((end - start) - count * step).abs() > 1e-9 * step.max(1.0) {
            return Err(SimError::Parse(format!("step does not tile the range {text:?}")));
        }
        let count = count as usize;
        let mut grid: Vec<f64> = (0..=count).map(|i| start + i as f64 * step).collect();
        grid[count] = end;
        return Ok(grid);
    }
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| SimError::Parse(format!("not a number in list: {s:?}")))
        })
        .collect()
}

/// Comma-separated list of nonnegative integers.
pub fn parse_usize_list(text: &str) -> Result<Vec<usize>> {
    let text = text.trim();
    if text.is_empty() {
        return Err(SimError::EmptyInput("empty list".into()));
    }
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| SimError::Parse(format!("not an integer in list: {s:?}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_round_trip_and_validate() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        let text = cfg.to_text();
        let back = ExperimentConfig::from_text(&text).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(text, back.to_text());
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let cfg = ExperimentConfig::default();
        let h1 = cfg.config_hash();
        let h2 = cfg.config_hash();
        assert_eq!(h1, h2);
        assert_eq!(h1.len(), 64);
        let mut other = cfg.clone();
        other.seed = 8;
        assert_ne!(h1, other.config_hash());
    }

    #[test]
    fn comments_blank_lines_and_defaults() {
        let text = "# a comment\n\nrecipe = loss\n  seed =  42 \n";
        let cfg = ExperimentConfig::from_text(text).unwrap();
        assert_eq!(cfg.recipe, "loss");
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.kappa, 0.4);
    }

    #[test]
    fn rejects_unknown_repeated_and_malformed_keys() {
        assert!(matches!(ExperimentConfig::from_text("no_such_key = 1"), Err(SimError::Parse(_))));
        assert!(matches!(
            ExperimentConfig::from_text("seed = 1\nseed = 2"),
            Err(SimError::Parse(_))
        ));
        assert!(matches!(ExperimentConfig::from_text("just words"), Err(SimError::Parse(_))));
        assert!(matches!(ExperimentConfig::from_text("seed = x"), Err(SimError::Parse(_))));
    }

    #[test]
    fn rejects_bad_recipe_and_width() {
        assert!(ExperimentConfig::from_text("recipe = fig9").is_err());
        assert!(ExperimentConfig::from_text("width_convention = quarter").is_err());
    }

    #[test]
    fn grid_range_hits_endpoints_exactly() {
        let g = parse_grid("0:1:0.02").unwrap();
        assert_eq!(g.len(), 51);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[50], 1.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn grid_list_and_errors() {
        assert_eq!(parse_grid("0.1,1,10").unwrap(), vec![0.1, 1.0, 10.0]);
        assert_eq!(parse_grid(" 5 ").unwrap(), vec![5.0]);
        assert!(parse_grid("").is_err());
        assert!(parse_grid("0:1:0.3").is_err());
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_usize_list("64,100").unwrap() == vec![64, 100]);
        assert!(parse_usize_list("64,-1").is_err());
    }

    proptest! {
        // Scalar fields of every numeric kind survive the text round trip
        // bit for bit; shortest-round-trip float formatting guarantees it.
        #[test]
        fn text_round_trip_is_lossless(
            seed in any::<u64>(),
            t_rate in prop::num::f64::POSITIVE.prop_filter("finite", |v| v.is_finite()),
            nnn in 0.0..10.0f64,
            gamma in 0.0..1e6f64,
            p in 0.0..=1.0f64,
            dt in 0.0..1e3f64,
            threads in 0usize..64,
            path in "[a-zA-Z0-9_./-]{0,24}",
        ) {
            let cfg = ExperimentConfig {
                seed,
                t_rate,
                nnn_ratio: nnn,
                gamma,
                p,
                dt,
                threads,
                maze_file: path,
                ..ExperimentConfig::default()
            };
            let back = ExperimentConfig::from_text(&cfg.to_text()).unwrap();
            prop_assert_eq!(cfg, back);
        }
    }
}
