use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::CliError;
use crate::datasets::InputDist;
use crate::dropout::TrainMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Mc,
    Relu,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Mc => "mc",
            Task::Relu => "relu",
        }
    }
}

/// Where training data comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    /// Generated from the synthetic settings in [`RunConfig`].
    Synthetic,
    /// A `::`-delimited ratings file, split 90/10 per seed.
    MovieLens(PathBuf),
    /// IDX image/label files; test files are optional (a 10% split is used otherwise).
    Idx {
        images: PathBuf,
        labels: PathBuf,
        test_images: Option<PathBuf>,
        test_labels: Option<PathBuf>,
    },
}

/// Full experiment configuration. Build with [`RunConfig::defaults`] and [`RunConfig::set`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub task: Task,
    pub data: DataSource,
    pub width: usize,
    pub rates: Vec<f64>,
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seeds: Vec<u64>,
    pub mode: TrainMode,
    pub symmetrize: bool,
    pub out: Option<PathBuf>,
    pub delta: f64,

    // Synthetic completion task.
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
    pub train_fraction: f64,
    pub test_fraction: f64,
    pub noise: f64,
    /// Scale the synthetic ground truth to spectral norm 1.
    pub normalize: bool,
    pub center: bool,

    // Planted-teacher task.
    pub input_dim: usize,
    pub teacher_width: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub input: InputDist,
    pub beta_dirs: usize,
    pub class_a: u8,
    pub class_b: u8,

    /// Measured-quantities CSV read by the bounds command.
    pub measured: Option<PathBuf>,
    /// Monte-Carlo trials per audit instance.
    pub mc_trials: usize,
    /// Audit sensitivity check: scales `λ` by 1.01 on the closed-form side.
    pub inject_bug: bool,
}

impl RunConfig {
    pub fn defaults(task: Task) -> Self {
        let (width, lr, batch_size, epochs) = match task {
            Task::Mc => (20, 1.0, 2000, 100),
            Task::Relu => (32, 1e-3, 32, 30),
        };
        Self {
            task,
            data: DataSource::Synthetic,
            width,
            rates: vec![0.0, 0.1, 0.2, 0.3],
            lr,
            batch_size,
            epochs,
            seeds: (0..20).collect(),
            mode: TrainMode::SampledMask,
            symmetrize: false,
            out: None,
            delta: 0.05,
            rows: 100,
            cols: 80,
            rank: 3,
            train_fraction: 0.4,
            test_fraction: 0.2,
            noise: 0.0,
            normalize: false,
            center: true,
            input_dim: 20,
            teacher_width: 8,
            n_train: 200,
            n_test: 2000,
            input: InputDist::Gaussian,
            beta_dirs: crate::relunet::DEFAULT_BETA_DIRECTIONS,
            class_a: 4,
            class_b: 7,
            measured: None,
            mc_trials: 100_000,
            inject_bug: false,
        }
    }

    /// Applies one `key = value` setting. List keys (`seeds`, `rates`) replace the whole list.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let v = value.trim();
        let bad = |what: &str| CliError::Config(format!("{key}: {what} `{v}`"));
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad("not a number"));
        let count = |s: &str| s.trim().parse::<usize>().map_err(|_| bad("not a non-negative integer"));
        let flag = |s: &str| match s.trim() {
            "true" | "1" | "yes" | "on" | "" => Ok(true),
            "false" | "0" | "no" | "off" => Ok(false),
            _ => Err(bad("not a boolean")),
        };
        let norm = key.trim().replace('-', "_");
        match norm.as_str() {
            "width" => self.width = count(v)?,
            "rate" | "rates" => self.rates = v.split(',').map(num).collect::<Result<_, _>>()?,
            "lr" => self.lr = num(v)?,
            "batch" | "batch_size" => self.batch_size = count(v)?,
            "epochs" => self.epochs = count(v)?,
            "seed" | "seeds" => self.seeds = parse_seeds(v).ok_or_else(|| bad("not a seed list"))?,
            "mode" => self.mode = v.parse().map_err(|e: String| CliError::Config(e))?,
            "symmetrize" => self.symmetrize = flag(v)?,
            "out" => self.out = Some(PathBuf::from(v)),
            "delta" => self.delta = num(v)?,
            "rows" => self.rows = count(v)?,
            "cols" => self.cols = count(v)?,
            "rank" => self.rank = count(v)?,
            "train_fraction" => self.train_fraction = num(v)?,
            "test_fraction" => self.test_fraction = num(v)?,
            "noise" => self.noise = num(v)?,
            "normalize" => self.normalize = flag(v)?,
            "center" => self.center = flag(v)?,
            "input_dim" | "d0" => self.input_dim = count(v)?,
            "teacher_width" => self.teacher_width = count(v)?,
            "n_train" => self.n_train = count(v)?,
            "n_test" => self.n_test = count(v)?,
            "input" => self.input = v.parse().map_err(|e: String| CliError::Config(e))?,
            "beta_dirs" => self.beta_dirs = count(v)?,
            "class_a" => self.class_a = v.parse().map_err(|_| bad("not a digit class"))?,
            "class_b" => self.class_b = v.parse().map_err(|_| bad("not a digit class"))?,
            "measured" => self.measured = Some(PathBuf::from(v)),
            "mc_trials" => self.mc_trials = count(v)?,
            "inject_bug" => self.inject_bug = flag(v)?,
            "movielens" => self.data = DataSource::MovieLens(PathBuf::from(v)),
            "images" | "labels" | "test_images" | "test_labels" => self.set_idx_path(&norm, PathBuf::from(v)),
            other => return Err(CliError::Config(format!("unknown setting `{other}`"))),
        }
        Ok(())
    }

    fn set_idx_path(&mut self, key: &str, path: PathBuf) {
        if !matches!(self.data, DataSource::Idx { .. }) {
            self.data = DataSource::Idx {
                images: PathBuf::new(),
                labels: PathBuf::new(),
                test_images: None,
                test_labels: None,
            };
        }
        if let DataSource::Idx {
            images,
            labels,
            test_images,
            test_labels,
        } = &mut self.data
        {
            match key {
                "images" => *images = path,
                "labels" => *labels = path,
                "test_images" => *test_images = Some(path),
                _ => *test_labels = Some(path),
            }
        }
    }

    /// Applies a flat `key = value` file; blank lines and `#` comments are ignored.
    pub fn apply_file_text(&mut self, text: &str) -> Result<(), CliError> {
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("config line {}: expected key = value", k + 1)))?;
            self.set(key, value)
                .map_err(|e| CliError::Config(format!("config line {}: {e}", k + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        self.apply_file_text(&text)
    }

    /// Defaults, then the optional file, then `overrides` in order.
    pub fn resolve(task: Task, file: Option<&Path>, overrides: &[(String, String)]) -> Result<Self, CliError> {
        let mut cfg = Self::defaults(task);
        if let Some(p) = file {
            cfg.apply_file(p)?;
        }
        for (k, v) in overrides {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |m: String| Err(CliError::Config(m));
        if self.rates.is_empty() {
            return fail("at least one dropout rate is required".into());
        }
        if let Some(r) = self.rates.iter().find(|r| !(**r >= 0.0 && **r < 1.0)) {
            return fail(format!("dropout rate {r} is outside [0, 1)"));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return fail(format!("learning rate must be positive, got {}", self.lr));
        }
        if self.epochs == 0 || self.batch_size == 0 || self.width == 0 {
            return fail("epochs, batch size and width must be at least 1".into());
        }
        if self.seeds.is_empty() {
            return fail("at least one seed is required".into());
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return fail(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return fail(format!("noise must be non-negative, got {}", self.noise));
        }
        if let DataSource::Idx { images, labels, .. } = &self.data {
            if images.as_os_str().is_empty() || labels.as_os_str().is_empty() {
                return fail("IDX data needs both `images` and `labels`".into());
            }
        }
        Ok(())
    }

    /// Canonical text of every setting that influences results; the run grid and output path are left out.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "task={};data={:?};width={};lr={:e};batch={};epochs={};mode={};symmetrize={};",
            self.task.name(),
            self.data,
            self.width,
            self.lr,
            self.batch_size,
            self.epochs,
            self.mode,
            self.symmetrize
        );
        let _ = write!(
            s,
            "rows={};cols={};rank={};train_fraction={:e};test_fraction={:e};noise={:e};normalize={};center={};",
            self.rows,
            self.cols,
            self.rank,
            self.train_fraction,
            self.test_fraction,
            self.noise,
            self.normalize,
            self.center
        );
        let _ = write!(
            s,
            "d0={};teacher_width={};n_train={};n_test={};input={:?};beta_dirs={};classes={},{}",
            self.input_dim,
            self.teacher_width,
            self.n_train,
            self.n_test,
            self.input,
            self.beta_dirs,
            self.class_a,
            self.class_b
        );
        s
    }

    /// First 8 hex digits of the SHA-256 of [`RunConfig::canonical`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest[..4].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn run_id(&self, seed: u64, rate: f64) -> String {
        format!("{}-{}-s{seed}-p{rate}", self.task.name(), self.hash())
    }
}

/// `0,1,5` or `0..20` (half-open) or a mix such as `0..3,7`.
fn parse_seeds(v: &str) -> Option<Vec<u64>> {
    let mut out = Vec::new();
    for part in v.split(',') {
        let part = part.trim();
        if let Some((a, b)) = part.split_once("..") {
            let (a, b): (u64, u64) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
            out.extend(a..b);
        } else {
            out.push(part.parse().ok()?);
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_cli_over_file_over_defaults() {
        let mut cfg = RunConfig::defaults(Task::Mc);
        assert_eq!(cfg.epochs, 100);
        cfg.apply_file_text("epochs = 7\n# comment\nlr=0.5\nseeds=0..3\n").unwrap();
        cfg.set("epochs", "9").unwrap();
        assert_eq!((cfg.epochs, cfg.lr), (9, 0.5));
        assert_eq!(cfg.seeds, vec![0, 1, 2]);
    }

    #[test]
    fn validation_errors() {
        let mut cfg = RunConfig::defaults(Task::Relu);
        cfg.rates = vec![1.0];
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::defaults(Task::Relu);
        cfg.seeds.clear();
        assert!(cfg.validate().is_err());
        assert!(RunConfig::defaults(Task::Mc).set("bogus", "1").is_err());
    }

    #[test]
    fn hash_ignores_seeds_but_not_width() {
        let a = RunConfig::defaults(Task::Mc);
        let mut b = a.clone();
        b.seeds = vec![42];
        assert_eq!(a.hash(), b.hash());
        b.width = 3;
        assert_ne!(a.hash(), b.hash());
        assert!(a.run_id(4, 0.2).ends_with("-s4-p0.2"));
    }
}
