use clap::ValueEnum;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Profile {
    Desk,
    Full,
}

impl Profile {
    pub fn name(self) -> &'static str {
        match self {
            Profile::Desk => "desk",
            Profile::Full => "full",
        }
    }

    /// Network grid and trial count.
    pub fn network(self) -> (usize, usize, usize) {
        match self {
            Profile::Desk => (50, 30, 100),
            Profile::Full => (100, 60, 500),
        }
    }

    /// Cap on the simulated time of Biot runs; `None` keeps the config's.
    pub fn t_cap(self) -> Option<f64> {
        match self {
            Profile::Desk => Some(60.0),
            Profile::Full => None,
        }
    }
}

/// What produced a set of output files. Echoed as `#` comment lines at the
/// top of every CSV and written out as `manifest.txt`. Deliberately free of
/// timestamps so identical invocations give identical bytes.
pub struct Manifest {
    pub experiment: String,
    pub config: Option<PathBuf>,
    pub seed: u64,
    pub profile: Profile,
    pub out: PathBuf,
    pub params: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(experiment: String, seed: u64, profile: Profile, out: Option<PathBuf>) -> Self {
        let out = out.unwrap_or_else(|| PathBuf::from("runs").join(&experiment));
        Self {
            experiment,
            config: None,
            seed,
            profile,
            out,
            params: Vec::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.params.push((key.to_string(), value.to_string()));
        self
    }

    pub fn header(&self) -> Vec<String> {
        let mut lines = vec![
            format!("experiment: {}", self.experiment),
            format!("version: poroperm {}", env!("CARGO_PKG_VERSION")),
            format!("seed: {}", self.seed),
            format!("profile: {}", self.profile.name()),
        ];
        if let Some(c) = &self.config {
            lines.push(format!("config: {}", c.display()));
        }
        lines.extend(self.params.iter().map(|(k, v)| format!("{k}: {v}")));
        lines
    }

    /// Creates the output directory and writes `manifest.txt` into it.
    pub fn prepare(&self) -> std::io::Result<()> {
        fs::create_dir_all(&self.out)?;
        let mut f = self.create("manifest.txt")?;
        for line in self.header() {
            writeln!(f, "{line}")?;
        }
        writeln!(f, "output: {}", self.out.display())?;
        f.flush()
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    pub fn create(&self, name: &str) -> std::io::Result<BufWriter<File>> {
        Ok(BufWriter::new(File::create(self.path(name))?))
    }
}
