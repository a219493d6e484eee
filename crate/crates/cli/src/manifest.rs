use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Record of one CLI invocation, written next to its outputs.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub command: String,
    pub version: &'static str,
    pub input: PathBuf,
    pub input_hash: String,
    pub seed: Option<u64>,
    pub outputs: Vec<PathBuf>,
    pub wall_time_s: f64,
}

pub const MANIFEST_FILE: &str = "run_manifest.txt";

impl RunManifest {
    pub fn new(command: String, input: &Path, input_hash: String, seed: Option<u64>) -> Self {
        Self {
            command,
            version: env!("CARGO_PKG_VERSION"),
            input: input.to_path_buf(),
            input_hash,
            seed,
            outputs: Vec::new(),
            wall_time_s: 0.0,
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "command={}", self.command);
        let _ = writeln!(out, "version={}", self.version);
        let _ = writeln!(out, "input={}", self.input.display());
        let _ = writeln!(out, "input_hash={}", self.input_hash);
        match self.seed {
            Some(seed) => {
                let _ = writeln!(out, "seed={seed}");
            }
            None => out.push_str("seed=none\n"),
        }
        for path in &self.outputs {
            let _ = writeln!(out, "output={}", path.display());
        }
        let _ = writeln!(out, "wall_time_s={:.3}", self.wall_time_s);
        out
    }
}
