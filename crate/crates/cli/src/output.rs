//! Output directory with a shared provenance header.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::error::CliError;

pub const VERSION: &str = concat!("dbar ", env!("CARGO_PKG_VERSION"));

pub struct Output {
    pub dir: PathBuf,
    /// Lines written (with a `# ` prefix) at the top of every file.
    pub header: Vec<String>,
}

impl Output {
    pub fn new(dir: &Path, cfg: &RunConfig) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let mut header = vec![VERSION.to_string(), format!("command = {}", cfg.run.command.name())];
        header.extend(cfg.echo().lines().filter(|l| !l.is_empty()).map(str::to_string));
        Ok(Self {
            dir: dir.to_path_buf(),
            header,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Write a file through `fill`, mapping I/O errors to the file's path.
    pub fn write(&self, name: &str, fill: impl FnOnce(&mut BufWriter<File>, &[String]) -> std::io::Result<()>) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        let mut w = BufWriter::new(file);
        fill(&mut w, &self.header)
            .and_then(|_| w.flush())
            .map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}

/// `# `-prefixed header lines.
pub fn write_header<W: Write>(w: &mut W, header: &[String]) -> std::io::Result<()> {
    for line in header {
        writeln!(w, "# {line}")?;
    }
    Ok(())
}
