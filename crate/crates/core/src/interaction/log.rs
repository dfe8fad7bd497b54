use super::{Interaction, InteractionError};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

/// Append-only JSON Lines sink, one interaction per line.
pub struct InteractionLog {
    out: BufWriter<File>,
}

impl InteractionLog {
    pub fn create(path: &Path) -> Result<Self, InteractionError> {
        let file = File::create(path).map_err(|e| InteractionError::Log(format!("{}: {e}", path.display())))?;
        Ok(Self {
            out: BufWriter::new(file),
        })
    }

    pub fn append(&mut self, interaction: &Interaction) -> Result<(), InteractionError> {
        let line = serde_json::to_string(interaction).map_err(|e| InteractionError::Log(e.to_string()))?;
        writeln!(self.out, "{line}").map_err(|e| InteractionError::Log(e.to_string()))
    }

    pub fn flush(&mut self) -> Result<(), InteractionError> {
        self.out.flush().map_err(|e| InteractionError::Log(e.to_string()))
    }
}

impl Drop for InteractionLog {
    fn drop(&mut self) {
        let _ = self.out.flush();
    }
}

pub fn read_log(path: &Path) -> Result<Vec<Interaction>, InteractionError> {
    let file = File::open(path).map_err(|e| InteractionError::Log(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| InteractionError::Log(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let interaction: Interaction =
            serde_json::from_str(&line).map_err(|e| InteractionError::Log(format!("line {}: {e}", n + 1)))?;
        out.push(interaction);
    }
    Ok(out)
}
