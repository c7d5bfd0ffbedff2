use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use super::AudioError;

/// One line of a corpus manifest (tab separated, no header):
/// `utterance_id speaker_id language clean_path noise_type snr_db mixed_path duration_s`.
#[derive(Clone, Debug, PartialEq)]
pub struct ManifestRow {
    pub utterance_id: String,
    pub speaker_id: String,
    pub language: String,
    pub clean_path: PathBuf,
    pub noise_type: String,
    pub snr_db: f64,
    pub mixed_path: PathBuf,
    pub duration_s: f64,
}

impl ManifestRow {
    pub fn to_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.utterance_id,
            self.speaker_id,
            self.language,
            self.clean_path.display(),
            self.noise_type,
            self.snr_db,
            self.mixed_path.display(),
            self.duration_s
        )
    }

    fn parse(line: &str) -> Result<Self, String> {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 8 {
            return Err(format!("expected 8 tab-separated fields, found {}", fields.len()));
        }
        let num = |i: usize, name: &str| fields[i].parse::<f64>().map_err(|e| format!("{name} {:?}: {e}", fields[i]));
        Ok(Self {
            utterance_id: fields[0].to_string(),
            speaker_id: fields[1].to_string(),
            language: fields[2].to_string(),
            clean_path: PathBuf::from(fields[3]),
            noise_type: fields[4].to_string(),
            snr_db: num(5, "snr_db")?,
            mixed_path: PathBuf::from(fields[6]),
            duration_s: num(7, "duration_s")?,
        })
    }
}

pub fn write_manifest(rows: &[ManifestRow], path: impl AsRef<Path>) -> Result<(), AudioError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for row in rows {
        writeln!(out, "{}", row.to_line())?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a manifest; relative paths are resolved against the manifest's
/// directory. Blank lines and `#` comments are skipped.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestRow>, AudioError> {
    let path = path.as_ref();
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut rows = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut row = ManifestRow::parse(&line).map_err(|detail| AudioError::Manifest { path: path.to_path_buf(), line: i + 1, detail })?;
        for p in [&mut row.clean_path, &mut row.mixed_path] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        rows.push(row);
    }
    Ok(rows)
}
