use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use super::PipelineError;

pub const ARTIFACT_VERSION: u32 = 1;

/// A stage output file and the subcommand that produces it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Artifact {
    pub kind: &'static str,
    pub file: &'static str,
    pub producer: &'static str,
}

pub const RECORDS: Artifact = Artifact {
    kind: "records",
    file: "records.jsonl",
    producer: "build-graph",
};
pub const GRAPH: Artifact = Artifact {
    kind: "graph",
    file: "graph.tsv",
    producer: "build-graph",
};
pub const NODES: Artifact = Artifact {
    kind: "nodes",
    file: "nodes.tsv",
    producer: "build-graph",
};
pub const GRAPH_SUMMARY: Artifact = Artifact {
    kind: "graph-summary",
    file: "graph.json",
    producer: "build-graph",
};
pub const PARTITION: Artifact = Artifact {
    kind: "partition",
    file: "partition.tsv",
    producer: "cluster",
};
pub const DOCUMENTS: Artifact = Artifact {
    kind: "documents",
    file: "documents.tsv",
    producer: "train",
};
pub const CORPUS: Artifact = Artifact {
    kind: "corpus",
    file: "corpus.tsv",
    producer: "train",
};
pub const MODEL: Artifact = Artifact {
    kind: "model",
    file: "model.bin",
    producer: "train",
};
pub const REPORT: Artifact = Artifact {
    kind: "report",
    file: "report.json",
    producer: "score",
};

impl Artifact {
    pub fn path(&self, dir: &Path) -> PathBuf {
        dir.join(self.file)
    }

    /// Path of an artifact that must already exist.
    pub fn require(&self, dir: &Path) -> Result<PathBuf, PipelineError> {
        let path = self.path(dir);
        if path.is_file() {
            Ok(path)
        } else {
            Err(PipelineError::MissingArtifact {
                path,
                producer: self.producer,
            })
        }
    }

    pub fn header(&self, config_hash: &str) -> String {
        format!(
            "# polarimeter:{} v{} config={}",
            self.kind, ARTIFACT_VERSION, config_hash
        )
    }

    /// Creates the file and writes its header line.
    pub fn create(&self, dir: &Path, config_hash: &str) -> Result<BufWriter<File>, PipelineError> {
        let mut out = BufWriter::new(File::create(self.path(dir))?);
        writeln!(out, "{}", self.header(config_hash))?;
        Ok(out)
    }

    /// Opens an existing artifact, warning when its header names another
    /// kind, version or configuration.
    pub fn open(&self, dir: &Path, config_hash: &str) -> Result<BufReader<File>, PipelineError> {
        let path = self.require(dir)?;
        let mut reader = BufReader::new(File::open(&path)?);
        let mut first = String::new();
        reader.read_line(&mut first)?;
        check_header(&path, self, first.trim_end(), config_hash);
        Ok(BufReader::new(File::open(&path)?))
    }
}

fn check_header(path: &Path, artifact: &Artifact, line: &str, config_hash: &str) {
    let Some(rest) = line.strip_prefix("# polarimeter:") else {
        log::warn!("{}: no artifact header", path.display());
        return;
    };
    let mut parts = rest.split_whitespace();
    let kind = parts.next().unwrap_or_default();
    let version = parts.next().unwrap_or_default();
    let hash = parts.next().and_then(|p| p.strip_prefix("config=")).unwrap_or_default();
    if kind != artifact.kind {
        log::warn!("{}: header says {kind:?}, expected {:?}", path.display(), artifact.kind);
    }
    if version != format!("v{ARTIFACT_VERSION}") {
        log::warn!(
            "{}: artifact version {version}, expected v{ARTIFACT_VERSION}",
            path.display()
        );
    }
    if hash != config_hash {
        log::warn!(
            "{}: produced with a different configuration ({}), current is {}",
            path.display(),
            short(hash),
            short(config_hash)
        );
    }
}

fn short(hash: &str) -> &str {
    &hash[..hash.len().min(12)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_artifact_names_its_producer() {
        let dir = tempfile::tempdir().unwrap();
        let err = GRAPH.require(dir.path()).unwrap_err();
        assert!(err.to_string().contains("build-graph"), "{err}");
    }

    #[test]
    fn header_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = PARTITION.create(dir.path(), "abc").unwrap();
        writeln!(out, "u1\t0").unwrap();
        drop(out);
        let text = std::fs::read_to_string(PARTITION.path(dir.path())).unwrap();
        assert_eq!(text, "# polarimeter:partition v1 config=abc\nu1\t0\n");
        assert!(PARTITION.open(dir.path(), "other").is_ok());
    }
}
