//! Binary model files.
//!
//! Layout (little-endian): magic `PLTC`, `u32` version, config
//! (`u32 dim, f64 lr, u32 epochs, u32 word_ngrams, u32 min_count,
//! u64 hash_buckets, u64 seed, u32 threads`), label names, vocabulary,
//! stored bucket ids, the input matrix and the output matrix as `f32`.
//! Strings are `u32` length + UTF-8 bytes; lists are `u32` count + items.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{ClassifierConfig, ClassifierError, TextClassifier};

pub const MODEL_MAGIC: [u8; 4] = *b"PLTC";
pub const MODEL_VERSION: u32 = 1;

pub fn save(model: &TextClassifier, path: &Path) -> Result<(), ClassifierError> {
    let mut out = BufWriter::new(File::create(path)?);
    write_model(model, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn load(path: &Path) -> Result<TextClassifier, ClassifierError> {
    read_model(&mut BufReader::new(File::open(path)?))
}

fn put_u32<W: Write>(out: &mut W, v: u32) -> std::io::Result<()> {
    out.write_all(&v.to_le_bytes())
}

fn put_u64<W: Write>(out: &mut W, v: u64) -> std::io::Result<()> {
    out.write_all(&v.to_le_bytes())
}

fn put_str<W: Write>(out: &mut W, s: &str) -> std::io::Result<()> {
    put_u32(out, s.len() as u32)?;
    out.write_all(s.as_bytes())
}

pub fn write_model<W: Write>(model: &TextClassifier, out: &mut W) -> Result<(), ClassifierError> {
    let c = model.config();
    out.write_all(&MODEL_MAGIC)?;
    put_u32(out, MODEL_VERSION)?;
    put_u32(out, c.dim as u32)?;
    out.write_all(&c.lr.to_le_bytes())?;
    put_u32(out, c.epochs as u32)?;
    put_u32(out, c.word_ngrams as u32)?;
    put_u32(out, c.min_count as u32)?;
    put_u64(out, c.hash_buckets)?;
    put_u64(out, c.seed)?;
    put_u32(out, c.threads as u32)?;
    let labels = model.label_names();
    put_u32(out, labels.len() as u32)?;
    for l in labels {
        put_str(out, l)?;
    }
    put_u32(out, model.vocabulary().len() as u32)?;
    for w in model.vocabulary() {
        put_str(out, w)?;
    }
    put_u32(out, model.bucket_ids().len() as u32)?;
    for &b in model.bucket_ids() {
        put_u64(out, b)?;
    }
    for &x in model.input_weights().iter().chain(model.output_weights()) {
        out.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

struct Reader<'a, R: Read>(&'a mut R);

impl<R: Read> Reader<'_, R> {
    fn bytes<const N: usize>(&mut self, what: &str) -> Result<[u8; N], ClassifierError> {
        let mut buf = [0u8; N];
        self.0.read_exact(&mut buf).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => {
                ClassifierError::CorruptModel(format!("truncated while reading {what}"))
            }
            _ => ClassifierError::Io(e),
        })?;
        Ok(buf)
    }

    fn u32(&mut self, what: &str) -> Result<u32, ClassifierError> {
        Ok(u32::from_le_bytes(self.bytes(what)?))
    }

    fn u64(&mut self, what: &str) -> Result<u64, ClassifierError> {
        Ok(u64::from_le_bytes(self.bytes(what)?))
    }

    fn string(&mut self, what: &str) -> Result<String, ClassifierError> {
        let len = self.u32(what)? as usize;
        if len > 1 << 20 {
            return Err(ClassifierError::CorruptModel(format!(
                "implausible {what} length {len}"
            )));
        }
        let mut buf = vec![0u8; len];
        self.0
            .read_exact(&mut buf)
            .map_err(|_| ClassifierError::CorruptModel(format!("truncated while reading {what}")))?;
        String::from_utf8(buf).map_err(|_| ClassifierError::CorruptModel(format!("{what} is not UTF-8")))
    }

    fn floats(&mut self, n: usize, what: &str) -> Result<Vec<f32>, ClassifierError> {
        let mut raw = vec![0u8; n * 4];
        self.0
            .read_exact(&mut raw)
            .map_err(|_| ClassifierError::CorruptModel(format!("truncated while reading {what}")))?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect())
    }
}

pub fn read_model<R: Read>(input: &mut R) -> Result<TextClassifier, ClassifierError> {
    let mut r = Reader(input);
    if r.bytes::<4>("magic")? != MODEL_MAGIC {
        return Err(ClassifierError::CorruptModel("bad magic bytes".into()));
    }
    let version = r.u32("version")?;
    if version != MODEL_VERSION {
        return Err(ClassifierError::VersionMismatch {
            found: version,
            expected: MODEL_VERSION,
        });
    }
    let config = ClassifierConfig {
        dim: r.u32("dim")? as usize,
        lr: f64::from_le_bytes(r.bytes("lr")?),
        epochs: r.u32("epochs")? as usize,
        word_ngrams: r.u32("word_ngrams")? as usize,
        min_count: r.u32("min_count")? as usize,
        hash_buckets: r.u64("hash_buckets")?,
        seed: r.u64("seed")?,
        threads: r.u32("threads")? as usize,
    };
    let n_labels = r.u32("label count")?;
    let labels: Vec<String> = (0..n_labels).map(|_| r.string("label")).collect::<Result<_, _>>()?;
    if labels != ["C1", "C2"] {
        return Err(ClassifierError::CorruptModel(format!("unexpected labels {labels:?}")));
    }
    let n_words = r.u32("vocabulary size")? as usize;
    let words: Vec<String> = (0..n_words).map(|_| r.string("word")).collect::<Result<_, _>>()?;
    let n_buckets = r.u32("bucket count")? as usize;
    let bucket_ids: Vec<u64> = (0..n_buckets).map(|_| r.u64("bucket id")).collect::<Result<_, _>>()?;
    let input = r.floats((n_words + n_buckets) * config.dim, "input matrix")?;
    let output = r.floats(2 * config.dim, "output matrix")?;
    let mut trailing = [0u8; 1];
    if r.0.read(&mut trailing)? != 0 {
        return Err(ClassifierError::CorruptModel(
            "trailing bytes after output matrix".into(),
        ));
    }
    TextClassifier::from_parts(config, words, bucket_ids, input, output).map_err(|e| match e {
        ClassifierError::InvalidConfig(m) => ClassifierError::CorruptModel(m),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::train;
    use crate::corpus::{Label, TrainingCorpus, UserDocument};

    fn model() -> TextClassifier {
        let examples = (0..20)
            .map(|i| {
                let (label, text) = if i % 2 == 0 {
                    (Label::C1, "red apple sweet")
                } else {
                    (Label::C2, "green grape sour")
                };
                (
                    label,
                    UserDocument {
                        user_id: i.to_string(),
                        text: text.into(),
                        source_tweet_count: 1,
                    },
                )
            })
            .collect();
        let corpus = TrainingCorpus::from_examples(examples).unwrap();
        train(
            &corpus,
            &ClassifierConfig {
                dim: 8,
                epochs: 5,
                ..Default::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let m = model();
        let mut buf = Vec::new();
        write_model(&m, &mut buf).unwrap();
        let back = read_model(&mut &buf[..]).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let mut buf = Vec::new();
        write_model(&model(), &mut buf).unwrap();
        for cut in [2, 10, buf.len() / 2, buf.len() - 1] {
            let err = read_model(&mut &buf[..cut]).unwrap_err();
            assert!(matches!(err, ClassifierError::CorruptModel(_)), "cut {cut}: {err:?}");
        }
        buf.push(0);
        assert!(matches!(
            read_model(&mut &buf[..]),
            Err(ClassifierError::CorruptModel(_))
        ));
    }

    #[test]
    fn version_mismatch_is_reported() {
        let mut buf = Vec::new();
        write_model(&model(), &mut buf).unwrap();
        buf[4] = 99;
        assert!(matches!(
            read_model(&mut &buf[..]),
            Err(ClassifierError::VersionMismatch { found: 99, expected: 1 })
        ));
    }
}
