//! JSONL persistence for training pairs and other line records.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::types::LiteralMetaphorPair;

/// Streams records from JSONL text. Blank lines are skipped; a malformed
/// record yields a parse error carrying its 1-based line number.
pub struct JsonlReader<R, T> {
    lines: std::io::Lines<R>,
    line_no: usize,
    _record: std::marker::PhantomData<T>,
}

impl<R: BufRead, T: DeserializeOwned> JsonlReader<R, T> {
    pub fn new(reader: R) -> Self {
        JsonlReader {
            lines: reader.lines(),
            line_no: 0,
            _record: std::marker::PhantomData,
        }
    }
}

impl<R: BufRead, T: DeserializeOwned> Iterator for JsonlReader<R, T> {
    type Item = Result<T>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => return Some(Err(e.into())),
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            return Some(serde_json::from_str(&line).map_err(|e| Error::Parse {
                line: self.line_no,
                message: e.to_string(),
            }));
        }
    }
}

pub fn write_jsonl<'a, T, I, W>(records: I, mut out: W) -> Result<()>
where
    T: Serialize + 'a,
    I: IntoIterator<Item = &'a T>,
    W: Write,
{
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_pairs(path: impl AsRef<Path>) -> Result<JsonlReader<BufReader<File>, LiteralMetaphorPair>> {
    Ok(JsonlReader::new(BufReader::new(File::open(path)?)))
}

pub fn write_pairs<'a>(
    pairs: impl IntoIterator<Item = &'a LiteralMetaphorPair>,
    path: impl AsRef<Path>,
) -> Result<()> {
    write_jsonl(pairs, BufWriter::new(File::create(path)?))
}

pub fn write_json_file<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value).map_err(std::io::Error::from)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}
