//! Embedding directory layout:
//!
//! * `embedding.mtx`: MatrixMarket coordinate matrix, 1-based, column-major
//!   entry order, values printed with the shortest round-trip form.
//! * `features.tsv`: `column<TAB>node` per pivot, both 0-based.
//! * `config.json`: format version, shape, value precision and the source
//!   configuration (including the seed).

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Embedding, EmbeddingSource, SparseColumn};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

const MTX_HEADER: &str = "%%MatrixMarket matrix coordinate real general";
const MTX_FILE: &str = "embedding.mtx";
const FEATURES_FILE: &str = "features.tsv";
const CONFIG_FILE: &str = "config.json";

#[derive(Serialize, Deserialize)]
struct Metadata {
    format_version: u32,
    rows: usize,
    cols: usize,
    nnz: usize,
    value_bits: u8,
    seed: u64,
    source: EmbeddingSource,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

/// Writes the three files into `dir`, creating it if needed.
pub fn save_embedding(e: &Embedding, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|err| Error::io(dir, err))?;

    let path = dir.join(MTX_FILE);
    let mut out = create(&path)?;
    let seed = e.source.seed();
    let write_mtx = |out: &mut BufWriter<File>| -> std::io::Result<()> {
        writeln!(out, "{MTX_HEADER}")?;
        writeln!(out, "% snore-embedding format={FORMAT_VERSION} seed={seed}")?;
        writeln!(out, "{} {} {}", e.num_rows, e.columns.len(), e.nnz())?;
        for (j, c) in e.columns.iter().enumerate() {
            for (&r, &v) in c.rows.iter().zip(&c.values) {
                writeln!(out, "{} {} {}", r + 1, j + 1, v)?;
            }
        }
        out.flush()
    };
    write_mtx(&mut out).map_err(|err| Error::io(&path, err))?;

    let path = dir.join(FEATURES_FILE);
    let mut out = create(&path)?;
    let write_ind = |out: &mut BufWriter<File>| -> std::io::Result<()> {
        for (j, n) in e.ind.iter().enumerate() {
            writeln!(out, "{j}\t{n}")?;
        }
        out.flush()
    };
    write_ind(&mut out).map_err(|err| Error::io(&path, err))?;

    let meta = Metadata {
        format_version: FORMAT_VERSION,
        rows: e.num_rows,
        cols: e.columns.len(),
        nnz: e.nnz(),
        value_bits: e.value_bits,
        seed,
        source: e.source.clone(),
    };
    let path = dir.join(CONFIG_FILE);
    let json = serde_json::to_string_pretty(&meta).map_err(|err| Error::Format(err.to_string()))?;
    fs::write(&path, json + "\n").map_err(|err| Error::io(&path, err))
}

fn read_mtx(path: &Path, meta: &Metadata) -> Result<Vec<SparseColumn>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let mut next = || -> Result<Option<(usize, String)>> {
        match lines.next() {
            None => Ok(None),
            Some((i, l)) => l.map(|l| Some((i + 1, l))).map_err(|e| Error::io(path, e)),
        }
    };
    match next()? {
        Some((_, l)) if l.trim().eq_ignore_ascii_case(MTX_HEADER) => {}
        _ => return Err(Error::Format(format!("{}: not a MatrixMarket coordinate file", path.display()))),
    }
    let (line, size) = loop {
        match next()? {
            Some((_, l)) if l.starts_with('%') => continue,
            Some(x) => break x,
            None => return Err(Error::Format(format!("{}: missing size line", path.display()))),
        }
    };
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::parse(path, line, format!("bad size line: {e}")))?;
    if dims != [meta.rows, meta.cols, meta.nnz] {
        return Err(Error::Format(format!("{}: size line disagrees with {CONFIG_FILE}", path.display())));
    }
    let mut entries = Vec::with_capacity(meta.nnz);
    while let Some((line, l)) = next()? {
        if l.trim().is_empty() || l.starts_with('%') {
            continue;
        }
        let f: Vec<&str> = l.split_whitespace().collect();
        let parsed = match f.as_slice() {
            [r, c, v] => r.parse::<usize>().ok().zip(c.parse::<usize>().ok()).zip(v.parse::<f32>().ok()),
            _ => None,
        };
        let ((r, c), v) = parsed.ok_or_else(|| Error::parse(path, line, "expected `row col value`"))?;
        if r == 0 || c == 0 || r > meta.rows || c > meta.cols {
            return Err(Error::parse(path, line, "entry outside the matrix"));
        }
        entries.push((c - 1, (r - 1) as u32, v));
    }
    if entries.len() != meta.nnz {
        return Err(Error::Format(format!("{}: {} entries, expected {}", path.display(), entries.len(), meta.nnz)));
    }
    entries.sort_by_key(|e| (e.0, e.1));
    let mut columns = vec![SparseColumn::default(); meta.cols];
    for (c, r, v) in entries {
        columns[c].rows.push(r);
        columns[c].values.push(v);
    }
    Ok(columns)
}

fn read_features(path: &Path) -> Result<Vec<u32>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut ind = Vec::new();
    for (i, l) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let parsed = l.split_once('\t').and_then(|(j, n)| j.parse::<usize>().ok().zip(n.trim().parse::<u32>().ok()));
        match parsed {
            Some((j, n)) if j == ind.len() => ind.push(n),
            _ => return Err(Error::parse(path, i + 1, "expected `column<TAB>node` in column order")),
        }
    }
    Ok(ind)
}

/// Reads a directory written by [`save_embedding`].
pub fn load_embedding(dir: impl AsRef<Path>) -> Result<Embedding> {
    let dir = dir.as_ref();
    let path = dir.join(CONFIG_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let meta: Metadata =
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    if meta.format_version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "embedding format version {} is not supported (expected {FORMAT_VERSION})",
            meta.format_version
        )));
    }
    let columns = read_mtx(&dir.join(MTX_FILE), &meta)?;
    let ind = read_features(&dir.join(FEATURES_FILE))?;
    Embedding::from_columns(meta.rows, columns, ind, meta.source, meta.value_bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::EmbeddingConfig;

    fn sample() -> Embedding {
        let columns = vec![
            SparseColumn { rows: vec![0, 2], values: vec![1.0, 0.1] },
            SparseColumn::default(),
            SparseColumn { rows: vec![1], values: vec![1.0 / 3.0] },
        ];
        let source = EmbeddingSource::Snore { config: EmbeddingConfig::fixed(3) };
        Embedding::from_columns(3, columns, vec![0, 2, 1], source, 32).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let e = sample();
        save_embedding(&e, dir.path()).unwrap();
        assert_eq!(load_embedding(dir.path()).unwrap(), e);
        let features = fs::read_to_string(dir.path().join(FEATURES_FILE)).unwrap();
        assert_eq!(features.lines().count(), 3);
    }

    #[test]
    fn wrong_magic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        save_embedding(&sample(), dir.path()).unwrap();
        let path = dir.path().join(MTX_FILE);
        let text = fs::read_to_string(&path).unwrap().replacen("%%MatrixMarket", "%%NotMatrix", 1);
        fs::write(&path, text).unwrap();
        assert!(matches!(load_embedding(dir.path()), Err(Error::Format(_))));
    }

    #[test]
    fn future_version_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        save_embedding(&sample(), dir.path()).unwrap();
        let path = dir.path().join(CONFIG_FILE);
        let text = fs::read_to_string(&path).unwrap().replacen("\"format_version\": 1", "\"format_version\": 9", 1);
        fs::write(&path, text).unwrap();
        let err = load_embedding(dir.path()).unwrap_err();
        assert!(err.to_string().contains("version"));
    }
}
