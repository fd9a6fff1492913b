//! Block streams over synthetic and file-backed sources.
//!
//! Every source yields one sample at a time through [`RowSource`];
//! [`BlockStream`] groups samples into blocks of `B` and keeps running
//! statistics. File formats: LIBSVM text (`label idx:val ...`, 1-based
//! indices) and UCI bag-of-words `docword` text. Paths ending in `.gz` are
//! decompressed transparently.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Cursor, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use flate2::read::GzDecoder;

use crate::datagen::{RngState, SpikedModel};
use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, RowView, SparseBlock, SparseRow};

/// One owned sample.
#[derive(Debug, Clone, PartialEq)]
pub enum Row {
    Dense(Vec<f64>),
    Sparse(SparseRow),
}

impl Row {
    pub fn view(&self) -> RowView<'_> {
        match self {
            Row::Dense(v) => RowView::Dense(v),
            Row::Sparse(s) => RowView::Sparse(s.entries()),
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.view().norm_sq()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Payload {
    Dense(DenseMatrix),
    Sparse(SparseBlock),
}

/// `B × d` block of samples. Always holds at least one row.
#[derive(Debug, Clone, PartialEq)]
pub struct DataBlock {
    payload: Payload,
}

impl DataBlock {
    pub fn dense(x: DenseMatrix) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::invalid("data block needs at least one row"));
        }
        Ok(Self {
            payload: Payload::Dense(x),
        })
    }

    pub fn sparse(x: SparseBlock) -> Result<Self> {
        if x.n_rows() == 0 {
            return Err(Error::invalid("data block needs at least one row"));
        }
        Ok(Self {
            payload: Payload::Sparse(x),
        })
    }

    /// Packs owned rows; the block is sparse if any row is.
    pub fn from_rows(dim: usize, rows: Vec<Row>) -> Result<Self> {
        if rows.iter().all(|r| matches!(r, Row::Dense(_))) {
            let mut x = DenseMatrix::zeros(rows.len(), dim);
            for (i, r) in rows.into_iter().enumerate() {
                let Row::Dense(v) = r else { unreachable!() };
                if v.len() != dim {
                    return Err(Error::DimensionMismatch {
                        context: "DataBlock::from_rows",
                        left: dim,
                        right: v.len(),
                    });
                }
                x.row_mut(i).copy_from_slice(&v);
            }
            Self::dense(x)
        } else {
            let rows = rows
                .into_iter()
                .map(|r| match r {
                    Row::Sparse(s) => Ok(s),
                    Row::Dense(v) => SparseRow::new(
                        v.iter()
                            .enumerate()
                            .filter(|(_, x)| **x != 0.0)
                            .map(|(i, x)| (i, *x))
                            .collect(),
                        dim,
                    ),
                })
                .collect::<Result<Vec<_>>>()?;
            Self::sparse(SparseBlock::new(dim, rows)?)
        }
    }

    pub fn n_rows(&self) -> usize {
        match &self.payload {
            Payload::Dense(x) => x.nrows(),
            Payload::Sparse(x) => x.n_rows(),
        }
    }

    pub fn dim(&self) -> usize {
        match &self.payload {
            Payload::Dense(x) => x.ncols(),
            Payload::Sparse(x) => x.n_cols(),
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.payload, Payload::Sparse(_))
    }

    pub fn rows(&self) -> BlockRows<'_> {
        BlockRows {
            block: self,
            next: 0,
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        match &self.payload {
            Payload::Dense(x) => x.clone(),
            Payload::Sparse(x) => x.to_dense(),
        }
    }

    /// Same samples multiplied by `gamma`.
    pub fn scaled(&self, gamma: f64) -> Self {
        match &self.payload {
            Payload::Dense(x) => {
                let mut x = x.clone();
                x.scale_in_place(gamma);
                Self {
                    payload: Payload::Dense(x),
                }
            }
            Payload::Sparse(x) => {
                let rows = x
                    .rows()
                    .iter()
                    .map(|r| {
                        SparseRow::new(
                            r.entries().iter().map(|&(c, v)| (c, v * gamma)).collect(),
                            x.n_cols(),
                        )
                        .expect("scaling keeps structure")
                    })
                    .collect();
                Self {
                    payload: Payload::Sparse(SparseBlock::new(x.n_cols(), rows).expect("valid")),
                }
            }
        }
    }
}

pub struct BlockRows<'a> {
    block: &'a DataBlock,
    next: usize,
}

impl<'a> Iterator for BlockRows<'a> {
    type Item = RowView<'a>;

    fn next(&mut self) -> Option<RowView<'a>> {
        let i = self.next;
        if i >= self.block.n_rows() {
            return None;
        }
        self.next += 1;
        Some(match &self.block.payload {
            Payload::Dense(x) => RowView::Dense(x.row(i)),
            Payload::Sparse(x) => RowView::Sparse(x.rows()[i].entries()),
        })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.block.n_rows() - self.next;
        (n, Some(n))
    }
}

impl ExactSizeIterator for BlockRows<'_> {}

/// Sample-at-a-time producer behind a [`BlockStream`].
pub trait RowSource: Send {
    fn dim(&self) -> usize;

    fn next_row(&mut self) -> Result<Option<Row>>;

    /// Restart from the first sample (multi-pass solvers only).
    fn rewind(&mut self) -> Result<()>;
}

/// Endless samples from a spiked model. Rewinding replays the same stream.
pub struct SyntheticSource {
    model: SpikedModel,
    rng: RngState,
}

impl SyntheticSource {
    pub fn new(model: SpikedModel) -> Self {
        let rng = model.sample_rng();
        Self { model, rng }
    }
}

impl RowSource for SyntheticSource {
    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn next_row(&mut self) -> Result<Option<Row>> {
        let mut x = vec![0.0; self.model.dim()];
        self.model.sample_into(&mut self.rng, &mut x);
        Ok(Some(Row::Dense(x)))
    }

    fn rewind(&mut self) -> Result<()> {
        self.rng = self.model.sample_rng();
        Ok(())
    }
}

/// Fully materialized dataset, used for multi-pass solvers and evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    rows: Arc<Vec<Row>>,
}

impl Dataset {
    pub fn new(dim: usize, rows: Vec<Row>) -> Result<Self> {
        for r in &rows {
            match r {
                Row::Dense(v) if v.len() != dim => {
                    return Err(Error::DimensionMismatch {
                        context: "Dataset::new",
                        left: dim,
                        right: v.len(),
                    })
                }
                Row::Sparse(s) if s.entries().last().is_some_and(|&(c, _)| c >= dim) => {
                    return Err(Error::invalid("sparse row exceeds dataset dimension"))
                }
                _ => {}
            }
        }
        Ok(Self {
            dim,
            rows: Arc::new(rows),
        })
    }

    pub fn from_matrix(x: &DenseMatrix) -> Self {
        let rows = (0..x.nrows()).map(|i| Row::Dense(x.row(i).to_vec())).collect();
        Self {
            dim: x.ncols(),
            rows: Arc::new(rows),
        }
    }

    /// Drains a finite source. Fails on endless sources only by exhausting
    /// `limit`.
    pub fn collect(source: &mut dyn RowSource, limit: usize) -> Result<Self> {
        let mut rows = Vec::new();
        while rows.len() < limit {
            match source.next_row()? {
                Some(r) => rows.push(r),
                None => break,
            }
        }
        Self::new(source.dim(), rows)
    }

    /// `n` samples from a spiked model's stream.
    pub fn sample_spiked(model: &SpikedModel, n: usize) -> Self {
        Self::sample_spiked_with(model, n, model.sample_rng())
    }

    /// `n` samples drawn with an explicit generator, e.g.
    /// [`SpikedModel::eval_rng`] for a held-out set.
    pub fn sample_spiked_with(model: &SpikedModel, n: usize, rng: RngState) -> Self {
        let mut src = SyntheticSource {
            model: model.clone(),
            rng,
        };
        Self::collect(&mut src, n).expect("synthetic rows are well formed")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_samples(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn views(&self) -> impl Iterator<Item = RowView<'_>> {
        self.rows.iter().map(Row::view)
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.rows.iter().map(Row::norm_sq).sum()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut x = DenseMatrix::zeros(self.rows.len(), self.dim);
        for (i, r) in self.rows.iter().enumerate() {
            x.row_mut(i).copy_from_slice(&r.view().to_dense(self.dim));
        }
        x
    }

    /// Subtracts the column mean. Dense data only: centering would destroy
    /// sparsity.
    pub fn centered(&self) -> Result<Self> {
        if self.rows.iter().any(|r| matches!(r, Row::Sparse(_))) {
            return Err(Error::invalid("mean centering is only supported for dense data"));
        }
        if self.rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut mean = vec![0.0; self.dim];
        for r in self.rows.iter() {
            if let Row::Dense(v) = r {
                for (m, x) in mean.iter_mut().zip(v) {
                    *m += x;
                }
            }
        }
        let n = self.rows.len() as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        let rows = self
            .rows
            .iter()
            .map(|r| match r {
                Row::Dense(v) => Row::Dense(v.iter().zip(&mean).map(|(x, m)| x - m).collect()),
                Row::Sparse(_) => unreachable!(),
            })
            .collect();
        Self::new(self.dim, rows)
    }

    pub fn source(&self) -> MemorySource {
        MemorySource {
            data: self.clone(),
            pos: 0,
        }
    }

    pub fn stream(&self, block_size: usize) -> Result<BlockStream> {
        BlockStream::new(Box::new(self.source()), block_size)
    }
}

pub struct MemorySource {
    data: Dataset,
    pos: usize,
}

impl RowSource for MemorySource {
    fn dim(&self) -> usize {
        self.data.dim
    }

    fn next_row(&mut self) -> Result<Option<Row>> {
        let r = self.data.rows.get(self.pos).cloned();
        if r.is_some() {
            self.pos += 1;
        }
        Ok(r)
    }

    fn rewind(&mut self) -> Result<()> {
        self.pos = 0;
        Ok(())
    }
}

/// Where text input comes from; kept so a source can be reopened.
#[derive(Debug, Clone)]
pub enum TextInput {
    Path(PathBuf),
    Bytes(Arc<[u8]>),
}

impl TextInput {
    fn open(&self) -> Result<Box<dyn BufRead + Send>> {
        Ok(match self {
            TextInput::Path(p) => {
                let f = File::open(p)?;
                if p.extension().is_some_and(|e| e == "gz") {
                    Box::new(BufReader::new(GzDecoder::new(f)))
                } else {
                    Box::new(BufReader::new(f))
                }
            }
            TextInput::Bytes(b) => Box::new(Cursor::new(Arc::clone(b))),
        })
    }
}

struct Lines {
    reader: Box<dyn BufRead + Send>,
    line_no: usize,
    buf: String,
}

impl Lines {
    fn new(input: &TextInput) -> Result<Self> {
        Ok(Self {
            reader: input.open()?,
            line_no: 0,
            buf: String::new(),
        })
    }

    /// Next line with its 1-based number; `None` at EOF.
    fn next_line(&mut self) -> Result<Option<(usize, &str)>> {
        self.buf.clear();
        if self.reader.read_line(&mut self.buf)? == 0 {
            return Ok(None);
        }
        self.line_no += 1;
        Ok(Some((self.line_no, self.buf.trim_end_matches(['\n', '\r']))))
    }
}

/// Parses one LIBSVM line into 0-based `(index, value)` pairs. Returns
/// `Ok(None)` for blank or comment-only lines.
pub fn parse_libsvm_line(
    line: &str,
    line_no: usize,
    dim: Option<usize>,
) -> Result<Option<Vec<(usize, f64)>>> {
    let content = line.split('#').next().unwrap_or("");
    let mut tokens = content.split_whitespace();
    if tokens.next().is_none() {
        return Ok(None);
    }
    let mut entries: Vec<(usize, f64)> = Vec::new();
    for tok in tokens {
        let (idx, val) = tok
            .split_once(':')
            .ok_or_else(|| Error::parse(line_no, format!("expected index:value, got {tok:?}")))?;
        if idx == "qid" {
            continue;
        }
        let idx: i64 = idx
            .parse()
            .map_err(|_| Error::parse(line_no, format!("invalid feature index {idx:?}")))?;
        if idx <= 0 {
            return Err(Error::parse(line_no, format!("feature index {idx} must be >= 1")));
        }
        let val: f64 = val
            .parse()
            .map_err(|_| Error::parse(line_no, format!("non-numeric value {val:?}")))?;
        if !val.is_finite() {
            return Err(Error::parse(line_no, format!("non-finite value {val:?}")));
        }
        let col = (idx - 1) as usize;
        if let Some(&(prev, _)) = entries.last() {
            if col <= prev {
                return Err(Error::parse(
                    line_no,
                    format!("feature index {idx} not strictly increasing"),
                ));
            }
        }
        if let Some(d) = dim {
            if col >= d {
                return Err(Error::parse(
                    line_no,
                    format!("feature index {idx} exceeds dimension {d}"),
                ));
            }
        }
        entries.push((col, val));
    }
    Ok(Some(entries))
}

pub struct LibsvmSource {
    input: TextInput,
    lines: Lines,
    dim: usize,
}

impl LibsvmSource {
    /// Without `dim`, the whole input is scanned once to find the largest
    /// index before streaming starts.
    pub fn open(input: TextInput, dim: Option<usize>) -> Result<Self> {
        let dim = match dim {
            Some(d) => d,
            None => probe_libsvm_dim(&input)?,
        };
        Ok(Self {
            lines: Lines::new(&input)?,
            input,
            dim,
        })
    }
}

fn probe_libsvm_dim(input: &TextInput) -> Result<usize> {
    let mut lines = Lines::new(input)?;
    let mut dim = 0;
    while let Some((no, line)) = lines.next_line()? {
        if let Some(entries) = parse_libsvm_line(line, no, None)? {
            if let Some(&(c, _)) = entries.last() {
                dim = dim.max(c + 1);
            }
        }
    }
    Ok(dim)
}

impl RowSource for LibsvmSource {
    fn dim(&self) -> usize {
        self.dim
    }

    fn next_row(&mut self) -> Result<Option<Row>> {
        let dim = self.dim;
        while let Some((no, line)) = self.lines.next_line()? {
            if let Some(entries) = parse_libsvm_line(line, no, Some(dim))? {
                let row = SparseRow::new(entries, dim).map_err(|e| Error::parse(no, e.to_string()))?;
                return Ok(Some(Row::Sparse(row)));
            }
        }
        Ok(None)
    }

    fn rewind(&mut self) -> Result<()> {
        self.lines = Lines::new(&self.input)?;
        Ok(())
    }
}

/// Opens a LIBSVM file as a block stream. Labels are discarded.
pub fn parse_libsvm(
    path: impl AsRef<Path>,
    d_override: Option<usize>,
    block_size: usize,
) -> Result<BlockStream> {
    let src = LibsvmSource::open(TextInput::Path(path.as_ref().to_path_buf()), d_override)?;
    BlockStream::new(Box::new(src), block_size)
}

/// Writes rows in LIBSVM format with a dummy label `0`.
pub fn write_libsvm<W: Write>(rows: &[Row], dim: usize, mut out: W) -> io::Result<()> {
    for r in rows {
        write!(out, "0")?;
        match r {
            Row::Sparse(s) => {
                for &(c, v) in s.entries() {
                    write!(out, " {}:{}", c + 1, v)?;
                }
            }
            Row::Dense(v) => {
                for (c, x) in v.iter().enumerate().take(dim) {
                    if *x != 0.0 {
                        write!(out, " {}:{}", c + 1, x)?;
                    }
                }
            }
        }
        writeln!(out)?;
    }
    Ok(())
}

/// UCI bag-of-words reader: header `D`, `W`, `NNZ`, then `docID wordID
/// count` triples grouped by document. Documents that never appear in the
/// body are emitted as empty rows so the stream has exactly `D` samples.
pub struct DocwordSource {
    input: TextInput,
    lines: Lines,
    n_docs: usize,
    n_words: usize,
    nnz: usize,
    // next document id to emit (1-based)
    next_doc: usize,
    pending: Option<(usize, usize, f64)>,
    seen_nnz: usize,
    finished: bool,
}

impl DocwordSource {
    pub fn open(input: TextInput) -> Result<Self> {
        let mut lines = Lines::new(&input)?;
        let mut header = [0usize; 3];
        for (slot, name) in header.iter_mut().zip(["D", "W", "NNZ"]) {
            let (no, line) = lines
                .next_line()?
                .ok_or_else(|| Error::parse(0, format!("missing header line {name}")))?;
            *slot = line
                .trim()
                .parse()
                .map_err(|_| Error::parse(no, format!("malformed header {name}: {line:?}")))?;
        }
        Ok(Self {
            input,
            lines,
            n_docs: header[0],
            n_words: header[1],
            nnz: header[2],
            next_doc: 1,
            pending: None,
            seen_nnz: 0,
            finished: false,
        })
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    fn read_triple(&mut self) -> Result<Option<(usize, usize, f64)>> {
        let n_docs = self.n_docs;
        let n_words = self.n_words;
        while let Some((no, line)) = self.lines.next_line()? {
            let mut it = line.split_whitespace();
            let Some(doc) = it.next() else { continue };
            let (Some(word), Some(count), None) = (it.next(), it.next(), it.next()) else {
                return Err(Error::parse(no, format!("expected 'docID wordID count', got {line:?}")));
            };
            let doc: usize = doc
                .parse()
                .map_err(|_| Error::parse(no, format!("invalid docID {doc:?}")))?;
            let word: usize = word
                .parse()
                .map_err(|_| Error::parse(no, format!("invalid wordID {word:?}")))?;
            let count: f64 = count
                .parse()
                .map_err(|_| Error::parse(no, format!("invalid count {count:?}")))?;
            if doc == 0 || doc > n_docs {
                return Err(Error::parse(no, format!("docID {doc} outside 1..={n_docs}")));
            }
            if word == 0 || word > n_words {
                return Err(Error::parse(no, format!("wordID {word} outside 1..={n_words}")));
            }
            if !count.is_finite() || count < 0.0 {
                return Err(Error::parse(no, format!("count {count} must be finite and >= 0")));
            }
            if doc < self.next_doc {
                return Err(Error::parse(no, format!("docID {doc} decreases")));
            }
            self.seen_nnz += 1;
            return Ok(Some((doc, word - 1, count)));
        }
        Ok(None)
    }
}

impl DocwordSource {
    fn advance(&mut self) -> Result<()> {
        self.pending = self.read_triple()?;
        if self.pending.is_none() && !self.finished {
            self.finished = true;
            if self.seen_nnz != self.nnz {
                log::warn!(
                    "docword header declares {} nonzeros but body has {}",
                    self.nnz,
                    self.seen_nnz
                );
            }
        }
        Ok(())
    }
}

impl RowSource for DocwordSource {
    fn dim(&self) -> usize {
        self.n_words
    }

    fn next_row(&mut self) -> Result<Option<Row>> {
        if self.pending.is_none() && !self.finished {
            self.advance()?;
        }
        if self.next_doc > self.n_docs {
            return Ok(None);
        }
        let doc = self.next_doc;
        let mut entries = Vec::new();
        while let Some((d, w, c)) = self.pending {
            if d != doc {
                break;
            }
            entries.push((w, c));
            self.advance()?;
        }
        entries.sort_by_key(|e| e.0);
        entries.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1;
                true
            } else {
                false
            }
        });
        self.next_doc += 1;
        Ok(Some(Row::Sparse(SparseRow::new(entries, self.n_words)?)))
    }

    fn rewind(&mut self) -> Result<()> {
        *self = Self::open(self.input.clone())?;
        Ok(())
    }
}

/// Opens a UCI docword file as a block stream of raw counts.
pub fn parse_docword(path: impl AsRef<Path>, block_size: usize) -> Result<BlockStream> {
    let src = DocwordSource::open(TextInput::Path(path.as_ref().to_path_buf()))?;
    BlockStream::new(Box::new(src), block_size)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StreamStats {
    pub n_samples: u64,
    pub frobenius_sq: f64,
    pub dim: usize,
}

/// Groups a [`RowSource`] into consecutive, disjoint blocks.
pub struct BlockStream {
    source: Box<dyn RowSource>,
    block_size: usize,
    stats: StreamStats,
}

impl BlockStream {
    pub fn new(source: Box<dyn RowSource>, block_size: usize) -> Result<Self> {
        if block_size == 0 {
            return Err(Error::invalid("block size must be >= 1"));
        }
        let dim = source.dim();
        Ok(Self {
            source,
            block_size,
            stats: StreamStats {
                dim,
                ..StreamStats::default()
            },
        })
    }

    pub fn synthetic(model: SpikedModel, block_size: usize) -> Result<Self> {
        Self::new(Box::new(SyntheticSource::new(model)), block_size)
    }

    pub fn dim(&self) -> usize {
        self.stats.dim
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn samples_emitted(&self) -> u64 {
        self.stats.n_samples
    }

    pub fn stats(&self) -> &StreamStats {
        &self.stats
    }

    /// One sample, bypassing block assembly.
    pub fn next_row(&mut self) -> Result<Option<Row>> {
        let row = self.source.next_row()?;
        if let Some(r) = &row {
            self.stats.n_samples += 1;
            self.stats.frobenius_sq += r.norm_sq();
        }
        Ok(row)
    }

    /// Next `B` samples; the final block may be shorter. `None` once the
    /// source is exhausted.
    pub fn next_block(&mut self) -> Result<Option<DataBlock>> {
        let mut rows = Vec::with_capacity(self.block_size);
        while rows.len() < self.block_size {
            match self.next_row()? {
                Some(r) => rows.push(r),
                None => break,
            }
        }
        if rows.is_empty() {
            return Ok(None);
        }
        DataBlock::from_rows(self.dim(), rows).map(Some)
    }

    /// Starts a new pass. Statistics keep accumulating across passes.
    pub fn rewind(&mut self) -> Result<()> {
        self.source.rewind()
    }
}

/// Shared counters filled in by [`CountingSource`].
#[derive(Debug, Default)]
pub struct AccessCounter {
    rows: AtomicU64,
    rewinds: AtomicU64,
}

impl AccessCounter {
    pub fn rows(&self) -> u64 {
        self.rows.load(Ordering::Relaxed)
    }

    pub fn rewinds(&self) -> u64 {
        self.rewinds.load(Ordering::Relaxed)
    }
}

/// Wraps a source and counts every row handed out.
pub struct CountingSource<S> {
    inner: S,
    counter: Arc<AccessCounter>,
}

impl<S: RowSource> CountingSource<S> {
    pub fn new(inner: S) -> (Self, Arc<AccessCounter>) {
        let counter = Arc::new(AccessCounter::default());
        (
            Self {
                inner,
                counter: Arc::clone(&counter),
            },
            counter,
        )
    }
}

impl<S: RowSource> RowSource for CountingSource<S> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn next_row(&mut self) -> Result<Option<Row>> {
        let r = self.inner.next_row()?;
        if r.is_some() {
            self.counter.rows.fetch_add(1, Ordering::Relaxed);
        }
        Ok(r)
    }

    fn rewind(&mut self) -> Result<()> {
        self.counter.rewinds.fetch_add(1, Ordering::Relaxed);
        self.inner.rewind()
    }
}

impl<S: RowSource + ?Sized> RowSource for Box<S> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn next_row(&mut self) -> Result<Option<Row>> {
        (**self).next_row()
    }

    fn rewind(&mut self) -> Result<()> {
        (**self).rewind()
    }
}

/// First `limit` rows of `inner`; rewinding starts the count again.
pub struct Take<S> {
    inner: S,
    limit: usize,
    taken: usize,
}

impl<S: RowSource> Take<S> {
    pub fn new(inner: S, limit: usize) -> Self {
        Self {
            inner,
            limit,
            taken: 0,
        }
    }
}

impl<S: RowSource> RowSource for Take<S> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn next_row(&mut self) -> Result<Option<Row>> {
        if self.taken >= self.limit {
            return Ok(None);
        }
        let r = self.inner.next_row()?;
        if r.is_some() {
            self.taken += 1;
        }
        Ok(r)
    }

    fn rewind(&mut self) -> Result<()> {
        self.taken = 0;
        self.inner.rewind()
    }
}
