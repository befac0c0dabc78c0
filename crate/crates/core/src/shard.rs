//! Disk-resident transition matrices split into contiguous source ranges.
//!
//! A shard directory holds a plain-text `manifest` of `key=value` lines and one
//! binary file per shard. Each shard file is a flat run of little-endian
//! `(u32 src, u32 dst, f64 prob)` records, 16 bytes each, sorted by source.
//! Every shard is checksummed (CRC-32) and verified each time it is read.
//!
//! Streaming a step keeps only the caller's distribution vector resident: the
//! previous distribution is spilled to a scratch file, the vector is zeroed and
//! reused as the accumulator, and each shard reads back just the slice of the
//! previous distribution covering its source range.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};

use rayon::prelude::*;

use crate::error::{check_len, Error, Result};
use crate::graph::VertexId;
use crate::transition::{
    balanced_row_ranges, Backend, ProbabilityVector, TransitionMatrix, TransitionOperator,
};

pub const MANIFEST_NAME: &str = "manifest";
const FORMAT_TAG: &str = "thit-shards/1";
const RECORD_BYTES: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShardInfo {
    pub file: String,
    pub first_src: VertexId,
    pub last_src: VertexId,
    pub edge_count: u64,
    pub checksum: u32,
}

impl ShardInfo {
    fn vertex_span(&self) -> usize {
        (self.last_src - self.first_src) as usize + 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub n: usize,
    pub nnz: u64,
    pub shards: Vec<ShardInfo>,
}

impl Manifest {
    fn render(&self) -> String {
        let mut s = format!(
            "format={FORMAT_TAG}\nn={}\nnnz={}\nshards={}\n",
            self.n,
            self.nnz,
            self.shards.len()
        );
        for (k, sh) in self.shards.iter().enumerate() {
            s.push_str(&format!(
                "shard.{k}.file={}\nshard.{k}.first_src={}\nshard.{k}.last_src={}\nshard.{k}.edge_count={}\nshard.{k}.checksum={:08x}\n",
                sh.file, sh.first_src, sh.last_src, sh.edge_count, sh.checksum
            ));
        }
        s
    }

    fn parse(text: &str) -> Result<Self> {
        let mut kv = HashMap::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Corruption(format!("manifest line {line:?} lacks '='")))?;
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        let get = |key: &str| {
            kv.get(key)
                .ok_or_else(|| Error::Corruption(format!("manifest is missing {key}")))
        };
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::Corruption(format!("manifest {key}={v} is not a number")))
        }
        if get("format")? != FORMAT_TAG {
            return Err(Error::Corruption(format!(
                "unknown shard format {:?}",
                get("format")?
            )));
        }
        let n: usize = num("n", get("n")?)?;
        let nnz: u64 = num("nnz", get("nnz")?)?;
        let count: usize = num("shards", get("shards")?)?;
        let mut shards = Vec::with_capacity(count);
        for k in 0..count {
            let key = |f: &str| format!("shard.{k}.{f}");
            let checksum = u32::from_str_radix(get(&key("checksum"))?, 16).map_err(|_| {
                Error::Corruption(format!("shard {k} checksum is not a hex CRC-32"))
            })?;
            shards.push(ShardInfo {
                file: get(&key("file"))?.clone(),
                first_src: num(&key("first_src"), get(&key("first_src"))?)?,
                last_src: num(&key("last_src"), get(&key("last_src"))?)?,
                edge_count: num(&key("edge_count"), get(&key("edge_count"))?)?,
                checksum,
            });
        }
        let manifest = Manifest { n, nnz, shards };
        manifest.check_layout()?;
        Ok(manifest)
    }

    fn check_layout(&self) -> Result<()> {
        let mut next: u64 = 0;
        for (k, sh) in self.shards.iter().enumerate() {
            if sh.first_src as u64 != next || sh.last_src < sh.first_src {
                return Err(Error::Corruption(format!(
                    "shard {k} covers {}..={}, expected to start at {next}",
                    sh.first_src, sh.last_src
                )));
            }
            next = sh.last_src as u64 + 1;
        }
        if next != self.n as u64 {
            return Err(Error::Corruption(format!(
                "shards cover {next} vertices, manifest says n={}",
                self.n
            )));
        }
        let total: u64 = self.shards.iter().map(|s| s.edge_count).sum();
        if total != self.nnz {
            return Err(Error::Corruption(format!(
                "shard edge counts sum to {total}, manifest says nnz={}",
                self.nnz
            )));
        }
        Ok(())
    }
}

/// Counters describing the I/O done by a sharded operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
pub struct StreamStats {
    /// Completed sweeps over every shard.
    pub passes: u64,
    pub shard_loads: u64,
    pub edges_streamed: u64,
    /// Largest capacity, in bytes, the shard buffer reached.
    pub peak_shard_buffer_bytes: usize,
}

#[derive(Debug, Default)]
struct Counters {
    passes: AtomicU64,
    shard_loads: AtomicU64,
    edges_streamed: AtomicU64,
    peak_buffer: AtomicUsize,
}

/// Reusable per-shard scratch: the raw edge records plus the slice of the
/// previous distribution that the shard's sources read.
#[derive(Debug, Default)]
struct ShardBuffer {
    records: Vec<u8>,
    prev: Vec<u8>,
}

impl ShardBuffer {
    fn capacity_bytes(&self) -> usize {
        self.records.capacity() + self.prev.capacity()
    }
}

/// A transition matrix read from a shard directory, one shard at a time.
#[derive(Debug)]
pub struct ShardedTransition {
    dir: PathBuf,
    manifest: Manifest,
    counters: Counters,
}

/// Partitions `matrix` into `shard_count` contiguous source ranges, balanced by
/// edge count, and writes them to `dir`.
pub fn write_shards(
    matrix: &TransitionMatrix,
    shard_count: usize,
    dir: impl AsRef<Path>,
) -> Result<ShardedTransition> {
    let dir = dir.as_ref();
    if shard_count == 0 {
        return Err(Error::validation("shard count must be at least 1"));
    }
    if shard_count > matrix.n() {
        return Err(Error::validation(format!(
            "cannot split {} vertices into {shard_count} shards",
            matrix.n()
        )));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;

    let ranges = balanced_row_ranges(matrix.offsets(), shard_count);
    let mut shards = Vec::with_capacity(ranges.len());
    for (k, &(lo, hi)) in ranges.iter().enumerate() {
        let file = format!("shard-{k:05}.bin");
        let path = dir.join(&file);
        let handle = File::create(&path)
            .map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
        let mut out = BufWriter::new(handle);
        let mut hasher = crc32fast::Hasher::new();
        let mut edges = 0u64;
        for u in lo..hi {
            let (targets, probs) = matrix.row(u);
            for (&v, &p) in targets.iter().zip(probs) {
                let mut rec = [0u8; RECORD_BYTES];
                rec[0..4].copy_from_slice(&(u as u32).to_le_bytes());
                rec[4..8].copy_from_slice(&v.to_le_bytes());
                rec[8..16].copy_from_slice(&p.to_le_bytes());
                hasher.update(&rec);
                out.write_all(&rec)
                    .map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
                edges += 1;
            }
        }
        out.flush()
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
        shards.push(ShardInfo {
            file,
            first_src: lo as VertexId,
            last_src: (hi - 1) as VertexId,
            edge_count: edges,
            checksum: hasher.finalize(),
        });
    }
    let manifest = Manifest {
        n: matrix.n(),
        nnz: matrix.nnz() as u64,
        shards,
    };
    let path = dir.join(MANIFEST_NAME);
    fs::write(&path, manifest.render())
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
    Ok(ShardedTransition {
        dir: dir.to_path_buf(),
        manifest,
        counters: Counters::default(),
    })
}

impl ShardedTransition {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let path = dir.join(MANIFEST_NAME);
        let text = fs::read_to_string(&path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let manifest = Manifest::parse(&text)?;
        for sh in &manifest.shards {
            let p = dir.join(&sh.file);
            let len = fs::metadata(&p)
                .map_err(|e| Error::io(format!("inspecting {}", p.display()), e))?
                .len();
            if len != sh.edge_count * RECORD_BYTES as u64 {
                return Err(Error::Corruption(format!(
                    "{} holds {len} bytes, expected {} records",
                    p.display(),
                    sh.edge_count
                )));
            }
        }
        Ok(ShardedTransition {
            dir: dir.to_path_buf(),
            manifest,
            counters: Counters::default(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn stats(&self) -> StreamStats {
        StreamStats {
            passes: self.counters.passes.load(Ordering::Relaxed),
            shard_loads: self.counters.shard_loads.load(Ordering::Relaxed),
            edges_streamed: self.counters.edges_streamed.load(Ordering::Relaxed),
            peak_shard_buffer_bytes: self.counters.peak_buffer.load(Ordering::Relaxed),
        }
    }

    pub fn reset_stats(&self) {
        self.counters.passes.store(0, Ordering::Relaxed);
        self.counters.shard_loads.store(0, Ordering::Relaxed);
        self.counters.edges_streamed.store(0, Ordering::Relaxed);
        self.counters.peak_buffer.store(0, Ordering::Relaxed);
    }

    /// Loads shard `k` into `buf.records`, verifying size and checksum.
    fn load(&self, k: usize, buf: &mut ShardBuffer) -> Result<()> {
        let sh = &self.manifest.shards[k];
        let path = self.dir.join(&sh.file);
        let mut file =
            File::open(&path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
        let len = file
            .metadata()
            .map_err(|e| Error::io(format!("inspecting {}", path.display()), e))?
            .len() as usize;
        if len != sh.edge_count as usize * RECORD_BYTES {
            return Err(Error::Corruption(format!(
                "{} holds {len} bytes, expected {} records",
                path.display(),
                sh.edge_count
            )));
        }
        buf.records.clear();
        buf.records.resize(len, 0);
        file.read_exact(&mut buf.records)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let actual = crc32fast::hash(&buf.records);
        if actual != sh.checksum {
            return Err(Error::Corruption(format!(
                "{} checksum {actual:08x} does not match manifest {:08x}",
                path.display(),
                sh.checksum
            )));
        }
        self.counters.shard_loads.fetch_add(1, Ordering::Relaxed);
        self.counters
            .edges_streamed
            .fetch_add(sh.edge_count, Ordering::Relaxed);
        self.counters
            .peak_buffer
            .fetch_max(buf.capacity_bytes(), Ordering::Relaxed);
        Ok(())
    }

    /// Decodes the records of a loaded shard, checking they stay in range.
    fn records<'a>(
        &self,
        k: usize,
        bytes: &'a [u8],
    ) -> impl Iterator<Item = Result<(VertexId, VertexId, f64)>> + 'a {
        let sh = self.manifest.shards[k].clone();
        let n = self.manifest.n;
        bytes.chunks_exact(RECORD_BYTES).map(move |rec| {
            let src = u32::from_le_bytes(rec[0..4].try_into().unwrap());
            let dst = u32::from_le_bytes(rec[4..8].try_into().unwrap());
            let prob = f64::from_le_bytes(rec[8..16].try_into().unwrap());
            if src < sh.first_src || src > sh.last_src || dst as usize >= n {
                return Err(Error::Corruption(format!(
                    "record ({src}, {dst}) lies outside shard {}",
                    sh.file
                )));
            }
            Ok((src, dst, prob))
        })
    }

    /// Streams every `(src, dst, prob)` entry in shard order.
    pub fn for_each_entry(&self, mut f: impl FnMut(VertexId, VertexId, f64)) -> Result<()> {
        let mut buf = ShardBuffer::default();
        for k in 0..self.manifest.shards.len() {
            self.load(k, &mut buf)?;
            for rec in self.records(k, &buf.records) {
                let (s, d, p) = rec?;
                f(s, d, p);
            }
        }
        self.counters.passes.fetch_add(1, Ordering::Relaxed);
        Ok(())
    }

    /// Reads the whole matrix back into memory.
    pub fn to_matrix(&self) -> Result<TransitionMatrix> {
        let mut rows = vec![Vec::new(); self.manifest.n];
        self.for_each_entry(|s, d, p| rows[s as usize].push((d, p)))?;
        TransitionMatrix::from_rows(self.manifest.n, rows)
    }

    /// `Pᵀ p` with shards processed concurrently, each into its own partial
    /// vector; partials are summed in shard order.
    pub fn apply_transposed(&self, p: &ProbabilityVector) -> Result<ProbabilityVector> {
        let n = self.manifest.n;
        check_len(n, p.len())?;
        let input = p.as_slice();
        let scatter = |k: usize, out: &mut [f64]| -> Result<()> {
            let mut buf = ShardBuffer::default();
            self.load(k, &mut buf)?;
            for rec in self.records(k, &buf.records) {
                let (s, d, prob) = rec?;
                out[d as usize] += input[s as usize] * prob;
            }
            Ok(())
        };
        let shards = self.manifest.shards.len();
        let mut out = vec![0.0; n];
        if rayon::current_num_threads() <= 1 || shards == 1 {
            for k in 0..shards {
                scatter(k, &mut out)?;
            }
        } else {
            let partials: Vec<Vec<f64>> = (0..shards)
                .into_par_iter()
                .map(|k| {
                    let mut part = vec![0.0; n];
                    scatter(k, &mut part).map(|_| part)
                })
                .collect::<Result<_>>()?;
            for part in partials {
                for (o, x) in out.iter_mut().zip(part) {
                    *o += x;
                }
            }
        }
        self.counters.passes.fetch_add(1, Ordering::Relaxed);
        Ok(ProbabilityVector::new_unchecked(out))
    }
}

impl TransitionOperator for ShardedTransition {
    fn n(&self) -> usize {
        self.manifest.n
    }

    fn nnz(&self) -> usize {
        self.manifest.nnz as usize
    }

    fn backend(&self) -> Backend {
        Backend::Stream
    }

    fn step_in_place(&self, p: &mut [f64]) -> Result<()> {
        check_len(self.manifest.n, p.len())?;
        let spill_err = |e| Error::io("spilling distribution to scratch file", e);
        let mut spill = tempfile::tempfile().map_err(spill_err)?;
        {
            let mut w = BufWriter::new(&mut spill);
            for x in p.iter() {
                w.write_all(&x.to_le_bytes()).map_err(spill_err)?;
            }
            w.flush().map_err(spill_err)?;
        }
        p.fill(0.0);

        let mut buf = ShardBuffer::default();
        for k in 0..self.manifest.shards.len() {
            self.load(k, &mut buf)?;
            let sh = &self.manifest.shards[k];
            buf.prev.clear();
            buf.prev.resize(sh.vertex_span() * 8, 0);
            spill
                .seek(SeekFrom::Start(sh.first_src as u64 * 8))
                .and_then(|_| spill.read_exact(&mut buf.prev))
                .map_err(spill_err)?;
            self.counters
                .peak_buffer
                .fetch_max(buf.capacity_bytes(), Ordering::Relaxed);
            let base = sh.first_src;
            for rec in self.records(k, &buf.records) {
                let (s, d, prob) = rec?;
                let off = (s - base) as usize * 8;
                let mass = f64::from_le_bytes(buf.prev[off..off + 8].try_into().unwrap());
                p[d as usize] += mass * prob;
            }
        }
        self.counters.passes.fetch_add(1, Ordering::Relaxed);
        Ok(())
    }

    fn diagonal(&self) -> Result<Vec<f64>> {
        let mut diag = vec![0.0; self.manifest.n];
        self.for_each_entry(|s, d, p| {
            if s == d {
                diag[s as usize] = p;
            }
        })?;
        Ok(diag)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate, GenSpec, Model};
    use crate::transition::DanglingPolicy;

    fn sample_matrix() -> TransitionMatrix {
        let g = generate(&GenSpec::new(Model::Sp1, 10, 20, 3)).unwrap();
        TransitionMatrix::from_graph(&g, DanglingPolicy::Reject).unwrap()
    }

    fn sorted_entries(m: &TransitionMatrix) -> Vec<(u32, u32, u64)> {
        let mut v: Vec<_> = m.entries().map(|(s, d, p)| (s, d, p.to_bits())).collect();
        v.sort();
        v
    }

    #[test]
    fn four_shards_partition_the_edges() {
        let m = sample_matrix();
        let dir = tempfile::tempdir().unwrap();
        let sharded = write_shards(&m, 4, dir.path()).unwrap();
        assert_eq!(sharded.manifest().shards.len(), 4);
        for sh in &sharded.manifest().shards {
            assert!(dir.path().join(&sh.file).exists());
        }
        let reopened = ShardedTransition::open(dir.path()).unwrap();
        assert_eq!(reopened.manifest(), sharded.manifest());
        assert_eq!(
            sorted_entries(&reopened.to_matrix().unwrap()),
            sorted_entries(&m)
        );
    }

    #[test]
    fn single_shard_holds_everything() {
        let m = sample_matrix();
        let dir = tempfile::tempdir().unwrap();
        let sharded = write_shards(&m, 1, dir.path()).unwrap();
        let sh = &sharded.manifest().shards[0];
        assert_eq!(sh.edge_count as usize, m.nnz());
        assert_eq!((sh.first_src, sh.last_src), (0, 9));
    }

    #[test]
    fn tampered_checksum_is_detected() {
        let m = sample_matrix();
        let dir = tempfile::tempdir().unwrap();
        let sharded = write_shards(&m, 2, dir.path()).unwrap();
        let path = dir.path().join(MANIFEST_NAME);
        let text = fs::read_to_string(&path).unwrap();
        let good = format!(
            "shard.1.checksum={:08x}",
            sharded.manifest().shards[1].checksum
        );
        let bad = format!(
            "shard.1.checksum={:08x}",
            sharded.manifest().shards[1].checksum ^ 1
        );
        fs::write(&path, text.replace(&good, &bad)).unwrap();
        let reopened = ShardedTransition::open(dir.path()).unwrap();
        let mut p = vec![0.1; 10];
        let err = reopened.step_in_place(&mut p).unwrap_err();
        assert!(matches!(err, Error::Corruption(_)), "{err}");
    }

    #[test]
    fn truncated_shard_is_detected() {
        let m = sample_matrix();
        let dir = tempfile::tempdir().unwrap();
        let sharded = write_shards(&m, 2, dir.path()).unwrap();
        let shard = dir.path().join(&sharded.manifest().shards[0].file);
        let bytes = fs::read(&shard).unwrap();
        fs::write(&shard, &bytes[..bytes.len() - 16]).unwrap();
        assert!(matches!(
            ShardedTransition::open(dir.path()),
            Err(Error::Corruption(_))
        ));
    }

    #[test]
    fn bad_shard_counts() {
        let m = sample_matrix();
        let dir = tempfile::tempdir().unwrap();
        assert!(write_shards(&m, 0, dir.path()).is_err());
        assert!(write_shards(&m, 11, dir.path()).is_err());
    }

    #[test]
    fn unwritable_directory_is_an_io_error() {
        let m = sample_matrix();
        let file = tempfile::NamedTempFile::new().unwrap();
        let err = write_shards(&m, 2, file.path().join("sub")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }), "{err}");
    }

    #[test]
    fn streamed_step_matches_memory() {
        let m = sample_matrix();
        let dir = tempfile::tempdir().unwrap();
        let sharded = write_shards(&m, 3, dir.path()).unwrap();
        let start = ProbabilityVector::uniform(10).unwrap();
        let expected = m.apply_transposed(&start).unwrap();
        let mut p = start.clone().into_inner();
        sharded.step_in_place(&mut p).unwrap();
        for (a, b) in p.iter().zip(expected.as_slice()) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300));
        }
        let q = sharded.apply_transposed(&start).unwrap();
        for (a, b) in q.as_slice().iter().zip(&p) {
            assert!((a - b).abs() <= 1e-15);
        }
        assert_eq!(sharded.stats().passes, 2);
        assert_eq!(sharded.diagonal().unwrap(), m.diagonal().unwrap());
    }
}
