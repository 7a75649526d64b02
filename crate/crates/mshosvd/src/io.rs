//! On-disk formats: the binary tensor file and the tree archive.
//!
//! Tensor file layout, all little-endian:
//!
//! ```text
//! magic   4 bytes  "MSTN"
//! version u16      currently 1
//! modes   u16      N
//! dims    N x u64  mode lengths
//! payload prod(dims) x f64, first-index-fastest
//! ```
//!
//! A tree archive is a directory holding `manifest.json` (config, topology,
//! index maps, partitions) and one blob per node under `nodes/`, each blob
//! being the node's core followed by its factor matrices as consecutive
//! tensor records. Round trips are bit-exact.

use crate::error::{Error, Result};
use crate::hosvd::TuckerFactors;
use crate::partition::PartitionSpec;
use crate::tensor::{DenseTensor, Matrix};
use crate::tree::{MsNode, MsTree, TreeConfig};
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

pub const TENSOR_MAGIC: [u8; 4] = *b"MSTN";
pub const TENSOR_FORMAT_VERSION: u16 = 1;
pub const TREE_FORMAT_VERSION: u16 = 1;

/// Refuse to allocate tensors beyond this many elements when reading.
const MAX_ELEMENTS: u64 = 1 << 28;

/// Write one tensor record.
pub fn write_tensor(w: &mut impl Write, t: &DenseTensor) -> Result<()> {
    w.write_all(&TENSOR_MAGIC)?;
    w.write_all(&TENSOR_FORMAT_VERSION.to_le_bytes())?;
    let n = u16::try_from(t.ndim())
        .map_err(|_| Error::InvalidArgument("too many modes for the tensor format".into()))?;
    w.write_all(&n.to_le_bytes())?;
    for &d in t.shape() {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    for &v in t.data() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Read one tensor record.
pub fn read_tensor(r: &mut impl Read) -> Result<DenseTensor> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|e| Error::Format(format!("missing header: {e}")))?;
    if magic != TENSOR_MAGIC {
        return Err(Error::Format(format!(
            "bad magic {magic:?}, expected {TENSOR_MAGIC:?}"
        )));
    }
    let version = read_u16(r)?;
    if version != TENSOR_FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported tensor format version {version}"
        )));
    }
    let n = read_u16(r)? as usize;
    if n == 0 {
        return Err(Error::Format("tensor with zero modes".into()));
    }
    let mut shape = Vec::with_capacity(n);
    let mut total: u64 = 1;
    for _ in 0..n {
        let d = read_u64(r)?;
        if d == 0 {
            return Err(Error::Format("zero-length mode".into()));
        }
        total = total
            .checked_mul(d)
            .filter(|&t| t <= MAX_ELEMENTS)
            .ok_or_else(|| Error::Format("tensor too large to read".into()))?;
        shape.push(d as usize);
    }
    let mut data = Vec::with_capacity(total as usize);
    let mut buf = [0u8; 8];
    for _ in 0..total {
        r.read_exact(&mut buf)
            .map_err(|e| Error::Format(format!("truncated payload: {e}")))?;
        data.push(f64::from_le_bytes(buf));
    }
    DenseTensor::new(shape, data)
}

pub fn save_tensor(path: impl AsRef<Path>, t: &DenseTensor) -> Result<()> {
    let mut file = std::io::BufWriter::new(fs::File::create(path)?);
    write_tensor(&mut file, t)?;
    file.flush()?;
    Ok(())
}

pub fn load_tensor(path: impl AsRef<Path>) -> Result<DenseTensor> {
    let mut file = std::io::BufReader::new(fs::File::open(path)?);
    let t = read_tensor(&mut file)?;
    // Trailing bytes mean the file is not a single tensor record.
    let mut extra = [0u8; 1];
    match file.read(&mut extra)? {
        0 => Ok(t),
        _ => Err(Error::Format("trailing bytes after tensor payload".into())),
    }
}

fn read_u16(r: &mut impl Read) -> Result<u16> {
    let mut buf = [0u8; 2];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("truncated header: {e}")))?;
    Ok(u16::from_le_bytes(buf))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("truncated header: {e}")))?;
    Ok(u64::from_le_bytes(buf))
}

// ---------------------------------------------------------------------------
// Tree archive
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct TreeManifest {
    format_version: u16,
    original_shape: Vec<usize>,
    config: TreeConfig,
    nodes: Vec<NodeManifest>,
}

#[derive(Serialize, Deserialize)]
struct NodeManifest {
    scale: usize,
    id: usize,
    parent: Option<usize>,
    children: Vec<usize>,
    index_map: Vec<Vec<usize>>,
    core_shape: Vec<usize>,
    partition: Option<PartitionSpec>,
    blob: String,
}

/// Serialize a tree into `dir` (created if needed): a JSON manifest plus one
/// binary blob per node holding the core and factor matrices.
pub fn save_tree(dir: impl AsRef<Path>, tree: &MsTree) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir.join("nodes"))?;
    let mut manifest = TreeManifest {
        format_version: TREE_FORMAT_VERSION,
        original_shape: tree.original_shape.clone(),
        config: tree.config.clone(),
        nodes: Vec::with_capacity(tree.nodes().len()),
    };
    for node in tree.nodes() {
        let blob = format!("nodes/node_{}_{}.mstn", node.scale, node.id);
        let mut file = std::io::BufWriter::new(fs::File::create(dir.join(&blob))?);
        write_tensor(&mut file, &node.factors.core)?;
        for factor in &node.factors.factors {
            write_tensor(&mut file, &matrix_as_tensor(factor)?)?;
        }
        file.flush()?;
        manifest.nodes.push(NodeManifest {
            scale: node.scale,
            id: node.id,
            parent: node.parent,
            children: node.children.clone(),
            index_map: node.index_map.clone(),
            core_shape: node.factors.core.shape().to_vec(),
            partition: node.partition.clone(),
            blob,
        });
    }
    let json = serde_json::to_vec_pretty(&manifest)
        .map_err(|e| Error::Format(format!("manifest encoding: {e}")))?;
    fs::write(dir.join("manifest.json"), json)?;
    Ok(())
}

pub fn load_tree(dir: impl AsRef<Path>) -> Result<MsTree> {
    let dir = dir.as_ref();
    let raw = fs::read(dir.join("manifest.json"))?;
    let manifest: TreeManifest =
        serde_json::from_slice(&raw).map_err(|e| Error::Format(format!("manifest: {e}")))?;
    if manifest.format_version != TREE_FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported tree format version {}",
            manifest.format_version
        )));
    }
    let mut nodes = Vec::with_capacity(manifest.nodes.len());
    for nm in &manifest.nodes {
        let mut file = std::io::BufReader::new(fs::File::open(dir.join(&nm.blob))?);
        let core = read_tensor(&mut file)?;
        if core.shape() != nm.core_shape.as_slice() {
            return Err(Error::Format(format!(
                "blob {} core shape {:?} disagrees with manifest {:?}",
                nm.blob,
                core.shape(),
                nm.core_shape
            )));
        }
        let original_shape: Vec<usize> = nm.index_map.iter().map(Vec::len).collect();
        let mut factors = Vec::with_capacity(core.ndim());
        for (mode, (&rows, &cols)) in original_shape.iter().zip(core.shape()).enumerate() {
            let f = tensor_as_matrix(read_tensor(&mut file)?)?;
            if f.rows() != rows || f.cols() != cols {
                return Err(Error::Format(format!(
                    "blob {} factor {mode} is {}x{}, expected {rows}x{cols}",
                    nm.blob,
                    f.rows(),
                    f.cols()
                )));
            }
            factors.push(f);
        }
        nodes.push(MsNode {
            scale: nm.scale,
            id: nm.id,
            factors: TuckerFactors {
                core,
                factors,
                original_shape,
            },
            index_map: nm.index_map.clone(),
            partition: nm.partition.clone(),
            children: nm.children.clone(),
            parent: nm.parent,
        });
    }
    MsTree::from_parts(nodes, manifest.config, manifest.original_shape)
}

fn matrix_as_tensor(m: &Matrix) -> Result<DenseTensor> {
    DenseTensor::new(vec![m.rows(), m.cols()], m.data().to_vec())
}

fn tensor_as_matrix(t: DenseTensor) -> Result<Matrix> {
    if t.ndim() != 2 {
        return Err(Error::Format(format!(
            "expected a matrix record, found {} modes",
            t.ndim()
        )));
    }
    let (rows, cols) = (t.shape()[0], t.shape()[1]);
    Matrix::from_col_major(rows, cols, t.data().to_vec())
}
