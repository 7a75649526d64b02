//! C ABI over the multiscale tensor decomposition library.
//!
//! Conventions:
//! - Tensors and trees are opaque handles created and freed by this library.
//! - Every fallible call returns an [`MshStatus`]; outputs go through
//!   out-pointers that are written only on `MSH_OK`.
//! - [`msh_last_error_message`] returns a thread-local, NUL-terminated
//!   description of the most recent failure on the calling thread.
//! - No call unwinds across the boundary; internal panics surface as
//!   `MSH_INTERNAL_ERROR`.

use mshosvd::analysis;
use mshosvd::error::Error;
use mshosvd::io;
use mshosvd::tensor::DenseTensor;
use mshosvd::tree::{self, MsTree, PartitionStrategy, RankPolicy, TreeConfig};
use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MshStatus {
    MshOk = 0,
    MshNullPointer = 1,
    MshInvalidArgument = 2,
    MshShapeMismatch = 3,
    MshIoError = 4,
    MshFormatError = 5,
    MshNonFinite = 6,
    MshInternalError = 7,
}

/// Opaque dense tensor handle.
pub struct MshTensor(DenseTensor);

/// Opaque decomposition tree handle.
pub struct MshTree(MsTree);

/// Cost summary of a tree against the tensor it approximates.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct MshCostReport {
    pub normalized_error: f64,
    pub stored_elements: u64,
    pub compression_rate: f64,
    pub objective_h: f64,
    pub lambda: f64,
}

/// Partitioning strategies accepted by the decomposition calls.
pub const MSH_PARTITIONER_KMEANS: c_int = 0;
pub const MSH_PARTITIONER_RANDOM: c_int = 1;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &Error) -> MshStatus {
    match err {
        Error::ShapeMismatch(_) => MshStatus::MshShapeMismatch,
        Error::InvalidMode { .. } | Error::InvalidArgument(_) => MshStatus::MshInvalidArgument,
        Error::NonFinite => MshStatus::MshNonFinite,
        Error::Io(_) => MshStatus::MshIoError,
        Error::Format(_) => MshStatus::MshFormatError,
    }
}

fn fail(err: Error) -> MshStatus {
    set_error(&err.to_string());
    status_of(&err)
}

/// Runs a closure, converting errors and panics into status codes.
fn guarded(f: impl FnOnce() -> Result<MshStatus, Error>) -> MshStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => status,
        Ok(Err(err)) => fail(err),
        Err(_) => {
            set_error("internal panic");
            MshStatus::MshInternalError
        }
    }
}

macro_rules! non_null {
    ($ptr:expr) => {
        if $ptr.is_null() {
            set_error(concat!("null pointer: ", stringify!($ptr)));
            return MshStatus::MshNullPointer;
        }
    };
}

/// Most recent error message on this thread; valid until the next failing
/// call on the same thread.
#[no_mangle]
pub extern "C" fn msh_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

// ---------------------------------------------------------------------------
// Tensor handles
// ---------------------------------------------------------------------------

/// Create a tensor from a shape and first-index-fastest data.
///
/// # Safety
/// `shape` must point to `ndim` readable `size_t`s and `data` to `len`
/// readable doubles; `out` must be a valid destination pointer.
#[no_mangle]
pub unsafe extern "C" fn msh_tensor_new(
    shape: *const usize,
    ndim: usize,
    data: *const f64,
    len: usize,
    out: *mut *mut MshTensor,
) -> MshStatus {
    non_null!(shape);
    non_null!(data);
    non_null!(out);
    let shape = std::slice::from_raw_parts(shape, ndim).to_vec();
    let data = std::slice::from_raw_parts(data, len).to_vec();
    guarded(|| {
        let t = DenseTensor::new(shape, data)?;
        out.write(Box::into_raw(Box::new(MshTensor(t))));
        Ok(MshStatus::MshOk)
    })
}

/// # Safety
/// `t` must be a handle from this library, not yet freed; null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn msh_tensor_free(t: *mut MshTensor) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// # Safety
/// `t` must be a live tensor handle and `out` a valid destination.
#[no_mangle]
pub unsafe extern "C" fn msh_tensor_ndim(t: *const MshTensor, out: *mut usize) -> MshStatus {
    non_null!(t);
    non_null!(out);
    out.write((*t).0.ndim());
    MshStatus::MshOk
}

/// # Safety
/// `t` must be a live tensor handle and `out` a valid destination.
#[no_mangle]
pub unsafe extern "C" fn msh_tensor_dim(
    t: *const MshTensor,
    mode: usize,
    out: *mut usize,
) -> MshStatus {
    non_null!(t);
    non_null!(out);
    let tensor = &(*t).0;
    if mode >= tensor.ndim() {
        set_error("mode out of range");
        return MshStatus::MshInvalidArgument;
    }
    out.write(tensor.shape()[mode]);
    MshStatus::MshOk
}

/// Total element count.
///
/// # Safety
/// `t` must be a live tensor handle and `out` a valid destination.
#[no_mangle]
pub unsafe extern "C" fn msh_tensor_len(t: *const MshTensor, out: *mut usize) -> MshStatus {
    non_null!(t);
    non_null!(out);
    out.write((*t).0.len());
    MshStatus::MshOk
}

/// Copy the elements (first-index-fastest) into a caller buffer of exactly
/// `len` doubles.
///
/// # Safety
/// `t` must be a live tensor handle; `out` must point to `len` writable
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn msh_tensor_copy_data(
    t: *const MshTensor,
    out: *mut f64,
    len: usize,
) -> MshStatus {
    non_null!(t);
    non_null!(out);
    let tensor = &(*t).0;
    if len != tensor.len() {
        set_error("buffer length does not match tensor size");
        return MshStatus::MshInvalidArgument;
    }
    std::slice::from_raw_parts_mut(out, len).copy_from_slice(tensor.data());
    MshStatus::MshOk
}

/// Read a tensor file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid destination.
#[no_mangle]
pub unsafe extern "C" fn msh_tensor_read(
    path: *const c_char,
    out: *mut *mut MshTensor,
) -> MshStatus {
    non_null!(path);
    non_null!(out);
    let Some(path) = path_from(path) else {
        return MshStatus::MshInvalidArgument;
    };
    guarded(|| {
        let t = io::load_tensor(path)?;
        out.write(Box::into_raw(Box::new(MshTensor(t))));
        Ok(MshStatus::MshOk)
    })
}

/// Write a tensor file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `t` a live tensor handle.
#[no_mangle]
pub unsafe extern "C" fn msh_tensor_write(
    t: *const MshTensor,
    path: *const c_char,
) -> MshStatus {
    non_null!(t);
    non_null!(path);
    let Some(path) = path_from(path) else {
        return MshStatus::MshInvalidArgument;
    };
    let tensor = &(*t).0;
    guarded(|| {
        io::save_tensor(path, tensor)?;
        Ok(MshStatus::MshOk)
    })
}

/// Generate the bundled planted-blocks synthetic tensor.
///
/// # Safety
/// `out` must be a valid destination pointer.
#[no_mangle]
pub unsafe extern "C" fn msh_tensor_synthetic(seed: u64, out: *mut *mut MshTensor) -> MshStatus {
    non_null!(out);
    guarded(|| {
        let (t, _) = analysis::generate_synthetic(seed);
        out.write(Box::into_raw(Box::new(MshTensor(t))));
        Ok(MshStatus::MshOk)
    })
}

unsafe fn path_from(raw: *const c_char) -> Option<PathBuf> {
    match CStr::from_ptr(raw).to_str() {
        Ok(s) => Some(PathBuf::from(s)),
        Err(_) => {
            set_error("path is not valid UTF-8");
            None
        }
    }
}

// ---------------------------------------------------------------------------
// Decomposition
// ---------------------------------------------------------------------------

unsafe fn build_config(
    tensor: &DenseTensor,
    clusters: *const usize,
    n_clusters: usize,
    max_scale: usize,
    rank_policy: RankPolicy,
    seed: u64,
    partitioner: c_int,
) -> Result<TreeConfig, Error> {
    let clusters = if clusters.is_null() {
        vec![2; tensor.ndim()]
    } else {
        std::slice::from_raw_parts(clusters, n_clusters).to_vec()
    };
    let strategy = match partitioner {
        MSH_PARTITIONER_KMEANS => PartitionStrategy::KMeans,
        MSH_PARTITIONER_RANDOM => PartitionStrategy::Random,
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown partitioner code {other}"
            )))
        }
    };
    Ok(TreeConfig {
        clusters_per_mode: clusters,
        max_scale,
        rank_policy,
        strategy,
        seed,
    })
}

/// Build a multiscale tree with the energy threshold `tau` at every scale.
/// `clusters` may be null for the default of two clusters per mode.
///
/// # Safety
/// `t` must be a live tensor handle; `clusters` null or `n_clusters` long;
/// `out` a valid destination.
#[no_mangle]
pub unsafe extern "C" fn msh_decompose(
    t: *const MshTensor,
    clusters: *const usize,
    n_clusters: usize,
    max_scale: usize,
    tau: f64,
    seed: u64,
    partitioner: c_int,
    out: *mut *mut MshTree,
) -> MshStatus {
    non_null!(t);
    non_null!(out);
    let tensor = &(*t).0;
    guarded(|| {
        let config = build_config(
            tensor,
            clusters,
            n_clusters,
            max_scale,
            RankPolicy::Tau(tau),
            seed,
            partitioner,
        )?;
        let tree = tree::build(tensor, &config)?;
        out.write(Box::into_raw(Box::new(MshTree(tree))));
        Ok(MshStatus::MshOk)
    })
}

/// Build a multiscale tree with explicit per-scale ranks: `ranks` holds
/// `(max_scale + 1) * ndim` entries, scale-major.
///
/// # Safety
/// `t` must be a live tensor handle; `clusters` null or `n_clusters` long;
/// `ranks` as described; `out` a valid destination.
#[no_mangle]
pub unsafe extern "C" fn msh_decompose_with_ranks(
    t: *const MshTensor,
    clusters: *const usize,
    n_clusters: usize,
    max_scale: usize,
    ranks: *const usize,
    seed: u64,
    partitioner: c_int,
    out: *mut *mut MshTree,
) -> MshStatus {
    non_null!(t);
    non_null!(ranks);
    non_null!(out);
    let tensor = &(*t).0;
    let ndim = tensor.ndim();
    let flat = std::slice::from_raw_parts(ranks, (max_scale + 1) * ndim);
    let per_scale: Vec<Vec<usize>> = flat.chunks(ndim).map(<[usize]>::to_vec).collect();
    guarded(|| {
        let config = build_config(
            tensor,
            clusters,
            n_clusters,
            max_scale,
            RankPolicy::PerScale(per_scale),
            seed,
            partitioner,
        )?;
        let tree = tree::build(tensor, &config)?;
        out.write(Box::into_raw(Box::new(MshTree(tree))));
        Ok(MshStatus::MshOk)
    })
}

/// Greedy pruned decomposition minimizing error + lambda * compression.
/// Writes the resulting tree and, when `report` is non-null, its cost
/// summary.
///
/// # Safety
/// As for [`msh_decompose`]; `report` may be null.
#[no_mangle]
pub unsafe extern "C" fn msh_prune(
    t: *const MshTensor,
    clusters: *const usize,
    n_clusters: usize,
    max_scale: usize,
    tau: f64,
    lambda: f64,
    seed: u64,
    partitioner: c_int,
    out: *mut *mut MshTree,
    report: *mut MshCostReport,
) -> MshStatus {
    non_null!(t);
    non_null!(out);
    let tensor = &(*t).0;
    guarded(|| {
        let config = build_config(
            tensor,
            clusters,
            n_clusters,
            max_scale,
            RankPolicy::Tau(tau),
            seed,
            partitioner,
        )?;
        let result = tree::prune(tensor, &config, lambda)?;
        if !report.is_null() {
            report.write(report_to_c(&result.report));
        }
        out.write(Box::into_raw(Box::new(MshTree(result.tree))));
        Ok(MshStatus::MshOk)
    })
}

fn report_to_c(r: &tree::CostReport) -> MshCostReport {
    MshCostReport {
        normalized_error: r.normalized_error,
        stored_elements: r.stored_elements,
        compression_rate: r.compression_rate,
        objective_h: r.objective_h,
        lambda: r.lambda,
    }
}

/// # Safety
/// `tree` must be a handle from this library, not yet freed; null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn msh_tree_free(tree: *mut MshTree) {
    if !tree.is_null() {
        drop(Box::from_raw(tree));
    }
}

/// Number of nodes in the tree.
///
/// # Safety
/// `tree` must be a live tree handle and `out` a valid destination.
#[no_mangle]
pub unsafe extern "C" fn msh_tree_node_count(tree: *const MshTree, out: *mut usize) -> MshStatus {
    non_null!(tree);
    non_null!(out);
    out.write((*tree).0.nodes().len());
    MshStatus::MshOk
}

/// Sum the node reconstructions through `up_to_scale` into a new tensor.
///
/// # Safety
/// `tree` must be a live tree handle and `out` a valid destination.
#[no_mangle]
pub unsafe extern "C" fn msh_tree_reconstruct(
    tree: *const MshTree,
    up_to_scale: usize,
    out: *mut *mut MshTensor,
) -> MshStatus {
    non_null!(tree);
    non_null!(out);
    let tree = &(*tree).0;
    guarded(|| {
        let t = tree::reconstruct_tree(tree, up_to_scale)?;
        out.write(Box::into_raw(Box::new(MshTensor(t))));
        Ok(MshStatus::MshOk)
    })
}

/// Evaluate a tree against the tensor it approximates.
///
/// # Safety
/// `tree` and `original` must be live handles; `out` a valid destination.
#[no_mangle]
pub unsafe extern "C" fn msh_tree_cost_report(
    tree: *const MshTree,
    original: *const MshTensor,
    lambda: f64,
    out: *mut MshCostReport,
) -> MshStatus {
    non_null!(tree);
    non_null!(original);
    non_null!(out);
    let tree = &(*tree).0;
    let original = &(*original).0;
    guarded(|| {
        let report = tree::cost_report(tree, original, lambda)?;
        out.write(report_to_c(&report));
        Ok(MshStatus::MshOk)
    })
}

/// Serialize a tree archive into a directory.
///
/// # Safety
/// `tree` must be a live handle; `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn msh_tree_save(tree: *const MshTree, dir: *const c_char) -> MshStatus {
    non_null!(tree);
    non_null!(dir);
    let Some(dir) = path_from(dir) else {
        return MshStatus::MshInvalidArgument;
    };
    let tree = &(*tree).0;
    guarded(|| {
        io::save_tree(dir, tree)?;
        Ok(MshStatus::MshOk)
    })
}

/// Load a tree archive from a directory.
///
/// # Safety
/// `dir` must be a NUL-terminated string and `out` a valid destination.
#[no_mangle]
pub unsafe extern "C" fn msh_tree_load(dir: *const c_char, out: *mut *mut MshTree) -> MshStatus {
    non_null!(dir);
    non_null!(out);
    let Some(dir) = path_from(dir) else {
        return MshStatus::MshInvalidArgument;
    };
    guarded(|| {
        let tree = io::load_tree(dir)?;
        out.write(Box::into_raw(Box::new(MshTree(tree))));
        Ok(MshStatus::MshOk)
    })
}
