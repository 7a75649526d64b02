//! Exercises the C ABI end to end from Rust: handle lifecycle, status codes,
//! decomposition round trips, and file I/O.

use mshosvd_ffi::*;
use std::ffi::CString;
use std::ptr;

fn temp_path(name: &str) -> std::path::PathBuf {
    std::env::temp_dir().join(format!(
        "mshosvd-ffi-{}-{}-{name}",
        std::process::id(),
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .unwrap()
            .as_nanos()
    ))
}

fn c_path(p: &std::path::Path) -> CString {
    CString::new(p.to_str().unwrap()).unwrap()
}

#[test]
fn tensor_handle_lifecycle() {
    unsafe {
        let shape = [2usize, 3];
        let data: Vec<f64> = (0..6).map(f64::from).collect();
        let mut t: *mut MshTensor = ptr::null_mut();
        assert_eq!(
            msh_tensor_new(shape.as_ptr(), 2, data.as_ptr(), 6, &mut t),
            MshStatus::MshOk
        );

        let mut ndim = 0usize;
        assert_eq!(msh_tensor_ndim(t, &mut ndim), MshStatus::MshOk);
        assert_eq!(ndim, 2);
        let mut dim = 0usize;
        assert_eq!(msh_tensor_dim(t, 1, &mut dim), MshStatus::MshOk);
        assert_eq!(dim, 3);
        assert_eq!(msh_tensor_dim(t, 9, &mut dim), MshStatus::MshInvalidArgument);

        let mut len = 0usize;
        assert_eq!(msh_tensor_len(t, &mut len), MshStatus::MshOk);
        let mut buf = vec![0.0; len];
        assert_eq!(
            msh_tensor_copy_data(t, buf.as_mut_ptr(), len),
            MshStatus::MshOk
        );
        assert_eq!(buf, data);
        assert_eq!(
            msh_tensor_copy_data(t, buf.as_mut_ptr(), len - 1),
            MshStatus::MshInvalidArgument
        );
        msh_tensor_free(t);
    }
}

#[test]
fn null_and_invalid_inputs_report_status() {
    unsafe {
        let mut t: *mut MshTensor = ptr::null_mut();
        assert_eq!(
            msh_tensor_new(ptr::null(), 2, ptr::null(), 0, &mut t),
            MshStatus::MshNullPointer
        );

        // Length mismatch between shape and data.
        let shape = [2usize, 2];
        let data = [1.0f64; 3];
        let status = msh_tensor_new(shape.as_ptr(), 2, data.as_ptr(), 3, &mut t);
        assert_eq!(status, MshStatus::MshShapeMismatch);
        let msg = std::ffi::CStr::from_ptr(msh_last_error_message());
        assert!(!msg.to_bytes().is_empty());

        // Reading a missing file reports an I/O failure.
        let missing = c_path(&temp_path("missing.mstn"));
        assert_eq!(
            msh_tensor_read(missing.as_ptr(), &mut t),
            MshStatus::MshIoError
        );
    }
}

#[test]
fn decompose_reconstruct_and_report() {
    unsafe {
        let mut x: *mut MshTensor = ptr::null_mut();
        assert_eq!(msh_tensor_synthetic(3, &mut x), MshStatus::MshOk);

        let clusters = [2usize, 2, 2];
        let ranks = [2usize, 2, 2, 2, 2, 2]; // scales 0 and 1
        let mut tree: *mut MshTree = ptr::null_mut();
        assert_eq!(
            msh_decompose_with_ranks(
                x,
                clusters.as_ptr(),
                3,
                1,
                ranks.as_ptr(),
                7,
                MSH_PARTITIONER_KMEANS,
                &mut tree,
            ),
            MshStatus::MshOk
        );
        let mut nodes = 0usize;
        assert_eq!(msh_tree_node_count(tree, &mut nodes), MshStatus::MshOk);
        assert_eq!(nodes, 9);

        let mut report = MshCostReport {
            normalized_error: -1.0,
            stored_elements: 0,
            compression_rate: 0.0,
            objective_h: 0.0,
            lambda: 0.0,
        };
        assert_eq!(
            msh_tree_cost_report(tree, x, 0.5, &mut report),
            MshStatus::MshOk
        );
        assert!(report.normalized_error > 0.0 && report.normalized_error < 1.0);
        assert!(report.stored_elements > 0);

        let mut approx: *mut MshTensor = ptr::null_mut();
        assert_eq!(msh_tree_reconstruct(tree, 1, &mut approx), MshStatus::MshOk);
        assert_eq!(
            msh_tree_reconstruct(tree, 9, &mut approx),
            MshStatus::MshInvalidArgument
        );

        msh_tensor_free(approx);
        msh_tree_free(tree);
        msh_tensor_free(x);
    }
}

#[test]
fn prune_and_archive_round_trip() {
    unsafe {
        let mut x: *mut MshTensor = ptr::null_mut();
        assert_eq!(msh_tensor_synthetic(5, &mut x), MshStatus::MshOk);

        let mut tree: *mut MshTree = ptr::null_mut();
        let mut report = MshCostReport {
            normalized_error: 0.0,
            stored_elements: 0,
            compression_rate: 0.0,
            objective_h: 0.0,
            lambda: 0.0,
        };
        assert_eq!(
            msh_prune(
                x,
                ptr::null(),
                0,
                2,
                0.7,
                0.25,
                1,
                MSH_PARTITIONER_KMEANS,
                &mut tree,
                &mut report,
            ),
            MshStatus::MshOk
        );
        assert!(report.lambda == 0.25 && report.objective_h > 0.0);

        let dir = temp_path("tree-archive");
        let dir_c = c_path(&dir);
        assert_eq!(msh_tree_save(tree, dir_c.as_ptr()), MshStatus::MshOk);
        let mut back: *mut MshTree = ptr::null_mut();
        assert_eq!(msh_tree_load(dir_c.as_ptr(), &mut back), MshStatus::MshOk);

        let mut a = 0usize;
        let mut b = 0usize;
        msh_tree_node_count(tree, &mut a);
        msh_tree_node_count(back, &mut b);
        assert_eq!(a, b);

        msh_tree_free(back);
        msh_tree_free(tree);
        msh_tensor_free(x);
        let _ = std::fs::remove_dir_all(dir);
    }
}

#[test]
fn tensor_file_round_trip_through_abi() {
    unsafe {
        let shape = [3usize, 2, 2];
        let data: Vec<f64> = (0..12).map(|i| f64::from(i) * 0.5 - 3.0).collect();
        let mut t: *mut MshTensor = ptr::null_mut();
        assert_eq!(
            msh_tensor_new(shape.as_ptr(), 3, data.as_ptr(), 12, &mut t),
            MshStatus::MshOk
        );
        let path = temp_path("roundtrip.mstn");
        let path_c = c_path(&path);
        assert_eq!(msh_tensor_write(t, path_c.as_ptr()), MshStatus::MshOk);

        let mut back: *mut MshTensor = ptr::null_mut();
        assert_eq!(msh_tensor_read(path_c.as_ptr(), &mut back), MshStatus::MshOk);
        let mut buf = vec![0.0; 12];
        assert_eq!(
            msh_tensor_copy_data(back, buf.as_mut_ptr(), 12),
            MshStatus::MshOk
        );
        assert_eq!(buf, data);

        msh_tensor_free(back);
        msh_tensor_free(t);
        let _ = std::fs::remove_file(path);
    }
}
