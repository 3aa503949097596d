use std::ffi::{c_char, CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use adjflow_ffi::*;

const POISEUILLE: &str = r#"{"mesh": {"generator": {"kind": "channel", "length": 3, "height": 1, "nx": 12, "ny": 4}},
    "flow": {"viscosity": 1, "model": "stokes", "inflow": {"coeffs_x": [0, 1, -1]}}}"#;

fn last_error() -> String {
    let n = unsafe { adjflow_last_error(ptr::null_mut(), 0) };
    if n == 0 {
        return String::new();
    }
    let mut buf = vec![0 as c_char; n];
    unsafe { adjflow_last_error(buf.as_mut_ptr(), n) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn config(json: &str) -> *mut AdjflowConfig {
    let c = CString::new(json).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { adjflow_config_from_json(c.as_ptr(), &mut out) },
        AdjflowStatus::Ok,
        "{}",
        last_error()
    );
    out
}

fn built_mesh(cfg: *const AdjflowConfig) -> *mut AdjflowMesh {
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { adjflow_config_build_mesh(cfg, &mut out) }, AdjflowStatus::Ok);
    out
}

#[test]
fn poiseuille_through_the_c_abi() {
    let cfg = config(POISEUILLE);
    let mesh = built_mesh(cfg);
    let n = unsafe { adjflow_mesh_node_count(mesh) };
    assert_eq!(n, 65);
    assert_eq!(unsafe { adjflow_mesh_triangle_count(mesh) }, 96);

    let mut state = ptr::null_mut();
    assert_eq!(unsafe { adjflow_solve(mesh, cfg, &mut state) }, AdjflowStatus::Ok);
    // inputs may be released before the state
    unsafe { adjflow_config_free(cfg) };

    // same numbers as the library called directly
    let direct = adjflow::cli::config::parse_config(POISEUILLE.as_bytes()).unwrap();
    let m = direct.build_mesh().unwrap();
    let y = adjflow::flow::solve_flow(&m, &direct.flow, None).unwrap();
    let mut j = 0.0;
    assert_eq!(unsafe { adjflow_state_energy(state, &mut j) }, AdjflowStatus::Ok);
    assert_eq!(j, adjflow::flow::dissipated_energy(&m, &y, 1.0));

    let mut xy = vec![0.0; 2 * n];
    let mut u = vec![0.0; 2 * n];
    assert_eq!(
        unsafe { adjflow_mesh_nodes(mesh, xy.as_mut_ptr(), xy.len()) },
        AdjflowStatus::Ok
    );
    assert_eq!(
        unsafe { adjflow_state_velocity(state, u.as_mut_ptr(), u.len()) },
        AdjflowStatus::Ok
    );
    for i in 0..n {
        let (x, y) = (xy[2 * i], xy[2 * i + 1]);
        if x == 0.0 {
            assert!((u[2 * i] - y * (1.0 - y)).abs() < 1e-14);
        }
    }

    let mut p = vec![0.0; n];
    assert_eq!(
        unsafe { adjflow_state_pressure(state, p.as_mut_ptr(), n) },
        AdjflowStatus::Ok
    );
    let mut v = vec![0.0; 2 * n];
    assert_eq!(
        unsafe { adjflow_state_adjoint_velocity(state, v.as_mut_ptr(), v.len()) },
        AdjflowStatus::Ok
    );
    assert!(v.iter().any(|x| *x != 0.0));
    assert!(unsafe { adjflow_state_newton_iterations(state) } >= 1);

    unsafe {
        adjflow_state_free(state);
        adjflow_mesh_free(mesh);
    }
}

#[test]
fn short_buffers_are_rejected() {
    let mut mesh = ptr::null_mut();
    assert_eq!(
        unsafe { adjflow_mesh_channel(1.0, 1.0, 2, 2, &mut mesh) },
        AdjflowStatus::Ok
    );
    let mut xy = [0.0; 3];
    assert_eq!(
        unsafe { adjflow_mesh_nodes(mesh, xy.as_mut_ptr(), 3) },
        AdjflowStatus::BufferTooSmall
    );
    assert!(last_error().contains("18 needed"), "{}", last_error());

    let mut needed = 0usize;
    assert_eq!(
        unsafe { adjflow_mesh_to_json(mesh, ptr::null_mut(), 0, &mut needed) },
        AdjflowStatus::BufferTooSmall
    );
    let mut buf = vec![0 as c_char; needed];
    assert_eq!(
        unsafe { adjflow_mesh_to_json(mesh, buf.as_mut_ptr(), needed, ptr::null_mut()) },
        AdjflowStatus::Ok
    );
    assert_eq!(last_error(), "");

    // the JSON parses back to the same mesh
    let mut back = ptr::null_mut();
    assert_eq!(
        unsafe { adjflow_mesh_from_json(buf.as_ptr(), &mut back) },
        AdjflowStatus::Ok
    );
    assert_eq!(unsafe { adjflow_mesh_node_count(back) }, 9);
    let (mut a, mut b) = (0.0, 0.0);
    unsafe {
        adjflow_mesh_volume(mesh, &mut a);
        adjflow_mesh_volume(back, &mut b);
    }
    assert_eq!(a, b);
    unsafe {
        adjflow_mesh_free(mesh);
        adjflow_mesh_free(back);
    }
}

#[test]
fn errors_carry_status_and_message() {
    let mut cfg = ptr::null_mut();
    let bad = CString::new(r#"{"mesh": {"path": "m.json"}, "flow": {"viscosity": -1}}"#).unwrap();
    assert_eq!(
        unsafe { adjflow_config_from_json(bad.as_ptr(), &mut cfg) },
        AdjflowStatus::Config
    );
    assert!(cfg.is_null());
    assert!(last_error().contains("flow.viscosity"));

    let garbage = CString::new("{\"nodes\": [").unwrap();
    let mut mesh = ptr::null_mut();
    assert_eq!(
        unsafe { adjflow_mesh_from_json(garbage.as_ptr(), &mut mesh) },
        AdjflowStatus::Parse
    );

    assert_eq!(
        unsafe { adjflow_mesh_channel(1.0, 1.0, 0, 2, &mut mesh) },
        AdjflowStatus::InvalidArgument
    );

    let missing = CString::new("/nonexistent/run.json").unwrap();
    assert_eq!(
        unsafe { adjflow_config_load(missing.as_ptr(), &mut cfg) },
        AdjflowStatus::Io
    );

    let not_utf8 = [0xffu8 as c_char, 0];
    assert_eq!(
        unsafe { adjflow_mesh_from_json(not_utf8.as_ptr(), &mut mesh) },
        AdjflowStatus::InvalidUtf8
    );
}

#[test]
fn null_handles_are_reported_not_dereferenced() {
    let mut x = 0.0;
    assert_eq!(
        unsafe { adjflow_state_energy(ptr::null(), &mut x) },
        AdjflowStatus::NullPointer
    );
    assert!(last_error().contains("`state`"));
    assert_eq!(
        unsafe { adjflow_mesh_volume(ptr::null(), &mut x) },
        AdjflowStatus::NullPointer
    );
    assert_eq!(
        unsafe { adjflow_mesh_from_json(ptr::null(), ptr::null_mut()) },
        AdjflowStatus::NullPointer
    );
    assert_eq!(unsafe { adjflow_mesh_node_count(ptr::null()) }, 0);
    assert_eq!(unsafe { adjflow_optim_history_len(ptr::null()) }, 0);
    assert!(!unsafe { adjflow_optim_terminated_early(ptr::null()) });
    unsafe {
        adjflow_mesh_free(ptr::null_mut());
        adjflow_config_free(ptr::null_mut());
        adjflow_state_free(ptr::null_mut());
        adjflow_optim_free(ptr::null_mut());
    }
}

#[test]
fn mesh_without_outflow_fails_to_solve() {
    let cfg = config(POISEUILLE);
    let json = CString::new(
        r#"{"nodes":[[0,0],[1,0],[0,1]],"triangles":[[0,1,2]],"boundary":[[0,1,"wall"],[1,2,"wall"],[2,0,"inflow"]]}"#,
    )
    .unwrap();
    let mut mesh = ptr::null_mut();
    assert_eq!(
        unsafe { adjflow_mesh_from_json(json.as_ptr(), &mut mesh) },
        AdjflowStatus::Ok
    );
    let mut state = ptr::null_mut();
    assert_eq!(
        unsafe { adjflow_solve(mesh, cfg, &mut state) },
        AdjflowStatus::MissingTag
    );
    assert!(state.is_null());
    unsafe {
        adjflow_mesh_free(mesh);
        adjflow_config_free(cfg);
    }
}

#[test]
fn short_optimization_run() {
    let cfg = config(
        r#"{"mesh": {"generator": {"kind": "bent_channel"}},
            "flow": {"viscosity": 0.1071875, "model": "stokes", "inflow": {"coeffs_x": [-4.7, 4.35, -1.0]}},
            "optimize": {"step0": 1, "epsilon": 0.15, "volume_feedback": "signed", "max_iters": 3,
                         "step_bounds": [1e-6, 3]}}"#,
    );
    let mesh = built_mesh(cfg);
    let mut opt = ptr::null_mut();
    assert_eq!(
        unsafe { adjflow_optimize(mesh, cfg, &mut opt) },
        AdjflowStatus::Ok,
        "{}",
        last_error()
    );
    assert_eq!(unsafe { adjflow_optim_history_len(opt) }, 3);

    let (mut j0, mut j1, mut r) = (0.0, 0.0, 0.0);
    unsafe {
        adjflow_optim_initial_energy(opt, &mut j0);
        adjflow_optim_final_energy(opt, &mut j1);
        adjflow_optim_reduction(opt, &mut r);
    }
    assert!(j1 < j0);
    assert!((r - (1.0 - j1 / j0)).abs() < 1e-15);

    let mut needed = 0;
    unsafe { adjflow_optim_history_csv(opt, ptr::null_mut(), 0, &mut needed) };
    let mut buf = vec![0 as c_char; needed];
    assert_eq!(
        unsafe { adjflow_optim_history_csv(opt, buf.as_mut_ptr(), needed, ptr::null_mut()) },
        AdjflowStatus::Ok
    );
    let csv = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap().to_owned();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.starts_with("iter,J,volume,"));

    let mut moved = ptr::null_mut();
    assert_eq!(unsafe { adjflow_optim_mesh(opt, &mut moved) }, AdjflowStatus::Ok);
    assert_eq!(unsafe { adjflow_mesh_node_count(moved) }, unsafe {
        adjflow_mesh_node_count(mesh)
    });
    unsafe {
        adjflow_mesh_free(moved);
        adjflow_optim_free(opt);
        adjflow_mesh_free(mesh);
        adjflow_config_free(cfg);
    }
}

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/adjflow.h")
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(header()).unwrap();
    for name in [
        "typedef struct AdjflowMesh AdjflowMesh;",
        "ADJFLOW_STATUS_OK = 0",
        "ADJFLOW_STATUS_PANIC = 16",
        "size_t adjflow_last_error(char *buf, size_t cap);",
        "AdjflowStatus adjflow_solve(",
        "AdjflowStatus adjflow_optimize(",
        "void adjflow_optim_free(AdjflowOptim *optim);",
    ] {
        assert!(h.contains(name), "missing `{name}`");
    }
}

/// Directory holding the static library built alongside this test binary.
fn artifact_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn c_program_links_and_runs() {
    let lib = artifact_dir().join("libadjflow_ffi.a");
    assert!(lib.exists(), "{} not built", lib.display());
    let dir = tempfile_dir();
    let exe = dir.join("smoke");
    let src = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/c/smoke.c");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(&cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("nodes=65 triangles=96 energy="), "{stdout}");
    let _ = std::fs::remove_dir_all(&dir);
}

fn tempfile_dir() -> PathBuf {
    let d = std::env::temp_dir().join(format!("adjflow-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}
