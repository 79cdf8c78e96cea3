use std::ffi::CStr;
use std::ptr;

use cartel_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(cartel_last_error()) }.to_string_lossy().into_owned()
}

fn small_params() -> CartelSimParams {
    let mut p = unsafe {
        let mut p = std::mem::zeroed();
        assert_eq!(cartel_sim_params_default(&mut p), CartelStatus::Ok);
        p
    };
    p.n = 200;
    p.k = 2;
    p.a = 0.3;
    p.r = 1e-3;
    p.seed = 11;
    p.burn_in_sweeps = 5;
    p.measure_sweeps = 20;
    p
}

#[test]
fn defaults_match_core() {
    let mut p = unsafe { std::mem::zeroed() };
    assert_eq!(unsafe { cartel_sim_params_default(&mut p) }, CartelStatus::Ok);
    let d = cartel::SimParams::default();
    assert_eq!(p.n as usize, d.n);
    assert_eq!(p.a, d.a);
    assert_eq!(p.init, CartelInit::Uniform);
}

#[test]
fn run_matches_core() {
    let p = small_params();
    let (mut m, mut v) = (0.0, 0.0);
    assert_eq!(unsafe { cartel_run(&p, &mut m, &mut v) }, CartelStatus::Ok);
    let core = cartel::run(&cartel::SimParams {
        n: 200,
        k: 2,
        a: 0.3,
        r: 1e-3,
        seed: 11,
        burn_in_sweeps: 5,
        measure_sweeps: 20,
        record_every_sweeps: p.record_every_sweeps,
        init: cartel::InitialW::Uniform,
    })
    .unwrap();
    assert_eq!(m, core.mean_w);
    assert_eq!(v, core.var_w);
}

#[test]
fn invalid_params_report_field() {
    let mut p = small_params();
    p.k = 0;
    let (mut m, mut v) = (0.0, 0.0);
    assert_eq!(unsafe { cartel_run(&p, &mut m, &mut v) }, CartelStatus::InvalidParam);
    assert!(last_error().contains("K"), "{}", last_error());

    let mut h = ptr::null_mut();
    assert_eq!(unsafe { cartel_simulation_new(&p, &mut h) }, CartelStatus::InvalidParam);
    assert!(h.is_null());
}

#[test]
fn null_pointers_are_rejected() {
    let mut m = 0.0;
    assert_eq!(unsafe { cartel_run(ptr::null(), &mut m, &mut m) }, CartelStatus::NullPointer);
    assert!(last_error().contains("params"));
    assert_eq!(unsafe { cartel_critical_a(1, 1e-6, ptr::null_mut()) }, CartelStatus::NullPointer);
    assert_eq!(unsafe { cartel_simulation_run_sweeps(ptr::null_mut(), 1) }, CartelStatus::NullPointer);
    unsafe {
        cartel_simulation_free(ptr::null_mut());
        cartel_master_free(ptr::null_mut());
    }
}

#[test]
fn simulation_handle_lifecycle() {
    let p = small_params();
    let mut h = ptr::null_mut();
    unsafe {
        assert_eq!(cartel_simulation_new(&p, &mut h), CartelStatus::Ok);
        assert!(!h.is_null());
        assert_eq!(cartel_simulation_run_sweeps(h, 3), CartelStatus::Ok);
        let mut done = 0;
        assert_eq!(cartel_simulation_sweeps_done(h, &mut done), CartelStatus::Ok);
        assert_eq!(done, 3);

        let mut w = vec![0.0; 200];
        let mut small = vec![0.0; 10];
        assert_eq!(cartel_simulation_copy_w(h, small.as_mut_ptr(), small.len()), CartelStatus::BufferTooSmall);
        assert_eq!(cartel_simulation_copy_w(h, w.as_mut_ptr(), w.len()), CartelStatus::Ok);
        let mut mean = 0.0;
        assert_eq!(cartel_simulation_mean_w(h, &mut mean), CartelStatus::Ok);
        assert!((mean - w.iter().sum::<f64>() / 200.0).abs() < 1e-12);

        let mut deg = vec![0u32; 200];
        assert_eq!(cartel_simulation_copy_in_degree(h, deg.as_mut_ptr(), deg.len()), CartelStatus::Ok);
        assert_eq!(deg.iter().map(|&d| d as u64).sum::<u64>(), 400);
        cartel_simulation_free(h);
    }
}

#[test]
fn critical_a_matches_core() {
    let mut a_c = 0.0;
    assert_eq!(unsafe { cartel_critical_a(3, 1e-6, &mut a_c) }, CartelStatus::Ok);
    let core = cartel::stability::find_critical_a(3, 1e-6).unwrap().a_c;
    assert_eq!(a_c, core);
    assert_eq!(unsafe { cartel_critical_a(0, 1e-6, &mut a_c) }, CartelStatus::InvalidParam);
    assert_eq!(unsafe { cartel_critical_a(1, -1.0, &mut a_c) }, CartelStatus::InvalidParam);
}

#[test]
fn master_handle_conserves_mass() {
    let mut h = ptr::null_mut();
    unsafe {
        assert_eq!(cartel_master_new(1, 0, 8, &mut h), CartelStatus::Ok);
        let (mut k_max, mut n_w) = (0usize, 0usize);
        assert_eq!(cartel_master_shape(h, &mut k_max, &mut n_w), CartelStatus::Ok);
        assert_eq!((k_max, n_w), (cartel::master_eq::default_k_max(1), 8));
        let mut mean = 0.0;
        assert_eq!(cartel_master_integrate(h, 0.7, 0.1, 5.0, &mut mean), CartelStatus::Ok);
        assert!((0.0..=1.0).contains(&mean));
        let mut t = 0.0;
        cartel_master_time(h, &mut t);
        assert_eq!(t, 5.0);
        let mut grid = vec![0.0; (k_max + 1) * n_w];
        assert_eq!(cartel_master_copy_grid(h, grid.as_mut_ptr(), grid.len()), CartelStatus::Ok);
        assert!((grid.iter().sum::<f64>() - 1.0).abs() < 1e-12);

        assert_eq!(cartel_master_set_perturbed(h, 3, 1e-3), CartelStatus::Ok);
        cartel_master_time(h, &mut t);
        assert_eq!(t, 0.0);
        assert_eq!(cartel_master_set_perturbed(h, 99, 1e-3), CartelStatus::InvalidParam);
        assert_eq!(cartel_master_integrate(h, 0.5, -1.0, 1.0, &mut mean), CartelStatus::InvalidParam);
        cartel_master_free(h);
    }
}

#[test]
fn header_declares_entry_points() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/cartel.h")).unwrap();
    for name in [
        "cartel_last_error",
        "cartel_run",
        "cartel_simulation_new",
        "cartel_simulation_free",
        "cartel_critical_a",
        "cartel_master_new",
        "cartel_master_integrate",
        "typedef struct CartelSimulation CartelSimulation",
        "CARTEL_STATUS_OK = 0",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let dir = tempfile_dir();
    let src = dir.join("smoke.c");
    std::fs::write(
        &src,
        "#include \"cartel.h\"\nint main(void) { CartelSimParams p; return cartel_sim_params_default(&p) == CARTEL_STATUS_OK ? 0 : 1; }\n",
    )
    .unwrap();
    let status = std::process::Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
        .arg(&src)
        .status()
        .unwrap();
    assert!(status.success());
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| std::process::Command::new(c).arg("--version").output().is_ok())
        .ok_or(())
}

fn tempfile_dir() -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("cartel-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
