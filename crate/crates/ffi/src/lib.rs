//! C ABI for the cartel simulator.
//!
//! Every function returns a [`CartelStatus`]. On failure a human-readable
//! message is stored per thread and can be read with [`cartel_last_error`].
//! Simulations and master-equation states are exposed as opaque handles that
//! must be released with the matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cartel::master_eq::{self, DistributionGrid, IntegrateOptions, MasterEquation};
use cartel::{Error, InitialW, SimParams, Simulation};

/// Status codes returned by every entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CartelStatus {
    Ok = 0,
    InvalidParam = 1,
    NoConvergence = 2,
    NoSignChange = 3,
    NonMonotone = 4,
    StepTooLarge = 5,
    InsufficientData = 6,
    Parse = 7,
    Io = 8,
    NullPointer = 9,
    BufferTooSmall = 10,
    Panic = 11,
}

/// Initial values for money.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CartelInit {
    Uniform = 0,
    AllOnes = 1,
}

/// Simulation parameters, mirroring the command-line flags.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CartelSimParams {
    pub n: u64,
    pub k: u64,
    pub a: f64,
    pub r: f64,
    pub seed: u64,
    pub burn_in_sweeps: u64,
    pub measure_sweeps: u64,
    pub record_every_sweeps: u64,
    pub init: CartelInit,
}

/// Opaque simulation handle.
pub struct CartelSimulation {
    inner: Simulation,
}

/// Opaque master-equation state: the equation plus the current grid and time.
pub struct CartelMaster {
    eq: MasterEquation,
    grid: DistributionGrid,
    k: u32,
    t: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> CartelStatus {
    match err {
        Error::InvalidParam { .. } => CartelStatus::InvalidParam,
        Error::NoConvergence { .. } => CartelStatus::NoConvergence,
        Error::NoSignChange { .. } => CartelStatus::NoSignChange,
        Error::NonMonotone { .. } => CartelStatus::NonMonotone,
        Error::StepTooLarge { .. } => CartelStatus::StepTooLarge,
        Error::InsufficientData(_) => CartelStatus::InsufficientData,
        Error::Parse { .. } => CartelStatus::Parse,
        Error::Io(_) => CartelStatus::Io,
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard<F>(f: F) -> CartelStatus
where
    F: FnOnce() -> Result<(), CartelStatus>,
{
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CartelStatus::Ok,
        Ok(Err(status)) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("internal error: {msg}"));
            CartelStatus::Panic
        }
    }
}

fn fail(err: Error) -> CartelStatus {
    set_error(&err.to_string());
    status_of(&err)
}

fn null(name: &str) -> CartelStatus {
    set_error(&format!("{name} is null"));
    CartelStatus::NullPointer
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, CartelStatus> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn deref_mut<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, CartelStatus> {
    p.as_mut().ok_or_else(|| null(name))
}

fn to_params(p: &CartelSimParams) -> SimParams {
    SimParams {
        n: p.n as usize,
        k: p.k as usize,
        a: p.a,
        r: p.r,
        seed: p.seed,
        burn_in_sweeps: p.burn_in_sweeps,
        measure_sweeps: p.measure_sweeps,
        record_every_sweeps: p.record_every_sweeps,
        init: match p.init {
            CartelInit::Uniform => InitialW::Uniform,
            CartelInit::AllOnes => InitialW::AllOnes,
        },
    }
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn cartel_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Fills `out` with the command-line defaults.
///
/// # Safety
/// `out` must be null or point to writable memory for one `CartelSimParams`.
#[no_mangle]
pub unsafe extern "C" fn cartel_sim_params_default(out: *mut CartelSimParams) -> CartelStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        let d = SimParams::default();
        *out = CartelSimParams {
            n: d.n as u64,
            k: d.k as u64,
            a: d.a,
            r: d.r,
            seed: d.seed,
            burn_in_sweeps: d.burn_in_sweeps,
            measure_sweeps: d.measure_sweeps,
            record_every_sweeps: d.record_every_sweeps,
            init: match d.init {
                InitialW::Uniform => CartelInit::Uniform,
                InitialW::AllOnes => CartelInit::AllOnes,
            },
        };
        Ok(())
    })
}

/// Burn-in plus measurement; writes the time-averaged `<w>` and its variance.
///
/// # Safety
/// `params` must point to a valid `CartelSimParams`; `mean_w` and `var_w`
/// must point to writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cartel_run(params: *const CartelSimParams, mean_w: *mut f64, var_w: *mut f64) -> CartelStatus {
    guard(|| {
        let params = to_params(deref(params, "params")?);
        let mean_w = deref_mut(mean_w, "mean_w")?;
        let var_w = deref_mut(var_w, "var_w")?;
        let result = cartel::run(&params).map_err(fail)?;
        *mean_w = result.mean_w;
        *var_w = result.var_w;
        Ok(())
    })
}

/// Creates a simulation in its initial state.
///
/// # Safety
/// `params` must point to a valid `CartelSimParams`; `out` must point to
/// writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn cartel_simulation_new(params: *const CartelSimParams, out: *mut *mut CartelSimulation) -> CartelStatus {
    guard(|| {
        let params = to_params(deref(params, "params")?);
        let out = deref_mut(out, "out")?;
        *out = ptr::null_mut();
        let inner = Simulation::new(params).map_err(fail)?;
        *out = Box::into_raw(Box::new(CartelSimulation { inner }));
        Ok(())
    })
}

/// Releases a simulation. Null is ignored.
///
/// # Safety
/// `sim` must be null or a handle from `cartel_simulation_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cartel_simulation_free(sim: *mut CartelSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Advances the simulation by `sweeps` sweeps of N elementary updates.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cartel_simulation_run_sweeps(sim: *mut CartelSimulation, sweeps: u64) -> CartelStatus {
    guard(|| {
        deref_mut(sim, "sim")?.inner.run_sweeps(sweeps);
        Ok(())
    })
}

/// Current population mean of `w`.
///
/// # Safety
/// `sim` must be a live handle; `out` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn cartel_simulation_mean_w(sim: *const CartelSimulation, out: *mut f64) -> CartelStatus {
    guard(|| {
        let sim = deref(sim, "sim")?;
        *deref_mut(out, "out")? = sim.inner.population().mean_w();
        Ok(())
    })
}

/// Number of sweeps completed so far.
///
/// # Safety
/// `sim` must be a live handle; `out` must point to a writable integer.
#[no_mangle]
pub unsafe extern "C" fn cartel_simulation_sweeps_done(sim: *const CartelSimulation, out: *mut u64) -> CartelStatus {
    guard(|| {
        let sim = deref(sim, "sim")?;
        *deref_mut(out, "out")? = sim.inner.sweeps_done();
        Ok(())
    })
}

/// Copies the N values for money into `buf` (`len` must be at least N).
///
/// # Safety
/// `sim` must be a live handle; `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cartel_simulation_copy_w(sim: *const CartelSimulation, buf: *mut f64, len: usize) -> CartelStatus {
    guard(|| {
        let w = deref(sim, "sim")?.inner.population().w();
        copy_out(w, buf, len)
    })
}

/// Copies the N in-degrees into `buf` (`len` must be at least N).
///
/// # Safety
/// `sim` must be a live handle; `buf` must point to `len` writable integers.
#[no_mangle]
pub unsafe extern "C" fn cartel_simulation_copy_in_degree(sim: *const CartelSimulation, buf: *mut u32, len: usize) -> CartelStatus {
    guard(|| {
        let d = deref(sim, "sim")?.inner.population().in_degree();
        copy_out(d, buf, len)
    })
}

unsafe fn copy_out<T: Copy>(src: &[T], buf: *mut T, len: usize) -> Result<(), CartelStatus> {
    if buf.is_null() {
        return Err(null("buf"));
    }
    if len < src.len() {
        set_error(&format!("buffer holds {len} elements, {} needed", src.len()));
        return Err(CartelStatus::BufferTooSmall);
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

/// Critical update rate for mean degree `k`, to within `tol`.
///
/// # Safety
/// `a_c` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn cartel_critical_a(k: u32, tol: f64, a_c: *mut f64) -> CartelStatus {
    guard(|| {
        let out = deref_mut(a_c, "a_c")?;
        if !(tol > 0.0) {
            return Err(fail(Error::InvalidParam {
                field: "tol",
                reason: "must be positive".into(),
            }));
        }
        *out = cartel::stability::find_critical_a(k, tol).map_err(fail)?.a_c;
        Ok(())
    })
}

/// Creates a master-equation state on a `(k_max + 1) × n_w` grid, starting
/// from the uniform-`w`, Poisson(K) state. `k_max = 0` selects the default.
///
/// # Safety
/// `out` must point to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn cartel_master_new(k: u32, k_max: usize, n_w: usize, out: *mut *mut CartelMaster) -> CartelStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        *out = ptr::null_mut();
        let k_max = if k_max == 0 { master_eq::default_k_max(k.max(1)) } else { k_max };
        let eq = MasterEquation::new(k, k_max, n_w).map_err(fail)?;
        let grid = DistributionGrid::uniform_poisson(k, k_max, n_w).map_err(fail)?;
        *out = Box::into_raw(Box::new(CartelMaster { eq, grid, k, t: 0.0 }));
        Ok(())
    })
}

/// Releases a master-equation state. Null is ignored.
///
/// # Safety
/// `m` must be null or a handle from `cartel_master_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cartel_master_free(m: *mut CartelMaster) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Resets the state to all mass at `w = 1` except `eps` in column `col`, and
/// the clock to zero.
///
/// # Safety
/// `m` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cartel_master_set_perturbed(m: *mut CartelMaster, col: usize, eps: f64) -> CartelStatus {
    guard(|| {
        let m = deref_mut(m, "m")?;
        m.grid = DistributionGrid::perturbed_top(m.k, m.grid.k_max(), m.grid.n_w(), col, eps).map_err(fail)?;
        m.t = 0.0;
        Ok(())
    })
}

/// Integrates the held state forward by `duration` sweeps with step `dt` and
/// writes the final `<w>`.
///
/// # Safety
/// `m` must be a live handle; `mean_w` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn cartel_master_integrate(m: *mut CartelMaster, a: f64, dt: f64, duration: f64, mean_w: *mut f64) -> CartelStatus {
    guard(|| {
        let m = deref_mut(m, "m")?;
        let out = deref_mut(mean_w, "mean_w")?;
        let opts = IntegrateOptions {
            a,
            dt,
            t_end: duration,
            sample_every: duration.max(dt),
            ..Default::default()
        };
        let (grid, _) = master_eq::integrate(&m.eq, &m.grid, &opts).map_err(fail)?;
        m.grid = grid;
        m.t += duration;
        *out = master_eq::mean_w(&m.grid);
        Ok(())
    })
}

/// Elapsed integration time since creation or the last reset.
///
/// # Safety
/// `m` must be a live handle; `out` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn cartel_master_time(m: *const CartelMaster, out: *mut f64) -> CartelStatus {
    guard(|| {
        let m = deref(m, "m")?;
        *deref_mut(out, "out")? = m.t;
        Ok(())
    })
}

/// Copies `P(k, w)` row-major in `k` into `buf`, which must hold
/// `(k_max + 1) · n_w` doubles.
///
/// # Safety
/// `m` must be a live handle; `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cartel_master_copy_grid(m: *const CartelMaster, buf: *mut f64, len: usize) -> CartelStatus {
    guard(|| copy_out(deref(m, "m")?.grid.values(), buf, len))
}

/// Grid shape: `k_max` and `n_w`.
///
/// # Safety
/// `m` must be a live handle; `k_max` and `n_w` must point to writable integers.
#[no_mangle]
pub unsafe extern "C" fn cartel_master_shape(m: *const CartelMaster, k_max: *mut usize, n_w: *mut usize) -> CartelStatus {
    guard(|| {
        let m = deref(m, "m")?;
        *deref_mut(k_max, "k_max")? = m.grid.k_max();
        *deref_mut(n_w, "n_w")? = m.grid.n_w();
        Ok(())
    })
}
