//! C ABI over the `mfcg` crate.
//!
//! Every fallible function returns an [`MfcgStatus`]. On failure the message
//! is kept per thread and can be read with [`mfcg_last_error`]. Handles are
//! opaque; free them with the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;
use std::sync::Arc;

use mfcg::env::{rng_stream, BankEnv};
use mfcg::harness::{self, ExperimentConfig, ExperimentResult, Preset};
use mfcg::learner::{greedy_policy, Trainer};
use mfcg::{AnalyticSolution, Error, ModelParams};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MfcgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidConfig = 2,
    SingularModel = 3,
    Parse = 4,
    Io = 5,
    RunFailed = 6,
    /// The caller's buffer length differs from the required length.
    BadLength = 7,
    InvalidUtf8 = 8,
    /// Results were requested before a run completed.
    NotReady = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MfcgModelParams {
    pub kappa: f64,
    pub sigma: f64,
    pub beta: f64,
    pub c1: f64,
    pub c2: f64,
    pub ct1: f64,
    pub ct2: f64,
    pub ct3: f64,
    pub ct: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MfcgSolution {
    pub gamma2: f64,
    pub gamma1: f64,
    pub gamma0: f64,
    pub mu_bar: f64,
    pub var: f64,
}

impl From<MfcgModelParams> for ModelParams {
    fn from(p: MfcgModelParams) -> Self {
        ModelParams {
            kappa: p.kappa,
            sigma: p.sigma,
            beta: p.beta,
            c1: p.c1,
            c2: p.c2,
            ct1: p.ct1,
            ct2: p.ct2,
            ct3: p.ct3,
            ct: p.ct,
        }
    }
}

impl From<ModelParams> for MfcgModelParams {
    fn from(p: ModelParams) -> Self {
        MfcgModelParams {
            kappa: p.kappa,
            sigma: p.sigma,
            beta: p.beta,
            c1: p.c1,
            c2: p.c2,
            ct1: p.ct1,
            ct2: p.ct2,
            ct3: p.ct3,
            ct: p.ct,
        }
    }
}

impl From<AnalyticSolution> for MfcgSolution {
    fn from(s: AnalyticSolution) -> Self {
        MfcgSolution {
            gamma2: s.gamma2,
            gamma1: s.gamma1,
            gamma0: s.gamma0,
            mu_bar: s.mu_bar,
            var: s.var,
        }
    }
}

impl From<MfcgSolution> for AnalyticSolution {
    fn from(s: MfcgSolution) -> Self {
        AnalyticSolution {
            gamma2: s.gamma2,
            gamma1: s.gamma1,
            gamma0: s.gamma0,
            mu_bar: s.mu_bar,
            var: s.var,
        }
    }
}

/// Experiment configuration plus the result of its last run.
pub struct MfcgExperiment {
    config: ExperimentConfig,
    result: Option<ExperimentResult>,
}

/// A single training run advanced episode by episode.
pub struct MfcgTrainer {
    trainer: Trainer<BankEnv>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> MfcgStatus {
    match err {
        Error::Config { .. } => MfcgStatus::InvalidConfig,
        Error::SingularModel(_) => MfcgStatus::SingularModel,
        Error::Parse { .. } => MfcgStatus::Parse,
        Error::Io { .. } | Error::Csv(_) | Error::Json(_) => MfcgStatus::Io,
        Error::Run { .. } => MfcgStatus::RunFailed,
    }
}

struct Failure {
    status: MfcgStatus,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        fail(status_of(&e), e.to_string())
    }
}

fn fail(status: MfcgStatus, msg: impl Into<String>) -> Failure {
    Failure {
        status,
        msg: msg.into(),
    }
}

fn guard<F>(f: F) -> MfcgStatus
where
    F: FnOnce() -> Result<(), Failure>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MfcgStatus::Ok,
        Ok(Err(f)) => {
            set_error(f.msg);
            f.status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            MfcgStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| fail(MfcgStatus::NullPointer, format!("{what} is null")))
}

unsafe fn borrow_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| fail(MfcgStatus::NullPointer, format!("{what} is null")))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(MfcgStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(MfcgStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn out_slice<'a>(p: *mut f64, len: usize, need: usize, what: &str) -> Result<&'a mut [f64], Failure> {
    if p.is_null() {
        return Err(fail(MfcgStatus::NullPointer, format!("{what} is null")));
    }
    if len != need {
        return Err(fail(MfcgStatus::BadLength, format!("{what} has length {len}, expected {need}")));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mfcg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Writes the baseline model constants to `out`.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mfcg_model_params_baseline(out: *mut MfcgModelParams) -> MfcgStatus {
    guard(|| {
        *borrow_mut(out, "out")? = ModelParams::baseline().into();
        Ok(())
    })
}

/// Closed-form stationary equilibrium of `params`.
///
/// # Safety
/// `params` must be null or valid for reads, `out` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mfcg_solve(params: *const MfcgModelParams, out: *mut MfcgSolution) -> MfcgStatus {
    guard(|| {
        let p: ModelParams = (*borrow(params, "params")?).into();
        let out = borrow_mut(out, "out")?;
        *out = mfcg::solve_asymptotic(&p)?.into();
        Ok(())
    })
}

/// `α̂(x) = −2Γ₂x − Γ₁`; NaN when `sol` is null.
///
/// # Safety
/// `sol` must be null or valid for reads.
#[no_mangle]
pub unsafe extern "C" fn mfcg_optimal_control(sol: *const MfcgSolution, x: f64) -> f64 {
    match sol.as_ref() {
        Some(s) => AnalyticSolution::from(*s).optimal_control(x),
        None => f64::NAN,
    }
}

fn new_experiment(config: ExperimentConfig, out: *mut *mut MfcgExperiment) -> Result<(), Failure> {
    let slot = unsafe { borrow_mut(out, "out")? };
    *slot = Box::into_raw(Box::new(MfcgExperiment { config, result: None }));
    Ok(())
}

/// Creates an experiment from a preset name such as `"mfcg_baseline"`.
///
/// # Safety
/// `name` must be null or a NUL-terminated string; `out` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mfcg_experiment_from_preset(
    name: *const c_char,
    out: *mut *mut MfcgExperiment,
) -> MfcgStatus {
    guard(|| {
        let preset: Preset = str_arg(name, "name")?.parse()?;
        new_experiment(preset.config(), out)
    })
}

/// Creates an experiment from a TOML config file.
///
/// # Safety
/// `path` must be null or a NUL-terminated string; `out` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mfcg_experiment_from_file(
    path: *const c_char,
    out: *mut *mut MfcgExperiment,
) -> MfcgStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        new_experiment(harness::load_config(path, None)?, out)
    })
}

/// # Safety
/// `exp` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn mfcg_experiment_free(exp: *mut MfcgExperiment) {
    if !exp.is_null() {
        drop(Box::from_raw(exp));
    }
}

unsafe fn edit<F>(exp: *mut MfcgExperiment, f: F) -> MfcgStatus
where
    F: FnOnce(&mut ExperimentConfig),
{
    guard(|| {
        let e = borrow_mut(exp, "experiment")?;
        let mut cfg = e.config.clone();
        f(&mut cfg);
        cfg.validate()?;
        e.config = cfg;
        e.result = None;
        Ok(())
    })
}

/// # Safety
/// `exp` must be null or a live experiment handle.
#[no_mangle]
pub unsafe extern "C" fn mfcg_experiment_set_runs(exp: *mut MfcgExperiment, runs: usize) -> MfcgStatus {
    edit(exp, |c| c.runs = runs)
}

/// Sets the episode count of the learner and of the exploration schedule.
///
/// # Safety
/// `exp` must be null or a live experiment handle.
#[no_mangle]
pub unsafe extern "C" fn mfcg_experiment_set_episodes(exp: *mut MfcgExperiment, episodes: u64) -> MfcgStatus {
    edit(exp, |c| c.set_episodes(episodes))
}

/// # Safety
/// `exp` must be null or a live experiment handle.
#[no_mangle]
pub unsafe extern "C" fn mfcg_experiment_set_seed(exp: *mut MfcgExperiment, seed: u64) -> MfcgStatus {
    edit(exp, |c| c.base_seed = seed)
}

/// # Safety
/// `exp` must be null or a live experiment handle.
#[no_mangle]
pub unsafe extern "C" fn mfcg_experiment_set_workers(exp: *mut MfcgExperiment, workers: usize) -> MfcgStatus {
    edit(exp, |c| c.workers = workers)
}

/// # Safety
/// `exp` must be null or a live experiment handle.
#[no_mangle]
pub unsafe extern "C" fn mfcg_experiment_set_model(
    exp: *mut MfcgExperiment,
    params: *const MfcgModelParams,
) -> MfcgStatus {
    let Some(p) = params.as_ref() else {
        set_error("params is null".into());
        return MfcgStatus::NullPointer;
    };
    let p = *p;
    edit(exp, move |c| c.model = p.into())
}

/// # Safety
/// `exp` must be null or a live experiment handle; `dir` null or a
/// NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mfcg_experiment_set_output_dir(exp: *mut MfcgExperiment, dir: *const c_char) -> MfcgStatus {
    let dir = match guard_str(dir, "dir") {
        Ok(d) => d,
        Err(s) => return s,
    };
    edit(exp, move |c| c.output_dir = PathBuf::from(dir))
}

unsafe fn guard_str(p: *const c_char, what: &str) -> Result<String, MfcgStatus> {
    match str_arg(p, what) {
        Ok(s) => Ok(s.to_string()),
        Err(f) => {
            set_error(f.msg);
            Err(f.status)
        }
    }
}

/// Runs every training. With `write_files` nonzero the standard output files
/// go to the configured output directory.
///
/// # Safety
/// `exp` must be null or a live experiment handle.
#[no_mangle]
pub unsafe extern "C" fn mfcg_experiment_run(exp: *mut MfcgExperiment, write_files: i32) -> MfcgStatus {
    guard(|| {
        let e = borrow_mut(exp, "experiment")?;
        e.result = None;
        let result = if write_files != 0 {
            harness::run_experiment(&e.config)?
        } else {
            harness::execute(&e.config)?
        };
        e.result = Some(result);
        Ok(())
    })
}

/// Number of state grid points, or 0 for a null or invalid handle.
///
/// # Safety
/// `exp` must be null or a live experiment handle.
#[no_mangle]
pub unsafe extern "C" fn mfcg_experiment_n_states(exp: *const MfcgExperiment) -> usize {
    exp.as_ref()
        .and_then(|e| e.config.state_grid.build().ok())
        .map_or(0, |g| g.len())
}

unsafe fn finished<'a>(exp: *const MfcgExperiment) -> Result<&'a ExperimentResult, Failure> {
    borrow(exp, "experiment")?
        .result
        .as_ref()
        .ok_or_else(|| fail(MfcgStatus::NotReady, "experiment has not been run"))
}

/// Analytic solution of the configured model.
///
/// # Safety
/// `exp` must be null or a live experiment handle; `out` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mfcg_experiment_solution(exp: *const MfcgExperiment, out: *mut MfcgSolution) -> MfcgStatus {
    guard(|| {
        let e = borrow(exp, "experiment")?;
        let out = borrow_mut(out, "out")?;
        *out = mfcg::solve_asymptotic(&e.config.model)?.into();
        Ok(())
    })
}

/// Learned policy averaged over the trailing window and over runs.
///
/// # Safety
/// `exp` must be null or a live experiment handle; `out` null or valid for
/// `len` writes.
#[no_mangle]
pub unsafe extern "C" fn mfcg_experiment_policy(exp: *const MfcgExperiment, out: *mut f64, len: usize) -> MfcgStatus {
    guard(|| {
        let r = finished(exp)?;
        let policy = r.policy();
        out_slice(out, len, policy.len(), "out")?.copy_from_slice(&policy);
        Ok(())
    })
}

/// Learned global and local laws averaged over the trailing window and over
/// runs. Either output may be null to skip it.
///
/// # Safety
/// `exp` must be null or a live experiment handle; non-null outputs must be
/// valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn mfcg_experiment_distribution(
    exp: *const MfcgExperiment,
    mu_out: *mut f64,
    mut_out: *mut f64,
    len: usize,
) -> MfcgStatus {
    guard(|| {
        let r = finished(exp)?;
        let (mu, mut_) = (r.mu(), r.mut_());
        if !mu_out.is_null() {
            out_slice(mu_out, len, mu.len(), "mu_out")?.copy_from_slice(&mu);
        }
        if !mut_out.is_null() {
            out_slice(mut_out, len, mut_.len(), "mut_out")?.copy_from_slice(&mut_);
        }
        Ok(())
    })
}

/// Final-episode cross-run mean of `MSE_α̂`.
///
/// # Safety
/// `exp` must be null or a live experiment handle; `out` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mfcg_experiment_final_mse(exp: *const MfcgExperiment, out: *mut f64) -> MfcgStatus {
    guard(|| {
        let r = finished(exp)?;
        let out = borrow_mut(out, "out")?;
        *out = r.aggregate().last().map_or(f64::NAN, |row| row.mse_control());
        Ok(())
    })
}

/// Single-run trainer for run index `run` of the experiment's config. The
/// experiment handle may be freed afterwards.
///
/// # Safety
/// `exp` must be null or a live experiment handle; `out` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mfcg_trainer_new(
    exp: *const MfcgExperiment,
    run: u64,
    out: *mut *mut MfcgTrainer,
) -> MfcgStatus {
    guard(|| {
        let cfg = &borrow(exp, "experiment")?.config;
        let slot = borrow_mut(out, "out")?;
        cfg.validate()?;
        let states = Arc::new(cfg.state_grid.build()?);
        let actions = Arc::new(cfg.action_grid.build()?);
        let env = BankEnv::new(
            cfg.model,
            states.clone(),
            cfg.learn.dt,
            cfg.learn.cost_scale(),
            cfg.drift_mean,
            rng_stream(cfg.base_seed, 2 * run),
        );
        let gamma = cfg.learn.discount_mode.factor(cfg.model.beta, cfg.learn.dt);
        let trainer = Trainer::new(
            env,
            states,
            actions,
            cfg.learn,
            cfg.exploration,
            gamma,
            rng_stream(cfg.base_seed, 2 * run + 1),
        )?;
        *slot = Box::into_raw(Box::new(MfcgTrainer { trainer }));
        Ok(())
    })
}

/// # Safety
/// `t` must be null or a trainer handle that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn mfcg_trainer_free(t: *mut MfcgTrainer) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Runs up to `n` more episodes, stopping early once training is finished.
/// `completed` (optional) receives the number actually run.
///
/// # Safety
/// `t` must be null or a live trainer handle; `completed` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn mfcg_trainer_run_episodes(t: *mut MfcgTrainer, n: u64, completed: *mut u64) -> MfcgStatus {
    guard(|| {
        let t = borrow_mut(t, "trainer")?;
        let mut done = 0;
        while done < n && !t.trainer.finished() {
            t.trainer.run_episode()?;
            done += 1;
        }
        if let Some(c) = completed.as_mut() {
            *c = done;
        }
        Ok(())
    })
}

/// Episodes completed so far; 0 for a null handle.
///
/// # Safety
/// `t` must be null or a live trainer handle.
#[no_mangle]
pub unsafe extern "C" fn mfcg_trainer_episode(t: *const MfcgTrainer) -> u64 {
    t.as_ref().map_or(0, |t| t.trainer.state().episode)
}

/// Current greedy policy, one action per state.
///
/// # Safety
/// `t` must be null or a live trainer handle; `out` null or valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn mfcg_trainer_policy(t: *const MfcgTrainer, out: *mut f64, len: usize) -> MfcgStatus {
    guard(|| {
        let t = borrow(t, "trainer")?;
        let policy = greedy_policy(&t.trainer.state().q, t.trainer.actions());
        out_slice(out, len, policy.len(), "out")?.copy_from_slice(&policy);
        Ok(())
    })
}

/// Terminal-step global and local estimates. Either output may be null.
///
/// # Safety
/// `t` must be null or a live trainer handle; non-null outputs must be valid
/// for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn mfcg_trainer_distribution(
    t: *const MfcgTrainer,
    mu_out: *mut f64,
    mut_out: *mut f64,
    len: usize,
) -> MfcgStatus {
    guard(|| {
        let st = borrow(t, "trainer")?.trainer.state();
        if !mu_out.is_null() {
            let m = st.terminal_mu().mass();
            out_slice(mu_out, len, m.len(), "mu_out")?.copy_from_slice(m);
        }
        if !mut_out.is_null() {
            let m = st.terminal_mut().mass();
            out_slice(mut_out, len, m.len(), "mut_out")?.copy_from_slice(m);
        }
        Ok(())
    })
}
