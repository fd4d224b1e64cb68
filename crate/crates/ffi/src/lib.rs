//! C ABI over `ddpg_racer`.
//!
//! Objects are opaque heap handles created by `dr_*_new`/`dr_*_load`
//! functions and released with the matching `dr_*_free`. Every fallible
//! call returns a [`DrStatus`]; on failure [`dr_last_error`] describes the
//! most recent error on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use ddpg_racer::ddpg::{ActionVector, DdpgAgent, ObservationVector, ACTION_DIM, OBS_DIM};
use ddpg_racer::harness::{train, Checkpoint, TrainConfig, Trainer};
use ddpg_racer::sim::{
    compute_reward, observe, step, CarState, RewardWeights, SimConfig, TerminationReason,
    TrackDefinition,
};
use ddpg_racer::Error;

/// Length of an observation array.
pub const DR_OBS_DIM: usize = 29;
/// Length of an action array: acceleration, brake, steering.
pub const DR_ACTION_DIM: usize = 3;

const _: () = assert!(DR_OBS_DIM == OBS_DIM && DR_ACTION_DIM == ACTION_DIM);

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DrStatus {
    Ok = 0,
    /// Invalid argument or call sequence.
    Usage = 1,
    /// Invalid configuration, track or architecture.
    Config = 2,
    /// Non-finite values during training.
    Training = 3,
    /// Undecodable checkpoint or data file.
    Format = 4,
    Io = 5,
    /// A required pointer argument was null.
    NullPointer = 6,
    /// The library panicked; the handle involved should be freed.
    Panic = 7,
}

/// Why an episode ended, or `Running`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DrTermination {
    Running = 0,
    OutOfTrack = 1,
    WrongWay = 2,
    StepCap = 3,
}

impl From<TerminationReason> for DrTermination {
    fn from(r: TerminationReason) -> Self {
        match r {
            TerminationReason::Running => DrTermination::Running,
            TerminationReason::OutOfTrack => DrTermination::OutOfTrack,
            TerminationReason::WrongWay => DrTermination::WrongWay,
            TerminationReason::StepCap => DrTermination::StepCap,
        }
    }
}

/// Outcome of one simulator step.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DrStepResult {
    pub observation: [f64; DR_OBS_DIM],
    pub reward: f64,
    /// True for every termination reason, including the step cap.
    pub done: bool,
    pub termination: DrTermination,
}

/// A closed track.
pub struct DrTrack(TrackDefinition);

/// A car on a track with its simulator settings.
pub struct DrEnv {
    track: TrackDefinition,
    sim: SimConfig,
    state: CarState,
}

/// A trained actor loaded from a checkpoint.
pub struct DrPolicy(DdpgAgent);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(e: &Error) -> DrStatus {
    match e {
        Error::Usage(_) => DrStatus::Usage,
        Error::Config(_) => DrStatus::Config,
        Error::Training { .. } => DrStatus::Training,
        Error::Format { .. } => DrStatus::Format,
        Error::Io(_) => DrStatus::Io,
    }
}

struct Fail(DrStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(DrStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> DrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            DrStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            DrStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(DrStatus::Usage, format!("{what} is not valid UTF-8")))
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn get_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn obs_in(p: *const f64) -> Result<ObservationVector, Fail> {
    if p.is_null() {
        return Err(null("observation"));
    }
    let obs = ObservationVector::from_slice(std::slice::from_raw_parts(p, OBS_DIM))?;
    if !obs.is_valid() {
        return Err(Fail(DrStatus::Usage, "observation is outside its valid ranges".into()));
    }
    Ok(obs)
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn put_slice(out: *mut f64, values: &[f64], what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    Ok(())
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn dr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Loads a built-in track by name or a track file by path.
///
/// # Safety
/// `name_or_path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dr_track_load(name_or_path: *const c_char, out: *mut *mut DrTrack) -> DrStatus {
    guard(|| {
        let t = TrackDefinition::resolve(text(name_or_path, "name_or_path")?)?;
        put(out, Box::into_raw(Box::new(DrTrack(t))), "out")
    })
}

/// Centerline length in metres, or NaN for a null handle.
///
/// # Safety
/// `track` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dr_track_length(track: *const DrTrack) -> f64 {
    track.as_ref().map_or(f64::NAN, |t| t.0.length())
}

/// Half the track width in metres, or NaN for a null handle.
///
/// # Safety
/// `track` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dr_track_half_width(track: *const DrTrack) -> f64 {
    track.as_ref().map_or(f64::NAN, |t| t.0.half_width())
}

/// # Safety
/// `track` must be null or a handle from [`dr_track_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dr_track_free(track: *mut DrTrack) {
    if !track.is_null() {
        drop(Box::from_raw(track));
    }
}

/// New environment on a copy of `track` with default dynamics and reward
/// weights, the car reset to the start line. `max_steps` of 0 keeps the
/// default cap.
///
/// # Safety
/// `track` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dr_env_new(track: *const DrTrack, max_steps: u64, out: *mut *mut DrEnv) -> DrStatus {
    guard(|| {
        let track = get(track, "track")?.0.clone();
        let mut sim = SimConfig::default();
        if max_steps > 0 {
            sim.max_steps = max_steps;
        }
        let state = CarState::reset(&track);
        put(out, Box::into_raw(Box::new(DrEnv { track, sim, state })), "out")
    })
}

/// Sets the reward weights used by subsequent steps.
///
/// # Safety
/// `env` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn dr_env_set_reward(env: *mut DrEnv, alpha: f64, beta: f64, gamma_w: f64) -> DrStatus {
    guard(|| {
        let env = get_mut(env, "env")?;
        if ![alpha, beta, gamma_w].iter().all(|w| w.is_finite() && *w >= 0.0) {
            return Err(Fail(DrStatus::Config, "reward weights must be finite and non-negative".into()));
        }
        env.sim.reward = RewardWeights { alpha, beta, gamma_w };
        Ok(())
    })
}

/// Puts the car back on the start line and writes the first observation.
///
/// # Safety
/// `env` must be a live handle; `observation` must hold [`DR_OBS_DIM`] values.
#[no_mangle]
pub unsafe extern "C" fn dr_env_reset(env: *mut DrEnv, observation: *mut f64) -> DrStatus {
    guard(|| {
        let env = get_mut(env, "env")?;
        env.state = CarState::reset(&env.track);
        put_slice(observation, observe(&env.state, &env.track, &env.sim).as_slice(), "observation")
    })
}

/// Writes the current observation.
///
/// # Safety
/// `env` must be a live handle; `observation` must hold [`DR_OBS_DIM`] values.
#[no_mangle]
pub unsafe extern "C" fn dr_env_observe(env: *const DrEnv, observation: *mut f64) -> DrStatus {
    guard(|| {
        let env = get(env, "env")?;
        put_slice(observation, observe(&env.state, &env.track, &env.sim).as_slice(), "observation")
    })
}

/// Advances one control period. Actions outside their ranges are clamped;
/// non-finite actions are rejected.
///
/// # Safety
/// `env` must be a live handle, `action` must hold [`DR_ACTION_DIM`] values
/// and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dr_env_step(env: *mut DrEnv, action: *const f64, out: *mut DrStepResult) -> DrStatus {
    guard(|| {
        let env = get_mut(env, "env")?;
        if action.is_null() {
            return Err(null("action"));
        }
        let a = std::slice::from_raw_parts(action, ACTION_DIM);
        if !a.iter().all(|v| v.is_finite()) {
            return Err(Fail(DrStatus::Usage, "action is not finite".into()));
        }
        let action = ActionVector::new(a[0], a[1], a[2]).clamped();
        let (next, r) = step(&env.state, &action, &env.track, &env.sim);
        env.state = next;
        put(
            out,
            DrStepResult {
                observation: r.observation.0,
                reward: r.reward,
                done: r.terminal,
                termination: r.termination_reason.into(),
            },
            "out",
        )
    })
}

/// # Safety
/// `env` must be null or a handle from [`dr_env_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dr_env_free(env: *mut DrEnv) {
    if !env.is_null() {
        drop(Box::from_raw(env));
    }
}

/// Step reward for an observation under the given weights.
///
/// # Safety
/// `observation` must hold [`DR_OBS_DIM`] values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dr_reward(
    observation: *const f64,
    alpha: f64,
    beta: f64,
    gamma_w: f64,
    out: *mut f64,
) -> DrStatus {
    guard(|| {
        let obs = obs_in(observation)?;
        put(out, compute_reward(&obs, &RewardWeights { alpha, beta, gamma_w }), "out")
    })
}

/// Loads the agent stored in a checkpoint file.
///
/// # Safety
/// `checkpoint_path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dr_policy_load(checkpoint_path: *const c_char, out: *mut *mut DrPolicy) -> DrStatus {
    guard(|| {
        let path = PathBuf::from(text(checkpoint_path, "checkpoint_path")?);
        let ck = Checkpoint::load(&path)?;
        put(out, Box::into_raw(Box::new(DrPolicy(ck.agent))), "out")
    })
}

/// Greedy action for an observation.
///
/// # Safety
/// `policy` must be a live handle, `observation` must hold [`DR_OBS_DIM`]
/// values and `action` must hold [`DR_ACTION_DIM`] values.
#[no_mangle]
pub unsafe extern "C" fn dr_policy_act(policy: *const DrPolicy, observation: *const f64, action: *mut f64) -> DrStatus {
    guard(|| {
        let p = get(policy, "policy")?;
        let a = p.0.act(&obs_in(observation)?)?;
        put_slice(action, &a.to_array(), "action")
    })
}

/// Critic estimate for an observation and action.
///
/// # Safety
/// `policy` must be a live handle, `observation` must hold [`DR_OBS_DIM`]
/// values, `action` [`DR_ACTION_DIM`] values, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dr_policy_q(
    policy: *const DrPolicy,
    observation: *const f64,
    action: *const f64,
    out: *mut f64,
) -> DrStatus {
    guard(|| {
        let p = get(policy, "policy")?;
        let obs = obs_in(observation)?;
        if action.is_null() {
            return Err(null("action"));
        }
        let a = std::slice::from_raw_parts(action, ACTION_DIM);
        let q = p.0.critic_forward(&obs, &ActionVector::new(a[0], a[1], a[2]))?;
        put(out, q, "out")
    })
}

/// # Safety
/// `policy` must be null or a handle from [`dr_policy_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dr_policy_free(policy: *mut DrPolicy) {
    if !policy.is_null() {
        drop(Box::from_raw(policy));
    }
}

/// Runs training from a config file, writing metrics and checkpoints.
/// `output_dir` and `seed` may be null to keep the config values.
///
/// # Safety
/// `config_path` must be a NUL-terminated string; `output_dir` must be null
/// or NUL-terminated; `seed` must be null or readable.
#[no_mangle]
pub unsafe extern "C" fn dr_train(config_path: *const c_char, output_dir: *const c_char, seed: *const u64) -> DrStatus {
    guard(|| {
        let mut cfg = TrainConfig::load(&PathBuf::from(text(config_path, "config_path")?))?;
        if !output_dir.is_null() {
            cfg.output_dir = PathBuf::from(text(output_dir, "output_dir")?);
        }
        if let Some(s) = seed.as_ref() {
            cfg.seed = *s;
        }
        train(Trainer::new(cfg)?, |_| {})?;
        Ok(())
    })
}
