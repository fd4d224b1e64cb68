#ifndef DDPG_RACER_H
#define DDPG_RACER_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Length of an observation array.
 */
#define DR_OBS_DIM 29

/**
 * Length of an action array: acceleration, brake, steering.
 */
#define DR_ACTION_DIM 3

/**
 * Result of every fallible call.
 */
typedef enum DrStatus {
  DR_STATUS_OK = 0,
  /**
   * Invalid argument or call sequence.
   */
  DR_STATUS_USAGE = 1,
  /**
   * Invalid configuration, track or architecture.
   */
  DR_STATUS_CONFIG = 2,
  /**
   * Non-finite values during training.
   */
  DR_STATUS_TRAINING = 3,
  /**
   * Undecodable checkpoint or data file.
   */
  DR_STATUS_FORMAT = 4,
  DR_STATUS_IO = 5,
  /**
   * A required pointer argument was null.
   */
  DR_STATUS_NULL_POINTER = 6,
  /**
   * The library panicked; the handle involved should be freed.
   */
  DR_STATUS_PANIC = 7,
} DrStatus;

/**
 * Why an episode ended, or `Running`.
 */
typedef enum DrTermination {
  DR_TERMINATION_RUNNING = 0,
  DR_TERMINATION_OUT_OF_TRACK = 1,
  DR_TERMINATION_WRONG_WAY = 2,
  DR_TERMINATION_STEP_CAP = 3,
} DrTermination;

/**
 * A car on a track with its simulator settings.
 */
typedef struct DrEnv DrEnv;

/**
 * A trained actor loaded from a checkpoint.
 */
typedef struct DrPolicy DrPolicy;

/**
 * A closed track.
 */
typedef struct DrTrack DrTrack;

/**
 * Outcome of one simulator step.
 */
typedef struct DrStepResult {
  double observation[DR_OBS_DIM];
  double reward;
  /**
   * True for every termination reason, including the step cap.
   */
  bool done;
  enum DrTermination termination;
} DrStepResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *dr_last_error(void);

/**
 * Loads a built-in track by name or a track file by path.
 *
 * # Safety
 * `name_or_path` must be a NUL-terminated string and `out` writable.
 */
enum DrStatus dr_track_load(const char *name_or_path, struct DrTrack **out);

/**
 * Centerline length in metres, or NaN for a null handle.
 *
 * # Safety
 * `track` must be null or a live handle.
 */
double dr_track_length(const struct DrTrack *track);

/**
 * Half the track width in metres, or NaN for a null handle.
 *
 * # Safety
 * `track` must be null or a live handle.
 */
double dr_track_half_width(const struct DrTrack *track);

/**
 * # Safety
 * `track` must be null or a handle from [`dr_track_load`] not yet freed.
 */
void dr_track_free(struct DrTrack *track);

/**
 * New environment on a copy of `track` with default dynamics and reward
 * weights, the car reset to the start line. `max_steps` of 0 keeps the
 * default cap.
 *
 * # Safety
 * `track` must be a live handle and `out` writable.
 */
enum DrStatus dr_env_new(const struct DrTrack *track, uint64_t max_steps, struct DrEnv **out);

/**
 * Sets the reward weights used by subsequent steps.
 *
 * # Safety
 * `env` must be a live handle.
 */
enum DrStatus dr_env_set_reward(struct DrEnv *env, double alpha, double beta, double gamma_w);

/**
 * Puts the car back on the start line and writes the first observation.
 *
 * # Safety
 * `env` must be a live handle; `observation` must hold [`DR_OBS_DIM`] values.
 */
enum DrStatus dr_env_reset(struct DrEnv *env, double *observation);

/**
 * Writes the current observation.
 *
 * # Safety
 * `env` must be a live handle; `observation` must hold [`DR_OBS_DIM`] values.
 */
enum DrStatus dr_env_observe(const struct DrEnv *env, double *observation);

/**
 * Advances one control period. Actions outside their ranges are clamped;
 * non-finite actions are rejected.
 *
 * # Safety
 * `env` must be a live handle, `action` must hold [`DR_ACTION_DIM`] values
 * and `out` must be writable.
 */
enum DrStatus dr_env_step(struct DrEnv *env, const double *action, struct DrStepResult *out);

/**
 * # Safety
 * `env` must be null or a handle from [`dr_env_new`] not yet freed.
 */
void dr_env_free(struct DrEnv *env);

/**
 * Step reward for an observation under the given weights.
 *
 * # Safety
 * `observation` must hold [`DR_OBS_DIM`] values and `out` must be writable.
 */
enum DrStatus dr_reward(const double *observation,
                        double alpha,
                        double beta,
                        double gamma_w,
                        double *out);

/**
 * Loads the agent stored in a checkpoint file.
 *
 * # Safety
 * `checkpoint_path` must be a NUL-terminated string and `out` writable.
 */
enum DrStatus dr_policy_load(const char *checkpoint_path, struct DrPolicy **out);

/**
 * Greedy action for an observation.
 *
 * # Safety
 * `policy` must be a live handle, `observation` must hold [`DR_OBS_DIM`]
 * values and `action` must hold [`DR_ACTION_DIM`] values.
 */
enum DrStatus dr_policy_act(const struct DrPolicy *policy,
                            const double *observation,
                            double *action);

/**
 * Critic estimate for an observation and action.
 *
 * # Safety
 * `policy` must be a live handle, `observation` must hold [`DR_OBS_DIM`]
 * values, `action` [`DR_ACTION_DIM`] values, and `out` must be writable.
 */
enum DrStatus dr_policy_q(const struct DrPolicy *policy,
                          const double *observation,
                          const double *action,
                          double *out);

/**
 * # Safety
 * `policy` must be null or a handle from [`dr_policy_load`] not yet freed.
 */
void dr_policy_free(struct DrPolicy *policy);

/**
 * Runs training from a config file, writing metrics and checkpoints.
 * `output_dir` and `seed` may be null to keep the config values.
 *
 * # Safety
 * `config_path` must be a NUL-terminated string; `output_dir` must be null
 * or NUL-terminated; `seed` must be null or readable.
 */
enum DrStatus dr_train(const char *config_path, const char *output_dir, const uint64_t *seed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DDPG_RACER_H */
