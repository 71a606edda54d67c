/* C ABI for the munch grid-world engine. */

#ifndef MUNCH_H
#define MUNCH_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Step event bits for `munch_world_step`.
 */
#define MUNCH_EVENT_DOT (1 << 0)

#define MUNCH_EVENT_POWER_DOT (1 << 1)

#define MUNCH_EVENT_GHOST (1 << 2)

#define MUNCH_EVENT_LIFE_LOST (1 << 3)

#define MUNCH_EVENT_EXTRA_LIFE (1 << 4)

#define MUNCH_EVENT_LEVEL_CLEARED (1 << 5)

/**
 * Result of every fallible call.
 */
typedef enum MunchStatus {
  MUNCH_STATUS_OK = 0,
  MUNCH_STATUS_NULL_POINTER = -1,
  MUNCH_STATUS_INVALID_ARGUMENT = -2,
  MUNCH_STATUS_PARSE_ERROR = -3,
  /**
   * The world is terminal; reset before stepping again.
   */
  MUNCH_STATUS_TERMINAL = -4,
} MunchStatus;

/**
 * Opaque agent handle: a policy plus its module bookkeeping.
 */
typedef struct MunchAgent MunchAgent;

/**
 * Opaque maze handle.
 */
typedef struct MunchMaze MunchMaze;

/**
 * Opaque policy handle.
 */
typedef struct MunchPolicy MunchPolicy;

/**
 * Opaque world handle: one live game plus its seeded ghost stream.
 */
typedef struct MunchWorld MunchWorld;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *munch_version(void);

/**
 * Free a string returned by this library.
 *
 * # Safety
 * `s` must have been returned by a `munch_*` function and not yet freed.
 */
void munch_string_free(char *s);

/**
 * Parse a maze from its ASCII text form.
 *
 * # Safety
 * `text` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum MunchStatus munch_maze_parse(const char *text, struct MunchMaze **out);

/**
 * The maze bundled with the engine.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum MunchStatus munch_maze_canonical(struct MunchMaze **out);

/**
 * # Safety
 * `maze` must come from this library and not be freed twice.
 */
void munch_maze_free(struct MunchMaze *maze);

/**
 * # Safety
 * Valid `maze` and `out` pointers.
 */
enum MunchStatus munch_maze_max_score(const struct MunchMaze *maze, uint64_t *out);

/**
 * # Safety
 * Valid `maze`, `out_width`, `out_height` pointers.
 */
enum MunchStatus munch_maze_size(const struct MunchMaze *maze,
                                 uint16_t *out_width,
                                 uint16_t *out_height);

/**
 * Create a world on `maze`. `chase_prob` in [0,1]; `edible_steps` and
 * `speed_divisor` must be positive.
 *
 * # Safety
 * Valid `maze` and `out` pointers.
 */
enum MunchStatus munch_world_new(const struct MunchMaze *maze,
                                 double chase_prob,
                                 uint32_t edible_steps,
                                 uint32_t speed_divisor,
                                 uint64_t seed,
                                 struct MunchWorld **out);

/**
 * # Safety
 * `world` must come from this library and not be freed twice.
 */
void munch_world_free(struct MunchWorld *world);

/**
 * Restart the episode and reseed the ghost stream.
 *
 * # Safety
 * Valid `world` pointer.
 */
enum MunchStatus munch_world_reset(struct MunchWorld *world, uint64_t seed);

/**
 * Advance one step. Writes the points gained and an event bitmask
 * (`MUNCH_EVENT_*`). Returns `Terminal` when the episode is already over.
 *
 * # Safety
 * Valid `world` pointer; out-pointers may be null to skip them.
 */
enum MunchStatus munch_world_step(struct MunchWorld *world,
                                  uint8_t direction,
                                  uint32_t *out_reward,
                                  uint32_t *out_events);

/**
 * # Safety
 * Valid `world` and `out` pointers.
 */
enum MunchStatus munch_world_score(const struct MunchWorld *world, uint32_t *out);

/**
 * # Safety
 * Valid `world` and `out` pointers.
 */
enum MunchStatus munch_world_lives(const struct MunchWorld *world, uint8_t *out);

/**
 * # Safety
 * Valid `world` and `out` pointers.
 */
enum MunchStatus munch_world_is_terminal(const struct MunchWorld *world, bool *out);

/**
 * # Safety
 * Valid `world`, `out_x`, `out_y` pointers.
 */
enum MunchStatus munch_world_agent_pos(const struct MunchWorld *world,
                                       uint16_t *out_x,
                                       uint16_t *out_y);

/**
 * Legal moves as a bitmask: bit k set when wire direction k is open.
 *
 * # Safety
 * Valid `world` and `out` pointers.
 */
enum MunchStatus munch_world_legal_moves(const struct MunchWorld *world, uint8_t *out);

/**
 * The six observations in fixed order: NearestDot, NearestPowerDot,
 * NearestGhost, NearestEdGhost, GhostDensity, Constant.
 *
 * # Safety
 * Valid `world` pointer; `out` must have room for six doubles.
 */
enum MunchStatus munch_world_observe(const struct MunchWorld *world, double *out);

/**
 * Parse a policy from its text form.
 *
 * # Safety
 * `text` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum MunchStatus munch_policy_parse(const char *text, struct MunchPolicy **out);

/**
 * The bundled default policy.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum MunchStatus munch_policy_prewired(struct MunchPolicy **out);

/**
 * Serialize a policy; free the result with `munch_string_free`.
 *
 * # Safety
 * Valid `policy` and `out` pointers.
 */
enum MunchStatus munch_policy_to_text(const struct MunchPolicy *policy, char **out);

/**
 * # Safety
 * `policy` must come from this library and not be freed twice.
 */
void munch_policy_free(struct MunchPolicy *policy);

/**
 * Create an agent driving `policy`. The policy is copied in.
 *
 * # Safety
 * Valid `policy` and `out` pointers.
 */
enum MunchStatus munch_agent_new(const struct MunchPolicy *policy, struct MunchAgent **out);

/**
 * # Safety
 * `agent` must come from this library and not be freed twice.
 */
void munch_agent_free(struct MunchAgent *agent);

/**
 * Run one rule-engine decision against the world and write the wire
 * direction the acting module wants. Step the world with it afterwards.
 *
 * # Safety
 * Valid `agent`, `world`, `out_direction` pointers.
 */
enum MunchStatus munch_agent_act(struct MunchAgent *agent,
                                 const struct MunchWorld *world,
                                 uint8_t *out_direction);

/**
 * Current behavioral-state code as a value in 0..=63 (the six digits of
 * the macro code read as binary).
 *
 * # Safety
 * Valid `agent` and `out` pointers.
 */
enum MunchStatus munch_agent_macro_code(const struct MunchAgent *agent, uint8_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MUNCH_H */
