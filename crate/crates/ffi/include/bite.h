#ifndef BITE_H
#define BITE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BiteStatus {
  BITE_STATUS_OK = 0,
  BITE_STATUS_NULL_ARGUMENT = 1,
  BITE_STATUS_INVALID_UTF8 = 2,
  /**
   * Bad mode, options or settings.
   */
  BITE_STATUS_CONFIG = 3,
  BITE_STATUS_IO = 4,
  /**
   * A model file is missing or unreadable.
   */
  BITE_STATUS_MODEL = 5,
  /**
   * Input that cannot be processed, such as undecodable ids.
   */
  BITE_STATUS_DATA = 6,
  BITE_STATUS_PANIC = 7,
} BiteStatus;

/**
 * Loaded models. Immutable after load, so one handle may serve several
 * threads at once.
 */
typedef struct BitePipeline BitePipeline;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Loads `tagger.json` and, when present, `subword.json` from `model_dir`.
 * `mode` is `off`, `standard` or `ablated`; NULL means `standard`.
 *
 * # Safety
 * `model_dir` and `mode` must be NULL or valid NUL-terminated strings;
 * `out` must be NULL or point to writable storage for one pointer.
 */
enum BiteStatus bite_pipeline_load(const char *model_dir,
                                   const char *mode,
                                   struct BitePipeline **out);

/**
 * Loads models named by a TOML configuration file.
 *
 * # Safety
 * As for [`bite_pipeline_load`].
 */
enum BiteStatus bite_pipeline_load_config(const char *path, struct BitePipeline **out);

/**
 * # Safety
 * `pipeline` must be NULL or a handle from a load call, not yet freed.
 */
void bite_pipeline_free(struct BitePipeline *pipeline);

/**
 * Encodes one line. `*out` receives `{"symbols": [...], "ids": [...]}`.
 * A NULL `mode` uses the mode given at load time.
 *
 * # Safety
 * `pipeline` must be a live handle; `text` a valid string; `mode` NULL or
 * a valid string; `out` writable.
 */
enum BiteStatus bite_encode(const struct BitePipeline *pipeline,
                            const char *text,
                            const char *mode,
                            char **out);

/**
 * Decodes a JSON array of ids. `*out` receives a JSON array of tokens.
 *
 * # Safety
 * As for [`bite_encode`].
 */
enum BiteStatus bite_decode(const struct BitePipeline *pipeline,
                            const char *ids_json,
                            const char *mode,
                            char **out);

/**
 * Tags one line. `*out` receives `[{"surface": ..., "tag": ...}, ...]`.
 *
 * # Safety
 * As for [`bite_encode`].
 */
enum BiteStatus bite_tag(const struct BitePipeline *pipeline, const char *text, char **out);

/**
 * Perturbs one line. `options_json` may set `strategy` (`greedy` or
 * `sample`), `k`, `seed`, `scorer` (`encoding-divergence` or `hamming`)
 * and `retag`; NULL takes every default. `*out` receives a JSON array of
 * `{clean, adversarial, score}` records.
 *
 * # Safety
 * As for [`bite_encode`].
 */
enum BiteStatus bite_perturb(const struct BitePipeline *pipeline,
                             const char *text,
                             const char *options_json,
                             char **out);

/**
 * Splits text into words and punctuation. `*out` receives
 * `[{"surface": ..., "byte_span": {"start": .., "end": ..}, "is_punct": ..}, ...]`.
 *
 * # Safety
 * `text` must be a valid string and `out` writable.
 */
enum BiteStatus bite_pretokenize(const char *text, char **out);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library, not yet freed.
 */
void bite_string_free(char *s);

/**
 * Message for the last failed call on this thread, or NULL after a
 * success. Valid until the next call on the same thread.
 */
const char *bite_last_error(void);

const char *bite_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BITE_H */
