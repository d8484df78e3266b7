/* C ABI for the coordnet coordination-detection pipeline.
 *
 * Maintained by hand alongside src/lib.rs; keep both in sync.
 */

#ifndef COORDNET_H
#define COORDNET_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Opaque detection handle. */
typedef struct CoordnetDetection CoordnetDetection;

typedef enum CoordnetStatus {
  COORDNET_OK = 0,
  COORDNET_NULL_POINTER = 1,
  COORDNET_INVALID_UTF8 = 2,
  COORDNET_INVALID_ARGUMENT = 3,
  COORDNET_IO_ERROR = 4,
  COORDNET_PARSE_ERROR = 5,
  COORDNET_INTERNAL_ERROR = 6,
} CoordnetStatus;

typedef struct CoordnetChannelStats {
  unsigned long long coordinated_nodes;
  unsigned long long coordinated_links;
  unsigned long long filtered_nodes;
  unsigned long long filtered_links;
  unsigned long long threshold;
  unsigned long long communities;
  double filtered_density;
  double modularity;
} CoordnetChannelStats;

/* Library version; static storage, do not free. */
const char *coordnet_version(void);

/* Copy of the last error message on this thread, or NULL when none.
 * Free with coordnet_string_free. */
char *coordnet_last_error(void);

void coordnet_string_free(char *s);

/* Run detection over a JSONL post export at a fixed window (seconds).
 * Builds, thresholds and clusters all three channel networks.
 * On COORDNET_OK, *out owns the results; release with
 * coordnet_detection_free. */
CoordnetStatus coordnet_detect_file(const char *posts_path,
                                    const char *event_id,
                                    unsigned long long window_seconds,
                                    unsigned long long seed,
                                    CoordnetDetection **out);

/* channel is one of "semantic", "referral", "social". */
CoordnetStatus coordnet_detection_channel_stats(const CoordnetDetection *detection,
                                                const char *channel,
                                                CoordnetChannelStats *out);

CoordnetStatus coordnet_detection_write_edges_csv(const CoordnetDetection *detection,
                                                  const char *channel,
                                                  const char *path);

/* Writes the user's community id, or -1 when the user is absent from the
 * channel's filtered graph. */
CoordnetStatus coordnet_detection_community_of(const CoordnetDetection *detection,
                                               const char *channel,
                                               const char *user_id,
                                               long long *out_community);

void coordnet_detection_free(CoordnetDetection *detection);

#ifdef __cplusplus
}
#endif

#endif /* COORDNET_H */
