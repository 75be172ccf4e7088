#ifndef TOPICTRACE_H
#define TOPICTRACE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum TtStatus {
  TT_STATUS_OK = 0,
  /**
   * Invalid argument or configuration.
   */
  TT_STATUS_INVALID = 1,
  /**
   * Runtime failure inside the engine.
   */
  TT_STATUS_RUNTIME = 2,
  TT_STATUS_IO = 3,
  TT_STATUS_UNKNOWN_NODE = 4,
  TT_STATUS_NULL_POINTER = 5,
  /**
   * A panic was caught at the boundary.
   */
  TT_STATUS_PANIC = 6,
} TtStatus;

typedef enum TtMeasure {
  TT_MEASURE_JACCARD = 0,
  TT_MEASURE_JENSEN_SHANNON = 1,
  TT_MEASURE_L2 = 2,
} TtMeasure;

typedef enum TtEventKind {
  TT_EVENT_KIND_EMERGENCE = 0,
  TT_EVENT_KIND_DISAPPEARANCE = 1,
  TT_EVENT_KIND_SPLIT = 2,
  TT_EVENT_KIND_MERGE = 3,
} TtEventKind;

typedef enum TtDirection {
  TT_DIRECTION_FORWARD = 0,
  TT_DIRECTION_BACKWARD = 1,
} TtDirection;

/**
 * Documents of one epoch as vocabulary indices.
 */
typedef struct TtCorpus TtCorpus;

typedef struct TtGraph TtGraph;

/**
 * Topics of one epoch.
 */
typedef struct TtTopicSet TtTopicSet;

/**
 * Sampler settings for [`tt_fit_epoch`]; start from [`tt_fit_options_default`].
 */
typedef struct TtFitOptions {
  double gamma;
  double alpha0;
  double eta;
  size_t burn_in;
  size_t sweeps;
  /**
   * 0 disables concentration resampling.
   */
  size_t resample_every;
  size_t k_init;
  uint64_t min_mass;
} TtFitOptions;

typedef struct TtNode {
  size_t epoch;
  size_t topic_id;
} TtNode;

typedef struct TtEdge {
  struct TtNode from;
  struct TtNode to;
  double weight;
} TtEdge;

typedef struct TtEvent {
  enum TtEventKind kind;
  struct TtNode node;
  /**
   * Entries available through [`tt_graph_event_related`].
   */
  size_t related_count;
} TtEvent;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until
 * the next failing call on the same thread.
 */
const char *tt_last_error_message(void);

/**
 * Engine version as a static NUL-terminated string.
 */
const char *tt_version(void);

struct TtFitOptions tt_fit_options_default(void);

/**
 * Similarity of two probability vectors of length `len`.
 */
enum TtStatus tt_similarity(const double *p,
                            const double *q,
                            size_t len,
                            enum TtMeasure measure,
                            double *out);

enum TtStatus tt_corpus_new(size_t vocab_size, struct TtCorpus **out);

/**
 * Append a document given as `len` vocabulary indices.
 */
enum TtStatus tt_corpus_add_document(struct TtCorpus *corpus, const uint32_t *words, size_t len);

size_t tt_corpus_document_count(const struct TtCorpus *corpus);

void tt_corpus_free(struct TtCorpus *corpus);

/**
 * Fit one epoch's topic model.
 */
enum TtStatus tt_fit_epoch(const struct TtCorpus *corpus,
                           const struct TtFitOptions *options,
                           uint64_t seed,
                           size_t epoch,
                           struct TtTopicSet **out);

size_t tt_topic_set_len(const struct TtTopicSet *set);

size_t tt_topic_set_epoch(const struct TtTopicSet *set);

/**
 * Token mass of topic `index` (topics are ordered by descending mass).
 */
enum TtStatus tt_topic_mass(const struct TtTopicSet *set, size_t index, uint64_t *out);

/**
 * Copy the word distribution of topic `index` into `buf` of length `len`,
 * which must equal the vocabulary size.
 */
enum TtStatus tt_topic_phi(const struct TtTopicSet *set, size_t index, double *buf, size_t len);

/**
 * Build a topic set from `count` dense distributions of length
 * `vocab_size` laid out row-major in `phi`, with per-topic masses.
 */
enum TtStatus tt_topic_set_from_phi(size_t epoch,
                                    const double *phi,
                                    const uint64_t *masses,
                                    size_t count,
                                    size_t vocab_size,
                                    struct TtTopicSet **out);

void tt_topic_set_free(struct TtTopicSet *set);

/**
 * Link `count` topic sets, in increasing epoch order, into a graph.
 */
enum TtStatus tt_graph_build(const struct TtTopicSet *const *sets,
                             size_t count,
                             enum TtMeasure measure,
                             double threshold,
                             struct TtGraph **out);

size_t tt_graph_node_count(const struct TtGraph *graph);

size_t tt_graph_edge_count(const struct TtGraph *graph);

enum TtStatus tt_graph_edge(const struct TtGraph *graph, size_t index, struct TtEdge *out);

size_t tt_graph_event_count(const struct TtGraph *graph);

enum TtStatus tt_graph_event(const struct TtGraph *graph, size_t index, struct TtEvent *out);

/**
 * Related node `related` of event `index` (split targets or merge sources).
 */
enum TtStatus tt_graph_event_related(const struct TtGraph *graph,
                                     size_t index,
                                     size_t related,
                                     struct TtNode *out);

/**
 * Lineage sub-graph reachable from `seed` within `max_depth` hops.
 */
enum TtStatus tt_graph_trace(const struct TtGraph *graph,
                             struct TtNode seed,
                             enum TtDirection direction,
                             size_t max_depth,
                             struct TtGraph **out);

/**
 * Graph export as a JSON string; release it with [`tt_string_free`].
 */
enum TtStatus tt_graph_to_json(const struct TtGraph *graph, uint64_t master_seed, char **out);

void tt_graph_free(struct TtGraph *graph);

void tt_string_free(char *s);

/**
 * Run every pipeline stage for the config file at `config_path`.
 * `jobs` bounds concurrent epoch fits; 0 uses every core.
 */
enum TtStatus tt_run_pipeline(const char *config_path, size_t jobs);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TOPICTRACE_H */
