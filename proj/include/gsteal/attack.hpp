#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gsteal/graph.hpp"
#include "gsteal/model.hpp"
#include "gsteal/oracle.hpp"
#include "gsteal/rng.hpp"
#include "gsteal/tape.hpp"

namespace gsteal {

enum class AlignMode { Rank, MSE, None };

std::string align_mode_name(AlignMode m);
AlignMode align_mode_from_name(const std::string& name);

struct AttackConfig {
    double alpha = 0.2;            // style fraction of lowest-scoring nodes
    double beta = 0.5;             // fraction of style nodes dropped
    int k_augments = 2;            // augmented samples per query
    double edge_perturb_prob = 0.1;
    double lambda = 1.0;           // alignment loss weight
    AlignMode align_mode = AlignMode::Rank;
    bool augment = true;
    // Optional pair sampling for very large graphs; off by default, all
    // node pairs are used exactly.
    bool pair_sampling = false;
    int max_pairs = 0;
    ModelConfig surrogate;
    int epochs = 200;
    int batch_size = 64;
    std::uint64_t seed = 41;
};

// Partition of a queried graph's nodes by explanation rank: the alpha
// fraction with the lowest scores (ties broken by ascending node index) is
// the style set, the rest is causal.
struct StylePlan {
    std::vector<int> style_nodes;   // sorted ascending
    std::vector<int> causal_nodes;  // sorted ascending
};

// Zero-budget training sample derived from a query by a style intervention.
struct AugmentedSample {
    Graph graph;
    int label = 0;                     // copied from the origin's oracle label
    std::vector<double> explanation;   // origin explanation restricted to
                                       // surviving nodes, original order
    std::size_t origin = 0;            // index into the query list
};

StylePlan select_style_nodes(const ExplanationVector& explanation, double alpha);

// Drops floor(beta * |style|) uniformly chosen style nodes and their
// incident edges, reindexing survivors order-preservingly. Returns nullopt
// if the drop would empty the graph.
std::optional<AugmentedSample> augment_node_drop(const QueryRecord& record,
                                                 const StylePlan& plan,
                                                 double beta, Pcg32& rng,
                                                 std::size_t origin);

// Rewires node pairs with both endpoints in the style set: each existing
// edge is removed with probability p and each absent pair added with
// probability p. Edges touching a causal node are never changed.
AugmentedSample augment_edge_perturb(const QueryRecord& record,
                                     const StylePlan& plan, double p,
                                     Pcg32& rng, std::size_t origin);

struct TrainingSet {
    std::vector<QueryRecord> queried;       // D_Q, one budget unit each
    std::vector<AugmentedSample> augmented; // D_A, zero budget
    std::size_t skipped_augments = 0;
};

// Phase 1: queries exactly `budget` shadow graphs (seeded uniform sample
// without replacement) and derives k_augments samples per record,
// alternating node-drop and edge-perturb. A refusal mid-collection is a
// budget accounting bug and raises the refusal unchanged.
TrainingSet collect_training_set(QueryService& oracle, const Dataset& shadow,
                                 long budget, const AttackConfig& config);

// RankNet-style pairwise loss between the target's ranking and the
// surrogate's differentiable scores ([n x 1] column on the tape). Pairs
// (i < j) get target r=1 when the target ranks i strictly above j, r=0 when
// strictly below, r=0.5 on exact ties. All pairs are used exactly; fewer
// than two nodes contribute 0.
Var rank_alignment_loss(Tape& tape, Var surrogate_scores,
                        const std::vector<double>& target_scores);

// Pair-sampled variant for very large graphs: averages over at most
// max_pairs uniformly chosen pairs instead of all of them.
Var rank_alignment_loss_sampled(Tape& tape, Var surrogate_scores,
                                const std::vector<double>& target_scores,
                                int max_pairs, Pcg32& rng);

// Mean squared difference; the direct-alignment baseline.
Var mse_alignment_loss(Tape& tape, Var surrogate_scores,
                       const std::vector<double>& target_scores);

// Differentiable surrogate node scores: node_embeddings . w_cls[:, class_c].
Var surrogate_cam_scores(Tape& tape, const ForwardVars& fwd,
                         const std::vector<Var>& params, int class_c);

// Phase 2: trains the surrogate on D_Q plus D_A minimizing
// l_pred + lambda * l_align per sample (mean over each batch). l_pred is
// soft cross-entropy against oracle probs when present, hard otherwise;
// l_align compares the stored target explanation against the surrogate's
// Graph-CAM scores for its own predicted class. Returns the final-epoch
// parameters.
ModelState train_surrogate(const TrainingSet& data, const AttackConfig& config);

// JSONL dump of a training set for audit and replay; floats round-trip
// exactly.
void dump_training_set(const TrainingSet& data, const std::string& path);
TrainingSet load_training_set(const std::string& path);

}  // namespace gsteal
