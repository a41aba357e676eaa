#pragma once

#include "homoflow/expansions.hpp"

namespace homoflow {

// Seeded random-structure samplers used by the concentration experiments:
//   Domega — complete multipartite digraph, n classes of size m, every cross
//            pair oriented by a fair coin;
//   Dn     — same shape with exactly n classes, n doubling as the level cap;
//   HatT   — doubled cover of a uniformly random tournament on n columns;
//   SR     — semigeneric structure with the auxiliary pair relation, each
//            column pair drawing a uniform half/half split pair.
enum class SamplerKind { Domega, Dn, HatT, SR };

SamplerKind sampler_from_string(const std::string& name);
std::string sampler_name(SamplerKind kind);

struct QopParams {
  double epsilon = 0.1;  // target deviation for the analytic bound
  double D = 0.05;       // half tolerance; 0 < D <= epsilon
  int n = 0;             // big-side class/column count
  int k = 0;             // small-side class/column count (HatT, SR)
  int m = 1;             // class size (Domega, Dn)
  int M = 2;             // column size (SR); must be even
  std::vector<int> a;    // small-side class sizes (Domega, Dn)
  long trials = 0;
  uint64_t seed = 0;
  int expansion_samples = 50;  // big-side expansions sampled per trial
};

// Throws Error(Param) when the parameters are unusable for the sampler.
void validate_qop_params(SamplerKind kind, const QopParams& p);

struct QopRunReport {
  std::string sampler;
  double epsilon = 0;
  double D = 0;
  Rat rho;                     // 1 / (number of small-side expansions)
  Int num_h_expansions = 0;
  double log_num_g_expansions = 0;  // natural log; the raw count is astronomical
  long num_vars = 0;                // independent random draws behind one sample
  std::vector<long> emb_counts;     // per trial
  std::vector<long> exp_counts;     // per trial, first expansion pair
  std::vector<double> trial_max_dev;  // per non-degenerate trial, max over pairs
  double max_deviation = 0;         // max over all trials and sampled pairs
  long degenerate = 0;              // trials with zero embeddings, excluded
  double mean_emb = 0;              // over non-degenerate trials
  Rat expected_emb;                 // exact first moment of the embedding count
  double zeta = 1;                  // concentration target of the normalized count
  double epsilon1 = 0, epsilon2 = 0;  // measured per-flip constants, scaled
  double delta1 = 0, delta2 = 0, delta3 = 0;
  double mcdiarmid_log_p = 0;  // natural log of the union bound
  double mcdiarmid_p = 0;      // exp of the above, clamped to [0, 2]
  double sr_pair_prob = 0;            // SR: probability of one ordered split pair
  double sr_pair_prob_identified = 0;  // SR: with complement pairs identified
};

json qop_report_to_json(const QopRunReport& r);

// Bounded-differences tail bound 2*exp(-2*eps^2 / sum a_i^2), returned raw
// (it exceeds 1 when vacuous; callers clamp). Throws Error(Domain) on an
// empty list, a non-positive entry, or eps <= 0.
double mcdiarmid_bound(const std::vector<double>& a, double eps);

// Draws one big-side structure. Deterministic in (kind, p, seed). SR output
// carries the auxiliary relation in `aux`; the others are plain digraphs.
FiniteStructure sample_structure(SamplerKind kind, const QopParams& p, uint64_t seed);

// Exact first moment of the embedding count of the small structure described
// by p (classes a / k columns) in one sample.
Rat expected_embeddings(SamplerKind kind, const QopParams& p);

// Samples `p.trials` big structures, counts embeddings of h, and for every
// expansion of h crossed with `p.expansion_samples` sampled expansions of the
// big structure tallies the order-respecting embeddings. The serial variant
// runs the identical per-trial computation without the parallel loop and must
// produce an identical report.
QopRunReport run_qop_experiment(SamplerKind kind, const FiniteStructure& h, const QopParams& p);
QopRunReport run_qop_experiment_serial(SamplerKind kind, const FiniteStructure& h,
                                       const QopParams& p);

// Number of single-draw flips available on g: cross vertex pairs for
// Domega/Dn, column pairs for HatT/SR.
long flip_count(SamplerKind kind, const FiniteStructure& g);

struct FlipResult {
  long delta = 0;                  // change in the embedding count of h
  int class_i = -1, class_j = -1;  // classes the flipped draw sits between
  FiniteStructure flipped;
};

// Re-makes one random draw of g and recounts embeddings of h. Domega/Dn
// reverse the chosen cross arc; HatT reverses the four arcs of a column-pair
// cover pattern; SR redraws the column pair's split from `reseed`, skipping
// the current value. Throws Error(Param) when flip_index is out of range.
FlipResult single_edge_sensitivity(SamplerKind kind, const FiniteStructure& h,
                                   const FiniteStructure& g, long flip_index,
                                   uint64_t reseed = 0);

// Closed-form bound on |delta| for one flip, in the embedding count (emb) or
// the per-pair order-respecting count (exp). Dn's bound depends on the class
// sizes; it is evaluated at the worst class pair, so the arguments select
// nothing yet are kept for the report's per-flip records.
Int sensitivity_bound_emb(SamplerKind kind, const QopParams& p, int class_i, int class_j);
Int sensitivity_bound_exp(SamplerKind kind, const QopParams& p, int class_i, int class_j);

// ---------------------------------------------------------------------------
// Hypergraph scaffolding

struct Hypergraph {
  int n = 0;
  int k = 0;
  std::vector<std::vector<int>> edges;  // each sorted ascending
  double target_constant = 1;
  long target = 0;
  bool reached_target = false;
};

json hypergraph_to_json(const Hypergraph& hg);

// Exhaustive girth check: hyperedges are k-sets, pairwise intersections have
// at most one vertex, and no three edges pairwise meet in three distinct
// vertices.
bool hypergraph_girth_ok(const Hypergraph& hg);

// Rejection sampler: random k-subsets, discarding any that over-intersect an
// existing edge or close a three-edge cycle, until ceil(c * n^(4/3)) edges are
// found or the attempt budget runs out (best effort, reached_target records
// which). Throws Error(Param) unless n >= k >= 3.
Hypergraph build_girth4_hypergraph(int n, int k, uint64_t seed, double target_constant = 1.0);

// Plants an independent uniformly random copy of h on every hyperedge. Pairs
// outside every hyperedge follow the mode: Gn gets a low-to-high arc, FT gets
// no arc. The output is re-validated against the mode class. Throws
// Error(Param) on a size mismatch or when h is not a member.
FiniteStructure plant_hypergraph_digraph(const Hypergraph& hg, const FiniteStructure& h,
                                         const ClassSpec& mode, uint64_t seed);

struct HypergraphCheckReport {
  long edges = 0;
  long aut = 0;    // embeddings of h landing in a single planted copy
  long n_emb = 0;  // edges * aut
  Rat rho;         // 1 / k!
  double max_deviation = 0;
  std::vector<long> first_tallies;  // per small-side order, first sampled big order
};

// Restricts attention to embeddings of h inside single hyperedges, tallies the
// order-respecting ones for every order of h crossed with sampled orders of g,
// and reports the worst deviation from 1/k!.
HypergraphCheckReport qop_hypergraph_check(const FiniteStructure& h, const FiniteStructure& g,
                                           const Hypergraph& hg, const ClassSpec& mode,
                                           int order_samples, uint64_t seed);

}  // namespace homoflow
