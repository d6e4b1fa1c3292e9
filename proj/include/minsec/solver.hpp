#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "minsec/energy.hpp"
#include "minsec/section.hpp"

namespace minsec {

struct SolverParams {
  int max_inner_iterations = 400;
  double inner_tolerance = 1e-9;   // relative energy decrease per step
  double line_search_shrink = 0.5;
  int outer_move_budget = 12;      // proposals per start
  int multistart = 8;
  std::uint64_t seed = 1;
  std::vector<double> twist_anneal = {1e-3, 1e-4, 1e-5, 1e-6};
  int refinement_depth = 4;
};

void validate_params(const SolverParams& params);

struct TraceEntry {
  int iteration = 0;
  double energy = 0.0;
};

struct MinimizeResult {
  DiscreteSection section;
  double energy = 0.0;
  std::vector<TraceEntry> trace;
  bool converged = false;
};

struct TopologyReport {
  int euler = 0;
  int genus = 0;             // of the base surface
  int singularity_count = 0;
  std::vector<int> indices;  // per singularity, even and nonzero
  int chi = 0;               // 2 - 2*genus - singularity_count
  bool orientable = true;    // iff no singularities
};

struct StartSummary {
  int start = 0;
  double volume = 0.0;
  int accepted_moves = 0;
  int singularities = 0;
};

struct SearchResult {
  DiscreteSection section;
  double volume = 0.0;
  TopologyReport topology;
  std::vector<SingularityRecord> singularities;
  std::vector<StartSummary> starts;
  std::vector<TraceEntry> trace; // inner trace of the winning configuration
};

// Section whose face indices realize the given per-face winding integers
// (faces absent from the list get index 0). The integers must sum to the
// euler number. Built from a minimum-norm curl solve followed by a
// least-squares phase fit; the realized indices are verified exactly.
DiscreteSection winding_section(const Connection& conn,
                                const std::vector<std::pair<int, int>>& targets);

// Section with one index-2*sign singularity near each prescribed face: the
// face and a vertex-adjacent partner each wind once, forming one cluster.
// Prescribed faces must be distinct and signs must sum to euler/2. The result
// is smoothed by an index-preserving quadratic relaxation.
DiscreteSection initialize(const Connection& conn,
                           const std::vector<std::pair<int, int>>& points,
                           const SolverParams& params = {});

// Gradient descent with backtracking on the vertex angles. Steps that would
// change any face index are rejected by shrinking; energy is nonincreasing
// across accepted steps. Exact twisting is minimized through the smoothing
// schedule in params.
MinimizeResult minimize_inner(const DiscreteSection& sec, const Functional& fn,
                              const SolverParams& params = {});

// Multistart search over singularity placements minimizing volume: starts
// place |euler|/2 points by farthest-point sampling, moves relocate a
// singularity, merge and re-split a same-sign pair, or add/delete an opposite
// pair; every proposal is re-initialized and minimized, accepted only on
// strict volume decrease. The returned configuration has all cluster indices
// in {-2, +2}, summing to the euler number, pairwise separated by at least
// two edges.
SearchResult outer_search(const Connection& conn, const SolverParams& params = {});

TopologyReport topology_report(const DiscreteSection& sec);

struct HConeReport {
  int singularity_face = -1;
  double radius = 0.0;            // outer disk radius R
  std::vector<double> lambdas;
  int k = 0;                      // fitted integer degree
  std::vector<double> rms;        // per-lambda fit residual, radians
  std::vector<Eigen::VectorXd> profiles; // per-lambda lift on the theta grid
  int grid_size = 0;
};

// Restriction of the section to circles of radius R/lambda about the
// singularity: crossed edges are walked in the orientation induced by the
// surface, values transported within each face, unwrapped to a lift,
// resampled on a uniform theta grid, and fitted as k*theta + c with integer
// k. The disk of radius R must contain no other singular face.
HConeReport extract_hcone(const DiscreteSection& sec,
                          const SingularityRecord& sing,
                          const std::vector<double>& lambdas, double R);

} // namespace minsec
