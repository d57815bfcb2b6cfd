// Copyright 2026 The concave-ot Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Structure of optimal plans for concave costs: diagonal/off-diagonal split,
// stay-at-rest and cyclical-monotonicity audits, map extraction and map
// reconstruction from a Kantorovich potential.

#ifndef CONCAVE_OT_STRUCTURE_HPP_
#define CONCAVE_OT_STRUCTURE_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "concave_ot/cost.hpp"
#include "concave_ot/measure.hpp"
#include "concave_ot/solver.hpp"

namespace concave_ot {

inline constexpr double kDefaultMassTol = 1e-9;
inline constexpr double kDefaultTranslationTol = 0.02;
inline constexpr double kDefaultGradTol = 1e-8;

struct PlanDecomposition {
  std::vector<PlanEntry> diagonal;
  std::vector<PlanEntry> off_diagonal;
  DiscreteMeasure diagonal_source;  // (pi_x)_# gamma_D
  DiscreteMeasure diagonal_target;  // (pi_y)_# gamma_D
  DiscreteMeasure off_source;       // (pi_x)_# gamma_O
  DiscreteMeasure off_target;       // (pi_y)_# gamma_O
  MeasurePtr source;
  MeasurePtr target;

  double diagonal_mass() const { return diagonal_source.total_mass(); }
  double off_diagonal_mass() const { return off_source.total_mass(); }
};

// Entries whose source and target points coincide exactly form the diagonal.
PlanDecomposition decompose(const TransportPlan& plan);

struct StayAtRestReport {
  bool diag_matches_meet = false;
  bool off_marginals_singular = false;
  double max_diagonal_error = 0.0;  // max atomwise |(pi_x)_# gamma_D - mu^nu|
  double diagonal_mass = 0.0;
  double meet_mass = 0.0;
  std::vector<std::size_t> shared_atoms;  // source indices moving both ways

  bool ok() const { return diag_matches_meet && off_marginals_singular; }
};

StayAtRestReport verify_stay_at_rest(const DiscreteMeasure& mu,
                                     const DiscreteMeasure& nu,
                                     const TransportPlan& plan, double tol);

struct CcmOptions {
  std::size_t max_cycle_len = 3;  // 2..4
  double tol = kDefaultMassTol;
  std::uint64_t seed = 0;
  std::size_t sample_size = 100'000;
  // Length-3 cycles are enumerated exhaustively up to this support size.
  std::size_t exhaustive_triple_limit = 450;
};

struct CcmWitness {
  std::vector<std::size_t> entries;  // plan entry indices, in cycle order
  double violation = 0.0;
};

struct CcmReport {
  std::size_t cycles_checked = 0;
  std::size_t support_size = 0;
  double worst_violation = 0.0;
  std::vector<bool> exhaustive;  // per cycle length, from 2
  std::optional<CcmWitness> violating_cycle;

  bool ok(double tol) const { return worst_violation <= tol; }
};

// For cycles (e_1..e_k) of support entries, the violation is
// sum c(x_i, y_i) - sum c(x_i, y_{i+1}).
CcmReport verify_ccm(const TransportPlan& plan, const ConcaveCost& cost,
                     const CcmOptions& options = {});

struct SplitSource {
  std::size_t source = 0;
  std::vector<std::size_t> targets;
  std::vector<double> masses;
};

struct MapAssignment {
  std::size_t source = 0;
  std::size_t target = 0;
  double mass = 0.0;
};

struct MapExtract {
  std::vector<MapAssignment> assignments;
  std::vector<SplitSource> splits;
  // Off-diagonal source mass carried by split sources.
  double split_fraction = 0.0;
  double off_diagonal_mass = 0.0;
};

MapExtract extract_map(const PlanDecomposition& decomposition,
                       double mass_tol = kDefaultMassTol);

struct KinkEvents {
  std::size_t count = 0;
  double mass = 0.0;
};

// Off-diagonal support pairs whose length is within tol of a kink of the cost.
KinkEvents detect_kink_events(const TransportPlan& plan,
                              const ConcaveCost& cost, double tol);

// Mass of entries with |y - (x + e)| <= tol |e|. Throws DomainError for e = 0.
double translation_mass(const TransportPlan& plan, std::span<const double> e,
                        double tol = kDefaultTranslationTol);

enum class ReconstructionStatus {
  kOk,
  kGap,          // |g| fell inside a derivative gap; kink radius used
  kOutOfRange,   // |g| not a derivative value of the cost
  kNearDiagonal  // |g| <= grad_tol
};

struct AtomReconstruction {
  ReconstructionStatus status = ReconstructionStatus::kOk;
  std::vector<double> gradient;
  double radius = 0.0;
  std::vector<double> predicted;  // empty unless status is kOk or kGap
  std::optional<std::size_t> lp_target;
  double error = 0.0;             // |y_pred - y_LP|
  double direction_cosine = 0.0;  // between -g and y_LP - x
  double fit_residual = 0.0;      // rms of the affine fit
};

struct ReconstructOptions {
  std::size_t k_neighbors = 0;  // 0 means max(d + 1, 8)
  double grad_tol = kDefaultGradTol;
};

struct Reconstruction {
  std::vector<AtomReconstruction> atoms;  // one per source atom
  std::size_t k_neighbors = 0;
  std::size_t gap_events = 0;
  std::size_t out_of_range = 0;
  std::size_t near_diagonal = 0;
  // Statistics over atoms with a prediction and an LP target.
  double median_error = 0.0;
  double p90_error = 0.0;
  double aligned_mass_fraction = 0.0;  // mass with direction cosine >= 0.9
  double median_fit_residual = 0.0;
};

// Estimates grad phi by an affine least-squares fit over the k nearest source
// atoms and predicts y = x - r g/|g| with r = (l')^{-1}(|g|). The LP target of
// a source is its heaviest off-diagonal target in `plan`. Throws
// PreconditionError when mu has fewer than two atoms.
Reconstruction reconstruct_map_from_potential(const DualPotentials& potentials,
                                              const TransportPlan& plan,
                                              const ConcaveCost& cost,
                                              const ReconstructOptions& options = {});

// Solves mu -> nu by moving mu^nu onto the diagonal and solving only the
// residuals. Potentials are extended to all atoms through the metric
// structure of the cost, so the result certifies on the full problem.
ExactSolution solve_exact_with_meet(MeasurePtr mu, MeasurePtr nu,
                                    const ConcaveCost& cost);

}  // namespace concave_ot

#endif  // CONCAVE_OT_STRUCTURE_HPP_
