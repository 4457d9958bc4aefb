#pragma once

#include "shsnet/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace shsnet {

/// Corner-aligned uniform grid over a box domain. Cells are addressed by a
/// flat index (last dimension fastest).
struct UniformGrid {
  Vector lo, hi, eta;
  std::vector<Index> cells_per_dim;
  std::vector<Index> stride;

  static UniformGrid make(Vector lo, Vector hi, Vector eta);

  [[nodiscard]] Index dim() const { return lo.size(); }
  [[nodiscard]] Index cell_count() const;
  /// Flat index of the cell containing the point; -1 outside the domain.
  [[nodiscard]] Index cell_of(const Vector& point) const;
  [[nodiscard]] Vector center(Index cell) const;
  void coords_of(Index cell, Index* coords) const;
  [[nodiscard]] Index flatten(const Index* coords) const;
  /// Mask of cells fully inside [blo, bhi] (grid-aligned boxes resolve
  /// exactly, up to a 1e-9 alignment tolerance).
  [[nodiscard]] std::vector<std::uint8_t> mask_of_box(const Vector& blo,
                                                      const Vector& bhi) const;
};

/// Sampled-time symbolic over-approximation of the switched linear system
/// x' = A_mode x + u: per mode the cell center propagates by the exact flow
/// Phi = e^{A tau}, the held input enters through Gamma = int e^{A s} ds,
/// and the cell half-width grows by the entrywise bound e^{|A| tau}. A
/// transition of (cell, input) is the union over modes of all cells
/// intersecting the propagated box; a box escaping the domain blocks the
/// pair.
struct SymbolicModel {
  UniformGrid grid;
  std::vector<Vector> inputs;
  double sampling_period = 0.0;
  std::vector<Matrix> flow;           ///< Phi_j per mode
  std::vector<Matrix> inject;         ///< Gamma_j per mode
  std::vector<Vector> grown_radius;   ///< propagated cell half-widths per mode
  std::vector<std::vector<double>> flow_centers;  ///< [mode], cell-major, dim-fast

  [[nodiscard]] Index mode_count() const { return static_cast<Index>(flow.size()); }
  [[nodiscard]] Index input_count() const { return static_cast<Index>(inputs.size()); }

  void successor_box(Index cell, Index input, Index mode, Vector& blo, Vector& bhi) const;
  /// Union of successor cells over all modes; nullopt when any mode's box
  /// escapes the domain (blocked pair).
  [[nodiscard]] std::optional<std::vector<Index>> successors(Index cell, Index input) const;
};

[[nodiscard]] SymbolicModel build_symbolic_model(const std::vector<Matrix>& mode_matrices,
                                                 const UniformGrid& grid,
                                                 std::vector<Vector> inputs,
                                                 double sampling_period);

/// Axis-aligned product grid of inputs covering [lo, hi] in the given steps.
[[nodiscard]] std::vector<Vector> make_input_grid(const Vector& lo, const Vector& hi,
                                                  const Vector& step);

/// Iterated reach-while-stay fixpoint: W_0 = target, W_{k+1} adds every
/// safe cell with an input whose successors (all modes) lie inside W_k.
/// Among valid inputs the one steering the successor centers closest to the
/// target centroid is recorded. After the fixpoint, target cells receive an
/// input keeping their successors inside the final winning set when one
/// exists.
struct ReachStayResult {
  std::vector<std::uint8_t> winning;
  std::vector<std::int32_t> input_of;  ///< -1 where none assigned
  Index winning_count = 0;
  int iterations = 0;
};

[[nodiscard]] ReachStayResult synthesize_reach_stay(const SymbolicModel& model,
                                                    const std::vector<std::uint8_t>& target,
                                                    const std::vector<std::uint8_t>& safe);

/// Two reach-while-stay controllers alternated by a one-bit supervisor:
/// memory 0 targets the first set, entry toggles. Guarantees staying in the
/// safe set while visiting both targets over and over on the symbolic model.
struct ControllerTable {
  UniformGrid grid;
  std::vector<Vector> inputs;
  ReachStayResult to_target1, to_target2;
  std::vector<std::uint8_t> target1, target2;

  struct Decision {
    Index input_index = -1;  ///< -1: cell outside the active winning domain
    bool entered_target = false;
    int memory = 0;
  };
  [[nodiscard]] Decision decide(Index cell, int memory) const;

  /// Rows: cell index, memory bit, input vector components.
  void write_csv(std::ostream& os) const;
};

/// Builds the supervisor; requires each target to be covered by the other
/// target's winning set. The failure message names the uncovered cells.
[[nodiscard]] ControllerTable build_recurrence_supervisor(const SymbolicModel& model,
                                                          ReachStayResult to_target1,
                                                          ReachStayResult to_target2,
                                                          std::vector<std::uint8_t> target1,
                                                          std::vector<std::uint8_t> target2);

}  // namespace shsnet
