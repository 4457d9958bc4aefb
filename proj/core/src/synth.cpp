#include "shsnet/synth.hpp"

#include "shsnet/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace shsnet {

// ---------------------------------------------------------------------------
// UniformGrid
// ---------------------------------------------------------------------------

UniformGrid UniformGrid::make(Vector lo, Vector hi, Vector eta) {
  const Index d = lo.size();
  if (hi.size() != d || eta.size() != d) {
    throw std::invalid_argument("grid: lo/hi/eta dimension mismatch");
  }
  UniformGrid grid;
  grid.lo = std::move(lo);
  grid.hi = std::move(hi);
  grid.eta = std::move(eta);
  grid.cells_per_dim.resize(static_cast<std::size_t>(d));
  for (Index k = 0; k < d; ++k) {
    if (!(grid.eta[k] > 0.0)) throw std::invalid_argument("grid: cell widths must be positive");
    const double span = grid.hi[k] - grid.lo[k];
    if (!(span > 0.0)) throw std::invalid_argument("grid: empty domain");
    const double count = span / grid.eta[k];
    const auto rounded = static_cast<Index>(std::llround(count));
    if (rounded < 1 || std::abs(count - static_cast<double>(rounded)) > 1e-9 * std::max(1.0, span)) {
      throw std::invalid_argument("grid: domain must be covered exactly (corner-aligned)");
    }
    grid.cells_per_dim[static_cast<std::size_t>(k)] = rounded;
  }
  grid.stride.resize(static_cast<std::size_t>(d));
  Index s = 1;
  for (Index k = d - 1; k >= 0; --k) {
    grid.stride[static_cast<std::size_t>(k)] = s;
    s *= grid.cells_per_dim[static_cast<std::size_t>(k)];
  }
  return grid;
}

Index UniformGrid::cell_count() const {
  Index c = 1;
  for (Index n : cells_per_dim) c *= n;
  return c;
}

Index UniformGrid::cell_of(const Vector& point) const {
  Index flat = 0;
  for (Index k = 0; k < dim(); ++k) {
    const auto i = static_cast<Index>(std::floor((point[k] - lo[k]) / eta[k]));
    if (i < 0 || i >= cells_per_dim[static_cast<std::size_t>(k)]) return -1;
    flat += i * stride[static_cast<std::size_t>(k)];
  }
  return flat;
}

Vector UniformGrid::center(Index cell) const {
  Vector c(dim());
  for (Index k = 0; k < dim(); ++k) {
    const Index i = (cell / stride[static_cast<std::size_t>(k)]) %
                    cells_per_dim[static_cast<std::size_t>(k)];
    c[k] = lo[k] + (static_cast<double>(i) + 0.5) * eta[k];
  }
  return c;
}

void UniformGrid::coords_of(Index cell, Index* coords) const {
  for (Index k = 0; k < dim(); ++k) {
    coords[k] = (cell / stride[static_cast<std::size_t>(k)]) %
                cells_per_dim[static_cast<std::size_t>(k)];
  }
}

Index UniformGrid::flatten(const Index* coords) const {
  Index flat = 0;
  for (Index k = 0; k < dim(); ++k) flat += coords[k] * stride[static_cast<std::size_t>(k)];
  return flat;
}

std::vector<std::uint8_t> UniformGrid::mask_of_box(const Vector& blo,
                                                   const Vector& bhi) const {
  const Index d = dim();
  std::vector<Index> first(static_cast<std::size_t>(d)), last(static_cast<std::size_t>(d));
  for (Index k = 0; k < d; ++k) {
    const double a = (blo[k] - lo[k]) / eta[k];
    const double b = (bhi[k] - lo[k]) / eta[k];
    first[static_cast<std::size_t>(k)] =
        std::max<Index>(0, static_cast<Index>(std::ceil(a - 1e-9)));
    last[static_cast<std::size_t>(k)] =
        std::min(cells_per_dim[static_cast<std::size_t>(k)] - 1,
                 static_cast<Index>(std::floor(b + 1e-9)) - 1);
  }
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(cell_count()), 0);
  std::vector<Index> coords(static_cast<std::size_t>(d));
  std::function<void(Index)> fill = [&](Index k) {
    if (k == d) {
      mask[static_cast<std::size_t>(flatten(coords.data()))] = 1;
      return;
    }
    for (Index i = first[static_cast<std::size_t>(k)];
         i <= last[static_cast<std::size_t>(k)]; ++i) {
      coords[static_cast<std::size_t>(k)] = i;
      fill(k + 1);
    }
  };
  for (Index k = 0; k < d; ++k) {
    if (first[static_cast<std::size_t>(k)] > last[static_cast<std::size_t>(k)]) return mask;
  }
  fill(0);
  return mask;
}

// ---------------------------------------------------------------------------
// SymbolicModel
// ---------------------------------------------------------------------------

std::vector<Vector> make_input_grid(const Vector& lo, const Vector& hi, const Vector& step) {
  const Index d = lo.size();
  std::vector<Index> counts(static_cast<std::size_t>(d));
  for (Index k = 0; k < d; ++k) {
    counts[static_cast<std::size_t>(k)] =
        static_cast<Index>(std::floor((hi[k] - lo[k]) / step[k] + 1e-9)) + 1;
  }
  std::vector<Vector> inputs;
  Vector u(d);
  std::function<void(Index)> fill = [&](Index k) {
    if (k == d) {
      inputs.push_back(u);
      return;
    }
    for (Index i = 0; i < counts[static_cast<std::size_t>(k)]; ++i) {
      u[k] = lo[k] + static_cast<double>(i) * step[k];
      fill(k + 1);
    }
  };
  fill(0);
  return inputs;
}

SymbolicModel build_symbolic_model(const std::vector<Matrix>& mode_matrices,
                                   const UniformGrid& grid, std::vector<Vector> inputs,
                                   double sampling_period) {
  if (!(sampling_period > 0.0)) {
    throw std::invalid_argument("symbolic model: sampling period must be positive");
  }
  if (mode_matrices.empty()) throw std::invalid_argument("symbolic model: no modes");

  SymbolicModel model;
  model.grid = grid;
  model.inputs = std::move(inputs);
  model.sampling_period = sampling_period;

  const Index d = grid.dim();
  const Index cells = grid.cell_count();
  for (const Matrix& A : mode_matrices) {
    if (A.rows() != d || A.cols() != d) {
      throw std::invalid_argument("symbolic model: mode matrix dimension mismatch");
    }
    auto [phi, gamma] = flow_pair(A, sampling_period);
    const Matrix growth = expm(A.cwiseAbs() * sampling_period);
    model.grown_radius.push_back(growth * (0.5 * grid.eta));
    model.flow.push_back(std::move(phi));
    model.inject.push_back(std::move(gamma));
  }
  // cache Phi * center for every (mode, cell)
  for (std::size_t j = 0; j < model.flow.size(); ++j) {
    std::vector<double> pc(static_cast<std::size_t>(cells * d));
    for (Index c = 0; c < cells; ++c) {
      const Vector fc = model.flow[j] * grid.center(c);
      for (Index k = 0; k < d; ++k) pc[static_cast<std::size_t>(c * d + k)] = fc[k];
    }
    model.flow_centers.push_back(std::move(pc));
  }
  return model;
}

void SymbolicModel::successor_box(Index cell, Index input, Index mode, Vector& blo,
                                  Vector& bhi) const {
  const Index d = grid.dim();
  const Vector shift = inject[static_cast<std::size_t>(mode)] *
                       inputs[static_cast<std::size_t>(input)];
  const auto& pc = flow_centers[static_cast<std::size_t>(mode)];
  const Vector& r = grown_radius[static_cast<std::size_t>(mode)];
  blo.resize(d);
  bhi.resize(d);
  for (Index k = 0; k < d; ++k) {
    const double ctr = pc[static_cast<std::size_t>(cell * d + k)] + shift[k];
    blo[k] = ctr - r[k];
    bhi[k] = ctr + r[k];
  }
}

std::optional<std::vector<Index>> SymbolicModel::successors(Index cell, Index input) const {
  const Index d = grid.dim();
  std::vector<Index> cells;
  Vector blo(d), bhi(d);
  std::vector<Index> first(static_cast<std::size_t>(d)), last(static_cast<std::size_t>(d)),
      coords(static_cast<std::size_t>(d));
  for (Index j = 0; j < mode_count(); ++j) {
    successor_box(cell, input, j, blo, bhi);
    for (Index k = 0; k < d; ++k) {
      const auto a = static_cast<Index>(std::floor((blo[k] - grid.lo[k]) / grid.eta[k]));
      const auto b =
          static_cast<Index>(std::ceil((bhi[k] - grid.lo[k]) / grid.eta[k])) - 1;
      if (a < 0 || b >= grid.cells_per_dim[static_cast<std::size_t>(k)]) {
        return std::nullopt;  // blocked: the box escapes the domain
      }
      first[static_cast<std::size_t>(k)] = a;
      last[static_cast<std::size_t>(k)] = b;
    }
    std::function<void(Index)> gather = [&](Index k) {
      if (k == d) {
        cells.push_back(grid.flatten(coords.data()));
        return;
      }
      for (Index i = first[static_cast<std::size_t>(k)];
           i <= last[static_cast<std::size_t>(k)]; ++i) {
        coords[static_cast<std::size_t>(k)] = i;
        gather(k + 1);
      }
    };
    gather(0);
  }
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  return cells;
}

// ---------------------------------------------------------------------------
// Reach-while-stay fixpoint
// ---------------------------------------------------------------------------

namespace {

// Padded D-dimensional prefix sums over a cell mask for O(2^D) box counts.
struct PrefixSum {
  std::vector<Index> sizes;    // cells_per_dim + 1
  std::vector<Index> stride;
  std::vector<std::int64_t> data;

  explicit PrefixSum(const UniformGrid& grid) {
    const Index d = grid.dim();
    sizes.resize(static_cast<std::size_t>(d));
    stride.resize(static_cast<std::size_t>(d));
    Index total = 1;
    for (Index k = d - 1; k >= 0; --k) {
      sizes[static_cast<std::size_t>(k)] = grid.cells_per_dim[static_cast<std::size_t>(k)] + 1;
      stride[static_cast<std::size_t>(k)] = total;
      total *= sizes[static_cast<std::size_t>(k)];
    }
    data.assign(static_cast<std::size_t>(total), 0);
  }

  void build(const UniformGrid& grid, const std::vector<std::uint8_t>& mask) {
    const Index d = grid.dim();
    std::fill(data.begin(), data.end(), 0);
    // scatter mask into the padded array at +1 offsets
    std::vector<Index> coords(static_cast<std::size_t>(d));
    const Index cells = grid.cell_count();
    for (Index c = 0; c < cells; ++c) {
      if (!mask[static_cast<std::size_t>(c)]) continue;
      grid.coords_of(c, coords.data());
      Index idx = 0;
      for (Index k = 0; k < d; ++k) {
        idx += (coords[static_cast<std::size_t>(k)] + 1) * stride[static_cast<std::size_t>(k)];
      }
      data[static_cast<std::size_t>(idx)] = 1;
    }
    // cumulative sums along each dimension
    const auto total = static_cast<Index>(data.size());
    for (Index k = 0; k < d; ++k) {
      const Index s = stride[static_cast<std::size_t>(k)];
      const Index n = sizes[static_cast<std::size_t>(k)];
      for (Index base = 0; base < total; ++base) {
        // only positions whose k-coordinate is zero start a scan line
        if ((base / s) % n != 0) continue;
        for (Index i = 1; i < n; ++i) {
          data[static_cast<std::size_t>(base + i * s)] +=
              data[static_cast<std::size_t>(base + (i - 1) * s)];
        }
      }
    }
  }

  // count of set cells in the index box [first, last] (inclusive)
  [[nodiscard]] std::int64_t count(const Index* first, const Index* last, Index d) const {
    std::int64_t total = 0;
    for (unsigned corner = 0; corner < (1u << d); ++corner) {
      Index idx = 0;
      int sign = 1;
      for (Index k = 0; k < d; ++k) {
        if (corner & (1u << k)) {
          idx += first[k] * stride[static_cast<std::size_t>(k)];
          sign = -sign;
        } else {
          idx += (last[k] + 1) * stride[static_cast<std::size_t>(k)];
        }
      }
      total += sign * data[static_cast<std::size_t>(idx)];
    }
    return total;
  }
};

struct BoxQuery {
  Index first[8];
  Index last[8];
  std::int64_t volume;
};

// successor index box of (cell, input, mode); false when it escapes the grid
inline bool successor_index_box(const SymbolicModel& model, Index cell, Index mode,
                                const double* shift, BoxQuery& q) {
  const Index d = model.grid.dim();
  const auto& pc = model.flow_centers[static_cast<std::size_t>(mode)];
  const Vector& r = model.grown_radius[static_cast<std::size_t>(mode)];
  q.volume = 1;
  for (Index k = 0; k < d; ++k) {
    const double ctr = pc[static_cast<std::size_t>(cell * d + k)] + shift[k];
    const double a = (ctr - r[k] - model.grid.lo[k]) / model.grid.eta[k];
    const double b = (ctr + r[k] - model.grid.lo[k]) / model.grid.eta[k];
    const auto fa = static_cast<Index>(std::floor(a));
    const auto fb = static_cast<Index>(std::ceil(b)) - 1;
    if (fa < 0 || fb >= model.grid.cells_per_dim[static_cast<std::size_t>(k)]) return false;
    q.first[k] = fa;
    q.last[k] = fb;
    q.volume *= fb - fa + 1;
  }
  return true;
}

}  // namespace

ReachStayResult synthesize_reach_stay(const SymbolicModel& model,
                                      const std::vector<std::uint8_t>& target,
                                      const std::vector<std::uint8_t>& safe) {
  const Index cells = model.grid.cell_count();
  const Index d = model.grid.dim();
  if (d > 8) throw std::invalid_argument("synthesis supports up to 8 dimensions");
  if (static_cast<Index>(target.size()) != cells ||
      static_cast<Index>(safe.size()) != cells) {
    throw std::invalid_argument("target/safe masks must cover the grid");
  }
  for (Index c = 0; c < cells; ++c) {
    if (target[static_cast<std::size_t>(c)] && !safe[static_cast<std::size_t>(c)]) {
      throw std::invalid_argument("target must be contained in the safe set");
    }
  }

  const Index modes = model.mode_count();
  const Index n_inputs = model.input_count();

  // per (mode, input) center shifts, flattened
  std::vector<double> shifts(static_cast<std::size_t>(modes * n_inputs * d));
  for (Index j = 0; j < modes; ++j) {
    for (Index u = 0; u < n_inputs; ++u) {
      const Vector s = model.inject[static_cast<std::size_t>(j)] *
                       model.inputs[static_cast<std::size_t>(u)];
      for (Index k = 0; k < d; ++k) {
        shifts[static_cast<std::size_t>((j * n_inputs + u) * d + k)] = s[k];
      }
    }
  }

  // target centroid for witness selection
  Vector centroid = Vector::Zero(d);
  Index target_cells = 0;
  for (Index c = 0; c < cells; ++c) {
    if (target[static_cast<std::size_t>(c)]) {
      centroid += model.grid.center(c);
      ++target_cells;
    }
  }
  if (target_cells > 0) centroid /= static_cast<double>(target_cells);

  ReachStayResult result;
  result.winning = target;
  result.input_of.assign(static_cast<std::size_t>(cells), -1);
  result.winning_count = target_cells;

  PrefixSum prefix(model.grid);
  const unsigned workers = std::max(1u, std::thread::hardware_concurrency());

  // picks, among inputs whose every successor box lies within `prefix`'s
  // set, the one steering the successor centers closest to the target
  // centroid; returns -1 when none is valid
  auto best_input = [&](Index c) -> std::int32_t {
    std::int32_t best = -1;
    double best_score = 0.0;
    BoxQuery q;
    for (Index u = 0; u < n_inputs; ++u) {
      bool ok = true;
      double score = 0.0;
      for (Index j = 0; j < modes && ok; ++j) {
        const double* shift = &shifts[static_cast<std::size_t>((j * n_inputs + u) * d)];
        if (!successor_index_box(model, c, j, shift, q) ||
            prefix.count(q.first, q.last, d) != q.volume) {
          ok = false;
          break;
        }
        const auto& pc = model.flow_centers[static_cast<std::size_t>(j)];
        for (Index k = 0; k < d; ++k) {
          const double gap = pc[static_cast<std::size_t>(c * d + k)] + shift[k] - centroid[k];
          score += gap * gap;
        }
      }
      if (ok && (best < 0 || score < best_score)) {
        best = static_cast<std::int32_t>(u);
        best_score = score;
      }
    }
    return best;
  };

  // fast existence scan (first valid input)
  auto any_input = [&](Index c) -> bool {
    BoxQuery q;
    for (Index u = 0; u < n_inputs; ++u) {
      bool ok = true;
      for (Index j = 0; j < modes; ++j) {
        const double* shift = &shifts[static_cast<std::size_t>((j * n_inputs + u) * d)];
        if (!successor_index_box(model, c, j, shift, q) ||
            prefix.count(q.first, q.last, d) != q.volume) {
          ok = false;
          break;
        }
      }
      if (ok) return true;
    }
    return false;
  };

  std::vector<Index> wave;
  while (true) {
    ++result.iterations;
    prefix.build(model.grid, result.winning);
    wave.clear();
    std::vector<std::vector<Index>> found(workers);
    std::vector<std::thread> pool;
    const Index chunk = (cells + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        const Index begin = static_cast<Index>(w) * chunk;
        const Index end = std::min(cells, begin + chunk);
        for (Index c = begin; c < end; ++c) {
          if (result.winning[static_cast<std::size_t>(c)] ||
              !safe[static_cast<std::size_t>(c)]) {
            continue;
          }
          if (any_input(c)) found[w].push_back(c);
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& f : found) wave.insert(wave.end(), f.begin(), f.end());
    if (wave.empty()) break;

    // choose witnesses against the same wave front, then commit
    std::vector<std::thread> pick;
    const Index wchunk = (static_cast<Index>(wave.size()) + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      pick.emplace_back([&, w] {
        const auto begin = static_cast<std::size_t>(w) * static_cast<std::size_t>(wchunk);
        const auto end =
            std::min(wave.size(), begin + static_cast<std::size_t>(wchunk));
        for (std::size_t i = begin; i < end; ++i) {
          result.input_of[static_cast<std::size_t>(wave[i])] = best_input(wave[i]);
        }
      });
    }
    for (auto& t : pick) t.join();
    for (Index c : wave) result.winning[static_cast<std::size_t>(c)] = 1;
    result.winning_count += static_cast<Index>(wave.size());
  }

  // target cells: keep the loop inside the final winning set when possible
  prefix.build(model.grid, result.winning);
  for (Index c = 0; c < cells; ++c) {
    if (target[static_cast<std::size_t>(c)] &&
        result.input_of[static_cast<std::size_t>(c)] < 0) {
      result.input_of[static_cast<std::size_t>(c)] = best_input(c);
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Recurrence supervisor
// ---------------------------------------------------------------------------

ControllerTable::Decision ControllerTable::decide(Index cell, int memory) const {
  Decision d;
  d.memory = memory;
  const auto& active_target = (memory == 0) ? target1 : target2;
  if (cell >= 0 && active_target[static_cast<std::size_t>(cell)]) {
    d.entered_target = true;
    d.memory = 1 - memory;
  }
  const auto& ctrl = (d.memory == 0) ? to_target1 : to_target2;
  if (cell < 0 || !ctrl.winning[static_cast<std::size_t>(cell)]) {
    d.input_index = -1;
    return d;
  }
  d.input_index = ctrl.input_of[static_cast<std::size_t>(cell)];
  return d;
}

void ControllerTable::write_csv(std::ostream& os) const {
  os << "cell,memory";
  for (Index k = 0; k < grid.dim(); ++k) os << ",u" << (k + 1);
  os << "\n";
  for (int memory = 0; memory <= 1; ++memory) {
    const auto& ctrl = (memory == 0) ? to_target1 : to_target2;
    for (Index c = 0; c < grid.cell_count(); ++c) {
      if (!ctrl.winning[static_cast<std::size_t>(c)]) continue;
      const std::int32_t u = ctrl.input_of[static_cast<std::size_t>(c)];
      if (u < 0) continue;
      os << c << "," << memory;
      const Vector& in = inputs[static_cast<std::size_t>(u)];
      for (Index k = 0; k < in.size(); ++k) os << "," << in[k];
      os << "\n";
    }
  }
}

ControllerTable build_recurrence_supervisor(const SymbolicModel& model,
                                            ReachStayResult to_target1,
                                            ReachStayResult to_target2,
                                            std::vector<std::uint8_t> target1,
                                            std::vector<std::uint8_t> target2) {
  const Index cells = model.grid.cell_count();
  auto uncovered = [&](const std::vector<std::uint8_t>& target,
                       const ReachStayResult& ctrl) {
    std::vector<Index> missing;
    for (Index c = 0; c < cells; ++c) {
      if (target[static_cast<std::size_t>(c)] && !ctrl.winning[static_cast<std::size_t>(c)]) {
        missing.push_back(c);
      }
    }
    return missing;
  };
  const auto miss1 = uncovered(target2, to_target1);  // T2 cells must reach T1
  const auto miss2 = uncovered(target1, to_target2);  // T1 cells must reach T2
  if (!miss1.empty() || !miss2.empty()) {
    std::ostringstream os;
    os << "recurrence supervisor preconditions failed:";
    auto list = [&os](const char* what, const std::vector<Index>& m) {
      if (m.empty()) return;
      os << " " << what << " uncovered cells (" << m.size() << "):";
      for (std::size_t i = 0; i < std::min<std::size_t>(m.size(), 8); ++i) os << " " << m[i];
      if (m.size() > 8) os << " ...";
    };
    list("target-2-to-target-1", miss1);
    list("target-1-to-target-2", miss2);
    throw std::invalid_argument(os.str());
  }

  ControllerTable table;
  table.grid = model.grid;
  table.inputs = model.inputs;
  table.to_target1 = std::move(to_target1);
  table.to_target2 = std::move(to_target2);
  table.target1 = std::move(target1);
  table.target2 = std::move(target2);
  return table;
}

}  // namespace shsnet
