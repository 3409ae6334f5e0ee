#pragma once

#include <algorithm>
#include <chrono>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "opsub/error.hpp"
#include "opsub/factored_operator.hpp"
#include "opsub/io.hpp"
#include "opsub/simgen.hpp"
#include "opsub/subspace.hpp"

namespace opsub {

struct GridShape {
  Index rows = 0;
  Index cols = 0;
};

struct ExperimentConfig {
  FamilyParams family;
  std::vector<Index> dims{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 12, 14, 16, 18, 20, 25, 30};
  std::vector<std::string> methods{"DCT", "SVD", "HOSVD", "ALS"};
  std::vector<Index> sizes{64, 128, 256, 512};
  int reps = 3;
  Index timing_rank = 10;
  StoppingRule als;
  std::size_t dense_cap = kDefaultDenseCap;

  void validate() const {
    auto ascending = [](const std::vector<Index>& v) {
      return !v.empty() && std::is_sorted(v.begin(), v.end()) &&
             std::adjacent_find(v.begin(), v.end()) == v.end();
    };
    if (!ascending(dims)) throw InvalidArgument("dimension sweep must be non-empty and ascending");
    if (!ascending(sizes)) throw InvalidArgument("size sweep must be non-empty and ascending");
    if (dims.front() < 0) throw InvalidArgument("dimensions must be nonnegative");
    if (reps < 1) throw InvalidArgument("repetitions must be positive");
    if (methods.empty()) throw InvalidArgument("no methods selected");
    for (const auto& m : methods)
      if (m != "DCT" && m != "SVD" && m != "HOSVD" && m != "ALS")
        throw InvalidArgument("unknown method " + m);
  }

  bool runs(const std::string& method) const {
    return std::find(methods.begin(), methods.end(), method) != methods.end();
  }
};

struct CurveResult {
  std::vector<ExperimentRecord> records;
  std::vector<std::string> notices;
};

/// Relative approximation error sum_l ||S_l - P(S_l)||^2 / sum_l ||S_l||^2
/// against |I| = |J| = d for each requested method. The DCT comparator uses
/// the 2-D transform when the family lives on a known grid.
inline CurveResult approx_curve(const Family& samples, const ExperimentConfig& config,
                                std::optional<GridShape> grid = std::nullopt) {
  config.validate();
  const auto [m, n] = family_shape(samples);
  const double energy = total_energy(samples);
  if (!(energy > 0.0)) throw InvalidArgument("family has zero energy");
  const Index dmax = config.dims.back();
  CurveResult out;
  auto push = [&](const char* method, Index d, double fit) {
    out.records.push_back({method, m, d, fit / energy});
  };

  if (config.runs("DCT")) {
    for (Index d : config.dims) {
      if (d > std::min(m, n)) throw InvalidArgument("dimension exceeds the operator size");
      auto e = grid && grid->rows * grid->cols == m ? dct_basis_2d(grid->rows, grid->cols, d, Mode::Output)
                                                    : dct_basis(m, d, Mode::Output);
      auto f = grid && grid->rows * grid->cols == n ? dct_basis_2d(grid->rows, grid->cols, d, Mode::Input)
                                                    : dct_basis(n, d, Mode::Input);
      push("DCT", d, fit_value(samples, e, f));
    }
  }

  if (config.runs("SVD")) {
    try {
      const auto curve = full_svd_baseline(samples, config.dense_cap);
      for (Index d : config.dims)
        push("SVD", d, curve[static_cast<std::size_t>(std::min<Index>(d, static_cast<Index>(samples.size())))]);
    } catch (const SizeCapError& e) {
      out.notices.push_back(std::string("SVD baseline skipped: ") + e.what());
    }
  }

  if (config.runs("HOSVD") || config.runs("ALS")) {
    // Bases for smaller d are prefixes of the basis for dmax.
    const SubspaceModel full = hosvd_init(samples, dmax, dmax);
    for (Index d : config.dims) {
      const SubspaceModel hosvd = fixed_model(samples, full.E.leading(d), full.F.leading(d));
      if (config.runs("HOSVD")) push("HOSVD", d, hosvd.fit);
      if (config.runs("ALS")) push("ALS", d, als_fit(samples, d, d, hosvd, config.als).fit);
    }
  }
  return out;
}

namespace detail {

template <class Fn>
double median_seconds(int reps, Fn&& fn) {
  using clock = std::chrono::steady_clock;
  fn();  // warm-up, discarded
  std::vector<double> times;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = clock::now();
    fn();
    times.push_back(std::chrono::duration<double>(clock::now() - t0).count());
  }
  std::sort(times.begin(), times.end());
  const std::size_t mid = times.size() / 2;
  return times.size() % 2 ? times[mid] : 0.5 * (times[mid - 1] + times[mid]);
}

}  // namespace detail

/// Median wall time of each method per operator size n (operators n x n,
/// families drawn on a near-square grid with rows * cols = n). Runs serially.
inline CurveResult timing_curve(const ExperimentConfig& config) {
  config.validate();
  CurveResult out;
  for (Index n : config.sizes) {
    FamilyParams params = config.family;
    params.set_size(n);
    const Family samples = generate_family(params);
    const Index rank = std::min({config.timing_rank, n, total_pairs(samples)});
    volatile double sink = 0.0;

    if (config.runs("DCT"))
      out.records.push_back({"DCT", n, rank, detail::median_seconds(config.reps, [&] {
                               auto e = dct_basis_2d(params.grid_rows, params.grid_cols, rank, Mode::Output);
                               auto f = dct_basis_2d(params.grid_rows, params.grid_cols, rank, Mode::Input);
                               sink = fit_value(samples, e, f);
                             })});
    if (config.runs("SVD")) {
      const std::size_t entries = static_cast<std::size_t>(n) * static_cast<std::size_t>(n) * samples.size();
      if (entries > config.dense_cap)
        out.notices.push_back("SVD timing skipped at n=" + std::to_string(n) + ": over the dense size cap");
      else
        out.records.push_back({"SVD", n, rank, detail::median_seconds(config.reps, [&] {
                                 sink = full_svd_baseline(samples, config.dense_cap)[static_cast<std::size_t>(
                                     std::min<Index>(rank, static_cast<Index>(samples.size())))];
                               })});
    }
    if (config.runs("HOSVD"))
      out.records.push_back({"HOSVD", n, rank, detail::median_seconds(config.reps, [&] {
                               sink = hosvd_init(samples, rank, rank).fit;
                             })});
    if (config.runs("ALS"))
      out.records.push_back({"ALS", n, rank, detail::median_seconds(config.reps, [&] {
                               sink = als_fit(samples, rank, rank, hosvd_init(samples, rank, rank), config.als).fit;
                             })});
    (void)sink;
  }
  return out;
}

}  // namespace opsub
