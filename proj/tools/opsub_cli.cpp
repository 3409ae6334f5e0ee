// opsub: command-line front end for subspace fitting, hull projection and
// the approximation/timing experiments.
//
// Exit codes: 0 success, 1 usage error, 2 runtime error.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <typeinfo>
#include <vector>

#include "opsub/opsub.hpp"

namespace {

using namespace opsub;

constexpr int kUsage = 1;
constexpr int kRuntime = 2;

struct Options {
  FamilyParams family;
  std::optional<std::uint64_t> seed;
  Index grid = 16;
  std::vector<double> sigma{0.05, 0.3};
  std::vector<double> a{0.5, 2.0};
  std::vector<double> b{0.5, 2.0};
  std::vector<double> c1{-0.5, 0.5};
  std::vector<double> c2{-0.5, 0.5};

  std::string out;
  std::string family_path;
  std::string model_path;
  std::string hull_path;
  std::string hull_out;
  std::string operators_path;
  bool text = false;

  std::vector<Index> dims;
  std::vector<std::string> methods;
  std::vector<Index> sizes;
  int reps = 3;
  std::string method = "als";
  StoppingRule als;
  HullOptions hull;
  std::size_t dense_cap = kDefaultDenseCap;
};

Interval interval(const std::vector<double>& v, const char* name) {
  if (v.size() != 2) throw InvalidArgument(std::string("--") + name + " takes two values lo,hi");
  return {v[0], v[1]};
}

FamilyParams family_params(const Options& o) {
  FamilyParams p = o.family;
  p.set_grid(o.grid);
  p.sigma = interval(o.sigma, "sigma");
  p.a = interval(o.a, "a");
  p.b = interval(o.b, "b");
  p.c1 = interval(o.c1, "c1");
  p.c2 = interval(o.c2, "c2");
  if (o.seed) p.seed = *o.seed;
  return p;
}

Encoding encoding(const Options& o) { return o.text ? Encoding::Text : Encoding::Binary; }

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw InvalidArgument(std::string(flag) + " is required for this command");
}

void emit(const Options& o, const std::string& text) {
  if (o.out.empty() || o.out == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(o.out, std::ios::binary | std::ios::trunc);
  if (!f) throw FileError("cannot open " + o.out + " for writing");
  f << text;
}

int cmd_generate(const Options& o) {
  require(o.out, "--out");
  const Family fam = generate_family(family_params(o));
  write_family(o.out, fam, encoding(o));
  std::cerr << "wrote " << fam.size() << " operators to " << o.out << "\n";
  return 0;
}

int cmd_fit(const Options& o) {
  require(o.family_path, "--family");
  require(o.out, "--out");
  if (o.dims.empty() || o.dims.size() > 2) throw InvalidArgument("--dims takes I or I,J for fit");
  const Index ri = o.dims[0];
  const Index rj = o.dims.size() == 2 ? o.dims[1] : o.dims[0];
  const Family fam = read_family(o.family_path);
  SubspaceModel model = hosvd_init(fam, ri, rj);
  if (o.method == "als") model = als_fit(fam, ri, rj, model, o.als);
  else if (o.method != "hosvd") throw InvalidArgument("--method must be hosvd or als");
  write_model(o.out, model, encoding(o));
  if (!o.hull_out.empty()) write_hull(o.hull_out, build_hull(fam, model), encoding(o));
  std::cerr << "fit " << o.method << " |I|=" << ri << " |J|=" << rj
            << " relative error " << model.fit / total_energy(fam) << "\n";
  return 0;
}

int cmd_project(const Options& o) {
  require(o.model_path, "--model");
  require(o.hull_path, "--hull");
  require(o.operators_path, "--operators");
  const SubspaceModel model = read_model(o.model_path);
  const HullModel hull = read_hull(o.hull_path, model);
  const Family ops = read_operators(o.operators_path);
  std::ostringstream csv;
  csv << "operator,reduced_distance,orthogonal_distance,total_distance,norm,iterations,degenerate,lambda\n";
  for (std::size_t l = 0; l < ops.size(); ++l) {
    const CoeffMatrix c = project_coeffs(ops[l], model, l);
    const HullProjection p = project_onto_hull(c, hull, o.hull);
    HullDistance d{(p.coeffs.gamma - c.gamma).norm(), std::sqrt(residual_norm_sq(ops[l], model))};
    csv << l << ',' << detail::format_double(d.reduced) << ',' << detail::format_double(d.orthogonal) << ','
        << detail::format_double(d.total()) << ',' << detail::format_double(frobenius_norm(ops[l])) << ','
        << p.iterations << ',' << (p.degenerate ? 1 : 0) << ',';
    for (Index i = 0; i < p.weights.lambda.size(); ++i)
      csv << (i ? " " : "") << detail::format_double(p.weights.lambda(i));
    csv << '\n';
  }
  emit(o, csv.str());
  return 0;
}

ExperimentConfig experiment_config(const Options& o) {
  ExperimentConfig cfg;
  cfg.family = family_params(o);
  if (!o.dims.empty()) cfg.dims = o.dims;
  if (!o.methods.empty()) cfg.methods = o.methods;
  if (!o.sizes.empty()) cfg.sizes = o.sizes;
  cfg.reps = o.reps;
  cfg.als = o.als;
  cfg.dense_cap = o.dense_cap;
  if (!o.dims.empty()) cfg.timing_rank = o.dims.front();
  return cfg;
}

int report(const Options& o, const CurveResult& result) {
  for (const auto& n : result.notices) std::cerr << "notice: " << n << "\n";
  emit(o, encode_csv(result.records));
  return 0;
}

int cmd_approx_curve(const Options& o) {
  ExperimentConfig cfg = experiment_config(o);
  if (!o.family_path.empty()) return report(o, approx_curve(read_family(o.family_path), cfg));
  return report(o, approx_curve(generate_family(cfg.family),
                                cfg, GridShape{cfg.family.grid_rows, cfg.family.grid_cols}));
}

int cmd_timing_curve(const Options& o) { return report(o, timing_curve(experiment_config(o))); }

std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const TruncatedError*>(&e)) return "TruncatedError";
  if (dynamic_cast<const MalformedHeaderError*>(&e)) return "MalformedHeaderError";
  if (dynamic_cast<const MalformedPayloadError*>(&e)) return "MalformedPayloadError";
  if (dynamic_cast<const InconsistencyError*>(&e)) return "InconsistencyError";
  if (dynamic_cast<const FileError*>(&e)) return "FileError";
  if (dynamic_cast<const RankDeficiencyError*>(&e)) return "RankDeficiencyError";
  if (dynamic_cast<const SizeCapError*>(&e)) return "SizeCapError";
  if (dynamic_cast<const DimensionError*>(&e)) return "DimensionError";
  if (dynamic_cast<const InvalidArgument*>(&e)) return "InvalidArgument";
  return "Error";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Operator subspace estimation and convex-hull projection"};
  app.set_config("--config", "", "Flat key=value file; command-line flags take precedence");
  app.require_subcommand(1, 1);
  app.fallthrough();

  Options o;
  app.add_option("--seed", o.seed, "RNG seed for generated families");
  app.add_option("--out", o.out, "Output path (CSV commands default to stdout)");
  app.add_option("--grid", o.grid, "Grid side g; operators are g^2 x g^2")->capture_default_str();
  app.add_option("--pairs", o.family.pairs, "Pairs per operator (K)")->capture_default_str();
  app.add_option("--count", o.family.operators, "Operators in the family (L)")->capture_default_str();
  app.add_option("--sigma", o.sigma, "Gaussian width interval lo,hi")->delimiter(',')->capture_default_str();
  app.add_option("--a", o.a, "Quadratic x-weight interval lo,hi")->delimiter(',')->capture_default_str();
  app.add_option("--b", o.b, "Quadratic y-weight interval lo,hi")->delimiter(',')->capture_default_str();
  app.add_option("--c1", o.c1, "Quadratic x-center interval lo,hi")->delimiter(',')->capture_default_str();
  app.add_option("--c2", o.c2, "Quadratic y-center interval lo,hi")->delimiter(',')->capture_default_str();
  app.add_option("--c-min", o.family.c_min, "Lower end of the beta range")->capture_default_str();
  app.add_option("--c-max", o.family.c_max, "Upper end of the beta range")->capture_default_str();
  app.add_flag("--text", o.text, "Write text containers instead of binary");

  app.add_option("--family", o.family_path, "Operator family file (OPFAM1)");
  app.add_option("--model", o.model_path, "Subspace model file (SSM1)");
  app.add_option("--hull", o.hull_path, "Hull model file (HUL1)");
  app.add_option("--hull-out", o.hull_out, "Write the hull of the fitted family here");
  app.add_option("--operators", o.operators_path, "Operators to project (OPF1 or OPFAM1)");

  app.add_option("--dims", o.dims, "Basis sizes: I[,J] for fit, a sweep for approx-curve")->delimiter(',');
  app.add_option("--methods", o.methods, "Subset of DCT,SVD,HOSVD,ALS")->delimiter(',');
  app.add_option("--sizes", o.sizes, "Operator sizes n for timing-curve")->delimiter(',');
  app.add_option("--reps", o.reps, "Timing repetitions (median reported)")->capture_default_str();
  app.add_option("--method", o.method, "Fit method: hosvd or als")->capture_default_str();
  app.add_option("--max-iters", o.als.max_iters, "ALS iteration cap")->capture_default_str();
  app.add_option("--rel-tol", o.als.rel_tol, "ALS relative decrease tolerance")->capture_default_str();
  app.add_option("--k-end", o.hull.k_end, "Hull projection iteration cap")->capture_default_str();
  app.add_option("--hull-tol", o.hull.rel_tol, "Hull projection stopping tolerance")->capture_default_str();
  app.add_option("--dense-cap", o.dense_cap, "Entry cap for dense baselines")->capture_default_str();

  auto* generate = app.add_subcommand("generate", "Write a simulated operator family");
  auto* fit = app.add_subcommand("fit", "Fit a Tucker-2 subspace (and optionally its hull)");
  auto* project = app.add_subcommand("project", "Project operators onto a hull");
  auto* approx = app.add_subcommand("approx-curve", "Relative error versus basis size");
  auto* timing = app.add_subcommand("timing-curve", "Wall time versus operator size");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (generate->parsed()) return cmd_generate(o);
    if (fit->parsed()) return cmd_fit(o);
    if (project->parsed()) return cmd_project(o);
    if (approx->parsed()) return cmd_approx_curve(o);
    if (timing->parsed()) return cmd_timing_curve(o);
  } catch (const InvalidArgument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << error_kind(e) << ": " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}
