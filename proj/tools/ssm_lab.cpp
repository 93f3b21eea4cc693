// ssm-lab: command-line front end for the self-similar measure toolkit.
// Subcommands render measures, profile dyadic entropy, fit Fourier decay,
// simulate random models, verify the block-model disintegration, and scan
// the Erdos-Kahane bad set. Every run writes its artifacts under --out and
// prints a one-line JSON summary to stdout.

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "ssm/dimension.hpp"
#include "ssm/disintegration.hpp"
#include "ssm/render.hpp"
#include "ssm/serialize.hpp"
#include "ssm/spectral.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ssm;

namespace {

struct CommonOptions {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  int depth = 10;
  std::string levels = "1..8";
  int grid = 0;
  std::size_t budget = kDefaultAtomBudget;
  double tolerance = kAtomTolerance;
  std::string prefix;
  std::string lambda_text;
};

void add_common(CLI::App* cmd, CommonOptions& opt, bool needs_config = true) {
  auto* c = cmd->add_option("--config", opt.config, "input JSON config");
  if (needs_config) c->required();
  cmd->add_option("--out", opt.out, "output directory");
  cmd->add_option("--seed", opt.seed, "root seed for stochastic draws");
  cmd->add_option("--depth", opt.depth, "truncation depth / block count");
  cmd->add_option("--levels", opt.levels, "level range A..B");
  cmd->add_option("--grid", opt.grid, "grid resolution");
  cmd->add_option("--budget", opt.budget, "atom budget");
  cmd->add_option("--tolerance", opt.tolerance, "atom coincidence tolerance");
  cmd->add_option("--prefix", opt.prefix, "explicit omega prefix, e.g. A,B,A");
  cmd->add_option("--lambda", opt.lambda_text, "lambda as re,im");
}

std::pair<int, int> parse_levels(const std::string& text) {
  const auto dots = text.find("..");
  if (dots == std::string::npos)
    throw std::invalid_argument("levels must be a range A..B");
  const int a = std::stoi(text.substr(0, dots));
  const int b = std::stoi(text.substr(dots + 2));
  if (a > b) throw std::invalid_argument("levels range is empty");
  return {a, b};
}

Complex parse_complex_pair(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos)
    throw std::invalid_argument("expected re,im");
  return {std::stod(text.substr(0, comma)), std::stod(text.substr(comma + 1))};
}

json load_config(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // byte offset -> line/column for the diagnostic
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw std::invalid_argument("malformed JSON in " + path + " at line " +
                                std::to_string(line) + ", column " + std::to_string(col));
  }
}

std::vector<int> parse_prefix(const Model& model, const std::string& text) {
  std::vector<int> out;
  std::istringstream in(text);
  std::string name;
  while (std::getline(in, name, ',')) {
    const auto it = std::find(model.names.begin(), model.names.end(), name);
    if (it == model.names.end())
      throw std::invalid_argument("prefix references unknown system " + name);
    out.push_back(static_cast<int>(it - model.names.begin()));
  }
  return out;
}

// kinds of config payloads
enum class ConfigKind { IfsConfig, ModelConfig, PlanConfig };

ConfigKind config_kind(const json& j) {
  if (j.contains("systems")) return ConfigKind::ModelConfig;
  if (j.contains("maps")) return ConfigKind::IfsConfig;
  if (j.contains("translations")) return ConfigKind::PlanConfig;
  throw std::invalid_argument(
      "config must contain \"maps\" (IFS), \"systems\" (model), or "
      "\"translations\" (plan)");
}

// builds the working measure for render/entropy/dim/fourier
DiscreteMeasure measure_from_config(const json& j, const CommonOptions& opt) {
  switch (config_kind(j)) {
    case ConfigKind::IfsConfig:
      return ifs_truncation(ifs_from_json(j), opt.depth, opt.budget);
    case ConfigKind::ModelConfig: {
      Model model = model_from_json(j);
      if (opt.seed) model.selection.seed = *opt.seed;
      const auto omega = model.omega(
          opt.depth, opt.prefix.empty() ? std::vector<int>{} : parse_prefix(model, opt.prefix));
      return eta_truncated(model, omega, opt.budget);
    }
    case ConfigKind::PlanConfig: {
      const DisintegrationPlan plan = plan_from_json(j);
      const Complex lambda = opt.lambda_text.empty() ? json_lambda(j)
                                                     : parse_complex_pair(opt.lambda_text);
      return ifs_truncation(plan.base_ifs(lambda), opt.depth, opt.budget);
    }
  }
  throw std::logic_error("unreachable");
}

void emit(const json& summary) {
  std::string err;
  if (!validate_summary(summary, &err))
    throw std::logic_error("summary failed schema validation: " + err);
  std::cout << summary.dump() << std::endl;
}

std::string out_path(const CommonOptions& opt, const std::string& name) {
  fs::create_directories(opt.out);
  return (fs::path(opt.out) / name).string();
}

// ---- subcommands ------------------------------------------------------------

int run_render(const CommonOptions& opt) {
  const DiscreteMeasure mu = measure_from_config(load_config(opt.config), opt);
  const int res = opt.grid > 0 ? opt.grid : 512;
  const auto png = render_png(mu, res);
  write_file(out_path(opt, "render.png"), png);
  emit({{"subcommand", "render"},
        {"ok", true},
        {"atoms", mu.size()},
        {"resolution", res},
        {"occupancy", pixel_occupancy(mu, res)},
        {"outputs", {"render.png"}}});
  return 0;
}

int run_entropy(const CommonOptions& opt) {
  const DiscreteMeasure mu = measure_from_config(load_config(opt.config), opt);
  const auto [lo, hi] = parse_levels(opt.levels);
  std::vector<int> levels;
  for (int n = std::max(1, lo); n <= hi; ++n) levels.push_back(n);
  const DimensionReport report = entropy_dimension_curve(mu, levels);

  std::ostringstream csv;
  csv << "level,entropy_bits,normalized,trusted\n";
  for (std::size_t i = 0; i < report.levels.size(); ++i)
    csv << report.levels[i] << ','
        << report.normalized_entropies[i] * report.levels[i] << ','
        << report.normalized_entropies[i] << ',' << (report.trusted[i] ? 1 : 0) << '\n';
  write_file(out_path(opt, "entropy.csv"), csv.str());

  emit({{"subcommand", "entropy"},
        {"ok", true},
        {"atoms", mu.size()},
        {"slope", report.slope},
        {"saturation_level", report.saturation_level},
        {"outputs", {"entropy.csv"}}});
  return 0;
}

int run_dim(const CommonOptions& opt) {
  const DiscreteMeasure mu = measure_from_config(load_config(opt.config), opt);
  const auto [lo, hi] = parse_levels(opt.levels);
  std::vector<int> levels;
  for (int n = std::max(1, lo); n <= hi; ++n) levels.push_back(n);
  DimensionReport report = entropy_dimension_curve(mu, levels);

  const double radius = std::max(mu.support_radius(), 1e-6);
  std::vector<double> radii;
  for (int j = 0; j < 9; ++j)
    radii.push_back(radius * 0.4 * std::pow(0.01, (8 - j) / 8.0));
  report.local_samples =
      local_dimension_samples(mu, radii, 16, opt.seed.value_or(1));

  double mean_local = 0.0;
  for (const auto& [x, s] : report.local_samples) mean_local += s;
  if (!report.local_samples.empty())
    mean_local /= static_cast<double>(report.local_samples.size());

  const int effective_grid = opt.grid > 0 ? opt.grid : default_direction_grid(2);
  const int sat = satdim_estimate(mu, 0.1, 2, 1, effective_grid);

  json local = json::array();
  for (const auto& [x, s] : report.local_samples)
    local.push_back({{"re", x.real()}, {"im", x.imag()}, {"slope", s}});
  json doc{{"levels", report.levels},
           {"normalized_entropies", report.normalized_entropies},
           {"entropy_slope", report.slope},
           {"local_dimension_mean", mean_local},
           {"local_samples", local},
           {"satdim", sat},
           {"direction_grid", effective_grid}};
  write_file(out_path(opt, "dim.json"), doc.dump(2) + "\n");

  emit({{"subcommand", "dim"},
        {"ok", true},
        {"entropy_slope", report.slope},
        {"local_dimension_mean", mean_local},
        {"satdim", sat},
        {"outputs", {"dim.json"}}});
  return 0;
}

int run_fourier(const CommonOptions& opt) {
  const DiscreteMeasure mu = measure_from_config(load_config(opt.config), opt);
  const auto [lo, hi] = parse_levels(opt.levels);
  const int samples = opt.grid > 0 ? opt.grid : 64;
  const DecayFitReport fit = decay_exponent(mu, lo, hi, samples, {0.0, 0.785398163, 1.570796327});

  std::ostringstream csv;
  csv << "band,center,envelope,fitted,flagged\n";
  for (const auto& band : fit.bands)
    csv << band.j << ',' << band.center << ',' << band.envelope << ','
        << fit.fitted_envelope(band.center) << ',' << (band.floor_flagged ? 1 : 0)
        << '\n';
  write_file(out_path(opt, "decay.csv"), csv.str());

  emit({{"subcommand", "fourier"},
        {"ok", true},
        {"sigma", fit.sigma},
        {"atom_floor_frequency", fit.atom_floor_frequency},
        {"outputs", {"decay.csv"}}});
  return 0;
}

int run_model_sim(const CommonOptions& opt) {
  if (!opt.seed)
    throw std::invalid_argument("model-sim is stochastic: --seed is mandatory");
  Model model = model_from_json(load_config(opt.config));
  model.selection.seed = *opt.seed;
  const auto omega = model.omega(
      opt.depth, opt.prefix.empty() ? std::vector<int>{} : parse_prefix(model, opt.prefix));

  std::ostringstream csv;
  csv << "n,words,delta_n,k_prime\n";
  for (int n = 1; n <= opt.depth; ++n) {
    const std::vector<int> head(omega.begin(), omega.begin() + n);
    std::string delta = "";
    try {
      delta = std::to_string(delta_n(model, head, opt.budget, opt.tolerance));
    } catch (const BudgetError&) {
      delta = "budget";
    }
    std::string kp = "";
    try {
      kp = std::to_string(k_prime(model, omega, n));
    } catch (const std::invalid_argument&) {
      kp = "short";
    }
    std::size_t words = 1;
    try {
      words = word_space_size(model, head, opt.budget);
    } catch (const BudgetError&) {
      words = 0;
    }
    csv << n << ',' << words << ',' << delta << ',' << kp << '\n';
  }
  write_file(out_path(opt, "model_sim.csv"), csv.str());

  bool self_similar = true;
  const int check_n = std::min(opt.depth, 6);
  if (check_n >= 2) {
    const std::vector<int> head(omega.begin(), omega.begin() + check_n);
    for (int k = 1; k < check_n && k <= 3; ++k)
      self_similar =
          self_similar && verify_dynamic_self_similarity(model, head, k, opt.budget).equal;
  }

  emit({{"subcommand", "model-sim"},
        {"ok", true},
        {"sdim", model_sdim(model)},
        {"non_degenerate", model.non_degenerate(opt.tolerance)},
        {"max_rotation_imag", model.max_rotation_imaginary()},
        {"dynamic_self_similarity", self_similar},
        {"outputs", {"model_sim.csv"}}});
  return 0;
}

int run_disintegrate(const CommonOptions& opt) {
  const json j = load_config(opt.config);
  const DisintegrationPlan plan = plan_from_json(j);
  const Complex lambda =
      opt.lambda_text.empty() ? json_lambda(j) : parse_complex_pair(opt.lambda_text);

  const int blocks = std::max(1, std::min(opt.depth, 4));
  const auto identity = verify_disintegration(plan, lambda, blocks, opt.budget);

  const BlockModel bm = build_block_model(plan, lambda, opt.budget);
  const double sdim_model = model_sdim(bm.model);
  const double sdim_closed = block_sdim_closed_form(plan, lambda);

  const int s = plan.split_period;
  const auto omega_blocks = bm.model.omega(s);  // one group
  const auto split_res = verify_split_identity(plan, lambda, omega_blocks, opt.budget);
  const SplitModels split = split_model(plan, lambda, opt.budget);
  const auto report = nondegeneracy_check(plan, lambda, opt.tolerance);

  json q = json::array();
  for (std::size_t i = 0; i < bm.index_set.size(); ++i)
    q.push_back({{"counts", bm.index_set[i].label()},
                 {"q", format_rational(bm.model.selection.marginal[i])}});
  json doc{
      {"lambda", {lambda.real(), lambda.imag()}},
      {"block_weights", q},
      {"disintegration_identity",
       {{"equal", identity.equal},
        {"max_atom_mismatch", identity.max_atom_mismatch},
        {"weight_residue", format_rational(identity.weight_residue)},
        {"detail", identity.detail}}},
      {"split_identity",
       {{"equal", split_res.equal},
        {"max_atom_mismatch", split_res.max_atom_mismatch},
        {"weight_residue", format_rational(split_res.weight_residue)}}},
      {"sdim", {{"model", sdim_model}, {"closed_form", sdim_closed}}},
      {"sdim_prime", model_sdim(split.keep_last)},
      {"sdim_double_prime", model_sdim(split.drop_last)},
      {"non_degenerate", report.block_model_non_degenerate},
      {"shared_fixed_point", report.shared_fixed_point},
      {"pair_root_residual", std::abs(report.pair_root_value)}};
  write_file(out_path(opt, "disintegration.json"), doc.dump(2) + "\n");

  const bool ok = identity.equal && split_res.equal &&
                  std::abs(sdim_model - sdim_closed) < 1e-9;
  emit({{"subcommand", "disintegrate"},
        {"ok", ok},
        {"disintegration_identity", identity.equal},
        {"split_identity", split_res.equal},
        {"sdim", sdim_model},
        {"outputs", {"disintegration.json"}}});
  return ok ? 0 : 1;
}

int run_ek_scan(const CommonOptions& opt) {
  const json j = load_config(opt.config);
  BadSetParams params;
  if (j.contains("domain")) {
    params.domain.a = j["domain"].value("a", params.domain.a);
    params.domain.b = j["domain"].value("b", params.domain.b);
    params.domain.im_min = j["domain"].value("eta", params.domain.im_min);
  }
  params.rho = j.value("rho", params.rho);
  params.delta = j.value("delta", params.delta);
  params.M = opt.depth > 0 ? opt.depth : j.value("M", params.M);
  if (opt.grid > 0) params.grid_re = params.grid_im = opt.grid;

  std::vector<Complex> betas{{1.0, 0.0}, {1.0, 0.0}};
  if (j.contains("betas")) {
    betas.clear();
    for (const auto& b : j["betas"])
      betas.emplace_back(b[0].get<double>(), b[1].get<double>());
  }
  const std::uint64_t seed = opt.seed.value_or(j.value("seed", 1ull));
  const auto blocks = compact_ek_blocks(seed, params.M + 1,
                                        j.value("max_core_len", 4),
                                        static_cast<int>(betas.size()));
  const BadSetReport report = bad_set_scan(blocks, betas, params);

  std::ostringstream csv;
  csv << "theta_re,theta_im,in_domain,resolved,bad,exceed_count\n";
  for (const auto& cell : report.cells)
    csv << cell.re << ',' << cell.im << ',' << (cell.in_domain ? 1 : 0) << ','
        << (cell.resolved ? 1 : 0) << ',' << (cell.bad ? 1 : 0) << ','
        << cell.exceed_count << '\n';
  write_file(out_path(opt, "ekscan.csv"), csv.str());

  // heat map: grey outside the domain, dark blue resolved-good, yellow bad
  std::vector<std::uint8_t> rgb(static_cast<size_t>(report.grid_re) * report.grid_im * 3);
  for (std::size_t i = 0; i < report.cells.size(); ++i) {
    const auto& cell = report.cells[i];
    std::uint8_t* px = &rgb[i * 3];
    if (!cell.in_domain) {
      px[0] = px[1] = px[2] = 30;
    } else if (!cell.resolved) {
      px[0] = px[1] = px[2] = 110;
    } else if (cell.bad) {
      px[0] = 253;
      px[1] = 231;
      px[2] = 37;
    } else {
      px[0] = 68;
      px[1] = 1;
      px[2] = 84;
    }
  }
  write_file(out_path(opt, "ekscan.png"),
             png_from_rgb(report.grid_re, report.grid_im, rgb));

  emit({{"subcommand", "ek-scan"},
        {"ok", true},
        {"M", params.M},
        {"domain_cells", report.domain_cells},
        {"resolved_cells", report.resolved_cells},
        {"bad_cells", report.bad_cells},
        {"bad_fraction", report.bad_fraction},
        {"ball_radius_target", report.ball_radius_target},
        {"ball_count_target", report.ball_count_target},
        {"outputs", {"ekscan.csv", "ekscan.png"}}});
  return 0;
}

int run_verify(const CommonOptions& opt) {
  const json j = load_config(opt.config);
  json summary{{"subcommand", "verify"}};
  bool ok = true;

  if (config_kind(j) == ConfigKind::PlanConfig) {
    const DisintegrationPlan plan = plan_from_json(j);
    const Complex lambda =
        opt.lambda_text.empty() ? json_lambda(j) : parse_complex_pair(opt.lambda_text);
    const auto identity = verify_disintegration(plan, lambda, std::min(opt.depth, 3), opt.budget);
    const BlockModel bm = build_block_model(plan, lambda, opt.budget);
    const auto split_res =
        verify_split_identity(plan, lambda, bm.model.omega(plan.split_period), opt.budget);
    const bool sdim_ok = std::abs(model_sdim(bm.model) -
                                  block_sdim_closed_form(plan, lambda)) < 1e-9;
    ok = identity.equal && split_res.equal && sdim_ok;
    summary["disintegration_identity"] = identity.equal;
    summary["split_identity"] = split_res.equal;
    summary["sdim_identity"] = sdim_ok;
  } else {
    Model model = config_kind(j) == ConfigKind::ModelConfig
                      ? model_from_json(j)
                      : Model({"A"}, {ifs_from_json(j)},
                              SelectionProcess::bernoulli({Rational(1)}, 0));
    if (!model.systems[0].is_homogeneous())
      throw std::invalid_argument("verify on a raw IFS needs a homogeneous system");
    if (opt.seed) model.selection.seed = *opt.seed;
    const int n = std::max(2, std::min(opt.depth, 12));
    const auto omega = model.omega(
        n, opt.prefix.empty() ? std::vector<int>{} : parse_prefix(model, opt.prefix));

    bool self_similar = true;
    for (int k = 1; k < n && k <= 3; ++k)
      self_similar =
          self_similar && verify_dynamic_self_similarity(model, omega, k, opt.budget).equal;

    Rational weight_sum = 0;
    double max_radius = 0.0;
    enumerate_eta(
        model, omega,
        [&](Complex z, const Rational& w) {
          weight_sum += w;
          max_radius = std::max(max_radius, std::abs(z));
        },
        opt.budget);
    const bool weights_ok = weight_sum == Rational(1);
    const bool support_ok = max_radius <= model.support_radius();

    bool convolution_ok = true;
    try {
      convolution_ok = verify_convolution_decomposition(model, omega, 0, 2, opt.budget).equal;
    } catch (const std::invalid_argument&) {
      // prefix too short to resolve n'
    }

    ok = self_similar && weights_ok && support_ok && convolution_ok;
    summary["dynamic_self_similarity"] = self_similar;
    summary["weights_sum_to_one"] = weights_ok;
    summary["support_bound"] = support_ok;
    summary["convolution_decomposition"] = convolution_ok;
  }
  summary["ok"] = ok;
  emit(summary);
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"self-similar measure laboratory"};
  app.require_subcommand(1);

  CommonOptions opt;
  int (*handler)(const CommonOptions&) = nullptr;

  auto* render = app.add_subcommand("render", "rasterize a measure to PNG");
  add_common(render, opt);
  render->callback([&] { handler = run_render; });

  auto* entropy_cmd = app.add_subcommand("entropy", "dyadic entropy curve");
  add_common(entropy_cmd, opt);
  entropy_cmd->callback([&] { handler = run_entropy; });

  auto* dim = app.add_subcommand("dim", "dimension diagnostics");
  add_common(dim, opt);
  dim->callback([&] { handler = run_dim; });

  auto* fourier_cmd = app.add_subcommand("fourier", "Fourier decay fit");
  add_common(fourier_cmd, opt);
  fourier_cmd->callback([&] { handler = run_fourier; });

  auto* sim = app.add_subcommand("model-sim", "random model diagnostics");
  add_common(sim, opt);
  sim->callback([&] { handler = run_model_sim; });

  auto* dis = app.add_subcommand("disintegrate", "block-model disintegration report");
  add_common(dis, opt);
  dis->callback([&] { handler = run_disintegrate; });

  auto* scan = app.add_subcommand("ek-scan", "Erdos-Kahane bad-set scan");
  add_common(scan, opt);
  scan->callback([&] { handler = run_ek_scan; });

  auto* verify = app.add_subcommand("verify", "identity verification suite");
  add_common(verify, opt);
  verify->callback([&] { handler = run_verify; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (opt.budget == 0) throw std::invalid_argument("budget must be positive");
    return handler(opt);
  } catch (const BudgetError& e) {
    emit({{"subcommand", app.get_subcommands().front()->get_name()},
          {"ok", false},
          {"error", e.what()},
          {"kind", "budget"}});
    return 2;
  } catch (const std::exception& e) {
    emit({{"subcommand", app.get_subcommands().front()->get_name()},
          {"ok", false},
          {"error", e.what()}});
    return 1;
  }
}
