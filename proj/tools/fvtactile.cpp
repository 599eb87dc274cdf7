// fvtactile: command-line front end for the simulator, skills, learning and
// the assembly script.

#include "fvtactile/harness.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace {

using fvt::Error;
using fvt::Json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::map<std::string, double> parse_assignments(const std::vector<std::string>& items, const std::string& flag) {
  std::map<std::string, double> out;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError(flag + " expects key=value, got '" + item + "'");
    const std::string key = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);
    try {
      std::size_t used = 0;
      const double v = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
      // Command-line values come first and win over the config file.
      out.emplace(key, v);
    } catch (const std::exception&) {
      throw UsageError(flag + " " + key + ": '" + value + "' is not a number");
    }
  }
  return out;
}

std::string scalar_text(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
  if (v.is_number()) return fvt::format_number(v.get<double>());
  throw UsageError("unsupported value " + v.dump());
}

/// Turns a JSON config object into extra arguments appended after the
/// command line; every option takes its first value, so explicit flags win.
std::vector<std::string> config_arguments(const std::string& path, const CLI::App& sub) {
  Json j;
  try {
    j = fvt::read_json(path);
  } catch (const Error& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw UsageError("config " + path + ": top level must be an object");

  std::set<std::string> known;
  for (const auto* opt : sub.get_options()) {
    for (const auto& n : opt->get_lnames()) known.insert(n);
  }
  known.erase("config");
  known.erase("help");

  std::vector<std::string> args;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = it.key();
    if (key == "schema_version") continue;
    if (!known.count(key)) {
      std::string list;
      for (const auto& k : known) list += (list.empty() ? "" : ", ") + k;
      throw UsageError("config " + path + ": unknown field '" + key + "' for '" + sub.get_name() +
                       "' (known: " + list + ")");
    }
    const Json& v = it.value();
    const std::string flag = "--" + key;
    try {
      if (v.is_boolean()) {
        if (v.get<bool>()) args.push_back(flag);
      } else if (v.is_object()) {
        for (auto kv = v.begin(); kv != v.end(); ++kv) {
          args.push_back(flag);
          args.push_back(kv.key() + "=" + scalar_text(kv.value()));
        }
      } else if (v.is_array()) {
        for (const auto& item : v) {
          args.push_back(flag);
          args.push_back(scalar_text(item));
        }
      } else {
        args.push_back(flag);
        args.push_back(scalar_text(v));
      }
    } catch (const UsageError& e) {
      throw UsageError("config " + path + ": field '" + key + "': " + e.what());
    }
  }
  return args;
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("io", "cannot write " + path.string());
  return out;
}

// ---------------------------------------------------------------------------

struct Common {
  std::uint64_t seed = 0;
  std::string out;
  std::optional<int> frames;
  std::string config;
};

void add_common(CLI::App* sub, Common& c, bool frames) {
  sub->add_option("--seed", c.seed, "random seed");
  sub->add_option("--out", c.out, "output path");
  if (frames) sub->add_option("--frames", c.frames, "number of frames")->check(CLI::NonNegativeNumber);
  sub->add_option("--config", c.config, "JSON file with option values");
}

int cmd_run(const Common& c, const std::string& scenario, const std::string& skill,
            const std::vector<std::string>& sets, const std::vector<std::string>& params, bool save_frames,
            int verbosity) {
  fvt::RunConfig cfg;
  cfg.scenario = scenario;
  cfg.skill = skill;
  cfg.seed = c.seed;
  cfg.frames = c.frames;
  cfg.out_dir = c.out;
  cfg.save_frames = save_frames;
  cfg.verbosity = verbosity;
  cfg.skill_params = parse_assignments(sets, "--set");
  cfg.scenario_params = parse_assignments(params, "--param");
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const auto res = fvt::run_scenario(cfg);
  Json summary = res.summary();
  summary["scenario"] = scenario;
  summary["seed"] = c.seed;
  std::cout << (verbosity > 0 ? summary.dump(2) : summary.dump()) << '\n';
  if (!res.message.empty()) std::cerr << "fvtactile: " << res.error_code << ": " << res.message << '\n';
  return res.exit_code;
}

int cmd_gen_dataset(const Common& c, const std::string& kind, int episodes) {
  fvt::Rng rng(c.seed);
  std::ostringstream csv;
  Json info = {{"kind", kind}, {"seed", c.seed}};
  if (kind == "press") {
    fvt::PressConfig pc;
    if (episodes > 0) pc.episodes = episodes;
    if (c.frames) pc.seconds = *c.frames / pc.fps;
    if (pc.test_episodes >= pc.episodes) pc.test_episodes = std::max(1, pc.episodes / 5);
    const auto ds = fvt::gen_press_dataset(rng, pc);
    fvt::write_press_csv(csv, ds);
    info["rows"] = ds.size();
    info["features"] = ds.X.cols();
  } else {
    const auto ds = fvt::gen_stir_dataset(rng);
    fvt::write_stir_csv(csv, ds);
    info["train"] = ds.count(false);
    info["test"] = ds.count(true);
  }
  if (c.out.empty()) {
    std::cout << csv.str();
  } else {
    open_output(c.out) << csv.str();
    std::cout << info.dump() << '\n';
  }
  return fvt::kExitSuccess;
}

fvt::PressDataset load_press(const std::string& data, std::uint64_t seed) {
  if (data.empty()) {
    fvt::Rng rng(seed);
    return fvt::gen_press_dataset(rng);
  }
  std::ifstream in(data);
  if (!in) throw Error("io", "cannot open " + data);
  return fvt::read_press_csv(in);
}

fvt::StirDataset load_stir(const std::string& data, std::uint64_t seed) {
  if (data.empty()) {
    fvt::Rng rng(seed);
    return fvt::gen_stir_dataset(rng);
  }
  std::ifstream in(data);
  if (!in) throw Error("io", "cannot open " + data);
  return fvt::read_stir_csv(in);
}

int cmd_train(const Common& c, const std::string& kind, const std::string& data, int epochs, double lr) {
  Json model;
  Json info = {{"kind", kind}};
  if (kind == "press") {
    const auto ds = load_press(data, c.seed);
    const auto X = ds.rows(false);
    const auto y = ds.labels(false);
    const auto best = fvt::krr_cross_validate(X, y, ds.groups(false));
    const auto m = fvt::krr_fit(X, y, best.lambda, best.gamma);
    model = fvt::to_json(m);
    info.update({{"gamma", best.gamma},
                 {"lambda", best.lambda},
                 {"cv_rmse", best.cv_rmse},
                 {"train_rows", X.rows()},
                 {"residual", fvt::krr_residual(m, y)}});
  } else {
    const auto ds = load_stir(data, c.seed);
    fvt::MlpTrainConfig tc;
    if (epochs > 0) tc.epochs = epochs;
    if (lr > 0.0) tc.learning_rate = lr;
    fvt::Rng rng(c.seed);
    const auto res = fvt::mlp_train(ds.rows(false), ds.labels(false), 3, rng, tc);
    model = fvt::to_json(res.model, fvt::substance_names());
    info.update({{"epochs", tc.epochs},
                 {"learning_rate", tc.learning_rate},
                 {"final_loss", res.loss_history.back()},
                 {"gradient_check_error", res.gradient_check_error}});
  }
  const std::string out = c.out.empty() ? kind + "_model.json" : c.out;
  if (std::filesystem::path(out).has_parent_path()) {
    std::filesystem::create_directories(std::filesystem::path(out).parent_path());
  }
  fvt::write_json(out, model);
  info["model"] = out;
  std::cout << info.dump() << '\n';
  return fvt::kExitSuccess;
}

int cmd_eval(const Common& c, const std::string& model_path, const std::string& data) {
  const Json model = fvt::read_json(model_path);
  fvt::check_schema(model, "model");
  const std::string kind = model.value("kind", "");
  const std::filesystem::path out = c.out;
  if (!out.empty()) std::filesystem::create_directories(out);

  if (kind == "krr") {
    const auto m = fvt::krr_from_json(model);
    const auto ds = load_press(data, c.seed);
    const auto pred = fvt::krr_predict_rows(m, ds.rows(true));
    const auto y = ds.labels(true);
    const double rmse = std::sqrt((pred - y).squaredNorm() / static_cast<double>(y.size()));
    const double range = y.maxCoeff() - y.minCoeff();
    Json result = {{"schema_version", fvt::kSchemaVersion},
                   {"kind", "krr"},
                   {"test_rows", y.size()},
                   {"rmse", rmse},
                   {"force_range", range},
                   {"rmse_fraction", rmse / range}};
    if (!out.empty()) {
      std::ofstream log(out / "predictions.jsonl");
      Eigen::Index k = 0;
      for (std::size_t i = 0; i < ds.size(); ++i) {
        if (!ds.is_test[i]) continue;
        fvt::write_jsonl(log, {{"schema_version", fvt::kSchemaVersion},
                               {"frame", k},
                               {"episode", ds.episode[i]},
                               {"episode_frame", ds.frame[i]},
                               {"force_true", y(k)},
                               {"force_pred", pred(k)}});
        ++k;
      }
      fvt::write_json(out / "eval.json", result);
    }
    std::cout << result.dump() << '\n';
    return fvt::kExitSuccess;
  }
  if (kind == "mlp") {
    const auto m = fvt::mlp_from_json(model);
    const auto ds = load_stir(data, c.seed);
    const auto report = fvt::mlp_eval(m, ds.rows(true), ds.labels(true), fvt::substance_names());
    std::cout << report.to_text();
    if (!out.empty()) {
      fvt::write_json(out / "report.json", fvt::to_json(report));
      std::ofstream(out / "report.txt") << report.to_text();
    }
    return fvt::kExitSuccess;
  }
  throw Error("io", model_path + ": unknown model kind '" + kind + "'");
}

int cmd_assembly(const Common& c, const std::string& variant) {
  fvt::AssemblyConfig cfg;
  cfg.seed = c.seed;
  cfg.variant = variant;
  cfg.out_dir = c.out;
  const auto report = fvt::run_assembly(cfg);
  std::cout << report.to_json().dump(2) << '\n';
  return report.exit_code();
}

int cmd_plotdata(const Common& c, const std::string& log_path, const std::string& view,
                 const std::vector<std::string>& channels, const fvt::PlotOptions& options) {
  if (view.empty() == channels.empty()) throw UsageError("plotdata needs exactly one of --view or --channels");
  const auto log = fvt::read_jsonl(std::filesystem::path(log_path));
  fvt::PlotTable table;
  try {
    if (!view.empty()) {
      table = fvt::plot_view(log, view, options);
    } else {
      std::vector<std::string> names;
      for (const auto& item : channels) {
        std::stringstream ss(item);
        std::string part;
        while (std::getline(ss, part, ',')) {
          if (!part.empty()) names.push_back(part);
        }
      }
      table = fvt::plot_channels(log, names);
    }
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  if (c.out.empty()) {
    table.write_csv(std::cout);
  } else {
    auto out = open_output(c.out);
    table.write_csv(out);
  }
  return fvt::kExitSuccess;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tactile skill simulator, learning and assembly tool", "fvtactile"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeFirst);
  app.require_subcommand(1);

  std::vector<std::string> scenario_names;
  for (const auto& s : fvt::scenario_registry()) scenario_names.push_back(s.name);

  Common common;
  std::string scenario, skill, kind, data, model, log_path, view, variant = "default";
  std::vector<std::string> sets, params, channels;
  bool save_frames = false;
  int verbosity = 0;
  int episodes = 0;
  int epochs = 0;
  double lr = 0.0;
  fvt::PlotOptions plot;

  auto* simulate = app.add_subcommand("simulate", "Run a scenario through the sensing loop without a skill");
  simulate->add_option("scenario,--scenario", scenario, "scenario name")->required()->check(CLI::IsMember(scenario_names));
  simulate->add_option("--param", params, "scenario parameter key=value")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  simulate->add_flag("--save-frames", save_frames, "write every camera frame as PGM");
  add_common(simulate, common, true);

  auto* run = app.add_subcommand("run", "Run a skill on a scenario");
  run->add_option("scenario,--scenario", scenario, "scenario name")->required()->check(CLI::IsMember(scenario_names));
  run->add_option("--skill", skill, "skill name (default: the scenario's)")->check(CLI::IsMember(fvt::runnable_skill_names()));
  run->add_option("--set", sets, "skill parameter key=value")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  run->add_option("--param", params, "scenario parameter key=value")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  run->add_flag("--save-frames", save_frames, "write every camera frame as PGM");
  run->add_flag("-v,--verbose", verbosity, "pretty-print the summary");
  add_common(run, common, true);

  auto* gen = app.add_subcommand("gen-dataset", "Generate the press or stir dataset as CSV");
  gen->add_option("kind,--kind", kind, "press or stir")->required()->check(CLI::IsMember({"press", "stir"}));
  gen->add_option("--episodes", episodes, "press episodes")->check(CLI::PositiveNumber);
  add_common(gen, common, true);

  auto* train = app.add_subcommand("train", "Fit the force regressor or the substance classifier");
  train->add_option("kind,--kind", kind, "press or stir")->required()->check(CLI::IsMember({"press", "stir"}));
  train->add_option("--data", data, "dataset CSV (default: generate with --seed)");
  train->add_option("--epochs", epochs, "MLP epochs")->check(CLI::PositiveNumber);
  train->add_option("--lr", lr, "MLP learning rate")->check(CLI::PositiveNumber);
  add_common(train, common, false);

  auto* eval = app.add_subcommand("eval", "Evaluate a model on the test split");
  eval->add_option("--model", model, "model JSON")->required();
  eval->add_option("--data", data, "dataset CSV (default: generate with --seed)");
  add_common(eval, common, false);

  auto* assembly = app.add_subcommand("assembly", "Run the scripted assembly sequence");
  assembly->add_option("--variant", variant, "default, absent or stuck")->check(CLI::IsMember({"default", "absent", "stuck"}));
  add_common(assembly, common, false);

  auto* plotdata = app.add_subcommand("plotdata", "Project an episode log onto CSV columns");
  plotdata->add_option("--log", log_path, "episode JSONL")->required();
  plotdata->add_option("--view", view, "displacement, followme, handover, rotation or force-fit");
  plotdata->add_option("--channels", channels, "comma-separated dotted paths")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  plotdata->add_option("--slip-threshold", plot.slip_threshold, "handover view slip threshold");
  plotdata->add_option("--force-threshold", plot.force_threshold, "handover view force threshold");
  plotdata->add_option("--hysteresis", plot.hysteresis, "handover view force hysteresis");
  add_common(plotdata, common, false);

  try {
    // Locate the subcommand and an optional --config before parsing.
    std::vector<std::string> args(argv + 1, argv + argc);
    CLI::App* sub = nullptr;
    std::string config_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (!sub) {
        for (auto* s : app.get_subcommands({})) {
          if (s->get_name() == args[i]) sub = s;
        }
      }
      if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
      if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
    }
    if (sub && !config_path.empty()) {
      const auto extra = config_arguments(config_path, *sub);
      args.insert(args.end(), extra.begin(), extra.end());
    }
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? fvt::kExitSuccess : fvt::kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "fvtactile: " << e.what() << '\n';
    return fvt::kExitUsage;
  }

  try {
    if (*simulate) return cmd_run(common, scenario, "none", {}, params, save_frames, 0);
    if (*run) return cmd_run(common, scenario, skill, sets, params, save_frames, verbosity);
    if (*gen) return cmd_gen_dataset(common, kind, episodes);
    if (*train) return cmd_train(common, kind, data, epochs, lr);
    if (*eval) return cmd_eval(common, model, data);
    if (*assembly) return cmd_assembly(common, variant);
    if (*plotdata) return cmd_plotdata(common, log_path, view, channels, plot);
  } catch (const UsageError& e) {
    std::cerr << "fvtactile: " << e.what() << '\n';
    return fvt::kExitUsage;
  } catch (const Error& e) {
    std::cerr << "fvtactile: " << e.code() << ": " << e.what() << '\n';
    return e.code() == "io" ? fvt::kExitUsage : fvt::kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "fvtactile: internal error: " << e.what() << '\n';
    return fvt::kExitInternal;
  }
  return fvt::kExitInternal;
}
