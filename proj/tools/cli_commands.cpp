#include "cli_commands.hpp"

#include <omp.h>

#include <CLI11.hpp>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <sstream>

#include "rec/serialization.hpp"
#include "rec/verification.hpp"

namespace fs = std::filesystem;

namespace rec::cli {

std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::string format_accuracy(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

struct Options {
  std::string config_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  bool mutate_beta = false;
};

struct Context {
  Json config = Json::object();
  fs::path base_dir;
  std::uint64_t seed = 0;
  fs::path out;
};

Context load_context(const Options& opt, bool config_required) {
  Context ctx;
  if (!opt.config_path.empty()) {
    ctx.config = read_json_file(opt.config_path);
    if (!ctx.config.is_object()) throw Error(ErrorCode::kFormat, "config: expected an object");
    ctx.base_dir = fs::path(opt.config_path).parent_path();
  } else if (config_required) {
    throw Error(ErrorCode::kInvalidArgument, "--config is required for this command");
  }
  if (auto it = ctx.config.find("seed"); it != ctx.config.end()) {
    if (!it->is_number_unsigned()) throw Error(ErrorCode::kFormat, "config.seed: expected an unsigned integer");
    ctx.seed = it->get<std::uint64_t>();
  }
  if (opt.seed) ctx.seed = *opt.seed;
  ctx.out = opt.out_path;
  return ctx;
}

const Json& required(const Json& j, const std::string& key, const std::string& where = "config") {
  auto it = j.find(key);
  if (it == j.end()) throw Error(ErrorCode::kFormat, where + "." + key + ": missing field");
  return *it;
}

fs::path resolve(const Context& ctx, const std::string& p) {
  fs::path path(p);
  return path.is_relative() ? ctx.base_dir / path : path;
}

int json_int(const Json& j, const std::string& where) {
  if (!j.is_number_integer()) throw Error(ErrorCode::kFormat, where + ": expected an integer");
  return j.get<int>();
}

double json_number(const Json& j, const std::string& where) {
  if (!j.is_number()) throw Error(ErrorCode::kFormat, where + ": expected a number");
  return j.get<double>();
}

struct LoadedData {
  Dataset data;
  int classes = 0;
};

LoadedData load_dataset(const Context& ctx) {
  const Json& spec = required(ctx.config, "dataset");
  LoadedData out;
  if (spec.is_string()) {
    out.data = dataset_from_json(read_json_file(resolve(ctx, spec.get<std::string>())), "dataset");
    for (const auto& ex : out.data) out.classes = std::max(out.classes, ex.y + 1);
    return out;
  }
  if (!spec.is_object()) throw Error(ErrorCode::kFormat, "config.dataset: expected a path or a generator object");
  const Json& gen = required(spec, "generator", "config.dataset");
  if (!gen.is_string()) throw Error(ErrorCode::kFormat, "config.dataset.generator: expected a string");
  const int classes = json_int(required(spec, "classes", "config.dataset"), "config.dataset.classes");
  const int dim = json_int(required(spec, "dim", "config.dataset"), "config.dataset.dim");
  const int n = json_int(required(spec, "n", "config.dataset"), "config.dataset.n");
  std::uint64_t seed = ctx.seed;
  if (auto it = spec.find("seed"); it != spec.end()) {
    if (!it->is_number_unsigned()) throw Error(ErrorCode::kFormat, "config.dataset.seed: expected an unsigned integer");
    seed = it->get<std::uint64_t>();
  }
  double radius = 4.0;
  if (auto it = spec.find("radius"); it != spec.end()) radius = json_number(*it, "config.dataset.radius");
  out.data = make_dataset(gen.get<std::string>(), classes, dim, n, seed, radius).examples;
  out.classes = classes;
  return out;
}

ModelPtr load_model(const Context& ctx, const Json& j, const std::string& where) {
  if (j.is_string()) return model_from_json(read_json_file(resolve(ctx, j.get<std::string>())), where);
  return model_from_json(j, where);
}

ModelEnsemble load_ensemble(const Context& ctx) {
  if (auto it = ctx.config.find("ensemble"); it != ctx.config.end()) {
    if (it->is_string()) {
      const fs::path p = resolve(ctx, it->get<std::string>());
      return ensemble_from_json(read_json_file(p), p.parent_path(), "ensemble");
    }
    return ensemble_from_json(*it, ctx.base_dir, "config.ensemble");
  }
  if (auto it = ctx.config.find("model"); it != ctx.config.end()) {
    return single_model(load_model(ctx, *it, "config.model"));
  }
  throw Error(ErrorCode::kFormat, "config.ensemble: missing field (or give config.model)");
}

void check_labels(const ModelEnsemble& rec, const Dataset& data) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    require_same_dim(rec.input_dim(), data[i].x.size(), "dataset[" + std::to_string(i) + "].x");
    for (const auto& m : rec.members()) {
      if (data[i].y < 0 || data[i].y >= m->class_count()) {
        throw Error(ErrorCode::kFormat, "dataset[" + std::to_string(i) + "].y: label out of range for the model");
      }
    }
  }
}

AttackConfig load_attack_config(const Context& ctx, const std::string& key = "attack_config") {
  AttackConfig cfg;
  if (auto it = ctx.config.find(key); it != ctx.config.end()) cfg = attack_config_from_json(*it, "config." + key);
  cfg.seed = ctx.seed;
  return cfg;
}

std::vector<std::string> load_attack_names(const Context& ctx) {
  std::vector<std::string> names{"apgd", "arc"};
  if (auto it = ctx.config.find("attacks"); it != ctx.config.end()) {
    if (!it->is_array() || it->empty()) throw Error(ErrorCode::kFormat, "config.attacks: expected a nonempty array");
    names.clear();
    for (std::size_t i = 0; i < it->size(); ++i) {
      const Json& n = (*it)[i];
      const std::string where = "config.attacks[" + std::to_string(i) + "]";
      if (!n.is_string()) throw Error(ErrorCode::kFormat, where + ": expected a string");
      const auto name = n.get<std::string>();
      if (std::find(attack_names().begin(), attack_names().end(), name) == attack_names().end()) {
        throw Error(ErrorCode::kFormat, where + ": unknown attack '" + name + "'");
      }
      names.push_back(name);
    }
  }
  return names;
}

std::string alpha_cell(const ModelEnsemble& rec) {
  std::string s;
  for (std::size_t i = 0; i < rec.size(); ++i) s += (i ? ";" : "") + format_number(rec.alpha(i));
  return s;
}

const char* kCsvHeader = "attack,p,eps,steps,eta,alpha,clean_acc,robust_acc,seed\n";

std::string csv_row(const std::string& attack, const AttackConfig& cfg, const std::string& alpha, double clean,
                    double robust) {
  std::ostringstream s;
  s << attack << ',' << cfg.norm.name() << ',' << format_number(cfg.eps) << ',' << cfg.steps << ','
    << format_number(cfg.step_size) << ',' << alpha << ',' << format_accuracy(clean) << ','
    << format_accuracy(robust) << ',' << cfg.seed << '\n';
  return s.str();
}

void emit(const Context& ctx, const std::string& text, std::ostream& out) {
  if (ctx.out.empty()) out << text;
  else write_text_file(ctx.out, text);
}

int cmd_train(const Options& opt, std::ostream& out) {
  const Context ctx = load_context(opt, true);
  if (ctx.out.empty()) throw Error(ErrorCode::kInvalidArgument, "train needs --out <directory>");
  const LoadedData data = load_dataset(ctx);

  ModelSpec spec;
  if (auto it = ctx.config.find("model"); it != ctx.config.end()) {
    if (auto h = it->find("hidden"); h != it->end()) {
      if (!h->is_array()) throw Error(ErrorCode::kFormat, "config.model.hidden: expected an array of sizes");
      spec.hidden.clear();
      for (std::size_t i = 0; i < h->size(); ++i) spec.hidden.push_back(json_int((*h)[i], "config.model.hidden[" + std::to_string(i) + "]"));
    }
    if (auto a = it->find("activation"); a != it->end()) {
      if (!a->is_string()) throw Error(ErrorCode::kFormat, "config.model.activation: expected a string");
      spec.activation = parse_activation(a->get<std::string>());
    }
  }

  TrainConfig tc;
  tc.seed = ctx.seed;
  if (auto it = ctx.config.find("train"); it != ctx.config.end()) {
    const Json& t = *it;
    if (auto f = t.find("epochs"); f != t.end()) tc.epochs = json_int(*f, "config.train.epochs");
    if (auto f = t.find("batch"); f != t.end()) tc.batch = json_int(*f, "config.train.batch");
    if (auto f = t.find("lr"); f != t.end()) tc.lr = json_number(*f, "config.train.lr");
    if (auto f = t.find("momentum"); f != t.end()) tc.momentum = json_number(*f, "config.train.momentum");
    if (auto f = t.find("adversarial"); f != t.end() && !f->is_null()) {
      tc.adversarial = attack_config_from_json(*f, "config.train.adversarial");
    }
  }
  tc.validate();

  fs::create_directories(ctx.out);
  std::vector<std::string> files;
  auto save = [&](const std::string& name, const Json& j) {
    write_text_file(ctx.out / name, pretty(j));
    files.push_back(name);
  };
  save("dataset.json", dataset_to_json(data.data));

  if (auto it = ctx.config.find("bat"); it != ctx.config.end() && !it->is_null() && *it != false) {
    std::vector<double> alpha{0.9, 0.1};
    if (it->is_object()) {
      if (auto a = it->find("alpha"); a != it->end()) {
        if (!a->is_array() || a->size() != 2) throw Error(ErrorCode::kFormat, "config.bat.alpha: expected two numbers");
        alpha = {json_number((*a)[0], "config.bat.alpha[0]"), json_number((*a)[1], "config.bat.alpha[1]")};
      }
    }
    const BatPair pair = train_bat_pair(spec, data.data, data.classes, tc, alpha);
    save("model_1.json", model_to_json(*pair.first));
    save("model_2.json", model_to_json(*pair.second));
    Json ens;
    ens["schema_version"] = kSchemaVersion;
    ens["alpha"] = pair.ensemble.alphas();
    ens["members"] = {"model_1.json", "model_2.json"};
    save("ensemble.json", ens);
  } else {
    save("model.json", model_to_json(train(spec, data.data, data.classes, tc)));
  }

  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a(ctx.config.dump())));
  Json manifest;
  manifest["schema_version"] = kSchemaVersion;
  manifest["seed"] = ctx.seed;
  manifest["config_hash"] = hash;
  manifest["files"] = files;
  write_text_file(ctx.out / "manifest.json", pretty(manifest));
  out << "wrote " << files.size() << " files to " << ctx.out.string() << "\n";
  return kOk;
}

int cmd_attack(const Options& opt, std::ostream& out) {
  const Context ctx = load_context(opt, true);
  const ModelEnsemble rec = load_ensemble(ctx);
  const LoadedData data = load_dataset(ctx);
  check_labels(rec, data.data);
  const AttackConfig cfg = load_attack_config(ctx);
  const auto names = load_attack_names(ctx);

  std::string csv = kCsvHeader;
  const double clean = clean_accuracy(rec, data.data);
  for (const auto& name : names) {
    const double robust = robust_accuracy(rec, named_attack(name), data.data, cfg);
    csv += csv_row(name, cfg, alpha_cell(rec), clean, robust);
  }
  emit(ctx, csv, out);
  return kOk;
}

int cmd_sweep(const Options& opt, std::ostream& out) {
  const Context ctx = load_context(opt, true);
  const ModelEnsemble base = load_ensemble(ctx);
  const LoadedData data = load_dataset(ctx);
  check_labels(base, data.data);
  const AttackConfig base_cfg = load_attack_config(ctx);
  const auto names = load_attack_names(ctx);

  const Json& sweep = required(ctx.config, "sweep");
  const Json& axis_j = required(sweep, "axis", "config.sweep");
  if (!axis_j.is_string()) throw Error(ErrorCode::kFormat, "config.sweep.axis: expected a string");
  const auto axis = axis_j.get<std::string>();
  if (axis != "alpha" && axis != "epsilon" && axis != "steps") {
    throw Error(ErrorCode::kFormat, "config.sweep.axis: expected alpha, epsilon or steps");
  }
  const Json& grid_j = required(sweep, "grid", "config.sweep");
  if (!grid_j.is_array() || grid_j.empty()) throw Error(ErrorCode::kFormat, "config.sweep.grid: expected a nonempty array");
  std::vector<double> grid;
  for (std::size_t i = 0; i < grid_j.size(); ++i) {
    const std::string where = "config.sweep.grid[" + std::to_string(i) + "]";
    const double v = json_number(grid_j[i], where);
    if (!std::isfinite(v)) throw Error(ErrorCode::kFormat, where + ": must be finite");
    if (!grid.empty() && v < grid.back()) throw Error(ErrorCode::kFormat, where + ": grid must be sorted ascending");
    if (axis == "alpha" && (v < 0.0 || v > 1.0)) throw Error(ErrorCode::kFormat, where + ": alpha must lie in [0, 1]");
    if (axis == "epsilon" && v < 0.0) throw Error(ErrorCode::kFormat, where + ": eps must be >= 0");
    if (axis == "steps" && (v < 0.0 || v != std::floor(v))) throw Error(ErrorCode::kFormat, where + ": steps must be a nonnegative integer");
    grid.push_back(v);
  }
  std::optional<double> eta_ratio;
  if (auto it = sweep.find("eta_ratio"); it != sweep.end()) eta_ratio = json_number(*it, "config.sweep.eta_ratio");
  if (axis == "alpha" && base.size() != 2) {
    throw Error(ErrorCode::kFormat, "config.ensemble: an alpha sweep needs exactly two members");
  }

  std::string csv = kCsvHeader;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    AttackConfig cfg = base_cfg;
    cfg.seed = derive_seed(ctx.seed, g);
    ModelEnsemble rec = base;
    if (axis == "alpha") rec = weighted_pair(base.member(0), base.member(1), grid[g]);
    if (axis == "epsilon") {
      cfg.eps = grid[g];
      if (eta_ratio) cfg.step_size = *eta_ratio * grid[g];
    }
    if (axis == "steps") cfg.steps = static_cast<int>(grid[g]);
    cfg.validate();
    const std::string alpha = axis == "alpha" ? format_number(grid[g]) : alpha_cell(rec);
    const double clean = clean_accuracy(rec, data.data);
    for (const auto& name : names) {
      const double robust = cfg.eps == 0.0 ? clean : robust_accuracy(rec, named_attack(name), data.data, cfg);
      csv += csv_row(name, cfg, alpha, clean, robust);
    }
  }
  emit(ctx, csv, out);
  return kOk;
}

int cmd_cross_matrix(const Options& opt, std::ostream& out) {
  const Context ctx = load_context(opt, true);
  const Json& models_j = required(ctx.config, "models");
  if (!models_j.is_array() || models_j.empty()) throw Error(ErrorCode::kFormat, "config.models: expected a nonempty array");
  std::vector<ModelPtr> models;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < models_j.size(); ++i) {
    const std::string where = "config.models[" + std::to_string(i) + "]";
    models.push_back(load_model(ctx, models_j[i], where));
    names.push_back(models_j[i].is_string() ? fs::path(models_j[i].get<std::string>()).stem().string()
                                            : "model_" + std::to_string(i + 1));
  }
  const LoadedData data = load_dataset(ctx);
  for (const auto& m : models) check_labels(single_model(m), data.data);
  const AttackConfig cfg = load_attack_config(ctx);
  std::string attack = "pgd";
  if (auto it = ctx.config.find("attack"); it != ctx.config.end()) {
    if (!it->is_string()) throw Error(ErrorCode::kFormat, "config.attack: expected a string");
    attack = it->get<std::string>();
  }
  AttackFn fn;
  try {
    fn = named_single_attack(attack);
  } catch (const Error& e) {
    throw Error(ErrorCode::kFormat, std::string("config.attack: ") + e.what());
  }
  const Matrix m = cross_robustness_matrix(models, fn, data.data, cfg);

  std::string csv = "model";
  for (const auto& n : names) csv += "," + n;
  csv += "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    csv += names[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < m.cols(); ++j) csv += "," + format_accuracy(m(i, j));
    csv += "\n";
  }
  emit(ctx, csv, out);
  return kOk;
}

int cmd_verify(const Options& opt, std::ostream& out) {
  const Context ctx = load_context(opt, false);
  VerifyOptions vo;
  vo.seed = ctx.seed;
  bool mutate = opt.mutate_beta;
  if (auto it = ctx.config.find("mutate_beta"); it != ctx.config.end()) {
    if (!it->is_boolean()) throw Error(ErrorCode::kFormat, "config.mutate_beta: expected true or false");
    mutate = mutate || it->get<bool>();
  }
  if (mutate) vo.beta_rule = BetaRule::kCorrupted;
  if (auto it = ctx.config.find("trials"); it != ctx.config.end()) {
    const std::pair<const char*, int*> counts[] = {
        {"consistency", &vo.consistency_trials}, {"inconsistency", &vo.inconsistency_trials},
        {"auxiliary", &vo.auxiliary_trials},     {"hyperplane_distance", &vo.distance_trials},
        {"jacobian", &vo.jacobian_trials},       {"geometry", &vo.geometry_trials},
        {"existence", &vo.existence_trials}};
    for (auto t = it->begin(); t != it->end(); ++t) {
      bool known = false;
      for (const auto& [name, slot] : counts) {
        if (t.key() == name) {
          *slot = json_int(t.value(), "config.trials." + t.key());
          if (*slot < 1) throw Error(ErrorCode::kFormat, "config.trials." + t.key() + ": must be >= 1");
          known = true;
        }
      }
      if (!known) throw Error(ErrorCode::kFormat, "config.trials." + t.key() + ": unknown suite");
    }
  }

  const auto reports = run_all_suites(vo);
  bool all_ok = true;
  Json suites = Json::array();
  for (const auto& r : reports) {
    all_ok = all_ok && r.ok();
    Json s;
    s["name"] = r.name;
    s["trials"] = r.trials;
    s["passed"] = r.passed;
    s["failed"] = r.failed;
    s["monotonic_violations"] = r.monotonic_violations;
    s["worst_error"] = r.worst;
    s["ok"] = r.ok();
    if (!r.first_failure.empty()) s["first_failure"] = r.first_failure;
    suites.push_back(std::move(s));
  }
  Json report;
  report["schema_version"] = kSchemaVersion;
  report["seed"] = ctx.seed;
  report["mutated_beta"] = mutate;
  report["suites"] = std::move(suites);
  report["passed"] = all_ok;
  emit(ctx, pretty(report), out);
  return all_ok ? kOk : kVerifyFailed;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Attacks and verification for randomized ensembles of classifiers", "rec_cli"};
  app.require_subcommand(1);
  Options opt;
  std::uint64_t seed = 0;

  auto common = [&](CLI::App* cmd, bool config_required) {
    auto* c = cmd->add_option("--config", opt.config_path, "JSON config file");
    if (config_required) c->required();
    c->check(CLI::ExistingFile);
    cmd->add_option("--out", opt.out_path, "output path (stdout when omitted, where allowed)");
    cmd->add_option("--seed", seed, "master seed (overrides config.seed)");
    cmd->add_option("--threads", opt.threads, "OpenMP threads (0 = runtime default)")->check(CLI::NonNegativeNumber);
  };
  auto* train_cmd = app.add_subcommand("train", "train a model or a BAT pair");
  auto* attack_cmd = app.add_subcommand("attack", "robust accuracy of an ensemble under named attacks");
  auto* sweep_cmd = app.add_subcommand("sweep", "robust accuracy over an alpha, epsilon or steps grid");
  auto* verify_cmd = app.add_subcommand("verify", "run the oracle verification suites");
  auto* cross_cmd = app.add_subcommand("cross-matrix", "cross-robustness matrix of single models");
  for (auto* cmd : {train_cmd, attack_cmd, sweep_cmd, cross_cmd}) common(cmd, true);
  common(verify_cmd, false);
  verify_cmd->add_flag("--mutate-beta", opt.mutate_beta, "replace the ARC boost factor with eps (harness self-check)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsageError;
  }
  for (auto* cmd : {train_cmd, attack_cmd, sweep_cmd, verify_cmd, cross_cmd}) {
    if (app.got_subcommand(cmd) && cmd->count("--seed") > 0) opt.seed = seed;
  }
  if (opt.threads > 0) omp_set_num_threads(opt.threads);

  try {
    if (app.got_subcommand(train_cmd)) return cmd_train(opt, out);
    if (app.got_subcommand(attack_cmd)) return cmd_attack(opt, out);
    if (app.got_subcommand(sweep_cmd)) return cmd_sweep(opt, out);
    if (app.got_subcommand(verify_cmd)) return cmd_verify(opt, out);
    return cmd_cross_matrix(opt, out);
  } catch (const Error& e) {
    err << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return e.code() == ErrorCode::kIo ? kRuntimeError
           : e.code() == ErrorCode::kTrainingDiverged ? kRuntimeError
                                                      : kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
}

}  // namespace rec::cli
