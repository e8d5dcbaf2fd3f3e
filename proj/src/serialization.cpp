#include "rec/serialization.hpp"

#include <fstream>
#include <sstream>

namespace rec {

namespace {

[[noreturn]] void format_error(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::kFormat, where + ": " + what);
}

const Json& field(const Json& j, const std::string& key, const std::string& where) {
  if (!j.is_object()) format_error(where, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) format_error(where + "." + key, "missing field");
  return *it;
}

double number(const Json& j, const std::string& where) {
  if (!j.is_number()) format_error(where, "expected a number");
  return j.get<double>();
}

std::int64_t integer(const Json& j, const std::string& where) {
  if (!j.is_number_integer()) format_error(where, "expected an integer");
  return j.get<std::int64_t>();
}

Vector vector_from(const Json& j, const std::string& where) {
  if (!j.is_array()) format_error(where, "expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = number(j[i], where + "[" + std::to_string(i) + "]");
  return v;
}

Json vector_to(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

}  // namespace

Json model_to_json(const MlpModel& f) {
  Json j;
  j["kind"] = f.is_linear() ? "linear" : "mlp";
  j["dims"] = f.dims();
  j["activation"] = to_string(f.activation());
  Json weights = Json::array(), biases = Json::array();
  for (const auto& l : f.layers()) {
    Json w = Json::array();
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) w.push_back(l.weight(r, c));
    weights.push_back(std::move(w));
    biases.push_back(vector_to(l.bias));
  }
  j["weights"] = std::move(weights);
  j["biases"] = std::move(biases);
  return j;
}

Json model_to_json(const BinaryLinearClassifier& f) {
  Json j;
  j["kind"] = "blc";
  j["dims"] = {f.dim()};
  j["weights"] = vector_to(f.weights());
  j["bias"] = f.bias();
  return j;
}

Json model_to_json(const MulticlassClassifier& f) {
  if (const auto* m = dynamic_cast<const MlpModel*>(&f)) return model_to_json(*m);
  if (const auto* b = dynamic_cast<const BlcAsMulticlass*>(&f)) return model_to_json(b->blc());
  throw Error(ErrorCode::kInvalidModel, "model kind has no JSON form");
}

BinaryLinearClassifier blc_from_json(const Json& j, const std::string& where) {
  const Json& kind = field(j, "kind", where);
  if (kind != "blc") format_error(where + ".kind", "expected \"blc\"");
  Vector w = vector_from(field(j, "weights", where), where + ".weights");
  const double b = number(field(j, "bias", where), where + ".bias");
  try {
    return BinaryLinearClassifier(std::move(w), b);
  } catch (const Error& e) {
    format_error(where + ".weights", e.what());
  }
}

ModelPtr model_from_json(const Json& j, const std::string& where) {
  const Json& kind_j = field(j, "kind", where);
  if (!kind_j.is_string()) format_error(where + ".kind", "expected a string");
  const auto kind = kind_j.get<std::string>();
  if (kind == "blc") return std::make_shared<BlcAsMulticlass>(blc_from_json(j, where));
  if (kind != "linear" && kind != "mlp") {
    format_error(where + ".kind", "unknown model kind '" + kind + "' (expected blc, linear or mlp)");
  }

  const Json& dims_j = field(j, "dims", where);
  if (!dims_j.is_array() || dims_j.size() < 2) format_error(where + ".dims", "expected at least two sizes");
  std::vector<Eigen::Index> dims;
  for (std::size_t i = 0; i < dims_j.size(); ++i) {
    const auto d = integer(dims_j[i], where + ".dims[" + std::to_string(i) + "]");
    if (d < 1) format_error(where + ".dims[" + std::to_string(i) + "]", "sizes must be positive");
    dims.push_back(d);
  }
  if (kind == "linear" && dims.size() != 2) format_error(where + ".dims", "a linear model has exactly two sizes");

  Activation act = Activation::kIdentity;
  if (auto it = j.find("activation"); it != j.end()) {
    if (!it->is_string()) format_error(where + ".activation", "expected a string");
    try {
      act = parse_activation(it->get<std::string>());
    } catch (const Error& e) {
      format_error(where + ".activation", e.what());
    }
  } else if (kind == "mlp") {
    format_error(where + ".activation", "missing field");
  }

  const Json& weights = field(j, "weights", where);
  const Json& biases = field(j, "biases", where);
  const std::size_t n_layers = dims.size() - 1;
  if (!weights.is_array() || weights.size() != n_layers)
    format_error(where + ".weights", "expected " + std::to_string(n_layers) + " layer arrays");
  if (!biases.is_array() || biases.size() != n_layers)
    format_error(where + ".biases", "expected " + std::to_string(n_layers) + " layer arrays");

  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const std::string wpath = where + ".weights[" + std::to_string(l) + "]";
    const Vector flat = vector_from(weights[l], wpath);
    if (flat.size() != dims[l + 1] * dims[l])
      format_error(wpath, "expected " + std::to_string(dims[l + 1] * dims[l]) + " values");
    Matrix w(dims[l + 1], dims[l]);
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = flat[r * w.cols() + c];
    const std::string bpath = where + ".biases[" + std::to_string(l) + "]";
    Vector b = vector_from(biases[l], bpath);
    if (b.size() != dims[l + 1]) format_error(bpath, "expected " + std::to_string(dims[l + 1]) + " values");
    layers.push_back({std::move(w), std::move(b)});
  }
  try {
    return std::make_shared<MlpModel>(std::move(layers), act);
  } catch (const Error& e) {
    format_error(where, e.what());
  }
}

Json ensemble_to_json(const ModelEnsemble& rec) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["alpha"] = rec.alphas();
  Json members = Json::array();
  for (const auto& m : rec.members()) members.push_back(model_to_json(*m));
  j["members"] = std::move(members);
  return j;
}

ModelEnsemble ensemble_from_json(const Json& j, const std::filesystem::path& base_dir,
                                 const std::string& where) {
  if (auto it = j.find("schema_version"); j.is_object() && it != j.end()) {
    if (integer(*it, where + ".schema_version") != kSchemaVersion)
      format_error(where + ".schema_version", "unsupported version");
  }
  const Json& members_j = field(j, "members", where);
  if (!members_j.is_array() || members_j.empty()) format_error(where + ".members", "expected a nonempty array");
  std::vector<ModelPtr> members;
  for (std::size_t i = 0; i < members_j.size(); ++i) {
    const std::string mpath = where + ".members[" + std::to_string(i) + "]";
    const Json& m = members_j[i];
    if (m.is_string()) {
      std::filesystem::path p = m.get<std::string>();
      if (p.is_relative()) p = base_dir / p;
      Json doc;
      try {
        doc = read_json_file(p);
      } catch (const Error& e) {
        format_error(mpath, e.what());
      }
      members.push_back(model_from_json(doc, mpath));
    } else {
      members.push_back(model_from_json(m, mpath));
    }
  }
  const Json& alpha_j = field(j, "alpha", where);
  if (!alpha_j.is_array()) format_error(where + ".alpha", "expected an array of numbers");
  std::vector<double> alpha;
  for (std::size_t i = 0; i < alpha_j.size(); ++i) alpha.push_back(number(alpha_j[i], where + ".alpha[" + std::to_string(i) + "]"));
  try {
    return ModelEnsemble(std::move(members), std::move(alpha));
  } catch (const Error& e) {
    format_error(where + ".alpha", e.what());
  }
}

Json dataset_to_json(const Dataset& data) {
  Json a = Json::array();
  for (const auto& ex : data) a.push_back({{"x", vector_to(ex.x)}, {"y", ex.y}});
  return a;
}

Dataset dataset_from_json(const Json& j, const std::string& where) {
  if (!j.is_array()) format_error(where, "expected an array of {x, y} records");
  Dataset out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string path = where + "[" + std::to_string(i) + "]";
    Vector x = vector_from(field(j[i], "x", path), path + ".x");
    const auto y = integer(field(j[i], "y", path), path + ".y");
    if (!out.empty() && x.size() != out.front().x.size()) format_error(path + ".x", "dimension differs from record 0");
    out.push_back({std::move(x), static_cast<int>(y)});
  }
  return out;
}

Json attack_config_to_json(const AttackConfig& cfg) {
  Json j;
  j["eps"] = cfg.eps;
  if (cfg.norm.is_inf()) j["p"] = "inf";
  else j["p"] = cfg.norm.p();
  j["steps"] = cfg.steps;
  j["step_size"] = cfg.step_size;
  j["init"] = cfg.init == InitKind::kZero ? "zero" : "random";
  j["restarts"] = cfg.restarts;
  j["rho_coef"] = cfg.rho_coef;
  if (cfg.top_g == 0) j["top_g"] = "all";
  else j["top_g"] = cfg.top_g;
  j["clamp01"] = cfg.clamp01;
  j["seed"] = cfg.seed;
  return j;
}

AttackConfig attack_config_from_json(const Json& j, const std::string& where) {
  if (!j.is_object()) format_error(where, "expected an object");
  AttackConfig cfg;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    const Json& v = it.value();
    const std::string path = where + "." + key;
    if (key == "eps") cfg.eps = number(v, path);
    else if (key == "p") {
      try {
        cfg.norm = v.is_string() ? LpNorm::parse(v.get<std::string>()) : LpNorm(number(v, path));
      } catch (const Error& e) {
        format_error(path, e.what());
      }
    } else if (key == "steps") cfg.steps = static_cast<int>(integer(v, path));
    else if (key == "step_size") cfg.step_size = number(v, path);
    else if (key == "init") {
      if (v == "zero") cfg.init = InitKind::kZero;
      else if (v == "random") cfg.init = InitKind::kRandom;
      else format_error(path, "expected \"zero\" or \"random\"");
    } else if (key == "restarts") cfg.restarts = static_cast<int>(integer(v, path));
    else if (key == "rho_coef") cfg.rho_coef = number(v, path);
    else if (key == "top_g") {
      if (v == "all") cfg.top_g = 0;
      else cfg.top_g = static_cast<int>(integer(v, path));
    } else if (key == "clamp01") {
      if (!v.is_boolean()) format_error(path, "expected true or false");
      cfg.clamp01 = v.get<bool>();
    } else if (key == "seed") {
      if (!v.is_number_unsigned() && !v.is_number_integer()) format_error(path, "expected an unsigned integer");
      cfg.seed = v.get<std::uint64_t>();
    } else {
      format_error(path, "unknown field");
    }
  }
  try {
    cfg.validate();
  } catch (const Error& e) {
    format_error(where, e.what());
  }
  return cfg;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::kFormat, path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

std::string pretty(const Json& j) { return j.dump(2) + "\n"; }

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace rec
