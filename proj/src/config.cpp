#include "robctl/config.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace robctl {

namespace {

using nlohmann::json;

template <typename P>
struct Fields;

template <>
struct Fields<MertonParamsd> {
  static std::vector<std::pair<const char*, double MertonParamsd::*>> list() {
    return {{"mu0", &MertonParamsd::mu0},     {"mu1", &MertonParamsd::mu1},
            {"sigma", &MertonParamsd::sigma}, {"delta", &MertonParamsd::delta},
            {"gamma", &MertonParamsd::gamma}, {"theta", &MertonParamsd::theta},
            {"K4", &MertonParamsd::K4},       {"T", &MertonParamsd::T}};
  }
};

template <>
struct Fields<HestonParamsd> {
  static std::vector<std::pair<const char*, double HestonParamsd::*>> list() {
    return {{"mu0", &HestonParamsd::mu0},     {"mu2", &HestonParamsd::mu2},
            {"kappa", &HestonParamsd::kappa}, {"pbar", &HestonParamsd::pbar},
            {"sigma", &HestonParamsd::sigma}, {"rho", &HestonParamsd::rho},
            {"gamma", &HestonParamsd::gamma}, {"theta", &HestonParamsd::theta},
            {"Kpi", &HestonParamsd::Kpi},     {"Kphi", &HestonParamsd::Kphi},
            {"T", &HestonParamsd::T},         {"K6", &HestonParamsd::K6}};
  }
};

template <typename P>
P read_fields(const json& j, std::vector<std::string>& errs) {
  P p;
  const auto fields = Fields<P>::list();
  for (const auto& [name, member] : fields) {
    auto it = j.find(name);
    if (it == j.end()) {
      errs.push_back(std::string(name) + ": missing");
      continue;
    }
    if (!it->is_number()) {
      errs.push_back(std::string(name) + ": expected a number, got " + it->type_name());
      continue;
    }
    const double v = it->template get<double>();
    if (!std::isfinite(v)) {
      errs.push_back(std::string(name) + ": not finite");
      continue;
    }
    p.*member = v;
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() == "model") continue;
    bool known = false;
    for (const auto& f : fields) known = known || it.key() == f.first;
    if (!known) errs.push_back(it.key() + ": unknown key");
  }
  return p;
}

template <typename P>
json write_fields(const P& p, const char* model) {
  json j;
  j["model"] = model;
  for (const auto& [name, member] : Fields<P>::list()) j[name] = p.*member;
  return j;
}

}  // namespace

ModelConfig parse_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError("config is not valid JSON", {std::string("$: ") + e.what()});
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object", {"$: not an object"});
  auto m = j.find("model");
  if (m == j.end() || !m->is_string())
    throw ConfigError("config needs a model", {"model: missing or not a string"});
  std::vector<std::string> errs;
  ModelConfig out;
  const std::string model = m->get<std::string>();
  if (model == "merton")
    out = read_fields<MertonParamsd>(j, errs);
  else if (model == "heston")
    out = read_fields<HestonParamsd>(j, errs);
  else
    throw ConfigError("unknown model", {"model: expected \"merton\" or \"heston\", got \"" + model + "\""});
  if (!errs.empty()) throw ConfigError("invalid " + model + " config", errs);
  return out;
}

ModelConfig load_config(const std::filesystem::path& path, std::string* raw) {
  std::string text = read_file(path);
  ModelConfig c = parse_config(text);
  if (raw) *raw = std::move(text);
  return c;
}

nlohmann::json to_json(const ModelConfig& c) {
  return std::visit(
      [](const auto& p) -> json {
        using P = std::decay_t<decltype(p)>;
        return write_fields(p, std::is_same_v<P, MertonParamsd> ? "merton" : "heston");
      },
      c);
}

std::string model_name(const ModelConfig& c) {
  return std::holds_alternative<MertonParamsd>(c) ? "merton" : "heston";
}

std::string reference_config_text(const std::string& model) {
  if (model == "merton") return to_json(MertonParamsd{}).dump(2) + "\n";
  if (model == "heston") return to_json(HestonParamsd{}).dump(2) + "\n";
  throw std::invalid_argument("unknown model " + model);
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

void write_atomic(const std::filesystem::path& path, std::string_view bytes) {
  namespace fs = std::filesystem;
  const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  const fs::path tmp = dir / ("." + path.filename().string() + ".tmp" + std::to_string(::getpid()));
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    f.write(bytes.data(), std::streamsize(bytes.size()));
    f.flush();
    if (!f) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw std::runtime_error("write to " + tmp.string() + " failed");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw std::runtime_error("cannot rename onto " + path.string());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read " + path.string(), {path.string() + ": unreadable"});
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace robctl
