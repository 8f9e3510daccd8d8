#include "config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "nvc/error.hpp"

namespace nvc::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& v, const std::string& where) {
  T out{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw DataError(where + ": '" + v + "' is not a valid number");
  return out;
}

}  // namespace

TrainConfig parse_train_config(const std::string& text, const std::string& origin) {
  TrainConfig cfg;
  using Setter = std::function<void(const std::string&, const std::string&)>;
  auto real = [](double& dst) { return Setter([&dst](auto& v, auto& w) { dst = parse_number<double>(v, w); }); };
  auto integer = [](int& dst) { return Setter([&dst](auto& v, auto& w) { dst = parse_number<int>(v, w); }); };
  const std::map<std::string, Setter> keys{
      {"lambda1", real(cfg.weights.lambda1)},
      {"lambda2", real(cfg.weights.lambda2)},
      {"tv_weight", real(cfg.weights.tv_weight)},
      {"lr", real(cfg.lr)},
      {"lr_period", integer(cfg.lr_period)},
      {"unroll", integer(cfg.unroll)},
      {"crop", integer(cfg.crop)},
      {"batch", integer(cfg.batch)},
      {"intra_steps", integer(cfg.intra_steps)},
      {"flow_steps", integer(cfg.flow_steps)},
      {"flow_warmup", integer(cfg.flow_warmup)},
      {"joint_steps", integer(cfg.joint_steps)},
      {"clip_norm", real(cfg.clip_norm)},
      {"seed", Setter([&cfg](auto& v, auto& w) { cfg.seed = parse_number<std::uint64_t>(v, w); })},
  };
  std::istringstream in(text);
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    const std::string where = origin + ":" + std::to_string(lineno);
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError(where + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    const auto it = keys.find(key);
    if (it == keys.end()) throw DataError(where + ": unknown key '" + key + "'");
    it->second(value, where);
  }
  try {
    cfg.validate();
  } catch (const UsageError& e) {
    throw DataError(origin + ": " + e.what());
  }
  return cfg;
}

TrainConfig load_train_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open config " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_train_config(ss.str(), path);
}

std::string format_train_config(const TrainConfig& c) {
  std::ostringstream o;
  o << "lambda1 = " << c.weights.lambda1 << "\nlambda2 = " << c.weights.lambda2
    << "\ntv_weight = " << c.weights.tv_weight << "\nlr = " << c.lr << "\nlr_period = " << c.lr_period
    << "\nunroll = " << c.unroll << "\ncrop = " << c.crop << "\nbatch = " << c.batch
    << "\nintra_steps = " << c.intra_steps << "\nflow_steps = " << c.flow_steps << "\nflow_warmup = " << c.flow_warmup
    << "\njoint_steps = " << c.joint_steps << "\nclip_norm = " << c.clip_norm << "\nseed = " << c.seed << "\n";
  return o.str();
}

}  // namespace nvc::cli
