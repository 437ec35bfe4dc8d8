#include "fincon/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "fincon/error.hpp"

namespace fincon {

using nlohmann::json;

namespace {

// Sections whose members are free-form.
const std::set<std::string> kOpenMaps = {"data.prices", "agents.profile_files", "agents.prompt_files"};

void merge_into(json& base, const json& patch, const std::string& path) {
  for (const auto& [key, value] : patch.items()) {
    const std::string full = path.empty() ? key : path + "." + key;
    if (!kOpenMaps.count(path) && !base.contains(key)) raise(ErrorCode::ConfigError, "unknown config key '" + full + "'");
    if (kOpenMaps.count(full)) {
      if (!value.is_object()) raise(ErrorCode::ConfigError, "'" + full + "' must be an object");
      for (const auto& [entry, target] : value.items()) base[key][entry] = target;
    } else if (value.is_object() && base.contains(key) && base[key].is_object()) {
      merge_into(base[key], value, full);
    } else {
      base[key] = value;
    }
  }
}

template <typename T>
T get(const json& j, const char* section, const char* key) {
  try {
    return j.at(section).at(key).get<T>();
  } catch (const json::exception&) {
    raise(ErrorCode::ConfigError, std::string("config key '") + section + "." + key + "' has the wrong type");
  }
}

Date get_date(const json& j, const std::string& where) {
  if (!j.is_string()) raise(ErrorCode::ConfigError, where + " must be a YYYY-MM-DD string");
  auto d = Date::parse(j.get<std::string>());
  if (!d) raise(ErrorCode::ConfigError, where + " is not a valid date: " + j.get<std::string>());
  return *d;
}

std::optional<DateRange> get_range(const json& j, const std::string& section) {
  const auto& s = j.at(section);
  if (s.at("start").is_null() && s.at("end").is_null()) return std::nullopt;
  DateRange r{get_date(s.at("start"), section + ".start"), get_date(s.at("end"), section + ".end")};
  if (r.end < r.start) raise(ErrorCode::ConfigError, section + " range ends before it starts");
  return r;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

void require(bool ok, const std::string& message) {
  if (!ok) raise(ErrorCode::ConfigError, message);
}

}  // namespace

json default_config_json() {
  return json::parse(R"({
  "task": "single_stock",
  "universe": [],
  "data": {"prices": {}, "documents": [], "momentum_window": 20, "price_field": "close"},
  "train": {"start": null, "end": null},
  "test": {"start": null, "end": null},
  "memory": {
    "top_k": 5, "embedding_dim": 64, "default_importance": 0.5,
    "decay": {"news": 0.90, "ecc_transcript": 0.97, "form10q": 0.97, "form10k": 0.99,
              "analyst_report": 0.95, "market_data": 0.90, "manager": 0.95}
  },
  "llm": {"trading_temperature": 0.3, "belief_temperature": 0.0, "max_retries": 2, "timeout_ms": 30000,
          "min_request_interval_ms": 0, "endpoint": null, "model": null},
  "agents": {
    "analysts": ["news_analyst", "filing10q_analyst", "filing10k_analyst", "ecc_analyst", "data_analyst"],
    "data_analyst_uses_llm": false, "feedback_sigma_multiple": 2.0, "feedback_window": 20,
    "feedback_min_history": 2, "position_size": 1.0, "profile_files": {}, "prompt_files": {},
    "general_config": "", "parallel_analysts": false
  },
  "risk": {"cvar_alpha": 0.01, "min_history": 10, "min_run_length": 2, "convergence_overlap": 0.8,
           "convergence_epsilon": 0.0001, "max_episodes": 4},
  "portfolio": {"shrinkage_lambda": 0.3, "lookback": 60, "capital": 10000.0, "integer_shares": false,
                "min_news": 800, "select_count": 3, "max_iterations": 10000, "tolerance": 1e-10},
  "backtest": {"discount": 1.0, "risk_free_daily": 0.0, "annualize_sharpe": false, "resume": false,
               "replications": 1, "seed": 0, "training_run_dir": null}
})");
}

void apply_override(json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  require(eq != std::string::npos && eq > 0, "override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json patch = value;
  std::vector<std::string> parts;
  std::stringstream ss(key);
  for (std::string part; std::getline(ss, part, '.');) {
    require(!part.empty(), "override key '" + key + "' has an empty segment");
    parts.push_back(part);
  }
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) patch = json{{*it, patch}};
  merge_into(config, patch, "");
}

RunConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
  RunConfig c;
  c.merged = j;
  try {
    const auto task = j.at("task").get<std::string>();
    require(task == "single_stock" || task == "portfolio", "task must be single_stock or portfolio, got '" + task + "'");
    c.task = task == "portfolio" ? TaskMode::Portfolio : TaskMode::SingleStock;
    c.universe = j.at("universe").get<std::vector<std::string>>();
  } catch (const json::exception&) {
    raise(ErrorCode::ConfigError, "config keys 'task' and 'universe' have the wrong type");
  }
  std::set<std::string> unique(c.universe.begin(), c.universe.end());
  require(unique.size() == c.universe.size(), "universe lists a ticker twice");

  for (const auto& [ticker, path] : j.at("data").at("prices").items()) {
    require(path.is_string(), "data.prices." + ticker + " must be a path");
    c.price_files[ticker] = resolve(base_dir, path.get<std::string>());
  }
  for (const auto& p : get<std::vector<std::string>>(j, "data", "documents")) c.document_files.push_back(resolve(base_dir, p));
  c.momentum_window = get<int>(j, "data", "momentum_window");
  require(c.momentum_window >= 1, "data.momentum_window must be >= 1");
  const auto field = get<std::string>(j, "data", "price_field");
  require(field == "close" || field == "adj_close", "data.price_field must be close or adj_close");
  c.price_field = field == "close" ? PriceField::Close : PriceField::AdjClose;

  c.train = get_range(j, "train");
  c.test = get_range(j, "test");
  if (c.train && c.test) require(c.train->end < c.test->start, "train range must precede test range");

  c.top_k = get<std::size_t>(j, "memory", "top_k");
  require(c.top_k >= 1, "memory.top_k must be >= 1");
  c.embedding_dim = get<std::size_t>(j, "memory", "embedding_dim");
  require(c.embedding_dim >= 1, "memory.embedding_dim must be >= 1");
  c.default_importance = get<double>(j, "memory", "default_importance");
  require(c.default_importance >= 0, "memory.default_importance must be >= 0");
  const auto& decay = j.at("memory").at("decay");
  auto ratio = [&](const char* key) {
    double v = 0;
    try {
      v = decay.at(key).get<double>();
    } catch (const json::exception&) {
      raise(ErrorCode::ConfigError, std::string("memory.decay.") + key + " must be a number");
    }
    require(v > 0 && v < 1, std::string("memory.decay.") + key + " must lie in (0, 1)");
    return v;
  };
  c.decay.news = ratio("news");
  c.decay.ecc_transcript = ratio("ecc_transcript");
  c.decay.form10q = ratio("form10q");
  c.decay.form10k = ratio("form10k");
  c.decay.analyst_report = ratio("analyst_report");
  c.decay.market_data = ratio("market_data");
  c.decay.manager = ratio("manager");

  c.trading_temperature = get<double>(j, "llm", "trading_temperature");
  c.belief_temperature = get<double>(j, "llm", "belief_temperature");
  c.max_retries = get<int>(j, "llm", "max_retries");
  require(c.max_retries >= 0, "llm.max_retries must be >= 0");
  c.timeout_ms = get<int>(j, "llm", "timeout_ms");
  require(c.timeout_ms > 0, "llm.timeout_ms must be positive");
  c.min_request_interval_ms = get<int>(j, "llm", "min_request_interval_ms");
  if (!j["llm"]["endpoint"].is_null()) c.endpoint = get<std::string>(j, "llm", "endpoint");
  if (!j["llm"]["model"].is_null()) c.model = get<std::string>(j, "llm", "model");

  for (const auto& id : get<std::vector<std::string>>(j, "agents", "analysts")) {
    auto role = parse_agent_role(id);
    require(role && is_analyst(*role), "unknown analyst '" + id + "'");
    require(std::find(c.analysts.begin(), c.analysts.end(), *role) == c.analysts.end(), "analyst '" + id + "' listed twice");
    c.analysts.push_back(*role);
  }
  c.data_analyst_uses_llm = get<bool>(j, "agents", "data_analyst_uses_llm");
  c.feedback_sigma_multiple = get<double>(j, "agents", "feedback_sigma_multiple");
  c.feedback_window = get<std::size_t>(j, "agents", "feedback_window");
  c.feedback_min_history = get<std::size_t>(j, "agents", "feedback_min_history");
  c.position_size = get<double>(j, "agents", "position_size");
  require(c.position_size > 0, "agents.position_size must be positive");
  for (const auto& [id, p] : j.at("agents").at("profile_files").items()) {
    require(p.is_string(), "agents.profile_files." + id + " must be a path");
    c.profile_files[id] = resolve(base_dir, p.get<std::string>());
  }
  for (const auto& [id, p] : j.at("agents").at("prompt_files").items()) {
    require(p.is_string(), "agents.prompt_files." + id + " must be a path");
    c.prompt_files[id] = resolve(base_dir, p.get<std::string>());
  }
  c.general_config = get<std::string>(j, "agents", "general_config");
  c.parallel_analysts = get<bool>(j, "agents", "parallel_analysts");

  c.cvar_alpha = get<double>(j, "risk", "cvar_alpha");
  require(c.cvar_alpha > 0 && c.cvar_alpha < 1, "risk.cvar_alpha must lie in (0, 1)");
  c.risk_min_history = get<std::size_t>(j, "risk", "min_history");
  c.min_run_length = get<std::size_t>(j, "risk", "min_run_length");
  require(c.min_run_length >= 1, "risk.min_run_length must be >= 1");
  c.convergence_overlap = get<double>(j, "risk", "convergence_overlap");
  c.convergence_epsilon = get<double>(j, "risk", "convergence_epsilon");
  c.max_episodes = get<int>(j, "risk", "max_episodes");
  require(c.max_episodes >= 1, "risk.max_episodes must be >= 1");

  c.shrinkage_lambda = get<double>(j, "portfolio", "shrinkage_lambda");
  require(c.shrinkage_lambda >= 0 && c.shrinkage_lambda <= 1, "portfolio.shrinkage_lambda must lie in [0, 1]");
  c.lookback = get<std::size_t>(j, "portfolio", "lookback");
  require(c.lookback >= 2, "portfolio.lookback must be >= 2");
  c.capital = get<double>(j, "portfolio", "capital");
  require(c.capital > 0, "portfolio.capital must be positive");
  c.integer_shares = get<bool>(j, "portfolio", "integer_shares");
  c.min_news = get<std::size_t>(j, "portfolio", "min_news");
  c.select_count = get<std::size_t>(j, "portfolio", "select_count");
  c.max_iterations = get<std::size_t>(j, "portfolio", "max_iterations");
  c.solver_tolerance = get<double>(j, "portfolio", "tolerance");

  c.discount = get<double>(j, "backtest", "discount");
  require(c.discount > 0 && c.discount <= 1, "backtest.discount must lie in (0, 1]");
  c.risk_free_daily = get<double>(j, "backtest", "risk_free_daily");
  c.annualize_sharpe = get<bool>(j, "backtest", "annualize_sharpe");
  c.resume = get<bool>(j, "backtest", "resume");
  c.replications = get<int>(j, "backtest", "replications");
  require(c.replications >= 1, "backtest.replications must be >= 1");
  c.seed = get<std::uint64_t>(j, "backtest", "seed");
  if (!j["backtest"]["training_run_dir"].is_null())
    c.training_run_dir = resolve(base_dir, get<std::string>(j, "backtest", "training_run_dir"));

  require(!c.universe.empty(), "universe is empty");
  if (c.task == TaskMode::SingleStock) require(c.universe.size() == 1, "single_stock task needs exactly one ticker");
  for (const auto& t : c.universe) require(c.price_files.count(t) > 0, "no price file configured for " + t);
  return c;
}

RunConfig load_config(const std::filesystem::path& path, std::span<const std::string> overrides) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::FileNotFound, "cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  json file = json::parse(buf.str(), nullptr, false);
  if (file.is_discarded() || !file.is_object()) raise(ErrorCode::ConfigError, "config " + path.string() + " is not a JSON object");
  json merged = default_config_json();
  merge_into(merged, file, "");
  for (const auto& o : overrides) apply_override(merged, o);
  auto base = path.parent_path();
  if (base.empty()) base = ".";
  return parse_config(merged, base);
}

}  // namespace fincon
