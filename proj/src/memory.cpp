#include "fincon/memory.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>

#include <json.hpp>

#include "fincon/error.hpp"

namespace fincon {

using nlohmann::json;

std::string_view to_string(MemoryLayer layer) noexcept {
  switch (layer) {
    case MemoryLayer::Working: return "working";
    case MemoryLayer::Procedural: return "procedural";
    case MemoryLayer::Episodic: return "episodic";
  }
  return "procedural";
}

std::optional<MemoryLayer> parse_memory_layer(std::string_view text) noexcept {
  for (auto l : {MemoryLayer::Working, MemoryLayer::Procedural, MemoryLayer::Episodic})
    if (to_string(l) == text) return l;
  return std::nullopt;
}

double DecayTable::for_kind(DocKind kind) const {
  switch (kind) {
    case DocKind::News: return news;
    case DocKind::Form10K: return form10k;
    case DocKind::Form10Q: return form10q;
    case DocKind::EccTranscript: return ecc_transcript;
    case DocKind::AnalystReport: return analyst_report;
  }
  return news;
}

std::vector<double> HashEmbedder::embed(std::string_view text) const {
  std::vector<double> v(dimension_, 0.0);
  auto add_token = [&](std::string_view tok) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : tok) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    const auto bucket = static_cast<std::size_t>(h % dimension_);
    v[bucket] += (h >> 63) ? -1.0 : 1.0;
  };
  std::string tok;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      tok.push_back(static_cast<char>(std::tolower(c)));
    } else if (!tok.empty()) {
      add_token(tok);
      tok.clear();
    }
  }
  if (!tok.empty()) add_token(tok);

  double norm = 0;
  for (double x : v) norm += x * x;
  if (norm == 0) {
    v[0] = 1.0;
    return v;
  }
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

double relevancy_score(std::span<const double> query, std::span<const double> event) {
  if (query.size() != event.size())
    raise(ErrorCode::DimensionMismatch, "embedding sizes " + std::to_string(query.size()) + " and " +
                                            std::to_string(event.size()));
  double dot = 0, nq = 0, ne = 0;
  for (std::size_t i = 0; i < query.size(); ++i) {
    dot += query[i] * event[i];
    nq += query[i] * query[i];
    ne += event[i] * event[i];
  }
  if (nq == 0 || ne == 0) raise(ErrorCode::ZeroVector, "cosine similarity of a zero vector");
  return dot / (std::sqrt(nq) * std::sqrt(ne));
}

double importance_score(const MemoryEvent& event, Date as_of, const TradingCalendar& calendar) {
  if (as_of < event.created_at)
    raise(ErrorCode::FutureEvent, event.event_id + " created " + event.created_at.iso() +
                                      " is after " + as_of.iso());
  const long dt = calendar.trading_days_between(event.created_at, as_of);
  return event.initial_importance * std::pow(event.decay_ratio, static_cast<double>(dt)) +
         event.access_bonus;
}

MemoryStore::MemoryStore(std::size_t dimension, TradingCalendar calendar)
    : dimension_(dimension), calendar_(std::move(calendar)) {}

MemoryStore::MemoryStore(const MemoryStore& other) {
  std::shared_lock lock(other.mutex_);
  dimension_ = other.dimension_;
  calendar_ = other.calendar_;
  events_ = other.events_;
}

MemoryStore& MemoryStore::operator=(const MemoryStore& other) {
  if (this == &other) return *this;
  std::unique_lock lhs(mutex_, std::defer_lock);
  std::shared_lock rhs(other.mutex_, std::defer_lock);
  std::lock(lhs, rhs);
  dimension_ = other.dimension_;
  calendar_ = other.calendar_;
  events_ = other.events_;
  return *this;
}

void MemoryStore::set_calendar(TradingCalendar calendar) {
  std::unique_lock lock(mutex_);
  calendar_ = std::move(calendar);
}

void MemoryStore::insert(MemoryEvent event) {
  if (event.embedding.size() != dimension_)
    raise(ErrorCode::DimensionMismatch, event.event_id + ": embedding has " +
                                            std::to_string(event.embedding.size()) + " entries, store expects " +
                                            std::to_string(dimension_));
  if (!(event.decay_ratio > 0 && event.decay_ratio < 1))
    raise(ErrorCode::InvalidArgument, event.event_id + ": decay ratio must lie in (0, 1)");
  if (!(event.initial_importance >= 0 && event.initial_importance <= 1))
    raise(ErrorCode::InvalidArgument, event.event_id + ": initial importance must lie in [0, 1]");
  if (event.access_bonus < 0) raise(ErrorCode::InvalidArgument, event.event_id + ": negative access bonus");
  std::unique_lock lock(mutex_);
  auto id = event.event_id;
  if (!events_.emplace(id, std::move(event)).second)
    raise(ErrorCode::InvalidArgument, "duplicate memory event id " + id);
}

void MemoryStore::boost_access(const std::string& event_id, double amount) {
  std::unique_lock lock(mutex_);
  auto it = events_.find(event_id);
  if (it == events_.end()) raise(ErrorCode::UnknownEventId, event_id);
  it->second.access_bonus += amount;
}

bool MemoryStore::contains(const std::string& event_id) const {
  std::shared_lock lock(mutex_);
  return events_.count(event_id) != 0;
}

std::optional<MemoryEvent> MemoryStore::get(const std::string& event_id) const {
  std::shared_lock lock(mutex_);
  auto it = events_.find(event_id);
  if (it == events_.end()) return std::nullopt;
  return it->second;
}

std::size_t MemoryStore::size() const {
  std::shared_lock lock(mutex_);
  return events_.size();
}

void MemoryStore::erase_layers(std::span<const MemoryLayer> layers) {
  std::unique_lock lock(mutex_);
  std::erase_if(events_, [&](const auto& kv) {
    return std::find(layers.begin(), layers.end(), kv.second.layer) != layers.end();
  });
}

namespace {

// Scales to [0,1]; a degenerate (constant) column maps to 0.5.
void min_max_scale(std::vector<double>& xs) {
  if (xs.empty()) return;
  const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  const double mn = *lo, mx = *hi;
  if (mx == mn) {
    std::fill(xs.begin(), xs.end(), 0.5);
    return;
  }
  for (double& x : xs) x = (x - mn) / (mx - mn);
}

}  // namespace

std::vector<ScoredEvent> MemoryStore::retrieve_top_k(const MemoryQuery& query) const {
  if (query.k == 0) raise(ErrorCode::InvalidArgument, "k must be >= 1");
  if (query.embedding.size() != dimension_)
    raise(ErrorCode::DimensionMismatch, "query embedding has " + std::to_string(query.embedding.size()) +
                                            " entries, store expects " + std::to_string(dimension_));
  std::vector<ScoredEvent> scored;
  {
    std::shared_lock lock(mutex_);
    for (const auto& [id, e] : events_) {
      if (e.owner != query.owner || e.created_at > query.as_of) continue;
      if (query.layer && e.layer != *query.layer) continue;
      ScoredEvent s;
      s.event = e;
      s.raw_relevancy = relevancy_score(query.embedding, e.embedding);
      s.raw_importance = importance_score(e, query.as_of, calendar_);
      scored.push_back(std::move(s));
    }
  }
  std::vector<double> rel, imp;
  rel.reserve(scored.size());
  imp.reserve(scored.size());
  for (const auto& s : scored) {
    rel.push_back(s.raw_relevancy);
    imp.push_back(s.raw_importance);
  }
  min_max_scale(rel);
  min_max_scale(imp);
  for (std::size_t i = 0; i < scored.size(); ++i) {
    scored[i].relevancy = rel[i];
    scored[i].importance = imp[i];
    scored[i].gamma = rel[i] + imp[i];
  }
  auto better = [](const ScoredEvent& a, const ScoredEvent& b) {
    if (a.gamma != b.gamma) return a.gamma > b.gamma;
    if (a.event.created_at != b.event.created_at) return a.event.created_at > b.event.created_at;
    return a.event.event_id < b.event.event_id;
  };
  const std::size_t k = std::min(query.k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k), scored.end(), better);
  scored.resize(k);
  return scored;
}

std::vector<MemoryEvent> MemoryStore::events() const {
  std::vector<MemoryEvent> out;
  {
    std::shared_lock lock(mutex_);
    out.reserve(events_.size());
    for (const auto& [_, e] : events_) out.push_back(e);
  }
  std::stable_sort(out.begin(), out.end(), [](const MemoryEvent& a, const MemoryEvent& b) {
    return a.created_at < b.created_at;
  });
  return out;
}

std::string MemoryStore::snapshot_jsonl() const {
  std::string out;
  for (const auto& e : events()) {
    json j = {{"event_id", e.event_id},
              {"owner", e.owner},
              {"layer", to_string(e.layer)},
              {"content", e.content},
              {"embedding", e.embedding},
              {"initial_importance", e.initial_importance},
              {"decay_ratio", e.decay_ratio},
              {"created_at", e.created_at.iso()},
              {"access_bonus", e.access_bonus}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

void MemoryStore::save_snapshot(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorCode::IoError, "cannot write " + path.string());
  out << snapshot_jsonl();
}

MemoryStore MemoryStore::parse_snapshot(std::string_view text, std::size_t dimension,
                                        TradingCalendar calendar) {
  MemoryStore store(dimension, std::move(calendar));
  std::size_t row = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    start = end + 1;
    if (line.empty()) continue;
    ++row;
    try {
      auto j = json::parse(line);
      MemoryEvent e;
      e.event_id = j.at("event_id").get<std::string>();
      e.owner = j.at("owner").get<std::string>();
      auto layer = parse_memory_layer(j.at("layer").get<std::string>());
      if (!layer) throw SchemaError(row, "layer", "unknown memory layer");
      e.layer = *layer;
      e.content = j.at("content").get<std::string>();
      e.embedding = j.at("embedding").get<std::vector<double>>();
      e.initial_importance = j.at("initial_importance").get<double>();
      e.decay_ratio = j.at("decay_ratio").get<double>();
      auto created = Date::parse(j.at("created_at").get<std::string>());
      if (!created) throw SchemaError(row, "created_at", "not an ISO-8601 date");
      e.created_at = *created;
      e.access_bonus = j.at("access_bonus").get<double>();
      store.insert(std::move(e));
    } catch (const json::exception& ex) {
      throw SchemaError(row, "<line>", ex.what());
    }
  }
  return store;
}

MemoryStore MemoryStore::load_snapshot(const std::filesystem::path& path, std::size_t dimension,
                                       TradingCalendar calendar) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::FileNotFound, path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_snapshot(ss.str(), dimension, std::move(calendar));
}

}  // namespace fincon
