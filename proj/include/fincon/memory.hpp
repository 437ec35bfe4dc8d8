#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fincon/data_ingest.hpp"
#include "fincon/date.hpp"

namespace fincon {

enum class MemoryLayer : std::uint8_t { Working, Procedural, Episodic };

std::string_view to_string(MemoryLayer layer) noexcept;
std::optional<MemoryLayer> parse_memory_layer(std::string_view text) noexcept;

/// Importance added to an event each time it is credited for a significant
/// gain or loss.
inline constexpr double kAccessBoost = 5.0;
inline constexpr std::size_t kDefaultTopK = 5;
inline constexpr double kDefaultInitialImportance = 0.5;

struct MemoryEvent {
  std::string event_id;
  std::string owner;
  MemoryLayer layer = MemoryLayer::Procedural;
  std::string content;
  std::vector<double> embedding;
  double initial_importance = kDefaultInitialImportance;
  double decay_ratio = 0.9;  // per trading day, strictly inside (0, 1)
  Date created_at;
  double access_bonus = 0.0;
};

struct MemoryQuery {
  std::string owner;
  std::string query_text;
  std::vector<double> embedding;
  Date as_of;
  std::size_t k = kDefaultTopK;
  std::optional<MemoryLayer> layer;  // nullopt: all layers
};

struct ScoredEvent {
  MemoryEvent event;
  double relevancy = 0;   // min-max scaled over the candidate set
  double importance = 0;  // min-max scaled over the candidate set
  double gamma = 0;       // relevancy + importance
  double raw_relevancy = 0;
  double raw_importance = 0;
};

/// Per-day decay ratios by information source.
struct DecayTable {
  double news = 0.90;
  double ecc_transcript = 0.97;
  double form10q = 0.97;
  double form10k = 0.99;
  double analyst_report = 0.95;
  double market_data = 0.90;  // data and selection analysts
  double manager = 0.95;      // decisions, reflections, episode summaries

  [[nodiscard]] double for_kind(DocKind kind) const;
};

class Embedder {
public:
  virtual ~Embedder() = default;
  [[nodiscard]] virtual std::size_t dimension() const = 0;
  [[nodiscard]] virtual std::vector<double> embed(std::string_view text) const = 0;
};

/// Feature-hashing embedder: lower-cased alphanumeric tokens are hashed with
/// 64-bit FNV-1a into signed buckets, then L2-normalized. Byte-stable across
/// platforms; never returns the zero vector.
class HashEmbedder final : public Embedder {
public:
  explicit HashEmbedder(std::size_t dimension = 64) : dimension_(dimension) {}
  [[nodiscard]] std::size_t dimension() const override { return dimension_; }
  [[nodiscard]] std::vector<double> embed(std::string_view text) const override;

private:
  std::size_t dimension_;
};

/// Cosine similarity.
double relevancy_score(std::span<const double> query, std::span<const double> event);

/// v * decay^dt + access_bonus, dt in whole trading days (calendar days when
/// the calendar is empty).
double importance_score(const MemoryEvent& event, Date as_of, const TradingCalendar& calendar = {});

/// Thread-safe event store shared by all agents; events are partitioned by
/// owner and never visible across owners during retrieval.
class MemoryStore {
public:
  explicit MemoryStore(std::size_t dimension, TradingCalendar calendar = {});

  MemoryStore(const MemoryStore& other);
  MemoryStore& operator=(const MemoryStore& other);

  [[nodiscard]] std::size_t dimension() const { return dimension_; }
  void set_calendar(TradingCalendar calendar);

  void insert(MemoryEvent event);
  void boost_access(const std::string& event_id, double amount = kAccessBoost);
  [[nodiscard]] bool contains(const std::string& event_id) const;
  [[nodiscard]] std::optional<MemoryEvent> get(const std::string& event_id) const;
  [[nodiscard]] std::size_t size() const;

  void erase_layers(std::span<const MemoryLayer> layers);

  /// Top-k by gamma, descending; ties go to the newer event, then the
  /// lexicographically smaller id.
  [[nodiscard]] std::vector<ScoredEvent> retrieve_top_k(const MemoryQuery& query) const;

  /// All events ordered by (created_at, event_id).
  [[nodiscard]] std::vector<MemoryEvent> events() const;

  [[nodiscard]] std::string snapshot_jsonl() const;
  void save_snapshot(const std::filesystem::path& path) const;
  static MemoryStore load_snapshot(const std::filesystem::path& path, std::size_t dimension,
                                   TradingCalendar calendar = {});
  static MemoryStore parse_snapshot(std::string_view text, std::size_t dimension,
                                    TradingCalendar calendar = {});

private:
  std::size_t dimension_;
  TradingCalendar calendar_;
  std::map<std::string, MemoryEvent> events_;
  mutable std::shared_mutex mutex_;
};

}  // namespace fincon
