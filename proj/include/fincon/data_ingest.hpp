#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fincon/date.hpp"

namespace fincon {

struct PriceBar {
  Date date;
  double open = 0;
  double high = 0;
  double low = 0;
  double close = 0;
  double adj_close = 0;
  double volume = 0;
};

enum class PriceField : std::uint8_t { Close, AdjClose };

struct PriceSeries {
  std::string ticker;
  std::vector<PriceBar> bars;  // strictly increasing dates

  // Index of the bar dated exactly `d`, if present.
  [[nodiscard]] std::optional<std::size_t> index_of(Date d) const;
  // Index of the last bar dated <= d, if any.
  [[nodiscard]] std::optional<std::size_t> last_index_at_or_before(Date d) const;
  [[nodiscard]] double price(std::size_t i, PriceField field) const;
};

enum class DocKind : std::uint8_t { News, Form10K, Form10Q, EccTranscript, AnalystReport };

inline constexpr DocKind kAllDocKinds[] = {DocKind::News, DocKind::Form10K, DocKind::Form10Q,
                                           DocKind::EccTranscript, DocKind::AnalystReport};

std::string_view to_string(DocKind kind) noexcept;
std::optional<DocKind> parse_doc_kind(std::string_view text) noexcept;

struct TextDocument {
  std::string doc_id;
  std::string ticker;
  DocKind kind = DocKind::News;
  Date published;
  std::string body;
};

/// Per-ticker slice of one day's observation.
struct TickerObservation {
  std::optional<PriceBar> bar;               // latest bar dated <= observation date
  std::map<std::string, double> indicators;  // "log_return", "momentum" when history allows
  std::map<DocKind, std::vector<TextDocument>> documents;  // ordered by (published, doc_id)

  [[nodiscard]] std::size_t document_count() const;
};

struct Observation {
  Date date;
  std::map<std::string, TickerObservation> tickers;

  /// Canonical JSON text; identical inputs give identical bytes.
  [[nodiscard]] std::string serialize() const;
};

// CSV header: date,open,high,low,close,adj_close,volume
PriceSeries load_price_series(const std::filesystem::path& path, std::string ticker);
PriceSeries parse_price_csv(std::string_view text, std::string ticker);

// JSONL with keys doc_id, ticker, kind, published, body.
std::vector<TextDocument> load_documents(const std::filesystem::path& path);
std::vector<TextDocument> parse_documents_jsonl(std::string_view text);

/// ln(next / prev).
double log_return(double prev_price, double next_price);

/// adj_close(date) / adj_close(date - window trading days) - 1.
double momentum(const PriceSeries& series, Date date, int window);

/// Loaded corpora plus the trading calendar (dates of the first ticker).
class MarketData {
public:
  MarketData(std::vector<PriceSeries> series, std::vector<TextDocument> documents,
             int momentum_window = 20);

  [[nodiscard]] const TradingCalendar& calendar() const { return calendar_; }
  [[nodiscard]] const PriceSeries& series(std::string_view ticker) const;
  [[nodiscard]] bool has_series(std::string_view ticker) const;
  [[nodiscard]] std::vector<std::string> tickers() const;
  [[nodiscard]] int momentum_window() const { return momentum_window_; }

  // Documents keyed by the trading date they attach to.
  [[nodiscard]] const std::map<Date, std::vector<TextDocument>>& documents_by_date() const {
    return docs_by_date_;
  }
  // Documents published after the last trading day or for unknown tickers.
  [[nodiscard]] const std::vector<TextDocument>& unattached_documents() const {
    return unattached_;
  }

private:
  std::vector<PriceSeries> series_;
  TradingCalendar calendar_;
  std::map<Date, std::vector<TextDocument>> docs_by_date_;
  std::vector<TextDocument> unattached_;
  int momentum_window_;
};

Observation assemble_observation(const MarketData& data, Date date,
                                 std::span<const std::string> universe);

}  // namespace fincon
