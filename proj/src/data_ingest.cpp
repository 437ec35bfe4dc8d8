#include "fincon/data_ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fincon/error.hpp"

namespace fincon {

using nlohmann::json;

namespace {

constexpr std::string_view kPriceHeader = "date,open,high,low,close,adj_close,volume";
constexpr const char* kPriceColumns[] = {"date", "open", "high", "low", "close", "adj_close", "volume"};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::FileNotFound, path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(text.substr(start, end - start));
    if (end == text.size()) break;
    start = end + 1;
  }
  return lines;
}

std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace

std::string_view to_string(DocKind kind) noexcept {
  switch (kind) {
    case DocKind::News: return "news";
    case DocKind::Form10K: return "form10k";
    case DocKind::Form10Q: return "form10q";
    case DocKind::EccTranscript: return "ecc_transcript";
    case DocKind::AnalystReport: return "analyst_report";
  }
  return "news";
}

std::optional<DocKind> parse_doc_kind(std::string_view text) noexcept {
  for (auto k : kAllDocKinds)
    if (to_string(k) == text) return k;
  return std::nullopt;
}

std::optional<std::size_t> PriceSeries::index_of(Date d) const {
  auto it = std::lower_bound(bars.begin(), bars.end(), d,
                             [](const PriceBar& b, Date x) { return b.date < x; });
  if (it == bars.end() || it->date != d) return std::nullopt;
  return static_cast<std::size_t>(it - bars.begin());
}

std::optional<std::size_t> PriceSeries::last_index_at_or_before(Date d) const {
  auto it = std::upper_bound(bars.begin(), bars.end(), d,
                             [](Date x, const PriceBar& b) { return x < b.date; });
  if (it == bars.begin()) return std::nullopt;
  return static_cast<std::size_t>(it - bars.begin()) - 1;
}

double PriceSeries::price(std::size_t i, PriceField field) const {
  const auto& b = bars.at(i);
  return field == PriceField::Close ? b.close : b.adj_close;
}

std::size_t TickerObservation::document_count() const {
  std::size_t n = 0;
  for (const auto& [_, docs] : documents) n += docs.size();
  return n;
}

PriceSeries parse_price_csv(std::string_view text, std::string ticker) {
  PriceSeries series{std::move(ticker), {}};
  auto lines = split_lines(text);
  if (lines.empty() || trim(lines[0]) != kPriceHeader)
    throw SchemaError(0, "header", "expected '" + std::string(kPriceHeader) + "'");

  std::size_t row = 0;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    auto line = trim(lines[li]);
    if (line.empty()) continue;
    ++row;
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      auto comma = line.find(',', start);
      fields.push_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields.size() != 7)
      throw SchemaError(row, fields.size() < 7 ? kPriceColumns[fields.size()] : "volume",
                        "expected 7 fields, got " + std::to_string(fields.size()));

    PriceBar bar;
    auto date = Date::parse(trim(fields[0]));
    if (!date) throw SchemaError(row, "date", "not an ISO-8601 date");
    bar.date = *date;
    double* targets[] = {&bar.open, &bar.high, &bar.low, &bar.close, &bar.adj_close, &bar.volume};
    for (std::size_t c = 0; c < 6; ++c) {
      auto v = parse_number(fields[c + 1]);
      if (!v) throw SchemaError(row, kPriceColumns[c + 1], "not a decimal number");
      *targets[c] = *v;
    }
    for (std::size_t c = 0; c < 5; ++c)
      if (*targets[c] <= 0) throw SchemaError(row, kPriceColumns[c + 1], "price must be > 0");
    if (bar.volume < 0) throw SchemaError(row, "volume", "volume must be >= 0");
    if (bar.low > bar.high) throw SchemaError(row, "low", "low exceeds high");
    if (bar.open < bar.low || bar.open > bar.high) throw SchemaError(row, "open", "open outside [low, high]");
    if (bar.close < bar.low || bar.close > bar.high)
      throw SchemaError(row, "close", "close outside [low, high]");

    if (!series.bars.empty() && bar.date <= series.bars.back().date)
      raise(ErrorCode::NonMonotoneDates,
            series.ticker + ": row " + std::to_string(row) + " date " + bar.date.iso() +
                " does not follow " + series.bars.back().date.iso());
    series.bars.push_back(bar);
  }
  return series;
}

PriceSeries load_price_series(const std::filesystem::path& path, std::string ticker) {
  if (!std::filesystem::exists(path)) raise(ErrorCode::FileNotFound, path.string());
  return parse_price_csv(read_file(path), std::move(ticker));
}

std::vector<TextDocument> parse_documents_jsonl(std::string_view text) {
  std::vector<TextDocument> docs;
  std::set<std::string> seen;
  std::size_t row = 0;
  for (auto line : split_lines(text)) {
    line = trim(line);
    if (line.empty()) continue;
    ++row;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw SchemaError(row, "<line>", e.what());
    }
    if (!j.is_object()) throw SchemaError(row, "<line>", "expected a JSON object");
    auto str = [&](const char* key) -> std::string {
      auto it = j.find(key);
      if (it == j.end() || !it->is_string()) throw SchemaError(row, key, "missing or not a string");
      return it->get<std::string>();
    };
    TextDocument d;
    d.doc_id = str("doc_id");
    d.ticker = str("ticker");
    auto kind = parse_doc_kind(str("kind"));
    if (!kind) throw SchemaError(row, "kind", "unknown document kind");
    d.kind = *kind;
    auto published = Date::parse(str("published"));
    if (!published) throw SchemaError(row, "published", "not an ISO-8601 date");
    d.published = *published;
    d.body = str("body");
    if (d.body.empty()) throw SchemaError(row, "body", "body must be non-empty");
    if (!seen.insert(d.doc_id).second) throw SchemaError(row, "doc_id", "duplicate doc_id " + d.doc_id);
    docs.push_back(std::move(d));
  }
  return docs;
}

std::vector<TextDocument> load_documents(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) raise(ErrorCode::FileNotFound, path.string());
  return parse_documents_jsonl(read_file(path));
}

double log_return(double prev_price, double next_price) {
  if (!(prev_price > 0) || !(next_price > 0))
    raise(ErrorCode::NonPositivePrice, "log_return requires positive prices");
  return std::log(next_price / prev_price);
}

double momentum(const PriceSeries& series, Date date, int window) {
  if (window <= 0) raise(ErrorCode::InvalidArgument, "momentum window must be positive");
  auto idx = series.last_index_at_or_before(date);
  if (!idx || *idx < static_cast<std::size_t>(window))
    raise(ErrorCode::InsufficientHistory, series.ticker + ": momentum window " +
                                              std::to_string(window) + " needs more bars before " +
                                              date.iso());
  const double now = series.bars[*idx].adj_close;
  const double then = series.bars[*idx - static_cast<std::size_t>(window)].adj_close;
  return now / then - 1.0;
}

MarketData::MarketData(std::vector<PriceSeries> series, std::vector<TextDocument> documents,
                       int momentum_window)
    : series_(std::move(series)), momentum_window_(momentum_window) {
  if (series_.empty()) raise(ErrorCode::ConfigError, "at least one price series is required");
  std::vector<Date> dates;
  for (const auto& b : series_.front().bars) dates.push_back(b.date);
  calendar_ = TradingCalendar(std::move(dates));

  std::sort(documents.begin(), documents.end(), [](const TextDocument& a, const TextDocument& b) {
    return std::tie(a.published, a.doc_id) < std::tie(b.published, b.doc_id);
  });
  for (auto& d : documents) {
    auto when = calendar_.on_or_after(d.published);
    if (!when || !has_series(d.ticker)) {
      unattached_.push_back(std::move(d));
      continue;
    }
    docs_by_date_[*when].push_back(std::move(d));
  }
}

const PriceSeries& MarketData::series(std::string_view ticker) const {
  for (const auto& s : series_)
    if (s.ticker == ticker) return s;
  raise(ErrorCode::ConfigError, "no price series for ticker " + std::string(ticker));
}

bool MarketData::has_series(std::string_view ticker) const {
  return std::any_of(series_.begin(), series_.end(),
                     [&](const PriceSeries& s) { return s.ticker == ticker; });
}

std::vector<std::string> MarketData::tickers() const {
  std::vector<std::string> out;
  for (const auto& s : series_) out.push_back(s.ticker);
  return out;
}

Observation assemble_observation(const MarketData& data, Date date,
                                 std::span<const std::string> universe) {
  if (!data.calendar().contains(date))
    raise(ErrorCode::DateOutOfRange, date.iso() + " is not a trading day in the loaded range");

  Observation obs;
  obs.date = date;
  for (const auto& ticker : universe) {
    auto& slot = obs.tickers[ticker];
    const auto& s = data.series(ticker);
    if (auto idx = s.last_index_at_or_before(date)) {
      slot.bar = s.bars[*idx];
      if (*idx >= 1)
        slot.indicators["log_return"] = log_return(s.bars[*idx - 1].adj_close, s.bars[*idx].adj_close);
      if (*idx >= static_cast<std::size_t>(data.momentum_window()))
        slot.indicators["momentum"] = momentum(s, date, data.momentum_window());
    }
  }
  auto it = data.documents_by_date().find(date);
  if (it != data.documents_by_date().end()) {
    for (const auto& d : it->second) {
      auto slot = obs.tickers.find(d.ticker);
      if (slot != obs.tickers.end()) slot->second.documents[d.kind].push_back(d);
    }
  }
  return obs;
}

std::string Observation::serialize() const {
  json j;
  j["date"] = date.iso();
  json tick = json::object();
  for (const auto& [name, t] : tickers) {
    json e;
    if (t.bar) {
      e["bar"] = {{"date", t.bar->date.iso()}, {"open", t.bar->open},   {"high", t.bar->high},
                  {"low", t.bar->low},         {"close", t.bar->close}, {"adj_close", t.bar->adj_close},
                  {"volume", t.bar->volume}};
    } else {
      e["bar"] = nullptr;
    }
    e["indicators"] = t.indicators;
    json docs = json::object();
    for (const auto& [kind, list] : t.documents) {
      json arr = json::array();
      for (const auto& d : list)
        arr.push_back({{"doc_id", d.doc_id}, {"published", d.published.iso()}, {"body", d.body}});
      docs[std::string(to_string(kind))] = std::move(arr);
    }
    e["documents"] = std::move(docs);
    tick[name] = std::move(e);
  }
  j["tickers"] = std::move(tick);
  return j.dump();
}

}  // namespace fincon
