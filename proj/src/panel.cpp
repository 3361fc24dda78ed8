#include "flaremap/panel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <tuple>

#include "json.hpp"

#include "flaremap/csv.hpp"
#include "flaremap/error.hpp"

namespace flaremap {

namespace {

bool entry_less(const PanelEntry& a, const PanelEntry& b) {
  return std::tie(a.entity, a.period, a.category) < std::tie(b.entity, b.period, b.category);
}

std::uint32_t index_of(const std::vector<std::string>& table, std::string_view id, const char* what) {
  auto it = std::lower_bound(table.begin(), table.end(), id);
  if (it == table.end() || *it != id) throw LookupError(std::string("unknown ") + what + " '" + std::string(id) + "'");
  return static_cast<std::uint32_t>(it - table.begin());
}

template <class Int>
bool parse_int(std::string_view text, Int& out) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

}  // namespace

PanelDataset::PanelDataset(std::vector<std::string> entities, std::vector<std::string> categories,
                           Period first_period, Period last_period, std::vector<PanelEntry> entries)
    : entities_(std::move(entities)),
      categories_(std::move(categories)),
      first_period_(first_period),
      last_period_(last_period) {
  if (last_period_ < first_period_) throw ValidationError("panel has an empty period range");
  for (const auto& e : entries) {
    if (e.count < 0) throw ValidationError("negative count");
    if (e.entity >= entities_.size() || e.category >= categories_.size())
      throw ValidationError("entry references an undeclared entity or category");
    if (e.period < first_period_ || e.period > last_period_)
      throw ValidationError("entry period " + std::to_string(e.period) + " outside [" +
                            std::to_string(first_period_) + ", " + std::to_string(last_period_) + "]");
  }
  std::erase_if(entries, [](const PanelEntry& e) { return e.count == 0; });
  std::sort(entries.begin(), entries.end(), entry_less);
  for (const auto& e : entries) {
    if (!entries_.empty() && !entry_less(entries_.back(), e)) {
      entries_.back().count += e.count;
    } else {
      entries_.push_back(e);
    }
  }
}

std::uint32_t PanelDataset::entity_index(std::string_view entity) const {
  if (std::is_sorted(entities_.begin(), entities_.end())) return index_of(entities_, entity, "entity");
  auto it = std::find(entities_.begin(), entities_.end(), entity);
  if (it == entities_.end()) throw LookupError("unknown entity '" + std::string(entity) + "'");
  return static_cast<std::uint32_t>(it - entities_.begin());
}

std::uint32_t PanelDataset::category_index(std::string_view category) const {
  if (std::is_sorted(categories_.begin(), categories_.end())) return index_of(categories_, category, "category");
  auto it = std::find(categories_.begin(), categories_.end(), category);
  if (it == categories_.end()) throw LookupError("unknown category '" + std::string(category) + "'");
  return static_cast<std::uint32_t>(it - categories_.begin());
}

Count PanelDataset::count(std::string_view entity, Period period, std::string_view category) const {
  const PanelEntry key{entity_index(entity), period, category_index(category), 0};
  auto it = std::lower_bound(entries_.begin(), entries_.end(), key, entry_less);
  if (it == entries_.end() || entry_less(key, *it)) return 0;
  return it->count;
}

std::vector<Count> PanelDataset::entity_totals() const {
  std::vector<Count> totals(entities_.size(), 0);
  for (const auto& e : entries_) totals[e.entity] += e.count;
  return totals;
}

PanelDataset ingest_csv(std::istream& in, const CsvSchema& schema) {
  std::string line;
  std::size_t line_no = 0;
  if (!csv::read_line(in, line, line_no)) throw ParseError(1, "empty input, expected a header row");

  const auto header = csv::split_record(line);
  auto column = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ParseError(line_no, "missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t c_entity = column(schema.entity);
  const std::size_t c_period = column(schema.period);
  const std::size_t c_category = column(schema.category);
  const std::size_t c_count = column(schema.count);
  const std::size_t width = std::max({c_entity, c_period, c_category, c_count}) + 1;

  struct RawRow {
    std::string entity;
    Period period;
    std::string category;
    Count count;
  };
  std::vector<RawRow> rows;
  std::set<std::string> entity_ids;
  std::set<std::string> category_ids;
  std::set<Period> periods;

  while (csv::read_line(in, line, line_no)) {
    auto fields = csv::split_record(line);
    if (fields.size() < width)
      throw ParseError(line_no, "expected at least " + std::to_string(width) + " fields, got " +
                                    std::to_string(fields.size()));
    RawRow row;
    row.entity = fields[c_entity];
    row.category = fields[c_category];
    if (row.entity.empty()) throw ParseError(line_no, "empty entity id");
    if (row.category.empty()) throw ParseError(line_no, "empty category id");
    if (!parse_int(fields[c_period], row.period))
      throw ParseError(line_no, "period '" + fields[c_period] + "' is not an integer");
    if (!parse_int(fields[c_count], row.count))
      throw ParseError(line_no, "count '" + fields[c_count] + "' is not an integer");
    if (row.count < 0) throw ParseError(line_no, "count must be nonnegative");
    entity_ids.insert(row.entity);
    category_ids.insert(row.category);
    periods.insert(row.period);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ValidationError("panel has no data rows");

  Period previous = *periods.begin();
  for (Period p : periods) {
    if (p > previous + 1)
      throw ValidationError("periods are not contiguous: no rows for " + std::to_string(previous + 1) +
                            (p - 1 > previous + 1 ? ".." + std::to_string(p - 1) : std::string()));
    previous = p;
  }

  std::vector<std::string> entities(entity_ids.begin(), entity_ids.end());
  std::vector<std::string> categories(category_ids.begin(), category_ids.end());
  std::vector<PanelEntry> entries;
  entries.reserve(rows.size());
  for (const auto& r : rows) {
    entries.push_back({index_of(entities, r.entity, "entity"), r.period, index_of(categories, r.category, "category"),
                       r.count});
  }
  return PanelDataset(std::move(entities), std::move(categories), *periods.begin(), *periods.rbegin(),
                      std::move(entries));
}

PanelDataset ingest_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open panel file " + path.string());
  return ingest_csv(in, schema);
}

void write_csv(std::ostream& out, const PanelDataset& ds) {
  out << "entity,period,category,count\n";
  for (const auto& e : ds.entries()) {
    out << csv::escape_field(ds.entities()[e.entity]) << ',' << e.period << ','
        << csv::escape_field(ds.categories()[e.category]) << ',' << e.count << '\n';
  }
}

PanelDataset moving_window(const PanelDataset& ds, int window) {
  if (window < 1) throw ValidationError("window must be >= 1");
  if (static_cast<std::size_t>(window) > ds.period_count())
    throw ValidationError("window " + std::to_string(window) + " exceeds the " + std::to_string(ds.period_count()) +
                          "-period span");
  const Period first = ds.first_period();
  const Period last = ds.last_period() - window + 1;
  std::vector<PanelEntry> out;
  out.reserve(ds.entries().size() * static_cast<std::size_t>(window));
  for (const auto& e : ds.entries()) {
    // p_{s} contributes to every window start t with t <= s <= t + W - 1.
    const Period lo = std::max(first, e.period - window + 1);
    const Period hi = std::min(last, e.period);
    for (Period t = lo; t <= hi; ++t) out.push_back({e.entity, t, e.category, e.count});
  }
  return PanelDataset(ds.entities(), ds.categories(), first, last, std::move(out));
}

PointCloud::PointCloud(std::size_t dimension, std::vector<PointLabel> labels, std::vector<double> values)
    : dimension_(dimension), labels_(std::move(labels)), values_(std::move(values)) {
  if (values_.size() != labels_.size() * dimension_)
    throw ValidationError("point cloud values do not match labels x dimension");
}

RescaleResult rescale(const PanelDataset& windowed, Rescale mode) {
  const std::size_t dim = windowed.categories().size();
  const auto entries = windowed.entries();
  RescaleResult result;
  std::vector<PointLabel> labels;
  std::vector<double> values;

  std::size_t pos = 0;
  for (std::uint32_t i = 0; i < windowed.entities().size(); ++i) {
    for (Period t = windowed.first_period(); t <= windowed.last_period(); ++t) {
      const std::size_t begin = pos;
      while (pos < entries.size() && entries[pos].entity == i && entries[pos].period == t) ++pos;
      if (begin == pos) {
        result.dropped.push_back({windowed.entities()[i], t, "zero_total"});
        continue;
      }
      labels.push_back({windowed.entities()[i], t});
      const std::size_t offset = values.size();
      values.resize(offset + dim, 0.0);
      if (mode == Rescale::Log) {
        for (std::size_t k = begin; k < pos; ++k)
          values[offset + entries[k].category] = std::log(static_cast<double>(entries[k].count) + 1.0);
      } else {
        Count total = 0;
        for (std::size_t k = begin; k < pos; ++k) total += entries[k].count;
        for (std::size_t k = begin; k < pos; ++k)
          values[offset + entries[k].category] = static_cast<double>(entries[k].count) / static_cast<double>(total);
      }
    }
  }
  result.cloud = PointCloud(dim, std::move(labels), std::move(values));
  return result;
}

void write_drop_report(std::ostream& out, std::span<const DroppedPoint> dropped) {
  for (const auto& d : dropped) {
    nlohmann::json j = {{"entity", d.entity}, {"period", d.period}, {"reason", d.reason}};
    out << j.dump() << '\n';
  }
}

const char* to_string(Rescale mode) noexcept { return mode == Rescale::Log ? "log" : "share"; }

Rescale parse_rescale(std::string_view text) {
  if (text == "log") return Rescale::Log;
  if (text == "share") return Rescale::Share;
  throw ValidationError("unknown rescale '" + std::string(text) + "' (expected log|share)");
}

}  // namespace flaremap
