#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace flaremap {

using Count = std::int64_t;
using Period = std::int32_t;

/// One nonzero cell of a panel. Entity and category are indices into the
/// dataset's id tables.
struct PanelEntry {
  std::uint32_t entity;
  Period period;
  std::uint32_t category;
  Count count;

  friend bool operator==(const PanelEntry&, const PanelEntry&) = default;
};

/// Sparse entity x period x category count panel.
///
/// Entries are strictly positive, unique per (entity, period, category) and kept
/// sorted in that order. Periods are the contiguous range [first_period, last_period].
class PanelDataset {
 public:
  PanelDataset() = default;

  /// Validates and canonicalizes: zero entries are dropped, duplicates summed.
  /// Throws ValidationError on negative counts, out-of-range indices or an
  /// empty period range.
  PanelDataset(std::vector<std::string> entities, std::vector<std::string> categories,
               Period first_period, Period last_period, std::vector<PanelEntry> entries);

  const std::vector<std::string>& entities() const noexcept { return entities_; }
  const std::vector<std::string>& categories() const noexcept { return categories_; }
  Period first_period() const noexcept { return first_period_; }
  Period last_period() const noexcept { return last_period_; }
  std::size_t period_count() const noexcept {
    return static_cast<std::size_t>(last_period_ - first_period_ + 1);
  }
  std::span<const PanelEntry> entries() const noexcept { return entries_; }

  /// Count at (entity, period, category) by id; 0 when absent.
  Count count(std::string_view entity, Period period, std::string_view category) const;

  /// Total count per entity over all periods and categories, indexed like entities().
  std::vector<Count> entity_totals() const;

  std::uint32_t entity_index(std::string_view entity) const;
  std::uint32_t category_index(std::string_view category) const;

  friend bool operator==(const PanelDataset&, const PanelDataset&) = default;

 private:
  std::vector<std::string> entities_;
  std::vector<std::string> categories_;
  Period first_period_ = 0;
  Period last_period_ = -1;
  std::vector<PanelEntry> entries_;
};

/// Column names used when reading a panel CSV.
struct CsvSchema {
  std::string entity = "entity";
  std::string period = "period";
  std::string category = "category";
  std::string count = "count";
};

/// Reads a panel from CSV. Entity and category tables are sorted by id. Every
/// row, including zero-count rows, declares its entity, category and period as
/// members of the index sets. Throws ParseError (with line number) on malformed
/// rows and ValidationError when the observed periods have a gap.
PanelDataset ingest_csv(std::istream& in, const CsvSchema& schema = {});
PanelDataset ingest_csv(const std::filesystem::path& path, const CsvSchema& schema = {});

/// Writes entries as `entity,period,category,count` rows in canonical order.
void write_csv(std::ostream& out, const PanelDataset& ds);

/// Sum over windows [t, t + window - 1]; result periods are labeled by window
/// start and run to last_period - window + 1 (no partial windows).
PanelDataset moving_window(const PanelDataset& ds, int window);

enum class Rescale { Log, Share };

struct TransformSpec {
  int window = 5;
  Rescale rescale = Rescale::Log;
};

struct PointLabel {
  std::string entity;
  Period period;

  friend bool operator==(const PointLabel&, const PointLabel&) = default;
  friend auto operator<=>(const PointLabel&, const PointLabel&) = default;
};

/// Dense row-major point cloud with one (entity, period) label per row.
class PointCloud {
 public:
  PointCloud() = default;
  PointCloud(std::size_t dimension, std::vector<PointLabel> labels, std::vector<double> values);

  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t dimension() const noexcept { return dimension_; }
  bool empty() const noexcept { return labels_.empty(); }

  std::span<const double> row(std::size_t i) const noexcept {
    return {values_.data() + i * dimension_, dimension_};
  }
  std::span<const double> values() const noexcept { return values_; }
  const std::vector<PointLabel>& labels() const noexcept { return labels_; }
  const PointLabel& label(std::size_t i) const { return labels_.at(i); }

 private:
  std::size_t dimension_ = 0;
  std::vector<PointLabel> labels_;
  std::vector<double> values_;
};

/// An entity-period that produced no point.
struct DroppedPoint {
  std::string entity;
  Period period;
  std::string reason;
};

struct RescaleResult {
  PointCloud cloud;
  std::vector<DroppedPoint> dropped;
};

/// Log: ln(count + 1). Share: count / row total. Entity-periods whose window
/// total is zero produce no point and are listed in `dropped`.
RescaleResult rescale(const PanelDataset& windowed, Rescale mode);

/// Drop report as JSON lines `{"entity":..,"period":..,"reason":..}`.
void write_drop_report(std::ostream& out, std::span<const DroppedPoint> dropped);

const char* to_string(Rescale mode) noexcept;
Rescale parse_rescale(std::string_view text);

}  // namespace flaremap
