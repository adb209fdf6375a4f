#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "spal/raster.hpp"

namespace spal {

enum class QueryStatus { kPending, kAnswered, kSkipped };

/// One dominant-label query over a frozen snapshot of region pixels.
struct QueryRecord {
  std::uint32_t query_id = 0;
  ImageId image_id = 0;
  std::uint32_t round = 0;
  /// Ascending pixel indices.
  std::vector<PixelIndex> pixels;
  QueryStatus status = QueryStatus::kPending;
  /// Dominant label, set once answered.
  std::optional<ClassId> answer;
  /// Clicks charged: 1 when answered, 0 otherwise.
  std::uint32_t clicks() const { return status == QueryStatus::kAnswered ? 1u : 0u; }

  friend bool operator==(const QueryRecord&, const QueryRecord&) = default;
};

// queries.json: [{"query_id", "image_id", "round", "pixels": [...],
//                 "status": "pending|answered|skipped", "answer": c|null}]
std::vector<QueryRecord> load_queries(const std::filesystem::path& path);
void save_queries(const std::vector<QueryRecord>& queries, const std::filesystem::path& path);

}  // namespace spal
