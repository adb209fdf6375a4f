#pragma once

#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "spal/dataset.hpp"
#include "spal/loop.hpp"
#include "spal/query.hpp"

namespace spal {

/// Thread-safe hand-off of pending queries between the loop driver and the
/// HTTP endpoints. The first answer for a query wins.
class QueryBroker {
 public:
  enum class Outcome { kOk, kConflict, kInvalidClass, kNotFound };

  struct Progress {
    std::uint32_t round = 0;
    std::uint32_t pending = 0;
    std::uint32_t answered = 0;
    std::uint32_t clicks_spent = 0;
  };

  explicit QueryBroker(std::uint32_t num_classes) : num_classes_(num_classes) {}

  /// Sets the reported round and the clicks spent before it.
  void set_round(std::uint32_t round, std::uint32_t clicks_before);
  void publish(const std::vector<QueryRecord>& queries);
  /// Blocks until every listed query is answered or skipped, or close().
  /// Returns false when closed first.
  bool wait_resolved(const std::vector<std::uint32_t>& ids);

  Outcome answer(std::uint32_t query_id, std::uint32_t class_id);
  Outcome skip(std::uint32_t query_id);

  /// Lowest-id pending query.
  std::optional<QueryRecord> next_pending() const;
  std::optional<QueryRecord> find(std::uint32_t query_id) const;
  Progress progress() const;
  std::uint32_t num_classes() const { return num_classes_; }
  void close();

 private:
  std::uint32_t num_classes_;
  mutable std::mutex mutex_;
  std::condition_variable changed_;
  std::map<std::uint32_t, QueryRecord> queries_;
  std::uint32_t round_ = 0;
  std::uint32_t clicks_before_ = 0;
  std::uint32_t answered_this_round_ = 0;
  bool closed_ = false;
};

/// Publishes each batch to the broker and waits for a human to resolve it.
class HumanAnnotator : public Annotator {
 public:
  explicit HumanAnnotator(std::shared_ptr<QueryBroker> broker) : broker_(std::move(broker)) {}
  void resolve(std::vector<QueryRecord>& batch) override;

 private:
  std::shared_ptr<QueryBroker> broker_;
};

/// RGBA overlay of one query region: boundary opaque, interior tinted,
/// everything else transparent.
std::vector<std::uint8_t> render_query_overlay(Extent extent, std::span<const PixelIndex> pixels);

/// JSON-over-HTTP endpoints for the annotation console:
///   GET  /api/progress
///   GET  /api/queries/next              (204 when nothing is pending)
///   GET  /img/{image_id}.png
///   GET  /overlay/{query_id}.png
///   POST /api/queries/{query_id}/answer {"class_id": c}   (409 / 422)
///   POST /api/queries/{query_id}/skip
class AnnotationService {
 public:
  AnnotationService(std::shared_ptr<QueryBroker> broker, Dataset dataset);
  ~AnnotationService();
  AnnotationService(const AnnotationService&) = delete;
  AnnotationService& operator=(const AnnotationService&) = delete;

  /// Binds and starts serving on a background thread. Port 0 picks a free
  /// port. Returns the bound port.
  int start(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace spal
