#include "spal/annotation_service.hpp"

#include <thread>
#include <unordered_map>

#include <httplib.h>
#include <json.hpp>

#include "binary_io.hpp"

namespace spal {

using nlohmann::json;

void QueryBroker::set_round(std::uint32_t round, std::uint32_t clicks_before) {
  std::lock_guard lock(mutex_);
  round_ = round;
  clicks_before_ = clicks_before;
  answered_this_round_ = 0;
}

void QueryBroker::publish(const std::vector<QueryRecord>& queries) {
  {
    std::lock_guard lock(mutex_);
    for (const auto& q : queries) queries_[q.query_id] = q;
  }
  changed_.notify_all();
}

bool QueryBroker::wait_resolved(const std::vector<std::uint32_t>& ids) {
  std::unique_lock lock(mutex_);
  changed_.wait(lock, [&] {
    if (closed_) return true;
    for (std::uint32_t id : ids) {
      auto it = queries_.find(id);
      if (it != queries_.end() && it->second.status == QueryStatus::kPending) return false;
    }
    return true;
  });
  return !closed_;
}

QueryBroker::Outcome QueryBroker::answer(std::uint32_t query_id, std::uint32_t class_id) {
  {
    std::lock_guard lock(mutex_);
    auto it = queries_.find(query_id);
    if (it == queries_.end()) return Outcome::kNotFound;
    if (it->second.status != QueryStatus::kPending) return Outcome::kConflict;
    if (class_id >= num_classes_) return Outcome::kInvalidClass;
    it->second.status = QueryStatus::kAnswered;
    it->second.answer = static_cast<ClassId>(class_id);
    ++answered_this_round_;
  }
  changed_.notify_all();
  return Outcome::kOk;
}

QueryBroker::Outcome QueryBroker::skip(std::uint32_t query_id) {
  {
    std::lock_guard lock(mutex_);
    auto it = queries_.find(query_id);
    if (it == queries_.end()) return Outcome::kNotFound;
    if (it->second.status != QueryStatus::kPending) return Outcome::kConflict;
    it->second.status = QueryStatus::kSkipped;
  }
  changed_.notify_all();
  return Outcome::kOk;
}

std::optional<QueryRecord> QueryBroker::next_pending() const {
  std::lock_guard lock(mutex_);
  for (const auto& [id, q] : queries_) {
    if (q.status == QueryStatus::kPending) return q;
  }
  return std::nullopt;
}

std::optional<QueryRecord> QueryBroker::find(std::uint32_t query_id) const {
  std::lock_guard lock(mutex_);
  auto it = queries_.find(query_id);
  if (it == queries_.end()) return std::nullopt;
  return it->second;
}

QueryBroker::Progress QueryBroker::progress() const {
  std::lock_guard lock(mutex_);
  Progress p;
  p.round = round_;
  p.answered = answered_this_round_;
  p.clicks_spent = clicks_before_ + answered_this_round_;
  for (const auto& [id, q] : queries_) p.pending += q.status == QueryStatus::kPending;
  return p;
}

void QueryBroker::close() {
  {
    std::lock_guard lock(mutex_);
    closed_ = true;
  }
  changed_.notify_all();
}

void HumanAnnotator::resolve(std::vector<QueryRecord>& batch) {
  std::vector<std::uint32_t> ids;
  for (const auto& q : batch) ids.push_back(q.query_id);
  broker_->publish(batch);
  if (!broker_->wait_resolved(ids)) throw Error("annotation service closed with queries pending");
  for (auto& q : batch) q = *broker_->find(q.query_id);
}

std::vector<std::uint8_t> render_query_overlay(Extent extent, std::span<const PixelIndex> pixels) {
  const std::size_t area = extent.area();
  std::vector<std::uint8_t> inside(area, 0);
  for (PixelIndex p : pixels) {
    if (p >= area) throw InvariantError("overlay pixel outside image");
    inside[p] = 1;
  }
  std::vector<std::uint8_t> rgba(area * 4, 0);
  for (PixelIndex p : pixels) {
    bool boundary = false;
    const std::size_t x = p % extent.width, y = p / extent.width;
    if (x == 0 || y == 0 || x + 1 == extent.width || y + 1 == extent.height) boundary = true;
    for_each_neighbor(extent, p, [&](std::size_t q) { boundary = boundary || !inside[q]; });
    std::uint8_t* px = rgba.data() + 4 * std::size_t{p};
    px[0] = 255;
    px[1] = 255;
    px[2] = 0;
    px[3] = boundary ? 255 : 60;
  }
  return rgba;
}

struct AnnotationService::Impl {
  std::shared_ptr<QueryBroker> broker;
  Dataset dataset;
  httplib::Server server;
  std::thread worker;
  std::mutex extent_mutex;
  std::unordered_map<ImageId, Extent> extents;

  Extent extent_of(ImageId id) {
    {
      std::lock_guard lock(extent_mutex);
      if (auto it = extents.find(id); it != extents.end()) return it->second;
    }
    const Extent e = dataset.load_image(id).extent();
    std::lock_guard lock(extent_mutex);
    extents[id] = e;
    return e;
  }

  static void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void send_error(httplib::Response& res, int status, const std::string& message) {
    send_json(res, status, {{"error", message}});
  }

  static void send_outcome(httplib::Response& res, QueryBroker::Outcome outcome) {
    switch (outcome) {
      case QueryBroker::Outcome::kOk:
        send_json(res, 200, {{"ok", true}});
        return;
      case QueryBroker::Outcome::kConflict:
        send_error(res, 409, "query already resolved");
        return;
      case QueryBroker::Outcome::kInvalidClass:
        send_error(res, 422, "class_id out of range");
        return;
      case QueryBroker::Outcome::kNotFound:
        send_error(res, 404, "unknown query");
        return;
    }
  }

  void routes() {
    server.Get("/api/progress", [this](const httplib::Request&, httplib::Response& res) {
      const auto p = broker->progress();
      send_json(res, 200,
                {{"round", p.round}, {"pending", p.pending}, {"answered", p.answered}, {"clicks_spent", p.clicks_spent}});
    });

    server.Get("/api/queries/next", [this](const httplib::Request&, httplib::Response& res) {
      const auto q = broker->next_pending();
      if (!q) {
        res.status = 204;
        return;
      }
      const Extent e = extent_of(q->image_id);
      send_json(res, 200,
                {{"query_id", q->query_id},
                 {"image_id", q->image_id},
                 {"round", q->round},
                 {"pixel_count", q->pixels.size()},
                 {"width", e.width},
                 {"height", e.height},
                 {"image_url", "/img/" + std::to_string(q->image_id) + ".png"},
                 {"overlay_url", "/overlay/" + std::to_string(q->query_id) + ".png"},
                 {"class_names", dataset.class_names()}});
    });

    server.Get(R"(/img/(\d+)\.png)", [this](const httplib::Request& req, httplib::Response& res) {
      try {
        const auto& entry = dataset.find(static_cast<ImageId>(std::stoul(req.matches[1])));
        const auto bytes = detail::read_file(entry.image);
        res.set_content(std::string(bytes.begin(), bytes.end()), "image/png");
      } catch (const std::exception&) {
        send_error(res, 404, "unknown image");
      }
    });

    server.Get(R"(/overlay/(\d+)\.png)", [this](const httplib::Request& req, httplib::Response& res) {
      const auto q = broker->find(static_cast<std::uint32_t>(std::stoul(req.matches[1])));
      if (!q) return send_error(res, 404, "unknown query");
      const Extent e = extent_of(q->image_id);
      const auto png = encode_rgba_png(e, render_query_overlay(e, q->pixels));
      res.set_content(std::string(png.begin(), png.end()), "image/png");
    });

    server.Post(R"(/api/queries/(\d+)/answer)", [this](const httplib::Request& req, httplib::Response& res) {
      const auto id = static_cast<std::uint32_t>(std::stoul(req.matches[1]));
      const json body = json::parse(req.body, nullptr, false);
      if (body.is_discarded() || !body.contains("class_id") || !body["class_id"].is_number_integer()) {
        return send_error(res, 400, "expected {\"class_id\": <int>}");
      }
      const auto class_id = body["class_id"].get<std::int64_t>();
      if (class_id < 0) return send_error(res, 422, "class_id out of range");
      send_outcome(res, broker->answer(id, static_cast<std::uint32_t>(std::min<std::int64_t>(class_id, UINT32_MAX))));
    });

    server.Post(R"(/api/queries/(\d+)/skip)", [this](const httplib::Request& req, httplib::Response& res) {
      send_outcome(res, broker->skip(static_cast<std::uint32_t>(std::stoul(req.matches[1]))));
    });
  }
};

AnnotationService::AnnotationService(std::shared_ptr<QueryBroker> broker, Dataset dataset)
    : impl_(std::make_unique<Impl>()) {
  impl_->broker = std::move(broker);
  impl_->dataset = std::move(dataset);
  impl_->routes();
}

AnnotationService::~AnnotationService() { stop(); }

int AnnotationService::start(const std::string& host, int port) {
  auto& server = impl_->server;
  int bound = port;
  if (port == 0) {
    bound = server.bind_to_any_port(host);
    if (bound < 0) throw Error("cannot bind " + host);
  } else if (!server.bind_to_port(host, port)) {
    throw Error("cannot bind " + host + ":" + std::to_string(port));
  }
  impl_->worker = std::thread([&server] { server.listen_after_bind(); });
  server.wait_until_ready();
  return bound;
}

void AnnotationService::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->worker.joinable()) impl_->worker.join();
}

}  // namespace spal
