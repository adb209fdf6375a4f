#pragma once

#include <json.hpp>

#include "spal/query.hpp"

namespace spal::detail {

inline const char* status_name(QueryStatus status) {
  switch (status) {
    case QueryStatus::kPending:
      return "pending";
    case QueryStatus::kAnswered:
      return "answered";
    case QueryStatus::kSkipped:
      return "skipped";
  }
  return "pending";
}

inline QueryStatus parse_status(const std::string& name) {
  if (name == "pending") return QueryStatus::kPending;
  if (name == "answered") return QueryStatus::kAnswered;
  if (name == "skipped") return QueryStatus::kSkipped;
  throw FormatError("unknown query status '" + name + "'");
}

inline nlohmann::json query_to_json(const QueryRecord& q) {
  nlohmann::json j{{"query_id", q.query_id},
                   {"image_id", q.image_id},
                   {"round", q.round},
                   {"pixels", q.pixels},
                   {"status", status_name(q.status)}};
  j["answer"] = q.answer ? nlohmann::json(*q.answer) : nlohmann::json(nullptr);
  return j;
}

inline QueryRecord query_from_json(const nlohmann::json& j) {
  QueryRecord q;
  q.query_id = j.at("query_id").get<std::uint32_t>();
  q.image_id = j.at("image_id").get<ImageId>();
  q.round = j.at("round").get<std::uint32_t>();
  q.pixels = j.at("pixels").get<std::vector<PixelIndex>>();
  const auto& answer = j.at("answer");
  if (!answer.is_null()) q.answer = answer.get<ClassId>();
  q.status = j.contains("status") ? parse_status(j.at("status").get<std::string>())
                                  : (q.answer ? QueryStatus::kAnswered : QueryStatus::kPending);
  if (q.status == QueryStatus::kAnswered && !q.answer) throw FormatError("answered query without answer");
  return q;
}

inline nlohmann::json queries_to_json(const std::vector<QueryRecord>& queries) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& q : queries) arr.push_back(query_to_json(q));
  return arr;
}

inline std::vector<QueryRecord> queries_from_json(const nlohmann::json& arr) {
  std::vector<QueryRecord> out;
  for (const auto& j : arr) out.push_back(query_from_json(j));
  return out;
}

}  // namespace spal::detail
