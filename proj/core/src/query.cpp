#include "spal/query.hpp"

#include <fstream>

#include "query_json.hpp"

namespace spal {

std::vector<QueryRecord> load_queries(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    return detail::queries_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void save_queries(const std::vector<QueryRecord>& queries, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << detail::queries_to_json(queries).dump() << '\n';
}

}  // namespace spal
