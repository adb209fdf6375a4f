#include "spal/oracle.hpp"

#include <algorithm>

#include "spal/superpixel.hpp"

namespace spal {

OracleRegions oracle_superpixels(const LabelMap& gt) {
  std::vector<std::uint32_t> values(gt.data().begin(), gt.data().end());
  OracleRegions out;
  out.segmentation = connected_components(gt.extent(), values);
  out.ignored.assign(out.segmentation.num_regions(), false);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt.ignored(i)) out.ignored[out.segmentation[i]] = true;
  }
  return out;
}

std::optional<OracleAnswer> answer_query(std::span<const PixelIndex> pixels, const LabelMap& gt) {
  std::vector<std::size_t> votes(gt.num_classes(), 0);
  std::size_t valid = 0;
  for (PixelIndex p : pixels) {
    if (p >= gt.size()) throw InvariantError("answer_query: pixel index out of range");
    if (gt.ignored(p)) continue;
    ++votes[gt[p]];
    ++valid;
  }
  if (valid == 0) return std::nullopt;
  const auto best = std::max_element(votes.begin(), votes.end());
  OracleAnswer answer;
  answer.dominant = static_cast<ClassId>(best - votes.begin());
  answer.noise_rate = static_cast<double>(valid - *best) / static_cast<double>(valid);
  return answer;
}

}  // namespace spal
