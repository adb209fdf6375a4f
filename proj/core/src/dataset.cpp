#include "spal/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <json.hpp>

namespace spal {

using nlohmann::json;

Dataset::Dataset(std::vector<DatasetImage> images, ClassId num_classes, ClassId ignore_id,
                 std::vector<std::string> class_names)
    : images_(std::move(images)), num_classes_(num_classes), ignore_id_(ignore_id),
      class_names_(std::move(class_names)) {
  if (num_classes_ < 2) throw InvariantError("Dataset: need at least two classes");
  std::set<ImageId> ids;
  for (const auto& image : images_) {
    if (!ids.insert(image.id).second) throw InvariantError("Dataset: duplicate image id " + std::to_string(image.id));
  }
  if (class_names_.empty()) {
    for (ClassId c = 0; c < num_classes_; ++c) class_names_.push_back("class_" + std::to_string(c));
  }
  if (class_names_.size() != num_classes_) throw InvariantError("Dataset: class_names length != num_classes");
}

Dataset Dataset::load(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw FormatError("cannot open manifest " + manifest.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(manifest.string() + ": " + e.what());
  }
  const auto root = manifest.parent_path();
  std::vector<DatasetImage> images;
  try {
    for (const auto& entry : doc.at("images")) {
      DatasetImage image;
      image.id = entry.at("id").get<ImageId>();
      image.image = root / entry.at("image").get<std::string>();
      image.labels = root / entry.at("labels").get<std::string>();
      const std::string split = entry.value("split", "train");
      if (split == "train") {
        image.split = Split::kTrain;
      } else if (split == "val") {
        image.split = Split::kVal;
      } else {
        throw FormatError(manifest.string() + ": unknown split '" + split + "'");
      }
      images.push_back(std::move(image));
    }
    return Dataset(std::move(images), doc.at("num_classes").get<ClassId>(), doc.value("ignore_id", ClassId{255}),
                   doc.value("class_names", std::vector<std::string>{}));
  } catch (const json::exception& e) {
    throw FormatError(manifest.string() + ": " + e.what());
  }
}

void Dataset::save(const std::filesystem::path& manifest) const {
  const auto root = manifest.parent_path();
  json doc;
  doc["num_classes"] = num_classes_;
  doc["ignore_id"] = ignore_id_;
  doc["class_names"] = class_names_;
  doc["images"] = json::array();
  for (const auto& image : images_) {
    doc["images"].push_back({{"id", image.id},
                             {"image", std::filesystem::relative(image.image, root).generic_string()},
                             {"labels", std::filesystem::relative(image.labels, root).generic_string()},
                             {"split", image.split == Split::kTrain ? "train" : "val"}});
  }
  if (!root.empty()) std::filesystem::create_directories(root);
  std::ofstream out(manifest);
  out << doc.dump(2) << '\n';
}

std::vector<DatasetImage> Dataset::split(Split which) const {
  std::vector<DatasetImage> out;
  std::copy_if(images_.begin(), images_.end(), std::back_inserter(out),
               [which](const DatasetImage& image) { return image.split == which; });
  return out;
}

const DatasetImage& Dataset::find(ImageId id) const {
  auto it = std::find_if(images_.begin(), images_.end(), [id](const DatasetImage& image) { return image.id == id; });
  if (it == images_.end()) throw Error("Dataset: unknown image id " + std::to_string(id));
  return *it;
}

RgbImage Dataset::load_image(ImageId id) const { return load_rgb_png(find(id).image); }

LabelMap Dataset::load_labels(ImageId id) const {
  const auto& entry = find(id);
  LabelMap labels = load_label_map(entry.labels, num_classes_, ignore_id_);
  return labels;
}

}  // namespace spal
