#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spal/raster.hpp"

namespace spal {

enum class Split { kTrain, kVal };

struct DatasetImage {
  ImageId id = 0;
  std::filesystem::path image;  // RGB PNG
  std::filesystem::path labels;  // single-channel PNG
  Split split = Split::kTrain;
};

/// Image list plus the label space, read from a JSON manifest:
///
///   {"num_classes": 4, "ignore_id": 255, "class_names": [...],
///    "images": [{"id": 0, "image": "img/0.png", "labels": "gt/0.png",
///                "split": "train"}, ...]}
///
/// Relative paths resolve against the manifest's directory.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<DatasetImage> images, ClassId num_classes, ClassId ignore_id,
          std::vector<std::string> class_names = {});

  static Dataset load(const std::filesystem::path& manifest);
  void save(const std::filesystem::path& manifest) const;

  const std::vector<DatasetImage>& images() const { return images_; }
  std::vector<DatasetImage> split(Split which) const;
  const DatasetImage& find(ImageId id) const;
  ClassId num_classes() const { return num_classes_; }
  ClassId ignore_id() const { return ignore_id_; }
  const std::vector<std::string>& class_names() const { return class_names_; }

  RgbImage load_image(ImageId id) const;
  LabelMap load_labels(ImageId id) const;

 private:
  std::vector<DatasetImage> images_;
  ClassId num_classes_ = 0;
  ClassId ignore_id_ = 255;
  std::vector<std::string> class_names_;
};

}  // namespace spal
