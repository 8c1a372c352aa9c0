#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace igcam {

// One evaluation sample: paths are stored as written in the index and
// resolved against the index file's directory.
struct DatasetRecord {
  std::string image;
  std::string mask;
  int label = 0;
};

struct Dataset {
  std::filesystem::path root;
  std::vector<DatasetRecord> records;

  std::filesystem::path image_path(std::size_t i) const {
    return root / records[i].image;
  }
  std::filesystem::path mask_path(std::size_t i) const {
    return root / records[i].mask;
  }
};

// Index format: one record per line, `image<TAB>mask<TAB>label`, paths
// relative to the index file. Blank lines and lines starting with '#' are
// skipped. Every referenced file is checked for existence; missing files are
// listed exhaustively before the load aborts.
Dataset load_dataset_index(const std::filesystem::path& index_path);

void save_dataset_index(const Dataset& dataset,
                        const std::filesystem::path& index_path);

}  // namespace igcam
