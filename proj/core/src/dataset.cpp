#include "igcam/dataset.hpp"

#include <fstream>
#include <sstream>

#include "igcam/error.hpp"

namespace igcam {

Dataset load_dataset_index(const std::filesystem::path& index_path) {
  std::ifstream in(index_path);
  if (!in) throw InputError("cannot open '" + index_path.string() + "'");

  Dataset dataset;
  dataset.root = index_path.parent_path();

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    DatasetRecord rec;
    std::string label;
    if (!std::getline(fields, rec.image, '\t') ||
        !std::getline(fields, rec.mask, '\t') || !std::getline(fields, label)) {
      throw InputError(index_path.string() + ":" + std::to_string(line_no) +
                       ": expected image<TAB>mask<TAB>label");
    }
    try {
      rec.label = std::stoi(label);
    } catch (const std::exception&) {
      throw InputError(index_path.string() + ":" + std::to_string(line_no) +
                       ": label '" + label + "' is not an integer");
    }
    if (rec.label < 0) {
      throw InputError(index_path.string() + ":" + std::to_string(line_no) +
                       ": negative label");
    }
    dataset.records.push_back(std::move(rec));
  }

  std::string missing;
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    for (const auto& p : {dataset.image_path(i), dataset.mask_path(i)}) {
      if (!std::filesystem::exists(p)) missing += "\n  " + p.string();
    }
  }
  if (!missing.empty()) {
    throw InputError("dataset '" + index_path.string() +
                     "' references missing files:" + missing);
  }
  return dataset;
}

void save_dataset_index(const Dataset& dataset,
                        const std::filesystem::path& index_path) {
  std::ofstream out(index_path, std::ios::trunc);
  if (!out) throw InputError("cannot write '" + index_path.string() + "'");
  out << "# image\tmask\tlabel\n";
  for (const DatasetRecord& rec : dataset.records) {
    out << rec.image << '\t' << rec.mask << '\t' << rec.label << '\n';
  }
  if (!out) throw InputError("short write to '" + index_path.string() + "'");
}

}  // namespace igcam
