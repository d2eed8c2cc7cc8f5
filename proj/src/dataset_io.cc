#include <algorithm>
#include <fstream>
#include <sstream>

#include "noisyal/dataset.h"
#include "noisyal/errors.h"
#include "noisyal/json_util.h"

namespace noisyal {

namespace detail {

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw RuntimeError("cannot write " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw RuntimeError("write failed for " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw RuntimeError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

nlohmann::json parse_json(std::string_view text, std::string_view what) {
  try {
    return nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string(what) + ": " + e.what());
  }
}

const nlohmann::json& require(const nlohmann::json& obj, std::string_view key,
                              const std::string& path) {
  if (!obj.is_object()) throw ParseError(path + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(path + ": missing key '" + std::string(key) + "'");
  return *it;
}

double require_number(const nlohmann::json& obj, std::string_view key,
                      const std::string& path) {
  const auto& v = require(obj, key, path);
  if (!v.is_number()) {
    throw ParseError(path + "." + std::string(key) + ": expected a number");
  }
  return v.get<double>();
}

std::int64_t require_integer(const nlohmann::json& obj, std::string_view key,
                             const std::string& path) {
  const auto& v = require(obj, key, path);
  if (!v.is_number_integer()) {
    throw ParseError(path + "." + std::string(key) + ": expected an integer");
  }
  return v.get<std::int64_t>();
}

const nlohmann::json& require_array(const nlohmann::json& obj, std::string_view key,
                                    const std::string& path) {
  const auto& v = require(obj, key, path);
  if (!v.is_array()) throw ParseError(path + "." + std::string(key) + ": expected an array");
  return v;
}

}  // namespace detail

using detail::ordered_json;

namespace {

ordered_json image_json(const ImageRecord& img, std::string_view split) {
  ordered_json labels = ordered_json::array();
  for (const auto& l : img.labels) {
    ordered_json lj;
    lj["id"] = l.id;
    lj["bbox"] = {l.box.x(), l.box.y(), l.box.w(), l.box.h()};
    lj["class"] = l.true_class;
    labels.push_back(std::move(lj));
  }
  ordered_json j;
  j["id"] = img.id;
  j["width"] = img.width;
  j["height"] = img.height;
  j["split"] = split;
  j["labels"] = std::move(labels);
  return j;
}

}  // namespace

std::string dataset_to_json(const DatasetStore& store) {
  std::string out = "{\"classes\":" + ordered_json(store.catalog.names()).dump() + ",\n\"images\":[";
  bool first = true;
  auto emit = [&](const std::vector<ImageRecord>& images, std::string_view split) {
    for (const auto& img : images) {
      out += first ? "\n" : ",\n";
      first = false;
      out += image_json(img, split).dump();
    }
  };
  emit(store.train, "train");
  emit(store.test, "test");
  out += "\n]}\n";
  return out;
}

DatasetStore dataset_from_json(std::string_view text) {
  const nlohmann::json root = detail::parse_json(text, "dataset");
  const auto& classes = detail::require_array(root, "classes", "dataset");
  std::vector<std::string> names;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (!classes[i].is_string()) {
      throw ParseError("dataset.classes[" + std::to_string(i) + "]: expected a string");
    }
    names.push_back(classes[i].get<std::string>());
  }
  DatasetStore store;
  store.catalog = ClassCatalog(std::move(names));
  const int k = store.catalog.size();

  const auto& images = detail::require_array(root, "images", "dataset");
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::string path = "dataset.images[" + std::to_string(i) + "]";
    const auto& ij = images[i];
    ImageRecord img;
    img.id = detail::require_integer(ij, "id", path);
    img.width = detail::require_number(ij, "width", path);
    img.height = detail::require_number(ij, "height", path);
    const auto& split = detail::require(ij, "split", path);
    if (!split.is_string() || (split != "train" && split != "test")) {
      throw ParseError(path + ".split: expected \"train\" or \"test\"");
    }
    const auto& labels = detail::require_array(ij, "labels", path);
    for (std::size_t j = 0; j < labels.size(); ++j) {
      const std::string lpath = path + ".labels[" + std::to_string(j) + "]";
      const auto& lj = labels[j];
      const LabelId id = detail::require_integer(lj, "id", lpath);
      const auto& bb = detail::require_array(lj, "bbox", lpath);
      if (bb.size() != 4 || !std::all_of(bb.begin(), bb.end(),
                                         [](const auto& v) { return v.is_number(); })) {
        throw ParseError(lpath + ".bbox: expected [x, y, w, h]");
      }
      const auto cls = detail::require_integer(lj, "class", lpath);
      if (cls < 1 || cls > k) {
        throw ValidationError("label " + std::to_string(id) + " (" + lpath + "): class id " +
                              std::to_string(cls) + " outside 1.." + std::to_string(k));
      }
      try {
        BBox box(bb[0].get<double>(), bb[1].get<double>(), bb[2].get<double>(),
                 bb[3].get<double>());
        img.labels.push_back({id, box, static_cast<ClassId>(cls), static_cast<ClassId>(cls),
                              true, Provenance::kClean});
      } catch (const ValidationError& e) {
        throw ValidationError("label " + std::to_string(id) + " (" + lpath + "): " + e.what());
      }
    }
    (split == "train" ? store.train : store.test).push_back(std::move(img));
  }
  auto by_id = [](const ImageRecord& a, const ImageRecord& b) { return a.id < b.id; };
  std::sort(store.train.begin(), store.train.end(), by_id);
  std::sort(store.test.begin(), store.test.end(), by_id);
  store.validate();
  return store;
}

void save_dataset(const DatasetStore& store, const std::filesystem::path& path) {
  detail::write_text_file(path, dataset_to_json(store));
}

DatasetStore load_dataset(const std::filesystem::path& path) {
  try {
    return dataset_from_json(detail::read_text_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::string noise_to_json(const NoiseSidecar& noise) {
  ordered_json j;
  j["missed"] = noise.missed;
  ordered_json flips = ordered_json::array();
  for (const auto& [id, observed] : noise.flips) {
    ordered_json f;
    f["id"] = id;
    f["observed"] = observed;
    flips.push_back(std::move(f));
  }
  j["flips"] = std::move(flips);
  return j.dump() + "\n";
}

NoiseSidecar noise_from_json(std::string_view text) {
  const nlohmann::json root = detail::parse_json(text, "noise");
  NoiseSidecar noise;
  const auto& missed = detail::require_array(root, "missed", "noise");
  for (std::size_t i = 0; i < missed.size(); ++i) {
    if (!missed[i].is_number_integer()) {
      throw ParseError("noise.missed[" + std::to_string(i) + "]: expected an integer id");
    }
    noise.missed.push_back(missed[i].get<LabelId>());
  }
  const auto& flips = detail::require_array(root, "flips", "noise");
  for (std::size_t i = 0; i < flips.size(); ++i) {
    const std::string path = "noise.flips[" + std::to_string(i) + "]";
    noise.flips.emplace_back(detail::require_integer(flips[i], "id", path),
                             static_cast<ClassId>(detail::require_integer(flips[i], "observed", path)));
  }
  return noise;
}

void save_noise(const NoiseSidecar& noise, const std::filesystem::path& path) {
  detail::write_text_file(path, noise_to_json(noise));
}

NoiseSidecar load_noise(const std::filesystem::path& path) {
  try {
    return noise_from_json(detail::read_text_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace noisyal
