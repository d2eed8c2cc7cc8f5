#include <cstring>

#include <fmt/format.h>

#include "noisyal/errors.h"
#include "noisyal/harness.h"
#include "noisyal/json_util.h"

namespace noisyal {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'N', 'A', 'L', 'S', 'T', 'A', 'T', 'E'};

Provenance parse_provenance(std::string_view s) {
  for (auto p : {Provenance::kClean, Provenance::kFlipped, Provenance::kMissed,
                 Provenance::kRestored, Provenance::kReviewCorrupted}) {
    if (to_string(p) == s) return p;
  }
  throw ParseError(fmt::format("state: unknown provenance '{}'", s));
}

json image_to_json(const ImageRecord& image) {
  json labels = json::array();
  for (const auto& l : image.labels) {
    labels.push_back({{"id", l.id},
                      {"bbox", {l.box.x(), l.box.y(), l.box.w(), l.box.h()}},
                      {"true_class", l.true_class},
                      {"observed_class", l.observed_class},
                      {"present", l.present},
                      {"provenance", to_string(l.provenance)}});
  }
  return {{"id", image.id},
          {"width", image.width},
          {"height", image.height},
          {"active", image.pool_state == PoolState::kActive},
          {"labels", std::move(labels)}};
}

ImageRecord image_from_json(const json& j) {
  ImageRecord image;
  image.id = j.at("id").get<ImageId>();
  image.width = j.at("width").get<double>();
  image.height = j.at("height").get<double>();
  image.pool_state = j.at("active").get<bool>() ? PoolState::kActive : PoolState::kUnlabeled;
  for (const auto& lj : j.at("labels")) {
    const auto& b = lj.at("bbox");
    LabelRecord l;
    l.id = lj.at("id").get<LabelId>();
    l.box = BBox(b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(),
                 b.at(3).get<double>());
    l.true_class = lj.at("true_class").get<ClassId>();
    l.observed_class = lj.at("observed_class").get<ClassId>();
    l.present = lj.at("present").get<bool>();
    l.provenance = parse_provenance(lj.at("provenance").get<std::string>());
    image.labels.push_back(l);
  }
  return image;
}

json optional_to_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

json metrics_to_json(const CycleMetrics& m) {
  return {{"cycle", m.cycle},
          {"budget_total", m.budget_total},
          {"boxes_labeled", m.boxes_labeled},
          {"reviews_miss", m.reviews_miss},
          {"reviews_flip", m.reviews_flip},
          {"map", m.map},
          {"precision_miss", optional_to_json(m.precision_miss)},
          {"precision_flip", optional_to_json(m.precision_flip)},
          {"active_images", m.active_images},
          {"active_boxes", m.active_boxes},
          {"active_error_fraction", m.active_error_fraction},
          {"skill", m.skill},
          {"forfeited_miss", m.forfeited_miss},
          {"forfeited_flip", m.forfeited_flip},
          {"pool_exhausted", m.pool_exhausted},
          {"base_rate_miss", optional_to_json(m.base_rate_miss)},
          {"base_rate_flip", optional_to_json(m.base_rate_flip)}};
}

CycleMetrics metrics_from_json(const json& j) {
  CycleMetrics m;
  m.cycle = j.at("cycle").get<int>();
  m.budget_total = j.at("budget_total").get<long>();
  m.boxes_labeled = j.at("boxes_labeled").get<int>();
  m.reviews_miss = j.at("reviews_miss").get<int>();
  m.reviews_flip = j.at("reviews_flip").get<int>();
  m.map = j.at("map").get<double>();
  m.precision_miss = optional_from_json(j.at("precision_miss"));
  m.precision_flip = optional_from_json(j.at("precision_flip"));
  m.active_images = j.at("active_images").get<int>();
  m.active_boxes = j.at("active_boxes").get<long>();
  m.active_error_fraction = j.at("active_error_fraction").get<double>();
  m.skill = j.at("skill").get<double>();
  m.forfeited_miss = j.at("forfeited_miss").get<int>();
  m.forfeited_flip = j.at("forfeited_flip").get<int>();
  m.pool_exhausted = j.at("pool_exhausted").get<bool>();
  m.base_rate_miss = optional_from_json(j.at("base_rate_miss"));
  m.base_rate_flip = optional_from_json(j.at("base_rate_flip"));
  return m;
}

json ledger_to_json(const BudgetLedger& l) {
  return {{"budget", l.budget},
          {"lambda", l.lambda},
          {"alpha", l.alpha},
          {"carry_in", l.carry_in},
          {"spent_query", l.spent_query},
          {"spent_review_miss", l.spent_review_miss},
          {"spent_review_flip", l.spent_review_flip}};
}

BudgetLedger ledger_from_json(const json& j) {
  BudgetLedger l;
  l.budget = j.at("budget").get<int>();
  l.lambda = j.at("lambda").get<double>();
  l.alpha = j.at("alpha").get<double>();
  l.carry_in = j.at("carry_in").get<int>();
  l.spent_query = j.at("spent_query").get<int>();
  l.spent_review_miss = j.at("spent_review_miss").get<int>();
  l.spent_review_flip = j.at("spent_review_flip").get<int>();
  return l;
}

}  // namespace

std::string serialize_state(const RunState& state) {
  json train = json::array();
  for (const auto& image : state.store.train) train.push_back(image_to_json(image));
  json test = json::array();
  for (const auto& image : state.store.test) test.push_back(image_to_json(image));
  json ledgers = json::array();
  for (const auto& l : state.ledgers) ledgers.push_back(ledger_to_json(l));
  json metrics = json::array();
  for (const auto& m : state.metrics) metrics.push_back(metrics_to_json(m));

  const json payload = {{"version", kStateVersion},
                        {"config", config_to_json(state.config)},
                        {"cycle", state.cycle},
                        {"classes", state.store.catalog.names()},
                        {"train", std::move(train)},
                        {"test", std::move(test)},
                        {"initial_boxes", state.initial_boxes},
                        {"budget_total", state.budget_total},
                        {"carry", state.carry},
                        {"ledgers", std::move(ledgers)},
                        {"metrics", std::move(metrics)},
                        {"audit_bytes", state.audit_bytes}};
  const auto cbor = json::to_cbor(payload);

  std::string out(kMagic, sizeof kMagic);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((kStateVersion >> (8 * i)) & 0xff));
  out.append(reinterpret_cast<const char*>(cbor.data()), cbor.size());
  return out;
}

RunState deserialize_state(std::string_view bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw ParseError("state: not a checkpoint file");
  }
  std::uint32_t version = 0;
  for (int i = 0; i < 4; ++i) {
    version |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[8 + i])) << (8 * i);
  }
  if (version != kStateVersion) {
    throw ParseError(fmt::format("state: unsupported format version {}", version));
  }
  try {
    const json j = json::from_cbor(bytes.substr(12));
    RunState state;
    state.config = config_from_json(j.at("config").get<std::string>());
    state.cycle = j.at("cycle").get<int>();
    state.store.catalog = ClassCatalog(j.at("classes").get<std::vector<std::string>>());
    for (const auto& ij : j.at("train")) state.store.train.push_back(image_from_json(ij));
    for (const auto& ij : j.at("test")) state.store.test.push_back(image_from_json(ij));
    state.initial_boxes = j.at("initial_boxes").get<long>();
    state.budget_total = j.at("budget_total").get<long>();
    state.carry = j.at("carry").get<int>();
    for (const auto& lj : j.at("ledgers")) state.ledgers.push_back(ledger_from_json(lj));
    for (const auto& mj : j.at("metrics")) state.metrics.push_back(metrics_from_json(mj));
    state.audit_bytes = j.at("audit_bytes").get<std::uint64_t>();
    state.store.validate();
    return state;
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("state: {}", e.what()));
  }
}

void save_state(const RunState& state, const std::filesystem::path& path) {
  detail::write_text_file(path, serialize_state(state));
}

RunState load_state(const std::filesystem::path& path) {
  try {
    return deserialize_state(detail::read_text_file(path));
  } catch (const ParseError& e) {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

}  // namespace noisyal
