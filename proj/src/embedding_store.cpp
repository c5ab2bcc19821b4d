#include "xmodal/embedding_store.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <string_view>
#include <unordered_set>

#include <json.hpp>

#include "xmodal/binary_io.hpp"
#include "xmodal/errors.hpp"

namespace xmodal {

namespace {

constexpr std::string_view kEmbeddingMagic{"EMBV1\0", 6};

std::vector<std::string> split_ids(std::string_view block) {
  std::vector<std::string> ids;
  std::size_t start = 0;
  while (true) {
    const auto end = block.find('\n', start);
    ids.emplace_back(block.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return ids;
}

std::ifstream open_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  return in;
}

std::ofstream create_text(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

nlohmann::json parse_line(const std::string& line, const std::filesystem::path& path, std::size_t line_no) {
  try {
    auto object = nlohmann::json::parse(line);
    if (!object.is_object()) throw FormatError("not a JSON object");
    return object;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
  }
}

template <typename T>
T required_field(const nlohmann::json& object, const char* key, const std::filesystem::path& path,
                 std::size_t line_no) {
  const auto it = object.find(key);
  if (it == object.end()) {
    throw FormatError(path.string() + ":" + std::to_string(line_no) + ": missing field '" + key + "'");
  }
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw FormatError(path.string() + ":" + std::to_string(line_no) + ": field '" + key + "' has the wrong type");
  }
}

bool is_blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

}  // namespace

EmbeddingSet::EmbeddingSet(std::size_t dim, std::vector<std::string> ids, std::vector<float> values)
    : dim_(dim), ids_(std::move(ids)), values_(std::move(values)) {
  if (dim_ == 0) throw ValidationError("embedding dimension must be positive");
  if (values_.size() != ids_.size() * dim_) {
    throw ValidationError("embedding payload has " + std::to_string(values_.size()) + " values, expected " +
                          std::to_string(ids_.size()) + " x " + std::to_string(dim_));
  }
  lookup_.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    const auto& id = ids_[i];
    if (id.empty()) throw ValidationError("embedding id at row " + std::to_string(i) + " is empty");
    if (id.find('\n') != std::string::npos) throw ValidationError("embedding id '" + id + "' contains a newline");
    if (!lookup_.emplace(id, i).second) throw ValidationError("duplicate embedding id '" + id + "'");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw ValidationError("non-finite value in row '" + ids_[i / dim_] + "'");
    }
  }
}

std::span<const float> EmbeddingSet::row(std::size_t index) const {
  if (index >= ids_.size()) throw ValidationError("embedding row " + std::to_string(index) + " out of range");
  return std::span<const float>(values_).subspan(index * dim_, dim_);
}

std::optional<std::size_t> EmbeddingSet::find(const std::string& id) const {
  const auto it = lookup_.find(id);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

std::size_t EmbeddingSet::index_of(const std::string& id) const {
  if (auto index = find(id)) return *index;
  throw ValidationError("unknown embedding id '" + id + "'");
}

bool operator==(const EmbeddingSet& lhs, const EmbeddingSet& rhs) {
  if (lhs.dim_ != rhs.dim_ || lhs.ids_ != rhs.ids_ || lhs.values_.size() != rhs.values_.size()) return false;
  // Bitwise comparison: the round-trip contract is bit-exact.
  for (std::size_t i = 0; i < lhs.values_.size(); ++i) {
    if (std::bit_cast<std::uint32_t>(lhs.values_[i]) != std::bit_cast<std::uint32_t>(rhs.values_[i])) return false;
  }
  return true;
}

std::vector<std::uint8_t> encode_embeddings(const EmbeddingSet& set) {
  if (set.size() > std::numeric_limits<std::uint32_t>::max() ||
      set.dim() > std::numeric_limits<std::uint32_t>::max()) {
    throw ValidationError("embedding set too large for EMBV1");
  }
  if (set.empty()) throw ValidationError("EMBV1 cannot store an empty embedding set");
  std::string id_block;
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (i != 0) id_block.push_back('\n');
    id_block += set.id(i);
  }

  binary_io::ByteWriter writer;
  writer.reserve(kEmbeddingHeaderBytes + id_block.size() + set.values().size() * 4);
  writer.put_bytes(kEmbeddingMagic);
  writer.put_u32(static_cast<std::uint32_t>(set.size()));
  writer.put_u32(static_cast<std::uint32_t>(set.dim()));
  writer.put_u64(id_block.size());
  writer.put_bytes(id_block);
  for (const float v : set.values()) writer.put_f32(v);
  return std::move(writer.bytes());
}

EmbeddingSet decode_embeddings(std::span<const std::uint8_t> bytes) {
  binary_io::ByteReader reader(bytes);
  if (reader.take_bytes(kEmbeddingMagic.size()) != kEmbeddingMagic) {
    throw FormatError("bad EMBV1 magic");
  }
  const std::uint32_t count = reader.get_u32();
  const std::uint32_t dim = reader.get_u32();
  const std::uint64_t id_bytes = reader.get_u64();
  if (count == 0) throw FormatError("EMBV1 count is zero");
  if (dim == 0) throw FormatError("EMBV1 dim is zero");
  if (id_bytes > reader.remaining()) throw FormatError("EMBV1 id block exceeds file size");

  auto ids = split_ids(reader.take_bytes(static_cast<std::size_t>(id_bytes)));
  if (ids.size() != count) {
    throw FormatError("EMBV1 id block holds " + std::to_string(ids.size()) + " ids, header says " +
                      std::to_string(count));
  }
  const std::size_t n_values = static_cast<std::size_t>(count) * dim;
  if (reader.remaining() != n_values * 4) {
    throw FormatError("EMBV1 payload is " + std::to_string(reader.remaining()) + " bytes, expected " +
                      std::to_string(n_values * 4));
  }
  std::vector<float> values(n_values);
  for (auto& v : values) v = reader.get_f32();
  return EmbeddingSet(dim, std::move(ids), std::move(values));
}

EmbeddingSet load_embeddings(const std::filesystem::path& path) {
  const auto bytes = binary_io::read_file(path);
  try {
    return decode_embeddings(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& path) {
  binary_io::write_file(path, encode_embeddings(set));
}

std::size_t PairDataset::positive_count() const {
  std::size_t n = 0;
  for (const auto& ex : examples) n += ex.label == 1 ? 1 : 0;
  return n;
}

void PairDataset::check_ids(const EmbeddingSet& anchors, const EmbeddingSet& candidates) const {
  for (const auto& ex : examples) {
    if (!anchors.find(ex.anchor_id)) throw ValidationError("anchor id '" + ex.anchor_id + "' not in modality-A set");
    if (!candidates.find(ex.candidate_id)) {
      throw ValidationError("candidate id '" + ex.candidate_id + "' not in modality-B set");
    }
  }
}

std::vector<PairExample> load_pairs(const std::filesystem::path& path) {
  auto in = open_text(path);
  std::vector<PairExample> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    const auto object = parse_line(line, path, line_no);
    PairExample ex;
    ex.anchor_id = required_field<std::string>(object, "anchor_id", path, line_no);
    ex.candidate_id = required_field<std::string>(object, "candidate_id", path, line_no);
    ex.label = required_field<int>(object, "label", path, line_no);
    if (ex.label != 0 && ex.label != 1) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": label must be 0 or 1");
    }
    pairs.push_back(std::move(ex));
  }
  return pairs;
}

void save_pairs(const std::vector<PairExample>& pairs, const std::filesystem::path& path) {
  auto out = create_text(path);
  for (const auto& ex : pairs) {
    nlohmann::ordered_json line;
    line["anchor_id"] = ex.anchor_id;
    line["candidate_id"] = ex.candidate_id;
    line["label"] = ex.label;
    out << line.dump() << '\n';
  }
  if (!out.flush()) throw IoError("write failed on " + path.string());
}

std::map<std::string, std::string> load_texts(const std::filesystem::path& path) {
  auto in = open_text(path);
  std::map<std::string, std::string> texts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    const auto object = parse_line(line, path, line_no);
    auto id = required_field<std::string>(object, "id", path, line_no);
    auto text = required_field<std::string>(object, "text", path, line_no);
    if (!texts.emplace(std::move(id), std::move(text)).second) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": duplicate text id");
    }
  }
  return texts;
}

void save_texts(const std::map<std::string, std::string>& texts, const std::filesystem::path& path) {
  auto out = create_text(path);
  for (const auto& [id, text] : texts) {
    nlohmann::ordered_json line;
    line["id"] = id;
    line["text"] = text;
    out << line.dump() << '\n';
  }
  if (!out.flush()) throw IoError("write failed on " + path.string());
}

DatasetSplit split_holdout(const PairDataset& data, std::size_t holdout_anchors) {
  if (holdout_anchors == 0) return {data, data};

  std::vector<std::string> anchor_order;
  std::unordered_set<std::string> seen;
  for (const auto& ex : data.examples) {
    if (seen.insert(ex.anchor_id).second) anchor_order.push_back(ex.anchor_id);
  }
  if (holdout_anchors >= anchor_order.size()) {
    throw ValidationError("hold-out of " + std::to_string(holdout_anchors) + " anchors leaves no training data (" +
                          std::to_string(anchor_order.size()) + " anchors)");
  }

  std::unordered_set<std::string> held_anchors(anchor_order.end() - static_cast<std::ptrdiff_t>(holdout_anchors),
                                               anchor_order.end());
  std::unordered_set<std::string> held_candidates;
  for (const auto& ex : data.examples) {
    if (ex.label == 1 && held_anchors.count(ex.anchor_id)) held_candidates.insert(ex.candidate_id);
  }

  DatasetSplit split;
  split.train.raw_texts = data.raw_texts;
  split.test.raw_texts = data.raw_texts;
  for (const auto& ex : data.examples) {
    const bool held_anchor = held_anchors.count(ex.anchor_id) != 0;
    const bool held_candidate = held_candidates.count(ex.candidate_id) != 0;
    if (held_anchor) {
      split.test.examples.push_back(ex);
    } else if (!held_candidate) {
      split.train.examples.push_back(ex);
    }
  }
  return split;
}

}  // namespace xmodal
