#include "hsnas/space.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "hsnas/error.hpp"

namespace hsnas {

namespace {

std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

std::uint64_t saturating_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a) {
    return std::numeric_limits<std::uint64_t>::max();
  }
  return a * b;
}

std::uint64_t saturating_add(std::uint64_t a, std::uint64_t b) {
  if (b > std::numeric_limits<std::uint64_t>::max() - a) {
    return std::numeric_limits<std::uint64_t>::max();
  }
  return a + b;
}

std::uint64_t saturating_pow(std::uint64_t base, int exponent) {
  std::uint64_t result = 1;
  for (int i = 0; i < exponent; ++i) result = saturating_mul(result, base);
  return result;
}

bool contains_choice(const AttributeSpec& spec, int v) {
  return std::find(spec.choices.begin(), spec.choices.end(), v) != spec.choices.end();
}

AttributeSpec global_attr(std::string_view name, std::vector<int> choices) {
  return {std::string(name), std::move(choices), false, {}};
}

AttributeSpec layer_attr(std::string_view name, std::vector<int> choices,
                         std::string_view source) {
  return {std::string(name), std::move(choices), true, std::string(source)};
}

}  // namespace

// SearchSpace -----------------------------------------------------------------

SearchSpace::SearchSpace(std::vector<AttributeSpec> attributes)
    : attributes_(std::move(attributes)) {
  std::set<std::string> names;
  for (const auto& a : attributes_) {
    if (a.name.empty()) throw ConfigError("search space attribute with empty name");
    if (!names.insert(a.name).second) {
      throw ConfigError(fmt::format("duplicate attribute '{}'", a.name));
    }
    if (a.choices.empty()) {
      throw ConfigError(fmt::format("attribute '{}' has no choices", a.name));
    }
    std::set<int> unique(a.choices.begin(), a.choices.end());
    if (unique.size() != a.choices.size()) {
      throw ConfigError(fmt::format("attribute '{}' has duplicate choices", a.name));
    }
  }
  for (const auto& a : attributes_) {
    if (!a.per_layer) continue;
    const AttributeSpec* source = find(a.layer_count_source);
    if (source == nullptr || source->per_layer) {
      throw ConfigError(fmt::format(
          "per-layer attribute '{}' needs a global layer_count_source, got '{}'", a.name,
          a.layer_count_source));
    }
    if (*std::min_element(source->choices.begin(), source->choices.end()) < 0) {
      throw ConfigError(fmt::format("layer count attribute '{}' has negative choices",
                                    source->name));
    }
  }
}

SearchSpace SearchSpace::hat_default() {
  using namespace keys;
  return SearchSpace({
      global_attr(kEncoderEmbedDim, {512, 640}),
      global_attr(kEncoderLayerNum, {6}),
      layer_attr(kEncoderFfnDims, {1024, 2048, 3072}, kEncoderLayerNum),
      layer_attr(kEncoderSelfHeads, {4, 8}, kEncoderLayerNum),
      global_attr(kDecoderEmbedDim, {512, 640}),
      global_attr(kDecoderLayerNum, {1, 2, 3, 4, 5, 6}),
      layer_attr(kDecoderFfnDims, {1024, 2048, 3072}, kDecoderLayerNum),
      layer_attr(kDecoderSelfHeads, {4, 8}, kDecoderLayerNum),
      layer_attr(kDecoderCrossHeads, {4, 8}, kDecoderLayerNum),
      layer_attr(kDecoderArbitraryAttn, {-1, 1, 2}, kDecoderLayerNum),
      global_attr(kEncoderQkvDim, {512}),
      global_attr(kDecoderQkvDim, {512}),
  });
}

const AttributeSpec* SearchSpace::find(std::string_view name) const noexcept {
  auto it = std::find_if(attributes_.begin(), attributes_.end(),
                         [&](const AttributeSpec& a) { return a.name == name; });
  return it == attributes_.end() ? nullptr : &*it;
}

const AttributeSpec& SearchSpace::at(std::string_view name) const {
  const AttributeSpec* a = find(name);
  if (a == nullptr) {
    throw PreconditionError(fmt::format("search space has no attribute '{}'", name));
  }
  return *a;
}

std::uint64_t SearchSpace::cardinality() const noexcept {
  // Layer-count attributes contribute sum_v prod_{bound attrs} |choices|^v;
  // every other global attribute contributes |choices|.
  std::uint64_t total = 1;
  for (const auto& a : attributes_) {
    if (a.per_layer) continue;
    std::vector<const AttributeSpec*> bound;
    for (const auto& b : attributes_) {
      if (b.per_layer && b.layer_count_source == a.name) bound.push_back(&b);
    }
    if (bound.empty()) {
      total = saturating_mul(total, a.choices.size());
      continue;
    }
    std::uint64_t factor = 0;
    for (int layers : a.choices) {
      std::uint64_t term = 1;
      for (const auto* b : bound) term = saturating_mul(term, saturating_pow(b->choices.size(), layers));
      factor = saturating_add(factor, term);
    }
    total = saturating_mul(total, factor);
  }
  return total;
}

// Architecture ----------------------------------------------------------------

void Architecture::set(std::string_view name, GeneValue value) {
  for (auto& g : genes_) {
    if (g.name == name) {
      g.value = std::move(value);
      return;
    }
  }
  genes_.push_back({std::string(name), std::move(value)});
}

bool Architecture::contains(std::string_view name) const noexcept {
  return std::any_of(genes_.begin(), genes_.end(),
                     [&](const Gene& g) { return g.name == name; });
}

const GeneValue& Architecture::value(std::string_view name) const {
  for (const auto& g : genes_) {
    if (g.name == name) return g.value;
  }
  throw PreconditionError(fmt::format("architecture has no attribute '{}'", name));
}

int Architecture::scalar(std::string_view name) const {
  const auto* v = std::get_if<int>(&value(name));
  if (v == nullptr) {
    throw PreconditionError(fmt::format("attribute '{}' is per-layer, not scalar", name));
  }
  return *v;
}

const LayerValues& Architecture::layers(std::string_view name) const {
  const auto* v = std::get_if<LayerValues>(&value(name));
  if (v == nullptr) {
    throw PreconditionError(fmt::format("attribute '{}' is scalar, not per-layer", name));
  }
  return *v;
}

// Sampling / validation -------------------------------------------------------

Architecture sample(const SearchSpace& space, Rng& rng) {
  // Globals are drawn before per-layer lists so layer counts are known; the
  // genes are still stored in declaration order.
  std::vector<GeneValue> drawn(space.attributes().size());
  const auto& attrs = space.attributes();
  for (std::size_t i = 0; i < attrs.size(); ++i) {
    if (!attrs[i].per_layer) {
      drawn[i] = attrs[i].choices[uniform_index(rng, attrs[i].choices.size())];
    }
  }
  Architecture globals_only;
  for (std::size_t i = 0; i < attrs.size(); ++i) {
    if (!attrs[i].per_layer) globals_only.set(attrs[i].name, drawn[i]);
  }
  for (std::size_t i = 0; i < attrs.size(); ++i) {
    if (!attrs[i].per_layer) continue;
    const int count = globals_only.scalar(attrs[i].layer_count_source);
    LayerValues values(static_cast<std::size_t>(count));
    for (auto& v : values) v = attrs[i].choices[uniform_index(rng, attrs[i].choices.size())];
    drawn[i] = std::move(values);
  }
  Architecture arch;
  for (std::size_t i = 0; i < attrs.size(); ++i) arch.set(attrs[i].name, std::move(drawn[i]));
  return arch;
}

std::vector<Violation> validate(const SearchSpace& space, const Architecture& arch) {
  std::vector<Violation> out;
  for (const auto& gene : arch.genes()) {
    if (space.find(gene.name) == nullptr) {
      out.push_back({gene.name, "unknown attribute"});
    }
  }
  for (const auto& spec : space.attributes()) {
    if (!arch.contains(spec.name)) {
      out.push_back({spec.name, "missing"});
      continue;
    }
    const GeneValue& value = arch.value(spec.name);
    if (!spec.per_layer) {
      const int* v = std::get_if<int>(&value);
      if (v == nullptr) {
        out.push_back({spec.name, "expected a scalar value"});
      } else if (!contains_choice(spec, *v)) {
        out.push_back({spec.name, fmt::format("value {} not among choices", *v)});
      }
      continue;
    }
    const auto* list = std::get_if<LayerValues>(&value);
    if (list == nullptr) {
      out.push_back({spec.name, "expected a per-layer list"});
      continue;
    }
    if (arch.contains(spec.layer_count_source)) {
      if (const int* count = std::get_if<int>(&arch.value(spec.layer_count_source));
          count != nullptr && static_cast<std::size_t>(std::max(*count, 0)) != list->size()) {
        out.push_back({spec.name, fmt::format("list length {} does not match {} = {}",
                                              list->size(), spec.layer_count_source, *count)});
      }
    }
    for (int v : *list) {
      if (!contains_choice(spec, v)) {
        out.push_back({spec.name, fmt::format("layer value {} not among choices", v)});
        break;
      }
    }
  }
  return out;
}

// Encoding --------------------------------------------------------------------

namespace {

double mean_of(const LayerValues& values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

}  // namespace

template <typename Scalar>
EncodedArchitectureT<Scalar> encode(const SearchSpace& space, const Architecture& arch) {
  if (auto violations = validate(space, arch); !violations.empty()) {
    throw PreconditionError(fmt::format("cannot encode invalid architecture: {} {}",
                                        violations.front().attribute,
                                        violations.front().message));
  }
  using namespace keys;
  EncodedArchitectureT<Scalar> e;
  e[feature::kEncoderEmbedDim] = static_cast<Scalar>(arch.scalar(kEncoderEmbedDim));
  e[feature::kEncoderLayers] = static_cast<Scalar>(arch.scalar(kEncoderLayerNum));
  e[feature::kEncoderFfn] = static_cast<Scalar>(mean_of(arch.layers(kEncoderFfnDims)));
  e[feature::kEncoderSelfHeads] = static_cast<Scalar>(mean_of(arch.layers(kEncoderSelfHeads)));
  e[feature::kDecoderEmbedDim] = static_cast<Scalar>(arch.scalar(kDecoderEmbedDim));
  e[feature::kDecoderLayers] = static_cast<Scalar>(arch.scalar(kDecoderLayerNum));
  e[feature::kDecoderFfn] = static_cast<Scalar>(mean_of(arch.layers(kDecoderFfnDims)));
  e[feature::kDecoderSelfHeads] = static_cast<Scalar>(mean_of(arch.layers(kDecoderSelfHeads)));
  e[feature::kDecoderCrossHeads] = static_cast<Scalar>(mean_of(arch.layers(kDecoderCrossHeads)));
  e[feature::kDecoderArbitraryAttn] =
      static_cast<Scalar>(mean_of(arch.layers(kDecoderArbitraryAttn)));
  return e;
}

template EncodedArchitectureT<double> encode<double>(const SearchSpace&, const Architecture&);
template EncodedArchitectureT<float> encode<float>(const SearchSpace&, const Architecture&);

FeatureBounds feature_bounds(const SearchSpace& space) {
  using namespace keys;
  static constexpr std::string_view kFeatureKeys[kEncodingSize] = {
      kEncoderEmbedDim, kEncoderLayerNum, kEncoderFfnDims,    kEncoderSelfHeads,
      kDecoderEmbedDim, kDecoderLayerNum, kDecoderFfnDims,    kDecoderSelfHeads,
      kDecoderCrossHeads, kDecoderArbitraryAttn};
  FeatureBounds b{EncodedArchitecture::Zero(), EncodedArchitecture::Zero()};
  for (int i = 0; i < kEncodingSize; ++i) {
    const auto& choices = space.at(kFeatureKeys[i]).choices;
    b.min[i] = *std::min_element(choices.begin(), choices.end());
    b.max[i] = *std::max_element(choices.begin(), choices.end());
  }
  return b;
}

// Enumeration -----------------------------------------------------------------

EnumerationRefused::EnumerationRefused(std::uint64_t cardinality, std::uint64_t cap)
    : std::runtime_error(fmt::format(
          "search space has {} architectures, over the enumeration cap of {}",
          cardinality, cap)),
      cardinality_(cardinality) {}

ArchitectureEnumerator::ArchitectureEnumerator(const SearchSpace& space, std::uint64_t cap)
    : space_(&space) {
  if (const auto n = space.cardinality(); n > cap) throw EnumerationRefused(n, cap);
  const auto& attrs = space.attributes();
  for (std::size_t i = 0; i < attrs.size(); ++i) {
    (attrs[i].per_layer ? layer_index_ : global_index_).push_back(i);
  }
  global_digits_.assign(global_index_.size(), 0);
  reset_layer_digits();
}

void ArchitectureEnumerator::reset_layer_digits() {
  const auto& attrs = space_->attributes();
  layer_digits_.clear();
  for (std::size_t idx : layer_index_) {
    const auto& source = attrs[idx].layer_count_source;
    int count = 0;
    for (std::size_t g = 0; g < global_index_.size(); ++g) {
      const auto& spec = attrs[global_index_[g]];
      if (spec.name == source) count = spec.choices[global_digits_[g]];
    }
    layer_digits_.emplace_back(static_cast<std::size_t>(count), 0);
  }
}

Architecture ArchitectureEnumerator::current() const {
  const auto& attrs = space_->attributes();
  std::vector<GeneValue> values(attrs.size());
  for (std::size_t g = 0; g < global_index_.size(); ++g) {
    values[global_index_[g]] = attrs[global_index_[g]].choices[global_digits_[g]];
  }
  for (std::size_t l = 0; l < layer_index_.size(); ++l) {
    const auto& spec = attrs[layer_index_[l]];
    LayerValues list;
    list.reserve(layer_digits_[l].size());
    for (std::size_t d : layer_digits_[l]) list.push_back(spec.choices[d]);
    values[layer_index_[l]] = std::move(list);
  }
  Architecture arch;
  for (std::size_t i = 0; i < attrs.size(); ++i) arch.set(attrs[i].name, std::move(values[i]));
  return arch;
}

std::optional<Architecture> ArchitectureEnumerator::next() {
  if (done_) return std::nullopt;
  Architecture out = current();

  // Advance: per-layer digits are the least significant.
  const auto& attrs = space_->attributes();
  for (std::size_t l = layer_index_.size(); l-- > 0;) {
    auto& digits = layer_digits_[l];
    const std::size_t radix = attrs[layer_index_[l]].choices.size();
    for (std::size_t d = digits.size(); d-- > 0;) {
      if (++digits[d] < radix) return out;
      digits[d] = 0;
    }
  }
  for (std::size_t g = global_index_.size(); g-- > 0;) {
    if (++global_digits_[g] < attrs[global_index_[g]].choices.size()) {
      reset_layer_digits();
      return out;
    }
    global_digits_[g] = 0;
  }
  done_ = true;
  return out;
}

std::vector<Architecture> enumerate(const SearchSpace& space, std::uint64_t cap) {
  ArchitectureEnumerator it(space, cap);
  std::vector<Architecture> out;
  out.reserve(static_cast<std::size_t>(space.cardinality()));
  while (auto arch = it.next()) out.push_back(std::move(*arch));
  return out;
}

// JSON ------------------------------------------------------------------------

Json to_json(const Architecture& arch) {
  Json j = Json::object();
  for (const auto& g : arch.genes()) {
    std::visit([&](const auto& v) { j[g.name] = v; }, g.value);
  }
  return j;
}

std::string canonical_string(const Architecture& arch) { return to_json(arch).dump(); }

Architecture architecture_from_json(const SearchSpace& space, const Json& j) {
  if (!j.is_object()) throw InputError("architecture must be a JSON object");
  auto read_value = [](const std::string& key, const Json& v) -> GeneValue {
    if (v.is_number_integer()) return v.get<int>();
    if (v.is_array()) {
      LayerValues list;
      for (const auto& x : v) {
        if (!x.is_number_integer()) {
          throw InputError(fmt::format("attribute '{}' has a non-integer layer value", key));
        }
        list.push_back(x.get<int>());
      }
      return list;
    }
    throw InputError(fmt::format("attribute '{}' must be an integer or an integer list", key));
  };
  Architecture arch;
  for (const auto& spec : space.attributes()) {
    if (auto it = j.find(spec.name); it != j.end()) arch.set(spec.name, read_value(spec.name, *it));
  }
  for (const auto& [key, value] : j.items()) {
    if (space.find(key) == nullptr) arch.set(key, read_value(key, value));
  }
  return arch;
}

Json to_json(const SearchSpace& space) {
  Json attrs = Json::array();
  for (const auto& a : space.attributes()) {
    Json j{{"name", a.name}, {"choices", a.choices}, {"per_layer", a.per_layer}};
    if (a.per_layer) j["layer_count_source"] = a.layer_count_source;
    attrs.push_back(std::move(j));
  }
  return {{"attributes", std::move(attrs)}};
}

SearchSpace search_space_from_json(const Json& j) {
  try {
    std::vector<AttributeSpec> attrs;
    for (const auto& a : j.at("attributes")) {
      AttributeSpec spec;
      spec.name = a.at("name").get<std::string>();
      spec.choices = a.at("choices").get<std::vector<int>>();
      spec.per_layer = a.value("per_layer", false);
      if (spec.per_layer) spec.layer_count_source = a.at("layer_count_source").get<std::string>();
      attrs.push_back(std::move(spec));
    }
    return SearchSpace(std::move(attrs));
  } catch (const Json::exception& e) {
    throw ConfigError(fmt::format("malformed search space: {}", e.what()));
  }
}

SearchSpace load_search_space(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open search space file {}", path.string()));
  try {
    return search_space_from_json(Json::parse(in));
  } catch (const Json::parse_error& e) {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

}  // namespace hsnas
