#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include "hsnas/json.hpp"

namespace hsnas {

using Rng = std::mt19937_64;

// Attribute names follow the keys of HAT's sub-transformer configs, which
// are also the keys shown to the LLM in prompts.
namespace keys {
inline constexpr std::string_view kEncoderEmbedDim = "encoder-embed-dim-subtransformer";
inline constexpr std::string_view kEncoderLayerNum = "encoder-layer-num-subtransformer";
inline constexpr std::string_view kEncoderFfnDims = "encoder-ffn-embed-dim-all-subtransformer";
inline constexpr std::string_view kEncoderSelfHeads =
    "encoder-self-attention-heads-all-subtransformer";
inline constexpr std::string_view kDecoderEmbedDim = "decoder-embed-dim-subtransformer";
inline constexpr std::string_view kDecoderLayerNum = "decoder-layer-num-subtransformer";
inline constexpr std::string_view kDecoderFfnDims = "decoder-ffn-embed-dim-all-subtransformer";
inline constexpr std::string_view kDecoderSelfHeads =
    "decoder-self-attention-heads-all-subtransformer";
inline constexpr std::string_view kDecoderCrossHeads =
    "decoder-ende-attention-heads-all-subtransformer";
inline constexpr std::string_view kDecoderArbitraryAttn =
    "decoder-arbitrary-ende-attn-all-subtransformer";
inline constexpr std::string_view kEncoderQkvDim = "encoder-qkv-dim-subtransformer";
inline constexpr std::string_view kDecoderQkvDim = "decoder-qkv-dim-subtransformer";
}  // namespace keys

struct AttributeSpec {
  std::string name;
  std::vector<int> choices;
  bool per_layer = false;
  // Name of the global attribute holding the layer count; only for per_layer.
  std::string layer_count_source;

  friend bool operator==(const AttributeSpec&, const AttributeSpec&) = default;
};

/// Ordered set of legal hyperparameter choices. Construction validates the
/// invariants (non-empty duplicate-free choices, per-layer attributes bound
/// to an existing global layer-count attribute with non-negative choices).
class SearchSpace {
 public:
  explicit SearchSpace(std::vector<AttributeSpec> attributes);

  /// HAT's encoder-decoder machine translation space.
  static SearchSpace hat_default();

  const std::vector<AttributeSpec>& attributes() const noexcept { return attributes_; }
  const AttributeSpec* find(std::string_view name) const noexcept;
  const AttributeSpec& at(std::string_view name) const;

  /// Number of distinct architectures, saturating at UINT64_MAX.
  std::uint64_t cardinality() const noexcept;

  friend bool operator==(const SearchSpace&, const SearchSpace&) = default;

 private:
  std::vector<AttributeSpec> attributes_;
};

using LayerValues = std::vector<int>;
using GeneValue = std::variant<int, LayerValues>;

struct Gene {
  std::string name;
  GeneValue value;

  friend bool operator==(const Gene&, const Gene&) = default;
};

/// A concrete assignment of hyperparameters. Genes keep the order they were
/// set in; everything produced by this library sets them in search-space
/// declaration order, which makes the JSON serialization canonical.
class Architecture {
 public:
  Architecture() = default;

  void set(std::string_view name, GeneValue value);
  bool contains(std::string_view name) const noexcept;
  const GeneValue& value(std::string_view name) const;
  int scalar(std::string_view name) const;
  const LayerValues& layers(std::string_view name) const;
  const std::vector<Gene>& genes() const noexcept { return genes_; }

  friend bool operator==(const Architecture&, const Architecture&) = default;

 private:
  std::vector<Gene> genes_;
};

struct Violation {
  std::string attribute;
  std::string message;
};

// Feature order: encoder embed dim, encoder #layers, mean encoder FFN dim,
// mean encoder self-attn heads, decoder embed dim, decoder #layers, mean
// decoder FFN dim, mean decoder self-attn heads, mean decoder cross-attn
// heads, mean arbitrary encoder-decoder attention code.
inline constexpr int kEncodingSize = 10;

template <typename Scalar>
using EncodedArchitectureT = Eigen::Matrix<Scalar, kEncodingSize, 1>;
using EncodedArchitecture = EncodedArchitectureT<double>;

namespace feature {
inline constexpr int kEncoderEmbedDim = 0;
inline constexpr int kEncoderLayers = 1;
inline constexpr int kEncoderFfn = 2;
inline constexpr int kEncoderSelfHeads = 3;
inline constexpr int kDecoderEmbedDim = 4;
inline constexpr int kDecoderLayers = 5;
inline constexpr int kDecoderFfn = 6;
inline constexpr int kDecoderSelfHeads = 7;
inline constexpr int kDecoderCrossHeads = 8;
inline constexpr int kDecoderArbitraryAttn = 9;
}  // namespace feature

/// Draws every global attribute uniformly, then every per-layer value
/// independently and uniformly for each active layer.
Architecture sample(const SearchSpace& space, Rng& rng);

/// Empty result means the architecture is valid for the space.
std::vector<Violation> validate(const SearchSpace& space, const Architecture& arch);

/// Throws PreconditionError on an invalid architecture or when the space
/// lacks one of the ten attributes the encoding is defined over. Averages
/// run over active layers only; an empty layer list averages to 0.
template <typename Scalar = double>
EncodedArchitectureT<Scalar> encode(const SearchSpace& space, const Architecture& arch);

/// Per-feature [min, max] reachable in the space.
struct FeatureBounds {
  EncodedArchitecture min;
  EncodedArchitecture max;
};
FeatureBounds feature_bounds(const SearchSpace& space);

/// Refusal to enumerate an oversized space.
class EnumerationRefused : public std::runtime_error {
 public:
  EnumerationRefused(std::uint64_t cardinality, std::uint64_t cap);
  std::uint64_t cardinality() const noexcept { return cardinality_; }

 private:
  std::uint64_t cardinality_;
};

/// Visits every architecture of the space exactly once.
///
/// Order: a mixed-radix counter whose digits are the global attributes in
/// declaration order followed by the per-layer attributes in declaration
/// order (layer 0 first). The last digit varies fastest and choices are
/// visited in their declared order.
class ArchitectureEnumerator {
 public:
  ArchitectureEnumerator(const SearchSpace& space, std::uint64_t cap);

  std::optional<Architecture> next();

 private:
  void reset_layer_digits();
  Architecture current() const;

  const SearchSpace* space_;
  std::vector<std::size_t> global_index_;            // attributes that are global
  std::vector<std::size_t> layer_index_;             // attributes that are per-layer
  std::vector<std::size_t> global_digits_;
  std::vector<std::vector<std::size_t>> layer_digits_;
  bool done_ = false;
};

std::vector<Architecture> enumerate(const SearchSpace& space, std::uint64_t cap);

// JSON ------------------------------------------------------------------------

Json to_json(const Architecture& arch);
/// Genes are reordered to the space declaration order. Unknown keys are
/// kept (appended) so validate() can report them.
Architecture architecture_from_json(const SearchSpace& space, const Json& j);
/// Compact canonical serialization, used as hashing and tie-break key.
std::string canonical_string(const Architecture& arch);

Json to_json(const SearchSpace& space);
SearchSpace search_space_from_json(const Json& j);
SearchSpace load_search_space(const std::filesystem::path& path);

}  // namespace hsnas
