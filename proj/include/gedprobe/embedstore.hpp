#pragma once

// Binary store of per-layer, per-subword hidden states.
//
// Layout (little-endian):
//   "GEDE" | version u32 = 1 | flags u32 (bit0: layer 0 stored) | L u16 | d u16
//   | sentence_count u64 | model_name (u16 length + UTF-8)
//   | index: per sentence { id (u16 length + UTF-8), W u16, S u16,
//                           alignment S x i16, payload_offset u64 }
//   | payload: per sentence, layers ascending, subwords ascending, d x f32
//
// payload_offset is an absolute file offset; payloads are contiguous and
// appear in index order.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gedprobe/annotated.hpp"
#include "gedprobe/error.hpp"

namespace gedprobe {

inline constexpr std::uint32_t kStoreVersion = 1;
inline constexpr std::uint32_t kFlagEmbeddingLayer = 1U;

class FormatError : public IntegrityError {
 public:
  using IntegrityError::IntegrityError;
};

struct StoreSentence {
  std::string id;
  std::size_t word_count = 0;
  std::vector<std::int16_t> alignment;  // subword -> word, -1 for special tokens
  std::uint64_t payload_offset = 0;

  std::size_t subword_count() const { return alignment.size(); }
};

/// Vectors of one sentence at one layer, one row per word.
struct WordMatrix {
  std::string sentence_id;
  int layer = 0;
  std::size_t dim = 0;
  std::vector<float> data;  // rows x dim

  std::size_t rows() const { return dim == 0 ? 0 : data.size() / dim; }
  std::span<const float> row(std::size_t i) const { return {data.data() + i * dim, dim}; }
};

class EmbeddingStore {
 public:
  class Buffer;

  /// Memory-maps and validates a store file.
  static EmbeddingStore open(const std::filesystem::path& path);
  /// Validates an in-memory store image.
  static EmbeddingStore from_bytes(std::vector<std::byte> bytes);

  const std::string& model_name() const { return model_name_; }
  int num_layers() const { return layers_; }
  std::size_t hidden_dim() const { return dim_; }
  bool includes_embedding_layer() const { return (flags_ & kFlagEmbeddingLayer) != 0; }
  int first_layer() const { return includes_embedding_layer() ? 0 : 1; }

  std::span<const StoreSentence> sentences() const { return index_; }
  const StoreSentence* find(std::string_view id) const;

  /// Raw store image, byte-identical to the file it came from.
  std::span<const std::byte> bytes() const;

  /// Subword vector `subword` of `s` at `layer`, copied out of the payload.
  void copy_subword(const StoreSentence& s, int layer, std::size_t subword, std::span<float> out) const;

 private:
  explicit EmbeddingStore(std::shared_ptr<const Buffer> buffer);
  void parse();

  std::shared_ptr<const Buffer> buffer_;
  std::string model_name_;
  std::uint32_t flags_ = 0;
  int layers_ = 0;
  std::size_t dim_ = 0;
  std::vector<StoreSentence> index_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

EmbeddingStore read_store(const std::filesystem::path& path);
void write_store(const EmbeddingStore& store, const std::filesystem::path& path);

/// Row i is the vector of the last subword aligned to word i.
/// Throws DataError for an unknown sentence and std::out_of_range for a bad layer.
WordMatrix word_vectors(const EmbeddingStore& store, std::string_view sentence_id, int layer);

/// Builds a store image sentence by sentence.
class StoreBuilder {
 public:
  StoreBuilder(std::string model_name, int layers, std::size_t dim, bool include_embedding_layer = false);

  /// `vectors` holds stored_layers x alignment.size() x dim floats.
  void add_sentence(std::string id, std::size_t word_count, std::vector<std::int16_t> alignment,
                    std::span<const float> vectors);

  int stored_layers() const { return layers_ + (include_layer0_ ? 1 : 0); }

  std::vector<std::byte> finish() const;
  EmbeddingStore build() const { return EmbeddingStore::from_bytes(finish()); }

 private:
  struct Pending {
    std::string id;
    std::size_t word_count;
    std::vector<std::int16_t> alignment;
    std::vector<float> vectors;
  };
  std::string model_name_;
  int layers_;
  std::size_t dim_;
  bool include_layer0_;
  std::vector<Pending> sentences_;
};

/// Throws IntegrityError unless every value is in {-1, 0..W-1} and every word is covered.
void validate_alignment(std::string_view id, std::size_t word_count, std::span<const std::int16_t> alignment);

enum class SyntheticSignal { LinearSeparable, Random };

struct SynthesisOptions {
  std::size_t dim = 32;
  int layers = 12;
  SyntheticSignal signal = SyntheticSignal::LinearSeparable;
  double mean_offset = 1.0;   // error tokens at +offset on the first axis, OK tokens at -offset
  double noise_sigma = 0.1;   // Random mode uses unit variance when this is 0
  std::uint64_t seed = 0;
  std::string model_name = "synthetic";
};

/// One subword per word; every layer carries the same vectors.
EmbeddingStore synthesize_store(std::span<const AnnotatedSentence> sentences, const SynthesisOptions& options);

}  // namespace gedprobe
